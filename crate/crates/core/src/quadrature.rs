//! Applying lattice rules to integrands.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{residue, shifted_coordinate, LatticeRule, RealShift};
use crate::scalar::Real;

type EvalFn<T> = dyn Fn(&[T]) -> T + Send + Sync;

/// A function on `[0, 1)^s`, optionally with its exact integral.
#[derive(Clone)]
pub struct Integrand<T> {
    dim: usize,
    eval: Arc<EvalFn<T>>,
    exact: Option<T>,
    name: String,
}

impl<T> fmt::Debug for Integrand<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl<T: Real> Integrand<T> {
    pub fn new(name: impl Into<String>, dim: usize, exact: Option<T>, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { dim, eval: Arc::new(f), exact, name: name.into() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exact(&self) -> Option<T> {
        self.exact
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[T]) -> T {
        (self.eval)(x)
    }

    /// `f(x) = c`.
    pub fn constant(dim: usize, c: T) -> Self {
        Self::new("const", dim, Some(c), move |_| c)
    }

    /// `f(x) = prod_j x_j`, integral `2^{-s}`.
    pub fn product(dim: usize) -> Self {
        let exact = T::from_ratio(1, 1i64 << dim.min(62));
        Self::new("prod", dim, Some(exact), |x| x.iter().fold(T::one(), |p, &v| p * v))
    }

    /// `f(x) = prod_j (1 + c_j (x_j - 1/2))`, integral 1.
    pub fn affine_product(coeffs: Vec<T>) -> Self {
        let dim = coeffs.len();
        let half = T::from_ratio(1, 2);
        Self::new("affine", dim, Some(T::one()), move |x| {
            x.iter().zip(&coeffs).fold(T::one(), |p, (&v, &c)| p * (T::one() + c * (v - half)))
        })
    }

    /// `f(x) = sum_j a_j x_j^2`, integral `sum_j a_j / 3`.
    pub fn weighted_quadratic(coeffs: Vec<T>) -> Self {
        let dim = coeffs.len();
        let exact = coeffs.iter().fold(T::zero(), |s, &a| s + a) / T::from_count(3);
        Self::new("quad", dim, Some(exact), move |x| {
            x.iter().zip(&coeffs).fold(T::zero(), |s, (&v, &a)| s + a * v * v)
        })
    }

    /// Built-in integrand by name: `const`, `prod`, `affine:c1,c2,..`, `quad:a1,a2,..`.
    ///
    /// `const` and `prod` take their dimension from `dim`; the
    /// coefficient forms must list exactly `dim` coefficients.
    pub fn by_name(spec: &str, dim: usize) -> Result<Self> {
        let coeffs = |list: &str| -> Result<Vec<T>> {
            let v = list
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .ok()
                        .and_then(T::from)
                        .ok_or_else(|| Error::OutOfRange(format!("integrand coefficient `{}`", c.trim())))
                })
                .collect::<Result<Vec<T>>>()?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            Ok(v)
        };
        match spec.split_once(':') {
            None if spec == "const" => Ok(Self::constant(dim, T::one())),
            None if spec == "prod" => Ok(Self::product(dim)),
            Some(("affine", list)) => Ok(Self::affine_product(coeffs(list)?)),
            Some(("quad", list)) => Ok(Self::weighted_quadratic(coeffs(list)?)),
            _ => Err(Error::UnknownFormat(format!("integrand {spec}"))),
        }
    }
}

fn check_dim<T: Real>(rule: &LatticeRule, f: &Integrand<T>) -> Result<()> {
    if f.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: f.dim() });
    }
    Ok(())
}

/// `(1/N) sum_{k=1}^N f({k z / N + delta})`.
pub fn apply_rule<T: Real>(rule: &LatticeRule, shift: &RealShift<T>, f: &Integrand<T>) -> Result<T> {
    check_dim(rule, f)?;
    if shift.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: shift.dim() });
    }
    let n = rule.n();
    let point = |k: usize| -> Vec<T> {
        rule.z()
            .iter()
            .zip(shift.components())
            .map(|(&z, &d)| shifted_coordinate(residue(k, z, n), n, d))
            .collect()
    };
    const CHUNK: usize = 256;
    let starts: Vec<usize> = (1..=n).step_by(CHUNK).collect();
    let partials: Vec<std::result::Result<T, Vec<T>>> = starts
        .par_iter()
        .map(|&lo| {
            let mut acc = T::zero();
            for k in lo..(lo + CHUNK).min(n + 1) {
                let x = point(k);
                let v = f.eval(&x);
                if !v.is_finite() {
                    return Err(x);
                }
                acc = acc + v;
            }
            Ok(acc)
        })
        .collect();
    let mut total = T::zero();
    for p in partials {
        match p {
            Ok(v) => total = total + v,
            Err(x) => return Err(Error::NonFiniteIntegrand { point: x.iter().map(|v| v.approx_f64()).collect() }),
        }
    }
    Ok(total / T::from_count(n))
}

/// Mean and standard error of the rule over `q` independent uniform shifts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomShiftEstimate<T> {
    pub mean: T,
    /// Sample standard deviation (divisor `q - 1`) over `sqrt(q)`; `None` when `q < 2`.
    pub std_error: Option<T>,
    pub q: usize,
    pub seed: u64,
}

/// Randomly shifted rule. Shifts come from `ChaCha8Rng::seed_from_u64(seed)`,
/// `s` uniform draws per shift in order, so a seed fixes all `q` shifts.
pub fn random_shift_estimate<T: Real>(rule: &LatticeRule, f: &Integrand<T>, q: usize, seed: u64) -> Result<RandomShiftEstimate<T>> {
    check_dim(rule, f)?;
    if q < 1 {
        return Err(Error::OutOfRange("number of random shifts q = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(q);
    for _ in 0..q {
        let delta: Vec<T> = (0..rule.dim())
            .map(|_| T::from(rng.random::<f64>()).expect("f64 converts"))
            .map(|d| if d >= T::one() { T::zero() } else { d })
            .collect();
        values.push(apply_rule(rule, &RealShift::new(delta)?, f)?);
    }
    let qq = T::from_count(q);
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / qq;
    let std_error = (q >= 2).then(|| {
        let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / T::from_count(q - 1);
        (var / qq).sqrt()
    });
    Ok(RandomShiftEstimate { mean, std_error, q, seed })
}
