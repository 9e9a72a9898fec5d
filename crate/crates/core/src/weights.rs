//! Weight schemes for the weighted unanchored Sobolev space.
//!
//! Product weights drive every fast path. Explicit per-subset weights exist
//! only for the brute-force reference evaluations in [`crate::oracle`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Generator of a product-weight sequence `gamma_1, gamma_2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// Weights listed one by one.
    Explicit(Vec<f64>),
    /// `gamma_j = 1 / j^2`.
    InverseSquare,
    /// `gamma_j = a^j` with `0 < a < 1`.
    Geometric(f64),
}

impl WeightFamily {
    /// Parses a weight specification string.
    ///
    /// Accepted forms: `prod:1/j^2`, `prod:geo:<a>`, `prod:file:<path>` (one
    /// decimal weight per line) and `explicit:[g1,g2,...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "prod:1/j^2" {
            return Ok(Self::InverseSquare);
        }
        if let Some(a) = spec.strip_prefix("prod:geo:") {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidWeights(format!("bad geometric base `{a}`")))?;
            check_geometric_base(a)?;
            return Ok(Self::Geometric(a));
        }
        if let Some(path) = spec.strip_prefix("prod:file:") {
            return Self::from_file(Path::new(path));
        }
        if let Some(list) = spec.strip_prefix("explicit:") {
            let inner = list
                .trim()
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .ok_or_else(|| Error::InvalidWeights(format!("expected `[..]` list in `{spec}`")))?;
            let gamma = inner
                .split(',')
                .map(|g| {
                    g.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidWeights(format!("bad weight `{}`", g.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::Explicit(gamma));
        }
        Err(Error::InvalidWeights(format!("unknown weight specification `{spec}`")))
    }

    fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut gamma = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let g: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad weight `{line}`"),
            })?;
            gamma.push(g);
        }
        Ok(Self::Explicit(gamma))
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InverseSquare => write!(f, "prod:1/j^2"),
            Self::Geometric(a) => write!(f, "prod:geo:{a}"),
            Self::Explicit(g) => {
                let list: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                write!(f, "explicit:[{}]", list.join(","))
            }
        }
    }
}

fn check_geometric_base(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidWeights(format!("geometric base {a} not in (0, 1)")));
    }
    Ok(())
}

/// Product weights `gamma_u = prod_{j in u} gamma_j`, materialized up to `s_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductWeights<T> {
    gamma: Vec<T>,
    family: WeightFamily,
}

impl<T: Scalar> ProductWeights<T> {
    pub fn explicit(gamma: Vec<T>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidWeights("empty weight list".into()));
        }
        if let Some((j, g)) = gamma.iter().enumerate().find(|(_, &g)| !(g > T::zero()) || !g.is_finite_value()) {
            return Err(Error::InvalidWeights(format!("gamma_{} = {g:?} is not positive", j + 1)));
        }
        let family = WeightFamily::Explicit(gamma.iter().map(|g| g.approx_f64()).collect());
        Ok(Self { gamma, family })
    }

    /// Materializes `gamma_1..gamma_{s_max}` of a family.
    pub fn family(kind: &WeightFamily, s_max: usize) -> Result<Self> {
        if s_max == 0 {
            return Err(Error::InvalidWeights("s_max must be at least 1".into()));
        }
        let gamma = match kind {
            WeightFamily::InverseSquare => {
                (1..=s_max).map(|j| T::from_ratio(1, (j * j) as i64)).collect::<Vec<T>>()
            }
            WeightFamily::Geometric(a) => {
                check_geometric_base(*a)?;
                let base = T::from_f64_value(*a)
                    .ok_or_else(|| Error::InvalidWeights(format!("base {a} not representable")))?;
                let mut g = Vec::with_capacity(s_max);
                let mut acc = T::one();
                for _ in 0..s_max {
                    acc = acc * base;
                    g.push(acc);
                }
                g
            }
            WeightFamily::Explicit(list) => {
                if list.len() < s_max {
                    return Err(Error::InvalidWeights(format!(
                        "{} weights listed, {s_max} needed",
                        list.len()
                    )));
                }
                list.iter()
                    .map(|&g| {
                        T::from_f64_value(g)
                            .ok_or_else(|| Error::InvalidWeights(format!("weight {g} not representable")))
                    })
                    .collect::<Result<Vec<T>>>()?
            }
        };
        let mut w = Self::explicit(gamma)?;
        w.family = kind.clone();
        Ok(w)
    }

    /// `gamma_j`, 1-based.
    #[inline]
    pub fn gamma(&self, j: usize) -> T {
        self.gamma[j - 1]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn family_tag(&self) -> &WeightFamily {
        &self.family
    }

    pub(crate) fn require(&self, s: usize) -> Result<()> {
        if s > self.len() {
            return Err(Error::DimensionMismatch { expected: s, found: self.len() });
        }
        Ok(())
    }

    /// `prod_{j in u} gamma_j` for a nonempty subset of 1-based coordinates.
    pub fn weight_of(&self, u: &[usize]) -> Result<T> {
        if u.is_empty() {
            return Err(Error::InvalidWeights("empty subset; gamma_0 is the constant 1".into()));
        }
        let mut w = T::one();
        for &j in u {
            if j == 0 || j > self.len() {
                return Err(Error::OutOfRange(format!("coordinate {j}")));
            }
            w = w * self.gamma(j);
        }
        Ok(w)
    }

    /// Multiplies every `gamma_j` by `c`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::explicit(self.gamma.iter().map(|&g| g * c).collect())
    }

    /// Explicit subset weights for the first `s` coordinates.
    pub fn to_subset_weights(&self, s: usize) -> Result<SubsetWeights<T>> {
        self.require(s)?;
        SubsetWeights::from_fn(s, |u| {
            (0..s).filter(|j| u >> j & 1 == 1).fold(T::one(), |acc, j| acc * self.gamma[j])
        })
    }
}

/// Largest dimension for which subset weights are enumerated.
pub const MAX_SUBSET_DIM: usize = 12;

/// General weights `gamma_u` for every nonempty `u` in `{1..s}`, keyed by bitmask.
///
/// Values are nonnegative; a zero weight drops that subset from every sum.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetWeights<T> {
    dim: usize,
    values: Vec<T>,
}

impl<T: Scalar> SubsetWeights<T> {
    /// Builds weights from `f(mask)`, where bit `j` of `mask` is coordinate `j + 1`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> T) -> Result<Self> {
        if dim == 0 || dim > MAX_SUBSET_DIM {
            return Err(Error::TooLarge(format!("subset weights for s = {dim}")));
        }
        let mut values = vec![T::zero(); 1 << dim];
        for (mask, v) in values.iter_mut().enumerate().skip(1) {
            let g = f(mask);
            if g < T::zero() || !g.is_finite_value() {
                return Err(Error::InvalidWeights(format!("gamma for mask {mask:#b} is {g:?}")));
            }
            *v = g;
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `gamma_u` for a nonempty mask.
    #[inline]
    pub fn get(&self, mask: usize) -> T {
        self.values[mask]
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::from_fn(self.dim, |u| self.values[u] * c)
    }
}
