//! Component-by-component constructions.
//!
//! [`cbc_vector`] chooses the generating vector one coordinate at a time by
//! minimizing the shift-averaged squared error. [`cbc_shift`] keeps a given
//! generating vector and chooses a half-shift one coordinate at a time by
//! minimizing the squared error of the shifted rule.
//!
//! Both searches break ties toward the smallest candidate. Two candidates
//! whose objectives agree to within a relative `tie_rtol` are treated as
//! tied, since many of them are equal in exact arithmetic (for instance every
//! half-shift at `s = 1`, or `z` against its inverse mod `N`) and only differ
//! by rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{b2_table, half_shift_value, residue, HalfShift, LatticeRule};
use crate::scalar::Real;
use crate::wce::{ratio, shift_avg_sq_wce, PairKernelCache, Sum, DEFAULT_MAX_PAIR_N};
use crate::weights::ProductWeights;

pub const DEFAULT_TIE_RTOL: f64 = 1e-10;

/// Candidates considered for each component of the generating vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateSet {
    /// Integers in `1..N` coprime to `N`.
    #[default]
    Coprime,
    /// Every integer in `1..N`.
    All,
}

impl CandidateSet {
    pub fn members(self, n: usize) -> Vec<usize> {
        match self {
            Self::All => (1..n).collect(),
            Self::Coprime => (1..n).filter(|&z| gcd(z, n) == 1).collect(),
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Index of the smallest candidate whose value is within `rtol` of the minimum.
pub(crate) fn select_min<T: Real>(values: &[T], rtol: T) -> usize {
    let min = values.iter().fold(T::infinity(), |m, &v| m.min(v));
    let threshold = min + rtol * min.abs();
    values.iter().position(|&v| v <= threshold).expect("nonempty candidate list")
}

#[derive(Clone, Debug)]
pub struct VectorOptions {
    pub candidates: CandidateSet,
    pub tie_rtol: f64,
}

impl Default for VectorOptions {
    fn default() -> Self {
        Self { candidates: CandidateSet::Coprime, tie_rtol: DEFAULT_TIE_RTOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcVectorResult<T> {
    pub n: usize,
    pub z: Vec<usize>,
    /// `[e^sh_{N,s}]^2` of the prefix `z_1..z_s`, for `s = 1..=s_max`.
    pub esh2: Vec<T>,
    pub candidates: CandidateSet,
}

impl<T> CbcVectorResult<T> {
    pub fn rule(&self) -> LatticeRule {
        LatticeRule::new(self.n, self.z.clone()).expect("constructed vector is valid")
    }
}

/// CBC generating vector for randomly shifted rules with default options.
pub fn cbc_vector<T: Real>(n: usize, s_max: usize, w: &ProductWeights<T>) -> Result<CbcVectorResult<T>> {
    cbc_vector_with(n, s_max, w, &VectorOptions::default())
}

/// `z_1 = 1`; each further `z_s` minimizes `[e^sh_{N,s}]^2` over the
/// candidate set, keeping per-point running products so a stage costs
/// `O(N * candidates)`.
pub fn cbc_vector_with<T: Real>(
    n: usize,
    s_max: usize,
    w: &ProductWeights<T>,
    opts: &VectorOptions,
) -> Result<CbcVectorResult<T>> {
    if n < 2 {
        return Err(Error::InvalidRule(format!("point count {n} < 2")));
    }
    if s_max == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    w.require(s_max)?;
    let candidates = opts.candidates.members(n);
    if candidates.is_empty() {
        return Err(Error::InvalidRule(format!("no candidates for N = {n}")));
    }
    let rtol = T::from(opts.tie_rtol).unwrap_or_else(T::zero);
    let b2 = b2_table::<T>(n);
    let nn = T::from_count(n);
    let mut running = vec![T::zero(); n];
    let mut z = Vec::with_capacity(s_max);
    let mut esh2 = Vec::with_capacity(s_max);

    let objective = |running: &[T], zc: usize, g: T| -> T {
        let mut acc = Sum::new();
        for (k, &d) in running.iter().enumerate() {
            acc.add(d + g * b2[residue(k, zc, n)] * (T::one() + d));
        }
        acc.value() / nn
    };

    for s in 1..=s_max {
        let g = w.gamma(s);
        let (chosen, value) = if s == 1 {
            (1, objective(&running, 1, g))
        } else {
            let values: Vec<T> = candidates.par_iter().map(|&zc| objective(&running, zc, g)).collect();
            let idx = select_min(&values, rtol);
            (candidates[idx], values[idx])
        };
        for (k, d) in running.iter_mut().enumerate() {
            *d = *d + g * b2[residue(k, chosen, n)] * (T::one() + *d);
        }
        z.push(chosen);
        esh2.push(value);
    }
    Ok(CbcVectorResult { n, z, esh2, candidates: opts.candidates })
}

/// How each stage of [`cbc_shift`] evaluates its `N` candidates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStrategy {
    /// All candidates from one pass over the pair cache, `O(N^2)` per stage.
    #[default]
    Scan,
    /// Each candidate summed separately over the pair cache, `O(N^3)` per stage.
    Direct,
}

#[derive(Clone, Debug)]
pub struct ShiftOptions {
    pub strategy: SearchStrategy,
    pub tie_rtol: f64,
    /// Largest `N` accepted by the pair cache.
    pub max_n: usize,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self { strategy: SearchStrategy::Scan, tie_rtol: DEFAULT_TIE_RTOL, max_n: DEFAULT_MAX_PAIR_N }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord<T> {
    pub s: usize,
    /// Chosen index; the shift component is `(2m - 1)/(2N)`.
    pub m: usize,
    /// `e^2_{N,s}(z*, delta*)`.
    pub e2: T,
    /// `e^2_{N,s}(z*, 0)`.
    pub e2_zero: T,
    /// `[e^sh_{N,s}(z*)]^2`.
    pub esh2: T,
    pub kappa: T,
    pub kappa0: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbcShiftResult<T> {
    pub n: usize,
    pub z: Vec<usize>,
    pub records: Vec<ShiftRecord<T>>,
}

impl<T> CbcShiftResult<T> {
    pub fn shift(&self) -> HalfShift {
        HalfShift::new(self.n, self.records.iter().map(|r| r.m).collect()).expect("indices in range")
    }

    pub fn rule(&self) -> LatticeRule {
        LatticeRule::new(self.n, self.z.clone()).expect("validated generating vector")
    }
}

fn validated_prefix(n: usize, z: &[usize], s_max: usize) -> Result<LatticeRule> {
    if s_max == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    if z.len() < s_max {
        return Err(Error::DimensionMismatch { expected: s_max, found: z.len() });
    }
    LatticeRule::new(n, z[..s_max].to_vec())
}

/// CBC for shift with default options; `[e^sh]^2` is recomputed per stage.
pub fn cbc_shift<T: Real>(n: usize, z: &[usize], s_max: usize, w: &ProductWeights<T>) -> Result<CbcShiftResult<T>> {
    cbc_shift_with(n, z, s_max, w, &ShiftOptions::default(), None, |_| {})
}

/// CBC for shift on top of a [`cbc_vector`] result, reusing its `[e^sh]^2` values.
pub fn cbc_shift_for_vector<T: Real>(
    v: &CbcVectorResult<T>,
    s_max: usize,
    w: &ProductWeights<T>,
    opts: &ShiftOptions,
) -> Result<CbcShiftResult<T>> {
    cbc_shift_with(v.n, &v.z, s_max, w, opts, Some(&v.esh2), |_| {})
}

/// Chooses `delta*_s` in `S_N` for `s = 1..=s_max` so that each minimizes
/// `e^2_{N,s}((z_1..z_s), (delta*_1..delta*_{s-1}, delta_s))`, recording κ and
/// κ₀ at every stage. `observer` sees each record as soon as it is fixed.
pub fn cbc_shift_with<T: Real>(
    n: usize,
    z: &[usize],
    s_max: usize,
    w: &ProductWeights<T>,
    opts: &ShiftOptions,
    esh2: Option<&[T]>,
    mut observer: impl FnMut(&ShiftRecord<T>),
) -> Result<CbcShiftResult<T>> {
    let rule = validated_prefix(n, z, s_max)?;
    w.require(s_max)?;
    if let Some(e) = esh2 {
        if e.len() < s_max {
            return Err(Error::DimensionMismatch { expected: s_max, found: e.len() });
        }
    }
    let rtol = T::from(opts.tie_rtol).unwrap_or_else(T::zero);
    let mut cache = PairKernelCache::<T>::with_ceiling(n, opts.max_n)?;
    let mut zero = PairKernelCache::<T>::with_ceiling(n, opts.max_n)?;
    let mut records = Vec::with_capacity(s_max);

    for s in 1..=s_max {
        let zs = rule.z()[s - 1];
        let g = w.gamma(s);
        let values: Vec<T> = match opts.strategy {
            SearchStrategy::Scan => cache.half_shift_scan(zs, g)?,
            SearchStrategy::Direct => (1..=n)
                .into_par_iter()
                .map(|m| cache.candidate_error_seq(zs, g, half_shift_value(m, n)))
                .collect(),
        };
        let m = select_min(&values, rtol) + 1;
        let e2 = cache.push(zs, g, half_shift_value(m, n))?;
        let e2_zero = zero.push(zs, g, T::zero())?;
        let esh2_s = match esh2 {
            Some(e) => e[s - 1],
            None => shift_avg_sq_wce(&rule.prefix(s)?, w)?,
        };
        let record = ShiftRecord {
            s,
            m,
            e2,
            e2_zero,
            esh2: esh2_s,
            kappa: ratio(e2, esh2_s)?,
            kappa0: ratio(e2_zero, esh2_s)?,
        };
        observer(&record);
        records.push(record);
    }
    Ok(CbcShiftResult { n, z: rule.z().to_vec(), records })
}

/// `kappa_0(N, s) = e_{N,s}(z, 0) / e^sh_{N,s}(z)` for `s = 1..=s_max`.
pub fn zero_shift_kappas<T: Real>(n: usize, z: &[usize], s_max: usize, w: &ProductWeights<T>) -> Result<Vec<T>> {
    let rule = validated_prefix(n, z, s_max)?;
    w.require(s_max)?;
    let mut zero = PairKernelCache::<T>::new(n)?;
    (1..=s_max)
        .map(|s| {
            let e2 = zero.push(rule.z()[s - 1], w.gamma(s), T::zero())?;
            ratio(e2, shift_avg_sq_wce(&rule.prefix(s)?, w)?)
        })
        .collect()
}
