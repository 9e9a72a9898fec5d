//! Worst-case error functionals in the weighted unanchored Sobolev space.
//!
//! All product-weight sums over subsets `u` are carried as "product minus
//! one": the running value `d = prod_j (1 + gamma_j y_j) - 1` is updated as
//! `d + gamma y (1 + d)`, which keeps the small quantities small instead of
//! subtracting 1 from a number close to 1 at the end.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{b2_table, residue, shifted_coordinate, LatticeRule, RealShift};
use crate::scalar::{Real, Scalar};
use crate::weights::ProductWeights;

/// Default ceiling on `N` for the `O(N^2)`-memory pair cache.
pub const DEFAULT_MAX_PAIR_N: usize = 4096;

const ROW_CHUNK: usize = 64;

#[inline]
fn accumulate<T: Scalar>(d: T, g: T) -> T {
    d + g * (T::one() + d)
}

fn check_dims<T: Scalar>(rule: &LatticeRule, w: &ProductWeights<T>) -> Result<()> {
    w.require(rule.dim())
}

/// Neumaier-compensated running sum. Pair sums here cancel down to about
/// `1/N^2` of their absolute mass, which plain accumulation loses at `N` in
/// the thousands.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Sum<T> {
    hi: T,
    lo: T,
}

impl<T: Scalar> Sum<T> {
    pub(crate) fn new() -> Self {
        Self { hi: T::zero(), lo: T::zero() }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: T) {
        let t = self.hi + x;
        self.lo = if self.hi.abs_value() >= x.abs_value() {
            self.lo + ((self.hi - t) + x)
        } else {
            self.lo + ((x - t) + self.hi)
        };
        self.hi = t;
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.add(other.hi);
        self.add(other.lo);
    }

    pub(crate) fn value(&self) -> T {
        self.hi + self.lo
    }
}

/// Lets `f(k, acc)` add its terms for every `k = 0..n`, in fixed row chunks.
/// Chunk partials are merged in order, so the result does not depend on the
/// worker count.
fn ordered_sum<T, F>(n: usize, f: F) -> T
where
    T: Scalar,
    F: Fn(usize, &mut Sum<T>) + Sync,
{
    let chunks: Vec<(usize, usize)> =
        (0..n).step_by(ROW_CHUNK).map(|lo| (lo, (lo + ROW_CHUNK).min(n))).collect();
    let partials: Vec<Sum<T>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = Sum::new();
            for k in lo..hi {
                f(k, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Sum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Squared worst-case error `e^2_{N,s}(z, delta)` of a shifted lattice rule.
///
/// Direct `O(s N^2)` evaluation over unordered pairs `k <= k'`.
pub fn squared_wce<T: Scalar>(rule: &LatticeRule, shift: &RealShift<T>, w: &ProductWeights<T>) -> Result<T> {
    check_dims(rule, w)?;
    if shift.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: shift.dim() });
    }
    let n = rule.n();
    let s = rule.dim();
    let half = T::from_ratio(1, 2);
    let b2 = b2_table::<T>(n);
    let res: Vec<Vec<usize>> = rule.z().iter().map(|&z| (0..n).map(|k| residue(k, z, n)).collect()).collect();
    let centered: Vec<Vec<T>> = res
        .iter()
        .zip(shift.components())
        .map(|(r, &delta)| r.iter().map(|&p| shifted_coordinate(p, n, delta) - half).collect())
        .collect();
    let gamma = &w.as_slice()[..s];
    let two = T::from_count(2);

    let total = ordered_sum(n, |k, acc| {
        for k2 in k..n {
            let mut d = T::zero();
            for j in 0..s {
                let diff = (res[j][k] + n - res[j][k2]) % n;
                let y = half * b2[diff] + centered[j][k] * centered[j][k2];
                d = accumulate(d, gamma[j] * y);
            }
            acc.add(if k2 == k { d } else { two * d });
        }
    });
    let nn = T::from_count(n);
    Ok(total / (nn * nn))
}

/// Shift-averaged squared worst-case error `[e^sh_{N,s}(z)]^2`, `O(s N)`.
pub fn shift_avg_sq_wce<T: Scalar>(rule: &LatticeRule, w: &ProductWeights<T>) -> Result<T> {
    check_dims(rule, w)?;
    let n = rule.n();
    let b2 = b2_table::<T>(n);
    Ok(difference_sum(rule, w, &b2))
}

/// `(1/N) sum_delta [prod_j (1 + gamma_j table[delta z_j mod N]) - 1]`.
fn difference_sum<T: Scalar>(rule: &LatticeRule, w: &ProductWeights<T>, table: &[T]) -> T {
    let n = rule.n();
    let z = rule.z();
    let gamma = w.as_slice();
    let total = ordered_sum(n, |k, acc| {
        acc.add(
            z.iter()
                .zip(gamma)
                .fold(T::zero(), |d, (&zj, &gj)| accumulate(d, gj * table[residue(k, zj, n)])),
        )
    });
    total / T::from_count(n)
}

/// Midpoint average `(1/N) sum_m A(mu_m)` as a function of the residue
/// difference `delta = (k' - k) z mod N`; symmetric in `delta`.
pub(crate) fn midpoint_table<T: Scalar>(n: usize) -> Vec<T> {
    let half = T::from_ratio(1, 2);
    let centered: Vec<T> = (0..n).map(|q| shifted_coordinate(q, n, T::from_ratio(1, 2 * n as i64)) - half).collect();
    let nn = T::from_count(n);
    (0..n)
        .map(|delta| {
            // Sum the smaller lag so table[delta] and table[n - delta] agree exactly.
            let lag = delta.min(n - delta);
            let mut sum = Sum::new();
            for q in 0..n {
                sum.add(centered[q] * centered[(q + lag) % n]);
            }
            sum.value() / nn
        })
        .collect()
}

/// Squared worst-case error averaged over all half-shifts in `S_N^s`.
///
/// Never enumerates the `N^s` grid: averaging over a product grid factorizes
/// across coordinates, and the per-coordinate term
/// `b = (1/2) B2 + (1/N) sum_m A(mu_m)` depends only on `(k - k') z mod N`,
/// so the double sum over pairs collapses to a single sum over differences.
pub fn half_shift_avg_sq_wce<T: Scalar>(rule: &LatticeRule, w: &ProductWeights<T>) -> Result<T> {
    check_dims(rule, w)?;
    let n = rule.n();
    let half = T::from_ratio(1, 2);
    let b2 = b2_table::<T>(n);
    let mid = midpoint_table::<T>(n);
    let b: Vec<T> = b2.iter().zip(&mid).map(|(&c, &m)| half * c + m).collect();
    Ok(difference_sum(rule, w, &b))
}

/// `kappa = e_{N,s}(z, delta) / e^sh_{N,s}(z)`.
pub fn kappa<T: Real>(rule: &LatticeRule, shift: &RealShift<T>, w: &ProductWeights<T>) -> Result<T> {
    let e2 = squared_wce(rule, shift, w)?;
    let esh2 = shift_avg_sq_wce(rule, w)?;
    ratio(e2, esh2)
}

pub(crate) fn ratio<T: Real>(e2: T, esh2: T) -> Result<T> {
    if !(esh2 > T::zero()) {
        return Err(Error::Degenerate(format!("shift-averaged error {esh2:?}")));
    }
    Ok((e2 / esh2).sqrt())
}

/// `(1/(4N^2)) sum_{u != {}} gamma_u 3^{-|u|} |u|`, the gap allowed between
/// the shift average and the half-shift average.
///
/// Uses `sum_u gamma_u 3^{-|u|} |u| = (sum_i g_i / (1 + g_i)) prod_j (1 + g_j)`
/// with `g_j = gamma_j / 3`.
pub fn theorem1_bound<T: Scalar>(n: usize, w: &ProductWeights<T>, s: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidRule(format!("point count {n} < 2")));
    }
    if s == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    w.require(s)?;
    let third = T::from_ratio(1, 3);
    let (sum, prod) = w.as_slice()[..s].iter().fold((T::zero(), T::one()), |(sum, prod), &g| {
        let gi = g * third;
        (sum + gi / (T::one() + gi), prod * (T::one() + gi))
    });
    let nn = T::from_count(n);
    Ok(sum * prod / (T::from_count(4) * nn * nn))
}

/// Per-pair running products for incremental squared-error evaluation.
///
/// Holds `D[k, k'] = prod_{j <= dims} (1 + gamma_j y_j(k, k')) - 1` for
/// `k <= k'` in packed row-major upper-triangular storage, where
/// `y_j = (1/2) B2({(k - k') z_j / N}) + A_{k,k',z_j}(delta_j)`. The squared
/// worst-case error of the processed prefix is `sum_{k,k'} D / N^2`.
#[derive(Clone, Debug)]
pub struct PairKernelCache<T> {
    n: usize,
    dims: usize,
    packed: Vec<T>,
    b2: Vec<T>,
}

/// Per-level aggregates used by [`PairKernelCache::half_shift_scan`].
struct LevelSums<T> {
    base: Sum<T>,
    cterm: Sum<T>,
    lvl_d: Vec<Sum<T>>,
    lvl_dw: Vec<Sum<T>>,
    corner: Vec<Sum<T>>,
}

impl<T: Scalar> LevelSums<T> {
    fn zeros(n: usize) -> Self {
        Self {
            base: Sum::new(),
            cterm: Sum::new(),
            lvl_d: vec![Sum::new(); n],
            lvl_dw: vec![Sum::new(); n],
            corner: vec![Sum::new(); n],
        }
    }

    fn merge(&mut self, other: &Self) {
        self.base.merge(&other.base);
        self.cterm.merge(&other.cterm);
        for (a, b) in self.lvl_d.iter_mut().zip(&other.lvl_d) {
            a.merge(b);
        }
        for (a, b) in self.lvl_dw.iter_mut().zip(&other.lvl_dw) {
            a.merge(b);
        }
        for (a, b) in self.corner.iter_mut().zip(&other.corner) {
            a.merge(b);
        }
    }
}

impl<T: Scalar> PairKernelCache<T> {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_ceiling(n, DEFAULT_MAX_PAIR_N)
    }

    pub fn with_ceiling(n: usize, max_n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidRule(format!("point count {n} < 2")));
        }
        if n > max_n {
            return Err(Error::TooLarge(format!("pair cache for N = {n} exceeds ceiling {max_n}")));
        }
        Ok(Self { n, dims: 0, packed: vec![T::zero(); n * (n + 1) / 2], b2: b2_table(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coordinates folded in so far.
    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    fn offset(&self, k: usize) -> usize {
        k * self.n - k * k.saturating_sub(1) / 2
    }

    /// `D[k, k']` (symmetric), 0-based indices.
    pub fn get(&self, k: usize, k2: usize) -> T {
        let (a, b) = if k <= k2 { (k, k2) } else { (k2, k) };
        self.packed[self.offset(a) + (b - a)]
    }

    fn rows(&self) -> Vec<&[T]> {
        let mut rest = self.packed.as_slice();
        let mut rows = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let (row, tail) = rest.split_at(self.n - k);
            rows.push(row);
            rest = tail;
        }
        rows
    }

    fn rows_mut(&mut self) -> Vec<&mut [T]> {
        let n = self.n;
        let mut rest = self.packed.as_mut_slice();
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let (row, tail) = rest.split_at_mut(n - k);
            rows.push(row);
            rest = tail;
        }
        rows
    }

    fn normalize(&self, total: T) -> T {
        let nn = T::from_count(self.n);
        total / (nn * nn)
    }

    /// Squared worst-case error of the processed prefix (0 before any coordinate).
    pub fn squared_error(&self) -> T {
        let rows = self.rows();
        let two = T::from_count(2);
        let total = ordered_sum(self.n, |k, acc| {
            let row = rows[k];
            acc.add(row[0]);
            for &d in &row[1..] {
                acc.add(two * d);
            }
        });
        self.normalize(total)
    }

    fn centered(&self, z: usize, delta: T) -> (Vec<usize>, Vec<T>) {
        let n = self.n;
        let half = T::from_ratio(1, 2);
        let res: Vec<usize> = (0..n).map(|k| residue(k, z, n)).collect();
        let u = res.iter().map(|&p| shifted_coordinate(p, n, delta) - half).collect();
        (res, u)
    }

    fn check_coordinate(&self, z: usize, delta: T) -> Result<()> {
        if z == 0 || z >= self.n {
            return Err(Error::OutOfRange(format!("generator {z} for N = {}", self.n)));
        }
        if !delta.is_finite_value() || delta < T::zero() || delta >= T::one() {
            return Err(Error::OutOfRange(format!("shift component {delta:?}")));
        }
        Ok(())
    }

    fn row_candidate(&self, row: &[T], k: usize, res: &[usize], u: &[T], g: T, acc: &mut Sum<T>) {
        let n = self.n;
        let half = T::from_ratio(1, 2);
        let two = T::from_count(2);
        for (off, &d) in row.iter().enumerate() {
            let k2 = k + off;
            let diff = (res[k] + n - res[k2]) % n;
            let y = half * self.b2[diff] + u[k] * u[k2];
            let v = accumulate(d, g * y);
            acc.add(if off == 0 { v } else { two * v });
        }
    }

    /// Squared error after appending coordinate `(z, delta)` with weight
    /// `gamma`, without modifying the cache. `O(N^2)`.
    pub fn candidate_error(&self, z: usize, gamma: T, delta: T) -> Result<T> {
        self.check_coordinate(z, delta)?;
        let (res, u) = self.centered(z, delta);
        let rows = self.rows();
        let total = ordered_sum(self.n, |k, acc| self.row_candidate(rows[k], k, &res, &u, gamma, acc));
        Ok(self.normalize(total))
    }

    /// Single-threaded [`Self::candidate_error`] with the same summation
    /// order, for callers that parallelize over candidates instead.
    pub(crate) fn candidate_error_seq(&self, z: usize, gamma: T, delta: T) -> T {
        let (res, u) = self.centered(z, delta);
        let rows = self.rows();
        let mut total = Sum::new();
        for lo in (0..self.n).step_by(ROW_CHUNK) {
            let mut acc = Sum::new();
            for k in lo..(lo + ROW_CHUNK).min(self.n) {
                self.row_candidate(rows[k], k, &res, &u, gamma, &mut acc);
            }
            total.merge(&acc);
        }
        self.normalize(total.value())
    }

    /// Appends coordinate `(z, delta)` with weight `gamma` and returns the new
    /// squared error, summed afresh from the updated cache.
    pub fn push(&mut self, z: usize, gamma: T, delta: T) -> Result<T> {
        self.check_coordinate(z, delta)?;
        let n = self.n;
        let half = T::from_ratio(1, 2);
        let (res, u) = self.centered(z, delta);
        let b2 = self.b2.clone();
        self.rows_mut().into_par_iter().enumerate().for_each(|(k, row)| {
            for (off, d) in row.iter_mut().enumerate() {
                let k2 = k + off;
                let diff = (res[k] + n - res[k2]) % n;
                let y = half * b2[diff] + u[k] * u[k2];
                *d = accumulate(*d, gamma * y);
            }
        });
        self.dims += 1;
        Ok(self.squared_error())
    }

    /// Squared error after appending `(z, (2m - 1)/(2N))` for every
    /// `m = 1..=N`; entry `m - 1` of the result belongs to index `m`.
    ///
    /// Costs `O(N^2)` in total rather than `O(N^2)` per candidate. With
    /// `p_k = k z mod N`, a half-shift with index `m` moves every centered
    /// coordinate to `w(p_k + m - 1 mod N)`, where `w(q) = (q + 1/2)/N - 1/2`.
    /// Writing that as `w(p_k) + t - [p_k >= N - m + 1]` with `t = (m - 1)/N`
    /// turns the quadratic form `sum D u_k u_k'` into whole-matrix moments of
    /// `D` plus suffix sums over the levels `p`, all of which are gathered in
    /// one pass over the pairs.
    pub fn half_shift_scan(&self, z: usize, gamma: T) -> Result<Vec<T>> {
        self.check_coordinate(z, T::zero())?;
        let n = self.n;
        let half = T::from_ratio(1, 2);
        let two = T::from_count(2);
        let p: Vec<usize> = (0..n).map(|k| residue(k, z, n)).collect();
        let w: Vec<T> = (0..n).map(|q| T::from_ratio(2 * q as i64 + 1, 2 * n as i64) - half).collect();
        let rows = self.rows();

        let chunks: Vec<(usize, usize)> =
            (0..n).step_by(ROW_CHUNK).map(|lo| (lo, (lo + ROW_CHUNK).min(n))).collect();
        let partials: Vec<LevelSums<T>> = chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = LevelSums::zeros(n);
                for k in lo..hi {
                    let pk = p[k];
                    for (off, &d) in rows[k].iter().enumerate() {
                        let k2 = k + off;
                        let pk2 = p[k2];
                        let c = half * self.b2[(pk + n - pk2) % n];
                        if off == 0 {
                            acc.base.add(d);
                            acc.cterm.add((T::one() + d) * c);
                            acc.lvl_d[pk].add(d);
                            acc.lvl_dw[pk].add(d * w[pk]);
                            acc.corner[pk].add(d);
                        } else {
                            acc.base.add(two * d);
                            acc.cterm.add(two * (T::one() + d) * c);
                            acc.lvl_d[pk].add(d);
                            acc.lvl_d[pk2].add(d);
                            acc.lvl_dw[pk].add(d * w[pk2]);
                            acc.lvl_dw[pk2].add(d * w[pk]);
                            acc.corner[pk.min(pk2)].add(two * d);
                        }
                    }
                }
                acc
            })
            .collect();
        let mut sums = LevelSums::zeros(n);
        for part in &partials {
            sums.merge(part);
        }
        let lvl_d: Vec<T> = sums.lvl_d.iter().map(Sum::value).collect();
        let lvl_dw: Vec<T> = sums.lvl_dw.iter().map(Sum::value).collect();
        let lvl_corner: Vec<T> = sums.corner.iter().map(Sum::value).collect();

        let mut count = vec![0usize; n];
        for &pk in &p {
            count[pk] += 1;
        }
        let (mut w0, mut w1, mut w2, mut wsum) = (Sum::new(), Sum::new(), Sum::new(), Sum::new());
        for q in 0..n {
            w0.add(lvl_d[q]);
            w1.add(lvl_d[q] * w[q]);
            w2.add(lvl_dw[q] * w[q]);
        }
        for &pk in &p {
            wsum.add(w[pk]);
        }
        let (w0, w1, w2, wsum) = (w0.value(), w1.value(), w2.value(), wsum.value());
        let (base, cterm) = (sums.base.value(), sums.cterm.value());

        let nn = T::from_count(n);
        let mut out = Vec::with_capacity(n);
        let (mut sd, mut sdw, mut corner, mut cnt) = (Sum::new(), Sum::new(), Sum::new(), 0usize);
        for shift in 0..n {
            let t = T::from_ratio(shift as i64, n as i64);
            let mut quad = Sum::new();
            let zero = T::zero();
            for term in [w2, two * t * w1, t * t * w0, zero - two * sdw.value(), zero - two * t * sd.value(), corner.value()] {
                quad.add(term);
            }
            let sum_u = wsum + T::from_count(shift) - T::from_count(cnt);
            let mut inner = Sum::new();
            inner.add(cterm);
            inner.merge(&quad);
            inner.add(sum_u * sum_u);
            out.push((base + gamma * inner.value()) / (nn * nn));
            let level = n - shift - 1;
            sd.add(lvl_d[level]);
            sdw.add(lvl_dw[level]);
            corner.add(lvl_corner[level]);
            cnt += count[level];
        }
        Ok(out)
    }
}

/// One dimension of an [`ErrorReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord<T> {
    pub s: usize,
    pub e2: T,
    pub esh2: T,
    pub kappa: T,
    pub kappa0: T,
}

/// Squared errors and κ ratios of every prefix `s = 1..=dim` of a shifted rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport<T> {
    pub n: usize,
    pub records: Vec<ErrorRecord<T>>,
}

impl<T: Real> ErrorReport<T> {
    /// Evaluates every prefix incrementally, `O(s N^2)` overall.
    pub fn evaluate(rule: &LatticeRule, shift: &RealShift<T>, w: &ProductWeights<T>) -> Result<Self> {
        Self::evaluate_with_ceiling(rule, shift, w, DEFAULT_MAX_PAIR_N)
    }

    pub fn evaluate_with_ceiling(
        rule: &LatticeRule,
        shift: &RealShift<T>,
        w: &ProductWeights<T>,
        max_n: usize,
    ) -> Result<Self> {
        check_dims(rule, w)?;
        if shift.dim() != rule.dim() {
            return Err(Error::DimensionMismatch { expected: rule.dim(), found: shift.dim() });
        }
        let n = rule.n();
        let mut cache = PairKernelCache::with_ceiling(n, max_n)?;
        let mut zero = PairKernelCache::with_ceiling(n, max_n)?;
        let mut records = Vec::with_capacity(rule.dim());
        for s in 1..=rule.dim() {
            let z = rule.z()[s - 1];
            let g = w.gamma(s);
            let e2 = cache.push(z, g, shift.components()[s - 1])?;
            let e02 = zero.push(z, g, T::zero())?;
            let esh2 = shift_avg_sq_wce(&rule.prefix(s)?, w)?;
            records.push(ErrorRecord { s, e2, esh2, kappa: ratio(e2, esh2)?, kappa0: ratio(e02, esh2)? });
        }
        Ok(Self { n, records })
    }
}
