//! Slow reference evaluations.
//!
//! Nothing here uses the product factorization, the pair cache or the
//! difference tables of [`crate::wce`]: sums over subsets are enumerated,
//! half-shift averages walk the whole grid `S_N^s`, and shifted coordinates
//! are formed with [`frac`] directly. Sizes are capped so the reference
//! checks stay fast.

use crate::error::{Error, Result};
use crate::kernel::{bernoulli2, frac, half_shift_value, LatticeRule, RealShift};
use crate::scalar::Scalar;
use crate::weights::{SubsetWeights, MAX_SUBSET_DIM};

/// Largest half-shift grid `N^s` walked by [`brute_half_shift_avg`].
pub const MAX_GRID: usize = 100_000;

fn point<T: Scalar>(k: usize, z: usize, n: usize, delta: T) -> T {
    frac(T::from_ratio((k * z) as i64, n as i64) + delta).expect("finite")
}

fn half_b2_of_difference<T: Scalar>(k: usize, k2: usize, z: usize, n: usize) -> T {
    let diff = frac(T::from_ratio(k as i64 * z as i64 - k2 as i64 * z as i64, n as i64)).expect("finite");
    T::from_ratio(1, 2) * bernoulli2(diff).expect("in [0, 1)")
}

fn check<T: Scalar>(rule: &LatticeRule, sw: &SubsetWeights<T>) -> Result<()> {
    if rule.dim() > MAX_SUBSET_DIM {
        return Err(Error::TooLarge(format!("oracle dimension {}", rule.dim())));
    }
    if sw.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: sw.dim() });
    }
    Ok(())
}

/// `sum_{u != {}} gamma_u prod_{j in u} y_j`, one subset at a time.
fn subset_sum<T: Scalar>(y: &[T], sw: &SubsetWeights<T>, prod: &mut [T]) -> T {
    let mut total = T::zero();
    prod[0] = T::one();
    for mask in 1..(1usize << y.len()) {
        let low = mask.trailing_zeros() as usize;
        prod[mask] = prod[mask & (mask - 1)] * y[low];
        total = total + sw.get(mask) * prod[mask];
    }
    total
}

/// Squared worst-case error by the literal triple sum over `k`, `k'` and
/// subsets `u`, with general weights.
pub fn brute_sq_wce<T: Scalar>(rule: &LatticeRule, shift: &RealShift<T>, sw: &SubsetWeights<T>) -> Result<T> {
    check(rule, sw)?;
    if shift.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: shift.dim() });
    }
    let n = rule.n();
    let s = rule.dim();
    let half = T::from_ratio(1, 2);
    let mut prod = vec![T::zero(); 1 << s];
    let mut y = vec![T::zero(); s];
    let mut total = T::zero();
    for k in 1..=n {
        for k2 in 1..=n {
            for (j, (&z, &d)) in rule.z().iter().zip(shift.components()).enumerate() {
                let a = (point(k, z, n, d) - half) * (point(k2, z, n, d) - half);
                y[j] = half_b2_of_difference::<T>(k, k2, z, n) + a;
            }
            total = total + subset_sum(&y, sw, &mut prod);
        }
    }
    let nn = T::from_count(n);
    Ok(total / (nn * nn))
}

/// Mean of [`brute_sq_wce`] over every half-shift in `S_N^s`.
pub fn brute_half_shift_avg<T: Scalar>(rule: &LatticeRule, sw: &SubsetWeights<T>) -> Result<T> {
    check(rule, sw)?;
    let n = rule.n();
    let s = rule.dim();
    let grid = (0..s).try_fold(1usize, |acc, _| acc.checked_mul(n).filter(|&g| g <= MAX_GRID));
    let Some(grid) = grid else {
        return Err(Error::TooLarge(format!("half-shift grid {n}^{s}")));
    };
    let mut idx = vec![1usize; s];
    let mut total = T::zero();
    for _ in 0..grid {
        let shift = RealShift::new(idx.iter().map(|&m| half_shift_value(m, n)).collect())?;
        total = total + brute_sq_wce(rule, &shift, sw)?;
        for slot in idx.iter_mut() {
            if *slot < n {
                *slot += 1;
                break;
            }
            *slot = 1;
        }
    }
    Ok(total / T::from_count(grid))
}

/// Shift-averaged squared error as the single sum over `k` with general weights.
pub fn brute_shift_avg<T: Scalar>(rule: &LatticeRule, sw: &SubsetWeights<T>) -> Result<T> {
    check(rule, sw)?;
    let n = rule.n();
    let mut prod = vec![T::zero(); 1 << rule.dim()];
    let mut total = T::zero();
    for k in 1..=n {
        let y: Vec<T> = rule.z().iter().map(|&z| bernoulli2(point(k, z, n, T::zero())).expect("in [0, 1)")).collect();
        total = total + subset_sum(&y, sw, &mut prod);
    }
    Ok(total / T::from_count(n))
}

/// Shift-averaged squared error as the double sum over `(k, k')` of the
/// integrated pair kernel `B2({(k - k') z_j / N})`.
pub fn brute_shift_avg_double_sum<T: Scalar>(rule: &LatticeRule, sw: &SubsetWeights<T>) -> Result<T> {
    check(rule, sw)?;
    let n = rule.n();
    let two = T::from_count(2);
    let mut prod = vec![T::zero(); 1 << rule.dim()];
    let mut total = T::zero();
    for k in 1..=n {
        for k2 in 1..=n {
            let y: Vec<T> = rule.z().iter().map(|&z| two * half_b2_of_difference(k, k2, z, n)).collect();
            total = total + subset_sum(&y, sw, &mut prod);
        }
    }
    let nn = T::from_count(n);
    Ok(total / (nn * nn))
}

/// Per-coordinate quantities from the comparison of the continuous and the
/// half-shift averages, for one pair `(k, k')` and one generator `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofTerms<T> {
    /// `c + int_0^1 A(delta) d delta`, which equals `B2({(k - k') z / N})`.
    pub a: T,
    /// `c + (1/N) sum_m A(mu_m)`.
    pub b: T,
    /// `(1/2) B2({(k - k') z / N})`.
    pub c: T,
    /// Midpoints `mu_m = (2m - 1)/(2N)`, `m = 1..=N`.
    pub mu: Vec<T>,
}

/// `A_{k,k',z}(delta)` formed from [`frac`].
pub fn kernel_a<T: Scalar>(k: usize, k2: usize, z: usize, n: usize, delta: T) -> T {
    let half = T::from_ratio(1, 2);
    (point(k, z, n, delta) - half) * (point(k2, z, n, delta) - half)
}

pub fn proof_terms<T: Scalar>(k: usize, k2: usize, z: usize, n: usize) -> ProofTerms<T> {
    let c = half_b2_of_difference(k, k2, z, n);
    let a = T::from_count(2) * c;
    let mu: Vec<T> = (1..=n).map(|m| half_shift_value(m, n)).collect();
    let avg = mu.iter().fold(T::zero(), |acc, &x| acc + kernel_a(k, k2, z, n, x)) / T::from_count(n);
    ProofTerms { a, b: c + avg, c, mu }
}

/// Composite midpoint rule with `intervals` equal subintervals of `[0, 1]`.
pub fn composite_midpoint<T: Scalar>(intervals: usize, f: impl Fn(T) -> T) -> T {
    let m = intervals as i64;
    let sum = (1..=m).fold(T::zero(), |acc, i| acc + f(T::from_ratio(2 * i - 1, 2 * m)));
    sum / T::from_count(intervals)
}

/// Outcome of [`verify_grid`].
#[derive(Clone, Debug, Default)]
pub struct Verification {
    pub instances: usize,
    pub checks: usize,
    pub violations: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }
}

/// Every generating vector with `z_1 = 1` and remaining components coprime
/// to `n`, capped at `limit` vectors taken in lexicographic order.
pub fn coprime_vectors(n: usize, s: usize, limit: usize) -> Vec<Vec<usize>> {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let units: Vec<usize> = (1..n).filter(|&z| gcd(z, n) == 1).collect();
    let mut out = vec![vec![1usize]];
    for _ in 1..s {
        let mut next = Vec::new();
        'outer: for v in &out {
            for &u in &units {
                if next.len() >= limit {
                    break 'outer;
                }
                let mut w = v.clone();
                w.push(u);
                next.push(w);
            }
        }
        out = next;
    }
    out.truncate(limit);
    out
}

/// Checks the half-shift averaging bound, the proof-term bounds and the
/// agreement of the fast evaluations with the reference sums, for every
/// `N in 2..=max_n`, `s in 1..=max_s` and weights `gamma_j = 1/j^2`.
pub fn verify_grid(max_n: usize, max_s: usize) -> Result<Verification> {
    use crate::wce::{half_shift_avg_sq_wce, shift_avg_sq_wce, squared_wce, theorem1_bound};
    use crate::weights::{ProductWeights, WeightFamily};

    if max_n < 2 || max_s == 0 || max_s > MAX_SUBSET_DIM {
        return Err(Error::OutOfRange(format!("verification grid N <= {max_n}, s <= {max_s}")));
    }
    let w = ProductWeights::<f64>::family(&WeightFamily::InverseSquare, max_s)?;
    let mut report = Verification::default();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);

    for n in 2..=max_n {
        let bound12 = 1.0 / (12.0 * (n * n) as f64);
        for k in 1..=n {
            for k2 in 1..=n {
                for z in 1..n {
                    let t: ProofTerms<f64> = proof_terms(k, k2, z, n);
                    report.record((t.a - t.b).abs() <= bound12 + 1e-15, || {
                        format!("|a - b| > 1/(12N^2) at N={n} k={k} k'={k2} z={z}")
                    });
                    report.record(t.a.abs() <= 1.0 / 3.0 && t.b.abs() <= 1.0 / 3.0, || {
                        format!("|a| or |b| > 1/3 at N={n} k={k} k'={k2} z={z}")
                    });
                }
            }
        }
        for s in 1..=max_s {
            let sw = w.to_subset_weights(s)?;
            let limit = 64;
            for z in coprime_vectors(n, s, limit) {
                report.instances += 1;
                let rule = LatticeRule::new(n, z.clone())?;
                let esh = shift_avg_sq_wce(&rule, &w)?;
                let ehalf = half_shift_avg_sq_wce(&rule, &w)?;
                let bound = theorem1_bound(n, &w, s)?;
                report.record((esh - ehalf).abs() <= bound + 1e-14, || {
                    format!("averaging bound violated at N={n} z={z:?}: |{esh} - {ehalf}| > {bound}")
                });
                let brute_esh = brute_shift_avg(&rule, &sw)?;
                report.record(close(esh, brute_esh), || format!("e_sh^2 mismatch at N={n} z={z:?}"));
                if n.checked_pow(s as u32).is_some_and(|g| g <= 4096) {
                    let brute = brute_half_shift_avg(&rule, &sw)?;
                    report.record(close(ehalf, brute), || format!("half-shift average mismatch at N={n} z={z:?}"));
                }
                let shift = RealShift::new((1..=s).map(|j| half_shift_value((j * 7) % n + 1, n)).collect())?;
                let e2 = squared_wce(&rule, &shift, &w)?;
                let brute = brute_sq_wce(&rule, &shift, &sw)?;
                report.record(close(e2, brute), || format!("e^2 mismatch at N={n} z={z:?}"));
            }
        }
    }
    Ok(report)
}
