//! Elementary kernels: fractional part, the Bernoulli polynomial `B2`, the
//! shift-dependent pair kernel and lattice point generation.
//!
//! Point indices are `k = 0..N-1` internally; the public operations that take
//! an index accept the `1..=N` convention as well, since `k = N` and `k = 0`
//! give the same point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fractional part `x - floor(x)`, always in `[0, 1)`.
pub fn frac<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite_value() {
        return Err(Error::NonFinite("frac"));
    }
    Ok(frac_unchecked(x))
}

#[inline]
pub(crate) fn frac_unchecked<T: Scalar>(x: T) -> T {
    let r = x - x.floor_value();
    // x slightly below an integer can round up to exactly 1.
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Second Bernoulli polynomial `x^2 - x + 1/6` on `[0, 1]`.
pub fn bernoulli2<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite_value() {
        return Err(Error::NonFinite("bernoulli2"));
    }
    if x < T::zero() || x > T::one() {
        return Err(Error::OutOfRange(format!("bernoulli2 argument {x:?}")));
    }
    Ok(b2(x))
}

#[inline]
pub(crate) fn b2<T: Scalar>(x: T) -> T {
    x * x - x + T::from_ratio(1, 6)
}

/// `B2(r / N)` for every residue `r`, with `table[r] == table[N - r]` bit for bit.
///
/// The symmetry matters for tie-breaking: `z` and `N - z` must produce
/// identical sums, not sums that differ in the last place.
pub(crate) fn b2_table<T: Scalar>(n: usize) -> Vec<T> {
    let mut table = vec![T::zero(); n];
    for r in 0..n {
        let q = r.min(n - r);
        table[r] = b2(T::from_ratio(q as i64, n as i64));
    }
    table
}

#[inline]
pub(crate) fn residue(k: usize, z: usize, n: usize) -> usize {
    ((k as u64 * z as u64) % n as u64) as usize
}

/// `{r/N + delta}` for a residue `r` and a shift component in `[0, 1)`.
#[inline]
pub(crate) fn shifted_coordinate<T: Scalar>(r: usize, n: usize, delta: T) -> T {
    let v = T::from_ratio(r as i64, n as i64) + delta;
    if v >= T::one() {
        v - T::one()
    } else {
        v
    }
}

/// `A_{k,k',z}(delta) = ({kz/N + delta} - 1/2)({k'z/N + delta} - 1/2)`.
///
/// Indices follow the `1..=N` convention (`0` is also accepted and means `N`).
pub fn pair_kernel<T: Scalar>(k: usize, k2: usize, z: usize, n: usize, delta: T) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidRule(format!("point count {n} < 2")));
    }
    if k > n || k2 > n {
        return Err(Error::OutOfRange(format!("pair index ({k}, {k2}) for N = {n}")));
    }
    if z == 0 || z >= n {
        return Err(Error::OutOfRange(format!("generator {z} for N = {n}")));
    }
    check_shift_component(delta)?;
    let half = T::from_ratio(1, 2);
    let x = shifted_coordinate(residue(k, z, n), n, delta) - half;
    let y = shifted_coordinate(residue(k2, z, n), n, delta) - half;
    Ok(x * y)
}

fn check_shift_component<T: Scalar>(delta: T) -> Result<()> {
    if !delta.is_finite_value() {
        return Err(Error::NonFinite("shift component"));
    }
    if delta < T::zero() || delta >= T::one() {
        return Err(Error::OutOfRange(format!("shift component {delta:?}")));
    }
    Ok(())
}

/// Point count `N` and generating vector `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeRule {
    n: usize,
    z: Vec<usize>,
}

impl LatticeRule {
    pub fn new(n: usize, z: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidRule(format!("point count {n} < 2")));
        }
        if z.is_empty() {
            return Err(Error::InvalidRule("empty generating vector".into()));
        }
        if let Some((j, &zj)) = z.iter().enumerate().find(|(_, &zj)| zj == 0 || zj >= n) {
            return Err(Error::InvalidRule(format!(
                "component z_{} = {zj} not in 1..={}",
                j + 1,
                n - 1
            )));
        }
        Ok(Self { n, z })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// The rule restricted to its first `s` coordinates.
    pub fn prefix(&self, s: usize) -> Result<Self> {
        if s == 0 || s > self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s });
        }
        Ok(Self { n: self.n, z: self.z[..s].to_vec() })
    }
}

/// A shift whose components are odd multiples of `1/(2N)`, stored by index:
/// `delta_j = (2 m_j - 1) / (2N)` with `m_j` in `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfShift {
    n: usize,
    indices: Vec<usize>,
}

impl HalfShift {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidRule("point count 0".into()));
        }
        if let Some(&m) = indices.iter().find(|&&m| m == 0 || m > n) {
            return Err(Error::OutOfRange(format!("half-shift index {m} for N = {n}")));
        }
        Ok(Self { n, indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn component<T: Scalar>(&self, j: usize) -> T {
        half_shift_value(self.indices[j], self.n)
    }

    pub fn to_real<T: Scalar>(&self) -> RealShift<T> {
        RealShift(self.indices.iter().map(|&m| half_shift_value(m, self.n)).collect())
    }
}

/// `(2m - 1) / (2N)`.
#[inline]
pub fn half_shift_value<T: Scalar>(m: usize, n: usize) -> T {
    T::from_ratio(2 * m as i64 - 1, 2 * n as i64)
}

/// A general shift in `[0, 1)^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealShift<T>(Vec<T>);

impl<T: Scalar> RealShift<T> {
    pub fn new(components: Vec<T>) -> Result<Self> {
        for &c in &components {
            check_shift_component(c)?;
        }
        Ok(Self(components))
    }

    pub fn zero(s: usize) -> Self {
        Self(vec![T::zero(); s])
    }

    pub fn components(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn prefix(&self, s: usize) -> Self {
        Self(self.0[..s].to_vec())
    }
}

/// The `N` points `{k z / N + delta}` for `k = 1..=N`, in that order.
pub fn lattice_points<T: Scalar>(rule: &LatticeRule, shift: &RealShift<T>) -> Result<Vec<Vec<T>>> {
    if shift.dim() != rule.dim() {
        return Err(Error::DimensionMismatch { expected: rule.dim(), found: shift.dim() });
    }
    let n = rule.n();
    Ok((1..=n)
        .map(|k| {
            rule.z()
                .iter()
                .zip(shift.components())
                .map(|(&zj, &dj)| shifted_coordinate(residue(k, zj, n), n, dj))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::from_ratio(a, b)
    }

    #[test]
    fn frac_examples() {
        assert_eq!(frac(1.25).unwrap(), 0.25);
        assert_eq!(frac(-0.5).unwrap(), 0.5);
        assert_eq!(frac(3.0).unwrap(), 0.0);
        assert!(frac(f64::NAN).is_err());
        assert!(frac(f64::INFINITY).is_err());
        assert_eq!(frac(q(-7, 3)).unwrap(), q(2, 3));
    }

    #[test]
    fn frac_never_returns_one() {
        let x = -1e-20_f64;
        assert_eq!(frac(x).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli2_examples() {
        assert_eq!(bernoulli2(q(0, 1)).unwrap(), q(1, 6));
        assert_eq!(bernoulli2(q(1, 2)).unwrap(), q(-1, 12));
        assert_eq!(bernoulli2(q(1, 4)).unwrap(), q(-1, 48));
        assert!(bernoulli2(1.5_f64).is_err());
        assert!(bernoulli2(-0.1_f64).is_err());
    }

    #[test]
    fn pair_kernel_examples() {
        let v: f64 = pair_kernel(1, 2, 1, 4, 0.125).unwrap();
        assert!((v - -0.015625).abs() < 1e-15);
        assert_eq!(pair_kernel(4, 4, 1, 4, q(0, 1)).unwrap(), q(1, 4));
        assert_eq!(pair_kernel(1, 1, 1, 2, q(1, 4)).unwrap(), q(1, 16));
        assert!(pair_kernel(1, 5, 1, 4, 0.0_f64).is_err());
        assert!(pair_kernel(1, 1, 4, 4, 0.0_f64).is_err());
        assert!(pair_kernel(1, 1, 1, 4, 1.0_f64).is_err());
    }

    #[test]
    fn lattice_points_examples() {
        let rule = LatticeRule::new(2, vec![1]).unwrap();
        let pts = lattice_points(&rule, &RealShift::new(vec![0.25]).unwrap()).unwrap();
        assert_eq!(pts, vec![vec![0.75], vec![0.25]]);

        let rule = LatticeRule::new(4, vec![1]).unwrap();
        let pts = lattice_points(&rule, &RealShift::<f64>::zero(1)).unwrap();
        assert_eq!(pts, vec![vec![0.25], vec![0.5], vec![0.75], vec![0.0]]);

        let rule = LatticeRule::new(3, vec![1, 2]).unwrap();
        let pts = lattice_points(&rule, &RealShift::<Rational>::zero(2)).unwrap();
        assert_eq!(
            pts,
            vec![vec![q(1, 3), q(2, 3)], vec![q(2, 3), q(1, 3)], vec![q(0, 1), q(0, 1)]]
        );

        assert!(lattice_points(&rule, &RealShift::<f64>::zero(1)).is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(LatticeRule::new(1, vec![1]).is_err());
        assert!(LatticeRule::new(4, vec![]).is_err());
        assert!(LatticeRule::new(4, vec![1, 4]).is_err());
        assert!(LatticeRule::new(4, vec![0]).is_err());
        assert!(HalfShift::new(4, vec![0]).is_err());
        assert!(HalfShift::new(4, vec![5]).is_err());
        assert!(RealShift::new(vec![1.0_f64]).is_err());
    }

    #[test]
    fn half_shift_values_are_odd_multiples() {
        let h = HalfShift::new(4, vec![1, 2, 3, 4]).unwrap();
        let vals: Vec<Rational> = h.to_real().components().to_vec();
        assert_eq!(vals, vec![q(1, 8), q(3, 8), q(5, 8), q(7, 8)]);
    }

    #[test]
    fn b2_table_is_symmetric() {
        let t: Vec<f64> = b2_table(37);
        for r in 1..37 {
            assert_eq!(t[r].to_bits(), t[37 - r].to_bits());
        }
    }

    proptest! {
        #[test]
        fn bernoulli2_bounded_and_symmetric(x in 0.0f64..=1.0) {
            let v = bernoulli2(x).unwrap();
            prop_assert!(v.abs() <= 1.0 / 6.0 + 1e-16);
            prop_assert!((v - bernoulli2(1.0 - x).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn pair_kernel_symmetric(n in 2usize..40, k in 1usize..40, k2 in 1usize..40, z in 1usize..40, d in 0.0f64..1.0) {
            let (k, k2, z) = (k % n + 1, k2 % n + 1, z % (n - 1) + 1);
            let a = pair_kernel(k, k2, z, n, d).unwrap();
            let b = pair_kernel(k2, k, z, n, d).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.abs() <= 0.25);
        }

        #[test]
        fn reflected_points_match_reflected_rule(n in 2usize..24, raw in proptest::collection::vec((1usize..64, 0usize..64), 1..4)) {
            // Exact arithmetic so set comparison is meaningful.
            let z: Vec<usize> = raw.iter().map(|(z, _)| z % (n - 1) + 1).collect();
            let delta: Vec<Rational> = raw.iter().map(|(_, d)| q((*d % 64) as i64, 64)).collect();
            let rule = LatticeRule::new(n, z.clone()).unwrap();
            let shift = RealShift::new(delta.clone()).unwrap();
            let mut reflected: Vec<Vec<Rational>> = lattice_points(&rule, &shift).unwrap()
                .into_iter()
                .map(|p| p.into_iter().map(|x| frac(Rational::from_count(1) - x).unwrap()).collect())
                .collect();
            let rule2 = LatticeRule::new(n, z.iter().map(|zj| n - zj).collect()).unwrap();
            let shift2 = RealShift::new(delta.iter().map(|&d| frac(Rational::from_count(1) - d).unwrap()).collect()).unwrap();
            let mut direct = lattice_points(&rule2, &shift2).unwrap();
            reflected.sort();
            direct.sort();
            prop_assert_eq!(reflected, direct);
        }
    }
}
