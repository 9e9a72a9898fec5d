//! The a-priori CBC error bound and the number-theoretic functions it uses.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weights::ProductWeights;

/// Number of explicit terms in [`zeta`] before the tail correction.
pub const DEFAULT_ZETA_TERMS: usize = 1_000_000;

/// Euler's totient by trial division.
pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1, "euler_phi(0) is undefined");
    let mut m = n;
    let mut phi = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if m > 1 {
        phi -= phi / m;
    }
    phi
}

/// Riemann zeta for real `x > 1`.
pub fn zeta<T: Real>(x: T) -> Result<T> {
    zeta_with_terms(x, DEFAULT_ZETA_TERMS)
}

/// `sum_{n < M} n^{-x}` plus the Euler-Maclaurin tail from `M` on.
pub fn zeta_with_terms<T: Real>(x: T, terms: usize) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite("zeta argument"));
    }
    if x <= T::one() {
        return Err(Error::OutOfRange(format!("zeta argument {x:?} (needs x > 1)")));
    }
    if x - T::one() < T::epsilon().sqrt() {
        return Err(Error::Unstable(format!("zeta pole: x - 1 = {:?}", x - T::one())));
    }
    let m = terms.max(10);
    // Smallest terms first.
    let head = (1..m).rev().fold(T::zero(), |acc, k| acc + T::from_count(k).powf(-x));
    let mm = T::from_count(m);
    let one = T::one();
    let two = T::from_count(2);
    let tail = mm.powf(one - x) / (x - one) + mm.powf(-x) / two + x * mm.powf(-x - one) / T::from_count(12)
        - x * (x + one) * (x + two) * mm.powf(-x - T::from_count(3)) / T::from_count(720);
    let z = head + tail;
    if !z.is_finite() {
        return Err(Error::Unstable("zeta overflowed".into()));
    }
    Ok(z)
}

/// Upper bound on the shift-averaged worst-case error of a CBC-constructed
/// generating vector:
///
/// `((1/phi(N)) sum_{u != {}} gamma_u^lambda t^{|u|})^{1/(2 lambda)}` with
/// `t = 2 zeta(2 lambda) / (2 pi^2)^lambda`, valid for `lambda` in `(1/2, 1]`.
pub fn theoretical_bound<T: Real>(n: usize, w: &ProductWeights<T>, s: usize, lambda: T) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidRule(format!("point count {n} < 2")));
    }
    if s == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    w.require(s)?;
    let half = T::from_ratio(1, 2);
    if !(lambda > half && lambda <= T::one()) {
        return Err(Error::OutOfRange(format!("lambda {lambda:?} (needs 1/2 < lambda <= 1)")));
    }
    let two = T::from_count(2);
    let pi2 = T::PI() * T::PI();
    let t = two * zeta(two * lambda)? / (two * pi2).powf(lambda);
    if !t.is_finite() {
        return Err(Error::Unstable(format!("lambda {lambda:?} too close to 1/2")));
    }
    let sum = w.as_slice()[..s].iter().fold(T::zero(), |d, &g| d + g.powf(lambda) * t * (T::one() + d));
    let phi = T::from_count(euler_phi(n as u64) as usize);
    let b = (sum / phi).powf(T::one() / (two * lambda));
    if !b.is_finite() {
        return Err(Error::Unstable("bound overflowed".into()));
    }
    Ok(b)
}
