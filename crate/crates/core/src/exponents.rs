//! Exponent bookkeeping: conjugates, the Strichartz-type exponent `Q_p(r)`,
//! and the admissibility window of the generalized Strichartz estimate.
//!
//! Every relation comes in two flavors: `f64` for the numerics and exact
//! [`Rational64`] for the ledger checks.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `a'` with `1/a + 1/a' = 1`.
pub fn conjugate_exponent(a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::ExponentOutOfRange {
            name: "a",
            value: a,
            range: "a > 1",
        });
    }
    if a.is_infinite() {
        return Ok(1.0);
    }
    Ok(a / (a - 1.0))
}

pub fn conjugate_exponent_exact(a: Rational64) -> Result<Rational64> {
    if a <= Rational64::from_integer(1) {
        return Err(Error::ExponentOutOfRange {
            name: "a",
            value: ratio_to_f64(a),
            range: "a > 1",
        });
    }
    Ok(a / (a - 1))
}

/// `Q_p(r)` defined by `2/Q + 1/r = 1 - 1/p`.
pub fn q_exponent(p: f64, r: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::ExponentOutOfRange {
            name: "p",
            value: p,
            range: "p >= 1",
        });
    }
    if !(r >= 2.0) {
        return Err(Error::ExponentOutOfRange {
            name: "r",
            value: r,
            range: "r >= 2",
        });
    }
    let gap = 1.0 - 1.0 / p - 1.0 / r;
    if !(gap > 0.0) {
        return Err(Error::DegenerateExponent("1 - 1/p - 1/r must be positive"));
    }
    Ok(2.0 / gap)
}

pub fn q_exponent_exact(p: Rational64, r: Rational64) -> Result<Rational64> {
    let one = Rational64::from_integer(1);
    if p < one {
        return Err(Error::ExponentOutOfRange {
            name: "p",
            value: ratio_to_f64(p),
            range: "p >= 1",
        });
    }
    if r < Rational64::from_integer(2) {
        return Err(Error::ExponentOutOfRange {
            name: "r",
            value: ratio_to_f64(r),
            range: "r >= 2",
        });
    }
    let gap = one - p.recip() - r.recip();
    if gap <= Rational64::from_integer(0) {
        return Err(Error::DegenerateExponent("1 - 1/p - 1/r must be positive"));
    }
    Ok(Rational64::from_integer(2) / gap)
}

/// Is `0 < 1/Q_p(r) < min(1/4, 1/2 - 1/r)`? Outside `2 <= p < 4, r >= 2`
/// the answer is `false`.
pub fn admissibility_window(p: f64, r: f64) -> bool {
    if !(2.0..4.0).contains(&p) || !(r >= 2.0) {
        return false;
    }
    let inv_q = 0.5 * (1.0 - 1.0 / p - 1.0 / r);
    inv_q > 0.0 && inv_q < f64::min(0.25, 0.5 - 1.0 / r)
}

pub fn admissibility_window_exact(p: Rational64, r: Rational64) -> bool {
    let two = Rational64::from_integer(2);
    if p < two || p >= Rational64::from_integer(4) || r < two {
        return false;
    }
    let half = Rational64::new(1, 2);
    let inv_q = half * (Rational64::from_integer(1) - p.recip() - r.recip());
    let bound = std::cmp::min(Rational64::new(1, 4), half - r.recip());
    inv_q > Rational64::from_integer(0) && inv_q < bound
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The scalar exponents an experiment carries. Any subset may be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSet {
    pub p: Option<f64>,
    pub p0: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
}

impl ExponentSet {
    pub fn q_conjugate(&self) -> Option<Result<f64>> {
        self.q.map(conjugate_exponent)
    }

    /// `Q_p(r)` from the stored `p` and `r`.
    pub fn q_p_r(&self) -> Option<Result<f64>> {
        Some(q_exponent(self.p?, self.r?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert_eq!(conjugate_exponent(3.0).unwrap(), 1.5);
        assert!(conjugate_exponent(1.0).is_err());
        assert!(conjugate_exponent(0.5).is_err());
        // p0 = 3 - ε  ->  (3-ε)/(2-ε)
        let eps = q(1, 10);
        let p0 = Rational64::from_integer(3) - eps;
        assert_eq!(
            conjugate_exponent_exact(p0).unwrap(),
            p0 / (Rational64::from_integer(2) - eps)
        );
        assert_eq!(conjugate_exponent(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn ledger_values() {
        let i = Rational64::from_integer;
        assert_eq!(q_exponent_exact(i(2), i(6)).unwrap(), i(6));
        assert_eq!(q_exponent_exact(i(3), i(6)).unwrap(), i(4));
        assert_eq!(q_exponent_exact(i(3), i(4)).unwrap(), q(24, 5));
        assert_eq!(q_exponent_exact(i(2), i(4)).unwrap(), i(8));
        assert!((q_exponent(3.0, 4.0).unwrap() - 4.8).abs() < 1e-14);
    }

    #[test]
    fn q_exponent_errors() {
        assert!(matches!(
            q_exponent(2.0, 2.0),
            Err(Error::DegenerateExponent(_))
        ));
        assert!(matches!(
            q_exponent(0.5, 6.0),
            Err(Error::ExponentOutOfRange { name: "p", .. })
        ));
        assert!(matches!(
            q_exponent(2.0, 1.5),
            Err(Error::ExponentOutOfRange { name: "r", .. })
        ));
    }

    #[test]
    fn window_cases() {
        let i = Rational64::from_integer;
        // 1/Q_3(6) = 1/4 exactly, so the strict bound fails.
        assert!(!admissibility_window_exact(i(3), i(6)));
        assert!(!admissibility_window(3.0, 6.0));
        assert!(admissibility_window_exact(q(29, 10), i(6)));
        assert!(admissibility_window(2.9, 6.0));
        assert!(!admissibility_window_exact(i(2), i(2)));
        assert!(!admissibility_window(2.0, 2.0));
        // diagonal admissible pair
        assert!(admissibility_window(2.0, 6.0));
        assert!(!admissibility_window(4.0, 6.0));
    }

    proptest::proptest! {
        #[test]
        fn q_exponent_identity(p in 1.0f64..8.0, r in 2.0f64..20.0) {
            if let Ok(qq) = q_exponent(p, r) {
                let lhs = 2.0 / qq + 1.0 / r;
                proptest::prop_assert!((lhs - (1.0 - 1.0 / p)).abs() < 1e-14);
            }
        }

        #[test]
        fn conjugate_is_involution(a in 1.0001f64..50.0) {
            let b = conjugate_exponent(a).unwrap();
            let back = conjugate_exponent(b).unwrap();
            proptest::prop_assert!((back - a).abs() < 1e-9 * a * a);
        }
    }
}
