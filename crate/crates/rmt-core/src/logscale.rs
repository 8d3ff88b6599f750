//! Sign + log-magnitude arithmetic.
//!
//! Normalization constants, moment-matrix determinants and joint densities
//! span hundreds of orders of magnitude, so everything that can over- or
//! underflow is carried as a [`LogScaled`] value: an exact sign together
//! with the natural log of the absolute value.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number stored as `sign * exp(log_abs)`.
///
/// `sign == 0` iff `log_abs == -inf`; multiplication is exact in sign and
/// additive in `log_abs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScaled {
    sign: i8,
    log_abs: f64,
}

impl LogScaled {
    pub const ZERO: LogScaled = LogScaled {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogScaled = LogScaled {
        sign: 1,
        log_abs: 0.0,
    };

    pub fn new(sign: i8, log_abs: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogScaled { sign, log_abs }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        debug_assert!(!x.is_nan());
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScaled {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    /// e^x as a LogScaled value (never overflows).
    pub fn from_exp(x: f64) -> Self {
        LogScaled { sign: 1, log_abs: x }
    }

    /// x^p with the 0^0 = 1 convention; sign follows parity of `p` for x < 0.
    pub fn from_powi(x: f64, p: i64) -> Self {
        if p == 0 {
            return Self::ONE;
        }
        if x == 0.0 {
            return if p > 0 { Self::ZERO } else { LogScaled { sign: 1, log_abs: f64::INFINITY } };
        }
        let sign = if x > 0.0 || p % 2 == 0 { 1 } else { -1 };
        LogScaled {
            sign,
            log_abs: p as f64 * x.abs().ln(),
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(&self) -> bool {
        self.sign == 0 || self.log_abs.is_finite()
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn abs(&self) -> Self {
        LogScaled {
            sign: self.sign.abs(),
            log_abs: self.log_abs,
        }
    }

    pub fn recip(&self) -> Self {
        LogScaled {
            sign: self.sign,
            log_abs: -self.log_abs,
        }
    }

    pub fn powi(&self, p: i64) -> Self {
        if self.sign == 0 {
            return if p > 0 { Self::ZERO } else { LogScaled { sign: 1, log_abs: f64::INFINITY } };
        }
        let sign = if self.sign > 0 || p % 2 == 0 { 1 } else { -1 };
        LogScaled {
            sign,
            log_abs: self.log_abs * p as f64,
        }
    }

    /// Compare absolute values.
    pub fn abs_gt(&self, other: &Self) -> bool {
        self.log_abs > other.log_abs
    }
}

impl Mul for LogScaled {
    type Output = LogScaled;
    fn mul(self, rhs: Self) -> Self {
        let sign = self.sign * rhs.sign;
        if sign == 0 {
            Self::ZERO
        } else {
            LogScaled {
                sign,
                log_abs: self.log_abs + rhs.log_abs,
            }
        }
    }
}

impl Div for LogScaled {
    type Output = LogScaled;
    fn div(self, rhs: Self) -> Self {
        debug_assert!(rhs.sign != 0, "division by LogScaled zero");
        let sign = self.sign * rhs.sign;
        if sign == 0 {
            Self::ZERO
        } else {
            LogScaled {
                sign,
                log_abs: self.log_abs - rhs.log_abs,
            }
        }
    }
}

impl Neg for LogScaled {
    type Output = LogScaled;
    fn neg(self) -> Self {
        LogScaled {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}

impl Add for LogScaled {
    type Output = LogScaled;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.log_abs - big.log_abs; // <= 0
        if self.sign == rhs.sign {
            LogScaled {
                sign: big.sign,
                log_abs: big.log_abs + d.exp().ln_1p(),
            }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            // log(1 - e^d) for d < 0
            let corr = (-d.exp()).ln_1p();
            LogScaled::new(big.sign, big.log_abs + corr)
        }
    }
}

impl Sub for LogScaled {
    type Output = LogScaled;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl std::iter::Product for LogScaled {
    fn product<I: Iterator<Item = LogScaled>>(iter: I) -> Self {
        iter.fold(LogScaled::ONE, |a, b| a * b)
    }
}

impl std::iter::Sum for LogScaled {
    fn sum<I: Iterator<Item = LogScaled>>(iter: I) -> Self {
        iter.fold(LogScaled::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_invariant() {
        assert_eq!(LogScaled::from_f64(0.0).sign(), 0);
        assert_eq!(LogScaled::from_f64(0.0).log_abs(), f64::NEG_INFINITY);
        assert!(LogScaled::new(0, 3.0).is_zero());
    }

    #[test]
    fn powi_zero_exponent_is_one() {
        assert_eq!(LogScaled::from_powi(0.0, 0), LogScaled::ONE);
        assert_eq!(LogScaled::from_powi(-2.0, 3).sign(), -1);
        assert_eq!(LogScaled::from_powi(-2.0, 2).sign(), 1);
    }

    #[test]
    fn add_opposite_equal_is_zero() {
        let a = LogScaled::from_f64(3.25);
        assert!((a + (-a)).is_zero());
    }

    proptest! {
        #[test]
        fn mul_matches_f64(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let p = (LogScaled::from_f64(a) * LogScaled::from_f64(b)).to_f64();
            prop_assert!((p - a * b).abs() <= 1e-10 * (a * b).abs().max(1e-300));
        }

        #[test]
        fn add_matches_f64(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let s = (LogScaled::from_f64(a) + LogScaled::from_f64(b)).to_f64();
            prop_assert!((s - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()).max(1e-300));
        }

        #[test]
        fn mul_exact_in_log(la in -500f64..500.0, lb in -500f64..500.0) {
            let a = LogScaled::new(1, la);
            let b = LogScaled::new(-1, lb);
            let p = a * b;
            prop_assert_eq!(p.sign(), -1);
            prop_assert_eq!(p.log_abs(), la + lb);
        }
    }
}
