use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Largest `ln|x|` that still converts to a finite `f64`.
const LN_F64_MAX: f64 = 709.782_712_893_384;

/// A real number stored as a sign and the natural logarithm of its magnitude.
///
/// Quantities such as `Γ(2n/r)` or `(nκ_n r / 2γc)^{2n/r}` leave the `f64` range long
/// before the ratios built from them do, so every constant of the model is carried
/// in this form and only converted at the end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, log_abs: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, log_abs: 0.0 };

    /// Builds a value from a sign in `{-1, 0, 1}` and `ln|x|`.
    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: sign.signum(), log_abs }
        }
    }

    /// Positive value `exp(ln)`.
    pub fn from_ln(ln: f64) -> Self {
        Self::new(1, ln)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, log_abs: x.abs().ln() }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `ln|x|`; negative infinity for zero.
    pub fn log_abs(self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// True when the magnitude exceeds `f64::MAX`.
    pub fn overflows(self) -> bool {
        self.sign != 0 && self.log_abs > LN_F64_MAX
    }

    /// Converts to `f64`, saturating at `±f64::MAX`. Check [`LogValue::overflows`]
    /// (or use [`LogValue::try_to_f64`]) when the saturation matters.
    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s if self.log_abs > LN_F64_MAX => f64::from(s) * f64::MAX,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    /// `None` when the value is not representable as a finite `f64`.
    pub fn try_to_f64(self) -> Option<f64> {
        if self.overflows() {
            None
        } else {
            Some(self.to_f64())
        }
    }

    /// `ln x` for a positive value.
    pub fn ln(self) -> f64 {
        debug_assert!(self.sign > 0, "ln of non-positive LogValue");
        self.log_abs
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.log_abs)
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogValue { sign: self.sign, log_abs: -self.log_abs }
    }

    /// `x^e` for `x > 0` (or `x = 0`, `e > 0`).
    pub fn powf(self, e: f64) -> Self {
        match self.sign {
            0 => Self::ZERO,
            1 => Self::from_ln(self.log_abs * e),
            _ => panic!("powf of a negative LogValue"),
        }
    }

    pub fn powi(self, e: i32) -> Self {
        let sign = if e % 2 == 0 { self.sign.abs() } else { self.sign };
        Self::new(sign, self.log_abs * f64::from(e))
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    /// `self · exp(shift)`, i.e. adds `shift` to the logarithm.
    pub fn scale_ln(self, shift: f64) -> Self {
        Self::new(self.sign, self.log_abs + shift)
    }
}

impl Default for LogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for LogValue {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.sign * rhs.sign, self.log_abs + rhs.log_abs)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogValue) -> LogValue {
        self * rhs.recip()
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue { sign: -self.sign, log_abs: self.log_abs }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= rhs.log_abs { (self, rhs) } else { (rhs, self) };
        let gap = small.log_abs - big.log_abs;
        if big.sign == small.sign {
            LogValue::new(big.sign, big.log_abs + gap.exp().ln_1p())
        } else if gap == 0.0 {
            LogValue::ZERO
        } else {
            LogValue::new(big.sign, big.log_abs + (-gap.exp_m1()).ln())
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &LogValue) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.log_abs.partial_cmp(&other.log_abs),
                _ => other.log_abs.partial_cmp(&self.log_abs),
            },
            ord => Some(ord),
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.try_to_f64() {
            Some(x) => write!(f, "{x}"),
            None => {
                let s = if self.sign < 0 { "-" } else { "" };
                write!(f, "{s}exp({})", self.log_abs)
            }
        }
    }
}
