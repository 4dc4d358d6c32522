//! Regularized incomplete beta function.

use super::gamma::ln_gamma;
use crate::error::{domain, Error, Result};

const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn betainc(a: f64, b: f64, x: f64) -> Result<f64> {
    betainc_complement(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with the complement `y = 1 - x` supplied by the caller, so that
/// `x` close to 1 keeps full relative accuracy in `y`.
pub fn betainc_complement(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(domain("betainc", format!("need a, b > 0 (a = {a}, b = {b})")));
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(domain("betainc", format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - continued_fraction(b, a, y, x)?)
    } else {
        continued_fraction(a, b, x, y)
    }
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b); converges
// quickly for x < (a + 1) / (a + b + 2).
fn continued_fraction(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    let ln_prefix = a * x.ln() + b * y.ln() - ln_beta(a, b);
    let prefix = ln_prefix.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() <= f64::EPSILON {
            return Ok(prefix * h);
        }
    }
    Err(Error::NoConvergence("incomplete beta continued fraction"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference() {
        // mpmath, 40 digits
        let table = [
            (2.0, 3.0, 0.4, 0.5248),
            (0.5, 50.5, 0.01, 0.685_115_238_549_180_380_846_3),
            (50.5, 0.5, 0.99, 0.314_884_761_450_819_619_153_7),
            (5000.5, 0.5, 0.9999, 0.317_286_310_185_545_459_536_7),
            (1.0, 0.5, 0.25, 0.133_974_596_215_561_353_236_3),
        ];
        for (a, b, x, want) in table {
            let got = betainc(a, b, x).unwrap();
            assert!((got - want).abs() < 1e-11 * want.max(1e-3), "I_{x}({a},{b}) = {got}, want {want}");
        }
    }

    #[test]
    fn endpoints_and_domain() {
        assert_eq!(betainc(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(betainc(2.0, 3.0, 1.0).unwrap(), 1.0);
        assert!((betainc(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!(betainc(0.0, 1.0, 0.5).is_err());
        assert!(betainc(1.0, 1.0, 1.5).is_err());
    }
}
