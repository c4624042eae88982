//! Hurwitz and Riemann zeta functions for real arguments.
//!
//! Euler–Maclaurin summation with a certified remainder bound; the bound
//! feeds the tail estimates of the numerical sum rules.

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Number of Euler–Maclaurin correction terms used by default.
pub const DEFAULT_CORRECTIONS: usize = 8;

/// A zeta value together with a bound on the Euler–Maclaurin remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue {
    pub value: f64,
    pub error_bound: f64,
}

/// `ζ(s, a) = Σ_{k≥0} (a + k)^{-s}` for real `s > 1`, `a > 0`.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<ZetaValue> {
    hurwitz_zeta_with(s, a, DEFAULT_CORRECTIONS)
}

/// As [`hurwitz_zeta`] with an explicit number of correction terms (4..=10).
pub fn hurwitz_zeta_with(s: f64, a: f64, corrections: usize) -> Result<ZetaValue> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(
            "s",
            format!("Hurwitz zeta needs s > 1, got {s}"),
        ));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(
            "a",
            format!("Hurwitz zeta needs a > 0, got {a}"),
        ));
    }
    if !(4..=BERNOULLI_EVEN.len()).contains(&corrections) {
        return Err(Error::domain(
            "corrections",
            format!("expected 4..=10 Euler-Maclaurin terms, got {corrections}"),
        ));
    }

    // Direct terms until the shifted argument is large enough for the
    // asymptotic corrections to be tiny.
    let shift = (s.ceil() as usize + 2 * corrections + 10).saturating_sub(a.floor() as usize);
    let mut acc = NeumaierSum::new();
    for k in 0..shift {
        acc += (a + k as f64).powf(-s);
    }
    let x = a + shift as f64;

    acc += x.powf(1.0 - s) / (s - 1.0);
    acc += 0.5 * x.powf(-s);

    // rising = s (s+1) ... (s+2j-2); factorial = (2j)!
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = x.powf(-s - 1.0);
    let inv_x2 = 1.0 / (x * x);
    for (j, &b) in BERNOULLI_EVEN.iter().take(corrections).enumerate() {
        if j > 0 {
            let m = (2 * j) as f64;
            rising *= (s + m - 1.0) * (s + m);
            factorial *= (m + 1.0) * (m + 2.0);
            power *= inv_x2;
        }
        acc += b / factorial * rising * power;
    }

    // |R_M| <= 4 (s)_{2M} / (2π)^{2M} · x^{1-s-2M} / (s + 2M - 1)
    let m2 = 2 * corrections;
    let mut poch = 1.0;
    for i in 0..m2 {
        poch *= s + i as f64;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let error_bound =
        4.0 * poch / two_pi.powi(m2 as i32) * x.powf(1.0 - s - m2 as f64) / (s + m2 as f64 - 1.0);

    Ok(ZetaValue {
        value: acc.value(),
        error_bound,
    })
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0).map(|z| z.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summation::compensated_sum;

    #[test]
    fn riemann_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0).unwrap() - pi * pi / 6.0).abs() < 1e-15);
        assert!((zeta(4.0).unwrap() - pi.powi(4) / 90.0).abs() < 1e-15);
        assert!((zeta(6.0).unwrap() - pi.powi(6) / 945.0).abs() < 1e-15);
        // Apéry's constant and ζ(7)
        assert!((zeta(3.0).unwrap() - 1.202_056_903_159_594_3).abs() < 1e-15);
        assert!((zeta(7.0).unwrap() - 1.008_349_277_381_922_8).abs() < 1e-15);
    }

    #[test]
    fn shift_identity() {
        // ζ(s, a) = a^{-s} + ζ(s, a + 1)
        for &(s, a) in &[(1.5, 0.3), (3.0, 2.0), (2.2, 17.5), (1.01, 1.0)] {
            let lhs = hurwitz_zeta(s, a).unwrap().value;
            let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0).unwrap().value;
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs(), "s={s} a={a}");
        }
    }

    #[test]
    fn half_integer_argument() {
        // ζ(s, 1/2) = (2^s - 1) ζ(s)
        let s = 3.0;
        let lhs = hurwitz_zeta(s, 0.5).unwrap().value;
        assert!((lhs - 7.0 * zeta(s).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn brute_force_tail() {
        let direct = compensated_sum((201..=2000).map(|n| (n as f64).powi(-4)));
        let z = hurwitz_zeta(4.0, 201.0).unwrap().value - hurwitz_zeta(4.0, 2001.0).unwrap().value;
        assert!((direct - z).abs() < 1e-20);
    }

    #[test]
    fn rejects_divergent_exponent() {
        assert!(hurwitz_zeta(1.0, 1.0).is_err());
        assert!(hurwitz_zeta(0.5, 1.0).is_err());
        assert!(hurwitz_zeta(2.0, 0.0).is_err());
    }

    #[test]
    fn error_bound_is_tiny_for_shifted_argument() {
        let z = hurwitz_zeta(3.0, 201.0).unwrap();
        assert!(z.error_bound < 1e-30);
        let z = hurwitz_zeta_with(1.5, 1.0, 4).unwrap();
        assert!(z.error_bound < 1e-10);
    }
}
