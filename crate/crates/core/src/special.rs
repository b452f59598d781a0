//! Small special-function helpers: Pochhammer symbols, binomials, compensated
//! summation and complex log-gamma.

use std::f64::consts::PI;

use crate::Complex64;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Rising factorial `(a)_n`.
pub fn poch(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |p, k| p * (a + k as f64))
}

/// `ln (a)_n` for `a > 0`.
pub fn ln_poch(a: f64, n: usize) -> f64 {
    (0..n).map(|k| (a + k as f64).ln()).sum()
}

pub fn factorial(n: usize) -> f64 {
    poch(1.0, n)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Neumaier (improved Kahan) compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Neumaier::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch-free `ln Γ(z)` for complex `z` (Lanczos, g = 7). Only the
/// real part is branch independent; callers use it for `|Γ(z)|`.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z)Γ(1-z) = π / sin(πz)
        let s = (z * PI).sin();
        return Complex64::from(PI).ln() - s.ln() - ln_gamma_complex(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::from(LANCZOS_P[0]);
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `ln |Γ(z)|`.
pub fn ln_abs_gamma_complex(z: Complex64) -> f64 {
    ln_gamma_complex(z).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_and_binomial() {
        assert_eq!(poch(3.0, 0), 1.0);
        assert_eq!(poch(3.0, 3), 60.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn complex_gamma_matches_real_axis() {
        for &x in &[0.3, 0.5, 1.0, 2.5, 7.25, 20.0] {
            let a = ln_abs_gamma_complex(Complex64::from(x));
            assert!((a - ln_gamma(x)).abs() < 1e-13 * (1.0 + ln_gamma(x).abs()), "x = {x}");
        }
    }

    #[test]
    fn complex_gamma_modulus_identities() {
        // |Γ(iy)|² = π/(y sinh πy), |Γ(1/2+iy)|² = π/cosh πy
        for &y in &[0.1, 0.7, 2.0, 5.0, 12.0] {
            let a = 2.0 * ln_abs_gamma_complex(Complex64::new(0.0, y));
            let b = (PI / (y * (PI * y).sinh())).ln();
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "iy, y = {y}");
            let a = 2.0 * ln_abs_gamma_complex(Complex64::new(0.5, y));
            let b = (PI / (PI * y).cosh()).ln();
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "1/2+iy, y = {y}");
        }
    }

    #[test]
    fn complex_gamma_recurrence() {
        // Γ(z+1) = z Γ(z)
        let z = Complex64::new(1.3, 2.7);
        let lhs = ln_gamma_complex(z + 1.0).exp();
        let rhs = z * ln_gamma_complex(z).exp();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
    }
}
