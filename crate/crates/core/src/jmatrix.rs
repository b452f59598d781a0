//! J-matrix models: the Morse potential in a Laguerre basis, the tridiagonal
//! Jacobi-type differential operator `T`, the five-term operator `T^(α,β;κ)`
//! and its folding into a 2×2 block recurrence.

use nalgebra::DMatrix;

use crate::mvop::BlockRecurrence;
use crate::opcore::{eval_derivs, RecurrenceCoeffs};
use crate::special::{binomial, factorial, ln_abs_gamma_complex, ln_gamma, poch, Neumaier};
use crate::trisolve::{eigvals_tridiagonal, gauss_quadrature, DiscreteMeasure, SymTridiag};
use crate::{CMat, Complex64, Error, Result};

const MAX_TERMINATION: usize = 200;

fn c64(x: f64) -> Complex64 {
    Complex64::from(x)
}

/// Terminating `pFq(num; den; z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypTerminating {
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
    pub z: Complex64,
}

/// Value of a terminating series together with `Σ|terms|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypValue {
    pub value: Complex64,
    pub abs_sum: f64,
}

impl HypTerminating {
    pub fn new(num: Vec<Complex64>, den: Vec<Complex64>, z: Complex64) -> Self {
        Self { num, den, z }
    }

    pub fn real(num: &[f64], den: &[f64], z: f64) -> Self {
        Self::new(num.iter().map(|&v| c64(v)).collect(), den.iter().map(|&v| c64(v)).collect(), c64(z))
    }

    /// Smallest `n` with `−n` among the numerator parameters.
    pub fn termination(&self) -> Result<usize> {
        let n = self
            .num
            .iter()
            .filter(|a| a.im == 0.0 && a.re <= 0.0 && a.re == a.re.round())
            .map(|a| (-a.re) as usize)
            .min()
            .ok_or_else(|| Error::domain("series does not terminate: no nonpositive integer numerator parameter"))?;
        if n > MAX_TERMINATION {
            return Err(Error::domain(format!("termination index {n} exceeds {MAX_TERMINATION}")));
        }
        Ok(n)
    }

    pub fn eval(&self) -> Result<HypValue> {
        let n = self.termination()?;
        let mut re = Neumaier::new();
        let mut im = Neumaier::new();
        let mut abs_sum = 0.0;
        let mut term = c64(1.0);
        for k in 0..=n {
            re.add(term.re);
            im.add(term.im);
            abs_sum += term.norm();
            if k == n {
                break;
            }
            let kf = k as f64;
            let mut ratio = self.z / (kf + 1.0);
            for a in &self.num {
                ratio *= a + kf;
            }
            for b in &self.den {
                let d = b + kf;
                if d.norm() < 1e-14 {
                    return Err(Error::domain(format!(
                        "denominator parameter {b} hits a pole at k = {k} before termination at {n}"
                    )));
                }
                ratio /= d;
            }
            term *= ratio;
        }
        Ok(HypValue {
            value: Complex64::new(re.value(), im.value()),
            abs_sum,
        })
    }
}

/// Laguerre `L_n^{(α)}(x) = (α+1)_n/n! ₁F₁(−n; α+1; x)`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> Result<f64> {
    let h = HypTerminating::real(&[-(n as f64)], &[alpha + 1.0], x).eval()?;
    Ok(poch(alpha + 1.0, n) / factorial(n) * h.value.re)
}

/// Dual Hahn `R_n(λ(x); γ, δ, N) = ₃F₂(−n, −x, x+γ+δ+1; γ+1, −N; 1)`.
pub fn dual_hahn(n: usize, x: f64, gamma: f64, delta: f64, ncap: usize) -> Result<f64> {
    if n > ncap {
        return Err(Error::domain(format!("dual Hahn degree {n} exceeds N = {ncap}")));
    }
    let h = HypTerminating::real(
        &[-(n as f64), -x, x + gamma + delta + 1.0],
        &[gamma + 1.0, -(ncap as f64)],
        1.0,
    )
    .eval()?;
    Ok(h.value.re)
}

/// Continuous dual Hahn `S_n(x²; a, b, c) = (a+b)_n (a+c)_n ₃F₂(−n, a+ix, a−ix; a+b, a+c; 1)`.
/// `x2` may be negative (then `x` is imaginary and all parameters are real).
pub fn cdh(n: usize, x2: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    Ok(poch(a + b, n) * poch(a + c, n) * cdh_series(n, x2, a, b, c)?.value.re)
}

/// The bare `₃F₂(−n, a+ix, a−ix; a+b, a+c; 1)` with its absolute term sum.
pub fn cdh_series(n: usize, x2: f64, a: f64, b: f64, c: f64) -> Result<HypValue> {
    let x = c64(x2).sqrt();
    let i = Complex64::i();
    HypTerminating::new(
        vec![c64(-(n as f64)), a + i * x, a - i * x],
        vec![c64(a + b), c64(a + c)],
        c64(1.0),
    )
    .eval()
}

/// Gegenbauer `C_n^{(ν)}(x) = (2ν)_n/n! ₂F₁(−n, n+2ν; ν+½; (1−x)/2)`.
pub fn gegenbauer_hyp(n: usize, nu: f64, x: f64) -> Result<f64> {
    let h = HypTerminating::real(&[-(n as f64), n as f64 + 2.0 * nu], &[nu + 0.5], (1.0 - x) / 2.0).eval()?;
    Ok(poch(2.0 * nu, n) / factorial(n) * h.value.re)
}

/// Morse potential `q(x) = b²(e^{−2x} − 2e^{−x})` in the Laguerre basis `y_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseModel {
    b: f64,
    n_cap: usize,
}

impl MorseModel {
    /// Requires `b > 0` at distance at least `1e-8` from `½ + ℕ`.
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::domain(format!("b = {b} must be positive")));
        }
        let s = b - 0.5;
        if s > -1e-8 && (s - s.round()).abs() < 1e-8 {
            return Err(Error::domain(format!("b = {b} lies in 1/2 + N")));
        }
        Ok(Self {
            b,
            n_cap: (b + 0.5).floor() as usize,
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of bound states `N = #{n ∈ ℕ : n < b − ½}`.
    pub fn n_cap(&self) -> usize {
        self.n_cap
    }

    fn g(&self) -> f64 {
        2.0 * self.b - 2.0 * self.n_cap as f64
    }

    /// Orthonormal basis function `y_n(x)`.
    pub fn basis(&self, n: usize, x: f64) -> Result<f64> {
        let (b, g) = (self.b, self.g());
        let s = b - self.n_cap as f64 + 0.5;
        let ln_pre = s * (2.0 * b).ln() + 0.5 * (ln_gamma(n as f64 + 1.0) - ln_gamma(g + n as f64 + 1.0))
            - s * x
            - b * (-x).exp();
        Ok(ln_pre.exp() * laguerre(n, g, 2.0 * b * (-x).exp())?)
    }

    /// Entry `(k, k+1)`; also entry `(k+1, k)`.
    fn offdiag(&self, k: usize) -> f64 {
        let nc = self.n_cap as f64;
        let kf = k as f64;
        -(1.0 - nc + kf) * ((kf + 1.0) * (self.g() + kf + 1.0)).sqrt()
    }

    /// `(sub, diag, super)` of row `n` of the tridiagonal action.
    pub fn tridiag(&self, n: usize) -> (f64, f64, f64) {
        let (b, nc) = (self.b, self.n_cap as f64);
        let nf = n as f64;
        let g = self.g();
        let diag = -(nc - b - 0.5).powi(2) + (1.0 - nc + nf) * (2.0 * nf + g + 1.0) - nf;
        let sub = if n == 0 { 0.0 } else { self.offdiag(n - 1) };
        (sub, diag, self.offdiag(n))
    }

    /// Rows and columns `0..=m` assembled into a dense matrix.
    pub fn assembled(&self, m: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m + 1, m + 1);
        for n in 0..=m {
            let (sub, diag, sup) = self.tridiag(n);
            out[(n, n)] = diag;
            if n > 0 {
                out[(n, n - 1)] = sub;
            }
            if n < m {
                out[(n, n + 1)] = sup;
            }
        }
        out
    }

    /// `−(b − m − ½)²`, `m = 0..N−1`, ascending.
    pub fn bound_states(&self) -> Vec<f64> {
        (0..self.n_cap)
            .map(|m| -(self.b - m as f64 - 0.5).powi(2))
            .collect()
    }

    /// Eigenvalues of the `N×N` invariant block.
    pub fn bound_states_eigensolve(&self) -> Result<Vec<f64>> {
        if self.n_cap == 0 {
            return Ok(Vec::new());
        }
        let diag = (0..self.n_cap).map(|n| self.tridiag(n).1).collect();
        let off = (0..self.n_cap - 1).map(|n| self.tridiag(n).2).collect();
        eigvals_tridiagonal(&SymTridiag::new(diag, off)?)
    }

    /// `P_0..P_{N−1}` at `z` from the finite recurrence, `P_0 = 1`.
    pub fn finite_polys(&self, z: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_cap);
        if self.n_cap == 0 {
            return p;
        }
        p.push(1.0);
        for n in 0..self.n_cap - 1 {
            let (sub, diag, sup) = self.tridiag(n);
            let prev = if n == 0 { 0.0 } else { sub * p[n - 1] };
            p.push(((z - diag) * p[n] - prev) / sup);
        }
        p
    }

    /// `√((2b−2N+1)_n/n!) R_n(λ(N−1−m); 2b−2N, 0, N−1)`, `n < N`.
    pub fn dual_hahn_vector(&self, m: usize) -> Result<Vec<f64>> {
        self.check_index(m)?;
        let g = self.g();
        let x = (self.n_cap - 1 - m) as f64;
        (0..self.n_cap)
            .map(|n| Ok((poch(g + 1.0, n) / factorial(n)).sqrt() * dual_hahn(n, x, g, 0.0, self.n_cap - 1)?))
            .collect()
    }

    fn check_index(&self, m: usize) -> Result<()> {
        if m >= self.n_cap {
            return Err(Error::domain(format!("bound-state index {m} must be < N = {}", self.n_cap)));
        }
        Ok(())
    }

    /// `C = [binom(N−1, m) (2b−2N+1)_{N−1−m}]⁻¹`.
    pub fn expansion_constant(&self, m: usize) -> Result<f64> {
        self.check_index(m)?;
        let k = self.n_cap - 1 - m;
        Ok(1.0 / (binomial(self.n_cap - 1, m) * poch(self.g() + 1.0, k)))
    }

    /// `Σ_{n<N} R_n(λ(N−1−m)) L_n^{(2b−2N)}(z) − C z^{N−1−m} L_m^{(2b−2m−1)}(z)`
    /// and the sum of the magnitudes of all terms.
    pub fn expansion_defect(&self, m: usize, z: f64) -> Result<(f64, f64)> {
        self.check_index(m)?;
        let g = self.g();
        let k = self.n_cap - 1 - m;
        let mut lhs = Neumaier::new();
        let mut scale = 0.0;
        for n in 0..self.n_cap {
            let t = dual_hahn(n, k as f64, g, 0.0, self.n_cap - 1)? * laguerre(n, g, z)?;
            lhs.add(t);
            scale += t.abs();
        }
        let rhs = self.expansion_constant(m)? * z.powi(k as i32) * laguerre(m, 2.0 * self.b - 2.0 * m as f64 - 1.0, z)?;
        scale += rhs.abs();
        Ok(((lhs.value() - rhs).abs(), scale))
    }

    /// `(b+½, N−b+½, b−N+½)`.
    pub fn cdh_params(&self) -> (f64, f64, f64) {
        let (b, n) = (self.b, self.n_cap as f64);
        (b + 0.5, n - b + 0.5, b - n + 0.5)
    }

    /// Orthonormal `P_n(γ²) = S_n(γ²)/(n! √((N+1)_n (2b−N+1)_n))`.
    pub fn cdh_poly(&self, n: usize, x2: f64) -> Result<f64> {
        let (a, b, c) = self.cdh_params();
        let nc = self.n_cap as f64;
        Ok(cdh(n, x2, a, b, c)? / (factorial(n) * (poch(nc + 1.0, n) * poch(2.0 * self.b - nc + 1.0, n)).sqrt()))
    }

    /// `w(γ) = |Γ(b+½+iγ)Γ(N−b+½+iγ)Γ(b−N+½+iγ)/Γ(2iγ)|² / (2π N! Γ(2b−N+1))`.
    pub fn cdh_weight(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0) {
            return Err(Error::domain(format!("gamma = {gamma} must be positive")));
        }
        let (a, b, c) = self.cdh_params();
        let i = Complex64::new(0.0, gamma);
        let nc = self.n_cap as f64;
        let ln = 2.0
            * (ln_abs_gamma_complex(a + i) + ln_abs_gamma_complex(b + i) + ln_abs_gamma_complex(c + i)
                - ln_abs_gamma_complex(2.0 * i))
            - (2.0 * std::f64::consts::PI).ln()
            - ln_gamma(nc + 1.0)
            - ln_gamma(2.0 * self.b - nc + 1.0);
        let w = ln.exp();
        if !w.is_finite() {
            return Err(Error::domain(format!("weight out of range at gamma = {gamma}")));
        }
        Ok(w)
    }

    /// Gram matrix `∫ P_n P_m w dγ`, `n, m ≤ nmax`, by double-exponential
    /// quadrature on `(0, Γ)` with `Γ` grown until the integrand tail is negligible.
    pub fn cdh_gram(&self, nmax: usize, tol: f64) -> Result<DMatrix<f64>> {
        let envelope = |g: f64| -> Result<f64> {
            let p = (0..=nmax).map(|n| self.cdh_poly(n, g * g).map(f64::abs)).sum::<Result<f64>>()?;
            Ok(p * p * self.cdh_weight(g)?)
        };
        let mut cut = 8.0;
        while envelope(cut)? * cut > 1e-3 * tol {
            cut *= 1.5;
            if cut > 1e3 {
                return Err(Error::accuracy("weight tail does not decay", envelope(cut)?));
            }
        }
        let breaks = [0.0, 1.0, 3.0, 8.0];
        let mut segs: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
        segs.push((8.0, cut.max(8.0 + 1e-9)));
        let mut out = DMatrix::zeros(nmax + 1, nmax + 1);
        let mut worst: f64 = 0.0;
        for n in 0..=nmax {
            for m in n..=nmax {
                let f = |g: f64| {
                    if g <= 0.0 {
                        return 0.0;
                    }
                    match (self.cdh_poly(n, g * g), self.cdh_poly(m, g * g), self.cdh_weight(g)) {
                        (Ok(p), Ok(q), Ok(w)) => p * q * w,
                        _ => f64::NAN,
                    }
                };
                let mut total = 0.0;
                for &(lo, hi) in &segs {
                    let o = quadrature::double_exponential::integrate(f, lo, hi, 1e-3 * tol);
                    total += o.integral;
                    worst = worst.max(o.error_estimate);
                }
                if !total.is_finite() {
                    return Err(Error::accuracy(format!("weight integral ({n},{m}) is not finite"), f64::INFINITY));
                }
                out[(n, m)] = total;
                out[(m, n)] = total;
            }
        }
        if worst > tol {
            return Err(Error::accuracy("continuous dual Hahn quadrature", worst));
        }
        Ok(out)
    }

    /// Residual of the recurrence carried by rows `n ≥ N` (shifted by `N`),
    /// evaluated on the closed-form `P_n(x²)`. The scale uses the absolute
    /// series sums, so cancellation inside the ₃F₂ is not counted as error.
    pub fn cdh_recurrence_residual(&self, n: usize, x2: f64) -> Result<f64> {
        let row = self.n_cap + n;
        let (sub, diag, sup) = self.tridiag(row);
        let (a, b, c) = self.cdh_params();
        let nc = self.n_cap as f64;
        let p = |k: usize| -> Result<(f64, f64)> {
            let h = cdh_series(k, x2, a, b, c)?;
            let f = poch(a + b, k) * poch(a + c, k)
                / (factorial(k) * (poch(nc + 1.0, k) * poch(2.0 * self.b - nc + 1.0, k)).sqrt());
            Ok((f * h.value.re, (f * h.abs_sum).abs()))
        };
        let (pn, bn) = p(n)?;
        let (pu, bu) = p(n + 1)?;
        let (pd, bd) = if n == 0 { (0.0, 0.0) } else { p(n - 1)? };
        let r = x2 * pn - sup * pu - diag * pn - sub * pd;
        let scale = (x2.abs() + diag.abs()) * bn + sup.abs() * bu + sub.abs() * bd;
        Ok(r.abs() / scale)
    }
}

/// Gram-form weight `v v*` from two generator values.
pub fn gram_weight(g1: Complex64, g2: Complex64) -> CMat {
    let v = nalgebra::DVector::from_vec(vec![g1, g2]);
    &v * v.adjoint()
}

/// Tridiagonal operator `T = (1−x)(1−x²)∂² + (1−x)(β−α−1−(α+β+3)x)∂ + γ(1−x)`
/// in the orthonormal Jacobi basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTModel {
    alpha: f64,
    beta: f64,
    delta: Complex64,
}

impl JacobiTModel {
    /// `δ` real, or `Re δ = (β−α)/2` with arbitrary imaginary part.
    pub fn new(alpha: f64, beta: f64, delta: Complex64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::domain(format!("need alpha, beta > -1, got ({alpha}, {beta})")));
        }
        if delta.im != 0.0 && (delta.re - (beta - alpha) / 2.0).abs() > 1e-12 {
            return Err(Error::domain("complex delta needs Re delta = (beta - alpha)/2"));
        }
        Ok(Self { alpha, beta, delta })
    }

    pub fn real(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::new(alpha, beta, c64(delta))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    /// `γ = −(α+δ+1)(β−δ+1)`, real by construction.
    pub fn gamma(&self) -> f64 {
        -((self.alpha + self.delta + 1.0) * (self.beta - self.delta + 1.0)).re
    }

    /// Off-diagonal `a_n` and diagonal `b_n`.
    pub fn coeffs(&self, n: usize) -> (f64, f64) {
        let (al, be, d) = (self.alpha, self.beta, self.delta);
        let nf = n as f64;
        let s = 2.0 * nf + al + be;
        let up = ((nf + al + d + 1.0) * (nf + be - d + 1.0)).re;
        let a = 2.0 * up / (s + 2.0)
            * ((nf + 1.0) * (nf + al + 1.0) * (nf + be + 1.0) * (nf + al + be + 1.0) / ((s + 1.0) * (s + 3.0))).sqrt();
        let mut b = -2.0 * up * (nf + al + 1.0) * (nf + al + be + 1.0) / ((s + 1.0) * (s + 2.0));
        if n > 0 {
            let down = ((nf + al + d) * (nf + be - d)).re;
            b -= 2.0 * nf * (nf + be) * down / (s * (s + 1.0));
        }
        (a, b)
    }

    fn family(&self) -> Result<RecurrenceCoeffs> {
        RecurrenceCoeffs::jacobi(self.alpha, self.beta)
    }

    /// `(Tφ_n)(x)` for `n = 0..=nmax` at one point.
    pub fn apply(&self, nmax: usize, x: f64) -> Result<Vec<f64>> {
        let (p, d1, d2) = eval_derivs(&self.family()?, nmax, x)?;
        let (al, be) = (self.alpha, self.beta);
        let g = self.gamma();
        Ok((0..=nmax)
            .map(|n| {
                (1.0 - x) * ((1.0 - x * x) * d2[n] + (be - al - 1.0 - (al + be + 3.0) * x) * d1[n] + g * p[n])
            })
            .collect())
    }

    /// Matrix `⟨Tφ_n, φ_m⟩`, `n, m ≤ nmax`, with an `order`-point Gauss–Jacobi rule.
    pub fn projection_with_order(&self, nmax: usize, order: usize) -> Result<DMatrix<f64>> {
        if 2 * order < 2 * nmax + 2 {
            return Err(Error::accuracy(
                format!("quadrature order {order} cannot integrate degree {}", 2 * nmax + 1),
                f64::INFINITY,
            ));
        }
        let fam = self.family()?;
        let rule = gauss_quadrature(&fam, order, 1.0)?;
        project(&rule, nmax, |x| {
            let (p, _, _) = eval_derivs(&fam, nmax, x)?;
            Ok((self.apply(nmax, x)?, p))
        })
    }

    /// Matrix `⟨Tφ_n, φ_m⟩` with order `2·nmax + 4`.
    pub fn projection(&self, nmax: usize) -> Result<DMatrix<f64>> {
        if nmax > 60 {
            return Err(Error::domain("projection supports n, m <= 60"));
        }
        self.projection_with_order(nmax, 2 * nmax + 4)
    }

    /// Absolutely continuous part and the discrete candidates.
    pub fn spectrum(&self) -> JacobiTSpectrum {
        let (al, be, d) = (self.alpha, self.beta, self.delta);
        let edge = -0.5 * (al + 1.0).powi(2);
        let set = |start: f64| -> Vec<f64> {
            (0..)
                .map(|k| start + k as f64)
                .take_while(|&s| s < 0.0)
                .map(|s| edge + 2.0 * s * s)
                .collect()
        };
        let (first, second) = if d.im != 0.0 {
            (Vec::new(), Vec::new())
        } else {
            (set(0.5 * (1.0 + al) + d.re), set(0.5 * (1.0 - al) + be - d.re))
        };
        // the two starting points add up to 1 + β > 0, so at most one set is non-empty
        let discrete = if first.is_empty() { second } else { first };
        JacobiTSpectrum {
            continuous_upper: edge,
            discrete,
        }
    }

    /// Wilson parameters `(a, b, c, d)`.
    pub fn wilson_params(&self) -> [Complex64; 4] {
        let (al, be, d) = (self.alpha, self.beta, self.delta);
        [
            c64(0.5 * (1.0 + al)),
            0.5 * (1.0 + al) + d,
            0.5 * (1.0 - al) + be - d,
            c64(0.5 * (1.0 + al)),
        ]
    }

    /// `(|b_n/2 + A_n + C_n|, ||a_n|/2 − √(A_n C_{n+1})|)` against the Wilson recurrence.
    pub fn wilson_defect(&self, n: usize) -> (f64, f64) {
        let [a, b, c, d] = self.wilson_params();
        let s = a + b + c + d;
        let big_a = |k: f64| (k + s - 1.0) * (k + a + b) * (k + a + c) * (k + a + d) / ((2.0 * k + s - 1.0) * (2.0 * k + s));
        let big_c = |k: f64| {
            if k == 0.0 {
                c64(0.0)
            } else {
                k * (k + b + c - 1.0) * (k + b + d - 1.0) * (k + c + d - 1.0) / ((2.0 * k + s - 2.0) * (2.0 * k + s - 1.0))
            }
        };
        let nf = n as f64;
        let (an, bn) = self.coeffs(n);
        let d1 = (c64(bn / 2.0) + big_a(nf) + big_c(nf)).norm();
        let d2 = (an.abs() / 2.0 - (big_a(nf) * big_c(nf + 1.0)).sqrt().re).abs();
        (d1, d2)
    }
}

fn project(
    rule: &DiscreteMeasure,
    nmax: usize,
    eval: impl Fn(f64) -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<DMatrix<f64>> {
    let mut acc = vec![vec![Neumaier::new(); nmax + 1]; nmax + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (tp, p) = eval(x)?;
        for n in 0..=nmax {
            for m in 0..=nmax {
                acc[n][m].add(w * tp[n] * p[m]);
            }
        }
    }
    Ok(DMatrix::from_fn(nmax + 1, nmax + 1, |n, m| acc[n][m].value()))
}

/// Spectrum of `T`: `(−∞, continuous_upper)` plus `discrete`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiTSpectrum {
    pub continuous_upper: f64,
    pub discrete: Vec<f64>,
}

/// Five-term operator `T = (1−x²)²∂² + (1−x²)(β−α−(α+β+4)x)∂ + ρ(1−x²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveTermModel {
    alpha: f64,
    beta: f64,
    kappa2: f64,
}

impl FiveTermModel {
    /// `kappa2 = κ²`: nonnegative for real `κ`, negative for imaginary `κ`.
    pub fn new(alpha: f64, beta: f64, kappa2: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::domain(format!("need alpha, beta > -1, got ({alpha}, {beta})")));
        }
        if beta < alpha {
            return Err(Error::domain("five-term model needs beta >= alpha"));
        }
        if !kappa2.is_finite() {
            return Err(Error::domain("kappa^2 must be finite"));
        }
        Ok(Self { alpha, beta, kappa2 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn k_const(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0) * (a + b + 3.0))
    }

    pub fn rho(&self) -> f64 {
        (self.kappa2 - (self.alpha + self.beta + 3.0).powi(2)) / 4.0
    }

    /// `Λ_n = −n(n+α+β+3)`.
    pub fn lambda(&self, n: i64) -> f64 {
        let nf = n as f64;
        -nf * (nf + self.alpha + self.beta + 3.0)
    }

    /// `(α_n, β_n, γ_n)` with `φ_n = α_n Φ_n + β_n Φ_{n−1} + γ_n Φ_{n−2}`.
    pub fn connection(&self, n: usize) -> (f64, f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        let sk = 2.0 / self.k_const().sqrt();
        let nf = n as f64;
        let s = a + b + 2.0 * nf;
        let al = sk / (s + 2.0)
            * ((a + nf + 1.0) * (b + nf + 1.0) * (nf + a + b + 1.0) * (nf + a + b + 2.0) / ((s + 1.0) * (s + 3.0))).sqrt();
        let be = if n > 0 {
            -sk * (b - a) * (nf * (nf + a + b + 1.0)).sqrt() / (s * (s + 2.0))
        } else {
            0.0
        };
        let ga = if n > 1 {
            -sk / s * (nf * (nf - 1.0) * (a + nf) * (b + nf) / ((s - 1.0) * (s + 1.0))).sqrt()
        } else {
            0.0
        };
        (al, be, ga)
    }

    /// `(a_n, b_n, c_n)` of `T f_n = a_n f_{n+2} + b_n f_{n+1} + c_n f_n + b̄_{n−1} f_{n−1} + a_{n−2} f_{n−2}`.
    pub fn coeffs(&self, n: usize) -> (f64, f64, f64) {
        let k = self.k_const();
        let rho = self.rho();
        let ni = n as i64;
        let l = |j: i64| self.lambda(j) + rho;
        let (an, bn, gn) = self.connection(n);
        let a = k * an * self.connection(n + 2).2 * l(ni);
        let b = k * an * self.connection(n + 1).1 * l(ni) + k * bn * self.connection(n + 1).2 * l(ni - 1);
        let c = k * an * an * l(ni) + k * bn * bn * l(ni - 1) + k * gn * gn * l(ni - 2);
        (a, b, c)
    }

    fn family(&self) -> Result<RecurrenceCoeffs> {
        RecurrenceCoeffs::jacobi(self.alpha, self.beta)
    }

    fn shifted(&self) -> Result<RecurrenceCoeffs> {
        RecurrenceCoeffs::jacobi(self.alpha + 1.0, self.beta + 1.0)
    }

    /// `|φ_n(x) − α_nΦ_n(x) − β_nΦ_{n−1}(x) − γ_nΦ_{n−2}(x)|` for `n = 0..=nmax`.
    pub fn connection_defects(&self, nmax: usize, x: f64) -> Result<Vec<f64>> {
        let (p, _, _) = eval_derivs(&self.family()?, nmax, x)?;
        let (q, _, _) = eval_derivs(&self.shifted()?, nmax, x)?;
        Ok((0..=nmax)
            .map(|n| {
                let (a, b, g) = self.connection(n);
                let mut r = a * q[n];
                if n >= 1 {
                    r += b * q[n - 1];
                }
                if n >= 2 {
                    r += g * q[n - 2];
                }
                (p[n] - r).abs()
            })
            .collect())
    }

    /// `(Tφ_n)(x)`, `n = 0..=nmax`.
    pub fn apply(&self, nmax: usize, x: f64) -> Result<Vec<f64>> {
        let (p, d1, d2) = eval_derivs(&self.family()?, nmax, x)?;
        let (a, b) = (self.alpha, self.beta);
        let w = 1.0 - x * x;
        let rho = self.rho();
        Ok((0..=nmax)
            .map(|n| w * (w * d2[n] + (b - a - (a + b + 4.0) * x) * d1[n] + rho * p[n]))
            .collect())
    }

    /// Matrix `⟨Tφ_n, φ_m⟩`, `n, m ≤ nmax`.
    pub fn projection(&self, nmax: usize) -> Result<DMatrix<f64>> {
        if nmax > 60 {
            return Err(Error::domain("projection supports n, m <= 60"));
        }
        let fam = self.family()?;
        let rule = gauss_quadrature(&fam, nmax + 4, 1.0)?;
        project(&rule, nmax, |x| {
            let (p, _, _) = eval_derivs(&fam, nmax, x)?;
            Ok((self.apply(nmax, x)?, p))
        })
    }

    /// Scalar five-term solution `u_0..u_{len−1}` at `λ` from seeds `(u_0, u_1)`.
    pub fn scalar_solution(&self, lambda: Complex64, u0: Complex64, u1: Complex64, len: usize) -> Vec<Complex64> {
        five_term_solution(|n| self.coeffs(n), lambda, u0, u1, len)
    }

    /// Folded 2×2 block recurrence with `len` blocks.
    pub fn fold(&self, len: usize) -> Result<BlockRecurrence> {
        let m = 2 * len + 2;
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut c = Vec::with_capacity(m);
        for n in 0..m {
            let (an, bn, cn) = self.coeffs(n);
            a.push(an);
            b.push(c64(bn));
            c.push(cn);
        }
        fold_to_block(&a, &b, &c, len)
    }
}

/// Generates `u_{n+2}` from `λu_n = a_n u_{n+2} + b_n u_{n+1} + c_n u_n + b̄_{n−1} u_{n−1} + a_{n−2} u_{n−2}`.
pub fn five_term_solution(
    coeffs: impl Fn(usize) -> (f64, f64, f64),
    lambda: Complex64,
    u0: Complex64,
    u1: Complex64,
    len: usize,
) -> Vec<Complex64> {
    let mut u = vec![u0, u1];
    let mut n = 0;
    while u.len() < len {
        let (an, bn, cn) = coeffs(n);
        let mut rhs = lambda * u[n] - bn * u[n + 1] - cn * u[n];
        if n >= 1 {
            rhs -= coeffs(n - 1).1 * u[n - 1];
        }
        if n >= 2 {
            rhs -= coeffs(n - 2).0 * u[n - 2];
        }
        u.push(rhs / an);
        n += 1;
    }
    u.truncate(len);
    u
}

/// `A_n = [[a_{2n}, 0], [b_{2n+1}, a_{2n+1}]]`, `B_n = [[c_{2n}, b_{2n}], [b̄_{2n}, c_{2n+1}]]`, `M_0 = I`.
pub fn fold_to_block(a: &[f64], b: &[Complex64], c: &[f64], len: usize) -> Result<BlockRecurrence> {
    let need = 2 * len + 2;
    if a.len() < need || b.len() < need || c.len() < need {
        return Err(Error::domain(format!("folding {len} blocks needs {need} scalar coefficients")));
    }
    if let Some(k) = a[..need].iter().position(|&v| v == 0.0) {
        return Err(Error::domain(format!("fold: a_{k} = 0 (invariant subspace)")));
    }
    let mut ab = Vec::with_capacity(len);
    let mut bb = Vec::with_capacity(len);
    for n in 0..len {
        let (e, o) = (2 * n, 2 * n + 1);
        ab.push(CMat::from_row_slice(2, 2, &[c64(a[e]), c64(0.0), b[o], c64(a[o])]));
        bb.push(CMat::from_row_slice(2, 2, &[c64(c[e]), b[e], b[e].conj(), c64(c[o])]));
    }
    BlockRecurrence::new(ab, bb, CMat::identity(2, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyp_basics() {
        assert_eq!(laguerre(0, 0.7, 3.0).unwrap(), 1.0);
        assert!((laguerre(1, 0.5, 2.0).unwrap() + 0.5).abs() < 1e-15);
        // L_2^{(a)}(x) = ((a+1)(a+2) - 2(a+2)x + x²)/2
        let (a, x) = (0.3, 1.7);
        let l2 = ((a + 1.0) * (a + 2.0) - 2.0 * (a + 2.0) * x + x * x) / 2.0;
        assert!((laguerre(2, a, x).unwrap() - l2).abs() < 1e-14);
        assert!(HypTerminating::real(&[0.5], &[1.0], 0.3).eval().is_err());
        assert!(HypTerminating::real(&[-3.0], &[-1.0], 0.3).eval().is_err());
        for n in 0..6 {
            let v = gegenbauer_hyp(n, 1.3, 0.4).unwrap();
            let r = crate::mvop::gegenbauer_scalar(n, 1.3, 0.4);
            assert!((v - r).abs() < 1e-13 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn cdh_recurrence() {
        // −(a²+x²) S̃_n = A_n S̃_{n+1} − (A_n + C_n) S̃_n + C_n S̃_{n−1}
        let m = MorseModel::new(2.2).unwrap();
        let (a, b, c) = m.cdh_params();
        for &x2 in &[0.3, 1.7, 6.0] {
            let s = |n: usize| cdh_series(n, x2, a, b, c).unwrap();
            for n in 1..=30 {
                let nf = n as f64;
                let an = (nf + a + b) * (nf + a + c);
                let cn = nf * (nf + b + c - 1.0);
                let (s0, s1, sm) = (s(n), s(n + 1), s(n - 1));
                let r = (a * a + x2) * s0.value.re + an * s1.value.re - (an + cn) * s0.value.re + cn * sm.value.re;
                let scale = (a * a + x2 + an + cn) * s0.abs_sum + an * s1.abs_sum + cn * sm.abs_sum;
                assert!(r.abs() < 1e-10 * scale, "n = {n}, x2 = {x2}: {r:e} vs {scale:e}");
            }
        }
    }

    #[test]
    fn morse_rows() {
        let m = MorseModel::new(2.2).unwrap();
        assert_eq!(m.n_cap(), 2);
        assert_eq!(m.tridiag(2).0, 0.0);
        assert_eq!(m.tridiag(1).2, 0.0);
        let big = MorseModel::new(3.7).unwrap().assembled(20);
        assert_eq!(big, big.transpose());
        assert!(MorseModel::new(2.5).is_err());
        assert!(MorseModel::new(0.0).is_err());
        assert_eq!(MorseModel::new(0.4).unwrap().bound_states(), Vec::<f64>::new());
    }

    #[test]
    fn morse_bound_states_small() {
        let m = MorseModel::new(2.2).unwrap();
        let f = m.bound_states();
        assert!((f[0] + 2.89).abs() < 1e-12 && (f[1] + 0.49).abs() < 1e-12);
        let e = m.bound_states_eigensolve().unwrap();
        for (x, y) in e.iter().zip(&f) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn morse_single_bound_state() {
        let m = MorseModel::new(1.2).unwrap();
        assert_eq!(m.n_cap(), 1);
        assert_eq!(m.expansion_constant(0).unwrap(), 1.0);
        let (r, s) = m.expansion_defect(0, 1.3).unwrap();
        assert!(r < 1e-14 * s);
    }

    #[test]
    fn morse_basis_orthonormal() {
        let m = MorseModel::new(2.2).unwrap();
        for (n, k) in [(0, 0), (1, 1), (2, 2), (0, 2), (1, 3)] {
            let o = quadrature::double_exponential::integrate(
                |x| m.basis(n, x).unwrap() * m.basis(k, x).unwrap(),
                -6.0,
                40.0,
                1e-12,
            );
            let want = if n == k { 1.0 } else { 0.0 };
            assert!((o.integral - want).abs() < 1e-8, "({n},{k}) = {}", o.integral);
        }
    }

    #[test]
    fn jacobi_t_vanishing_a0() {
        let t = JacobiTModel::real(0.5, 0.5, -1.5).unwrap();
        assert_eq!(t.coeffs(0).0, 0.0);
    }

    #[test]
    fn jacobi_t_spectrum_sets() {
        let t = JacobiTModel::real(0.0, 0.0, -3.0).unwrap();
        let s = t.spectrum();
        assert_eq!(s.continuous_upper, -0.5);
        let want: Vec<f64> = (0..3).map(|k| -0.5 + 2.0 * (-2.5 + k as f64).powi(2)).collect();
        assert_eq!(s.discrete, want);
        let c = JacobiTModel::new(0.2, 0.8, Complex64::new(0.3, 1.1)).unwrap();
        assert!(c.spectrum().discrete.is_empty());
        assert!(JacobiTModel::new(0.2, 0.8, Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn jacobi_t_growth() {
        let t = JacobiTModel::real(0.3, 0.8, 0.25).unwrap();
        let (n1, n2) = (2000.0f64, 4000.0);
        let slope = (t.coeffs(4000).0.ln() - t.coeffs(2000).0.ln()) / (n2 / n1).ln();
        assert!((slope - 2.0).abs() < 0.05);
    }

    #[test]
    fn five_term_symmetric_beta_zero() {
        let f = FiveTermModel::new(0.4, 0.4, 1.0).unwrap();
        for n in 0..10 {
            assert_eq!(f.connection(n).1, 0.0);
        }
        assert!(FiveTermModel::new(0.8, 0.3, 0.0).is_err());
    }

    #[test]
    fn fold_trivial_streams() {
        let a = vec![1.0; 8];
        let b = vec![c64(0.0); 8];
        let c = vec![0.0; 8];
        let r = fold_to_block(&a, &b, &c, 3).unwrap();
        assert_eq!(r.a(1), &CMat::identity(2, 2));
        assert_eq!(r.b(2).norm(), 0.0);
        let mut z = a.clone();
        z[3] = 0.0;
        assert!(matches!(fold_to_block(&z, &b, &c, 3), Err(Error::Domain(m)) if m.contains("a_3")));
    }

    #[test]
    fn gram_weight_rank_one() {
        let w = gram_weight(Complex64::new(0.3, -1.0), c64(2.0));
        assert!(w.determinant().norm() < 1e-14);
        assert!(w.trace().re > 0.0);
    }
}
