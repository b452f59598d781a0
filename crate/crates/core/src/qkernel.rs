//! q-series primitives and the continuous q⁻¹-Hermite operator on ℓ²(ℤ),
//! `L e_l = a_l e_{l+1} + b_l e_l + a_{l-1} e_{l-1}`.

use nalgebra::DMatrix;

use crate::mvop::BlockRecurrence;
use crate::special::neumaier_sum;
use crate::trisolve::DiscreteMeasure;
use crate::{CMat, Complex64, Error, Result};

const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 4000;

fn c64(x: f64) -> Complex64 {
    Complex64::from(x)
}

/// Finite q-shifted factorial `(a;q)_n`.
pub fn qpoch(a: Complex64, q: f64, n: usize) -> Complex64 {
    let mut p = c64(1.0);
    let mut qk = 1.0;
    for _ in 0..n {
        p *= 1.0 - a * qk;
        qk *= q;
    }
    p
}

/// `(a;q)_n` for any integer `n`, with `(a;q)_{-n} = 1/(aq^{-n};q)_n`.
pub fn qpoch_int(a: Complex64, q: f64, n: i64) -> Result<Complex64> {
    if n >= 0 {
        return Ok(qpoch(a, q, n as usize));
    }
    let m = n.unsigned_abs() as usize;
    let d = qpoch(a * q.powi(n as i32), q, m);
    if d.norm() == 0.0 {
        return Err(Error::domain(format!("(a;q)_{n} has a pole")));
    }
    Ok(1.0 / d)
}

/// Infinite product `(a;q)_∞`, truncated once `|a qᵏ| < 1e-17`.
pub fn qpoch_inf(a: Complex64, q: f64) -> Result<Complex64> {
    if !(q.abs() < 1.0) {
        return Err(Error::domain(format!("(a;q)_inf needs |q| < 1, got q = {q}")));
    }
    let mut p = c64(1.0);
    let mut f = a;
    loop {
        p *= 1.0 - f;
        if f.norm() < SERIES_REL_TOL || p.norm() == 0.0 {
            return Ok(p);
        }
        f *= q;
    }
}

/// Real convenience wrapper for `(a;q)_∞`.
pub fn qpoch_inf_real(a: f64, q: f64) -> Result<f64> {
    Ok(qpoch_inf(c64(a), q)?.re)
}

/// `₀φ₁(−; b; q, z) = Σ q^{n(n-1)} zⁿ / ((q;q)_n (b;q)_n)`.
pub fn phi01(b: Complex64, q: f64, z: Complex64) -> Result<Complex64> {
    let mut sum = c64(0.0);
    let mut term = c64(1.0);
    let mut q2n = 1.0;
    let mut qn1 = q;
    let mut bqn = b;
    for _ in 0..SERIES_MAX_TERMS {
        sum += term;
        if term.norm() <= SERIES_REL_TOL * sum.norm() || term.norm() == 0.0 {
            return Ok(sum);
        }
        let den = (1.0 - qn1) * (1.0 - bqn);
        if den.norm() == 0.0 {
            return Err(Error::domain("0phi1 denominator parameter hits a pole"));
        }
        term *= z * q2n / den;
        q2n *= q * q;
        qn1 *= q;
        bqn *= q;
    }
    Err(Error::accuracy("0phi1 series did not converge", term.norm() / sum.norm()))
}

/// Parameters `0 < q < 1`, `q < α ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    alpha: f64,
}

impl QParams {
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("q = {q} must lie in (0,1)")));
        }
        if !(alpha > q && alpha <= 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} must lie in (q,1] = ({q},1]")));
        }
        Ok(Self { q, alpha })
    }

    /// Same operator with `α` outside `(q,1]`; used for the `α ↦ 1/α` and
    /// `α ↦ αq` relations.
    pub fn unchecked(q: f64, alpha: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0 && alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("need 0 < q < 1 and alpha > 0, got ({q}, {alpha})")));
        }
        Ok(Self { q, alpha })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn qp(&self, k: i64) -> f64 {
        self.q.powi(k as i32)
    }

    /// `1 + α² q^k` computed without overflow in the intermediate product.
    fn one_plus(&self, k: f64) -> f64 {
        1.0 + self.alpha * self.alpha * self.q.powf(k)
    }
}

/// Coefficients `(a_l, b_l)` of the q⁻¹-Hermite operator.
pub fn asc_coeffs(p: &QParams, l: i64) -> (f64, f64) {
    let (q, al2) = (p.q, p.alpha * p.alpha);
    let lf = l as f64;
    let a = al2 * q.powf(2.0 * lf + 0.5) / p.one_plus(2.0 * lf + 1.0)
        / p.one_plus(2.0 * lf).sqrt()
        / p.one_plus(2.0 * lf + 2.0).sqrt();
    let x = al2 * q.powf(2.0 * lf - 1.0);
    let b = x / (1.0 + x) * (1.0 + q) / p.one_plus(2.0 * lf + 1.0);
    (a, b)
}

/// `ln(1 + α² q^k)`, stable for large and small `α² q^k`.
fn ln_one_plus(p: &QParams, k: i64) -> f64 {
    let t = 2.0 * p.alpha.ln() + k as f64 * p.q.ln();
    if t < 0.0 {
        t.exp().ln_1p()
    } else {
        t + (-t).exp().ln_1p()
    }
}

/// `ln C_l(α)` with `C_l = α^{2l} q^{l²-l/2} √(1+α²q^{2l}) / (-α²q;q)_{2l}`.
pub fn ln_c_l(p: &QParams, l: i64) -> f64 {
    let lf = l as f64;
    let mut lnpoch = 0.0;
    if l >= 0 {
        for k in 0..2 * l {
            lnpoch += ln_one_plus(p, 1 + k);
        }
    } else {
        let m = -2 * l;
        for k in 0..m {
            lnpoch -= ln_one_plus(p, 1 - m + k);
        }
    }
    2.0 * lf * p.alpha.ln() + (lf * lf - 0.5 * lf) * p.q.ln() + 0.5 * ln_one_plus(p, 2 * l) - lnpoch
}

/// Solution of the eigenvalue equation square summable at `+∞`:
/// `(φ_z)_l = C_l z^{-l} ₀φ₁(−; −α²q^{2l+1}; q, −α²q^{2l+1}/z)`.
pub fn phi_plus(p: &QParams, z: Complex64, l: i64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("phi_plus needs z != 0"));
    }
    let c = -p.alpha * p.alpha * p.qp(2 * l + 1);
    let s = phi01(c64(c), p.q, c / z)?;
    Ok((ln_c_l(p, l) - (l as f64) * z.ln()).exp() * s)
}

/// Solution square summable at `-∞`:
/// `(Φ_z)_l = C_l⁻¹ zˡ ₀φ₁(−; −α⁻²q^{1-2l}; q, −q^{1-2l}/(α²z))`.
pub fn phi_minus(p: &QParams, z: Complex64, l: i64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("phi_minus needs z != 0"));
    }
    let c = -p.qp(1 - 2 * l) / (p.alpha * p.alpha);
    let s = phi01(c64(c), p.q, c / z)?;
    Ok(((l as f64) * z.ln() - ln_c_l(p, l)).exp() * s)
}

/// Closed form of the Casorati determinant `[φ_z, Φ_z] = -z (1/z; q)_∞`.
pub fn wronskian_closed(p: &QParams, z: Complex64) -> Result<Complex64> {
    Ok(-z * qpoch_inf(1.0 / z, p.q)?)
}

/// `1 / (d/dz)[φ_z, Φ_z]` at the simple zero `z = qⁿ`:
/// `(-1)^{n+1} q^{n(n+1)/2} / ((q;q)_n (q;q)_∞)`.
pub fn casorati_residue(p: &QParams, n: usize) -> Result<f64> {
    let q = p.q;
    let nf = n as f64;
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    Ok(sign * q.powf(nf * (nf + 1.0) / 2.0) / (qpoch(c64(q), q, n).re * qpoch_inf_real(q, q)?))
}

/// Coefficient source for bi-infinite three-term relations.
#[derive(Debug, Clone, PartialEq)]
enum BiSource {
    QHermite(QParams),
    Window { l_min: i64, a: Vec<f64>, b: Vec<f64> },
}

/// Symmetric coefficients `(a_l, b_l)`, `l ∈ ℤ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiInfiniteCoeffs {
    source: BiSource,
    /// `a_l, b_l → 0` as `l → +∞`.
    pub decays_plus: bool,
    /// `a_l, b_l → 0` as `l → −∞`.
    pub decays_minus: bool,
}

impl BiInfiniteCoeffs {
    pub fn qhermite(p: QParams) -> Self {
        Self {
            source: BiSource::QHermite(p),
            // a_l ~ α²q^{2l+1/2} at +∞ and ~ α⁻²q^{-2l-3/2} at −∞
            decays_plus: true,
            decays_minus: true,
        }
    }

    /// Coefficients on `l_min..l_min+len`.
    pub fn window(l_min: i64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if let Some(k) = a.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::domain(format!("a_{} is not positive", l_min + k as i64)));
        }
        Ok(Self {
            source: BiSource::Window { l_min, a, b },
            decays_plus: false,
            decays_minus: false,
        })
    }

    pub fn a(&self, l: i64) -> Result<f64> {
        match &self.source {
            BiSource::QHermite(p) => Ok(asc_coeffs(p, l).0),
            BiSource::Window { l_min, a, .. } => usize::try_from(l - l_min)
                .ok()
                .and_then(|i| a.get(i).copied())
                .ok_or_else(|| Error::domain(format!("a_{l} outside coefficient window"))),
        }
    }

    pub fn b(&self, l: i64) -> Result<f64> {
        match &self.source {
            BiSource::QHermite(p) => Ok(asc_coeffs(p, l).1),
            BiSource::Window { l_min, b, .. } => usize::try_from(l - l_min)
                .ok()
                .and_then(|i| b.get(i).copied())
                .ok_or_else(|| Error::domain(format!("b_{l} outside coefficient window"))),
        }
    }
}

/// Which end a sequence is known to be square summable at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    PlusInfinity,
    MinusInfinity,
    /// Square summable at both ends (an eigenvector).
    Both,
    Unspecified,
}

/// Values of a solution of `a_l v_{l+1} + b_l v_l + a_{l-1} v_{l-1} = z v_l`
/// on `[l_min, l_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSeq {
    pub z: Complex64,
    pub l_min: i64,
    pub values: Vec<Complex64>,
    pub side: Side,
}

impl EigenSeq {
    pub fn l_max(&self) -> i64 {
        self.l_min + self.values.len() as i64 - 1
    }

    pub fn get(&self, l: i64) -> Option<Complex64> {
        usize::try_from(l - self.l_min).ok().and_then(|i| self.values.get(i).copied())
    }

    /// Windowed `Σ |v_l|²`.
    pub fn norm_sq(&self) -> f64 {
        neumaier_sum(self.values.iter().map(|v| v.norm_sqr()))
    }

    /// Windowed `Σ v_l conj(w_l)` over the common index range.
    pub fn inner(&self, other: &EigenSeq) -> Complex64 {
        let lo = self.l_min.max(other.l_min);
        let hi = self.l_max().min(other.l_max());
        let mut re = Vec::new();
        let mut im = Vec::new();
        for l in lo..=hi {
            let t = self.get(l).unwrap() * other.get(l).unwrap().conj();
            re.push(t.re);
            im.push(t.im);
        }
        Complex64::new(neumaier_sum(re), neumaier_sum(im))
    }

    /// Largest `|a_l v_{l+1} + (b_l - z) v_l + a_{l-1} v_{l-1}| / scale` over
    /// interior indices, with `scale = a_l|v_{l+1}| + |b_l - z||v_l| + a_{l-1}|v_{l-1}|`.
    pub fn residual(&self, c: &BiInfiniteCoeffs) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for l in self.l_min + 1..self.l_max() {
            let (vm, v, vp) = (self.get(l - 1).unwrap(), self.get(l).unwrap(), self.get(l + 1).unwrap());
            let (a, am, bz) = (c.a(l)?, c.a(l - 1)?, c64(c.b(l)?) - self.z);
            let r = a * vp + bz * v + am * vm;
            let scale = a * vp.norm() + bz.norm() * v.norm() + am * vm.norm();
            if scale > 0.0 {
                worst = worst.max(r.norm() / scale);
            }
        }
        Ok(worst)
    }
}

fn seq_from(z: Complex64, l_min: i64, l_max: i64, side: Side, f: impl Fn(i64) -> Result<Complex64>) -> Result<EigenSeq> {
    if l_max < l_min {
        return Err(Error::domain(format!("empty window [{l_min}, {l_max}]")));
    }
    let values = (l_min..=l_max).map(f).collect::<Result<Vec<_>>>()?;
    Ok(EigenSeq { z, l_min, values, side })
}

pub fn phi_plus_seq(p: &QParams, z: Complex64, l_min: i64, l_max: i64) -> Result<EigenSeq> {
    seq_from(z, l_min, l_max, Side::PlusInfinity, |l| phi_plus(p, z, l))
}

pub fn phi_minus_seq(p: &QParams, z: Complex64, l_min: i64, l_max: i64) -> Result<EigenSeq> {
    seq_from(z, l_min, l_max, Side::MinusInfinity, |l| phi_minus(p, z, l))
}

/// Runs the three-term relation from values `v0 = v_{l0}`, `v1 = v_{l0+1}`
/// forwards and backwards to fill `[l_min, l_max]`.
pub fn solve_recurrence(
    c: &BiInfiniteCoeffs,
    z: Complex64,
    l0: i64,
    v0: Complex64,
    v1: Complex64,
    l_min: i64,
    l_max: i64,
) -> Result<EigenSeq> {
    if !(l_min <= l0 && l0 < l_max) {
        return Err(Error::domain("seed indices must lie inside the window"));
    }
    let n = (l_max - l_min + 1) as usize;
    let mut v = vec![c64(0.0); n];
    let i0 = (l0 - l_min) as usize;
    v[i0] = v0;
    v[i0 + 1] = v1;
    for i in i0 + 1..n - 1 {
        let l = l_min + i as i64;
        v[i + 1] = ((z - c.b(l)?) * v[i] - c.a(l - 1)? * v[i - 1]) / c.a(l)?;
    }
    for i in (1..=i0).rev() {
        let l = l_min + i as i64;
        v[i - 1] = ((z - c.b(l)?) * v[i] - c.a(l)? * v[i + 1]) / c.a(l - 1)?;
    }
    Ok(EigenSeq {
        z,
        l_min,
        values: v,
        side: Side::Unspecified,
    })
}

/// Casorati determinant `a_l (v_{l+1} f_l − f_{l+1} v_l)`.
pub fn casorati(v: &EigenSeq, f: &EigenSeq, c: &BiInfiniteCoeffs, l: i64) -> Result<Complex64> {
    let get = |s: &EigenSeq, k: i64| {
        s.get(k)
            .ok_or_else(|| Error::domain(format!("index {k} outside sequence window")))
    };
    Ok(c.a(l)? * (get(v, l + 1)? * get(f, l)? - get(f, l + 1)? * get(v, l)?))
}

/// Relative drift `max_l |W_l − W_{l_min}| / |W_{l_min}|` of the Casorati determinant.
pub fn casorati_drift(v: &EigenSeq, f: &EigenSeq, c: &BiInfiniteCoeffs, l_min: i64, l_max: i64) -> Result<f64> {
    let w0 = casorati(v, f, c, l_min)?;
    let mut drift: f64 = 0.0;
    for l in l_min + 1..=l_max {
        drift = drift.max((casorati(v, f, c, l)? - w0).norm());
    }
    Ok(drift / w0.norm())
}

/// Closed form `‖φ_{qⁿ}‖² = ((−1/α², q; q)_∞ / (−α²q; q)_∞) α^{2n+2} q^{−n(n+1)/2} (q;q)_n`.
pub fn eigvec_norm_sq(p: &QParams, n: usize) -> Result<f64> {
    let (q, a2) = (p.q, p.alpha * p.alpha);
    let nf = n as f64;
    Ok(qpoch_inf_real(-1.0 / a2, q)? * qpoch_inf_real(q, q)? / qpoch_inf_real(-a2 * q, q)?
        * p.alpha.powi(2 * n as i32 + 2)
        * q.powf(-nf * (nf + 1.0) / 2.0)
        * qpoch(c64(q), q, n).re)
}

/// Constant `K_n` with `Φ_{qⁿ} = K_n φ_{qⁿ}`:
/// `(−1)ⁿ α^{2n+2} Φ_{qⁿ} = ((−α²q;q)_∞/(−1/α²;q)_∞) φ_{qⁿ}`.
pub fn proportionality(p: &QParams, n: usize) -> Result<f64> {
    let a2 = p.alpha * p.alpha;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(qpoch_inf_real(-a2 * p.q, p.q)? / qpoch_inf_real(-1.0 / a2, p.q)?
        / (sign * p.alpha.powi(2 * n as i32 + 2)))
}

/// One eigenvalue of the discrete spectrum with its eigenvector data.
#[derive(Debug, Clone)]
pub struct SpectrumEntry {
    pub n: usize,
    pub eigenvalue: f64,
    pub vector: EigenSeq,
    /// Windowed `‖φ_{qⁿ}‖²`.
    pub norm_sq: f64,
    /// Closed-form `‖φ_{qⁿ}‖²`.
    pub norm_closed: f64,
    /// `|norm_sq − norm_closed| / norm_closed`.
    pub norm_check_error: f64,
}

/// Eigenvector `φ_{qⁿ}` on `[−window, window]`.
///
/// At real `z` the `φ` series cancels badly for `l < 0`, and `Φ` does for
/// `l > 0`. The vector is therefore `φ` on `l ≥ 0` and `c·Φ` on `l < 0`,
/// with `c = φ_0/Φ_0` (both series are accurate at `l = 0`).
pub fn eigenvector(p: &QParams, n: usize, window: i64) -> Result<EigenSeq> {
    if window < 1 {
        return Err(Error::domain("window must be >= 1"));
    }
    let z = c64(p.q.powi(n as i32));
    let c = phi_plus(p, z, 0)? / phi_minus(p, z, 0)?;
    seq_from(z, -window, window, Side::Both, |l| {
        if l >= 0 {
            phi_plus(p, z, l)
        } else {
            Ok(c * phi_minus(p, z, l)?)
        }
    })
}

/// Eigenvalues `qⁿ`, `n = 0..=nmax`, with windowed and closed-form norms.
pub fn discrete_spectrum(p: &QParams, nmax: usize, window: i64) -> Result<Vec<SpectrumEntry>> {
    (0..=nmax)
        .map(|n| {
            let vector = eigenvector(p, n, window)?;
            let norm_sq = vector.norm_sq();
            let norm_closed = eigvec_norm_sq(p, n)?;
            Ok(SpectrumEntry {
                n,
                eigenvalue: p.q.powi(n as i32),
                vector,
                norm_sq,
                norm_closed,
                norm_check_error: (norm_sq - norm_closed).abs() / norm_closed,
            })
        })
        .collect()
}

/// Window half-width at which `q^{2L}` drops below `1e-14`, plus a margin.
pub fn default_window(p: &QParams) -> i64 {
    ((1e-14f64).ln() / (2.0 * p.q.ln())).ceil() as i64 + 10
}

/// The two explicit solutions at `z = 0`:
/// `(−1)ˡ q^{−l/2} √(1+α²q^{2l})` and `(−1)ˡ q^{−3l/2} (1−qˡ)(1+α²qˡ) √(1+α²q^{2l})`.
pub fn zero_solutions(p: &QParams, l_min: i64, l_max: i64) -> Result<(EigenSeq, EigenSeq)> {
    let q = p.q;
    let sgn = |l: i64| if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let root = |l: i64| p.one_plus(2.0 * l as f64).sqrt();
    let z = c64(0.0);
    let v1 = seq_from(z, l_min, l_max, Side::Unspecified, |l| {
        Ok(c64(sgn(l) * q.powf(-(l as f64) / 2.0) * root(l)))
    })?;
    let v2 = seq_from(z, l_min, l_max, Side::Unspecified, |l| {
        let lf = l as f64;
        Ok(c64(sgn(l) * q.powf(-1.5 * lf) * (1.0 - q.powf(lf)) * p.one_plus(lf) * root(l)))
    })?;
    Ok((v1, v2))
}

/// `min_{|c|=1} ‖c₁v₁ + c₂v₂‖²` over `[−L, L]` for the two `z = 0` solutions,
/// i.e. the smallest eigenvalue of their windowed Gram matrix.
pub fn zero_solution_min_norm(p: &QParams, window: i64) -> Result<f64> {
    let (v1, v2) = zero_solutions(p, -window, window)?;
    let g11 = v1.norm_sq();
    let g22 = v2.norm_sq();
    let cos2 = v1.inner(&v2).norm_sqr() / (g11 * g22);
    let det = g11 * g22 * (1.0 - cos2).max(0.0);
    let tr = g11 + g22;
    Ok(2.0 * det / (tr + (tr * tr - 4.0 * det).max(0.0).sqrt()))
}

/// Closed-form N-extremal norm `q^{−n(n+1)/2} (q;q)_n (−α², −q/α², q; q)_∞`.
pub fn nextremal_norm(p: &QParams, n: usize) -> Result<f64> {
    let (q, a2) = (p.q, p.alpha * p.alpha);
    let nf = n as f64;
    Ok(q.powf(-nf * (nf + 1.0) / 2.0)
        * qpoch(c64(q), q, n).re
        * qpoch_inf_real(-a2, q)?
        * qpoch_inf_real(-q / a2, q)?
        * qpoch_inf_real(q, q)?)
}

/// Mass point `x_l(α) = ((αqˡ)⁻¹ − αqˡ)/2`.
pub fn nextremal_node(p: &QParams, l: i64) -> f64 {
    let t = p.alpha * p.q.powi(l as i32);
    0.5 * (1.0 / t - t)
}

/// `ln` of the mass `α^{4l} q^{2l²−l} (1+α²q^{2l})`.
pub fn nextremal_ln_mass(p: &QParams, l: i64) -> f64 {
    let lf = l as f64;
    4.0 * lf * p.alpha.ln() + (2.0 * lf * lf - lf) * p.q.ln() + ln_one_plus(p, 2 * l)
}

const LN_MASS_FLOOR: f64 = -740.0;

/// N-extremal measure on `x_l(α)`, `l ∈ [−L, L]`. Masses below the binary64
/// range are dropped.
pub fn nextremal_measure(p: &QParams, window: i64) -> Result<DiscreteMeasure> {
    if window < 1 {
        return Err(Error::domain("window must be >= 1"));
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for l in -window..=window {
        let lm = nextremal_ln_mass(p, l);
        if lm < LN_MASS_FLOOR {
            continue;
        }
        nodes.push(nextremal_node(p, l));
        weights.push(lm.exp());
    }
    let mut m = DiscreteMeasure::new(nodes, weights)?;
    m.truncation = window as usize;
    Ok(m)
}

/// Gram matrix `Σ_l w_l h_n(x_l) h_m(x_l)`, `n, m ≤ nmax`, for the monic
/// q⁻¹-Hermite polynomials evaluated at `ξ = 2x_l`.
pub fn nextremal_gram(p: &QParams, window: i64, nmax: usize) -> Result<DMatrix<f64>> {
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); (nmax + 1) * (nmax + 1)];
    for l in -window..=window {
        let lm = nextremal_ln_mass(p, l);
        if lm < LN_MASS_FLOOR {
            continue;
        }
        let xi = 2.0 * nextremal_node(p, l);
        let h = monic_qinv_hermite(p.q, nmax, xi);
        for n in 0..=nmax {
            for m in 0..=nmax {
                let prod = h[n] * h[m];
                let t = if prod == 0.0 {
                    0.0
                } else {
                    prod.signum() * (lm + prod.abs().ln()).exp()
                };
                terms[n * (nmax + 1) + m].push(t);
            }
        }
    }
    Ok(DMatrix::from_fn(nmax + 1, nmax + 1, |n, m| {
        neumaier_sum(terms[n * (nmax + 1) + m].iter().copied())
    }))
}

/// Monic `h_0..h_nmax` at `ξ`: `ξ h_n = h_{n+1} + q^{−n}(1−qⁿ) h_{n−1}`.
pub fn monic_qinv_hermite(q: f64, nmax: usize, xi: f64) -> Vec<f64> {
    let mut h = vec![1.0];
    if nmax >= 1 {
        h.push(xi);
    }
    for k in 1..nmax {
        let c = q.powi(-(k as i32)) * (1.0 - q.powi(k as i32));
        h.push(xi * h[k] - c * h[k - 1]);
    }
    h
}

/// Schur-test bound on `‖L − PₙL‖`, where `Pₙ` projects onto `e_{−n}..e_n`:
/// `√(max row ℓ¹ · max column ℓ¹)` of the discarded rows.
pub fn truncation_defect(p: &QParams, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("truncation level must be >= 1"));
    }
    let n = n as i64;
    let far = n + 40;
    let row = |l: i64| {
        let (a, b) = asc_coeffs(p, l);
        let (am, _) = asc_coeffs(p, l - 1);
        a + b.abs() + am
    };
    let in_residual = |l: i64| l.abs() > n && l.abs() <= far;
    let mut max_row: f64 = 0.0;
    let mut max_col: f64 = 0.0;
    for l in (n + 1)..=far {
        max_row = max_row.max(row(l)).max(row(-l));
    }
    // column j collects L[l, j] from rows l ∈ {j−1, j, j+1} outside the window
    for j in -(far + 1)..=(far + 1) {
        let mut s = 0.0;
        if in_residual(j - 1) {
            s += asc_coeffs(p, j - 1).0;
        }
        if in_residual(j) {
            s += asc_coeffs(p, j).1.abs();
        }
        if in_residual(j + 1) {
            s += asc_coeffs(p, j).0;
        }
        max_col = max_col.max(s);
    }
    Ok((max_row * max_col).sqrt())
}

/// Log-linear fit of the defect sequence over `[n_lo, n_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectFit {
    pub defects: Vec<f64>,
    /// `exp(slope)` of the least-squares fit of `ln defect(n)` against `n`.
    pub ratio: f64,
    /// `max_n defect(n) / qⁿ`.
    pub constant: f64,
}

pub fn defect_fit(p: &QParams, n_lo: usize, n_hi: usize) -> Result<DefectFit> {
    if n_lo < 1 || n_hi <= n_lo {
        return Err(Error::domain("need 1 <= n_lo < n_hi"));
    }
    let defects = (n_lo..=n_hi).map(|n| truncation_defect(p, n)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = (n_lo..=n_hi).map(|n| n as f64).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let constant = (n_lo..=n_hi)
        .zip(&defects)
        .map(|(n, d)| d / p.q.powi(n as i32))
        .fold(0.0, f64::max);
    Ok(DefectFit {
        ratio: (sxy / sxx).exp(),
        defects,
        constant,
    })
}

/// Folds ℓ²(ℤ) onto ℓ²(ℕ) ⊗ ℂ² via `e_n ↦ (e_n, 0)`, `e_{−n−1} ↦ (0, e_n)`:
/// `A_n = diag(a_n, a_{−n−2})`, `B_0 = [[b_0, a_{−1}], [a_{−1}, b_{−1}]]`,
/// `B_n = diag(b_n, b_{−n−1})`, `M_0 = I`.
pub fn fold_qhermite(p: &QParams, len: usize) -> Result<BlockRecurrence> {
    let mut a = Vec::with_capacity(len);
    let mut b = Vec::with_capacity(len);
    for n in 0..len as i64 {
        a.push(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(asc_coeffs(p, n).0),
            c64(asc_coeffs(p, -n - 2).0),
        ])));
        let mut bn = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(asc_coeffs(p, n).1),
            c64(asc_coeffs(p, -n - 1).1),
        ]));
        if n == 0 {
            let am1 = c64(asc_coeffs(p, -1).0);
            bn[(0, 1)] = am1;
            bn[(1, 0)] = am1;
        }
        b.push(bn);
    }
    BlockRecurrence::new(a, b, CMat::identity(2, 2))
}

/// `F_n(z) = diag((φ_z)_n, (Φ_z)_{−n−1})`.
pub fn folded_solution(p: &QParams, z: Complex64, n: usize) -> Result<CMat> {
    let n = n as i64;
    Ok(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        phi_plus(p, z, n)?,
        phi_minus(p, z, -n - 1)?,
    ])))
}
