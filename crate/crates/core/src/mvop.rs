//! Matrix-valued orthogonal polynomials: block recurrences, second-kind
//! solutions, Liouville–Ostrogradsky, Markov approximants, the matrix
//! Gegenbauer family, weight supports and commutant algebras.
//!
//! Orthonormal block recurrence:
//! `z P_n = A_n P_{n+1} + B_n P_n + A_{n-1}* P_{n-1}`, `P_0 = M_0^{-1/2}`, `P_{-1} = 0`.

use nalgebra::DMatrix;
use serde_json::Value;

use crate::opcore::RecurrenceCoeffs;
use crate::special::{factorial, ln_gamma, ln_poch, poch};
use crate::trisolve::{
    gauss_quadrature, herm_eigh, herm_inv_sqrt, herm_sqrt, hermitian_defect, inverse_condition, BlockTridiag,
    DiscreteMeasure, MatrixMeasure, BLOCK_RCOND_MIN,
};
use crate::{CMat, Complex64, Error, Result};

/// Relative singular-value threshold for commutant null spaces.
const NULL_TOL: f64 = 1e-9;

fn c64(x: f64) -> Complex64 {
    Complex64::from(x)
}

fn real_mat(m: &DMatrix<f64>) -> CMat {
    m.map(c64)
}

/// `N`×`N` block three-term recurrence with first moment `M_0`.
#[derive(Debug, Clone)]
pub struct BlockRecurrence {
    n: usize,
    a: Vec<CMat>,
    a_inv: Vec<CMat>,
    b: Vec<CMat>,
    m0: CMat,
}

impl BlockRecurrence {
    /// `a` holds `A_0..`, `b` holds `B_0..`; `a.len()` must be `b.len()` or `b.len() - 1`.
    pub fn new(a: Vec<CMat>, b: Vec<CMat>, m0: CMat) -> Result<Self> {
        let n = m0.nrows();
        if n == 0 || m0.ncols() != n {
            return Err(Error::domain("M0 must be a non-empty square matrix"));
        }
        if b.is_empty() || !(a.len() == b.len() || a.len() + 1 == b.len()) {
            return Err(Error::domain(format!(
                "need len(A) in {{len(B), len(B)-1}}, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let mut a_inv = Vec::with_capacity(a.len());
        for (k, ak) in a.iter().enumerate() {
            if ak.shape() != (n, n) {
                return Err(Error::domain(format!("A_{k} is not {n}x{n}")));
            }
            if inverse_condition(ak) < BLOCK_RCOND_MIN {
                return Err(Error::domain(format!("A_{k} is singular")));
            }
            a_inv.push(
                ak.clone()
                    .try_inverse()
                    .ok_or_else(|| Error::domain(format!("A_{k} is singular")))?,
            );
        }
        let mut bs = Vec::with_capacity(b.len());
        for (k, bk) in b.into_iter().enumerate() {
            if bk.shape() != (n, n) {
                return Err(Error::domain(format!("B_{k} is not {n}x{n}")));
            }
            if hermitian_defect(&bk) > 1e-12 * (1.0 + bk.norm()) {
                return Err(Error::domain(format!("B_{k} is not Hermitian")));
            }
            bs.push((&bk + bk.adjoint()).scale(0.5));
        }
        if hermitian_defect(&m0) > 1e-12 * (1.0 + m0.norm()) {
            return Err(Error::domain("M0 is not Hermitian"));
        }
        let (ev, _) = herm_eigh(&m0);
        if ev[0] <= 0.0 {
            return Err(Error::domain("M0 is not positive definite"));
        }
        Ok(Self {
            n,
            a,
            a_inv,
            b: bs,
            m0,
        })
    }

    /// Scalar recurrence as a 1×1 block recurrence with `M_0 = m0`.
    pub fn from_scalar(c: &RecurrenceCoeffs, len: usize) -> Result<Self> {
        c.require(len, len)?;
        let one = |x: f64| CMat::from_element(1, 1, c64(x));
        Self::new(
            (0..len).map(|k| one(c.a(k))).collect(),
            (0..len).map(|k| one(c.b(k))).collect(),
            one(c.m0()),
        )
    }

    /// Block-diagonal combination of two scalar recurrences (masses `m0`).
    pub fn diagonal(c1: &RecurrenceCoeffs, c2: &RecurrenceCoeffs, len: usize) -> Result<Self> {
        c1.require(len, len)?;
        c2.require(len, len)?;
        let d = |x: f64, y: f64| CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(x), c64(y)]));
        Self::new(
            (0..len).map(|k| d(c1.a(k), c2.a(k))).collect(),
            (0..len).map(|k| d(c1.b(k), c2.b(k))).collect(),
            d(c1.m0(), c2.m0()),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len_a(&self) -> usize {
        self.a.len()
    }

    pub fn len_b(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self, k: usize) -> &CMat {
        &self.a[k]
    }

    pub fn a_inv(&self, k: usize) -> &CMat {
        &self.a_inv[k]
    }

    pub fn b(&self, k: usize) -> &CMat {
        &self.b[k]
    }

    pub fn m0(&self) -> &CMat {
        &self.m0
    }

    /// Errors unless an `m`-block truncation can be formed.
    pub fn check_len(&self, m: usize) -> Result<()> {
        if m > self.b.len() || m.saturating_sub(1) > self.a.len() {
            return Err(Error::domain(format!(
                "block recurrence has {} B- and {} A-blocks, truncation {m} needs {m} and {}",
                self.b.len(),
                self.a.len(),
                m.saturating_sub(1)
            )));
        }
        Ok(())
    }

    fn require_degree(&self, n: usize) -> Result<()> {
        if n > self.a.len() || n > self.b.len() {
            return Err(Error::domain(format!(
                "degree {n} needs A_0..A_{{n-1}} and B_0..B_{{n-1}}; have {} and {}",
                self.a.len(),
                self.b.len()
            )));
        }
        Ok(())
    }

    /// `m`-block truncated block Jacobi matrix.
    pub fn truncation(&self, m: usize) -> Result<BlockTridiag> {
        self.check_len(m)?;
        BlockTridiag::new(self.b[..m].to_vec(), self.a[..m.saturating_sub(1)].to_vec())
    }

    /// Gauge change `P_n ↦ U_n P_n`: `A_n ↦ U_n A_n U_{n+1}*`, `B_n ↦ U_n B_n U_n*`.
    /// `U_0` must commute with `M_0` so that `P_0 = M_0^{-1/2}` is preserved.
    pub fn gauge_transform(&self, u: &[CMat]) -> Result<Self> {
        if u.len() < self.b.len().max(self.a.len() + 1) {
            return Err(Error::domain("need one unitary per block index"));
        }
        for (k, uk) in u.iter().enumerate() {
            if (uk * uk.adjoint() - CMat::identity(self.n, self.n)).norm() > 1e-12 {
                return Err(Error::domain(format!("U_{k} is not unitary")));
            }
        }
        if (&u[0] * &self.m0 - &self.m0 * &u[0]).norm() > 1e-12 * self.m0.norm() {
            return Err(Error::domain("U_0 must commute with M0"));
        }
        Self::new(
            self.a
                .iter()
                .enumerate()
                .map(|(k, a)| &u[k] * a * u[k + 1].adjoint())
                .collect(),
            self.b.iter().enumerate().map(|(k, b)| &u[k] * b * u[k].adjoint()).collect(),
            self.m0.clone(),
        )
    }

    /// JSON form `{"N", "M0", "blocks": [{"A": [[..]], "B": [[..]]}, ..]}`.
    /// Entries are numbers or `[re, im]` pairs; `A` may be omitted in the last block.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::data(format!("block JSON: {e}")))?;
        let n = v
            .get("N")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::data("block JSON: missing integer field N"))? as usize;
        let m0 = match v.get("M0") {
            Some(m) => json_matrix(m, n, "M0")?,
            None => CMat::identity(n, n),
        };
        let blocks = v
            .get("blocks")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::data("block JSON: missing array field blocks"))?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (k, blk) in blocks.iter().enumerate() {
            b.push(json_matrix(
                blk.get("B").ok_or_else(|| Error::data(format!("block {k}: missing B")))?,
                n,
                "B",
            )?);
            match blk.get("A") {
                Some(m) => a.push(json_matrix(m, n, "A")?),
                None if k + 1 == blocks.len() => {}
                None => return Err(Error::data(format!("block {k}: missing A"))),
            }
        }
        Self::new(a, b, m0)
    }

    pub fn to_json(&self) -> Value {
        let mat = |m: &CMat| -> Value {
            Value::Array(
                (0..m.nrows())
                    .map(|r| {
                        Value::Array(
                            (0..m.ncols())
                                .map(|c| {
                                    let z = m[(r, c)];
                                    if z.im == 0.0 {
                                        Value::from(z.re)
                                    } else {
                                        Value::from(vec![z.re, z.im])
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            )
        };
        let blocks: Vec<Value> = self
            .b
            .iter()
            .enumerate()
            .map(|(k, bk)| {
                let mut o = serde_json::Map::new();
                if let Some(ak) = self.a.get(k) {
                    o.insert("A".into(), mat(ak));
                }
                o.insert("B".into(), mat(bk));
                Value::Object(o)
            })
            .collect();
        serde_json::json!({ "N": self.n, "M0": mat(&self.m0), "blocks": blocks })
    }
}

fn json_entry(v: &Value) -> Option<Complex64> {
    match v {
        Value::Number(x) => x.as_f64().map(c64),
        Value::Array(p) if p.len() == 2 => Some(Complex64::new(p[0].as_f64()?, p[1].as_f64()?)),
        _ => None,
    }
}

fn json_matrix(v: &Value, n: usize, what: &str) -> Result<CMat> {
    let rows = v
        .as_array()
        .filter(|r| r.len() == n)
        .ok_or_else(|| Error::data(format!("{what}: expected {n} rows")))?;
    let mut m = CMat::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|c| c.len() == n)
            .ok_or_else(|| Error::data(format!("{what}: row {r} must have {n} entries")))?;
        for (c, e) in row.iter().enumerate() {
            m[(r, c)] = json_entry(e).ok_or_else(|| Error::data(format!("{what}: bad entry ({r},{c})")))?;
        }
    }
    Ok(m)
}

/// Values `P_0..P_n` and second-kind `Q_0..Q_n` at one point.
#[derive(Debug, Clone)]
pub struct MatrixPolyPair {
    pub p: Vec<CMat>,
    pub q: Vec<CMat>,
}

fn finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `P_{k+1} = A_k⁻¹((z − B_k)P_k − A_{k−1}* P_{k−1})`, same for `Q` with
/// `Q_0 = 0`, `Q_1 = A_0⁻¹ M_0^{1/2}`.
pub fn eval_block_pair(b: &BlockRecurrence, n: usize, z: Complex64) -> Result<MatrixPolyPair> {
    b.require_degree(n)?;
    let dim = b.dim();
    let zero = CMat::zeros(dim, dim);
    let mut p = vec![herm_inv_sqrt(b.m0())?];
    let mut q = vec![zero.clone()];
    let m0h = herm_sqrt(b.m0())?;
    let scalar = dim == 1;
    for k in 0..n {
        let zb = CMat::identity(dim, dim) * z - b.b(k);
        let (pm, qm) = if k == 0 {
            (zero.clone(), zero.clone())
        } else {
            let ah = b.a(k - 1).adjoint();
            (&ah * &p[k - 1], &ah * &q[k - 1])
        };
        let rhs_p = &zb * &p[k] - pm;
        let rhs_q = if k == 0 { m0h.clone() } else { &zb * &q[k] - qm };
        let (pn, qn) = if scalar {
            // division keeps the 1×1 case identical to the scalar recurrence
            let a = b.a(k)[(0, 0)];
            (rhs_p.map(|v| v / a), rhs_q.map(|v| v / a))
        } else {
            (b.a_inv(k) * rhs_p, b.a_inv(k) * rhs_q)
        };
        if !(finite(&pn) && finite(&qn)) {
            return Err(Error::accuracy(format!("block recurrence overflow at degree {}", k + 1), f64::INFINITY));
        }
        p.push(pn);
        q.push(qn);
    }
    Ok(MatrixPolyPair { p, q })
}

/// Liouville–Ostrogradsky defects at degree `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoDefect {
    /// `‖Q_k P*_{k−1} − P_k Q*_{k−1} − A_{k−1}⁻¹‖`.
    pub defect1: f64,
    /// `‖Q_k P*_k − P_k Q*_k‖`.
    pub defect2: f64,
    /// Magnitude of the terms entering the identities.
    pub scale: f64,
}

impl LoDefect {
    pub fn relative(&self) -> (f64, f64) {
        (self.defect1 / self.scale, self.defect2 / self.scale)
    }
}

/// Here `F*(z) = F(z̄)*`.
pub fn liouville_ostrogradsky_defect(b: &BlockRecurrence, k: usize, z: Complex64) -> Result<LoDefect> {
    if k == 0 {
        return Err(Error::domain("Liouville-Ostrogradsky needs k >= 1"));
    }
    let at = eval_block_pair(b, k, z)?;
    let bar = eval_block_pair(b, k, z.conj())?;
    let ps = |j: usize| bar.p[j].adjoint();
    let qs = |j: usize| bar.q[j].adjoint();
    let t1 = &at.q[k] * ps(k - 1);
    let t2 = &at.p[k] * qs(k - 1);
    let d1 = (&t1 - &t2 - b.a_inv(k - 1)).norm();
    let s1 = &at.q[k] * ps(k);
    let s2 = &at.p[k] * qs(k);
    let d2 = (&s1 - &s2).norm();
    let scale = t1.norm() + t2.norm() + b.a_inv(k - 1).norm() + s1.norm() + s2.norm();
    Ok(LoDefect {
        defect1: d1,
        defect2: d2,
        scale,
    })
}

/// Markov approximant `S(z) ≈ −P_n(z)⁻¹ Q_n(z)` to `∫ (x − z)⁻¹ dW(x)`.
pub fn mv_markov(b: &BlockRecurrence, z: Complex64, n: usize) -> Result<CMat> {
    if z.im == 0.0 {
        return Err(Error::domain("Markov approximant needs Im z != 0"));
    }
    if n == 0 {
        return Err(Error::domain("Markov approximant needs degree >= 1"));
    }
    let pair = eval_block_pair(b, n, z)?;
    let pn = &pair.p[n];
    let rc = inverse_condition(pn);
    if rc < 1e-14 {
        return Err(Error::accuracy(format!("P_{n}(z) is numerically singular"), rc));
    }
    // P_n and Q_n grow geometrically off the axis; rescale so the complex
    // pivots stay far from overflow
    let s = c64(1.0 / pn.norm());
    let x = (pn * s)
        .lu()
        .solve(&(&pair.q[n] * s))
        .ok_or_else(|| Error::accuracy(format!("P_{n}(z) is singular"), 0.0))?;
    if !finite(&x) {
        return Err(Error::accuracy(format!("Markov approximant at degree {n} is not finite"), f64::INFINITY));
    }
    Ok(-x)
}

/// Residual of the matrix Christoffel–Darboux identity
/// `(x−y) Σ_{k<n} P_k(x)* P_k(y) = P_n(x)* A_{n−1}* P_{n−1}(y) − P_{n−1}(x)* A_{n−1} P_n(y)`,
/// relative to the size of the right-hand terms.
pub fn matrix_cd_residual(b: &BlockRecurrence, n: usize, x: f64, y: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("kernel needs n >= 1"));
    }
    let px = eval_block_pair(b, n, c64(x))?.p;
    let py = eval_block_pair(b, n, c64(y))?.p;
    let dim = b.dim();
    let mut lhs = CMat::zeros(dim, dim);
    for k in 0..n {
        lhs += px[k].adjoint() * &py[k];
    }
    lhs *= c64(x - y);
    let r1 = px[n].adjoint() * b.a(n - 1).adjoint() * &py[n - 1];
    let r2 = px[n - 1].adjoint() * b.a(n - 1) * &py[n];
    let scale = r1.norm() + r2.norm() + lhs.norm();
    Ok((lhs - (&r1 - &r2)).norm() / scale)
}

/// Eigenvalues of the `n`-block truncation: the zeros of `det P_n`.
pub fn block_zeros(b: &BlockRecurrence, n: usize) -> Result<Vec<f64>> {
    Ok(b.truncation(n)?.eigh().0)
}

/// Partial sums of `Σ ‖A_n‖⁻¹` with a divergence heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanHint {
    pub partial_sums: Vec<f64>,
    /// Fitted `s` in `‖A_n‖⁻¹ ~ n^{−s}` over the second half of the range.
    pub decay_exponent: f64,
    /// Heuristic divergence flag (`s ≤ 1.05` and terms not geometrically small).
    pub diverging: bool,
}

pub fn carleman_hint(b: &BlockRecurrence, k: usize) -> Result<CarlemanHint> {
    if k == 0 {
        return Err(Error::domain("carleman_hint needs K >= 1"));
    }
    if k > b.len_a() {
        return Err(Error::domain(format!("only {} A-blocks available", b.len_a())));
    }
    let terms: Vec<f64> = (0..k)
        .map(|j| 1.0 / b.a(j).singular_values().iter().cloned().fold(0.0, f64::max))
        .collect();
    let mut s = 0.0;
    let partial_sums: Vec<f64> = terms
        .iter()
        .map(|t| {
            s += t;
            s
        })
        .collect();
    let lo = (k / 2).max(1);
    let pts: Vec<(f64, f64)> = (lo..k)
        .filter(|&j| terms[j] > 0.0)
        .map(|j| ((j as f64 + 1.0).ln(), terms[j].ln()))
        .collect();
    let decay_exponent = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    } else {
        0.0
    };
    Ok(CarlemanHint {
        partial_sums,
        decay_exponent,
        diverging: decay_exponent <= 1.05,
    })
}

/// Pointwise rank and range projector of a PSD matrix.
#[derive(Debug, Clone)]
pub struct WeightSupport {
    pub rank: usize,
    pub projector: CMat,
}

/// `d(x)` and `J(x)` for `W(x)`. Eigenvalues below `1e-10·tr W` count as zero.
pub fn weight_support(w: &CMat) -> Result<WeightSupport> {
    let n = w.nrows();
    let tr = w.trace().re;
    let (ev, v) = herm_eigh(w);
    let tol = 1e-10 * tr.abs().max(f64::MIN_POSITIVE);
    if ev[0] < -tol.max(1e-14) {
        return Err(Error::data(format!("weight is indefinite (eigenvalue {:.3e})", ev[0])));
    }
    let mut projector = CMat::zeros(n, n);
    let mut rank = 0;
    if tr > 0.0 {
        for (j, &e) in ev.iter().enumerate() {
            if e > tol {
                let col = v.column(j);
                projector += col * col.adjoint();
                rank += 1;
            }
        }
    }
    Ok(WeightSupport { rank, projector })
}

/// Commutant algebras of a matrix measure.
#[derive(Debug, Clone)]
pub struct Commutant {
    /// Basis of `A = {T : T M_k = M_k T}` (a complex algebra).
    pub a_basis: Vec<CMat>,
    /// Real basis of `𝒜 = {T : T M_k = M_k T*}`.
    pub acal_basis: Vec<CMat>,
    /// Whether `𝒜` is closed under `T ↦ T*`.
    pub star_invariant: bool,
    /// Solution-space dimension after each moment was added, for `A` (complex) and `𝒜` (real).
    pub a_dims: Vec<usize>,
    pub acal_dims: Vec<usize>,
    /// Both dimensions unchanged over the last three moments.
    pub stabilized: bool,
}

impl Commutant {
    pub fn dim_a(&self) -> usize {
        self.a_basis.len()
    }

    pub fn dim_acal(&self) -> usize {
        self.acal_basis.len()
    }

    /// The weight splits when `𝒜` is larger than the real multiples of `I`.
    pub fn reducible(&self) -> bool {
        self.dim_acal() > 1
    }
}

/// Real coordinates of `T = X + iY` as a vector of length `2N²`.
fn unit_matrix(n: usize, j: usize) -> CMat {
    let mut t = CMat::zeros(n, n);
    let idx = j % (n * n);
    let val = if j < n * n { c64(1.0) } else { Complex64::new(0.0, 1.0) };
    t[(idx / n, idx % n)] = val;
    t
}

fn to_real_vec(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            v.push(m[(r, c)].re);
        }
    }
    for r in 0..n {
        for c in 0..n {
            v.push(m[(r, c)].im);
        }
    }
    v
}

fn from_real_vec(v: &[f64], n: usize) -> CMat {
    CMat::from_fn(n, n, |r, c| Complex64::new(v[r * n + c], v[n * n + r * n + c]))
}

/// Null space of the stacked real-linear maps `T ↦ f(T, M_k)`, processed moment
/// by moment. Returns orthonormal real basis vectors and the dimension history.
fn real_null_space(moments: &[CMat], f: impl Fn(&CMat, &CMat) -> CMat) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = moments[0].nrows();
    let dim = 2 * n * n;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dims = Vec::with_capacity(moments.len());
    let mut basis = Vec::new();
    for mk in moments {
        let scale = mk.norm().max(f64::MIN_POSITIVE);
        let mk = mk.unscale(scale);
        let cols: Vec<Vec<f64>> = (0..dim).map(|j| to_real_vec(&f(&unit_matrix(n, j), &mk))).collect();
        for i in 0..dim {
            rows.push(cols.iter().map(|c| c[i]).collect());
        }
        let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("v_t requested");
        let top = svd.singular_values.max().max(1.0);
        basis = (0..dim)
            .filter(|&j| svd.singular_values[j] < NULL_TOL * top)
            .map(|j| vt.row(j).iter().cloned().collect())
            .collect();
        dims.push(basis.len());
    }
    (basis, dims)
}

/// `A(μ)` and `𝒜(μ)` from the moments `M_0..M_K`.
pub fn commutant_from_moments(moments: &[CMat]) -> Result<Commutant> {
    if moments.is_empty() {
        return Err(Error::domain("commutant needs at least one moment"));
    }
    let n = moments[0].nrows();
    let (a_real, a_dims_real) = real_null_space(moments, |t, m| t * m - m * t);
    let (acal, acal_dims) = real_null_space(moments, |t, m| t * m - m * t.adjoint());

    // A is complex-linear: keep a complex basis by greedy independence over ℂ.
    let mut a_basis: Vec<CMat> = Vec::new();
    for v in &a_real {
        let t = from_real_vec(v, n);
        if complex_independent(&a_basis, &t) {
            a_basis.push(t);
        }
    }
    let acal_basis: Vec<CMat> = acal.iter().map(|v| from_real_vec(v, n)).collect();

    // star invariance: T* must lie in the real span of the orthonormal basis
    let mut star_invariant = true;
    for v in &acal {
        let ts = to_real_vec(&from_real_vec(v, n).adjoint());
        let mut res = ts.clone();
        for w in &acal {
            let c: f64 = ts.iter().zip(w).map(|(a, b)| a * b).sum();
            for (r, wi) in res.iter_mut().zip(w) {
                *r -= c * wi;
            }
        }
        let nr: f64 = res.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nt: f64 = ts.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nr > 1e-8 * nt {
            star_invariant = false;
        }
    }
    let a_dims: Vec<usize> = a_dims_real.iter().map(|d| d / 2).collect();
    let k = a_dims.len();
    let stabilized = k >= 4 && (k - 4..k).all(|j| a_dims[j] == a_dims[k - 1] && acal_dims[j] == acal_dims[k - 1]);
    Ok(Commutant {
        a_basis,
        acal_basis,
        star_invariant,
        a_dims,
        acal_dims,
        stabilized,
    })
}

fn complex_independent(basis: &[CMat], t: &CMat) -> bool {
    let n = t.nrows();
    let k = basis.len();
    let mut m = CMat::zeros(n * n, k + 1);
    for (j, b) in basis.iter().chain(std::iter::once(t)).enumerate() {
        for r in 0..n {
            for c in 0..n {
                m[(r * n + c, j)] = b[(r, c)];
            }
        }
    }
    if k + 1 > n * n {
        return false;
    }
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    min > 1e-8 * max
}

/// Commutant from the moments `M_0..M_kmax` of a discrete matrix measure.
pub fn commutant(mm: &MatrixMeasure, kmax: u32) -> Result<Commutant> {
    let moments: Vec<CMat> = (0..=kmax).map(|k| mm.moment(k)).collect();
    commutant_from_moments(&moments)
}

/// Matrix polynomial `Σ_j x^j C_j`.
#[derive(Debug, Clone)]
pub struct MatPoly {
    pub coeffs: Vec<CMat>,
}

impl MatPoly {
    pub fn eval(&self, x: f64) -> CMat {
        let mut acc = self.coeffs.last().expect("non-empty polynomial").clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * c64(x) + c;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Monic polynomials `R_0..R_n` built from a matrix measure.
#[derive(Debug, Clone)]
pub struct MonicSystem {
    pub polys: Vec<MatPoly>,
    /// `⟨R_m, R_m⟩`.
    pub gram: Vec<CMat>,
    /// `B̃_m = ⟨x R_m, R_m⟩⟨R_m, R_m⟩⁻¹`, `m < n`.
    pub b: Vec<CMat>,
    /// `C̃_m = ⟨R_m, R_m⟩⟨R_{m−1}, R_{m−1}⟩⁻¹`, `1 ≤ m < n` (`C̃_0 = 0`).
    pub c: Vec<CMat>,
}

/// `R_m = xᵐ + Σ_{j<m} C_{m,j} R_j` with `C_{m,j} = −⟨xᵐ, R_j⟩⟨R_j, R_j⟩⁻¹`,
/// where `⟨F, G⟩ = Σ F(x_j) W_j G(x_j)*`.
pub fn monic_from_weight(mm: &MatrixMeasure, n: usize) -> Result<MonicSystem> {
    let dim = mm.dim();
    for k in 0..=n {
        let m2k = mm.moment(2 * k as u32);
        let (ev, _) = herm_eigh(&m2k);
        if ev[0] <= 1e-12 * ev[ev.len() - 1].abs() {
            return Err(Error::data(format!(
                "even moment M_{} is not positive definite (min eigenvalue {:.3e})",
                2 * k,
                ev[0]
            )));
        }
    }
    let id = CMat::identity(dim, dim);
    let zero = CMat::zeros(dim, dim);
    let ip = |f: &MatPoly, g: &MatPoly| mm.pair(|x| f.eval(x), |x| g.eval(x));
    let mut polys: Vec<MatPoly> = vec![MatPoly { coeffs: vec![id.clone()] }];
    let mut gram = vec![ip(&polys[0], &polys[0])];
    let mut gram_inv = vec![gram[0]
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::data("<R_0,R_0> is singular"))?];
    for m in 1..=n {
        let mut coeffs = vec![zero.clone(); m + 1];
        coeffs[m] = id.clone();
        let xm = MatPoly { coeffs: coeffs.clone() };
        for j in 0..m {
            let cmj = -(ip(&xm, &polys[j]) * &gram_inv[j]);
            for (i, cj) in polys[j].coeffs.iter().enumerate() {
                coeffs[i] += &cmj * cj;
            }
        }
        let r = MatPoly { coeffs };
        let g = ip(&r, &r);
        let (ev, _) = herm_eigh(&g);
        if ev[0] <= 1e-12 * ev[ev.len() - 1].abs() {
            return Err(Error::data(format!("<R_{m},R_{m}> is not positive definite")));
        }
        gram_inv.push(g.clone().try_inverse().ok_or_else(|| Error::data(format!("<R_{m},R_{m}> is singular")))?);
        gram.push(g);
        polys.push(r);
    }
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for m in 0..n {
        let xr = mm.pair(|x| polys[m].eval(x) * c64(x), |x| polys[m].eval(x));
        b.push(xr * &gram_inv[m]);
        c.push(if m == 0 { zero.clone() } else { &gram[m] * &gram_inv[m - 1] });
    }
    Ok(MonicSystem { polys, gram, b, c })
}

/// Monic coefficients of an orthonormal block recurrence:
/// with `Γ_n = A_{n−1}⁻¹⋯A_0⁻¹ M_0^{−1/2}` the leading coefficient of `P_n`,
/// `B̃_n = Γ_n⁻¹ B_n Γ_n` and `C̃_n = Γ_n⁻¹ A_{n−1}* Γ_{n−1}`.
pub fn monic_coefficients(b: &BlockRecurrence, len: usize) -> Result<(Vec<CMat>, Vec<CMat>)> {
    b.require_degree(len)?;
    let dim = b.dim();
    let mut gamma = vec![herm_inv_sqrt(b.m0())?];
    for k in 0..len {
        let next = b.a_inv(k) * &gamma[k];
        gamma.push(next);
    }
    let inv = |m: &CMat| m.clone().try_inverse().ok_or_else(|| Error::domain("singular leading coefficient"));
    let mut bt = Vec::with_capacity(len);
    let mut ct = Vec::with_capacity(len);
    for n in 0..len {
        let gi = inv(&gamma[n])?;
        bt.push(&gi * b.b(n) * &gamma[n]);
        ct.push(if n == 0 {
            CMat::zeros(dim, dim)
        } else {
            &gi * b.a(n - 1).adjoint() * &gamma[n - 1]
        });
    }
    Ok((bt, ct))
}

/// Matrix-valued Gegenbauer family of size `2ℓ+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerFamily {
    two_ell: usize,
    nu: f64,
}

/// Scalar Gegenbauer `C_n^{(λ)}(x)`.
pub fn gegenbauer_scalar(n: usize, lambda: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut c0, mut c1) = (1.0, 2.0 * lambda * x);
    for k in 1..n {
        let kf = k as f64;
        let c2 = (2.0 * (kf + lambda) * x * c1 - (kf + 2.0 * lambda - 1.0) * c0) / (kf + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// Family for `ℓ = two_ell/2` and `ν > 0`.
pub fn gegenbauer(two_ell: usize, nu: f64) -> Result<GegenbauerFamily> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::domain(format!("nu = {nu} must be positive")));
    }
    Ok(GegenbauerFamily { two_ell, nu })
}

impl GegenbauerFamily {
    pub fn size(&self) -> usize {
        self.two_ell + 1
    }

    pub fn ell(&self) -> f64 {
        self.two_ell as f64 / 2.0
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Lower triangular `L(x)`, `L_{mk} = m!/(k!(2ν+2k)_{m−k}) C^{(ν+k)}_{m−k}(x)`.
    pub fn l_matrix(&self, x: f64) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |m, k| {
            if k > m {
                0.0
            } else {
                factorial(m) / (factorial(k) * poch(2.0 * self.nu + 2.0 * k as f64, m - k))
                    * gegenbauer_scalar(m - k, self.nu + k as f64, x)
            }
        })
    }

    /// `t_k = k!(ν)_k/(ν+½)_k · (2ν+2ℓ)_k (2ℓ+ν) / ((2ℓ−k+1)_k (2ν+k−1)_k)`.
    pub fn t_coeff(&self, k: usize) -> f64 {
        let (nu, l2) = (self.nu, self.two_ell as f64);
        factorial(k) * poch(nu, k) / poch(nu + 0.5, k) * poch(2.0 * nu + l2, k) * (l2 + nu)
            / (poch(l2 - k as f64 + 1.0, k) * poch(2.0 * nu + k as f64 - 1.0, k))
    }

    /// `T(x) = diag(t_k (1−x²)^{k+ν−½})`.
    pub fn t_matrix(&self, x: f64) -> DMatrix<f64> {
        let env = (1.0 - x * x).powf(self.nu - 0.5);
        DMatrix::from_fn(self.size(), self.size(), |i, j| {
            if i == j {
                self.t_coeff(i) * (1.0 - x * x).powi(i as i32) * env
            } else {
                0.0
            }
        })
    }

    /// `W(x)/(1−x²)^{ν−½}`, a matrix polynomial.
    pub fn weight_reduced(&self, x: f64) -> DMatrix<f64> {
        let l = self.l_matrix(x);
        let t = DMatrix::from_fn(self.size(), self.size(), |i, j| {
            if i == j {
                self.t_coeff(i) * (1.0 - x * x).powi(i as i32)
            } else {
                0.0
            }
        });
        &l * t * l.transpose()
    }

    /// `W(x) = L(x) T(x) L(x)ᵀ` on `(−1, 1)`.
    pub fn weight(&self, x: f64) -> DMatrix<f64> {
        self.weight_reduced(x) * (1.0 - x * x).powf(self.nu - 0.5)
    }

    /// Diagonal `H_n = ∫ P_n W P_n*` for the monic family, in log space so
    /// large `n` neither overflows nor underflows early.
    pub fn h(&self, n: usize) -> DMatrix<f64> {
        let (nu, l2) = (self.nu, self.two_ell as f64);
        let l = l2 / 2.0;
        let nf = n as f64;
        let ln_pre = 0.5 * std::f64::consts::PI.ln() + ln_gamma(nu + 0.5) - ln_gamma(nu + 1.0)
            + nu.ln()
            + (l2 + nu + nf).ln()
            - (nu + nf).ln()
            + ln_poch(1.0, n)
            + ln_poch(l + 0.5 + nu, n)
            + ln_poch(l2 + nu, n)
            + ln_poch(l + nu, n)
            - ln_poch(l2 + nu + 1.0, n)
            - ln_poch(l2 + 2.0 * nu + nf, n);
        let d: Vec<f64> = (0..self.size())
            .map(|k| {
                let kf = k as f64;
                (ln_pre - ln_poch(nu + kf, n) - ln_poch(l2 + nu - kf, n)
                    + ln_poch(1.0, k)
                    + ln_poch(1.0, self.two_ell - k)
                    + ln_poch(nf + nu + 1.0, self.two_ell)
                    - ln_poch(1.0, self.two_ell)
                    - ln_poch(nf + nu + 1.0, k)
                    - ln_poch(nf + nu + 1.0, self.two_ell - k))
                    .exp()
            })
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// Monic `B_n^{(ν)}`.
    pub fn b_monic(&self, n: usize) -> DMatrix<f64> {
        let (nu, l2) = (self.nu, self.two_ell as f64);
        let nf = n as f64;
        let size = self.size();
        let mut m = DMatrix::zeros(size, size);
        for j in 1..size {
            let jf = j as f64;
            m[(j, j - 1)] = jf * (jf + nu - 1.0) / (2.0 * (jf + nf + nu - 1.0) * (jf + nf + nu));
        }
        for j in 0..size.saturating_sub(1) {
            let jf = j as f64;
            m[(j, j + 1)] = (l2 - jf) * (l2 - jf + nu - 1.0) / (2.0 * (l2 - jf + nf + nu - 1.0) * (l2 + nf - jf + nu));
        }
        m
    }

    /// Monic `C_n^{(ν)}` (`C_0 = 0`).
    pub fn c_monic(&self, n: usize) -> DMatrix<f64> {
        let size = self.size();
        if n == 0 {
            return DMatrix::zeros(size, size);
        }
        let (nu, l2) = (self.nu, self.two_ell as f64);
        let nf = n as f64;
        let d: Vec<f64> = (0..size)
            .map(|j| {
                let jf = j as f64;
                nf * (nf + nu - 1.0) * (l2 + nf + nu) * (l2 + nf + 2.0 * nu - 1.0)
                    / (4.0 * (l2 + nf + nu - jf - 1.0) * (l2 + nf + nu - jf) * (jf + nf + nu - 1.0) * (jf + nf + nu))
            })
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// Monic `P_0..P_n` at `x` from `x P_k = P_{k+1} + B_k P_k + C_k P_{k−1}`.
    pub fn monic_eval(&self, n: usize, x: f64) -> Vec<DMatrix<f64>> {
        let size = self.size();
        let mut out = vec![DMatrix::identity(size, size)];
        let mut prev = DMatrix::zeros(size, size);
        for k in 0..n {
            let cur = out[k].clone();
            let next = &cur * x - self.b_monic(k) * &cur - self.c_monic(k) * &prev;
            prev = cur;
            out.push(next);
        }
        out
    }

    /// Orthonormal recurrence in the positive-square-root gauge:
    /// `A_n = H_n^{−1/2} H_{n+1}^{1/2}`, `B_n = H_n^{−1/2} B_n^{(ν)} H_n^{1/2}`, `M_0 = H_0`.
    pub fn orthonormal_recurrence(&self, len: usize) -> Result<BlockRecurrence> {
        let sqrt_d = |m: &DMatrix<f64>, p: f64| m.map(|v| if v == 0.0 { 0.0 } else { v.powf(p) });
        let mut a = Vec::with_capacity(len);
        let mut b = Vec::with_capacity(len);
        for n in 0..len {
            let hn = self.h(n);
            let hn1 = self.h(n + 1);
            a.push(real_mat(&(sqrt_d(&hn, -0.5) * sqrt_d(&hn1, 0.5))));
            b.push(real_mat(&(sqrt_d(&hn, -0.5) * self.b_monic(n) * sqrt_d(&hn, 0.5))));
        }
        BlockRecurrence::new(a, b, real_mat(&self.h(0)))
    }

    /// Gauss–Jacobi rule for the envelope `(1−x²)^{ν−½}`.
    pub fn envelope_rule(&self, points: usize) -> Result<DiscreteMeasure> {
        let e = self.nu - 0.5;
        let fam = RecurrenceCoeffs::jacobi(e, e)?;
        gauss_quadrature(&fam, points, fam.m0())
    }

    /// Discrete matrix measure `W(x_j) w_j` from an envelope Gauss rule.
    pub fn weight_measure(&self, points: usize) -> Result<MatrixMeasure> {
        let rule = self.envelope_rule(points)?;
        let masses = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| real_mat(&(self.weight_reduced(x) * w)))
            .collect();
        MatrixMeasure::new(rule.nodes, masses)
    }

    /// Anti-diagonal involution `J e_n = e_{2ℓ−n}`.
    pub fn involution(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 })
    }
}
