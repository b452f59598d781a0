//! Symmetric tridiagonal eigensolver, Gauss rules from recurrence
//! coefficients, and matrix-valued (block) quadrature.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::mvop::BlockRecurrence;
use crate::opcore::RecurrenceCoeffs;
use crate::{CMat, Complex64, Error, Result};

const QL_MAX_ITER: usize = 60;

/// Real symmetric tridiagonal matrix with strictly positive off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::domain("tridiagonal matrix must have dimension >= 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::domain(format!(
                "offdiag has length {}, expected {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if let Some(i) = diag.iter().position(|d| !d.is_finite()) {
            return Err(Error::domain(format!("diag[{i}] is not finite")));
        }
        for (i, &e) in offdiag.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::domain(format!(
                    "offdiag[{i}] = {e} is not strictly positive"
                )));
            }
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// Leading principal `k`×`k` submatrix.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::domain(format!(
                "leading block of size {k} out of range 1..={}",
                self.dim()
            )));
        }
        Ok(Self {
            diag: self.diag[..k].to_vec(),
            offdiag: self.offdiag[..k - 1].to_vec(),
        })
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Implicit-shift QL. `z` is a row-major `rows`×`n` matrix whose columns are
/// rotated along with the iteration: pass the identity for full eigenvectors
/// or the row `e_0ᵀ` to track first components only.
fn ql_implicit(d: &mut [f64], offdiag: &[f64], z: &mut [f64], rows: usize) -> Result<()> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::accuracy(
                    format!("QL iteration stalled at index {l}"),
                    e[l].abs(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..rows {
                    let row = &mut z[k * n..(k + 1) * n];
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx
}

/// Full eigendecomposition `T = V Λ Vᵀ`.
pub fn eigh_tridiagonal(t: &SymTridiag) -> Result<TridiagEigen> {
    let n = t.dim();
    let mut d = t.diag.clone();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &t.offdiag, &mut z, n)?;
    let order = ascending_order(&d);
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = DMatrix::from_fn(n, n, |row, col| z[row * n + order[col]]);
    Ok(TridiagEigen { values, vectors })
}

/// Eigenvalues together with the first component of each normalized eigenvector.
pub fn eigh_first_components(t: &SymTridiag) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = t.dim();
    let mut d = t.diag.clone();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    ql_implicit(&mut d, &t.offdiag, &mut z, 1)?;
    let order = ascending_order(&d);
    Ok((
        order.iter().map(|&j| d[j]).collect(),
        order.iter().map(|&j| z[j]).collect(),
    ))
}

/// Approximate eigenvector of `t` at the eigenvalue `x`, scaled so the first
/// component is 1 (the values `p_0..p_{n−1}` of the orthonormal polynomials).
///
/// Twisted evaluation: forward ratios from the top, backward ratios from the
/// bottom, joined at the row `r` minimizing the residual `|γ_r|`. Each side runs
/// in its growing direction, so the components stay relatively accurate where
/// a plain forward recurrence cancels. `None` if an off-diagonal entry vanishes
/// or the result is not finite.
pub fn twisted_vector(t: &SymTridiag, x: f64) -> Option<Vec<f64>> {
    let (d, e) = (&t.diag, &t.offdiag);
    if e.contains(&0.0) {
        return None;
    }
    let n = t.dim();
    let guard = |v: f64| if v == 0.0 { f64::EPSILON * f64::MIN_POSITIVE.sqrt() } else { v };
    // f[i] = z_i / z_{i−1} from the top
    let mut f = vec![0.0; n];
    for i in 1..n {
        let below = if i == 1 { 0.0 } else { e[i - 2] / f[i - 1] };
        f[i] = guard(((x - d[i - 1]) - below) / e[i - 1]);
    }
    // g[i] = z_{i+1} / z_i from the bottom
    let mut g = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let above = if i + 2 == n { 0.0 } else { e[i + 1] * g[i + 1] };
        g[i] = guard(e[i] / ((x - d[i + 1]) - above));
    }
    let gamma = |r: usize| {
        let left = if r == 0 { 0.0 } else { e[r - 1] / f[r] };
        let right = if r + 1 == n { 0.0 } else { e[r] * g[r] };
        (left + d[r] - x + right).abs()
    };
    let r = (0..n).min_by(|&i, &j| gamma(i).total_cmp(&gamma(j)))?;
    let mut z = vec![0.0; n];
    z[r] = 1.0;
    for i in (0..r).rev() {
        z[i] = z[i + 1] / f[i + 1];
    }
    for i in r + 1..n {
        z[i] = z[i - 1] * g[i - 1];
    }
    let z0 = z[0];
    if !(z0.is_finite() && z0 != 0.0) || z.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(z.into_iter().map(|v| v / z0).collect())
}

/// Christoffel numbers `1/Σ_{j<n} p_j(x)²` at each node, with `p_j` the
/// orthonormal polynomials of the truncation (`p_0 = 1`), evaluated by
/// [`twisted_vector`]. These equal the squared first eigenvector components at
/// eigenvalues but keep full relative accuracy where those components are tiny.
/// `None` if the twisted evaluation fails at some node.
pub fn christoffel_numbers(t: &SymTridiag, nodes: &[f64]) -> Option<Vec<f64>> {
    nodes
        .iter()
        .map(|&x| {
            let z = twisted_vector(t, x)?;
            let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s: f64 = z.iter().map(|v| (v / scale).powi(2)).sum();
            Some(1.0 / (s * scale * scale))
        })
        .collect()
}

pub fn eigvals_tridiagonal(t: &SymTridiag) -> Result<Vec<f64>> {
    let mut d = t.diag.clone();
    ql_implicit(&mut d, &t.offdiag, &mut [], 0)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Finitely supported positive measure on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_mass: f64,
    /// Truncation level that produced the measure.
    pub truncation: usize,
}

impl DiscreteMeasure {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::data("nodes and weights must be non-empty and of equal length"));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::data("nodes must be strictly increasing"));
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::data(format!("weight {i} is not positive")));
        }
        let total_mass = weights.iter().sum();
        let truncation = nodes.len();
        Ok(Self {
            nodes,
            weights,
            total_mass,
            truncation,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Eigenvalues with unit-mass Gauss weights.
fn gauss_nodes_weights(t: &SymTridiag) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nodes, first) = eigh_first_components(t)?;
    let weights = christoffel_numbers(t, &nodes).unwrap_or_else(|| first.iter().map(|v| v * v).collect());
    Ok((nodes, weights))
}

/// Gauss rule for the measure whose orthonormal polynomials have the given
/// recurrence coefficients: nodes are the eigenvalues of the `m`×`m`
/// truncation and weights are `m0` times the Christoffel numbers
/// (the squared first eigenvector components).
pub fn gauss_quadrature(c: &RecurrenceCoeffs, m: usize, m0: f64) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(Error::domain("quadrature order must be >= 1"));
    }
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::domain(format!("total mass {m0} must be positive")));
    }
    let t = c.truncation(m)?;
    let (nodes, first) = gauss_nodes_weights(&t)?;
    let weights: Vec<f64> = first.iter().map(|v| m0 * v).collect();
    let total_mass = weights.iter().sum();
    Ok(DiscreteMeasure {
        nodes,
        weights,
        total_mass,
        truncation: m,
    })
}

/// Finitely supported matrix-valued measure with PSD masses.
#[derive(Debug, Clone)]
pub struct MatrixMeasure {
    pub nodes: Vec<f64>,
    pub masses: Vec<CMat>,
    pub truncation: usize,
}

impl MatrixMeasure {
    pub fn new(nodes: Vec<f64>, masses: Vec<CMat>) -> Result<Self> {
        if nodes.len() != masses.len() || nodes.is_empty() {
            return Err(Error::data("nodes and masses must be non-empty and of equal length"));
        }
        let n = masses[0].nrows();
        for (j, w) in masses.iter().enumerate() {
            if w.nrows() != n || w.ncols() != n {
                return Err(Error::data(format!("mass {j} is not {n}x{n}")));
            }
            if hermitian_defect(w) > 1e-12 * (1.0 + w.norm()) {
                return Err(Error::data(format!("mass {j} is not Hermitian")));
            }
            let (ev, _) = herm_eigh(w);
            if ev[0] < -1e-12 {
                return Err(Error::data(format!(
                    "mass {j} is not positive semidefinite (min eigenvalue {:.3e})",
                    ev[0]
                )));
            }
        }
        let m = Self {
            truncation: nodes.len(),
            nodes,
            masses,
        };
        if m.total_mass().trace().re <= 0.0 {
            return Err(Error::data("total mass has non-positive trace"));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.masses[0].nrows()
    }

    pub fn total_mass(&self) -> CMat {
        let n = self.dim();
        self.masses
            .iter()
            .fold(CMat::zeros(n, n), |acc, w| acc + w)
    }

    /// `Σ F(x_j) W_j G(x_j)*`.
    pub fn pair(&self, mut f: impl FnMut(f64) -> CMat, mut g: impl FnMut(f64) -> CMat) -> CMat {
        let mut acc: Option<CMat> = None;
        for (&x, w) in self.nodes.iter().zip(&self.masses) {
            let term = f(x) * w * g(x).adjoint();
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.expect("measure is non-empty")
    }

    /// Matrix moment `Σ x_jᵏ W_j`.
    pub fn moment(&self, k: u32) -> CMat {
        let n = self.dim();
        self.nodes
            .iter()
            .zip(&self.masses)
            .fold(CMat::zeros(n, n), |acc, (&x, w)| acc + w * Complex64::from(x.powi(k as i32)))
    }
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// Hermitian eigendecomposition sorted ascending. The input is symmetrized first.
pub fn herm_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let order = ascending_order(eig.eigenvalues.as_slice());
    let n = m.nrows();
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

const SQRT_FLOOR: f64 = 1e-13;

fn herm_power(m: &CMat, power: f64, what: &str) -> Result<CMat> {
    let (ev, v) = herm_eigh(m);
    let scale = ev.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(f64::MIN_POSITIVE);
    if ev[0] < -1e-10 * scale || (power < 0.0 && ev[0] <= SQRT_FLOOR * scale) {
        return Err(Error::domain(format!(
            "{what}: matrix is not positive definite (min eigenvalue {:.3e})",
            ev[0]
        )));
    }
    let d: Vec<Complex64> = ev
        .iter()
        .map(|&e| Complex64::from(e.max(SQRT_FLOOR * scale).powf(power)))
        .collect();
    let n = m.nrows();
    let mut vd = v.clone();
    for c in 0..n {
        for r in 0..n {
            vd[(r, c)] *= d[c];
        }
    }
    Ok(vd * v.adjoint())
}

/// Positive square root of a Hermitian positive semidefinite matrix.
pub fn herm_sqrt(m: &CMat) -> Result<CMat> {
    herm_power(m, 0.5, "square root")
}

/// Inverse of the positive square root of a Hermitian positive definite matrix.
pub fn herm_inv_sqrt(m: &CMat) -> Result<CMat> {
    herm_power(m, -0.5, "inverse square root")
}

/// Ratio of smallest to largest singular value.
pub fn inverse_condition(m: &CMat) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Invertibility threshold for off-diagonal blocks.
pub const BLOCK_RCOND_MIN: f64 = 1e-14;

/// Hermitian block tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct BlockTridiag {
    diag_blocks: Vec<CMat>,
    off_blocks: Vec<CMat>,
}

impl BlockTridiag {
    pub fn new(diag_blocks: Vec<CMat>, off_blocks: Vec<CMat>) -> Result<Self> {
        if diag_blocks.is_empty() || off_blocks.len() + 1 != diag_blocks.len() {
            return Err(Error::domain("block tridiagonal needs M >= 1 diagonal and M-1 off blocks"));
        }
        let n = diag_blocks[0].nrows();
        for (k, b) in diag_blocks.iter().enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::domain(format!("diagonal block {k} is not {n}x{n}")));
            }
            if hermitian_defect(b) > 1e-12 * (1.0 + b.norm()) {
                return Err(Error::domain(format!("diagonal block {k} is not Hermitian")));
            }
        }
        for (k, a) in off_blocks.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::domain(format!("off block {k} is not {n}x{n}")));
            }
            if inverse_condition(a) < BLOCK_RCOND_MIN {
                return Err(Error::domain(format!("off-diagonal block A_{k} is singular")));
            }
        }
        Ok(Self {
            diag_blocks,
            off_blocks,
        })
    }

    pub fn block_size(&self) -> usize {
        self.diag_blocks[0].nrows()
    }

    pub fn blocks(&self) -> usize {
        self.diag_blocks.len()
    }

    /// Dense form with `A_k` in block position `(k, k+1)` and `A_k*` in `(k+1, k)`.
    pub fn to_dense(&self) -> CMat {
        let n = self.block_size();
        let m = self.blocks();
        let mut out = CMat::zeros(n * m, n * m);
        for (k, b) in self.diag_blocks.iter().enumerate() {
            out.view_mut((k * n, k * n), (n, n)).copy_from(b);
        }
        for (k, a) in self.off_blocks.iter().enumerate() {
            out.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(a);
            out.view_mut(((k + 1) * n, k * n), (n, n)).copy_from(&a.adjoint());
        }
        out
    }

    /// Eigenvalues (ascending) and eigenvector columns of the dense form.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        herm_eigh(&self.to_dense())
    }
}

fn real_positive_scalar(b: &BlockRecurrence, m: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if b.dim() != 1 {
        return None;
    }
    let diag: Vec<f64> = (0..m).map(|k| b.b(k)[(0, 0)]).map(|z| (z.im == 0.0).then_some(z.re)).collect::<Option<_>>()?;
    let off: Vec<f64> = (0..m.saturating_sub(1))
        .map(|k| b.a(k)[(0, 0)])
        .map(|z| (z.im == 0.0 && z.re > 0.0).then_some(z.re))
        .collect::<Option<_>>()?;
    Some((diag, off))
}

/// Matrix Gauss rule from the `m`-block truncation of a block recurrence.
/// Masses of numerically coincident eigenvalues (within `1e-10·ρ`) are summed.
pub fn block_quadrature(b: &BlockRecurrence, m: usize) -> Result<MatrixMeasure> {
    if m == 0 {
        return Err(Error::domain("quadrature order must be >= 1"));
    }
    b.check_len(m)?;
    let n = b.dim();

    // Scalar real recurrences take the tridiagonal path so the result matches
    // `gauss_quadrature` exactly.
    if let Some((diag, off)) = real_positive_scalar(b, m) {
        let m0 = b.m0()[(0, 0)].re;
        let t = SymTridiag::new(diag, off)?;
        let (nodes, first) = gauss_nodes_weights(&t)?;
        let masses = first
            .iter()
            .map(|v| CMat::from_element(1, 1, Complex64::from(m0 * v)))
            .collect();
        return Ok(MatrixMeasure {
            nodes,
            masses,
            truncation: m,
        });
    }

    let bt = BlockTridiag::new(
        (0..m).map(|k| b.b(k).clone()).collect(),
        (0..m - 1).map(|k| b.a(k).clone()).collect(),
    )?;
    let (values, vectors) = bt.eigh();
    let m0h = herm_sqrt(b.m0())?;
    let radius = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * radius.max(f64::MIN_POSITIVE);

    let mut nodes: Vec<f64> = Vec::new();
    let mut masses: Vec<CMat> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for (j, &lam) in values.iter().enumerate() {
        let top = vectors.view((0, j), (n, 1)).into_owned();
        let w = &m0h * &top * top.adjoint() * &m0h;
        match group.last() {
            Some(&prev) if lam - prev <= tol => {
                group.push(lam);
                let last = masses.last_mut().expect("group has a mass");
                *last += w;
                let k = nodes.len() - 1;
                nodes[k] = group.iter().sum::<f64>() / group.len() as f64;
            }
            _ => {
                group.clear();
                group.push(lam);
                nodes.push(lam);
                masses.push(w);
            }
        }
    }
    Ok(MatrixMeasure {
        nodes,
        masses,
        truncation: m,
    })
}
