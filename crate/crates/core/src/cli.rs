//! Run configuration, tabular reports and verification suites used by the
//! `spectraljacobi` binary.
//!
//! Every command produces a [`Table`]; tables render to CSV (header row
//! always present) or to JSON tagged with [`SCHEMA`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::jmatrix::{five_term_solution, FiveTermModel, JacobiTModel, MorseModel};
use crate::mvop::{
    commutant_from_moments, eval_block_pair, gegenbauer, liouville_ostrogradsky_defect, BlockRecurrence,
    GegenbauerFamily,
};
use crate::opcore::{eval_derivs, eval_pair, lognormal_moment, markov_stieltjes, node_values, zeros, RecurrenceCoeffs};
use crate::qkernel::{
    casorati, casorati_drift, discrete_spectrum, nextremal_gram, nextremal_norm, phi_minus_seq, phi_plus_seq,
    wronskian_closed, BiInfiniteCoeffs, QParams,
};
use crate::trisolve::{block_quadrature, gauss_quadrature};
use crate::{CMat, Complex64, Error, Result};

/// Version tag carried by every JSON document.
pub const SCHEMA: &str = "spectraljacobi/1";

/// Environment variable naming a [`RunConfig`] JSON file.
pub const CONFIG_ENV: &str = "SPECTRALJACOBI_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Tolerance classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact identities evaluated in floating point.
    pub identity: f64,
    /// Checks backed by a quadrature rule.
    pub quadrature: f64,
    /// Checks involving truncated infinite sums or integrals.
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-10,
            quadrature: 1e-8,
            tail: 1e-6,
        }
    }
}

/// Precision targets, truncation budgets and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    /// Half-width `L` of windows on ℤ.
    pub window: i64,
    /// Truncation degree `M`.
    pub degree: usize,
    /// Points in quadrature rules used as oracles.
    pub quad_order: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Seed for randomized checks.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            window: 60,
            degree: 30,
            quad_order: 200,
            format: Format::Csv,
            output: None,
            seed: 20240611,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("identity", t.identity), ("quadrature", t.quadrature), ("tail", t.tail)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("tolerance {name} = {v} must be positive")));
            }
        }
        if self.window < 1 || self.degree < 1 || self.quad_order < 1 {
            return Err(Error::domain("window, degree and quad_order must be >= 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::data(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A rectangular report with named columns and free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub meta: BTreeMap<String, Value>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, v: impl Into<Value>) {
        self.meta.insert(key.to_string(), v.into());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::data(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::data(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "columns": self.columns,
            "rows": rows,
            "meta": self.meta,
        })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(&self.to_json())
                .map(|s| s + "\n")
                .map_err(|e| Error::data(format!("json: {e}"))),
        }
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    // non-finite values have no JSON number form
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

/// One residual checked against a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
        }
    }

    /// NaN residuals fail.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Outcome of a verify run, sorted by check name.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new("verify", &["check", "residual", "tolerance", "status"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone().into(),
                num(c.residual),
                num(c.tolerance),
                (if c.passed() { "pass" } else { "FAIL" }).into(),
            ]);
        }
        t.meta("suite", self.suite.clone());
        t.meta("passed", self.passed());
        t.meta("checks", self.checks.len());
        t
    }
}

/// Extra parameters for verify suites.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOptions {
    /// Morse parameter; defaults to both 2.2 and 3.7.
    pub b: Option<f64>,
}

type SuiteFn = fn(&RunConfig, &VerifyOptions) -> Result<Vec<Check>>;

/// Available suites, sorted by name.
pub const SUITES: &[(&str, SuiteFn)] = &[
    ("casorati", suite_casorati),
    ("cdh", suite_cdh),
    ("commutant", suite_commutant),
    ("expansion", suite_expansion),
    ("favard", suite_favard),
    ("fiveterm", suite_fiveterm),
    ("fold", suite_fold),
    ("gegenbauer", suite_gegenbauer),
    ("jacobit", suite_jacobit),
    ("liouville", suite_liouville),
    ("markov", suite_markov),
    ("morse", suite_morse),
    ("norms", suite_norms),
    ("orthogonality", suite_orthogonality),
    ("stieltjes", suite_stieltjes),
    ("wronskian", suite_wronskian),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Runs one suite, or every suite for `"all"`.
pub fn verify(suite: &str, cfg: &RunConfig, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if suite == "all" {
        for (name, f) in SUITES {
            checks.extend(f(cfg, opts)?.into_iter().map(|mut c| {
                c.name = format!("{name}/{}", c.name);
                c
            }));
        }
    } else {
        let f = SUITES
            .iter()
            .find(|s| s.0 == suite)
            .ok_or_else(|| {
                Error::domain(format!("unknown suite '{suite}'; available: all, {}", suite_names().join(", ")))
            })?
            .1;
        checks = f(cfg, opts)?;
    }
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(VerifyReport {
        suite: suite.to_string(),
        checks,
    })
}

fn rng(cfg: &RunConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn suite_casorati(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut r = rng(cfg, 1);
    let mut out = Vec::new();
    for i in 0..100 {
        let q = r.random_range(0.2..0.8);
        let alpha = r.random_range(q..1.0);
        let z = Complex64::new(r.random_range(-2.0..2.0), r.random_range(0.1..2.0));
        let p = QParams::new(q, alpha.max(q + 1e-3).min(1.0))?;
        let c = BiInfiniteCoeffs::qhermite(p);
        let v = phi_plus_seq(&p, z, -10, 11)?;
        let f = phi_minus_seq(&p, z, -10, 11)?;
        out.push(Check::new(format!("drift/{i:03}"), casorati_drift(&v, &f, &c, -10, 10)?, cfg.tolerances.identity));
    }
    Ok(out)
}

fn suite_wronskian(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &alpha in &[0.6, 0.8, 1.0] {
        let p = QParams::new(0.5, alpha)?;
        let c = BiInfiniteCoeffs::qhermite(p);
        for j in 0..20 {
            let th = 0.3 + j as f64 * 0.27;
            let z = Complex64::from_polar(0.2 + 0.15 * j as f64, th);
            let v = phi_plus_seq(&p, z, -1, 1)?;
            let f = phi_minus_seq(&p, z, -1, 1)?;
            let w = casorati(&v, &f, &c, 0)?;
            let res = (w - wronskian_closed(&p, z)?).norm() / z.norm();
            out.push(Check::new(format!("alpha={alpha}/z{j:02}"), res, cfg.tolerances.quadrature));
        }
    }
    Ok(out)
}

fn suite_orthogonality(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let p = QParams::new(0.5, 0.8)?;
    let g = nextremal_gram(&p, cfg.window, 8)?;
    let mut out = Vec::new();
    for n in 0..=8 {
        for m in 0..=8 {
            let (hn, hm) = (nextremal_norm(&p, n)?, nextremal_norm(&p, m)?);
            let want = if n == m { hn } else { 0.0 };
            out.push(Check::new(
                format!("gram/{n}-{m}"),
                (g[(n, m)] - want).abs() / (hn * hm).sqrt(),
                cfg.tolerances.quadrature,
            ));
        }
    }
    Ok(out)
}

fn suite_norms(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let p = QParams::new(0.5, 0.8)?;
    Ok(discrete_spectrum(&p, 6, cfg.window)?
        .iter()
        .map(|e| Check::new(format!("norm/{}", e.n), e.norm_check_error, cfg.tolerances.quadrature))
        .collect())
}

/// Recurrence with `a_n ∈ [0.3, 2]`, `b_n ∈ [−1, 1]`.
pub fn random_bounded_family(r: &mut impl Rng, len: usize) -> Result<RecurrenceCoeffs> {
    let a = (0..len).map(|_| r.random_range(0.3..2.0)).collect();
    let b = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
    RecurrenceCoeffs::explicit("random", 1.0, a, b)
}

/// `max |∫ p_n p_m dμ_M − δ_nm|` over `n, m < M`.
pub fn favard_defect(c: &RecurrenceCoeffs, m: usize) -> Result<f64> {
    let rule = gauss_quadrature(c, m, c.m0())?;
    let mut g = DMatrix::<f64>::zeros(m, m);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = node_values(c, m, x)?;
        for i in 0..m {
            for j in 0..m {
                g[(i, j)] += w / c.m0() * p[i] * p[j];
            }
        }
    }
    Ok((g - DMatrix::identity(m, m)).abs().max())
}

fn suite_favard(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut r = rng(cfg, 2);
    let m = cfg.degree;
    (0..20)
        .map(|i| {
            let c = random_bounded_family(&mut r, m + 1)?;
            Ok(Check::new(format!("family/{i:02}"), favard_defect(&c, m)?, cfg.tolerances.identity))
        })
        .collect()
}

fn suite_stieltjes(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 0..=8u32 {
        let base = lognormal_moment(n, 1.0, 0.0)?;
        for &r in &[-1.0, -0.5, 0.5, 1.0] {
            let v = lognormal_moment(n, 1.0, r)?;
            out.push(Check::new(format!("moment/n={n}/r={r}"), (v - base).abs(), cfg.tolerances.identity));
        }
    }
    Ok(out)
}

/// `(2/π) ∫ √(1−x²)/(x−z) dx` by an `npts`-point Gauss–Chebyshev (second kind) rule
/// with explicit nodes.
pub fn semicircle_transform_quadrature(z: Complex64, npts: usize) -> Complex64 {
    let h = std::f64::consts::PI / (npts as f64 + 1.0);
    let mut s = Complex64::from(0.0);
    for k in 1..=npts {
        let th = k as f64 * h;
        let w = 2.0 / std::f64::consts::PI * h * th.sin().powi(2);
        s += w / (th.cos() - z);
    }
    s
}

fn suite_markov(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let c = RecurrenceCoeffs::chebyshev_u();
    let z = Complex64::new(0.0, 2.0);
    let approx = markov_stieltjes(&c, z, 200)?;
    let oracle = semicircle_transform_quadrature(z, 400);
    Ok(vec![Check::new("semicircle/z=2i/n=200", (approx - oracle).norm(), cfg.tolerances.quadrature)])
}

/// Random block recurrence: `A_n = I + 0.4 G`, `B_n` Hermitian, `M_0` positive definite.
pub fn random_block_recurrence(r: &mut impl Rng, dim: usize, len: usize) -> Result<BlockRecurrence> {
    let uniform = |r: &mut dyn rand::RngCore| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let mut a = Vec::with_capacity(len);
    let mut b = Vec::with_capacity(len);
    for _ in 0..len {
        let g = CMat::from_fn(dim, dim, |_, _| uniform(r));
        a.push(CMat::identity(dim, dim) + g * Complex64::from(0.4));
        let h = CMat::from_fn(dim, dim, |_, _| uniform(r));
        b.push((&h + h.adjoint()) * Complex64::from(0.5));
    }
    let s = CMat::from_fn(dim, dim, |_, _| uniform(r));
    let m0 = &s * s.adjoint() + CMat::identity(dim, dim) * Complex64::from(0.5);
    BlockRecurrence::new(a, b, m0)
}

fn suite_liouville(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut r = rng(cfg, 3);
    let z = Complex64::new(1.0, 1.0);
    let tol = cfg.tolerances.identity;
    let mut out = Vec::new();
    let mut push = |name: String, b: &BlockRecurrence, kmax: usize| -> Result<()> {
        let mut worst: f64 = 0.0;
        for k in 1..=kmax {
            let (d1, d2) = liouville_ostrogradsky_defect(b, k, z)?.relative();
            worst = worst.max(d1).max(d2);
        }
        out.push(Check::new(name, worst, tol));
        Ok(())
    };
    for dim in [2usize, 3] {
        for i in 0..50 {
            let b = random_block_recurrence(&mut r, dim, 21)?;
            push(format!("random{dim}x{dim}/{i:02}"), &b, 20)?;
        }
    }
    for two_ell in [1usize, 2] {
        let b = gegenbauer(two_ell, 1.5)?.orthonormal_recurrence(21)?;
        push(format!("gegenbauer/2l={two_ell}"), &b, 20)?;
    }
    Ok(out)
}

/// `max |∫ P_n W P_m* − δ_nm H_n|` entrywise over `n, m ≤ nmax` for the monic family.
pub fn gegenbauer_orthogonality_defect(g: &GegenbauerFamily, nmax: usize, points: usize) -> Result<f64> {
    let rule = g.envelope_rule(points)?;
    let size = g.size();
    let mut gram = vec![vec![DMatrix::<f64>::zeros(size, size); nmax + 1]; nmax + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = g.monic_eval(nmax, x);
        let wx = g.weight_reduced(x) * w;
        for n in 0..=nmax {
            let pw = &p[n] * &wx;
            for m in 0..=nmax {
                gram[n][m] += &pw * p[m].transpose();
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (n, row) in gram.iter().enumerate() {
        for (m, gnm) in row.iter().enumerate() {
            let want = if n == m { g.h(n) } else { DMatrix::zeros(size, size) };
            worst = worst.max((gnm - want).abs().max());
        }
    }
    Ok(worst)
}

fn suite_gegenbauer(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for two_ell in [1usize, 2] {
        let g = gegenbauer(two_ell, 1.5)?;
        out.push(Check::new(
            format!("orthogonality/2l={two_ell}"),
            gegenbauer_orthogonality_defect(&g, 5, cfg.quad_order)?,
            cfg.tolerances.quadrature * 0.1,
        ));
    }
    Ok(out)
}

/// Moments `M_k = ∫_0^1 x^k [[x²+x, x], [x, x]] dx`.
pub fn exercise_weight_moments(kmax: usize) -> Vec<CMat> {
    (0..=kmax)
        .map(|k| {
            let k = k as f64;
            let (a, b) = (1.0 / (k + 3.0) + 1.0 / (k + 2.0), 1.0 / (k + 2.0));
            CMat::from_row_slice(2, 2, &[a.into(), b.into(), b.into(), b.into()])
        })
        .collect()
}

fn suite_commutant(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let ex = commutant_from_moments(&exercise_weight_moments(12))?;
    out.push(Check::new("exercise/dim_A=1", (ex.dim_a() as f64 - 1.0).abs(), 0.0));
    out.push(Check::new(
        "exercise/dim_Acal>=2",
        if ex.dim_acal() >= 2 { 0.0 } else { 1.0 },
        0.0,
    ));
    let g = gegenbauer(2, 1.5)?;
    let mm = g.weight_measure(cfg.quad_order)?;
    let moments: Vec<CMat> = (0..=12).map(|k| mm.moment(k)).collect();
    let cm = commutant_from_moments(&moments)?;
    out.push(Check::new("gegenbauer/dim_A=2", (cm.dim_a() as f64 - 2.0).abs(), 0.0));
    let j = g.involution();
    let jc = j.map(Complex64::from);
    out.push(Check::new("gegenbauer/J_in_A", span_residual(&cm.a_basis, &jc), cfg.tolerances.identity));
    let mut worst: f64 = 0.0;
    for n in 0..=10 {
        for m in [g.b_monic(n), g.c_monic(n), g.h(n)] {
            worst = worst.max((&j * &m - &m * &j).abs().max() / m.abs().max().max(f64::MIN_POSITIVE));
        }
    }
    out.push(Check::new("gegenbauer/J_commutes", worst, 1e-12));
    Ok(out)
}

/// Relative distance of `t` from the complex span of `basis`.
pub fn span_residual(basis: &[CMat], t: &CMat) -> f64 {
    let n = t.nrows();
    let k = basis.len();
    if k == 0 {
        return 1.0;
    }
    let mut a = CMat::zeros(n * n, k);
    for (j, b) in basis.iter().enumerate() {
        for i in 0..n * n {
            a[(i, j)] = b[(i / n, i % n)];
        }
    }
    let rhs = nalgebra::DVector::from_fn(n * n, |i, _| t[(i / n, i % n)]);
    let svd = a.clone().svd(true, true);
    match svd.solve(&rhs, 1e-12) {
        Ok(x) => (&a * x - &rhs).norm() / rhs.norm(),
        Err(_) => 1.0,
    }
}

fn morse_values(opts: &VerifyOptions) -> Vec<f64> {
    opts.b.map(|b| vec![b]).unwrap_or_else(|| vec![2.2, 3.7])
}

fn suite_morse(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.identity;
    let mut out = Vec::new();
    for b in morse_values(opts) {
        let m = MorseModel::new(b)?;
        let f = m.bound_states();
        let e = m.bound_states_eigensolve()?;
        for (i, (x, y)) in f.iter().zip(&e).enumerate() {
            out.push(Check::new(format!("b={b}/bound/{i}"), (x - y).abs(), tol));
        }
        out.push(Check::new(format!("b={b}/split"), m.tridiag(m.n_cap()).0.abs(), 0.0));
        for i in 0..m.n_cap() {
            let p = m.finite_polys(f[i]);
            let d = m.dual_hahn_vector(i)?;
            let r = p.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            out.push(Check::new(format!("b={b}/dual_hahn/{i}"), r, 10.0 * tol));
        }
        let mut worst: f64 = 0.0;
        for n in 0..6 {
            for &x2 in &[0.4, 1.7, 5.0] {
                worst = worst.max(m.cdh_recurrence_residual(n, x2)?);
            }
        }
        out.push(Check::new(format!("b={b}/cdh_rows"), worst, tol));
    }
    Ok(out)
}

fn suite_expansion(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for b in morse_values(opts) {
        let m = MorseModel::new(b)?;
        for i in 0..m.n_cap() {
            for &z in &[0.5, 1.0, 3.0] {
                let (r, s) = m.expansion_defect(i, z)?;
                out.push(Check::new(format!("b={b}/m={i}/z={z}"), r / s, 10.0 * cfg.tolerances.identity));
            }
        }
    }
    Ok(out)
}

fn suite_cdh(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let b = opts.b.unwrap_or(2.2);
    let m = MorseModel::new(b)?;
    let g = m.cdh_gram(4, 1e-3 * cfg.tolerances.tail)?;
    let mut out = Vec::new();
    for n in 0..=4 {
        for k in n..=4 {
            let want = if n == k { 1.0 } else { 0.0 };
            out.push(Check::new(format!("b={b}/{n}-{k}"), (g[(n, k)] - want).abs(), cfg.tolerances.tail));
        }
    }
    Ok(out)
}

/// `(max off-band |⟨Tφ_n,φ_m⟩|, max |band − closed form|)` for `n ≤ nmax`.
pub fn jacobi_t_defects(t: &JacobiTModel, nmax: usize) -> Result<(f64, f64)> {
    let p = t.projection(nmax + 1)?;
    let mut off: f64 = 0.0;
    let mut band: f64 = 0.0;
    for n in 0..=nmax {
        for m in 0..=nmax + 1 {
            if n.abs_diff(m) >= 2 {
                off = off.max(p[(n, m)].abs());
            }
        }
        let (a, b) = t.coeffs(n);
        band = band.max((p[(n, n)] - b).abs());
        band = band.max((p[(n, n + 1)] - a).abs()).max((p[(n + 1, n)] - a).abs());
    }
    Ok((off, band))
}

fn suite_jacobit(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.quadrature * 0.1;
    let mut out = Vec::new();
    for (a, b, d) in [(0.5, 0.5, 0.0), (0.3, 0.8, 0.25)] {
        let t = JacobiTModel::real(a, b, d)?;
        let (off, band) = jacobi_t_defects(&t, 20)?;
        let tag = format!("({a},{b},{d})");
        out.push(Check::new(format!("{tag}/off_band"), off, tol));
        out.push(Check::new(format!("{tag}/band"), band, tol));
        let w = (0..20)
            .map(|n| {
                let (d1, d2) = t.wilson_defect(n);
                let (an, bn) = t.coeffs(n);
                (d1 / bn.abs().max(1.0)).max(d2 / an.abs().max(1.0))
            })
            .fold(0.0, f64::max);
        out.push(Check::new(format!("{tag}/wilson"), w, cfg.tolerances.identity));
    }
    Ok(out)
}

/// Max deviation of the projected five-term pattern from `(a_n, b_n, c_n, b_{n−1}, a_{n−2})`
/// and of all entries outside the band.
pub fn five_term_projection_defect(f: &FiveTermModel, nmax: usize) -> Result<f64> {
    let p = f.projection(nmax + 2)?;
    let mut worst: f64 = 0.0;
    for n in 0..=nmax {
        let (a, b, c) = f.coeffs(n);
        for m in 0..=nmax + 2 {
            let want = match m as i64 - n as i64 {
                2 => a,
                1 => b,
                0 => c,
                -1 => f.coeffs(n - 1).1,
                -2 => f.coeffs(n - 2).0,
                _ => 0.0,
            };
            worst = worst.max((p[(n, m)] - want).abs());
        }
    }
    Ok(worst)
}

fn suite_fiveterm(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let f = FiveTermModel::new(0.3, 0.8, 0.4)?;
    let mut out = Vec::new();
    for &x in &[-0.7, 0.1, 0.9] {
        let d = f.connection_defects(10, x)?.into_iter().fold(0.0, f64::max);
        out.push(Check::new(format!("connection/x={x}"), d, cfg.tolerances.identity));
    }
    out.push(Check::new("projection", five_term_projection_defect(&f, 10)?, cfg.tolerances.quadrature));
    Ok(out)
}

/// `max_n ‖U_n − P_n(λ)U_0‖ / max(‖U_n‖, 1)` for `n ≤ nmax`, seeds `(u_0, u_1) = (1, 0.5)`.
pub fn fold_equivalence_defect(f: &FiveTermModel, lambda: Complex64, nmax: usize) -> Result<f64> {
    let b = f.fold(nmax + 1)?;
    let u = f.scalar_solution(lambda, Complex64::from(1.0), Complex64::from(0.5), 2 * nmax + 2);
    let pair = eval_block_pair(&b, nmax, lambda)?;
    let u0 = nalgebra::DVector::from_vec(vec![u[0], u[1]]);
    let mut worst: f64 = 0.0;
    for n in 0..=nmax {
        let un = nalgebra::DVector::from_vec(vec![u[2 * n], u[2 * n + 1]]);
        let pu = &pair.p[n] * &u0;
        worst = worst.max((&un - pu).norm() / un.norm().max(1.0));
    }
    Ok(worst)
}

fn suite_fold(cfg: &RunConfig, _: &VerifyOptions) -> Result<Vec<Check>> {
    let f = FiveTermModel::new(0.3, 0.8, -0.16)?;
    let mut out = Vec::new();
    for (name, lam) in [
        ("-7", Complex64::from(-7.0)),
        ("-2", Complex64::from(-2.0)),
        ("1+i", Complex64::new(1.0, 1.0)),
    ] {
        out.push(Check::new(
            format!("equivalence/lambda={name}"),
            fold_equivalence_defect(&f, lam, 15)?,
            cfg.tolerances.identity * 10.0,
        ));
    }
    let b = f.fold(16)?;
    let mut worst: f64 = 0.0;
    for k in 1..=15 {
        let (d1, d2) = liouville_ostrogradsky_defect(&b, k, Complex64::new(1.0, 1.0))?.relative();
        worst = worst.max(d1).max(d2);
    }
    out.push(Check::new("liouville", worst, cfg.tolerances.identity * 10.0));
    Ok(out)
}

// ---- data commands ----

pub fn cmd_quad(family: &str, order: usize, m0: Option<f64>) -> Result<Table> {
    let c = RecurrenceCoeffs::from_name(family)?;
    let m0 = m0.unwrap_or(c.m0());
    let rule = gauss_quadrature(&c, order, m0)?;
    let mut t = Table::new("quad", &["j", "node", "weight"]);
    for (j, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        t.push(vec![j.into(), num(*x), num(*w)]);
    }
    t.meta("family", c.label());
    t.meta("truncation", order);
    t.meta("total_mass", num(rule.total_mass));
    Ok(t)
}

pub fn cmd_ops(family: &str, degree: usize, x: f64, y: Option<f64>) -> Result<Table> {
    let c = RecurrenceCoeffs::from_name(family)?;
    let pair = eval_pair(&c, degree, Complex64::from(x))?;
    let (_, d1, _) = eval_derivs(&c, degree, x)?;
    let mut t = Table::new("ops", &["k", "p", "r", "dp"]);
    for k in 0..=degree {
        t.push(vec![k.into(), num(pair.p[k].re), num(pair.r[k].re), num(d1[k])]);
    }
    t.meta("family", c.label());
    t.meta("x", num(x));
    if degree >= 1 {
        t.meta("zeros", zeros(&c, degree)?.into_iter().map(num).collect::<Vec<_>>());
        if let Some(y) = y {
            t.meta("cd_kernel", num(crate::opcore::cd_kernel(&c, degree, x, y)?));
        }
    }
    Ok(t)
}

pub fn cmd_qhermite(q: f64, alpha: f64, nmax: usize, window: i64) -> Result<Table> {
    let p = QParams::new(q, alpha)?;
    let spec = discrete_spectrum(&p, nmax, window)?;
    let g = nextremal_gram(&p, window, nmax)?;
    let mut t = Table::new(
        "qhermite",
        &["n", "eigenvalue", "norm_sq", "norm_closed", "norm_check_error", "nextremal_error"],
    );
    for e in &spec {
        let n = e.n;
        let mut worst: f64 = 0.0;
        for m in 0..=nmax {
            let (hn, hm) = (nextremal_norm(&p, n)?, nextremal_norm(&p, m)?);
            let want = if n == m { hn } else { 0.0 };
            worst = worst.max((g[(n, m)] - want).abs() / (hn * hm).sqrt());
        }
        t.push(vec![
            n.into(),
            num(e.eigenvalue),
            num(e.norm_sq),
            num(e.norm_closed),
            num(e.norm_check_error),
            num(worst),
        ]);
    }
    t.meta("q", num(q));
    t.meta("alpha", num(alpha));
    t.meta("window", window);
    Ok(t)
}

pub fn cmd_mvop(recurrence_json: &str, order: usize, z: Option<Complex64>) -> Result<Table> {
    let b = BlockRecurrence::from_json(recurrence_json)?;
    let mm = block_quadrature(&b, order)?;
    let n = b.dim();
    let mut cols: Vec<String> = vec!["j".into(), "node".into()];
    for r in 0..n {
        for c in 0..n {
            cols.push(format!("m{r}{c}_re"));
            cols.push(format!("m{r}{c}_im"));
        }
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("mvop", &col_refs);
    for (j, (x, m)) in mm.nodes.iter().zip(&mm.masses).enumerate() {
        let mut row = vec![j.into(), num(*x)];
        for r in 0..n {
            for c in 0..n {
                row.push(num(m[(r, c)].re));
                row.push(num(m[(r, c)].im));
            }
        }
        t.push(row);
    }
    t.meta("truncation", order);
    if let Some(z) = z {
        let s = crate::mvop::mv_markov(&b, z, order)?;
        t.meta("markov", matrix_json(&s));
    }
    Ok(t)
}

fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([num(m[(r, c)].re), num(m[(r, c)].im)])).collect()))
            .collect(),
    )
}

pub fn cmd_gegenbauer(two_ell: usize, nu: f64, nmax: usize, points: usize) -> Result<Table> {
    let g = gegenbauer(two_ell, nu)?;
    let rule = g.envelope_rule(points)?;
    let size = g.size();
    let mut t = Table::new("gegenbauer", &["n", "k", "h_closed", "h_quadrature", "rel_error"]);
    for n in 0..=nmax {
        let mut h = DMatrix::<f64>::zeros(size, size);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let p = &g.monic_eval(n, x)[n];
            h += p * g.weight_reduced(x) * p.transpose() * w;
        }
        let hc = g.h(n);
        for k in 0..size {
            let rel = (h[(k, k)] - hc[(k, k)]).abs() / hc[(k, k)];
            t.push(vec![n.into(), k.into(), num(hc[(k, k)]), num(h[(k, k)]), num(rel)]);
        }
    }
    t.meta("two_ell", two_ell);
    t.meta("nu", num(nu));
    t.meta("quadrature_points", points);
    Ok(t)
}

pub fn cmd_morse(b: f64) -> Result<Table> {
    let m = MorseModel::new(b)?;
    let f = m.bound_states();
    let e = m.bound_states_eigensolve()?;
    let mut t = Table::new("morse", &["m", "eigenvalue", "formula", "eigensolve", "abs_diff"]);
    for (i, (x, y)) in f.iter().zip(&e).enumerate() {
        t.push(vec![i.into(), num(*x), "-(b-m-1/2)^2".into(), num(*y), num((x - y).abs())]);
    }
    t.meta("b", num(b));
    t.meta("N", m.n_cap());
    Ok(t)
}

pub fn cmd_jacobi_t(alpha: f64, beta: f64, delta: f64, nmax: usize) -> Result<Table> {
    let tm = JacobiTModel::real(alpha, beta, delta)?;
    let p = tm.projection(nmax)?;
    let mut t = Table::new("jacobiT", &["n", "m", "abs_value"]);
    for n in 0..=nmax {
        for m in 0..=nmax {
            t.push(vec![n.into(), m.into(), num(p[(n, m)].abs())]);
        }
    }
    let s = tm.spectrum();
    t.meta("continuous_upper", num(s.continuous_upper));
    t.meta("discrete", s.discrete.into_iter().map(num).collect::<Vec<_>>());
    t.meta("gamma", num(tm.gamma()));
    Ok(t)
}

pub fn cmd_fiveterm(alpha: f64, beta: f64, kappa2: f64, nmax: usize) -> Result<Table> {
    let f = FiveTermModel::new(alpha, beta, kappa2)?;
    let mut t = Table::new("fiveterm", &["n", "a", "b", "c", "alpha_n", "beta_n", "gamma_n"]);
    for n in 0..=nmax {
        let (a, b, c) = f.coeffs(n);
        let (x, y, z) = f.connection(n);
        t.push(vec![n.into(), num(a), num(b), num(c), num(x), num(y), num(z)]);
    }
    t.meta("K", num(f.k_const()));
    t.meta("rho", num(f.rho()));
    Ok(t)
}

pub fn cmd_fold(alpha: f64, beta: f64, kappa2: f64, len: usize, lambda: Complex64) -> Result<Table> {
    let f = FiveTermModel::new(alpha, beta, kappa2)?;
    let b = f.fold(len + 1)?;
    let u = five_term_solution(|n| f.coeffs(n), lambda, Complex64::from(1.0), Complex64::from(0.5), 2 * len + 2);
    let pair = eval_block_pair(&b, len, lambda)?;
    let u0 = nalgebra::DVector::from_vec(vec![u[0], u[1]]);
    let mut t = Table::new("fold", &["n", "u_even_re", "u_odd_re", "residual"]);
    for n in 0..=len {
        let un = nalgebra::DVector::from_vec(vec![u[2 * n], u[2 * n + 1]]);
        let r = (&un - &pair.p[n] * &u0).norm() / un.norm().max(1.0);
        t.push(vec![n.into(), num(un[0].re), num(un[1].re), num(r)]);
    }
    t.meta("recurrence", b.to_json());
    t.meta("lambda", json!([num(lambda.re), num(lambda.im)]));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.tolerances.identity, 1e-10);
        let parsed = RunConfig::from_json(r#"{"window": 40, "format": "json"}"#).unwrap();
        assert_eq!(parsed.window, 40);
        assert_eq!(parsed.format, Format::Json);
        assert!(RunConfig::from_json(r#"{"tolerances": {"identity": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn csv_has_header() {
        let t = cmd_quad("chebyshev_t", 1, None).unwrap();
        let s = t.to_csv().unwrap();
        assert!(s.starts_with("j,node,weight\n"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn json_schema_tag() {
        let t = cmd_quad("legendre", 2, None).unwrap();
        let v = t.to_json();
        assert_eq!(v["schema"], SCHEMA);
        let x = v["rows"][1]["node"].as_f64().unwrap();
        assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unknown_suite_lists_names() {
        let e = verify("nope", &RunConfig::default(), &VerifyOptions::default()).unwrap_err();
        assert!(matches!(&e, Error::Domain(m) if m.contains("casorati")));
    }

    #[test]
    fn suites_sorted() {
        let names = suite_names();
        let mut s = names.clone();
        s.sort();
        assert_eq!(names, s);
    }

    #[test]
    fn verify_report_flags_failures() {
        let r = VerifyReport {
            suite: "x".into(),
            checks: vec![Check::new("a", 1e-12, 1e-10), Check::new("b", f64::NAN, 1.0)],
        };
        assert!(!r.passed());
        assert_eq!(r.table().rows[1][3], Value::from("FAIL"));
    }
}
