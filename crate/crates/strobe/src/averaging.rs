//! Averaged commuting splits of a highly-oscillatory field.
//!
//! Given F = (1/eps) G + K with G generating a 2pi-periodic flow, this
//! module pulls K back along that flow, extracts Fourier modes in the
//! flow angle, and assembles the truncated averaged fields
//!
//!   K_eps = K[1] + eps K[2] + ... + eps^n K[n+1],
//!   G_eps = eps (F - K_eps) = G + eps (K - K_eps),
//!
//! by three routes that are cross-checked in the tests: explicit bracket
//! sums of the modes, a universal word sum weighted by the recursion
//! coefficients of [`crate::words`], and iterated integrals of the
//! pulled-back field (the oracle, which never touches Fourier modes).
//!
//! `order` is the highest power of eps kept in `K_eps`, so an order-n
//! split carries n+1 terms and commutes up to O(eps^{n+1}).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::fields::{ComplexVectorField, VectorField};
use crate::linalg::{self, CMat, Mat};
use crate::ode::{integrate, CharacteristicsIntegrator};
use crate::quad::{self, QuadSpec};
use crate::words::{enumerate_words, BetaTable, Word};

pub type FlowFn = dyn Fn(f64, &[f64]) -> Result<(Vec<f64>, Mat)> + Send + Sync;

/// The 2pi-periodic flow of the fast field, with its Jacobian.
#[derive(Clone)]
pub struct PeriodicFlow {
    dim: usize,
    inner: FlowImpl,
    jac_const_in_y: bool,
}

#[derive(Clone)]
enum FlowImpl {
    Analytic(Arc<FlowFn>),
    Numeric { g: VectorField, integ: CharacteristicsIntegrator },
}

impl PeriodicFlow {
    /// Problem-supplied closed-form flow.
    pub fn analytic<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Result<(Vec<f64>, Mat)> + Send + Sync + 'static,
    {
        PeriodicFlow { dim, inner: FlowImpl::Analytic(Arc::new(f)), jac_const_in_y: false }
    }

    /// Flow obtained by integrating G together with its variational system.
    pub fn numeric(g: &VectorField, integ: CharacteristicsIntegrator) -> Self {
        PeriodicFlow {
            dim: g.dim(),
            inner: FlowImpl::Numeric { g: g.clone(), integ },
            jac_const_in_y: false,
        }
    }

    /// Declare that dPhi_tau/dy does not depend on the base point (rigid
    /// rotations in a velocity block). Pullback Jacobians then become
    /// analytic, which removes one finite-difference level everywhere.
    pub fn assume_jacobian_constant_in_y(mut self) -> Self {
        self.jac_const_in_y = true;
        self
    }

    pub fn jacobian_constant_in_y(&self) -> bool {
        self.jac_const_in_y
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (Phi_tau(y), dPhi_tau/dy). At tau = 0 this is (y, I) exactly.
    pub fn apply(&self, tau: f64, y: &[f64]) -> Result<(Vec<f64>, Mat)> {
        check_dim("flow", self.dim, y.len())?;
        if tau == 0.0 {
            return Ok((y.to_vec(), Mat::identity(self.dim)));
        }
        match &self.inner {
            FlowImpl::Analytic(f) => f(tau, y),
            FlowImpl::Numeric { g, integ } => {
                let n = self.dim;
                let mut state = vec![0.0; n + n * n];
                state[..n].copy_from_slice(y);
                for i in 0..n {
                    state[n + i * n + i] = 1.0;
                }
                let rhs = |_t: f64, s: &[f64], ds: &mut [f64]| -> Result<()> {
                    let point = &s[..n];
                    let v = g.eval(point)?;
                    ds[..n].copy_from_slice(&v);
                    let jac = g.jacobian(point)?;
                    // dJ/dtau = dG(y) J, J stored row-major
                    for i in 0..n {
                        for j in 0..n {
                            let mut acc = 0.0;
                            for l in 0..n {
                                acc += jac.get(i, l) * s[n + l * n + j];
                            }
                            ds[n + i * n + j] = acc;
                        }
                    }
                    Ok(())
                };
                let (out, _) = integrate(rhs, 0.0, tau, &state, integ)?;
                let point = out[..n].to_vec();
                let jac = Mat::from_fn(n, n, |i, j| out[n + i * n + j]);
                Ok((point, jac))
            }
        }
    }

    /// Point displacement after one full period (should vanish under (H)).
    pub fn period_defect(&self, y: &[f64]) -> Result<f64> {
        let (z, _) = self.apply(2.0 * PI, y)?;
        Ok(linalg::norm_inf(&linalg::sub(&z, y)))
    }
}

/// Pulled-back field K_tau(y) = (dPhi_tau/dy)^{-1} K(Phi_tau(y)).
///
/// The Jacobian is applied through a linear solve; a singular Jacobian
/// signals a broken flow implementation and surfaces as a numeric error.
pub fn pullback(flow: &PeriodicFlow, k: &VectorField, tau: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_dim("pullback", flow.dim(), k.dim())?;
    let (z, jac) = flow.apply(tau, y)?;
    let kz = k.eval(&z)?;
    jac.solve(&kz)
}

/// Settings of the mode-extraction and assembly pipeline.
#[derive(Debug, Clone)]
pub struct AveragingConfig {
    /// Uniform samples of the angle per extraction; power of two,
    /// at least 4 k_max + 4.
    pub n_samples: usize,
    /// Largest retained mode index.
    pub k_max: i64,
    /// Share extracted modes between evaluations at the same point.
    pub use_cache: bool,
    /// Entry cap of the point cache (cleared wholesale when full).
    pub cache_cap: usize,
    /// Tolerance of the imaginary-residue check on assembled fields.
    pub imag_tol: f64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        AveragingConfig {
            n_samples: 128,
            k_max: 3,
            use_cache: true,
            cache_cap: 1024,
            imag_tol: 1e-10,
        }
    }
}

impl AveragingConfig {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_k_max(mut self, k: i64) -> Self {
        self.k_max = k;
        self
    }
}

/// Modes of the pulled-back field at one point: index k runs in
/// [-k_max, k_max], stored at k + k_max.
#[derive(Debug, Clone)]
pub struct PointModes {
    pub k_max: i64,
    pub values: Vec<Vec<Complex64>>,
    /// Mode Jacobians, present when the pullback Jacobian is analytic
    /// (flow Jacobian constant in y and K analytic).
    pub jacobians: Option<Vec<CMat>>,
}

impl PointModes {
    pub fn mode(&self, k: i64) -> &[Complex64] {
        &self.values[(k + self.k_max) as usize]
    }

    pub fn jacobian(&self, k: i64) -> Option<&CMat> {
        self.jacobians.as_ref().map(|j| &j[(k + self.k_max) as usize])
    }
}

/// Aliasing diagnostic of one extraction.
#[derive(Debug, Clone, Copy)]
pub struct AliasReport {
    /// Largest norm among discarded bins |k| in (k_max, n/2].
    pub discarded_max: f64,
    /// Bin index attaining it.
    pub worst_bin: i64,
    /// 1e-10 |K_hat_0| + 1e-12.
    pub threshold: f64,
}

impl AliasReport {
    pub fn is_aliased(&self) -> bool {
        self.discarded_max > self.threshold
    }
}

type PointKey = Vec<u64>;

/// Fourier modes of the pulled-back field, as lazily evaluated field
/// closures sharing one per-point extraction cache.
pub struct ModeSet {
    flow: PeriodicFlow,
    k: VectorField,
    cfg: AveragingConfig,
    /// phases[k][j] = exp(-i k tau_j), k = 0..=k_max
    phases: Arc<Vec<Vec<Complex64>>>,
    cache: Option<Arc<RwLock<HashMap<PointKey, Arc<PointModes>>>>>,
}

impl Clone for ModeSet {
    fn clone(&self) -> Self {
        ModeSet {
            flow: self.flow.clone(),
            k: self.k.clone(),
            cfg: self.cfg.clone(),
            phases: Arc::clone(&self.phases),
            cache: self.cache.clone(),
        }
    }
}

impl ModeSet {
    pub fn new(flow: PeriodicFlow, k: VectorField, cfg: AveragingConfig) -> Result<Self> {
        check_dim("modes", flow.dim(), k.dim())?;
        let n = cfg.n_samples;
        if !n.is_power_of_two() || (n as i64) < 4 * cfg.k_max + 4 {
            return Err(Error::usage(format!(
                "mode extraction needs a power-of-two sample count >= 4 k_max + 4, got {n}"
            )));
        }
        let mut phases = Vec::with_capacity(cfg.k_max as usize + 1);
        for kk in 0..=cfg.k_max {
            let row: Vec<Complex64> = (0..n)
                .map(|j| {
                    let angle = -(kk as f64) * 2.0 * PI * j as f64 / n as f64;
                    Complex64::from_polar(1.0, angle)
                })
                .collect();
            phases.push(row);
        }
        let cache = cfg.use_cache.then(|| Arc::new(RwLock::new(HashMap::new())));
        Ok(ModeSet { flow, k, cfg, phases: Arc::new(phases), cache })
    }

    pub fn k_max(&self) -> i64 {
        self.cfg.k_max
    }

    pub fn dim(&self) -> usize {
        self.flow.dim()
    }

    pub fn config(&self) -> &AveragingConfig {
        &self.cfg
    }

    pub fn flow(&self) -> &PeriodicFlow {
        &self.flow
    }

    pub fn pulled_back_field(&self) -> &VectorField {
        &self.k
    }

    /// Analytic pullback Jacobians are available when the flow Jacobian
    /// does not depend on the base point: d K_tau(y) = A^{-1} dK(Phi) A.
    fn analytic_mode_jacobians(&self) -> bool {
        self.flow.jacobian_constant_in_y() && self.k.has_analytic_jacobian()
    }

    fn samples_at(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.cfg.n_samples;
        (0..n)
            .map(|j| pullback(&self.flow, &self.k, 2.0 * PI * j as f64 / n as f64, y))
            .collect()
    }

    fn extract(&self, y: &[f64]) -> Result<PointModes> {
        let n = self.cfg.n_samples;
        let dim = self.dim();
        let k_max = self.cfg.k_max;
        let with_jac = self.analytic_mode_jacobians();
        let mut samples = Vec::with_capacity(n);
        let mut jac_samples = Vec::new();
        for j in 0..n {
            let tau = 2.0 * PI * j as f64 / n as f64;
            let (z, a) = self.flow.apply(tau, y)?;
            let kz = self.k.eval(&z)?;
            samples.push(a.solve(&kz)?);
            if with_jac {
                let dk = self.k.jacobian(&z)?;
                jac_samples.push(a.solve_columns(&dk.matmul(&a))?);
            }
        }
        let mut values = vec![vec![Complex64::ZERO; dim]; (2 * k_max + 1) as usize];
        let mut jacobians =
            with_jac.then(|| vec![CMat::zeros(dim, dim); (2 * k_max + 1) as usize]);
        let scale = 1.0 / n as f64;
        for kk in 0..=k_max {
            let row = &self.phases[kk as usize];
            let mut acc = vec![Complex64::ZERO; dim];
            for (j, v) in samples.iter().enumerate() {
                let w = row[j];
                for i in 0..dim {
                    acc[i] += w * v[i];
                }
            }
            for a in acc.iter_mut() {
                *a *= scale;
            }
            // samples are real, so the negative mode is the exact conjugate
            values[(k_max - kk) as usize] = acc.iter().map(|c| c.conj()).collect();
            values[(k_max + kk) as usize] = acc;
            if let Some(jacs) = jacobians.as_mut() {
                let mut jm = CMat::zeros(dim, dim);
                for (j, b) in jac_samples.iter().enumerate() {
                    let w = row[j];
                    for i in 0..dim {
                        for l in 0..dim {
                            jm.set(i, l, jm.get(i, l) + w * b.get(i, l));
                        }
                    }
                }
                let mut conj = CMat::zeros(dim, dim);
                for i in 0..dim {
                    for l in 0..dim {
                        jm.set(i, l, jm.get(i, l) * scale);
                        conj.set(i, l, jm.get(i, l).conj());
                    }
                }
                jacs[(k_max - kk) as usize] = conj;
                jacs[(k_max + kk) as usize] = jm;
            }
        }
        Ok(PointModes { k_max, values, jacobians })
    }

    /// Modes at a point, through the cache when enabled.
    pub fn at(&self, y: &[f64]) -> Result<Arc<PointModes>> {
        check_dim("modes", self.dim(), y.len())?;
        let Some(cache) = &self.cache else {
            return Ok(Arc::new(self.extract(y)?));
        };
        let key: PointKey = y.iter().map(|x| x.to_bits()).collect();
        if let Some(hit) = cache.read().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(self.extract(y)?);
        let mut guard = cache.write().unwrap();
        if guard.len() >= self.cfg.cache_cap {
            guard.clear();
        }
        let entry = guard.entry(key).or_insert_with(|| Arc::clone(&computed));
        Ok(Arc::clone(entry))
    }

    /// Mode k as a lazy complex field (zero field beyond k_max), with an
    /// analytic Jacobian when the pullback supplies one.
    pub fn mode_field(&self, k: i64) -> ComplexVectorField {
        let dim = self.dim();
        if k.abs() > self.cfg.k_max {
            return ComplexVectorField::zero(dim);
        }
        let this = self.clone();
        let mut f = ComplexVectorField::new(&format!("mode[{k}]"), dim, move |y| {
            Ok(this.at(y)?.mode(k).to_vec())
        });
        if self.analytic_mode_jacobians() {
            let this = self.clone();
            f = f.with_jacobian(move |y| {
                this.at(y)?
                    .jacobian(k)
                    .cloned()
                    .ok_or_else(|| Error::numeric("mode jacobian missing from cache entry"))
            });
        }
        f
    }

    /// Aliasing diagnostic: energy in the discarded bins at a point.
    pub fn alias_report(&self, y: &[f64]) -> Result<AliasReport> {
        let n = self.cfg.n_samples;
        let samples = self.samples_at(y)?;
        let modes = self.at(y)?;
        let threshold = 1e-10 * linalg::cnorm2(modes.mode(0)) + 1e-12;
        let dim = self.dim();
        let mut worst = (0.0_f64, 0i64);
        for kk in (self.cfg.k_max + 1)..=(n as i64 / 2) {
            let mut acc = vec![Complex64::ZERO; dim];
            for (j, v) in samples.iter().enumerate() {
                let angle = -(kk as f64) * 2.0 * PI * j as f64 / n as f64;
                let w = Complex64::from_polar(1.0, angle);
                for i in 0..dim {
                    acc[i] += w * v[i];
                }
            }
            let norm = linalg::cnorm2(&acc) / n as f64;
            if norm > worst.0 {
                worst = (norm, kk);
            }
        }
        Ok(AliasReport { discarded_max: worst.0, worst_bin: worst.1, threshold })
    }

    /// Fail when the truncation at k_max discards visible energy.
    pub fn check_aliasing(&self, y: &[f64]) -> Result<()> {
        let r = self.alias_report(y)?;
        if r.is_aliased() {
            return Err(Error::numeric(format!(
                "aliasing: discarded mode {} carries {:.3e} > threshold {:.3e}",
                r.worst_bin, r.discarded_max, r.threshold
            )));
        }
        Ok(())
    }

    /// max_k |mode(-k) - conj(mode(k))| relative to the mode scale.
    pub fn conjugate_defect(&self, y: &[f64]) -> Result<f64> {
        let m = self.at(y)?;
        let mut scale = 1e-300_f64;
        for k in -self.cfg.k_max..=self.cfg.k_max {
            scale = scale.max(linalg::cnorm2(m.mode(k)));
        }
        let mut worst = 0.0_f64;
        for k in 1..=self.cfg.k_max {
            let d: f64 = m
                .mode(-k)
                .iter()
                .zip(m.mode(k))
                .map(|(a, b)| (a - b.conj()).norm())
                .fold(0.0, f64::max);
            worst = worst.max(d / scale);
        }
        Ok(worst)
    }

    /// max over fresh angles of |sum_k e^{ik tau} mode_k(y) - K_tau(y)|.
    pub fn reconstruction_defect(&self, y: &[f64], n_check: usize) -> Result<f64> {
        let m = self.at(y)?;
        let mut worst = 0.0_f64;
        for j in 0..n_check {
            // offset keeps the check off the extraction grid
            let tau = 2.0 * PI * (j as f64 + 0.382) / n_check as f64;
            let direct = pullback(&self.flow, &self.k, tau, y)?;
            let mut series = vec![Complex64::ZERO; self.dim()];
            for k in -self.cfg.k_max..=self.cfg.k_max {
                let w = Complex64::from_polar(1.0, k as f64 * tau);
                for (s, v) in series.iter_mut().zip(m.mode(k)) {
                    *s += w * v;
                }
            }
            for (s, d) in series.iter().zip(&direct) {
                worst = worst.max((s - Complex64::new(*d, 0.0)).norm());
            }
        }
        Ok(worst)
    }
}

impl std::fmt::Debug for ModeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeSet")
            .field("dim", &self.dim())
            .field("k_max", &self.cfg.k_max)
            .field("n_samples", &self.cfg.n_samples)
            .finish()
    }
}

// --- assembly: explicit bracket sums -----------------------------------------

/// Term K[r] of the eps-expansion from the displayed bracket sums of the
/// modes (r in 1..=3). The result is real; the imaginary residue is
/// checked on every evaluation and discarded.
pub fn assemble_explicit(modes: &ModeSet, r: usize) -> Result<VectorField> {
    let tol = modes.cfg.imag_tol;
    Ok(match r {
        1 => modes.mode_field(0).real_part_checked(tol),
        2 => second_term(modes)?.real_part_checked(tol),
        3 => third_term(modes)?.real_part_checked(tol),
        _ => return Err(Error::usage(format!("assemble_explicit: order term {r} not in 1..=3"))),
    })
}

fn second_term(modes: &ModeSet) -> Result<ComplexVectorField> {
    let mut coeffs = Vec::new();
    let mut terms = Vec::new();
    let m0 = modes.mode_field(0);
    for k in 1..=modes.k_max() {
        let mk = modes.mode_field(k);
        let mmk = modes.mode_field(-k);
        let i_over_k = Complex64::new(0.0, 1.0 / k as f64);
        coeffs.push(i_over_k);
        terms.push(mk.lie_bracket(&mmk)?);
        let diff = ComplexVectorField::combine(
            &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            &[mk, mmk],
        )?;
        coeffs.push(i_over_k);
        terms.push(m0.lie_bracket(&diff)?);
    }
    ComplexVectorField::combine(&coeffs, &terms)
}

/// Triple-bracket terms (coefficient, a, b, c) meaning c * [[m_a, m_b], m_c].
fn third_term_table(k_max: i64) -> Vec<(f64, i64, i64, i64)> {
    let mut t = Vec::new();
    let in_range = |k: i64| k != 0 && k.abs() <= k_max;
    let nonzero: Vec<i64> = (-k_max..=k_max).filter(|&k| k != 0).collect();
    for &k in &nonzero {
        let c = 1.0 / (k * k) as f64;
        t.push((c, k, 0, 0));
        t.push((c, -k, k, k));
        if in_range(-2 * k) {
            t.push((-0.5 * c, -2 * k, k, k));
        }
        t.push((c, 0, k, -k));
    }
    for &m in &nonzero {
        for &l in &nonzero {
            if m != -l {
                t.push((-1.0 / (l * (m + l)) as f64, 0, l, m));
            }
        }
    }
    for &l in &nonzero {
        for k in -k_max..-l.abs() {
            t.push((1.0 / (l * k) as f64, k, l, -l));
        }
    }
    for &k in &nonzero {
        if k < 0 {
            for &m in &nonzero {
                if k < m && m + k != 0 {
                    t.push((-1.0 / (k * m) as f64, k, -k, m));
                }
            }
        }
    }
    for &m in &nonzero {
        for &l in &nonzero {
            if m != l && m != -l && -m - l < m && -m - l < l && in_range(-m - l) {
                t.push((-1.0 / (m * (m + l)) as f64, -m - l, l, m));
            }
        }
    }
    t
}

fn third_term(modes: &ModeSet) -> Result<ComplexVectorField> {
    let mut coeffs = Vec::new();
    let mut terms = Vec::new();
    for (c, a, b, d) in third_term_table(modes.k_max()) {
        coeffs.push(Complex64::new(c, 0.0));
        terms.push(
            modes
                .mode_field(a)
                .lie_bracket(&modes.mode_field(b))?
                .lie_bracket(&modes.mode_field(d))?,
        );
    }
    ComplexVectorField::combine(&coeffs, &terms)
}

// --- assembly: universal word sum ---------------------------------------------

/// Pairing between recursion coefficients and bracket words.
///
/// The recursion of [`crate::words`] indexes the nested bracket read in
/// the opposite direction: the coefficient of [..[m_{i1}, m_{i2}], .., m_{ir}]
/// is the recursion value of the reversed word (ir, .., i1). This pairing
/// is fixed empirically against the iterated-integral route (see the
/// averaging tests); for words of length two it amounts to a sign flip of
/// the naive pairing, and for length at most three it coincides with
/// conjugating the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordConvention {
    /// beta(w) as-is.
    Literal,
    /// beta(reverse(w)) — the resolved default.
    Reversed,
    /// conj(beta(w)).
    Conjugated,
    /// (-1)^{r-1} beta(w).
    NegateEven,
}

impl Default for WordConvention {
    fn default() -> Self {
        WordConvention::Reversed
    }
}

impl WordConvention {
    pub fn coefficient(self, table: &mut BetaTable, w: &Word) -> Result<Complex64> {
        Ok(match self {
            WordConvention::Literal => table.beta(w)?.to_complex(),
            WordConvention::Reversed => table.beta(&w.reversed())?.to_complex(),
            WordConvention::Conjugated => table.beta(w)?.conj().to_complex(),
            WordConvention::NegateEven => {
                let sign = if w.len() % 2 == 0 { -1.0 } else { 1.0 };
                sign * table.beta(w)?.to_complex()
            }
        })
    }
}

/// Term K[r] from the universal word sum
/// (1/r) sum_w beta'_w [..[m_{w1}, m_{w2}], .., m_{wr}].
pub fn assemble_words(
    modes: &ModeSet,
    r: usize,
    table: &mut BetaTable,
    convention: WordConvention,
) -> Result<VectorField> {
    if !(1..=3).contains(&r) {
        return Err(Error::usage(format!("assemble_words: order term {r} not in 1..=3")));
    }
    let mut coeffs = Vec::new();
    let mut terms = Vec::new();
    for w in enumerate_words(r, modes.k_max()) {
        let c = convention.coefficient(table, &w)?;
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let mut field = modes.mode_field(w.0[0]);
        for &k in &w.0[1..] {
            field = field.lie_bracket(&modes.mode_field(k))?;
        }
        coeffs.push(c / r as f64);
        terms.push(field);
    }
    if terms.is_empty() {
        return Ok(VectorField::zero(modes.dim()));
    }
    Ok(ComplexVectorField::combine(&coeffs, &terms)?.real_part_checked(modes.cfg.imag_tol))
}

// --- iterated-integral oracle ---------------------------------------------------

/// Term K[r] by quadrature of the iterated integrals of the pulled-back
/// field. This route never touches Fourier modes; Jacobians in y come
/// from central differences of the pullback itself.
///
/// When `verify` is set the quadrature is repeated on a coarser rule and
/// a disagreement beyond `tol` is a numeric error.
pub fn integral_oracle(
    flow: &PeriodicFlow,
    k: &VectorField,
    r: usize,
    y: &[f64],
    spec: Option<QuadSpec>,
    verify: bool,
) -> Result<Vec<f64>> {
    check_dim("integral_oracle", flow.dim(), k.dim())?;
    check_dim("integral_oracle", flow.dim(), y.len())?;
    let dim = flow.dim();
    let tol = 1e-8;
    let two_pi = 2.0 * PI;

    let val = |tau: f64, p: &[f64]| pullback(flow, k, tau, p);
    let jac = |tau: f64, p: &[f64]| linalg::fd_jacobian(|q| val(tau, q), p, dim);
    let bracket = |s: f64, t: f64, p: &[f64]| -> Result<Vec<f64>> {
        let js = jac(s, p)?;
        let jt = jac(t, p)?;
        let vs = val(s, p)?;
        let vt = val(t, p)?;
        Ok(linalg::sub(&js.mul_vec(&vt), &jt.mul_vec(&vs)))
    };

    let run = |q: QuadSpec| -> Result<Vec<f64>> {
        match r {
            1 => {
                let v = quad::integrate_vec(q, 0.0, two_pi, dim, |tau| val(tau, y))?;
                Ok(v.iter().map(|x| x / two_pi).collect())
            }
            2 => {
                let v = quad::integrate_triangle(q, two_pi, dim, |s, tau| bracket(s, tau, y))?;
                Ok(v.iter().map(|x| -x / (4.0 * PI)).collect())
            }
            3 => {
                // [[K_r, K_s], K_tau] over the ordered simplex
                let first = quad::integrate_simplex3(q, two_pi, dim, |rr, s, tau| {
                    let inner_jac =
                        linalg::fd_jacobian(|p| bracket(rr, s, p), y, dim)?;
                    let jt = jac(tau, y)?;
                    let vt = val(tau, y)?;
                    let vb = bracket(rr, s, y)?;
                    Ok(linalg::sub(&inner_jac.mul_vec(&vt), &jt.mul_vec(&vb)))
                })?;
                // [K_r, [K_s, K_tau]] over the prism r, s <= tau
                let second = quad::integrate_prism3(q, two_pi, dim, |rr, s, tau| {
                    let jr = jac(rr, y)?;
                    let vr = val(rr, y)?;
                    let inner_jac =
                        linalg::fd_jacobian(|p| bracket(s, tau, p), y, dim)?;
                    let vb = bracket(s, tau, y)?;
                    Ok(linalg::sub(&jr.mul_vec(&vb), &inner_jac.mul_vec(&vr)))
                })?;
                Ok(first
                    .iter()
                    .zip(&second)
                    .map(|(a, b)| a / (8.0 * PI) + b / (24.0 * PI))
                    .collect())
            }
            _ => Err(Error::usage(format!("integral_oracle: order term {r} not in 1..=3"))),
        }
    };

    let base = spec.unwrap_or(if r == 3 { QuadSpec::triple() } else { QuadSpec::standard() });
    if verify {
        quad::checked(base, tol, run)
    } else {
        run(base)
    }
}

// --- split assembly -----------------------------------------------------------

/// Slow counterpart of the split: G_eps = eps (F_eps - K_eps).
pub fn geps(f_eps: &VectorField, k_eps: &VectorField, eps: f64) -> Result<VectorField> {
    VectorField::combine(&[eps, -eps], &[f_eps.clone(), k_eps.clone()])
}

/// A truncated averaged split at a given order (highest kept power of eps).
#[derive(Clone)]
pub struct AveragedSplit {
    pub order: usize,
    pub eps: f64,
    /// K[1], ..., K[order+1].
    pub k_terms: Vec<VectorField>,
    /// sum_i eps^i k_terms[i].
    pub k_eps: VectorField,
    /// G + eps (K - K_eps), identically eps (F_eps - K_eps).
    pub g_eps: VectorField,
    /// The mode set the terms were assembled from.
    pub modes: ModeSet,
}

impl std::fmt::Debug for AveragedSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AveragedSplit")
            .field("order", &self.order)
            .field("eps", &self.eps)
            .field("terms", &self.k_terms.len())
            .finish()
    }
}

impl AveragedSplit {
    /// |[G_eps, K_eps](y)|_inf, the commutation defect of the truncation.
    pub fn commutator_defect(&self, y: &[f64]) -> Result<f64> {
        let b = self.g_eps.lie_bracket(&self.k_eps)?;
        Ok(linalg::norm_inf(&b.eval(y)?))
    }
}

/// Assemble the order-n split of F = (1/eps) G + K (explicit-bracket route).
///
/// `order` is the highest power of eps kept (0..=2), so `order + 1` terms
/// are assembled.
pub fn averaged_split(
    flow: &PeriodicFlow,
    g: &VectorField,
    k: &VectorField,
    order: usize,
    eps: f64,
    cfg: &AveragingConfig,
) -> Result<AveragedSplit> {
    if order > 2 {
        return Err(Error::usage(format!(
            "averaged_split: order {order} not supported, expansions stop at eps^2"
        )));
    }
    if eps <= 0.0 {
        return Err(Error::usage("averaged_split: eps must be positive"));
    }
    let modes = ModeSet::new(flow.clone(), k.clone(), cfg.clone())?;
    let mut k_terms = Vec::with_capacity(order + 1);
    for r in 1..=order + 1 {
        k_terms.push(assemble_explicit(&modes, r)?);
    }
    let powers: Vec<f64> = (0..=order).map(|i| eps.powi(i as i32)).collect();
    let k_eps = VectorField::combine(&powers, &k_terms)?;
    let g_eps = VectorField::combine(&[1.0, eps, -eps], &[g.clone(), k.clone(), k_eps.clone()])?;
    Ok(AveragedSplit { order, eps, k_terms, k_eps, g_eps, modes })
}
