//! Varying-frequency reconstruction through a phase function.
//!
//! When the fast frequency omega depends on the point, the equation is
//! divided by omega and time is adjoined as a coordinate Y = (t, y). The
//! averaged split of the augmented fields yields, after eliminating the
//! auxiliary evolution variable, a commuting pair of fields A, B on y and
//! two scalar sources alpha, beta. The profile h and the phase S solve
//!
//!   d_t h + A . grad h = 0,        d_tau h + B . grad h = 0,
//!   d_t S + A . grad S = alpha,    d_tau S + B . grad S = beta,
//!
//! with h(0,0,y) = f0(y), S(0,0,y) = 0, and the oscillatory solution is
//! recovered as f(t,y) = h(t, tau*(t,y), y) where eps tau* = S(t, tau*, y).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::averaging::{averaged_split, AveragedSplit, AveragingConfig, PeriodicFlow};
use crate::error::{check_dim, Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::linalg::{self, Mat};
use crate::ode::{integrate, CharacteristicsIntegrator, IntegratorStats};
use crate::transport::Density;

/// Threshold below which the first averaged component counts as vanishing.
const K1_MIN: f64 = 1e-6;

/// Relative tolerance of the t-independence assertion on augmented
/// averaged fields.
const T_INDEPENDENCE_TOL: f64 = 1e-8;

/// The problem rewritten over Y = (t, y) with unit fast frequency.
pub struct AugmentedProblem {
    /// Fast frequency on y (positive).
    pub omega: ScalarField,
    /// (0, G(y)) over Y.
    pub gcheck: VectorField,
    /// (1/omega, K/omega) over Y.
    pub kcheck: VectorField,
    /// Flow of gcheck, lifted from a flow of G when one is supplied.
    pub flow: PeriodicFlow,
}

impl AugmentedProblem {
    pub fn dim_y(&self) -> usize {
        self.gcheck.dim()
    }
}

impl std::fmt::Debug for AugmentedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AugmentedProblem").field("dim_y", &self.dim_y()).finish()
    }
}

fn lift_point(y: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(y.len() + 1);
    v.push(0.0);
    v.extend_from_slice(y);
    v
}

/// Build the augmented fields from omega, G, K.
///
/// omega is verified positive at the supplied sample points; analytic
/// Jacobians carry over when all ingredients have them. `flow` is the
/// closed-form flow of G when available (it is lifted to Y), otherwise
/// the augmented flow is integrated numerically.
pub fn augment(
    omega: &ScalarField,
    g: &VectorField,
    k: &VectorField,
    flow: Option<&PeriodicFlow>,
    samples: &[Vec<f64>],
) -> Result<AugmentedProblem> {
    let n = g.dim();
    check_dim("augment", n, k.dim())?;
    check_dim("augment", n, omega.dim())?;
    for y in samples {
        let w = omega.eval(y)?;
        if w <= 0.0 {
            return Err(Error::Domain(format!(
                "augment: omega({y:?}) = {w:.3e} is not positive"
            )));
        }
    }

    let gcheck = {
        let g_eval = g.clone();
        let mut f = VectorField::new("Gcheck", n + 1, move |yy| {
            let mut v = vec![0.0];
            v.extend(g_eval.eval(&yy[1..])?);
            Ok(v)
        });
        if g.has_analytic_jacobian() {
            let g = g.clone();
            f = f.with_jacobian(move |yy| {
                let jg = g.jacobian(&yy[1..])?;
                Ok(Mat::from_fn(n + 1, n + 1, |i, j| {
                    if i == 0 || j == 0 {
                        0.0
                    } else {
                        jg.get(i - 1, j - 1)
                    }
                }))
            });
        }
        f
    };

    let kcheck = {
        let k_eval = k.clone();
        let om = omega.clone();
        let mut f = VectorField::new("Kcheck", n + 1, move |yy| {
            let y = &yy[1..];
            let w = om.eval(y)?;
            if w <= 0.0 {
                return Err(Error::Domain(format!("omega({y:?}) = {w:.3e} is not positive")));
            }
            let mut v = vec![1.0 / w];
            for x in k_eval.eval(y)? {
                v.push(x / w);
            }
            Ok(v)
        });
        if k.has_analytic_jacobian() {
            let k = k.clone();
            let om = omega.clone();
            f = f.with_jacobian(move |yy| {
                let y = &yy[1..];
                let w = om.eval(y)?;
                let grad = om.gradient(y)?;
                let kv = k.eval(y)?;
                let jk = k.jacobian(y)?;
                // d(1/w) = -grad w / w^2 ; d(K/w) = dK/w - K grad w^T / w^2
                Ok(Mat::from_fn(n + 1, n + 1, |i, j| {
                    if j == 0 {
                        0.0
                    } else if i == 0 {
                        -grad[j - 1] / (w * w)
                    } else {
                        jk.get(i - 1, j - 1) / w - kv[i - 1] * grad[j - 1] / (w * w)
                    }
                }))
            });
        }
        f
    };

    let lifted = match flow {
        Some(phi) => {
            check_dim("augment", n, phi.dim())?;
            let jac_const = phi.jacobian_constant_in_y();
            let phi = phi.clone();
            let lifted = PeriodicFlow::analytic(n + 1, move |tau, yy| {
                let (z, jac) = phi.apply(tau, &yy[1..])?;
                let mut point = vec![yy[0]];
                point.extend(z);
                let full = Mat::from_fn(n + 1, n + 1, |i, j| {
                    if i == 0 && j == 0 {
                        1.0
                    } else if i == 0 || j == 0 {
                        0.0
                    } else {
                        jac.get(i - 1, j - 1)
                    }
                });
                Ok((point, full))
            });
            if jac_const {
                lifted.assume_jacobian_constant_in_y()
            } else {
                lifted
            }
        }
        None => PeriodicFlow::numeric(&gcheck, CharacteristicsIntegrator::with_tols(1e-12, 1e-13)),
    };

    Ok(AugmentedProblem { omega: omega.clone(), gcheck, kcheck, flow: lifted })
}

/// Averaged split of the augmented fields at the given order in eps.
pub fn augmented_split(
    ap: &AugmentedProblem,
    order: usize,
    eps: f64,
    cfg: &AveragingConfig,
) -> Result<AveragedSplit> {
    averaged_split(&ap.flow, &ap.gcheck, &ap.kcheck, order, eps, cfg)
}

/// The commuting pair on y extracted from an augmented split, plus the
/// scalar sources of the phase equation.
pub struct CommutingPair {
    pub order: usize,
    pub eps: f64,
    /// Advection of the t-equation: Kcheck_2 / Kcheck_1.
    pub a: VectorField,
    /// Advection of the angle equation: Gcheck_2 - (Gcheck_1/Kcheck_1) Kcheck_2.
    pub b: VectorField,
    /// Source of the phase t-equation: 1 / Kcheck_1.
    pub alpha: ScalarField,
    /// Source of the phase angle equation: -Gcheck_1 / Kcheck_1.
    pub beta: ScalarField,
}

impl std::fmt::Debug for CommutingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommutingPair")
            .field("order", &self.order)
            .field("eps", &self.eps)
            .finish()
    }
}

/// Evaluate the augmented averaged components at (0, y), guarding the
/// first slow component away from zero.
fn split_components(split: &AveragedSplit, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let yy = lift_point(y);
    let kv = split.k_eps.eval(&yy)?;
    let gv = split.g_eps.eval(&yy)?;
    let k1 = kv[0];
    if k1.abs() < K1_MIN {
        return Err(Error::Domain(format!(
            "commuting pair: first averaged component {k1:.3e} vanishes at {y:?}"
        )));
    }
    Ok((kv, gv, k1))
}

/// Build the commuting pair from an augmented split.
///
/// The averaged fields over Y = (t, y) are autonomous in t; this is
/// asserted numerically at the sample points and the t slot is dropped.
pub fn commuting_pair(split: &AveragedSplit, samples: &[Vec<f64>]) -> Result<CommutingPair> {
    let dim_y = split.k_eps.dim();
    if dim_y < 2 {
        return Err(Error::usage("commuting_pair: augmented dimension must be at least 2"));
    }
    let n = dim_y - 1;
    for y in samples {
        check_dim("commuting_pair", n, y.len())?;
        for field in [&split.k_eps, &split.g_eps] {
            let mut y0 = lift_point(y);
            let a = field.eval(&y0)?;
            y0[0] = 0.73;
            let b = field.eval(&y0)?;
            let scale = linalg::norm_inf(&a).max(1.0);
            let diff = linalg::norm_inf(&linalg::sub(&a, &b));
            if diff > T_INDEPENDENCE_TOL * scale {
                return Err(Error::numeric(format!(
                    "commuting_pair: averaged field '{}' varies with the adjoined time \
                     ({diff:.3e} at {y:?})",
                    field.label()
                )));
            }
        }
        split_components(split, y)?;
    }

    let mk = |name: &str, split: AveragedSplit, which: usize| -> VectorField {
        VectorField::new(name, n, move |y| {
            let (kv, gv, k1) = split_components(&split, y)?;
            Ok(match which {
                0 => kv[1..].iter().map(|x| x / k1).collect(),
                _ => {
                    let ratio = gv[0] / k1;
                    gv[1..].iter().zip(&kv[1..]).map(|(g2, k2)| g2 - ratio * k2).collect()
                }
            })
        })
    };
    let a = mk("A", split.clone(), 0);
    let b = mk("B", split.clone(), 1);
    let alpha = {
        let s = split.clone();
        ScalarField::new("alpha", n, move |y| Ok(1.0 / split_components(&s, y)?.2))
    };
    let beta = {
        let s = split.clone();
        ScalarField::new("beta", n, move |y| {
            let (_, gv, k1) = split_components(&s, y)?;
            Ok(-gv[0] / k1)
        })
    };
    Ok(CommutingPair { order: split.order, eps: split.eps, a, b, alpha, beta })
}

impl CommutingPair {
    /// |[A, B](y)|_inf — O(eps^{order+1}) for a truncated split.
    pub fn bracket_defect(&self, y: &[f64]) -> Result<f64> {
        let br = self.a.lie_bracket(&self.b)?;
        Ok(linalg::norm_inf(&br.eval(y)?))
    }

    /// |L_A beta - L_B alpha|(y) — same order as the bracket defect.
    pub fn source_defect(&self, y: &[f64]) -> Result<f64> {
        let la = self.beta.lie_derivative(&self.a, y)?;
        let lb = self.alpha.lie_derivative(&self.b, y)?;
        Ok((la - lb).abs())
    }
}

/// Order in which the two backward legs of the h solve are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HSolveOrder {
    /// Foot point Phi^A_{-t}(Phi^B_{-tau}(y)): the angle leg runs first.
    #[default]
    AngleLegFirst,
    /// Foot point Phi^B_{-tau}(Phi^A_{-t}(y)).
    TimeLegFirst,
}

/// Profile solve h(t, tau, y). tau is reduced modulo 2pi.
pub fn solve_h(
    pair: &CommutingPair,
    f0: &Density,
    t: f64,
    tau: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
    order: HSolveOrder,
) -> Result<(f64, IntegratorStats)> {
    check_dim("solve_h", pair.a.dim(), y.len())?;
    let tau = tau.rem_euclid(2.0 * PI);
    let mut stats = IntegratorStats::default();
    let leg = |field: &VectorField, span: f64, from: &[f64], stats: &mut IntegratorStats| {
        if span == 0.0 {
            return Ok(from.to_vec());
        }
        let (p, s) = crate::transport::backward_point(field, span, from, integ)?;
        stats.merge(s);
        Ok::<_, Error>(p)
    };
    let foot = match order {
        HSolveOrder::AngleLegFirst => {
            let mid = leg(&pair.b, tau, y, &mut stats)?;
            leg(&pair.a, t, &mid, &mut stats)?
        }
        HSolveOrder::TimeLegFirst => {
            let mid = leg(&pair.a, t, y, &mut stats)?;
            leg(&pair.b, tau, &mid, &mut stats)?
        }
    };
    Ok((f0(&foot), stats))
}

/// Phase solve S(t, tau, y): backward characteristics of B then A with
/// the sources accumulated in an adjoined quadrature slot.
pub fn solve_s(
    pair: &CommutingPair,
    t: f64,
    tau: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
) -> Result<(f64, IntegratorStats)> {
    check_dim("solve_s", pair.a.dim(), y.len())?;
    let n = pair.a.dim();
    let tau = tau.rem_euclid(2.0 * PI);
    let mut stats = IntegratorStats::default();

    let leg = |field: &VectorField,
               source: &ScalarField,
               span: f64,
               from: &[f64],
               stats: &mut IntegratorStats|
     -> Result<(Vec<f64>, f64)> {
        if span == 0.0 {
            return Ok((from.to_vec(), 0.0));
        }
        let mut state = from.to_vec();
        state.push(0.0);
        let (out, s) = integrate(
            |_s, p, dp| {
                let v = field.eval(&p[..n])?;
                for i in 0..n {
                    dp[i] = -v[i];
                }
                dp[n] = source.eval(&p[..n])?;
                Ok(())
            },
            0.0,
            span,
            &state,
            integ,
        )?;
        stats.merge(s);
        Ok((out[..n].to_vec(), out[n]))
    };

    let (mid, q_angle) = leg(&pair.b, &pair.beta, tau, y, &mut stats)?;
    let (_, q_time) = leg(&pair.a, &pair.alpha, t, &mid, &mut stats)?;
    Ok((q_angle + q_time, stats))
}

/// Result of the fixed-point solve eps tau = S(t, tau, y).
#[derive(Debug, Clone, Copy)]
pub struct TauSolve {
    pub tau: f64,
    /// |eps tau - S(t, tau, y)| at the returned tau.
    pub residual: f64,
    pub s_evaluations: u32,
}

/// Residual target of the phase fixed point.
pub const TAU_RESIDUAL_TOL: f64 = 1e-10;

/// Solve eps tau = S(t, tau, y) by damped fixed-point iteration with a
/// bracketing fallback over one period of the phase.
///
/// `warm` seeds the iteration (branch continuity when sweeping in t);
/// isolated calls start from S(t, 0, y)/eps.
pub fn solve_tau(
    pair: &CommutingPair,
    t: f64,
    y: &[f64],
    eps: f64,
    integ: &CharacteristicsIntegrator,
    warm: Option<f64>,
) -> Result<TauSolve> {
    if eps <= 0.0 {
        return Err(Error::usage("solve_tau: eps must be positive"));
    }
    // the phase solves must be quieter than the residual target, else
    // the iteration chases integrator noise into the bracketing fallback
    let mut s_integ = integ.clone();
    s_integ.rel_tol = s_integ.rel_tol.min(TAU_RESIDUAL_TOL * 1e-1);
    s_integ.abs_tol = s_integ.abs_tol.min(TAU_RESIDUAL_TOL * 1e-2);
    let mut evals: u32 = 0;
    let mut s_of = |tau: f64| -> Result<f64> {
        evals += 1;
        Ok(solve_s(pair, t, tau, y, &s_integ)?.0)
    };

    let mut tau = match warm {
        Some(w) => w,
        None => s_of(0.0)? / eps,
    };
    let mut best = (f64::INFINITY, tau);
    for iter in 0..28 {
        let s = s_of(tau)?;
        let residual = (eps * tau - s).abs();
        if residual < best.0 {
            best = (residual, tau);
        }
        if residual <= TAU_RESIDUAL_TOL {
            return Ok(TauSolve { tau, residual, s_evaluations: evals });
        }
        let damping = if iter < 10 { 1.0 } else { 0.5 };
        tau += damping * (s / eps - tau);
    }

    // bracketing fallback: g(tau) = eps tau - S is increasing on average
    // (S is periodic in tau up to the truncation defect), so one period
    // around the best iterate contains a sign change.
    let center = best.1;
    let lo = center - 2.0 * PI;
    let hi = center + 2.0 * PI;
    let mut g_at = |tau: f64| -> Result<f64> { Ok(eps * tau - s_of(tau)?) };
    let scan = 48;
    let mut prev = (lo, g_at(lo)?);
    let mut bracket = None;
    for i in 1..=scan {
        let x = lo + (hi - lo) * i as f64 / scan as f64;
        let gx = g_at(x)?;
        if prev.1 == 0.0 || prev.1.signum() != gx.signum() {
            bracket = Some((prev, (x, gx)));
            break;
        }
        prev = (x, gx);
    }
    let Some((mut a, mut b)) = bracket else {
        return Err(Error::numeric(format!(
            "solve_tau: no sign change of eps*tau - S within one period around tau = {center:.6}; \
             the phase solve looks broken"
        )));
    };
    for _ in 0..200 {
        let mid = 0.5 * (a.0 + b.0);
        let gm = g_at(mid)?;
        if gm.abs() <= TAU_RESIDUAL_TOL {
            return Ok(TauSolve { tau: mid, residual: gm.abs(), s_evaluations: evals });
        }
        if gm.signum() == a.1.signum() {
            a = (mid, gm);
        } else {
            b = (mid, gm);
        }
        if (b.0 - a.0).abs() < f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
    }
    let (x, gx) = if a.1.abs() < b.1.abs() { a } else { b };
    if gx.abs() <= 10.0 * TAU_RESIDUAL_TOL {
        return Ok(TauSolve { tau: x, residual: gx.abs(), s_evaluations: evals });
    }
    Err(Error::numeric(format!(
        "solve_tau: bisection stalled with residual {:.3e} (target {TAU_RESIDUAL_TOL:.1e})",
        gx.abs()
    )))
}

/// One reconstruction f(t, y) = h(t, tau*, y) with its diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct Reconstruction {
    pub value: f64,
    pub tau: f64,
    pub s_residual: f64,
    pub stats: IntegratorStats,
}

/// Profile and phase pairs of one reconstruction.
///
/// The fixed point eps tau = S turns a phase error of size delta into an
/// angle error delta/eps, so matching the profile accuracy O(eps^{n+1})
/// at times of order one requires the phase to be one order more
/// accurate. The builder therefore assembles the profile pair at the
/// requested order and the phase pair one order higher (capped at the
/// last available expansion term).
pub struct ReconstructionPairs {
    pub profile: CommutingPair,
    pub phase: CommutingPair,
}

impl std::fmt::Debug for ReconstructionPairs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReconstructionPairs")
            .field("profile_order", &self.profile.order)
            .field("phase_order", &self.phase.order)
            .finish()
    }
}

/// Build the profile pair at `order` and the phase pair at `order + 1`
/// (capped at order 2, the highest assembled term).
pub fn reconstruction_pairs(
    ap: &AugmentedProblem,
    order: usize,
    eps: f64,
    cfg: &AveragingConfig,
    samples: &[Vec<f64>],
) -> Result<ReconstructionPairs> {
    let profile_split = augmented_split(ap, order, eps, cfg)?;
    let profile = commuting_pair(&profile_split, samples)?;
    let phase_order = (order + 1).min(2);
    let phase = if phase_order == order {
        commuting_pair(&profile_split, samples)?
    } else {
        let phase_split = augmented_split(ap, phase_order, eps, cfg)?;
        commuting_pair(&phase_split, samples)?
    };
    Ok(ReconstructionPairs { profile, phase })
}

/// Recover the oscillatory solution from the phase and profile solves:
/// tau* from the phase pair, then h(t, tau*, y) from the profile pair.
pub fn reconstruct(
    pairs: &ReconstructionPairs,
    f0: &Density,
    t: f64,
    y: &[f64],
    eps: f64,
    integ: &CharacteristicsIntegrator,
    warm: Option<f64>,
) -> Result<Reconstruction> {
    let ts = solve_tau(&pairs.phase, t, y, eps, integ, warm)?;
    let (value, stats) =
        solve_h(&pairs.profile, f0, t, ts.tau, y, integ, HSolveOrder::default())?;
    Ok(Reconstruction { value, tau: ts.tau, s_residual: ts.residual, stats })
}

/// Rescaled phase (S - phase(y) t)/eps for problems declaring a leading
/// phase profile (the phase grows like phase(y) t at leading order).
pub fn tilde_s(
    pair: &CommutingPair,
    leading_phase: &ScalarField,
    t: f64,
    tau: f64,
    y: &[f64],
    eps: f64,
    integ: &CharacteristicsIntegrator,
) -> Result<f64> {
    let (s, _) = solve_s(pair, t, tau, y, integ)?;
    Ok((s - leading_phase.eval(y)? * t) / eps)
}

/// Convenience wrapper: a density from a shared closure.
pub fn density<F>(f: F) -> Density
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}
