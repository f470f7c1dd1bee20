//! Transport solves by the method of characteristics.
//!
//! The scalar density is constant along characteristics, so every solve
//! reduces to locating a backward foot point and evaluating the initial
//! density there: f(t, y) = f0(chi_{-t}(y)).
//!
//! Two solvers live here. The stiff reference integrates the original
//! oscillatory field with steps capped at a fraction of eps and serves as
//! ground truth. The split solver composes the two non-stiff flows of an
//! averaged split; its cost does not grow as eps shrinks.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::averaging::AveragedSplit;
use crate::error::{check_dim, Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::ode::{integrate, CharacteristicsIntegrator, IntegratorStats};

/// Initial density f0.
pub type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Fraction of eps capping the reference step size.
pub const STIFF_STEP_FRACTION: f64 = 0.2;

/// Epsilon below which reference solves at order-one times are refused
/// without the explicit override.
pub const COST_GUARD_EPS: f64 = 1e-5;

/// The original oscillatory field F_eps = (omega/eps) G + K.
pub fn stiff_field(
    omega: &ScalarField,
    g: &VectorField,
    k: &VectorField,
    eps: f64,
) -> Result<VectorField> {
    check_dim("stiff_field", g.dim(), k.dim())?;
    check_dim("stiff_field", g.dim(), omega.dim())?;
    if eps <= 0.0 {
        return Err(Error::usage("stiff_field: eps must be positive"));
    }
    let om = omega.clone();
    let g = g.clone();
    let k = k.clone();
    Ok(VectorField::new(&format!("F[eps={eps:.3e}]"), g.dim(), move |y| {
        let w = om.eval(y)? / eps;
        let gv = g.eval(y)?;
        let kv = k.eval(y)?;
        Ok(gv.iter().zip(&kv).map(|(a, b)| w * a + b).collect())
    }))
}

/// Backward characteristic foot point chi_{-t}(y) of dy/ds = F(y).
pub fn backward_point(
    f: &VectorField,
    t: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
) -> Result<(Vec<f64>, IntegratorStats)> {
    check_dim("backward_point", f.dim(), y.len())?;
    if t == 0.0 {
        return Ok((y.to_vec(), IntegratorStats::default()));
    }
    integrate(
        |_s, p, dp| {
            let v = f.eval(p)?;
            dp.copy_from_slice(&v);
            Ok(())
        },
        0.0,
        -t,
        y,
        integ,
    )
}

/// Reference solve of the original stiff problem.
///
/// The step size is capped at `STIFF_STEP_FRACTION * eps`; the default
/// tolerances put the result near 1e-9. Below `COST_GUARD_EPS` at
/// order-one times the solve is refused unless `allow_expensive` is set,
/// because the step count grows like t/eps.
pub fn solve_reference(
    omega: &ScalarField,
    g: &VectorField,
    k: &VectorField,
    f0: &Density,
    eps: f64,
    t: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
) -> Result<(f64, IntegratorStats)> {
    if eps < COST_GUARD_EPS && t.abs() >= 0.1 && !integ.allow_expensive {
        return Err(Error::CostGuard(format!(
            "reference solve at eps = {eps:.1e}, t = {t} needs about {:.1e} steps; \
             set allow_expensive to force it",
            t.abs() / (STIFF_STEP_FRACTION * eps)
        )));
    }
    let f = stiff_field(omega, g, k, eps)?;
    let mut cfg = integ.clone();
    let cap = STIFF_STEP_FRACTION * eps;
    cfg.max_step = Some(cfg.max_step.map_or(cap, |h| h.min(cap)));
    let (foot, stats) = backward_point(&f, t, y, &cfg)?;
    Ok((f0(&foot), stats))
}

/// Which of the two split equations is solved first from the shared
/// initial condition. The two choices agree up to the commutation defect
/// of the truncated split, O(eps^{n+1}).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitOrder {
    /// Solve the angle equation at t = 0 first, then transport in t:
    /// the foot point is Phi^G_{-tau}(Phi^K_{-t}(y)).
    #[default]
    TauEquationFirst,
    /// Transport in t first, then in the angle:
    /// the foot point is Phi^K_{-t}(Phi^G_{-tau}(y)).
    TEquationFirst,
}

/// Minimum resolution of each non-stiff leg: the step cap is the leg
/// span divided by this. Keeps the work of the split solver insensitive
/// to the field magnitudes, which shrink with eps.
pub const SPLIT_LEG_MIN_STEPS: f64 = 48.0;

/// Two-scale solve of the split system at (t, tau, y).
///
/// tau is reduced modulo 2pi before integrating (the slow-angle flow is
/// periodic up to the truncation defect), which keeps every integration
/// interval order one regardless of eps.
pub fn solve_split(
    split: &AveragedSplit,
    f0: &Density,
    t: f64,
    tau: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
    order: SplitOrder,
) -> Result<(f64, IntegratorStats)> {
    check_dim("solve_split", split.k_eps.dim(), y.len())?;
    let tau = tau.rem_euclid(2.0 * PI);
    let mut stats = IntegratorStats::default();
    let leg = |field: &VectorField, span: f64, from: &[f64], stats: &mut IntegratorStats| {
        if span == 0.0 {
            return Ok(from.to_vec());
        }
        let mut cfg = integ.clone();
        let cap = span.abs() / SPLIT_LEG_MIN_STEPS;
        cfg.max_step = Some(cfg.max_step.map_or(cap, |h| h.min(cap)));
        let (p, s) = backward_point(field, span, from, &cfg)?;
        stats.merge(s);
        Ok::<_, Error>(p)
    };
    let foot = match order {
        SplitOrder::TauEquationFirst => {
            let mid = leg(&split.k_eps, t, y, &mut stats)?;
            leg(&split.g_eps, tau, &mid, &mut stats)?
        }
        SplitOrder::TEquationFirst => {
            let mid = leg(&split.g_eps, tau, y, &mut stats)?;
            leg(&split.k_eps, t, &mid, &mut stats)?
        }
    };
    Ok((f0(&foot), stats))
}

/// Diagonal value of the two-scale function: tau = t/eps (mod 2pi).
pub fn diagonal_eval(
    split: &AveragedSplit,
    f0: &Density,
    t: f64,
    y: &[f64],
    integ: &CharacteristicsIntegrator,
) -> Result<(f64, IntegratorStats)> {
    let tau = (t / split.eps).rem_euclid(2.0 * PI);
    solve_split(split, f0, t, tau, y, integ, SplitOrder::default())
}
