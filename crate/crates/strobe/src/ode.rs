//! Embedded Runge-Kutta integration of characteristics.
//!
//! Dormand-Prince 5(4) with the classic PI-free step controller from
//! Hairer-Norsett-Wanner: accept when the scaled error norm is below one,
//! grow/shrink by err^(-1/5) clamped to [0.2, 5], FSAL reuse of the last
//! stage. Right-hand sides are fallible so numeric failures deep inside a
//! field evaluation propagate out with context.

use crate::error::{Error, Result};

/// Integrator settings for characteristic solves.
///
/// `max_step` caps the step length; the stiff reference solver sets it to
/// a fixed fraction of epsilon. `allow_expensive` overrides the cost guard
/// on reference solves at very small epsilon.
#[derive(Debug, Clone)]
pub struct CharacteristicsIntegrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub allow_expensive: bool,
}

impl Default for CharacteristicsIntegrator {
    fn default() -> Self {
        CharacteristicsIntegrator {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            allow_expensive: false,
        }
    }
}

impl CharacteristicsIntegrator {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        CharacteristicsIntegrator { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn allow_expensive(mut self) -> Self {
        self.allow_expensive = true;
        self
    }
}

/// Counters accumulated over one integration (or summed over several legs).
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratorStats {
    pub rhs_evals: u64,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: IntegratorStats) {
        self.rhs_evals += other.rhs_evals;
        self.steps_accepted += other.steps_accepted;
        self.steps_rejected += other.steps_rejected;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// b - bhat, used for the embedded error estimate
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// Returns the final state and the evaluation counters.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    cfg: &CharacteristicsIntegrator,
) -> Result<(Vec<f64>, IntegratorStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = IntegratorStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0.to_vec(), stats));
    }
    let dir = span.signum();
    let span_abs = span.abs();
    let hmax = cfg.max_step.unwrap_or(span_abs).min(span_abs);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    rhs(t, &y, &mut k[0])?;
    stats.rhs_evals += 1;

    // initial step from the magnitude of the derivative
    let scale_of = |y: &[f64], i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let d0: f64 = (0..n).map(|i| (y[i] / scale_of(&y, i)).powi(2)).sum::<f64>().sqrt();
    let d1: f64 = (0..n).map(|i| (k[0][i] / scale_of(&y, i)).powi(2)).sum::<f64>().sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(hmax).max(1e-12 * span_abs);

    let mut ynew = vec![0.0; n];
    let mut ystage = vec![0.0; n];

    loop {
        let remaining = (t1 - t).abs();
        // endpoint sliver: anything this small is below the error scale
        if remaining <= 1e-12 * span_abs + 4.0 * f64::EPSILON * t.abs() {
            break;
        }
        h = h.min(hmax).min(remaining);
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::numeric(format!(
                "integrator step underflow at t = {t:.6e} (h = {h:.3e}); \
                 rhs may be too stiff for the requested tolerances"
            )));
        }
        let hs = dir * h;

        // stages 2..7 (stage 7 is the FSAL candidate derivative)
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                ystage[i] = y[i] + hs * acc;
            }
            rhs(t + C[s] * hs, &ystage, &mut k[s])?;
            stats.rhs_evals += 1;
        }
        // 5th-order solution is the last stage input (A row 6 == b)
        ynew.copy_from_slice(&ystage);

        // scaled error norm
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            e *= hs;
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 || h <= 1e-13 * (1.0 + t.abs()) {
            t += hs;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6); // FSAL
            stats.steps_accepted += 1;
        } else {
            stats.steps_rejected += 1;
        }
        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        h *= factor;
    }
    for v in &y {
        if !v.is_finite() {
            return Err(Error::numeric("integrator produced a non-finite state".to_string()));
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let cfg = CharacteristicsIntegrator::with_tols(1e-10, 1e-12);
        let (y, stats) = integrate(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            2.0,
            &[1.0],
            &cfg,
        )
        .unwrap();
        assert!((y[0] - (-2.0_f64).exp()).abs() < 1e-10);
        assert!(stats.rhs_evals > 0);
    }

    #[test]
    fn backward_rotation() {
        let cfg = CharacteristicsIntegrator::with_tols(1e-11, 1e-13);
        let (y, _) = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            -std::f64::consts::PI,
            &[1.0, 0.0],
            &cfg,
        )
        .unwrap();
        assert!((y[0] + 1.0).abs() < 1e-9, "{y:?}");
        assert!(y[1].abs() < 1e-9);
    }

    #[test]
    fn tightening_tolerance_converges() {
        let run = |rtol: f64| {
            let cfg = CharacteristicsIntegrator::with_tols(rtol, rtol * 1e-2);
            integrate(
                |t, y, dy| {
                    dy[0] = (t * y[0]).sin();
                    Ok(())
                },
                0.0,
                3.0,
                &[1.0],
                &cfg,
            )
            .unwrap()
            .0[0]
        };
        let coarse = run(1e-6);
        let fine = run(1e-12);
        assert!((coarse - fine).abs() < 1e-5);
    }

    #[test]
    fn max_step_is_respected() {
        let cfg = CharacteristicsIntegrator::with_tols(1e-6, 1e-9).max_step(1e-3);
        let (_, stats) = integrate(
            |_t, _y, dy| {
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            1.0,
            &[0.0],
            &cfg,
        )
        .unwrap();
        assert!(stats.steps_accepted >= 1000);
    }

    #[test]
    fn rhs_error_propagates() {
        let cfg = CharacteristicsIntegrator::default();
        let r = integrate(
            |_t, _y, _dy| Err(Error::numeric("boom")),
            0.0,
            1.0,
            &[0.0],
            &cfg,
        );
        assert!(r.is_err());
    }
}
