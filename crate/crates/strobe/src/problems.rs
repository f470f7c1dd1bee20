//! Built-in example problems: fields, closed-form flows and solutions,
//! default parameters. These drive every cross-check in the test suite.
//!
//! All problems share the layout y = (x, v) where applicable, the default
//! initial density f0(y) = exp(-|y|^2 / 2), a sampling box |y_i| <= 2
//! inside the nominal domain |y_i| <= 4, and the default epsilon grid
//! {1e-1, 1e-1.5, 1e-2, 1e-2.5, 1e-3}.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::averaging::PeriodicFlow;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geometry3d::{cross_apply, cross_matrix, projector_matrix, FieldGeometry};
use crate::linalg::{self, Mat};
use crate::ode::CharacteristicsIntegrator;
use crate::phase::{augment, AugmentedProblem};
use crate::transport::{stiff_field, Density};

/// Exact solution map (t, y, eps) -> f.
pub type ExactSolution = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
/// Closed-form two-scale profile or phase map (t, tau, y) -> value.
pub type TwoScaleMap = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;

/// A packaged example problem.
pub struct Problem {
    pub name: String,
    pub dim: usize,
    /// Fast frequency on y (constant 1 for the constant-frequency cases).
    pub omega: ScalarField,
    pub omega_is_constant: bool,
    pub g: VectorField,
    pub k: VectorField,
    /// Closed-form flow of G when available.
    pub analytic_flow: Option<PeriodicFlow>,
    pub exact_solution: Option<ExactSolution>,
    /// Closed forms of the leading averaged terms K[1], K[2], ... when known.
    pub exact_k_terms: Option<Vec<VectorField>>,
    /// Closed-form profile h(t, tau, y) when known.
    pub exact_profile: Option<TwoScaleMap>,
    /// Closed-form phase S(t, tau, y) when known.
    pub exact_phase: Option<TwoScaleMap>,
    pub f0: Density,
    pub eps_default: Vec<f64>,
    /// Nominal domain box half-width.
    pub domain_halfwidth: f64,
    /// Sampling box half-width for seeded test points.
    pub sample_halfwidth: f64,
    /// Leading phase profile: S(t, tau, y) = phase(y) t + O(eps).
    pub leading_phase: Option<ScalarField>,
    /// Magnetic geometry for the three-dimensional problem.
    pub geometry: Option<FieldGeometry>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("omega_is_constant", &self.omega_is_constant)
            .finish()
    }
}

fn default_eps() -> Vec<f64> {
    vec![1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3]
}

/// Off-center coordinates of the default Gaussian bump, cycled through
/// the phase-space dimensions. A bump centered at the origin would be an
/// exact invariant of the default confining flows (the exponent is the
/// conserved energy when U = |x|^2/2), leaving nothing for convergence
/// measurements to see.
const DENSITY_CENTER: [f64; 6] = [0.6, -0.4, 0.5, -0.3, 0.2, -0.5];

fn gaussian_density(dim: usize) -> Density {
    Arc::new(move |y: &[f64]| {
        debug_assert_eq!(y.len(), dim);
        let r2: f64 = y
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let d = x - DENSITY_CENTER[i % DENSITY_CENTER.len()];
                d * d
            })
            .sum();
        (-0.5 * r2).exp()
    })
}

/// Apply J = [[0,1],[-1,0]]: (a, b) -> (b, -a).
fn jv(v: &[f64]) -> [f64; 2] {
    [v[1], -v[0]]
}

/// e^{tau J} w = cos(tau) w + sin(tau) J w.
fn rot(tau: f64, w: &[f64]) -> [f64; 2] {
    let (s, c) = tau.sin_cos();
    [c * w[0] + s * w[1], -s * w[0] + c * w[1]]
}

impl Problem {
    /// The flow of G: analytic when packaged, numeric otherwise.
    pub fn flow(&self) -> PeriodicFlow {
        match &self.analytic_flow {
            Some(f) => f.clone(),
            None => PeriodicFlow::numeric(&self.g, CharacteristicsIntegrator::with_tols(1e-12, 1e-13)),
        }
    }

    /// The full oscillatory field (omega/eps) G + K.
    pub fn f_eps(&self, eps: f64) -> Result<VectorField> {
        stiff_field(&self.omega, &self.g, &self.k, eps)
    }

    /// Augmented formulation over Y = (t, y); omega positivity is checked
    /// at seeded sample points.
    pub fn augmented(&self) -> Result<AugmentedProblem> {
        let samples = self.sample_points(16, 2024);
        augment(&self.omega, &self.g, &self.k, self.analytic_flow.as_ref(), &samples)
    }

    /// Seeded points drawn uniformly from the sampling box.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = self.sample_halfwidth;
        (0..n).map(|_| (0..self.dim).map(|_| rng.gen_range(-w..w)).collect()).collect()
    }

    /// Construction-time validation of the packaged closed forms against
    /// their numeric counterparts at seeded points.
    pub fn self_check(&self, n_points: usize, seed: u64) -> Result<()> {
        let points = self.sample_points(n_points, seed);
        let numeric =
            PeriodicFlow::numeric(&self.g, CharacteristicsIntegrator::with_tols(1e-12, 1e-13));
        for y in &points {
            let w = self.omega.eval(y)?;
            if w <= 0.0 {
                return Err(Error::Domain(format!(
                    "{}: omega({y:?}) = {w:.3e} not positive",
                    self.name
                )));
            }
            if let Some(flow) = &self.analytic_flow {
                let defect = flow.period_defect(y)?;
                if defect > 1e-8 {
                    return Err(Error::numeric(format!(
                        "{}: flow period defect {defect:.3e} at {y:?}",
                        self.name
                    )));
                }
                for tau in [0.9, 2.0 * PI - 0.4] {
                    let (pa, ja) = flow.apply(tau, y)?;
                    let (pn, jn) = numeric.apply(tau, y)?;
                    let dp = linalg::norm_inf(&linalg::sub(&pa, &pn));
                    let dj = ja.sub(&jn).norm_inf();
                    if dp > 1e-8 || dj > 1e-6 {
                        return Err(Error::numeric(format!(
                            "{}: analytic flow deviates from numeric by ({dp:.3e}, {dj:.3e})",
                            self.name
                        )));
                    }
                }
            }
            if let Some(exact) = &self.exact_solution {
                let eps = 0.1;
                if (exact(0.0, y, eps) - (self.f0)(y)).abs() > 1e-12 {
                    return Err(Error::numeric(format!(
                        "{}: exact solution does not reduce to f0 at t = 0",
                        self.name
                    )));
                }
                let resid = self.pde_residual(exact, 0.4, y, eps)?;
                if resid > 1e-6 {
                    return Err(Error::numeric(format!(
                        "{}: exact solution leaves PDE residual {resid:.3e} at {y:?}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// |d_t f + F_eps . grad f| by central differences, for validating a
    /// claimed exact solution.
    fn pde_residual(&self, f: &ExactSolution, t: f64, y: &[f64], eps: f64) -> Result<f64> {
        let f_eps = self.f_eps(eps)?;
        let ht = linalg::fd_step(t);
        let dt = (f(t + ht, y, eps) - f(t - ht, y, eps)) / (2.0 * ht);
        let grad = linalg::fd_gradient(|p| Ok(f(t, p, eps)), y)?;
        let fv = f_eps.eval(y)?;
        let adv: f64 = grad.iter().zip(&fv).map(|(a, b)| a * b).sum();
        Ok((dt + adv).abs())
    }
}

// --- constant electric and magnetic field in 2d x 2d ---------------------------

/// Constant-field problem on y = (x, v) in R^4:
/// G = (0, Jv), K = (v, E) with E constant, omega = 1.
///
/// The exact solution transports f0 along the backward characteristics
///   V0 = e^{-tau J} v - eps J (e^{-tau J} - I) E,
///   X0 = x - eps J (e^{-tau J} - I) v - eps^2 (e^{-tau J} - I) E - eps t J E,
/// with tau = t/eps. The averaged expansion terminates: K[1] = K[3] = 0
/// and K[2] = (J E, 0), so the order-2 split commutes exactly.
pub fn const_eb_2d(e: [f64; 2]) -> Problem {
    let dim = 4;
    let g = VectorField::new("G", dim, |y| Ok(vec![0.0, 0.0, y[3], -y[2]])).with_jacobian(|_| {
        Ok(Mat::from_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, -1.0, 0.0],
        ]))
    });
    let k = VectorField::new("K", dim, move |y| Ok(vec![y[2], y[3], e[0], e[1]]))
        .with_jacobian(|_| {
            Ok(Mat::from_rows(&[
                &[0.0, 0.0, 1.0, 0.0],
                &[0.0, 0.0, 0.0, 1.0],
                &[0.0, 0.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0],
            ]))
        });
    let flow = PeriodicFlow::analytic(dim, |tau, y| {
        let v = rot(tau, &y[2..4]);
        let point = vec![y[0], y[1], v[0], v[1]];
        let (s, c) = tau.sin_cos();
        let jac = Mat::from_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, c, s],
            &[0.0, 0.0, -s, c],
        ]);
        Ok((point, jac))
    })
    .assume_jacobian_constant_in_y();
    let f0 = gaussian_density(dim);
    let exact: ExactSolution = {
        let f0 = Arc::clone(&f0);
        Arc::new(move |t: f64, y: &[f64], eps: f64| {
            let tau = t / eps;
            let x = &y[0..2];
            let v = &y[2..4];
            // m(w) = (e^{-tau J} - I) w
            let m = |w: &[f64]| {
                let r = rot(-tau, w);
                [r[0] - w[0], r[1] - w[1]]
            };
            let rv = rot(-tau, v);
            let jme = jv(&m(&e));
            let v0 = [rv[0] - eps * jme[0], rv[1] - eps * jme[1]];
            let jmv = jv(&m(v));
            let me = m(&e);
            let je = jv(&e);
            let x0 = [
                x[0] - eps * jmv[0] - eps * eps * me[0] - eps * t * je[0],
                x[1] - eps * jmv[1] - eps * eps * me[1] - eps * t * je[1],
            ];
            f0(&[x0[0], x0[1], v0[0], v0[1]])
        })
    };
    let je = jv(&e);
    let k2 = VectorField::constant("K[2]", vec![je[0], je[1], 0.0, 0.0]);
    Problem {
        name: "const_eb_2d".into(),
        dim,
        omega: ScalarField::constant(dim, 1.0),
        omega_is_constant: true,
        g,
        k,
        analytic_flow: Some(flow),
        exact_solution: Some(exact),
        exact_k_terms: Some(vec![VectorField::zero(dim), k2, VectorField::zero(dim)]),
        exact_profile: None,
        exact_phase: None,
        f0,
        eps_default: default_eps(),
        domain_halfwidth: 4.0,
        sample_halfwidth: 2.0,
        leading_phase: None,
        geometry: None,
    }
}

// --- elementary rotation with state-dependent frequency -------------------------

/// Two-dimensional rotation with omega(y) = 1 + |y|^2:
/// the characteristics are dy/dt = (omega/eps) J y + y.
///
/// The augmented fields commute, so every averaged correction vanishes,
/// and the profile and phase have the closed forms
///   h(t, tau, y) = f0(e^{-t} e^{-tau J} y),
///   S(t, tau, y) = t + (1 - e^{-2t}) |y|^2 / 2   (independent of tau).
pub fn elementary_rotation() -> Problem {
    let dim = 2;
    let omega = ScalarField::new("1+|y|^2", dim, |y| Ok(1.0 + y[0] * y[0] + y[1] * y[1]))
        .with_gradient(|y| Ok(vec![2.0 * y[0], 2.0 * y[1]]));
    let g = VectorField::linear("Jy", Mat::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
    let k = VectorField::linear("y", Mat::identity(dim));
    let flow = PeriodicFlow::analytic(dim, |tau, y| {
        let p = rot(tau, y);
        let (s, c) = tau.sin_cos();
        Ok((vec![p[0], p[1]], Mat::from_rows(&[&[c, s], &[-s, c]])))
    })
    .assume_jacobian_constant_in_y();
    let f0 = gaussian_density(dim);
    let exact: ExactSolution = {
        let f0 = Arc::clone(&f0);
        Arc::new(move |t: f64, y: &[f64], eps: f64| {
            let r2 = y[0] * y[0] + y[1] * y[1];
            let theta = (t + (1.0 - (-2.0 * t).exp()) * r2 / 2.0) / eps;
            let p = rot(-theta, y);
            let scaled = [(-t).exp() * p[0], (-t).exp() * p[1]];
            f0(&scaled)
        })
    };
    let profile: TwoScaleMap = {
        let f0 = Arc::clone(&f0);
        Arc::new(move |t: f64, tau: f64, y: &[f64]| {
            let p = rot(-tau, y);
            f0(&[(-t).exp() * p[0], (-t).exp() * p[1]])
        })
    };
    let phase: TwoScaleMap = Arc::new(move |t: f64, _tau: f64, y: &[f64]| {
        t + (1.0 - (-2.0 * t).exp()) * (y[0] * y[0] + y[1] * y[1]) / 2.0
    });
    Problem {
        name: "elementary_rotation".into(),
        dim,
        omega,
        omega_is_constant: false,
        g,
        k,
        analytic_flow: Some(flow),
        exact_solution: Some(exact),
        exact_k_terms: None,
        exact_profile: Some(profile),
        exact_phase: Some(phase),
        f0,
        eps_default: default_eps(),
        domain_halfwidth: 4.0,
        sample_halfwidth: 1.5,
        leading_phase: None,
        geometry: None,
    }
}

// --- Vlasov with constant magnetic field in 2d x 2d -----------------------------

/// The default confining potential U(x) = |x|^2 / 2 on R^2.
pub fn half_square_potential_2d() -> ScalarField {
    ScalarField::new("|x|^2/2", 2, |x| Ok(0.5 * (x[0] * x[0] + x[1] * x[1])))
        .with_gradient(|x| Ok(vec![x[0], x[1]]))
}

/// Constant unit magnetic field on y = (x, v) in R^4 with a potential:
/// G = (0, Jv), K = (v, -grad U(x)), omega = 1.
///
/// Pass `None` for the default U = |x|^2 / 2, whose averaged terms have
/// the closed forms K[1] = 0 and K[2] = (J E, Jv) with E = -x.
pub fn vlasov_const_b_2d(u: Option<ScalarField>) -> Result<Problem> {
    let dim = 4;
    let is_default = u.is_none();
    let u = u.unwrap_or_else(half_square_potential_2d);
    if u.dim() != 2 {
        return Err(Error::usage("vlasov_const_b_2d: potential must live on R^2"));
    }
    let g = VectorField::new("G", dim, |y| Ok(vec![0.0, 0.0, y[3], -y[2]])).with_jacobian(|_| {
        Ok(Mat::from_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, -1.0, 0.0],
        ]))
    });
    let k = {
        let u = u.clone();
        let mut f = VectorField::new("K", dim, move |y| {
            let e = u.gradient(&y[0..2])?;
            Ok(vec![y[2], y[3], -e[0], -e[1]])
        });
        if is_default {
            f = f.with_jacobian(|_| {
                Ok(Mat::from_rows(&[
                    &[0.0, 0.0, 1.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                    &[-1.0, 0.0, 0.0, 0.0],
                    &[0.0, -1.0, 0.0, 0.0],
                ]))
            });
        }
        f
    };
    let flow = PeriodicFlow::analytic(dim, |tau, y| {
        let v = rot(tau, &y[2..4]);
        let (s, c) = tau.sin_cos();
        Ok((
            vec![y[0], y[1], v[0], v[1]],
            Mat::from_rows(&[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0],
                &[0.0, 0.0, c, s],
                &[0.0, 0.0, -s, c],
            ]),
        ))
    })
    .assume_jacobian_constant_in_y();
    // K[2] = (J E, (lap U / 2) J v)
    let exact_k_terms = {
        let u = u.clone();
        let k2 = VectorField::new("K[2]", dim, move |y| {
            let x = &y[0..2];
            let grad = u.gradient(x)?;
            let e = [-grad[0], -grad[1]];
            let je = jv(&e);
            let lap = if is_default {
                2.0
            } else {
                // trace of the Hessian by differencing the gradient
                let h = linalg::fd_jacobian(|p| u.gradient(p), x, 2)?;
                h.trace()
            };
            let jw = jv(&y[2..4]);
            Ok(vec![je[0], je[1], 0.5 * lap * jw[0], 0.5 * lap * jw[1]])
        });
        Some(vec![VectorField::zero(dim), k2])
    };
    Ok(Problem {
        name: "vlasov_const_b_2d".into(),
        dim,
        omega: ScalarField::constant(dim, 1.0),
        omega_is_constant: true,
        g,
        k,
        analytic_flow: Some(flow),
        exact_solution: None,
        exact_k_terms,
        exact_profile: None,
        exact_phase: None,
        f0: gaussian_density(dim),
        eps_default: default_eps(),
        domain_halfwidth: 4.0,
        sample_halfwidth: 2.0,
        leading_phase: None,
        geometry: None,
    })
}

/// The default varying intensity b(x) = 2 + sin(x1) cos(x2) >= 1.
pub fn default_intensity_2d() -> ScalarField {
    ScalarField::new("2+sin(x1)cos(x2)", 2, |x| Ok(2.0 + x[0].sin() * x[1].cos()))
        .with_gradient(|x| Ok(vec![x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()]))
}

// --- Vlasov with varying intensity, constant direction, 2d x 2d -----------------

/// Varying-intensity field on y = (x, v) in R^4:
/// omega(y) = b(x), G = (0, Jv), K = (v, -grad U(x)).
///
/// Pass `None` to get b = 2 + sin(x1) cos(x2) and U = |x|^2/2. The
/// problem declares the leading phase b(x), so S(t,tau,y) = b(x) t + O(eps).
pub fn vlasov_varying_b_2d(b: Option<ScalarField>, u: Option<ScalarField>) -> Result<Problem> {
    let is_default_u = u.is_none();
    let b = b.unwrap_or_else(default_intensity_2d);
    let u = u.unwrap_or_else(half_square_potential_2d);
    if b.dim() != 2 || u.dim() != 2 {
        return Err(Error::usage("vlasov_varying_b_2d: b and U must live on R^2"));
    }
    let base = vlasov_const_b_2d(if is_default_u { None } else { Some(u) })?;
    let omega = {
        let b_eval = b.clone();
        let b_grad = b.clone();
        ScalarField::new("b(x)", 4, move |y| b_eval.eval(&y[0..2])).with_gradient(move |y| {
            let g = b_grad.gradient(&y[0..2])?;
            Ok(vec![g[0], g[1], 0.0, 0.0])
        })
    };
    let leading_phase = {
        let b = b.clone();
        ScalarField::new("b(x)", 4, move |y| b.eval(&y[0..2]))
    };
    Ok(Problem {
        name: "vlasov_varying_b_2d".into(),
        omega,
        omega_is_constant: false,
        exact_k_terms: None,
        leading_phase: Some(leading_phase),
        sample_halfwidth: 1.5,
        ..base
    })
}

/// Closed-form first-order augmented slow field for the varying-intensity
/// problem, over Y = (t, x, v) in R^5:
///
///   Kcheck_eps = (1/b) ( 1 - eps (grad b . Jv)/b^2,
///     eps[(grad b . Jv) v - (grad b . v) Jv]/(2 b^2) + eps J E / b,
///     eps[(grad b . v) J E + (grad b . Jv) E]/(2 b^2) + eps (lap U) J v /(2 b) ).
///
/// Used as a hand-coded oracle against the generic pipeline.
pub fn varying_b_order1_kcheck(
    b: &ScalarField,
    u: &ScalarField,
    lap_u: f64,
    eps: f64,
) -> VectorField {
    let b = b.clone();
    let u = u.clone();
    VectorField::new("Kcheck_eps[closed form]", 5, move |yy| {
        let x = &yy[1..3];
        let v = &yy[3..5];
        let bb = b.eval(x)?;
        let gb = b.gradient(x)?;
        let gu = u.gradient(x)?;
        let e = [-gu[0], -gu[1]];
        let je = jv(&e);
        let jw = jv(v);
        let gb_jv = gb[0] * jw[0] + gb[1] * jw[1];
        let gb_v = gb[0] * v[0] + gb[1] * v[1];
        let b2 = bb * bb;
        let first = 1.0 - eps * gb_jv / b2;
        let mid = [
            eps * (gb_jv * v[0] - gb_v * jw[0]) / (2.0 * b2) + eps * je[0] / bb,
            eps * (gb_jv * v[1] - gb_v * jw[1]) / (2.0 * b2) + eps * je[1] / bb,
        ];
        // tail: eps[(grad b . v) J E + (grad b . Jv) E]/(2 b^2) + eps lap U J v / (2 b)
        let tail = [
            eps * (gb_v * je[0] + gb_jv * e[0]) / (2.0 * b2) + eps * lap_u * jw[0] / (2.0 * bb),
            eps * (gb_v * je[1] + gb_jv * e[1]) / (2.0 * b2) + eps * lap_u * jw[1] / (2.0 * bb),
        ];
        Ok(vec![first / bb, mid[0] / bb, mid[1] / bb, tail[0] / bb, tail[1] / bb])
    })
}

// --- Vlasov in 3d x 3d -----------------------------------------------------------

/// The default confining potential on R^3.
pub fn half_square_potential_3d() -> ScalarField {
    ScalarField::new("|x|^2/2", 3, |x| Ok(0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])))
        .with_gradient(|x| Ok(vec![x[0], x[1], x[2]]))
}

/// Default constant-direction field B = (0, 0, 2 + sin(x1) cos(x2)).
pub fn default_b_field_constant_direction() -> VectorField {
    VectorField::new("B", 3, |x| Ok(vec![0.0, 0.0, 2.0 + x[0].sin() * x[1].cos()]))
        .with_jacobian(|x| {
            Ok(Mat::from_rows(&[
                &[0.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0],
                &[x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin(), 0.0],
            ]))
        })
}

/// Default varying-direction field B = (-x2, x1, 2), divergence-free with
/// |B| >= 2.
pub fn default_b_field_general() -> VectorField {
    VectorField::new("B", 3, |x| Ok(vec![-x[1], x[0], 2.0])).with_jacobian(|_| {
        Ok(Mat::from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]))
    })
}

/// Full three-dimensional problem on y = (x, v) in R^6:
/// omega(y) = |B(x)|, G = (0, v x e(x)), K = (v, -grad U(x)).
///
/// Pass `None` for the defaults; `constant_direction` selects the
/// B = (0,0,b(x)) default instead of the rotating one.
pub fn vlasov_3d(
    b_field: Option<VectorField>,
    u: Option<ScalarField>,
    constant_direction: bool,
) -> Result<Problem> {
    let dim = 6;
    let is_default_u = u.is_none();
    let b_field = b_field.unwrap_or_else(|| {
        if constant_direction {
            default_b_field_constant_direction()
        } else {
            default_b_field_general()
        }
    });
    let u = u.unwrap_or_else(half_square_potential_3d);
    let geometry = FieldGeometry::new(b_field, u, 0.5)?;

    let omega = {
        let geom = geometry.clone();
        ScalarField::new("|B(x)|", dim, move |y| geom.b_norm(&y[0..3])).with_gradient({
            let geom = geometry.clone();
            move |y| {
                let x = &y[0..3];
                let e = geom.e(x)?;
                let jb = geom.b_field().jacobian(x)?;
                // grad |B| = (dB)^T e
                let mut g = vec![0.0; dim];
                for j in 0..3 {
                    g[j] = (0..3).map(|i| jb.get(i, j) * e[i]).sum();
                }
                Ok(g)
            }
        })
    };
    let g = {
        let geom = geometry.clone();
        let mut f = VectorField::new("G", dim, move |y| {
            let e = geom.e(&y[0..3])?;
            let mut out = vec![0.0, 0.0, 0.0];
            out.extend(cross_apply(&e, &y[3..6]));
            Ok(out)
        });
        let geom2 = geometry.clone();
        f = f.with_jacobian(move |y| {
            let x = &y[0..3];
            let v = &y[3..6];
            let e = geom2.e(x)?;
            let dxc = geom2.dx_cross_v(x, v)?;
            let jm = cross_matrix(&e);
            Ok(Mat::from_fn(6, 6, |i, j| match (i, j) {
                (i, j) if i >= 3 && j < 3 => dxc.get(i - 3, j),
                (i, j) if i >= 3 && j >= 3 => jm.get(i - 3, j - 3),
                _ => 0.0,
            }))
        });
        f
    };
    let k = {
        let geom = geometry.clone();
        let mut f = VectorField::new("K", dim, move |y| {
            let e = geom.electric(&y[0..3])?;
            let mut out = y[3..6].to_vec();
            out.extend(e);
            Ok(out)
        });
        if is_default_u {
            f = f.with_jacobian(|_| {
                Ok(Mat::from_fn(6, 6, |i, j| {
                    if i < 3 && j == i + 3 {
                        1.0
                    } else if i >= 3 && j == i - 3 {
                        -1.0
                    } else {
                        0.0
                    }
                }))
            });
        }
        f
    };
    // flow over y = (x, v): (x, Q_tau(x) v), Jacobian [[I, 0], [R_tau, Q_tau]]
    let flow = {
        let geom = geometry.clone();
        let base = PeriodicFlow::analytic(dim, move |tau, y| {
            let x = &y[0..3];
            let v = &y[3..6];
            let e = geom.e(x)?;
            let q = crate::geometry3d::q_tau(&e, tau);
            let r = geom.r_tau(x, v, tau)?;
            let mut point = x.to_vec();
            point.extend(q.mul_vec(v));
            let jac = Mat::from_fn(6, 6, |i, j| match (i, j) {
                (i, j) if i < 3 && i == j => 1.0,
                (i, j) if i >= 3 && j < 3 => r.get(i - 3, j),
                (i, j) if i >= 3 && j >= 3 => q.get(i - 3, j - 3),
                _ => 0.0,
            });
            Ok((point, jac))
        });
        if constant_direction {
            base.assume_jacobian_constant_in_y()
        } else {
            base
        }
    };
    let leading_phase = {
        let geom = geometry.clone();
        ScalarField::new("|B(x)|", dim, move |y| geom.b_norm(&y[0..3]))
    };
    Ok(Problem {
        name: if constant_direction { "vlasov_3d_const_dir" } else { "vlasov_3d" }.into(),
        dim,
        omega,
        omega_is_constant: false,
        g,
        k,
        analytic_flow: Some(flow),
        exact_solution: None,
        exact_k_terms: None,
        exact_profile: None,
        exact_phase: None,
        f0: gaussian_density(dim),
        eps_default: default_eps(),
        domain_halfwidth: 4.0,
        sample_halfwidth: 1.5,
        leading_phase: Some(leading_phase),
        geometry: Some(geometry),
    })
}

/// Look up a built-in problem by name (defaults throughout).
pub fn by_name(name: &str) -> Result<Problem> {
    match name {
        "const_eb_2d" => Ok(const_eb_2d([1.0, 0.0])),
        "elementary_rotation" => Ok(elementary_rotation()),
        "vlasov_const_b_2d" => vlasov_const_b_2d(None),
        "vlasov_varying_b_2d" => vlasov_varying_b_2d(None, None),
        "vlasov_3d" => vlasov_3d(None, None, false),
        "vlasov_3d_const_dir" => vlasov_3d(None, None, true),
        other => Err(Error::usage(format!(
            "unknown problem '{other}' (known: const_eb_2d, elementary_rotation, \
             vlasov_const_b_2d, vlasov_varying_b_2d, vlasov_3d, vlasov_3d_const_dir)"
        ))),
    }
}

/// Names of all built-in problems.
pub fn all_names() -> &'static [&'static str] {
    &[
        "const_eb_2d",
        "elementary_rotation",
        "vlasov_const_b_2d",
        "vlasov_varying_b_2d",
        "vlasov_3d",
        "vlasov_3d_const_dir",
    ]
}

/// Helper: the projector matrix of the vertical unit direction, used by
/// callers assembling constant-direction references.
pub fn vertical_projector() -> Mat {
    projector_matrix(&[0.0, 0.0, 1.0])
}
