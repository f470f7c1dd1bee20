//! Construction-time validation of the packaged problems.

use strobe::problems;

#[test]
fn all_problems_self_check() {
    for name in problems::all_names() {
        let p = problems::by_name(name).unwrap();
        p.self_check(6, 101).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn unknown_problem_is_usage_error() {
    assert!(problems::by_name("does_not_exist").is_err());
}

#[test]
fn elementary_rotation_radial_growth() {
    // |phi_t(y)| = e^t |y| along the full oscillatory flow
    let p = problems::elementary_rotation();
    let eps = 0.05;
    let f = p.f_eps(eps).unwrap();
    let integ = strobe::ode::CharacteristicsIntegrator::with_tols(1e-11, 1e-12)
        .max_step(0.2 * eps);
    let y = [0.8, -0.5];
    let t = 0.7;
    let (z, _) = strobe::transport::backward_point(&f, -t, &y, &integ).unwrap();
    let grow = strobe::linalg::norm2(&z) / strobe::linalg::norm2(&y);
    assert!((grow - t.exp()).abs() < 1e-6, "growth {grow} vs {}", t.exp());
}

#[test]
fn augmented_first_component_is_inverse_intensity() {
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    let ap = p.augmented().unwrap();
    let b = problems::default_intensity_2d();
    for y in p.sample_points(4, 102) {
        let mut yy = vec![0.0];
        yy.extend(&y);
        let k = ap.kcheck.eval(&yy).unwrap();
        let want = 1.0 / b.eval(&y[0..2]).unwrap();
        assert!((k[0] - want).abs() < 1e-12);
        // and the pulled-back first slot is constant in the angle
        let flow = &ap.flow;
        for tau in [0.9, 2.8] {
            let pulled = strobe::averaging::pullback(flow, &ap.kcheck, tau, &yy).unwrap();
            assert!((pulled[0] - want).abs() < 1e-12);
        }
        let g = ap.gcheck.eval(&yy).unwrap();
        assert_eq!(g[0], 0.0);
    }
}

#[test]
fn default_density_is_a_bump() {
    let p = problems::const_eb_2d([1.0, 0.0]);
    let near = (p.f0)(&[0.6, -0.4, 0.5, -0.3]);
    let far = (p.f0)(&[4.0, 4.0, 4.0, 4.0]);
    assert!(near > 0.9 && far < 1e-5);
}

#[test]
fn eps_defaults_span_two_decades() {
    let p = problems::elementary_rotation();
    assert_eq!(p.eps_default.len(), 5);
    assert!((p.eps_default[0] - 1e-1).abs() < 1e-15);
    assert!((p.eps_default[4] - 1e-3).abs() < 1e-15);
}
