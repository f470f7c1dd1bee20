//! Geometry operators of the three-dimensional problem against the
//! generic pipeline and closed forms.

use std::f64::consts::PI;

use strobe::averaging::{AveragingConfig, ModeSet, PeriodicFlow};
use strobe::geometry3d::{cross_matrix, projector_matrix, ConstantDirectionFields};
use strobe::linalg;
use strobe::ode::CharacteristicsIntegrator;
use strobe::problems;

fn lift(y: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend_from_slice(y);
    v
}

#[test]
fn rodrigues_flow_matches_numeric_integration() {
    for constant_direction in [true, false] {
        let p = problems::vlasov_3d(None, None, constant_direction).unwrap();
        let analytic = p.analytic_flow.as_ref().unwrap();
        let numeric =
            PeriodicFlow::numeric(&p.g, CharacteristicsIntegrator::with_tols(1e-12, 1e-13));
        for y in p.sample_points(3, 60) {
            for tau in [0.8, 2.0 * PI] {
                let (pa, ja) = analytic.apply(tau, &y).unwrap();
                let (pn, jn) = numeric.apply(tau, &y).unwrap();
                assert!(
                    linalg::norm_inf(&linalg::sub(&pa, &pn)) < 1e-8,
                    "point mismatch ({constant_direction})"
                );
                assert!(ja.sub(&jn).norm_inf() < 1e-6, "jacobian mismatch");
            }
            // period invariance of the velocity rotation
            assert!(analytic.period_defect(&y).unwrap() < 1e-10);
        }
    }
}

#[test]
fn curvature_block_vanishes_for_constant_direction() {
    let p = problems::vlasov_3d(None, None, true).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    for y in p.sample_points(3, 61) {
        let r = geom.r_tau(&y[0..3], &y[3..6], 1.3).unwrap();
        assert!(r.norm_inf() < 1e-9, "R_tau should vanish, got {}", r.norm_inf());
    }
    let q = problems::vlasov_3d(None, None, false).unwrap();
    let geom = q.geometry.as_ref().unwrap();
    let y = q.sample_points(1, 62).remove(0);
    let r = geom.r_tau(&y[0..3], &y[3..6], 1.3).unwrap();
    assert!(r.norm_inf() > 1e-3, "curvature should be visible for the rotating field");
}

#[test]
fn divergence_free_b_fields() {
    for constant_direction in [true, false] {
        let p = problems::vlasov_3d(None, None, constant_direction).unwrap();
        let geom = p.geometry.as_ref().unwrap();
        for y in p.sample_points(5, 63) {
            assert!(geom.divergence_defect(&y[0..3]).unwrap() < 1e-6);
        }
    }
}

#[test]
fn unit_direction_and_jacobian() {
    let p = problems::vlasov_3d(None, None, false).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    for y in p.sample_points(4, 64) {
        let x = &y[0..3];
        let e = geom.e(x).unwrap();
        assert!((linalg::norm2(&e) - 1.0).abs() < 1e-12);
        // analytic d(e) against finite differences of B/|B|
        let je = geom.e_jacobian(x).unwrap();
        let fd = linalg::fd_jacobian(|p| geom.e(p), x, 3).unwrap();
        assert!(je.sub(&fd).norm_inf() < 1e-7);
    }
}

#[test]
fn pulled_back_modes_die_beyond_three() {
    // counting exponents bounds the pulled-back content by |k| <= 3; the
    // genuine curvature matrices actually cancel the |k| = 2, 3 products
    // too, so everything beyond the retained band must be at rounding
    let p = problems::vlasov_3d(None, None, false).unwrap();
    let ap = p.augmented().unwrap();
    let modes =
        ModeSet::new(ap.flow.clone(), ap.kcheck.clone(), AveragingConfig::default()).unwrap();
    let y = lift(&p.sample_points(1, 65).remove(0));
    modes.check_aliasing(&y).unwrap();
    let report = modes.alias_report(&y).unwrap();
    assert!(report.discarded_max < 1e-12, "energy beyond k=3: {:e}", report.discarded_max);
    let at = modes.at(&y).unwrap();
    assert!(linalg::cnorm2(at.mode(1)) > 1e-2, "first mode should be visible");
    assert!(modes.conjugate_defect(&y).unwrap() < 1e-12);
    assert!(modes.reconstruction_defect(&y, 8).unwrap() < 1e-10);
}

#[test]
fn khat0_matches_fourier_oracle_general_direction() {
    let p = problems::vlasov_3d(None, None, false).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    let ap = p.augmented().unwrap();
    let modes =
        ModeSet::new(ap.flow.clone(), ap.kcheck.clone(), AveragingConfig::default()).unwrap();
    for y in p.sample_points(4, 66) {
        let at = modes.at(&lift(&y)).unwrap();
        let m0 = at.mode(0);
        let hand = geom.khat0(&y[0..3], &y[3..6]).unwrap();
        for i in 0..7 {
            assert!(
                (m0[i].re - hand[i]).abs() < 1e-8 && m0[i].im.abs() < 1e-10,
                "slot {i}: {} vs {}",
                m0[i].re,
                hand[i]
            );
        }
    }
}

#[test]
fn khat0_reduces_for_constant_direction() {
    // constant direction: (1/b)(1, v_par e3, E_par e3)
    let p = problems::vlasov_3d(None, None, true).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    for y in p.sample_points(3, 67) {
        let x = &y[0..3];
        let v = &y[3..6];
        let hand = geom.khat0(x, v).unwrap();
        let b = geom.b_norm(x).unwrap();
        let e = geom.electric(x).unwrap();
        let want = [1.0 / b, 0.0, 0.0, v[2] / b, 0.0, 0.0, e[2] / b];
        for i in 0..7 {
            assert!((hand[i] - want[i]).abs() < 1e-10, "slot {i}");
        }
    }
}

#[test]
fn khat0_curvature_terms_vanish_for_uniform_field_without_potential() {
    // E = 0 and uniform B: the third block is exactly zero
    let b = strobe::fields::VectorField::constant("B", vec![0.0, 0.0, 2.0]);
    let u = strobe::fields::ScalarField::constant(3, 0.0);
    let geom = strobe::geometry3d::FieldGeometry::new(b, u, 0.5).unwrap();
    let hand = geom.khat0(&[0.3, -0.2, 0.9], &[0.4, 0.7, -0.1]).unwrap();
    for i in 4..7 {
        assert!(hand[i].abs() < 1e-12);
    }
}

#[test]
fn constant_direction_first_order_fields_match_pipeline() {
    let p = problems::vlasov_3d(None, None, true).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    let probes: Vec<Vec<f64>> =
        p.sample_points(3, 68).into_iter().map(|y| y[0..3].to_vec()).collect();
    let hand = ConstantDirectionFields::new(geom.clone(), &probes).unwrap();
    let ap = p.augmented().unwrap();
    let eps = 1e-2;
    let split = strobe::averaging::averaged_split(
        &ap.flow,
        &ap.gcheck,
        &ap.kcheck,
        1,
        eps,
        &AveragingConfig::default(),
    )
    .unwrap();
    let k_hand = hand.k_eps(eps);
    let g_hand = hand.g_eps(eps).unwrap();
    for y in p.sample_points(4, 69) {
        let yy = lift(&y);
        let kp = split.k_eps.eval(&yy).unwrap();
        let kh = k_hand.eval(&yy).unwrap();
        for i in 0..7 {
            assert!((kp[i] - kh[i]).abs() < 1e-8, "K slot {i}: {} vs {}", kp[i], kh[i]);
        }
        let gp = split.g_eps.eval(&yy).unwrap();
        let gh = g_hand.eval(&yy).unwrap();
        for i in 0..7 {
            assert!((gp[i] - gh[i]).abs() < 1e-8, "G slot {i}: {} vs {}", gp[i], gh[i]);
        }
    }
}

#[test]
fn constant_direction_rejects_rotating_field() {
    let p = problems::vlasov_3d(None, None, false).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    let probes: Vec<Vec<f64>> =
        p.sample_points(2, 70).into_iter().map(|y| y[0..3].to_vec()).collect();
    assert!(ConstantDirectionFields::new(geom.clone(), &probes).is_err());
}

#[test]
fn varying_intensity_closed_form_matches_pipeline() {
    // the 2d closed-form first-order slow field against the generic
    // pipeline on the augmented problem
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    let ap = p.augmented().unwrap();
    let eps = 1e-2;
    let split = strobe::averaging::averaged_split(
        &ap.flow,
        &ap.gcheck,
        &ap.kcheck,
        1,
        eps,
        &AveragingConfig::default(),
    )
    .unwrap();
    let closed = problems::varying_b_order1_kcheck(
        &problems::default_intensity_2d(),
        &problems::half_square_potential_2d(),
        2.0,
        eps,
    );
    for y in p.sample_points(5, 71) {
        let yy = lift(&y);
        let kp = split.k_eps.eval(&yy).unwrap();
        let kc = closed.eval(&yy).unwrap();
        for i in 0..5 {
            assert!((kp[i] - kc[i]).abs() < 1e-8, "slot {i}: {} vs {}", kp[i], kc[i]);
        }
        // first slow component is 1/b at leading order
        let b = problems::default_intensity_2d().eval(&y[0..2]).unwrap();
        assert!((kp[0] - 1.0 / b).abs() < 2.0 * eps);
    }
}

#[test]
fn projector_cross_identities_at_sample_directions() {
    let p = problems::vlasov_3d(None, None, false).unwrap();
    let geom = p.geometry.as_ref().unwrap();
    for y in p.sample_points(5, 72) {
        let e = geom.e(&y[0..3]).unwrap();
        let pm = projector_matrix(&e);
        let jm = cross_matrix(&e);
        // J^2 = -I + P, J P = P J = 0, Q_tau Q_{-tau} = I
        let j2 = jm.matmul(&jm);
        let want = pm.sub(&linalg::Mat::identity(3));
        assert!(j2.sub(&want).norm_inf() < 1e-12);
        assert!(jm.matmul(&pm).norm_inf() < 1e-12);
        assert!(pm.matmul(&jm).norm_inf() < 1e-12);
        let q = strobe::geometry3d::q_tau(&e, 1.7);
        let qi = strobe::geometry3d::q_tau(&e, -1.7);
        assert!(q.matmul(&qi).sub(&linalg::Mat::identity(3)).norm_inf() < 1e-12);
    }
}
