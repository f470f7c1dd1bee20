//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with the measured numbers.
//!
//! Sweeps use a reduced angle-sample count (N = 32): the pulled-back
//! fields of every packaged problem are trigonometric polynomials of
//! degree at most three, for which the discrete transform is already
//! exact with margin at that resolution.

use strobe::averaging::{
    assemble_explicit, assemble_words, averaged_split, integral_oracle, AveragingConfig, ModeSet,
    WordConvention,
};
use strobe::linalg;
use strobe::ode::CharacteristicsIntegrator;
use strobe::phase::{
    augmented_split, commuting_pair, reconstruct, reconstruction_pairs, solve_h, solve_s,
    HSolveOrder,
};
use strobe::problems;
use strobe::stats::{loglog_slope, max_and_rms};
use strobe::transport::{diagonal_eval, solve_reference};
use strobe::words::{BetaTable, Word};

fn report(id: &str, pass: bool, detail: &str) {
    println!("acceptance {id}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn sweep_config() -> AveragingConfig {
    AveragingConfig::default().with_samples(32)
}

/// Config for the two-dimensional sweeps, whose pulled-back fields carry
/// modes |k| <= 1 only (asserted by the alias diagnostics elsewhere).
fn sweep_config_k1() -> AveragingConfig {
    AveragingConfig::default().with_samples(16).with_k_max(1)
}

fn tight() -> CharacteristicsIntegrator {
    CharacteristicsIntegrator::with_tols(1e-11, 1e-13)
}

fn lift(y: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend_from_slice(y);
    v
}

/// Criterion 1: order-2 split against the closed-form solution of the
/// constant-field problem. The expansion of this problem terminates at
/// the second term, so the order-2 split commutes exactly and the errors
/// sit at the integrator floor; the slope is then reported as exact (the
/// bound err <= C eps^3 holds with a tiny constant). Third-order
/// convergence is demonstrated where the neglected term is nonzero: the
/// order-2 split of the potential problem against the stiff reference.
#[test]
fn criterion_01_constant_field_oracle() {
    let p = problems::const_eb_2d([1.0, 0.0]);
    let exact = p.exact_solution.as_ref().unwrap();
    let cfg = sweep_config();
    let integ = tight();
    let t = 1.0;

    let eps0 = 1e-2;
    let split = averaged_split(&p.flow(), &p.g, &p.k, 2, eps0, &cfg).unwrap();
    let errs: Vec<f64> = p
        .sample_points(50, 1)
        .iter()
        .map(|y| {
            let (got, _) = diagonal_eval(&split, &p.f0, t, y, &integ).unwrap();
            (got - exact(t, y, eps0)).abs()
        })
        .collect();
    let (max_err, rms) = max_and_rms(&errs);

    let mut sweep = Vec::new();
    for &eps in &p.eps_default {
        let split = averaged_split(&p.flow(), &p.g, &p.k, 2, eps, &cfg).unwrap();
        let worst = p
            .sample_points(12, 2)
            .iter()
            .map(|y| {
                let (got, _) = diagonal_eval(&split, &p.f0, t, y, &integ).unwrap();
                (got - exact(t, y, eps)).abs()
            })
            .fold(0.0_f64, f64::max);
        sweep.push((eps, worst));
    }
    let floor = 1e-8;
    let all_at_floor = sweep.iter().all(|(_, e)| *e <= floor);
    let slope_txt = if all_at_floor {
        "slope exact (expansion terminates; errors at integrator floor)".to_string()
    } else {
        let s = loglog_slope(&sweep).unwrap();
        format!("slope {s:.2}")
    };
    let slope_ok = all_at_floor || {
        let s = loglog_slope(&sweep).unwrap();
        (s - 3.0).abs() <= 0.3
    };

    // third-order convergence where the neglected term is alive: the
    // order-2 split of the potential problem, swept over the asymptotic
    // window (the largest default eps is preasymptotic there)
    let q = problems::vlasov_const_b_2d(None).unwrap();
    let demo_integ = CharacteristicsIntegrator::with_tols(1e-12, 1e-14);
    let demo_cfg = sweep_config_k1();
    let mut demo = Vec::new();
    for &eps in &[10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3] {
        let split = averaged_split(&q.flow(), &q.g, &q.k, 2, eps, &demo_cfg).unwrap();
        let worst = q
            .sample_points(5, 3)
            .iter()
            .map(|y| {
                let (got, _) = diagonal_eval(&split, &q.f0, t, y, &demo_integ).unwrap();
                let (want, _) =
                    solve_reference(&q.omega, &q.g, &q.k, &q.f0, eps, t, y, &demo_integ)
                        .unwrap();
                (got - want).abs()
            })
            .fold(0.0_f64, f64::max);
        demo.push((eps, worst));
    }
    let demo_slope = loglog_slope(&demo).unwrap();
    let demo_ok = (demo_slope - 3.0).abs() <= 0.3;

    report(
        "1",
        max_err <= 1e-5 && slope_ok && demo_ok,
        &format!(
            "max {max_err:.2e} (rms {rms:.2e}) at eps 1e-2; {slope_txt}; \
             order-2 slope on the potential problem {demo_slope:.2}"
        ),
    );
}

/// Criterion 2: phase/profile reconstruction of the elementary rotation
/// against its closed-form solution; S and h against their closed forms.
#[test]
fn criterion_02_elementary_rotation_oracle() {
    let p = problems::elementary_rotation();
    let exact = p.exact_solution.as_ref().unwrap();
    let h_exact = p.exact_profile.as_ref().unwrap();
    let s_exact = p.exact_phase.as_ref().unwrap();
    let cfg = sweep_config_k1();
    let integ = CharacteristicsIntegrator::with_tols(1e-12, 1e-13);
    let t = 1.0;
    let points = p.sample_points(50, 4);
    let ap = p.augmented().unwrap();

    let mut max_rec = 0.0_f64;
    let mut max_h = 0.0_f64;
    let mut max_s = 0.0_f64;
    for &eps in &[1e-1, 1e-3] {
        let pairs = reconstruction_pairs(&ap, 1, eps, &cfg, &p.sample_points(4, 5)).unwrap();
        for y in &points {
            let r = reconstruct(&pairs, &p.f0, t, y, eps, &integ, None).unwrap();
            max_rec = max_rec.max((r.value - exact(t, y, eps)).abs());
            for tau in [0.9, 3.7] {
                let (h, _) =
                    solve_h(&pairs.profile, &p.f0, t, tau, y, &integ, HSolveOrder::default())
                        .unwrap();
                max_h = max_h.max((h - h_exact(t, tau, y)).abs());
                let (s, _) = solve_s(&pairs.profile, t, tau, y, &integ).unwrap();
                max_s = max_s.max((s - s_exact(t, tau, y)).abs());
            }
        }
    }
    report(
        "2",
        max_rec <= 1e-6 && max_h <= 1e-8 && max_s <= 1e-8,
        &format!("reconstruction {max_rec:.2e}, h {max_h:.2e}, S {max_s:.2e}"),
    );
}

/// Criterion 3: closed forms of the averaged terms.
#[test]
fn criterion_03_averaged_term_identities() {
    let cfg = sweep_config();
    let mut worst_k2_const = 0.0_f64;
    let mut worst_k3_const = 0.0_f64;
    let p = problems::const_eb_2d([1.0, 0.0]);
    let modes = ModeSet::new(p.flow(), p.k.clone(), cfg.clone()).unwrap();
    let expected = p.exact_k_terms.as_ref().unwrap();
    for y in p.sample_points(20, 6) {
        let k2 = assemble_explicit(&modes, 2).unwrap().eval(&y).unwrap();
        let want = expected[1].eval(&y).unwrap();
        worst_k2_const =
            worst_k2_const.max(linalg::norm_inf(&linalg::sub(&k2, &want)));
        let k3 = assemble_explicit(&modes, 3).unwrap().eval(&y).unwrap();
        worst_k3_const = worst_k3_const.max(linalg::norm_inf(&k3));
    }

    let q = problems::vlasov_const_b_2d(None).unwrap();
    let modes_q = ModeSet::new(q.flow(), q.k.clone(), cfg.clone()).unwrap();
    let expected_q = q.exact_k_terms.as_ref().unwrap();
    let mut worst_k2_pot = 0.0_f64;
    for y in q.sample_points(20, 7) {
        let k2 = assemble_explicit(&modes_q, 2).unwrap().eval(&y).unwrap();
        let want = expected_q[1].eval(&y).unwrap();
        worst_k2_pot = worst_k2_pot.max(linalg::norm_inf(&linalg::sub(&k2, &want)));
    }

    // first term equals the zero mode on every problem
    let mut worst_k1 = 0.0_f64;
    for name in problems::all_names() {
        let pr = problems::by_name(name).unwrap();
        let (flow, field, pts) = if pr.omega_is_constant {
            (pr.flow(), pr.k.clone(), pr.sample_points(4, 8))
        } else {
            let ap = pr.augmented().unwrap();
            let pts = pr.sample_points(4, 8).into_iter().map(|y| lift(&y)).collect();
            (ap.flow.clone(), ap.kcheck.clone(), pts)
        };
        let modes = ModeSet::new(flow, field, cfg.clone()).unwrap();
        for y in &pts {
            let k1 = assemble_explicit(&modes, 1).unwrap().eval(y).unwrap();
            let m0 = modes.at(y).unwrap();
            let zero_mode: Vec<f64> = m0.mode(0).iter().map(|c| c.re).collect();
            worst_k1 = worst_k1.max(linalg::norm_inf(&linalg::sub(&k1, &zero_mode)));
        }
    }

    report(
        "3",
        worst_k2_const <= 1e-8 && worst_k2_pot <= 1e-8 && worst_k3_const <= 1e-8
            && worst_k1 <= 1e-12,
        &format!(
            "K2 const-field {worst_k2_const:.2e}, K2 potential {worst_k2_pot:.2e}, \
             K3 const-field {worst_k3_const:.2e}, K1 vs zero mode {worst_k1:.2e}"
        ),
    );
}

/// Criterion 4: the explicit bracket route, the iterated-integral route
/// and the universal word sum agree on every problem. The word sum pairs
/// the recursion coefficients with reversed bracket words; the naive
/// pairing flips the sign of the second term.
#[test]
fn criterion_04_route_agreement() {
    let cfg = sweep_config();
    let mut table = BetaTable::new();
    let mut worst = 0.0_f64;
    let mut worst_words = 0.0_f64;
    for name in problems::all_names() {
        let pr = problems::by_name(name).unwrap();
        let (flow, field, pts) = if pr.omega_is_constant {
            (pr.flow(), pr.k.clone(), pr.sample_points(20, 9))
        } else {
            let ap = pr.augmented().unwrap();
            let pts = pr.sample_points(20, 9).into_iter().map(|y| lift(&y)).collect();
            (ap.flow.clone(), ap.kcheck.clone(), pts)
        };
        let modes = ModeSet::new(flow.clone(), field.clone(), cfg.clone()).unwrap();
        for r in 1..=2usize {
            let explicit = assemble_explicit(&modes, r).unwrap();
            let words = assemble_words(&modes, r, &mut table, WordConvention::Reversed).unwrap();
            for y in &pts {
                let e = explicit.eval(y).unwrap();
                let o = integral_oracle(&flow, &field, r, y, None, false).unwrap();
                worst = worst.max(linalg::norm_inf(&linalg::sub(&e, &o)));
                let w = words.eval(y).unwrap();
                worst_words = worst_words.max(linalg::norm_inf(&linalg::sub(&e, &w)));
            }
        }
    }
    // the sign convention is discriminated at the second term
    let p = problems::vlasov_const_b_2d(None).unwrap();
    let modes = ModeSet::new(p.flow(), p.k.clone(), cfg).unwrap();
    let y = p.sample_points(1, 10).remove(0);
    let e2 = assemble_explicit(&modes, 2).unwrap().eval(&y).unwrap();
    let lit = assemble_words(&modes, 2, &mut table, WordConvention::Literal)
        .unwrap()
        .eval(&y)
        .unwrap();
    let flipped: Vec<f64> = lit.iter().map(|x| -x).collect();
    let literal_flips = linalg::norm_inf(&linalg::sub(&e2, &flipped)) <= 1e-8;

    report(
        "4",
        worst <= 1e-8 && worst_words <= 1e-8 && literal_flips,
        &format!(
            "explicit vs integral {worst:.2e}; words (reversed pairing) vs explicit \
             {worst_words:.2e}; literal pairing flips the second term: {literal_flips}"
        ),
    );
}

/// Criterion 5: commutator-defect scaling of the truncated pair.
#[test]
fn criterion_05_commutator_defect_scaling() {
    let cfg = sweep_config_k1();
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    let ap = p.augmented().unwrap();
    let points = p.sample_points(8, 11);
    let mut sweep = Vec::new();
    for &eps in &p.eps_default {
        let split = augmented_split(&ap, 1, eps, &cfg).unwrap();
        let pair = commuting_pair(&split, &points[..2].to_vec()).unwrap();
        let d = points
            .iter()
            .map(|y| pair.bracket_defect(y).unwrap())
            .fold(0.0_f64, f64::max);
        sweep.push((eps, d));
    }
    let slope = loglog_slope(&sweep).unwrap();

    let q = problems::elementary_rotation();
    let aq = q.augmented().unwrap();
    let qpoints = q.sample_points(8, 12);
    let mut exact_defect = 0.0_f64;
    for &eps in &q.eps_default {
        let split = augmented_split(&aq, 1, eps, &cfg).unwrap();
        let pair = commuting_pair(&split, &qpoints[..2].to_vec()).unwrap();
        for y in &qpoints {
            exact_defect = exact_defect
                .max(pair.bracket_defect(y).unwrap())
                .max(pair.source_defect(y).unwrap());
        }
    }

    report(
        "5",
        (slope - 2.0).abs() <= 0.3 && exact_defect <= 1e-8,
        &format!(
            "varying-intensity order-1 defect slope {slope:.2}; \
             exact normal form defect {exact_defect:.2e}"
        ),
    );
}

/// Criterion 6: reconstruction converges to the stiff reference on the
/// varying-intensity problem at first and second order in the profile
/// truncation (the phase pair runs one order higher).
#[test]
fn criterion_06_reconstruction_convergence() {
    use rayon::prelude::*;
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    let ap = p.augmented().unwrap();
    let cfg = sweep_config_k1();
    let integ = CharacteristicsIntegrator::with_tols(1e-10, 1e-12);
    let t = 1.0;
    let points = p.sample_points(30, 13);
    let mut slopes = Vec::new();
    for order in [1usize, 0] {
        let pairs_by_eps: Vec<_> = p
            .eps_default
            .iter()
            .map(|&eps| {
                (eps, reconstruction_pairs(&ap, order, eps, &cfg, &points[..2].to_vec()).unwrap())
            })
            .collect();
        // per point, walk the eps grid warm-starting the phase branch
        // from the previous fixed point (scaled by the eps ratio)
        let errs_per_eps: Vec<Vec<f64>> = points
            .par_iter()
            .map(|y| {
                let mut warm: Option<(f64, f64)> = None; // (eps, tau)
                let mut errs = Vec::with_capacity(pairs_by_eps.len());
                for (eps, pairs) in &pairs_by_eps {
                    let seed = warm.map(|(e0, tau0)| tau0 * e0 / eps);
                    let r = reconstruct(pairs, &p.f0, t, y, *eps, &integ, seed).unwrap();
                    warm = Some((*eps, r.tau));
                    let (want, _) =
                        solve_reference(&p.omega, &p.g, &p.k, &p.f0, *eps, t, y, &integ)
                            .unwrap();
                    errs.push(r.value - want);
                }
                errs
            })
            .collect();
        let mut sweep = Vec::new();
        for (i, (eps, _)) in pairs_by_eps.iter().enumerate() {
            let column: Vec<f64> = errs_per_eps.iter().map(|row| row[i]).collect();
            let (max_err, _) = max_and_rms(&column);
            sweep.push((*eps, max_err));
        }
        slopes.push((order, loglog_slope(&sweep).unwrap(), sweep));
    }
    let s1 = slopes.iter().find(|s| s.0 == 1).unwrap();
    let s0 = slopes.iter().find(|s| s.0 == 0).unwrap();
    report(
        "6",
        (s1.1 - 2.0).abs() <= 0.3 && (s0.1 - 1.0).abs() <= 0.3,
        &format!("order-1 slope {:.2}, order-0 slope {:.2}", s1.1, s0.1),
    );
}

/// Criterion 7: divergence-free inputs give divergence-free averaged
/// truncations (finite-difference trace at sample points).
#[test]
fn criterion_07_divergence_preservation() {
    let cfg = sweep_config();
    let mut worst = 0.0_f64;
    for p in [
        problems::const_eb_2d([1.0, 0.0]),
        problems::vlasov_const_b_2d(None).unwrap(),
    ] {
        for y in p.sample_points(6, 14) {
            assert!(p.g.divergence(&y).unwrap().abs() < 1e-10);
            assert!(p.k.divergence(&y).unwrap().abs() < 1e-10);
        }
        for order in [1usize, 2] {
            let split = averaged_split(&p.flow(), &p.g, &p.k, order, 1e-2, &cfg).unwrap();
            for y in p.sample_points(6, 15) {
                worst = worst.max(split.k_eps.divergence(&y).unwrap().abs());
                worst = worst.max(split.g_eps.divergence(&y).unwrap().abs());
            }
        }
    }
    report("7", worst <= 1e-6, &format!("max |div| of averaged fields {worst:.2e}"));
}

/// Criterion 8: three-dimensional geometry identities and the
/// constant-direction first-order fields against the generic pipeline.
#[test]
fn criterion_08_geometry_identities() {
    let cfg = sweep_config();
    let general = problems::vlasov_3d(None, None, false).unwrap();
    let geom = general.geometry.as_ref().unwrap();
    let numeric = strobe::averaging::PeriodicFlow::numeric(
        &general.g,
        CharacteristicsIntegrator::with_tols(1e-12, 1e-13),
    );
    let analytic = general.analytic_flow.as_ref().unwrap();
    let points = general.sample_points(20, 16);
    let mut worst_alg = 0.0_f64;
    let mut worst_flow = 0.0_f64;
    let mut worst_khat = 0.0_f64;
    let ap = general.augmented().unwrap();
    let modes = ModeSet::new(ap.flow.clone(), ap.kcheck.clone(), cfg.clone()).unwrap();
    for y in &points {
        let e = geom.e(&y[0..3]).unwrap();
        let pm = strobe::geometry3d::projector_matrix(&e);
        let jm = strobe::geometry3d::cross_matrix(&e);
        let j2 = jm.matmul(&jm);
        let want = pm.sub(&linalg::Mat::identity(3));
        worst_alg = worst_alg.max(j2.sub(&want).norm_inf());
        let q = strobe::geometry3d::q_tau(&e, 1.3);
        let qi = strobe::geometry3d::q_tau(&e, -1.3);
        worst_alg =
            worst_alg.max(q.matmul(&qi).sub(&linalg::Mat::identity(3)).norm_inf());
        let (pa, _) = analytic.apply(2.1, y).unwrap();
        let (pn, _) = numeric.apply(2.1, y).unwrap();
        worst_flow = worst_flow.max(linalg::norm_inf(&linalg::sub(&pa, &pn)));
        // zero mode against the hand-coded expression
        let m0 = modes.at(&lift(y)).unwrap();
        let hand = geom.khat0(&y[0..3], &y[3..6]).unwrap();
        for i in 0..7 {
            worst_khat = worst_khat.max((m0.mode(0)[i].re - hand[i]).abs());
        }
    }

    let cd = problems::vlasov_3d(None, None, true).unwrap();
    let cd_geom = cd.geometry.as_ref().unwrap();
    let probes: Vec<Vec<f64>> =
        cd.sample_points(3, 17).into_iter().map(|y| y[0..3].to_vec()).collect();
    let hand =
        strobe::geometry3d::ConstantDirectionFields::new(cd_geom.clone(), &probes).unwrap();
    let cd_ap = cd.augmented().unwrap();
    let eps = 1e-2;
    let split = averaged_split(&cd_ap.flow, &cd_ap.gcheck, &cd_ap.kcheck, 1, eps, &cfg).unwrap();
    let k_hand = hand.k_eps(eps);
    let g_hand = hand.g_eps(eps).unwrap();
    let mut worst_cd = 0.0_f64;
    for y in cd.sample_points(20, 18) {
        let yy = lift(&y);
        let kp = split.k_eps.eval(&yy).unwrap();
        let kh = k_hand.eval(&yy).unwrap();
        worst_cd = worst_cd.max(linalg::norm_inf(&linalg::sub(&kp, &kh)));
        let gp = split.g_eps.eval(&yy).unwrap();
        let gh = g_hand.eval(&yy).unwrap();
        worst_cd = worst_cd.max(linalg::norm_inf(&linalg::sub(&gp, &gh)));
    }

    report(
        "8",
        worst_alg <= 1e-8 && worst_flow <= 1e-8 && worst_khat <= 1e-8 && worst_cd <= 1e-8,
        &format!(
            "identities {worst_alg:.2e}, flow {worst_flow:.2e}, zero mode {worst_khat:.2e}, \
             constant-direction fields {worst_cd:.2e}"
        ),
    );
}

/// Criterion 9: the split solver's work is insensitive to eps while the
/// stiff reference grows like 1/eps.
#[test]
fn criterion_09_cost_uniformity() {
    let p = problems::vlasov_const_b_2d(None).unwrap();
    let cfg = sweep_config();
    let integ = CharacteristicsIntegrator::with_tols(1e-9, 1e-11);
    let points = p.sample_points(3, 19);
    let mut split_counts = Vec::new();
    let mut ref_counts = Vec::new();
    for &eps in &[1e-1, 1e-3] {
        let split = averaged_split(&p.flow(), &p.g, &p.k, 1, eps, &cfg).unwrap();
        let mut sc = 0u64;
        let mut rc = 0u64;
        for y in &points {
            let (_, s) = diagonal_eval(&split, &p.f0, 1.0, y, &integ).unwrap();
            sc += s.rhs_evals;
            let (_, r) =
                solve_reference(&p.omega, &p.g, &p.k, &p.f0, eps, 1.0, y, &integ).unwrap();
            rc += r.rhs_evals;
        }
        split_counts.push(sc as f64);
        ref_counts.push(rc as f64);
    }
    let split_ratio =
        (split_counts[1] / split_counts[0]).max(split_counts[0] / split_counts[1]);
    let ref_ratio = ref_counts[1] / ref_counts[0];
    report(
        "9",
        split_ratio < 2.0 && ref_ratio >= 50.0,
        &format!(
            "split work varies {split_ratio:.2}x across two decades of eps \
             ({:.0} vs {:.0} evaluations); reference grows {ref_ratio:.0}x",
            split_counts[0], split_counts[1]
        ),
    );
}

/// Criterion 10: coefficient recursion base cases and hand-recursed words
/// in exact arithmetic.
#[test]
fn criterion_10_beta_unit_suite() {
    let mut t = BetaTable::new();
    let mut b = |w: &[i64]| t.beta(&Word::new(w)).unwrap();
    let rat = |n: i64, d: i64| strobe::words::Ratio::new(n, d);
    let cr = |re: strobe::words::Ratio<i64>, im: strobe::words::Ratio<i64>| {
        strobe::words::RationalComplex { re, im }
    };
    let zero = rat(0, 1);
    let cases: Vec<(&[i64], strobe::words::RationalComplex)> = vec![
        (&[0], cr(rat(1, 1), zero)),
        (&[5], cr(zero, zero)),
        (&[-2], cr(zero, zero)),
        (&[0, 0], cr(zero, zero)),
        (&[0, 0, 0], cr(zero, zero)),
        (&[1, -1], cr(zero, rat(-1, 1))),
        (&[2, -2], cr(zero, rat(-1, 2))),
        (&[3, -3], cr(zero, rat(-1, 3))),
        (&[-1, 1], cr(zero, rat(1, 1))),
        (&[0, 1], cr(zero, rat(-1, 1))),
        (&[1, 0], cr(zero, rat(1, 1))),
        (&[2, -1], cr(zero, zero)),
        (&[0, 0, 1], cr(rat(1, 1), zero)),
        (&[1, 1, -2], cr(rat(-1, 2), zero)),
        (&[1, -1, 0], cr(rat(1, 1), zero)),
        (&[0, 1, -1], cr(rat(1, 1), zero)),
        (&[1, -1, 1], cr(rat(-2, 1), zero)),
    ];
    let mut failures = Vec::new();
    for (w, want) in &cases {
        let got = b(w);
        if got != *want {
            failures.push(format!("{w:?}: {got} vs {want}"));
        }
    }
    report(
        "10",
        failures.is_empty(),
        &format!("{} base cases and hand-recursed words verified{}", cases.len(), {
            if failures.is_empty() {
                String::new()
            } else {
                format!("; mismatches: {failures:?}")
            }
        }),
    );
}

/// Periodicity of the fast flows, asserted once for the record (part of
/// the standing hypotheses rather than a numbered criterion).
#[test]
fn flows_are_periodic() {
    for name in problems::all_names() {
        let p = problems::by_name(name).unwrap();
        let flow = p.flow();
        for y in p.sample_points(3, 20) {
            assert!(flow.period_defect(&y).unwrap() < 1e-8, "{name}");
        }
    }
    println!("acceptance hypotheses: PASS — all packaged fast flows close after one period");
}
