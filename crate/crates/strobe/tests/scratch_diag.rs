//! Temporary diagnostics (removed before release).

use strobe::averaging::AveragingConfig;
use strobe::ode::CharacteristicsIntegrator;
use strobe::phase::{augmented_split, commuting_pair, reconstruct, solve_h, solve_s, HSolveOrder};
use strobe::problems;
use strobe::transport::solve_reference;

#[test]
#[ignore]
fn diag_reconstruction_errors() {
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    // off-center density: the centered Gaussian is conserved by this flow
    let f0: strobe::transport::Density = std::sync::Arc::new(|y: &[f64]| {
        let c = [0.5, -0.3, 0.4, -0.2];
        (-0.5 * y.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp()
    });
    let ys = p.sample_points(2, 49);
    let t = 0.5;
    let integ = CharacteristicsIntegrator::with_tols(1e-11, 1e-12);
    for order in [0usize, 1] {
        for eps in [1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)] {
            let ap = p.augmented().unwrap();
            let split = augmented_split(&ap, order, eps, &AveragingConfig::default()).unwrap();
            let pair = commuting_pair(&split, &p.sample_points(4, 41)).unwrap();
            let split_hi =
                augmented_split(&ap, order + 1, eps, &AveragingConfig::default()).unwrap();
            let pair_hi = commuting_pair(&split_hi, &p.sample_points(4, 41)).unwrap();
            let mut worst = 0.0_f64;
            let mut worst_tau = 0.0;
            for y in &ys {
                // phase from the higher-order pair, profile from the order-n pair
                let ts = strobe::phase::solve_tau(&pair_hi, t, y, eps, &integ, None).unwrap();
                let (value, _) = strobe::phase::solve_h(
                    &pair,
                    &f0,
                    t,
                    ts.tau,
                    y,
                    &integ,
                    strobe::phase::HSolveOrder::default(),
                )
                .unwrap();
                let (rf, _) =
                    solve_reference(&p.omega, &p.g, &p.k, &f0, eps, t, y, &integ).unwrap();
                if (value - rf).abs() > worst {
                    worst = (value - rf).abs();
                    worst_tau = ts.tau;
                }
            }
            println!("order {order} eps {eps:.3e}: err {worst:.3e} tau* {worst_tau:.2}");
        }
    }
}

#[test]
#[ignore]
fn diag_swap_order() {
    let p = problems::vlasov_varying_b_2d(None, None).unwrap();
    let y = p.sample_points(1, 48).remove(0);
    let tight = CharacteristicsIntegrator::with_tols(1e-12, 1e-13);
    for order in [0usize, 1] {
        for eps in [1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3] {
            let ap = p.augmented().unwrap();
            let split = augmented_split(&ap, order, eps, &AveragingConfig::default()).unwrap();
            let pair = commuting_pair(&split, &p.sample_points(4, 41)).unwrap();
            let (a, _) =
                solve_h(&pair, &p.f0, 0.9, 2.3, &y, &tight, HSolveOrder::AngleLegFirst).unwrap();
            let (b, _) =
                solve_h(&pair, &p.f0, 0.9, 2.3, &y, &tight, HSolveOrder::TimeLegFirst).unwrap();
            let (s, _) = solve_s(&pair, 0.9, 2.3, &y, &tight).unwrap();
            println!("order {order} eps {eps:.3e}: swap {:.3e}  S {s:.6}", (a - b).abs());
        }
    }
}
