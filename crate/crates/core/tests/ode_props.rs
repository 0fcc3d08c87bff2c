use std::f64::consts::TAU;

use periodic_averaging::models::{rotate, vdp_original, vdp_rotated, VdpParams};
use periodic_averaging::ode::{flow, integrate, poincare_map, IntegratorConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unperturbed_map_is_identity(m in -4.0f64..4.0, n in -4.0f64..4.0, a in -1.0f64..1.0, lambda in 0.0f64..2.0) {
        let cfg = IntegratorConfig::default();
        let p = VdpParams::nonsmooth(a, lambda);
        let rot = poincare_map(&vdp_rotated(p), &[m, n], 0.0, &cfg).unwrap();
        prop_assert_eq!(rot.image, vec![m, n]);
        let orig = poincare_map(&vdp_original(p), &[m, n], 0.0, &cfg).unwrap();
        prop_assert!(dist(&orig.image, &[m, n]) <= 1e-9 * (1.0 + m.hypot(n)));
    }

    #[test]
    fn events_sit_on_the_switching_line(m in -4.0f64..4.0, n in -4.0f64..4.0, eps in 0.01f64..0.5) {
        prop_assume!(m.hypot(n) > 0.1);
        let cfg = IntegratorConfig::default();
        let traj = integrate(&vdp_original(VdpParams::nonsmooth(0.3, 0.8)), &[m, n], 0.0, TAU, eps, &cfg).unwrap();
        prop_assert!(!traj.events.is_empty());
        for ev in &traj.events {
            let i = traj.times.iter().position(|&t| t == ev.t).unwrap();
            let z = &traj.states[i];
            prop_assert!(z[0].abs() <= 1e-9 * (1.0 + z[1].abs()), "z1 = {:e} at t = {}", z[0], ev.t);
        }
    }
}

#[test]
fn original_and_rotated_flows_are_conjugate() {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let eps = rng.gen_range(0.01..0.3);
        let p = VdpParams::nonsmooth(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0));
        let z0 = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        for t1 in [1.3, TAU] {
            let z = flow(&vdp_original(p), &z0, 0.0, t1, eps, &cfg).unwrap();
            let x = flow(&vdp_rotated(p), &z0, 0.0, t1, eps, &cfg).unwrap();
            let zr = rotate(t1, [x[0], x[1]]);
            assert!(dist(&z, &zr) <= 1e-7, "{z:?} vs {zr:?}");
        }
    }
}

#[test]
fn step_halving_shows_fourth_order() {
    // Tolerances are opened up so every base step is taken as is.
    let sys = vdp_original(VdpParams::nonsmooth(0.2, 1.0));
    let (v, eps) = ([1.5, -0.5], 0.4);
    let cfg = |n: usize| IntegratorConfig {
        rtol: 1e6,
        atol: 1e6,
        ..IntegratorConfig::default().with_step(TAU / n as f64)
    };
    let reference = poincare_map(&sys, &v, eps, &cfg(8192)).unwrap().image;
    let steps = [16usize, 32, 64, 128];
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .map(|&n| {
            let img = poincare_map(&sys, &v, eps, &cfg(n)).unwrap().image;
            ((TAU / n as f64).ln(), dist(&img, &reference).ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 4.0).abs() <= 0.5, "slope {slope}");
}
