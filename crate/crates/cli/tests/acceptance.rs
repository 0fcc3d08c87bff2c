//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use periodic_averaging::averaging::{classify_zero, Classification, ClassifyTolerance};
use periodic_averaging::models::{
    g0_analytic, rotate, vdp_original, vdp_rotated, Model, Variant, VdpParams,
};
use periodic_averaging::ode::{flow, integrate, FloquetVerdict, IntegratorConfig};
use periodic_averaging::resonance::{
    amplitude_roots, critical_values, stability_tag, zero_from_amplitude,
};
use periodic_averaging::verify::{
    branch_seed, eps_sweep, map_contraction_rate, verify_branch, verify_model_branch, Branch,
    VerifyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const G0_AGREEMENT: f64 = 1e-9;
const FREE_RADIUS_TOL: f64 = 1e-8;
const FREE_AMPLITUDE_TOL: f64 = 0.1;
const CRITICAL_TOL: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-3;
const FIXED_POINT_TOL: f64 = 0.1;
const RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const SLOPE_RANGE: (f64, f64) = (0.7, 1.3);
const LINEARITY_TOL: f64 = 0.3;
const CONJUGACY_TOL: f64 = 1e-7;

const SWEEP: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn c1_g0_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let a = [-1.0, 0.0, 1.0][i % 3];
        let lambda = [0.0, 0.4, 1.5][(i / 3) % 3];
        let r = rng.gen_range(0.1..=4.0);
        let th = rng.gen_range(0.0..TAU);
        let (m, n) = (r * th.cos(), r * th.sin());
        let params = VdpParams::nonsmooth(a, lambda);
        let numeric = Model::Vdp(params).averaged_field().eval_g0_numeric(&[m, n]);
        let exact = g0_analytic(m, n, &params).map_err(|e| e.to_string())?;
        for k in 0..2 {
            worst = worst.max((numeric[k] - exact[k]).abs());
        }
    }
    check(
        worst <= G0_AGREEMENT,
        format!("max |quadrature - closed form| = {worst:.2e} (tol {G0_AGREEMENT:.0e})"),
    )
}

fn c2_free_oscillation() -> Verdict {
    let field = Model::Vdp(VdpParams::nonsmooth(0.0, 0.0)).averaged_field();
    let guesses = [
        [0.0, 2.0],
        [2.0, 0.0],
        [-1.5, 1.5],
        [1.0, -3.0],
        [-3.0, -1.0],
        [0.5, 2.6],
    ];
    let mut worst = 0.0f64;
    for g in &guesses {
        let z = field
            .find_zero(g, 1e-12, 100)
            .map_err(|e| format!("guess {g:?}: {e}"))?;
        worst = worst.max((z.v0[0].hypot(z.v0[1]) - 0.75 * PI).abs());
    }
    let sys = vdp_original(VdpParams::nonsmooth(0.0, 0.0));
    let traj = integrate(
        &sys,
        &[0.5, 0.0],
        0.0,
        200.0 * PI,
        0.05,
        &IntegratorConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let last = traj
        .times
        .iter()
        .position(|&t| t >= 198.0 * PI)
        .unwrap_or(0);
    let amp = traj.states[last..]
        .iter()
        .map(|s| s[0].abs())
        .fold(0.0, f64::max);
    let amp_err = (amp - 0.75 * PI).abs();
    check(
        worst <= FREE_RADIUS_TOL && amp_err <= FREE_AMPLITUDE_TOL,
        format!(
            "{} guesses, max radius error {worst:.2e} (tol {FREE_RADIUS_TOL:.0e}); simulated amplitude {amp:.5}, error {amp_err:.2e} (tol {FREE_AMPLITUDE_TOL})",
            guesses.len()
        ),
    )
}

fn c3_nonsmooth_critical() -> Verdict {
    let cv = critical_values(Variant::Nonsmooth).map_err(|e| e.to_string())?;
    let d_double = (cv.lambda_double - 3.0 * PI / 16.0).abs();
    let d_sep = (cv.lambda_sep - 9.0 * 3f64.sqrt() * PI / 64.0).abs();
    let d_amp = (cv.amplitude_double - 3.0 * PI / 8.0).abs();
    let references: Vec<String> = cv
        .reference_amplitude_double
        .iter()
        .map(|p| format!("vs {} = {:.6}: {:+.6}", p.label, p.value, p.difference))
        .collect();
    check(
        d_double <= CRITICAL_TOL && d_sep <= CRITICAL_TOL && d_amp <= CRITICAL_TOL,
        format!(
            "lambda_double err {d_double:.1e}, lambda_sep err {d_sep:.1e} (tol {CRITICAL_TOL:.0e}); double-point amplitude {:.10} (3pi/8 err {d_amp:.1e}), {}",
            cv.amplitude_double,
            references.join(", ")
        ),
    )
}

fn c4_classical_critical() -> Verdict {
    let cv = critical_values(Variant::Classical).map_err(|e| e.to_string())?;
    let errs = [
        (cv.amplitude_double - 2.0 / 3f64.sqrt()).abs(),
        (cv.lambda_double - 4.0 * 3f64.sqrt() / 9.0).abs(),
        (cv.lambda_sep - (32.0f64 / 27.0).sqrt()).abs(),
    ];
    check(
        errs.iter().all(|e| *e <= CRITICAL_TOL),
        format!(
            "A_double err {:.1e}, lambda_double err {:.1e}, lambda_sep err {:.1e} (tol {CRITICAL_TOL:.0e})",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn count(a: f64, lambda: f64) -> Result<usize, String> {
    Ok(amplitude_roots(a, lambda, Variant::Nonsmooth)
        .map_err(|e| e.to_string())?
        .roots
        .len())
}

fn c5_root_counts() -> Verdict {
    let at_zero = count(0.0, 0.4)?;
    let at_edges = (count(-2.0, 0.4)?, count(2.0, 0.4)?);
    let mut off = Vec::new();
    for i in 0..201 {
        let a = -2.0 + 4.0 * i as f64 / 200.0;
        let k = count(a, 1.5)?;
        if k != 1 {
            off.push((a, k));
        }
    }
    check(
        at_zero == 3 && at_edges == (1, 1) && off.is_empty(),
        format!(
            "lambda=0.4: {at_zero} roots at a=0, {}/{} at a=-2/2; lambda=1.5: {} of 201 grid points without exactly one root",
            at_edges.0,
            at_edges.1,
            off.len()
        ),
    )
}

fn c6_stability_tags() -> Verdict {
    let roots = amplitude_roots(0.0, 0.4, Variant::Nonsmooth)
        .map_err(|e| e.to_string())?
        .amplitudes();
    if roots.len() != 3 {
        return Err(format!("expected 3 roots, got {roots:?}"));
    }
    let expected = [0.511, 1.846, 2.705];
    let field = Model::Vdp(VdpParams::nonsmooth(0.0, 0.4)).averaged_field();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &amp) in roots.iter().enumerate() {
        ok &= (amp - expected[i]).abs() <= ROOT_TOL;
        let tag = stability_tag(amp, 0.0, Variant::Nonsmooth).map_err(|e| e.to_string())?;
        let (want_tag, want_class) = match i {
            0 => (
                !tag.stable && tag.trace > 0.0 && tag.det > 0.0,
                Classification::ExistenceOnly,
            ),
            1 => (
                !tag.stable && tag.det < 0.0,
                Classification::NonAsymptoticallyStable,
            ),
            _ => (tag.stable, Classification::UniqueAsymptoticallyStable),
        };
        let v = zero_from_amplitude(amp, 0.0, Variant::Nonsmooth);
        let j = field.g0_jacobian(&v).map_err(|e| e.to_string())?;
        let class = classify_zero(&j, &ClassifyTolerance::default());
        ok &= want_tag && class == want_class;
        parts.push(format!(
            "A={amp:.6} det={:+.3} trace={:+.3} stable={} class={class}",
            tag.det, tag.trace, tag.stable
        ));
    }
    check(
        ok,
        format!("{} (root tol {ROOT_TOL:.0e})", parts.join("; ")),
    )
}

fn c7_closes_the_loop() -> Verdict {
    let cfg = VerifyConfig::default();
    let start = Instant::now();
    let stable = verify_model_branch(
        &Model::Vdp(VdpParams::nonsmooth(0.0, 1.5)),
        0.05,
        Branch::Stable,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let t_stable = start.elapsed();
    let start = Instant::now();
    let saddle = verify_model_branch(
        &Model::Vdp(VdpParams::nonsmooth(0.0, 0.4)),
        0.05,
        Branch::Saddle,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let t_saddle = start.elapsed();

    let off = dist(&stable.v_eps, &[-3.3967, 0.0]);
    let stable_moduli: Vec<f64> = stable
        .floquet_multipliers
        .iter()
        .map(|m| m.modulus)
        .collect();
    let saddle_max = saddle
        .floquet_multipliers
        .iter()
        .map(|m| m.modulus)
        .fold(0.0, f64::max);
    let ok = off <= FIXED_POINT_TOL
        && stable_moduli.iter().all(|m| *m < 1.0)
        && stable.stability_verdict == FloquetVerdict::AsymptoticallyStable
        && saddle_max > 1.0
        && t_stable <= RUNTIME_LIMIT
        && t_saddle <= RUNTIME_LIMIT;
    check(
        ok,
        format!(
            "fixed point ({:.5}, {:.5}), distance {off:.2e} (tol {FIXED_POINT_TOL}); moduli {stable_moduli:.4?}; saddle max modulus {saddle_max:.4}; runtimes {:.2}s/{:.2}s (limit {}s)",
            stable.v_eps[0],
            stable.v_eps[1],
            t_stable.as_secs_f64(),
            t_saddle.as_secs_f64(),
            RUNTIME_LIMIT.as_secs()
        ),
    )
}

fn c8_convergence_sweep() -> Verdict {
    let model = Model::Vdp(VdpParams::nonsmooth(0.0, 1.5));
    let seed = branch_seed(&model, Branch::Stable).map_err(|e| e.to_string())?;
    let sweep =
        eps_sweep(&model, &seed, &SWEEP, &VerifyConfig::default()).map_err(|e| e.to_string())?;
    let distances: Vec<f64> = sweep.entries.iter().filter_map(|e| e.distance).collect();
    let slope = sweep.slope.unwrap_or(f64::NAN);
    check(
        sweep.distances_decreasing() && (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope),
        format!("distances {distances:.5?}; log-log slope {slope:.4} (range {SLOPE_RANGE:?})"),
    )
}

fn c9_contraction() -> Verdict {
    let model = Model::Vdp(VdpParams::nonsmooth(0.0, 1.5));
    let cfg = VerifyConfig::default();
    let seed = branch_seed(&model, Branch::Stable).map_err(|e| e.to_string())?;
    let mut rates = Vec::new();
    for eps in SWEEP {
        let r = verify_branch(&model, eps, &seed, &cfg).map_err(|e| e.to_string())?;
        rates.push(
            map_contraction_rate(&model, eps, &r.v_eps, 0.01, 200, &cfg.integrator)
                .map_err(|e| e.to_string())?,
        );
    }
    // Least-squares fit of 1 - rho = c eps through the origin.
    let c_fit = rates.iter().map(|r| (1.0 - r.rho) * r.eps).sum::<f64>()
        / rates.iter().map(|r| r.eps * r.eps).sum::<f64>();
    let worst = rates
        .iter()
        .map(|r| (r.c - c_fit).abs() / c_fit)
        .fold(0.0, f64::max);
    let rho: Vec<f64> = rates.iter().map(|r| r.rho).collect();
    check(
        rates.iter().all(|r| r.rho < 1.0) && c_fit > 0.0 && worst <= LINEARITY_TOL,
        format!(
            "rho {rho:.4?}; (1-rho)/eps within {:.1}% of fitted {c_fit:.4} (tol {:.0}%)",
            100.0 * worst,
            100.0 * LINEARITY_TOL
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_pavg"))
        .args(args)
        .env_remove("PAVG_OUT_DIR")
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("pavg {args:?} exited with {status}"))
    }
}

fn c10_conjugacy_and_determinism() -> Verdict {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let eps = rng.gen_range(0.01..0.3);
        let p = VdpParams::nonsmooth(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0));
        let z0 = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let z = flow(&vdp_original(p), &z0, 0.0, TAU, eps, &cfg).map_err(|e| e.to_string())?;
        let x = flow(&vdp_rotated(p), &z0, 0.0, TAU, eps, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(dist(&z, &rotate(TAU, [x[0], x[1]])));
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"model": "nonsmooth-vdp", "lambda": 0.4, "a_min": -2, "a_max": 2, "n": 201}"#,
    )
    .map_err(|e| e.to_string())?;
    let outs = [dir.path().join("first.csv"), dir.path().join("second.csv")];
    for out in &outs {
        run_cli(&[
            "resonance",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])?;
    }
    let first = std::fs::read(&outs[0]).map_err(|e| e.to_string())?;
    let second = std::fs::read(&outs[1]).map_err(|e| e.to_string())?;
    let identical = !first.is_empty() && first == second;
    check(
        worst <= CONJUGACY_TOL && identical,
        format!(
            "max original/rotated gap over 20 initial conditions {worst:.2e} (tol {CONJUGACY_TOL:.0e}); two CLI runs byte-identical: {identical} ({} bytes)",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Verdict); 10] = [
        (1, c1_g0_agreement),
        (2, c2_free_oscillation),
        (3, c3_nonsmooth_critical),
        (4, c4_classical_critical),
        (5, c5_root_counts),
        (6, c6_stability_tags),
        (7, c7_closes_the_loop),
        (8, c8_convergence_sweep),
        (9, c9_contraction),
        (10, c10_conjugacy_and_determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, f) in criteria {
        match f() {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        10 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
