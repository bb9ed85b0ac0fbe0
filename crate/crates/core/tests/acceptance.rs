//! Acceptance suite: ten numbered criteria pinning the library's headline
//! guarantees — closed-form thresholds, the theta/M-matrix machinery, the
//! spectral and deterministic-limit oracles, the Poisson system, and three
//! Monte Carlo ensembles (extinction, permanence, ergodic consistency).
//!
//! Each test prints one `[PASS] criterion N: ...` line (visible under
//! `cargo test --test acceptance -- --nocapture`); a failed assertion
//! prints the matching `[FAIL]` line before panicking. The ensemble
//! criteria are statistical but fully seeded, so outcomes are
//! reproducible bit-for-bit.

// Indexed loops here intentionally mirror matrix notation.
#![allow(clippy::needless_range_loop)]

use std::sync::OnceLock;

use episwitch::thresholds::{find_theta, solve_poisson_system};
use episwitch::{
    classify, run_ensemble, simulate, Classification, EnsembleStats, Graph, Model, NoiseKind,
    RateMatrix, RegimeSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn check(criterion: u32, passed: bool, summary: &str) {
    let tag = if passed { "[PASS]" } else { "[FAIL]" };
    println!("{tag} criterion {criterion}: {summary}");
    assert!(passed, "criterion {criterion} failed: {summary}");
}

/// Scenario 1a: two regular graphs (d = 10 and d = 25 on 100 nodes),
/// beta = (0.01, 0.07), delta = (1, 1), M = (0.1, 0.05),
/// q12 = 0.2, q21 = 0.7. Known: sum_pi_alpha = -4.48359375/9.
fn scenario_1a() -> Model {
    Model::new(
        vec![
            RegimeSpec::new(0.01, 1.0, 0.10, Graph::regular(100, 10).unwrap()).unwrap(),
            RegimeSpec::new(0.07, 1.0, 0.05, Graph::regular(100, 25).unwrap()).unwrap(),
        ],
        RateMatrix::two_state(0.2, 0.7).unwrap(),
        NoiseKind::Linear,
    )
    .unwrap()
}

/// Scenario 1b: same graphs, beta = (0.09, 0.10), delta = (1, 1),
/// M = (0.15, 0.08), q12 = 1, q21 = 0.3. Known:
/// sum_pi_alpha_bar = 13.2390625/13, zeta = that / 2.5.
fn scenario_1b() -> Model {
    Model::new(
        vec![
            RegimeSpec::new(0.09, 1.0, 0.15, Graph::regular(100, 10).unwrap()).unwrap(),
            RegimeSpec::new(0.10, 1.0, 0.08, Graph::regular(100, 25).unwrap()).unwrap(),
        ],
        RateMatrix::two_state(1.0, 0.3).unwrap(),
        NoiseKind::Linear,
    )
    .unwrap()
}

/// Criterion 4/5/6 ensembles are shared so the clamp criterion can reuse
/// them without paying for the runs twice.
fn extinction_stats() -> &'static EnsembleStats {
    static STATS: OnceLock<EnsembleStats> = OnceLock::new();
    STATS.get_or_init(|| {
        run_ensemble(&scenario_1a(), &vec![0.4; 100], 0, 60.0, 1e-3, 50, 101)
            .expect("extinction ensemble")
    })
}

fn permanence_stats() -> &'static EnsembleStats {
    static STATS: OnceLock<EnsembleStats> = OnceLock::new();
    STATS.get_or_init(|| {
        run_ensemble(&scenario_1b(), &vec![0.4; 100], 0, 100.0, 1e-3, 50, 102)
            .expect("permanence ensemble")
    })
}

#[test]
fn criterion_01_threshold_reproduction() {
    let a = classify(&scenario_1a()).unwrap();
    let b = classify(&scenario_1b()).unwrap();
    // Pinned to 4 decimal places: -0.4982 and 1.0184.
    let sum_alpha_4dp = (a.sum_alpha * 1e4).round() / 1e4;
    let sum_alpha_bar_4dp = (b.sum_alpha_bar * 1e4).round() / 1e4;
    let ok = sum_alpha_4dp == -0.4982
        && sum_alpha_bar_4dp == 1.0184
        && a.classification == Classification::ExtinctAs
        && b.classification == Classification::Permanent;
    check(
        1,
        ok,
        &format!(
            "sum_pi_alpha = {:.6} (want -0.4982 at 4 dp, {}), sum_pi_alpha_bar = {:.6} \
             (want 1.0184 at 4 dp, {})",
            a.sum_alpha, a.classification, b.sum_alpha_bar, b.classification
        ),
    );
}

#[test]
fn criterion_02_stationary_distributions() {
    // Two-state generators with rates (q12, q21) and their exact stationary
    // laws pi = (q21, q12) / (q12 + q21).
    let cases = [
        (0.2, 0.7, [7.0 / 9.0, 2.0 / 9.0]),
        (1.0, 0.3, [3.0 / 13.0, 10.0 / 13.0]),
        (0.4, 0.8, [2.0 / 3.0, 1.0 / 3.0]),
        (0.1, 0.15, [3.0 / 5.0, 2.0 / 5.0]),
    ];
    let mut worst = 0.0f64;
    for (q12, q21, want) in cases {
        let pi = RateMatrix::two_state(q12, q21)
            .unwrap()
            .stationary()
            .unwrap();
        for s in 0..2 {
            worst = worst.max((pi.prob(s) - want[s]).abs());
        }
    }
    check(
        2,
        worst <= 1e-10,
        &format!("4 two-state generators, max |pi - exact| = {worst:.3e} (tol 1e-10)"),
    );
}

#[test]
fn criterion_03_theta_machinery() {
    // Scenario-1b exponents, frozen from the closed forms:
    // alpha_bar = (-0.1703125, 1.375), K = (0.0703125, 0.125).
    let q = RateMatrix::two_state(1.0, 0.3).unwrap();
    let theta_1b = find_theta(&q, &[-0.1703125, 1.375], &[0.0703125, 0.125]);
    let positive_ok = matches!(theta_1b, Some(t) if t > 0.0 && t < 1.0);

    // All-negative alpha_bar admits no qualifying theta.
    let none_case = find_theta(&q, &[-1.0, -0.5], &[1.0, 1.0]);

    // Scalar case alpha_bar = 1, K = 2: T(theta) = theta - 2 theta^2 > 0
    // exactly on (0, 1/2), so the supremum search lands just below 1/2.
    let q1 = RateMatrix::new(&[vec![0.0]]).unwrap();
    let scalar = find_theta(&q1, &[1.0], &[2.0]).unwrap();

    let ok = positive_ok && none_case.is_none() && (0.4999..=0.5).contains(&scalar);
    check(
        3,
        ok,
        &format!(
            "theta(scenario 1b) = {theta_1b:?} (want positive), theta(all-negative) = \
             {none_case:?} (want none), theta(scalar 1,2) = {scalar:.6} (want in [0.4999, 0.5])"
        ),
    );
}

#[test]
fn criterion_04_extinction_ensemble() {
    let stats = extinction_stats();
    let median = stats.median_lyap();
    let small_final = stats.runs.iter().filter(|r| r.final_norm < 1e-2).count();
    let frac = small_final as f64 / stats.n_runs as f64;
    let ok = median < 0.0 && frac >= 0.90;
    check(
        4,
        ok,
        &format!(
            "N=100, dt=1e-3, T=60, 50 runs: median lyap slope = {median:.4} (want < 0), \
             final |x| < 1e-2 in {frac:.0}% of runs (want >= 90%)",
            frac = frac * 100.0
        ),
    );
}

#[test]
fn criterion_05_permanence_ensemble() {
    let stats = permanence_stats();
    let survival = stats.survival_fraction(0.05, 100.0).unwrap();
    let mean_avg = stats.mean_time_average();
    // zeta = (13.2390625/13) / 2.5 = 0.40736 (5 dp); bound is 0.8 * zeta.
    let floor = 0.8 * 0.40736;
    let ok = survival.fraction >= 0.95 && mean_avg >= floor;
    check(
        5,
        ok,
        &format!(
            "T=100, 50 runs: P(|x(T)| >= 0.05) = {:.3} (want >= 0.95), mean time-avg |x| \
             = {mean_avg:.4} (want >= {floor:.4})",
            survival.fraction
        ),
    );
}

#[test]
fn criterion_06_positivity_guard() {
    let worst = extinction_stats()
        .max_clamp_ratio()
        .max(permanence_stats().max_clamp_ratio());
    check(
        6,
        worst <= 1e-4,
        &format!("max clamp ratio across criteria 4-5 runs = {worst:.3e} (tol 1e-4)"),
    );
}

#[test]
fn criterion_07_spectral_oracle() {
    let tol = episwitch::graph::SPECTRAL_TOL;
    let regular = Graph::regular(12, 4)
        .unwrap()
        .spectral_radius(tol)
        .unwrap()
        .0;

    // Complete graph on 7 nodes: lambda1 = 6.
    let mut edges = Vec::new();
    for i in 0..7usize {
        for j in i + 1..7 {
            edges.push((i, j));
        }
    }
    let complete = Graph::from_edge_list(7, &edges)
        .unwrap()
        .spectral_radius(tol)
        .unwrap()
        .0;

    // Path on 3 nodes: lambda1 = sqrt(2).
    let path = Graph::from_edge_list(3, &[(0, 1), (1, 2)])
        .unwrap()
        .spectral_radius(tol)
        .unwrap()
        .0;

    let errs = [
        (regular - 4.0).abs(),
        (complete - 6.0).abs(),
        (path - 2.0f64.sqrt()).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0f64, f64::max);
    check(
        7,
        worst <= 1e-8,
        &format!(
            "lambda1: regular(12,4) = {regular:.10} (want 4), K7 = {complete:.10} (want 6), \
             path3 = {path:.10} (want sqrt 2); max error = {worst:.3e} (tol 1e-8)"
        ),
    );
}

#[test]
fn criterion_08_deterministic_limit() {
    // One regime, zero noise: the SDE collapses to the mean-field ODE and
    // Euler-Maruyama collapses to explicit Euler. Compare against an
    // independent dense-matrix Euler integration, step by step.
    let n = 20;
    let graph = Graph::regular(n, 4).unwrap();
    let model = Model::new(
        vec![RegimeSpec::new(0.1, 1.0, 0.0, graph.clone()).unwrap()],
        RateMatrix::new(&[vec![0.0]]).unwrap(),
        NoiseKind::Linear,
    )
    .unwrap();
    let (beta, delta) = (0.1f64, 1.0f64);
    let (horizon, dt) = (10.0f64, 1e-3f64);
    let steps = (horizon / dt).round() as usize;
    let x0 = vec![0.3; n];

    let traj = simulate(&model, &x0, 0, horizon, dt, 7).unwrap();

    // Dense 0/1 adjacency, rebuilt from the edge list.
    let mut a = vec![vec![0.0f64; n]; n];
    for (i, j) in graph.edges() {
        a[i as usize][j as usize] = 1.0;
        a[j as usize][i as usize] = 1.0;
    }
    let mut x = x0.clone();
    let mut worst = 0.0f64;
    for k in 0..steps {
        // Mirror the integrator's grid bookkeeping: the last step lands
        // exactly on the horizon.
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps {
            horizon
        } else {
            (k + 1) as f64 * dt
        };
        let h = t1 - t0;
        let prev = x.clone();
        for i in 0..n {
            let mut pressure = 0.0;
            for j in 0..n {
                pressure += a[i][j] * prev[j];
            }
            x[i] += (beta * pressure * (1.0 - prev[i]) - delta * prev[i]) * h;
        }
        for i in 0..n {
            worst = worst.max((traj.x_at(k + 1)[i] - x[i]).abs());
        }
    }
    check(
        8,
        worst < 1e-12,
        &format!(
            "zero-noise single-regime trajectory vs dense explicit Euler over {steps} steps: \
             max per-step deviation = {worst:.3e} (tol 1e-12)"
        ),
    );
}

#[test]
fn criterion_09_ergodic_consistency() {
    // A permanent switched model: scenario-1b graphs and rates under the
    // chain q12 = 1, q21 = 1.5, so pi = (0.6, 0.4) and
    // sum_pi_alpha_bar = 0.4478125 > 0. The chain mixes in O(1) time, so
    // each 100-unit quarter window averages over ~100 regime sojourns and
    // the tail statistics are stable at this ensemble size.
    let model = Model::new(
        vec![
            RegimeSpec::new(0.09, 1.0, 0.15, Graph::regular(100, 10).unwrap()).unwrap(),
            RegimeSpec::new(0.10, 1.0, 0.08, Graph::regular(100, 25).unwrap()).unwrap(),
        ],
        RateMatrix::two_state(1.0, 1.5).unwrap(),
        NoiseKind::Linear,
    )
    .unwrap();
    let report = classify(&model).unwrap();
    assert_eq!(report.classification, Classification::Permanent);
    let pi = report.pi.clone();

    let stats = run_ensemble(&model, &vec![0.4; 100], 0, 400.0, 1e-3, 32, 904).unwrap();

    let q3 = stats.runs.iter().map(|r| r.quarter3_average).sum::<f64>() / stats.n_runs as f64;
    let q4 = stats.runs.iter().map(|r| r.quarter4_average).sum::<f64>() / stats.n_runs as f64;
    let rel = (q3 - q4).abs() / q3.max(q4);

    let marginal = stats.env_marginal();
    let se = stats.env_marginal_se();
    let env_ok = (0..2).all(|s| (marginal[s] - pi[s]).abs() <= 3.0 * se[s]);

    let ok = rel < 0.05 && env_ok;
    check(
        9,
        ok,
        &format!(
            "T=400, 32 runs: quarter averages {q3:.4} vs {q4:.4}, relative gap {rel:.4} \
             (want < 0.05); occupation env marginal = ({:.3}, {:.3}) vs pi = ({:.1}, {:.1}) \
             within 3 SE = ({:.3}, {:.3})",
            marginal[0],
            marginal[1],
            pi[0],
            pi[1],
            3.0 * se[0],
            3.0 * se[1]
        ),
    );
}

#[test]
fn criterion_10_poisson_residual() {
    let mut rng = ChaCha12Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.gen_range(2..=5usize);
        // All off-diagonal rates positive, so the chain is irreducible.
        let mut rows = vec![vec![0.0f64; m]; m];
        for w in 0..m {
            let mut total = 0.0;
            for z in 0..m {
                if z != w {
                    let r = rng.gen_range(0.1..2.0);
                    rows[w][z] = r;
                    total += r;
                }
            }
            rows[w][w] = -total;
        }
        let q = RateMatrix::new(&rows).unwrap();
        let pi = q.stationary().unwrap();
        let a_tilde: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();

        let sol = solve_poisson_system(&q, &a_tilde, &pi).unwrap();
        // Recompute the residual independently of the solver's own report:
        // max_s |a_tilde_s - (Q omega)_s - chi|.
        for s in 0..m {
            let q_omega: f64 = (0..m).map(|z| q.rate(s, z) * sol.omega[z]).sum();
            worst = worst.max((a_tilde[s] - q_omega - sol.chi).abs());
        }
    }
    check(
        10,
        worst <= 1e-9,
        &format!("100 random irreducible 2-5 state systems: max residual = {worst:.3e} (tol 1e-9)"),
    );
}
