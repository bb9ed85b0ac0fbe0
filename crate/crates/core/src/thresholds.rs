//! Closed-form threshold analysis of the switched model.
//!
//! Per regime `s` (with `lambda_1(s)` the adjacency spectral radius and
//! `d_min(s)` the minimum degree):
//!
//! ```text
//! K(s)           = M(s)^2 lambda_1(s)^2 / 32          (noise penalty)
//! alpha(s)       = -delta(s) + beta(s) lambda_1(s) + K(s)
//! alpha_bar(s)   = -delta(s) + beta(s) d_min(s)    - K(s)
//! alpha_tilde(s) =  beta(s) d_min(s) - N delta(s) - N M(s)^2 lambda_1(s)^2 / 2
//! ```
//!
//! The pi-weighted signs decide the fate of the epidemic: `sum_s pi_s
//! alpha(s) < 0` forces almost-sure extinction; `sum_s pi_s alpha_bar(s) >
//! 0` (plus a one-jump reachable state) gives stochastic permanence,
//! certified constructively by a `theta` for which `T(theta) =
//! diag(xi_s(theta)) - Q` is a nonsingular M-matrix; `sum_s pi_s
//! alpha_tilde(s) > 0` upgrades to a unique stationary law, with the
//! accompanying Poisson system `alpha_tilde - Q omega = (pi^T alpha_tilde) 1`
//! supplying the construction's weights. All sufficient, none necessary:
//! when no sign fires the classifier says so instead of guessing.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dynamics::Model;
use crate::graph::{GraphError, SPECTRAL_TOL};
use crate::linalg::{leading_minors_positive, solve_dense};
use crate::switching::{RateMatrix, StationaryDistribution, SwitchingError};

/// Off-diagonal entries above this are a Z-matrix violation.
const Z_MATRIX_TOL: f64 = 1e-12;

/// Geometric theta grid: `2^-k` for `k = 1..=THETA_GRID_DEPTH`.
const THETA_GRID_DEPTH: i32 = 40;

/// Bisection refinement stops at this relative interval width.
const THETA_REL_WIDTH: f64 = 1e-6;

/// Maximum acceptable Poisson-system residual.
const POISSON_RESIDUAL_TOL: f64 = 1e-9;

/// Errors from threshold computations.
#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("expected {expected} per-state values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("regimes use differing graphs; the fixed-graph variant is undefined")]
    DifferingGraphs,
    #[error("Poisson system solve failed: leading block is numerically singular")]
    PoissonSingular,
    #[error("Poisson residual {residual:e} exceeds {POISSON_RESIDUAL_TOL:e}")]
    PoissonResidual { residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Switching(#[from] SwitchingError),
}

/// Noise penalty `K = M^2 lambda_1^2 / 32`.
#[must_use]
pub fn noise_penalty(noise_bound: f64, lambda1: f64) -> f64 {
    let ml = noise_bound * lambda1;
    ml * ml / 32.0
}

/// Extinction exponent `alpha = -delta + beta lambda_1 + K`.
#[must_use]
pub fn extinction_exponent(beta: f64, delta: f64, noise_bound: f64, lambda1: f64) -> f64 {
    -delta + beta * lambda1 + noise_penalty(noise_bound, lambda1)
}

/// Permanence exponent `alpha_bar = -delta + beta d_min - K`.
#[must_use]
pub fn permanence_exponent(
    beta: f64,
    delta: f64,
    noise_bound: f64,
    lambda1: f64,
    d_min: f64,
) -> f64 {
    -delta + beta * d_min - noise_penalty(noise_bound, lambda1)
}

/// Fixed-graph permanence exponent `-delta + beta lambda_1 - K` (replaces
/// `d_min` by `lambda_1`; meaningful when all regimes share one graph).
#[must_use]
pub fn fixed_graph_exponent(beta: f64, delta: f64, noise_bound: f64, lambda1: f64) -> f64 {
    -delta + beta * lambda1 - noise_penalty(noise_bound, lambda1)
}

/// Ergodicity exponent `alpha_tilde = beta d_min - N delta - N M^2
/// lambda_1^2 / 2`.
#[must_use]
pub fn ergodicity_exponent(
    beta: f64,
    delta: f64,
    noise_bound: f64,
    lambda1: f64,
    d_min: f64,
    n: usize,
) -> f64 {
    let ml = noise_bound * lambda1;
    beta * d_min - n as f64 * delta - n as f64 * ml * ml / 2.0
}

/// Stationary-weighted sum `sum_s pi_s value_s`.
pub fn weighted_sum(pi: &StationaryDistribution, values: &[f64]) -> Result<f64, ThresholdError> {
    if values.len() != pi.len() {
        return Err(ThresholdError::LengthMismatch {
            expected: pi.len(),
            got: values.len(),
        });
    }
    Ok(pi.as_slice().iter().zip(values).map(|(p, v)| p * v).sum())
}

/// Whether the square row-major matrix is a nonsingular M-matrix: a
/// Z-matrix (off-diagonals `<= 1e-12`) whose leading principal minors are
/// all strictly positive (equivalently, some `z >> 0` has `Tz >> 0`).
#[must_use]
pub fn is_nonsingular_m_matrix(t: &[f64], m: usize) -> bool {
    debug_assert_eq!(t.len(), m * m);
    for w in 0..m {
        for z in 0..m {
            if w != z && t[w * m + z] > Z_MATRIX_TOL {
                return false;
            }
        }
    }
    leading_minors_positive(t.to_vec(), m)
}

/// The permanence test matrix `T(theta) = diag(xi_s(theta)) - Q` with
/// `xi_s(theta) = theta alpha_bar(s) - theta^2 K(s)`, row-major.
///
/// Panics if `theta` is outside `(0, 1)` or the slices disagree with `q`.
#[must_use]
pub fn theta_matrix(
    q: &RateMatrix,
    alpha_bar: &[f64],
    noise_penalty: &[f64],
    theta: f64,
) -> Vec<f64> {
    assert!(theta > 0.0 && theta < 1.0, "theta must lie in (0, 1)");
    let m = q.state_count();
    assert_eq!(alpha_bar.len(), m, "alpha_bar length");
    assert_eq!(noise_penalty.len(), m, "noise penalty length");
    let mut t = vec![0.0; m * m];
    for w in 0..m {
        for z in 0..m {
            t[w * m + z] = -q.rate(w, z);
        }
        let xi = theta * alpha_bar[w] - theta * theta * noise_penalty[w];
        t[w * m + w] += xi;
    }
    t
}

/// Searches for the largest `theta in (0,1)` making `T(theta)` a
/// nonsingular M-matrix: geometric grid `theta = 2^-k`, `k = 1..=40`, then
/// bisection refinement of the first qualifying grid point up towards the
/// first failure (relative width `1e-6`).
///
/// Returns `None` when the sufficient conditions can't hold: no one-jump
/// reachable state, nonpositive `sum_s pi_s alpha_bar(s)`, or no qualifying
/// grid point.
#[must_use]
pub fn find_theta(q: &RateMatrix, alpha_bar: &[f64], noise_penalty: &[f64]) -> Option<f64> {
    let m = q.state_count();
    assert_eq!(alpha_bar.len(), m, "alpha_bar length");
    assert_eq!(noise_penalty.len(), m, "noise penalty length");
    q.reachable_state()?;
    let pi = q.stationary().ok()?;
    let weighted = weighted_sum(&pi, alpha_bar).ok()?;
    if weighted <= 0.0 {
        return None;
    }
    let qualifies =
        |theta: f64| is_nonsingular_m_matrix(&theta_matrix(q, alpha_bar, noise_penalty, theta), m);
    let mut lo = (1..=THETA_GRID_DEPTH)
        .map(|k| 2f64.powi(-k))
        .find(|&theta| qualifies(theta))?;
    // The next grid point up failed (or is the open boundary theta = 1);
    // bisect between them. The qualifying set is an interval (0, theta*),
    // so bisection is sound.
    let mut hi = (2.0 * lo).min(1.0);
    while (hi - lo) / lo > THETA_REL_WIDTH {
        let mid = 0.5 * (lo + hi);
        if qualifies(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// The time-average lower bound `zeta = (sum_s pi_s alpha_bar(s)) / K_hat`
/// with `K_hat = max_s beta(s) lambda_1(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeAverageBound {
    /// The bound itself; 0 when vacuous.
    pub zeta: f64,
    /// Set when `sum_s pi_s alpha_bar(s) <= 0` (or `K_hat <= 0`), i.e. the
    /// bound carries no information.
    pub vacuous: bool,
}

/// Computes the time-average bound from the weighted permanence exponent
/// and `K_hat`.
#[must_use]
pub fn time_average_bound(sum_alpha_bar: f64, k_hat: f64) -> TimeAverageBound {
    if sum_alpha_bar > 0.0 && k_hat > 0.0 {
        TimeAverageBound {
            zeta: sum_alpha_bar / k_hat,
            vacuous: false,
        }
    } else {
        TimeAverageBound {
            zeta: 0.0,
            vacuous: true,
        }
    }
}

/// Solution of the Poisson system `alpha_tilde - Q omega = (pi^T
/// alpha_tilde) 1` under the normalization `omega_m = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonSolution {
    /// Per-state weights, last entry pinned to 0.
    pub omega: Vec<f64>,
    /// The weighted mean `pi^T alpha_tilde`.
    pub chi: f64,
    /// Achieved residual `max_s |alpha_tilde_s - (Q omega)_s - chi|`.
    pub residual: f64,
}

impl PoissonSolution {
    /// `omega_bar = max(0, -min_s omega_s) + 1`, making every
    /// `omega_s + omega_bar` strictly positive.
    #[must_use]
    pub fn omega_bar(&self) -> f64 {
        let min = self.omega.iter().copied().fold(f64::INFINITY, f64::min);
        (-min).max(0.0) + 1.0
    }
}

/// Solves the Poisson system by eliminating the redundant last equation:
/// the leading `(m-1) x (m-1)` block of `Q` is nonsingular for irreducible
/// `Q`, and `omega_m = 0` removes the null direction.
pub fn solve_poisson_system(
    q: &RateMatrix,
    a_tilde: &[f64],
    pi: &StationaryDistribution,
) -> Result<PoissonSolution, ThresholdError> {
    let m = q.state_count();
    if a_tilde.len() != m {
        return Err(ThresholdError::LengthMismatch {
            expected: m,
            got: a_tilde.len(),
        });
    }
    let chi = weighted_sum(pi, a_tilde)?;
    let mut omega = vec![0.0; m];
    if m > 1 {
        let k = m - 1;
        let mut block = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for w in 0..k {
            for z in 0..k {
                block[w * k + z] = q.rate(w, z);
            }
            rhs[w] = a_tilde[w] - chi;
        }
        let head = solve_dense(block, rhs).ok_or(ThresholdError::PoissonSingular)?;
        omega[..k].copy_from_slice(&head);
    }
    let mut residual = 0.0f64;
    for w in 0..m {
        let q_omega: f64 = (0..m).map(|z| q.rate(w, z) * omega[z]).sum();
        residual = residual.max((a_tilde[w] - q_omega - chi).abs());
    }
    if residual > POISSON_RESIDUAL_TOL {
        return Err(ThresholdError::PoissonResidual { residual });
    }
    Ok(PoissonSolution {
        omega,
        chi,
        residual,
    })
}

/// Verdict of the sufficient-condition classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `sum pi alpha_tilde > 0`: unique stationary law, ergodic averages.
    Ergodic,
    /// Assumption-1 state exists and `sum pi alpha_bar > 0`.
    Permanent,
    /// `sum pi alpha < 0`: almost-sure extinction.
    ExtinctAs,
    /// No sufficient condition fired.
    Indeterminate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Classification::Ergodic => "ergodic",
            Classification::Permanent => "permanent",
            Classification::ExtinctAs => "extinct_as",
            Classification::Indeterminate => "indeterminate",
        };
        f.write_str(name)
    }
}

fn ser_state_1based<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(idx) => s.serialize_some(&(idx + 1)),
        None => s.serialize_none(),
    }
}

/// Everything the threshold analysis produces for one model. Arrays are in
/// state order; scalar state numbers are 1-based in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Number of chain states `m`.
    pub states: usize,
    /// Number of nodes `N`.
    pub nodes: usize,
    /// Spectral radius `lambda_1(s)` per state.
    pub lambda1: Vec<f64>,
    /// Minimum degree `d_min(s)` per state.
    pub min_degree: Vec<usize>,
    /// Stationary distribution of the chain.
    pub pi: Vec<f64>,
    /// Noise penalty `K(s)` per state.
    pub k: Vec<f64>,
    /// Extinction exponent `alpha(s)` per state.
    pub alpha: Vec<f64>,
    /// Permanence exponent `alpha_bar(s)` per state.
    pub alpha_bar: Vec<f64>,
    /// Fixed-graph variant (present only when all regimes share one graph).
    pub alpha_bar_fixed: Option<Vec<f64>>,
    /// Ergodicity exponent `alpha_tilde(s)` per state.
    pub alpha_tilde: Vec<f64>,
    /// Set when regimes use differing graphs; `alpha_tilde(s)` then uses
    /// each state's own `lambda_1(s)` and should be read with care.
    pub graphs_differ: bool,
    /// `sum_s pi_s alpha(s)`.
    pub sum_alpha: f64,
    /// `sum_s pi_s alpha_bar(s)`.
    pub sum_alpha_bar: f64,
    /// `sum_s pi_s alpha_tilde(s)`.
    pub sum_alpha_tilde: f64,
    /// Lowest state reachable in one jump from everywhere (Assumption 1),
    /// serialized 1-based.
    #[serde(serialize_with = "ser_state_1based")]
    pub reachable_state: Option<usize>,
    /// Largest theta certifying the M-matrix condition, when found.
    pub theta_star: Option<f64>,
    /// Time-average lower bound, when informative.
    pub zeta: Option<f64>,
    /// Poisson-system weights (normalization `omega_m = 0`).
    pub omega: Vec<f64>,
    /// Achieved Poisson residual.
    pub poisson_residual: f64,
    /// The verdict.
    pub classification: Classification,
    /// Human-readable statement of the condition that fired (or didn't).
    pub trigger: String,
}

/// Runs the full closed-form analysis: spectral statistics per regime, all
/// exponents and weighted sums, the theta search, the time-average bound,
/// the Poisson system, and the final classification.
pub fn classify(model: &Model) -> Result<ThresholdReport, ThresholdError> {
    let m = model.state_count();
    let n = model.node_count();
    let q = model.switching();
    let pi = q.stationary()?;

    let mut lambda1 = Vec::with_capacity(m);
    let mut min_degree = Vec::with_capacity(m);
    for regime in model.regimes() {
        let (lambda, _) = regime.graph().spectral_radius(SPECTRAL_TOL)?;
        lambda1.push(lambda);
        min_degree.push(regime.graph().min_degree());
    }

    let k: Vec<f64> = model
        .regimes()
        .iter()
        .zip(&lambda1)
        .map(|(r, &l)| noise_penalty(r.noise_bound(), l))
        .collect();
    let alpha: Vec<f64> = model
        .regimes()
        .iter()
        .zip(&lambda1)
        .map(|(r, &l)| extinction_exponent(r.beta(), r.delta(), r.noise_bound(), l))
        .collect();
    let alpha_bar: Vec<f64> = model
        .regimes()
        .iter()
        .zip(lambda1.iter().zip(&min_degree))
        .map(|(r, (&l, &d))| permanence_exponent(r.beta(), r.delta(), r.noise_bound(), l, d as f64))
        .collect();
    let alpha_tilde: Vec<f64> = model
        .regimes()
        .iter()
        .zip(lambda1.iter().zip(&min_degree))
        .map(|(r, (&l, &d))| {
            ergodicity_exponent(r.beta(), r.delta(), r.noise_bound(), l, d as f64, n)
        })
        .collect();
    let single_graph = model.single_graph();
    let alpha_bar_fixed = single_graph.then(|| {
        model
            .regimes()
            .iter()
            .zip(&lambda1)
            .map(|(r, &l)| fixed_graph_exponent(r.beta(), r.delta(), r.noise_bound(), l))
            .collect::<Vec<f64>>()
    });

    let sum_alpha = weighted_sum(&pi, &alpha)?;
    let sum_alpha_bar = weighted_sum(&pi, &alpha_bar)?;
    let sum_alpha_tilde = weighted_sum(&pi, &alpha_tilde)?;

    let reachable_state = q.reachable_state();
    let theta_star = find_theta(q, &alpha_bar, &k);
    let k_hat = model
        .regimes()
        .iter()
        .zip(&lambda1)
        .map(|(r, &l)| r.beta() * l)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = time_average_bound(sum_alpha_bar, k_hat);
    let poisson = solve_poisson_system(q, &alpha_tilde, &pi)?;

    let (classification, trigger) = if sum_alpha_tilde > 0.0 {
        (
            Classification::Ergodic,
            format!("sum_pi_alpha_tilde = {sum_alpha_tilde:.6} > 0 (unique stationary law)"),
        )
    } else if reachable_state.is_some() && sum_alpha_bar > 0.0 {
        (
            Classification::Permanent,
            format!(
                "one-jump reachable state {} and sum_pi_alpha_bar = {sum_alpha_bar:.6} > 0",
                reachable_state.unwrap() + 1
            ),
        )
    } else if sum_alpha < 0.0 {
        (
            Classification::ExtinctAs,
            format!("sum_pi_alpha = {sum_alpha:.6} < 0 (almost-sure extinction)"),
        )
    } else {
        (
            Classification::Indeterminate,
            format!(
                "no sufficient condition fired: sum_pi_alpha = {sum_alpha:.6} >= 0, \
                 sum_pi_alpha_bar = {sum_alpha_bar:.6} (reachable state: {}), \
                 sum_pi_alpha_tilde = {sum_alpha_tilde:.6} <= 0",
                reachable_state.map_or("none".to_string(), |s| (s + 1).to_string())
            ),
        )
    };

    Ok(ThresholdReport {
        states: m,
        nodes: n,
        lambda1,
        min_degree,
        pi: pi.as_slice().to_vec(),
        k,
        alpha,
        alpha_bar,
        alpha_bar_fixed,
        alpha_tilde,
        graphs_differ: !single_graph,
        sum_alpha,
        sum_alpha_bar,
        sum_alpha_tilde,
        reachable_state,
        theta_star,
        zeta: (!bound.vacuous).then_some(bound.zeta),
        omega: poisson.omega,
        poisson_residual: poisson.residual,
        classification,
        trigger,
    })
}

impl ThresholdReport {
    /// Renders the report as an aligned plain-text table.
    #[must_use]
    pub fn render_table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5} {:>12} {:>7} {:>10} {:>12} {:>12} {:>12} {:>14}{}",
            "state",
            "lambda1",
            "d_min",
            "pi",
            "K",
            "alpha",
            "alpha_bar",
            "alpha_tilde",
            if self.alpha_bar_fixed.is_some() {
                format!(" {:>14}", "alpha_bar_fix")
            } else {
                String::new()
            }
        );
        for s in 0..self.states {
            let fixed = self
                .alpha_bar_fixed
                .as_ref()
                .map_or(String::new(), |v| format!(" {:>14.8}", v[s]));
            let _ = writeln!(
                out,
                "{:>5} {:>12.8} {:>7} {:>10.6} {:>12.8} {:>12.8} {:>12.8} {:>14.6}{}",
                s + 1,
                self.lambda1[s],
                self.min_degree[s],
                self.pi[s],
                self.k[s],
                self.alpha[s],
                self.alpha_bar[s],
                self.alpha_tilde[s],
                fixed
            );
        }
        let _ = writeln!(out, "nodes                = {}", self.nodes);
        if self.graphs_differ {
            let _ = writeln!(
                out,
                "note: regimes use differing graphs; alpha_tilde(s) uses each state's own lambda1"
            );
        }
        let _ = writeln!(out, "sum_pi_alpha         = {:.6}", self.sum_alpha);
        let _ = writeln!(out, "sum_pi_alpha_bar     = {:.6}", self.sum_alpha_bar);
        let _ = writeln!(out, "sum_pi_alpha_tilde   = {:.6}", self.sum_alpha_tilde);
        let _ = writeln!(
            out,
            "assumption-1 state   = {}",
            self.reachable_state
                .map_or("none".to_string(), |s| (s + 1).to_string())
        );
        let _ = writeln!(
            out,
            "theta_star           = {}",
            self.theta_star
                .map_or("none".to_string(), |t| format!("{t:.8}"))
        );
        let _ = writeln!(
            out,
            "zeta                 = {}",
            self.zeta
                .map_or("vacuous".to_string(), |z| format!("{z:.6}"))
        );
        let omega = self
            .omega
            .iter()
            .map(|w| format!("{w:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "omega                = [{omega}]");
        let _ = writeln!(out, "classification       = {}", self.classification);
        let _ = writeln!(out, "trigger: {}", self.trigger);
        out
    }
}
