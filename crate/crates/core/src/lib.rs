//! Networked SIS epidemics with Markov-switched parameters and noisy
//! transmission.
//!
//! The model couples three layers:
//!
//! * an undirected connected contact graph per regime (adjacency `A(s)`),
//! * a continuous-time Markov chain `s(t)` on `{1..m}` with generator `Q`
//!   that switches the regime (infection rate `beta(s)`, curing rate
//!   `delta(s)`, noise bound `M(s)`, and possibly the graph itself),
//! * per-node white noise perturbing the transmission term.
//!
//! Between jumps of `s(t)` the infection probabilities `x_i(t) in (0,1)`
//! follow the Ito system
//!
//! ```text
//! dx_i = [ beta(s) * b_i * (1 - x_i) - delta(s) * x_i ] dt
//!        + sigma_i(x_i, s) * b_i * (1 - x_i) dw_i,      b_i = sum_j a_ij(s) x_j
//! ```
//!
//! with independent Brownian motions `w_i` and a noise intensity satisfying
//! `sigma_i(x, s) <= M(s) * x`.
//!
//! The crate provides:
//!
//! * [`graph`]: regular (circulant) and Erdos-Renyi contact graphs, spectral
//!   radius via power iteration, edge-list I/O;
//! * [`switching`]: generator validation, stationary distribution, exact
//!   jump-path sampling;
//! * [`dynamics`]: the Euler-Maruyama integrator with exact jump-time step
//!   splitting and reproducible per-node noise streams;
//! * [`thresholds`]: closed-form extinction / permanence / ergodicity
//!   indicators (noise penalty `K(s)`, exponents `alpha(s)`, `alpha_bar(s)`,
//!   `alpha_tilde(s)`, the M-matrix certificate `T(theta)`, the Poisson
//!   system, and a classifier);
//! * [`experiments`]: deterministic-seeded Monte Carlo ensembles with
//!   Lyapunov-slope, survival, time-average and occupation estimators.
//!
//! All randomness descends from a single `u64` master seed through a
//! documented splitting scheme (see [`rng`]), so every trajectory and every
//! ensemble is bit-reproducible, independent of thread scheduling.

// Indexed loops are kept where they mirror (row, column) matrix notation,
// and comparisons of the form `!(x > 0.0)` are deliberate: they treat NaN
// as a failure, which `x <= 0.0` would not.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod experiments;
pub mod graph;
mod linalg;
pub mod rng;
pub mod switching;
pub mod thresholds;

pub use dynamics::{simulate, Model, NoiseKind, RegimeSpec, SimError, Trajectory};
pub use experiments::{
    run_ensemble, EnsembleStats, ExperimentError, OccupationHistogram, RunRecord, SurvivalEstimate,
};
pub use graph::{Graph, GraphError};
pub use switching::{RateMatrix, StationaryDistribution, SwitchingError, SwitchingPath};
pub use thresholds::{classify, Classification, ThresholdError, ThresholdReport};
