//! Euler-Maruyama integration of the switched SIS SDE
//!
//! ```text
//! dx_i = [ beta(s) * b_i * (1 - x_i) - delta(s) * x_i ] dt
//!        + sigma(x_i, s) * b_i * (1 - x_i) dw_i,     b_i = sum_{j ~ i} x_j,
//! ```
//!
//! with the regime `s = s(t)` following an exact sampled jump path. Grid
//! steps that straddle one or more jumps are split into substeps at the
//! exact jump instants, so the regime used in each substep is exact and the
//! scheme's weak/strong order is not degraded by switching. Brownian
//! increments for a substep of length `h` are drawn as `sqrt(h) * z` from
//! the owning node's dedicated RNG stream.
//!
//! The exact solution never leaves `(0,1)^N`; the discrete scheme can
//! overshoot, so each update is clipped to `[EPS_CLIP, 1 - EPS_CLIP]`.
//! `clamp_count` records only genuine boundary violations (raw updates
//! outside the open interval `(0,1)`), i.e. the numerical shadow of the
//! invariance property; flooring a positive value up to `EPS_CLIP` keeps
//! `log |x|` finite near extinction and is not counted.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::{chain_rng, node_rng};
use crate::switching::{RateMatrix, SwitchingError, SwitchingPath};

/// Clipping margin keeping states inside the open unit interval.
pub const EPS_CLIP: f64 = 1e-12;

/// Relative slack allowed between `horizon` and `round(horizon/dt) * dt`.
const GRID_REL_TOL: f64 = 1e-6;

/// Errors from model construction and integration.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("{name} must be finite and nonnegative, got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("model needs at least one regime")]
    NoRegimes,
    #[error("{regimes} regimes but the generator has {states} states")]
    RegimeCount { regimes: usize, states: usize },
    #[error("regime {idx} has {got} nodes, expected {expected}")]
    NodeMismatch {
        idx: usize,
        expected: usize,
        got: usize,
    },
    #[error("x0 has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("x0[{node}] = {value} outside the open interval (0, 1)")]
    X0Range { node: usize, value: f64 },
    #[error("dt must be positive and finite, got {0}")]
    BadDt(f64),
    #[error(
        "horizon {horizon} is not a whole number of dt = {dt} steps \
         (the time grid must be uniform)"
    )]
    BadGrid { horizon: f64, dt: f64 },
    #[error("dW has {got} entries, expected {expected}")]
    NoiseDimension { expected: usize, got: usize },
    #[error("state at node {node} became non-finite")]
    NonFiniteState { node: usize },
    #[error(
        "state diverged at step {step} (t = {t}), node {node}, regime {regime} \
         (1-based)"
    )]
    Diverged {
        step: usize,
        t: f64,
        node: usize,
        regime: usize,
    },
    #[error(transparent)]
    Switching(#[from] SwitchingError),
}

/// Noise intensity family for `sigma(x, s)`; both satisfy the bound
/// `sigma(x)/x <= M(s)` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `sigma(x) = M * x`: attains the bound with equality everywhere.
    Linear,
    /// `sigma(x) = M * x * (1 - x)`: attains the bound only as `x -> 0`,
    /// vanishing at both ends.
    Saturating,
}

impl NoiseKind {
    /// Noise intensity `sigma(x)` for the given bound `M`.
    #[must_use]
    pub fn intensity(self, noise_bound: f64, x: f64) -> f64 {
        match self {
            NoiseKind::Linear => noise_bound * x,
            NoiseKind::Saturating => noise_bound * x * (1.0 - x),
        }
    }
}

/// Per-regime parameters: infection rate, curing rate, noise bound and the
/// contact graph active while the chain sits in this regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    beta: f64,
    delta: f64,
    noise_bound: f64,
    graph: Graph,
}

impl RegimeSpec {
    /// Validates `beta >= 0`, `delta >= 0`, `noise_bound >= 0` (all finite).
    ///
    /// Zero rates are accepted here (degenerate but well-defined dynamics,
    /// e.g. pure decay for `beta = 0`); configuration-level validation is
    /// stricter.
    pub fn new(beta: f64, delta: f64, noise_bound: f64, graph: Graph) -> Result<Self, SimError> {
        for (name, value) in [
            ("beta", beta),
            ("delta", delta),
            ("noise bound M", noise_bound),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SimError::Parameter { name, value });
            }
        }
        Ok(RegimeSpec {
            beta,
            delta,
            noise_bound,
            graph,
        })
    }

    /// Infection rate `beta(s)`.
    #[must_use]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Curing rate `delta(s)`.
    #[must_use]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Noise bound `M(s)` with `sigma(x, s) <= M(s) * x`.
    #[must_use]
    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    /// Contact graph of this regime.
    #[must_use]
    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

/// A complete switched model: one [`RegimeSpec`] per chain state, the
/// generator, and the noise family.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    regimes: Vec<RegimeSpec>,
    switching: RateMatrix,
    noise: NoiseKind,
    n: usize,
}

impl Model {
    /// Validates that the regime list is non-empty, matches the generator's
    /// state count, and that all regime graphs share one node set.
    pub fn new(
        regimes: Vec<RegimeSpec>,
        switching: RateMatrix,
        noise: NoiseKind,
    ) -> Result<Self, SimError> {
        if regimes.is_empty() {
            return Err(SimError::NoRegimes);
        }
        if regimes.len() != switching.state_count() {
            return Err(SimError::RegimeCount {
                regimes: regimes.len(),
                states: switching.state_count(),
            });
        }
        let n = regimes[0].graph.node_count();
        for (idx, r) in regimes.iter().enumerate() {
            if r.graph.node_count() != n {
                return Err(SimError::NodeMismatch {
                    idx,
                    expected: n,
                    got: r.graph.node_count(),
                });
            }
        }
        Ok(Model {
            regimes,
            switching,
            noise,
            n,
        })
    }

    /// Number of nodes `N`.
    #[must_use]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of regimes `m`.
    #[must_use]
    pub fn state_count(&self) -> usize {
        self.regimes.len()
    }

    /// Regime parameters of state `s` (0-based).
    #[must_use]
    pub fn regime(&self, s: usize) -> &RegimeSpec {
        &self.regimes[s]
    }

    /// All regimes in state order.
    #[must_use]
    pub fn regimes(&self) -> &[RegimeSpec] {
        &self.regimes
    }

    /// The switching generator.
    #[must_use]
    pub fn switching(&self) -> &RateMatrix {
        &self.switching
    }

    /// The configured noise family.
    #[must_use]
    pub fn noise_kind(&self) -> NoiseKind {
        self.noise
    }

    /// Whether all regimes share one identical contact graph.
    #[must_use]
    pub fn single_graph(&self) -> bool {
        self.regimes
            .iter()
            .all(|r| r.graph == self.regimes[0].graph)
    }

    /// Samples the switching path this model would follow on `[0, horizon]`
    /// for the run seed `seed` — the same path [`simulate`] consumes, drawn
    /// from the chain stream of the seed.
    pub fn sample_switching_path(
        &self,
        s0: usize,
        horizon: f64,
        seed: u64,
    ) -> Result<SwitchingPath, SwitchingError> {
        let mut rng = chain_rng(seed);
        self.switching.sample_path(s0, horizon, &mut rng)
    }
}

/// Local infection pressure `b_i = sum_{j ~ i} x_j` for all nodes.
#[must_use]
pub fn local_pressure(graph: &Graph, x: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; x.len()];
    fill_local_pressure(graph, x, &mut b);
    b
}

fn fill_local_pressure(graph: &Graph, x: &[f64], b: &mut [f64]) {
    for i in 0..x.len() {
        let mut acc = 0.0;
        for &j in graph.neighbors(i) {
            acc += x[j as usize];
        }
        b[i] = acc;
    }
}

/// Drift vector `f_i = beta * b_i * (1 - x_i) - delta * x_i`.
#[must_use]
pub fn drift(regime: &RegimeSpec, x: &[f64]) -> Vec<f64> {
    let b = local_pressure(regime.graph(), x);
    x.iter()
        .zip(&b)
        .map(|(&xi, &bi)| regime.beta * bi * (1.0 - xi) - regime.delta * xi)
        .collect()
}

/// Diffusion vector `g_i = sigma(x_i) * b_i * (1 - x_i)` (diagonal noise).
#[must_use]
pub fn diffusion(regime: &RegimeSpec, kind: NoiseKind, x: &[f64]) -> Vec<f64> {
    let b = local_pressure(regime.graph(), x);
    x.iter()
        .zip(&b)
        .map(|(&xi, &bi)| kind.intensity(regime.noise_bound, xi) * bi * (1.0 - xi))
        .collect()
}

/// One Euler-Maruyama step of length `dt` in a fixed regime, updating `x` in
/// place. `dw` must hold per-node Brownian increments with variance `dt`.
///
/// Returns the number of boundary violations (raw updates outside `(0,1)`;
/// every out-of-band value is clipped to `[EPS_CLIP, 1 - EPS_CLIP]`, but
/// values merely floored into the clip band from inside `(0,1)` are not
/// counted — see the module docs).
pub fn em_step(
    regime: &RegimeSpec,
    kind: NoiseKind,
    x: &mut [f64],
    dt: f64,
    dw: &[f64],
) -> Result<u32, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::BadDt(dt));
    }
    if dw.len() != x.len() {
        return Err(SimError::NoiseDimension {
            expected: x.len(),
            got: dw.len(),
        });
    }
    let mut b = vec![0.0; x.len()];
    em_step_scratch(regime, kind, x, dt, dw, &mut b)
}

/// [`em_step`] with a caller-provided pressure buffer (the integrator's hot
/// path; arithmetic is identical to the public function).
fn em_step_scratch(
    regime: &RegimeSpec,
    kind: NoiseKind,
    x: &mut [f64],
    dt: f64,
    dw: &[f64],
    b: &mut [f64],
) -> Result<u32, SimError> {
    fill_local_pressure(regime.graph(), x, b);
    let mut clamps = 0u32;
    for i in 0..x.len() {
        let xi = x[i];
        let bi = b[i];
        let f = regime.beta * bi * (1.0 - xi) - regime.delta * xi;
        let g = kind.intensity(regime.noise_bound, xi) * bi * (1.0 - xi);
        let raw = xi + f * dt + g * dw[i];
        if !raw.is_finite() {
            return Err(SimError::NonFiniteState { node: i });
        }
        if raw <= 0.0 || raw >= 1.0 {
            clamps += 1;
        }
        x[i] = raw.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
    }
    Ok(clamps)
}

/// Outcome counters of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrationSummary {
    /// Boundary violations across all substeps (see [`em_step`]).
    pub clamp_count: u64,
    /// Grid steps taken (`horizon / dt`).
    pub steps: usize,
    /// Total substeps after splitting at jump times (`>= steps`).
    pub substeps: u64,
}

/// Integrates the model from `x0` (componentwise in `(0,1)`) and chain state
/// `s0` over `[0, horizon]` on a uniform grid of step `dt`, invoking
/// `observe(k, t_k, x(t_k), s(t_k))` at every grid point `k = 0..=steps`.
///
/// `horizon` must be a whole number of steps. All randomness derives from
/// `seed` (see [`crate::rng`]); a fixed seed yields a bit-identical
/// trajectory.
pub fn integrate<F>(
    model: &Model,
    x0: &[f64],
    s0: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
    mut observe: F,
) -> Result<IntegrationSummary, SimError>
where
    F: FnMut(usize, f64, &[f64], usize),
{
    let n = model.node_count();
    if x0.len() != n {
        return Err(SimError::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    for (node, &v) in x0.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(SimError::X0Range { node, value: v });
        }
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::BadDt(dt));
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > GRID_REL_TOL * steps as f64 {
        return Err(SimError::BadGrid { horizon, dt });
    }

    let path = model.sample_switching_path(s0, horizon, seed)?;
    let jump_times = path.jump_times();
    let jump_states = path.states();

    let mut node_rngs: Vec<_> = (0..n).map(|i| node_rng(seed, i)).collect();
    let mut x = x0.to_vec();
    let mut dw = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut clamp_count = 0u64;
    let mut substeps = 0u64;
    // Index into jump_times of the next unconsumed jump; jump_states[cursor-1]
    // is the regime at the current integration time.
    let mut cursor = 1usize;

    observe(0, 0.0, &x, jump_states[0]);

    for k in 0..steps {
        let t1 = if k + 1 == steps {
            horizon
        } else {
            (k + 1) as f64 * dt
        };
        let mut t = k as f64 * dt;
        loop {
            // Regime changes at or before the current position cost no time
            // and no randomness; just advance the cursor.
            while cursor < jump_times.len() && jump_times[cursor] <= t {
                cursor += 1;
            }
            // Substep to the next jump strictly inside (t, t1), else to t1.
            let (target, is_jump) = if cursor < jump_times.len() && jump_times[cursor] < t1 {
                (jump_times[cursor], true)
            } else {
                (t1, false)
            };
            let h = target - t;
            let sqrt_h = h.sqrt();
            for (slot, rng) in dw.iter_mut().zip(&mut node_rngs) {
                let z: f64 = rng.sample(StandardNormal);
                *slot = z * sqrt_h;
            }
            let regime_idx = jump_states[cursor - 1];
            let regime = &model.regimes[regime_idx];
            match em_step_scratch(regime, model.noise, &mut x, h, &dw, &mut b) {
                Ok(c) => clamp_count += u64::from(c),
                Err(SimError::NonFiniteState { node }) => {
                    return Err(SimError::Diverged {
                        step: k + 1,
                        t: target,
                        node,
                        regime: regime_idx + 1,
                    });
                }
                Err(other) => return Err(other),
            }
            substeps += 1;
            t = target;
            if is_jump {
                cursor += 1;
            } else {
                break;
            }
        }
        observe(k + 1, t1, &x, path.state_at(t1));
    }

    Ok(IntegrationSummary {
        clamp_count,
        steps,
        substeps,
    })
}

/// A recorded trajectory on the uniform grid: per-point state vectors, the
/// regime, and bookkeeping for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    dt: f64,
    times: Vec<f64>,
    /// Flat row-major storage: point `k` occupies `[k*n, (k+1)*n)`.
    x: Vec<f64>,
    env: Vec<usize>,
    clamp_count: u64,
    steps: usize,
    seed: u64,
}

impl Trajectory {
    /// Number of nodes.
    #[must_use]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Grid spacing.
    #[must_use]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid points (steps + 1).
    #[must_use]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Whether the trajectory is empty (never true for a simulate result).
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid times.
    #[must_use]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Regime (0-based) at each grid point.
    #[must_use]
    pub fn env(&self) -> &[usize] {
        &self.env
    }

    /// State vector at grid point `k`.
    #[must_use]
    pub fn x_at(&self, k: usize) -> &[f64] {
        &self.x[k * self.n..(k + 1) * self.n]
    }

    /// Euclidean norm `|x(t_k)|`.
    #[must_use]
    pub fn norm_at(&self, k: usize) -> f64 {
        self.x_at(k).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Mean prevalence `(1/N) sum_i x_i(t_k)`.
    #[must_use]
    pub fn prevalence_at(&self, k: usize) -> f64 {
        self.x_at(k).iter().sum::<f64>() / self.n as f64
    }

    /// Boundary violations over the whole run (see [`em_step`]).
    #[must_use]
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    /// Clamp events per node-update on the nominal grid,
    /// `clamp_count / (steps * N)`.
    #[must_use]
    pub fn clamp_ratio(&self) -> f64 {
        self.clamp_count as f64 / (self.steps as f64 * self.n as f64)
    }

    /// The run seed that reproduces this trajectory.
    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes the trajectory as CSV: `t,state,norm,mean_prevalence`, plus
    /// `x_0..x_{N-1}` when `dump_nodes` is set. States are printed 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W, dump_nodes: bool) -> std::io::Result<()> {
        write!(out, "t,state,norm,mean_prevalence")?;
        if dump_nodes {
            for i in 0..self.n {
                write!(out, ",x_{i}")?;
            }
        }
        writeln!(out)?;
        for k in 0..self.len() {
            write!(
                out,
                "{},{},{},{}",
                self.times[k],
                self.env[k] + 1,
                self.norm_at(k),
                self.prevalence_at(k)
            )?;
            if dump_nodes {
                for v in self.x_at(k) {
                    write!(out, ",{v}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Writes the CSV form to a file.
    pub fn write_csv_file<P: AsRef<std::path::Path>>(
        &self,
        path: P,
        dump_nodes: bool,
    ) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out, dump_nodes)?;
        out.flush()
    }
}

/// Integrates and records the full trajectory (all grid points, all nodes).
///
/// Same contract as [`integrate`]; memory is `(steps + 1) * N` floats.
pub fn simulate(
    model: &Model,
    x0: &[f64],
    s0: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<Trajectory, SimError> {
    let n = model.node_count();
    let expected = (horizon / dt).round() as usize + 1;
    let mut times = Vec::with_capacity(expected);
    let mut x = Vec::with_capacity(expected.saturating_mul(n));
    let mut env = Vec::with_capacity(expected);
    let summary = integrate(model, x0, s0, horizon, dt, seed, |_, t, state, s| {
        times.push(t);
        x.extend_from_slice(state);
        env.push(s);
    })?;
    Ok(Trajectory {
        n,
        dt,
        times,
        x,
        env,
        clamp_count: summary.clamp_count,
        steps: summary.steps,
        seed,
    })
}
