//! Monte Carlo ensembles and the estimators that confront simulated paths
//! with the closed-form thresholds.
//!
//! [`run_ensemble`] integrates `n_runs` independent trajectories (seeds split
//! deterministically from one master seed, see [`crate::rng`]) and streams
//! per-run statistics so full per-node trajectories are never retained:
//!
//! * Lyapunov slope: OLS fit of `log |x(t)|` against `t` on the tail window
//!   (empirical counterpart of the extinction exponent);
//! * survival data: `|x|` at a decimated grid of checkpoints, queried as the
//!   fraction of runs with `|x(t)| >= chi` (the permanence statistic);
//! * time averages: trapezoid-rule `(1/T) int |x| dt`, plus the same average
//!   of mean prevalence over the third and fourth quarters of the run (an
//!   ergodic-consistency check);
//! * occupation: a time-weighted joint histogram of `(|x(t)|, s(t))` over the
//!   tail half, the empirical stand-in for the invariant measure.
//!
//! Runs execute in parallel; per-run records are collected in run order and
//! reduced sequentially with compensated (Kahan) accumulation, so results are
//! bit-identical regardless of thread scheduling.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{integrate, Model, SimError, Trajectory};
use crate::rng::run_seed;

/// Default fraction of the grid used for tail estimators.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Minimum number of grid points required in the Lyapunov tail window.
const LYAP_MIN_POINTS: usize = 100;

/// Fixed fine resolution at which occupation mass is accumulated; coarser
/// histograms are produced by aggregating these micro-bins.
pub const OCCUPATION_MICRO_BINS: usize = 240;

/// Largest number of stored norm checkpoints per run (plus the endpoint).
const CHECKPOINT_CAP: usize = 2000;

/// Standard normal 97.5% quantile, for 95% binomial intervals.
const Z_95: f64 = 1.959_963_984_540_054;

/// Errors from ensemble runs and estimators.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("n_runs must be at least 1")]
    NoRuns,
    #[error("run {run} failed: {source}")]
    Run {
        /// 1-based run number.
        run: usize,
        #[source]
        source: SimError,
    },
    #[error("tail fraction {0} is outside (0, 1)")]
    BadTailFraction(f64),
    #[error(
        "tail window holds {points} grid points; need at least {LYAP_MIN_POINTS} \
         (lengthen the horizon or shrink dt)"
    )]
    WindowTooShort { points: usize },
    #[error("evaluation time {t_eval} exceeds the horizon {horizon}")]
    BeyondHorizon { t_eval: f64, horizon: f64 },
    #[error("bin count {0} is outside 1..={OCCUPATION_MICRO_BINS}")]
    BadBins(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compensated (Kahan) accumulator: summation error stays O(eps) independent
/// of the number of terms, so reductions merged in any fixed order agree to
/// well under 1e-12 relative.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

/// First index of the tail window: the final `tail_fraction` of `len` grid
/// points.
fn tail_start(len: usize, tail_fraction: f64) -> usize {
    (len as f64 * (1.0 - tail_fraction)).floor() as usize
}

/// OLS slope of `ys` against `ts` (two-pass, centered).
fn ols_slope(ts: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(ts.len(), ys.len());
    let n = ts.len() as f64;
    let mut st = Kahan::default();
    for &t in ts {
        st.add(t);
    }
    let t_bar = st.value() / n;
    let mut sy = Kahan::default();
    for &y in ys {
        sy.add(y);
    }
    let y_bar = sy.value() / n;
    let mut sxy = Kahan::default();
    let mut sxx = Kahan::default();
    for (&t, &y) in ts.iter().zip(ys) {
        let d = t - t_bar;
        sxy.add(d * (y - y_bar));
        sxx.add(d * d);
    }
    sxy.value() / sxx.value()
}

/// Slope of `log(values)` against `times` over the window starting at
/// `start`; the Lyapunov-exponent estimator shared by the trajectory op and
/// the streaming ensemble path.
fn lyap_slope(times: &[f64], values: &[f64], start: usize) -> Result<f64, ExperimentError> {
    let points = times.len() - start;
    if points < LYAP_MIN_POINTS {
        return Err(ExperimentError::WindowTooShort { points });
    }
    let logs: Vec<f64> = values[start..].iter().map(|v| v.ln()).collect();
    Ok(ols_slope(&times[start..], &logs))
}

/// Trapezoid-rule average of `values` over `[times[lo], times[hi - 1]]`.
fn trapezoid_average(times: &[f64], values: &[f64], lo: usize, hi: usize) -> f64 {
    debug_assert!(hi > lo + 1);
    let mut acc = Kahan::default();
    for k in lo..hi - 1 {
        let h = times[k + 1] - times[k];
        acc.add(0.5 * h * (values[k] + values[k + 1]));
    }
    acc.value() / (times[hi - 1] - times[lo])
}

/// Per-run estimator on a recorded trajectory: OLS slope of `log |x(t)|`
/// against `t` over the final `tail_fraction` of the grid. The clip floor of
/// the integrator keeps `|x| > 0`, so the logarithm is always finite.
pub fn estimate_lyapunov(traj: &Trajectory, tail_fraction: f64) -> Result<f64, ExperimentError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(ExperimentError::BadTailFraction(tail_fraction));
    }
    let norms: Vec<f64> = (0..traj.len()).map(|k| traj.norm_at(k)).collect();
    lyap_slope(traj.times(), &norms, tail_start(traj.len(), tail_fraction))
}

/// Trapezoid-rule average of `|x(t)|` over the whole run.
#[must_use]
pub fn estimate_time_average(traj: &Trajectory) -> f64 {
    let norms: Vec<f64> = (0..traj.len()).map(|k| traj.norm_at(k)).collect();
    trapezoid_average(traj.times(), &norms, 0, traj.len())
}

/// One run's summary statistics. `run` is the 1-based run number; `seed` is
/// the split seed that reproduces the trajectory exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// Tail-window OLS slope of `log |x(t)|`.
    pub lyap: f64,
    /// `(1/T) int_0^T |x(u)| du` (trapezoid).
    pub time_average: f64,
    /// Trapezoid average of mean prevalence over `[T/2, 3T/4]`.
    pub quarter3_average: f64,
    /// Trapezoid average of mean prevalence over `[3T/4, T]`.
    pub quarter4_average: f64,
    /// `|x(T)|`.
    pub final_norm: f64,
    /// Boundary clamps per node-update (see the integrator).
    pub clamp_ratio: f64,
    /// Time fraction spent in each chain state over the tail half.
    pub env_fraction: Vec<f64>,
}

/// Aggregated output of [`run_ensemble`]: per-run records, the decimated
/// survival checkpoints, and the tail-half occupation mass at micro-bin
/// resolution (averaged across runs, total mass 1).
///
/// The struct is a pure function of `(model, x0, s0, horizon, dt, n_runs,
/// master_seed)`: rerunning with the same inputs reproduces it bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_runs: usize,
    pub states: usize,
    pub nodes: usize,
    pub horizon: f64,
    pub dt: f64,
    pub master_seed: u64,
    /// Tail fraction used for the Lyapunov window.
    pub tail_fraction: f64,
    pub runs: Vec<RunRecord>,
    /// Times of the stored norm checkpoints (shared by all runs; includes 0
    /// and the horizon).
    pub checkpoint_times: Vec<f64>,
    /// `norm_checkpoints[r][c] = |x|` of run `r` at `checkpoint_times[c]`.
    pub norm_checkpoints: Vec<Vec<f64>>,
    /// `occupation[bin][state]` at micro resolution over `[0, norm_cap]`.
    pub occupation: Vec<Vec<f64>>,
    /// Upper end of the norm binning range, `sqrt(N)`.
    pub norm_cap: f64,
}

/// Empirical permanence statistic: fraction of runs with `|x(t)| >= chi` at
/// the stored checkpoint nearest `t_eval`, with a 95% normal-approximation
/// binomial half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub chi: f64,
    /// Checkpoint time actually evaluated.
    pub t_used: f64,
    pub fraction: f64,
    pub half_width: f64,
}

/// Internal per-run output before aggregation.
struct RunOutput {
    record: RunRecord,
    checkpoints: Vec<f64>,
    /// Flat `[bin * m + state]` mass, normalized to 1 over the tail half.
    occupation: Vec<f64>,
}

/// Grid time of point `j` as the integrator assigns it.
fn grid_time(j: usize, steps: usize, dt: f64, horizon: f64) -> f64 {
    if j == steps {
        horizon
    } else {
        j as f64 * dt
    }
}

/// Checkpoint indices: every `stride`-th grid point plus the endpoint, with
/// `stride` chosen so at most [`CHECKPOINT_CAP`] + 1 points are kept.
fn checkpoint_indices(len: usize) -> Vec<usize> {
    let steps = len - 1;
    let stride = steps.div_ceil(CHECKPOINT_CAP).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

#[allow(clippy::too_many_arguments)] // private kernel; mirrors run_ensemble
fn run_once(
    model: &Model,
    x0: &[f64],
    s0: usize,
    horizon: f64,
    dt: f64,
    run_no: usize,
    seed: u64,
    indices: &[usize],
) -> Result<RunOutput, ExperimentError> {
    let n = model.node_count();
    let m = model.state_count();
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut prevalences = Vec::new();
    let mut env = Vec::new();
    let summary = integrate(model, x0, s0, horizon, dt, seed, |_, t, x, s| {
        times.push(t);
        norms.push(x.iter().map(|v| v * v).sum::<f64>().sqrt());
        prevalences.push(x.iter().sum::<f64>() / n as f64);
        env.push(s);
    })
    .map_err(|source| ExperimentError::Run {
        run: run_no,
        source,
    })?;

    let len = times.len();
    let lyap = lyap_slope(&times, &norms, tail_start(len, DEFAULT_TAIL_FRACTION))?;
    let time_average = trapezoid_average(&times, &norms, 0, len);

    let steps = len - 1;
    let half = (steps as f64 * 0.5).round() as usize;
    let three_quarters = (steps as f64 * 0.75).round() as usize;
    let quarter3_average = trapezoid_average(&times, &prevalences, half, three_quarters + 1);
    let quarter4_average = trapezoid_average(&times, &prevalences, three_quarters, len);

    // Tail-half occupation: left-point rule, each grid point owns the
    // interval up to the next one; the regime is right-continuous so the
    // left state is the one in force on that interval.
    let norm_cap = (n as f64).sqrt();
    let mut occupation = vec![0.0; OCCUPATION_MICRO_BINS * m];
    let mut weight = Kahan::default();
    for k in half..len - 1 {
        let w = times[k + 1] - times[k];
        let bin = ((norms[k] / norm_cap) * OCCUPATION_MICRO_BINS as f64).floor() as usize;
        let bin = bin.min(OCCUPATION_MICRO_BINS - 1);
        occupation[bin * m + env[k]] += w;
        weight.add(w);
    }
    let total = weight.value();
    for mass in &mut occupation {
        *mass /= total;
    }
    let mut env_fraction = vec![0.0; m];
    for (s, frac) in env_fraction.iter_mut().enumerate() {
        let mut acc = Kahan::default();
        for bin in 0..OCCUPATION_MICRO_BINS {
            acc.add(occupation[bin * m + s]);
        }
        *frac = acc.value();
    }

    let checkpoints = indices.iter().map(|&j| norms[j]).collect();
    Ok(RunOutput {
        record: RunRecord {
            run: run_no,
            seed,
            lyap,
            time_average,
            quarter3_average,
            quarter4_average,
            final_norm: *norms.last().unwrap(),
            clamp_ratio: summary.clamp_count as f64 / (summary.steps as f64 * n as f64),
            env_fraction,
        },
        checkpoints,
        occupation,
    })
}

/// Runs `n_runs` independent trajectories of the model from `x0`, chain
/// state `s0`, with per-run seeds split from `master_seed`, and aggregates
/// their statistics. Runs may execute concurrently; the output is
/// bit-identical for fixed inputs regardless of scheduling.
pub fn run_ensemble(
    model: &Model,
    x0: &[f64],
    s0: usize,
    horizon: f64,
    dt: f64,
    n_runs: usize,
    master_seed: u64,
) -> Result<EnsembleStats, ExperimentError> {
    if n_runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    let m = model.state_count();
    let n = model.node_count();
    let steps = (horizon / dt).round() as usize;
    let len = steps + 1;
    let indices = checkpoint_indices(len);

    let outputs: Vec<RunOutput> = (0..n_runs)
        .into_par_iter()
        .map(|r| {
            run_once(
                model,
                x0,
                s0,
                horizon,
                dt,
                r + 1,
                run_seed(master_seed, r as u64),
                &indices,
            )
        })
        .collect::<Result<_, _>>()?;

    // Sequential reduction in run order: cell-wise compensated mean of the
    // per-run occupation masses.
    let mut occ_sum = vec![Kahan::default(); OCCUPATION_MICRO_BINS * m];
    for out in &outputs {
        for (acc, &mass) in occ_sum.iter_mut().zip(&out.occupation) {
            acc.add(mass);
        }
    }
    let occupation: Vec<Vec<f64>> = (0..OCCUPATION_MICRO_BINS)
        .map(|bin| {
            (0..m)
                .map(|s| occ_sum[bin * m + s].value() / n_runs as f64)
                .collect()
        })
        .collect();

    let checkpoint_times = indices
        .iter()
        .map(|&j| grid_time(j, steps, dt, horizon))
        .collect();
    let mut runs = Vec::with_capacity(n_runs);
    let mut norm_checkpoints = Vec::with_capacity(n_runs);
    for out in outputs {
        runs.push(out.record);
        norm_checkpoints.push(out.checkpoints);
    }

    Ok(EnsembleStats {
        n_runs,
        states: m,
        nodes: n,
        horizon,
        dt,
        master_seed,
        tail_fraction: DEFAULT_TAIL_FRACTION,
        runs,
        checkpoint_times,
        norm_checkpoints,
        occupation,
        norm_cap: (n as f64).sqrt(),
    })
}

/// Fraction of runs with `|x(t_eval)| >= chi`; see [`SurvivalEstimate`].
/// `t_eval` must not exceed the horizon; it is snapped to the nearest stored
/// checkpoint.
pub fn estimate_permanence(
    stats: &EnsembleStats,
    chi: f64,
    t_eval: f64,
) -> Result<SurvivalEstimate, ExperimentError> {
    stats.survival_fraction(chi, t_eval)
}

impl EnsembleStats {
    /// Fraction of runs with `|x| >= chi` at the stored checkpoint nearest
    /// `t_eval` (which must lie within the horizon).
    pub fn survival_fraction(
        &self,
        chi: f64,
        t_eval: f64,
    ) -> Result<SurvivalEstimate, ExperimentError> {
        if t_eval > self.horizon * (1.0 + 1e-12) || t_eval < 0.0 {
            return Err(ExperimentError::BeyondHorizon {
                t_eval,
                horizon: self.horizon,
            });
        }
        let times = &self.checkpoint_times;
        let pos = times.partition_point(|&ct| ct < t_eval);
        let idx = if pos == 0 {
            0
        } else if pos == times.len() {
            times.len() - 1
        } else if (times[pos] - t_eval).abs() < (t_eval - times[pos - 1]).abs() {
            pos
        } else {
            pos - 1
        };
        let count = self
            .norm_checkpoints
            .iter()
            .filter(|cps| cps[idx] >= chi)
            .count();
        let p = count as f64 / self.n_runs as f64;
        Ok(SurvivalEstimate {
            chi,
            t_used: times[idx],
            fraction: p,
            half_width: Z_95 * (p * (1.0 - p) / self.n_runs as f64).sqrt(),
        })
    }

    /// Per-run Lyapunov slopes, in run order.
    #[must_use]
    pub fn lyap_estimates(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.lyap).collect()
    }

    /// Median of the per-run Lyapunov slopes.
    #[must_use]
    pub fn median_lyap(&self) -> f64 {
        let mut v = self.lyap_estimates();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    fn mean_of<F: Fn(&RunRecord) -> f64>(&self, f: F) -> f64 {
        let mut acc = Kahan::default();
        for r in &self.runs {
            acc.add(f(r));
        }
        acc.value() / self.n_runs as f64
    }

    /// Mean per-run Lyapunov slope.
    #[must_use]
    pub fn mean_lyap(&self) -> f64 {
        self.mean_of(|r| r.lyap)
    }

    /// Mean per-run time average of `|x|`.
    #[must_use]
    pub fn mean_time_average(&self) -> f64 {
        self.mean_of(|r| r.time_average)
    }

    /// Mean final norm.
    #[must_use]
    pub fn mean_final_norm(&self) -> f64 {
        self.mean_of(|r| r.final_norm)
    }

    /// Largest per-run clamp ratio.
    #[must_use]
    pub fn max_clamp_ratio(&self) -> f64 {
        self.runs.iter().map(|r| r.clamp_ratio).fold(0.0, f64::max)
    }

    /// Across-run mean of the tail-half state occupancy.
    #[must_use]
    pub fn env_marginal(&self) -> Vec<f64> {
        (0..self.states)
            .map(|s| self.mean_of(|r| r.env_fraction[s]))
            .collect()
    }

    /// Across-run standard error of the tail-half state occupancy (0 for a
    /// single run).
    #[must_use]
    pub fn env_marginal_se(&self) -> Vec<f64> {
        if self.n_runs < 2 {
            return vec![0.0; self.states];
        }
        let means = self.env_marginal();
        (0..self.states)
            .map(|s| {
                let mut acc = Kahan::default();
                for r in &self.runs {
                    let d = r.env_fraction[s] - means[s];
                    acc.add(d * d);
                }
                (acc.value() / (self.n_runs - 1) as f64).sqrt() / (self.n_runs as f64).sqrt()
            })
            .collect()
    }

    /// Writes the full stats as (compact) JSON.
    pub fn write_json<W: std::io::Write>(&self, out: W) -> Result<(), ExperimentError> {
        serde_json::to_writer(out, self).map_err(std::io::Error::from)?;
        Ok(())
    }

    /// Writes the full stats as JSON to a file.
    pub fn write_json_file<P: AsRef<std::path::Path>>(
        &self,
        path: P,
    ) -> Result<(), ExperimentError> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_json(&mut out)?;
        use std::io::Write;
        Ok(out.flush()?)
    }

    /// Writes per-run summaries as CSV: `run,seed,lyap,time_avg,final_norm`.
    pub fn write_runs_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "run,seed,lyap,time_avg,final_norm")?;
        for r in &self.runs {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.run, r.seed, r.lyap, r.time_average, r.final_norm
            )?;
        }
        Ok(())
    }

    /// Writes the per-run CSV to a file.
    pub fn write_runs_csv_file<P: AsRef<std::path::Path>>(&self, path: P) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_runs_csv(&mut out)?;
        use std::io::Write;
        out.flush()
    }
}

/// Time-weighted joint histogram of `(|x|, s)` over the tail half of each
/// run, averaged across runs; total mass 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationHistogram {
    /// `bins + 1` edges spanning `[0, norm_cap]`.
    pub bin_edges: Vec<f64>,
    /// `mass[bin][state]`.
    pub mass: Vec<Vec<f64>>,
}

impl OccupationHistogram {
    /// Number of norm bins.
    #[must_use]
    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    /// Number of chain states.
    #[must_use]
    pub fn states(&self) -> usize {
        self.mass.first().map_or(0, Vec::len)
    }

    /// Total mass (1 up to rounding).
    #[must_use]
    pub fn total_mass(&self) -> f64 {
        let mut acc = Kahan::default();
        for row in &self.mass {
            for &v in row {
                acc.add(v);
            }
        }
        acc.value()
    }

    /// Marginal over states (sums each state's column).
    #[must_use]
    pub fn env_marginal(&self) -> Vec<f64> {
        (0..self.states())
            .map(|s| {
                let mut acc = Kahan::default();
                for row in &self.mass {
                    acc.add(row[s]);
                }
                acc.value()
            })
            .collect()
    }

    /// Marginal over norm bins (sums each row).
    #[must_use]
    pub fn norm_marginal(&self) -> Vec<f64> {
        self.mass
            .iter()
            .map(|row| {
                let mut acc = Kahan::default();
                for &v in row {
                    acc.add(v);
                }
                acc.value()
            })
            .collect()
    }

    /// Total-variation distance `0.5 sum |p - q|` to another histogram of
    /// the same shape.
    #[must_use]
    pub fn total_variation(&self, other: &Self) -> f64 {
        assert_eq!(self.bins(), other.bins(), "histogram shapes differ");
        assert_eq!(self.states(), other.states(), "histogram shapes differ");
        let mut acc = Kahan::default();
        for (a, b) in self.mass.iter().zip(&other.mass) {
            for (&p, &q) in a.iter().zip(b) {
                acc.add((p - q).abs());
            }
        }
        0.5 * acc.value()
    }

    /// Writes the histogram as CSV: `norm_lo,norm_hi,state,mass` with
    /// 1-based states.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "norm_lo,norm_hi,state,mass")?;
        for (bin, row) in self.mass.iter().enumerate() {
            for (s, &mass) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    self.bin_edges[bin],
                    self.bin_edges[bin + 1],
                    s + 1,
                    mass
                )?;
            }
        }
        Ok(())
    }

    /// Writes the CSV form to a file.
    pub fn write_csv_file<P: AsRef<std::path::Path>>(&self, path: P) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)?;
        use std::io::Write;
        out.flush()
    }
}

/// Aggregates the stored micro-bin occupation into `bins` norm bins
/// (`1..=240`). Mass is attributed at micro-bin resolution: when `bins` does
/// not divide 240, bin boundaries are effectively shifted by less than one
/// micro-bin width.
pub fn occupation_histogram(
    stats: &EnsembleStats,
    bins: usize,
) -> Result<OccupationHistogram, ExperimentError> {
    if bins == 0 || bins > OCCUPATION_MICRO_BINS {
        return Err(ExperimentError::BadBins(bins));
    }
    let m = stats.states;
    let mut mass = vec![vec![0.0; m]; bins];
    for (micro, row) in stats.occupation.iter().enumerate() {
        let coarse = micro * bins / OCCUPATION_MICRO_BINS;
        for (s, &v) in row.iter().enumerate() {
            mass[coarse][s] += v;
        }
    }
    let bin_edges = (0..=bins)
        .map(|b| stats.norm_cap * b as f64 / bins as f64)
        .collect();
    Ok(OccupationHistogram { bin_edges, mass })
}
