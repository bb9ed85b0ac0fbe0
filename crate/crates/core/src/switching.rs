//! The switching layer: a continuous-time Markov chain on `{0..m-1}` (shown
//! to users as `1..m`) with generator `Q`, its stationary distribution, and
//! exact (Gillespie-style) jump-path sampling.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_dense;

/// Row sums of a generator must vanish to within this absolute tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Maximum acceptable residual `max_z |(pi^T Q)_z|` for a stationary solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// Errors from generator validation, the stationary solve, and path sampling.
#[derive(Debug, Error)]
pub enum SwitchingError {
    #[error("rate matrix must have at least one state")]
    Empty,
    #[error("rate matrix row {row} has {len} entries, expected {m}")]
    NotSquare { row: usize, len: usize, m: usize },
    #[error("off-diagonal rate q[{from}][{to}] = {rate} is negative")]
    NegativeRate { from: usize, to: usize, rate: f64 },
    #[error("rate matrix row {row} sums to {sum:e}, exceeding tolerance {ROW_SUM_TOL:e}")]
    RowSum { row: usize, sum: f64 },
    #[error("rate matrix entry q[{from}][{to}] = {rate} is not finite")]
    NonFinite { from: usize, to: usize, rate: f64 },
    #[error("rate matrix is reducible (chain cannot reach every state from every state)")]
    Reducible,
    #[error("stationary solve failed: generator is numerically singular")]
    Singular,
    #[error("stationary solve residual {residual:e} exceeds {STATIONARY_RESIDUAL_TOL:e}")]
    StationaryResidual { residual: f64 },
    #[error("initial state {s0} out of range (m = {m})")]
    BadState { s0: usize, m: usize },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A validated CTMC generator: square, off-diagonals nonnegative, rows
/// summing to zero, and irreducible (strongly connected transition digraph).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMatrix {
    m: usize,
    /// Row-major entries; `q[w*m + z]` is the rate from `w` to `z`.
    q: Vec<f64>,
}

impl RateMatrix {
    /// Validates and wraps a generator given as rows.
    ///
    /// Checks, in order: non-emptiness, squareness, finiteness, nonnegative
    /// off-diagonals, row sums within [`ROW_SUM_TOL`] of zero, and
    /// irreducibility.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, SwitchingError> {
        let m = rows.len();
        if m == 0 {
            return Err(SwitchingError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(SwitchingError::NotSquare {
                    row,
                    len: r.len(),
                    m,
                });
            }
        }
        let q: Vec<f64> = rows.iter().flatten().copied().collect();
        for w in 0..m {
            let mut sum = 0.0;
            for z in 0..m {
                let rate = q[w * m + z];
                if !rate.is_finite() {
                    return Err(SwitchingError::NonFinite {
                        from: w,
                        to: z,
                        rate,
                    });
                }
                if w != z && rate < 0.0 {
                    return Err(SwitchingError::NegativeRate {
                        from: w,
                        to: z,
                        rate,
                    });
                }
                sum += rate;
            }
            if sum.abs() > ROW_SUM_TOL {
                return Err(SwitchingError::RowSum { row: w, sum });
            }
        }
        let matrix = RateMatrix { m, q };
        if !matrix.is_irreducible() {
            return Err(SwitchingError::Reducible);
        }
        Ok(matrix)
    }

    /// Convenience constructor for the ubiquitous two-state chain with
    /// `q12 =` rate 0 -> 1 and `q21 = ` rate 1 -> 0.
    pub fn two_state(q12: f64, q21: f64) -> Result<Self, SwitchingError> {
        Self::new(&[vec![-q12, q12], vec![q21, -q21]])
    }

    /// Number of states `m`.
    #[must_use]
    pub fn state_count(&self) -> usize {
        self.m
    }

    /// Transition rate from `w` to `z` (diagonal entries are negative exit
    /// rates).
    #[must_use]
    pub fn rate(&self, w: usize, z: usize) -> f64 {
        self.q[w * self.m + z]
    }

    /// Total exit rate `-q[w][w]` of state `w`.
    #[must_use]
    pub fn exit_rate(&self, w: usize) -> f64 {
        -self.rate(w, w)
    }

    /// Strong connectivity of the digraph with an edge `w -> z` whenever
    /// `q[w][z] > 0`: forward and backward reachability from state 0.
    fn is_irreducible(&self) -> bool {
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, transpose: bool) -> bool {
        let mut seen = vec![false; self.m];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(w) = stack.pop() {
            for z in 0..self.m {
                let rate = if transpose {
                    self.rate(z, w)
                } else {
                    self.rate(w, z)
                };
                if w != z && rate > 0.0 && !seen[z] {
                    seen[z] = true;
                    count += 1;
                    stack.push(z);
                }
            }
        }
        count == self.m
    }

    /// Stationary distribution `pi` solving `pi^T Q = 0`, `sum(pi) = 1`.
    ///
    /// Solves the transposed system with the redundant last equation
    /// replaced by the ones-constraint, using a partial-pivot LU. The result
    /// is checked to be strictly positive with residual
    /// `max_z |(pi^T Q)_z|` at most [`STATIONARY_RESIDUAL_TOL`].
    pub fn stationary(&self) -> Result<StationaryDistribution, SwitchingError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for w in 0..m {
            for z in 0..m {
                // a = Q^T, i.e. a[z][w] = q[w][z].
                a[z * m + w] = self.rate(w, z);
            }
        }
        // Replace the last row of Q^T (one balance equation is redundant)
        // with sum(pi) = 1.
        for w in 0..m {
            a[(m - 1) * m + w] = 1.0;
        }
        let mut b = vec![0.0; m];
        b[m - 1] = 1.0;
        let mut pi = solve_dense(a, b).ok_or(SwitchingError::Singular)?;
        if pi.iter().any(|&p| !(p > 0.0)) {
            return Err(SwitchingError::Singular);
        }
        // Exact renormalization (the solve already puts the sum within
        // rounding of 1).
        let total: f64 = pi.iter().sum();
        for p in &mut pi {
            *p /= total;
        }
        let mut residual = 0.0f64;
        for z in 0..m {
            let mut acc = 0.0;
            for w in 0..m {
                acc += pi[w] * self.rate(w, z);
            }
            residual = residual.max(acc.abs());
        }
        if residual > STATIONARY_RESIDUAL_TOL {
            return Err(SwitchingError::StationaryResidual { residual });
        }
        Ok(StationaryDistribution { pi })
    }

    /// Lowest state reachable in a single jump from every other state, i.e.
    /// a column `s` of `Q` whose off-diagonal entries are all strictly
    /// positive. Returns `None` when no such state exists. (For `m = 1` the
    /// condition is vacuous and state 0 qualifies.)
    #[must_use]
    pub fn reachable_state(&self) -> Option<usize> {
        (0..self.m).find(|&s| (0..self.m).all(|w| w == s || self.rate(w, s) > 0.0))
    }

    /// Samples the exact jump path on `[0, horizon]` starting from `s0`:
    /// holding times are `Exp(-q[w][w])`, the next state is chosen with
    /// probability `q[w][z] / (-q[w][w])`. All randomness comes from `rng`,
    /// so a fixed seed yields a bit-identical path.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        s0: usize,
        horizon: f64,
        rng: &mut R,
    ) -> Result<SwitchingPath, SwitchingError> {
        if s0 >= self.m {
            return Err(SwitchingError::BadState { s0, m: self.m });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SwitchingError::BadHorizon(horizon));
        }
        let mut jump_times = vec![0.0];
        let mut states = vec![s0];
        let mut t = 0.0;
        let mut state = s0;
        loop {
            let rate = self.exit_rate(state);
            if rate <= 0.0 {
                break; // no transitions out (m = 1)
            }
            let hold = Exp::new(rate).expect("positive rate").sample(rng);
            t += hold;
            if t >= horizon {
                break;
            }
            // Embedded-chain transition: z != state with prob q[state][z]/rate.
            let u: f64 = rng.gen::<f64>() * rate;
            let mut acc = 0.0;
            let mut next = state;
            for z in 0..self.m {
                if z == state {
                    continue;
                }
                let r = self.rate(state, z);
                if r <= 0.0 {
                    continue;
                }
                acc += r;
                next = z;
                if u < acc {
                    break;
                }
            }
            state = next;
            jump_times.push(t);
            states.push(state);
        }
        Ok(SwitchingPath {
            jump_times,
            states,
            horizon,
        })
    }
}

/// Strictly positive probability vector with `pi^T Q = 0`; only produced by
/// [`RateMatrix::stationary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    /// Probability of state `s`.
    #[must_use]
    pub fn prob(&self, s: usize) -> f64 {
        self.pi[s]
    }

    /// Number of states.
    #[must_use]
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    /// Always false: stationary distributions are non-empty by construction.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// The probabilities as a slice.
    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }
}

/// A realized jump path of the switching chain on `[0, horizon]`.
///
/// `jump_times[0] = 0` and `states[0]` is the initial state; entry `k > 0`
/// records the k-th jump instant and the state entered there. The path is
/// right-continuous: `state_at(t)` is the state on `[jump_times[k],
/// jump_times[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingPath {
    jump_times: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

impl SwitchingPath {
    /// Jump instants, starting with 0.
    #[must_use]
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// States per interval, aligned with [`SwitchingPath::jump_times`].
    #[must_use]
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// End of the observation window.
    #[must_use]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of jumps (excluding the initial point).
    #[must_use]
    pub fn jump_count(&self) -> usize {
        self.jump_times.len() - 1
    }

    /// State occupied at time `t in [0, horizon]`.
    #[must_use]
    pub fn state_at(&self, t: f64) -> usize {
        assert!(t >= 0.0, "time must be nonnegative");
        let idx = self.jump_times.partition_point(|&tau| tau <= t);
        self.states[idx - 1]
    }

    /// Fraction of `[0, horizon]` spent in state `s`.
    #[must_use]
    pub fn occupation_fraction(&self, s: usize) -> f64 {
        let mut total = 0.0;
        for k in 0..self.states.len() {
            let start = self.jump_times[k];
            let end = self.jump_times.get(k + 1).copied().unwrap_or(self.horizon);
            if self.states[k] == s {
                total += end - start;
            }
        }
        total / self.horizon
    }

    /// Writes the path as CSV with header `t_jump,state`; states are printed
    /// 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_jump,state")?;
        for (t, s) in self.jump_times.iter().zip(&self.states) {
            writeln!(out, "{t},{}", s + 1)?;
        }
        Ok(())
    }

    /// Writes the CSV form of the path to `path`.
    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)?;
        out.flush()
    }
}
