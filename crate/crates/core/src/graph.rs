//! Undirected contact graphs: deterministic regular (circulant) graphs,
//! seeded Erdos-Renyi samples, spectral radius via power iteration, and a
//! plain-text edge-list interchange format.
//!
//! Every `Graph` is connected, simple (no self-loops, no multi-edges) and
//! undirected by construction; constructors reject anything else.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of fresh seeds tried when an Erdos-Renyi sample comes out
/// disconnected (or empty) before giving up.
pub const ER_RETRY_CAP: u64 = 100;

/// Default convergence tolerance for [`Graph::spectral_radius`].
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Iteration cap for the power method.
const POWER_ITER_CAP: usize = 100_000;

/// Errors from graph construction, analysis and I/O.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("degree {d} out of range for {n} nodes (need 0 < d < n)")]
    DegreeRange { n: usize, d: usize },
    #[error("no {d}-regular graph on {n} nodes exists (n*d must be even)")]
    Parity { n: usize, d: usize },
    #[error("edge probability must satisfy 0 < p <= 1, got {p}")]
    Probability { p: f64 },
    #[error(
        "no connected Erdos-Renyi sample for n = {n}, p = {p} after {attempts} attempts \
         (seeds {first_seed}..={last_seed})"
    )]
    SamplingExhausted {
        n: usize,
        p: f64,
        attempts: u64,
        first_seed: u64,
        last_seed: u64,
    },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no edges")]
    NoEdges,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node index {i} out of range (n = {n})")]
    NodeRange { i: usize, n: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("malformed edge list: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A connected simple undirected graph stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds the circulant d-regular graph on n nodes: node `i` is adjacent
    /// to `i +- 1, ..., i +- d/2 (mod n)`, plus the antipode `i + n/2` when
    /// `d` is odd (which forces `n` even).
    ///
    /// Fails when `d` is out of `0 < d < n`, when `n*d` is odd (no regular
    /// graph exists), or when the circulant is disconnected (only `d = 1`
    /// with `n > 2`, a perfect matching).
    pub fn regular(n: usize, d: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if d == 0 || d >= n {
            return Err(GraphError::DegreeRange { n, d });
        }
        if n % 2 == 1 && d % 2 == 1 {
            return Err(GraphError::Parity { n, d });
        }
        let mut neighbors = vec![Vec::with_capacity(d); n];
        for offset in 1..=d / 2 {
            for i in 0..n {
                let j = (i + offset) % n;
                neighbors[i].push(j as u32);
                neighbors[j].push(i as u32);
            }
        }
        if d % 2 == 1 {
            let half = n / 2;
            for i in 0..half {
                let j = i + half;
                neighbors[i].push(j as u32);
                neighbors[j].push(i as u32);
            }
        }
        let graph = Self::finish(neighbors)?;
        debug_assert!(graph.neighbors.iter().all(|ns| ns.len() == d));
        Ok(graph)
    }

    /// Samples a connected Erdos-Renyi graph G(n, p): each unordered pair is
    /// an edge independently with probability `p`, drawn from a ChaCha
    /// stream seeded with `seed`. Disconnected (or empty) samples are
    /// rejected and redrawn with `seed + 1`, `seed + 2`, ..., up to
    /// [`ER_RETRY_CAP`] attempts; the same `(n, p, seed)` always returns the
    /// same graph.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(GraphError::Probability { p });
        }
        for attempt in 0..ER_RETRY_CAP {
            let attempt_seed = seed.wrapping_add(attempt);
            let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
            let mut neighbors = vec![Vec::new(); n];
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(p) {
                        neighbors[i].push(j as u32);
                        neighbors[j].push(i as u32);
                    }
                }
            }
            match Self::finish(neighbors) {
                Ok(graph) => return Ok(graph),
                Err(GraphError::Disconnected | GraphError::NoEdges) => continue,
                Err(other) => return Err(other),
            }
        }
        Err(GraphError::SamplingExhausted {
            n,
            p,
            attempts: ER_RETRY_CAP,
            first_seed: seed,
            last_seed: seed.wrapping_add(ER_RETRY_CAP - 1),
        })
    }

    /// Builds a graph from an explicit undirected edge list (each edge given
    /// once, either orientation). Rejects self-loops, duplicate edges,
    /// out-of-range endpoints, empty edge sets and disconnected results.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            for k in [i, j] {
                if k >= n {
                    return Err(GraphError::NodeRange { i: k, n });
                }
            }
            if neighbors[i].contains(&(j as u32)) {
                let (a, b) = (i.min(j), i.max(j));
                return Err(GraphError::DuplicateEdge { i: a, j: b });
            }
            neighbors[i].push(j as u32);
            neighbors[j].push(i as u32);
        }
        Self::finish(neighbors)
    }

    /// Validates and canonicalizes neighbor lists (sorted, connected,
    /// non-empty edge set).
    fn finish(mut neighbors: Vec<Vec<u32>>) -> Result<Self, GraphError> {
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let graph = Graph {
            n: neighbors.len(),
            neighbors,
        };
        if graph.edge_count() == 0 {
            return Err(GraphError::NoEdges);
        }
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    /// Number of nodes.
    #[must_use]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    #[must_use]
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted neighbor list of node `i` (the hot loop of the integrator
    /// iterates these directly).
    #[must_use]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Degree of node `i`.
    #[must_use]
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Minimum degree over all nodes.
    #[must_use]
    pub fn min_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Maximum degree over all nodes.
    #[must_use]
    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Mean degree `2|E| / n`.
    #[must_use]
    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.n as f64
    }

    /// Whether `{i, j}` is an edge.
    #[must_use]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&(j as u32)).is_ok()
    }

    /// All edges as `(i, j)` with `i < j`, lexicographically sorted.
    #[must_use]
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if (i as u32) < j {
                    out.push((i as u32, j));
                }
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[i] {
                let j = j as usize;
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }

    /// Largest adjacency eigenvalue `lambda_1` and the accompanying Perron
    /// vector (entrywise positive, normalized to sum 1).
    ///
    /// Power iteration runs on `A + I` so the dominant eigenvalue
    /// `lambda_1 + 1` strictly dominates in modulus even for bipartite
    /// graphs (where `|lambda_min| = lambda_1`); the shift is subtracted
    /// before returning. Convergence is certified by the symmetric residual
    /// bound: when `||(A+I)u - mu*u||_2 <= tol` for a unit vector `u`, some
    /// eigenvalue of `A + I` lies within `tol` of `mu`.
    pub fn spectral_radius(&self, tol: f64) -> Result<(f64, Vec<f64>), GraphError> {
        assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
        let n = self.n;
        let mut u = vec![(n as f64).sqrt().recip(); n];
        let mut y = vec![0.0; n];
        for _ in 0..POWER_ITER_CAP {
            for i in 0..n {
                let mut acc = u[i];
                for &j in &self.neighbors[i] {
                    acc += u[j as usize];
                }
                y[i] = acc;
            }
            let mu: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
            let residual: f64 = u
                .iter()
                .zip(&y)
                .map(|(&ui, &yi)| (yi - mu * ui).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= tol {
                let total: f64 = y.iter().sum();
                let perron: Vec<f64> = y.iter().map(|v| v / total).collect();
                return Ok((mu - 1.0, perron));
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (ui, yi) in u.iter_mut().zip(&y) {
                *ui = yi / norm;
            }
        }
        Err(GraphError::NonConvergence(POWER_ITER_CAP))
    }

    /// Reads a graph from the plain edge-list format: a header line `n m`
    /// followed by `m` lines `i j` with 0-based endpoints.
    pub fn read_edge_list<P: AsRef<Path>>(path: P) -> Result<Self, GraphError> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| GraphError::Parse("missing header line".into()))??;
        let mut parts = header.split_whitespace();
        let n: usize = parse_field(parts.next(), "node count", &header)?;
        let m: usize = parse_field(parts.next(), "edge count", &header)?;
        if parts.next().is_some() {
            return Err(GraphError::Parse(format!(
                "header has trailing tokens: {header:?}"
            )));
        }
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let i: usize = parse_field(parts.next(), "edge endpoint", &line)?;
            let j: usize = parse_field(parts.next(), "edge endpoint", &line)?;
            if parts.next().is_some() {
                return Err(GraphError::Parse(format!(
                    "edge line has trailing tokens: {line:?}"
                )));
            }
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(GraphError::Parse(format!(
                "header declares {m} edges but {} were listed",
                edges.len()
            )));
        }
        Self::from_edge_list(n, &edges)
    }

    /// Writes the graph in the edge-list format accepted by
    /// [`Graph::read_edge_list`] (edges sorted, `i < j`).
    pub fn write_edge_list<P: AsRef<Path>>(&self, path: P) -> Result<(), GraphError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {}", self.n, self.edge_count())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        out.flush()?;
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(
    token: Option<&str>,
    what: &str,
    line: &str,
) -> Result<T, GraphError> {
    token
        .ok_or_else(|| GraphError::Parse(format!("missing {what} in line {line:?}")))?
        .parse()
        .map_err(|_| GraphError::Parse(format!("invalid {what} in line {line:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> Graph {
        Graph::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn regular_graph_is_d_regular_and_connected() {
        let g = Graph::regular(100, 10).unwrap();
        assert_eq!(g.node_count(), 100);
        assert_eq!(g.edge_count(), 500);
        for i in 0..100 {
            assert_eq!(g.degree(i), 10);
        }
        assert_eq!(g.min_degree(), 10);
        assert_eq!(g.max_degree(), 10);
    }

    #[test]
    fn regular_complete_graphs() {
        // d = n-1 yields the complete graph for both parities of n.
        for n in [4usize, 5, 8, 9] {
            let g = Graph::regular(n, n - 1).unwrap();
            assert_eq!(g.edge_count(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn regular_rejects_odd_nd() {
        assert!(matches!(
            Graph::regular(5, 3),
            Err(GraphError::Parity { n: 5, d: 3 })
        ));
    }

    #[test]
    fn regular_rejects_degree_out_of_range() {
        assert!(matches!(
            Graph::regular(6, 6),
            Err(GraphError::DegreeRange { .. })
        ));
        assert!(matches!(
            Graph::regular(6, 0),
            Err(GraphError::DegreeRange { .. })
        ));
    }

    #[test]
    fn regular_d1_is_k2_or_disconnected() {
        assert_eq!(Graph::regular(2, 1).unwrap().edge_count(), 1);
        // On n > 2 nodes a 1-regular graph is a perfect matching.
        assert!(matches!(
            Graph::regular(6, 1),
            Err(GraphError::Disconnected)
        ));
    }

    #[test]
    fn spectral_radius_of_regular_graph_is_d() {
        for (n, d) in [(100, 10), (100, 25), (12, 4)] {
            let g = Graph::regular(n, d).unwrap();
            let (lambda, perron) = g.spectral_radius(SPECTRAL_TOL).unwrap();
            assert!(
                (lambda - d as f64).abs() <= 1e-8,
                "lambda1({n},{d}) = {lambda}"
            );
            // Perron vector of a regular graph is uniform.
            for &v in &perron {
                assert!((v - 1.0 / n as f64).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn spectral_radius_of_complete_graph() {
        let g = Graph::regular(5, 4).unwrap();
        let (lambda, _) = g.spectral_radius(SPECTRAL_TOL).unwrap();
        assert!((lambda - 4.0).abs() <= 1e-8);
    }

    #[test]
    fn spectral_radius_of_bipartite_path() {
        // Path on 3 nodes: spectrum {-sqrt2, 0, sqrt2}; plain power iteration
        // on A stalls here, the A + I shift must handle it.
        let (lambda, perron) = path3().spectral_radius(SPECTRAL_TOL).unwrap();
        assert!((lambda - 2f64.sqrt()).abs() <= 1e-8, "lambda = {lambda}");
        // Eigenvector (1, sqrt2, 1) normalized to sum 1.
        let scale = 2.0 + 2f64.sqrt();
        for (got, want) in perron
            .iter()
            .zip([1.0 / scale, 2f64.sqrt() / scale, 1.0 / scale])
        {
            assert!((got - want).abs() <= 1e-7, "perron {perron:?}");
        }
    }

    #[test]
    fn star_min_degree_and_spectrum() {
        // Star with center 0 and 4 leaves: lambda1 = sqrt(4) = 2.
        let g = Graph::from_edge_list(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(g.min_degree(), 1);
        assert_eq!(g.max_degree(), 4);
        let (lambda, _) = g.spectral_radius(SPECTRAL_TOL).unwrap();
        assert!((lambda - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn erdos_renyi_is_reproducible() {
        let a = Graph::erdos_renyi(60, 0.3, 42).unwrap();
        let b = Graph::erdos_renyi(60, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let c = Graph::erdos_renyi(60, 0.3, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn erdos_renyi_edge_count_within_binomial_range() {
        // |E| ~ Binomial(4950, 0.7): mean 3465, sd ~= 32.2; 4 sigma.
        let g = Graph::erdos_renyi(100, 0.7, 1).unwrap();
        let e = g.edge_count() as f64;
        assert!((3336.0..=3594.0).contains(&e), "edge count {e}");
    }

    #[test]
    fn erdos_renyi_p1_is_complete() {
        let g = Graph::erdos_renyi(6, 1.0, 7).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn erdos_renyi_rejects_bad_p() {
        assert!(matches!(
            Graph::erdos_renyi(10, 0.0, 1),
            Err(GraphError::Probability { .. })
        ));
        assert!(matches!(
            Graph::erdos_renyi(10, 1.5, 1),
            Err(GraphError::Probability { .. })
        ));
    }

    #[test]
    fn erdos_renyi_sparse_retries_until_connected() {
        // Mean degree ~2.3; isolated-vertex samples must be resampled.
        let g = Graph::erdos_renyi(30, 0.08, 5).unwrap();
        assert_eq!(g.node_count(), 30);
        assert!(g.min_degree() >= 1);
    }

    #[test]
    fn edge_frequency_matches_p() {
        // Each pair is an edge with probability p. At n = 40, p = 0.5 the
        // sample is connected with overwhelming probability, so the
        // connectivity resampling doesn't skew the marginal edge frequency.
        // (On tiny graphs it would: a 2-node sample is either K2 or
        // rejected, so the edge appears with frequency 1.)
        let trials = 400u32;
        let mut hits = 0u32;
        for seed in 0..trials {
            let g = Graph::erdos_renyi(40, 0.5, u64::from(seed) * 1000).unwrap();
            if g.has_edge(0, 1) {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / f64::from(trials);
        // 3 * sqrt(0.25 / 400) = 0.075.
        assert!((freq - 0.5).abs() < 0.075, "frequency {freq}");
    }

    #[test]
    fn from_edge_list_rejects_invalid_input() {
        assert!(matches!(
            Graph::from_edge_list(3, &[(0, 0)]),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::from_edge_list(3, &[(0, 5)]),
            Err(GraphError::NodeRange { i: 5, n: 3 })
        ));
        assert!(matches!(
            Graph::from_edge_list(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge { i: 0, j: 1 })
        ));
        assert!(matches!(
            Graph::from_edge_list(4, &[(0, 1), (2, 3)]),
            Err(GraphError::Disconnected)
        ));
        assert!(matches!(
            Graph::from_edge_list(2, &[]),
            Err(GraphError::NoEdges)
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.txt");
        let g = Graph::erdos_renyi(25, 0.3, 9).unwrap();
        g.write_edge_list(&path).unwrap();
        let h = Graph::read_edge_list(&path).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn edge_list_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "3 2\n0 1\n").unwrap();
        assert!(matches!(
            Graph::read_edge_list(&path),
            Err(GraphError::Parse(_))
        ));
        std::fs::write(&path, "3 x\n0 1\n1 2\n").unwrap();
        assert!(matches!(
            Graph::read_edge_list(&path),
            Err(GraphError::Parse(_))
        ));
    }

    /// Applies a node relabeling and returns the relabeled graph.
    fn permuted(g: &Graph, perm: &[usize]) -> Graph {
        let edges: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|&(i, j)| (perm[i as usize], perm[j as usize]))
            .collect();
        Graph::from_edge_list(g.node_count(), &edges).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn regular_invariants(n in 4usize..40, half_d in 1usize..3) {
            let d = (2 * half_d).min(n - 1);
            let g = Graph::regular(n, d).unwrap();
            // Symmetry and zero diagonal.
            for i in 0..n {
                prop_assert!(!g.has_edge(i, i));
                for &j in g.neighbors(i) {
                    prop_assert!(g.has_edge(j as usize, i));
                }
            }
            prop_assert_eq!(g.edge_count() * 2, n * d);
        }

        #[test]
        fn spectral_sandwich_on_er(n in 5usize..28, p in 0.3f64..0.9, seed in 0u64..1000) {
            let g = Graph::erdos_renyi(n, p, seed).unwrap();
            let (lambda, perron) = g.spectral_radius(SPECTRAL_TOL).unwrap();
            let dmin = g.min_degree() as f64;
            let dmax = g.max_degree() as f64;
            prop_assert!(lambda >= g.mean_degree() - 1e-8);
            prop_assert!(lambda >= dmin - 1e-8);
            prop_assert!(lambda <= dmax + 1e-8);
            let total: f64 = perron.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!(perron.iter().all(|&v| v > 0.0));
        }

        #[test]
        fn relabeling_preserves_spectral_radius(n in 5usize..24, p in 0.35f64..0.9, seed in 0u64..500, shift in 1usize..7) {
            let g = Graph::erdos_renyi(n, p, seed).unwrap();
            // Cyclic relabeling i -> i + shift (mod n).
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let h = permuted(&g, &perm);
            let (lg, _) = g.spectral_radius(SPECTRAL_TOL).unwrap();
            let (lh, _) = h.spectral_radius(SPECTRAL_TOL).unwrap();
            prop_assert!((lg - lh).abs() <= 2.0 * 1e-8, "{} vs {}", lg, lh);
        }
    }
}
