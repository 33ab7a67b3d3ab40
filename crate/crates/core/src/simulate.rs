//! Hub-structured random networks, VAR(1) trajectories and the
//! irrepresentability audit.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, TimeCourseMatrix};
use crate::error::{Error, Result};
use crate::moments::EmpiricalMoments;
use crate::penalty::{NodeClass, NodeClassification};
use crate::solver::SINGULAR_PIVOT_RATIO;

pub type Edge = (usize, usize);

/// Independent RNG stream for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Number of edges; `2p` when absent.
    pub edges: Option<usize>,
    pub hub_prob: f64,
    pub hub_to_leaf: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            edges: None,
            hub_prob: 0.1,
            hub_to_leaf: 0.85,
        }
    }
}

impl GraphConfig {
    pub fn edge_count(&self, p: usize) -> usize {
        self.edges.unwrap_or(2 * p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HubGraph {
    /// Sorted `(source, target)` pairs.
    pub edges: Vec<Edge>,
    pub classes: NodeClassification,
}

const MAX_CLASS_DRAWS: usize = 10_000;

/// Draws node classes and places `K` distinct directed edges, all leaving
/// from hubs.
///
/// Class draws whose hubs cannot emit `K` distinct edges (including the
/// zero-hub draw) are discarded and redrawn. Each edge is typed hub-to-leaf
/// with probability `hub_to_leaf`, otherwise hub-to-hub (self-loops allowed),
/// with endpoints uniform within the type; duplicates are redrawn.
pub fn sample_hub_graph<R: Rng + ?Sized>(
    p: usize,
    cfg: &GraphConfig,
    rng: &mut R,
) -> Result<HubGraph> {
    let k = cfg.edge_count(p);
    if p == 0 || k > p * p {
        return Err(Error::InfeasibleEdgeCount {
            k,
            placeable: p * p,
        });
    }
    if !(0.0..=1.0).contains(&cfg.hub_prob) || !(0.0..=1.0).contains(&cfg.hub_to_leaf) {
        return Err(Error::Dimension("graph probabilities must lie in [0, 1]".into()));
    }

    let mut hubs: Vec<usize> = Vec::new();
    let mut leaves: Vec<usize> = Vec::new();
    let mut feasible = false;
    for _ in 0..MAX_CLASS_DRAWS {
        hubs.clear();
        leaves.clear();
        for i in 0..p {
            if rng.random::<f64>() < cfg.hub_prob {
                hubs.push(i);
            } else {
                leaves.push(i);
            }
        }
        if !hubs.is_empty() && hubs.len() * p >= k {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(Error::InfeasibleEdgeCount {
            k,
            placeable: hubs.len() * p,
        });
    }

    let to_leaf_cap = hubs.len() * leaves.len();
    let to_hub_cap = hubs.len() * hubs.len();
    let mut to_leaf = 0usize;
    let mut to_hub = 0usize;
    let mut edges = BTreeSet::new();
    while edges.len() < k {
        let hub_to_leaf = rng.random::<f64>() < cfg.hub_to_leaf;
        if (hub_to_leaf && to_leaf == to_leaf_cap) || (!hub_to_leaf && to_hub == to_hub_cap) {
            continue;
        }
        let src = hubs[rng.random_range(0..hubs.len())];
        let dst = if hub_to_leaf {
            leaves[rng.random_range(0..leaves.len())]
        } else {
            hubs[rng.random_range(0..hubs.len())]
        };
        if edges.insert((src, dst)) {
            if hub_to_leaf {
                to_leaf += 1;
            } else {
                to_hub += 1;
            }
        }
    }

    let mut labels = vec![NodeClass::Leaf; p];
    for &h in &hubs {
        labels[h] = NodeClass::Hub;
    }
    Ok(HubGraph {
        edges: edges.into_iter().collect(),
        classes: NodeClassification::known(labels),
    })
}

/// Coefficients uniform on `[-1, -0.2] U [0.2, 1]` on the edges, zero elsewhere.
pub fn sample_coefficients<R: Rng + ?Sized>(edges: &[Edge], p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, p);
    for &(i, j) in edges {
        let magnitude = rng.random_range(0.2..=1.0);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        a[(i, j)] = sign * magnitude;
    }
    a
}

/// Largest eigenvalue modulus of `a`.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

const DRAWS_PER_GRAPH: usize = 1000;
const MAX_GRAPHS: usize = 100;

/// Graph and coefficients, redrawing coefficients (and after
/// `DRAWS_PER_GRAPH` failures the graph) until the spectral radius is below 1
/// when `stationary` is set.
pub fn sample_network<R: Rng + ?Sized>(
    p: usize,
    cfg: &GraphConfig,
    stationary: bool,
    rng: &mut R,
) -> Result<(HubGraph, DMatrix<f64>)> {
    for _ in 0..MAX_GRAPHS {
        let graph = sample_hub_graph(p, cfg, rng)?;
        for _ in 0..DRAWS_PER_GRAPH {
            let a = sample_coefficients(&graph.edges, p, rng);
            if !stationary || spectral_radius(&a) < 1.0 {
                return Ok((graph, a));
            }
        }
    }
    Err(Error::NoStationaryDraw(MAX_GRAPHS * DRAWS_PER_GRAPH))
}

/// Raw `(n+1) x p` trajectory `X_t = X_{t-1} A + e_t` with a centered Gaussian
/// start and Gaussian noise, both of variance `sigma2`.
pub fn sample_var1_raw<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    n: usize,
    sigma2: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::Dimension(format!("coefficient matrix is {:?}", a.shape())));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Dimension(format!("noise variance must be positive, got {sigma2}")));
    }
    let sd = sigma2.sqrt();
    let mut x = DMatrix::zeros(n + 1, p);
    for j in 0..p {
        x[(0, j)] = sd * rng.sample::<f64, _>(StandardNormal);
    }
    let at = a.transpose();
    for t in 1..=n {
        let prev = DVector::from_iterator(p, x.row(t - 1).iter().copied());
        let mean = &at * prev;
        for j in 0..p {
            x[(t, j)] = mean[j] + sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(x)
}

/// Standardized trajectory, as fed to the inference pipeline.
pub fn sample_var1<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    n: usize,
    sigma2: f64,
    rng: &mut R,
) -> Result<TimeCourseMatrix> {
    let raw = sample_var1_raw(a, n, sigma2, rng)?;
    standardize(&raw, None, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub p: usize,
    /// Transitions; the data has `n + 1` time points.
    pub n: usize,
    pub graph: GraphConfig,
    pub sigma2: f64,
    /// Only accept coefficient draws with spectral radius below 1.
    pub stationary: bool,
}

impl SimulationConfig {
    pub fn new(p: usize, n: usize) -> Self {
        SimulationConfig {
            p,
            n,
            graph: GraphConfig::default(),
            sigma2: 0.1,
            stationary: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedInstance {
    pub a_true: DMatrix<f64>,
    pub edges: Vec<Edge>,
    pub classes: NodeClassification,
    pub x: TimeCourseMatrix,
    pub seed: u64,
    pub replicate: u64,
}

/// Draws replicate `replicate` of a simulation seeded with `seed`.
pub fn simulate_instance(cfg: &SimulationConfig, seed: u64, replicate: u64) -> Result<SimulatedInstance> {
    let mut rng = replicate_rng(seed, replicate);
    let (graph, a_true) = sample_network(cfg.p, &cfg.graph, cfg.stationary, &mut rng)?;
    let x = sample_var1(&a_true, cfg.n, cfg.sigma2, &mut rng)?;
    Ok(SimulatedInstance {
        a_true,
        edges: graph.edges,
        classes: graph.classes,
        x,
        seed,
        replicate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Irrepresentability {
    pub fraction_failing: f64,
    /// Whether the condition holds for each column.
    pub holds: Vec<bool>,
}

/// Checks, column by column, `max |S_{I^c,I} S_{I,I}^-1 sign(A_{I,k})| <= 1`
/// where `I` is the true support of column `k`.
pub fn check_irrepresentability(m: &EmpiricalMoments, a_true: &DMatrix<f64>) -> Result<Irrepresentability> {
    let p = m.p;
    if a_true.shape() != (p, p) {
        return Err(Error::Dimension(format!("true matrix is {:?}", a_true.shape())));
    }
    let mut holds = Vec::with_capacity(p);
    for k in 0..p {
        let support: Vec<usize> = (0..p).filter(|&i| a_true[(i, k)] != 0.0).collect();
        if support.is_empty() || support.len() == p {
            holds.push(true);
            continue;
        }
        let q = support.len();
        let block = DMatrix::from_fn(q, q, |a, b| m.s[(support[a], support[b])]);
        let max_diag = (0..q).map(|a| block[(a, a)]).fold(0.0f64, f64::max);
        let chol = block.cholesky().ok_or(Error::SingularSupportBlock(k))?;
        let l = chol.l_dirty();
        if (0..q).any(|a| !(l[(a, a)] * l[(a, a)] > SINGULAR_PIVOT_RATIO * max_diag)) {
            return Err(Error::SingularSupportBlock(k));
        }
        let signs = DVector::from_iterator(q, support.iter().map(|&i| a_true[(i, k)].signum()));
        let x = chol.solve(&signs);
        let mut worst = 0.0f64;
        for j in (0..p).filter(|j| a_true[(*j, k)] == 0.0) {
            let w: f64 = support.iter().enumerate().map(|(a, &i)| m.s[(j, i)] * x[a]).sum();
            worst = worst.max(w.abs());
        }
        holds.push(worst <= 1.0);
    }
    let failing = holds.iter().filter(|h| !**h).count();
    Ok(Irrepresentability {
        fraction_failing: failing as f64 / p as f64,
        holds,
    })
}
