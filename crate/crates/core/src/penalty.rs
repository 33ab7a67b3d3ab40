//! Penalty matrices for the four weighting regimes and hub/leaf inference.
//!
//! Class weights only depend on the source node of an edge: every entry of
//! row `i` is scaled by the weight of node `i`'s class.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{fit_gmm_1d, GaussianMixture1d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Hub,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassSource {
    Known,
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClassification {
    pub labels: Vec<NodeClass>,
    pub source: ClassSource,
    pub mixture: Option<GaussianMixture1d>,
    /// Set when inference fell back to the all-leaf labelling.
    pub degenerate: bool,
}

impl NodeClassification {
    pub fn known(labels: Vec<NodeClass>) -> Self {
        NodeClassification {
            labels,
            source: ClassSource::Known,
            mixture: None,
            degenerate: false,
        }
    }

    pub fn all_leaf(p: usize, source: ClassSource) -> Self {
        NodeClassification {
            labels: vec![NodeClass::Leaf; p],
            source,
            mixture: None,
            degenerate: true,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn hubs(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == NodeClass::Hub)
            .collect()
    }

    pub fn n_hubs(&self) -> usize {
        self.labels.iter().filter(|c| **c == NodeClass::Hub).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Lasso,
    Adaptive,
    Known,
    Inferred,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Lasso, Regime::Adaptive, Regime::Known, Regime::Inferred];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Lasso => "lasso",
            Regime::Adaptive => "adaptive",
            Regime::Known => "known",
            Regime::Inferred => "inferred",
        }
    }

    /// Whether the regime is built from an initial Lasso estimate.
    pub fn needs_init(&self) -> bool {
        matches!(self, Regime::Adaptive | Regime::Inferred)
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(Regime::Lasso),
            "adaptive" => Ok(Regime::Adaptive),
            "known" | "knwcl" | "known-classes" => Ok(Regime::Known),
            "inferred" | "infcl" | "inferred-classes" => Ok(Regime::Inferred),
            other => Err(Error::InvalidPenalty(format!("unknown regime `{other}`"))),
        }
    }
}

pub const DEFAULT_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub regime: Regime,
    /// Global level.
    pub rho: f64,
    /// Leaf weight over hub weight.
    pub ratio: f64,
    /// Rescale class weights so their mean over nodes is one.
    pub normalize: bool,
    /// Per-coefficient multipliers; all ones when absent.
    pub individual: Option<DMatrix<f64>>,
    /// Initial estimate for the adaptive and inferred-class regimes.
    pub init: Option<DMatrix<f64>>,
    /// Classification for the known-class regime.
    pub classes: Option<NodeClassification>,
    /// Seed for the mixture fit of the inferred-class regime.
    pub seed: u64,
}

impl PenaltySpec {
    pub fn new(regime: Regime, rho: f64) -> Self {
        PenaltySpec {
            regime,
            rho,
            ratio: DEFAULT_RATIO,
            normalize: true,
            individual: None,
            init: None,
            classes: None,
            seed: 0,
        }
    }

    pub fn lasso(rho: f64) -> Self {
        Self::new(Regime::Lasso, rho)
    }

    pub fn adaptive(rho: f64, init: DMatrix<f64>) -> Self {
        PenaltySpec {
            init: Some(init),
            ..Self::new(Regime::Adaptive, rho)
        }
    }

    pub fn known(rho: f64, classes: NodeClassification) -> Self {
        PenaltySpec {
            classes: Some(classes),
            ..Self::new(Regime::Known, rho)
        }
    }

    pub fn inferred(rho: f64, init: DMatrix<f64>) -> Self {
        PenaltySpec {
            init: Some(init),
            ..Self::new(Regime::Inferred, rho)
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::NonPositiveRho(self.rho));
        }
        if !(self.ratio > 1.0) || !self.ratio.is_finite() {
            return Err(Error::InvalidPenalty(format!(
                "leaf/hub ratio must exceed 1, got {}",
                self.ratio
            )));
        }
        let square = |m: &DMatrix<f64>, what: &str| {
            if m.shape() != (p, p) {
                Err(Error::Dimension(format!("{what} is {:?}, expected {p}x{p}", m.shape())))
            } else {
                Ok(())
            }
        };
        if let Some(ind) = &self.individual {
            square(ind, "individual weight matrix")?;
            if ind.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::InvalidPenalty("individual weights must be >= 0".into()));
            }
        }
        if let Some(init) = &self.init {
            square(init, "initial estimate")?;
        }
        if let Some(z) = &self.classes {
            if z.len() != p {
                return Err(Error::Dimension(format!("{} class labels for p = {p}", z.len())));
            }
        }
        Ok(())
    }
}

/// Per-coefficient penalties, already multiplied by `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyMatrix {
    pub weights: DMatrix<f64>,
    pub rho: f64,
}

impl PenaltyMatrix {
    /// Same weighting pattern at another global level.
    pub fn rescaled(&self, rho: f64) -> PenaltyMatrix {
        let factor = rho / self.rho;
        PenaltyMatrix {
            weights: self.weights.map(|w| if w.is_infinite() { w } else { w * factor }),
            rho,
        }
    }
}

/// Hub and leaf weights with the configured ratio. Normalized weights have
/// mean one over the `p` nodes.
pub fn class_weights(z: &NodeClassification, ratio: f64, normalize: bool) -> (f64, f64) {
    if !normalize {
        return (1.0, ratio);
    }
    let p = z.len() as f64;
    let hubs = z.n_hubs() as f64;
    let hub = p / (hubs + ratio * (p - hubs));
    (hub, ratio * hub)
}

/// Penalty pattern at `rho = 1` and the classification it used, if any.
pub fn resolve_pattern(
    spec: &PenaltySpec,
    p: usize,
) -> Result<(DMatrix<f64>, Option<NodeClassification>)> {
    spec.validate(p)?;
    let (mut base, classes) = match spec.regime {
        Regime::Lasso => (DMatrix::from_element(p, p, 1.0), None),
        Regime::Adaptive => {
            let init = spec.init.as_ref().ok_or(Error::MissingInit)?;
            let w = init.map(|a| if a == 0.0 { f64::INFINITY } else { (1.0 / a.abs()).max(1.0) });
            (w, None)
        }
        Regime::Known => {
            let z = spec.classes.as_ref().ok_or(Error::MissingClassification)?;
            (class_pattern(z, spec.ratio, spec.normalize), Some(z.clone()))
        }
        Regime::Inferred => {
            let init = spec.init.as_ref().ok_or(Error::MissingInit)?;
            let z = infer_classes(init, spec.seed)?;
            (class_pattern(&z, spec.ratio, spec.normalize), Some(z))
        }
    };
    if let Some(ind) = &spec.individual {
        base.zip_apply(ind, |w, r| {
            // an excluded coefficient stays excluded whatever its multiplier
            if !w.is_infinite() {
                *w *= r;
            }
        });
    }
    Ok((base, classes))
}

fn class_pattern(z: &NodeClassification, ratio: f64, normalize: bool) -> DMatrix<f64> {
    let (hub, leaf) = class_weights(z, ratio, normalize);
    let p = z.len();
    DMatrix::from_fn(p, p, |i, _| match z.labels[i] {
        NodeClass::Hub => hub,
        NodeClass::Leaf => leaf,
    })
}

pub fn build_penalty(spec: &PenaltySpec, p: usize) -> Result<PenaltyMatrix> {
    let (base, _) = resolve_pattern(spec, p)?;
    Ok(PenaltyMatrix {
        weights: base,
        rho: 1.0,
    }
    .rescaled(spec.rho))
}

pub fn row_l1_norms(a: &DMatrix<f64>) -> Vec<f64> {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum()).collect()
}

/// Clusters nodes by the l1-norm of their rows in `a0` and labels as hubs the
/// cluster whose rows have the larger mean absolute entry.
///
/// Equal norms, or a fit that puts every node in one cluster, yield the
/// all-leaf labelling with `degenerate` set.
pub fn infer_classes(a0: &DMatrix<f64>, seed: u64) -> Result<NodeClassification> {
    let p = a0.nrows();
    if a0.ncols() != p {
        return Err(Error::Dimension(format!("initial estimate is {:?}", a0.shape())));
    }
    let norms = row_l1_norms(a0);
    let (labels, mixture) = match fit_gmm_1d(&norms, seed) {
        Ok(fit) => fit,
        Err(Error::DegenerateInput) => {
            log::warn!("row norms of the initial estimate are all equal; labelling every node leaf");
            return Ok(NodeClassification::all_leaf(p, ClassSource::Inferred));
        }
        Err(e) => return Err(e),
    };

    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (i, &l) in labels.iter().enumerate() {
        sums[l] += norms[i];
        counts[l] += 1;
    }
    if counts.contains(&0) {
        log::warn!("mixture assigned every node to one component; labelling every node leaf");
        let mut z = NodeClassification::all_leaf(p, ClassSource::Inferred);
        z.mixture = Some(mixture);
        return Ok(z);
    }
    // mean |entry| of a class's row block is its mean row norm divided by p
    let mean_abs = [
        sums[0] / (counts[0] * p) as f64,
        sums[1] / (counts[1] * p) as f64,
    ];
    let hub_label = usize::from(mean_abs[1] > mean_abs[0]);
    let labels = labels
        .iter()
        .map(|&l| if l == hub_label { NodeClass::Hub } else { NodeClass::Leaf })
        .collect();
    Ok(NodeClassification {
        labels,
        source: ClassSource::Inferred,
        mixture: Some(mixture),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn known_classes_unnormalized() {
        let z = NodeClassification::known(vec![NodeClass::Hub, NodeClass::Leaf, NodeClass::Leaf]);
        let mut spec = PenaltySpec::known(0.1, z);
        spec.normalize = false;
        let pen = build_penalty(&spec, 3).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(pen.weights[(0, j)], 0.1, epsilon = 1e-15);
            assert_abs_diff_eq!(pen.weights[(1, j)], 0.2, epsilon = 1e-15);
            assert_abs_diff_eq!(pen.weights[(2, j)], 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn known_classes_normalized_mean_is_one() {
        let z = NodeClassification::known(vec![NodeClass::Hub, NodeClass::Leaf, NodeClass::Leaf]);
        let (hub, leaf) = class_weights(&z, 2.0, true);
        assert_abs_diff_eq!(leaf / hub, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!((hub + 2.0 * leaf) / 3.0, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn adaptive_weights() {
        let init = DMatrix::from_row_slice(2, 2, &[0.5, 4.0, 0.0, -0.25]);
        let pen = build_penalty(&PenaltySpec::adaptive(1.0, init), 2).unwrap();
        assert_eq!(pen.weights[(0, 0)], 2.0);
        assert_eq!(pen.weights[(0, 1)], 1.0);
        assert!(pen.weights[(1, 0)].is_infinite());
        assert_eq!(pen.weights[(1, 1)], 4.0);
    }

    #[test]
    fn missing_inputs() {
        assert_eq!(
            build_penalty(&PenaltySpec::new(Regime::Adaptive, 1.0), 2),
            Err(Error::MissingInit)
        );
        assert_eq!(
            build_penalty(&PenaltySpec::new(Regime::Inferred, 1.0), 2),
            Err(Error::MissingInit)
        );
        assert_eq!(
            build_penalty(&PenaltySpec::new(Regime::Known, 1.0), 2),
            Err(Error::MissingClassification)
        );
        assert_eq!(build_penalty(&PenaltySpec::lasso(0.0), 2), Err(Error::NonPositiveRho(0.0)));
        let mut spec = PenaltySpec::lasso(1.0);
        spec.ratio = 1.0;
        assert!(matches!(build_penalty(&spec, 2), Err(Error::InvalidPenalty(_))));
    }

    #[test]
    fn individual_weights_multiply() {
        let mut spec = PenaltySpec::lasso(0.5);
        spec.individual = Some(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]));
        let pen = build_penalty(&spec, 2).unwrap();
        assert_eq!(pen.weights, DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 1.5]));
    }

    #[test]
    fn row_norms() {
        assert_eq!(row_l1_norms(&DMatrix::zeros(2, 2)), vec![0.0, 0.0]);
        assert_eq!(row_l1_norms(&DMatrix::identity(3, 3)), vec![1.0; 3]);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        assert_eq!(row_l1_norms(&a), vec![3.0, 3.0]);
    }

    #[test]
    fn degenerate_inference_is_all_leaf() {
        for a0 in [DMatrix::zeros(4, 4), DMatrix::identity(4, 4)] {
            let z = infer_classes(&a0, 0).unwrap();
            assert!(z.degenerate);
            assert_eq!(z.n_hubs(), 0);
            assert_eq!(z.source, ClassSource::Inferred);
        }
    }

    #[test]
    fn heavy_rows_become_hubs() {
        let p = 8;
        let mut a0 = DMatrix::from_fn(p, p, |i, j| 0.01 * ((i * 7 + j * 3) % 5) as f64);
        for j in 0..p {
            a0[(2, j)] = 0.8;
            a0[(5, j)] = -0.6;
        }
        let z = infer_classes(&a0, 0).unwrap();
        assert_eq!(z.hubs(), vec![2, 5]);
        assert!(!z.degenerate);
    }
}
