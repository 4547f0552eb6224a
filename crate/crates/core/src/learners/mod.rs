//! Base learners behind one fit / predict surface.
//!
//! Every family predicts the probability of the infected class (label 1).
//! Fitting is deterministic given the spec (including its seed) and the
//! training data.

mod boost;
mod forest;
mod knn;
mod logreg;
mod nb;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

pub use boost::{BoostParams, Booster, RegNode};
pub use forest::{Forest, ForestParams, MaxFeatures};
pub use knn::{Knn, KnnParams, KnnWeighting};
pub use logreg::{
    logreg_gradient, logreg_hessian, logreg_loss, newton_direction, LogisticRegression,
    LogregParams,
};
pub use nb::{GaussianNb, NbParams};
pub use svm::{platt_fit, rbf_kernel, smo_solve, Platt, SmoSolution, Svm, SvmParams};
pub use tree::{DecisionTree, Node, TreeParams};

/// Feature matrix with binary labels (1 = infected).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(invalid(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(invalid("empty dataset"));
        }
        let d = features[0].len();
        for (i, r) in features.iter().enumerate() {
            if r.len() != d {
                return Err(invalid(format!("row {i} has {} features, expected {d}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("row {i} has non-finite features")));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(invalid(format!("label {l} not in {{0, 1}}")));
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.n_positive();
        p > 0 && p < self.n()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// SHA-256 over shape, feature bits and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for r in &self.features {
            for v in r {
                h.update(v.to_le_bytes());
            }
        }
        h.update(&self.labels);
        hex::encode(h.finalize())
    }
}

/// Hyperparameters per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    BoostedTrees(BoostParams),
    SvmRbf(SvmParams),
    GaussianNb(NbParams),
    Knn(KnnParams),
    Logreg(LogregParams),
}

impl Hyperparams {
    pub fn family_name(&self) -> &'static str {
        match self {
            Hyperparams::DecisionTree(_) => "decision_tree",
            Hyperparams::RandomForest(_) => "random_forest",
            Hyperparams::BoostedTrees(_) => "boosted_trees",
            Hyperparams::SvmRbf(_) => "svm_rbf",
            Hyperparams::GaussianNb(_) => "gaussian_nb",
            Hyperparams::Knn(_) => "knn",
            Hyperparams::Logreg(_) => "logreg",
        }
    }
}

/// A learner family, its hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub seed: u64,
    #[serde(flatten)]
    pub params: Hyperparams,
}

impl LearnerSpec {
    pub fn new(params: Hyperparams, seed: u64) -> Self {
        Self { seed, params }
    }

    /// Model identifier used in OOF matrices and selection reports.
    pub fn name(&self) -> &'static str {
        self.params.family_name()
    }

    /// All seven families with default hyperparameters.
    pub fn default_pool(seed: u64) -> Vec<LearnerSpec> {
        [
            Hyperparams::DecisionTree(TreeParams::default()),
            Hyperparams::RandomForest(ForestParams::default()),
            Hyperparams::BoostedTrees(BoostParams::default()),
            Hyperparams::SvmRbf(SvmParams::default()),
            Hyperparams::GaussianNb(NbParams::default()),
            Hyperparams::Knn(KnnParams::default()),
            Hyperparams::Logreg(LogregParams::default()),
        ]
        .into_iter()
        .enumerate()
        .map(|(i, p)| LearnerSpec::new(p, crate::seed::derive_seed(seed, i as u64)))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(invalid(format!("{}: {m}", self.name())));
        match &self.params {
            Hyperparams::DecisionTree(p) => p.validate().or_else(|e| bad(&e)),
            Hyperparams::RandomForest(p) => {
                if p.n_trees == 0 {
                    return bad("n_trees must be positive");
                }
                p.tree.validate().or_else(|e| bad(&e))
            }
            Hyperparams::BoostedTrees(p) => {
                if !(p.learning_rate > 0.0) || !(p.l2_lambda >= 0.0) || p.max_depth == 0 {
                    return bad("learning_rate > 0, l2_lambda >= 0, max_depth >= 1 required");
                }
                Ok(())
            }
            Hyperparams::SvmRbf(p) => {
                if !(p.c > 0.0) || !(p.tol > 0.0) || p.gamma.is_some_and(|g| !(g > 0.0)) {
                    return bad("c > 0, tol > 0 and gamma > 0 required");
                }
                Ok(())
            }
            Hyperparams::GaussianNb(p) => {
                if !(p.var_smoothing >= 0.0) {
                    return bad("var_smoothing must be >= 0");
                }
                Ok(())
            }
            Hyperparams::Knn(p) => {
                if p.k == 0 {
                    return bad("k must be positive");
                }
                Ok(())
            }
            Hyperparams::Logreg(p) => {
                if !(p.l2 >= 0.0) || p.max_iter == 0 || !(p.tol > 0.0) {
                    return bad("l2 >= 0, max_iter >= 1 and tol > 0 required");
                }
                Ok(())
            }
        }
    }
}

/// Fitted parameters per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Fitted {
    DecisionTree(DecisionTree),
    RandomForest(Forest),
    BoostedTrees(Booster),
    SvmRbf(Svm),
    GaussianNb(GaussianNb),
    Knn(Knn),
    Logreg(LogisticRegression),
}

/// A fitted learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    #[serde(flatten)]
    pub fitted: Fitted,
    pub spec: LearnerSpec,
    pub n_features: usize,
    pub train_fingerprint: String,
    /// Convergence notes (SMO / Newton iteration budgets).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BaseModel {
    pub fn name(&self) -> &'static str {
        self.spec.name()
    }

    pub fn predict_proba(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        predict_proba(self, features)
    }
}

pub fn fit(spec: &LearnerSpec, data: &LabeledDataset) -> Result<BaseModel> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let fitted = match &spec.params {
        Hyperparams::DecisionTree(p) => Fitted::DecisionTree(DecisionTree::fit(p, data)?),
        Hyperparams::RandomForest(p) => Fitted::RandomForest(Forest::fit(p, data, spec.seed)?),
        Hyperparams::BoostedTrees(p) => Fitted::BoostedTrees(Booster::fit(p, data)?),
        Hyperparams::SvmRbf(p) => {
            let m = Svm::fit(p, data)?;
            if !m.converged {
                warnings.push(format!("SMO stopped after {} iterations without reaching tol", m.iterations));
            }
            Fitted::SvmRbf(m)
        }
        Hyperparams::GaussianNb(p) => Fitted::GaussianNb(GaussianNb::fit(p, data)?),
        Hyperparams::Knn(p) => Fitted::Knn(Knn::fit(p, data)?),
        Hyperparams::Logreg(p) => {
            let m = LogisticRegression::fit(p, data)?;
            if !m.converged {
                warnings.push(format!(
                    "Newton stopped after {} iterations with gradient norm {:e}",
                    m.iterations, m.grad_norm
                ));
            }
            Fitted::Logreg(m)
        }
    };
    Ok(BaseModel {
        fitted,
        spec: spec.clone(),
        n_features: data.dim(),
        train_fingerprint: data.fingerprint(),
        warnings,
    })
}

/// Probability of the infected class for each row.
pub fn predict_proba(model: &BaseModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    for r in features {
        if r.len() != model.n_features {
            return Err(Error::DimensionMismatch {
                expected: model.n_features,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite feature value"));
        }
    }
    let p = match &model.fitted {
        Fitted::DecisionTree(m) => m.predict(features),
        Fitted::RandomForest(m) => m.predict(features),
        Fitted::BoostedTrees(m) => m.predict(features),
        Fitted::SvmRbf(m) => m.predict(features),
        Fitted::GaussianNb(m) => m.predict(features),
        Fitted::Knn(m) => m.predict(features),
        Fitted::Logreg(m) => m.predict(features),
    };
    Ok(p)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn require_both_classes(data: &LabeledDataset, who: &str) -> Result<()> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass(format!("{who} needs both classes in training data")));
    }
    Ok(())
}
