//! Sentiment classes, multinomial logistic regression and the majority-class
//! baseline.
//!
//! The training objective is the mean multinomial cross-entropy plus
//! `λ/2 · ‖W‖²` over the non-bias weights, minimized with L-BFGS from a zero
//! start. Features are standardized with training-split statistics unless
//! disabled; the statistics travel with the model.

pub mod lbfgs;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use lbfgs::{LbfgsParams, Termination};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Rows per block in the data-parallel objective. Partial sums are reduced in
/// block order, so results do not depend on the thread count.
const BLOCK_ROWS: usize = 256;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("star rating {0} is not an integer in 1..=5")]
    InvalidStars(f64),
    #[error("training data contains a single class ({0}); at least two are required")]
    SingleClass(SentimentClass),
    #[error("dataset is empty")]
    Empty,
    #[error("feature width {found} does not match expected {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("objective became non-finite; features may need standardization")]
    NonFiniteLoss,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Negative,
    Neutral,
    Positive,
}

impl SentimentClass {
    /// Fixed class order used for weights, confusion matrices and tie-breaks.
    pub const ALL: [SentimentClass; 3] = [
        SentimentClass::Negative,
        SentimentClass::Neutral,
        SentimentClass::Positive,
    ];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
        }
    }
}

impl fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1–2 stars are negative, 3 neutral, 4–5 positive.
pub fn star_to_class(stars: f64) -> Result<SentimentClass, LearnError> {
    if stars.fract() != 0.0 || !(1.0..=5.0).contains(&stars) {
        return Err(LearnError::InvalidStars(stars));
    }
    Ok(match stars as u8 {
        1 | 2 => SentimentClass::Negative,
        3 => SentimentClass::Neutral,
        _ => SentimentClass::Positive,
    })
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "feature matrix shape");
        FeatureMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged feature rows");
            data.extend_from_slice(r);
        }
        FeatureMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<SentimentClass>,
    pub domain: String,
}

impl LabeledDataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<SentimentClass>,
        domain: impl Into<String>,
    ) -> Result<Self, LearnError> {
        if features.rows() != labels.len() {
            return Err(LearnError::LabelCountMismatch {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        if let Some(pos) = features.data.iter().position(|v| !v.is_finite()) {
            return Err(LearnError::NonFiniteFeature {
                row: pos / features.cols.max(1),
                col: pos % features.cols.max(1),
            });
        }
        Ok(LabeledDataset {
            features,
            labels,
            domain: domain.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> [usize; SentimentClass::COUNT] {
        class_counts(&self.labels)
    }

    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            domain: self.domain.clone(),
        }
    }
}

fn class_counts(labels: &[SentimentClass]) -> [usize; SentimentClass::COUNT] {
    let mut counts = [0; SentimentClass::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 strength on non-bias weights; `None` means `1/m`.
    pub l2_lambda: Option<f64>,
    pub max_iter: usize,
    pub tolerance: f64,
    pub memory_size: usize,
    pub standardize: bool,
    /// Recorded in the model; the optimizer itself is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: None,
            max_iter: 500,
            tolerance: 1e-5,
            memory_size: 10,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    /// Population statistics per column. Constant columns get unit scale.
    pub fn fit(x: &FeatureMatrix) -> Self {
        let (m, n) = (x.rows(), x.cols());
        let mut means = vec![0.0; n];
        for i in 0..m {
            means.iter_mut().zip(x.row(i)).for_each(|(a, v)| *a += v);
        }
        means.iter_mut().for_each(|a| *a /= m.max(1) as f64);
        let mut vars = vec![0.0; n];
        for i in 0..m {
            for ((a, v), mu) in vars.iter_mut().zip(x.row(i)).zip(&means) {
                *a += (v - mu) * (v - mu);
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = (v / m.max(1) as f64).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { means, stds }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), mu), sd) in out.iter_mut().zip(row).zip(&self.means).zip(&self.stds) {
            *o = (v - mu) / sd;
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> FeatureMatrix {
        let mut data = vec![0.0; x.data.len()];
        for i in 0..x.rows() {
            self.apply_row(x.row(i), &mut data[i * x.cols..(i + 1) * x.cols]);
        }
        FeatureMatrix::new(x.rows(), x.cols(), data)
    }
}

/// Regularized multinomial cross-entropy over `k` classes.
///
/// Parameters are laid out class-major: class `c` owns
/// `w[c·(n+1) .. (c+1)·(n+1)]` with the bias last.
pub struct SoftmaxObjective<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    k: usize,
    lambda: f64,
}

impl<'a> SoftmaxObjective<'a> {
    pub fn new(x: &'a FeatureMatrix, y: &'a [usize], k: usize, lambda: f64) -> Self {
        assert_eq!(x.rows(), y.len());
        assert!(y.iter().all(|&c| c < k));
        SoftmaxObjective { x, y, k, lambda }
    }

    pub fn dim(&self) -> usize {
        self.k * (self.x.cols() + 1)
    }

    /// Objective value; the gradient is written into `grad`.
    pub fn evaluate(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let (m, n, k) = (self.x.rows(), self.x.cols(), self.k);
        let stride = n + 1;
        let partials: Vec<(f64, Vec<f64>)> = (0..m.div_ceil(BLOCK_ROWS))
            .into_par_iter()
            .map(|b| {
                let mut loss = 0.0;
                let mut g = vec![0.0; w.len()];
                let mut scores = vec![0.0; k];
                for i in b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(m) {
                    let row = self.x.row(i);
                    affine_scores(w, row, k, &mut scores);
                    let lse = log_sum_exp(&scores);
                    loss += lse - scores[self.y[i]];
                    for c in 0..k {
                        let p = (scores[c] - lse).exp();
                        let r = p - if c == self.y[i] { 1.0 } else { 0.0 };
                        let gc = &mut g[c * stride..(c + 1) * stride];
                        gc[..n].iter_mut().zip(row).for_each(|(a, v)| *a += r * v);
                        gc[n] += r;
                    }
                }
                (loss, g)
            })
            .collect();

        grad.fill(0.0);
        let mut loss = 0.0;
        for (l, g) in partials {
            loss += l;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        let inv_m = 1.0 / m.max(1) as f64;
        loss *= inv_m;
        grad.iter_mut().for_each(|a| *a *= inv_m);
        let mut reg = 0.0;
        for c in 0..k {
            for j in 0..n {
                let idx = c * stride + j;
                reg += w[idx] * w[idx];
                grad[idx] += self.lambda * w[idx];
            }
        }
        loss + 0.5 * self.lambda * reg
    }
}

fn affine_scores(w: &[f64], row: &[f64], k: usize, out: &mut [f64]) {
    let stride = row.len() + 1;
    for (c, s) in out.iter_mut().enumerate().take(k) {
        let wc = &w[c * stride..(c + 1) * stride];
        *s = wc[row.len()] + wc.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(scores);
    scores.iter().map(|s| (s - lse).exp()).collect()
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_max_norm: f64,
    pub converged: bool,
    pub l2_lambda: f64,
    pub seed: u64,
    pub train_rows: usize,
    /// Objective at the start point and after every accepted step.
    pub loss_history: Vec<f64>,
    /// Digest of the configuration that produced the model, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub format_version: u32,
    pub class_order: Vec<SentimentClass>,
    pub n_features: usize,
    pub standardization: Option<Standardization>,
    /// `k × (n_features + 1)`, bias in the last column.
    pub weights: Vec<Vec<f64>>,
    pub training: TrainingMetadata,
}

/// Anything that assigns a class to a feature row.
pub trait Classifier {
    fn predict_row(&self, row: &[f64]) -> SentimentClass;

    fn predict(&self, x: &FeatureMatrix) -> Vec<SentimentClass> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}

impl LogRegModel {
    /// A model with all weights zero.
    pub fn zeros(n_features: usize) -> Self {
        LogRegModel {
            format_version: MODEL_FORMAT_VERSION,
            class_order: SentimentClass::ALL.to_vec(),
            n_features,
            standardization: None,
            weights: vec![vec![0.0; n_features + 1]; SentimentClass::COUNT],
            training: TrainingMetadata {
                iterations: 0,
                final_loss: 0.0,
                gradient_max_norm: 0.0,
                converged: false,
                l2_lambda: 0.0,
                seed: 0,
                train_rows: 0,
                loss_history: Vec::new(),
                config_digest: None,
            },
        }
    }

    fn scores_row(&self, row: &[f64], scratch: &mut Vec<f64>) -> [f64; SentimentClass::COUNT] {
        let x: &[f64] = match &self.standardization {
            Some(st) => {
                scratch.resize(row.len(), 0.0);
                st.apply_row(row, scratch);
                scratch
            }
            None => row,
        };
        let mut out = [0.0; SentimentClass::COUNT];
        for (s, w) in out.iter_mut().zip(&self.weights) {
            *s = w[self.n_features] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    fn check_width(&self, x: &FeatureMatrix) -> Result<(), LearnError> {
        if x.cols() != self.n_features {
            return Err(LearnError::WidthMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Affine class scores before the softmax.
    pub fn decision_function(
        &self,
        x: &FeatureMatrix,
    ) -> Result<Vec<[f64; SentimentClass::COUNT]>, LearnError> {
        self.check_width(x)?;
        let mut scratch = Vec::new();
        Ok((0..x.rows())
            .map(|i| self.scores_row(x.row(i), &mut scratch))
            .collect())
    }

    pub fn predict_proba(
        &self,
        x: &FeatureMatrix,
    ) -> Result<Vec<[f64; SentimentClass::COUNT]>, LearnError> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|s| {
                let p = softmax(&s);
                [p[0], p[1], p[2]]
            })
            .collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<SentimentClass>, LearnError> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|s| SentimentClass::ALL[argmax(&s)])
            .collect())
    }
}

impl Classifier for LogRegModel {
    fn predict_row(&self, row: &[f64]) -> SentimentClass {
        let s = self.scores_row(row, &mut Vec::new());
        SentimentClass::ALL[argmax(&s)]
    }
}

pub fn train(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<LogRegModel, LearnError> {
    if ds.is_empty() {
        return Err(LearnError::Empty);
    }
    let counts = ds.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(LearnError::SingleClass(ds.labels[0]));
    }
    if cfg.memory_size == 0 || cfg.max_iter == 0 || cfg.tolerance <= 0.0 {
        return Err(LearnError::InvalidConfig(
            "memory_size, max_iter and tolerance must be positive".into(),
        ));
    }
    let m = ds.len();
    let n = ds.features.cols();
    let lambda = cfg.l2_lambda.unwrap_or(1.0 / m as f64);
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(LearnError::InvalidConfig(format!("l2_lambda {lambda}")));
    }

    let standardization = cfg.standardize.then(|| Standardization::fit(&ds.features));
    let scaled;
    let x = match &standardization {
        Some(st) => {
            scaled = st.apply(&ds.features);
            &scaled
        }
        None => &ds.features,
    };
    let y: Vec<usize> = ds.labels.iter().map(|l| l.index()).collect();
    let k = SentimentClass::COUNT;
    let objective = SoftmaxObjective::new(x, &y, k, lambda);

    let params = LbfgsParams {
        memory_size: cfg.memory_size,
        max_iter: cfg.max_iter,
        tolerance: cfg.tolerance,
        ..LbfgsParams::default()
    };
    let result = lbfgs::minimize(
        |w, g| objective.evaluate(w, g),
        vec![0.0; objective.dim()],
        &params,
    );
    if result.termination == Termination::NonFinite || !result.value.is_finite() {
        return Err(LearnError::NonFiniteLoss);
    }
    if result.termination == Termination::LineSearchFailed {
        log::warn!(
            "line search stalled after {} iterations (gradient max-norm {:.3e})",
            result.iterations,
            result.gradient_norm
        );
    }

    let weights = result.x.chunks(n + 1).map(<[f64]>::to_vec).collect();
    Ok(LogRegModel {
        format_version: MODEL_FORMAT_VERSION,
        class_order: SentimentClass::ALL.to_vec(),
        n_features: n,
        standardization,
        weights,
        training: TrainingMetadata {
            iterations: result.iterations,
            final_loss: result.value,
            gradient_max_norm: result.gradient_norm,
            converged: result.termination == Termination::Converged,
            l2_lambda: lambda,
            seed: cfg.seed,
            train_rows: m,
            loss_history: result.history,
            config_digest: None,
        },
    })
}

/// Predicts the most frequent training class for every input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityClassifier {
    pub class: SentimentClass,
}

impl Classifier for MajorityClassifier {
    fn predict_row(&self, _row: &[f64]) -> SentimentClass {
        self.class
    }
}

pub fn majority_baseline(
    train_labels: &[SentimentClass],
) -> Result<MajorityClassifier, LearnError> {
    if train_labels.is_empty() {
        return Err(LearnError::Empty);
    }
    let counts = class_counts(train_labels);
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Ok(MajorityClassifier {
        class: SentimentClass::ALL[best],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentClass::*;

    #[test]
    fn star_mapping() {
        assert_eq!(star_to_class(1.0).unwrap(), Negative);
        assert_eq!(star_to_class(2.0).unwrap(), Negative);
        assert_eq!(star_to_class(3.0).unwrap(), Neutral);
        assert_eq!(star_to_class(4.0).unwrap(), Positive);
        assert_eq!(star_to_class(5.0).unwrap(), Positive);
        for bad in [0.0, 6.0, 2.5, f64::NAN, -1.0] {
            assert!(star_to_class(bad).is_err());
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LogRegModel::zeros(2);
        let x = FeatureMatrix::from_rows(&[vec![1.0, -3.0], vec![0.0, 5.0]]);
        for p in m.predict_proba(&x).unwrap() {
            for v in p {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        // all tied: earliest class wins
        assert_eq!(m.predict(&x).unwrap(), vec![Negative, Negative]);
    }

    #[test]
    fn width_mismatch() {
        let m = LogRegModel::zeros(2);
        let x = FeatureMatrix::from_rows(&[vec![1.0]]);
        assert!(matches!(
            m.predict(&x),
            Err(LearnError::WidthMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn constant_score_shift_leaves_predictions_unchanged() {
        let mut m = LogRegModel::zeros(2);
        m.weights = vec![
            vec![1.0, -2.0, 0.5],
            vec![0.3, 0.3, 0.0],
            vec![-1.0, 2.0, 0.1],
        ];
        let x = FeatureMatrix::from_rows(&[vec![1.0, 1.0], vec![-2.0, 0.5], vec![0.0, 3.0]]);
        let before = m.predict(&x).unwrap();
        let p_before = m.predict_proba(&x).unwrap();
        for w in &mut m.weights {
            w[2] += 7.25;
        }
        assert_eq!(m.predict(&x).unwrap(), before);
        for (a, b) in p_before.iter().zip(m.predict_proba(&x).unwrap()) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-12);
            }
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn majority_rules() {
        assert_eq!(
            majority_baseline(&[Positive, Positive, Negative])
                .unwrap()
                .class,
            Positive
        );
        assert_eq!(
            majority_baseline(&[Positive, Negative]).unwrap().class,
            Negative
        );
        assert!(matches!(majority_baseline(&[]), Err(LearnError::Empty)));
    }

    #[test]
    fn automotive_star_distribution_is_positive_majority() {
        let mut labels = Vec::new();
        for (stars, count) in [
            (1.0, 19_688),
            (2.0, 8_944),
            (3.0, 13_645),
            (4.0, 31_621),
            (5.0, 114_486),
        ] {
            labels.extend(std::iter::repeat_n(star_to_class(stars).unwrap(), count));
        }
        assert_eq!(class_counts(&labels), [28_632, 13_645, 146_107]);
        assert_eq!(majority_baseline(&labels).unwrap().class, Positive);
    }

    fn separable_toy() -> LabeledDataset {
        // Two clouds on either side of x0 + x1 = 0, margin at least 1.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.4 - 2.0;
            rows.push(vec![t + 1.5, 1.0 - t * 0.5]);
            labels.push(Positive);
            rows.push(vec![t - 1.5, -1.0 - t * 0.5]);
            labels.push(Negative);
        }
        LabeledDataset::new(FeatureMatrix::from_rows(&rows), labels, "toy").unwrap()
    }

    #[test]
    fn separable_toy_is_learned_exactly() {
        let ds = separable_toy();
        // margin oracle: every point satisfies label * (x0 + x1) >= 1
        for i in 0..ds.len() {
            let s = ds.features.row(i).iter().sum::<f64>();
            let sign = if ds.labels[i] == Positive { 1.0 } else { -1.0 };
            assert!(sign * s >= 1.0);
        }
        let model = train(&ds, &TrainConfig::default()).unwrap();
        assert_eq!(model.predict(&ds.features).unwrap(), ds.labels);
        assert!(model.training.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = LabeledDataset::new(
            FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]),
            vec![Neutral, Neutral],
            "d",
        )
        .unwrap();
        assert!(matches!(
            train(&ds, &TrainConfig::default()),
            Err(LearnError::SingleClass(Neutral))
        ));
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let err = LabeledDataset::new(
            FeatureMatrix::from_rows(&[vec![1.0, f64::INFINITY]]),
            vec![Neutral],
            "d",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            LearnError::NonFiniteFeature { row: 0, col: 1 }
        ));
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let ds = separable_toy();
        let a = train(&ds, &TrainConfig::default()).unwrap();
        let b = train(&ds, &TrainConfig::default()).unwrap();
        let bits = |m: &LogRegModel| -> Vec<u64> {
            m.weights.iter().flatten().map(|w| w.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn model_json_round_trip() {
        let model = train(&separable_toy(), &TrainConfig::default()).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: LogRegModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(
            v["class_order"],
            serde_json::json!(["negative", "neutral", "positive"])
        );
        assert_eq!(v["weights"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn standardization_reapplied_at_predict_time() {
        let ds = separable_toy();
        let model = train(&ds, &TrainConfig::default()).unwrap();
        let st = model.standardization.as_ref().unwrap();
        let scaled = st.apply(&ds.features);
        let mut raw = model.clone();
        raw.standardization = None;
        assert_eq!(
            raw.predict(&scaled).unwrap(),
            model.predict(&ds.features).unwrap()
        );
        // Predicting twice is idempotent.
        assert_eq!(
            model.predict(&ds.features).unwrap(),
            model.predict(&ds.features).unwrap()
        );
    }
}
