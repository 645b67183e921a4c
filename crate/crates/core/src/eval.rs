//! Metrics and experiment protocols: F1, weighted F1, in-domain train/test,
//! one-vs-rest transfer and the Wilcoxon signed-rank test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::learn::{
    majority_baseline, train, Classifier, LabeledDataset, LearnError, SentimentClass, TrainConfig,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Largest number of nonzero differences for which the exact null
/// distribution is used.
pub const EXACT_WILCOXON_MAX: usize = 20;

/// Absolute differences closer than this are treated as tied, and
/// differences smaller than it as zero. Weighted-F1 inputs are printed to a
/// handful of digits, so this only absorbs subtraction round-off.
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("split ratio {0} must lie in (0, 1)")]
    InvalidSplit(f64),
    #[error("split of domain '{domain}' leaves the test set empty")]
    EmptyTestSet { domain: String },
    #[error("split of domain '{domain}' leaves class {class} absent from training; use a stratified split")]
    ClassAbsentFromTrain {
        domain: String,
        class: SentimentClass,
    },
    #[error("transfer evaluation needs at least two domains, got {0}")]
    TooFewDomains(usize),
    #[error("domain '{0}' appears more than once")]
    DuplicateDomain(String),
    #[error("all paired differences are zero")]
    AllDifferencesZero,
    #[error("pair {index} contains a non-finite value")]
    NonFinitePair { index: usize },
    #[error("the two reports share no (train, test) cells")]
    NoCommonCells,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// `k × k` counts, rows are true classes and columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(k: usize) -> Self {
        ConfusionCounts {
            k,
            counts: vec![0; k * k],
        }
    }

    /// Panics on ragged or non-square input.
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let k = rows.len();
        let mut counts = Vec::with_capacity(k * k);
        for r in rows {
            assert_eq!(r.len(), k, "confusion matrix must be square");
            counts.extend_from_slice(r);
        }
        ConfusionCounts { k, counts }
    }

    pub fn from_predictions(truth: &[SentimentClass], predicted: &[SentimentClass]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut cm = ConfusionCounts::new(SentimentClass::COUNT);
        for (t, p) in truth.iter().zip(predicted) {
            cm.record(t.index(), p.index());
        }
        cm
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.k + predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// True-class count ‖cᵢ‖.
    pub fn support(&self, i: usize) -> u64 {
        (0..self.k).map(|j| self.get(i, j)).sum()
    }

    pub fn predicted(&self, i: usize) -> u64 {
        (0..self.k).map(|j| self.get(j, i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.k.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn precision(&self, i: usize) -> f64 {
        ratio(self.get(i, i), self.predicted(i))
    }

    pub fn recall(&self, i: usize) -> f64 {
        ratio(self.get(i, i), self.support(i))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_per_class(cm: &ConfusionCounts, class: usize) -> f64 {
    let p = cm.precision(class);
    let r = cm.recall(class);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Support-weighted mean of per-class F1.
pub fn f1_weighted(cm: &ConfusionCounts) -> Result<f64, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let sum: f64 = (0..cm.classes())
        .map(|i| cm.support(i) as f64 * f1_per_class(cm, i))
        .sum();
    Ok(sum / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// The first sample tends to be larger.
    Greater,
    Less,
    TwoSided,
}

impl Alternative {
    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two_sided",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            "two_sided" | "twosided" => Ok(Alternative::TwoSided),
            other => Err(format!(
                "unknown alternative '{other}' (greater, less, two_sided)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub exact: bool,
}

/// Ranks of `|d|`, doubled so tied averages stay integral. Input must be
/// free of zeros.
fn doubled_ranks(diffs: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && diffs[order[end]].abs() - diffs[order[end - 1]].abs() <= TIE_EPSILON
        {
            end += 1;
        }
        // 1-based ranks start+1 ..= end; doubled average is their sum of ends.
        let r2 = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = r2;
        }
        tie_sizes.push((end - start) as u64);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Exact tail probabilities `P(W ≥ w)` and `P(W ≤ w)` under the sign-flip
/// null, via the distribution of subset sums of the doubled ranks.
fn exact_tails(ranks: &[u64], observed: u64) -> (f64, f64) {
    let max: u64 = ranks.iter().sum();
    let mut ways = vec![0u64; max as usize + 1];
    ways[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let w = ways[s];
            if w != 0 {
                ways[s + r] += w;
            }
        }
        reach += r;
    }
    let total = (1u64 << ranks.len()) as f64;
    let ge: u64 = ways[observed as usize..].iter().sum();
    let le: u64 = ways[..=observed as usize].iter().sum();
    (ge as f64 / total, le as f64 / total)
}

/// Wilcoxon signed-rank test on `a − b`.
///
/// Zero differences are dropped and tied magnitudes share their average
/// rank. Up to [`EXACT_WILCOXON_MAX`] nonzero differences the p-value is
/// exact over all sign assignments; above that a tie-corrected normal
/// approximation is used.
pub fn wilcoxon_signed_rank(
    pairs: &[(f64, f64)],
    alternative: Alternative,
) -> Result<WilcoxonResult, EvalError> {
    if let Some(index) = pairs
        .iter()
        .position(|(a, b)| !a.is_finite() || !b.is_finite())
    {
        return Err(EvalError::NonFinitePair { index });
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| d.abs() > TIE_EPSILON)
        .collect();
    if diffs.is_empty() {
        return Err(EvalError::AllDifferencesZero);
    }
    let m = diffs.len();
    let (ranks, ties) = doubled_ranks(&diffs);
    let w2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    let (greater, less, exact) = if m <= EXACT_WILCOXON_MAX {
        let (ge, le) = exact_tails(&ranks, w2);
        (ge, le, true)
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term;
        let z = (statistic - mean) / var.sqrt();
        let normal = Normal::standard();
        (normal.sf(z), normal.cdf(z), false)
    };
    let p_value = match alternative {
        Alternative::Greater => greater,
        Alternative::Less => less,
        Alternative::TwoSided => (2.0 * greater.min(less)).min(1.0),
    };
    Ok(WilcoxonResult {
        statistic,
        p_value,
        n: m,
        exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Fraction of each domain used for training in the in-domain protocol.
    pub split_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
    pub train: TrainConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            split_ratio: 0.8,
            seed: 0,
            stratified: false,
            train: TrainConfig::default(),
        }
    }
}

impl EvalConfig {
    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Indomain,
    Transfer,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Indomain => "indomain",
            Protocol::Transfer => "transfer",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: SentimentClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub train_domain: String,
    pub test_domain: String,
    pub f1_weighted: f64,
    pub per_class: Vec<ClassMetrics>,
    /// True-class counts in class order.
    pub support: Vec<u64>,
    pub baseline_f1: f64,
    pub baseline_class: SentimentClass,
    pub confusion: Vec<Vec<u64>>,
}

impl CellReport {
    fn build(
        train_domain: &str,
        test_domain: &str,
        cm: &ConfusionCounts,
        baseline: &ConfusionCounts,
        baseline_class: SentimentClass,
    ) -> Result<Self, EvalError> {
        let per_class = SentimentClass::ALL
            .iter()
            .map(|&c| ClassMetrics {
                class: c,
                precision: cm.precision(c.index()),
                recall: cm.recall(c.index()),
                f1: f1_per_class(cm, c.index()),
                support: cm.support(c.index()),
            })
            .collect();
        Ok(CellReport {
            train_domain: train_domain.to_string(),
            test_domain: test_domain.to_string(),
            f1_weighted: f1_weighted(cm)?,
            per_class,
            support: (0..cm.classes()).map(|i| cm.support(i)).collect(),
            baseline_f1: f1_weighted(baseline)?,
            baseline_class,
            confusion: cm.rows(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub method_a: String,
    pub method_b: String,
    pub alternative: Alternative,
    #[serde(rename = "W")]
    pub statistic: f64,
    pub p: f64,
    pub n: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub method: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub split_ratio: f64,
    pub stratified: bool,
    pub config_digest: String,
    pub cells: Vec<CellReport>,
    #[serde(default)]
    pub tests: Vec<TestRecord>,
}

pub const DEFAULT_METHOD: &str = "wordnet2vec";

impl EvalReport {
    fn new(protocol: Protocol, cfg: &EvalConfig, cells: Vec<CellReport>) -> Self {
        EvalReport {
            format_version: REPORT_FORMAT_VERSION,
            method: DEFAULT_METHOD.to_string(),
            protocol,
            seed: cfg.seed,
            split_ratio: cfg.split_ratio,
            stratified: cfg.stratified,
            config_digest: cfg.digest(),
            cells,
            tests: Vec::new(),
        }
    }

    pub fn cell(&self, train_domain: &str, test_domain: &str) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.train_domain == train_domain && c.test_domain == test_domain)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save_json(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| EvalError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// One cell per line, heatmap-ready.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("train_domain\ttest_domain\tf1_weighted\tbaseline_f1");
        for c in SentimentClass::ALL {
            out.push_str(&format!("\tf1_{c}\tsupport_{c}"));
        }
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}",
                cell.train_domain, cell.test_domain, cell.f1_weighted, cell.baseline_f1
            ));
            for m in &cell.per_class {
                out.push_str(&format!("\t{:.6}\t{}", m.f1, m.support));
            }
            out.push('\n');
        }
        out
    }
}

fn split_indices(
    ds: &LabeledDataset,
    cfg: &EvalConfig,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0) {
        return Err(if cfg.split_ratio == 1.0 {
            EvalError::EmptyTestSet {
                domain: ds.domain.clone(),
            }
        } else {
            EvalError::InvalidSplit(cfg.split_ratio)
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train_idx, mut test_idx) = (Vec::new(), Vec::new());
    if cfg.stratified {
        for class in SentimentClass::ALL {
            let mut members: Vec<usize> =
                (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
            members.shuffle(&mut rng);
            let cut = (members.len() as f64 * cfg.split_ratio).round() as usize;
            // keep one of each present class on both sides where possible
            let cut = if members.len() >= 2 {
                cut.clamp(1, members.len() - 1)
            } else {
                cut
            };
            train_idx.extend_from_slice(&members[..cut]);
            test_idx.extend_from_slice(&members[cut..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
    } else {
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng);
        let cut = (ds.len() as f64 * cfg.split_ratio).round() as usize;
        train_idx = order[..cut].to_vec();
        test_idx = order[cut..].to_vec();
    }
    if test_idx.is_empty() {
        return Err(EvalError::EmptyTestSet {
            domain: ds.domain.clone(),
        });
    }
    Ok((train_idx, test_idx))
}

/// Trains the model and the majority baseline on a seeded split of one
/// domain and evaluates both on the held-out part.
pub fn run_indomain(ds: &LabeledDataset, cfg: &EvalConfig) -> Result<CellReport, EvalError> {
    let (train_idx, test_idx) = split_indices(ds, cfg)?;
    let train_set = ds.select(&train_idx);
    let test_set = ds.select(&test_idx);
    let present = ds.class_counts();
    let in_train = train_set.class_counts();
    if let Some(class) = SentimentClass::ALL
        .into_iter()
        .find(|c| present[c.index()] > 0 && in_train[c.index()] == 0)
    {
        return Err(EvalError::ClassAbsentFromTrain {
            domain: ds.domain.clone(),
            class,
        });
    }
    let model = train(&train_set, &cfg.train_config())?;
    let baseline = majority_baseline(&train_set.labels)?;
    let cm =
        ConfusionCounts::from_predictions(&test_set.labels, &model.predict(&test_set.features)?);
    let bcm =
        ConfusionCounts::from_predictions(&test_set.labels, &baseline.predict(&test_set.features));
    CellReport::build(&ds.domain, &ds.domain, &cm, &bcm, baseline.class)
}

fn check_unique_domains(domains: &[LabeledDataset]) -> Result<(), EvalError> {
    let mut seen = BTreeSet::new();
    for d in domains {
        if !seen.insert(d.domain.as_str()) {
            return Err(EvalError::DuplicateDomain(d.domain.clone()));
        }
    }
    Ok(())
}

/// In-domain evaluation for every domain; one diagonal cell each.
pub fn indomain_report(
    domains: &[LabeledDataset],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    check_unique_domains(domains)?;
    let cells = domains
        .par_iter()
        .map(|d| run_indomain(d, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::new(Protocol::Indomain, cfg, cells))
}

/// Trains once per domain on all of it and evaluates on every other domain.
/// Cells are ordered by train domain, then test domain, in input order.
pub fn run_transfer(domains: &[LabeledDataset], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    if domains.len() < 2 {
        return Err(EvalError::TooFewDomains(domains.len()));
    }
    check_unique_domains(domains)?;
    let tc = cfg.train_config();
    let trained = domains
        .par_iter()
        .map(|d| Ok((train(d, &tc)?, majority_baseline(&d.labels)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let pairs: Vec<(usize, usize)> = (0..domains.len())
        .flat_map(|i| {
            (0..domains.len())
                .filter(move |&j| j != i)
                .map(move |j| (i, j))
        })
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (model, baseline) = &trained[i];
            let test = &domains[j];
            let cm =
                ConfusionCounts::from_predictions(&test.labels, &model.predict(&test.features)?);
            let bcm =
                ConfusionCounts::from_predictions(&test.labels, &baseline.predict(&test.features));
            CellReport::build(&domains[i].domain, &test.domain, &cm, &bcm, baseline.class)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::new(Protocol::Transfer, cfg, cells))
}

/// Paired test of `a`'s weighted F1 against `b`'s over the cells both
/// reports contain.
pub fn compare_reports(
    a: &EvalReport,
    b: &EvalReport,
    alternative: Alternative,
) -> Result<TestRecord, EvalError> {
    let b_cells: BTreeMap<(&str, &str), f64> = b
        .cells
        .iter()
        .map(|c| {
            (
                (c.train_domain.as_str(), c.test_domain.as_str()),
                c.f1_weighted,
            )
        })
        .collect();
    let pairs: Vec<(f64, f64)> = a
        .cells
        .iter()
        .filter_map(|c| {
            b_cells
                .get(&(c.train_domain.as_str(), c.test_domain.as_str()))
                .map(|&fb| (c.f1_weighted, fb))
        })
        .collect();
    if pairs.is_empty() {
        return Err(EvalError::NoCommonCells);
    }
    let r = wilcoxon_signed_rank(&pairs, alternative)?;
    Ok(TestRecord {
        method_a: a.method.clone(),
        method_b: b.method.clone(),
        alternative,
        statistic: r.statistic,
        p: r.p_value,
        n: r.n,
        exact: r.exact,
    })
}

/// Paired test of a report's weighted F1 against its own baseline column.
pub fn compare_to_baseline(
    report: &EvalReport,
    alternative: Alternative,
) -> Result<TestRecord, EvalError> {
    let pairs: Vec<(f64, f64)> = report
        .cells
        .iter()
        .map(|c| (c.f1_weighted, c.baseline_f1))
        .collect();
    if pairs.is_empty() {
        return Err(EvalError::NoCommonCells);
    }
    let r = wilcoxon_signed_rank(&pairs, alternative)?;
    Ok(TestRecord {
        method_a: report.method.clone(),
        method_b: "majority_baseline".to_string(),
        alternative,
        statistic: r.statistic,
        p: r.p_value,
        n: r.n,
        exact: r.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::FeatureMatrix;
    use proptest::prelude::*;
    use rand::Rng;
    use SentimentClass::*;

    #[test]
    fn hand_computed_f1() {
        let cm = ConfusionCounts::from_rows(&[vec![5, 1], vec![2, 4]]);
        assert!((cm.precision(0) - 5.0 / 7.0).abs() < 1e-15);
        assert!((cm.recall(0) - 5.0 / 6.0).abs() < 1e-15);
        assert!((f1_per_class(&cm, 0) - 10.0 / 13.0).abs() < 1e-15);
        assert!((f1_per_class(&cm, 1) - 8.0 / 11.0).abs() < 1e-15);
        let w = f1_weighted(&cm).unwrap();
        assert!((w - (10.0 / 13.0 + 8.0 / 11.0) / 2.0).abs() < 1e-15);
        assert!((w - 0.748252).abs() < 1e-6);
    }

    #[test]
    fn degenerate_f1_cases() {
        let diag = ConfusionCounts::from_rows(&[vec![3, 0, 0], vec![0, 4, 0], vec![0, 0, 1]]);
        for i in 0..3 {
            assert_eq!(f1_per_class(&diag, i), 1.0);
        }
        assert_eq!(f1_weighted(&diag).unwrap(), 1.0);
        // class 1 is never predicted
        let cm = ConfusionCounts::from_rows(&[vec![2, 0], vec![3, 0]]);
        assert_eq!(f1_per_class(&cm, 1), 0.0);
        // class 2 of 3 is absent everywhere
        let cm = ConfusionCounts::from_rows(&[vec![4, 0, 0], vec![0, 0, 0], vec![0, 0, 0]]);
        assert_eq!(f1_per_class(&cm, 1), 0.0);
        assert_eq!(f1_weighted(&cm).unwrap(), 1.0);
        assert!(matches!(
            f1_weighted(&ConfusionCounts::new(3)),
            Err(EvalError::EmptyConfusion)
        ));
    }

    fn permuted(cm: &ConfusionCounts, perm: &[usize]) -> ConfusionCounts {
        let k = cm.classes();
        let mut rows = vec![vec![0; k]; k];
        for i in 0..k {
            for j in 0..k {
                rows[perm[i]][perm[j]] = cm.get(i, j);
            }
        }
        ConfusionCounts::from_rows(&rows)
    }

    proptest! {
        #[test]
        fn weighted_f1_bounded_and_order_free(
            k in 1usize..6,
            cells in proptest::collection::vec(0u64..50, 25),
            shift in 0usize..5,
        ) {
            let rows: Vec<Vec<u64>> = (0..k).map(|i| cells[i * 5..i * 5 + k].to_vec()).collect();
            let cm = ConfusionCounts::from_rows(&rows);
            prop_assume!(cm.total() > 0);
            let w = f1_weighted(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
            let perm: Vec<usize> = (0..k).map(|i| (i + shift) % k).collect();
            let w2 = f1_weighted(&permuted(&cm, &perm)).unwrap();
            prop_assert!((w - w2).abs() < 1e-12);
        }
    }

    /// Literal enumeration of all 2^m sign assignments.
    fn enumeration_p(pairs: &[(f64, f64)], alt: Alternative) -> f64 {
        let d: Vec<f64> = pairs
            .iter()
            .map(|(a, b)| a - b)
            .filter(|d| *d != 0.0)
            .collect();
        let m = d.len();
        let mut mags: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let rank = |v: f64| {
            let first = mags.iter().position(|&x| x == v).unwrap() + 1;
            let last = mags.iter().rposition(|&x| x == v).unwrap() + 1;
            (first + last) as f64 / 2.0
        };
        let ranks: Vec<f64> = d.iter().map(|x| rank(x.abs())).collect();
        let obs: f64 = d
            .iter()
            .zip(&ranks)
            .filter(|(x, _)| **x > 0.0)
            .map(|(_, r)| r)
            .sum();
        let (mut ge, mut le) = (0u64, 0u64);
        for mask in 0u64..(1 << m) {
            let w: f64 = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            if w >= obs - 1e-9 {
                ge += 1;
            }
            if w <= obs + 1e-9 {
                le += 1;
            }
        }
        let t = (1u64 << m) as f64;
        match alt {
            Alternative::Greater => ge as f64 / t,
            Alternative::Less => le as f64 / t,
            Alternative::TwoSided => (2.0 * (ge as f64 / t).min(le as f64 / t)).min(1.0),
        }
    }

    #[test]
    fn all_positive_seven() {
        let pairs: Vec<(f64, f64)> = (1..=7).map(|i| (1.0 + i as f64 * 0.1, 1.0)).collect();
        let r = wilcoxon_signed_rank(&pairs, Alternative::Greater).unwrap();
        assert_eq!(r.p_value, 1.0 / 128.0);
        assert_eq!(r.statistic, 28.0);
        assert!(r.exact);
        let r = wilcoxon_signed_rank(&pairs, Alternative::Less).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn symmetric_differences_two_sided_is_one() {
        let pairs = [(1.0, 0.0), (0.0, 1.0), (2.0, 0.0), (0.0, 2.0)];
        let r = wilcoxon_signed_rank(&pairs, Alternative::TwoSided).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_and_errors() {
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0)], Alternative::Greater),
            Err(EvalError::AllDifferencesZero)
        ));
        assert!(matches!(
            wilcoxon_signed_rank(&[(f64::NAN, 1.0)], Alternative::Greater),
            Err(EvalError::NonFinitePair { index: 0 })
        ));
        let r = wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 1.0)], Alternative::Greater).unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.p_value, 0.5);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let m = rng.random_range(1..=12);
            // small integer grid forces ties and zeros
            let pairs: Vec<(f64, f64)> = (0..m)
                .map(|_| (rng.random_range(-4i32..=4) as f64, 0.0))
                .collect();
            if pairs.iter().all(|p| p.0 == 0.0) {
                continue;
            }
            for alt in [
                Alternative::Greater,
                Alternative::Less,
                Alternative::TwoSided,
            ] {
                let got = wilcoxon_signed_rank(&pairs, alt).unwrap().p_value;
                assert!(
                    (got - enumeration_p(&pairs, alt)).abs() < 1e-12,
                    "{pairs:?} {alt}"
                );
            }
        }
    }

    #[test]
    fn greater_is_less_of_swapped() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let m = rng.random_range(1..=30);
            let pairs: Vec<(f64, f64)> = (0..m)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
            let g = wilcoxon_signed_rank(&pairs, Alternative::Greater).unwrap();
            let l = wilcoxon_signed_rank(&swapped, Alternative::Less).unwrap();
            assert!((g.p_value - l.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_approximation_above_threshold() {
        let pairs: Vec<(f64, f64)> = (1..=30).map(|i| (i as f64, 0.0)).collect();
        let r = wilcoxon_signed_rank(&pairs, Alternative::Greater).unwrap();
        assert!(!r.exact);
        assert_eq!(r.statistic, 465.0);
        // z = (465 - 232.5) / sqrt(2363.75)
        let z: f64 = 232.5 / 2363.75f64.sqrt();
        assert!((r.p_value - Normal::standard().sf(z)).abs() < 1e-15);
        assert!(r.p_value < 1e-5);
    }

    /// Two clusters along feature 0, separated by a wide gap.
    fn separable_domain(name: &str, m: usize, seed: u64, flip: bool) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..m {
            let pos = i % 3 != 0;
            let centre = if pos ^ flip { 3.0 } else { -3.0 };
            rows.push(vec![
                centre + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(if pos { Positive } else { Negative });
        }
        LabeledDataset::new(FeatureMatrix::from_rows(&rows), labels, name).unwrap()
    }

    #[test]
    fn indomain_on_separable_data() {
        let ds = separable_domain("a", 200, 1, false);
        let cfg = EvalConfig::default();
        let cell = run_indomain(&ds, &cfg).unwrap();
        assert!(cell.f1_weighted >= 0.95, "{}", cell.f1_weighted);
        assert!(cell.baseline_f1 < cell.f1_weighted);
        assert_eq!(cell.support.iter().sum::<u64>(), 40);
        assert_eq!(run_indomain(&ds, &cfg).unwrap(), cell);
    }

    #[test]
    fn split_guards() {
        let ds = separable_domain("a", 20, 1, false);
        let cfg = EvalConfig {
            split_ratio: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            run_indomain(&ds, &cfg),
            Err(EvalError::EmptyTestSet { .. })
        ));
        let cfg = EvalConfig {
            split_ratio: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            run_indomain(&ds, &cfg),
            Err(EvalError::InvalidSplit(_))
        ));
    }

    #[test]
    fn rare_class_needs_stratification() {
        let mut rows = vec![vec![0.0]; 30];
        let mut labels = vec![Positive; 30];
        rows.push(vec![5.0]);
        labels.push(Negative);
        rows.push(vec![5.1]);
        labels.push(Negative);
        let ds = LabeledDataset::new(FeatureMatrix::from_rows(&rows), labels, "rare").unwrap();
        // find a seed whose plain split puts both negatives in test
        let seed = (0..200)
            .find(|&s| {
                let cfg = EvalConfig {
                    seed: s,
                    ..Default::default()
                };
                matches!(
                    run_indomain(&ds, &cfg),
                    Err(EvalError::ClassAbsentFromTrain {
                        class: Negative,
                        ..
                    })
                )
            })
            .expect("some seed isolates the rare class");
        let cfg = EvalConfig {
            seed,
            stratified: true,
            ..Default::default()
        };
        run_indomain(&ds, &cfg).unwrap();
    }

    #[test]
    fn transfer_shape_and_behaviour() {
        let domains = vec![
            separable_domain("a", 150, 1, false),
            separable_domain("b", 150, 2, false),
            separable_domain("c", 150, 3, true),
        ];
        let report = run_transfer(&domains, &EvalConfig::default()).unwrap();
        assert_eq!(report.cells.len(), 6);
        assert!(report.cells.iter().all(|c| c.train_domain != c.test_domain));
        let same = report.cell("a", "b").unwrap();
        assert!(same.f1_weighted >= 0.95);
        let flipped = report.cell("a", "c").unwrap();
        assert!(flipped.f1_weighted < flipped.baseline_f1);
        assert!(matches!(
            run_transfer(&domains[..1], &EvalConfig::default()),
            Err(EvalError::TooFewDomains(1))
        ));
        let dup = vec![domains[0].clone(), domains[0].clone()];
        assert!(matches!(
            run_transfer(&dup, &EvalConfig::default()),
            Err(EvalError::DuplicateDomain(_))
        ));
    }

    #[test]
    fn report_round_trip_and_tests() {
        let domains = vec![
            separable_domain("a", 90, 1, false),
            separable_domain("b", 90, 2, false),
        ];
        let cfg = EvalConfig::default();
        let mut report = indomain_report(&domains, &cfg).unwrap();
        let t = compare_to_baseline(&report, Alternative::Greater).unwrap();
        assert_eq!(t.n, 2);
        report.tests.push(t);
        let json = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["tests"][0]["W"].is_number());
        assert_eq!(v["protocol"], "indomain");
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let tsv = report.to_tsv();
        assert_eq!(tsv.lines().count(), 3);
        assert!(tsv.starts_with("train_domain\ttest_domain\tf1_weighted\tbaseline_f1\tf1_negative"));

        let mut other = report.clone();
        other.method = "other".into();
        for c in &mut other.cells {
            c.f1_weighted -= 0.1;
        }
        let t = compare_reports(&report, &other, Alternative::Greater).unwrap();
        assert_eq!(
            (t.method_a.as_str(), t.method_b.as_str()),
            ("wordnet2vec", "other")
        );
        assert_eq!(t.p, 0.25);
        other.cells[0].train_domain = "x".into();
        other.cells[1].train_domain = "y".into();
        assert!(matches!(
            compare_reports(&report, &other, Alternative::Greater),
            Err(EvalError::NoCommonCells)
        ));
    }
}
