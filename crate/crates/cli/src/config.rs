//! TOML configuration file. Every key is optional; command-line flags take
//! precedence over the file. Relative paths resolve against the file's
//! directory.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! tsv = "toy_wordnet.tsv"          # or wordnet = "dict/"
//! reviews = ["toys.jsonl", "books.jsonl"]
//! exceptions = ["verb.exc"]
//! output_dir = "out"               # default location for every output
//!
//! [apsp]
//! chunk_size = 1000
//! workers = 8
//!
//! [pipeline]
//! unreachable = "max_plus_one"     # or an integer
//! pre_lemmatized = false
//!
//! [model]
//! l2_lambda = 0.001                # default 1/m
//! max_iter = 500
//! tolerance = 1e-5
//! memory_size = 10
//! standardize = true
//!
//! [eval]
//! protocol = "indomain"            # or "transfer"
//! split_ratio = 0.8
//! stratified = false
//! method = "wordnet2vec"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub apsp: Apsp,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub eval: Eval,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub wordnet: Option<PathBuf>,
    pub tsv: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    #[serde(default)]
    pub reviews: Vec<PathBuf>,
    #[serde(default)]
    pub exceptions: Vec<PathBuf>,
    #[serde(default)]
    pub vectors: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Apsp {
    pub chunk_size: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Unreachable {
    Named(String),
    Fixed(u64),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipeline {
    pub unreachable: Option<Unreachable>,
    pub pre_lemmatized: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub l2_lambda: Option<f64>,
    pub max_iter: Option<usize>,
    pub tolerance: Option<f64>,
    pub memory_size: Option<usize>,
    pub standardize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eval {
    pub protocol: Option<String>,
    pub split_ratio: Option<f64>,
    pub stratified: Option<bool>,
    pub method: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("--config: cannot read '{}': {e}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| format!("--config: '{}': {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_relative(base);
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        for opt in [
            &mut p.wordnet,
            &mut p.tsv,
            &mut p.graph,
            &mut p.matrix,
            &mut p.model,
            &mut p.report,
            &mut p.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(opt);
        }
        p.reviews.iter_mut().for_each(fix);
        p.exceptions.iter_mut().for_each(fix);
        p.vectors.iter_mut().for_each(fix);
    }

    /// `paths.<key>` if set, else `output_dir/<default_name>`.
    pub fn output(&self, configured: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
        configured
            .clone()
            .or_else(|| self.paths.output_dir.as_ref().map(|d| d.join(default_name)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "seed = 3\n[paths]\ntsv = \"w.tsv\"\noutput_dir = \"/abs\"\n[pipeline]\nunreachable = 9\n",
        )
        .unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.paths.tsv, Some(dir.path().join("w.tsv")));
        assert_eq!(
            cfg.output(&None, "m.wn2v"),
            Some(PathBuf::from("/abs/m.wn2v"))
        );
        assert!(matches!(
            cfg.pipeline.unreachable,
            Some(Unreachable::Fixed(9))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[apsp]\nchunksize = 3\n").unwrap();
        let err = FileConfig::load(&path).unwrap_err();
        assert!(err.contains("chunksize"), "{err}");
    }
}
