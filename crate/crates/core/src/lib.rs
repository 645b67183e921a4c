//! Corpus-agnostic word vectors derived from a WordNet lexical database.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! 1. [`ingest`] parses WNDB `data.*` files (or a TSV interchange file) into a
//!    [`LexicalDatabase`].
//! 2. [`graph`] collapses synsets and typed relations into an undirected,
//!    unweighted [`WordGraph`] over lemmas.
//! 3. [`apsp`] runs one BFS per source, chunked across a worker pool, and
//!    streams hop counts into a `WN2V` matrix file.
//! 4. [`matrix`] opens that file for constant-time row lookup by lemma.
//! 5. [`text`] segments and lemmatizes reviews and sums word rows into
//!    document vectors.
//! 6. [`learn`] and [`eval`] train multinomial logistic regression with
//!    L-BFGS and score it with weighted F1, in-domain and cross-domain, with
//!    an exact Wilcoxon signed-rank test for method comparison.

pub mod apsp;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod learn;
pub mod matrix;
pub mod synthetic;
pub mod text;
pub mod vectors;

pub use apsp::{
    bfs_row, path_length_histogram, run_apsp, ApspConfig, ApspError, ApspOutcome, DistanceRow,
};
pub use eval::{
    compare_reports, compare_to_baseline, f1_per_class, f1_weighted, indomain_report, run_indomain,
    run_transfer, wilcoxon_signed_rank, Alternative, CellReport, ConfusionCounts, EvalConfig,
    EvalError, EvalReport, Protocol, TestRecord, WilcoxonResult,
};
pub use graph::{build_word_graph, graph_stats, GraphError, GraphStats, WordGraph};
pub use ingest::{
    export_tsv, normalize_lemma, parse_tsv, parse_tsv_file, parse_wndb, parse_wndb_dir,
    IngestError, Level, LexicalDatabase, Pos, Relation, RelationCounts, Synset, SynsetId,
};
pub use learn::{
    majority_baseline, star_to_class, train, Classifier, FeatureMatrix, LabeledDataset, LearnError,
    LogRegModel, MajorityClassifier, SentimentClass, TrainConfig,
};
pub use matrix::{open_matrix, DistanceMatrix, MatrixError, WordVector, UNREACHABLE};
pub use text::{
    lemmatize, read_reviews_jsonl, segment, vectorize_document, Document, DocumentVector,
    Lemmatizer, Review, TextError, UnreachablePolicy, Vectorizer,
};
pub use vectors::{VectorError, VectorSet};
