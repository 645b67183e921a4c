//! All-pairs shortest path lengths by per-source BFS.
//!
//! Sources are grouped into chunks of `chunk_size` consecutive node ids. A
//! fixed pool of workers pulls chunks from a shared queue, runs one BFS per
//! source with a reusable scratch buffer, and writes each row straight into
//! its pre-allocated slot of the output matrix. Peak memory is one row plus
//! the frontier buffers per worker, on top of the graph itself.
//!
//! Completed chunks are appended to a sidecar manifest
//! (`<output>.manifest`), one line per chunk:
//!
//! ```text
//! chunk_id<TAB>first_source<TAB>last_source<TAB>sha256 of the chunk's rows
//! ```
//!
//! preceded by `#` header lines recording the graph fingerprint, node count
//! and chunk size. A resumed run re-hashes the recorded chunks against the
//! file, keeps those that match, and computes the rest.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU8, AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{NodeId, WordGraph};
use crate::matrix::{DistanceMatrix, MatrixError, MatrixWriter, UNREACHABLE};

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
const MANIFEST_MAGIC: &str = "# wn2v-apsp-manifest v1";

#[derive(Debug, Error)]
pub enum ApspError {
    #[error("source {source_id} out of range for {n}-node graph")]
    SourceOutOfRange { source_id: NodeId, n: usize },
    #[error(
        "BFS from node {source_id} reached distance 255; one-byte distances cannot represent it"
    )]
    DiameterTooLarge { source_id: NodeId },
    #[error("invalid APSP configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("checkpoint manifest {path} does not match this run: {message}")]
    ManifestMismatch { path: PathBuf, message: String },
    #[error("checkpoint manifest {path}:{line}: {message}")]
    ManifestCorrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("checkpoint manifest I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceRow {
    pub source: NodeId,
    /// Hop count to every node; [`UNREACHABLE`] outside the source's component.
    pub distances: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct ApspConfig {
    pub chunk_size: usize,
    pub worker_count: usize,
    pub output_path: PathBuf,
    /// Continue from an existing manifest instead of starting over.
    pub resume: bool,
    /// Stop after computing this many chunks in this invocation, leaving the
    /// output resumable.
    pub max_chunks: Option<usize>,
}

impl ApspConfig {
    pub fn new(output_path: impl Into<PathBuf>) -> Self {
        ApspConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
            output_path: output_path.into(),
            resume: false,
            max_chunks: None,
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        manifest_path(&self.output_path)
    }

    fn validate(&self) -> Result<(), ApspError> {
        if self.chunk_size == 0 {
            return Err(ApspError::InvalidConfig(
                "chunk_size must be at least 1".into(),
            ));
        }
        if self.worker_count == 0 {
            return Err(ApspError::InvalidConfig(
                "worker_count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Reusable frontier buffers for level-synchronous BFS.
#[derive(Debug, Default)]
pub struct BfsScratch {
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl BfsScratch {
    pub fn with_capacity(n: usize) -> Self {
        BfsScratch {
            frontier: Vec::with_capacity(n),
            next: Vec::with_capacity(n),
        }
    }
}

/// Fills `out` with hop counts from `source` and returns the largest finite
/// distance found.
pub fn bfs_into(
    g: &WordGraph,
    source: NodeId,
    scratch: &mut BfsScratch,
    out: &mut [u8],
) -> Result<u8, ApspError> {
    let n = g.node_count();
    if source as usize >= n {
        return Err(ApspError::SourceOutOfRange {
            source_id: source,
            n,
        });
    }
    assert_eq!(out.len(), n, "row buffer length");
    out.fill(UNREACHABLE);
    out[source as usize] = 0;
    scratch.frontier.clear();
    scratch.frontier.push(source);
    let mut depth = 0u8;
    loop {
        scratch.next.clear();
        for &u in &scratch.frontier {
            for &v in g.neighbors(u) {
                if out[v as usize] == UNREACHABLE {
                    if depth == UNREACHABLE - 1 {
                        return Err(ApspError::DiameterTooLarge { source_id: source });
                    }
                    out[v as usize] = depth + 1;
                    scratch.next.push(v);
                }
            }
        }
        if scratch.next.is_empty() {
            return Ok(depth);
        }
        depth += 1;
        std::mem::swap(&mut scratch.frontier, &mut scratch.next);
    }
}

pub fn bfs_row(g: &WordGraph, source: NodeId) -> Result<DistanceRow, ApspError> {
    let mut distances = vec![UNREACHABLE; g.node_count()];
    let mut scratch = BfsScratch::default();
    bfs_into(g, source, &mut scratch, &mut distances)?;
    Ok(DistanceRow { source, distances })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApspOutcome {
    pub total_chunks: usize,
    /// Chunks computed by this invocation.
    pub computed_chunks: usize,
    /// Chunks carried over from a previous invocation after digest checks.
    pub reused_chunks: usize,
    pub complete: bool,
    /// Largest finite distance over the completed rows.
    pub max_distance: u8,
}

#[derive(Debug, Clone, Copy)]
struct Chunk {
    id: usize,
    first: NodeId,
    last: NodeId,
}

fn chunks(n: usize, chunk_size: usize) -> Vec<Chunk> {
    (0..n.div_ceil(chunk_size))
        .map(|id| Chunk {
            id,
            first: (id * chunk_size) as NodeId,
            last: (((id + 1) * chunk_size).min(n) - 1) as NodeId,
        })
        .collect()
}

struct ManifestHeader {
    fingerprint: String,
    nodes: usize,
    chunk_size: usize,
}

struct ManifestEntry {
    chunk_id: usize,
    first: NodeId,
    last: NodeId,
    digest: String,
}

fn read_manifest(path: &Path) -> Result<(ManifestHeader, Vec<ManifestEntry>), ApspError> {
    let file = File::open(path).map_err(|source| ApspError::Io {
        path: path.into(),
        source,
    })?;
    let corrupt = |line: usize, message: &str| ApspError::ManifestCorrupt {
        path: path.into(),
        line,
        message: message.into(),
    };
    let mut fingerprint = None;
    let mut nodes = None;
    let mut chunk_size = None;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ApspError::Io {
            path: path.into(),
            source,
        })?;
        let lineno = i + 1;
        if lineno == 1 {
            if line != MANIFEST_MAGIC {
                return Err(corrupt(1, "missing manifest header"));
            }
            continue;
        }
        if let Some(meta) = line.strip_prefix("# ") {
            let (key, value) = meta
                .split_once('\t')
                .ok_or_else(|| corrupt(lineno, "bad metadata line"))?;
            match key {
                "fingerprint" => fingerprint = Some(value.to_string()),
                "nodes" => nodes = value.parse().ok(),
                "chunk_size" => chunk_size = value.parse().ok(),
                _ => {}
            }
            continue;
        }
        // A torn final line from an interrupted append is dropped.
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields[..] {
            [id, first, last, digest] if digest.len() == 64 => {
                match (id.parse(), first.parse(), last.parse()) {
                    (Ok(chunk_id), Ok(first), Ok(last)) => Some(ManifestEntry {
                        chunk_id,
                        first,
                        last,
                        digest: digest.to_string(),
                    }),
                    _ => None,
                }
            }
            _ => None,
        };
        if let Some(e) = parsed {
            entries.push(e);
        } else {
            log::warn!(
                "{}:{lineno}: ignoring unparsable chunk line",
                path.display()
            );
        }
    }
    match (fingerprint, nodes, chunk_size) {
        (Some(fingerprint), Some(nodes), Some(chunk_size)) if chunk_size > 0 => Ok((
            ManifestHeader {
                fingerprint,
                nodes,
                chunk_size,
            },
            entries,
        )),
        _ => Err(corrupt(
            1,
            "manifest header lacks fingerprint, nodes or chunk_size",
        )),
    }
}

fn write_manifest_header(path: &Path, header: &ManifestHeader) -> Result<File, ApspError> {
    let io = |source| ApspError::Io {
        path: path.into(),
        source,
    };
    let mut f = File::create(path).map_err(io)?;
    write!(
        f,
        "{MANIFEST_MAGIC}\n# fingerprint\t{}\n# nodes\t{}\n# chunk_size\t{}\n",
        header.fingerprint, header.nodes, header.chunk_size
    )
    .map_err(io)?;
    Ok(f)
}

/// Computes every row of the distance matrix for `g` into
/// `cfg.output_path`. The file content depends only on the graph.
pub fn run_apsp(g: &WordGraph, cfg: &ApspConfig) -> Result<ApspOutcome, ApspError> {
    cfg.validate()?;
    let n = g.node_count();
    let fingerprint = hex::encode(g.fingerprint());
    let manifest = cfg.manifest_path();

    let mut chunk_size = cfg.chunk_size;
    let mut done: HashSet<usize> = HashSet::new();
    let mut max_distance = 0u8;
    let writer;
    let manifest_file;

    if cfg.resume && manifest.is_file() && cfg.output_path.is_file() {
        let (header, entries) = read_manifest(&manifest)?;
        if header.fingerprint != fingerprint {
            return Err(ApspError::ManifestMismatch {
                path: manifest,
                message: format!(
                    "checkpoint fingerprint {} but graph fingerprint {fingerprint}",
                    header.fingerprint
                ),
            });
        }
        if header.nodes != n {
            return Err(ApspError::ManifestMismatch {
                path: manifest,
                message: format!("checkpoint has {} nodes, graph has {n}", header.nodes),
            });
        }
        if header.chunk_size != chunk_size {
            log::warn!(
                "resuming with the checkpoint's chunk size {} instead of {chunk_size}",
                header.chunk_size
            );
            chunk_size = header.chunk_size;
        }
        writer = MatrixWriter::reopen(&cfg.output_path, g)?;
        let all = chunks(n, chunk_size);
        let mut row = vec![0u8; n];
        for e in entries {
            let Some(c) = all.get(e.chunk_id) else {
                continue;
            };
            if c.first != e.first || c.last != e.last || done.contains(&c.id) {
                continue;
            }
            let mut hasher = Sha256::new();
            let mut chunk_max = 0u8;
            for s in c.first..=c.last {
                writer.read_row(s, &mut row)?;
                hasher.update(&row);
                chunk_max = chunk_max.max(max_finite(&row));
            }
            if hex::encode(hasher.finalize()) == e.digest {
                done.insert(c.id);
                max_distance = max_distance.max(chunk_max);
            } else {
                log::warn!("chunk {} failed its digest check; recomputing", c.id);
            }
        }
        log::info!("resuming: {} of {} chunks verified", done.len(), all.len());
        manifest_file = OpenOptions::new()
            .append(true)
            .open(&manifest)
            .map_err(|source| ApspError::Io {
                path: manifest.clone(),
                source,
            })?;
    } else {
        writer = MatrixWriter::create(&cfg.output_path, g)?;
        manifest_file = write_manifest_header(
            &manifest,
            &ManifestHeader {
                fingerprint: fingerprint.clone(),
                nodes: n,
                chunk_size,
            },
        )?;
    }

    let all = chunks(n, chunk_size);
    let reused = done.len();
    let pending: Vec<Chunk> = all
        .iter()
        .copied()
        .filter(|c| !done.contains(&c.id))
        .collect();
    let budget = cfg.max_chunks.unwrap_or(usize::MAX).min(pending.len());

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let computed = AtomicUsize::new(0);
    let global_max = AtomicU8::new(max_distance);
    let manifest_out = Mutex::new(manifest_file);
    let first_error: Mutex<Option<ApspError>> = Mutex::new(None);

    let workers = cfg.worker_count.min(budget.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut scratch = BfsScratch::with_capacity(n);
                let mut row = vec![UNREACHABLE; n];
                let result = (|| -> Result<(), ApspError> {
                    while !stop.load(Ordering::Relaxed) {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= budget {
                            break;
                        }
                        let c = pending[i];
                        let mut hasher = Sha256::new();
                        let mut local_max = 0u8;
                        for s in c.first..=c.last {
                            local_max = local_max.max(bfs_into(g, s, &mut scratch, &mut row)?);
                            hasher.update(&row);
                            writer.write_row(s, &row)?;
                        }
                        global_max.fetch_max(local_max, Ordering::Relaxed);
                        let line = format!(
                            "{}\t{}\t{}\t{}\n",
                            c.id,
                            c.first,
                            c.last,
                            hex::encode(hasher.finalize())
                        );
                        let mut out = manifest_out.lock().expect("manifest lock poisoned");
                        out.write_all(line.as_bytes())
                            .map_err(|source| ApspError::Io {
                                path: manifest.clone(),
                                source,
                            })?;
                        drop(out);
                        let k = computed.fetch_add(1, Ordering::Relaxed) + 1;
                        log::debug!("chunk {} done ({k}/{budget} this run)", c.id);
                    }
                    Ok(())
                })();
                if let Err(e) = result {
                    stop.store(true, Ordering::Relaxed);
                    first_error
                        .lock()
                        .expect("error lock poisoned")
                        .get_or_insert(e);
                }
            });
        }
    });

    if let Some(e) = first_error.into_inner().expect("error lock poisoned") {
        return Err(e);
    }
    let computed = computed.into_inner();
    let max_distance = global_max.into_inner();
    let complete = reused + computed == all.len();
    if complete {
        writer.finish(max_distance)?;
    } else {
        writer.sync()?;
    }
    Ok(ApspOutcome {
        total_chunks: all.len(),
        computed_chunks: computed,
        reused_chunks: reused,
        complete,
        max_distance,
    })
}

fn max_finite(row: &[u8]) -> u8 {
    row.iter()
        .copied()
        .filter(|&d| d != UNREACHABLE)
        .max()
        .unwrap_or(0)
}

/// Counts ordered pairs (including each node with itself) at every finite
/// distance.
pub fn path_length_histogram(m: &DistanceMatrix) -> Result<BTreeMap<u8, u64>, MatrixError> {
    let n = m.node_count();
    let counts = (0..n as u32)
        .into_par_iter()
        .try_fold(
            || (vec![0u64; 256], vec![0u8; n]),
            |(mut acc, mut row), r| {
                m.read_row_into(r, &mut row)?;
                for &d in &row {
                    acc[d as usize] += 1;
                }
                Ok::<_, MatrixError>((acc, row))
            },
        )
        .map(|r| r.map(|(acc, _)| acc))
        .try_reduce(
            || vec![0u64; 256],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(counts
        .iter()
        .enumerate()
        .take(UNREACHABLE as usize)
        .filter(|(_, &c)| c > 0)
        .map(|(d, &c)| (d as u8, c))
        .collect())
}

/// `distance,count` CSV with a header line.
pub fn histogram_csv(hist: &BTreeMap<u8, u64>) -> String {
    let mut out = String::from("distance,count\n");
    for (d, c) in hist {
        out.push_str(&format!("{d},{c}\n"));
    }
    out
}

pub fn write_histogram_csv(hist: &BTreeMap<u8, u64>, path: &Path) -> std::io::Result<()> {
    fs::write(path, histogram_csv(hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::open_matrix;

    fn path_graph() -> WordGraph {
        WordGraph::from_edges(vec!["a".into(), "b".into(), "c".into()], [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn bfs_on_path() {
        assert_eq!(bfs_row(&path_graph(), 0).unwrap().distances, vec![0, 1, 2]);
    }

    #[test]
    fn bfs_unreachable_sentinel() {
        let g = WordGraph::from_edges(vec!["a".into(), "b".into()], []).unwrap();
        assert_eq!(bfs_row(&g, 0).unwrap().distances, vec![0, 255]);
    }

    #[test]
    fn bfs_source_out_of_range() {
        assert!(matches!(
            bfs_row(&path_graph(), 3),
            Err(ApspError::SourceOutOfRange { .. })
        ));
    }

    #[test]
    fn long_paths_are_rejected_not_saturated() {
        let n = 300u32;
        let vocab = (0..n).map(|i| format!("v{i:04}")).collect();
        let g = WordGraph::from_edges(vocab, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        assert!(matches!(
            bfs_row(&g, 0),
            Err(ApspError::DiameterTooLarge { source_id: 0 })
        ));
        // 254 hops is still representable.
        let row = bfs_row(&g, 46).unwrap();
        assert_eq!(row.distances[299], 253);
        assert_eq!(*row.distances.iter().max().unwrap(), 253);
    }

    #[test]
    fn one_node_graph_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let g = WordGraph::from_edges(vec!["solo".into()], []).unwrap();
        let cfg = ApspConfig::new(dir.path().join("m.wn2v"));
        let out = run_apsp(&g, &cfg).unwrap();
        assert!(out.complete);
        let m = open_matrix(&cfg.output_path).unwrap();
        assert_eq!(m.row(0).unwrap(), vec![0]);
    }

    #[test]
    fn empty_graph_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let g = WordGraph::from_edges(vec![], []).unwrap();
        let cfg = ApspConfig::new(dir.path().join("m.wn2v"));
        let out = run_apsp(&g, &cfg).unwrap();
        assert_eq!(out.total_chunks, 0);
        assert_eq!(open_matrix(&cfg.output_path).unwrap().node_count(), 0);
    }

    #[test]
    fn invalid_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ApspConfig::new(dir.path().join("m.wn2v"));
        cfg.chunk_size = 0;
        assert!(matches!(
            run_apsp(&path_graph(), &cfg),
            Err(ApspError::InvalidConfig(_))
        ));
    }

    #[test]
    fn histograms() {
        let dir = tempfile::tempdir().unwrap();
        let tri = WordGraph::from_edges(
            vec!["a".into(), "b".into(), "c".into()],
            [(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let cfg = ApspConfig::new(dir.path().join("tri.wn2v"));
        run_apsp(&tri, &cfg).unwrap();
        let h = path_length_histogram(&open_matrix(&cfg.output_path).unwrap()).unwrap();
        assert_eq!(h, BTreeMap::from([(0, 3), (1, 6)]));

        let cfg = ApspConfig::new(dir.path().join("path.wn2v"));
        run_apsp(&path_graph(), &cfg).unwrap();
        let h = path_length_histogram(&open_matrix(&cfg.output_path).unwrap()).unwrap();
        assert_eq!(h, BTreeMap::from([(0, 3), (1, 4), (2, 2)]));
        assert_eq!(histogram_csv(&h), "distance,count\n0,3\n1,4\n2,2\n");
    }

    #[test]
    fn chunk_partition_covers_all_sources() {
        let cs = chunks(10, 3);
        assert_eq!(cs.len(), 4);
        assert_eq!((cs[3].first, cs[3].last), (9, 9));
        assert!(chunks(0, 3).is_empty());
    }
}
