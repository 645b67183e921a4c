//! Lexical database ingest.
//!
//! Two loaders produce the same [`LexicalDatabase`]: [`parse_wndb`] reads the
//! Princeton WNDB `data.{noun,verb,adj,adv}` files, and [`parse_tsv`] reads a
//! small line-oriented interchange format that is also what [`export_tsv`]
//! writes:
//!
//! ```text
//! SYNSET<TAB>id<TAB>pos<TAB>lemma1,lemma2,...
//! REL<TAB>src_id<TAB>dst_id<TAB>kind<TAB>semantic|lexical:src_idx:dst_idx
//! ```
//!
//! Lines starting with `#` are comments. Word indices are 1-based positions in
//! the synset's lemma list.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Dangling references listed in an error message before truncating.
const DANGLING_SAMPLE: usize = 20;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("cannot infer part of speech from file name {0} (expected data.noun, data.verb, data.adj or data.adv)")]
    UnknownDataFile(PathBuf),
    #[error("{count} dangling relation reference(s): {}", sample.join(", "))]
    DanglingReferences { count: usize, sample: Vec<String> },
    #[error("duplicate synset id {0}")]
    DuplicateSynset(String),
    #[error("invalid synset {id}: {message}")]
    InvalidSynset { id: String, message: String },
    #[error("invalid relation {source_id} -> {target_id}: {message}")]
    InvalidRelation {
        source_id: String,
        target_id: String,
        message: String,
    },
    #[error("word index {index} out of range for synset {synset} with {len} lemma(s)")]
    WordIndexOutOfRange {
        synset: String,
        index: u16,
        len: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];

    /// Single-letter WNDB code. Satellite adjectives (`s`) share `a`.
    pub fn code(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adjective => 'a',
            Pos::Adverb => 'r',
        }
    }

    /// Accepts WNDB codes (`n v a s r`) and the long names.
    pub fn parse(s: &str) -> Option<Pos> {
        match s {
            "n" | "noun" => Some(Pos::Noun),
            "v" | "verb" => Some(Pos::Verb),
            "a" | "s" | "adj" | "adjective" => Some(Pos::Adjective),
            "r" | "adv" | "adverb" => Some(Pos::Adverb),
            _ => None,
        }
    }

    pub fn data_file_name(self) -> &'static str {
        match self {
            Pos::Noun => "data.noun",
            Pos::Verb => "data.verb",
            Pos::Adjective => "data.adj",
            Pos::Adverb => "data.adv",
        }
    }

    fn from_data_file(path: &Path) -> Option<Pos> {
        let name = path.file_name()?.to_str()?;
        Pos::ALL.into_iter().find(|p| p.data_file_name() == name)
    }
}

/// Opaque synset identifier. WNDB synsets use `<pos code><8-digit offset>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId(String);

impl SynsetId {
    pub fn new(id: impl Into<String>) -> Self {
        SynsetId(id.into())
    }

    fn wndb(pos: Pos, offset: u64) -> Self {
        SynsetId(format!("{}{:08}", pos.code(), offset))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub pos: Pos,
    /// Normalized lemmas in database order.
    pub lemmas: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Semantic,
    Lexical,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Semantic => "semantic",
            Level::Lexical => "lexical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub source: SynsetId,
    pub target: SynsetId,
    pub kind: String,
    /// 1-based `(source, target)` lemma indices; `Some` exactly for lexical relations.
    pub words: Option<(u16, u16)>,
}

impl Relation {
    pub fn semantic(source: SynsetId, target: SynsetId, kind: impl Into<String>) -> Self {
        Relation {
            source,
            target,
            kind: kind.into(),
            words: None,
        }
    }

    pub fn lexical(
        source: SynsetId,
        target: SynsetId,
        kind: impl Into<String>,
        source_word: u16,
        target_word: u16,
    ) -> Self {
        Relation {
            source,
            target,
            kind: kind.into(),
            words: Some((source_word, target_word)),
        }
    }

    pub fn level(&self) -> Level {
        if self.words.is_some() {
            Level::Lexical
        } else {
            Level::Semantic
        }
    }

    fn sort_key(&self) -> (&SynsetId, &SynsetId, &str, Option<(u16, u16)>) {
        (&self.source, &self.target, &self.kind, self.words)
    }
}

/// Relation tallies by level and kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationCounts {
    pub semantic: usize,
    pub lexical: usize,
    pub by_kind: BTreeMap<(Level, String), usize>,
}

impl RelationCounts {
    pub fn total(&self) -> usize {
        self.semantic + self.lexical
    }

    pub fn get(&self, level: Level, kind: &str) -> usize {
        self.by_kind
            .get(&(level, kind.to_string()))
            .copied()
            .unwrap_or(0)
    }

    fn tally<'a>(relations: impl IntoIterator<Item = &'a Relation>) -> Self {
        let mut counts = RelationCounts::default();
        for r in relations {
            match r.level() {
                Level::Semantic => counts.semantic += 1,
                Level::Lexical => counts.lexical += 1,
            }
            *counts
                .by_kind
                .entry((r.level(), r.kind.clone()))
                .or_insert(0) += 1;
        }
        counts
    }
}

/// Validated, canonically ordered synsets and relations.
///
/// Synsets are sorted by id and relations by `(source, target, kind, words)`,
/// so two databases with the same content compare equal regardless of the
/// order they were loaded in.
#[derive(Debug, Clone, Default)]
pub struct LexicalDatabase {
    synsets: Vec<Synset>,
    index: HashMap<SynsetId, usize>,
    relations: Vec<Relation>,
    counts: RelationCounts,
}

impl PartialEq for LexicalDatabase {
    fn eq(&self, other: &Self) -> bool {
        self.synsets == other.synsets && self.relations == other.relations
    }
}

impl Eq for LexicalDatabase {}

impl LexicalDatabase {
    pub fn new(
        mut synsets: Vec<Synset>,
        mut relations: Vec<Relation>,
    ) -> Result<Self, IngestError> {
        synsets.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(synsets.len());
        for (i, s) in synsets.iter().enumerate() {
            validate_synset(s)?;
            if index.insert(s.id.clone(), i).is_some() {
                return Err(IngestError::DuplicateSynset(s.id.to_string()));
            }
        }

        let mut dangling = Vec::new();
        for r in &relations {
            if r.kind.is_empty() || r.kind.chars().any(char::is_whitespace) {
                return Err(IngestError::InvalidRelation {
                    source_id: r.source.to_string(),
                    target_id: r.target.to_string(),
                    message: format!(
                        "relation kind {:?} must be non-empty without whitespace",
                        r.kind
                    ),
                });
            }
            let src = index.get(&r.source);
            let dst = index.get(&r.target);
            if src.is_none() {
                dangling.push(format!("{} (source of {})", r.source, r.kind));
            }
            if dst.is_none() {
                dangling.push(format!(
                    "{} (target of {} from {})",
                    r.target, r.kind, r.source
                ));
            }
            if let (Some(&si), Some(&ti), Some((sw, tw))) = (src, dst, r.words) {
                check_word_index(&synsets[si], sw)?;
                check_word_index(&synsets[ti], tw)?;
            }
        }
        if !dangling.is_empty() {
            let count = dangling.len();
            dangling.truncate(DANGLING_SAMPLE);
            return Err(IngestError::DanglingReferences {
                count,
                sample: dangling,
            });
        }

        relations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let counts = RelationCounts::tally(&relations);
        Ok(LexicalDatabase {
            synsets,
            index,
            relations,
            counts,
        })
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn counts(&self) -> &RelationCounts {
        &self.counts
    }

    /// Tallies recomputed from the relation list.
    pub fn recount(&self) -> RelationCounts {
        RelationCounts::tally(&self.relations)
    }

    pub fn synset(&self, id: &SynsetId) -> Option<&Synset> {
        self.index.get(id).map(|&i| &self.synsets[i])
    }

    /// Position of `id` in [`synsets`](Self::synsets).
    pub fn synset_index(&self, id: &SynsetId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }
}

fn validate_synset(s: &Synset) -> Result<(), IngestError> {
    let invalid = |message: String| IngestError::InvalidSynset {
        id: s.id.to_string(),
        message,
    };
    if s.id.0.is_empty() || s.id.0.chars().any(char::is_whitespace) {
        return Err(invalid("id must be non-empty without whitespace".into()));
    }
    if s.lemmas.is_empty() {
        return Err(invalid("no lemmas".into()));
    }
    if s.lemmas.len() > u16::MAX as usize {
        return Err(invalid(format!("{} lemmas exceeds 65535", s.lemmas.len())));
    }
    for (i, lemma) in s.lemmas.iter().enumerate() {
        if !is_normalized(lemma) {
            return Err(invalid(format!("lemma {lemma:?} is not normalized")));
        }
        if s.lemmas[..i].contains(lemma) {
            return Err(invalid(format!("duplicate lemma {lemma:?}")));
        }
    }
    Ok(())
}

fn check_word_index(s: &Synset, index: u16) -> Result<(), IngestError> {
    if index == 0 || index as usize > s.lemmas.len() {
        return Err(IngestError::WordIndexOutOfRange {
            synset: s.id.to_string(),
            index,
            len: s.lemmas.len(),
        });
    }
    Ok(())
}

fn is_lemma_char(c: char) -> bool {
    c.is_alphanumeric() && !c.is_uppercase() || matches!(c, '_' | '.' | '\'' | '-')
}

/// True if `s` is a fixed point of [`normalize_lemma`].
pub fn is_normalized(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_lemma_char)
}

/// Canonical lemma form: lowercase, whitespace runs become `_`, WNDB adjective
/// position markers (`(a)`, `(p)`, `(ip)`) are stripped, and any character
/// outside letters, digits and `_.'-` becomes `_`. Idempotent.
pub fn normalize_lemma(raw: &str) -> String {
    let mut s = raw.trim();
    for marker in ["(a)", "(p)", "(ip)"] {
        if let Some(stripped) = s.strip_suffix(marker) {
            s = stripped.trim_end();
            break;
        }
    }
    let mut out = String::with_capacity(s.len());
    let mut in_space = false;
    for c in s.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push('_');
            }
            in_space = true;
            continue;
        }
        in_space = false;
        for lc in c.to_lowercase() {
            out.push(if is_lemma_char(lc) { lc } else { '_' });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// WNDB

fn pointer_kind(symbol: &str, pos: Pos) -> String {
    let kind = match symbol {
        "!" => "antonym",
        "@" => "hypernym",
        "@i" => "instance_hypernym",
        "~" => "hyponym",
        "~i" => "instance_hyponym",
        "#m" => "member_holonym",
        "#s" => "substance_holonym",
        "#p" => "part_holonym",
        "%m" => "member_meronym",
        "%s" => "substance_meronym",
        "%p" => "part_meronym",
        "=" => "attribute",
        "+" => "derivation",
        ";c" => "domain_topic",
        "-c" => "member_topic",
        ";r" => "domain_region",
        "-r" => "member_region",
        ";u" => "domain_usage",
        "-u" => "member_usage",
        "*" => "entailment",
        ">" => "cause",
        "^" => "also_see",
        "$" => "verb_group",
        "&" => "similar_to",
        "<" => "participle",
        "\\" if pos == Pos::Adverb => "derived_from_adjective",
        "\\" => "pertainym",
        other => return format!("ptr{other}"),
    };
    kind.to_string()
}

struct RawPointer {
    kind: String,
    source: SynsetId,
    target: SynsetId,
    /// Original (pre-dedup) 1-based word indices, `None` for semantic pointers.
    words: Option<(u16, u16)>,
}

struct ParsedFile {
    synsets: Vec<Synset>,
    /// Original word position -> deduplicated position, per synset.
    remaps: Vec<(SynsetId, Vec<u16>)>,
    pointers: Vec<RawPointer>,
}

fn parse_wndb_file(pos: Pos, name: &str, content: &str) -> Result<ParsedFile, IngestError> {
    let mut parsed = ParsedFile {
        synsets: Vec::new(),
        remaps: Vec::new(),
        pointers: Vec::new(),
    };
    for (i, line) in content.lines().enumerate() {
        if line.starts_with("  ") || line.trim().is_empty() {
            continue;
        }
        parse_data_line(pos, line, &mut parsed).map_err(|message| IngestError::Malformed {
            file: name.to_string(),
            line: i + 1,
            message,
        })?;
    }
    Ok(parsed)
}

fn parse_data_line(file_pos: Pos, line: &str, out: &mut ParsedFile) -> Result<(), String> {
    let body = line.split('|').next().unwrap_or("");
    let mut tokens = body.split_ascii_whitespace();
    let mut next = |what: &str| tokens.next().ok_or_else(|| format!("missing {what}"));

    let offset: u64 = next("synset_offset")?
        .parse()
        .map_err(|_| "synset_offset is not a decimal number".to_string())?;
    let _lex_filenum = next("lex_filenum")?;
    let ss_type = next("ss_type")?;
    let pos = Pos::parse(ss_type).ok_or_else(|| format!("unknown ss_type {ss_type:?}"))?;
    if pos != file_pos {
        return Err(format!("ss_type {ss_type:?} does not belong in this file"));
    }
    let w_cnt = u16::from_str_radix(next("w_cnt")?, 16)
        .map_err(|_| "w_cnt is not a hex number".to_string())?;
    if w_cnt == 0 {
        return Err("w_cnt is zero".into());
    }

    let mut lemmas: Vec<String> = Vec::with_capacity(w_cnt as usize);
    let mut remap = Vec::with_capacity(w_cnt as usize);
    for _ in 0..w_cnt {
        let word = next("word")?;
        let _lex_id = next("lex_id")?;
        let lemma = normalize_lemma(word);
        if lemma.is_empty() {
            return Err(format!("word {word:?} normalizes to an empty lemma"));
        }
        let position = match lemmas.iter().position(|l| *l == lemma) {
            Some(p) => p,
            None => {
                lemmas.push(lemma);
                lemmas.len() - 1
            }
        };
        remap.push(position as u16 + 1);
    }

    let p_cnt: usize = next("p_cnt")?
        .parse()
        .map_err(|_| "p_cnt is not a decimal number".to_string())?;
    let id = SynsetId::wndb(file_pos, offset);
    for _ in 0..p_cnt {
        let symbol = next("pointer_symbol")?;
        let target_offset: u64 = next("pointer offset")?
            .parse()
            .map_err(|_| "pointer offset is not a decimal number".to_string())?;
        let target_pos_tok = next("pointer pos")?;
        let target_pos = Pos::parse(target_pos_tok)
            .ok_or_else(|| format!("unknown pointer pos {target_pos_tok:?}"))?;
        let st = next("source/target")?;
        if st.len() != 4 {
            return Err(format!("source/target field {st:?} is not 4 hex digits"));
        }
        let src = u16::from_str_radix(&st[..2], 16);
        let dst = u16::from_str_radix(&st[2..], 16);
        let (src, dst) = match (src, dst) {
            (Ok(s), Ok(d)) => (s, d),
            _ => return Err(format!("source/target field {st:?} is not hex")),
        };
        let words = match (src, dst) {
            (0, 0) => None,
            (s, d) if s > 0 && d > 0 => Some((s, d)),
            _ => return Err(format!("source/target field {st:?} mixes zero and nonzero")),
        };
        out.pointers.push(RawPointer {
            kind: pointer_kind(symbol, file_pos),
            source: id.clone(),
            target: SynsetId::wndb(target_pos, target_offset),
            words,
        });
    }
    // Verb frames and the gloss follow; neither is used.

    out.remaps.push((id.clone(), remap));
    out.synsets.push(Synset { id, pos, lemmas });
    Ok(())
}

fn read_file(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a set of WNDB data files. The part of speech of each file comes from
/// its name (`data.noun`, `data.verb`, `data.adj`, `data.adv`). Files are
/// parsed on separate threads and merged.
pub fn parse_wndb<P: AsRef<Path>>(files: &[P]) -> Result<LexicalDatabase, IngestError> {
    let mut sources = Vec::with_capacity(files.len());
    for f in files {
        let path = f.as_ref();
        let pos =
            Pos::from_data_file(path).ok_or_else(|| IngestError::UnknownDataFile(path.into()))?;
        sources.push((pos, path.display().to_string(), read_file(path)?));
    }
    let borrowed: Vec<(Pos, &str, &str)> = sources
        .iter()
        .map(|(p, n, c)| (*p, n.as_str(), c.as_str()))
        .collect();
    parse_wndb_sources(&borrowed)
}

/// Parses whichever of the four WNDB data files exist in `dir`.
pub fn parse_wndb_dir(dir: &Path) -> Result<LexicalDatabase, IngestError> {
    let files: Vec<PathBuf> = Pos::ALL
        .iter()
        .map(|p| dir.join(p.data_file_name()))
        .filter(|p| p.is_file())
        .collect();
    if files.is_empty() {
        return Err(IngestError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no data.* files"),
        });
    }
    parse_wndb(&files)
}

/// Parses in-memory WNDB sources given as `(pos, display name, content)`.
pub fn parse_wndb_sources(sources: &[(Pos, &str, &str)]) -> Result<LexicalDatabase, IngestError> {
    let results: Vec<Result<ParsedFile, IngestError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|&(pos, name, content)| scope.spawn(move || parse_wndb_file(pos, name, content)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("WNDB parser thread panicked"))
            .collect()
    });

    let mut synsets = Vec::new();
    let mut remaps = HashMap::new();
    let mut pointers = Vec::new();
    for r in results {
        let parsed = r?;
        synsets.extend(parsed.synsets);
        remaps.extend(parsed.remaps);
        pointers.extend(parsed.pointers);
    }

    let mut dangling = Vec::new();
    let mut relations = Vec::with_capacity(pointers.len());
    for p in pointers {
        let (Some(src_map), Some(dst_map)) = (remaps.get(&p.source), remaps.get(&p.target)) else {
            dangling.push(format!(
                "{} (target of {} from {})",
                p.target, p.kind, p.source
            ));
            continue;
        };
        let words = match p.words {
            None => None,
            Some((s, d)) => {
                let lookup = |map: &Vec<u16>, idx: u16, synset: &SynsetId| {
                    map.get(idx as usize - 1).copied().ok_or_else(|| {
                        IngestError::WordIndexOutOfRange {
                            synset: synset.to_string(),
                            index: idx,
                            len: map.len(),
                        }
                    })
                };
                Some((
                    lookup(src_map, s, &p.source)?,
                    lookup(dst_map, d, &p.target)?,
                ))
            }
        };
        relations.push(Relation {
            source: p.source,
            target: p.target,
            kind: p.kind,
            words,
        });
    }
    if !dangling.is_empty() {
        let count = dangling.len();
        dangling.truncate(DANGLING_SAMPLE);
        return Err(IngestError::DanglingReferences {
            count,
            sample: dangling,
        });
    }
    LexicalDatabase::new(synsets, relations)
}

// ---------------------------------------------------------------------------
// TSV interchange

const TSV_HEADER: &str = "# wordnet2vec lexical database, tsv v1";

pub fn parse_tsv(content: &str) -> Result<LexicalDatabase, IngestError> {
    parse_tsv_named("<tsv>", content)
}

pub fn parse_tsv_file(path: &Path) -> Result<LexicalDatabase, IngestError> {
    parse_tsv_named(&path.display().to_string(), &read_file(path)?)
}

fn parse_tsv_named(name: &str, content: &str) -> Result<LexicalDatabase, IngestError> {
    let mut synsets = Vec::new();
    let mut relations = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let malformed = |message: String| IngestError::Malformed {
            file: name.to_string(),
            line: i + 1,
            message,
        };
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "SYNSET" => {
                let [_, id, pos, lemmas] = fields[..] else {
                    return Err(malformed(format!(
                        "SYNSET expects 4 fields, found {}",
                        fields.len()
                    )));
                };
                let pos =
                    Pos::parse(pos).ok_or_else(|| malformed(format!("unknown pos {pos:?}")))?;
                let lemmas = lemmas.split(',').map(normalize_lemma).collect();
                synsets.push(Synset {
                    id: SynsetId::new(id),
                    pos,
                    lemmas,
                });
            }
            "REL" => {
                let [_, src, dst, kind, level] = fields[..] else {
                    return Err(malformed(format!(
                        "REL expects 5 fields, found {}",
                        fields.len()
                    )));
                };
                let words = if level == "semantic" {
                    None
                } else if let Some(rest) = level.strip_prefix("lexical:") {
                    let (s, d) = rest
                        .split_once(':')
                        .ok_or_else(|| malformed(format!("bad lexical level {level:?}")))?;
                    let s: u16 = s
                        .parse()
                        .map_err(|_| malformed(format!("bad source index {s:?}")))?;
                    let d: u16 = d
                        .parse()
                        .map_err(|_| malformed(format!("bad target index {d:?}")))?;
                    Some((s, d))
                } else {
                    return Err(malformed(format!("unknown relation level {level:?}")));
                };
                relations.push(Relation {
                    source: SynsetId::new(src),
                    target: SynsetId::new(dst),
                    kind: kind.to_string(),
                    words,
                });
            }
            tag => return Err(malformed(format!("unknown record tag {tag:?}"))),
        }
    }
    LexicalDatabase::new(synsets, relations)
}

/// Writes the database in canonical order. The output parses back to an equal
/// database.
pub fn export_tsv(db: &LexicalDatabase) -> String {
    let mut out = String::new();
    out.push_str(TSV_HEADER);
    out.push('\n');
    for s in db.synsets() {
        out.push_str(&format!(
            "SYNSET\t{}\t{}\t{}\n",
            s.id,
            s.pos.code(),
            s.lemmas.join(",")
        ));
    }
    for r in db.relations() {
        let level = match r.words {
            None => "semantic".to_string(),
            Some((s, d)) => format!("lexical:{s}:{d}"),
        };
        out.push_str(&format!(
            "REL\t{}\t{}\t{}\t{}\n",
            r.source, r.target, r.kind, level
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOG_NOUN: &str = concat!(
        "  1 This software and database is being provided to you, the LICENSEE, by\n",
        "  2 Princeton University under the following license.\n",
        "02084071 05 n 01 dog 0 001 @ 02083346 n 0000 | a member of the genus Canis\n",
        "02083346 05 n 01 canine 0 001 ~ 02084071 n 0000 | one of the dogs\n",
    );

    #[test]
    fn empty_source_set_gives_empty_database() {
        let db = parse_wndb_sources(&[]).unwrap();
        assert!(db.is_empty());
        assert_eq!(db.counts(), &RelationCounts::default());
        let files: [&Path; 0] = [];
        assert!(parse_wndb(&files).unwrap().is_empty());
    }

    #[test]
    fn two_line_fixture_traces_the_grammar() {
        let fixture = "02084071 05 n 01 dog 0 001 @ 02083346 n 0000 | a domestic dog\n\
02083346 05 n 01 canine 0 000 | a canine\n";
        let db = parse_wndb_sources(&[(Pos::Noun, "data.noun", fixture)]).unwrap();
        assert_eq!(db.synsets().len(), 2);
        assert_eq!(db.relations().len(), 1);
        let rel = &db.relations()[0];
        assert_eq!(rel.kind, "hypernym");
        assert_eq!(rel.level(), Level::Semantic);
        assert_eq!(rel.source.as_str(), "n02084071");
        assert_eq!(rel.target.as_str(), "n02083346");
        let dog = db.synset(&rel.source).unwrap();
        assert_eq!(dog.lemmas, vec!["dog"]);
        assert_eq!(db.counts().get(Level::Semantic, "hypernym"), 1);
    }

    #[test]
    fn header_lines_are_skipped() {
        let db = parse_wndb_sources(&[(Pos::Noun, "data.noun", DOG_NOUN)]).unwrap();
        assert_eq!(db.synsets().len(), 2);
        assert_eq!(db.counts().semantic, 2);
    }

    #[test]
    fn lexical_pointer_indices_are_hex_decoded() {
        // 11 words would need index 0x0b; keep it small but exercise hex.
        let adj = "00001740 00 a 02 Able 0 big(a) 0 002 ! 00002098 a 0101 + 00002098 a 0201 | x\n\
00002098 00 s 01 unable 0 000 | y\n";
        let db = parse_wndb_sources(&[(Pos::Adjective, "data.adj", adj)]).unwrap();
        let able = db.synset(&SynsetId::new("a00001740")).unwrap();
        assert_eq!(able.lemmas, vec!["able", "big"]);
        let lex: Vec<_> = db
            .relations()
            .iter()
            .map(|r| (r.kind.as_str(), r.words))
            .collect();
        assert!(lex.contains(&("antonym", Some((1, 1)))));
        assert!(lex.contains(&("derivation", Some((2, 1)))));
        assert_eq!(db.counts().lexical, 2);
    }

    #[test]
    fn verb_frames_are_ignored() {
        let verb = "01168468 34 v 01 eat 0 001 @ 01166351 v 0000 01 + 08 00 | take in food\n\
01166351 34 v 01 consume 0 000 01 + 08 00 | x\n";
        let db = parse_wndb_sources(&[(Pos::Verb, "data.verb", verb)]).unwrap();
        assert_eq!(db.relations().len(), 1);
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let bad = "  header\n02084071 05 n zz dog 0 000 | x\n";
        let err = parse_wndb_sources(&[(Pos::Noun, "data.noun", bad)]).unwrap_err();
        match err {
            IngestError::Malformed { file, line, .. } => {
                assert_eq!(file, "data.noun");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn dangling_pointer_is_listed() {
        let fixture = "02084071 05 n 01 dog 0 001 @ 09999999 n 0000 | x\n";
        let err = parse_wndb_sources(&[(Pos::Noun, "data.noun", fixture)]).unwrap_err();
        match err {
            IngestError::DanglingReferences { count, sample } => {
                assert_eq!(count, 1);
                assert!(sample[0].contains("n09999999"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_lemmas_after_normalization_are_merged_with_index_remap() {
        let fixture = "00000001 05 n 02 AB 0 ab 1 001 ! 00000002 n 0201 | x\n\
00000002 05 n 01 cd 0 000 | y\n";
        let db = parse_wndb_sources(&[(Pos::Noun, "data.noun", fixture)]).unwrap();
        assert_eq!(db.synsets()[0].lemmas, vec!["ab"]);
        assert_eq!(db.relations()[0].words, Some((1, 1)));
    }

    #[test]
    fn unknown_file_name_is_rejected() {
        let err = parse_wndb(&[Path::new("/tmp/index.noun")]).unwrap_err();
        assert!(matches!(err, IngestError::UnknownDataFile(_)));
    }

    #[test]
    fn tsv_single_synset() {
        let db = parse_tsv("SYNSET\tx1\tn\tdog\n").unwrap();
        assert_eq!(db.synsets().len(), 1);
        assert_eq!(db.relations().len(), 0);
    }

    #[test]
    fn tsv_lexical_field_mapping() {
        let db = parse_tsv(
            "# comment\nSYNSET\ts1\tn\ta,b\nSYNSET\ts2\tv\tc,d\nREL\ts1\ts2\tderivation\tlexical:1:2\n",
        )
        .unwrap();
        assert_eq!(db.relations()[0].words, Some((1, 2)));
        assert_eq!(db.relations()[0].level(), Level::Lexical);
    }

    #[test]
    fn tsv_errors() {
        assert!(matches!(
            parse_tsv("NODE\tx\n").unwrap_err(),
            IngestError::Malformed { line: 1, .. }
        ));
        assert!(matches!(
            parse_tsv("SYNSET\ts1\tn\ta\nREL\ts1\ts9\thypernym\tsemantic\n").unwrap_err(),
            IngestError::DanglingReferences { count: 1, .. }
        ));
        assert!(matches!(
            parse_tsv("SYNSET\ts1\tn\ta\nSYNSET\ts2\tn\tb\nREL\ts1\ts2\tantonym\tlexical:1:3\n")
                .unwrap_err(),
            IngestError::WordIndexOutOfRange { index: 3, .. }
        ));
        assert!(matches!(
            parse_tsv("SYNSET\ts1\tn\ta,A\n").unwrap_err(),
            IngestError::InvalidSynset { .. }
        ));
        assert!(matches!(
            parse_tsv("SYNSET\ts1\tn\ta\nSYNSET\ts1\tn\tb\n").unwrap_err(),
            IngestError::DuplicateSynset(_)
        ));
    }

    #[test]
    fn export_of_empty_database_is_header_only() {
        let db = LexicalDatabase::default();
        assert_eq!(export_tsv(&db), format!("{TSV_HEADER}\n"));
    }

    #[test]
    fn export_one_synset_line() {
        let db = parse_tsv("SYNSET\tq\tr\tquickly,fast\n").unwrap();
        let out = export_tsv(&db);
        let lines: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, vec!["SYNSET\tq\tr\tquickly,fast"]);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_lemma("Dog"), "dog");
        assert_eq!(normalize_lemma("hot dog"), "hot_dog");
        assert_eq!(normalize_lemma("galore(ip)"), "galore");
        assert_eq!(normalize_lemma("read/write"), "read_write");
        assert_eq!(normalize_lemma("o'clock"), "o'clock");
        assert_eq!(normalize_lemma("U.S."), "u.s.");
    }
}
