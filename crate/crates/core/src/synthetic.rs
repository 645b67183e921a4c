//! Seeded generators for tests, benchmarks and the bundled fixtures: random
//! graphs, a small two-cluster WordNet and review corpora whose sentiment
//! words live in opposite clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, WordGraph};
use crate::ingest::{export_tsv, LexicalDatabase, Pos, Relation, Synset, SynsetId};
use crate::text::Review;

/// G(n, p) over lemmas `w0000, w0001, ...`; every unordered pair is an edge
/// with probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> WordGraph {
    let width = n.saturating_sub(1).to_string().len().max(4);
    let vocab: Vec<String> = (0..n).map(|i| format!("w{i:0width$}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u as NodeId, v as NodeId));
            }
        }
    }
    WordGraph::from_edges(vocab, edges).expect("generated vocabulary is sorted")
}

// (id, pos, lemmas, hypernym parent)
type ToySynset = (
    &'static str,
    Pos,
    &'static [&'static str],
    Option<&'static str>,
);

const TOY_SYNSETS: &[ToySynset] = &[
    ("p00", Pos::Noun, &["goodness", "good_quality"], None),
    ("p01", Pos::Adjective, &["good"], Some("p00")),
    ("p02", Pos::Adjective, &["excellent", "superb"], Some("p01")),
    ("p03", Pos::Adjective, &["great", "terrific"], Some("p01")),
    ("p04", Pos::Adjective, &["fine", "nice"], Some("p01")),
    (
        "p05",
        Pos::Adjective,
        &["wonderful", "marvelous"],
        Some("p02"),
    ),
    ("p06", Pos::Adjective, &["perfect"], Some("p02")),
    ("p07", Pos::Noun, &["pleasure", "delight"], Some("p00")),
    ("p08", Pos::Noun, &["joy", "happiness"], Some("p07")),
    ("p09", Pos::Noun, &["enjoyment"], Some("p07")),
    ("p10", Pos::Verb, &["love", "adore"], Some("p07")),
    ("p11", Pos::Verb, &["enjoy", "relish"], Some("p09")),
    ("p12", Pos::Verb, &["like"], Some("p10")),
    ("p13", Pos::Noun, &["praise", "acclaim"], Some("p00")),
    ("p14", Pos::Noun, &["compliment"], Some("p13")),
    ("p15", Pos::Verb, &["recommend"], Some("p13")),
    ("p16", Pos::Noun, &["merit", "worth"], Some("p00")),
    ("p17", Pos::Noun, &["value"], Some("p16")),
    ("p18", Pos::Noun, &["quality"], Some("p16")),
    (
        "p19",
        Pos::Adjective,
        &["reliable", "dependable"],
        Some("p18"),
    ),
    ("p20", Pos::Adjective, &["sturdy", "durable"], Some("p19")),
    ("p21", Pos::Adjective, &["comfortable"], Some("p18")),
    ("p22", Pos::Adjective, &["happy", "glad"], Some("p08")),
    (
        "p23",
        Pos::Adjective,
        &["pleased", "satisfied"],
        Some("p22"),
    ),
    ("p24", Pos::Adjective, &["beautiful", "lovely"], Some("p04")),
    ("n00", Pos::Noun, &["badness"], None),
    ("n01", Pos::Adjective, &["bad"], Some("n00")),
    ("n02", Pos::Adjective, &["terrible", "awful"], Some("n01")),
    (
        "n03",
        Pos::Adjective,
        &["horrible", "dreadful"],
        Some("n01"),
    ),
    ("n04", Pos::Adjective, &["poor", "inferior"], Some("n01")),
    (
        "n05",
        Pos::Adjective,
        &["useless", "worthless"],
        Some("n04"),
    ),
    ("n06", Pos::Adjective, &["broken"], Some("n04")),
    ("n07", Pos::Noun, &["displeasure", "annoyance"], Some("n00")),
    ("n08", Pos::Noun, &["sadness", "sorrow"], Some("n07")),
    ("n09", Pos::Noun, &["disappointment"], Some("n07")),
    ("n10", Pos::Verb, &["hate", "loathe"], Some("n07")),
    ("n11", Pos::Verb, &["dislike"], Some("n10")),
    ("n12", Pos::Verb, &["regret"], Some("n09")),
    ("n13", Pos::Noun, &["complaint", "criticism"], Some("n00")),
    ("n14", Pos::Verb, &["complain"], Some("n13")),
    ("n15", Pos::Noun, &["defect", "flaw"], Some("n00")),
    ("n16", Pos::Noun, &["fault"], Some("n15")),
    ("n17", Pos::Adjective, &["cheap", "flimsy"], Some("n15")),
    ("n18", Pos::Adjective, &["fragile"], Some("n17")),
    ("n19", Pos::Adjective, &["uncomfortable"], Some("n15")),
    ("n20", Pos::Adjective, &["sad", "unhappy"], Some("n08")),
    (
        "n21",
        Pos::Adjective,
        &["disappointed", "dissatisfied"],
        Some("n20"),
    ),
    ("n22", Pos::Verb, &["waste", "squander"], Some("n13")),
    ("n23", Pos::Adjective, &["ugly"], Some("n03")),
    ("n24", Pos::Adjective, &["noisy"], Some("n15")),
];

// (kind, source, source word, target, target word); word indices are 1-based.
const TOY_LEXICAL: &[(&str, &str, u16, &str, u16)] = &[
    ("antonym", "p01", 1, "n01", 1),
    ("antonym", "n01", 1, "p01", 1),
    ("derivation", "p22", 1, "p08", 2),
    ("derivation", "p11", 1, "p09", 1),
    ("derivation", "n14", 1, "n13", 1),
    ("derivation", "n20", 1, "n08", 1),
    ("derivation", "n21", 1, "n09", 1),
];

fn toy_id(short: &str) -> SynsetId {
    SynsetId::new(format!("toy.{short}"))
}

/// About fifty synsets in two hypernym trees, one rooted at `goodness` and
/// one at `badness`, joined only by the `good`/`bad` antonym pair.
pub fn toy_wordnet() -> LexicalDatabase {
    let synsets = TOY_SYNSETS
        .iter()
        .map(|(id, pos, lemmas, _)| Synset {
            id: toy_id(id),
            pos: *pos,
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let mut relations = Vec::new();
    for (id, _, _, parent) in TOY_SYNSETS {
        if let Some(parent) = parent {
            relations.push(Relation::semantic(toy_id(id), toy_id(parent), "hypernym"));
            relations.push(Relation::semantic(toy_id(parent), toy_id(id), "hyponym"));
        }
    }
    for (kind, s, sw, t, tw) in TOY_LEXICAL {
        relations.push(Relation::lexical(toy_id(s), toy_id(t), *kind, *sw, *tw));
    }
    LexicalDatabase::new(synsets, relations).expect("toy database is well formed")
}

pub fn toy_wordnet_tsv() -> String {
    export_tsv(&toy_wordnet())
}

/// Surface forms, some inflected, that resolve into the positive cluster.
pub const POSITIVE_WORDS: &[&str] = &[
    "good",
    "excellent",
    "superb",
    "great",
    "terrific",
    "fine",
    "nice",
    "wonderful",
    "marvelous",
    "perfect",
    "pleasure",
    "delighted",
    "joy",
    "happiness",
    "enjoyment",
    "loved",
    "love",
    "adores",
    "enjoyed",
    "enjoys",
    "relish",
    "liked",
    "likes",
    "praise",
    "compliments",
    "recommend",
    "recommended",
    "merit",
    "worth",
    "value",
    "quality",
    "reliable",
    "dependable",
    "sturdy",
    "durable",
    "comfortable",
    "happy",
    "glad",
    "pleased",
    "satisfied",
    "beautiful",
    "lovely",
];

/// Surface forms, some inflected, that resolve into the negative cluster.
pub const NEGATIVE_WORDS: &[&str] = &[
    "bad",
    "terrible",
    "awful",
    "horrible",
    "dreadful",
    "poor",
    "inferior",
    "useless",
    "worthless",
    "broken",
    "displeasure",
    "annoyance",
    "sadness",
    "sorrow",
    "disappointment",
    "hated",
    "hates",
    "loathe",
    "disliked",
    "regret",
    "regretted",
    "complaint",
    "complaints",
    "criticism",
    "complained",
    "defect",
    "defects",
    "flaws",
    "fault",
    "faults",
    "cheap",
    "flimsy",
    "fragile",
    "uncomfortable",
    "sad",
    "unhappy",
    "disappointed",
    "dissatisfied",
    "wasted",
    "ugly",
    "noisy",
];

/// Words outside the toy vocabulary.
pub const FILLER_WORDS: &[&str] = &[
    "the", "product", "it", "was", "this", "really", "and", "my", "item", "after", "week", "box",
    "arrived", "order", "with", "for", "kids", "use", "daily", "color",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    /// Probability of negative, neutral and positive documents.
    pub class_mix: [f64; 3],
    pub min_words: usize,
    pub max_words: usize,
    /// Share of on-class sentiment words in polar documents.
    pub on_class: f64,
    /// Share of opposite-class sentiment words in polar documents.
    pub off_class: f64,
    /// Share of filler words in every document.
    pub filler: f64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        SyntheticCorpus {
            class_mix: [0.25, 0.15, 0.6],
            min_words: 8,
            max_words: 20,
            on_class: 0.85,
            off_class: 0.05,
            filler: 0.1,
        }
    }
}

impl SyntheticCorpus {
    /// `n` reviews tagged with `domain`. Star ratings are drawn uniformly
    /// within the class: 1–2, 3 or 4–5.
    pub fn generate(&self, n: usize, seed: u64, domain: Option<&str>) -> Vec<Review> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.review(&mut rng, domain)).collect()
    }

    fn review(&self, rng: &mut ChaCha8Rng, domain: Option<&str>) -> Review {
        let u: f64 = rng.random();
        let class = if u < self.class_mix[0] {
            0
        } else if u < self.class_mix[0] + self.class_mix[1] {
            1
        } else {
            2
        };
        let (p_pos, p_neg) = match class {
            0 => (self.off_class, self.on_class),
            1 => {
                let half = (1.0 - self.filler) / 2.0;
                (half, half)
            }
            _ => (self.on_class, self.off_class),
        };
        let len = rng.random_range(self.min_words..=self.max_words);
        let words: Vec<&str> = (0..len)
            .map(|_| {
                let r: f64 = rng.random();
                let list = if r < p_pos {
                    POSITIVE_WORDS
                } else if r < p_pos + p_neg {
                    NEGATIVE_WORDS
                } else {
                    FILLER_WORDS
                };
                list[rng.random_range(0..list.len())]
            })
            .collect();
        let stars = match class {
            0 => rng.random_range(1..=2),
            1 => 3,
            _ => rng.random_range(4..=5),
        };
        Review {
            text: sentence_case(&words),
            stars: stars as f64,
            domain: domain.map(str::to_string),
        }
    }
}

fn sentence_case(words: &[&str]) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        let upper = first.to_uppercase();
        text.replace_range(..1, &upper);
    }
    text.push('.');
    text
}

/// One JSON object per line.
pub fn reviews_to_jsonl(reviews: &[Review]) -> String {
    reviews
        .iter()
        .map(|r| serde_json::to_string(r).expect("review serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_word_graph, graph_stats};
    use crate::text::Lemmatizer;

    #[test]
    fn random_graph_is_seeded() {
        let a = random_graph(40, 0.1, 9);
        let b = random_graph(40, 0.1, 9);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert_eq!(random_graph(40, 0.0, 1).edge_count(), 0);
        assert_eq!(random_graph(40, 1.0, 1).edge_count(), 40 * 39 / 2);
        assert_eq!(random_graph(0, 0.5, 1).node_count(), 0);
    }

    #[test]
    fn toy_wordnet_is_two_joined_clusters() {
        let db = toy_wordnet();
        assert_eq!(db.synsets().len(), 50);
        let g = build_word_graph(&db).unwrap();
        let stats = graph_stats(&g);
        assert_eq!(stats.component_sizes, vec![g.node_count()]);
        // dropping the antonym pair splits the graph in two
        let edges: Vec<_> = g
            .edges()
            .filter(|&(u, v)| {
                let pair = (g.lemma(u), g.lemma(v));
                pair != ("bad", "good")
            })
            .collect();
        let cut = WordGraph::from_edges(g.vocab().to_vec(), edges).unwrap();
        assert_eq!(graph_stats(&cut).component_sizes.len(), 2);
    }

    #[test]
    fn lexicon_resolves_into_the_right_cluster() {
        let g = build_word_graph(&toy_wordnet()).unwrap();
        let lem = Lemmatizer::new();
        let resolve = |w: &str| {
            lem.candidates(w)
                .into_iter()
                .find(|c| g.node_id(c).is_some())
        };
        let positive: Vec<String> = TOY_SYNSETS
            .iter()
            .filter(|s| s.0.starts_with('p'))
            .flat_map(|s| s.2.iter().map(|l| l.to_string()))
            .collect();
        for w in POSITIVE_WORDS {
            let lemma = resolve(w).unwrap_or_else(|| panic!("{w} unresolved"));
            assert!(positive.contains(&lemma), "{w} -> {lemma}");
        }
        for w in NEGATIVE_WORDS {
            let lemma = resolve(w).unwrap_or_else(|| panic!("{w} unresolved"));
            assert!(!positive.contains(&lemma), "{w} -> {lemma}");
        }
        for w in FILLER_WORDS {
            assert_eq!(resolve(w), None, "{w}");
        }
    }

    #[test]
    fn corpus_is_seeded_and_mixed() {
        let gen = SyntheticCorpus::default();
        let a = gen.generate(1000, 5, Some("toys"));
        assert_eq!(a, gen.generate(1000, 5, Some("toys")));
        let pos = a.iter().filter(|r| r.stars >= 4.0).count();
        let neu = a.iter().filter(|r| r.stars == 3.0).count();
        assert!((520..680).contains(&pos), "{pos}");
        assert!((100..200).contains(&neu), "{neu}");
        assert!(a.iter().all(|r| r.text.ends_with('.')));
        let jsonl = reviews_to_jsonl(&a[..2]);
        assert_eq!(jsonl.lines().count(), 2);
    }
}
