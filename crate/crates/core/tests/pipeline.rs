use std::os::unix::fs::FileExt;

use proptest::prelude::*;

use wordnet2vec::apsp::{bfs_row, run_apsp, ApspConfig};
use wordnet2vec::graph::build_word_graph;
use wordnet2vec::ingest::{
    export_tsv, parse_tsv, parse_wndb_sources, LexicalDatabase, Pos, Relation, Synset, SynsetId,
};
use wordnet2vec::matrix::open_matrix;
use wordnet2vec::synthetic::{random_graph, toy_wordnet};

fn arb_db() -> impl Strategy<Value = LexicalDatabase> {
    let synset = (
        prop::sample::select(Pos::ALL.to_vec()),
        prop::collection::btree_set("[a-z]{1,3}(_[a-z]{1,2})?", 1..4),
    );
    prop::collection::vec(synset, 1..12)
        .prop_flat_map(|synsets| {
            let n = synsets.len();
            let rel = (
                0..n,
                0..n,
                prop::sample::select(vec!["hypernym", "similar_to", "antonym"]),
                any::<bool>(),
                any::<u16>(),
                any::<u16>(),
            );
            (Just(synsets), prop::collection::vec(rel, 0..20))
        })
        .prop_map(|(raw, rels)| {
            let synsets: Vec<Synset> = raw
                .iter()
                .enumerate()
                .map(|(i, (pos, lemmas))| Synset {
                    id: SynsetId::new(format!("s{i:02}")),
                    pos: *pos,
                    lemmas: lemmas.iter().cloned().collect(),
                })
                .collect();
            let relations = rels
                .into_iter()
                .map(|(s, t, kind, lexical, a, b)| {
                    let (src, dst) = (synsets[s].id.clone(), synsets[t].id.clone());
                    if lexical {
                        let sw = a % synsets[s].lemmas.len() as u16 + 1;
                        let tw = b % synsets[t].lemmas.len() as u16 + 1;
                        Relation::lexical(src, dst, kind, sw, tw)
                    } else {
                        Relation::semantic(src, dst, kind)
                    }
                })
                .collect();
            LexicalDatabase::new(synsets, relations).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tsv_round_trip(db in arb_db()) {
        let text = export_tsv(&db);
        let back = parse_tsv(&text).unwrap();
        prop_assert_eq!(&back, &db);
        prop_assert_eq!(export_tsv(&back), text);
    }

    #[test]
    fn lookup_matches_bfs(n in 1usize..40, p in 0.0f64..0.3, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.wn2v");
        let mut cfg = ApspConfig::new(&out);
        cfg.chunk_size = 5;
        run_apsp(&g, &cfg).unwrap();
        let m = open_matrix(&out).unwrap();
        for (i, lemma) in g.vocab().iter().enumerate() {
            let v = m.lookup(lemma).unwrap().unwrap();
            prop_assert_eq!(v.values, bfs_row(&g, i as u32).unwrap().distances);
        }
    }
}

#[test]
fn wndb_and_tsv_agree() {
    let noun = "  1 header line\n\
00001740 03 n 02 entity 0 thing 0 001 ~ 00002137 n 0000 | that which exists\n\
00002137 03 n 01 abstraction 0 002 @ 00001740 n 0000 + 00005000 v 0101 | a concept\n";
    let verb =
        "00005000 29 v 01 abstract 0 001 + 00002137 n 0101 01 + 02 00 | consider abstractly\n";
    let db = parse_wndb_sources(&[
        (Pos::Noun, "data.noun", noun),
        (Pos::Verb, "data.verb", verb),
    ])
    .unwrap();
    assert_eq!(db.synsets().len(), 3);
    assert_eq!(parse_tsv(&export_tsv(&db)).unwrap(), db);
    let g = build_word_graph(&db).unwrap();
    // clique {entity, thing}, both joined to abstraction, abstraction-abstract
    assert_eq!(g.edge_count(), 4);
}

#[test]
fn interrupted_apsp_resumes_to_identical_bytes() {
    let g = build_word_graph(&toy_wordnet()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.wn2v");
    let mut cfg = ApspConfig::new(&full);
    cfg.chunk_size = 7;
    run_apsp(&g, &cfg).unwrap();

    let part = dir.path().join("part.wn2v");
    let mut cfg = ApspConfig::new(&part);
    cfg.chunk_size = 7;
    cfg.max_chunks = Some(3);
    let first = run_apsp(&g, &cfg).unwrap();
    assert!(!first.complete);
    assert!(open_matrix(&part).is_err(), "partial matrix must not open");

    // Damage one finished row; the digest check must catch and redo it.
    let file = std::fs::OpenOptions::new().write(true).open(&part).unwrap();
    let len = file.metadata().unwrap().len();
    let n = g.node_count() as u64;
    file.write_all_at(&[9], len - n * n + 3).unwrap();
    drop(file);

    cfg.resume = true;
    cfg.max_chunks = None;
    cfg.worker_count = 3;
    let second = run_apsp(&g, &cfg).unwrap();
    assert!(second.complete);
    assert_eq!(second.reused_chunks, 2);
    assert_eq!(second.computed_chunks, second.total_chunks - 2);
    assert_eq!(std::fs::read(&part).unwrap(), std::fs::read(&full).unwrap());
}
