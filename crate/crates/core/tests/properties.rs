//! Property tests for the invariants of each module.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use nexus_core::annotations::{create_annotation, moderate, Body, Decision};
use nexus_core::archival::{unit_depth, validate_unit, DateSpan, DocumentaryUnit, Level, PartialDate, Repository};
use nexus_core::fixtures;
use nexus_core::guide::similarity;
use nexus_core::helpdesk::KnowledgeBase;
use nexus_core::ingest::nested::serialize_exchange;
use nexus_core::ingest::{import_batch, import_repositories, parse, MappingProfile, UnitTree};
use nexus_core::records::unit_from_node;
use nexus_core::registry::{Direction, EdgeLabel, Graph, NodeKind, Properties, Upsert, Value};
use nexus_core::search::{Facet, Field, Filters, IndexDocument, SearchIndex};
use nexus_core::text::{normalize, tokenize, Stopwords};
use nexus_core::vocab::{Authorities, Concept, Thesaurus, Vocabulary};
use nexus_oracles as oracle;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

// ------------------------------------------------------------------- text

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn normalization_is_idempotent(s in "\\PC{0,40}") {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn case_and_diacritics_fold_away(s in "[a-zA-Z ]{0,30}") {
        prop_assert_eq!(normalize(&s.to_uppercase()), normalize(&s.to_lowercase()));
        prop_assert_eq!(tokenize(&s), oracle::tokens(&s));
        let accented: String = s.chars().map(|c| match c { 'e' => 'é', 'i' => 'í', 'u' => 'ů', 'c' => 'č', other => other }).collect();
        prop_assert_eq!(normalize(&accented), oracle::fold(&s));
    }
}

// ---------------------------------------------------------------- archival

fn unit_strategy() -> impl Strategy<Value = DocumentaryUnit> {
    (
        "[a-z0-9]{0,6}",
        prop::sample::select(vec![Level::Fonds, Level::Series, Level::File, Level::Item]),
        "[A-Za-z ]{0,12}",
        prop::option::of(1900i32..2000),
        any::<bool>(),
        prop::collection::vec("[a-z]{1,3}", 0..3),
    )
        .prop_map(|(local, level, title, year, undated, langs)| {
            let mut u = DocumentaryUnit::new(local.clone(), level, title);
            u.global_id = if local.is_empty() { String::new() } else { format!("r/{local}") };
            u.dates_of_creation = year.map(|y| DateSpan::at(PartialDate::year(y))).into_iter().collect();
            u.undated = undated;
            u.language_of_material = langs;
            u
        })
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn validation_is_pure(unit in unit_strategy()) {
        prop_assert_eq!(validate_unit(&unit), validate_unit(&unit));
    }

    /// Each element picks a parent among earlier units (or none).
    #[test]
    fn attaching_adds_one_level(parents in prop::collection::vec(prop::option::of(any::<prop::sample::Index>()), 1..30)) {
        let mut g = repo_graph(&["r"]);
        for (i, parent) in parents.iter().enumerate() {
            let mut u = undated(&format!("u{i}"), "unit");
            u.parent = parent.filter(|_| i > 0).map(|p| format!("u{}", p.index(i)));
            let r = import_batch(&mut g, &[UnitTree::leaf("x", u.clone())], "r").unwrap();
            prop_assert_eq!(r.created, 1);
            let child = unit_depth(&format!("r/u{i}"), &g).unwrap();
            match &u.parent {
                Some(p) => prop_assert_eq!(child, unit_depth(&format!("r/{p}"), &g).unwrap() + 1),
                None => prop_assert_eq!(child, 0),
            }
        }
    }
}

// ---------------------------------------------------------------- registry

#[derive(Debug, Clone)]
enum Op {
    Upsert(usize, usize, u8),
    Edge(usize, usize, usize),
    Unlink(prop::sample::Index),
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => (0..12usize, 0..3usize, 0..3u8).prop_map(|(n, k, v)| Op::Upsert(n, k, v)),
        3 => (0..12usize, 0..EdgeLabel::ALL.len(), 0..12usize).prop_map(|(a, l, b)| Op::Edge(a, l, b)),
        1 => any::<prop::sample::Index>().prop_map(Op::Unlink),
    ]
}

const KINDS: [NodeKind; 3] = [NodeKind::Unit, NodeKind::Concept, NodeKind::AuthorityPerson];

fn run_ops(ops: &[Op]) -> Graph {
    let mut g = Graph::new();
    for op in ops {
        match op {
            Op::Upsert(n, k, v) => {
                let _ = g.upsert_node(KINDS[*k], &format!("n{n}"), Properties::from([("v".to_string(), Value::from(*v as i64))]));
            }
            Op::Edge(a, l, b) => {
                // half of all attempts are partOf to exercise the guards
                let label = if l % 2 == 0 { EdgeLabel::PartOf } else { EdgeLabel::ALL[*l] };
                let _ = g.add_edge(&format!("n{a}"), label, &format!("n{b}"), Properties::new());
            }
            Op::Unlink(i) => {
                let edges: Vec<_> = g.edges().map(|(k, _)| k.clone()).collect();
                if !edges.is_empty() {
                    let k = &edges[i.index(edges.len())];
                    g.remove_edge(&k.src, k.label, &k.dst);
                }
            }
        }
    }
    g
}

fn edges_of(g: &Graph) -> Vec<oracle::graph::Edge> {
    g.edges().map(|(k, _)| (k.src.clone(), k.label.as_str().to_string(), k.dst.clone())).collect()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn graph_invariants_hold_after_any_sequence(ops in prop::collection::vec(op_strategy(), 0..120)) {
        let g = run_ops(&ops);
        let nodes: BTreeSet<String> = g.nodes().map(|n| n.id.clone()).collect();
        prop_assert_eq!(oracle::graph::violations(&nodes, &edges_of(&g)), Vec::<String>::new());
        prop_assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn upsert_is_idempotent(ops in prop::collection::vec(op_strategy(), 0..60), n in 0..12usize, v in 0..3i64) {
        let mut g = run_ops(&ops);
        let id = format!("n{n}");
        let kind = g.node(&id).map_or(NodeKind::Unit, |node| node.kind);
        let props = Properties::from([("v".to_string(), Value::from(v))]);
        g.upsert_node(kind, &id, props.clone()).unwrap();
        let (count, node) = (g.node_count(), g.node(&id).cloned());
        prop_assert_eq!(g.upsert_node(kind, &id, props).unwrap(), Upsert::Unchanged);
        prop_assert_eq!(g.node_count(), count);
        prop_assert_eq!(g.node(&id).cloned(), node);
    }

    #[test]
    fn snapshot_round_trip(ops in prop::collection::vec(op_strategy(), 0..120)) {
        let g = run_ops(&ops);
        let restored = Graph::from_snapshot_str(&g.to_snapshot_string()).unwrap();
        prop_assert!(g.nodes().eq(restored.nodes()));
        prop_assert!(g.edges().eq(restored.edges()));
    }

    #[test]
    fn closure_matches_breadth_first_reference(ops in prop::collection::vec(op_strategy(), 0..120), start in 0..12usize, depth in prop::option::of(0..4usize)) {
        let g = run_ops(&ops);
        let id = format!("n{start}");
        prop_assume!(g.contains(&id));
        let edges = edges_of(&g);
        for label in [EdgeLabel::PartOf, EdgeLabel::Subject, EdgeLabel::Narrower] {
            for (direction, outward) in [(Direction::Out, true), (Direction::In, false)] {
                let got = g.closure(&id, label, direction, depth).unwrap();
                prop_assert_eq!(&got, &oracle::graph::closure(&edges, &id, label.as_str(), outward, depth));
                prop_assert_eq!(got, g.closure(&id, label, direction, depth).unwrap());
            }
        }
    }
}

// ------------------------------------------------------------------ ingest

fn repository(id: &str) -> Repository {
    Repository {
        ehri_id: id.to_string(),
        authorized_form_of_name: format!("Archive {id}"),
        other_names: vec![],
        country: "CZ".into(),
        address: String::new(),
        contact: "desk@example.org".into(),
        description_status: Default::default(),
        holdings_summary: String::new(),
        harvest_endpoint: None,
        harvest_capable: false,
    }
}

fn repo_graph(ids: &[&str]) -> Graph {
    let mut g = Graph::new();
    let repos: Vec<Repository> = ids.iter().map(|id| repository(id)).collect();
    assert!(import_repositories(&mut g, &repos).rejected.is_empty());
    g
}

fn undated(local_id: &str, title: &str) -> DocumentaryUnit {
    let mut u = DocumentaryUnit::new(local_id, Level::File, title);
    u.undated = true;
    u
}

/// Trees over a small id pool; some titles are empty so quarantine kicks in.
fn trees_strategy() -> impl Strategy<Value = Vec<UnitTree>> {
    let leaf = ("[a-e]", "[A-Z]?[a-z]{0,3}").prop_map(|(id, title)| UnitTree::leaf("s", undated(&id, &title)));
    let tree = leaf.prop_recursive(3, 12, 3, |inner| {
        (("[f-j]", "[A-Z][a-z]{0,3}"), prop::collection::vec(inner, 0..3)).prop_map(|((id, title), children)| UnitTree {
            source_ref: "s".into(),
            unit: undated(&id, &title),
            children,
        })
    });
    prop::collection::vec(tree, 0..4)
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn import_conserves_and_is_idempotent(first in trees_strategy(), second in trees_strategy()) {
        let mut g = repo_graph(&["r"]);
        import_batch(&mut g, &first, "r").unwrap();
        let report = import_batch(&mut g, &second, "r").unwrap();
        let records: usize = second.iter().map(UnitTree::size).sum();
        prop_assert_eq!(report.total(), records);
        prop_assert_eq!(report.imported.len(), report.created + report.updated + report.unchanged);

        let nodes: Vec<_> = g.nodes().cloned().collect();
        let edges: Vec<_> = g.edges().map(|(k, p)| (k.clone(), p.clone())).collect();
        let again = import_batch(&mut g, &second, "r").unwrap();
        prop_assert_eq!(again.created + again.updated, 0);
        prop_assert_eq!(g.nodes().cloned().collect::<Vec<_>>(), nodes);
        prop_assert_eq!(g.edges().map(|(k, p)| (k.clone(), p.clone())).collect::<Vec<_>>(), edges);

        for unit in g.nodes_of_kind(NodeKind::Unit) {
            prop_assert!(g.linked(&unit.id, EdgeLabel::HeldBy, "r"), "{} has no holder", unit.id);
            let declared = unit.text("parent").unwrap_or_default();
            prop_assert_eq!(g.parent(&unit.id, EdgeLabel::PartOf).unwrap_or_default(), declared);
        }
    }

    #[test]
    fn exchange_format_round_trip(trees in trees_strategy()) {
        let profile = MappingProfile::canonical_exchange();
        let parsed = parse(serialize_exchange(&trees).as_bytes(), &profile).unwrap();
        let units = |t: &[UnitTree]| t.iter().flat_map(|t| t.units()).map(|u| (u.local_id.clone(), u.title.clone(), u.level, u.undated)).collect::<Vec<_>>();
        prop_assert_eq!(units(&parsed.trees), units(&trees));
        prop_assert_eq!(parsed.trees.iter().map(UnitTree::depth).collect::<Vec<_>>(), trees.iter().map(UnitTree::depth).collect::<Vec<_>>());
        let reparsed = parse(serialize_exchange(&parsed.trees).as_bytes(), &profile).unwrap();
        let strip = |t: &[UnitTree]| t.iter().flat_map(|t| t.units()).cloned().collect::<Vec<_>>();
        prop_assert_eq!(strip(&reparsed.trees), strip(&parsed.trees));
    }
}

// ------------------------------------------------------------------- vocab

fn thesaurus_strategy() -> impl Strategy<Value = BTreeMap<String, Concept>> {
    prop::collection::vec(
        (prop::collection::vec(("(en|de|cs)", "[a-d]{1,2}"), 1..3), prop::collection::vec(any::<prop::sample::Index>(), 0..3)),
        1..12,
    )
    .prop_map(|specs| {
        let n = specs.len();
        specs
            .into_iter()
            .enumerate()
            .map(|(i, (labels, narrower))| {
                let mut c = Concept { concept_id: format!("c{i}"), ..Concept::default() };
                for (lang, label) in labels {
                    c.pref_label.entry(lang).or_insert(label);
                }
                // forward links only, so the hierarchy is acyclic
                c.narrower = narrower.iter().filter(|_| i + 1 < n).map(|x| format!("c{}", i + 1 + x.index(n - i - 1))).collect::<BTreeSet<_>>().into_iter().collect();
                (c.concept_id.clone(), c)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn adding_a_label_never_shrinks_expansion(
        concepts in thesaurus_strategy(),
        target in any::<prop::sample::Index>(),
        label in "[a-d]{1,2}",
        terms in prop::collection::vec("[a-d]{1,2}", 1..3),
        bounded in prop::option::of(0..3usize),
    ) {
        let before = Thesaurus::from_concepts(concepts.clone()).unwrap();
        let mut grown = concepts;
        let id = grown.keys().nth(target.index(grown.len())).unwrap().clone();
        grown.get_mut(&id).unwrap().alt_labels.entry("en".into()).or_default().push(label);
        let after = Thesaurus::from_concepts(grown).unwrap();
        for languages in [vec![], vec!["en".to_string()], vec!["de".to_string(), "cs".to_string()]] {
            let small = before.expand_query(&terms, &languages, bounded).expanded_terms;
            let large = after.expand_query(&terms, &languages, bounded).expanded_terms;
            prop_assert!(small.is_subset(&large), "{small:?} not within {large:?}");
        }
    }

    #[test]
    fn loaded_hierarchies_are_acyclic(links in prop::collection::vec((0..8usize, 0..8usize), 0..14)) {
        let mut text = String::new();
        for i in 0..8 {
            text.push_str(&format!("c{i}\tprefLabel\ten\tterm {i}\n"));
        }
        for (a, b) in &links {
            text.push_str(&format!("c{a}\tnarrower\t-\tc{b}\n"));
        }
        let pairs: Vec<(String, String)> = links.iter().map(|(a, b)| (format!("c{a}"), format!("c{b}"))).collect();
        match Thesaurus::parse(&text) {
            Ok(t) => {
                let loaded: Vec<(String, String)> = t.concepts().flat_map(|c| c.narrower.iter().map(|n| (c.concept_id.clone(), n.clone()))).collect();
                prop_assert!(!oracle::graph::cyclic(&loaded));
            }
            Err(e) => {
                prop_assert_eq!(e.code(), "cycle-detected");
                prop_assert!(oracle::graph::cyclic(&pairs));
            }
        }
    }

    /// Random concordance loads and merges; every (database, local id) pair
    /// stays attached to at most one person.
    #[test]
    fn concordance_is_a_partial_injection(
        steps in prop::collection::vec(prop_oneof![
            prop::collection::vec(((0..2usize), (0..4usize), (0..5usize)), 1..4).prop_map(Ok),
            ((0..5usize), (0..5usize)).prop_map(Err),
        ], 1..12)
    ) {
        let mut a = Authorities::default();
        let persons: String = (0..5).map(|i| format!("p{i}\tname\t\tPerson {i}\n")).collect();
        a.load_persons_str(&persons).unwrap();
        for step in steps {
            match step {
                Ok(rows) => {
                    let text: String = rows.iter().map(|(db, local, p)| format!("db{db}\t{local}\tp{p}\n")).collect();
                    let _ = a.load_concordance_str(&text);
                }
                Err((x, y)) => {
                    let (x, y) = (format!("p{x}"), format!("p{y}"));
                    let resolve = |id: &str| a.alias(id).unwrap_or(id).to_string();
                    let _ = a.merge_persons(&resolve(&x), &resolve(&y));
                }
            }
            let mut owners: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
            for p in a.persons() {
                for pair in &p.concordance {
                    owners.entry(pair.clone()).or_default().push(p.person_id.clone());
                }
            }
            for (pair, who) in &owners {
                prop_assert_eq!(who.len(), 1, "{:?} held by {:?}", pair, who);
                prop_assert_eq!(&a.resolve_person(&pair.0, &pair.1).unwrap().person_id, &who[0]);
            }
        }
    }
}

// ------------------------------------------------------------------ search

fn docs_strategy() -> impl Strategy<Value = Vec<IndexDocument>> {
    prop::collection::vec(
        (
            prop::collection::vec("(terezin|Terezín|ghetto|lists|orders|[a-c])", 0..6),
            prop::collection::vec("[a-e]", 0..4),
            "(de|cs|en)",
            "(1940|1950)s",
        ),
        1..40,
    )
    .prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, (title, keywords, lang, decade))| {
                let mut d = IndexDocument::new(format!("r/{i}"));
                let title: Vec<String> = title.iter().flat_map(|t| tokenize(t)).collect();
                if !title.is_empty() {
                    d.field_tokens.insert(Field::Title, title);
                }
                if !keywords.is_empty() {
                    d.field_tokens.insert(Field::Keywords, keywords);
                }
                d.facets.insert(Facet::LanguageOfMaterial, vec![lang]);
                d.facets.insert(Facet::DateBucket, vec![decade]);
                d
            })
            .collect()
    })
}

fn all_hits(index: &SearchIndex, query: &str, filters: &Filters) -> Vec<(String, f64)> {
    index
        .search(&Thesaurus::default(), query, &[], filters, 1, 500)
        .unwrap()
        .hits
        .into_iter()
        .map(|h| (h.unit_global_id, h.score))
        .collect()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn filters_only_narrow(docs in docs_strategy(), query in "(terezin|ghetto|a|b|d)( (lists|c|e))?", lang in "(de|cs|en)", decade in "(1940|1950)s") {
        let index = SearchIndex::from_documents(docs, Stopwords::empty(), 0);
        let mut filters = Filters::new();
        let mut previous: Vec<(String, f64)> = all_hits(&index, &query, &filters);
        for (k, v) in [("languageOfMaterial", lang), ("dateBucket", decade)] {
            filters.insert(k.into(), v);
            let narrowed = all_hits(&index, &query, &filters);
            prop_assert!(narrowed.len() <= previous.len());
            prop_assert!(narrowed.iter().all(|h| previous.contains(h)));
            previous = narrowed;
        }
    }

    #[test]
    fn pages_concatenate_to_the_full_list(docs in docs_strategy(), query in "(terezin|ghetto|a|b)( (orders|c))?", size in 1..7usize) {
        let index = SearchIndex::from_documents(docs, Stopwords::empty(), 0);
        let full = all_hits(&index, &query, &Filters::new());
        let mut paged = Vec::new();
        for page in 1.. {
            let r = index.search(&Thesaurus::default(), &query, &[], &Filters::new(), page, size).unwrap();
            prop_assert_eq!(r.total_hits, full.len());
            if r.hits.is_empty() {
                break;
            }
            paged.extend(r.hits.into_iter().map(|h| (h.unit_global_id, h.score)));
        }
        prop_assert_eq!(paged, full);
    }

    #[test]
    fn scoring_is_deterministic_and_folding_invariant(docs in docs_strategy()) {
        let a = SearchIndex::from_documents(docs.clone(), Stopwords::empty(), 0);
        let b = SearchIndex::from_documents(docs, Stopwords::empty(), 0);
        let bits = |hits: Vec<(String, f64)>| hits.into_iter().map(|(id, s)| (id, s.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(all_hits(&a, "terezin ghetto", &Filters::new())), bits(all_hits(&b, "terezin ghetto", &Filters::new())));
        prop_assert_eq!(bits(all_hits(&a, "TEREZÍN", &Filters::new())), bits(all_hits(&a, "terezin", &Filters::new())));
    }
}

// ------------------------------------------------------------- annotations

#[test]
fn accepting_a_duplicate_concept_link_keeps_one_keyword() {
    let mut g = repo_graph(&["r"]);
    g.upsert_node(NodeKind::Concept, "kw-lists", Properties::new()).unwrap();
    import_batch(&mut g, &[UnitTree::leaf("s", undated("1", "Transport list"))], "r").unwrap();
    let now = chrono_now();
    for _ in 0..2 {
        let a = create_annotation(&mut g, "r/1", Body::ConceptLink { concept_id: "kw-lists".into() }, "reader", now).unwrap();
        moderate(&mut g, &a.annotation_id, Decision::Accept, "mod", None).unwrap();
    }
    let unit = unit_from_node(g.node("r/1").unwrap(), true).unwrap();
    assert_eq!(unit.keywords.iter().filter(|k| *k == "kw-lists").count(), 1);
    assert_eq!(g.neighbor_ids("r/1", EdgeLabel::Subject, Direction::Out).unwrap(), vec!["kw-lists".to_string()]);
}

fn chrono_now() -> chrono::DateTime<chrono::Utc> {
    chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap()
}

// ---------------------------------------------------------------- helpdesk

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn routing_ignores_word_order(
        holdings in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 1..6), 1..6),
        question in prop::collection::vec("[a-f]{1,2}", 1..5),
        shuffle in any::<prop::sample::Index>(),
    ) {
        let ids: Vec<String> = (0..holdings.len()).map(|i| format!("k{i}")).collect();
        let mut g = repo_graph(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        for (id, titles) in ids.iter().zip(&holdings) {
            let trees: Vec<UnitTree> = titles.iter().enumerate().map(|(j, t)| UnitTree::leaf("s", undated(&format!("u{j}"), t))).collect();
            import_batch(&mut g, &trees, id).unwrap();
        }
        let units = SearchIndex::build(&g, &Vocabulary::default(), Stopwords::empty());
        let kb = KnowledgeBase::build(&g, &units, Stopwords::empty());
        let forward = kb.route(&Thesaurus::default(), &question.join(" "), &[]).unwrap();
        let mut rotated = question.clone();
        rotated.rotate_left(shuffle.index(question.len()));
        rotated.reverse();
        let other = kb.route(&Thesaurus::default(), &rotated.join(" "), &[]).unwrap();
        let view = |a: &nexus_core::helpdesk::RoutingAnswer| a.ranked.iter().map(|r| (r.repository_ehri_id.clone(), r.score.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(view(&forward), view(&other));
        for r in &forward.ranked {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.score), "score {}", r.score);
        }
    }
}

// ------------------------------------------------------------------- guide

fn span_strategy() -> impl Strategy<Value = Vec<DateSpan>> {
    prop::collection::vec((1938i32..1948, 0..3i32).prop_map(|(y, len)| DateSpan::between(PartialDate::year(y), PartialDate::year(y + len))), 0..3)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn similarity_is_symmetric(a in "[a-dáé .]{0,20}", b in "[a-dáé .]{0,20}", da in span_strategy(), db in span_strategy()) {
        let ab = similarity(&a, &da, &b, &db);
        prop_assert_eq!(ab, similarity(&b, &db, &a, &da));
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}

// ---------------------------------------------------------------- fixtures

proptest! {
    #![proptest_config(config(4))]

    #[test]
    fn fixtures_are_deterministic_per_seed(seed in any::<u64>()) {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = fixtures::generate_fixtures(a.path(), seed).unwrap();
        let mb = fixtures::generate_fixtures(b.path(), seed).unwrap();
        prop_assert_eq!(&ma, &mb);
        for entry in &ma.entries {
            prop_assert_eq!(fixtures::read_entry(a.path(), entry).unwrap(), fixtures::read_entry(b.path(), entry).unwrap());
        }
        prop_assert_eq!(fixtures::verify_manifest(a.path()).unwrap(), ma);
    }
}
