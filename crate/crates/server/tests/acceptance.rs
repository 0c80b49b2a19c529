//! Acceptance criteria, one pass/fail line each. Randomized parts use fixed
//! seeds and compare against the brute-force implementations in
//! `nexus-oracles`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body as HttpBody;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use nexus_core::annotations::{Body, Decision, State};
use nexus_core::archival::{
    unit_depth, validate_country_report, CountryReport, DateSpan, DocumentaryUnit, Level, PartialDate, Repository,
    DEFAULT_REPORT_BUDGET,
};
use nexus_core::fixtures::{self, Delivery, FixtureManifest, HarvestServerOptions, MockHarvestServer};
use nexus_core::guide::{similarity, DEFAULT_COPY_THRESHOLD};
use nexus_core::helpdesk::KnowledgeBase;
use nexus_core::ingest::harvest::HarvestConfig;
use nexus_core::ingest::{import_batch, import_repositories, UnitTree};
use nexus_core::portal::Portal;
use nexus_core::registry::{Direction, EdgeLabel, Graph, NodeKind, Properties, Value as PropValue};
use nexus_core::search::{Field, Filters, IndexDocument, SearchIndex};
use nexus_core::text::Stopwords;
use nexus_core::vocab::{Concept, Thesaurus, Vocabulary};
use nexus_oracles as oracle;
use nexus_server::api::{router, AppState};

type Check = fn() -> Result<(), String>;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("four-archive scenario", four_archive_scenario),
        ("expansion matches reference closure", expansion_oracle),
        ("ranking matches reference cosine", ranking_oracle),
        ("helpdesk routing matches reference", helpdesk_oracle),
        ("import idempotence and conservation", import_conservation),
        ("graph invariants under random operations", graph_invariants),
        ("annotation lifecycle", annotation_lifecycle),
        ("copy recall and symmetry", copy_recall),
        ("country report validator", country_reports),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match outcome {
            Ok(()) => println!("PASS {}: {name}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {}: {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn s(v: &str) -> String {
    v.to_string()
}

// ---------------------------------------------------------------- fixtures

struct Loaded {
    dir: tempfile::TempDir,
    manifest: FixtureManifest,
    portal: Arc<Portal>,
    list_records_requests: usize,
}

fn load_fixtures() -> Result<Loaded, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fixtures::generate_fixtures(dir.path(), fixtures::DEFAULT_SEED).map_err(|e| e.to_string())?;
    let manifest = fixtures::verify_manifest(dir.path()).map_err(|e| e.to_string())?;
    let entry = manifest.entry("jmp-export").ok_or("no jmp export")?;
    let server = MockHarvestServer::for_entry(dir.path(), entry, HarvestServerOptions::default()).map_err(|e| e.to_string())?;
    let portal = Arc::new(Portal::new(Graph::new(), Stopwords::default()).map_err(|e| e.to_string())?);
    let deliveries = BTreeMap::from([(
        s("jmp"),
        Delivery::Harvest { endpoint: server.endpoint(), config: HarvestConfig { backoff_ms: 1, ..HarvestConfig::default() } },
    )]);
    fixtures::load_portal(&portal, dir.path(), &deliveries).map_err(|e| e.to_string())?;
    let list_records_requests = server.list_records_requests();
    Ok(Loaded { dir, manifest, portal, list_records_requests })
}

fn repo_of(id: &str) -> &str {
    id.split('/').next().unwrap_or_default()
}

// ------------------------------------------------------------- criterion 1

async fn call(router: &Router, request: Request<HttpBody>) -> (StatusCode, Value) {
    let response = router.clone().oneshot(request).await.expect("router is infallible");
    let status = response.status();
    let bytes = response.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(router: &Router, uri: &str) -> (StatusCode, Value) {
    call(router, Request::get(uri).body(HttpBody::empty()).unwrap()).await
}

async fn post(router: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(router, Request::post(uri).header("content-type", "application/json").body(HttpBody::from(body.to_string())).unwrap()).await
}

fn four_archive_scenario() -> Result<(), String> {
    let started = Instant::now();
    let loaded = load_fixtures()?;
    ensure!(loaded.list_records_requests >= 1, "jmp was not harvested");
    let graph = loaded.portal.graph();

    let mut levels: BTreeMap<String, usize> = BTreeMap::new();
    for node in graph.nodes_of_kind(NodeKind::Unit) {
        let depth = unit_depth(&node.id, &graph).map_err(|e| e.to_string())? + 1;
        let e = levels.entry(repo_of(&node.id).to_string()).or_default();
        *e = (*e).max(depth);
    }
    ensure!(levels.get("jmp") == Some(&10), "jmp hierarchy has {:?} levels", levels.get("jmp"));
    ensure!(levels.get("yv").is_some_and(|l| *l <= 2), "yv has {:?} levels", levels.get("yv"));
    ensure!(levels.get("bt") == Some(&1), "bt is not flat: {:?}", levels.get("bt"));
    ensure!(levels.get("tm") == Some(&1), "tm is not flat: {:?}", levels.get("tm"));

    let app = router(AppState { portal: loaded.portal.clone(), page_size_default: 20, page_size_max: 200 });
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    let daily = loaded.manifest.daily_order_unit.clone();
    let planted = loaded.manifest.planted_copies.clone();
    rt.block_on(async {
        let (status, repos) = get(&app, "/api/v1/repositories").await;
        ensure!(status == StatusCode::OK, "repositories: {status}");
        let ids: BTreeSet<&str> = repos.as_array().ok_or("repositories is not a list")?.iter().filter_map(|r| r["ehriId"].as_str()).collect();
        ensure!(ids == BTreeSet::from(["bt", "jmp", "tm", "yv"]), "repositories {ids:?}");

        let (status, result) = get(&app, "/api/v1/search?q=Tagesbefehl&lang=en,de,cs&size=200").await;
        ensure!(status == StatusCode::OK, "search: {status} {result}");
        let hit_repos: BTreeSet<String> = result["hits"]
            .as_array()
            .ok_or("no hits array")?
            .iter()
            .filter_map(|h| h["unitGlobalId"].as_str())
            .map(|id| repo_of(id).to_string())
            .collect();
        ensure!(hit_repos.len() >= 3, "Tagesbefehl found only in {hit_repos:?}");

        let (status, suggested) = post(&app, "/api/v1/guide/terezin/copies/suggest", json!({"threshold": DEFAULT_COPY_THRESHOLD})).await;
        ensure!(status == StatusCode::OK, "suggest: {status} {suggested}");
        let pairs: BTreeSet<(String, String)> = suggested["copies"]
            .as_array()
            .ok_or("no copies array")?
            .iter()
            .map(|c| (c["unitA"].as_str().unwrap_or_default().to_string(), c["unitB"].as_str().unwrap_or_default().to_string()))
            .collect();
        for p in &planted {
            ensure!(pairs.contains(p), "planted pair {p:?} not suggested");
        }
        let (status, confirmed) = post(&app, "/api/v1/guide/terezin/copies/confirm", json!({"source": "curator", "all": true})).await;
        ensure!(status == StatusCode::OK, "confirm: {status} {confirmed}");
        let (status, view) = get(&app, &format!("/api/v1/units/{daily}")).await;
        ensure!(status == StatusCode::OK, "unit view: {status} {view}");
        let copies = view["copies"].as_array().map_or(0, Vec::len);
        ensure!(copies >= 2, "daily order has {copies} linked copies");
        Ok(())
    })?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "scenario took {elapsed:?}");
    Ok(())
}

// ------------------------------------------------------------- criterion 2

const LANGS: [&str; 3] = ["en", "de", "cs"];

fn random_case(rng: &mut ChaCha8Rng, word: &str) -> String {
    word.chars().map(|c| if rng.gen_bool(0.3) { c.to_ascii_uppercase() } else { c }).collect()
}

fn random_label(rng: &mut ChaCha8Rng, pool: &[String]) -> String {
    let n = rng.gen_range(1..=2);
    let words: Vec<String> = (0..n)
        .map(|_| {
            let w = pool.choose(rng).unwrap().clone();
            random_case(rng, &w)
        })
        .collect();
    words.join(if rng.gen_bool(0.2) { "  " } else { " " })
}

fn expansion_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    for round in 0..100 {
        let n = rng.gen_range(1..=50);
        let languages: Vec<&str> = LANGS[..rng.gen_range(1..=3)].to_vec();
        let mut concepts = BTreeMap::new();
        let mut reference = BTreeMap::new();
        for i in 0..n {
            let id = format!("c{i:02}");
            let mut concept = Concept { concept_id: id.clone(), ..Concept::default() };
            let mut labels = Vec::new();
            for lang in &languages {
                if concept.pref_label.is_empty() || rng.gen_bool(0.6) {
                    let l = random_label(&mut rng, &pool);
                    labels.push((lang.to_string(), l.clone()));
                    concept.pref_label.insert(lang.to_string(), l);
                }
                for _ in 0..rng.gen_range(0..=1) {
                    let l = random_label(&mut rng, &pool);
                    labels.push((lang.to_string(), l.clone()));
                    concept.alt_labels.entry(lang.to_string()).or_default().push(l);
                }
            }
            if i + 1 < n {
                for _ in 0..rng.gen_range(0..=3) {
                    let j = rng.gen_range(i + 1..n);
                    let target = format!("c{j:02}");
                    if !concept.narrower.contains(&target) {
                        concept.narrower.push(target);
                    }
                }
            }
            reference.insert(id.clone(), oracle::expansion::Concept { id: id.clone(), labels, narrower: concept.narrower.clone() });
            concepts.insert(id, concept);
        }
        let thesaurus = Thesaurus::from_concepts(concepts).map_err(|e| format!("round {round}: {e}"))?;

        for _ in 0..10 {
            let terms: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| random_label(&mut rng, &pool)).collect();
            let wanted: Vec<String> = LANGS.iter().filter(|_| rng.gen_bool(0.4)).map(|l| l.to_string()).collect();
            for depth in [None, Some(0), Some(1), Some(2), Some(5)] {
                let got = thesaurus.expand_query(&terms, &wanted, depth).expanded_terms;
                let expected = oracle::expansion::expand(&reference, &terms, &wanted, depth);
                ensure!(got == expected, "round {round}, terms {terms:?}, languages {wanted:?}, depth {depth:?}: got {got:?}, expected {expected:?}");
            }
            let closed = thesaurus.expand_query(&terms, &wanted, None).expanded_terms;
            let again = thesaurus.expand_query(&closed.iter().cloned().collect::<Vec<_>>(), &wanted, None).expanded_terms;
            ensure!(again == closed, "round {round}: expansion is not closed for {terms:?}");
        }
    }
    Ok(())
}

// ------------------------------------------------------------- criterion 3

const FIELDS: [(Field, f64); 4] = [(Field::Title, 3.0), (Field::Keywords, 2.0), (Field::Names, 2.0), (Field::ScopeContent, 1.0)];

fn ranking_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pool: Vec<String> = (0..60).map(|i| format!("t{i}")).collect();
    for round in 0..50 {
        let n = rng.gen_range(1..=200);
        let mut docs: Vec<IndexDocument> = Vec::new();
        let mut reference: Vec<oracle::ranking::Doc> = Vec::new();
        for i in 0..n {
            let id = format!("r/{i:03}");
            let mut doc = IndexDocument::new(&id);
            let mut fields = Vec::new();
            if i > 0 && rng.gen_bool(0.1) {
                // identical content under another id
                let j = rng.gen_range(0..i);
                doc.field_tokens = docs[j].field_tokens.clone();
                fields = reference[j].fields.clone();
            } else {
                for (field, weight) in FIELDS {
                    if rng.gen_bool(0.6) {
                        let tokens: Vec<String> = (0..rng.gen_range(1..=8)).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
                        doc.field_tokens.insert(field, tokens.clone());
                        fields.push((weight, tokens));
                    }
                }
            }
            docs.push(doc);
            reference.push(oracle::ranking::Doc { id, fields });
        }
        let index = SearchIndex::from_documents(docs, Stopwords::empty(), 0);
        for _ in 0..5 {
            let query: BTreeSet<String> = (0..rng.gen_range(1..=4)).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
            let text = query.iter().cloned().collect::<Vec<_>>().join(" ");
            let got = index.search(&Thesaurus::default(), &text, &[], &Filters::new(), 1, 500).map_err(|e| e.to_string())?;
            let expected = oracle::ranking::rank(&reference, &query);
            ensure!(got.total_hits == expected.len(), "round {round} `{text}`: {} hits, expected {}", got.total_hits, expected.len());
            for (hit, (id, score)) in got.hits.iter().zip(&expected) {
                ensure!(&hit.unit_global_id == id, "round {round} `{text}`: order differs at {id} (got {})", hit.unit_global_id);
                ensure!((hit.score - score).abs() <= 1e-9, "round {round} `{text}`: {id} scored {} expected {score}", hit.score);
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------- criterion 4

fn repository(id: &str, summary: &str) -> Repository {
    Repository {
        ehri_id: id.to_string(),
        authorized_form_of_name: format!("Archive {id}"),
        other_names: vec![],
        country: "CZ".into(),
        address: String::new(),
        contact: format!("{id}@example.org"),
        description_status: Default::default(),
        holdings_summary: summary.to_string(),
        harvest_endpoint: None,
        harvest_capable: false,
    }
}

fn undated(local_id: &str, title: &str) -> DocumentaryUnit {
    let mut unit = DocumentaryUnit::new(local_id, Level::File, title);
    unit.undated = true;
    unit
}

fn helpdesk_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pool: Vec<String> = (0..30).map(|i| format!("h{i}")).collect();
    let words = |rng: &mut ChaCha8Rng, max: usize| (0..rng.gen_range(1..=max)).map(|_| pool.choose(rng).unwrap().clone()).collect::<Vec<_>>();
    for round in 0..50 {
        let mut graph = Graph::new();
        let mut reference = Vec::new();
        let repos: Vec<Repository> = (0..rng.gen_range(1..=20))
            .map(|i| {
                let summary = if rng.gen_bool(0.7) { words(&mut rng, 6).join(" ") } else { String::new() };
                repository(&format!("k{i:02}"), &summary)
            })
            .collect();
        let report = import_repositories(&mut graph, &repos);
        ensure!(report.rejected.is_empty(), "repositories rejected: {:?}", report.rejected);
        for repo in &repos {
            let mut titles = Vec::new();
            let trees: Vec<UnitTree> = (0..rng.gen_range(0..=5))
                .map(|j| {
                    let title = words(&mut rng, 4);
                    titles.extend(title.iter().cloned());
                    UnitTree::leaf(format!("{j}"), undated(&format!("u{j}"), &title.join(" ")))
                })
                .collect();
            if trees.is_empty() {
                continue;
            }
            let r = import_batch(&mut graph, &trees, &repo.ehri_id).map_err(|e| e.to_string())?;
            ensure!(r.rejected.is_empty(), "units rejected: {:?}", r.rejected);
            let mut fields = vec![(3.0, titles)];
            let summary = oracle::tokens(&repo.holdings_summary);
            if !summary.is_empty() {
                fields.push((1.0, summary));
            }
            reference.push(oracle::ranking::Doc { id: repo.ehri_id.clone(), fields });
        }
        let units = SearchIndex::build(&graph, &Vocabulary::default(), Stopwords::empty());
        let kb = KnowledgeBase::build(&graph, &units, Stopwords::empty());
        for _ in 0..5 {
            let question = words(&mut rng, 4);
            let answer = kb.route(&Thesaurus::default(), &question.join(" "), &[]).map_err(|e| e.to_string())?;
            let expected = oracle::ranking::rank(&reference, &question.iter().cloned().collect());
            let got: Vec<&str> = answer.ranked.iter().map(|r| r.repository_ehri_id.as_str()).collect();
            let want: Vec<&str> = expected.iter().map(|(id, _)| id.as_str()).collect();
            ensure!(got == want, "round {round} {question:?}: ranked {got:?}, expected {want:?}");
            for (r, (_, score)) in answer.ranked.iter().zip(&expected) {
                ensure!((r.score - score).abs() <= 1e-9, "round {round}: {} scored {} expected {score}", r.repository_ehri_id, r.score);
            }
        }
    }

    let loaded = load_fixtures()?;
    let answer = loaded
        .portal
        .state()
        .ask("Where can I find transport lists from Theresienstadt?", &[s("en")])
        .map_err(|e| e.to_string())?;
    let top = answer.ranked.first().ok_or("no institution ranked")?.repository_ehri_id.clone();
    let graph = loaded.portal.graph();
    let holds_lists = graph.nodes_of_kind(NodeKind::Unit).any(|n| {
        repo_of(&n.id) == top && {
            let text = format!("{} {}", n.text("title").unwrap_or_default(), n.texts("keywords").join(" ")).to_lowercase();
            text.contains("transport")
        }
    });
    ensure!(holds_lists, "top institution {top} holds no transport lists");
    Ok(())
}

// ------------------------------------------------------------- criterion 5

#[derive(Debug, Clone, PartialEq)]
struct Modelled {
    title: String,
    dates: Vec<String>,
    parent: Option<String>,
}

#[derive(Debug, Default, PartialEq)]
struct Counts {
    created: usize,
    updated: usize,
    unchanged: usize,
    rejected: usize,
}

struct Generated {
    trees: Vec<UnitTree>,
    records: usize,
}

fn random_unit(rng: &mut ChaCha8Rng, local_id: &str) -> DocumentaryUnit {
    let title = if rng.gen_bool(0.08) { String::new() } else { format!("Title {}", rng.gen_range(0..3)) };
    let mut unit = DocumentaryUnit::new(local_id, Level::File, title);
    match rng.gen_range(0..20) {
        0 => {}
        1..=9 => unit.undated = true,
        _ => unit.dates_of_creation = vec![DateSpan::at(PartialDate::year(rng.gen_range(1941..1944)))],
    }
    unit
}

/// Internal nodes have unique ids within a batch; leaves draw from their own
/// pool with replacement, so duplicates occur only among leaves.
fn random_batch(rng: &mut ChaCha8Rng) -> Generated {
    let mut internal: Vec<usize> = (0..10).collect();
    internal.shuffle(rng);
    internal.truncate(rng.gen_range(0..=5));
    // arena: (unit, child indices)
    let mut arena: Vec<(DocumentaryUnit, Vec<usize>)> = Vec::new();
    let mut roots = Vec::new();
    for n in &internal {
        let idx = arena.len();
        arena.push((random_unit(rng, &format!("n{n}")), Vec::new()));
        if idx > 0 && rng.gen_bool(0.6) {
            let p = rng.gen_range(0..idx);
            arena[p].1.push(idx);
        } else {
            roots.push(idx);
        }
    }
    for _ in 0..rng.gen_range(0..=10) {
        let idx = arena.len();
        let leaf = format!("l{}", rng.gen_range(0..15));
        arena.push((random_unit(rng, &leaf), Vec::new()));
        if !internal.is_empty() && rng.gen_bool(0.7) {
            let p = rng.gen_range(0..internal.len());
            arena[p].1.push(idx);
        } else {
            roots.push(idx);
        }
    }
    fn build(arena: &[(DocumentaryUnit, Vec<usize>)], i: usize) -> UnitTree {
        UnitTree {
            source_ref: format!("rec{i}"),
            unit: arena[i].0.clone(),
            children: arena[i].1.iter().map(|c| build(arena, *c)).collect(),
        }
    }
    Generated { trees: roots.iter().map(|r| build(&arena, *r)).collect(), records: arena.len() }
}

/// Expected outcome of importing `trees` into repository `r` given the model
/// of what is stored; updates the model.
fn expected_outcome(trees: &[UnitTree], model: &mut BTreeMap<String, Modelled>) -> Counts {
    fn walk(tree: &UnitTree, parent: Option<&str>, parent_rejected: bool, seen: &mut BTreeSet<String>, model: &mut BTreeMap<String, Modelled>, counts: &mut Counts) {
        let unit = &tree.unit;
        let id = format!("r/{}", unit.local_id);
        let duplicate = !seen.insert(id.clone());
        let invalid = unit.title.is_empty() || (unit.dates_of_creation.is_empty() && !unit.undated);
        let rejected = parent_rejected || duplicate || invalid;
        if rejected {
            counts.rejected += 1;
        } else {
            let new = Modelled {
                title: unit.title.clone(),
                dates: unit.dates_of_creation.iter().map(ToString::to_string).collect(),
                parent: parent.map(str::to_string),
            };
            match model.insert(id.clone(), new.clone()) {
                None => counts.created += 1,
                Some(old) if old == new => counts.unchanged += 1,
                Some(_) => counts.updated += 1,
            }
        }
        for child in &tree.children {
            walk(child, Some(&id), rejected, seen, model, counts);
        }
    }
    let mut counts = Counts::default();
    let mut seen = BTreeSet::new();
    for tree in trees {
        walk(tree, None, false, &mut seen, model, &mut counts);
    }
    counts
}

fn import_conservation() -> Result<(), String> {
    let loaded = load_fixtures()?;
    for entry in loaded.manifest.entries.iter().filter(|e| e.repository.is_some()) {
        let repo = entry.repository.as_deref().unwrap();
        let bytes = std::fs::read(fixtures::entry_path(loaded.dir.path(), entry)).map_err(|e| e.to_string())?;
        let profile = fixtures::load_profile(loaded.dir.path(), &loaded.manifest, entry.profile.as_deref().unwrap_or_default())
            .map_err(|e| e.to_string())?;
        let before = loaded.portal.graph().to_snapshot_string();
        let report = loaded.portal.ingest(&bytes, &profile, repo).map_err(|e| e.to_string())?;
        ensure!(report.created == 0 && report.updated == 0, "{}: re-ingest created {} updated {}", entry.name, report.created, report.updated);
        ensure!(report.total() == entry.expected_counts["records"], "{}: {} outcomes for {} records", entry.name, report.total(), entry.expected_counts["records"]);
        ensure!(loaded.portal.graph().to_snapshot_string() == before, "{}: re-ingest changed the graph", entry.name);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut graph = Graph::new();
    import_repositories(&mut graph, &[repository("r", "")]);
    let mut model: BTreeMap<String, Modelled> = BTreeMap::new();
    for round in 0..100 {
        let batch = random_batch(&mut rng);
        let expected = expected_outcome(&batch.trees, &mut model);
        let report = import_batch(&mut graph, &batch.trees, "r").map_err(|e| e.to_string())?;
        ensure!(report.total() == batch.records, "round {round}: {} outcomes for {} records", report.total(), batch.records);
        let got = Counts { created: report.created, updated: report.updated, unchanged: report.unchanged, rejected: report.rejected.len() };
        ensure!(got == expected, "round {round}: got {got:?}, expected {expected:?}");
        let again = import_batch(&mut graph, &batch.trees, "r").map_err(|e| e.to_string())?;
        ensure!(again.created == 0 && again.updated == 0, "round {round}: repeated batch changed {} / {}", again.created, again.updated);
        ensure!(graph.check_invariants().is_empty(), "round {round}: {:?}", graph.check_invariants());
    }
    Ok(())
}

// ------------------------------------------------------------- criterion 6

fn oracle_view(graph: &Graph) -> (BTreeSet<String>, Vec<oracle::graph::Edge>) {
    let nodes = graph.nodes().map(|n| n.id.clone()).collect();
    let edges = graph.edges().map(|(k, _)| (k.src.clone(), k.label.as_str().to_string(), k.dst.clone())).collect();
    (nodes, edges)
}

fn graph_invariants() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut graph = Graph::new();
    import_repositories(&mut graph, &[repository("r", "")]);
    let ids: Vec<String> = (0..30).map(|i| format!("n{i}")).chain((0..10).map(|i| format!("r/u{i}"))).collect();
    let kinds = [NodeKind::Unit, NodeKind::Concept, NodeKind::AuthorityPlace];
    let mut rejected_cycles = 0;
    for op in 0..1000 {
        match rng.gen_range(0..10) {
            0..=2 => {
                let id = &ids[rng.gen_range(0..30)];
                let props = Properties::from([(s("v"), PropValue::text(format!("{}", rng.gen_range(0..3))))]);
                let _ = graph.upsert_node(*kinds.choose(&mut rng).unwrap(), id, props);
            }
            3..=6 => {
                let label = if rng.gen_bool(0.5) { EdgeLabel::PartOf } else { *EdgeLabel::ALL.choose(&mut rng).unwrap() };
                let (a, b) = (ids.choose(&mut rng).unwrap(), ids.choose(&mut rng).unwrap());
                if let Err(e) = graph.add_edge(a, label, b, Properties::new()) {
                    if e.code() == "partOf-cycle" {
                        rejected_cycles += 1;
                    }
                }
            }
            7 => {
                let edges: Vec<_> = graph.edges().map(|(k, _)| k.clone()).collect();
                if let Some(k) = edges.choose(&mut rng) {
                    graph.remove_edge(&k.src, k.label, &k.dst);
                }
            }
            _ => {
                let trees: Vec<UnitTree> = (0..rng.gen_range(1..=3))
                    .map(|_| {
                        let mut tree = UnitTree::leaf("t", undated(&format!("u{}", rng.gen_range(0..10)), "unit"));
                        if rng.gen_bool(0.5) {
                            tree.children.push(UnitTree::leaf("c", undated(&format!("u{}", rng.gen_range(0..10)), "child")));
                        }
                        tree
                    })
                    .collect();
                let report = import_batch(&mut graph, &trees, "r").map_err(|e| e.to_string())?;
                let total: usize = trees.iter().map(UnitTree::size).sum();
                ensure!(report.total() == total, "op {op}: import lost records");
            }
        }
        let problems = graph.check_invariants();
        ensure!(problems.is_empty(), "op {op}: {problems:?}");
        let (nodes, edges) = oracle_view(&graph);
        let found = oracle::graph::violations(&nodes, &edges);
        ensure!(found.is_empty(), "op {op}: reference check found {found:?}");
    }
    ensure!(rejected_cycles > 0, "no partOf cycle was attempted");

    let (_, edges) = oracle_view(&graph);
    for id in &ids {
        if !graph.contains(id) {
            continue;
        }
        for (label, direction, outward) in [(EdgeLabel::PartOf, Direction::Out, true), (EdgeLabel::PartOf, Direction::In, false), (EdgeLabel::Subject, Direction::Out, true)] {
            for depth in [None, Some(1), Some(2)] {
                let got = graph.closure(id, label, direction, depth).map_err(|e| e.to_string())?;
                let want = oracle::graph::closure(&edges, id, label.as_str(), outward, depth);
                ensure!(got == want, "closure of {id} {label} {direction:?} {depth:?}: {got:?} vs {want:?}");
            }
        }
    }

    let text = graph.to_snapshot_string();
    let restored = Graph::from_snapshot_str(&text).map_err(|e| e.to_string())?;
    ensure!(graph.nodes().eq(restored.nodes()), "nodes differ after snapshot round trip");
    ensure!(graph.edges().eq(restored.edges()), "edges differ after snapshot round trip");
    ensure!(restored.to_snapshot_string() == text, "snapshot text is not stable");
    Ok(())
}

// ------------------------------------------------------------- criterion 7

fn annotation_lifecycle() -> Result<(), String> {
    let loaded = load_fixtures()?;
    let portal = &loaded.portal;
    let target = loaded.manifest.daily_order_unit.clone();
    let note = || Body::TextualNote { text: "seen in a second copy".into() };

    for start in [State::Proposed, State::Accepted, State::Rejected] {
        for decision in [Decision::Accept, Decision::Reject] {
            let a = portal.annotate(&target, note(), "reader").map_err(|e| e.to_string())?;
            ensure!(a.state == State::Proposed, "new annotation is {:?}", a.state);
            match start {
                State::Proposed => {}
                State::Accepted => drop(portal.moderate(&a.annotation_id, Decision::Accept, "mod", None).map_err(|e| e.to_string())?),
                State::Rejected => drop(portal.moderate(&a.annotation_id, Decision::Reject, "mod", None).map_err(|e| e.to_string())?),
            }
            let version = portal.graph().version();
            let result = portal.moderate(&a.annotation_id, decision, "mod2", Some("second look"));
            match (start, result) {
                (State::Proposed, Ok(m)) => {
                    let want = if decision == Decision::Accept { State::Accepted } else { State::Rejected };
                    ensure!(m.state == want, "proposed + {decision:?} gave {:?}", m.state);
                }
                (State::Proposed, Err(e)) => return Err(format!("proposed + {decision:?} failed: {e}")),
                (_, Ok(m)) => return Err(format!("{start:?} + {decision:?} moved to {:?}", m.state)),
                (_, Err(e)) => {
                    ensure!(e.code() == "already-moderated", "{start:?} + {decision:?}: {}", e.code());
                    ensure!(portal.graph().version() == version, "failed moderation bumped the version");
                }
            }
        }
    }
    let unknown = portal.moderate("no-such-annotation", Decision::Accept, "mod", None);
    ensure!(unknown.as_ref().is_err_and(|e| e.code() == "unknown-annotation"), "unknown annotation: {unknown:?}");

    // an accepted concept link makes the unit findable by that keyword
    let state = portal.state();
    let concept = "kw-artwork";
    let keyword = state.vocab.thesaurus.concept(concept).ok_or("fixture concept missing")?.pref_label["en"].clone();
    let found = |p: &Portal| -> Result<BTreeSet<String>, String> {
        Ok(p.state().search(&keyword, &[s("en")], &Filters::new(), 1, 500).map_err(|e| e.to_string())?.hits.into_iter().map(|h| h.unit_global_id).collect())
    };
    let before = found(portal)?;
    let entry = loaded.manifest.entry("bt-export").ok_or("no bt export")?;
    let export = fixtures::read_entry(loaded.dir.path(), entry).map_err(|e| e.to_string())?;
    let graph = portal.graph();
    let unit = graph
        .nodes_of_kind(NodeKind::Unit)
        .filter(|n| repo_of(&n.id) == "bt" && !before.contains(&n.id))
        .find(|n| n.text("title").is_some_and(|t| export.matches(t).count() == 1))
        .ok_or("no bt unit without the keyword")?
        .id
        .clone();
    let link = portal.annotate(&unit, Body::ConceptLink { concept_id: concept.into() }, "reader").map_err(|e| e.to_string())?;
    ensure!(!found(portal)?.contains(&unit), "proposed link already affects search");
    portal.moderate(&link.annotation_id, Decision::Accept, "mod", None).map_err(|e| e.to_string())?;
    ensure!(found(portal)?.contains(&unit), "accepted link does not make {unit} findable by `{keyword}`");

    // survives re-import, unchanged and changed at source
    let profile = fixtures::load_profile(loaded.dir.path(), &loaded.manifest, entry.profile.as_deref().unwrap_or_default()).map_err(|e| e.to_string())?;
    portal.ingest(export.as_bytes(), &profile, "bt").map_err(|e| e.to_string())?;
    let title = graph.node(&unit).and_then(|n| n.text("title")).unwrap_or_default().to_string();
    let changed = export.replace(&title, &format!("{title} revised"));
    let report = portal.ingest(changed.as_bytes(), &profile, "bt").map_err(|e| e.to_string())?;
    ensure!(report.updated == 1, "changed export updated {} units", report.updated);
    ensure!(report.warnings.iter().any(|w| w.code == "annotation-conflict"), "no annotation-conflict warning");
    let kept = portal.annotations(&unit, Some(State::Accepted)).map_err(|e| e.to_string())?;
    ensure!(kept.iter().any(|a| a.annotation_id == link.annotation_id), "accepted annotation lost on re-import");
    ensure!(found(portal)?.contains(&unit), "re-import dropped the accepted keyword");
    Ok(())
}

// ------------------------------------------------------------- criterion 8

fn copy_recall() -> Result<(), String> {
    let loaded = load_fixtures()?;
    let candidates = loaded.portal.suggest_copies("terezin", DEFAULT_COPY_THRESHOLD).map_err(|e| e.to_string())?;
    let pairs: BTreeSet<(String, String)> = candidates.iter().map(|c| (c.unit_a.clone(), c.unit_b.clone())).collect();
    let missing: Vec<_> = loaded.manifest.planted_copies.iter().filter(|p| !pairs.contains(p)).collect();
    ensure!(!loaded.manifest.planted_copies.is_empty(), "no planted pairs");
    ensure!(missing.is_empty(), "recall below 100%: missing {missing:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphabet: Vec<char> = "abcdeéíöü ".chars().collect();
    let text = |rng: &mut ChaCha8Rng| (0..rng.gen_range(0..25)).map(|_| *alphabet.choose(rng).unwrap()).collect::<String>();
    let dates = |rng: &mut ChaCha8Rng| {
        (0..rng.gen_range(0..3))
            .map(|_| {
                let y = rng.gen_range(1940..1946);
                DateSpan::between(PartialDate::year(y), PartialDate::year(y + rng.gen_range(0..2)))
            })
            .collect::<Vec<_>>()
    };
    for i in 0..2000 {
        let (ta, da, tb, db) = (text(&mut rng), dates(&mut rng), text(&mut rng), dates(&mut rng));
        let ab = similarity(&ta, &da, &tb, &db);
        let ba = similarity(&tb, &db, &ta, &da);
        ensure!(ab == ba, "pair {i}: {ab} vs {ba} for `{ta}` / `{tb}`");
        ensure!((0.0..=1.0).contains(&ab), "pair {i}: score {ab} out of range");
    }
    Ok(())
}

// ------------------------------------------------------------- criterion 9

fn country_reports() -> Result<(), String> {
    let valid = CountryReport {
        country: "CZ".into(),
        section_history: Some("Before the war.\n\nDuring the war.".into()),
        section_archives: Some("National archives.\n\nRegional and private holdings.".into()),
        section_ehri_research: Some("Survey work so far.".into()),
        max_length: DEFAULT_REPORT_BUDGET,
    };
    let report = validate_country_report(&valid);
    ensure!(report.is_valid(), "valid report rejected: {:?}", report.issues);
    let sections: [(&str, fn(&mut CountryReport)); 3] = [
        ("history", |r| r.section_history = None),
        ("archives", |r| r.section_archives = None),
        ("ehri-research", |r| r.section_ehri_research = None),
    ];
    for (name, delete) in sections {
        let mut r = valid.clone();
        delete(&mut r);
        let codes: Vec<String> = validate_country_report(&r).issues.iter().map(|i| i.code.clone()).collect();
        ensure!(codes == vec![format!("missing-section:{name}")], "without {name}: {codes:?}");
    }
    let mut three = valid.clone();
    three.section_history = Some("One.\n\nTwo.\n\nThree.".into());
    let codes: Vec<String> = validate_country_report(&three).issues.iter().map(|i| i.code.clone()).collect();
    ensure!(codes == vec![s("paragraph-count:history")], "three history paragraphs: {codes:?}");
    let mut long = valid.clone();
    long.max_length = 20;
    ensure!(validate_country_report(&long).issues.iter().any(|i| i.code == "over-budget"), "budget not enforced");
    Ok(())
}
