use std::collections::BTreeMap;

use nexus_core::fixtures::{self, Delivery, FixtureManifest, HarvestServerOptions, MockHarvestServer};
use nexus_core::guide::DEFAULT_COPY_THRESHOLD;
use nexus_core::ingest::harvest::HarvestConfig;
use nexus_core::portal::Portal;
use nexus_core::registry::Graph;
use nexus_core::search::Filters;
use nexus_core::text::Stopwords;

fn loaded() -> (tempfile::TempDir, FixtureManifest, Portal, usize) {
    let dir = tempfile::tempdir().unwrap();
    fixtures::generate_fixtures(dir.path(), fixtures::DEFAULT_SEED).unwrap();
    let manifest = fixtures::verify_manifest(dir.path()).unwrap();
    let server = MockHarvestServer::for_entry(dir.path(), manifest.entry("jmp-export").unwrap(), HarvestServerOptions::default()).unwrap();
    let portal = Portal::new(Graph::new(), Stopwords::default()).unwrap();
    let deliveries: BTreeMap<String, Delivery> = [(
        "jmp".to_string(),
        Delivery::Harvest { endpoint: server.endpoint(), config: HarvestConfig { backoff_ms: 1, ..HarvestConfig::default() } },
    )]
    .into_iter()
    .collect();
    fixtures::load_portal(&portal, dir.path(), &deliveries).unwrap();
    let requests = server.list_records_requests();
    (dir, manifest, portal, requests)
}

#[test]
fn four_archives_end_to_end() {
    let (_dir, manifest, portal, requests) = loaded();
    assert!(requests >= 1);
    let state = portal.state();
    let expected: usize = manifest
        .entries
        .iter()
        .filter(|e| e.repository.is_some())
        .map(|e| e.expected_counts["records"])
        .sum();
    assert_eq!(state.unit_count(), expected);
    assert!(state.graph.check_invariants().is_empty());

    let hits = state.search("Tagesbefehl", &[], &Filters::new(), 1, 50).unwrap();
    let repos: std::collections::BTreeSet<_> = hits.hits.iter().map(|h| h.unit_global_id.split('/').next().unwrap().to_string()).collect();
    assert!(repos.len() >= 3, "daily orders found in {repos:?}");

    let candidates = portal.suggest_copies("terezin", DEFAULT_COPY_THRESHOLD).unwrap();
    for planted in &manifest.planted_copies {
        assert!(candidates.iter().any(|c| (c.unit_a.clone(), c.unit_b.clone()) == *planted), "missing planted pair {planted:?}");
    }
    portal.confirm_all("terezin", "curator").unwrap();
    let view = portal.state().unit_view(&manifest.daily_order_unit).unwrap();
    assert!(view.copies.len() >= 2, "{:?}", view.copies);

    let answer = portal.state().ask("Where can I find transport lists?", &["en".to_string()]).unwrap();
    let top = &answer.ranked[0].repository_ehri_id;
    assert!(top == "yv" || top == "tm", "top institution {top}");
}
