//! Seeded desk-scale corpus: four archive exports in different shapes plus
//! the vocabularies, events, profiles and guide config that tie them
//! together.
//!
//! Content is synthetic. Titles, codes and dates are drawn from a ChaCha
//! generator; a handful of motifs (daily orders, transport lists, artwork)
//! are planted in several archives with titles that match after
//! normalization, so copy suggestion has known answers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use quick_xml::escape::escape;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archival::{global_id, DateSpan, DescriptionStatus, Level, PartialDate, Precision, Repository};
use crate::guide::{parse_events, GuideConfig};
use crate::ingest::profile::{FieldRule, IdRule, LevelRule, Target, Transform};
use crate::ingest::harvest::HarvestConfig;
use crate::ingest::{self, ImportReport, MappingProfile, SourceKind, UnitTree};
use crate::portal::{Portal, PortalError, VocabularyTexts};
use crate::vocab::{Authorities, Thesaurus};

pub mod harvest_server;

pub use harvest_server::{HarvestServerOptions, MockHarvestServer};

pub const DEFAULT_SEED: u64 = 42;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{entry}: {reason}")]
    Malformed { entry: String, reason: String },
    #[error("{entry}: expected {key} = {expected}, found {actual}")]
    CountMismatch { entry: String, key: String, expected: usize, actual: usize },
}

impl FixtureError {
    pub fn code(&self) -> &'static str {
        match self {
            FixtureError::Io { .. } => "io-failure",
            FixtureError::Malformed { .. } => "malformed-file",
            FixtureError::CountMismatch { .. } => "manifest-mismatch",
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> FixtureError {
    FixtureError::Io { path: path.display().to_string(), reason: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    NestedXml,
    DelimitedTable,
    Thesaurus,
    Concordance,
    Places,
    Persons,
    Events,
    Profile,
    Repositories,
    GuideConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub name: String,
    pub kind: FixtureKind,
    /// Relative to the manifest directory.
    pub path: String,
    /// Profile entry used to parse an export.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Repository an export belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repository: Option<String>,
    pub expected_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
    /// Cross-archive duplicate pairs, `a < b`, by global id.
    pub planted_copies: Vec<(String, String)>,
    /// Place id → number of units planted at it.
    pub place_links: BTreeMap<String, usize>,
    /// Global id of the daily order planted in three archives.
    pub daily_order_unit: String,
}

impl FixtureManifest {
    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn entries_of(&self, kind: FixtureKind) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| FixtureError::Malformed { entry: MANIFEST_FILE.into(), reason: e.to_string() })
    }
}

// ---------------------------------------------------------------------------
// Shared vocabulary

struct ConceptDef {
    id: &'static str,
    en: &'static str,
    de: &'static str,
    cs: &'static str,
    alt: &'static [(&'static str, &'static str)],
    narrower: &'static [&'static str],
}

const CONCEPTS: &[ConceptDef] = &[
    ConceptDef {
        id: "kw-sources",
        en: "Ghetto sources",
        de: "Quellen zum Ghetto",
        cs: "Prameny ke ghettu",
        alt: &[],
        narrower: &[
            "kw-terezin",
            "kw-daily-bulletins",
            "kw-transport-lists",
            "kw-artwork",
            "kw-documentation-project",
            "kw-cultural-life",
            "kw-health",
            "kw-correspondence",
        ],
    },
    ConceptDef {
        id: "kw-terezin",
        en: "Terezin ghetto",
        de: "Ghetto Theresienstadt",
        cs: "Terezínské ghetto",
        alt: &[("en", "Terezín"), ("de", "Theresienstadt"), ("cs", "Terezín")],
        narrower: &[],
    },
    ConceptDef {
        id: "kw-daily-bulletins",
        en: "Daily orders",
        de: "Tagesbefehle",
        cs: "Denní rozkazy",
        alt: &[("en", "Daily bulletins"), ("de", "Tagesbefehl")],
        narrower: &[],
    },
    ConceptDef {
        id: "kw-transport-lists",
        en: "Transport lists",
        de: "Transportlisten",
        cs: "Transportní seznamy",
        alt: &[("de", "Transportliste")],
        narrower: &[],
    },
    ConceptDef { id: "kw-artwork", en: "Drawings", de: "Zeichnungen", cs: "Kresby", alt: &[("en", "Artwork")], narrower: &[] },
    ConceptDef {
        id: "kw-documentation-project",
        en: "Documentation Project",
        de: "Dokumentationsaktion",
        cs: "Dokumentační akce",
        alt: &[],
        narrower: &[],
    },
    ConceptDef { id: "kw-cultural-life", en: "Cultural life", de: "Freizeitgestaltung", cs: "Kulturní život", alt: &[], narrower: &[] },
    ConceptDef { id: "kw-health", en: "Health care", de: "Gesundheitsfürsorge", cs: "Zdravotní péče", alt: &[], narrower: &[] },
    ConceptDef { id: "kw-correspondence", en: "Correspondence", de: "Korrespondenz", cs: "Korespondence", alt: &[], narrower: &[] },
    ConceptDef {
        id: "dept-root",
        en: "Ghetto self-administration",
        de: "Jüdische Selbstverwaltung",
        cs: "Židovská samospráva",
        alt: &[],
        narrower: &["dept-council"],
    },
    ConceptDef {
        id: "dept-council",
        en: "Council of Elders",
        de: "Ältestenrat",
        cs: "Rada starších",
        alt: &[],
        narrower: &["dept-secretariat", "dept-technical", "dept-transport", "dept-health", "dept-youth"],
    },
    ConceptDef {
        id: "dept-secretariat",
        en: "Central Secretariat",
        de: "Zentralsekretariat",
        cs: "Ústřední sekretariát",
        alt: &[],
        narrower: &[],
    },
    ConceptDef {
        id: "dept-technical",
        en: "Technical Department",
        de: "Technische Abteilung",
        cs: "Technické oddělení",
        alt: &[],
        narrower: &[],
    },
    ConceptDef {
        id: "dept-transport",
        en: "Transport Department",
        de: "Transportabteilung",
        cs: "Transportní oddělení",
        alt: &[],
        narrower: &[],
    },
    ConceptDef { id: "dept-health", en: "Health Services", de: "Gesundheitswesen", cs: "Zdravotnictví", alt: &[], narrower: &[] },
    ConceptDef { id: "dept-youth", en: "Youth Welfare Office", de: "Jugendfürsorge", cs: "Péče o mládež", alt: &[], narrower: &[] },
];

fn concept(id: &str) -> &'static ConceptDef {
    CONCEPTS.iter().find(|c| c.id == id).expect("fixture concept")
}

struct PlaceDef {
    id: &'static str,
    en: &'static str,
    de: &'static str,
    cs: &'static str,
    lat: f64,
    lon: f64,
    within: Option<&'static str>,
}

/// Approximate positions inside the Terezín town grid.
const PLACES: &[PlaceDef] = &[
    PlaceDef { id: "pl-terezin", en: "Terezín", de: "Theresienstadt", cs: "Terezín", lat: 50.5106, lon: 14.1503, within: None },
    PlaceDef {
        id: "pl-magdeburg",
        en: "Magdeburg Barracks",
        de: "Magdeburger Kaserne",
        cs: "Magdeburská kasárna",
        lat: 50.5114,
        lon: 14.1477,
        within: Some("pl-terezin"),
    },
    PlaceDef {
        id: "pl-hamburg",
        en: "Hamburg Barracks",
        de: "Hamburger Kaserne",
        cs: "Hamburská kasárna",
        lat: 50.5128,
        lon: 14.1455,
        within: Some("pl-terezin"),
    },
    PlaceDef {
        id: "pl-dresden",
        en: "Dresden Barracks",
        de: "Dresdner Kaserne",
        cs: "Drážďanská kasárna",
        lat: 50.5093,
        lon: 14.1488,
        within: Some("pl-terezin"),
    },
    PlaceDef {
        id: "pl-hanover",
        en: "Hanover Barracks",
        de: "Hannoversche Kaserne",
        cs: "Hannoverská kasárna",
        lat: 50.5100,
        lon: 14.1525,
        within: Some("pl-terezin"),
    },
    PlaceDef {
        id: "pl-square",
        en: "Market Square",
        de: "Marktplatz",
        cs: "Náměstí",
        lat: 50.5104,
        lon: 14.1500,
        within: Some("pl-terezin"),
    },
    PlaceDef {
        id: "pl-small-fortress",
        en: "Small Fortress",
        de: "Kleine Festung",
        cs: "Malá pevnost",
        lat: 50.5141,
        lon: 14.1629,
        within: None,
    },
];

/// Town outline as `lat,lon` vertices.
const TEREZIN_OUTLINE: &str = "50.5145,14.1420;50.5145,14.1570;50.5065,14.1570;50.5065,14.1420;50.5145,14.1420";

/// Places filler units may use; the barracks with planted links is excluded.
const FILLER_PLACES: &[&str] = &["pl-hamburg", "pl-dresden", "pl-hanover", "pl-square", "pl-small-fortress"];

fn place(id: &str) -> &'static PlaceDef {
    PLACES.iter().find(|p| p.id == id).expect("fixture place")
}

struct PersonDef {
    id: &'static str,
    name: &'static str,
    variants: &'static [&'static str],
    note: &'static str,
}

const PERSONS: &[PersonDef] = &[
    PersonDef {
        id: "p-scheck",
        name: "Zeev Scheck",
        variants: &["Ze'ev Scheck", "Scheck, Zeev"],
        note: "Zionist activist; after liberation led a group collecting ghetto records.",
    },
    PersonDef { id: "p-edelstein", name: "Jakob Edelstein", variants: &["Jakub Edelstein"], note: "First Elder of the ghetto." },
    PersonDef { id: "p-eppstein", name: "Paul Eppstein", variants: &[], note: "Second Elder of the ghetto." },
    PersonDef { id: "p-murmelstein", name: "Benjamin Murmelstein", variants: &[], note: "Third Elder of the ghetto." },
    PersonDef { id: "p-fritta", name: "Bedřich Fritta", variants: &["Fritz Taussig"], note: "Head of the drawing office." },
    PersonDef { id: "p-haas", name: "Leo Haas", variants: &[], note: "Draughtsman in the Technical Department." },
    PersonDef { id: "p-ungar", name: "Otto Ungar", variants: &[], note: "Painter in the Technical Department." },
];

/// Concordance codes of a person in the three partner databases.
fn person_codes(index: usize) -> [(&'static str, String); 3] {
    [("JMP", format!("p-{:03}", index + 1)), ("BT", format!("{}", 4711 + index)), ("TII", format!("t-{}", 99 + index))]
}

fn person_index(id: &str) -> usize {
    PERSONS.iter().position(|p| p.id == id).expect("fixture person")
}

// ---------------------------------------------------------------------------
// Corpus model

#[derive(Debug, Clone)]
struct Seed {
    id: String,
    level: Level,
    title: String,
    date: Option<DateSpan>,
    keywords: Vec<&'static str>,
    department: Option<&'static str>,
    place: Option<&'static str>,
    persons: Vec<&'static str>,
    language: &'static str,
    scope: String,
    children: Vec<Seed>,
}

impl Seed {
    fn new(id: impl Into<String>, level: Level, title: impl Into<String>, date: Option<DateSpan>) -> Self {
        Seed {
            id: id.into(),
            level,
            title: title.into(),
            date,
            keywords: Vec::new(),
            department: None,
            place: None,
            persons: Vec::new(),
            language: "de",
            scope: String::new(),
            children: Vec::new(),
        }
    }

    fn kw(mut self, id: &'static str) -> Self {
        self.keywords.push(id);
        self
    }

    fn dept(mut self, id: &'static str) -> Self {
        self.department = Some(id);
        self
    }

    fn at(mut self, id: &'static str) -> Self {
        self.place = Some(id);
        self
    }

    fn about(mut self, id: &'static str) -> Self {
        self.persons.push(id);
        self
    }

    fn lang(mut self, l: &'static str) -> Self {
        self.language = l;
        self
    }

    fn scope(mut self, s: impl Into<String>) -> Self {
        self.scope = s.into();
        self
    }

    fn count(&self) -> usize {
        1 + self.children.iter().map(Seed::count).sum::<usize>()
    }

    fn depth(&self) -> usize {
        1 + self.children.iter().map(Seed::depth).max().unwrap_or(0)
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a Seed>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }
}

fn all_seeds(roots: &[Seed]) -> Vec<&Seed> {
    let mut out = Vec::new();
    for r in roots {
        r.walk(&mut out);
    }
    out
}

fn day(y: i32, m: u32, d: u32) -> PartialDate {
    PartialDate::day(y, m, d)
}

fn span(a: PartialDate, b: PartialDate) -> Option<DateSpan> {
    Some(DateSpan::between(a, b))
}

const GHETTO_START: (i32, u32, u32) = (1941, 11, 24);
const GHETTO_END: (i32, u32, u32) = (1945, 5, 8);

fn random_date(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let days = (to - from).num_days();
    from + Duration::days(rng.gen_range(0..=days))
}

/// A ghetto-period date at day, month or year precision.
fn random_span(rng: &mut ChaCha8Rng) -> DateSpan {
    let from = NaiveDate::from_ymd_opt(GHETTO_START.0, GHETTO_START.1, GHETTO_START.2).unwrap();
    let to = NaiveDate::from_ymd_opt(GHETTO_END.0, GHETTO_END.1, GHETTO_END.2).unwrap();
    let d = random_date(rng, from, to);
    let precision = match rng.gen_range(0..10) {
        0 => Precision::Year,
        1..=3 => Precision::Month,
        _ => Precision::Day,
    };
    DateSpan::at(PartialDate::from_naive(d, precision))
}

fn random_day(rng: &mut ChaCha8Rng, from: (i32, u32, u32), to: (i32, u32, u32)) -> NaiveDate {
    random_date(rng, NaiveDate::from_ymd_opt(from.0, from.1, from.2).unwrap(), NaiveDate::from_ymd_opt(to.0, to.1, to.2).unwrap())
}

fn bulletin_title(d: NaiveDate) -> String {
    use chrono::Datelike;
    format!("Tagesbefehl {}.{}.{}", d.day(), d.month(), d.year())
}

/// Transport codes such as `Bd` or `AAq`, never one of `reserved`.
fn transport_code(rng: &mut ChaCha8Rng, reserved: &[&str]) -> String {
    loop {
        let upper = rng.gen_range(1..=2);
        let mut code: String = (0..upper).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect();
        if upper == 1 || rng.gen_bool(0.5) {
            code.push(rng.gen_range(b'a'..=b'z') as char);
        }
        if !reserved.contains(&code.as_str()) {
            return code;
        }
    }
}

/// Titles planted in more than one archive, with their shared dates.
struct Planted {
    daily_order: (&'static str, PartialDate),
    second_order: (&'static str, PartialDate),
    transport: &'static str,
    artwork_jmp: &'static str,
    artwork_bt: &'static str,
}

const PLANTED: Planted = Planted {
    daily_order: ("Tagesbefehl 1.5.1944", PartialDate { year: 1944, month: Some(5), day: Some(1) }),
    second_order: ("Tagesbefehl 15.6.1944", PartialDate { year: 1944, month: Some(6), day: Some(15) }),
    transport: "Transport list Ck",
    artwork_jmp: "Bedřich Fritta: Ghetto street",
    artwork_bt: "BEDRICH FRITTA: ghetto street",
};

struct Corpus {
    jmp: Vec<Seed>,
    yv: Vec<Seed>,
    bt: Vec<Seed>,
    tm: Vec<Seed>,
    /// Groups of global ids that are copies of each other.
    copy_groups: Vec<Vec<String>>,
    daily_order_unit: String,
}

const ARTISTS: &[&str] = &["Bedřich Fritta", "Leo Haas", "Otto Ungar", "Karel Fleischmann"];
const ART_SUBJECTS: &[&str] =
    &["Barracks courtyard", "Hospital ward", "Roofscape", "Kitchen queue", "Attic dormitory", "Street scene", "Bakery", "Ramparts"];

fn build_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let mut groups: BTreeMap<&'static str, Vec<String>> = BTreeMap::new();
    let mut plant = |key: &'static str, repo: &str, id: &str| groups.entry(key).or_default().push(global_id(repo, id));
    let ghetto = span(day(GHETTO_START.0, GHETTO_START.1, GHETTO_START.2), day(GHETTO_END.0, GHETTO_END.1, GHETTO_END.2));
    let reserved_codes = ["Ck"];

    // JMP: nested, Czech-language description, up to ten levels.
    let mut jmp = Vec::new();
    {
        let mut orders = Seed::new("TER.1.1", Level::Series, "Daily orders of the Council of Elders", span(day(1942, 1, 1), day(1944, 9, 30)))
            .kw("kw-daily-bulletins")
            .dept("dept-secretariat")
            .scope("Printed and duplicated daily orders issued to the ghetto population.");
        let planted = [PLANTED.daily_order, PLANTED.second_order];
        for (i, (title, date)) in planted.iter().enumerate() {
            let id = format!("TER.1.1.{}", i + 1);
            plant(title, "jmp", &id);
            orders.children.push(
                Seed::new(&id, Level::Item, *title, Some(DateSpan::at(*date))).kw("kw-daily-bulletins").dept("dept-secretariat"),
            );
        }
        let mut used = vec![planted[0].0.to_string(), planted[1].0.to_string()];
        while orders.children.len() < 8 {
            let d = random_day(rng, (1942, 1, 1), (1944, 9, 30));
            let title = bulletin_title(d);
            if used.contains(&title) {
                continue;
            }
            used.push(title.clone());
            let id = format!("TER.1.1.{}", orders.children.len() + 1);
            orders.children.push(
                Seed::new(id, Level::Item, title, Some(DateSpan::at(PartialDate::from_naive(d, Precision::Day))))
                    .kw("kw-daily-bulletins")
                    .dept("dept-secretariat"),
            );
        }

        // Ten-level chain: fonds > subfonds > series > 5 × subseries > file > item.
        let chain_levels = [Level::Series, Level::Subseries, Level::Subseries, Level::Subseries, Level::Subseries, Level::Subseries, Level::File, Level::Item];
        let chain_titles = [
            "Minutes of the Council of Elders",
            "Plenary sessions",
            "Sessions 1943",
            "Second half-year",
            "November sessions",
            "Session of 16 November",
            "Agenda and attachments",
            "Report on barrack allocation",
        ];
        let mut chain: Option<Seed> = None;
        for depth in (0..chain_levels.len()).rev() {
            let id = format!("TER.1.2{}", ".1".repeat(depth));
            let mut seed = Seed::new(id, chain_levels[depth], chain_titles[depth], Some(random_span(rng))).dept("dept-council");
            if let Some(child) = chain.take() {
                seed.children.push(child);
            }
            chain = Some(seed);
        }

        let admin = Seed {
            children: vec![orders, chain.expect("chain built")],
            ..Seed::new("TER.1", Level::Subfonds, "Records of the self-administration", ghetto).dept("dept-council")
        };
        let magdeburg = Seed {
            children: vec![Seed::new("TER.2.1", Level::File, "Office plan of the Magdeburg Barracks", Some(random_span(rng)))
                .at("pl-magdeburg")
                .dept("dept-technical")],
            ..Seed::new("TER.2", Level::Subfonds, "Building administration", ghetto).dept("dept-technical")
        };
        plant("magdeburg", "jmp", "TER.2.1");
        jmp.push(Seed {
            children: vec![admin, magdeburg],
            ..Seed::new("TER", Level::Fonds, "Terezín ghetto collection", ghetto)
                .kw("kw-terezin")
                .lang("cs")
                .scope("Records of the ghetto self-administration and its departments.")
        });

        let mut dok = Seed::new("DOK", Level::Fonds, "Documentation Project", span(day(1945, 5, 1), day(1947, 12, 31)))
            .kw("kw-documentation-project")
            .about("p-scheck")
            .lang("cs");
        for i in 1..=4 {
            let d = random_day(rng, (1945, 5, 10), (1947, 6, 30));
            dok.children.push(
                Seed::new(format!("DOK.{i}"), Level::File, format!("Collected ghetto documents, box {i}"), Some(DateSpan::at(PartialDate::from_naive(d, Precision::Month))))
                    .kw("kw-documentation-project")
                    .about("p-scheck")
                    .lang("cs"),
            );
        }
        jmp.push(dok);

        let mut tech = Seed::new("TECH", Level::Fonds, "Drawings from the Technical Department", ghetto).kw("kw-artwork").dept("dept-technical");
        plant("artwork", "jmp", "TECH.1");
        tech.children.push(
            Seed::new("TECH.1", Level::Item, PLANTED.artwork_jmp, span(day(1943, 1, 1), day(1944, 7, 31)))
                .kw("kw-artwork")
                .about("p-fritta")
                .dept("dept-technical"),
        );
        let mut art_used = vec![PLANTED.artwork_jmp.to_string()];
        while tech.children.len() < 6 {
            let artist = *ARTISTS.choose(rng).unwrap();
            let title = format!("{artist}: {}", ART_SUBJECTS.choose(rng).unwrap());
            if art_used.iter().any(|t| crate::text::normalize(t) == crate::text::normalize(&title)) {
                continue;
            }
            art_used.push(title.clone());
            let mut seed = Seed::new(format!("TECH.{}", tech.children.len() + 1), Level::Item, title, Some(random_span(rng)))
                .kw("kw-artwork")
                .dept("dept-technical");
            if let Some(p) = PERSONS.iter().find(|p| p.name == artist) {
                seed = seed.about(p.id);
            }
            if rng.gen_bool(0.5) {
                seed = seed.at(FILLER_PLACES.choose(rng).unwrap());
            }
            tech.children.push(seed);
        }
        jmp.push(tech);

        let small: [(&str, &str, &'static str, Option<&'static str>, &[&str]); 3] = [
            ("KULT", "Leisure Time Organization", "kw-cultural-life", None, &["Concert programme", "Lecture announcement", "Theatre poster", "Library register"]),
            ("ZDR", "Health services records", "kw-health", Some("dept-health"), &["Hospital admission book", "Epidemic report", "Pharmacy inventory"]),
            ("MLAD", "Youth welfare records", "kw-correspondence", Some("dept-youth"), &["Children's home register", "Letter to parents", "School timetable"]),
        ];
        for (code, title, kw, dept, pool) in small {
            let mut fonds = Seed::new(code, Level::Fonds, title, ghetto).kw(kw);
            fonds.department = dept;
            let n = rng.gen_range(3..=5);
            for i in 1..=n {
                let mut f = Seed::new(format!("{code}.{i}"), Level::File, format!("{} {i}", pool.choose(rng).unwrap()), Some(random_span(rng))).kw(kw);
                f.department = dept;
                if rng.gen_bool(0.4) {
                    f = f.at(FILLER_PLACES.choose(rng).unwrap());
                }
                fonds.children.push(f);
            }
            jmp.push(fonds);
        }
    }

    // YV: subcollection > file, English description.
    let mut yv = Vec::new();
    {
        let mut lists = Seed::new("O.64", Level::Subcollection, "Transport lists from Theresienstadt", ghetto)
            .kw("kw-transport-lists")
            .dept("dept-transport")
            .lang("de")
            .scope("Deportation and arrival lists compiled by the transport department.");
        plant("transport", "yv", "O.64.1");
        lists.children.push(
            Seed::new("O.64.1", Level::File, PLANTED.transport, Some(DateSpan::at(day(1942, 7, 13))))
                .kw("kw-transport-lists")
                .dept("dept-transport")
                .at("pl-hamburg"),
        );
        let mut codes = vec!["Ck".to_string()];
        for i in 2..=12 {
            let code = loop {
                let c = transport_code(rng, &reserved_codes);
                if !codes.contains(&c) {
                    break c;
                }
            };
            codes.push(code.clone());
            let mut f = Seed::new(format!("O.64.{i}"), Level::File, format!("Transport list {code}"), Some(random_span(rng)))
                .kw("kw-transport-lists")
                .dept("dept-transport");
            if rng.gen_bool(0.5) {
                f = f.at("pl-hamburg");
            }
            lists.children.push(f);
        }
        yv.push(lists);

        let mut admin = Seed::new("O.7", Level::Subcollection, "Ghetto administration records", ghetto).kw("kw-terezin").lang("en");
        let pool = ["Housing register", "Labour deployment report", "Food ration statistics", "Census of residents", "Post office register"];
        for i in 1..=6 {
            let mut f = Seed::new(format!("O.7.{i}"), Level::File, format!("{} {}", pool.choose(rng).unwrap(), 100 + i), Some(random_span(rng)))
                .kw("kw-correspondence")
                .dept("dept-secretariat");
            if rng.gen_bool(0.5) {
                f = f.at(FILLER_PLACES.choose(rng).unwrap());
            }
            admin.children.push(f);
        }
        plant("magdeburg", "yv", "O.7.7");
        admin.children.push(Seed::new("O.7.7", Level::File, "Registry of the Magdeburg Barracks residents", Some(random_span(rng))).at("pl-magdeburg"));
        yv.push(admin);

        let mut post = Seed::new("O.8", Level::Subcollection, "Post-war testimonies", span(day(1945, 5, 1), day(1948, 12, 31))).lang("en");
        post.children.push(
            Seed::new("O.8.1", Level::File, "Interview on the collecting of ghetto records", Some(DateSpan::at(PartialDate::month(1946, 3))))
                .kw("kw-documentation-project")
                .about("p-scheck"),
        );
        for i in 2..=4 {
            post.children.push(
                Seed::new(format!("O.8.{i}"), Level::File, format!("Survivor testimony {i}"), Some(DateSpan::at(PartialDate::year(1946 + i as i32 % 2))))
                    .kw("kw-correspondence"),
            );
        }
        yv.push(post);
    }

    // BT: flat file-level table.
    let mut bt = Vec::new();
    {
        plant(PLANTED.daily_order.0, "bt", "BT-001");
        bt.push(Seed::new("BT-001", Level::File, PLANTED.daily_order.0, Some(DateSpan::at(PLANTED.daily_order.1))).kw("kw-daily-bulletins").dept("dept-secretariat"));
        plant("artwork", "bt", "BT-002");
        bt.push(
            Seed::new("BT-002", Level::File, PLANTED.artwork_bt, span(day(1943, 1, 1), day(1944, 7, 31)))
                .kw("kw-artwork")
                .about("p-fritta")
                .dept("dept-technical"),
        );
        plant("magdeburg", "bt", "BT-003");
        bt.push(Seed::new("BT-003", Level::File, "Sketch of the Magdeburg Barracks courtyard", Some(random_span(rng))).kw("kw-artwork").at("pl-magdeburg"));
        let pool = ["Letters of the Scheck family", "Residence card file", "Hebrew course notebook", "Hechalutz meeting notes", "Photograph album", "Children's drawings", "Kibbutz group records"];
        let mut n = 4;
        while bt.len() < 20 {
            let mut f = Seed::new(format!("BT-{n:03}"), Level::File, format!("{} {}", pool.choose(rng).unwrap(), n), Some(random_span(rng)));
            f = match rng.gen_range(0..3) {
                0 => f.kw("kw-correspondence"),
                1 => f.kw("kw-cultural-life"),
                _ => f.kw("kw-terezin"),
            };
            if n == 4 {
                f = f.about("p-scheck");
            }
            if rng.gen_bool(0.3) {
                f = f.at(FILLER_PLACES.choose(rng).unwrap());
            }
            bt.push(f.lang("he"));
            n += 1;
        }
    }

    // TM: flat item-level table, day dates in dd.mm.yyyy.
    let mut tm = Vec::new();
    {
        for (i, (title, date)) in [PLANTED.daily_order, PLANTED.second_order].into_iter().enumerate() {
            let id = format!("A{}", 1001 + i);
            plant(title, "tm", &id);
            tm.push(Seed::new(id, Level::Item, title, Some(DateSpan::at(date))).kw("kw-daily-bulletins").lang("de"));
        }
        plant("transport", "tm", "A1003");
        tm.push(Seed::new("A1003", Level::Item, PLANTED.transport.to_uppercase(), Some(DateSpan::at(day(1942, 7, 13)))).kw("kw-transport-lists"));
        let pool = ["Lebensmittelkarte", "Ghettogeld 10 Kronen", "Postkarte aus Theresienstadt", "Paketschein", "Lagerausweis", "Essenmarke"];
        let mut n = 1004;
        while tm.len() < 30 {
            let mut item = if rng.gen_bool(0.25) {
                let code = transport_code(rng, &reserved_codes);
                Seed::new(format!("A{n}"), Level::Item, format!("Transportliste {code} Nr. {n}"), Some(random_span(rng))).kw("kw-transport-lists")
            } else {
                Seed::new(format!("A{n}"), Level::Item, format!("{} {}", pool.choose(rng).unwrap(), n), Some(random_span(rng))).kw("kw-terezin")
            };
            if n == 1010 {
                item.date = None;
            }
            if rng.gen_bool(0.3) {
                item = item.at(FILLER_PLACES.choose(rng).unwrap());
            }
            tm.push(item);
            n += 1;
        }
    }

    let daily_order_unit = global_id("jmp", "TER.1.1.1");
    Corpus { jmp, yv, bt, tm, copy_groups: groups.into_iter().filter(|(k, _)| *k != "magdeburg").map(|(_, v)| v).collect(), daily_order_unit }
}

// ---------------------------------------------------------------------------
// Rendering

fn label(id: &str, lang: &str) -> &'static str {
    let c = concept(id);
    match lang {
        "de" => c.de,
        "cs" => c.cs,
        _ => c.en,
    }
}

fn place_name(id: &str, lang: &str) -> &'static str {
    let p = place(id);
    match lang {
        "de" => p.de,
        "cs" => p.cs,
        _ => p.en,
    }
}

fn iso(date: &Option<DateSpan>) -> String {
    date.map(|d| d.to_string()).unwrap_or_else(|| "undated".into())
}

fn element(out: &mut String, indent: usize, name: &str, value: &str) {
    if !value.is_empty() {
        let _ = writeln!(out, "{}<{name}>{}</{name}>", "  ".repeat(indent), escape(value));
    }
}

const JMP_LEVELS: &[(&str, Level)] = &[
    ("fond", Level::Fonds),
    ("podfond", Level::Subfonds),
    ("serie", Level::Series),
    ("podserie", Level::Subseries),
    ("slozka", Level::File),
    ("kus", Level::Item),
];

fn jmp_unit(out: &mut String, seed: &Seed, indent: usize) {
    let pad = "  ".repeat(indent);
    let token = JMP_LEVELS.iter().find(|(_, l)| *l == seed.level).map(|(t, _)| *t).unwrap_or("oddil");
    let _ = writeln!(out, "{pad}<unit ref=\"{}\" type=\"{token}\">", escape(seed.id.as_str()));
    element(out, indent + 1, "nazev", &seed.title);
    element(out, indent + 1, "datace", &iso(&seed.date).replace("undated", "bez data"));
    element(out, indent + 1, "jazyk", seed.language);
    for kw in &seed.keywords {
        element(out, indent + 1, "heslo", label(kw, "cs"));
    }
    if let Some(d) = seed.department {
        element(out, indent + 1, "oddeleni", label(d, "cs"));
    }
    if let Some(p) = seed.place {
        element(out, indent + 1, "misto", place_name(p, "cs"));
    }
    for p in &seed.persons {
        let [(db, code), ..] = person_codes(person_index(p));
        element(out, indent + 1, "osoba", &format!("{db}:{code}"));
    }
    element(out, indent + 1, "obsah", &seed.scope);
    for child in &seed.children {
        jmp_unit(out, child, indent + 1);
    }
    let _ = writeln!(out, "{pad}</unit>");
}

fn render_jmp(roots: &[Seed]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<export source=\"JMP\">\n");
    for r in roots {
        jmp_unit(&mut out, r, 1);
    }
    out.push_str("</export>\n");
    out
}

fn yv_unit(out: &mut String, seed: &Seed, indent: usize) {
    let pad = "  ".repeat(indent);
    let _ = writeln!(out, "{pad}<unit>");
    element(out, indent + 1, "identifier", &seed.id);
    element(out, indent + 1, "level", if seed.level == Level::Subcollection { "Sub-Collection" } else { "File" });
    element(out, indent + 1, "title", &seed.title);
    let inner = "  ".repeat(indent + 1);
    match seed.date {
        Some(d) => {
            let _ = write!(out, "{inner}<dates><from>{}</from>", d.start);
            if let Some(end) = d.end {
                let _ = write!(out, "<to>{end}</to>");
            }
            out.push_str("</dates>\n");
        }
        None => {
            let _ = writeln!(out, "{inner}<dates><from>undated</from></dates>");
        }
    }
    element(out, indent + 1, "language", seed.language);
    let subjects: Vec<&str> = seed.keywords.iter().map(|k| label(k, "en")).collect();
    element(out, indent + 1, "subjects", &subjects.join("|"));
    if let Some(d) = seed.department {
        element(out, indent + 1, "creator", label(d, "en"));
    }
    if let Some(p) = seed.place {
        element(out, indent + 1, "location", place_name(p, "en"));
    }
    for p in &seed.persons {
        element(out, indent + 1, "name", PERSONS[person_index(p)].name);
    }
    element(out, indent + 1, "abstract", &seed.scope);
    for child in &seed.children {
        yv_unit(out, child, indent + 1);
    }
    let _ = writeln!(out, "{pad}</unit>");
}

fn render_yv(roots: &[Seed]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<collection>\n");
    for r in roots {
        yv_unit(&mut out, r, 1);
    }
    out.push_str("</collection>\n");
    out
}

fn table(delimiter: u8, header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn render_bt(seeds: &[Seed]) -> String {
    let rows = seeds
        .iter()
        .map(|s| {
            let person = s.persons.iter().map(|p| {
                let [_, (db, code), _] = person_codes(person_index(p));
                format!("{db}:{code}")
            });
            vec![
                s.id.clone(),
                s.title.clone(),
                iso(&s.date),
                s.keywords.iter().map(|k| label(k, "en")).collect::<Vec<_>>().join(", "),
                s.place.map(|p| place_name(p, "en")).unwrap_or_default().to_string(),
                person.collect::<Vec<_>>().join(", "),
                s.department.map(|d| label(d, "en")).unwrap_or_default().to_string(),
                s.language.to_string(),
            ]
        })
        .collect();
    table(b';', &["file_no", "title", "date", "subjects", "place", "person", "department", "language"], rows)
}

fn tm_date(date: &Option<DateSpan>) -> String {
    match date {
        None => "bez data".into(),
        Some(d) if d.end.is_none() && d.start.precision() == Precision::Day => {
            format!("{:02}.{:02}.{}", d.start.day.unwrap_or(1), d.start.month.unwrap_or(1), d.start.year)
        }
        Some(d) => d.to_string(),
    }
}

fn render_tm(seeds: &[Seed]) -> String {
    let rows = seeds
        .iter()
        .map(|s| {
            vec![
                s.id.clone(),
                s.title.clone(),
                tm_date(&s.date),
                s.keywords.iter().map(|k| label(k, "de")).collect::<Vec<_>>().join("; "),
                s.place.map(|p| place_name(p, "cs")).unwrap_or_default().to_string(),
                s.persons
                    .iter()
                    .map(|p| {
                        let [.., (db, code)] = person_codes(person_index(p));
                        format!("{db}:{code}")
                    })
                    .collect::<Vec<_>>()
                    .join("; "),
                s.language.to_string(),
            ]
        })
        .collect();
    table(b',', &["inv", "nazev", "datum", "hesla", "misto", "osoba", "jazyk"], rows)
}

fn render_thesaurus() -> String {
    let mut out = String::from("# id\tfield\tlanguage\tvalue\n");
    for c in CONCEPTS {
        for (lang, text) in [("en", c.en), ("de", c.de), ("cs", c.cs)] {
            let _ = writeln!(out, "{}\tprefLabel\t{lang}\t{text}", c.id);
        }
        for (lang, text) in c.alt {
            let _ = writeln!(out, "{}\taltLabel\t{lang}\t{text}", c.id);
        }
        for n in c.narrower {
            let _ = writeln!(out, "{}\tnarrower\t\t{n}", c.id);
        }
    }
    out
}

fn render_persons() -> String {
    let mut out = String::new();
    for p in PERSONS {
        let _ = writeln!(out, "{}\tname\t\t{}", p.id, p.name);
        for v in p.variants {
            let _ = writeln!(out, "{}\tvariant\t\t{v}", p.id);
        }
        let _ = writeln!(out, "{}\tbiography\ten\t{}", p.id, p.note);
    }
    out
}

fn render_concordance() -> String {
    let mut out = String::from("# database\tlocal id\tperson\n");
    for (i, p) in PERSONS.iter().enumerate() {
        for (db, code) in person_codes(i) {
            let _ = writeln!(out, "{db}\t{code}\t{}", p.id);
        }
    }
    out
}

fn render_places() -> String {
    let mut out = String::new();
    for p in PLACES {
        let _ = writeln!(out, "{}\tname\ten\t{}", p.id, p.en);
        let _ = writeln!(out, "{}\tvariant\tde\t{}", p.id, p.de);
        if p.cs != p.en {
            let _ = writeln!(out, "{}\tvariant\tcs\t{}", p.id, p.cs);
        }
        let _ = writeln!(out, "{}\tpoint\t\t{},{}", p.id, p.lat, p.lon);
        if p.id == "pl-terezin" {
            let _ = writeln!(out, "{}\tpolygon\t\t{TEREZIN_OUTLINE}", p.id);
        }
        if let Some(w) = p.within {
            let _ = writeln!(out, "{}\twithin\t\t{w}", p.id);
        }
    }
    out
}

fn render_events(corpus: &Corpus) -> String {
    let dok: Vec<String> = all_seeds(&corpus.jmp).iter().filter(|s| s.id.starts_with("DOK")).map(|s| global_id("jmp", &s.id)).collect();
    let events: [(&str, [&str; 3], &str, &[&str], Vec<String>); 6] = [
        ("ev-first-transport", ["Arrival of the first transport", "Ankunft des ersten Transports", "Příjezd prvního transportu"], "1941-11-24", &[], vec![]),
        (
            "ev-ghetto",
            ["Ghetto period", "Zeit des Ghettos", "Období ghetta"],
            "1941-11-24/1945-05-08",
            &["p-edelstein", "p-eppstein", "p-murmelstein"],
            vec![global_id("jmp", "TER")],
        ),
        (
            "ev-beautification",
            ["Beautification campaign", "Verschönerungsaktion", "Zkrášlovací akce"],
            "1943-12/1944-06",
            &[],
            vec![corpus.daily_order_unit.clone()],
        ),
        ("ev-red-cross", ["Red Cross commission visit", "Besuch der Rotkreuzkommission", "Návštěva komise Červeného kříže"], "1944-06-23", &[], vec![]),
        ("ev-liberation", ["Liberation", "Befreiung", "Osvobození"], "1945-05", &[], vec![]),
        ("ev-documentation", ["Documentation Project", "Dokumentationsaktion", "Dokumentační akce"], "1945-05/1947", &["p-scheck"], dok),
    ];
    let mut out = String::from("# id\tfield\tlanguage\tvalue\n");
    for (id, labels, when, persons, units) in events {
        for (lang, text) in ["en", "de", "cs"].iter().zip(labels) {
            let _ = writeln!(out, "{id}\tlabel\t{lang}\t{text}");
        }
        let _ = writeln!(out, "{id}\twhen\t\t{when}");
        let _ = writeln!(out, "{id}\tkind\t\t{}", if when.contains('/') { "period" } else { "point" });
        for u in units {
            let _ = writeln!(out, "{id}\tunit\t\t{u}");
        }
        for p in persons {
            let _ = writeln!(out, "{id}\tperson\t\t{p}");
        }
    }
    out
}

pub fn fixture_repositories() -> Vec<Repository> {
    let repo = |id: &str, name: &str, other: &[&str], country: &str, address: &str, summary: &str| Repository {
        ehri_id: id.into(),
        authorized_form_of_name: name.into(),
        other_names: other.iter().map(|s| s.to_string()).collect(),
        country: country.into(),
        address: address.into(),
        contact: format!("archive@{id}.example.org"),
        description_status: DescriptionStatus::Draft,
        holdings_summary: summary.into(),
        harvest_endpoint: None,
        harvest_capable: false,
    };
    let mut jmp = repo(
        "jmp",
        "Jewish Museum in Prague",
        &["Židovské muzeum v Praze"],
        "CZ",
        "Prague, Czech Republic",
        "Records of the Terezín ghetto self-administration, daily orders, drawings of the Technical Department and the Documentation Project.",
    );
    jmp.harvest_capable = true;
    jmp.harvest_endpoint = Some("http://127.0.0.1:8640/oai".into());
    vec![
        repo("bt", "Beit Theresienstadt", &["Beit Terezin"], "IL", "Givat Haim Ihud, Israel", "Personal papers, letters and drawings of former ghetto inmates."),
        jmp,
        repo("tm", "Terezín Memorial", &["Památník Terezín"], "CZ", "Terezín, Czech Republic", "Items from the ghetto: ration cards, ghetto money, postcards and transport lists."),
        repo("yv", "Yad Vashem Archives", &[], "IL", "Jerusalem, Israel", "Transport lists, administration records and post-war testimonies."),
    ]
}

fn rule(source: &str, target: Target, transform: Transform) -> FieldRule {
    FieldRule { source: source.into(), target, transform, required: false }
}

pub fn fixture_profiles() -> BTreeMap<&'static str, MappingProfile> {
    let iso = || Transform::DateParse("iso".into());
    let mut out = BTreeMap::new();
    let mut title = rule("nazev", Target::Title, Transform::Copy);
    title.required = true;
    out.insert(
        "jmp",
        MappingProfile {
            profile_id: "jmp-nested".into(),
            source_kind: SourceKind::NestedXml,
            delimiter: ',',
            source_system: "JMP".into(),
            id: IdRule { sources: vec!["@ref".into()], separator: "-".into() },
            level: LevelRule::Nesting { path: "@type".into(), map: JMP_LEVELS.iter().map(|(t, l)| (t.to_string(), *l)).collect() },
            fields: vec![
                title,
                rule("datace", Target::DatesOfCreation, iso()),
                rule("jazyk", Target::LanguageOfMaterial, Transform::Copy),
                rule("", Target::LanguageOfDescription, Transform::Constant("cs".into())),
                rule("heslo", Target::Keywords, Transform::Copy),
                rule("oddeleni", Target::Departments, Transform::Copy),
                rule("misto", Target::Places, Transform::Copy),
                rule("osoba", Target::Persons, Transform::Copy),
                rule("obsah", Target::ScopeContent, Transform::Copy),
            ],
        },
    );
    out.insert(
        "yv",
        MappingProfile {
            profile_id: "yv-nested".into(),
            source_kind: SourceKind::NestedXml,
            delimiter: ',',
            source_system: "YV".into(),
            id: IdRule { sources: vec!["identifier".into()], separator: "-".into() },
            level: LevelRule::Nesting {
                path: "level".into(),
                map: [("Sub-Collection".to_string(), Level::Subcollection), ("File".to_string(), Level::File)].into_iter().collect(),
            },
            fields: vec![
                rule("title", Target::Title, Transform::Copy),
                rule("", Target::DatesOfCreation, Transform::Concat { paths: vec!["dates/from".into(), "dates/to".into()], separator: "/".into() }),
                rule("language", Target::LanguageOfMaterial, Transform::Copy),
                rule("", Target::LanguageOfDescription, Transform::Constant("en".into())),
                rule("subjects", Target::Keywords, Transform::SplitList("|".into())),
                rule("creator", Target::Departments, Transform::Copy),
                rule("location", Target::Places, Transform::Copy),
                rule("name", Target::Persons, Transform::Copy),
                rule("abstract", Target::ScopeContent, Transform::Copy),
            ],
        },
    );
    out.insert(
        "bt",
        MappingProfile {
            profile_id: "bt-files".into(),
            source_kind: SourceKind::DelimitedTable,
            delimiter: ';',
            source_system: "BT".into(),
            id: IdRule { sources: vec!["file_no".into()], separator: "-".into() },
            level: LevelRule::Constant { level: Level::File },
            fields: vec![
                rule("title", Target::Title, Transform::Copy),
                rule("date", Target::DatesOfCreation, iso()),
                rule("subjects", Target::Keywords, Transform::SplitList(",".into())),
                rule("place", Target::Places, Transform::Copy),
                rule("person", Target::Persons, Transform::SplitList(",".into())),
                rule("department", Target::Departments, Transform::Copy),
                rule("language", Target::LanguageOfMaterial, Transform::Copy),
                rule("", Target::LanguageOfDescription, Transform::Constant("en".into())),
            ],
        },
    );
    out.insert(
        "tm",
        MappingProfile {
            profile_id: "tm-items".into(),
            source_kind: SourceKind::DelimitedTable,
            delimiter: ',',
            source_system: "TII".into(),
            id: IdRule { sources: vec!["inv".into()], separator: "-".into() },
            level: LevelRule::Constant { level: Level::Item },
            fields: vec![
                rule("nazev", Target::Title, Transform::Copy),
                rule("datum", Target::DatesOfCreation, Transform::DateParse("%d.%m.%Y".into())),
                rule("hesla", Target::Keywords, Transform::SplitList(";".into())),
                rule("misto", Target::Places, Transform::Copy),
                rule("osoba", Target::Persons, Transform::SplitList(";".into())),
                rule("jazyk", Target::LanguageOfMaterial, Transform::Copy),
                rule("", Target::LanguageOfDescription, Transform::Constant("cs".into())),
            ],
        },
    );
    out
}

pub fn fixture_guide_config() -> GuideConfig {
    GuideConfig {
        guide_id: "terezin".into(),
        title: "Terezín research guide".into(),
        repositories: vec!["jmp".into(), "yv".into(), "bt".into(), "tm".into()],
        root_units: vec![],
        keyword_root: Some("kw-sources".into()),
        department_root: Some("dept-root".into()),
        places: vec![],
        events: vec![],
        persons: vec![],
    }
}

fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Writes the corpus and its manifest into `out_dir`. The same seed always
/// produces byte-identical files.
pub fn generate_fixtures(out_dir: &Path, seed: u64) -> Result<FixtureManifest, FixtureError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = build_corpus(&mut rng);
    let mut entries = Vec::new();
    let mut write = |name: &str, kind: FixtureKind, path: &str, body: String, expected: BTreeMap<String, usize>, profile: Option<&str>, repo: Option<&str>| {
        let target = out_dir.join(path);
        fs::write(&target, body).map_err(|e| io_err(&target, e))?;
        entries.push(ManifestEntry {
            name: name.into(),
            kind,
            path: path.into(),
            profile: profile.map(String::from),
            repository: repo.map(String::from),
            expected_counts: expected,
        });
        Ok::<(), FixtureError>(())
    };

    write("thesaurus", FixtureKind::Thesaurus, "thesaurus.tsv", render_thesaurus(), counts(&[("concepts", CONCEPTS.len())]), None, None)?;
    write("persons", FixtureKind::Persons, "persons.tsv", render_persons(), counts(&[("persons", PERSONS.len())]), None, None)?;
    write("concordance", FixtureKind::Concordance, "concordance.tsv", render_concordance(), counts(&[("pairs", PERSONS.len() * 3)]), None, None)?;
    write("places", FixtureKind::Places, "places.tsv", render_places(), counts(&[("places", PLACES.len())]), None, None)?;
    write("events", FixtureKind::Events, "events.tsv", render_events(&corpus), counts(&[("events", 6)]), None, None)?;
    let repos = fixture_repositories();
    let repos_json = serde_json::to_string_pretty(&repos).expect("repositories serialize") + "\n";
    write("repositories", FixtureKind::Repositories, "repositories.json", repos_json, counts(&[("repositories", repos.len())]), None, None)?;
    for (code, profile) in fixture_profiles() {
        let name = format!("{code}-profile");
        write(&name, FixtureKind::Profile, &format!("{code}.profile.toml"), profile.to_toml(), counts(&[("rules", profile.fields.len())]), None, None)?;
    }
    let exports: [(&str, &str, FixtureKind, String, &[Seed]); 4] = [
        ("jmp", "jmp-terezin.xml", FixtureKind::NestedXml, render_jmp(&corpus.jmp), &corpus.jmp),
        ("yv", "yv-terezin.xml", FixtureKind::NestedXml, render_yv(&corpus.yv), &corpus.yv),
        ("bt", "bt-files.csv", FixtureKind::DelimitedTable, render_bt(&corpus.bt), &corpus.bt),
        ("tm", "tm-items.csv", FixtureKind::DelimitedTable, render_tm(&corpus.tm), &corpus.tm),
    ];
    for (code, path, kind, body, roots) in exports {
        let expected = counts(&[
            ("records", roots.iter().map(Seed::count).sum()),
            ("topLevel", roots.len()),
            ("maxDepth", roots.iter().map(Seed::depth).max().unwrap_or(0)),
            ("rejected", 0),
        ]);
        write(&format!("{code}-export"), kind, path, body, expected, Some(&format!("{code}-profile")), Some(code))?;
    }
    let guide = fixture_guide_config();
    write("guide", FixtureKind::GuideConfig, "guide.toml", guide.to_toml(), counts(&[("repositories", guide.repositories.len())]), None, None)?;

    let mut planted_copies = Vec::new();
    for group in &corpus.copy_groups {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                planted_copies.push((x.clone(), y.clone()));
            }
        }
    }
    planted_copies.sort();
    let manifest = FixtureManifest {
        seed,
        entries,
        planted_copies,
        place_links: [("pl-magdeburg".to_string(), 3)].into_iter().collect(),
        daily_order_unit: corpus.daily_order_unit,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Loading and verification

/// Reads a manifest-relative file.
pub fn read_entry(dir: &Path, entry: &ManifestEntry) -> Result<String, FixtureError> {
    let path = entry_path(dir, entry);
    fs::read_to_string(&path).map_err(|e| io_err(&path, e))
}

pub fn entry_path(dir: &Path, entry: &ManifestEntry) -> PathBuf {
    dir.join(&entry.path)
}

fn malformed(entry: &ManifestEntry, e: impl ToString) -> FixtureError {
    FixtureError::Malformed { entry: entry.name.clone(), reason: e.to_string() }
}

pub fn load_profile(dir: &Path, manifest: &FixtureManifest, name: &str) -> Result<MappingProfile, FixtureError> {
    let entry = manifest.entry(name).ok_or_else(|| FixtureError::Malformed { entry: name.into(), reason: "no such manifest entry".into() })?;
    let profile = MappingProfile::parse(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
    profile.check().map_err(|e| malformed(entry, e))?;
    Ok(profile)
}

/// Parses an export entry with its profile.
pub fn parse_export(dir: &Path, manifest: &FixtureManifest, entry: &ManifestEntry) -> Result<ingest::ParsedBatch, FixtureError> {
    let profile_name = entry.profile.as_deref().ok_or_else(|| malformed(entry, "export has no profile"))?;
    let profile = load_profile(dir, manifest, profile_name)?;
    let path = entry_path(dir, entry);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    ingest::parse(&bytes, &profile).map_err(|e| malformed(entry, e))
}

/// Parses every entry and compares the result with its expected counts.
pub fn verify_manifest(dir: &Path) -> Result<FixtureManifest, FixtureError> {
    let manifest = FixtureManifest::load(dir)?;
    let mut authorities = Authorities::default();
    let mut ordered: Vec<&ManifestEntry> = manifest.entries.iter().collect();
    // persons must be known before the concordance refers to them
    ordered.sort_by_key(|e| e.kind != FixtureKind::Persons);
    for entry in ordered {
        let mut actual: BTreeMap<String, usize> = BTreeMap::new();
        match entry.kind {
            FixtureKind::NestedXml | FixtureKind::DelimitedTable => {
                let batch = parse_export(dir, &manifest, entry)?;
                actual.insert("records".into(), batch.record_count());
                actual.insert("topLevel".into(), batch.trees.len());
                actual.insert("maxDepth".into(), batch.trees.iter().map(UnitTree::depth).max().unwrap_or(0));
                actual.insert("rejected".into(), batch.rejected.len());
            }
            FixtureKind::Thesaurus => {
                let t = Thesaurus::parse(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("concepts".into(), t.len());
            }
            FixtureKind::Persons => {
                let n = authorities.load_persons_str(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("persons".into(), n);
            }
            FixtureKind::Concordance => {
                let n = authorities.load_concordance_str(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("pairs".into(), n);
            }
            FixtureKind::Places => {
                let n = authorities.load_places_str(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("places".into(), n);
            }
            FixtureKind::Events => {
                let events = parse_events(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("events".into(), events.len());
            }
            FixtureKind::Profile => {
                let p = MappingProfile::parse(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                p.check().map_err(|e| malformed(entry, e))?;
                actual.insert("rules".into(), p.fields.len());
            }
            FixtureKind::Repositories => {
                let repos: Vec<Repository> = serde_json::from_str(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("repositories".into(), repos.len());
            }
            FixtureKind::GuideConfig => {
                let g = GuideConfig::parse(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
                actual.insert("repositories".into(), g.repositories.len());
            }
        }
        for (key, expected) in &entry.expected_counts {
            let found = actual.get(key).copied().unwrap_or(0);
            if found != *expected {
                return Err(FixtureError::CountMismatch { entry: entry.name.clone(), key: key.clone(), expected: *expected, actual: found });
            }
        }
    }
    Ok(manifest)
}

/// How an export entry reaches the portal.
#[derive(Debug, Clone)]
pub enum Delivery {
    File,
    /// Harvested from an endpoint serving the export.
    Harvest { endpoint: String, config: HarvestConfig },
}

/// Loads a whole fixture directory into a portal in dependency order:
/// vocabularies, repositories, exports, events, guide. Exports are read from
/// disk unless `deliveries` names another route for their repository.
pub fn load_portal(portal: &Portal, dir: &Path, deliveries: &BTreeMap<String, Delivery>) -> Result<BTreeMap<String, ImportReport>, PortalError> {
    let manifest = FixtureManifest::load(dir)?;
    let texts_of = |kind: FixtureKind| -> Result<Vec<String>, FixtureError> { manifest.entries_of(kind).map(|e| read_entry(dir, e)).collect() };
    portal.load_vocabulary(&VocabularyTexts {
        thesauri: texts_of(FixtureKind::Thesaurus)?,
        persons: texts_of(FixtureKind::Persons)?,
        places: texts_of(FixtureKind::Places)?,
        concordances: texts_of(FixtureKind::Concordance)?,
    })?;
    for entry in manifest.entries_of(FixtureKind::Repositories) {
        let repos: Vec<Repository> = serde_json::from_str(&read_entry(dir, entry)?).map_err(|e| malformed(entry, e))?;
        portal.import_repositories(&repos)?;
    }
    let mut reports = BTreeMap::new();
    for entry in manifest.entries.iter().filter(|e| matches!(e.kind, FixtureKind::NestedXml | FixtureKind::DelimitedTable)) {
        let repo = entry.repository.as_deref().ok_or_else(|| malformed(entry, "export has no repository"))?;
        let profile = load_profile(dir, &manifest, entry.profile.as_deref().ok_or_else(|| malformed(entry, "export has no profile"))?)?;
        let report = match deliveries.get(repo) {
            Some(Delivery::Harvest { endpoint, config }) => portal.harvest(endpoint, None, &profile, repo, config.clone())?,
            _ => {
                let path = entry_path(dir, entry);
                let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
                portal.ingest(&bytes, &profile, repo)?
            }
        };
        reports.insert(repo.to_string(), report);
    }
    for text in texts_of(FixtureKind::Events)? {
        portal.load_events(&text)?;
    }
    for entry in manifest.entries_of(FixtureKind::GuideConfig) {
        let config = GuideConfig::parse(&read_entry(dir, entry)?)?;
        portal.put_guide(&config)?;
    }
    Ok(reports)
}
