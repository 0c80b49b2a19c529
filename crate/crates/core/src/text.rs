//! Text normalization shared by lookup, indexing, routing and copy detection.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Case-folds, strips diacritics (canonical decomposition minus combining
/// marks) and collapses whitespace.
pub fn normalize(text: &str) -> String {
    let folded = caseless::default_case_fold_str(text);
    let stripped: String = folded.nfd().filter(|c| !is_combining_mark(*c)).collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

const EN: &str = "a an and are as at be been but by can could do does for from had has have how i if in into is it its me my no not of on or our she so than that the their them then there these they this to was we were what when where which who whom why will with would you your";
const DE: &str = "aber als am an auch auf aus bei bin bis das dass dem den der des die ein eine einem einen einer eines er es für hat ich im in ist ja kann mit nach nicht noch oder sich sie sind so über um und uns von vor war was wer wie wir wo zu zum zur";
const CS: &str = "a aby ale ani asi by byl byla bylo být co do i jak jako je jeho jejich jsem jsou k kde kdo když ke mezi mi mne na nad nebo o od po pod pro proč s se si tak také tam to ty u v ve z za ze že";

/// Per-language stopword lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    lists: BTreeMap<String, BTreeSet<String>>,
}

impl Default for Stopwords {
    fn default() -> Self {
        let mut lists = BTreeMap::new();
        for (lang, words) in [("en", EN), ("de", DE), ("cs", CS)] {
            lists.insert(lang.to_string(), words.split_whitespace().map(normalize).collect());
        }
        Self { lists }
    }
}

impl Stopwords {
    pub fn empty() -> Self {
        Self { lists: BTreeMap::new() }
    }

    /// Adds words (one per line, `#` comments allowed) for `language`.
    pub fn extend_from_str(&mut self, language: &str, text: &str) {
        let set = self.lists.entry(language.to_string()).or_default();
        for line in text.lines() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            set.insert(normalize(word));
        }
    }

    /// Loads a stopword file; the language is the file stem (`de.txt` → `de`).
    pub fn load_file(&mut self, path: &Path) -> io::Result<()> {
        let text = fs::read_to_string(path)?;
        let lang = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "stopword file needs a language stem"))?;
        self.extend_from_str(lang, &text);
        Ok(())
    }

    /// True if `token` is a stopword in any of `languages` (all lists when empty).
    pub fn contains(&self, token: &str, languages: &[String]) -> bool {
        if languages.is_empty() {
            self.lists.values().any(|s| s.contains(token))
        } else {
            languages.iter().any(|l| self.lists.get(l).is_some_and(|s| s.contains(token)))
        }
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }
}

/// Character trigrams of the normalized text; shorter strings yield themselves.
pub fn trigrams(text: &str) -> BTreeSet<String> {
    let chars: Vec<char> = normalize(text).chars().collect();
    match chars.len() {
        0 => BTreeSet::new(),
        1..=2 => BTreeSet::from([chars.iter().collect()]),
        _ => chars.windows(3).map(|w| w.iter().collect()).collect(),
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
