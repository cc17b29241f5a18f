//! Locale tags and the per-locale resource bundle (postcode grammar, number
//! words, month names, spelling aliases and name lexica).
//!
//! Built-in resources are compiled into the crate. Setting the
//! `EVI_RESOURCES` environment variable to a directory laid out as
//! `<dir>/<tag>/locale.toml` overrides them at load time.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{canonical_name, fold};

/// Environment variable naming a resource directory override.
pub const RESOURCE_DIR_ENV: &str = "EVI_RESOURCES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Locale {
    #[serde(rename = "en-GB")]
    EnGb,
    #[serde(rename = "pl-PL")]
    PlPl,
    #[serde(rename = "fr-FR")]
    FrFr,
}

impl Locale {
    pub const ALL: [Locale; 3] = [Locale::EnGb, Locale::PlPl, Locale::FrFr];

    pub fn tag(self) -> &'static str {
        match self {
            Locale::EnGb => "en-GB",
            Locale::PlPl => "pl-PL",
            Locale::FrFr => "fr-FR",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Locale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Locale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").to_ascii_lowercase().as_str() {
            "en-gb" => Ok(Locale::EnGb),
            "pl-pl" => Ok(Locale::PlPl),
            "fr-fr" => Ok(Locale::FrFr),
            _ => Err(Error::UnknownLocale(s.to_string())),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocaleFile {
    tag: String,
    postcode_pattern: String,
    postcode_formats: Vec<String>,
    first_names: String,
    last_names: String,
    spell_connectors: Vec<String>,
    number_connectors: Vec<String>,
    ordinal_suffixes: Vec<String>,
    date_fillers: Vec<String>,
    year_suffixes: Vec<String>,
    vigesimal: bool,
    postcode_sets: BTreeMap<String, String>,
    months: BTreeMap<String, u32>,
    numbers: BTreeMap<String, u32>,
    multipliers: BTreeMap<String, u32>,
    spelling_alphabet: BTreeMap<String, String>,
}

/// One placeholder position of a postcode format: the literal alternatives it may produce.
pub type PostcodeSlot = Vec<String>;

/// Lexicon of canonical first and last names. Entries may span several tokens.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    first: HashSet<String>,
    last: HashSet<String>,
    max_tokens: usize,
    /// Letters-only form of entries containing spaces or punctuation.
    spelled: HashMap<String, String>,
}

impl Lexicon {
    pub fn new<I, J>(first: I, last: J) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
        J: IntoIterator,
        J::Item: AsRef<str>,
    {
        let first: HashSet<String> = first
            .into_iter()
            .map(|s| canonical_name(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        let last: HashSet<String> = last
            .into_iter()
            .map(|s| canonical_name(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        let max_tokens = first
            .iter()
            .chain(last.iter())
            .map(|s| s.split(' ').count())
            .max()
            .unwrap_or(1);
        let spelled = first
            .iter()
            .chain(last.iter())
            .filter_map(|s| {
                let letters: String = s.chars().filter(|c| c.is_alphabetic()).collect();
                (letters != *s).then(|| (letters, s.clone()))
            })
            .collect();
        Lexicon {
            first,
            last,
            max_tokens,
            spelled,
        }
    }

    /// The entry a letter-by-letter spelling stands for, when the entry has spaces or punctuation.
    pub fn spelled(&self, letters: &str) -> Option<&str> {
        self.spelled.get(letters).map(String::as_str)
    }

    pub fn is_first(&self, name: &str) -> bool {
        self.first.contains(name)
    }

    pub fn is_last(&self, name: &str) -> bool {
        self.last.contains(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.is_first(name) || self.is_last(name)
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }
}

/// Immutable per-locale resources. Safe to share across threads.
#[derive(Debug)]
pub struct LocaleResources {
    pub locale: Locale,
    postcode_regex: Regex,
    postcode_formats: Vec<Vec<PostcodeSlot>>,
    postcode_max_len: usize,
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    pub lexicon: Lexicon,
    pub(crate) months: HashMap<String, u32>,
    pub(crate) numbers: HashMap<String, u32>,
    pub(crate) multipliers: HashMap<String, u32>,
    pub(crate) spelling: HashMap<String, char>,
    pub(crate) spell_connectors: Vec<Vec<String>>,
    pub(crate) number_connectors: HashSet<String>,
    pub(crate) ordinal_suffixes: Vec<String>,
    pub(crate) date_fillers: HashSet<String>,
    pub(crate) year_suffixes: HashSet<String>,
    pub(crate) vigesimal: bool,
}

const BUILTIN: [(&str, &str, &str); 3] = [
    (
        include_str!("../resources/locales/en-GB/locale.toml"),
        include_str!("../resources/locales/en-GB/first_names.txt"),
        include_str!("../resources/locales/en-GB/last_names.txt"),
    ),
    (
        include_str!("../resources/locales/pl-PL/locale.toml"),
        include_str!("../resources/locales/pl-PL/first_names.txt"),
        include_str!("../resources/locales/pl-PL/last_names.txt"),
    ),
    (
        include_str!("../resources/locales/fr-FR/locale.toml"),
        include_str!("../resources/locales/fr-FR/first_names.txt"),
        include_str!("../resources/locales/fr-FR/last_names.txt"),
    ),
];

static BUILTIN_CACHE: [OnceLock<Arc<LocaleResources>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];

impl LocaleResources {
    /// Loads resources for `locale`, honouring the `EVI_RESOURCES` override.
    pub fn load(locale: Locale) -> Result<Arc<LocaleResources>> {
        match std::env::var_os(RESOURCE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Ok(Arc::new(Self::from_dir(locale, Path::new(&dir))?)),
            _ => Ok(Self::builtin(locale)),
        }
    }

    /// The compiled-in resources for `locale`.
    pub fn builtin(locale: Locale) -> Arc<LocaleResources> {
        BUILTIN_CACHE[locale.index()]
            .get_or_init(|| {
                let (cfg, first, last) = BUILTIN[locale.index()];
                let parsed = Self::parse(locale, cfg, Path::new("<builtin>"), lines(first), lines(last));
                Arc::new(parsed.expect("built-in locale resources are valid"))
            })
            .clone()
    }

    /// Reads `<dir>/<tag>/locale.toml` and the lexicon files it names.
    pub fn from_dir(locale: Locale, dir: &Path) -> Result<LocaleResources> {
        let base = dir.join(locale.tag());
        let cfg_path = base.join("locale.toml");
        let cfg = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
        let file: LocaleFile =
            toml::from_str(&cfg).map_err(|e| Error::Config(format!("{}: {e}", cfg_path.display())))?;
        if file.tag.parse::<Locale>()? != locale {
            return Err(Error::Config(format!(
                "{}: tag `{}` does not match locale {locale}",
                cfg_path.display(),
                file.tag
            )));
        }
        let first = read_wordlist(&base.join(&file.first_names))?;
        let last = read_wordlist(&base.join(&file.last_names))?;
        Self::from_file(locale, file, &cfg_path, first, last)
    }

    fn parse(locale: Locale, cfg: &str, origin: &Path, first: Vec<String>, last: Vec<String>) -> Result<Self> {
        let file: LocaleFile = toml::from_str(cfg).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        debug_assert_eq!(file.tag.parse::<Locale>().ok(), Some(locale));
        Self::from_file(locale, file, origin, first, last)
    }

    fn from_file(
        locale: Locale,
        file: LocaleFile,
        origin: &Path,
        first: Vec<String>,
        last: Vec<String>,
    ) -> Result<Self> {
        let cfg_err = |msg: String| Error::Config(format!("{}: {msg}", origin.display()));
        if first.is_empty() || last.is_empty() {
            return Err(cfg_err("name lexica must be non-empty".into()));
        }
        let postcode_regex =
            Regex::new(&file.postcode_pattern).map_err(|e| cfg_err(format!("postcode_pattern: {e}")))?;

        let mut postcode_formats = Vec::new();
        let mut postcode_max_len = 0;
        for format in &file.postcode_formats {
            let mut slots = Vec::new();
            for ch in format.chars() {
                if ch.is_whitespace() || ch == '-' {
                    continue;
                }
                let slot: PostcodeSlot = match file.postcode_sets.get(&ch.to_string()) {
                    Some(set) if set.contains(' ') => set.split_whitespace().map(str::to_string).collect(),
                    Some(set) => set.chars().map(|c| c.to_string()).collect(),
                    None => vec![ch.to_string()],
                };
                if slot.is_empty() {
                    return Err(cfg_err(format!("empty postcode set `{ch}`")));
                }
                slots.push(slot);
            }
            let len: usize = slots
                .iter()
                .map(|s| s.iter().map(|o| o.chars().count()).max().unwrap_or(0))
                .sum();
            postcode_max_len = postcode_max_len.max(len);
            postcode_formats.push(slots);
        }
        if postcode_formats.is_empty() {
            return Err(cfg_err("no postcode formats".into()));
        }

        let spelling = file
            .spelling_alphabet
            .iter()
            .map(|(word, letter)| {
                let mut chars = letter.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok((fold(word), c.to_ascii_uppercase())),
                    _ => Err(cfg_err(format!("spelling alias `{word}` must map to one letter"))),
                }
            })
            .collect::<Result<HashMap<_, _>>>()?;

        let first_names: Vec<String> = dedup_sorted(first.iter().map(|s| canonical_name(s)));
        let last_names: Vec<String> = dedup_sorted(last.iter().map(|s| canonical_name(s)));
        let lexicon = Lexicon::new(&first_names, &last_names);

        Ok(LocaleResources {
            locale,
            postcode_regex,
            postcode_formats,
            postcode_max_len,
            first_names,
            last_names,
            lexicon,
            months: file.months.into_iter().map(|(k, v)| (fold(&k), v)).collect(),
            numbers: file.numbers.into_iter().map(|(k, v)| (fold(&k), v)).collect(),
            multipliers: file.multipliers.into_iter().map(|(k, v)| (fold(&k), v)).collect(),
            spelling,
            spell_connectors: file
                .spell_connectors
                .iter()
                .map(|c| fold(c).split_whitespace().map(str::to_string).collect())
                .collect(),
            number_connectors: file.number_connectors.iter().map(|s| fold(s)).collect(),
            ordinal_suffixes: file.ordinal_suffixes.iter().map(|s| fold(s)).collect(),
            date_fillers: file.date_fillers.iter().map(|s| fold(s)).collect(),
            year_suffixes: file.year_suffixes.iter().map(|s| fold(s)).collect(),
            vigesimal: file.vigesimal,
        })
    }

    /// Replaces the NLU name lexicon, e.g. with a larger external name list.
    pub fn with_lexicon(mut self, lexicon: Lexicon) -> Self {
        self.lexicon = lexicon;
        self
    }

    /// Whether a canonical postcode matches this locale's pattern.
    pub fn is_postcode(&self, canonical: &str) -> bool {
        self.postcode_regex.is_match(canonical)
    }

    pub fn postcode_formats(&self) -> &[Vec<PostcodeSlot>] {
        &self.postcode_formats
    }

    /// Longest canonical postcode any format can produce.
    pub fn postcode_max_len(&self) -> usize {
        self.postcode_max_len
    }

    pub fn month(&self, token: &str) -> Option<u32> {
        self.months.get(token).copied()
    }
}

fn lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn dedup_sorted(names: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = names.filter(|s| !s.is_empty()).collect();
    v.sort();
    v.dedup();
    v
}

/// Reads a wordlist file: one UTF-8 entry per line, blank lines ignored.
pub fn read_wordlist(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    Ok(lines(&text))
}
