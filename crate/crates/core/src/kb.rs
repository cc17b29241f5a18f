//! Profile knowledge base: seeded generation, postcode queries and the
//! line-oriented file format.
//!
//! File layout (UTF-8, tab separated):
//!
//! ```text
//! #evi-kb	version=1	locale=en-GB
//! en-GB-00000	AB12CD	john	smith	1989-07-04
//! ```
//!
//! Columns are `profile_id`, `postcode`, `name_first`, `name_last` and
//! `dob` (ISO-8601). `name_full` is derived on load.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locale::{Locale, LocaleResources};
use crate::text::{canonical_name, canonical_postcode};

pub const KB_FORMAT_VERSION: u32 = 1;
const KB_MAGIC: &str = "#evi-kb";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub profile_id: String,
    pub postcode: String,
    pub name_first: String,
    pub name_last: String,
    pub name_full: String,
    pub dob: NaiveDate,
}

impl Profile {
    /// Builds a profile from raw values, canonicalizing postcode and names.
    pub fn new(profile_id: impl Into<String>, postcode: &str, first: &str, last: &str, dob: NaiveDate) -> Self {
        let name_first = canonical_name(first);
        let name_last = canonical_name(last);
        let name_full = format!("{name_first} {name_last}");
        Profile {
            profile_id: profile_id.into(),
            postcode: canonical_postcode(postcode),
            name_first,
            name_last,
            name_full,
            dob,
        }
    }

    /// ISO-8601 form of the date of birth, the string the scorers compare.
    pub fn dob_iso(&self) -> String {
        self.dob.format("%Y-%m-%d").to_string()
    }
}

/// Immutable set of profiles plus the postcode index.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    locale: Locale,
    profiles: Vec<Profile>,
    by_id: HashMap<String, usize>,
    postcode_index: BTreeMap<String, Vec<usize>>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.locale == other.locale && self.profiles == other.profiles
    }
}

impl KnowledgeBase {
    pub fn new(locale: Locale) -> Self {
        KnowledgeBase {
            locale,
            profiles: Vec::new(),
            by_id: HashMap::new(),
            postcode_index: BTreeMap::new(),
        }
    }

    /// Builds a KB from profiles, rejecting duplicate ids.
    pub fn from_profiles(locale: Locale, profiles: impl IntoIterator<Item = Profile>) -> Result<Self> {
        let mut kb = KnowledgeBase::new(locale);
        for p in profiles {
            kb.insert(p)?;
        }
        Ok(kb)
    }

    /// Adds an enrolled profile.
    pub fn insert(&mut self, profile: Profile) -> Result<()> {
        if self.by_id.contains_key(&profile.profile_id) {
            return Err(Error::Contract(format!(
                "duplicate profile id `{}`",
                profile.profile_id
            )));
        }
        let idx = self.profiles.len();
        self.by_id.insert(profile.profile_id.clone(), idx);
        self.postcode_index
            .entry(profile.postcode.clone())
            .or_default()
            .push(idx);
        self.profiles.push(profile);
        Ok(())
    }

    pub fn locale(&self) -> Locale {
        self.locale
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, profile_id: &str) -> Option<&Profile> {
        self.by_id.get(profile_id).map(|&i| &self.profiles[i])
    }

    /// Distinct postcodes with the ids of the profiles that share each.
    pub fn postcode_index(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        self.postcode_index.iter().map(|(pc, idx)| {
            (
                pc.as_str(),
                idx.iter().map(|&i| self.profiles[i].profile_id.as_str()).collect(),
            )
        })
    }

    pub fn distinct_postcodes(&self) -> usize {
        self.postcode_index.len()
    }

    /// Exact-match lookup: union of the cohorts of every candidate postcode,
    /// deduplicated and ordered by profile id.
    pub fn query_by_postcode<S: AsRef<str>>(&self, candidates: &[S]) -> Vec<&Profile> {
        let mut hits: Vec<&Profile> = candidates
            .iter()
            .filter_map(|c| self.postcode_index.get(c.as_ref()))
            .flatten()
            .map(|&i| &self.profiles[i])
            .collect();
        hits.sort_by(|a, b| a.profile_id.cmp(&b.profile_id));
        hits.dedup_by(|a, b| a.profile_id == b.profile_id);
        hits
    }

    /// Query whose candidate list always contains the true profile's postcode.
    pub fn oracle_query<S: AsRef<str>>(&self, candidates: &[S], true_profile_id: &str) -> Result<Vec<&Profile>> {
        let truth = self
            .get(true_profile_id)
            .ok_or_else(|| Error::UnknownProfile(true_profile_id.to_string()))?;
        let mut all: Vec<&str> = candidates.iter().map(AsRef::as_ref).collect();
        all.push(&truth.postcode);
        Ok(self.query_by_postcode(&all))
    }

    /// Serializes to the tab-separated KB format.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{KB_MAGIC}\tversion={KB_FORMAT_VERSION}\tlocale={}\n", self.locale);
        for p in &self.profiles {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                p.profile_id,
                p.postcode,
                p.name_first,
                p.name_last,
                p.dob_iso()
            );
        }
        out
    }

    /// Writes the KB atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_file_string().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses KB text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing `#evi-kb` header"))?;
        let locale = parse_header(header).map_err(|m| Error::parse(origin, 1, m))?;
        let resources = LocaleResources::load(locale)?;
        let mut kb = KnowledgeBase::new(locale);
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            }
            let dob = NaiveDate::parse_from_str(fields[4], "%Y-%m-%d")
                .map_err(|e| Error::parse(origin, lineno, format!("bad date `{}`: {e}", fields[4])))?;
            let profile = Profile::new(fields[0], fields[1], fields[2], fields[3], dob);
            if profile.profile_id.is_empty() {
                return Err(Error::parse(origin, lineno, "empty profile_id"));
            }
            if !resources.is_postcode(&profile.postcode) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("postcode `{}` does not match the {locale} pattern", fields[1]),
                ));
            }
            if profile.name_first.is_empty() || profile.name_last.is_empty() {
                return Err(Error::parse(origin, lineno, "empty name field"));
            }
            kb.insert(profile)
                .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        }
        Ok(kb)
    }
}

fn parse_header(header: &str) -> std::result::Result<Locale, String> {
    let mut parts = header.split('\t');
    if parts.next() != Some(KB_MAGIC) {
        return Err("missing `#evi-kb` header".into());
    }
    let mut version = None;
    let mut locale = None;
    for part in parts {
        match part.split_once('=') {
            Some(("version", v)) => version = Some(v.parse::<u32>().map_err(|_| format!("bad version `{v}`"))?),
            Some(("locale", l)) => locale = Some(l.parse::<Locale>().map_err(|e| e.to_string())?),
            _ => return Err(format!("unexpected header field `{part}`")),
        }
    }
    match version {
        Some(KB_FORMAT_VERSION) => {}
        Some(v) => return Err(format!("unsupported KB format version {v}")),
        None => return Err("header lacks version".into()),
    }
    locale.ok_or_else(|| "header lacks locale".into())
}

/// Parameters of the seeded profile generator.
#[derive(Debug, Clone)]
pub struct GenerationSpec {
    pub locale: Locale,
    pub n_profiles: usize,
    pub n_postcodes: usize,
    pub first_name_pool: Vec<String>,
    pub last_name_pool: Vec<String>,
    pub dob_range: (NaiveDate, NaiveDate),
    pub seed: u64,
}

impl GenerationSpec {
    /// Default date-of-birth range, inclusive.
    pub fn default_dob_range() -> (NaiveDate, NaiveDate) {
        (
            NaiveDate::from_ymd_opt(1940, 1, 1).expect("valid date"),
            NaiveDate::from_ymd_opt(2002, 12, 31).expect("valid date"),
        )
    }

    /// Spec using the locale's shipped wordlists and the default DOB range.
    pub fn for_locale(locale: Locale, n_profiles: usize, n_postcodes: usize, seed: u64) -> Result<Self> {
        let res = LocaleResources::load(locale)?;
        Ok(GenerationSpec {
            locale,
            n_profiles,
            n_postcodes,
            first_name_pool: res.first_names.clone(),
            last_name_pool: res.last_names.clone(),
            dob_range: Self::default_dob_range(),
            seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.first_name_pool.is_empty() || self.last_name_pool.is_empty() {
            return Err(Error::Config("name pools must be non-empty".into()));
        }
        if self.n_postcodes == 0 && self.n_profiles > 0 {
            return Err(Error::Config("postcode pool must be non-empty".into()));
        }
        if self.dob_range.0 >= self.dob_range.1 {
            return Err(Error::Config(format!(
                "date-of-birth range {}..{} is empty or degenerate",
                self.dob_range.0, self.dob_range.1
            )));
        }
        Ok(())
    }
}

/// Generates a KB deterministically from `spec`.
///
/// A pool of `n_postcodes` distinct postcodes is drawn from the locale's
/// formats; every pool entry is assigned to at least one profile (when
/// `n_profiles >= n_postcodes`) and the remaining profiles draw from the
/// pool with replacement.
pub fn generate_kb(spec: &GenerationSpec) -> Result<KnowledgeBase> {
    spec.validate()?;
    let res = LocaleResources::load(spec.locale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let pool = postcode_pool(&res, spec.n_postcodes, &mut rng)?;
    let mut assignment: Vec<usize> = if spec.n_profiles >= pool.len() {
        let mut a: Vec<usize> = (0..pool.len()).collect();
        a.extend((pool.len()..spec.n_profiles).map(|_| rng.gen_range(0..pool.len())));
        a
    } else {
        rand::seq::index::sample(&mut rng, pool.len(), spec.n_profiles).into_vec()
    };
    assignment.shuffle(&mut rng);

    let (start, end) = spec.dob_range;
    let span_days = (end - start).num_days();
    let width = spec.n_profiles.saturating_sub(1).to_string().len().max(5);
    let mut kb = KnowledgeBase::new(spec.locale);
    for (i, &pc) in assignment.iter().enumerate() {
        let first = &spec.first_name_pool[rng.gen_range(0..spec.first_name_pool.len())];
        let last = &spec.last_name_pool[rng.gen_range(0..spec.last_name_pool.len())];
        let dob = start + chrono::Duration::days(rng.gen_range(0..=span_days));
        let id = format!("{}-{:0width$}", spec.locale, i, width = width);
        kb.insert(Profile::new(id, &pool[pc], first, last, dob))?;
    }
    Ok(kb)
}

fn postcode_pool(res: &LocaleResources, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<String>> {
    let formats = res.postcode_formats();
    let capacity: f64 = formats
        .iter()
        .map(|slots| slots.iter().map(|s| s.len() as f64).product::<f64>())
        .sum();
    if (n as f64) > capacity {
        return Err(Error::Config(format!(
            "cannot draw {n} distinct postcodes; the {} pattern admits about {capacity}",
            res.locale
        )));
    }
    let mut seen = HashSet::with_capacity(n);
    let mut pool = Vec::with_capacity(n);
    while pool.len() < n {
        let slots = &formats[rng.gen_range(0..formats.len())];
        let code: String = slots.iter().map(|s| s[rng.gen_range(0..s.len())].as_str()).collect();
        debug_assert!(res.is_postcode(&code), "format produced `{code}`");
        if seen.insert(code.clone()) {
            pool.push(code);
        }
    }
    Ok(pool)
}
