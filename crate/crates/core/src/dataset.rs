//! Transcript files and the adapter for the published EVI dataset layout.
//!
//! Native transcript files hold one [`DialogueTranscript`] per JSON line.
//!
//! The adapter reads the per-turn layout of the public release:
//! one JSON record per line (or a JSON array) with `dialogue_id`,
//! `turn_id` (0-based or 1-based), `target_profile_id` and `asr_nbest`
//! (falling back to `asr_transcription`), plus an optional `language`
//! and `prompt`. Profiles come from a CSV or TSV file with a header naming
//! the id, postcode, first name, last name and date-of-birth columns.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::dialogue::DialogueTranscript;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::kb::{KnowledgeBase, Profile};
use crate::locale::{Locale, LocaleResources};
use crate::nlu::{Turn, MAX_NBEST};

pub fn parse_transcripts(text: &str, origin: &Path) -> Result<Vec<DialogueTranscript>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: DialogueTranscript =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        t.validate().map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn load_transcripts(path: &Path) -> Result<Vec<DialogueTranscript>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcripts(&text, path)
}

pub fn save_transcripts(path: &Path, dialogues: &[DialogueTranscript]) -> Result<()> {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&serde_json::to_string(d).expect("transcripts serialize"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Deserialize)]
struct EviTurnRecord {
    dialogue_id: String,
    turn_id: u32,
    target_profile_id: String,
    #[serde(default)]
    language: Option<String>,
    #[serde(default)]
    asr_nbest: Option<Vec<String>>,
    #[serde(default)]
    asr_transcription: Option<String>,
    #[serde(default)]
    prompt: Option<String>,
}

fn parse_turn_records(text: &str, origin: &Path) -> Result<Vec<EviTurnRecord>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| Error::parse(origin, e.line(), e.to_string()));
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?);
        }
    }
    Ok(out)
}

/// Groups per-turn EVI records into transcripts for `locale`.
///
/// Records of other languages are skipped. Turn ids are taken as 0-based
/// when any record has `turn_id` 0. N-best lists are capped at 20.
pub fn import_evi_turns(path: &Path, locale: Locale) -> Result<Vec<DialogueTranscript>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_turn_records(&text, path)?;
    let zero_based = records.iter().any(|r| r.turn_id == 0);
    let mut grouped: BTreeMap<String, (String, BTreeMap<u8, Turn>)> = BTreeMap::new();
    for (i, r) in records.into_iter().enumerate() {
        if let Some(lang) = &r.language {
            match lang.parse::<Locale>() {
                Ok(l) if l != locale => continue,
                Ok(_) => {}
                Err(_) => return Err(Error::parse(path, i + 1, format!("unknown language `{lang}`"))),
            }
        }
        let index = r.turn_id + u32::from(zero_based);
        let turn_index = u8::try_from(index)
            .ok()
            .filter(|t| (1..=9).contains(t))
            .ok_or_else(|| Error::parse(path, i + 1, format!("turn_id {} out of range", r.turn_id)))?;
        let mut nbest = r
            .asr_nbest
            .or_else(|| r.asr_transcription.map(|t| vec![t]))
            .unwrap_or_default();
        nbest.retain(|h| !h.trim().is_empty());
        nbest.truncate(MAX_NBEST);
        let entry = grouped
            .entry(r.dialogue_id.clone())
            .or_insert_with(|| (r.target_profile_id.clone(), BTreeMap::new()));
        if entry.0 != r.target_profile_id {
            return Err(Error::parse(
                path,
                i + 1,
                format!("dialogue {} has conflicting target profiles", r.dialogue_id),
            ));
        }
        let turn = Turn {
            turn_index,
            nbest,
            prompt_variant: r.prompt,
        };
        if entry.1.insert(turn_index, turn).is_some() {
            return Err(Error::parse(
                path,
                i + 1,
                format!("dialogue {} repeats turn {}", r.dialogue_id, r.turn_id),
            ));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(dialogue_id, (true_profile_id, turns))| DialogueTranscript {
            dialogue_id,
            locale,
            true_profile_id,
            turns: turns.into_values().collect(),
        })
        .collect())
}

const ID_COLS: &[&str] = &["profile_id", "id", "target_profile_id"];
const POSTCODE_COLS: &[&str] = &["postcode", "post_code", "zip"];
const FIRST_COLS: &[&str] = &["name_first", "first_name", "first"];
const LAST_COLS: &[&str] = &["name_last", "last_name", "last"];
const FULL_COLS: &[&str] = &["name_full", "full_name", "name"];
const DOB_COLS: &[&str] = &["dob", "date_of_birth", "birth_date"];

fn parse_dob(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    ["%Y-%m-%d", "%d/%m/%Y", "%d.%m.%Y", "%d-%m-%Y"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
}

/// Reads an EVI profiles table (CSV, or TSV when the header contains a tab).
pub fn import_evi_profiles(path: &Path, locale: Locale) -> Result<KnowledgeBase> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delimiter = if text.lines().next().is_some_and(|h| h.contains('\t')) {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h == n));
    let missing = |what: &str| Error::parse(path, 1, format!("profiles header lacks a {what} column"));
    let id = col(ID_COLS).ok_or_else(|| missing("profile id"))?;
    let postcode = col(POSTCODE_COLS).ok_or_else(|| missing("postcode"))?;
    let dob = col(DOB_COLS).ok_or_else(|| missing("date of birth"))?;
    let names = match (col(FIRST_COLS), col(LAST_COLS), col(FULL_COLS)) {
        (Some(f), Some(l), _) => (Some(f), Some(l), None),
        (_, _, Some(full)) => (None, None, Some(full)),
        _ => return Err(missing("name")),
    };
    let resources = LocaleResources::load(locale)?;
    let mut kb = KnowledgeBase::new(locale);
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let (first, last) = match names {
            (Some(f), Some(l), _) => (field(f).to_string(), field(l).to_string()),
            (_, _, Some(full)) => match field(full).split_once(char::is_whitespace) {
                Some((f, l)) => (f.to_string(), l.trim().to_string()),
                None => return Err(Error::parse(path, line, "full name has no first/last split")),
            },
            _ => unreachable!(),
        };
        let date = parse_dob(field(dob))
            .ok_or_else(|| Error::parse(path, line, format!("bad date of birth `{}`", field(dob))))?;
        let profile = Profile::new(field(id), field(postcode), &first, &last, date);
        if !resources.is_postcode(&profile.postcode) {
            return Err(Error::parse(
                path,
                line,
                format!("postcode `{}` does not match the {locale} pattern", field(postcode)),
            ));
        }
        kb.insert(profile)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(kb)
}
