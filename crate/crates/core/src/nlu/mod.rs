//! Value extraction from ASR n-best lists.

mod date;
mod name;
mod numbers;
mod postcode;
mod preprocess;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locale::{Locale, LocaleResources};

/// Maximum n-best list length.
pub const MAX_NBEST: usize = 20;
/// Turns per item.
pub const TURNS_PER_ITEM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Postcode,
    Name,
    Dob,
}

impl ItemKind {
    pub const ALL: [ItemKind; 3] = [ItemKind::Postcode, ItemKind::Name, ItemKind::Dob];

    /// Item asked at turn `turn_index` (1..=9).
    pub fn for_turn(turn_index: u8) -> Option<ItemKind> {
        match turn_index {
            1..=3 => Some(ItemKind::Postcode),
            4..=6 => Some(ItemKind::Name),
            7..=9 => Some(ItemKind::Dob),
            _ => None,
        }
    }

    /// Position of the item in the dialogue, 0-based.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Turn index of attempt `attempt` (1..=3) for this item.
    pub fn turn_index(self, attempt: usize) -> u8 {
        (self.index() * TURNS_PER_ITEM + attempt) as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Postcode => "postcode",
            ItemKind::Name => "name",
            ItemKind::Dob => "dob",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NluMode {
    Cautious,
    Seeking,
}

impl fmt::Display for NluMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NluMode::Cautious => "cautious",
            NluMode::Seeking => "seeking",
        })
    }
}

impl FromStr for NluMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cautious" => Ok(NluMode::Cautious),
            "seeking" => Ok(NluMode::Seeking),
            _ => Err(Error::Config(format!(
                "unknown NLU mode `{s}` (expected cautious or seeking)"
            ))),
        }
    }
}

/// One user turn: the ASR n-best list recorded for one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub turn_index: u8,
    pub nbest: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_variant: Option<String>,
}

impl Turn {
    pub fn new(turn_index: u8, nbest: Vec<String>) -> Result<Turn> {
        let turn = Turn {
            turn_index,
            nbest,
            prompt_variant: None,
        };
        turn.validate()?;
        Ok(turn)
    }

    pub fn validate(&self) -> Result<()> {
        if ItemKind::for_turn(self.turn_index).is_none() {
            return Err(Error::Contract(format!("turn index {} outside 1..=9", self.turn_index)));
        }
        if self.nbest.len() > MAX_NBEST {
            return Err(Error::Contract(format!(
                "turn {} has {} hypotheses (max {MAX_NBEST})",
                self.turn_index,
                self.nbest.len()
            )));
        }
        Ok(())
    }

    pub fn item_kind(&self) -> ItemKind {
        ItemKind::for_turn(self.turn_index).expect("validated turn index")
    }
}

/// A name extracted from one hypothesis. At least one field is set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParsedName {
    pub first: Option<String>,
    pub last: Option<String>,
    pub full: Option<String>,
}

impl ParsedName {
    pub fn first_only(first: &str) -> ParsedName {
        ParsedName {
            first: Some(first.to_string()),
            last: None,
            full: None,
        }
    }

    pub fn last_only(last: &str) -> ParsedName {
        ParsedName {
            first: None,
            last: Some(last.to_string()),
            full: None,
        }
    }

    pub fn pair(first: &str, last: &str) -> ParsedName {
        ParsedName {
            first: Some(first.to_string()),
            last: Some(last.to_string()),
            full: Some(format!("{first} {last}")),
        }
    }

    /// The full name, or `first last` when only the parts are known.
    pub fn full_or_join(&self) -> Option<String> {
        match (&self.full, &self.first, &self.last) {
            (Some(full), _, _) => Some(full.clone()),
            (None, Some(f), Some(l)) => Some(format!("{f} {l}")),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Value {
    Postcode(String),
    Name(ParsedName),
    Date(NaiveDate),
}

/// An extracted value and the rank (0-based) of the hypothesis it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub value: Value,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NluResult {
    pub item_kind: ItemKind,
    pub values: Vec<Extraction>,
}

impl NluResult {
    pub fn empty(item_kind: ItemKind) -> NluResult {
        NluResult {
            item_kind,
            values: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn top(&self) -> Option<&Value> {
        self.values.first().map(|e| &e.value)
    }

    /// Appends `value` unless an equal value is already present.
    fn push_unique(&mut self, value: Value, rank: usize) {
        if !self.values.iter().any(|e| e.value == value) {
            self.values.push(Extraction { value, rank });
        }
    }

    /// Postcode values as canonical strings.
    pub fn postcodes(&self) -> Vec<&str> {
        self.values
            .iter()
            .filter_map(|e| match &e.value {
                Value::Postcode(p) => Some(p.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn names(&self) -> Vec<&ParsedName> {
        self.values
            .iter()
            .filter_map(|e| match &e.value {
                Value::Name(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.values
            .iter()
            .filter_map(|e| match &e.value {
                Value::Date(d) => Some(*d),
                _ => None,
            })
            .collect()
    }
}

/// Symbolic NLU bound to one locale.
#[derive(Debug, Clone)]
pub struct Nlu {
    res: Arc<LocaleResources>,
}

impl Nlu {
    pub fn new(res: Arc<LocaleResources>) -> Nlu {
        Nlu { res }
    }

    /// NLU over the built-in resources of `locale`.
    pub fn builtin(locale: Locale) -> Nlu {
        Nlu::new(LocaleResources::builtin(locale))
    }

    pub fn locale(&self) -> Locale {
        self.res.locale
    }

    pub fn resources(&self) -> &LocaleResources {
        &self.res
    }

    /// Normalizes spoken numbers and letter spellings, e.g. "alfa bravo one two" → "A B 1 2".
    pub fn preprocess(&self, hypothesis: &str) -> String {
        preprocess::preprocess_tokens(&self.res, hypothesis)
            .iter()
            .map(|t| t.to_uppercase())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn extract_postcode(&self, turn: &Turn, mode: NluMode) -> NluResult {
        self.collect(ItemKind::Postcode, turn, |tokens| {
            postcode::extract(&self.res, tokens, mode)
                .into_iter()
                .map(Value::Postcode)
                .collect()
        })
    }

    pub fn extract_name(&self, turn: &Turn, mode: NluMode) -> NluResult {
        self.collect(ItemKind::Name, turn, |tokens| {
            name::extract(&self.res, tokens, mode)
                .into_iter()
                .map(Value::Name)
                .collect()
        })
    }

    pub fn extract_date(&self, turn: &Turn, mode: NluMode) -> NluResult {
        self.collect(ItemKind::Dob, turn, |tokens| {
            date::extract(&self.res, tokens, mode)
                .into_iter()
                .map(Value::Date)
                .collect()
        })
    }

    /// Dispatches on the turn's item kind.
    pub fn extract(&self, turn: &Turn, mode: NluMode) -> NluResult {
        match turn.item_kind() {
            ItemKind::Postcode => self.extract_postcode(turn, mode),
            ItemKind::Name => self.extract_name(turn, mode),
            ItemKind::Dob => self.extract_date(turn, mode),
        }
    }

    fn collect<F>(&self, kind: ItemKind, turn: &Turn, f: F) -> NluResult
    where
        F: Fn(&[String]) -> Vec<Value>,
    {
        let mut out = NluResult::empty(kind);
        for (rank, hyp) in turn.nbest.iter().take(MAX_NBEST).enumerate() {
            let tokens = preprocess::preprocess_tokens(&self.res, hyp);
            for value in f(&tokens) {
                out.push_unique(value, rank);
            }
        }
        out
    }
}
