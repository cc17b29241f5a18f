//! Task-level state tracking and policies replayed over recorded dialogues.

mod enrol;
mod identify;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::Symbol;
use crate::locale::Locale;
use crate::nlu::{ItemKind, Turn, TURNS_PER_ITEM};

pub use enrol::{run_enrolment, EnrolOutcome};
pub use identify::{
    run_identification, IdMode, IdentifyOutcome, IdentifyParams, IdentifyState, KbMode, RankedCandidate,
};
pub use verify::{run_verification, upper_bound_score, VerifyOutcome, VerifyParams, VerifyState};

/// One recorded dialogue: up to nine turns, three per item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTranscript {
    pub dialogue_id: String,
    pub locale: Locale,
    pub true_profile_id: String,
    pub turns: Vec<Turn>,
}

impl DialogueTranscript {
    pub fn validate(&self) -> Result<()> {
        if self.turns.len() > ItemKind::ALL.len() * TURNS_PER_ITEM {
            return Err(Error::Contract(format!(
                "dialogue {} has {} turns",
                self.dialogue_id,
                self.turns.len()
            )));
        }
        for t in &self.turns {
            t.validate()?;
        }
        if self.turns.windows(2).any(|w| w[0].turn_index >= w[1].turn_index) {
            return Err(Error::Contract(format!(
                "dialogue {}: turns must be in strictly increasing order",
                self.dialogue_id
            )));
        }
        Ok(())
    }

    /// Recorded turns for `item` that the selector admits, in order.
    pub fn item_turns(&self, item: ItemKind, selector: TurnSelector) -> impl Iterator<Item = &Turn> {
        self.turns
            .iter()
            .filter(move |t| t.item_kind() == item && selector.admits(t.turn_index))
    }
}

/// Score symbols fed by each item.
pub fn item_symbols(item: ItemKind) -> &'static [Symbol] {
    match item {
        ItemKind::Postcode => &[Symbol::Postcode],
        ItemKind::Name => &[Symbol::NameFull, Symbol::NameFirst, Symbol::NameLast],
        ItemKind::Dob => &[Symbol::Dob],
    }
}

/// Which attempts of each item the policies may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnSelector {
    /// All attempts, subject to the policy.
    #[default]
    Multi,
    /// Only attempt k (1..=3) of each item.
    Single(u8),
}

impl TurnSelector {
    pub fn admits(self, turn_index: u8) -> bool {
        match self {
            TurnSelector::Multi => true,
            TurnSelector::Single(k) => turn_index.saturating_sub(1) % TURNS_PER_ITEM as u8 + 1 == k,
        }
    }
}

impl fmt::Display for TurnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TurnSelector::Multi => write!(f, "multi"),
            TurnSelector::Single(k) => write!(f, "single:{k}"),
        }
    }
}

impl FromStr for TurnSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("multi") {
            return Ok(TurnSelector::Multi);
        }
        match s.split_once(':') {
            Some((kind, k)) if kind.eq_ignore_ascii_case("single") => match k.parse::<u8>() {
                Ok(k @ 1..=3) => Ok(TurnSelector::Single(k)),
                _ => Err(Error::Config(format!("turn selector `{s}`: attempt must be 1, 2 or 3"))),
            },
            _ => Err(Error::Config(format!(
                "unknown turn selector `{s}` (expected multi or single:k)"
            ))),
        }
    }
}
