use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::nlu::{ItemKind, Nlu, NluMode, ParsedName, Value};

use super::{DialogueTranscript, TurnSelector};

/// The (possibly partial) profile built by enrolment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnrolOutcome {
    pub postcode: Option<String>,
    pub name: Option<ParsedName>,
    pub dob: Option<NaiveDate>,
    /// Turns consumed per item, in dialogue order.
    pub turns: [usize; 3],
}

impl EnrolOutcome {
    pub fn turns_consumed(&self) -> usize {
        self.turns.iter().sum()
    }

    pub fn is_complete(&self) -> bool {
        self.postcode.is_some() && self.name.is_some() && self.dob.is_some()
    }

    fn set(&mut self, value: &Value) {
        match value {
            Value::Postcode(p) => self.postcode = Some(p.clone()),
            Value::Name(n) => self.name = Some(n.clone()),
            Value::Date(d) => self.dob = Some(*d),
        }
    }
}

/// Prompts for each item until the NLU top-1 is non-empty or attempts run out.
pub fn run_enrolment(t: &DialogueTranscript, nlu: &Nlu, mode: NluMode, selector: TurnSelector) -> EnrolOutcome {
    let mut out = EnrolOutcome::default();
    for item in ItemKind::ALL {
        for turn in t.item_turns(item, selector) {
            out.turns[item.index()] += 1;
            if let Some(top) = nlu.extract(turn, mode).top() {
                out.set(top);
                break;
            }
        }
    }
    out
}
