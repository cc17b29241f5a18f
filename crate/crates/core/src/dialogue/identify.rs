use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{profile_score, FuzzyConfig, ScorerModel, UndefinedPolicy};
use crate::kb::KnowledgeBase;
use crate::nlu::{ItemKind, Nlu, NluMode, NluResult};

use super::verify::score_symbols;
use super::{DialogueTranscript, TurnSelector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KbMode {
    Normal,
    /// Every query also includes the true profile's postcode.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdMode {
    /// Candidates in id order, unscored.
    None,
    Scored,
    /// The true profile is ranked first once retrieved.
    Oracle,
}

impl fmt::Display for IdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdMode::None => "none",
            IdMode::Scored => "scored",
            IdMode::Oracle => "oracle",
        })
    }
}

impl FromStr for IdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(IdMode::None),
            "scored" => Ok(IdMode::Scored),
            "oracle" => Ok(IdMode::Oracle),
            _ => Err(Error::Config(format!(
                "unknown identification mode `{s}` (expected none, scored or oracle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyParams {
    pub nlu_mode: NluMode,
    pub model: ScorerModel,
    pub cfg: FuzzyConfig,
    pub theta: f64,
    pub kb_mode: KbMode,
    pub id_mode: IdMode,
    pub selector: TurnSelector,
    pub seed: u64,
}

impl Default for IdentifyParams {
    fn default() -> Self {
        IdentifyParams {
            nlu_mode: NluMode::Seeking,
            model: ScorerModel::Fuzzy,
            cfg: FuzzyConfig::InfinityOne { alpha: 0.5 },
            theta: 0.0,
            kb_mode: KbMode::Normal,
            id_mode: IdMode::Scored,
            selector: TurnSelector::Multi,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub profile_id: String,
    pub score: Option<f64>,
}

/// Accumulated NLU evidence and retrieved candidates.
#[derive(Debug, Clone, Default)]
pub struct IdentifyState {
    results: Vec<(ItemKind, NluResult)>,
    candidates: BTreeSet<String>,
    attempts: [usize; 3],
}

impl IdentifyState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one turn; postcode turns query the knowledge base.
    pub fn observe(
        &mut self,
        item: ItemKind,
        result: NluResult,
        kb: &KnowledgeBase,
        kb_mode: KbMode,
        true_profile_id: &str,
    ) -> Result<()> {
        self.attempts[item.index()] += 1;
        if item == ItemKind::Postcode {
            let postcodes = result.postcodes();
            let hits = match kb_mode {
                KbMode::Normal => kb.query_by_postcode(&postcodes),
                KbMode::Oracle => kb.oracle_query(&postcodes, true_profile_id)?,
            };
            self.candidates.extend(hits.into_iter().map(|p| p.profile_id.clone()));
        }
        self.results.push((item, result));
        Ok(())
    }

    /// Retrieved profile ids, ascending.
    pub fn candidates(&self) -> &BTreeSet<String> {
        &self.candidates
    }

    pub fn turns_consumed(&self) -> usize {
        self.attempts.iter().sum()
    }

    /// The anytime answer: candidates ranked by profile score.
    pub fn ranking(
        &self,
        kb: &KnowledgeBase,
        p: &IdentifyParams,
        dialogue_id: &str,
        true_profile_id: &str,
    ) -> Vec<RankedCandidate> {
        if p.id_mode == IdMode::None {
            return self
                .candidates
                .iter()
                .map(|id| RankedCandidate {
                    profile_id: id.clone(),
                    score: None,
                })
                .collect();
        }
        let mut scored: Vec<RankedCandidate> = self
            .candidates
            .iter()
            .filter_map(|id| kb.get(id))
            .map(|profile| {
                let evidence = self.results.iter().map(|(k, r)| (*k, r));
                let scores = score_symbols(evidence, profile, p.model, (p.seed, dialogue_id));
                RankedCandidate {
                    profile_id: profile.profile_id.clone(),
                    score: Some(profile_score(&scores, UndefinedPolicy::AsZero, &p.cfg)),
                }
            })
            .collect();
        let truth = if p.id_mode == IdMode::Oracle {
            scored
                .iter()
                .position(|c| c.profile_id == true_profile_id)
                .map(|i| scored.remove(i))
        } else {
            None
        };
        scored.retain(|c| c.score.unwrap_or(0.0) >= p.theta);
        // candidates are in ascending id order, and the sort is stable
        scored.sort_by(|a, b| b.score.unwrap_or(0.0).total_cmp(&a.score.unwrap_or(0.0)));
        if let Some(t) = truth {
            scored.insert(0, t);
        }
        scored
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOutcome {
    pub ranking: Vec<RankedCandidate>,
    pub turns: usize,
    /// Candidate-set size after each consumed turn.
    pub candidate_counts: Vec<usize>,
}

impl IdentifyOutcome {
    /// 1-based rank of `profile_id`, if ranked.
    pub fn rank_of(&self, profile_id: &str) -> Option<usize> {
        self.ranking
            .iter()
            .position(|c| c.profile_id == profile_id)
            .map(|i| i + 1)
    }
}

pub fn run_identification(
    t: &DialogueTranscript,
    kb: &KnowledgeBase,
    nlu: &Nlu,
    p: &IdentifyParams,
) -> Result<IdentifyOutcome> {
    if t.locale != kb.locale() {
        return Err(Error::LocaleMismatch {
            dataset: t.locale.to_string(),
            kb: kb.locale().to_string(),
        });
    }
    let mut state = IdentifyState::new();
    let mut counts = Vec::new();
    'items: for item in ItemKind::ALL {
        for turn in t.item_turns(item, p.selector) {
            let result = nlu.extract(turn, p.nlu_mode);
            let defined = !result.is_empty();
            state.observe(item, result, kb, p.kb_mode, &t.true_profile_id)?;
            counts.push(state.candidates().len());
            if p.id_mode == IdMode::Oracle && state.candidates().contains(&t.true_profile_id) {
                break 'items;
            }
            if defined {
                break;
            }
        }
        // only postcodes query the knowledge base
        if item == ItemKind::Postcode && state.candidates().is_empty() {
            break;
        }
    }
    Ok(IdentifyOutcome {
        ranking: state.ranking(kb, p, &t.dialogue_id, &t.true_profile_id),
        turns: state.turns_consumed(),
        candidate_counts: counts,
    })
}
