use serde::{Deserialize, Serialize};

use crate::fuzzy::{profile_score, score_item, FuzzyConfig, ScorerModel, SymbolScores, UndefinedPolicy};
use crate::kb::Profile;
use crate::nlu::{ItemKind, Nlu, NluMode, NluResult};
use crate::rng::keyed_rng;

use super::{item_symbols, DialogueTranscript, TurnSelector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyParams {
    pub nlu_mode: NluMode,
    pub model: ScorerModel,
    pub cfg: FuzzyConfig,
    pub theta: f64,
    pub early_term: bool,
    pub selector: TurnSelector,
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            nlu_mode: NluMode::Seeking,
            model: ScorerModel::Fuzzy,
            cfg: FuzzyConfig::Standard,
            theta: 0.5,
            early_term: false,
            selector: TurnSelector::Multi,
            seed: 0,
        }
    }
}

/// Per-symbol maximum scores and attempts per item.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyState {
    pub scores: SymbolScores,
    pub attempts: [usize; 3],
}

impl VerifyState {
    /// Scores one turn's NLU result against `claimed` and keeps the maxima.
    pub fn observe(
        &mut self,
        item: ItemKind,
        result: &NluResult,
        claimed: &Profile,
        model: ScorerModel,
        random_key: (u64, &str),
    ) {
        self.attempts[item.index()] += 1;
        for &sym in item_symbols(item) {
            let values = sym.values(result);
            let (seed, dialogue_id) = random_key;
            let mut rng = keyed_rng(seed, &[dialogue_id, &claimed.profile_id, sym.as_str()]);
            let s = score_item(model, &sym.claimed(claimed), &values, &mut rng);
            self.scores.update(sym, s);
        }
    }

    /// Whether `item` has a well-defined score.
    pub fn item_done(&self, item: ItemKind, model: ScorerModel) -> bool {
        if model == ScorerModel::Random {
            return self.attempts[item.index()] > 0;
        }
        let s = &self.scores;
        match item {
            ItemKind::Postcode => s.postcode.is_defined(),
            ItemKind::Dob => s.dob.is_defined(),
            ItemKind::Name => s.name_full.is_defined() || (s.name_first.is_defined() && s.name_last.is_defined()),
        }
    }

    pub fn turns_consumed(&self) -> usize {
        self.attempts.iter().sum()
    }
}

/// Profile score with undefined items counted as perfect matches.
pub fn upper_bound_score(state: &VerifyState, cfg: &FuzzyConfig) -> f64 {
    profile_score(&state.scores, UndefinedPolicy::AsOne, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub score: f64,
    pub accepted: bool,
    pub turns: usize,
    pub early_terminated: bool,
    pub scores: SymbolScores,
}

pub fn run_verification(t: &DialogueTranscript, claimed: &Profile, nlu: &Nlu, p: &VerifyParams) -> VerifyOutcome {
    let mut state = VerifyState::default();
    let mut early = false;
    for item in ItemKind::ALL {
        for turn in t.item_turns(item, p.selector) {
            let result = nlu.extract(turn, p.nlu_mode);
            state.observe(item, &result, claimed, p.model, (p.seed, &t.dialogue_id));
            if state.item_done(item, p.model) {
                break;
            }
        }
        if p.early_term && upper_bound_score(&state, &p.cfg) < p.theta {
            early = true;
            break;
        }
    }
    let score = profile_score(&state.scores, UndefinedPolicy::AsZero, &p.cfg);
    VerifyOutcome {
        score,
        accepted: score >= p.theta,
        turns: state.turns_consumed(),
        early_terminated: early,
        scores: state.scores,
    }
}

/// Scores `claimed` against a set of accumulated NLU results.
pub(crate) fn score_symbols<'a>(
    results: impl IntoIterator<Item = (ItemKind, &'a NluResult)>,
    claimed: &Profile,
    model: ScorerModel,
    random_key: (u64, &str),
) -> SymbolScores {
    let mut state = VerifyState::default();
    for (item, r) in results {
        state.observe(item, r, claimed, model, random_key);
    }
    state.scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::testutil::transcript;
    use crate::fuzzy::{ItemScore, Symbol};
    use crate::locale::Locale;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn smith() -> Profile {
        Profile::new(
            "p1",
            "AB12CD",
            "john",
            "smith",
            NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
        )
    }

    fn perfect() -> DialogueTranscript {
        transcript(
            "d1",
            "p1",
            [
                Some("AB1 2CD"),
                None,
                None,
                Some("john smith"),
                None,
                None,
                Some("1/1/2000"),
                None,
                None,
            ],
        )
    }

    #[test]
    fn genuine_perfect_nlu_scores_one() {
        let nlu = Nlu::builtin(Locale::EnGb);
        for theta in [0.0, 0.5, 1.0] {
            let p = VerifyParams {
                theta,
                early_term: true,
                ..Default::default()
            };
            let out = run_verification(&perfect(), &smith(), &nlu, &p);
            assert_eq!(out.score, 1.0);
            assert!(out.accepted);
            assert_eq!(out.turns, 3);
        }
    }

    #[test]
    fn early_termination_after_bad_postcode() {
        let nlu = Nlu::builtin(Locale::EnGb);
        // "ZZ99ZZ" shares no position with "AB12CD"
        let t = transcript(
            "d2",
            "p1",
            [
                Some("ZZ9 9ZZ"),
                None,
                None,
                Some("john smith"),
                None,
                None,
                Some("1/1/2000"),
                None,
                None,
            ],
        );
        let p = VerifyParams {
            theta: 0.5,
            early_term: true,
            ..Default::default()
        };
        let out = run_verification(&t, &smith(), &nlu, &p);
        assert!(out.early_terminated);
        assert_eq!(out.turns, 1);
        assert!(!out.accepted);
        assert!(!out.scores.name_full.is_defined());
        let full = run_verification(&t, &smith(), &nlu, &VerifyParams { early_term: false, ..p });
        assert_eq!(full.turns, 3);
        assert_eq!(full.accepted, out.accepted);
    }

    #[test]
    fn upper_bound_examples() {
        let cfg = FuzzyConfig::Standard;
        assert_eq!(upper_bound_score(&VerifyState::default(), &cfg), 1.0);
        let mut s = VerifyState::default();
        s.scores.postcode = ItemScore::defined(0.2);
        assert_eq!(upper_bound_score(&s, &cfg), 0.2);
    }

    #[test]
    fn reprompts_until_defined() {
        let nlu = Nlu::builtin(Locale::EnGb);
        let t = transcript(
            "d3",
            "p1",
            [
                Some("pardon"),
                Some("what"),
                Some("AB1 2CD"),
                Some("err"),
                Some("john smith"),
                Some("john smith"),
                None,
                None,
                Some("1/1/2000"),
            ],
        );
        let out = run_verification(&t, &smith(), &nlu, &VerifyParams::default());
        assert_eq!(out.turns, 3 + 2 + 1);
        assert_eq!(out.score, 1.0);
        let random = VerifyParams {
            model: ScorerModel::Random,
            ..Default::default()
        };
        let r = run_verification(&t, &smith(), &nlu, &random);
        assert_eq!(r.turns, 3);
        assert_eq!(r, run_verification(&t, &smith(), &nlu, &random));
    }

    fn grid_score() -> impl Strategy<Value = ItemScore> {
        prop_oneof![
            Just(ItemScore::UNDEFINED),
            (0u32..=4).prop_map(|k| ItemScore::defined(k as f64 / 4.0))
        ]
    }

    proptest! {
        /// The bound dominates the final score of every completion of a partial state.
        #[test]
        fn upper_bound_dominates_completions(
            known in prop::collection::vec(grid_score(), 5),
            fill in prop::collection::vec(grid_score(), 5),
            alpha in prop::sample::select(vec![0.0, 0.5, 1.0]),
        ) {
            let cfg = FuzzyConfig::InfinityOne { alpha };
            let mut partial = VerifyState::default();
            let mut complete = VerifyState::default();
            for (i, sym) in Symbol::ALL.iter().enumerate() {
                *partial.scores.get_mut(*sym) = known[i];
                *complete.scores.get_mut(*sym) = if known[i].is_defined() { known[i] } else { fill[i] };
            }
            let bound = upper_bound_score(&partial, &cfg);
            prop_assert!(bound + 1e-12 >= profile_score(&complete.scores, UndefinedPolicy::AsZero, &cfg));
            prop_assert!(bound + 1e-12 >= profile_score(&complete.scores, UndefinedPolicy::AsOne, &cfg));
        }
    }
}
