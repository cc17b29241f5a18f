//! Edit distance, item scorers and fuzzy-logic operators.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::Profile;
use crate::nlu::{NluResult, Value};

/// A score in [0, 1], or undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemScore(Option<f64>);

impl ItemScore {
    pub const UNDEFINED: ItemScore = ItemScore(None);

    pub fn defined(v: f64) -> ItemScore {
        debug_assert!((0.0..=1.0).contains(&v), "score {v} out of range");
        ItemScore(Some(v.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }

    /// Maximum of two scores; undefined only if both are.
    pub fn max(self, other: ItemScore) -> ItemScore {
        match (self.0, other.0) {
            (Some(a), Some(b)) => ItemScore(Some(a.max(b))),
            (a, b) => ItemScore(a.or(b)),
        }
    }

    pub fn resolve(self, policy: UndefinedPolicy) -> f64 {
        self.0.unwrap_or(match policy {
            UndefinedPolicy::AsZero => 0.0,
            UndefinedPolicy::AsOne => 1.0,
        })
    }
}

impl From<Option<f64>> for ItemScore {
    fn from(v: Option<f64>) -> Self {
        v.map_or(ItemScore::UNDEFINED, ItemScore::defined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UndefinedPolicy {
    AsZero,
    AsOne,
}

/// Fuzzy-logic operator family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FuzzyConfig {
    #[default]
    Standard,
    Pnorm { p: f64 },
    InfinityOne { alpha: f64 },
}

impl FuzzyConfig {
    pub const DEFAULT_P: f64 = 2.0;

    pub fn validate(&self) -> Result<()> {
        match *self {
            FuzzyConfig::Standard => Ok(()),
            FuzzyConfig::Pnorm { p } if p.is_finite() && p >= 1.0 => Ok(()),
            FuzzyConfig::Pnorm { p } => Err(Error::Config(format!("p-norm exponent must be >= 1, got {p}"))),
            FuzzyConfig::InfinityOne { alpha } if (0.0..=1.0).contains(&alpha) => Ok(()),
            FuzzyConfig::InfinityOne { alpha } => Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}"))),
        }
    }
}

impl fmt::Display for FuzzyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuzzyConfig::Standard => write!(f, "standard"),
            FuzzyConfig::Pnorm { p } => write!(f, "pnorm(p={p})"),
            FuzzyConfig::InfinityOne { alpha } => write!(f, "infinity-one(alpha={alpha})"),
        }
    }
}

fn check(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Contract("fuzzy operator applied to no scores".into()));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Contract(format!("fuzzy operand {s} outside [0, 1]")));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// (mean |x|^p)^(1/p), with the maximum factored out to avoid underflow.
fn power_mean(xs: &[f64], p: f64) -> f64 {
    let m = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s = xs.iter().map(|&x| (x.abs() / m).powf(p)).sum::<f64>() / xs.len() as f64;
    m * s.powf(1.0 / p)
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn fuzzy_and(cfg: &FuzzyConfig, scores: &[f64]) -> Result<f64> {
    check(scores)?;
    let v = match *cfg {
        FuzzyConfig::Standard => min(scores),
        FuzzyConfig::Pnorm { p } => {
            let comp: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            1.0 - power_mean(&comp, p)
        }
        FuzzyConfig::InfinityOne { alpha } => alpha * min(scores) + (1.0 - alpha) * mean(scores),
    };
    Ok(v.clamp(0.0, 1.0))
}

pub fn fuzzy_or(cfg: &FuzzyConfig, scores: &[f64]) -> Result<f64> {
    check(scores)?;
    let v = match *cfg {
        FuzzyConfig::Standard => max(scores),
        FuzzyConfig::Pnorm { p } => power_mean(scores, p),
        FuzzyConfig::InfinityOne { alpha } => alpha * max(scores) + (1.0 - alpha) * mean(scores),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Fuzzy negation. Not used by the profile score.
pub fn fuzzy_not(score: f64) -> f64 {
    1.0 - score
}

/// Levenshtein distance over code points (Wagner-Fischer, two rows).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// 1 - d(a, b) / max(|a|, |b|); 1 for two empty strings.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let len = a.chars().count().max(b.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / len as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerModel {
    Random,
    Exact,
    Fuzzy,
}

impl fmt::Display for ScorerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerModel::Random => "random",
            ScorerModel::Exact => "exact",
            ScorerModel::Fuzzy => "fuzzy",
        })
    }
}

impl FromStr for ScorerModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(ScorerModel::Random),
            "exact" => Ok(ScorerModel::Exact),
            "fuzzy" => Ok(ScorerModel::Fuzzy),
            _ => Err(Error::Config(format!(
                "unknown scorer model `{s}` (expected random, exact or fuzzy)"
            ))),
        }
    }
}

/// Scores a claimed value against NLU values of the same canonical form.
pub fn score_item<S: AsRef<str>, R: Rng + ?Sized>(
    model: ScorerModel,
    claimed: &str,
    values: &[S],
    rng: &mut R,
) -> ItemScore {
    match model {
        ScorerModel::Random => ItemScore::defined(rng.gen::<f64>()),
        _ if values.is_empty() => ItemScore::UNDEFINED,
        ScorerModel::Exact => ItemScore::defined(if values.iter().any(|v| v.as_ref() == claimed) {
            1.0
        } else {
            0.0
        }),
        ScorerModel::Fuzzy => ItemScore::defined(
            values
                .iter()
                .map(|v| normalized_levenshtein(claimed, v.as_ref()))
                .fold(0.0, f64::max),
        ),
    }
}

/// The five symbols combined into a profile score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    Postcode,
    Dob,
    NameFull,
    NameFirst,
    NameLast,
}

impl Symbol {
    pub const ALL: [Symbol; 5] = [
        Symbol::Postcode,
        Symbol::Dob,
        Symbol::NameFull,
        Symbol::NameFirst,
        Symbol::NameLast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Symbol::Postcode => "postcode",
            Symbol::Dob => "dob",
            Symbol::NameFull => "name_full",
            Symbol::NameFirst => "name_first",
            Symbol::NameLast => "name_last",
        }
    }

    /// The profile's value for this symbol, in NLU canonical form.
    pub fn claimed(self, profile: &Profile) -> String {
        match self {
            Symbol::Postcode => profile.postcode.clone(),
            Symbol::Dob => profile.dob_iso(),
            Symbol::NameFull => profile.name_full.clone(),
            Symbol::NameFirst => profile.name_first.clone(),
            Symbol::NameLast => profile.name_last.clone(),
        }
    }

    /// NLU values comparable with this symbol, in order.
    pub fn values(self, nlu: &NluResult) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &nlu.values {
            let v = match (&e.value, self) {
                (Value::Postcode(p), Symbol::Postcode) => Some(p.clone()),
                (Value::Date(d), Symbol::Dob) => Some(d.format("%Y-%m-%d").to_string()),
                (Value::Name(n), Symbol::NameFull) => n.full_or_join(),
                (Value::Name(n), Symbol::NameFirst) => n.first.clone(),
                (Value::Name(n), Symbol::NameLast) => n.last.clone(),
                _ => None,
            };
            if let Some(v) = v {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Per-symbol scores of one profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolScores {
    pub postcode: ItemScore,
    pub dob: ItemScore,
    pub name_full: ItemScore,
    pub name_first: ItemScore,
    pub name_last: ItemScore,
}

impl SymbolScores {
    pub fn get(&self, sym: Symbol) -> ItemScore {
        match sym {
            Symbol::Postcode => self.postcode,
            Symbol::Dob => self.dob,
            Symbol::NameFull => self.name_full,
            Symbol::NameFirst => self.name_first,
            Symbol::NameLast => self.name_last,
        }
    }

    pub fn get_mut(&mut self, sym: Symbol) -> &mut ItemScore {
        match sym {
            Symbol::Postcode => &mut self.postcode,
            Symbol::Dob => &mut self.dob,
            Symbol::NameFull => &mut self.name_full,
            Symbol::NameFirst => &mut self.name_first,
            Symbol::NameLast => &mut self.name_last,
        }
    }

    /// Keeps the maximum of the stored and the new score.
    pub fn update(&mut self, sym: Symbol, score: ItemScore) {
        let slot = self.get_mut(sym);
        *slot = slot.max(score);
    }
}

/// AND(postcode, dob, OR(full, AND(first, last))) with undefined scores substituted.
pub fn profile_score(scores: &SymbolScores, policy: UndefinedPolicy, cfg: &FuzzyConfig) -> f64 {
    let r = |s: ItemScore| s.resolve(policy);
    let parts = fuzzy_and(cfg, &[r(scores.name_first), r(scores.name_last)]).expect("two operands in range");
    let name = fuzzy_or(cfg, &[r(scores.name_full), parts]).expect("two operands in range");
    fuzzy_and(cfg, &[r(scores.postcode), r(scores.dob), name]).expect("three operands in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    #[test]
    fn levenshtein_examples() {
        assert_eq!(normalized_levenshtein("AB12CD", "AB12CD"), 1.0);
        assert!((normalized_levenshtein("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < EPS);
        assert_eq!(normalized_levenshtein("a", ""), 0.0);
        assert_eq!(normalized_levenshtein("", ""), 1.0);
        assert_eq!(levenshtein("żółw", "zolw"), 3);
    }

    #[test]
    fn score_item_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = score_item(ScorerModel::Exact, "AB12CD", &["AB12CB", "AB12CD"], &mut rng);
        assert_eq!(s.value(), Some(1.0));
        let s = score_item(ScorerModel::Fuzzy, "JOHN SMITH", &["JON SMITH"], &mut rng);
        assert!((s.value().unwrap() - 0.9).abs() < EPS);
        let empty: [&str; 0] = [];
        assert_eq!(
            score_item(ScorerModel::Exact, "AB12CD", &empty, &mut rng),
            ItemScore::UNDEFINED
        );
        assert_eq!(
            score_item(ScorerModel::Fuzzy, "AB12CD", &empty, &mut rng),
            ItemScore::UNDEFINED
        );
        let r = score_item(ScorerModel::Random, "AB12CD", &empty, &mut rng)
            .value()
            .unwrap();
        assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn operator_examples() {
        assert_eq!(fuzzy_and(&FuzzyConfig::Standard, &[0.5, 1.0]).unwrap(), 0.5);
        let io = FuzzyConfig::InfinityOne { alpha: 0.5 };
        assert!((fuzzy_or(&io, &[0.2, 0.8]).unwrap() - 0.65).abs() < EPS);
        assert!(fuzzy_and(&FuzzyConfig::Standard, &[]).is_err());
        assert!(fuzzy_or(&FuzzyConfig::Standard, &[1.5]).is_err());
        assert_eq!(fuzzy_not(0.25), 0.75);
        assert!(FuzzyConfig::Pnorm { p: 0.5 }.validate().is_err());
        assert!(FuzzyConfig::InfinityOne { alpha: 1.5 }.validate().is_err());
    }

    #[test]
    fn profile_score_examples() {
        let d = |v| ItemScore::defined(v);
        let ones = SymbolScores {
            postcode: d(1.0),
            dob: d(1.0),
            name_full: d(1.0),
            name_first: d(1.0),
            name_last: d(1.0),
        };
        for cfg in [
            FuzzyConfig::Standard,
            FuzzyConfig::Pnorm { p: 3.0 },
            FuzzyConfig::InfinityOne { alpha: 0.3 },
        ] {
            assert!((profile_score(&ones, UndefinedPolicy::AsZero, &cfg) - 1.0).abs() < EPS);
        }
        let s = SymbolScores {
            postcode: d(0.9),
            dob: d(0.8),
            name_full: d(0.5),
            name_first: d(0.95),
            name_last: d(0.7),
        };
        assert!((profile_score(&s, UndefinedPolicy::AsZero, &FuzzyConfig::Standard) - 0.7).abs() < EPS);
        let none = SymbolScores::default();
        assert_eq!(
            profile_score(&none, UndefinedPolicy::AsOne, &FuzzyConfig::Standard),
            1.0
        );
        assert_eq!(
            profile_score(&none, UndefinedPolicy::AsZero, &FuzzyConfig::Standard),
            0.0
        );
    }

    #[test]
    fn exact_is_membership_exhaustive() {
        let alphabet = ["a", "b", "c"];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mask in 1u32..8 {
            let values: Vec<&str> = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| alphabet[i]).collect();
            for claimed in alphabet {
                let want = if values.contains(&claimed) { 1.0 } else { 0.0 };
                let exact = score_item(ScorerModel::Exact, claimed, &values, &mut rng)
                    .value()
                    .unwrap();
                assert_eq!(exact, want);
                let fuzzy = score_item(ScorerModel::Fuzzy, claimed, &values, &mut rng)
                    .value()
                    .unwrap();
                assert!(fuzzy >= exact);
            }
        }
    }

    #[test]
    fn name_symbols_from_parsed_names() {
        use crate::nlu::{Extraction, ItemKind, ParsedName};
        let nlu = NluResult {
            item_kind: ItemKind::Name,
            values: vec![
                Extraction {
                    value: Value::Name(ParsedName::first_only("john")),
                    rank: 0,
                },
                Extraction {
                    value: Value::Name(ParsedName {
                        first: Some("jon".into()),
                        last: Some("smith".into()),
                        full: None,
                    }),
                    rank: 1,
                },
            ],
        };
        assert_eq!(Symbol::NameFirst.values(&nlu), ["john", "jon"]);
        assert_eq!(Symbol::NameLast.values(&nlu), ["smith"]);
        assert_eq!(Symbol::NameFull.values(&nlu), ["jon smith"]);
        assert!(Symbol::Postcode.values(&nlu).is_empty());
    }

    fn unit() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
    }

    proptest! {
        #[test]
        fn operators_commute_and_stay_in_range(
            xs in prop::collection::vec(unit(), 1..6),
            alpha in 0.0..=1.0f64,
            p in 1.0..50.0f64,
        ) {
            let mut rev = xs.clone();
            rev.reverse();
            for cfg in [FuzzyConfig::Standard, FuzzyConfig::Pnorm { p }, FuzzyConfig::InfinityOne { alpha }] {
                for op in [fuzzy_and, fuzzy_or] {
                    let a = op(&cfg, &xs).unwrap();
                    prop_assert!((0.0..=1.0).contains(&a));
                    prop_assert!((a - op(&cfg, &rev).unwrap()).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn operators_are_monotone(
            xs in prop::collection::vec(unit(), 1..5),
            idx in 0usize..5,
            bump in 0.0..=1.0f64,
            alpha in 0.0..=1.0f64,
            p in 1.0..50.0f64,
        ) {
            let i = idx % xs.len();
            let mut ys = xs.clone();
            ys[i] = (ys[i] + bump).min(1.0);
            for cfg in [FuzzyConfig::Standard, FuzzyConfig::Pnorm { p }, FuzzyConfig::InfinityOne { alpha }] {
                prop_assert!(fuzzy_and(&cfg, &ys).unwrap() >= fuzzy_and(&cfg, &xs).unwrap() - 1e-9);
                prop_assert!(fuzzy_or(&cfg, &ys).unwrap() >= fuzzy_or(&cfg, &xs).unwrap() - 1e-9);
            }
        }

        #[test]
        fn upper_policy_bounds_lower_policy(
            vals in prop::collection::vec(prop::option::of(unit()), 5),
            alpha in 0.0..=1.0f64,
        ) {
            let mut s = SymbolScores::default();
            for (sym, v) in Symbol::ALL.iter().zip(&vals) {
                *s.get_mut(*sym) = ItemScore::from(*v);
            }
            let cfg = FuzzyConfig::InfinityOne { alpha };
            prop_assert!(
                profile_score(&s, UndefinedPolicy::AsOne, &cfg) >= profile_score(&s, UndefinedPolicy::AsZero, &cfg)
            );
        }

        #[test]
        fn item_score_max_keeps_defined(a in prop::option::of(unit()), b in prop::option::of(unit())) {
            let m = ItemScore::from(a).max(ItemScore::from(b));
            prop_assert_eq!(m.is_defined(), a.is_some() || b.is_some());
            if let (Some(x), Some(y)) = (a, b) {
                prop_assert_eq!(m.value(), Some(x.max(y)));
            }
        }
    }
}
