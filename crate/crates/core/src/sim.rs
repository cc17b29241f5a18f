//! Synthetic dialogue transcripts with noisy n-best lists.
//!
//! Stands in for recorded data when the EVI dataset is not available: each
//! dialogue impersonates a KB profile, and every turn carries a few
//! hypotheses rendered in the spoken styles the NLU handles (plain,
//! letter-by-letter, spelling alphabet, carrier phrases), with character
//! substitutions and failed turns mixed in.

use chrono::Datelike;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueTranscript;
use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, Profile};
use crate::locale::{Locale, LocaleResources};
use crate::nlu::{ItemKind, Turn, MAX_NBEST, TURNS_PER_ITEM};
use crate::rng::keyed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_dialogues: usize,
    pub seed: u64,
    /// Maximum hypotheses per turn.
    pub nbest: usize,
    /// Chance a turn carries no usable value.
    pub p_fail: f64,
    /// Chance a hypothesis has one substituted character; grows with rank.
    pub p_noise: f64,
    /// Chance a value is wrapped in a carrier phrase.
    pub p_carrier: f64,
    /// Chance a postcode or name is spelled out.
    pub p_spell: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            n_dialogues: 500,
            seed: 0,
            nbest: 5,
            p_fail: 0.15,
            p_noise: 0.25,
            p_carrier: 0.3,
            p_spell: 0.2,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nbest == 0 || self.nbest > MAX_NBEST {
            return Err(Error::Config(format!("nbest must be in 1..={MAX_NBEST}")));
        }
        for (name, p) in [
            ("p_fail", self.p_fail),
            ("p_noise", self.p_noise),
            ("p_carrier", self.p_carrier),
            ("p_spell", self.p_spell),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

struct Style {
    digits: [&'static str; 10],
    carriers: [&'static [&'static str]; 3],
    failures: &'static [&'static str],
}

const EN: Style = Style {
    digits: [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    ],
    carriers: [
        &["my postcode is", "it's"],
        &["my name is", "it's", "this is"],
        &["i was born on", "it's"],
    ],
    failures: &["sorry can you repeat that", "hang on", "um", "i'm not sure"],
};

const PL: Style = Style {
    digits: [
        "zero",
        "jeden",
        "dwa",
        "trzy",
        "cztery",
        "pięć",
        "sześć",
        "siedem",
        "osiem",
        "dziewięć",
    ],
    carriers: [
        &["mój kod to", "to jest"],
        &["nazywam się", "to jest"],
        &["urodziłem się", "to jest"],
    ],
    failures: &["przepraszam możesz powtórzyć", "chwileczkę", "yyy", "nie wiem"],
};

const FR: Style = Style {
    digits: [
        "zéro", "un", "deux", "trois", "quatre", "cinq", "six", "sept", "huit", "neuf",
    ],
    carriers: [
        &["mon code postal est", "c'est"],
        &["je m'appelle", "c'est"],
        &["je suis né le", "c'est"],
    ],
    failures: &["pardon pouvez-vous répéter", "euh", "attendez", "je ne sais pas"],
};

fn style(locale: Locale) -> &'static Style {
    match locale {
        Locale::EnGb => &EN,
        Locale::PlPl => &PL,
        Locale::FrFr => &FR,
    }
}

struct Renderer<'a> {
    res: &'a LocaleResources,
    style: &'static Style,
    spec: &'a SimSpec,
    /// Spelling-alphabet word per letter.
    nato: Vec<(char, String)>,
    /// Longest month name per month.
    months: Vec<String>,
}

impl<'a> Renderer<'a> {
    fn new(res: &'a LocaleResources, spec: &'a SimSpec) -> Self {
        // "november 4" reads as a date
        let mut nato: Vec<(char, String)> = res
            .spelling
            .iter()
            .filter(|(w, _)| res.month(w).is_none())
            .map(|(w, c)| (*c, w.clone()))
            .collect();
        nato.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.len().cmp(&a.1.len())).then(a.1.cmp(&b.1)));
        nato.dedup_by_key(|(c, _)| *c);
        let months = (1..=12)
            .map(|m| {
                let mut names: Vec<&String> = res.months.iter().filter(|(_, &v)| v == m).map(|(k, _)| k).collect();
                names.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
                names.first().map(|s| s.to_string()).unwrap_or_else(|| m.to_string())
            })
            .collect();
        Renderer {
            res,
            style: style(res.locale),
            spec,
            nato,
            months,
        }
    }

    fn spell_char(&self, c: char, rng: &mut ChaCha8Rng) -> String {
        if let Some(d) = c.to_digit(10) {
            return if rng.gen_bool(0.5) {
                self.style.digits[d as usize].to_string()
            } else {
                c.to_string()
            };
        }
        let upper = c.to_uppercase().next().unwrap_or(c);
        match self.nato.iter().find(|(l, _)| *l == upper) {
            Some((_, word)) if rng.gen_bool(0.5) => word.clone(),
            _ => c.to_lowercase().to_string(),
        }
    }

    fn postcode(&self, pc: &str, rng: &mut ChaCha8Rng) -> String {
        if rng.gen_bool(self.spec.p_spell) {
            return pc
                .chars()
                .map(|c| self.spell_char(c, rng))
                .collect::<Vec<_>>()
                .join(" ");
        }
        let split = match self.res.locale {
            Locale::EnGb => pc.len().saturating_sub(3),
            Locale::PlPl => 2,
            Locale::FrFr => 0,
        };
        let sep = if self.res.locale == Locale::PlPl { "-" } else { " " };
        if split == 0 || split >= pc.len() {
            pc.to_string()
        } else {
            format!("{}{sep}{}", &pc[..split], &pc[split..])
        }
    }

    fn name(&self, p: &Profile, rng: &mut ChaCha8Rng) -> String {
        if rng.gen_bool(self.spec.p_spell) {
            let spelled: Vec<String> = p
                .name_last
                .chars()
                .filter(|c| c.is_alphabetic())
                .map(|c| c.to_string())
                .collect();
            return format!("{} {}", p.name_first, spelled.join(" "));
        }
        format!("{} {}", p.name_first, p.name_last)
    }

    fn dob(&self, p: &Profile, rng: &mut ChaCha8Rng) -> String {
        let d = p.dob;
        match rng.gen_range(0..3) {
            0 => format!("{}/{}/{}", d.day(), d.month(), d.year()),
            1 => format!("{} {} {}", d.day(), self.months[d.month0() as usize], d.year()),
            _ => d.format("%Y-%m-%d").to_string(),
        }
    }

    fn corrupt(&self, text: &str, rng: &mut ChaCha8Rng) -> String {
        let mut chars: Vec<char> = text.chars().collect();
        let slots: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_alphanumeric()).collect();
        if let Some(&i) = slots.choose(rng) {
            chars[i] = if chars[i].is_ascii_digit() {
                char::from(b'0' + rng.gen_range(0..10u8))
            } else {
                let c = char::from(b'a' + rng.gen_range(0..26u8));
                if chars[i].is_uppercase() {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            };
        }
        chars.into_iter().collect()
    }

    fn turn(&self, item: ItemKind, p: &Profile, turn_index: u8, rng: &mut ChaCha8Rng) -> Turn {
        let n = rng.gen_range(1..=self.spec.nbest);
        let failed = rng.gen_bool(self.spec.p_fail);
        let nbest = (0..n)
            .map(|k| {
                if failed {
                    return self.style.failures.choose(rng).unwrap().to_string();
                }
                let value = match item {
                    ItemKind::Postcode => self.postcode(&p.postcode, rng),
                    ItemKind::Name => self.name(p, rng),
                    ItemKind::Dob => self.dob(p, rng),
                };
                let p_noise = (self.spec.p_noise * (1.0 + k as f64 / 2.0)).min(1.0);
                let value = if rng.gen_bool(p_noise) {
                    self.corrupt(&value, rng)
                } else {
                    value
                };
                if rng.gen_bool(self.spec.p_carrier) {
                    let carrier = self.style.carriers[item.index()].choose(rng).unwrap();
                    format!("{carrier} {value}")
                } else {
                    value
                }
            })
            .collect();
        Turn {
            turn_index,
            nbest,
            prompt_variant: None,
        }
    }
}

/// Simulated dialogues impersonating profiles drawn uniformly from `kb`.
pub fn simulate(kb: &KnowledgeBase, res: &LocaleResources, spec: &SimSpec) -> Result<Vec<DialogueTranscript>> {
    spec.validate()?;
    if kb.is_empty() {
        return Err(Error::Config(
            "cannot simulate dialogues over an empty knowledge base".into(),
        ));
    }
    if res.locale != kb.locale() {
        return Err(Error::LocaleMismatch {
            dataset: res.locale.to_string(),
            kb: kb.locale().to_string(),
        });
    }
    let r = Renderer::new(res, spec);
    let width = spec.n_dialogues.max(1).to_string().len();
    Ok((0..spec.n_dialogues)
        .map(|i| {
            let id = format!("sim-{}-{i:0width$}", kb.locale());
            let mut rng = keyed_rng(spec.seed, &["sim", &id]);
            let profile = kb.profiles().choose(&mut rng).unwrap();
            let mut turns = Vec::with_capacity(9);
            for item in ItemKind::ALL {
                for attempt in 1..=TURNS_PER_ITEM {
                    turns.push(r.turn(item, profile, item.turn_index(attempt), &mut rng));
                }
            }
            DialogueTranscript {
                dialogue_id: id,
                locale: kb.locale(),
                true_profile_id: profile.profile_id.clone(),
                turns,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{run_enrolment, TurnSelector};
    use crate::kb::{generate_kb, GenerationSpec};
    use crate::nlu::{Nlu, NluMode, Value};

    fn kb(locale: Locale) -> KnowledgeBase {
        generate_kb(&GenerationSpec::for_locale(locale, 200, 50, 1).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_and_well_formed() {
        let kb = kb(Locale::EnGb);
        let res = LocaleResources::builtin(Locale::EnGb);
        let spec = SimSpec {
            n_dialogues: 30,
            ..Default::default()
        };
        let a = simulate(&kb, &res, &spec).unwrap();
        assert_eq!(a, simulate(&kb, &res, &spec).unwrap());
        for d in &a {
            d.validate().unwrap();
            assert_eq!(d.turns.len(), 9);
            assert!(kb.get(&d.true_profile_id).is_some());
        }
        assert!(simulate(&kb, &LocaleResources::builtin(Locale::FrFr), &spec).is_err());
    }

    #[test]
    fn clean_renderings_parse_back() {
        for locale in [Locale::EnGb, Locale::PlPl, Locale::FrFr] {
            let kb = kb(locale);
            let res = LocaleResources::builtin(locale);
            let spec = SimSpec {
                n_dialogues: 150,
                seed: 9,
                nbest: 1,
                p_fail: 0.0,
                p_noise: 0.0,
                p_carrier: 0.0,
                p_spell: 0.5,
            };
            let nlu = Nlu::new(res.clone());
            for d in simulate(&kb, &res, &spec).unwrap() {
                let truth = kb.get(&d.true_profile_id).unwrap();
                let out = run_enrolment(&d, &nlu, NluMode::Cautious, TurnSelector::Multi);
                let ctx = format!("{locale} {:?}", d.turns.iter().map(|t| &t.nbest[0]).collect::<Vec<_>>());
                assert_eq!(out.turns, [1, 1, 1], "{ctx}");
                assert_eq!(out.postcode.as_deref(), Some(truth.postcode.as_str()), "{ctx}");
                assert_eq!(out.dob, Some(truth.dob), "{ctx}");
                let name = nlu.extract(&d.turns[3], NluMode::Seeking);
                let full = name.values.iter().any(|e| match &e.value {
                    Value::Name(n) => n.full_or_join().as_deref() == Some(truth.name_full.as_str()),
                    _ => false,
                });
                assert!(full, "{ctx}");
            }
        }
    }
}
