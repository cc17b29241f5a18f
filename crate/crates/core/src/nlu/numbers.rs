//! Grouping of spoken number words into digit strings.
//!
//! Words combine only when the result is a well-formed cardinal, so
//! "twenty one" becomes `21` while "one two" stays `1 2` and
//! "nineteen eighty nine" becomes `19 89`.

use crate::locale::LocaleResources;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NumWord {
    Unit(u32),
    Teen(u32),
    Ten(u32),
    Hundreds(u32),
    Thousands(u32),
    HundredMult,
    ThousandMult,
    Literal(u32),
}

pub(crate) fn classify(res: &LocaleResources, token: &str) -> Option<NumWord> {
    if let Some(&m) = res.multipliers.get(token) {
        return Some(match m {
            100 => NumWord::HundredMult,
            1000 => NumWord::ThousandMult,
            other => NumWord::Literal(other),
        });
    }
    let v = *res.numbers.get(token)?;
    Some(match v {
        0..=9 => NumWord::Unit(v),
        10..=19 => NumWord::Teen(v),
        20..=90 if v % 10 == 0 => NumWord::Ten(v),
        100..=900 if v % 100 == 0 => NumWord::Hundreds(v),
        1000..=9000 if v % 1000 == 0 => NumWord::Thousands(v),
        _ => NumWord::Literal(v),
    })
}

/// Accumulates one cardinal number from successive words.
#[derive(Debug, Clone, Default)]
pub(crate) struct NumberAcc {
    high: Option<u32>,
    hundreds: Option<u32>,
    tens: Option<u32>,
    teen: bool,
    units: Option<u32>,
    closed: Option<u32>,
}

impl NumberAcc {
    pub(crate) fn is_empty(&self) -> bool {
        self.high.is_none()
            && self.hundreds.is_none()
            && self.tens.is_none()
            && self.units.is_none()
            && self.closed.is_none()
    }

    fn low(&self) -> Option<u32> {
        match (self.hundreds, self.tens, self.units) {
            (None, None, None) => None,
            (h, t, u) => Some(h.unwrap_or(0) + t.unwrap_or(0) + u.unwrap_or(0)),
        }
    }

    pub(crate) fn value(&self) -> Option<u32> {
        if let Some(v) = self.closed {
            return Some(v);
        }
        match (self.high, self.low()) {
            (None, None) => None,
            (h, l) => Some(h.unwrap_or(0) + l.unwrap_or(0)),
        }
    }

    /// Tries to extend the number with `word`; false means the word starts a new number.
    pub(crate) fn push(&mut self, word: NumWord, vigesimal: bool) -> bool {
        if self.closed.is_some() {
            return false;
        }
        match word {
            NumWord::Unit(0) | NumWord::Literal(_) => {
                if !self.is_empty() {
                    return false;
                }
                self.closed = Some(match word {
                    NumWord::Literal(v) => v,
                    _ => 0,
                });
                true
            }
            NumWord::Unit(v) => {
                if self.units.is_some() {
                    return false;
                }
                if self.teen {
                    // dix-sept, soixante-dix-neuf
                    let tens = self.tens.unwrap_or(0);
                    if vigesimal && tens % 10 == 0 && v >= 7 {
                        self.units = Some(v);
                        return true;
                    }
                    return false;
                }
                self.units = Some(v);
                true
            }
            NumWord::Teen(v) => {
                if self.units.is_some() {
                    return false;
                }
                match self.tens {
                    None => {
                        self.tens = Some(v);
                        self.teen = true;
                        true
                    }
                    // soixante-dix, quatre-vingt-douze
                    Some(t @ (60 | 80)) if vigesimal && !self.teen => {
                        self.tens = Some(t + v);
                        self.teen = true;
                        true
                    }
                    Some(_) => false,
                }
            }
            NumWord::Ten(v) => {
                // quatre-vingt(s)
                if vigesimal && v == 20 && self.units == Some(4) && self.tens.is_none() {
                    self.units = None;
                    self.tens = Some(80);
                    return true;
                }
                if self.tens.is_some() || self.units.is_some() {
                    return false;
                }
                self.tens = Some(v);
                true
            }
            NumWord::Hundreds(v) => {
                if self.hundreds.is_some() || self.tens.is_some() || self.units.is_some() {
                    return false;
                }
                self.hundreds = Some(v);
                true
            }
            NumWord::HundredMult => {
                if self.hundreds.is_some() {
                    return false;
                }
                let m = self.tens.unwrap_or(0) + self.units.unwrap_or(0);
                let m = if m == 0 { 1 } else { m };
                self.hundreds = Some(m * 100);
                self.tens = None;
                self.units = None;
                self.teen = false;
                true
            }
            NumWord::ThousandMult => {
                if self.high.is_some() {
                    return false;
                }
                let m = self.low().filter(|&l| l > 0).unwrap_or(1);
                self.high = Some(m * 1000);
                self.hundreds = None;
                self.tens = None;
                self.units = None;
                self.teen = false;
                true
            }
            NumWord::Thousands(v) => {
                if self.high.is_some() || self.low().is_some() {
                    return false;
                }
                self.high = Some(v);
                true
            }
        }
    }
}

/// Replaces runs of number words with digit strings.
pub(crate) fn group_numbers(res: &LocaleResources, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut acc = NumberAcc::default();
    let flush = |acc: &mut NumberAcc, out: &mut Vec<String>| {
        if let Some(v) = acc.value() {
            out.push(v.to_string());
        }
        *acc = NumberAcc::default();
    };
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        if let Some(word) = classify(res, tok) {
            if !acc.push(word, res.vigesimal) {
                flush(&mut acc, &mut out);
                let accepted = acc.push(word, res.vigesimal);
                debug_assert!(accepted);
            }
            i += 1;
            continue;
        }
        // "hundred and five", "vingt et un": the connector is dropped only
        // when the following word extends the current number.
        if !acc.is_empty() && res.number_connectors.contains(tok.as_str()) {
            if let Some(next) = tokens.get(i + 1).and_then(|t| classify(res, t)) {
                let mut probe = acc.clone();
                if probe.push(next, res.vigesimal) {
                    i += 1;
                    continue;
                }
            }
        }
        flush(&mut acc, &mut out);
        out.push(tok.clone());
        i += 1;
    }
    flush(&mut acc, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locale::{Locale, LocaleResources};

    fn run(locale: Locale, text: &str) -> String {
        let res = LocaleResources::builtin(locale);
        let toks: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        group_numbers(&res, &toks).join(" ")
    }

    #[test]
    fn english_grouping() {
        assert_eq!(run(Locale::EnGb, "a b one two c d"), "a b 1 2 c d");
        assert_eq!(run(Locale::EnGb, "twenty one"), "21");
        assert_eq!(run(Locale::EnGb, "nineteen eighty nine"), "19 89");
        assert_eq!(run(Locale::EnGb, "two thousand and five"), "2005");
        assert_eq!(run(Locale::EnGb, "one hundred and one dalmatians"), "101 dalmatians");
        assert_eq!(run(Locale::EnGb, "the twenty first of may"), "the 21 of may");
        assert_eq!(run(Locale::EnGb, "nineteen hundred"), "1900");
        assert_eq!(run(Locale::EnGb, "zero zero seven"), "0 0 7");
        assert_eq!(run(Locale::EnGb, "salt and pepper"), "salt and pepper");
        assert_eq!(run(Locale::EnGb, "five and"), "5 and");
        assert_eq!(run(Locale::EnGb, "ten one"), "10 1");
        assert_eq!(run(Locale::EnGb, "nine thousand nine hundred and ninety nine"), "9999");
    }

    #[test]
    fn polish_grouping() {
        assert_eq!(
            run(
                Locale::PlPl,
                "pierwszego stycznia tysiąc dziewięćset osiemdziesiątego dziewiątego"
            ),
            "1 stycznia 1989"
        );
        assert_eq!(run(Locale::PlPl, "dwa tysiące piątego"), "2005");
        assert_eq!(run(Locale::PlPl, "dwudziestego trzeciego"), "23");
        assert_eq!(run(Locale::PlPl, "dwutysięcznego roku"), "2000 roku");
        assert_eq!(run(Locale::PlPl, "jeden dwa trzy"), "1 2 3");
    }

    #[test]
    fn french_grouping() {
        assert_eq!(run(Locale::FrFr, "mille neuf cent quatre vingt neuf"), "1989");
        assert_eq!(run(Locale::FrFr, "dix neuf cent soixante dix sept"), "1977");
        assert_eq!(run(Locale::FrFr, "vingt et un"), "21");
        assert_eq!(run(Locale::FrFr, "quatre vingt dix neuf"), "99");
        assert_eq!(run(Locale::FrFr, "soixante quinze zéro zéro un"), "75 0 0 1");
        assert_eq!(run(Locale::FrFr, "deux mille"), "2000");
        assert_eq!(run(Locale::FrFr, "premier janvier"), "1 janvier");
    }
}
