//! A small date grammar over preprocessed tokens.
//!
//! Accepted shapes, after dropping filler words:
//! `D M Y`, `M D Y`, `D m Y4` (numeric month), `d/m/yyyy` and `yyyy-mm-dd`.
//! A year is one four-digit token or two tokens such as `19 89` or `20 0 5`.

use chrono::NaiveDate;
use regex::Regex;
use std::sync::OnceLock;

use crate::locale::LocaleResources;

use super::NluMode;

fn is_digits(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
}

/// Day of month from "21", "21st" or "1er".
fn day(res: &LocaleResources, tok: &str) -> Option<u32> {
    let n = tok.bytes().take_while(u8::is_ascii_digit).count();
    if n == 0 || n > 2 {
        return None;
    }
    let suffix = &tok[n..];
    if !suffix.is_empty() && !res.ordinal_suffixes.iter().any(|s| s == suffix) {
        return None;
    }
    tok[..n].parse().ok().filter(|d| (1..=31).contains(d))
}

fn numeric_month(tok: &str) -> Option<u32> {
    if !is_digits(tok) || tok.len() > 2 {
        return None;
    }
    tok.parse().ok().filter(|m| (1..=12).contains(m))
}

fn year(tokens: &[String]) -> Option<i32> {
    match tokens {
        [y] if y.len() == 4 && is_digits(y) => y.parse().ok(),
        [a, b] if a.len() == 2 && b.len() == 2 && is_digits(a) && is_digits(b) => {
            let (a, b): (i32, i32) = (a.parse().ok()?, b.parse().ok()?);
            (10..=29).contains(&a).then_some(a * 100 + b)
        }
        [a, z, b] if a.len() == 2 && z == "0" && b.len() == 1 && is_digits(a) && is_digits(b) => {
            let (a, b): (i32, i32) = (a.parse().ok()?, b.parse().ok()?);
            (10..=29).contains(&a).then_some(a * 100 + b)
        }
        _ => None,
    }
}

fn single_token(tok: &str) -> Option<NaiveDate> {
    static DMY: OnceLock<Regex> = OnceLock::new();
    static ISO: OnceLock<Regex> = OnceLock::new();
    let dmy = DMY.get_or_init(|| Regex::new(r"^(\d{1,2})([/.\-])(\d{1,2})([/.\-])(\d{4})$").unwrap());
    let iso = ISO.get_or_init(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
    if let Some(c) = iso.captures(tok) {
        return NaiveDate::from_ymd_opt(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?);
    }
    let c = dmy.captures(tok)?;
    if c[2] != c[4] {
        return None;
    }
    NaiveDate::from_ymd_opt(c[5].parse().ok()?, c[3].parse().ok()?, c[1].parse().ok()?)
}

/// Parses a whole token span as one date.
fn parse(res: &LocaleResources, span: &[String]) -> Option<NaiveDate> {
    let mut toks: Vec<String> = span
        .iter()
        .filter(|t| !res.date_fillers.contains(*t))
        .cloned()
        .collect();
    while toks.last().is_some_and(|t| res.year_suffixes.contains(t)) {
        toks.pop();
    }
    match toks.as_slice() {
        [] => None,
        [one] => single_token(one),
        [a, b, rest @ ..] => {
            let y = year(rest)?;
            let (d, m) = if let Some(m) = res.month(b) {
                (day(res, a)?, m)
            } else if let Some(m) = res.month(a) {
                (day(res, b)?, m)
            } else if rest.len() == 1 {
                (day(res, a)?, numeric_month(b)?)
            } else {
                return None;
            };
            NaiveDate::from_ymd_opt(y, m, d)
        }
    }
}

pub(crate) fn extract(res: &LocaleResources, tokens: &[String], mode: NluMode) -> Vec<NaiveDate> {
    match mode {
        NluMode::Cautious => parse(res, tokens).into_iter().collect(),
        NluMode::Seeking => {
            let mut out = Vec::new();
            for start in 0..tokens.len() {
                if res.date_fillers.contains(&tokens[start]) {
                    continue;
                }
                let found = (start + 1..=tokens.len())
                    .rev()
                    .find_map(|end| parse(res, &tokens[start..end]));
                if let Some(d) = found {
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
            }
            out
        }
    }
}
