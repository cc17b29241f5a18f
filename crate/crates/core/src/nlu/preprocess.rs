//! Spoken-form normalization: tokenization, number words, letter spellings.

use crate::locale::LocaleResources;
use crate::text::fold;

use super::numbers::{classify, group_numbers};

const MAX_PASSES: usize = 8;

/// Lowercase preprocessed tokens of `hypothesis`.
pub(crate) fn preprocess_tokens(res: &LocaleResources, hypothesis: &str) -> Vec<String> {
    let mut tokens = tokenize(res, hypothesis);
    for _ in 0..MAX_PASSES {
        let next = pass(res, &tokens);
        if next == tokens {
            break;
        }
        tokens = next;
    }
    tokens
}

fn tokenize(res: &LocaleResources, text: &str) -> Vec<String> {
    let folded = fold(text);
    let mut out = Vec::new();
    for raw in folded.split(|c: char| c.is_whitespace() || ",;:!?\"()[]{}<>«»".contains(c)) {
        let tok = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if tok.is_empty() {
            continue;
        }
        if tok.contains('-') && !res.spelling.contains_key(tok) {
            let parts: Vec<&str> = tok.split('-').filter(|p| !p.is_empty()).collect();
            let numeric = parts
                .iter()
                .all(|p| classify(res, p).is_some() || res.number_connectors.contains(*p));
            if parts.len() > 1 && numeric {
                out.extend(parts.iter().map(|p| p.to_string()));
                continue;
            }
        }
        out.push(tok.to_string());
    }
    out
}

fn pass(res: &LocaleResources, tokens: &[String]) -> Vec<String> {
    let tokens = group_numbers(res, tokens);
    let tokens = collapse_aliases(res, &tokens);
    spell_out(res, &tokens)
}

fn single_letter(tok: &str) -> Option<char> {
    let mut chars = tok.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_alphabetic() => Some(c),
        _ => None,
    }
}

/// "b for bravo", "b jak barbara", "b comme bernard" → "b".
fn collapse_aliases(res: &LocaleResources, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'outer: while i < tokens.len() {
        if let Some(letter) = single_letter(&tokens[i]) {
            for conn in &res.spell_connectors {
                let end = i + 1 + conn.len();
                if end < tokens.len()
                    && tokens[i + 1..end].iter().zip(conn).all(|(t, c)| t == c)
                    && tokens[end].starts_with(letter)
                {
                    out.push(tokens[i].clone());
                    i = end + 1;
                    continue 'outer;
                }
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    out
}

/// Converts spelling-alphabet words that sit next to other spelled material.
fn spell_out(res: &LocaleResources, tokens: &[String]) -> Vec<String> {
    let letterish = |t: &str| single_letter(t).is_some() || res.spelling.contains_key(t);
    let spellish = |t: &str| letterish(t) || (!t.is_empty() && t.chars().all(|c| c.is_ascii_digit()));
    tokens
        .iter()
        .enumerate()
        .map(|(i, tok)| {
            let Some(&letter) = res.spelling.get(tok.as_str()) else {
                return tok.clone();
            };
            let prev = i.checked_sub(1).map(|j| tokens[j].as_str());
            let next = tokens.get(i + 1).map(String::as_str);
            // month names ("november") only convert next to letters, not digits
            let ok: &dyn Fn(&str) -> bool = if res.month(tok).is_some() {
                &letterish
            } else {
                &spellish
            };
            if prev.is_some_and(ok) || next.is_some_and(ok) {
                letter.to_lowercase().to_string()
            } else {
                tok.clone()
            }
        })
        .collect()
}
