use crate::locale::{Lexicon, LocaleResources};

use super::{NluMode, ParsedName};

#[derive(Debug, Clone)]
struct Segment {
    text: String,
    start: usize,
    end: usize,
    first: bool,
    last: bool,
}

/// Joins runs of two or more single letters: "j o h n" → "john", "d e o l i v e i r a" → "de oliveira".
fn join_letter_runs(lexicon: &Lexicon, tokens: &[String]) -> Vec<String> {
    let is_letter = |t: &String| t.chars().count() == 1 && t.chars().all(char::is_alphabetic);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut j = i;
        while j < tokens.len() && is_letter(&tokens[j]) {
            j += 1;
        }
        if j - i >= 2 {
            let run = tokens[i..j].concat();
            match lexicon.spelled(&run) {
                Some(entry) => out.extend(entry.split(' ').map(str::to_string)),
                None => out.push(run),
            }
            i = j;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Greedy longest-match segmentation into lexicon entries. Gaps are skipped.
fn segment(lexicon: &Lexicon, tokens: &[String]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < tokens.len() {
        let longest = lexicon.max_tokens().min(tokens.len() - i);
        for k in (1..=longest).rev() {
            let text = tokens[i..i + k].join(" ");
            let first = lexicon.is_first(&text);
            let last = lexicon.is_last(&text);
            if first || last {
                out.push(Segment {
                    text,
                    start: i,
                    end: i + k,
                    first,
                    last,
                });
                i += k;
                continue 'outer;
            }
        }
        i += 1;
    }
    out
}

/// The reading of a hypothesis made only of lexicon entries.
fn whole(segments: &[Segment], n_tokens: usize) -> Option<ParsedName> {
    let covered: usize = segments.iter().map(|s| s.end - s.start).sum();
    if segments.is_empty() || covered != n_tokens {
        return None;
    }
    if let [only] = segments {
        return Some(if only.first {
            ParsedName::first_only(&only.text)
        } else {
            ParsedName::last_only(&only.text)
        });
    }
    let first = &segments[0].text;
    let last = &segments[segments.len() - 1].text;
    let full = segments.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
    Some(ParsedName {
        first: Some(first.clone()),
        last: Some(last.clone()),
        full: Some(full),
    })
}

pub(crate) fn extract(res: &LocaleResources, tokens: &[String], mode: NluMode) -> Vec<ParsedName> {
    let tokens: Vec<String> = join_letter_runs(&res.lexicon, tokens);
    let segments = segment(&res.lexicon, &tokens);
    let whole = whole(&segments, tokens.len());
    match mode {
        NluMode::Cautious => whole.into_iter().collect(),
        NluMode::Seeking => {
            let mut out: Vec<ParsedName> = Vec::new();
            let mut push = |n: ParsedName| {
                if !out.contains(&n) {
                    out.push(n);
                }
            };
            if let Some(w) = whole {
                push(w);
            }
            for (i, seg) in segments.iter().enumerate() {
                if let Some(next) = segments.get(i + 1) {
                    if seg.first && next.last && seg.end == next.start {
                        push(ParsedName::pair(&seg.text, &next.text));
                    }
                }
                if seg.first {
                    push(ParsedName::first_only(&seg.text));
                }
                if seg.last {
                    push(ParsedName::last_only(&seg.text));
                }
            }
            out
        }
    }
}
