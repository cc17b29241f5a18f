use crate::locale::LocaleResources;
use crate::text::canonical_postcode;

use super::NluMode;

/// Canonical postcodes found in one preprocessed hypothesis.
pub(crate) fn extract(res: &LocaleResources, tokens: &[String], mode: NluMode) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    match mode {
        NluMode::Cautious => {
            let joined = canonical_postcode(&tokens.concat());
            if res.is_postcode(&joined) {
                out.push(joined);
            }
        }
        NluMode::Seeking => {
            let max_len = res.postcode_max_len();
            for start in 0..tokens.len() {
                let mut span = String::new();
                for tok in &tokens[start..] {
                    span.push_str(&canonical_postcode(tok));
                    if span.chars().count() > max_len {
                        break;
                    }
                    if res.is_postcode(&span) && !out.contains(&span) {
                        out.push(span.clone());
                    }
                }
            }
        }
    }
    out
}
