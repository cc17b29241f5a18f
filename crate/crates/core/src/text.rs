//! Canonical string forms shared by the knowledge base, the NLU and the scorers.

use unicode_normalization::UnicodeNormalization;

/// Canonical postcode: uppercase with all whitespace and hyphens removed.
pub fn canonical_postcode(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace() && *c != '-')
        .flat_map(char::to_uppercase)
        .collect()
}

/// Canonical name: NFC, lowercased, single-spaced. Diacritics are kept.
pub fn canonical_name(raw: &str) -> String {
    let folded: String = raw.nfc().flat_map(char::to_lowercase).collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased NFC form used for table lookups (months, number words, aliases).
pub(crate) fn fold(raw: &str) -> String {
    raw.nfc().flat_map(char::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn postcode_drops_spaces_and_hyphens() {
        assert_eq!(canonical_postcode("ab1 2cd"), "AB12CD");
        assert_eq!(canonical_postcode("12-345"), "12345");
        assert_eq!(canonical_postcode(" sw1a\t1aa "), "SW1A1AA");
    }

    #[test]
    fn name_is_nfc_lowercase() {
        // decomposed "Ż" + "ó" sequences collapse to the composed forms
        let decomposed = "Z\u{307}ane\u{301}ta  Ko\u{301}s";
        assert_eq!(canonical_name(decomposed), "żanéta kós");
        assert_eq!(canonical_name("John  SMITH"), "john smith");
        assert_eq!(canonical_name("O'Brien"), "o'brien");
    }
}
