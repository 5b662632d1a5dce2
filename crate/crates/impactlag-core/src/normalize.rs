//! Shared field normalization used by both index construction and query
//! building, so the two sides can never drift apart.

/// Case-folds a string and drops everything but letters and digits.
///
/// `"J. Biol. Chem"` and `"J Biol Chem"` both fold to `"jbiolchem"`.
pub fn fold(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Normalizes a volume or page designator: numeric values lose leading
/// zeros, everything else is case-folded.
pub fn fold_numeric(s: &str) -> String {
    let t = s.trim();
    if !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) {
        let stripped = t.trim_start_matches('0');
        if stripped.is_empty() {
            "0".to_string()
        } else {
            stripped.to_string()
        }
    } else {
        fold(t)
    }
}

/// Author key used by the composite indexes: folded surname plus the
/// author's first initial, lowercased.
pub fn author_key(surname: &str, initials: &str) -> String {
    let mut key = fold(surname);
    if let Some(first) = initials.chars().find(|c| c.is_alphabetic()) {
        key.extend(first.to_lowercase());
    }
    key
}

/// Uppercases initials and strips periods and spaces: `"j.u."` -> `"JU"`.
pub fn fold_initials(initials: &str) -> String {
    initials
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(|c| c.to_uppercase())
        .collect()
}

/// Splits a string into folded alphanumeric tokens (the bag-of-tokens
/// representation used by the full-text index).
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_strips_punctuation_and_case() {
        assert_eq!(fold("J. Biol. Chem"), "jbiolchem");
        assert_eq!(fold("Proc Natl Acad Sci U S A"), "procnatlacadsciusa");
        assert_eq!(fold(""), "");
    }

    #[test]
    fn fold_is_idempotent() {
        for s in ["J. Biol. Chem", "NATURE", "Köhler", "a-b_c 9"] {
            let once = fold(s);
            assert_eq!(fold(&once), once);
        }
    }

    #[test]
    fn numeric_fold_strips_leading_zeros() {
        assert_eq!(fold_numeric("0193"), "193");
        assert_eq!(fold_numeric("193"), "193");
        assert_eq!(fold_numeric("000"), "0");
        assert_eq!(fold_numeric("12A"), "12a");
        assert_eq!(fold_numeric(" 45 "), "45");
    }

    #[test]
    fn author_key_uses_first_initial_only() {
        assert_eq!(author_key("Lowry", "OH"), "lowryo");
        assert_eq!(author_key("Bowie", "J.U."), "bowiej");
        assert_eq!(author_key("Sanger", ""), "sanger");
    }

    #[test]
    fn initials_fold() {
        assert_eq!(fold_initials("j. u."), "JU");
        assert_eq!(fold_initials("OH"), "OH");
    }

    #[test]
    fn token_bag() {
        assert_eq!(
            tokens("Bowie JU, et al. Science 247"),
            vec!["bowie", "ju", "et", "al", "science", "247"]
        );
    }
}
