//! Normalization shared by the step-output parsers.

/// Folds full-width ASCII variants (digits, punctuation, pipes, spaces) to ASCII.
pub fn fold_width(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
            '\u{3000}' => ' ',
            '、' => ',',
            '。' => '.',
            c => c,
        })
        .collect()
}

/// Strips markdown emphasis and list decoration around a fragment.
pub fn strip_emphasis(text: &str) -> &str {
    text.trim().trim_matches(|c| c == '*' || c == '_').trim()
}

/// First run of ASCII digits in `text`, if any.
pub fn first_integer(text: &str) -> Option<u32> {
    let start = text.find(|c: char| c.is_ascii_digit())?;
    let digits: String = text[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_full_width() {
        assert_eq!(fold_width("１．ｆｏｏ｜２"), "1.foo|2");
        assert_eq!(fold_width("1、x"), "1,x");
    }

    #[test]
    fn integers() {
        assert_eq!(first_integer("**12**"), Some(12));
        assert_eq!(first_integer("none"), None);
    }
}
