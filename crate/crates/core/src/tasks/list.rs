use serde::{Deserialize, Serialize};

use super::text::fold_width;
use super::TaskError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListItem {
    pub index: u32,
    pub text: String,
    pub blank: bool,
}

/// Numbered items from a Step-1, Step-3 or Step-4 answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemList {
    pub items: Vec<ListItem>,
    pub max_items: usize,
    /// More markers than `max_items`. All items are still returned.
    pub overflow: bool,
    /// Marker numbers are not exactly 1, 2, 3, ...
    pub non_contiguous: bool,
}

impl ItemList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Blank responses. With `mandated` (a fixed-count step) missing items count too.
    pub fn blank_count(&self, mandated: Option<usize>) -> usize {
        let empty = self.items.iter().filter(|i| i.blank).count();
        empty + mandated.map_or(0, |n| n.saturating_sub(self.items.len()))
    }

    pub fn texts(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.text.as_str()).collect()
    }

    /// Canonical `k. text` rendering; parses back to the same list.
    pub fn to_text(&self) -> String {
        self.items
            .iter()
            .map(|i| {
                if i.text.is_empty() {
                    format!("{}.", i.index)
                } else {
                    format!("{}. {}", i.index, i.text)
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Splits a line into (number, body) if it opens with a list marker.
fn marker(line: &str) -> Option<(u32, &str)> {
    let trimmed = line.trim_start();
    let trimmed = trimmed
        .strip_prefix("- ")
        .or_else(|| trimmed.strip_prefix("* "))
        .unwrap_or(trimmed)
        .trim_start_matches(['*', '#', ' ']);
    let digits = trimmed.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 3 {
        return None;
    }
    let (number, rest) = trimmed.split_at(digits);
    let rest = rest.trim_start_matches('*');
    let mut chars = rest.chars();
    match chars.next() {
        Some('.' | ')' | ':' | ',') => {}
        _ => return None,
    }
    let body = chars.as_str();
    if !(body.is_empty() || body.starts_with(char::is_whitespace) || body.starts_with('*')) {
        return None;
    }
    let body = body.trim_start_matches('*').trim();
    Some((number.parse().ok()?, body))
}

/// Extracts items opened by `k.` markers; continuation lines join the open item.
pub fn parse_numbered_list(text: &str, max_items: usize) -> Result<ItemList, TaskError> {
    if max_items == 0 {
        return Err(TaskError::InvalidArgument("max_items must be at least 1".into()));
    }
    let folded = fold_width(text);
    let mut items: Vec<ListItem> = Vec::new();
    for line in folded.lines() {
        if let Some((index, body)) = marker(line) {
            items.push(ListItem {
                index,
                text: body.to_string(),
                blank: false,
            });
        } else if let Some(open) = items.last_mut() {
            let extra = line.trim();
            if !extra.is_empty() {
                if !open.text.is_empty() {
                    open.text.push(' ');
                }
                open.text.push_str(extra);
            }
        }
    }
    if items.is_empty() {
        return Err(TaskError::NoItemsFound);
    }
    for item in &mut items {
        item.blank = item.text.trim().is_empty();
    }
    let non_contiguous = items.iter().enumerate().any(|(i, item)| item.index as usize != i + 1);
    Ok(ItemList {
        overflow: items.len() > max_items,
        non_contiguous,
        max_items,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal() {
        let list = parse_numbered_list("1. foo\n2. bar", 8).unwrap();
        assert_eq!(list.texts(), ["foo", "bar"]);
        assert_eq!(list.blank_count(None), 0);
        assert!(!list.overflow && !list.non_contiguous);
    }

    #[test]
    fn blank_item() {
        let list = parse_numbered_list("1. \n2. x", 8).unwrap();
        assert!(list.items[0].blank);
        assert!(!list.items[1].blank);
        assert_eq!(list.blank_count(None), 1);
        assert_eq!(list.blank_count(Some(5)), 4);
    }

    #[test]
    fn full_width_and_decorations() {
        let list = parse_numbered_list("Intro line\n１． 甲\n**2.** 乙\n 3） 丙\ncontinued", 8).unwrap();
        assert_eq!(list.texts(), ["甲", "乙", "丙 continued"]);
    }

    #[test]
    fn overflow_keeps_items() {
        let text = (1..=9).map(|i| format!("{i}. x{i}")).collect::<Vec<_>>().join("\n");
        let list = parse_numbered_list(&text, 8).unwrap();
        assert!(list.overflow);
        assert_eq!(list.len(), 9);
    }

    #[test]
    fn not_markers() {
        assert!(matches!(
            parse_numbered_list("1.5 million tons\n2035 was hard", 8),
            Err(TaskError::NoItemsFound)
        ));
        assert!(parse_numbered_list("x", 0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_fixpoint(bodies in prop::collection::vec("[a-z][a-z ]{0,20}[a-z]|", 1..10)) {
            let text = bodies
                .iter()
                .enumerate()
                .map(|(i, b)| format!("{}. {}", i + 1, b))
                .collect::<Vec<_>>()
                .join("\n");
            let first = parse_numbered_list(&text, 8).unwrap();
            let second = parse_numbered_list(&first.to_text(), 8).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(first.blank_count(None), bodies.iter().filter(|b| b.is_empty()).count());
        }
    }
}
