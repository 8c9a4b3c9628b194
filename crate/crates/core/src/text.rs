//! Small text utilities shared by several modules.

use alloc::string::String;
use alloc::vec::Vec;

/// Trailing-whitespace-trimmed lines with trailing blank lines removed.
pub(crate) fn trimmed_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Lowercase, with every run of non-alphanumeric characters collapsed into a
/// single `_` and no leading or trailing `_`.
pub(crate) fn normalize_identifier(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

/// Collapse internal whitespace runs to one space and trim the ends.
pub(crate) fn collapse_whitespace(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Body of the first fenced code block in `text`, if any. The info string
/// after the opening fence (e.g. `python`) is dropped.
pub fn first_code_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_open = &text[open + 3..];
    let body_start = after_open.find('\n')? + 1;
    let body = &after_open[body_start..];
    let close = body.find("```").unwrap_or(body.len());
    Some(body[..close].trim_end_matches([' ', '\t']).trim_end_matches('\n'))
}
