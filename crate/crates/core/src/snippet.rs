use serde::{Deserialize, Serialize};

/// A unit of subject-language source with a label for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSnippet {
    pub origin: String,
    pub text: String,
    pub line_count: usize,
}

impl SourceSnippet {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let line_count = countable_lines(&text).len();
        SourceSnippet { origin: origin.into(), text, line_count }
    }

    /// 1-based numbers of the non-empty, non-comment lines.
    pub fn countable_lines(&self) -> Vec<usize> {
        countable_lines(&self.text)
    }

    /// Physical line `n` (1-based) without its terminator.
    pub fn line(&self, n: usize) -> Option<&str> {
        if n == 0 {
            return None;
        }
        split_lines(&self.text).nth(n - 1)
    }
}

/// Splits on `\n`, `\r\n` and `\r`, the same terminators the tokenizer accepts.
pub fn split_lines(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = Some(text);
    std::iter::from_fn(move || {
        let s = rest?;
        if s.is_empty() {
            rest = None;
            return None;
        }
        match s.find(['\n', '\r']) {
            Some(i) => {
                let skip = if s[i..].starts_with("\r\n") { 2 } else { 1 };
                rest = Some(&s[i + skip..]);
                Some(&s[..i])
            }
            None => {
                rest = None;
                Some(s)
            }
        }
    })
}

pub fn countable_lines(text: &str) -> Vec<usize> {
    split_lines(text)
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim_start_matches('\u{feff}').trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, _)| i + 1)
        .collect()
}
