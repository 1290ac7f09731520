//! Tokenizer for Python 3.10 source text.
//!
//! Produces the same token stream shape as CPython's tokenizer: logical
//! `Newline` tokens, `Indent`/`Dedent` bracketing, implicit line joining
//! inside brackets and explicit joining with a trailing backslash. Comments
//! and blank lines are dropped. Every token carries its byte span in the
//! original text so the rewriter can splice source directly.

use crate::error::ParseError;
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Number,
    String,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.start..self.span.end]
    }
}

/// Operators, longest first so greedy matching picks `**=` over `**`.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "!=", "%=", "&=", "**", "*=", "+=", "-=", "->", "//", "/=",
    ":=", "<<", "<=", "==", ">=", ">>", "@=", "^=", "|=", "(", ")", "[", "]", "{", "}", ",", ":",
    ";", ".", "+", "-", "*", "/", "%", "|", "&", "^", "~", "<", ">", "=", "@",
];

pub struct Tokenizer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    end: usize,
    brackets: Vec<(u8, usize)>,
    indents: Vec<usize>,
    at_line_start: bool,
    /// Fragment mode tokenizes an expression embedded in a larger text
    /// (f-string replacement fields): no indentation, newlines ignored.
    fragment: bool,
    tokens: Vec<Token>,
}

impl<'a> Tokenizer<'a> {
    pub fn new(src: &'a str) -> Self {
        Tokenizer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            end: src.len(),
            brackets: Vec::new(),
            indents: vec![0],
            at_line_start: true,
            fragment: false,
            tokens: Vec::new(),
        }
    }

    /// Tokenizes `src[start..end]` as a bracketed expression fragment.
    pub fn fragment(src: &'a str, start: usize, end: usize) -> Self {
        Tokenizer {
            src,
            bytes: src.as_bytes(),
            pos: start,
            end,
            brackets: Vec::new(),
            indents: vec![0],
            at_line_start: false,
            fragment: true,
            tokens: Vec::new(),
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        // A leading UTF-8 BOM is not part of the program text.
        if !self.fragment && self.src.starts_with('\u{feff}') {
            self.pos = 3;
        }
        loop {
            if self.at_line_start && !self.fragment {
                if self.pos >= self.end {
                    break;
                }
                if !self.handle_indentation()? {
                    continue;
                }
            }
            if !self.next_token()? {
                break;
            }
        }
        self.finish()
    }

    fn finish(mut self) -> Result<Vec<Token>, ParseError> {
        if let Some(&(_, open)) = self.brackets.last() {
            return Err(ParseError::at(self.src, open, "'(' was never closed"));
        }
        let eof = self.end;
        if !self.fragment {
            let needs_newline = matches!(
                self.tokens.last().map(|t| t.kind),
                Some(k) if k != TokenKind::Newline && k != TokenKind::Dedent && k != TokenKind::Indent
            );
            if needs_newline {
                self.push(TokenKind::Newline, eof, eof);
            }
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push(TokenKind::Dedent, eof, eof);
            }
        }
        self.push(TokenKind::EndMarker, eof, eof);
        Ok(self.tokens)
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.tokens.push(Token { kind, span: Span::new(start, end) });
    }

    fn peek(&self, off: usize) -> Option<u8> {
        let i = self.pos + off;
        if i < self.end { Some(self.bytes[i]) } else { None }
    }

    /// Measures indentation at the start of a physical line. Returns false
    /// when the line is blank or comment-only and was skipped.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let mut col = 0usize;
        let line_start = self.pos;
        while let Some(c) = self.peek(0) {
            match c {
                b' ' => col += 1,
                b'\t' => col = (col / 8 + 1) * 8,
                b'\x0c' => col = 0,
                _ => break,
            }
            self.pos += 1;
        }
        match self.peek(0) {
            None => {
                self.at_line_start = false;
                return Ok(false);
            }
            Some(b'#') => {
                self.skip_comment();
                self.consume_newline();
                return Ok(false);
            }
            Some(b'\n') | Some(b'\r') => {
                self.consume_newline();
                return Ok(false);
            }
            Some(b'\\') if matches!(self.peek(1), Some(b'\n') | Some(b'\r')) => {
                // A continuation on an otherwise empty line joins with the next
                // line; indentation is taken from this line.
            }
            _ => {}
        }
        self.at_line_start = false;
        let current = *self.indents.last().unwrap();
        if col > current {
            self.indents.push(col);
            self.push(TokenKind::Indent, line_start, self.pos);
        } else if col < current {
            while col < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(TokenKind::Dedent, self.pos, self.pos);
            }
            if col != *self.indents.last().unwrap() {
                return Err(ParseError::at(
                    self.src,
                    self.pos,
                    "unindent does not match any outer indentation level",
                ));
            }
        }
        Ok(true)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == b'\n' || c == b'\r' {
                break;
            }
            self.pos += 1;
        }
    }

    fn consume_newline(&mut self) {
        if self.peek(0) == Some(b'\r') {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'\n') {
            self.pos += 1;
        }
    }

    /// Scans one token (or a newline). Returns false at end of input.
    fn next_token(&mut self) -> Result<bool, ParseError> {
        // Skip intra-line whitespace and comments.
        loop {
            match self.peek(0) {
                Some(b' ') | Some(b'\t') | Some(b'\x0c') => self.pos += 1,
                Some(b'#') => {
                    if self.fragment {
                        return Err(ParseError::at(
                            self.src,
                            self.pos,
                            "f-string expression part cannot include '#'",
                        ));
                    }
                    self.skip_comment();
                }
                Some(b'\\') => match self.peek(1) {
                    Some(b'\n') | Some(b'\r') => {
                        self.pos += 1;
                        self.consume_newline();
                        if self.pos >= self.end && !self.fragment {
                            return Err(ParseError::at(self.src, self.pos, "unexpected EOF while parsing"));
                        }
                    }
                    _ => {
                        return Err(ParseError::at(
                            self.src,
                            self.pos,
                            "unexpected character after line continuation character",
                        ))
                    }
                },
                _ => break,
            }
        }
        let start = self.pos;
        let Some(c) = self.peek(0) else {
            return Ok(false);
        };
        if c == b'\n' || c == b'\r' {
            self.consume_newline();
            if self.brackets.is_empty() && !self.fragment {
                let last_is_content = matches!(
                    self.tokens.last().map(|t| t.kind),
                    Some(TokenKind::Name | TokenKind::Number | TokenKind::String | TokenKind::Op)
                );
                if last_is_content {
                    self.push(TokenKind::Newline, start, self.pos);
                }
                self.at_line_start = true;
            }
            return Ok(true);
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            self.scan_number()?;
            return Ok(true);
        }
        if c == b'"' || c == b'\'' {
            self.scan_string(start)?;
            return Ok(true);
        }
        if let Some(ch) = self.src[self.pos..self.end].chars().next() {
            if ch == '_' || unicode_ident::is_xid_start(ch) {
                self.scan_name_or_prefixed_string(start)?;
                return Ok(true);
            }
        }
        for op in OPERATORS {
            if self.src[self.pos..self.end].starts_with(op) {
                self.pos += op.len();
                self.track_bracket(op.as_bytes()[0], start)?;
                self.push(TokenKind::Op, start, self.pos);
                return Ok(true);
            }
        }
        let ch = self.src[self.pos..].chars().next().unwrap_or('?');
        Err(ParseError::at(self.src, start, &format!("invalid character '{ch}'")))
    }

    fn track_bracket(&mut self, c: u8, pos: usize) -> Result<(), ParseError> {
        match c {
            b'(' | b'[' | b'{' => self.brackets.push((c, pos)),
            b')' | b']' | b'}' => {
                let want = match c {
                    b')' => b'(',
                    b']' => b'[',
                    _ => b'{',
                };
                match self.brackets.pop() {
                    Some((open, _)) if open == want => {}
                    Some((open, _)) => {
                        return Err(ParseError::at(
                            self.src,
                            pos,
                            &format!(
                                "closing parenthesis '{}' does not match opening parenthesis '{}'",
                                c as char, open as char
                            ),
                        ))
                    }
                    None => {
                        return Err(ParseError::at(
                            self.src,
                            pos,
                            &format!("unmatched '{}'", c as char),
                        ))
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn scan_name_or_prefixed_string(&mut self, start: usize) -> Result<(), ParseError> {
        let rest = &self.src[self.pos..self.end];
        let mut len = 0;
        for ch in rest.chars() {
            if ch == '_' || unicode_ident::is_xid_continue(ch) {
                len += ch.len_utf8();
            } else {
                break;
            }
        }
        let word = &rest[..len];
        let next = rest[len..].bytes().next();
        if matches!(next, Some(b'"') | Some(b'\'')) && is_string_prefix(word) {
            self.pos += len;
            return self.scan_string(start);
        }
        self.pos += len;
        self.push(TokenKind::Name, start, self.pos);
        Ok(())
    }

    fn scan_number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let radix_digits = |c: u8, radix: u8| match radix {
            16 => c.is_ascii_hexdigit(),
            8 => (b'0'..=b'7').contains(&c),
            2 => c == b'0' || c == b'1',
            _ => c.is_ascii_digit(),
        };
        if self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            let radix = match self.peek(1).unwrap().to_ascii_lowercase() {
                b'x' => 16,
                b'o' => 8,
                _ => 2,
            };
            self.pos += 2;
            let digits_start = self.pos;
            while let Some(c) = self.peek(0) {
                if radix_digits(c, radix) || (c == b'_' && self.peek(1).is_some_and(|d| radix_digits(d, radix))) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.pos == digits_start {
                return Err(ParseError::at(self.src, start, "invalid number literal"));
            }
        } else {
            self.scan_digits();
            if self.peek(0) == Some(b'.') {
                self.pos += 1;
                self.scan_digits();
            }
            if matches!(self.peek(0), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(0), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.scan_digits();
                } else {
                    self.pos = save;
                }
            }
            if matches!(self.peek(0), Some(b'j' | b'J')) {
                self.pos += 1;
            }
            let text = &self.src[start..self.pos];
            let is_plain_int = text.bytes().all(|c| c.is_ascii_digit() || c == b'_');
            if is_plain_int && text.len() > 1 && text.starts_with('0') && text.bytes().any(|c| c != b'0' && c != b'_') {
                return Err(ParseError::at(
                    self.src,
                    start,
                    "leading zeros in decimal integer literals are not permitted",
                ));
            }
        }
        self.push(TokenKind::Number, start, self.pos);
        Ok(())
    }

    fn scan_digits(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() || (c == b'_' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn scan_string(&mut self, start: usize) -> Result<(), ParseError> {
        let quote = self.peek(0).unwrap();
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek(0) else {
                let msg = if triple {
                    "unterminated triple-quoted string literal"
                } else {
                    "unterminated string literal"
                };
                return Err(ParseError::at(self.src, start, msg));
            };
            if c == b'\\' {
                self.pos += 1;
                if self.peek(0) == Some(b'\r') && self.peek(1) == Some(b'\n') {
                    self.pos += 2;
                } else if self.pos < self.end {
                    self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
                }
                continue;
            }
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.pos += 3;
                    break;
                }
            }
            if (c == b'\n' || c == b'\r') && !triple {
                return Err(ParseError::at(self.src, start, "unterminated string literal"));
            }
            self.pos += 1;
        }
        self.push(TokenKind::String, start, self.pos);
        Ok(())
    }
}

pub fn is_string_prefix(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Tokenizer::new(src).tokenize()
}
