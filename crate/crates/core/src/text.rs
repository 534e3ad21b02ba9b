//! Text model: symbols with out-of-band delimiters, patterns, and
//! interleaving of symbol sequences.

use std::fmt;

use crate::error::{param, Result};

/// One symbol of an indexed text.
///
/// Codes `0..=255` are base bytes; codes from 256 upward are delimiter
/// sentinels, so every delimiter orders after every base byte and
/// delimiters order among themselves by index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u32);

impl Symbol {
    const DELIM_BASE: u32 = 256;

    pub const fn base(b: u8) -> Self {
        Symbol(b as u32)
    }

    /// Delimiter with 1-based index `i`.
    pub fn delimiter(i: u32) -> Self {
        assert!(i >= 1, "delimiter indices start at 1");
        Symbol(Self::DELIM_BASE + i - 1)
    }

    pub fn is_delimiter(self) -> bool {
        self.0 >= Self::DELIM_BASE
    }

    pub fn as_base(self) -> Option<u8> {
        (!self.is_delimiter()).then_some(self.0 as u8)
    }

    pub fn delimiter_index(self) -> Option<u32> {
        self.is_delimiter().then(|| self.0 - Self::DELIM_BASE + 1)
    }

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn from_code(code: u32) -> Self {
        Symbol(code)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.as_base(), self.delimiter_index()) {
            (Some(b), _) if b.is_ascii_graphic() => write!(f, "{}", b as char),
            (Some(b), _) => write!(f, "\\x{b:02x}"),
            (None, Some(1)) => f.write_str("$"),
            (None, Some(2)) => f.write_str("%"),
            (None, Some(i)) => write!(f, "<#{i}>"),
            (None, None) => unreachable!(),
        }
    }
}

/// Renders a symbol slice the way the tests and the CLI print it.
pub fn render(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.to_string()).collect()
}

pub fn base_symbols(raw: &[u8]) -> Vec<Symbol> {
    raw.iter().copied().map(Symbol::base).collect()
}

/// An indexed text: `n` base bytes followed by `k` distinct delimiters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Text {
    symbols: Vec<Symbol>,
    base_len: usize,
    k: usize,
}

impl Text {
    pub fn new(raw: &[u8], k: usize) -> Self {
        let mut symbols = base_symbols(raw);
        symbols.extend((1..=k as u32).map(Symbol::delimiter));
        Text { symbols, base_len: raw.len(), k }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Number of base (non-delimiter) symbols.
    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn delimiters(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn raw(&self) -> Vec<u8> {
        self.symbols[..self.base_len]
            .iter()
            .map(|s| s.as_base().expect("base prefix"))
            .collect()
    }
}

/// Appends `k` delimiters to `raw`.
pub fn make_text(raw: &[u8], k: usize) -> Text {
    Text::new(raw, k)
}

/// A non-empty, delimiter-free query string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    symbols: Vec<Symbol>,
}

impl Pattern {
    pub fn new(bytes: &[u8]) -> Result<Self> {
        if bytes.is_empty() {
            return param("pattern must be non-empty");
        }
        Ok(Pattern { symbols: base_symbols(bytes) })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.symbols.iter().map(|s| s.as_base().unwrap()).collect()
    }
}

/// Splits `x` into `k` interleaved subsequences: subsequence `i` holds
/// `x[i], x[i+k], x[i+2k], ...` (0-based `i`).
pub fn interleave<T: Clone>(x: &[T], k: usize) -> Result<Vec<Vec<T>>> {
    if k == 0 {
        return param("interleave stride must be at least 1");
    }
    Ok((0..k)
        .map(|i| x.iter().skip(i).step_by(k).cloned().collect())
        .collect())
}

/// Length of the string recovered from two interleaved subsequences of
/// lengths `l1` and `l2`.
pub fn deinterleaved_len(l1: usize, l2: usize) -> usize {
    l1.min(l2) + l1.min(l2 + 1)
}

/// Alternates `x1[0], x2[0], x1[1], ...`, truncated to
/// `deinterleaved_len(|x1|, |x2|)`.
pub fn deinterleave2<T: Clone>(x1: &[T], x2: &[T]) -> Vec<T> {
    let len = deinterleaved_len(x1.len(), x2.len());
    (0..len)
        .map(|i| if i % 2 == 0 { x1[i / 2].clone() } else { x2[i / 2].clone() })
        .collect()
}
