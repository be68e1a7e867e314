//! Text syntax for words, product elements, endomorphism files, and
//! boundary points, with position-reporting parse errors.
//!
//! Word syntax: whitespace-separated or contiguous tokens. Lowercase is
//! a generator, uppercase its inverse. Indexed tokens `a<i>`/`A<i>`
//! address the first factor's generators and `b<j>`/`B<j>` the second
//! factor's; a bare letter `a`, `b`, ... means its alphabet position
//! (valid while the rank is at most 26). The identity is written `1`
//! (an empty string also parses as the identity).

use crate::boundary::{BoundaryPoint, ProductBoundaryPoint};
use crate::maps::{ProductElement, ProductEndo};
use crate::words::ReducedWord;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which factor's indexed-token prefix applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alphabet {
    /// First factor: indexed tokens use `a`/`A`.
    First,
    /// Second factor: indexed tokens use `b`/`B`.
    Second,
}

impl Alphabet {
    fn prefix(self) -> char {
        match self {
            Alphabet::First => 'a',
            Alphabet::Second => 'b',
        }
    }
}

fn parse_err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

/// Parses a word over the given factor's alphabet.
pub fn parse_word(input: &str, rank: usize, alphabet: Alphabet) -> Result<ReducedWord> {
    if input.trim() == "1" || input.trim().is_empty() {
        return Ok(ReducedWord::identity(rank));
    }
    let bytes = input.as_bytes();
    let mut letters: Vec<i32> = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_ascii_alphabetic() {
            return Err(parse_err(i, format!("unexpected character {c:?}; expected a letter")));
        }
        let inverse = c.is_ascii_uppercase();
        let lower = c.to_ascii_lowercase();
        let digit_start = i + 1;
        let mut j = digit_start;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        let index: usize = if j > digit_start {
            if lower != alphabet.prefix() {
                return Err(parse_err(
                    i,
                    format!(
                        "indexed token {}{} uses the wrong prefix for this factor (expected {})",
                        c,
                        &input[digit_start..j],
                        alphabet.prefix()
                    ),
                ));
            }
            input[digit_start..j]
                .parse()
                .map_err(|_| parse_err(digit_start, "generator index out of range"))?
        } else {
            (lower as usize) - ('a' as usize) + 1
        };
        if index == 0 || index > rank {
            return Err(parse_err(
                i,
                format!("generator index {index} out of range 1..={rank}"),
            ));
        }
        let l = if inverse { -(index as i32) } else { index as i32 };
        letters.push(l);
        i = j;
    }
    ReducedWord::reduce(rank, &letters)
}

/// Formats a word. The first factor uses bare letters while the rank
/// allows it; the second factor always uses indexed tokens.
pub fn format_word(w: &ReducedWord, alphabet: Alphabet) -> String {
    if w.is_identity() {
        return "1".to_string();
    }
    let bare = matches!(alphabet, Alphabet::First) && w.rank() <= 26;
    let mut out = String::new();
    for &l in w.letters() {
        let idx = l.unsigned_abs() as usize;
        if bare {
            let base = (b'a' + (idx as u8) - 1) as char;
            out.push(if l < 0 { base.to_ascii_uppercase() } else { base });
        } else {
            let p = alphabet.prefix();
            out.push(if l < 0 { p.to_ascii_uppercase() } else { p });
            out.push_str(&idx.to_string());
        }
    }
    out
}

/// Parses a product element `"<first word>|<second word>"`.
pub fn parse_product_element(input: &str, n: usize, m: usize) -> Result<ProductElement> {
    let bar = input
        .find('|')
        .ok_or_else(|| parse_err(input.len(), "expected '|' separating the two factor words"))?;
    if input[bar + 1..].contains('|') {
        return Err(parse_err(bar + 1 + input[bar + 1..].find('|').unwrap(), "unexpected second '|'"));
    }
    let first = parse_word(&input[..bar], n, Alphabet::First)?;
    let second = parse_word(&input[bar + 1..], m, Alphabet::Second).map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse { pos: pos + bar + 1, msg },
        other => other,
    })?;
    Ok(ProductElement::new(first, second))
}

/// Serializable mirror of the endomorphism file: ranks plus one
/// `"<first>|<second>"` image string per generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndoFileSpec {
    pub n: usize,
    pub m: usize,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl EndoFileSpec {
    pub fn to_endo(&self) -> Result<ProductEndo> {
        let a = self
            .a
            .iter()
            .map(|s| parse_product_element(s, self.n, self.m))
            .collect::<Result<Vec<_>>>()?;
        let b = self
            .b
            .iter()
            .map(|s| parse_product_element(s, self.n, self.m))
            .collect::<Result<Vec<_>>>()?;
        ProductEndo::new(self.n, self.m, a, b)
    }

    pub fn from_endo(endo: &ProductEndo) -> Self {
        EndoFileSpec {
            n: endo.n(),
            m: endo.m(),
            a: endo.a_images().iter().map(ToString::to_string).collect(),
            b: endo.b_images().iter().map(ToString::to_string).collect(),
        }
    }
}

/// Parses the text endomorphism format: a header `n m`, then `n` lines
/// `a<i> -> <word>|<word>`, then `m` lines `b<j> -> <word>|<word>`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_endo_text(input: &str) -> Result<ProductEndo> {
    let mut lines = input
        .split('\n')
        .scan(0usize, |offset, line| {
            let start = *offset;
            *offset += line.len() + 1;
            Some((start, line))
        })
        .filter(|(_, line)| {
            let t = line.trim();
            !t.is_empty() && !t.starts_with('#')
        });

    let (hpos, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty endomorphism description"))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hpos, "header must be two ranks: `n m`"))?;
    let m: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hpos, "header must be two ranks: `n m`"))?;
    if parts.next().is_some() {
        return Err(parse_err(hpos, "header must be exactly two ranks: `n m`"));
    }

    let mut take_line = |expected: &str| -> Result<ProductElement> {
        let (pos, line) = lines
            .next()
            .ok_or_else(|| parse_err(input.len(), format!("missing image line for {expected}")))?;
        let arrow = line
            .find("->")
            .ok_or_else(|| parse_err(pos, format!("expected `{expected} -> <word>|<word>`")))?;
        let lhs = line[..arrow].trim();
        if lhs != expected {
            return Err(parse_err(pos, format!("expected image of {expected}, found {lhs:?}")));
        }
        parse_product_element(line[arrow + 2..].trim(), n, m).map_err(|e| match e {
            Error::Parse { pos: p, msg } => Error::Parse { pos: pos + arrow + 2 + p, msg },
            other => other,
        })
    };

    let mut a = Vec::with_capacity(n);
    for i in 1..=n {
        a.push(take_line(&format!("a{i}"))?);
    }
    let mut b = Vec::with_capacity(m);
    for j in 1..=m {
        b.push(take_line(&format!("b{j}"))?);
    }
    if let Some((pos, _)) = lines.next() {
        return Err(parse_err(pos, "unexpected extra line after all generator images"));
    }
    ProductEndo::new(n, m, a, b)
}

/// Parses a rational completion point: `u:(v)` for the eventually
/// periodic infinite word `u v v ...`, `u:` (or a bare word) for the
/// finite word `u`. The result is canonicalized.
pub fn parse_boundary_point(input: &str, rank: usize, alphabet: Alphabet) -> Result<BoundaryPoint> {
    let Some(colon) = input.find(':') else {
        return Ok(BoundaryPoint::finite(parse_word(input, rank, alphabet)?));
    };
    let prefix = parse_word(&input[..colon], rank, alphabet)?;
    let rest = input[colon + 1..].trim();
    if rest.is_empty() {
        return Ok(BoundaryPoint::finite(prefix));
    }
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| parse_err(colon + 1, "expected `(cycle)` after `:`"))?;
    let cycle = parse_word(inner, rank, alphabet).map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse { pos: pos + colon + 2, msg },
        other => other,
    })?;
    BoundaryPoint::new(prefix, cycle)
}

/// Formats a rational completion point in the `u:(v)` / `u:` syntax.
pub fn format_boundary_point(p: &BoundaryPoint, alphabet: Alphabet) -> String {
    let prefix = if p.prefix().is_identity() {
        String::new()
    } else {
        format_word(p.prefix(), alphabet)
    };
    if p.is_finite() {
        format!("{prefix}:")
    } else {
        format!("{prefix}:({})", format_word(p.cycle(), alphabet))
    }
}

/// Parses `<point>|<point>` over the two factors.
pub fn parse_product_boundary_point(
    input: &str,
    n: usize,
    m: usize,
) -> Result<ProductBoundaryPoint> {
    let bar = input
        .find('|')
        .ok_or_else(|| parse_err(input.len(), "expected '|' separating the two factor points"))?;
    let first = parse_boundary_point(&input[..bar], n, Alphabet::First)?;
    let second = parse_boundary_point(&input[bar + 1..], m, Alphabet::Second).map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse { pos: pos + bar + 1, msg },
        other => other,
    })?;
    Ok(ProductBoundaryPoint::new(first, second))
}

/// Formats a product completion point.
pub fn format_product_boundary_point(p: &ProductBoundaryPoint) -> String {
    format!(
        "{}|{}",
        format_boundary_point(&p.first, Alphabet::First),
        format_boundary_point(&p.second, Alphabet::Second)
    )
}

/// Renders an endomorphism in the text file format.
pub fn format_endo_text(endo: &ProductEndo) -> String {
    let mut out = format!("{} {}\n", endo.n(), endo.m());
    for (i, pe) in endo.a_images().iter().enumerate() {
        out.push_str(&format!("a{} -> {}\n", i + 1, pe));
    }
    for (j, pe) in endo.b_images().iter().enumerate() {
        out.push_str(&format!("b{} -> {}\n", j + 1, pe));
    }
    out
}
