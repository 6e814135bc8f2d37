//! Text grammar for ring elements.
//!
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := coeff ('*' mono)* | mono
//! mono  := gen ('^' int)? ('*' mono)*
//! gen   := 'u' int | 'e' | name
//! coeff := decimal or rational 'p/q'
//! ```
//!
//! Generators u1..ud address the free abelian basis; `e` is the identity;
//! finite-group elements go by their table names (cycle notation for the
//! symmetric builtins) or the fallback spelling `g<index>`.

use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::groupring::{RingElement, RingMatrix};
use crate::groups::{GroupElement, GroupSpec};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
}

struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_tok(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.text.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.text[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.text.len()
                    && (self.text[end].is_ascii_digit() || self.text[end] == b'.')
                {
                    end += 1;
                }
                let s = std::str::from_utf8(&self.text[self.pos..end]).unwrap();
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("bad number `{s}`"),
                })?;
                self.pos = end;
                Tok::Number(v)
            }
            b'(' => {
                // Cycle-notation name: one or more (digits) groups.
                let mut end = self.pos;
                loop {
                    if end >= self.text.len() || self.text[end] != b'(' {
                        break;
                    }
                    let close = self.text[end..]
                        .iter()
                        .position(|&b| b == b')')
                        .map(|o| end + o)
                        .ok_or(Error::Parse {
                            position: end,
                            message: "unclosed `(` in element name".into(),
                        })?;
                    if !self.text[end + 1..close].iter().all(|b| b.is_ascii_digit())
                        || close == end + 1
                    {
                        return Err(Error::Parse {
                            position: end,
                            message: "expected digits inside `(...)`".into(),
                        });
                    }
                    end = close + 1;
                }
                let s = std::str::from_utf8(&self.text[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(s)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.text.len()
                    && (self.text[end].is_ascii_alphanumeric() || self.text[end] == b'_')
                {
                    end += 1;
                }
                let s = std::str::from_utf8(&self.text[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(s)
            }
            other => {
                return Err(Error::Parse {
                    position: start,
                    message: format!("unexpected character `{}`", other as char),
                });
            }
        };
        Ok(Some((tok, start)))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    spec: &'a GroupSpec,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn parse_expr(&mut self) -> Result<RingElement> {
        let mut acc = RingElement::zero(self.spec.clone());
        let mut sign = 1.0;
        // Optional leading sign.
        match self.peek() {
            Some((Tok::Minus, _)) => {
                sign = -1.0;
                self.bump();
            }
            Some((Tok::Plus, _)) => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let (g, c) = self.parse_term()?;
            acc.add_term(g, sign * c)?;
            match self.peek() {
                Some((Tok::Plus, _)) => {
                    sign = 1.0;
                    self.bump();
                }
                Some((Tok::Minus, _)) => {
                    sign = -1.0;
                    self.bump();
                }
                Some((tok, pos)) => {
                    return Err(Error::Parse {
                        position: *pos,
                        message: format!("expected `+` or `-`, found {tok:?}"),
                    });
                }
                None => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<(GroupElement, f64)> {
        let mut coeff = 1.0;
        let mut elem = self.spec.identity();
        let mut saw_factor = false;
        if let Some((Tok::Number(v), _)) = self.peek() {
            coeff = *v;
            self.bump();
            saw_factor = true;
            if let Some((Tok::Ident(s), pos)) = self.peek().cloned() {
                // A bare ident right after a number (no `*`) is a grammar
                // violation; report it clearly.
                return Err(Error::Parse {
                    position: pos,
                    message: format!("missing `*` before `{s}`"),
                });
            }
        }
        loop {
            match self.peek() {
                Some((Tok::Star, _)) => {
                    self.bump();
                    let (g, c) = self.parse_mono()?;
                    elem = self.spec.multiply(&elem, &g)?;
                    coeff *= c;
                    saw_factor = true;
                }
                Some((Tok::Ident(_), _)) if !saw_factor => {
                    let (g, c) = self.parse_mono()?;
                    elem = self.spec.multiply(&elem, &g)?;
                    coeff *= c;
                    saw_factor = true;
                }
                _ => break,
            }
        }
        if !saw_factor {
            return Err(Error::Parse {
                position: self.here(),
                message: "expected a term".into(),
            });
        }
        Ok((elem, coeff))
    }

    /// One generator with optional exponent. Returns the group element
    /// and a scalar (always 1.0; kept for shape symmetry with terms).
    fn parse_mono(&mut self) -> Result<(GroupElement, f64)> {
        let (tok, pos) = self.bump().ok_or(Error::Parse {
            position: self.end,
            message: "expected a generator".into(),
        })?;
        let name = match tok {
            Tok::Ident(s) => s,
            other => {
                return Err(Error::Parse {
                    position: pos,
                    message: format!("expected a generator, found {other:?}"),
                });
            }
        };
        let base = self.resolve_generator(&name, pos)?;
        let mut power: i64 = 1;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            let mut sign = 1i64;
            if let Some((Tok::Minus, _)) = self.peek() {
                sign = -1;
                self.bump();
            }
            match self.bump() {
                Some((Tok::Number(v), npos)) => {
                    if v.fract() != 0.0 {
                        return Err(Error::Parse {
                            position: npos,
                            message: "exponent must be an integer".into(),
                        });
                    }
                    power = sign * v as i64;
                }
                other => {
                    return Err(Error::Parse {
                        position: other.map(|(_, p)| p).unwrap_or(self.end),
                        message: "expected an integer exponent".into(),
                    });
                }
            }
        }
        Ok((self.element_power(&base, power)?, 1.0))
    }

    fn resolve_generator(&self, name: &str, pos: usize) -> Result<GroupElement> {
        if name == "e" {
            return Ok(self.spec.identity());
        }
        match self.spec {
            GroupSpec::FreeAbelian(d) => {
                if let Some(rest) = name.strip_prefix('u') {
                    if let Ok(i) = rest.parse::<usize>() {
                        if i >= 1 && i <= *d {
                            let mut v = vec![0i64; *d];
                            v[i - 1] = 1;
                            return Ok(GroupElement::Vector(v));
                        }
                    }
                }
                Err(Error::UnknownGenerator { name: name.into(), position: pos })
            }
            GroupSpec::Finite(fg) => fg
                .element_by_name(name)
                .map(GroupElement::Index)
                .ok_or(Error::UnknownGenerator { name: name.into(), position: pos }),
        }
    }

    fn element_power(&self, base: &GroupElement, power: i64) -> Result<GroupElement> {
        let (b, n) = if power < 0 {
            (self.spec.invert(base)?, -power)
        } else {
            (base.clone(), power)
        };
        let mut acc = self.spec.identity();
        for _ in 0..n {
            acc = self.spec.multiply(&acc, &b)?;
        }
        Ok(acc)
    }
}

/// Render a caret pointing at a byte position of an input line.
pub fn render_caret(text: &str, position: usize) -> String {
    let mut out = String::new();
    out.push_str(text);
    out.push('\n');
    for _ in 0..position.min(text.len()) {
        out.push(' ');
    }
    out.push('^');
    out
}

fn with_caret(e: Error, text: &str) -> Error {
    match e {
        Error::Parse { position, message } => Error::Parse {
            position,
            message: format!("{message}\n{}", render_caret(text, position)),
        },
        other => other,
    }
}

/// Parse the ring-element grammar over a given group.
pub fn parse_ring_expr(text: &str, spec: &GroupSpec) -> Result<RingElement> {
    parse_ring_expr_inner(text, spec).map_err(|e| with_caret(e, text))
}

fn parse_ring_expr_inner(text: &str, spec: &GroupSpec) -> Result<RingElement> {
    // Rational coefficients p/q: rewrite at the token level by lexing
    // `p / q` specially. The slash only ever appears inside a coefficient.
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let before = lexer.pos;
        lexer.skip_ws();
        if lexer.pos < lexer.text.len() && lexer.text[lexer.pos] == b'/' {
            let pos = lexer.pos;
            lexer.pos += 1;
            let den = match lexer.next_tok()? {
                Some((Tok::Number(v), _)) if v != 0.0 => v,
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        message: "expected a nonzero integer after `/`".into(),
                    });
                }
            };
            match toks.last_mut() {
                Some((Tok::Number(num), _)) => *num /= den,
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        message: "`/` must follow a numerator".into(),
                    });
                }
            }
            continue;
        }
        lexer.pos = before;
        match lexer.next_tok()? {
            Some(t) => toks.push(t),
            None => break,
        }
    }
    if toks.is_empty() {
        return Err(Error::Parse { position: 0, message: "empty expression".into() });
    }
    let end = text.len();
    let mut parser = Parser { toks, idx: 0, spec, end };
    let out = parser.parse_expr()?;
    Ok(out)
}

fn format_coeff(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

fn format_element(spec: &GroupSpec, g: &GroupElement) -> Option<String> {
    match (spec, g) {
        (GroupSpec::FreeAbelian(_), GroupElement::Vector(v)) => {
            if v.iter().all(|&x| x == 0) {
                return None;
            }
            let parts: Vec<String> = v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| {
                    if x == 1 {
                        format!("u{}", i + 1)
                    } else {
                        format!("u{}^{}", i + 1, x)
                    }
                })
                .collect();
            Some(parts.join("*"))
        }
        (GroupSpec::Finite(fg), GroupElement::Index(i)) => {
            if *i == fg.identity {
                return None;
            }
            let name = &fg.names[*i];
            let letter_led = name
                .chars()
                .next()
                .map(|c| c.is_ascii_alphabetic() || c == '(')
                .unwrap_or(false);
            Some(if letter_led { name.clone() } else { format!("g{i}") })
        }
        _ => Some("?".into()),
    }
}

/// Deterministic formatter, the inverse of [`parse_ring_expr`] up to
/// term order.
pub fn format_ring_expr(elem: &RingElement, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if elem.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (g, c) in elem.terms() {
        let mono = format_element(elem.spec(), g);
        let mag = c.abs();
        if first {
            if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
        } else if c < 0.0 {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        match mono {
            None => write!(f, "{}", format_coeff(mag))?,
            Some(m) if mag == 1.0 => write!(f, "{m}")?,
            Some(m) => write!(f, "{}*{}", format_coeff(mag), m)?,
        }
    }
    Ok(())
}

/// JSON input for a matrix of ring expressions.
#[derive(Deserialize)]
struct MatrixFile {
    group: String,
    entries: Vec<Vec<String>>,
}

pub fn matrix_from_json(json: &str) -> Result<RingMatrix> {
    let mf: MatrixFile = serde_json::from_str(json)?;
    let spec = crate::groups::parse_group_id(&mf.group)?;
    let rows = mf.entries.len();
    if rows == 0 {
        return Err(Error::Usage("matrix file has no rows".into()));
    }
    let cols = mf.entries[0].len();
    if cols == 0 || mf.entries.iter().any(|r| r.len() != cols) {
        return Err(Error::Usage("matrix file rows are ragged or empty".into()));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for row in &mf.entries {
        for text in row {
            entries.push(parse_ring_expr(text, &spec)?);
        }
    }
    RingMatrix::from_entries(rows, cols, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::parse_group_id;
    use crate::rng::Stream;

    fn z1() -> GroupSpec {
        GroupSpec::free_abelian(1).unwrap()
    }

    fn z2() -> GroupSpec {
        GroupSpec::free_abelian(2).unwrap()
    }

    #[test]
    fn parse_two_minus_u1() {
        let e = parse_ring_expr("2 - u1", &z1()).unwrap();
        assert_eq!(e.coeff(&GroupElement::Vector(vec![0])), 2.0);
        assert_eq!(e.coeff(&GroupElement::Vector(vec![1])), -1.0);
        assert_eq!(e.support_size(), 2);
    }

    #[test]
    fn parse_harmonic_model() {
        let e = parse_ring_expr("4 - u1 - u1^-1 - u2 - u2^-1", &z2()).unwrap();
        assert_eq!(e.coeff(&GroupElement::Vector(vec![0, 0])), 4.0);
        for v in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert_eq!(e.coeff(&GroupElement::Vector(v.to_vec())), -1.0);
        }
    }

    #[test]
    fn parse_products_and_powers() {
        let e = parse_ring_expr("u1*u2 - 3*u1^2", &z2()).unwrap();
        assert_eq!(e.coeff(&GroupElement::Vector(vec![1, 1])), 1.0);
        assert_eq!(e.coeff(&GroupElement::Vector(vec![2, 0])), -3.0);
        assert_eq!(e.support_size(), 2);
    }

    #[test]
    fn parse_rational_and_decimal_coeffs() {
        let e = parse_ring_expr("1/2 + 0.25*u1", &z1()).unwrap();
        assert_eq!(e.coeff(&GroupElement::Vector(vec![0])), 0.5);
        assert_eq!(e.coeff(&GroupElement::Vector(vec![1])), 0.25);
    }

    #[test]
    fn parse_finite_group_names() {
        let s3 = parse_group_id("S3").unwrap();
        let e = parse_ring_expr("(12) + 2*(123) - e", &s3).unwrap();
        let g = s3.finite_group().unwrap();
        let i12 = g.element_by_name("(12)").unwrap();
        let i123 = g.element_by_name("(123)").unwrap();
        assert_eq!(e.coeff(&GroupElement::Index(i12)), 1.0);
        assert_eq!(e.coeff(&GroupElement::Index(i123)), 2.0);
        assert_eq!(e.coeff(&GroupElement::Index(g.identity)), -1.0);

        let z6 = parse_group_id("Z/6").unwrap();
        let e = parse_ring_expr("g2 - g5", &z6).unwrap();
        assert_eq!(e.coeff(&GroupElement::Index(2)), 1.0);
        assert_eq!(e.coeff(&GroupElement::Index(5)), -1.0);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_ring_expr("2 -- u1", &z1()) {
            // Points at the second `-`.
            Err(Error::Parse { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_ring_expr("2 + u9", &z1()) {
            Err(Error::UnknownGenerator { name, position }) => {
                assert_eq!(name, "u9");
                assert_eq!(position, 4);
            }
            other => panic!("expected unknown generator, got {other:?}"),
        }
        assert!(parse_ring_expr("", &z1()).is_err());
        assert!(parse_ring_expr("2 u1", &z1()).is_err());
    }

    #[test]
    fn format_examples() {
        let e = parse_ring_expr("2 - u1", &z1()).unwrap();
        assert_eq!(e.to_string(), "2 - u1");
        let h = parse_ring_expr("4 - u1 - u1^-1 - u2 - u2^-1", &z2()).unwrap();
        let reparsed = parse_ring_expr(&h.to_string(), &z2()).unwrap();
        assert_eq!(h, reparsed);
        assert_eq!(RingElement::zero(z1()).to_string(), "0");
    }

    #[test]
    fn roundtrip_random_elements() {
        let mut s = Stream::from_seed(8);
        for spec in [z1(), z2(), parse_group_id("S3").unwrap(), parse_group_id("Z/6").unwrap()] {
            for _ in 0..30 {
                let mut e = RingElement::zero(spec.clone());
                for _ in 0..4 {
                    let g = match &spec {
                        GroupSpec::FreeAbelian(d) => GroupElement::Vector(
                            (0..*d).map(|_| s.next_int(-4, 4)).collect(),
                        ),
                        GroupSpec::Finite(fg) => {
                            GroupElement::Index(s.next_int(0, fg.order as i64 - 1) as usize)
                        }
                    };
                    e.add_term(g, s.next_int(-12, 12) as f64 / 4.0).unwrap();
                }
                let text = e.to_string();
                if e.is_zero() {
                    continue;
                }
                let back = parse_ring_expr(&text, &spec).unwrap();
                assert_eq!(e, back, "roundtrip failed for `{text}`");
            }
        }
    }

    #[test]
    fn matrix_json() {
        let json = r#"{"group":"Z^1","entries":[["2 - u1","0"],["1","u1^-1"]]}"#;
        let m = matrix_from_json(json).unwrap();
        assert_eq!((m.rows, m.cols), (2, 2));
        assert_eq!(m.entry(0, 0).coeff(&GroupElement::Vector(vec![0])), 2.0);
        assert_eq!(m.entry(1, 1).coeff(&GroupElement::Vector(vec![-1])), 1.0);
    }
}
