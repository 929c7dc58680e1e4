//! Text form of symbols.
//!
//! ```text
//! expr := term ('+' term)*
//! term := atom ('*' atom)*
//! atom := 'z^'a ['zb^'b] | 'zb^'b | '|z|^'s | 'sin|z|' | 'sin(' w '|z|)'
//!       | 'expq(' s ')' | 'ang(' k ')' | 'ind(' c ',' a ',' b ')'
//!       | 'conj(' expr ')' | '(' expr ')' | '(' complex ')' | real | real 'i'
//! ```
//!
//! Adjacent monomial factors of a term are multiplied out, so `2*z^1` is a
//! single monomial with coefficient 2.

use num_complex::Complex64;

use super::SymbolExpr;
use crate::error::{FockError, Result};

fn fmt_real(x: f64) -> String {
    format!("{x}")
}

/// Complex literal without surrounding parentheses: `a`, `bi`, `a+bi`, `a-bi`.
pub(crate) fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.re == 0.0 {
        format!("{}i", fmt_real(c.im))
    } else if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) {
        format!("{}-{}i", fmt_real(c.re), fmt_real(-c.im))
    } else {
        format!("{}+{}i", fmt_real(c.re), fmt_real(c.im))
    }
}

fn fmt_coeff(c: Complex64) -> String {
    if c.re != 0.0 && c.im != 0.0 {
        format!("({})", fmt_complex(c))
    } else {
        fmt_complex(c)
    }
}

pub(crate) fn print(g: &SymbolExpr) -> String {
    use SymbolExpr::*;
    match g {
        Mono { a, b, c } => {
            if *a == 0 && *b == 0 {
                return fmt_coeff(*c);
            }
            let mut body = String::new();
            if *a > 0 {
                body.push_str(&format!("z^{a}"));
            }
            if *b > 0 {
                body.push_str(&format!("zb^{b}"));
            }
            if *c == Complex64::new(1.0, 0.0) {
                body
            } else {
                format!("{}*{}", fmt_coeff(*c), body)
            }
        }
        RadialPower { s } => format!("|z|^{}", fmt_real(*s)),
        RadialSin { omega } => {
            if *omega == 1.0 {
                "sin|z|".to_string()
            } else {
                format!("sin({}|z|)", fmt_real(*omega))
            }
        }
        RadialExpQ { s } => format!("expq({})", fmt_real(*s)),
        Angular { k } => format!("ang({k})"),
        IndicatorAnnulus { center, a, b } => format!(
            "ind({},{},{})",
            fmt_complex(*center),
            fmt_real(*a),
            fmt_real(*b)
        ),
        Sum { terms } => {
            if terms.is_empty() {
                return "0".to_string();
            }
            terms
                .iter()
                .map(|t| match t {
                    Sum { .. } => format!("({})", print(t)),
                    _ => print(t),
                })
                .collect::<Vec<_>>()
                .join(" + ")
        }
        Product { left, right } => {
            let l = match left.as_ref() {
                Sum { .. } => format!("({})", print(left)),
                _ => print(left),
            };
            let r = match right.as_ref() {
                Sum { .. } | Product { .. } => format!("({})", print(right)),
                _ => print(right),
            };
            format!("{l}*{r}")
        }
        Conj { child } => format!("conj({})", print(child)),
    }
}

fn is_mono(g: &SymbolExpr) -> bool {
    matches!(g, SymbolExpr::Mono { .. })
}

fn mono_mul(x: &SymbolExpr, y: &SymbolExpr) -> SymbolExpr {
    match (x, y) {
        (
            SymbolExpr::Mono { a: a1, b: b1, c: c1 },
            SymbolExpr::Mono { a: a2, b: b2, c: c2 },
        ) => SymbolExpr::Mono {
            a: a1 + a2,
            b: b1 + b2,
            c: c1 * c2,
        },
        _ => unreachable!("mono_mul on non-monomials"),
    }
}

/// Folds adjacent monomials of a factor chain and rebuilds a left-nested
/// product.
fn fold_chain(atoms: Vec<SymbolExpr>) -> SymbolExpr {
    let mut out: Vec<SymbolExpr> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match out.last_mut() {
            Some(last) if is_mono(last) && is_mono(&atom) => {
                *last = mono_mul(last, &atom);
            }
            _ => out.push(atom),
        }
    }
    let mut it = out.into_iter();
    let first = it.next().expect("non-empty factor chain");
    it.fold(first, SymbolExpr::product)
}

fn left_spine(g: &SymbolExpr, out: &mut Vec<SymbolExpr>) {
    match g {
        SymbolExpr::Product { left, right } => {
            left_spine(left, out);
            out.push(canonicalize(right));
        }
        _ => out.push(canonicalize(g)),
    }
}

pub(crate) fn canonicalize(g: &SymbolExpr) -> SymbolExpr {
    use SymbolExpr::*;
    match g {
        Sum { terms } => match terms.len() {
            0 => SymbolExpr::constant(Complex64::new(0.0, 0.0)),
            1 => canonicalize(&terms[0]),
            _ => Sum {
                terms: terms.iter().map(canonicalize).collect(),
            },
        },
        Product { .. } => {
            let mut atoms = Vec::new();
            left_spine(g, &mut atoms);
            fold_chain(atoms)
        }
        Conj { child } => SymbolExpr::conj(canonicalize(child)),
        other => other.clone(),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(FockError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn unsigned_int(&mut self) -> Result<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a non-negative integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().or_else(|_| {
            self.pos = start;
            self.err("integer out of range")
        })
    }

    fn signed_int(&mut self) -> Result<i32> {
        let neg = self.eat("-");
        let v = self.unsigned_int()? as i64;
        let v = if neg { -v } else { v };
        i32::try_from(v).or_else(|_| self.err("integer out of range"))
    }

    /// Scans a real number: `[-]digits[.digits][e[+-]digits]`.
    fn real(&mut self) -> Result<f64> {
        let start = self.pos;
        self.eat("-");
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if self.pos == digits_start || &self.src[digits_start..self.pos] == b"." {
            self.pos = start;
            return self.err("expected a number");
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }

    /// Complex literal `a`, `bi`, `a+bi`, `a-bi` (no spaces).
    fn complex(&mut self) -> Result<Complex64> {
        let first = self.real()?;
        if self.eat("i") {
            return Ok(Complex64::new(0.0, first));
        }
        let save = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            let neg = self.peek() == Some(b'-');
            self.pos += 1;
            if matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
                if let Ok(im) = self.real() {
                    if self.eat("i") {
                        return Ok(Complex64::new(first, if neg { -im } else { im }));
                    }
                }
            }
            self.pos = save;
        }
        Ok(Complex64::new(first, 0.0))
    }

    fn expr(&mut self, depth: usize) -> Result<SymbolExpr> {
        if depth > super::MAX_DEPTH {
            return self.err("expression nested too deeply");
        }
        let mut terms = vec![self.term(depth)?];
        loop {
            self.skip_ws();
            if self.eat("+") {
                self.skip_ws();
                terms.push(self.term(depth)?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            SymbolExpr::Sum { terms }
        })
    }

    fn term(&mut self, depth: usize) -> Result<SymbolExpr> {
        let mut atoms = vec![self.atom(depth)?];
        loop {
            self.skip_ws();
            if self.eat("*") {
                self.skip_ws();
                atoms.push(self.atom(depth)?);
            } else {
                break;
            }
        }
        Ok(fold_chain(atoms))
    }

    fn atom(&mut self, depth: usize) -> Result<SymbolExpr> {
        self.skip_ws();
        let start = self.pos;
        if self.eat("zb^") {
            let b = self.unsigned_int()?;
            return Ok(SymbolExpr::Mono {
                a: 0,
                b,
                c: Complex64::new(1.0, 0.0),
            });
        }
        if self.eat("z^") {
            let a = self.unsigned_int()?;
            let b = if self.eat("zb^") { self.unsigned_int()? } else { 0 };
            return Ok(SymbolExpr::Mono {
                a,
                b,
                c: Complex64::new(1.0, 0.0),
            });
        }
        if self.eat("|z|^") {
            let s = self.real()?;
            return SymbolExpr::radial_power(s).or_else(|e| self.at(start, e));
        }
        if self.eat("sin|z|") {
            return Ok(SymbolExpr::RadialSin { omega: 1.0 });
        }
        if self.eat("sin(") {
            let w = self.real()?;
            self.expect("|z|)")?;
            return Ok(SymbolExpr::RadialSin { omega: w });
        }
        if self.eat("expq(") {
            let s = self.real()?;
            self.expect(")")?;
            return SymbolExpr::expq(s).or_else(|e| self.at(start, e));
        }
        if self.eat("ang(") {
            let k = self.signed_int()?;
            self.expect(")")?;
            return Ok(SymbolExpr::Angular { k });
        }
        if self.eat("ind(") {
            let center = self.complex()?;
            self.expect(",")?;
            let a = self.real()?;
            self.expect(",")?;
            let b = self.real()?;
            self.expect(")")?;
            return SymbolExpr::indicator(center, a, b).or_else(|e| self.at(start, e));
        }
        if self.eat("conj(") {
            let inner = self.expr(depth + 1)?;
            self.skip_ws();
            self.expect(")")?;
            return Ok(SymbolExpr::conj(inner));
        }
        if self.eat("(") {
            let save = self.pos;
            if let Ok(c) = self.complex() {
                if self.eat(")") {
                    return Ok(SymbolExpr::constant(c));
                }
            }
            self.pos = save;
            let inner = self.expr(depth + 1)?;
            self.skip_ws();
            self.expect(")")?;
            return Ok(inner);
        }
        if matches!(self.peek(), Some(b'0'..=b'9' | b'-' | b'.')) {
            let x = self.real()?;
            if self.eat("i") {
                return Ok(SymbolExpr::constant(Complex64::new(0.0, x)));
            }
            return Ok(SymbolExpr::constant(Complex64::new(x, 0.0)));
        }
        self.err("expected an atom")
    }

    fn at<T>(&self, pos: usize, e: FockError) -> Result<T> {
        match e {
            FockError::Admissibility(msg) => Err(FockError::Admissibility(format!(
                "{msg} (at position {pos})"
            ))),
            FockError::InvalidParameter(msg) => Err(FockError::Parse { pos, msg }),
            other => Err(other),
        }
    }
}

/// Parses the symbol text grammar. The result is validated, including the
/// admissibility rule.
pub fn parse_symbol(text: &str) -> Result<SymbolExpr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let g = p.expr(0)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("unexpected trailing input");
    }
    g.validate()?;
    Ok(g)
}
