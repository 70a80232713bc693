//! Text grammar:
//!
//! ```text
//! poly   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := integer | 'g' ['^' integer] | '[' integer (',' integer)* ']'
//!         | 'x' index ['^' integer]
//! ```
//!
//! Integers are reduced into the prime subfield; `g` is the power-basis
//! generator and `[c0,c1,..]` an explicit coefficient vector. Whitespace is
//! ignored.

use super::{Monomial, MultiPoly, PolyError, DEFAULT_DEGREE_CAP};
use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(u64),
    Var(String),
    Gen,
    Plus,
    Minus,
    Star,
    Caret,
    LBracket,
    RBracket,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PolyError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '[' => out.push((start, Tok::LBracket)),
            ']' => out.push((start, Tok::RBracket)),
            ',' => out.push((start, Tok::Comma)),
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v = text[start..i].parse::<u64>().map_err(|_| PolyError::Syntax {
                    pos: start,
                    msg: "integer too large".into(),
                })?;
                out.push((start, Tok::Int(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                out.push((start, if word == "g" { Tok::Gen } else { Tok::Var(word.to_string()) }));
                continue;
            }
            other => {
                return Err(PolyError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    fs: &'a FieldSpec,
    nvars: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Syntax {
            pos: self.offset(),
            msg: msg.to_string(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn exponent(&mut self) -> Result<u64, PolyError> {
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Int(e)) => Ok(e),
                _ => {
                    self.pos -= 1;
                    Err(self.err("expected integer exponent"))
                }
            }
        } else {
            Ok(1)
        }
    }

    fn term(&mut self, negate: bool) -> Result<(Monomial, u32), PolyError> {
        let fs = self.fs;
        let mut coeff = if negate { fs.neg_raw(1) } else { 1 };
        let mut exps = vec![0u16; self.nvars];
        loop {
            let start = self.offset();
            match self.next() {
                Some(Tok::Int(v)) => {
                    coeff = fs.mul_raw(coeff, (v % fs.p() as u64) as u32);
                }
                Some(Tok::Gen) => {
                    if fs.m() == 1 {
                        return Err(PolyError::CoefficientNotInField("g".into()));
                    }
                    let e = self.exponent()?;
                    coeff = fs.mul_raw(coeff, fs.pow_raw(fs.alpha().index(), e));
                }
                Some(Tok::LBracket) => {
                    let mut digits = Vec::new();
                    loop {
                        match self.next() {
                            Some(Tok::Int(v)) => digits.push(v),
                            _ => {
                                self.pos -= 1;
                                return Err(self.err("expected integer in coefficient vector"));
                            }
                        }
                        match self.next() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::RBracket) => break,
                            _ => {
                                self.pos -= 1;
                                return Err(self.err("expected `,` or `]`"));
                            }
                        }
                    }
                    let text = format!("{digits:?}");
                    if digits.len() > fs.m() as usize || digits.iter().any(|&d| d >= fs.p() as u64) {
                        return Err(PolyError::CoefficientNotInField(text));
                    }
                    let d: Vec<u32> = digits.iter().map(|&d| d as u32).collect();
                    let c = fs
                        .from_coeffs(&d)
                        .map_err(|_| PolyError::CoefficientNotInField(text))?;
                    coeff = fs.mul_raw(coeff, c.index());
                }
                Some(Tok::Var(name)) => {
                    let idx = name
                        .strip_prefix('x')
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|&i| i >= 1 && i <= self.nvars)
                        .ok_or(PolyError::UnknownVariable(name.clone()))?;
                    let e = self.exponent()?;
                    let total = exps[idx - 1] as u64 + e;
                    exps[idx - 1] = u16::try_from(total).map_err(|_| PolyError::Syntax {
                        pos: start,
                        msg: "exponent too large".into(),
                    })?;
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected a factor"));
                }
            }
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((Monomial(exps), coeff))
    }

    fn poly(&mut self) -> Result<MultiPoly, PolyError> {
        let mut out = MultiPoly::zero(self.fs, self.nvars);
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            None => return Err(self.err("empty polynomial")),
            _ => {}
        }
        loop {
            let (m, c) = self.term(negate)?;
            out.add_term_raw(m, c);
            match self.next() {
                None => break,
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                Some(_) => {
                    self.pos -= 1;
                    return Err(self.err("expected `+` or `-`"));
                }
            }
        }
        Ok(out)
    }
}

/// Parses a polynomial in variables `x1..x{nvars}` with the default degree
/// cap.
pub fn parse_poly(text: &str, fs: &FieldSpec, nvars: usize) -> Result<MultiPoly, PolyError> {
    parse_poly_with_cap(text, fs, nvars, DEFAULT_DEGREE_CAP)
}

pub fn parse_poly_with_cap(
    text: &str,
    fs: &FieldSpec,
    nvars: usize,
    cap: u32,
) -> Result<MultiPoly, PolyError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
        fs,
        nvars,
        end: text.len(),
    };
    let p = parser.poly()?;
    if let Some(d) = p.total_degree() {
        if d > cap {
            return Err(PolyError::DegreeCap { degree: d, cap });
        }
    }
    Ok(p)
}
