//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' nonneg-int)?
//! base   := number | identifier | '(' expr ')'
//! ```

use super::{PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), PolyError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut integral = true;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.src.get(self.pos) == Some(&b'.') {
                integral = false;
                self.pos += 1;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
            if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if self.src.get(self.pos).is_some_and(|d| d.is_ascii_digit()) {
                    integral = false;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let v: f64 = text.parse().map_err(|_| PolyError::Syntax {
                pos: start,
                message: format!("malformed number `{text}`"),
            })?;
            return Ok((Tok::Num(v, integral), start));
        }
        if c.is_ascii_alphabetic() {
            while self
                .src
                .get(self.pos)
                .is_some_and(|d| d.is_ascii_alphanumeric() || *d == b'_')
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok((Tok::Ident(text.to_string()), start));
        }
        Err(PolyError::Syntax {
            pos: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, vars: &'a [String]) -> Result<Self, PolyError> {
        let mut lexer = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let (tok, tok_pos) = lexer.next()?;
        Ok(Self {
            lexer,
            tok,
            tok_pos,
            vars,
        })
    }

    fn bump(&mut self) -> Result<(), PolyError> {
        let (t, p) = self.lexer.next()?;
        self.tok = t;
        self.tok_pos = p;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Syntax {
            pos: self.tok_pos,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let negate = if self.tok == Tok::Minus {
            self.bump()?;
            true
        } else {
            false
        };
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        while self.tok == Tok::Star {
            self.bump()?;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.base()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let pos = self.tok_pos;
        match self.tok {
            Tok::Num(v, true) if v <= u32::MAX as f64 => {
                self.bump()?;
                Ok(base.pow(v as u32))
            }
            Tok::Num(v, _) => Err(PolyError::BadExponent {
                pos,
                message: format!("`{v}` is not a non-negative integer"),
            }),
            Tok::Minus => Err(PolyError::BadExponent {
                pos,
                message: "negative exponents are not polynomial".into(),
            }),
            _ => Err(PolyError::BadExponent {
                pos,
                message: "expected an integer literal".into(),
            }),
        }
    }

    fn base(&mut self) -> Result<Polynomial, PolyError> {
        let n = self.vars.len();
        match self.tok.clone() {
            Tok::Num(v, _) => {
                self.bump()?;
                Ok(Polynomial::constant(n, v))
            }
            Tok::Ident(name) => {
                let Some(i) = self.vars.iter().position(|v| *v == name) else {
                    return Err(PolyError::UnknownIdentifier {
                        name,
                        pos: self.tok_pos,
                    });
                };
                self.bump()?;
                Ok(Polynomial::var(n, i))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::End => self.syntax("unexpected end of expression"),
            t => self.syntax(format!("unexpected token {t:?}")),
        }
    }
}

/// Parses `text` as a polynomial over the ordered variable list `variables`.
pub fn parse_polynomial(text: &str, variables: &[String]) -> Result<Polynomial, PolyError> {
    let mut p = Parser::new(text, variables)?;
    let out = p.expr()?;
    if p.tok != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ExponentVector;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn expands_square() {
        let p = parse_polynomial("rho^2 - 2*rho + 1", &v(&["rho"])).unwrap();
        assert_eq!(p.coeff(&ExponentVector::new(vec![2])), 1.0);
        assert_eq!(p.coeff(&ExponentVector::new(vec![1])), -2.0);
        assert_eq!(p.coeff(&ExponentVector::new(vec![0])), 1.0);
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn zero_literal() {
        let p = parse_polynomial("0", &v(&["rho"])).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn characteristic_polynomial() {
        let p = parse_polynomial(
            "s^2 + (5.3 + 2*r + r^2)*s + 0.96 + 4.8*r + 15.9*r^2 + 2*r^3 - 2*r^4",
            &v(&["s", "r"]),
        )
        .unwrap();
        assert_eq!(p.degree(), 4);
        assert!((p.evaluate(&[0.0, 0.0]).unwrap() - 0.96).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_and_parens() {
        let names = v(&["x"]);
        let p = parse_polynomial("-x^2", &names).unwrap();
        assert_eq!(p.evaluate(&[3.0]).unwrap(), -9.0);
        let q = parse_polynomial("(-x + 1)^2", &names).unwrap();
        assert_eq!(q.evaluate(&[3.0]).unwrap(), 4.0);
        let r = parse_polynomial("  2 *  x_ignored ", &v(&["x_ignored"])).unwrap();
        assert_eq!(r.evaluate(&[1.5]).unwrap(), 3.0);
    }

    #[test]
    fn errors() {
        let names = v(&["x"]);
        assert!(matches!(
            parse_polynomial("x + y", &names),
            Err(PolyError::UnknownIdentifier { ref name, pos: 4 }) if name == "y"
        ));
        assert!(matches!(parse_polynomial("x^2.5", &names), Err(PolyError::BadExponent { pos: 2, .. })));
        assert!(matches!(parse_polynomial("x^-1", &names), Err(PolyError::BadExponent { .. })));
        assert!(matches!(parse_polynomial("x + ", &names), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("(x", &names), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("x x", &names), Err(PolyError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_polynomial("x - -1", &names), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("x # 1", &names), Err(PolyError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn scientific_numbers() {
        let p = parse_polynomial("1e-3*x + 2.5E2", &v(&["x"])).unwrap();
        assert_eq!(p.evaluate(&[1000.0]).unwrap(), 251.0);
    }
}
