//! Recursive-descent parser for the coefficient expression language.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | primary
//! primary := number | "pi" | "y1" | "y2"
//!          | ("sin" | "cos" | "exp" | "abs") "(" expr ")"
//!          | ("min" | "max") "(" expr "," expr ")"
//!          | "(" expr ")"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```

use super::expr::{BinOp, BinaryFn, Expr, UnaryFn, Var};
use super::CoeffError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(usize, Tok), CoeffError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|v| (start, Tok::Num(v)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos])
                .expect("ascii identifier")
                .to_string();
            return Ok((start, Tok::Ident(name)));
        }
        Err(CoeffError::Syntax {
            offset: start,
            message: format!("unexpected character {:?}", c as char),
        })
    }

    fn number(&mut self, start: usize) -> Result<f64, CoeffError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(CoeffError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all ("2e" followed by an identifier is an error anyway)
                self.pos = save;
                return Err(CoeffError::Syntax {
                    offset: save,
                    message: "malformed exponent".into(),
                });
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| CoeffError::Syntax {
            offset: start,
            message: format!("malformed number {text:?}"),
        })?;
        if !value.is_finite() {
            return Err(CoeffError::Syntax {
                offset: start,
                message: format!("number {text:?} is not finite"),
            });
        }
        Ok(value)
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    offset: usize,
    tok: Tok,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, CoeffError> {
        let mut lexer = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let (offset, tok) = lexer.next_token()?;
        Ok(Parser { lexer, offset, tok })
    }

    fn bump(&mut self) -> Result<(), CoeffError> {
        let (offset, tok) = self.lexer.next_token()?;
        self.offset = offset;
        self.tok = tok;
        Ok(())
    }

    fn unexpected(&self, expected: &str) -> CoeffError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            other => format!("{other:?}"),
        };
        CoeffError::Syntax {
            offset: self.offset,
            message: format!("expected {expected}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), CoeffError> {
        if self.tok == tok {
            self.bump()
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expr(&mut self) -> Result<Expr, CoeffError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, CoeffError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, CoeffError> {
        match self.tok {
            Tok::Minus => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, CoeffError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset;
                self.bump()?;
                match name.as_str() {
                    "pi" => Ok(Expr::Pi),
                    "y1" => Ok(Expr::Var(Var::Y1)),
                    "y2" => Ok(Expr::Var(Var::Y2)),
                    "sin" | "cos" | "exp" | "abs" => {
                        let f = match name.as_str() {
                            "sin" => UnaryFn::Sin,
                            "cos" => UnaryFn::Cos,
                            "exp" => UnaryFn::Exp,
                            _ => UnaryFn::Abs,
                        };
                        self.expect(Tok::LParen, "'(' after function name")?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    "min" | "max" => {
                        let f = if name == "min" {
                            BinaryFn::Min
                        } else {
                            BinaryFn::Max
                        };
                        self.expect(Tok::LParen, "'(' after function name")?;
                        let a = self.expr()?;
                        self.expect(Tok::Comma, "',' between arguments")?;
                        let b = self.expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Expr::Call2(f, Box::new(a), Box::new(b)))
                    }
                    _ => Err(CoeffError::UnknownIdentifier { name, offset: at }),
                }
            }
            _ => Err(self.unexpected("an operand")),
        }
    }
}

/// Parses a coefficient expression.
pub fn parse(text: &str) -> Result<Expr, CoeffError> {
    if text.trim().is_empty() {
        return Err(CoeffError::Empty);
    }
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal() {
        assert_eq!(parse("1").unwrap(), Expr::Num(1.0));
        assert_eq!(parse("  2.5e-1 ").unwrap(), Expr::Num(0.25));
    }

    #[test]
    fn precedence() {
        let e = parse("1 + 2 * 3").unwrap();
        assert_eq!(e.eval([0.0, 0.0]).unwrap(), 7.0);
        let e = parse("-y1*y2").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Mul, _, _)));
        let e = parse("8 / 2 / 2").unwrap();
        assert_eq!(e.eval([0.0, 0.0]).unwrap(), 2.0);
        let e = parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval([0.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn functions() {
        let e = parse("2 + sin(2*pi*y1)").unwrap();
        assert!((e.eval([0.25, 0.0]).unwrap() - 3.0).abs() < 1e-15);
        let e = parse("max(y1, y2) - min(y1, y2)").unwrap();
        assert_eq!(e.eval([0.25, 0.75]).unwrap(), 0.5);
        let e = parse("abs(-3) * exp(0)").unwrap();
        assert_eq!(e.eval([0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn trailing_operator_reports_end_offset() {
        match parse("y1 +") {
            Err(CoeffError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse("y3 + 1"),
            Err(CoeffError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("1 + foo(2)"),
            Err(CoeffError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(parse(""), Err(CoeffError::Empty)));
        assert!(matches!(parse("(1"), Err(CoeffError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("1 2"), Err(CoeffError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("min(1)"), Err(CoeffError::Syntax { .. })));
        assert!(matches!(parse("1e999"), Err(CoeffError::Syntax { .. })));
        assert!(matches!(parse("3 $ 4"), Err(CoeffError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("2e"), Err(CoeffError::Syntax { .. })));
    }
}
