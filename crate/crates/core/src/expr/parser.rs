//! Recursive descent parser for the expression grammar.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`, `*` `/`,
//! `+` `-`. Identifiers are the two coordinate names, a function name
//! followed by `(`, or otherwise a free parameter.

use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {}, found {found}", expected_list(.expected))]
    Syntax {
        line: u32,
        col: u32,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown function `{name}` at {line}:{col}")]
    UnknownFunction { line: u32, col: u32, name: String },
    #[error("malformed number literal at {line}:{col}")]
    BadNumber { line: u32, col: u32 },
}

impl ParseError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownFunction { line, col, .. }
            | ParseError::BadNumber { line, col } => (*line, *col),
        }
    }
}

fn expected_list(expected: &[&'static str]) -> String {
    match expected {
        [] => "nothing".to_owned(),
        [one] => (*one).to_owned(),
        many => format!("one of {}", many.join(", ")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number `{v}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = source.char_indices().peekable();
    while let Some(&(start, ch)) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut advance = |chars: &mut std::iter::Peekable<std::str::CharIndices>| {
            let (_, c) = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        };
        match ch {
            ' ' | '\t' | '\r' | '\n' => {
                advance(&mut chars);
                continue;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                advance(&mut chars);
                let tok = match ch {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                tokens.push(Token { tok, line: tline, col: tcol });
            }
            '0'..='9' | '.' => {
                let mut end = start;
                let mut seen_dot = false;
                while let Some(&(i, c)) = chars.peek() {
                    match c {
                        '0'..='9' => {}
                        '.' if !seen_dot => seen_dot = true,
                        'e' | 'E' => {
                            // consume exponent: e[+-]?digits
                            end = i;
                            advance(&mut chars);
                            if let Some(&(_, s)) = chars.peek() {
                                if s == '+' || s == '-' {
                                    end += 1;
                                    advance(&mut chars);
                                }
                            }
                            let mut any = false;
                            while let Some(&(j, d)) = chars.peek() {
                                if d.is_ascii_digit() {
                                    any = true;
                                    end = j;
                                    advance(&mut chars);
                                } else {
                                    break;
                                }
                            }
                            if !any {
                                return Err(ParseError::BadNumber { line: tline, col: tcol });
                            }
                            break;
                        }
                        _ => break,
                    }
                    end = i;
                    advance(&mut chars);
                }
                let text = &source[start..=end];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::BadNumber { line: tline, col: tcol })?;
                tokens.push(Token { tok: Tok::Num(value), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i;
                        advance(&mut chars);
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    tok: Tok::Ident(source[start..=end].to_owned()),
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: vec!["number", "identifier", "operator", "`(`"],
                    found: format!("`{other}`"),
                });
            }
        }
    }
    tokens.push(Token { tok: Tok::Eof, line, col });
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: [&'a str; 2],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(vec![what]))
        }
    }

    fn unexpected(&self, expected: Vec<&'static str>) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected,
            found: t.tok.to_string(),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    // factor := '-' factor | power
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    // power := atom ('^' factor)?   -- right associative, exponent may be signed
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (line, col) = (self.peek().line, self.peek().col);
                self.bump();
                if name == self.coords[0] {
                    return Ok(Expr::Coord(0));
                }
                if name == self.coords[1] {
                    return Ok(Expr::Coord(1));
                }
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { line, col, name })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if Func::from_name(&name).is_some() {
                    return Err(self.unexpected(vec!["`(` after function name"]));
                }
                Ok(Expr::Param(name))
            }
            _ => Err(self.unexpected(vec!["number", "identifier", "`(`", "`-`"])),
        }
    }
}

/// Parses with the default coordinate names `t1`, `t2`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    parse_with_coords(source, ["t1", "t2"])
}

/// Parses with explicit coordinate names; any other identifier becomes a
/// parameter unless it is a function name applied to an argument.
pub fn parse_with_coords(source: &str, coords: [&str; 2]) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0, coords };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.unexpected(vec!["end of input", "operator"]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let e = parse("t1^2 + t2^2").unwrap();
        let expected = Expr::coord1().pow(Expr::num(2.0)) + Expr::coord2().pow(Expr::num(2.0));
        assert_eq!(e, expected);
    }

    #[test]
    fn negated_rational_with_parameter() {
        let e = parse("-(M*t1)/(t1^2+t2^2)").unwrap();
        let expected = -(Expr::param("M") * Expr::coord1())
            / (Expr::coord1().pow(Expr::num(2.0)) + Expr::coord2().pow(Expr::num(2.0)));
        assert_eq!(e, expected);
        assert_eq!(e.parameters(), vec!["M".to_owned()]);
    }

    #[test]
    fn malformed_input_reports_column() {
        let err = parse("2*^t1").unwrap_err();
        assert_eq!(err.position(), (1, 3));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = parse("tan(t1)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownFunction { ref name, .. } if name == "tan"));
    }

    #[test]
    fn power_is_right_associative_and_tighter_than_unary_minus() {
        let e = parse("2^3^2").unwrap();
        let expected = Expr::num(2.0).pow(Expr::num(3.0).pow(Expr::num(2.0)));
        assert_eq!(e, expected);
        // -t1^2 == -(t1^2)
        let n = parse("-t1^2").unwrap();
        assert_eq!(n, -(Expr::coord1().pow(Expr::num(2.0))));
        // signed exponents parse
        let s = parse("t1^-2").unwrap();
        assert_eq!(s, Expr::coord1().pow(-Expr::num(2.0)));
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        let err = parse("t1 + t2 )").unwrap_err();
        assert_eq!(err.position(), (1, 9));
    }

    #[test]
    fn custom_coordinate_names() {
        let e = parse_with_coords("x^2 + y", ["x", "y"]).unwrap();
        assert_eq!(e, Expr::coord1().pow(Expr::num(2.0)) + Expr::coord2());
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3*t1").unwrap();
        assert_eq!(e, Expr::num(1.5e-3) * Expr::coord1());
    }
}
