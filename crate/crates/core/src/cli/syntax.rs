//! Expression language: lexer, recursive-descent parser and canonical printer.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' INT)?
//! atom   := literal | matrix | '[' expr ',' expr ']' | 'ad' '(' expr ',' expr ',' INT ')'
//!         | 'd' '(' expr ')' | 'X' | NAME | '(' expr ')'
//! literal:= INT ('/' INT)? ('mod' INT)?
//! matrix := '[' row (',' row)* ']'      row := '[' entry (',' entry)* ']'
//! entry  := '-'? literal
//! ```
//!
//! A `[` followed by `[` and then a number or `-` starts a matrix; any other
//! `[` starts a commutator.

use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub numer: BigUint,
    pub denom: Option<BigUint>,
    pub modulus: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub negative: bool,
    pub value: Literal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Scalar(Literal),
    Matrix(Vec<Vec<Entry>>),
    Var(String),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Commutator(Box<Expr>, Box<Expr>),
    Ad(Box<Expr>, Box<Expr>, usize),
    Deriv(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigUint),
    Name(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "number `{n}`"),
            Tok::Name(s) => write!(f, "`{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            Tok::Int(s.parse().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            Tok::Name(s)
        } else {
            bump(&mut chars);
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '/' => Tok::Slash,
                ',' => Tok::Comma,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                _ => return Err(syntax(l, col, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token {
            tok,
            line: l,
            column: col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn int(&mut self) -> Result<BigUint> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(n)
            }
            other => Err(self.error(format!("expected a number, found {other}"))),
        }
    }

    fn small<T: TryFrom<u64>>(&mut self, what: &str) -> Result<T> {
        let n = self.int()?;
        u64::try_from(&n)
            .ok()
            .and_then(|v| T::try_from(v).ok())
            .ok_or_else(|| self.error(format!("{what} {n} is too large")))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.next();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.next();
            let n = self.small::<u32>("exponent")?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn literal(&mut self) -> Result<Literal> {
        let numer = self.int()?;
        let denom = if *self.peek() == Tok::Slash {
            self.next();
            let d = self.int()?;
            if d == BigUint::ZERO {
                return Err(self.error("zero denominator"));
            }
            Some(d)
        } else {
            None
        };
        let modulus = if *self.peek() == Tok::Name("mod".into()) {
            self.next();
            Some(self.small::<u64>("modulus")?)
        } else {
            None
        };
        Ok(Literal {
            numer,
            denom,
            modulus,
        })
    }

    fn starts_matrix(&self) -> bool {
        *self.peek() == Tok::LBracket
            && *self.peek_at(1) == Tok::LBracket
            && matches!(self.peek_at(2), Tok::Int(_) | Tok::Minus)
    }

    fn matrix(&mut self) -> Result<Expr> {
        self.expect(Tok::LBracket)?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LBracket)?;
            let mut row = Vec::new();
            loop {
                let negative = *self.peek() == Tok::Minus;
                if negative {
                    self.next();
                }
                row.push(Entry {
                    negative,
                    value: self.literal()?,
                });
                match self.peek() {
                    Tok::Comma => {
                        self.next();
                    }
                    Tok::RBracket => break,
                    other => {
                        return Err(self.error(format!("expected `,` or `]` in matrix row, found {other}")))
                    }
                }
            }
            self.next();
            if let Some(first) = rows.first() {
                let first: &Vec<Entry> = first;
                if first.len() != row.len() {
                    return Err(self.error(format!(
                        "matrix row has {} entries, expected {}",
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
            match self.peek() {
                Tok::Comma => {
                    self.next();
                }
                Tok::RBracket => {
                    self.next();
                    return Ok(Expr::Matrix(rows));
                }
                other => return Err(self.error(format!("expected `,` or `]` after matrix row, found {other}"))),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::Scalar(self.literal()?)),
            Tok::LBracket if self.starts_matrix() => self.matrix(),
            Tok::LBracket => {
                self.next();
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                self.expect(Tok::RBracket)?;
                Ok(Expr::Commutator(Box::new(a), Box::new(b)))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Name(name) => {
                self.next();
                let call = *self.peek() == Tok::LParen;
                match name.as_str() {
                    "X" => Ok(Expr::X),
                    "mod" => Err(self.error("`mod` must follow a number")),
                    "ad" if call => {
                        self.next();
                        let e = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let x = self.expr()?;
                        self.expect(Tok::Comma)?;
                        let n = self.small::<usize>("commutator depth")?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Ad(Box::new(e), Box::new(x), n))
                    }
                    "d" if call => {
                        self.next();
                        let a = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Deriv(Box::new(a)))
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            other => Err(self.error(format!("unexpected {other}"))),
        }
    }
}

/// Parses a complete expression.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after expression", p.peek())));
    }
    Ok(e)
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.numer)?;
        if let Some(d) = &self.denom {
            write!(f, "/{d}")?;
        }
        if let Some(p) = self.modulus {
            write!(f, " mod {p}")?;
        }
        Ok(())
    }
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Scalar(l) => write!(f, "{l}"),
            Expr::Matrix(rows) => {
                write!(f, "[")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "[")?;
                    for (j, e) in row.iter().enumerate() {
                        if j > 0 {
                            write!(f, ",")?;
                        }
                        if e.negative {
                            write!(f, "-")?;
                        }
                        write!(f, "{}", e.value)?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "]")
            }
            Expr::Var(name) => f.write_str(name),
            Expr::X => f.write_str("X"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " - ")?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Commutator(a, b) => {
                // `[[1,...` would read as a matrix, so a first argument that
                // is itself a bracket starting with a number gets parentheses.
                let first = a.to_string();
                let clash = !matches!(**a, Expr::Matrix(_))
                    && first
                        .strip_prefix('[')
                        .is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit() || c == '-'));
                if clash {
                    write!(f, "[({first}),")?;
                } else {
                    write!(f, "[{first},")?;
                }
                b.write_at(f, 0)?;
                write!(f, "]")
            }
            Expr::Ad(e, x, n) => {
                write!(f, "ad(")?;
                e.write_at(f, 0)?;
                write!(f, ",")?;
                x.write_at(f, 0)?;
                write!(f, ",{n})")
            }
            Expr::Deriv(a) => {
                write!(f, "d(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round_trip(text: &str) -> String {
        parse(text).unwrap().to_string()
    }

    #[test]
    fn matrix_literal() {
        let e = parse("[[0,1],[0,0]]").unwrap();
        let Expr::Matrix(rows) = &e else {
            panic!("not a matrix: {e:?}")
        };
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].len(), 2);
        assert_eq!(e.to_string(), "[[0,1],[0,0]]");
        assert_eq!(round_trip("[[ 1/2 , -3 mod 7 ]]"), "[[1/2,-3 mod 7]]");
    }

    #[test]
    fn commutator_node() {
        let e = parse("[e,x]").unwrap();
        assert_eq!(
            e,
            Expr::Commutator(Box::new(Expr::Var("e".into())), Box::new(Expr::Var("x".into())))
        );
        assert!(matches!(parse("[[e,x],x]").unwrap(), Expr::Commutator(..)));
        assert!(matches!(parse("[[[1]],x]").unwrap(), Expr::Commutator(..)));
    }

    #[test]
    fn polynomial_shape() {
        let e = parse("X^2*a2 + X*a1 + a0").unwrap();
        assert_eq!(e.to_string(), "X^2*a2 + X*a1 + a0");
        let Expr::Add(lhs, _) = &e else { panic!() };
        let Expr::Add(top, _) = &**lhs else { panic!() };
        let Expr::Mul(p, _) = &**top else { panic!() };
        assert_eq!(**p, Expr::Pow(Box::new(Expr::X), 2));
    }

    #[test]
    fn precedence_and_parentheses() {
        assert_eq!(round_trip("a + b*c^2"), "a + b*c^2");
        assert_eq!(round_trip("(a + b)*c"), "(a + b)*c");
        assert_eq!(round_trip("a - (b - c)"), "a - (b - c)");
        assert_eq!(round_trip("(a - b) - c"), "a - b - c");
        assert_eq!(round_trip("(a*b)^3"), "(a*b)^3");
        assert_eq!(round_trip("-a^2"), "-a^2");
        assert_eq!(round_trip("(-a)^2"), "(-a)^2");
        assert_eq!(round_trip("a*(b*c)"), "a*(b*c)");
        assert_eq!(round_trip("ad( e , x , 3 ) + d(a)"), "ad(e,x,3) + d(a)");
        assert_eq!(round_trip("[(1),2]"), "[1,2]");
        assert_eq!(round_trip("[([1,2]),x]"), "[([1,2]),x]");
        assert_eq!(round_trip("d*(a)"), "d*a");
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse("[[1,2],[3]]") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 11)),
            other => panic!("{other:?}"),
        }
        match parse("a +\n  * b") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse("[[1,2],[3,]]").is_err());
        assert!(parse("a $ b").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("a b").is_err());
        assert!(parse("").is_err());
        assert!(parse("x^y").is_err());
    }

    fn arb_literal() -> impl Strategy<Value = Literal> {
        (0u32..50, prop::option::of(1u32..9), prop::option::of(prop::sample::select(vec![2u64, 5, 7])))
            .prop_map(|(n, d, m)| Literal {
                numer: n.into(),
                denom: d.map(Into::into),
                modulus: m,
            })
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            arb_literal().prop_map(Expr::Scalar),
            prop::sample::select(vec!["a", "b", "e", "x", "d", "ad"]).prop_map(|s| Expr::Var(s.into())),
            Just(Expr::X),
            prop::collection::vec(prop::collection::vec((any::<bool>(), arb_literal()), 2), 1..3)
                .prop_map(|rows| Expr::Matrix(
                    rows.into_iter()
                        .map(|r| r.into_iter().map(|(negative, value)| Entry { negative, value }).collect())
                        .collect()
                )),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            let b = |e| Box::new(e);
            prop_oneof![
                inner.clone().prop_map(move |a| Expr::Neg(b(a))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
                (inner.clone(), 0u32..5).prop_map(move |(x, n)| Expr::Pow(b(x), n)),
                (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Commutator(b(x), b(y))),
                (inner.clone(), inner.clone(), 0usize..4).prop_map(move |(x, y, n)| Expr::Ad(b(x), b(y), n)),
                inner.prop_map(move |a| Expr::Deriv(b(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &e, "{}", text);
        }
    }
}
