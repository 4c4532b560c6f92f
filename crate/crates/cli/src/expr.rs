//! A small, total arithmetic language over coordinates.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names are the coordinates `x` and `y`, the constants `pi` and `e`, and
//! the functions `min`, `max`, `abs`, `sqrt`, `exp`, `log`, `sin`, `cos`
//! and `atan2`. `^` binds tighter than unary minus and associates to the
//! right, so `-x^2^3` is `-(x^(2^3))`. Evaluation never fails; invalid
//! operations produce NaN or infinities, which callers reject.

use orlicz_obstacle::{Error, Result};

/// Nesting limit for parentheses, calls, signs and powers.
pub const MAX_DEPTH: usize = 64;

/// Length limit in characters; bounds the depth of operator chains.
pub const MAX_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Atan2,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }

    /// Allowed argument counts, inclusive.
    fn arity(self) -> (usize, usize) {
        match self {
            Func::Min | Func::Max => (1, usize::MAX),
            Func::Atan2 => (2, 2),
            _ => (1, 1),
        }
    }

    fn apply(self, args: &[f64]) -> f64 {
        match self {
            Func::Min => args.iter().copied().fold(f64::INFINITY, f64::min),
            Func::Max => args.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Func::Abs => args[0].abs(),
            Func::Sqrt => args[0].sqrt(),
            Func::Exp => args[0].exp(),
            Func::Log => args[0].ln(),
            Func::Sin => args[0].sin(),
            Func::Cos => args[0].cos(),
            Func::Atan2 => args[0].atan2(args[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Coordinate index: 0 for `x`, 1 for `y`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Parses `src` as if it started at `line`, `column` of a larger file.
    pub fn parse_at(src: &str, line: usize, column: usize) -> Result<Expr> {
        if src.chars().count() > MAX_LEN {
            return Err(Error::Parse {
                line,
                column,
                message: format!("expression longer than {MAX_LEN} characters"),
            });
        }
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
            line,
            column,
            depth: 0,
        };
        p.skip_space();
        if p.peek().is_none() {
            return Err(p.error("empty expression"));
        }
        let e = p.sum()?;
        p.skip_space();
        match p.peek() {
            None => Ok(e),
            Some(c) => Err(p.error(format!("unexpected `{c}`"))),
        }
    }

    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_at(src, 1, 1)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(e) => -e.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let v: Vec<f64> = args.iter().map(|a| a.eval(x)).collect();
                f.apply(&v)
            }
        }
    }

    /// Number of coordinates the expression reads: 0, 1 or 2.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
            Expr::Call(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    depth: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column + self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_space(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    /// Consumes `c` after optional whitespace.
    fn eat(&mut self, c: char) -> bool {
        self.skip_space();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nest<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        if self.depth >= MAX_DEPTH {
            return Err(self.error(format!("nesting deeper than {MAX_DEPTH}")));
        }
        self.depth += 1;
        let out = f(self);
        self.depth -= 1;
        out
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            e = Expr::Bin(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(e);
            };
            e = Expr::Bin(op, Box::new(e), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return self.nest(|p| Ok(Expr::Neg(Box::new(p.unary()?))));
        }
        if self.eat('+') {
            return self.nest(|p| p.unary());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.nest(|p| p.unary())?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_space();
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.nest(|p| p.sum())?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                // `2e` followed by something else: the `e` is not an exponent.
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => {
                self.pos = start;
                Err(self.error(format!("invalid number `{text}`")))
            }
        }
    }

    fn name(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        let simple = match name.as_str() {
            "x" => Some(Expr::Var(0)),
            "y" => Some(Expr::Var(1)),
            "pi" => Some(Expr::Num(std::f64::consts::PI)),
            "e" => Some(Expr::Num(std::f64::consts::E)),
            _ => None,
        };
        if let Some(e) = simple {
            return Ok(e);
        }
        let Some(func) = Func::from_name(&name) else {
            self.pos = start;
            return Err(self.error(format!("unknown name `{name}`")));
        };
        if !self.eat('(') {
            return Err(self.error(format!("`{name}` needs arguments in parentheses")));
        }
        let args = self.nest(|p| {
            let mut args = vec![p.sum()?];
            while p.eat(',') {
                args.push(p.sum()?);
            }
            Ok(args)
        })?;
        if !self.eat(')') {
            return Err(self.error("expected `,` or `)`"));
        }
        let (lo, hi) = func.arity();
        if args.len() < lo || args.len() > hi {
            self.pos = start;
            return Err(self.error(format!(
                "`{name}` takes {} argument(s), got {}",
                if lo == hi {
                    lo.to_string()
                } else {
                    format!("at least {lo}")
                },
                args.len()
            )));
        }
        Ok(Expr::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64, y: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&[x, y])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(eval("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(eval("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(eval("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(eval("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0, 0.0), 9.0);
    }

    #[test]
    fn names_and_functions() {
        assert_eq!(eval("max(x, y, 0.5)", 0.1, 0.2), 0.5);
        assert_eq!(eval("min(x)", 0.1, 0.2), 0.1);
        assert_eq!(eval("abs(x - y)", 0.1, 0.4), 0.30000000000000004);
        assert_eq!(eval("atan2(y, x)", -1.0, 0.0), std::f64::consts::PI);
        assert_eq!(eval("2e-3 + 1.5E2", 0.0, 0.0), 150.002);
        assert_eq!(eval("2*e", 0.0, 0.0), 2.0 * std::f64::consts::E);
        assert_eq!(eval("sqrt(x^2 + y^2)", 3.0, 4.0), 5.0);
        assert!(eval("log(0 - 1)", 0.0, 0.0).is_nan());
        assert_eq!(eval("1 / 0", 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn arity_tracks_coordinates() {
        assert_eq!(Expr::parse("1 + pi").unwrap().arity(), 0);
        assert_eq!(Expr::parse("x^2").unwrap().arity(), 1);
        assert_eq!(Expr::parse("max(1, y)").unwrap().arity(), 2);
    }

    #[test]
    fn errors_point_at_the_problem() {
        let cases = [
            ("", 1),
            ("1 +", 4),
            ("2 * (x + 1", 11),
            ("foo(x)", 1),
            ("sin x", 5),
            ("atan2(x)", 1),
            ("x $ y", 3),
            ("1.2.3", 4),
            ("max(x,)", 7),
        ];
        for (src, column) in cases {
            match Expr::parse(src) {
                Err(Error::Parse {
                    line, column: c, ..
                }) => assert_eq!((line, c), (1, column), "{src:?}"),
                other => panic!("{src:?}: {other:?}"),
            }
        }
        match Expr::parse_at("x +", 7, 10) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (7, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deep_nesting_is_rejected_without_overflow() {
        let deep = format!("{}1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(Expr::parse(&deep).is_err());
        let signs = "-".repeat(1000) + "1";
        assert!(Expr::parse(&signs).is_err());
        let long = vec!["1"; 3000].join("+");
        assert!(Expr::parse(&long).is_err());
        let chain = vec!["1"; 2000].join("+");
        assert_eq!(Expr::parse(&chain).unwrap().eval(&[]), 2000.0);
        let ok = format!(
            "{}1{}",
            "(".repeat(MAX_DEPTH - 1),
            ")".repeat(MAX_DEPTH - 1)
        );
        assert_eq!(Expr::parse(&ok).unwrap().eval(&[]), 1.0);
    }
}
