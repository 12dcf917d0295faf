//! Scalar expressions of two surface coordinates and named parameters.
//!
//! Expressions are parsed once into an immutable AST and then evaluated over
//! any numeric carrier; evaluation over [`Jet`](crate::jets::Jet)s supplies
//! every partial derivative the invariant machinery consumes. Coordinate
//! substitution composes ASTs, which is what the diffeomorphism-invariance
//! tests pull metrics back with.

mod eval;
mod parser;

pub use eval::EvalError;
pub use parser::{parse, parse_with_coords, ParseError};

use std::collections::BTreeMap;
use std::fmt;

/// Parameter name to value map; every free parameter must be bound before
/// evaluation.
pub type ParamBindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sgn,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sgn" => Func::Sgn,
            _ => return None,
        })
    }
}

/// Immutable expression tree. Evaluation is a pure function of the bindings,
/// so a parsed `Expr` can be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Coordinate index: 0 for the first surface coordinate, 1 for the second.
    Coord(usize),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Numeric literal; negative values canonicalize to a negated positive
    /// literal so that printing and re-parsing reproduces the tree.
    pub fn num(v: f64) -> Expr {
        if v.is_sign_negative() && v != 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn coord1() -> Expr {
        Expr::Coord(0)
    }

    pub fn coord2() -> Expr {
        Expr::Coord(1)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_owned())
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Bin(BinOp::Pow, Box::new(self), Box::new(exponent))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    /// Replaces the two coordinates by the given expressions. The substituted
    /// expressions are themselves functions of the coordinates, so the result
    /// evaluated at `(a, b)` equals the original at `(s1(a,b), s2(a,b))`.
    pub fn substitute(&self, s1: &Expr, s2: &Expr) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Coord(0) => s1.clone(),
            Expr::Coord(_) => s2.clone(),
            Expr::Param(name) => Expr::Param(name.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(s1, s2))),
            Expr::Bin(op, l, r) => Expr::Bin(
                *op,
                Box::new(l.substitute(s1, s2)),
                Box::new(r.substitute(s1, s2)),
            ),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(s1, s2))),
        }
    }

    /// Free parameter names, sorted.
    pub fn parameters(&self) -> Vec<String> {
        let mut set = std::collections::BTreeSet::new();
        self.collect_params(&mut set);
        set.into_iter().collect()
    }

    fn collect_params(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Coord(_) => {}
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(e) => e.collect_params(out),
            Expr::Bin(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Call(_, a) => a.collect_params(out),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Coord(_) | Expr::Param(_) | Expr::Call(..) => 5,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        }
    }

    fn fmt_with_coords(&self, f: &mut fmt::Formatter<'_>, coords: &[&str; 2]) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coord(i) => write!(f, "{}", coords[*i]),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                if e.prec() <= 3 {
                    write!(f, "(")?;
                    e.fmt_with_coords(f, coords)?;
                    write!(f, ")")
                } else {
                    e.fmt_with_coords(f, coords)
                }
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                let right_assoc = matches!(op, BinOp::Pow);
                let lparen = l.prec() < p || (l.prec() == p && right_assoc);
                let rparen = r.prec() < p || (r.prec() == p && !right_assoc);
                if lparen {
                    write!(f, "(")?;
                    l.fmt_with_coords(f, coords)?;
                    write!(f, ")")?;
                } else {
                    l.fmt_with_coords(f, coords)?;
                }
                write!(f, "{sym}")?;
                if rparen {
                    write!(f, "(")?;
                    r.fmt_with_coords(f, coords)?;
                    write!(f, ")")
                } else {
                    r.fmt_with_coords(f, coords)
                }
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_with_coords(f, coords)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with_coords(f, &["t1", "t2"])
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Add, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Sub, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Mul, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Div, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
