//! Scalar expressions in the state `x`, time `t` and, for reference
//! solutions only, the cumulative noise value `c`.
//!
//! Expressions are parsed from a small infix language (see [`parse`]),
//! evaluated as plain reals ([`Expr::eval`]) or as truncated Taylor
//! expansions in `x` ([`Expr::eval_jet`]). The jet path supplies every
//! `x`-derivative the series jump map needs without any symbolic
//! differentiation.

mod eval;
mod jet;
mod parse;

use std::fmt;

pub use self::eval::EvalError;
pub use self::jet::{jet_mul, Jet, JetError};
pub use self::parse::{parse, ParseError, ParseErrorKind};

/// Free variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// State.
    X,
    /// Time.
    T,
    /// Cumulative noise value `C(t)`; reference solutions only.
    C,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::C => "c",
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

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
            BinOp::Pow => PREC_POWER,
        }
    }
}

/// Elementary functions available with call syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Ln, Func::Sin, Func::Cos, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// One arm of a piecewise expression, active for `lo <= x < hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub expr: Expr,
}

/// Abstract syntax tree of a scalar function.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// Branches sorted by `lo`; the guards tile the real line.
    Piecewise(Vec<Branch>),
}

/// How smooth an expression is in `x`.
///
/// The truncated-series jump map needs derivatives of every order, so it is
/// only admissible for [`Regularity::Smooth`] expressions; the jump-ODE map
/// only needs to be able to evaluate the function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    /// Built from smooth primitives only (smooth wherever it is defined).
    Smooth,
    /// Contains piecewise nodes; jets are unavailable at breakpoints.
    PiecewiseSmooth,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiecewiseError {
    #[error("piecewise expression needs at least one branch")]
    Empty,
    #[error("first guard must start at -inf, found {0}")]
    UncoveredBelow(f64),
    #[error("last guard must end at inf, found {0}")]
    UncoveredAbove(f64),
    #[error("guard ({lo},{hi}) is empty or reversed")]
    EmptyGuard { lo: f64, hi: f64 },
    #[error("guards do not tile the line: gap or overlap between {prev_hi} and {next_lo}")]
    NotContiguous { prev_hi: f64, next_lo: f64 },
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Builds a piecewise node, sorting the branches and checking that the
    /// half-open guards `[lo, hi)` tile the whole real line.
    pub fn piecewise(mut branches: Vec<Branch>) -> Result<Expr, PiecewiseError> {
        if branches.is_empty() {
            return Err(PiecewiseError::Empty);
        }
        branches.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for b in &branches {
            if b.lo.is_nan() || b.hi.is_nan() || b.lo >= b.hi {
                return Err(PiecewiseError::EmptyGuard { lo: b.lo, hi: b.hi });
            }
        }
        let first = branches[0].lo;
        if first != f64::NEG_INFINITY {
            return Err(PiecewiseError::UncoveredBelow(first));
        }
        let last = branches[branches.len() - 1].hi;
        if last != f64::INFINITY {
            return Err(PiecewiseError::UncoveredAbove(last));
        }
        for w in branches.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(PiecewiseError::NotContiguous {
                    prev_hi: w[0].hi,
                    next_lo: w[1].lo,
                });
            }
        }
        Ok(Expr::Piecewise(branches))
    }

    /// True if `v` occurs anywhere in the tree.
    pub fn references(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(e) | Expr::Call(_, e) => e.references(v),
            Expr::Binary(_, a, b) => a.references(v) || b.references(v),
            Expr::Piecewise(branches) => branches.iter().any(|b| b.expr.references(v)),
        }
    }

    pub fn regularity(&self) -> Regularity {
        if self.has_piecewise() {
            Regularity::PiecewiseSmooth
        } else {
            Regularity::Smooth
        }
    }

    fn has_piecewise(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.has_piecewise(),
            Expr::Binary(_, a, b) => a.has_piecewise() || b.has_piecewise(),
            Expr::Piecewise(_) => true,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(v) if v.is_sign_negative() => PREC_UNARY,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) | Expr::Piecewise(_) => PREC_ATOM,
            Expr::Neg(_) => PREC_UNARY,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_bound(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v == f64::INFINITY {
        f.write_str("inf")
    } else if v == f64::NEG_INFINITY {
        f.write_str("-inf")
    } else {
        write!(f, "{v}")
    }
}

/// Prints in the same syntax [`parse`] accepts, with the minimum of
/// parentheses needed to reproduce the tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < PREC_UNARY)
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                write_child(f, a, a.precedence() <= PREC_POWER)?;
                f.write_str("^")?;
                write_child(f, b, b.precedence() < PREC_UNARY)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                write_child(f, a, a.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, b.precedence() <= p)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Piecewise(branches) => {
                f.write_str("piecewise(")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str("(")?;
                    write_bound(f, b.lo)?;
                    f.write_str(",")?;
                    write_bound(f, b.hi)?;
                    write!(f, "):{}", b.expr)?;
                }
                f.write_str(")")
            }
        }
    }
}
