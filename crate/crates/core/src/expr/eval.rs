use super::jet::{self, Jet};
use super::{BinOp, Branch, Expr, Func, Var};

/// Largest integer exponent evaluated by repeated multiplication.
const MAX_EXACT_POWER: f64 = 1024.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
    #[error("`{expr}` is not differentiable at x = {x}")]
    NonSmoothPoint { expr: String, x: f64 },
    #[error("expression references `c` but no noise value was supplied")]
    MissingNoiseValue,
    #[error("`c` cannot be expanded as a jet in x")]
    NoiseInJet,
    #[error("`{expr}` evaluated to a non-finite value")]
    NonFinite { expr: String },
}

fn domain(e: &Expr, reason: &'static str) -> EvalError {
    EvalError::Domain {
        expr: e.to_string(),
        reason,
    }
}

fn integer_exponent(b: f64) -> Option<i32> {
    (b.fract() == 0.0 && b.abs() <= MAX_EXACT_POWER).then_some(b as i32)
}

fn powi_exact(a: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n.unsigned_abs() {
        acc *= a;
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

fn find_branch(branches: &[Branch], x: f64) -> Option<&Branch> {
    branches.iter().find(|b| b.lo <= x && x < b.hi)
}

impl Expr {
    /// Evaluates at state `x`, time `t` and (reference solutions only)
    /// noise value `c`.
    pub fn eval(&self, x: f64, t: f64, c: Option<f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::C) => c.ok_or(EvalError::MissingNoiseValue)?,
            Expr::Neg(e) => -e.eval(x, t, c)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, t, c)?;
                let b = b.eval(x, t, c)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(domain(self, "zero raised to a negative power"));
                        }
                        match integer_exponent(b) {
                            Some(n) => powi_exact(a, n),
                            None if a <= 0.0 => {
                                return Err(domain(
                                    self,
                                    "non-integer power of a non-positive base",
                                ))
                            }
                            None => a.powf(b),
                        }
                    }
                }
            }
            Expr::Call(func, e) => {
                let a = e.eval(x, t, c)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(domain(self, "logarithm of a non-positive number"));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain(self, "square root of a negative number"));
                        }
                        a.sqrt()
                    }
                }
            }
            Expr::Piecewise(branches) => match find_branch(branches, x) {
                Some(b) => b.expr.eval(x, t, c)?,
                None => return Err(domain(self, "no branch covers x")),
            },
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite {
                expr: self.to_string(),
            });
        }
        Ok(v)
    }

    /// Truncated Taylor expansion in `x` about `x0`, to order `order`.
    pub fn eval_jet(&self, x0: f64, t: f64, order: usize) -> Result<Jet, EvalError> {
        let coeffs = self.jet_coeffs(x0, t, order)?;
        Ok(Jet::from_parts(x0, coeffs))
    }

    fn jet_coeffs(&self, x0: f64, t: f64, order: usize) -> Result<Vec<f64>, EvalError> {
        let constant = |v: f64| {
            let mut c = vec![0.0; order + 1];
            c[0] = v;
            c
        };
        let out = match self {
            Expr::Const(v) => constant(*v),
            Expr::Var(Var::X) => Jet::variable(x0, order).coeffs().to_vec(),
            Expr::Var(Var::T) => constant(t),
            Expr::Var(Var::C) => return Err(EvalError::NoiseInJet),
            Expr::Neg(e) => jet::neg(&e.jet_coeffs(x0, t, order)?),
            Expr::Binary(op, a, b) => {
                let a = a.jet_coeffs(x0, t, order)?;
                let b = b.jet_coeffs(x0, t, order)?;
                match op {
                    BinOp::Add => jet::add(&a, &b),
                    BinOp::Sub => jet::sub(&a, &b),
                    BinOp::Mul => jet::mul(&a, &b),
                    BinOp::Div => {
                        if b[0] == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        jet::div(&a, &b)
                    }
                    BinOp::Pow => self.pow_jet(&a, &b)?,
                }
            }
            Expr::Call(func, e) => {
                let a = e.jet_coeffs(x0, t, order)?;
                match func {
                    Func::Exp => jet::exp(&a),
                    Func::Ln => {
                        if a[0] <= 0.0 {
                            return Err(domain(self, "logarithm of a non-positive number"));
                        }
                        jet::ln(&a)
                    }
                    Func::Sin => jet::sin_cos(&a).0,
                    Func::Cos => jet::sin_cos(&a).1,
                    Func::Sqrt => {
                        if a[0] < 0.0 {
                            return Err(domain(self, "square root of a negative number"));
                        }
                        if a[0] == 0.0 && order > 0 {
                            return Err(EvalError::NonSmoothPoint {
                                expr: self.to_string(),
                                x: x0,
                            });
                        }
                        jet::sqrt(&a)
                    }
                }
            }
            Expr::Piecewise(branches) => {
                if order > 0 && branches[1..].iter().any(|b| b.lo == x0) {
                    return Err(EvalError::NonSmoothPoint {
                        expr: self.to_string(),
                        x: x0,
                    });
                }
                match find_branch(branches, x0) {
                    Some(b) => b.expr.jet_coeffs(x0, t, order)?,
                    None => return Err(domain(self, "no branch covers x")),
                }
            }
        };
        if !out.iter().all(|c| c.is_finite()) {
            return Err(EvalError::NonFinite {
                expr: self.to_string(),
            });
        }
        Ok(out)
    }

    fn pow_jet(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, EvalError> {
        if a[0] == 0.0 && b[0] < 0.0 {
            return Err(domain(self, "zero raised to a negative power"));
        }
        let constant_exponent = b[1..].iter().all(|&v| v == 0.0);
        if let Some(n) = integer_exponent(b[0]).filter(|_| constant_exponent) {
            let one = {
                let mut one = vec![0.0; a.len()];
                one[0] = 1.0;
                one
            };
            let mut acc = one.clone();
            for _ in 0..n.unsigned_abs() {
                acc = jet::mul(&acc, a);
            }
            return Ok(if n < 0 { jet::div(&one, &acc) } else { acc });
        }
        if a[0] <= 0.0 {
            return Err(domain(self, "non-integer power of a non-positive base"));
        }
        let exponent_times_log = jet::mul(b, &jet::ln(a));
        Ok(jet::exp_with(&exponent_times_log, a[0].powf(b[0])))
    }
}
