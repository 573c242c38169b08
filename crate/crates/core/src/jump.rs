//! State change at a single jump of the driving noise.
//!
//! Given the pre-jump state `z = Z(t-)`, the time `t` and the amplitude `r`,
//! each map returns the increment `Z(t) - Z(t-)`:
//!
//! * [`ito_jump`]: `g(z, t)·r`.
//! * [`df_series_jump`]: the truncated series `Σ_{j=1..K} g⁽ʲ⁾(z,t) rʲ/j!`
//!   with `g⁽¹⁾ = g`, `g⁽ʲ⁾ = g ∂ₓg⁽ʲ⁻¹⁾`.
//! * [`marcus_jump`]: `y(r)` for the flow `dy/dλ = g(z + y, t)`, `y(0) = 0`,
//!   integrated in the jump parameter `λ` by Runge–Kutta.
//! * [`closed_form_jump`]: exact flows for affine `g`.
//!
//! For analytic `g` the series is the Taylor expansion of the flow in `λ`,
//! which is also how [`df_coefficients`] computes the `g⁽ʲ⁾`.

use std::fmt;

use crate::expr::{EvalError, Expr, Var};
use crate::ode::RkScheme;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JumpError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("jump ODE substep {substep}: {source}")]
    Substep { substep: usize, source: EvalError },
    #[error("jump ODE state is not finite after substep {substep}")]
    NonFinite { substep: usize },
    #[error("invalid jump scheme: {0}")]
    InvalidScheme(String),
}

/// Affine diffusion coefficients with a closed-form flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormKind {
    /// `g(x) = a·x + b`, `a ≠ 0`.
    Linear { a: f64, b: f64 },
    /// `g(x) = b`.
    Constant { b: f64 },
}

impl fmt::Display for ClosedFormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedFormKind::Linear { a, b } => write!(f, "linear({a},{b})"),
            ClosedFormKind::Constant { b } => write!(f, "constant({b})"),
        }
    }
}

impl std::str::FromStr for ClosedFormKind {
    type Err = JumpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || JumpError::InvalidScheme(format!("cannot parse closed form `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args = inner
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let kind = match (s[..open].trim(), args.as_slice()) {
            ("linear", [a, b]) => ClosedFormKind::Linear { a: *a, b: *b },
            ("constant", [b]) => ClosedFormKind::Constant { b: *b },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl ClosedFormKind {
    pub fn validate(&self) -> Result<(), JumpError> {
        match *self {
            ClosedFormKind::Linear { a, b } if a == 0.0 || !a.is_finite() || !b.is_finite() => {
                Err(JumpError::InvalidScheme(format!(
                    "linear closed form needs finite a != 0, got a={a}, b={b}"
                )))
            }
            ClosedFormKind::Constant { b } if !b.is_finite() => Err(JumpError::InvalidScheme(
                format!("constant closed form needs finite b, got {b}"),
            )),
            _ => Ok(()),
        }
    }
}

/// How the jump increment is computed beyond the plain Itô product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpScheme {
    SeriesTruncation { order: usize },
    OdeSolve { scheme: RkScheme, h_max: f64 },
    ClosedForm(ClosedFormKind),
}

impl JumpScheme {
    pub fn validate(&self) -> Result<(), JumpError> {
        match *self {
            JumpScheme::SeriesTruncation { order } if order < 1 => Err(JumpError::InvalidScheme(
                "K ≥ 1 required for the series truncation".into(),
            )),
            JumpScheme::OdeSolve { h_max, .. } if !(h_max.is_finite() && h_max > 0.0) => Err(
                JumpError::InvalidScheme(format!("h_max must be finite and positive, got {h_max}")),
            ),
            JumpScheme::ClosedForm(kind) => kind.validate(),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, g: &Expr, z: f64, t: f64, r: f64) -> Result<f64, JumpError> {
        match *self {
            JumpScheme::SeriesTruncation { order } => df_series_jump(g, z, t, r, order),
            JumpScheme::OdeSolve { scheme, h_max } => marcus_jump(g, z, t, r, scheme, h_max),
            JumpScheme::ClosedForm(kind) => Ok(closed_form_jump(kind, z, r)),
        }
    }
}

pub fn ito_jump(g: &Expr, z: f64, t: f64, r: f64) -> Result<f64, JumpError> {
    Ok(g.eval(z, t, None)? * r)
}

/// Taylor coefficients `a_1..=a_order` (index 0 holds `a_0 = 0`) of the
/// jump-parameter flow `y(λ)` of `dy/dλ = g(z + y, t)`.
///
/// With `G(δ) = Σ g_m δ^m` the `x`-jet of `g` at `z`, the coefficients obey
/// `(k+1)·a_{k+1} = [λ^k] G(y(λ))`. Powers of `y` are kept in a triangular
/// table `pow[m][k] = [λ^k] y^m`, filled as each `a_k` becomes known, so
/// the whole recursion costs O(K³).
pub fn series_coefficients(g: &Expr, z: f64, t: f64, order: usize) -> Result<Vec<f64>, JumpError> {
    if order < 1 {
        return Err(JumpError::InvalidScheme(
            "K ≥ 1 required for the series truncation".into(),
        ));
    }
    let jet = g.eval_jet(z, t, order - 1)?;
    let gm = jet.coeffs();
    let mut a = vec![0.0; order + 1];
    a[1] = gm[0];
    // pow[m][k] for 1 <= m <= k < order.
    let mut pow = vec![vec![0.0; order]; order];
    for k in 1..order {
        pow[1][k] = a[k];
        for m in 2..=k {
            let mut s = 0.0;
            for i in 1..=(k - m + 1) {
                s += a[i] * pow[m - 1][k - i];
            }
            pow[m][k] = s;
        }
        let mut coeff = 0.0;
        for m in 1..=k {
            coeff += gm[m] * pow[m][k];
        }
        a[k + 1] = coeff / (k + 1) as f64;
    }
    Ok(a)
}

/// `[g⁽¹⁾(z,t), ..., g⁽ᴷ⁾(z,t)]` from the recursion `g⁽ʲ⁾ = g ∂ₓg⁽ʲ⁻¹⁾`.
///
/// Fails with [`EvalError::NonSmoothPoint`] where `g` has no jet, i.e.
/// where the series interpretation is undefined.
pub fn df_coefficients(g: &Expr, z: f64, t: f64, order: usize) -> Result<Vec<f64>, JumpError> {
    let a = series_coefficients(g, z, t, order)?;
    let mut factorial = 1.0;
    Ok((1..=order)
        .map(|k| {
            factorial *= k as f64;
            a[k] * factorial
        })
        .collect())
}

/// The `order`-term partial sum `Σ_{j=1..K} g⁽ʲ⁾(z,t) rʲ/j!`.
pub fn df_series_jump(g: &Expr, z: f64, t: f64, r: f64, order: usize) -> Result<f64, JumpError> {
    if r == 0.0 {
        if order < 1 {
            return Err(JumpError::InvalidScheme(
                "K ≥ 1 required for the series truncation".into(),
            ));
        }
        return Ok(0.0);
    }
    let a = series_coefficients(g, z, t, order)?;
    let mut sum = 0.0;
    let mut rp = 1.0;
    for ak in &a[1..] {
        rp *= r;
        sum += ak * rp;
    }
    Ok(sum)
}

/// Number of equal substeps used to integrate the jump ODE from 0 to `r`.
pub fn substep_count(r: f64, h_max: f64) -> usize {
    ((r.abs() / h_max).ceil() as usize).max(1)
}

/// Solves `dy/dλ = g(z + y, t)`, `y(0) = 0` up to `λ = r` with
/// `max(1, ceil(|r|/h_max))` equal Runge–Kutta substeps. Negative `r`
/// integrates with a negative step. When `g` does not depend on `x` the
/// flow is `g·r` and is returned directly.
pub fn marcus_jump(
    g: &Expr,
    z: f64,
    t: f64,
    r: f64,
    scheme: RkScheme,
    h_max: f64,
) -> Result<f64, JumpError> {
    if !(h_max.is_finite() && h_max > 0.0) {
        return Err(JumpError::InvalidScheme(format!(
            "h_max must be finite and positive, got {h_max}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if !g.references(Var::X) {
        return ito_jump(g, z, t, r);
    }
    let n = substep_count(r, h_max);
    let h = r / n as f64;
    let mut y = 0.0;
    for substep in 0..n {
        let lambda = substep as f64 * h;
        y = scheme
            .step(|_, y| g.eval(z + y, t, None), lambda, y, h)
            .map_err(|source| JumpError::Substep { substep, source })?;
        if !y.is_finite() {
            return Err(JumpError::NonFinite { substep });
        }
    }
    Ok(y)
}

/// Exact flow: `(z + b/a)(e^{a r} − 1)` for `g = a x + b`, `b r` for `g = b`.
pub fn closed_form_jump(kind: ClosedFormKind, z: f64, r: f64) -> f64 {
    match kind {
        ClosedFormKind::Linear { a, b } => (z + b / a) * (a * r).exp_m1(),
        ClosedFormKind::Constant { b } => b * r,
    }
}
