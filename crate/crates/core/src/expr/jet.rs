//! Truncated Taylor expansions ("jets").
//!
//! A jet of order `K` at `x0` stores `c_k = h^(k)(x0) / k!` for
//! `k = 0..=K`. Arithmetic on jets propagates derivatives exactly up to
//! round-off. The slice kernels below all keep the zeroth coefficient equal
//! to the plain floating-point operation on the zeroth inputs, so an order-0
//! jet evaluates bit-identically to [`Expr::eval`](super::Expr::eval).

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("jet orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("jet base points differ: {left} vs {right}")]
    BasePointMismatch { left: f64, right: f64 },
    #[error("a jet needs at least one coefficient")]
    Empty,
    #[error("jet coefficient {index} is not finite")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base_point: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn new(base_point: f64, coeffs: Vec<f64>) -> Result<Jet, JetError> {
        if coeffs.is_empty() {
            return Err(JetError::Empty);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(JetError::NonFinite { index });
        }
        Ok(Jet { base_point, coeffs })
    }

    pub(crate) fn from_parts(base_point: f64, coeffs: Vec<f64>) -> Jet {
        debug_assert!(!coeffs.is_empty());
        Jet { base_point, coeffs }
    }

    /// `value + 0·δ + ...`
    pub fn constant(base_point: f64, value: f64, order: usize) -> Jet {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { base_point, coeffs }
    }

    /// The identity `x0 + δ`.
    pub fn variable(base_point: f64, order: usize) -> Jet {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = base_point;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { base_point, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `k`-th derivative at the base point, `k! · c_k`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut factorial = 1.0;
        for i in 2..=k {
            factorial *= i as f64;
        }
        self.coeffs[k] * factorial
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.order() != other.order() {
            return Err(JetError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        if self.base_point.to_bits() != other.base_point.to_bits() {
            return Err(JetError::BasePointMismatch {
                left: self.base_point,
                right: other.base_point,
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        Ok(Jet::from_parts(
            self.base_point,
            mul(&self.coeffs, &other.coeffs),
        ))
    }
}

/// Cauchy product of two jets of equal order at the same point.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet, JetError> {
    a.mul(b)
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|k| {
            let mut s = a[0] * b[k];
            for i in 1..=k {
                s += a[i] * b[k - i];
            }
            s
        })
        .collect()
}

/// `a / b`; caller guarantees `b[0] != 0`.
pub(crate) fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    for k in 0..a.len() {
        let mut s = a[k];
        for j in 1..=k {
            s -= b[j] * c[k - j];
        }
        c[k] = s / b[0];
    }
    c
}

/// `exp(a)` with a caller-supplied zeroth coefficient.
///
/// `c_k = (1/k) Σ_{j=1..k} j a_j c_{k-j}`
pub(crate) fn exp_with(a: &[f64], c0: f64) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    c[0] = c0;
    for k in 1..a.len() {
        let mut s = 0.0;
        for j in 1..=k {
            s += j as f64 * a[j] * c[k - j];
        }
        c[k] = s / k as f64;
    }
    c
}

pub(crate) fn exp(a: &[f64]) -> Vec<f64> {
    exp_with(a, a[0].exp())
}

/// `ln(a)`; caller guarantees `a[0] > 0`.
pub(crate) fn ln(a: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    c[0] = a[0].ln();
    for k in 1..a.len() {
        let mut s = 0.0;
        for j in 1..k {
            s += j as f64 * c[j] * a[k - j];
        }
        c[k] = (a[k] - s / k as f64) / a[0];
    }
    c
}

/// Returns `(sin(a), cos(a))`.
pub(crate) fn sin_cos(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..n {
        let mut ss = 0.0;
        let mut cc = 0.0;
        for j in 1..=k {
            let ja = j as f64 * a[j];
            ss += ja * c[k - j];
            cc += ja * s[k - j];
        }
        s[k] = ss / k as f64;
        c[k] = -cc / k as f64;
    }
    (s, c)
}

/// `sqrt(a)`; caller guarantees `a[0] > 0` when the order is positive.
pub(crate) fn sqrt(a: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    c[0] = a[0].sqrt();
    for k in 1..a.len() {
        let mut s = a[k];
        for j in 1..k {
            s -= c[j] * c[k - j];
        }
        c[k] = s / (2.0 * c[0]);
    }
    c
}
