//! Explicit fixed-step Runge–Kutta for scalar ODEs `y' = f(s, y)`.
//!
//! RK2 is Heun's method (explicit trapezoidal rule):
//!
//! ```text
//!  0 |
//!  1 | 1
//! ---+---------
//!    | 1/2 1/2
//! ```
//!
//! RK4 is the classic four-stage method:
//!
//! ```text
//!   0 |
//! 1/2 | 1/2
//! 1/2 | 0   1/2
//!   1 | 0   0   1
//! ----+----------------
//!     | 1/6 1/3 1/3 1/6
//! ```

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RkScheme {
    Rk2,
    Rk4,
}

impl RkScheme {
    pub fn order(self) -> u32 {
        match self {
            RkScheme::Rk2 => 2,
            RkScheme::Rk4 => 4,
        }
    }

    /// One step of size `h` from `(s, y)`. `h` may be negative.
    pub fn step<E>(
        self,
        mut f: impl FnMut(f64, f64) -> Result<f64, E>,
        s: f64,
        y: f64,
        h: f64,
    ) -> Result<f64, E> {
        match self {
            RkScheme::Rk2 => {
                let k1 = f(s, y)?;
                let k2 = f(s + h, y + h * k1)?;
                Ok(y + h * (k1 + k2) / 2.0)
            }
            RkScheme::Rk4 => {
                let half = h / 2.0;
                let k1 = f(s, y)?;
                let k2 = f(s + half, y + half * k1)?;
                let k3 = f(s + half, y + half * k2)?;
                let k4 = f(s + h, y + h * k3)?;
                Ok(y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
            }
        }
    }
}

impl fmt::Display for RkScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RkScheme::Rk2 => "rk2",
            RkScheme::Rk4 => "rk4",
        })
    }
}

impl FromStr for RkScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk2" | "heun" => Ok(RkScheme::Rk2),
            "rk4" => Ok(RkScheme::Rk4),
            other => Err(format!(
                "unknown Runge-Kutta scheme `{other}` (expected rk2 or rk4)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn decay(_: f64, y: f64) -> Result<f64, Infallible> {
        Ok(-y)
    }

    fn global_error(scheme: RkScheme, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut y = 1.0;
        for i in 0..n {
            y = scheme.step(decay, i as f64 * h, y, h).unwrap();
        }
        (y - (-1.0f64).exp()).abs()
    }

    #[test]
    fn observed_orders() {
        for scheme in [RkScheme::Rk2, RkScheme::Rk4] {
            let e1 = global_error(scheme, 10);
            let e2 = global_error(scheme, 20);
            let order = (e1 / e2).log2();
            assert!(
                (order - scheme.order() as f64).abs() < 0.1,
                "{scheme}: {order}"
            );
        }
    }

    #[test]
    fn time_dependent_rhs_uses_stage_times() {
        // y' = 2s is integrated exactly by both schemes.
        for scheme in [RkScheme::Rk2, RkScheme::Rk4] {
            let y = scheme
                .step(|s, _| Ok::<_, Infallible>(2.0 * s), 1.0, 0.0, 0.5)
                .unwrap();
            assert!((y - (1.5f64.powi(2) - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("RK4".parse::<RkScheme>().unwrap(), RkScheme::Rk4);
        assert_eq!("heun".parse::<RkScheme>().unwrap(), RkScheme::Rk2);
        assert!("euler".parse::<RkScheme>().is_err());
    }
}
