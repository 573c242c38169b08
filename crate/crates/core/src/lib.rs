//! Simulation of scalar stochastic differential equations driven by
//! Poisson white noise,
//!
//! ```text
//! dZ = f(Z, t) dt + g(Z, t) dC(t),    C(t) = Σ_{t_k ≤ t} R_k,
//! ```
//!
//! under three readings of the jump term: the Itô product, the truncated
//! `g⁽ʲ⁾` series correction, and the jump-parameter ODE (Marcus) flow.
//!
//! * [`expr`]: the function language, plain and Taylor-jet evaluation.
//! * [`noise`]: compound Poisson paths and the reproducible generator.
//! * [`jump`]: the jump maps.
//! * [`sim`]: event-split path integration.
//! * [`harness`]: ensembles, error metrics, convergence and comparison runs.

pub mod expr;
pub mod harness;
pub mod io;
pub mod jump;
pub mod noise;
pub mod ode;
pub mod sim;

pub use expr::{parse, Expr, Jet};
pub use jump::{
    closed_form_jump, df_coefficients, df_series_jump, ito_jump, marcus_jump, ClosedFormKind,
    JumpScheme,
};
pub use noise::{sample_path, AmplitudeDistribution, CompoundPoissonPath};
pub use ode::RkScheme;
pub use sim::{simulate_path, Interpretation, SdeModel, SimConfig, Trajectory};
