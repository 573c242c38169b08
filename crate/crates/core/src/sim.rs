//! Path integration of `dZ = f(Z,t) dt + (jump map) dC(t)`.
//!
//! Drift is integrated on the uniform grid `t_i = i·dt` (last step shortened
//! to land on `T`). Each step is split at jump times, so the integrator
//! lands exactly on `t_k`, records the left limit `Z(t_k-)`, applies the
//! jump map to it and records `Z(t_k)`. The output time axis is therefore
//! the union of the grid and the jump times, with two records (pre and
//! post) at every jump time.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::expr::{EvalError, Expr, Var};
use crate::io::{fmt_f64, read_table, TableError};
use crate::jump::{ito_jump, ClosedFormKind, JumpError, JumpScheme};
use crate::noise::{CompoundPoissonPath, NoiseError};
use crate::ode::RkScheme;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("drift step from t={t}: {source}")]
    Drift { t: f64, source: EvalError },
    #[error("jump {index} at t={t}: {source}")]
    Jump {
        index: usize,
        t: f64,
        source: JumpError,
    },
    #[error("state became non-finite at t={t}")]
    NonFinite { t: f64 },
    #[error("model has no reference solution")]
    MissingReference,
    #[error("reference at t={t}: {source}")]
    Reference { t: f64, source: EvalError },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("trajectory CSV: {0}")]
    Csv(String),
}

impl From<TableError> for SimError {
    fn from(e: TableError) -> Self {
        SimError::Csv(e.to_string())
    }
}

/// `dZ = f(Z,t) dt + g(Z,t) dC(t)`, `Z(0) = z0`, with an optional exact
/// solution written in terms of `t` and `c = C(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeModel {
    f: Expr,
    g: Expr,
    z0: f64,
    reference: Option<Expr>,
}

impl SdeModel {
    pub fn new(f: Expr, g: Expr, z0: f64, reference: Option<Expr>) -> Result<Self, SimError> {
        if f.references(Var::C) || g.references(Var::C) {
            return Err(SimError::InvalidModel(
                "drift and diffusion may only reference x and t".into(),
            ));
        }
        if reference.as_ref().is_some_and(|r| r.references(Var::X)) {
            return Err(SimError::InvalidModel(
                "the reference solution may only reference t and c".into(),
            ));
        }
        if !z0.is_finite() {
            return Err(SimError::InvalidModel(format!(
                "z0 must be finite, got {z0}"
            )));
        }
        Ok(SdeModel {
            f,
            g,
            z0,
            reference,
        })
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn reference(&self) -> Option<&Expr> {
        self.reference.as_ref()
    }
}

/// Which jump map is applied at jump times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpretation {
    /// `g(Z(t-),t)·R`.
    Ito,
    /// Series truncated after `K` terms.
    DiPaolaFalsone { order: usize },
    /// Jump ODE integrated with Runge–Kutta.
    MarcusOde { scheme: RkScheme, h_max: f64 },
    /// Exact jump-ODE flow for affine `g`.
    MarcusClosedForm(ClosedFormKind),
}

impl Interpretation {
    pub fn jump_scheme(&self) -> Option<JumpScheme> {
        match *self {
            Interpretation::Ito => None,
            Interpretation::DiPaolaFalsone { order } => {
                Some(JumpScheme::SeriesTruncation { order })
            }
            Interpretation::MarcusOde { scheme, h_max } => {
                Some(JumpScheme::OdeSolve { scheme, h_max })
            }
            Interpretation::MarcusClosedForm(kind) => Some(JumpScheme::ClosedForm(kind)),
        }
    }

    pub fn validate(&self) -> Result<(), JumpError> {
        self.jump_scheme().map_or(Ok(()), |s| s.validate())
    }

    /// Increment `Z(t) - Z(t-)` for pre-jump state `z` and amplitude `r`.
    pub fn jump(&self, g: &Expr, z: f64, t: f64, r: f64) -> Result<f64, JumpError> {
        match self.jump_scheme() {
            None => {
                if r == 0.0 {
                    return Ok(0.0);
                }
                ito_jump(g, z, t, r)
            }
            Some(s) => s.apply(g, z, t, r),
        }
    }

    /// Short label, also used in output file names.
    pub fn label(&self) -> String {
        self.to_string()
            .chars()
            .filter_map(|c| match c {
                ':' => Some('-'),
                '(' | ',' => Some('_'),
                ')' => None,
                c => Some(c),
            })
            .collect()
    }
}

/// Compact syntax: `ito`, `df:K`, `marcus:SCHEME:H_MAX`, `closed:KIND`,
/// e.g. `df:6`, `marcus:rk2:0.1`, `closed:linear(1,0)`.
impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interpretation::Ito => f.write_str("ito"),
            Interpretation::DiPaolaFalsone { order } => write!(f, "df:{order}"),
            Interpretation::MarcusOde { scheme, h_max } => write!(f, "marcus:{scheme}:{h_max}"),
            Interpretation::MarcusClosedForm(kind) => write!(f, "closed:{kind}"),
        }
    }
}

impl FromStr for Interpretation {
    type Err = JumpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| JumpError::InvalidScheme(format!("`{s}`: {why}"));
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (s, None),
        };
        let interp = match (head.to_ascii_lowercase().as_str(), rest) {
            ("ito", None) => Interpretation::Ito,
            ("df", Some(k)) => Interpretation::DiPaolaFalsone {
                order: k
                    .parse()
                    .map_err(|_| bad("K must be a non-negative integer"))?,
            },
            ("marcus", Some(rest)) => {
                let (scheme, h) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("expected marcus:SCHEME:H_MAX"))?;
                Interpretation::MarcusOde {
                    scheme: scheme.parse().map_err(|e: String| bad(&e))?,
                    h_max: h
                        .trim()
                        .parse()
                        .map_err(|_| bad("h_max must be a number"))?,
                }
            }
            ("closed", Some(kind)) => Interpretation::MarcusClosedForm(kind.parse()?),
            _ => {
                return Err(bad(
                    "expected ito, df:K, marcus:SCHEME:H_MAX or closed:KIND",
                ))
            }
        };
        interp.validate()?;
        Ok(interp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub drift_scheme: RkScheme,
    pub horizon: f64,
    pub interpretation: Interpretation,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(SimError::InvalidConfig(format!(
                "dt must satisfy 0 < dt ≤ T, got dt={} T={}",
                self.dt, self.horizon
            )));
        }
        self.interpretation
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    /// Number of drift steps; `T/dt` within 1e-9 of an integer counts as
    /// that integer, otherwise the last step is shortened.
    pub fn step_count(&self) -> usize {
        let ratio = self.horizon / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest.max(1.0) as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Time of grid point `i`; the last one is exactly `T`.
    pub fn grid_time(&self, i: usize) -> f64 {
        if i >= self.step_count() {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    /// Whether `t` coincides with a grid point (relative tolerance 1e-9).
    pub fn on_grid(&self, t: f64) -> bool {
        let i = (t / self.dt).round();
        t == self.horizon || (i >= 0.0 && (i * self.dt - t).abs() <= 1e-9 * self.dt.max(t.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Grid,
    PreJump,
    PostJump,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Grid => "grid",
            RecordKind::PreJump => "pre",
            RecordKind::PostJump => "post",
        }
    }
}

impl FromStr for RecordKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(RecordKind::Grid),
            "pre" => Ok(RecordKind::PreJump),
            "post" => Ok(RecordKind::PostJump),
            other => Err(SimError::Csv(format!("unknown record tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub z: f64,
    pub kind: RecordKind,
}

/// What happened at one jump; `post = pre + increment` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAudit {
    pub index: usize,
    pub t: f64,
    pub amplitude: f64,
    pub pre: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub jumps: Vec<JumpAudit>,
}

impl Trajectory {
    pub fn terminal(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.z)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    /// State of the last record at or before `t` (the post-jump value when a
    /// jump sits exactly at `t`). Exact on grid and jump times.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let n = self.records.partition_point(|r| r.t <= t);
        (n > 0).then(|| self.records[n - 1].z)
    }

    /// Header `t,z,tag`, floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,z,tag")?;
        for r in &self.records {
            writeln!(w, "{},{},{}", fmt_f64(r.t), fmt_f64(r.z), r.kind.as_str())?;
        }
        Ok(())
    }

    /// Reads the records written by [`write_csv`](Self::write_csv). The jump
    /// audit is rebuilt from consecutive pre/post pairs (amplitudes are not
    /// stored in the file and read back as NaN).
    pub fn read_csv<R: Read>(r: R) -> Result<Self, SimError> {
        let table = read_table(r)?;
        table.expect_header(&["t", "z", "tag"])?;
        let mut records = Vec::with_capacity(table.rows.len());
        for i in 0..table.rows.len() {
            records.push(Record {
                t: table.f64_at(i, 0)?,
                z: table.f64_at(i, 1)?,
                kind: table.str_at(i, 2)?.parse()?,
            });
        }
        let jumps = records
            .windows(2)
            .filter(|w| w[0].kind == RecordKind::PreJump && w[1].kind == RecordKind::PostJump)
            .enumerate()
            .map(|(index, w)| JumpAudit {
                index,
                t: w[0].t,
                amplitude: f64::NAN,
                pre: w[0].z,
                increment: w[1].z - w[0].z,
            })
            .collect();
        Ok(Trajectory { records, jumps })
    }
}

/// One explicit Runge–Kutta step of `dz/dt = f(z, t)`.
pub fn drift_step(f: &Expr, z: f64, t: f64, dt: f64, scheme: RkScheme) -> Result<f64, EvalError> {
    scheme.step(|s, y| f.eval(y, s, None), t, z, dt)
}

/// Integrates one path. See the module docs for the stepping rule.
pub fn simulate_path(
    model: &SdeModel,
    path: &CompoundPoissonPath,
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    if path.horizon() != config.horizon {
        return Err(SimError::InvalidConfig(format!(
            "noise horizon {} differs from simulation horizon {}",
            path.horizon(),
            config.horizon
        )));
    }
    let steps = config.step_count();
    let mut records = Vec::with_capacity(steps + 1 + 2 * path.len());
    let mut audits = Vec::with_capacity(path.len());
    let mut t = 0.0;
    let mut z = model.z0;
    records.push(Record {
        t,
        z,
        kind: RecordKind::Grid,
    });

    let advance = |z: f64, from: f64, to: f64| -> Result<f64, SimError> {
        let next = drift_step(&model.f, z, from, to - from, config.drift_scheme)
            .map_err(|source| SimError::Drift { t: from, source })?;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(SimError::NonFinite { t: to })
        }
    };

    let mut jumps = path.jumps().enumerate().peekable();
    for i in 1..=steps {
        let target = config.grid_time(i);
        while let Some(&(index, (tk, r))) = jumps.peek() {
            if tk > target {
                break;
            }
            jumps.next();
            if tk > t {
                z = advance(z, t, tk)?;
                t = tk;
            }
            records.push(Record {
                t,
                z,
                kind: RecordKind::PreJump,
            });
            let increment = config
                .interpretation
                .jump(&model.g, z, t, r)
                .map_err(|source| SimError::Jump { index, t, source })?;
            audits.push(JumpAudit {
                index,
                t,
                amplitude: r,
                pre: z,
                increment,
            });
            z += increment;
            if !z.is_finite() {
                return Err(SimError::NonFinite { t });
            }
            records.push(Record {
                t,
                z,
                kind: RecordKind::PostJump,
            });
        }
        if target > t {
            z = advance(z, t, target)?;
            t = target;
            records.push(Record {
                t,
                z,
                kind: RecordKind::Grid,
            });
        }
    }
    Ok(Trajectory {
        records,
        jumps: audits,
    })
}

fn eval_reference(reference: &Expr, t: f64, c: f64) -> Result<f64, SimError> {
    reference
        .eval(0.0, t, Some(c))
        .map_err(|source| SimError::Reference { t, source })
}

/// Reference solution at each time in `grid`, using the càdlàg `C(t)`
/// (post-jump value at jump times).
pub fn reference_path(
    model: &SdeModel,
    path: &CompoundPoissonPath,
    grid: &[f64],
) -> Result<Vec<f64>, SimError> {
    let reference = model.reference().ok_or(SimError::MissingReference)?;
    grid.iter()
        .map(|&t| eval_reference(reference, t, path.c_value(t)?))
        .collect()
}

/// Reference solution aligned record-by-record with `traj`: pre-jump
/// records use the left limit `C(t-)`, every other record `C(t)`.
pub fn reference_for_trajectory(
    model: &SdeModel,
    path: &CompoundPoissonPath,
    traj: &Trajectory,
) -> Result<Vec<f64>, SimError> {
    let reference = model.reference().ok_or(SimError::MissingReference)?;
    traj.records
        .iter()
        .map(|r| {
            let c = match r.kind {
                RecordKind::PreJump => path.c_left_limit(r.t)?,
                _ => path.c_value(r.t)?,
            };
            eval_reference(reference, r.t, c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::noise::{sample_path, AmplitudeDistribution};

    fn model(f: &str, g: &str, z0: f64) -> SdeModel {
        SdeModel::new(
            parse(f).unwrap(),
            parse(g).unwrap(),
            z0,
            Some(parse("exp(t+c)").unwrap()),
        )
        .unwrap()
    }

    fn config(dt: f64, scheme: RkScheme, interpretation: Interpretation) -> SimConfig {
        SimConfig {
            dt,
            drift_scheme: scheme,
            horizon: 1.0,
            interpretation,
        }
    }

    const MARCUS_RK4: Interpretation = Interpretation::MarcusOde {
        scheme: RkScheme::Rk4,
        h_max: 1e-3,
    };

    #[test]
    fn drift_step_examples() {
        let zero = parse("0").unwrap();
        assert_eq!(
            drift_step(&zero, 1.234, 0.5, 0.1, RkScheme::Rk4).unwrap(),
            1.234
        );
        let one = parse("1").unwrap();
        for s in [RkScheme::Rk2, RkScheme::Rk4] {
            assert_eq!(drift_step(&one, 2.0, 0.0, 0.25, s).unwrap(), 2.25);
        }
        let lin = parse("x").unwrap();
        let z = drift_step(&lin, 1.0, 0.0, 0.01, RkScheme::Rk2).unwrap();
        assert!((z - 1.01005).abs() < 1e-15);
        assert!((z - 0.01f64.exp()).abs() <= 2e-7);
    }

    #[test]
    fn jump_free_path_is_exponential() {
        let m = model("x", "x", 1.0);
        let p = CompoundPoissonPath::from_jumps(1.0, &[]).unwrap();
        let traj = simulate_path(&m, &p, &config(1e-3, RkScheme::Rk4, MARCUS_RK4)).unwrap();
        assert!((traj.terminal() - std::f64::consts::E).abs() < 1e-10);
        assert_eq!(traj.records.len(), 1001);
        assert_eq!(
            traj.records[0],
            Record {
                t: 0.0,
                z: 1.0,
                kind: RecordKind::Grid
            }
        );
        assert_eq!(traj.records.last().unwrap().t, 1.0);
    }

    #[test]
    fn single_jump_marcus_versus_ito() {
        let r = 0.8;
        let m = model("x", "x", 1.0);
        let p = CompoundPoissonPath::from_jumps(1.0, &[(0.5, r)]).unwrap();
        let marcus = simulate_path(&m, &p, &config(1e-3, RkScheme::Rk4, MARCUS_RK4)).unwrap();
        assert!((marcus.terminal() - (1.0f64 + r).exp()).abs() < 1e-9);
        let ito = simulate_path(&m, &p, &config(1e-3, RkScheme::Rk4, Interpretation::Ito)).unwrap();
        assert!((ito.terminal() - std::f64::consts::E * (1.0 + r)).abs() < 1e-9);
    }

    #[test]
    fn jumps_split_the_grid() {
        let m = model("x", "x", 1.0);
        // One jump between grid points, one exactly on a grid point, two
        // inside the same step.
        let p = CompoundPoissonPath::from_jumps(
            1.0,
            &[(0.125, 0.1), (0.25, -0.2), (0.6, 0.3), (0.65, 0.1)],
        )
        .unwrap();
        let cfg = config(0.25, RkScheme::Rk2, Interpretation::Ito);
        let traj = simulate_path(&m, &p, &cfg).unwrap();
        let tags: Vec<(f64, RecordKind)> = traj.records.iter().map(|r| (r.t, r.kind)).collect();
        use RecordKind::*;
        assert_eq!(
            tags,
            vec![
                (0.0, Grid),
                (0.125, PreJump),
                (0.125, PostJump),
                (0.25, PreJump),
                (0.25, PostJump),
                (0.5, Grid),
                (0.6, PreJump),
                (0.6, PostJump),
                (0.65, PreJump),
                (0.65, PostJump),
                (0.75, Grid),
                (1.0, Grid),
            ]
        );
        for a in &traj.jumps {
            let again = cfg
                .interpretation
                .jump(m.g(), a.pre, a.t, a.amplitude)
                .unwrap();
            assert_eq!(again.to_bits(), a.increment.to_bits());
        }
        assert!(traj
            .times()
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] <= w[1]));
    }

    #[test]
    fn partial_last_step_lands_on_horizon() {
        let cfg = SimConfig {
            dt: 0.3,
            drift_scheme: RkScheme::Rk2,
            horizon: 1.0,
            interpretation: Interpretation::Ito,
        };
        assert_eq!(cfg.step_count(), 4);
        assert_eq!(cfg.grid_time(4), 1.0);
        let exact = SimConfig { dt: 0.1, ..cfg };
        assert_eq!(exact.step_count(), 10);
        assert!(exact.on_grid(0.3));
        assert!(!exact.on_grid(0.35));
    }

    #[test]
    fn zero_amplitudes_make_interpretations_agree() {
        let m = model("x", "x^2 + sin(x)", 1.0);
        let p = sample_path(10.0, 1.0, AmplitudeDistribution::Constant(0.0), 8).unwrap();
        assert!(!p.is_empty());
        let interps = [
            Interpretation::Ito,
            Interpretation::DiPaolaFalsone { order: 6 },
            Interpretation::MarcusOde {
                scheme: RkScheme::Rk2,
                h_max: 0.1,
            },
            Interpretation::MarcusClosedForm(ClosedFormKind::Linear { a: 1.0, b: 0.0 }),
        ];
        let trajs: Vec<_> = interps
            .iter()
            .map(|&i| simulate_path(&m, &p, &config(0.01, RkScheme::Rk2, i)).unwrap())
            .collect();
        for t in &trajs[1..] {
            assert_eq!(t.records, trajs[0].records);
        }
    }

    #[test]
    fn errors_are_annotated() {
        let m = SdeModel::new(parse("0").unwrap(), parse("ln(x)").unwrap(), -1.0, None).unwrap();
        let p = CompoundPoissonPath::from_jumps(1.0, &[(0.5, 1.0)]).unwrap();
        let err =
            simulate_path(&m, &p, &config(0.1, RkScheme::Rk2, Interpretation::Ito)).unwrap_err();
        assert!(matches!(err, SimError::Jump { index: 0, t, .. } if t == 0.5));

        let m = SdeModel::new(parse("1/(x-1.5)").unwrap(), parse("0").unwrap(), 1.5, None).unwrap();
        let err =
            simulate_path(&m, &p, &config(0.1, RkScheme::Rk2, Interpretation::Ito)).unwrap_err();
        assert!(matches!(err, SimError::Drift { t, .. } if t == 0.0));

        let m = model("x", "x", 1.0);
        let short = CompoundPoissonPath::from_jumps(2.0, &[]).unwrap();
        assert!(matches!(
            simulate_path(&m, &short, &config(0.1, RkScheme::Rk2, Interpretation::Ito)),
            Err(SimError::InvalidConfig(_))
        ));
        assert!(config(2.0, RkScheme::Rk2, Interpretation::Ito)
            .validate()
            .is_err());
    }

    #[test]
    fn model_validation() {
        let x = parse("x").unwrap();
        assert!(SdeModel::new(parse("c").unwrap(), x.clone(), 1.0, None).is_err());
        assert!(SdeModel::new(x.clone(), x.clone(), 1.0, Some(parse("x + c").unwrap())).is_err());
        assert!(SdeModel::new(x.clone(), x, f64::NAN, None).is_err());
    }

    #[test]
    fn reference_values() {
        let m = model("x", "x", 1.0);
        let empty = CompoundPoissonPath::from_jumps(1.0, &[]).unwrap();
        let one = CompoundPoissonPath::from_jumps(1.0, &[(0.5, 1.0)]).unwrap();
        assert_eq!(
            reference_path(&m, &empty, &[1.0]).unwrap(),
            vec![std::f64::consts::E]
        );
        assert_eq!(
            reference_path(&m, &one, &[0.5]).unwrap(),
            vec![1.5f64.exp()]
        );
        assert_eq!(reference_path(&m, &one, &[0.0]).unwrap(), vec![1.0]);
        let no_ref = SdeModel::new(parse("x").unwrap(), parse("x").unwrap(), 1.0, None).unwrap();
        assert_eq!(
            reference_path(&no_ref, &one, &[0.0]),
            Err(SimError::MissingReference)
        );
    }

    #[test]
    fn trajectory_reference_uses_left_limits() {
        let m = model("x", "x", 1.0);
        let p = CompoundPoissonPath::from_jumps(1.0, &[(0.5, 1.0)]).unwrap();
        let traj = simulate_path(&m, &p, &config(0.25, RkScheme::Rk4, MARCUS_RK4)).unwrap();
        let refs = reference_for_trajectory(&m, &p, &traj).unwrap();
        let pre = traj
            .records
            .iter()
            .position(|r| r.kind == RecordKind::PreJump)
            .unwrap();
        assert_eq!(refs[pre], 0.5f64.exp());
        assert_eq!(refs[pre + 1], 1.5f64.exp());
    }

    #[test]
    fn interpretation_syntax() {
        for s in [
            "ito",
            "df:6",
            "marcus:rk2:0.1",
            "marcus:rk4:0.001",
            "closed:linear(1,0)",
            "closed:constant(2)",
        ] {
            let i: Interpretation = s.parse().unwrap();
            assert_eq!(i.to_string(), s);
        }
        assert!("df:0".parse::<Interpretation>().is_err());
        assert!("marcus:rk3:0.1".parse::<Interpretation>().is_err());
        assert!("stratonovich".parse::<Interpretation>().is_err());
        assert_eq!(
            "marcus:rk2:0.1".parse::<Interpretation>().unwrap().label(),
            "marcus-rk2-0.1"
        );
        assert_eq!(
            "closed:linear(1,0)"
                .parse::<Interpretation>()
                .unwrap()
                .label(),
            "closed-linear_1_0"
        );
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let m = model("x", "x", 1.0);
        let p = sample_path(10.0, 1.0, AmplitudeDistribution::default(), 4).unwrap();
        let traj =
            simulate_path(&m, &p, &config(0.05, RkScheme::Rk2, Interpretation::Ito)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.records, traj.records);
        assert_eq!(back.jumps.len(), traj.jumps.len());
    }
}
