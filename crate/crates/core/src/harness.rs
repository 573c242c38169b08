//! Monte Carlo ensembles, pathwise errors against the exact solution,
//! convergence studies and side-by-side interpretation runs.
//!
//! Path `i` of an ensemble with master seed `s` is sampled with seed
//! [`substream_seed(s, i)`](crate::noise::substream_seed). Members are
//! simulated in parallel; every reduction runs sequentially in path order,
//! so reports are bit-identical across runs and thread counts.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::io::{fmt_f64, read_table, TableError};
use crate::noise::{
    sample_path, substream_seed, AmplitudeDistribution, CompoundPoissonPath, NoiseError,
};
use crate::sim::{
    reference_for_trajectory, simulate_path, Interpretation, RecordKind, SdeModel, SimConfig,
    SimError, Trajectory,
};

/// Smallest reference magnitude used as a relative-error denominator.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("path {path}: {source}")]
    Noise { path: usize, source: NoiseError },
    #[error("path {path}: {source}")]
    Simulation { path: usize, source: SimError },
    #[error("trajectory has {trajectory} records but the reference has {reference}")]
    LengthMismatch { trajectory: usize, reference: usize },
    #[error("the error statistic needs a model with a reference solution")]
    MissingReference,
    #[error("CSV: {0}")]
    Csv(String),
}

impl From<TableError> for HarnessError {
    fn from(e: TableError) -> Self {
        HarnessError::Csv(e.to_string())
    }
}

/// Where ensemble members get their noise from.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    Sampled {
        intensity: f64,
        distribution: AmplitudeDistribution,
    },
    /// Prescribed paths; `n_paths` must equal their number.
    Fixed(Vec<CompoundPoissonPath>),
}

/// Per-path quantity a convergence study averages over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorStatistic {
    #[default]
    TerminalRelative,
    TerminalAbsolute,
    MaxRelative,
}

impl std::str::FromStr for ErrorStatistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "terminal_relative" => Ok(ErrorStatistic::TerminalRelative),
            "terminal_absolute" => Ok(ErrorStatistic::TerminalAbsolute),
            "max_relative" => Ok(ErrorStatistic::MaxRelative),
            other => Err(format!(
                "unknown statistic `{other}` (terminal_relative, terminal_absolute, max_relative)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub model: SdeModel,
    pub sim: SimConfig,
    pub noise: NoiseSource,
    pub n_paths: usize,
    pub seed: u64,
    /// Sorted grid times in `[0, T]` at which ensemble moments are taken.
    pub checkpoints: Vec<f64>,
    pub statistic: ErrorStatistic,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidConfig(m));
        self.sim
            .validate()
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        if self.n_paths < 1 {
            return invalid("n_paths must be at least 1".into());
        }
        match &self.noise {
            NoiseSource::Sampled {
                intensity,
                distribution,
            } => {
                if !(intensity.is_finite() && *intensity >= 0.0) {
                    return invalid(format!("intensity must be non-negative, got {intensity}"));
                }
                distribution
                    .validate()
                    .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            }
            NoiseSource::Fixed(paths) => {
                if paths.len() != self.n_paths {
                    return invalid(format!(
                        "{} fixed paths for n_paths = {}",
                        paths.len(),
                        self.n_paths
                    ));
                }
            }
        }
        if !self.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return invalid("checkpoints must be strictly increasing".into());
        }
        for &c in &self.checkpoints {
            if !(0.0..=self.sim.horizon).contains(&c) || !self.sim.on_grid(c) {
                return invalid(format!("checkpoint {c} is not a grid time in [0, T]"));
            }
        }
        Ok(())
    }

    /// Seed of path `index`, `None` for fixed paths.
    pub fn path_seed(&self, index: usize) -> Option<u64> {
        match self.noise {
            NoiseSource::Sampled { .. } => Some(substream_seed(self.seed, index as u64)),
            NoiseSource::Fixed(_) => None,
        }
    }

    pub fn path(&self, index: usize) -> Result<CompoundPoissonPath, HarnessError> {
        match &self.noise {
            NoiseSource::Sampled {
                intensity,
                distribution,
            } => sample_path(
                *intensity,
                self.sim.horizon,
                *distribution,
                substream_seed(self.seed, index as u64),
            )
            .map_err(|source| HarnessError::Noise {
                path: index,
                source,
            }),
            NoiseSource::Fixed(paths) => Ok(paths[index].clone()),
        }
    }

    fn with_interpretation(&self, interpretation: Interpretation) -> EnsembleConfig {
        let mut cfg = self.clone();
        cfg.sim.interpretation = interpretation;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathwiseError {
    pub terminal_abs_error: f64,
    pub terminal_rel_error: f64,
    pub max_rel_error: f64,
    /// Some reference magnitude fell below [`RELATIVE_ERROR_FLOOR`].
    pub floor_hit: bool,
}

/// Relative errors `|z − ref| / max(|ref|, 1e-300)` of `traj` against a
/// reference aligned record-by-record.
pub fn pathwise_error(traj: &Trajectory, reference: &[f64]) -> Result<PathwiseError, HarnessError> {
    if traj.records.len() != reference.len() || reference.is_empty() {
        return Err(HarnessError::LengthMismatch {
            trajectory: traj.records.len(),
            reference: reference.len(),
        });
    }
    let mut floor_hit = false;
    let mut rel = |z: f64, r: f64| {
        let scale = r.abs();
        if scale < RELATIVE_ERROR_FLOOR {
            floor_hit = true;
        }
        (z - r).abs() / scale.max(RELATIVE_ERROR_FLOOR)
    };
    let mut max_rel_error: f64 = 0.0;
    for (rec, &r) in traj.records.iter().zip(reference) {
        max_rel_error = max_rel_error.max(rel(rec.z, r));
    }
    let z = traj.terminal();
    let r = reference[reference.len() - 1];
    let terminal_rel_error = rel(z, r);
    Ok(PathwiseError {
        terminal_abs_error: (z - r).abs(),
        terminal_rel_error,
        max_rel_error,
        floor_hit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentStats {
    pub mean: f64,
    /// Unbiased sample variance (0 for a single sample).
    pub variance: f64,
    /// `sqrt(variance / n)`.
    pub std_error: f64,
}

impl MomentStats {
    /// Two-pass moments of data shifted by the first sample.
    pub fn from_samples(xs: &[f64]) -> MomentStats {
        let n = xs.len() as f64;
        let shift = xs[0];
        let d_mean = xs.iter().map(|x| x - shift).sum::<f64>() / n;
        let mean = shift + d_mean;
        let variance = if xs.len() > 1 {
            xs.iter().map(|x| (x - shift - d_mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MomentStats {
            mean,
            variance,
            std_error: (variance / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub t: f64,
    #[serde(flatten)]
    pub stats: MomentStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub index: usize,
    pub seed: Option<u64>,
    pub digest: String,
    pub n_jumps: usize,
    pub c_terminal: f64,
    pub terminal: f64,
    pub reference_terminal: Option<f64>,
    pub error: Option<PathwiseError>,
    pub checkpoint_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub mean_terminal_rel_error: f64,
    pub max_terminal_rel_error: f64,
    pub mean_terminal_abs_error: f64,
    pub max_rel_error: f64,
    pub floor_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub interpretation: Interpretation,
    pub seed: u64,
    pub paths: Vec<PathOutcome>,
    pub terminal: MomentStats,
    pub checkpoints: Vec<CheckpointStats>,
    pub errors: Option<ErrorSummary>,
}

/// The JSON summary document: everything in [`ErrorReport`] except the
/// per-path rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub interpretation: String,
    pub n_paths: usize,
    pub seed: u64,
    pub terminal: MomentStats,
    pub checkpoints: Vec<CheckpointStats>,
    pub errors: Option<ErrorSummary>,
}

impl ErrorReport {
    fn from_outcomes(cfg: &EnsembleConfig, paths: Vec<PathOutcome>) -> ErrorReport {
        let terminals: Vec<f64> = paths.iter().map(|p| p.terminal).collect();
        let checkpoints = cfg
            .checkpoints
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let xs: Vec<f64> = paths.iter().map(|p| p.checkpoint_values[j]).collect();
                CheckpointStats {
                    t,
                    stats: MomentStats::from_samples(&xs),
                }
            })
            .collect();
        let errs: Option<Vec<PathwiseError>> = paths.iter().map(|p| p.error).collect();
        let errors = errs.map(|errs| {
            let n = errs.len() as f64;
            ErrorSummary {
                mean_terminal_rel_error: errs.iter().map(|e| e.terminal_rel_error).sum::<f64>() / n,
                max_terminal_rel_error: errs
                    .iter()
                    .map(|e| e.terminal_rel_error)
                    .fold(0.0, f64::max),
                mean_terminal_abs_error: errs.iter().map(|e| e.terminal_abs_error).sum::<f64>() / n,
                max_rel_error: errs.iter().map(|e| e.max_rel_error).fold(0.0, f64::max),
                floor_hit: errs.iter().any(|e| e.floor_hit),
            }
        });
        ErrorReport {
            interpretation: cfg.sim.interpretation,
            seed: cfg.seed,
            terminal: MomentStats::from_samples(&terminals),
            paths,
            checkpoints,
            errors,
        }
    }

    /// Ensemble mean of `statistic`, if the model had a reference.
    pub fn statistic(&self, statistic: ErrorStatistic) -> Option<f64> {
        let e = self.errors?;
        Some(match statistic {
            ErrorStatistic::TerminalRelative => e.mean_terminal_rel_error,
            ErrorStatistic::TerminalAbsolute => e.mean_terminal_abs_error,
            ErrorStatistic::MaxRelative => {
                let n = self.paths.len() as f64;
                self.paths
                    .iter()
                    .filter_map(|p| p.error)
                    .map(|e| e.max_rel_error)
                    .sum::<f64>()
                    / n
            }
        })
    }

    pub fn digests(&self) -> Vec<&str> {
        self.paths.iter().map(|p| p.digest.as_str()).collect()
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            interpretation: self.interpretation.to_string(),
            n_paths: self.paths.len(),
            seed: self.seed,
            terminal: self.terminal,
            checkpoints: self.checkpoints.clone(),
            errors: self.errors,
        }
    }

    pub const PATHS_HEADER: &'static str =
        "path,seed,digest,n_jumps,c_T,terminal,reference,abs_error,rel_error,max_rel_error";

    /// One row per path; cells without a value are left empty.
    pub fn write_paths_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::PATHS_HEADER)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for p in &self.paths {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                p.index,
                p.seed.map(|s| s.to_string()).unwrap_or_default(),
                p.digest,
                p.n_jumps,
                fmt_f64(p.c_terminal),
                fmt_f64(p.terminal),
                opt(p.reference_terminal),
                opt(p.error.map(|e| e.terminal_abs_error)),
                opt(p.error.map(|e| e.terminal_rel_error)),
                opt(p.error.map(|e| e.max_rel_error)),
            )?;
        }
        Ok(())
    }
}

/// A row of [`ErrorReport::write_paths_csv`] read back.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub index: usize,
    pub seed: Option<u64>,
    pub digest: String,
    pub n_jumps: usize,
    pub c_terminal: f64,
    pub terminal: f64,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub max_rel_error: Option<f64>,
}

pub fn read_paths_csv<R: Read>(r: R) -> Result<Vec<PathRow>, HarnessError> {
    let t = read_table(r)?;
    let header: Vec<&str> = ErrorReport::PATHS_HEADER.split(',').collect();
    t.expect_header(&header)?;
    let int = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| HarnessError::Csv(format!("bad integer `{s}`")))
    };
    (0..t.rows.len())
        .map(|i| {
            let seed = t.str_at(i, 1)?;
            Ok(PathRow {
                index: int(t.str_at(i, 0)?)? as usize,
                seed: if seed.is_empty() {
                    None
                } else {
                    Some(int(seed)?)
                },
                digest: t.str_at(i, 2)?.to_string(),
                n_jumps: int(t.str_at(i, 3)?)? as usize,
                c_terminal: t.f64_at(i, 4)?,
                terminal: t.f64_at(i, 5)?,
                reference: t.opt_f64_at(i, 6)?,
                abs_error: t.opt_f64_at(i, 7)?,
                rel_error: t.opt_f64_at(i, 8)?,
                max_rel_error: t.opt_f64_at(i, 9)?,
            })
        })
        .collect()
}

/// The exact grid time a validated checkpoint refers to (`0.3` and
/// `30·0.01` differ in the last bit).
fn snap_to_grid(sim: &SimConfig, t: f64) -> f64 {
    if t == sim.horizon {
        t
    } else {
        sim.grid_time((t / sim.dt).round() as usize)
    }
}

struct Member {
    outcome: PathOutcome,
    trajectory: Option<Trajectory>,
    reference: Option<Vec<f64>>,
}

fn run_member(
    cfg: &EnsembleConfig,
    index: usize,
    path: &CompoundPoissonPath,
    keep_trajectory: bool,
) -> Result<Member, HarnessError> {
    let sim_err = |source| HarnessError::Simulation {
        path: index,
        source,
    };
    let traj = simulate_path(&cfg.model, path, &cfg.sim).map_err(sim_err)?;
    let reference = match cfg.model.reference() {
        Some(_) => Some(reference_for_trajectory(&cfg.model, path, &traj).map_err(sim_err)?),
        None => None,
    };
    let error = reference
        .as_deref()
        .map(|r| pathwise_error(&traj, r))
        .transpose()?;
    let checkpoint_values = cfg
        .checkpoints
        .iter()
        .map(|&t| traj.value_at(snap_to_grid(&cfg.sim, t)).unwrap_or(f64::NAN))
        .collect();
    let horizon = cfg.sim.horizon;
    let outcome = PathOutcome {
        index,
        seed: cfg.path_seed(index),
        digest: path.digest(),
        n_jumps: path.len(),
        c_terminal: path
            .c_value(horizon)
            .map_err(|source| HarnessError::Noise {
                path: index,
                source,
            })?,
        terminal: traj.terminal(),
        reference_terminal: reference.as_ref().and_then(|r| r.last().copied()),
        error,
        checkpoint_values,
    };
    Ok(Member {
        outcome,
        trajectory: keep_trajectory.then_some(traj),
        reference: if keep_trajectory { reference } else { None },
    })
}

/// Runs members in parallel and returns them in path order; the first
/// failing path (lowest index) determines the error.
fn run_members(
    cfg: &EnsembleConfig,
    paths: Option<&[CompoundPoissonPath]>,
    keep_trajectories: bool,
) -> Result<Vec<Member>, HarnessError> {
    cfg.validate()?;
    let results: Vec<Result<Member, HarnessError>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| match paths {
            Some(p) => run_member(cfg, i, &p[i], keep_trajectories),
            None => run_member(cfg, i, &cfg.path(i)?, keep_trajectories),
        })
        .collect();
    results.into_iter().collect()
}

/// Simulates `cfg.n_paths` members and aggregates their statistics.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<ErrorReport, HarnessError> {
    let members = run_members(cfg, None, false)?;
    Ok(ErrorReport::from_outcomes(
        cfg,
        members.into_iter().map(|m| m.outcome).collect(),
    ))
}

/// Which setting a convergence study sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Dt(Vec<f64>),
    /// Series truncation order `K`; switches the interpretation to the series.
    Order(Vec<usize>),
    /// Jump-ODE `h_max`; the base interpretation must be the jump ODE.
    HMax(Vec<f64>),
}

impl Control {
    pub fn name(&self) -> &'static str {
        match self {
            Control::Dt(_) => "dt",
            Control::Order(_) => "K",
            Control::HMax(_) => "h_max",
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Control::Dt(v) | Control::HMax(v) => v.clone(),
            Control::Order(v) => v.iter().map(|&k| k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub control: f64,
    pub error: f64,
    /// `ln(e_i/e_{i+1}) / ln(c_i/c_{i+1})` against the previous row, i.e.
    /// `log2(e_i/e_{i+1})` for halving; step-size controls only.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub control: String,
    pub statistic: ErrorStatistic,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "control,error,observed_order")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(r.control),
                fmt_f64(r.error),
                r.observed_order.map(fmt_f64).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<ConvergenceRow>, HarnessError> {
        let t = read_table(r)?;
        t.expect_header(&["control", "error", "observed_order"])?;
        (0..t.rows.len())
            .map(|i| {
                Ok(ConvergenceRow {
                    control: t.f64_at(i, 0)?,
                    error: t.f64_at(i, 1)?,
                    observed_order: t.opt_f64_at(i, 2)?,
                })
            })
            .collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.observed_order).collect()
    }
}

/// Reruns the ensemble (same seeds) for each control value and tabulates
/// the ensemble mean of `cfg.statistic`.
pub fn convergence_study(
    cfg: &EnsembleConfig,
    control: &Control,
) -> Result<ConvergenceTable, HarnessError> {
    let values = control.values();
    if values.len() < 3 {
        return Err(HarnessError::InvalidConfig(
            "a convergence study needs at least 3 control values".into(),
        ));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(HarnessError::InvalidConfig(
            "control values must be positive and strictly monotone".into(),
        ));
    }
    if cfg.model.reference().is_none() {
        return Err(HarnessError::MissingReference);
    }
    let base = cfg.sim.interpretation;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut run = cfg.clone();
        match control {
            Control::Dt(_) => run.sim.dt = v,
            Control::Order(k) => {
                run.sim.interpretation = Interpretation::DiPaolaFalsone { order: k[i] }
            }
            Control::HMax(_) => match base {
                Interpretation::MarcusOde { scheme, .. } => {
                    run.sim.interpretation = Interpretation::MarcusOde { scheme, h_max: v }
                }
                other => {
                    return Err(HarnessError::InvalidConfig(format!(
                        "an h_max study needs a marcus interpretation, got {other}"
                    )))
                }
            },
        }
        let report = run_ensemble(&run)?;
        let error = report
            .statistic(cfg.statistic)
            .ok_or(HarnessError::MissingReference)?;
        let observed_order = match (control, rows.last()) {
            (Control::Order(_), _) | (_, None) => None,
            (_, Some(prev)) if prev.error > 0.0 && error > 0.0 => {
                Some((prev.error / error).ln() / (prev.control / v).ln())
            }
            _ => None,
        };
        rows.push(ConvergenceRow {
            control: v,
            error,
            observed_order,
        });
    }
    Ok(ConvergenceTable {
        control: control.name().to_string(),
        statistic: cfg.statistic,
        rows,
    })
}

/// One noise path simulated under every interpretation of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSeries {
    pub index: usize,
    pub digest: String,
    pub times: Vec<f64>,
    pub kinds: Vec<RecordKind>,
    /// `C(t-)` on pre-jump records, `C(t)` elsewhere.
    pub c: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    /// `values[j]` is the trajectory under interpretation `j`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub interpretations: Vec<Interpretation>,
    pub paths: Vec<PathSeries>,
    pub reports: Vec<ErrorReport>,
}

impl Comparison {
    pub fn labels(&self) -> Vec<String> {
        self.interpretations
            .iter()
            .map(Interpretation::label)
            .collect()
    }

    /// Header `path,t,tag,c,reference,<label>...`; `reference` is empty when
    /// the model has none.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "path,t,tag,c,reference")?;
        for l in self.labels() {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for p in &self.paths {
            for i in 0..p.times.len() {
                write!(
                    w,
                    "{},{},{},{},{}",
                    p.index,
                    fmt_f64(p.times[i]),
                    p.kinds[i].as_str(),
                    fmt_f64(p.c[i]),
                    p.reference
                        .as_ref()
                        .map(|r| fmt_f64(r[i]))
                        .unwrap_or_default()
                )?;
                for v in &p.values {
                    write!(w, ",{}", fmt_f64(v[i]))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Reads a comparison CSV back into per-path series (digests are not
    /// stored in the file and come back empty). Returns the column labels too.
    pub fn read_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<PathSeries>), HarnessError> {
        let t = read_table(r)?;
        if t.header.len() < 5 || t.header[..5] != ["path", "t", "tag", "c", "reference"] {
            return Err(HarnessError::Csv(format!(
                "unexpected compare header {:?}",
                t.header
            )));
        }
        let labels: Vec<String> = t.header[5..].to_vec();
        let mut out: Vec<PathSeries> = Vec::new();
        for i in 0..t.rows.len() {
            let index: usize = t
                .str_at(i, 0)?
                .parse()
                .map_err(|_| HarnessError::Csv(format!("bad path index on row {i}")))?;
            if out.last().is_none_or(|p| p.index != index) {
                out.push(PathSeries {
                    index,
                    digest: String::new(),
                    times: Vec::new(),
                    kinds: Vec::new(),
                    c: Vec::new(),
                    reference: Some(Vec::new()),
                    values: vec![Vec::new(); labels.len()],
                });
            }
            let p = out.last_mut().expect("pushed above");
            p.times.push(t.f64_at(i, 1)?);
            p.kinds.push(
                t.str_at(i, 2)?
                    .parse()
                    .map_err(|e: SimError| HarnessError::Csv(e.to_string()))?,
            );
            p.c.push(t.f64_at(i, 3)?);
            match t.opt_f64_at(i, 4)? {
                Some(v) => {
                    if let Some(r) = p.reference.as_mut() {
                        r.push(v)
                    }
                }
                None => p.reference = None,
            }
            for j in 0..labels.len() {
                p.values[j].push(t.f64_at(i, 5 + j)?);
            }
        }
        Ok((labels, out))
    }
}

/// Simulates every interpretation on the same noise paths (sampled once)
/// and aligns the results per record.
pub fn compare_interpretations(
    cfg: &EnsembleConfig,
    interpretations: &[Interpretation],
) -> Result<Comparison, HarnessError> {
    if interpretations.is_empty() {
        return Err(HarnessError::InvalidConfig("nothing to compare".into()));
    }
    cfg.validate()?;
    let paths: Vec<CompoundPoissonPath> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| cfg.path(i))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut runs = Vec::with_capacity(interpretations.len());
    for &interp in interpretations {
        let run_cfg = cfg.with_interpretation(interp);
        runs.push((run_cfg.clone(), run_members(&run_cfg, Some(&paths), true)?));
    }

    let mut series = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let first = runs[0].1[i].trajectory.as_ref().expect("kept");
        let times: Vec<f64> = first.times().collect();
        let kinds: Vec<RecordKind> = first.records.iter().map(|r| r.kind).collect();
        let c = first
            .records
            .iter()
            .map(|r| match r.kind {
                RecordKind::PreJump => path.c_left_limit(r.t),
                _ => path.c_value(r.t),
            })
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|source| HarnessError::Noise { path: i, source })?;
        let mut values = Vec::with_capacity(runs.len());
        for (_, members) in &runs {
            let traj = members[i].trajectory.as_ref().expect("kept");
            if traj.records.len() != times.len() {
                return Err(HarnessError::LengthMismatch {
                    trajectory: traj.records.len(),
                    reference: times.len(),
                });
            }
            values.push(traj.records.iter().map(|r| r.z).collect());
        }
        series.push(PathSeries {
            index: i,
            digest: path.digest(),
            times,
            kinds,
            c,
            reference: runs[0].1[i].reference.clone(),
            values,
        });
    }

    let reports = runs
        .into_iter()
        .map(|(run_cfg, members)| {
            ErrorReport::from_outcomes(&run_cfg, members.into_iter().map(|m| m.outcome).collect())
        })
        .collect();
    Ok(Comparison {
        interpretations: interpretations.to_vec(),
        paths: series,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::jump::ClosedFormKind;
    use crate::ode::RkScheme;
    use crate::sim::Record;

    fn linear_model() -> SdeModel {
        SdeModel::new(
            parse("x").unwrap(),
            parse("x").unwrap(),
            1.0,
            Some(parse("exp(t+c)").unwrap()),
        )
        .unwrap()
    }

    fn cfg(n_paths: usize, interpretation: Interpretation) -> EnsembleConfig {
        EnsembleConfig {
            model: linear_model(),
            sim: SimConfig {
                dt: 0.01,
                drift_scheme: RkScheme::Rk4,
                horizon: 1.0,
                interpretation,
            },
            noise: NoiseSource::Sampled {
                intensity: 10.0,
                distribution: AmplitudeDistribution::default(),
            },
            n_paths,
            seed: 2024,
            checkpoints: vec![0.0, 0.5, 1.0],
            statistic: ErrorStatistic::TerminalRelative,
        }
    }

    const MARCUS: Interpretation = Interpretation::MarcusOde {
        scheme: RkScheme::Rk4,
        h_max: 0.01,
    };

    fn traj(zs: &[f64]) -> Trajectory {
        Trajectory {
            records: zs
                .iter()
                .enumerate()
                .map(|(i, &z)| Record {
                    t: i as f64,
                    z,
                    kind: RecordKind::Grid,
                })
                .collect(),
            jumps: vec![],
        }
    }

    #[test]
    fn checkpoints_read_the_grid_record() {
        let mut c = cfg(1, Interpretation::Ito);
        c.noise = NoiseSource::Fixed(vec![CompoundPoissonPath::from_jumps(1.0, &[]).unwrap()]);
        c.checkpoints = vec![0.3, 0.7];
        let report = run_ensemble(&c).unwrap();
        let traj = simulate_path(&c.model, &c.path(0).unwrap(), &c.sim).unwrap();
        assert_eq!(report.checkpoints[0].stats.mean, traj.records[30].z);
        assert_eq!(report.checkpoints[1].stats.mean, traj.records[70].z);
    }

    #[test]
    fn pathwise_error_examples() {
        let e = pathwise_error(&traj(&[1.0, 2.0]), &[1.0, 2.0]).unwrap();
        assert_eq!((e.terminal_rel_error, e.max_rel_error), (0.0, 0.0));
        let e = pathwise_error(&traj(&[1.05]), &[1.0]).unwrap();
        assert!((e.terminal_rel_error - 0.05).abs() < 1e-15);
        assert!((e.max_rel_error - 0.05).abs() < 1e-15);
        assert!(!e.floor_hit);
        let e = pathwise_error(&traj(&[1e-3, 1.0]), &[0.0, 1.0]).unwrap();
        assert!(e.max_rel_error.is_finite());
        assert!(e.floor_hit);
        assert!(matches!(
            pathwise_error(&traj(&[1.0, 2.0]), &[1.0]),
            Err(HarnessError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_path_ensemble_matches_direct_simulation() {
        let c = cfg(1, MARCUS);
        let report = run_ensemble(&c).unwrap();
        let path = c.path(0).unwrap();
        let t = simulate_path(&c.model, &path, &c.sim).unwrap();
        let r = reference_for_trajectory(&c.model, &path, &t).unwrap();
        let e = pathwise_error(&t, &r).unwrap();
        assert_eq!(report.paths[0].terminal, t.terminal());
        assert_eq!(report.paths[0].error, Some(e));
        assert_eq!(report.terminal.variance, 0.0);
        assert_eq!(report.checkpoints[0].stats.mean, 1.0);
    }

    #[test]
    fn zero_intensity_is_deterministic_exponential() {
        let mut c = cfg(20, Interpretation::Ito);
        c.noise = NoiseSource::Sampled {
            intensity: 0.0,
            distribution: AmplitudeDistribution::default(),
        };
        let report = run_ensemble(&c).unwrap();
        for p in &report.paths {
            assert!((p.terminal - std::f64::consts::E).abs() < 1e-9);
        }
        assert_eq!(report.terminal.variance, 0.0);
    }

    #[test]
    fn ensemble_is_reproducible() {
        let c = cfg(50, MARCUS);
        assert_eq!(run_ensemble(&c).unwrap(), run_ensemble(&c).unwrap());
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(
            run_ensemble(&c).unwrap().terminal,
            run_ensemble(&other).unwrap().terminal
        );
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1, MARCUS);
        c.checkpoints = vec![0.5, 0.25];
        assert!(c.validate().is_err());
        c.checkpoints = vec![0.255];
        assert!(c.validate().is_err());
        c.checkpoints = vec![1.5];
        assert!(c.validate().is_err());
        c.checkpoints = vec![];
        c.n_paths = 0;
        assert!(c.validate().is_err());
        c.n_paths = 2;
        c.noise = NoiseSource::Fixed(vec![CompoundPoissonPath::from_jumps(1.0, &[]).unwrap()]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn convergence_validation() {
        let c = cfg(2, MARCUS);
        assert!(convergence_study(&c, &Control::Dt(vec![0.1, 0.05])).is_err());
        assert!(convergence_study(&c, &Control::Dt(vec![0.1, 0.05, 0.07])).is_err());
        let ito = cfg(2, Interpretation::Ito);
        assert!(convergence_study(&ito, &Control::HMax(vec![0.1, 0.05, 0.025])).is_err());
    }

    #[test]
    fn series_order_study_reproduces_taylor_remainders() {
        // f = 0, single jump r = 3: terminal = 1 + partial sum of e^3 - 1.
        let mut c = cfg(1, Interpretation::DiPaolaFalsone { order: 1 });
        c.model = SdeModel::new(
            parse("0").unwrap(),
            parse("x").unwrap(),
            1.0,
            Some(parse("exp(c)").unwrap()),
        )
        .unwrap();
        c.noise = NoiseSource::Fixed(vec![
            CompoundPoissonPath::from_jumps(1.0, &[(0.5, 3.0)]).unwrap()
        ]);
        c.statistic = ErrorStatistic::TerminalAbsolute;
        let table = convergence_study(&c, &Control::Order((1..=8).collect())).unwrap();
        let mut partial = 0.0;
        let mut term = 1.0;
        for (k, row) in table.rows.iter().enumerate() {
            term *= 3.0 / (k + 1) as f64;
            partial += term;
            let remainder = 3f64.exp_m1() - partial;
            assert!(
                (row.error - remainder).abs() < 1e-12,
                "K={}: {} vs {}",
                k + 1,
                row.error,
                remainder
            );
            assert!(row.observed_order.is_none());
        }
        assert!((table.rows[5].error - 0.6730).abs() < 5e-5);
    }

    #[test]
    fn comparison_shares_noise() {
        let c = cfg(3, MARCUS);
        let interps = [
            MARCUS,
            Interpretation::MarcusClosedForm(ClosedFormKind::Linear { a: 1.0, b: 0.0 }),
            Interpretation::DiPaolaFalsone { order: 6 },
            MARCUS,
        ];
        let cmp = compare_interpretations(&c, &interps).unwrap();
        for r in &cmp.reports[1..] {
            assert_eq!(r.digests(), cmp.reports[0].digests());
        }
        for p in &cmp.paths {
            assert_eq!(p.values[0], p.values[3]);
            let gap = p.values[0]
                .iter()
                .zip(&p.values[1])
                .map(|(a, b)| ((a - b) / b).abs())
                .fold(0.0, f64::max);
            assert!(gap < 1e-8, "gap {gap}");
        }
        let mut buf = Vec::new();
        cmp.write_csv(&mut buf).unwrap();
        let (labels, back) = Comparison::read_csv(buf.as_slice()).unwrap();
        assert_eq!(labels, cmp.labels());
        assert_eq!(back.len(), 3);
        assert_eq!(back[1].values, cmp.paths[1].values);
        assert_eq!(back[1].times, cmp.paths[1].times);
    }

    #[test]
    fn report_csv_round_trip() {
        let report = run_ensemble(&cfg(4, MARCUS)).unwrap();
        let mut buf = Vec::new();
        report.write_paths_csv(&mut buf).unwrap();
        let rows = read_paths_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, p) in rows.iter().zip(&report.paths) {
            assert_eq!(row.terminal, p.terminal);
            assert_eq!(row.seed, p.seed);
            assert_eq!(row.digest, p.digest);
            assert_eq!(row.rel_error, p.error.map(|e| e.terminal_rel_error));
        }
        let json = serde_json::to_value(report.summary()).unwrap();
        for key in [
            "interpretation",
            "n_paths",
            "seed",
            "terminal",
            "checkpoints",
            "errors",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["checkpoints"][0].get("std_error").is_some());
    }

    #[test]
    fn convergence_csv_round_trip() {
        let table = ConvergenceTable {
            control: "dt".into(),
            statistic: ErrorStatistic::TerminalRelative,
            rows: vec![
                ConvergenceRow {
                    control: 0.1,
                    error: 1e-3,
                    observed_order: None,
                },
                ConvergenceRow {
                    control: 0.05,
                    error: 2.5e-4,
                    observed_order: Some(2.0),
                },
            ],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert_eq!(
            ConvergenceTable::read_csv(buf.as_slice()).unwrap(),
            table.rows
        );
    }
}
