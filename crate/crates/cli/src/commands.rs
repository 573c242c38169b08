//! Subcommand implementations. Each writes its files into the output
//! directory and returns their paths.
//!
//! Single-path commands (`sample-noise`, `simulate`) use path 0 of the
//! ensemble, so their noise is the first path of `compare` and `ensemble`
//! runs with the same seed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use jumpsde::harness::{
    compare_interpretations, convergence_study, run_ensemble, Comparison, EnsembleConfig,
    HarnessError, NoiseSource, PathSeries,
};
use jumpsde::noise::CompoundPoissonPath;
use jumpsde::sim::{reference_for_trajectory, RecordKind};
use jumpsde::simulate_path;
use serde_json::json;

use crate::config::{ConfigError, RunSpec};
use crate::plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SampleNoise,
    Simulate,
    Compare,
    Converge,
    Ensemble,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SampleNoise => "sample-noise",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Converge => "converge",
            Command::Ensemble => "ensemble",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid run: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for configuration, validation and I/O problems, 2 for numerical
    /// failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 2,
            _ => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(_)
            | HarnessError::MissingReference
            | HarnessError::Csv(_) => CliError::Validation(e.to_string()),
            HarnessError::Noise { .. }
            | HarnessError::Simulation { .. }
            | HarnessError::LengthMismatch { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

pub fn ensemble_config(spec: &RunSpec) -> EnsembleConfig {
    EnsembleConfig {
        model: spec.model.clone(),
        sim: spec.sim,
        noise: NoiseSource::Sampled {
            intensity: spec.noise.intensity,
            distribution: spec.noise.distribution,
        },
        n_paths: spec.harness.n_paths,
        seed: spec.noise.seed,
        checkpoints: spec.harness.checkpoints.clone(),
        statistic: spec.harness.statistic,
    }
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, value: serde_json::Value) -> Result<(), CliError> {
        self.write("summary.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)
        })
    }

    fn svg(
        &mut self,
        name: &str,
        svg: Result<String, Box<dyn std::error::Error>>,
    ) -> Result<(), CliError> {
        let svg = svg.map_err(|e| CliError::Io {
            path: self.dir.join(name),
            source: std::io::Error::other(e.to_string()),
        })?;
        self.write(name, |w| w.write_all(svg.as_bytes()))
    }
}

/// Runs `command` and returns the files it wrote.
pub fn run(command: Command, spec: &RunSpec) -> Result<Vec<PathBuf>, CliError> {
    let dir = &spec.output.directory;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut out = Output {
        dir,
        written: Vec::new(),
    };
    let cfg = ensemble_config(spec);
    cfg.validate()?;
    match command {
        Command::SampleNoise => {
            let path = cfg.path(0)?;
            out.write("path.csv", |w| path.write_csv(w))?;
            if spec.output.plot {
                out.svg("fig1.svg", plot::noise_svg(&path))?;
            }
        }
        Command::Simulate => simulate(spec, &cfg, &mut out)?,
        Command::Compare => {
            let cmp = compare_interpretations(&cfg, &spec.harness.compare)?;
            out.write("compare.csv", |w| cmp.write_csv(w))?;
            out.json(compare_summary(&cmp))?;
            if spec.output.plot {
                out.svg("fig1.svg", plot::noise_svg(&cfg.path(0)?))?;
                out.svg(
                    "fig2.svg",
                    plot::comparison_svg(&cmp.paths[0], &cmp.labels()),
                )?;
            }
        }
        Command::Converge => {
            let table = convergence_study(&cfg, &spec.harness.control)?;
            out.write("convergence.csv", |w| table.write_csv(w))?;
            out.json(json!({
                "command": "converge",
                "interpretation": cfg.sim.interpretation.to_string(),
                "n_paths": cfg.n_paths,
                "seed": cfg.seed,
                "table": table,
            }))?;
        }
        Command::Ensemble => {
            let report = run_ensemble(&cfg)?;
            out.write("ensemble.csv", |w| report.write_paths_csv(w))?;
            let mut summary = serde_json::to_value(report.summary()).expect("summary serializes");
            summary["command"] = json!("ensemble");
            out.json(summary)?;
        }
    }
    Ok(out.written)
}

fn simulate(spec: &RunSpec, cfg: &EnsembleConfig, out: &mut Output) -> Result<(), CliError> {
    let path: CompoundPoissonPath = cfg.path(0)?;
    let runtime = |e: jumpsde::sim::SimError| CliError::Runtime(e.to_string());
    let traj = simulate_path(&cfg.model, &path, &cfg.sim).map_err(runtime)?;
    out.write("path.csv", |w| path.write_csv(w))?;
    let label = cfg.sim.interpretation.label();
    out.write(&format!("trajectory_{label}.csv"), |w| traj.write_csv(w))?;
    if spec.output.plot {
        let reference = match cfg.model.reference() {
            Some(_) => Some(reference_for_trajectory(&cfg.model, &path, &traj).map_err(runtime)?),
            None => None,
        };
        let series = PathSeries {
            index: 0,
            digest: path.digest(),
            times: traj.times().collect(),
            kinds: traj.records.iter().map(|r| r.kind).collect(),
            c: traj
                .records
                .iter()
                .map(|r| match r.kind {
                    RecordKind::PreJump => path.c_left_limit(r.t).unwrap_or(f64::NAN),
                    _ => path.c_value(r.t).unwrap_or(f64::NAN),
                })
                .collect(),
            reference,
            values: vec![traj.records.iter().map(|r| r.z).collect()],
        };
        out.svg("fig1.svg", plot::noise_svg(&path))?;
        out.svg("fig2.svg", plot::comparison_svg(&series, &[label]))?;
    }
    Ok(())
}

fn compare_summary(cmp: &Comparison) -> serde_json::Value {
    json!({
        "command": "compare",
        "interpretations": cmp.labels(),
        "digests": cmp.paths.iter().map(|p| p.digest.clone()).collect::<Vec<_>>(),
        "reports": cmp.reports.iter().map(|r| r.summary()).collect::<Vec<_>>(),
    })
}
