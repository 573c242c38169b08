use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jumpsde::harness::{read_paths_csv, Comparison, ConvergenceTable};
use jumpsde::noise::CompoundPoissonPath;
use jumpsde::sim::RecordKind;
use jumpsde::Trajectory;
use jumpsde_cli::config::DEFAULTS;

const SUBCOMMANDS: [&str; 5] = [
    "sample-noise",
    "simulate",
    "compare",
    "converge",
    "ensemble",
];

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/linear_experiment.conf")
}

fn jumpsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpsde"))
        .args(args)
        .env_remove("JUMPSDE_OUT")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_documents_every_key_and_flag() {
    let top = jumpsde(&["--help"]);
    assert!(top.status.success());
    for sub in SUBCOMMANDS {
        let out = jumpsde(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in ["--seed", "--dt", "--paths", "--interp", "--out", "--plot"] {
            assert!(text.contains(flag), "{sub} help lacks {flag}");
        }
        for (section, key, _) in DEFAULTS {
            assert!(
                text.contains(&format!("[{section}]")) && text.contains(key),
                "{sub} help lacks {section}.{key}"
            );
        }
        assert!(text.contains("JUMPSDE_OUT"));
    }
}

#[test]
fn exit_codes_separate_validation_from_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();

    let missing = jumpsde(&["simulate", "does-not-exist.conf", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));

    let cfg = write_config(
        dir.path(),
        "[model]\nf = x\ng = x\n[sim]\ninterpretation = df\nK = 0\n",
    );
    let invalid = jumpsde(&["simulate", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(stderr(&invalid).contains("K ≥ 1"), "{}", stderr(&invalid));
    assert!(
        stderr(&invalid).contains("run.conf:6"),
        "{}",
        stderr(&invalid)
    );

    let cfg = write_config(dir.path(), "[model]\nf = x\ng = x\ntypo = 1\n");
    let unknown = jumpsde(&["simulate", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(
        stderr(&unknown).contains("run.conf:4: unknown key `typo`"),
        "{}",
        stderr(&unknown)
    );

    // Every jump flips the sign of the state; the drift ln(x) then fails.
    let cfg = write_config(
        dir.path(),
        "[model]\nf = ln(x)\ng = x\n[noise]\nintensity = 50\ndistribution = constant(-2)\n[sim]\ninterpretation = ito\n",
    );
    let numeric = jumpsde(&["simulate", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(numeric.status.code(), Some(2), "{}", stderr(&numeric));
    assert!(stderr(&numeric).contains("ln"), "{}", stderr(&numeric));
    assert!(numeric.stdout.is_empty());
}

#[test]
fn flags_override_file_settings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = jumpsde(&[
        "simulate",
        example_config().to_str().unwrap(),
        "--dt",
        "0.005",
        "--seed",
        "3",
        "--interp",
        "df:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let path =
        CompoundPoissonPath::read_csv(std::fs::read(out.join("path.csv")).unwrap().as_slice())
            .unwrap();
    assert_eq!(
        path.sampling().unwrap().seed,
        jumpsde::noise::substream_seed(3, 0)
    );
    let traj = Trajectory::read_csv(
        std::fs::read(out.join("trajectory_df-4.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    let grid = traj
        .records
        .iter()
        .filter(|r| r.kind == RecordKind::Grid)
        .count();
    assert_eq!(
        grid + 2 * path.len() - path.jump_times().iter().filter(|&&t| t == 1.0).count(),
        traj.records.len()
    );
    assert!(grid >= 200 - path.len());
}

#[test]
fn environment_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let run = Command::new(env!("CARGO_BIN_EXE_jumpsde"))
        .args(["sample-noise", example_config().to_str().unwrap()])
        .env("JUMPSDE_OUT", &target)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(target.join("path.csv").exists());
}

#[test]
fn noiseless_simulation_is_exponential_growth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nf = x\ng = x\n[noise]\nintensity = 0\n[sim]\ndrift_scheme = rk4\n",
    );
    let out = dir.path().join("out");
    let run = jumpsde(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let traj = Trajectory::read_csv(
        std::fs::read(out.join("trajectory_marcus-rk2-0.1.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    assert_eq!(traj.records.len(), 101);
    for r in &traj.records {
        assert!(
            (r.z - r.t.exp()).abs() <= 1e-10 * r.t.exp(),
            "t={} z={}",
            r.t,
            r.z
        );
    }
}

#[test]
fn every_csv_reloads_through_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example_config();
    for sub in SUBCOMMANDS {
        let out = dir.path().join(sub);
        let run = jumpsde(&[
            sub,
            cfg.to_str().unwrap(),
            "--paths",
            "5",
            "--out",
            out.to_str().unwrap(),
            "--plot",
        ]);
        assert!(run.status.success(), "{sub}: {}", stderr(&run));
    }
    let read = |sub: &str, name: &str| std::fs::read(dir.path().join(sub).join(name)).unwrap();

    let path = CompoundPoissonPath::read_csv(read("sample-noise", "path.csv").as_slice()).unwrap();
    assert_eq!(
        read("sample-noise", "path.csv"),
        read("simulate", "path.csv")
    );
    let traj =
        Trajectory::read_csv(read("simulate", "trajectory_marcus-rk2-0.1.csv").as_slice()).unwrap();
    assert_eq!(traj.jumps.len(), path.len());

    let (labels, series) = Comparison::read_csv(read("compare", "compare.csv").as_slice()).unwrap();
    assert_eq!(labels, ["ito", "df-6", "marcus-rk2-0.1"]);
    assert_eq!(series.len(), 5);
    assert_eq!(
        series[0].values[2],
        traj.records.iter().map(|r| r.z).collect::<Vec<_>>()
    );

    let rows = ConvergenceTable::read_csv(read("converge", "convergence.csv").as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    let paths = read_paths_csv(read("ensemble", "ensemble.csv").as_slice()).unwrap();
    assert_eq!(paths.len(), 5);
    assert_eq!(paths[0].digest, path.digest());

    for sub in ["compare", "converge", "ensemble"] {
        let json: serde_json::Value = serde_json::from_slice(&read(sub, "summary.json")).unwrap();
        assert_eq!(json["command"], sub);
    }
    for sub in ["sample-noise", "simulate", "compare"] {
        let svg = String::from_utf8(read(sub, "fig1.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }
    assert!(String::from_utf8(read("compare", "fig2.svg"))
        .unwrap()
        .contains("df-6"));
}

/// Index of the first post-jump record whose jump has `|r| ≥ 3`.
fn first_big_jump(series: &jumpsde::harness::PathSeries) -> Option<usize> {
    (1..series.times.len()).find(|&i| {
        series.kinds[i] == RecordKind::PostJump && (series.c[i] - series.c[i - 1]).abs() >= 3.0
    })
}

#[test]
fn comparison_shows_series_breakdown_on_large_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = jumpsde(&[
        "compare",
        example_config().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let (labels, series) =
        Comparison::read_csv(std::fs::read(out.join("compare.csv")).unwrap().as_slice()).unwrap();
    let marcus = labels.iter().position(|l| l == "marcus-rk2-0.1").unwrap();
    let df = labels.iter().position(|l| l == "df-6").unwrap();
    let mut big_jump_paths = 0;
    for s in &series {
        let reference = s.reference.as_ref().unwrap();
        for (z, r) in s.values[marcus].iter().zip(reference) {
            assert!(((z - r) / r).abs() <= 0.05, "path {}: {z} vs {r}", s.index);
        }
        if let Some(i) = first_big_jump(s) {
            big_jump_paths += 1;
            let err = ((s.values[df][i] - reference[i]) / reference[i]).abs();
            assert!(
                err > 0.01,
                "path {} at t={}: series error {err}",
                s.index,
                s.times[i]
            );
        }
    }
    assert!(big_jump_paths > 0);
}
