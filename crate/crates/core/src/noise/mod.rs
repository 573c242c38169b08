//! Compound Poisson driving noise.
//!
//! A path holds the sorted jump times `t_k ∈ (0, T]` and amplitudes `R_k`
//! of one realization of `C(t) = Σ_{t_k ≤ t} R_k`. Values are càdlàg: the
//! value at a jump time already includes that jump.

mod rng;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::io::{fmt_f64, read_table, TableError};

pub use self::rng::{mix64, substream_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("intensity must be finite and non-negative, got {0}")]
    InvalidIntensity(f64),
    #[error("horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid amplitude distribution: {0}")]
    InvalidDistribution(String),
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("invalid jump list: {0}")]
    InvalidJumps(String),
    #[error("path CSV: {0}")]
    Csv(String),
}

impl From<TableError> for NoiseError {
    fn from(e: TableError) -> Self {
        NoiseError::Csv(e.to_string())
    }
}

/// Law of the jump amplitudes `R_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeDistribution {
    Normal { mean: f64, std: f64 },
    Constant(f64),
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for AmplitudeDistribution {
    fn default() -> Self {
        AmplitudeDistribution::Normal {
            mean: 0.0,
            std: 1.0,
        }
    }
}

impl AmplitudeDistribution {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |msg: String| Err(NoiseError::InvalidDistribution(msg));
        match *self {
            AmplitudeDistribution::Normal { mean, std } => {
                if !mean.is_finite() || !(std.is_finite() && std > 0.0) {
                    return bad(format!(
                        "normal needs finite mean and std > 0, got ({mean}, {std})"
                    ));
                }
            }
            AmplitudeDistribution::Constant(v) => {
                if !v.is_finite() {
                    return bad(format!("constant amplitude must be finite, got {v}"));
                }
            }
            AmplitudeDistribution::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            AmplitudeDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs lo < hi, got ({lo}, {hi})"));
                }
            }
        }
        Ok(())
    }

    /// Normal: two generator outputs; exponential and uniform: one;
    /// constant: none.
    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            AmplitudeDistribution::Normal { mean, std } => mean + std * rng.next_standard_normal(),
            AmplitudeDistribution::Constant(v) => v,
            AmplitudeDistribution::Exponential { rate } => rng.next_exp1() / rate,
            AmplitudeDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.next_open01(),
        }
    }
}

impl fmt::Display for AmplitudeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmplitudeDistribution::Normal { mean, std } => write!(f, "normal({mean},{std})"),
            AmplitudeDistribution::Constant(v) => write!(f, "constant({v})"),
            AmplitudeDistribution::Exponential { rate } => write!(f, "exponential({rate})"),
            AmplitudeDistribution::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
        }
    }
}

impl FromStr for AmplitudeDistribution {
    type Err = NoiseError;

    /// Accepts `normal(mean,std)`, `normal` (standard), `constant(v)`,
    /// `exponential(rate)` and `uniform(lo,hi)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NoiseError::InvalidDistribution(format!("cannot parse `{s}`"));
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s.strip_suffix(')').ok_or_else(bad)?;
                let args: Result<Vec<f64>, _> = close[open + 1..]
                    .split(',')
                    .map(|a| a.trim().parse::<f64>())
                    .collect();
                (s[..open].trim(), args.map_err(|_| bad())?)
            }
            None => (s, Vec::new()),
        };
        let dist = match (name.to_ascii_lowercase().as_str(), args.as_slice()) {
            ("normal", []) => AmplitudeDistribution::default(),
            ("normal", [mean, std]) => AmplitudeDistribution::Normal {
                mean: *mean,
                std: *std,
            },
            ("constant", [v]) => AmplitudeDistribution::Constant(*v),
            ("exponential", [rate]) => AmplitudeDistribution::Exponential { rate: *rate },
            ("uniform", [lo, hi]) => AmplitudeDistribution::Uniform { lo: *lo, hi: *hi },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Parameters a sampled path can be replayed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub intensity: f64,
    pub distribution: AmplitudeDistribution,
    pub seed: u64,
}

/// One realization of the compound Poisson process on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonPath {
    horizon: f64,
    sampling: Option<SamplingParams>,
    jump_times: Vec<f64>,
    amplitudes: Vec<f64>,
    /// `cumulative[k] = R_0 + ... + R_k`, summed left to right.
    cumulative: Vec<f64>,
}

fn check_horizon(horizon: f64) -> Result<(), NoiseError> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(NoiseError::InvalidHorizon(horizon))
    }
}

fn prefix_sums(amplitudes: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    amplitudes
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect()
}

/// Samples one path: the jump count is Poisson(`intensity·T`), the jump
/// times are that many uniforms on `(0, T)` sorted ascending, and the
/// amplitudes are drawn afterwards in time order. All draws come from one
/// [`SplitMix64`] seeded with `seed`, in exactly that order.
pub fn sample_path(
    intensity: f64,
    horizon: f64,
    distribution: AmplitudeDistribution,
    seed: u64,
) -> Result<CompoundPoissonPath, NoiseError> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(NoiseError::InvalidIntensity(intensity));
    }
    check_horizon(horizon)?;
    distribution.validate()?;

    let mut rng = SplitMix64::new(seed);
    let count = rng.next_poisson(intensity * horizon) as usize;
    let mut jump_times: Vec<f64> = (0..count).map(|_| horizon * rng.next_open01()).collect();
    jump_times.sort_by(f64::total_cmp);
    for k in 1..jump_times.len() {
        if jump_times[k] <= jump_times[k - 1] {
            let moved = jump_times[k - 1].next_up();
            log::warn!(
                "seed {seed}: jump times {k} and {} coincide at {}; moving the later one to {moved}",
                k - 1,
                jump_times[k]
            );
            jump_times[k] = moved;
        }
    }
    let amplitudes: Vec<f64> = (0..count).map(|_| distribution.sample(&mut rng)).collect();
    let cumulative = prefix_sums(&amplitudes);
    Ok(CompoundPoissonPath {
        horizon,
        sampling: Some(SamplingParams {
            intensity,
            distribution,
            seed,
        }),
        jump_times,
        amplitudes,
        cumulative,
    })
}

impl CompoundPoissonPath {
    /// A path with prescribed jumps `(t_k, R_k)`; times must be strictly
    /// increasing and lie in `(0, horizon]`.
    pub fn from_jumps(horizon: f64, jumps: &[(f64, f64)]) -> Result<Self, NoiseError> {
        Self::with_sampling(horizon, None, jumps)
    }

    fn with_sampling(
        horizon: f64,
        sampling: Option<SamplingParams>,
        jumps: &[(f64, f64)],
    ) -> Result<Self, NoiseError> {
        check_horizon(horizon)?;
        let mut prev = 0.0;
        for (k, &(t, r)) in jumps.iter().enumerate() {
            if !(t > prev && t <= horizon) {
                return Err(NoiseError::InvalidJumps(format!(
                    "jump {k} at t={t} is not after {prev} and within (0, {horizon}]"
                )));
            }
            if !r.is_finite() {
                return Err(NoiseError::InvalidJumps(format!(
                    "jump {k} has amplitude {r}"
                )));
            }
            prev = t;
        }
        let jump_times: Vec<f64> = jumps.iter().map(|j| j.0).collect();
        let amplitudes: Vec<f64> = jumps.iter().map(|j| j.1).collect();
        let cumulative = prefix_sums(&amplitudes);
        Ok(CompoundPoissonPath {
            horizon,
            sampling,
            jump_times,
            amplitudes,
            cumulative,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Replay parameters; `None` for paths built from explicit jumps.
    pub fn sampling(&self) -> Option<&SamplingParams> {
        self.sampling.as_ref()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.jump_times
            .iter()
            .copied()
            .zip(self.amplitudes.iter().copied())
    }

    fn check_time(&self, t: f64) -> Result<(), NoiseError> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(NoiseError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        }
    }

    /// `C(t)`, including a jump located exactly at `t`.
    pub fn c_value(&self, t: f64) -> Result<f64, NoiseError> {
        self.check_time(t)?;
        let n = self.jump_times.partition_point(|&tk| tk <= t);
        Ok(if n == 0 { 0.0 } else { self.cumulative[n - 1] })
    }

    /// Left limit `C(t-)`, excluding a jump located exactly at `t`.
    pub fn c_left_limit(&self, t: f64) -> Result<f64, NoiseError> {
        self.check_time(t)?;
        let n = self.jump_times.partition_point(|&tk| tk < t);
        Ok(if n == 0 { 0.0 } else { self.cumulative[n - 1] })
    }

    /// `dC(t) = C(t) - C(t-)`: the amplitude of the jump at `t`, or 0.
    pub fn increment(&self, t: f64) -> f64 {
        match self.jump_times.binary_search_by(|tk| tk.total_cmp(&t)) {
            Ok(k) => self.amplitudes[k],
            Err(_) => 0.0,
        }
    }

    /// SHA-256 over the horizon and every `(t_k, R_k)` bit pattern, hex
    /// encoded. Two paths share a digest iff they are bit-identical.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.horizon.to_bits().to_le_bytes());
        for (t, r) in self.jumps() {
            h.update(t.to_bits().to_le_bytes());
            h.update(r.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Writes `# T=... [intensity=... dist=... seed=...]`, the header
    /// `k,t_k,R_k` and one row per jump (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "# T={}", self.horizon)?;
        if let Some(s) = &self.sampling {
            write!(
                w,
                " intensity={} dist={} seed={}",
                s.intensity, s.distribution, s.seed
            )?;
        }
        writeln!(w)?;
        writeln!(w, "k,t_k,R_k")?;
        for (k, (t, r)) in self.jumps().enumerate() {
            writeln!(w, "{},{},{}", k + 1, fmt_f64(t), fmt_f64(r))?;
        }
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). When replay parameters are
    /// present the jumps are re-sampled and must match the file exactly.
    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self, NoiseError> {
        let mut first = String::new();
        r.read_line(&mut first)
            .map_err(|e| NoiseError::Csv(e.to_string()))?;
        let meta = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| NoiseError::Csv("missing `#` metadata line".into()))?;
        let mut horizon = None;
        let mut intensity = None;
        let mut dist = None;
        let mut seed = None;
        for item in meta.split_whitespace() {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| NoiseError::Csv(format!("bad metadata item `{item}`")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| NoiseError::Csv(format!("bad number `{v}`")))
            };
            match k {
                "T" => horizon = Some(num(v)?),
                "intensity" => intensity = Some(num(v)?),
                "dist" => dist = Some(v.parse::<AmplitudeDistribution>()?),
                "seed" => {
                    seed = Some(
                        v.parse::<u64>()
                            .map_err(|_| NoiseError::Csv(format!("bad seed `{v}`")))?,
                    )
                }
                _ => return Err(NoiseError::Csv(format!("unknown metadata key `{k}`"))),
            }
        }
        let horizon = horizon.ok_or_else(|| NoiseError::Csv("metadata lacks T".into()))?;
        let table = read_table(r)?;
        table.expect_header(&["k", "t_k", "R_k"])?;
        let jumps = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, _)| Ok((table.f64_at(i, 1)?, table.f64_at(i, 2)?)))
            .collect::<Result<Vec<_>, TableError>>()?;
        let sampling = match (intensity, dist, seed) {
            (Some(intensity), Some(distribution), Some(seed)) => Some(SamplingParams {
                intensity,
                distribution,
                seed,
            }),
            (None, None, None) => None,
            _ => return Err(NoiseError::Csv("incomplete replay metadata".into())),
        };
        let path = Self::with_sampling(horizon, sampling, &jumps)?;
        if let Some(s) = sampling {
            let replay = sample_path(s.intensity, horizon, s.distribution, s.seed)?;
            if replay != path {
                return Err(NoiseError::Csv(
                    "jumps do not match a replay of the recorded seed".into(),
                ));
            }
        }
        Ok(path)
    }
}
