//! Lévy-walk Monte Carlo: heavy-tailed trapping alternating with constant-velocity
//! flights, optionally with the flight duration tied to the speed.
//!
//! Positions are recorded at the snapshot times only. In the uncorrelated mode
//! velocities are independent of durations, so the flights completed between
//! two recorded times sum to a single stable draw of scale `(Σ τᵢ^μ)^{1/μ}`;
//! only a flight in progress at a snapshot time gets its own velocity.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;
use crate::snapshot::{histogram, DensitySnapshot, HistogramSpec};
use crate::stable::{sample_one, StableParams};

/// Bytes the position table and per-snapshot work arrays may occupy.
pub const MEMORY_BUDGET: usize = 2 << 30;
/// Renewal cycles per atom before a run is declared runaway.
pub const MAX_STEPS_PER_ATOM: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Correlation {
    None,
    /// `τ_f = flight_scale · |V|^chi · E'` with `E'` Pareto of index `noise_index`.
    Coupled {
        chi: f64,
        noise_index: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialProfile {
    #[default]
    Gaussian,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwellLaw {
    /// One-sided stable of index `beta_dwell`; exponential when `beta_dwell = 1`.
    #[default]
    Stable,
    /// `dwell_scale · U^{-1/beta_dwell}`.
    Pareto,
}

fn default_bins() -> usize {
    HistogramSpec::default().bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub mu: f64,
    pub beta_dwell: f64,
    /// µm/ms
    pub v_scale: f64,
    /// ms
    pub flight_scale: f64,
    /// ms
    pub dwell_scale: f64,
    pub correlation: Correlation,
    /// µm
    pub initial_width: f64,
    pub n_atoms: usize,
    /// ms
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub initial_profile: InitialProfile,
    #[serde(default)]
    pub dwell_law: DwellLaw,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let dom = |msg: String| Err(Error::Domain(msg));
        if !(self.mu > 0.0 && self.mu <= 2.0) {
            return dom(format!("mu = {} outside (0, 2]", self.mu));
        }
        if !(self.beta_dwell > 0.0 && self.beta_dwell <= 1.0) {
            return dom(format!("beta_dwell = {} outside (0, 1]", self.beta_dwell));
        }
        for (name, v) in [
            ("v_scale", self.v_scale),
            ("flight_scale", self.flight_scale),
            ("dwell_scale", self.dwell_scale),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return dom(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.initial_width >= 0.0 && self.initial_width.is_finite()) {
            return dom(format!(
                "initial_width = {} must be finite and non-negative",
                self.initial_width
            ));
        }
        if self.initial_profile == InitialProfile::Gaussian && self.initial_width == 0.0 {
            return dom("a gaussian initial profile needs initial_width > 0".into());
        }
        if self.n_atoms == 0 {
            return dom("n_atoms must be at least 1".into());
        }
        if self.snapshot_times.is_empty() {
            return dom("snapshot_times is empty".into());
        }
        if !self
            .snapshot_times
            .iter()
            .all(|t| *t > 0.0 && t.is_finite())
            || self.snapshot_times.windows(2).any(|w| w[1] <= w[0])
        {
            return dom("snapshot_times must be positive, finite and strictly increasing".into());
        }
        if let Correlation::Coupled { chi, noise_index } = self.correlation {
            if !chi.is_finite() || chi < 0.0 {
                return dom(format!("chi = {chi} must be finite and non-negative"));
            }
            if !(noise_index > 0.0) || !noise_index.is_finite() {
                return dom(format!("noise_index = {noise_index} must be positive"));
            }
        }
        if self.bins < crate::snapshot::MIN_GRID_POINTS {
            return dom(format!(
                "bins = {} below {}",
                self.bins,
                crate::snapshot::MIN_GRID_POINTS
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn check_memory(&self) -> Result<()> {
        let t = self.snapshot_times.len();
        // position table plus one sorted copy per snapshot during binning
        let need = self
            .n_atoms
            .checked_mul(t)
            .and_then(|v| v.checked_mul(8))
            .and_then(|v| v.checked_add(self.n_atoms.saturating_mul(16)))
            .ok_or_else(|| Error::Resource("position table size overflows".into()))?;
        if need > MEMORY_BUDGET {
            return Err(Error::Resource(format!(
                "{} atoms x {} snapshots needs {} MiB, budget is {} MiB",
                self.n_atoms,
                t,
                need >> 20,
                MEMORY_BUDGET >> 20
            )));
        }
        Ok(())
    }
}

struct Laws {
    velocity: StableParams,
    dwell: Option<StableParams>,
}

impl Laws {
    fn new(cfg: &WalkConfig) -> Result<Self> {
        let dwell = if cfg.beta_dwell < 1.0 && cfg.dwell_law == DwellLaw::Stable {
            Some(StableParams::one_sided(cfg.beta_dwell, 1.0)?)
        } else {
            None
        };
        Ok(Laws {
            velocity: StableParams::symmetric(cfg.mu, 1.0, 0.0)?,
            dwell,
        })
    }
}

fn dwell<R: Rng>(cfg: &WalkConfig, laws: &Laws, rng: &mut R) -> f64 {
    let s = match (cfg.dwell_law, &laws.dwell) {
        (DwellLaw::Pareto, _) => {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(-1.0 / cfg.beta_dwell)
        }
        (DwellLaw::Stable, Some(p)) => sample_one(p, rng),
        (DwellLaw::Stable, None) => rng.sample(Exp1),
    };
    cfg.dwell_scale * s
}

/// Fills `out[j]` with the position at `snapshot_times[j]`.
fn walk_atom<R: Rng>(cfg: &WalkConfig, laws: &Laws, rng: &mut R, out: &mut [f64]) -> Result<()> {
    let times = &cfg.snapshot_times;
    let mu = cfg.mu;
    let mut x = match cfg.initial_profile {
        InitialProfile::Gaussian => cfg.initial_width * rng.sample::<f64, _>(StandardNormal),
        InitialProfile::Delta => 0.0,
    };
    let mut t = 0.0;
    let mut j = 0;
    // Σ τ^μ over completed flights whose displacement is not yet drawn
    let mut pending = 0.0f64;
    let mut steps = 0u64;
    while j < times.len() {
        steps += 1;
        if steps > MAX_STEPS_PER_ATOM {
            return Err(Error::Resource(format!(
                "more than {MAX_STEPS_PER_ATOM} renewals before t = {}; scales are too small for the schedule",
                times[j]
            )));
        }
        let d = dwell(cfg, laws, rng);
        if t + d >= times[j] {
            if pending > 0.0 {
                x += cfg.v_scale * pending.powf(1.0 / mu) * sample_one(&laws.velocity, rng);
                pending = 0.0;
            }
            while j < times.len() && times[j] <= t + d {
                out[j] = x;
                j += 1;
            }
            if j == times.len() {
                break;
            }
        }
        t += d;

        let (v, tau) = match cfg.correlation {
            Correlation::None => {
                let tau = cfg.flight_scale * rng.sample::<f64, _>(Exp1);
                if t + tau < times[j] {
                    pending += tau.powf(mu);
                    t += tau;
                    continue;
                }
                if pending > 0.0 {
                    x += cfg.v_scale * pending.powf(1.0 / mu) * sample_one(&laws.velocity, rng);
                    pending = 0.0;
                }
                (sample_one(&laws.velocity, rng), tau)
            }
            Correlation::Coupled { chi, noise_index } => {
                let v = sample_one(&laws.velocity, rng);
                let u: f64 = 1.0 - rng.random::<f64>();
                let noise = u.powf(-1.0 / noise_index);
                (v, cfg.flight_scale * v.abs().powf(chi) * noise)
            }
        };
        let speed = cfg.v_scale * v;
        while j < times.len() && times[j] <= t + tau {
            out[j] = x + speed * (times[j] - t);
            j += 1;
        }
        x += speed * tau;
        t += tau;
    }
    Ok(())
}

/// Positions of every atom at every snapshot time, indexed `[time][atom]`.
pub fn simulate_positions(config: &WalkConfig, seed: u64) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    config.check_memory()?;
    let laws = Laws::new(config)?;
    let nt = config.snapshot_times.len();
    let mut table = vec![0.0; config.n_atoms * nt];
    table
        .par_chunks_mut(nt)
        .enumerate()
        .try_for_each(|(i, row)| {
            let mut r = rng::stream(seed, "ctrw", i as u64);
            walk_atom(config, &laws, &mut r, row)
        })?;
    let mut by_time = vec![Vec::with_capacity(config.n_atoms); nt];
    for row in table.chunks(nt) {
        for (j, &x) in row.iter().enumerate() {
            by_time[j].push(x);
        }
    }
    if by_time.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(
            "non-finite atom position; velocity or flight scale overflowed".into(),
        ));
    }
    Ok(by_time)
}

/// Histogrammed density at each snapshot time.
pub fn simulate_walk(config: &WalkConfig, seed: u64) -> Result<Vec<DensitySnapshot>> {
    let positions = simulate_positions(config, seed)?;
    let digest = config.digest();
    let spec = HistogramSpec {
        bins: config.bins,
        ..HistogramSpec::default()
    };
    config
        .snapshot_times
        .par_iter()
        .zip(&positions)
        .map(|(&t, xs)| {
            histogram(t, xs, &spec).map(|s| {
                s.with_meta("seed", seed)
                    .with_meta("config_digest", &digest)
                    .with_meta("source", "ctrw")
            })
        })
        .collect()
}

/// The same walk with the velocity/duration coupling switched off.
pub fn decoupled_reference(config: &WalkConfig, seed: u64) -> Result<Vec<DensitySnapshot>> {
    let mut c = config.clone();
    c.correlation = Correlation::None;
    simulate_walk(&c, seed)
}
