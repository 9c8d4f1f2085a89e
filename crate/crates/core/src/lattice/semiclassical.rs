//! Bipotential jump model: Hamiltonian motion on `U_±` between optical
//! pumping and scattering events drawn by thinning at the maximal rate.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AbsorptionRecoil, EmissionPattern, Landscape, LatticeConfig, Units};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::snapshot::{histogram, DensitySnapshot, HistogramSpec};

const STREAM: &str = "lattice-semiclassical";

// Omelyan–Mryglod–Folk position-extended Forest–Ruth coefficients
const XI: f64 = 0.178_617_895_844_809_1;
const LAMBDA: f64 = -0.212_341_831_062_605_4;
const CHI: f64 = -0.066_264_582_669_818_49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublevel {
    Plus,
    Minus,
}

impl Sublevel {
    fn from_sign(s: f64) -> Self {
        if s > 0.0 {
            Sublevel::Plus
        } else {
            Sublevel::Minus
        }
    }
}

/// Phase-space point in lab units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalState {
    /// µm
    pub position: f64,
    /// ħk
    pub momentum: f64,
    pub sublevel: Sublevel,
}

/// Pearson correlation between the speed an atom leaves a well with, taken
/// as its speed over the hilltops, and the time until it is bound again.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EscapeCorrelation {
    pub pairs: u64,
    pub pearson: f64,
    /// µm/ms
    pub mean_speed: f64,
    /// ms
    pub mean_duration: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn merge(mut self, o: &Moments) -> Self {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
        self
    }

    fn summary(&self, speed_unit: f64, time_unit: f64) -> EscapeCorrelation {
        if self.n < 2.0 {
            return EscapeCorrelation {
                pairs: self.n as u64,
                pearson: f64::NAN,
                ..Default::default()
            };
        }
        let mx = self.sx / self.n;
        let my = self.sy / self.n;
        let cov = self.sxy / self.n - mx * my;
        let vx = self.sxx / self.n - mx * mx;
        let vy = self.syy / self.n - my * my;
        EscapeCorrelation {
            pairs: self.n as u64,
            pearson: cov / (vx * vy).sqrt(),
            mean_speed: mx * speed_unit,
            mean_duration: my * time_unit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SemiclassicalRun {
    /// Densities blurred uniformly over one lattice period, as seen by an
    /// imaging system that does not resolve the wells.
    pub snapshots: Vec<DensitySnapshot>,
    /// µm, indexed `[time][atom]`.
    pub positions: Vec<Vec<f64>>,
    pub escape: EscapeCorrelation,
    /// Largest relative energy change seen between two jumps.
    pub max_energy_drift: f64,
    pub jumps: u64,
    /// Each atom at the last snapshot.
    pub final_states: Vec<SemiclassicalState>,
}

/// Momentum distribution after the lead-in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentumHistogram {
    /// ħk
    pub momentum_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub rms: f64,
    pub excess_kurtosis: f64,
    pub samples: usize,
}

struct Atom {
    z: f64,
    p: f64,
    s: f64,
}

struct Engine<'a> {
    land: Landscape,
    cfg: &'a LatticeConfig,
    max_rate: f64,
    recoil: bool,
    gradient: bool,
}

#[derive(Default)]
struct AtomLog {
    drift: f64,
    jumps: u64,
    escapes: Moments,
}

/// Escape bookkeeping along one trajectory.
struct Escape {
    bound: bool,
    since: Option<(f64, f64)>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a LatticeConfig) -> Self {
        let land = Landscape::new(cfg);
        Engine {
            max_rate: land.max_rate(),
            land,
            cfg,
            recoil: cfg.model.emission == EmissionPattern::Uniform,
            gradient: cfg.model.absorption == AbsorptionRecoil::Gradient,
        }
    }

    fn energy(&self, a: &Atom) -> f64 {
        a.p * a.p + self.land.potential(a.z, a.s)
    }

    /// Hamiltonian flow for `duration` at a fixed step; returns the relative energy change.
    fn flow(&self, a: &mut Atom, duration: f64) -> f64 {
        if duration <= 0.0 {
            return 0.0;
        }
        let e0 = self.energy(a);
        let p_max = (e0 - self.land.minimum()).max(0.0).sqrt();
        // small-oscillation frequency or the fastest crossing of a half period
        let omega = (2.0 * self.land.depth().sqrt()).max(4.0 * p_max);
        let dt_max = if omega > 0.0 {
            self.cfg.step_control / omega
        } else {
            duration
        };
        let n = (duration / dt_max).ceil().max(1.0);
        let h = duration / n;
        let (mut z, mut p, s) = (a.z, a.p, a.s);
        let f = |z: f64| self.land.force(z, s);
        for _ in 0..n as u64 {
            z += XI * h * 2.0 * p;
            p += (1.0 - 2.0 * LAMBDA) * 0.5 * h * f(z);
            z += CHI * h * 2.0 * p;
            p += LAMBDA * h * f(z);
            z += (1.0 - 2.0 * (CHI + XI)) * h * 2.0 * p;
            p += LAMBDA * h * f(z);
            z += CHI * h * 2.0 * p;
            p += (1.0 - 2.0 * LAMBDA) * 0.5 * h * f(z);
            z += XI * h * 2.0 * p;
        }
        a.z = z;
        a.p = p;
        (self.energy(a) - e0).abs() / e0.abs().max(self.land.depth())
    }

    fn next_event(&self, rng: &mut StreamRng, t: f64) -> f64 {
        if self.max_rate > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / self.max_rate
        } else {
            f64::INFINITY
        }
    }

    /// Proposes a scattering event; true if one happened.
    fn scatter(&self, a: &mut Atom, rng: &mut StreamRng) -> bool {
        let r = self.land.rates(a.z, a.s);
        if self.gradient {
            // spread over every proposal, which arrive at the constant rate `max_rate`
            let var = self.land.absorption_diffusion(a.z, a.s) / self.max_rate;
            a.p += var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let v = rng.random::<f64>() * self.max_rate;
        if v >= r.total() {
            return false;
        }
        if v >= r.sigma_plus + r.sigma_minus {
            a.s = -a.s;
        }
        if !self.gradient {
            a.p += if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        if self.recoil {
            a.p += 2.0 * rng.random::<f64>() - 1.0;
        }
        true
    }

    /// Evolves for `total` time, storing `z` at each of `marks` into `out`.
    fn evolve(
        &self,
        a: &mut Atom,
        rng: &mut StreamRng,
        marks: &[f64],
        total: f64,
        out: &mut [f64],
        log: &mut AtomLog,
        escape: Option<&mut Escape>,
    ) -> std::result::Result<(), (f64, f64)> {
        let mut escape = escape;
        let mut t = 0.0;
        let mut j = 0;
        let mut ev = self.next_event(rng, t);
        loop {
            let target = if j < marks.len() { marks[j] } else { total };
            let is_mark = ev >= target;
            let stop = if is_mark { target } else { ev };
            let drift = self.flow(a, stop - t);
            log.drift = log.drift.max(drift);
            if drift > self.cfg.energy_tolerance {
                return Err((drift, stop));
            }
            t = stop;
            if is_mark {
                if j < marks.len() {
                    out[j] = a.z;
                    j += 1;
                    continue;
                }
                return Ok(());
            }
            if self.scatter(a, rng) {
                log.jumps += 1;
                if let Some(e) = escape.as_deref_mut() {
                    let bound = self.energy(a) < self.land.barrier();
                    if e.bound && !bound {
                        // momentum left over when crossing the hilltops
                        let speed = (self.energy(a) - self.land.barrier()).max(0.0).sqrt();
                        e.since = Some((speed, t));
                    } else if !e.bound && bound {
                        if let Some((speed, t0)) = e.since.take() {
                            log.escapes.push(speed, t - t0);
                        }
                    }
                    e.bound = bound;
                }
            }
            ev = self.next_event(rng, t);
        }
    }

    /// Initial state, then the held lead-in. Returns the atom at `t = 0`.
    fn prepare(
        &self,
        units: &Units,
        rng: &mut StreamRng,
        lead_in: f64,
        log: &mut AtomLog,
    ) -> std::result::Result<Atom, (f64, f64)> {
        let sigma_z = units.length(self.cfg.initial_width);
        let thermal = self.cfg.thermal_momentum();
        let sigma_p = if sigma_z > 0.0 {
            (thermal * thermal + 0.25 / (sigma_z * sigma_z)).sqrt()
        } else {
            thermal
        };
        let z0 = sigma_z * rng.sample::<f64, _>(StandardNormal);
        let p0 = sigma_p * rng.sample::<f64, _>(StandardNormal);
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mut a = Atom { z: z0, p: p0, s };
        if lead_in > 0.0 {
            self.evolve(&mut a, rng, &[], lead_in, &mut [], log, None)?;
            // the cloud is held during the lead-in: keep the phase within the well only
            let mut d = (a.z - z0).rem_euclid(PI);
            if d > 0.5 * PI {
                d -= PI;
            }
            a.z = z0 + d;
        }
        Ok(a)
    }
}

fn drift_error(i: usize, drift: f64, t: f64, units: &Units, tol: f64) -> Error {
    Error::Numeric(format!(
        "trajectory {i}: relative energy drift {drift:.2e} exceeds {tol:.1e} between jumps (t = {:.4} ms); reduce step_control",
        t / units.time(1.0)
    ))
}

/// Full semiclassical run with diagnostics.
pub fn run_semiclassical(config: &LatticeConfig, seed: u64) -> Result<SemiclassicalRun> {
    config.validate()?;
    let units = config.units();
    let engine = Engine::new(config);
    let marks: Vec<f64> = config
        .snapshot_times
        .iter()
        .map(|&t| units.time(t))
        .collect();
    let lead_in = units.time(config.equilibration_time);
    let nt = marks.len();
    // per atom: positions at the marks, then the imaging offsets
    let mut table = vec![0.0; config.n_trajectories * 2 * nt];
    let outcomes: Vec<(AtomLog, SemiclassicalState)> = table
        .par_chunks_mut(2 * nt)
        .enumerate()
        .map(|(i, row)| {
            let mut rng = rng::stream(seed, STREAM, i as u64);
            let mut log = AtomLog::default();
            let mut a = engine
                .prepare(&units, &mut rng, lead_in, &mut log)
                .map_err(|(d, t)| {
                    drift_error(i, d, t - lead_in, &units, config.energy_tolerance)
                })?;
            let mut esc = Escape {
                bound: engine.energy(&a) < engine.land.barrier(),
                since: None,
            };
            let total = *marks.last().expect("validated");
            engine
                .evolve(
                    &mut a,
                    &mut rng,
                    &marks,
                    total,
                    &mut row[..nt],
                    &mut log,
                    Some(&mut esc),
                )
                .map_err(|(d, t)| drift_error(i, d, t, &units, config.energy_tolerance))?;
            for b in &mut row[nt..] {
                *b = PI * (rng.random::<f64>() - 0.5);
            }
            let state = SemiclassicalState {
                position: units.to_um(a.z),
                momentum: a.p,
                sublevel: Sublevel::from_sign(a.s),
            };
            Ok((log, state))
        })
        .collect::<Result<_>>()?;

    let mut positions = vec![Vec::with_capacity(config.n_trajectories); nt];
    let mut imaged = vec![Vec::with_capacity(config.n_trajectories); nt];
    for row in table.chunks(2 * nt) {
        for j in 0..nt {
            positions[j].push(units.to_um(row[j]));
            imaged[j].push(units.to_um(row[j] + row[nt + j]));
        }
    }
    drop(table);
    let (logs, final_states): (Vec<AtomLog>, Vec<SemiclassicalState>) =
        outcomes.into_iter().unzip();
    let escapes = logs
        .iter()
        .fold(Moments::default(), |m, l| m.merge(&l.escapes));
    let spec = HistogramSpec {
        bins: config.bins,
        ..HistogramSpec::default()
    };
    let snapshots = config
        .snapshot_times
        .par_iter()
        .zip(&imaged)
        .map(|(&t, xs)| {
            histogram(t, xs, &spec).map(|s| {
                s.with_meta("seed", seed)
                    .with_meta("source", "semiclassical")
                    .with_meta("depth_recoils", config.depth_recoils)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SemiclassicalRun {
        snapshots,
        positions,
        escape: escapes.summary(config.recoil_velocity(), 1.0 / config.recoil_frequency()),
        max_energy_drift: logs.iter().map(|l| l.drift).fold(0.0, f64::max),
        jumps: logs.iter().map(|l| l.jumps).sum(),
        final_states,
    })
}

/// Density snapshots of the semiclassical model.
pub fn simulate_semiclassical(config: &LatticeConfig, seed: u64) -> Result<Vec<DensitySnapshot>> {
    run_semiclassical(config, seed).map(|r| r.snapshots)
}

/// Momentum distribution after `duration` ms of lattice light with the cloud held.
///
/// Uses the same per-trajectory streams as [`run_semiclassical`], so with
/// `duration = equilibration_time` these are the momenta the run starts from.
pub fn equilibrate(config: &LatticeConfig, duration: f64, seed: u64) -> Result<MomentumHistogram> {
    config.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::Domain(format!(
            "lead-in duration {duration} must be finite and non-negative"
        )));
    }
    let units = config.units();
    let engine = Engine::new(config);
    let lead_in = units.time(duration);
    let momenta: Vec<f64> = (0..config.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, STREAM, i as u64);
            let mut log = AtomLog::default();
            engine
                .prepare(&units, &mut rng, lead_in, &mut log)
                .map(|a| a.p)
                .map_err(|(d, t)| drift_error(i, d, t - lead_in, &units, config.energy_tolerance))
        })
        .collect::<Result<_>>()?;
    let n = momenta.len() as f64;
    let mean = momenta.iter().sum::<f64>() / n;
    let m2 = momenta.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    let m4 = momenta.iter().map(|p| (p - mean).powi(4)).sum::<f64>() / n;
    let bins = config.bins.min(momenta.len().max(64));
    let h = histogram(
        duration,
        &momenta,
        &HistogramSpec {
            bins,
            ..HistogramSpec::default()
        },
    )?;
    Ok(MomentumHistogram {
        momentum_grid: h.x_grid,
        density: h.density,
        rms: m2.sqrt(),
        excess_kurtosis: if m2 > 0.0 {
            m4 / (m2 * m2) - 3.0
        } else {
            f64::NAN
        },
        samples: momenta.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(depth: f64) -> LatticeConfig {
        let mut c = LatticeConfig::new(depth, 200, vec![0.5, 1.0, 2.0], 5.0);
        c.bins = 64;
        c
    }

    #[test]
    fn hamiltonian_limit_conserves_energy() {
        let mut c = cfg(4.8);
        c.jump_rate_scale = Some(0.0);
        c.n_trajectories = 50;
        let run = run_semiclassical(&c, 1).unwrap();
        assert_eq!(run.jumps, 0);
        assert!(run.max_energy_drift < 1e-6, "{}", run.max_energy_drift);
    }

    #[test]
    fn coarse_steps_are_reported() {
        let mut c = cfg(4.8);
        c.step_control = 0.5;
        c.energy_tolerance = 1e-14;
        let err = run_semiclassical(&c, 1).unwrap_err();
        assert!(
            matches!(err, Error::Numeric(ref m) if m.contains("trajectory")),
            "{err}"
        );
    }

    #[test]
    fn deterministic_across_workers() {
        let c = cfg(3.0);
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| run_semiclassical(&c, 4).unwrap().positions)
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn zero_lead_in_returns_initial_momenta() {
        let mut c = cfg(4.8);
        c.n_trajectories = 4000;
        c.initial_width = 200.0;
        let h = equilibrate(&c, 0.0, 2).unwrap();
        assert!((h.rms / c.thermal_momentum() - 1.0).abs() < 0.05);
        assert!(h.excess_kurtosis.abs() < 0.3);
    }

    #[test]
    fn snapshots_normalized() {
        let run = run_semiclassical(&cfg(4.8), 3).unwrap();
        for s in &run.snapshots {
            assert!((s.integral() - 1.0).abs() < 1e-3);
        }
    }
}
