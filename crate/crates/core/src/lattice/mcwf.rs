//! Quantum trajectories for the two ground sublevels on a periodic grid.
//!
//! Between jumps the state evolves under `H − (i/2) Σ B†B` by Strang
//! splitting (half local step, spectral kinetic step, half local step).
//! A jump happens when the squared norm drops below a uniform threshold.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{EmissionPattern, LatticeConfig, PumpingPattern, Units};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::snapshot::DensitySnapshot;

const STREAM: &str = "lattice-mcwf";
/// Relative norm rise per step attributed to rounding.
const NORM_SLACK: f64 = 1e-12;
const MIN_PERIODS: u32 = 50;
const MIN_POINTS_PER_PERIOD: usize = 16;
const EDGE_PERIODS: usize = 5;
const EDGE_LIMIT: f64 = 1e-3;

/// Periodic position grid covering a whole number of lattice periods `λ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub periods: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 2048,
            periods: 128,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid points {} not a power of two",
                self.points
            )));
        }
        if self.periods < MIN_PERIODS {
            return Err(Error::Domain(format!(
                "grid spans {} lattice periods, need at least {MIN_PERIODS}",
                self.periods
            )));
        }
        if self.points < MIN_POINTS_PER_PERIOD * self.periods as usize {
            return Err(Error::Domain(format!(
                "{} points over {} periods resolves fewer than {MIN_POINTS_PER_PERIOD} points per period",
                self.points, self.periods
            )));
        }
        Ok(())
    }

    /// Length in `kz` units.
    fn length(&self) -> f64 {
        self.periods as f64 * PI
    }

    fn dz(&self) -> f64 {
        self.length() / self.points as f64
    }

    fn z(&self, j: usize) -> f64 {
        -0.5 * self.length() + j as f64 * self.dz()
    }

    /// Extent in µm for wavevector `k` (1/µm).
    pub fn extent(&self, k: f64) -> f64 {
        self.length() / k
    }

    /// Wavenumber of FFT bin `m`, in `ħk`.
    fn q(&self, m: usize) -> f64 {
        let n = self.points as i64;
        let m = m as i64;
        let signed = if m < n / 2 { m } else { m - n };
        2.0 * PI / self.length() * signed as f64
    }
}

/// Two-component wavefunction on the grid.
#[derive(Debug, Clone)]
pub struct QuantumTrajectory {
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    pub grid: GridSpec,
}

impl QuantumTrajectory {
    /// `Σ |ψ|² dz`
    pub fn norm(&self) -> f64 {
        let s: f64 = self
            .plus
            .iter()
            .chain(&self.minus)
            .map(|c| c.norm_sqr())
            .sum();
        s * self.grid.dz()
    }

    /// `|ψ₊|² + |ψ₋|²` per `kz`.
    pub fn density(&self) -> Vec<f64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    fn scale(&mut self, f: f64) {
        self.plus
            .iter_mut()
            .chain(self.minus.iter_mut())
            .for_each(|c| *c *= f);
    }

    fn renormalize(&mut self) {
        let n = self.norm();
        self.scale(1.0 / n.sqrt());
    }

    /// Fraction of the probability within `cells` points of either edge.
    fn edge_weight(&self, cells: usize) -> f64 {
        let n = self.plus.len();
        let edge: f64 = (0..cells)
            .chain(n - cells..n)
            .map(|j| self.plus[j].norm_sqr() + self.minus[j].norm_sqr())
            .sum();
        edge * self.grid.dz() / self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct McwfRun {
    /// Densities averaged over one lattice period about each grid point.
    pub snapshots: Vec<DensitySnapshot>,
    /// Trajectories stopped by the edge monitor; excluded from the snapshots.
    pub aborted: Vec<usize>,
    pub jumps: u64,
    pub steps: u64,
    /// Largest relative norm rise over a single step between jumps.
    pub max_norm_rise: f64,
    /// Largest `|norm − 1|` right after a renormalization.
    pub max_renorm_error: f64,
    /// Largest `|Σ channel probabilities − 1|` at a jump.
    pub max_channel_error: f64,
    pub dt: f64,
}

/// Local operators at one grid point.
#[derive(Clone, Copy)]
struct Site {
    /// σ⁺-like and σ⁻-like standing-wave amplitudes seen by the jump operators.
    s: f64,
    c: f64,
}

struct Model {
    grid: GridSpec,
    sites: Vec<Site>,
    /// `U₊`, `U₋` per point.
    u_plus: Vec<f64>,
    u_minus: Vec<f64>,
    raman: f64,
    gamma: f64,
    elastic: bool,
    recoil: bool,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Per-interval propagators.
struct Stepper {
    half: Vec<[Complex64; 4]>,
    kinetic: Vec<Complex64>,
}

#[derive(Default)]
struct Stats {
    jumps: u64,
    steps: u64,
    rise: f64,
    renorm: f64,
    channel: f64,
}

impl Model {
    fn new(cfg: &LatticeConfig, grid: GridSpec) -> Self {
        let amp = cfg.model.potential_prefactor * cfg.model_depth();
        let swapped = cfg.model.pumping == PumpingPattern::Swapped;
        let mut sites = Vec::with_capacity(grid.points);
        let mut u_plus = Vec::with_capacity(grid.points);
        let mut u_minus = Vec::with_capacity(grid.points);
        for j in 0..grid.points {
            let z = grid.z(j);
            let (s, c) = z.sin_cos();
            sites.push(if swapped {
                Site { s: c, c: s }
            } else {
                Site { s, c }
            });
            let cos2 = (2.0 * z).cos();
            u_plus.push(amp * (-2.0 + cos2));
            u_minus.push(amp * (-2.0 - cos2));
        }
        let mut planner = FftPlanner::new();
        Model {
            grid,
            sites,
            u_plus,
            u_minus,
            raman: cfg.model.raman_coupling,
            gamma: cfg.jump_rate(),
            elastic: cfg.model.elastic_scattering,
            recoil: cfg.model.emission == EmissionPattern::Uniform,
            fwd: planner.plan_fft_forward(grid.points),
            inv: planner.plan_fft_inverse(grid.points),
        }
    }

    fn max_rate(&self) -> f64 {
        if self.elastic {
            self.gamma
        } else {
            2.0 * self.gamma / 9.0
        }
    }

    /// `(D₊, D₋)`, the diagonal of `Σ B†B`.
    fn decay(&self, site: Site) -> (f64, f64) {
        let (s2, c2) = (site.s * site.s, site.c * site.c);
        let e = if self.elastic { 1.0 } else { 0.0 };
        let g = self.gamma;
        (
            g * (e * (s2 + c2 / 9.0) + 2.0 * c2 / 9.0),
            g * (e * (c2 + s2 / 9.0) + 2.0 * s2 / 9.0),
        )
    }

    /// Largest step the stability bounds allow.
    fn dt_max(&self) -> f64 {
        let q_nyquist = PI / self.grid.dz();
        let kinetic = 0.1 * 2.0 * PI / (q_nyquist * q_nyquist);
        let rate = self.max_rate();
        if rate > 0.0 {
            kinetic.min(0.1 / rate)
        } else {
            kinetic
        }
    }

    fn stepper(&self, h: f64) -> Stepper {
        let tau = 0.5 * h;
        let i = Complex64::i();
        let half = (0..self.grid.points)
            .map(|j| {
                let (d_plus, d_minus) = self.decay(self.sites[j]);
                let m11 = Complex64::new(self.u_plus[j], -0.5 * d_plus);
                let m22 = Complex64::new(self.u_minus[j], -0.5 * d_minus);
                let r = Complex64::new(self.raman, 0.0);
                // exp(−iτM) for M = a + N, N traceless with N² = δ²
                let a = 0.5 * (m11 + m22);
                let n11 = 0.5 * (m11 - m22);
                let delta = (n11 * n11 + r * r).sqrt();
                let phase = (-i * tau * a).exp();
                let cs = (tau * delta).cos();
                let sn = if (tau * delta).norm() < 1e-8 {
                    Complex64::new(tau, 0.0)
                } else {
                    (tau * delta).sin() / delta
                };
                [
                    phase * (cs - i * sn * n11),
                    phase * (-i * sn * r),
                    phase * (-i * sn * r),
                    phase * (cs + i * sn * n11),
                ]
            })
            .collect();
        let norm = 1.0 / self.grid.points as f64;
        let kinetic = (0..self.grid.points)
            .map(|m| {
                let q = self.grid.q(m);
                Complex64::from_polar(norm, -q * q * h)
            })
            .collect();
        Stepper { half, kinetic }
    }

    fn local(&self, psi: &mut QuantumTrajectory, st: &Stepper) {
        for ((a, b), m) in psi.plus.iter_mut().zip(psi.minus.iter_mut()).zip(&st.half) {
            let (x, y) = (*a, *b);
            *a = m[0] * x + m[1] * y;
            *b = m[2] * x + m[3] * y;
        }
    }

    fn step(&self, psi: &mut QuantumTrajectory, st: &Stepper, scratch: &mut [Complex64]) {
        self.local(psi, st);
        for comp in [&mut psi.plus, &mut psi.minus] {
            self.fwd.process_with_scratch(comp, scratch);
            comp.iter_mut().zip(&st.kinetic).for_each(|(c, k)| *c *= k);
            self.inv.process_with_scratch(comp, scratch);
        }
        self.local(psi, st);
    }

    /// Applies a randomly chosen jump operator; returns the channel-sum error.
    fn jump(&self, psi: &mut QuantumTrajectory, rng: &mut StreamRng) -> f64 {
        let e = if self.elastic { 1.0 } else { 0.0 };
        let (mut w_plus, mut w_minus, mut w_switch, mut decay) = (0.0, 0.0, 0.0, 0.0);
        for (j, site) in self.sites.iter().enumerate() {
            let (p, m) = (psi.plus[j].norm_sqr(), psi.minus[j].norm_sqr());
            let (s2, c2) = (site.s * site.s, site.c * site.c);
            w_plus += e * s2 * (p + m / 9.0);
            w_minus += e * c2 * (p / 9.0 + m);
            w_switch += 2.0 / 9.0 * (s2 * m + c2 * p);
            let (dp, dm) = self.decay(*site);
            decay += dp * p + dm * m;
        }
        let total = w_plus + w_minus + w_switch;
        let channel_error = if decay > 0.0 {
            (self.gamma * total / decay - 1.0).abs()
        } else {
            0.0
        };
        let v = rng.random::<f64>() * total;
        let third = 1.0 / 3.0;
        if v < w_plus {
            for (j, site) in self.sites.iter().enumerate() {
                psi.plus[j] *= site.s;
                psi.minus[j] *= site.s * third;
            }
        } else if v < w_plus + w_minus {
            for (j, site) in self.sites.iter().enumerate() {
                psi.plus[j] *= site.c * third;
                psi.minus[j] *= site.c;
            }
        } else {
            for (j, site) in self.sites.iter().enumerate() {
                let (p, m) = (psi.plus[j], psi.minus[j]);
                psi.plus[j] = m * site.s;
                psi.minus[j] = p * site.c;
            }
        }
        if self.recoil {
            // emission recoil, rounded to the grid's momentum spacing so the state stays periodic
            let dq = 2.0 * PI / self.grid.length();
            let u = ((2.0 * rng.random::<f64>() - 1.0) / dq).round() * dq;
            for j in 0..self.grid.points {
                let kick = Complex64::from_polar(1.0, -u * self.grid.z(j));
                psi.plus[j] *= kick;
                psi.minus[j] *= kick;
            }
        }
        channel_error
    }

    fn initial(
        &self,
        cfg: &LatticeConfig,
        units: &Units,
        rng: &mut StreamRng,
    ) -> QuantumTrajectory {
        let sigma = units.length(cfg.initial_width);
        let p0 = cfg.thermal_momentum() * rng.sample::<f64, _>(StandardNormal);
        let up = rng.random::<bool>();
        let amp: Vec<Complex64> = (0..self.grid.points)
            .map(|j| {
                let z = self.grid.z(j);
                Complex64::from_polar((-z * z / (4.0 * sigma * sigma)).exp(), p0 * z)
            })
            .collect();
        let zero = vec![Complex64::new(0.0, 0.0); self.grid.points];
        let (plus, minus) = if up { (amp, zero) } else { (zero, amp) };
        let mut psi = QuantumTrajectory {
            plus,
            minus,
            grid: self.grid,
        };
        psi.renormalize();
        psi
    }
}

enum Outcome {
    Done(Vec<Vec<f64>>, Stats),
    Aborted(Stats),
}

fn trajectory(
    model: &Model,
    cfg: &LatticeConfig,
    units: &Units,
    steppers: &[(u64, Stepper)],
    seed: u64,
    index: usize,
) -> Result<Outcome> {
    let mut rng = rng::stream(seed, STREAM, index as u64);
    let mut psi = model.initial(cfg, units, &mut rng);
    let mut scratch = vec![Complex64::new(0.0, 0.0); model.fwd.get_inplace_scratch_len()];
    let edge_cells = EDGE_PERIODS * model.grid.points / model.grid.periods as usize;
    let mut stats = Stats::default();
    let mut threshold = rng.random::<f64>();
    let mut prev = psi.norm();
    let mut out = Vec::with_capacity(steppers.len());
    for (n, st) in steppers {
        for _ in 0..*n {
            model.step(&mut psi, st, &mut scratch);
            stats.steps += 1;
            let norm = psi.norm();
            let rise = norm / prev - 1.0;
            stats.rise = stats.rise.max(rise);
            if rise > NORM_SLACK {
                return Err(Error::Numeric(format!(
                    "trajectory {index}: norm rose by {rise:.2e} in step {} between jumps",
                    stats.steps
                )));
            }
            if psi.edge_weight(edge_cells) > EDGE_LIMIT {
                return Ok(Outcome::Aborted(stats));
            }
            if norm < threshold {
                stats.channel = stats.channel.max(model.jump(&mut psi, &mut rng));
                psi.renormalize();
                stats.jumps += 1;
                stats.renorm = stats.renorm.max((psi.norm() - 1.0).abs());
                threshold = rng.random::<f64>();
                prev = psi.norm();
            } else {
                prev = norm;
            }
        }
        let inv = 1.0 / psi.norm();
        out.push(psi.density().into_iter().map(|d| d * inv).collect());
    }
    Ok(Outcome::Done(out, stats))
}

/// Circular trapezoidal average over `width` grid spacings.
fn period_average(y: &[f64], width: usize) -> Vec<f64> {
    let n = y.len();
    let half = width / 2;
    (0..n)
        .map(|j| {
            let at = |d: isize| y[(j as isize + d).rem_euclid(n as isize) as usize];
            let inner: f64 = (1 - half as isize..half as isize).map(at).sum();
            (inner + 0.5 * (at(-(half as isize)) + at(half as isize))) / width as f64
        })
        .collect()
}

/// Runs the quantum trajectories and returns the averaged densities with diagnostics.
pub fn run_mcwf(config: &LatticeConfig, grid: &GridSpec, seed: u64) -> Result<McwfRun> {
    config.validate()?;
    grid.validate()?;
    if config.equilibration_time > 0.0 {
        return Err(Error::Domain(
            "the wavefunction simulator has no held lead-in; set equilibration_time = 0".into(),
        ));
    }
    let units = config.units();
    let model = Model::new(config, *grid);
    if units.length(config.initial_width) < 2.0 * grid.dz() {
        return Err(Error::Domain(format!(
            "initial_width {} µm is below two grid spacings",
            config.initial_width
        )));
    }
    let dt_max = model.dt_max();
    let mut steppers = Vec::with_capacity(config.snapshot_times.len());
    let mut last = 0.0;
    let mut dt = 0.0f64;
    for &t in &config.snapshot_times {
        let span = units.time(t) - last;
        let n = (span / dt_max).ceil().max(1.0);
        dt = dt.max(span / n);
        steppers.push((n as u64, model.stepper(span / n)));
        last = units.time(t);
    }

    let outcomes: Vec<Outcome> = (0..config.n_trajectories)
        .into_par_iter()
        .map(|i| trajectory(&model, config, &units, &steppers, seed, i))
        .collect::<Result<_>>()?;

    let nt = config.snapshot_times.len();
    let mut sums = vec![vec![0.0; grid.points]; nt];
    let mut kept = 0usize;
    let mut aborted = Vec::new();
    let mut total = Stats::default();
    for (i, o) in outcomes.into_iter().enumerate() {
        let stats = match o {
            Outcome::Done(d, s) => {
                kept += 1;
                for (acc, row) in sums.iter_mut().zip(d) {
                    acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                }
                s
            }
            Outcome::Aborted(s) => {
                aborted.push(i);
                s
            }
        };
        total.jumps += stats.jumps;
        total.steps += stats.steps;
        total.rise = total.rise.max(stats.rise);
        total.renorm = total.renorm.max(stats.renorm);
        total.channel = total.channel.max(stats.channel);
    }
    if kept == 0 {
        return Err(Error::Numeric(
            "every trajectory reached the grid edge; enlarge the grid or shorten the run".into(),
        ));
    }
    let k = config.wavevector;
    let x: Vec<f64> = (0..grid.points).map(|j| units.to_um(grid.z(j))).collect();
    let snapshots = config
        .snapshot_times
        .iter()
        .zip(sums)
        .map(|(&t, acc)| {
            let density = period_average(&acc, grid.points / grid.periods as usize)
                .into_iter()
                .map(|v| v * k / kept as f64)
                .collect();
            DensitySnapshot::new(t, x.clone(), density).map(|s| {
                s.with_meta("seed", seed)
                    .with_meta("source", "mcwf")
                    .with_meta("depth_recoils", config.depth_recoils)
                    .with_meta("trajectories", kept)
                    .with_meta("aborted", aborted.len())
            })
        })
        .collect::<Result<_>>()?;
    Ok(McwfRun {
        snapshots,
        aborted,
        jumps: total.jumps,
        steps: total.steps,
        max_norm_rise: total.rise,
        max_renorm_error: total.renorm,
        max_channel_error: total.channel,
        dt: dt / units.time(1.0),
    })
}

/// Trajectory-averaged densities at the snapshot times.
pub fn simulate_mcwf(
    config: &LatticeConfig,
    grid: &GridSpec,
    seed: u64,
) -> Result<Vec<DensitySnapshot>> {
    run_mcwf(config, grid, seed).map(|r| r.snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (LatticeConfig, GridSpec) {
        let mut c = LatticeConfig::new(4.8, 6, vec![0.05, 0.1], 0.5);
        c.bins = 64;
        (
            c,
            GridSpec {
                points: 1024,
                periods: 64,
            },
        )
    }

    #[test]
    fn period_average_removes_the_comb() {
        let y: Vec<f64> = (0..256)
            .map(|j| 1.0 + (2.0 * PI * j as f64 / 16.0).cos())
            .collect();
        for v in period_average(&y, 16) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_preconditions() {
        assert!(GridSpec {
            points: 1000,
            periods: 50
        }
        .validate()
        .is_err());
        assert!(GridSpec {
            points: 512,
            periods: 64
        }
        .validate()
        .is_err());
        assert!(GridSpec {
            points: 1024,
            periods: 32
        }
        .validate()
        .is_err());
        assert!(GridSpec::default().validate().is_ok());
    }

    #[test]
    fn unitary_without_jumps() {
        let (mut c, g) = small();
        c.jump_rate_scale = Some(0.0);
        c.model.raman_coupling = 2.0;
        let run = run_mcwf(&c, &g, 1).unwrap();
        assert_eq!(run.jumps, 0);
        let model = Model::new(&c, g);
        let units = c.units();
        let mut rng = rng::stream(1, STREAM, 0);
        let mut psi = model.initial(&c, &units, &mut rng);
        let st = model.stepper(model.dt_max());
        let mut scratch = vec![Complex64::new(0.0, 0.0); model.fwd.get_inplace_scratch_len()];
        for _ in 0..500 {
            model.step(&mut psi, &st, &mut scratch);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-8, "{}", psi.norm());
    }

    #[test]
    fn norm_decays_monotonically_and_jumps_renormalize() {
        let (c, g) = small();
        let run = run_mcwf(&c, &g, 2).unwrap();
        assert!(run.jumps > 0);
        assert!(run.max_norm_rise <= NORM_SLACK);
        assert!(run.max_renorm_error < 1e-12);
        assert!(run.max_channel_error < 1e-12);
        for s in &run.snapshots {
            assert!((s.integral() - 1.0).abs() < 1e-6, "{}", s.integral());
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let (c, g) = small();
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| simulate_mcwf(&c, &g, 3).unwrap())
        };
        assert_eq!(run(1), run(2));
    }

    #[test]
    fn lead_in_rejected() {
        let (mut c, g) = small();
        c.equilibration_time = 1.0;
        assert!(matches!(run_mcwf(&c, &g, 0), Err(Error::Domain(_))));
    }
}
