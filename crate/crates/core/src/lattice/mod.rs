//! Atoms in a 1D lin⊥lin lattice with a J = 1/2 → 3/2 transition.
//!
//! Internally positions are `kz`, momenta are in units of `ħk`, energies in
//! recoil energies and time in `1/ω_r` with `ħω_r = E_r`, so that
//! `H = p² + U_±(z)`, `dz/dt = 2p` and `dp/dt = −U'_±(z)`.
//!
//! The σ⁺ field amplitude goes as `sin kz` and the σ⁻ amplitude as `cos kz`.
//! With Clebsch–Gordan weights 1 and 1/3 this gives the light shifts
//! `U_± = (U₀/2)(−2 ± cos 2kz)` and the three jump operators
//!
//! * `B₊ = sin z (|+⟩⟨+| + ⅓|−⟩⟨−|)` (σ⁺ emission),
//! * `B₋ = cos z (|−⟩⟨−| + ⅓|+⟩⟨+|)` (σ⁻ emission),
//! * `B₀ = (√2/3)(sin z |+⟩⟨−| + cos z |−⟩⟨+|)` (π emission, changes sublevel),
//!
//! each scaled by `√Γ'`. The optical pumping rate `+ → −` is therefore
//! `(2/9)Γ' cos² z`, largest at the top of `U₊`.

mod mcwf;
mod semiclassical;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mcwf::{run_mcwf, simulate_mcwf, GridSpec, McwfRun, QuantumTrajectory};
pub use semiclassical::{
    equilibrate, run_semiclassical, simulate_semiclassical, EscapeCorrelation, MomentumHistogram,
    SemiclassicalRun, SemiclassicalState, Sublevel,
};

const HBAR: f64 = 1.054_571_817e-34;
const AMU: f64 = 1.660_539_066_60e-27;
const K_B: f64 = 1.380_649e-23;

/// Which sublevel is pumped away where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpingPattern {
    /// `+ → −` at rate `∝ cos² kz`, at the maxima of `U₊` (Sisyphus cooling).
    #[default]
    Standard,
    /// `+ → −` at rate `∝ sin² kz`, at the minima of `U₊`.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionPattern {
    /// Spontaneous photon momentum projected uniformly on `[−ħk, ħk]`.
    #[default]
    Uniform,
    /// No recoil from spontaneous emission.
    None,
}

/// Momentum transfer from the absorbed lattice photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionRecoil {
    /// `±ħk` with random sign at every scattering event.
    #[default]
    RandomSign,
    /// Gaussian kicks whose variance follows the squared field gradients,
    /// the momentum diffusion of the standing waves seen by a localized atom.
    Gradient,
}

/// Constants of the two-level-manifold model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SisyphusModel {
    /// `c` in `U_± = c·U₀(−2 ± cos 2kz)`.
    pub potential_prefactor: f64,
    pub pumping: PumpingPattern,
    pub emission: EmissionPattern,
    pub absorption: AbsorptionRecoil,
    /// Keep the scattering events that leave the sublevel unchanged.
    pub elastic_scattering: bool,
    /// Uniform `|+⟩ ↔ |−⟩` coupling in `E_r`; zero for pure σ± light.
    pub raman_coupling: f64,
}

impl Default for SisyphusModel {
    fn default() -> Self {
        SisyphusModel {
            potential_prefactor: 0.5,
            pumping: PumpingPattern::Standard,
            emission: EmissionPattern::Uniform,
            absorption: AbsorptionRecoil::RandomSign,
            elastic_scattering: true,
            raman_coupling: 0.0,
        }
    }
}

fn default_wavevector() -> f64 {
    // 780 nm
    2.0 * std::f64::consts::PI / 0.780_241
}
fn default_mass() -> f64 {
    86.909_180
}
fn default_calibration() -> f64 {
    40.0
}
fn default_detuning_ratio() -> f64 {
    10.0
}
fn default_temperature() -> f64 {
    12.0
}
fn default_bins() -> usize {
    512
}
fn default_step_control() -> f64 {
    0.15
}
fn default_energy_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Nominal depth in recoil energies.
    pub depth_recoils: f64,
    /// 1/µm
    #[serde(default = "default_wavevector")]
    pub wavevector: f64,
    /// atomic mass units
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// Γ' in 1/ms; derived from the depth and `detuning_ratio` when absent.
    #[serde(default)]
    pub jump_rate_scale: Option<f64>,
    pub n_trajectories: usize,
    /// ms
    pub snapshot_times: Vec<f64>,
    /// µm
    pub initial_width: f64,
    /// Model depth per nominal recoil of depth.
    #[serde(default = "default_calibration")]
    pub depth_calibration: f64,
    /// `|Δ|/Γ`, fixing `ħΓ' = (3/2)(Γ/|Δ|)·U₀`.
    #[serde(default = "default_detuning_ratio")]
    pub detuning_ratio: f64,
    /// µK
    #[serde(default = "default_temperature")]
    pub initial_temperature: f64,
    /// Lattice-on lead-in with the cloud held in place, ms.
    #[serde(default)]
    pub equilibration_time: f64,
    #[serde(default)]
    pub model: SisyphusModel,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Symplectic step times the fastest local angular frequency.
    #[serde(default = "default_step_control")]
    pub step_control: f64,
    /// Allowed relative energy drift between jumps.
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
}

impl LatticeConfig {
    /// Configuration with every optional field at its default.
    pub fn new(
        depth_recoils: f64,
        n_trajectories: usize,
        snapshot_times: Vec<f64>,
        initial_width: f64,
    ) -> Self {
        LatticeConfig {
            depth_recoils,
            wavevector: default_wavevector(),
            mass: default_mass(),
            jump_rate_scale: None,
            n_trajectories,
            snapshot_times,
            initial_width,
            depth_calibration: default_calibration(),
            detuning_ratio: default_detuning_ratio(),
            initial_temperature: default_temperature(),
            equilibration_time: 0.0,
            model: SisyphusModel::default(),
            bins: default_bins(),
            step_control: default_step_control(),
            energy_tolerance: default_energy_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dom = |m: String| Err(Error::Domain(m));
        for (name, v) in [
            ("depth_recoils", self.depth_recoils),
            ("wavevector", self.wavevector),
            ("mass", self.mass),
            ("depth_calibration", self.depth_calibration),
            ("detuning_ratio", self.detuning_ratio),
            ("step_control", self.step_control),
            ("energy_tolerance", self.energy_tolerance),
            ("potential_prefactor", self.model.potential_prefactor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return dom(format!("{name} = {v} must be positive and finite"));
            }
        }
        for (name, v) in [
            ("initial_width", self.initial_width),
            ("initial_temperature", self.initial_temperature),
            ("equilibration_time", self.equilibration_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return dom(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if let Some(g) = self.jump_rate_scale {
            if !(g >= 0.0 && g.is_finite()) {
                return dom(format!(
                    "jump_rate_scale = {g} must be finite and non-negative"
                ));
            }
        }
        if !self.model.raman_coupling.is_finite() {
            return dom("raman_coupling must be finite".into());
        }
        if self.step_control > 0.5 {
            return dom(format!("step_control = {} above 0.5", self.step_control));
        }
        if self.n_trajectories == 0 {
            return dom("n_trajectories must be at least 1".into());
        }
        if self.snapshot_times.is_empty()
            || !self
                .snapshot_times
                .iter()
                .all(|t| *t > 0.0 && t.is_finite())
            || self.snapshot_times.windows(2).any(|w| w[1] <= w[0])
        {
            return dom(
                "snapshot_times must be non-empty, positive and strictly increasing".into(),
            );
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

    /// `ω_r = ħk²/2M` in 1/ms.
    pub fn recoil_frequency(&self) -> f64 {
        let k = self.wavevector * 1e6;
        HBAR * k * k / (2.0 * self.mass * AMU) * 1e-3
    }

    /// Recoil velocity `ħk/M` in µm/ms.
    pub fn recoil_velocity(&self) -> f64 {
        HBAR * self.wavevector * 1e6 / (self.mass * AMU) * 1e3
    }

    /// `U₀` of the simulated model, in `E_r`.
    pub fn model_depth(&self) -> f64 {
        self.depth_calibration * self.depth_recoils
    }

    /// `Γ'` in units of `ω_r`.
    pub fn jump_rate(&self) -> f64 {
        match self.jump_rate_scale {
            Some(g) => g / self.recoil_frequency(),
            None => 1.5 * self.model_depth() / self.detuning_ratio,
        }
    }

    /// Thermal momentum spread of the initial cloud in `ħk`.
    pub fn thermal_momentum(&self) -> f64 {
        let m = self.mass * AMU;
        (m * K_B * self.initial_temperature * 1e-6).sqrt() / (HBAR * self.wavevector * 1e6)
    }

    pub(crate) fn units(&self) -> Units {
        Units {
            omega_r: self.recoil_frequency(),
            k: self.wavevector,
        }
    }
}

/// Conversions between lab units (µm, ms) and lattice units.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Units {
    omega_r: f64,
    k: f64,
}

impl Units {
    pub(crate) fn time(&self, ms: f64) -> f64 {
        ms * self.omega_r
    }
    pub(crate) fn length(&self, um: f64) -> f64 {
        um * self.k
    }
    pub(crate) fn to_um(&self, z: f64) -> f64 {
        z / self.k
    }
}

/// Position-dependent optical potential and scattering rates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Landscape {
    /// `c·U₀`
    amp: f64,
    gamma: f64,
    swapped: bool,
    elastic: bool,
}

/// Scattering rates out of one sublevel at one position, in units of `ω_r`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rates {
    /// Stays in the sublevel, σ⁺ photon.
    pub sigma_plus: f64,
    /// Stays in the sublevel, σ⁻ photon.
    pub sigma_minus: f64,
    /// Changes sublevel, π photon.
    pub switch: f64,
}

impl Rates {
    pub fn total(&self) -> f64 {
        self.sigma_plus + self.sigma_minus + self.switch
    }
}

impl Landscape {
    pub(crate) fn new(cfg: &LatticeConfig) -> Self {
        Landscape {
            amp: cfg.model.potential_prefactor * cfg.model_depth(),
            gamma: cfg.jump_rate(),
            swapped: cfg.model.pumping == PumpingPattern::Swapped,
            elastic: cfg.model.elastic_scattering,
        }
    }

    /// `U_s(z)` for `s = ±1`.
    #[inline]
    pub(crate) fn potential(&self, z: f64, s: f64) -> f64 {
        self.amp * (-2.0 + s * (2.0 * z).cos())
    }

    /// `−dU_s/dz`
    #[inline]
    pub(crate) fn force(&self, z: f64, s: f64) -> f64 {
        2.0 * self.amp * s * (2.0 * z).sin()
    }

    pub(crate) fn minimum(&self) -> f64 {
        -3.0 * self.amp
    }

    /// Top of either potential; atoms above it are free to run.
    pub(crate) fn barrier(&self) -> f64 {
        -self.amp
    }

    pub(crate) fn depth(&self) -> f64 {
        2.0 * self.amp
    }

    /// Upper bound on the total scattering rate.
    pub(crate) fn max_rate(&self) -> f64 {
        if self.elastic {
            self.gamma
        } else {
            2.0 * self.gamma / 9.0
        }
    }

    /// `(sin² z, cos² z)` as seen by the pumping pattern.
    #[inline]
    fn weights(&self, z: f64) -> (f64, f64) {
        let s = z.sin();
        let s2 = s * s;
        if self.swapped {
            (1.0 - s2, s2)
        } else {
            (s2, 1.0 - s2)
        }
    }

    /// Rate of growth of `⟨Δp²⟩` from absorption in the gradient picture:
    /// the rate formula with `sin z` and `cos z` amplitudes replaced by their derivatives.
    #[inline]
    pub(crate) fn absorption_diffusion(&self, z: f64, s: f64) -> f64 {
        let (a, b) = self.weights(z);
        let e = if self.elastic { 1.0 } else { 0.0 };
        let g = self.gamma;
        if s > 0.0 {
            g * (e * (b + a / 9.0) + 2.0 * a / 9.0)
        } else {
            g * (e * (a + b / 9.0) + 2.0 * b / 9.0)
        }
    }

    #[inline]
    pub(crate) fn rates(&self, z: f64, s: f64) -> Rates {
        let (a, b) = self.weights(z);
        let g = self.gamma;
        let e = if self.elastic { 1.0 } else { 0.0 };
        if s > 0.0 {
            Rates {
                sigma_plus: e * g * a,
                sigma_minus: e * g * b / 9.0,
                switch: 2.0 * g * b / 9.0,
            }
        } else {
            Rates {
                sigma_plus: e * g * a / 9.0,
                sigma_minus: e * g * b,
                switch: 2.0 * g * a / 9.0,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rubidium_recoil_scales() {
        let c = LatticeConfig::new(4.8, 1, vec![1.0], 1.0);
        assert!(
            (c.recoil_frequency() - 23.7).abs() < 0.1,
            "{}",
            c.recoil_frequency()
        );
        assert!((c.recoil_velocity() - 5.88).abs() < 0.02);
        // 12 µK: sqrt(M k T) ≈ 5.8 ħk
        assert!(
            (c.thermal_momentum() - 5.76).abs() < 0.05,
            "{}",
            c.thermal_momentum()
        );
    }

    #[test]
    fn pumping_happens_at_the_hilltops() {
        let c = LatticeConfig::new(4.8, 1, vec![1.0], 1.0);
        let l = Landscape::new(&c);
        // U₊ is maximal at z = 0, U₋ at z = π/2
        assert!(l.potential(0.0, 1.0) > l.potential(0.3, 1.0));
        assert!(l.rates(0.0, 1.0).switch > 0.0);
        assert!(l.rates(std::f64::consts::FRAC_PI_2, 1.0).switch.abs() < 1e-15);
        assert!(l.rates(std::f64::consts::FRAC_PI_2, -1.0).switch > 0.0);
        // total out of |+⟩ is Γ'(sin² + cos²/3)
        let z = 0.7f64;
        let r = l.rates(z, 1.0);
        let want = l.gamma * (z.sin().powi(2) + z.cos().powi(2) / 3.0);
        assert!((r.total() - want).abs() < 1e-12);
        assert!(r.total() <= l.max_rate());
        let sw = Landscape { swapped: true, ..l };
        assert!(sw.rates(0.0, 1.0).switch.abs() < 1e-15);
    }

    #[test]
    fn force_is_minus_gradient() {
        let l = Landscape::new(&LatticeConfig::new(3.0, 1, vec![1.0], 1.0));
        for &z in &[0.1, 1.0, 2.5] {
            for &s in &[1.0, -1.0] {
                let h = 1e-6;
                let fd = -(l.potential(z + h, s) - l.potential(z - h, s)) / (2.0 * h);
                assert!((fd - l.force(z, s)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn validation() {
        let mut c = LatticeConfig::new(4.8, 10, vec![1.0, 2.0], 1.0);
        assert!(c.validate().is_ok());
        c.snapshot_times = vec![2.0, 1.0];
        assert!(c.validate().is_err());
        let c = LatticeConfig::new(-1.0, 10, vec![1.0], 1.0);
        assert!(c.validate().is_err());
    }
}
