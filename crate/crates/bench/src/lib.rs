//! Shared inputs for the criterion benches.

use levydiff_core::ctrw::{Correlation, DwellLaw, InitialProfile, WalkConfig};
use levydiff_core::stable::{stable_pdf_many, StableParams};
use levydiff_core::DensitySnapshot;

/// Unit-normalised stable kernels with scale `t^{1/alpha}` on a 512-point grid.
pub fn kernel_series(alpha: f64, times: &[f64]) -> Vec<DensitySnapshot> {
    times
        .iter()
        .map(|&t| {
            let gamma = t.powf(1.0 / alpha);
            let half = 25.0 * gamma;
            let blank = DensitySnapshot::from_fn(t, -half, half, 512, |_| 0.0).unwrap();
            let p = StableParams::symmetric(alpha, gamma, 0.0).unwrap();
            let y = stable_pdf_many(&p, &blank.x_grid).unwrap();
            DensitySnapshot::new(t, blank.x_grid, y)
                .unwrap()
                .normalized()
                .unwrap()
        })
        .collect()
}

pub fn thirteen_times() -> Vec<f64> {
    (0..13).map(|i| 10.0 + 2.5 * i as f64).collect()
}

pub fn walk(n_atoms: usize, correlation: Correlation) -> WalkConfig {
    WalkConfig {
        mu: 1.2,
        beta_dwell: 0.7,
        v_scale: 1.0,
        flight_scale: 0.3,
        dwell_scale: 0.3,
        correlation,
        initial_width: 5.0,
        n_atoms,
        snapshot_times: thirteen_times(),
        initial_profile: InitialProfile::Gaussian,
        dwell_law: DwellLaw::Stable,
        bins: 512,
    }
}
