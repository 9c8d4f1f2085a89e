use levydiff_core::analysis::{extract_fwhm, fit_dynamical_exponent};
use levydiff_core::lattice::{equilibrate, run_mcwf, run_semiclassical, GridSpec, LatticeConfig};

#[test]
fn momentum_tails_grow_as_the_lattice_gets_shallower() {
    let deep = equilibrate(&LatticeConfig::new(12.0, 2000, vec![1.0], 1.0), 1.0, 3).unwrap();
    let shallow = equilibrate(&LatticeConfig::new(2.0, 2000, vec![1.0], 1.0), 1.0, 3).unwrap();
    assert!(deep.excess_kurtosis < 1.0, "deep {}", deep.excess_kurtosis);
    assert!(
        shallow.excess_kurtosis > 1.0,
        "shallow {}",
        shallow.excess_kurtosis
    );
}

#[test]
fn deep_lattice_spreads_like_normal_diffusion() {
    let times: Vec<f64> = (0..7).map(|i| 2.0 * 1.6f64.powi(i)).collect();
    let mut cfg = LatticeConfig::new(12.0, 600, times, 1.0);
    cfg.equilibration_time = 1.0;
    let run = run_semiclassical(&cfg, 4).unwrap();
    let widths: Vec<(f64, f64)> = run
        .snapshots
        .iter()
        .map(|s| (s.time, extract_fwhm(s, None).unwrap().width))
        .collect();
    let rms: Vec<(f64, f64)> = cfg
        .snapshot_times
        .iter()
        .zip(&run.positions)
        .map(|(t, xs)| {
            (
                *t,
                (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt(),
            )
        })
        .collect();
    let from_msd = fit_dynamical_exponent(&rms).unwrap().exponent;
    let from_fwhm = fit_dynamical_exponent(&widths).unwrap().exponent;
    assert!((1.6..=2.4).contains(&from_msd), "msd {from_msd}");
    assert!((1.6..=2.4).contains(&from_fwhm), "fwhm {from_fwhm}");
    assert!(run.max_energy_drift <= cfg.energy_tolerance);
    for s in &run.snapshots {
        assert!((s.integral() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn quantum_trajectories_keep_their_invariants() {
    let cfg = LatticeConfig::new(4.8, 12, vec![0.02, 0.04], 0.5);
    let run = run_mcwf(
        &cfg,
        &GridSpec {
            points: 1024,
            periods: 64,
        },
        2,
    )
    .unwrap();
    assert!(run.jumps > 0);
    assert!(run.max_norm_rise <= 1e-12, "{}", run.max_norm_rise);
    assert!(run.max_renorm_error <= 1e-12, "{}", run.max_renorm_error);
    assert!(run.max_channel_error <= 1e-12, "{}", run.max_channel_error);
    for s in &run.snapshots {
        assert!((s.integral() - 1.0).abs() < 1e-3);
    }
}
