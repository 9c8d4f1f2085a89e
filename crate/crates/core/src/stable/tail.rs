use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SampleBatch;
use crate::analysis::{ExponentFit, FitMethod};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailOptions {
    pub tail_fraction: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            tail_fraction: 0.05,
            bootstrap_resamples: 200,
            seed: 0x5eed,
        }
    }
}

/// Hill estimate from the `k` largest of `abs_dev` (which is reordered).
pub fn hill_estimate(abs_dev: &mut [f64], k: usize) -> Option<f64> {
    let n = abs_dev.len();
    if k == 0 || k >= n {
        return None;
    }
    // after selection, [n-k-1] is the (k+1)-th largest and everything above it is larger
    abs_dev.select_nth_unstable_by(n - k - 1, f64::total_cmp);
    let threshold = abs_dev[n - k - 1];
    if !(threshold > 0.0) {
        return None;
    }
    let ln_t = threshold.ln();
    let s: f64 = abs_dev[n - k..].iter().map(|v| v.ln() - ln_t).sum();
    (s > 0.0).then(|| k as f64 / s)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Hill estimator of the tail index of `|x − median|` with a percentile
/// bootstrap confidence interval.
pub fn tail_exponent(samples: &SampleBatch, options: &TailOptions) -> Result<ExponentFit> {
    let n = samples.values.len();
    if n < 1000 {
        return Err(Error::Input(format!(
            "tail fit needs at least 1000 samples, got {n}"
        )));
    }
    if !(options.tail_fraction > 0.0 && options.tail_fraction <= 0.2) {
        return Err(Error::Input("tail_fraction must lie in (0, 0.2]".into()));
    }
    let k = (options.tail_fraction * n as f64).floor() as usize;
    if k < 10 {
        return Err(Error::Input(format!("only {k} tail points")));
    }
    let med = median(&samples.values);
    let dev: Vec<f64> = samples.values.iter().map(|x| (x - med).abs()).collect();
    let mut work = dev.clone();
    let estimate =
        hill_estimate(&mut work, k).ok_or_else(|| Error::Input("tail is degenerate".into()))?;

    // goodness: log survival vs log deviation over the tail
    let mut tail: Vec<f64> = work[n - k - 1..].to_vec();
    tail.sort_by(|a, b| b.total_cmp(a));
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (v.ln(), ((i as f64 + 0.5) / n as f64).ln()))
        .collect();
    let r_squared = crate::analysis::linear_fit(&pts)
        .map(|f| f.r_squared)
        .unwrap_or(0.0);

    let mut boots: Vec<f64> = (0..options.bootstrap_resamples)
        .into_par_iter()
        .filter_map(|b| {
            let mut r = rng::stream(options.seed, "hill_bootstrap", b as u64);
            let mut resample: Vec<f64> = (0..n).map(|_| dev[r.random_range(0..n)]).collect();
            hill_estimate(&mut resample, k)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let ci95 = if boots.len() >= 2 {
        let lo = boots[((0.025 * (boots.len() - 1) as f64).round()) as usize];
        let hi = boots[((0.975 * (boots.len() - 1) as f64).round()) as usize];
        0.5 * (hi - lo)
    } else {
        0.0
    };
    Ok(ExponentFit {
        exponent: estimate,
        ci95,
        r_squared,
        method: FitMethod::Tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hill_on_exact_pareto_quantiles() {
        // deterministic Pareto(2) quantiles
        let n = 100_000;
        let mut v: Vec<f64> = (0..n)
            .map(|i| (1.0 - (i as f64 + 0.5) / n as f64).powf(-0.5))
            .collect();
        let est = hill_estimate(&mut v, 5000).unwrap();
        assert!((est - 2.0).abs() < 0.02);
    }

    #[test]
    fn input_checks() {
        let b = SampleBatch {
            values: vec![1.0; 500],
            seed: 0,
            count: 500,
        };
        assert!(tail_exponent(&b, &TailOptions::default()).is_err());
        let b = SampleBatch {
            values: (0..2000).map(f64::from).collect(),
            seed: 0,
            count: 2000,
        };
        let opts = TailOptions {
            tail_fraction: 0.5,
            ..Default::default()
        };
        assert!(tail_exponent(&b, &opts).is_err());
    }
}
