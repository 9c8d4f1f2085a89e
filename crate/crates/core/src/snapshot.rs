use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::trapezoid;

/// Minimum grid size for snapshots produced by the simulators or ingestion.
pub const MIN_GRID_POINTS: usize = 64;

/// A spatial density curve `W(x, t)` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySnapshot {
    /// Milliseconds.
    pub time: f64,
    /// Uniformly spaced positions, micrometres.
    pub x_grid: Vec<f64>,
    /// Non-negative density, per micrometre.
    pub density: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl DensitySnapshot {
    pub fn new(time: f64, x_grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let s = DensitySnapshot {
            time,
            x_grid,
            density,
            meta: BTreeMap::new(),
        };
        s.check_shape()?;
        Ok(s)
    }

    /// Builds a snapshot by evaluating `f` on `n` uniform points over `[lo, hi]`.
    pub fn from_fn(time: f64, lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::Input(
                "grid needs at least two points and hi > lo".into(),
            ));
        }
        let dx = (hi - lo) / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| lo + dx * i as f64).collect();
        let y = x.iter().map(|&v| f(v)).collect();
        Self::new(time, x, y)
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.x_grid.len();
        if n < 2 || n != self.density.len() {
            return Err(Error::Input(format!(
                "grid has {n} points and density {} values",
                self.density.len()
            )));
        }
        if !self.time.is_finite() {
            return Err(Error::Input("time must be finite".into()));
        }
        let dx = (self.x_grid[n - 1] - self.x_grid[0]) / (n - 1) as f64;
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::Input("x grid is not strictly increasing".into()));
        }
        for w in self.x_grid.windows(2) {
            let step = w[1] - w[0];
            if !(step > 0.0) {
                return Err(Error::Input("x grid is not strictly increasing".into()));
            }
            if (step - dx).abs() > 1e-6 * dx {
                return Err(Error::Input("x grid is not uniformly spaced".into()));
            }
        }
        if let Some(v) = self.density.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Input(format!(
                "density value {v} is negative or not finite"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_grid[self.len() - 1] - self.x_grid[0]) / (self.len() - 1) as f64
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.density, self.dx())
    }

    /// Copy rescaled to unit trapezoidal integral.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.integral();
        if !(total > 0.0) {
            return Err(Error::Input(
                "cannot normalize a curve with zero integral".into(),
            ));
        }
        let mut out = self.clone();
        out.density.iter_mut().for_each(|v| *v /= total);
        Ok(out)
    }
}

/// Binning policy for position ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub bins: usize,
    /// Central fraction of positions the grid should span.
    pub coverage: f64,
    /// Upper bound on the half-span in interquartile ranges about the median.
    pub iqr_half_span: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bins: 512,
            coverage: 0.999,
            iqr_half_span: 10.0,
        }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Histogram of `positions` as a unit-integral density snapshot.
///
/// The grid spans the central `coverage` of the positions, narrowed to
/// `median ± iqr_half_span · IQR` when that is tighter; positions outside the
/// grid are dropped before normalization.
pub fn histogram(time: f64, positions: &[f64], spec: &HistogramSpec) -> Result<DensitySnapshot> {
    if positions.is_empty() {
        return Err(Error::Input("no positions to histogram".into()));
    }
    if spec.bins < MIN_GRID_POINTS {
        return Err(Error::Domain(format!(
            "histogram needs at least {MIN_GRID_POINTS} bins"
        )));
    }
    if !(spec.coverage > 0.0 && spec.coverage <= 1.0) {
        return Err(Error::Domain("coverage must lie in (0, 1]".into()));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - spec.coverage);
    let mut lo = quantile_sorted(&sorted, tail);
    let mut hi = quantile_sorted(&sorted, 1.0 - tail);
    let median = quantile_sorted(&sorted, 0.5);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if spec.iqr_half_span > 0.0 && iqr > 0.0 {
        lo = lo.max(median - spec.iqr_half_span * iqr);
        hi = hi.min(median + spec.iqr_half_span * iqr);
    }
    if !(hi > lo) {
        let pad = (1e-9 * median.abs()).max(1e-6);
        lo = median - pad;
        hi = median + pad;
    }
    let bins = spec.bins;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in &sorted {
        if x < lo || x > hi {
            continue;
        }
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let x: Vec<f64> = (0..bins).map(|k| lo + width * (k as f64 + 0.5)).collect();
    let density: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let snap = DensitySnapshot::new(time, x, density)?;
    let kept: u64 = counts.iter().sum();
    snap.normalized().map(|s| {
        s.with_meta("atoms", positions.len())
            .with_meta("atoms_in_grid", kept)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_is_unit_normalized() {
        let xs: Vec<f64> = (0..10_000)
            .map(|i| ((i as f64 + 0.5) / 10_000.0 - 0.5) * 4.0)
            .collect();
        let h = histogram(1.0, &xs, &HistogramSpec::default()).unwrap();
        assert_eq!(h.len(), 512);
        assert!((h.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_positions_still_histogram() {
        let h = histogram(0.0, &[3.0; 100], &HistogramSpec::default()).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let e = DensitySnapshot::new(1.0, vec![0.0, 1.0, 3.0], vec![1.0, 1.0, 1.0]);
        assert!(matches!(e, Err(Error::Input(_))));
        let e = DensitySnapshot::new(1.0, vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]);
        assert!(matches!(e, Err(Error::Input(_))));
    }

    #[test]
    fn rejects_negative_density() {
        assert!(DensitySnapshot::new(1.0, vec![0.0, 1.0], vec![1.0, -0.1]).is_err());
    }
}
