use serde::{Deserialize, Serialize};

use super::{ExponentFit, FitMethod};
use crate::error::{Error, Result};
use crate::snapshot::DensitySnapshot;
use crate::stable::{stable_fit, StableFit, StableFitOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapePoint {
    pub time: f64,
    pub fit: Option<ExponentFit>,
    pub stable: Option<StableFit>,
    /// Set when the fit at this time failed.
    pub error: Option<String>,
}

/// Shape exponent versus time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSeries {
    pub points: Vec<ShapePoint>,
    /// Mean exponent over the final third of the successful fits.
    pub asymptote: Option<f64>,
}

impl ShapeSeries {
    pub fn exponents(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.fit.map(|f| (p.time, f.exponent)))
            .collect()
    }

    pub fn mean_r_squared(&self) -> Option<f64> {
        let r: Vec<f64> = self
            .points
            .iter()
            .filter_map(|p| p.fit.map(|f| f.r_squared))
            .collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }

    /// Earliest time from which every later exponent stays within `tol` of
    /// the asymptote.
    pub fn settling_time(&self, tol: f64) -> Option<f64> {
        let asym = self.asymptote?;
        let pts = self.exponents();
        let mut settled = None;
        for &(t, a) in pts.iter().rev() {
            if (a - asym).abs() <= tol {
                settled = Some(t);
            } else {
                break;
            }
        }
        settled
    }
}

/// Per-snapshot Lévy fits.
pub fn fit_shape_exponent(
    snapshots: &[DensitySnapshot],
    options: &StableFitOptions,
) -> Result<ShapeSeries> {
    if snapshots.is_empty() {
        return Err(Error::Input("no snapshots to fit".into()));
    }
    let points: Vec<ShapePoint> = snapshots
        .iter()
        .map(|s| match stable_fit(s, options) {
            Ok(fit) => ShapePoint {
                time: s.time,
                fit: Some(ExponentFit {
                    exponent: fit.params.alpha,
                    ci95: 1.96 * fit.alpha_std(),
                    r_squared: fit.r_squared,
                    method: FitMethod::LevyShape,
                }),
                stable: Some(fit),
                error: None,
            },
            Err(e) => ShapePoint {
                time: s.time,
                fit: None,
                stable: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let ok: Vec<f64> = points
        .iter()
        .filter_map(|p| p.fit.map(|f| f.exponent))
        .collect();
    let asymptote = if ok.is_empty() {
        None
    } else {
        let tail = ok.len().div_ceil(3);
        let last = &ok[ok.len() - tail..];
        Some(last.iter().sum::<f64>() / last.len() as f64)
    };
    Ok(ShapeSeries { points, asymptote })
}
