use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::snapshot::DensitySnapshot;
use crate::stable::{stable_fit, unit_half_width, StableFit, StableFitOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwhmMethod {
    StableFit,
    /// Fit failed; width read off the raw curve's half-maximum crossings.
    HalfMaxCrossing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FwhmEstimate {
    pub width: f64,
    /// One standard error from the fit covariance; zero for the fallback.
    pub uncertainty: f64,
    pub method: FwhmMethod,
    pub fit: Option<StableFit>,
}

/// Full width at half maximum of the fitted stable curve, `2 γ h(α)`.
pub fn fwhm_from_fit(fit: &StableFit) -> Result<(f64, f64)> {
    let alpha = fit.params.alpha;
    let gamma = fit.params.scale;
    let h = unit_half_width(alpha)?;
    let da = 1e-4;
    let (a_lo, a_hi) = if alpha + da > 2.0 {
        (alpha - da, alpha)
    } else {
        (alpha, alpha + da)
    };
    let dh = (unit_half_width(a_hi)? - unit_half_width(a_lo)?) / (a_hi - a_lo);
    let g = [2.0 * gamma * dh, 2.0 * h];
    let c = &fit.covariance;
    let var = g[0] * g[0] * c[0][0] + 2.0 * g[0] * g[1] * c[0][1] + g[1] * g[1] * c[1][1];
    Ok((
        2.0 * gamma * h,
        if var.is_finite() {
            var.max(0.0).sqrt()
        } else {
            f64::NAN
        },
    ))
}

/// Width from linear interpolation of the half-maximum crossings around the peak.
pub fn half_max_crossing(curve: &DensitySnapshot) -> f64 {
    let x = &curve.x_grid;
    let y = &curve.density;
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("snapshot is non-empty");
    let half = 0.5 * ymax;
    let mut left = x[0];
    for i in (0..imax).rev() {
        if y[i] < half {
            left = x[i] + (half - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for i in imax + 1..y.len() {
        if y[i] < half {
            right = x[i - 1] + (y[i - 1] - half) / (y[i - 1] - y[i]) * (x[i] - x[i - 1]);
            break;
        }
    }
    right - left
}

/// FWHM from a symmetric stable fit, optionally ignoring a central window.
pub fn extract_fwhm(curve: &DensitySnapshot, exclusion: Option<f64>) -> Result<FwhmEstimate> {
    let opts = StableFitOptions {
        exclude_center: exclusion,
        ..StableFitOptions::default()
    };
    match stable_fit(curve, &opts) {
        Ok(fit) => {
            let (width, uncertainty) = fwhm_from_fit(&fit)?;
            Ok(FwhmEstimate {
                width,
                uncertainty,
                method: FwhmMethod::StableFit,
                fit: Some(fit),
            })
        }
        Err(crate::Error::Input(msg)) => Err(crate::Error::Input(msg)),
        Err(_) => Ok(FwhmEstimate {
            width: half_max_crossing(curve),
            uncertainty: 0.0,
            method: FwhmMethod::HalfMaxCrossing,
            fit: None,
        }),
    }
}
