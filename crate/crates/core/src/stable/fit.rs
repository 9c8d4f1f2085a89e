use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::SymmetricKernel;
use super::StableParams;
use crate::error::{Error, Result};
use crate::lm::{self, LmOptions};
use crate::snapshot::DensitySnapshot;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StableFitOptions {
    /// Half-width of a window about the curve centre left out of the residuals.
    pub exclude_center: Option<f64>,
    pub alpha_min: f64,
    pub max_iterations: usize,
}

impl Default for StableFitOptions {
    fn default() -> Self {
        StableFitOptions {
            exclude_center: None,
            alpha_min: 0.3,
            max_iterations: 200,
        }
    }
}

/// Least-squares symmetric stable fit `A · pdf(x; α, γ, δ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableFit {
    pub params: StableParams,
    pub amplitude: f64,
    pub r_squared: f64,
    /// Covariance of `(α, γ, δ, A)`, row-major.
    pub covariance: [[f64; 4]; 4],
    pub points_used: usize,
    pub iterations: usize,
}

impl StableFit {
    pub fn alpha_std(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }
}

/// Half width at half maximum of the unit-scale symmetric law.
pub fn unit_half_width(alpha: f64) -> Result<f64> {
    StableParams::symmetric(alpha, 1.0, 0.0)?;
    let kernel = SymmetricKernel::new(alpha)?;
    let half = 0.5 * kernel.reduced(0.0);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while kernel.reduced(hi) > half {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numeric(format!(
                "half width bracket failed for alpha = {alpha}"
            )));
        }
    }
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if kernel.reduced(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Centre of mass-median and a crude half width from the raw curve.
fn initial_shape(x: &[f64], y: &[f64]) -> (f64, f64) {
    let total: f64 = y.iter().sum();
    let mut acc = 0.0;
    let mut center = x[x.len() / 2];
    for (i, &v) in y.iter().enumerate() {
        if acc + v >= 0.5 * total {
            let frac = if v > 0.0 {
                (0.5 * total - acc) / v
            } else {
                0.5
            };
            let dx = if i + 1 < x.len() {
                x[i + 1] - x[i]
            } else {
                x[i] - x[i - 1]
            };
            center = x[i] + (frac - 0.5) * dx;
            break;
        }
        acc += v;
    }
    // light smoothing before locating the half-maximum crossings
    let smooth: Vec<f64> = (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(y.len());
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let (imax, &ymax) = smooth
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let half = 0.5 * ymax;
    let mut left = x[0];
    for i in (0..imax).rev() {
        if smooth[i] < half {
            let t = (half - smooth[i]) / (smooth[i + 1] - smooth[i]);
            left = x[i] + t * (x[i + 1] - x[i]);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for i in imax + 1..y.len() {
        if smooth[i] < half {
            let t = (smooth[i - 1] - half) / (smooth[i - 1] - smooth[i]);
            right = x[i - 1] + t * (x[i] - x[i - 1]);
            break;
        }
    }
    let hw = 0.5 * (right - left);
    let span = x[x.len() - 1] - x[0];
    (center, if hw > 0.0 { hw } else { 0.25 * span })
}

fn model(xs: &[f64], alpha: f64, gamma: f64, delta: f64) -> Result<Vec<f64>> {
    let kernel = SymmetricKernel::new(alpha)?;
    Ok(xs
        .par_iter()
        .map(|&x| kernel.reduced(((x - delta) / gamma).abs()) / gamma)
        .collect())
}

/// Fits the symmetric stable family with free amplitude to `curve`.
pub fn stable_fit(curve: &DensitySnapshot, options: &StableFitOptions) -> Result<StableFit> {
    if curve.len() < 20 {
        return Err(Error::Input(format!(
            "stable fit needs at least 20 points, got {}",
            curve.len()
        )));
    }
    if curve.density.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Input(
            "curve has negative or non-finite values".into(),
        ));
    }
    if !(curve.integral() > 0.0) {
        return Err(Error::Input("curve integrates to zero".into()));
    }
    let (center, hw) = initial_shape(&curve.x_grid, &curve.density);
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .x_grid
        .iter()
        .zip(&curve.density)
        .filter(|(x, _)| match options.exclude_center {
            Some(w) => (**x - center).abs() >= w,
            None => true,
        })
        .map(|(x, y)| (*x, *y))
        .unzip();
    if xs.len() < 20 {
        return Err(Error::Input(
            "fewer than 20 points remain outside the excluded window".into(),
        ));
    }
    let span = curve.x_grid[curve.len() - 1] - curve.x_grid[0];
    let alpha_min = options.alpha_min.clamp(0.25, 2.0);

    // coarse scan over α with γ matched to the observed half width
    let mut best: Option<(f64, [f64; 4])> = None;
    let mut a = 2.0;
    while a >= alpha_min - 1e-12 {
        let gamma = hw / unit_half_width(a)?;
        let m = model(&xs, a, gamma, center)?;
        let mm: f64 = m.iter().map(|v| v * v).sum();
        if mm > 0.0 {
            let amp = (m.iter().zip(&ys).map(|(p, q)| p * q).sum::<f64>() / mm).max(0.0);
            let cost: f64 = m.iter().zip(&ys).map(|(p, q)| (amp * p - q).powi(2)).sum();
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, [a, gamma.ln(), center, amp]));
            }
        }
        a -= 0.15;
    }
    let start = best
        .ok_or_else(|| Error::Input("curve has no usable shape".into()))?
        .1;

    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let m = model(&xs, p[0], p[1].exp(), p[2])?;
        Ok(m.iter().zip(&ys).map(|(v, y)| p[3] * v - y).collect())
    };
    let dx = curve.dx();
    let lower = [alpha_min, (dx * 1e-2).ln(), curve.x_grid[0], 0.0];
    let upper = [
        2.0,
        (span * 1e2).ln(),
        curve.x_grid[curve.len() - 1],
        f64::INFINITY,
    ];
    let step = [1e-5, 1e-6, 1e-6 * span, 1e-6 * start[3].max(1e-300)];
    let out = lm::minimize(
        residuals,
        &start,
        &lower,
        &upper,
        &step,
        &LmOptions {
            max_iterations: options.max_iterations,
            ..LmOptions::default()
        },
    )?;

    let p = &out.params;
    let gamma = p[1].exp();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - out.cost / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let dof = (ys.len() as f64 - 4.0).max(1.0);
    let sigma2 = out.cost / dof;
    let mut covariance = [[0.0; 4]; 4];
    if let Some(inv) = lm::invert(&out.jtj, 4) {
        // d γ = γ d ln γ
        let jac = [1.0, gamma, 1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                covariance[i][j] = sigma2 * inv[i * 4 + j] * jac[i] * jac[j];
            }
        }
    } else {
        for row in covariance.iter_mut() {
            row.fill(f64::NAN);
        }
    }
    Ok(StableFit {
        params: StableParams::symmetric(p[0], gamma, p[2])?,
        amplitude: p[3],
        r_squared,
        covariance,
        points_used: ys.len(),
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_widths_of_closed_forms() {
        assert!((unit_half_width(1.0).unwrap() - 1.0).abs() < 1e-9);
        // Gaussian with variance 2: HWHM = sqrt(2 ln 2) * sqrt(2)
        let g = (2.0 * 2f64.ln()).sqrt() * 2f64.sqrt();
        assert!((unit_half_width(2.0).unwrap() - g).abs() < 1e-9);
    }

    #[test]
    fn exact_curves_are_recovered() {
        for &(alpha, gamma, delta) in &[
            (1.0, 2.0, 0.5),
            (1.5, 1.0, 0.0),
            (2.0, 3.0, -1.0),
            (0.8, 1.0, 0.0),
        ] {
            let p = StableParams::symmetric(alpha, gamma, delta).unwrap();
            let curve = DensitySnapshot::from_fn(
                1.0,
                delta - 15.0 * gamma,
                delta + 15.0 * gamma,
                201,
                |x| 3.0 * super::super::stable_pdf(&p, x).unwrap(),
            )
            .unwrap();
            let fit = stable_fit(&curve, &StableFitOptions::default()).unwrap();
            assert!(
                (fit.params.alpha - alpha).abs() < 1e-4,
                "{alpha}: {:?}",
                fit.params
            );
            assert!((fit.params.scale / gamma - 1.0).abs() < 1e-4);
            assert!((fit.amplitude - 3.0).abs() < 1e-3);
            assert!(fit.r_squared > 0.999_999);
        }
    }

    #[test]
    fn central_window_is_ignored() {
        let p = StableParams::symmetric(1.4, 1.0, 0.0).unwrap();
        let curve = DensitySnapshot::from_fn(1.0, -20.0, 20.0, 401, |x| {
            let bump = if x.abs() < 0.5 { 0.2 } else { 0.0 };
            super::super::stable_pdf(&p, x).unwrap() + bump
        })
        .unwrap();
        let opts = StableFitOptions {
            exclude_center: Some(0.6),
            ..Default::default()
        };
        let fit = stable_fit(&curve, &opts).unwrap();
        assert!((fit.params.alpha - 1.4).abs() < 1e-3);
    }

    #[test]
    fn degenerate_inputs() {
        let flat =
            DensitySnapshot::new(1.0, (0..30).map(f64::from).collect(), vec![0.0; 30]).unwrap();
        assert!(matches!(
            stable_fit(&flat, &StableFitOptions::default()),
            Err(Error::Input(_))
        ));
        let short =
            DensitySnapshot::new(1.0, (0..5).map(f64::from).collect(), vec![1.0; 5]).unwrap();
        assert!(matches!(
            stable_fit(&short, &StableFitOptions::default()),
            Err(Error::Input(_))
        ));
    }
}
