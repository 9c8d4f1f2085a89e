use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{linear_fit, ExponentFit, FitMethod};
use crate::error::{Error, Result};

/// Dynamical exponent `α` from `width ∝ t^{1/α}` by least squares in log–log.
///
/// `ci95` is the delta-method image of the slope's 95% Student-t interval.
pub fn fit_dynamical_exponent(series: &[(f64, f64)]) -> Result<ExponentFit> {
    if series.len() < 4 {
        return Err(Error::Input(format!(
            "need at least 4 (time, width) points, got {}",
            series.len()
        )));
    }
    if let Some(bad) = series
        .iter()
        .find(|(t, w)| !(*t > 0.0 && *w > 0.0 && t.is_finite() && w.is_finite()))
    {
        return Err(Error::Input(format!(
            "non-positive or non-finite point {bad:?}"
        )));
    }
    // logs relative to the first point: a power-of-two rescaling of either axis cancels exactly
    let (t0, w0) = series[0];
    let pts: Vec<(f64, f64)> = series
        .iter()
        .map(|(t, w)| ((t / t0).ln(), (w / w0).ln()))
        .collect();
    let fit = linear_fit(&pts).ok_or_else(|| Error::Input("times have zero variance".into()))?;
    if !(fit.slope > 0.0) {
        return Err(Error::Analysis(format!(
            "width does not grow (slope {:.4})",
            fit.slope
        )));
    }
    let dof = (fit.n - 2) as f64;
    let tq = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Numeric(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        exponent: 1.0 / fit.slope,
        ci95: tq * fit.slope_stderr / (fit.slope * fit.slope),
        r_squared: fit.r_squared,
        method: FitMethod::FwhmPowerLaw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let s: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0, 40.0]
            .iter()
            .map(|&t: &f64| (t, 3.0 * t.sqrt()))
            .collect();
        let f = fit_dynamical_exponent(&s).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let s: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|&t: &f64| (t, 0.3 * t.powf(0.8)))
            .collect();
        assert!((fit_dynamical_exponent(&s).unwrap().exponent - 1.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(fit_dynamical_exponent(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(fit_dynamical_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 4.0)]).is_err());
        assert!(fit_dynamical_exponent(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)]).is_err());
    }
}
