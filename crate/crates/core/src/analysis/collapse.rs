use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interp::MonotoneCurve;
use crate::error::{Error, Result};
use crate::quad::trapezoid;
use crate::snapshot::DensitySnapshot;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseOptions {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub grid_points: usize,
    /// Points on the shared grid of rescaled curves.
    pub common_points: usize,
    pub refine_tol: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            alpha_min: 0.8,
            alpha_max: 3.0,
            grid_points: 45,
            common_points: 512,
            refine_tol: 1e-3,
        }
    }
}

/// The `m(α)` curve, its minimiser, and the curves collapsed at the minimiser.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseResult {
    pub alpha_grid: Vec<f64>,
    pub m_values: Vec<f64>,
    pub alpha_star: f64,
    pub m_star: f64,
    pub collapsed_curves: Vec<DensitySnapshot>,
    pub boundary_warning: Option<String>,
}

/// `W̃(x) = s W(x s)` with `s = t^{1/α}`, on the correspondingly scaled grid.
pub fn rescale_snapshot(snapshot: &DensitySnapshot, alpha: f64) -> DensitySnapshot {
    let s = snapshot.time.powf(1.0 / alpha);
    let mut out = snapshot.clone();
    out.x_grid.iter_mut().for_each(|x| *x /= s);
    out.density.iter_mut().for_each(|v| *v *= s);
    out
}

fn check_series(snapshots: &[DensitySnapshot]) -> Result<()> {
    if snapshots.len() < 2 {
        return Err(Error::Input(
            "self-similarity needs at least two snapshots".into(),
        ));
    }
    for s in snapshots {
        if !(s.time > 0.0) {
            return Err(Error::Input(format!(
                "snapshot time {} is not positive",
                s.time
            )));
        }
        let total = s.integral();
        if (total - 1.0).abs() > 1e-3 {
            return Err(Error::Input(format!(
                "snapshot at t = {} integrates to {total:.6}, expected 1",
                s.time
            )));
        }
    }
    Ok(())
}

struct Rescaled {
    curve: MonotoneCurve,
    scale: f64,
}

impl Rescaled {
    fn lo(&self) -> f64 {
        self.curve.lo() / self.scale
    }
    fn hi(&self) -> f64 {
        self.curve.hi() / self.scale
    }
    fn eval(&self, x: f64) -> f64 {
        self.scale * self.curve.eval(x * self.scale)
    }
}

fn prepare(snapshots: &[DensitySnapshot], alpha: f64) -> Vec<Rescaled> {
    snapshots
        .iter()
        .map(|s| Rescaled {
            curve: MonotoneCurve::new(s.x_grid[0], s.dx(), &s.density),
            scale: s.time.powf(1.0 / alpha),
        })
        .collect()
}

/// Rescaled curves sampled on the intersection of their supports.
fn common_curves(
    snapshots: &[DensitySnapshot],
    alpha: f64,
    points: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let rescaled = prepare(snapshots, alpha);
    let (ilo, lo) = rescaled
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.lo()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two snapshots");
    let (ihi, hi) = rescaled
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.hi()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two snapshots");
    if !(hi > lo) {
        return Err(Error::Analysis(format!(
            "rescaled supports of snapshots at t = {} and t = {} do not overlap for alpha = {alpha}",
            snapshots[ilo].time, snapshots[ihi].time
        )));
    }
    let dx = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|k| lo + dx * k as f64).collect();
    let curves = rescaled
        .iter()
        .map(|r| grid.iter().map(|&x| r.eval(x)).collect())
        .collect();
    Ok((grid, curves))
}

fn measure_with(snapshots: &[DensitySnapshot], alpha: f64, points: usize) -> Result<f64> {
    let (grid, curves) = common_curves(snapshots, alpha, points)?;
    let dx = grid[1] - grid[0];
    let n = curves.len() as f64;
    let mean: Vec<f64> = (0..grid.len())
        .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / n)
        .collect();
    let norm = trapezoid(&mean, dx);
    if !(norm > 0.0) {
        return Err(Error::Analysis(format!(
            "mean rescaled curve vanishes for alpha = {alpha}"
        )));
    }
    let spread: f64 = curves
        .iter()
        .map(|c| {
            let diff: Vec<f64> = c.iter().zip(&mean).map(|(a, b)| (a - b).abs()).collect();
            trapezoid(&diff, dx)
        })
        .sum();
    Ok(spread / norm)
}

/// Normalized L1 spread of the time-rescaled snapshots about their mean.
pub fn self_similarity_measure(snapshots: &[DensitySnapshot], alpha: f64) -> Result<f64> {
    check_series(snapshots)?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "trial exponent {alpha} must be positive"
        )));
    }
    measure_with(snapshots, alpha, CollapseOptions::default().common_points)
}

/// Scans `m(α)` on a grid and refines the minimum by golden-section search.
pub fn find_alpha_star(
    snapshots: &[DensitySnapshot],
    options: &CollapseOptions,
) -> Result<CollapseResult> {
    check_series(snapshots)?;
    if !(options.alpha_min > 0.5
        && options.alpha_max < 4.0
        && options.alpha_min < options.alpha_max)
    {
        return Err(Error::Domain("alpha range must lie within (0.5, 4)".into()));
    }
    if options.grid_points < 20 {
        return Err(Error::Domain("grid_points must be at least 20".into()));
    }
    if options.common_points < 16 {
        return Err(Error::Domain("common_points must be at least 16".into()));
    }
    let n = options.grid_points;
    let step = (options.alpha_max - options.alpha_min) / (n - 1) as f64;
    let mut alpha_grid: Vec<f64> = (0..n)
        .map(|k| options.alpha_min + step * k as f64)
        .collect();
    let mut m_values: Vec<f64> = alpha_grid
        .par_iter()
        .map(|&a| measure_with(snapshots, a, options.common_points))
        .collect::<Result<_>>()?;

    let (jmin, _) = m_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let mut boundary_warning = None;
    let (mut alpha_star, mut m_star) = (alpha_grid[jmin], m_values[jmin]);
    if jmin == 0 || jmin == n - 1 {
        boundary_warning = Some(format!(
            "minimum of m(alpha) at the range boundary alpha = {:.4}",
            alpha_grid[jmin]
        ));
    } else {
        let f = |a: f64| measure_with(snapshots, a, options.common_points);
        let (a, m) = golden_section(
            f,
            alpha_grid[jmin - 1],
            alpha_grid[jmin + 1],
            options.refine_tol,
        )?;
        if m < m_star {
            alpha_star = a;
            m_star = m;
            let pos = alpha_grid.partition_point(|&g| g < a);
            alpha_grid.insert(pos, a);
            m_values.insert(pos, m);
        }
    }
    let (grid, curves) = common_curves(snapshots, alpha_star, options.common_points)?;
    let collapsed_curves = snapshots
        .iter()
        .zip(curves)
        .map(|(s, c)| {
            let mut out = DensitySnapshot::new(s.time, grid.clone(), c)?;
            out.meta = s.meta.clone();
            Ok(out.with_meta("collapse_alpha", alpha_star))
        })
        .collect::<Result<_>>()?;
    Ok(CollapseResult {
        alpha_grid,
        m_values,
        alpha_star,
        m_star,
        collapsed_curves,
        boundary_warning,
    })
}

fn golden_section<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_series(times: &[f64], alpha0: f64) -> Vec<DensitySnapshot> {
        times
            .iter()
            .map(|&t| {
                let s = t.powf(1.0 / alpha0);
                DensitySnapshot::from_fn(t, -8.0 * s, 8.0 * s, 257, |x| {
                    (-(x / s).powi(2) / 2.0).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .unwrap()
                .normalized()
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn duplicate_snapshot_has_zero_measure() {
        let s = gaussian_series(&[10.0], 2.0).remove(0);
        let pair = vec![s.clone(), s];
        for &a in &[0.9, 1.5, 2.7] {
            assert!(self_similarity_measure(&pair, a).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn rescaling_preserves_integral() {
        let s = gaussian_series(&[7.0], 2.0).remove(0);
        for &a in &[0.8, 1.3, 2.5] {
            assert!((rescale_snapshot(&s, a).integral() - s.integral()).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_supports_are_named() {
        let a = DensitySnapshot::from_fn(1.0, 0.0, 1.0, 64, |_| 1.0).unwrap();
        let b = DensitySnapshot::from_fn(2.0, 10.0, 11.0, 64, |_| 1.0).unwrap();
        let err = self_similarity_measure(&[a, b], 2.0).unwrap_err();
        assert!(
            matches!(err, Error::Analysis(ref m) if m.contains("t = 2") && m.contains("t = 1"))
        );
    }

    #[test]
    fn gaussian_kernels_collapse_at_two() {
        let times: Vec<f64> = (0..13).map(|i| 10.0 + 2.5 * i as f64).collect();
        let series = gaussian_series(&times, 2.0);
        let r = find_alpha_star(&series, &CollapseOptions::default()).unwrap();
        assert!((r.alpha_star - 2.0).abs() < 0.05, "{}", r.alpha_star);
        assert!(r.boundary_warning.is_none());
        let min = r.m_values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.m_star);
        assert!(r.alpha_grid.contains(&r.alpha_star));
    }
}
