//! Bounded Levenberg–Marquardt with a finite-difference Jacobian.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which the search stops.
    pub ftol: f64,
    /// Relative parameter change below which the search stops.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-12,
            xtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub residuals: Vec<f64>,
    /// Row-major `JᵀJ` at the solution.
    pub jtj: Vec<f64>,
    pub iterations: usize,
}

/// Minimise `Σ r(θ)²` subject to `lower ≤ θ ≤ upper`.
///
/// `step[j]` is the finite-difference increment for parameter `j`.
pub fn minimize<F>(
    residual_fn: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: &[f64],
    opts: &LmOptions,
) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = x0.len();
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
        .collect();
    let mut r = residual_fn(&x)?;
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::Numeric("initial residuals are not finite".into()));
    }
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut jac = jacobian(&residual_fn, &x, &r, lower, upper, step)?;

    loop {
        if iterations >= opts.max_iterations {
            return Err(Error::FitFailure {
                reason: "iteration limit".into(),
                iterations,
                best: x,
                best_cost: cost,
            });
        }
        iterations += 1;
        let (jtj, grad) = normal_equations(&jac, &r, p);

        // Coordinates pinned at a bound with the gradient pushing outward stay fixed.
        let free: Vec<bool> = (0..p)
            .map(|j| {
                let at_lo = x[j] <= lower[j] && grad[j] > 0.0;
                let at_hi = x[j] >= upper[j] && grad[j] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();

        let mut accepted = false;
        let mut small_step = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            let mut b: Vec<f64> = grad.iter().map(|g| -g).collect();
            for j in 0..p {
                if free[j] {
                    a[j * p + j] += lambda * jtj[j * p + j].max(1e-30);
                } else {
                    for k in 0..p {
                        a[j * p + k] = 0.0;
                        a[k * p + j] = 0.0;
                    }
                    a[j * p + j] = 1.0;
                    b[j] = 0.0;
                }
            }
            let delta = match solve(&a, &b, p) {
                Some(d) => d,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = (0..p)
                .map(|j| (x[j] + delta[j]).clamp(lower[j], upper[j]))
                .collect();
            let rel_change = (0..p)
                .map(|j| (trial[j] - x[j]).abs() / (x[j].abs() + opts.xtol))
                .fold(0.0, f64::max);
            let r_trial = match residual_fn(&trial) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let c_trial = sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let decrease = cost - c_trial;
                x = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                small_step = decrease <= opts.ftol * cost.max(1e-300) || rel_change < opts.xtol;
                break;
            }
            if rel_change < opts.xtol {
                small_step = true;
                break;
            }
            lambda *= 4.0;
        }

        if !accepted || small_step {
            let (jtj, _) = normal_equations(&jac, &r, p);
            if accepted {
                jac = jacobian(&residual_fn, &x, &r, lower, upper, step)?;
                let (fresh, _) = normal_equations(&jac, &r, p);
                return Ok(LmOutcome {
                    params: x,
                    cost,
                    residuals: r,
                    jtj: fresh,
                    iterations,
                });
            }
            return Ok(LmOutcome {
                params: x,
                cost,
                residuals: r,
                jtj,
                iterations,
            });
        }
        jac = jacobian(&residual_fn, &x, &r, lower, upper, step)?;
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Column-major Jacobian, `p` columns of `r.len()` entries.
fn jacobian<F>(
    f: &F,
    x: &[f64],
    r0: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: &[f64],
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        let h = if x[j] + step[j] <= upper[j] {
            step[j]
        } else {
            -step[j]
        };
        xp[j] = (x[j] + h).max(lower[j]);
        let h = xp[j] - x[j];
        let rp = f(&xp)?;
        cols.push(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect());
    }
    Ok(cols)
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jtj = vec![0.0; p * p];
    let mut grad = vec![0.0; p];
    for a in 0..p {
        grad[a] = jac[a].iter().zip(r).map(|(j, r)| j * r).sum();
        for b in a..p {
            let v: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
            jtj[a * p + b] = v;
            jtj[b * p + a] = v;
        }
    }
    (jtj, grad)
}

/// Gaussian elimination with partial pivoting on a dense `n×n` system.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &k| m[i * n + col].abs().total_cmp(&m[k * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            rhs.swap(piv, col);
        }
        for i in col + 1..n {
            let f = m[i * n + col] / m[col * n + col];
            for k in col..n {
                m[i * n + k] -= f * m[col * n + k];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    let mut out = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i * n + k] * out[k]).sum();
        out[i] = (rhs[i] - s) / m[i * n + i];
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Inverse of a dense `n×n` matrix, column by column.
pub fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve(a, &e, n)?;
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp() + 0.1).collect();
        let f = |p: &[f64]| -> Result<Vec<f64>> {
            Ok(ts
                .iter()
                .zip(&ys)
                .map(|(t, y)| p[0] * (-p[1] * t).exp() + p[2] - y)
                .collect())
        };
        let out = minimize(
            f,
            &[1.0, 0.1, 0.0],
            &[-10.0; 3],
            &[10.0; 3],
            &[1e-7; 3],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((out.params[0] - 3.0).abs() < 1e-6);
        assert!((out.params[1] - 0.7).abs() < 1e-6);
        assert!(out.cost < 1e-12);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained optimum at 5, bound at 2
        let f = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![p[0] - 5.0]) };
        let out = minimize(f, &[0.0], &[-1.0], &[2.0], &[1e-6], &LmOptions::default()).unwrap();
        assert_eq!(out.params[0], 2.0);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
