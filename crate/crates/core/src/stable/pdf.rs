use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use super::{Sidedness, StableParams};
use crate::error::{Error, Result};
use crate::quad;

/// Reduced coordinate beyond which the symmetric density is taken from the
/// large-argument series instead of the cosine-transform integral.
pub(crate) const SERIES_SWITCH: f64 = 10.0;

/// Below this α the density near the centre comes from the non-oscillatory
/// single-integral representation; the transform range grows like `42^{1/α}`.
pub(crate) const INTEGRAL_BELOW: f64 = 0.6;

/// `exp(-k^alpha)` is below ~6e-19 past this power.
const DECAY_EXPONENT: f64 = 42.0;
const PANEL_TOL: f64 = 1e-14;
const PANEL_DEPTH: u32 = 40;
const ACCEPT_ABS: f64 = 1e-11;
const ACCEPT_REL: f64 = 1e-9;

/// Density of the law at `x`.
pub fn stable_pdf(params: &StableParams, x: f64) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::Input(format!("x = {x} is not finite")));
    }
    let u = (x - params.location) / params.scale;
    let reduced = match params.sided {
        Sidedness::Symmetric => reduced_symmetric(params.alpha, u.abs())?,
        Sidedness::OneSided => reduced_one_sided(params.alpha, u)?,
    };
    Ok(reduced / params.scale)
}

/// Density at every point of `xs`, evaluated in parallel.
pub fn stable_pdf_many(params: &StableParams, xs: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    xs.par_iter().map(|&x| stable_pdf(params, x)).collect()
}

/// Unit-scale symmetric density at `a = |u| >= 0`.
pub(crate) fn reduced_symmetric(alpha: f64, a: f64) -> Result<f64> {
    if alpha == 2.0 {
        return Ok((-0.25 * a * a).exp() / (2.0 * PI.sqrt()));
    }
    if alpha == 1.0 {
        return Ok(1.0 / (PI * (1.0 + a * a)));
    }
    if a == 0.0 {
        return Ok(gamma(1.0 + 1.0 / alpha) / PI);
    }
    if alpha < INTEGRAL_BELOW && a <= 1.0 {
        zolotarev(alpha, a)
    } else if a <= SERIES_SWITCH {
        cosine_transform(alpha, a)
    } else {
        Ok(bergstrom_series(alpha, a))
    }
}

/// `(1/π) ∫₀^∞ cos(a k) exp(−k^α) dk` by panelled adaptive Gauss–Kronrod.
pub(crate) fn cosine_transform(alpha: f64, a: f64) -> Result<f64> {
    let cutoff = DECAY_EXPONENT.powf(1.0 / alpha);
    if cutoff > 1e7 {
        return Err(Error::Accuracy {
            what: format!("cosine transform for alpha = {alpha} needs an unbounded range"),
            estimate: f64::INFINITY,
        });
    }
    // Half-period panels once the integrand oscillates within the decay range.
    let width = if a * cutoff > PI { PI / a } else { cutoff };
    let panels = (cutoff / width).ceil() as usize;
    let mut value = 0.0;
    let mut error = 0.0;
    for j in 0..panels {
        let lo = j as f64 * width;
        let hi = ((j + 1) as f64 * width).min(cutoff);
        let q = quad::adaptive(
            |k: f64| (a * k).cos() * (-k.powf(alpha)).exp(),
            lo,
            hi,
            PANEL_TOL,
            PANEL_DEPTH,
        );
        value += q.value;
        error += q.error;
    }
    if error > ACCEPT_ABS.max(ACCEPT_REL * value.abs()) {
        return Err(Error::Accuracy {
            what: format!("cosine transform at alpha = {alpha}, |u| = {a}"),
            estimate: error / PI,
        });
    }
    Ok((value / PI).max(0.0))
}

/// Zolotarev's representation for α < 1, `a > 0`:
/// `f(a) = α/(π (1−α) a) ∫₀^{π/2} g e^{−g} dθ` with
/// `g(θ) = (a cos θ / sin αθ)^{α/(α−1)} cos((α−1)θ) / cos θ`, increasing in θ.
pub(crate) fn zolotarev(alpha: f64, a: f64) -> Result<f64> {
    let p = alpha / (alpha - 1.0);
    let ln_a = a.ln();
    let ln_g = move |t: f64| {
        p * (ln_a + t.cos().ln() - (alpha * t).sin().ln()) + ((alpha - 1.0) * t).cos().ln()
            - t.cos().ln()
    };
    let h = |t: f64| {
        let lg = ln_g(t);
        if !lg.is_finite() || lg > 6.5 {
            return 0.0;
        }
        let g = lg.exp();
        g * (-g).exp()
    };
    // the integrand peaks where g = 1
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ln_g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // unit panels in ln θ on both sides of the peak
    let hs = |s: f64| h(s.exp()) * s.exp();
    let top = FRAC_PI_2.ln();
    let mid = (0.5 * (lo + hi)).ln().min(top);
    let panel = |x0: f64, x1: f64, scale: f64| {
        let tol = (1e-13 * scale).max(1e-300);
        let q = quad::adaptive(hs, x0, x1, tol, 24);
        (
            q.value,
            if q.converged {
                q.error
            } else {
                q.error.max(q.value.abs())
            },
        )
    };
    let (mut value, mut error) = (0.0f64, 0.0f64);
    let mut x = mid;
    while x < top {
        let next = (x + 0.5).min(top);
        let (v, e) = panel(x, next, value.max(quad::gk15(&mut { hs }, x, next).0.abs()));
        value += v;
        error += e;
        x = next;
    }
    let mut x = mid;
    loop {
        let (v, e) = panel(x - 1.0, x, value);
        value += v;
        error += e;
        x -= 1.0;
        if v <= 1e-17 * value {
            break;
        }
    }
    if error > 1e-8 * value.abs() {
        return Err(Error::Accuracy {
            what: format!("integral representation at alpha = {alpha}, |u| = {a}"),
            estimate: error,
        });
    }
    Ok(alpha / (PI * (1.0 - alpha) * a) * value)
}

/// Large-argument series
/// `(1/π) Σ (−1)^{n+1} Γ(nα+1)/n! sin(nπα/2) a^{−(nα+1)}`.
///
/// Convergent for α < 1, asymptotic for α > 1; summation stops at the
/// smallest term in the latter case.
pub(crate) fn bergstrom_series(alpha: f64, a: f64) -> f64 {
    let ln_a = a.ln();
    let mut sum = 0.0;
    let mut prev_mag = f64::INFINITY;
    for n in 1..400usize {
        let nf = n as f64;
        let s = (nf * FRAC_PI_2 * alpha).sin();
        let ln_mag = ln_gamma(nf * alpha + 1.0) - ln_gamma(nf + 1.0) - (nf * alpha + 1.0) * ln_a;
        let mag = ln_mag.exp();
        if alpha > 1.0 && mag > prev_mag {
            break;
        }
        prev_mag = mag;
        let term = if n % 2 == 1 { mag * s } else { -mag * s };
        sum += term;
        if mag < 1e-18 * sum.abs() {
            break;
        }
    }
    (sum / PI).max(0.0)
}

/// Mass of the unit symmetric law beyond `u0` (one side), from the
/// term-wise integrated large-argument series.
pub fn symmetric_tail_mass(alpha: f64, u0: f64) -> f64 {
    if alpha == 2.0 {
        return 0.5 * statrs::function::erf::erfc(0.5 * u0);
    }
    if alpha == 1.0 {
        return 0.5 - (u0.atan()) / PI;
    }
    let ln_u = u0.ln();
    let mut sum = 0.0;
    let mut prev_mag = f64::INFINITY;
    for n in 1..400usize {
        let nf = n as f64;
        let s = (nf * FRAC_PI_2 * alpha).sin();
        let ln_mag =
            ln_gamma(nf * alpha + 1.0) - ln_gamma(nf + 1.0) - nf * alpha * ln_u - (nf * alpha).ln();
        let mag = ln_mag.exp();
        if alpha > 1.0 && mag > prev_mag {
            break;
        }
        prev_mag = mag;
        sum += if n % 2 == 1 { mag * s } else { -mag * s };
        if mag < 1e-18 * sum.abs() {
            break;
        }
    }
    sum / PI
}

/// Kernel of the one-sided law's integral representation on θ ∈ (0, π).
pub(crate) fn kanter_kernel(alpha: f64, theta: f64) -> f64 {
    let one_minus = 1.0 - alpha;
    (alpha * theta).sin().powf(alpha / one_minus) * (one_minus * theta).sin()
        / theta.sin().powf(1.0 / one_minus)
}

/// Unit-scale one-sided density at `y`.
///
/// `P(X ≤ y) = (1/π) ∫₀^π exp(−A(θ) y^{−α/(1−α)}) dθ`; differentiating in `y`
/// gives a smooth non-oscillatory integrand.
pub(crate) fn reduced_one_sided(alpha: f64, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let one_minus = 1.0 - alpha;
    let z = y.powf(-alpha / one_minus);
    let pref = alpha / one_minus / y;
    let integrand = |theta: f64| {
        if theta <= 0.0 || theta >= PI {
            return 0.0;
        }
        let k = kanter_kernel(alpha, theta);
        let e = k * z;
        if e > 700.0 {
            0.0
        } else {
            pref * e * (-e).exp()
        }
    };
    let q = quad::adaptive(integrand, 0.0, PI, 1e-15, 50);
    if q.error > ACCEPT_ABS.max(ACCEPT_REL * q.value.abs()) {
        return Err(Error::Accuracy {
            what: format!("one-sided density at alpha = {alpha}, y = {y}"),
            estimate: q.error / PI,
        });
    }
    Ok((q.value / PI).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_points() {
        let cauchy = StableParams::symmetric(1.0, 1.0, 0.0).unwrap();
        assert!((stable_pdf(&cauchy, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        let gauss = StableParams::symmetric(2.0, 1.0, 0.0).unwrap();
        assert!((stable_pdf(&gauss, 0.0).unwrap() - 0.5 / PI.sqrt()).abs() < 1e-15);
        // Γ(1 + 1/1.5)/π
        let p = StableParams::symmetric(1.5, 1.0, 0.0).unwrap();
        assert!((stable_pdf(&p, 0.0).unwrap() - 0.287_352_751_452_164_4).abs() < 1e-12);
    }

    #[test]
    fn general_path_matches_cauchy_and_gauss() {
        for &a in &[0.0, 0.3, 1.0, 4.5, 9.9] {
            let c = cosine_transform(1.0, a).unwrap();
            assert!((c - 1.0 / (PI * (1.0 + a * a))).abs() < 1e-12, "a = {a}");
            let g = cosine_transform(2.0, a).unwrap();
            assert!(
                (g - (-0.25 * a * a).exp() / (2.0 * PI.sqrt())).abs() < 1e-12,
                "a = {a}"
            );
        }
        for &a in &[10.5, 30.0, 1e3] {
            let c = bergstrom_series(1.0, a);
            assert!((c / (1.0 / (PI * (1.0 + a * a))) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_and_series_agree_at_switch() {
        for &alpha in &[0.6, 0.8, 1.2, 1.5, 1.8, 1.95] {
            let q = cosine_transform(alpha, SERIES_SWITCH).unwrap();
            let s = bergstrom_series(alpha, SERIES_SWITCH);
            assert!(
                (q - s).abs() < 1e-8 * s.max(1e-3),
                "alpha {alpha}: {q} vs {s}"
            );
        }
    }

    #[test]
    fn symmetric_and_scaling() {
        let p = StableParams::symmetric(1.3, 1.0, 0.7).unwrap();
        for &u in &[0.1, 2.0, 11.0] {
            assert_eq!(
                stable_pdf(&p, 0.7 + u).unwrap(),
                stable_pdf(&p, 0.7 - u).unwrap()
            );
        }
        let unit = StableParams::symmetric(1.3, 1.0, 0.0).unwrap();
        let wide = StableParams::symmetric(1.3, 2.5, 0.0).unwrap();
        for &x in &[0.3, 4.0, 20.0, 100.0] {
            let lhs = stable_pdf(&wide, x).unwrap();
            let rhs = stable_pdf(&unit, x / 2.5).unwrap() / 2.5;
            assert!((lhs / rhs - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn one_sided_half_matches_levy_smirnov() {
        // Laplace exp(-sqrt(s)) is the Lévy law with scale 1/2.
        for &y in &[0.05f64, 0.2, 1.0, 3.0, 40.0] {
            let exact = (-1.0 / (4.0 * y)).exp() / (2.0 * PI.sqrt() * y.powf(1.5));
            let got = reduced_one_sided(0.5, y).unwrap();
            assert!(
                (got - exact).abs() < 1e-10 * exact.max(1e-6),
                "y {y}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn tail_mass_matches_cauchy() {
        let exact = 0.5 - 50f64.atan() / PI;
        // exercise the general series path with α just off 1
        let near = symmetric_tail_mass(1.0 + 1e-9, 50.0);
        assert!((near - exact).abs() < 1e-8);
    }
}
