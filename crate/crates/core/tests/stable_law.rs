use std::f64::consts::PI;

use levydiff_core::snapshot::{histogram, HistogramSpec};
use levydiff_core::stable::{
    stable_fit, stable_pdf, stable_pdf_many, stable_sample, tail_exponent, SampleBatch,
    StableFitOptions, StableParams, TailOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma, ln_gamma};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `(1/π) ∫₀^∞ cos(kx) exp(−k^α) dk` with `k = s⁴`, which smooths the cusp at 0.
fn transform_oracle(alpha: f64, x: f64) -> f64 {
    let top = 42f64.powf(1.0 / alpha).powf(0.25);
    let f = |s: f64| {
        let k = s.powi(4);
        4.0 * s.powi(3) * (k * x).cos() * (-k.powf(alpha)).exp()
    };
    simpson(f, 0.0, top, 400_000) / PI
}

fn unit(alpha: f64) -> StableParams {
    StableParams::symmetric(alpha, 1.0, 0.0).unwrap()
}

#[test]
fn closed_forms_at_the_origin() {
    let at0 = |a| stable_pdf(&unit(a), 0.0).unwrap();
    assert!((at0(1.0) - 1.0 / PI).abs() < 1e-14);
    assert!((at0(2.0) - 0.5 / PI.sqrt()).abs() < 1e-14);
    assert!((at0(1.5) - 0.2874).abs() < 1e-4);
    assert!((at0(1.5) - gamma(1.0 + 1.0 / 1.5) / PI).abs() < 1e-13);
}

#[test]
fn density_matches_direct_quadrature() {
    for alpha in [0.8, 1.3, 1.5, 1.9] {
        for x in [0.0, 0.5, 2.0, 7.0] {
            let want = transform_oracle(alpha, x);
            let got = stable_pdf(&unit(alpha), x).unwrap();
            assert!(
                (got - want).abs() <= 1e-8 * want,
                "alpha {alpha} x {x}: {got} vs {want}"
            );
        }
    }
}

/// `∫_L^∞` of the large-argument series, term by term, stopped at the smallest term.
fn tail_beyond(alpha: f64, l: f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for n in 1..200 {
        let nf = n as f64;
        let mag = (ln_gamma(nf * alpha + 1.0) - ln_gamma(nf + 1.0) - nf * alpha * l.ln()).exp()
            / (nf * alpha);
        if mag > prev {
            break;
        }
        prev = mag;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag * (nf * PI * alpha / 2.0).sin();
    }
    sum / PI
}

#[test]
fn unit_mass_with_tail_correction() {
    let l = 50.0;
    let n = 100_000;
    let xs: Vec<f64> = (0..=n)
        .map(|i| -l + 2.0 * l * i as f64 / n as f64)
        .collect();
    for alpha in [0.8, 1.0, 1.5, 2.0] {
        let ys = stable_pdf_many(&unit(alpha), &xs).unwrap();
        let h = 2.0 * l / n as f64;
        let body: f64 = ys
            .iter()
            .enumerate()
            .map(|(i, y)| {
                y * if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            })
            .sum::<f64>()
            * h
            / 3.0;
        let tails = if alpha < 2.0 {
            2.0 * tail_beyond(alpha, l)
        } else {
            0.0
        };
        assert!(
            (body + tails - 1.0).abs() < 1e-6,
            "alpha {alpha}: {body} + {tails}"
        );
    }
}

#[test]
fn variance_grows_without_bound() {
    let batch = stable_sample(&unit(1.3), 2024, 10_000_000).unwrap();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let small = var(&batch.values[..100_000]);
    let large = var(&batch.values);
    assert!(large > 10.0 * small, "{large} vs {small}");
}

#[test]
fn binned_samples_fit_back() {
    for (alpha, seed) in [(1.0, 1), (1.3, 2), (1.7, 3), (2.0, 4)] {
        let batch = stable_sample(&unit(alpha), seed, 1_000_000).unwrap();
        let snap = histogram(1.0, &batch.values, &HistogramSpec::default()).unwrap();
        let fit = stable_fit(&snap, &StableFitOptions::default()).unwrap();
        let p = fit.params;
        assert!(
            (p.alpha - alpha).abs() <= 0.05 * alpha,
            "alpha {alpha}: {}",
            p.alpha
        );
        assert!(
            (p.scale - 1.0).abs() <= 0.1,
            "alpha {alpha}: scale {}",
            p.scale
        );
        assert!(fit.r_squared > 0.99);
    }
}

fn batch(values: Vec<f64>) -> SampleBatch {
    let count = values.len();
    SampleBatch {
        values,
        seed: 0,
        count,
    }
}

#[test]
fn hill_estimates_of_known_tails() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    // symmetric Pareto by inverse transform
    let pareto: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let u: f64 = rng.random();
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            s * (1.0 - u).powf(-1.0 / 1.3)
        })
        .collect();
    let opts = TailOptions::default();
    let p = tail_exponent(&batch(pareto), &opts).unwrap();
    assert!((p.exponent - 1.3).abs() < 0.1, "{}", p.exponent);
    assert!(p.ci95 > 0.0);

    let cauchy: Vec<f64> = (0..1_000_000)
        .map(|_| (PI * (rng.random::<f64>() - 0.5)).tan())
        .collect();
    let c = tail_exponent(&batch(cauchy), &opts).unwrap();
    assert!((c.exponent - 1.0).abs() < 0.1, "{}", c.exponent);

    // Hill overshoots badly on stable laws near α = 2, so stay well below
    let s = tail_exponent(&stable_sample(&unit(1.2), 9, 1_000_000).unwrap(), &opts).unwrap();
    assert!((s.exponent - 1.2).abs() < 0.1, "{}", s.exponent);
}

#[test]
fn one_sided_samples_are_positive_and_reproducible() {
    let p = StableParams::one_sided(0.7, 2.0).unwrap();
    let a = stable_sample(&p, 5, 200_000).unwrap();
    let b = stable_sample(&p, 5, 200_000).unwrap();
    assert_eq!(a, b);
    assert!(a.values.iter().all(|v| *v > 0.0));
    assert_ne!(a.values, stable_sample(&p, 6, 200_000).unwrap().values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_about_location(alpha in 0.5f64..=2.0, loc in -5.0f64..5.0, u in 0.0f64..30.0) {
        let p = StableParams::symmetric(alpha, 1.7, loc).unwrap();
        let a = stable_pdf(&p, loc + u).unwrap();
        let b = stable_pdf(&p, loc - u).unwrap();
        prop_assert!(a >= 0.0);
        // loc ± u round differently and the series amplifies that last bit
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        let c = StableParams::symmetric(alpha, 1.7, 0.0).unwrap();
        prop_assert_eq!(stable_pdf(&c, u).unwrap(), stable_pdf(&c, -u).unwrap());
    }

    #[test]
    fn scale_is_a_change_of_variables(alpha in 0.5f64..=2.0, gamma in 0.05f64..20.0, x in -40.0f64..40.0) {
        let wide = StableParams::symmetric(alpha, gamma, 0.0).unwrap();
        let lhs = stable_pdf(&wide, x).unwrap();
        let rhs = stable_pdf(&unit(alpha), x / gamma).unwrap() / gamma;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
    }

    #[test]
    fn heavy_tail_power(alpha in 0.6f64..1.9) {
        // f(x) x^{1+α} tends to Γ(α+1) sin(πα/2)/π
        let c = gamma(alpha + 1.0) * (PI * alpha / 2.0).sin() / PI;
        let x = 1e6;
        let got = stable_pdf(&unit(alpha), x).unwrap() * x.powf(1.0 + alpha);
        prop_assert!((got / c - 1.0).abs() < 1e-2);
    }
}
