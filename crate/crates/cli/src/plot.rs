//! Figure data and their SVG renderings.
//!
//! Rendering is a pure function of the data: coordinates are printed with a
//! fixed number of decimals and elements are emitted in data order.

use std::fmt::Write as _;

use levydiff_core::analysis::linear_fit;
use levydiff_core::{Error, ExponentFit};
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSeries {
    pub label: String,
    /// ms
    pub times: Vec<f64>,
    /// µm
    pub widths: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub fit: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub label: String,
    /// Lattice depth in recoils, or the sweep index for walk models.
    pub abscissa: f64,
    pub dynamical: Option<ExponentFit>,
    pub self_similarity: Option<ExponentFit>,
    pub shape: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub time: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseCurve {
    pub label: String,
    pub alpha_grid: Vec<f64>,
    pub m_values: Vec<f64>,
    pub alpha_star: f64,
    pub m_star: f64,
    /// Snapshots rescaled with `alpha_star`.
    pub overlay: Vec<Curve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub label: String,
    pub times: Vec<f64>,
    pub exponents: Vec<f64>,
    pub ci95: Vec<f64>,
    pub asymptote: Option<f64>,
    /// Last snapshot and its fitted Lévy curve.
    pub inset: Option<(Curve, Curve)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Figure {
    Fig2Fwhm {
        series: Vec<WidthSeries>,
    },
    Fig3Exponents {
        abscissa: String,
        rows: Vec<ExponentRow>,
    },
    Fig4Collapse {
        curves: Vec<CollapseCurve>,
    },
    Fig5Shape {
        series: Vec<ShapeCurve>,
    },
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        let pad = 0.05 * (hi - lo);
        Some(Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        })
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 6 + 1).max(1);
            return (a..=b)
                .step_by(step as usize)
                .map(|e| 10f64.powi(e))
                .collect();
        }
        let span = self.hi - self.lo;
        let raw = span / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        let e = v.log10().round() as i32;
        return if (-2..=3).contains(&e) {
            format!("{}", 10f64.powi(e))
        } else {
            format!("1e{e}")
        };
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// A rectangular plotting area inside the SVG.
struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xa: Axis,
    ya: Axis,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.x0 + self.w * self.xa.unit(x)
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h * (1.0 - self.ya.unit(y))
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let ok = |v: f64, a: &Axis| {
            v.is_finite() && (!a.log || v > 0.0) && (0.0..=1.0).contains(&a.unit(v))
        };
        ok(x, &self.xa) && ok(y, &self.ya)
    }

    /// Screen coordinates of the drawable points of a polyline.
    fn project(&self, xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
        xs.iter()
            .zip(ys)
            .filter(|(x, y)| self.inside(**x, **y))
            .map(|(&x, &y)| (self.px(x), self.py(y)))
            .collect()
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        Svg { body }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            esc(s)
        );
    }

    fn frame(&mut self, p: &Panel, xlabel: &str, ylabel: &str, small: bool) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            p.x0, p.y0, p.w, p.h
        );
        let bottom = p.y0 + p.h;
        for t in p.xa.ticks() {
            let x = p.px(t);
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                bottom - 5.0
            );
            if !small {
                self.text(x, bottom + 16.0, "middle", &tick_label(t, p.xa.log));
            }
        }
        for t in p.ya.ticks() {
            let y = p.py(t);
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                p.x0,
                p.x0 + 5.0
            );
            if !small {
                self.text(p.x0 - 6.0, y + 4.0, "end", &tick_label(t, p.ya.log));
            }
        }
        if !small {
            self.text(p.x0 + p.w / 2.0, bottom + 38.0, "middle", xlabel);
            let (cx, cy) = (18.0, p.y0 + p.h / 2.0);
            let _ = writeln!(
                self.body,
                r#"<text x="{cx:.2}" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
                esc(ylabel)
            );
        }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], colour: &str, dashed: bool) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                d.push(' ');
            }
            let _ = write!(d, "{x:.2},{y:.2}");
        }
        let dash = if dashed {
            r#" stroke-dasharray="5,4""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{d}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#
        );
    }

    fn markers(&mut self, pts: &[(f64, f64)], colour: &str, shape: &str) {
        for &(x, y) in pts {
            match shape {
                "square" => {
                    let _ = writeln!(
                        self.body,
                        r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="{colour}"/>"#,
                        x - 3.5,
                        y - 3.5
                    );
                }
                "triangle" => {
                    let _ = writeln!(
                        self.body,
                        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{colour}"/>"#,
                        x,
                        y - 4.5,
                        x - 4.5,
                        y + 3.5,
                        x + 4.5,
                        y + 3.5
                    );
                }
                _ => {
                    let _ = writeln!(
                        self.body,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{colour}"/>"#
                    );
                }
            }
        }
    }

    fn error_bars(&mut self, p: &Panel, x: f64, y: f64, half: f64, colour: &str) {
        if !(half > 0.0) {
            return;
        }
        let (lo, hi) = (y - half, y + half);
        if !p.inside(x, lo.max(p.ya_min())) || !p.inside(x, hi.min(p.ya_max())) {
            return;
        }
        let sx = p.px(x);
        let _ = writeln!(
            self.body,
            r#"<line x1="{sx:.2}" y1="{:.2}" x2="{sx:.2}" y2="{:.2}" stroke="{colour}"/>"#,
            p.py(lo.max(p.ya_min())),
            p.py(hi.min(p.ya_max()))
        );
    }

    fn legend(&mut self, p: &Panel, entries: &[(String, &str)]) {
        for (i, (name, col)) in entries.iter().enumerate() {
            let y = p.y0 + 16.0 + 16.0 * i as f64;
            let x = p.x0 + p.w - 150.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{col}" stroke-width="2"/>"#,
                y - 4.0,
                x + 18.0,
                y - 4.0
            );
            self.text(x + 24.0, y, "start", name);
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

impl Panel {
    fn ya_min(&self) -> f64 {
        if self.ya.log {
            10f64.powf(self.ya.lo)
        } else {
            self.ya.lo
        }
    }

    fn ya_max(&self) -> f64 {
        if self.ya.log {
            10f64.powf(self.ya.hi)
        } else {
            self.ya.hi
        }
    }
}

fn main_panel(xa: Axis, ya: Axis) -> Panel {
    Panel {
        x0: LEFT,
        y0: TOP,
        w: W - LEFT - RIGHT,
        h: H - TOP - BOTTOM,
        xa,
        ya,
    }
}

fn inset_panel(xa: Axis, ya: Axis) -> Panel {
    Panel {
        x0: W - RIGHT - 230.0,
        y0: H - BOTTOM - 170.0,
        w: 220.0,
        h: 160.0,
        xa,
        ya,
    }
}

fn empty(what: &str) -> crate::CliError {
    Error::Input(format!("nothing to plot: {what}")).into()
}

/// Renders a figure as SVG text.
pub fn render(fig: &Figure) -> Result<String> {
    match fig {
        Figure::Fig2Fwhm { series } => fig2(series),
        Figure::Fig3Exponents { abscissa, rows } => fig3(abscissa, rows),
        Figure::Fig4Collapse { curves } => fig4(curves),
        Figure::Fig5Shape { series } => fig5(series),
    }
}

fn fig2(series: &[WidthSeries]) -> Result<String> {
    let xs = series.iter().flat_map(|s| s.times.iter().map(|t| t * t));
    let ys = series.iter().flat_map(|s| s.widths.iter().map(|w| w * w));
    let (Some(xa), Some(ya)) = (Axis::fit(xs, true), Axis::fit(ys, true)) else {
        return Err(empty("no positive (time, width) pairs"));
    };
    let p = main_panel(xa, ya);
    let mut svg = Svg::new();
    svg.frame(&p, "t² (ms²)", "FWHM² (µm²)", false);
    let mut legend = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let col = colour(i);
        let t2: Vec<f64> = s.times.iter().map(|t| t * t).collect();
        let w2: Vec<f64> = s.widths.iter().map(|w| w * w).collect();
        svg.markers(&p.project(&t2, &w2), col, "circle");
        let logs: Vec<(f64, f64)> = s
            .times
            .iter()
            .zip(&s.widths)
            .filter(|(t, w)| **t > 0.0 && **w > 0.0)
            .map(|(t, w)| (t.ln(), w.ln()))
            .collect();
        if let Some(line) = linear_fit(&logs) {
            let (a, b) = (logs[0].0, logs[logs.len() - 1].0);
            let ends: Vec<(f64, f64)> = [a, b]
                .iter()
                .map(|&lt| {
                    (
                        (2.0 * lt).exp(),
                        (2.0 * (line.intercept + line.slope * lt)).exp(),
                    )
                })
                .collect();
            let (ex, ey): (Vec<f64>, Vec<f64>) = ends.into_iter().unzip();
            svg.polyline(&p.project(&ex, &ey), col, true);
        }
        let name = match &s.fit {
            Some(f) => format!("{}: α = {:.2} ± {:.2}", s.label, f.exponent, f.ci95),
            None => s.label.clone(),
        };
        legend.push((name, col));
    }
    svg.legend(&p, &legend);
    Ok(svg.finish())
}

fn fig3(abscissa: &str, rows: &[ExponentRow]) -> Result<String> {
    let pick: [(&str, fn(&ExponentRow) -> Option<ExponentFit>, &str); 3] = [
        ("dynamical", |r| r.dynamical, "circle"),
        ("self-similarity", |r| r.self_similarity, "square"),
        ("shape", |r| r.shape, "triangle"),
    ];
    let ys = rows
        .iter()
        .flat_map(|r| pick.iter().filter_map(move |(_, f, _)| f(r)))
        .flat_map(|f| [f.exponent - f.ci95, f.exponent + f.ci95]);
    let (Some(xa), Some(ya)) = (
        Axis::fit(rows.iter().map(|r| r.abscissa), false),
        Axis::fit(ys, false),
    ) else {
        return Err(empty("no exponents"));
    };
    let p = main_panel(xa, ya);
    let mut svg = Svg::new();
    svg.frame(&p, abscissa, "α", false);
    let mut legend = Vec::new();
    for (k, (name, get, shape)) in pick.iter().enumerate() {
        let col = colour(k);
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| get(r).map(|f| (r.abscissa, f.exponent)))
            .unzip();
        for r in rows {
            if let Some(f) = get(r) {
                svg.error_bars(&p, r.abscissa, f.exponent, f.ci95, col);
            }
        }
        svg.markers(&p.project(&xs, &ys), col, shape);
        legend.push((name.to_string(), col));
    }
    svg.legend(&p, &legend);
    Ok(svg.finish())
}

/// Overlay polylines in inset coordinates; the vertical spread between them
/// measures how badly a collapse fails.
fn overlay_panel(curves: &[Curve]) -> Option<Panel> {
    let xa = Axis::fit(curves.iter().flat_map(|c| c.x.iter().copied()), false)?;
    let ya = Axis::fit(curves.iter().flat_map(|c| c.y.iter().copied()), false)?;
    Some(inset_panel(xa, ya))
}

fn fig4(curves: &[CollapseCurve]) -> Result<String> {
    let xs = curves.iter().flat_map(|c| c.alpha_grid.iter().copied());
    let ys = curves.iter().flat_map(|c| c.m_values.iter().copied());
    let (Some(xa), Some(ya)) = (Axis::fit(xs, false), Axis::fit(ys, false)) else {
        return Err(empty("no m(α) values"));
    };
    let p = main_panel(xa, ya);
    let mut svg = Svg::new();
    svg.frame(&p, "α", "m(α)", false);
    let mut legend = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let col = colour(i);
        svg.polyline(&p.project(&c.alpha_grid, &c.m_values), col, false);
        svg.markers(&p.project(&[c.alpha_star], &[c.m_star]), col, "square");
        legend.push((format!("{}: α* = {:.3}", c.label, c.alpha_star), col));
    }
    svg.legend(&p, &legend);
    if let Some(first) = curves.first() {
        if let Some(inset) = overlay_panel(&first.overlay) {
            let _ = writeln!(
                svg.body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white"/>"#,
                inset.x0, inset.y0, inset.w, inset.h
            );
            svg.frame(&inset, "", "", true);
            for (k, c) in first.overlay.iter().enumerate() {
                svg.polyline(&inset.project(&c.x, &c.y), colour(k), false);
            }
        }
    }
    Ok(svg.finish())
}

fn fig5(series: &[ShapeCurve]) -> Result<String> {
    let xs = series.iter().flat_map(|s| s.times.iter().copied());
    let ys = series.iter().flat_map(|s| {
        s.exponents
            .iter()
            .zip(&s.ci95)
            .flat_map(|(a, c)| [a - c, a + c])
    });
    let (Some(xa), Some(ya)) = (Axis::fit(xs, false), Axis::fit(ys, false)) else {
        return Err(empty("no shape exponents"));
    };
    let p = main_panel(xa, ya);
    let mut svg = Svg::new();
    svg.frame(&p, "t (ms)", "shape exponent α", false);
    let mut legend = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let col = colour(i);
        for ((t, a), c) in s.times.iter().zip(&s.exponents).zip(&s.ci95) {
            svg.error_bars(&p, *t, *a, *c, col);
        }
        svg.markers(&p.project(&s.times, &s.exponents), col, "circle");
        if let (Some(asym), Some(t0), Some(t1)) = (s.asymptote, s.times.first(), s.times.last()) {
            svg.polyline(&p.project(&[*t0, *t1], &[asym, asym]), col, true);
        }
        legend.push((s.label.clone(), col));
    }
    svg.legend(&p, &legend);
    if let Some((data, fit)) = series.first().and_then(|s| s.inset.as_ref()) {
        let xa = Axis::fit(data.x.iter().copied(), false);
        let ya = Axis::fit(data.y.iter().chain(&fit.y).copied(), false);
        if let (Some(xa), Some(ya)) = (xa, ya) {
            let inset = inset_panel(xa, ya);
            let _ = writeln!(
                svg.body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white"/>"#,
                inset.x0, inset.y0, inset.w, inset.h
            );
            svg.frame(&inset, "", "", true);
            svg.markers(&inset.project(&data.x, &data.y), "#777777", "circle");
            svg.polyline(&inset.project(&fit.x, &fit.y), colour(0), false);
        }
    }
    Ok(svg.finish())
}

/// Mean over screen columns of the vertical extent between overlay curves,
/// as a fraction of the inset height.
pub fn overlay_spread(curves: &[Curve]) -> Option<f64> {
    let p = overlay_panel(curves)?;
    let n = 64;
    let mut total = 0.0;
    let mut used = 0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let x = p.xa.lo + u * (p.xa.hi - p.xa.lo);
        let ys: Vec<f64> = curves
            .iter()
            .filter_map(|c| interp(&c.x, &c.y, x))
            .map(|y| p.py(y))
            .collect();
        if ys.len() == curves.len() && ys.len() > 1 {
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            total += (hi - lo) / p.h;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let i = xs.partition_point(|v| *v <= x);
    if i == 0 || i >= xs.len() {
        return None;
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let f = (x - x0) / (x1 - x0);
    Some(ys[i - 1] * (1.0 - f) + ys[i] * f)
}
