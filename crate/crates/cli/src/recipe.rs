//! Sweep points, their simulation, and the four figure workflows.

use std::path::PathBuf;

use levydiff_core::analysis::{
    extract_fwhm, find_alpha_star, fit_dynamical_exponent, fit_shape_exponent, CollapseResult,
    FwhmMethod, ShapeSeries,
};
use levydiff_core::ctrw::{simulate_walk, WalkConfig};
use levydiff_core::lattice::{run_mcwf, run_semiclassical, GridSpec, LatticeConfig};
use levydiff_core::rng::derive_seed;
use levydiff_core::stable::stable_pdf_many;
use levydiff_core::{DensitySnapshot, Error, ExponentFit, FitMethod};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{apply_overrides, AnalysisSection, Config, RecipeName, Simulator};
use crate::output::OutputDir;
use crate::plot::{render, CollapseCurve, Curve, ExponentRow, Figure, ShapeCurve, WidthSeries};
use crate::report::{snapshot_digest, to_lines, FitRecord};
use crate::{CliError, Result};

#[derive(Debug, Clone)]
pub enum PointInput {
    Walk(WalkConfig),
    Semiclassical(LatticeConfig),
    Mcwf(LatticeConfig, GridSpec),
    Ingest(Vec<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct PointSpec {
    pub label: String,
    pub seed: u64,
    pub input: PointInput,
}

/// Simulated or ingested snapshots of one sweep point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub label: String,
    /// Lattice depth for lattice simulators.
    pub depth: Option<f64>,
    pub series: Vec<DensitySnapshot>,
    pub diagnostics: Option<serde_json::Value>,
}

fn safe_label(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn base_input(cfg: &Config, sim: Simulator) -> Result<PointInput> {
    Ok(match sim {
        Simulator::Ctrw => PointInput::Walk(cfg.walk()?.clone()),
        Simulator::Semiclassical => PointInput::Semiclassical(cfg.lattice()?.clone()),
        Simulator::Mcwf => {
            PointInput::Mcwf(cfg.lattice()?.clone(), cfg.mcwf_grid.unwrap_or_default())
        }
        Simulator::Ingest => {
            let files = cfg
                .ingest
                .as_ref()
                .map(|i| i.files.clone())
                .unwrap_or_default();
            if files.is_empty() {
                return Err(CliError::Config("[ingest] lists no files".into()));
            }
            PointInput::Ingest(files)
        }
    })
}

/// One point per sweep table, or the base section alone when there is no sweep.
pub fn points(
    cfg: &Config,
    sim: Simulator,
    sweep: &[toml::Table],
    master: u64,
) -> Result<Vec<PointSpec>> {
    let base = base_input(cfg, sim)?;
    if sweep.is_empty() {
        return Ok(vec![PointSpec {
            label: "run".into(),
            seed: master,
            input: base,
        }]);
    }
    let mut out = Vec::with_capacity(sweep.len());
    for (i, table) in sweep.iter().enumerate() {
        let origin = format!("recipe.sweep[{i}]");
        let label = match table.get("label") {
            None => format!("p{i:02}"),
            Some(toml::Value::String(s)) => safe_label(s),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "{origin}: label must be a string, got {other}"
                )));
            }
        };
        if out.iter().any(|p: &PointSpec| p.label == label) {
            return Err(CliError::Config(format!(
                "{origin}: duplicate label {label:?}"
            )));
        }
        let input = match &base {
            PointInput::Walk(w) => PointInput::Walk(apply_overrides(w, table, &origin)?),
            PointInput::Semiclassical(l) => {
                PointInput::Semiclassical(apply_overrides(l, table, &origin)?)
            }
            PointInput::Mcwf(l, g) => PointInput::Mcwf(apply_overrides(l, table, &origin)?, *g),
            PointInput::Ingest(_) => {
                return Err(CliError::Config(format!(
                    "{origin}: ingested data cannot be swept"
                )));
            }
        };
        out.push(PointSpec {
            label,
            seed: derive_seed(master, "sweep", i as u64),
            input,
        });
    }
    Ok(out)
}

fn stamp(
    series: Vec<DensitySnapshot>,
    seed: u64,
    digest: &str,
    label: &str,
) -> Vec<DensitySnapshot> {
    series
        .into_iter()
        .map(|s| {
            s.with_meta("seed", seed)
                .with_meta("config_digest", digest)
                .with_meta("point", label)
        })
        .collect()
}

pub fn simulate(spec: &PointSpec, config_digest: &str) -> Result<PointData> {
    let (series, depth, diagnostics) = match &spec.input {
        PointInput::Walk(w) => (simulate_walk(w, spec.seed)?, None, None),
        PointInput::Semiclassical(l) => {
            let run = run_semiclassical(l, spec.seed)?;
            let diag = json!({
                "simulator": "semiclassical",
                "escape": run.escape,
                "max_energy_drift": run.max_energy_drift,
                "jumps": run.jumps,
            });
            (run.snapshots, Some(l.depth_recoils), Some(diag))
        }
        PointInput::Mcwf(l, g) => {
            let run = run_mcwf(l, g, spec.seed)?;
            let diag = json!({
                "simulator": "mcwf",
                "aborted": run.aborted,
                "jumps": run.jumps,
                "steps": run.steps,
                "max_norm_rise": run.max_norm_rise,
                "max_renorm_error": run.max_renorm_error,
                "max_channel_error": run.max_channel_error,
                "dt_ms": run.dt,
            });
            (run.snapshots, Some(l.depth_recoils), Some(diag))
        }
        PointInput::Ingest(files) => {
            return Ok(PointData {
                label: spec.label.clone(),
                depth: None,
                series: levydiff_core::io::ingest(files)?,
                diagnostics: None,
            });
        }
    };
    Ok(PointData {
        label: spec.label.clone(),
        depth,
        series: stamp(series, spec.seed, config_digest, &spec.label),
        diagnostics,
    })
}

/// Everything the figure workflows extract from one series.
#[derive(Debug, Clone, Default)]
pub struct PointAnalysis {
    pub widths: Option<WidthSeries>,
    pub collapse: Option<CollapseResult>,
    pub shape: Option<ShapeSeries>,
    pub records: Vec<FitRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub widths: bool,
    pub collapse: bool,
    pub shape: bool,
}

impl Needs {
    pub const ALL: Needs = Needs {
        widths: true,
        collapse: true,
        shape: true,
    };

    pub fn of(recipe: RecipeName) -> Needs {
        match recipe {
            RecipeName::Fig2Fwhm => Needs {
                widths: true,
                ..Needs::default()
            },
            RecipeName::Fig3Exponents => Needs::ALL,
            RecipeName::Fig4Collapse => Needs {
                collapse: true,
                ..Needs::default()
            },
            RecipeName::Fig5Shape => Needs {
                shape: true,
                ..Needs::default()
            },
        }
    }
}

/// `α*` as an exponent record. The interval is the half-width of the band
/// where `m ≤ 1.1·m*`; the goodness is `1 − m*/(2N)` for `N` snapshots.
pub fn collapse_fit(c: &CollapseResult, snapshots: usize) -> ExponentFit {
    let limit = 1.1 * c.m_star;
    let mut lo = c.alpha_star;
    let mut hi = c.alpha_star;
    for (&a, &m) in c.alpha_grid.iter().zip(&c.m_values) {
        if m <= limit {
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }
    ExponentFit {
        exponent: c.alpha_star,
        ci95: 0.5 * (hi - lo),
        r_squared: (1.0 - c.m_star / (2.0 * snapshots as f64)).clamp(0.0, 1.0),
        method: FitMethod::SelfSimilarity,
    }
}

/// Asymptotic shape exponent as a record; the interval is the 95% Student
/// interval of the mean over the final third.
pub fn shape_fit(s: &ShapeSeries) -> Option<ExponentFit> {
    let asym = s.asymptote?;
    let fits: Vec<ExponentFit> = s.points.iter().filter_map(|p| p.fit).collect();
    let tail = &fits[fits.len() - fits.len().div_ceil(3)..];
    let n = tail.len() as f64;
    let sd = if tail.len() > 1 {
        (tail
            .iter()
            .map(|f| (f.exponent - asym).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        tail[0].ci95 / 1.96
    };
    Some(ExponentFit {
        exponent: asym,
        ci95: 1.96 * sd / n.sqrt(),
        r_squared: tail.iter().map(|f| f.r_squared).sum::<f64>() / n,
        method: FitMethod::LevyShape,
    })
}

pub fn analyze(
    label: &str,
    series: &[DensitySnapshot],
    opts: &AnalysisSection,
    needs: Needs,
) -> Result<PointAnalysis> {
    if series.is_empty() {
        return Err(Error::Input(format!("{label}: no snapshots")).into());
    }
    let digests: Vec<String> = series.iter().map(snapshot_digest).collect();
    let mut out = PointAnalysis::default();
    if needs.widths {
        let est = series
            .par_iter()
            .map(|s| extract_fwhm(s, opts.fwhm_exclusion))
            .collect::<levydiff_core::Result<Vec<_>>>()?;
        let times: Vec<f64> = series.iter().map(|s| s.time).collect();
        let widths: Vec<f64> = est.iter().map(|e| e.width).collect();
        let pairs: Vec<(f64, f64)> = times.iter().copied().zip(widths.iter().copied()).collect();
        let fit = fit_dynamical_exponent(&pairs)?;
        let fallbacks = est
            .iter()
            .filter(|e| e.method == FwhmMethod::HalfMaxCrossing)
            .count();
        let mut rec = FitRecord::new(label, &fit, &digests)
            .with_note("ci95 from the log-log slope interval; widths from stable-family fits with covariance errors");
        if fallbacks > 0 {
            rec = rec.with_note(format!(
                "{fallbacks} widths fell back to half-maximum crossings"
            ));
        }
        out.records.push(rec);
        out.widths = Some(WidthSeries {
            label: label.to_string(),
            times,
            widths,
            uncertainties: est.iter().map(|e| e.uncertainty).collect(),
            fit: Some(fit),
        });
    }
    if needs.collapse {
        let c = find_alpha_star(series, &opts.collapse)?;
        let mut rec = FitRecord::new(label, &collapse_fit(&c, series.len()), &digests)
            .with_note("ci95 is the half-width of the band where m <= 1.1 m*");
        if let Some(w) = &c.boundary_warning {
            rec = rec.with_note(w.clone());
        }
        out.records.push(rec);
        out.collapse = Some(c);
    }
    if needs.shape {
        let s = fit_shape_exponent(series, &opts.fit)?;
        for (p, d) in s.points.iter().zip(&digests) {
            match (&p.fit, &p.error) {
                (Some(f), _) => out
                    .records
                    .push(FitRecord::new(label, f, std::slice::from_ref(d)).at(p.time)),
                (None, Some(e)) => out.records.push(
                    FitRecord::new(
                        label,
                        &ExponentFit {
                            exponent: f64::NAN,
                            ci95: f64::NAN,
                            r_squared: 0.0,
                            method: FitMethod::LevyShape,
                        },
                        std::slice::from_ref(d),
                    )
                    .at(p.time)
                    .with_note(format!("fit failed: {e}")),
                ),
                (None, None) => {}
            }
        }
        if let Some(f) = shape_fit(&s) {
            out.records.push(
                FitRecord::new(label, &f, &digests)
                    .with_note("asymptote: mean over the final third of the series"),
            );
        }
        out.shape = Some(s);
    }
    Ok(out)
}

fn csv_row(cells: &[String]) -> String {
    cells.join(",") + "\n"
}

fn opt_cells(f: Option<ExponentFit>) -> [String; 2] {
    match f {
        Some(f) => [f.exponent.to_string(), f.ci95.to_string()],
        None => [String::new(), String::new()],
    }
}

fn shape_curve(label: &str, s: &ShapeSeries, last: &DensitySnapshot) -> Result<ShapeCurve> {
    let ok: Vec<_> = s
        .points
        .iter()
        .filter_map(|p| p.fit.map(|f| (p.time, f)))
        .collect();
    let inset = match s.points.last().and_then(|p| p.stable.as_ref()) {
        Some(fit) => {
            let y = stable_pdf_many(&fit.params, &last.x_grid)?
                .into_iter()
                .map(|v| v * fit.amplitude)
                .collect();
            Some((
                Curve {
                    time: last.time,
                    x: last.x_grid.clone(),
                    y: last.density.clone(),
                },
                Curve {
                    time: last.time,
                    x: last.x_grid.clone(),
                    y,
                },
            ))
        }
        None => None,
    };
    Ok(ShapeCurve {
        label: label.to_string(),
        times: ok.iter().map(|p| p.0).collect(),
        exponents: ok.iter().map(|p| p.1.exponent).collect(),
        ci95: ok.iter().map(|p| p.1.ci95).collect(),
        asymptote: s.asymptote,
        inset,
    })
}

/// Writes the figure data, its rendering and any tables for `recipe`.
pub fn emit_figure(
    out: &mut OutputDir,
    recipe: RecipeName,
    data: &[PointData],
    analyses: &[PointAnalysis],
) -> Result<Figure> {
    let name = recipe.as_str();
    let figure = match recipe {
        RecipeName::Fig2Fwhm => Figure::Fig2Fwhm {
            series: analyses.iter().filter_map(|a| a.widths.clone()).collect(),
        },
        RecipeName::Fig3Exponents => {
            let lattice = data.iter().all(|d| d.depth.is_some());
            let rows: Vec<ExponentRow> = data
                .iter()
                .zip(analyses)
                .enumerate()
                .map(|(i, (d, a))| ExponentRow {
                    label: d.label.clone(),
                    abscissa: if lattice {
                        d.depth.unwrap_or(0.0)
                    } else {
                        i as f64
                    },
                    dynamical: a.widths.as_ref().and_then(|w| w.fit),
                    self_similarity: a.collapse.as_ref().map(|c| collapse_fit(c, d.series.len())),
                    shape: a.shape.as_ref().and_then(shape_fit),
                })
                .collect();
            let mut csv = csv_row(
                &[
                    "label",
                    "abscissa",
                    "dynamical",
                    "dynamical_ci95",
                    "self_similarity",
                    "self_similarity_ci95",
                    "shape",
                    "shape_ci95",
                ]
                .map(String::from),
            );
            for r in &rows {
                let mut cells = vec![r.label.clone(), r.abscissa.to_string()];
                cells.extend(opt_cells(r.dynamical));
                cells.extend(opt_cells(r.self_similarity));
                cells.extend(opt_cells(r.shape));
                csv.push_str(&csv_row(&cells));
            }
            out.write(&format!("{name}.csv"), csv.as_bytes())?;
            Figure::Fig3Exponents {
                abscissa: if lattice {
                    "lattice depth (E_r)".into()
                } else {
                    "sweep point".into()
                },
                rows,
            }
        }
        RecipeName::Fig4Collapse => {
            let mut curves = Vec::new();
            for (d, a) in data.iter().zip(analyses) {
                let Some(c) = &a.collapse else { continue };
                let mut csv = csv_row(&["alpha".into(), "m".into()]);
                for (x, m) in c.alpha_grid.iter().zip(&c.m_values) {
                    csv.push_str(&csv_row(&[x.to_string(), m.to_string()]));
                }
                out.write(&format!("{name}_m_{}.csv", d.label), csv.as_bytes())?;
                curves.push(CollapseCurve {
                    label: d.label.clone(),
                    alpha_grid: c.alpha_grid.clone(),
                    m_values: c.m_values.clone(),
                    alpha_star: c.alpha_star,
                    m_star: c.m_star,
                    overlay: c
                        .collapsed_curves
                        .iter()
                        .map(|s| Curve {
                            time: s.time,
                            x: s.x_grid.clone(),
                            y: s.density.clone(),
                        })
                        .collect(),
                });
            }
            Figure::Fig4Collapse { curves }
        }
        RecipeName::Fig5Shape => {
            let mut series = Vec::new();
            for (d, a) in data.iter().zip(analyses) {
                let (Some(s), Some(last)) = (&a.shape, d.series.last()) else {
                    continue;
                };
                let mut csv =
                    csv_row(&["time_ms", "exponent", "ci95", "r_squared"].map(String::from));
                for p in &s.points {
                    if let Some(f) = p.fit {
                        csv.push_str(&csv_row(&[
                            p.time.to_string(),
                            f.exponent.to_string(),
                            f.ci95.to_string(),
                            f.r_squared.to_string(),
                        ]));
                    }
                }
                out.write(&format!("{name}_{}.csv", d.label), csv.as_bytes())?;
                series.push(shape_curve(&d.label, s, last)?);
            }
            Figure::Fig5Shape { series }
        }
    };
    out.write_json(&format!("{name}.json"), &figure)?;
    out.write(&format!("{name}.svg"), render(&figure)?.as_bytes())?;
    Ok(figure)
}

/// Simulates every point, analyzes it and writes all artifacts into `out`.
pub fn run_recipe(
    out: &mut OutputDir,
    cfg: &Config,
    recipe: RecipeName,
    simulator: Simulator,
    sweep: &[toml::Table],
    master: u64,
) -> Result<Figure> {
    let digest = cfg.digest();
    let specs = points(cfg, simulator, sweep, master)?;
    let needs = Needs::of(recipe);
    let results: Vec<(PointData, PointAnalysis)> = specs
        .par_iter()
        .map(|spec| {
            let data = simulate(spec, &digest)?;
            let analysis = analyze(&spec.label, &data.series, &cfg.anomalous_analysis, needs)?;
            Ok((data, analysis))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (d, a) in &results {
        out.write_snapshots(&format!("snapshots/{}", d.label), "snap", &d.series)?;
        if let Some(diag) = &d.diagnostics {
            out.write_json(&format!("diagnostics/{}.json", d.label), diag)?;
        }
        records.extend(a.records.iter().cloned());
    }
    out.write("reports.jsonl", to_lines(&records).as_bytes())?;
    let (data, analyses): (Vec<PointData>, Vec<PointAnalysis>) = results.into_iter().unzip();
    emit_figure(out, recipe, &data, &analyses)
}
