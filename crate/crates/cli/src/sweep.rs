use std::fmt::Write as _;
use std::path::Path;

use burgerslab::estimate_lab::{check_estfond, scale_grid, scaling_transform, CheckOptions};
use burgerslab::exact_solutions::{n_wave_cell_average, truncate_data, DataProfile};
use burgerslab::flux_models::FluxSpec;
use burgerslab::fv_solver::{l1_distance, AxisSpec, CellField, GridSpec, RunOutput};
use rayon::prelude::*;
use serde::Serialize;

use crate::exact::parse_list;
use crate::{evaluate, output_root, run_into, write_file, CliError, ExperimentConfig};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Cell width h.
    Mesh,
    /// Scaling parameter λ.
    Lambda,
    /// Truncation level m.
    Truncation,
    /// Monomial flux exponents.
    Exponents,
}

/// Minimal first-order convergence rate accepted by a mesh sweep.
pub const MIN_ORDER: f64 = 0.8;
/// Allowed relative spread of the estfond ratio across a λ sweep.
pub const MAX_RATIO_SPREAD: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub value: String,
    pub run_id: String,
    pub completed: bool,
    pub steps: Option<usize>,
    /// L¹ distance to the exact N-wave at `t_end` (mesh sweeps of N-wave data).
    pub l1_error: Option<f64>,
    pub estfond_ratio: Option<f64>,
    /// `||u_m(T) - u_{m'}(T)||_1` to the next truncation level.
    pub gap: Option<f64>,
    pub checks_pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub run_id: String,
    pub axis: SweepAxis,
    pub points: usize,
    pub failed_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaps_decreasing: Option<bool>,
    pub pass: bool,
    pub notes: Vec<String>,
}

fn parse_scalar(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("invalid sweep value {s:?}"));
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::Config(format!("sweep values must be positive, got {s:?}")));
    }
    Ok(v)
}

enum Values {
    Scalars(Vec<(String, f64)>),
    Lists(Vec<(String, Vec<u32>)>),
}

fn parse_values(axis: SweepAxis, text: &str) -> Result<Values, CliError> {
    let sep = if axis == SweepAxis::Exponents { ';' } else { ',' };
    let items: Vec<&str> = text.split(sep).map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Config("empty sweep value list".into()));
    }
    Ok(match axis {
        SweepAxis::Exponents => Values::Lists(
            items
                .iter()
                .map(|s| Ok((s.to_string(), parse_list::<u32>(s, "exponent")?)))
                .collect::<Result<_, CliError>>()?,
        ),
        _ => Values::Scalars(
            items
                .iter()
                .map(|s| Ok((s.to_string(), parse_scalar(s)?)))
                .collect::<Result<_, CliError>>()?,
        ),
    })
}

/// Same extent as `grid` with cell width as close to `h` as the extent allows.
fn refine_grid(grid: &GridSpec, h: f64) -> GridSpec {
    GridSpec {
        axes: grid
            .axes
            .iter()
            .map(|a| {
                let extent = a.width * a.count as f64;
                let count = (extent / h).round().max(3.0) as usize;
                AxisSpec {
                    origin: a.origin,
                    width: extent / count as f64,
                    count,
                }
            })
            .collect(),
    }
}

/// Builds the normalized config of every sweep point.
fn point_configs(template: &ExperimentConfig, axis: SweepAxis, values: &Values) -> Vec<Result<ExperimentConfig, CliError>> {
    let label = |k: usize| format!("{}-{k:02}", template.run_id);
    match values {
        Values::Scalars(vs) => {
            // truncation points share one grid, sized for the largest level
            let common = if axis == SweepAxis::Truncation {
                let m_max = vs.iter().map(|v| v.1).fold(0.0, f64::max);
                truncate_data(&template.data, m_max)
                    .map_err(|e| CliError::Config(e.to_string()))
                    .and_then(|data| {
                        let mut c = template.clone();
                        c.data = data;
                        c.normalize()
                    })
                    .map(|c| Some(c.grid().clone()))
                    .map_err(|e| e.to_string())
            } else {
                Ok(None)
            };
            vs.iter()
                .enumerate()
                .map(|(k, &(_, v))| {
                    let mut c = template.clone();
                    c.run_id = label(k);
                    match axis {
                        SweepAxis::Mesh => {
                            if let Some(g) = &template.grid {
                                c.grid = Some(refine_grid(g, v));
                            } else if let Some(a) = &mut c.auto_grid {
                                a.cells_per_unit = 1.0 / v;
                            }
                        }
                        SweepAxis::Lambda => {
                            let base = template.clone().normalize()?;
                            c.data = scaling_transform(&base.data, v).map_err(|e| CliError::Config(e.to_string()))?;
                            c.grid = Some(scale_grid(base.grid(), v));
                            c.auto_grid = None;
                            c.solver.t_end = base.solver.t_end / v;
                            c.solver.output_times = base.solver.output_times.iter().map(|t| t / v).collect();
                            for check in &mut c.checks {
                                let o = check.options_mut();
                                o.window = o.window.map(|[a, b]| [a / v, b / v]);
                                o.tail_window = o.tail_window.map(|[a, b]| [a / v, b / v]);
                                o.time_shift /= v;
                            }
                        }
                        SweepAxis::Truncation => {
                            c.data = truncate_data(&template.data, v).map_err(|e| CliError::Config(e.to_string()))?;
                            c.grid = common.clone().map_err(CliError::Config)?;
                            c.auto_grid = None;
                        }
                        SweepAxis::Exponents => unreachable!(),
                    }
                    c.normalize()
                })
                .collect()
        }
        Values::Lists(ls) => ls
            .iter()
            .enumerate()
            .map(|(k, (_, exps))| {
                let mut c = template.clone();
                c.run_id = label(k);
                c.flux = FluxSpec::monomial(exps.clone()).map_err(|e| CliError::Config(e.to_string()))?;
                c.normalize()
            })
            .collect(),
    }
}

fn n_wave_error(data: &DataProfile, field: &CellField) -> Option<f64> {
    let DataProfile::NWave { l } = data else { return None };
    let a = &field.grid.axes[0];
    let errs = (0..a.count).map(|i| {
        let lo = a.origin + i as f64 * a.width;
        (field.values[i] - n_wave_cell_average(*l, field.time, lo, lo + a.width)).abs() * a.width
    });
    Some(burgerslab::numerics::compensated_sum(errs))
}

pub fn cmd_sweep(config_path: &Path, axis: SweepAxis, values: &str, out: Option<&Path>) -> Result<i32, CliError> {
    let template = ExperimentConfig::load(config_path)?;
    let values = parse_values(axis, values)?;
    if let (SweepAxis::Mesh, true) = (axis, template.auto_grid.is_none() && template.grid.is_none()) {
        return Err(CliError::Config("mesh sweep needs grid or auto_grid in the template".into()));
    }
    // the template must be valid as given, except for the swept flux or the
    // unbounded data a truncation sweep clips
    if axis != SweepAxis::Exponents && axis != SweepAxis::Truncation {
        template.clone().normalize()?;
    }
    let labels: Vec<String> = match &values {
        Values::Scalars(v) => v.iter().map(|x| x.0.clone()).collect(),
        Values::Lists(v) => v.iter().map(|x| x.0.clone()).collect(),
    };
    let sweep_dir = output_root(out, &template).join(format!("{}-sweep-{}", template.run_id, axis_name(axis)));
    let configs = point_configs(&template, axis, &values);

    let results: Vec<(Option<ExperimentConfig>, Result<RunOutput, CliError>)> = configs
        .into_par_iter()
        .map(|c| match c {
            Ok(c) => {
                let r = run_into(&c, &sweep_dir.join(&c.run_id));
                (Some(c), r)
            }
            Err(e) => (None, Err(e)),
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    for (k, (cfg, res)) in results.iter().enumerate() {
        let mut p = SweepPoint {
            index: k,
            value: labels[k].clone(),
            run_id: cfg.as_ref().map_or_else(|| format!("{}-{k:02}", template.run_id), |c| c.run_id.clone()),
            completed: false,
            steps: None,
            l1_error: None,
            estfond_ratio: None,
            gap: None,
            checks_pass: false,
            error: None,
        };
        match (cfg, res) {
            (Some(c), Ok(out)) => {
                p.completed = true;
                p.steps = Some(out.diagnostics.meta.steps);
                if axis == SweepAxis::Mesh && c.flux.is_burgers() {
                    p.l1_error = n_wave_error(&c.data, &out.final_field);
                }
                if c.flux.is_burgers() {
                    p.estfond_ratio = check_estfond(&out.diagnostics, c.flux.n() + 1, &CheckOptions::default())
                        .ok()
                        .map(|r| r.ratio);
                }
                p.checks_pass = c
                    .checks
                    .iter()
                    .all(|ch| evaluate(ch, &out.diagnostics, &out.initial, &c.flux).pass);
            }
            (_, Err(e)) => p.error = Some(e.to_string()),
            (None, Ok(_)) => unreachable!(),
        }
        points.push(p);
    }
    let mut summary = SweepSummary {
        run_id: template.run_id.clone(),
        axis,
        points: points.len(),
        failed_points: points.iter().filter(|p| !p.completed || !p.checks_pass).count(),
        orders: Vec::new(),
        min_order: None,
        ratio_spread: None,
        gaps_decreasing: None,
        pass: true,
        notes: Vec::new(),
    };
    match (axis, &values) {
        (SweepAxis::Mesh, Values::Scalars(vs)) => {
            let errs: Option<Vec<f64>> = points.iter().map(|p| p.l1_error).collect();
            match errs {
                Some(e) if e.len() >= 2 => {
                    summary.orders = e
                        .windows(2)
                        .zip(vs.windows(2))
                        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0].1 / h[1].1).ln())
                        .collect();
                    let m = summary.orders.iter().copied().fold(f64::INFINITY, f64::min);
                    summary.min_order = Some(m);
                    if !(m >= MIN_ORDER) {
                        summary.pass = false;
                        summary.notes.push(format!("convergence order {m:.3} below {MIN_ORDER}"));
                    }
                }
                _ => summary
                    .notes
                    .push("no convergence order: needs two completed N-wave points with Burgers flux".into()),
            }
        }
        (SweepAxis::Lambda, _) => {
            let r: Option<Vec<f64>> = points.iter().map(|p| p.estfond_ratio).collect();
            match r {
                Some(r) if !r.is_empty() => {
                    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
                    let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
                    summary.ratio_spread = Some(spread);
                    if !(spread <= MAX_RATIO_SPREAD) {
                        summary.pass = false;
                        summary.notes.push(format!("estfond ratio spread {spread:.3e} above {MAX_RATIO_SPREAD}"));
                    }
                }
                _ => summary.notes.push("estfond ratio unavailable at some point".into()),
            }
        }
        (SweepAxis::Truncation, Values::Scalars(vs)) => {
            // gaps between consecutive levels in increasing order
            let mut order: Vec<usize> = (0..vs.len()).collect();
            order.sort_by(|&a, &b| vs[a].1.total_cmp(&vs[b].1));
            let finals: Vec<Option<&CellField>> =
                results.iter().map(|(_, r)| r.as_ref().ok().map(|o| &o.final_field)).collect();
            let mut gaps = Vec::new();
            for w in order.windows(2) {
                if let (Some(a), Some(b)) = (finals[w[0]], finals[w[1]]) {
                    if let Ok(g) = l1_distance(a, b) {
                        points[w[0]].gap = Some(g);
                        gaps.push(g);
                    }
                }
            }
            if gaps.len() + 1 == vs.len() && !gaps.is_empty() {
                let dec = gaps.windows(2).all(|g| g[1] < g[0]);
                summary.gaps_decreasing = Some(dec);
                if !dec {
                    summary.pass = false;
                    summary.notes.push("truncation gaps do not decrease".into());
                }
            } else {
                summary.notes.push("truncation gaps need every point to complete".into());
            }
        }
        _ => {}
    }
    if summary.failed_points > 0 {
        summary.pass = false;
    }

    let mut csv = String::from("index,value,run_id,completed,steps,l1_error,estfond_ratio,gap,checks_pass,error\n");
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for p in &points {
        let _ = writeln!(
            csv,
            "{},\"{}\",{},{},{},{},{},{},{},\"{}\"",
            p.index,
            p.value,
            p.run_id,
            p.completed,
            p.steps.map_or(String::new(), |s| s.to_string()),
            opt(p.l1_error),
            opt(p.estfond_ratio),
            opt(p.gap),
            p.checks_pass,
            p.error.clone().unwrap_or_default().replace('"', "'")
        );
    }
    write_file(&sweep_dir.join("sweep.csv"), &csv)?;
    let json = serde_json::json!({ "summary": summary, "points": points });
    write_file(&sweep_dir.join("summary.json"), &serde_json::to_string_pretty(&json).unwrap())?;
    print!("{csv}");
    if let Some(m) = summary.min_order {
        println!("convergence orders {:?}, min {m:.4}", summary.orders);
    }
    if let Some(s) = summary.ratio_spread {
        println!("estfond ratio spread {s:.3e}");
    }
    if let Some(g) = summary.gaps_decreasing {
        println!("truncation gaps decreasing: {g}");
    }
    for n in &summary.notes {
        println!("note: {n}");
    }
    println!(
        "sweep {}: {} points, {} failed, {}",
        summary.run_id,
        summary.points,
        summary.failed_points,
        if summary.pass { "pass" } else { "fail" }
    );
    Ok(if summary.pass { 0 } else { 1 })
}

fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Mesh => "mesh",
        SweepAxis::Lambda => "lambda",
        SweepAxis::Truncation => "truncation",
        SweepAxis::Exponents => "exponents",
    }
}
