//! First-order unsplit Godunov finite volumes on n-dimensional rectangular
//! grids, with a fixed zero halo around the computational box.
//!
//! Cell updates are data-parallel; every reduction (norms, masses, entropy
//! dissipation, space-time accumulators) runs sequentially in cell order with
//! compensated summation, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_solutions::DataProfile;
use crate::flux_models::{EntropyId, EntropyPair, FluxSpec, InterfaceState};
use crate::moment_tensor::capital_delta;
use crate::numerics::{compensated_sum, CompensatedSum, GAUSS3_NODES, GAUSS3_WEIGHTS};

pub const DEFAULT_CELL_CAP: usize = 100_000_000;
const PAR_MIN_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub origin: f64,
    pub width: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        let g = GridSpec { axes };
        g.validate(DEFAULT_CELL_CAP)?;
        Ok(g)
    }

    /// `count` cells of equal width covering `[lo, hi]`.
    pub fn uniform_1d(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![AxisSpec {
            origin: lo,
            width: (hi - lo) / count as f64,
            count,
        }])
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        for (j, a) in self.axes.iter().enumerate() {
            if !(a.width.is_finite() && a.width > 0.0) || !a.origin.is_finite() || a.count == 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {j}: need finite origin, positive width and count, got {a:?}"
                )));
            }
        }
        let total = self
            .axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
            .unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::InvalidGrid(format!("{total} cells exceed the cap of {cap}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn total_cells(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.width).product()
    }

    /// Row-major strides; the last axis is contiguous.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.n()];
        for j in (0..self.n().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.axes[j + 1].count;
        }
        s
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.axes[j].origin
    }

    pub fn upper(&self, j: usize) -> f64 {
        let a = &self.axes[j];
        a.origin + a.count as f64 * a.width
    }

    pub fn cell_lower(&self, j: usize, i: usize) -> f64 {
        self.axes[j].origin + i as f64 * self.axes[j].width
    }

    pub fn cell_center(&self, j: usize, i: usize) -> f64 {
        self.axes[j].origin + (i as f64 + 0.5) * self.axes[j].width
    }

    pub fn multi_index(&self, c: usize, strides: &[usize]) -> Vec<usize> {
        strides
            .iter()
            .zip(&self.axes)
            .map(|(&s, a)| (c / s) % a.count)
            .collect()
    }
}

/// Cell averages of `u(t, .)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub time: f64,
}

const SNAPSHOT_HEADER: &str = "burgerslab-snapshot v1";

#[derive(Serialize, Deserialize)]
struct SnapshotMeta {
    grid: GridSpec,
    time: f64,
    cells: usize,
}

impl CellField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.total_cells();
        CellField {
            grid,
            values: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Textual snapshot: header line, JSON metadata line, one value per line.
    pub fn to_snapshot(&self) -> String {
        let meta = SnapshotMeta {
            grid: self.grid.clone(),
            time: self.time,
            cells: self.values.len(),
        };
        let mut out = String::with_capacity(self.values.len() * 24 + 256);
        out.push_str(SNAPSHOT_HEADER);
        out.push('\n');
        out.push_str(&serde_json::to_string(&meta).expect("serializable"));
        out.push('\n');
        for v in &self.values {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(SNAPSHOT_HEADER) {
            return Err(Error::Snapshot(format!("missing header {SNAPSHOT_HEADER:?}")));
        }
        let meta: SnapshotMeta = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::Snapshot(format!("bad metadata: {e}")))?;
        meta.grid.validate(usize::MAX)?;
        let values = lines
            .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Snapshot(format!("bad value {l:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != meta.cells || values.len() != meta.grid.total_cells() {
            return Err(Error::Snapshot(format!(
                "expected {} values, found {}",
                meta.grid.total_cells(),
                values.len()
            )));
        }
        Ok(CellField {
            grid: meta.grid,
            values,
            time: meta.time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Zero ghost cells; runs abort when the support reaches the boundary layer.
    #[default]
    ZeroHalo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl_fraction: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub boundary: Boundary,
    pub entropy_diagnostics: Vec<EntropyId>,
    /// Extra `L^p` norms on top of `L^1`, `L^2` and the main exponent.
    pub p_list: Vec<f64>,
    /// Accumulate `∫∫Δ(u)`; needs nonnegative data.
    pub record_delta: bool,
    pub store_snapshots: bool,
    pub cell_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl_fraction: 0.9,
            t_end: 1.0,
            output_times: Vec::new(),
            boundary: Boundary::ZeroHalo,
            entropy_diagnostics: Vec::new(),
            p_list: Vec::new(),
            record_delta: false,
            store_snapshots: false,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return bad(format!("cfl_fraction must lie in (0, 1], got {}", self.cfl_fraction));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if self.output_times.windows(2).any(|w| w[0] > w[1]) {
            return bad("output_times must be sorted".into());
        }
        if self.output_times.iter().any(|&t| !(0.0..=self.t_end).contains(&t)) {
            return bad(format!("output_times must lie in [0, {}]", self.t_end));
        }
        if self.p_list.iter().any(|&p| !(p.is_finite() && p >= 1.0)) {
            return bad("p_list entries must be finite and >= 1".into());
        }
        Ok(())
    }

    /// Output times with `0` and `t_end` added, deduplicated.
    pub fn schedule(&self) -> Vec<f64> {
        let mut ts = vec![0.0];
        ts.extend(self.output_times.iter().copied());
        ts.push(self.t_end);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Exponent `d^2 / (d - 1)` of the dispersion estimate, `d = n + 1`.
pub fn main_exponent(n: usize) -> f64 {
    let d = (n + 1) as f64;
    d * d / (d - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub n: usize,
    pub p_main: f64,
    /// Extra norm exponents (columns `lp_<p>`).
    pub p_extra: Vec<f64>,
    pub entropies: Vec<EntropyId>,
    pub has_delta: bool,
    /// `∫|u_0|^j` for `j = 1..=initial_moments.len()`.
    pub initial_moments: Vec<f64>,
    pub initial_min: f64,
    pub initial_max: f64,
    /// `∫η(u_0)` for each configured entropy, over the computational box.
    pub initial_entropy: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub lp_main: f64,
    pub lp_extra: Vec<f64>,
    pub linf: f64,
    pub tv_sq: Option<f64>,
    pub dissipation: Vec<f64>,
    pub acc_main: f64,
    pub acc_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub meta: RunMeta,
    pub samples: Vec<Sample>,
}

fn fmt_p(p: f64) -> String {
    format!("lp_{p}")
}

impl RunDiagnostics {
    pub fn csv_header(meta: &RunMeta) -> Vec<String> {
        let mut h: Vec<String> = ["t", "mass", "l1", "l2", "lp_main"].iter().map(|s| s.to_string()).collect();
        h.extend(meta.p_extra.iter().map(|&p| fmt_p(p)));
        h.push("linf".into());
        if meta.n == 1 {
            h.push("tv_sq".into());
        }
        h.extend(meta.entropies.iter().map(|e| format!("diss_{}", e.label())));
        h.push("acc_main".into());
        if meta.has_delta {
            h.push("acc_delta".into());
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(&self.meta).join(",");
        out.push('\n');
        for s in &self.samples {
            let mut row = vec![s.t, s.mass, s.l1, s.l2, s.lp_main];
            row.extend(&s.lp_extra);
            row.push(s.linf);
            row.extend(s.tv_sq);
            row.extend(&s.dissipation);
            row.push(s.acc_main);
            row.extend(s.acc_delta);
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(meta: RunMeta, text: &str) -> Result<Self> {
        let bad = |m: String| Error::Snapshot(format!("diagnostics CSV: {m}"));
        let header = Self::csv_header(&meta);
        let mut lines = text.lines();
        let got: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        if got != header {
            return Err(bad(format!("header {got:?} does not match expected {header:?}")));
        }
        let mut samples = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {c:?}: {e}", ln + 2))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != header.len() {
                return Err(bad(format!("row {} has {} fields, expected {}", ln + 2, vals.len(), header.len())));
            }
            let mut it = vals.into_iter();
            let mut next = || it.next().unwrap();
            let (t, mass, l1, l2, lp_main) = (next(), next(), next(), next(), next());
            let lp_extra = meta.p_extra.iter().map(|_| next()).collect();
            let linf = next();
            let tv_sq = (meta.n == 1).then(&mut next);
            let dissipation = meta.entropies.iter().map(|_| next()).collect();
            let acc_main = next();
            let acc_delta = meta.has_delta.then(&mut next);
            samples.push(Sample {
                t,
                mass,
                l1,
                l2,
                lp_main,
                lp_extra,
                linf,
                tv_sq,
                dissipation,
                acc_main,
                acc_delta,
            });
        }
        if samples.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(bad("times are not strictly increasing".into()));
        }
        Ok(RunDiagnostics { meta, samples })
    }

    /// `(t, ||u(t)||_p)` if the norm was recorded.
    pub fn norm_series(&self, p: f64) -> Option<Vec<(f64, f64)>> {
        let pick: Box<dyn Fn(&Sample) -> f64> = if p == 1.0 {
            Box::new(|s| s.l1)
        } else if p == 2.0 {
            Box::new(|s| s.l2)
        } else if (p - self.meta.p_main).abs() <= 1e-12 * p {
            Box::new(|s| s.lp_main)
        } else if p.is_infinite() {
            Box::new(|s| s.linf)
        } else {
            let k = self.meta.p_extra.iter().position(|&q| (q - p).abs() <= 1e-12 * p)?;
            Box::new(move |s| s.lp_extra[k])
        };
        Some(self.samples.iter().map(|s| (s.t, pick(s))).collect())
    }

    pub fn initial_moment(&self, j: usize) -> Option<f64> {
        self.meta.initial_moments.get(j.checked_sub(1)?).copied()
    }

    pub fn initial_l1(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.l1)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("at least the initial sample")
    }
}

pub struct RunOutput {
    pub diagnostics: RunDiagnostics,
    pub initial: CellField,
    pub final_field: CellField,
    pub snapshots: Vec<CellField>,
}

/// Cell averages of `profile` by 3-point Gauss quadrature per axis.
pub fn initialize(grid: &GridSpec, profile: &DataProfile) -> Result<CellField> {
    grid.validate(DEFAULT_CELL_CAP)?;
    profile.validate()?;
    let n = grid.n();
    let pd = profile.dim()?;
    if pd != n {
        return Err(Error::DimensionMismatch { expected: n, got: pd });
    }
    if !profile.sup_bound().is_finite() {
        return Err(Error::InvalidProfile("unbounded data must be truncated before initialization".into()));
    }
    if let Some(support) = profile.support() {
        for (j, &(lo, hi)) in support.iter().enumerate() {
            let have_lo = grid.lower(j) + grid.axes[j].width;
            let have_hi = grid.upper(j) - grid.axes[j].width;
            if lo < have_lo || hi > have_hi {
                return Err(Error::SupportExceedsGrid {
                    axis: j,
                    need_lo: lo - grid.axes[j].width,
                    need_hi: hi + grid.axes[j].width,
                    have_lo,
                    have_hi,
                });
            }
        }
    }
    let strides = grid.strides();
    let nodes = 3usize.pow(n as u32);
    let values: Vec<f64> = (0..grid.total_cells())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN / nodes.max(1))
        .map(|c| {
            let idx = grid.multi_index(c, &strides);
            let mut y = vec![0.0; n];
            let mut acc = CompensatedSum::new();
            let mut wsum = CompensatedSum::new();
            for node in 0..nodes {
                let mut rem = node;
                let mut w = 1.0;
                for j in 0..n {
                    let q = rem % 3;
                    rem /= 3;
                    y[j] = grid.cell_lower(j, idx[j]) + GAUSS3_NODES[q] * grid.axes[j].width;
                    w *= GAUSS3_WEIGHTS[q];
                }
                acc.add(w * profile.eval(&y));
                wsum.add(w);
            }
            acc.value() / wsum.value()
        })
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidProfile(format!(
            "cell average {bad} is not finite; unbounded data must be truncated first"
        )));
    }
    Ok(CellField {
        grid: grid.clone(),
        values,
        time: 0.0,
    })
}

/// Grid covering the support of `profile` enlarged by the maximal
/// propagation distance over `[0, t_end]` plus `margin`, with cell width
/// `1 / cells_per_unit` and origins on multiples of the cell width.
pub fn auto_grid(
    profile: &DataProfile,
    spec: &FluxSpec,
    t_end: f64,
    cells_per_unit: f64,
    margin: f64,
) -> Result<GridSpec> {
    profile.validate()?;
    if !(cells_per_unit.is_finite() && cells_per_unit > 0.0 && margin.is_finite() && margin >= 0.0) {
        return Err(Error::InvalidArgument("auto grid needs positive resolution and margin >= 0".into()));
    }
    let n = profile.dim()?;
    if n != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), got: n });
    }
    let bound = profile.sup_bound();
    if !bound.is_finite() {
        return Err(Error::InvalidProfile("cannot size a grid for unbounded data; truncate it".into()));
    }
    let speeds = spec.max_wave_speed(-bound, bound);
    let support = profile.support().unwrap_or_else(|| vec![(0.0, 0.0); n]);
    let h = 1.0 / cells_per_unit;
    let axes = (0..n)
        .map(|j| {
            let reach = speeds[j] * t_end + margin + 2.0 * h;
            let lo = ((support[j].0 - reach) / h).floor();
            let hi = ((support[j].1 + reach) / h).ceil();
            AxisSpec {
                origin: lo * h,
                width: h,
                count: (hi - lo).max(3.0) as usize,
            }
        })
        .collect();
    GridSpec::new(axes)
}

/// Largest `dt` with `Σ_j dt speed_j / h_j <= cfl`; infinite for a field at
/// which every wave speed vanishes.
pub fn cfl_dt(field: &CellField, spec: &FluxSpec, cfl: f64) -> f64 {
    let rate = cfl_rate(field, spec);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        cfl / rate
    }
}

fn cfl_rate(field: &CellField, spec: &FluxSpec) -> f64 {
    let (lo, hi) = field.min_max();
    let speeds = spec.max_wave_speed(lo.min(0.0), hi.max(0.0));
    speeds
        .iter()
        .zip(&field.grid.axes)
        .map(|(s, a)| s / a.width)
        .sum()
}

/// Aborts when a cell adjacent to the zero halo carries a nonzero value.
pub fn check_boundary(field: &CellField, spec: &FluxSpec, remaining: f64) -> Result<()> {
    let grid = &field.grid;
    let strides = grid.strides();
    for (c, &v) in field.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let idx = grid.multi_index(c, &strides);
        if let Some(j) = (0..grid.n()).find(|&j| idx[j] == 0 || idx[j] + 1 == grid.axes[j].count) {
            let (lo, hi) = field.min_max();
            let speed = spec.max_wave_speed(lo.min(0.0), hi.max(0.0))[j];
            let reach = speed * remaining;
            return Err(Error::BoundaryContact {
                t: field.time,
                axis: j,
                hint: format!(
                    "enlarge axis {j} to at least [{}, {}] (max wave speed {speed} over the remaining time {remaining})",
                    grid.lower(j) - reach - grid.axes[j].width,
                    grid.upper(j) + reach + grid.axes[j].width
                ),
            });
        }
    }
    Ok(())
}

/// Godunov states at the right interface of every cell, per axis.
struct Interfaces {
    right: Vec<Vec<InterfaceState>>,
    strides: Vec<usize>,
}

impl Interfaces {
    fn compute(field: &CellField, spec: &FluxSpec) -> Self {
        let grid = &field.grid;
        let strides = grid.strides();
        let u = &field.values;
        let right = (0..grid.n())
            .map(|j| {
                let (s, count) = (strides[j], grid.axes[j].count);
                (0..u.len())
                    .into_par_iter()
                    .with_min_len(PAR_MIN_LEN)
                    .map(|c| {
                        let ur = if (c / s) % count + 1 < count { u[c + s] } else { 0.0 };
                        spec.godunov(j, u[c], ur)
                    })
                    .collect()
            })
            .collect();
        Interfaces { right, strides }
    }

    fn left(&self, field: &CellField, spec: &FluxSpec, j: usize, c: usize) -> InterfaceState {
        let s = self.strides[j];
        if (c / s) % field.grid.axes[j].count > 0 {
            self.right[j][c - s]
        } else {
            spec.godunov(j, 0.0, field.values[c])
        }
    }
}

fn apply_update(field: &CellField, spec: &FluxSpec, ifaces: &Interfaces, dt: f64) -> CellField {
    let ratios: Vec<f64> = field.grid.axes.iter().map(|a| dt / a.width).collect();
    let values = field
        .values
        .par_iter()
        .enumerate()
        .with_min_len(PAR_MIN_LEN)
        .map(|(c, &u)| {
            let mut du = 0.0;
            for (j, r) in ratios.iter().enumerate() {
                du += r * (ifaces.right[j][c].flux - ifaces.left(field, spec, j, c).flux);
            }
            u - du
        })
        .collect();
    CellField {
        grid: field.grid.clone(),
        values,
        time: field.time + dt,
    }
}

/// One Godunov step, rejecting `dt` beyond the monotonicity limit
/// `Σ_j dt speed_j / h_j <= 1`.
pub fn step(field: &CellField, spec: &FluxSpec, dt: f64) -> Result<CellField> {
    step_with_limit(field, spec, dt, 1.0)
}

pub fn step_with_limit(field: &CellField, spec: &FluxSpec, dt: f64, cfl_limit: f64) -> Result<CellField> {
    if field.grid.n() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: field.grid.n(),
        });
    }
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be finite and >= 0, got {dt}")));
    }
    let number = dt * cfl_rate(field, spec);
    if number > cfl_limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { number, limit: cfl_limit });
    }
    check_boundary(field, spec, dt)?;
    let ifaces = Interfaces::compute(field, spec);
    Ok(apply_update(field, spec, &ifaces, dt))
}

fn residual_field(
    before: &CellField,
    after: &CellField,
    spec: &FluxSpec,
    pair: &EntropyPair<'_>,
    ifaces: &Interfaces,
    dt: f64,
) -> Result<Vec<f64>> {
    let widths: Vec<f64> = before.grid.axes.iter().map(|a| a.width).collect();
    before
        .values
        .par_iter()
        .zip(after.values.par_iter())
        .enumerate()
        .with_min_len(PAR_MIN_LEN)
        .map(|(c, (&u0, &u1))| {
            let mut r = -(pair.eta(u1)? - pair.eta(u0)?) / dt;
            for (j, h) in widths.iter().enumerate() {
                let qr = pair.q_component(j, ifaces.right[j][c].state)?;
                let ql = pair.q_component(j, ifaces.left(before, spec, j, c).state)?;
                r -= (qr - ql) / h;
            }
            Ok(r)
        })
        .collect()
}

/// Cell entropy residual of one step and its total mass `Σ r vol dt`.
pub fn entropy_residual(
    before: &CellField,
    after: &CellField,
    spec: &FluxSpec,
    e: EntropyId,
    dt: f64,
) -> Result<(Vec<f64>, f64)> {
    if before.grid != after.grid {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("entropy residual needs dt > 0, got {dt}")));
    }
    let pair = EntropyPair::new(spec, e)?;
    let ifaces = Interfaces::compute(before, spec);
    let r = residual_field(before, after, spec, &pair, &ifaces, dt)?;
    let vol = before.grid.cell_volume();
    let total = compensated_sum(r.iter().map(|x| x * vol * dt));
    Ok((r, total))
}

pub fn mass(field: &CellField) -> f64 {
    field.grid.cell_volume() * compensated_sum(field.values.iter().copied())
}

pub fn lp_norm(field: &CellField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(linf_norm(field));
    }
    let s = compensated_sum(field.values.iter().map(|v| v.abs().powf(p)));
    Ok((field.grid.cell_volume() * s).powf(1.0 / p))
}

pub fn linf_norm(field: &CellField) -> f64 {
    field.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `Σ |v_{i+1} - v_i|` with `v = u^2/2`, halo cells included.
pub fn tv_of_square_1d(field: &CellField) -> Result<f64> {
    if field.grid.n() != 1 {
        return Err(Error::InvalidArgument(format!(
            "total variation of u^2/2 is only defined for n = 1, got n = {}",
            field.grid.n()
        )));
    }
    let sq: Vec<f64> = std::iter::once(0.0)
        .chain(field.values.iter().map(|u| 0.5 * u * u))
        .chain(std::iter::once(0.0))
        .collect();
    Ok(compensated_sum(sq.windows(2).map(|w| (w[1] - w[0]).abs())))
}

fn power_integral(field: &CellField, p: f64) -> f64 {
    field.grid.cell_volume() * compensated_sum(field.values.iter().map(|v| v.abs().powf(p)))
}

fn delta_integral(field: &CellField, spec: &FluxSpec) -> Result<f64> {
    let vals = field
        .values
        .par_iter()
        .with_min_len(PAR_MIN_LEN / 8)
        .map(|&u| capital_delta(spec, u))
        .collect::<Result<Vec<f64>>>()?;
    Ok(field.grid.cell_volume() * compensated_sum(vals))
}

struct Recorder<'a> {
    spec: &'a FluxSpec,
    meta: RunMeta,
}

impl Recorder<'_> {
    fn sample(&self, field: &CellField, diss: &[CompensatedSum], acc: &CompensatedSum, acc_delta: &CompensatedSum) -> Sample {
        let norm = |p: f64| lp_norm(field, p).expect("p >= 1");
        Sample {
            t: field.time,
            mass: mass(field),
            l1: norm(1.0),
            l2: norm(2.0),
            lp_main: norm(self.meta.p_main),
            lp_extra: self.meta.p_extra.iter().map(|&p| norm(p)).collect(),
            linf: linf_norm(field),
            tv_sq: (self.spec.n() == 1).then(|| tv_of_square_1d(field).expect("1-D")),
            dissipation: diss.iter().map(|d| d.value()).collect(),
            acc_main: acc.value(),
            acc_delta: self.meta.has_delta.then(|| acc_delta.value()),
        }
    }
}

pub fn run(grid: &GridSpec, profile: &DataProfile, spec: &FluxSpec, config: &SolverConfig) -> Result<RunOutput> {
    grid.validate(config.cell_cap)?;
    let initial = initialize(grid, profile)?;
    run_from_field(initial, spec, config)
}

/// Advances `initial` to `config.t_end` with the largest CFL-admissible steps,
/// clipped to land on every output time.
pub fn run_from_field(initial: CellField, spec: &FluxSpec, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    initial.grid.validate(config.cell_cap)?;
    let n = initial.grid.n();
    if n != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), got: n });
    }
    let (lo, hi) = initial.min_max();
    if config.record_delta && lo < 0.0 {
        return Err(Error::InvalidArgument("recording ∫∫Δ(u) needs nonnegative data".into()));
    }
    let pairs = config
        .entropy_diagnostics
        .iter()
        .map(|&e| EntropyPair::new(spec, e))
        .collect::<Result<Vec<_>>>()?;
    let vol = initial.grid.cell_volume();
    let initial_entropy = pairs
        .iter()
        .map(|p| {
            let vals = initial.values.iter().map(|&u| p.eta(u)).collect::<Result<Vec<f64>>>()?;
            Ok(vol * compensated_sum(vals))
        })
        .collect::<Result<Vec<f64>>>()?;
    let k_max = spec.exponents().and_then(|k| k.last().copied()).unwrap_or(0) as usize;
    let p_main = main_exponent(n);
    let meta = RunMeta {
        n,
        p_main,
        p_extra: config
            .p_list
            .iter()
            .copied()
            .filter(|&p| p != 1.0 && p != 2.0 && (p - p_main).abs() > 1e-12 * p)
            .collect(),
        entropies: config.entropy_diagnostics.clone(),
        has_delta: config.record_delta,
        initial_moments: (1..=(n + 1).max(k_max)).map(|j| power_integral(&initial, j as f64)).collect(),
        initial_min: lo,
        initial_max: hi,
        initial_entropy,
        steps: 0,
    };
    let mut rec = Recorder { spec, meta };

    let schedule = config.schedule();
    let mut field = initial.clone();
    field.time = 0.0;
    let mut diss = vec![CompensatedSum::new(); pairs.len()];
    let mut acc = CompensatedSum::new();
    let mut acc_delta = CompensatedSum::new();
    let mut samples = vec![rec.sample(&field, &diss, &acc, &acc_delta)];
    let mut snapshots = Vec::new();
    if config.store_snapshots {
        snapshots.push(field.clone());
    }
    let mut steps = 0usize;
    for &target in &schedule[1..] {
        while field.time < target {
            check_boundary(&field, spec, config.t_end - field.time)?;
            let dt_cfl = cfl_dt(&field, spec, config.cfl_fraction);
            let hit = field.time + dt_cfl >= target;
            let dt = if hit { target - field.time } else { dt_cfl };

            acc.add(dt * power_integral(&field, p_main));
            if config.record_delta {
                acc_delta.add(dt * delta_integral(&field, spec)?);
            }
            let ifaces = Interfaces::compute(&field, spec);
            let mut next = apply_update(&field, spec, &ifaces, dt);
            for (pair, d) in pairs.iter().zip(diss.iter_mut()) {
                let r = residual_field(&field, &next, spec, pair, &ifaces, dt)?;
                d.add(compensated_sum(r.iter().map(|x| x * vol * dt)));
            }
            next.time = if hit { target } else { field.time + dt };
            field = next;
            steps += 1;
        }
        samples.push(rec.sample(&field, &diss, &acc, &acc_delta));
        if config.store_snapshots {
            snapshots.push(field.clone());
        }
    }
    check_boundary(&field, spec, 0.0)?;
    rec.meta.steps = steps;
    Ok(RunOutput {
        diagnostics: RunDiagnostics {
            meta: rec.meta,
            samples,
        },
        initial,
        final_field: field,
        snapshots,
    })
}

/// `||u - v||_1` for fields on the same grid.
pub fn l1_distance(u: &CellField, v: &CellField) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    Ok(u.grid.cell_volume() * compensated_sum(u.values.iter().zip(&v.values).map(|(a, b)| (a - b).abs())))
}
