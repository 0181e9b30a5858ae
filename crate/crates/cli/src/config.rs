use std::path::PathBuf;

use burgerslab::estimate_lab::{CheckOptions, DiagonalGrid};
use burgerslab::exact_solutions::DataProfile;
use burgerslab::flux_models::FluxSpec;
use burgerslab::fv_solver::{auto_grid, GridSpec, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "BURGERS_LAB_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoGrid {
    pub cells_per_unit: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Estfond {
        #[serde(default)]
        options: CheckOptions,
    },
    Nonhom {
        #[serde(default)]
        options: CheckOptions,
    },
    Decay {
        #[serde(default)]
        options: CheckOptions,
    },
    Gendec {
        q: f64,
        #[serde(default)]
        options: CheckOptions,
    },
    DafTv {
        #[serde(default)]
        options: CheckOptions,
    },
    HeatLinf {
        #[serde(default)]
        options: CheckOptions,
    },
    /// An empty `taus` list means every sampled time up to `t_end / 10`.
    Xtau {
        #[serde(default)]
        taus: Vec<f64>,
        #[serde(default)]
        options: CheckOptions,
    },
    Cigen {
        #[serde(default)]
        options: CheckOptions,
    },
    GrongenDiagonal {
        #[serde(default)]
        grid: DiagonalGrid,
        #[serde(default)]
        options: CheckOptions,
    },
}

pub const CHECK_KINDS: [&str; 9] = [
    "estfond",
    "nonhom",
    "decay",
    "gendec",
    "daf_tv",
    "heat_linf",
    "xtau",
    "cigen",
    "grongen_diagonal",
];

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Estfond { .. } => "estfond",
            CheckSpec::Nonhom { .. } => "nonhom",
            CheckSpec::Decay { .. } => "decay",
            CheckSpec::Gendec { .. } => "gendec",
            CheckSpec::DafTv { .. } => "daf_tv",
            CheckSpec::HeatLinf { .. } => "heat_linf",
            CheckSpec::Xtau { .. } => "xtau",
            CheckSpec::Cigen { .. } => "cigen",
            CheckSpec::GrongenDiagonal { .. } => "grongen_diagonal",
        }
    }

    /// Check of the given kind with default parameters.
    pub fn default_for(kind: &str) -> Result<Self, CliError> {
        let options = CheckOptions::default();
        Ok(match kind {
            "estfond" => CheckSpec::Estfond { options },
            "nonhom" => CheckSpec::Nonhom { options },
            "decay" => CheckSpec::Decay { options },
            "gendec" => CheckSpec::Gendec { q: 2.0, options },
            "daf_tv" => CheckSpec::DafTv { options },
            "heat_linf" => CheckSpec::HeatLinf { options },
            "xtau" => CheckSpec::Xtau {
                taus: Vec::new(),
                options,
            },
            "cigen" => CheckSpec::Cigen { options },
            "grongen_diagonal" => CheckSpec::GrongenDiagonal {
                grid: DiagonalGrid::default(),
                options,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown check {other:?}; expected one of {}",
                    CHECK_KINDS.join(", ")
                )))
            }
        })
    }

    pub fn options_mut(&mut self) -> &mut CheckOptions {
        match self {
            CheckSpec::Estfond { options }
            | CheckSpec::Nonhom { options }
            | CheckSpec::Decay { options }
            | CheckSpec::Gendec { options, .. }
            | CheckSpec::DafTv { options }
            | CheckSpec::HeatLinf { options }
            | CheckSpec::Xtau { options, .. }
            | CheckSpec::Cigen { options }
            | CheckSpec::GrongenDiagonal { options, .. } => options,
        }
    }

    fn one_d_only(&self) -> bool {
        matches!(self, CheckSpec::DafTv { .. } | CheckSpec::HeatLinf { .. })
    }

    fn burgers_only(&self) -> bool {
        !matches!(self, CheckSpec::Cigen { .. } | CheckSpec::GrongenDiagonal { .. })
    }

    fn needs_delta(&self) -> bool {
        !self.burgers_only()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub flux: FluxSpec,
    pub data: DataProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_grid: Option<AutoGrid>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates the config and makes every derived setting explicit: the
    /// auto-sized grid is resolved, norms needed by checks are added to the
    /// solver's norm list and the `∫∫Δ(u)` accumulator is switched on when a
    /// check uses it.
    pub fn normalize(mut self) -> Result<Self, CliError> {
        let cfg = |m: String| CliError::Config(m);
        if self.run_id.is_empty()
            || !self
                .run_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return Err(cfg(format!(
                "run_id must be nonempty and use only letters, digits, '_', '-', '.', got {:?}",
                self.run_id
            )));
        }
        self.data.validate().map_err(|e| cfg(e.to_string()))?;
        let n = self.flux.n();
        let dn = self.data.dim().map_err(|e| cfg(e.to_string()))?;
        if dn != n {
            return Err(cfg(format!("data profile has dimension {dn}, flux has n = {n}")));
        }
        self.solver.validate().map_err(|e| cfg(e.to_string()))?;
        for c in &self.checks {
            if c.one_d_only() && n != 1 {
                return Err(cfg(format!("check {} applies to n = 1 only (config has n = {n})", c.kind())));
            }
            if c.burgers_only() && !self.flux.is_burgers() {
                return Err(cfg(format!("check {} needs the Burgers flux", c.kind())));
            }
            if let CheckSpec::Gendec { q, .. } = c {
                let d = (n + 1) as f64;
                if !(*q > 1.0 && *q < d * d / (d - 1.0)) {
                    return Err(cfg(format!("gendec needs q in (1, {}), got {q}", d * d / (d - 1.0))));
                }
                if !self.solver.p_list.contains(q) {
                    self.solver.p_list.push(*q);
                }
            }
            if c.needs_delta() {
                self.solver.record_delta = true;
            }
        }
        match (&self.grid, &self.auto_grid) {
            (Some(_), Some(_)) => return Err(cfg("give either grid or auto_grid, not both".into())),
            (None, None) => return Err(cfg("missing grid or auto_grid".into())),
            (Some(g), None) => {
                g.validate(self.solver.cell_cap).map_err(|e| cfg(e.to_string()))?;
                if g.n() != n {
                    return Err(cfg(format!("grid has {} axes, flux has n = {n}", g.n())));
                }
            }
            (None, Some(a)) => {
                let g = auto_grid(&self.data, &self.flux, self.solver.t_end, a.cells_per_unit, a.margin)
                    .map_err(|e| cfg(e.to_string()))?;
                g.validate(self.solver.cell_cap).map_err(|e| cfg(e.to_string()))?;
                self.grid = Some(g);
                self.auto_grid = None;
            }
        }
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid.as_ref().expect("normalized config has a grid")
    }
}
