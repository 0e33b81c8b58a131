//! Run configuration: a JSON file, overridden field by field by flags.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use waveheat::network::MIN_CELLS;
use waveheat::ExteriorBc;

/// Invalid input; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    /// Coupled wave-heat network (exterior condition from `bc`).
    Full,
    /// Wave edges with absorbing ends.
    WaveDamped,
    /// Heat edges with clamped vertex traces.
    HeatDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// `(I - A_h)^{-1} r` for random `r`.
    Classical,
    /// Raw random state.
    Mild,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub betas: [f64; 3],
    pub bc: ExteriorBc,
    pub variant: VariantName,
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Per-subcommand default when absent.
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub s_points: Option<usize>,
    /// Window for the resolvent growth fit; defaults to the upper decade of
    /// the s-window.
    pub fit_window: Option<[f64; 2]>,
    /// Window for the energy decay fit.
    pub decay_window: [f64; 2],
    pub initial: InitialKind,
    /// Multiple of the unit-energy constant node state added to the initial
    /// data (exercises the kernel of the Neumann variant).
    pub offset: f64,
    /// Also run raw and resolvent-smoothed data side by side.
    pub compare: bool,
    pub seed: u64,
    /// Restricts `verify-all` to these check ids.
    pub checks: Option<Vec<String>>,
    /// Write the generator as Matrix Market plus its energy weights.
    pub export_matrix: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            betas: [1.0, 1.0, 1.0],
            bc: ExteriorBc::DirichletVelocity,
            variant: VariantName::Full,
            n: 256,
            dt: 1e-3,
            t_end: 100.0,
            s_min: None,
            s_max: None,
            s_points: None,
            fit_window: None,
            decay_window: [5.0, 50.0],
            initial: InitialKind::Classical,
            offset: 0.0,
            compare: false,
            seed: 1,
            checks: None,
            export_matrix: false,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_betas(text: &str) -> Result<[f64; 3], String> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(vals).map_err(|v| format!("expected three diffusivities, got {}", v.len()))
}

fn parse_bc(text: &str) -> Result<ExteriorBc, String> {
    text.parse().map_err(|e: waveheat::Error| e.to_string())
}

fn parse_ids(text: &str) -> Result<Vec<String>, String> {
    Ok(text
        .split(',')
        .map(|t| t.trim().to_uppercase())
        .filter(|t| !t.is_empty())
        .collect())
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Heat diffusivities, e.g. 1,2,3
    #[arg(long, value_parser = parse_betas, value_name = "A,B,C")]
    pub betas: Option<[f64; 3]>,
    /// Exterior condition: dirichlet | neumann
    #[arg(long, value_parser = parse_bc)]
    pub bc: Option<ExteriorBc>,
    /// Cells per edge
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long = "T", value_name = "T")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub s_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write the generator (.mtx) and its energy weights
    #[arg(long)]
    pub export_matrix: bool,
}

impl ConfigArgs {
    pub fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(b) = self.betas {
            cfg.betas = b;
        }
        if let Some(bc) = self.bc {
            cfg.bc = bc;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if self.s_min.is_some() {
            cfg.s_min = self.s_min;
        }
        if self.s_max.is_some() {
            cfg.s_max = self.s_max;
        }
        if self.s_points.is_some() {
            cfg.s_points = self.s_points;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.export_matrix |= self.export_matrix;
        Ok(cfg)
    }
}

pub fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn parse_check_ids(text: &str) -> Result<Vec<String>, String> {
    parse_ids(text)
}

impl RunConfig {
    /// Fills an absent s-window with the subcommand's default.
    pub fn with_s_defaults(mut self, lo: f64, hi: f64, points: usize) -> Self {
        self.s_min.get_or_insert(lo);
        self.s_max.get_or_insert(hi);
        self.s_points.get_or_insert(points);
        self
    }

    pub fn s_window(&self) -> [f64; 2] {
        [self.s_min.unwrap_or(f64::NAN), self.s_max.unwrap_or(f64::NAN)]
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(usage(format!("diffusivities must be positive, got {b}")));
        }
        if self.n < MIN_CELLS {
            return Err(usage(format!("n must be at least {MIN_CELLS}, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(usage(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(usage(format!("T must be positive, got {}", self.t_end)));
        }
        if let (Some(lo), Some(hi)) = (self.s_min, self.s_max) {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(usage(format!("empty s-window [{lo}, {hi}]")));
            }
        }
        if self.s_points.is_some_and(|k| k < 2) {
            return Err(usage("s-points must be at least 2"));
        }
        if let Some([a, b]) = self.fit_window {
            if !(a > 0.0 && a < b) {
                return Err(usage(format!("empty fit window [{a}, {b}]")));
            }
        }
        if !self.offset.is_finite() {
            return Err(usage("offset must be finite"));
        }
        let [a, b] = self.decay_window;
        if !(a >= 0.0 && a < b) {
            return Err(usage(format!("empty decay window [{a}, {b}]")));
        }
        Ok(())
    }
}
