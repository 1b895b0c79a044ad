//! Flat TOML experiment configuration.
//!
//! Every key is optional. Keys whose default depends on the command
//! (`regularity`, `samples`, `kernel`) are resolved by [`parse_config`], so the
//! effective configuration carries concrete values and its echo re-parses to
//! an equal value.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::basis::Truncation;
use crate::error::{Error, Result};
use crate::field::{KernelSpec, LawDefiningConfig, DEFAULT_OSC_SPATIAL_GRID, DEFAULT_OSC_TIME_GRID};
use crate::flow::FlowSettings;
use crate::temporal::{KernelTag, DEFAULT_TIME_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SampleField,
    Flow,
    Diffusion,
    Intersections,
    RandomWalk,
    RkhsNorm,
    Tails,
    Concentration,
    Inversion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SampleField => "sample-field",
            Command::Flow => "flow",
            Command::Diffusion => "diffusion",
            Command::Intersections => "intersections",
            Command::RandomWalk => "random-walk",
            Command::RkhsNorm => "rkhs-norm",
            Command::Tails => "tails",
            Command::Concentration => "concentration",
            Command::Inversion => "inversion",
        }
    }

    pub fn default_samples(self) -> usize {
        match self {
            Command::Intersections => 600,
            Command::Diffusion => 100,
            Command::Tails => 2000,
            Command::Concentration => 200,
            Command::Inversion => 500,
            Command::Flow => 12,
            Command::RandomWalk => 100,
            Command::SampleField | Command::RkhsNorm => 1,
        }
    }

    pub fn default_regularity(self) -> Vec<f64> {
        match self {
            Command::Intersections => vec![0.04, 0.06, 0.08, 0.1, 0.12, 0.14],
            Command::Concentration => vec![0.04, 0.08, 0.14, 0.5, 1.0],
            Command::Diffusion | Command::SampleField => vec![0.08],
            Command::Tails => vec![0.1],
            _ => vec![0.14],
        }
    }

    pub fn default_kernel(self) -> KernelTag {
        match self {
            Command::RandomWalk => KernelTag::Autonomous,
            _ => KernelTag::Periodic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub regularity: Vec<f64>,
    pub spatial_max: u32,
    pub include_axis_modes: bool,
    pub temporal_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelTag>,
    pub per_mode_scale: f64,
    pub time_grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub steps: usize,
    pub refinement_threshold: f64,
    pub max_refinement_depth: u32,
    pub seed: u64,
    pub out: PathBuf,
    pub plot: bool,
    /// Cells per side of the diffusion histogram.
    pub grid: usize,
    /// Points per diffusion cloud.
    pub points: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub times: Vec<f64>,
    /// Test Lagrangian labels for `intersections`.
    pub lagrangians: Vec<String>,
    /// Initial segments of the reference curve `S¹ × {0.5}`.
    pub curve_vertices: usize,
    pub walk_steps: usize,
    pub probe: [f64; 2],
    /// Amplitude of a deterministic shear added to every draw (inversion counterexample).
    pub mean_offset: f64,
    pub osc_spatial_grid: usize,
    pub osc_time_grid: usize,
    /// Time slice for `sample-field` plots.
    pub time: f64,
    pub arrow_grid: usize,
    /// Fraction of failed samples tolerated per table row.
    pub failure_budget: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = Truncation::default();
        let f = FlowSettings::default();
        ExperimentConfig {
            command: None,
            regularity: Vec::new(),
            spatial_max: t.spatial_max,
            include_axis_modes: t.include_axis_modes,
            temporal_max: t.temporal_max,
            kernel: None,
            per_mode_scale: 1.0,
            time_grid: DEFAULT_TIME_GRID,
            samples: None,
            steps: f.steps,
            refinement_threshold: f.refinement_threshold,
            max_refinement_depth: f.max_refinement_depth,
            seed: 0,
            out: PathBuf::from("out"),
            plot: false,
            grid: 10,
            points: 100,
            center: [0.5, 0.5],
            radius: 0.1,
            times: vec![0.0, 0.05, 0.1, 0.25],
            lagrangians: (1..=14).map(|i| format!("L{i}")).collect(),
            curve_vertices: 100,
            walk_steps: 5,
            probe: [0.3, 0.7],
            mean_offset: 0.0,
            osc_spatial_grid: DEFAULT_OSC_SPATIAL_GRID,
            osc_time_grid: DEFAULT_OSC_TIME_GRID,
            time: 0.0,
            arrow_grid: 20,
            failure_budget: 0.01,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for `command`, fully resolved.
    pub fn for_command(command: Command) -> Self {
        ExperimentConfig {
            command: Some(command),
            ..Self::default()
        }
        .resolved()
    }

    fn resolved(mut self) -> Self {
        if let Some(c) = self.command {
            if self.regularity.is_empty() {
                self.regularity = c.default_regularity();
            }
            self.samples.get_or_insert(c.default_samples());
            self.kernel.get_or_insert(c.default_kernel());
        }
        self
    }

    pub fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| Error::validation("command", "no command selected"))
    }

    pub fn samples(&self) -> usize {
        self.samples
            .or_else(|| self.command.map(Command::default_samples))
            .unwrap_or(1)
    }

    pub fn kernel_tag(&self) -> KernelTag {
        self.kernel
            .or_else(|| self.command.map(Command::default_kernel))
            .unwrap_or(KernelTag::Periodic)
    }

    pub fn truncation(&self) -> Truncation {
        Truncation {
            spatial_max: self.spatial_max,
            include_axis_modes: self.include_axis_modes,
            temporal_max: self.temporal_max,
        }
    }

    pub fn flow_settings(&self) -> FlowSettings {
        FlowSettings {
            steps: self.steps,
            refinement_threshold: self.refinement_threshold,
            max_refinement_depth: self.max_refinement_depth,
        }
    }

    /// Law-defining configuration at regularity `r`.
    pub fn law(&self, r: f64) -> LawDefiningConfig {
        LawDefiningConfig {
            regularity: r,
            truncation: self.truncation(),
            kernel: KernelSpec {
                tag: self.kernel_tag(),
                per_mode_scale: self.per_mode_scale,
                time_grid: self.time_grid,
            },
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regularity.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::validation("regularity", "every value must be positive and finite"));
        }
        self.truncation().validate()?;
        if i64::try_from(self.seed).is_err() {
            return Err(Error::validation("seed", "must fit a signed 64-bit TOML integer"));
        }
        if !(self.per_mode_scale >= 0.0 && self.per_mode_scale.is_finite()) {
            return Err(Error::validation("per_mode_scale", "must be nonnegative and finite"));
        }
        if self.time_grid < 2 {
            return Err(Error::validation("time_grid", "needs at least 2 nodes"));
        }
        if self.samples == Some(0) {
            return Err(Error::validation("samples", "must be at least 1"));
        }
        self.flow_settings().validate()?;
        if self.grid < 1 {
            return Err(Error::validation("grid", "must be at least 1"));
        }
        if self.points < 1 {
            return Err(Error::validation("points", "must be at least 1"));
        }
        if !(self.radius >= 0.0 && self.radius < 0.5) {
            return Err(Error::validation("radius", "must lie in [0, 0.5)"));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::validation("times", "need at least one time, all in [0, 1]"));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation("times", "must be nondecreasing"));
        }
        for label in &self.lagrangians {
            crate::experiments::TestLagrangian::standard(label)?;
        }
        if self.curve_vertices < 3 || 1.0 / self.curve_vertices as f64 >= 0.5 {
            return Err(Error::validation("curve_vertices", "must be at least 3"));
        }
        if !self.mean_offset.is_finite() {
            return Err(Error::validation("mean_offset", "must be finite"));
        }
        if self.osc_spatial_grid < 2 || self.osc_time_grid < 2 {
            return Err(Error::validation("osc grid", "grids need at least 2 nodes"));
        }
        if !(0.0..=1.0).contains(&self.time) {
            return Err(Error::validation("time", "must lie in [0, 1]"));
        }
        if self.arrow_grid < 1 {
            return Err(Error::validation("arrow_grid", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.failure_budget) {
            return Err(Error::validation("failure_budget", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Effective configuration as TOML.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Parse and validate a configuration document; `command`, when given,
/// overrides the document's own `command` key.
pub fn parse_config(text: &str, command: Option<Command>) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if command.is_some() {
        cfg.command = command;
    }
    let cfg = cfg.resolved();
    cfg.validate()?;
    Ok(cfg)
}

/// Comma-separated list of reals, e.g. `0.04,0.06,0.08`.
pub fn parse_regularity_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("regularity: cannot parse {s:?}")))
        })
        .collect()
}
