//! JSON job files.
//!
//! Unknown keys are rejected and every error names the offending field path.
//! Relative paths are resolved against the job file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tuttenet::energy::LossWeights;
use tuttenet::optim::{Architecture, EarlyStop, ElasticJobConfig, FitJobConfig, LrSchedule};
use tuttenet::{Frame, Mat3};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    Elastic,
    Fit,
    Apply,
    Invert,
    Check,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Elastic => "elastic",
            Workflow::Fit => "fit",
            Workflow::Apply => "apply",
            Workflow::Invert => "invert",
            Workflow::Check => "check",
        }
    }

    fn trains(self) -> bool {
        matches!(self, Workflow::Elastic | Workflow::Fit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramesConfig {
    /// Layers cycle through the three world axes.
    Triplane,
    /// One row-major rotation per layer.
    Explicit(Vec<[[f64; 3]; 3]>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub layers: Option<usize>,
    pub resolution: Option<usize>,
    pub frames: Option<FramesConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopConfig {
    pub tolerance: f64,
    pub window: usize,
}

fn default_early_stop() -> Option<EarlyStopConfig> {
    let d = EarlyStop::<f64>::default();
    Some(EarlyStopConfig {
        tolerance: d.tolerance,
        window: d.window,
    })
}

/// Optimiser settings; omitted values take the workflow's defaults.
/// `"early_stop": null` disables early stopping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub lr_initial: Option<f64>,
    pub lr_final: Option<f64>,
    pub decay_steps: Option<usize>,
    pub max_steps: Option<usize>,
    #[serde(default = "default_early_stop")]
    pub early_stop: Option<EarlyStopConfig>,
    pub check_every: Option<usize>,
    pub log_every: Option<usize>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            lr_initial: None,
            lr_final: None,
            decay_steps: None,
            max_steps: None,
            early_stop: default_early_stop(),
            check_every: None,
            log_every: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub elastic_initial: Option<f64>,
    pub elastic_decrement: Option<f64>,
    pub elastic_interval: Option<usize>,
    pub elastic_floor: Option<f64>,
    pub handle: Option<f64>,
    pub regularization: Option<f64>,
    /// Two `[threshold, multiplier]` pairs, ascending.
    pub distortion_tiers: Option<[[f64; 2]; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub moving: Option<usize>,
    #[serde(rename = "static")]
    pub fixed: Option<usize>,
    pub free: Option<usize>,
}

/// Point selector in normalised coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Sphere(SphereSelector),
    Box(BoxSelector),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSelector {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSelector {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Selector {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Selector::Sphere(s) => (0..3).map(|k| (p[k] - s.center[k]).powi(2)).sum::<f64>() <= s.radius * s.radius,
            Selector::Box(b) => (0..3).all(|k| b.min[k] <= p[k] && p[k] <= b.max[k]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    /// Held in place.
    Static,
    /// `p ↦ R (p − pivot) + pivot + translation`.
    Rigid(RigidMotion),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidMotion {
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    #[serde(default)]
    pub angle_degrees: f64,
    #[serde(default)]
    pub translation: [f64; 3],
    /// Defaults to the centroid of the selected points.
    pub pivot: Option<[f64; 3]>,
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl RigidMotion {
    pub fn rotation(&self) -> Mat3<f64> {
        let n = self.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        let axis = tuttenet::Vec3(self.axis.map(|a| a / n));
        Mat3::rotation(axis, self.angle_degrees.to_radians())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandleConfig {
    pub selector: Selector,
    pub motion: Motion,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticConfig {
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub budgets: BudgetConfig,
    pub handles: Vec<HandleConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub workflow: Workflow,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    pub elastic: Option<ElasticConfig>,
    /// Geometry to train on or to map.
    pub input: Option<PathBuf>,
    /// Fitting target mesh, vertex-aligned with `input`.
    pub target: Option<PathBuf>,
    /// Checkpoint to read (apply, invert, check).
    pub checkpoint: Option<PathBuf>,
    /// Checkpoint to write (elastic, fit) or geometry to write (apply, invert).
    pub output: Option<PathBuf>,
    /// Deformed copy of the input written after training.
    pub deformed: Option<PathBuf>,
    /// Key=value log file (lines are also echoed to stderr).
    pub log: Option<PathBuf>,
    /// CSV of the loss history.
    pub report: Option<PathBuf>,
}

impl JobFile {
    /// Minimal job for the mapping and checking workflows.
    pub fn new(workflow: Workflow) -> Self {
        JobFile {
            workflow,
            seed: 0,
            net: NetConfig::default(),
            schedule: ScheduleConfig::default(),
            elastic: None,
            input: None,
            target: None,
            checkpoint: None,
            output: None,
            deformed: None,
            log: None,
            report: None,
        }
    }

    /// Parses JSON without touching the filesystem.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<root>".to_string() } else { path };
            CliError::Config(format!("{path}: {}", e.inner()))
        })
    }

    /// Reads, parses and resolves relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut job = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in job.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(job)
    }

    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [
            &mut self.input,
            &mut self.target,
            &mut self.checkpoint,
            &mut self.output,
            &mut self.deformed,
            &mut self.log,
            &mut self.report,
        ]
        .into_iter()
        .flatten()
    }

    /// Checks semantic constraints and that referenced paths resolve.
    pub fn validate(&self) -> Result<()> {
        let w = self.workflow;
        let need = |field: &str, v: &Option<PathBuf>| -> Result<()> {
            if v.is_none() {
                return Err(CliError::Config(format!("{field}: required by the {} workflow", w.name())));
            }
            Ok(())
        };
        let forbid = |field: &str, present: bool| -> Result<()> {
            if present {
                return Err(CliError::Config(format!("{field}: not used by the {} workflow", w.name())));
            }
            Ok(())
        };
        match w {
            Workflow::Elastic => {
                need("input", &self.input)?;
                need("output", &self.output)?;
                if self.elastic.is_none() {
                    return Err(CliError::Config("elastic: required by the elastic workflow".into()));
                }
                forbid("target", self.target.is_some())?;
                forbid("checkpoint", self.checkpoint.is_some())?;
            }
            Workflow::Fit => {
                need("input", &self.input)?;
                need("target", &self.target)?;
                need("output", &self.output)?;
                forbid("elastic", self.elastic.is_some())?;
                forbid("checkpoint", self.checkpoint.is_some())?;
            }
            Workflow::Apply | Workflow::Invert => {
                need("checkpoint", &self.checkpoint)?;
                need("input", &self.input)?;
                need("output", &self.output)?;
            }
            Workflow::Check => {
                need("checkpoint", &self.checkpoint)?;
            }
        }
        if !w.trains() {
            forbid("elastic", self.elastic.is_some())?;
            forbid("target", self.target.is_some())?;
            forbid("net", self.net != NetConfig::default())?;
            forbid("schedule", self.schedule != ScheduleConfig::default())?;
            forbid("deformed", self.deformed.is_some())?;
            forbid("report", self.report.is_some())?;
        }
        for (field, p) in [("input", &self.input), ("target", &self.target), ("checkpoint", &self.checkpoint)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(CliError::Config(format!("{field}: {} does not exist", p.display())));
                }
            }
        }
        for (field, p) in [
            ("output", &self.output),
            ("deformed", &self.deformed),
            ("log", &self.log),
            ("report", &self.report),
        ] {
            if let Some(dir) = p.as_ref().and_then(|p| p.parent()) {
                if !dir.as_os_str().is_empty() && !dir.is_dir() {
                    return Err(CliError::Config(format!("{field}: directory {} does not exist", dir.display())));
                }
            }
        }
        if w.trains() {
            self.architecture()?;
            self.lr_schedule()?;
        }
        if let Some(e) = &self.elastic {
            self.loss_weights()?;
            for (i, h) in e.handles.iter().enumerate() {
                validate_handle(h).map_err(|m| CliError::Config(format!("elastic.handles[{i}].{m}")))?;
            }
        }
        Ok(())
    }

    fn defaults(&self) -> (usize, usize) {
        match self.workflow {
            Workflow::Elastic => (24, 25),
            _ => (24, 11),
        }
    }

    pub fn architecture(&self) -> Result<Architecture<f64>> {
        let (dl, dr) = self.defaults();
        let layers = self.net.layers.unwrap_or(dl);
        let resolution = self.net.resolution.unwrap_or(dr);
        if layers == 0 {
            return Err(CliError::Config("net.layers: must be at least 1".into()));
        }
        if resolution < 3 || resolution.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "net.resolution: must be odd and at least 3, found {resolution}"
            )));
        }
        let frames = match &self.net.frames {
            None | Some(FramesConfig::Triplane) => None,
            Some(FramesConfig::Explicit(list)) => {
                if list.len() != layers {
                    return Err(CliError::Config(format!(
                        "net.frames.explicit: {} frames for {layers} layers",
                        list.len()
                    )));
                }
                let frames = list
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        Frame::new(Mat3(*m)).map_err(|e| CliError::Config(format!("net.frames.explicit[{i}]: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(frames)
            }
        };
        Ok(Architecture {
            layers,
            resolution,
            frames,
        })
    }

    pub fn lr_schedule(&self) -> Result<LrSchedule<f64>> {
        let d = match self.workflow {
            Workflow::Elastic => LrSchedule::elastic(),
            _ => LrSchedule::fitting(),
        };
        let s = &self.schedule;
        let lr = LrSchedule {
            initial: s.lr_initial.unwrap_or(d.initial),
            final_lr: s.lr_final.unwrap_or(d.final_lr),
            decay_steps: s.decay_steps.unwrap_or(d.decay_steps),
        };
        for (field, v) in [("lr_initial", lr.initial), ("lr_final", lr.final_lr)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("schedule.{field}: must be positive, found {v}")));
            }
        }
        if let Some(e) = &s.early_stop {
            if !(e.tolerance >= 0.0) || e.window == 0 {
                return Err(CliError::Config(
                    "schedule.early_stop: tolerance must be nonnegative and window positive".into(),
                ));
            }
        }
        Ok(lr)
    }

    fn early_stop(&self) -> Option<EarlyStop<f64>> {
        self.schedule.early_stop.map(|e| EarlyStop {
            tolerance: e.tolerance,
            window: e.window,
        })
    }

    pub fn loss_weights(&self) -> Result<LossWeights<f64>> {
        let d = LossWeights::default();
        let w = self.elastic.as_ref().map(|e| e.weights.clone()).unwrap_or_default();
        let tiers = w
            .distortion_tiers
            .map(|t| [(t[0][0], t[0][1]), (t[1][0], t[1][1])])
            .unwrap_or(d.distortion_tiers);
        let out = LossWeights {
            elastic_initial: w.elastic_initial.unwrap_or(d.elastic_initial),
            elastic_decrement: w.elastic_decrement.unwrap_or(d.elastic_decrement),
            elastic_interval: w.elastic_interval.unwrap_or(d.elastic_interval),
            elastic_floor: w.elastic_floor.unwrap_or(d.elastic_floor),
            handle: w.handle.unwrap_or(d.handle),
            regularization: w.regularization.unwrap_or(d.regularization),
            distortion_tiers: tiers,
        };
        out.validate()
            .map_err(|e| CliError::Config(format!("elastic.weights: {e}")))?;
        Ok(out)
    }

    pub fn elastic_config(&self) -> Result<ElasticJobConfig<f64>> {
        let d = ElasticJobConfig::<f64>::default();
        let b = self.elastic.as_ref().map(|e| e.budgets.clone()).unwrap_or_default();
        Ok(ElasticJobConfig {
            architecture: self.architecture()?,
            moving_budget: b.moving.unwrap_or(d.moving_budget),
            static_budget: b.fixed.unwrap_or(d.static_budget),
            free_budget: b.free.unwrap_or(d.free_budget),
            weights: self.loss_weights()?,
            lr: self.lr_schedule()?,
            max_steps: self.schedule.max_steps.unwrap_or(d.max_steps),
            early_stop: self.early_stop(),
            check_every: self.schedule.check_every.unwrap_or(d.check_every),
            log_every: self.schedule.log_every.unwrap_or(d.log_every),
            seed: self.seed,
        })
    }

    pub fn fit_config(&self) -> Result<FitJobConfig<f64>> {
        let d = FitJobConfig::<f64>::default();
        Ok(FitJobConfig {
            architecture: self.architecture()?,
            lr: self.lr_schedule()?,
            max_steps: self.schedule.max_steps.unwrap_or(d.max_steps),
            early_stop: self.early_stop(),
            check_every: self.schedule.check_every.unwrap_or(d.check_every),
            log_every: self.schedule.log_every.unwrap_or(d.log_every),
            seed: self.seed,
        })
    }
}

fn validate_handle(h: &HandleConfig) -> std::result::Result<(), String> {
    match &h.selector {
        Selector::Sphere(s) => {
            if !(s.radius > 0.0) || !s.radius.is_finite() {
                return Err(format!("selector.sphere.radius: must be positive, found {}", s.radius));
            }
        }
        Selector::Box(b) => {
            if (0..3).any(|k| !(b.min[k] <= b.max[k])) {
                return Err("selector.box: min must not exceed max".into());
            }
        }
    }
    if let Motion::Rigid(m) = &h.motion {
        if m.axis.iter().map(|a| a * a).sum::<f64>() == 0.0 {
            return Err("motion.rigid.axis: must be nonzero".into());
        }
        let vals = m.axis.iter().chain(&m.translation).chain(m.pivot.iter().flatten());
        if vals.chain(std::iter::once(&m.angle_degrees)).any(|v| !v.is_finite()) {
            return Err("motion.rigid: values must be finite".into());
        }
    }
    Ok(())
}
