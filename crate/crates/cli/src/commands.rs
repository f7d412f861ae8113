//! Implementations of the command-line workflows.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tuttenet::energy::{strain_energy_3d, FittingProblem, HandleConstraint};
use tuttenet::optim::{run_elastic, run_fit, ElasticInput};
use tuttenet::{deform::find_collision, DeformationNet, Mat3, PointSet, Vec3};

use crate::checkpoint::{config_hash, Checkpoint};
use crate::error::{CliError, Result};
use crate::geometry::{load_geometry, load_normalized, save_geometry, write_atomic, Geometry, Normalization};
use crate::job::{ElasticConfig, JobFile, Motion, NetConfig, ScheduleConfig, Workflow};

/// Collects key=value lines, echoes them to stderr, and optionally saves them.
#[derive(Debug, Default)]
pub struct Logger {
    pub echo: bool,
    pub lines: Vec<String>,
}

impl Logger {
    pub fn new(echo: bool) -> Self {
        Logger {
            echo,
            lines: Vec::new(),
        }
    }

    pub fn line(&mut self, s: &str) {
        if self.echo {
            eprintln!("{s}");
        }
        self.lines.push(s.to_owned());
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

fn to_vec3(ps: &[[f64; 3]]) -> Vec<Vec3<f64>> {
    ps.iter().map(|&p| Vec3(p)).collect()
}

fn from_vec3(ps: &[Vec3<f64>]) -> Vec<[f64; 3]> {
    ps.iter().map(|p| p.0).collect()
}

fn file_sha256(path: &Option<PathBuf>) -> Result<Option<String>> {
    path.as_ref()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            Ok(hex::encode(Sha256::digest(&bytes)))
        })
        .transpose()
}

/// What a training checkpoint's hash covers: settings and input contents, not output paths.
#[derive(Serialize)]
struct HashedJob<'a> {
    workflow: Workflow,
    seed: u64,
    net: &'a NetConfig,
    schedule: &'a ScheduleConfig,
    elastic: &'a Option<ElasticConfig>,
    input_sha256: Option<String>,
    target_sha256: Option<String>,
}

fn job_hash(job: &JobFile) -> Result<String> {
    Ok(config_hash(&HashedJob {
        workflow: job.workflow,
        seed: job.seed,
        net: &job.net,
        schedule: &job.schedule,
        elastic: &job.elastic,
        input_sha256: file_sha256(&job.input)?,
        target_sha256: file_sha256(&job.target)?,
    }))
}

fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("step,total\n");
    for (i, v) in history.iter().enumerate() {
        out.push_str(&format!("{i},{v:e}\n"));
    }
    write_atomic(path, out.as_bytes())
}

fn write_deformed(path: &Path, net: &DeformationNet<f64>, g: &Geometry, n: &Normalization) -> Result<()> {
    let mapped = net.forward_points(&to_vec3(&g.points))?;
    save_geometry(path, &g.with_points(n.undo_all(&from_vec3(&mapped))))
}

fn required<'a>(field: &str, v: &'a Option<PathBuf>) -> Result<&'a Path> {
    v.as_deref()
        .ok_or_else(|| CliError::Config(format!("{field}: missing")))
}

/// Builds the handle constraints and free set from normalised geometry.
/// Each point belongs to the first handle whose selector contains it.
pub fn elastic_input(section: &ElasticConfig, g: &Geometry) -> Result<ElasticInput<f64>> {
    let mut claimed = vec![false; g.len()];
    let subset = |idx: &[usize]| PointSet {
        points: idx.iter().map(|&i| Vec3(g.points[i])).collect(),
        weights: g.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect()),
    };
    let mut handles = Vec::new();
    for (h_i, h) in section.handles.iter().enumerate() {
        let idx: Vec<usize> = (0..g.len())
            .filter(|&i| !claimed[i] && h.selector.contains(g.points[i]))
            .collect();
        if idx.is_empty() {
            return Err(CliError::Config(format!("elastic.handles[{h_i}].selector: selects no points")));
        }
        for &i in &idx {
            claimed[i] = true;
        }
        let points = subset(&idx);
        let c = match &h.motion {
            Motion::Static => HandleConstraint::fixed(points),
            Motion::Rigid(m) => {
                let pivot = m.pivot.map(Vec3).unwrap_or_else(|| {
                    let s = points.points.iter().fold(Vec3::zero(), |a, &p| a + p);
                    s * (1.0 / points.len() as f64)
                });
                HandleConstraint::moving(points, m.rotation(), Vec3(m.translation), pivot)
                    .map_err(|e| CliError::Config(format!("elastic.handles[{h_i}].motion: {e}")))?
            }
        };
        handles.push(c);
    }
    let free: Vec<usize> = (0..g.len()).filter(|&i| !claimed[i]).collect();
    Ok(ElasticInput {
        handles,
        free: subset(&free),
    })
}

pub fn run_elastic_job(job: &JobFile, log: &mut Logger) -> Result<Checkpoint> {
    job.validate()?;
    let section = job.elastic.as_ref().expect("validated");
    let config = job.elastic_config()?;
    let (g, norm) = load_normalized(required("input", &job.input)?)?;
    let input = elastic_input(section, &g)?;
    log.line(&format!(
        "job=elastic points={} handles={} free={} layers={} resolution={} seed={}",
        g.len(),
        input.handles.len(),
        input.free.len(),
        config.architecture.layers,
        config.architecture.resolution,
        config.seed
    ));
    let trained = run_elastic(&config, &input, &mut |l| log.line(l))?;
    let ck = Checkpoint::from_net(&trained.net)
        .with_adam(&trained.adam)
        .with_normalization(norm)
        .with_config_hash(job_hash(job)?);
    ck.save(required("output", &job.output)?)?;
    if let Some(p) = &job.deformed {
        write_deformed(p, &trained.net, &g, &norm)?;
    }
    if let Some(p) = &job.report {
        write_loss_history(p, &trained.report.loss_history)?;
    }
    if trained.report.injectivity.violations > 0 {
        return Err(CliError::Invariant(format!(
            "{} of {} injectivity checks failed",
            trained.report.injectivity.violations, trained.report.injectivity.checks
        )));
    }
    Ok(ck)
}

pub fn run_fit_job(job: &JobFile, log: &mut Logger) -> Result<Checkpoint> {
    job.validate()?;
    let config = job.fit_config()?;
    let input = required("input", &job.input)?;
    let (source, norm) = load_normalized(input)?;
    let tris = source
        .triangles
        .clone()
        .ok_or_else(|| CliError::Config(format!("input: {} has no faces", input.display())))?;
    let target_path = required("target", &job.target)?;
    let target = load_geometry(target_path)?;
    if target.len() != source.len() {
        return Err(CliError::Config(format!(
            "target: {} vertices, but the input has {}",
            target.len(),
            source.len()
        )));
    }
    let problem = FittingProblem::new(
        to_vec3(&source.points),
        &tris,
        to_vec3(&norm.apply_all(&target.points)),
    )
    .map_err(|e| CliError::Config(format!("input: {e}")))?;
    log.line(&format!(
        "job=fit vertices={} triangles={} layers={} resolution={} seed={}",
        source.len(),
        tris.len(),
        config.architecture.layers,
        config.architecture.resolution,
        config.seed
    ));
    let trained = run_fit(&config, &problem, &mut |l| log.line(l))?;
    let ck = Checkpoint::from_net(&trained.net)
        .with_adam(&trained.adam)
        .with_normalization(norm)
        .with_config_hash(job_hash(job)?);
    ck.save(required("output", &job.output)?)?;
    if let Some(p) = &job.deformed {
        write_deformed(p, &trained.net, &source, &norm)?;
    }
    if let Some(p) = &job.report {
        write_loss_history(p, &trained.report.loss_history)?;
    }
    if trained.report.injectivity.violations > 0 {
        return Err(CliError::Invariant(format!(
            "{} of {} injectivity checks failed",
            trained.report.injectivity.violations, trained.report.injectivity.checks
        )));
    }
    Ok(ck)
}

/// Maps geometry forward (or backward) through a checkpoint, in the input's own coordinates.
pub fn run_map_job(job: &JobFile, log: &mut Logger) -> Result<Geometry> {
    job.validate()?;
    let inverse = match job.workflow {
        Workflow::Apply => false,
        Workflow::Invert => true,
        w => return Err(CliError::Config(format!("workflow: {} is not a mapping workflow", w.name()))),
    };
    let ck = Checkpoint::load(required("checkpoint", &job.checkpoint)?)?;
    let net = ck.to_net()?;
    let norm = ck.normalization.unwrap_or_else(Normalization::identity);
    let g = load_geometry(required("input", &job.input)?)?;
    let pts = to_vec3(&norm.apply_all(&g.points));
    let mapped = if inverse { net.inverse_points(&pts)? } else { net.forward_points(&pts)? };
    let out = g.with_points(norm.undo_all(&from_vec3(&mapped)));
    save_geometry(required("output", &job.output)?, &out)?;
    log.line(&format!("job={} points={} layers={}", job.workflow.name(), g.len(), net.num_layers()));
    Ok(out)
}

/// Sample sizes and tolerances of `check`.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    pub round_trip_points: usize,
    pub jacobian_points: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 0,
            round_trip_points: 10_000,
            jacobian_points: 100,
        }
    }
}

pub const CHECK_ROUND_TRIP_TOL: f64 = 1e-8;
pub const CHECK_JACOBIAN_TOL: f64 = 1e-4;
const CHECK_FD_STEP: f64 = 1e-6;
/// Forward images closer than this count as a collision.
const CHECK_COLLISION_DELTA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub min_det: f64,
    pub round_trip_error: f64,
    pub jacobian_error: f64,
    pub collision: Option<(usize, usize)>,
}

impl CheckSummary {
    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if !(self.min_det > 0.0) {
            f.push(format!("min_det={:e}", self.min_det));
        }
        if !(self.round_trip_error <= CHECK_ROUND_TRIP_TOL) {
            f.push(format!("round_trip_error={:e}", self.round_trip_error));
        }
        if !(self.jacobian_error <= CHECK_JACOBIAN_TOL) {
            f.push(format!("jacobian_error={:e}", self.jacobian_error));
        }
        if let Some((i, j)) = self.collision {
            f.push(format!("collision={i},{j}"));
        }
        f
    }
}

fn random_box_point(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    Vec3([0; 3].map(|_| rng.gen_range(-0.7..0.7)))
}

/// Central-difference Jacobian, or `None` if the stencil crosses a triangle boundary in any layer.
pub fn fd_jacobian(net: &DeformationNet<f64>, p: Vec3<f64>, h: f64) -> Result<Option<Mat3<f64>>> {
    let sig = net.signature(p)?;
    let mut cols = [Vec3::zero(); 3];
    for (k, col) in cols.iter_mut().enumerate() {
        let mut e = Vec3::zero();
        e.0[k] = h;
        if net.signature(p + e)? != sig || net.signature(p - e)? != sig {
            return Ok(None);
        }
        *col = (net.forward_point(p + e)? - net.forward_point(p - e)?) * (0.5 / h);
    }
    Ok(Some(Mat3::from_cols(cols[0], cols[1], cols[2])))
}

/// Certificates, round trip, collision and Jacobian checks on a net.
pub fn check_net(net: &DeformationNet<f64>, opts: &CheckOptions, log: &mut Logger) -> Result<CheckSummary> {
    let certified = net.certify();
    let min_det = net.layer_min_dets().iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    log.line(&format!(
        "check=certificates status={} layers={} min_det={min_det:e}",
        if certified.is_ok() { "pass" } else { "fail" },
        net.num_layers()
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pts: Vec<Vec3<f64>> = (0..opts.round_trip_points).map(|_| random_box_point(&mut rng)).collect();
    let fwd = net.forward_points(&pts)?;
    let back = net.inverse_points(&fwd)?;
    let round_trip_error = pts.iter().zip(&back).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
    log.line(&format!(
        "check=round_trip status={} points={} max_error={round_trip_error:e} tolerance={CHECK_ROUND_TRIP_TOL:e}",
        if round_trip_error <= CHECK_ROUND_TRIP_TOL { "pass" } else { "fail" },
        pts.len()
    ));
    let collision = find_collision(&fwd, CHECK_COLLISION_DELTA);
    log.line(&format!(
        "check=collision status={} points={}",
        if collision.is_none() { "pass" } else { "fail" },
        fwd.len()
    ));
    let mut jacobian_error: f64 = 0.0;
    let mut checked = 0;
    let mut attempts = 0;
    while checked < opts.jacobian_points {
        attempts += 1;
        if attempts > 100 * opts.jacobian_points.max(1) {
            return Err(CliError::Numerical("no finite-difference stencil avoided triangle edges".into()));
        }
        let p = random_box_point(&mut rng);
        let Some(fd) = fd_jacobian(net, p, CHECK_FD_STEP)? else { continue };
        let j = net.jacobian_point(p)?;
        let rel = (j - fd).frobenius_sq().sqrt() / j.frobenius_sq().sqrt();
        jacobian_error = jacobian_error.max(rel);
        checked += 1;
    }
    log.line(&format!(
        "check=jacobian status={} points={checked} max_relative_error={jacobian_error:e} tolerance={CHECK_JACOBIAN_TOL:e}",
        if jacobian_error <= CHECK_JACOBIAN_TOL { "pass" } else { "fail" }
    ));
    let summary = CheckSummary {
        min_det: if certified.is_ok() { min_det } else { min_det.min(0.0) },
        round_trip_error,
        jacobian_error,
        collision,
    };
    Ok(summary)
}

pub fn run_check_job(job: &JobFile, opts: &CheckOptions, log: &mut Logger) -> Result<CheckSummary> {
    job.validate()?;
    let ck = Checkpoint::load(required("checkpoint", &job.checkpoint)?)?;
    let net = ck.to_net()?;
    let summary = check_net(&net, opts, log)?;
    let failures = summary.failures();
    if !failures.is_empty() {
        return Err(CliError::Invariant(failures.join(" ")));
    }
    log.line("check=all status=pass");
    Ok(summary)
}

/// Distortion statistics of a net over a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    pub energies: Vec<f64>,
    pub dets: Vec<f64>,
    /// `(lower, upper, count)` per bin, covering `[0, max energy]`.
    pub histogram: Vec<(f64, f64, usize)>,
}

impl DistortionReport {
    pub fn compute(net: &DeformationNet<f64>, points: &[Vec3<f64>], bins: usize) -> Result<Self> {
        let jac = net.jacobians(points)?;
        let energies: Vec<f64> = jac.iter().map(strain_energy_3d).collect();
        let dets = jac.iter().map(Mat3::det).collect();
        let bins = bins.max(1);
        let max = energies.iter().copied().fold(0.0, f64::max);
        let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &e in &energies {
            counts[((e / width) as usize).min(bins - 1)] += 1;
        }
        let histogram = counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as f64 * width, (i + 1) as f64 * width, c))
            .collect();
        Ok(DistortionReport {
            energies,
            dets,
            histogram,
        })
    }

    fn quantile(sorted: &[f64], q: f64) -> f64 {
        if sorted.is_empty() {
            return f64::NAN;
        }
        sorted[((sorted.len() - 1) as f64 * q).round() as usize]
    }

    pub fn summary(&self) -> Vec<(&'static str, f64)> {
        let mut sorted = self.energies.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        vec![
            ("points", n),
            ("mean_distortion", sorted.iter().sum::<f64>() / n),
            ("median_distortion", Self::quantile(&sorted, 0.5)),
            ("p90_distortion", Self::quantile(&sorted, 0.9)),
            ("p99_distortion", Self::quantile(&sorted, 0.99)),
            ("max_distortion", sorted.last().copied().unwrap_or(f64::NAN)),
            ("min_det", self.dets.iter().copied().fold(f64::INFINITY, f64::min)),
            ("max_det", self.dets.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ]
    }

    pub fn histogram_csv(&self) -> String {
        let total = self.energies.len().max(1) as f64;
        let mut out = String::from("bin,lower,upper,count,fraction\n");
        for (i, (lo, hi, c)) in self.histogram.iter().enumerate() {
            out.push_str(&format!("{i},{lo:e},{hi:e},{c},{:e}\n", *c as f64 / total));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("statistic,value\n");
        for (k, v) in self.summary() {
            out.push_str(&format!("{k},{v:e}\n"));
        }
        out
    }
}

/// Distortion histogram of a checkpoint over a geometry file.
pub fn run_report(
    checkpoint: &Path,
    input: &Path,
    histogram: &Path,
    summary: Option<&Path>,
    bins: usize,
    log: &mut Logger,
) -> Result<DistortionReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let net = ck.to_net()?;
    let norm = ck.normalization.unwrap_or_else(Normalization::identity);
    let g = load_geometry(input)?;
    let report = DistortionReport::compute(&net, &to_vec3(&norm.apply_all(&g.points)), bins)?;
    write_atomic(histogram, report.histogram_csv().as_bytes())?;
    if let Some(p) = summary {
        write_atomic(p, report.summary_csv().as_bytes())?;
    }
    let fields: Vec<String> = report.summary().iter().map(|(k, v)| format!("{k}={v:e}")).collect();
    log.line(&format!("report {}", fields.join(" ")));
    Ok(report)
}
