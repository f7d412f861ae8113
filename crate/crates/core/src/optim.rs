//! Adam and the two optimisation workflows: handle-driven elastic
//! deformation and source-to-target fitting.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deform::{DeformationNet, PointSet};
use crate::energy::{handle_residual, FittingProblem, HandleConstraint, HandleKind, LossWeights};
use crate::error::{Error, Result};
use crate::grad::{grad_total, LossTerm, ParamGradient};
use crate::linalg::Vec3;
use crate::mesh2d::Mesh2D;
use crate::prism::{triplane_frames, Frame};
use crate::scalar::Real;
use crate::tutte::TutteLayerParams;

/// Linear decay from `initial` to `final_lr` over `decay_steps`, then held.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule<T> {
    pub initial: T,
    pub final_lr: T,
    pub decay_steps: usize,
}

impl<T: Real> LrSchedule<T> {
    /// 0.02 → 0.0002 over 4000 steps.
    pub fn elastic() -> Self {
        LrSchedule {
            initial: T::lit(0.02),
            final_lr: T::lit(0.0002),
            decay_steps: 4000,
        }
    }

    /// 0.02 → 0.002 over 5000 steps.
    pub fn fitting() -> Self {
        LrSchedule {
            initial: T::lit(0.02),
            final_lr: T::lit(0.002),
            decay_steps: 5000,
        }
    }

    pub fn lr(&self, step: usize) -> T {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.final_lr;
        }
        let f = T::from_count(step) / T::from_count(self.decay_steps);
        self.initial + (self.final_lr - self.initial) * f
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial > T::zero()) || !(self.final_lr > T::zero()) || !self.initial.is_finite() {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Adam moments and step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<TutteLayerParams<T>>,
    pub v: Vec<TutteLayerParams<T>>,
    pub step: usize,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &[TutteLayerParams<T>]) -> Self {
        let zeros = ParamGradient::zeros_like(params).layers;
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    fn shape_matches(&self, params: &[TutteLayerParams<T>]) -> bool {
        self.m.len() == params.len()
            && self.v.len() == params.len()
            && params.iter().zip(&self.m).zip(&self.v).all(|((p, m), v)| {
                p.edge_weights.len() == m.edge_weights.len()
                    && p.boundary_increments.len() == m.boundary_increments.len()
                    && p.edge_weights.len() == v.edge_weights.len()
                    && p.boundary_increments.len() == v.boundary_increments.len()
            })
    }
}

/// One bias-corrected Adam update with learning rate `lr`.
pub fn adam_step<T: Real>(
    state: &mut AdamState<T>,
    params: &mut [TutteLayerParams<T>],
    grad: &ParamGradient<T>,
    lr: T,
) -> Result<()> {
    if !state.shape_matches(params) || grad.layers.len() != params.len() {
        return Err(Error::InvalidArgument("optimizer state does not match the parameters".into()));
    }
    grad.check_finite()?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for l in 0..params.len() {
        for k in 0..params[l].len() {
            let g = grad.get(l, k);
            let m = state.m[l].get_mut(k);
            *m = b1 * *m + (T::one() - b1) * g;
            let mh = *m / c1;
            let v = state.v[l].get_mut(k);
            *v = b2 * *v + (T::one() - b2) * g * g;
            let vh = *v / c2;
            *params[l].get_mut(k) -= lr * mh / (vh.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Relative-change early stopping over a fixed window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyStop<T> {
    pub tolerance: T,
    pub window: usize,
}

impl<T: Real> Default for EarlyStop<T> {
    fn default() -> Self {
        EarlyStop {
            tolerance: T::lit(1e-7),
            window: 100,
        }
    }
}

impl<T: Real> EarlyStop<T> {
    fn converged(&self, history: &[T]) -> bool {
        let n = history.len();
        if self.window == 0 || n <= self.window {
            return false;
        }
        let (old, new) = (history[n - 1 - self.window], history[n - 1]);
        (old - new).abs() <= self.tolerance * old.abs().max(T::min_positive_value())
    }
}

/// Net shape shared by both workflows.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture<T> {
    pub layers: usize,
    pub resolution: usize,
    /// `None` selects triplane frames.
    pub frames: Option<Vec<Frame<T>>>,
}

impl<T: Real> Architecture<T> {
    pub fn frames(&self) -> Vec<Frame<T>> {
        self.frames.clone().unwrap_or_else(|| triplane_frames(self.layers))
    }

    /// Identity-initialised net (all raw parameters zero).
    pub fn identity_net(&self) -> Result<DeformationNet<T>> {
        if let Some(f) = &self.frames {
            if f.len() != self.layers {
                return Err(Error::InvalidArgument(format!(
                    "{} frames for {} layers",
                    f.len(),
                    self.layers
                )));
            }
        }
        let mesh = Arc::new(Mesh2D::build(self.resolution)?);
        DeformationNet::identity(mesh, self.frames())
    }
}

/// Elastic workflow settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticJobConfig<T> {
    pub architecture: Architecture<T>,
    pub moving_budget: usize,
    pub static_budget: usize,
    pub free_budget: usize,
    pub weights: LossWeights<T>,
    pub lr: LrSchedule<T>,
    pub max_steps: usize,
    pub early_stop: Option<EarlyStop<T>>,
    /// Steps between determinant re-checks (the final net is always checked).
    pub check_every: usize,
    pub log_every: usize,
    pub seed: u64,
}

impl<T: Real> Default for ElasticJobConfig<T> {
    fn default() -> Self {
        ElasticJobConfig {
            architecture: Architecture {
                layers: 24,
                resolution: 25,
                frames: None,
            },
            moving_budget: 10_000,
            static_budget: 15_000,
            free_budget: 10_000,
            weights: LossWeights::default(),
            lr: LrSchedule::elastic(),
            max_steps: 4000,
            early_stop: Some(EarlyStop::default()),
            check_every: 100,
            log_every: 100,
            seed: 0,
        }
    }
}

/// Fitting workflow settings.
#[derive(Clone, Debug, PartialEq)]
pub struct FitJobConfig<T> {
    pub architecture: Architecture<T>,
    pub lr: LrSchedule<T>,
    pub max_steps: usize,
    pub early_stop: Option<EarlyStop<T>>,
    pub check_every: usize,
    pub log_every: usize,
    pub seed: u64,
}

impl<T: Real> Default for FitJobConfig<T> {
    fn default() -> Self {
        FitJobConfig {
            architecture: Architecture {
                layers: 24,
                resolution: 11,
                frames: None,
            },
            lr: LrSchedule::fitting(),
            max_steps: 5000,
            early_stop: Some(EarlyStop::default()),
            check_every: 100,
            log_every: 100,
            seed: 0,
        }
    }
}

/// Point pools for the elastic workflow.
#[derive(Clone, Debug)]
pub struct ElasticInput<T> {
    /// Handle regions with their prescribed motions; static ones are held fixed.
    pub handles: Vec<HandleConstraint<T>>,
    /// Remaining points, with density weights if known.
    pub free: PointSet<T>,
}

/// Injectivity bookkeeping of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InjectivityLog {
    pub checks: usize,
    pub violations: usize,
}

/// Outcome of [`run_elastic`].
#[derive(Clone, Debug)]
pub struct ElasticReport<T> {
    pub steps: usize,
    pub final_total: T,
    pub final_elastic: T,
    pub final_handle: T,
    pub final_regularization: T,
    /// Root mean squared handle residual over all handle samples.
    pub handle_rms: T,
    pub max_distortion: T,
    /// Per-sample strain energies of the final net, in sample order.
    pub distortions: Vec<T>,
    pub injectivity: InjectivityLog,
    pub min_det: T,
    pub loss_history: Vec<T>,
}

/// Outcome of [`run_fit`].
#[derive(Clone, Debug)]
pub struct FitReport<T> {
    pub steps: usize,
    pub vertex: T,
    pub gradient: T,
    pub total: T,
    pub injectivity: InjectivityLog,
    pub min_det: T,
    pub loss_history: Vec<T>,
}

/// A trained net with its optimiser state.
#[derive(Clone, Debug)]
pub struct Trained<T, R> {
    pub net: DeformationNet<T>,
    pub adam: AdamState<T>,
    pub report: R,
}

fn subsample<T: Real>(ps: &PointSet<T>, budget: usize, rng: &mut ChaCha8Rng) -> PointSet<T> {
    if ps.len() <= budget {
        return ps.clone();
    }
    let mut idx = sample(rng, ps.len(), budget).into_vec();
    idx.sort_unstable();
    PointSet {
        points: idx.iter().map(|&i| ps.points[i]).collect(),
        weights: ps.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect()),
    }
}

/// Splits `budget` over `n` pools as evenly as possible.
fn share(budget: usize, n: usize, i: usize) -> usize {
    budget / n + usize::from(i < budget % n)
}

/// Fixed sample sets for a run: subsampled handles and the union used by the elastic term.
pub fn draw_elastic_samples<T: Real>(
    config: &ElasticJobConfig<T>,
    input: &ElasticInput<T>,
) -> (Vec<HandleConstraint<T>>, PointSet<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_moving = input.handles.iter().filter(|h| h.kind == HandleKind::Moving).count();
    let n_static = input.handles.len() - n_moving;
    let (mut im, mut is) = (0, 0);
    let handles: Vec<HandleConstraint<T>> = input
        .handles
        .iter()
        .map(|h| {
            let budget = match h.kind {
                HandleKind::Moving => {
                    im += 1;
                    share(config.moving_budget, n_moving, im - 1)
                }
                HandleKind::Static => {
                    is += 1;
                    share(config.static_budget, n_static, is - 1)
                }
            };
            HandleConstraint {
                points: subsample(&h.points, budget, &mut rng),
                ..h.clone()
            }
        })
        .collect();
    let free = subsample(&input.free, config.free_budget, &mut rng);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for set in handles.iter().map(|h| &h.points).chain(std::iter::once(&free)) {
        for i in 0..set.len() {
            points.push(set.points[i]);
            weights.push(set.weight(i));
        }
    }
    (handles, PointSet { points, weights: Some(weights) })
}

fn validate_points<T: Real>(net: &DeformationNet<T>, ps: &[Vec3<T>]) -> Result<()> {
    net.forward_points(ps).map(|_| ())
}

fn fmt_e<T: Real>(x: T) -> String {
    format!("{:.6e}", x.as_f64())
}

/// Optimises the elastic objective; `log` receives key=value progress lines.
pub fn run_elastic<T: Real>(
    config: &ElasticJobConfig<T>,
    input: &ElasticInput<T>,
    log: &mut dyn FnMut(&str),
) -> Result<Trained<T, ElasticReport<T>>> {
    config.weights.validate()?;
    config.lr.validate()?;
    let mut net = config.architecture.identity_net()?;
    let (handles, samples) = draw_elastic_samples(config, input);
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to optimise over".into()));
    }
    validate_points(&net, &samples.points)?;
    let mut params = net.params().to_vec();
    let mut adam = AdamState::new(&params);
    let mut history = Vec::new();
    let mut inj = InjectivityLog::default();
    let mut step = 0;
    while step < config.max_steps {
        let w_elastic = config.weights.elastic_weight(step);
        let terms = [
            LossTerm::Elastic {
                samples: &samples,
                weights: &config.weights,
                scale: w_elastic,
            },
            LossTerm::Handle {
                constraints: &handles,
                scale: config.weights.handle,
            },
            LossTerm::Regularization {
                scale: config.weights.regularization,
            },
        ];
        let (ev, grad) = grad_total(&net, &terms).map_err(|e| annotate_step(e, step))?;
        history.push(ev.total);
        let lr = config.lr.lr(step);
        if config.log_every > 0 && step % config.log_every == 0 {
            log(&format!(
                "step={step} total={} elastic={} handle={} reg={} w_elastic={} lr={} max_distortion={}",
                fmt_e(ev.total),
                fmt_e(ev.terms[0]),
                fmt_e(ev.terms[1]),
                fmt_e(ev.terms[2]),
                fmt_e(w_elastic),
                fmt_e(lr),
                fmt_e(ev.max_distortion)
            ));
        }
        if config.early_stop.is_some_and(|e| e.converged(&history)) {
            break;
        }
        adam_step(&mut adam, &mut params, &grad, lr).map_err(|e| annotate_step(e, step))?;
        net = net.with_params(params.clone()).map_err(|e| annotate_step(e, step))?;
        step += 1;
        if config.check_every > 0 && step % config.check_every == 0 {
            inj.checks += 1;
            if net.certify().is_err() {
                inj.violations += 1;
            }
        }
    }
    inj.checks += 1;
    if net.certify().is_err() {
        inj.violations += 1;
    }
    let final_bd = crate::energy::total_loss(&net, &handles, &samples, &config.weights, step)?;
    let el = crate::energy::elastic_loss(&net, &samples, &config.weights)?;
    let mut sq = T::zero();
    let mut count = 0;
    for h in &handles {
        sq += handle_residual(&net, h)? * T::from_count(h.points.len());
        count += h.points.len();
    }
    let handle_rms = if count == 0 { T::zero() } else { (sq / T::from_count(count)).sqrt() };
    let min_det = net.layer_min_dets().iter().map(|d| d.1).fold(T::infinity(), T::min);
    log(&format!(
        "done steps={step} total={} handle_rms={} max_distortion={} min_det={} injectivity_violations={}",
        fmt_e(final_bd.total),
        fmt_e(handle_rms),
        fmt_e(final_bd.max_distortion),
        fmt_e(min_det),
        inj.violations
    ));
    Ok(Trained {
        net,
        adam,
        report: ElasticReport {
            steps: step,
            final_total: final_bd.total,
            final_elastic: final_bd.elastic,
            final_handle: final_bd.handle,
            final_regularization: final_bd.regularization,
            handle_rms,
            max_distortion: el.max_distortion,
            distortions: el.energies,
            injectivity: inj,
            min_det,
            loss_history: history,
        },
    })
}

/// Optimises the fitting loss from an identity start.
pub fn run_fit<T: Real>(
    config: &FitJobConfig<T>,
    problem: &FittingProblem<T>,
    log: &mut dyn FnMut(&str),
) -> Result<Trained<T, FitReport<T>>> {
    let net = config.architecture.identity_net()?;
    fit_from(config, problem, net, log)
}

/// Optimises the fitting loss from the given net.
pub fn fit_from<T: Real>(
    config: &FitJobConfig<T>,
    problem: &FittingProblem<T>,
    mut net: DeformationNet<T>,
    log: &mut dyn FnMut(&str),
) -> Result<Trained<T, FitReport<T>>> {
    config.lr.validate()?;
    validate_points(&net, &problem.source)?;
    let mut params = net.params().to_vec();
    let mut adam = AdamState::new(&params);
    let mut history = Vec::new();
    let mut inj = InjectivityLog::default();
    let mut step = 0;
    let thousand = T::lit(1e3);
    while step < config.max_steps {
        let (ev, grad) = grad_total(&net, &[LossTerm::Fitting { problem, scale: T::one() }])
            .map_err(|e| annotate_step(e, step))?;
        history.push(ev.total);
        let lr = config.lr.lr(step);
        if config.log_every > 0 && step % config.log_every == 0 {
            let (v, g) = ev.fitting.unwrap_or((T::zero(), T::zero()));
            log(&format!(
                "step={step} total={} vertex_x1e3={} gradient_x1e3={} lr={}",
                fmt_e(ev.total),
                fmt_e(v * thousand),
                fmt_e(g * thousand),
                fmt_e(lr)
            ));
        }
        if config.early_stop.is_some_and(|e| e.converged(&history)) {
            break;
        }
        adam_step(&mut adam, &mut params, &grad, lr).map_err(|e| annotate_step(e, step))?;
        net = net.with_params(params.clone()).map_err(|e| annotate_step(e, step))?;
        step += 1;
        if config.check_every > 0 && step % config.check_every == 0 {
            inj.checks += 1;
            if net.certify().is_err() {
                inj.violations += 1;
            }
        }
    }
    inj.checks += 1;
    if net.certify().is_err() {
        inj.violations += 1;
    }
    let fe = crate::energy::fitting_loss(&net, problem)?;
    let min_det = net.layer_min_dets().iter().map(|d| d.1).fold(T::infinity(), T::min);
    log(&format!(
        "done steps={step} vertex_x1e3={} gradient_x1e3={} min_det={} injectivity_violations={}",
        fmt_e(fe.vertex * thousand),
        fmt_e(fe.gradient * thousand),
        fmt_e(min_det),
        inj.violations
    ));
    Ok(Trained {
        net,
        adam,
        report: FitReport {
            steps: step,
            vertex: fe.vertex,
            gradient: fe.gradient,
            total: fe.total,
            injectivity: inj,
            min_det,
            loss_history: history,
        },
    })
}

fn annotate_step(e: Error, step: usize) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("step {step}: {msg}")),
        other => other,
    }
}
