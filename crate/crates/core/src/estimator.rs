//! Quasi-Newton maximization of the composite likelihood and robust
//! (sandwich) standard errors.

use crate::cml::{Cml, PairingPolicy, FD_SCORE_STEP};
use crate::datamodel::{Dataset, N_INDICATORS};
use crate::error::{Error, Result};
use crate::gaussian::norm_inv_cdf;
use crate::modelspec::{Constraint, Model, ParamKind, ParameterVector};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Infinity-norm bound on the gradient of the per-respondent mean objective.
    pub gradient_tolerance: f64,
    pub relative_tolerance: f64,
    /// Successive small-change iterations required to stop.
    pub relative_patience: usize,
    pub covariance: bool,
    pub score_step: f64,
    pub hessian_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-5,
            relative_tolerance: 1e-9,
            relative_patience: 3,
            covariance: true,
            score_step: FD_SCORE_STEP,
            hessian_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Gradient,
    ObjectiveChange,
    LineSearch,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub pairing: PairingPolicy,
    pub n_respondents: usize,
    /// Estimates on the constrained scale, every parameter of the layout.
    pub params: ParameterVector,
    pub free_parameters: Vec<String>,
    pub unconstrained: Vec<f64>,
    /// Total composite log-likelihood at the optimum.
    pub objective: f64,
    /// Infinity norm of the gradient of the per-respondent mean objective.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Sandwich covariance of the free parameters on the constrained scale.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Sandwich standard errors on the constrained scale; tied parameters
    /// share their leader's error and fixed parameters are omitted.
    pub std_errors: BTreeMap<String, f64>,
    /// The Hessian was singular and a pseudo-inverse was used.
    pub hessian_singular: bool,
    pub wall_time_s: f64,
}

/// Sandwich covariance on both scales.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub unconstrained: DMatrix<f64>,
    pub constrained: DMatrix<f64>,
    /// Standard errors for every dense parameter (0 for fixed ones).
    pub std_errors: Vec<f64>,
    pub singular: bool,
    pub hessian: DMatrix<f64>,
    pub outer_scores: DMatrix<f64>,
}

/// Objective evaluated for the minimizer: minus the mean log-likelihood.
struct Objective<'a> {
    cml: &'a Cml<'a>,
    scale: f64,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self.cml.value_and_gradient_at(x) {
            Ok((v, g)) if v.is_finite() && g.iter().all(|g| g.is_finite()) => {
                Some((-v * self.scale, g.into_iter().map(|g| -g * self.scale).collect()))
            }
            _ => None,
        }
    }

    /// Inverse of the mean outer product of respondent scores, used as the
    /// initial inverse Hessian so that badly scaled coordinates start well
    /// conditioned.
    fn opg_inverse(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let s = self.cml.scores_analytic(x).ok()?;
        let p = x.len();
        let mut m = s.transpose() * &s * self.scale;
        let ridge = 1e-8 * m.trace() / p as f64;
        for i in 0..p {
            m[(i, i)] += ridge;
        }
        let inv = m.cholesky()?.inverse();
        inv.iter().all(|v| v.is_finite()).then_some(inv)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizer of the cubic interpolating `(a, fa, ga)` and `(b, fb, gb)`,
/// safeguarded to the interior of the bracket.
fn cubic_step(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let bisect = 0.5 * (a + b);
    if !(fa.is_finite() && fb.is_finite() && ga.is_finite() && gb.is_finite()) {
        return bisect;
    }
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if disc < 0.0 {
        return bisect;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        bisect
    }
}

struct Trial {
    step: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Strong-Wolfe line search with cubic interpolation.
fn line_search(obj: &Objective, x: &[f64], f0: f64, g0: &[f64], dir: &[f64], initial: f64) -> Option<Trial> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let dg0 = dot(g0, dir);
    if !(dg0 < 0.0) {
        return None;
    }
    let at = |step: f64| -> (Vec<f64>, f64, Vec<f64>, f64) {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        match obj.eval(&xt) {
            Some((f, g)) => {
                let dg = dot(&g, dir);
                (xt, f, g, dg)
            }
            None => (xt, f64::INFINITY, Vec::new(), f64::NAN),
        }
    };

    let mut prev = (0.0, f0, dg0);
    let mut step = initial;
    for i in 0..40 {
        let (xt, f, g, dg) = at(step);
        if !f.is_finite() || f > f0 + C1 * step * dg0 || (i > 0 && f >= prev.1) {
            return zoom(&at, f0, dg0, prev, (step, f, dg));
        }
        if dg.abs() <= -C2 * dg0 {
            return Some(Trial { step, x: xt, f, g });
        }
        if dg >= 0.0 {
            return zoom(&at, f0, dg0, (step, f, dg), prev);
        }
        prev = (step, f, dg);
        step *= 2.0;
    }
    None
}

type Probe<'a> = dyn Fn(f64) -> (Vec<f64>, f64, Vec<f64>, f64) + 'a;

fn zoom(at: &Probe, f0: f64, dg0: f64, mut lo: (f64, f64, f64), mut hi: (f64, f64, f64)) -> Option<Trial> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let mut best: Option<Trial> = None;
    for _ in 0..60 {
        let step = cubic_step(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        let (xt, f, g, dg) = at(step);
        if f.is_finite() && f < f0 && best.as_ref().is_none_or(|b| f < b.f) {
            best = Some(Trial { step, x: xt.clone(), f, g: g.clone() });
        }
        if !f.is_finite() || f > f0 + C1 * step * dg0 || f >= lo.1 {
            hi = (step, f, dg);
        } else {
            if dg.abs() <= -C2 * dg0 {
                return Some(Trial { step, x: xt, f, g });
            }
            if dg * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (step, f, dg);
        }
        if (hi.0 - lo.0).abs() <= 1e-14 * lo.0.abs().max(1e-10) {
            break;
        }
    }
    // Accept a sufficient-decrease point even without the curvature condition.
    best.filter(|b| b.f <= f0 + C1 * b.step * dg0)
}

struct Minimum {
    x: Vec<f64>,
    g: Vec<f64>,
    iterations: usize,
    reason: StopReason,
}

fn bfgs(obj: &Objective, x0: Vec<f64>, opts: &FitOptions) -> Result<Minimum> {
    let (mut f, mut g) = obj
        .eval(&x0)
        .ok_or_else(|| Error::Parameters("objective is not finite at the start values".into()))?;
    let n = x0.len();
    let mut x = x0;
    let initial_metric = |x: &[f64]| match obj.opg_inverse(x) {
        Some(h) => (h, true),
        None => (DMatrix::<f64>::identity(n, n), false),
    };
    let (mut h, mut scaled) = initial_metric(&x);
    let mut small_changes = 0;
    let mut reset = false;
    for it in 0..opts.max_iterations {
        if inf_norm(&g) <= opts.gradient_tolerance {
            return Ok(Minimum { x, g, iterations: it, reason: StopReason::Gradient });
        }
        let gv = DVector::from_column_slice(&g);
        let dir: Vec<f64> = (-(&h * &gv)).iter().copied().collect();
        let initial = if scaled { 1.0 } else { 1.0 / dot(&g, &g).sqrt().max(1.0) };
        let trial = match line_search(obj, &x, f, &g, &dir, initial) {
            Some(t) => t,
            None if !reset => {
                log::debug!("line search failed at iteration {it}; restarting from the score outer product");
                (h, scaled) = initial_metric(&x);
                reset = true;
                continue;
            }
            None => return Ok(Minimum { x, g, iterations: it, reason: StopReason::LineSearch }),
        };
        reset = false;
        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let sv = DVector::from_vec(s);
            let yv = DVector::from_vec(y);
            if !scaled {
                h = DMatrix::identity(n, n) * (sy / yv.dot(&yv));
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
            h -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            h += (&sv * sv.transpose()) * (rho * rho * yhy + rho);
        }
        let change = (f - trial.f).abs() / f.abs().max(1.0);
        x = trial.x;
        f = trial.f;
        g = trial.g;
        log::debug!("iteration {}: objective {f:.10} |g| {:.3e}", it + 1, inf_norm(&g));
        if change <= opts.relative_tolerance {
            small_changes += 1;
            if small_changes >= opts.relative_patience {
                let reason = if inf_norm(&g) <= opts.gradient_tolerance {
                    StopReason::Gradient
                } else {
                    StopReason::ObjectiveChange
                };
                return Ok(Minimum { x, g, iterations: it + 1, reason });
            }
        } else {
            small_changes = 0;
        }
    }
    let reason = if inf_norm(&g) <= opts.gradient_tolerance {
        StopReason::Gradient
    } else {
        StopReason::IterationLimit
    };
    Ok(Minimum { x, g, iterations: opts.max_iterations, reason })
}

/// Maximizes the composite log-likelihood from `start`.
pub fn maximize_cml(
    model: &Model,
    dataset: &Dataset,
    start: &ParameterVector,
    policy: PairingPolicy,
    options: &FitOptions,
) -> Result<FitResult> {
    let clock = Instant::now();
    let theta0 = model.dense_constrained(start)?;
    let x0 = model.pack(&theta0)?;
    let cml = Cml::new(model, dataset, policy)?;
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("dataset has no respondents".into()));
    }
    // Pinpoint an offending respondent before optimizing.
    cml.loglik(&theta0)?;
    let obj = Objective {
        cml: &cml,
        scale: 1.0 / dataset.len() as f64,
    };
    let mut min = bfgs(&obj, x0, options)?;
    if min.reason != StopReason::Gradient {
        min = newton_polish(&obj, min, options)?;
    }
    let theta = model.unpack(&min.x)?;
    let gradient_norm = inf_norm(&min.g);
    let converged = gradient_norm <= options.gradient_tolerance;
    let mut fit = FitResult {
        model: model.name().to_string(),
        pairing: policy,
        n_respondents: dataset.len(),
        params: model.named(&theta),
        free_parameters: model.layout().free_names(),
        unconstrained: min.x.clone(),
        objective: cml.loglik(&theta)?,
        gradient_norm,
        iterations: min.iterations,
        converged,
        stop_reason: min.reason,
        covariance: None,
        std_errors: BTreeMap::new(),
        hessian_singular: false,
        wall_time_s: 0.0,
    };
    log::info!(
        "{}: objective {:.6} after {} iterations ({:?}, |g| {:.2e})",
        fit.model,
        fit.objective,
        fit.iterations,
        fit.stop_reason,
        gradient_norm
    );
    if options.covariance {
        let sw = sandwich_at(&cml, &min.x, options)?;
        attach_sandwich(model, &mut fit, &sw);
    }
    fit.wall_time_s = clock.elapsed().as_secs_f64();
    Ok(fit)
}

fn attach_sandwich(model: &Model, fit: &mut FitResult, sw: &Sandwich) {
    let layout = model.layout();
    fit.covariance = Some(
        (0..sw.constrained.nrows())
            .map(|i| sw.constrained.row(i).iter().copied().collect())
            .collect(),
    );
    fit.std_errors = layout
        .params()
        .iter()
        .enumerate()
        .filter(|(i, _)| !layout.is_fixed(*i))
        .map(|(i, p)| (p.name.clone(), sw.std_errors[i]))
        .collect();
    fit.hessian_singular = sw.singular;
}

/// Jacobian of the dense natural parameters with respect to the free coordinates.
fn jacobian(model: &Model, x: &[f64], theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let mut jac = DMatrix::<f64>::zeros(n, x.len());
    let mut e = vec![0.0; n];
    for i in 0..n {
        e[i] = 1.0;
        let row = model.layout().chain_gradient(x, theta, &e);
        for (k, v) in row.into_iter().enumerate() {
            jac[(i, k)] = v;
        }
        e[i] = 0.0;
    }
    jac
}

/// Symmetrized central difference of the analytic log-likelihood gradient.
fn fd_hessian(cml: &Cml, x: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let p = x.len();
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for k in 0..p {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += step;
        xm[k] -= step;
        let gp = cml.value_and_gradient_at(&xp)?.1;
        let gm = cml.value_and_gradient_at(&xm)?.1;
        for j in 0..p {
            hess[(j, k)] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Newton iterations on the finite-difference Hessian, used once the
/// quasi-Newton phase stalls on a badly scaled ridge. The Hessian is reused
/// while the gradient keeps shrinking quickly.
fn newton_polish(obj: &Objective, start: Minimum, opts: &FitOptions) -> Result<Minimum> {
    const MAX_STEPS: usize = 20;
    const MAX_HESSIANS: usize = 4;
    let Minimum { mut x, mut g, mut iterations, reason } = start;
    let Some((mut f, _)) = obj.eval(&x) else {
        return Ok(Minimum { x, g, iterations, reason });
    };
    let n = x.len();
    let mut hessians = 0;
    let mut metric: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> = None;
    for _ in 0..MAX_STEPS {
        if inf_norm(&g) <= opts.gradient_tolerance {
            return Ok(Minimum { x, g, iterations, reason: StopReason::Gradient });
        }
        if metric.is_none() {
            if hessians == MAX_HESSIANS {
                break;
            }
            hessians += 1;
            let a = fd_hessian(obj.cml, &x, opts.hessian_step)? * (-obj.scale);
            // Levenberg damping until the matrix is positive definite.
            let diag = a.diagonal().abs().max().max(1e-12);
            let mut mu = 0.0;
            metric = loop {
                let mut m = a.clone();
                for i in 0..n {
                    m[(i, i)] += mu;
                }
                if let Some(ch) = m.cholesky() {
                    break Some(ch);
                }
                mu = if mu == 0.0 { 1e-10 * diag } else { mu * 10.0 };
                if mu > diag {
                    break None;
                }
            };
            if metric.is_none() {
                break;
            }
        }
        let ch = metric.as_ref().expect("metric set above");
        let dir = ch.solve(&DVector::from_column_slice(&g));
        let mut step = 1.0;
        let dg = -dot(&g, dir.as_slice());
        let mut accepted = None;
        while step > 1e-4 {
            let xt: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a - step * d).collect();
            if let Some((ft, gt)) = obj.eval(&xt) {
                if ft <= f + 1e-4 * step * dg.min(0.0) + 1e-12 * f.abs() {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xt, ft, gt)) = accepted else {
            if hessians == MAX_HESSIANS {
                break;
            }
            metric = None;
            continue;
        };
        let shrink = inf_norm(&gt) / inf_norm(&g);
        iterations += 1;
        log::debug!("newton step {iterations}: objective {ft:.10} |g| {:.3e}", inf_norm(&gt));
        (x, f, g) = (xt, ft, gt);
        if shrink > 0.25 {
            metric = None;
        }
    }
    let reason = if inf_norm(&g) <= opts.gradient_tolerance { StopReason::Gradient } else { reason };
    Ok(Minimum { x, g, iterations, reason })
}

fn sandwich_at(cml: &Cml, x: &[f64], opts: &FitOptions) -> Result<Sandwich> {
    let model = cml.model();
    let p = x.len();
    let hess = fd_hessian(cml, x, opts.hessian_step)?;
    let scores = cml.scores_fd(x, opts.score_step)?;
    let outer = scores.transpose() * &scores;

    // Information matrix: minus the Hessian of the log-likelihood.
    let info = -&hess;
    let (inv, singular) = match info.clone().cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            let cond_ok = inv.iter().all(|v| v.is_finite());
            (inv, !cond_ok)
        }
        None => (pseudo_inverse(&info), true),
    };
    if singular {
        log::warn!("Hessian is singular or indefinite; using a pseudo-inverse");
    }
    let v = &inv * &outer * &inv;
    let v = (&v + v.transpose()) * 0.5;
    let theta = model.unpack(x)?;
    let jac = jacobian(model, x, &theta);
    let full = &jac * &v * jac.transpose();
    let std_errors = (0..theta.len()).map(|i| full[(i, i)].max(0.0).sqrt()).collect();
    let owners: Vec<usize> = (0..p).map(|k| model.layout().free_owner(k)).collect();
    let constrained = DMatrix::from_fn(p, p, |a, b| full[(owners[a], owners[b])]);
    Ok(Sandwich {
        unconstrained: v,
        constrained,
        std_errors,
        singular,
        hessian: hess,
        outer_scores: outer,
    })
}

fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    svd.pseudo_inverse(tol).expect("SVD with both factors computed")
}

/// Godambe sandwich `H^-1 J H^-1` at a fit's optimum.
pub fn sandwich_covariance(
    model: &Model,
    fit: &FitResult,
    dataset: &Dataset,
    options: &FitOptions,
) -> Result<Sandwich> {
    let cml = Cml::new(model, dataset, fit.pairing)?;
    sandwich_at(&cml, &fit.unconstrained, options)
}

/// Start values that use no outcome information except indicator marginals.
///
/// Utility coefficients, structural coefficients and correlations start at
/// zero and curvatures at one. Dedicated loadings start at -0.5 because zero
/// is a saddle of the likelihood; thresholds come from the empirical
/// cumulative category frequencies given the implied propensity variance.
pub fn neutral_start(model: &Model, dataset: &Dataset) -> Result<ParameterVector> {
    let layout = model.layout();
    let mut theta = vec![0.0; layout.len()];
    for (i, p) in layout.params().iter().enumerate() {
        if p.kind == ParamKind::Curvature {
            theta[i] = 1.0;
        }
    }
    let mut counts = [[0.5f64; 5]; N_INDICATORS];
    for r in &dataset.respondents {
        for (k, &v) in r.indicators.iter().enumerate() {
            counts[k][v as usize - 1] += 1.0;
        }
    }
    for ind in &model.indicators {
        let var = if ind.loadings.len() == 1 {
            theta[ind.loadings[0].1] = -0.5;
            1.25
        } else {
            1.0
        };
        let sd: f64 = f64::sqrt(var);
        let c = &counts[ind.slot];
        let total: f64 = c.iter().sum();
        let mut cum = 0.0;
        let z: Vec<f64> = c[..4]
            .iter()
            .map(|n| {
                cum += n;
                norm_inv_cdf(cum / total)
            })
            .collect();
        theta[ind.intercept] = -sd * z[0];
        let mut last = 0.0;
        for (j, &t) in ind.thresholds.iter().enumerate() {
            let psi = (sd * (z[j + 1] - z[0])).max(last + 1e-3);
            theta[t] = psi;
            last = psi;
        }
    }
    layout.apply_constraints(&mut theta);
    layout.validate(&theta)?;
    Ok(model.named(&theta))
}

/// Neutral start refined by a first fit with every free curvature held at one.
///
/// With linear attribute terms the curvature ridge (`alpha -> 0` makes the
/// power term collinear with the constant) is out of reach, so the second
/// stage begins next to the interior optimum.
pub fn staged_start(
    model: &Model,
    dataset: &Dataset,
    policy: PairingPolicy,
    options: &FitOptions,
) -> Result<ParameterVector> {
    let start = neutral_start(model, dataset)?;
    let layout = model.layout();
    let fixes: Vec<Constraint> = layout
        .params()
        .iter()
        .enumerate()
        .filter(|(i, p)| p.kind == ParamKind::Curvature && layout.is_free(*i))
        .map(|(_, p)| Constraint::Fix { param: p.name.clone(), value: 1.0 })
        .collect();
    if fixes.is_empty() {
        return Ok(start);
    }
    let mut spec = model.spec().clone();
    spec.name = format!("{}-linear", spec.name);
    spec.constraints.extend(fixes);
    let linear = Model::compile(spec)?;
    let opts = FitOptions { covariance: false, ..options.clone() };
    let fit = maximize_cml(&linear, dataset, &start, policy, &opts)?;
    log::info!("linear stage: objective {:.6}", fit.objective);
    Ok(fit.params)
}

/// Fits a sequence of nested models, seeding each stage from the previous fit.
pub fn fit_sequence(
    models: &[&Model],
    dataset: &Dataset,
    policy: PairingPolicy,
    options: &FitOptions,
) -> Result<Vec<FitResult>> {
    let mut fits: Vec<FitResult> = Vec::with_capacity(models.len());
    for (k, model) in models.iter().enumerate() {
        let start = match fits.last() {
            None => neutral_start(model, dataset)?,
            Some(prev) => {
                if !model.relaxes(models[k - 1]) {
                    return Err(Error::ModelSpec(format!(
                        "`{}` does not relax `{}`",
                        model.name(),
                        models[k - 1].name()
                    )));
                }
                prev.params.clone()
            }
        };
        fits.push(maximize_cml(model, dataset, &start, policy, options)?);
    }
    Ok(fits)
}

/// Fits the shipped Model 1, 2 and 3 presets in order.
pub fn fit_ladder(dataset: &Dataset, policy: PairingPolicy, options: &FitOptions) -> Result<Vec<FitResult>> {
    let models = ["model1", "model2", "model3"]
        .iter()
        .map(|m| Model::preset(m))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Model> = models.iter().collect();
    fit_sequence(&refs, dataset, policy, options)
}
