//! Pairwise (composite marginal) likelihood of the joint choice and indicator model.
//!
//! Conditional on demographics, each respondent's stacked vector of utility
//! differences and indicator propensities is Gaussian,
//! `Y = a + B gamma + e` with `gamma ~ N(0, C)` and `e ~ N(0, I)`, so every
//! bivariate marginal is a rectangle probability.

use crate::datamodel::{Alternative, Dataset, Respondent};
use crate::error::{Error, Result};
use crate::gaussian::{rect_prob, rect_prob_grad, rect_prob_value, Rect2, PROB_FLOOR};
use crate::modelspec::{Model, PreparedRespondent, N_LATENT};
use nalgebra::{DMatrix, DVector, Matrix3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    /// Choice x indicator and indicator x indicator pairs.
    #[default]
    Standard,
    /// Adds choice x choice pairs within a respondent.
    Extended,
}

impl FromStr for PairingPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "extended" => Ok(Self::Extended),
            other => Err(Error::UnknownLevel {
                field: "pairing",
                level: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for PairingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Standard => "standard",
            Self::Extended => "extended",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    ChoiceIndicator,
    IndicatorIndicator,
    ChoiceChoice,
}

/// Gaussian moments of one respondent's latent responses. Coordinates are
/// the `n_choices` utility differences followed by the modeled indicators.
#[derive(Debug, Clone)]
pub struct JointMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n_choices: usize,
    /// Observed region per coordinate on the unstandardized scale.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub kind: PairKind,
    pub coords: [usize; 2],
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl PairTerm {
    pub fn correlation(&self) -> f64 {
        self.cov[0][1] / (self.cov[0][0] * self.cov[1][1]).sqrt()
    }
}

/// Neumaier-compensated sum in iteration order.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn choice_bounds(chosen: Option<Alternative>, respondent: u32) -> Result<(f64, f64)> {
    match chosen {
        Some(Alternative::Ev) => Ok((0.0, f64::INFINITY)),
        Some(Alternative::Icev) => Ok((f64::NEG_INFINITY, 0.0)),
        None => Err(Error::InvalidDataset(format!(
            "respondent {respondent} has a task without a recorded choice"
        ))),
    }
}

/// Stacked linear-Gaussian representation for one respondent.
struct Stacked {
    mu: [f64; N_LATENT],
    a: Vec<f64>,
    b: Vec<[f64; N_LATENT]>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n_choices: usize,
}

impl Stacked {
    fn new(model: &Model, theta: &[f64], p: &PreparedRespondent) -> Result<Self> {
        let mu = model.latent_means_from(theta, &p.covariates);
        let d = p.tasks.len() + model.indicators.len();
        let mut s = Self {
            mu,
            a: Vec::with_capacity(d),
            b: Vec::with_capacity(d),
            lo: Vec::with_capacity(d),
            hi: Vec::with_capacity(d),
            n_choices: p.tasks.len(),
        };
        for t in &p.tasks {
            let c = model.loading_from(theta, &t.basis);
            let v0 = model.delta_systematic(theta, &t.basis);
            s.a.push(v0 + dot(&c, &mu));
            s.b.push(c);
            let (lo, hi) = choice_bounds(t.chosen, p.id)?;
            s.lo.push(lo);
            s.hi.push(hi);
        }
        for ind in &model.indicators {
            let mut l = [0.0; N_LATENT];
            for &(r, q) in &ind.loadings {
                l[r] += theta[q];
            }
            s.a.push(theta[ind.intercept] + dot(&l, &mu));
            s.b.push(l);
            let m = p.indicators[ind.slot] as usize;
            let psi = |j: usize| match j {
                0 => f64::NEG_INFINITY,
                1 => 0.0,
                5 => f64::INFINITY,
                j => theta[ind.thresholds[j - 2]],
            };
            s.lo.push(psi(m - 1));
            s.hi.push(psi(m));
        }
        Ok(s)
    }

    fn len(&self) -> usize {
        self.a.len()
    }
}

fn dot(a: &[f64; N_LATENT], b: &[f64; N_LATENT]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(c: &Matrix3<f64>, v: &[f64; N_LATENT]) -> [f64; N_LATENT] {
    let mut out = [0.0; N_LATENT];
    for (i, o) in out.iter_mut().enumerate() {
        *o = c[(i, 0)] * v[0] + c[(i, 1)] * v[1] + c[(i, 2)] * v[2];
    }
    out
}

/// Coordinate pairs in the fixed evaluation order.
fn pair_indices(n_choices: usize, n_ind: usize, policy: PairingPolicy) -> Vec<(PairKind, usize, usize)> {
    let mut out = Vec::new();
    for t in 0..n_choices {
        for k in 0..n_ind {
            out.push((PairKind::ChoiceIndicator, t, n_choices + k));
        }
    }
    for k in 0..n_ind {
        for l in k + 1..n_ind {
            out.push((PairKind::IndicatorIndicator, n_choices + k, n_choices + l));
        }
    }
    if policy == PairingPolicy::Extended {
        for t in 0..n_choices {
            for s in t + 1..n_choices {
                out.push((PairKind::ChoiceChoice, t, s));
            }
        }
    }
    out
}

/// Standardized bound, keeping infinities.
#[inline]
fn standardize(bound: f64, mean: f64, sd: f64) -> f64 {
    if bound.is_finite() {
        (bound - mean) / sd
    } else {
        bound
    }
}

pub fn joint_moments(model: &Model, theta: &[f64], respondent: &Respondent) -> Result<JointMoments> {
    let p = model.prepare(respondent)?;
    let s = Stacked::new(model, theta, &p)?;
    let c = model.layout().latent_correlation(theta);
    let d = s.len();
    let bm = DMatrix::from_fn(d, N_LATENT, |i, r| s.b[i][r]);
    let cdyn = DMatrix::from_fn(N_LATENT, N_LATENT, |i, j| c[(i, j)]);
    let cov = &bm * cdyn * bm.transpose() + DMatrix::<f64>::identity(d, d);
    assert!(
        cov.clone().cholesky().is_some(),
        "joint covariance lost positive definiteness"
    );
    Ok(JointMoments {
        mean: DVector::from_vec(s.a),
        cov,
        n_choices: s.n_choices,
        lower: s.lo,
        upper: s.hi,
    })
}

pub fn enumerate_pairs(m: &JointMoments, policy: PairingPolicy) -> Vec<PairTerm> {
    let n_ind = m.mean.len() - m.n_choices;
    pair_indices(m.n_choices, n_ind, policy)
        .into_iter()
        .map(|(kind, i, j)| PairTerm {
            kind,
            coords: [i, j],
            mean: [m.mean[i], m.mean[j]],
            cov: [[m.cov[(i, i)], m.cov[(i, j)]], [m.cov[(j, i)], m.cov[(j, j)]]],
            lower: [m.lower[i], m.lower[j]],
            upper: [m.upper[i], m.upper[j]],
        })
        .collect()
}

pub fn pair_logprob(term: &PairTerm) -> Result<f64> {
    let sd = [term.cov[0][0].sqrt(), term.cov[1][1].sqrt()];
    let lower = [0, 1].map(|i| standardize(term.lower[i], term.mean[i], sd[i]));
    let upper = [0, 1].map(|i| standardize(term.upper[i], term.mean[i], sd[i]));
    let rect = Rect2::new(lower, upper, term.correlation())?;
    Ok(rect_prob(&rect)?.ln())
}

/// Objective over a fixed dataset with the model's inputs precomputed.
pub struct Cml<'a> {
    model: &'a Model,
    prepared: Vec<PreparedRespondent>,
    policy: PairingPolicy,
}

impl<'a> Cml<'a> {
    pub fn new(model: &'a Model, dataset: &Dataset, policy: PairingPolicy) -> Result<Self> {
        let prepared = dataset
            .respondents
            .iter()
            .map(|r| {
                let p = model.prepare(r)?;
                for t in &p.tasks {
                    choice_bounds(t.chosen, p.id)?;
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            prepared,
            policy,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn policy(&self) -> PairingPolicy {
        self.policy
    }

    pub fn n_respondents(&self) -> usize {
        self.prepared.len()
    }

    pub fn respondent_ids(&self) -> Vec<u32> {
        self.prepared.iter().map(|p| p.id).collect()
    }

    /// Per-respondent contributions in respondent-id order.
    pub fn contributions(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let c = self.model.layout().latent_correlation(theta);
        let values: Vec<f64> = self
            .prepared
            .par_iter()
            .map(|p| self.respondent_value(theta, &c, p))
            .collect::<Result<Vec<_>>>()?;
        if let Some((p, _)) = self.prepared.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteObjective { respondent: p.id });
        }
        Ok(values)
    }

    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        Ok(compensated_sum(self.contributions(theta)?))
    }

    fn respondent_value(&self, theta: &[f64], c: &Matrix3<f64>, p: &PreparedRespondent) -> Result<f64> {
        let s = Stacked::new(self.model, theta, p)?;
        let d = s.len();
        let cb: Vec<[f64; N_LATENT]> = s.b.iter().map(|b| mat_vec(c, b)).collect();
        let var: Vec<f64> = (0..d).map(|i| dot(&s.b[i], &cb[i]) + 1.0).collect();
        let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let lo: Vec<f64> = (0..d).map(|i| standardize(s.lo[i], s.a[i], sd[i])).collect();
        let hi: Vec<f64> = (0..d).map(|i| standardize(s.hi[i], s.a[i], sd[i])).collect();
        let n_ind = d - s.n_choices;
        let mut total = 0.0;
        for (_, i, j) in pair_indices(s.n_choices, n_ind, self.policy) {
            let rho = dot(&s.b[i], &cb[j]) / (sd[i] * sd[j]);
            total += rect_prob_value([lo[i], lo[j]], [hi[i], hi[j]], rho).ln();
        }
        Ok(total)
    }

    /// One respondent's contribution and its gradient with respect to the
    /// dense natural parameter vector, accumulated into `grad`.
    fn respondent_gradient(
        &self,
        theta: &[f64],
        c: &Matrix3<f64>,
        p: &PreparedRespondent,
        grad: &mut [f64],
        g_corr: &mut Matrix3<f64>,
    ) -> Result<f64> {
        let model = self.model;
        let s = Stacked::new(model, theta, p)?;
        let d = s.len();
        let cb: Vec<[f64; N_LATENT]> = s.b.iter().map(|b| mat_vec(c, b)).collect();
        let var: Vec<f64> = (0..d).map(|i| dot(&s.b[i], &cb[i]) + 1.0).collect();
        let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let lo: Vec<f64> = (0..d).map(|i| standardize(s.lo[i], s.a[i], sd[i])).collect();
        let hi: Vec<f64> = (0..d).map(|i| standardize(s.hi[i], s.a[i], sd[i])).collect();
        let n_ind = d - s.n_choices;

        let mut g_a = vec![0.0; d];
        let mut g_lo = vec![0.0; d];
        let mut g_hi = vec![0.0; d];
        // Gradient with respect to the symmetric covariance, both triangles.
        let mut g_sigma = DMatrix::<f64>::zeros(d, d);
        let mut total = 0.0;
        for (_, i, j) in pair_indices(s.n_choices, n_ind, self.policy) {
            let rho = dot(&s.b[i], &cb[j]) / (sd[i] * sd[j]);
            let rg = rect_prob_grad([lo[i], lo[j]], [hi[i], hi[j]], rho);
            total += rg.prob.ln();
            if rg.raw <= PROB_FLOOR {
                continue;
            }
            let inv = 1.0 / rg.prob;
            let g_rho = rg.d_rho * inv;
            for (w, k) in [(0usize, i), (1usize, j)] {
                let dl = if lo[k].is_finite() { rg.d_lower[w] * inv } else { 0.0 };
                let dh = if hi[k].is_finite() { rg.d_upper[w] * inv } else { 0.0 };
                g_a[k] -= (dl + dh) / sd[k];
                g_lo[k] += dl / sd[k];
                g_hi[k] += dh / sd[k];
                let mut gv = -g_rho * rho / (2.0 * var[k]);
                if dl != 0.0 {
                    gv -= dl * lo[k] / (2.0 * var[k]);
                }
                if dh != 0.0 {
                    gv -= dh * hi[k] / (2.0 * var[k]);
                }
                g_sigma[(k, k)] += gv;
            }
            let g_cov = g_rho / (sd[i] * sd[j]);
            g_sigma[(i, j)] += 0.5 * g_cov;
            g_sigma[(j, i)] += 0.5 * g_cov;
        }

        // Sigma = B C B^T + I.
        let mut g_b = vec![[0.0; N_LATENT]; d];
        for i in 0..d {
            for k in 0..d {
                let g = g_sigma[(i, k)];
                if g != 0.0 {
                    for r in 0..N_LATENT {
                        g_b[i][r] += 2.0 * g * cb[k][r];
                        for q in 0..N_LATENT {
                            g_corr[(r, q)] += g * s.b[i][r] * s.b[k][q];
                        }
                    }
                }
            }
        }

        let mut g_mu = [0.0; N_LATENT];
        for (t, task) in p.tasks.iter().enumerate() {
            let mut g_c = g_b[t];
            for r in 0..N_LATENT {
                g_c[r] += g_a[t] * s.mu[r];
                g_mu[r] += g_a[t] * s.b[t][r];
            }
            model.backprop_task(theta, &task.basis, g_a[t], &g_c, grad);
        }
        for (k, ind) in model.indicators.iter().enumerate() {
            let row = s.n_choices + k;
            grad[ind.intercept] += g_a[row];
            for r in 0..N_LATENT {
                g_mu[r] += g_a[row] * s.b[row][r];
            }
            for &(r, q) in &ind.loadings {
                grad[q] += g_b[row][r] + g_a[row] * s.mu[r];
            }
            let m = p.indicators[ind.slot] as usize;
            if (3..=5).contains(&m) {
                grad[ind.thresholds[m - 3]] += g_lo[row];
            }
            if (2..=4).contains(&m) {
                grad[ind.thresholds[m - 2]] += g_hi[row];
            }
        }
        for (&(r, _, q), &x) in model.structural.iter().zip(&p.covariates) {
            grad[q] += g_mu[r] * x;
        }
        Ok(total)
    }

    /// Objective and its gradient on the dense natural parameter vector.
    pub fn loglik_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let c = self.model.layout().latent_correlation(theta);
        let n = theta.len();
        let parts: Vec<(f64, Vec<f64>, Matrix3<f64>)> = self
            .prepared
            .par_iter()
            .map(|p| {
                let mut g = vec![0.0; n];
                let mut gc = Matrix3::zeros();
                let v = self.respondent_gradient(theta, &c, p, &mut g, &mut gc)?;
                Ok((v, g, gc))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some((p, _)) = self.prepared.iter().zip(&parts).find(|(_, v)| !v.0.is_finite()) {
            return Err(Error::NonFiniteObjective { respondent: p.id });
        }
        let value = compensated_sum(parts.iter().map(|x| x.0));
        let mut grad = vec![0.0; n];
        let mut gc = Matrix3::zeros();
        for (_, g, c) in &parts {
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
            gc += c;
        }
        for ((r, q), k) in self.model.layout().corr_indices() {
            grad[k] += gc[(r, q)] + gc[(q, r)];
        }
        Ok((value, grad))
    }

    /// Objective at unconstrained free coordinates.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        self.loglik(&self.model.unpack(x)?)
    }

    /// Objective and gradient at unconstrained free coordinates.
    pub fn value_and_gradient_at(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let theta = self.model.unpack(x)?;
        let (v, g) = self.loglik_and_gradient(&theta)?;
        Ok((v, self.model.layout().chain_gradient(x, &theta, &g)))
    }

    /// Central finite-difference scores of each respondent's contribution on
    /// the unconstrained scale: an `N x P` matrix.
    pub fn scores_fd(&self, x: &[f64], step: f64) -> Result<DMatrix<f64>> {
        let n = self.prepared.len();
        let mut out = DMatrix::<f64>::zeros(n, x.len());
        for k in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            let up = self.contributions(&self.model.unpack(&xp)?)?;
            let dn = self.contributions(&self.model.unpack(&xm)?)?;
            for i in 0..n {
                out[(i, k)] = (up[i] - dn[i]) / (2.0 * step);
            }
        }
        Ok(out)
    }

    /// Analytic per-respondent scores on the unconstrained scale.
    pub fn scores_analytic(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let theta = self.model.unpack(x)?;
        let c = self.model.layout().latent_correlation(&theta);
        let layout = self.model.layout();
        let rows: Vec<Vec<f64>> = self
            .prepared
            .par_iter()
            .map(|p| {
                let mut g = vec![0.0; theta.len()];
                let mut gc = Matrix3::zeros();
                self.respondent_gradient(&theta, &c, p, &mut g, &mut gc)?;
                for ((r, q), k) in layout.corr_indices() {
                    g[k] += gc[(r, q)] + gc[(q, r)];
                }
                Ok(layout.chain_gradient(x, &theta, &g))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(rows.len(), x.len(), |i, k| rows[i][k]))
    }
}

/// Total composite log-likelihood.
pub fn cml_loglik(
    model: &Model,
    params: &crate::modelspec::ParameterVector,
    dataset: &Dataset,
    policy: PairingPolicy,
) -> Result<f64> {
    let theta = model.dense(params)?;
    Cml::new(model, dataset, policy)?.loglik(&theta)
}

/// Finite-difference per-respondent scores (step `1e-5` on the unconstrained scale).
pub fn per_respondent_scores(
    model: &Model,
    params: &crate::modelspec::ParameterVector,
    dataset: &Dataset,
    policy: PairingPolicy,
) -> Result<DMatrix<f64>> {
    let theta = model.dense(params)?;
    let x = model.pack(&theta)?;
    Cml::new(model, dataset, policy)?.scores_fd(&x, FD_SCORE_STEP)
}

pub const FD_SCORE_STEP: f64 = 1e-5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::fixtures::{sample_task, respondent};
    use crate::gaussian::norm_cdf;
    use crate::modelspec::preset_params;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn varied_dataset(n: u32, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = (1..=n)
            .map(|id| {
                let tasks = (1..=3)
                    .map(|k| {
                        let mut t = sample_task();
                        t.task_id = k;
                        t.ev.price_lacs = t.icev.price_lacs * [1.3, 1.45, 1.6][rng.random_range(0..3)];
                        t.ev.range_km = [200.0, 300.0, 400.0, 500.0][rng.random_range(0..4)];
                        t.ev.running_cost = [0.5, 1.0, 1.5][rng.random_range(0..3)];
                        t.ev.fast_charge_min = [30.0, 60.0, 90.0][rng.random_range(0..3)];
                        t.chosen = Some(if rng.random::<f64>() < 0.5 { Alternative::Ev } else { Alternative::Icev });
                        t
                    })
                    .collect();
                let mut r = respondent(id, tasks);
                for v in r.indicators.iter_mut() {
                    *v = rng.random_range(1..=5);
                }
                r.demographics.location = *[
                    crate::datamodel::Location::Mumbai,
                    crate::datamodel::Location::Calcutta,
                    crate::datamodel::Location::DelhiAndOthers,
                ]
                .get(rng.random_range(0..3))
                .unwrap();
                r.demographics.income_band = crate::datamodel::IncomeBand::ALL[rng.random_range(0..5)];
                r.weekly_km = rng.random_range(100.0..400.0);
                r
            })
            .collect();
        Dataset::new(rs).unwrap()
    }

    #[test]
    fn pair_counts() {
        let m = Model::preset("model2").unwrap();
        let th = m.dense(&preset_params("model2").unwrap()).unwrap();
        let ds = varied_dataset(1, 1);
        let jm = joint_moments(&m, &th, &ds.respondents[0]).unwrap();
        assert_eq!(enumerate_pairs(&jm, PairingPolicy::Standard).len(), 88);
        assert_eq!(enumerate_pairs(&jm, PairingPolicy::Extended).len(), 91);
        let mut one = ds.respondents[0].clone();
        one.tasks.truncate(1);
        let jm = joint_moments(&m, &th, &one).unwrap();
        assert_eq!(enumerate_pairs(&jm, PairingPolicy::Standard).len(), 66);
    }

    #[test]
    fn moments_match_closed_forms() {
        let m = Model::preset("model2").unwrap();
        let th = m.dense(&preset_params("model2").unwrap()).unwrap();
        let r = respondent(1, vec![sample_task()]);
        let jm = joint_moments(&m, &th, &r).unwrap();
        let i1 = jm.n_choices;
        assert!((jm.cov[(i1, i1)] - 1.8836).abs() < 1e-12);
        assert!((jm.cov[(i1, i1 + 1)] - 0.6956).abs() < 1e-12);
        // Same latent, base demographics: mean is the intercept.
        assert!((jm.mean[i1] - 2.64).abs() < 1e-12);
        let delta = [-0.61, -0.21, 0.93];
        let c = m.layout().latent_correlation(&th);
        let cd = mat_vec(&c, &delta);
        assert!((jm.cov[(0, 0)] - dot(&delta, &cd) - 1.0).abs() < 1e-12);
        // Cov(choice, ind01) = loading * (C c)_cd
        assert!((jm.cov[(0, i1)] - (-0.94) * cd[0]).abs() < 1e-12);
    }

    #[test]
    fn zero_delta_identity_correlation_decouples() {
        let m = Model::preset("model1").unwrap();
        let mut pv = preset_params("model1").unwrap();
        for l in ["cd", "evt", "ea"] {
            pv.set(&format!("delta.{l}"), 0.0);
        }
        for k in ["corr.cd.evt", "corr.cd.ea", "corr.evt.ea"] {
            pv.set(k, 0.0);
        }
        let th = m.dense(&pv).unwrap();
        let jm = joint_moments(&m, &th, &respondent(1, vec![sample_task()])).unwrap();
        for k in 1..jm.mean.len() {
            assert_eq!(jm.cov[(0, k)], 0.0);
        }
    }

    #[test]
    fn pair_logprob_properties() {
        let t = PairTerm {
            kind: PairKind::ChoiceIndicator,
            coords: [0, 1],
            mean: [0.0, 0.0],
            cov: [[1.0, 0.0], [0.0, 1.0]],
            lower: [0.0, f64::NEG_INFINITY],
            upper: [f64::INFINITY, 0.0],
        };
        assert!((pair_logprob(&t).unwrap() - 0.25f64.ln()).abs() < 1e-14);
        let t = PairTerm {
            mean: [0.3, -0.4],
            cov: [[1.7, 0.0], [0.0, 2.2]],
            lower: [0.0, 0.5],
            upper: [f64::INFINITY, 1.5],
            ..t
        };
        let p1 = 1.0 - norm_cdf(-0.3 / 1.7f64.sqrt());
        let p2 = norm_cdf((1.5 + 0.4) / 2.2f64.sqrt()) - norm_cdf((0.5 + 0.4) / 2.2f64.sqrt());
        assert!((pair_logprob(&t).unwrap() - (p1.ln() + p2.ln())).abs() < 1e-12);
    }

    #[test]
    fn pair_logprob_against_monte_carlo() {
        let t = PairTerm {
            kind: PairKind::ChoiceIndicator,
            coords: [0, 1],
            mean: [0.4, 1.1],
            cov: [[1.5, -0.6], [-0.6, 1.9]],
            lower: [f64::NEG_INFINITY, 0.33],
            upper: [0.0, 1.13],
        };
        let exact = pair_logprob(&t).unwrap().exp();
        let l11 = t.cov[0][0].sqrt();
        let l21 = t.cov[1][0] / l11;
        let l22 = (t.cov[1][1] - l21 * l21).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000_000u64;
        let mut hits = 0u64;
        for _ in 0..n {
            let z1: f64 = rng.sample(rand_distr::StandardNormal);
            let z2: f64 = rng.sample(rand_distr::StandardNormal);
            let y1 = t.mean[0] + l11 * z1;
            let y2 = t.mean[1] + l21 * z1 + l22 * z2;
            if y1 <= 0.0 && y2 > 0.33 && y2 <= 1.13 {
                hits += 1;
            }
        }
        let phat = hits as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((phat - exact).abs() < 3.0 * se, "{phat} vs {exact}");
    }

    #[test]
    fn fast_path_equals_pair_enumeration() {
        let m = Model::preset("model3").unwrap();
        let th = m.dense(&preset_params("model3").unwrap()).unwrap();
        let ds = varied_dataset(5, 3);
        for policy in [PairingPolicy::Standard, PairingPolicy::Extended] {
            let cml = Cml::new(&m, &ds, policy).unwrap();
            let fast = cml.contributions(&th).unwrap();
            for (r, f) in ds.respondents.iter().zip(&fast) {
                let jm = joint_moments(&m, &th, r).unwrap();
                let slow: f64 = enumerate_pairs(&jm, policy).iter().map(|p| pair_logprob(p).unwrap()).sum();
                assert!((slow - f).abs() < 1e-10, "{slow} {f}");
            }
        }
    }

    #[test]
    fn additivity_and_permutation() {
        let m = Model::preset("model2").unwrap();
        let th = m.dense(&preset_params("model2").unwrap()).unwrap();
        let ds = varied_dataset(1, 4);
        let single = Cml::new(&m, &ds, PairingPolicy::Standard).unwrap().loglik(&th).unwrap();
        let mut twin = ds.respondents[0].clone();
        twin.respondent_id = 2;
        let doubled = Dataset::new(vec![ds.respondents[0].clone(), twin]).unwrap();
        let two = Cml::new(&m, &doubled, PairingPolicy::Standard).unwrap().loglik(&th).unwrap();
        assert_eq!(two, 2.0 * single);

        let ds = varied_dataset(40, 5);
        let base = Cml::new(&m, &ds, PairingPolicy::Standard).unwrap().loglik(&th).unwrap();
        let mut rs = ds.respondents.clone();
        rs.reverse();
        for (i, r) in rs.iter_mut().enumerate() {
            r.respondent_id = i as u32 + 1;
        }
        let permuted = Cml::new(&m, &Dataset::new(rs).unwrap(), PairingPolicy::Standard).unwrap().loglik(&th).unwrap();
        assert!((base - permuted).abs() < 1e-9);
    }

    #[test]
    fn nesting_model1_in_model2() {
        let m1 = Model::preset("model1").unwrap();
        let m2 = Model::preset("model2").unwrap();
        let pv = preset_params("model1").unwrap();
        let ds = varied_dataset(30, 6);
        for policy in [PairingPolicy::Standard, PairingPolicy::Extended] {
            let a = cml_loglik(&m1, &pv, &ds, policy).unwrap();
            let b = cml_loglik(&m2, &pv, &ds, policy).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let m = Model::preset("model3").unwrap();
        let th = m.dense(&preset_params("model3").unwrap()).unwrap();
        let x = m.pack(&th).unwrap();
        let ds = varied_dataset(6, 8);
        for policy in [PairingPolicy::Standard, PairingPolicy::Extended] {
            let cml = Cml::new(&m, &ds, policy).unwrap();
            let (_, g) = cml.value_and_gradient_at(&x).unwrap();
            for k in 0..x.len() {
                let h = 1e-5;
                let mut a = x.clone();
                let mut b = x.clone();
                a[k] += h;
                b[k] -= h;
                let fd = (cml.value_at(&a).unwrap() - cml.value_at(&b).unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[k]).abs() < 1e-5 * fd.abs().max(1.0),
                    "{}: fd {fd} analytic {}",
                    m.layout().free_names()[k],
                    g[k]
                );
            }
        }
    }

    #[test]
    fn fd_scores_sum_to_fd_gradient() {
        let m = Model::preset("model2").unwrap();
        let th = m.dense(&preset_params("model2").unwrap()).unwrap();
        let x = m.pack(&th).unwrap();
        let ds = varied_dataset(8, 9);
        let cml = Cml::new(&m, &ds, PairingPolicy::Standard).unwrap();
        let s = cml.scores_fd(&x, FD_SCORE_STEP).unwrap();
        let sa = cml.scores_analytic(&x).unwrap();
        for k in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += FD_SCORE_STEP;
            b[k] -= FD_SCORE_STEP;
            let fd = (cml.value_at(&a).unwrap() - cml.value_at(&b).unwrap()) / (2.0 * FD_SCORE_STEP);
            let sum: f64 = s.column(k).iter().sum();
            assert!((fd - sum).abs() <= 1e-6 * fd.abs().max(1.0), "{k}: {fd} vs {sum}");
            for i in 0..s.nrows() {
                assert!((s[(i, k)] - sa[(i, k)]).abs() < 1e-5 * sa[(i, k)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn choice_part_reduces_to_binary_probit() {
        // With delta = phi = 0 and diagonal C, choice pairs factor, so the
        // choice part of the CML is (number of indicators) x probit loglik.
        let m = Model::preset("model1").unwrap();
        let mut pv = preset_params("model1").unwrap();
        for l in ["cd", "evt", "ea"] {
            pv.set(&format!("delta.{l}"), 0.0);
        }
        for k in ["corr.cd.evt", "corr.cd.ea", "corr.evt.ea"] {
            pv.set(k, 0.0);
        }
        let th = m.dense(&pv).unwrap();
        let ds = varied_dataset(25, 10);
        let cml = Cml::new(&m, &ds, PairingPolicy::Standard).unwrap();
        let total = cml.loglik(&th).unwrap();

        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let mut probit = 0.0;
        let mut indicators = 0.0;
        for r in &ds.respondents {
            for t in &r.tasks {
                let (ve, vi) = m.systematic_utility(&th, t, r, &[0.0; 3]).unwrap();
                let p = normal.cdf(ve - vi);
                probit += if t.chosen == Some(Alternative::Ev) { p.ln() } else { (1.0 - p).ln() };
            }
            let jm = joint_moments(&m, &th, r).unwrap();
            for pair in enumerate_pairs(&jm, PairingPolicy::Standard) {
                if pair.kind == PairKind::IndicatorIndicator {
                    indicators += pair_logprob(&pair).unwrap();
                }
            }
        }
        let choice_part = total - indicators;
        // Each choice x indicator pair = log P(choice) + log P(indicator); the
        // indicator marginals are shared across the three tasks.
        let mut marginals = 0.0;
        for r in &ds.respondents {
            let jm = joint_moments(&m, &th, r).unwrap();
            for k in jm.n_choices..jm.mean.len() {
                let sd = jm.cov[(k, k)].sqrt();
                let hi = if jm.upper[k].is_finite() { normal.cdf((jm.upper[k] - jm.mean[k]) / sd) } else { 1.0 };
                let lo = if jm.lower[k].is_finite() { normal.cdf((jm.lower[k] - jm.mean[k]) / sd) } else { 0.0 };
                marginals += r.tasks.len() as f64 * (hi - lo).ln();
            }
        }
        let reduced = (choice_part - marginals) / 11.0;
        assert!((reduced - probit).abs() < 1e-10 * probit.abs().max(1.0), "{reduced} {probit}");
    }
}
