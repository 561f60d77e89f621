//! Forward simulation of the full model for recovery experiments.

use crate::cml::PairingPolicy;
use crate::datamodel::{
    Alternative, Dataset, Demographics, Education, Employment, Gender, IncomeBand, Location,
    Marital, Respondent, N_INDICATORS,
};
use crate::design::{assign_tasks, generate_bank, DesignSpec};
use crate::error::{Error, Result};
use crate::estimator::{maximize_cml, neutral_start, staged_start, FitOptions, FitResult};
use crate::modelspec::{Model, ParameterVector, N_LATENT};
use crate::rng::{domain, substream};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Independent categorical marginals for each demographic field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicDistribution {
    pub location: Vec<(Location, f64)>,
    pub gender: Vec<(Gender, f64)>,
    pub marital: Vec<(Marital, f64)>,
    pub income_band: Vec<(IncomeBand, f64)>,
    pub education: Vec<(Education, f64)>,
    pub employment: Vec<(Employment, f64)>,
}

impl Default for DemographicDistribution {
    fn default() -> Self {
        Self {
            location: vec![
                (Location::Mumbai, 186.0 / 1031.0),
                (Location::Bangalore, 145.0 / 1031.0),
                (Location::Chennai, 127.0 / 1031.0),
                (Location::Calcutta, 74.0 / 1031.0),
                (Location::DelhiAndOthers, 499.0 / 1031.0),
            ],
            gender: vec![(Gender::Male, 0.764), (Gender::Female, 0.236)],
            marital: vec![
                (Marital::SingleAndOthers, 0.449),
                (Marital::Couple, 0.237),
                (Marital::CoupleWithKid, 0.314),
            ],
            income_band: vec![
                (IncomeBand::Lt5, 0.208),
                (IncomeBand::From5To10, 0.251),
                (IncomeBand::From10To15, 0.179),
                (IncomeBand::From15To20, 0.179),
                (IncomeBand::Ge20, 0.183),
            ],
            education: vec![
                (Education::BelowBachelor, 0.117),
                (Education::Bachelor, 0.416),
                (Education::MastersPlus, 0.467),
            ],
            employment: vec![
                (Employment::Private, 0.734),
                (Employment::Government, 0.078),
                (Employment::SelfEmployed, 0.086),
                (Employment::Unemployed, 0.102),
            ],
        }
    }
}

struct Categorical<T: Copy> {
    levels: Vec<T>,
    index: WeightedIndex<f64>,
}

impl<T: Copy> Categorical<T> {
    fn new(field: &str, pairs: &[(T, f64)]) -> Result<Self> {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if pairs.is_empty() || pairs.iter().any(|p| !(p.1 >= 0.0)) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDataset(format!(
                "{field} probabilities must be non-negative and sum to 1 (sum {total})"
            )));
        }
        let index = WeightedIndex::new(pairs.iter().map(|p| p.1))
            .map_err(|e| Error::InvalidDataset(format!("{field}: {e}")))?;
        Ok(Self {
            levels: pairs.iter().map(|p| p.0).collect(),
            index,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> T {
        self.levels[self.index.sample(rng)]
    }
}

struct DemographicSampler {
    location: Categorical<Location>,
    gender: Categorical<Gender>,
    marital: Categorical<Marital>,
    income_band: Categorical<IncomeBand>,
    education: Categorical<Education>,
    employment: Categorical<Employment>,
}

impl DemographicSampler {
    fn new(d: &DemographicDistribution) -> Result<Self> {
        Ok(Self {
            location: Categorical::new("location", &d.location)?,
            gender: Categorical::new("gender", &d.gender)?,
            marital: Categorical::new("marital", &d.marital)?,
            income_band: Categorical::new("income_band", &d.income_band)?,
            education: Categorical::new("education", &d.education)?,
            employment: Categorical::new("employment", &d.employment)?,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Demographics {
        Demographics {
            location: self.location.draw(rng),
            gender: self.gender.draw(rng),
            marital: self.marital.draw(rng),
            income_band: self.income_band.draw(rng),
            education: self.education.draw(rng),
            employment: self.employment.draw(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_respondents: usize,
    pub demographics: DemographicDistribution,
    /// Weekly km is lognormal with this median and log-scale standard deviation.
    pub weekly_km_median: f64,
    pub weekly_km_log_sd: f64,
    /// Reported ICEV price, uniform on `[low, high]` lacs.
    pub price_low: f64,
    pub price_high: f64,
    pub design: DesignSpec,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_respondents: 1000,
            demographics: DemographicDistribution::default(),
            weekly_km_median: 230.0,
            weekly_km_log_sd: 0.5,
            price_low: 5.0,
            price_high: 20.0,
            design: DesignSpec::default(),
            seed: 1,
        }
    }
}

fn category(propensity: f64, thresholds: [f64; 3]) -> u8 {
    if propensity <= 0.0 {
        1
    } else if propensity <= thresholds[0] {
        2
    } else if propensity <= thresholds[1] {
        3
    } else if propensity <= thresholds[2] {
        4
    } else {
        5
    }
}

/// Draws a dataset from the model at `truth`; bit-identical for a given seed.
pub fn simulate_dataset(model: &Model, truth: &ParameterVector, cfg: &SimConfig) -> Result<Dataset> {
    let theta = model.dense(truth)?;
    if !(cfg.weekly_km_median > 0.0 && cfg.weekly_km_log_sd >= 0.0) {
        return Err(Error::InvalidDataset("weekly km distribution must have a positive median".into()));
    }
    if !(cfg.price_low > 0.0 && cfg.price_high >= cfg.price_low) {
        return Err(Error::InvalidDataset("reported price range must be positive and ordered".into()));
    }
    let sampler = DemographicSampler::new(&cfg.demographics)?;
    let bank = generate_bank(&cfg.design, cfg.seed)?;
    let corr = model.layout().latent_correlation(&theta);
    let chol = corr
        .cholesky()
        .ok_or_else(|| Error::Parameters("latent correlation matrix is not positive definite".into()))?
        .l();

    let respondents = (1..=cfg.n_respondents as u32)
        .into_par_iter()
        .map(|id| {
            let mut rng = substream(cfg.seed, domain::RESPONDENT, u64::from(id));
            let demographics = sampler.draw(&mut rng);
            let z: f64 = rng.sample(StandardNormal);
            let weekly_km = cfg.weekly_km_median * (cfg.weekly_km_log_sd * z).exp();
            let price = rng.random_range(cfg.price_low..=cfg.price_high);

            let mu = model.latent_means(&theta, &demographics);
            let e: [f64; N_LATENT] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let mut latent = mu;
            for (r, x) in latent.iter_mut().enumerate() {
                for (q, ei) in e.iter().enumerate() {
                    *x += chol[(r, q)] * ei;
                }
            }

            let mut indicators = [3u8; N_INDICATORS];
            for ind in &model.indicators {
                let mut y = theta[ind.intercept] + rng.sample::<f64, _>(StandardNormal);
                for &(r, q) in &ind.loadings {
                    y += theta[q] * latent[r];
                }
                indicators[ind.slot] = category(y, ind.thresholds.map(|k| theta[k]));
            }

            let mut tasks = assign_tasks(&bank, id, price, cfg.design.tasks_per_respondent, cfg.seed)?;
            for (k, t) in tasks.iter_mut().enumerate() {
                t.task_id = k as u32 + 1;
            }
            let mut respondent = Respondent {
                respondent_id: id,
                demographics,
                reported_icev_price_lacs: price,
                weekly_km,
                indicators,
                tasks,
            };
            let mut chosen = Vec::with_capacity(respondent.tasks.len());
            for t in &respondent.tasks {
                let (ve, vi) = model.systematic_utility(&theta, t, &respondent, &latent)?;
                let eps: f64 = rng.sample(StandardNormal);
                chosen.push(if ve - vi + eps > 0.0 { Alternative::Ev } else { Alternative::Icev });
            }
            for (t, c) in respondent.tasks.iter_mut().zip(chosen) {
                t.chosen = Some(c);
            }
            Ok(respondent)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(respondents)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryStart {
    Truth,
    Neutral,
    /// Neutral start, first fitted with the curvatures held at one.
    Staged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub bias: f64,
    pub se: f64,
    /// `|estimate - truth| / se`; `None` when the standard error is unavailable.
    pub abs_z: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub model: String,
    pub n_respondents: usize,
    pub seed: u64,
    pub converged: bool,
    pub objective: f64,
    pub iterations: usize,
    pub parameters: Vec<ParameterRecovery>,
}

impl RecoveryReport {
    /// Share of free parameters with `|z| <= limit`.
    pub fn share_within(&self, limit: f64) -> f64 {
        let n = self.parameters.len() as f64;
        self.parameters.iter().filter(|p| p.abs_z.is_some_and(|z| z <= limit)).count() as f64 / n
    }
}

/// Simulate, estimate and compare each free parameter with its true value.
pub fn recovery_experiment(
    model: &Model,
    truth: &ParameterVector,
    cfg: &SimConfig,
    policy: PairingPolicy,
    start: RecoveryStart,
    options: &FitOptions,
) -> Result<(RecoveryReport, FitResult)> {
    let dataset = simulate_dataset(model, truth, cfg)?;
    let start = match start {
        RecoveryStart::Truth => truth.clone(),
        RecoveryStart::Neutral => neutral_start(model, &dataset)?,
        RecoveryStart::Staged => staged_start(model, &dataset, policy, options)?,
    };
    let fit = maximize_cml(model, &dataset, &start, policy, options)?;
    let theta_true = model.dense(truth)?;
    let layout = model.layout();
    let parameters = (0..layout.n_free())
        .map(|k| {
            let i = layout.free_owner(k);
            let name = layout.params()[i].name.clone();
            let estimate = fit.params.values[&name];
            let se = fit.std_errors.get(&name).copied().unwrap_or(f64::NAN);
            let bias = estimate - theta_true[i];
            ParameterRecovery {
                name,
                truth: theta_true[i],
                estimate,
                bias,
                se,
                abs_z: (se.is_finite() && se > 0.0).then(|| bias.abs() / se),
            }
        })
        .collect();
    Ok((
        RecoveryReport {
            model: model.name().to_string(),
            n_respondents: dataset.len(),
            seed: cfg.seed,
            converged: fit.converged,
            objective: fit.objective,
            iterations: fit.iterations,
            parameters,
        },
        fit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::norm_cdf;
    use crate::modelspec::preset_params;

    fn share_ev(ds: &Dataset) -> f64 {
        let n = ds.n_tasks() as f64;
        ds.respondents
            .iter()
            .flat_map(|r| &r.tasks)
            .filter(|t| t.chosen == Some(Alternative::Ev))
            .count() as f64
            / n
    }

    fn zero_utility(model: &Model) -> ParameterVector {
        let mut pv = preset_params(model.name()).unwrap();
        for p in model.layout().params() {
            let n = &p.name;
            if n.starts_with("price.beta")
                || n.starts_with("range.beta")
                || n.starts_with("fuel.beta")
                || n.starts_with("theta.")
                || n.starts_with("delta.")
                || n.ends_with("fast_charge")
                || n == "ev.asc"
            {
                pv.set(n, 0.0);
            }
        }
        pv
    }

    #[test]
    fn deterministic_for_a_seed() {
        let m = Model::preset("model2").unwrap();
        let pv = preset_params("model2").unwrap();
        let cfg = SimConfig {
            n_respondents: 50,
            seed: 9,
            ..SimConfig::default()
        };
        let a = simulate_dataset(&m, &pv, &cfg).unwrap();
        let b = simulate_dataset(&m, &pv, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_dataset(&m, &pv, &SimConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn symmetric_coin_and_dominance() {
        let m = Model::preset("model1").unwrap();
        let pv = zero_utility(&m);
        let cfg = SimConfig {
            n_respondents: 3334,
            seed: 3,
            ..SimConfig::default()
        };
        let ds = simulate_dataset(&m, &pv, &cfg).unwrap();
        let n = ds.n_tasks() as f64;
        assert!((share_ev(&ds) - 0.5).abs() < 3.0 * (0.25 / n).sqrt());
        let mut pv = pv;
        pv.set("ev.asc", 50.0);
        let ds = simulate_dataset(&m, &pv, &cfg).unwrap();
        assert_eq!(share_ev(&ds), 1.0);
    }

    #[test]
    fn indicator_marginal_matches_ordered_probit() {
        let m = Model::preset("model2").unwrap();
        let pv = preset_params("model2").unwrap();
        let cfg = SimConfig {
            n_respondents: 10_000,
            seed: 4,
            demographics: DemographicDistribution {
                location: vec![(Location::DelhiAndOthers, 1.0)],
                gender: vec![(Gender::Male, 1.0)],
                marital: vec![(Marital::SingleAndOthers, 1.0)],
                income_band: vec![(IncomeBand::Ge20, 1.0)],
                education: vec![(Education::MastersPlus, 1.0)],
                employment: vec![(Employment::Private, 1.0)],
            },
            ..SimConfig::default()
        };
        let ds = simulate_dataset(&m, &pv, &cfg).unwrap();
        let hits = ds.respondents.iter().filter(|r| r.indicators[0] == 1).count() as f64;
        let p = norm_cdf(-2.64 / (0.94f64 * 0.94 + 1.0).sqrt());
        assert!((p - 0.027_204).abs() < 1e-6);
        let n = 10_000.0;
        assert!((hits / n - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(), "{} vs {p}", hits / n);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let m = Model::preset("model1").unwrap();
        let pv = preset_params("model1").unwrap();
        let mut cfg = SimConfig::default();
        cfg.demographics.gender = vec![(Gender::Male, 0.5), (Gender::Female, 0.4)];
        assert!(simulate_dataset(&m, &pv, &cfg).is_err());
    }
}
