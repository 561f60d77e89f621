//! Randomized pivot design: a level-balanced scenario bank and per-respondent task draws.

use crate::datamodel::{AlternativeProfile, ChoiceTask};
use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSpec {
    /// Relative EV price markups over the reported ICEV price (0.30 = 30%).
    pub ev_price_markup: Vec<f64>,
    pub icev_run_cost: Vec<f64>,
    pub ev_run_cost: Vec<f64>,
    pub icev_range_km: Vec<f64>,
    pub ev_range_km: Vec<f64>,
    pub ev_slow_hr: Vec<f64>,
    pub ev_fast_min: Vec<f64>,
    pub icev_fast_min: Vec<f64>,
    pub ev_spacing_km: Vec<f64>,
    pub icev_spacing_km: Vec<f64>,
    pub ev_parking: Vec<bool>,
    pub ev_lane: Vec<bool>,
    pub bank_size: usize,
    pub tasks_per_respondent: usize,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            ev_price_markup: vec![0.30, 0.45, 0.60],
            icev_run_cost: vec![3.0, 4.0, 5.0],
            ev_run_cost: vec![0.5, 1.0, 1.5],
            icev_range_km: vec![600.0, 800.0],
            ev_range_km: vec![150.0, 200.0, 250.0],
            ev_slow_hr: vec![6.0, 8.0, 10.0],
            ev_fast_min: vec![30.0, 60.0, 90.0],
            icev_fast_min: vec![5.0, 10.0],
            ev_spacing_km: vec![3.0, 5.0, 7.0],
            icev_spacing_km: vec![1.0],
            ev_parking: vec![true, false],
            ev_lane: vec![true, false],
            bank_size: 24,
            tasks_per_respondent: 3,
        }
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

impl DesignSpec {
    fn numeric_columns(&self) -> [(&'static str, &[f64]); 10] {
        [
            ("ev_price_markup", &self.ev_price_markup),
            ("icev_run_cost", &self.icev_run_cost),
            ("ev_run_cost", &self.ev_run_cost),
            ("icev_range_km", &self.icev_range_km),
            ("ev_range_km", &self.ev_range_km),
            ("ev_slow_hr", &self.ev_slow_hr),
            ("ev_fast_min", &self.ev_fast_min),
            ("icev_fast_min", &self.icev_fast_min),
            ("ev_spacing_km", &self.ev_spacing_km),
            ("icev_spacing_km", &self.icev_spacing_km),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Design(m));
        if self.bank_size == 0 {
            return bad("bank_size must be positive".into());
        }
        let mut sizes: Vec<(&str, usize)> = self
            .numeric_columns()
            .iter()
            .map(|(n, v)| (*n, v.len()))
            .collect();
        sizes.push(("ev_parking", self.ev_parking.len()));
        sizes.push(("ev_lane", self.ev_lane.len()));
        for (name, n) in sizes {
            if n == 0 {
                return bad(format!("{name} has no levels"));
            }
            if self.bank_size % n != 0 {
                return bad(format!(
                    "bank_size {} not divisible by {} levels of {name}",
                    self.bank_size, n
                ));
            }
        }
        for (name, v) in self.numeric_columns() {
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad(format!("{name} levels must be positive"));
            }
        }
        if self.tasks_per_respondent == 0 || self.tasks_per_respondent > self.bank_size {
            return bad("tasks_per_respondent must be in 1..=bank_size".into());
        }
        // Comparison relations must hold for every level combination.
        if !(max(&self.ev_run_cost) < min(&self.icev_run_cost)) {
            return bad("EV running cost levels must lie below ICEV levels".into());
        }
        if !(max(&self.ev_range_km) < min(&self.icev_range_km)) {
            return bad("EV range levels must lie below ICEV levels".into());
        }
        if !(min(&self.ev_fast_min) > max(&self.icev_fast_min)) {
            return bad("EV fast-charge levels must exceed ICEV refuelling levels".into());
        }
        if !(min(&self.ev_spacing_km) > max(&self.icev_spacing_km)) {
            return bad("EV charger spacing levels must exceed ICEV station spacing".into());
        }
        Ok(())
    }
}

/// One row of the scenario bank; the EV price is still relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub scenario_id: u32,
    pub ev_price_markup: f64,
    pub icev_run_cost: f64,
    pub ev_run_cost: f64,
    pub icev_range_km: f64,
    pub ev_range_km: f64,
    pub ev_slow_hr: f64,
    pub ev_fast_min: f64,
    pub icev_fast_min: f64,
    pub ev_spacing_km: f64,
    pub icev_spacing_km: f64,
    pub ev_parking: bool,
    pub ev_lane: bool,
}

impl ScenarioTemplate {
    /// Materializes a task for a respondent who reported `icev_price` lacs.
    pub fn pivot(&self, icev_price: f64) -> ChoiceTask {
        ChoiceTask {
            task_id: self.scenario_id,
            icev: AlternativeProfile {
                price_lacs: icev_price,
                running_cost: self.icev_run_cost,
                range_km: self.icev_range_km,
                slow_charge_hr: None,
                fast_charge_min: self.icev_fast_min,
                charger_spacing_km: self.icev_spacing_km,
                reserved_parking: false,
                special_lane: false,
            },
            ev: AlternativeProfile {
                price_lacs: icev_price * (1.0 + self.ev_price_markup),
                running_cost: self.ev_run_cost,
                range_km: self.ev_range_km,
                slow_charge_hr: Some(self.ev_slow_hr),
                fast_charge_min: self.ev_fast_min,
                charger_spacing_km: self.ev_spacing_km,
                reserved_parking: self.ev_parking,
                special_lane: self.ev_lane,
            },
            chosen: None,
        }
    }
}

fn balanced_column<T: Copy>(levels: &[T], n: usize, rng: &mut impl rand::Rng) -> Vec<T> {
    let reps = n / levels.len();
    let mut col: Vec<T> = levels
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, reps))
        .collect();
    col.shuffle(rng);
    col
}

/// Builds the scenario bank. Every attribute column is an independently shuffled,
/// exactly balanced sequence of its levels.
pub fn generate_bank(spec: &DesignSpec, seed: u64) -> Result<Vec<ScenarioTemplate>> {
    spec.validate()?;
    let n = spec.bank_size;
    let numeric: Vec<Vec<f64>> = spec
        .numeric_columns()
        .iter()
        .enumerate()
        .map(|(i, (_, levels))| balanced_column(levels, n, &mut substream(seed, domain::BANK, i as u64)))
        .collect();
    let parking = balanced_column(&spec.ev_parking, n, &mut substream(seed, domain::BANK, 10));
    let lane = balanced_column(&spec.ev_lane, n, &mut substream(seed, domain::BANK, 11));
    Ok((0..n)
        .map(|s| ScenarioTemplate {
            scenario_id: s as u32 + 1,
            ev_price_markup: numeric[0][s],
            icev_run_cost: numeric[1][s],
            ev_run_cost: numeric[2][s],
            icev_range_km: numeric[3][s],
            ev_range_km: numeric[4][s],
            ev_slow_hr: numeric[5][s],
            ev_fast_min: numeric[6][s],
            icev_fast_min: numeric[7][s],
            ev_spacing_km: numeric[8][s],
            icev_spacing_km: numeric[9][s],
            ev_parking: parking[s],
            ev_lane: lane[s],
        })
        .collect())
}

/// Draws `count` distinct scenarios for one respondent and pivots the EV price on
/// the reported ICEV price.
pub fn assign_tasks(
    bank: &[ScenarioTemplate],
    respondent_id: u32,
    reported_icev_price: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<ChoiceTask>> {
    if !(reported_icev_price.is_finite() && reported_icev_price > 0.0) {
        return Err(Error::NonPositive {
            what: "reported ICEV price",
            value: reported_icev_price,
        });
    }
    if count > bank.len() {
        return Err(Error::Design(format!(
            "cannot draw {count} distinct scenarios from a bank of {}",
            bank.len()
        )));
    }
    let mut rng = substream(seed, domain::ASSIGN, respondent_id as u64);
    let picks = rand::seq::index::sample(&mut rng, bank.len(), count);
    let tasks: Vec<ChoiceTask> = picks
        .into_iter()
        .map(|i| bank[i].pivot(reported_icev_price))
        .collect();
    for t in &tasks {
        t.validate(respondent_id)?;
    }
    Ok(tasks)
}

/// Task sheets for `n_respondents` respondents whose reported ICEV prices are
/// uniform on `[price_low, price_high]` lacs. Returns `(respondent_id, price, tasks)`.
pub fn design_tasks(
    spec: &DesignSpec,
    n_respondents: usize,
    price_low: f64,
    price_high: f64,
    seed: u64,
) -> Result<Vec<(u32, f64, Vec<ChoiceTask>)>> {
    if !(price_low > 0.0 && price_high >= price_low && price_high.is_finite()) {
        return Err(Error::Design(format!(
            "reported price range [{price_low}, {price_high}] must be positive and ordered"
        )));
    }
    let bank = generate_bank(spec, seed)?;
    (1..=n_respondents as u32)
        .map(|id| {
            let price = substream(seed, domain::PIVOT, u64::from(id)).random_range(price_low..=price_high);
            let mut tasks = assign_tasks(&bank, id, price, spec.tasks_per_respondent, seed)?;
            for (k, t) in tasks.iter_mut().enumerate() {
                t.task_id = k as u32 + 1;
            }
            Ok((id, price, tasks))
        })
        .collect()
}

pub fn write_bank(bank: &[ScenarioTemplate], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in bank {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn counts(values: impl Iterator<Item = String>) -> HashMap<String, usize> {
        let mut m = HashMap::new();
        for v in values {
            *m.entry(v).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn bank_is_balanced() {
        let bank = generate_bank(&DesignSpec::default(), 1).unwrap();
        assert_eq!(bank.len(), 24);
        let ev_range = counts(bank.iter().map(|s| s.ev_range_km.to_string()));
        assert_eq!(ev_range.len(), 3);
        assert!(ev_range.values().all(|&c| c == 8));
        let icev_range = counts(bank.iter().map(|s| s.icev_range_km.to_string()));
        assert!(icev_range.values().all(|&c| c == 12));
        let lane = counts(bank.iter().map(|s| s.ev_lane.to_string()));
        assert!(lane.values().all(|&c| c == 12));
    }

    #[test]
    fn bank_is_deterministic() {
        let spec = DesignSpec::default();
        assert_eq!(generate_bank(&spec, 7).unwrap(), generate_bank(&spec, 7).unwrap());
        assert_ne!(generate_bank(&spec, 7).unwrap(), generate_bank(&spec, 8).unwrap());
    }

    #[test]
    fn pivot_prices() {
        let bank = generate_bank(&DesignSpec::default(), 1).unwrap();
        let mut s = bank[0];
        s.ev_price_markup = 0.30;
        let t = s.pivot(8.0);
        assert!((t.ev.price_lacs - 10.4).abs() < 1e-12);
        assert_eq!(t.icev.price_lacs, 8.0);
        s.ev_price_markup = 0.60;
        assert!((s.pivot(10.0).ev.price_lacs - 16.0).abs() < 1e-12);
    }

    #[test]
    fn assignment_draws_distinct_and_is_deterministic() {
        let bank = generate_bank(&DesignSpec::default(), 3).unwrap();
        let a = assign_tasks(&bank, 12, 9.5, 3, 99).unwrap();
        let b = assign_tasks(&bank, 12, 9.5, 3, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let mut ids: Vec<u32> = a.iter().map(|t| t.task_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 3);
        assert!(assign_tasks(&bank, 12, 0.0, 3, 99).is_err());
        assert!(assign_tasks(&bank, 12, 8.0, 25, 99).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = DesignSpec::default();
        s.bank_size = 20;
        assert!(s.validate().is_err());
        let mut s = DesignSpec::default();
        s.ev_range_km = vec![];
        assert!(s.validate().is_err());
        let mut s = DesignSpec::default();
        s.ev_run_cost = vec![0.5, 1.0, 3.5];
        assert!(s.validate().is_err());
    }
}
