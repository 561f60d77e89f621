//! Declarative utility and latent-variable specification, compiled to a dense
//! parameter layout with constraint handling.

mod params;

pub use params::{ParamInfo, ParamKind, ParamLayout, ParameterVector};

use crate::datamodel::{
    indicator_index, weekly_fuel_cost, Alternative, AlternativeProfile, ChoiceTask, Covariate,
    Demographics, Respondent, N_INDICATORS,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Number of latent variables.
pub const N_LATENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    PriceLacs,
    #[serde(rename = "log_range_100km")]
    LogRange100km,
    #[serde(rename = "weekly_fuel_inr100")]
    WeeklyFuelInr100,
    FastChargeMin,
    Spacing,
    SlowCharge,
    Parking,
    Lane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Ev,
    Icev,
    EvMinusIcev,
    IcevMinusEv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrExpr {
    pub attribute: Attribute,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermBasis {
    Constant,
    Linear { expr: AttrExpr },
    /// `sign(d) |d|^alpha` with `d` the (usually differenced) expression.
    RefPower { expr: AttrExpr, curvature: String },
    Dummy { indicator: String, level: u8, base: u8 },
    LatentMain { latent: String },
    LatentInteraction { latent: String, expr: AttrExpr },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub alternative: Alternative,
    pub coef: String,
    pub basis: TermBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralEntry {
    pub latent: String,
    pub covariate: String,
    pub param: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingSpec {
    pub latent: String,
    pub param: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    pub indicator: String,
    pub intercept: String,
    pub loadings: Vec<LoadingSpec>,
    /// `psi_2, psi_3, psi_4`; `psi_1 = 0`.
    pub thresholds: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Fix { param: String, value: f64 },
    Tie { params: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub latents: Vec<String>,
    pub utility: Vec<TermSpec>,
    pub structural: Vec<StructuralEntry>,
    pub measurement: Vec<IndicatorSpec>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    /// Human-readable row labels keyed by parameter name.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Shipped presets: `model1`, `model2`, `model3`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "model1" => include_str!("../../presets/model1.json"),
            "model2" => include_str!("../../presets/model2.json"),
            "model3" => include_str!("../../presets/model3.json"),
            other => return Err(Error::ModelSpec(format!("unknown preset `{other}`"))),
        };
        Self::from_json(text)
    }
}

/// Reported estimates shipped with the presets (`model1` .. `model3`).
pub fn preset_params(name: &str) -> Result<ParameterVector> {
    let text = match name {
        "model1" => include_str!("../../presets/model1.params.json"),
        "model2" => include_str!("../../presets/model2.params.json"),
        "model3" => include_str!("../../presets/model3.params.json"),
        other => return Err(Error::ModelSpec(format!("unknown preset `{other}`"))),
    };
    ParameterVector::from_json(text)
}

/// Sign-preserving power `sign(d) |d|^alpha`; exactly `d` when `alpha == 1`.
pub fn ref_power(d: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        d
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * d.abs().powf(alpha)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Basis {
    Constant,
    Linear,
    RefPower { alpha: usize },
    Dummy,
    Latent { latent: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Term {
    /// +1 for EV terms, -1 for ICEV terms (utility difference convention).
    pub sign: f64,
    pub alternative: Alternative,
    pub coef: usize,
    pub basis: Basis,
    pub expr: Option<AttrExpr>,
    pub dummy: Option<(usize, u8)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Indicator {
    /// Position in the respondent's indicator array.
    pub slot: usize,
    pub intercept: usize,
    pub loadings: Vec<(usize, usize)>,
    pub thresholds: [usize; 3],
}

/// A compiled model: term list, measurement system and parameter layout.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    layout: ParamLayout,
    pub(crate) terms: Vec<Term>,
    pub(crate) structural: Vec<(usize, Covariate, usize)>,
    pub(crate) indicators: Vec<Indicator>,
}

/// Per-task inputs with every term's basis value precomputed.
#[derive(Debug, Clone)]
pub(crate) struct PreparedTask {
    pub chosen: Option<Alternative>,
    /// Raw basis value per term: expression value, dummy hit, or 1.
    pub basis: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct PreparedRespondent {
    pub id: u32,
    /// Structural covariate dummy per structural entry.
    pub covariates: Vec<f64>,
    pub indicators: [u8; N_INDICATORS],
    pub tasks: Vec<PreparedTask>,
}

fn attribute_value(attr: Attribute, alt: &AlternativeProfile, weekly_km: f64, which: &str) -> Result<f64> {
    Ok(match attr {
        Attribute::PriceLacs => alt.price_lacs,
        Attribute::LogRange100km => (alt.range_km / 100.0).ln(),
        Attribute::WeeklyFuelInr100 => weekly_fuel_cost(alt.running_cost, weekly_km)?,
        Attribute::FastChargeMin => alt.fast_charge_min,
        Attribute::Spacing => alt.charger_spacing_km,
        Attribute::SlowCharge => alt
            .slow_charge_hr
            .ok_or_else(|| Error::AbsentAttribute(format!("slow_charge for {which}")))?,
        Attribute::Parking => f64::from(u8::from(alt.reserved_parking)),
        Attribute::Lane => f64::from(u8::from(alt.special_lane)),
    })
}

/// Value of an attribute expression on a task.
pub fn expr_value(expr: &AttrExpr, task: &ChoiceTask, weekly_km: f64) -> Result<f64> {
    let ev = || attribute_value(expr.attribute, &task.ev, weekly_km, "EV");
    let icev = || attribute_value(expr.attribute, &task.icev, weekly_km, "ICEV");
    Ok(match expr.side {
        Side::Ev => ev()?,
        Side::Icev => icev()?,
        Side::EvMinusIcev => ev()? - icev()?,
        Side::IcevMinusEv => icev()? - ev()?,
    })
}

impl Model {
    pub fn compile(spec: ModelSpec) -> Result<Self> {
        let bad = |m: String| Error::ModelSpec(m);
        if spec.latents.len() != N_LATENT {
            return Err(bad(format!("expected {N_LATENT} latents, got {}", spec.latents.len())));
        }
        let latent = |name: &str| {
            spec.latents
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| bad(format!("unknown latent `{name}`")))
        };
        let mut infos: Vec<ParamInfo> = Vec::new();
        let mut push = |name: &str, kind: ParamKind| -> usize {
            infos.push(ParamInfo {
                name: name.to_string(),
                kind,
                label: spec.labels.get(name).cloned(),
            });
            infos.len() - 1
        };

        let mut terms = Vec::with_capacity(spec.utility.len());
        for t in &spec.utility {
            let sign = match t.alternative {
                Alternative::Ev => 1.0,
                Alternative::Icev => -1.0,
            };
            let coef = push(&t.coef, ParamKind::Real);
            let (basis, expr, dummy) = match &t.basis {
                TermBasis::Constant => (Basis::Constant, None, None),
                TermBasis::Linear { expr } => (Basis::Linear, Some(*expr), None),
                TermBasis::RefPower { expr, curvature } => {
                    let alpha = push(curvature, ParamKind::Curvature);
                    (Basis::RefPower { alpha }, Some(*expr), None)
                }
                TermBasis::Dummy { indicator, level, base } => {
                    let slot = indicator_index(indicator)
                        .ok_or_else(|| bad(format!("unknown indicator `{indicator}`")))?;
                    if !(1..=5).contains(level) || !(1..=5).contains(base) || level == base {
                        return Err(bad(format!("invalid dummy level {level} (base {base}) for `{}`", t.coef)));
                    }
                    (Basis::Dummy, None, Some((slot, *level)))
                }
                TermBasis::LatentMain { latent: l } => (Basis::Latent { latent: latent(l)? }, None, None),
                TermBasis::LatentInteraction { latent: l, expr } => {
                    (Basis::Latent { latent: latent(l)? }, Some(*expr), None)
                }
            };
            terms.push(Term {
                sign,
                alternative: t.alternative,
                coef,
                basis,
                expr,
                dummy,
            });
        }

        let mut structural = Vec::with_capacity(spec.structural.len());
        let mut seen = HashSet::new();
        for s in &spec.structural {
            let r = latent(&s.latent)?;
            let cov: Covariate = s.covariate.parse()?;
            if !seen.insert((r, s.covariate.clone())) {
                return Err(bad(format!("duplicate structural entry {} / {}", s.latent, s.covariate)));
            }
            let p = push(&s.param, ParamKind::Real);
            structural.push((r, cov, p));
        }

        for i in 1..N_LATENT {
            for j in 0..i {
                let name = format!("corr.{}.{}", spec.latents[j], spec.latents[i]);
                push(&name, ParamKind::Correlation { row: i, col: j });
            }
        }

        let mut indicators = Vec::with_capacity(spec.measurement.len());
        let mut seen = HashSet::new();
        for (k, m) in spec.measurement.iter().enumerate() {
            let slot = indicator_index(&m.indicator)
                .ok_or_else(|| bad(format!("unknown indicator `{}`", m.indicator)))?;
            if !seen.insert(slot) {
                return Err(bad(format!("indicator `{}` measured twice", m.indicator)));
            }
            if m.loadings.is_empty() {
                return Err(bad(format!("indicator `{}` has no loadings", m.indicator)));
            }
            let intercept = push(&m.intercept, ParamKind::Real);
            let mut loadings = Vec::with_capacity(m.loadings.len());
            for l in &m.loadings {
                loadings.push((latent(&l.latent)?, push(&l.param, ParamKind::Real)));
            }
            let thresholds = [0, 1, 2].map(|position| {
                push(&m.thresholds[position], ParamKind::Threshold { indicator: k, position })
            });
            indicators.push(Indicator {
                slot,
                intercept,
                loadings,
                thresholds,
            });
        }

        let mut layout = ParamLayout::new(infos, N_LATENT)?;
        let find = |name: &str| {
            layout
                .index_of(name)
                .ok_or_else(|| bad(format!("constraint references unknown parameter `{name}`")))
        };
        let mut fixes = Vec::new();
        let mut ties = Vec::new();
        for c in &spec.constraints {
            match c {
                Constraint::Fix { param, value } => fixes.push((find(param)?, *value)),
                Constraint::Tie { params } => {
                    if params.len() < 2 {
                        return Err(bad("a tie needs at least two parameters".into()));
                    }
                    ties.push(params.iter().map(|p| find(p)).collect::<Result<Vec<_>>>()?);
                }
            }
        }
        layout.resolve(&fixes, &ties)?;
        Ok(Self {
            spec,
            layout,
            terms,
            structural,
            indicators,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::compile(ModelSpec::preset(name)?)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// True when `self` differs from `other` only by dropping constraints.
    pub fn relaxes(&self, other: &Model) -> bool {
        let same_params = self.layout.params().len() == other.layout.params().len()
            && self
                .layout
                .params()
                .iter()
                .zip(other.layout.params())
                .all(|(a, b)| a.name == b.name && a.kind == b.kind);
        if !same_params || self.spec.utility != other.spec.utility
            || self.spec.structural != other.spec.structural
            || self.spec.measurement != other.spec.measurement
        {
            return false;
        }
        // Every constraint binding here must also bind in `other`.
        self.spec.constraints.iter().all(|c| match c {
            Constraint::Fix { param, value } => {
                let i = self.layout.index_of(param).unwrap();
                other.spec.constraints.iter().any(|o| {
                    matches!(o, Constraint::Fix { param: p, value: v } if other.layout.index_of(p) == Some(i) && v == value)
                })
            }
            Constraint::Tie { params } => other.spec.constraints.iter().any(|o| {
                matches!(o, Constraint::Tie { params: ps } if params.iter().all(|p| ps.contains(p)))
            }),
        })
    }

    /// Dense natural vector from named values, validated.
    pub fn dense(&self, params: &ParameterVector) -> Result<Vec<f64>> {
        let d = self.layout.dense(params)?;
        self.layout.validate(&d)?;
        Ok(d)
    }

    /// Like [`Model::dense`], but fixed and tied entries are forced from the
    /// constraints and missing fixed entries are allowed.
    pub fn dense_constrained(&self, params: &ParameterVector) -> Result<Vec<f64>> {
        let mut pv = params.clone();
        for (i, p) in self.layout.params().iter().enumerate() {
            if self.layout.is_fixed(i) && !pv.values.contains_key(&p.name) {
                pv.set(&p.name, 0.0);
            }
        }
        let mut d = self.layout.dense(&pv)?;
        self.layout.apply_constraints(&mut d);
        self.layout.validate(&d)?;
        Ok(d)
    }

    pub(crate) fn prepare(&self, r: &Respondent) -> Result<PreparedRespondent> {
        let tasks = r
            .tasks
            .iter()
            .map(|t| {
                let basis = self
                    .terms
                    .iter()
                    .map(|term| self.basis_value(term, t, r))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedTask {
                    chosen: t.chosen,
                    basis,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedRespondent {
            id: r.respondent_id,
            covariates: self.covariates(&r.demographics),
            indicators: r.indicators,
            tasks,
        })
    }

    fn basis_value(&self, term: &Term, task: &ChoiceTask, r: &Respondent) -> Result<f64> {
        if let Some((slot, level)) = term.dummy {
            return Ok(if r.indicators[slot] == level { 1.0 } else { 0.0 });
        }
        match term.expr {
            Some(e) => expr_value(&e, task, r.weekly_km),
            None => Ok(1.0),
        }
    }

    pub(crate) fn covariates(&self, d: &Demographics) -> Vec<f64> {
        self.structural.iter().map(|(_, c, _)| d.dummy(c)).collect()
    }

    /// Latent means `Pi s` implied by a demographic record.
    pub fn latent_means(&self, theta: &[f64], d: &Demographics) -> [f64; N_LATENT] {
        self.latent_means_from(theta, &self.covariates(d))
    }

    pub(crate) fn latent_means_from(&self, theta: &[f64], s: &[f64]) -> [f64; N_LATENT] {
        let mut mu = [0.0; N_LATENT];
        for (&(r, _, p), &x) in self.structural.iter().zip(s) {
            mu[r] += theta[p] * x;
        }
        mu
    }

    /// Latent-free part of `V_EV - V_ICEV` for a prepared task.
    pub(crate) fn delta_systematic(&self, theta: &[f64], basis: &[f64]) -> f64 {
        let mut v = 0.0;
        for (term, &x) in self.terms.iter().zip(basis) {
            v += term.sign
                * match term.basis {
                    Basis::Constant | Basis::Linear | Basis::Dummy => theta[term.coef] * x,
                    Basis::RefPower { alpha } => theta[term.coef] * ref_power(x, theta[alpha]),
                    Basis::Latent { .. } => 0.0,
                };
        }
        v
    }

    /// Coefficients multiplying each latent in `V_EV - V_ICEV`.
    pub(crate) fn loading_from(&self, theta: &[f64], basis: &[f64]) -> [f64; N_LATENT] {
        let mut c = [0.0; N_LATENT];
        for (term, &x) in self.terms.iter().zip(basis) {
            if let Basis::Latent { latent } = term.basis {
                c[latent] += term.sign * theta[term.coef] * x;
            }
        }
        c
    }

    /// Accumulates into `grad` the derivative of `g_v * dV + g_c . c` for one task.
    pub(crate) fn backprop_task(&self, theta: &[f64], basis: &[f64], g_v: f64, g_c: &[f64; N_LATENT], grad: &mut [f64]) {
        for (term, &x) in self.terms.iter().zip(basis) {
            match term.basis {
                Basis::Constant | Basis::Linear | Basis::Dummy => grad[term.coef] += g_v * term.sign * x,
                Basis::RefPower { alpha } => {
                    let a = theta[alpha];
                    let p = ref_power(x, a);
                    grad[term.coef] += g_v * term.sign * p;
                    if x != 0.0 {
                        grad[alpha] += g_v * term.sign * theta[term.coef] * p * x.abs().ln();
                    }
                }
                Basis::Latent { latent } => grad[term.coef] += g_c[latent] * term.sign * x,
            }
        }
    }

    /// `(V_EV, V_ICEV)` at the given latent values.
    pub fn systematic_utility(
        &self,
        theta: &[f64],
        task: &ChoiceTask,
        respondent: &Respondent,
        latent: &[f64; N_LATENT],
    ) -> Result<(f64, f64)> {
        let mut v = [0.0, 0.0];
        for term in &self.terms {
            let x = self.basis_value(term, task, respondent)?;
            let contribution = match term.basis {
                Basis::Constant | Basis::Linear | Basis::Dummy => theta[term.coef] * x,
                Basis::RefPower { alpha } => theta[term.coef] * ref_power(x, theta[alpha]),
                Basis::Latent { latent: r } => theta[term.coef] * latent[r] * x,
            };
            match term.alternative {
                Alternative::Ev => v[0] += contribution,
                Alternative::Icev => v[1] += contribution,
            }
        }
        Ok((v[0], v[1]))
    }

    /// Per-latent coefficient `c_t` of the utility difference for one task.
    pub fn latent_loading_vector(
        &self,
        theta: &[f64],
        task: &ChoiceTask,
        respondent: &Respondent,
    ) -> Result<[f64; N_LATENT]> {
        let basis = self
            .terms
            .iter()
            .map(|t| self.basis_value(t, task, respondent))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.loading_from(theta, &basis))
    }

    pub fn pack(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.layout.pack(theta)
    }

    pub fn unpack(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.layout.unpack(x)
    }

    pub fn named(&self, theta: &[f64]) -> ParameterVector {
        self.layout.named(theta)
    }
}
