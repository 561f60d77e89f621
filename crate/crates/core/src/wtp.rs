//! Willingness to pay as a ratio of marginal utilities, evaluated at
//! demographic-profile latent means, and the annuity discount-rate converter.

use crate::datamodel::{Demographics, Education, Employment, Gender, IncomeBand, Location, Marital};
use crate::error::{Error, Result};
use crate::modelspec::{Attribute, Basis, Model, ParameterVector, Side, N_LATENT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// Smallest reference deviation at which a curvature term may be differentiated.
pub const SINGULARITY_GUARD: f64 = 1e-6;

/// EV attributes whose willingness to pay can be reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WtpAttribute {
    /// Purchase price, lacs.
    #[serde(rename = "price")]
    Price,
    /// Fast-charging time, minutes.
    #[serde(rename = "fastcharge")]
    FastCharge,
    /// Driving range, km.
    Range,
    /// Weekly operating cost, INR 100 per week.
    Fuel,
}

impl WtpAttribute {
    pub fn as_str(self) -> &'static str {
        match self {
            WtpAttribute::Price => "price",
            WtpAttribute::FastCharge => "fastcharge",
            WtpAttribute::Range => "range",
            WtpAttribute::Fuel => "fuel",
        }
    }

    /// Improvement reported by default: 10 minutes faster charging, 100 km
    /// more range, INR 100 per week cheaper to run.
    pub fn default_change(self) -> f64 {
        match self {
            WtpAttribute::Price => -1.0,
            WtpAttribute::FastCharge => -10.0,
            WtpAttribute::Range => 100.0,
            WtpAttribute::Fuel => -1.0,
        }
    }

    fn model_attribute(self) -> Attribute {
        match self {
            WtpAttribute::Price => Attribute::PriceLacs,
            WtpAttribute::FastCharge => Attribute::FastChargeMin,
            WtpAttribute::Range => Attribute::LogRange100km,
            WtpAttribute::Fuel => Attribute::WeeklyFuelInr100,
        }
    }
}

impl FromStr for WtpAttribute {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "price" => Ok(WtpAttribute::Price),
            "fastcharge" | "fast_charge" => Ok(WtpAttribute::FastCharge),
            "range" => Ok(WtpAttribute::Range),
            "fuel" => Ok(WtpAttribute::Fuel),
            other => Err(Error::UnknownLevel { field: "attribute", level: other.to_string() }),
        }
    }
}

impl fmt::Display for WtpAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attribute levels of one alternative in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointProfile {
    pub price_lacs: f64,
    pub range_km: f64,
    pub fast_charge_min: f64,
    pub weekly_fuel_inr: f64,
}

/// Where marginal utilities are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationPoint {
    pub icev: PointProfile,
    pub ev: PointProfile,
}

impl Default for EvaluationPoint {
    fn default() -> Self {
        Self {
            icev: PointProfile {
                price_lacs: 10.0,
                range_km: 800.0,
                fast_charge_min: 5.0,
                weekly_fuel_inr: 500.0,
            },
            ev: PointProfile {
                price_lacs: 13.0,
                range_km: 200.0,
                fast_charge_min: 30.0,
                weekly_fuel_inr: 400.0,
            },
        }
    }
}

impl EvaluationPoint {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("ICEV price", self.icev.price_lacs),
            ("ICEV range", self.icev.range_km),
            ("ICEV fast-charging time", self.icev.fast_charge_min),
            ("ICEV weekly fuel cost", self.icev.weekly_fuel_inr),
            ("EV price", self.ev.price_lacs),
            ("EV range", self.ev.range_km),
            ("EV fast-charging time", self.ev.fast_charge_min),
            ("EV weekly fuel cost", self.ev.weekly_fuel_inr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive { what, value: v });
            }
        }
        if self.ev.price_lacs <= self.icev.price_lacs {
            return Err(Error::Parameters(format!(
                "EV price {} must exceed ICEV price {}",
                self.ev.price_lacs, self.icev.price_lacs
            )));
        }
        Ok(())
    }

    fn value(&self, attr: Attribute, side: Side) -> Result<f64> {
        let get = |p: &PointProfile| -> Result<f64> {
            Ok(match attr {
                Attribute::PriceLacs => p.price_lacs,
                Attribute::LogRange100km => (p.range_km / 100.0).ln(),
                Attribute::WeeklyFuelInr100 => p.weekly_fuel_inr / 100.0,
                Attribute::FastChargeMin => p.fast_charge_min,
                other => return Err(Error::AbsentAttribute(format!("{other:?} at a WTP evaluation point"))),
            })
        };
        Ok(match side {
            Side::Ev => get(&self.ev)?,
            Side::Icev => get(&self.icev)?,
            Side::EvMinusIcev => get(&self.ev)? - get(&self.icev)?,
            Side::IcevMinusEv => get(&self.icev)? - get(&self.ev)?,
        })
    }
}

/// A named demographic profile; `None` means latent means of zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    #[serde(default)]
    pub demographics: Option<Demographics>,
}

impl Profile {
    pub fn none() -> Self {
        Self { name: "none".into(), demographics: None }
    }

    /// Married (couple) unemployed man in Bangalore, income below 5 lacs,
    /// education below a bachelor's degree.
    pub fn demographics_1() -> Self {
        Self {
            name: "demographics_1".into(),
            demographics: Some(Demographics {
                location: Location::Bangalore,
                gender: Gender::Male,
                marital: Marital::Couple,
                income_band: IncomeBand::Lt5,
                education: Education::BelowBachelor,
                employment: Employment::Unemployed,
            }),
        }
    }

    /// Single self-employed woman in Calcutta, income 20 lacs or more,
    /// master's degree or above.
    pub fn demographics_2() -> Self {
        Self {
            name: "demographics_2".into(),
            demographics: Some(Demographics {
                location: Location::Calcutta,
                gender: Gender::Female,
                marital: Marital::SingleAndOthers,
                income_band: IncomeBand::Ge20,
                education: Education::MastersPlus,
                employment: Employment::SelfEmployed,
            }),
        }
    }
}

/// Latent means `Pi s` of a demographic record, at a zero structural error.
pub fn profile_latent_means(model: &Model, params: &ParameterVector, demographics: &Demographics) -> Result<[f64; N_LATENT]> {
    let theta = model.dense(params)?;
    Ok(model.latent_means(&theta, demographics))
}

/// Marginal-utility calculator bound to one model and parameter vector.
#[derive(Debug, Clone)]
pub struct Wtp<'a> {
    model: &'a Model,
    theta: Vec<f64>,
}

impl<'a> Wtp<'a> {
    pub fn new(model: &'a Model, params: &ParameterVector) -> Result<Self> {
        let theta = model.dense(params)?;
        model.layout().validate(&theta)?;
        Ok(Self { model, theta })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn latent_means(&self, profile: &Profile) -> [f64; N_LATENT] {
        match &profile.demographics {
            Some(d) => self.model.latent_means(&self.theta, d),
            None => [0.0; N_LATENT],
        }
    }

    /// Derivative of `V_EV - V_ICEV` with respect to the EV attribute, per
    /// natural unit (lac, minute, km, INR 100 per week).
    pub fn marginal_utility(&self, point: &EvaluationPoint, attribute: WtpAttribute, latent: &[f64; N_LATENT]) -> Result<f64> {
        point.validate()?;
        let target = attribute.model_attribute();
        let mut total = 0.0;
        for term in &self.model.terms {
            let Some(expr) = term.expr.filter(|e| e.attribute == target) else {
                continue;
            };
            let de = match expr.side {
                Side::Ev | Side::EvMinusIcev => 1.0,
                Side::IcevMinusEv => -1.0,
                Side::Icev => continue,
            };
            let coef = self.theta[term.coef];
            let slope = match term.basis {
                Basis::Linear => coef,
                Basis::RefPower { alpha } => {
                    let a = self.theta[alpha];
                    if a == 1.0 {
                        coef
                    } else {
                        let d = point.value(expr.attribute, expr.side)?;
                        if d.abs() < SINGULARITY_GUARD {
                            return Err(Error::Singularity {
                                attribute: attribute.as_str().to_string(),
                                deviation: d.abs(),
                            });
                        }
                        coef * a * d.abs().powf(a - 1.0)
                    }
                }
                Basis::Latent { latent: r } => coef * latent[r],
                Basis::Constant | Basis::Dummy => 0.0,
            };
            total += term.sign * slope * de;
        }
        // Range enters as log(range / 100 km).
        if attribute == WtpAttribute::Range {
            total /= point.ev.range_km;
        }
        Ok(total)
    }

    /// Price change (lacs) that offsets `unit_change` of the attribute;
    /// positive for improvements.
    pub fn wtp(&self, point: &EvaluationPoint, attribute: WtpAttribute, unit_change: f64, latent: &[f64; N_LATENT]) -> Result<f64> {
        let price = self.marginal_utility(point, WtpAttribute::Price, latent)?;
        if price == 0.0 || !price.is_finite() {
            return Err(Error::ZeroPriceMarginal);
        }
        let m = self.marginal_utility(point, attribute, latent)?;
        Ok(-(m * unit_change) / price)
    }
}

/// Grid for a WTP curve: EV prices crossed with EV attribute levels in
/// natural units (minutes, km, INR per week).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WtpGrid {
    pub ev_prices: Vec<f64>,
    pub attr_values: Vec<f64>,
    /// Reported change; the attribute's default improvement when absent.
    pub unit_change: Option<f64>,
    pub base: EvaluationPoint,
}

impl Default for WtpGrid {
    fn default() -> Self {
        Self {
            ev_prices: vec![11.0, 13.0, 15.0],
            attr_values: Vec::new(),
            unit_change: None,
            base: EvaluationPoint::default(),
        }
    }
}

impl WtpGrid {
    /// Default plot grid for an attribute.
    pub fn for_attribute(attribute: WtpAttribute) -> Self {
        let ev_prices: Vec<f64> = (0..=10).map(|i| 11.0 + 0.5 * f64::from(i)).collect();
        let attr_values: Vec<f64> = match attribute {
            WtpAttribute::Price => vec![13.0],
            WtpAttribute::FastCharge => vec![30.0],
            WtpAttribute::Range => (0..=9).map(|i| 150.0 + 50.0 * f64::from(i)).collect(),
            WtpAttribute::Fuel => (1..=9).map(|i| 50.0 * f64::from(i)).collect(),
        };
        Self { ev_prices, attr_values, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WtpRow {
    pub model: String,
    pub profile: String,
    pub ev_price: f64,
    pub attr_value: f64,
    pub wtp_thousand_inr: f64,
}

fn point_at(base: &EvaluationPoint, attribute: WtpAttribute, ev_price: f64, value: f64) -> EvaluationPoint {
    let mut p = *base;
    p.ev.price_lacs = ev_price;
    match attribute {
        WtpAttribute::Price => p.ev.price_lacs = value,
        WtpAttribute::FastCharge => p.ev.fast_charge_min = value,
        WtpAttribute::Range => p.ev.range_km = value,
        WtpAttribute::Fuel => p.ev.weekly_fuel_inr = value,
    }
    p
}

/// Evaluates WTP over the grid, rows ordered by attribute value then price.
pub fn wtp_curve(calc: &Wtp, attribute: WtpAttribute, grid: &WtpGrid, profile: &Profile) -> Result<Vec<WtpRow>> {
    let latent = calc.latent_means(profile);
    let change = grid.unit_change.unwrap_or_else(|| attribute.default_change());
    let cells: Vec<(f64, f64)> = grid
        .attr_values
        .iter()
        .flat_map(|&v| grid.ev_prices.iter().map(move |&p| (p, v)))
        .collect();
    cells
        .par_iter()
        .map(|&(ev_price, attr_value)| {
            let point = point_at(&grid.base, attribute, ev_price, attr_value);
            let lacs = calc.wtp(&point, attribute, change, &latent)?;
            Ok(WtpRow {
                model: calc.model().name().to_string(),
                profile: profile.name.clone(),
                ev_price,
                attr_value,
                wtp_thousand_inr: lacs * 100.0,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[WtpRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Annual discount rate at which a weekly saving over `years` has present
/// value `wtp_price` (both in INR).
pub fn discount_rate(wtp_price: f64, weekly_saving: f64, years: u32) -> Result<f64> {
    if !(wtp_price > 0.0 && wtp_price.is_finite()) {
        return Err(Error::NonPositive { what: "WTP", value: wtp_price });
    }
    if !(weekly_saving > 0.0 && weekly_saving.is_finite()) {
        return Err(Error::NonPositive { what: "weekly saving", value: weekly_saving });
    }
    if years == 0 {
        return Err(Error::NonPositive { what: "years", value: 0.0 });
    }
    let n = f64::from(years) * 52.0;
    let undiscounted = weekly_saving * n;
    if (wtp_price - undiscounted).abs() <= 1e-9 * undiscounted {
        return Ok(0.0);
    }
    let residual = |i: f64| weekly_saving * (1.0 - (1.0 + i).powf(-n)) / i - wtp_price;
    let (mut lo, mut hi) = (1e-12, 10.0);
    let (flo, fhi) = (residual(lo), residual(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoRoot(format!(
            "annuity of {weekly_saving} per week over {years} years cannot be worth {wtp_price} at a positive rate"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = residual(mid);
        if f.abs() <= 1e-6 {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((1.0 + mid).powi(52) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelspec::preset_params;

    fn calc(name: &str) -> (Model, ParameterVector) {
        (Model::preset(name).unwrap(), preset_params(name).unwrap())
    }

    #[test]
    fn linear_marginals() {
        let (m, p) = calc("model1");
        let w = Wtp::new(&m, &p).unwrap();
        let pt = EvaluationPoint::default();
        let z = [0.0; 3];
        assert_eq!(w.marginal_utility(&pt, WtpAttribute::Price, &z).unwrap(), -0.10);
        assert!((w.marginal_utility(&pt, WtpAttribute::Range, &z).unwrap() - 0.003).abs() < 1e-15);
    }

    #[test]
    fn curvature_price_marginal() {
        let (m, p) = calc("model2");
        let w = Wtp::new(&m, &p).unwrap();
        let got = w.marginal_utility(&EvaluationPoint::default(), WtpAttribute::Price, &[0.0; 3]).unwrap();
        let want = -1.37 * 0.24 * 3f64.powf(-0.76);
        assert!((got - want).abs() < 1e-14, "{got} {want}");
        assert!((got + 0.14267).abs() < 5e-6);
    }

    #[test]
    fn guard_at_zero_deviation() {
        let (m, p) = calc("model2");
        let w = Wtp::new(&m, &p).unwrap();
        let mut pt = EvaluationPoint::default();
        pt.ev.weekly_fuel_inr = 500.0;
        let err = w.wtp(&pt, WtpAttribute::Fuel, -1.0, &[0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Singularity { ref attribute, .. } if attribute == "fuel"));
        // Linear models have no singularity.
        let (m1, p1) = calc("model1");
        assert!(Wtp::new(&m1, &p1).unwrap().wtp(&pt, WtpAttribute::Fuel, -1.0, &[0.0; 3]).is_ok());
    }

    #[test]
    fn profile_means() {
        let (m, p) = calc("model3");
        let base = profile_latent_means(&m, &p, &Demographics::base()).unwrap();
        assert_eq!(base, [0.0; 3]);
        let d1 = profile_latent_means(&m, &p, &Profile::demographics_1().demographics.unwrap()).unwrap();
        assert!((d1[0] - (0.259 + 0.163 + 0.018 + 0.025 + 0.248)).abs() < 1e-12);
        let d2 = profile_latent_means(&m, &p, &Profile::demographics_2().demographics.unwrap()).unwrap();
        assert!((d2[2] - (0.235 + 0.188 + 0.281)).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_boundary_and_domain() {
        assert_eq!(discount_rate(78_000.0, 100.0, 15).unwrap(), 0.0);
        assert!(matches!(discount_rate(80_000.0, 100.0, 15), Err(Error::NoRoot(_))));
        assert!(discount_rate(0.0, 100.0, 15).is_err());
        assert!(discount_rate(9_300.0, -1.0, 15).is_err());
    }

    #[test]
    fn discount_rate_solves_annuity() {
        let r = discount_rate(20_000.0, 100.0, 10).unwrap();
        let i = (1.0 + r).powf(1.0 / 52.0) - 1.0;
        let pv = 100.0 * (1.0 - (1.0 + i).powf(-520.0)) / i;
        assert!((pv - 20_000.0).abs() < 1e-5);
    }

    #[test]
    fn curve_rows_and_csv() {
        let (m, p) = calc("model1");
        let w = Wtp::new(&m, &p).unwrap();
        let grid = WtpGrid::for_attribute(WtpAttribute::FastCharge);
        let rows = wtp_curve(&w, WtpAttribute::FastCharge, &grid, &Profile::none()).unwrap();
        assert_eq!(rows.len(), grid.ev_prices.len());
        assert!(rows.iter().all(|r| (r.wtp_thousand_inr - 20.0).abs() < 1e-9));
        let mut buf = Vec::new();
        write_curve_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("model,profile,ev_price,attr_value,wtp_thousand_inr\n"));
    }
}
