//! Respondent, task and dataset records plus CSV ingestion.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const SCHEMA_VERSION: &str = "refchoice-dataset/1";
pub const N_INDICATORS: usize = 11;
pub const INDICATOR_NAMES: [&str; N_INDICATORS] = [
    "ind01", "ind02", "ind03", "ind04", "ind05", "ind06", "ind07", "ind08", "ind09", "ind10",
    "ind11",
];

/// Index of an indicator name (`ind01` .. `ind11`).
pub fn indicator_index(name: &str) -> Option<usize> {
    INDICATOR_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alternative {
    #[serde(rename = "EV")]
    Ev,
    #[serde(rename = "ICEV")]
    Icev,
}

macro_rules! vocabulary {
    ($(#[$m:meta])* $name:ident, $field:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const FIELD: &'static str = $field;

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::UnknownLevel { field: $field, level: other.to_string() }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

vocabulary!(
    /// Respondent location; base category `delhi_and_others`.
    Location, "location", {
    Mumbai => "mumbai",
    Bangalore => "bangalore",
    Chennai => "chennai",
    Calcutta => "calcutta",
    DelhiAndOthers => "delhi_and_others",
});
vocabulary!(Gender, "gender", { Male => "male", Female => "female" });
vocabulary!(Marital, "marital", {
    SingleAndOthers => "single_and_others",
    Couple => "couple",
    CoupleWithKid => "couple_with_kid",
});
vocabulary!(
    /// Annual household income in lacs; base category `ge20`.
    IncomeBand, "income_band", {
    Lt5 => "lt5",
    From5To10 => "5_10",
    From10To15 => "10_15",
    From15To20 => "15_20",
    Ge20 => "ge20",
});
vocabulary!(Education, "education", {
    BelowBachelor => "below_bachelor",
    Bachelor => "bachelor",
    MastersPlus => "masters_plus",
});
vocabulary!(Employment, "employment", {
    Private => "private",
    Government => "government",
    SelfEmployed => "self_employed",
    Unemployed => "unemployed",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Demographics {
    pub location: Location,
    pub gender: Gender,
    pub marital: Marital,
    pub income_band: IncomeBand,
    pub education: Education,
    pub employment: Employment,
}

impl Demographics {
    /// The all-base profile.
    pub fn base() -> Self {
        Self {
            location: Location::DelhiAndOthers,
            gender: Gender::Male,
            marital: Marital::SingleAndOthers,
            income_band: IncomeBand::Ge20,
            education: Education::MastersPlus,
            employment: Employment::Private,
        }
    }

    /// Value (0 or 1) of a covariate dummy for `field = level`.
    pub fn dummy(&self, covariate: &Covariate) -> f64 {
        let hit = match *covariate {
            Covariate::Location(v) => self.location == v,
            Covariate::Gender(v) => self.gender == v,
            Covariate::Marital(v) => self.marital == v,
            Covariate::Income(v) => self.income_band == v,
            Covariate::Education(v) => self.education == v,
            Covariate::Employment(v) => self.employment == v,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }
}

/// A structural-equation dummy regressor, written `field=level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Covariate {
    Location(Location),
    Gender(Gender),
    Marital(Marital),
    Income(IncomeBand),
    Education(Education),
    Employment(Employment),
}

impl FromStr for Covariate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (field, level) = s.split_once('=').ok_or_else(|| Error::UnknownLevel {
            field: "covariate",
            level: s.to_string(),
        })?;
        Ok(match field.trim() {
            "location" => Covariate::Location(level.parse()?),
            "gender" => Covariate::Gender(level.parse()?),
            "marital" => Covariate::Marital(level.parse()?),
            "income_band" => Covariate::Income(level.parse()?),
            "education" => Covariate::Education(level.parse()?),
            "employment" => Covariate::Employment(level.parse()?),
            _ => {
                return Err(Error::UnknownLevel {
                    field: "covariate",
                    level: s.to_string(),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeProfile {
    /// On-road price in lacs (1 lac = INR 100,000).
    pub price_lacs: f64,
    /// INR per km.
    pub running_cost: f64,
    pub range_km: f64,
    /// Hours; absent for ICEV.
    pub slow_charge_hr: Option<f64>,
    pub fast_charge_min: f64,
    pub charger_spacing_km: f64,
    pub reserved_parking: bool,
    pub special_lane: bool,
}

impl AlternativeProfile {
    fn validate(&self) -> std::result::Result<(), &'static str> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.price_lacs) {
            return Err("price must be positive");
        }
        if !positive(self.range_km) {
            return Err("range must be positive");
        }
        if !positive(self.fast_charge_min) {
            return Err("fast charge time must be positive");
        }
        if !positive(self.running_cost) {
            return Err("running cost must be positive");
        }
        if let Some(s) = self.slow_charge_hr {
            if !positive(s) {
                return Err("slow charge time must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceTask {
    pub task_id: u32,
    pub icev: AlternativeProfile,
    pub ev: AlternativeProfile,
    pub chosen: Option<Alternative>,
}

impl ChoiceTask {
    /// Checks the profile domains and the five EV/ICEV comparison relations.
    pub fn validate(&self, respondent: u32) -> Result<()> {
        let fail = |relation: &'static str| Error::ComparisonRelation {
            respondent,
            task: self.task_id,
            relation,
        };
        self.icev.validate().map_err(fail)?;
        self.ev.validate().map_err(fail)?;
        if self.icev.slow_charge_hr.is_some() {
            return Err(fail("ICEV has no slow charging time"));
        }
        if !(self.ev.price_lacs > self.icev.price_lacs) {
            return Err(fail("ev.price > icev.price"));
        }
        if !(self.ev.range_km < self.icev.range_km) {
            return Err(fail("ev.range < icev.range"));
        }
        if !(self.ev.fast_charge_min > self.icev.fast_charge_min) {
            return Err(fail("ev.fast_charge > icev.fast_charge"));
        }
        if !(self.ev.running_cost < self.icev.running_cost) {
            return Err(fail("ev.running_cost < icev.running_cost"));
        }
        if !(self.ev.charger_spacing_km > self.icev.charger_spacing_km) {
            return Err(fail("ev.charger_spacing > icev.charger_spacing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub respondent_id: u32,
    pub demographics: Demographics,
    pub reported_icev_price_lacs: f64,
    pub weekly_km: f64,
    /// Ordinal responses for `ind01` .. `ind11`, each in 1..=5.
    pub indicators: [u8; N_INDICATORS],
    pub tasks: Vec<ChoiceTask>,
}

impl Respondent {
    pub fn validate(&self) -> Result<()> {
        for (i, &v) in self.indicators.iter().enumerate() {
            if !(1..=5).contains(&v) {
                return Err(Error::IndicatorDomain {
                    respondent: self.respondent_id,
                    indicator: INDICATOR_NAMES[i].to_string(),
                    value: v as i64,
                });
            }
        }
        if !(self.weekly_km.is_finite() && self.weekly_km > 0.0) {
            return Err(Error::InvalidDataset(format!(
                "respondent {}: weekly_km must be positive",
                self.respondent_id
            )));
        }
        if !(self.reported_icev_price_lacs.is_finite() && self.reported_icev_price_lacs > 0.0) {
            return Err(Error::InvalidDataset(format!(
                "respondent {}: reported ICEV price must be positive",
                self.respondent_id
            )));
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "respondent {} has no choice tasks",
                self.respondent_id
            )));
        }
        let mut seen = HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.task_id) {
                return Err(Error::InvalidDataset(format!(
                    "respondent {}: duplicate task id {}",
                    self.respondent_id, t.task_id
                )));
            }
            t.validate(self.respondent_id)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: String,
    pub respondents: Vec<Respondent>,
}

impl Dataset {
    /// Builds a dataset, sorting respondents by id and validating every record.
    pub fn new(mut respondents: Vec<Respondent>) -> Result<Self> {
        respondents.sort_by_key(|r| r.respondent_id);
        for w in respondents.windows(2) {
            if w[0].respondent_id == w[1].respondent_id {
                return Err(Error::InvalidDataset(format!(
                    "duplicate respondent id {}",
                    w[0].respondent_id
                )));
            }
        }
        for r in &respondents {
            r.validate()?;
        }
        Ok(Self {
            schema: SCHEMA_VERSION.to_string(),
            respondents,
        })
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    pub fn n_tasks(&self) -> usize {
        self.respondents.iter().map(|r| r.tasks.len()).sum()
    }
}

/// Weekly operating cost in units of INR 100.
pub fn weekly_fuel_cost(running_cost: f64, weekly_km: f64) -> Result<f64> {
    if !(running_cost > 0.0) {
        return Err(Error::NonPositive {
            what: "running cost",
            value: running_cost,
        });
    }
    if !(weekly_km > 0.0) {
        return Err(Error::NonPositive {
            what: "weekly km",
            value: weekly_km,
        });
    }
    Ok(running_cost * weekly_km / 100.0)
}

mod yes_no {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *v { "yes" } else { "no" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.trim() {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(serde::de::Error::custom(format!(
                "expected yes/no, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RespondentRow {
    respondent_id: u32,
    location: Location,
    gender: Gender,
    marital: Marital,
    income_band: IncomeBand,
    education: Education,
    employment: Employment,
    reported_icev_price_lacs: f64,
    weekly_km: f64,
    ind01: i64,
    ind02: i64,
    ind03: i64,
    ind04: i64,
    ind05: i64,
    ind06: i64,
    ind07: i64,
    ind08: i64,
    ind09: i64,
    ind10: i64,
    ind11: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskRow {
    respondent_id: u32,
    task_id: u32,
    icev_price_lacs: f64,
    icev_run_cost: f64,
    icev_range_km: f64,
    icev_fast_min: f64,
    icev_spacing_km: f64,
    ev_price_lacs: f64,
    ev_run_cost: f64,
    ev_range_km: f64,
    ev_slow_hr: Option<f64>,
    ev_fast_min: f64,
    ev_spacing_km: f64,
    #[serde(with = "yes_no")]
    ev_parking: bool,
    #[serde(with = "yes_no")]
    ev_lane: bool,
    chosen: Option<Alternative>,
}

impl TaskRow {
    fn from_task(respondent_id: u32, t: &ChoiceTask) -> Self {
        Self {
            respondent_id,
            task_id: t.task_id,
            icev_price_lacs: t.icev.price_lacs,
            icev_run_cost: t.icev.running_cost,
            icev_range_km: t.icev.range_km,
            icev_fast_min: t.icev.fast_charge_min,
            icev_spacing_km: t.icev.charger_spacing_km,
            ev_price_lacs: t.ev.price_lacs,
            ev_run_cost: t.ev.running_cost,
            ev_range_km: t.ev.range_km,
            ev_slow_hr: t.ev.slow_charge_hr,
            ev_fast_min: t.ev.fast_charge_min,
            ev_spacing_km: t.ev.charger_spacing_km,
            ev_parking: t.ev.reserved_parking,
            ev_lane: t.ev.special_lane,
            chosen: t.chosen,
        }
    }

    fn into_task(self) -> ChoiceTask {
        ChoiceTask {
            task_id: self.task_id,
            icev: AlternativeProfile {
                price_lacs: self.icev_price_lacs,
                running_cost: self.icev_run_cost,
                range_km: self.icev_range_km,
                slow_charge_hr: None,
                fast_charge_min: self.icev_fast_min,
                charger_spacing_km: self.icev_spacing_km,
                reserved_parking: false,
                special_lane: false,
            },
            ev: AlternativeProfile {
                price_lacs: self.ev_price_lacs,
                running_cost: self.ev_run_cost,
                range_km: self.ev_range_km,
                slow_charge_hr: self.ev_slow_hr,
                fast_charge_min: self.ev_fast_min,
                charger_spacing_km: self.ev_spacing_km,
                reserved_parking: self.ev_parking,
                special_lane: self.ev_lane,
            },
            chosen: self.chosen,
        }
    }
}

fn parse_error(file: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Parse {
        file: file.display().to_string(),
        row,
        message,
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(v) => out.push((out.len() + 2, v)),
            Err(e) => return Err(parse_error(path, e)),
        }
    }
    Ok(out)
}

/// Reads and validates `respondents.csv` and `tasks.csv`.
pub fn load_dataset(respondents_file: &Path, tasks_file: &Path) -> Result<Dataset> {
    let resp_rows: Vec<(usize, RespondentRow)> = read_rows(respondents_file)?;
    let task_rows: Vec<(usize, TaskRow)> = read_rows(tasks_file)?;

    let mut tasks: BTreeMap<u32, Vec<ChoiceTask>> = BTreeMap::new();
    for (_, row) in task_rows {
        tasks.entry(row.respondent_id).or_default().push(row.into_task());
    }

    let mut respondents = Vec::with_capacity(resp_rows.len());
    for (line, r) in resp_rows {
        let raw = [
            r.ind01, r.ind02, r.ind03, r.ind04, r.ind05, r.ind06, r.ind07, r.ind08, r.ind09,
            r.ind10, r.ind11,
        ];
        let mut indicators = [0u8; N_INDICATORS];
        for (i, &v) in raw.iter().enumerate() {
            if !(1..=5).contains(&v) {
                return Err(Error::IndicatorDomain {
                    respondent: r.respondent_id,
                    indicator: INDICATOR_NAMES[i].to_string(),
                    value: v,
                });
            }
            indicators[i] = v as u8;
        }
        let own = tasks.remove(&r.respondent_id).unwrap_or_default();
        if own.is_empty() {
            return Err(Error::Parse {
                file: respondents_file.display().to_string(),
                row: line,
                message: format!("respondent {} has no tasks", r.respondent_id),
            });
        }
        respondents.push(Respondent {
            respondent_id: r.respondent_id,
            demographics: Demographics {
                location: r.location,
                gender: r.gender,
                marital: r.marital,
                income_band: r.income_band,
                education: r.education,
                employment: r.employment,
            },
            reported_icev_price_lacs: r.reported_icev_price_lacs,
            weekly_km: r.weekly_km,
            indicators,
            tasks: own,
        });
    }
    if let Some((id, _)) = tasks.into_iter().next() {
        return Err(Error::InvalidDataset(format!(
            "tasks reference unknown respondent {id}"
        )));
    }
    Dataset::new(respondents)
}

/// Writes the two CSV files in the schema read by [`load_dataset`].
pub fn write_dataset(dataset: &Dataset, respondents_file: &Path, tasks_file: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(respondents_file)?;
    for r in &dataset.respondents {
        let i = r.indicators.map(|v| v as i64);
        let d = &r.demographics;
        w.serialize(RespondentRow {
            respondent_id: r.respondent_id,
            location: d.location,
            gender: d.gender,
            marital: d.marital,
            income_band: d.income_band,
            education: d.education,
            employment: d.employment,
            reported_icev_price_lacs: r.reported_icev_price_lacs,
            weekly_km: r.weekly_km,
            ind01: i[0],
            ind02: i[1],
            ind03: i[2],
            ind04: i[3],
            ind05: i[4],
            ind06: i[5],
            ind07: i[6],
            ind08: i[7],
            ind09: i[8],
            ind10: i[9],
            ind11: i[10],
        })?;
    }
    w.flush()?;
    write_tasks(
        dataset
            .respondents
            .iter()
            .flat_map(|r| r.tasks.iter().map(move |t| (r.respondent_id, t))),
        tasks_file,
    )
}

/// Writes task rows only (used by the design generator before choices exist).
pub fn write_tasks<'a>(
    rows: impl IntoIterator<Item = (u32, &'a ChoiceTask)>,
    tasks_file: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(tasks_file)?;
    for (id, t) in rows {
        w.serialize(TaskRow::from_task(id, t))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn sample_task() -> ChoiceTask {
        ChoiceTask {
            task_id: 1,
            icev: AlternativeProfile {
                price_lacs: 8.0,
                running_cost: 5.0,
                range_km: 800.0,
                slow_charge_hr: None,
                fast_charge_min: 10.0,
                charger_spacing_km: 1.0,
                reserved_parking: false,
                special_lane: false,
            },
            ev: AlternativeProfile {
                price_lacs: 10.4,
                running_cost: 0.5,
                range_km: 200.0,
                slow_charge_hr: Some(10.0),
                fast_charge_min: 90.0,
                charger_spacing_km: 7.0,
                reserved_parking: false,
                special_lane: true,
            },
            chosen: Some(Alternative::Ev),
        }
    }

    pub fn respondent(id: u32, tasks: Vec<ChoiceTask>) -> Respondent {
        Respondent {
            respondent_id: id,
            demographics: Demographics::base(),
            reported_icev_price_lacs: 8.0,
            weekly_km: 230.0,
            indicators: [4, 4, 4, 3, 3, 3, 4, 4, 3, 3, 3],
            tasks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn write_pair(ds: &Dataset) -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let r = dir.path().join("respondents.csv");
        let t = dir.path().join("tasks.csv");
        write_dataset(ds, &r, &t).unwrap();
        (dir, r, t)
    }

    fn two_by_three() -> Dataset {
        let mk = |id| {
            let tasks = (1..=3)
                .map(|k| {
                    let mut t = sample_task();
                    t.task_id = k;
                    t.ev.running_cost = 0.5 * k as f64;
                    t
                })
                .collect();
            respondent(id, tasks)
        };
        Dataset::new(vec![mk(2), mk(1)]).unwrap()
    }

    #[test]
    fn round_trip_is_field_for_field() {
        let ds = two_by_three();
        let (_d, r, t) = write_pair(&ds);
        let back = load_dataset(&r, &t).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back, ds);
        let (_d2, r2, t2) = write_pair(&back);
        assert_eq!(std::fs::read(&r).unwrap(), std::fs::read(&r2).unwrap());
        assert_eq!(std::fs::read(&t).unwrap(), std::fs::read(&t2).unwrap());
    }

    #[test]
    fn comparison_relation_violation_names_task() {
        let mut ds = two_by_three();
        ds.respondents[0].tasks[1].ev.price_lacs = 7.5;
        let (_d, r, t) = write_pair(&ds);
        match load_dataset(&r, &t) {
            Err(Error::ComparisonRelation { respondent, task, relation }) => {
                assert_eq!((respondent, task), (1, 2));
                assert!(relation.contains("price"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn indicator_out_of_domain() {
        let ds = two_by_three();
        let (_d, r, t) = write_pair(&ds);
        let text = std::fs::read_to_string(&r).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut cols: Vec<&str> = lines[1].split(',').collect();
        let n = cols.len();
        cols[n - 3] = "6";
        lines[1] = cols.join(",");
        std::fs::write(&r, lines.join("\n") + "\n").unwrap();
        match load_dataset(&r, &t) {
            Err(Error::IndicatorDomain { indicator, respondent, value }) => {
                assert_eq!(indicator, "ind09");
                assert_eq!(respondent, 1);
                assert_eq!(value, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_level_and_parse_row() {
        let ds = two_by_three();
        let (_d, r, t) = write_pair(&ds);
        let text = std::fs::read_to_string(&r).unwrap().replacen("delhi_and_others", "pune", 1);
        std::fs::write(&r, text).unwrap();
        let err = load_dataset(&r, &t).unwrap_err();
        match err {
            Error::Parse { row, message, .. } => {
                assert_eq!(row, 2);
                assert!(message.contains("pune"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weekly_fuel_cost_units() {
        assert_eq!(weekly_fuel_cost(5.0, 100.0).unwrap(), 5.0);
        assert!((weekly_fuel_cost(0.5, 230.0).unwrap() - 1.15).abs() < 1e-15);
        assert!(weekly_fuel_cost(3.0, 0.0).is_err());
        assert!(weekly_fuel_cost(-1.0, 10.0).is_err());
    }

    #[test]
    fn covariate_parsing() {
        let c: Covariate = "location=mumbai".parse().unwrap();
        assert_eq!(c, Covariate::Location(Location::Mumbai));
        assert!("location=pune".parse::<Covariate>().is_err());
        assert!("age=30".parse::<Covariate>().is_err());
        let mut d = Demographics::base();
        assert_eq!(d.dummy(&c), 0.0);
        d.location = Location::Mumbai;
        assert_eq!(d.dummy(&c), 1.0);
    }
}
