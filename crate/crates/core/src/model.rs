//! Domain values: half-point scores, weights, criteria and schemas.
//!
//! Scores live on the lattice {0.0, 0.5, ..., 10.0} and are stored as an
//! integer count of half points so score arithmetic stays exact until
//! weights are applied.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of half points in a perfect score.
pub const MAX_HALF_UNITS: u8 = 20;

/// Every schema scores a plan on exactly this many criteria.
pub const CRITERIA: usize = 3;

/// A score on the half-point lattice between 0 and 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ScoreValue(u8);

impl ScoreValue {
    pub const MIN: ScoreValue = ScoreValue(0);
    pub const MAX: ScoreValue = ScoreValue(MAX_HALF_UNITS);
    pub const MIDPOINT: ScoreValue = ScoreValue(10);

    pub fn from_half_units(half_units: u8) -> Result<Self> {
        if half_units > MAX_HALF_UNITS {
            return Err(Error::OutOfRange(format!("{} half points", half_units)));
        }
        Ok(ScoreValue(half_units))
    }

    pub fn half_units(self) -> u8 {
        self.0
    }

    /// The displayed score, e.g. `7.5`.
    pub fn value<T: Scalar>(self) -> T {
        T::from_u8(self.0).unwrap() / T::lit(2.0)
    }

    /// Every admissible score in ascending order.
    pub fn lattice() -> impl Iterator<Item = ScoreValue> {
        (0..=MAX_HALF_UNITS).map(ScoreValue)
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 2, if self.0 % 2 == 1 { 5 } else { 0 })
    }
}

/// Parses `"7"`, `"7.0"` or `"7.5"` style decimals into a signed half-point
/// count. Anything off the lattice is rejected.
pub(crate) fn parse_half_points(text: &str, allow_sign: bool) -> Option<i32> {
    let (negative, body) = match text.as_bytes().first() {
        Some(b'+') if allow_sign => (false, &text[1..]),
        Some(b'-') if allow_sign => (true, &text[1..]),
        _ => (false, text),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, Some(f)),
        None => (body, None),
    };
    if whole.is_empty() || whole.len() > 2 || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: i32 = whole.parse().ok()?;
    let half = match frac {
        None | Some("0") => 0,
        Some("5") => 1,
        _ => return None,
    };
    let units = whole * 2 + half;
    Some(if negative { -units } else { units })
}

impl FromStr for ScoreValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let units = parse_half_points(s, false)
            .ok_or_else(|| Error::validation(format!("`{}` is not a half-point score", s)))?;
        if units > MAX_HALF_UNITS as i32 {
            return Err(Error::OutOfRange(s.to_string()));
        }
        Ok(ScoreValue(units as u8))
    }
}

impl Serialize for ScoreValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LatticeRepr {
    Text(String),
    Number(f64),
}

impl LatticeRepr {
    fn half_points(&self, signed: bool) -> std::result::Result<i32, String> {
        match self {
            LatticeRepr::Text(t) => {
                parse_half_points(t, signed).ok_or_else(|| format!("`{}` is not on the half-point lattice", t))
            }
            LatticeRepr::Number(n) => {
                let doubled = n * 2.0;
                if doubled.fract() != 0.0 || !doubled.is_finite() || (!signed && *n < 0.0) {
                    return Err(format!("{} is not on the half-point lattice", n));
                }
                if doubled.abs() > 1000.0 {
                    return Err(format!("{} is out of range", n));
                }
                Ok(doubled as i32)
            }
        }
    }
}

impl<'de> Deserialize<'de> for ScoreValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let units = LatticeRepr::deserialize(d)?.half_points(false).map_err(D::Error::custom)?;
        u8::try_from(units)
            .ok()
            .and_then(|u| ScoreValue::from_half_units(u).ok())
            .ok_or_else(|| D::Error::custom(format!("score {} half points out of range", units)))
    }
}

/// Rounds `x` to the nearest half point. Midpoints round up.
pub fn quantize<T: Scalar>(x: T) -> Result<ScoreValue> {
    if x.is_nan() || x < T::zero() || x > T::lit(10.0) {
        return Err(Error::OutOfRange(format!("{}", x)));
    }
    let units = (x * T::lit(2.0) + T::lit(0.5)).floor();
    let units = units.to_u8().unwrap().min(MAX_HALF_UNITS);
    Ok(ScoreValue(units))
}

/// A signed score change in half points, bounded by the score range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ScoreDelta(i8);

impl ScoreDelta {
    pub const ZERO: ScoreDelta = ScoreDelta(0);

    pub fn from_half_units(half_units: i32) -> Result<Self> {
        if half_units.abs() > MAX_HALF_UNITS as i32 {
            return Err(Error::OutOfRange(format!("delta of {} half points", half_units)));
        }
        Ok(ScoreDelta(half_units as i8))
    }

    pub fn between(before: ScoreValue, after: ScoreValue) -> Self {
        ScoreDelta(after.0 as i8 - before.0 as i8)
    }

    pub fn half_units(self) -> i32 {
        self.0 as i32
    }

    pub fn value<T: Scalar>(self) -> T {
        T::from_i8(self.0).unwrap() / T::lit(2.0)
    }
}

impl fmt::Display for ScoreDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.0.signum() {
            1 => "+",
            -1 => "-",
            _ => "",
        };
        let mag = self.0.unsigned_abs();
        write!(f, "{}{}.{}", sign, mag / 2, if mag % 2 == 1 { 5 } else { 0 })
    }
}

impl FromStr for ScoreDelta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let units = parse_half_points(s, true)
            .ok_or_else(|| Error::validation(format!("`{}` is not a signed half-point delta", s)))?;
        ScoreDelta::from_half_units(units)
    }
}

impl Serialize for ScoreDelta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScoreDelta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let units = LatticeRepr::deserialize(d)?.half_points(true).map_err(D::Error::custom)?;
        ScoreDelta::from_half_units(units).map_err(D::Error::custom)
    }
}

/// One score per criterion, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(pub [ScoreValue; CRITERIA]);

impl ScoreVector {
    pub fn new(scores: [ScoreValue; CRITERIA]) -> Self {
        ScoreVector(scores)
    }

    pub fn from_half_units(units: [u8; CRITERIA]) -> Result<Self> {
        Ok(ScoreVector([
            ScoreValue::from_half_units(units[0])?,
            ScoreValue::from_half_units(units[1])?,
            ScoreValue::from_half_units(units[2])?,
        ]))
    }

    /// Quantizes each of three displayed values.
    pub fn from_values<T: Scalar>(values: [T; CRITERIA]) -> Result<Self> {
        Ok(ScoreVector([quantize(values[0])?, quantize(values[1])?, quantize(values[2])?]))
    }

    pub fn scores(&self) -> &[ScoreValue; CRITERIA] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = ScoreValue> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for ScoreVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.0[0], self.0[1], self.0[2])
    }
}

/// Nonnegative criterion weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector<T>([T; CRITERIA]);

impl<T: Scalar> WeightVector<T> {
    /// Accepts already-normalized weights, checking every invariant.
    pub fn new(weights: [T; CRITERIA]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::validation("weights must be finite and nonnegative"));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum - T::one()).abs() > T::weight_tolerance() {
            return Err(Error::validation(format!("weights sum to {}, not 1", sum)));
        }
        if weights.iter().all(|w| w.is_zero()) {
            return Err(Error::validation("at least one weight must be positive"));
        }
        Ok(WeightVector(weights))
    }

    pub fn equal() -> Self {
        let third = T::one() / T::lit(3.0);
        WeightVector([third; CRITERIA])
    }

    pub fn weights(&self) -> &[T; CRITERIA] {
        &self.0
    }

    pub fn get(&self, i: usize) -> T {
        self.0[i]
    }

    /// Weighted sum of signed per-criterion score changes.
    pub fn weighted_gain(&self, deltas: &[ScoreDelta; CRITERIA]) -> T {
        self.0.iter().zip(deltas).map(|(w, d)| *w * d.value::<T>()).sum()
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for WeightVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = <[T; CRITERIA]>::deserialize(d)?;
        WeightVector::new(raw).map_err(D::Error::custom)
    }
}

/// Scales raw nonnegative importances so they sum to one.
pub fn normalize_weights<T: Scalar>(raw: [T; CRITERIA]) -> Result<WeightVector<T>> {
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::validation("weights must be finite"));
    }
    if raw.iter().any(|w| *w < T::zero()) {
        return Err(Error::validation("weights must be nonnegative"));
    }
    let sum: T = raw.iter().copied().sum();
    if sum <= T::zero() {
        return Err(Error::validation("weights must not all be zero"));
    }
    Ok(WeightVector(raw.map(|w| w / sum)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl Criterion {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Result<Self> {
        let c = Criterion { name: name.into(), description: description.into() };
        c.validate()?;
        Ok(c)
    }

    pub fn named(name: impl Into<String>) -> Result<Self> {
        Criterion::new(name, "")
    }

    fn validate(&self) -> Result<()> {
        let name = self.name.trim();
        if name.is_empty() {
            return Err(Error::validation("criterion name must not be empty"));
        }
        if self.name.chars().count() > 64 {
            return Err(Error::validation("criterion name exceeds 64 characters"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaPreset {
    IronTriangle,
    Eisenhower,
    EaseEffect,
}

impl SchemaPreset {
    pub const ALL: [SchemaPreset; 3] = [SchemaPreset::IronTriangle, SchemaPreset::Eisenhower, SchemaPreset::EaseEffect];

    pub fn id(self) -> &'static str {
        match self {
            SchemaPreset::IronTriangle => "iron_triangle",
            SchemaPreset::Eisenhower => "eisenhower",
            SchemaPreset::EaseEffect => "ease_effect",
        }
    }

    /// Criteria the preset fixes. Two-factor presets leave the third to the caller.
    pub fn fixed_criteria(self) -> Vec<Criterion> {
        let c = |n: &str, d: &str| Criterion { name: n.into(), description: d.into() };
        match self {
            SchemaPreset::IronTriangle => vec![
                c("speed", "How quickly the plan delivers its outcome."),
                c("quality", "How good the delivered outcome is."),
                c("cost", "Cost efficiency; higher means cheaper to carry out."),
            ],
            SchemaPreset::Eisenhower => vec![
                c("importance", "How much the plan matters to the goal."),
                c("urgency", "How well the plan addresses time-critical needs."),
            ],
            SchemaPreset::EaseEffect => vec![
                c("impact", "The effect the plan has on the goal."),
                c("ease", "Ease of execution; higher means less effort required."),
            ],
        }
    }

    pub fn needs_third_criterion(self) -> bool {
        self.fixed_criteria().len() < CRITERIA
    }
}

impl FromStr for SchemaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemaPreset::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::NotFound(format!("unknown schema preset `{}`", s)))
    }
}

impl fmt::Display for SchemaPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoringSchema {
    criteria: [Criterion; CRITERIA],
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<SchemaPreset>,
}

impl ScoringSchema {
    pub fn new(criteria: [Criterion; CRITERIA]) -> Result<Self> {
        Self::build(criteria, None)
    }

    fn build(criteria: [Criterion; CRITERIA], preset: Option<SchemaPreset>) -> Result<Self> {
        for c in &criteria {
            c.validate()?;
        }
        for i in 0..CRITERIA {
            for j in i + 1..CRITERIA {
                if criteria[i].name.trim().to_lowercase() == criteria[j].name.trim().to_lowercase() {
                    return Err(Error::validation(format!("duplicate criterion name `{}`", criteria[i].name)));
                }
            }
        }
        Ok(ScoringSchema { criteria, preset })
    }

    pub fn criteria(&self) -> &[Criterion; CRITERIA] {
        &self.criteria
    }

    pub fn preset(&self) -> Option<SchemaPreset> {
        self.preset
    }

    pub fn names(&self) -> [&str; CRITERIA] {
        [&self.criteria[0].name, &self.criteria[1].name, &self.criteria[2].name]
    }
}

impl<'de> Deserialize<'de> for ScoringSchema {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        // either explicit criteria, or a preset plus an optional third criterion
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            criteria: Option<[Criterion; CRITERIA]>,
            #[serde(default)]
            preset: Option<SchemaPreset>,
            #[serde(default)]
            third_criterion: Option<Criterion>,
        }
        let raw = Raw::deserialize(d)?;
        match (raw.criteria, raw.preset) {
            (Some(criteria), preset) if raw.third_criterion.is_none() => {
                ScoringSchema::build(criteria, preset).map_err(D::Error::custom)
            }
            (None, Some(preset)) => preset_schema(preset.id(), raw.third_criterion).map_err(D::Error::custom),
            _ => Err(D::Error::custom("schema needs `criteria`, or `preset` with an optional `third_criterion`")),
        }
    }
}

/// Builds a schema from one of the built-in presets.
pub fn preset_schema(preset_id: &str, third_criterion: Option<Criterion>) -> Result<ScoringSchema> {
    let preset: SchemaPreset = preset_id.parse()?;
    let mut criteria = preset.fixed_criteria();
    match (preset.needs_third_criterion(), third_criterion) {
        (true, Some(third)) => criteria.push(third),
        (true, None) => {
            return Err(Error::validation(format!(
                "preset `{}` defines two criteria; a third must be supplied",
                preset
            )))
        }
        (false, Some(_)) => {
            return Err(Error::validation(format!("preset `{}` already defines three criteria", preset)))
        }
        (false, None) => {}
    }
    let criteria: [Criterion; CRITERIA] = criteria.try_into().expect("three criteria");
    ScoringSchema::build(criteria, Some(preset))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Goal {
    pub title: String,
    pub statement: String,
    pub success_criteria: String,
}

impl Goal {
    pub fn new(
        title: impl Into<String>,
        statement: impl Into<String>,
        success_criteria: impl Into<String>,
    ) -> Result<Self> {
        let goal = Goal { title: title.into(), statement: statement.into(), success_criteria: success_criteria.into() };
        if goal.title.trim().is_empty() || goal.statement.trim().is_empty() {
            return Err(Error::validation("goal title and statement must not be empty"));
        }
        Ok(goal)
    }
}

impl<'de> Deserialize<'de> for Goal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            title: String,
            statement: String,
            #[serde(default)]
            success_criteria: String,
        }
        let raw = Raw::deserialize(d)?;
        Goal::new(raw.title, raw.statement, raw.success_criteria).map_err(D::Error::custom)
    }
}
