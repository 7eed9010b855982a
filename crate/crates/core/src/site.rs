//! Site topology: buildings, lifts, escalators, stairs and bridges.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{valid_building_code, LiftId};

#[derive(Debug, Error)]
pub enum SiteError {
    #[error("cannot read site file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse site file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid site: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerDefaults {
    #[serde(default = "default_lift_wait")]
    pub default_lift_wait_s: f64,
    #[serde(default = "default_stairs")]
    pub stairs_s_per_level: f64,
    #[serde(default = "default_escalator")]
    pub escalator_s_per_level: f64,
    #[serde(default = "default_margin")]
    pub stairs_advisory_margin: f64,
}

fn default_lift_wait() -> f64 {
    45.0
}
fn default_stairs() -> f64 {
    20.0
}
fn default_escalator() -> f64 {
    30.0
}
fn default_margin() -> f64 {
    0.15
}

impl Default for PlannerDefaults {
    fn default() -> Self {
        PlannerDefaults {
            default_lift_wait_s: default_lift_wait(),
            stairs_s_per_level: default_stairs(),
            escalator_s_per_level: default_escalator(),
            stairs_advisory_margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub code: String,
    pub lowest_level: i32,
    pub highest_level: i32,
    pub lift_travel_s_per_level: f64,
    pub door_dwell_s: f64,
}

impl Building {
    pub fn has_level(&self, level: i32) -> bool {
        (self.lowest_level..=self.highest_level).contains(&level)
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.lowest_level..=self.highest_level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    pub building: String,
    pub unit: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serves: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_s_per_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door_dwell_s: Option<f64>,
}

/// A lift with building defaults resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub id: LiftId,
    pub serves: Vec<i32>,
    pub travel_s_per_level: f64,
    pub door_dwell_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalatorDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscalatorSpec {
    pub building: String,
    pub from_level: i32,
    pub to_level: i32,
    pub direction: EscalatorDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_s_per_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StairSpec {
    pub building: String,
    pub from_level: i32,
    pub to_level: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_s_per_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub building: String,
    pub level: i32,
}

impl Location {
    pub fn new(building: impl Into<String>, level: i32) -> Self {
        Location { building: building.into(), level }
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.building, self.level)
    }
}

impl std::str::FromStr for Location {
    type Err = SiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (b, l) = s
            .split_once(':')
            .ok_or_else(|| SiteError::Invalid(format!("location {s:?} is not <building>:<level>")))?;
        let level = l
            .parse()
            .map_err(|_| SiteError::Invalid(format!("location {s:?} has a non-integer level")))?;
        Ok(Location::new(b, level))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSpec {
    pub from: Location,
    pub to: Location,
    pub walk_s: f64,
}

/// On-disk shape of the site topology document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDocument {
    #[serde(default)]
    pub planner: PlannerDefaults,
    #[serde(default)]
    pub buildings: Vec<Building>,
    #[serde(default)]
    pub lifts: Vec<LiftSpec>,
    #[serde(default)]
    pub escalators: Vec<EscalatorSpec>,
    #[serde(default)]
    pub stairs: Vec<StairSpec>,
    #[serde(default)]
    pub bridges: Vec<BridgeSpec>,
}

/// A validated site topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteConfig {
    doc: SiteDocument,
    buildings: BTreeMap<String, Building>,
    lifts: BTreeMap<LiftId, Lift>,
}

impl SiteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SiteError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, SiteError> {
        let doc: SiteDocument = toml::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: SiteDocument) -> Result<Self, SiteError> {
        let invalid = |m: String| Err(SiteError::Invalid(m));
        let p = &doc.planner;
        for (name, v) in [
            ("default_lift_wait_s", p.default_lift_wait_s),
            ("stairs_s_per_level", p.stairs_s_per_level),
            ("escalator_s_per_level", p.escalator_s_per_level),
            ("stairs_advisory_margin", p.stairs_advisory_margin),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("planner.{name} must be a non-negative number"));
            }
        }

        let mut buildings = BTreeMap::new();
        for b in &doc.buildings {
            if !valid_building_code(&b.code) {
                return invalid(format!("building code {:?} must be short and alphanumeric", b.code));
            }
            if b.lowest_level > b.highest_level {
                return invalid(format!("building {} has an empty level range", b.code));
            }
            if !(non_negative(b.lift_travel_s_per_level) && non_negative(b.door_dwell_s)) {
                return invalid(format!("building {} has negative lift kinematics", b.code));
            }
            if buildings.insert(b.code.clone(), b.clone()).is_some() {
                return invalid(format!("building {} declared twice", b.code));
            }
        }
        let level_check = |building: &str, level: i32| -> Result<(), SiteError> {
            match buildings.get(building) {
                None => Err(SiteError::Invalid(format!("unknown building {building}"))),
                Some(b) if !b.has_level(level) => {
                    Err(SiteError::Invalid(format!("level {level} outside building {building}")))
                }
                Some(_) => Ok(()),
            }
        };

        let mut lifts = BTreeMap::new();
        for spec in &doc.lifts {
            let id = LiftId::new(spec.building.clone(), spec.unit)
                .map_err(|e| SiteError::Invalid(e.to_string()))?;
            let b = buildings
                .get(&spec.building)
                .ok_or_else(|| SiteError::Invalid(format!("lift {id} in unknown building")))?;
            let serves: Vec<i32> = match &spec.serves {
                Some(levels) => {
                    let set: BTreeSet<i32> = levels.iter().copied().collect();
                    for &l in &set {
                        level_check(&spec.building, l)?;
                    }
                    set.into_iter().collect()
                }
                None => b.levels().collect(),
            };
            if serves.len() < 2 {
                return invalid(format!("lift {id} must serve at least two levels"));
            }
            let lift = Lift {
                id: id.clone(),
                serves,
                travel_s_per_level: spec.travel_s_per_level.unwrap_or(b.lift_travel_s_per_level),
                door_dwell_s: spec.door_dwell_s.unwrap_or(b.door_dwell_s),
            };
            if !(non_negative(lift.travel_s_per_level) && non_negative(lift.door_dwell_s)) {
                return invalid(format!("lift {id} has negative kinematics"));
            }
            if lifts.insert(id.clone(), lift).is_some() {
                return invalid(format!("lift {id} declared twice"));
            }
        }

        for e in &doc.escalators {
            level_check(&e.building, e.from_level)?;
            level_check(&e.building, e.to_level)?;
            if e.from_level >= e.to_level {
                return invalid(format!("escalator in {} needs from_level < to_level", e.building));
            }
            if !e.travel_s_per_level.map_or(true, non_negative) {
                return invalid(format!("escalator in {} has negative travel time", e.building));
            }
        }
        for s in &doc.stairs {
            level_check(&s.building, s.from_level)?;
            level_check(&s.building, s.to_level)?;
            if s.from_level >= s.to_level {
                return invalid(format!("stairs in {} need from_level < to_level", s.building));
            }
            if !s.travel_s_per_level.map_or(true, non_negative) {
                return invalid(format!("stairs in {} have negative travel time", s.building));
            }
        }
        for br in &doc.bridges {
            level_check(&br.from.building, br.from.level)?;
            level_check(&br.to.building, br.to.level)?;
            if br.from == br.to {
                return invalid(format!("bridge at {} joins a node to itself", br.from));
            }
            if !non_negative(br.walk_s) {
                return invalid(format!("bridge {} -> {} has negative walk time", br.from, br.to));
            }
        }

        Ok(SiteConfig { doc, buildings, lifts })
    }

    pub fn document(&self) -> &SiteDocument {
        &self.doc
    }

    pub fn planner(&self) -> &PlannerDefaults {
        &self.doc.planner
    }

    pub fn building(&self, code: &str) -> Option<&Building> {
        self.buildings.get(code)
    }

    pub fn buildings(&self) -> impl Iterator<Item = &Building> {
        self.buildings.values()
    }

    pub fn lift(&self, id: &LiftId) -> Option<&Lift> {
        self.lifts.get(id)
    }

    /// All lifts ordered by building code, then unit.
    pub fn lifts(&self) -> impl Iterator<Item = &Lift> {
        self.lifts.values()
    }

    pub fn lifts_in<'a>(&'a self, building: &'a str) -> impl Iterator<Item = &'a Lift> + 'a {
        self.lifts.values().filter(move |l| l.id.building() == building)
    }

    pub fn has_location(&self, loc: &Location) -> bool {
        self.building(&loc.building).is_some_and(|b| b.has_level(loc.level))
    }
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}
