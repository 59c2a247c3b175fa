//! International Wealth Index scoring: a fixed linear form over ten asset
//! indicators, clamped to [0, 100], aggregated to survey-cluster means.
//!
//! The numeric weights are data, not code: they ship in a versioned
//! key-value file (`data/iwi_weights_v1.txt`) so surveys with variant
//! category codings can remap without touching the scorer. Utensil
//! indicators are not part of the ten-indicator form.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Three-level quality band used by the water, floor, and toilet indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriLevel {
    Low,
    Middle,
    High,
}

impl TriLevel {
    fn parse(s: &str) -> Option<TriLevel> {
        match s {
            "low" => Some(TriLevel::Low),
            "middle" => Some(TriLevel::Middle),
            "high" => Some(TriLevel::High),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            TriLevel::Low => 0,
            TriLevel::Middle => 1,
            TriLevel::High => 2,
        }
    }
}

/// Sleeping-room count banded as in the index definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoomsBand {
    OneOrLess,
    Two,
    ThreePlus,
}

impl RoomsBand {
    fn parse(s: &str) -> Option<RoomsBand> {
        match s {
            "3+" => Some(RoomsBand::ThreePlus),
            _ => {
                let n: u32 = s.parse().ok()?;
                Some(match n {
                    0 | 1 => RoomsBand::OneOrLess,
                    2 => RoomsBand::Two,
                    _ => RoomsBand::ThreePlus,
                })
            }
        }
    }

    fn index(self) -> usize {
        match self {
            RoomsBand::OneOrLess => 0,
            RoomsBand::Two => 1,
            RoomsBand::ThreePlus => 2,
        }
    }
}

/// One household's indicator values; `None` marks a missing indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdRecord {
    pub household_id: String,
    pub cluster_id: String,
    pub tv: Option<bool>,
    pub fridge: Option<bool>,
    pub phone: Option<bool>,
    pub bike: Option<bool>,
    pub car: Option<bool>,
    pub electricity: Option<bool>,
    pub water: Option<TriLevel>,
    pub floor: Option<TriLevel>,
    pub toilet: Option<TriLevel>,
    pub rooms: Option<RoomsBand>,
}

impl HouseholdRecord {
    pub fn missing_count(&self) -> usize {
        self.tv.is_none() as usize
            + self.fridge.is_none() as usize
            + self.phone.is_none() as usize
            + self.bike.is_none() as usize
            + self.car.is_none() as usize
            + self.electricity.is_none() as usize
            + self.water.is_none() as usize
            + self.floor.is_none() as usize
            + self.toilet.is_none() as usize
            + self.rooms.is_none() as usize
    }
}

/// The constant plus per-indicator-category weights of the wealth index.
#[derive(Debug, Clone, PartialEq)]
pub struct IwiWeights {
    pub version: String,
    pub constant: f64,
    pub tv: f64,
    pub fridge: f64,
    pub phone: f64,
    pub bike: f64,
    pub car: f64,
    pub electricity: f64,
    pub water: [f64; 3],
    pub floor: [f64; 3],
    pub toilet: [f64; 3],
    pub rooms: [f64; 3],
}

const REFERENCE_WEIGHTS: &str = include_str!("../data/iwi_weights_v1.txt");

impl IwiWeights {
    /// The reference weight table shipped with the library.
    pub fn reference() -> IwiWeights {
        Self::parse(REFERENCE_WEIGHTS).expect("bundled weight file is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<IwiWeights> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn parse(text: &str) -> Result<IwiWeights> {
        let mut version = None;
        let mut entries: BTreeMap<String, f64> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
                Error::InvalidInput(format!("weights line {}: expected `key value`", lineno + 1))
            })?;
            if key == "version" {
                version = Some(value.trim().to_string());
                continue;
            }
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("weights line {}: bad number {value}", lineno + 1))
            })?;
            if entries.insert(key.to_string(), v).is_some() {
                return Err(Error::InvalidInput(format!("duplicate weight key {key}")));
            }
        }
        let version =
            version.ok_or_else(|| Error::InvalidInput("weights file missing `version`".into()))?;
        let mut take = |key: &str| -> Result<f64> {
            entries
                .remove(key)
                .ok_or_else(|| Error::InvalidInput(format!("weights file missing key {key}")))
        };
        let w = IwiWeights {
            version,
            constant: take("constant")?,
            tv: take("tv")?,
            fridge: take("fridge")?,
            phone: take("phone")?,
            bike: take("bike")?,
            car: take("car")?,
            electricity: take("electricity")?,
            water: [take("water.low")?, take("water.middle")?, take("water.high")?],
            floor: [take("floor.low")?, take("floor.middle")?, take("floor.high")?],
            toilet: [take("toilet.low")?, take("toilet.middle")?, take("toilet.high")?],
            rooms: [
                take("rooms.one_or_less")?,
                take("rooms.two")?,
                take("rooms.three_plus")?,
            ],
        };
        if let Some(extra) = entries.keys().next() {
            return Err(Error::InvalidInput(format!("unknown weight key {extra}")));
        }
        Ok(w)
    }
}

/// A scored household. `missing` counts imputed indicators; any value above
/// zero flags the record as imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHousehold {
    pub household_id: String,
    pub cluster_id: String,
    pub score: f64,
    pub missing: usize,
}

impl ScoredHousehold {
    pub fn imputed(&self) -> bool {
        self.missing > 0
    }
}

/// Score one household: constant + category weights, clamped to [0, 100].
///
/// A missing indicator contributes its lowest-category weight (absence for
/// the binary assets). Records with more than three missing indicators are
/// unscoreable.
pub fn compute_iwi(h: &HouseholdRecord, w: &IwiWeights) -> Result<ScoredHousehold> {
    let missing = h.missing_count();
    if missing > 3 {
        return Err(Error::Unscoreable {
            household_id: h.household_id.clone(),
            missing,
        });
    }
    let binary = |v: Option<bool>, weight: f64| if v == Some(true) { weight } else { 0.0 };
    let banded3 =
        |v: Option<TriLevel>, weights: &[f64; 3]| weights[v.map_or(0, TriLevel::index)];
    let mut score = w.constant;
    score += binary(h.tv, w.tv);
    score += binary(h.fridge, w.fridge);
    score += binary(h.phone, w.phone);
    score += binary(h.bike, w.bike);
    score += binary(h.car, w.car);
    score += binary(h.electricity, w.electricity);
    score += banded3(h.water, &w.water);
    score += banded3(h.floor, &w.floor);
    score += banded3(h.toilet, &w.toilet);
    score += w.rooms[h.rooms.map_or(0, RoomsBand::index)];
    Ok(ScoredHousehold {
        household_id: h.household_id.clone(),
        cluster_id: h.cluster_id.clone(),
        score: score.clamp(0.0, 100.0),
        missing,
    })
}

/// Per-cluster mean scores plus the records and clusters that could not be
/// scored. Nothing is dropped silently.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterScores {
    pub means: BTreeMap<String, f64>,
    pub household_counts: BTreeMap<String, usize>,
    pub unscoreable: Vec<(String, usize)>,
    pub empty_clusters: Vec<String>,
}

/// Mean household score per cluster id.
///
/// Households are summed in household-id order within each cluster, so the
/// result is bit-identical under input permutation.
pub fn cluster_iwi(records: &[HouseholdRecord], w: &IwiWeights) -> Result<ClusterScores> {
    if records.is_empty() {
        return Err(Error::Data("no household records".into()));
    }
    let mut per_cluster: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut out = ClusterScores::default();
    for rec in records {
        per_cluster.entry(rec.cluster_id.clone()).or_default();
        match compute_iwi(rec, w) {
            Ok(scored) => per_cluster
                .get_mut(&rec.cluster_id)
                .unwrap()
                .push((scored.household_id, scored.score)),
            Err(Error::Unscoreable { household_id, missing }) => {
                out.unscoreable.push((household_id, missing));
            }
            Err(e) => return Err(e),
        }
    }
    for (cluster_id, mut scores) in per_cluster {
        if scores.is_empty() {
            out.empty_clusters.push(cluster_id);
            continue;
        }
        scores.sort_by(|a, b| a.0.cmp(&b.0));
        let sum: f64 = scores.iter().map(|(_, s)| s).sum();
        out.household_counts.insert(cluster_id.clone(), scores.len());
        out.means.insert(cluster_id, sum / scores.len() as f64);
    }
    Ok(out)
}

/// Read household records from CSV. One column per indicator; the empty
/// string marks a missing value. Binary columns take 0/1, the banded ones
/// take low/middle/high, and rooms takes a count (or literal `3+`).
pub fn read_households_csv(path: impl AsRef<Path>) -> Result<Vec<HouseholdRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, format!("missing column {name}")))
    };
    let idx = [
        col("household_id")?,
        col("cluster_id")?,
        col("tv")?,
        col("fridge")?,
        col("phone")?,
        col("bike")?,
        col("car")?,
        col("water")?,
        col("electricity")?,
        col("rooms")?,
        col("floor")?,
        col("toilet")?,
    ];
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, e.to_string()))?;
        let get = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        let bin = |i: usize| -> Result<Option<bool>> {
            match get(i) {
                "" => Ok(None),
                "0" => Ok(Some(false)),
                "1" => Ok(Some(true)),
                other => Err(Error::parse(
                    path,
                    format!("row {}: expected 0/1/empty, found {other}", line + 2),
                )),
            }
        };
        let banded = |i: usize| -> Result<Option<TriLevel>> {
            match get(i) {
                "" => Ok(None),
                other => TriLevel::parse(other).map(Some).ok_or_else(|| {
                    Error::parse(path, format!("row {}: bad band {other}", line + 2))
                }),
            }
        };
        let rooms = match get(9) {
            "" => None,
            other => Some(RoomsBand::parse(other).ok_or_else(|| {
                Error::parse(path, format!("row {}: bad rooms value {other}", line + 2))
            })?),
        };
        records.push(HouseholdRecord {
            household_id: get(0).to_string(),
            cluster_id: get(1).to_string(),
            tv: bin(2)?,
            fridge: bin(3)?,
            phone: bin(4)?,
            bike: bin(5)?,
            car: bin(6)?,
            water: banded(7)?,
            electricity: bin(8)?,
            rooms,
            floor: banded(10)?,
            toilet: banded(11)?,
        });
    }
    Ok(records)
}
