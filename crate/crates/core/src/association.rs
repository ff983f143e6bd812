//! Offset vectors and the UE to cell association they induce.
//!
//! A UE attaches to the cell maximizing received pilot power in dB plus the
//! cell's offset; macro cells always use 0 dB. Ties within
//! [`TIE_TOLERANCE_DB`] go to the lowest cell id. An offset of `-inf` dB
//! switches an LPN off for association purposes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scenario;

/// Scores closer than this are treated as equal, dB.
pub const TIE_TOLERANCE_DB: f64 = 1e-9;

/// Ordered candidate offsets in dB. `-inf` is allowed and must come first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DbValue>", into = "Vec<DbValue>")]
pub struct OffsetSet(Vec<f64>);

impl OffsetSet {
    pub fn new(levels_db: Vec<f64>) -> Result<Self> {
        if levels_db.is_empty() {
            return Err(Error::InvalidOffsetSet("at least one level is required".into()));
        }
        if levels_db.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidOffsetSet("levels must be finite or -inf".into()));
        }
        if levels_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidOffsetSet("levels must be strictly ascending".into()));
        }
        Ok(Self(levels_db))
    }

    /// Integer dB levels `lo..=hi`.
    pub fn uniform_db(lo: i32, hi: i32) -> Self {
        Self((lo..=hi).map(f64::from).collect())
    }

    /// `{-inf, 0}`: each LPN is either off or active with no offset.
    pub fn on_off() -> Self {
        Self(vec![f64::NEG_INFINITY, 0.0])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn db(&self, level: usize) -> f64 {
        self.0[level]
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    /// Level index holding `db`.
    pub fn level_of(&self, db: f64) -> Result<usize> {
        self.0
            .iter()
            .position(|&v| v == db || (v - db).abs() < 1e-9)
            .ok_or(Error::UnknownOffset(db))
    }
}

/// One offset level index per LPN, in LPN order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OffsetVector(Vec<usize>);

impl OffsetVector {
    pub fn new(levels: Vec<usize>) -> Self {
        Self(levels)
    }

    /// All LPNs at the lowest level of the set (zero offset for the 0..10 dB set).
    pub fn all_zero(num_lpns: usize) -> Self {
        Self(vec![0; num_lpns])
    }

    /// All LPNs at the highest level of `set`.
    pub fn all_max(num_lpns: usize, set: &OffsetSet) -> Self {
        Self(vec![set.len() - 1; num_lpns])
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, num_lpns: usize, set: &OffsetSet) -> Result<()> {
        if self.0.len() != num_lpns {
            return Err(Error::OffsetLength {
                expected: num_lpns,
                got: self.0.len(),
            });
        }
        match self.0.iter().position(|&l| l >= set.len()) {
            Some(position) => Err(Error::OffsetLevel {
                position,
                level: self.0[position],
                size: set.len(),
            }),
            None => Ok(()),
        }
    }

    pub fn to_db(&self, set: &OffsetSet) -> Vec<f64> {
        self.0.iter().map(|&l| set.db(l)).collect()
    }

    pub fn from_db(values: &[f64], set: &OffsetSet) -> Result<Self> {
        values.iter().map(|&v| set.level_of(v)).collect::<Result<_>>().map(Self)
    }

    /// JSON array of dB values; `-inf` is written as the string `"-inf"`.
    pub fn to_json(&self, set: &OffsetSet) -> Result<String> {
        let values: Vec<DbValue> = self.to_db(set).into_iter().map(DbValue::from).collect();
        Ok(serde_json::to_string(&values)?)
    }

    pub fn from_json(text: &str, set: &OffsetSet) -> Result<Self> {
        let values: Vec<DbValue> = serde_json::from_str(text)?;
        let db = values.into_iter().map(f64::try_from).collect::<Result<Vec<_>>>()?;
        Self::from_db(&db, set)
    }
}

/// A dB value that may be `-inf`, for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DbValue {
    Finite(f64),
    Text(String),
}

impl From<f64> for DbValue {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            DbValue::Finite(v)
        } else if v < 0.0 {
            DbValue::Text("-inf".into())
        } else {
            DbValue::Text("inf".into())
        }
    }
}

impl TryFrom<DbValue> for f64 {
    type Error = Error;

    fn try_from(v: DbValue) -> Result<f64> {
        match v {
            DbValue::Finite(v) => Ok(v),
            DbValue::Text(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            DbValue::Text(s) => Err(Error::InvalidOffsetSet(format!("unrecognized dB value {s:?}"))),
        }
    }
}

impl TryFrom<Vec<DbValue>> for OffsetSet {
    type Error = Error;

    fn try_from(values: Vec<DbValue>) -> Result<Self> {
        OffsetSet::new(values.into_iter().map(f64::try_from).collect::<Result<_>>()?)
    }
}

impl From<OffsetSet> for Vec<DbValue> {
    fn from(set: OffsetSet) -> Self {
        set.0.into_iter().map(DbValue::from).collect()
    }
}

/// Serving cell per UE and the served set per cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    serving: Vec<usize>,
    #[serde(skip)]
    served: Vec<Vec<usize>>,
}

impl Association {
    /// Builds an association from an explicit serving map, checking that each
    /// serving cell exists and has positive gain to its UE.
    pub fn from_serving(scenario: &Scenario, serving: Vec<usize>) -> Result<Self> {
        if serving.len() != scenario.num_ues() {
            return Err(Error::InvalidScenario(format!(
                "serving map has {} entries for {} UEs",
                serving.len(),
                scenario.num_ues()
            )));
        }
        for (ue, &cell) in serving.iter().enumerate() {
            if cell >= scenario.num_cells() || scenario.gain(cell, ue) <= 0.0 {
                return Err(Error::UnreachableUe { ue });
            }
        }
        let mut served = vec![Vec::new(); scenario.num_cells()];
        for (ue, &cell) in serving.iter().enumerate() {
            served[cell].push(ue);
        }
        Ok(Self { serving, served })
    }

    pub fn serving_cell(&self, ue: usize) -> usize {
        self.serving[ue]
    }

    pub fn serving(&self) -> &[usize] {
        &self.serving
    }

    /// UEs served by `cell`, ascending.
    pub fn served_by(&self, cell: usize) -> &[usize] {
        &self.served[cell]
    }

    pub fn is_serving(&self, cell: usize) -> bool {
        !self.served[cell].is_empty()
    }

    pub fn num_cells(&self) -> usize {
        self.served.len()
    }

    /// Cells with a nonempty served set, ascending.
    pub fn serving_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.served.len()).filter(|&i| self.is_serving(i))
    }
}

/// Association under `offsets`; with `lpn_enabled == false` only macro cells
/// are eligible.
pub fn associate(
    scenario: &Scenario,
    offsets: &OffsetVector,
    offset_set: &OffsetSet,
    lpn_enabled: bool,
) -> Result<Association> {
    offsets.check(scenario.num_lpns(), offset_set)?;
    let lpn_db = if lpn_enabled {
        offsets.to_db(offset_set)
    } else {
        vec![f64::NEG_INFINITY; scenario.num_lpns()]
    };
    associate_db(scenario, &lpn_db)
}

/// Association with explicit per-LPN offsets in dB (`-inf` disables an LPN).
pub fn associate_db(scenario: &Scenario, lpn_offsets_db: &[f64]) -> Result<Association> {
    if lpn_offsets_db.len() != scenario.num_lpns() {
        return Err(Error::OffsetLength {
            expected: scenario.num_lpns(),
            got: lpn_offsets_db.len(),
        });
    }
    let offset = |cell: usize| -> f64 {
        if cell < scenario.num_macros() {
            0.0
        } else {
            lpn_offsets_db[cell - scenario.num_macros()]
        }
    };
    let pilots_db: Vec<f64> = scenario.cells().iter().map(|c| 10.0 * c.pilot_power.log10()).collect();

    let serving = (0..scenario.num_ues())
        .map(|ue| {
            let mut best: Option<(usize, f64)> = None;
            for cell in 0..scenario.num_cells() {
                let gain = scenario.gain(cell, ue);
                let off = offset(cell);
                if gain <= 0.0 || off == f64::NEG_INFINITY {
                    continue;
                }
                let score = pilots_db[cell] + 10.0 * gain.log10() + off;
                if best.is_none_or(|(_, s)| score > s + TIE_TOLERANCE_DB) {
                    best = Some((cell, score));
                }
            }
            best.map(|(cell, _)| cell).ok_or(Error::UnreachableUe { ue })
        })
        .collect::<Result<Vec<_>>>()?;

    Association::from_serving(scenario, serving)
}
