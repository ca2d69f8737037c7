use serde::{Deserialize, Serialize};

use super::CommunityPartition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotSource {
    PaperDefault,
    Detected,
    User,
}

/// Strictly increasing interior knot positions on the day axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotPartition {
    pub interior_knots: Vec<f64>,
    pub source: KnotSource,
}

impl KnotPartition {
    pub fn new(interior_knots: Vec<f64>, source: KnotSource) -> Result<Self> {
        for w in interior_knots.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::KnotOrder { prev: w[0], next: w[1] });
            }
        }
        if let Some(k) = interior_knots.iter().find(|k| !k.is_finite()) {
            return Err(Error::Domain(format!("knot {k} is not finite")));
        }
        Ok(Self {
            interior_knots,
            source,
        })
    }

    pub fn user(interior_knots: Vec<f64>) -> Result<Self> {
        Self::new(interior_knots, KnotSource::User)
    }

    pub fn none() -> Self {
        Self {
            interior_knots: Vec::new(),
            source: KnotSource::User,
        }
    }

    /// Knots of the built-in partition: the midpoints between days 4|5,
    /// 8|9, 19|20, 26|27 and 32|33.
    pub fn paper_default() -> Self {
        Self {
            interior_knots: vec![4.5, 8.5, 19.5, 26.5, 32.5],
            source: KnotSource::PaperDefault,
        }
    }

    pub fn len(&self) -> usize {
        self.interior_knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior_knots.is_empty()
    }

    /// The partition whose runs are exactly the intervals between knots, for
    /// nodes labelled `first_day..first_day + n`. Every run is its own
    /// community.
    pub fn to_partition(&self, first_day: i64, n: usize) -> CommunityPartition {
        let assignment = (0..n)
            .map(|i| {
                let day = (first_day + i as i64) as f64;
                self.interior_knots.iter().filter(|&&k| k < day).count()
            })
            .collect::<Vec<_>>();
        CommunityPartition::from_assignment(&assignment, None)
    }
}

/// Interior knots at the boundaries between maximal same-community runs.
///
/// Node `i` is day `first_day + i`; a boundary between days `d` and `d + 1`
/// places a knot at `d + 0.5`. A community split over several runs
/// contributes one boundary per run change. A single-run partition gives no
/// knots.
pub fn knots_from_partition(partition: &CommunityPartition, first_day: i64, source: KnotSource) -> KnotPartition {
    let interior_knots = partition
        .runs()
        .windows(2)
        .map(|w| (first_day + w[0].1 as i64) as f64 + 0.5)
        .collect();
    KnotPartition {
        interior_knots,
        source,
    }
}
