use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::SchemeId;
use crate::error::{Error, Result};
use crate::region::{q_from, Corner, DofPoint, Q};

/// Something that can be run for a fraction of the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Corner(Corner),
    /// A two-user scheme; contributes its per-message DoF.
    Scheme(SchemeId),
    /// A strategy known only by its sum DoF, split evenly over the four
    /// messages.
    Symmetric(Rational64),
}

impl Strategy {
    pub fn dof(self) -> Result<[Q; 4]> {
        match self {
            Strategy::Corner(c) => Ok(c.point()),
            Strategy::Scheme(id) => Ok(id.message_dof()?.map(q_from)),
            Strategy::Symmetric(sum) => {
                if sum.is_negative() {
                    return Err(Error::InvalidWeights(format!("negative sum DoF {sum}")));
                }
                Ok([0; 4].map(|_| q_from(sum / 4)))
            }
        }
    }
}

/// The DoF point reached by running each strategy for its share of time.
/// Weights must be nonnegative and sum to exactly one.
pub fn time_share(points: &[(Strategy, Rational64)]) -> Result<DofPoint> {
    if points.iter().any(|(_, w)| w.is_negative()) {
        return Err(Error::InvalidWeights("weights must be nonnegative".into()));
    }
    let total: Rational64 = points.iter().map(|(_, w)| *w).sum();
    if total != Rational64::from_integer(1) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let mut out = [0; 4].map(|_| Q::zero());
    for (s, w) in points {
        let w = q_from(*w);
        for (o, d) in out.iter_mut().zip(s.dof()?) {
            *o += &w * d;
        }
    }
    DofPoint::new(out)
}
