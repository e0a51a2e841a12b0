//! Log-odds arithmetic, clamping and the discrete three-state classification.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OccState {
    Free,
    Occupied,
    Unknown,
}

impl OccState {
    pub const ALL: [OccState; 3] = [OccState::Free, OccState::Occupied, OccState::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            OccState::Free => "free",
            OccState::Occupied => "occupied",
            OccState::Unknown => "unknown",
        }
    }

    /// Two-bit code used by the packed synced-state array.
    #[inline]
    pub(crate) fn code(self) -> u8 {
        match self {
            OccState::Unknown => 0,
            OccState::Free => 1,
            OccState::Occupied => 2,
        }
    }

    #[inline]
    pub(crate) fn from_code(code: u8) -> Self {
        match code & 0b11 {
            1 => OccState::Free,
            2 => OccState::Occupied,
            _ => OccState::Unknown,
        }
    }
}

impl fmt::Display for OccState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OccState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "free" => Ok(OccState::Free),
            "occupied" => Ok(OccState::Occupied),
            "unknown" => Ok(OccState::Unknown),
            other => Err(Error::InvalidInput(format!("unknown occupancy state '{other}'"))),
        }
    }
}

/// A log-odds occupancy value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LogOdds<T>(pub T);

impl<T: Scalar> LogOdds<T> {
    pub fn value(self) -> T {
        self.0
    }
}

/// `ln(p / (1 - p))`.
pub fn prob_to_logodds(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("probability {p} outside (0, 1)")));
    }
    Ok((p / (1.0 - p)).ln())
}

pub fn logodds_to_prob(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Sensor model and map thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbParams<T> {
    pub l_hit: T,
    pub l_miss: T,
    pub l_max: T,
    pub l_min: T,
    pub l_free: T,
    pub l_occ: T,
    /// Voxel edge length in metres.
    pub resolution: T,
    /// Sensor range in metres.
    pub range: T,
}

/// Probabilities from which a [`ProbParams`] is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub hit: f64,
    pub miss: f64,
    pub max: f64,
    pub min: f64,
    pub free: f64,
    pub occ: f64,
}

impl Default for Probabilities {
    fn default() -> Self {
        Self { hit: 0.8, miss: 0.48, max: 0.97, min: 0.05, free: 0.2, occ: 0.8 }
    }
}

impl<T: Scalar> ProbParams<T> {
    pub fn from_probabilities(p: Probabilities, resolution: f64, range: f64) -> Result<Self> {
        let params = Self {
            l_hit: T::of(prob_to_logodds(p.hit)?),
            l_miss: T::of(prob_to_logodds(p.miss)?),
            l_max: T::of(prob_to_logodds(p.max)?),
            l_min: T::of(prob_to_logodds(p.min)?),
            l_free: T::of(prob_to_logodds(p.free)?),
            l_occ: T::of(prob_to_logodds(p.occ)?),
            resolution: T::of(resolution),
            range: T::of(range),
        };
        params.validate()?;
        Ok(params)
    }

    /// Default sensor model: hit 0.8, miss 0.48, clamp to [0.05, 0.97],
    /// free at or below 0.2, occupied at or above 0.8.
    pub fn standard(resolution: f64, range: f64) -> Result<Self> {
        Self::from_probabilities(Probabilities::default(), resolution, range)
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let ok = self.l_min <= self.l_free
            && self.l_free < z
            && z < self.l_occ
            && self.l_occ <= self.l_max
            && self.l_miss < z
            && z < self.l_hit
            && self.resolution > z
            && self.resolution.is_finite()
            && self.range > z
            && self.range.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "inconsistent probability parameters: require l_min <= l_free < 0 < l_occ <= l_max, \
                 l_miss < 0 < l_hit, d > 0, R > 0; got {self:?}"
            )))
        }
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = T::of(resolution);
        self
    }

    pub fn cast<U: Scalar>(&self) -> ProbParams<U> {
        let c = |v: T| U::of(v.as_f64());
        ProbParams {
            l_hit: c(self.l_hit),
            l_miss: c(self.l_miss),
            l_max: c(self.l_max),
            l_min: c(self.l_min),
            l_free: c(self.l_free),
            l_occ: c(self.l_occ),
            resolution: c(self.resolution),
            range: c(self.range),
        }
    }
}

#[inline]
pub fn clamp_logodds<T: Scalar>(l: T, params: &ProbParams<T>) -> T {
    l.min(params.l_max).max(params.l_min)
}

#[inline]
pub fn state_from_logodds<T: Scalar>(l: T, params: &ProbParams<T>) -> OccState {
    if l <= params.l_free {
        OccState::Free
    } else if l >= params.l_occ {
        OccState::Occupied
    } else {
        OccState::Unknown
    }
}

/// Applies one scan's aggregated hit and miss counts to a stored value and
/// clamps the result. Both the local grid and the dense reference grid go
/// through this function so their arithmetic is bit-identical.
#[inline]
pub fn apply_counts<T: Scalar>(current: T, hits: u32, misses: u32, params: &ProbParams<T>) -> T {
    let delta = hits as f64 * params.l_hit.as_f64() + misses as f64 * params.l_miss.as_f64();
    clamp_logodds(T::of(current.as_f64() + delta), params)
}

/// Log-odds increment used when a state reconstructed from the boundary map
/// is fused into the local grid.
#[inline]
pub fn fuse_increment<T: Scalar>(state: OccState, params: &ProbParams<T>) -> Option<T> {
    match state {
        OccState::Free => Some(params.l_free),
        OccState::Occupied => Some(params.l_occ),
        OccState::Unknown => None,
    }
}
