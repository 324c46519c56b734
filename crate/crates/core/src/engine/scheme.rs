//! The three compression schemes and the acceptance test shared by the
//! engine, the oracle and the descriptor decoder.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::vm::{universal_feature_len, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Compression condition only.
    #[default]
    Plain,
    /// Residual additionally at most `1/b` of its parent, `b = num/den > 1`.
    BFeature { num: u64, den: u64 },
    /// As `BFeature`, and the greedy loop stops once the residual is no
    /// longer than `C·b/(b−1)` bits, `C` being the universal feature length.
    BFeatureEarly { num: u64, den: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad scheme {0:?}: expected plain, b:<num>/<den> or b-early:<num>/<den> with num > den >= 1")]
pub struct SchemeParseError(pub String);

impl Scheme {
    pub fn b_feature(num: u64, den: u64) -> Option<Self> {
        (den >= 1 && num > den).then_some(Scheme::BFeature { num, den })
    }

    pub fn b_feature_early(num: u64, den: u64) -> Option<Self> {
        (den >= 1 && num > den).then_some(Scheme::BFeatureEarly { num, den })
    }

    /// `b` as a fraction, if this is a b-scheme.
    pub fn ratio(&self) -> Option<(u64, u64)> {
        match *self {
            Scheme::Plain => None,
            Scheme::BFeature { num, den } | Scheme::BFeatureEarly { num, den } => Some((num, den)),
        }
    }

    /// `l(f) + l(r) < l(x)` and, for b-schemes, `l(r)·num <= l(x)·den`.
    pub fn length_ok(&self, f_len: usize, r_len: usize, x_len: usize) -> bool {
        if f_len + r_len >= x_len {
            return false;
        }
        match self.ratio() {
            None => true,
            Some((num, den)) => (r_len as u128) * (num as u128) <= (x_len as u128) * (den as u128),
        }
    }

    /// Early-termination halting condition `l(r) <= C·b/(b−1)`.
    pub fn stops_early(&self, r_len: usize) -> bool {
        match *self {
            Scheme::BFeatureEarly { num, den } => {
                (r_len as u128) * ((num - den) as u128) <= (universal_feature_len() as u128) * (num as u128)
            }
            _ => false,
        }
    }
}

/// True iff `f(r) = y` reconstructs `x` under `scheme`.
pub fn accepts(x: &BitString, y: &BitString, f: &Program, r: &BitString, scheme: Scheme) -> bool {
    y == x && scheme.length_ok(f.len_bits(), r.len(), x.len())
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Plain => f.write_str("plain"),
            Scheme::BFeature { num, den } => write!(f, "b:{num}/{den}"),
            Scheme::BFeatureEarly { num, den } => write!(f, "b-early:{num}/{den}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = SchemeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SchemeParseError(s.to_string());
        if s == "plain" {
            return Ok(Scheme::Plain);
        }
        let (early, frac) = if let Some(rest) = s.strip_prefix("b-early:") {
            (true, rest)
        } else if let Some(rest) = s.strip_prefix("b:") {
            (false, rest)
        } else {
            return Err(err());
        };
        let (num, den) = match frac.split_once('/') {
            Some((n, d)) => (n.parse().map_err(|_| err())?, d.parse().map_err(|_| err())?),
            None => (frac.parse().map_err(|_| err())?, 1),
        };
        let scheme = if early { Scheme::b_feature_early(num, den) } else { Scheme::b_feature(num, den) };
        scheme.ok_or_else(err)
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
