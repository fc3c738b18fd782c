use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::counts::{CountKind, CountTree};

/// Rule for choosing a comparable pair on the line `x + y = m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyPolicy {
    /// Euclidean-closest comparable lattice point; ties go to the larger first coordinate.
    #[default]
    Uniform,
    /// Lattice point nearest the ray through the origin and the input.
    Proportional,
}

impl fmt::Display for ConsistencyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Proportional => "proportional",
        })
    }
}

impl FromStr for ConsistencyPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "proportional" => Ok(Self::Proportional),
            other => Err(invalid(format!("unknown consistency policy {other:?}"))),
        }
    }
}

/// Product-order comparability in `Z^2`.
pub fn comparable(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 <= b.0 && a.1 <= b.1) || (a.0 >= b.0 && a.1 >= b.1)
}

/// 0 for comparable pairs, otherwise `min(|a1-b1|, |a2-b2|)`.
pub fn flux(a: (i64, i64), b: (i64, i64)) -> Result<i64> {
    if a.0 < 0 || a.1 < 0 || b.0 < 0 || b.1 < 0 {
        return Err(invalid(format!("flux needs nonnegative pairs, got {a:?} and {b:?}")));
    }
    Ok(if comparable(a, b) { 0 } else { (a.0 - b.0).abs().min((a.1 - b.1).abs()) })
}

/// Replaces `pair` by a point of `Z_+^2` on `x + y = m` that is comparable to it.
pub fn transform_pair(m: i64, pair: (i64, i64), policy: ConsistencyPolicy) -> Result<(i64, i64)> {
    let (a0, a1) = pair;
    if m < 0 || a0 < 0 || a1 < 0 {
        return Err(invalid(format!("transform needs nonnegative inputs, got m = {m}, pair {pair:?}")));
    }
    let s = a0 + a1;
    // Admissible first coordinates form an interval: both children move down
    // when m <= s and up when m >= s.
    let (lo, hi) = if m <= s { ((m - a1).max(0), m.min(a0)) } else { (a0, m - a1) };
    let x = match policy {
        ConsistencyPolicy::Proportional if s > 0 => {
            let (m, a0, s) = (m as i128, a0 as i128, s as i128);
            ((2 * m * a0 + s) / (2 * s)) as i64
        }
        // Orthogonal projection lands at a0 + (m - s)/2; halves round up.
        _ => a0 + (m - s + 1).div_euclid(2),
    };
    let x = x.clamp(lo, hi);
    Ok((x, m - x))
}

/// Top-down pass that makes a noisy tree consistent, keeping its root.
pub fn enforce_consistency(noisy: &CountTree, policy: ConsistencyPolicy) -> Result<CountTree> {
    let src = noisy.levels();
    let mut out: Vec<Vec<i64>> = Vec::with_capacity(src.len());
    out.push(src[0].clone());
    for next in &src[1..] {
        let parent = out.last().expect("nonempty");
        let mut level = vec![0i64; next.len()];
        for (b, &m) in parent.iter().enumerate() {
            let (x, y) = transform_pair(m, (next[2 * b], next[2 * b + 1]), policy)?;
            level[2 * b] = x;
            level[2 * b + 1] = y;
        }
        out.push(level);
    }
    CountTree::from_levels(CountKind::Consistent, out)
}
