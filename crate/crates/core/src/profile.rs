//! Sampled wave profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which construction produced a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Exact,
    Limit,
    Singular,
    Shooting,
    Pde,
}

impl Construction {
    pub fn as_str(self) -> &'static str {
        match self {
            Construction::Exact => "exact",
            Construction::Limit => "limit",
            Construction::Singular => "singular",
            Construction::Shooting => "shooting",
            Construction::Pde => "pde",
        }
    }
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Construction::Exact),
            "limit" => Ok(Construction::Limit),
            "singular" => Ok(Construction::Singular),
            "shooting" => Ok(Construction::Shooting),
            "pde" => Ok(Construction::Pde),
            other => Err(Error::InvalidArgument(format!(
                "unknown construction `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub z: f64,
    pub u: f64,
    pub w: f64,
}

/// A front profile `z -> (u, w)` sampled at strictly increasing `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    samples: Vec<ProfileSample>,
    construction: Construction,
}

impl WaveProfile {
    pub fn new(samples: Vec<ProfileSample>, construction: Construction) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("profile has no samples".into()));
        }
        if samples
            .iter()
            .any(|s| !(s.z.is_finite() && s.u.is_finite() && s.w.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "profile contains non-finite values".into(),
            ));
        }
        if samples.windows(2).any(|p| p[1].z <= p[0].z) {
            return Err(Error::InvalidArgument(
                "profile coordinates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            samples,
            construction,
        })
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.samples[0].z, self.samples[self.samples.len() - 1].z)
    }

    /// Linear interpolation of `(u, w)` at `z`; `None` outside the sampled range.
    pub fn interpolate(&self, z: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.z_range();
        if !(z >= lo && z <= hi) {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.z < z);
        if idx == 0 {
            let s = self.samples[0];
            return Some((s.u, s.w));
        }
        let (a, b) = (self.samples[idx - 1], self.samples[idx]);
        let t = (z - a.z) / (b.z - a.z);
        Some((a.u + t * (b.u - a.u), a.w + t * (b.w - a.w)))
    }

    /// Returns a copy with every coordinate shifted by `dz`.
    pub fn shifted(&self, dz: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| ProfileSample { z: s.z + dz, ..*s })
                .collect(),
            construction: self.construction,
        }
    }

    /// Coordinate of the largest `w` (first one on ties).
    pub fn argmax_w(&self) -> f64 {
        let mut best = self.samples[0];
        for s in &self.samples[1..] {
            if s.w > best.w {
                best = *s;
            }
        }
        best.z
    }
}

/// `n` uniformly spaced points on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need lo < hi and n >= 2 (got [{lo}, {hi}], n = {n})"
        )));
    }
    let span = hi - lo;
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + span * (i as f64) / last
            }
        })
        .collect())
}
