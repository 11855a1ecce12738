//! Threshold search and the choice between 2D and 3D decompositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parts::{Decomposition, Source};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub gamma_init_2d: f64,
    pub gamma_init_3d: f64,
    pub gamma_step: f64,
    pub gamma_floor: f64,
    /// Largest 3D part count still accepted.
    pub omega: usize,
    /// Smallest confident-depth fraction still accepted for 3D.
    pub alpha: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            gamma_init_2d: 0.15,
            gamma_init_3d: 0.2,
            gamma_step: 0.025,
            gamma_floor: 0.01,
            omega: 10,
            alpha: 0.85,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let ok = [
            self.gamma_init_2d,
            self.gamma_init_3d,
            self.gamma_step,
            self.gamma_floor,
        ]
        .into_iter()
        .all(unit)
            && (0.0..=1.0).contains(&self.alpha)
            && self.gamma_floor < self.gamma_init_2d
            && self.gamma_floor < self.gamma_init_3d
            && self.omega >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid selector config {self:?}")))
        }
    }
}

// Thresholds are reported on a 1e-9 grid so 0.15 - 2 * 0.025 prints as 0.1.
fn tidy(g: f64) -> f64 {
    (g * 1e9).round() / 1e9
}

/// `init, init - step, ...` down to and including the last value not below
/// `floor`.
pub fn gamma_sequence(init: f64, step: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let g = tidy(init - k as f64 * step);
        if g < floor - 1e-12 || g <= 0.0 {
            return out;
        }
        out.push(g);
        k += 1;
    }
}

/// Lower the threshold until the decomposition has at least two parts or
/// the floor is reached; in the latter case the last (single-part)
/// decomposition is returned flagged degenerate.
pub fn threshold_search(
    decompose: impl Fn(f64) -> Decomposition,
    gamma_init: f64,
    config: &SelectorConfig,
) -> Decomposition {
    let seq = gamma_sequence(gamma_init, config.gamma_step, config.gamma_floor);
    let mut last = None;
    for (k, &g) in seq.iter().enumerate() {
        let mut d = decompose(g);
        d.gamma_used = g;
        d.iterations = k as u32;
        if d.len() >= 2 {
            return d;
        }
        last = Some(d);
    }
    let mut d = last.unwrap_or_else(|| {
        let mut d = decompose(gamma_init);
        d.gamma_used = tidy(gamma_init);
        d
    });
    d.degenerate = true;
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    TooManyParts3D,
    LowDepthConfidence,
    Preferred3D,
    /// No depth, or 2D requested explicitly.
    Forced2D,
    /// 3D requested explicitly.
    Forced3D,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub chosen: Decomposition,
    pub rejected: Option<Decomposition>,
    pub reason: Reason,
    pub conf_fraction: f64,
}

impl SelectionResult {
    pub fn source(&self) -> Source {
        self.chosen.source
    }
}

/// The rule alone: 3D iff it has at most `omega` parts and at least `alpha`
/// of the depth is confident.
pub fn decide(parts_3d: usize, conf_fraction: f64, config: &SelectorConfig) -> Reason {
    if parts_3d > config.omega {
        Reason::TooManyParts3D
    } else if conf_fraction < config.alpha {
        Reason::LowDepthConfidence
    } else {
        Reason::Preferred3D
    }
}

pub fn select(
    c2d: Decomposition,
    c3d: Decomposition,
    conf_fraction: f64,
    config: &SelectorConfig,
) -> SelectionResult {
    let reason = decide(c3d.len(), conf_fraction, config);
    let (chosen, rejected) = if reason == Reason::Preferred3D {
        (c3d, c2d)
    } else {
        (c2d, c3d)
    };
    SelectionResult {
        chosen,
        rejected: Some(rejected),
        reason,
        conf_fraction,
    }
}
