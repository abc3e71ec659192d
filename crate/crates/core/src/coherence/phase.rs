//! Phase-difference arrows and their lead/lag reading.
//!
//! Angles follow the convention of the first argument of the coherence:
//! an arrow at 0 points right (in phase), a positive angle points up and
//! means the first series leads.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::CoherenceField;

/// Angular tolerance used for the exact classes (0, ±pi/2, pi): 5 degrees.
pub const DEFAULT_PHASE_TOLERANCE: f64 = PI / 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseClass {
    /// Arrow to the right: the series co-move.
    InPhase,
    /// Right and up.
    InPhaseLeading,
    /// Right and down.
    InPhaseLagging,
    /// Arrow to the left.
    OutOfPhase,
    /// Left and up.
    OutOfPhaseLagging,
    /// Left and down.
    OutOfPhaseLeading,
    /// Straight up: first series ahead by a quarter cycle.
    QuarterLead,
    /// Straight down: first series behind by a quarter cycle.
    QuarterLag,
}

impl PhaseClass {
    pub fn classify(angle: f64, tolerance: f64) -> Self {
        let a = super::wrap_phase(angle);
        if a.abs() <= tolerance {
            PhaseClass::InPhase
        } else if a.abs() >= PI - tolerance {
            PhaseClass::OutOfPhase
        } else if (a - FRAC_PI_2).abs() <= tolerance {
            PhaseClass::QuarterLead
        } else if (a + FRAC_PI_2).abs() <= tolerance {
            PhaseClass::QuarterLag
        } else if a > 0.0 && a < FRAC_PI_2 {
            PhaseClass::InPhaseLeading
        } else if a < 0.0 && a > -FRAC_PI_2 {
            PhaseClass::InPhaseLagging
        } else if a > FRAC_PI_2 {
            PhaseClass::OutOfPhaseLagging
        } else {
            PhaseClass::OutOfPhaseLeading
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            PhaseClass::InPhase => "in-phase (co-move)",
            PhaseClass::InPhaseLeading => "in-phase, first series leading",
            PhaseClass::InPhaseLagging => "in-phase, first series lagging",
            PhaseClass::OutOfPhase => "out-of-phase",
            PhaseClass::OutOfPhaseLagging => "out-of-phase, first series lagging",
            PhaseClass::OutOfPhaseLeading => "out-of-phase, first series leading",
            PhaseClass::QuarterLead => "first series leading by a quarter cycle",
            PhaseClass::QuarterLag => "first series lagging by a quarter cycle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseArrow {
    pub time: usize,
    pub scale: usize,
    pub angle: f64,
}

impl PhaseArrow {
    pub fn class(&self) -> PhaseClass {
        PhaseClass::classify(self.angle, DEFAULT_PHASE_TOLERANCE)
    }
}

/// Arrows on a `stride_time` × `stride_scale` lattice, kept where the
/// coherence reaches `threshold` inside the cone.
pub fn phase_arrows(
    field: &CoherenceField,
    stride_time: usize,
    stride_scale: usize,
    threshold: f64,
) -> Vec<PhaseArrow> {
    let (rows, cols) = field.r2.dim();
    let (st, ss) = (stride_time.max(1), stride_scale.max(1));
    let mut arrows = Vec::new();
    for scale in (0..rows).step_by(ss) {
        for time in (0..cols).step_by(st) {
            let r2 = field.r2[[scale, time]];
            if r2 >= threshold && field.inside_coi(scale, time) {
                arrows.push(PhaseArrow {
                    time,
                    scale,
                    angle: field.phase[[scale, time]],
                });
            }
        }
    }
    arrows
}

/// Direction of the resultant of unit vectors; `None` for an empty or
/// perfectly balanced set.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, c, n) = angles
        .into_iter()
        .filter(|a| !a.is_nan())
        .fold((0.0, 0.0, 0usize), |(s, c, n), a| {
            (s + a.sin(), c + a.cos(), n + 1)
        });
    if n == 0 || s.hypot(c) < 1e-12 * n as f64 {
        None
    } else {
        Some(s.atan2(c))
    }
}
