//! Safety distance and speed-limit checks applied every slot.

use serde::{Deserialize, Serialize};

use crate::world::{distance, KinematicState};
use crate::{Result, SimError};

/// Operating contexts with a regulated maximum speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedLimitContext {
    /// Robot-arm end effector with a human in the workspace: 250 mm/s.
    EndEffectorHumanPresent,
    /// Mobile robot with an obstacle within 500 mm laterally: 1.2 m/s.
    MobileLateralWithin500mm,
    /// Mobile robot with lateral and frontal clearance within 500 mm: 0.7 m/s.
    MobileFrontalWithin500mm,
    /// Mobile robot without personnel detection: 0.3 m/s.
    MobileNoPersonnelDetection,
    Custom(f64),
}

impl SpeedLimitContext {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpeedLimitContext::Custom(v) if !(v.is_finite() && *v > 0.0) => Err(SimError::config(
                "safety.speed_context",
                "custom speed limit must be finite and > 0",
            )),
            _ => Ok(()),
        }
    }
}

/// Maximum permitted speed in m/s for `ctx`.
pub fn active_speed_limit(ctx: SpeedLimitContext) -> f64 {
    match ctx {
        SpeedLimitContext::EndEffectorHumanPresent => 0.25,
        SpeedLimitContext::MobileLateralWithin500mm => 1.2,
        SpeedLimitContext::MobileFrontalWithin500mm => 0.7,
        SpeedLimitContext::MobileNoPersonnelDetection => 0.3,
        SpeedLimitContext::Custom(v) => v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SafetyDistanceMode {
    Fixed,
    /// Linear braking margin: `base + relative_speed * reaction_time`.
    Dynamic { reaction_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyDistanceRequirement {
    pub base_d_s: f64,
    pub mode: SafetyDistanceMode,
}

impl SafetyDistanceRequirement {
    pub fn fixed(base_d_s: f64) -> Self {
        Self {
            base_d_s,
            mode: SafetyDistanceMode::Fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_d_s.is_finite() && self.base_d_s > 0.0) {
            return Err(SimError::config("safety.base_d_s", "must be > 0"));
        }
        if let SafetyDistanceMode::Dynamic { reaction_time } = self.mode {
            if !(reaction_time.is_finite() && reaction_time >= 0.0) {
                return Err(SimError::config("safety.reaction_time", "must be >= 0"));
            }
        }
        Ok(())
    }
}

pub fn effective_safety_distance(req: &SafetyDistanceRequirement, relative_speed: f64) -> f64 {
    match req.mode {
        SafetyDistanceMode::Fixed => req.base_d_s,
        SafetyDistanceMode::Dynamic { reaction_time } => {
            req.base_d_s + relative_speed.max(0.0) * reaction_time
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub slot: u64,
    pub distance_ok: bool,
    pub speed_ok: bool,
    pub effective_d_s: f64,
    pub effective_speed_limit: f64,
}

/// Checks separation against the (possibly speed-dependent) safety distance
/// and the UAV speed against the context's limit. Relative speed is the norm
/// of the velocity difference.
pub fn check_slot(
    uav: &KinematicState,
    target: &KinematicState,
    req: &SafetyDistanceRequirement,
    ctx: SpeedLimitContext,
    t: u64,
) -> Result<SafetyVerdict> {
    let d = distance(uav.position, target.position)?;
    let relative_speed = (uav.velocity - target.velocity).norm();
    let effective_d_s = effective_safety_distance(req, relative_speed);
    let limit = active_speed_limit(ctx);
    Ok(SafetyVerdict {
        slot: t,
        distance_ok: d > effective_d_s,
        speed_ok: uav.speed() <= limit,
        effective_d_s,
        effective_speed_limit: limit,
    })
}
