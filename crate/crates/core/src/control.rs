//! Edge-side command generation: standoff reference, PID law and value of
//! information (VoI) tagging of C&C packets.

use serde::{Deserialize, Serialize};

use crate::world::Vec3;
use crate::{Result, SimError};

/// Proportional gain used by the tracking controller.
pub const DEFAULT_KP: f64 = 0.5;
/// Weight of the tracking error in [`compute_voi`].
pub const DEFAULT_VOI_WEIGHT: f64 = 0.5;
/// Size of one C&C packet: a velocity 3-vector plus header.
pub const DEFAULT_COMMAND_BITS: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp: DEFAULT_KP,
            ki: 0.0,
            kd: 0.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("control.kp", self.kp), ("control.ki", self.ki), ("control.kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::config(key, "gain must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandPacket {
    pub id: u64,
    pub generated_slot: u64,
    pub velocity_command: Vec3,
    pub voi: f64,
    pub size_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    pub integral_error: Vec3,
    pub previous_error: Vec3,
    pub last_estimate_slot: u64,
}

/// Point at distance `d_ref` from `target_est` on the ray towards `uav_pos`.
/// Coincident positions use the `+x` direction.
pub fn reference_point(uav_pos: Vec3, target_est: Vec3, d_ref: f64) -> Vec3 {
    let offset = uav_pos - target_est;
    let n = offset.norm();
    let dir = if n > 0.0 { offset * (1.0 / n) } else { Vec3::X };
    target_est + dir * d_ref
}

/// One PID step on `e = reference - uav_est`. Returns the velocity command
/// and the updated controller state.
pub fn compute_command(
    uav_est: Vec3,
    reference: Vec3,
    gains: &ControllerGains,
    state: &ControllerState,
    dt: f64,
) -> Result<(Vec3, ControllerState)> {
    if !uav_est.is_finite() || !reference.is_finite() {
        return Err(SimError::InvalidArgument("compute_command: non-finite input"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidArgument("compute_command: dt must be > 0"));
    }
    let error = reference - uav_est;
    let integral = state.integral_error + error * dt;
    let derivative = (error - state.previous_error) * (1.0 / dt);
    let cmd = error * gains.kp + integral * gains.ki + derivative * gains.kd;
    Ok((
        cmd,
        ControllerState {
            integral_error: integral,
            previous_error: error,
            last_estimate_slot: state.last_estimate_slot,
        },
    ))
}

/// Value of information of a command: `|cmd| + w * |error|`.
pub fn compute_voi(velocity_command: Vec3, current_error: Vec3, weight: f64) -> f64 {
    velocity_command.norm() + weight.max(0.0) * current_error.norm()
}

/// Hands out packet ids 1, 2, 3, ... for one run.
#[derive(Debug, Clone, Default)]
pub struct PacketIds {
    last: u64,
}

impl PacketIds {
    pub fn next_id(&mut self) -> u64 {
        self.last += 1;
        self.last
    }

    pub fn issued(&self) -> u64 {
        self.last
    }
}

pub fn make_packet(
    ids: &mut PacketIds,
    t: u64,
    cmd: Vec3,
    voi: f64,
    size_bits: u32,
) -> Result<CommandPacket> {
    if size_bits == 0 {
        return Err(SimError::InvalidArgument("make_packet: size_bits must be > 0"));
    }
    if !(voi >= 0.0) {
        return Err(SimError::InvalidArgument("make_packet: voi must be >= 0"));
    }
    Ok(CommandPacket {
        id: ids.next_id(),
        generated_slot: t,
        velocity_command: cmd,
        voi,
        size_bits,
    })
}
