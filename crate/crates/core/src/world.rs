//! Kinematics of the UAV and the tracked target, and per-slot tracking status.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rescales `self` so that its norm does not exceed `max`, keeping the
    /// direction.
    pub fn clamp_norm(self, max: f64) -> Vec3 {
        let n = self.norm();
        if n > max && n > 0.0 {
            let scaled = self * (max / n);
            // Rounding can leave the rescaled norm a hair above `max`.
            if scaled.norm() > max {
                scaled * (1.0 - f64::EPSILON)
            } else {
                scaled
            }
        } else {
            self
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl KinematicState {
    pub const fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::ZERO,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Vec3, b: Vec3) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(SimError::InvalidArgument("distance: non-finite position"));
    }
    Ok((a - b).norm())
}

/// Safety distance `d_s` and tracking threshold `d_e`, with `d_e > d_s > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingThresholds {
    d_s: f64,
    d_e: f64,
}

impl TrackingThresholds {
    pub fn new(d_s: f64, d_e: f64) -> Result<Self> {
        let th = Self { d_s, d_e };
        th.validate()?;
        Ok(th)
    }

    pub fn d_s(&self) -> f64 {
        self.d_s
    }

    pub fn d_e(&self) -> f64 {
        self.d_e
    }

    /// Midpoint of the successful band.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.d_s + self.d_e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_s.is_finite() && self.d_e.is_finite()) || self.d_s <= 0.0 || self.d_e <= self.d_s
        {
            return Err(SimError::config(
                "thresholds",
                alloc::format!("need d_e > d_s > 0, got d_s={} d_e={}", self.d_s, self.d_e),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackingStatus {
    Unsafe,
    Successful,
    Unsuccessful,
}

impl TrackingStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackingStatus::Unsafe => "unsafe",
            TrackingStatus::Successful => "successful",
            TrackingStatus::Unsuccessful => "unsuccessful",
        }
    }
}

/// Unsafe if `d_t <= d_s`, successful if `d_s < d_t <= d_e`, unsuccessful
/// otherwise.
pub fn classify_tracking_status(d_t: f64, th: &TrackingThresholds) -> Result<TrackingStatus> {
    th.validate()?;
    if !(d_t >= 0.0) {
        return Err(SimError::InvalidArgument("classify: distance must be >= 0"));
    }
    Ok(if d_t <= th.d_s {
        TrackingStatus::Unsafe
    } else if d_t <= th.d_e {
        TrackingStatus::Successful
    } else {
        TrackingStatus::Unsuccessful
    })
}

/// First-order kinematic UAV: the velocity command is tracked instantly after
/// being clamped to `speed_cap`.
pub fn step_uav(
    state: &KinematicState,
    cmd: Vec3,
    dt: f64,
    speed_cap: f64,
) -> Result<KinematicState> {
    if !cmd.is_finite() {
        return Err(SimError::InvalidArgument("step_uav: non-finite command"));
    }
    if !(dt > 0.0) || !(speed_cap > 0.0) {
        return Err(SimError::InvalidArgument("step_uav: dt and speed_cap must be > 0"));
    }
    let velocity = cmd.clamp_norm(speed_cap);
    Ok(KinematicState {
        position: state.position + velocity * dt,
        velocity,
    })
}

/// How the target moves. Targets stay in their initial `z` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetTrajectory {
    /// Constant-speed loop through `points` and back to the first one.
    WaypointLoop { points: Vec<Vec3>, speed: f64 },
    /// `origin + drift * s + amplitude * sin(2 pi s / period)` along `y`.
    Sinusoid {
        origin: Vec3,
        amplitude: f64,
        period: f64,
        drift: Vec3,
    },
    /// Velocity random walk in the x-y plane: each slot adds zero-mean
    /// Gaussian increments of `step_stddev` m/s per axis, then rescales to
    /// `max_speed`.
    SeededRandomWalk {
        origin: Vec3,
        step_stddev: f64,
        max_speed: f64,
        seed: u64,
    },
}

impl Default for TargetTrajectory {
    fn default() -> Self {
        TargetTrajectory::Sinusoid {
            origin: Vec3::ZERO,
            amplitude: 2.0,
            period: 20.0,
            drift: Vec3::new(0.5, 0.0, 0.0),
        }
    }
}

impl TargetTrajectory {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(SimError::config("target", reason));
        match self {
            TargetTrajectory::WaypointLoop { points, speed } => {
                if points.is_empty() {
                    return bad("waypoint loop needs at least one point");
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return bad("waypoints must be finite");
                }
                if !(speed.is_finite() && *speed >= 0.0) {
                    return bad("speed must be finite and >= 0");
                }
            }
            TargetTrajectory::Sinusoid {
                origin,
                amplitude,
                period,
                drift,
            } => {
                if !origin.is_finite() || !drift.is_finite() {
                    return bad("origin and drift must be finite");
                }
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return bad("amplitude must be finite and >= 0");
                }
                if !(period.is_finite() && *period > 0.0) {
                    return bad("period must be > 0");
                }
            }
            TargetTrajectory::SeededRandomWalk {
                origin,
                step_stddev,
                max_speed,
                ..
            } => {
                if !origin.is_finite() {
                    return bad("origin must be finite");
                }
                if !(step_stddev.is_finite() && *step_stddev >= 0.0) {
                    return bad("step_stddev must be finite and >= 0");
                }
                if !(max_speed.is_finite() && *max_speed >= 0.0) {
                    return bad("max_speed must be finite and >= 0");
                }
            }
        }
        Ok(())
    }

    /// Upper bound on the speed this trajectory can produce.
    pub fn max_speed(&self) -> f64 {
        match self {
            TargetTrajectory::WaypointLoop { points, speed } => {
                if loop_length(points) > 0.0 {
                    *speed
                } else {
                    0.0
                }
            }
            TargetTrajectory::Sinusoid {
                amplitude,
                period,
                drift,
                ..
            } => drift.norm() + amplitude * TAU / period,
            TargetTrajectory::SeededRandomWalk { max_speed, .. } => *max_speed,
        }
    }

    /// State at slot 0.
    pub fn initial_state(&self) -> KinematicState {
        match self {
            TargetTrajectory::WaypointLoop { points, speed } => waypoint_state(points, *speed, 0.0),
            TargetTrajectory::Sinusoid { .. } => sinusoid_state(self, 0.0),
            TargetTrajectory::SeededRandomWalk { origin, .. } => KinematicState::at_rest(*origin),
        }
    }
}

fn loop_length(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    (0..points.len())
        .map(|i| (points[(i + 1) % points.len()] - points[i]).norm())
        .sum()
}

fn waypoint_state(points: &[Vec3], speed: f64, time: f64) -> KinematicState {
    let total = loop_length(points);
    if total <= 0.0 || speed <= 0.0 {
        return KinematicState::at_rest(points[0]);
    }
    let mut s = libm::fmod(speed * time, total);
    for i in 0..points.len() {
        let a = points[i];
        let b = points[(i + 1) % points.len()];
        let seg = (b - a).norm();
        if seg == 0.0 {
            continue;
        }
        if s <= seg {
            let dir = (b - a) * (1.0 / seg);
            return KinematicState {
                position: a + dir * s,
                velocity: dir * speed,
            };
        }
        s -= seg;
    }
    KinematicState::at_rest(points[0])
}

fn sinusoid_state(traj: &TargetTrajectory, time: f64) -> KinematicState {
    let TargetTrajectory::Sinusoid {
        origin,
        amplitude,
        period,
        drift,
    } = traj
    else {
        unreachable!("sinusoid_state called on another trajectory kind")
    };
    let phase = TAU * time / period;
    KinematicState {
        position: *origin + *drift * time + Vec3::Y * (amplitude * libm::sin(phase)),
        velocity: *drift + Vec3::Y * (amplitude * TAU / period * libm::cos(phase)),
    }
}

/// Stateful target generator. Closed-form trajectories are evaluated at
/// `t * dt`; the random walk advances one slot per call from its own seed,
/// so the sequence depends only on the trajectory description.
#[derive(Debug, Clone)]
pub struct TargetMotion {
    trajectory: TargetTrajectory,
    dt: f64,
    state: KinematicState,
    last_slot: u64,
    walk: Option<(ChaCha8Rng, Normal<f64>)>,
}

impl TargetMotion {
    pub fn new(trajectory: TargetTrajectory, dt: f64) -> Result<Self> {
        trajectory.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::config("sim.dt", "must be > 0"));
        }
        let walk = match &trajectory {
            TargetTrajectory::SeededRandomWalk {
                step_stddev, seed, ..
            } => Some((
                crate::rng::stream_rng(*seed, 0x7a_u64),
                Normal::new(0.0, *step_stddev).map_err(|_| SimError::config("target", "bad stddev"))?,
            )),
            _ => None,
        };
        Ok(Self {
            state: trajectory.initial_state(),
            trajectory,
            dt,
            last_slot: 0,
            walk,
        })
    }

    pub fn state(&self) -> KinematicState {
        self.state
    }

    pub fn trajectory(&self) -> &TargetTrajectory {
        &self.trajectory
    }

    /// Advances to slot `t`, which must be the slot after the last one
    /// generated.
    pub fn step(&mut self, t: u64) -> Result<KinematicState> {
        if t != self.last_slot + 1 {
            return Err(SimError::InvalidArgument("step_target: slots must be consecutive from 1"));
        }
        self.last_slot = t;
        let time = t as f64 * self.dt;
        self.state = match &self.trajectory {
            TargetTrajectory::WaypointLoop { points, speed } => waypoint_state(points, *speed, time),
            TargetTrajectory::Sinusoid { .. } => sinusoid_state(&self.trajectory, time),
            TargetTrajectory::SeededRandomWalk { max_speed, .. } => {
                let (rng, normal) = self.walk.as_mut().expect("walk generator");
                let dv = Vec3::new(normal.sample(rng), normal.sample(rng), 0.0);
                let velocity = (self.state.velocity + dv).clamp_norm(*max_speed);
                KinematicState {
                    position: self.state.position + velocity * self.dt,
                    velocity,
                }
            }
        };
        Ok(self.state)
    }
}

/// Convenience wrapper matching the slot-indexed view: generates slots
/// `1..=t` of `traj` and returns the state at slot `t`.
pub fn step_target(traj: &TargetTrajectory, t: u64, dt: f64) -> Result<KinematicState> {
    let mut motion = TargetMotion::new(traj.clone(), dt)?;
    let mut state = motion.state();
    for slot in 1..=t {
        state = motion.step(slot)?;
    }
    Ok(state)
}
