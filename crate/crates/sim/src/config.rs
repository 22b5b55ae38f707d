//! Scenario files.
//!
//! A scenario is a TOML document whose sections mirror the simulator's
//! parameters (`sim.T`, `thresholds.d_s`, `downlink.delay.p`, ...). Every key
//! is optional; missing keys take the library defaults, and keys that the
//! schema does not know are rejected.

use std::path::Path;

use rcs_core::control::ControllerGains;
use rcs_core::engine::{PolicySet, ScenarioConfig};
use rcs_core::network::{ChannelConfig, DelayModel, SensorKind, SensorSpec};
use rcs_core::policies::{ExecutionPolicy, QueueDiscipline, SemCEConfig, TxRatePolicy};
use rcs_core::safety::{SafetyDistanceMode, SpeedLimitContext};
use rcs_core::world::{KinematicState, TargetTrajectory, TrackingThresholds, Vec3};
use rcs_core::SimError;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub thresholds: ThresholdSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub uplink: LinkSection,
    #[serde(default)]
    pub downlink: LinkSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub uav: UavSection,
    #[serde(default)]
    pub safety: SafetySection,
    #[serde(default)]
    pub edge: EdgeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<Vec<SensorEntry>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub slots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_e: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ki: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kd: Option<f64>,
    /// Defaults to the middle of `(d_s, d_e]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voi_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packet_bits: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue_capacity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retransmit: Option<bool>,
    /// Only meaningful on the downlink; the uplink follows
    /// `policy.sensor_queue`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discipline: Option<QueueDiscipline>,
    #[serde(default)]
    pub delay: DelaySection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelaySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<DelayKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    Deterministic,
    Geometric,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensor_queue: Option<QueueDiscipline>,
    #[serde(default)]
    pub semce: SemceSection,
    #[serde(default)]
    pub tx: TxSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionKind {
    #[serde(alias = "latest")]
    LatestOnly,
    Fifo,
    Semce,
}

impl ExecutionKind {
    pub fn parse(s: &str) -> Option<ExecutionKind> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "latest_only" | "latest" | "latestonly" => Some(ExecutionKind::LatestOnly),
            "fifo" => Some(ExecutionKind::Fifo),
            "semce" => Some(ExecutionKind::Semce),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExecutionKind::LatestOnly => "latest_only",
            ExecutionKind::Fifo => "fifo",
            ExecutionKind::Semce => "semce",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_aoi: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TxKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Fixed,
    SemanticDynamic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TargetKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Sinusoid,
    WaypointLoop,
    RandomWalk,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavSection {
    /// Defaults to `d_ref` behind the target's start along `-x`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_context: Option<SpeedContextKind>,
    /// Limit in m/s for the `custom` context.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_mode: Option<DistanceModeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedContextKind {
    EndEffectorHumanPresent,
    #[serde(rename = "mobile_lateral_within_500mm")]
    MobileLateralWithin500mm,
    #[serde(rename = "mobile_frontal_within_500mm")]
    MobileFrontalWithin500mm,
    MobileNoPersonnelDetection,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceModeKind {
    Fixed,
    Dynamic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub kind: String,
    pub frequency_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_bits: Option<u32>,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn unused(key: &str, kind: &str) -> CliError {
    CliError::config(key, format!("not used by kind `{kind}`"))
}

impl LinkSection {
    fn to_channel(&self, link: &str) -> Result<ChannelConfig, CliError> {
        let base = ChannelConfig::perfect();
        let d = &self.delay;
        let delay = match d.kind.unwrap_or(DelayKind::Deterministic) {
            DelayKind::Deterministic => {
                if d.p.is_some() {
                    return Err(unused(&format!("{link}.delay.p"), "deterministic"));
                }
                if d.cap.is_some() {
                    return Err(unused(&format!("{link}.delay.cap"), "deterministic"));
                }
                DelayModel::Deterministic { k: d.k.unwrap_or(1) }
            }
            DelayKind::Geometric => {
                if d.k.is_some() {
                    return Err(unused(&format!("{link}.delay.k"), "geometric"));
                }
                let p = d
                    .p
                    .ok_or_else(|| CliError::config(format!("{link}.delay.p"), "required for geometric delay"))?;
                DelayModel::Geometric {
                    p,
                    cap: d.cap.unwrap_or(20),
                }
            }
        };
        Ok(ChannelConfig {
            capacity_bits_per_slot: self.capacity_bits.unwrap_or(base.capacity_bits_per_slot),
            loss_prob: self.loss_prob.unwrap_or(base.loss_prob),
            delay,
            queue_capacity: self.queue_capacity.or(base.queue_capacity),
            retransmit: self.retransmit.unwrap_or(base.retransmit),
        })
    }

    fn resolved(ch: &ChannelConfig, discipline: Option<QueueDiscipline>) -> Self {
        let delay = match ch.delay {
            DelayModel::Deterministic { k } => DelaySection {
                kind: Some(DelayKind::Deterministic),
                k: Some(k),
                ..DelaySection::default()
            },
            DelayModel::Geometric { p, cap } => DelaySection {
                kind: Some(DelayKind::Geometric),
                p: Some(p),
                cap: Some(cap),
                ..DelaySection::default()
            },
        };
        LinkSection {
            capacity_bits: Some(ch.capacity_bits_per_slot),
            loss_prob: Some(ch.loss_prob),
            queue_capacity: ch.queue_capacity,
            retransmit: Some(ch.retransmit),
            discipline,
            delay,
        }
    }
}

impl TargetSection {
    fn to_trajectory(&self) -> Result<TargetTrajectory, CliError> {
        let kind = self.kind.unwrap_or(TargetKind::Sinusoid);
        let name = match kind {
            TargetKind::Sinusoid => "sinusoid",
            TargetKind::WaypointLoop => "waypoint_loop",
            TargetKind::RandomWalk => "random_walk",
        };
        let allowed: &[&str] = match kind {
            TargetKind::Sinusoid => &["origin", "amplitude", "period", "drift"],
            TargetKind::WaypointLoop => &["points", "speed"],
            TargetKind::RandomWalk => &["origin", "step_stddev", "max_speed", "seed"],
        };
        let present = [
            ("origin", self.origin.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("period", self.period.is_some()),
            ("drift", self.drift.is_some()),
            ("points", self.points.is_some()),
            ("speed", self.speed.is_some()),
            ("step_stddev", self.step_stddev.is_some()),
            ("max_speed", self.max_speed.is_some()),
            ("seed", self.seed.is_some()),
        ];
        if let Some((key, _)) = present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            return Err(unused(&format!("target.{key}"), name));
        }
        let origin = self.origin.map(vec3).unwrap_or(Vec3::ZERO);
        Ok(match kind {
            TargetKind::Sinusoid => {
                let TargetTrajectory::Sinusoid {
                    amplitude,
                    period,
                    drift,
                    ..
                } = TargetTrajectory::default()
                else {
                    unreachable!("the default target is a sinusoid")
                };
                TargetTrajectory::Sinusoid {
                    origin,
                    amplitude: self.amplitude.unwrap_or(amplitude),
                    period: self.period.unwrap_or(period),
                    drift: self.drift.map(vec3).unwrap_or(drift),
                }
            }
            TargetKind::WaypointLoop => TargetTrajectory::WaypointLoop {
                points: self
                    .points
                    .as_ref()
                    .ok_or_else(|| CliError::config("target.points", "required for a waypoint loop"))?
                    .iter()
                    .copied()
                    .map(vec3)
                    .collect(),
                speed: self.speed.unwrap_or(0.5),
            },
            TargetKind::RandomWalk => TargetTrajectory::SeededRandomWalk {
                origin,
                step_stddev: self.step_stddev.unwrap_or(0.1),
                max_speed: self.max_speed.unwrap_or(0.5),
                seed: self.seed.unwrap_or(0),
            },
        })
    }

    fn resolved(traj: &TargetTrajectory) -> Self {
        match traj {
            TargetTrajectory::Sinusoid {
                origin,
                amplitude,
                period,
                drift,
            } => TargetSection {
                kind: Some(TargetKind::Sinusoid),
                origin: Some(arr(*origin)),
                amplitude: Some(*amplitude),
                period: Some(*period),
                drift: Some(arr(*drift)),
                ..TargetSection::default()
            },
            TargetTrajectory::WaypointLoop { points, speed } => TargetSection {
                kind: Some(TargetKind::WaypointLoop),
                points: Some(points.iter().copied().map(arr).collect()),
                speed: Some(*speed),
                ..TargetSection::default()
            },
            TargetTrajectory::SeededRandomWalk {
                origin,
                step_stddev,
                max_speed,
                seed,
            } => TargetSection {
                kind: Some(TargetKind::RandomWalk),
                origin: Some(arr(*origin)),
                step_stddev: Some(*step_stddev),
                max_speed: Some(*max_speed),
                seed: Some(*seed),
                ..TargetSection::default()
            },
        }
    }
}

impl SafetySection {
    fn speed_context(&self) -> Result<SpeedLimitContext, CliError> {
        let kind = self.speed_context.unwrap_or(SpeedContextKind::Custom);
        if kind != SpeedContextKind::Custom && self.speed_limit.is_some() {
            return Err(CliError::config(
                "safety.speed_limit",
                "only used with speed_context = \"custom\"",
            ));
        }
        Ok(match kind {
            SpeedContextKind::EndEffectorHumanPresent => SpeedLimitContext::EndEffectorHumanPresent,
            SpeedContextKind::MobileLateralWithin500mm => SpeedLimitContext::MobileLateralWithin500mm,
            SpeedContextKind::MobileFrontalWithin500mm => SpeedLimitContext::MobileFrontalWithin500mm,
            SpeedContextKind::MobileNoPersonnelDetection => SpeedLimitContext::MobileNoPersonnelDetection,
            SpeedContextKind::Custom => SpeedLimitContext::Custom(self.speed_limit.unwrap_or(2.0)),
        })
    }

    fn distance_mode(&self) -> Result<SafetyDistanceMode, CliError> {
        match self.distance_mode.unwrap_or(DistanceModeKind::Fixed) {
            DistanceModeKind::Fixed => match self.reaction_time {
                Some(_) => Err(unused("safety.reaction_time", "fixed")),
                None => Ok(SafetyDistanceMode::Fixed),
            },
            DistanceModeKind::Dynamic => Ok(SafetyDistanceMode::Dynamic {
                reaction_time: self.reaction_time.unwrap_or(0.5),
            }),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config("<syntax>", e.message().trim().to_string()))?;
        ScenarioFile::from_table(table)
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, CliError> {
        ScenarioFile::parse(&read_text(path)?)
    }

    pub fn from_table(table: toml::Table) -> Result<ScenarioFile, CliError> {
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." { "<root>".to_string() } else { path };
            CliError::config(key, e.into_inner().message().trim().to_string())
        })
    }

    /// Builds the simulator configuration, filling in defaults.
    pub fn to_scenario(&self) -> Result<ScenarioConfig, CliError> {
        let base = ScenarioConfig::default();
        let thresholds = TrackingThresholds::new(
            self.thresholds.d_s.unwrap_or(base.thresholds.d_s()),
            self.thresholds.d_e.unwrap_or(base.thresholds.d_e()),
        )?;
        let d_ref = self.control.d_ref.unwrap_or_else(|| thresholds.midpoint());
        let trajectory = self.target.to_trajectory()?;
        let start = trajectory.initial_state().position;
        let uav_initial = KinematicState {
            position: self
                .uav
                .position
                .map(vec3)
                .unwrap_or(start - Vec3::X * d_ref),
            velocity: self.uav.velocity.map(vec3).unwrap_or(Vec3::ZERO),
        };

        if self.uplink.discipline.is_some() {
            return Err(CliError::config(
                "uplink.discipline",
                "the uplink queue follows policy.sensor_queue",
            ));
        }
        let p = &self.policy;
        let semce = SemCEConfig {
            gamma: p.semce.gamma.unwrap_or(SemCEConfig::default().gamma),
            max_aoi: p.semce.max_aoi.unwrap_or(SemCEConfig::default().max_aoi),
        };
        semce.validate()?;
        let execution = match p.execution.unwrap_or(ExecutionKind::LatestOnly) {
            ExecutionKind::LatestOnly => ExecutionPolicy::LatestOnly,
            ExecutionKind::Fifo => ExecutionPolicy::Fifo,
            ExecutionKind::Semce => ExecutionPolicy::SemCE(semce),
        };
        let tx = match p.tx.kind.unwrap_or(TxKind::Fixed) {
            TxKind::Fixed => {
                if p.tx.boost.is_some() {
                    return Err(unused("policy.tx.boost", "fixed"));
                }
                if p.tx.threshold.is_some() {
                    return Err(unused("policy.tx.threshold", "fixed"));
                }
                TxRatePolicy::FixedPeriod {
                    period: p.tx.base.unwrap_or(1),
                }
            }
            TxKind::SemanticDynamic => TxRatePolicy::SemanticDynamic {
                base_period: p.tx.base.unwrap_or(1),
                boost_period: p.tx.boost.unwrap_or(1),
                risk_threshold: p.tx.threshold.unwrap_or(0.5),
            },
        };

        let sensors = match &self.sensors {
            None => base.sensors.clone(),
            Some(list) => list
                .iter()
                .map(|s| {
                    let kind = SensorKind::from_name(&s.kind).ok_or_else(|| {
                        CliError::config("sensors.kind", format!("unknown sensor `{}`", s.kind))
                    })?;
                    Ok(SensorSpec::from_catalog(kind, s.frequency_hz, s.size_bits)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?,
        };

        let cfg = ScenarioConfig {
            slots: self.sim.slots.unwrap_or(base.slots),
            dt: self.sim.dt.unwrap_or(base.dt),
            warmup: self.sim.warmup.unwrap_or(base.warmup),
            thresholds,
            d_ref,
            gains: ControllerGains {
                kp: self.control.kp.unwrap_or(base.gains.kp),
                ki: self.control.ki.unwrap_or(base.gains.ki),
                kd: self.control.kd.unwrap_or(base.gains.kd),
            },
            voi_weight: self.control.voi_weight.unwrap_or(base.voi_weight),
            command_bits: self.control.packet_bits.unwrap_or(base.command_bits),
            uplink: self.uplink.to_channel("uplink")?,
            downlink: self.downlink.to_channel("downlink")?,
            downlink_discipline: self.downlink.discipline.unwrap_or(base.downlink_discipline),
            sensors,
            edge_service_rate: self.edge.service_rate.unwrap_or(base.edge_service_rate),
            policies: PolicySet {
                execution,
                sensor_queue: p.sensor_queue.unwrap_or_default(),
                tx,
            },
            speed_context: self.safety.speed_context()?,
            safety_mode: self.safety.distance_mode()?,
            trajectory,
            uav_initial,
            seed: self.seed.unwrap_or(base.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully expanded file form of `cfg`: feeding it back through
    /// [`ScenarioFile::to_scenario`] gives `cfg` again.
    pub fn resolved(cfg: &ScenarioConfig) -> ScenarioFile {
        let (execution, semce) = match cfg.policies.execution {
            ExecutionPolicy::LatestOnly => (ExecutionKind::LatestOnly, SemCEConfig::default()),
            ExecutionPolicy::Fifo => (ExecutionKind::Fifo, SemCEConfig::default()),
            ExecutionPolicy::SemCE(c) => (ExecutionKind::Semce, c),
        };
        let tx = match cfg.policies.tx {
            TxRatePolicy::FixedPeriod { period } => TxSection {
                kind: Some(TxKind::Fixed),
                base: Some(period),
                ..TxSection::default()
            },
            TxRatePolicy::SemanticDynamic {
                base_period,
                boost_period,
                risk_threshold,
            } => TxSection {
                kind: Some(TxKind::SemanticDynamic),
                base: Some(base_period),
                boost: Some(boost_period),
                threshold: Some(risk_threshold),
            },
        };
        let (speed_context, speed_limit) = match cfg.speed_context {
            SpeedLimitContext::EndEffectorHumanPresent => (SpeedContextKind::EndEffectorHumanPresent, None),
            SpeedLimitContext::MobileLateralWithin500mm => (SpeedContextKind::MobileLateralWithin500mm, None),
            SpeedLimitContext::MobileFrontalWithin500mm => (SpeedContextKind::MobileFrontalWithin500mm, None),
            SpeedLimitContext::MobileNoPersonnelDetection => {
                (SpeedContextKind::MobileNoPersonnelDetection, None)
            }
            SpeedLimitContext::Custom(v) => (SpeedContextKind::Custom, Some(v)),
        };
        let (distance_mode, reaction_time) = match cfg.safety_mode {
            SafetyDistanceMode::Fixed => (DistanceModeKind::Fixed, None),
            SafetyDistanceMode::Dynamic { reaction_time } => (DistanceModeKind::Dynamic, Some(reaction_time)),
        };
        ScenarioFile {
            seed: Some(cfg.seed),
            sim: SimSection {
                slots: Some(cfg.slots),
                dt: Some(cfg.dt),
                warmup: Some(cfg.warmup),
            },
            thresholds: ThresholdSection {
                d_s: Some(cfg.thresholds.d_s()),
                d_e: Some(cfg.thresholds.d_e()),
            },
            control: ControlSection {
                kp: Some(cfg.gains.kp),
                ki: Some(cfg.gains.ki),
                kd: Some(cfg.gains.kd),
                d_ref: Some(cfg.d_ref),
                voi_weight: Some(cfg.voi_weight),
                packet_bits: Some(cfg.command_bits),
            },
            uplink: LinkSection::resolved(&cfg.uplink, None),
            downlink: LinkSection::resolved(&cfg.downlink, Some(cfg.downlink_discipline)),
            policy: PolicySection {
                execution: Some(execution),
                sensor_queue: Some(cfg.policies.sensor_queue),
                semce: SemceSection {
                    gamma: Some(semce.gamma),
                    max_aoi: Some(semce.max_aoi),
                },
                tx,
            },
            target: TargetSection::resolved(&cfg.trajectory),
            uav: UavSection {
                position: Some(arr(cfg.uav_initial.position)),
                velocity: Some(arr(cfg.uav_initial.velocity)),
            },
            safety: SafetySection {
                speed_context: Some(speed_context),
                speed_limit,
                distance_mode: Some(distance_mode),
                reaction_time,
            },
            edge: EdgeSection {
                service_rate: Some(cfg.edge_service_rate),
            },
            sensors: Some(
                cfg.sensors
                    .iter()
                    .map(|s| SensorEntry {
                        kind: s.name.clone(),
                        frequency_hz: s.frequency_hz,
                        size_bits: Some(s.size_bits),
                    })
                    .collect(),
            ),
        }
    }

    /// TOML text without empty sections.
    pub fn to_toml(&self) -> String {
        let mut value = toml::Value::try_from(self).expect("scenario files always serialize");
        prune(&mut value);
        toml::to_string(&value).expect("scenario files always serialize")
    }
}

fn prune(value: &mut toml::Value) {
    if let toml::Value::Table(t) = value {
        for (_, v) in t.iter_mut() {
            prune(v);
        }
        t.retain(|_, v| !matches!(v, toml::Value::Table(inner) if inner.is_empty()));
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parsed scenario table with `key=value` overrides applied. Values are read
/// as TOML literals, falling back to plain strings.
pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<ScenarioFile, CliError> {
    let text = read_text(path)?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<syntax>", e.message().trim().to_string()))?;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::config(o.clone(), "override must look like key=value"))?;
        set_key(&mut table, key.trim(), parse_value(value.trim()))?;
    }
    ScenarioFile::from_table(table)
}

pub fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Sets a dotted key, creating intermediate tables.
pub fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::config(key, "empty key"))?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(key, format!("`{part}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config { key, reason } => CliError::Config { key, reason },
            other => CliError::Sim(other),
        }
    }
}
