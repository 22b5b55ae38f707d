//! The closed loop, slot by slot.
//!
//! Within slot `t` the order is fixed:
//!
//! 1. every sensor may emit a snapshot of the current true states, which is
//!    queued on the uplink;
//! 2. the uplink transmits and delivers; the edge orders its sensor queue and
//!    ingests the top sample as its estimate;
//! 3. the edge extrapolates the estimate to `t`, runs the PID law towards the
//!    standoff point and, if the transmission gate opens, queues a C&C packet
//!    on the downlink;
//! 4. the downlink transmits and delivers into the robot's command queue;
//! 5. the execution policy picks a command, or the robot holds the last one;
//! 6. the command is clamped to the active speed limit;
//! 7. UAV and target advance one slot;
//! 8. separation, tracking status and safety verdict are recorded.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::control::{
    compute_command, compute_voi, make_packet, reference_point, CommandPacket, ControllerGains,
    ControllerState, PacketIds, DEFAULT_COMMAND_BITS, DEFAULT_VOI_WEIGHT,
};
use crate::network::{
    ChannelConfig, Link, LinkCounters, Observation, SensorEmitter, SensorKind, SensorPacket,
    SensorSpec,
};
use crate::policies::{
    order_sensor_queue, risk_proximity, select_command, sensor_importance, tx_gate,
    ExecutionDecision, ExecutionPolicy, QueueDiscipline, TxRatePolicy,
};
use crate::safety::{
    active_speed_limit, check_slot, SafetyDistanceMode, SafetyDistanceRequirement,
    SafetyVerdict, SpeedLimitContext,
};
use crate::world::{
    classify_tracking_status, distance, step_uav, KinematicState, TargetMotion, TargetTrajectory,
    TrackingStatus, TrackingThresholds, Vec3,
};
use crate::{stream_rng, Result, SimError};

const UPLINK_STREAM: u64 = 1;
const DOWNLINK_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicySet {
    pub execution: ExecutionPolicy,
    pub sensor_queue: QueueDiscipline,
    pub tx: TxRatePolicy,
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of slots `T`.
    pub slots: u64,
    /// Slot duration in seconds.
    pub dt: f64,
    /// Leading slots excluded from the metrics.
    pub warmup: u64,
    pub thresholds: TrackingThresholds,
    /// Standoff distance the controller aims for.
    pub d_ref: f64,
    pub gains: ControllerGains,
    pub voi_weight: f64,
    pub command_bits: u32,
    pub uplink: ChannelConfig,
    pub downlink: ChannelConfig,
    pub downlink_discipline: QueueDiscipline,
    pub sensors: Vec<SensorSpec>,
    /// Sensor samples the edge can process per slot.
    pub edge_service_rate: usize,
    pub policies: PolicySet,
    pub speed_context: SpeedLimitContext,
    /// Safety distance mode; the base distance is `thresholds.d_s`.
    pub safety_mode: SafetyDistanceMode,
    pub trajectory: TargetTrajectory,
    pub uav_initial: KinematicState,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let thresholds = TrackingThresholds::new(1.0, 5.0).expect("valid default band");
        let d_ref = thresholds.midpoint();
        let trajectory = TargetTrajectory::default();
        let start = trajectory.initial_state().position;
        Self {
            slots: 1000,
            dt: 0.1,
            warmup: 0,
            thresholds,
            d_ref,
            gains: ControllerGains::default(),
            voi_weight: DEFAULT_VOI_WEIGHT,
            command_bits: DEFAULT_COMMAND_BITS,
            uplink: ChannelConfig::perfect(),
            downlink: ChannelConfig::perfect(),
            downlink_discipline: QueueDiscipline::Fifo,
            sensors: alloc::vec![
                SensorSpec::from_catalog(SensorKind::Uwb, 10.0, None).expect("catalog sensor")
            ],
            edge_service_rate: 1,
            policies: PolicySet::default(),
            speed_context: SpeedLimitContext::Custom(2.0),
            safety_mode: SafetyDistanceMode::Fixed,
            trajectory,
            uav_initial: KinematicState::at_rest(start - Vec3::X * d_ref),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn safety_requirement(&self) -> SafetyDistanceRequirement {
        SafetyDistanceRequirement {
            base_d_s: self.thresholds.d_s(),
            mode: self.safety_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(SimError::config("sim.T", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::config("sim.dt", "must be > 0"));
        }
        if self.warmup >= self.slots {
            return Err(SimError::config("sim.warmup", "must be smaller than sim.T"));
        }
        self.thresholds.validate()?;
        if !(self.d_ref > self.thresholds.d_s() && self.d_ref <= self.thresholds.d_e()) {
            return Err(SimError::config(
                "control.d_ref",
                alloc::format!(
                    "must lie in (d_s, d_e] = ({}, {}], got {}",
                    self.thresholds.d_s(),
                    self.thresholds.d_e(),
                    self.d_ref
                ),
            ));
        }
        self.gains.validate()?;
        if !(self.voi_weight.is_finite() && self.voi_weight >= 0.0) {
            return Err(SimError::config("control.voi_weight", "must be >= 0"));
        }
        self.uplink.validate("uplink")?;
        self.downlink.validate("downlink")?;
        if self.command_bits == 0 || u64::from(self.command_bits) > self.downlink.capacity_bits_per_slot {
            return Err(SimError::config(
                "control.packet_bits",
                "must be > 0 and fit in downlink.capacity_bits",
            ));
        }
        if self.sensors.is_empty() {
            return Err(SimError::config("sensors", "at least one sensor is required"));
        }
        for s in &self.sensors {
            if s.size_bits == 0 || u64::from(s.size_bits) > self.uplink.capacity_bits_per_slot {
                return Err(SimError::config(
                    "sensors.size_bits",
                    alloc::format!("{} packets must fit in uplink.capacity_bits", s.name),
                ));
            }
            SensorEmitter::new(s.clone(), self.dt)?;
        }
        if self.edge_service_rate == 0 {
            return Err(SimError::config("edge.service_rate", "must be >= 1"));
        }
        if let ExecutionPolicy::SemCE(cfg) = &self.policies.execution {
            cfg.validate()?;
        }
        self.policies.tx.validate()?;
        self.speed_context.validate()?;
        self.safety_requirement().validate()?;
        self.trajectory.validate()?;
        let u = &self.uav_initial;
        if !u.position.is_finite() || !u.velocity.is_finite() {
            return Err(SimError::config("uav", "initial state must be finite"));
        }
        if u.speed() > active_speed_limit(self.speed_context) {
            return Err(SimError::config("uav", "initial speed exceeds the speed limit"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub d_t: f64,
    pub status: TrackingStatus,
    pub executed: ExecutionDecision,
    pub aoi_executed: Option<u64>,
    pub voi_executed: Option<f64>,
    pub verdict: SafetyVerdict,
    pub uplink_queue_depth: usize,
    pub edge_queue_depth: usize,
    pub downlink_queue_depth: usize,
    pub robot_queue_depth: usize,
    /// Band-proximity risk of the edge's estimate (0 before the first one).
    pub risk: f64,
    pub uav_speed: f64,
    pub uav_position: Vec3,
    pub target_position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// `T` minus warmup: the slots the rates are computed over.
    pub evaluated_slots: u64,
    pub safety_rate: f64,
    pub tracking_success_rate: f64,
    pub mean_abs_distance_error: f64,
    pub mean_aoi_executed: Option<f64>,
    pub max_aoi_executed: Option<u64>,
    pub unsafe_slots: u64,
    pub successful_slots: u64,
    pub unsuccessful_slots: u64,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub packets_lost: u64,
    pub packets_dropped: u64,
    pub packets_discarded: u64,
    pub packets_superseded: u64,
    pub packets_executed: u64,
    pub max_uav_speed: f64,
    pub uplink: LinkCounters,
    pub downlink: LinkCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub records: Vec<SlotRecord>,
    pub summary: MetricsSummary,
}

/// `T_s / T`, where `T_s` counts the slots that were not unsafe.
pub fn safety_rate(unsafe_slots: u64, total_slots: u64) -> f64 {
    if total_slots == 0 {
        return 0.0;
    }
    (total_slots - unsafe_slots.min(total_slots)) as f64 / total_slots as f64
}

pub fn tracking_success_rate(successful_slots: u64, total_slots: u64) -> f64 {
    if total_slots == 0 {
        return 0.0;
    }
    successful_slots as f64 / total_slots as f64
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    generated_slot: u64,
    observation: Observation,
}

/// Runs one scenario. Identical configs give identical results.
pub fn run(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    let th = cfg.thresholds;
    let safety = cfg.safety_requirement();
    let speed_cap = active_speed_limit(cfg.speed_context);

    let mut up_rng = stream_rng(cfg.seed, UPLINK_STREAM);
    let mut down_rng = stream_rng(cfg.seed, DOWNLINK_STREAM);
    let mut uplink: Link<SensorPacket> = Link::new("uplink", cfg.uplink, cfg.policies.sensor_queue);
    let mut downlink: Link<CommandPacket> = Link::new("downlink", cfg.downlink, cfg.downlink_discipline);
    let mut emitters = cfg
        .sensors
        .iter()
        .map(|s| SensorEmitter::new(s.clone(), cfg.dt))
        .collect::<Result<Vec<_>>>()?;
    let mut target = TargetMotion::new(cfg.trajectory.clone(), cfg.dt)?;
    let mut uav = cfg.uav_initial;

    let mut sensor_ids = 0u64;
    let mut edge_queue: Vec<SensorPacket> = Vec::new();
    let mut estimate: Option<Estimate> = None;
    let mut controller = ControllerState::default();
    let mut command_ids = PacketIds::default();

    let mut robot_queue: Vec<CommandPacket> = Vec::new();
    let mut held = Vec3::ZERO;

    let mut records = Vec::with_capacity(cfg.slots as usize);
    let mut discarded = 0u64;
    let mut superseded = 0u64;

    for t in 1..=cfg.slots {
        // (1) sensing
        let observed = Observation {
            target: target.state(),
            uav,
        };
        for emitter in &mut emitters {
            let pkt = emitter.sensor_emit(observed, t, &mut sensor_ids, |o| {
                sensor_importance(o, &th, cfg.d_ref).unwrap_or(0.0)
            });
            if let Some(pkt) = pkt {
                uplink.enqueue(pkt);
            }
        }

        // (2) uplink and edge ingestion
        edge_queue.extend(uplink.step(t, &mut up_rng));
        for _ in 0..cfg.edge_service_rate {
            let Some(&top) = order_sensor_queue(&edge_queue, cfg.policies.sensor_queue).first() else {
                break;
            };
            let sample = edge_queue.remove(top);
            if estimate.is_none_or(|e| sample.generated_slot > e.generated_slot) {
                estimate = Some(Estimate {
                    generated_slot: sample.generated_slot,
                    observation: sample.payload,
                });
            }
        }

        // (3) control and C&C emission
        let mut risk = 0.0;
        if let Some(est) = estimate {
            let age = (t - est.generated_slot) as f64 * cfg.dt;
            let obs = est.observation;
            let target_est = obs.target.position + obs.target.velocity * age;
            let uav_est = obs.uav.position + obs.uav.velocity * age;
            let reference = reference_point(uav_est, target_est, cfg.d_ref);
            let (cmd, next) = compute_command(uav_est, reference, &cfg.gains, &controller, cfg.dt)?;
            controller = ControllerState {
                last_estimate_slot: est.generated_slot,
                ..next
            };
            risk = risk_proximity(distance(uav_est, target_est)?, &th, cfg.d_ref)?;
            if tx_gate(&cfg.policies.tx, t, risk) {
                let voi = compute_voi(cmd, reference - uav_est, cfg.voi_weight);
                let pkt = make_packet(&mut command_ids, t, cmd, voi, cfg.command_bits)?;
                downlink.enqueue(pkt);
            }
        }

        // (4) downlink
        robot_queue.extend(downlink.step(t, &mut down_rng));

        // (5) execution
        let selection = select_command(&mut robot_queue, t, &cfg.policies.execution);
        discarded += selection.discarded as u64;
        superseded += selection.superseded as u64;
        let (aoi_executed, voi_executed) = match selection.executed {
            Some(pkt) => {
                held = pkt.velocity_command;
                (Some(t - pkt.generated_slot), Some(pkt.voi))
            }
            None => (None, None),
        };

        // (6)-(7) clamp and move
        uav = step_uav(&uav, held, cfg.dt, speed_cap)?;
        let target_state = target.step(t)?;

        // (8) record
        let d_t = distance(uav.position, target_state.position)?;
        let status = classify_tracking_status(d_t, &th)?;
        let verdict = check_slot(&uav, &target_state, &safety, cfg.speed_context, t)?;
        uplink.audit(t)?;
        downlink.audit(t)?;
        records.push(SlotRecord {
            t,
            d_t,
            status,
            executed: selection.decision,
            aoi_executed,
            voi_executed,
            verdict,
            uplink_queue_depth: uplink.queue_depth(),
            edge_queue_depth: edge_queue.len(),
            downlink_queue_depth: downlink.queue_depth(),
            robot_queue_depth: robot_queue.len(),
            risk,
            uav_speed: uav.speed(),
            uav_position: uav.position,
            target_position: target_state.position,
        });
    }

    let summary = summarize(
        cfg,
        &records,
        command_ids.issued(),
        uplink.counters(),
        downlink.counters(),
        discarded,
        superseded,
    );
    Ok(RunResult {
        config: cfg.clone(),
        records,
        summary,
    })
}

fn summarize(
    cfg: &ScenarioConfig,
    records: &[SlotRecord],
    generated: u64,
    uplink: LinkCounters,
    downlink: LinkCounters,
    discarded: u64,
    superseded: u64,
) -> MetricsSummary {
    let evaluated: Vec<&SlotRecord> = records.iter().filter(|r| r.t > cfg.warmup).collect();
    let n = evaluated.len() as u64;
    let count = |s: TrackingStatus| evaluated.iter().filter(|r| r.status == s).count() as u64;
    let unsafe_slots = count(TrackingStatus::Unsafe);
    let successful_slots = count(TrackingStatus::Successful);
    let unsuccessful_slots = count(TrackingStatus::Unsuccessful);
    let mean_abs_distance_error = if n == 0 {
        0.0
    } else {
        evaluated.iter().map(|r| (r.d_t - cfg.d_ref).abs()).sum::<f64>() / n as f64
    };
    let ages: Vec<u64> = evaluated.iter().filter_map(|r| r.aoi_executed).collect();
    let mean_aoi_executed = if ages.is_empty() {
        None
    } else {
        Some(ages.iter().sum::<u64>() as f64 / ages.len() as f64)
    };
    MetricsSummary {
        evaluated_slots: n,
        safety_rate: safety_rate(unsafe_slots, n),
        tracking_success_rate: tracking_success_rate(successful_slots, n),
        mean_abs_distance_error,
        mean_aoi_executed,
        max_aoi_executed: ages.iter().copied().max(),
        unsafe_slots,
        successful_slots,
        unsuccessful_slots,
        packets_generated: generated,
        packets_delivered: downlink.delivered,
        packets_lost: downlink.lost,
        packets_dropped: downlink.dropped,
        packets_discarded: discarded,
        packets_superseded: superseded,
        packets_executed: records
            .iter()
            .filter(|r| matches!(r.executed, ExecutionDecision::Execute(_)))
            .count() as u64,
        max_uav_speed: records.iter().map(|r| r.uav_speed).fold(0.0, f64::max),
        uplink,
        downlink,
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
}

impl Stat {
    /// Values are sorted before summation so the result does not depend on
    /// their order.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        Stat {
            mean,
            stddev: libm::sqrt(dev.iter().sum::<f64>() / n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub safety_rate: Stat,
    pub tracking_success_rate: Stat,
    pub mean_abs_distance_error: Stat,
}

impl Aggregate {
    pub fn of(summaries: &[&MetricsSummary]) -> Aggregate {
        let collect = |f: fn(&MetricsSummary) -> f64| summaries.iter().map(|s| f(s)).collect::<Vec<_>>();
        Aggregate {
            runs: summaries.len(),
            safety_rate: Stat::of(&collect(|s| s.safety_rate)),
            tracking_success_rate: Stat::of(&collect(|s| s.tracking_success_rate)),
            mean_abs_distance_error: Stat::of(&collect(|s| s.mean_abs_distance_error)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

/// Rejects empty or repeated seed lists.
pub fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(SimError::config("seeds", "at least one seed is required"));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(SimError::config("seeds", alloc::format!("duplicate seed {}", w[0])));
    }
    Ok(())
}

/// One run of `cfg` per seed, with `cfg.seed` replaced by the run's seed.
pub fn run_batch(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<BatchResult> {
    check_seeds(seeds)?;
    let runs = seeds
        .iter()
        .map(|&seed| run(&ScenarioConfig { seed, ..cfg.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<&MetricsSummary> = runs.iter().map(|r| &r.summary).collect();
    let aggregate = Aggregate::of(&summaries);
    Ok(BatchResult { runs, aggregate })
}
