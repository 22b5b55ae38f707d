use rcs_core::control::{
    compute_command, compute_voi, make_packet, reference_point, CommandPacket, ControllerGains,
    ControllerState, PacketIds, DEFAULT_COMMAND_BITS,
};
use rcs_core::engine::{run, safety_rate, tracking_success_rate, ScenarioConfig};
use rcs_core::network::{
    ChannelConfig, DelayModel, LinkQueue, Observation, SensorEmitter, SensorKind, SensorSpec,
};
use rcs_core::policies::{
    order_sensor_queue, risk_proximity, select_command, semce_score, tx_gate, ExecutionDecision,
    ExecutionPolicy, QueueDiscipline, SemCEConfig, SemceScore, TxRatePolicy,
};
use rcs_core::safety::{
    check_slot, effective_safety_distance, SafetyDistanceMode, SafetyDistanceRequirement,
    SpeedLimitContext,
};
use rcs_core::world::{
    step_target, step_uav, KinematicState, TargetTrajectory, TrackingStatus, TrackingThresholds,
    Vec3,
};
use rcs_core::{stream_rng, network::SensorPacket};

/// Lists the examples once: as a table for the acceptance report and as
/// individual tests.
macro_rules! examples {
    ($($name:ident),* $(,)?) => {
        #[cfg_attr(test, allow(dead_code))]
        pub const ALL: &[(&str, fn())] = &[$((stringify!($name), $name)),*];

        #[cfg(test)]
        mod tests {
            $(#[test]
            fn $name() {
                super::$name()
            })*
        }
    };
}

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn close3(a: Vec3, b: [f64; 3]) -> bool {
    close(a.x, b[0]) && close(a.y, b[1]) && close(a.z, b[2])
}

// Oracles use plain arrays and loops, not the library's vector type.

fn oracle_clamp(v: [f64; 3], cap: f64) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n <= cap {
        v
    } else {
        [v[0] * cap / n, v[1] * cap / n, v[2] * cap / n]
    }
}

fn oracle_pow(base: f64, exp: u32) -> f64 {
    (0..exp).fold(1.0, |acc, _| acc * base)
}

fn cmd(id: u64, generated_slot: u64, voi: f64) -> CommandPacket {
    CommandPacket {
        id,
        generated_slot,
        velocity_command: Vec3::X,
        voi,
        size_bits: DEFAULT_COMMAND_BITS,
    }
}

pub fn sinusoid_without_amplitude_advances_by_drift() {
    let traj = TargetTrajectory::Sinusoid {
        origin: Vec3::ZERO,
        amplitude: 0.0,
        period: 20.0,
        drift: Vec3::new(1.0, 0.0, 0.0),
    };
    let dt = 0.1;
    // Hand integration: x_t = x_0 + 1 m/s * dt * t.
    for t in 1..=50u64 {
        let s = step_target(&traj, t, dt).unwrap();
        assert!(close3(s.position, [t as f64 * dt, 0.0, 0.0]), "slot {t}: {:?}", s.position);
    }
}

pub fn clamped_step_from_origin() {
    let s = step_uav(&KinematicState::default(), Vec3::new(2.0, 0.0, 0.0), 1.0, 1.0).unwrap();
    let v = oracle_clamp([2.0, 0.0, 0.0], 1.0);
    assert!(close3(s.position, [v[0] * 1.0, v[1], v[2]]));
    assert!(close3(s.position, [1.0, 0.0, 0.0]));
}

pub fn dynamic_safety_distance() {
    let req = SafetyDistanceRequirement {
        base_d_s: 1.0,
        mode: SafetyDistanceMode::Dynamic { reaction_time: 0.5 },
    };
    let oracle = 1.0 + 2.0 * 0.5;
    assert!(close(effective_safety_distance(&req, 2.0), oracle));
    assert!(close(oracle, 2.0));
}

pub fn fixed_safety_distance_verdict() {
    let uav = KinematicState::at_rest(Vec3::new(3.0, 0.0, 0.0));
    let target = KinematicState::default();
    let v = check_slot(
        &uav,
        &target,
        &SafetyDistanceRequirement::fixed(1.0),
        SpeedLimitContext::Custom(2.0),
        1,
    )
    .unwrap();
    assert_eq!(v.distance_ok, 3.0 > 1.0);
    assert!(v.distance_ok);
}

pub fn standoff_point_on_axis() {
    let r = reference_point(Vec3::new(10.0, 0.0, 0.0), Vec3::ZERO, 3.0);
    // Unit vector from target to UAV is +x; scale by d_ref.
    assert!(close3(r, [3.0, 0.0, 0.0]));
}

pub fn proportional_law_with_default_gain() {
    let (c, _) = compute_command(
        Vec3::ZERO,
        Vec3::new(2.0, 0.0, 0.0),
        &ControllerGains::default(),
        &ControllerState::default(),
        0.1,
    )
    .unwrap();
    let oracle = [0.5 * 2.0, 0.0, 0.0];
    assert!(close3(c, oracle));
}

pub fn voi_of_example_command() {
    let got = compute_voi(Vec3::X, Vec3::new(2.0, 0.0, 0.0), 0.5);
    assert!(close(got, 1.0 + 0.5 * 2.0));
}

pub fn default_packet_size() {
    let mut ids = PacketIds::default();
    let p = make_packet(&mut ids, 1, Vec3::X, 1.0, ScenarioConfig::default().command_bits).unwrap();
    assert_eq!(p.size_bits, 512);
    assert_eq!(SensorKind::Uwb.data_load().default_bits(), 512);
}

pub fn bounded_queue_drops_overflow() {
    let mut q: LinkQueue<CommandPacket> = LinkQueue::new(QueueDiscipline::Fifo, Some(1));
    assert!(q.enqueue(cmd(1, 1, 1.0)).is_none());
    let dropped = q.enqueue(cmd(2, 2, 1.0));
    assert_eq!(dropped.map(|p| p.id), Some(2));
    assert_eq!(q.len(), 1);
    assert_eq!(q.counters().dropped, 1);
}

pub fn capacity_limits_packets_per_slot() {
    let mut q: LinkQueue<CommandPacket> = LinkQueue::new(QueueDiscipline::Fifo, None);
    for i in 1..=5 {
        q.enqueue(cmd(i, 1, 1.0));
    }
    let ch = ChannelConfig {
        capacity_bits_per_slot: 1024,
        ..ChannelConfig::perfect()
    };
    let sent = q.transmit(&ch, 1, &mut stream_rng(0, 2));
    assert_eq!(sent.len() as u64, 1024 / 512);
    assert_eq!(q.len(), 3);
}

fn emission_slots(freq: f64, dt: f64, slots: u64) -> Vec<u64> {
    let spec = SensorSpec::from_catalog(SensorKind::Ultrasonic, freq, None).unwrap();
    let mut e = SensorEmitter::new(spec, dt).unwrap();
    let mut ids = 0;
    (1..=slots)
        .filter(|&t| e.sensor_emit(Observation::default(), t, &mut ids, |_| 0.0).is_some())
        .collect()
}

fn oracle_emission_slots(freq: f64, dt: f64, slots: u64) -> Vec<u64> {
    // Count whole periods elapsed, in integer arithmetic on the ratio.
    let per = (1.0 / (freq * dt)).round() as u64;
    (1..=slots).filter(|t| t % per == 0).collect()
}

pub fn sensor_phase_accumulation() {
    assert_eq!(emission_slots(10.0, 0.1, 40), oracle_emission_slots(10.0, 0.1, 40));
    assert_eq!(emission_slots(10.0, 0.1, 40).len(), 40);
    assert_eq!(emission_slots(5.0, 0.1, 40), oracle_emission_slots(5.0, 0.1, 40));
    assert_eq!(emission_slots(5.0, 0.1, 6), vec![2, 4, 6]);
}

pub fn semce_score_example() {
    let cfg = SemCEConfig {
        gamma: 0.9,
        max_aoi: 10,
    };
    let SemceScore::Score(s) = semce_score(&cmd(1, 5, 2.0), 8, &cfg) else {
        panic!("fresh packet discarded");
    };
    assert!(close(s, 2.0 * oracle_pow(0.9, 3)));
    assert!(close(s, 1.458));
}

pub fn semce_and_latest_pick_different_packets() {
    let cfg = SemCEConfig {
        gamma: 0.9,
        max_aoi: 10,
    };
    let packets = [cmd(1, 7, 0.1), cmd(2, 3, 5.0)];
    // Brute-force scores.
    let scores: Vec<f64> = packets
        .iter()
        .map(|p| p.voi * oracle_pow(0.9, (8 - p.generated_slot) as u32))
        .collect();
    assert!(close(scores[0], 0.09));
    assert!(close(scores[1], 5.0 * 0.59049));
    let oracle_best = if scores[0] >= scores[1] { 1 } else { 2 };

    let mut q = packets.to_vec();
    let sel = select_command(&mut q, 8, &ExecutionPolicy::SemCE(cfg));
    assert_eq!(sel.decision, ExecutionDecision::Execute(oracle_best));
    assert_eq!(oracle_best, 2);

    let mut q = packets.to_vec();
    let sel = select_command(&mut q, 8, &ExecutionPolicy::LatestOnly);
    assert_eq!(sel.decision, ExecutionDecision::Execute(1));
}

pub fn semantic_priority_orders_by_importance() {
    let q: Vec<SensorPacket> = [1.0, 9.0, 4.0]
        .iter()
        .enumerate()
        .map(|(i, &importance)| SensorPacket {
            id: i as u64 + 1,
            generated_slot: 1,
            sensor: "uwb".into(),
            payload: Observation::default(),
            size_bits: 512,
            importance,
        })
        .collect();
    let order: Vec<f64> = order_sensor_queue(&q, QueueDiscipline::SemanticPriority)
        .into_iter()
        .map(|i| q[i].importance)
        .collect();
    let mut oracle: Vec<f64> = q.iter().map(|p| p.importance).collect();
    // Selection sort, descending.
    for i in 0..oracle.len() {
        for j in i + 1..oracle.len() {
            if oracle[j] > oracle[i] {
                oracle.swap(i, j);
            }
        }
    }
    assert_eq!(order, oracle);
    assert_eq!(order, vec![9.0, 4.0, 1.0]);
}

pub fn risk_proximity_example() {
    let th = TrackingThresholds::new(1.0, 5.0).unwrap();
    let got = risk_proximity(2.0, &th, 3.0).unwrap();
    assert!(close(got, (3.0 - 2.0) / (3.0 - 1.0)));
    assert!(close(got, 0.5));
}

pub fn dynamic_rate_boosts_while_risky() {
    let policy = TxRatePolicy::SemanticDynamic {
        base_period: 4,
        boost_period: 1,
        risk_threshold: 0.8,
    };
    assert!((1..=20).all(|t| tx_gate(&policy, t, 0.9)));
    // Below the threshold the base period applies again.
    let calm: Vec<u64> = (1..=12).filter(|&t| tx_gate(&policy, t, 0.1)).collect();
    assert_eq!(calm, vec![4, 8, 12]);
}

pub fn total_downlink_loss_with_drifting_target() {
    let drift = 0.5;
    let cfg = ScenarioConfig {
        slots: 300,
        downlink: ChannelConfig {
            loss_prob: 1.0,
            ..ChannelConfig::perfect()
        },
        trajectory: TargetTrajectory::Sinusoid {
            origin: Vec3::ZERO,
            amplitude: 0.0,
            period: 20.0,
            drift: Vec3::new(drift, 0.0, 0.0),
        },
        ..ScenarioConfig::default()
    };
    let r = run(&cfg).unwrap();
    assert!(r.records.iter().all(|rec| rec.executed == ExecutionDecision::HoldLast));
    // The UAV never moves, so d_t = d_ref + drift * dt * t.
    let d_ref = cfg.d_ref;
    for rec in &r.records {
        let oracle_d = d_ref + drift * cfg.dt * rec.t as f64;
        assert!(close(rec.d_t, oracle_d), "slot {}", rec.t);
        let oracle_status = if oracle_d <= 1.0 {
            TrackingStatus::Unsafe
        } else if oracle_d <= 5.0 {
            TrackingStatus::Successful
        } else {
            TrackingStatus::Unsuccessful
        };
        assert_eq!(rec.status, oracle_status);
    }
    let tail = &r.records[r.records.len() - 100..];
    assert!(tail.iter().all(|rec| rec.status == TrackingStatus::Unsuccessful));
}

pub fn rate_arithmetic() {
    assert!(close(safety_rate(20, 100), 80.0 / 100.0));
    assert!(close(tracking_success_rate(45, 100), 45.0 / 100.0));
}

pub fn geometric_delay_never_below_one_slot() {
    let m = DelayModel::Geometric { p: 0.9, cap: 3 };
    let mut rng = stream_rng(3, 9);
    assert!((0..10_000).map(|_| m.sample(&mut rng)).all(|k| (1..=3).contains(&k)));
}

examples! {
    sinusoid_without_amplitude_advances_by_drift,
    clamped_step_from_origin,
    dynamic_safety_distance,
    fixed_safety_distance_verdict,
    standoff_point_on_axis,
    proportional_law_with_default_gain,
    voi_of_example_command,
    default_packet_size,
    bounded_queue_drops_overflow,
    capacity_limits_packets_per_slot,
    sensor_phase_accumulation,
    semce_score_example,
    semce_and_latest_pick_different_packets,
    semantic_priority_orders_by_importance,
    risk_proximity_example,
    dynamic_rate_boosts_while_risky,
    total_downlink_loss_with_drifting_target,
    rate_arithmetic,
    geometric_delay_never_below_one_slot,
}
