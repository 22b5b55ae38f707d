//! Impaired wireless links and the sensor traffic that feeds the uplink.
//!
//! A [`Link`] is a [`LinkQueue`] of pending packets plus the set of packets in
//! flight. Each slot the queue hands packets to the channel in discipline
//! order until the slot's bit budget is spent; every transmitted packet is
//! lost with probability `loss_prob` or scheduled to arrive after a sampled
//! delay of at least one slot. The link keeps the counters needed to audit
//! packet conservation:
//!
//! ```text
//! enqueued = dropped + pending + sent
//! sent     = lost + in_flight + delivered
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::policies::{order_by_discipline, QueueDiscipline};
use crate::world::KinematicState;
use crate::{Result, SimError, SimRng};

/// What the links need to know about a packet.
pub trait Packet {
    fn id(&self) -> u64;
    fn generated_slot(&self) -> u64;
    fn size_bits(&self) -> u32;
    /// Semantic priority; higher is more important.
    fn priority(&self) -> f64;
}

impl Packet for crate::control::CommandPacket {
    fn id(&self) -> u64 {
        self.id
    }
    fn generated_slot(&self) -> u64 {
        self.generated_slot
    }
    fn size_bits(&self) -> u32 {
        self.size_bits
    }
    fn priority(&self) -> f64 {
        self.voi
    }
}

/// Data-load classes of the sensor catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataLoad {
    Low,
    LowMedium,
    Medium,
    MediumHigh,
    High,
}

impl DataLoad {
    /// Default packet size for the class.
    pub fn default_bits(self) -> u32 {
        match self {
            DataLoad::Low => 512,
            DataLoad::LowMedium => 4_096,
            DataLoad::Medium => 65_536,
            DataLoad::MediumHigh => 1_048_576,
            DataLoad::High => 8_388_608,
        }
    }
}

/// Commonly used robot-embedded and external sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorKind {
    Tactile,
    Torque,
    JointEncoder,
    Imu,
    Magnetometer,
    DepthCamera,
    Lidar,
    Ultrasonic,
    Uwb,
    WifiModule,
    Infrared,
}

impl SensorKind {
    pub const ALL: [SensorKind; 11] = [
        SensorKind::Tactile,
        SensorKind::Torque,
        SensorKind::JointEncoder,
        SensorKind::Imu,
        SensorKind::Magnetometer,
        SensorKind::DepthCamera,
        SensorKind::Lidar,
        SensorKind::Ultrasonic,
        SensorKind::Uwb,
        SensorKind::WifiModule,
        SensorKind::Infrared,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Tactile => "tactile",
            SensorKind::Torque => "torque",
            SensorKind::JointEncoder => "joint-encoder",
            SensorKind::Imu => "imu",
            SensorKind::Magnetometer => "magnetometer",
            SensorKind::DepthCamera => "depth-camera",
            SensorKind::Lidar => "lidar",
            SensorKind::Ultrasonic => "ultrasonic",
            SensorKind::Uwb => "uwb",
            SensorKind::WifiModule => "wifi-module",
            SensorKind::Infrared => "infrared",
        }
    }

    pub fn from_name(name: &str) -> Option<SensorKind> {
        SensorKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn data_type(self) -> &'static str {
        match self {
            SensorKind::Tactile => "haptic",
            SensorKind::Torque => "force/torque",
            SensorKind::JointEncoder => "joint angles/velocities",
            SensorKind::Imu => "acceleration, angular velocity",
            SensorKind::Magnetometer => "heading",
            SensorKind::DepthCamera => "depth image",
            SensorKind::Lidar => "3d point cloud",
            SensorKind::Ultrasonic => "distance",
            SensorKind::Uwb | SensorKind::WifiModule => "radio signal",
            SensorKind::Infrared => "thermal imaging",
        }
    }

    /// Transmission frequency range in Hz.
    pub fn frequency_range(self) -> (f64, f64) {
        match self {
            SensorKind::Tactile => (100.0, 1000.0),
            SensorKind::Torque => (500.0, 2000.0),
            SensorKind::JointEncoder => (500.0, 1000.0),
            SensorKind::Imu => (100.0, 1000.0),
            SensorKind::Magnetometer => (10.0, 100.0),
            SensorKind::DepthCamera => (10.0, 60.0),
            SensorKind::Lidar => (5.0, 20.0),
            SensorKind::Ultrasonic => (1.0, 50.0),
            SensorKind::Uwb => (10.0, 100.0),
            SensorKind::WifiModule => (1.0, 10.0),
            SensorKind::Infrared => (1.0, 60.0),
        }
    }

    pub fn data_load(self) -> DataLoad {
        match self {
            SensorKind::Tactile | SensorKind::Torque | SensorKind::Imu => DataLoad::LowMedium,
            SensorKind::DepthCamera => DataLoad::MediumHigh,
            SensorKind::Lidar => DataLoad::High,
            SensorKind::Infrared => DataLoad::Medium,
            _ => DataLoad::Low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub name: String,
    pub data_type: String,
    pub frequency_hz: f64,
    pub size_bits: u32,
}

impl SensorSpec {
    /// Builds a catalog sensor, checking the frequency against its range.
    /// `size_bits` defaults to the size of the sensor's data-load class.
    pub fn from_catalog(kind: SensorKind, frequency_hz: f64, size_bits: Option<u32>) -> Result<Self> {
        let (lo, hi) = kind.frequency_range();
        if !(frequency_hz >= lo && frequency_hz <= hi) {
            return Err(SimError::config(
                "sensors.frequency_hz",
                alloc::format!("{} runs at {lo}-{hi} Hz, got {frequency_hz}", kind.name()),
            ));
        }
        let size_bits = size_bits.unwrap_or_else(|| kind.data_load().default_bits());
        if size_bits == 0 {
            return Err(SimError::config("sensors.size_bits", "must be > 0"));
        }
        Ok(Self {
            name: kind.name().into(),
            data_type: kind.data_type().into(),
            frequency_hz,
            size_bits,
        })
    }
}

/// What a sensor sample reports: the target and the UAV as observed at the
/// generation slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub target: KinematicState,
    pub uav: KinematicState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPacket {
    pub id: u64,
    pub generated_slot: u64,
    pub sensor: String,
    pub payload: Observation,
    pub size_bits: u32,
    pub importance: f64,
}

impl Packet for SensorPacket {
    fn id(&self) -> u64 {
        self.id
    }
    fn generated_slot(&self) -> u64 {
        self.generated_slot
    }
    fn size_bits(&self) -> u32 {
        self.size_bits
    }
    fn priority(&self) -> f64 {
        self.importance
    }
}

const PHASE_EPS: f64 = 1e-9;

/// Phase accumulator deciding on which slots a sensor emits.
#[derive(Debug, Clone)]
pub struct SensorEmitter {
    spec: SensorSpec,
    step: f64,
    phase: f64,
}

impl SensorEmitter {
    pub fn new(spec: SensorSpec, dt: f64) -> Result<Self> {
        if !(spec.frequency_hz > 0.0 && spec.frequency_hz.is_finite()) {
            return Err(SimError::config("sensors.frequency_hz", "must be > 0"));
        }
        let step = spec.frequency_hz * dt;
        if step > 1.0 + PHASE_EPS {
            return Err(SimError::config(
                "sensors.frequency_hz",
                alloc::format!(
                    "{} at {} Hz emits more than once per {dt} s slot",
                    spec.name, spec.frequency_hz
                ),
            ));
        }
        Ok(Self { spec, step, phase: 0.0 })
    }

    pub fn spec(&self) -> &SensorSpec {
        &self.spec
    }

    /// Advances one slot; emits a snapshot of `observed` when the phase
    /// crosses a full period.
    pub fn sensor_emit(
        &mut self,
        observed: Observation,
        t: u64,
        ids: &mut u64,
        importance: impl FnOnce(&Observation) -> f64,
    ) -> Option<SensorPacket> {
        self.phase += self.step;
        if self.phase + PHASE_EPS < 1.0 {
            return None;
        }
        self.phase = (self.phase - 1.0).max(0.0);
        *ids += 1;
        Some(SensorPacket {
            id: *ids,
            generated_slot: t,
            sensor: self.spec.name.clone(),
            payload: observed,
            size_bits: self.spec.size_bits,
            importance: importance(&observed).max(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayModel {
    /// Fixed delay of `k` slots; anything below one slot is raised to one.
    Deterministic { k: u64 },
    /// `P(k) ∝ p (1 - p)^(k - 1)` for `k = 1..=cap`.
    Geometric { p: f64, cap: u64 },
}

impl DelayModel {
    pub fn validate(&self, link: &str) -> Result<()> {
        if let DelayModel::Geometric { p, cap } = *self {
            if !(p > 0.0 && p <= 1.0) {
                return Err(SimError::config(alloc::format!("{link}.delay.p"), "must be in (0, 1]"));
            }
            if cap == 0 {
                return Err(SimError::config(alloc::format!("{link}.delay.cap"), "must be >= 1"));
            }
        }
        Ok(())
    }

    /// Draws a delay in slots, always `>= 1`.
    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        match *self {
            DelayModel::Deterministic { k } => k.max(1),
            DelayModel::Geometric { p, cap } => {
                if p >= 1.0 {
                    return 1;
                }
                // Inverse CDF of the geometric law conditioned on k <= cap.
                let q = 1.0 - p;
                let mass = 1.0 - libm::pow(q, cap as f64);
                let u: f64 = rng.random();
                let k = libm::ceil(libm::log1p(-u * mass) / libm::log(q));
                (k as u64).clamp(1, cap)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub capacity_bits_per_slot: u64,
    pub loss_prob: f64,
    pub delay: DelayModel,
    /// Maximum pending packets; `None` is unbounded.
    pub queue_capacity: Option<usize>,
    /// Re-queue lost packets instead of giving up on them.
    pub retransmit: bool,
}

impl ChannelConfig {
    pub fn perfect() -> Self {
        Self {
            capacity_bits_per_slot: 1 << 20,
            loss_prob: 0.0,
            delay: DelayModel::Deterministic { k: 1 },
            queue_capacity: None,
            retransmit: false,
        }
    }

    pub fn validate(&self, link: &str) -> Result<()> {
        if self.capacity_bits_per_slot == 0 {
            return Err(SimError::config(alloc::format!("{link}.capacity_bits"), "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(SimError::config(alloc::format!("{link}.loss_prob"), "must be in [0, 1]"));
        }
        if self.queue_capacity == Some(0) {
            return Err(SimError::config(alloc::format!("{link}.queue_capacity"), "must be >= 1"));
        }
        self.delay.validate(link)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkCounters {
    pub enqueued: u64,
    pub sent: u64,
    pub lost: u64,
    pub dropped: u64,
    pub delivered: u64,
    /// Lost attempts that were put back in the queue.
    pub retransmitted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InFlight<P> {
    pub packet: P,
    pub sent_slot: u64,
    pub arrival_slot: u64,
}

/// Pending packets of one link, kept in arrival order.
#[derive(Debug, Clone)]
pub struct LinkQueue<P> {
    pending: Vec<P>,
    discipline: QueueDiscipline,
    capacity: Option<usize>,
    counters: LinkCounters,
}

impl<P: Packet> LinkQueue<P> {
    pub fn new(discipline: QueueDiscipline, capacity: Option<usize>) -> Self {
        Self {
            pending: Vec::new(),
            discipline,
            capacity,
            counters: LinkCounters::default(),
        }
    }

    pub fn pending(&self) -> &[P] {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn counters(&self) -> LinkCounters {
        self.counters
    }

    /// Appends `pkt`. On overflow the lowest-priority pending packet is
    /// dropped and returned; under FIFO that is the newest one.
    pub fn enqueue(&mut self, pkt: P) -> Option<P> {
        self.counters.enqueued += 1;
        self.pending.push(pkt);
        let cap = self.capacity?;
        if self.pending.len() <= cap {
            return None;
        }
        let victim = match self.discipline {
            QueueDiscipline::Fifo => self.pending.len() - 1,
            QueueDiscipline::SemanticPriority => {
                *order_by_discipline(&self.pending, QueueDiscipline::SemanticPriority)
                    .last()
                    .expect("non-empty queue")
            }
        };
        self.counters.dropped += 1;
        Some(self.pending.remove(victim))
    }

    /// Hands packets to the channel in discipline order while the slot's bit
    /// budget allows, stopping at the first packet that does not fit. Each
    /// transmitted packet is lost with probability `loss_prob`, otherwise it
    /// arrives `delay >= 1` slots later.
    pub fn transmit(&mut self, ch: &ChannelConfig, t: u64, rng: &mut SimRng) -> Vec<InFlight<P>> {
        let order = order_by_discipline(&self.pending, self.discipline);
        let mut budget = ch.capacity_bits_per_slot;
        let mut taken = Vec::new();
        for idx in order {
            let bits = u64::from(self.pending[idx].size_bits());
            if bits > budget {
                break;
            }
            budget -= bits;
            taken.push(idx);
        }
        let mut slots: Vec<Option<P>> = self.pending.drain(..).map(Some).collect();
        let mut out = Vec::with_capacity(taken.len());
        let mut requeue = Vec::new();
        for idx in taken {
            let packet = slots[idx].take().expect("each index taken once");
            let lost = rng.random::<f64>() < ch.loss_prob;
            let delay = ch.delay.sample(rng);
            if lost {
                if ch.retransmit {
                    self.counters.retransmitted += 1;
                    requeue.push(packet);
                } else {
                    self.counters.sent += 1;
                    self.counters.lost += 1;
                }
                continue;
            }
            self.counters.sent += 1;
            out.push(InFlight {
                packet,
                sent_slot: t,
                arrival_slot: t + delay.max(1),
            });
        }
        // Retried packets go back ahead of everything that was not sent.
        requeue.sort_by_key(|p| (p.generated_slot(), p.id()));
        requeue.extend(slots.into_iter().flatten());
        self.pending = requeue;
        out
    }
}

/// Removes and returns the packets arriving exactly at slot `t`, ordered by
/// `(generated_slot, id)`.
pub fn deliveries_at<P: Packet>(in_flight: &mut Vec<InFlight<P>>, t: u64) -> Vec<P> {
    let mut arrived = Vec::new();
    let mut i = 0;
    while i < in_flight.len() {
        if in_flight[i].arrival_slot == t {
            arrived.push(in_flight.swap_remove(i).packet);
        } else {
            i += 1;
        }
    }
    arrived.sort_by_key(|p| (p.generated_slot(), p.id()));
    arrived
}

/// A queue, its channel, and the packets currently in flight.
#[derive(Debug, Clone)]
pub struct Link<P> {
    name: &'static str,
    channel: ChannelConfig,
    queue: LinkQueue<P>,
    in_flight: Vec<InFlight<P>>,
    delivered: u64,
}

impl<P: Packet> Link<P> {
    pub fn new(name: &'static str, channel: ChannelConfig, discipline: QueueDiscipline) -> Self {
        Self {
            name,
            queue: LinkQueue::new(discipline, channel.queue_capacity),
            channel,
            in_flight: Vec::new(),
            delivered: 0,
        }
    }

    pub fn enqueue(&mut self, pkt: P) -> Option<P> {
        self.queue.enqueue(pkt)
    }

    /// Transmits for slot `t` and returns what arrives at `t`.
    pub fn step(&mut self, t: u64, rng: &mut SimRng) -> Vec<P> {
        let sent = self.queue.transmit(&self.channel, t, rng);
        self.in_flight.extend(sent);
        let arrived = deliveries_at(&mut self.in_flight, t);
        self.delivered += arrived.len() as u64;
        arrived
    }

    pub fn queue_depth(&self) -> usize {
        self.queue.len()
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn counters(&self) -> LinkCounters {
        LinkCounters {
            delivered: self.delivered,
            ..self.queue.counters()
        }
    }

    /// Checks that every enqueued packet is accounted for exactly once.
    pub fn audit(&self, t: u64) -> Result<()> {
        let c = self.counters();
        let pending = self.queue.len() as u64;
        let in_flight = self.in_flight.len() as u64;
        let balanced = c.enqueued == c.dropped + pending + c.sent
            && c.sent == c.lost + in_flight + c.delivered;
        if balanced {
            Ok(())
        } else {
            Err(SimError::Conservation { link: self.name, slot: t })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::CommandPacket;
    use crate::stream_rng;
    use crate::world::Vec3;

    fn cmd(id: u64, generated_slot: u64, voi: f64) -> CommandPacket {
        CommandPacket {
            id,
            generated_slot,
            velocity_command: Vec3::ZERO,
            voi,
            size_bits: 512,
        }
    }

    fn lossless(delay: u64, capacity: u64) -> ChannelConfig {
        ChannelConfig {
            capacity_bits_per_slot: capacity,
            loss_prob: 0.0,
            delay: DelayModel::Deterministic { k: delay },
            queue_capacity: None,
            retransmit: false,
        }
    }

    #[test]
    fn bounded_queue_drops_newest_under_fifo() {
        let mut q = LinkQueue::new(QueueDiscipline::Fifo, Some(1));
        assert!(q.enqueue(cmd(1, 1, 5.0)).is_none());
        let dropped = q.enqueue(cmd(2, 2, 9.0)).unwrap();
        assert_eq!(dropped.id, 2);
        assert_eq!(q.len(), 1);
        assert_eq!(q.counters().dropped, 1);
    }

    #[test]
    fn bounded_queue_drops_least_important_under_priority() {
        let mut q = LinkQueue::new(QueueDiscipline::SemanticPriority, Some(2));
        q.enqueue(cmd(1, 1, 5.0));
        q.enqueue(cmd(2, 2, 0.5));
        let dropped = q.enqueue(cmd(3, 3, 9.0)).unwrap();
        assert_eq!(dropped.id, 2);
        assert_eq!(q.pending().iter().map(|p| p.id).collect::<Vec<_>>(), [1, 3]);
    }

    #[test]
    fn unbounded_queue_never_drops() {
        let mut q = LinkQueue::new(QueueDiscipline::Fifo, None);
        for i in 0..10_000 {
            assert!(q.enqueue(cmd(i, i, 1.0)).is_none());
        }
        assert_eq!(q.counters().dropped, 0);
    }

    #[test]
    fn unit_delay_arrives_next_slot() {
        let mut rng = stream_rng(1, 0);
        let mut link = Link::new("downlink", lossless(1, 1024), QueueDiscipline::Fifo);
        link.enqueue(cmd(1, 5, 1.0));
        assert!(link.step(5, &mut rng).is_empty());
        let got = link.step(6, &mut rng);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].id, 1);
        link.audit(6).unwrap();
    }

    #[test]
    fn zero_deterministic_delay_still_takes_a_slot() {
        let mut rng = stream_rng(1, 0);
        let mut link = Link::new("downlink", lossless(0, 1024), QueueDiscipline::Fifo);
        link.enqueue(cmd(1, 1, 1.0));
        assert!(link.step(1, &mut rng).is_empty());
        assert_eq!(link.step(2, &mut rng).len(), 1);
    }

    #[test]
    fn total_loss_delivers_nothing() {
        let mut rng = stream_rng(3, 0);
        let ch = ChannelConfig { loss_prob: 1.0, ..lossless(1, 1 << 20) };
        let mut link = Link::new("downlink", ch, QueueDiscipline::Fifo);
        for t in 1..=500 {
            link.enqueue(cmd(t, t, 1.0));
            assert!(link.step(t, &mut rng).is_empty());
            link.audit(t).unwrap();
        }
        assert_eq!(link.counters().delivered, 0);
        assert_eq!(link.counters().lost, 500);
    }

    #[test]
    fn capacity_limits_packets_per_slot() {
        let mut rng = stream_rng(1, 0);
        let mut q = LinkQueue::new(QueueDiscipline::Fifo, None);
        for i in 1..=5 {
            q.enqueue(cmd(i, 1, 1.0));
        }
        let sent = q.transmit(&lossless(1, 1024), 1, &mut rng);
        assert_eq!(sent.len(), 2);
        assert_eq!(sent.iter().map(|f| f.packet.id).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn priority_discipline_sends_most_important_first() {
        let mut rng = stream_rng(1, 0);
        let mut q = LinkQueue::new(QueueDiscipline::SemanticPriority, None);
        for (i, voi) in [(1, 1.0), (2, 9.0), (3, 4.0)] {
            q.enqueue(cmd(i, i, voi));
        }
        let sent = q.transmit(&lossless(1, 512), 1, &mut rng);
        assert_eq!(sent[0].packet.id, 2);
    }

    #[test]
    fn retransmission_requeues_lost_packets() {
        let mut rng = stream_rng(9, 0);
        let ch = ChannelConfig { loss_prob: 1.0, retransmit: true, ..lossless(1, 512) };
        let mut link = Link::new("uplink", ch, QueueDiscipline::Fifo);
        link.enqueue(cmd(1, 1, 1.0));
        for t in 1..=10 {
            link.step(t, &mut rng);
            link.audit(t).unwrap();
        }
        assert_eq!(link.queue_depth(), 1);
        assert_eq!(link.counters().retransmitted, 10);
        assert_eq!(link.counters().lost, 0);
    }

    #[test]
    fn deliveries_at_examples() {
        let mut set: Vec<InFlight<CommandPacket>> = Vec::new();
        assert!(deliveries_at(&mut set, 3).is_empty());

        let fl = |p: CommandPacket, a| InFlight { packet: p, sent_slot: 1, arrival_slot: a };
        set = alloc::vec![fl(cmd(7, 4, 1.0), 5), fl(cmd(3, 2, 1.0), 5), fl(cmd(9, 1, 1.0), 8)];
        let got = deliveries_at(&mut set, 5);
        assert_eq!(got.iter().map(|p| p.id).collect::<Vec<_>>(), [3, 7]);
        assert!(deliveries_at(&mut set, 7).is_empty());
        assert_eq!(deliveries_at(&mut set, 8).len(), 1);
        assert!(set.is_empty());
    }

    #[test]
    fn geometric_delays_stay_in_range() {
        let mut rng = stream_rng(5, 0);
        let model = DelayModel::Geometric { p: 0.3, cap: 6 };
        for _ in 0..10_000 {
            let k = model.sample(&mut rng);
            assert!((1..=6).contains(&k));
        }
        assert_eq!(DelayModel::Geometric { p: 1.0, cap: 20 }.sample(&mut rng), 1);
    }

    #[test]
    fn sensor_emission_follows_phase() {
        let spec = SensorSpec::from_catalog(SensorKind::Uwb, 10.0, None).unwrap();
        assert_eq!(spec.size_bits, 512);
        let obs = Observation {
            target: KinematicState::default(),
            uav: KinematicState::default(),
        };
        let mut ids = 0;
        let mut em = SensorEmitter::new(spec, 0.1).unwrap();
        let slots: Vec<u64> =
            (1..=10).filter(|&t| em.sensor_emit(obs, t, &mut ids, |_| 0.0).is_some()).collect();
        assert_eq!(slots, (1..=10).collect::<Vec<_>>());

        let spec = SensorSpec::from_catalog(SensorKind::Lidar, 5.0, None).unwrap();
        let mut em = SensorEmitter::new(spec, 0.1).unwrap();
        let slots: Vec<u64> =
            (1..=10).filter(|&t| em.sensor_emit(obs, t, &mut ids, |_| 0.0).is_some()).collect();
        assert_eq!(slots, [2, 4, 6, 8, 10]);
    }

    #[test]
    fn sensor_frequency_is_validated() {
        assert!(SensorSpec::from_catalog(SensorKind::Uwb, 0.0, None).is_err());
        assert!(SensorSpec::from_catalog(SensorKind::Uwb, 150.0, None).is_err());
        let fast = SensorSpec::from_catalog(SensorKind::Uwb, 20.0, None).unwrap();
        assert!(SensorEmitter::new(fast, 0.1).is_err());
        let zero = SensorSpec {
            name: "custom".into(),
            data_type: "x".into(),
            frequency_hz: 0.0,
            size_bits: 8,
        };
        assert!(SensorEmitter::new(zero, 0.1).is_err());
    }

    #[test]
    fn catalog_round_trips_names() {
        for kind in SensorKind::ALL {
            assert_eq!(SensorKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(SensorKind::Lidar.data_load().default_bits(), 8_388_608);
    }
}
