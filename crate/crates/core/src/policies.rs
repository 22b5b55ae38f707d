//! Goal-oriented policies under evaluation.
//!
//! * C&C execution at the robot: [`ExecutionPolicy::LatestOnly`] runs the most
//!   recently generated queued command, [`ExecutionPolicy::Fifo`] the oldest,
//!   and [`ExecutionPolicy::SemCE`] the command with the highest
//!   freshness-discounted value, `voi * gamma^aoi`, ignoring anything older
//!   than `max_aoi` slots.
//! * Queue priority at the edge: [`QueueDiscipline::SemanticPriority`] serves
//!   the most important sensor samples first.
//! * Transmission rate: [`TxRatePolicy::SemanticDynamic`] shortens the C&C
//!   emission period while the estimated risk is high.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::control::CommandPacket;
use crate::network::Packet;
use crate::world::TrackingThresholds;
use crate::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemCEConfig {
    /// Freshness discount per slot of age, in `(0, 1]`.
    pub gamma: f64,
    /// Commands older than this many slots are discarded.
    pub max_aoi: u64,
}

impl Default for SemCEConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            max_aoi: 10,
        }
    }
}

impl SemCEConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(SimError::config("policy.semce.gamma", "must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecutionPolicy {
    #[default]
    LatestOnly,
    Fifo,
    #[serde(rename = "semce")]
    SemCE(SemCEConfig),
}

impl ExecutionPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            ExecutionPolicy::LatestOnly => "latest",
            ExecutionPolicy::Fifo => "fifo",
            ExecutionPolicy::SemCE(_) => "semce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionDecision {
    Execute(u64),
    HoldLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueDiscipline {
    #[default]
    Fifo,
    SemanticPriority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxRatePolicy {
    FixedPeriod {
        period: u64,
    },
    SemanticDynamic {
        base_period: u64,
        boost_period: u64,
        risk_threshold: f64,
    },
}

impl Default for TxRatePolicy {
    fn default() -> Self {
        TxRatePolicy::FixedPeriod { period: 1 }
    }
}

impl TxRatePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TxRatePolicy::FixedPeriod { period: 0 } => {
                Err(SimError::config("policy.tx.base", "period must be >= 1"))
            }
            TxRatePolicy::SemanticDynamic {
                base_period,
                boost_period,
                risk_threshold,
            } => {
                if base_period == 0 || boost_period == 0 {
                    return Err(SimError::config("policy.tx", "periods must be >= 1"));
                }
                if boost_period > base_period {
                    return Err(SimError::config("policy.tx.boost", "must not exceed the base period"));
                }
                if !(0.0..=1.0).contains(&risk_threshold) {
                    return Err(SimError::config("policy.tx.threshold", "must be in [0, 1]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Age of information of `pkt` at slot `t`.
pub fn aoi<P: Packet>(pkt: &P, t: u64) -> Result<u64> {
    t.checked_sub(pkt.generated_slot())
        .ok_or(SimError::InvalidArgument("aoi: slot precedes packet generation"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SemceScore {
    Score(f64),
    Discard,
}

/// `voi * gamma^aoi`, or [`SemceScore::Discard`] past `max_aoi`. Packets
/// from the future score as discards too.
pub fn semce_score(pkt: &CommandPacket, t: u64, cfg: &SemCEConfig) -> SemceScore {
    match aoi(pkt, t) {
        Ok(age) if age <= cfg.max_aoi => {
            let exp = i32::try_from(age).unwrap_or(i32::MAX);
            SemceScore::Score(pkt.voi * libm::pow(cfg.gamma, f64::from(exp)))
        }
        _ => SemceScore::Discard,
    }
}

/// Outcome of one execution decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub decision: ExecutionDecision,
    pub executed: Option<CommandPacket>,
    /// Stale packets removed by the SemCE cutoff.
    pub discarded: usize,
    /// Packets purged by LatestOnly because a newer one ran.
    pub superseded: usize,
}

impl Selection {
    fn hold(discarded: usize) -> Self {
        Self {
            decision: ExecutionDecision::HoldLast,
            executed: None,
            discarded,
            superseded: 0,
        }
    }
}

/// Picks the command to execute at slot `t` and removes it from `queue`.
///
/// LatestOnly also purges every older command; Fifo and SemCE remove only the
/// executed one, and SemCE drops the packets it discards as stale. Ties
/// resolve towards the newer packet, then the lower id.
pub fn select_command(queue: &mut Vec<CommandPacket>, t: u64, policy: &ExecutionPolicy) -> Selection {
    if queue.is_empty() {
        return Selection::hold(0);
    }
    match policy {
        ExecutionPolicy::LatestOnly => {
            let idx = best_index(queue, |a, b| {
                a.generated_slot.cmp(&b.generated_slot).then(b.id.cmp(&a.id))
            });
            let chosen = queue.swap_remove(idx);
            let before = queue.len();
            queue.retain(|p| p.generated_slot > chosen.generated_slot);
            Selection {
                decision: ExecutionDecision::Execute(chosen.id),
                executed: Some(chosen),
                discarded: 0,
                superseded: before - queue.len(),
            }
        }
        ExecutionPolicy::Fifo => {
            let idx = best_index(queue, |a, b| {
                b.generated_slot.cmp(&a.generated_slot).then(b.id.cmp(&a.id))
            });
            let chosen = queue.remove(idx);
            Selection {
                decision: ExecutionDecision::Execute(chosen.id),
                executed: Some(chosen),
                discarded: 0,
                superseded: 0,
            }
        }
        ExecutionPolicy::SemCE(cfg) => {
            let before = queue.len();
            queue.retain(|p| matches!(semce_score(p, t, cfg), SemceScore::Score(_)));
            let discarded = before - queue.len();
            if queue.is_empty() {
                return Selection::hold(discarded);
            }
            let score = |p: &CommandPacket| match semce_score(p, t, cfg) {
                SemceScore::Score(s) => s,
                SemceScore::Discard => f64::NEG_INFINITY,
            };
            let idx = best_index(queue, |a, b| {
                score(a)
                    .total_cmp(&score(b))
                    .then(a.generated_slot.cmp(&b.generated_slot))
                    .then(b.id.cmp(&a.id))
            });
            let chosen = queue.remove(idx);
            Selection {
                decision: ExecutionDecision::Execute(chosen.id),
                executed: Some(chosen),
                discarded,
                superseded: 0,
            }
        }
    }
}

fn best_index<T>(items: &[T], cmp: impl Fn(&T, &T) -> Ordering) -> usize {
    let mut best = 0;
    for i in 1..items.len() {
        if cmp(&items[i], &items[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Processing order of `items` (indices into the slice, which is in arrival
/// order). SemanticPriority sorts by descending priority, then older
/// generation slot, then lower id.
pub fn order_by_discipline<P: Packet>(items: &[P], disc: QueueDiscipline) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    if disc == QueueDiscipline::SemanticPriority {
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&items[a], &items[b]);
            pb.priority()
                .total_cmp(&pa.priority())
                .then(pa.generated_slot().cmp(&pb.generated_slot()))
                .then(pa.id().cmp(&pb.id()))
        });
    }
    order
}

/// Order in which the edge processes its sensor queue.
pub fn order_sensor_queue(
    queue: &[crate::network::SensorPacket],
    disc: QueueDiscipline,
) -> Vec<usize> {
    order_by_discipline(queue, disc)
}

fn check_band(th: &TrackingThresholds, d_ref: f64) -> Result<()> {
    th.validate()?;
    if !(d_ref > th.d_s() && d_ref <= th.d_e()) {
        return Err(SimError::config(
            "control.d_ref",
            alloc::format!("must lie in (d_s, d_e] = ({}, {}], got {d_ref}", th.d_s(), th.d_e()),
        ));
    }
    Ok(())
}

/// How close `d_t` sits to either edge of the successful band: 0 at
/// `d_ref`, rising linearly to 1 at `d_s` and at `d_e`, and 1 beyond them.
pub fn risk_proximity(d_t: f64, th: &TrackingThresholds, d_ref: f64) -> Result<f64> {
    check_band(th, d_ref)?;
    if !(d_t >= 0.0) {
        return Err(SimError::InvalidArgument("risk_proximity: distance must be >= 0"));
    }
    let inner = ((d_ref - d_t) / (d_ref - th.d_s())).clamp(0.0, 1.0);
    // d_ref == d_e leaves no outer margin: anything beyond d_ref is at the edge.
    let outer = if th.d_e() > d_ref {
        ((d_t - d_ref) / (th.d_e() - d_ref)).clamp(0.0, 1.0)
    } else if d_t > d_ref {
        1.0
    } else {
        0.0
    };
    Ok(inner.max(outer))
}

/// Importance of a sensor sample: the risk of the separation it reports.
pub fn sensor_importance(
    payload: &crate::network::Observation,
    th: &TrackingThresholds,
    d_ref: f64,
) -> Result<f64> {
    let d = crate::world::distance(payload.uav.position, payload.target.position)?;
    risk_proximity(d, th, d_ref)
}

/// Whether the edge emits a C&C packet at slot `t`.
pub fn tx_gate(policy: &TxRatePolicy, t: u64, risk: f64) -> bool {
    match *policy {
        TxRatePolicy::FixedPeriod { period } => t.is_multiple_of(period.max(1)),
        TxRatePolicy::SemanticDynamic {
            base_period,
            boost_period,
            risk_threshold,
        } => {
            let period = if risk >= risk_threshold {
                boost_period
            } else {
                base_period
            };
            t.is_multiple_of(period.max(1))
        }
    }
}
