//! Multi-run experiments: sweeps, policy comparisons and the calibration
//! grid. Runs fan out over a rayon pool; results are always returned in
//! (policy, sweep value, seed) order.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use rcs_core::engine::{run, Aggregate, MetricsSummary, ScenarioConfig};
use rcs_core::network::DelayModel;
use rcs_core::policies::TxRatePolicy;
use serde::{Serialize, Serializer};

use crate::config::{DelayKind, DelaySection, ExecutionKind, ScenarioFile, TxKind};
use crate::output::sig6;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    DS,
    DE,
    LossProb,
    Gamma,
    BasePeriod,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::DS => "d_s",
            SweepVar::DE => "d_e",
            SweepVar::LossProb => "loss_prob",
            SweepVar::Gamma => "gamma",
            SweepVar::BasePeriod => "base_period",
        }
    }

    /// Writes `value` into the scenario. Threshold sweeps leave an unset
    /// `control.d_ref` to follow the band midpoint.
    pub fn apply(self, file: &mut ScenarioFile, value: f64) -> Result<(), CliError> {
        match self {
            SweepVar::DS => file.thresholds.d_s = Some(value),
            SweepVar::DE => file.thresholds.d_e = Some(value),
            SweepVar::LossProb => file.downlink.loss_prob = Some(value),
            SweepVar::Gamma => file.policy.semce.gamma = Some(value),
            SweepVar::BasePeriod => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::config(
                        "policy.tx.base",
                        format!("sweep value {value} is not a positive integer"),
                    ));
                }
                file.policy.tx.base = Some(value as u64);
            }
        }
        Ok(())
    }
}

impl FromStr for SweepVar {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "d_s" => SweepVar::DS,
            "d_e" => SweepVar::DE,
            "loss_prob" => SweepVar::LossProb,
            "gamma" => SweepVar::Gamma,
            "base_period" => SweepVar::BasePeriod,
            other => {
                return Err(CliError::config(
                    "--sweep",
                    format!("unknown variable `{other}`; expected d_s, d_e, loss_prob, gamma or base_period"),
                ))
            }
        })
    }
}

/// `VAR=a,b,c` or `VAR=start:stop:step` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| CliError::config("--sweep", reason);
        let (var, spec) = s
            .split_once('=')
            .ok_or_else(|| bad(format!("`{s}` should look like d_s=1:4:1 or d_e=2,3,4,5")))?;
        let variable: SweepVar = var.parse()?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{t}` is not a number")))
        };
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(bad(format!("range `{spec}` needs start:stop:step")));
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || stop < start {
                return Err(bad(format!("range `{spec}` must have step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as u64;
            if n > 100_000 {
                return Err(bad(format!("range `{spec}` has too many points")));
            }
            (0..=n)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        } else {
            spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err(bad("no sweep values".into()));
        }
        Ok(SweepSpec { variable, values })
    }
}

pub fn seed_list(first: u64, n: u64) -> Result<Vec<u64>, CliError> {
    if n == 0 {
        return Err(CliError::config("--seeds", "at least one seed is required"));
    }
    Ok((0..n).map(|i| first.wrapping_add(i)).collect())
}

pub fn parse_policies(list: &str) -> Result<Vec<ExecutionKind>, CliError> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let kind = ExecutionKind::parse(item)
            .ok_or_else(|| CliError::config("--policies", format!("unknown policy `{item}`")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(CliError::config("--policies", "no policies given"));
    }
    Ok(out)
}

/// One concrete run of a multi-run experiment.
#[derive(Debug, Clone)]
pub struct Job {
    pub policy: ExecutionKind,
    pub value: Option<f64>,
    pub seed: u64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub policy: ExecutionKind,
    pub value: Option<f64>,
    pub seed: u64,
    pub summary: MetricsSummary,
}

/// Expands the experiment into jobs and validates every configuration before
/// anything runs.
pub fn plan(
    base: &ScenarioFile,
    sweep: Option<&SweepSpec>,
    policies: &[ExecutionKind],
    seeds: &[u64],
) -> Result<Vec<Job>, CliError> {
    rcs_core::engine::check_seeds(seeds)?;
    let values: Vec<Option<f64>> = match sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut jobs = Vec::with_capacity(policies.len() * values.len() * seeds.len());
    for &policy in policies {
        for &value in &values {
            let mut file = base.clone();
            file.policy.execution = Some(policy);
            if let (Some(s), Some(v)) = (sweep, value) {
                s.variable.apply(&mut file, v)?;
            }
            let cfg = file.to_scenario()?;
            for &seed in seeds {
                jobs.push(Job {
                    policy,
                    value,
                    seed,
                    config: ScenarioConfig { seed, ..cfg.clone() },
                });
            }
        }
    }
    Ok(jobs)
}

pub fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config("--jobs", e.to_string()))
}

pub fn execute(jobs: &[Job], workers: usize) -> Result<Vec<JobResult>, CliError> {
    let pool = pool(workers)?;
    pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let summary = run(&j.config)?.summary;
                Ok(JobResult {
                    policy: j.policy,
                    value: j.value,
                    seed: j.seed,
                    summary,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })
}

/// Aggregated runs of one policy at one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct PointAggregate {
    pub policy: ExecutionKind,
    pub value: Option<f64>,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

pub fn aggregate(results: &[JobResult]) -> Vec<PointAggregate> {
    let mut out: Vec<PointAggregate> = Vec::new();
    let mut start = 0;
    while start < results.len() {
        let key = (results[start].policy, results[start].value);
        let end = start
            + results[start..]
                .iter()
                .take_while(|r| (r.policy, r.value) == key)
                .count();
        let group: Vec<&MetricsSummary> = results[start..end].iter().map(|r| &r.summary).collect();
        out.push(PointAggregate {
            policy: key.0,
            value: key.1,
            aggregate: Aggregate::of(&group),
        });
        start = end;
    }
    out
}

fn value_cell(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

pub fn sweep_csv(variable: Option<SweepVar>, results: &[JobResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "policy",
        "variable",
        "value",
        "seed",
        "safety_rate",
        "tracking_success_rate",
        "mean_abs_distance_error",
        "unsafe_slots",
        "successful_slots",
        "unsuccessful_slots",
        "mean_aoi_executed",
        "packets_executed",
        "packets_discarded",
    ])
    .expect("in-memory write");
    let var = variable.map(|v| v.name()).unwrap_or("");
    for r in results {
        let s = &r.summary;
        w.write_record([
            r.policy.name().to_string(),
            var.to_string(),
            value_cell(r.value),
            r.seed.to_string(),
            sig6(s.safety_rate),
            sig6(s.tracking_success_rate),
            sig6(s.mean_abs_distance_error),
            s.unsafe_slots.to_string(),
            s.successful_slots.to_string(),
            s.unsuccessful_slots.to_string(),
            s.mean_aoi_executed.map(sig6).unwrap_or_default(),
            s.packets_executed.to_string(),
            s.packets_discarded.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn aggregate_csv(variable: Option<SweepVar>, points: &[PointAggregate]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "policy",
        "variable",
        "value",
        "runs",
        "safety_rate_mean",
        "safety_rate_stddev",
        "tracking_success_rate_mean",
        "tracking_success_rate_stddev",
        "mean_abs_distance_error_mean",
        "mean_abs_distance_error_stddev",
    ])
    .expect("in-memory write");
    let var = variable.map(|v| v.name()).unwrap_or("");
    for p in points {
        let a = &p.aggregate;
        w.write_record([
            p.policy.name().to_string(),
            var.to_string(),
            value_cell(p.value),
            a.runs.to_string(),
            sig6(a.safety_rate.mean),
            sig6(a.safety_rate.stddev),
            sig6(a.tracking_success_rate.mean),
            sig6(a.tracking_success_rate.stddev),
            sig6(a.mean_abs_distance_error.mean),
            sig6(a.mean_abs_distance_error.stddev),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Long-format grouped-bar data: one row per (metric, sweep point, policy).
pub fn plotdata_csv(variable: Option<SweepVar>, points: &[PointAggregate]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "group", "policy", "mean", "stddev"])
        .expect("in-memory write");
    let var = variable.map(|v| v.name()).unwrap_or("point");
    for metric in ["safety_rate", "tracking_success_rate"] {
        let mut values: Vec<Option<f64>> = Vec::new();
        for p in points {
            if !values.contains(&p.value) {
                values.push(p.value);
            }
        }
        for v in values {
            let group = match v {
                Some(v) => format!("{var}={}", sig6(v)),
                None => "all".to_string(),
            };
            for p in points.iter().filter(|p| p.value == v) {
                let stat = if metric == "safety_rate" {
                    p.aggregate.safety_rate
                } else {
                    p.aggregate.tracking_success_rate
                };
                w.write_record([
                    metric.to_string(),
                    group.clone(),
                    p.policy.name().to_string(),
                    sig6(stat.mean),
                    sig6(stat.stddev),
                ])
                .expect("in-memory write");
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

/// Candidate mean over baseline mean; `Unbounded` when the baseline mean is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Value(f64),
    Unbounded,
}

impl Ratio {
    pub fn of(candidate: f64, baseline: f64) -> Ratio {
        if baseline > 0.0 {
            Ratio::Value(candidate / baseline)
        } else {
            Ratio::Unbounded
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.3}"),
            Ratio::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ratio::Value(v) => s.serialize_f64(*v),
            Ratio::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonPoint {
    pub value: Option<f64>,
    pub baseline: Aggregate,
    pub candidate: Aggregate,
    pub safety_rate_ratio: Ratio,
    pub tracking_success_rate_ratio: Ratio,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub baseline: ExecutionKind,
    pub candidate: ExecutionKind,
    pub variable: Option<SweepVar>,
    pub seeds: Vec<u64>,
    pub points: Vec<ComparisonPoint>,
}

pub fn compare_points(
    baseline: ExecutionKind,
    candidate: ExecutionKind,
    points: &[PointAggregate],
) -> Vec<ComparisonPoint> {
    let find = |policy, value| {
        points
            .iter()
            .find(|p| p.policy == policy && p.value == value)
            .map(|p| p.aggregate)
    };
    let mut values: Vec<Option<f64>> = Vec::new();
    for p in points {
        if !values.contains(&p.value) {
            values.push(p.value);
        }
    }
    values
        .into_iter()
        .filter_map(|v| {
            let b = find(baseline, v)?;
            // Comparing a policy with itself has a single set of runs.
            let c = find(candidate, v)?;
            Some(ComparisonPoint {
                value: v,
                baseline: b,
                candidate: c,
                safety_rate_ratio: Ratio::of(c.safety_rate.mean, b.safety_rate.mean),
                tracking_success_rate_ratio: Ratio::of(
                    c.tracking_success_rate.mean,
                    b.tracking_success_rate.mean,
                ),
            })
        })
        .collect()
}

pub fn compare(
    base: &ScenarioFile,
    baseline: ExecutionKind,
    candidate: ExecutionKind,
    sweep: Option<&SweepSpec>,
    seeds: &[u64],
    workers: usize,
) -> Result<ComparisonReport, CliError> {
    let policies = if baseline == candidate {
        vec![baseline]
    } else {
        vec![baseline, candidate]
    };
    let jobs = plan(base, sweep, &policies, seeds)?;
    let results = execute(&jobs, workers)?;
    let points = aggregate(&results);
    Ok(ComparisonReport {
        baseline,
        candidate,
        variable: sweep.map(|s| s.variable),
        seeds: seeds.to_vec(),
        points: compare_points(baseline, candidate, &points),
    })
}

impl ComparisonReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let var = self.variable.map(|v| v.name()).unwrap_or("point");
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            var, "safety_b", "safety_c", "ratio", "success_b", "success_c", "ratio"
        );
        for p in &self.points {
            let label = p.value.map(sig6).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<12} {:>10.4} {:>10.4} {:>10} {:>10.4} {:>10.4} {:>10}",
                label,
                p.baseline.safety_rate.mean,
                p.candidate.safety_rate.mean,
                p.safety_rate_ratio.to_string(),
                p.baseline.tracking_success_rate.mean,
                p.candidate.tracking_success_rate.mean,
                p.tracking_success_rate_ratio.to_string(),
            );
        }
        let _ = writeln!(
            s,
            "baseline = {}, candidate = {}, seeds = {}",
            self.baseline.name(),
            self.candidate.name(),
            self.seeds.len()
        );
        s
    }
}

/// Downlink parameters searched by [`calibrate`].
#[derive(Debug, Clone)]
pub struct CalibrationGrid {
    pub loss_prob: Vec<f64>,
    pub geometric_p: Vec<f64>,
    pub base_period: Vec<u64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            loss_prob: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            geometric_p: vec![0.2, 0.4, 0.6, 0.8],
            base_period: vec![1, 2, 3, 4],
        }
    }
}

/// Ratio targets and the operating points they are measured at.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationTarget {
    pub stringent: (f64, f64),
    pub relaxed: (f64, f64),
    pub safety_ratio: f64,
    pub success_ratio: f64,
    pub relaxed_min_safety: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            stringent: (4.0, 5.0),
            relaxed: (1.0, 5.0),
            safety_ratio: 2.0,
            success_ratio: 4.5,
            relaxed_min_safety: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub loss_prob: f64,
    pub geometric_p: f64,
    pub base_period: u64,
    pub baseline_safety: f64,
    pub baseline_success: f64,
    pub candidate_safety: f64,
    pub candidate_success: f64,
    pub relaxed_baseline_safety: f64,
    pub relaxed_candidate_safety: f64,
    pub safety_ratio: Ratio,
    pub success_ratio: Ratio,
    /// `min(safety_ratio / target, success_ratio / target)`; `>= 1` meets
    /// both targets.
    pub score: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub rows: Vec<CalibrationRow>,
    /// Index of the best row: the highest score among rows that keep both
    /// policies safe at the relaxed point, else the highest score overall.
    pub best: usize,
    pub scenario: ScenarioFile,
}

/// Writes the grid point into the downlink and transmission sections.
pub fn with_downlink(base: &ScenarioFile, loss_prob: f64, p: f64, period: u64) -> ScenarioFile {
    let mut f = base.clone();
    f.downlink.loss_prob = Some(loss_prob);
    let cap = f.downlink.delay.cap;
    f.downlink.delay = DelaySection {
        kind: Some(DelayKind::Geometric),
        p: Some(p),
        cap,
        k: None,
    };
    f.policy.tx.base = Some(period);
    if f.policy.tx.kind.is_none() {
        f.policy.tx.kind = Some(TxKind::Fixed);
    }
    f
}

fn ratio_score(r: Ratio, target: f64) -> f64 {
    match r {
        Ratio::Value(v) => v / target,
        Ratio::Unbounded => f64::INFINITY,
    }
}

pub fn calibrate(
    base: &ScenarioFile,
    grid: &CalibrationGrid,
    target: &CalibrationTarget,
    seeds: &[u64],
    workers: usize,
) -> Result<Calibration, CliError> {
    rcs_core::engine::check_seeds(seeds)?;
    let policies = [ExecutionKind::LatestOnly, ExecutionKind::Semce];
    let mut points = Vec::new();
    for &loss in &grid.loss_prob {
        for &p in &grid.geometric_p {
            for &period in &grid.base_period {
                points.push((loss, p, period));
            }
        }
    }
    let mut jobs = Vec::new();
    for &(loss, p, period) in &points {
        let file = with_downlink(base, loss, p, period);
        for (d_s, d_e) in [target.stringent, target.relaxed] {
            let mut f = file.clone();
            f.thresholds.d_s = Some(d_s);
            f.thresholds.d_e = Some(d_e);
            f.control.d_ref = None;
            jobs.extend(plan(&f, None, &policies, seeds)?);
        }
    }
    let results = execute(&jobs, workers)?;
    let aggs = aggregate(&results);
    // Four aggregates per grid point, in plan order.
    let rows: Vec<CalibrationRow> = points
        .iter()
        .zip(aggs.chunks(4))
        .map(|(&(loss, p, period), a)| {
            let (b, c, rb, rc) = (&a[0].aggregate, &a[1].aggregate, &a[2].aggregate, &a[3].aggregate);
            let safety_ratio = Ratio::of(c.safety_rate.mean, b.safety_rate.mean);
            let success_ratio = Ratio::of(c.tracking_success_rate.mean, b.tracking_success_rate.mean);
            let score = ratio_score(safety_ratio, target.safety_ratio)
                .min(ratio_score(success_ratio, target.success_ratio));
            let relaxed_ok = rb.safety_rate.mean >= target.relaxed_min_safety
                && rc.safety_rate.mean >= target.relaxed_min_safety;
            CalibrationRow {
                loss_prob: loss,
                geometric_p: p,
                base_period: period,
                baseline_safety: b.safety_rate.mean,
                baseline_success: b.tracking_success_rate.mean,
                candidate_safety: c.safety_rate.mean,
                candidate_success: c.tracking_success_rate.mean,
                relaxed_baseline_safety: rb.safety_rate.mean,
                relaxed_candidate_safety: rc.safety_rate.mean,
                safety_ratio,
                success_ratio,
                score,
                meets_target: score >= 1.0 && relaxed_ok,
            }
        })
        .collect();
    let relaxed_ok = |r: &CalibrationRow| {
        r.relaxed_baseline_safety >= target.relaxed_min_safety
            && r.relaxed_candidate_safety >= target.relaxed_min_safety
    };
    let pick = |filter: &dyn Fn(&CalibrationRow) -> bool| {
        rows.iter()
            .enumerate()
            .filter(|(_, r)| filter(r))
            .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
                Some((_, s)) if s >= r.score => best,
                _ => Some((i, r.score)),
            })
            .map(|(i, _)| i)
    };
    let best = pick(&relaxed_ok).or_else(|| pick(&|_| true)).unwrap_or(0);
    let r = &rows[best];
    let mut scenario = with_downlink(base, r.loss_prob, r.geometric_p, r.base_period);
    scenario.thresholds.d_s = Some(target.stringent.0);
    scenario.thresholds.d_e = Some(target.stringent.1);
    scenario.control.d_ref = None;
    Ok(Calibration { rows, best, scenario })
}

pub fn calibration_csv(rows: &[CalibrationRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "loss_prob",
        "geometric_p",
        "base_period",
        "baseline_safety",
        "baseline_success",
        "candidate_safety",
        "candidate_success",
        "relaxed_baseline_safety",
        "relaxed_candidate_safety",
        "safety_ratio",
        "success_ratio",
        "score",
        "meets_target",
    ])
    .expect("in-memory write");
    let ratio = |r: Ratio| r.value().map(sig6).unwrap_or_else(|| "unbounded".into());
    for r in rows {
        w.write_record([
            sig6(r.loss_prob),
            sig6(r.geometric_p),
            r.base_period.to_string(),
            sig6(r.baseline_safety),
            sig6(r.baseline_success),
            sig6(r.candidate_safety),
            sig6(r.candidate_success),
            sig6(r.relaxed_baseline_safety),
            sig6(r.relaxed_candidate_safety),
            ratio(r.safety_ratio),
            ratio(r.success_ratio),
            sig6(r.score),
            r.meets_target.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Reads back the downlink grid point of a scenario, if it has one.
pub fn downlink_point(cfg: &ScenarioConfig) -> Option<(f64, f64, u64)> {
    let DelayModel::Geometric { p, .. } = cfg.downlink.delay else {
        return None;
    };
    let period = match cfg.policies.tx {
        TxRatePolicy::FixedPeriod { period } => period,
        TxRatePolicy::SemanticDynamic { base_period, .. } => base_period,
    };
    Some((cfg.downlink.loss_prob, p, period))
}
