//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nrpcheck::analysis::{
    check_no_dual_primary, extract_trace, replay_path, stats, CounterexampleTrace, NrpResult,
};
use nrpcheck::kernel::{ActorId, Limits, LogicalTime, Verdict};
use nrpcheck::protocol::{Mode, NrpActor, NrpMessage, NrpState, Variant};
use nrpcheck::scenarios::{
    build_reference_topology, expected_verdicts, preset_case_for, System, DCN1, DCN2,
};

use common::{invariant_violations, replay_all_edges};

/// Per-preset wall-clock budget.
const TIME_BUDGET: Duration = Duration::from_secs(60);
const MAX_STATES: usize = 1_000_000;
/// Leasing full-run counts may differ from the reference by at most 10x.
const ORDER_OF_MAGNITUDE: f64 = 10.0;
const LEASING_FULL_RUN_REFERENCE: (usize, usize) = (15891, 34053);
/// Violation-time tolerance for case 7: one heartbeat period around 4000.
const CASE7_VIOLATION_AT: u64 = 4000;
const CASE7_TOLERANCE: u64 = 1000;

/// Counts pinned from the first release, next to the published ones.
const BASELINE_SNAPSHOT: [(usize, usize); 8] = [
    (20, 20),
    (2565, 3158),
    (47, 47),
    (60, 60),
    (74, 74),
    (58, 58),
    (36, 35),
    (19, 18),
];
const BASELINE_REFERENCE: [(usize, usize); 8] = [
    (38, 49),
    (3539, 4677),
    (113, 138),
    (114, 134),
    (146, 179),
    (187, 223),
    (70, 88),
    (35, 42),
];

type Trace = CounterexampleTrace<NrpActor, NrpMessage>;

struct Run {
    system: System,
    result: NrpResult,
    wall: Duration,
}

fn run(variant: Variant, case: u32, workers: usize) -> Run {
    let mut cfg = preset_case_for(variant, case).expect("preset exists");
    cfg.limits = Limits {
        max_states: MAX_STATES,
        max_depth: Limits::default().max_depth,
    };
    let system = build_reference_topology(&cfg).expect("preset builds");
    let started = Instant::now();
    let result = check_no_dual_primary(&system, &cfg.explore_options(workers)).expect("explores");
    Run {
        system,
        result,
        wall: started.elapsed(),
    }
}

fn satisfied(v: Verdict) -> Option<bool> {
    match v {
        Verdict::Satisfied => Some(true),
        Verdict::Violated => Some(false),
        Verdict::Unknown(_) => None,
    }
}

fn mark(ok: Option<bool>) -> &'static str {
    match ok {
        Some(true) => "✓",
        Some(false) => "✗",
        None => "?",
    }
}

fn node(s: &NrpState, id: ActorId) -> &nrpcheck::protocol::NodeState {
    s.actors[&id].as_node().expect("node")
}

fn switch(s: &NrpState, id: u32) -> &nrpcheck::protocol::SwitchState {
    s.actors[&ActorId(id)].as_switch().expect("switch")
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL {id} {name}: {detail}");
            }
        }
    }
}

fn criterion_1(baseline: &[Run]) -> Result<String, String> {
    let expected = expected_verdicts(Variant::Baseline);
    let got: Vec<_> = baseline
        .iter()
        .map(|r| satisfied(r.result.verdict))
        .collect();
    let vector: String = got.iter().map(|&v| mark(v)).collect();
    for (i, r) in baseline.iter().enumerate() {
        if got[i] != Some(expected[i]) {
            return Err(format!(
                "case {} is {}, vector {vector}",
                i + 1,
                r.result.verdict
            ));
        }
        if r.wall > TIME_BUDGET {
            return Err(format!("case {} took {:?}", i + 1, r.wall));
        }
    }
    let slowest = baseline.iter().map(|r| r.wall).max().unwrap_or_default();
    Ok(format!("verdicts {vector}, slowest preset {slowest:.2?}"))
}

fn criterion_2(leasing: &[Run]) -> Result<String, String> {
    for (i, r) in leasing.iter().enumerate() {
        if r.result.verdict != Verdict::Satisfied {
            return Err(format!("case {} is {}", i + 1, r.result.verdict));
        }
    }
    let full = &leasing[1].result;
    let (states, transitions) = (full.state_count(), full.transition_count());
    let (rs, rt) = LEASING_FULL_RUN_REFERENCE;
    let within = |ours: usize, reference: usize| {
        let ratio = ours as f64 / reference as f64;
        (1.0 / ORDER_OF_MAGNITUDE..=ORDER_OF_MAGNITUDE).contains(&ratio)
    };
    let detail = format!(
        "all 8 satisfied; event-based run {states}/{transitions} vs reference {rs}/{rt} (x{:.2}/x{:.2})",
        states as f64 / rs as f64,
        transitions as f64 / rt as f64
    );
    if within(states, rs) && within(transitions, rt) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn step_index(
    trace: &Trace,
    pred: impl Fn(&NrpState, &NrpMessage, ActorId, LogicalTime) -> bool,
) -> Option<usize> {
    trace.steps.iter().enumerate().position(|(i, step)| {
        let env = &step.label.executed;
        pred(&trace.states[i + 1], &env.message, env.receiver, step.now)
    })
}

fn criterion_3(case7: &Run) -> Result<String, String> {
    let sys = &case7.system;
    let trace =
        extract_trace(&sys.model, &sys.initial, &case7.result).map_err(|e| e.to_string())?;
    let (a1, b1) = (ActorId(1), ActorId(4));

    let fail = |id: ActorId| {
        step_index(&trace, |_, m, to, now| {
            *m == NrpMessage::SwitchFail && to == id && now == LogicalTime(2500)
        })
        .ok_or(format!("no switchFail of {id} at 2500"))
    };
    let (fa, fb) = (fail(a1)?, fail(b1)?);

    let ping = step_index(&trace, |_, m, to, now| {
        to == a1
            && matches!(m, NrpMessage::PingNrp { origin, .. } if *origin == DCN1)
            && (3000..=3010).contains(&now.0)
    })
    .ok_or("no primary pingNRP near 3005")?;
    let answered = trace.steps[ping..].iter().any(|s| {
        s.label.executed.receiver == DCN1
            && matches!(s.label.executed.message, NrpMessage::PingNrpResponse { .. })
    });
    if answered {
        return Err("the ~3005 ping was answered".into());
    }
    let ping_at = trace.steps[ping].now;

    // The primary moves on to its last candidate, which is already down.
    let exhausted = step_index(&trace, |s, m, to, _| {
        to == DCN1
            && *m == NrpMessage::PingTimedOut
            && node(s, DCN1).nrp_network == 1
            && node(s, DCN1).nrp_switch_id == Some(b1)
    })
    .ok_or("primary never switched to its last candidate")?;
    let no_live_nrp =
        |s: &NrpState| (1..=6).all(|id| !switch(s, id).am_i_nrp || switch(s, id).failed);
    if !no_live_nrp(&trace.states[exhausted + 1]) {
        return Err("an NRP is still live after candidate switch".into());
    }

    let last = trace.violating_state();
    let t = last.now.0;
    let both_primary =
        node(last, DCN1).mode == Mode::Primary && node(last, DCN2).mode == Mode::Primary;
    if !both_primary || t < CASE7_VIOLATION_AT || t.abs_diff(CASE7_VIOLATION_AT) > CASE7_TOLERANCE {
        return Err(format!(
            "final state at @{t} is not a dual primary near @4000"
        ));
    }
    if !(fa.max(fb) < ping && ping < exhausted && exhausted < trace.steps.len() - 1) {
        return Err("events out of order".into());
    }
    Ok(format!(
        "A1/B1 fail @2500, ping @{ping_at} unanswered, last candidate @{}, dual primary @{t} after {} steps",
        trace.steps[exhausted].now,
        trace.steps.len()
    ))
}

/// Longest run of DCN2 heartbeat periods (runMe to runMe) with no heartbeat
/// delivered on either network, ending before `until` steps.
fn silent_periods(trace: &Trace, until: usize) -> usize {
    let (mut best, mut current, mut heard) = (0, 0, false);
    let mut started = false;
    for step in &trace.steps[..until] {
        let env = &step.label.executed;
        if env.receiver != DCN2 {
            continue;
        }
        match env.message {
            NrpMessage::RunMe => {
                if started {
                    current = if heard { 0 } else { current + 1 };
                    best = best.max(current);
                }
                started = true;
                heard = false;
            }
            NrpMessage::HeartBeat { .. } => heard = true,
            _ => {}
        }
    }
    best
}

fn takeover_step(trace: &Trace) -> Option<(usize, &'static str)> {
    (0..trace.steps.len()).find_map(|i| {
        let before = node(&trace.states[i], DCN2).mode;
        let after = node(&trace.states[i + 1], DCN2).mode;
        (before == Mode::Backup && after == Mode::Primary)
            .then(|| (i, trace.steps[i].label.executed.handler()))
    })
}

fn criterion_4(case8: &Run, leasing8: &Run) -> Result<String, String> {
    let sys = &case8.system;
    let trace =
        extract_trace(&sys.model, &sys.initial, &case8.result).map_err(|e| e.to_string())?;
    let max = sys.model.params.max_missed_heartbeats as usize;
    let (take, handler) = takeover_step(&trace).ok_or("no backup takeover")?;
    let silent = silent_periods(&trace, take + 1);
    if silent <= max {
        return Err(format!("only {silent} silent periods before takeover"));
    }
    if trace
        .states
        .iter()
        .any(|s| node(s, DCN1).mode == Mode::Failed)
    {
        return Err("primary failed during the trace".into());
    }

    let lr = &leasing8.result;
    if lr.verdict != Verdict::Satisfied {
        return Err(format!("leasing case 8 is {}", lr.verdict));
    }
    // A backup lease check that runs the reset branch.
    let reset = lr.edges.iter().find(|e| {
        let env = &e.label.executed;
        env.receiver == DCN2
            && matches!(env.message, NrpMessage::PingNrpResponse { lease_now, lease_prev, .. } if lease_now || lease_prev)
            && node(&lr.states[e.source].state, DCN2).mode == Mode::Backup
            && node(&lr.states[e.target].state, DCN2).lease_strikes == 0
    });
    let reset = reset.ok_or("no lease_strikes reset in leasing case 8")?;
    let log = replay_path(
        &leasing8.system.model,
        &leasing8.system.initial,
        lr,
        reset.target,
    )
    .map_err(|e| e.to_string())?;
    let at = log.steps.last().map(|s| s.now).unwrap_or_default();
    Ok(format!(
        "baseline: {silent} silent periods, takeover by {handler} @{}; leasing: satisfied, lease_strikes reset to 0 @{at}",
        trace.steps[take].now
    ))
}

fn criterion_5(baseline: &[Run]) -> Result<String, String> {
    let expected = expected_verdicts(Variant::Baseline);
    let mut drift = Vec::new();
    for (i, r) in baseline.iter().enumerate() {
        if satisfied(r.result.verdict) != Some(expected[i]) {
            return Err(format!(
                "case {} verdict changed to {}",
                i + 1,
                r.result.verdict
            ));
        }
        let ours = (r.result.state_count(), r.result.transition_count());
        let (ps, pt) = BASELINE_REFERENCE[i];
        let (ss, st) = BASELINE_SNAPSHOT[i];
        println!(
            "     case {}: {}/{} (snapshot {ss}/{st}, published {ps}/{pt}, delta {:+}/{:+})",
            i + 1,
            ours.0,
            ours.1,
            ours.0 as i64 - ps as i64,
            ours.1 as i64 - pt as i64
        );
        if ours != BASELINE_SNAPSHOT[i] {
            drift.push(i + 1);
        }
    }
    Ok(if drift.is_empty() {
        "verdicts stable, counts match snapshot".into()
    } else {
        format!("verdicts stable, counts drifted from snapshot in cases {drift:?}")
    })
}

fn criterion_6(baseline: &[Run], all: &[(Variant, Vec<Run>)]) -> Result<String, String> {
    let mut replayed = 0;
    for k in [1, 7] {
        let r = &baseline[k - 1];
        replayed +=
            replay_all_edges(&r.system, &r.result).map_err(|e| format!("(a) case {k}: {e}"))?;
    }

    let c1 = &baseline[0].result;
    let closed = c1.verdict == Verdict::Satisfied
        && (0..c1.state_count()).all(|s| c1.edges.iter().any(|e| e.source == s));
    if !closed {
        return Err("(b) case 1 did not close".into());
    }

    let mut checked = 0;
    for (v, runs) in all {
        for (i, r) in runs.iter().enumerate() {
            let cfg = preset_case_for(*v, i as u32 + 1).expect("preset");
            let bad = invariant_violations(&cfg, &r.result);
            if let Some(first) = bad.first() {
                return Err(format!("(c) {v} case {}: {first}", i + 1));
            }
            checked += r.result.state_count();
        }
    }

    let a = stats(&run(Variant::Baseline, 2, 1).result);
    let b = stats(&run(Variant::Baseline, 2, 1).result);
    if (a.states, a.transitions, a.verdict) != (b.states, b.transitions, b.verdict) {
        return Err("(d) preset 2 runs differ".into());
    }

    let one = stats(&run(Variant::Baseline, 7, 1).result);
    let four = stats(&run(Variant::Baseline, 7, 4).result);
    if (one.states, one.transitions, one.verdict) != (four.states, four.transitions, four.verdict) {
        return Err("(e) workers 1 and 4 differ on preset 7".into());
    }
    Ok(format!(
        "(a) {replayed} edges replayed (b) case 1 closed at {} states (c) {checked} states checked (d) preset 2 deterministic (e) workers 1 = 4",
        c1.state_count()
    ))
}

fn criterion_7(baseline: &[Run], noopt: &[Run]) -> Result<String, String> {
    let takeover = |r: &Run| {
        extract_trace(&r.system.model, &r.system.initial, &r.result)
            .ok()
            .and_then(|t| takeover_step(&t).map(|(_, h)| h))
    };
    let mut separating = Vec::new();
    for k in 1..=8usize {
        let (b, n) = (takeover(&baseline[k - 1]), takeover(&noopt[k - 1]));
        if b == Some("runMe") && n != Some("runMe") {
            let how = n.map_or("no takeover".to_string(), |h| format!("takeover in {h}"));
            separating.push(format!("case {k} (baseline runMe, noopt {how})"));
        }
    }
    if separating.is_empty() {
        Err("no preset separates direct and ping-confirmed takeover".into())
    } else {
        Ok(separating.join(", "))
    }
}

fn main() -> ExitCode {
    let all: Vec<(Variant, Vec<Run>)> = Variant::ALL
        .into_iter()
        .map(|v| (v, (1..=8).map(|k| run(v, k, 1)).collect()))
        .collect();
    let runs = |v: Variant| &all.iter().find(|(x, _)| *x == v).expect("variant").1;
    let (baseline, noopt, leasing) = (
        runs(Variant::Baseline),
        runs(Variant::BaselineNoOpt),
        runs(Variant::Leasing),
    );

    let mut report = Report { failures: 0 };
    report.line(1, "baseline verdicts", criterion_1(baseline));
    report.line(2, "leasing soundness", criterion_2(leasing));
    report.line(3, "case 7 counterexample", criterion_3(&baseline[6]));
    report.line(
        4,
        "case 8 counterexample",
        criterion_4(&baseline[7], &leasing[7]),
    );
    report.line(5, "count regression", criterion_5(baseline));
    report.line(6, "property suites", criterion_6(baseline, &all));
    report.line(7, "optimization isolation", criterion_7(baseline, noopt));

    if report.failures == 0 {
        println!("acceptance: all 7 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 7 criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
