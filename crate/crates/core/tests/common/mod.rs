#![allow(dead_code)]

use nrpcheck::analysis::NrpResult;
use nrpcheck::kernel::execute_event;
use nrpcheck::protocol::NrpActor;
use nrpcheck::scenarios::{ScenarioConfig, System};

/// Every re-executed edge must land on its recorded canonical target.
pub fn replay_all_edges(sys: &System, result: &NrpResult) -> Result<usize, String> {
    for (i, e) in result.edges.iter().enumerate() {
        let source = &result.states[e.source].state;
        let (next, label) = execute_event(&sys.model, source, &e.label.executed, &e.label.choices)
            .map_err(|err| format!("edge {i}: {err}"))?;
        if label.choices != e.label.choices {
            return Err(format!("edge {i}: choices differ"));
        }
        if next.canonicalize() != *result.states[e.target].state {
            return Err(format!(
                "edge {i}: S{} -> S{} does not replay",
                e.source, e.target
            ));
        }
    }
    Ok(result.edges.len())
}

/// Counter clamps and value ranges on every state, plus allowed mode
/// changes on every edge.
pub fn invariant_violations(cfg: &ScenarioConfig, result: &NrpResult) -> Vec<String> {
    let mut out = Vec::new();
    let clamp = cfg.params.max_missed_heartbeats + 2;
    let attacker_max = cfg.suppress_heartbeat_periods.map_or(0, |w| w.end + 1);
    for (i, rec) in result.states.iter().enumerate() {
        for actor in rec.state.actors.values() {
            let NrpActor::Node(n) = actor else { continue };
            if n.heartbeats_missed.iter().any(|&m| m > clamp) {
                out.push(format!(
                    "S{i}: {} missed {:?} > {clamp}",
                    n.id, n.heartbeats_missed
                ));
            }
            if n.lease_strikes > 2 {
                out.push(format!("S{i}: {} lease_strikes {}", n.id, n.lease_strikes));
            }
            if n.attacker > attacker_max {
                out.push(format!("S{i}: {} attacker {}", n.id, n.attacker));
            }
            if !(-1..=2).contains(&n.nrp_network) {
                out.push(format!("S{i}: {} nrp_network {}", n.id, n.nrp_network));
            }
        }
    }
    for e in &result.edges {
        let (a, b) = (
            &result.states[e.source].state,
            &result.states[e.target].state,
        );
        for (id, before) in &a.actors {
            if let (Some(x), Some(y)) = (before.as_node(), b.actors[id].as_node()) {
                if !x.mode.may_transition_to(y.mode) {
                    out.push(format!(
                        "S{} -> S{}: {id} {} -> {}",
                        e.source, e.target, x.mode, y.mode
                    ));
                }
            }
        }
    }
    out
}
