//! Reference topology, failure plans and the eight preset scenarios.
//!
//! Two DCN nodes share two switch chains: network 0 is `A1 - A2 - A3` and
//! network 1 is `B1 - B2 - B3`. DCN1 hangs off A1/B1, DCN2 off A3/B3.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::{
    ActorId, ExploreOptions, GlobalState, Interleaving, KernelError, Limits, LogicalTime,
    MessageEnvelope, PriorityTable,
};
use crate::protocol::{
    Abdication, NodeState, NrpActor, NrpMessage, NrpModel, NrpState, PeriodWindow, ProtocolParams,
    SwitchState, Variant, NUMBER_OF_NETWORKS,
};

pub const SWITCH_PRIORITY: u8 = 1;
pub const NODE_PRIORITY: u8 = 2;

pub const DCN1: ActorId = ActorId(100);
pub const DCN2: ActorId = ActorId(101);

/// Human-readable description of each preset, indexed by case number - 1.
pub const CASE_DESCRIPTIONS: [&str; 8] = [
    "Without failure",
    "Failures on each event",
    "DCN1 fails at time 2500",
    "switchA1 fails at time 2500",
    "switchA3 fails at time 2500",
    "switchA1 fails at time 2500 and switchB1 at time 3500",
    "switchA1 and switchB1 fail at time 2500",
    "Heartbeats are missing because of transient errors",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{0}")]
    InvariantViolation(String),
    #[error("bad topology: {0}")]
    Topology(String),
    #[error("no preset case {0} (expected 1..=8)")]
    CaseOutOfRange(u32),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchDescriptor {
    pub name: &'static str,
    pub id: ActorId,
    pub network: u8,
    pub neighbors: (ActorId, ActorId),
    /// Node attached to a terminal switch.
    pub attached: Option<ActorId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDescriptor {
    pub name: &'static str,
    pub id: ActorId,
    pub candidates: [ActorId; NUMBER_OF_NETWORKS],
    /// First switch on each network.
    pub out: [ActorId; NUMBER_OF_NETWORKS],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub switches: Vec<SwitchDescriptor>,
    pub nodes: Vec<NodeDescriptor>,
}

impl Topology {
    pub fn reference() -> Self {
        let sw = |name, id, network, neighbors: (u32, u32), attached: Option<ActorId>| {
            SwitchDescriptor {
                name,
                id: ActorId(id),
                network,
                neighbors: (ActorId(neighbors.0), ActorId(neighbors.1)),
                attached,
            }
        };
        Topology {
            switches: vec![
                sw("switchA1", 1, 0, (2, 2), Some(DCN1)),
                sw("switchA2", 2, 0, (1, 3), None),
                sw("switchA3", 3, 0, (2, 2), Some(DCN2)),
                sw("switchB1", 4, 1, (5, 5), Some(DCN1)),
                sw("switchB2", 5, 1, (4, 6), None),
                sw("switchB3", 6, 1, (5, 5), Some(DCN2)),
            ],
            nodes: vec![
                NodeDescriptor {
                    name: "DCN1",
                    id: DCN1,
                    candidates: [ActorId(1), ActorId(4)],
                    out: [ActorId(1), ActorId(4)],
                },
                NodeDescriptor {
                    name: "DCN2",
                    id: DCN2,
                    candidates: [ActorId(3), ActorId(6)],
                    out: [ActorId(3), ActorId(6)],
                },
            ],
        }
    }

    pub fn validate(&self, max_switches: u32) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Topology(m));
        let mut seen = BTreeMap::new();
        for s in &self.switches {
            if s.id.0 > max_switches {
                return bad(format!(
                    "switch {} has id {} above MAX_SWITCHES",
                    s.name, s.id
                ));
            }
            if seen.insert(s.id, s.name).is_some() {
                return bad(format!("duplicate id {}", s.id));
            }
        }
        for n in &self.nodes {
            if n.id.0 <= max_switches {
                return bad(format!(
                    "node {} has id {} within the switch range",
                    n.name, n.id
                ));
            }
            if seen.insert(n.id, n.name).is_some() {
                return bad(format!("duplicate id {}", n.id));
            }
        }
        let switch = |id: ActorId| self.switches.iter().find(|s| s.id == id);
        for s in &self.switches {
            for nb in [s.neighbors.0, s.neighbors.1] {
                match switch(nb) {
                    Some(other) if other.network == s.network => {}
                    _ => return bad(format!("{} has bad neighbor {nb}", s.name)),
                }
            }
            if let Some(node) = s.attached {
                if !self.nodes.iter().any(|n| n.id == node) {
                    return bad(format!("{} is attached to unknown node {node}", s.name));
                }
            }
        }
        for n in &self.nodes {
            for net in 0..NUMBER_OF_NETWORKS {
                for (what, id) in [("candidate", n.candidates[net]), ("out", n.out[net])] {
                    match switch(id) {
                        Some(s) if usize::from(s.network) == net && s.attached.is_some() => {}
                        _ => {
                            return bad(format!(
                                "{} {what} {id} is not a terminal switch of network {net}",
                                n.name
                            ))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn names(&self) -> ActorNames {
        let mut names = ActorNames::default();
        for s in &self.switches {
            names.insert(s.id, s.name);
        }
        for n in &self.nodes {
            names.insert(n.id, n.name);
        }
        names
    }
}

/// Bidirectional map between actor ids and their declared names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActorNames {
    by_id: BTreeMap<ActorId, String>,
}

impl ActorNames {
    pub fn insert(&mut self, id: ActorId, name: &str) {
        self.by_id.insert(id, name.to_string());
    }

    pub fn name(&self, id: ActorId) -> String {
        self.by_id
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("actor{id}"))
    }

    pub fn id(&self, name: &str) -> Option<ActorId> {
        self.by_id
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActorId, &str)> {
        self.by_id.iter().map(|(id, n)| (*id, n.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub params: ProtocolParams,
    pub variant: Variant,
    pub abdication: Abdication,
    pub initial_primary: ActorId,
    /// Zero (or absent) means no failure.
    pub node_fail_times: BTreeMap<ActorId, u64>,
    pub switch_fail_times: BTreeMap<ActorId, u64>,
    pub event_based_failures: bool,
    pub suppress_heartbeat_periods: Option<PeriodWindow>,
    pub interleaving: Interleaving,
    pub limits: Limits,
}

impl ScenarioConfig {
    pub fn new(variant: Variant) -> Self {
        ScenarioConfig {
            params: ProtocolParams::for_variant(variant),
            variant,
            abdication: variant.default_abdication(),
            initial_primary: DCN1,
            node_fail_times: BTreeMap::new(),
            switch_fail_times: BTreeMap::new(),
            event_based_failures: false,
            suppress_heartbeat_periods: None,
            interleaving: Interleaving::Priority,
            limits: Limits::default(),
        }
    }

    pub fn node_fail_time(&self, id: ActorId) -> u64 {
        self.node_fail_times.get(&id).copied().unwrap_or(0)
    }

    pub fn switch_fail_time(&self, id: ActorId) -> u64 {
        self.switch_fail_times.get(&id).copied().unwrap_or(0)
    }

    /// Presets never mix event-based and timed failures.
    pub fn has_timed_failures(&self) -> bool {
        self.node_fail_times
            .values()
            .chain(self.switch_fail_times.values())
            .any(|&t| t != 0)
    }

    pub fn explore_options(&self, workers: usize) -> ExploreOptions {
        ExploreOptions {
            limits: self.limits,
            interleaving: self.interleaving,
            workers: workers.max(1),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(ConfigError::InvariantViolation)?;
        if let Some(w) = self.suppress_heartbeat_periods {
            if w.start == 0 || w.start > w.end {
                return Err(ConfigError::InvariantViolation(format!(
                    "suppression window {}-{} must satisfy 1 <= start <= end",
                    w.start, w.end
                )));
            }
        }
        if self.limits.max_states == 0 {
            return Err(ConfigError::InvariantViolation(
                "max_states must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything needed to explore one scenario.
#[derive(Debug, Clone)]
pub struct System {
    pub model: NrpModel,
    pub initial: NrpState,
    pub names: ActorNames,
}

pub fn build_reference_topology(cfg: &ScenarioConfig) -> Result<System, ConfigError> {
    build_with_topology(cfg, &Topology::reference())
}

/// Runs every actor constructor: nodes start in WAITING with `runMe`
/// scheduled at time 0, and fail messages are scheduled at their fail times.
pub fn build_with_topology(cfg: &ScenarioConfig, topo: &Topology) -> Result<System, ConfigError> {
    cfg.validate()?;
    topo.validate(cfg.params.max_switches)?;
    if !topo.nodes.iter().any(|n| n.id == cfg.initial_primary) {
        return Err(ConfigError::Topology(format!(
            "initial primary {} is not a node",
            cfg.initial_primary
        )));
    }
    for id in cfg.node_fail_times.keys() {
        if !topo.nodes.iter().any(|n| n.id == *id) {
            return Err(ConfigError::Topology(format!(
                "fail time for unknown node {id}"
            )));
        }
    }
    for id in cfg.switch_fail_times.keys() {
        if !topo.switches.iter().any(|s| s.id == *id) {
            return Err(ConfigError::Topology(format!(
                "fail time for unknown switch {id}"
            )));
        }
    }

    let mut priorities = PriorityTable::default();
    let mut actors = BTreeMap::new();
    for s in &topo.switches {
        priorities.declare(s.id, SWITCH_PRIORITY);
        let state = SwitchState::new(
            s.id,
            s.network,
            s.neighbors,
            s.attached,
            cfg.switch_fail_time(s.id),
        );
        actors.insert(s.id, NrpActor::Switch(state));
    }
    for n in &topo.nodes {
        priorities.declare(n.id, NODE_PRIORITY);
        let state = NodeState::new(
            n.id,
            cfg.initial_primary,
            n.candidates,
            n.out,
            cfg.node_fail_time(n.id),
        );
        actors.insert(n.id, NrpActor::Node(state));
    }

    let mut model = NrpModel::new(cfg.params, cfg.variant).with_priorities(priorities);
    model.abdication = cfg.abdication;
    model.event_based_failures = cfg.event_based_failures;
    model.suppress_heartbeats = cfg.suppress_heartbeat_periods;

    let mut initial: NrpState = GlobalState::new(actors);
    let mut self_send = |id: ActorId, msg: NrpMessage, at: u64| {
        crate::kernel::schedule(
            &model,
            &mut initial,
            MessageEnvelope::new(id, id, msg, LogicalTime(at)),
        )
    };
    for s in &topo.switches {
        let t = cfg.switch_fail_time(s.id);
        if t != 0 {
            self_send(s.id, NrpMessage::SwitchFail, t)?;
        }
    }
    for n in &topo.nodes {
        let t = cfg.node_fail_time(n.id);
        if t != 0 {
            self_send(n.id, NrpMessage::NodeFail, t)?;
        }
        self_send(n.id, NrpMessage::RunMe, 0)?;
    }

    Ok(System {
        model,
        initial,
        names: topo.names(),
    })
}

/// Configuration of preset `k` for the baseline variant.
///
/// Case 8 suppresses the primary's heartbeats during its periods 1..=3,
/// one more than `max_missed_heartbeats`, and lets them resume at period 4.
pub fn preset_case(k: u32) -> Result<ScenarioConfig, ConfigError> {
    preset_case_for(Variant::Baseline, k)
}

pub fn preset_case_for(variant: Variant, k: u32) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::new(variant);
    let a1 = ActorId(1);
    let a3 = ActorId(3);
    let b1 = ActorId(4);
    match k {
        1 => {}
        2 => cfg.event_based_failures = true,
        3 => {
            cfg.node_fail_times.insert(DCN1, 2500);
        }
        4 => {
            cfg.switch_fail_times.insert(a1, 2500);
        }
        5 => {
            cfg.switch_fail_times.insert(a3, 2500);
        }
        6 => {
            cfg.switch_fail_times.insert(a1, 2500);
            cfg.switch_fail_times.insert(b1, 3500);
        }
        7 => {
            cfg.switch_fail_times.insert(a1, 2500);
            cfg.switch_fail_times.insert(b1, 2500);
        }
        8 => {
            let missed = cfg.params.max_missed_heartbeats;
            cfg.suppress_heartbeat_periods = Some(PeriodWindow {
                start: 1,
                end: missed + 1,
            });
        }
        other => return Err(ConfigError::CaseOutOfRange(other)),
    }
    Ok(cfg)
}

/// Expected NoDualPrimary outcome of presets 1..=8 (`true` = satisfied).
///
/// The baseline-noopt vector was pinned from an exhaustive exploration:
/// without the direct takeover, only the transient heartbeat loss of case 8
/// still leads to a dual primary.
pub fn expected_verdicts(variant: Variant) -> [bool; 8] {
    match variant {
        Variant::Baseline => [true, false, true, true, true, true, false, false],
        Variant::BaselineNoOpt => [true, true, true, true, true, true, true, false],
        Variant::Leasing => [true; 8],
    }
}

const SWITCH_KEYS: [(&str, u32); 6] = [
    ("switchA1failtime", 1),
    ("switchA2failtime", 2),
    ("switchA3failtime", 3),
    ("switchB1failtime", 4),
    ("switchB2failtime", 5),
    ("switchB3failtime", 6),
];

const NODE_KEYS: [(&str, ActorId); 2] = [("node1failtime", DCN1), ("node2failtime", DCN2)];

/// Parses a `key = value` scenario document. Keys are order-insensitive;
/// `variant` is applied first so omitted keys take that variant's defaults.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut entries: Vec<(usize, &str, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push((line_no, key, value));
    }

    let variant = match entries.iter().find(|(_, k, _)| *k == "variant") {
        Some((line, _, v)) => v.parse().map_err(|message| ConfigError::Parse {
            line: *line,
            message,
        })?,
        None => Variant::Baseline,
    };
    let mut cfg = ScenarioConfig::new(variant);

    for (line, key, value) in entries {
        let err = |message: String| ConfigError::Parse { line, message };
        let num = || -> Result<u64, ConfigError> {
            value
                .parse::<u64>()
                .map_err(|e| err(format!("`{key}`: {e}")))
        };
        let small = || -> Result<u32, ConfigError> {
            u32::try_from(num()?).map_err(|e| err(format!("`{key}`: {e}")))
        };
        let p = &mut cfg.params;
        match key {
            "variant" => {}
            "heartbeat_period" => p.heartbeat_period = num()?,
            "max_missed_heartbeats" => p.max_missed_heartbeats = small()?,
            "ping_timeout" => p.ping_timeout = num()?,
            "nrp_timeout" => p.nrp_timeout = num()?,
            "NumberOfNetworks" => p.number_of_networks = num()? as usize,
            "networkDelay" => p.network_delay = num()?,
            "networkDelayForNRPPing" => p.network_delay_for_nrp_ping = num()?,
            "MAX_SWITCHES" => p.max_switches = small()?,
            "ping_send_offset_primary" => p.ping_send_offset_primary = num()?,
            "ping_send_offset_backup" => p.ping_send_offset_backup = num()?,
            "abdication" => cfg.abdication = value.parse().map_err(err)?,
            "initial_primary" => {
                cfg.initial_primary = match value {
                    "DCN1" => DCN1,
                    "DCN2" => DCN2,
                    _ => ActorId(small()?),
                }
            }
            "event_based_failures" => {
                cfg.event_based_failures =
                    value.parse().map_err(|e| err(format!("`{key}`: {e}")))?
            }
            "suppress_heartbeat_periods" => {
                cfg.suppress_heartbeat_periods = if value == "none" {
                    None
                } else {
                    let (a, b) = value.split_once('-').ok_or_else(|| {
                        err(format!("expected `start-end` or `none`, got `{value}`"))
                    })?;
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<u32>()
                            .map_err(|e| err(format!("`{key}`: {e}")))
                    };
                    Some(PeriodWindow {
                        start: parse(a)?,
                        end: parse(b)?,
                    })
                }
            }
            "interleaving" => cfg.interleaving = value.parse().map_err(err)?,
            "max_states" => cfg.limits.max_states = num()? as usize,
            "max_depth" => cfg.limits.max_depth = num()? as usize,
            _ => {
                if let Some((_, id)) = SWITCH_KEYS.iter().find(|(k, _)| *k == key) {
                    set_fail_time(&mut cfg.switch_fail_times, ActorId(*id), num()?);
                } else if let Some((_, id)) = NODE_KEYS.iter().find(|(k, _)| *k == key) {
                    set_fail_time(&mut cfg.node_fail_times, *id, num()?);
                } else {
                    return Err(ConfigError::UnknownKey(key.to_string()));
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_fail_time(map: &mut BTreeMap<ActorId, u64>, id: ActorId, t: u64) {
    if t == 0 {
        map.remove(&id);
    } else {
        map.insert(id, t);
    }
}

/// Writes every key, so the output does not depend on variant defaults.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("variant", &cfg.variant);
    kv("heartbeat_period", &p.heartbeat_period);
    kv("max_missed_heartbeats", &p.max_missed_heartbeats);
    kv("ping_timeout", &p.ping_timeout);
    kv("nrp_timeout", &p.nrp_timeout);
    kv("NumberOfNetworks", &p.number_of_networks);
    kv("networkDelay", &p.network_delay);
    kv("networkDelayForNRPPing", &p.network_delay_for_nrp_ping);
    kv("MAX_SWITCHES", &p.max_switches);
    kv("ping_send_offset_primary", &p.ping_send_offset_primary);
    kv("ping_send_offset_backup", &p.ping_send_offset_backup);
    kv("abdication", &cfg.abdication);
    kv("initial_primary", &cfg.initial_primary.0);
    for (k, id) in SWITCH_KEYS {
        kv(k, &cfg.switch_fail_time(ActorId(id)));
    }
    for (k, id) in NODE_KEYS {
        kv(k, &cfg.node_fail_time(id));
    }
    kv("event_based_failures", &cfg.event_based_failures);
    match cfg.suppress_heartbeat_periods {
        Some(w) => kv(
            "suppress_heartbeat_periods",
            &format!("{}-{}", w.start, w.end),
        ),
        None => kv("suppress_heartbeat_periods", &"none"),
    }
    kv("interleaving", &cfg.interleaving);
    kv("max_states", &cfg.limits.max_states);
    kv("max_depth", &cfg.limits.max_depth);
    out
}
