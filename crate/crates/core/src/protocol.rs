//! NRP FD node and switch automata.
//!
//! Every handler of the redundant-controller model lives here, parameterized
//! by [`Variant`]: the baseline protocol (with its direct-takeover
//! optimization), the baseline without that optimization, and the leasing
//! protocol in which the NRP switch records whether its latest ping came from
//! the registered primary.
//!
//! Handlers are pure functions of `(snapshot, message, params)`; emissions go
//! through the kernel's [`HandlerCtx`].

use std::fmt;
use std::str::FromStr;

use crate::kernel::{
    Actor, ActorId, HandlerCtx, KernelError, Message as KernelMessage, MessageEnvelope,
    PriorityTable, TimedModel, Value,
};

pub const NODE_BAG_CAPACITY: usize = 4;
pub const SWITCH_BAG_CAPACITY: usize = 10;
pub const NUMBER_OF_NETWORKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Original protocol, including direct takeover on simultaneous timeouts.
    Baseline,
    /// Original protocol with the direct-takeover shortcut removed.
    BaselineNoOpt,
    /// Leased primary role: takeover needs two consecutive lease misses.
    Leasing,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::BaselineNoOpt, Variant::Leasing];

    pub fn direct_takeover(self) -> bool {
        self == Variant::Baseline
    }

    pub fn is_leasing(self) -> bool {
        self == Variant::Leasing
    }

    /// Where a primary goes once no NRP candidate answers.
    pub fn default_abdication(self) -> Abdication {
        match self {
            Variant::Leasing => Abdication::Waiting,
            _ => Abdication::Failed,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::BaselineNoOpt => "baseline-noopt",
            Variant::Leasing => "leasing",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "baseline-noopt" => Ok(Variant::BaselineNoOpt),
            "leasing" => Ok(Variant::Leasing),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Abdication {
    Failed,
    Waiting,
}

impl fmt::Display for Abdication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Abdication::Failed => "failed",
            Abdication::Waiting => "waiting",
        })
    }
}

impl FromStr for Abdication {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "failed" => Ok(Abdication::Failed),
            "waiting" => Ok(Abdication::Waiting),
            other => Err(format!("unknown abdication target `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProtocolParams {
    pub heartbeat_period: u64,
    pub max_missed_heartbeats: u32,
    pub ping_timeout: u64,
    /// Carried for completeness; no handler schedules the NRP-change
    /// acknowledgement timeout.
    pub nrp_timeout: u64,
    pub number_of_networks: usize,
    pub network_delay: u64,
    /// Carried for completeness; pings are forwarded between switches
    /// without a hop delay.
    pub network_delay_for_nrp_ping: u64,
    pub ping_send_offset_primary: u64,
    pub ping_send_offset_backup: u64,
    pub max_switches: u32,
}

impl ProtocolParams {
    pub fn for_variant(variant: Variant) -> Self {
        let leasing = variant.is_leasing();
        ProtocolParams {
            heartbeat_period: 1000,
            max_missed_heartbeats: 2,
            ping_timeout: if leasing { 100 } else { 500 },
            nrp_timeout: if leasing { 100 } else { 500 },
            number_of_networks: NUMBER_OF_NETWORKS,
            network_delay: 1,
            network_delay_for_nrp_ping: 1,
            ping_send_offset_primary: 5,
            ping_send_offset_backup: if leasing { 15 } else { 5 },
            max_switches: 99,
        }
    }

    /// Every per-period event must resolve inside one heartbeat period.
    pub fn validate(&self) -> Result<(), String> {
        if self.number_of_networks != NUMBER_OF_NETWORKS {
            return Err(format!(
                "NumberOfNetworks must be {NUMBER_OF_NETWORKS}, got {}",
                self.number_of_networks
            ));
        }
        if self.max_missed_heartbeats == 0 {
            return Err("max_missed_heartbeats must be positive".into());
        }
        let offset = self
            .ping_send_offset_primary
            .max(self.ping_send_offset_backup);
        let budget = offset + self.ping_timeout + 2 * self.network_delay;
        if self.heartbeat_period <= budget {
            return Err(format!(
                "heartbeat_period {} must exceed ping offset + ping_timeout + 2*networkDelay = {budget}",
                self.heartbeat_period
            ));
        }
        Ok(())
    }

    fn missed_clamp(&self) -> u32 {
        self.max_missed_heartbeats + 2
    }
}

/// Inclusive range of primary heartbeat periods whose heartbeats are
/// dropped. Period `k` is the primary's `k`-th `runMe` in PRIMARY mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodWindow {
    pub start: u32,
    pub end: u32,
}

impl PeriodWindow {
    fn suppresses(&self, period: u32) -> bool {
        (self.start..=self.end).contains(&period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Waiting = 0,
    Primary = 1,
    Backup = 2,
    Failed = 3,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Waiting => "WAITING",
            Mode::Primary => "PRIMARY",
            Mode::Backup => "BACKUP",
            Mode::Failed => "FAILED",
        }
    }

    /// Mode changes a node may take. `Primary -> Waiting` is the leasing
    /// abdication edge.
    pub fn may_transition_to(self, to: Mode) -> bool {
        use Mode::*;
        self == to
            || matches!(
                (self, to),
                (Waiting, Primary)
                    | (Waiting, Backup)
                    | (Backup, Primary)
                    | (Primary, Failed)
                    | (Primary, Waiting)
                    | (_, Failed)
            )
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeState {
    pub id: ActorId,
    pub mode: Mode,
    /// Believed primary; `None` encodes -1.
    pub primary: Option<ActorId>,
    pub nrp_candidates: [ActorId; NUMBER_OF_NETWORKS],
    /// -1 unknown, 0/1 network index, 2 candidates exhausted.
    pub nrp_network: i32,
    pub nrp_switch_id: Option<ActorId>,
    pub heartbeats_missed: [u32; NUMBER_OF_NETWORKS],
    pub ping_pending: bool,
    pub nrp_pending: bool,
    pub become_primary_on_ping_response: bool,
    pub init: bool,
    /// Primary periods elapsed, saturating one past the suppression window.
    pub attacker: u32,
    /// Consecutive lease misses reported by the NRP, saturating at 2.
    pub lease_strikes: u32,
    pub prev_lease_flag: bool,
    pub fail_time: u64,
    /// Terminal switch on each network.
    pub network_out: [ActorId; NUMBER_OF_NETWORKS],
}

impl NodeState {
    pub fn new(
        id: ActorId,
        primary: ActorId,
        nrp_candidates: [ActorId; NUMBER_OF_NETWORKS],
        network_out: [ActorId; NUMBER_OF_NETWORKS],
        fail_time: u64,
    ) -> Self {
        NodeState {
            id,
            mode: Mode::Waiting,
            primary: Some(primary),
            nrp_candidates,
            nrp_network: -1,
            nrp_switch_id: None,
            heartbeats_missed: [0; NUMBER_OF_NETWORKS],
            ping_pending: false,
            nrp_pending: true,
            become_primary_on_ping_response: false,
            init: true,
            attacker: 0,
            lease_strikes: 0,
            prev_lease_flag: true,
            fail_time,
            network_out,
        }
    }

    fn out_index(&self) -> usize {
        if self.nrp_network == 0 {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwitchState {
    pub id: ActorId,
    pub network_id: u8,
    pub terminal: bool,
    pub failed: bool,
    pub am_i_nrp: bool,
    pub registered_primary: Option<ActorId>,
    pub last_ping_from_primary: bool,
    pub prev_ping_from_primary: bool,
    pub neighbor_toward_low: ActorId,
    pub neighbor_toward_high: ActorId,
    pub attached_node: Option<ActorId>,
    pub fail_time: u64,
}

impl SwitchState {
    pub fn new(
        id: ActorId,
        network_id: u8,
        neighbors: (ActorId, ActorId),
        attached_node: Option<ActorId>,
        fail_time: u64,
    ) -> Self {
        SwitchState {
            id,
            network_id,
            terminal: attached_node.is_some(),
            failed: false,
            am_i_nrp: false,
            registered_primary: None,
            last_ping_from_primary: true,
            prev_ping_from_primary: false,
            neighbor_toward_low: neighbors.0,
            neighbor_toward_high: neighbors.1,
            attached_node,
            fail_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NrpActor {
    Switch(SwitchState),
    Node(NodeState),
}

impl NrpActor {
    pub fn as_node(&self) -> Option<&NodeState> {
        match self {
            NrpActor::Node(n) => Some(n),
            NrpActor::Switch(_) => None,
        }
    }

    pub fn as_switch(&self) -> Option<&SwitchState> {
        match self {
            NrpActor::Switch(s) => Some(s),
            NrpActor::Node(_) => None,
        }
    }
}

fn opt_id(id: Option<ActorId>) -> Value {
    Value::Int(id.map_or(-1, |a| i64::from(a.0)))
}

fn int<T: Into<i64>>(v: T) -> Value {
    Value::Int(v.into())
}

impl Actor for NrpActor {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        match self {
            NrpActor::Node(n) => vec![
                ("id", int(n.id.0)),
                ("mode", int(n.mode as i32)),
                ("primary", opt_id(n.primary)),
                ("nrp_candidate_0", int(n.nrp_candidates[0].0)),
                ("nrp_candidate_1", int(n.nrp_candidates[1].0)),
                ("nrp_network", int(n.nrp_network)),
                ("nrp_switch_id", opt_id(n.nrp_switch_id)),
                ("heartbeats_missed_1", int(n.heartbeats_missed[0])),
                ("heartbeats_missed_2", int(n.heartbeats_missed[1])),
                ("ping_pending", Value::Bool(n.ping_pending)),
                ("nrp_pending", Value::Bool(n.nrp_pending)),
                (
                    "become_primary_on_ping_response",
                    Value::Bool(n.become_primary_on_ping_response),
                ),
                ("init", Value::Bool(n.init)),
                ("attacker", int(n.attacker)),
                ("lease_strikes", int(n.lease_strikes)),
                ("prev_lease_flag", Value::Bool(n.prev_lease_flag)),
                ("fail_time", Value::Int(n.fail_time as i64)),
            ],
            NrpActor::Switch(s) => vec![
                ("id", int(s.id.0)),
                ("network_id", int(s.network_id)),
                ("terminal", Value::Bool(s.terminal)),
                ("failed", Value::Bool(s.failed)),
                ("am_i_nrp", Value::Bool(s.am_i_nrp)),
                ("registered_primary", opt_id(s.registered_primary)),
                (
                    "last_ping_from_primary",
                    Value::Bool(s.last_ping_from_primary),
                ),
                (
                    "prev_ping_from_primary",
                    Value::Bool(s.prev_ping_from_primary),
                ),
                ("fail_time", Value::Int(s.fail_time as i64)),
            ],
        }
    }

    /// Also accepts the variable names used by the original Rebeca model
    /// (`NRP_switch_id`, `amINRP`, `which`, ...).
    fn field(&self, name: &str) -> Option<Value> {
        let canonical = match (self, name) {
            (NrpActor::Node(_), "NRP_network") => "nrp_network",
            (NrpActor::Node(_), "NRP_switch_id") => "nrp_switch_id",
            (NrpActor::Node(_), "NRP_pending") => "nrp_pending",
            (NrpActor::Node(_), "which") => "lease_strikes",
            (NrpActor::Node(_), "prevWhich") => "prev_lease_flag",
            (NrpActor::Switch(_), "amINRP") => "am_i_nrp",
            (NrpActor::Switch(_), "mynetworkId") => "network_id",
            (NrpActor::Switch(_), "primary") => "registered_primary",
            (NrpActor::Switch(_), "which") => "last_ping_from_primary",
            (NrpActor::Switch(_), "prevWhich") => "prev_ping_from_primary",
            (_, other) => other,
        };
        self.fields()
            .into_iter()
            .find(|(n, _)| *n == canonical)
            .map(|(_, v)| v)
    }
}

/// Payload of `new_NRP` / `new_NRPBack`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NrpAnnouncement {
    pub prev_hop: ActorId,
    pub primary: ActorId,
    pub network: u8,
    pub switch_id: ActorId,
}

/// Handler invocations. Variants are declared in handler-name order so the
/// derived `Ord` sorts by handler name first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NrpMessage {
    HeartBeat {
        network: u8,
        prev_hop: ActorId,
    },
    NewNrp(NrpAnnouncement),
    NewNrpBack(NrpAnnouncement),
    NewNrpRequestTimedOut,
    NodeFail,
    PingNrp {
        prev_hop: ActorId,
        origin: ActorId,
        nrp: ActorId,
    },
    PingNrpResponse {
        prev_hop: ActorId,
        lease_now: bool,
        lease_prev: bool,
    },
    PingTimedOut,
    RunMe,
    SwitchFail,
}

impl KernelMessage for NrpMessage {
    fn handler(&self) -> &'static str {
        match self {
            NrpMessage::HeartBeat { .. } => "heartBeat",
            NrpMessage::NewNrp(_) => "new_NRP",
            NrpMessage::NewNrpBack(_) => "new_NRPBack",
            NrpMessage::NewNrpRequestTimedOut => "new_NRP_request_timed_out",
            NrpMessage::NodeFail => "nodeFail",
            NrpMessage::PingNrp { .. } => "pingNRP",
            NrpMessage::PingNrpResponse { .. } => "pingNRP_response",
            NrpMessage::PingTimedOut => "ping_timed_out",
            NrpMessage::RunMe => "runMe",
            NrpMessage::SwitchFail => "switchFail",
        }
    }

    fn payload(&self) -> Vec<Value> {
        match *self {
            NrpMessage::HeartBeat { network, prev_hop } => vec![int(network), int(prev_hop.0)],
            NrpMessage::NewNrp(a) | NrpMessage::NewNrpBack(a) => vec![
                int(a.prev_hop.0),
                int(a.primary.0),
                int(a.network),
                int(a.switch_id.0),
            ],
            NrpMessage::PingNrp {
                prev_hop,
                origin,
                nrp,
            } => vec![int(prev_hop.0), int(origin.0), int(nrp.0)],
            NrpMessage::PingNrpResponse {
                prev_hop,
                lease_now,
                lease_prev,
            } => vec![
                int(prev_hop.0),
                Value::Bool(lease_now),
                Value::Bool(lease_prev),
            ],
            _ => Vec::new(),
        }
    }
}

pub type NrpState = crate::kernel::GlobalState<NrpActor, NrpMessage>;
pub type NrpEnvelope = MessageEnvelope<NrpMessage>;
type Ctx<'a> = HandlerCtx<'a, NrpMessage>;

/// The NRP FD system: protocol parameters plus the fault-injection knobs
/// that change handler behavior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NrpModel {
    pub params: ProtocolParams,
    pub variant: Variant,
    pub abdication: Abdication,
    /// Adds a `?(true,false)` crash choice at the entry of every handler.
    pub event_based_failures: bool,
    pub suppress_heartbeats: Option<PeriodWindow>,
    priorities: PriorityTable,
}

impl NrpModel {
    pub fn new(params: ProtocolParams, variant: Variant) -> Self {
        NrpModel {
            params,
            variant,
            abdication: variant.default_abdication(),
            event_based_failures: false,
            suppress_heartbeats: None,
            priorities: PriorityTable::default(),
        }
    }

    pub fn with_priorities(mut self, priorities: PriorityTable) -> Self {
        self.priorities = priorities;
        self
    }

    fn is_switch_id(&self, id: ActorId) -> bool {
        id.0 <= self.params.max_switches
    }

    fn may_crash(&self, ctx: &mut Ctx<'_>, already_failed: bool) -> Result<bool, KernelError> {
        if self.event_based_failures && !already_failed {
            ctx.choose()
        } else {
            Ok(false)
        }
    }

    // ---- node handlers ----

    pub fn node_run_me(&self, n: &mut NodeState, ctx: &mut Ctx<'_>) {
        let p = &self.params;
        match n.mode {
            Mode::Waiting => {
                if n.init {
                    if n.primary == Some(n.id) {
                        n.mode = Mode::Primary;
                        n.nrp_network += 1;
                        if (n.nrp_network as usize) < p.number_of_networks {
                            let net = n.nrp_network as usize;
                            let switch_id = n.nrp_candidates[net];
                            n.nrp_switch_id = Some(switch_id);
                            announce(ctx, n, NrpMessage::NewNrp, net, switch_id);
                        } else {
                            n.nrp_network = p.number_of_networks as i32;
                        }
                    } else {
                        n.mode = Mode::Backup;
                    }
                    n.init = false;
                }
            }
            Mode::Primary => {
                if let Some(window) = self.suppress_heartbeats {
                    n.attacker = (n.attacker + 1).min(window.end + 1);
                }
                self.send_ping(n, ctx, p.ping_send_offset_primary);
                n.nrp_pending = true;
            }
            Mode::Backup => self.backup_period(n, ctx),
            Mode::Failed => {}
        }
        ctx.send_after(n.id, NrpMessage::RunMe, p.heartbeat_period);
    }

    fn backup_period(&self, n: &mut NodeState, ctx: &mut Ctx<'_>) {
        let p = &self.params;
        let max = p.max_missed_heartbeats;
        n.heartbeats_missed[0] += 1;
        n.heartbeats_missed[1] += 1;
        let [m1, m2] = n.heartbeats_missed;
        if m1 > max && m2 > max {
            if self.variant.direct_takeover() && m1 == m2 && m2 == max + 1 {
                take_over(n);
                return;
            }
            clamp_missed(n, p.missed_clamp());
            if self.variant == Variant::Baseline || self.variant == Variant::BaselineNoOpt {
                n.become_primary_on_ping_response = true;
            }
            self.send_ping(n, ctx, p.ping_send_offset_backup);
            n.nrp_pending = true;
        } else if m1 > max || m2 > max {
            let affected = (n.nrp_network == 0 && m1 > max) || (n.nrp_network == 1 && m2 > max);
            if affected {
                self.send_ping(n, ctx, p.ping_send_offset_primary);
            }
            clamp_missed(n, p.missed_clamp());
        }
    }

    /// Pings the believed NRP on the NRP network and arms `ping_timed_out`.
    /// With no known NRP nothing is sent and the timeout finds the ping
    /// unanswered.
    fn send_ping(&self, n: &mut NodeState, ctx: &mut Ctx<'_>, offset: u64) {
        n.ping_pending = true;
        if let Some(nrp) = n.nrp_switch_id {
            let out = n.network_out[n.out_index()];
            ctx.send_after(
                out,
                NrpMessage::PingNrp {
                    prev_hop: n.id,
                    origin: n.id,
                    nrp,
                },
                offset,
            );
        }
        ctx.send_after(n.id, NrpMessage::PingTimedOut, self.params.ping_timeout);
    }

    pub fn node_heartbeat(&self, n: &mut NodeState, network: u8) {
        if n.mode == Mode::Backup {
            if let Some(count) = n.heartbeats_missed.get_mut(usize::from(network)) {
                *count = 0;
            }
        }
    }

    pub fn node_ping_nrp_response(&self, n: &mut NodeState, lease_now: bool, lease_prev: bool) {
        match n.mode {
            Mode::Primary => n.ping_pending = false,
            Mode::Backup if self.variant.is_leasing() => {
                if !lease_now && !lease_prev {
                    n.lease_strikes = (n.lease_strikes + 1).min(2);
                } else {
                    n.lease_strikes = 0;
                }
                if n.lease_strikes > 1 {
                    n.ping_pending = false;
                }
            }
            Mode::Backup => n.ping_pending = false,
            Mode::Waiting | Mode::Failed => {}
        }
    }

    pub fn node_ping_timed_out(&self, n: &mut NodeState, ctx: &mut Ctx<'_>) {
        match n.mode {
            Mode::Backup => {
                if n.ping_pending {
                    n.ping_pending = false;
                } else if !self.variant.is_leasing() {
                    take_over(n);
                } else if n.lease_strikes > 1 {
                    take_over(n);
                    if let Some(switch_id) = n.nrp_switch_id {
                        let net = n.out_index();
                        announce(ctx, n, NrpMessage::NewNrpBack, net, switch_id);
                    }
                } else {
                    n.nrp_pending = true;
                }
            }
            Mode::Primary => {
                if n.ping_pending {
                    n.nrp_network += 1;
                    if (n.nrp_network as usize) < self.params.number_of_networks {
                        let net = n.nrp_network as usize;
                        let switch_id = n.nrp_candidates[net];
                        n.nrp_switch_id = Some(switch_id);
                        announce(ctx, n, NrpMessage::NewNrp, net, switch_id);
                    } else {
                        n.nrp_network = self.params.number_of_networks as i32;
                        match self.abdication {
                            Abdication::Failed => node_fail(n),
                            Abdication::Waiting => n.mode = Mode::Waiting,
                        }
                    }
                    n.nrp_pending = true;
                } else if !self.heartbeats_suppressed(n) {
                    for (net, &out) in n.network_out.iter().enumerate() {
                        ctx.send_after(
                            out,
                            NrpMessage::HeartBeat {
                                network: net as u8,
                                prev_hop: n.id,
                            },
                            self.params.network_delay,
                        );
                    }
                }
            }
            Mode::Waiting | Mode::Failed => {}
        }
    }

    fn heartbeats_suppressed(&self, n: &NodeState) -> bool {
        self.suppress_heartbeats
            .is_some_and(|w| w.suppresses(n.attacker))
    }

    /// Shared by `new_NRP` and `new_NRPBack`.
    pub fn node_new_nrp(&self, n: &mut NodeState, a: &NrpAnnouncement) {
        if n.mode != Mode::Failed {
            n.nrp_network = i32::from(a.network);
            n.nrp_switch_id = Some(a.switch_id);
        }
    }

    pub fn node_new_nrp_request_timed_out(&self, n: &mut NodeState) {
        if n.mode == Mode::Backup && n.nrp_pending {
            n.nrp_pending = false;
            n.become_primary_on_ping_response = false;
        }
    }

    fn handle_node(
        &self,
        n: &mut NodeState,
        msg: &NrpMessage,
        ctx: &mut Ctx<'_>,
    ) -> Result<(), KernelError> {
        match msg {
            NrpMessage::NodeFail => {
                node_fail(n);
                return Ok(());
            }
            NrpMessage::PingNrp { .. } | NrpMessage::SwitchFail => {
                return Err(KernelError::UnknownHandler {
                    actor: n.id,
                    handler: msg.handler(),
                })
            }
            _ => {}
        }
        if self.may_crash(ctx, n.mode == Mode::Failed)? {
            node_fail(n);
            return Ok(());
        }
        match msg {
            NrpMessage::RunMe => self.node_run_me(n, ctx),
            NrpMessage::HeartBeat { network, .. } => self.node_heartbeat(n, *network),
            NrpMessage::PingNrpResponse {
                lease_now,
                lease_prev,
                ..
            } => self.node_ping_nrp_response(n, *lease_now, *lease_prev),
            NrpMessage::PingTimedOut => self.node_ping_timed_out(n, ctx),
            NrpMessage::NewNrp(a) | NrpMessage::NewNrpBack(a) => self.node_new_nrp(n, a),
            NrpMessage::NewNrpRequestTimedOut => self.node_new_nrp_request_timed_out(n),
            NrpMessage::NodeFail | NrpMessage::PingNrp { .. } | NrpMessage::SwitchFail => {
                unreachable!("handled above")
            }
        }
        Ok(())
    }

    // ---- switch handlers ----

    /// Next hop for a message that arrived from `prev_hop`: the attached
    /// node when a terminal switch hears from another switch, otherwise
    /// away from the sender along the chain.
    fn next_hop(&self, s: &SwitchState, prev_hop: ActorId) -> ActorId {
        match s.attached_node {
            Some(node) if s.terminal && self.is_switch_id(prev_hop) => node,
            _ if prev_hop > s.id => s.neighbor_toward_low,
            _ => s.neighbor_toward_high,
        }
    }

    pub fn switch_heartbeat(
        &self,
        s: &SwitchState,
        network: u8,
        prev_hop: ActorId,
        ctx: &mut Ctx<'_>,
    ) {
        if s.failed {
            return;
        }
        let to = self.next_hop(s, prev_hop);
        ctx.send_after(
            to,
            NrpMessage::HeartBeat {
                network,
                prev_hop: s.id,
            },
            self.params.network_delay,
        );
    }

    /// Shared by `new_NRP` and `new_NRPBack`; `wrap` picks which one is
    /// forwarded.
    pub fn switch_new_nrp(
        &self,
        s: &mut SwitchState,
        a: &NrpAnnouncement,
        wrap: fn(NrpAnnouncement) -> NrpMessage,
        ctx: &mut Ctx<'_>,
    ) {
        if s.failed {
            return;
        }
        if s.id == a.switch_id {
            s.am_i_nrp = true;
            s.registered_primary = Some(a.primary);
        } else {
            s.am_i_nrp = false;
        }
        let to = self.next_hop(s, a.prev_hop);
        ctx.send(
            to,
            wrap(NrpAnnouncement {
                prev_hop: s.id,
                ..*a
            }),
        );
    }

    pub fn switch_ping_nrp(
        &self,
        s: &mut SwitchState,
        prev_hop: ActorId,
        origin: ActorId,
        nrp: ActorId,
        ctx: &mut Ctx<'_>,
    ) {
        if s.failed {
            return;
        }
        if s.terminal && nrp == s.id {
            let (lease_now, lease_prev) = if self.variant.is_leasing() {
                s.prev_ping_from_primary = s.last_ping_from_primary;
                s.last_ping_from_primary = s.registered_primary == Some(origin);
                (s.last_ping_from_primary, s.prev_ping_from_primary)
            } else {
                (false, false)
            };
            let to = match s.attached_node {
                Some(node) if !self.is_switch_id(prev_hop) => node,
                _ => s.neighbor_toward_low,
            };
            ctx.send(
                to,
                NrpMessage::PingNrpResponse {
                    prev_hop: s.id,
                    lease_now,
                    lease_prev,
                },
            );
        } else {
            let to = if prev_hop > s.id {
                s.neighbor_toward_low
            } else {
                s.neighbor_toward_high
            };
            ctx.send(
                to,
                NrpMessage::PingNrp {
                    prev_hop: s.id,
                    origin,
                    nrp,
                },
            );
        }
    }

    pub fn switch_ping_nrp_response(
        &self,
        s: &SwitchState,
        prev_hop: ActorId,
        lease_now: bool,
        lease_prev: bool,
        ctx: &mut Ctx<'_>,
    ) {
        if s.failed {
            return;
        }
        let to = self.next_hop(s, prev_hop);
        ctx.send(
            to,
            NrpMessage::PingNrpResponse {
                prev_hop: s.id,
                lease_now,
                lease_prev,
            },
        );
    }

    fn handle_switch(
        &self,
        s: &mut SwitchState,
        msg: &NrpMessage,
        ctx: &mut Ctx<'_>,
    ) -> Result<(), KernelError> {
        match msg {
            NrpMessage::SwitchFail => {
                switch_fail(s);
                return Ok(());
            }
            NrpMessage::RunMe
            | NrpMessage::NodeFail
            | NrpMessage::PingTimedOut
            | NrpMessage::NewNrpRequestTimedOut => {
                return Err(KernelError::UnknownHandler {
                    actor: s.id,
                    handler: msg.handler(),
                })
            }
            _ => {}
        }
        if self.may_crash(ctx, s.failed)? {
            switch_fail(s);
            return Ok(());
        }
        match msg {
            NrpMessage::HeartBeat { network, prev_hop } => {
                self.switch_heartbeat(s, *network, *prev_hop, ctx)
            }
            NrpMessage::NewNrp(a) => self.switch_new_nrp(s, a, NrpMessage::NewNrp, ctx),
            NrpMessage::NewNrpBack(a) => self.switch_new_nrp(s, a, NrpMessage::NewNrpBack, ctx),
            NrpMessage::PingNrp {
                prev_hop,
                origin,
                nrp,
            } => self.switch_ping_nrp(s, *prev_hop, *origin, *nrp, ctx),
            NrpMessage::PingNrpResponse {
                prev_hop,
                lease_now,
                lease_prev,
            } => self.switch_ping_nrp_response(s, *prev_hop, *lease_now, *lease_prev, ctx),
            _ => unreachable!("handled above"),
        }
        Ok(())
    }
}

fn announce(
    ctx: &mut Ctx<'_>,
    n: &NodeState,
    wrap: fn(NrpAnnouncement) -> NrpMessage,
    net: usize,
    switch_id: ActorId,
) {
    ctx.send(
        n.network_out[net],
        wrap(NrpAnnouncement {
            prev_hop: n.id,
            primary: n.id,
            network: net as u8,
            switch_id,
        }),
    );
}

fn take_over(n: &mut NodeState) {
    n.mode = Mode::Primary;
    n.heartbeats_missed = [0; NUMBER_OF_NETWORKS];
    n.primary = Some(n.id);
    n.nrp_pending = true;
    n.become_primary_on_ping_response = false;
}

fn clamp_missed(n: &mut NodeState, clamp: u32) {
    for count in &mut n.heartbeats_missed {
        *count = (*count).min(clamp);
    }
}

pub fn node_fail(n: &mut NodeState) {
    n.primary = None;
    n.mode = Mode::Failed;
    n.nrp_network = -1;
    n.nrp_switch_id = None;
    n.heartbeats_missed = [0; NUMBER_OF_NETWORKS];
    n.nrp_pending = true;
    n.become_primary_on_ping_response = false;
    n.ping_pending = false;
}

pub fn switch_fail(s: &mut SwitchState) {
    s.failed = true;
    s.am_i_nrp = false;
}

impl TimedModel for NrpModel {
    type Actor = NrpActor;
    type Msg = NrpMessage;

    fn priorities(&self) -> &PriorityTable {
        &self.priorities
    }

    fn capacity(&self, actor: &NrpActor) -> usize {
        match actor {
            NrpActor::Node(_) => NODE_BAG_CAPACITY,
            NrpActor::Switch(_) => SWITCH_BAG_CAPACITY,
        }
    }

    fn handle(
        &self,
        actor: &mut NrpActor,
        env: &NrpEnvelope,
        ctx: &mut Ctx<'_>,
    ) -> Result<(), KernelError> {
        match actor {
            NrpActor::Node(n) => self.handle_node(n, &env.message, ctx),
            NrpActor::Switch(s) => self.handle_switch(s, &env.message, ctx),
        }
    }
}
