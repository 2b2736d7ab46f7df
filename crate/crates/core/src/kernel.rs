//! Timed-actor execution semantics and breadth-first exploration.
//!
//! A [`GlobalState`] holds every actor snapshot plus a bag of time-tagged
//! messages. Execution always consumes an envelope with the minimal arrival
//! time; the receiving actor's handler runs atomically and may schedule more
//! envelopes. Nondeterministic choice points inside a handler are resolved by
//! a boolean oracle, and [`explore`] branches over every resolution.
//!
//! States that differ only by a uniform shift of every time tag are
//! identified ([`GlobalState::canonicalize`]), which keeps periodic models
//! finite.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::hash::Hash;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Abstract model time. One heartbeat period is 1000 units by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogicalTime(pub u64);

impl LogicalTime {
    pub const ZERO: LogicalTime = LogicalTime(0);

    pub fn after(self, delay: u64) -> LogicalTime {
        LogicalTime(self.0 + delay)
    }
}

impl fmt::Display for LogicalTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub u32);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A scalar carried in a payload or exposed as an actor field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
        }
    }
}

/// A handler invocation carried by an envelope.
///
/// The derived `Ord` of implementors must sort first by [`Message::handler`]
/// name and then by payload, so the bag iterates in a stable order.
pub trait Message: Clone + Eq + Ord + Hash + fmt::Debug + Send + Sync {
    fn handler(&self) -> &'static str;
    fn payload(&self) -> Vec<Value>;
}

/// An actor snapshot. Fields are exposed by name for serialization and
/// property evaluation.
pub trait Actor: Clone + Eq + Ord + Hash + fmt::Debug + Send + Sync {
    fn fields(&self) -> Vec<(&'static str, Value)>;

    fn field(&self, name: &str) -> Option<Value> {
        self.fields()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageEnvelope<M> {
    pub sender: ActorId,
    pub receiver: ActorId,
    pub message: M,
    pub arrival: LogicalTime,
    pub deadline: Option<LogicalTime>,
}

impl<M: Message> MessageEnvelope<M> {
    pub fn new(sender: ActorId, receiver: ActorId, message: M, arrival: LogicalTime) -> Self {
        MessageEnvelope {
            sender,
            receiver,
            message,
            arrival,
            deadline: None,
        }
    }

    pub fn with_deadline(mut self, deadline: LogicalTime) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn handler(&self) -> &'static str {
        self.message.handler()
    }

    /// True when executing this envelope at `now` would miss its deadline.
    pub fn expired_at(&self, now: LogicalTime) -> bool {
        self.deadline.is_some_and(|d| d < now.max(self.arrival))
    }

    fn shifted_down(&self, by: u64) -> Self {
        let mut env = self.clone();
        env.arrival = LogicalTime(env.arrival.0 - by);
        env.deadline = env.deadline.map(|d| LogicalTime(d.0.saturating_sub(by)));
        env
    }

    /// The envelope with every time tag moved `by` units later.
    pub fn shifted_up(&self, by: u64) -> Self {
        let mut env = self.clone();
        env.arrival = env.arrival.after(by);
        env.deadline = env.deadline.map(|d| d.after(by));
        env
    }

    pub fn payload_string(&self) -> String {
        self.message
            .payload()
            .iter()
            .map(Value::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

// Bag order: receiver, handler, arrival, payload.
impl<M: Message> Ord for MessageEnvelope<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.receiver
            .cmp(&other.receiver)
            .then_with(|| self.message.handler().cmp(other.message.handler()))
            .then_with(|| self.arrival.cmp(&other.arrival))
            .then_with(|| self.message.cmp(&other.message))
            .then_with(|| self.sender.cmp(&other.sender))
            .then_with(|| self.deadline.cmp(&other.deadline))
    }
}

impl<M: Message> PartialOrd for MessageEnvelope<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Scheduling priority of one actor: lower `level` runs first at equal
/// arrival time, ties broken by declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Priority {
    pub level: u8,
    pub declaration: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorityTable {
    entries: BTreeMap<ActorId, Priority>,
}

impl PriorityTable {
    /// Registers actors in declaration order.
    pub fn declare(&mut self, id: ActorId, level: u8) {
        let declaration = self.entries.len();
        self.entries.insert(id, Priority { level, declaration });
    }

    pub fn get(&self, id: ActorId) -> Priority {
        self.entries.get(&id).copied().unwrap_or(Priority {
            level: u8::MAX,
            declaration: usize::MAX,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("message bag of actor {0} exceeds its declared capacity")]
    BagOverflow(ActorId),
    #[error("actor {actor} has no handler named {handler}")]
    UnknownHandler {
        actor: ActorId,
        handler: &'static str,
    },
    #[error("unknown actor {0}")]
    UnknownActor(ActorId),
    #[error("choice oracle exhausted after {0} choices")]
    ChoiceUnderflow(usize),
    #[error("message bag is empty")]
    EmptyBag,
    #[error("envelope is not enabled in the current state")]
    NotEnabled,
    #[error("envelope arrival {arrival} precedes current time {now}")]
    ArrivalInPast {
        arrival: LogicalTime,
        now: LogicalTime,
    },
}

/// Snapshot of every actor plus the pending message bag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState<A, M> {
    pub now: LogicalTime,
    pub actors: BTreeMap<ActorId, A>,
    bag: Vec<MessageEnvelope<M>>,
}

impl<A: Actor, M: Message> GlobalState<A, M> {
    pub fn new(actors: BTreeMap<ActorId, A>) -> Self {
        GlobalState {
            now: LogicalTime::ZERO,
            actors,
            bag: Vec::new(),
        }
    }

    /// Pending envelopes in bag order.
    pub fn bag(&self) -> &[MessageEnvelope<M>] {
        &self.bag
    }

    pub fn pending_for(&self, receiver: ActorId) -> usize {
        self.bag.iter().filter(|e| e.receiver == receiver).count()
    }

    /// Adds `env` to the bag, enforcing the receiver's declared capacity.
    pub fn schedule(
        &mut self,
        env: MessageEnvelope<M>,
        capacity: usize,
    ) -> Result<(), KernelError> {
        if env.arrival < self.now {
            return Err(KernelError::ArrivalInPast {
                arrival: env.arrival,
                now: self.now,
            });
        }
        if self.pending_for(env.receiver) >= capacity {
            return Err(KernelError::BagOverflow(env.receiver));
        }
        let at = self.bag.partition_point(|e| e <= &env);
        self.bag.insert(at, env);
        Ok(())
    }

    /// Minimal arrival time in the bag.
    pub fn advance_time(&self) -> Result<LogicalTime, KernelError> {
        self.bag
            .iter()
            .map(|e| e.arrival)
            .min()
            .ok_or(KernelError::EmptyBag)
    }

    /// Envelopes sharing the minimal arrival time, in execution order.
    /// Envelopes that would miss their deadline are skipped.
    pub fn enabled_at_now(&self, priorities: &PriorityTable) -> Vec<&MessageEnvelope<M>> {
        let live = || self.bag.iter().filter(|e| !e.expired_at(self.now));
        let Some(min) = live().map(|e| e.arrival).min() else {
            return Vec::new();
        };
        let mut enabled: Vec<_> = live().filter(|e| e.arrival == min).collect();
        enabled.sort_by(|a, b| {
            priorities
                .get(a.receiver)
                .cmp(&priorities.get(b.receiver))
                .then_with(|| a.cmp(b))
        });
        enabled
    }

    fn drop_expired(&mut self) {
        let now = self.now;
        self.bag.retain(|e| !e.expired_at(now));
    }

    /// Shifts every time tag down so that `now` becomes zero. Actor
    /// variables hold no absolute times and are left untouched.
    pub fn canonicalize(&self) -> Self {
        let by = self.now.0;
        if by == 0 {
            return self.clone();
        }
        GlobalState {
            now: LogicalTime::ZERO,
            actors: self.actors.clone(),
            bag: self.bag.iter().map(|e| e.shifted_down(by)).collect(),
        }
    }

    /// Inverse of [`canonicalize`](Self::canonicalize) for a state with
    /// `now == 0`.
    pub fn shifted_to(&self, now: LogicalTime) -> Self {
        let by = now.0 - self.now.0;
        GlobalState {
            now,
            actors: self.actors.clone(),
            bag: self.bag.iter().map(|e| e.shifted_up(by)).collect(),
        }
    }

    /// Stable line-oriented serialization: `now`, then one line per actor
    /// with its fields in declaration order, then one line per envelope in
    /// bag order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "now={}", self.now);
        for (id, actor) in &self.actors {
            let _ = write!(out, "actor {id}");
            for (name, value) in actor.fields() {
                let _ = write!(out, " {name}={value}");
            }
            out.push('\n');
        }
        for env in &self.bag {
            let _ = write!(
                out,
                "msg {}->{} {}({}) @{}",
                env.sender,
                env.receiver,
                env.handler(),
                env.payload_string(),
                env.arrival
            );
            if let Some(d) = env.deadline {
                let _ = write!(out, " deadline={d}");
            }
            out.push('\n');
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonicalize().serialize().as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Where a handler's nondeterministic choices come from.
#[derive(Debug)]
enum ChoiceSource<'a> {
    /// A fixed sequence; running past its end is an error.
    Fixed(&'a [bool]),
    /// A prefix, extended with `false` once exhausted.
    Extend(&'a [bool]),
}

/// Execution context handed to a handler: clock, identity, choice oracle
/// and outbox.
#[derive(Debug)]
pub struct HandlerCtx<'a, M> {
    now: LogicalTime,
    me: ActorId,
    source: ChoiceSource<'a>,
    consumed: Vec<bool>,
    outbox: Vec<Outgoing<M>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing<M> {
    pub to: ActorId,
    pub message: M,
    pub delay: u64,
}

impl<'a, M> HandlerCtx<'a, M> {
    /// A context whose choice points read from `choices` in order.
    pub fn new(now: LogicalTime, me: ActorId, choices: &'a [bool]) -> Self {
        Self::with_source(now, me, ChoiceSource::Fixed(choices))
    }

    fn with_source(now: LogicalTime, me: ActorId, source: ChoiceSource<'a>) -> Self {
        HandlerCtx {
            now,
            me,
            source,
            consumed: Vec::new(),
            outbox: Vec::new(),
        }
    }

    pub fn now(&self) -> LogicalTime {
        self.now
    }

    pub fn me(&self) -> ActorId {
        self.me
    }

    pub fn send(&mut self, to: ActorId, message: M) {
        self.send_after(to, message, 0);
    }

    pub fn send_after(&mut self, to: ActorId, message: M, delay: u64) {
        self.outbox.push(Outgoing { to, message, delay });
    }

    /// Resolves one `?(true,false)` choice point.
    pub fn choose(&mut self) -> Result<bool, KernelError> {
        let i = self.consumed.len();
        let value = match self.source {
            ChoiceSource::Fixed(seq) => {
                *seq.get(i).ok_or(KernelError::ChoiceUnderflow(seq.len()))?
            }
            ChoiceSource::Extend(prefix) => prefix.get(i).copied().unwrap_or(false),
        };
        self.consumed.push(value);
        Ok(value)
    }

    pub fn outbox(&self) -> &[Outgoing<M>] {
        &self.outbox
    }

    pub fn consumed(&self) -> &[bool] {
        &self.consumed
    }
}

/// The static part of a timed-actor system: priorities, queue bounds and
/// handler bodies.
pub trait TimedModel: Sync {
    type Actor: Actor;
    type Msg: Message;

    fn priorities(&self) -> &PriorityTable;

    fn capacity(&self, actor: &Self::Actor) -> usize;

    fn handle(
        &self,
        actor: &mut Self::Actor,
        env: &MessageEnvelope<Self::Msg>,
        ctx: &mut HandlerCtx<'_, Self::Msg>,
    ) -> Result<(), KernelError>;
}

pub type ModelState<T> = GlobalState<<T as TimedModel>::Actor, <T as TimedModel>::Msg>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionLabel<M> {
    pub executed: MessageEnvelope<M>,
    pub choices: Vec<bool>,
}

/// Adds `env` to `state`, checking the receiver's bag capacity.
pub fn schedule<T: TimedModel>(
    model: &T,
    state: &mut ModelState<T>,
    env: MessageEnvelope<T::Msg>,
) -> Result<(), KernelError> {
    let actor = state
        .actors
        .get(&env.receiver)
        .ok_or(KernelError::UnknownActor(env.receiver))?;
    let capacity = model.capacity(actor);
    state.schedule(env, capacity)
}

/// Executes `env` with choice points read from `choices`.
pub fn execute_event<T: TimedModel>(
    model: &T,
    state: &ModelState<T>,
    env: &MessageEnvelope<T::Msg>,
    choices: &[bool],
) -> Result<(ModelState<T>, TransitionLabel<T::Msg>), KernelError> {
    run_handler(model, state, env, ChoiceSource::Fixed(choices))
}

fn run_handler<T: TimedModel>(
    model: &T,
    state: &ModelState<T>,
    env: &MessageEnvelope<T::Msg>,
    source: ChoiceSource<'_>,
) -> Result<(ModelState<T>, TransitionLabel<T::Msg>), KernelError> {
    if env.expired_at(state.now) {
        return Err(KernelError::NotEnabled);
    }
    let pos = state
        .bag
        .iter()
        .position(|e| e == env)
        .ok_or(KernelError::NotEnabled)?;
    let mut next = state.clone();
    next.bag.remove(pos);
    next.now = env.arrival;
    next.drop_expired();

    let mut ctx = HandlerCtx::with_source(next.now, env.receiver, source);
    let actor = next
        .actors
        .get_mut(&env.receiver)
        .ok_or(KernelError::UnknownActor(env.receiver))?;
    model.handle(actor, env, &mut ctx)?;

    let HandlerCtx {
        now,
        me,
        consumed,
        outbox,
        ..
    } = ctx;
    for out in outbox {
        let sent = MessageEnvelope::new(me, out.to, out.message, now.after(out.delay));
        schedule(model, &mut next, sent)?;
    }
    let label = TransitionLabel {
        executed: env.clone(),
        choices: consumed,
    };
    Ok((next, label))
}

/// How equal-time envelopes are interleaved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Interleaving {
    /// Only the highest-priority envelope runs; one successor per instant.
    #[default]
    Priority,
    /// Every equal-time envelope is a separate branch.
    Full,
}

impl fmt::Display for Interleaving {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interleaving::Priority => "priority",
            Interleaving::Full => "full",
        })
    }
}

impl std::str::FromStr for Interleaving {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "priority" => Ok(Interleaving::Priority),
            "full" => Ok(Interleaving::Full),
            other => Err(format!("unknown interleaving policy `{other}`")),
        }
    }
}

pub type Successor<T> = (TransitionLabel<<T as TimedModel>::Msg>, ModelState<T>);

/// Every successor of `state`: one per enabled envelope (as selected by the
/// policy) and per assignment of the handler's choice points.
pub fn successors<T: TimedModel>(
    model: &T,
    state: &ModelState<T>,
    policy: Interleaving,
) -> Result<Vec<Successor<T>>, KernelError> {
    let mut enabled = state.enabled_at_now(model.priorities());
    enabled.dedup();
    if policy == Interleaving::Priority {
        enabled.truncate(1);
    }
    let mut out = Vec::new();
    for env in enabled {
        let mut branch = Vec::new();
        let mut prefixes = vec![Vec::new()];
        while let Some(prefix) = prefixes.pop() {
            let (next, label) = run_handler(model, state, env, ChoiceSource::Extend(&prefix))?;
            for i in prefix.len()..label.choices.len() {
                let mut flipped = label.choices[..i].to_vec();
                flipped.push(true);
                prefixes.push(flipped);
            }
            branch.push((label, next));
        }
        branch.sort_by(|a, b| a.0.choices.cmp(&b.0.choices));
        out.extend(branch);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            max_depth: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub limits: Limits,
    pub interleaving: Interleaving,
    /// Worker threads used to expand a frontier; results do not depend on it.
    pub workers: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            limits: Limits::default(),
            interleaving: Interleaving::Priority,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitKind {
    States,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Satisfied,
    Violated,
    Unknown(LimitKind),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Satisfied => f.write_str("satisfied"),
            Verdict::Violated => f.write_str("violated"),
            Verdict::Unknown(LimitKind::States) => f.write_str("unknown (state limit)"),
            Verdict::Unknown(LimitKind::Depth) => f.write_str("unknown (depth limit)"),
        }
    }
}

pub type StateId = usize;

#[derive(Debug, Clone)]
pub struct StateRecord<A, M> {
    /// Canonical form (`now == 0`).
    pub state: Arc<GlobalState<A, M>>,
    /// Edge through which the state was first reached.
    pub parent: Option<usize>,
    pub depth: usize,
    /// Absolute time along the first-discovery path.
    pub discovered_at: LogicalTime,
    pub violating: bool,
}

#[derive(Debug, Clone)]
pub struct Edge<M> {
    pub source: StateId,
    pub target: StateId,
    /// Envelope times are relative to the canonical source.
    pub label: TransitionLabel<M>,
}

#[derive(Debug, Clone)]
pub struct ExplorationResult<A, M> {
    pub verdict: Verdict,
    pub states: Vec<StateRecord<A, M>>,
    pub edges: Vec<Edge<M>>,
    pub violation: Option<StateId>,
    pub elapsed: Duration,
}

impl<A, M> ExplorationResult<A, M> {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge indices from the initial state to `target` along the BFS tree.
    pub fn path_to(&self, target: StateId) -> Vec<usize> {
        let mut path = Vec::new();
        let mut at = target;
        while let Some(edge) = self.states[at].parent {
            path.push(edge);
            at = self.edges[edge].source;
        }
        path.reverse();
        path
    }
}

type Expansion<A, M> = Result<Vec<(TransitionLabel<M>, GlobalState<A, M>, bool)>, KernelError>;

/// Breadth-first exploration from `initial`, checking `property` on every
/// generated state and stopping at the first violation.
pub fn explore<T, P>(
    model: &T,
    initial: &ModelState<T>,
    property: &P,
    options: &ExploreOptions,
) -> Result<ExplorationResult<T::Actor, T::Msg>, KernelError>
where
    T: TimedModel,
    P: Fn(&ModelState<T>) -> bool + Sync,
{
    let started = Instant::now();
    let pool = if options.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .ok()
    } else {
        None
    };

    let root = Arc::new(initial.canonicalize());
    let root_ok = property(initial);
    let mut visited: HashMap<Arc<ModelState<T>>, StateId> = HashMap::new();
    visited.insert(Arc::clone(&root), 0);
    let mut result = ExplorationResult {
        verdict: Verdict::Satisfied,
        states: vec![StateRecord {
            state: root,
            parent: None,
            depth: 0,
            discovered_at: initial.now,
            violating: !root_ok,
        }],
        edges: Vec::new(),
        violation: None,
        elapsed: Duration::ZERO,
    };
    if !root_ok {
        result.verdict = Verdict::Violated;
        result.violation = Some(0);
        result.elapsed = started.elapsed();
        return Ok(result);
    }

    let expand =
        |id: &StateId, states: &[StateRecord<T::Actor, T::Msg>]| -> Expansion<T::Actor, T::Msg> {
            let state = &states[*id].state;
            successors(model, state, options.interleaving).map(|succ| {
                succ.into_iter()
                    .map(|(label, next)| {
                        let ok = property(&next);
                        (label, next, ok)
                    })
                    .collect()
            })
        };

    let mut frontier: Vec<StateId> = vec![0];
    'levels: while !frontier.is_empty() {
        let expanded: Vec<Expansion<T::Actor, T::Msg>> = {
            let states = &result.states;
            match &pool {
                Some(pool) => {
                    pool.install(|| frontier.par_iter().map(|id| expand(id, states)).collect())
                }
                None => frontier.iter().map(|id| expand(id, states)).collect(),
            }
        };

        let mut next_frontier = Vec::new();
        for (&source, succ) in frontier.iter().zip(expanded) {
            let depth = result.states[source].depth + 1;
            let base_time = result.states[source].discovered_at;
            for (label, next, ok) in succ? {
                let advance = next.now;
                let canonical = next.canonicalize();
                if let Some(&target) = visited.get(&canonical) {
                    result.edges.push(Edge {
                        source,
                        target,
                        label,
                    });
                    continue;
                }
                if result.states.len() >= options.limits.max_states {
                    result.verdict = Verdict::Unknown(LimitKind::States);
                    break 'levels;
                }
                if depth > options.limits.max_depth {
                    result.verdict = Verdict::Unknown(LimitKind::Depth);
                    break 'levels;
                }
                let target = result.states.len();
                let canonical = Arc::new(canonical);
                visited.insert(Arc::clone(&canonical), target);
                result.edges.push(Edge {
                    source,
                    target,
                    label,
                });
                result.states.push(StateRecord {
                    state: canonical,
                    parent: Some(result.edges.len() - 1),
                    depth,
                    discovered_at: base_time.after(advance.0),
                    violating: !ok,
                });
                if !ok {
                    result.verdict = Verdict::Violated;
                    result.violation = Some(target);
                    break 'levels;
                }
                next_frontier.push(target);
            }
        }
        frontier = next_frontier;
    }
    result.elapsed = started.elapsed();
    Ok(result)
}
