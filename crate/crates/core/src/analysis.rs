//! Propositions, safety assertions, counterexample traces and state-space
//! export.
//!
//! Properties use the small Rebeca property-file dialect:
//!
//! ```text
//! property {
//!     define {
//!         DCN1Primary = (DCN1.mode == 1);
//!         DCN2Primary = (DCN2.mode == 1);
//!     }
//!     Assertion { NoDualPrimary: !(DCN1Primary && DCN2Primary); }
//! }
//! ```
//!
//! Atoms are `actor.field <cmp> literal` or a bare boolean `actor.field`;
//! connectives are `!`, `&&` and `||`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::Duration;

use thiserror::Error;

use crate::kernel::{
    execute_event, explore, Actor, ExplorationResult, ExploreOptions, GlobalState, KernelError,
    LogicalTime, Message, MessageEnvelope, ModelState, TimedModel, TransitionLabel, Value, Verdict,
};
use crate::protocol::{Mode, NrpActor, NrpMessage, NrpState, Variant};
use crate::scenarios::{ActorNames, System, DCN1, DCN2};

pub type NrpResult = ExplorationResult<NrpActor, NrpMessage>;

pub const NO_DUAL_PRIMARY: &str = "property {
    define {
        DCN1Primary = (DCN1.mode == 1);
        DCN2Primary = (DCN2.mode == 1);
    }
    Assertion { NoDualPrimary: !(DCN1Primary && DCN2Primary); }
}";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("property syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("unknown actor `{0}`")]
    UnknownActor(String),
    #[error("actor `{actor}` has no field `{field}`")]
    UnknownField { actor: String, field: String },
    #[error("`{actor}.{field}` is {found}, not comparable with {literal}")]
    TypeMismatch {
        actor: String,
        field: String,
        found: Value,
        literal: Value,
    },
    #[error("exploration did not find a violation")]
    NotViolated,
    #[error("replay diverged from the explored state at step {0}")]
    ReplayDiverged(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(bool),
    /// Bare `actor.field`; the field must be boolean.
    Field {
        actor: String,
        field: String,
    },
    Compare {
        actor: String,
        field: String,
        op: Comparator,
        literal: Value,
    },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Field { actor, field } => write!(f, "{actor}.{field}"),
            Expr::Compare {
                actor,
                field,
                op,
                literal,
            } => write!(f, "{actor}.{field} {} {literal}", op.symbol()),
            Expr::Not(e) => write!(f, "!({e})"),
            Expr::And(a, b) => write!(f, "({a} && {b})"),
            Expr::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposition {
    pub name: String,
    pub expr: Expr,
}

/// An invariant over every reachable state. Proposition references are
/// inlined at parse time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub name: String,
    pub formula: Expr,
}

impl Assertion {
    pub fn no_dual_primary() -> Self {
        parse_property(NO_DUAL_PRIMARY)
            .expect("built-in property parses")
            .assertions
            .remove(0)
    }

    /// Parses a standalone formula with no proposition definitions.
    pub fn parse(name: &str, formula: &str) -> Result<Self, AnalysisError> {
        let mut p = Parser::new(formula, BTreeMap::new());
        let formula = p.expr()?;
        p.end()?;
        Ok(Assertion {
            name: name.to_string(),
            formula,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropertySpec {
    pub propositions: Vec<Proposition>,
    pub assertions: Vec<Assertion>,
}

/// Parses a `property { define {...} Assertion {...} }` block.
pub fn parse_property(text: &str) -> Result<PropertySpec, AnalysisError> {
    let mut p = Parser::new(text, BTreeMap::new());
    let mut spec = PropertySpec::default();
    p.keyword("property")?;
    p.punct("{")?;
    loop {
        if p.eat("}") {
            break;
        }
        let section = p.ident()?;
        p.punct("{")?;
        match section.as_str() {
            "define" => {
                while !p.eat("}") {
                    let name = p.ident()?;
                    p.punct("=")?;
                    let expr = p.expr()?;
                    p.punct(";")?;
                    p.props.insert(name.clone(), expr.clone());
                    spec.propositions.push(Proposition { name, expr });
                }
            }
            "Assertion" => {
                while !p.eat("}") {
                    let name = p.ident()?;
                    p.punct(":")?;
                    let formula = p.expr()?;
                    p.punct(";")?;
                    spec.assertions.push(Assertion { name, formula });
                }
            }
            other => return Err(p.error(format!("unknown section `{other}`"))),
        }
    }
    p.end()?;
    Ok(spec)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    props: BTreeMap<String, Expr>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, props: BTreeMap<String, Expr>) -> Self {
        Parser { src, pos: 0, props }
    }

    fn error(&self, message: String) -> AnalysisError {
        AnalysisError::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn rest(&mut self) -> &'a str {
        let trimmed = self.src[self.pos..].trim_start();
        self.pos = self.src.len() - trimmed.len();
        trimmed
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn punct(&mut self, token: &str) -> Result<(), AnalysisError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), AnalysisError> {
        match self.ident()? {
            w if w == word => Ok(()),
            w => Err(self.error(format!("expected `{word}`, found `{w}`"))),
        }
    }

    fn ident(&mut self) -> Result<String, AnalysisError> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 || rest.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error("expected identifier".into()));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn end(&mut self) -> Result<(), AnalysisError> {
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.error("trailing input".into()))
        }
    }

    fn expr(&mut self) -> Result<Expr, AnalysisError> {
        let mut lhs = self.conjunction()?;
        while self.eat("||") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.conjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, AnalysisError> {
        let mut lhs = self.unary()?;
        while self.eat("&&") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, AnalysisError> {
        if self.rest().starts_with("!=") {
            return Err(self.error("unexpected `!=`".into()));
        }
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.punct(")")?;
            return Ok(e);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, AnalysisError> {
        let start = self.pos;
        let first = self.ident()?;
        match first.as_str() {
            "true" => return Ok(Expr::Const(true)),
            "false" => return Ok(Expr::Const(false)),
            _ => {}
        }
        if !self.eat(".") {
            return self.props.get(&first).cloned().ok_or_else(|| {
                self.pos = start;
                AnalysisError::UnknownProposition(first)
            });
        }
        let field = self.ident()?;
        let op = [
            ("==", Comparator::Eq),
            ("!=", Comparator::Ne),
            ("<=", Comparator::Le),
            (">=", Comparator::Ge),
            ("<", Comparator::Lt),
            (">", Comparator::Gt),
        ]
        .into_iter()
        .find(|(tok, _)| self.eat(tok))
        .map(|(_, op)| op);
        let Some(op) = op else {
            return Ok(Expr::Field {
                actor: first,
                field,
            });
        };
        let literal = self.literal()?;
        Ok(Expr::Compare {
            actor: first,
            field,
            op,
            literal,
        })
    }

    fn literal(&mut self) -> Result<Value, AnalysisError> {
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_alphanumeric() || c == '_' || (i == 0 && c == '-')))
            .map_or(rest.len(), |(i, _)| i);
        let word = &rest[..len];
        let value = match word {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            "WAITING" => Value::Int(Mode::Waiting as i64),
            "PRIMARY" => Value::Int(Mode::Primary as i64),
            "BACKUP" => Value::Int(Mode::Backup as i64),
            "FAILED" => Value::Int(Mode::Failed as i64),
            _ => Value::Int(
                word.parse()
                    .map_err(|_| self.error(format!("bad literal `{word}`")))?,
            ),
        };
        self.pos += len;
        Ok(value)
    }
}

/// Evaluates `expr` in `state`; actors are referenced by declared name.
pub fn evaluate_expr<A: Actor, M>(
    expr: &Expr,
    state: &GlobalState<A, M>,
    names: &ActorNames,
) -> Result<bool, AnalysisError> {
    let lookup = |actor: &str, field: &str| -> Result<Value, AnalysisError> {
        let a = names
            .id(actor)
            .and_then(|id| state.actors.get(&id))
            .ok_or_else(|| AnalysisError::UnknownActor(actor.to_string()))?;
        a.field(field).ok_or_else(|| AnalysisError::UnknownField {
            actor: actor.to_string(),
            field: field.to_string(),
        })
    };
    Ok(match expr {
        Expr::Const(b) => *b,
        Expr::Field { actor, field } => match lookup(actor, field)? {
            Value::Bool(b) => b,
            found => {
                return Err(AnalysisError::TypeMismatch {
                    actor: actor.clone(),
                    field: field.clone(),
                    found,
                    literal: Value::Bool(true),
                })
            }
        },
        Expr::Compare {
            actor,
            field,
            op,
            literal,
        } => {
            let found = lookup(actor, field)?;
            let ord = match (found, *literal) {
                (Value::Int(a), Value::Int(b)) => a.cmp(&b),
                (Value::Bool(a), Value::Bool(b))
                    if matches!(op, Comparator::Eq | Comparator::Ne) =>
                {
                    a.cmp(&b)
                }
                _ => {
                    return Err(AnalysisError::TypeMismatch {
                        actor: actor.clone(),
                        field: field.clone(),
                        found,
                        literal: *literal,
                    })
                }
            };
            match op {
                Comparator::Eq => ord.is_eq(),
                Comparator::Ne => ord.is_ne(),
                Comparator::Lt => ord.is_lt(),
                Comparator::Le => ord.is_le(),
                Comparator::Gt => ord.is_gt(),
                Comparator::Ge => ord.is_ge(),
            }
        }
        Expr::Not(e) => !evaluate_expr(e, state, names)?,
        Expr::And(a, b) => evaluate_expr(a, state, names)? && evaluate_expr(b, state, names)?,
        Expr::Or(a, b) => evaluate_expr(a, state, names)? || evaluate_expr(b, state, names)?,
    })
}

pub fn evaluate<A: Actor, M>(
    assertion: &Assertion,
    state: &GlobalState<A, M>,
    names: &ActorNames,
) -> Result<bool, AnalysisError> {
    evaluate_expr(&assertion.formula, state, names)
}

/// Wraps `assertion` as an exploration property after checking that every
/// reference resolves in `initial`. The actor set and each actor's field set
/// never change, so later evaluations cannot fail.
pub fn compile_property<'a, A: Actor, M>(
    assertion: &'a Assertion,
    initial: &GlobalState<A, M>,
    names: &'a ActorNames,
) -> Result<impl Fn(&GlobalState<A, M>) -> bool + Sync + 'a, AnalysisError> {
    evaluate(assertion, initial, names)?;
    Ok(move |s: &GlobalState<A, M>| evaluate(assertion, s, names).unwrap_or(false))
}

/// Explores `system` against NoDualPrimary.
pub fn check_no_dual_primary(
    system: &System,
    options: &ExploreOptions,
) -> Result<NrpResult, AnalysisError> {
    let assertion = Assertion::no_dual_primary();
    let property = compile_property(&assertion, &system.initial, &system.names)?;
    Ok(explore(&system.model, &system.initial, &property, options)?)
}

/// One executed event of a counterexample, in absolute time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep<M> {
    pub source_digest: String,
    pub label: TransitionLabel<M>,
    pub now: LogicalTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleTrace<A, M> {
    pub steps: Vec<TraceStep<M>>,
    /// `states[0]` is the initial state and `states[i + 1]` follows
    /// `steps[i]`; all in absolute time.
    pub states: Vec<GlobalState<A, M>>,
}

impl<A, M> CounterexampleTrace<A, M> {
    pub fn violating_state(&self) -> &GlobalState<A, M> {
        self.states.last().expect("trace holds the initial state")
    }
}

/// Replays the shortest path to `target` from the absolute `initial` state,
/// checking each reached state against the explored canonical one.
pub fn replay_path<T: TimedModel>(
    model: &T,
    initial: &ModelState<T>,
    result: &ExplorationResult<T::Actor, T::Msg>,
    target: usize,
) -> Result<CounterexampleTrace<T::Actor, T::Msg>, AnalysisError> {
    let mut current = initial.clone();
    let mut trace = CounterexampleTrace {
        steps: Vec::new(),
        states: vec![current.clone()],
    };
    for (i, edge_id) in result.path_to(target).into_iter().enumerate() {
        let edge = &result.edges[edge_id];
        let env: MessageEnvelope<T::Msg> = edge.label.executed.shifted_up(current.now.0);
        let (next, label) = execute_event(model, &current, &env, &edge.label.choices)?;
        if next.canonicalize() != *result.states[edge.target].state {
            return Err(AnalysisError::ReplayDiverged(i));
        }
        trace.steps.push(TraceStep {
            source_digest: current.digest(),
            now: env.arrival,
            label,
        });
        trace.states.push(next.clone());
        current = next;
    }
    Ok(trace)
}

/// Breadth-first-shortest path to the violation found by `explore`.
pub fn extract_trace<T: TimedModel>(
    model: &T,
    initial: &ModelState<T>,
    result: &ExplorationResult<T::Actor, T::Msg>,
) -> Result<CounterexampleTrace<T::Actor, T::Msg>, AnalysisError> {
    match (result.verdict, result.violation) {
        (Verdict::Violated, Some(v)) => replay_path(model, initial, result, v),
        _ => Err(AnalysisError::NotViolated),
    }
}

/// Plain-text trace: one line per step, then a `key=value` dump of the
/// violating state.
pub fn format_trace<A: Actor, M: Message>(
    trace: &CounterexampleTrace<A, M>,
    names: &ActorNames,
) -> String {
    let mut out = String::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let env = &step.label.executed;
        let choices: Vec<_> = step.label.choices.iter().map(bool::to_string).collect();
        let _ = writeln!(
            out,
            "step {} @{} {}.{}({}) choices=[{}]",
            i + 1,
            step.now,
            names.name(env.receiver),
            env.handler(),
            env.payload_string(),
            choices.join(",")
        );
    }
    let last = trace.violating_state();
    let _ = writeln!(out, "now={}", last.now);
    for (id, actor) in &last.actors {
        let name = names.name(*id);
        for (field, value) in actor.fields() {
            let _ = writeln!(out, "{name}.{field}={value}");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub verdict: Verdict,
    pub elapsed: Duration,
}

pub fn stats<A, M>(result: &ExplorationResult<A, M>) -> Stats {
    Stats {
        states: result.state_count(),
        transitions: result.transition_count(),
        verdict: result.verdict,
        elapsed: result.elapsed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Xml,
}

/// Run metadata carried into exported documents.
#[derive(Debug, Clone)]
pub struct ExportMeta<'a> {
    pub variant: Variant,
    /// Preset number, or a free-form scenario label.
    pub case: String,
    pub names: &'a ActorNames,
}

fn dcn_mode(state: &NrpState, id: crate::kernel::ActorId) -> &'static str {
    state
        .actors
        .get(&id)
        .and_then(NrpActor::as_node)
        .map_or("-", |n| n.mode.name())
}

fn edge_label(label: &TransitionLabel<NrpMessage>, names: &ActorNames) -> String {
    let mut s = format!(
        "{}.{}",
        names.name(label.executed.receiver),
        label.executed.handler()
    );
    if !label.choices.is_empty() {
        let c: Vec<_> = label
            .choices
            .iter()
            .map(|&b| if b { "T" } else { "F" })
            .collect();
        let _ = write!(s, " [{}]", c.join(""));
    }
    s
}

pub fn export_graph(result: &NrpResult, format: GraphFormat, meta: &ExportMeta<'_>) -> String {
    match format {
        GraphFormat::Dot => export_dot(result, meta),
        GraphFormat::Xml => export_xml(result, meta),
    }
}

fn export_dot(result: &NrpResult, meta: &ExportMeta<'_>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph statespace {{");
    let _ = writeln!(
        out,
        "  label=\"{} case {}: {}\";",
        meta.variant, meta.case, result.verdict
    );
    let _ = writeln!(out, "  node [shape=box];");
    for (i, rec) in result.states.iter().enumerate() {
        let _ = write!(
            out,
            "  S{i} [label=\"S{i}\\n@{}\\nDCN1:{} DCN2:{}\", digest=\"{}\"",
            rec.discovered_at,
            dcn_mode(&rec.state, DCN1),
            dcn_mode(&rec.state, DCN2),
            rec.state.digest()
        );
        if rec.violating {
            out.push_str(", violating=true, color=red, style=filled, fillcolor=\"#ffd0d0\"");
        }
        out.push_str("];\n");
    }
    for e in &result.edges {
        let _ = writeln!(
            out,
            "  S{} -> S{} [label=\"{}\"];",
            e.source,
            e.target,
            edge_label(&e.label, meta.names)
        );
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn export_xml(result: &NrpResult, meta: &ExportMeta<'_>) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<statespace variant=\"{}\" case=\"{}\" verdict=\"{}\" states=\"{}\" transitions=\"{}\">",
        meta.variant,
        xml_escape(&meta.case),
        xml_escape(&result.verdict.to_string()),
        result.state_count(),
        result.transition_count()
    );
    out.push_str("  <states>\n");
    for (i, rec) in result.states.iter().enumerate() {
        let _ = writeln!(
            out,
            "    <state id=\"S{i}\" digest=\"{}\" now=\"{}\" DCN1=\"{}\" DCN2=\"{}\" violating=\"{}\"/>",
            rec.state.digest(),
            rec.discovered_at,
            dcn_mode(&rec.state, DCN1),
            dcn_mode(&rec.state, DCN2),
            rec.violating
        );
    }
    out.push_str("  </states>\n  <transitions>\n");
    for e in &result.edges {
        let choices: Vec<_> = e.label.choices.iter().map(bool::to_string).collect();
        let _ = writeln!(
            out,
            "    <transition source=\"S{}\" target=\"S{}\" receiver=\"{}\" handler=\"{}\" choices=\"{}\"/>",
            e.source,
            e.target,
            xml_escape(&meta.names.name(e.label.executed.receiver)),
            e.label.executed.handler(),
            choices.join(",")
        );
    }
    out.push_str("  </transitions>\n</statespace>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Limits;
    use crate::protocol::{node_fail, NodeState};
    use crate::scenarios::{build_reference_topology, preset_case};

    fn system(case: u32) -> System {
        build_reference_topology(&preset_case(case).unwrap()).unwrap()
    }

    fn with_modes(sys: &System, m1: Mode, m2: Mode) -> NrpState {
        let mut s = sys.initial.clone();
        for (id, m) in [(DCN1, m1), (DCN2, m2)] {
            if let Some(NrpActor::Node(n)) = s.actors.get_mut(&id) {
                set_mode(n, m);
            }
        }
        s
    }

    fn set_mode(n: &mut NodeState, m: Mode) {
        if m == Mode::Failed {
            node_fail(n);
        } else {
            n.mode = m;
        }
    }

    fn run(sys: &System) -> NrpResult {
        check_no_dual_primary(sys, &ExploreOptions::default()).unwrap()
    }

    #[test]
    fn no_dual_primary_truth_table() {
        let sys = system(1);
        let a = Assertion::no_dual_primary();
        let cases = [
            (Mode::Primary, Mode::Primary, false),
            (Mode::Primary, Mode::Backup, true),
            (Mode::Failed, Mode::Primary, true),
            (Mode::Waiting, Mode::Waiting, true),
        ];
        for (m1, m2, expected) in cases {
            let s = with_modes(&sys, m1, m2);
            assert_eq!(evaluate(&a, &s, &sys.names), Ok(expected), "{m1} {m2}");
        }
    }

    #[test]
    fn parses_listing_style_propositions() {
        let spec = parse_property(
            "property { define {
                DCN1Primary = (DCN1.mode ==1);
                DCN2Backup  = (DCN2.mode == BACKUP);
                switchA1Failed = (switchA1.failed);
                switchA1NRP = (DCN1.NRP_switch_id==1 && DCN2.NRP_switch_id==1);
              }
              Assertion { Quiet: !switchA1Failed || DCN1Primary; Other: switchA1NRP; } }",
        )
        .unwrap();
        assert_eq!(spec.propositions.len(), 4);
        assert_eq!(spec.assertions.len(), 2);
        let sys = system(1);
        let s = sys.initial.clone();
        assert_eq!(evaluate(&spec.assertions[0], &s, &sys.names), Ok(true));
        assert_eq!(evaluate(&spec.assertions[1], &s, &sys.names), Ok(false));
    }

    #[test]
    fn evaluation_errors() {
        let sys = system(1);
        let s = &sys.initial;
        let unknown_actor = Assertion::parse("x", "DCN3.mode == 1").unwrap();
        assert_eq!(
            evaluate(&unknown_actor, s, &sys.names),
            Err(AnalysisError::UnknownActor("DCN3".into()))
        );
        let unknown_field = Assertion::parse("x", "DCN1.colour == 1").unwrap();
        assert!(matches!(
            evaluate(&unknown_field, s, &sys.names),
            Err(AnalysisError::UnknownField { .. })
        ));
        let mismatch = Assertion::parse("x", "switchA1.failed < 1").unwrap();
        assert!(matches!(
            evaluate(&mismatch, s, &sys.names),
            Err(AnalysisError::TypeMismatch { .. })
        ));
        assert!(compile_property(&unknown_actor, s, &sys.names).is_err());
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            Assertion::parse("x", "DCN1.mode =="),
            Err(AnalysisError::Syntax { .. })
        ));
        assert!(matches!(
            Assertion::parse("x", "(DCN1.mode == 1"),
            Err(AnalysisError::Syntax { .. })
        ));
        assert_eq!(
            Assertion::parse("x", "Nope && true"),
            Err(AnalysisError::UnknownProposition("Nope".into()))
        );
        assert!(parse_property("property { weird { } }").is_err());
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let a = Assertion::parse("x", "true || false && false").unwrap();
        let sys = system(1);
        assert_eq!(evaluate(&a, &sys.initial, &sys.names), Ok(true));
        let b = Assertion::parse("x", "!true || true").unwrap();
        assert_eq!(evaluate(&b, &sys.initial, &sys.names), Ok(true));
    }

    #[test]
    fn case_one_has_no_trace() {
        let sys = system(1);
        let r = run(&sys);
        assert_eq!(
            extract_trace(&sys.model, &sys.initial, &r).unwrap_err(),
            AnalysisError::NotViolated
        );
    }

    #[test]
    fn case_seven_trace_ends_in_dual_primary() {
        let sys = system(7);
        let r = run(&sys);
        let t = extract_trace(&sys.model, &sys.initial, &r).unwrap();
        let last = t.violating_state();
        assert!(last.now >= LogicalTime(4000));
        assert_eq!(dcn_mode(last, DCN1), "PRIMARY");
        assert_eq!(dcn_mode(last, DCN2), "PRIMARY");
        assert_eq!(last.canonicalize(), *r.states[r.violation.unwrap()].state);
        let text = format_trace(&t, &sys.names);
        assert!(text.starts_with("step 1 @0 DCN1.runMe() choices=[]\n"));
        assert!(text.contains("DCN2.mode=1\n"));
    }

    #[test]
    fn exports_match_stats() {
        let sys = system(7);
        let r = run(&sys);
        let st = stats(&r);
        let meta = ExportMeta {
            variant: Variant::Baseline,
            case: "7".into(),
            names: &sys.names,
        };
        let dot = export_graph(&r, GraphFormat::Dot, &meta);
        assert_eq!(dot.matches("[label=\"S").count(), st.states);
        assert_eq!(dot.matches(" -> ").count(), st.transitions);
        assert_eq!(dot.matches("violating=true").count(), 1);
        assert!(dot.contains("S0 [label=\"S0\\n@0\\nDCN1:WAITING DCN2:WAITING\""));
        let xml = export_graph(&r, GraphFormat::Xml, &meta);
        assert_eq!(xml.matches("<state ").count(), st.states);
        assert_eq!(xml.matches("<transition ").count(), st.transitions);
        assert!(xml.contains("variant=\"baseline\" case=\"7\" verdict=\"violated\""));
    }

    #[test]
    fn single_state_export() {
        let sys = system(1);
        let a = Assertion::no_dual_primary();
        let prop = compile_property(&a, &sys.initial, &sys.names).unwrap();
        let opts = ExploreOptions {
            limits: Limits {
                max_states: 1,
                max_depth: 10,
            },
            ..ExploreOptions::default()
        };
        let r = explore(&sys.model, &sys.initial, &prop, &opts).unwrap();
        let meta = ExportMeta {
            variant: Variant::Baseline,
            case: "1".into(),
            names: &sys.names,
        };
        let dot = export_graph(&r, GraphFormat::Dot, &meta);
        assert_eq!(dot.matches("[label=\"S").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), 0);
    }

    #[test]
    fn xml_escaping() {
        assert_eq!(xml_escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
