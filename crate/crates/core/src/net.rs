//! Net structure and the untimed token game.
//!
//! A [`Net`] holds places, transitions with guard/update attributes and
//! firing intervals, integer variables, and the initial marking. Nets are
//! immutable after construction and freely shareable; all semantics
//! operations are pure functions producing fresh states.

use crate::expr::{eval_expr, EvalContext, EvalError, Expr, UpdateList};
use crate::time::TimeInterval;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Variable domain bound: values must lie in `[-2^31, 2^31)`. Keeps the
/// discrete state space finite and hashable.
pub const VAR_MIN: i64 = -(1 << 31);
pub const VAR_MAX: i64 = (1 << 31) - 1;

/// Prints an id bare when it is a plain identifier (dots allowed as
/// namespace separators), double-quoted otherwise.
pub fn display_id(id: &str) -> String {
    let bare = !id.is_empty()
        && id.chars().next().unwrap().is_ascii_alphabetic()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if bare {
        id.to_string()
    } else {
        format!("\"{}\"", id)
    }
}

/// A transition: arcs, guard, updates, and a static firing interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub id: String,
    pub guard: Expr,
    pub updates: UpdateList,
    pub interval: TimeInterval,
    /// Input arcs as `(place, weight >= 1)`.
    pub inputs: Vec<(String, u32)>,
    /// Output arcs as `(place, weight >= 1)`.
    pub outputs: Vec<(String, u32)>,
}

impl Transition {
    pub fn new(id: impl Into<String>) -> Self {
        Transition {
            id: id.into(),
            guard: Expr::Bool(true),
            updates: UpdateList::new(),
            interval: TimeInterval::immediate(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, place: impl Into<String>, weight: u32) -> Self {
        self.inputs.push((place.into(), weight));
        self
    }

    pub fn output(mut self, place: impl Into<String>, weight: u32) -> Self {
        self.outputs.push((place.into(), weight));
        self
    }

    pub fn guard(mut self, guard: Expr) -> Self {
        self.guard = guard;
        self
    }

    pub fn updates(mut self, updates: UpdateList) -> Self {
        self.updates = updates;
        self
    }

    pub fn interval(mut self, interval: TimeInterval) -> Self {
        self.interval = interval;
        self
    }

    pub fn has_trivial_guard(&self) -> bool {
        self.guard == Expr::Bool(true)
    }
}

/// Places, transitions, variables, and the initial marking.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Net {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    /// Variables with their initial values, in declaration order.
    pub variables: Vec<(String, i64)>,
    pub initial_marking: BTreeMap<String, u32>,
}

impl Net {
    pub fn new() -> Self {
        Net::default()
    }

    pub fn add_place(&mut self, id: impl Into<String>, tokens: u32) {
        let id = id.into();
        if tokens > 0 {
            self.initial_marking.insert(id.clone(), tokens);
        }
        self.places.push(id);
    }

    pub fn add_variable(&mut self, id: impl Into<String>, initial: i64) {
        self.variables.push((id.into(), initial));
    }

    pub fn add_transition(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn has_place(&self, id: &str) -> bool {
        self.places.iter().any(|p| p == id)
    }

    pub fn has_variable(&self, id: &str) -> bool {
        self.variables.iter().any(|(v, _)| v == id)
    }

    /// The initial system state: initial marking plus initial valuation.
    pub fn initial_state(&self) -> SystemState {
        let mut marking = BTreeMap::new();
        for p in &self.places {
            marking.insert(p.clone(), *self.initial_marking.get(p).unwrap_or(&0));
        }
        let valuation = self.variables.iter().cloned().collect();
        SystemState { marking, valuation }
    }
}

/// Discrete state: marking plus variable valuation. Domains match the
/// owning net's places and variables exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub marking: BTreeMap<String, u32>,
    pub valuation: BTreeMap<String, i64>,
}

impl SystemState {
    pub fn tokens(&self, place: &str) -> u32 {
        *self.marking.get(place).unwrap_or(&0)
    }
}

impl EvalContext for SystemState {
    fn marking_count(&self, place: &str) -> Option<i64> {
        self.marking.get(place).map(|&n| n as i64)
    }
    fn variable(&self, var: &str) -> Option<i64> {
        self.valuation.get(var).copied()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TokenGameError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{0}` fired while disabled")]
    NotEnabled(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("variable `{var}` left its domain: {value}")]
    VariableBound { var: String, value: i64 },
}

/// Token-enabledness: every input place holds at least the arc weight.
pub fn token_enabled(t: &Transition, marking: &BTreeMap<String, u32>) -> bool {
    t.inputs
        .iter()
        .all(|(p, w)| marking.get(p).copied().unwrap_or(0) >= *w)
}

/// Checks whether a single transition is enabled in `state`: tokens
/// available on every input arc and the guard evaluating to true.
pub fn transition_enabled(
    t: &Transition,
    state: &SystemState,
) -> Result<bool, TokenGameError> {
    if !token_enabled(t, &state.marking) {
        return Ok(false);
    }
    Ok(eval_expr(&t.guard, state)?.as_bool()?)
}

/// The set of enabled transitions of `net` in `state`.
pub fn enabled(net: &Net, state: &SystemState) -> Result<BTreeSet<String>, TokenGameError> {
    let mut out = BTreeSet::new();
    for t in &net.transitions {
        if transition_enabled(t, state)? {
            out.insert(t.id.clone());
        }
    }
    Ok(out)
}

/// Fires `t`: removes input tokens, deposits output tokens, then applies
/// updates against the pre-firing valuation. The input state is unmodified.
pub fn fire(net: &Net, state: &SystemState, t: &str) -> Result<SystemState, TokenGameError> {
    let trans = net
        .transition(t)
        .ok_or_else(|| TokenGameError::UnknownTransition(t.to_string()))?;
    if !transition_enabled(trans, state)? {
        return Err(TokenGameError::NotEnabled(t.to_string()));
    }
    let mut next = state.clone();
    for (p, w) in &trans.inputs {
        let n = next.marking.get_mut(p).expect("validated place");
        *n -= w;
    }
    for (p, w) in &trans.outputs {
        let n = next.marking.entry(p.clone()).or_insert(0);
        *n += w;
    }
    // all update right-hand sides read the pre-firing valuation
    let mut writes = Vec::with_capacity(trans.updates.0.len());
    for (var, expr) in &trans.updates.0 {
        let value = eval_expr(expr, state)?.as_int()?;
        if !(VAR_MIN..=VAR_MAX).contains(&value) {
            return Err(TokenGameError::VariableBound {
                var: var.clone(),
                value,
            });
        }
        writes.push((var.clone(), value));
    }
    for (var, value) in writes {
        next.valuation.insert(var, value);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn two_place_net() -> Net {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_place("P2", 0);
        net.add_transition(Transition::new("t").input("P1", 1).output("P2", 1));
        net
    }

    #[test]
    fn fire_moves_token() {
        let net = two_place_net();
        let s0 = net.initial_state();
        assert_eq!(enabled(&net, &s0).unwrap().len(), 1);
        let s1 = fire(&net, &s0, "t").unwrap();
        assert_eq!(s1.tokens("P1"), 0);
        assert_eq!(s1.tokens("P2"), 1);
        // input state unmodified
        assert_eq!(s0.tokens("P1"), 1);
    }

    #[test]
    fn guard_blocks_enabling() {
        let mut net = two_place_net();
        net.add_place("Pother", 0);
        net.transitions[0].guard = Expr::marking_eq("Pother", 1);
        let s0 = net.initial_state();
        assert!(enabled(&net, &s0).unwrap().is_empty());
    }

    #[test]
    fn firing_disabled_transition_faults() {
        let net = two_place_net();
        let s0 = net.initial_state();
        let s1 = fire(&net, &s0, "t").unwrap();
        assert_eq!(
            fire(&net, &s1, "t"),
            Err(TokenGameError::NotEnabled("t".into()))
        );
    }

    #[test]
    fn updates_read_pre_firing_valuation() {
        let mut net = two_place_net();
        net.add_variable("x", 3);
        net.add_variable("y", 0);
        net.transitions[0].updates = UpdateList::new()
            .set("x", Expr::add(Expr::var("x"), Expr::Int(1)))
            .set("y", Expr::var("x"));
        let s1 = fire(&net, &net.initial_state(), "t").unwrap();
        assert_eq!(s1.valuation["x"], 4);
        // y sees the pre-firing x
        assert_eq!(s1.valuation["y"], 3);
    }

    #[test]
    fn weighted_arcs() {
        let mut net = Net::new();
        net.add_place("P1", 2);
        net.add_place("P2", 0);
        net.add_transition(Transition::new("t").input("P1", 2).output("P2", 3));
        let s0 = net.initial_state();
        let s1 = fire(&net, &s0, "t").unwrap();
        assert_eq!(s1.tokens("P1"), 0);
        assert_eq!(s1.tokens("P2"), 3);
    }

    #[test]
    fn display_id_quotes_paper_names() {
        assert_eq!(display_id("Pcm_Init"), "Pcm_Init");
        assert_eq!(display_id("plant.Pp_Init"), "plant.Pp_Init");
        assert_eq!(display_id("Pp&p_Init"), "\"Pp&p_Init\"");
    }
}
