//! Index-compiled nets and dense discrete states for the exploration
//! engine. Compilation resolves every name once; the hot path then works
//! on integer indices only.
//!
//! Transitions are compiled in lexicographic id order, which fixes the
//! exploration order and makes graph construction deterministic.

use crate::expr::{CmpOp, Expr};
use crate::net::{Net, Transition, VAR_MAX, VAR_MIN};
use crate::time::TimeInterval;
use crate::validate::{has_errors, validate_net, Diagnostic};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum CompileError {
    #[error("net failed validation:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("unresolved reference `{0}` in property or binding expression")]
    Unresolved(String),
}

/// Expression with all references resolved to indices.
#[derive(Debug, Clone)]
pub enum CExpr {
    Int(i64),
    Bool(bool),
    Var(usize),
    Marking(usize),
    Add(Box<CExpr>, Box<CExpr>),
    Cmp(CmpOp, Box<CExpr>, Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Not(Box<CExpr>),
}

/// Dense discrete state: token counts and variable values by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DState {
    pub marking: Box<[u32]>,
    pub valuation: Box<[i64]>,
}

#[derive(Debug, Clone)]
pub struct CTransition {
    pub id: String,
    pub guard: CExpr,
    pub updates: Vec<(usize, CExpr)>,
    pub interval: TimeInterval,
    pub inputs: Vec<(usize, u32)>,
    pub outputs: Vec<(usize, u32)>,
}

/// A validated net compiled to index form.
#[derive(Debug, Clone)]
pub struct CompiledNet {
    pub place_names: Vec<String>,
    pub var_names: Vec<String>,
    pub transitions: Vec<CTransition>,
    place_idx: BTreeMap<String, usize>,
    var_idx: BTreeMap<String, usize>,
    initial: DState,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("transition index {0} fired while disabled")]
    NotEnabled(usize),
    #[error("variable `{var}` left its domain: {value}")]
    VariableBound { var: String, value: i64 },
}

impl CompiledNet {
    /// Validates and compiles a net. Transitions are reordered
    /// lexicographically by id.
    pub fn compile(net: &Net) -> Result<CompiledNet, CompileError> {
        let diags = validate_net(net);
        if has_errors(&diags) {
            return Err(CompileError::Invalid(diags));
        }
        let place_names = net.places.clone();
        let place_idx: BTreeMap<String, usize> = place_names
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let var_names: Vec<String> = net.variables.iter().map(|(v, _)| v.clone()).collect();
        let var_idx: BTreeMap<String, usize> = var_names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();

        let mut ordered: Vec<&Transition> = net.transitions.iter().collect();
        ordered.sort_by(|a, b| a.id.cmp(&b.id));

        let mut transitions = Vec::with_capacity(ordered.len());
        for t in ordered {
            let guard = compile_expr(&t.guard, &place_idx, &var_idx)?;
            let mut updates = Vec::with_capacity(t.updates.0.len());
            for (var, expr) in &t.updates.0 {
                let vi = *var_idx
                    .get(var)
                    .ok_or_else(|| CompileError::Unresolved(var.clone()))?;
                updates.push((vi, compile_expr(expr, &place_idx, &var_idx)?));
            }
            transitions.push(CTransition {
                id: t.id.clone(),
                guard,
                updates,
                interval: t.interval.clone(),
                inputs: t.inputs.iter().map(|(p, w)| (place_idx[p], *w)).collect(),
                outputs: t.outputs.iter().map(|(p, w)| (place_idx[p], *w)).collect(),
            });
        }

        let mut marking = vec![0u32; place_names.len()];
        for (p, n) in &net.initial_marking {
            marking[place_idx[p]] = *n;
        }
        let valuation: Vec<i64> = net.variables.iter().map(|(_, v)| *v).collect();
        Ok(CompiledNet {
            place_names,
            var_names,
            transitions,
            place_idx,
            var_idx,
            initial: DState {
                marking: marking.into_boxed_slice(),
                valuation: valuation.into_boxed_slice(),
            },
        })
    }

    pub fn initial(&self) -> DState {
        self.initial.clone()
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.place_idx.get(name).copied()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_idx.get(name).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
    }

    /// Compiles a free-standing expression (property condition, binding)
    /// against this net's name space.
    pub fn compile_expr(&self, expr: &Expr) -> Result<CExpr, CompileError> {
        compile_expr(expr, &self.place_idx, &self.var_idx)
    }

    /// Converts a dense state back to the name-keyed form.
    pub fn to_system_state(&self, s: &DState) -> crate::net::SystemState {
        crate::net::SystemState {
            marking: self
                .place_names
                .iter()
                .cloned()
                .zip(s.marking.iter().copied())
                .collect(),
            valuation: self
                .var_names
                .iter()
                .cloned()
                .zip(s.valuation.iter().copied())
                .collect(),
        }
    }

    pub fn token_enabled(&self, t: usize, marking: &[u32]) -> bool {
        self.transitions[t]
            .inputs
            .iter()
            .all(|&(p, w)| marking[p] >= w)
    }

    pub fn guard_true(&self, t: usize, marking: &[u32], valuation: &[i64]) -> bool {
        eval_bool(&self.transitions[t].guard, marking, valuation)
    }

    pub fn is_enabled(&self, t: usize, s: &DState) -> bool {
        self.token_enabled(t, &s.marking) && self.guard_true(t, &s.marking, &s.valuation)
    }

    /// Indices of all enabled transitions, ascending (= lexicographic ids).
    pub fn enabled_set(&self, s: &DState) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(t, s))
            .collect()
    }

    /// Fires `t` on a dense state. Caller guarantees enabledness.
    pub fn fire(&self, s: &DState, t: usize) -> Result<DState, StepError> {
        if !self.is_enabled(t, s) {
            return Err(StepError::NotEnabled(t));
        }
        let tr = &self.transitions[t];
        let mut next = s.clone();
        for &(p, w) in &tr.inputs {
            next.marking[p] -= w;
        }
        for &(p, w) in &tr.outputs {
            next.marking[p] += w;
        }
        for &(v, ref expr) in &tr.updates {
            let value = eval_int(expr, &s.marking, &s.valuation);
            if !(VAR_MIN..=VAR_MAX).contains(&value) {
                return Err(StepError::VariableBound {
                    var: self.var_names[v].clone(),
                    value,
                });
            }
            next.valuation[v] = value;
        }
        Ok(next)
    }

    /// Partitions the post-firing enabled set into persistent and newly
    /// enabled transitions.
    ///
    /// A transition is persistent across the firing of `t` iff it is not
    /// `t` itself, was enabled before, is enabled after, and stayed both
    /// token-enabled and guard-enabled at the intermediate marking (input
    /// tokens of `t` removed, pre-firing valuation). Everything else in the
    /// post-firing enabled set is newly enabled and its clock resets.
    pub fn split_enabled_after(
        &self,
        pre: &DState,
        t: usize,
        post: &DState,
    ) -> EnabledSplit {
        let mut mid = pre.marking.clone();
        for &(p, w) in &self.transitions[t].inputs {
            mid[p] -= w;
        }
        let mut persistent = Vec::new();
        let mut fresh = Vec::new();
        for u in 0..self.transitions.len() {
            if !self.is_enabled(u, post) {
                continue;
            }
            let keeps = u != t
                && self.is_enabled(u, pre)
                && self.token_enabled(u, &mid)
                && self.guard_true(u, &mid, &pre.valuation);
            if keeps {
                persistent.push(u);
            } else {
                fresh.push(u);
            }
        }
        EnabledSplit { persistent, fresh }
    }
}

/// Result of [`CompiledNet::split_enabled_after`]; both lists ascending.
pub struct EnabledSplit {
    pub persistent: Vec<usize>,
    pub fresh: Vec<usize>,
}

fn compile_expr(
    expr: &Expr,
    places: &BTreeMap<String, usize>,
    vars: &BTreeMap<String, usize>,
) -> Result<CExpr, CompileError> {
    Ok(match expr {
        Expr::Int(n) => CExpr::Int(*n),
        Expr::Bool(b) => CExpr::Bool(*b),
        Expr::Var(v) => CExpr::Var(
            *vars
                .get(v)
                .ok_or_else(|| CompileError::Unresolved(v.clone()))?,
        ),
        Expr::Marking(p) => CExpr::Marking(
            *places
                .get(p)
                .ok_or_else(|| CompileError::Unresolved(p.clone()))?,
        ),
        Expr::Add(a, b) => CExpr::Add(
            Box::new(compile_expr(a, places, vars)?),
            Box::new(compile_expr(b, places, vars)?),
        ),
        Expr::Cmp(op, a, b) => CExpr::Cmp(
            *op,
            Box::new(compile_expr(a, places, vars)?),
            Box::new(compile_expr(b, places, vars)?),
        ),
        Expr::And(a, b) => CExpr::And(
            Box::new(compile_expr(a, places, vars)?),
            Box::new(compile_expr(b, places, vars)?),
        ),
        Expr::Or(a, b) => CExpr::Or(
            Box::new(compile_expr(a, places, vars)?),
            Box::new(compile_expr(b, places, vars)?),
        ),
        Expr::Not(a) => CExpr::Not(Box::new(compile_expr(a, places, vars)?)),
    })
}

/// Integer evaluation on dense state. Typing was established at compile
/// time, and the variable domain bound keeps sums far from i64 overflow.
pub fn eval_int(e: &CExpr, marking: &[u32], valuation: &[i64]) -> i64 {
    match e {
        CExpr::Int(n) => *n,
        CExpr::Var(v) => valuation[*v],
        CExpr::Marking(p) => marking[*p] as i64,
        CExpr::Add(a, b) => eval_int(a, marking, valuation) + eval_int(b, marking, valuation),
        _ => unreachable!("type-checked expression"),
    }
}

pub fn eval_bool(e: &CExpr, marking: &[u32], valuation: &[i64]) -> bool {
    match e {
        CExpr::Bool(b) => *b,
        CExpr::Cmp(op, a, b) => op.apply(
            eval_int(a, marking, valuation),
            eval_int(b, marking, valuation),
        ),
        CExpr::And(a, b) => {
            eval_bool(a, marking, valuation) && eval_bool(b, marking, valuation)
        }
        CExpr::Or(a, b) => eval_bool(a, marking, valuation) || eval_bool(b, marking, valuation),
        CExpr::Not(a) => !eval_bool(a, marking, valuation),
        _ => unreachable!("type-checked expression"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UpdateList;
    use crate::net::Transition;

    #[test]
    fn compile_orders_transitions_lexicographically() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_transition(Transition::new("t_b").input("P", 1).output("P", 1));
        net.add_transition(Transition::new("t_a").input("P", 1).output("P", 1));
        let c = CompiledNet::compile(&net).unwrap();
        assert_eq!(c.transitions[0].id, "t_a");
        assert_eq!(c.transitions[1].id, "t_b");
        assert_eq!(c.transition_index("t_b"), Some(1));
    }

    #[test]
    fn dense_fire_matches_name_level_fire() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_place("P2", 0);
        net.add_variable("x", 0);
        net.add_transition(
            Transition::new("t")
                .input("P1", 1)
                .output("P2", 1)
                .updates(UpdateList::new().set("x", Expr::add(Expr::var("x"), Expr::Int(1)))),
        );
        let c = CompiledNet::compile(&net).unwrap();
        let s0 = c.initial();
        let t = c.transition_index("t").unwrap();
        let s1 = c.fire(&s0, t).unwrap();
        let named = crate::net::fire(&net, &net.initial_state(), "t").unwrap();
        assert_eq!(c.to_system_state(&s1), named);
    }

    #[test]
    fn token_dip_counts_as_newly_enabled() {
        // u's guard watches P, which t consumes and reproduces: u must be
        // newly enabled after t fires even though u is enabled before and
        // after.
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_place("R", 0);
        net.add_transition(Transition::new("t").input("P", 1).output("P", 1));
        net.add_transition(
            Transition::new("u")
                .input("Q", 1)
                .output("R", 1)
                .guard(Expr::marking_eq("P", 1)),
        );
        let c = CompiledNet::compile(&net).unwrap();
        let s0 = c.initial();
        let t = c.transition_index("t").unwrap();
        let u = c.transition_index("u").unwrap();
        let post = c.fire(&s0, t).unwrap();
        let split = c.split_enabled_after(&s0, t, &post);
        assert!(split.fresh.contains(&u));
        assert!(split.persistent.is_empty());
    }

    #[test]
    fn independent_transition_is_persistent() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_transition(Transition::new("t").input("P", 1).output("P", 1));
        net.add_transition(Transition::new("u").input("Q", 1).output("Q", 1));
        let c = CompiledNet::compile(&net).unwrap();
        let s0 = c.initial();
        let t = c.transition_index("t").unwrap();
        let u = c.transition_index("u").unwrap();
        let post = c.fire(&s0, t).unwrap();
        let split = c.split_enabled_after(&s0, t, &post);
        assert_eq!(split.persistent, vec![u]);
        // the fired transition re-enables freshly
        assert_eq!(split.fresh, vec![t]);
    }
}
