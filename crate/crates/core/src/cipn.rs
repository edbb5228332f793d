//! Controller models: interpreted nets whose places carry actuation,
//! messaging, and delay actions and whose transitions carry sensor/signal
//! conditions. Arc weights are fixed to 1 and exactly one place holds the
//! single initial token.

use crate::time::Rat;
use crate::validate::{Diagnostic, Severity};
use std::collections::{BTreeMap, BTreeSet};

/// An action attached to a place, executed when the token enters it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// `actuator = value`; realized through plant-side marking guards.
    ActuatorSet { name: String, value: i64 },
    /// `Send([dests,] signal, value)`; `dests: None` broadcasts.
    Send {
        dests: Option<Vec<String>>,
        signal: String,
        value: i64,
    },
    /// Requested execution delay.
    Delay { duration: Rat },
}

/// A transition condition over sensors and received signals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    /// Unconditional (`true`); also the start condition form.
    True,
    /// `name == value` where `name` resolves to a sensor or a signal at
    /// transform time.
    NameEquals { name: String, value: i64 },
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn name_eq(name: impl Into<String>, value: i64) -> Cond {
        Cond::NameEquals {
            name: name.into(),
            value,
        }
    }

    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    /// Collects referenced names.
    pub fn names(&self, out: &mut BTreeSet<String>) {
        match self {
            Cond::True => {}
            Cond::NameEquals { name, .. } => {
                out.insert(name.clone());
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.names(out);
                b.names(out);
            }
            Cond::Not(a) => a.names(out),
        }
    }

    /// Top-level conjunct atoms `(name, value)`, descending `And` only.
    pub fn conjunct_atoms(&self) -> Vec<(String, i64)> {
        let mut out = Vec::new();
        fn walk(c: &Cond, out: &mut Vec<(String, i64)>) {
            match c {
                Cond::NameEquals { name, value } => out.push((name.clone(), *value)),
                Cond::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipnPlace {
    pub id: String,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipnTransition {
    pub id: String,
    pub condition: Cond,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A controller model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CipnModel {
    pub places: Vec<CipnPlace>,
    pub transitions: Vec<CipnTransition>,
    /// Places initially holding one token; well-formed models have
    /// exactly one entry.
    pub initial: Vec<String>,
}

impl CipnModel {
    pub fn place(&self, id: &str) -> Option<&CipnPlace> {
        self.places.iter().find(|p| p.id == id)
    }

    pub fn initial_place(&self) -> Option<&str> {
        match self.initial.as_slice() {
            [single] => Some(single),
            _ => None,
        }
    }

    /// All signals this controller sends, with the values used.
    pub fn sent_signals(&self) -> BTreeMap<String, BTreeSet<i64>> {
        let mut out: BTreeMap<String, BTreeSet<i64>> = BTreeMap::new();
        for p in &self.places {
            for a in &p.actions {
                if let Action::Send { signal, value, .. } = a {
                    out.entry(signal.clone()).or_default().insert(*value);
                }
            }
        }
        out
    }

    /// All names conditioned on by any transition.
    pub fn conditioned_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.transitions {
            t.condition.names(&mut out);
        }
        out
    }

    /// Outgoing transitions of a place.
    pub fn outgoing(&self, place: &str) -> Vec<&CipnTransition> {
        self.transitions
            .iter()
            .filter(|t| t.inputs.iter().any(|p| p == place))
            .collect()
    }
}

/// Two conditions are syntactically mutually exclusive when some name is
/// required (as a top-level conjunct) to equal different values in each.
/// This is a lint, not a proof: exact disjointness is undecidable at this
/// level, so non-exclusive pairs only warn.
pub fn syntactically_exclusive(a: &Cond, b: &Cond) -> bool {
    let aa = a.conjunct_atoms();
    let bb = b.conjunct_atoms();
    for (n1, v1) in &aa {
        for (n2, v2) in &bb {
            if n1 == n2 && v1 != v2 {
                return true;
            }
        }
    }
    false
}

/// Structural well-formedness plus the determinism lint.
pub fn check_cipn_wellformed(m: &CipnModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut place_ids = BTreeSet::new();
    for p in &m.places {
        if !place_ids.insert(p.id.clone()) {
            diags.push(Diagnostic::error(
                format!("place {}", p.id),
                "duplicate place id",
            ));
        }
        for a in &p.actions {
            if let Action::Delay { duration } = a {
                if *duration <= Rat::from_integer(0) {
                    diags.push(Diagnostic::error(
                        format!("place {}", p.id),
                        "delay duration must be positive",
                    ));
                }
            }
        }
    }

    match m.initial.len() {
        0 => diags.push(Diagnostic::error(
            "model",
            "no initial place; exactly one place must hold the initial token",
        )),
        1 => {
            if !place_ids.contains(&m.initial[0]) {
                diags.push(Diagnostic::error(
                    "model",
                    format!("initial place {} is not declared", m.initial[0]),
                ));
            }
        }
        _ => diags.push(Diagnostic::error(
            "model",
            format!(
                "initial marking must place exactly one token; found {}",
                m.initial.len()
            ),
        )),
    }

    let mut tids = BTreeSet::new();
    for t in &m.transitions {
        let loc = format!("trans {}", t.id);
        if !tids.insert(t.id.clone()) {
            diags.push(Diagnostic::error(loc.clone(), "duplicate transition id"));
        }
        if t.inputs.is_empty() && t.outputs.is_empty() {
            diags.push(Diagnostic::error(loc.clone(), "isolated transition"));
        }
        for p in t.inputs.iter().chain(t.outputs.iter()) {
            if !place_ids.contains(p) {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("unresolved place {}", p),
                ));
            }
        }
        // repeated arc endpoints would amount to weights above 1
        let mut seen_in = BTreeSet::new();
        for p in &t.inputs {
            if !seen_in.insert(p) {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("duplicate input arc from {}; arc weights are fixed to 1", p),
                ));
            }
        }
        let mut seen_out = BTreeSet::new();
        for p in &t.outputs {
            if !seen_out.insert(p) {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("duplicate output arc to {}; arc weights are fixed to 1", p),
                ));
            }
        }
    }

    // determinism lint: choices must be separated by their conditions
    for p in &m.places {
        let outs = m.outgoing(&p.id);
        for i in 0..outs.len() {
            for j in (i + 1)..outs.len() {
                if !syntactically_exclusive(&outs[i].condition, &outs[j].condition) {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        location: format!("place {}", p.id),
                        message: format!(
                            "transitions {} and {} are not syntactically mutually \
                             exclusive; controller may be nondeterministic",
                            outs[i].id, outs[j].id
                        ),
                    });
                }
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::has_errors;

    /// The two-branch pick controller shape: distinct signal values make
    /// the choice deterministic.
    fn pick_controller() -> CipnModel {
        CipnModel {
            places: vec![
                CipnPlace {
                    id: "Pctrl_Init".into(),
                    actions: vec![Action::ActuatorSet {
                        name: "PP_Act".into(),
                        value: 0,
                    }],
                },
                CipnPlace {
                    id: "Pctrl_A".into(),
                    actions: vec![],
                },
                CipnPlace {
                    id: "Pctrl_B".into(),
                    actions: vec![],
                },
            ],
            transitions: vec![
                CipnTransition {
                    id: "Tctrl_wfPick1".into(),
                    condition: Cond::name_eq("Pick", 1),
                    inputs: vec!["Pctrl_Init".into()],
                    outputs: vec!["Pctrl_A".into()],
                },
                CipnTransition {
                    id: "Tctrl_wfPick2".into(),
                    condition: Cond::name_eq("Pick", 2),
                    inputs: vec!["Pctrl_Init".into()],
                    outputs: vec!["Pctrl_B".into()],
                },
            ],
            initial: vec!["Pctrl_Init".into()],
        }
    }

    #[test]
    fn deterministic_choice_passes_clean() {
        let diags = check_cipn_wellformed(&pick_controller());
        assert!(diags.is_empty(), "{:?}", diags);
    }

    #[test]
    fn two_initial_tokens_rejected() {
        let mut m = pick_controller();
        m.initial.push("Pctrl_A".into());
        assert!(has_errors(&check_cipn_wellformed(&m)));
    }

    #[test]
    fn identical_conditions_warn() {
        let mut m = pick_controller();
        m.transitions[1].condition = Cond::name_eq("Pick", 1);
        let diags = check_cipn_wellformed(&m);
        assert!(!has_errors(&diags));
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Warning
                && d.message.contains("not syntactically mutually exclusive")));
    }

    #[test]
    fn duplicate_arc_is_a_weight_violation() {
        let mut m = pick_controller();
        m.transitions[0].inputs.push("Pctrl_Init".into());
        let diags = check_cipn_wellformed(&m);
        assert!(diags.iter().any(|d| d.message.contains("fixed to 1")));
    }
}
