//! Composition of component nets into a system model.
//!
//! Places and transitions are namespaced (`ns.local`) and disjointly
//! unioned. Variables are the communication fabric: variables with the same
//! unqualified name in different parts are merged into one shared variable,
//! so a transceiver net and a controller net exchange flags by simply
//! naming them identically. Guards may reference places across namespaces
//! by their qualified ids; such references pass through composition
//! untouched and are resolved by validation on the composed net.

use crate::net::{Net, Transition};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("duplicate namespace `{0}`")]
    DuplicateNamespace(String),
    #[error("duplicate id `{0}` after namespacing")]
    DuplicateId(String),
    #[error("shared variable `{var}` has conflicting initial values {a} and {b}")]
    InitialValueConflict { var: String, a: i64, b: i64 },
    #[error("namespace `{0}` contains a dot")]
    BadNamespace(String),
}

fn qualify(ns: &str, local: &str) -> String {
    format!("{}.{}", ns, local)
}

/// Composes namespaced parts into a single net.
///
/// Place references inside a part's guards are prefixed with the part's
/// namespace when they resolve to one of its own places; references to
/// foreign (already qualified) places are kept verbatim. Variable names are
/// never namespaced.
pub fn compose(parts: &[(&str, &Net)]) -> Result<Net, ComposeError> {
    let mut seen_ns = BTreeMap::new();
    for (ns, _) in parts {
        if ns.contains('.') {
            return Err(ComposeError::BadNamespace(ns.to_string()));
        }
        if seen_ns.insert(ns.to_string(), ()).is_some() {
            return Err(ComposeError::DuplicateNamespace(ns.to_string()));
        }
    }

    let mut out = Net::new();
    let mut var_init: BTreeMap<String, i64> = BTreeMap::new();
    let mut ids: BTreeMap<String, ()> = BTreeMap::new();

    for (ns, net) in parts {
        let own = |p: &str| net.has_place(p);
        let rewrite = |p: &str| -> String {
            if own(p) {
                qualify(ns, p)
            } else {
                p.to_string()
            }
        };
        for p in &net.places {
            let q = qualify(ns, p);
            if ids.insert(q.clone(), ()).is_some() {
                return Err(ComposeError::DuplicateId(q));
            }
            out.add_place(q, net.initial_marking.get(p).copied().unwrap_or(0));
        }
        for (v, init) in &net.variables {
            match var_init.get(v) {
                None => {
                    var_init.insert(v.clone(), *init);
                    out.add_variable(v.clone(), *init);
                }
                Some(&prev) if prev == *init => {}
                Some(&prev) => {
                    return Err(ComposeError::InitialValueConflict {
                        var: v.clone(),
                        a: prev,
                        b: *init,
                    });
                }
            }
        }
        for t in &net.transitions {
            let q = qualify(ns, &t.id);
            if ids.insert(q.clone(), ()).is_some() {
                return Err(ComposeError::DuplicateId(q));
            }
            let mut nt = Transition::new(q);
            nt.guard = t.guard.map_places(&rewrite);
            nt.updates = t.updates.clone();
            nt.interval = t.interval.clone();
            nt.inputs = t
                .inputs
                .iter()
                .map(|(p, w)| (rewrite(p), *w))
                .collect();
            nt.outputs = t
                .outputs
                .iter()
                .map(|(p, w)| (rewrite(p), *w))
                .collect();
            out.add_transition(nt);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::net::{enabled, fire};
    use crate::validate::validate_net;

    fn producer() -> Net {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_place("P2", 0);
        net.add_variable("flag", 0);
        net.add_transition(
            Transition::new("t")
                .input("P1", 1)
                .output("P2", 1)
                .updates(crate::expr::UpdateList::new().set_int("flag", 1)),
        );
        net
    }

    fn consumer() -> Net {
        let mut net = Net::new();
        net.add_place("Q1", 1);
        net.add_place("Q2", 0);
        net.add_variable("flag", 0);
        net.add_transition(
            Transition::new("u")
                .input("Q1", 1)
                .output("Q2", 1)
                .guard(Expr::var_eq("flag", 1)),
        );
        net
    }

    #[test]
    fn single_part_is_identity_modulo_namespacing() {
        let net = producer();
        let composed = compose(&[("a", &net)]).unwrap();
        assert_eq!(composed.places, vec!["a.P1", "a.P2"]);
        assert_eq!(composed.transitions[0].id, "a.t");
        assert_eq!(composed.variables, vec![("flag".to_string(), 0)]);
        assert!(validate_net(&composed).is_empty());
    }

    #[test]
    fn shared_variable_wires_parts() {
        let composed = compose(&[("a", &producer()), ("b", &consumer())]).unwrap();
        assert!(validate_net(&composed).is_empty());
        let s0 = composed.initial_state();
        // consumer blocked until producer fires and raises the shared flag
        assert_eq!(
            enabled(&composed, &s0).unwrap(),
            ["a.t".to_string()].into_iter().collect()
        );
        let s1 = fire(&composed, &s0, "a.t").unwrap();
        assert!(enabled(&composed, &s1).unwrap().contains("b.u"));
    }

    #[test]
    fn initial_value_conflict_rejected() {
        let a = producer();
        let mut b = consumer();
        b.variables[0].1 = 7;
        assert_eq!(
            compose(&[("a", &a), ("b", &b)]),
            Err(ComposeError::InitialValueConflict {
                var: "flag".into(),
                a: 0,
                b: 7
            })
        );
    }

    #[test]
    fn duplicate_namespace_rejected() {
        let a = producer();
        assert!(matches!(
            compose(&[("a", &a), ("a", &a)]),
            Err(ComposeError::DuplicateNamespace(_))
        ));
    }

    #[test]
    fn cross_namespace_guard_passes_through() {
        let mut watcher = Net::new();
        watcher.add_place("W", 1);
        watcher.add_transition(
            Transition::new("w")
                .input("W", 1)
                .output("W", 1)
                .guard(Expr::marking_eq("a.P2", 1)),
        );
        let composed = compose(&[("a", &producer()), ("m", &watcher)]).unwrap();
        assert!(validate_net(&composed).is_empty());
        let t = composed.transition("m.w").unwrap();
        assert_eq!(t.guard, Expr::marking_eq("a.P2", 1));
    }
}
