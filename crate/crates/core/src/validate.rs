//! Structural validation of nets. Problems are reported as diagnostics,
//! never thrown: an empty report means the net is well-formed.

use crate::expr::{Expr, ExprType};
use crate::net::{Net, VAR_MAX, VAR_MIN};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A validation or lint finding, located by net element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Element path such as `trans Tp_wfPick1` or `place P1`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn warning(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}: {}", sev, self.location, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Validates net structure: unique ids, resolvable arc endpoints and
/// expression references, well-typed guards and updates, legal intervals.
/// Returns an empty list iff the net is well-formed.
pub fn validate_net(net: &Net) -> Vec<Diagnostic> {
    validate(net, false)
}

/// Component-level validation: like [`validate_net`], but qualified place
/// references (`ns.place`) in guards are assumed to point into sibling
/// nets and are left for post-composition validation to resolve.
pub fn validate_component(net: &Net) -> Vec<Diagnostic> {
    validate(net, true)
}

fn validate(net: &Net, allow_external_places: bool) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut places = BTreeSet::new();
    let mut vars = BTreeSet::new();

    for p in &net.places {
        if !places.insert(p.clone()) {
            diags.push(Diagnostic::error(
                format!("place {}", p),
                "duplicate place id",
            ));
        }
        if p.is_empty() {
            diags.push(Diagnostic::error("place", "empty place id"));
        }
    }
    for (v, init) in &net.variables {
        if !vars.insert(v.clone()) {
            diags.push(Diagnostic::error(format!("var {}", v), "duplicate variable id"));
        }
        if places.contains(v) {
            diags.push(Diagnostic::error(
                format!("var {}", v),
                "variable id collides with a place id",
            ));
        }
        if !(VAR_MIN..=VAR_MAX).contains(init) {
            diags.push(Diagnostic::error(
                format!("var {}", v),
                format!("initial value {} outside the variable domain", init),
            ));
        }
    }
    for (p, _) in &net.initial_marking {
        if !places.contains(p) {
            diags.push(Diagnostic::error(
                format!("marking {}", p),
                "initial marking names an undeclared place",
            ));
        }
    }

    let mut tids = BTreeSet::new();
    for t in &net.transitions {
        let loc = format!("trans {}", t.id);
        if !tids.insert(t.id.clone()) {
            diags.push(Diagnostic::error(loc.clone(), "duplicate transition id"));
        }
        if places.contains(&t.id) {
            diags.push(Diagnostic::error(
                loc.clone(),
                "transition id collides with a place id",
            ));
        }
        if t.inputs.is_empty() && t.outputs.is_empty() {
            diags.push(Diagnostic::error(loc.clone(), "isolated transition"));
        }
        for (p, w) in t.inputs.iter().chain(t.outputs.iter()) {
            if !places.contains(p) {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("unresolved place {}", p),
                ));
            }
            if *w == 0 {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("arc to {} has weight 0", p),
                ));
            }
        }
        if let Err(msg) = t.interval.check() {
            diags.push(Diagnostic::error(loc.clone(), msg));
        }
        check_expr(
            &t.guard,
            ExprType::Bool,
            &places,
            &vars,
            allow_external_places,
            &loc,
            &mut diags,
        );
        if let Err(msg) = t.updates.check_unique() {
            diags.push(Diagnostic::error(loc.clone(), msg));
        }
        for (var, expr) in &t.updates.0 {
            if !vars.contains(var) {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!("update assigns undeclared variable {}", var),
                ));
            }
            let mut refs = BTreeSet::new();
            expr.places(&mut refs);
            if !refs.is_empty() {
                diags.push(Diagnostic::error(
                    loc.clone(),
                    format!(
                        "update of {} reads markings ({}); updates may only read variables",
                        var,
                        refs.iter().cloned().collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            check_expr(expr, ExprType::Int, &places, &vars, false, &loc, &mut diags);
        }
    }
    diags
}

fn check_expr(
    expr: &Expr,
    want: ExprType,
    places: &BTreeSet<String>,
    vars: &BTreeSet<String>,
    allow_external_places: bool,
    loc: &str,
    diags: &mut Vec<Diagnostic>,
) {
    match expr.typecheck() {
        Ok(ty) if ty == want => {}
        Ok(ty) => diags.push(Diagnostic::error(
            loc,
            format!("expression `{}` has type {}, expected {}", expr, ty, want),
        )),
        Err(e) => diags.push(Diagnostic::error(loc, e.to_string())),
    }
    let mut prefs = BTreeSet::new();
    expr.places(&mut prefs);
    for p in prefs {
        if !places.contains(&p) && !(allow_external_places && p.contains('.')) {
            diags.push(Diagnostic::error(loc, format!("unresolved place {}", p)));
        }
    }
    let mut vrefs = BTreeSet::new();
    expr.variables(&mut vrefs);
    for v in vrefs {
        if !vars.contains(&v) {
            diags.push(Diagnostic::error(loc, format!("unresolved variable {}", v)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Transition;

    #[test]
    fn minimal_net_is_valid() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        assert!(validate_net(&net).is_empty());
    }

    #[test]
    fn unresolved_place_reported() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_transition(Transition::new("t").input("P1", 1).output("Px", 1));
        let diags = validate_net(&net);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unresolved place Px"));
    }

    #[test]
    fn isolated_transition_rejected() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_transition(Transition::new("t"));
        assert!(has_errors(&validate_net(&net)));
    }

    #[test]
    fn marking_read_in_update_rejected() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_variable("x", 0);
        net.add_transition(
            Transition::new("t")
                .input("P1", 1)
                .output("P1", 1)
                .updates(crate::expr::UpdateList::new().set("x", Expr::marking("P1"))),
        );
        let diags = validate_net(&net);
        assert!(diags.iter().any(|d| d.message.contains("reads markings")));
    }

    #[test]
    fn guard_type_mismatch_reported() {
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_transition(
            Transition::new("t")
                .input("P1", 1)
                .output("P1", 1)
                .guard(Expr::Int(1)),
        );
        let diags = validate_net(&net);
        assert!(diags.iter().any(|d| d.message.contains("expected bool")));
    }
}
