//! Property checking over the state-class graph: AG safety, leads-to,
//! k-boundedness, and deadlock freedom, each with replayable witness
//! traces on violation.
//!
//! Truncated explorations never report `Holds`; they yield `Inconclusive`
//! unless a genuine violation was found inside the explored region (every
//! node and edge of a truncated graph is real, so violations found there
//! stand). Leads-to counterexample search treats every infinite path as
//! fair: the unfair path is exactly the attacked execution we are after.

use crate::compile::{eval_bool, CExpr, CompileError, CompiledNet};
use crate::expr::{Expr, ExprType};
use crate::scg::{explore, explore_with, ClassGraph, ExploreLimits, SemanticsError};
use crate::trace::{trace_for_path, Trace, TraceError};
use std::time::{Duration, Instant};
use thiserror::Error;

/// A property to check, with a human-readable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyKind {
    /// `AG cond`: the condition holds in every reachable class.
    AgSafety(Expr),
    /// `p --> q`, i.e. `AG(p => AF q)`.
    LeadsTo(Expr, Expr),
    /// Every place in scope (all places when `None`) holds at most `k`
    /// tokens in every reachable class.
    Bounded { k: u32, scope: Option<Vec<String>> },
    /// Every reachable class has at least one fireable transition.
    DeadlockFree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Holds,
    Violated(Box<Trace>),
    Inconclusive(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Holds => "HOLDS",
            Status::Violated(_) => "VIOLATED",
            Status::Inconclusive(_) => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyStats {
    pub classes: usize,
    pub wall: Duration,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: Status,
    pub stats: VerifyStats,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("ill-formed property: {0}")]
    BadProperty(String),
}

fn compile_bool(net: &CompiledNet, expr: &Expr) -> Result<CExpr, VerifyError> {
    match expr.typecheck() {
        Ok(ExprType::Bool) => {}
        Ok(ty) => {
            return Err(VerifyError::BadProperty(format!(
                "condition `{}` has type {}, expected bool",
                expr, ty
            )))
        }
        Err(e) => return Err(VerifyError::BadProperty(e.to_string())),
    }
    Ok(net.compile_expr(expr)?)
}

fn sat(net: &CompiledNet, cond: &CExpr, graph: &ClassGraph, idx: usize) -> bool {
    let s = &graph.classes[idx].state;
    let _ = net;
    eval_bool(cond, &s.marking, &s.valuation)
}

const TRUNCATED: &str = "exploration truncated by limits";

/// Checks `AG cond` on the fly: exploration stops at the first violating
/// class and returns the shortest-found witness.
pub fn check_ag(
    net: &CompiledNet,
    cond: &Expr,
    limits: &ExploreLimits,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let ccond = compile_bool(net, cond)?;
    let (graph, found) = explore_with(net, limits, |class| {
        !eval_bool(&ccond, &class.state.marking, &class.state.valuation)
    })?;
    let status = match found {
        Some(idx) => {
            let path: Vec<usize> = graph.path_to(idx).into_iter().map(|(_, t)| t).collect();
            Status::Violated(Box::new(trace_for_path(net, &path, None)?))
        }
        None if graph.truncated => Status::Inconclusive(TRUNCATED.into()),
        None => Status::Holds,
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            classes: graph.len(),
            wall: start.elapsed(),
            notes: Vec::new(),
        },
    })
}

/// `AG cond` over a prebuilt graph.
pub fn check_ag_on(
    net: &CompiledNet,
    graph: &ClassGraph,
    cond: &Expr,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let ccond = compile_bool(net, cond)?;
    let violating = (0..graph.len()).find(|&i| !sat(net, &ccond, graph, i));
    let status = match violating {
        Some(idx) => {
            let path: Vec<usize> = graph
                .path_to(idx as u32)
                .into_iter()
                .map(|(_, t)| t)
                .collect();
            Status::Violated(Box::new(trace_for_path(net, &path, None)?))
        }
        None if graph.truncated => Status::Inconclusive(TRUNCATED.into()),
        None => Status::Holds,
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            classes: graph.len(),
            wall: start.elapsed(),
            notes: Vec::new(),
        },
    })
}

/// Checks `p --> q` (`AG(p => AF q)`), exploring internally.
pub fn check_leads_to(
    net: &CompiledNet,
    p: &Expr,
    q: &Expr,
    limits: &ExploreLimits,
) -> Result<Verdict, VerifyError> {
    let graph = explore(net, limits)?;
    check_leads_to_on(net, &graph, p, q)
}

/// Checks `p --> q` over a prebuilt graph.
///
/// Violated iff some reachable class satisfies `p` and from it some
/// maximal path stays in `!q` forever: a lasso in the finite graph, or a
/// finite path ending in a deadlocked `!q` class. The witness is that
/// stem plus cycle (or the deadlocked path).
pub fn check_leads_to_on(
    net: &CompiledNet,
    graph: &ClassGraph,
    p: &Expr,
    q: &Expr,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let cp = compile_bool(net, p)?;
    let cq = compile_bool(net, q)?;
    let n = graph.len();
    let psat: Vec<bool> = (0..n).map(|i| sat(net, &cp, graph, i)).collect();
    let bad: Vec<bool> = (0..n).map(|i| !sat(net, &cq, graph, i)).collect();

    let mut notes = Vec::new();
    if !psat.iter().any(|&b| b) {
        notes.push("vacuous: no reachable class satisfies p".into());
    }

    // targets inside the bad region: nodes on a bad cycle, or genuinely
    // deadlocked bad nodes (only expanded classes can be called deadlocked)
    let cyclic = bad_cycle_nodes(graph, &bad);
    let mut target: Vec<bool> = cyclic;
    for i in 0..n {
        if bad[i] && graph.expanded[i] && graph.succ[i].is_empty() {
            target[i] = true;
        }
    }

    // backward reachability within the bad region
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, outs) in graph.succ.iter().enumerate() {
        if !bad[i] {
            continue;
        }
        for &(_, j) in outs {
            if bad[j as usize] {
                rev[j as usize].push(i as u32);
            }
        }
    }
    let mut doomed = target.clone();
    let mut stack: Vec<u32> = (0..n as u32).filter(|&i| target[i as usize]).collect();
    while let Some(i) = stack.pop() {
        for &j in &rev[i as usize] {
            if !doomed[j as usize] {
                doomed[j as usize] = true;
                stack.push(j);
            }
        }
    }

    // shortest-stem candidate: p-class that can avoid q forever
    let candidate = (0..n)
        .filter(|&i| psat[i] && doomed[i])
        .min_by_key(|&i| graph.depth[i]);

    let status = match candidate {
        None if graph.truncated => Status::Inconclusive(TRUNCATED.into()),
        None => Status::Holds,
        Some(c) => {
            let witness = lasso_witness(net, graph, &bad, &target, c as u32)?;
            Status::Violated(Box::new(witness))
        }
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            classes: n,
            wall: start.elapsed(),
            notes,
        },
    })
}

/// Nodes lying on a cycle of the bad-induced subgraph (nontrivial SCC
/// membership or a self-loop). Iterative Tarjan.
fn bad_cycle_nodes(graph: &ClassGraph, bad: &[bool]) -> Vec<bool> {
    let n = graph.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0usize;
    let mut result = vec![false; n];

    // explicit DFS: (node, child cursor)
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n {
        if !bad[root] || index[root] != usize::MAX {
            continue;
        }
        call.push((root as u32, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            let vi = v as usize;
            let edges = &graph.succ[vi];
            let mut advanced = false;
            while *cursor < edges.len() {
                let (_, w) = edges[*cursor];
                *cursor += 1;
                let wi = w as usize;
                if !bad[wi] {
                    continue;
                }
                if index[wi] == usize::MAX {
                    index[wi] = next_index;
                    low[wi] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[wi] = true;
                    call.push((w, 0));
                    advanced = true;
                    break;
                } else if on_stack[wi] {
                    low[vi] = low[vi].min(index[wi]);
                }
            }
            if advanced {
                continue;
            }
            call.pop();
            if let Some(&mut (u, _)) = call.last_mut() {
                let ui = u as usize;
                low[ui] = low[ui].min(low[vi]);
            }
            if low[vi] == index[vi] {
                // SCC root: pop the component
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let nontrivial = comp.len() > 1
                    || graph.succ[vi]
                        .iter()
                        .any(|&(_, target)| target == v && bad[vi]);
                if nontrivial {
                    for w in comp {
                        result[w as usize] = true;
                    }
                }
            }
        }
    }
    result
}

/// Builds the violated leads-to witness: shortest stem to `c`, a path
/// within the bad region to the nearest target, then (for cycle targets)
/// the shortest cycle through it.
fn lasso_witness(
    net: &CompiledNet,
    graph: &ClassGraph,
    bad: &[bool],
    target: &[bool],
    c: u32,
) -> Result<Trace, VerifyError> {
    let stem: Vec<usize> = graph.path_to(c).into_iter().map(|(_, t)| t).collect();

    // BFS inside the bad region from c to the nearest target
    let (mid_path, hit) = bfs_path(graph, bad, c, |i| target[i as usize])
        .expect("candidate is backward-reachable from a target");

    let mut path = stem;
    path.extend(&mid_path);
    let lasso;
    if graph.expanded[hit as usize] && graph.succ[hit as usize].is_empty() {
        // deadlocked witness: finite maximal path
        lasso = None;
    } else {
        // shortest bad cycle through `hit`: step to each successor, then
        // BFS back
        let mut best: Option<Vec<usize>> = None;
        for &(t, next) in &graph.succ[hit as usize] {
            if !bad[next as usize] {
                continue;
            }
            if next == hit {
                best = Some(vec![t]);
                break;
            }
            if let Some((back, _)) = bfs_path(graph, bad, next, |i| i == hit) {
                let mut cyc = vec![t];
                cyc.extend(back);
                if best.as_ref().map_or(true, |b| cyc.len() < b.len()) {
                    best = Some(cyc);
                }
            }
        }
        let cyc = best.expect("target lies on a bad cycle");
        lasso = Some(path.len());
        path.extend(cyc);
    }
    Ok(trace_for_path(net, &path, lasso)?)
}

/// BFS restricted to `region`, from `from` to the first node accepted by
/// `goal`. Returns the transition path and the goal node. `from` itself is
/// tested first.
fn bfs_path(
    graph: &ClassGraph,
    region: &[bool],
    from: u32,
    goal: impl Fn(u32) -> bool,
) -> Option<(Vec<usize>, u32)> {
    use std::collections::VecDeque;
    if goal(from) {
        return Some((Vec::new(), from));
    }
    let mut prev: Vec<Option<(u32, usize)>> = vec![None; graph.len()];
    let mut seen = vec![false; graph.len()];
    seen[from as usize] = true;
    let mut queue = VecDeque::new();
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        for &(t, w) in &graph.succ[v as usize] {
            let wi = w as usize;
            if !region[wi] || seen[wi] {
                continue;
            }
            seen[wi] = true;
            prev[wi] = Some((v, t));
            if goal(w) {
                let mut rev = Vec::new();
                let mut cur = w;
                while cur != from {
                    let (p, t) = prev[cur as usize].unwrap();
                    rev.push(t);
                    cur = p;
                }
                rev.reverse();
                return Some((rev, w));
            }
            queue.push_back(w);
        }
    }
    None
}

/// Checks k-boundedness of the scoped places on the fly.
pub fn check_bounded(
    net: &CompiledNet,
    k: u32,
    scope: Option<&[String]>,
    limits: &ExploreLimits,
) -> Result<Verdict, VerifyError> {
    if k == 0 {
        return Err(VerifyError::BadProperty("bound k must be >= 1".into()));
    }
    let start = Instant::now();
    let scope_idx: Vec<usize> = match scope {
        None => (0..net.place_names.len()).collect(),
        Some(names) => {
            let mut v = Vec::with_capacity(names.len());
            for name in names {
                v.push(net.place_index(name).ok_or_else(|| {
                    VerifyError::BadProperty(format!("unknown place `{}` in scope", name))
                })?);
            }
            v
        }
    };
    let (graph, found) = explore_with(net, limits, |class| {
        scope_idx.iter().any(|&p| class.state.marking[p] > k)
    })?;
    let status = match found {
        Some(idx) => {
            let path: Vec<usize> = graph.path_to(idx).into_iter().map(|(_, t)| t).collect();
            Status::Violated(Box::new(trace_for_path(net, &path, None)?))
        }
        None if graph.truncated => Status::Inconclusive(TRUNCATED.into()),
        None => Status::Holds,
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            classes: graph.len(),
            wall: start.elapsed(),
            notes: Vec::new(),
        },
    })
}

/// Checks deadlock freedom on the fly. A class with enabled transitions
/// that merely cycles forever (a livelock) is not a deadlock; only a class
/// with no fireable transition at all violates.
pub fn check_deadlock_free(
    net: &CompiledNet,
    limits: &ExploreLimits,
) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let (graph, found) = explore_with(net, limits, |class| class.fireable().is_empty())?;
    let status = match found {
        Some(idx) => {
            let path: Vec<usize> = graph.path_to(idx).into_iter().map(|(_, t)| t).collect();
            Status::Violated(Box::new(trace_for_path(net, &path, None)?))
        }
        None if graph.truncated => Status::Inconclusive(TRUNCATED.into()),
        None => Status::Holds,
    };
    Ok(Verdict {
        status,
        stats: VerifyStats {
            classes: graph.len(),
            wall: start.elapsed(),
            notes: Vec::new(),
        },
    })
}

/// Dispatches a property to its checker, exploring internally.
pub fn verify_property(
    net: &CompiledNet,
    prop: &Property,
    limits: &ExploreLimits,
) -> Result<Verdict, VerifyError> {
    match &prop.kind {
        PropertyKind::AgSafety(cond) => check_ag(net, cond, limits),
        PropertyKind::LeadsTo(p, q) => check_leads_to(net, p, q, limits),
        PropertyKind::Bounded { k, scope } => {
            check_bounded(net, *k, scope.as_deref(), limits)
        }
        PropertyKind::DeadlockFree => check_deadlock_free(net, limits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{CmpOp, Expr, UpdateList};
    use crate::net::{Net, Transition};
    use crate::time::{rat, TimeInterval};

    fn limits() -> ExploreLimits {
        ExploreLimits::default()
    }

    #[test]
    fn ag_holds_on_safe_net() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(Transition::new("a").input("P", 1).output("Q", 1));
        net.add_transition(Transition::new("b").input("Q", 1).output("P", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let cond = Expr::cmp(CmpOp::Le, Expr::marking("Q"), Expr::Int(1));
        let v = check_ag(&c, &cond, &limits()).unwrap();
        assert_eq!(v.status, Status::Holds);
    }

    #[test]
    fn ag_violation_carries_shortest_witness() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_place("R", 0);
        net.add_transition(Transition::new("a").input("P", 1).output("Q", 1));
        net.add_transition(Transition::new("b").input("Q", 1).output("R", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let cond = Expr::not(Expr::marking_eq("R", 1));
        let v = check_ag(&c, &cond, &limits()).unwrap();
        match v.status {
            Status::Violated(trace) => {
                assert_eq!(trace.steps.len(), 2);
                assert_eq!(trace.steps[1].transition, "b");
            }
            other => panic!("expected violation, got {:?}", other),
        }
    }

    #[test]
    fn self_loop_producer_unbounded() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(Transition::new("gen").input("P", 1).output("P", 1).output("Q", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let v = check_bounded(&c, 1, None, &limits()).unwrap();
        assert!(matches!(v.status, Status::Violated(_)));
    }

    #[test]
    fn dead_place_net_deadlocks() {
        let mut net = Net::new();
        net.add_place("P", 1);
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let v = check_deadlock_free(&c, &limits()).unwrap();
        assert!(matches!(v.status, Status::Violated(_)));
    }

    #[test]
    fn livelock_is_not_deadlock() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_transition(
            Transition::new("spin")
                .input("P", 1)
                .output("P", 1)
                .interval(TimeInterval::closed(rat(1, 1), rat(2, 1))),
        );
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let v = check_deadlock_free(&c, &limits()).unwrap();
        assert_eq!(v.status, Status::Holds);
    }

    #[test]
    fn leads_to_violated_by_lasso() {
        // P can sidestep into a spin loop that never reaches Q
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_place("Spin", 0);
        net.add_transition(Transition::new("good").input("P", 1).output("Q", 1));
        net.add_transition(Transition::new("stray").input("P", 1).output("Spin", 1));
        net.add_transition(Transition::new("spin").input("Spin", 1).output("Spin", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let p = Expr::marking_eq("P", 1);
        let q = Expr::marking_eq("Q", 1);
        let v = check_leads_to(&c, &p, &q, &limits()).unwrap();
        match v.status {
            Status::Violated(trace) => {
                assert!(trace.lasso.is_some());
                let l = trace.lasso.unwrap();
                assert!(trace.steps[l..].iter().any(|s| s.transition == "spin"));
            }
            other => panic!("expected violation, got {:?}", other),
        }
    }

    #[test]
    fn leads_to_violated_by_bad_deadlock() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_place("Stuck", 0);
        net.add_transition(Transition::new("good").input("P", 1).output("Q", 1));
        net.add_transition(Transition::new("stray").input("P", 1).output("Stuck", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let p = Expr::marking_eq("P", 1);
        let q = Expr::marking_eq("Q", 1);
        let v = check_leads_to(&c, &p, &q, &limits()).unwrap();
        match v.status {
            Status::Violated(trace) => {
                assert_eq!(trace.lasso, None);
                assert_eq!(trace.steps.last().unwrap().transition, "stray");
            }
            other => panic!("expected violation, got {:?}", other),
        }
    }

    #[test]
    fn leads_to_holds_when_q_is_forced() {
        // strong semantics: the [1,2] transition must fire, reaching Q
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(
            Transition::new("must")
                .input("P", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(1, 1), rat(2, 1))),
        );
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let p = Expr::marking_eq("P", 1);
        let q = Expr::marking_eq("Q", 1);
        let v = check_leads_to(&c, &p, &q, &limits()).unwrap();
        assert_eq!(v.status, Status::Holds);
    }

    #[test]
    fn leads_to_vacuously_holds_and_reports() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(Transition::new("a").input("P", 1).output("P", 1));
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let p = Expr::marking_eq("Q", 1); // unsatisfiable
        let q = Expr::marking_eq("P", 7);
        let v = check_leads_to(&c, &p, &q, &limits()).unwrap();
        assert_eq!(v.status, Status::Holds);
        assert!(v.stats.notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn truncation_yields_inconclusive() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_variable("n", 0);
        net.add_transition(
            Transition::new("count").input("P", 1).output("P", 1).updates(
                UpdateList::new().set("n", Expr::add(Expr::var("n"), Expr::Int(1))),
            ),
        );
        let c = crate::compile::CompiledNet::compile(&net).unwrap();
        let small = ExploreLimits {
            max_classes: 5,
            max_depth: None,
        };
        let cond = Expr::Bool(true);
        let v = check_ag(&c, &cond, &small).unwrap();
        assert!(matches!(v.status, Status::Inconclusive(_)));
    }
}
