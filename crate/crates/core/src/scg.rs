//! State-class-graph construction: the timed semantics of a compiled net.
//!
//! A state class pairs a discrete state with a canonical difference-bound
//! zone over the remaining firing times of the enabled transitions.
//! Successor computation follows the classical construction: intersect
//! with "the fired transition goes first", shift survivors to the firing
//! instant, reset newly enabled transitions to their static intervals, and
//! re-canonicalize. Enabling memory is intermediate single-server: clocks
//! reset on newly enabled transitions, where a guard or token dip across
//! the firing counts as newly enabling.

use crate::compile::{CompiledNet, DState, StepError};
use crate::time::{TimeBound, TimeInterval};
use crate::zone::{Bound, Dbm};
use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

/// Default cap on explored classes; exceeding it is a reportable
/// inconclusive outcome, never a silent pass.
pub const DEFAULT_MAX_CLASSES: usize = 2_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("transition {0} not fireable in this class")]
    NotFireable(usize),
    #[error("zone became empty after a fireable transition; internal invariant broken")]
    EmptyZone,
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Discrete state plus canonical firing-time zone. Zone variable `i + 1`
/// is the remaining firing time of `enabled[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateClass {
    pub state: DState,
    /// Enabled transition indices, ascending.
    pub enabled: Vec<usize>,
    pub zone: Dbm,
}

impl StateClass {
    /// Zone position of transition `t`, if enabled.
    fn pos(&self, t: usize) -> Option<usize> {
        self.enabled.binary_search(&t).ok()
    }

    /// Transitions that can fire first: `t` is fireable iff no other
    /// enabled transition is forced strictly earlier, i.e. the zone
    /// intersected with `r_t <= r_j` for all `j` stays nonempty. On a
    /// canonical zone this reduces to checking the `(j, t)` entries.
    pub fn fireable(&self) -> Vec<usize> {
        let mut out = Vec::new();
        'next: for (i, &t) in self.enabled.iter().enumerate() {
            for j in 0..self.enabled.len() {
                if j != i && self.zone.get(j + 1, i + 1) < Bound::le_zero() {
                    continue 'next;
                }
            }
            out.push(t);
        }
        out
    }

    pub fn is_fireable(&self, t: usize) -> bool {
        match self.pos(t) {
            None => false,
            Some(i) => (0..self.enabled.len())
                .all(|j| j == i || self.zone.get(j + 1, i + 1) >= Bound::le_zero()),
        }
    }
}

fn interval_upper_bound(iv: &TimeInterval) -> Bound {
    match iv.upper {
        TimeBound::Infinite => Bound::Inf,
        TimeBound::Finite(hi) => {
            if iv.upper_closed {
                Bound::Le(hi)
            } else {
                Bound::Lt(hi)
            }
        }
    }
}

fn interval_lower_bound(iv: &TimeInterval) -> Bound {
    // encodes -r <= -lo (or < -lo for an open lower end)
    if iv.lower_closed {
        Bound::Le(-iv.lower)
    } else {
        Bound::Lt(-iv.lower)
    }
}

/// The initial class: initial discrete state with every enabled
/// transition's remaining time constrained to its static interval.
pub fn initial_class(net: &CompiledNet) -> StateClass {
    let state = net.initial();
    let enabled = net.enabled_set(&state);
    let mut zone = Dbm::unconstrained(enabled.len());
    for (i, &t) in enabled.iter().enumerate() {
        let iv = &net.transitions[t].interval;
        zone.set(i + 1, 0, interval_upper_bound(iv));
        zone.set(0, i + 1, interval_lower_bound(iv));
    }
    let ok = zone.close();
    debug_assert!(ok, "static intervals cannot produce an empty zone");
    StateClass {
        state,
        enabled,
        zone,
    }
}

/// Fires `t` from `class`, producing the successor class.
pub fn successor(
    net: &CompiledNet,
    class: &StateClass,
    t: usize,
) -> Result<StateClass, SemanticsError> {
    let ft = class.pos(t).ok_or(SemanticsError::NotFireable(t))?;
    if !class.is_fireable(t) {
        return Err(SemanticsError::NotFireable(t));
    }
    // intersect with "t fires no later than any other enabled transition"
    let mut fired = class.zone.clone();
    for j in 0..class.enabled.len() {
        if j != ft {
            fired.tighten(ft + 1, j + 1, Bound::le_zero());
        }
    }
    if !fired.close() {
        return Err(SemanticsError::EmptyZone);
    }

    let post = net.fire(&class.state, t)?;
    let split = net.split_enabled_after(&class.state, t, &post);

    let mut enabled: Vec<usize> = split
        .persistent
        .iter()
        .chain(split.fresh.iter())
        .copied()
        .collect();
    enabled.sort_unstable();

    // old zone position per persistent transition
    let old_pos: HashMap<usize, usize> = class
        .enabled
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i))
        .collect();

    let mut zone = Dbm::unconstrained(enabled.len());
    for (i, &u) in enabled.iter().enumerate() {
        if split.persistent.contains(&u) {
            let pu = old_pos[&u];
            // survivor times shift by the firing instant of t
            zone.set(i + 1, 0, fired.get(pu + 1, ft + 1));
            zone.set(0, i + 1, fired.get(ft + 1, pu + 1));
            for (j, &v) in enabled.iter().enumerate() {
                if i != j && split.persistent.contains(&v) {
                    let pv = old_pos[&v];
                    zone.set(i + 1, j + 1, fired.get(pu + 1, pv + 1));
                }
            }
        } else {
            let iv = &net.transitions[u].interval;
            zone.set(i + 1, 0, interval_upper_bound(iv));
            zone.set(0, i + 1, interval_lower_bound(iv));
        }
    }
    if !zone.close() {
        return Err(SemanticsError::EmptyZone);
    }
    Ok(StateClass {
        state: post,
        enabled,
        zone,
    })
}

/// Exploration limits.
#[derive(Debug, Clone, Copy)]
pub struct ExploreLimits {
    pub max_classes: usize,
    pub max_depth: Option<usize>,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_classes: DEFAULT_MAX_CLASSES,
            max_depth: None,
        }
    }
}

/// Reachability graph over canonical state classes.
#[derive(Debug, Clone)]
pub struct ClassGraph {
    pub classes: Vec<StateClass>,
    /// Outgoing edges per class as `(transition index, target class)`.
    pub succ: Vec<Vec<(usize, u32)>>,
    /// BFS tree: `(parent class, transition index)`; `None` for the root.
    pub parent: Vec<Option<(u32, usize)>>,
    pub depth: Vec<u32>,
    /// Classes whose successors were all expanded. A truncated run leaves
    /// frontier classes unexpanded; analyses must not treat those as
    /// terminal.
    pub expanded: Vec<bool>,
    pub truncated: bool,
}

impl ClassGraph {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Transition path from the root to `class` along the BFS tree.
    pub fn path_to(&self, class: u32) -> Vec<(u32, usize)> {
        let mut rev = Vec::new();
        let mut cur = class;
        while let Some((p, t)) = self.parent[cur as usize] {
            rev.push((p, t));
            cur = p;
        }
        rev.reverse();
        rev
    }
}

/// Breadth-first exploration with visited-class deduplication, stopping at
/// the limits or when `stop` accepts a class. The stopped-on class (if
/// any) is returned by index. Deterministic: single-threaded, transition
/// order fixed by the compiled net.
pub fn explore_with(
    net: &CompiledNet,
    limits: &ExploreLimits,
    mut stop: impl FnMut(&StateClass) -> bool,
) -> Result<(ClassGraph, Option<u32>), SemanticsError> {
    let init = initial_class(net);
    let mut classes = vec![init.clone()];
    let mut succ: Vec<Vec<(usize, u32)>> = vec![Vec::new()];
    let mut parent: Vec<Option<(u32, usize)>> = vec![None];
    let mut depth = vec![0u32];
    let mut expanded = vec![false];
    let mut visited: HashMap<StateClass, u32> = HashMap::new();
    visited.insert(init.clone(), 0);

    if stop(&init) {
        let graph = ClassGraph {
            classes,
            succ,
            parent,
            depth,
            expanded,
            truncated: true,
        };
        return Ok((graph, Some(0)));
    }

    let mut queue = VecDeque::new();
    queue.push_back(0u32);
    let mut truncated = false;
    let mut found = None;

    'bfs: while let Some(ci) = queue.pop_front() {
        if let Some(md) = limits.max_depth {
            if depth[ci as usize] as usize >= md {
                truncated = true;
                continue;
            }
        }
        let class = classes[ci as usize].clone();
        for t in class.fireable() {
            let next = successor(net, &class, t)?;
            let target = match visited.entry(next.clone()) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    if classes.len() >= limits.max_classes {
                        truncated = true;
                        // leave this class unexpanded; drop the discovered
                        // successor on the floor
                        expanded[ci as usize] = false;
                        continue 'bfs;
                    }
                    let idx = classes.len() as u32;
                    e.insert(idx);
                    classes.push(next.clone());
                    succ.push(Vec::new());
                    parent.push(Some((ci, t)));
                    depth.push(depth[ci as usize] + 1);
                    expanded.push(false);
                    queue.push_back(idx);
                    if stop(&next) {
                        found = Some(idx);
                        succ[ci as usize].push((t, idx));
                        truncated = true;
                        break 'bfs;
                    }
                    idx
                }
            };
            succ[ci as usize].push((t, target));
        }
        expanded[ci as usize] = true;
    }

    let graph = ClassGraph {
        classes,
        succ,
        parent,
        depth,
        expanded,
        truncated,
    };
    Ok((graph, found))
}

/// Full exploration up to the limits.
pub fn explore(net: &CompiledNet, limits: &ExploreLimits) -> Result<ClassGraph, SemanticsError> {
    explore_with(net, limits, |_| false).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Net, Transition};
    use crate::time::{rat, TimeInterval};
    use crate::zone::Bound;

    fn compiled(net: &Net) -> CompiledNet {
        CompiledNet::compile(net).unwrap()
    }

    #[test]
    fn immediate_transition_zone_is_point() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(Transition::new("t").input("P", 1).output("Q", 1));
        let c = compiled(&net);
        let init = initial_class(&c);
        assert_eq!(init.enabled.len(), 1);
        assert_eq!(init.zone.get(1, 0), Bound::Le(rat(0, 1)));
        assert_eq!(init.zone.get(0, 1), Bound::Le(rat(0, 1)));
        assert_eq!(init.fireable(), vec![0]);
    }

    #[test]
    fn unbounded_interval_keeps_upper_open() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_transition(
            Transition::new("t")
                .input("P", 1)
                .output("P", 1)
                .interval(TimeInterval::at_least(rat(3, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        assert_eq!(init.zone.get(1, 0), Bound::Inf);
        assert_eq!(init.zone.get(0, 1), Bound::Le(rat(-3, 1)));
    }

    #[test]
    fn dead_net_terminal_class() {
        let mut net = Net::new();
        net.add_place("P", 1);
        let c = compiled(&net);
        let init = initial_class(&c);
        assert!(init.enabled.is_empty());
        assert!(init.fireable().is_empty());
        let g = explore(&c, &ExploreLimits::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.succ[0].is_empty());
        assert!(!g.truncated);
    }

    // Frozen from hand zone computation (confirmed by the discretized
    // oracle in the integration tests): [1,2] vs [5,6] means only the
    // early transition can fire first; [1,4] vs [3,6] admits both orders.
    #[test]
    fn disjoint_intervals_only_early_fireable() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_transition(
            Transition::new("a")
                .input("P", 1)
                .output("P", 1)
                .interval(TimeInterval::closed(rat(1, 1), rat(2, 1))),
        );
        net.add_transition(
            Transition::new("b")
                .input("Q", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(5, 1), rat(6, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        let a = c.transition_index("a").unwrap();
        assert_eq!(init.fireable(), vec![a]);
    }

    #[test]
    fn overlapping_intervals_both_fireable() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_transition(
            Transition::new("a")
                .input("P", 1)
                .output("P", 1)
                .interval(TimeInterval::closed(rat(1, 1), rat(4, 1))),
        );
        net.add_transition(
            Transition::new("b")
                .input("Q", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(3, 1), rat(6, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        assert_eq!(init.fireable().len(), 2);
    }

    #[test]
    fn immediate_preempts_slow_transition() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_transition(Transition::new("fast").input("P", 1).output("P", 1));
        net.add_transition(
            Transition::new("slow")
                .input("Q", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(5, 1), rat(9, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        let fast = c.transition_index("fast").unwrap();
        assert_eq!(init.fireable(), vec![fast]);
    }

    #[test]
    fn persistent_transition_keeps_residual_interval() {
        // an immediate firing leaves a persistent [1,2] untouched
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_place("R", 0);
        net.add_transition(Transition::new("imm").input("P", 1).output("R", 1));
        net.add_transition(
            Transition::new("timed")
                .input("Q", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(1, 1), rat(2, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        let imm = c.transition_index("imm").unwrap();
        let next = successor(&c, &init, imm).unwrap();
        assert_eq!(next.enabled.len(), 1);
        assert_eq!(next.zone.get(1, 0), Bound::Le(rat(2, 1)));
        assert_eq!(next.zone.get(0, 1), Bound::Le(rat(-1, 1)));
    }

    #[test]
    fn elapsed_time_shifts_persistent_bounds() {
        // t1 in [1,1] fires first; persistent t2 in [3,4] then has
        // residual [2,3]
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_place("Sink", 0);
        net.add_transition(
            Transition::new("t1")
                .input("P", 1)
                .output("Sink", 1)
                .interval(TimeInterval::exact(rat(1, 1))),
        );
        net.add_transition(
            Transition::new("t2")
                .input("Q", 1)
                .output("Q", 1)
                .interval(TimeInterval::closed(rat(3, 1), rat(4, 1))),
        );
        let c = compiled(&net);
        let init = initial_class(&c);
        let idx1 = c.transition_index("t1").unwrap();
        let next = successor(&c, &init, idx1).unwrap();
        assert_eq!(next.enabled, vec![c.transition_index("t2").unwrap()]);
        assert_eq!(next.zone.get(1, 0), Bound::Le(rat(3, 1)));
        assert_eq!(next.zone.get(0, 1), Bound::Le(rat(-2, 1)));
    }

    #[test]
    fn explore_is_deterministic() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_place("R", 0);
        net.add_transition(Transition::new("a").input("P", 1).output("Q", 1));
        net.add_transition(Transition::new("b").input("P", 1).output("R", 1));
        net.add_transition(Transition::new("c").input("Q", 1).output("P", 1));
        net.add_transition(Transition::new("d").input("R", 1).output("P", 1));
        let c = compiled(&net);
        let g1 = explore(&c, &ExploreLimits::default()).unwrap();
        let g2 = explore(&c, &ExploreLimits::default()).unwrap();
        assert_eq!(g1.classes, g2.classes);
        assert_eq!(g1.succ, g2.succ);
        assert_eq!(g1.len(), 3);
    }

    #[test]
    fn max_classes_truncates() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_variable("n", 0);
        net.add_transition(
            Transition::new("count")
                .input("P", 1)
                .output("P", 1)
                .updates(
                    crate::expr::UpdateList::new()
                        .set("n", crate::expr::Expr::add(crate::expr::Expr::var("n"), crate::expr::Expr::Int(1))),
                ),
        );
        let c = compiled(&net);
        let limits = ExploreLimits {
            max_classes: 10,
            max_depth: None,
        };
        let g = explore(&c, &limits).unwrap();
        assert!(g.truncated);
        assert_eq!(g.len(), 10);
    }
}
