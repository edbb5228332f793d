//! Witness traces with representative firing times.
//!
//! A trace records the fired transition sequence together with one
//! concrete, exact-rational firing time per step. The times are obtained
//! by solving the path's difference constraint system (interval lower
//! bounds relative to enabling instants, upper-bound deadlines of every
//! enabled transition, time monotonicity) and picking the earliest
//! feasible instant step by step, so each emitted sequence is a genuine
//! timed run of the net.

use crate::compile::{CompiledNet, DState};
use crate::net::SystemState;
use crate::scg::{initial_class, successor, SemanticsError, StateClass};
use crate::time::{Rat, TimeBound};
use crate::zone::{Bound, Dbm};
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Qualified transition id.
    pub transition: String,
    /// Representative absolute firing time.
    pub time: Rat,
    /// Discrete state after the step.
    pub state: SystemState,
}

/// A finite witness run; `lasso` marks the step index (0-based, into
/// `steps`) whose pre-state the cycle re-enters, for infinite witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: SystemState,
    pub steps: Vec<TraceStep>,
    pub lasso: Option<usize>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("step {step}: transition `{transition}` is not fireable at that point")]
    NotFireable { step: usize, transition: String },
    #[error("path constraint system is infeasible; internal invariant broken")]
    Infeasible,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Builds a trace for a transition-index path starting at the initial
/// class, computing representative times. The path must be fireable step
/// by step (paths extracted from the class graph always are).
pub fn trace_for_path(
    net: &CompiledNet,
    path: &[usize],
    lasso: Option<usize>,
) -> Result<Trace, TraceError> {
    let mut class = initial_class(net);
    let mut classes = Vec::with_capacity(path.len() + 1);
    classes.push(class.clone());
    for (k, &t) in path.iter().enumerate() {
        if !class.is_fireable(t) {
            return Err(TraceError::NotFireable {
                step: k,
                transition: net.transitions[t].id.clone(),
            });
        }
        class = successor(net, &class, t)?;
        classes.push(class.clone());
    }
    let times = representative_times(net, path, &classes)?;
    let steps = path
        .iter()
        .zip(times)
        .zip(classes.iter().skip(1))
        .map(|((&t, time), c)| TraceStep {
            transition: net.transitions[t].id.clone(),
            time,
            state: net.to_system_state(&c.state),
        })
        .collect();
    Ok(Trace {
        initial: net.to_system_state(&classes[0].state),
        steps,
        lasso,
    })
}

/// Replays a trace's transition sequence through the engine, returning the
/// visited classes. Fails if any step is not fireable.
pub fn replay(net: &CompiledNet, trace: &Trace) -> Result<Vec<StateClass>, TraceError> {
    let mut class = initial_class(net);
    let mut out = vec![class.clone()];
    for (k, step) in trace.steps.iter().enumerate() {
        let t = net
            .transition_index(&step.transition)
            .ok_or_else(|| TraceError::UnknownTransition(step.transition.clone()))?;
        if !class.is_fireable(t) {
            return Err(TraceError::NotFireable {
                step: k,
                transition: step.transition.clone(),
            });
        }
        class = successor(net, &class, t)?;
        out.push(class.clone());
    }
    Ok(out)
}

/// Solves for one feasible absolute-time assignment along the path.
///
/// Variables: `x_0 = 0` and `x_k` = firing time of step `k`. Constraints:
/// `x_{k-1} <= x_k`; for the fired transition `t`, `x_k - x_e >= lo(t)`
/// where `x_e` is its enabling instant; and for every transition enabled
/// just before step `k`, `x_k - x_e <= hi` (its deadline, strong
/// semantics).
fn representative_times(
    net: &CompiledNet,
    path: &[usize],
    classes: &[StateClass],
) -> Result<Vec<Rat>, TraceError> {
    let n = path.len();
    let mut dbm = Dbm::unconstrained(n);

    // enabling step of each currently enabled transition; step 0 = initial
    let mut enabled_at: Vec<(usize, usize)> = classes[0]
        .enabled
        .iter()
        .map(|&t| (t, 0usize))
        .collect();

    for (k1, &t) in path.iter().enumerate() {
        let k = k1 + 1;
        // monotone time
        dbm.tighten(k - 1, k, Bound::le_zero());
        // deadlines of everything enabled before this step
        for &(u, e) in &enabled_at {
            let iv = &net.transitions[u].interval;
            match iv.upper {
                TimeBound::Infinite => {}
                TimeBound::Finite(hi) => {
                    let b = if iv.upper_closed {
                        Bound::Le(hi)
                    } else {
                        Bound::Lt(hi)
                    };
                    dbm.tighten(k, e, b);
                }
            }
        }
        // fired transition waited out its lower bound
        let e_t = enabled_at
            .iter()
            .find(|&&(u, _)| u == t)
            .map(|&(_, e)| e)
            .expect("fired transition is enabled");
        let iv = &net.transitions[t].interval;
        let lb = if iv.lower_closed {
            Bound::Le(-iv.lower)
        } else {
            Bound::Lt(-iv.lower)
        };
        dbm.tighten(e_t, k, lb);

        // advance enabling bookkeeping to the post-state
        let split = net.split_enabled_after(&classes[k - 1].state, t, &classes[k].state);
        let mut next_enabled = Vec::new();
        for &u in &split.persistent {
            let e = enabled_at
                .iter()
                .find(|&&(v, _)| v == u)
                .map(|&(_, e)| e)
                .expect("persistent transition was enabled");
            next_enabled.push((u, e));
        }
        for &u in &split.fresh {
            next_enabled.push((u, k));
        }
        enabled_at = next_enabled;
    }

    if !dbm.close() {
        return Err(TraceError::Infeasible);
    }

    // pick values earliest-first; the closed DBM guarantees each step's
    // interval is nonempty given the already-fixed prefix
    let mut values = vec![Rat::zero(); n + 1];
    for k in 1..=n {
        let mut lower = (Rat::zero(), false); // (value, strict)
        let mut upper: Option<(Rat, bool)> = None;
        for j in 0..k {
            // x_j - x_k <= D[j][k]  =>  x_k >= x_j - D[j][k]
            match dbm.get(j, k) {
                Bound::Inf => {}
                b => {
                    let v = values[j] - b.value().unwrap();
                    let strict = b.is_strict();
                    if v > lower.0 || (v == lower.0 && strict && !lower.1) {
                        lower = (v, strict);
                    }
                }
            }
            // x_k - x_j <= D[k][j]  =>  x_k <= x_j + D[k][j]
            match dbm.get(k, j) {
                Bound::Inf => {}
                b => {
                    let v = values[j] + b.value().unwrap();
                    let strict = b.is_strict();
                    let tighter = match upper {
                        None => true,
                        Some((uv, us)) => v < uv || (v == uv && strict && !us),
                    };
                    if tighter {
                        upper = Some((v, strict));
                    }
                }
            }
        }
        values[k] = if !lower.1 {
            lower.0
        } else {
            match upper {
                Some((uv, _)) => {
                    debug_assert!(uv > lower.0, "closed DBM admits a point");
                    lower.0 + (uv - lower.0) / Rat::from_integer(2)
                }
                None => lower.0 + Rat::from_integer(1),
            }
        };
    }
    Ok(values[1..].to_vec())
}

/// Changed places and variables between two discrete states of the same
/// net, in name order.
pub fn state_diff(
    net: &CompiledNet,
    before: &DState,
    after: &DState,
) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    for (i, name) in net.place_names.iter().enumerate() {
        if before.marking[i] != after.marking[i] {
            out.push((name.clone(), after.marking[i] as i64));
        }
    }
    for (i, name) in net.var_names.iter().enumerate() {
        if before.valuation[i] != after.valuation[i] {
            out.push((name.clone(), after.valuation[i]));
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Net, Transition};
    use crate::time::{rat, TimeInterval};

    #[test]
    fn chain_of_exact_delays_accumulates_time() {
        // two [1,1] transitions in sequence: second fires at absolute 2
        let mut net = Net::new();
        net.add_place("P1", 1);
        net.add_place("P2", 0);
        net.add_place("P3", 0);
        net.add_transition(
            Transition::new("a")
                .input("P1", 1)
                .output("P2", 1)
                .interval(TimeInterval::exact(rat(1, 1))),
        );
        net.add_transition(
            Transition::new("b")
                .input("P2", 1)
                .output("P3", 1)
                .interval(TimeInterval::exact(rat(1, 1))),
        );
        let c = CompiledNet::compile(&net).unwrap();
        let a = c.transition_index("a").unwrap();
        let b = c.transition_index("b").unwrap();
        let trace = trace_for_path(&c, &[a, b], None).unwrap();
        assert_eq!(trace.steps[0].time, rat(1, 1));
        assert_eq!(trace.steps[1].time, rat(2, 1));
    }

    #[test]
    fn deadline_of_concurrent_transition_delays_nothing_but_bounds_hold() {
        // t_fast [0,2], t_slow [3,5] concurrent: firing fast then slow
        // puts fast at its earliest (0) and slow no earlier than 3
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 1);
        net.add_place("P2", 0);
        net.add_place("Q2", 0);
        net.add_transition(
            Transition::new("fast")
                .input("P", 1)
                .output("P2", 1)
                .interval(TimeInterval::closed(rat(0, 1), rat(2, 1))),
        );
        net.add_transition(
            Transition::new("slow")
                .input("Q", 1)
                .output("Q2", 1)
                .interval(TimeInterval::closed(rat(3, 1), rat(5, 1))),
        );
        let c = CompiledNet::compile(&net).unwrap();
        let fast = c.transition_index("fast").unwrap();
        let slow = c.transition_index("slow").unwrap();
        let trace = trace_for_path(&c, &[fast, slow], None).unwrap();
        assert_eq!(trace.steps[0].time, rat(0, 1));
        assert_eq!(trace.steps[1].time, rat(3, 1));
    }

    #[test]
    fn strict_lower_bound_gets_interior_point() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("P2", 0);
        net.add_transition(
            Transition::new("t")
                .input("P", 1)
                .output("P2", 1)
                .interval(TimeInterval {
                    lower: rat(1, 1),
                    upper: TimeBound::Finite(rat(2, 1)),
                    lower_closed: false,
                    upper_closed: true,
                }),
        );
        let c = CompiledNet::compile(&net).unwrap();
        let trace = trace_for_path(&c, &[0], None).unwrap();
        let t = trace.steps[0].time;
        assert!(t > rat(1, 1) && t <= rat(2, 1));
    }

    #[test]
    fn replay_rejects_unfireable_sequence() {
        let mut net = Net::new();
        net.add_place("P", 1);
        net.add_place("Q", 0);
        net.add_transition(Transition::new("t").input("P", 1).output("Q", 1));
        let c = CompiledNet::compile(&net).unwrap();
        let good = trace_for_path(&c, &[0], None).unwrap();
        assert!(replay(&c, &good).is_ok());
        let mut bad = good.clone();
        bad.steps.push(bad.steps[0].clone());
        assert!(matches!(
            replay(&c, &bad),
            Err(TraceError::NotFireable { step: 1, .. })
        ));
    }
}
