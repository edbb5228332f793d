//! Test-support machinery: randomized net generation, a discretized
//! brute-force reachability oracle, and a controller-model interpreter
//! for co-simulation. Feature-gated; not part of the production API.
//!
//! The oracle deliberately avoids the zone machinery: it enumerates
//! integer-time executions with unit ticks, which is exhaustive for nets
//! whose intervals are closed with integer bounds (unbounded upper bounds
//! are saturated at three times the largest finite bound in the net, or 1
//! if none, which cannot cut off behavior because a clock beyond every
//! finite bound only ever compares against lower bounds). Generated
//! sample nets therefore stick to closed integer intervals; open
//! endpoints are exercised by dedicated unit tests instead.

use crate::cipn::{Action, CipnModel, Cond};
use crate::compile::{CompiledNet, DState};
use crate::expr::{CmpOp, Expr, UpdateList};
use crate::net::{Net, Transition};
use crate::scg::{explore, ExploreLimits};
use crate::time::{rat, TimeBound, TimeInterval};
use crate::transform::SensorBinding;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Strips generated stage suffixes, recovering the controller place an
/// expanded stage belongs to.
pub fn base_place(id: &str) -> &str {
    match id.find("__") {
        Some(i) => &id[..i],
        None => id,
    }
}

// ---------------------------------------------------------------------
// randomized nets
// ---------------------------------------------------------------------

/// Generation profile for random nets.
pub struct GenProfile {
    pub max_places: usize,
    pub max_transitions: usize,
    pub max_tokens: u32,
    pub max_weight: u32,
    /// Upper limit for integer interval bounds.
    pub max_bound: i64,
    /// Probability of an unbounded upper interval end.
    pub p_unbounded: f64,
    pub with_variables: bool,
}

impl Default for GenProfile {
    fn default() -> Self {
        GenProfile {
            max_places: 6,
            max_transitions: 6,
            max_tokens: 2,
            max_weight: 2,
            max_bound: 10,
            p_unbounded: 0.15,
            with_variables: true,
        }
    }
}

/// Generates a random small net with closed integer intervals, marking
/// guards, and bounded-counter variables.
pub fn gen_net(seed: u64, profile: &GenProfile) -> Net {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut net = Net::new();
    let n_places = rng.gen_range(1..=profile.max_places);
    for i in 0..n_places {
        net.add_place(format!("P{}", i), rng.gen_range(0..=profile.max_tokens));
    }
    let n_vars = if profile.with_variables {
        rng.gen_range(0..=2)
    } else {
        0
    };
    for i in 0..n_vars {
        net.add_variable(format!("v{}", i), rng.gen_range(0..=2));
    }
    let n_trans = rng.gen_range(1..=profile.max_transitions);
    for i in 0..n_trans {
        let mut t = Transition::new(format!("t{}", i));
        let n_in = rng.gen_range(0..=2usize);
        let n_out = rng.gen_range(usize::from(n_in == 0)..=2usize);
        for _ in 0..n_in {
            let p = format!("P{}", rng.gen_range(0..n_places));
            if !t.inputs.iter().any(|(q, _)| *q == p) {
                t.inputs.push((p, rng.gen_range(1..=profile.max_weight)));
            }
        }
        for _ in 0..n_out {
            let p = format!("P{}", rng.gen_range(0..n_places));
            if !t.outputs.iter().any(|(q, _)| *q == p) {
                t.outputs.push((p, rng.gen_range(1..=profile.max_weight)));
            }
        }
        if t.inputs.is_empty() && t.outputs.is_empty() {
            t.inputs.push((format!("P{}", rng.gen_range(0..n_places)), 1));
        }
        let lo = rng.gen_range(0..=profile.max_bound);
        t.interval = if rng.gen_bool(profile.p_unbounded) {
            TimeInterval::at_least(rat(lo as i128, 1))
        } else {
            let hi = rng.gen_range(lo..=profile.max_bound);
            TimeInterval::closed(rat(lo as i128, 1), rat(hi as i128, 1))
        };
        if rng.gen_bool(0.5) {
            t.guard = gen_guard(&mut rng, n_places, n_vars);
        }
        if n_vars > 0 && rng.gen_bool(0.4) {
            let v = format!("v{}", rng.gen_range(0..n_vars));
            let expr = if rng.gen_bool(0.5) {
                Expr::Int(rng.gen_range(0..=3))
            } else {
                Expr::add(Expr::var(v.clone()), Expr::Int(1))
            };
            // guard growth so valuations stay in a small box
            if matches!(expr, Expr::Add(..)) {
                t.guard = t.guard.conjoin(Expr::cmp(
                    CmpOp::Lt,
                    Expr::var(v.clone()),
                    Expr::Int(3),
                ));
            }
            t.updates = UpdateList::new().set(v, expr);
        }
        net.add_transition(t);
    }
    net
}

fn gen_guard(rng: &mut StdRng, n_places: usize, n_vars: usize) -> Expr {
    let atom = |rng: &mut StdRng| -> Expr {
        let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
        let op = ops[rng.gen_range(0..ops.len())];
        if n_vars > 0 && rng.gen_bool(0.3) {
            Expr::cmp(
                op,
                Expr::var(format!("v{}", rng.gen_range(0..n_vars))),
                Expr::Int(rng.gen_range(0..=3)),
            )
        } else {
            Expr::cmp(
                op,
                Expr::marking(format!("P{}", rng.gen_range(0..n_places))),
                Expr::Int(rng.gen_range(0..=2)),
            )
        }
    };
    match rng.gen_range(0..4) {
        0 => atom(rng),
        1 => Expr::and(atom(rng), atom(rng)),
        2 => Expr::or(atom(rng), atom(rng)),
        _ => Expr::not(atom(rng)),
    }
}

// ---------------------------------------------------------------------
// discretized oracle
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct OracleConfig {
    marking: Vec<u32>,
    valuation: Vec<i64>,
    /// Elapsed enabled time per transition; `None` when disabled.
    elapsed: Vec<Option<u32>>,
}

impl OracleConfig {
    fn state(&self) -> DState {
        DState {
            marking: self.marking.clone().into_boxed_slice(),
            valuation: self.valuation.clone().into_boxed_slice(),
        }
    }
}

/// Discrete reachable states `(marking, valuation)` by unit-step
/// enumeration. Returns `None` when the config budget is exceeded.
///
/// Panics if any interval has an open endpoint or a non-integer bound;
/// the oracle's completeness argument needs closed integer intervals.
pub fn oracle_reachable(
    net: &CompiledNet,
    max_configs: usize,
) -> Option<BTreeSet<(Vec<u32>, Vec<i64>)>> {
    let mut lo = Vec::new();
    let mut hi = Vec::new(); // None = unbounded
    let mut max_finite: i64 = 0;
    for t in &net.transitions {
        let iv = &t.interval;
        assert!(
            iv.lower_closed && iv.lower.is_integer(),
            "oracle requires closed integer lower bounds"
        );
        let l = *iv.lower.numer() as i64;
        lo.push(l as u32);
        max_finite = max_finite.max(l);
        match iv.upper {
            TimeBound::Finite(h) => {
                assert!(
                    iv.upper_closed && h.is_integer(),
                    "oracle requires closed integer upper bounds"
                );
                let h = *h.numer() as i64;
                hi.push(Some(h as u32));
                max_finite = max_finite.max(h);
            }
            TimeBound::Infinite => hi.push(None),
        }
    }
    // clock saturation point for unbounded-upper transitions
    let cap: u32 = (3 * max_finite).max(1) as u32;

    let initial_state = net.initial();
    let init = OracleConfig {
        elapsed: (0..net.transitions.len())
            .map(|t| net.is_enabled(t, &initial_state).then_some(0))
            .collect(),
        marking: initial_state.marking.to_vec(),
        valuation: initial_state.valuation.to_vec(),
    };

    let mut seen: BTreeSet<OracleConfig> = BTreeSet::new();
    let mut reachable = BTreeSet::new();
    let mut queue = VecDeque::new();
    reachable.insert((init.marking.clone(), init.valuation.clone()));
    seen.insert(init.clone());
    queue.push_back(init);

    while let Some(cfg) = queue.pop_front() {
        if seen.len() > max_configs {
            return None;
        }
        let state = cfg.state();
        // firings at the current instant
        for t in 0..net.transitions.len() {
            let Some(e) = cfg.elapsed[t] else { continue };
            if e < lo[t] {
                continue;
            }
            let post = net.fire(&state, t).expect("enabled by elapsed tracking");
            let elapsed = oracle_retime(net, &cfg, &state, t, &post);
            let next = OracleConfig {
                marking: post.marking.to_vec(),
                valuation: post.valuation.to_vec(),
                elapsed,
            };
            if seen.insert(next.clone()) {
                reachable.insert((next.marking.clone(), next.valuation.clone()));
                queue.push_back(next);
            }
        }
        // unit tick, unless some deadline makes now the last instant
        let tick_ok = (0..net.transitions.len()).all(|t| match (cfg.elapsed[t], hi[t]) {
            (Some(e), Some(h)) => e + 1 <= h,
            _ => true,
        });
        if tick_ok {
            let elapsed = cfg
                .elapsed
                .iter()
                .map(|e| e.map(|v| (v + 1).min(cap)))
                .collect();
            let next = OracleConfig {
                marking: cfg.marking.clone(),
                valuation: cfg.valuation.clone(),
                elapsed,
            };
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Some(reachable)
}

/// Oracle-side re-timing after a firing: persistence is judged by the
/// same definition the engine uses, recomputed here from first
/// principles on the token game.
fn oracle_retime(
    net: &CompiledNet,
    cfg: &OracleConfig,
    pre: &DState,
    fired: usize,
    post: &DState,
) -> Vec<Option<u32>> {
    let mut mid = pre.marking.clone();
    for &(p, w) in &net.transitions[fired].inputs {
        mid[p] -= w;
    }
    (0..net.transitions.len())
        .map(|u| {
            if !net.is_enabled(u, post) {
                return None;
            }
            let persistent = u != fired
                && net.is_enabled(u, pre)
                && net.token_enabled(u, &mid)
                && net.guard_true(u, &mid, &pre.valuation);
            if persistent {
                cfg.elapsed[u]
            } else {
                Some(0)
            }
        })
        .collect()
}

/// Engine-side discrete reachability via the state-class graph. `None`
/// when truncated.
pub fn engine_reachable(
    net: &CompiledNet,
    max_classes: usize,
) -> Option<BTreeSet<(Vec<u32>, Vec<i64>)>> {
    let limits = ExploreLimits {
        max_classes,
        max_depth: None,
    };
    let graph = explore(net, &limits).ok()?;
    if graph.truncated {
        return None;
    }
    Some(
        graph
            .classes
            .iter()
            .map(|c| (c.state.marking.to_vec(), c.state.valuation.to_vec()))
            .collect(),
    )
}

// ---------------------------------------------------------------------
// controller-model interpreter (co-simulation)
// ---------------------------------------------------------------------

/// Direct interpreter for a controller model under its native semantics:
/// one token, conditions over sensors and shared signals, send actions
/// updating the shared signal environment, receives consuming it.
pub struct CipnSim<'a> {
    pub model: &'a CipnModel,
    pub marked: String,
}

impl<'a> CipnSim<'a> {
    pub fn new(model: &'a CipnModel) -> CipnSim<'a> {
        CipnSim {
            marked: model.initial_place().expect("well-formed model").to_string(),
            model,
        }
    }

    pub fn condition_holds(
        cond: &Cond,
        signals: &BTreeMap<String, i64>,
        sensor: &impl Fn(&str) -> Option<bool>,
    ) -> bool {
        match cond {
            Cond::True => true,
            Cond::NameEquals { name, value } => match sensor(name) {
                Some(b) => (*value == 1) == b,
                None => signals.get(name).copied().unwrap_or(0) == *value,
            },
            Cond::And(a, b) => {
                Self::condition_holds(a, signals, sensor)
                    && Self::condition_holds(b, signals, sensor)
            }
            Cond::Or(a, b) => {
                Self::condition_holds(a, signals, sensor)
                    || Self::condition_holds(b, signals, sensor)
            }
            Cond::Not(a) => !Self::condition_holds(a, signals, sensor),
        }
    }

    /// Fires a transition: moves the token, consumes the signal atoms of
    /// the condition, and executes the entered place's send actions.
    pub fn fire(
        &mut self,
        tid: &str,
        signals: &mut BTreeMap<String, i64>,
        sensor: &impl Fn(&str) -> Option<bool>,
    ) -> Result<(), String> {
        let t = self
            .model
            .transitions
            .iter()
            .find(|t| t.id == tid)
            .ok_or_else(|| format!("unknown controller transition {}", tid))?;
        if !t.inputs.contains(&self.marked) {
            return Err(format!("{}: token not in source place", tid));
        }
        if !Self::condition_holds(&t.condition, signals, sensor) {
            return Err(format!("{}: condition not satisfied", tid));
        }
        for (name, _) in t.condition.conjunct_atoms() {
            if sensor(&name).is_none() {
                signals.insert(name, 0);
            }
        }
        self.marked = t.outputs[0].clone();
        for action in &self.model.place(&self.marked).unwrap().actions {
            if let Action::Send { signal, value, .. } = action {
                signals.insert(signal.clone(), *value);
            }
        }
        Ok(())
    }
}

/// Co-simulates the ideal-mode composed net against the controller models
/// under their native semantics for up to `max_steps` random firings.
/// Checks, at every controller step: the fired transition's condition
/// holds on the controller side, token positions agree (modulo stage
/// expansion), and the shared signal environments stay equal.
pub fn cosim_ideal(
    controllers: &[(String, &CipnModel, &SensorBinding)],
    composed: &CompiledNet,
    max_steps: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut sims: BTreeMap<&str, CipnSim> = controllers
        .iter()
        .map(|(ns, m, _)| (ns.as_str(), CipnSim::new(m)))
        .collect();
    let mut signals: BTreeMap<String, i64> = BTreeMap::new();
    for (_, m, _) in controllers {
        for (sig, _) in m.sent_signals() {
            signals.insert(sig, 0);
        }
    }

    let mut state = composed.initial();
    let mut steps = 0;
    for _ in 0..max_steps {
        let enabled = composed.enabled_set(&state);
        if enabled.is_empty() {
            break;
        }
        let t = enabled[rng.gen_range(0..enabled.len())];
        let tid = composed.transitions[t].id.clone();
        let pre = state.clone();
        state = composed.fire(&state, t).map_err(|e| e.to_string())?;
        steps += 1;

        let (ns, local) = match tid.split_once('.') {
            Some(x) => x,
            None => continue,
        };
        let Some((_, model, binding)) = controllers.iter().find(|(n, _, _)| n == ns) else {
            continue;
        };
        if model.transitions.iter().all(|ct| ct.id != local) {
            continue; // generated stage transition, not a controller step
        }
        // sensors read the pre-firing plant state through the bindings
        let sensor = |name: &str| -> Option<bool> {
            let expr = binding.0.get(name)?;
            let compiled = composed.compile_expr(expr).ok()?;
            Some(crate::compile::eval_bool(
                &compiled,
                &pre.marking,
                &pre.valuation,
            ))
        };
        sims.get_mut(ns)
            .unwrap()
            .fire(local, &mut signals, &sensor)
            .map_err(|e| format!("step {}: {}", steps, e))?;

        // token positions agree modulo stage expansion
        for (ns, sim) in &sims {
            let mut tpn_marked = None;
            for (i, pname) in composed.place_names.iter().enumerate() {
                if state.marking[i] > 0 {
                    if let Some((pns, local)) = pname.split_once('.') {
                        if pns == *ns {
                            tpn_marked = Some(base_place(local).to_string());
                        }
                    }
                }
            }
            if tpn_marked.as_deref() != Some(sim.marked.as_str()) {
                return Err(format!(
                    "step {}: controller {} diverged: net at {:?}, model at {}",
                    steps, ns, tpn_marked, sim.marked
                ));
            }
        }
        // shared signal environments agree
        for (sig, val) in &signals {
            if let Some(vi) = composed.var_index(sig) {
                if state.valuation[vi] != *val {
                    return Err(format!(
                        "step {}: signal {} diverged: net {}, model {}",
                        steps, sig, state.valuation[vi], val
                    ));
                }
            }
        }
    }
    Ok(steps)
}
