//! Transformation of controller models into TPN-compliant nets.
//!
//! Sensor conditions become marking guards over the plant model through
//! the sensor bindings; actuation actions are erased (the plant side
//! carries occupancy guards on the controller places, per the actuator
//! bindings); requested delays become exact-interval timed transitions.
//!
//! Messaging is lowered in one of two modes. Ideal mode treats each
//! signal as instantaneous shared memory: sends update a shared variable,
//! receive conditions guard on it and consume it. Channel mode expands
//! every send into the transmit protocol subnet (raise the transceiver
//! request, wait for the application-level ACK flag with timeout, retry
//! on transceiver failure) and every signal condition into a guard over
//! the node's receive buffer; the generated subnets speak to the
//! transceiver model through the shared variables of [`crate::comm`].
//!
//! A place's original id stays on the stage where the token waits first,
//! so plant guards and properties keep their natural form; follow-up
//! protocol stages get derived ids and the place's original outgoing
//! transitions move to the final stage.

use crate::cipn::{check_cipn_wellformed, Action, CipnModel, Cond};
use crate::comm::{
    app_var, apply_security_patches, node_wire_id, xcvr_var, ChannelParams, CommError,
    SecurityConfig, MAC_VALID,
};
use crate::expr::{Expr, UpdateList};
use crate::net::{Net, Transition};
use crate::time::TimeInterval;
use crate::validate::{has_errors, validate_component, Diagnostic};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Sensor name to the boolean plant-marking expression that is true
/// exactly when the sensor reads 1.
#[derive(Debug, Clone, Default)]
pub struct SensorBinding(pub BTreeMap<String, Expr>);

impl SensorBinding {
    pub fn bind(mut self, sensor: impl Into<String>, expr: Expr) -> Self {
        self.0.insert(sensor.into(), expr);
        self
    }
}

/// `(actuator, commanded value)` to the controller place whose occupancy
/// signals the command. Plant models guard on these places; the binding
/// is validated for coverage here.
#[derive(Debug, Clone, Default)]
pub struct ActuatorBinding(pub BTreeMap<(String, i64), String>);

impl ActuatorBinding {
    pub fn bind(mut self, actuator: impl Into<String>, value: i64, place: impl Into<String>) -> Self {
        self.0.insert((actuator.into(), value), place.into());
        self
    }
}

/// System-level context the channel-mode transform needs: who this
/// controller is, the full sorted node list (fixing wire ids), and which
/// nodes receive each broadcast signal.
#[derive(Debug, Clone)]
pub struct ChannelTopology {
    pub self_node: String,
    pub nodes: Vec<String>,
    pub receivers: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("controller model ill-formed:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    IllFormed(Vec<Diagnostic>),
    #[error("sensor `{0}` has no binding")]
    UnboundSensor(String),
    #[error("sensor `{name}` compared to {value}; sensors are boolean (0/1)")]
    SensorValueNotBoolean { name: String, value: i64 },
    #[error("actuator command `{name}={value}` has no binding place")]
    UnboundActuator { name: String, value: i64 },
    #[error("place `{0}` has a delay action and multiple outgoing transitions; mixed delay/condition races are not supported")]
    DelayFanout(String),
    #[error("place `{0}` is initial and performs a send; the initial token enters no transition to carry the request")]
    SendInInitialPlace(String),
    #[error("transition `{0}`: signal conditions may only appear as top-level conjuncts")]
    SignalInNonConjunctPosition(String),
    #[error("transition `{0}`: more than one signal condition on a single receive buffer")]
    MultipleSignalAtoms(String),
    #[error("broadcast of signal `{0}` has no receivers")]
    BroadcastWithoutReceivers(String),
    #[error("send destination `{0}` is not a known node")]
    UnknownDest(String),
    #[error("transition `{transition}`: variable `{var}` updated twice after merging send raises")]
    UpdateCollision { transition: String, var: String },
    #[error("signal value {value} for `{signal}` is reserved (0 marks an empty buffer)")]
    ReservedSignalValue { signal: String, value: i64 },
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("transform produced an invalid net; this is a bug:\n{0}")]
    Internal(String),
}

enum Mode<'a> {
    Ideal,
    Channel {
        topo: &'a ChannelTopology,
        cp: &'a ChannelParams,
    },
}

/// Ideal-communication transform: messaging as instantaneous shared
/// memory. Suitable when networking is not a concern.
pub fn transform_ideal(
    m: &CipnModel,
    sensors: &SensorBinding,
    actuators: &ActuatorBinding,
) -> Result<Net, TransformError> {
    transform(m, sensors, actuators, Mode::Ideal)
}

/// Channel-backed transform: sends become transmit-protocol subnets
/// against the node's transceiver, signal conditions become receive-buffer
/// guards, and the configured security patches are applied.
pub fn transform_channel(
    m: &CipnModel,
    sensors: &SensorBinding,
    actuators: &ActuatorBinding,
    sec: &SecurityConfig,
    topo: &ChannelTopology,
    cp: &ChannelParams,
) -> Result<Net, TransformError> {
    let base = transform(m, sensors, actuators, Mode::Channel { topo, cp })?;
    Ok(apply_security_patches(&base, sec)?)
}

fn transform(
    m: &CipnModel,
    sensors: &SensorBinding,
    actuators: &ActuatorBinding,
    mode: Mode,
) -> Result<Net, TransformError> {
    let diags = check_cipn_wellformed(m);
    if has_errors(&diags) {
        return Err(TransformError::IllFormed(diags));
    }
    let initial = m.initial_place().expect("well-formed model").to_string();

    // actuator coverage
    for p in &m.places {
        for a in &p.actions {
            if let Action::ActuatorSet { name, value } = a {
                if !actuators.0.contains_key(&(name.clone(), *value)) {
                    return Err(TransformError::UnboundActuator {
                        name: name.clone(),
                        value: *value,
                    });
                }
            }
        }
    }

    // name classification: bound names are sensors, the rest are signals
    let is_sensor = |name: &str| sensors.0.contains_key(name);

    let mut net = Net::new();
    let mut declared_vars: BTreeSet<String> = BTreeSet::new();
    let mut declare = |net: &mut Net, name: String, init: i64| {
        if declared_vars.insert(name.clone()) {
            net.add_variable(name, init);
        }
    };

    match &mode {
        Mode::Ideal => {
            // every signal sent or waited on becomes a shared variable
            let mut signals: BTreeSet<String> = m.sent_signals().keys().cloned().collect();
            for name in m.conditioned_names() {
                if !is_sensor(&name) {
                    signals.insert(name);
                }
            }
            for s in signals {
                declare(&mut net, s, 0);
            }
        }
        Mode::Channel { topo, .. } => {
            let n = &topo.self_node;
            for suffix in ["Tx", "PTx", "PTxMAC", "TxDest", "Fail"] {
                declare(&mut net, xcvr_var(n, suffix), 0);
            }
            declare(&mut net, app_var(n, "RxAck"), 0);
            declare(&mut net, app_var(n, "RxBuf"), 0);
            declare(&mut net, app_var(n, "RxMAC"), MAC_VALID);
        }
    }

    // build each place's stage chain
    let mut final_stage: BTreeMap<String, String> = BTreeMap::new();
    let mut entry_updates: BTreeMap<String, UpdateList> = BTreeMap::new();

    for place in &m.places {
        let has_delay = place
            .actions
            .iter()
            .any(|a| matches!(a, Action::Delay { .. }));
        if has_delay && m.outgoing(&place.id).len() > 1 {
            return Err(TransformError::DelayFanout(place.id.clone()));
        }
        let sends_anything = place
            .actions
            .iter()
            .any(|a| matches!(a, Action::Send { .. }));
        if sends_anything && place.id == initial {
            return Err(TransformError::SendInInitialPlace(place.id.clone()));
        }

        net.add_place(place.id.clone(), u32::from(place.id == initial));
        let mut chain = Chain::new(place.id.clone());

        for (ai, action) in place.actions.iter().enumerate() {
            match action {
                Action::ActuatorSet { .. } => {} // erased; plant guards on occupancy
                Action::Delay { duration } => {
                    let next = chain.fresh_stage(&mut net);
                    let tid = format!("T{}__delay{}", place.id, ai);
                    let t = Transition::new(tid)
                        .input(chain.current.clone(), 1)
                        .output(next.clone(), 1)
                        .interval(TimeInterval::exact(*duration));
                    chain.advance(&mut net, next, vec![t]);
                }
                Action::Send {
                    dests,
                    signal,
                    value,
                } => {
                    if *value == 0 {
                        return Err(TransformError::ReservedSignalValue {
                            signal: signal.clone(),
                            value: *value,
                        });
                    }
                    match &mode {
                        Mode::Ideal => {
                            chain.attach_updates(
                                &mut net,
                                &mut entry_updates,
                                UpdateList::new().set_int(signal.clone(), *value),
                            )?;
                        }
                        Mode::Channel { topo, cp } => {
                            let dest_list: Vec<String> = match dests {
                                Some(d) => d.clone(),
                                None => topo
                                    .receivers
                                    .get(signal)
                                    .cloned()
                                    .unwrap_or_default(),
                            };
                            if dest_list.is_empty() {
                                return Err(TransformError::BroadcastWithoutReceivers(
                                    signal.clone(),
                                ));
                            }
                            for dest in &dest_list {
                                let rid = node_wire_id(&topo.nodes, dest)
                                    .ok_or_else(|| TransformError::UnknownDest(dest.clone()))?;
                                build_tx_stage(
                                    &mut net,
                                    &mut chain,
                                    &mut entry_updates,
                                    &topo.self_node,
                                    rid,
                                    *value,
                                    cp,
                                )?;
                            }
                        }
                    }
                }
            }
        }
        final_stage.insert(place.id.clone(), chain.current.clone());
        if !chain.origin_updates.is_empty() {
            entry_updates.insert(place.id.clone(), chain.origin_updates);
        }
    }

    // controller transitions keep their ids; conditions become guards
    for t in &m.transitions {
        let compiled = compile_cond(&t.condition, sensors, &mode, &t.id)?;
        let mut updates = compiled.consume;
        for out_place in &t.outputs {
            if let Some(extra) = entry_updates.get(out_place) {
                for (var, expr) in &extra.0 {
                    if updates.0.iter().any(|(v, _)| v == var) {
                        return Err(TransformError::UpdateCollision {
                            transition: t.id.clone(),
                            var: var.clone(),
                        });
                    }
                    updates.0.push((var.clone(), expr.clone()));
                }
            }
        }
        let mut nt = Transition::new(t.id.clone())
            .guard(compiled.guard)
            .updates(updates);
        for p in &t.inputs {
            nt = nt.input(final_stage[p].clone(), 1);
        }
        for p in &t.outputs {
            nt = nt.output(p.clone(), 1);
        }
        net.add_transition(nt);
    }

    let diags = validate_component(&net);
    if has_errors(&diags) {
        return Err(TransformError::Internal(
            diags
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        ));
    }
    Ok(net)
}

/// Stage-chain bookkeeping for one place.
struct Chain {
    place: String,
    current: String,
    /// Still at the original place (stage 0), whose entry transitions are
    /// the place's original incoming transitions.
    at_origin: bool,
    origin_updates: UpdateList,
    /// Transitions entering the current stage, by id.
    current_entries: Vec<String>,
    counter: usize,
}

impl Chain {
    fn new(place: String) -> Chain {
        Chain {
            current: place.clone(),
            place,
            at_origin: true,
            origin_updates: UpdateList::new(),
            current_entries: Vec::new(),
            counter: 0,
        }
    }

    fn fresh_stage(&mut self, net: &mut Net) -> String {
        self.counter += 1;
        let id = format!("{}__s{}", self.place, self.counter);
        net.add_place(id.clone(), 0);
        id
    }

    fn advance(&mut self, net: &mut Net, stage: String, entries: Vec<Transition>) {
        self.current_entries = entries.iter().map(|t| t.id.clone()).collect();
        for t in entries {
            net.add_transition(t);
        }
        self.current = stage;
        self.at_origin = false;
    }

    /// Attaches updates at the entry of the current stage: onto the
    /// original incoming transitions for stage 0 (deferred), onto the
    /// entering transitions otherwise.
    fn attach_updates(
        &mut self,
        net: &mut Net,
        _entry: &mut BTreeMap<String, UpdateList>,
        updates: UpdateList,
    ) -> Result<(), TransformError> {
        if self.at_origin {
            for (var, expr) in updates.0 {
                if self.origin_updates.0.iter().any(|(v, _)| *v == var) {
                    return Err(TransformError::UpdateCollision {
                        transition: format!("<entry of {}>", self.place),
                        var,
                    });
                }
                self.origin_updates.0.push((var, expr));
            }
        } else {
            for tid in &self.current_entries {
                let t = net
                    .transitions
                    .iter_mut()
                    .find(|t| t.id == *tid)
                    .expect("entry transition exists");
                for (var, expr) in &updates.0 {
                    if t.updates.0.iter().any(|(v, _)| v == var) {
                        return Err(TransformError::UpdateCollision {
                            transition: tid.clone(),
                            var: var.clone(),
                        });
                    }
                    t.updates.0.push((var.clone(), expr.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Appends one transmit-protocol hop to the chain: raise the transceiver
/// request on stage entry, wait for the application ACK flag, retry on
/// transceiver failure, time out into a wait-for-terminal-state stage.
fn build_tx_stage(
    net: &mut Net,
    chain: &mut Chain,
    entry: &mut BTreeMap<String, UpdateList>,
    node: &str,
    dest_id: i64,
    value: i64,
    cp: &ChannelParams,
) -> Result<(), TransformError> {
    let raise = UpdateList::new()
        .set_int(xcvr_var(node, "PTx"), value)
        .set_int(xcvr_var(node, "PTxMAC"), MAC_VALID)
        .set_int(xcvr_var(node, "TxDest"), dest_id)
        .set_int(xcvr_var(node, "Tx"), 1)
        .set_int(app_var(node, "RxAck"), 0)
        .set_int(xcvr_var(node, "Fail"), 0);
    chain.attach_updates(net, entry, raise)?;

    let wait = chain.current.clone();
    let k = chain.counter;
    let term = {
        chain.counter += 1;
        let id = format!("{}__term{}", chain.place, chain.counter);
        net.add_place(id.clone(), 0);
        id
    };
    let next = chain.fresh_stage(net);

    let got_ack = Expr::var_eq(app_var(node, "RxAck"), 1);
    let got_fail = Expr::var_eq(xcvr_var(node, "Fail"), 1);
    let re_raise = UpdateList::new()
        .set_int(xcvr_var(node, "Fail"), 0)
        .set_int(xcvr_var(node, "Tx"), 1);

    let tx_ok = Transition::new(format!("T{}__txOk{}", chain.place, k))
        .input(wait.clone(), 1)
        .output(next.clone(), 1)
        .guard(got_ack.clone());
    let term_ok = Transition::new(format!("T{}__termOk{}", chain.place, k))
        .input(term.clone(), 1)
        .output(next.clone(), 1)
        .guard(got_ack);
    net.add_transition(
        Transition::new(format!("T{}__txFail{}", chain.place, k))
            .input(wait.clone(), 1)
            .output(wait.clone(), 1)
            .guard(got_fail.clone())
            .updates(re_raise.clone()),
    );
    net.add_transition(
        Transition::new(format!("T{}__txTO{}", chain.place, k))
            .input(wait.clone(), 1)
            .output(term.clone(), 1)
            .interval(TimeInterval::exact(cp.t_wf_ack)),
    );
    net.add_transition(
        Transition::new(format!("T{}__termFail{}", chain.place, k))
            .input(term, 1)
            .output(wait, 1)
            .guard(got_fail)
            .updates(re_raise),
    );
    chain.advance(net, next, vec![tx_ok, term_ok]);
    Ok(())
}

struct CompiledCond {
    guard: Expr,
    consume: UpdateList,
}

fn compile_cond(
    cond: &Cond,
    sensors: &SensorBinding,
    mode: &Mode,
    tid: &str,
) -> Result<CompiledCond, TransformError> {
    let mut consume = UpdateList::new();
    let mut signal_atoms = 0usize;
    let guard = walk(cond, sensors, mode, tid, true, &mut consume, &mut signal_atoms)?;
    if signal_atoms > 1 {
        if let Mode::Channel { .. } = mode {
            return Err(TransformError::MultipleSignalAtoms(tid.to_string()));
        }
    }
    return Ok(CompiledCond { guard, consume });

    fn walk(
        cond: &Cond,
        sensors: &SensorBinding,
        mode: &Mode,
        tid: &str,
        conjunct_position: bool,
        consume: &mut UpdateList,
        signal_atoms: &mut usize,
    ) -> Result<Expr, TransformError> {
        match cond {
            Cond::True => Ok(Expr::Bool(true)),
            Cond::And(a, b) => {
                let ga = walk(a, sensors, mode, tid, conjunct_position, consume, signal_atoms)?;
                let gb = walk(b, sensors, mode, tid, conjunct_position, consume, signal_atoms)?;
                Ok(ga.conjoin(gb))
            }
            Cond::Or(a, b) => {
                let ga = walk(a, sensors, mode, tid, false, consume, signal_atoms)?;
                let gb = walk(b, sensors, mode, tid, false, consume, signal_atoms)?;
                Ok(Expr::or(ga, gb))
            }
            Cond::Not(a) => {
                let ga = walk(a, sensors, mode, tid, false, consume, signal_atoms)?;
                Ok(Expr::not(ga))
            }
            Cond::NameEquals { name, value } => {
                if let Some(binding) = sensors.0.get(name) {
                    return match value {
                        1 => Ok(binding.clone()),
                        0 => Ok(Expr::not(binding.clone())),
                        v => Err(TransformError::SensorValueNotBoolean {
                            name: name.clone(),
                            value: *v,
                        }),
                    };
                }
                // signal: reading consumes the buffered value
                if !conjunct_position {
                    return Err(TransformError::SignalInNonConjunctPosition(
                        tid.to_string(),
                    ));
                }
                *signal_atoms += 1;
                match mode {
                    Mode::Ideal => {
                        consume.0.push((name.clone(), Expr::Int(0)));
                        Ok(Expr::var_eq(name.clone(), *value))
                    }
                    Mode::Channel { topo, .. } => {
                        let buf = app_var(&topo.self_node, "RxBuf");
                        if !consume.0.iter().any(|(v, _)| *v == buf) {
                            consume.0.push((buf.clone(), Expr::Int(0)));
                        }
                        Ok(Expr::var_eq(buf, *value))
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipn::{CipnPlace, CipnTransition};
    use crate::time::rat;

    fn sensors() -> SensorBinding {
        SensorBinding::default().bind("Ret_Complete", Expr::marking_eq("plant.Pp_Init", 1))
    }

    fn simple_cipn() -> CipnModel {
        CipnModel {
            places: vec![
                CipnPlace {
                    id: "P_Init".into(),
                    actions: vec![Action::ActuatorSet {
                        name: "Act".into(),
                        value: 0,
                    }],
                },
                CipnPlace {
                    id: "P_Work".into(),
                    actions: vec![Action::ActuatorSet {
                        name: "Act".into(),
                        value: 1,
                    }],
                },
            ],
            transitions: vec![
                CipnTransition {
                    id: "T_go".into(),
                    condition: Cond::name_eq("Ret_Complete", 1),
                    inputs: vec!["P_Init".into()],
                    outputs: vec!["P_Work".into()],
                },
                CipnTransition {
                    id: "T_back".into(),
                    condition: Cond::name_eq("Ret_Complete", 0),
                    inputs: vec!["P_Work".into()],
                    outputs: vec!["P_Init".into()],
                },
            ],
            initial: vec!["P_Init".into()],
        }
    }

    fn bindings() -> ActuatorBinding {
        ActuatorBinding::default()
            .bind("Act", 0, "P_Init")
            .bind("Act", 1, "P_Work")
    }

    #[test]
    fn actionless_model_transforms_isomorphically() {
        let m = simple_cipn();
        let net = transform_ideal(&m, &sensors(), &bindings()).unwrap();
        assert_eq!(net.places, vec!["P_Init", "P_Work"]);
        assert_eq!(net.transitions.len(), 2);
        let go = net.transition("T_go").unwrap();
        assert_eq!(go.guard, Expr::marking_eq("plant.Pp_Init", 1));
        assert!(go.interval.is_immediate());
        let back = net.transition("T_back").unwrap();
        assert_eq!(back.guard, Expr::not(Expr::marking_eq("plant.Pp_Init", 1)));
    }

    #[test]
    fn transform_is_deterministic() {
        let m = simple_cipn();
        let a = transform_ideal(&m, &sensors(), &bindings()).unwrap();
        let b = transform_ideal(&m, &sensors(), &bindings()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbound_sensor_value_errors() {
        let mut m = simple_cipn();
        m.transitions[0].condition = Cond::name_eq("Ret_Complete", 3);
        assert!(matches!(
            transform_ideal(&m, &sensors(), &bindings()),
            Err(TransformError::SensorValueNotBoolean { .. })
        ));
    }

    #[test]
    fn unbound_actuator_errors() {
        let m = simple_cipn();
        let incomplete = ActuatorBinding::default().bind("Act", 0, "P_Init");
        assert!(matches!(
            transform_ideal(&m, &sensors(), &incomplete),
            Err(TransformError::UnboundActuator { .. })
        ));
    }

    #[test]
    fn delay_becomes_exact_timed_transition() {
        let mut m = simple_cipn();
        m.places[1].actions.push(Action::Delay {
            duration: rat(500, 1),
        });
        let net = transform_ideal(&m, &sensors(), &bindings()).unwrap();
        let delay = net.transition("TP_Work__delay1").unwrap();
        assert_eq!(delay.interval, TimeInterval::exact(rat(500, 1)));
        // outgoing condition moved to the post-delay stage
        let back = net.transition("T_back").unwrap();
        assert_eq!(back.inputs[0].0, "P_Work__s1");
    }

    #[test]
    fn delay_with_fanout_rejected() {
        let mut m = simple_cipn();
        m.places[0].actions.push(Action::Delay {
            duration: rat(1, 1),
        });
        m.places.push(CipnPlace {
            id: "P_Other".into(),
            actions: vec![],
        });
        m.transitions.push(CipnTransition {
            id: "T_alt".into(),
            condition: Cond::name_eq("Ret_Complete", 1),
            inputs: vec!["P_Init".into()],
            outputs: vec!["P_Other".into()],
        });
        assert!(matches!(
            transform_ideal(&m, &sensors(), &bindings()),
            Err(TransformError::DelayFanout(_))
        ));
    }

    #[test]
    fn ideal_send_updates_shared_signal_and_receive_consumes() {
        let mut m = simple_cipn();
        m.places[1].actions.push(Action::Send {
            dests: None,
            signal: "Done".into(),
            value: 1,
        });
        m.transitions[1].condition = Cond::name_eq("Ack", 1);
        let net = transform_ideal(&m, &sensors(), &bindings()).unwrap();
        assert!(net.has_variable("Done"));
        assert!(net.has_variable("Ack"));
        // the raise rides on the transition entering the sending place
        let go = net.transition("T_go").unwrap();
        assert!(go.updates.0.contains(&("Done".into(), Expr::Int(1))));
        // the receive consumes
        let back = net.transition("T_back").unwrap();
        assert_eq!(back.guard, Expr::var_eq("Ack", 1));
        assert!(back.updates.0.contains(&("Ack".into(), Expr::Int(0))));
    }

    fn topo() -> ChannelTopology {
        ChannelTopology {
            self_node: "A".into(),
            nodes: vec!["A".into(), "B".into()],
            receivers: [("Done".to_string(), vec!["B".to_string()])].into(),
        }
    }

    #[test]
    fn channel_send_expands_to_tx_subnet() {
        let mut m = simple_cipn();
        m.places[1].actions.push(Action::Send {
            dests: None,
            signal: "Done".into(),
            value: 1,
        });
        let net = transform_channel(
            &m,
            &sensors(),
            &bindings(),
            &SecurityConfig::off(),
            &topo(),
            &ChannelParams::default(),
        )
        .unwrap();
        // raise on entry of the sending place
        let go = net.transition("T_go").unwrap();
        assert!(go
            .updates
            .0
            .contains(&(xcvr_var("A", "Tx"), Expr::Int(1))));
        assert!(go
            .updates
            .0
            .contains(&(xcvr_var("A", "TxDest"), Expr::Int(2))));
        // the protocol stages exist and the outgoing condition moved
        assert!(net.transition("TP_Work__txOk0").is_some());
        assert!(net.transition("TP_Work__txFail0").is_some());
        assert!(net.transition("TP_Work__txTO0").is_some());
        let back = net.transition("T_back").unwrap();
        assert_eq!(back.inputs[0].0, "P_Work__s2");
    }

    #[test]
    fn channel_receive_guards_on_buffer_with_consumption() {
        let mut m = simple_cipn();
        m.transitions[0].condition = Cond::name_eq("Go", 2);
        let net = transform_channel(
            &m,
            &sensors(),
            &bindings(),
            &SecurityConfig::off(),
            &topo(),
            &ChannelParams::default(),
        )
        .unwrap();
        let go = net.transition("T_go").unwrap();
        assert_eq!(go.guard, Expr::var_eq(app_var("A", "RxBuf"), 2));
        assert!(go
            .updates
            .0
            .contains(&(app_var("A", "RxBuf"), Expr::Int(0))));
    }

    #[test]
    fn auth_patch_adds_mac_guard_via_transform() {
        let mut m = simple_cipn();
        m.transitions[0].condition = Cond::name_eq("Go", 2);
        let sec = SecurityConfig {
            auth_enabled: true,
            ..SecurityConfig::off()
        };
        let net = transform_channel(
            &m,
            &sensors(),
            &bindings(),
            &sec,
            &topo(),
            &ChannelParams::default(),
        )
        .unwrap();
        let go = net.transition("T_go").unwrap();
        let mut vars = BTreeSet::new();
        go.guard.variables(&mut vars);
        assert!(vars.contains(&app_var("A", "RxMAC")));
        assert!(net.has_place("P_Intrusion"));
    }

    #[test]
    fn retry_limit_patch_threads_counter() {
        let mut m = simple_cipn();
        m.places[1].actions.push(Action::Send {
            dests: None,
            signal: "Done".into(),
            value: 1,
        });
        let sec = SecurityConfig {
            auth_enabled: false,
            app_retry_limit: Some(5),
            dos_detect: true,
        };
        let net = transform_channel(
            &m,
            &sensors(),
            &bindings(),
            &sec,
            &topo(),
            &ChannelParams::default(),
        )
        .unwrap();
        assert!(net.has_place("P_DoSdetect"));
        assert!(net.transition("TP_Work__txFail0__dosDetect").is_some());
        let fail = net.transition("TP_Work__txFail0").unwrap();
        let mut vars = BTreeSet::new();
        fail.guard.variables(&mut vars);
        assert!(vars.contains(&app_var("A", "AppTxCnt")));
    }

    #[test]
    fn broadcast_needs_receivers() {
        let mut m = simple_cipn();
        m.places[1].actions.push(Action::Send {
            dests: None,
            signal: "Nobody".into(),
            value: 1,
        });
        assert!(matches!(
            transform_channel(
                &m,
                &sensors(),
                &bindings(),
                &SecurityConfig::off(),
                &topo(),
                &ChannelParams::default(),
            ),
            Err(TransformError::BroadcastWithoutReceivers(_))
        ));
    }

    #[test]
    fn send_in_initial_place_rejected() {
        let mut m = simple_cipn();
        m.places[0].actions.push(Action::Send {
            dests: Some(vec!["B".into()]),
            signal: "Done".into(),
            value: 1,
        });
        assert!(matches!(
            transform_channel(
                &m,
                &sensors(),
                &bindings(),
                &SecurityConfig::off(),
                &topo(),
                &ChannelParams::default(),
            ),
            Err(TransformError::SendInInitialPlace(_))
        ));
    }
}
