//! Security-aware communication models: the radio transceiver state
//! machine, the half-duplex acknowledge-required unicast CSMA-CA channel,
//! the attacker submodels extending it, and the security-patch rewrites.
//!
//! Composition conventions: the transceiver net of node `N` is composed
//! under namespace `Nxcvr` (see [`xcvr_namespace`]); all cross-net flags
//! and buffers are shared variables whose names carry the node prefix
//! (`NXCVR_Tx`, `N_RxBuf`, ...), so composition merges them by name.

use crate::expr::{CmpOp, Expr, UpdateList};
use crate::net::{Net, Transition};
use crate::time::{Rat, TimeBound, TimeInterval};
use crate::validate::Diagnostic;
use thiserror::Error;

pub const MAC_VALID: i64 = 1;
pub const MAC_INVALID: i64 = 0;

/// Namespace a node's transceiver net is composed under.
pub fn xcvr_namespace(node: &str) -> String {
    format!("{}xcvr", node)
}

/// Transceiver-level shared variable (`NXCVR_<suffix>`).
pub fn xcvr_var(node: &str, suffix: &str) -> String {
    format!("{}XCVR_{}", node, suffix)
}

/// Application-level shared variable (`N_<suffix>`).
pub fn app_var(node: &str, suffix: &str) -> String {
    format!("{}_{}", node, suffix)
}

/// Wire id of a node: its 1-based position in the sorted node list.
pub fn node_wire_id(nodes: &[String], node: &str) -> Option<i64> {
    nodes.iter().position(|n| n == node).map(|i| i as i64 + 1)
}

/// Initial value of a shared communication variable. MAC tags idle at
/// VALID; everything else clears to zero.
pub fn comm_var_initial(name: &str) -> i64 {
    if name.ends_with("MAC") {
        MAC_VALID
    } else {
        0
    }
}

/// Channel and transceiver timing parameters. Times are in the model's
/// canonical unit (milliseconds by configuration convention).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelParams {
    /// Message transmission time bounds.
    pub t_tx_msg: TimeInterval,
    /// ACK transmission time bounds.
    pub t_tx_ack: TimeInterval,
    /// Clear-channel-assessment back-off bounds.
    pub t_boff: TimeInterval,
    /// Data-link-layer ACK timeout (exact).
    pub t_ack_to: Rat,
    /// Application-level ACK timeout (exact).
    pub t_wf_ack: Rat,
    /// Channel contention time under denial-of-service (bounds).
    pub t_dos: TimeInterval,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            t_tx_msg: TimeInterval::closed(Rat::from_integer(4), Rat::from_integer(6)),
            t_tx_ack: TimeInterval::closed(Rat::from_integer(1), Rat::from_integer(2)),
            t_boff: TimeInterval::closed(Rat::new(3, 10), Rat::from_integer(5)),
            t_ack_to: Rat::from_integer(10),
            t_wf_ack: Rat::from_integer(50),
            t_dos: TimeInterval::closed(Rat::from_integer(0), Rat::from_integer(100)),
        }
    }
}

impl ChannelParams {
    /// Uniformly scales every bound (parameter-independence sweeps).
    pub fn scaled(&self, factor: Rat) -> Self {
        ChannelParams {
            t_tx_msg: self.t_tx_msg.scaled(factor),
            t_tx_ack: self.t_tx_ack.scaled(factor),
            t_boff: self.t_boff.scaled(factor),
            t_ack_to: self.t_ack_to * factor,
            t_wf_ack: self.t_wf_ack * factor,
            t_dos: self.t_dos.scaled(factor),
        }
    }

    /// Parameter invariants: positive lower bounds (except the DoS
    /// contention time, which may start at 0) and an ACK timeout that
    /// outlasts the slowest legitimate ACK.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let zero = Rat::from_integer(0);
        for (name, iv) in [
            ("t_tx_msg", &self.t_tx_msg),
            ("t_tx_ack", &self.t_tx_ack),
            ("t_boff", &self.t_boff),
        ] {
            if let Err(msg) = iv.check() {
                diags.push(Diagnostic::error(format!("channel {}", name), msg));
            }
            if iv.lower <= zero {
                diags.push(Diagnostic::error(
                    format!("channel {}", name),
                    "lower bound must be positive",
                ));
            }
        }
        if let Err(msg) = self.t_dos.check() {
            diags.push(Diagnostic::error("channel t_dos", msg));
        }
        if self.t_ack_to <= zero {
            diags.push(Diagnostic::error("channel t_ack_to", "must be positive"));
        }
        if self.t_wf_ack <= zero {
            diags.push(Diagnostic::error("channel t_wf_ack", "must be positive"));
        }
        match self.t_tx_ack.upper {
            TimeBound::Finite(hi) if self.t_ack_to > hi => {}
            TimeBound::Finite(_) => diags.push(Diagnostic::error(
                "channel t_ack_to",
                "must exceed the ACK transmission upper bound, else legitimate ACKs always time out",
            )),
            TimeBound::Infinite => diags.push(Diagnostic::error(
                "channel t_tx_ack",
                "ACK transmission time must be bounded",
            )),
        }
        diags
    }
}

/// Transceiver parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XcvrParams {
    /// Data-link retransmission budget before the transceiver signals
    /// failure to the application (3 for the modeled radio).
    pub max_datalink_retries: u32,
    /// When set, denied channel-access attempts increment the global
    /// `ChDenCnt`; enabled by the pipeline when the DoS attacker is
    /// bounded by consecutive denials.
    pub count_denials: bool,
}

impl Default for XcvrParams {
    fn default() -> Self {
        XcvrParams {
            max_datalink_retries: 3,
            count_denials: false,
        }
    }
}

/// Denial-of-service attacker: seizes the idle channel nondeterministically
/// and holds it for a contention time in `t_dos`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DosAttack {
    /// `None`: the attacker may deny access forever. `Some(k)`: at most
    /// `k` consecutive denied access attempts between successful
    /// legitimate deliveries.
    pub max_consecutive_denials: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsgModify {
    /// Payload the attacker writes in place of the transmitted one.
    pub payload: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masquerade {
    /// Payload crafted by the attacker.
    pub payload: i64,
    /// Impersonated `(sender, receiver)` pairs.
    pub target_pairs: Vec<(String, String)>,
}

/// Which adversary capabilities the composed model includes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttackConfig {
    pub dos: Option<DosAttack>,
    pub ack_intercept: bool,
    pub ack_spoof: bool,
    pub msg_modify: Option<MsgModify>,
    pub msg_intercept: bool,
    pub masquerade: Option<Masquerade>,
}

impl AttackConfig {
    pub fn none() -> Self {
        AttackConfig::default()
    }

    pub fn any_enabled(&self) -> bool {
        self.dos.is_some()
            || self.ack_intercept
            || self.ack_spoof
            || self.msg_modify.is_some()
            || self.msg_intercept
            || self.masquerade.is_some()
    }

    /// True when the DoS attacker is present and bounded.
    pub fn dos_bounded(&self) -> bool {
        matches!(
            self.dos,
            Some(DosAttack {
                max_consecutive_denials: Some(_)
            })
        )
    }
}

/// Which security patches the model includes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SecurityConfig {
    /// Payload authentication: receive transitions gain a MAC guard and
    /// an intrusion-detection branch. ACKs deliberately carry no tag.
    pub auth_enabled: bool,
    /// Application-level retransmission budget; `None` is unbounded.
    /// A finite budget adds the DoS-detection branch.
    pub app_retry_limit: Option<u32>,
    pub dos_detect: bool,
}

impl SecurityConfig {
    pub fn off() -> Self {
        SecurityConfig::default()
    }

    pub fn check(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        if self.dos_detect && self.app_retry_limit.is_none() {
            diags.push(Diagnostic::error(
                "security",
                "dos_detect requires a finite app_retry_limit",
            ));
        }
        diags
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CommError {
    #[error("channel needs at least two nodes")]
    TooFewNodes,
    #[error("masquerade target pair references unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid parameters:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    BadParams(Vec<Diagnostic>),
    #[error("security patch targets absent: {0}")]
    PatchTargetsAbsent(String),
}

fn guard_ch_idle() -> Expr {
    Expr::var_eq("ChBusy", 0)
}

fn guard_ch_busy() -> Expr {
    Expr::var_eq("ChBusy", 1)
}

/// Builds the transceiver net for one node: the RF state machine with
/// listening, transmitting-packet, waiting-for-ACK, and transmitting-ACK
/// states, clear-channel assessment gated on the shared `ChBusy` flag,
/// and the data-link retry counter.
///
/// Denied access attempts count against the retry budget: a back-off
/// window spent with the channel busy is a failed attempt, so a
/// persistently seized channel drives the transceiver to a terminal
/// failure that the application layer can observe.
pub fn make_transceiver(node: &str, xp: &XcvrParams, cp: &ChannelParams) -> Net {
    let k = xp.max_datalink_retries as i64;
    let v = |suffix: &str| xcvr_var(node, suffix);
    let a = |suffix: &str| app_var(node, suffix);

    let mut net = Net::new();
    net.add_place("PListen", 1);
    net.add_place("PBoff", 0);
    net.add_place("PTxMsg", 0);
    net.add_place("PWfAck", 0);
    net.add_place("PTxAck", 0);

    for suffix in [
        "Tx", "Txd", "Rx", "RxAck", "TxAck", "AckSent", "Fail", "TxCnt", "PTx", "PTxMAC",
        "PRx", "PRxMAC", "TxDest",
    ] {
        let name = v(suffix);
        net.add_variable(name.clone(), comm_var_initial(&name));
    }
    for suffix in ["RxBuf", "RxMAC", "RxAck"] {
        let name = a(suffix);
        net.add_variable(name.clone(), comm_var_initial(&name));
    }
    net.add_variable("ChBusy", 0);
    if xp.count_denials {
        net.add_variable("ChDenCnt", 0);
    }

    let deny_count = |u: UpdateList| {
        if xp.count_denials {
            u.set(
                "ChDenCnt",
                Expr::add(Expr::var("ChDenCnt"), Expr::Int(1)),
            )
        } else {
            u
        }
    };

    // application raised the transmit request
    net.add_transition(
        Transition::new("Ttx_req")
            .input("PListen", 1)
            .output("PBoff", 1)
            .guard(Expr::var_eq(v("Tx"), 1))
            .updates(
                UpdateList::new()
                    .set_int(v("Tx"), 0)
                    .set_int(v("TxCnt"), 0)
                    .set_int(v("RxAck"), 0),
            ),
    );
    // clear channel assessment: transmit after a clean back-off window
    net.add_transition(
        Transition::new("Ttx_ccaOk")
            .input("PBoff", 1)
            .output("PTxMsg", 1)
            .guard(guard_ch_idle())
            .interval(cp.t_boff.clone()),
    );
    // denied access attempt within budget: burn a retry and back off again
    net.add_transition(
        Transition::new("Ttx_ccaBusy")
            .input("PBoff", 1)
            .output("PBoff", 1)
            .guard(Expr::and(
                guard_ch_busy(),
                Expr::cmp(CmpOp::Lt, Expr::var(v("TxCnt")), Expr::Int(k)),
            ))
            .interval(cp.t_boff.clone())
            .updates(deny_count(UpdateList::new().set(
                v("TxCnt"),
                Expr::add(Expr::var(v("TxCnt")), Expr::Int(1)),
            ))),
    );
    // budget exhausted while the channel stays busy: report failure
    net.add_transition(
        Transition::new("Ttx_ccaFail")
            .input("PBoff", 1)
            .output("PListen", 1)
            .guard(Expr::and(
                guard_ch_busy(),
                Expr::cmp(CmpOp::Ge, Expr::var(v("TxCnt")), Expr::Int(k)),
            ))
            .interval(cp.t_boff.clone())
            .updates(deny_count(UpdateList::new().set_int(v("Fail"), 1))),
    );
    // channel finished carrying our packet
    net.add_transition(
        Transition::new("Ttx_txd")
            .input("PTxMsg", 1)
            .output("PWfAck", 1)
            .guard(Expr::var_eq(v("Txd"), 1))
            .updates(UpdateList::new().set_int(v("Txd"), 0)),
    );
    // ACK received: report success to the application
    net.add_transition(
        Transition::new("Ttx_ackOk")
            .input("PWfAck", 1)
            .output("PListen", 1)
            .guard(Expr::var_eq(v("RxAck"), 1))
            .updates(
                UpdateList::new()
                    .set_int(v("RxAck"), 0)
                    .set_int(a("RxAck"), 1),
            ),
    );
    // ACK timeout: retransmit within budget
    net.add_transition(
        Transition::new("Ttx_ackTO")
            .input("PWfAck", 1)
            .output("PBoff", 1)
            .guard(Expr::cmp(CmpOp::Lt, Expr::var(v("TxCnt")), Expr::Int(k)))
            .interval(TimeInterval::exact(cp.t_ack_to))
            .updates(UpdateList::new().set(
                v("TxCnt"),
                Expr::add(Expr::var(v("TxCnt")), Expr::Int(1)),
            )),
    );
    net.add_transition(
        Transition::new("Ttx_ackTOFail")
            .input("PWfAck", 1)
            .output("PListen", 1)
            .guard(Expr::cmp(CmpOp::Ge, Expr::var(v("TxCnt")), Expr::Int(k)))
            .interval(TimeInterval::exact(cp.t_ack_to))
            .updates(UpdateList::new().set_int(v("Fail"), 1)),
    );
    // reception: copy the payload up and acknowledge
    net.add_transition(
        Transition::new("Trx_ack")
            .input("PListen", 1)
            .output("PTxAck", 1)
            .guard(Expr::var_eq(v("Rx"), 1))
            .updates(
                UpdateList::new()
                    .set_int(v("Rx"), 0)
                    .set(a("RxBuf"), Expr::var(v("PRx")))
                    .set(a("RxMAC"), Expr::var(v("PRxMAC")))
                    .set_int(v("TxAck"), 1),
            ),
    );
    net.add_transition(
        Transition::new("Trx_done")
            .input("PTxAck", 1)
            .output("PListen", 1)
            .guard(Expr::var_eq(v("AckSent"), 1))
            .updates(UpdateList::new().set_int(v("AckSent"), 0)),
    );
    net
}

/// Builds the channel net for the given nodes over the given directed
/// communication pairs, extended with exactly the enabled attack branches.
///
/// The nominal flow per pair `(s, r)`: idle -> busy-with-message (bounds
/// `t_tx_msg`, payload copied into the receiver transceiver if it is
/// listening, lost otherwise) -> waiting for the receiver's ACK ->
/// busy-with-ACK (bounds `t_tx_ack`) -> idle. `ChBusy` is held across the
/// whole exchange; the channel is strictly half-duplex.
pub fn make_channel(
    nodes: &[String],
    pairs: &[(String, String)],
    cp: &ChannelParams,
    attack: &AttackConfig,
) -> Result<Net, CommError> {
    if nodes.len() < 2 {
        return Err(CommError::TooFewNodes);
    }
    let params = cp.check();
    if !params.is_empty() {
        return Err(CommError::BadParams(params));
    }
    if let Some(masq) = &attack.masquerade {
        for (s, r) in &masq.target_pairs {
            for n in [s, r] {
                if node_wire_id(nodes, n).is_none() {
                    return Err(CommError::UnknownNode(n.clone()));
                }
            }
        }
    }

    let mut net = Net::new();
    net.add_place("Pch_Idle", 1);
    net.add_variable("ChBusy", 0);
    let bounded_dos = attack.dos_bounded();
    if bounded_dos {
        net.add_variable("ChDenCnt", 0);
    }

    let mut declared: std::collections::BTreeSet<String> = Default::default();
    let mut declare = |net: &mut Net, name: String| {
        if declared.insert(name.clone()) {
            let init = comm_var_initial(&name);
            net.add_variable(name, init);
        }
    };

    for (s, r) in pairs {
        let sid = node_wire_id(nodes, s).ok_or_else(|| CommError::UnknownNode(s.clone()))?;
        let _ = sid;
        let rid = node_wire_id(nodes, r).ok_or_else(|| CommError::UnknownNode(r.clone()))?;
        for suffix in ["PTx", "PTxMAC", "TxDest", "Txd", "RxAck"] {
            declare(&mut net, xcvr_var(s, suffix));
        }
        for suffix in ["PRx", "PRxMAC", "Rx", "TxAck", "AckSent"] {
            declare(&mut net, xcvr_var(r, suffix));
        }

        let p_msg = format!("Pch_Msg_{}_{}", s, r);
        let p_ackwait = format!("Pch_AckWait_{}_{}", s, r);
        let p_ack = format!("Pch_Ack_{}_{}", s, r);
        net.add_place(p_msg.clone(), 0);
        net.add_place(p_ackwait.clone(), 0);
        net.add_place(p_ack.clone(), 0);

        let sender_transmitting = Expr::and(
            Expr::marking_eq(format!("{}.PTxMsg", xcvr_namespace(s)), 1),
            Expr::var_eq(xcvr_var(s, "TxDest"), rid),
        );
        let receiver_listening = Expr::marking_eq(format!("{}.PListen", xcvr_namespace(r)), 1);

        net.add_transition(
            Transition::new(format!("Tch_MsgStart_{}_{}", s, r))
                .input("Pch_Idle", 1)
                .output(p_msg.clone(), 1)
                .guard(sender_transmitting)
                .updates(UpdateList::new().set_int("ChBusy", 1)),
        );
        let mut deliver_updates = UpdateList::new()
            .set(xcvr_var(r, "PRx"), Expr::var(xcvr_var(s, "PTx")))
            .set(xcvr_var(r, "PRxMAC"), Expr::var(xcvr_var(s, "PTxMAC")))
            .set_int(xcvr_var(r, "Rx"), 1)
            .set_int(xcvr_var(s, "Txd"), 1);
        if bounded_dos {
            // a completed legitimate delivery resets the denial budget
            deliver_updates = deliver_updates.set_int("ChDenCnt", 0);
        }
        net.add_transition(
            Transition::new(format!("Tch_MsgDeliver_{}_{}", s, r))
                .input(p_msg.clone(), 1)
                .output(p_ackwait.clone(), 1)
                .guard(receiver_listening.clone())
                .interval(cp.t_tx_msg.clone())
                .updates(deliver_updates),
        );
        // receiver not listening: transmission completes into the void
        net.add_transition(
            Transition::new(format!("Tch_MsgLost_{}_{}", s, r))
                .input(p_msg.clone(), 1)
                .output("Pch_Idle", 1)
                .guard(Expr::marking_eq(format!("{}.PListen", xcvr_namespace(r)), 0))
                .interval(cp.t_tx_msg.clone())
                .updates(
                    UpdateList::new()
                        .set_int(xcvr_var(s, "Txd"), 1)
                        .set_int("ChBusy", 0),
                ),
        );
        net.add_transition(
            Transition::new(format!("Tch_AckStart_{}_{}", s, r))
                .input(p_ackwait.clone(), 1)
                .output(p_ack.clone(), 1)
                .guard(Expr::var_eq(xcvr_var(r, "TxAck"), 1))
                .updates(UpdateList::new().set_int(xcvr_var(r, "TxAck"), 0)),
        );
        net.add_transition(
            Transition::new(format!("Tch_AckDone_{}_{}", s, r))
                .input(p_ack.clone(), 1)
                .output("Pch_Idle", 1)
                .interval(cp.t_tx_ack.clone())
                .updates(
                    UpdateList::new()
                        .set_int(xcvr_var(s, "RxAck"), 1)
                        .set_int(xcvr_var(r, "AckSent"), 1)
                        .set_int("ChBusy", 0),
                ),
        );

        // ACK interception: the ACK transmission completes but the
        // transmitter-side reception flag is never raised
        if attack.ack_intercept {
            net.add_transition(
                Transition::new(format!("Tch_AckInt_{}_{}", s, r))
                    .input(p_ack.clone(), 1)
                    .output("Pch_Idle", 1)
                    .interval(cp.t_tx_ack.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(r, "AckSent"), 1)
                            .set_int("ChBusy", 0),
                    ),
            );
        }

        // ACK spoofing: firable while the targeted transmitter waits for
        // an ACK and the targeted receiver is not acknowledging; sets the
        // transmitter's reception flag with no receiver involvement
        if attack.ack_spoof {
            let p_spoof = format!("Pch_SpoofAck_{}_{}", s, r);
            net.add_place(p_spoof.clone(), 0);
            net.add_transition(
                Transition::new(format!("Tch_AckSpoofStart_{}_{}", s, r))
                    .input("Pch_Idle", 1)
                    .output(p_spoof.clone(), 1)
                    .guard(Expr::and(
                        Expr::marking_eq(format!("{}.PWfAck", xcvr_namespace(s)), 1),
                        Expr::marking_eq(format!("{}.PTxAck", xcvr_namespace(r)), 0),
                    ))
                    .updates(UpdateList::new().set_int("ChBusy", 1)),
            );
            net.add_transition(
                Transition::new(format!("Tch_AckSpoofDone_{}_{}", s, r))
                    .input(p_spoof, 1)
                    .output("Pch_Idle", 1)
                    .interval(cp.t_tx_ack.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(s, "RxAck"), 1)
                            .set_int("ChBusy", 0),
                    ),
            );
        }

        // message modification: alternate delivery carrying the attacker
        // payload; the receiver acknowledges normally
        if let Some(m) = &attack.msg_modify {
            net.add_transition(
                Transition::new(format!("Tch_MsgMod_{}_{}", s, r))
                    .input(p_msg.clone(), 1)
                    .output(p_ackwait.clone(), 1)
                    .guard(receiver_listening.clone())
                    .interval(cp.t_tx_msg.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(r, "PRx"), m.payload)
                            .set_int(xcvr_var(r, "PRxMAC"), MAC_INVALID)
                            .set_int(xcvr_var(r, "Rx"), 1)
                            .set_int(xcvr_var(s, "Txd"), 1),
                    ),
            );
        }

        // message interception: all receiver-side updates omitted
        if attack.msg_intercept {
            net.add_transition(
                Transition::new(format!("Tch_MsgInt_{}_{}", s, r))
                    .input(p_msg.clone(), 1)
                    .output("Pch_Idle", 1)
                    .interval(cp.t_tx_msg.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(s, "Txd"), 1)
                            .set_int("ChBusy", 0),
                    ),
            );
        }
    }

    // denial of service: seize the idle channel at any time, hold it for
    // a contention time in t_dos
    if let Some(dos) = &attack.dos {
        net.add_place("Pch_Dos", 0);
        let mut seize = Transition::new("Tch_DosSeize")
            .input("Pch_Idle", 1)
            .output("Pch_Dos", 1)
            .updates(UpdateList::new().set_int("ChBusy", 1));
        if let Some(kmax) = dos.max_consecutive_denials {
            seize = seize.guard(Expr::cmp(
                CmpOp::Lt,
                Expr::var("ChDenCnt"),
                Expr::Int(kmax as i64),
            ));
        }
        net.add_transition(seize);
        net.add_transition(
            Transition::new("Tch_DosRelease")
                .input("Pch_Dos", 1)
                .output("Pch_Idle", 1)
                .interval(cp.t_dos.clone())
                .updates(UpdateList::new().set_int("ChBusy", 0)),
        );
        if let Some(kmax) = dos.max_consecutive_denials {
            // the bounded attacker releases the channel once it has
            // denied its quota of access attempts
            net.add_transition(
                Transition::new("Tch_DosCutoff")
                    .input("Pch_Dos", 1)
                    .output("Pch_Idle", 1)
                    .guard(Expr::cmp(
                        CmpOp::Ge,
                        Expr::var("ChDenCnt"),
                        Expr::Int(kmax as i64),
                    ))
                    .updates(UpdateList::new().set_int("ChBusy", 0)),
            );
        }
    }

    // masquerade: impersonate a transmission whenever the channel is
    // free, the targeted receiver can hear it, and the impersonated
    // sender is not itself mid-send; the receiver acknowledges into the
    // attacker's hands
    if let Some(masq) = &attack.masquerade {
        for (s, r) in &masq.target_pairs {
            let p_masq = format!("Pch_Masq_{}_{}", s, r);
            let p_mack_wait = format!("Pch_MasqAckWait_{}_{}", s, r);
            let p_mack = format!("Pch_MasqAck_{}_{}", s, r);
            net.add_place(p_masq.clone(), 0);
            net.add_place(p_mack_wait.clone(), 0);
            net.add_place(p_mack.clone(), 0);
            for suffix in ["PRx", "PRxMAC", "Rx", "TxAck", "AckSent"] {
                declare(&mut net, xcvr_var(r, suffix));
            }
            let sxn = xcvr_namespace(s);
            let not_sending = Expr::and(
                Expr::and(
                    Expr::marking_eq(format!("{}.PBoff", sxn), 0),
                    Expr::marking_eq(format!("{}.PTxMsg", sxn), 0),
                ),
                Expr::marking_eq(format!("{}.PWfAck", sxn), 0),
            );
            net.add_transition(
                Transition::new(format!("Tch_MasqStart_{}_{}", s, r))
                    .input("Pch_Idle", 1)
                    .output(p_masq.clone(), 1)
                    .guard(Expr::and(
                        Expr::marking_eq(format!("{}.PListen", xcvr_namespace(r)), 1),
                        not_sending,
                    ))
                    .updates(UpdateList::new().set_int("ChBusy", 1)),
            );
            net.add_transition(
                Transition::new(format!("Tch_MasqDeliver_{}_{}", s, r))
                    .input(p_masq.clone(), 1)
                    .output(p_mack_wait.clone(), 1)
                    .guard(Expr::marking_eq(format!("{}.PListen", xcvr_namespace(r)), 1))
                    .interval(cp.t_tx_msg.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(r, "PRx"), masq.payload)
                            .set_int(xcvr_var(r, "PRxMAC"), MAC_INVALID)
                            .set_int(xcvr_var(r, "Rx"), 1),
                    ),
            );
            net.add_transition(
                Transition::new(format!("Tch_MasqLost_{}_{}", s, r))
                    .input(p_masq, 1)
                    .output("Pch_Idle", 1)
                    .guard(Expr::marking_eq(format!("{}.PListen", xcvr_namespace(r)), 0))
                    .interval(cp.t_tx_msg.clone())
                    .updates(UpdateList::new().set_int("ChBusy", 0)),
            );
            net.add_transition(
                Transition::new(format!("Tch_MasqAckStart_{}_{}", s, r))
                    .input(p_mack_wait, 1)
                    .output(p_mack.clone(), 1)
                    .guard(Expr::var_eq(xcvr_var(r, "TxAck"), 1))
                    .updates(UpdateList::new().set_int(xcvr_var(r, "TxAck"), 0)),
            );
            // the spoofed exchange's ACK ends at the attacker: no
            // transmitter-side flag
            net.add_transition(
                Transition::new(format!("Tch_MasqAckDone_{}_{}", s, r))
                    .input(p_mack, 1)
                    .output("Pch_Idle", 1)
                    .interval(cp.t_tx_ack.clone())
                    .updates(
                        UpdateList::new()
                            .set_int(xcvr_var(r, "AckSent"), 1)
                            .set_int("ChBusy", 0),
                    ),
            );
        }
    }

    Ok(net)
}

/// All ordered pairs over `nodes`.
pub fn all_pairs(nodes: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in nodes {
        for r in nodes {
            if s != r {
                out.push((s.clone(), r.clone()));
            }
        }
    }
    out
}

/// Rewrites a controller net produced by the channel-mode transform,
/// adding the configured security services. Idempotent.
///
/// Authentication adds a MAC-validity conjunct to every receive transition
/// (those guarded on the node's `_RxBuf`) plus an intrusion-detection
/// branch out of each receiving place. A finite application retry limit
/// threads a retry counter through the retry/success transitions
/// (recognized by their `__txFail`/`__termFail`/`__txOk`/`__termOk` name
/// suffixes) and adds the detection place `P_DoSdetect` reached when the
/// budget is exhausted.
pub fn apply_security_patches(net: &Net, sec: &SecurityConfig) -> Result<Net, CommError> {
    let sec_diags = sec.check();
    if !sec_diags.is_empty() {
        return Err(CommError::BadParams(sec_diags));
    }
    let mut out = net.clone();
    if sec.auth_enabled {
        patch_auth(&mut out)?;
    }
    if let Some(limit) = sec.app_retry_limit {
        patch_retry_limit(&mut out, limit)?;
    }
    Ok(out)
}

fn guard_mentions_var_suffix(e: &Expr, suffix: &str) -> Option<String> {
    let mut vars = std::collections::BTreeSet::new();
    e.variables(&mut vars);
    vars.into_iter().find(|v| v.ends_with(suffix))
}

fn patch_auth(net: &mut Net) -> Result<(), CommError> {
    let mut receiving_places: Vec<(String, String)> = Vec::new(); // (place, node)
    let mut patched_any = false;
    for t in &mut net.transitions {
        let Some(buf_var) = guard_mentions_var_suffix(&t.guard, "_RxBuf") else {
            continue;
        };
        patched_any = true;
        let node = buf_var.trim_end_matches("_RxBuf").to_string();
        let mac_var = app_var(&node, "RxMAC");
        if guard_mentions_var_suffix(&t.guard, "_RxMAC").is_some() {
            continue; // already authenticated
        }
        t.guard = t
            .guard
            .clone()
            .conjoin(Expr::var_eq(mac_var, MAC_VALID));
        for (p, _) in &t.inputs {
            if !receiving_places.iter().any(|(q, _)| q == p) {
                receiving_places.push((p.clone(), node.clone()));
            }
        }
    }
    if !patched_any {
        return Err(CommError::PatchTargetsAbsent(
            "authentication requested but the net has no receive transitions".into(),
        ));
    }
    if receiving_places.is_empty() {
        return Ok(());
    }
    if !net.has_place("P_Intrusion") {
        net.add_place("P_Intrusion", 0);
    }
    for (place, node) in receiving_places {
        let tid = format!("T{}__intrusion", place);
        if net.transition(&tid).is_some() {
            continue;
        }
        net.add_transition(
            Transition::new(tid)
                .input(place, 1)
                .output("P_Intrusion", 1)
                .guard(Expr::var_eq(app_var(&node, "RxMAC"), MAC_INVALID)),
        );
    }
    Ok(())
}

fn patch_retry_limit(net: &mut Net, limit: u32) -> Result<(), CommError> {
    let is_retry = |id: &str| id.contains("__txFail") || id.contains("__termFail");
    let is_ok = |id: &str| id.contains("__txOk") || id.contains("__termOk");
    if !net.transitions.iter().any(|t| is_retry(&t.id)) {
        return Err(CommError::PatchTargetsAbsent(
            "retry limit requested but the net has no transmit retry transitions".into(),
        ));
    }
    // node name from any failure-flag reference
    let node = net
        .transitions
        .iter()
        .filter(|t| is_retry(&t.id))
        .find_map(|t| guard_mentions_var_suffix(&t.guard, "XCVR_Fail"))
        .map(|v| v.trim_end_matches("XCVR_Fail").to_string())
        .ok_or_else(|| {
            CommError::PatchTargetsAbsent("retry transitions carry no failure guard".into())
        })?;
    let cnt = app_var(&node, "AppTxCnt");
    if !net.has_variable(&cnt) {
        net.add_variable(cnt.clone(), 0);
    }
    if !net.has_place("P_DoSdetect") {
        net.add_place("P_DoSdetect", 0);
    }
    let mut detect_branches: Vec<Transition> = Vec::new();
    for t in &mut net.transitions {
        if is_retry(&t.id) {
            if guard_mentions_var_suffix(&t.guard, "_AppTxCnt").is_some() {
                continue; // already patched
            }
            let detect = Transition::new(format!("{}__dosDetect", t.id))
                .input(t.inputs[0].0.clone(), 1)
                .output("P_DoSdetect", 1)
                .guard(t.guard.clone().conjoin(Expr::cmp(
                    CmpOp::Ge,
                    Expr::var(cnt.clone()),
                    Expr::Int(limit as i64),
                )));
            detect_branches.push(detect);
            t.guard = t.guard.clone().conjoin(Expr::cmp(
                CmpOp::Lt,
                Expr::var(cnt.clone()),
                Expr::Int(limit as i64),
            ));
            t.updates = t
                .updates
                .clone()
                .set(cnt.clone(), Expr::add(Expr::var(cnt.clone()), Expr::Int(1)));
        } else if is_ok(&t.id) && !t.updates.0.iter().any(|(v, _)| *v == cnt) {
            t.updates = t.updates.clone().set_int(cnt.clone(), 0);
        }
    }
    for t in detect_branches {
        if net.transition(&t.id).is_none() {
            net.add_transition(t);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{has_errors, validate_net};

    fn nodes() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn transceiver_net_validates() {
        let net = make_transceiver("A", &XcvrParams::default(), &ChannelParams::default());
        assert!(!has_errors(&validate_net(&net)));
        assert_eq!(net.places.len(), 5);
    }

    #[test]
    fn nominal_channel_validates_and_has_no_attack_branches() {
        let n = nodes();
        let net = make_channel(
            &n,
            &all_pairs(&n),
            &ChannelParams::default(),
            &AttackConfig::none(),
        )
        .unwrap();
        // cross-namespace place references only resolve after composition;
        // structural validation of the bare channel checks ids and types
        assert!(net.transitions.iter().all(|t| !t.id.contains("Dos")
            && !t.id.contains("Masq")
            && !t.id.contains("Spoof")
            && !t.id.contains("MsgMod")
            && !t.id.contains("MsgInt")
            && !t.id.contains("AckInt")));
        assert!(net.has_place("Pch_Msg_A_B"));
        assert!(net.has_place("Pch_Msg_B_A"));
    }

    #[test]
    fn unbounded_dos_adds_unguarded_seizure() {
        let n = nodes();
        let attack = AttackConfig {
            dos: Some(DosAttack {
                max_consecutive_denials: None,
            }),
            ..AttackConfig::none()
        };
        let net = make_channel(&n, &all_pairs(&n), &ChannelParams::default(), &attack).unwrap();
        let seize = net.transition("Tch_DosSeize").unwrap();
        assert!(seize.has_trivial_guard());
        assert!(net.transition("Tch_DosCutoff").is_none());
    }

    #[test]
    fn bounded_dos_adds_counter_and_cutoff() {
        let n = nodes();
        let attack = AttackConfig {
            dos: Some(DosAttack {
                max_consecutive_denials: Some(4),
            }),
            ..AttackConfig::none()
        };
        let net = make_channel(&n, &all_pairs(&n), &ChannelParams::default(), &attack).unwrap();
        assert!(net.has_variable("ChDenCnt"));
        assert!(!net.transition("Tch_DosSeize").unwrap().has_trivial_guard());
        assert!(net.transition("Tch_DosCutoff").is_some());
    }

    #[test]
    fn masquerade_unknown_node_rejected() {
        let n = nodes();
        let attack = AttackConfig {
            masquerade: Some(Masquerade {
                payload: 1,
                target_pairs: vec![("A".into(), "Z".into())],
            }),
            ..AttackConfig::none()
        };
        assert_eq!(
            make_channel(&n, &all_pairs(&n), &ChannelParams::default(), &attack),
            Err(CommError::UnknownNode("Z".into()))
        );
    }

    #[test]
    fn ack_timeout_must_exceed_ack_time() {
        let mut cp = ChannelParams::default();
        cp.t_ack_to = Rat::from_integer(1);
        assert!(!cp.check().is_empty());
    }

    #[test]
    fn patches_are_idempotent_and_identity_when_off() {
        use crate::expr::Expr;
        // a minimal controller-shaped net with one receive and one retry
        let mut net = Net::new();
        net.add_place("Pwait", 1);
        net.add_place("Pgot", 0);
        net.add_variable(app_var("A", "RxBuf"), 0);
        net.add_variable(app_var("A", "RxMAC"), MAC_VALID);
        net.add_variable(xcvr_var("A", "Fail"), 0);
        net.add_variable(xcvr_var("A", "Tx"), 0);
        net.add_transition(
            Transition::new("Trecv")
                .input("Pwait", 1)
                .output("Pgot", 1)
                .guard(Expr::var_eq(app_var("A", "RxBuf"), 1)),
        );
        net.add_transition(
            Transition::new("TPgot__txFail")
                .input("Pgot", 1)
                .output("Pgot", 1)
                .guard(Expr::var_eq(xcvr_var("A", "Fail"), 1)),
        );
        net.add_transition(
            Transition::new("TPgot__txOk")
                .input("Pgot", 1)
                .output("Pwait", 1)
                .guard(Expr::var_eq(app_var("A", "RxAck"), 1)),
        );
        net.add_variable(app_var("A", "RxAck"), 0);

        let off = apply_security_patches(&net, &SecurityConfig::off()).unwrap();
        assert_eq!(off, net);

        let sec = SecurityConfig {
            auth_enabled: true,
            app_retry_limit: Some(5),
            dos_detect: true,
        };
        let once = apply_security_patches(&net, &sec).unwrap();
        let twice = apply_security_patches(&once, &sec).unwrap();
        assert_eq!(once, twice);
        assert!(once.has_place("P_DoSdetect"));
        assert!(once.has_place("P_Intrusion"));
        let recv = once.transition("Trecv").unwrap();
        let mut vars = std::collections::BTreeSet::new();
        recv.guard.variables(&mut vars);
        assert!(vars.contains(&app_var("A", "RxMAC")));
    }

    #[test]
    fn auth_patch_without_receivers_errors() {
        let mut net = Net::new();
        net.add_place("P", 1);
        let sec = SecurityConfig {
            auth_enabled: true,
            ..SecurityConfig::off()
        };
        assert!(matches!(
            apply_security_patches(&net, &sec),
            Err(CommError::PatchTargetsAbsent(_))
        ));
    }

    #[test]
    fn dos_detect_requires_finite_limit() {
        let sec = SecurityConfig {
            dos_detect: true,
            app_retry_limit: None,
            auth_enabled: false,
        };
        assert!(!sec.check().is_empty());
    }
}
