//! The `.scn` scenario format: model imports with namespaces, sensor and
//! actuator bindings, channel parameters, attacker capabilities, security
//! services, instrumentation variables, and property references.
//!
//! Unknown keys are hard errors: a typo in an attack block must never
//! silently weaken the adversary.

use crate::diag::Diagnostic;
use crate::parse::Cursor;
use crate::props::{parse_property_decl, print_property};
use tpnsec_core::comm::{
    AttackConfig, ChannelParams, DosAttack, Masquerade, MsgModify, SecurityConfig, XcvrParams,
};
use tpnsec_core::expr::Expr;
use tpnsec_core::net::display_id;
use tpnsec_core::time::format_rat;
use tpnsec_core::transform::{ActuatorBinding, SensorBinding};
use tpnsec_core::verify::Property;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportKind {
    Controller,
    PlantNet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelImport {
    pub kind: ImportKind,
    pub namespace: String,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommMode {
    Ideal,
    #[default]
    Channel,
}

/// A post-composition instrumentation update: `on <transition> set
/// <var> = <value>` attaches a variable write to a named transition of
/// the composed model, for use in properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrument {
    pub transition: String,
    pub var: String,
    pub value: i64,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioFile {
    pub imports: Vec<ModelImport>,
    pub mode: CommMode,
    pub sensors: SensorBinding,
    pub actuators: ActuatorBinding,
    pub channel: Option<ChannelParams>,
    pub xcvr: XcvrParams,
    pub attacks: AttackConfig,
    pub security: SecurityConfig,
    pub instruments: Vec<Instrument>,
    pub property_files: Vec<String>,
    pub properties: Vec<Property>,
}

pub fn parse_scenario(file: &str, text: &str) -> Result<ScenarioFile, Vec<Diagnostic>> {
    let mut cur = Cursor::new(file, text).map_err(|d| vec![d])?;
    let mut scn = ScenarioFile::default();
    let mut saw_mode = false;
    let mut saw_channel = false;

    let r = (|| -> Result<(), Diagnostic> {
        while !cur.at_eof() {
            if cur.eat_kw("controller") {
                let namespace = cur.ident()?;
                cur.expect(crate::lexer::Tok::Eq)?;
                let path = cur.string()?;
                scn.imports.push(ModelImport {
                    kind: ImportKind::Controller,
                    namespace,
                    path,
                });
            } else if cur.eat_kw("net") {
                let namespace = cur.ident()?;
                cur.expect(crate::lexer::Tok::Eq)?;
                let path = cur.string()?;
                scn.imports.push(ModelImport {
                    kind: ImportKind::PlantNet,
                    namespace,
                    path,
                });
            } else if cur.eat_kw("mode") {
                if saw_mode {
                    return Err(cur.err("duplicate mode declaration"));
                }
                saw_mode = true;
                scn.mode = if cur.eat_kw("ideal") {
                    CommMode::Ideal
                } else if cur.eat_kw("channel") {
                    CommMode::Channel
                } else {
                    return Err(cur.err("mode must be `ideal` or `channel`"));
                };
            } else if cur.eat_kw("bind") {
                if cur.eat_kw("sensor") {
                    let name = cur.ident()?;
                    cur.expect(crate::lexer::Tok::Eq)?;
                    let expr = cur.expr()?;
                    scn.sensors.0.insert(name, expr);
                } else if cur.eat_kw("actuator") {
                    let name = cur.ident()?;
                    cur.expect(crate::lexer::Tok::Eq)?;
                    let value = cur.integer()?;
                    cur.expect(crate::lexer::Tok::Arrow)?;
                    let place = cur.ident()?;
                    scn.actuators.0.insert((name, value), place);
                } else {
                    return Err(cur.err("expected `sensor` or `actuator` after `bind`"));
                }
            } else if cur.eat_kw("channel") {
                if saw_channel {
                    return Err(cur.err("duplicate channel block"));
                }
                saw_channel = true;
                let (cp, xp) = channel_block(&mut cur)?;
                scn.channel = Some(cp);
                scn.xcvr = xp;
            } else if cur.eat_kw("attacks") {
                scn.attacks = attacks_block(&mut cur)?;
            } else if cur.eat_kw("security") {
                scn.security = security_block(&mut cur)?;
            } else if cur.eat_kw("instrument") {
                cur.expect(crate::lexer::Tok::LBrace)?;
                while !cur.eat(&crate::lexer::Tok::RBrace) {
                    cur.expect_kw("on")?;
                    let transition = cur.ident()?;
                    cur.expect_kw("set")?;
                    let var = cur.ident()?;
                    cur.expect(crate::lexer::Tok::Eq)?;
                    let value = cur.integer()?;
                    scn.instruments.push(Instrument {
                        transition,
                        var,
                        value,
                    });
                }
            } else if cur.eat_kw("properties") {
                cur.expect(crate::lexer::Tok::Eq)?;
                scn.property_files.push(cur.string()?);
            } else if cur.eat_kw("property") {
                scn.properties.push(parse_property_decl(&mut cur)?);
            } else {
                return Err(cur.err(format!(
                    "unknown scenario item {}",
                    cur.peek().describe()
                )));
            }
        }
        Ok(())
    })();
    if let Err(d) = r {
        return Err(vec![d]);
    }

    let mut diags = Vec::new();
    if scn.mode == CommMode::Channel && scn.channel.is_none() {
        diags.push(Diagnostic::error(
            file,
            1,
            1,
            "channel mode requires exactly one channel block",
        ));
    }
    if scn.mode == CommMode::Ideal && scn.attacks.any_enabled() {
        diags.push(Diagnostic::error(
            file,
            1,
            1,
            "attacks require channel mode; the ideal channel has no attack surface",
        ));
    }
    if let Some(cp) = &scn.channel {
        for d in cp.check() {
            diags.push(crate::diag::from_core(file, &d));
        }
    }
    for d in scn.security.check() {
        diags.push(crate::diag::from_core(file, &d));
    }
    if diags.is_empty() {
        Ok(scn)
    } else {
        Err(diags)
    }
}

fn channel_block(cur: &mut Cursor) -> Result<(ChannelParams, XcvrParams), Diagnostic> {
    use crate::lexer::Tok;
    let mut cp = ChannelParams::default();
    let mut xp = XcvrParams::default();
    cur.expect(Tok::LBrace)?;
    while !cur.eat(&Tok::RBrace) {
        let key = cur.ident()?;
        cur.expect(Tok::Eq)?;
        match key.as_str() {
            "t_tx_msg" => cp.t_tx_msg = cur.interval()?,
            "t_tx_ack" => cp.t_tx_ack = cur.interval()?,
            "t_boff" => cp.t_boff = cur.interval()?,
            "t_dos" => cp.t_dos = cur.interval()?,
            "t_ack_to" => cp.t_ack_to = cur.time()?,
            "t_wf_ack" => cp.t_wf_ack = cur.time()?,
            "max_datalink_retries" => {
                let n = cur.integer()?;
                if !(0..=64).contains(&n) {
                    return Err(cur.err("max_datalink_retries out of range"));
                }
                xp.max_datalink_retries = n as u32;
            }
            other => return Err(cur.err(format!("unknown channel parameter `{}`", other))),
        }
    }
    Ok((cp, xp))
}

fn attacks_block(cur: &mut Cursor) -> Result<AttackConfig, Diagnostic> {
    use crate::lexer::Tok;
    let mut a = AttackConfig::none();
    cur.expect(Tok::LBrace)?;
    while !cur.eat(&Tok::RBrace) {
        let key = cur.ident()?;
        match key.as_str() {
            "dos" => {
                let mut dos = DosAttack {
                    max_consecutive_denials: None,
                };
                if cur.eat(&Tok::LBrace) {
                    while !cur.eat(&Tok::RBrace) {
                        let k = cur.ident()?;
                        cur.expect(Tok::Eq)?;
                        match k.as_str() {
                            "max_consecutive" => {
                                let n = cur.integer()?;
                                if n < 0 {
                                    return Err(cur.err("max_consecutive must be nonnegative"));
                                }
                                dos.max_consecutive_denials = Some(n as u32);
                            }
                            other => {
                                return Err(
                                    cur.err(format!("unknown dos parameter `{}`", other))
                                )
                            }
                        }
                    }
                }
                a.dos = Some(dos);
            }
            "ack_intercept" => a.ack_intercept = true,
            "ack_spoof" => a.ack_spoof = true,
            "msg_intercept" => a.msg_intercept = true,
            "msg_modify" => {
                cur.expect(Tok::LBrace)?;
                let mut payload = None;
                while !cur.eat(&Tok::RBrace) {
                    let k = cur.ident()?;
                    cur.expect(Tok::Eq)?;
                    match k.as_str() {
                        "payload" => payload = Some(cur.integer()?),
                        other => {
                            return Err(
                                cur.err(format!("unknown msg_modify parameter `{}`", other))
                            )
                        }
                    }
                }
                let payload =
                    payload.ok_or_else(|| cur.err("msg_modify requires a payload"))?;
                a.msg_modify = Some(MsgModify { payload });
            }
            "masquerade" => {
                cur.expect(Tok::LBrace)?;
                let mut payload = None;
                let mut pairs = Vec::new();
                while !cur.eat(&Tok::RBrace) {
                    let k = cur.ident()?;
                    cur.expect(Tok::Eq)?;
                    match k.as_str() {
                        "payload" => payload = Some(cur.integer()?),
                        "target" => {
                            let s = cur.ident()?;
                            cur.expect(Tok::Arrow)?;
                            let r = cur.ident()?;
                            pairs.push((s, r));
                        }
                        other => {
                            return Err(
                                cur.err(format!("unknown masquerade parameter `{}`", other))
                            )
                        }
                    }
                }
                let payload =
                    payload.ok_or_else(|| cur.err("masquerade requires a payload"))?;
                if pairs.is_empty() {
                    return Err(cur.err("masquerade requires at least one target pair"));
                }
                a.masquerade = Some(Masquerade {
                    payload,
                    target_pairs: pairs,
                });
            }
            other => return Err(cur.err(format!("unknown attack `{}`", other))),
        }
    }
    Ok(a)
}

fn security_block(cur: &mut Cursor) -> Result<SecurityConfig, Diagnostic> {
    use crate::lexer::Tok;
    let mut sec = SecurityConfig::off();
    cur.expect(Tok::LBrace)?;
    while !cur.eat(&Tok::RBrace) {
        let key = cur.ident()?;
        cur.expect(Tok::Eq)?;
        match key.as_str() {
            "auth" => sec.auth_enabled = on_off(cur)?,
            "dos_detect" => sec.dos_detect = on_off(cur)?,
            "app_retry_limit" => {
                if cur.eat_kw("unbounded") {
                    sec.app_retry_limit = None;
                } else {
                    let n = cur.integer()?;
                    if n < 0 {
                        return Err(cur.err("app_retry_limit must be nonnegative"));
                    }
                    sec.app_retry_limit = Some(n as u32);
                }
            }
            other => return Err(cur.err(format!("unknown security setting `{}`", other))),
        }
    }
    Ok(sec)
}

fn on_off(cur: &mut Cursor) -> Result<bool, Diagnostic> {
    if cur.eat_kw("on") {
        Ok(true)
    } else if cur.eat_kw("off") {
        Ok(false)
    } else {
        Err(cur.err("expected `on` or `off`"))
    }
}

pub fn print_scenario(scn: &ScenarioFile) -> String {
    let mut out = String::new();
    for imp in &scn.imports {
        let kw = match imp.kind {
            ImportKind::Controller => "controller",
            ImportKind::PlantNet => "net",
        };
        out.push_str(&format!(
            "{} {} = \"{}\"\n",
            kw,
            display_id(&imp.namespace),
            imp.path
        ));
    }
    out.push_str(match scn.mode {
        CommMode::Ideal => "mode ideal\n",
        CommMode::Channel => "mode channel\n",
    });
    for (name, expr) in &scn.sensors.0 {
        out.push_str(&format!("bind sensor {} = {}\n", display_id(name), expr));
    }
    for ((name, value), place) in &scn.actuators.0 {
        out.push_str(&format!(
            "bind actuator {} = {} -> {}\n",
            display_id(name),
            value,
            display_id(place)
        ));
    }
    if let Some(cp) = &scn.channel {
        out.push_str("channel {\n");
        out.push_str(&format!("  t_tx_msg = {}\n", iv(&cp.t_tx_msg)));
        out.push_str(&format!("  t_tx_ack = {}\n", iv(&cp.t_tx_ack)));
        out.push_str(&format!("  t_boff = {}\n", iv(&cp.t_boff)));
        out.push_str(&format!("  t_ack_to = {}\n", format_rat(cp.t_ack_to)));
        out.push_str(&format!("  t_wf_ack = {}\n", format_rat(cp.t_wf_ack)));
        out.push_str(&format!("  t_dos = {}\n", iv(&cp.t_dos)));
        out.push_str(&format!(
            "  max_datalink_retries = {}\n",
            scn.xcvr.max_datalink_retries
        ));
        out.push_str("}\n");
    }
    if scn.attacks.any_enabled() {
        out.push_str("attacks {\n");
        if let Some(dos) = &scn.attacks.dos {
            match dos.max_consecutive_denials {
                None => out.push_str("  dos\n"),
                Some(k) => out.push_str(&format!("  dos {{ max_consecutive = {} }}\n", k)),
            }
        }
        if scn.attacks.ack_intercept {
            out.push_str("  ack_intercept\n");
        }
        if scn.attacks.ack_spoof {
            out.push_str("  ack_spoof\n");
        }
        if let Some(m) = &scn.attacks.msg_modify {
            out.push_str(&format!("  msg_modify {{ payload = {} }}\n", m.payload));
        }
        if scn.attacks.msg_intercept {
            out.push_str("  msg_intercept\n");
        }
        if let Some(m) = &scn.attacks.masquerade {
            out.push_str(&format!("  masquerade {{ payload = {}", m.payload));
            for (s, r) in &m.target_pairs {
                out.push_str(&format!(" target = {} -> {}", display_id(s), display_id(r)));
            }
            out.push_str(" }\n");
        }
        out.push_str("}\n");
    }
    let sec = &scn.security;
    if sec.auth_enabled || sec.app_retry_limit.is_some() || sec.dos_detect {
        out.push_str("security {\n");
        if sec.auth_enabled {
            out.push_str("  auth = on\n");
        }
        if let Some(l) = sec.app_retry_limit {
            out.push_str(&format!("  app_retry_limit = {}\n", l));
        }
        if sec.dos_detect {
            out.push_str("  dos_detect = on\n");
        }
        out.push_str("}\n");
    }
    if !scn.instruments.is_empty() {
        out.push_str("instrument {\n");
        for i in &scn.instruments {
            out.push_str(&format!(
                "  on {} set {} = {}\n",
                display_id(&i.transition),
                display_id(&i.var),
                i.value
            ));
        }
        out.push_str("}\n");
    }
    for f in &scn.property_files {
        out.push_str(&format!("properties = \"{}\"\n", f));
    }
    for p in &scn.properties {
        out.push_str(&print_property(p));
    }
    out
}

fn iv(i: &tpnsec_core::time::TimeInterval) -> String {
    let open = if i.lower_closed { '[' } else { '(' };
    let close = if i.upper_closed { ']' } else { ')' };
    let hi = match i.upper {
        tpnsec_core::time::TimeBound::Finite(h) => format_rat(h),
        tpnsec_core::time::TimeBound::Infinite => "inf".to_string(),
    };
    format!("{}{},{}{}", open, format_rat(i.lower), hi, close)
}

/// Scenario-expressible override sets used by the command line and the
/// golden table: replace the attack and/or patch configuration wholesale.
pub fn apply_overrides(
    scn: &mut ScenarioFile,
    attacks: Option<AttackConfig>,
    security: Option<SecurityConfig>,
) {
    if let Some(a) = attacks {
        scn.attacks = a;
    }
    if let Some(s) = security {
        scn.security = s;
    }
}

#[allow(unused)]
fn _expr_sanity(e: &Expr) {}
