//! The `.cipn` controller format: the net structure without intervals or
//! weights, places carrying action blocks, transitions carrying
//! conditions.
//!
//! ```text
//! place Pcm_Init tokens=1
//! place Pcm_TxCtrl_Pick1 { send(Pick, 1) }
//! place PbGrip { send({C}, grip, 1) delay(500ms) act bp = 1 }
//! trans Tcm_Pres1 cond=Pres1==1 { in: Pcm_Init out: Pcm_TxCtrl_Pick1 }
//! ```

use crate::diag::Diagnostic;
use crate::parse::Cursor;
use tpnsec_core::cipn::{check_cipn_wellformed, Action, CipnModel, CipnPlace, CipnTransition, Cond};
use tpnsec_core::net::display_id;
use tpnsec_core::time::format_rat;

pub fn parse_cipn(file: &str, text: &str) -> Result<CipnModel, Vec<Diagnostic>> {
    let mut cur = Cursor::new(file, text).map_err(|d| vec![d])?;
    let mut model = CipnModel::default();

    while !cur.at_eof() {
        if cur.eat_kw("place") {
            let place = place_decl(&mut cur, &mut model).map_err(|d| vec![d])?;
            model.places.push(place);
        } else if cur.eat_kw("trans") {
            let t = trans_decl(&mut cur).map_err(|d| vec![d])?;
            model.transitions.push(t);
        } else {
            return Err(vec![cur.err(format!(
                "expected `place` or `trans`, found {}",
                cur.peek().describe()
            ))]);
        }
    }

    let diags: Vec<Diagnostic> = check_cipn_wellformed(&model)
        .iter()
        .map(|d| crate::diag::from_core(file, d))
        .collect();
    if diags
        .iter()
        .any(|d| d.severity == crate::diag::Severity::Error)
    {
        Err(diags)
    } else {
        Ok(model)
    }
}

fn place_decl(cur: &mut Cursor, model: &mut CipnModel) -> Result<CipnPlace, Diagnostic> {
    use crate::lexer::Tok;
    let id = cur.ident()?;
    if cur.eat_kw("tokens") {
        cur.expect(Tok::Eq)?;
        let n = cur.integer()?;
        match n {
            1 => model.initial.push(id.clone()),
            0 => {}
            _ => return Err(cur.err("controller places hold at most one token")),
        }
    }
    let mut actions = Vec::new();
    if cur.eat(&Tok::LBrace) {
        while !cur.eat(&Tok::RBrace) {
            actions.push(action(cur)?);
        }
    }
    Ok(CipnPlace { id, actions })
}

fn action(cur: &mut Cursor) -> Result<Action, Diagnostic> {
    use crate::lexer::Tok;
    if cur.eat_kw("act") {
        let name = cur.ident()?;
        cur.expect(Tok::Eq)?;
        let value = cur.integer()?;
        return Ok(Action::ActuatorSet { name, value });
    }
    if cur.eat_kw("send") {
        cur.expect(Tok::LParen)?;
        let dests = if cur.eat(&Tok::LBrace) {
            let mut d = vec![cur.ident()?];
            while cur.eat(&Tok::Comma) {
                d.push(cur.ident()?);
            }
            cur.expect(Tok::RBrace)?;
            cur.expect(Tok::Comma)?;
            Some(d)
        } else {
            None
        };
        let signal = cur.ident()?;
        cur.expect(Tok::Comma)?;
        let value = cur.integer()?;
        cur.expect(Tok::RParen)?;
        return Ok(Action::Send {
            dests,
            signal,
            value,
        });
    }
    if cur.eat_kw("delay") {
        cur.expect(Tok::LParen)?;
        let duration = cur.time()?;
        cur.expect(Tok::RParen)?;
        return Ok(Action::Delay { duration });
    }
    Err(cur.err(format!(
        "expected `act`, `send`, or `delay`, found {}",
        cur.peek().describe()
    )))
}

fn trans_decl(cur: &mut Cursor) -> Result<CipnTransition, Diagnostic> {
    use crate::lexer::Tok;
    let id = cur.ident()?;
    let condition = if cur.eat_kw("cond") {
        cur.expect(Tok::Eq)?;
        cond(cur)?
    } else {
        Cond::True
    };
    cur.expect(Tok::LBrace)?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    if cur.eat_kw("in") {
        cur.expect(Tok::Colon)?;
        inputs = id_list(cur)?;
    }
    if cur.eat_kw("out") {
        cur.expect(Tok::Colon)?;
        outputs = id_list(cur)?;
    }
    cur.expect(Tok::RBrace)?;
    Ok(CipnTransition {
        id,
        condition,
        inputs,
        outputs,
    })
}

fn id_list(cur: &mut Cursor) -> Result<Vec<String>, Diagnostic> {
    use crate::lexer::Tok;
    let mut out = vec![cur.ident()?];
    if cur.peek() == &Tok::Star {
        return Err(cur.err("arc weights are fixed to 1 in controller models"));
    }
    while cur.eat(&Tok::Comma) {
        out.push(cur.ident()?);
        if cur.peek() == &Tok::Star {
            return Err(cur.err("arc weights are fixed to 1 in controller models"));
        }
    }
    Ok(out)
}

fn cond(cur: &mut Cursor) -> Result<Cond, Diagnostic> {
    cond_or(cur)
}

fn cond_or(cur: &mut Cursor) -> Result<Cond, Diagnostic> {
    use crate::lexer::Tok;
    let mut lhs = cond_and(cur)?;
    while cur.eat(&Tok::OrOr) {
        let rhs = cond_and(cur)?;
        lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn cond_and(cur: &mut Cursor) -> Result<Cond, Diagnostic> {
    use crate::lexer::Tok;
    let mut lhs = cond_atom(cur)?;
    while cur.eat(&Tok::AndAnd) {
        let rhs = cond_atom(cur)?;
        lhs = Cond::and(lhs, rhs);
    }
    Ok(lhs)
}

fn cond_atom(cur: &mut Cursor) -> Result<Cond, Diagnostic> {
    use crate::lexer::Tok;
    if cur.eat(&Tok::Bang) {
        return Ok(Cond::Not(Box::new(cond_atom(cur)?)));
    }
    if cur.eat(&Tok::LParen) {
        let c = cond(cur)?;
        cur.expect(Tok::RParen)?;
        return Ok(c);
    }
    if cur.eat_kw("true") {
        return Ok(Cond::True);
    }
    let name = cur.ident()?;
    cur.expect(Tok::EqEq)?;
    let value = cur.integer()?;
    Ok(Cond::name_eq(name, value))
}

pub fn print_cipn(m: &CipnModel) -> String {
    let mut out = String::new();
    for p in &m.places {
        let mut line = format!("place {}", display_id(&p.id));
        if m.initial.contains(&p.id) {
            line.push_str(" tokens=1");
        }
        if !p.actions.is_empty() {
            line.push_str(" { ");
            for a in &p.actions {
                line.push_str(&print_action(a));
                line.push(' ');
            }
            line.push('}');
        }
        line.push('\n');
        out.push_str(&line);
    }
    for t in &m.transitions {
        let mut line = format!("trans {}", display_id(&t.id));
        if t.condition != Cond::True {
            line.push_str(&format!(" cond={}", print_cond(&t.condition)));
        }
        line.push_str(&format!(
            " {{ in: {} out: {} }}\n",
            t.inputs
                .iter()
                .map(|p| display_id(p))
                .collect::<Vec<_>>()
                .join(", "),
            t.outputs
                .iter()
                .map(|p| display_id(p))
                .collect::<Vec<_>>()
                .join(", "),
        ));
        out.push_str(&line);
    }
    out
}

fn print_action(a: &Action) -> String {
    match a {
        Action::ActuatorSet { name, value } => format!("act {} = {}", display_id(name), value),
        Action::Send {
            dests,
            signal,
            value,
        } => match dests {
            None => format!("send({}, {})", display_id(signal), value),
            Some(d) => format!(
                "send({{{}}}, {}, {})",
                d.iter().map(|x| display_id(x)).collect::<Vec<_>>().join(", "),
                display_id(signal),
                value
            ),
        },
        Action::Delay { duration } => format!("delay({})", format_rat(*duration)),
    }
}

fn print_cond(c: &Cond) -> String {
    fn prec(c: &Cond) -> u8 {
        match c {
            Cond::Or(..) => 1,
            Cond::And(..) => 2,
            Cond::Not(..) => 3,
            _ => 4,
        }
    }
    fn go(c: &Cond, min: u8) -> String {
        let s = match c {
            Cond::True => "true".to_string(),
            Cond::NameEquals { name, value } => format!("{}=={}", display_id(name), value),
            Cond::And(a, b) => format!("{} && {}", go(a, 2), go(b, 3)),
            Cond::Or(a, b) => format!("{} || {}", go(a, 1), go(b, 2)),
            Cond::Not(a) => format!("!{}", go(a, 4)),
        };
        if prec(c) < min {
            format!("({})", s)
        } else {
            s
        }
    }
    go(c, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tpnsec_core::time::rat;

    /// The conveyor-monitor controller: two presence branches, each
    /// sending its pick signal and waiting for completion.
    const CONVEYOR_MONITOR: &str = concat!(
        "place Pcm_Init tokens=1\n",
        "place Pcm_TxCtrl_Pick1 { send(Pick, 1) }\n",
        "place Pcm_TxCtrl_Pick2 { send(Pick, 2) }\n",
        "trans Tcm_Pres1 cond=Pres1==1 { in: Pcm_Init out: Pcm_TxCtrl_Pick1 }\n",
        "trans Tcm_Pres2 cond=Pres2==1 { in: Pcm_Init out: Pcm_TxCtrl_Pick2 }\n",
        "trans Tcm_RetInit1 cond=Complete==1 { in: Pcm_TxCtrl_Pick1 out: Pcm_Init }\n",
        "trans Tcm_RetInit2 cond=Complete==1 { in: Pcm_TxCtrl_Pick2 out: Pcm_Init }\n",
    );

    #[test]
    fn conveyor_monitor_roundtrips() {
        let m = parse_cipn("cm.cipn", CONVEYOR_MONITOR).unwrap();
        assert_eq!(m.initial_place(), Some("Pcm_Init"));
        assert_eq!(m.places.len(), 3);
        assert_eq!(print_cipn(&m), CONVEYOR_MONITOR);
    }

    #[test]
    fn send_forms_parse() {
        let text = "place P tokens=1 { send({B, C}, grip, 1) delay(500) act cp = 0 }\n";
        let m = parse_cipn("t.cipn", text).unwrap();
        assert_eq!(m.places[0].actions.len(), 3);
        match &m.places[0].actions[0] {
            Action::Send {
                dests: Some(d),
                signal,
                value,
            } => {
                assert_eq!(d, &vec!["B".to_string(), "C".to_string()]);
                assert_eq!(signal, "grip");
                assert_eq!(*value, 1);
            }
            other => panic!("unexpected action {:?}", other),
        }
        match &m.places[0].actions[1] {
            Action::Delay { duration } => assert_eq!(*duration, rat(500, 1)),
            other => panic!("unexpected action {:?}", other),
        }
        assert_eq!(print_cipn(&m), text);
    }

    #[test]
    fn empty_file_reports_no_initial_place() {
        let errs = parse_cipn("t.cipn", "").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("no initial place")));
    }

    #[test]
    fn weights_rejected() {
        let text = "place P tokens=1\ntrans t { in: P*2 out: P }\n";
        let errs = parse_cipn("t.cipn", text).unwrap_err();
        assert!(errs[0].message.contains("fixed to 1"));
    }
}
