//! The `.tpn` net format.
//!
//! ```text
//! place "Pp&p_Init" tokens=1
//! var activeConveyor = 0
//! trans Tp_wfPick1 guard=M(ctrl.Pctrl_A)==1 { in: "Pp&p_Init" out: "Pp&p_P&P1" }
//! trans Tp_proc interval=[4,6] update=n=n+1 { in: P1*2 out: P2 }
//! ```
//!
//! Printing and parsing round-trip structurally.

use crate::diag::Diagnostic;
use crate::parse::Cursor;
use tpnsec_core::expr::{Expr, UpdateList};
use tpnsec_core::net::{display_id, Net, Transition};
use tpnsec_core::time::{format_rat, TimeInterval};

pub fn parse_net(file: &str, text: &str) -> Result<Net, Vec<Diagnostic>> {
    let mut cur = Cursor::new(file, text).map_err(|d| vec![d])?;
    let mut net = Net::new();
    let mut diags = Vec::new();

    while !cur.at_eof() {
        if cur.eat_kw("place") {
            match place_decl(&mut cur) {
                Ok((id, tokens)) => net.add_place(id, tokens),
                Err(d) => return Err(push_and_bail(diags, d)),
            }
        } else if cur.eat_kw("var") {
            match var_decl(&mut cur) {
                Ok((id, init)) => net.add_variable(id, init),
                Err(d) => return Err(push_and_bail(diags, d)),
            }
        } else if cur.eat_kw("trans") {
            match trans_decl(&mut cur) {
                Ok(t) => net.add_transition(t),
                Err(d) => return Err(push_and_bail(diags, d)),
            }
        } else {
            diags.push(cur.err(format!(
                "expected `place`, `var`, or `trans`, found {}",
                cur.peek().describe()
            )));
            return Err(diags);
        }
    }

    for d in tpnsec_core::validate::validate_component(&net) {
        diags.push(crate::diag::from_core(file, &d));
    }
    if diags
        .iter()
        .any(|d| d.severity == crate::diag::Severity::Error)
    {
        Err(diags)
    } else {
        Ok(net)
    }
}

fn push_and_bail(mut diags: Vec<Diagnostic>, d: Diagnostic) -> Vec<Diagnostic> {
    diags.push(d);
    diags
}

fn place_decl(cur: &mut Cursor) -> Result<(String, u32), Diagnostic> {
    let id = cur.ident()?;
    let mut tokens = 0u32;
    if cur.eat_kw("tokens") {
        cur.expect(crate::lexer::Tok::Eq)?;
        let n = cur.integer()?;
        if !(0..=u32::MAX as i64).contains(&n) {
            return Err(cur.err("token count out of range"));
        }
        tokens = n as u32;
    }
    Ok((id, tokens))
}

fn var_decl(cur: &mut Cursor) -> Result<(String, i64), Diagnostic> {
    let id = cur.ident()?;
    cur.expect(crate::lexer::Tok::Eq)?;
    let init = cur.integer()?;
    Ok((id, init))
}

fn trans_decl(cur: &mut Cursor) -> Result<Transition, Diagnostic> {
    use crate::lexer::Tok;
    let id = cur.ident()?;
    let mut t = Transition::new(id);
    let mut seen_interval = false;
    let mut seen_guard = false;
    let mut seen_update = false;
    loop {
        if cur.eat_kw("interval") {
            if seen_interval {
                return Err(cur.err("duplicate interval attribute"));
            }
            seen_interval = true;
            cur.expect(Tok::Eq)?;
            t.interval = cur.interval()?;
        } else if cur.eat_kw("guard") {
            if seen_guard {
                return Err(cur.err("duplicate guard attribute"));
            }
            seen_guard = true;
            cur.expect(Tok::Eq)?;
            t.guard = cur.expr()?;
        } else if cur.eat_kw("update") {
            if seen_update {
                return Err(cur.err("duplicate update attribute"));
            }
            seen_update = true;
            cur.expect(Tok::Eq)?;
            t.updates = updates(cur)?;
        } else {
            break;
        }
    }
    cur.expect(Tok::LBrace)?;
    if cur.eat_kw("in") {
        cur.expect(Tok::Colon)?;
        t.inputs = arcs(cur)?;
    }
    if cur.eat_kw("out") {
        cur.expect(Tok::Colon)?;
        t.outputs = arcs(cur)?;
    }
    cur.expect(Tok::RBrace)?;
    Ok(t)
}

fn updates(cur: &mut Cursor) -> Result<UpdateList, Diagnostic> {
    use crate::lexer::Tok;
    let mut list = UpdateList::new();
    loop {
        let var = cur.ident()?;
        cur.expect(Tok::Eq)?;
        let expr = cur.expr()?;
        list.0.push((var, expr));
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(list)
}

fn arcs(cur: &mut Cursor) -> Result<Vec<(String, u32)>, Diagnostic> {
    use crate::lexer::Tok;
    let mut out = Vec::new();
    loop {
        let place = cur.ident()?;
        let mut weight = 1u32;
        if cur.eat(&Tok::Star) {
            let w = cur.integer()?;
            if !(1..=u32::MAX as i64).contains(&w) {
                return Err(cur.err("arc weight must be a positive integer"));
            }
            weight = w as u32;
        }
        out.push((place, weight));
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(out)
}

pub fn print_net(net: &Net) -> String {
    let mut out = String::new();
    for p in &net.places {
        let tokens = net.initial_marking.get(p).copied().unwrap_or(0);
        if tokens > 0 {
            out.push_str(&format!("place {} tokens={}\n", display_id(p), tokens));
        } else {
            out.push_str(&format!("place {}\n", display_id(p)));
        }
    }
    for (v, init) in &net.variables {
        out.push_str(&format!("var {} = {}\n", display_id(v), init));
    }
    for t in &net.transitions {
        out.push_str(&print_transition(t));
    }
    out
}

fn print_interval(iv: &TimeInterval) -> String {
    let open = if iv.lower_closed { '[' } else { '(' };
    let close = if iv.upper_closed { ']' } else { ')' };
    let upper = match iv.upper {
        tpnsec_core::time::TimeBound::Finite(hi) => format_rat(hi),
        tpnsec_core::time::TimeBound::Infinite => "inf".to_string(),
    };
    format!("{}{},{}{}", open, format_rat(iv.lower), upper, close)
}

fn print_transition(t: &Transition) -> String {
    let mut line = format!("trans {}", display_id(&t.id));
    if !t.interval.is_immediate() {
        line.push_str(&format!(" interval={}", print_interval(&t.interval)));
    }
    if t.guard != Expr::Bool(true) {
        line.push_str(&format!(" guard={}", t.guard));
    }
    if !t.updates.is_empty() {
        let ups: Vec<String> = t
            .updates
            .0
            .iter()
            .map(|(v, e)| format!("{}={}", display_id(v), e))
            .collect();
        line.push_str(&format!(" update={}", ups.join(", ")));
    }
    line.push_str(" { ");
    if !t.inputs.is_empty() {
        line.push_str("in: ");
        line.push_str(&print_arcs(&t.inputs));
        line.push(' ');
    }
    if !t.outputs.is_empty() {
        line.push_str("out: ");
        line.push_str(&print_arcs(&t.outputs));
        line.push(' ');
    }
    line.push_str("}\n");
    line
}

fn print_arcs(arcs: &[(String, u32)]) -> String {
    arcs.iter()
        .map(|(p, w)| {
            if *w == 1 {
                display_id(p)
            } else {
                format!("{}*{}", display_id(p), w)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tpnsec_core::time::rat;

    #[test]
    fn one_place_one_transition_roundtrip() {
        let text = "place P1 tokens=1\nplace P2\ntrans t { in: P1 out: P2 }\n";
        let net = parse_net("t.tpn", text).unwrap();
        assert_eq!(net.places.len(), 2);
        assert_eq!(print_net(&net), text);
    }

    #[test]
    fn exact_delay_interval_parses() {
        let text = "place P1 tokens=1\nplace P2\ntrans t interval=[500,500] { in: P1 out: P2 }\n";
        let net = parse_net("t.tpn", text).unwrap();
        let t = net.transition("t").unwrap();
        assert_eq!(t.interval, TimeInterval::exact(rat(500, 1)));
    }

    #[test]
    fn paper_guard_notation_parses() {
        let text = concat!(
            "place \"Pp&p_Init\" tokens=1\n",
            "place \"Pp&p_P&P1\"\n",
            "trans \"Tp&p_wfPick1\" guard=M(ctrl.Pctrl_A)==1 { in: \"Pp&p_Init\" out: \"Pp&p_P&P1\" }\n",
        );
        let net = parse_net("t.tpn", text).unwrap();
        let t = net.transition("Tp&p_wfPick1").unwrap();
        assert_eq!(t.guard, Expr::marking_eq("ctrl.Pctrl_A", 1));
        assert_eq!(print_net(&net), text);
    }

    #[test]
    fn duplicate_id_reported_as_error() {
        let text = "place P1\nplace P1\n";
        let errs = parse_net("t.tpn", text).unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("duplicate place")));
    }

    #[test]
    fn malformed_interval_located() {
        let text = "place P1 tokens=1\ntrans t interval=[5,1] { in: P1 out: P1 }\n";
        let errs = parse_net("t.tpn", text).unwrap_err();
        assert_eq!(errs[0].line, 2);
        assert!(errs[0].message.contains("empty interval"));
    }

    #[test]
    fn weights_and_updates_roundtrip() {
        let text = "place P1 tokens=2\nplace P2\nvar n = 0\ntrans t guard=n<3 update=n=n+1 { in: P1*2 out: P2*3 }\n";
        let net = parse_net("t.tpn", text).unwrap();
        assert_eq!(print_net(&net), text);
    }
}
