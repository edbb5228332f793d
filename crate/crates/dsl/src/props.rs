//! The `.props` property format.
//!
//! ```text
//! property p1_no_cross_pick : AG !(M(plant."Pp&p_P&P2")==1 && activeConveyor==1)
//! property p2_pick_leadsto : M(LC1.Pcm_TxCtrl_Pick1)==1 --> M(plant."Pp&p_wfRet")==1
//! property one_bounded : BOUNDED 1
//! property alive : DEADLOCK_FREE
//! ```

use crate::diag::Diagnostic;
use crate::parse::Cursor;
use tpnsec_core::net::display_id;
use tpnsec_core::verify::{Property, PropertyKind};

pub fn parse_props(file: &str, text: &str) -> Result<Vec<Property>, Vec<Diagnostic>> {
    let mut cur = Cursor::new(file, text).map_err(|d| vec![d])?;
    let mut out = Vec::new();
    while !cur.at_eof() {
        if cur.eat_kw("property") {
            out.push(parse_property_decl(&mut cur).map_err(|d| vec![d])?);
        } else {
            return Err(vec![cur.err(format!(
                "expected `property`, found {}",
                cur.peek().describe()
            ))]);
        }
    }
    Ok(out)
}

/// Parses `NAME : SPEC` after the `property` keyword was consumed.
pub fn parse_property_decl(cur: &mut Cursor) -> Result<Property, Diagnostic> {
    use crate::lexer::Tok;
    let name = cur.ident()?;
    cur.expect(Tok::Colon)?;
    let kind = if cur.eat_kw("AG") {
        PropertyKind::AgSafety(cur.expr()?)
    } else if cur.eat_kw("BOUNDED") {
        let k = cur.integer()?;
        if k < 1 {
            return Err(cur.err("bound must be at least 1"));
        }
        let scope = if cur.eat(&Tok::LBrace) {
            let mut places = vec![cur.ident()?];
            while cur.eat(&Tok::Comma) {
                places.push(cur.ident()?);
            }
            cur.expect(Tok::RBrace)?;
            Some(places)
        } else {
            None
        };
        PropertyKind::Bounded {
            k: k as u32,
            scope,
        }
    } else if cur.eat_kw("DEADLOCK_FREE") {
        PropertyKind::DeadlockFree
    } else {
        let p = cur.expr()?;
        cur.expect(Tok::LeadsTo)?;
        let q = cur.expr()?;
        PropertyKind::LeadsTo(p, q)
    };
    Ok(Property { name, kind })
}

pub fn print_property(p: &Property) -> String {
    let body = match &p.kind {
        PropertyKind::AgSafety(e) => format!("AG {}", e),
        PropertyKind::LeadsTo(a, b) => format!("{} --> {}", a, b),
        PropertyKind::Bounded { k, scope } => match scope {
            None => format!("BOUNDED {}", k),
            Some(places) => format!(
                "BOUNDED {} {{ {} }}",
                k,
                places
                    .iter()
                    .map(|s| display_id(s))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        },
        PropertyKind::DeadlockFree => "DEADLOCK_FREE".to_string(),
    };
    format!("property {} : {}\n", display_id(&p.name), body)
}

pub fn print_props(props: &[Property]) -> String {
    props.iter().map(print_property).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tpnsec_core::expr::Expr;

    #[test]
    fn properties_roundtrip() {
        let text = concat!(
            "property p1 : AG !(M(plant.P2)==1 && activeConveyor==1)\n",
            "property p2 : M(LC1.Pick1)==1 || M(LC1.Pick2)==1 --> M(plant.wfRet)==1\n",
            "property b : BOUNDED 1\n",
            "property bscope : BOUNDED 2 { P1, ns.P2 }\n",
            "property alive : DEADLOCK_FREE\n",
        );
        let props = parse_props("p.props", text).unwrap();
        assert_eq!(props.len(), 5);
        assert_eq!(print_props(&props), text);
    }

    #[test]
    fn leads_to_splits_at_arrow() {
        let props = parse_props("p.props", "property p : x==1 --> y==2\n").unwrap();
        match &props[0].kind {
            PropertyKind::LeadsTo(p, q) => {
                assert_eq!(p, &Expr::var_eq("x", 1));
                assert_eq!(q, &Expr::var_eq("y", 2));
            }
            other => panic!("unexpected kind {:?}", other),
        }
    }

    #[test]
    fn zero_bound_rejected() {
        assert!(parse_props("p.props", "property b : BOUNDED 0\n").is_err());
    }
}
