//! Tokenizer shared by all the textual formats. `#` starts a comment to
//! end of line. Identifiers may contain dots (namespace paths); names
//! with other special characters (the `&` of the traditional place names)
//! are written double-quoted.

use crate::diag::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare identifier or quoted name.
    Ident(String),
    /// Number with optional unit suffix glued on (`500`, `0.3ms`).
    Number { raw: String, unit: Option<String> },
    Str(String),
    Eq,        // =
    EqEq,      // ==
    Ne,        // !=
    Le,        // <=
    Ge,        // >=
    Lt,        // <
    Gt,        // >
    AndAnd,    // &&
    OrOr,      // ||
    Bang,      // !
    Plus,      // +
    Star,      // *
    Comma,     // ,
    Colon,     // :
    LParen,    // (
    RParen,    // )
    LBrack,    // [
    RBrack,    // ]
    LBrace,    // {
    RBrace,    // }
    Arrow,     // ->
    LeadsTo,   // -->
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Number { raw, unit } => match unit {
                Some(u) => format!("`{}{}`", raw, u),
                None => format!("`{}`", raw),
            },
            Tok::Str(s) => format!("\"{}\"", s),
            Tok::Eof => "end of input".to_string(),
            t => format!(
                "`{}`",
                match t {
                    Tok::Eq => "=",
                    Tok::EqEq => "==",
                    Tok::Ne => "!=",
                    Tok::Le => "<=",
                    Tok::Ge => ">=",
                    Tok::Lt => "<",
                    Tok::Gt => ">",
                    Tok::AndAnd => "&&",
                    Tok::OrOr => "||",
                    Tok::Bang => "!",
                    Tok::Plus => "+",
                    Tok::Star => "*",
                    Tok::Comma => ",",
                    Tok::Colon => ":",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::Arrow => "->",
                    Tok::LeadsTo => "-->",
                    _ => unreachable!(),
                }
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(file: &str, text: &str) -> Result<Vec<Spanned>, Diagnostic> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Spanned {
                tok: $tok,
                line: $l,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '"' => {
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        None => {
                            return Err(Diagnostic::error(file, tl, tc, "unterminated string"))
                        }
                        Some('"') => {
                            bump(&mut chars);
                            break;
                        }
                        Some('\n') => {
                            return Err(Diagnostic::error(
                                file,
                                tl,
                                tc,
                                "unterminated string before end of line",
                            ))
                        }
                        Some(_) => s.push(bump(&mut chars)),
                    }
                }
                push!(Tok::Str(s), tl, tc);
            }
            c if c.is_ascii_digit() => {
                let mut raw = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        raw.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'.') {
                    // lookahead: a fraction digit must follow (dots also
                    // appear in namespaced ids, never after a number here)
                    let mut clone = chars.clone();
                    clone.next();
                    if clone.peek().map_or(false, |c| c.is_ascii_digit()) {
                        raw.push(bump(&mut chars));
                        while let Some(&c) = chars.peek() {
                            if c.is_ascii_digit() {
                                raw.push(bump(&mut chars));
                            } else {
                                break;
                            }
                        }
                    }
                }
                let mut unit = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphabetic() {
                        unit.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                push!(
                    Tok::Number {
                        raw,
                        unit: if unit.is_empty() { None } else { Some(unit) },
                    },
                    tl,
                    tc
                );
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), tl, tc);
            }
            '-' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('-') => {
                        bump(&mut chars);
                        match chars.peek() {
                            Some('>') => {
                                bump(&mut chars);
                                push!(Tok::LeadsTo, tl, tc);
                            }
                            _ => {
                                return Err(Diagnostic::error(
                                    file,
                                    tl,
                                    tc,
                                    "expected `-->` after `--`",
                                ))
                            }
                        }
                    }
                    Some('>') => {
                        bump(&mut chars);
                        push!(Tok::Arrow, tl, tc);
                    }
                    Some(c) if c.is_ascii_digit() => {
                        let mut raw = String::from("-");
                        while let Some(&c) = chars.peek() {
                            if c.is_ascii_digit() {
                                raw.push(bump(&mut chars));
                            } else {
                                break;
                            }
                        }
                        if chars.peek() == Some(&'.') {
                            let mut clone = chars.clone();
                            clone.next();
                            if clone.peek().map_or(false, |c| c.is_ascii_digit()) {
                                raw.push(bump(&mut chars));
                                while let Some(&c) = chars.peek() {
                                    if c.is_ascii_digit() {
                                        raw.push(bump(&mut chars));
                                    } else {
                                        break;
                                    }
                                }
                            }
                        }
                        push!(Tok::Number { raw, unit: None }, tl, tc);
                    }
                    _ => {
                        return Err(Diagnostic::error(
                            file,
                            tl,
                            tc,
                            "stray `-`: expected `->`, `-->` or a number",
                        ))
                    }
                }
            }
            '=' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::EqEq, tl, tc);
                } else {
                    push!(Tok::Eq, tl, tc);
                }
            }
            '!' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::Ne, tl, tc);
                } else {
                    push!(Tok::Bang, tl, tc);
                }
            }
            '<' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::Le, tl, tc);
                } else {
                    push!(Tok::Lt, tl, tc);
                }
            }
            '>' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::Ge, tl, tc);
                } else {
                    push!(Tok::Gt, tl, tc);
                }
            }
            '&' => {
                bump(&mut chars);
                if chars.peek() == Some(&'&') {
                    bump(&mut chars);
                    push!(Tok::AndAnd, tl, tc);
                } else {
                    return Err(Diagnostic::error(
                        file,
                        tl,
                        tc,
                        "stray `&`: names containing `&` must be double-quoted",
                    ));
                }
            }
            '|' => {
                bump(&mut chars);
                if chars.peek() == Some(&'|') {
                    bump(&mut chars);
                    push!(Tok::OrOr, tl, tc);
                } else {
                    return Err(Diagnostic::error(file, tl, tc, "stray `|`"));
                }
            }
            '+' => {
                bump(&mut chars);
                push!(Tok::Plus, tl, tc);
            }
            '*' => {
                bump(&mut chars);
                push!(Tok::Star, tl, tc);
            }
            ',' => {
                bump(&mut chars);
                push!(Tok::Comma, tl, tc);
            }
            ':' => {
                bump(&mut chars);
                push!(Tok::Colon, tl, tc);
            }
            '(' => {
                bump(&mut chars);
                push!(Tok::LParen, tl, tc);
            }
            ')' => {
                bump(&mut chars);
                push!(Tok::RParen, tl, tc);
            }
            '[' => {
                bump(&mut chars);
                push!(Tok::LBrack, tl, tc);
            }
            ']' => {
                bump(&mut chars);
                push!(Tok::RBrack, tl, tc);
            }
            '{' => {
                bump(&mut chars);
                push!(Tok::LBrace, tl, tc);
            }
            '}' => {
                bump(&mut chars);
                push!(Tok::RBrace, tl, tc);
            }
            other => {
                return Err(Diagnostic::error(
                    file,
                    tl,
                    tc,
                    format!("unexpected character `{}`", other),
                ))
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_quoted_paper_names() {
        let toks = lex("t", r#"place "Pp&p_Init" tokens=1"#).unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("place".into()));
        assert_eq!(toks[1].tok, Tok::Str("Pp&p_Init".into()));
        assert_eq!(toks[2].tok, Tok::Ident("tokens".into()));
        assert_eq!(toks[3].tok, Tok::Eq);
    }

    #[test]
    fn lexes_time_units_and_intervals() {
        let toks = lex("t", "interval=[0.3ms,5ms)").unwrap();
        assert!(matches!(
            &toks[2].tok,
            Tok::Number { raw, unit: Some(u) } if raw == "0.3" && u == "ms"
        ));
        assert_eq!(toks[5].tok, Tok::RParen);
    }

    #[test]
    fn distinguishes_arrows() {
        let toks = lex("t", "a --> b -> c").unwrap();
        assert_eq!(toks[1].tok, Tok::LeadsTo);
        assert_eq!(toks[3].tok, Tok::Arrow);
    }

    #[test]
    fn stray_ampersand_points_at_token() {
        let err = lex("t", "place Pp&p").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 9);
        assert!(err.message.contains("double-quoted"));
    }

    #[test]
    fn comments_ignored() {
        let toks = lex("t", "# heading\nvar x = 3 # trailing\n").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("var".into()));
        assert_eq!(toks.len(), 5); // var x = 3 EOF
    }

    #[test]
    fn dotted_idents_stay_single_tokens() {
        let toks = lex("t", "M(plant.Pp_Init)==1").unwrap();
        assert_eq!(toks[2].tok, Tok::Ident("plant.Pp_Init".into()));
    }
}
