//! Guard and update expressions over markings and integer variables.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Comparison operators usable in guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Expression tree. Integer-valued forms: literals, variable references,
/// `M(place)` marking counts, and `+`. Boolean-valued forms: boolean
/// literals, comparisons, and `&& || !`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Marking(String),
    Add(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn marking(place: impl Into<String>) -> Expr {
        Expr::Marking(place.into())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    /// `var == n` shorthand; the single most common guard form.
    pub fn var_eq(name: impl Into<String>, n: i64) -> Expr {
        Expr::eq(Expr::var(name), Expr::Int(n))
    }

    /// `M(place) == n` shorthand.
    pub fn marking_eq(place: impl Into<String>, n: i64) -> Expr {
        Expr::eq(Expr::marking(place), Expr::Int(n))
    }

    /// Conjunction of a guard with another; `true` conjuncts are dropped.
    pub fn conjoin(self, other: Expr) -> Expr {
        match (&self, &other) {
            (Expr::Bool(true), _) => other,
            (_, Expr::Bool(true)) => self,
            _ => Expr::and(self, other),
        }
    }

    /// Collects all variable names referenced by the expression.
    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Marking(_) => {}
            Expr::Add(a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expr::Not(a) => a.variables(out),
        }
    }

    /// Collects all place names referenced via `M(...)`.
    pub fn places(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Marking(p) => {
                out.insert(p.clone());
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::Add(a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.places(out);
                b.places(out);
            }
            Expr::Not(a) => a.places(out),
        }
    }

    /// Rewrites place references through `f` (used by namespacing).
    pub fn map_places(&self, f: &impl Fn(&str) -> String) -> Expr {
        match self {
            Expr::Marking(p) => Expr::Marking(f(p)),
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => Expr::add(a.map_places(f), b.map_places(f)),
            Expr::Cmp(op, a, b) => Expr::cmp(*op, a.map_places(f), b.map_places(f)),
            Expr::And(a, b) => Expr::and(a.map_places(f), b.map_places(f)),
            Expr::Or(a, b) => Expr::or(a.map_places(f), b.map_places(f)),
            Expr::Not(a) => Expr::not(a.map_places(f)),
        }
    }

    /// Static type of the expression, if well-typed.
    pub fn typecheck(&self) -> Result<ExprType, EvalError> {
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Marking(_) => Ok(ExprType::Int),
            Expr::Bool(_) => Ok(ExprType::Bool),
            Expr::Add(a, b) => {
                expect(a, ExprType::Int)?;
                expect(b, ExprType::Int)?;
                Ok(ExprType::Int)
            }
            Expr::Cmp(_, a, b) => {
                expect(a, ExprType::Int)?;
                expect(b, ExprType::Int)?;
                Ok(ExprType::Bool)
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                expect(a, ExprType::Bool)?;
                expect(b, ExprType::Bool)?;
                Ok(ExprType::Bool)
            }
            Expr::Not(a) => {
                expect(a, ExprType::Bool)?;
                Ok(ExprType::Bool)
            }
        }
    }
}

fn expect(e: &Expr, want: ExprType) -> Result<(), EvalError> {
    let got = e.typecheck()?;
    if got != want {
        return Err(EvalError::Type {
            expr: e.to_string(),
            want,
            got,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Int,
    Bool,
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Int => write!(f, "int"),
            ExprType::Bool => write!(f, "bool"),
        }
    }
}

/// Evaluation result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn as_int(self) -> Result<i64, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            Value::Bool(_) => Err(EvalError::Type {
                expr: String::new(),
                want: ExprType::Int,
                got: ExprType::Bool,
            }),
        }
    }

    pub fn as_bool(self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(EvalError::Type {
                expr: String::new(),
                want: ExprType::Bool,
                got: ExprType::Int,
            }),
        }
    }
}

/// Evaluation faults signal a modeling or composition bug, never a normal
/// verification outcome.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unresolved place `{0}`")]
    UnresolvedPlace(String),
    #[error("unresolved variable `{0}`")]
    UnresolvedVariable(String),
    #[error("type error in `{expr}`: expected {want}, got {got}")]
    Type {
        expr: String,
        want: ExprType,
        got: ExprType,
    },
    #[error("integer overflow while evaluating expression")]
    Overflow,
}

/// Lookup interface expressions are evaluated against.
pub trait EvalContext {
    fn marking_count(&self, place: &str) -> Option<i64>;
    fn variable(&self, var: &str) -> Option<i64>;
}

/// Evaluates an expression against a context. Pure: never mutates state.
pub fn eval_expr(expr: &Expr, ctx: &impl EvalContext) -> Result<Value, EvalError> {
    match expr {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Var(v) => ctx
            .variable(v)
            .map(Value::Int)
            .ok_or_else(|| EvalError::UnresolvedVariable(v.clone())),
        Expr::Marking(p) => ctx
            .marking_count(p)
            .map(Value::Int)
            .ok_or_else(|| EvalError::UnresolvedPlace(p.clone())),
        Expr::Add(a, b) => {
            let a = eval_expr(a, ctx)?.as_int()?;
            let b = eval_expr(b, ctx)?.as_int()?;
            a.checked_add(b).map(Value::Int).ok_or(EvalError::Overflow)
        }
        Expr::Cmp(op, a, b) => {
            let a = eval_expr(a, ctx)?.as_int()?;
            let b = eval_expr(b, ctx)?.as_int()?;
            Ok(Value::Bool(op.apply(a, b)))
        }
        Expr::And(a, b) => {
            let a = eval_expr(a, ctx)?.as_bool()?;
            // no short-circuit: both sides must be well-formed
            let b = eval_expr(b, ctx)?.as_bool()?;
            Ok(Value::Bool(a && b))
        }
        Expr::Or(a, b) => {
            let a = eval_expr(a, ctx)?.as_bool()?;
            let b = eval_expr(b, ctx)?.as_bool()?;
            Ok(Value::Bool(a || b))
        }
        Expr::Not(a) => Ok(Value::Bool(!eval_expr(a, ctx)?.as_bool()?)),
    }
}

/// Precedence levels for printing: Or < And < Not < Cmp < Add < atom.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(..) => 3,
        Expr::Cmp(..) => 4,
        Expr::Add(..) => 5,
        _ => 6,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, min: u8) -> fmt::Result {
    if precedence(child) < min {
        write!(f, "({})", child)
    } else {
        write!(f, "{}", child)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{}", n),
            Expr::Bool(b) => write!(f, "{}", b),
            Expr::Var(v) => write!(f, "{}", crate::net::display_id(v)),
            Expr::Marking(p) => write!(f, "M({})", crate::net::display_id(p)),
            Expr::Add(a, b) => {
                fmt_child(f, a, 5)?;
                write!(f, "+")?;
                fmt_child(f, b, 6)
            }
            Expr::Cmp(op, a, b) => {
                fmt_child(f, a, 5)?;
                write!(f, "{}", op.symbol())?;
                fmt_child(f, b, 5)
            }
            Expr::And(a, b) => {
                fmt_child(f, a, 2)?;
                write!(f, " && ")?;
                fmt_child(f, b, 3)
            }
            Expr::Or(a, b) => {
                fmt_child(f, a, 1)?;
                write!(f, " || ")?;
                fmt_child(f, b, 2)
            }
            Expr::Not(a) => {
                write!(f, "!")?;
                fmt_child(f, a, 6)
            }
        }
    }
}

/// Ordered list of `(variable, integer expression)` assignments executed on
/// transition firing. All right-hand sides read the pre-firing valuation;
/// marking references are not allowed in updates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct UpdateList(pub Vec<(String, Expr)>);

impl UpdateList {
    pub fn new() -> Self {
        UpdateList(Vec::new())
    }

    pub fn set(mut self, var: impl Into<String>, expr: Expr) -> Self {
        self.0.push((var.into(), expr));
        self
    }

    pub fn set_int(self, var: impl Into<String>, n: i64) -> Self {
        self.set(var, Expr::Int(n))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// A variable may appear at most once per list.
    pub fn check_unique(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (v, _) in &self.0 {
            if !seen.insert(v.clone()) {
                return Err(format!("variable `{}` assigned more than once", v));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    struct MapCtx {
        marking: BTreeMap<String, i64>,
        vars: BTreeMap<String, i64>,
    }

    impl EvalContext for MapCtx {
        fn marking_count(&self, place: &str) -> Option<i64> {
            self.marking.get(place).copied()
        }
        fn variable(&self, var: &str) -> Option<i64> {
            self.vars.get(var).copied()
        }
    }

    fn ctx(marking: &[(&str, i64)], vars: &[(&str, i64)]) -> MapCtx {
        MapCtx {
            marking: marking.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            vars: vars.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn marking_lookup() {
        let c = ctx(&[("Pcm_Init", 1)], &[]);
        let e = Expr::marking_eq("Pcm_Init", 1);
        assert_eq!(eval_expr(&e, &c), Ok(Value::Bool(true)));
    }

    #[test]
    fn marking_sum_le() {
        // Property 3 shape: with all three places empty the sum is 0 <= 1.
        let c = ctx(&[("Pcm_Init", 0), ("Pp&p_P&P1", 0), ("Pp&p_P&P2", 0)], &[]);
        let sum = Expr::add(
            Expr::add(Expr::marking("Pcm_Init"), Expr::marking("Pp&p_P&P1")),
            Expr::marking("Pp&p_P&P2"),
        );
        let e = Expr::cmp(CmpOp::Le, sum, Expr::Int(1));
        assert_eq!(eval_expr(&e, &c), Ok(Value::Bool(true)));
    }

    #[test]
    fn variable_compare() {
        let c = ctx(&[], &[("activeConveyor", 2)]);
        let e = Expr::var_eq("activeConveyor", 1);
        assert_eq!(eval_expr(&e, &c), Ok(Value::Bool(false)));
    }

    #[test]
    fn unresolved_reference_faults() {
        let c = ctx(&[], &[]);
        let e = Expr::marking_eq("Px", 1);
        assert_eq!(
            eval_expr(&e, &c),
            Err(EvalError::UnresolvedPlace("Px".into()))
        );
    }

    #[test]
    fn type_errors_detected() {
        let e = Expr::and(Expr::Int(1), Expr::Bool(true));
        assert!(e.typecheck().is_err());
        let e = Expr::add(Expr::Bool(true), Expr::Int(1));
        assert!(e.typecheck().is_err());
        let ok = Expr::cmp(
            CmpOp::Lt,
            Expr::add(Expr::var("x"), Expr::Int(1)),
            Expr::Int(4),
        );
        assert_eq!(ok.typecheck(), Ok(ExprType::Bool));
    }

    #[test]
    fn display_parenthesization() {
        let e = Expr::or(
            Expr::and(Expr::var_eq("a", 1), Expr::var_eq("b", 2)),
            Expr::not(Expr::var_eq("c", 3)),
        );
        assert_eq!(e.to_string(), "a==1 && b==2 || !(c==3)");
        let sum = Expr::cmp(
            CmpOp::Le,
            Expr::add(Expr::marking("P1"), Expr::marking("P2")),
            Expr::Int(1),
        );
        assert_eq!(sum.to_string(), "M(P1)+M(P2)<=1");
    }

    #[test]
    fn duplicate_update_target_rejected() {
        let u = UpdateList::new().set_int("x", 1).set_int("x", 2);
        assert!(u.check_unique().is_err());
        let ok = UpdateList::new().set_int("x", 1).set_int("y", 2);
        assert!(ok.check_unique().is_ok());
    }
}
