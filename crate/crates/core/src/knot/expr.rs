//! Expression language for operation knots.
//!
//! Precedence from high to low: unary `! -`, `* /`, `+ -`, `< <= > >=`,
//! `== !=`, `&&`, `||`, and the right-associative `?:`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("unbound identifier `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    /// Binding power; larger binds tighter.
    fn power(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Ident(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

/// Fully parenthesized rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::Text(s) => write!(f, "'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
            Expr::Ident(n) => f.write_str(n),
            Expr::Unary(UnaryOp::Not, e) => write!(f, "(!{e})"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Ternary(c, a, b) => write!(f, "({c} ? {a} : {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    End,
}

const OPERATORS: [&str; 18] =
    ["||", "&&", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "!", "?", ":", "(", ")", "="];

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = text[start..i]
                .parse()
                .map_err(|_| ExprError::Syntax { offset: start, message: format!("bad number `{}`", &text[start..i]) })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_owned()), start));
        } else if c == b'\'' {
            let start = i;
            let mut s = String::new();
            let mut chars = text[i + 1..].char_indices();
            loop {
                match chars.next() {
                    None => {
                        return Err(ExprError::Syntax { offset: start, message: "unterminated text literal".into() })
                    }
                    Some((j, '\'')) => {
                        i = i + 1 + j + 1;
                        break;
                    }
                    Some((_, '\\')) => match chars.next() {
                        Some((_, ch)) => s.push(ch),
                        None => {
                            return Err(ExprError::Syntax { offset: start, message: "unterminated text literal".into() })
                        }
                    },
                    Some((_, ch)) => s.push(ch),
                }
            }
            out.push((Tok::Str(s), start));
        } else if let Some(op) = OPERATORS.iter().find(|op| text[i..].starts_with(**op)) {
            if *op == "=" {
                return Err(ExprError::Syntax { offset: i, message: "unexpected `=` (use `==`)".into() });
            }
            out.push((Tok::Op(op), i));
            i += op.len();
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ExprError {
        let found = match self.peek() {
            Tok::End => "end of input".to_owned(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Str(s) => format!("text '{s}'"),
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Op(o) => format!("`{o}`"),
        };
        ExprError::Syntax { offset: self.offset(), message: format!("expected {expected}, found {found}") }
    }

    fn expect(&mut self, op: &'static str) -> Result<(), ExprError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("`{op}`")))
        }
    }

    fn ternary(&mut self) -> Result<Expr, ExprError> {
        let cond = self.binary(1)?;
        if *self.peek() == Tok::Op("?") {
            self.bump();
            let a = self.ternary()?;
            self.expect(":")?;
            let b = self.ternary()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_power: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op(s) => match *s {
                    "||" => BinaryOp::Or,
                    "&&" => BinaryOp::And,
                    "==" => BinaryOp::Eq,
                    "!=" => BinaryOp::Ne,
                    "<" => BinaryOp::Lt,
                    "<=" => BinaryOp::Le,
                    ">" => BinaryOp::Gt,
                    ">=" => BinaryOp::Ge,
                    "+" => BinaryOp::Add,
                    "-" => BinaryOp::Sub,
                    "*" => BinaryOp::Mul,
                    "/" => BinaryOp::Div,
                    _ => break,
                },
                _ => break,
            };
            if op.power() < min_power {
                break;
            }
            self.bump();
            let rhs = self.binary(op.power() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Tok::Op("!") => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)))
            }
            Tok::Op("-") => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Text(s))
            }
            Tok::Ident(n) => {
                self.bump();
                Ok(Expr::Ident(n))
            }
            Tok::Op("(") => {
                self.bump();
                let e = self.ternary()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(self.error("an operand")),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    if *p.peek() == Tok::End {
        return Err(ExprError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let e = p.ternary()?;
    if *p.peek() != Tok::End {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    /// Distinct identifiers in order of first appearance.
    pub fn identifiers(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::Ident(n) => {
                    if !out.contains(&n.as_str()) {
                        out.push(n);
                    }
                }
                Expr::Number(_) | Expr::Text(_) => {}
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Ternary(c, a, b) => {
                    walk(c, out);
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Resolves identifiers to positions in `names`.
    pub fn compile(&self, names: &[&str]) -> Result<Compiled, ExprError> {
        fn go(e: &Expr, names: &[&str]) -> Result<Node, ExprError> {
            Ok(match e {
                Expr::Number(v) => Node::Const(Scalar::number(*v)),
                Expr::Text(s) => Node::Const(Scalar::Text(s.clone())),
                Expr::Ident(n) => {
                    Node::Slot(names.iter().position(|x| x == n).ok_or_else(|| ExprError::Unbound(n.clone()))?)
                }
                Expr::Unary(op, a) => Node::Unary(*op, Box::new(go(a, names)?)),
                Expr::Binary(op, a, b) => Node::Binary(*op, Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Ternary(c, a, b) => {
                    Node::Ternary(Box::new(go(c, names)?), Box::new(go(a, names)?), Box::new(go(b, names)?))
                }
            })
        }
        Ok(Compiled { root: go(self, names)? })
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(Scalar),
    Slot(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Ternary(Box<Node>, Box<Node>, Box<Node>),
}

/// Per-evaluation side information.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub divisions_by_zero: usize,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    root: Node,
}

fn truthy(v: f64) -> bool {
    v != 0.0
}

fn flag(b: bool) -> Scalar {
    Scalar::Number(if b { 1.0 } else { 0.0 })
}

impl Compiled {
    /// Evaluates with `slots[i]` bound to the i-th compiled name.
    pub fn eval(&self, slots: &[&Scalar], stats: &mut EvalStats) -> Result<Scalar, ExprError> {
        eval_node(&self.root, slots, stats)
    }
}

fn eval_node(n: &Node, slots: &[&Scalar], stats: &mut EvalStats) -> Result<Scalar, ExprError> {
    match n {
        Node::Const(v) => Ok(v.clone()),
        Node::Slot(i) => Ok(slots[*i].clone()),
        Node::Unary(op, a) => {
            let a = eval_node(a, slots, stats)?;
            match (op, a) {
                (_, Scalar::Null) => Ok(Scalar::Null),
                (UnaryOp::Neg, Scalar::Number(v)) => Ok(Scalar::number(-v)),
                (UnaryOp::Not, Scalar::Number(v)) => Ok(flag(!truthy(v))),
                (op, Scalar::Text(t)) => {
                    Err(ExprError::Type(format!("`{}` needs a number, got text '{t}'", if *op == UnaryOp::Neg { "-" } else { "!" })))
                }
            }
        }
        Node::Binary(op, a, b) => {
            let a = eval_node(a, slots, stats)?;
            let b = eval_node(b, slots, stats)?;
            binary(*op, a, b, stats)
        }
        Node::Ternary(c, a, b) => match eval_node(c, slots, stats)? {
            Scalar::Null => Ok(Scalar::Null),
            Scalar::Number(v) => {
                if truthy(v) {
                    eval_node(a, slots, stats)
                } else {
                    eval_node(b, slots, stats)
                }
            }
            Scalar::Text(t) => Err(ExprError::Type(format!("condition must be a number, got text '{t}'"))),
        },
    }
}

fn binary(op: BinaryOp, a: Scalar, b: Scalar, stats: &mut EvalStats) -> Result<Scalar, ExprError> {
    use BinaryOp::*;
    match (&a, &b) {
        (Scalar::Null, _) | (_, Scalar::Null) => Ok(Scalar::Null),
        (Scalar::Number(x), Scalar::Number(y)) => {
            let (x, y) = (*x, *y);
            Ok(match op {
                Or => flag(truthy(x) || truthy(y)),
                And => flag(truthy(x) && truthy(y)),
                Eq => flag(x == y),
                Ne => flag(x != y),
                Lt => flag(x < y),
                Le => flag(x <= y),
                Gt => flag(x > y),
                Ge => flag(x >= y),
                Add => Scalar::number(x + y),
                Sub => Scalar::number(x - y),
                Mul => Scalar::number(x * y),
                Div => {
                    if y == 0.0 {
                        stats.divisions_by_zero += 1;
                        Scalar::Null
                    } else {
                        Scalar::number(x / y)
                    }
                }
            })
        }
        (Scalar::Text(x), Scalar::Text(y)) => match op {
            Eq => Ok(flag(x == y)),
            Ne => Ok(flag(x != y)),
            Lt => Ok(flag(x < y)),
            Le => Ok(flag(x <= y)),
            Gt => Ok(flag(x > y)),
            Ge => Ok(flag(x >= y)),
            _ => Err(ExprError::Type(format!("`{}` is not defined for text operands", op.symbol()))),
        },
        _ => Err(ExprError::Type(format!(
            "`{}` between {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        ))),
    }
}

/// Evaluates `text` once with named bindings.
pub fn eval_expression(text: &str, bindings: &[(&str, Scalar)]) -> Result<Scalar, ExprError> {
    let e = parse_expression(text)?;
    let names: Vec<&str> = bindings.iter().map(|b| b.0).collect();
    let compiled = e.compile(&names)?;
    let slots: Vec<&Scalar> = bindings.iter().map(|b| &b.1).collect();
    compiled.eval(&slots, &mut EvalStats::default())
}

/// Weighted mean over knot names: `(w1*a + w2*b + ...) / (w1 + w2 + ...)`
/// with the denominator taken over absolute weights when they cancel.
pub fn weighted_average_expression(terms: &[(&str, f64)]) -> String {
    let sum: f64 = terms.iter().map(|t| t.1).sum();
    let denom = if sum.abs() > 1e-12 { sum } else { terms.iter().map(|t| t.1.abs()).sum::<f64>().max(1.0) };
    let num: Vec<String> = terms
        .iter()
        .filter(|t| t.1 != 0.0)
        .map(|(name, w)| format!("{w:?}*{name}"))
        .collect();
    if num.is_empty() {
        return "0".to_owned();
    }
    format!("({}) / {denom:?}", num.join(" + "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str) -> Scalar {
        eval_expression(text, &[]).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1+2*3"), Scalar::number(7.0));
        assert_eq!(ev("(1+2)*3"), Scalar::number(9.0));
        assert_eq!(ev("10-4-3"), Scalar::number(3.0));
        assert_eq!(ev("8/4/2"), Scalar::number(1.0));
        assert_eq!(ev("-2*3"), Scalar::number(-6.0));
        assert_eq!(ev("1 < 2 == 1"), Scalar::number(1.0));
        assert_eq!(ev("!0 + 1"), Scalar::number(2.0));
    }

    #[test]
    fn ternary_with_logic() {
        assert_eq!(ev("'a'=='a' && 0.4>0.5 ? 10 : 20"), Scalar::number(20.0));
        assert_eq!(ev("1 ? 2 : 0 ? 3 : 4"), Scalar::number(2.0));
        assert_eq!(ev("0 ? 2 : 0 ? 3 : 4"), Scalar::number(4.0));
        assert_eq!(parse_expression("a ? b : c ? d : e").unwrap().to_string(), "(a ? b : (c ? d : e))");
    }

    #[test]
    fn dangerous_sidewalk_operator() {
        let op = "(mat=='brick'||mat=='conc') && shadow>0.5?0:1";
        let run = |mat: &str, shadow: f64| {
            eval_expression(op, &[("mat", Scalar::text(mat)), ("shadow", Scalar::number(shadow))]).unwrap()
        };
        assert_eq!(run("brick", 0.6), Scalar::number(0.0));
        assert_eq!(run("conc", 0.9), Scalar::number(0.0));
        assert_eq!(run("granite", 0.6), Scalar::number(1.0));
        assert_eq!(run("brick", 0.5), Scalar::number(1.0));
    }

    #[test]
    fn syntax_error_offsets() {
        assert_eq!(parse_expression("x + ").unwrap_err(), ExprError::Syntax {
            offset: 4,
            message: "expected an operand, found end of input".into()
        });
        assert!(matches!(parse_expression("a = b"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("(a"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("a b"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("'abc"), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("a # b"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("   "), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn nulls_propagate() {
        let b = [("x", Scalar::Null), ("y", Scalar::number(1.0))];
        assert_eq!(eval_expression("x + y", &b).unwrap(), Scalar::Null);
        assert_eq!(eval_expression("x == x", &b).unwrap(), Scalar::Null);
        assert_eq!(eval_expression("y || x", &b).unwrap(), Scalar::Null);
        assert_eq!(eval_expression("x ? 1 : 2", &b).unwrap(), Scalar::Null);
        assert_eq!(eval_expression("y ? x : 2", &b).unwrap(), Scalar::Null);
    }

    #[test]
    fn division_by_zero_is_null_and_counted() {
        let e = parse_expression("a / b").unwrap().compile(&["a", "b"]).unwrap();
        let mut stats = EvalStats::default();
        let (one, zero) = (Scalar::number(1.0), Scalar::number(0.0));
        assert_eq!(e.eval(&[&one, &zero], &mut stats).unwrap(), Scalar::Null);
        assert_eq!(stats.divisions_by_zero, 1);
    }

    #[test]
    fn type_errors() {
        assert!(matches!(eval_expression("'a' < 1", &[]), Err(ExprError::Type(_))));
        assert!(matches!(eval_expression("'a' == 1", &[]), Err(ExprError::Type(_))));
        assert!(matches!(eval_expression("'a' + 'b'", &[]), Err(ExprError::Type(_))));
        assert!(matches!(eval_expression("-'a'", &[]), Err(ExprError::Type(_))));
        assert_eq!(eval_expression("'a' < 'b'", &[]).unwrap(), Scalar::number(1.0));
    }

    #[test]
    fn unbound_identifier() {
        assert_eq!(eval_expression("q + 1", &[]).unwrap_err(), ExprError::Unbound("q".into()));
        assert_eq!(parse_expression("a + b * a").unwrap().identifiers(), vec!["a", "b"]);
    }

    #[test]
    fn text_escapes() {
        assert_eq!(ev(r"'it\'s'"), Scalar::text("it's"));
        let e = parse_expression(r"'a\\b'").unwrap();
        assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn weighted_average_of_constant_inputs_is_the_constant() {
        let terms = [("jun", 1.0), ("jul", 1.0), ("aug", 1.0), ("dec", -1.0), ("jan", -1.0), ("feb", -1.0), ("mar", 2.0)];
        let text = weighted_average_expression(&terms);
        let bindings: Vec<(&str, Scalar)> = terms.iter().map(|t| (t.0, Scalar::number(0.25))).collect();
        assert_eq!(eval_expression(&text, &bindings).unwrap(), Scalar::number(0.25));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Number(v as f64 / 8.0)),
            "[a-z]{1,6}".prop_map(Expr::Text),
            prop::sample::select(vec!["a", "b", "knot_s0"]).prop_map(|s| Expr::Ident(s.to_owned())),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            let ops = prop::sample::select(vec![
                BinaryOp::Or,
                BinaryOp::And,
                BinaryOp::Eq,
                BinaryOp::Ne,
                BinaryOp::Lt,
                BinaryOp::Le,
                BinaryOp::Gt,
                BinaryOp::Ge,
                BinaryOp::Add,
                BinaryOp::Sub,
                BinaryOp::Mul,
                BinaryOp::Div,
            ]);
            prop_oneof![
                (prop::bool::ANY, inner.clone())
                    .prop_map(|(n, e)| Expr::Unary(if n { UnaryOp::Not } else { UnaryOp::Neg }, Box::new(e))),
                (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone(), inner)
                    .prop_map(|(c, a, b)| Expr::Ternary(Box::new(c), Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr()) {
            prop_assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
        }

        #[test]
        fn arithmetic_matches_native(a in -1e6f64..1e6, b in -1e6f64..1e6, c in 1f64..1e3) {
            let bindings = [("a", Scalar::number(a)), ("b", Scalar::number(b)), ("c", Scalar::number(c))];
            let got = eval_expression("a + b * c - a / c", &bindings).unwrap();
            prop_assert_eq!(got, Scalar::number(a + b * c - a / c));
        }
    }
}
