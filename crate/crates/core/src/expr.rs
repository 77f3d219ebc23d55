//! The arithmetic expression language germs are written in.
//!
//! Grammar (loosest to tightest): `add/sub`, `mul/div`, unary (`-`, function
//! calls), `pow` (`^`, right-associative). Parentheses and the call forms
//! `abs(x)`, `log(x)`, `sqrt(x)`, `exp(x)`, `sin(x)`, `cos(x)`, `min(a,b)`,
//! `max(a,b)`, `pow(a,b)` and `norm(a, b, ...)` are accepted. `log` is the
//! natural logarithm.
//!
//! Expressions are immutable after parse and evaluation is pure, so they can
//! be evaluated concurrently without restriction. Domain violations (log of a
//! non-positive number, division by zero, ...) are reported as errors, never
//! as silent NaN.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Log,
    Exp,
    Sin,
    Cos,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Log => "log",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
        }
    }
}

/// Parsed expression tree. Variables carry the slot index assigned by the
/// variable list given at parse time, so evaluation over a value slice does
/// not need a name lookup.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Var { name: String, slot: usize },
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
    Norm(Vec<Expression>),
}

/// Map from variable name to value, for callers that do not want to deal with
/// slot order.
pub type VarAssignment = BTreeMap<String, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable `{name}` at position {position}")]
    UnknownVariable { name: String, position: usize },
    #[error("unknown function `{name}` at position {position}")]
    UnknownFunction { name: String, position: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {op} of {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("missing value for variable `{0}`")]
    MissingVariable(String),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{}`", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expression::Binary(BinaryOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expression::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Expression::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Expression::Binary(BinaryOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            self.skip_ws();
            // A minus directly in front of a numeric literal is folded into
            // the constant, so "-1" stays a single node.
            if self
                .src
                .get(self.pos)
                .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
            {
                let mut e = self.power()?;
                if let Expression::Const(c) = e {
                    return Ok(Expression::Const(-c));
                }
                // literal followed by `^`: negate the whole power, matching
                // pow-binds-tighter-than-unary
                e = Expression::Unary(UnaryOp::Neg, Box::new(e));
                return Ok(e);
            }
            let child = self.power()?;
            return Ok(Expression::Unary(UnaryOp::Neg, Box::new(child)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative; the exponent may itself be a signed unary
            let exp = self.unary()?;
            return Ok(Expression::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exp),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => self.error(format!("unexpected character `{}`", c as char)),
            None => self.error("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        if self.src.get(self.pos).is_some_and(|c| *c == b'e' || *c == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.src.get(self.pos).is_some_and(|c| *c == b'+' || *c == b'-') {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expression::Const(v)),
            Err(_) => {
                self.pos = start;
                self.error(format!("invalid number `{text}`"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            return self.call(name, args, start);
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(slot) => Ok(Expression::Var { name, slot }),
            None => Err(ParseError::UnknownVariable {
                name,
                position: start,
            }),
        }
    }

    fn call(
        &mut self,
        name: String,
        mut args: Vec<Expression>,
        position: usize,
    ) -> Result<Expression, ParseError> {
        let unary = |op, mut args: Vec<Expression>| {
            if args.len() != 1 {
                None
            } else {
                Some(Expression::Unary(op, Box::new(args.remove(0))))
            }
        };
        let binary = |op, mut args: Vec<Expression>| {
            if args.len() != 2 {
                None
            } else {
                let a = args.remove(0);
                let b = args.remove(0);
                Some(Expression::Binary(op, Box::new(a), Box::new(b)))
            }
        };
        let built = match name.as_str() {
            "abs" => unary(UnaryOp::Abs, args),
            "sqrt" => unary(UnaryOp::Sqrt, args),
            "log" => unary(UnaryOp::Log, args),
            "exp" => unary(UnaryOp::Exp, args),
            "sin" => unary(UnaryOp::Sin, args),
            "cos" => unary(UnaryOp::Cos, args),
            "min" => binary(BinaryOp::Min, args),
            "max" => binary(BinaryOp::Max, args),
            "pow" => binary(BinaryOp::Pow, args),
            "norm" => {
                if args.is_empty() {
                    None
                } else {
                    Some(Expression::Norm(std::mem::take(&mut args)))
                }
            }
            _ => {
                return Err(ParseError::UnknownFunction { name, position });
            }
        };
        match built {
            Some(e) => Ok(e),
            None => Err(ParseError::Syntax {
                position,
                message: format!("wrong number of arguments to `{name}`"),
            }),
        }
    }
}

/// Parse `text` against the declared variable list.
pub fn parse_expression(text: &str, allowed_vars: &[String]) -> Result<Expression, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: allowed_vars,
    };
    if p.peek().is_none() {
        return p.error("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.error("trailing input");
    }
    Ok(e)
}

impl Expression {
    /// Evaluate over a value slice indexed by variable slot.
    pub fn eval_slice(&self, values: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expression::Const(c) => Ok(*c),
            Expression::Var { name, slot } => values
                .get(*slot)
                .copied()
                .ok_or_else(|| EvalError::MissingVariable(name.clone())),
            Expression::Unary(op, child) => {
                let v = child.eval_slice(values)?;
                match op {
                    UnaryOp::Neg => Ok(-v),
                    UnaryOp::Abs => Ok(v.abs()),
                    UnaryOp::Sqrt => {
                        if v < 0.0 {
                            Err(EvalError::Domain { op: "sqrt", value: v })
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                    UnaryOp::Log => {
                        if v <= 0.0 {
                            Err(EvalError::Domain { op: "log", value: v })
                        } else {
                            Ok(v.ln())
                        }
                    }
                    UnaryOp::Exp => Ok(v.exp()),
                    UnaryOp::Sin => Ok(v.sin()),
                    UnaryOp::Cos => Ok(v.cos()),
                }
            }
            Expression::Binary(op, l, r) => {
                let a = l.eval_slice(values)?;
                let b = r.eval_slice(values)?;
                match op {
                    BinaryOp::Add => Ok(a + b),
                    BinaryOp::Sub => Ok(a - b),
                    BinaryOp::Mul => Ok(a * b),
                    BinaryOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::Domain { op: "div", value: b })
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinaryOp::Pow => pow(a, b),
                    BinaryOp::Min => Ok(a.min(b)),
                    BinaryOp::Max => Ok(a.max(b)),
                }
            }
            Expression::Norm(children) => {
                let mut sum = 0.0;
                for c in children {
                    let v = c.eval_slice(values)?;
                    sum += v * v;
                }
                Ok(sum.sqrt())
            }
        }
    }

    /// Evaluate against a name → value map. The assignment must cover every
    /// variable of the expression.
    pub fn evaluate(&self, a: &VarAssignment) -> Result<f64, EvalError> {
        let n = self.max_slot().map_or(0, |s| s + 1);
        let mut values = vec![f64::NAN; n];
        self.fill_slots(a, &mut values)?;
        self.eval_slice(&values)
    }

    fn fill_slots(&self, a: &VarAssignment, values: &mut [f64]) -> Result<(), EvalError> {
        match self {
            Expression::Const(_) => Ok(()),
            Expression::Var { name, slot } => {
                let v = a
                    .get(name)
                    .copied()
                    .ok_or_else(|| EvalError::MissingVariable(name.clone()))?;
                values[*slot] = v;
                Ok(())
            }
            Expression::Unary(_, c) => c.fill_slots(a, values),
            Expression::Binary(_, l, r) => {
                l.fill_slots(a, values)?;
                r.fill_slots(a, values)
            }
            Expression::Norm(cs) => {
                for c in cs {
                    c.fill_slots(a, values)?;
                }
                Ok(())
            }
        }
    }

    fn max_slot(&self) -> Option<usize> {
        match self {
            Expression::Const(_) => None,
            Expression::Var { slot, .. } => Some(*slot),
            Expression::Unary(_, c) => c.max_slot(),
            Expression::Binary(_, l, r) => l.max_slot().max(r.max_slot()),
            Expression::Norm(cs) => cs.iter().filter_map(|c| c.max_slot()).max(),
        }
    }

    /// Names of the variables appearing in the tree, in slot order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<(usize, String)> = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out.into_iter().map(|(_, n)| n).collect()
    }

    fn collect_vars(&self, out: &mut Vec<(usize, String)>) {
        match self {
            Expression::Const(_) => {}
            Expression::Var { name, slot } => out.push((*slot, name.clone())),
            Expression::Unary(_, c) => c.collect_vars(out),
            Expression::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expression::Norm(cs) => {
                for c in cs {
                    c.collect_vars(out);
                }
            }
        }
    }
}

// `abs(x)^p` with non-integer p goes through exp(p log x) semantics; the
// x = 0 endpoint returns 0 for p > 0 so germs touching the origin evaluate.
fn pow(a: f64, b: f64) -> Result<f64, EvalError> {
    if a > 0.0 {
        Ok(a.powf(b))
    } else if a == 0.0 {
        if b > 0.0 {
            Ok(0.0)
        } else if b == 0.0 {
            Ok(1.0)
        } else {
            Err(EvalError::Domain { op: "pow", value: b })
        }
    } else {
        // negative base: only integer exponents are defined
        if b.fract() == 0.0 && b.abs() < 1e15 {
            Ok(a.powi(b as i32))
        } else {
            Err(EvalError::Domain { op: "pow", value: a })
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) => write!(f, "{c}"),
            Expression::Var { name, .. } => write!(f, "{name}"),
            Expression::Unary(UnaryOp::Neg, c) => write!(f, "(-({c}))"),
            Expression::Unary(op, c) => write!(f, "{}({c})", op.name()),
            Expression::Binary(BinaryOp::Pow, l, r) => write!(f, "pow({l}, {r})"),
            Expression::Binary(op @ (BinaryOp::Min | BinaryOp::Max), l, r) => {
                write!(f, "{}({l}, {r})", op.symbol())
            }
            Expression::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expression::Norm(cs) => {
                write!(f, "norm(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// `parse(print(e))` is structurally identical to `e`.
pub fn print_expression(expr: &Expression) -> String {
    expr.to_string()
}

/// Random expression tree over the given variables, at most `depth` levels
/// deep. Constants are non-negative so the printed form parses back to a
/// structurally identical tree (a leading minus would parse as a `Neg` node).
pub fn random_expression(rng: &mut impl rand::Rng, vars: &[String], depth: usize) -> Expression {
    assert!(!vars.is_empty());
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) {
            let slot = rng.gen_range(0..vars.len());
            Expression::Var {
                name: vars[slot].clone(),
                slot,
            }
        } else {
            Expression::Const(rng.gen_range(0.0..4.0))
        };
    }
    match rng.gen_range(0..3) {
        0 => {
            let op = [
                UnaryOp::Neg,
                UnaryOp::Abs,
                UnaryOp::Sqrt,
                UnaryOp::Log,
                UnaryOp::Exp,
                UnaryOp::Sin,
                UnaryOp::Cos,
            ][rng.gen_range(0..7)];
            Expression::Unary(op, Box::new(random_expression(rng, vars, depth - 1)))
        }
        1 => {
            let op = [
                BinaryOp::Add,
                BinaryOp::Sub,
                BinaryOp::Mul,
                BinaryOp::Div,
                BinaryOp::Pow,
                BinaryOp::Min,
                BinaryOp::Max,
            ][rng.gen_range(0..7)];
            Expression::Binary(
                op,
                Box::new(random_expression(rng, vars, depth - 1)),
                Box::new(random_expression(rng, vars, depth - 1)),
            )
        }
        _ => {
            let count = rng.gen_range(1..=3);
            Expression::Norm(
                (0..count)
                    .map(|_| random_expression(rng, vars, depth - 1))
                    .collect(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn parse(text: &str, names: &[&str]) -> Expression {
        parse_expression(text, &vars(names)).unwrap()
    }

    #[test]
    fn parses_log_curve_formula() {
        let e = parse("abs(x*log(abs(x)))", &["x"]);
        let expected = Expression::Unary(
            UnaryOp::Abs,
            Box::new(Expression::Binary(
                BinaryOp::Mul,
                Box::new(Expression::Var {
                    name: "x".into(),
                    slot: 0,
                }),
                Box::new(Expression::Unary(
                    UnaryOp::Log,
                    Box::new(Expression::Unary(
                        UnaryOp::Abs,
                        Box::new(Expression::Var {
                            name: "x".into(),
                            slot: 0,
                        }),
                    )),
                )),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_log_cone_formula_with_norm() {
        let e = parse("abs(norm(x,y)*log(norm(x,y)))", &["x", "y"]);
        let mut a = VarAssignment::new();
        a.insert("x".into(), 0.06);
        a.insert("y".into(), 0.08);
        let r: f64 = 0.1;
        let expected = (r * r.ln()).abs();
        assert!((e.evaluate(&a).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn incomplete_input_is_a_syntax_error() {
        let err = parse_expression("x +", &vars(&["x"])).unwrap_err();
        match err {
            ParseError::Syntax { position, .. } => assert_eq!(position, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable_and_function() {
        assert!(matches!(
            parse_expression("y", &vars(&["x"])),
            Err(ParseError::UnknownVariable { .. })
        ));
        assert!(matches!(
            parse_expression("tan(x)", &vars(&["x"])),
            Err(ParseError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn reference_evaluation_of_log_curve() {
        // 0.1 * |ln 0.1|; the correctly rounded value of the composite is
        // 0.23025850929940458 (200-bit reference), the step-by-step IEEE
        // double evaluation is one ulp below it.
        let e = parse("abs(x*log(abs(x)))", &["x"]);
        let v = e.eval_slice(&[0.1]).unwrap();
        assert_eq!(v, (0.1f64 * 0.1f64.ln().abs()).abs());
        assert!((v - 0.23025850929940458).abs() <= f64::EPSILON);
    }

    #[test]
    fn identity_and_domain_errors() {
        let e = parse("x", &["x"]);
        assert_eq!(e.eval_slice(&[5.0]).unwrap(), 5.0);
        let e = parse("log(x)", &["x"]);
        assert_eq!(
            e.eval_slice(&[0.0]).unwrap_err(),
            EvalError::Domain { op: "log", value: 0.0 }
        );
        let e = parse("sqrt(x)", &["x"]);
        assert!(e.eval_slice(&[-1.0]).is_err());
        let e = parse("1/x", &["x"]);
        assert!(e.eval_slice(&[0.0]).is_err());
    }

    #[test]
    fn zero_base_power_rule() {
        let e = parse("abs(x)^1.5", &["x"]);
        assert_eq!(e.eval_slice(&[0.0]).unwrap(), 0.0);
        assert!(e.eval_slice(&[-2.0]).unwrap() > 0.0);
        let e = parse("x^0.5", &["x"]);
        assert!(e.eval_slice(&[-1.0]).is_err());
    }

    #[test]
    fn pow_binds_tighter_than_unary_minus() {
        let e = parse("-x^2", &["x"]);
        assert_eq!(e.eval_slice(&[3.0]).unwrap(), -9.0);
        // and both pow spellings agree
        let f = parse("pow(x, 2)", &["x"]);
        assert_eq!(f.eval_slice(&[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn printing_trivial_cases() {
        assert_eq!(print_expression(&Expression::Const(1.0)), "1");
        let e = Expression::Binary(
            BinaryOp::Add,
            Box::new(Expression::Var {
                name: "x".into(),
                slot: 0,
            }),
            Box::new(Expression::Const(2.0)),
        );
        assert_eq!(print_expression(&e), "(x + 2)");
    }

    #[test]
    fn print_parse_round_trip_on_hand_cases() {
        for text in [
            "abs(x*log(abs(x)))",
            "norm(x, y)",
            "min(x, max(y, 1))",
            "-x^2 + x/3 - 0.25",
            "pow(abs(x), 1.5)",
            "(-(1))",
            "-1",
        ] {
            let e = parse(text, &["x", "y"]);
            let printed = print_expression(&e);
            let reparsed = parse(&printed, &["x", "y"]);
            assert_eq!(e, reparsed, "round trip failed for {text} -> {printed}");
        }
    }

    #[test]
    fn evaluation_is_bitwise_deterministic() {
        let e = parse("abs(x*log(abs(x))) + sin(x)*exp(y) - norm(x, y)^1.25", &["x", "y"]);
        let a = e.eval_slice(&[0.3, -0.7]).unwrap();
        let b = e.eval_slice(&[0.3, -0.7]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
