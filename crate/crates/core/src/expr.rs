//! Scalar expressions over variables `x1..xn` with value-plus-gradient
//! evaluation by forward-mode differentiation.
//!
//! Only smooth primitives are admitted (no abs/min/max), so every parsed
//! expression is C^1 on its domain and the smooth-map coderivative formula
//! applies pointwise. Expressions recognized as affine carry a compiled
//! `(row, offset)` pair so Jacobians of affine families are constant.

use std::fmt;

use crate::error::Error;
use crate::linalg::dot;
use crate::Result;

const DIV_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
}

/// A parsed, immutable expression over `n_vars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Node,
    n_vars: usize,
    affine: Option<(Vec<f64>, f64)>,
}

impl Expression {
    pub fn parse(text: &str, n_vars: usize) -> Result<Self> {
        let ast = Parser::new(text, n_vars).parse()?;
        let affine = affine_form(&ast, n_vars);
        Ok(Expression {
            ast,
            n_vars,
            affine,
        })
    }

    /// Wraps an existing expression as `self + offset` (coordinate of a
    /// constant shift); used by the dominated-augmentation probes.
    pub fn shifted(&self, offset: f64) -> Self {
        let ast = Node::Add(Box::new(self.ast.clone()), Box::new(Node::Const(offset)));
        let affine = self.affine.clone().map(|(row, c)| (row, c + offset));
        Expression {
            ast,
            n_vars: self.n_vars,
            affine,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    /// `(row, offset)` when the expression is affine.
    pub fn affine(&self) -> Option<&(Vec<f64>, f64)> {
        self.affine.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        crate::linalg::check_dim(self.n_vars, x)?;
        if let Some((row, c)) = &self.affine {
            return Ok(dot(row, x) + c);
        }
        eval_node(&self.ast, x)
    }

    /// Value and exact forward-mode gradient in one pass.
    pub fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        crate::linalg::check_dim(self.n_vars, x)?;
        if let Some((row, c)) = &self.affine {
            return Ok((dot(row, x) + c, row.clone()));
        }
        let d = eval_dual(&self.ast, x, self.n_vars)?;
        Ok((d.0, d.1))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_node(&self.ast, f)
    }
}

fn eval_node(node: &Node, x: &[f64]) -> Result<f64> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => x[*i],
        Node::Add(a, b) => eval_node(a, x)? + eval_node(b, x)?,
        Node::Sub(a, b) => eval_node(a, x)? - eval_node(b, x)?,
        Node::Mul(a, b) => eval_node(a, x)? * eval_node(b, x)?,
        Node::Div(a, b) => {
            let den = eval_node(b, x)?;
            if den.abs() < DIV_EPS {
                return Err(Error::Domain(format!("division by {den} (near zero)")));
            }
            eval_node(a, x)? / den
        }
        Node::Pow(a, n) => {
            let base = eval_node(a, x)?;
            if *n < 0 && base.abs() < DIV_EPS {
                return Err(Error::Domain(format!("0^{n} is undefined")));
            }
            base.powi(*n)
        }
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Sin(a) => eval_node(a, x)?.sin(),
        Node::Cos(a) => eval_node(a, x)?.cos(),
        Node::Exp(a) => eval_node(a, x)?.exp(),
    })
}

/// Vector-mode dual number: value plus full gradient.
fn eval_dual(node: &Node, x: &[f64], n: usize) -> Result<(f64, Vec<f64>)> {
    Ok(match node {
        Node::Const(c) => (*c, vec![0.0; n]),
        Node::Var(i) => {
            let mut g = vec![0.0; n];
            g[*i] = 1.0;
            (x[*i], g)
        }
        Node::Add(a, b) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let (vb, gb) = eval_dual(b, x, n)?;
            (va + vb, ga.iter().zip(&gb).map(|(p, q)| p + q).collect())
        }
        Node::Sub(a, b) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let (vb, gb) = eval_dual(b, x, n)?;
            (va - vb, ga.iter().zip(&gb).map(|(p, q)| p - q).collect())
        }
        Node::Mul(a, b) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let (vb, gb) = eval_dual(b, x, n)?;
            (
                va * vb,
                ga.iter().zip(&gb).map(|(p, q)| p * vb + q * va).collect(),
            )
        }
        Node::Div(a, b) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let (vb, gb) = eval_dual(b, x, n)?;
            if vb.abs() < DIV_EPS {
                return Err(Error::Domain(format!("division by {vb} (near zero)")));
            }
            (
                va / vb,
                ga.iter()
                    .zip(&gb)
                    .map(|(p, q)| (p * vb - q * va) / (vb * vb))
                    .collect(),
            )
        }
        Node::Pow(a, k) => {
            let (va, ga) = eval_dual(a, x, n)?;
            if *k < 0 && va.abs() < DIV_EPS {
                return Err(Error::Domain(format!("0^{k} is undefined")));
            }
            let f = va.powi(*k);
            let df = f64::from(*k) * va.powi(*k - 1);
            (f, ga.iter().map(|p| p * df).collect())
        }
        Node::Neg(a) => {
            let (va, ga) = eval_dual(a, x, n)?;
            (-va, ga.iter().map(|p| -p).collect())
        }
        Node::Sin(a) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let c = va.cos();
            (va.sin(), ga.iter().map(|p| p * c).collect())
        }
        Node::Cos(a) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let s = -va.sin();
            (va.cos(), ga.iter().map(|p| p * s).collect())
        }
        Node::Exp(a) => {
            let (va, ga) = eval_dual(a, x, n)?;
            let ev = va.exp();
            (ev, ga.iter().map(|p| p * ev).collect())
        }
    })
}

/// Structural affine recognition: returns `(row, offset)` when the node is
/// affine in the variables.
fn affine_form(node: &Node, n: usize) -> Option<(Vec<f64>, f64)> {
    match node {
        Node::Const(c) => Some((vec![0.0; n], *c)),
        Node::Var(i) => {
            let mut row = vec![0.0; n];
            row[*i] = 1.0;
            Some((row, 0.0))
        }
        Node::Add(a, b) => {
            let (ra, ca) = affine_form(a, n)?;
            let (rb, cb) = affine_form(b, n)?;
            Some((ra.iter().zip(&rb).map(|(p, q)| p + q).collect(), ca + cb))
        }
        Node::Sub(a, b) => {
            let (ra, ca) = affine_form(a, n)?;
            let (rb, cb) = affine_form(b, n)?;
            Some((ra.iter().zip(&rb).map(|(p, q)| p - q).collect(), ca - cb))
        }
        Node::Mul(a, b) => {
            let (ra, ca) = affine_form(a, n)?;
            let (rb, cb) = affine_form(b, n)?;
            let a_const = ra.iter().all(|&v| v == 0.0);
            let b_const = rb.iter().all(|&v| v == 0.0);
            if a_const {
                Some((rb.iter().map(|q| q * ca).collect(), ca * cb))
            } else if b_const {
                Some((ra.iter().map(|p| p * cb).collect(), ca * cb))
            } else {
                None
            }
        }
        Node::Div(a, b) => {
            let (ra, ca) = affine_form(a, n)?;
            let (rb, cb) = affine_form(b, n)?;
            if rb.iter().all(|&v| v == 0.0) && cb.abs() >= DIV_EPS {
                Some((ra.iter().map(|p| p / cb).collect(), ca / cb))
            } else {
                None
            }
        }
        Node::Pow(a, k) => {
            let (ra, ca) = affine_form(a, n)?;
            match k {
                0 => Some((vec![0.0; n], 1.0)),
                1 => Some((ra, ca)),
                _ if ra.iter().all(|&v| v == 0.0) => Some((vec![0.0; n], ca.powi(*k))),
                _ => None,
            }
        }
        Node::Neg(a) => {
            let (ra, ca) = affine_form(a, n)?;
            Some((ra.iter().map(|p| -p).collect(), -ca))
        }
        Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
            // Constant-folded only when the argument is constant.
            let (ra, ca) = affine_form(a, n)?;
            if ra.iter().all(|&v| v == 0.0) {
                let v = match node {
                    Node::Sin(_) => ca.sin(),
                    Node::Cos(_) => ca.cos(),
                    _ => ca.exp(),
                };
                Some((vec![0.0; n], v))
            } else {
                None
            }
        }
    }
}

fn print_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => write!(f, "{c}"),
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Add(a, b) => {
            write!(f, "(")?;
            print_node(a, f)?;
            write!(f, " + ")?;
            print_node(b, f)?;
            write!(f, ")")
        }
        Node::Sub(a, b) => {
            write!(f, "(")?;
            print_node(a, f)?;
            write!(f, " - ")?;
            print_node(b, f)?;
            write!(f, ")")
        }
        Node::Mul(a, b) => {
            write!(f, "(")?;
            print_node(a, f)?;
            write!(f, " * ")?;
            print_node(b, f)?;
            write!(f, ")")
        }
        Node::Div(a, b) => {
            write!(f, "(")?;
            print_node(a, f)?;
            write!(f, " / ")?;
            print_node(b, f)?;
            write!(f, ")")
        }
        Node::Pow(a, k) => {
            write!(f, "(")?;
            print_node(a, f)?;
            write!(f, ")^{k}")
        }
        Node::Neg(a) => {
            write!(f, "-(")?;
            print_node(a, f)?;
            write!(f, ")")
        }
        Node::Sin(a) => {
            write!(f, "sin(")?;
            print_node(a, f)?;
            write!(f, ")")
        }
        Node::Cos(a) => {
            write!(f, "cos(")?;
            print_node(a, f)?;
            write!(f, ")")
        }
        Node::Exp(a) => {
            write!(f, "exp(")?;
            print_node(a, f)?;
            write!(f, ")")
        }
    }
}

// ---------------------------------------------------------------------
// Recursive-descent parser. Precedence (tightest first):
//   power ^ (integer exponent)  >  unary -  >  * /  >  + -
// All binary operators are left-associative.
// ---------------------------------------------------------------------

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n_vars: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, n_vars: usize) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            n_vars,
        }
    }

    fn parse(mut self) -> Result<Node> {
        if self.text.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let node = self.expr()?;
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(Error::Syntax {
                offset: self.pos,
                message: format!("unexpected trailing input `{}`", &self.text[self.pos..]),
            });
        }
        Ok(node)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let mut base = self.atom()?;
        while self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.integer_exponent()?;
            base = Node::Pow(Box::new(base), exp);
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        let mut negative = false;
        if self.bytes.get(self.pos) == Some(&b'-') {
            negative = true;
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(Error::Syntax {
                offset: start,
                message: "expected integer exponent after `^`".into(),
            });
        }
        let raw = &self.text[digits_start..self.pos];
        let mag: i32 = raw.parse().map_err(|_| Error::Syntax {
            offset: digits_start,
            message: format!("exponent `{raw}` out of range"),
        })?;
        Ok(if negative { -mag } else { mag })
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(Error::Syntax {
                offset: self.pos,
                message: format!("unexpected character `{}`", c as char),
            }),
            None => Err(Error::Syntax {
                offset: self.pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // scientific notation
        if self.bytes.get(self.pos) == Some(&b'e') || self.bytes.get(self.pos) == Some(&b'E') {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // `e` belonged to something else
            }
        }
        let raw = &self.text[start..self.pos];
        raw.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("invalid number `{raw}`"),
            })
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        match name {
            "sin" | "cos" | "exp" => {
                if self.peek() != Some(b'(') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: format!("expected `(` after `{name}`"),
                    });
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(match name {
                    "sin" => Node::Sin(Box::new(arg)),
                    "cos" => Node::Cos(Box::new(arg)),
                    _ => Node::Exp(Box::new(arg)),
                })
            }
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(idx) = rest.parse::<usize>() {
                        if idx == 0 {
                            return Err(Error::UnknownIdentifier {
                                name: name.into(),
                                offset: start,
                            });
                        }
                        if idx > self.n_vars {
                            return Err(Error::VariableIndexOutOfRange {
                                index: idx,
                                n_vars: self.n_vars,
                            });
                        }
                        return Ok(Node::Var(idx - 1));
                    }
                }
                Err(Error::UnknownIdentifier {
                    name: name.into(),
                    offset: start,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_affine_example() {
        let e = Expression::parse("x1 + 1", 1).unwrap();
        assert_eq!(
            e.ast(),
            &Node::Add(Box::new(Node::Var(0)), Box::new(Node::Const(1.0)))
        );
        let (row, c) = e.affine().unwrap();
        assert_eq!(row, &[1.0]);
        assert_eq!(*c, 1.0);
        assert_eq!(e.eval_with_gradient(&[0.0]).unwrap(), (1.0, vec![1.0]));
    }

    #[test]
    fn print_parse_roundtrip() {
        let e = Expression::parse("2*(x1 - 3)^2", 1).unwrap();
        let printed = e.to_string();
        let reparsed = Expression::parse(&printed, 1).unwrap();
        assert_eq!(e.ast(), reparsed.ast());
    }

    #[test]
    fn out_of_range_variable() {
        assert!(matches!(
            Expression::parse("x2 + 1", 1),
            Err(Error::VariableIndexOutOfRange {
                index: 2,
                n_vars: 1
            })
        ));
    }

    #[test]
    fn syntax_error_carries_offset() {
        let Err(Error::Syntax { offset, .. }) = Expression::parse("x1 + ", 1) else {
            panic!("expected syntax error");
        };
        assert_eq!(offset, 5);
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            Expression::parse("y + 1", 1),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn product_rule() {
        let e = Expression::parse("x1*x1", 1).unwrap();
        assert_eq!(e.eval_with_gradient(&[3.0]).unwrap(), (9.0, vec![6.0]));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        let e = Expression::parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
    }

    #[test]
    fn division_near_zero_is_a_domain_error() {
        let e = Expression::parse("1/x1", 1).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain(_))));
        assert!(matches!(
            e.eval_with_gradient(&[1e-13]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_to_negative_power_is_a_domain_error() {
        let e = Expression::parse("x1^-1", 1).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain(_))));
    }

    fn finite_difference(e: &Expression, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += h;
                lo[i] -= h;
                (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::prelude::*;
        let corpus = [
            ("sin(x1)", 1),
            ("sin(x1)*cos(x2) + exp(x2/2)", 2),
            ("(x1 - x2)^3 + 2*x2", 2),
            ("x1/(x2 + 5)", 2),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (text, n) in corpus {
            let e = Expression::parse(text, n).unwrap();
            for _ in 0..250 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let (_, grad) = e.eval_with_gradient(&x).unwrap();
                let fd = finite_difference(&e, &x, 1e-5);
                for (g, d) in grad.iter().zip(&fd) {
                    let scale = 1.0 + g.abs().max(d.abs());
                    assert!(
                        (g - d).abs() / scale <= 1e-6,
                        "{text} at {x:?}: ad={g}, fd={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn sin_at_fixed_point_matches_fd() {
        let e = Expression::parse("sin(x1)", 1).unwrap();
        let (_, g) = e.eval_with_gradient(&[0.7]).unwrap();
        let fd = finite_difference(&e, &[0.7], 1e-5);
        assert!((g[0] - fd[0]).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn roundtrip_random_affine(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            let text = format!("{a}*x1 + {b}*x2 - {c}");
            let e = Expression::parse(&text, 2).unwrap();
            let reparsed = Expression::parse(&e.to_string(), 2).unwrap();
            prop_assert_eq!(e.ast(), reparsed.ast());
            let (row, off) = e.affine().unwrap();
            prop_assert!((row[0] - a).abs() < 1e-12);
            prop_assert!((row[1] - b).abs() < 1e-12);
            prop_assert!((off + c).abs() < 1e-12);
        }
    }
}
