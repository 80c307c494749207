//! The expression language shared by the dataset generator, the GP engine,
//! and the metrics suite.
//!
//! Expressions are immutable trees of constants, variables, and unary/binary
//! operators. Children are reference-counted, so cloning and subtree sharing
//! are cheap and expressions can be sent freely between worker threads.
//!
//! Evaluation is IEEE-style and total: domain violations (log of a
//! non-positive value, square root of a negative, division by zero, any
//! non-finite intermediate) yield "undefined" — surfaced as `None` — rather
//! than a panic. Ground-truth equations are evaluated inside their declared
//! bounds and never hit this path, but candidate models produced by search
//! routinely do, and downstream samplers and metrics filter those rows.

mod equation;
mod parse;
mod simplify;

pub use equation::EquationSpec;
pub use parse::{discover_variables, parse_expression, ParseError};
pub use simplify::{simplify, simplify_with_notes, SimplifyNote};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Unary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Tanh,
    Abs,
    Square,
}

impl UnaryOp {
    /// Canonical function name (unary minus prints as an operator instead).
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Asin => "asin",
            UnaryOp::Acos => "acos",
            UnaryOp::Atan => "atan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Abs => "abs",
            UnaryOp::Square => "square",
        }
    }

    /// Applies the operator. Domain violations surface as NaN.
    pub fn apply(self, v: f64) -> f64 {
        let out = match self {
            UnaryOp::Neg => -v,
            UnaryOp::Exp => v.exp(),
            UnaryOp::Log => {
                if v <= 0.0 {
                    f64::NAN
                } else {
                    v.ln()
                }
            }
            UnaryOp::Sqrt => v.sqrt(),
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Tan => v.tan(),
            UnaryOp::Asin => v.asin(),
            UnaryOp::Acos => v.acos(),
            UnaryOp::Atan => v.atan(),
            UnaryOp::Tanh => v.tanh(),
            UnaryOp::Abs => v.abs(),
            UnaryOp::Square => v * v,
        };
        if out.is_finite() {
            out
        } else {
            f64::NAN
        }
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "**",
        }
    }

    /// Applies the operator. Domain violations surface as NaN.
    ///
    /// `pow` with an integral exponent is evaluated by repeated
    /// multiplication, so negative bases with integer exponents are exact;
    /// a non-integral exponent on a negative base is undefined.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let out = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Pow => {
                if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                    a.powi(b as i32)
                } else {
                    a.powf(b)
                }
            }
        };
        if out.is_finite() {
            out
        } else {
            f64::NAN
        }
    }
}

/// An immutable expression tree.
///
/// Structural equality is the derived one: two trees are equal when their
/// shapes, operators, constants, and variable indices/names all match.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A finite real constant.
    Constant(f64),
    /// A variable, addressed by 0-based column index; the name is what the
    /// canonical text form prints.
    Variable { index: usize, name: Arc<str> },
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Constant(v)
    }

    /// A variable with an explicit name.
    pub fn variable(index: usize, name: &str) -> Expr {
        Expr::Variable {
            index,
            name: Arc::from(name),
        }
    }

    /// A variable with the default `x{index+1}` name.
    pub fn var(index: usize) -> Expr {
        Expr::variable(index, &format!("x{}", index + 1))
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Expr {
        Expr::Unary(op, Arc::new(child))
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary(op, Arc::new(left), Arc::new(right))
    }

    /// Evaluates at `row`; `None` is "undefined" (domain violation or
    /// non-finite intermediate). `row` must cover the expression's arity.
    pub fn eval(&self, row: &[f64]) -> Option<f64> {
        let v = self.eval_raw(row);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    }

    /// NaN-propagating evaluation; every intermediate is checked for
    /// finiteness so `inf` cannot cancel back into a "defined" result.
    pub(crate) fn eval_raw(&self, row: &[f64]) -> f64 {
        match self {
            Expr::Constant(v) => *v,
            Expr::Variable { index, .. } => row.get(*index).copied().unwrap_or(f64::NAN),
            Expr::Unary(op, c) => {
                let v = c.eval_raw(row);
                if v.is_nan() {
                    f64::NAN
                } else {
                    op.apply(v)
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval_raw(row);
                if a.is_nan() {
                    return f64::NAN;
                }
                let b = r.eval_raw(row);
                if b.is_nan() {
                    return f64::NAN;
                }
                op.apply(a, b)
            }
        }
    }

    /// Total number of nodes: operators + variable occurrences + constant
    /// occurrences, with no simplification applied.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Variable { .. } => 1,
            Expr::Unary(_, c) => 1 + c.node_count(),
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Model complexity: the node count of the simplified expression.
    pub fn complexity(&self) -> usize {
        simplify(self).node_count()
    }

    /// Maximum nesting depth (a lone leaf has depth 1).
    pub fn depth(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Variable { .. } => 1,
            Expr::Unary(_, c) => 1 + c.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Variable indices appearing in the *simplified* expression; a variable
    /// eliminated by simplification (e.g. `x2 * 0`) does not count.
    pub fn variables_used(&self) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        simplify(self).collect_variables(&mut set);
        set
    }

    /// Variable indices appearing syntactically, without simplification.
    pub fn variables_raw(&self) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        self.collect_variables(&mut set);
        set
    }

    fn collect_variables(&self, set: &mut BTreeSet<usize>) {
        match self {
            Expr::Constant(_) => {}
            Expr::Variable { index, .. } => {
                set.insert(*index);
            }
            Expr::Unary(_, c) => c.collect_variables(set),
            Expr::Binary(_, l, r) => {
                l.collect_variables(set);
                r.collect_variables(set);
            }
        }
    }

    /// Number of input columns the expression expects (max index + 1).
    pub fn arity(&self) -> usize {
        self.variables_raw().iter().max().map_or(0, |m| m + 1)
    }

    /// Simplified copy; see [`simplify`].
    pub fn simplify(&self) -> Expr {
        simplify(self)
    }

    /// Canonical text form (`**` for powers); parseable back into an equal
    /// tree by [`parse_expression`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Printing precedence, used to decide parenthesization.
    fn prec(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            // Negative literals print with a leading minus, which binds like
            // unary minus.
            Expr::Constant(v) if *v < 0.0 => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
            write!(f, "({e})")
        }
        match self {
            Expr::Constant(v) => write!(f, "{v}"),
            Expr::Variable { name, .. } => write!(f, "{name}"),
            Expr::Unary(UnaryOp::Neg, c) => {
                write!(f, "-")?;
                // A bare constant needs parens so `-(3)` does not re-parse as
                // the literal `-3`.
                if c.prec() <= 3 || matches!(**c, Expr::Constant(_)) {
                    paren(f, c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Unary(op, c) => write!(f, "{}({c})", op.name()),
            Expr::Binary(op, l, r) => {
                let p = match op {
                    BinaryOp::Add | BinaryOp::Sub => 1,
                    BinaryOp::Mul | BinaryOp::Div => 2,
                    BinaryOp::Pow => 4,
                };
                // Left-associative operators keep an unparenthesized left
                // child at equal precedence; `pow` is right-associative, so
                // the roles flip.
                let (lp, rp) = match op {
                    BinaryOp::Pow => (l.prec() <= p, r.prec() < p),
                    _ => (l.prec() < p, r.prec() <= p),
                };
                if lp {
                    paren(f, l)?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if rp {
                    paren(f, r)
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;
