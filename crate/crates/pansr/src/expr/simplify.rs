//! A bounded rewriting simplifier.
//!
//! This is deliberately not a CAS: it applies constant folding, operator
//! identities, and constant merging across associative `+`/`*` chains until
//! a fixpoint (with a hard pass bound). The contract is soundness, not
//! canonical form: the result evaluates identically to the input at every
//! point where the input is defined.
//!
//! Rules that are only valid off a measure-zero set (`x/x -> 1`,
//! `0/x -> 0`, `x**0 -> 1`) are applied, and each application is recorded
//! as a [`SimplifyNote`] so callers can surface the assumption.

use super::{BinaryOp, Expr, UnaryOp};

const MAX_PASSES: usize = 16;

/// A domain assumption made while rewriting (e.g. `x/x -> 1` assumes the
/// denominator is nonzero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifyNote {
    pub rule: &'static str,
    pub detail: String,
}

/// Simplified copy of `e`; notes are discarded.
pub fn simplify(e: &Expr) -> Expr {
    simplify_with_notes(e).0
}

/// Simplified copy of `e` plus the guard notes recorded along the way.
pub fn simplify_with_notes(e: &Expr) -> (Expr, Vec<SimplifyNote>) {
    let mut notes = Vec::new();
    let mut cur = e.clone();
    for _ in 0..MAX_PASSES {
        let next = rewrite(&cur, &mut notes);
        if next == cur {
            break;
        }
        cur = next;
    }
    notes.dedup();
    (cur, notes)
}

fn note(notes: &mut Vec<SimplifyNote>, rule: &'static str, at: &Expr) {
    notes.push(SimplifyNote {
        rule,
        detail: at.to_string(),
    });
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Constant(c) if *c == v)
}

fn rewrite(e: &Expr, notes: &mut Vec<SimplifyNote>) -> Expr {
    match e {
        Expr::Constant(_) | Expr::Variable { .. } => e.clone(),
        Expr::Unary(op, c) => {
            let c = rewrite(c, notes);
            if let Expr::Constant(v) = c {
                let folded = op.apply(v);
                if folded.is_finite() {
                    return Expr::Constant(folded);
                }
            }
            if *op == UnaryOp::Neg {
                if let Expr::Unary(UnaryOp::Neg, inner) = &c {
                    return (**inner).clone();
                }
            }
            Expr::unary(*op, c)
        }
        Expr::Binary(op, l, r) => {
            let l = rewrite(l, notes);
            let r = rewrite(r, notes);
            if let (Expr::Constant(a), Expr::Constant(b)) = (&l, &r) {
                let folded = op.apply(*a, *b);
                if folded.is_finite() {
                    return Expr::Constant(folded);
                }
            }
            match op {
                BinaryOp::Add | BinaryOp::Mul => flatten(*op, l, r),
                BinaryOp::Sub => {
                    if is_const(&r, 0.0) {
                        l
                    } else if is_const(&l, 0.0) {
                        Expr::unary(UnaryOp::Neg, r)
                    } else if l == r {
                        Expr::Constant(0.0)
                    } else {
                        Expr::binary(BinaryOp::Sub, l, r)
                    }
                }
                BinaryOp::Div => {
                    if l == r {
                        note(notes, "x/x -> 1 (assumes x != 0)", &l);
                        Expr::Constant(1.0)
                    } else if is_const(&r, 1.0) {
                        l
                    } else if is_const(&l, 0.0) {
                        note(notes, "0/x -> 0 (assumes x != 0)", &r);
                        Expr::Constant(0.0)
                    } else {
                        Expr::binary(BinaryOp::Div, l, r)
                    }
                }
                BinaryOp::Pow => {
                    if is_const(&r, 1.0) {
                        l
                    } else if is_const(&r, 0.0) {
                        note(notes, "x**0 -> 1 (defines 0**0 = 1)", &l);
                        Expr::Constant(1.0)
                    } else if is_const(&l, 1.0) {
                        Expr::Constant(1.0)
                    } else {
                        Expr::binary(BinaryOp::Pow, l, r)
                    }
                }
            }
        }
    }
}

/// Flattens an associative `+`/`*` chain, merges its constants, drops the
/// identity element, and rebuilds left-associatively. The merged constant
/// goes in front for products (`6 * x`) and at the back for sums (`x + 3`).
fn flatten(op: BinaryOp, l: Expr, r: Expr) -> Expr {
    fn collect(e: Expr, op: BinaryOp, out: &mut Vec<Expr>) {
        match e {
            Expr::Binary(o, a, b) if o == op => {
                collect((*a).clone(), op, out);
                collect((*b).clone(), op, out);
            }
            other => out.push(other),
        }
    }

    let identity = match op {
        BinaryOp::Add => 0.0,
        BinaryOp::Mul => 1.0,
        _ => unreachable!("flatten only handles + and *"),
    };

    let mut parts = Vec::new();
    collect(l, op, &mut parts);
    collect(r, op, &mut parts);

    let mut acc = identity;
    let mut terms = Vec::new();
    for part in &parts {
        match part {
            Expr::Constant(v) => acc = op.apply(acc, *v),
            other => terms.push(other.clone()),
        }
    }
    if !acc.is_finite() {
        // Merging would overflow; leave the chain as written.
        return rebuild(op, parts);
    }
    if op == BinaryOp::Mul && acc == 0.0 {
        return Expr::Constant(0.0);
    }
    if acc != identity {
        if op == BinaryOp::Mul {
            terms.insert(0, Expr::Constant(acc));
        } else {
            terms.push(Expr::Constant(acc));
        }
    }
    if terms.is_empty() {
        return Expr::Constant(identity);
    }
    rebuild(op, terms)
}

fn rebuild(op: BinaryOp, terms: Vec<Expr>) -> Expr {
    let mut it = terms.into_iter();
    let first = it.next().expect("rebuild needs at least one term");
    it.fold(first, |acc, t| Expr::binary(op, acc, t))
}
