use std::fmt::Write;

use num_traits::{One, Signed};

use super::formula::{Atom, Formula};
use crate::net::PetriNet;
use crate::Rat;

/// Renders `f` as a self-contained QF_LRA script: every variable (free or
/// existentially bound) is declared as a non-negative real, existentials are
/// dropped, and the body is asserted. The output depends only on `f` and the
/// names in `net`.
pub fn emit_smtlib(f: &Formula, net: &PetriNet) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_LRA)\n");
    let vars = f.all_vars();
    for v in &vars {
        writeln!(out, "(declare-fun {} () Real)", symbol(&v.name(net))).unwrap();
    }
    for v in &vars {
        writeln!(out, "(assert (>= {} 0))", symbol(&v.name(net))).unwrap();
    }
    out.push_str("(assert ");
    term(f, net, &mut out);
    out.push_str(")\n(check-sat)\n");
    out
}

/// A simple symbol if possible, otherwise a `|quoted|` one.
fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

fn number(q: &Rat) -> String {
    let mag = q.abs();
    let s = if mag.denom().is_one() {
        mag.numer().to_string()
    } else {
        format!("(/ {} {})", mag.numer(), mag.denom())
    };
    if q.is_negative() {
        format!("(- {s})")
    } else {
        s
    }
}

fn term(f: &Formula, net: &PetriNet, out: &mut String) {
    let list = |op: &str, ps: &[Formula], out: &mut String| {
        write!(out, "({op}").unwrap();
        for p in ps {
            out.push(' ');
            term(p, net, out);
        }
        out.push(')');
    };
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => atom(a, net, out),
        Formula::And(ps) => list("and", ps, out),
        Formula::Or(ps) => list("or", ps, out),
        Formula::Implies(l, r) => {
            out.push_str("(=> ");
            term(l, net, out);
            out.push(' ');
            term(r, net, out);
            out.push(')');
        }
        Formula::Exists(_, b) => term(b, net, out),
    }
}

fn atom(a: &Atom, net: &PetriNet, out: &mut String) {
    let summand = |(v, c): &(super::Var, Rat)| {
        let name = symbol(&v.name(net));
        if c.is_one() {
            name
        } else {
            format!("(* {} {name})", number(c))
        }
    };
    let lhs = match a.terms.len() {
        0 => "0".to_string(),
        1 => summand(&a.terms[0]),
        _ => format!(
            "(+ {})",
            a.terms.iter().map(summand).collect::<Vec<_>>().join(" ")
        ),
    };
    write!(out, "({} {lhs} {})", a.cmp.symbol(), number(&a.rhs)).unwrap();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::encode::build_reach_formula;
    use crate::fo::{Cmp, Var, VarKind};
    use crate::net::tests::net_f;
    use crate::{int, rat};

    #[test]
    fn single_atom_script() {
        let (net, _) = net_f();
        let f = Formula::atom(Atom::var(Var::new(VarKind::Parikh, 0), Cmp::Gt, int(0)));
        let s = emit_smtlib(&f, &net);
        assert_eq!(
            s,
            "(set-logic QF_LRA)\n(declare-fun y_t1 () Real)\n(assert (>= y_t1 0))\n(assert (> y_t1 0))\n(check-sat)\n"
        );
    }

    #[test]
    fn numbers_and_quoting() {
        assert_eq!(number(&rat(-3, 2)), "(- (/ 3 2))");
        assert_eq!(number(&int(7)), "7");
        assert_eq!(symbol("p 1"), "|p 1|");
        assert_eq!(symbol("drain_p0"), "drain_p0");
        assert_eq!(symbol("1p"), "|1p|");
    }

    #[test]
    fn emission_is_stable() {
        let (net, _) = net_f();
        let f = build_reach_formula(&net);
        let a = emit_smtlib(&f, &net);
        assert_eq!(a, emit_smtlib(&build_reach_formula(&net), &net));
        assert!(a.starts_with("(set-logic QF_LRA)\n"));
        assert!(a.ends_with("(check-sat)\n"));
        for v in ["w_p0", "x_p1", "y_t2", "zf_p0", "zb_t1"] {
            assert!(a.contains(&format!("(declare-fun {v} () Real)")), "{v}");
        }
        let opens = a.matches('(').count();
        assert_eq!(opens, a.matches(')').count());
    }
}
