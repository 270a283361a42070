//! SMT-LIB2 emission of solver queries for external cross-checking.

use std::collections::BTreeSet;

use crate::presburger::{AffineExpr, Atom, Rel, UfSymbol, VarId};

use super::solver::SmtQuery;

fn sexpr_of_expr(e: &AffineExpr) -> String {
    if e.terms.is_empty() {
        return "0".to_string();
    }
    let mut parts: Vec<String> = Vec::new();
    for t in &e.terms {
        let base = match &t.atom {
            Atom::Const => "1".to_string(),
            Atom::Var(v) => mangle(&v.name),
            Atom::Uf(app) => {
                let args: Vec<String> = app.args.iter().map(sexpr_of_expr).collect();
                format!("({} {})", mangle(&app.symbol.name), args.join(" "))
            }
        };
        let term = match (&t.atom, t.coef) {
            (Atom::Const, c) => int_lit(c),
            (_, 1) => base,
            (_, -1) => format!("(- {})", base),
            (_, c) => format!("(* {} {})", int_lit(c), base),
        };
        parts.push(term);
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn int_lit(c: i64) -> String {
    if c < 0 {
        format!("(- {})", -c)
    } else {
        c.to_string()
    }
}

fn mangle(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| match c {
            '.' => '_',
            '\'' => 'p',
            '$' => '_',
            c => c,
        })
        .collect();
    cleaned
}

/// Render a query as SMT-LIB2 text: declare-fun per function symbol,
/// declare-const per variable, one assert per clause, check-sat.
pub fn to_smtlib(q: &SmtQuery) -> String {
    let mut vars: BTreeSet<VarId> = BTreeSet::new();
    let mut ufs: BTreeSet<UfSymbol> = BTreeSet::new();
    for clause in &q.clauses {
        for lit in &clause.lits {
            lit.expr.collect_vars(&mut vars);
            let mut apps = Vec::new();
            lit.expr.collect_apps(&mut apps);
            for a in apps {
                ufs.insert(a.symbol.clone());
            }
        }
    }
    let mut out = String::new();
    out.push_str("(set-logic QF_UFLIA)\n");
    for u in &ufs {
        let args = vec!["Int"; u.arity].join(" ");
        out.push_str(&format!("(declare-fun {} ({}) Int)\n", mangle(&u.name), args));
    }
    for v in &vars {
        out.push_str(&format!("(declare-const {} Int)\n", mangle(&v.name)));
    }
    for clause in &q.clauses {
        let lits: Vec<String> = clause
            .lits
            .iter()
            .map(|lit| {
                let e = sexpr_of_expr(&lit.expr);
                match lit.rel {
                    Rel::Eq => format!("(= {} 0)", e),
                    Rel::Ge => format!("(>= {} 0)", e),
                }
            })
            .collect();
        let body = match lits.len() {
            0 => "false".to_string(),
            1 => lits[0].clone(),
            _ => format!("(or {})", lits.join(" ")),
        };
        out.push_str(&format!("(assert {})\n", body));
    }
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::{Constraint, UfApp};
    use crate::synthesis::solver::Clause;

    #[test]
    fn smtlib_text_shape() {
        let x = VarId::computation("x");
        let f = UfSymbol::new("B.idx", 1);
        let app = AffineExpr::uf(UfApp::new(f, vec![AffineExpr::var(x.clone())]));
        let q = SmtQuery {
            clauses: vec![Clause {
                lits: vec![Constraint::eq_pair(app, AffineExpr::var(x))],
            }],
        };
        let text = to_smtlib(&q);
        assert!(text.contains("(declare-fun B_idx (Int) Int)"));
        assert!(text.contains("(declare-const x Int)"));
        assert!(text.contains("(check-sat)"));
    }
}
