//! Quantifier-free linear integer arithmetic with uninterpreted functions,
//! decided by Ackermann expansion followed by clause splitting over exact
//! rational feasibility with branch-and-bound integer tightening.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use crate::error::SpfError;
use crate::presburger::{AffineExpr, Atom, Constraint, Rel, UfApp, VarId};

use super::simplex::{lp_feasible, LinRow, LpOutcome};

/// Boolean structure over ground constraints, used to assemble queries
/// before clausification.
#[derive(Debug, Clone)]
pub enum Formula {
    Atom(Constraint),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    True,
    False,
}

impl Formula {
    pub fn and(fs: Vec<Formula>) -> Formula {
        Formula::And(fs)
    }
    pub fn atom(c: Constraint) -> Formula {
        Formula::Atom(c)
    }
    pub fn negate(self) -> Formula {
        Formula::Not(Box::new(self))
    }
}

/// A disjunction of ground constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub lits: Vec<Constraint>,
}

/// Conjunction of clauses, the solver input.
#[derive(Debug, Clone, Default)]
pub struct SmtQuery {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Branch nodes across clause splitting and integer branching.
    pub node_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { node_budget: 10_000 }
    }
}

const CLAUSE_LIMIT: usize = 20_000;

/// Negation-normal-form clausification by distribution; inputs stay small.
pub fn to_cnf(f: &Formula) -> Result<Vec<Clause>, SpfError> {
    fn negate_constraint(c: &Constraint) -> Vec<Vec<Constraint>> {
        match c.rel {
            // ¬(e >= 0)  <=>  -e - 1 >= 0
            Rel::Ge => vec![vec![Constraint::ge(c.expr.scale(-1).add_const(-1))]],
            // ¬(e = 0)  <=>  e >= 1  or  -e >= 1
            Rel::Eq => vec![vec![
                Constraint::ge(c.expr.add_const(-1)),
                Constraint::ge(c.expr.scale(-1).add_const(-1)),
            ]],
        }
    }
    // Returns CNF as vector of clauses (vector of literals).
    fn go(f: &Formula, neg: bool) -> Result<Vec<Vec<Constraint>>, SpfError> {
        match f {
            Formula::True => Ok(if neg { vec![vec![]] } else { vec![] }),
            Formula::False => Ok(if neg { vec![] } else { vec![vec![]] }),
            Formula::Not(g) => go(g, !neg),
            Formula::Atom(c) => {
                if neg {
                    Ok(negate_constraint(c))
                } else {
                    Ok(vec![vec![c.clone()]])
                }
            }
            Formula::And(fs) => {
                if neg {
                    // ¬(f1 ∧ f2) = ¬f1 ∨ ¬f2 : distribute over the or.
                    or_cnf(fs.iter().map(|g| go(g, true)).collect::<Result<Vec<_>, _>>()?)
                } else {
                    let mut out = Vec::new();
                    for g in fs {
                        out.extend(go(g, false)?);
                        if out.len() > CLAUSE_LIMIT {
                            return Err(SpfError::Synthesis("clause explosion".into()));
                        }
                    }
                    Ok(out)
                }
            }
            Formula::Or(fs) => {
                if neg {
                    let mut out = Vec::new();
                    for g in fs {
                        out.extend(go(g, true)?);
                        if out.len() > CLAUSE_LIMIT {
                            return Err(SpfError::Synthesis("clause explosion".into()));
                        }
                    }
                    Ok(out)
                } else {
                    or_cnf(fs.iter().map(|g| go(g, false)).collect::<Result<Vec<_>, _>>()?)
                }
            }
        }
    }
    // CNF of (A1 ∨ A2 ∨ ...) where each Ai is a CNF: cartesian distribution.
    fn or_cnf(parts: Vec<Vec<Vec<Constraint>>>) -> Result<Vec<Vec<Constraint>>, SpfError> {
        let mut acc: Vec<Vec<Constraint>> = vec![vec![]];
        for part in parts {
            if part.is_empty() {
                // True alternative: the whole disjunction is true.
                return Ok(vec![]);
            }
            let mut next = Vec::new();
            for base in &acc {
                for clause in &part {
                    let mut merged = base.clone();
                    merged.extend(clause.iter().cloned());
                    next.push(merged);
                    if next.len() > CLAUSE_LIMIT {
                        return Err(SpfError::Synthesis("clause explosion".into()));
                    }
                }
            }
            acc = next;
        }
        Ok(acc)
    }
    Ok(go(f, false)?.into_iter().map(|lits| Clause { lits }).collect())
}

pub fn query_from_formula(f: &Formula) -> Result<SmtQuery, SpfError> {
    Ok(SmtQuery { clauses: to_cnf(f)? })
}

/// Result of Ackermann expansion: constraints are pure linear rows over a
/// merged variable space (original variables plus one variable per distinct
/// application), with functional-consistency clauses appended.
struct Ackermannized {
    var_names: Vec<String>,
    clauses: Vec<Vec<LinRow>>,
}

fn flatten_apps(
    e: &AffineExpr,
    app_vars: &mut BTreeMap<UfApp, VarId>,
) -> AffineExpr {
    let mut acc = AffineExpr::zero();
    for t in &e.terms {
        let piece = match &t.atom {
            Atom::Uf(app) => {
                let flat_args: Vec<AffineExpr> =
                    app.args.iter().map(|a| flatten_apps(a, app_vars)).collect();
                let flat = UfApp { symbol: app.symbol.clone(), args: flat_args };
                let n = app_vars.len();
                let v = app_vars
                    .entry(flat)
                    .or_insert_with(|| VarId::quantified(format!("$app{}", n)))
                    .clone();
                AffineExpr::var(v).scale(t.coef)
            }
            _ => AffineExpr { terms: vec![t.clone()] },
        };
        acc = acc.add(&piece);
    }
    acc
}

fn ackermannize(q: &SmtQuery) -> Result<Ackermannized, SpfError> {
    let mut app_vars: BTreeMap<UfApp, VarId> = BTreeMap::new();
    let mut flat_clauses: Vec<Vec<Constraint>> = Vec::new();
    for clause in &q.clauses {
        let lits = clause
            .lits
            .iter()
            .map(|c| Constraint { expr: flatten_apps(&c.expr, &mut app_vars), rel: c.rel })
            .collect();
        flat_clauses.push(lits);
    }
    // Functional consistency between applications of the same symbol whose
    // argument equality is linearly expressible (it always is here: the
    // arguments were flattened).
    let apps: Vec<(UfApp, VarId)> =
        app_vars.iter().map(|(a, v)| (a.clone(), v.clone())).collect();
    let mut congruence: Vec<Vec<Constraint>> = Vec::new();
    for i in 0..apps.len() {
        for j in i + 1..apps.len() {
            let (ref ai, ref vi) = apps[i];
            let (ref aj, ref vj) = apps[j];
            if ai.symbol != aj.symbol {
                continue;
            }
            // (a1 = b1 ∧ a2 = b2 ∧ ...) -> v_i = v_j, clausally:
            // (a1 != b1) ∨ ... ∨ (v_i = v_j)
            let mut lits: Vec<Constraint> = Vec::new();
            for (x, y) in ai.args.iter().zip(aj.args.iter()) {
                let d = x.sub(y);
                lits.push(Constraint::ge(d.add_const(-1)));
                lits.push(Constraint::ge(d.scale(-1).add_const(-1)));
            }
            lits.push(Constraint::eq_pair(
                AffineExpr::var(vi.clone()),
                AffineExpr::var(vj.clone()),
            ));
            congruence.push(lits);
        }
    }
    flat_clauses.extend(congruence);

    // Index variables.
    let mut names: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let rows_of = |c: &Constraint,
                       names: &mut Vec<String>,
                       index: &mut BTreeMap<String, usize>|
     -> LinRow {
        let mut coefs: Vec<i64> = vec![0; names.len()];
        let mut constant = 0i64;
        for t in &c.expr.terms {
            match &t.atom {
                Atom::Const => constant += t.coef,
                Atom::Var(v) => {
                    let idx = *index.entry(v.name.clone()).or_insert_with(|| {
                        names.push(v.name.clone());
                        names.len() - 1
                    });
                    if coefs.len() < names.len() {
                        coefs.resize(names.len(), 0);
                    }
                    coefs[idx] += t.coef;
                }
                Atom::Uf(_) => unreachable!("apps were flattened"),
            }
        }
        LinRow { coefs, constant, rel: c.rel }
    };
    let mut clauses: Vec<Vec<LinRow>> = Vec::new();
    for clause in &flat_clauses {
        let rows = clause
            .iter()
            .map(|c| rows_of(c, &mut names, &mut index))
            .collect::<Vec<_>>();
        clauses.push(rows);
    }
    let nvars = names.len();
    for clause in &mut clauses {
        for row in clause.iter_mut() {
            row.coefs.resize(nvars, 0);
        }
    }
    Ok(Ackermannized { var_names: names, clauses })
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Quick unsat test on a conjunction: an equality whose coefficients share a
/// divisor that does not divide the constant has no integer solution.
fn gcd_refutes(rows: &[LinRow]) -> bool {
    rows.iter().any(|r| {
        if r.rel != Rel::Eq {
            return false;
        }
        let g = r.coefs.iter().fold(0, |acc, &c| gcd(acc, c));
        if g == 0 {
            r.constant != 0
        } else {
            r.constant % g != 0
        }
    })
}

struct Search<'a> {
    clauses: &'a [Vec<LinRow>],
    nvars: usize,
    budget: usize,
    nodes: usize,
    exhausted: bool,
}

impl<'a> Search<'a> {
    /// Integer feasibility of a fixed conjunction via branch-and-bound.
    fn integer_feasible(&mut self, conj: &mut Vec<LinRow>) -> Option<bool> {
        if gcd_refutes(conj) {
            return Some(false);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return None;
        }
        match lp_feasible(self.nvars, conj) {
            LpOutcome::Infeasible => Some(false),
            LpOutcome::Feasible(point) => {
                let frac = point.iter().enumerate().find(|(_, v)| !v.is_integer());
                match frac {
                    None => Some(true),
                    Some((idx, val)) => {
                        let fl = val.floor().to_integer();
                        let fl: i64 = match fl.to_i64() {
                            Some(v) => v,
                            None => return None,
                        };
                        // x <= floor(val)
                        let mut low = vec![0i64; self.nvars];
                        low[idx] = -1;
                        conj.push(LinRow { coefs: low, constant: fl, rel: Rel::Ge });
                        let r1 = self.integer_feasible(conj);
                        conj.pop();
                        if r1 == Some(true) {
                            return Some(true);
                        }
                        // x >= floor(val) + 1
                        let mut high = vec![0i64; self.nvars];
                        high[idx] = 1;
                        conj.push(LinRow { coefs: high, constant: -(fl + 1), rel: Rel::Ge });
                        let r2 = self.integer_feasible(conj);
                        conj.pop();
                        match (r1, r2) {
                            (_, Some(true)) => Some(true),
                            (Some(false), Some(false)) => Some(false),
                            _ => None,
                        }
                    }
                }
            }
        }
    }

    /// DPLL-style clause splitting with LP pruning.
    fn split(&mut self, k: usize, conj: &mut Vec<LinRow>) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return None;
        }
        if k == self.clauses.len() {
            return self.integer_feasible(conj);
        }
        // Prune with the rational relaxation before going deeper.
        if k > 0 && lp_feasible(self.nvars, conj) == LpOutcome::Infeasible {
            return Some(false);
        }
        let clause = &self.clauses[k];
        if clause.is_empty() {
            return Some(false);
        }
        let mut any_unknown = false;
        for lit in clause {
            conj.push(lit.clone());
            match self.split(k + 1, conj) {
                Some(true) => {
                    conj.pop();
                    return Some(true);
                }
                Some(false) => {}
                None => any_unknown = true,
            }
            conj.pop();
        }
        if any_unknown {
            None
        } else {
            Some(false)
        }
    }
}

/// Decide a ground query. `Unknown` is returned when the node budget runs
/// out; callers treat it as a safe rejection.
pub fn solve(q: &SmtQuery, cfg: &SolverConfig) -> Result<SolveResult, SpfError> {
    // Fast trivial handling.
    let mut clauses: Vec<Clause> = Vec::new();
    for c in &q.clauses {
        let mut lits = Vec::new();
        let mut sat = false;
        for l in &c.lits {
            match l.as_trivial() {
                Some(true) => {
                    sat = true;
                    break;
                }
                Some(false) => {}
                None => lits.push(l.clone()),
            }
        }
        if sat {
            continue;
        }
        if lits.is_empty() {
            return Ok(SolveResult::Unsat);
        }
        clauses.push(Clause { lits });
    }
    if clauses.is_empty() {
        return Ok(SolveResult::Sat);
    }
    let ack = ackermannize(&SmtQuery { clauses })?;
    let mut search = Search {
        clauses: &ack.clauses,
        nvars: ack.var_names.len(),
        budget: cfg.node_budget,
        nodes: 0,
        exhausted: false,
    };
    let mut conj = Vec::new();
    match search.split(0, &mut conj) {
        Some(true) => Ok(SolveResult::Sat),
        Some(false) => Ok(SolveResult::Unsat),
        None => Ok(SolveResult::Unknown),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::{UfSymbol, VarKind};

    fn v(n: &str) -> VarId {
        VarId::new(n, VarKind::Computation)
    }
    fn unit(c: Constraint) -> Clause {
        Clause { lits: vec![c] }
    }

    #[test]
    fn empty_theory_is_sat() {
        let q = SmtQuery { clauses: vec![] };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Sat);
    }

    #[test]
    fn antisymmetry_is_unsat() {
        // x < y and y < x
        let x = AffineExpr::var(v("x"));
        let y = AffineExpr::var(v("y"));
        let q = SmtQuery {
            clauses: vec![
                unit(Constraint::lt_pair(x.clone(), y.clone())),
                unit(Constraint::lt_pair(y, x)),
            ],
        };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn functional_consistency_is_enforced() {
        // x = y, f(x) < f(y) must be unsat.
        let x = AffineExpr::var(v("x"));
        let y = AffineExpr::var(v("y"));
        let f = UfSymbol::new("f", 1);
        let fx = AffineExpr::uf(UfApp::new(f.clone(), vec![x.clone()]));
        let fy = AffineExpr::uf(UfApp::new(f, vec![y.clone()]));
        let q = SmtQuery {
            clauses: vec![
                unit(Constraint::eq_pair(x, y)),
                unit(Constraint::lt_pair(fx, fy)),
            ],
        };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn parity_equality_is_unsat() {
        // 2x = 1.
        let x = AffineExpr::var(v("x"));
        let q = SmtQuery {
            clauses: vec![unit(Constraint::eq(x.scale(2).add_const(-1)))],
        };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn integer_gap_needs_branching() {
        // 1 <= 2x <= 1 over integers is unsat but rationally feasible —
        // expressed as inequalities so the gcd shortcut stays out of it.
        let x = AffineExpr::var(v("x"));
        let q = SmtQuery {
            clauses: vec![
                unit(Constraint::ge(x.scale(2).add_const(-1))),
                unit(Constraint::ge(x.scale(-2).add_const(1))),
            ],
        };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn disjunction_splits() {
        // (x >= 5 or x <= -5) and 0 <= x <= 3  =>  unsat
        let x = AffineExpr::var(v("x"));
        let q = SmtQuery {
            clauses: vec![
                Clause {
                    lits: vec![
                        Constraint::ge(x.add_const(-5)),
                        Constraint::ge(x.scale(-1).add_const(-5)),
                    ],
                },
                unit(Constraint::ge(x.clone())),
                unit(Constraint::ge(x.scale(-1).add_const(3))),
            ],
        };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Unsat);
        // Relaxing the window makes it sat.
        let q2 = SmtQuery {
            clauses: vec![
                Clause {
                    lits: vec![
                        Constraint::ge(x.add_const(-5)),
                        Constraint::ge(x.scale(-1).add_const(-5)),
                    ],
                },
                unit(Constraint::ge(x.clone())),
                unit(Constraint::ge(x.scale(-1).add_const(7))),
            ],
        };
        assert_eq!(solve(&q2, &SolverConfig::default()).unwrap(), SolveResult::Sat);
    }

    #[test]
    fn cnf_of_negated_implication() {
        // ¬(a < b -> f(a) < f(b)) over ground instances: a < b ∧ f(a) >= f(b).
        let a = AffineExpr::var(v("a"));
        let b = AffineExpr::var(v("b"));
        let f = UfSymbol::new("f", 1);
        let fa = AffineExpr::uf(UfApp::new(f.clone(), vec![a.clone()]));
        let fb = AffineExpr::uf(UfApp::new(f, vec![b.clone()]));
        let imp = Formula::Or(vec![
            Formula::Atom(Constraint::ge_pair(a.clone(), b.clone())), // ¬(a<b)
            Formula::Atom(Constraint::lt_pair(fa.clone(), fb.clone())),
        ]);
        let neg = imp.negate();
        let q = query_from_formula(&neg).unwrap();
        // a < b ∧ f(a) >= f(b) is satisfiable for a free f.
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Sat);
    }
}
