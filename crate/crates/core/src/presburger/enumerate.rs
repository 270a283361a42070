//! Brute-force enumeration of bounded sets: the oracle that all the
//! symbolic operations are checked against.

use std::collections::BTreeMap;

use crate::error::SpfError;

use super::expr::{AffineExpr, Atom, Rel, VarId};
use super::set::PresburgerSet;

/// Concrete integer table backing one uninterpreted function.
#[derive(Debug, Clone, Default)]
pub struct UfTable {
    pub entries: BTreeMap<Vec<i64>, i64>,
}

impl UfTable {
    /// Arity-1 table from a plain vector, indexed 0..len.
    pub fn from_vec(data: &[i64]) -> Self {
        let entries = data.iter().enumerate().map(|(i, &v)| (vec![i as i64], v)).collect();
        UfTable { entries }
    }

    pub fn lookup(&self, args: &[i64]) -> Result<i64, SpfError> {
        self.entries.get(args).copied().ok_or_else(|| {
            SpfError::Presburger(format!("function table lookup out of range: {:?}", args))
        })
    }
}

/// Per-symbol tables keyed by symbol name.
pub type UfTables = BTreeMap<String, UfTable>;

/// Half-open interval per variable name. Parameters are fixed by a
/// degenerate interval [v, v+1).
#[derive(Debug, Clone, Default)]
pub struct Box_ {
    pub ranges: BTreeMap<String, (i64, i64)>,
}

impl Box_ {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn with(mut self, name: &str, lo: i64, hi: i64) -> Self {
        self.ranges.insert(name.to_string(), (lo, hi));
        self
    }
    pub fn fix(mut self, name: &str, v: i64) -> Self {
        self.ranges.insert(name.to_string(), (v, v + 1));
        self
    }
    pub fn range_of(&self, v: &VarId) -> Result<(i64, i64), SpfError> {
        self.ranges.get(&v.name).copied().ok_or_else(|| {
            SpfError::Presburger(format!("no box range for variable {}", v.name))
        })
    }
}

pub fn eval_expr(
    e: &AffineExpr,
    env: &BTreeMap<String, i64>,
    tables: &UfTables,
) -> Result<i64, SpfError> {
    let mut acc = 0i64;
    for t in &e.terms {
        let v = match &t.atom {
            Atom::Const => 1,
            Atom::Var(v) => *env.get(&v.name).ok_or_else(|| {
                SpfError::Presburger(format!("unbound variable {} in evaluation", v.name))
            })?,
            Atom::Uf(app) => {
                let args = app
                    .args
                    .iter()
                    .map(|a| eval_expr(a, env, tables))
                    .collect::<Result<Vec<_>, _>>()?;
                let table = tables.get(&app.symbol.name).ok_or_else(|| {
                    SpfError::Presburger(format!("no table for function {}", app.symbol.name))
                })?;
                table.lookup(&args)?
            }
        };
        acc += t.coef * v;
    }
    Ok(acc)
}

pub fn eval_constraint(
    c: &super::expr::Constraint,
    env: &BTreeMap<String, i64>,
    tables: &UfTables,
) -> Result<bool, SpfError> {
    let v = eval_expr(&c.expr, env, tables)?;
    Ok(match c.rel {
        Rel::Eq => v == 0,
        Rel::Ge => v >= 0,
    })
}

/// Exact membership list of `s` restricted to `box_`, functions evaluated
/// from `tables`. Existential locals are searched over the box as well.
pub fn enumerate(
    s: &PresburgerSet,
    box_: &Box_,
    tables: &UfTables,
) -> Result<Vec<Vec<i64>>, SpfError> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    let params: Vec<VarId> = s.parameters().into_iter().collect();
    for d in &s.disjuncts {
        let mut vars: Vec<VarId> = s.tuple.clone();
        vars.extend(d.locals.iter().cloned());
        for p in &params {
            if !vars.iter().any(|v| v.name == p.name) {
                vars.push(p.clone());
            }
        }
        let ranges = vars
            .iter()
            .map(|v| box_.range_of(v))
            .collect::<Result<Vec<_>, _>>()?;
        let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if point.is_empty() {
            // Zero-dimensional: the tuple is in iff constraints hold.
            let env = BTreeMap::new();
            let ok = d
                .constraints
                .iter()
                .map(|c| eval_constraint(c, &env, tables))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|b| b);
            if ok {
                out.push(vec![]);
            }
            continue;
        }
        'scan: loop {
            let env: BTreeMap<String, i64> = vars
                .iter()
                .zip(point.iter())
                .map(|(v, &x)| (v.name.clone(), x))
                .collect();
            let mut ok = true;
            for c in &d.constraints {
                if !eval_constraint(c, &env, tables)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                let tup: Vec<i64> = point[..s.tuple.len()].to_vec();
                if !out.contains(&tup) {
                    out.push(tup);
                }
            }
            // Odometer increment.
            let mut k = point.len();
            loop {
                if k == 0 {
                    break 'scan;
                }
                k -= 1;
                point[k] += 1;
                if point[k] < ranges[k].1 {
                    break;
                }
                point[k] = ranges[k].0;
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::expr::{Constraint, UfApp, UfSymbol};

    #[test]
    fn simple_interval() {
        let i = VarId::computation("i");
        let s = PresburgerSet::new(
            vec![i.clone()],
            vec![
                Constraint::ge(AffineExpr::var(i.clone())),
                Constraint::lt_pair(AffineExpr::var(i.clone()), AffineExpr::constant(3)),
            ],
        );
        let b = Box_::new().with("i", 0, 11);
        let r = enumerate(&s, &b, &UfTables::new()).unwrap();
        assert_eq!(r, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn sparse_dot_space_matches_hand_enumeration() {
        // IS of the sparse dot product with A.idx = [1,3], B.idx = [0,1,3]:
        // matches at coordinates 1 and 3.
        let pa = VarId::layout("pA");
        let i = VarId::computation("i");
        let pb = VarId::layout("pB");
        let aidx = UfSymbol::new("A.idx", 1);
        let bidx = UfSymbol::new("B.idx", 1);
        let s = PresburgerSet::new(
            vec![pa.clone(), i.clone(), pb.clone()],
            vec![
                Constraint::ge(AffineExpr::var(pa.clone())),
                Constraint::lt_pair(AffineExpr::var(pa.clone()), AffineExpr::constant(2)),
                Constraint::ge(AffineExpr::var(pb.clone())),
                Constraint::lt_pair(AffineExpr::var(pb.clone()), AffineExpr::constant(3)),
                Constraint::eq_pair(
                    AffineExpr::var(i.clone()),
                    AffineExpr::uf(UfApp::new(aidx.clone(), vec![AffineExpr::var(pa.clone())])),
                ),
                Constraint::eq_pair(
                    AffineExpr::uf(UfApp::new(bidx.clone(), vec![AffineExpr::var(pb.clone())])),
                    AffineExpr::var(i.clone()),
                ),
            ],
        );
        let mut tables = UfTables::new();
        tables.insert("A.idx".into(), UfTable::from_vec(&[1, 3]));
        tables.insert("B.idx".into(), UfTable::from_vec(&[0, 1, 3]));
        let b = Box_::new().with("pA", 0, 2).with("i", 0, 4).with("pB", 0, 3);
        let r = enumerate(&s, &b, &tables).unwrap();
        assert_eq!(r, vec![vec![0, 1, 1], vec![1, 3, 2]]);
    }
}
