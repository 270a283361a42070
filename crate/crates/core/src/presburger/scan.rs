//! Polyhedral scanning: derive per-loop bounds, assignments, guards and
//! find conditions from a conjunctive set and a loop order.
//!
//! Applications whose arguments are already bound at a level are treated as
//! opaque atoms; a residual equality that applies a function to the current
//! variable becomes a find condition.

use std::collections::BTreeSet;

use crate::error::SpfError;

use super::expr::{AffineExpr, Atom, Constraint, Rel, UfApp, VarId};
use super::set::PresburgerSet;

/// `coef * var >= expr` or `coef * var <= expr` with `coef > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub coef: i64,
    pub expr: AffineExpr,
}

/// An equality `app = rhs` where `app` applies a function to the level's
/// variable and `rhs` is invariant at this level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FindCondition {
    pub app: UfApp,
    pub rhs: AffineExpr,
}

#[derive(Debug, Clone, Default)]
pub struct ScanLevel {
    pub var: Option<VarId>,
    /// coef*var >= expr
    pub lowers: Vec<Bound>,
    /// coef*var <= expr
    pub uppers: Vec<Bound>,
    /// var = expr (unit coefficient already solved for var)
    pub assigns: Vec<AffineExpr>,
    /// Residual guards checked once var is bound.
    pub conditions: Vec<Constraint>,
    /// Equalities that drive find synthesis.
    pub finds: Vec<FindCondition>,
    /// Applications whose last unbound argument variable is this level.
    pub level_ufs: Vec<UfApp>,
}

impl ScanLevel {
    pub fn is_degenerate(&self) -> bool {
        !self.assigns.is_empty()
    }
    pub fn var(&self) -> &VarId {
        self.var.as_ref().expect("scan level without variable")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanPlan {
    pub order: Vec<VarId>,
    pub levels: Vec<ScanLevel>,
    /// Constraints over parameters only, hoisted above the loop nest.
    pub pre_conditions: Vec<Constraint>,
}

impl ScanPlan {
    pub fn level_of(&self, v: &VarId) -> Option<usize> {
        self.order.iter().position(|w| w.name == v.name)
    }
}

/// Level of an expression: the maximum position of any variable occurring in
/// it (including inside application arguments); `None` for parameter-only.
fn expr_level(e: &AffineExpr, order: &[VarId]) -> Result<Option<usize>, SpfError> {
    let mut vars = BTreeSet::new();
    e.collect_vars(&mut vars);
    let mut level = None;
    for v in vars {
        if v.kind == super::expr::VarKind::Parameter {
            continue;
        }
        match order.iter().position(|w| w.name == v.name) {
            Some(k) => level = Some(level.map_or(k, |l: usize| l.max(k))),
            None => {
                return Err(SpfError::Presburger(format!(
                    "variable {} is not part of the scan order",
                    v.name
                )))
            }
        }
    }
    Ok(level)
}

fn app_mentions(app: &UfApp, v: &VarId) -> bool {
    app.args.iter().any(|a| a.mentions_var(v))
}

/// Split a constraint whose linear coefficient on `v` is zero but which
/// mentions `v` inside exactly one unit-coefficient application into a find
/// condition.
fn try_find_condition(c: &Constraint, v: &VarId) -> Option<FindCondition> {
    if c.rel != Rel::Eq {
        return None;
    }
    let mut target: Option<(i64, UfApp)> = None;
    for t in &c.expr.terms {
        if let Atom::Uf(app) = &t.atom {
            if app_mentions(app, v) {
                if target.is_some() {
                    return None; // two applications of v: keep as plain guard
                }
                target = Some((t.coef, app.clone()));
            }
        }
    }
    let (coef, app) = target?;
    if coef.abs() != 1 {
        return None;
    }
    // coef*app + rest = 0  =>  app = -rest/coef
    let rest = AffineExpr {
        terms: c
            .expr
            .terms
            .iter()
            .filter(|t| !matches!(&t.atom, Atom::Uf(a) if *a == app))
            .cloned()
            .collect(),
    };
    Some(FindCondition { app, rhs: rest.scale(-coef).normalize() })
}

/// Produce the per-variable scanning result for a conjunctive set.
pub fn project_scan(s: &PresburgerSet, order: &[VarId]) -> Result<ScanPlan, SpfError> {
    let conj = s.sole_conjunct()?;
    if !conj.locals.is_empty() {
        return Err(SpfError::Presburger(
            "scanning requires locals to be eliminated or rematerialized first".into(),
        ));
    }
    {
        let names: BTreeSet<&str> = order.iter().map(|v| v.name.as_str()).collect();
        let tuple: BTreeSet<&str> = s.tuple.iter().map(|v| v.name.as_str()).collect();
        if names != tuple || order.len() != s.tuple.len() {
            return Err(SpfError::Presburger(
                "scan order must be a permutation of the set tuple".into(),
            ));
        }
    }

    let mut levels: Vec<ScanLevel> = order
        .iter()
        .map(|v| ScanLevel { var: Some(v.clone()), ..ScanLevel::default() })
        .collect();
    let mut pre_conditions: Vec<Constraint> = Vec::new();

    // Bucket constraints by level.
    let mut buckets: Vec<Vec<Constraint>> = vec![Vec::new(); order.len()];
    let mut seen: BTreeSet<(AffineExpr, Rel)> = BTreeSet::new();
    for c in &conj.constraints {
        let c = Constraint { expr: c.expr.normalize(), rel: c.rel };
        if !seen.insert((c.expr.clone(), c.rel)) {
            continue;
        }
        match expr_level(&c.expr, order)? {
            Some(k) => buckets[k].push(c),
            None => pre_conditions.push(c),
        }
    }

    // Record applications per level (functions applied with this index
    // as the last unbound argument).
    for k in 0..order.len() {
        let mut apps: Vec<UfApp> = Vec::new();
        for c in buckets.iter().flatten() {
            let mut collected = Vec::new();
            c.expr.collect_apps(&mut collected);
            for app in collected {
                let arg_level = app
                    .args
                    .iter()
                    .map(|a| expr_level(a, order))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .flatten()
                    .max();
                if arg_level == Some(k) && !apps.contains(&app) {
                    apps.push(app);
                }
            }
        }
        levels[k].level_ufs = apps;
    }

    // Innermost to outermost: classify, then push Fourier-Motzkin residuals
    // to outer levels with integer-safe rational shadows.
    for k in (0..order.len()).rev() {
        let v = order[k].clone();
        let bucket = std::mem::take(&mut buckets[k]);
        let mut fm_lowers: Vec<(i64, AffineExpr)> = Vec::new();
        let mut fm_uppers: Vec<(i64, AffineExpr)> = Vec::new();
        for c in bucket {
            let coef = c.expr.coef_of(&v);
            if coef != 0 {
                let self_app = c.expr.terms.iter().any(
                    |t| matches!(&t.atom, Atom::Uf(app) if app_mentions(app, &v)),
                );
                if self_app {
                    return Err(SpfError::Presburger(format!(
                        "constraint bounds {} while applying a function to it: {}",
                        v, c
                    )));
                }
                let rest = c.expr.without_var(&v);
                match c.rel {
                    Rel::Eq => {
                        if coef.abs() == 1 {
                            levels[k].assigns.push(rest.scale(-coef).normalize());
                        } else {
                            // Keep the equality as a guard; bounds come from
                            // the rational relaxation.
                            levels[k].conditions.push(c.clone());
                            let e = rest.scale(-coef.signum());
                            levels[k].lowers.push(Bound { coef: coef.abs(), expr: e.clone() });
                            levels[k].uppers.push(Bound { coef: coef.abs(), expr: e.clone() });
                        }
                        let e = rest.scale(-coef.signum());
                        fm_lowers.push((coef.abs(), e.clone()));
                        fm_uppers.push((coef.abs(), e));
                    }
                    Rel::Ge => {
                        if coef > 0 {
                            let e = rest.scale(-1);
                            levels[k].lowers.push(Bound { coef, expr: e.clone() });
                            fm_lowers.push((coef, e));
                        } else {
                            let e = rest.clone();
                            levels[k].uppers.push(Bound { coef: -coef, expr: e.clone() });
                            fm_uppers.push((-coef, e));
                        }
                    }
                }
            } else if let Some(fc) = try_find_condition(&c, &v) {
                levels[k].finds.push(fc);
            } else {
                levels[k].conditions.push(c);
            }
        }
        // Residuals from bound pairs.
        for (cl, el) in &fm_lowers {
            for (cu, eu) in &fm_uppers {
                let resid = Constraint::ge(eu.scale(*cl).sub(&el.scale(*cu)));
                if resid.as_trivial() == Some(true) {
                    continue;
                }
                if seen.insert((resid.expr.clone(), resid.rel)) {
                    match expr_level(&resid.expr, order)? {
                        Some(j) => {
                            debug_assert!(j < k);
                            buckets[j].push(resid);
                        }
                        None => pre_conditions.push(resid),
                    }
                }
            }
        }
    }

    Ok(ScanPlan { order: order.to_vec(), levels, pre_conditions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::expr::{UfSymbol, VarKind};

    fn lv(n: &str) -> VarId {
        VarId::layout(n)
    }
    fn cv(n: &str) -> VarId {
        VarId::computation(n)
    }
    fn pv(n: &str) -> VarId {
        VarId::new(n, VarKind::Parameter)
    }

    /// The sparse dot product space of the running example with order
    /// [pA, i, pB]: pA gets plain bounds, i degenerates into an assignment
    /// and pB carries bounds plus one find condition.
    #[test]
    fn sparse_dot_scan_shape() {
        let pa = lv("pA");
        let i = cv("i");
        let pb = lv("pB");
        let alen = pv("A.len");
        let blen = pv("B.len");
        let aidx = UfSymbol::new("A.idx", 1);
        let bidx = UfSymbol::new("B.idx", 1);
        let s = PresburgerSet::new(
            vec![pa.clone(), i.clone(), pb.clone()],
            vec![
                Constraint::ge(AffineExpr::var(pa.clone())),
                Constraint::lt_pair(AffineExpr::var(pa.clone()), AffineExpr::var(alen)),
                Constraint::ge(AffineExpr::var(pb.clone())),
                Constraint::lt_pair(AffineExpr::var(pb.clone()), AffineExpr::var(blen)),
                Constraint::eq_pair(
                    AffineExpr::var(i.clone()),
                    AffineExpr::uf(UfApp::new(aidx, vec![AffineExpr::var(pa.clone())])),
                ),
                Constraint::eq_pair(
                    AffineExpr::uf(UfApp::new(bidx, vec![AffineExpr::var(pb.clone())])),
                    AffineExpr::var(i.clone()),
                ),
            ],
        );
        let plan = project_scan(&s, &[pa, i, pb]).unwrap();
        assert_eq!(plan.levels[0].lowers.len(), 1);
        assert_eq!(plan.levels[0].uppers.len(), 1);
        assert!(plan.levels[0].finds.is_empty());
        assert_eq!(plan.levels[1].assigns.len(), 1);
        assert_eq!(plan.levels[2].finds.len(), 1);
        assert_eq!(plan.levels[2].finds[0].app.symbol.name, "B.idx");
        assert_eq!(plan.levels[2].lowers.len(), 1);
        assert_eq!(plan.levels[2].uppers.len(), 1);
    }

    /// Tiled space of a dense loop: the tile variable's bounds come from
    /// eliminating the point variable.
    #[test]
    fn tiled_bounds_via_elimination() {
        let ti = cv("Ti");
        let t = cv("ti");
        let n = pv("N");
        let s = PresburgerSet::new(
            vec![ti.clone(), t.clone()],
            vec![
                Constraint::ge(AffineExpr::var(t.clone())),
                Constraint::lt_pair(AffineExpr::var(t.clone()), AffineExpr::var(n.clone())),
                Constraint::ge_pair(
                    AffineExpr::var(t.clone()),
                    AffineExpr::var(ti.clone()).scale(8),
                ),
                Constraint::lt_pair(
                    AffineExpr::var(t.clone()),
                    AffineExpr::var(ti.clone()).scale(8).add_const(8),
                ),
            ],
        );
        let plan = project_scan(&s, &[ti.clone(), t.clone()]).unwrap();
        // Point loop: max(8Ti, 0) <= ti < min(8Ti+8, N).
        assert_eq!(plan.levels[1].lowers.len(), 2);
        assert_eq!(plan.levels[1].uppers.len(), 2);
        // Tile loop: bounds derived by elimination, including 8Ti <= N-1.
        assert!(!plan.levels[0].lowers.is_empty());
        assert!(plan.levels[0]
            .uppers
            .iter()
            .any(|b| b.coef == 8 && b.expr.mentions_var(&n)));
    }

    #[test]
    fn dense_loop_is_single_interval() {
        let i = cv("i");
        let n = pv("N");
        let s = PresburgerSet::new(
            vec![i.clone()],
            vec![
                Constraint::ge(AffineExpr::var(i.clone())),
                Constraint::lt_pair(AffineExpr::var(i.clone()), AffineExpr::var(n)),
            ],
        );
        let plan = project_scan(&s, &[i]).unwrap();
        assert_eq!(plan.levels[0].lowers.len(), 1);
        assert_eq!(plan.levels[0].uppers.len(), 1);
        assert!(plan.levels[0].conditions.is_empty());
    }
}
