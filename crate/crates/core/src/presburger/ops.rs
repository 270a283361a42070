//! Named intersection, composition, inversion and range of sets/relations.

use std::collections::BTreeSet;

use crate::error::SpfError;

use super::expr::{AffineExpr, VarId};
use super::set::{Conjunct, PresburgerRelation, PresburgerSet};

/// Named intersection: shared names identify shared dimensions, disjoint
/// names are concatenated. The result tuple preserves `a`'s order first.
pub fn intersect(a: &PresburgerSet, b: &PresburgerSet) -> Result<PresburgerSet, SpfError> {
    let mut tuple = a.tuple.clone();
    for v in &b.tuple {
        match tuple.iter().find(|w| w.name == v.name) {
            Some(w) if w.kind == v.kind => {}
            Some(w) => {
                return Err(SpfError::Presburger(format!(
                    "shared name {} has conflicting kinds {:?} and {:?}",
                    v.name, w.kind, v.kind
                )))
            }
            None => tuple.push(v.clone()),
        }
    }
    let mut disjuncts = Vec::new();
    for da in &a.disjuncts {
        for db in &b.disjuncts {
            let mut constraints = da.constraints.clone();
            constraints.extend(db.constraints.iter().cloned());
            let mut locals = da.locals.clone();
            for l in &db.locals {
                if locals.iter().any(|w| w.name == l.name) {
                    return Err(SpfError::Presburger(format!(
                        "local name {} collides during intersection",
                        l.name
                    )));
                }
                locals.push(l.clone());
            }
            if let Some(c) = (Conjunct { constraints, locals }).simplified() {
                disjuncts.push(c);
            }
        }
    }
    Ok(PresburgerSet { tuple, disjuncts })
}

/// Relation composition `outer ∘ inner`: x→o with the mediating tuple made
/// existential. The mediator unifies `inner.output` with `outer.input`
/// positionally and requires matching names.
pub fn compose(
    outer: &PresburgerRelation,
    inner: &PresburgerRelation,
) -> Result<PresburgerRelation, SpfError> {
    if outer.input.len() != inner.output.len() {
        return Err(SpfError::Presburger(format!(
            "composition arity mismatch: inner output {} vs outer input {}",
            inner.output.len(),
            outer.input.len()
        )));
    }
    for (i, o) in inner.output.iter().zip(outer.input.iter()) {
        if i.name != o.name {
            return Err(SpfError::Presburger(format!(
                "composition name mismatch: {} vs {}",
                i.name, o.name
            )));
        }
    }
    // Fresh local names for the mediating tuple.
    let mediators: Vec<VarId> = inner
        .output
        .iter()
        .map(|v| VarId::quantified(format!("{}$m", v.name)))
        .collect();
    let med_of = |tuple: &[VarId], v: &VarId| -> Option<AffineExpr> {
        tuple
            .iter()
            .position(|w| w.name == v.name)
            .map(|idx| AffineExpr::var(mediators[idx].clone()))
    };

    let mut disjuncts = Vec::new();
    for di in &inner.disjuncts {
        for do_ in &outer.disjuncts {
            let ci = di.constraints.iter().map(|c| {
                c.substitute(&|v| med_of(&inner.output, v))
            });
            let co = do_.constraints.iter().map(|c| {
                c.substitute(&|v| med_of(&outer.input, v))
            });
            let mut locals = mediators.clone();
            locals.extend(di.locals.iter().cloned());
            locals.extend(do_.locals.iter().cloned());
            let conj = Conjunct { constraints: ci.chain(co).collect(), locals };
            if let Some(c) = conj.simplified() {
                disjuncts.push(c);
            }
        }
    }
    Ok(PresburgerRelation {
        input: inner.input.clone(),
        output: outer.output.clone(),
        disjuncts,
    })
}

/// Swap input and output tuples; constraints are untouched.
pub fn inverse(r: &PresburgerRelation) -> PresburgerRelation {
    PresburgerRelation {
        input: r.output.clone(),
        output: r.input.clone(),
        disjuncts: r.disjuncts.clone(),
    }
}

/// Range of a relation. With `keep_inputs` the input (layout) variables are
/// retained as set variables instead of being projected away, which is how
/// layout indices survive into the generated loops. With `keep_inputs =
/// false` the inputs become locals and are eliminated.
pub fn range_keep(
    r: &PresburgerRelation,
    keep_inputs: bool,
) -> Result<PresburgerSet, SpfError> {
    if keep_inputs {
        let mut tuple = r.input.clone();
        tuple.extend(r.output.iter().cloned());
        return Ok(PresburgerSet { tuple, disjuncts: r.disjuncts.clone() });
    }
    let mut disjuncts = Vec::new();
    for d in &r.disjuncts {
        let mut proj = d.clone();
        proj.locals.extend(r.input.iter().cloned());
        disjuncts.push(proj.eliminate_locals()?);
    }
    Ok(PresburgerSet { tuple: r.output.clone(), disjuncts })
}

/// Substitute away tuple variables that are pinned by a unit-coefficient
/// equality to an expression over the remaining variables. Returns the
/// shrunk set plus the substitution that was applied.
pub fn substitute_tuple_vars(
    s: &PresburgerSet,
    candidates: &[VarId],
) -> Result<(PresburgerSet, Vec<(VarId, AffineExpr)>), SpfError> {
    let conj = s.sole_conjunct()?.clone();
    let mut cur = conj;
    let mut applied: Vec<(VarId, AffineExpr)> = Vec::new();
    for v in candidates {
        let found = cur.constraints.iter().enumerate().find_map(|(idx, c)| {
            if c.rel != super::expr::Rel::Eq {
                return None;
            }
            let coef = c.expr.coef_of(v);
            if coef.abs() != 1 {
                return None;
            }
            let sol = c.expr.without_var(v).scale(-coef).normalize();
            if sol.mentions_var(v) {
                return None;
            }
            // The solution may not mention other candidates we still plan to
            // substitute; process order handles chains.
            Some((idx, sol))
        });
        if let Some((idx, sol)) = found {
            let mut next = cur.clone();
            next.constraints.remove(idx);
            cur = next.substitute_var(v, &sol);
            // Rewrite earlier substitutions with the new knowledge.
            for (_, e) in applied.iter_mut() {
                *e = e.substitute(&|w| (w == v).then(|| sol.clone()));
            }
            applied.push((v.clone(), sol));
        }
    }
    let substituted: BTreeSet<&VarId> = applied.iter().map(|(v, _)| v).collect();
    let tuple: Vec<VarId> =
        s.tuple.iter().filter(|v| !substituted.contains(v)).cloned().collect();
    let cur = cur
        .simplified()
        .ok_or_else(|| SpfError::Presburger("substitution produced an infeasible space".into()))?;
    Ok((PresburgerSet { tuple, disjuncts: vec![cur] }, applied))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::expr::{Constraint, VarId};

    fn ivar(n: &str) -> VarId {
        VarId::computation(n)
    }

    fn half_line(n: &str, lo: i64) -> PresburgerSet {
        let v = ivar(n);
        PresburgerSet::new(
            vec![v.clone()],
            vec![Constraint::ge(AffineExpr::var(v).add_const(-lo))],
        )
    }

    #[test]
    fn intersect_conjoins_half_lines() {
        // {[i] | i >= 0} ∩ {[i] | i >= 3} keeps both constraints.
        let a = half_line("i", 0);
        let b = half_line("i", 3);
        let r = intersect(&a, &b).unwrap();
        assert_eq!(r.tuple.len(), 1);
        assert_eq!(r.disjuncts[0].constraints.len(), 2);
    }

    #[test]
    fn intersect_with_universe_is_identity() {
        let a = half_line("i", 0);
        let u = PresburgerSet::universe(vec![ivar("i")]);
        let r = intersect(&a, &u).unwrap();
        assert_eq!(r.disjuncts[0].constraints, a.disjuncts[0].constraints);
    }

    #[test]
    fn intersect_rejects_kind_conflict() {
        let a = half_line("i", 0);
        let mut b = half_line("i", 1);
        b.tuple[0] = VarId::layout("i");
        b.disjuncts[0].constraints = vec![];
        assert!(intersect(&a, &b).is_err());
    }

    #[test]
    fn inverse_is_an_involution() {
        let r = PresburgerRelation::new(
            vec![ivar("x")],
            vec![ivar("y")],
            vec![Constraint::eq_pair(
                AffineExpr::var(ivar("y")),
                AffineExpr::var(ivar("x")).add_const(2),
            )],
        );
        assert_eq!(inverse(&inverse(&r)), r);
    }

    #[test]
    fn compose_with_identity() {
        let r = PresburgerRelation::new(
            vec![ivar("x")],
            vec![ivar("g")],
            vec![Constraint::eq_pair(
                AffineExpr::var(ivar("g")),
                AffineExpr::var(ivar("x")).add_const(1),
            )],
        );
        let id = PresburgerRelation::new(
            vec![ivar("g")],
            vec![ivar("z")],
            vec![Constraint::eq_pair(
                AffineExpr::var(ivar("z")),
                AffineExpr::var(ivar("g")),
            )],
        );
        let c = compose(&id, &r).unwrap();
        assert_eq!(c.input, vec![ivar("x")]);
        assert_eq!(c.output, vec![ivar("z")]);
        // Eliminating the mediator should leave z = x + 1.
        let conj = c.disjuncts[0].eliminate_locals().unwrap();
        assert_eq!(conj.constraints.len(), 1);
    }

    #[test]
    fn range_of_empty_relation_is_empty() {
        let r = PresburgerRelation {
            input: vec![ivar("x")],
            output: vec![ivar("y")],
            disjuncts: vec![],
        };
        let s = range_keep(&r, false).unwrap();
        assert!(s.is_empty_rep());
    }
}
