//! Presburger sets and relations: named integer tuples constrained by
//! conjuncts of affine constraints with UF terms.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::SpfError;

use super::expr::{AffineExpr, Atom, Constraint, Rel, UfApp, VarId, VarKind};

/// One conjunctive piece of a set: constraints plus existential locals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Conjunct {
    pub constraints: Vec<Constraint>,
    pub locals: Vec<VarId>,
}

impl Conjunct {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Conjunct { constraints, locals: vec![] }
    }

    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> Conjunct {
        Conjunct {
            constraints: self.constraints.iter().map(|c| c.rename(f)).collect(),
            locals: self.locals.iter().map(|v| f(v)).collect(),
        }
    }

    pub fn collect_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for c in &self.constraints {
            c.expr.collect_vars(&mut out);
        }
        out
    }

    pub fn collect_apps(&self) -> Vec<UfApp> {
        let mut out = Vec::new();
        for c in &self.constraints {
            c.expr.collect_apps(&mut out);
        }
        out
    }

    /// Drop duplicate and trivially-true constraints; `None` when a
    /// constraint is trivially false.
    pub fn simplified(&self) -> Option<Conjunct> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in &self.constraints {
            match c.as_trivial() {
                Some(true) => continue,
                Some(false) => return None,
                None => {}
            }
            let key = (c.expr.clone(), c.rel);
            if seen.insert(key) {
                out.push(c.clone());
            }
        }
        Some(Conjunct { constraints: out, locals: self.locals.clone() })
    }

    /// Substitute `v := e` everywhere and drop `v` from locals if present.
    pub fn substitute_var(&self, v: &VarId, e: &AffineExpr) -> Conjunct {
        let constraints = self
            .constraints
            .iter()
            .map(|c| c.substitute(&|w| (w == v).then(|| e.clone())))
            .collect();
        let locals = self.locals.iter().filter(|w| *w != v).cloned().collect();
        Conjunct { constraints, locals }
    }

    /// Try to eliminate a local by substituting a unit-coefficient equality.
    /// Returns true when the local was removed.
    fn eliminate_local_by_subst(&mut self, v: &VarId) -> bool {
        for (idx, c) in self.constraints.iter().enumerate() {
            if c.rel != Rel::Eq {
                continue;
            }
            let coef = c.expr.coef_of(v);
            if coef.abs() != 1 {
                continue;
            }
            // coef*v + rest = 0  =>  v = -rest/coef
            let rest = c.expr.without_var(v);
            let sol = rest.scale(-coef).normalize();
            if sol.mentions_var(v) {
                continue;
            }
            let mut next = self.clone();
            next.constraints.remove(idx);
            *self = next.substitute_var(v, &sol);
            return true;
        }
        false
    }

    /// Fourier-Motzkin elimination of `v` over the rationals. Only legal when
    /// `v` does not occur inside any UF argument.
    fn eliminate_local_by_fm(&mut self, v: &VarId) -> Result<(), SpfError> {
        let inside_uf = self.constraints.iter().any(|c| {
            c.expr.terms.iter().any(|t| match &t.atom {
                Atom::Uf(app) => app.args.iter().any(|a| a.mentions_var(v)),
                _ => false,
            })
        });
        if inside_uf {
            return Err(SpfError::Presburger(format!(
                "cannot eliminate {} by projection: it occurs inside a function argument",
                v
            )));
        }
        let mut lowers: Vec<(i64, AffineExpr)> = vec![]; // c*v >= e, c > 0
        let mut uppers: Vec<(i64, AffineExpr)> = vec![]; // c*v <= e, c > 0
        let mut rest: Vec<Constraint> = vec![];
        for c in &self.constraints {
            let coef = c.expr.coef_of(v);
            if coef == 0 {
                rest.push(c.clone());
                continue;
            }
            let others = c.expr.without_var(v);
            match c.rel {
                Rel::Eq => {
                    // coef*v = -others: both a lower and an upper bound.
                    if coef > 0 {
                        lowers.push((coef, others.scale(-1)));
                        uppers.push((coef, others.scale(-1)));
                    } else {
                        lowers.push((-coef, others.clone()));
                        uppers.push((-coef, others.clone()));
                    }
                }
                Rel::Ge => {
                    // coef*v + others >= 0
                    if coef > 0 {
                        lowers.push((coef, others.scale(-1)));
                    } else {
                        uppers.push((-coef, others.clone()));
                    }
                }
            }
        }
        for (cl, el) in &lowers {
            for (cu, eu) in &uppers {
                // cl*v >= el and cu*v <= eu  =>  cl*eu - cu*el >= 0
                let resid = eu.scale(*cl).sub(&el.scale(*cu));
                rest.push(Constraint::ge(resid));
            }
        }
        self.constraints = rest;
        self.locals.retain(|w| w != v);
        Ok(())
    }

    /// Eliminate every local, preferring equality substitution and falling
    /// back to Fourier-Motzkin. An infeasible result keeps a single false
    /// constraint so the conjunct stays syntactically valid.
    pub fn eliminate_locals(&self) -> Result<Conjunct, SpfError> {
        let mut cur = self.clone();
        while let Some(v) = cur.locals.first().cloned() {
            if cur.eliminate_local_by_subst(&v) {
                continue;
            }
            cur.eliminate_local_by_fm(&v)?;
        }
        Ok(cur.simplified().unwrap_or_else(|| Conjunct {
            constraints: vec![Constraint::ge(AffineExpr::constant(-1))],
            locals: vec![],
        }))
    }
}

/// A set of integer tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresburgerSet {
    pub tuple: Vec<VarId>,
    pub disjuncts: Vec<Conjunct>,
}

impl PresburgerSet {
    pub fn universe(tuple: Vec<VarId>) -> Self {
        PresburgerSet { tuple, disjuncts: vec![Conjunct::default()] }
    }

    pub fn empty(tuple: Vec<VarId>) -> Self {
        PresburgerSet { tuple, disjuncts: vec![] }
    }

    pub fn new(tuple: Vec<VarId>, constraints: Vec<Constraint>) -> Self {
        PresburgerSet { tuple, disjuncts: vec![Conjunct::new(constraints)] }
    }

    pub fn is_empty_rep(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// The single conjunct of a conjunctive set. The pipelines of this crate
    /// work on perfectly nested conjunctive spaces; callers that need the
    /// general case iterate `disjuncts` themselves.
    pub fn sole_conjunct(&self) -> Result<&Conjunct, SpfError> {
        if self.disjuncts.len() != 1 {
            return Err(SpfError::Presburger(format!(
                "expected a conjunctive set, found {} disjuncts",
                self.disjuncts.len()
            )));
        }
        Ok(&self.disjuncts[0])
    }

    pub fn find_var(&self, name: &str) -> Option<&VarId> {
        self.tuple.iter().find(|v| v.name == name)
    }

    /// Parameters referenced by the constraints.
    pub fn parameters(&self) -> BTreeSet<VarId> {
        let mut vars = BTreeSet::new();
        for d in &self.disjuncts {
            vars.extend(d.collect_vars());
        }
        vars.into_iter().filter(|v| v.kind == VarKind::Parameter).collect()
    }
}

impl fmt::Display for PresburgerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ [")?;
        for (n, v) in self.tuple.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, "]")?;
        fmt_disjuncts(f, &self.disjuncts)?;
        write!(f, " }}")
    }
}

pub(crate) fn fmt_disjuncts(f: &mut fmt::Formatter<'_>, disjuncts: &[Conjunct]) -> fmt::Result {
    if disjuncts.is_empty() {
        return write!(f, " | false");
    }
    if disjuncts.len() == 1 && disjuncts[0].constraints.is_empty() && disjuncts[0].locals.is_empty()
    {
        return Ok(());
    }
    write!(f, " | ")?;
    for (n, d) in disjuncts.iter().enumerate() {
        if n > 0 {
            write!(f, " or ")?;
        }
        if !d.locals.is_empty() {
            write!(f, "exists ")?;
            for (m, l) in d.locals.iter().enumerate() {
                if m > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", l)?;
            }
            write!(f, " : ")?;
        }
        if d.constraints.is_empty() {
            write!(f, "true")?;
        }
        for (m, c) in d.constraints.iter().enumerate() {
            if m > 0 {
                write!(f, " and ")?;
            }
            write!(f, "{}", c)?;
        }
    }
    Ok(())
}

/// A binary relation between two named tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresburgerRelation {
    pub input: Vec<VarId>,
    pub output: Vec<VarId>,
    pub disjuncts: Vec<Conjunct>,
}

impl PresburgerRelation {
    pub fn new(input: Vec<VarId>, output: Vec<VarId>, constraints: Vec<Constraint>) -> Self {
        PresburgerRelation { input, output, disjuncts: vec![Conjunct::new(constraints)] }
    }

    /// Identity relation over the given tuple; output names get a prime-free
    /// fresh suffix so input/output stay disjoint.
    pub fn identity(tuple: &[VarId]) -> Self {
        let output: Vec<VarId> = tuple
            .iter()
            .map(|v| VarId::new(format!("{}_out", v.name), v.kind))
            .collect();
        let constraints = tuple
            .iter()
            .zip(output.iter())
            .map(|(i, o)| Constraint::eq_pair(AffineExpr::var(i.clone()), AffineExpr::var(o.clone())))
            .collect();
        PresburgerRelation::new(tuple.to_vec(), output, constraints)
    }

    /// View the relation as a set over input ++ output.
    pub fn as_set(&self) -> PresburgerSet {
        let mut tuple = self.input.clone();
        tuple.extend(self.output.iter().cloned());
        PresburgerSet { tuple, disjuncts: self.disjuncts.clone() }
    }

    pub fn sole_conjunct(&self) -> Result<&Conjunct, SpfError> {
        if self.disjuncts.len() != 1 {
            return Err(SpfError::Presburger(format!(
                "expected a conjunctive relation, found {} disjuncts",
                self.disjuncts.len()
            )));
        }
        Ok(&self.disjuncts[0])
    }

    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> PresburgerRelation {
        PresburgerRelation {
            input: self.input.iter().map(|v| f(v)).collect(),
            output: self.output.iter().map(|v| f(v)).collect(),
            disjuncts: self.disjuncts.iter().map(|d| d.rename(f)).collect(),
        }
    }
}

impl fmt::Display for PresburgerRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ [")?;
        for (n, v) in self.input.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, "] -> [")?;
        for (n, v) in self.output.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, "]")?;
        fmt_disjuncts(f, &self.disjuncts)?;
        write!(f, " }}")
    }
}
