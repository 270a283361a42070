//! The layout description language: physical-to-logical relations, value
//! addressing expressions and index-array properties, plus the registry of
//! stock layouts.

pub mod builtins;
pub mod dsl;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::SpfError;
use crate::iexpr::IExpr;
use crate::presburger::{
    AffineExpr, Constraint, PresburgerRelation, UfApp, UfSymbol, VarId, VarKind,
};
use crate::synthesis::Clause;

pub use builtins::builtin;
pub use dsl::{parse_layout, parse_layouts, print_layout};

/// Property classification, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropFlavor {
    Range,
    Injectivity,
    StrictMonotonicity,
    Monotonicity,
    PeriodicMonotonicity,
    CovaryMonotonicity,
}

/// Comparison inside property guards/conclusions; disequalities expand into
/// two-literal clauses at instantiation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropRel {
    Eq,
    Ge,
    Ne,
}

/// An atom over the two instance copies of the layout variables, the
/// argument placeholders `a`/`a'` and the value placeholders `f`/`f'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropAtom {
    pub expr: AffineExpr,
    pub rel: PropRel,
}

impl PropAtom {
    pub fn eq(e: AffineExpr) -> Self {
        PropAtom { expr: e.normalize(), rel: PropRel::Eq }
    }
    pub fn ge(e: AffineExpr) -> Self {
        PropAtom { expr: e.normalize(), rel: PropRel::Ge }
    }
}

/// A universally quantified guard -> conclusion formula over two instances
/// of one index array's application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexArrayProperty {
    pub uf: UfSymbol,
    pub guard: Vec<PropAtom>,
    pub conclusion: Vec<PropAtom>,
    pub flavor: PropFlavor,
}

/// Binding of the property placeholders for one instance.
#[derive(Debug, Clone, Default)]
pub struct PropSubst {
    /// Layout variable name -> expression in the target space.
    pub vars: Vec<(String, AffineExpr)>,
    /// The `a` argument placeholder.
    pub arg: AffineExpr,
}

impl PropSubst {
    pub fn lookup(&self, name: &str) -> Option<&AffineExpr> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }
}

/// Role of one field of a layout's data structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    IndexArray,
    ValueArray,
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub role: FieldRole,
    /// Trailing fixed dimensions for multi-dimensional value arrays
    /// (e.g. the blocks of BCSR); empty for flat arrays.
    pub dims: Vec<i64>,
}

/// One sparse layout: a physical-to-logical relation plus value addressing
/// and index-array properties.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSpec {
    pub name: String,
    pub physical: Vec<VarId>,
    pub logical: Vec<VarId>,
    pub relation: PresburgerRelation,
    pub value_array: String,
    pub value_expr: IExpr,
    pub fields: Vec<FieldDecl>,
    pub properties: Vec<IndexArrayProperty>,
}

impl LayoutSpec {
    /// Check the structural invariants tying the pieces together.
    pub fn validate(&self) -> Result<(), SpfError> {
        if self.relation.input != self.physical {
            return Err(SpfError::Layout(format!(
                "{}: relation input tuple must equal the physical tuple",
                self.name
            )));
        }
        if self.relation.output != self.logical {
            return Err(SpfError::Layout(format!(
                "{}: relation output tuple must equal the logical tuple",
                self.name
            )));
        }
        let index_arrays: BTreeSet<&str> = self
            .fields
            .iter()
            .filter(|f| f.role == FieldRole::IndexArray)
            .map(|f| f.name.as_str())
            .collect();
        let scalars: BTreeSet<&str> = self
            .fields
            .iter()
            .filter(|f| f.role == FieldRole::Scalar)
            .map(|f| f.name.as_str())
            .collect();
        for conj in &self.relation.disjuncts {
            for app in conj.collect_apps() {
                if !index_arrays.contains(app.symbol.name.as_str()) {
                    return Err(SpfError::Layout(format!(
                        "{}: {} is used as an index array but not declared",
                        self.name, app.symbol.name
                    )));
                }
            }
            for v in conj.collect_vars() {
                let known = self.physical.iter().any(|p| p.name == v.name)
                    || self.logical.iter().any(|g| g.name == v.name)
                    || scalars.contains(v.name.as_str());
                if !known {
                    return Err(SpfError::Layout(format!(
                        "{}: relation references undeclared name {}",
                        self.name, v.name
                    )));
                }
            }
        }
        for p in &self.properties {
            if !index_arrays.contains(p.uf.name.as_str()) {
                return Err(SpfError::Layout(format!(
                    "{}: property references unknown index array {}",
                    self.name, p.uf.name
                )));
            }
        }
        if !self.fields.iter().any(|f| f.name == self.value_array && f.role == FieldRole::ValueArray)
        {
            return Err(SpfError::Layout(format!(
                "{}: value expression must address a declared value array",
                self.name
            )));
        }
        let mut vars = Vec::new();
        self.value_expr.collect_vars(&mut vars);
        for v in vars {
            let ok = self.physical.iter().any(|p| p.name == v) || scalars.contains(v.as_str());
            if !ok {
                return Err(SpfError::Layout(format!(
                    "{}: value expression may reference only physical variables and scalars, found {}",
                    self.name, v
                )));
            }
        }
        Ok(())
    }

    /// The canonical application of `uf` inside the relation; its argument
    /// is what the `a` placeholder of a property stands for.
    pub fn canonical_app(&self, uf: &str) -> Option<UfApp> {
        for conj in &self.relation.disjuncts {
            for app in conj.collect_apps() {
                if app.symbol.name == uf {
                    return Some(app);
                }
            }
        }
        None
    }

    pub fn properties_of(&self, uf: &str) -> Vec<&IndexArrayProperty> {
        self.properties.iter().filter(|p| p.uf.name == uf).collect()
    }

    /// True when every physical variable is pinned to a logical coordinate
    /// by a unit equality and no index arrays participate: such layouts
    /// contribute bounds only and their position variables never appear in
    /// generated loops.
    pub fn is_direct(&self) -> bool {
        if self.fields.iter().any(|f| f.role == FieldRole::IndexArray) {
            return false;
        }
        let conj = match self.relation.sole_conjunct() {
            Ok(c) => c,
            Err(_) => return false,
        };
        self.physical.iter().all(|p| {
            conj.constraints.iter().any(|c| {
                c.rel == crate::presburger::Rel::Eq
                    && c.expr.coef_of(p).abs() == 1
                    && c.expr.terms.len() == 2
            })
        })
    }
}

impl fmt::Display for LayoutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_layout(self))
    }
}

fn prop_substitute(atom: &PropAtom, inst1: &PropSubst, inst2: &PropSubst, uf: &UfSymbol) -> Result<AffineExpr, SpfError> {
    // f / f' become applications of the UF to the instance arguments.
    let f1 = AffineExpr::uf(UfApp::new(uf.clone(), vec![inst1.arg.clone()]));
    let f2 = AffineExpr::uf(UfApp::new(uf.clone(), vec![inst2.arg.clone()]));
    let unbound: std::cell::RefCell<Option<String>> = std::cell::RefCell::new(None);
    let result = atom.expr.substitute(&|v: &VarId| {
        let name = v.name.as_str();
        let hit = match name {
            "a" => Some(inst1.arg.clone()),
            "a'" => Some(inst2.arg.clone()),
            "f" => Some(f1.clone()),
            "f'" => Some(f2.clone()),
            _ => {
                if let Some(stripped) = name.strip_suffix('\'') {
                    inst2.lookup(stripped).cloned()
                } else {
                    inst1.lookup(name).cloned()
                }
            }
        };
        if hit.is_none() && v.kind != VarKind::Parameter {
            *unbound.borrow_mut() = Some(name.to_string());
        }
        hit
    });
    if let Some(name) = unbound.into_inner() {
        return Err(SpfError::Layout(format!(
            "unbound placeholder {} while instantiating a property of {}",
            name, uf.name
        )));
    }
    Ok(result)
}

/// Ground the guard -> conclusion implication over two instances, in clausal
/// form, emitted in both (inst1, inst2) and (inst2, inst1) orientations.
pub fn instantiate_property(
    prop: &IndexArrayProperty,
    inst1: &PropSubst,
    inst2: &PropSubst,
) -> Result<Vec<Clause>, SpfError> {
    let mut clauses = Vec::new();
    for (a, b) in [(inst1, inst2), (inst2, inst1)] {
        // ¬guard literals shared by every conclusion clause.
        let mut neg_guard: Vec<Constraint> = Vec::new();
        for g in &prop.guard {
            let e = prop_substitute(g, a, b, &prop.uf)?;
            match g.rel {
                PropRel::Ge => neg_guard.push(Constraint::ge(e.scale(-1).add_const(-1))),
                PropRel::Eq => {
                    neg_guard.push(Constraint::ge(e.add_const(-1)));
                    neg_guard.push(Constraint::ge(e.scale(-1).add_const(-1)));
                }
                PropRel::Ne => neg_guard.push(Constraint::eq(e)),
            }
        }
        for c in &prop.conclusion {
            let e = prop_substitute(c, a, b, &prop.uf)?;
            let mut lits = neg_guard.clone();
            match c.rel {
                PropRel::Ge => lits.push(Constraint::ge(e)),
                PropRel::Eq => lits.push(Constraint::eq(e)),
                PropRel::Ne => {
                    lits.push(Constraint::ge(e.add_const(-1)));
                    lits.push(Constraint::ge(e.scale(-1).add_const(-1)));
                }
            }
            clauses.push(Clause { lits });
        }
    }
    Ok(clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{solve, SmtQuery, SolveResult, SolverConfig};

    fn subst(var: (&str, &str), arg: &str) -> PropSubst {
        PropSubst {
            vars: vec![(var.0.to_string(), AffineExpr::var(VarId::layout(var.1)))],
            arg: AffineExpr::var(VarId::layout(arg)),
        }
    }

    #[test]
    fn csr_periodic_monotonicity_instantiates_both_ways() {
        let l = builtin("CSR", &[]).unwrap();
        let prop = &l.properties_of("colIdx")[0];
        let i1 = subst(("p_i", "p_i"), "p_j");
        let i2 = subst(("p_i", "p_i'"), "p_j'");
        let clauses = instantiate_property(prop, &i1, &i2).unwrap();
        // One conclusion per orientation.
        assert_eq!(clauses.len(), 2);
        // Each clause: ¬(p_i = p_i') (2 lits) ∨ ¬(a < a') (1 lit) ∨ f < f'.
        assert_eq!(clauses[0].lits.len(), 4);
    }

    #[test]
    fn identity_instantiation_is_vacuous() {
        let l = builtin("SV", &[]).unwrap();
        let prop = &l.properties_of("idx")[0];
        let i1 = PropSubst { vars: vec![], arg: AffineExpr::var(VarId::layout("pA")) };
        let clauses = instantiate_property(prop, &i1, &i1).unwrap();
        // a < a' is unsatisfiable under a = a', so the clauses are vacuously
        // true: conjoined with nothing else they stay satisfiable.
        let q = SmtQuery { clauses };
        assert_eq!(solve(&q, &SolverConfig::default()).unwrap(), SolveResult::Sat);
    }

    #[test]
    fn validate_catches_undeclared_array() {
        let mut l = builtin("SV", &[]).unwrap();
        l.fields.retain(|f| f.name != "idx");
        assert!(l.validate().is_err());
    }
}
