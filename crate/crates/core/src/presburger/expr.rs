//! Affine expressions over integer variables extended with uninterpreted
//! function applications. These are the terms of every set, relation and
//! solver query in the crate.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// What role a variable plays inside a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// Loop index of the computation (i, j, k).
    Computation,
    /// Position index inside a sparse layout (p_i, pA).
    Layout,
    /// Synthesized index carrying part of a layout index's information.
    Reduced,
    /// Symbolic constant (N, A.len, numRows).
    Parameter,
    /// Existentially quantified local.
    Quantified,
}

/// A named integer variable. Names are unique within one formula's scope.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub name: String,
    pub kind: VarKind,
}

impl VarId {
    pub fn new(name: impl Into<String>, kind: VarKind) -> Self {
        VarId { name: name.into(), kind }
    }
    pub fn computation(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Computation)
    }
    pub fn layout(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Layout)
    }
    pub fn parameter(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Parameter)
    }
    pub fn quantified(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Quantified)
    }
    pub fn reduced(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Reduced)
    }

    /// The primed copy used when a formula speaks about two iteration
    /// instances at once.
    pub fn primed(&self) -> VarId {
        VarId { name: format!("{}'", self.name), kind: self.kind }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// An uninterpreted function symbol standing in for an index array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UfSymbol {
    pub name: String,
    pub arity: usize,
}

impl UfSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        UfSymbol { name: name.into(), arity }
    }
}

impl fmt::Display for UfSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// A ground application of an uninterpreted function. Arguments are affine
/// expressions and may themselves contain applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UfApp {
    pub symbol: UfSymbol,
    pub args: Vec<AffineExpr>,
}

impl UfApp {
    pub fn new(symbol: UfSymbol, args: Vec<AffineExpr>) -> Self {
        debug_assert_eq!(symbol.arity, args.len());
        UfApp { symbol, args }
    }
}

impl fmt::Display for UfApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.symbol.name)?;
        for (n, a) in self.args.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, ")")
    }
}

/// The thing a coefficient multiplies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Const,
    Var(VarId),
    Uf(UfApp),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineTerm {
    pub coef: i64,
    pub atom: Atom,
}

/// A normalized sum of terms: at most one constant term, no repeated atom,
/// no zero coefficients, terms sorted for structural comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    pub terms: Vec<AffineTerm>,
}

impl PartialOrd for AffineExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AffineExpr {
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |e: &AffineExpr| {
            e.terms
                .iter()
                .map(|t| (t.atom.clone(), t.coef))
                .collect::<Vec<_>>()
        };
        key(self).cmp(&key(other))
    }
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr { terms: vec![] }
    }

    pub fn constant(c: i64) -> Self {
        AffineExpr { terms: vec![AffineTerm { coef: c, atom: Atom::Const }] }.normalize()
    }

    pub fn var(v: VarId) -> Self {
        AffineExpr { terms: vec![AffineTerm { coef: 1, atom: Atom::Var(v) }] }
    }

    pub fn uf(app: UfApp) -> Self {
        AffineExpr { terms: vec![AffineTerm { coef: 1, atom: Atom::Uf(app) }] }
    }

    pub fn from_terms(terms: Vec<AffineTerm>) -> Self {
        AffineExpr { terms }.normalize()
    }

    /// Merge terms with structurally identical atoms, drop zeros, sort.
    /// Arguments of applications are normalized recursively.
    pub fn normalize(&self) -> AffineExpr {
        let mut flat: Vec<AffineTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let atom = match &t.atom {
                Atom::Uf(app) => Atom::Uf(UfApp {
                    symbol: app.symbol.clone(),
                    args: app.args.iter().map(|a| a.normalize()).collect(),
                }),
                other => other.clone(),
            };
            flat.push(AffineTerm { coef: t.coef, atom });
        }
        flat.sort_by(|a, b| a.atom.cmp(&b.atom));
        let mut out: Vec<AffineTerm> = Vec::new();
        for t in flat {
            match out.last_mut() {
                Some(last) if last.atom == t.atom => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0);
        AffineExpr { terms: out }
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        AffineExpr { terms }.normalize()
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return AffineExpr::zero();
        }
        AffineExpr {
            terms: self
                .terms
                .iter()
                .map(|t| AffineTerm { coef: t.coef * k, atom: t.atom.clone() })
                .collect(),
        }
        .normalize()
    }

    pub fn add_const(&self, c: i64) -> AffineExpr {
        self.add(&AffineExpr::constant(c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant term, zero if absent.
    pub fn const_part(&self) -> i64 {
        self.terms
            .iter()
            .find(|t| t.atom == Atom::Const)
            .map(|t| t.coef)
            .unwrap_or(0)
    }

    /// Some(c) when the expression is the lone constant c (or empty = 0).
    pub fn as_const(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 if self.terms[0].atom == Atom::Const => Some(self.terms[0].coef),
            _ => None,
        }
    }

    /// Coefficient of variable `v` in the linear part (not inside UF args).
    pub fn coef_of(&self, v: &VarId) -> i64 {
        self.terms
            .iter()
            .find(|t| matches!(&t.atom, Atom::Var(w) if w == v))
            .map(|t| t.coef)
            .unwrap_or(0)
    }

    /// Expression with the linear term of `v` removed.
    pub fn without_var(&self, v: &VarId) -> AffineExpr {
        AffineExpr {
            terms: self
                .terms
                .iter()
                .filter(|t| !matches!(&t.atom, Atom::Var(w) if w == v))
                .cloned()
                .collect(),
        }
    }

    /// True when `v` occurs anywhere, including inside application arguments.
    pub fn mentions_var(&self, v: &VarId) -> bool {
        self.terms.iter().any(|t| match &t.atom {
            Atom::Var(w) => w == v,
            Atom::Uf(app) => app.args.iter().any(|a| a.mentions_var(v)),
            Atom::Const => false,
        })
    }

    /// All variables, including those nested in application arguments.
    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        for t in &self.terms {
            match &t.atom {
                Atom::Var(v) => {
                    out.insert(v.clone());
                }
                Atom::Uf(app) => {
                    for a in &app.args {
                        a.collect_vars(out);
                    }
                }
                Atom::Const => {}
            }
        }
    }

    /// All applications, outermost first.
    pub fn collect_apps(&self, out: &mut Vec<UfApp>) {
        for t in &self.terms {
            if let Atom::Uf(app) = &t.atom {
                out.push(app.clone());
                for a in &app.args {
                    a.collect_apps(out);
                }
            }
        }
    }

    /// Substitute each variable by the expression `subst` yields for it.
    pub fn substitute(&self, subst: &dyn Fn(&VarId) -> Option<AffineExpr>) -> AffineExpr {
        let mut acc = AffineExpr::zero();
        for t in &self.terms {
            let piece = match &t.atom {
                Atom::Const => AffineExpr::constant(t.coef),
                Atom::Var(v) => match subst(v) {
                    Some(e) => e.scale(t.coef),
                    None => AffineExpr {
                        terms: vec![AffineTerm { coef: t.coef, atom: Atom::Var(v.clone()) }],
                    },
                },
                Atom::Uf(app) => {
                    let args = app.args.iter().map(|a| a.substitute(subst)).collect();
                    AffineExpr {
                        terms: vec![AffineTerm {
                            coef: t.coef,
                            atom: Atom::Uf(UfApp { symbol: app.symbol.clone(), args }),
                        }],
                    }
                }
            };
            acc = acc.add(&piece);
        }
        acc
    }

    /// Rename variables wholesale (used for priming and tensor binding).
    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> AffineExpr {
        self.substitute(&|v| Some(AffineExpr::var(f(v))))
    }

    /// Rename variables and function symbols together.
    pub fn rename_atoms(
        &self,
        var_f: &dyn Fn(&VarId) -> VarId,
        sym_f: &dyn Fn(&UfSymbol) -> UfSymbol,
    ) -> AffineExpr {
        let terms = self
            .terms
            .iter()
            .map(|t| AffineTerm {
                coef: t.coef,
                atom: match &t.atom {
                    Atom::Const => Atom::Const,
                    Atom::Var(v) => Atom::Var(var_f(v)),
                    Atom::Uf(app) => Atom::Uf(UfApp {
                        symbol: sym_f(&app.symbol),
                        args: app.args.iter().map(|a| a.rename_atoms(var_f, sym_f)).collect(),
                    }),
                },
            })
            .collect();
        AffineExpr { terms }.normalize()
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            let (sign, mag) = if t.coef < 0 { ("-", -t.coef) } else { ("+", t.coef) };
            if n == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            match &t.atom {
                Atom::Const => write!(f, "{}", mag)?,
                Atom::Var(v) => {
                    if mag != 1 {
                        write!(f, "{}*", mag)?;
                    }
                    write!(f, "{}", v)?;
                }
                Atom::Uf(app) => {
                    if mag != 1 {
                        write!(f, "{}*", mag)?;
                    }
                    write!(f, "{}", app)?;
                }
            }
        }
        Ok(())
    }
}

/// Comparison of a normalized expression against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    /// expr = 0
    Eq,
    /// expr >= 0
    Ge,
}

/// A single affine constraint in canonical `expr {=,>=} 0` form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub expr: AffineExpr,
    pub rel: Rel,
}

impl Constraint {
    pub fn eq(expr: AffineExpr) -> Self {
        Constraint { expr: expr.normalize(), rel: Rel::Eq }
    }
    pub fn ge(expr: AffineExpr) -> Self {
        Constraint { expr: expr.normalize(), rel: Rel::Ge }
    }
    /// a >= b
    pub fn ge_pair(a: AffineExpr, b: AffineExpr) -> Self {
        Self::ge(a.sub(&b))
    }
    /// a = b
    pub fn eq_pair(a: AffineExpr, b: AffineExpr) -> Self {
        Self::eq(a.sub(&b))
    }
    /// a < b, integer-tightened to b - a - 1 >= 0.
    pub fn lt_pair(a: AffineExpr, b: AffineExpr) -> Self {
        Self::ge(b.sub(&a).add_const(-1))
    }
    /// a <= b
    pub fn le_pair(a: AffineExpr, b: AffineExpr) -> Self {
        Self::ge(b.sub(&a))
    }

    pub fn rename(&self, f: &dyn Fn(&VarId) -> VarId) -> Constraint {
        Constraint { expr: self.expr.rename(f), rel: self.rel }
    }

    pub fn substitute(&self, subst: &dyn Fn(&VarId) -> Option<AffineExpr>) -> Constraint {
        Constraint { expr: self.expr.substitute(subst), rel: self.rel }
    }

    /// Constant-only constraints evaluate immediately.
    pub fn as_trivial(&self) -> Option<bool> {
        self.expr.as_const().map(|c| match self.rel {
            Rel::Eq => c == 0,
            Rel::Ge => c >= 0,
        })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Split into nonnegative and negative sides for readability.
        let mut lhs = AffineExpr::zero();
        let mut rhs = AffineExpr::zero();
        for t in &self.expr.terms {
            if t.coef > 0 {
                lhs.terms.push(t.clone());
            } else {
                rhs.terms.push(AffineTerm { coef: -t.coef, atom: t.atom.clone() });
            }
        }
        let lhs = lhs.normalize();
        let rhs = rhs.normalize();
        let op = match self.rel {
            Rel::Eq => "=",
            Rel::Ge => ">=",
        };
        write!(f, "{} {} {}", lhs, op, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> VarId {
        VarId::computation(n)
    }

    #[test]
    fn normalize_merges_and_sorts() {
        let e = AffineExpr {
            terms: vec![
                AffineTerm { coef: 2, atom: Atom::Var(v("i")) },
                AffineTerm { coef: 3, atom: Atom::Const },
                AffineTerm { coef: -2, atom: Atom::Var(v("i")) },
                AffineTerm { coef: 1, atom: Atom::Var(v("j")) },
                AffineTerm { coef: -1, atom: Atom::Const },
            ],
        };
        let n = e.normalize();
        assert_eq!(n.terms.len(), 2);
        assert_eq!(n.const_part(), 2);
        assert_eq!(n.coef_of(&v("j")), 1);
        assert_eq!(n.coef_of(&v("i")), 0);
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = UfSymbol::new("idx", 1);
        let inner = AffineExpr::var(v("p")).add_const(1).add(&AffineExpr::var(v("p")).scale(-1));
        let e = AffineExpr::uf(UfApp::new(f, vec![inner])).scale(3);
        assert_eq!(e.normalize(), e.normalize().normalize());
    }

    #[test]
    fn uf_atoms_compare_structurally() {
        let f = UfSymbol::new("idx", 1);
        let a1 = UfApp::new(f.clone(), vec![AffineExpr::var(v("p")).add_const(1)]);
        let a2 = UfApp::new(
            f,
            vec![AffineExpr::constant(1).add(&AffineExpr::var(v("p")))],
        );
        let e = AffineExpr::uf(a1).sub(&AffineExpr::uf(a2)).normalize();
        assert!(e.is_zero());
    }

    #[test]
    fn substitute_reaches_into_uf_args() {
        let f = UfSymbol::new("idx", 1);
        let e = AffineExpr::uf(UfApp::new(f, vec![AffineExpr::var(v("i"))]));
        let s = e.substitute(&|w| {
            (w.name == "i").then(|| AffineExpr::var(v("ti")))
        });
        assert!(s.mentions_var(&v("ti")));
        assert!(!s.mentions_var(&v("i")));
    }
}
