//! General integer expressions: value-array addressing (possibly nonlinear),
//! emitted loop bounds with min/max and rounded division, and guard
//! conditions in the generated AST.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::SpfError;
use crate::presburger::{AffineExpr, Atom};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IExpr {
    Int(i64),
    Var(String),
    Add(Box<IExpr>, Box<IExpr>),
    Sub(Box<IExpr>, Box<IExpr>),
    Mul(Box<IExpr>, Box<IExpr>),
    /// Truncating division as in C; used by value addressing only.
    Div(Box<IExpr>, Box<IExpr>),
    /// ceil(e / k) with k > 0, exact over negatives.
    CeilDiv(Box<IExpr>, i64),
    Min(Vec<IExpr>),
    Max(Vec<IExpr>),
    /// Index-array lookup `name[arg]`.
    App(String, Vec<IExpr>),
}

impl IExpr {
    pub fn var(n: impl Into<String>) -> IExpr {
        IExpr::Var(n.into())
    }
    pub fn add(self, o: IExpr) -> IExpr {
        match (&self, &o) {
            (IExpr::Int(0), _) => return o,
            (_, IExpr::Int(0)) => return self,
            (IExpr::Int(a), IExpr::Int(b)) => return IExpr::Int(a + b),
            _ => {}
        }
        IExpr::Add(Box::new(self), Box::new(o))
    }
    pub fn sub(self, o: IExpr) -> IExpr {
        if o == IExpr::Int(0) {
            return self;
        }
        if let (IExpr::Int(a), IExpr::Int(b)) = (&self, &o) {
            return IExpr::Int(a - b);
        }
        IExpr::Sub(Box::new(self), Box::new(o))
    }
    pub fn mul(self, o: IExpr) -> IExpr {
        match (&self, &o) {
            (IExpr::Int(1), _) => return o,
            (_, IExpr::Int(1)) => return self,
            (IExpr::Int(a), IExpr::Int(b)) => return IExpr::Int(a * b),
            _ => {}
        }
        IExpr::Mul(Box::new(self), Box::new(o))
    }

    pub fn min_of(mut es: Vec<IExpr>) -> IExpr {
        if es.len() == 1 {
            es.pop().unwrap()
        } else {
            IExpr::Min(es)
        }
    }
    pub fn max_of(mut es: Vec<IExpr>) -> IExpr {
        if es.len() == 1 {
            es.pop().unwrap()
        } else {
            IExpr::Max(es)
        }
    }

    pub fn eval(
        &self,
        env: &BTreeMap<String, i64>,
        arrays: &BTreeMap<String, Vec<i64>>,
    ) -> Result<i64, SpfError> {
        Ok(match self {
            IExpr::Int(c) => *c,
            IExpr::Var(n) => *env
                .get(n)
                .ok_or_else(|| SpfError::Interp(format!("unbound variable {}", n)))?,
            IExpr::Add(a, b) => a.eval(env, arrays)? + b.eval(env, arrays)?,
            IExpr::Sub(a, b) => a.eval(env, arrays)? - b.eval(env, arrays)?,
            IExpr::Mul(a, b) => a.eval(env, arrays)? * b.eval(env, arrays)?,
            IExpr::Div(a, b) => {
                let d = b.eval(env, arrays)?;
                if d == 0 {
                    return Err(SpfError::Interp("division by zero".into()));
                }
                a.eval(env, arrays)? / d
            }
            IExpr::CeilDiv(a, k) => {
                let x = a.eval(env, arrays)?;
                ceil_div(x, *k)
            }
            IExpr::Min(es) => {
                let mut m = i64::MAX;
                for e in es {
                    m = m.min(e.eval(env, arrays)?);
                }
                m
            }
            IExpr::Max(es) => {
                let mut m = i64::MIN;
                for e in es {
                    m = m.max(e.eval(env, arrays)?);
                }
                m
            }
            IExpr::App(name, args) => {
                if args.len() != 1 {
                    return Err(SpfError::Interp(format!(
                        "index array {} must take one argument",
                        name
                    )));
                }
                let idx = args[0].eval(env, arrays)?;
                let table = arrays
                    .get(name)
                    .ok_or_else(|| SpfError::Interp(format!("missing index array {}", name)))?;
                if idx < 0 || idx as usize >= table.len() {
                    return Err(SpfError::Interp(format!(
                        "index array {}[{}] out of bounds (len {})",
                        name,
                        idx,
                        table.len()
                    )));
                }
                table[idx as usize]
            }
        })
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            IExpr::Int(_) => {}
            IExpr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            IExpr::Add(a, b) | IExpr::Sub(a, b) | IExpr::Mul(a, b) | IExpr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            IExpr::CeilDiv(a, _) => a.collect_vars(out),
            IExpr::Min(es) | IExpr::Max(es) | IExpr::App(_, es) => {
                for e in es {
                    e.collect_vars(out);
                }
            }
        }
    }

    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> IExpr {
        match self {
            IExpr::Int(c) => IExpr::Int(*c),
            IExpr::Var(n) => IExpr::Var(map.get(n).cloned().unwrap_or_else(|| n.clone())),
            IExpr::Add(a, b) => {
                IExpr::Add(Box::new(a.rename_vars(map)), Box::new(b.rename_vars(map)))
            }
            IExpr::Sub(a, b) => {
                IExpr::Sub(Box::new(a.rename_vars(map)), Box::new(b.rename_vars(map)))
            }
            IExpr::Mul(a, b) => {
                IExpr::Mul(Box::new(a.rename_vars(map)), Box::new(b.rename_vars(map)))
            }
            IExpr::Div(a, b) => {
                IExpr::Div(Box::new(a.rename_vars(map)), Box::new(b.rename_vars(map)))
            }
            IExpr::CeilDiv(a, k) => IExpr::CeilDiv(Box::new(a.rename_vars(map)), *k),
            IExpr::Min(es) => IExpr::Min(es.iter().map(|e| e.rename_vars(map)).collect()),
            IExpr::Max(es) => IExpr::Max(es.iter().map(|e| e.rename_vars(map)).collect()),
            IExpr::App(n, es) => IExpr::App(
                map.get(n).cloned().unwrap_or_else(|| n.clone()),
                es.iter().map(|e| e.rename_vars(map)).collect(),
            ),
        }
    }
}

pub fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && a > 0 {
        q + 1
    } else {
        q
    }
}

pub fn floor_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && a < 0 {
        q - 1
    } else {
        q
    }
}

/// Lower an affine expression; UF applications become array lookups.
pub fn from_affine(e: &AffineExpr) -> IExpr {
    let mut acc = IExpr::Int(0);
    for t in &e.terms {
        let base = match &t.atom {
            Atom::Const => IExpr::Int(1),
            Atom::Var(v) => IExpr::var(&v.name),
            Atom::Uf(app) => {
                IExpr::App(app.symbol.name.clone(), app.args.iter().map(from_affine).collect())
            }
        };
        let piece = if t.coef == 1 { base } else { IExpr::Int(t.coef).mul(base) };
        acc = acc.add(piece);
    }
    acc
}

impl fmt::Display for IExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IExpr::Int(c) => write!(f, "{}", c),
            IExpr::Var(n) => write!(f, "{}", n),
            IExpr::Add(a, b) => write!(f, "{} + {}", a, b),
            IExpr::Sub(a, b) => write!(f, "{} - ({})", a, b),
            IExpr::Mul(a, b) => write!(f, "({}) * ({})", a, b),
            IExpr::Div(a, b) => write!(f, "({}) / ({})", a, b),
            IExpr::CeilDiv(a, k) => write!(f, "ceil(({}) / {})", a, k),
            IExpr::Min(es) => {
                write!(f, "min(")?;
                for (n, e) in es.iter().enumerate() {
                    if n > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, ")")
            }
            IExpr::Max(es) => {
                write!(f, "max(")?;
                for (n, e) in es.iter().enumerate() {
                    if n > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, ")")
            }
            IExpr::App(n, es) => {
                write!(f, "{}[", n)?;
                for (k, e) in es.iter().enumerate() {
                    if k > 0 {
                        write!(f, "][")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, "]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_division() {
        assert_eq!(ceil_div(7, 8), 1);
        assert_eq!(ceil_div(-7, 8), 0);
        assert_eq!(ceil_div(8, 8), 1);
        assert_eq!(floor_div(7, 8), 0);
        assert_eq!(floor_div(-1, 8), -1);
    }

    #[test]
    fn triangular_addressing() {
        // p_i*(p_i+1)/2 + p_j at (3, 2) = 8.
        let e = IExpr::var("p_i")
            .mul(IExpr::var("p_i").add(IExpr::Int(1)))
            .div2()
            .add(IExpr::var("p_j"));
        let mut env = BTreeMap::new();
        env.insert("p_i".to_string(), 3);
        env.insert("p_j".to_string(), 2);
        assert_eq!(e.eval(&env, &BTreeMap::new()).unwrap(), 8);
    }
}

#[cfg(test)]
impl IExpr {
    fn div2(self) -> IExpr {
        IExpr::Div(Box::new(self), Box::new(IExpr::Int(2)))
    }
}
