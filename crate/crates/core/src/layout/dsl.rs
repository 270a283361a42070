//! Block-structured text format for layout specifications.
//!
//! ```text
//! layout CSR {
//!   physical p_i, p_j;
//!   logical g_i, g_j;
//!   arrays rowPtr: index, colIdx: index, data: value;
//!   scalar numRows;
//!   relation { 0 <= p_i < numRows and rowPtr(p_i) <= p_j < rowPtr(p_i+1)
//!              and g_i = p_i and g_j = colIdx(p_j) };
//!   value data[p_j];
//!   property colIdx: (p_i = p_i' and a < a') -> (f < f');
//! }
//! ```
//!
//! One file may hold many layouts; `#` starts a comment.

use crate::error::SpfError;
use crate::iexpr::IExpr;
use crate::presburger::text::{parse_constraint_chain, parse_expr, Lexer, NameEnv, Tok};
use crate::presburger::{PresburgerRelation, UfSymbol, VarId, VarKind};

use super::{
    FieldDecl, FieldRole, IndexArrayProperty, LayoutSpec, PropAtom, PropFlavor, PropRel,
};

/// Parse every layout in the source text.
pub fn parse_layouts(src: &str) -> Result<Vec<LayoutSpec>, SpfError> {
    let mut lex = Lexer::new(src)?;
    let mut out = Vec::new();
    while !lex.at_end() {
        out.push(parse_one(&mut lex)?);
    }
    if out.is_empty() {
        return Err(SpfError::Parse("no layout found".into()));
    }
    Ok(out)
}

/// Parse a source expected to hold exactly one layout.
pub fn parse_layout(src: &str) -> Result<LayoutSpec, SpfError> {
    let all = parse_layouts(src)?;
    if all.len() != 1 {
        return Err(SpfError::Parse(format!("expected one layout, found {}", all.len())));
    }
    Ok(all.into_iter().next().unwrap())
}

fn parse_one(lex: &mut Lexer) -> Result<LayoutSpec, SpfError> {
    if !lex.eat_keyword("layout") {
        return Err(SpfError::Parse(format!("expected 'layout', found {:?}", lex.peek())));
    }
    let name = lex.expect_name()?;
    lex.expect_punct("{")?;

    let mut physical: Vec<VarId> = Vec::new();
    let mut logical: Vec<VarId> = Vec::new();
    let mut fields: Vec<FieldDecl> = Vec::new();
    let mut relation: Option<PresburgerRelation> = None;
    let mut value: Option<(String, IExpr)> = None;
    let mut properties: Vec<IndexArrayProperty> = Vec::new();

    loop {
        if lex.eat_punct("}") {
            break;
        }
        if lex.eat_keyword("physical") {
            parse_name_list(lex, |n| physical.push(VarId::layout(n)))?;
        } else if lex.eat_keyword("logical") {
            parse_name_list(lex, |n| logical.push(VarId::computation(n)))?;
        } else if lex.eat_keyword("arrays") {
            loop {
                let fname = lex.expect_name()?;
                lex.expect_punct(":")?;
                let kind = lex.expect_name()?;
                let role = match kind.as_str() {
                    "index" => FieldRole::IndexArray,
                    "value" => FieldRole::ValueArray,
                    other => {
                        return Err(SpfError::Parse(format!(
                            "array element type must be index or value, found {}",
                            other
                        )))
                    }
                };
                let mut dims = Vec::new();
                while lex.eat_punct("[") {
                    match lex.next_tok() {
                        Some(Tok::Int(n)) => dims.push(n),
                        other => {
                            return Err(SpfError::Parse(format!(
                                "array dimensions must be integer literals, found {:?}",
                                other
                            )))
                        }
                    }
                    lex.expect_punct("]")?;
                }
                fields.push(FieldDecl { name: fname, role, dims });
                if lex.eat_punct(";") {
                    break;
                }
                lex.expect_punct(",")?;
            }
        } else if lex.eat_keyword("scalar") {
            parse_name_list(lex, |n| {
                fields.push(FieldDecl { name: n, role: FieldRole::Scalar, dims: vec![] })
            })?;
        } else if lex.eat_keyword("relation") {
            lex.expect_punct("{")?;
            let mut vars = physical.clone();
            vars.extend(logical.iter().cloned());
            let env = NameEnv { vars, fallback: &|_| VarKind::Parameter };
            let mut constraints = Vec::new();
            loop {
                constraints.extend(parse_constraint_chain(lex, &env)?);
                if !lex.eat_keyword("and") {
                    break;
                }
            }
            lex.expect_punct("}")?;
            lex.expect_punct(";")?;
            relation = Some(PresburgerRelation::new(
                physical.clone(),
                logical.clone(),
                constraints,
            ));
        } else if lex.eat_keyword("value") {
            let array = lex.expect_name()?;
            let decl = fields.iter().find(|f| f.name == array).cloned();
            let mut indices: Vec<IExpr> = Vec::new();
            while lex.eat_punct("[") {
                indices.push(parse_iexpr(lex, &physical, &fields)?);
                lex.expect_punct("]")?;
            }
            lex.expect_punct(";")?;
            if indices.is_empty() {
                return Err(SpfError::Parse("value clause needs at least one index".into()));
            }
            // Flatten multi-dimensional addressing row-major with the
            // trailing dims of the declaration.
            let expr = if indices.len() == 1 {
                indices.pop().unwrap()
            } else {
                let dims = decl
                    .as_ref()
                    .map(|d| d.dims.clone())
                    .filter(|d| d.len() + 1 == indices.len())
                    .ok_or_else(|| {
                        SpfError::Parse(format!(
                            "value array {} needs {} declared trailing dimensions",
                            array,
                            indices.len() - 1
                        ))
                    })?;
                let mut it = indices.into_iter();
                let mut acc = it.next().unwrap();
                for (dim, idx) in dims.into_iter().zip(it) {
                    acc = acc.mul(IExpr::Int(dim)).add(idx);
                }
                acc
            };
            value = Some((array, expr));
        } else if lex.eat_keyword("property") {
            let uf_name = lex.expect_name()?;
            lex.expect_punct(":")?;
            let (guard, conclusion) = parse_property_body(lex, &physical)?;
            lex.expect_punct(";")?;
            let flavor = classify_property(&guard, &conclusion, &uf_name);
            properties.push(IndexArrayProperty {
                uf: UfSymbol::new(uf_name, 1),
                guard,
                conclusion,
                flavor,
            });
        } else {
            return Err(SpfError::Parse(format!(
                "unexpected token in layout body: {:?}",
                lex.peek()
            )));
        }
    }

    let relation = relation
        .ok_or_else(|| SpfError::Parse(format!("layout {} has no relation", name)))?;
    let (value_array, value_expr) =
        value.ok_or_else(|| SpfError::Parse(format!("layout {} has no value clause", name)))?;
    let spec = LayoutSpec {
        name,
        physical,
        logical,
        relation,
        value_array,
        value_expr,
        fields,
        properties,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_name_list(
    lex: &mut Lexer,
    mut push: impl FnMut(String),
) -> Result<(), SpfError> {
    loop {
        let n = lex.expect_name()?;
        push(n);
        if lex.eat_punct(";") {
            return Ok(());
        }
        lex.expect_punct(",")?;
    }
}

/// Value-index expressions: +- over */ with parentheses, variables, scalars
/// and integer literals. Division is integer division.
fn parse_iexpr(
    lex: &mut Lexer,
    physical: &[VarId],
    fields: &[FieldDecl],
) -> Result<IExpr, SpfError> {
    parse_iexpr_sum(lex, physical, fields)
}

fn parse_iexpr_sum(
    lex: &mut Lexer,
    physical: &[VarId],
    fields: &[FieldDecl],
) -> Result<IExpr, SpfError> {
    let mut acc = parse_iexpr_prod(lex, physical, fields)?;
    loop {
        if lex.eat_punct("+") {
            let r = parse_iexpr_prod(lex, physical, fields)?;
            acc = acc.add(r);
        } else if lex.eat_punct("-") {
            let r = parse_iexpr_prod(lex, physical, fields)?;
            acc = acc.sub(r);
        } else {
            return Ok(acc);
        }
    }
}

fn parse_iexpr_prod(
    lex: &mut Lexer,
    physical: &[VarId],
    fields: &[FieldDecl],
) -> Result<IExpr, SpfError> {
    let mut acc = parse_iexpr_atom(lex, physical, fields)?;
    loop {
        if lex.eat_punct("*") {
            let r = parse_iexpr_atom(lex, physical, fields)?;
            acc = acc.mul(r);
        } else if lex.eat_punct("/") {
            let r = parse_iexpr_atom(lex, physical, fields)?;
            acc = IExpr::Div(Box::new(acc), Box::new(r));
        } else {
            return Ok(acc);
        }
    }
}

fn parse_iexpr_atom(
    lex: &mut Lexer,
    physical: &[VarId],
    fields: &[FieldDecl],
) -> Result<IExpr, SpfError> {
    if lex.eat_punct("(") {
        let e = parse_iexpr_sum(lex, physical, fields)?;
        lex.expect_punct(")")?;
        return Ok(e);
    }
    if lex.eat_punct("-") {
        let e = parse_iexpr_atom(lex, physical, fields)?;
        return Ok(IExpr::Int(0).sub(e));
    }
    match lex.next_tok() {
        Some(Tok::Int(n)) => Ok(IExpr::Int(n)),
        Some(Tok::Name(n)) => {
            let known = physical.iter().any(|p| p.name == n)
                || fields.iter().any(|f| f.name == n && f.role == FieldRole::Scalar);
            if !known {
                return Err(SpfError::Parse(format!(
                    "value expression references unknown name {}",
                    n
                )));
            }
            Ok(IExpr::Var(n))
        }
        other => Err(SpfError::Parse(format!("unexpected token in value expression: {:?}", other))),
    }
}

/// `(guard...) -> (conclusion...)` or `true -> (...)`.
fn parse_property_body(
    lex: &mut Lexer,
    physical: &[VarId],
) -> Result<(Vec<PropAtom>, Vec<PropAtom>), SpfError> {
    let guard = if lex.eat_keyword("true") {
        vec![]
    } else {
        lex.expect_punct("(")?;
        let g = parse_prop_atoms(lex, physical)?;
        lex.expect_punct(")")?;
        g
    };
    lex.expect_punct("->")?;
    lex.expect_punct("(")?;
    let conclusion = parse_prop_atoms(lex, physical)?;
    lex.expect_punct(")")?;
    Ok((guard, conclusion))
}

fn prop_env<'a>(physical: &[VarId]) -> NameEnv<'a> {
    let mut vars: Vec<VarId> = Vec::new();
    for p in physical {
        vars.push(p.clone());
        vars.push(p.primed());
    }
    for placeholder in ["a", "a'", "f", "f'"] {
        vars.push(VarId::quantified(placeholder));
    }
    NameEnv { vars, fallback: &|_| VarKind::Parameter }
}

fn parse_prop_atoms(lex: &mut Lexer, physical: &[VarId]) -> Result<Vec<PropAtom>, SpfError> {
    let env = prop_env(physical);
    let mut out = Vec::new();
    loop {
        // A chain with != support.
        let mut lhs = parse_expr(lex, &env)?;
        let mut got = false;
        loop {
            let op = match lex.peek() {
                Some(Tok::Punct(p)) if ["<", "<=", "=", "==", ">", ">=", "!="].contains(p) => *p,
                _ => break,
            };
            lex.next_tok();
            let rhs = parse_expr(lex, &env)?;
            let atom = match op {
                "<" => PropAtom::ge(rhs.sub(&lhs).add_const(-1)),
                "<=" => PropAtom::ge(rhs.sub(&lhs)),
                ">" => PropAtom::ge(lhs.sub(&rhs).add_const(-1)),
                ">=" => PropAtom::ge(lhs.sub(&rhs)),
                "=" | "==" => PropAtom::eq(lhs.sub(&rhs)),
                "!=" => PropAtom { expr: lhs.sub(&rhs).normalize(), rel: PropRel::Ne },
                _ => unreachable!(),
            };
            out.push(atom);
            lhs = rhs;
            got = true;
        }
        if !got {
            return Err(SpfError::Parse("expected a comparison in property".into()));
        }
        if !lex.eat_keyword("and") {
            return Ok(out);
        }
    }
}

fn classify_property(guard: &[PropAtom], conclusion: &[PropAtom], _uf: &str) -> PropFlavor {
    let mentions = |atoms: &[PropAtom], name: &str| {
        atoms.iter().any(|a| {
            let mut vars = std::collections::BTreeSet::new();
            a.expr.collect_vars(&mut vars);
            vars.iter().any(|v| v.name == name)
        })
    };
    let has_app = |atoms: &[PropAtom]| {
        atoms.iter().any(|a| {
            let mut apps = Vec::new();
            a.expr.collect_apps(&mut apps);
            !apps.is_empty()
        })
    };
    if guard.is_empty() {
        return PropFlavor::Range;
    }
    if guard.iter().any(|a| a.rel == PropRel::Ne) || conclusion.iter().any(|a| a.rel == PropRel::Ne)
    {
        return PropFlavor::Injectivity;
    }
    if has_app(guard) {
        return PropFlavor::CovaryMonotonicity;
    }
    let primed_layout = guard.iter().any(|a| {
        let mut vars = std::collections::BTreeSet::new();
        a.expr.collect_vars(&mut vars);
        vars.iter().any(|v| v.name.ends_with('\'') && v.name != "a'" && v.name != "f'")
    });
    if primed_layout {
        return PropFlavor::PeriodicMonotonicity;
    }
    // Strict when the conclusion uses a strict comparison (constant offset).
    let strict = conclusion
        .iter()
        .any(|a| a.rel == PropRel::Ge && a.expr.const_part() < 0 && mentions(conclusion, "f"));
    if strict {
        PropFlavor::StrictMonotonicity
    } else {
        PropFlavor::Monotonicity
    }
}

/// Render a spec back into DSL text; `parse_layout(print_layout(s)) == s`
/// holds for the registry layouts.
pub fn print_layout(spec: &LayoutSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("layout {} {{\n", spec.name));
    let names = |vs: &[VarId]| vs.iter().map(|v| v.name.clone()).collect::<Vec<_>>().join(", ");
    out.push_str(&format!("  physical {};\n", names(&spec.physical)));
    out.push_str(&format!("  logical {};\n", names(&spec.logical)));
    let arrays: Vec<String> = spec
        .fields
        .iter()
        .filter(|f| f.role != FieldRole::Scalar)
        .map(|f| {
            let dims: String = f.dims.iter().map(|d| format!("[{}]", d)).collect();
            format!(
                "{}: {}{}",
                f.name,
                if f.role == FieldRole::IndexArray { "index" } else { "value" },
                dims
            )
        })
        .collect();
    if !arrays.is_empty() {
        out.push_str(&format!("  arrays {};\n", arrays.join(", ")));
    }
    let scalars: Vec<String> = spec
        .fields
        .iter()
        .filter(|f| f.role == FieldRole::Scalar)
        .map(|f| f.name.clone())
        .collect();
    if !scalars.is_empty() {
        out.push_str(&format!("  scalar {};\n", scalars.join(", ")));
    }
    let conj = &spec.relation.disjuncts[0];
    let cons: Vec<String> = conj.constraints.iter().map(|c| c.to_string()).collect();
    out.push_str(&format!("  relation {{ {} }};\n", cons.join(" and ")));
    out.push_str(&format!("  value {}[{}];\n", spec.value_array, spec.value_expr));
    for p in &spec.properties {
        let atom = |a: &PropAtom| -> String {
            match a.rel {
                PropRel::Ne => {
                    // print e != 0 as lhs != rhs split like Display does.
                    let c = crate::presburger::Constraint::eq(a.expr.clone());
                    let s = c.to_string();
                    s.replacen(" = ", " != ", 1)
                }
                PropRel::Eq => crate::presburger::Constraint::eq(a.expr.clone()).to_string(),
                PropRel::Ge => crate::presburger::Constraint::ge(a.expr.clone()).to_string(),
            }
        };
        let guard = if p.guard.is_empty() {
            "true".to_string()
        } else {
            format!("({})", p.guard.iter().map(atom).collect::<Vec<_>>().join(" and "))
        };
        let conc = p.conclusion.iter().map(atom).collect::<Vec<_>>().join(" and ");
        out.push_str(&format!("  property {}: {} -> ({});\n", p.uf.name, guard, conc));
    }
    out.push_str("}\n");
    out
}
