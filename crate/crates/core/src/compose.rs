//! Combining layout relations with access maps into the extended iteration
//! space: all surviving layout indices plus the computation indices, with a
//! legal loop order.

use std::collections::BTreeMap;

use crate::error::SpfError;
use crate::frontend::{AccessMap, ContractionExpr};
use crate::iexpr::IExpr;
use crate::layout::{FieldRole, IndexArrayProperty, LayoutSpec, PropAtom};
use crate::presburger::{
    compose, intersect, inverse, range_keep, substitute_tuple_vars, AffineExpr, Atom, Constraint,
    PresburgerRelation, PresburgerSet, Rel, UfSymbol, VarId, VarKind,
};

/// A layout attached to one tensor of the contraction, with every local
/// name qualified by the tensor (`colIdx` -> `A.colIdx`, `p_j` -> `pA_j`).
/// Two bindings may deliberately share function symbols to express shared
/// sparsity structure.
#[derive(Debug, Clone)]
pub struct BoundLayout {
    pub tensor: String,
    pub spec: LayoutSpec,
    /// original field name -> qualified name
    pub field_names: BTreeMap<String, String>,
    /// original physical variable name -> qualified name
    pub var_names: BTreeMap<String, String>,
    /// Properties in their original placeholder form (vars unqualified),
    /// needed to instantiate them at occurrences from other bindings that
    /// share this layout's index arrays.
    pub base_properties: Vec<IndexArrayProperty>,
    /// Original physical variable names, aligned with `spec.physical`.
    pub base_physical: Vec<String>,
}

fn qualify_physical(tensor: &str, physical: &[VarId]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    if physical.len() == 1 {
        map.insert(physical[0].name.clone(), format!("p{}", tensor));
        return map;
    }
    for p in physical {
        let suffix = p
            .name
            .strip_prefix("p_")
            .or_else(|| p.name.strip_prefix('p'))
            .unwrap_or(&p.name);
        map.insert(p.name.clone(), format!("p{}_{}", tensor, suffix));
    }
    map
}

/// Attach `spec` to a tensor. `share` maps field names of this layout onto
/// already-qualified names of another binding (shared sparsity structure).
pub fn bind_shared(
    tensor: &str,
    spec: &LayoutSpec,
    share: &BTreeMap<String, String>,
) -> Result<BoundLayout, SpfError> {
    for s in share.keys() {
        if !spec.fields.iter().any(|f| &f.name == s) {
            return Err(SpfError::Compose(format!(
                "shared field {} is not declared by layout {}",
                s, spec.name
            )));
        }
    }
    let mut field_names: BTreeMap<String, String> = BTreeMap::new();
    for f in &spec.fields {
        let qualified = share
            .get(&f.name)
            .cloned()
            .unwrap_or_else(|| format!("{}.{}", tensor, f.name));
        field_names.insert(f.name.clone(), qualified);
    }
    let var_map = qualify_physical(tensor, &spec.physical);
    let rename_var = |v: &VarId| -> VarId {
        // Primed copies keep their prime after renaming.
        let (base, primed) = match v.name.strip_suffix('\'') {
            Some(b) => (b.to_string(), true),
            None => (v.name.clone(), false),
        };
        let mut name = if let Some(q) = var_map.get(&base) {
            q.clone()
        } else if v.kind == VarKind::Parameter {
            field_names.get(&base).cloned().unwrap_or(base)
        } else if spec.logical.iter().any(|g| g.name == base) {
            format!("g{}_{}", tensor, base.strip_prefix("g_").or_else(|| base.strip_prefix('g')).unwrap_or(&base))
        } else {
            base
        };
        if primed {
            name.push('\'');
        }
        VarId::new(name, v.kind)
    };
    let rename_sym = |s: &UfSymbol| -> UfSymbol {
        UfSymbol::new(
            field_names.get(&s.name).cloned().unwrap_or_else(|| s.name.clone()),
            s.arity,
        )
    };

    let relation = PresburgerRelation {
        input: spec.relation.input.iter().map(|v| rename_var(v)).collect(),
        output: spec.relation.output.iter().map(|v| rename_var(v)).collect(),
        disjuncts: spec
            .relation
            .disjuncts
            .iter()
            .map(|d| crate::presburger::Conjunct {
                constraints: d
                    .constraints
                    .iter()
                    .map(|c| Constraint {
                        expr: c.expr.rename_atoms(&rename_var, &rename_sym),
                        rel: c.rel,
                    })
                    .collect(),
                locals: d.locals.iter().map(|v| rename_var(v)).collect(),
            })
            .collect(),
    };
    let properties: Vec<IndexArrayProperty> = spec
        .properties
        .iter()
        .map(|p| IndexArrayProperty {
            uf: rename_sym(&p.uf),
            guard: p
                .guard
                .iter()
                .map(|a| PropAtom {
                    expr: a.expr.rename_atoms(
                        &|v| {
                            if ["a", "a'", "f", "f'"].contains(&v.name.as_str()) {
                                v.clone()
                            } else {
                                rename_var(v)
                            }
                        },
                        &rename_sym,
                    ),
                    rel: a.rel,
                })
                .collect(),
            conclusion: p
                .conclusion
                .iter()
                .map(|a| PropAtom {
                    expr: a.expr.rename_atoms(
                        &|v| {
                            if ["a", "a'", "f", "f'"].contains(&v.name.as_str()) {
                                v.clone()
                            } else {
                                rename_var(v)
                            }
                        },
                        &rename_sym,
                    ),
                    rel: a.rel,
                })
                .collect(),
            flavor: p.flavor,
        })
        .collect();

    let iexpr_map: BTreeMap<String, String> = var_map
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .chain(field_names.iter().map(|(k, v)| (k.clone(), v.clone())))
        .collect();
    let value_expr = spec.value_expr.rename_vars(&iexpr_map);

    let qualified = LayoutSpec {
        name: spec.name.clone(),
        physical: relation.input.clone(),
        logical: relation.output.clone(),
        relation,
        value_array: field_names
            .get(&spec.value_array)
            .cloned()
            .unwrap_or_else(|| spec.value_array.clone()),
        value_expr,
        fields: spec
            .fields
            .iter()
            .map(|f| crate::layout::FieldDecl {
                name: field_names.get(&f.name).cloned().unwrap_or_else(|| f.name.clone()),
                role: f.role,
                dims: f.dims.clone(),
            })
            .collect(),
        properties,
    };
    let base_properties: Vec<IndexArrayProperty> = spec
        .properties
        .iter()
        .map(|p| IndexArrayProperty {
            uf: rename_sym(&p.uf),
            guard: p.guard.clone(),
            conclusion: p.conclusion.clone(),
            flavor: p.flavor,
        })
        .collect();
    let base_physical: Vec<String> = spec.physical.iter().map(|v| v.name.clone()).collect();
    Ok(BoundLayout {
        tensor: tensor.to_string(),
        spec: qualified,
        field_names,
        var_names: var_map,
        base_properties,
        base_physical,
    })
}

pub fn bind(tensor: &str, spec: &LayoutSpec) -> Result<BoundLayout, SpfError> {
    bind_shared(tensor, spec, &BTreeMap::new())
}

/// `Q = (A)^-1 ∘ R`: from layout positions to computation indices; the
/// logical tuple is eliminated.
pub fn layout_to_computation(
    bound: &BoundLayout,
    access: &AccessMap,
) -> Result<PresburgerRelation, SpfError> {
    if access.map.output.len() != bound.spec.logical.len() {
        return Err(SpfError::Compose(format!(
            "tensor {} has order {} but layout {} provides {} logical dims",
            access.tensor,
            access.map.output.len(),
            bound.spec.name,
            bound.spec.logical.len()
        )));
    }
    // Rename the access map's generic logical tuple to the layout's names so
    // composition can unify them.
    let rename: BTreeMap<String, String> = access
        .map
        .output
        .iter()
        .zip(bound.spec.logical.iter())
        .map(|(g, l)| (g.name.clone(), l.name.clone()))
        .collect();
    let renamed = access.map.rename(&|v| match rename.get(&v.name) {
        Some(n) => VarId::new(n, v.kind),
        None => v.clone(),
    });
    let q = compose(&inverse(&renamed), &bound.spec.relation)
        .map_err(|e| SpfError::Compose(e.to_string()))?;
    // Eliminate the mediating logical tuple right away.
    let disjuncts = q
        .disjuncts
        .iter()
        .map(|d| d.eliminate_locals())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SpfError::Compose(e.to_string()))?;
    Ok(PresburgerRelation { input: q.input, output: q.output, disjuncts })
}

/// Everything the later stages need to know about one tensor of the kernel.
#[derive(Debug, Clone)]
pub struct TensorInfo {
    pub name: String,
    pub bound: BoundLayout,
    /// Layout variables surviving in the iteration space ([] for direct
    /// layouts whose positions equal computation indices).
    pub physical: Vec<VarId>,
    /// Value array (qualified name) and its index expression over surviving
    /// variables.
    pub value_array: String,
    pub value_index: IExpr,
    /// Logical coordinates as computation index names.
    pub logical_coords: Vec<String>,
    pub is_output: bool,
}

/// The combined space over layout and computation indices with a loop order.
#[derive(Debug, Clone)]
pub struct ExtendedIterationSpace {
    pub space: PresburgerSet,
    pub loop_order: Vec<VarId>,
    pub tensors: Vec<TensorInfo>,
    pub comp_order: Vec<String>,
}

impl ExtendedIterationSpace {
    pub fn output(&self) -> &TensorInfo {
        self.tensors.iter().find(|t| t.is_output).expect("no output tensor")
    }

    /// All index-array properties of every binding.
    pub fn all_properties(&self) -> Vec<(&BoundLayout, &IndexArrayProperty)> {
        self.tensors
            .iter()
            .flat_map(|t| t.bound.spec.properties.iter().map(move |p| (&t.bound, p)))
            .collect()
    }
}

/// Build the extended iteration space from per-tensor bindings.
///
/// Sparse output tensors must share their index arrays with an input
/// binding; discovering output sparsity is out of scope and rejected.
pub fn combine(
    contraction: &ContractionExpr,
    bindings: &[(String, BoundLayout)],
    accesses: &[AccessMap],
    dense: &PresburgerSet,
    comp_order: &[String],
    loop_order: Option<&[String]>,
) -> Result<ExtendedIterationSpace, SpfError> {
    let mut tensors: Vec<TensorInfo> = Vec::new();
    let mut space: Option<PresburgerSet> = None;
    let mut q_rels: Vec<(String, PresburgerRelation)> = Vec::new();

    for access in accesses {
        let bound = bindings
            .iter()
            .find(|(t, _)| *t == access.tensor)
            .map(|(_, b)| b.clone())
            .ok_or_else(|| {
                SpfError::Compose(format!("tensor {} has no layout binding", access.tensor))
            })?;
        let is_output = access.tensor == contraction.output.tensor;
        if is_output && !bound.spec.is_direct() {
            let shares = bound.field_names.values().any(|q| !q.starts_with(&format!("{}.", access.tensor)));
            if !shares {
                return Err(SpfError::Compose(format!(
                    "sparse output {} must share its sparsity structure with an input (use a share declaration); automatic output assembly is not supported",
                    access.tensor
                )));
            }
        }
        let q = layout_to_computation(&bound, access)?;
        // Rematerialize layout indices as set variables.
        let kept = range_keep(&q, true).map_err(|e| SpfError::Compose(e.to_string()))?;
        // Direct layouts (dense, triangular): positions are pinned to
        // computation indices, substitute them away so they never appear in
        // generated loops.
        let (set_for_tensor, value_index, physical) = if bound.spec.is_direct() {
            let (shrunk, subst) = substitute_tuple_vars(&kept, &bound.spec.physical)
                .map_err(|e| SpfError::Compose(e.to_string()))?;
            let mut rename: BTreeMap<String, String> = BTreeMap::new();
            for (v, e) in &subst {
                let target = e
                    .terms
                    .iter()
                    .find_map(|t| match &t.atom {
                        Atom::Var(w) if t.coef == 1 => Some(w.name.clone()),
                        _ => None,
                    })
                    .ok_or_else(|| {
                        SpfError::Compose(format!(
                            "direct layout {} pins {} to a non-variable expression",
                            bound.spec.name, v.name
                        ))
                    })?;
                rename.insert(v.name.clone(), target);
            }
            (shrunk, bound.spec.value_expr.rename_vars(&rename), vec![])
        } else {
            (kept, bound.spec.value_expr.clone(), bound.spec.physical.clone())
        };
        q_rels.push((access.tensor.clone(), q));
        tensors.push(TensorInfo {
            name: access.tensor.clone(),
            value_array: bound.spec.value_array.clone(),
            value_index,
            logical_coords: contraction
                .access_of(&access.tensor)
                .map(|a| a.indices.clone())
                .unwrap_or_default(),
            physical,
            bound,
            is_output,
        });
        space = Some(match space {
            None => set_for_tensor,
            Some(s) => intersect(&s, &set_for_tensor)
                .map_err(|e| SpfError::Compose(e.to_string()))?,
        });
    }

    let mut space = match space {
        Some(s) => intersect(&s, dense).map_err(|e| SpfError::Compose(e.to_string()))?,
        None => dense.clone(),
    };

    // Canonical tuple order: all layout variables (tensor declaration
    // order), then the computation indices.
    let mut tuple: Vec<VarId> = Vec::new();
    for t in &tensors {
        tuple.extend(t.physical.iter().cloned());
    }
    for idx in comp_order {
        tuple.push(VarId::computation(idx));
    }
    for v in &space.tuple {
        if !tuple.iter().any(|w| w.name == v.name) {
            tuple.push(v.clone());
        }
    }
    tuple.retain(|v| space.tuple.iter().any(|w| w.name == v.name));
    space.tuple = tuple;

    let loop_order = match loop_order {
        Some(names) => {
            let mut order = Vec::new();
            for n in names {
                let v = space
                    .find_var(n)
                    .cloned()
                    .ok_or_else(|| SpfError::Compose(format!("unknown loop variable {}", n)))?;
                order.push(v);
            }
            order
        }
        None => default_loop_order(&space, &tensors, comp_order, contraction)?,
    };
    validate_loop_order(&space, &loop_order)?;
    Ok(ExtendedIterationSpace {
        space,
        loop_order,
        tensors,
        comp_order: comp_order.to_vec(),
    })
}

/// For each computation index in order: the first tensor defining it
/// contributes its layout variables just before the index (iterated), later
/// definers contribute theirs right after (found). Prefix closure follows
/// the layout's own variable order.
fn default_loop_order(
    space: &PresburgerSet,
    tensors: &[TensorInfo],
    comp_order: &[String],
    contraction: &ContractionExpr,
) -> Result<Vec<VarId>, SpfError> {
    let conj = space.sole_conjunct()?;
    // defining equality: mentions the index with unit coefficient plus at
    // least one physical variable of the tensor.
    let defines = |t: &TensorInfo, idx: &VarId| -> Option<usize> {
        let mut best: Option<usize> = None;
        for c in &conj.constraints {
            if c.rel != Rel::Eq || c.expr.coef_of(idx).abs() != 1 {
                continue;
            }
            let mut vars = std::collections::BTreeSet::new();
            c.expr.collect_vars(&mut vars);
            let max_pos = t
                .physical
                .iter()
                .enumerate()
                .filter(|(_, p)| vars.contains(*p))
                .map(|(n, _)| n)
                .max();
            if let Some(m) = max_pos {
                best = Some(best.map_or(m, |b: usize| b.max(m)));
            }
        }
        best
    };
    // Tensor visit order: inputs in declaration order, output last.
    let mut visit: Vec<&TensorInfo> = Vec::new();
    for acc in &contraction.inputs {
        if let Some(t) = tensors.iter().find(|t| t.name == acc.tensor) {
            visit.push(t);
        }
    }
    if let Some(out) = tensors.iter().find(|t| t.is_output) {
        visit.push(out);
    }

    let mut order: Vec<VarId> = Vec::new();
    let placed = |order: &[VarId], v: &VarId| order.iter().any(|w| w.name == v.name);
    for idx_name in comp_order {
        let idx = VarId::computation(idx_name);
        let mut placed_idx = false;
        for t in &visit {
            if let Some(upto) = defines(t, &idx) {
                for p in &t.physical[..=upto] {
                    if !placed(&order, p) {
                        order.push(p.clone());
                    }
                }
                if !placed_idx && !placed(&order, &idx) {
                    order.push(idx.clone());
                    placed_idx = true;
                }
            }
        }
        if !placed(&order, &idx) {
            order.push(idx.clone());
        }
    }
    // Any leftover layout variables (should not happen in practice).
    for t in tensors {
        for p in &t.physical {
            if !placed(&order, p) {
                order.push(p.clone());
            }
        }
    }
    // Keep only variables that exist in the space, in this order.
    let order: Vec<VarId> = order
        .into_iter()
        .filter(|v| space.tuple.iter().any(|w| w.name == v.name))
        .collect();
    if order.len() != space.tuple.len() {
        return Err(SpfError::Compose(format!(
            "default loop order covers {} of {} variables",
            order.len(),
            space.tuple.len()
        )));
    }
    Ok(order)
}

/// An order is legal when every variable's level leaves it bounded or
/// assigned: a function argument bound after its use shows up here as an
/// unbounded level.
pub fn validate_loop_order(space: &PresburgerSet, order: &[VarId]) -> Result<(), SpfError> {
    let plan = crate::presburger::project_scan(space, order)?;
    for level in &plan.levels {
        let bounded = (!level.lowers.is_empty() && !level.uppers.is_empty())
            || !level.assigns.is_empty();
        if !bounded {
            return Err(SpfError::Compose(format!(
                "loop order leaves {} unbounded: a function argument may only be bound after its use, or an extent declaration is missing",
                level.var()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{access_maps, dense_space, parse_contraction};
    use crate::layout::builtin;
    use crate::presburger::enumerate::{enumerate, Box_, UfTable, UfTables};

    fn setup_dot() -> ExtendedIterationSpace {
        let e = parse_contraction("v() = A(i) * B(i)").unwrap();
        let order = e.default_order();
        let maps = access_maps(&e, &order);
        let sv = builtin("SV", &[]).unwrap();
        let bindings = vec![
            ("v".to_string(), bind("v", &builtin("Dense", &[0]).unwrap()).unwrap()),
            ("A".to_string(), bind("A", &sv).unwrap()),
            ("B".to_string(), bind("B", &sv).unwrap()),
        ];
        let dense = dense_space(&e, &order, None).unwrap();
        combine(&e, &bindings, &maps, &dense, &order, None).unwrap()
    }

    #[test]
    fn bind_qualifies_names() {
        let csr = builtin("CSR", &[]).unwrap();
        let b = bind("A", &csr).unwrap();
        assert_eq!(b.spec.physical[0].name, "pA_i");
        assert!(b.spec.fields.iter().any(|f| f.name == "A.rowPtr"));
        let apps = b.spec.relation.disjuncts[0].collect_apps();
        assert!(apps.iter().any(|a| a.symbol.name == "A.colIdx"));
    }

    #[test]
    fn csr_q_relation_matches_hand_derivation() {
        // Q for CSR on A(i,k) in matmul: i = pA_i and k = A.colIdx(pA_j).
        let e = parse_contraction("C(i,j) = A(i,k) * B(k,j)").unwrap();
        let order = vec!["i".to_string(), "k".to_string(), "j".to_string()];
        let maps = access_maps(&e, &order);
        let a_map = maps.iter().find(|m| m.tensor == "A").unwrap();
        let b = bind("A", &builtin("CSR", &[]).unwrap()).unwrap();
        let q = layout_to_computation(&b, a_map).unwrap();
        assert_eq!(q.input.len(), 2);
        assert_eq!(q.output.len(), 3);
        let conj = q.sole_conjunct().unwrap();
        // 0<=p_i, p_i<numRows, rowPtr bounds (2), i=p_i, k=colIdx(p_j).
        assert_eq!(conj.constraints.len(), 6);
        let has_k_eq = conj.constraints.iter().any(|c| {
            let mut apps = Vec::new();
            c.expr.collect_apps(&mut apps);
            c.rel == Rel::Eq
                && c.expr.mentions_var(&VarId::computation("k"))
                && !apps.is_empty()
        });
        assert!(has_k_eq);
    }

    #[test]
    fn dot_space_shape_and_enumeration() {
        let is = setup_dot();
        // Tuple: pA, pB, i.
        assert_eq!(is.space.tuple.len(), 3);
        // Default order [pA, i, pB].
        let names: Vec<&str> = is.loop_order.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, vec!["pA", "i", "pB"]);

        let mut tables = UfTables::new();
        tables.insert("A.idx".into(), UfTable::from_vec(&[1, 3]));
        tables.insert("B.idx".into(), UfTable::from_vec(&[0, 1, 3]));
        let b = Box_::new()
            .with("pA", 0, 2)
            .with("pB", 0, 3)
            .with("i", 0, 5)
            .fix("A.len", 2)
            .fix("B.len", 3);
        let pts = enumerate(&is.space, &b, &tables).unwrap();
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn spmv_csr_space_matches_paper_shape() {
        let mut e = parse_contraction("y(i) = A(i,j) * x(j)").unwrap();
        e.index_domains.insert("j".into(), "N".into());
        let order = e.default_order();
        let maps = access_maps(&e, &order);
        let bindings = vec![
            ("y".to_string(), bind("y", &builtin("Dense", &[1]).unwrap()).unwrap()),
            ("A".to_string(), bind("A", &builtin("CSR", &[]).unwrap()).unwrap()),
            ("x".to_string(), bind("x", &builtin("Dense", &[1]).unwrap()).unwrap()),
        ];
        let dense = dense_space(&e, &order, None).unwrap();
        let is = combine(&e, &bindings, &maps, &dense, &order, None).unwrap();
        // Dense x and y are substituted away: only pA_i, pA_j, i, j remain.
        let names: Vec<&str> = is.space.tuple.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names.len(), 4);
        assert!(names.contains(&"pA_i") && names.contains(&"pA_j"));
        let order_names: Vec<&str> = is.loop_order.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(order_names, vec!["pA_i", "i", "pA_j", "j"]);
    }

    #[test]
    fn illegal_order_is_rejected() {
        let e = parse_contraction("v() = A(i) * B(i)").unwrap();
        let order = e.default_order();
        let maps = access_maps(&e, &order);
        let sv = builtin("SV", &[]).unwrap();
        let dense1 = builtin("Dense", &[1]).unwrap();
        let bindings = vec![
            ("v".to_string(), bind("v", &dense1).unwrap()),
            ("A".to_string(), bind("A", &sv).unwrap()),
            ("B".to_string(), bind("B", &sv).unwrap()),
        ];
        let dense = dense_space(&e, &order, None).unwrap();
        // i first with no extent: nothing bounds it at its level.
        let bad = vec!["i".to_string(), "pA".to_string(), "pB".to_string()];
        let err = combine(&e, &bindings, &maps, &dense, &order, Some(&bad));
        assert!(err.is_err());
    }
}
