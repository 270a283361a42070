//! Tensor index notation: parsing, access maps and the dense logical
//! iteration space.

use std::collections::BTreeMap;

use crate::error::SpfError;
use crate::presburger::text::{Lexer, Tok};
use crate::presburger::{
    intersect, AffineExpr, Constraint, PresburgerRelation, PresburgerSet, VarId,
};

/// One `name(indices)` reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorAccess {
    pub tensor: String,
    pub indices: Vec<String>,
}

/// A multiplicative contraction `out(...) = in1(...) * in2(...) * ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionExpr {
    pub output: TensorAccess,
    pub inputs: Vec<TensorAccess>,
    /// Optional symbolic extent per index (a parameter name).
    pub index_domains: BTreeMap<String, String>,
}

impl ContractionExpr {
    /// Indices appearing on the output, in output order.
    pub fn free_indices(&self) -> Vec<String> {
        self.output.indices.clone()
    }

    /// Indices appearing only on the right-hand side, in order of first
    /// appearance.
    pub fn contraction_indices(&self) -> Vec<String> {
        let mut out = Vec::new();
        for acc in &self.inputs {
            for idx in &acc.indices {
                if !self.output.indices.contains(idx) && !out.contains(idx) {
                    out.push(idx.clone());
                }
            }
        }
        out
    }

    /// Default loop order: output free indices outermost, then contraction
    /// indices.
    pub fn default_order(&self) -> Vec<String> {
        let mut order = self.free_indices();
        for idx in self.contraction_indices() {
            if !order.contains(&idx) {
                order.push(idx);
            }
        }
        order
    }

    /// All tensors, output first.
    pub fn tensors(&self) -> Vec<&TensorAccess> {
        let mut v = vec![&self.output];
        v.extend(self.inputs.iter());
        v
    }

    pub fn access_of(&self, tensor: &str) -> Option<&TensorAccess> {
        self.tensors().into_iter().find(|t| t.tensor == tensor)
    }
}

/// Mapping from the computation tuple to one tensor's logical coordinates.
#[derive(Debug, Clone)]
pub struct AccessMap {
    pub tensor: String,
    pub map: PresburgerRelation,
}

/// Parse `out(i,j) = A(i,k) * B(k,j)`. Scalar outputs use empty parentheses.
pub fn parse_contraction(text: &str) -> Result<ContractionExpr, SpfError> {
    if text.contains('+') {
        return Err(SpfError::Frontend(
            "additions are not supported; contractions are multiplication-only".into(),
        ));
    }
    let mut lex = Lexer::new(text).map_err(|e| SpfError::Frontend(e.to_string()))?;
    let output = parse_access(&mut lex)?;
    if !lex.eat_punct("=") {
        return Err(SpfError::Frontend("expected '=' after the output access".into()));
    }
    let mut inputs = vec![parse_access(&mut lex)?];
    while lex.eat_punct("*") {
        inputs.push(parse_access(&mut lex)?);
    }
    if !lex.at_end() {
        return Err(SpfError::Frontend(format!(
            "unexpected trailing input: {:?}",
            lex.peek()
        )));
    }
    // Tensor names must be unique.
    let mut names: Vec<&str> = Vec::new();
    names.push(&output.tensor);
    for i in &inputs {
        names.push(&i.tensor);
    }
    for (n, a) in names.iter().enumerate() {
        if names[..n].contains(a) {
            return Err(SpfError::Frontend(format!("duplicate tensor name {}", a)));
        }
    }
    // Every output index must appear in some input.
    for idx in &output.indices {
        if !inputs.iter().any(|acc| acc.indices.contains(idx)) {
            return Err(SpfError::Frontend(format!(
                "output index {} does not appear in any input",
                idx
            )));
        }
    }
    Ok(ContractionExpr { output, inputs, index_domains: BTreeMap::new() })
}

fn parse_access(lex: &mut Lexer) -> Result<TensorAccess, SpfError> {
    let tensor = lex.expect_name().map_err(|e| SpfError::Frontend(e.to_string()))?;
    if !lex.eat_punct("(") {
        return Err(SpfError::Frontend(format!("expected '(' after tensor {}", tensor)));
    }
    let mut indices = Vec::new();
    if !lex.eat_punct(")") {
        loop {
            match lex.next_tok() {
                Some(Tok::Name(n)) => indices.push(n),
                other => {
                    return Err(SpfError::Frontend(format!(
                        "expected an index name, found {:?}",
                        other
                    )))
                }
            }
            if lex.eat_punct(")") {
                break;
            }
            if !lex.eat_punct(",") {
                return Err(SpfError::Frontend("expected ',' or ')' in access".into()));
            }
        }
    }
    Ok(TensorAccess { tensor, indices })
}

/// One access map per tensor, output included; the computation tuple is the
/// given loop order over computation indices. Logical coordinates are named
/// `g1..gn` and renamed when composed against a concrete layout.
pub fn access_maps(e: &ContractionExpr, comp_order: &[String]) -> Vec<AccessMap> {
    let input: Vec<VarId> = comp_order.iter().map(VarId::computation).collect();
    e.tensors()
        .into_iter()
        .map(|acc| {
            let output: Vec<VarId> = (1..=acc.indices.len())
                .map(|k| VarId::computation(format!("g{}", k)))
                .collect();
            let constraints = acc
                .indices
                .iter()
                .zip(output.iter())
                .map(|(idx, g)| {
                    Constraint::eq_pair(
                        AffineExpr::var(g.clone()),
                        AffineExpr::var(VarId::computation(idx)),
                    )
                })
                .collect();
            AccessMap {
                tensor: acc.tensor.clone(),
                map: PresburgerRelation::new(input.clone(), output, constraints),
            }
        })
        .collect()
}

/// Box space over the computation indices from declared extents, optionally
/// intersected with user-supplied constraints.
pub fn dense_space(
    e: &ContractionExpr,
    comp_order: &[String],
    user_bounds: Option<&PresburgerSet>,
) -> Result<PresburgerSet, SpfError> {
    let tuple: Vec<VarId> = comp_order.iter().map(VarId::computation).collect();
    let mut constraints = Vec::new();
    for idx in comp_order {
        if let Some(extent) = e.index_domains.get(idx) {
            let v = AffineExpr::var(VarId::computation(idx));
            constraints.push(Constraint::ge(v.clone()));
            constraints.push(Constraint::lt_pair(v, AffineExpr::var(VarId::parameter(extent))));
        }
    }
    let base = PresburgerSet::new(tuple, constraints);
    match user_bounds {
        None => Ok(base),
        Some(b) => intersect(&base, b).map_err(|e| SpfError::Frontend(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::parse_set;

    #[test]
    fn dot_product_classification() {
        let e = parse_contraction("v() = A(i) * B(i)").unwrap();
        assert!(e.free_indices().is_empty());
        assert_eq!(e.contraction_indices(), vec!["i"]);
        assert_eq!(e.default_order(), vec!["i"]);
    }

    #[test]
    fn matmul_classification() {
        let e = parse_contraction("C(i,j) = A(i,k) * B(k,j)").unwrap();
        assert_eq!(e.free_indices(), vec!["i", "j"]);
        assert_eq!(e.contraction_indices(), vec!["k"]);
    }

    #[test]
    fn ttm_with_unused_output_index_is_rejected() {
        let err = parse_contraction("C(i,j,l) = A(i,j,k) * B(k,r)").unwrap_err();
        assert!(err.to_string().contains("l"));
        let ok = parse_contraction("C(i,j,r) = A(i,j,k) * B(k,r)").unwrap();
        assert_eq!(ok.free_indices(), vec!["i", "j", "r"]);
        assert_eq!(ok.contraction_indices(), vec!["k"]);
    }

    #[test]
    fn additions_are_rejected() {
        assert!(parse_contraction("v() = A(i) + B(i)").is_err());
    }

    #[test]
    fn duplicate_tensor_names_are_rejected() {
        assert!(parse_contraction("A(i) = A(i) * B(i)").is_err());
    }

    #[test]
    fn matmul_access_map_for_a() {
        let e = parse_contraction("C(i,j) = A(i,k) * B(k,j)").unwrap();
        let order = vec!["i".to_string(), "k".to_string(), "j".to_string()];
        let maps = access_maps(&e, &order);
        let a = maps.iter().find(|m| m.tensor == "A").unwrap();
        assert_eq!(a.map.input.len(), 3);
        assert_eq!(a.map.output.len(), 2);
        // g1 = i and g2 = k
        let conj = a.map.sole_conjunct().unwrap();
        assert_eq!(conj.constraints.len(), 2);
    }

    #[test]
    fn dense_space_with_lower_triangular_restriction() {
        let mut e = parse_contraction("y(i) = A(i,j) * x(j)").unwrap();
        e.index_domains.insert("i".into(), "N".into());
        e.index_domains.insert("j".into(), "N".into());
        let user = parse_set("{ [i, j] | j <= i }").unwrap();
        let order = vec!["i".to_string(), "j".to_string()];
        let s = dense_space(&e, &order, Some(&user)).unwrap();
        assert_eq!(s.disjuncts[0].constraints.len(), 5);
    }

    #[test]
    fn scalar_output_has_empty_access_map() {
        let e = parse_contraction("v() = A(i) * B(i)").unwrap();
        let maps = access_maps(&e, &["i".to_string()]);
        let v = maps.iter().find(|m| m.tensor == "v").unwrap();
        assert!(v.map.output.is_empty());
    }
}
