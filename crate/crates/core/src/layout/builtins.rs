//! Registry of stock layouts, defined in the DSL itself so the parser and
//! printer stay the single source of truth.

use crate::error::SpfError;

use super::dsl::parse_layout;
use super::LayoutSpec;

const SV: &str = r#"
layout SV {
  physical p_i;
  logical g_i;
  arrays idx: index, val: value;
  scalar len;
  relation { 0 <= p_i and p_i < len and g_i = idx(p_i) };
  value val[p_i];
  property idx: (a < a') -> (f < f');
}
"#;

const CSR: &str = r#"
layout CSR {
  physical p_i, p_j;
  logical g_i, g_j;
  arrays rowPtr: index, colIdx: index, data: value;
  scalar numRows;
  relation { 0 <= p_i and p_i < numRows and rowPtr(p_i) <= p_j and p_j < rowPtr(p_i + 1)
             and g_i = p_i and g_j = colIdx(p_j) };
  value data[p_j];
  property colIdx: (p_i = p_i' and a < a') -> (f < f');
}
"#;

const DCSR: &str = r#"
layout DCSR {
  physical p_i, p_j;
  logical g_i, g_j;
  arrays rowIdx: index, rowPtr: index, colIdx: index, data: value;
  scalar numRows;
  relation { 0 <= p_i and p_i < numRows and rowPtr(p_i) <= p_j and p_j < rowPtr(p_i + 1)
             and g_i = rowIdx(p_i) and g_j = colIdx(p_j) };
  value data[p_j];
  property rowIdx: (a < a') -> (f < f');
  property colIdx: (p_i = p_i' and a < a') -> (f < f');
}
"#;

const COO: &str = r#"
layout COO {
  physical p_i;
  logical g_i, g_j;
  arrays rowIdx: index, colIdx: index, data: value;
  scalar numNNZ;
  relation { 0 <= p_i and p_i < numNNZ and g_i = rowIdx(p_i) and g_j = colIdx(p_i) };
  value data[p_i];
  property rowIdx: (a < a') -> (f <= f');
  property colIdx: (a < a' and rowIdx(a) = rowIdx(a')) -> (f < f');
}
"#;

const LOWER_TRI: &str = r#"
layout LowerTri {
  physical p_i, p_j;
  logical g_i, g_j;
  arrays data: value;
  scalar numRows;
  relation { 0 <= p_i and p_i < numRows and 0 <= p_j and p_j <= p_i
             and g_i = p_i and g_j = p_j };
  value data[p_i * (p_i + 1) / 2 + p_j];
}
"#;

const WARP: &str = r#"
layout WarpMMA16x16 {
  physical p_i, p_j;
  logical g_i, g_j;
  arrays offset: index, data: value[8];
  relation { 0 <= p_i and p_i < 16 and 0 <= p_j and p_j < 8
             and g_i = p_i and g_j = 2 * p_j + offset(32 * p_i + 4 * p_j + 1) };
  value data[p_i][p_j];
  property offset: true -> (0 <= f and f < 2);
}
"#;

fn bcsr(block_rows: i64, block_cols: i64) -> String {
    format!(
        r#"
layout BCSR {{
  physical p_i, p_j, p_k, p_l;
  logical g_i, g_j;
  arrays rowPtr: index, colIdx: index, data: value[{br}][{bc}];
  scalar numRows;
  relation {{ 0 <= p_i and p_i < numRows and rowPtr(p_i) <= p_j and p_j < rowPtr(p_i + 1)
             and 0 <= p_k and p_k < {br} and 0 <= p_l and p_l < {bc}
             and g_i = {br} * p_i + p_k and g_j = colIdx(p_j) + p_l }};
  value data[p_j][p_k][p_l];
  property colIdx: (p_i = p_i' and a < a') -> (f + {bc} <= f');
}}
"#,
        br = block_rows,
        bc = block_cols
    )
}

/// Compressed sparse fiber of the requested order: the top level is a sorted
/// coordinate list, every deeper level a pointer-compressed one.
fn csf(order: usize) -> String {
    let physical: Vec<String> = (1..=order).map(|l| format!("p{}", l)).collect();
    let logical: Vec<String> = (1..=order).map(|l| format!("g{}", l)).collect();
    let mut arrays: Vec<String> = vec!["idx1: index".into()];
    for l in 2..=order {
        arrays.push(format!("ptr{}: index", l));
        arrays.push(format!("idx{}: index", l));
    }
    arrays.push("val: value".into());
    let mut rel = vec![
        "0 <= p1".to_string(),
        "p1 < len1".to_string(),
        "g1 = idx1(p1)".to_string(),
    ];
    for l in 2..=order {
        rel.push(format!("ptr{}(p{}) <= p{}", l, l - 1, l));
        rel.push(format!("p{} < ptr{}(p{} + 1)", l, l, l - 1));
        rel.push(format!("g{} = idx{}(p{})", l, l, l));
    }
    let mut props = vec!["  property idx1: (a < a') -> (f < f');".to_string()];
    for l in 2..=order {
        props.push(format!("  property idx{}: (p{} = p{}' and a < a') -> (f < f');", l, l - 1, l - 1));
    }
    format!(
        "layout CSF{order} {{\n  physical {};\n  logical {};\n  arrays {};\n  scalar len1;\n  relation {{ {} }};\n  value val[p{order}];\n{}\n}}\n",
        physical.join(", "),
        logical.join(", "),
        arrays.join(", "),
        rel.join(" and "),
        props.join("\n"),
        order = order,
    )
}

/// Dense row-major tensor of the given rank, bounds named d1..dn.
fn dense(rank: usize) -> String {
    let physical: Vec<String> = (1..=rank).map(|l| format!("p{}", l)).collect();
    let logical: Vec<String> = (1..=rank).map(|l| format!("g{}", l)).collect();
    let scalars: Vec<String> = (1..=rank).map(|l| format!("d{}", l)).collect();
    let mut rel = Vec::new();
    for l in 1..=rank {
        rel.push(format!("0 <= p{}", l));
        rel.push(format!("p{} < d{}", l, l));
        rel.push(format!("g{} = p{}", l, l));
    }
    let mut addr = "p1".to_string();
    for l in 2..=rank {
        addr = format!("({}) * d{} + p{}", addr, l, l);
    }
    format!(
        "layout Dense{rank} {{\n  physical {};\n  logical {};\n  arrays val: value;\n  scalar {};\n  relation {{ {} }};\n  value val[{}];\n}}\n",
        physical.join(", "),
        logical.join(", "),
        scalars.join(", "),
        rel.join(" and "),
        addr,
        rank = rank,
    )
}

/// Rank-0 tensor: one value slot, empty relation.
fn scalar_layout() -> LayoutSpec {
    use crate::iexpr::IExpr;
    use crate::layout::{FieldDecl, FieldRole};
    use crate::presburger::PresburgerRelation;
    LayoutSpec {
        name: "Dense0".into(),
        physical: vec![],
        logical: vec![],
        relation: PresburgerRelation::new(vec![], vec![], vec![]),
        value_array: "val".into(),
        value_expr: IExpr::Int(0),
        fields: vec![FieldDecl { name: "val".into(), role: FieldRole::ValueArray, dims: vec![] }],
        properties: vec![],
    }
}

/// Construct a registry layout. `params` carries block sizes for BCSR and
/// the order for CSF / rank for dense layouts.
pub fn builtin(name: &str, params: &[i64]) -> Result<LayoutSpec, SpfError> {
    let src = match name {
        "SV" => SV.to_string(),
        "CSR" => CSR.to_string(),
        "DCSR" => DCSR.to_string(),
        "COO" => COO.to_string(),
        "LowerTri" => LOWER_TRI.to_string(),
        "WarpMMA16x16" => WARP.to_string(),
        "BCSR" => {
            let (br, bc) = match params {
                [] => (8, 8),
                [b] => (*b, *b),
                [br, bc] => (*br, *bc),
                _ => return Err(SpfError::Layout("BCSR takes at most two block sizes".into())),
            };
            if br <= 0 || bc <= 0 {
                return Err(SpfError::Layout(format!("invalid BCSR block size {}x{}", br, bc)));
            }
            bcsr(br, bc)
        }
        "CSF" => {
            let order = params.first().copied().unwrap_or(3);
            if !(2..=4).contains(&order) {
                return Err(SpfError::Layout(format!("unsupported CSF order {}", order)));
            }
            csf(order as usize)
        }
        "Dense" => {
            let rank = params.first().copied().unwrap_or(1);
            if rank == 0 {
                return Ok(scalar_layout());
            }
            if !(1..=4).contains(&rank) {
                return Err(SpfError::Layout(format!("unsupported dense rank {}", rank)));
            }
            dense(rank as usize)
        }
        other => return Err(SpfError::Layout(format!("unknown builtin layout {}", other))),
    };
    parse_layout(&src)
}

/// Names accepted by `builtin`, used by the command line for diagnostics.
pub const BUILTIN_NAMES: &[&str] =
    &["SV", "CSR", "DCSR", "COO", "BCSR", "LowerTri", "WarpMMA16x16", "CSF", "Dense"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::dsl::{parse_layout, print_layout};
    use crate::layout::PropFlavor;

    #[test]
    fn registry_round_trips_through_the_printer() {
        for (name, params) in [
            ("SV", &[][..]),
            ("CSR", &[]),
            ("DCSR", &[]),
            ("COO", &[]),
            ("BCSR", &[8, 8][..]),
            ("LowerTri", &[]),
            ("WarpMMA16x16", &[]),
            ("CSF", &[3][..]),
            ("Dense", &[2][..]),
        ] {
            let spec = builtin(name, params).unwrap();
            let printed = print_layout(&spec);
            let again = parse_layout(&printed)
                .unwrap_or_else(|e| panic!("{} failed to reparse: {}\n{}", name, e, printed));
            assert_eq!(spec, again, "round trip changed {}", name);
        }
    }

    #[test]
    fn bcsr_has_four_physical_vars_and_block_offset_property() {
        let spec = builtin("BCSR", &[8, 8]).unwrap();
        assert_eq!(spec.physical.len(), 4);
        let p = &spec.properties_of("colIdx")[0];
        // Conclusion is colIdx + 8 <= colIdx'.
        assert_eq!(p.conclusion.len(), 1);
        assert_eq!(p.conclusion[0].expr.const_part(), -8);
    }

    #[test]
    fn coo_has_covary_property() {
        let spec = builtin("COO", &[]).unwrap();
        assert_eq!(spec.physical.len(), 1);
        assert_eq!(spec.logical.len(), 2);
        let flavors: Vec<PropFlavor> = spec.properties.iter().map(|p| p.flavor).collect();
        assert!(flavors.contains(&PropFlavor::CovaryMonotonicity));
    }

    #[test]
    fn warp_offset_has_range_property() {
        let spec = builtin("WarpMMA16x16", &[]).unwrap();
        let p = &spec.properties_of("offset")[0];
        assert_eq!(p.flavor, PropFlavor::Range);
        assert!(p.guard.is_empty());
        assert_eq!(p.conclusion.len(), 2);
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(builtin("CSC", &[]).is_err());
        assert!(builtin("BCSR", &[0]).is_err());
    }

    #[test]
    fn lowertri_value_addressing_is_triangular() {
        let spec = builtin("LowerTri", &[]).unwrap();
        let mut env = std::collections::BTreeMap::new();
        env.insert("p_i".to_string(), 3i64);
        env.insert("p_j".to_string(), 1i64);
        assert_eq!(spec.value_expr.eval(&env, &Default::default()).unwrap(), 7);
    }
}
