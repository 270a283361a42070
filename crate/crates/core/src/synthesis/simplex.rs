//! Exact rational feasibility via phase-1 simplex with Bland's rule.
//!
//! Variables are unrestricted integers modeled as differences of two
//! nonnegative variables; inequalities get surplus variables. Only
//! feasibility and one rational witness point are needed by the caller.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::presburger::Rel;

/// `coefs · x + constant  rel  0` over variables indexed 0..nvars.
#[derive(Debug, Clone)]
pub struct LinRow {
    pub coefs: Vec<i64>,
    pub constant: i64,
    pub rel: Rel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Feasible(Vec<BigRational>),
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Decide rational feasibility of the system and return a witness.
pub fn lp_feasible(nvars: usize, rows: &[LinRow]) -> LpOutcome {
    // Standard form: every original var x = u - w with u, w >= 0;
    // every >= row gains a surplus s >= 0 turning it into an equality.
    let nsurplus = rows.iter().filter(|r| r.rel == Rel::Ge).count();
    let ncols = nvars * 2 + nsurplus;
    let m = rows.len();
    if m == 0 {
        return LpOutcome::Feasible(vec![BigRational::zero(); nvars]);
    }

    // tableau[r] = coefficients, b[r] = rhs, all equalities: A z = b, z >= 0.
    let mut a: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); ncols + m]; m];
    let mut b: Vec<BigRational> = vec![BigRational::zero(); m];
    let mut surplus_idx = 0;
    for (r, row) in rows.iter().enumerate() {
        for (v, &c) in row.coefs.iter().enumerate() {
            a[r][v * 2] = rat(c);
            a[r][v * 2 + 1] = rat(-c);
        }
        // coefs·x + constant >= 0  =>  coefs·x - s = -constant
        if row.rel == Rel::Ge {
            a[r][nvars * 2 + surplus_idx] = rat(-1);
            surplus_idx += 1;
        }
        b[r] = rat(-row.constant);
    }
    // Make rhs nonnegative, then add artificial basis.
    for r in 0..m {
        if b[r].is_negative() {
            for c in 0..ncols {
                a[r][c] = -a[r][c].clone();
            }
            b[r] = -b[r].clone();
        }
        a[r][ncols + r] = BigRational::one();
    }
    let mut basis: Vec<usize> = (0..m).map(|r| ncols + r).collect();

    // Phase-1 objective: minimize sum of artificials. Reduced costs start as
    // obj[c] = -sum_r a[r][c] for non-artificial columns.
    let mut obj: Vec<BigRational> = vec![BigRational::zero(); ncols + m];
    let mut obj_val: BigRational = BigRational::zero();
    for r in 0..m {
        for (c, cell) in obj.iter_mut().enumerate().take(ncols) {
            *cell -= &a[r][c];
        }
        obj_val -= &b[r];
    }

    loop {
        // Bland's rule: smallest column index with negative reduced cost.
        let Some(pivot_col) = (0..ncols + m).find(|&c| obj[c].is_negative()) else {
            break;
        };
        // Ratio test, smallest basis index tie-break.
        let mut pivot_row: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for r in 0..m {
            if a[r][pivot_col].is_positive() {
                let ratio = &b[r] / &a[r][pivot_col];
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        ratio < *cur
                            || (ratio == *cur
                                && basis[r] < basis[pivot_row.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    pivot_row = Some(r);
                }
            }
        }
        let Some(pr) = pivot_row else {
            // Unbounded phase-1 objective cannot happen (bounded below by 0);
            // treat defensively as infeasible-free direction.
            break;
        };
        // Pivot.
        let piv = a[pr][pivot_col].clone();
        for c in 0..ncols + m {
            a[pr][c] = &a[pr][c] / &piv;
        }
        b[pr] = &b[pr] / &piv;
        for r in 0..m {
            if r != pr && !a[r][pivot_col].is_zero() {
                let f = a[r][pivot_col].clone();
                for c in 0..ncols + m {
                    let t = &a[pr][c] * &f;
                    a[r][c] = &a[r][c] - t;
                }
                let t = &b[pr] * &f;
                b[r] = &b[r] - t;
            }
        }
        if !obj[pivot_col].is_zero() {
            let f = obj[pivot_col].clone();
            for c in 0..ncols + m {
                let t = &a[pr][c] * &f;
                obj[c] = &obj[c] - t;
            }
            let t = &b[pr] * &f;
            obj_val = &obj_val - t;
        }
        basis[pr] = pivot_col;
    }

    // Feasible iff all artificials are zero, i.e. objective reached 0.
    if !obj_val.is_zero() {
        return LpOutcome::Infeasible;
    }
    let mut z = vec![BigRational::zero(); ncols];
    for r in 0..m {
        if basis[r] < ncols {
            z[basis[r]] = b[r].clone();
        }
    }
    let point = (0..nvars).map(|v| &z[v * 2] - &z[v * 2 + 1]).collect();
    LpOutcome::Feasible(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coefs: Vec<i64>, constant: i64) -> LinRow {
        LinRow { coefs, constant, rel: Rel::Ge }
    }
    fn eq(coefs: Vec<i64>, constant: i64) -> LinRow {
        LinRow { coefs, constant, rel: Rel::Eq }
    }

    #[test]
    fn contradictory_halves_are_infeasible() {
        // x >= 1 and -x >= 0
        let rows = vec![ge(vec![1], -1), ge(vec![-1], 0)];
        assert_eq!(lp_feasible(1, &rows), LpOutcome::Infeasible);
    }

    #[test]
    fn negative_solutions_are_found() {
        // x <= -2, x >= -5
        let rows = vec![ge(vec![-1], -2), ge(vec![1], 5)];
        match lp_feasible(1, &rows) {
            LpOutcome::Feasible(p) => {
                assert!(p[0] <= rat(-2) && p[0] >= rat(-5), "{:?}", p);
            }
            other => panic!("expected feasible, got {:?}", other),
        }
    }

    #[test]
    fn equality_chain() {
        // x = y + 1, y = 3  =>  feasible with x = 4
        let rows = vec![eq(vec![1, -1], -1), eq(vec![0, 1], -3)];
        match lp_feasible(2, &rows) {
            LpOutcome::Feasible(p) => {
                assert_eq!(p[0], rat(4));
                assert_eq!(p[1], rat(3));
            }
            other => panic!("expected feasible, got {:?}", other),
        }
    }

    #[test]
    fn rational_only_point_exists() {
        // 2x = 1 is rationally feasible.
        let rows = vec![eq(vec![2], -1)];
        assert!(matches!(lp_feasible(1, &rows), LpOutcome::Feasible(_)));
    }
}
