//! Exact solver for small equality-form linear programs
//! `optimize cᵀx subject to A x = b, x ≥ 0`.
//!
//! The optimum of a bounded feasible LP is attained at a basic feasible
//! solution, so for a handful of variables it is enough to enumerate every
//! basis, solve the square system and keep the best feasible vertex.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-14;
const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    /// Rows of `a` must all have the same length; `a.len() == b.len()`.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let n = a.first().map_or(0, Vec::len);
        if a.len() != b.len() || a.iter().any(|r| r.len() != n) || n == 0 {
            return Err(Error::Invalid("malformed constraint matrix".into()));
        }
        if a.len() > n {
            return Err(Error::Invalid("more equality constraints than variables".into()));
        }
        Ok(Self { a, b, n })
    }

    pub fn maximize(&self, objective: &[f64]) -> Result<LpSolution> {
        self.optimize(objective, 1.0)
    }

    pub fn minimize(&self, objective: &[f64]) -> Result<LpSolution> {
        let mut s = self.optimize(objective, -1.0)?;
        s.value = -s.value;
        Ok(s)
    }

    fn optimize(&self, objective: &[f64], sign: f64) -> Result<LpSolution> {
        if objective.len() != self.n {
            return Err(Error::Invalid("objective length mismatch".into()));
        }
        let m = self.a.len();
        let mut best: Option<LpSolution> = None;
        for basis in combinations(self.n, m) {
            let Some(xb) = self.solve_basis(&basis) else {
                continue;
            };
            if xb.iter().any(|&v| v < -FEAS_TOL) {
                continue;
            }
            let mut x = vec![0.0; self.n];
            for (&j, &v) in basis.iter().zip(&xb) {
                x[j] = v.max(0.0);
            }
            let value = sign * x.iter().zip(objective).map(|(xi, ci)| xi * ci).sum::<f64>();
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(LpSolution { x, value });
            }
        }
        best.ok_or_else(|| Error::Invalid("linear program is infeasible".into()))
    }

    /// Gaussian elimination with partial pivoting on the basis columns.
    fn solve_basis(&self, basis: &[usize]) -> Option<Vec<f64>> {
        let m = basis.len();
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row: Vec<f64> = basis.iter().map(|&j| self.a[i][j]).collect();
                row.push(self.b[i]);
                row
            })
            .collect();
        for col in 0..m {
            let pivot = (col..m).max_by(|&r, &s| aug[r][col].abs().total_cmp(&aug[s][col].abs()))?;
            if aug[pivot][col].abs() < PIVOT_TOL {
                return None;
            }
            aug.swap(col, pivot);
            for r in 0..m {
                if r != col {
                    let f = aug[r][col] / aug[col][col];
                    if f != 0.0 {
                        let pivot_row = aug[col].clone();
                        for (x, p) in aug[r][col..].iter_mut().zip(&pivot_row[col..]) {
                            *x -= f * p;
                        }
                    }
                }
            }
        }
        Some((0..m).map(|i| aug[i][m] / aug[i][i]).collect())
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(4, 3).len(), 4);
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn simplex_corner() {
        // max x0 + 2 x1 on the probability simplex in R^3
        let lp = LinearProgram::new(vec![vec![1.0, 1.0, 1.0]], vec![1.0]).unwrap();
        let s = lp.maximize(&[1.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.value, 2.0);
        assert_eq!(s.x, vec![0.0, 1.0, 0.0]);
        let s = lp.minimize(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(s.value, 0.5);
    }

    #[test]
    fn infeasible_and_malformed() {
        let lp = LinearProgram::new(vec![vec![1.0, 1.0]], vec![-1.0]).unwrap();
        assert!(lp.maximize(&[1.0, 0.0]).is_err());
        assert!(LinearProgram::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
        assert!(LinearProgram::new(vec![vec![1.0]; 3], vec![0.0; 3]).is_err());
    }
}
