//! Dense two-phase simplex solver for the small decoy-state linear programs
//! (a few hundred variables and constraints). Bland's rule guarantees
//! termination; rows are rescaled for conditioning.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    /// Degenerate pivot state that the solver could not resolve.
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Le,
    Ge,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    cmp: Cmp,
    rhs: f64,
}

/// Linear program over `n_vars` non-negative variables with <= / >= rows.
/// Upper bounds such as x <= 1 are expressed as ordinary rows.
#[derive(Debug, Clone)]
pub struct LpProblem {
    n_vars: usize,
    rows: Vec<Row>,
}

const EPS: f64 = 1e-9;

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem { n_vars, rows: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn add_le(&mut self, coeffs: &[f64], rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push(Row { coeffs: coeffs.into(), cmp: Cmp::Le, rhs });
    }

    pub fn add_ge(&mut self, coeffs: &[f64], rhs: f64) {
        assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push(Row { coeffs: coeffs.into(), cmp: Cmp::Ge, rhs });
    }

    /// Maximize `obj . x` subject to the added rows and x >= 0.
    pub fn maximize(&self, obj: &[f64]) -> Result<(f64, Vec<f64>), LpError> {
        assert_eq!(obj.len(), self.n_vars);
        self.solve(obj, false)
    }

    /// Minimize `obj . x` subject to the added rows and x >= 0.
    pub fn minimize(&self, obj: &[f64]) -> Result<(f64, Vec<f64>), LpError> {
        assert_eq!(obj.len(), self.n_vars);
        let (v, x) = self.solve(obj, true)?;
        Ok((-v, x))
    }

    fn solve(&self, obj: &[f64], negate: bool) -> Result<(f64, Vec<f64>), LpError> {
        let n = self.n_vars;
        let m = self.rows.len();

        // normalize each row, flip sign so rhs >= 0
        let mut norm: Vec<(Vec<f64>, Cmp, f64)> = Vec::with_capacity(m);
        for row in &self.rows {
            let mut scale = row.rhs.abs();
            for &c in &row.coeffs {
                scale = scale.max(c.abs());
            }
            if scale <= 0.0 {
                scale = 1.0;
            }
            let mut coeffs: Vec<f64> = row.coeffs.iter().map(|c| c / scale).collect();
            let mut rhs = row.rhs / scale;
            let mut cmp = row.cmp;
            if rhs < 0.0 {
                for c in coeffs.iter_mut() {
                    *c = -*c;
                }
                rhs = -rhs;
                cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                };
            }
            norm.push((coeffs, cmp, rhs));
        }

        let n_art = norm.iter().filter(|r| r.1 == Cmp::Ge).count();
        let cols = n + m + n_art; // vars, slack/surplus, artificials
        let mut t = vec![vec![0.0f64; cols + 1]; m];
        let mut basis = vec![0usize; m];
        let mut art = 0usize;
        let art_start = n + m;
        for (i, (coeffs, cmp, rhs)) in norm.iter().enumerate() {
            t[i][..n].copy_from_slice(coeffs);
            t[i][cols] = *rhs;
            match cmp {
                Cmp::Le => {
                    t[i][n + i] = 1.0;
                    basis[i] = n + i;
                }
                Cmp::Ge => {
                    t[i][n + i] = -1.0;
                    t[i][art_start + art] = 1.0;
                    basis[i] = art_start + art;
                    art += 1;
                }
            }
        }

        // phase 1: minimize the artificial total
        if n_art > 0 {
            let mut cost = vec![0.0f64; cols];
            for j in art_start..cols {
                cost[j] = 1.0;
            }
            let v = run(&mut t, &mut basis, &cost, cols, art_start)?;
            if v > 1e-7 {
                return Err(LpError::Infeasible);
            }
            // pivot any artificial still basic (at zero) out if possible
            for i in 0..m {
                if basis[i] >= art_start {
                    if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > EPS) {
                        pivot(&mut t, &mut basis, i, j, cols);
                    }
                }
            }
        }

        // phase 2: minimize -obj (maximize obj); artificials barred
        let mut cost = vec![0.0f64; cols];
        for j in 0..n {
            cost[j] = if negate { obj[j] } else { -obj[j] };
        }
        let v = run(&mut t, &mut basis, &cost, cols, art_start)?;

        let mut x = vec![0.0f64; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = t[i][cols];
            }
        }
        Ok((-v, x))
    }
}

/// Minimize `cost . (all columns)` on the current tableau by Bland's rule.
/// Columns at `barred` and beyond may not enter the basis. Returns the
/// attained cost value.
fn run(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
    barred: usize,
) -> Result<f64, LpError> {
    let m = t.len();
    let max_iter = 50 * (m + cols) + 1000;
    for _ in 0..max_iter {
        // reduced costs for non-basic candidate columns
        let mut entering = None;
        for j in 0..barred {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                red -= cost[basis[i]] * t[i][j];
            }
            if red < -EPS {
                entering = Some(j);
                break; // Bland: smallest index
            }
        }
        let j = match entering {
            Some(j) => j,
            None => {
                let mut v = 0.0;
                for i in 0..m {
                    v += cost[basis[i]] * t[i][cols];
                }
                return Ok(v);
            }
        };
        // ratio test, Bland tie-break by basis index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > EPS {
                let ratio = t[i][cols] / t[i][j];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.ok_or(LpError::Unbounded)?;
        pivot(t, basis, r, j, cols);
    }
    Err(LpError::Numerical)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, j: usize, cols: usize) {
    let p = t[r][j];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    for i in 0..t.len() {
        if i != r && t[i][j].abs() > 0.0 {
            let f = t[i][j];
            for k in 0..=cols {
                t[i][k] -= f * t[r][k];
            }
        }
    }
    basis[r] = j;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LpProblem::new(2);
        lp.add_le(&[1.0, 0.0], 4.0);
        lp.add_le(&[0.0, 2.0], 12.0);
        lp.add_le(&[3.0, 2.0], 18.0);
        let (v, x) = lp.maximize(&[3.0, 5.0]).unwrap();
        assert!((v - 36.0).abs() < 1e-7);
        assert!((x[0] - 2.0).abs() < 1e-7 && (x[1] - 6.0).abs() < 1e-7);
    }

    #[test]
    fn minimum_with_ge_rows() {
        // min x + y s.t. x + 2y >= 4, 3x + y >= 6
        let mut lp = LpProblem::new(2);
        lp.add_ge(&[1.0, 2.0], 4.0);
        lp.add_ge(&[3.0, 1.0], 6.0);
        let (v, x) = lp.minimize(&[1.0, 1.0]).unwrap();
        assert!((v - 2.8).abs() < 1e-7, "v = {v}, x = {x:?}");
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LpProblem::new(1);
        lp.add_le(&[1.0], 1.0);
        lp.add_ge(&[1.0], 2.0);
        assert_eq!(lp.maximize(&[1.0]).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LpProblem::new(1);
        assert_eq!(lp.maximize(&[1.0]).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn box_bound_binds() {
        let mut lp = LpProblem::new(3);
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            lp.add_le(&e, 1.0);
        }
        lp.add_le(&[1.0, 1.0, 1.0], 2.5);
        let (v, _) = lp.maximize(&[1.0, 1.0, 1.0]).unwrap();
        assert!((v - 2.5).abs() < 1e-7);
    }

    #[test]
    fn planted_instances_stay_feasible_and_bounded() {
        // random planted x in [0,1]^n; interval rows around exact products
        // must keep the planted point feasible, so per-coordinate maxima are
        // upper bounds on the planted values
        let mut rng = Rng::new(99);
        for trial in 0..50 {
            let n = 4 + (trial % 4);
            let planted: alloc::vec::Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let mut lp = LpProblem::new(n);
            for _ in 0..6 {
                let coeffs: alloc::vec::Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
                let exact: f64 = coeffs.iter().zip(&planted).map(|(c, x)| c * x).sum();
                let margin = 0.05 * exact + 1e-9;
                lp.add_le(&coeffs, exact + margin);
                lp.add_ge(&coeffs, exact - margin);
            }
            for j in 0..n {
                let mut e = alloc::vec![0.0; n];
                e[j] = 1.0;
                lp.add_le(&e, 1.0);
            }
            for j in 0..n {
                let mut obj = alloc::vec![0.0; n];
                obj[j] = 1.0;
                let (v, _) = lp.maximize(&obj).unwrap();
                assert!(
                    v >= planted[j] - 1e-7,
                    "trial {trial}: bound {v} below planted {}",
                    planted[j]
                );
                assert!(v <= 1.0 + 1e-7);
            }
        }
    }

    #[test]
    fn degenerate_rows_terminate() {
        // duplicate constraints provoke degenerate pivots; Bland must finish
        let mut lp = LpProblem::new(2);
        for _ in 0..5 {
            lp.add_le(&[1.0, 1.0], 1.0);
            lp.add_ge(&[1.0, 1.0], 1.0);
        }
        let (v, _) = lp.maximize(&[1.0, 2.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }
}
