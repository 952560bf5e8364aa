//! Linear complementarity problems: find `z >= 0` with `w = M z + q >= 0`
//! and `z' w = 0`.
//!
//! The contact model only ever needs the scalar case, which has a closed
//! form. Lemke's complementary pivoting method is kept for cross-checking
//! and for problems with several coupled constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::LcpError;

/// Default pivot budget for [`solve_lcp_lemke`] callers that do not care.
pub const DEFAULT_MAX_PIVOTS: usize = 1000;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    pub m: DMatrix<f64>,
    pub q: DVector<f64>,
}

impl LcpProblem {
    pub fn new(m: DMatrix<f64>, q: DVector<f64>) -> Result<Self, LcpError> {
        if m.nrows() != m.ncols() || m.nrows() != q.len() || q.is_empty() {
            return Err(LcpError::Dimension {
                rows: m.nrows(),
                cols: m.ncols(),
                q_len: q.len(),
            });
        }
        Ok(Self { m, q })
    }

    pub fn scalar(m: f64, q: f64) -> Self {
        Self {
            m: DMatrix::from_element(1, 1, m),
            q: DVector::from_element(1, q),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn slack(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.m * z + &self.q
    }

    /// Largest violation of `z >= 0`, `w >= 0` and `|z_i w_i| = 0`.
    pub fn residual(&self, z: &DVector<f64>) -> f64 {
        let w = self.slack(z);
        z.iter()
            .zip(w.iter())
            .map(|(&zi, &wi)| (-zi).max(-wi).max((zi * wi).abs()))
            .fold(0.0, f64::max)
    }
}

/// Normal-force solution of a scalar problem together with its slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSolution {
    pub lambda: f64,
    pub w: f64,
}

/// Closed-form solution of the scalar problem `0 <= lambda ⊥ M lambda + q >= 0`.
pub fn solve_scalar(m: f64, q: f64) -> Result<ScalarSolution, LcpError> {
    if m.is_nan() || m <= 0.0 || !m.is_finite() {
        return Err(LcpError::NonPositive(m));
    }
    if q >= 0.0 {
        Ok(ScalarSolution { lambda: 0.0, w: q })
    } else {
        Ok(ScalarSolution { lambda: -q / m, w: 0.0 })
    }
}

pub fn solve_lcp_scalar(problem: &LcpProblem) -> Result<ScalarSolution, LcpError> {
    if problem.dim() != 1 || problem.m.nrows() != 1 || problem.m.ncols() != 1 {
        return Err(LcpError::Dimension {
            rows: problem.m.nrows(),
            cols: problem.m.ncols(),
            q_len: problem.q.len(),
        });
    }
    solve_scalar(problem.m[(0, 0)], problem.q[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemkeSolution {
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub pivots: usize,
}

/// Lemke's method with the all-ones covering vector.
pub fn solve_lcp_lemke(problem: &LcpProblem, max_pivots: usize) -> Result<LemkeSolution, LcpError> {
    let n = problem.dim();
    if problem.m.nrows() != n || problem.m.ncols() != n {
        return Err(LcpError::Dimension {
            rows: problem.m.nrows(),
            cols: problem.m.ncols(),
            q_len: n,
        });
    }
    if problem.q.iter().all(|&qi| qi >= 0.0) {
        return Ok(LemkeSolution {
            z: DVector::zeros(n),
            w: problem.q.clone(),
            pivots: 0,
        });
    }

    // Columns: w_0..w_{n-1}, z_0..z_{n-1}, z0 (artificial), rhs.
    // Rows encode I w - M z - d z0 = q.
    let z0_col = 2 * n;
    let rhs = 2 * n + 1;
    let mut t = DMatrix::<f64>::zeros(n, 2 * n + 2);
    for i in 0..n {
        t[(i, i)] = 1.0;
        for j in 0..n {
            t[(i, n + j)] = -problem.m[(i, j)];
        }
        t[(i, z0_col)] = -1.0;
        t[(i, rhs)] = problem.q[i];
    }
    let mut basis: Vec<usize> = (0..n).collect();

    let complement = |var: usize| if var < n { var + n } else { var - n };

    let first = (0..n)
        .min_by(|&a, &b| problem.q[a].total_cmp(&problem.q[b]))
        .expect("non-empty");
    pivot(&mut t, first, z0_col);
    let mut leaving = basis[first];
    basis[first] = z0_col;
    let mut pivots = 1;

    loop {
        let entering = complement(leaving);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let a = t[(i, entering)];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = t[(i, rhs)] / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                    let prefer = basis[i] == z0_col || (basis[bi] != z0_col && basis[i] < basis[bi]);
                    if (ratio < br && !tie) || (tie && prefer) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        let Some((row, _)) = best else {
            return Err(LcpError::RayTermination(pivots));
        };
        if pivots >= max_pivots {
            return Err(LcpError::PivotLimit(max_pivots));
        }
        pivot(&mut t, row, entering);
        pivots += 1;
        leaving = basis[row];
        basis[row] = entering;
        if leaving == z0_col {
            break;
        }
    }

    let mut z = DVector::zeros(n);
    for (row, &var) in basis.iter().enumerate() {
        if (n..2 * n).contains(&var) {
            z[var - n] = t[(row, rhs)].max(0.0);
        }
    }
    let w = problem.slack(&z);
    Ok(LemkeSolution { z, w, pivots })
}

fn pivot(t: &mut DMatrix<f64>, row: usize, col: usize) {
    let p = t[(row, col)];
    let ncols = t.ncols();
    for j in 0..ncols {
        t[(row, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i == row {
            continue;
        }
        let factor = t[(i, col)];
        if factor == 0.0 {
            continue;
        }
        for j in 0..ncols {
            let v = t[(row, j)];
            t[(i, j)] -= factor * v;
        }
        t[(i, col)] = 0.0;
    }
}
