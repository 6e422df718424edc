//! Preconditioned conjugate gradients for `(σ I + A + D) x = b` with `D` a
//! nonnegative diagonal.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{dot, OperatorMatrix};

/// Largest system factored directly for use as a preconditioner.
pub const CHOLESKY_LIMIT: usize = 1400;

/// Default relative residual target.
pub const DEFAULT_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
enum Preconditioner {
    /// Cholesky factor of `σ I + A`.
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// `σ + diag(A)`; the extra diagonal is added per solve.
    Jacobi,
}

/// Solver for `σ I + A + D` with `σ` and `A` fixed and `D >= 0` supplied per
/// call. The factorization of `σ I + A` (when small enough) is reused.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    op: Arc<OperatorMatrix>,
    shift: f64,
    tolerance: f64,
    max_iterations: usize,
    precond: Preconditioner,
}

impl ShiftedSolver {
    pub fn new(op: Arc<OperatorMatrix>, shift: f64) -> Result<Self> {
        Self::with_tolerance(op, shift, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(op: Arc<OperatorMatrix>, shift: f64, tolerance: f64) -> Result<Self> {
        let size = op.size();
        let precond = match op.dense_values() {
            Some(values) if size <= CHOLESKY_LIMIT => {
                let mut m = DMatrix::from_row_slice(size, size, values);
                for i in 0..size {
                    m[(i, i)] += shift;
                }
                Preconditioner::Cholesky(m.cholesky().ok_or(Error::NotPositiveDefinite)?)
            }
            _ => Preconditioner::Jacobi,
        };
        Ok(Self {
            op,
            shift,
            tolerance,
            max_iterations: (4 * size).max(2000),
            precond,
        })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `y = (σ I + A + D) x`.
    pub fn apply(&self, extra: Option<&[f64]>, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.op.apply_into(x, y)?;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += self.shift * x[i];
            if let Some(d) = extra {
                *yi += d[i] * x[i];
            }
        }
        Ok(())
    }

    fn precondition(&self, extra: Option<&[f64]>, r: &[f64]) -> Vec<f64> {
        match &self.precond {
            Preconditioner::Cholesky(c) => {
                c.solve(&DVector::from_column_slice(r)).as_slice().to_vec()
            }
            Preconditioner::Jacobi => {
                let diag = self.op.diagonal();
                r.iter()
                    .enumerate()
                    .map(|(i, &ri)| {
                        let d = diag[i] + self.shift + extra.map_or(0.0, |e| e[i]);
                        ri / d
                    })
                    .collect()
            }
        }
    }

    /// Solves in place, starting from the incoming `x`.
    pub fn solve(&self, extra: Option<&[f64]>, rhs: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        let size = self.op.size();
        for len in [rhs.len(), x.len()]
            .into_iter()
            .chain(extra.map(|e| e.len()))
        {
            if len != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    actual: len,
                });
            }
        }
        let b_norm = dot(rhs, rhs).sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let mut r = vec![0.0; size];
        self.apply(extra, x, &mut r)?;
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let mut res = dot(&r, &r).sqrt() / b_norm;
        if res <= self.tolerance {
            return Ok(SolveStats {
                iterations: 0,
                relative_residual: res,
            });
        }
        let mut z = self.precondition(extra, &r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; size];
        for it in 1..=self.max_iterations {
            self.apply(extra, &p, &mut ap)?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let alpha = rz / pap;
            for i in 0..size {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = dot(&r, &r).sqrt() / b_norm;
            if res <= self.tolerance {
                return Ok(SolveStats {
                    iterations: it,
                    relative_residual: res,
                });
            }
            z = self.precondition(extra, &r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..size {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::LinearSolverStagnation {
            iterations: self.max_iterations,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::operators::{assemble_mixed, OperatorMatrix, DENSE_LIMIT};

    fn residual(s: &ShiftedSolver, d: Option<&[f64]>, b: &[f64], x: &[f64]) -> f64 {
        let mut y = vec![0.0; b.len()];
        s.apply(d, x, &mut y).unwrap();
        let r: Vec<f64> = y.iter().zip(b).map(|(a, b)| a - b).collect();
        dot(&r, &r).sqrt() / dot(b, b).sqrt()
    }

    #[test]
    fn cholesky_and_jacobi_paths_agree() {
        let g = build_grid(2, 9).unwrap();
        let dense = Arc::new(assemble_mixed(&g, 0.5).unwrap());
        let free = Arc::new(OperatorMatrix::assemble(&g, true, Some(0.5), 0).unwrap());
        let b: Vec<f64> = (0..g.interior_count())
            .map(|i| 1.0 + (i % 5) as f64)
            .collect();
        let d: Vec<f64> = (0..g.interior_count())
            .map(|i| (i % 3) as f64 * 50.0)
            .collect();
        let a = ShiftedSolver::new(dense, 10.0).unwrap();
        let j = ShiftedSolver::new(free, 10.0).unwrap();
        let mut xa = vec![0.0; b.len()];
        let mut xj = vec![0.0; b.len()];
        a.solve(Some(&d), &b, &mut xa).unwrap();
        j.solve(Some(&d), &b, &mut xj).unwrap();
        assert!(residual(&a, Some(&d), &b, &xa) <= 1e-11);
        assert!(residual(&j, Some(&d), &b, &xj) <= 1e-11);
        for (p, q) in xa.iter().zip(&xj) {
            assert!((p - q).abs() <= 1e-9 * p.abs().max(1e-3));
        }
    }

    #[test]
    fn unshifted_solve_converges() {
        let g = build_grid(1, 200).unwrap();
        let op = Arc::new(OperatorMatrix::assemble(&g, true, Some(0.3), DENSE_LIMIT).unwrap());
        let s = ShiftedSolver::new(op, 0.0).unwrap();
        let b = vec![1.0; g.interior_count()];
        let mut x = vec![0.0; b.len()];
        let stats = s.solve(None, &b, &mut x).unwrap();
        assert!(stats.relative_residual <= 1e-11);
        assert!(x.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = build_grid(1, 10).unwrap();
        let s = ShiftedSolver::new(Arc::new(assemble_mixed(&g, 0.5).unwrap()), 1.0).unwrap();
        let mut x = vec![3.0; 9];
        s.solve(None, &[0.0; 9], &mut x).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = build_grid(1, 10).unwrap();
        let s = ShiftedSolver::new(Arc::new(assemble_mixed(&g, 0.5).unwrap()), 1.0).unwrap();
        let mut x = vec![0.0; 9];
        assert!(matches!(
            s.solve(None, &[1.0; 4], &mut x),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
