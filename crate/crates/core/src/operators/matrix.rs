use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{abs_offset, normalization_constant, KernelWeights};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Above this many unknowns the operator is applied matrix-free.
pub const DENSE_LIMIT: usize = 4096;

/// Structural summary computed once at assembly.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorDiagnostics {
    /// `max |A_ij - A_ji| / max |A|`.
    pub symmetry_defect: f64,
    /// Largest off-diagonal entry (must be `<= 0`).
    pub max_offdiagonal: f64,
    pub min_diagonal: f64,
    pub min_row_sum: f64,
    pub max_abs: f64,
}

impl OperatorDiagnostics {
    /// Symmetric, nonpositive off-diagonal, positive diagonal, nonnegative row sums.
    pub fn is_m_matrix(&self) -> bool {
        self.symmetry_defect <= 1e-12
            && self.max_offdiagonal <= 0.0
            && self.min_diagonal > 0.0
            && self.min_row_sum >= 0.0
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<f64>),
    MatrixFree,
}

/// Discrete `-Δ_h`, `(-Δ)^s_h`, or their sum on the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: Grid,
    local: bool,
    s: Option<f64>,
    c_ns: f64,
    kernel: Option<Arc<KernelWeights>>,
    diagonal: Vec<f64>,
    row_sums: Vec<f64>,
    storage: Storage,
    diagnostics: OperatorDiagnostics,
}

/// Second-order `2n+1` point Laplacian with homogeneous Dirichlet elimination.
pub fn assemble_local_laplacian(grid: &Grid) -> OperatorMatrix {
    OperatorMatrix::assemble(grid, true, None, DENSE_LIMIT).expect("local assembly cannot fail")
}

/// Integral fractional Laplacian of order `s` with zero exterior values.
pub fn assemble_fractional_laplacian(grid: &Grid, s: f64) -> Result<OperatorMatrix> {
    OperatorMatrix::assemble(grid, false, Some(s), DENSE_LIMIT)
}

/// Combined operator `-Δ_h + (-Δ)^s_h`.
pub fn assemble_mixed(grid: &Grid, s: f64) -> Result<OperatorMatrix> {
    OperatorMatrix::assemble(grid, true, Some(s), DENSE_LIMIT)
}

/// `A u`, with a size check.
pub fn apply_operator(a: &OperatorMatrix, u: &[f64]) -> Result<Vec<f64>> {
    a.apply(u)
}

impl OperatorMatrix {
    /// Assembles with an explicit dense/matrix-free threshold.
    pub fn assemble(grid: &Grid, local: bool, s: Option<f64>, dense_limit: usize) -> Result<Self> {
        let (kernel, c_ns) = match s {
            Some(s) => (
                Some(Arc::new(KernelWeights::for_operator(grid, s)?)),
                normalization_constant(grid.dim(), s)?,
            ),
            None => (None, 0.0),
        };
        let size = grid.interior_count();
        let mut op = OperatorMatrix {
            grid: grid.clone(),
            local,
            s,
            c_ns,
            kernel,
            diagonal: Vec::new(),
            row_sums: Vec::new(),
            storage: Storage::MatrixFree,
            diagnostics: OperatorDiagnostics {
                symmetry_defect: 0.0,
                max_offdiagonal: 0.0,
                min_diagonal: 0.0,
                min_row_sum: 0.0,
                max_abs: 0.0,
            },
        };
        op.diagonal = (0..size)
            .into_par_iter()
            .map(|i| op.diagonal_entry(i))
            .collect();
        op.row_sums = (0..size)
            .into_par_iter()
            .map(|i| op.row_sum_entry(i))
            .collect();
        if size <= dense_limit {
            let values: Vec<f64> = (0..size)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let op = &op;
                    (0..size).map(move |j| op.entry_raw(i, j))
                })
                .collect();
            op.storage = Storage::Dense(values);
        }
        op.diagnostics = op.compute_diagnostics();
        Ok(op)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.grid.interior_count()
    }

    /// Fractional order, `None` for the purely local operator.
    pub fn order(&self) -> Option<f64> {
        self.s
    }

    pub fn has_local_part(&self) -> bool {
        self.local
    }

    pub fn normalization(&self) -> f64 {
        self.c_ns
    }

    pub fn kernel(&self) -> Option<&KernelWeights> {
        self.kernel.as_deref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn diagnostics(&self) -> &OperatorDiagnostics {
        &self.diagnostics
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `A 1` over the interior nodes.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Dense row-major entries, if stored densely.
    pub fn dense_values(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(v) => Some(v),
            Storage::MatrixFree => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[i * self.size() + j],
            Storage::MatrixFree => self.entry_raw(i, j),
        }
    }

    fn is_nearest(&self, i: usize, j: usize) -> bool {
        let off = abs_offset(&self.grid, i, j);
        off[..self.grid.dim()].iter().sum::<usize>() == 1
    }

    fn entry_raw(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal_entry(i);
        }
        let nearest = self.is_nearest(i, j);
        let mut value = 0.0;
        if self.local && nearest {
            value -= 1.0 / (self.grid.h() * self.grid.h());
        }
        if let Some(k) = &self.kernel {
            let mut w = k.pair_weight(&self.grid, i, j);
            if nearest {
                w += 0.5 * k.near_diagonal();
            }
            value -= self.c_ns * w;
        }
        value
    }

    fn diagonal_entry(&self, i: usize) -> f64 {
        let n = self.grid.dim() as f64;
        let mut value = 0.0;
        if self.local {
            value += 2.0 * n / (self.grid.h() * self.grid.h());
        }
        if let Some(k) = &self.kernel {
            let pairs: f64 = (0..self.size())
                .filter(|&j| j != i)
                .map(|j| k.pair_weight(&self.grid, i, j))
                .sum();
            value += self.c_ns * (pairs + n * k.near_diagonal() + k.tail(i));
        }
        value
    }

    fn boundary_neighbours(&self, i: usize) -> usize {
        let dim = self.grid.dim();
        (0..dim)
            .flat_map(|axis| [-1isize, 1].map(|dir| (axis, dir)))
            .filter(|&(axis, dir)| self.grid.neighbor(i, axis, dir).is_none())
            .count()
    }

    /// Row sums from the structure: boundary couplings plus the tail.
    fn row_sum_entry(&self, i: usize) -> f64 {
        let b = self.boundary_neighbours(i) as f64;
        let mut value = 0.0;
        if self.local {
            value += b / (self.grid.h() * self.grid.h());
        }
        if let Some(k) = &self.kernel {
            value += self.c_ns * (k.tail(i) + 0.5 * b * k.near_diagonal());
        }
        value
    }

    fn compute_diagnostics(&self) -> OperatorDiagnostics {
        let size = self.size();
        let min_diagonal = self.diagonal.iter().copied().fold(f64::INFINITY, f64::min);
        let min_row_sum = self.row_sums.iter().copied().fold(f64::INFINITY, f64::min);
        match &self.storage {
            Storage::Dense(v) => {
                let (max_abs, max_off, defect) = (0..size)
                    .into_par_iter()
                    .map(|i| {
                        let mut max_abs = 0f64;
                        let mut max_off = f64::NEG_INFINITY;
                        let mut defect = 0f64;
                        for j in 0..size {
                            let a = v[i * size + j];
                            max_abs = max_abs.max(a.abs());
                            if j != i {
                                max_off = max_off.max(a);
                                defect = defect.max((a - v[j * size + i]).abs());
                            }
                        }
                        (max_abs, max_off, defect)
                    })
                    .reduce(
                        || (0.0, f64::NEG_INFINITY, 0.0),
                        |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)),
                    );
                OperatorDiagnostics {
                    symmetry_defect: if max_abs > 0.0 { defect / max_abs } else { 0.0 },
                    max_offdiagonal: max_off,
                    min_diagonal,
                    min_row_sum,
                    max_abs,
                }
            }
            Storage::MatrixFree => {
                // entries depend on |l_i - l_j| only, so symmetry holds by construction;
                // the largest off-diagonal is the weakest coupling, i.e. the farthest offset
                let far = (0..size).map(|j| self.entry_raw(0, j)).skip(1);
                let max_off = far.fold(f64::NEG_INFINITY, f64::max);
                let max_abs = self.diagonal.iter().copied().fold(0.0, f64::max);
                OperatorDiagnostics {
                    symmetry_defect: 0.0,
                    max_offdiagonal: max_off,
                    min_diagonal,
                    min_row_sum,
                    max_abs,
                }
            }
        }
    }

    /// `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.size()];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    /// `out = A u`, deterministic regardless of thread count.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let size = self.size();
        if u.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                actual: u.len(),
            });
        }
        if out.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                actual: out.len(),
            });
        }
        match &self.storage {
            Storage::Dense(v) => {
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    *o = dot(&v[i * size..(i + 1) * size], u);
                });
            }
            Storage::MatrixFree => {
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let mut acc = self.diagonal[i] * u[i];
                    for (j, &uj) in u.iter().enumerate() {
                        if j != i {
                            acc += self.entry_raw(i, j) * uj;
                        }
                    }
                    *o = acc;
                });
            }
        }
        Ok(())
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let av = self.apply(v)?;
        if u.len() != av.len() {
            return Err(Error::DimensionMismatch {
                expected: av.len(),
                actual: u.len(),
            });
        }
        Ok(dot(u, &av))
    }

    /// Writes the dense operator as little-endian `f64` row-major values plus a
    /// JSON sidecar `{n, N, s, layout}` next to it.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let size = self.size();
        let mut w = BufWriter::new(File::create(path)?);
        for i in 0..size {
            for j in 0..size {
                w.write_all(&self.entry(i, j).to_le_bytes())?;
            }
        }
        w.flush()?;
        let sidecar = serde_json::json!({
            "n": self.grid.dim(),
            "N": self.grid.cells_per_axis(),
            "s": self.s,
            "local": self.local,
            "size": size,
            "layout": "row-major f64 little-endian, interior nodes lexicographic with axis 0 fastest",
        });
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }
}

/// Dot product with four interleaved accumulators (fixed summation order).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn local_stencil_values() {
        let g = build_grid(1, 4).unwrap();
        let a = assemble_local_laplacian(&g);
        assert_eq!(a.entry(1, 0), -16.0);
        assert_eq!(a.entry(1, 1), 32.0);
        assert_eq!(a.entry(1, 2), -16.0);
        let ones = vec![1.0; 3];
        let r = a.apply(&ones).unwrap();
        assert_eq!(r[1], 0.0);
        assert!(r[0] > 0.0 && r[2] > 0.0);
    }

    #[test]
    fn local_quadratic_is_exact() {
        let g = build_grid(1, 16).unwrap();
        let a = assemble_local_laplacian(&g);
        let u: Vec<f64> = (0..g.interior_count())
            .map(|i| {
                let x = g.point(i)[0];
                x * (1.0 - x)
            })
            .collect();
        for v in a.apply(&u).unwrap() {
            assert!((v - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn local_sine_eigenvalue() {
        let g = build_grid(1, 64).unwrap();
        let a = assemble_local_laplacian(&g);
        let u: Vec<f64> = (0..g.interior_count())
            .map(|i| (PI * g.point(i)[0]).sin())
            .collect();
        let au = a.apply(&u).unwrap();
        let h = g.h();
        let discrete = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        for (x, y) in au.iter().zip(&u) {
            assert!((x / y - discrete).abs() < 1e-8 * discrete);
            assert!((x / y - PI * PI).abs() < 0.01 * PI * PI);
        }
    }

    #[test]
    fn fractional_is_m_matrix_across_dimensions() {
        for (dim, n) in [(1, 12), (2, 7), (3, 5)] {
            let g = build_grid(dim, n).unwrap();
            for s in [0.1, 0.3, 0.5, 0.75, 0.95] {
                let a = assemble_fractional_laplacian(&g, s).unwrap();
                let d = a.diagnostics();
                assert!(d.is_m_matrix(), "dim {dim} s {s}: {d:?}");
                assert!(d.min_row_sum > 0.0);
                let mixed = assemble_mixed(&g, s).unwrap();
                assert!(mixed.diagnostics().is_m_matrix());
            }
        }
    }

    #[test]
    fn row_sums_match_matrix() {
        let g = build_grid(2, 6).unwrap();
        let a = assemble_mixed(&g, 0.6).unwrap();
        let ones = vec![1.0; g.interior_count()];
        let r = a.apply(&ones).unwrap();
        for (x, y) in r.iter().zip(a.row_sums()) {
            assert!((x - y).abs() < 1e-10 * a.diagnostics().max_abs);
        }
    }

    #[test]
    fn matrix_free_agrees_with_dense() {
        let g = build_grid(2, 7).unwrap();
        let dense = OperatorMatrix::assemble(&g, true, Some(0.4), DENSE_LIMIT).unwrap();
        let free = OperatorMatrix::assemble(&g, true, Some(0.4), 0).unwrap();
        assert!(dense.is_dense() && !free.is_dense());
        let u: Vec<f64> = (0..g.interior_count())
            .map(|i| (i as f64 * 0.37).sin().abs())
            .collect();
        let a = dense.apply(&u).unwrap();
        let b = free.apply(&u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11 * x.abs().max(1.0));
        }
        assert!(free.diagnostics().is_m_matrix());
    }

    #[test]
    fn fractional_quadratic_is_exact_in_interior_1d() {
        // u = x(1-x) extended by zero; the exact (−Δ)^{1/2} is available in
        // closed form only through the oracle, so here check the half-order
        // operator reproduces its own interior value at two resolutions
        let value = |n: usize| {
            let g = build_grid(1, n).unwrap();
            let a = assemble_fractional_laplacian(&g, 0.5).unwrap();
            let u: Vec<f64> = (0..g.interior_count())
                .map(|i| {
                    let x = g.point(i)[0];
                    x * (1.0 - x)
                })
                .collect();
            a.apply(&u).unwrap()[g.index_of(&[(n / 2) as isize]).unwrap()]
        };
        let coarse = value(64);
        let fine = value(256);
        assert!(
            (coarse - fine).abs() < 2e-3 * fine.abs(),
            "{coarse} vs {fine}"
        );
    }

    #[test]
    fn torsion_benchmark_1d() {
        let g = build_grid(1, 512).unwrap();
        let a = assemble_fractional_laplacian(&g, 0.5).unwrap();
        let u: Vec<f64> = (0..g.interior_count())
            .map(|i| crate::oracle::torsion_profile(g.point(i)[0], 0.5))
            .collect();
        let au = a.apply(&u).unwrap();
        let exact = crate::oracle::torsion_profile_value(1, 0.5, 0.5);
        let worst = (0..g.interior_count())
            .filter(|&i| (g.point(i)[0] - 0.5).abs() <= 0.4)
            .map(|i| (au[i] - exact).abs() / exact)
            .fold(0.0, f64::max);
        assert!(worst <= 0.05, "worst relative error {worst}");
    }

    #[test]
    fn smooth_field_matches_quadrature_oracle() {
        for s in [0.25, 0.5, 0.75] {
            let mut errors = Vec::new();
            for n in [32usize, 64, 128] {
                let g = build_grid(1, n).unwrap();
                let a = assemble_fractional_laplacian(&g, s).unwrap();
                let f = |x: f64| (PI * x).sin();
                let u: Vec<f64> = (0..g.interior_count()).map(|i| f(g.point(i)[0])).collect();
                let au = a.apply(&u).unwrap();
                let err = [n / 4, n / 2]
                    .iter()
                    .map(|&l| {
                        let i = g.index_of(&[l as isize]).unwrap();
                        let exact =
                            crate::oracle::fractional_laplacian_1d(f, g.point(i)[0], s).unwrap();
                        (au[i] - exact).abs() / exact.abs()
                    })
                    .fold(0.0, f64::max);
                errors.push(err);
            }
            eprintln!("s {s}: {errors:?}");
            assert!(errors[2] < 0.01, "s {s}: {errors:?}");
            assert!(errors[2] < errors[0], "s {s}: {errors:?}");
        }
    }

    #[test]
    fn dump_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_grid(1, 5).unwrap();
        let a = assemble_mixed(&g, 0.5).unwrap();
        let path = dir.path().join("op.f64");
        a.dump(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 * 8);
        let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
        assert_eq!(first, a.entry(0, 0));
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("op.json")).unwrap())
                .unwrap();
        assert_eq!(side["N"], 5);
        assert_eq!(side["s"], 0.5);
    }
}
