//! Cell-quadrature weights for the singular kernel `|z|^{-n-α}` on a box grid.
//!
//! The nonlocal integral at node `x_i` is split over the cells `C_j` (cubes of
//! side `h` centred at lattice points). On every interior cell `j != i` the
//! field is frozen at its nodal value, which yields the pair weight
//! `∫_{C_j} |x_i - y|^{-n-α} dy`. Everything outside the union of interior
//! cells carries `u = 0`, so its whole kernel mass collapses into a tail weight
//! `κ_i`. The principal value over the node's own cell is replaced by a
//! second-order Taylor term, realised as a nearest-neighbour difference; its
//! coefficient also absorbs the leading (Laplacian-proportional) defect of the
//! piecewise-constant rule on the remaining cells, so the scheme is consistent
//! for quadratics.
//!
//! Pair weights depend only on the lattice offset, so they live in a table
//! indexed by the per-axis absolute offset. All table entries are computed on
//! the unit lattice and scaled by `h^{-α}`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::grid::{Grid, MAX_DIM};
use crate::quadrature::{adaptive, GaussRule};

/// `c_{n,s} = 4^s s Γ(n/2 + s) / (π^{n/2} Γ(1 - s))`.
pub fn normalization_constant(dim: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!(
            "fractional order must lie in (0, 1) (got {s})"
        )));
    }
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let n = dim as f64;
    Ok(4f64.powf(s) * s * gamma(0.5 * n + s)
        / (std::f64::consts::PI.powf(0.5 * n) * gamma(1.0 - s)))
}

/// Weights of the discretized kernel `|x - y|^{-n-α}` for one grid.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    dim: usize,
    extent: usize,
    s: f64,
    exponent: f64,
    c_ns: f64,
    scale: f64,
    table: Vec<f64>,
    near_diagonal: f64,
    tail: Vec<f64>,
}

impl KernelWeights {
    /// Weights of the fractional Laplacian of order `s` (kernel exponent `α = 2s`).
    pub fn for_operator(grid: &Grid, s: f64) -> Result<Self> {
        let c_ns = normalization_constant(grid.dim(), s)?;
        Self::build(grid, s, 2.0 * s, 2.0, true, c_ns)
    }

    /// Weights of the `W^{s,q}` Gagliardo seminorm (kernel exponent `α = q s`).
    ///
    /// For `q = 2` these coincide with [`KernelWeights::for_operator`] up to
    /// the normalization constant. For other `q` the near-diagonal term keeps
    /// only the own-cell moment `∫_{C_0} |z_1|^q |z|^{-n-qs}`.
    pub fn for_seminorm(grid: &Grid, s: f64, q: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!(
                "fractional order must lie in (0, 1) (got {s})"
            )));
        }
        if !(q >= 1.0) || !q.is_finite() {
            return Err(invalid(format!(
                "seminorm exponent must be a finite q >= 1 (got {q})"
            )));
        }
        if (q - 2.0).abs() < 1e-15 {
            let mut w = Self::for_operator(grid, s)?;
            w.c_ns = 1.0;
            return Ok(w);
        }
        Self::build(grid, s, q * s, q, false, 1.0)
    }

    fn build(
        grid: &Grid,
        s: f64,
        exponent: f64,
        moment_power: f64,
        match_quadratics: bool,
        c_ns: f64,
    ) -> Result<Self> {
        let dim = grid.dim();
        let extent = grid.side();
        let len = extent.pow(dim as u32);
        let cells: Vec<(f64, f64)> = (0..len)
            .into_par_iter()
            .map(|flat| {
                let a = unflatten(flat, extent, dim);
                if a.iter().all(|&x| x == 0) {
                    (0.0, 0.0)
                } else {
                    cell_integrals(&a[..dim], exponent)
                }
            })
            .collect();
        let table: Vec<f64> = cells.iter().map(|c| c.0).collect();

        let mut near_diagonal = own_cell_moment(dim, exponent, moment_power);
        if match_quadratics {
            // Σ over all signed offsets of ∫_{C_d} (|z|^2 - |d|^2) K, divided by n
            let defect: f64 = (0..len)
                .map(|flat| {
                    let a = unflatten(flat, extent, dim);
                    let mult: f64 = a[..dim]
                        .iter()
                        .map(|&x| if x == 0 { 1.0 } else { 2.0 })
                        .product();
                    mult * cells[flat].1
                })
                .sum();
            near_diagonal += defect / dim as f64;
            let nearest = table[1];
            if nearest + 0.5 * near_diagonal < 0.0 {
                log::warn!(
                    "near-diagonal correction {near_diagonal} would flip the sign of the nearest-neighbour coupling; clamped"
                );
                near_diagonal = -2.0 * nearest;
            }
        }

        let tail = tail_weights(grid, exponent);
        Ok(Self {
            dim,
            extent,
            s,
            exponent,
            c_ns,
            scale: grid.h().powf(-exponent),
            table,
            near_diagonal,
            tail,
        })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// Kernel exponent `α` in `|z|^{-n-α}`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Normalization constant carried by these weights (1 for seminorm weights).
    pub fn c_ns(&self) -> f64 {
        self.c_ns
    }

    /// `h^{-α}`, the factor between unit-lattice and physical weights.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unit-lattice cell integral for the per-axis absolute offset `a`.
    pub fn table_entry(&self, a: &[usize]) -> f64 {
        let mut flat = 0;
        let mut stride = 1;
        for &x in a.iter().take(self.dim) {
            flat += x * stride;
            stride *= self.extent;
        }
        self.table[flat]
    }

    /// Physical pair weight between distinct interior nodes (without the
    /// near-diagonal term).
    pub fn pair_weight(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.scale * self.table_entry(&abs_offset(grid, i, j))
    }

    /// Physical near-diagonal coefficient: each interior nearest-neighbour pair
    /// carries an extra coupling of half this value.
    pub fn near_diagonal(&self) -> f64 {
        self.scale * self.near_diagonal
    }

    /// Unit-lattice near-diagonal coefficient.
    pub fn near_diagonal_unit(&self) -> f64 {
        self.near_diagonal
    }

    /// Tail weight `κ_i`: kernel mass of the region where the field vanishes.
    pub fn tail(&self, i: usize) -> f64 {
        self.tail[i]
    }

    pub fn tails(&self) -> &[f64] {
        &self.tail
    }
}

/// Per-axis absolute lattice offset between interior nodes `i` and `j`.
pub fn abs_offset(grid: &Grid, i: usize, j: usize) -> [usize; MAX_DIM] {
    let li = grid.lattice(i);
    let lj = grid.lattice(j);
    let mut a = [0usize; MAX_DIM];
    for d in 0..grid.dim() {
        a[d] = li[d].abs_diff(lj[d]);
    }
    a
}

fn unflatten(mut flat: usize, extent: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut a = [0usize; MAX_DIM];
    for slot in a.iter_mut().take(dim) {
        *slot = flat % extent;
        flat /= extent;
    }
    a
}

/// `(∫_{C_a} |z|^{-n-α} dz, ∫_{C_a} (|z|^2 - |a|^2) |z|^{-n-α} dz)` on the
/// unit lattice, for a nonzero offset `a`.
fn cell_integrals(a: &[usize], alpha: f64) -> (f64, f64) {
    let n = a.len();
    let r2: f64 = a.iter().map(|&x| (x * x) as f64).sum();
    if n == 1 {
        let lo = a[0] as f64 - 0.5;
        let hi = a[0] as f64 + 0.5;
        let w = (lo.powf(-alpha) - hi.powf(-alpha)) / alpha;
        let second = (hi.powf(2.0 - alpha) - lo.powf(2.0 - alpha)) / (2.0 - alpha);
        return (w, second - r2 * w);
    }
    let max = a.iter().copied().max().unwrap_or(0);
    let pieces = match max {
        0..=1 => 4,
        2..=3 => 2,
        _ => 1,
    };
    let rule = GaussRule::new(8);
    let power = -0.5 * (n as f64 + alpha);
    let width = 1.0 / pieces as f64;
    let axis_points = |c: usize| -> Vec<(f64, f64)> {
        let base = c as f64 - 0.5;
        (0..pieces)
            .flat_map(|p| {
                let lo = base + p as f64 * width;
                rule.mapped(lo, lo + width).collect::<Vec<_>>()
            })
            .collect()
    };
    let pts: Vec<Vec<(f64, f64)>> = a.iter().map(|&c| axis_points(c)).collect();
    let mut w = 0.0;
    let mut m = 0.0;
    match n {
        2 => {
            for &(x, wx) in &pts[0] {
                for &(y, wy) in &pts[1] {
                    let rr = x * x + y * y;
                    let k = rr.powf(power) * wx * wy;
                    w += k;
                    m += (rr - r2) * k;
                }
            }
        }
        3 => {
            for &(x, wx) in &pts[0] {
                for &(y, wy) in &pts[1] {
                    let wxy = wx * wy;
                    let rxy = x * x + y * y;
                    for &(z, wz) in &pts[2] {
                        let rr = rxy + z * z;
                        let k = rr.powf(power) * wxy * wz;
                        w += k;
                        m += (rr - r2) * k;
                    }
                }
            }
        }
        _ => unreachable!("dimension checked by the grid"),
    }
    (w, m)
}

/// `∫_{C_0} |z_1|^p |z|^{-n-α} dz` over the unit cell centred at the origin.
///
/// The integrand is homogeneous of degree `β = p - n - α`, so each pyramid
/// spanned by the origin and a face contributes `(1/2)/(p - α)` times the
/// face integral.
fn own_cell_moment(dim: usize, alpha: f64, p: f64) -> f64 {
    let beta_n = p - alpha;
    assert!(beta_n > 0.0, "own-cell moment diverges for p <= α");
    let pyramid = 0.5 / beta_n;
    let tol = 1e-14;
    let kernel = -(dim as f64 + alpha);
    match dim {
        1 => 2.0 * pyramid * 0.5f64.powf(p) * 0.5f64.powf(kernel),
        2 => {
            // faces normal to axis 0 (z_1 = ±1/2) and to axis 1 (z_1 = w)
            let normal = adaptive(
                |w| 0.5f64.powf(p) * (0.25 + w * w).powf(0.5 * kernel),
                0.0,
                0.5,
                tol,
                tol,
            )
            .value;
            let lateral = adaptive(
                |w| w.powf(p) * (0.25 + w * w).powf(0.5 * kernel),
                0.0,
                0.5,
                tol,
                tol,
            )
            .value;
            // each face integral is twice the half-face value; two faces per axis
            pyramid * 2.0 * 2.0 * (normal + lateral)
        }
        3 => {
            let inner = |v: f64, weight_v: f64| {
                adaptive(
                    |w| weight_v * (0.25 + v * v + w * w).powf(0.5 * kernel),
                    0.0,
                    0.5,
                    tol,
                    tol,
                )
                .value
            };
            let normal = adaptive(|v| inner(v, 0.5f64.powf(p)), 0.0, 0.5, tol, tol).value;
            let lateral = adaptive(|v| inner(v, v.powf(p)), 0.0, 0.5, tol, tol).value;
            // quarter-face values: ×4 per face; two faces normal to axis 0,
            // four lateral faces (axis 0 runs along one face direction)
            pyramid * 4.0 * (2.0 * normal + 4.0 * lateral)
        }
        _ => unreachable!("dimension checked by the grid"),
    }
}

/// `κ_i = ∫_{R^n \ B} |x_i - y|^{-n-α} dy` where `B = [h/2, 1-h/2]^n` is the
/// union of interior cells.
///
/// Along each ray from `x_i` the radial integral is closed-form,
/// `ρ^{-α}/α` with `ρ` the exit distance, so only an angular integral over the
/// faces of `B` remains. A face at normal distance `a` contributes
/// `a^{-α}` times a dimensionless angular integral.
fn tail_weights(grid: &Grid, alpha: f64) -> Vec<f64> {
    let dim = grid.dim();
    let cells = grid.cells_per_axis();
    let h = grid.h();
    let key_of = |i: usize| -> [usize; MAX_DIM] {
        let l = grid.lattice(i);
        let mut k = [0usize; MAX_DIM];
        for d in 0..dim {
            k[d] = l[d].min(cells - l[d]);
        }
        k[..dim].sort_unstable();
        k
    };
    let mut keys: Vec<[usize; MAX_DIM]> = (0..grid.interior_count()).map(key_of).collect();
    keys.sort_unstable();
    keys.dedup();
    let values: HashMap<[usize; MAX_DIM], f64> = keys
        .par_iter()
        .map(|k| {
            let x: Vec<f64> = k[..dim].iter().map(|&l| l as f64 * h).collect();
            (*k, tail_at(&x, h, alpha))
        })
        .collect();
    (0..grid.interior_count())
        .map(|i| values[&key_of(i)])
        .collect()
}

fn tail_at(x: &[f64], h: f64, alpha: f64) -> f64 {
    let dim = x.len();
    let lo = 0.5 * h;
    let hi = 1.0 - 0.5 * h;
    let mut total = 0.0;
    for d in 0..dim {
        for a in [x[d] - lo, hi - x[d]] {
            let extents: Vec<[f64; 2]> = (0..dim)
                .filter(|&e| e != d)
                .map(|e| [(x[e] - lo) / a, (hi - x[e]) / a])
                .collect();
            let angular = match dim {
                1 => 1.0,
                2 => extents[0]
                    .iter()
                    .map(|&xx| planar_angle_integral(xx, alpha))
                    .sum(),
                3 => {
                    let mut sum = 0.0;
                    for &x1 in &extents[0] {
                        for &x2 in &extents[1] {
                            sum += quadrant_integral(x1, x2, alpha);
                        }
                    }
                    sum
                }
                _ => unreachable!(),
            };
            total += a.powf(-alpha) * angular;
        }
    }
    total / alpha
}

/// `∫_0^{X} (1 + t^2)^{-1-α/2} dt = ∫_0^{atan X} cos^α θ dθ`.
fn planar_angle_integral(x: f64, alpha: f64) -> f64 {
    adaptive(|t| t.cos().powf(alpha), 0.0, x.atan(), 1e-15, 1e-14).value
}

/// `∫_{[0,X1]×[0,X2]} (1 + |t|^2)^{-(3+α)/2} dt`, with the radial part in
/// closed form.
fn quadrant_integral(x1: f64, x2: f64, alpha: f64) -> f64 {
    let radial = |r: f64| (1.0 - (1.0 + r * r).powf(-0.5 * (1.0 + alpha))) / (1.0 + alpha);
    let split = (x2 / x1).atan();
    let first = adaptive(|t| radial(x1 / t.cos()), 0.0, split, 1e-15, 1e-14).value;
    let second = adaptive(|t| radial(x2 / t.sin()), split, FRAC_PI_2, 1e-15, 1e-14).value;
    first + second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn normalization_constant_values() {
        assert!((normalization_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((normalization_constant(3, 0.5).unwrap() - 1.0 / (PI * PI)).abs() < 1e-14);
        let small = normalization_constant(2, 1e-6).unwrap();
        assert!(small > 0.0 && small < 1e-5);
        assert!(normalization_constant(1, 0.0).is_err());
        assert!(normalization_constant(1, 1.0).is_err());
        assert!(normalization_constant(1, -0.2).is_err());
    }

    #[test]
    fn own_cell_moment_matches_closed_forms() {
        // 1D: 2 ∫_0^{1/2} z^{1-α} dz = 2 (1/2)^{2-α} / (2-α)
        for alpha in [0.5, 1.0, 1.5] {
            let exact = 2.0 * 0.5f64.powf(2.0 - alpha) / (2.0 - alpha);
            assert!((own_cell_moment(1, alpha, 2.0) - exact).abs() < 1e-14);
        }
        // α = 0, p = 2 in 2D: ∫ z_1^2 |z|^{-2} over the unit square, by brute force
        let rule = GaussRule::new(40);
        let mut brute = 0.0;
        for &(x, wx) in &rule.mapped(0.0, 0.5).collect::<Vec<_>>() {
            for &(y, wy) in &rule.mapped(0.0, 0.5).collect::<Vec<_>>() {
                brute += 4.0 * wx * wy * x * x / (x * x + y * y);
            }
        }
        // the integrand is bounded, so plain tensor Gauss converges
        assert!((own_cell_moment(2, 1e-12, 2.0) - brute).abs() < 1e-6);
        // exact value: by symmetry half of ∫ 1 = 1/2
        assert!((own_cell_moment(2, 1e-12, 2.0) - 0.5).abs() < 1e-9);
        // α = -1 in 3D: z_1^2 |z|^{-2}, again one third of the unit volume
        assert!((own_cell_moment(3, -1.0, 2.0) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn cell_integrals_agree_with_closed_form_in_1d_limit() {
        // a 2D cell far away behaves like h^n K(center)
        let (w, _) = cell_integrals(&[20, 0], 1.0);
        let approx = 20f64.powf(-3.0);
        assert!((w - approx).abs() / approx < 1e-3);
    }

    #[test]
    fn tail_1d_closed_form() {
        let g = build_grid(1, 8).unwrap();
        let k = KernelWeights::for_operator(&g, 0.5).unwrap();
        let i = g.index_of(&[4]).unwrap();
        let a = 0.5 - 1.0 / 16.0;
        assert!((k.tail(i) - 2.0 / a).abs() < 1e-12);
    }

    #[test]
    fn tail_grows_towards_boundary() {
        for dim in 1..=3 {
            let g = build_grid(dim, 8).unwrap();
            let k = KernelWeights::for_operator(&g, 0.4).unwrap();
            let mut l = vec![4isize; dim];
            let mut last = k.tail(g.index_of(&l).unwrap());
            for step in (1..4).rev() {
                l[0] = step;
                let now = k.tail(g.index_of(&l).unwrap());
                assert!(now > last, "dim {dim}: {now} <= {last}");
                last = now;
            }
        }
    }

    #[test]
    fn tail_matches_brute_force_in_2d() {
        // κ at the centre of a 2D grid versus a direct polar integral
        let g = build_grid(2, 8).unwrap();
        let alpha = 0.8;
        let k = KernelWeights::for_operator(&g, 0.4).unwrap();
        let i = g.index_of(&[4, 4]).unwrap();
        // exit distance of a ray from the centre of a square of half-side b
        let b = 0.5 - 1.0 / 16.0;
        let brute = adaptive(
            |t: f64| {
                let rho = b / t.cos().abs().max(t.sin().abs());
                rho.powf(-alpha) / alpha
            },
            0.0,
            2.0 * PI,
            1e-13,
            1e-13,
        )
        .value;
        assert!(
            (k.tail(i) - brute).abs() < 1e-9 * brute,
            "{} vs {}",
            k.tail(i),
            brute
        );
    }

    #[test]
    fn tail_matches_brute_force_in_3d() {
        let g = build_grid(3, 6).unwrap();
        let alpha = 1.0;
        let k = KernelWeights::for_operator(&g, 0.5).unwrap();
        let i = g.index_of(&[1, 2, 3]).unwrap();
        let x = g.point(i).to_vec();
        let lo = 1.0 / 12.0;
        let hi = 1.0 - lo;
        // integrate ρ(ω)^{-α}/α over the sphere in spherical coordinates
        let exit = |dir: [f64; 3]| -> f64 {
            let mut t = f64::INFINITY;
            for d in 0..3 {
                if dir[d] > 0.0 {
                    t = t.min((hi - x[d]) / dir[d]);
                } else if dir[d] < 0.0 {
                    t = t.min((lo - x[d]) / dir[d]);
                }
            }
            t
        };
        let brute = adaptive(
            |th: f64| {
                adaptive(
                    |ph: f64| {
                        let dir = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                        exit(dir).powf(-alpha) / alpha * th.sin()
                    },
                    0.0,
                    2.0 * PI,
                    1e-11,
                    1e-11,
                )
                .value
            },
            0.0,
            PI,
            1e-10,
            1e-10,
        )
        .value;
        assert!(
            (k.tail(i) - brute).abs() < 1e-6 * brute,
            "{} vs {}",
            k.tail(i),
            brute
        );
    }
}
