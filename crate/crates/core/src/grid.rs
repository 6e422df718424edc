//! Uniform Cartesian discretization of the unit box `(0,1)^n`.
//!
//! Nodes sit at `x = l * h` with lattice index `l` in `1..N` along each axis,
//! so the interior lattice has `(N-1)^n` points. Everything outside the
//! interior lattice (boundary faces and `R^n \ Ω`) carries the value zero.
//! Interior nodes are numbered lexicographically with axis 0 fastest.

use crate::error::{invalid, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Interior lattice coordinates of a node; unused trailing axes are zero.
pub type Lattice = [usize; MAX_DIM];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: usize,
    h: f64,
    interior: usize,
    coords: Vec<f64>,
    lattice: Vec<Lattice>,
}

/// Builds the grid for `(0,1)^dim` with `cells` cells per axis.
pub fn build_grid(dim: usize, cells: usize) -> Result<Grid> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(invalid(format!(
            "spatial dimension must be 1, 2 or 3 (got {dim})"
        )));
    }
    if cells < 4 {
        return Err(invalid(format!(
            "need at least 4 cells per axis so the stencil does not touch both boundaries (got {cells})"
        )));
    }
    let h = 1.0 / cells as f64;
    let side = cells - 1;
    let interior = side.pow(dim as u32);
    let mut coords = Vec::with_capacity(interior * dim);
    let mut lattice = Vec::with_capacity(interior);
    for idx in 0..interior {
        let mut rem = idx;
        let mut l = [0usize; MAX_DIM];
        for slot in l.iter_mut().take(dim) {
            *slot = rem % side + 1;
            rem /= side;
        }
        for &ld in l.iter().take(dim) {
            coords.push(ld as f64 * h);
        }
        lattice.push(l);
    }
    Ok(Grid {
        dim,
        cells,
        h,
        interior,
        coords,
        lattice,
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    /// Number of interior nodes along one axis, `N - 1`.
    pub fn side(&self) -> usize {
        self.cells - 1
    }

    /// Quadrature weight of one node, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn lattice(&self, index: usize) -> Lattice {
        self.lattice[index]
    }

    /// Node index of an interior lattice point, `None` on the boundary or outside.
    pub fn index_of(&self, l: &[isize]) -> Option<usize> {
        let side = self.side() as isize;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &ld in l.iter().take(self.dim) {
            if ld < 1 || ld > side {
                return None;
            }
            idx += (ld as usize - 1) * stride;
            stride *= self.side();
        }
        Some(idx)
    }

    /// Distance from node `index` to the nearest boundary face.
    pub fn boundary_distance(&self, index: usize) -> f64 {
        self.point(index)
            .iter()
            .map(|&x| x.min(1.0 - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Neighbour of `index` one cell away along `axis` in direction `dir` (±1).
    pub fn neighbor(&self, index: usize, axis: usize, dir: isize) -> Option<usize> {
        let l = self.lattice[index];
        let mut shifted = [0isize; MAX_DIM];
        for d in 0..self.dim {
            shifted[d] = l[d] as isize;
        }
        shifted[axis] += dir;
        self.index_of(&shifted[..self.dim])
    }

    /// Image of `index` under the reflection `x -> 1 - x` applied on every axis.
    pub fn reflect(&self, index: usize) -> usize {
        let l = self.lattice[index];
        let mut r = [0isize; MAX_DIM];
        for d in 0..self.dim {
            r[d] = (self.cells - l[d]) as isize;
        }
        self.index_of(&r[..self.dim])
            .expect("reflection of an interior node is interior")
    }

    /// Mask of nodes inside the centred sub-box of relative side `fraction`.
    ///
    /// `fraction = 0.5` gives the central half-box `[1/4, 3/4]^n`.
    pub fn central_box(&self, fraction: f64) -> Vec<bool> {
        let lo = 0.5 - 0.5 * fraction;
        let hi = 0.5 + 0.5 * fraction;
        let eps = 1e-12;
        (0..self.interior)
            .map(|i| {
                self.point(i)
                    .iter()
                    .all(|&x| x >= lo - eps && x <= hi + eps)
            })
            .collect()
    }
}

/// Membership of discrete space-time samples in the parabolic boundary strip.
///
/// Distance to the parabolic boundary (initial slice plus lateral boundary)
/// is `min(t, dist(x, ∂Ω))`, so a sample `(node, m)` is flagged when
/// `dist(x, ∂Ω) < δ` or `m τ < δ`.
#[derive(Debug, Clone)]
pub struct StripMask {
    delta: f64,
    time_steps: usize,
    tau: f64,
    nodes: usize,
    flags: Vec<bool>,
    saturated: bool,
}

/// Builds the strip mask over steps `m = 0..=time_steps`.
pub fn strip_mask(grid: &Grid, delta: f64, time_steps: usize, tau: f64) -> Result<StripMask> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid(format!(
            "strip width must be nonnegative (got {delta})"
        )));
    }
    if time_steps < 1 {
        return Err(invalid("strip mask needs at least one time step"));
    }
    if !(tau > 0.0) {
        return Err(invalid(format!("time step must be positive (got {tau})")));
    }
    let saturated = delta >= 0.5;
    if saturated {
        log::warn!("strip width {delta} >= 1/2 covers the whole domain");
    }
    let nodes = grid.interior_count();
    let dist: Vec<f64> = (0..nodes).map(|i| grid.boundary_distance(i)).collect();
    let mut flags = Vec::with_capacity(nodes * (time_steps + 1));
    for m in 0..=time_steps {
        let early = (m as f64) * tau < delta;
        flags.extend(dist.iter().map(|&d| early || d < delta));
    }
    Ok(StripMask {
        delta,
        time_steps,
        tau,
        nodes,
        flags,
        saturated,
    })
}

impl StripMask {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// True when `δ >= 1/2`, i.e. every spatial node lies in the strip.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn contains(&self, node: usize, step: usize) -> bool {
        self.flags[step * self.nodes + node]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// The interior region `Ω_T` minus the strip, as a mask of the same shape.
    pub fn complement(&self) -> StripMask {
        StripMask {
            flags: self.flags.iter().map(|f| !f).collect(),
            ..self.clone()
        }
    }

    /// Iterator over flagged `(node, step)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(k, _)| (k % self.nodes, k / self.nodes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_counts() {
        let g = build_grid(1, 8).unwrap();
        assert_eq!(g.interior_count(), 7);
        assert_eq!(g.h(), 0.125);
        assert_eq!(build_grid(2, 4).unwrap().interior_count(), 9);
        assert_eq!(build_grid(3, 16).unwrap().interior_count(), 3375);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_grid(0, 8).is_err());
        assert!(build_grid(4, 8).is_err());
        assert!(build_grid(2, 3).is_err());
    }

    #[test]
    fn spacing_is_exact() {
        for n in [4, 7, 10, 33, 100, 512] {
            let g = build_grid(1, n).unwrap();
            assert!((g.h() * n as f64 - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn index_map_is_bijective() {
        let g = build_grid(3, 6).unwrap();
        for i in 0..g.interior_count() {
            let l = g.lattice(i);
            let li = [l[0] as isize, l[1] as isize, l[2] as isize];
            assert_eq!(g.index_of(&li), Some(i));
            assert!(g.point(i).iter().all(|&x| x > 0.0 && x < 1.0));
        }
        assert_eq!(g.index_of(&[0, 1, 1]), None);
        assert_eq!(g.index_of(&[1, 6, 1]), None);
    }

    #[test]
    fn reflection_and_neighbors() {
        let g = build_grid(2, 5).unwrap();
        let i = g.index_of(&[1, 2]).unwrap();
        assert_eq!(g.reflect(i), g.index_of(&[4, 3]).unwrap());
        assert_eq!(g.neighbor(i, 0, -1), None);
        assert_eq!(g.neighbor(i, 1, 1), g.index_of(&[1, 3]));
    }

    #[test]
    fn strip_flags_near_boundary() {
        let g = build_grid(1, 8).unwrap();
        let tau = 0.05;
        let mask = strip_mask(&g, 0.2, 10, tau).unwrap();
        // m = 4: t = 0.2, no longer early
        let flagged: Vec<f64> = (0..g.interior_count())
            .filter(|&i| mask.contains(i, 4))
            .map(|i| g.point(i)[0])
            .collect();
        assert_eq!(flagged, vec![0.125, 0.875]);
        // early steps flag everything
        assert!((0..g.interior_count()).all(|i| mask.contains(i, 3)));
    }

    #[test]
    fn zero_width_strip_is_empty() {
        let g = build_grid(2, 6).unwrap();
        let mask = strip_mask(&g, 0.0, 5, 0.1).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn wide_strip_saturates() {
        let g = build_grid(2, 6).unwrap();
        let mask = strip_mask(&g, 2.0, 5, 0.1).unwrap();
        assert!(mask.is_saturated());
        assert_eq!(mask.count(), g.interior_count() * 6);
    }

    #[test]
    fn strip_and_complement_partition() {
        let g = build_grid(2, 9).unwrap();
        for delta in [0.0, 0.05, 0.2, 0.3, 0.6] {
            let mask = strip_mask(&g, delta, 7, 0.03).unwrap();
            let comp = mask.complement();
            assert_eq!(mask.count() + comp.count(), g.interior_count() * 8);
            for i in 0..g.interior_count() {
                for m in 0..=7 {
                    assert_ne!(mask.contains(i, m), comp.contains(i, m));
                }
            }
        }
    }

    #[test]
    fn refinement_keeps_membership_of_fixed_points() {
        // physical point x = 0.25 with δ = 0.4 (|0.25 - 0.4| > h on both grids)
        for (n, l) in [(8usize, 2usize), (16, 4), (32, 8)] {
            let g = build_grid(1, n).unwrap();
            let i = g.index_of(&[l as isize]).unwrap();
            let mask = strip_mask(&g, 0.4, 4, 0.5).unwrap();
            assert!(mask.contains(i, 2));
            let mask = strip_mask(&g, 0.1, 4, 0.5).unwrap();
            assert!(!mask.contains(i, 2));
        }
    }
}
