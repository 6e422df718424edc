//! Discrete Lebesgue, Bochner and Sobolev-type norms on the grid.
//!
//! Space sums use the node weight `h^n` over interior nodes (everything else
//! is zero). Time sums use the right-endpoint rule: steps `m = 1..=M` with
//! weight `τ` each. Suprema include the initial slice.

mod exponents;
mod inequalities;

pub use exponents::{exponents, ExponentReport, OutsideBranch, OutsideZone};
pub use inequalities::{
    algebraic_inequality_oracle, calibrate_c_alpha, InequalityBranch, InequalityOutcome,
};

use crate::error::{invalid, Error, Result};
use crate::evolve::Trajectory;
use crate::grid::{Grid, MAX_DIM};
use crate::operators::{abs_lattice_offset, KernelWeights};

fn check_exponent(p: f64, what: &str) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid(format!(
            "{what} exponent must be >= 1 or infinite (got {p})"
        )));
    }
    Ok(())
}

/// `(Σ_i h^n |u_i|^p)^{1/p}`, or `max |u_i|` for `p = ∞`.
pub fn lp_space(cell_volume: f64, u: &[f64], p: f64) -> Result<f64> {
    check_exponent(p, "space")?;
    if p.is_infinite() {
        return Ok(u.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok((cell_volume * u.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p))
}

/// `(Σ_{m>=1} Σ_i τ h^n |u|^p)^{1/p}`; `p = ∞` gives the maximum over all samples.
pub fn lp_space_time(traj: &Trajectory, p: f64) -> Result<f64> {
    check_exponent(p, "space-time")?;
    if p.is_infinite() {
        return Ok(traj
            .fields
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max));
    }
    let sum: f64 = traj.fields[1..]
        .iter()
        .map(|u| u.iter().map(|v| v.abs().powf(p)).sum::<f64>())
        .sum();
    Ok((traj.tau * traj.cell_volume * sum).powf(1.0 / p))
}

/// `L^r(0, T; L^q(Ω))`: time `ℓ^r` of the per-step spatial `L^q` norms.
pub fn bochner_norm(traj: &Trajectory, r: f64, q: f64) -> Result<f64> {
    check_exponent(r, "time")?;
    check_exponent(q, "space")?;
    let per_step = traj
        .fields
        .iter()
        .map(|u| lp_space(traj.cell_volume, u, q))
        .collect::<Result<Vec<_>>>()?;
    time_norm(&per_step, traj.tau, r)
}

/// `ℓ^r` in time of per-step values `a_0..a_M` (sums skip `a_0`).
pub fn time_norm(per_step: &[f64], tau: f64, r: f64) -> Result<f64> {
    check_exponent(r, "time")?;
    if r.is_infinite() {
        return Ok(per_step.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok((tau * per_step[1..].iter().map(|v| v.abs().powf(r)).sum::<f64>()).powf(1.0 / r))
}

/// `‖∇u‖_{L^q}` from forward differences with zero boundary values.
///
/// Differences are taken at every lattice point with coordinates in
/// `0..N` (so boundary edges on both sides are included), the gradient
/// magnitude is Euclidean, and each point carries weight `h^n`.
pub fn h1_seminorm(grid: &Grid, u: &[f64], q: f64) -> Result<f64> {
    h1_seminorm_on(grid, u, q, None)
}

/// As [`h1_seminorm`], restricted to interior nodes flagged in `region`
/// (an interior seminorm for local estimates).
pub fn h1_seminorm_on(grid: &Grid, u: &[f64], q: f64, region: Option<&[bool]>) -> Result<f64> {
    check_exponent(q, "gradient")?;
    check_len(grid, u)?;
    if let Some(r) = region {
        check_len(grid, r)?;
    }
    let dim = grid.dim();
    let cells = grid.cells_per_axis();
    let h = grid.h();
    let value = |l: &[isize]| grid.index_of(l).map_or(0.0, |i| u[i]);
    let total = cells.pow(dim as u32);
    let mut acc = 0.0;
    let mut max = 0f64;
    for flat in 0..total {
        let mut l = [0isize; MAX_DIM];
        let mut rem = flat;
        for slot in l.iter_mut().take(dim) {
            *slot = (rem % cells) as isize;
            rem /= cells;
        }
        if let Some(r) = region {
            match grid.index_of(&l[..dim]) {
                Some(i) if r[i] => {}
                _ => continue,
            }
        }
        let here = value(&l[..dim]);
        let mut sq = 0.0;
        for d in 0..dim {
            let mut n = l;
            n[d] += 1;
            let diff = (value(&n[..dim]) - here) / h;
            sq += diff * diff;
        }
        let g = sq.sqrt();
        max = max.max(g);
        acc += g.powf(q);
    }
    if q.is_infinite() {
        return Ok(max);
    }
    Ok((grid.cell_volume() * acc).powf(1.0 / q))
}

/// `W^{s,q}` Gagliardo seminorm of `u` extended by zero to `R^n`.
pub fn gagliardo_seminorm(grid: &Grid, u: &[f64], s: f64, q: f64) -> Result<f64> {
    let weights = KernelWeights::for_seminorm(grid, s, q)?;
    gagliardo_seminorm_with(grid, &weights, u, q)
}

/// As [`gagliardo_seminorm`] with precomputed weights.
///
/// `|u|^q = Σ_{i≠j} h^n w_ij |u_i - u_j|^q + 2 Σ_i h^n κ_i |u_i|^q
///        + Σ_edges h^n c |u_i - u_j|^q`, where the last sum runs over
/// nearest-neighbour edges including those to the (zero) boundary.
pub fn gagliardo_seminorm_with(
    grid: &Grid,
    weights: &KernelWeights,
    u: &[f64],
    q: f64,
) -> Result<f64> {
    check_exponent(q, "seminorm")?;
    if q.is_infinite() {
        return Err(invalid("Gagliardo seminorm needs a finite exponent"));
    }
    check_len(grid, u)?;
    let size = grid.interior_count();
    let vol = grid.cell_volume();
    let mut pairs = 0.0;
    for i in 0..size {
        let mut row = 0.0;
        for j in 0..size {
            if j != i {
                let off = abs_lattice_offset(grid, i, j);
                row += weights.table_entry(&off) * (u[i] - u[j]).abs().powf(q);
            }
        }
        pairs += row;
    }
    let pairs = weights.scale() * pairs;
    let tails: f64 = (0..size)
        .map(|i| weights.tail(i) * u[i].abs().powf(q))
        .sum();
    let mut edges = 0.0;
    for i in 0..size {
        for axis in 0..grid.dim() {
            match grid.neighbor(i, axis, 1) {
                Some(j) => edges += (u[i] - u[j]).abs().powf(q),
                None => edges += u[i].abs().powf(q),
            }
            if grid.neighbor(i, axis, -1).is_none() {
                edges += u[i].abs().powf(q);
            }
        }
    }
    let total = vol * (pairs + 2.0 * tails + weights.near_diagonal() * edges);
    Ok(total.max(0.0).powf(1.0 / q))
}

fn check_len<T>(grid: &Grid, u: &[T]) -> Result<()> {
    if u.len() != grid.interior_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.interior_count(),
            actual: u.len(),
        });
    }
    Ok(())
}
