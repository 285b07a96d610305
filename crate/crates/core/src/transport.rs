//! Finite-volume advection `df/dt + v1 df/dx = 0` on a nonuniform 1-D grid.
//!
//! Second-order upwind fluxes from minmod-limited slopes, advanced with a
//! two-stage SSP Runge-Kutta step. Each rank stores two ghost cells per side:
//! storage indices `0, 1 | 2 ..= n_local + 1 | n_local + 2, n_local + 3`.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::parallel::{halo_exchange, Communicator, DecompositionPlan};

/// Ghost cells on each side of a rank's interior.
pub const GHOSTS: usize = 2;

/// Cells `(center, width)` tiling an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    centers: Vec<f64>,
    widths: Vec<f64>,
    origin: f64,
}

impl SpatialGrid {
    /// Cells of the given widths laid end to end from `origin`.
    pub fn from_widths(origin: f64, widths: Vec<f64>) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidArgument("spatial grid needs at least one cell".into()));
        }
        if let Some(w) = widths.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "cell widths must be positive, got {w}"
            )));
        }
        let mut centers = Vec::with_capacity(widths.len());
        let mut left = origin;
        for &w in &widths {
            centers.push(left + 0.5 * w);
            left += w;
        }
        Ok(Self {
            centers,
            widths,
            origin,
        })
    }

    pub fn uniform(origin: f64, length: f64, cells: usize) -> Result<Self> {
        Self::zoned(origin, &[(length, cells)])
    }

    /// Consecutive uniform zones `(length, cells)`; the width jumps abruptly
    /// between zones.
    pub fn zoned(origin: f64, zones: &[(f64, usize)]) -> Result<Self> {
        let mut widths = Vec::new();
        for &(length, cells) in zones {
            if cells == 0 || !(length > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "zone of length {length} with {cells} cells"
                )));
            }
            widths.extend(std::iter::repeat(length / cells as f64).take(cells));
        }
        Self::from_widths(origin, widths)
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn min_width(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Centers and widths for storage indices of `cells` plus ghosts. Ghosts
    /// inside the domain take the real neighbor geometry; outside it they
    /// repeat the boundary cell's width.
    pub fn local_geometry(&self, cells: Range<usize>) -> (Vec<f64>, Vec<f64>) {
        let m = self.len() as isize;
        let last = self.len() - 1;
        let start = cells.start as isize - GHOSTS as isize;
        let end = cells.end as isize + GHOSTS as isize;
        let mut centers = Vec::with_capacity((end - start) as usize);
        let mut widths = Vec::with_capacity((end - start) as usize);
        for g in start..end {
            if g < 0 {
                let w = self.widths[0];
                centers.push(self.centers[0] + g as f64 * w);
                widths.push(w);
            } else if g >= m {
                let w = self.widths[last];
                centers.push(self.centers[last] + (g - m + 1) as f64 * w);
                widths.push(w);
            } else {
                centers.push(self.centers[g as usize]);
                widths.push(self.widths[g as usize]);
            }
        }
        (centers, widths)
    }
}

/// Per-cell velocity distributions of one rank, ghosts included.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    cell_len: usize,
    n_local: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(cell_len: usize, n_local: usize) -> Self {
        Self {
            cell_len,
            n_local,
            data: vec![0.0; cell_len * (n_local + 2 * GHOSTS)],
        }
    }

    /// Field whose interior cell `j` is `init(j)`; ghosts are zero.
    pub fn from_cells(
        cell_len: usize,
        n_local: usize,
        mut init: impl FnMut(usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut field = Self::zeros(cell_len, n_local);
        for j in 0..n_local {
            let values = init(j);
            if values.len() != cell_len {
                return Err(Error::ShapeMismatch {
                    expected: cell_len,
                    found: values.len(),
                });
            }
            field.interior_mut(j).copy_from_slice(&values);
        }
        Ok(field)
    }

    pub fn cell_len(&self) -> usize {
        self.cell_len
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    /// Interior plus ghost cells.
    pub fn storage_len(&self) -> usize {
        self.n_local + 2 * GHOSTS
    }

    pub fn cell(&self, storage: usize) -> &[f64] {
        &self.data[storage * self.cell_len..(storage + 1) * self.cell_len]
    }

    pub fn cell_mut(&mut self, storage: usize) -> &mut [f64] {
        &mut self.data[storage * self.cell_len..(storage + 1) * self.cell_len]
    }

    pub fn interior(&self, j: usize) -> &[f64] {
        self.cell(j + GHOSTS)
    }

    pub fn interior_mut(&mut self, j: usize) -> &mut [f64] {
        self.cell_mut(j + GHOSTS)
    }

    /// All interior cells, contiguous.
    pub fn interior_data(&self) -> &[f64] {
        &self.data[GHOSTS * self.cell_len..(GHOSTS + self.n_local) * self.cell_len]
    }

    pub fn interior_data_mut(&mut self) -> &mut [f64] {
        &mut self.data[GHOSTS * self.cell_len..(GHOSTS + self.n_local) * self.cell_len]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Diffusive Maxwell wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSpec {
    /// Wall temperature for `t < 0`.
    pub temperature_before: f64,
    /// Wall temperature for `t >= 0`.
    pub temperature_after: f64,
    pub velocity: [f64; 3],
    /// Sign of the unit normal `n = sign * e1` pointing into the gas.
    pub normal_sign: f64,
}

impl WallSpec {
    pub fn constant(temperature: f64, normal_sign: f64) -> Result<Self> {
        Self::sudden(temperature, temperature, normal_sign)
    }

    pub fn sudden(before: f64, after: f64, normal_sign: f64) -> Result<Self> {
        if !(before > 0.0 && after > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wall temperatures must be positive, got {before} and {after}"
            )));
        }
        if normal_sign != 1.0 && normal_sign != -1.0 {
            return Err(Error::InvalidArgument(format!(
                "wall normal sign must be +1 or -1, got {normal_sign}"
            )));
        }
        Ok(Self {
            temperature_before: before,
            temperature_after: after,
            velocity: [0.0; 3],
            normal_sign,
        })
    }

    pub fn temperature_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            self.temperature_before
        } else {
            self.temperature_after
        }
    }
}

/// Treatment of a physical end of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Ghosts are the linear extrapolation of the two nearest interior cells.
    Extrapolate,
    /// Extrapolated at outgoing nodes, zero at nodes entering the domain.
    NoInflow,
    Wall(WallSpec),
}

#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Upwind flux from the two reconstructed face states.
#[inline]
pub fn upwind_flux(v1: f64, left_state: f64, right_state: f64) -> f64 {
    if v1 >= 0.0 {
        v1 * left_state
    } else {
        v1 * right_state
    }
}

/// Unit-density wall Maxwellian at each velocity node.
fn wall_maxwellian(grid: &VelocityGrid, wall: &WallSpec, temperature: f64) -> Vec<f64> {
    let norm = (2.0 * std::f64::consts::PI * temperature).powf(-1.5);
    (0..grid.len())
        .map(|idx| {
            let v = grid.velocity(idx);
            let c2: f64 = (0..3).map(|a| (v[a] - wall.velocity[a]).powi(2)).sum();
            norm * (-c2 / (2.0 * temperature)).exp()
        })
        .collect()
}

/// Fills `ghost` with the re-emitted wall distribution for the wall-adjacent
/// interior cell `adjacent` and returns the re-emission density `sigma_w`.
///
/// `sigma_w` balances the discrete outgoing mass flux against the discrete
/// incoming flux of the unit wall Maxwellian, so the net mass flux through
/// the wall face vanishes to roundoff. Grazing nodes count as outgoing.
pub fn wall_boundary(
    grid: &VelocityGrid,
    wall: &WallSpec,
    t: f64,
    adjacent: &[f64],
    ghost: &mut [f64],
) -> Result<f64> {
    let temperature = wall.temperature_at(t);
    let unit = wall_maxwellian(grid, wall, temperature);
    let w = grid.velocity_weights();
    let mut outgoing = 0.0;
    let mut incoming_unit = 0.0;
    for idx in 0..grid.len() {
        let cn = wall.normal_sign * (grid.velocity(idx)[0] - wall.velocity[0]);
        if cn <= 0.0 {
            outgoing -= cn * adjacent[idx] * w[idx];
        } else {
            incoming_unit += cn * unit[idx] * w[idx];
        }
    }
    let sigma = outgoing / incoming_unit;
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::NegativeWallFlux(sigma));
    }
    for idx in 0..grid.len() {
        let cn = wall.normal_sign * (grid.velocity(idx)[0] - wall.velocity[0]);
        ghost[idx] = if cn > 0.0 { sigma * unit[idx] } else { 0.0 };
    }
    Ok(sigma)
}

/// Moments `(1, v1, v2, v3, |v|^2 / 2)` carried into the domain through its
/// physical ends, integrated in time.
pub type FluxLedger = [f64; 5];

/// Transport operator for one rank's slice of the spatial grid.
#[derive(Debug, Clone)]
pub struct Transport {
    grid: VelocityGrid,
    centers: Vec<f64>,
    widths: Vec<f64>,
    n_local: usize,
    left: Option<BoundaryCondition>,
    right: Option<BoundaryCondition>,
    global_min_width: f64,
    v1: Vec<f64>,
    invariants: Vec<[f64; 5]>,
}

impl Transport {
    /// `left`/`right` apply only if the rank owns that physical end.
    pub fn new(
        grid: VelocityGrid,
        spatial: &SpatialGrid,
        plan: &DecompositionPlan,
        left: BoundaryCondition,
        right: BoundaryCondition,
    ) -> Result<Self> {
        if plan.cells.end > spatial.len() {
            return Err(Error::Decomposition(format!(
                "rank {} owns cells {:?} of a {}-cell grid",
                plan.rank,
                plan.cells,
                spatial.len()
            )));
        }
        if plan.n_local() < GHOSTS {
            return Err(Error::Decomposition(format!(
                "rank {} owns {} cells; transport needs at least {GHOSTS}",
                plan.rank,
                plan.n_local()
            )));
        }
        for bc in [left, right] {
            if let BoundaryCondition::Wall(w) = bc {
                WallSpec::sudden(w.temperature_before, w.temperature_after, w.normal_sign)?;
            }
        }
        let (centers, widths) = spatial.local_geometry(plan.cells.clone());
        let v1 = (0..grid.len()).map(|idx| grid.velocity(idx)[0]).collect();
        let invariants = (0..grid.len())
            .map(|idx| {
                let v = grid.velocity(idx);
                let w = grid.velocity_weights()[idx];
                [w, v[0] * w, v[1] * w, v[2] * w, 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * w]
            })
            .collect();
        Ok(Self {
            grid,
            centers,
            widths,
            n_local: plan.n_local(),
            left: plan.owns_left_boundary().then_some(left),
            right: plan.owns_right_boundary().then_some(right),
            global_min_width: spatial.min_width(),
            v1,
            invariants,
        })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    /// Width of interior cell `j`.
    pub fn width(&self, j: usize) -> f64 {
        self.widths[j + GHOSTS]
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j + GHOSTS]
    }

    /// Largest stable step for the fastest lattice speed `L`.
    pub fn max_stable_dt(&self) -> f64 {
        self.global_min_width / self.grid.half_width()
    }

    fn extrapolate(&self, field: &mut DistributionField, left_end: bool, inflow_only_zero: bool) {
        let n = self.n_local;
        let (b, b2, ghosts, sign) = if left_end {
            (GHOSTS, GHOSTS + 1, [1usize, 0], 1.0)
        } else {
            (n + 1, n, [n + 2, n + 3], -1.0)
        };
        let xb = self.centers[b];
        let xb2 = self.centers[b2];
        for g in ghosts {
            let s = (self.centers[g] - xb) / (xb - xb2);
            for idx in 0..field.cell_len() {
                let entering = sign * self.v1[idx] > 0.0;
                let value = if inflow_only_zero && entering {
                    0.0
                } else {
                    let fb = field.cell(b)[idx];
                    fb + s * (fb - field.cell(b2)[idx])
                };
                field.cell_mut(g)[idx] = value;
            }
        }
    }

    fn fill_end(&self, field: &mut DistributionField, bc: BoundaryCondition, left_end: bool, t: f64) -> Result<()> {
        match bc {
            BoundaryCondition::Extrapolate => self.extrapolate(field, left_end, false),
            BoundaryCondition::NoInflow => self.extrapolate(field, left_end, true),
            BoundaryCondition::Wall(wall) => {
                let n = self.n_local;
                let (adj, g0, g1) = if left_end { (GHOSTS, 1, 0) } else { (n + 1, n + 2, n + 3) };
                let adjacent = field.cell(adj).to_vec();
                let mut ghost = vec![0.0; field.cell_len()];
                wall_boundary(&self.grid, &wall, t, &adjacent, &mut ghost)?;
                field.cell_mut(g0).copy_from_slice(&ghost);
                field.cell_mut(g1).copy_from_slice(&ghost);
            }
        }
        Ok(())
    }

    /// Ghosts at physical domain ends owned by this rank.
    pub fn fill_physical_ghosts(&self, field: &mut DistributionField, t: f64) -> Result<()> {
        self.check_shape(field)?;
        if let Some(bc) = self.left {
            self.fill_end(field, bc, true, t)?;
        }
        if let Some(bc) = self.right {
            self.fill_end(field, bc, false, t)?;
        }
        Ok(())
    }

    /// Halo exchange with neighbor ranks, then physical-end ghosts.
    pub fn fill_ghosts<C: Communicator + ?Sized>(
        &self,
        comm: &C,
        plan: &DecompositionPlan,
        field: &mut DistributionField,
        t: f64,
    ) -> Result<()> {
        halo_exchange(comm, plan, field)?;
        self.fill_physical_ghosts(field, t)
    }

    fn check_shape(&self, field: &DistributionField) -> Result<()> {
        if field.cell_len() != self.grid.len() || field.n_local() != self.n_local {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len() * (self.n_local + 2 * GHOSTS),
                found: field.data().len(),
            });
        }
        Ok(())
    }

    fn is_wall(bc: Option<BoundaryCondition>) -> bool {
        matches!(bc, Some(BoundaryCondition::Wall(_)))
    }

    /// Limited slopes for storage cells `1 ..= n_local + 2`, one row per cell.
    pub fn reconstruct_slopes(&self, field: &DistributionField) -> Vec<f64> {
        let m = field.cell_len();
        let mut slopes = vec![0.0; (self.n_local + 2) * m];
        let centers = &self.centers;
        slopes.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
            let s = r + 1;
            let (fl, fc, fr) = (field.cell(s - 1), field.cell(s), field.cell(s + 1));
            let h_r = centers[s + 1] - centers[s];
            let h_l = centers[s] - centers[s - 1];
            let h_c = centers[s + 1] - centers[s - 1];
            for idx in 0..m {
                row[idx] = minmod3(
                    (fr[idx] - fc[idx]) / h_r,
                    (fc[idx] - fl[idx]) / h_l,
                    (fr[idx] - fl[idx]) / h_c,
                );
            }
        });
        slopes
    }

    /// Face fluxes for faces `0 ..= n_local`; face `f` separates storage
    /// cells `f + 1` and `f + 2`.
    fn face_fluxes(&self, field: &DistributionField) -> Vec<f64> {
        let m = field.cell_len();
        let slopes = self.reconstruct_slopes(field);
        let mut fluxes = vec![0.0; (self.n_local + 1) * m];
        let zero_left = Self::is_wall(self.left);
        let zero_right = Self::is_wall(self.right);
        let last = self.n_local;
        fluxes.par_chunks_mut(m).enumerate().for_each(|(face, row)| {
            let (sl, sr) = (face + 1, face + 2);
            let wall_face = (face == 0 && zero_left) || (face == last && zero_right);
            let (fl, fr) = (field.cell(sl), field.cell(sr));
            let hl = 0.5 * self.widths[sl];
            let hr = 0.5 * self.widths[sr];
            let (gl, gr) = (&slopes[face * m..(face + 1) * m], &slopes[(face + 1) * m..(face + 2) * m]);
            for idx in 0..m {
                let (left, right) = if wall_face {
                    (fl[idx], fr[idx])
                } else {
                    (fl[idx] + hl * gl[idx], fr[idx] - hr * gr[idx])
                };
                row[idx] = upwind_flux(self.v1[idx], left, right);
            }
        });
        fluxes
    }

    /// One explicit Euler stage on interior cells: `out = field - dt * div F`.
    /// Ghosts of `field` must be filled; `ledger` gains `dt` times the moments
    /// entering through the physical ends.
    pub fn euler_stage(
        &self,
        field: &DistributionField,
        dt: f64,
        out: &mut DistributionField,
        ledger: &mut FluxLedger,
    ) -> Result<()> {
        self.check_shape(field)?;
        self.check_shape(out)?;
        let m = field.cell_len();
        let fluxes = self.face_fluxes(field);
        let widths = &self.widths;
        out.interior_data_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(j, row)| {
                let f = field.interior(j);
                let lam = dt / widths[j + GHOSTS];
                let fin = &fluxes[j * m..(j + 1) * m];
                let fout = &fluxes[(j + 1) * m..(j + 2) * m];
                for idx in 0..m {
                    row[idx] = f[idx] - lam * (fout[idx] - fin[idx]);
                }
            });
        let last = self.n_local;
        for idx in 0..m {
            let mut net = 0.0;
            if self.left.is_some() {
                net += fluxes[idx];
            }
            if self.right.is_some() {
                net -= fluxes[last * m + idx];
            }
            if net != 0.0 {
                for (l, c) in ledger.iter_mut().zip(&self.invariants[idx]) {
                    *l += dt * net * c;
                }
            }
        }
        Ok(())
    }

    /// Advances `field` by `dt` with the two-stage SSP Runge-Kutta scheme,
    /// refreshing ghosts before each stage.
    pub fn step<C: Communicator + ?Sized>(
        &self,
        comm: &C,
        plan: &DecompositionPlan,
        field: &mut DistributionField,
        t: f64,
        dt: f64,
        ledger: &mut FluxLedger,
    ) -> Result<()> {
        let limit = self.max_stable_dt();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let mut stage_ledger = [0.0; 5];
        self.fill_ghosts(comm, plan, field, t)?;
        let mut first = DistributionField::zeros(field.cell_len(), self.n_local);
        self.euler_stage(field, dt, &mut first, &mut stage_ledger)?;
        self.fill_ghosts(comm, plan, &mut first, t + dt)?;
        let mut second = DistributionField::zeros(field.cell_len(), self.n_local);
        self.euler_stage(&first, dt, &mut second, &mut stage_ledger)?;
        for (f, s) in field.interior_data_mut().iter_mut().zip(second.interior_data()) {
            *f = 0.5 * (*f + s);
        }
        for (l, s) in ledger.iter_mut().zip(&stage_ledger) {
            *l += 0.5 * s;
        }
        Ok(())
    }

    /// `dx_j * (moments of cell j)` for each interior cell.
    pub fn cell_totals(&self, field: &DistributionField) -> Vec<[f64; 5]> {
        (0..self.n_local)
            .map(|j| {
                let dx = self.width(j);
                let f = field.interior(j);
                let mut out = [0.0; 5];
                for (idx, c) in self.invariants.iter().enumerate() {
                    for a in 0..5 {
                        out[a] += dx * f[idx] * c[a];
                    }
                }
                out
            })
            .collect()
    }

    /// `sum_j dx_j * (moments of cell j)` over this rank's interior.
    pub fn local_totals(&self, field: &DistributionField) -> [f64; 5] {
        let mut out = [0.0; 5];
        for cell in self.cell_totals(field) {
            for a in 0..5 {
                out[a] += cell[a];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::{plan_decomposition, SoloComm};
    use crate::scenarios::maxwellian;

    #[test]
    fn minmod_cases() {
        assert_eq!(minmod3(1.0, 2.0, 1.5), 1.0);
        assert_eq!(minmod3(-1.0, 2.0, 0.5), 0.0);
        assert_eq!(minmod3(-2.0, -1.0, -1.5), -1.0);
        assert_eq!(minmod3(0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn upwind_cases() {
        assert_eq!(upwind_flux(1.0, 2.0, 7.0), 2.0);
        assert_eq!(upwind_flux(-1.0, 7.0, 3.0), -3.0);
        assert_eq!(upwind_flux(0.0, 5.0, 9.0), 0.0);
    }

    #[test]
    fn zoned_grid_tiles_interval() {
        let g = SpatialGrid::zoned(0.0, &[(1.0, 8), (3.0, 6)]).unwrap();
        assert_eq!(g.len(), 14);
        let c = g.centers();
        let w = g.widths();
        for j in 0..13 {
            assert!((c[j + 1] - c[j] - 0.5 * (w[j] + w[j + 1])).abs() < 1e-14);
        }
        assert!((c[13] + 0.5 * w[13] - 4.0).abs() < 1e-14);
        assert!(SpatialGrid::from_widths(0.0, vec![1.0, 0.0]).is_err());
    }

    fn single_rank(
        vgrid: &VelocityGrid,
        spatial: &SpatialGrid,
        left: BoundaryCondition,
        right: BoundaryCondition,
    ) -> (Transport, DecompositionPlan) {
        let plan = plan_decomposition(spatial.len(), 1).unwrap().remove(0);
        let t = Transport::new(vgrid.clone(), spatial, &plan, left, right).unwrap();
        (t, plan)
    }

    #[test]
    fn linear_data_has_exact_slope() {
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        let sg = SpatialGrid::uniform(0.0, 1.0, 6).unwrap();
        let (tr, _) = single_rank(&vg, &sg, BoundaryCondition::Extrapolate, BoundaryCondition::Extrapolate);
        let mut field = DistributionField::from_cells(64, 6, |j| vec![3.0 * sg.centers()[j] + 1.0; 64]).unwrap();
        tr.fill_physical_ghosts(&mut field, 0.0).unwrap();
        let slopes = tr.reconstruct_slopes(&field);
        for s in slopes {
            assert!((s - 3.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn constant_and_extremum_slopes() {
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        let sg = SpatialGrid::uniform(0.0, 1.0, 5).unwrap();
        let (tr, _) = single_rank(&vg, &sg, BoundaryCondition::Extrapolate, BoundaryCondition::Extrapolate);
        let mut field = DistributionField::from_cells(64, 5, |_| vec![2.5; 64]).unwrap();
        tr.fill_physical_ghosts(&mut field, 0.0).unwrap();
        assert!(tr.reconstruct_slopes(&field).iter().all(|&s| s == 0.0));
        let peak = [0.0, 0.0, 1.0, 0.0, 0.0];
        let mut field = DistributionField::from_cells(64, 5, |j| vec![peak[j]; 64]).unwrap();
        tr.fill_physical_ghosts(&mut field, 0.0).unwrap();
        let slopes = tr.reconstruct_slopes(&field);
        // storage cell 4 = interior 2
        assert!(slopes[3 * 64..4 * 64].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn uniform_field_is_stationary() {
        let vg = VelocityGrid::new(6, 3.0).unwrap();
        let sg = SpatialGrid::zoned(0.0, &[(1.0, 4), (2.0, 3)]).unwrap();
        let (tr, plan) = single_rank(&vg, &sg, BoundaryCondition::Extrapolate, BoundaryCondition::Extrapolate);
        let f0 = maxwellian(&vg, 1.0, [0.2, 0.0, 0.0], 1.0).unwrap();
        let mut field = DistributionField::from_cells(vg.len(), 7, |_| f0.clone()).unwrap();
        let before = field.interior_data().to_vec();
        let mut ledger = [0.0; 5];
        tr.step(&SoloComm, &plan, &mut field, 0.0, 0.5 * tr.max_stable_dt(), &mut ledger).unwrap();
        for (a, b) in before.iter().zip(field.interior_data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_change_equals_boundary_flux() {
        let vg = VelocityGrid::new(6, 3.0).unwrap();
        let sg = SpatialGrid::zoned(0.0, &[(1.0, 6), (3.0, 5)]).unwrap();
        let wall = WallSpec::sudden(1.0, 2.0, 1.0).unwrap();
        let (tr, plan) = single_rank(&vg, &sg, BoundaryCondition::Wall(wall), BoundaryCondition::NoInflow);
        let mut field = DistributionField::from_cells(vg.len(), 11, |j| {
            maxwellian(&vg, 1.0 + 0.3 * (j as f64).sin(), [0.1, 0.0, 0.0], 1.0).unwrap()
        })
        .unwrap();
        let start = tr.local_totals(&field);
        let mut ledger = [0.0; 5];
        let dt = 0.8 * tr.max_stable_dt();
        for n in 0..10 {
            tr.step(&SoloComm, &plan, &mut field, n as f64 * dt, dt, &mut ledger).unwrap();
        }
        let end = tr.local_totals(&field);
        for a in 0..5 {
            let scale = start[a].abs().max(1.0);
            assert!(
                (end[a] - start[a] - ledger[a]).abs() < 1e-13 * scale,
                "moment {a}: {} vs {}",
                end[a] - start[a],
                ledger[a]
            );
        }
    }

    #[test]
    fn wall_balances_equilibrium_flux() {
        let vg = VelocityGrid::new(16, 5.0).unwrap();
        let tw = 1.3;
        let wall = WallSpec::constant(tw, 1.0).unwrap();
        let f = maxwellian(&vg, 1.0, [0.0; 3], tw).unwrap();
        let mut ghost = vec![0.0; vg.len()];
        let sigma = wall_boundary(&vg, &wall, 0.0, &f, &mut ghost).unwrap();
        // Half-space flux of a resolved Maxwellian: sigma close to the density.
        assert!((sigma - 1.0).abs() < 1e-3, "sigma {sigma}");
        let w = vg.velocity_weights();
        let mut net = 0.0;
        for idx in 0..vg.len() {
            let v1 = vg.velocity(idx)[0];
            let face = if v1 > 0.0 { ghost[idx] } else { f[idx] };
            net += v1 * face * w[idx];
        }
        assert!(net.abs() < 1e-15, "net {net}");
    }

    #[test]
    fn wall_is_linear_and_zero_for_vacuum() {
        let vg = VelocityGrid::new(8, 4.0).unwrap();
        let wall = WallSpec::constant(2.0, -1.0).unwrap();
        let mut ghost = vec![1.0; vg.len()];
        assert_eq!(wall_boundary(&vg, &wall, 0.0, &vec![0.0; vg.len()], &mut ghost).unwrap(), 0.0);
        assert!(ghost.iter().all(|&g| g == 0.0));
        let f = maxwellian(&vg, 0.7, [0.3, 0.0, 0.0], 1.1).unwrap();
        let f2: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
        let s1 = wall_boundary(&vg, &wall, 0.0, &f, &mut ghost).unwrap();
        let s2 = wall_boundary(&vg, &wall, 0.0, &f2, &mut ghost).unwrap();
        assert!((s2 - 2.0 * s1).abs() < 1e-14 * s2);
    }

    #[test]
    fn rejects_cfl_violation() {
        let vg = VelocityGrid::new(4, 2.0).unwrap();
        let sg = SpatialGrid::uniform(0.0, 1.0, 4).unwrap();
        let (tr, plan) = single_rank(&vg, &sg, BoundaryCondition::Extrapolate, BoundaryCondition::Extrapolate);
        let mut field = DistributionField::zeros(64, 4);
        let mut ledger = [0.0; 5];
        let dt = 1.01 * tr.max_stable_dt();
        assert!(matches!(
            tr.step(&SoloComm, &plan, &mut field, 0.0, dt, &mut ledger),
            Err(Error::Cfl { .. })
        ));
    }
}
