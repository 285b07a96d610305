//! Spectral collision operator on one spatial cell.
//!
//! `f -> fhat -> Qhat(zeta_k) = sum_m G(xi_m, zeta_k) fhat(xi_m) fhat(zeta_k - xi_m) omega_m
//! -> Q~ -> P_N Q~`, with `fhat(zeta_k - xi_m)` taken as zero when the shifted
//! index leaves the lattice. The convolution costs `O(N^6)` per cell.

mod conservation;
mod direct;

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{TransformScratch, VelocityGrid};
use crate::weights::WeightTable;

pub use conservation::{ConservationOperator, CONSTRAINTS};
pub use direct::{direct_collision_at, direct_collision_oracle, MAX_ORACLE_N};

/// Per-cell buffers, reused across calls.
#[derive(Debug, Clone)]
pub struct CollisionWorkspace {
    fhat: Vec<Complex64>,
    weighted: Vec<Complex64>,
    qhat: Vec<Complex64>,
    q_raw: Vec<f64>,
    scratch: TransformScratch,
    imag_residue: f64,
}

impl CollisionWorkspace {
    pub fn new(grid: &VelocityGrid) -> Self {
        let m = grid.len();
        Self {
            fhat: vec![Complex64::default(); m],
            weighted: vec![Complex64::default(); m],
            qhat: vec![Complex64::default(); m],
            q_raw: vec![0.0; m],
            scratch: grid.scratch(),
            imag_residue: 0.0,
        }
    }

    /// Largest imaginary part discarded by the last inverse transform.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    /// Unprojected collision output `Q~` of the last call.
    pub fn raw_output(&self) -> &[f64] {
        &self.q_raw
    }
}

#[inline]
fn shift_range(k: usize, n: usize) -> (usize, usize) {
    // m with 0 <= k - m + N/2 <= N - 1
    let h = n / 2;
    let lo = (k + h + 1).saturating_sub(n);
    let hi = (k + h).min(n - 1);
    (lo, hi)
}

/// `Qhat(zeta_k)` for every lattice `k`, written into `out`.
///
/// Parallel over `k` on the current rayon pool; each sum runs in fixed
/// lexicographic order of `m`, so the result is independent of the worker count.
pub fn evaluate_qhat_into(
    grid: &VelocityGrid,
    table: &WeightTable,
    fhat: &[Complex64],
    weighted: &mut [Complex64],
    out: &mut [Complex64],
) -> Result<()> {
    let n = grid.n();
    let m_len = grid.len();
    for len in [fhat.len(), weighted.len(), out.len()] {
        if len != m_len {
            return Err(Error::ShapeMismatch {
                expected: m_len,
                found: len,
            });
        }
    }
    if !table.matches_grid(grid) {
        return Err(Error::InvalidArgument(format!(
            "weight table built for N = {}, L = {} used on grid N = {}, L = {}",
            table.n(),
            table.half_width(),
            n,
            grid.half_width()
        )));
    }
    for ((w, f), omega) in weighted.iter_mut().zip(fhat).zip(grid.fourier_weights().iter()) {
        *w = *f * *omega;
    }
    let weighted: &[Complex64] = weighted;
    let h = n / 2;
    out.par_iter_mut().enumerate().for_each(|(k, slot)| {
        let [k1, k2, k3] = grid.unravel(k);
        let g = table.zeta_slice(k);
        let (lo1, hi1) = shift_range(k1, n);
        let (lo2, hi2) = shift_range(k2, n);
        let (lo3, hi3) = shift_range(k3, n);
        let mut acc = Complex64::default();
        for m1 in lo1..=hi1 {
            let j1 = k1 + h - m1;
            for m2 in lo2..=hi2 {
                let j2 = k2 + h - m2;
                let base_m = (m1 * n + m2) * n;
                let base_j = (j1 * n + j2) * n;
                for m3 in lo3..=hi3 {
                    let j3 = k3 + h - m3;
                    acc += weighted[base_m + m3] * fhat[base_j + j3] * g[base_m + m3];
                }
            }
        }
        *slot = acc;
    });
    Ok(())
}

/// Allocating form of [`evaluate_qhat_into`].
pub fn evaluate_qhat(
    grid: &VelocityGrid,
    table: &WeightTable,
    fhat: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mut weighted = vec![Complex64::default(); grid.len()];
    let mut out = vec![Complex64::default(); grid.len()];
    evaluate_qhat_into(grid, table, fhat, &mut weighted, &mut out)?;
    Ok(out)
}

/// Spectral collision operator bound to one grid and weight table.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    grid: VelocityGrid,
    table: Arc<WeightTable>,
    conservation: Arc<ConservationOperator>,
}

impl CollisionOperator {
    pub fn new(grid: VelocityGrid, table: Arc<WeightTable>) -> Result<Self> {
        if !table.matches_grid(&grid) {
            return Err(Error::InvalidArgument(format!(
                "weight table built for N = {}, L = {} does not match grid N = {}, L = {}",
                table.n(),
                table.half_width(),
                grid.n(),
                grid.half_width()
            )));
        }
        let conservation = Arc::new(ConservationOperator::new(&grid));
        Ok(Self {
            grid,
            table,
            conservation,
        })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn conservation(&self) -> &ConservationOperator {
        &self.conservation
    }

    pub fn workspace(&self) -> CollisionWorkspace {
        CollisionWorkspace::new(&self.grid)
    }

    /// Unprojected `Q~(f, f)` into `ws.raw_output()`.
    pub fn raw_into(&self, ws: &mut CollisionWorkspace, f: &[f64]) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: f.len(),
            });
        }
        if let Some(i) = f.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "collision input at velocity index {i} is {}",
                f[i]
            )));
        }
        self.grid.forward_into(f, &mut ws.fhat, &mut ws.scratch)?;
        evaluate_qhat_into(
            &self.grid,
            &self.table,
            &ws.fhat,
            &mut ws.weighted,
            &mut ws.qhat,
        )?;
        ws.imag_residue = self
            .grid
            .inverse_into(&mut ws.qhat, &mut ws.q_raw, &mut ws.scratch)?;
        Ok(())
    }

    /// `(1 / eps) P_N Q~(f, f)` into `out`.
    pub fn collide_into(
        &self,
        ws: &mut CollisionWorkspace,
        f: &[f64],
        epsilon: f64,
        out: &mut [f64],
    ) -> Result<()> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Knudsen number must be positive, got {epsilon}"
            )));
        }
        if out.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: out.len(),
            });
        }
        self.raw_into(ws, f)?;
        out.copy_from_slice(&ws.q_raw);
        self.conservation.project_in_place(out)?;
        let inv = 1.0 / epsilon;
        for x in out.iter_mut() {
            *x *= inv;
        }
        Ok(())
    }

    pub fn collide(&self, ws: &mut CollisionWorkspace, f: &[f64], epsilon: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        self.collide_into(ws, f, epsilon, &mut out)?;
        Ok(out)
    }
}
