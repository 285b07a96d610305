//! Truncated velocity domain and its Fourier dual.
//!
//! The velocity lattice is the centered cube `v_k = dv (k - N/2)`, `k = 0..N-1`,
//! covering `[-L, L - dv]` in each direction, and the Fourier lattice is
//! `zeta_k = dzeta (k - N/2)` with `dzeta = pi / L`, so that
//! `dv * dzeta = 2 pi / N`.
//!
//! Quadrature is the trapezoid rule on `[-L, L]` with the value at `+L`
//! taken as zero: the per-axis coefficient is 1/2 at the two extreme lattice
//! indices and 1 elsewhere.
//!
//! Arrays over the lattice are flat `Vec`s in row-major order with the first
//! velocity component (the transport direction) varying slowest.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Cubic velocity lattice, Fourier lattice, and quadrature weights.
#[derive(Clone)]
pub struct VelocityGrid {
    n: usize,
    half_width: f64,
    dv: f64,
    dzeta: f64,
    nodes: Vec<f64>,
    zeta_nodes: Vec<f64>,
    coeffs: Vec<f64>,
    velocity_weights: Arc<[f64]>,
    fourier_weights: Arc<[f64]>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for VelocityGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocityGrid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .field("dv", &self.dv)
            .field("dzeta", &self.dzeta)
            .finish()
    }
}

impl PartialEq for VelocityGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

/// Scratch buffers for the 3-D transforms.
#[derive(Debug, Clone)]
pub struct TransformScratch {
    line: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl VelocityGrid {
    /// Builds the grid with `n` points per dimension on the cube of half-width `half_width`.
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "N must be an even integer >= 4, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "L must be positive and finite, got {half_width}"
            )));
        }
        let dv = 2.0 * half_width / n as f64;
        let dzeta = PI / half_width;
        let h = (n / 2) as f64;
        let nodes: Vec<f64> = (0..n).map(|k| dv * (k as f64 - h)).collect();
        let zeta_nodes: Vec<f64> = (0..n).map(|k| dzeta * (k as f64 - h)).collect();
        let coeffs: Vec<f64> = (0..n)
            .map(|k| if k == 0 || k == n - 1 { 0.5 } else { 1.0 })
            .collect();

        let cube = |scale: f64| -> Arc<[f64]> {
            let s3 = scale * scale * scale;
            let mut w = Vec::with_capacity(n * n * n);
            for &a in &coeffs {
                for &b in &coeffs {
                    for &c in &coeffs {
                        w.push(a * b * c * s3);
                    }
                }
            }
            w.into()
        };
        let velocity_weights = cube(dv);
        let fourier_weights = cube(dzeta);

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        Ok(Self {
            n,
            half_width,
            dv,
            dzeta,
            nodes,
            zeta_nodes,
            coeffs,
            velocity_weights,
            fourier_weights,
            fft,
            ifft,
        })
    }

    /// Points per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of lattice points, `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn dzeta(&self) -> f64 {
        self.dzeta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn zeta_nodes(&self) -> &[f64] {
        &self.zeta_nodes
    }

    /// Per-axis trapezoid coefficients (1/2 at the extreme indices, 1 inside).
    pub fn trapezoid_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Velocity quadrature weights `omega_m = c_{m1} c_{m2} c_{m3} dv^3`.
    pub fn velocity_weights(&self) -> &[f64] {
        &self.velocity_weights
    }

    /// Fourier quadrature weights `omega_m = c_{m1} c_{m2} c_{m3} dzeta^3`.
    pub fn fourier_weights(&self) -> &[f64] {
        &self.fourier_weights
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Velocity vector at flat lattice index `idx`.
    #[inline]
    pub fn velocity(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.nodes[i], self.nodes[j], self.nodes[k]]
    }

    /// Fourier vector at flat lattice index `idx`.
    #[inline]
    pub fn zeta(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.zeta_nodes[i], self.zeta_nodes[j], self.zeta_nodes[k]]
    }

    /// Flat index of the lattice origin (`v = 0`, `zeta = 0`).
    pub fn origin_index(&self) -> usize {
        let h = self.n / 2;
        self.index(h, h, h)
    }

    pub fn scratch(&self) -> TransformScratch {
        let len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        TransformScratch {
            line: vec![Complex64::default(); self.n],
            fft: vec![Complex64::default(); len],
        }
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    /// `(-1)^{i+j+k}` for the centered-lattice phase, times the constant `(-1)^{3N/2}`.
    #[inline]
    fn phase_sign(&self, idx: usize) -> f64 {
        let [i, j, k] = self.unravel(idx);
        let parity = i + j + k + (self.n / 2) * 3;
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `fhat(zeta_k) = (dv / sqrt(2 pi))^3 sum_m c_m f(v_m) exp(-i zeta_k . v_m)`.
    pub fn forward_transform(&self, f: &[f64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); self.len()];
        self.forward_into(f, &mut out, &mut self.scratch())?;
        Ok(out)
    }

    pub fn forward_into(
        &self,
        f: &[f64],
        out: &mut [Complex64],
        scratch: &mut TransformScratch,
    ) -> Result<()> {
        self.check_len(f.len())?;
        self.check_len(out.len())?;
        // zeta_k . v_m = (2 pi / N)(k - N/2)(m - N/2) per axis: pre- and
        // post-multiplying by (-1)^m and (-1)^k turns the centered sum into a
        // plain index-space DFT.
        let c = &self.coeffs;
        for (m, slot) in out.iter_mut().enumerate() {
            let [i, j, k] = self.unravel(m);
            let sign = if (i + j + k) % 2 == 0 { 1.0 } else { -1.0 };
            *slot = Complex64::new(sign * c[i] * c[j] * c[k] * f[m], 0.0);
        }
        self.fft3(out, scratch, &*self.fft);
        let scale = (self.dv / (2.0 * PI).sqrt()).powi(3);
        for (k, slot) in out.iter_mut().enumerate() {
            *slot *= self.phase_sign(k) * scale;
        }
        Ok(())
    }

    /// `Re[(dzeta / sqrt(2 pi))^3 sum_m g(zeta_m) exp(+i v_k . zeta_m)]`, with the
    /// discarded imaginary part's maximum magnitude returned alongside.
    ///
    /// The inverse uses unit coefficients on the Fourier lattice, so that
    /// `inverse(forward(f)) = c_k f_k`: exact at interior nodes.
    pub fn inverse_transform(&self, g: &[Complex64]) -> Result<(Vec<f64>, f64)> {
        let mut out = vec![0.0; self.len()];
        let mut buf = g.to_vec();
        let residue = self.inverse_into(&mut buf, &mut out, &mut self.scratch())?;
        Ok((out, residue))
    }

    /// In-place inverse: `g` is consumed as workspace.
    pub fn inverse_into(
        &self,
        g: &mut [Complex64],
        out: &mut [f64],
        scratch: &mut TransformScratch,
    ) -> Result<f64> {
        self.check_len(g.len())?;
        self.check_len(out.len())?;
        for (m, slot) in g.iter_mut().enumerate() {
            let [i, j, k] = self.unravel(m);
            if (i + j + k) % 2 == 1 {
                *slot = -*slot;
            }
        }
        self.fft3(g, scratch, &*self.ifft);
        let scale = (self.dzeta / (2.0 * PI).sqrt()).powi(3);
        let mut residue = 0.0f64;
        for (k, (dst, src)) in out.iter_mut().zip(g.iter()).enumerate() {
            let value = *src * (self.phase_sign(k) * scale);
            *dst = value.re;
            residue = residue.max(value.im.abs());
        }
        Ok(residue)
    }

    fn fft3(&self, data: &mut [Complex64], scratch: &mut TransformScratch, plan: &dyn Fft<f64>) {
        let n = self.n;
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch.fft);
        // Middle axis.
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    scratch.line[j] = data[(i * n + j) * n + k];
                }
                plan.process_with_scratch(&mut scratch.line, &mut scratch.fft);
                for j in 0..n {
                    data[(i * n + j) * n + k] = scratch.line[j];
                }
            }
        }
        // First axis.
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    scratch.line[i] = data[(i * n + j) * n + k];
                }
                plan.process_with_scratch(&mut scratch.line, &mut scratch.fft);
                for i in 0..n {
                    data[(i * n + j) * n + k] = scratch.line[i];
                }
            }
        }
    }
}
