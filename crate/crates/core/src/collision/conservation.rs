//! Least-squares projection onto the discrete collision invariants.
//!
//! `C` is the 5 x M integration matrix with rows `omega_j`, `v_j^i omega_j`
//! (i = 1..3) and `|v_j|^2 omega_j`. The closest `Q` to `Q~` with `C Q = 0` is
//! `Q = Q~ - C^T (C C^T)^{-1} C Q~`.

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

pub const CONSTRAINTS: usize = 5;

/// Integration matrix and the Cholesky factor of its Gram matrix.
#[derive(Debug, Clone)]
pub struct ConservationOperator {
    rows: [Vec<f64>; CONSTRAINTS],
    chol: [[f64; CONSTRAINTS]; CONSTRAINTS],
}

impl ConservationOperator {
    pub fn new(grid: &VelocityGrid) -> Self {
        let m = grid.len();
        let w = grid.velocity_weights();
        let mut rows: [Vec<f64>; CONSTRAINTS] = Default::default();
        for row in rows.iter_mut() {
            row.reserve_exact(m);
        }
        for (j, &wj) in w.iter().enumerate() {
            let v = grid.velocity(j);
            rows[0].push(wj);
            rows[1].push(v[0] * wj);
            rows[2].push(v[1] * wj);
            rows[3].push(v[2] * wj);
            rows[4].push((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * wj);
        }
        let mut gram = [[0.0; CONSTRAINTS]; CONSTRAINTS];
        for a in 0..CONSTRAINTS {
            for b in 0..=a {
                let s: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                gram[a][b] = s;
                gram[b][a] = s;
            }
        }
        let chol = cholesky(&gram).expect("Gram matrix of the collision invariants is SPD for N >= 4");
        Self { rows, chol }
    }

    /// Rows of the integration matrix.
    pub fn rows(&self) -> &[Vec<f64>; CONSTRAINTS] {
        &self.rows
    }

    /// `C q`.
    pub fn apply(&self, q: &[f64]) -> [f64; CONSTRAINTS] {
        let mut out = [0.0; CONSTRAINTS];
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(q).map(|(c, x)| c * x).sum();
        }
        out
    }

    /// `sum_j |C_ij q_j|` per constraint; the natural scale of `C q` under roundoff.
    pub fn apply_abs(&self, q: &[f64]) -> [f64; CONSTRAINTS] {
        let mut out = [0.0; CONSTRAINTS];
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(q).map(|(c, x)| (c * x).abs()).sum();
        }
        out
    }

    /// Projects `q` in place onto `{Q : C Q = 0}`.
    ///
    /// A second correction pass removes the roundoff left by the first.
    pub fn project_in_place(&self, q: &mut [f64]) -> Result<()> {
        if q.len() != self.rows[0].len() {
            return Err(Error::ShapeMismatch {
                expected: self.rows[0].len(),
                found: q.len(),
            });
        }
        for _ in 0..2 {
            let rhs = self.apply(q);
            let y = self.solve(rhs);
            for (j, qj) in q.iter_mut().enumerate() {
                let mut corr = 0.0;
                for (row, yi) in self.rows.iter().zip(&y) {
                    corr += row[j] * yi;
                }
                *qj -= corr;
            }
        }
        Ok(())
    }

    /// Returns the projection of `q_raw`.
    pub fn conserve(&self, q_raw: &[f64]) -> Result<Vec<f64>> {
        let mut q = q_raw.to_vec();
        self.project_in_place(&mut q)?;
        Ok(q)
    }

    fn solve(&self, rhs: [f64; CONSTRAINTS]) -> [f64; CONSTRAINTS] {
        let l = &self.chol;
        let mut y = [0.0; CONSTRAINTS];
        for i in 0..CONSTRAINTS {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [0.0; CONSTRAINTS];
        for i in (0..CONSTRAINTS).rev() {
            let mut s = y[i];
            for k in i + 1..CONSTRAINTS {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }
}

fn cholesky(a: &[[f64; CONSTRAINTS]; CONSTRAINTS]) -> Option<[[f64; CONSTRAINTS]; CONSTRAINTS]> {
    let mut l = [[0.0; CONSTRAINTS]; CONSTRAINTS];
    for i in 0..CONSTRAINTS {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}
