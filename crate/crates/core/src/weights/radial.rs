//! Radial integrals behind the isotropic convolution weights.
//!
//! With `a = beta |zeta| / 2`, `b = |xi - beta zeta / 2|` and `c = |xi|`, the weight is
//!
//! ```text
//! G(xi, zeta) = 4 pi / (2 pi)^{3/2} * int_0^{r0} r^{lambda+2} [sinc(a r) sinc(b r) - sinc(c r)] dr
//! ```
//!
//! For `lambda` in {0, 1} the integral has a closed form obtained from
//! `sinc(a r) sinc(b r) = [cos(p r) - cos(q r)] / (2 a b r^2)` with
//! `p = a - b`, `q = a + b`.

use std::f64::consts::PI;

/// `4 pi / (sqrt(2 pi))^3`.
pub(crate) fn prefactor() -> f64 {
    4.0 * PI / (2.0 * PI).powf(1.5)
}

/// Nodes per Gauss-Legendre panel.
pub const PANEL_NODES: usize = 16;

/// Below this value of `min(a, b) * r0` the closed-form product term loses
/// digits to cancellation and is evaluated by quadrature instead. Lattice
/// points never fall in this band: `a r0` and `b r0` are either 0 or at least `pi/2`.
const CONDITIONING_FLOOR: f64 = 0.05;

#[inline]
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, `n >= 2`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[0, r0]` with `total_nodes` points,
/// with the `r^{lambda+2}` factor folded into the weights.
#[derive(Debug, Clone)]
pub struct RadialRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialRule {
    pub fn new(r0: f64, total_nodes: usize, lambda: f64) -> Self {
        let panels = (total_nodes / PANEL_NODES).max(1);
        let (x, w) = gauss_legendre(PANEL_NODES);
        let h = r0 / panels as f64;
        let mut points = Vec::with_capacity(panels * PANEL_NODES);
        let mut weights = Vec::with_capacity(panels * PANEL_NODES);
        for p in 0..panels {
            let lo = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let r = lo + 0.5 * h * (xi + 1.0);
                points.push(r);
                weights.push(0.5 * h * wi * r.powf(lambda + 2.0));
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Radial integral (without the `4 pi / (2 pi)^{3/2}` prefactor).
    pub fn integrate(&self, a: f64, b: f64, c: f64) -> f64 {
        let mut acc = 0.0;
        for (&r, &w) in self.points.iter().zip(&self.weights) {
            acc += w * (sinc(a * r) * sinc(b * r) - sinc(c * r));
        }
        acc
    }
}

// int_0^{r0} cos(p r) dr
fn cos_moment0(p: f64, r0: f64) -> f64 {
    r0 * sinc(p * r0)
}

// int_0^{r0} r cos(p r) dr
fn cos_moment1(p: f64, r0: f64) -> f64 {
    let x = p * r0;
    if x.abs() < 1.0 {
        // sum_k (-1)^k x^{2k} / ((2k)! (2k + 2))
        let x2 = x * x;
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..20 {
            acc += term / (2 * k + 2) as f64;
            term *= -x2 / ((2 * k + 1) * (2 * k + 2)) as f64;
        }
        r0 * r0 * acc
    } else {
        (x * x.sin() + x.cos() - 1.0) / (p * p)
    }
}

// int_0^{r0} r^2 sinc(c r) dr
fn sinc_moment0(c: f64, r0: f64) -> f64 {
    let x = c * r0;
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..20 {
            acc += term / (2 * k + 3) as f64;
            term *= -x2 / ((2 * k + 2) * (2 * k + 3)) as f64;
        }
        r0.powi(3) * acc
    } else {
        (x.sin() - x * x.cos()) / (c * c * c)
    }
}

// int_0^{r0} r^3 sinc(c r) dr
fn sinc_moment1(c: f64, r0: f64) -> f64 {
    let x = c * r0;
    if x.abs() < 1.0 {
        let x2 = x * x;
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..20 {
            acc += term / (2 * k + 4) as f64;
            term *= -x2 / ((2 * k + 2) * (2 * k + 3)) as f64;
        }
        r0.powi(4) * acc
    } else {
        ((2.0 - x * x) * x.cos() + 2.0 * x * x.sin() - 2.0) / (c * c * c * c)
    }
}

/// Closed-form radial integral for integer `lambda` (0 or 1), without prefactor.
///
/// Returns `None` for other exponents.
pub(crate) fn closed_form_radial(lambda: f64, r0: f64, a: f64, b: f64, c: f64) -> Option<f64> {
    let hard_spheres = if lambda == 1.0 {
        true
    } else if lambda == 0.0 {
        false
    } else {
        return None;
    };
    let cos_moment = if hard_spheres { cos_moment1 } else { cos_moment0 };
    let sinc_moment = if hard_spheres { sinc_moment1 } else { sinc_moment0 };

    if a == 0.0 {
        // zeta = 0: b == c and the two terms cancel identically.
        return Some(0.0);
    }
    let product = if b == 0.0 {
        sinc_moment(a, r0)
    } else if a.min(b) * r0 < CONDITIONING_FLOOR {
        RadialRule::new(r0, 64 * PANEL_NODES, lambda).integrate(a, b, 0.0)
            + if hard_spheres { r0.powi(4) / 4.0 } else { r0.powi(3) / 3.0 }
    } else {
        let p = a - b;
        let q = a + b;
        (cos_moment(p, r0) - cos_moment(q, r0)) / (2.0 * a * b)
    };
    Some(product - sinc_moment(c, r0))
}
