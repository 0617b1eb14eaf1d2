//! Closed-form Stokes solution used to measure discretization errors.

use std::f64::consts::PI;

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub nu: f64,
    /// Constant added to the pressure, e.g. to make it mean-free on a
    /// fluid domain that is not symmetric about `y = 1/2`.
    pub pressure_shift: f64,
}

impl ManufacturedSolution {
    pub fn new(nu: f64) -> Self {
        Self { nu, pressure_shift: 0.0 }
    }

    pub fn velocity(&self, x: Point) -> [f64; 2] {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [cx * sy, -sx * cy]
    }

    /// `grad[c][j] = ∂_j u_c`.
    pub fn velocity_gradient(&self, x: Point) -> [[f64; 2]; 2] {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [[-PI * sx * sy, PI * cx * cy], [-PI * cx * cy, PI * sx * sy]]
    }

    pub fn strain(&self, x: Point) -> [[f64; 2]; 2] {
        let g = self.velocity_gradient(x);
        let off = 0.5 * (g[0][1] + g[1][0]);
        [[g[0][0], off], [off, g[1][1]]]
    }

    pub fn pressure(&self, x: Point) -> f64 {
        (x[1] - 0.5) * (2.0 * PI * x[0]).cos() + (x[0] - 0.5) * (2.0 * PI * x[1]).sin() + self.pressure_shift
    }

    pub fn pressure_gradient(&self, x: Point) -> [f64; 2] {
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
        [-2.0 * PI * (x[1] - 0.5) * s2x + s2y, c2x + 2.0 * PI * (x[0] - 0.5) * c2y]
    }

    /// `−νΔu + ∇p`; here `Δu = −2π² u`.
    pub fn body_force(&self, x: Point) -> [f64; 2] {
        let u = self.velocity(x);
        let gp = self.pressure_gradient(x);
        let k = 2.0 * self.nu * PI * PI;
        [k * u[0] + gp[0], k * u[1] + gp[1]]
    }

    /// Normal traction `2νD(u)n − pn`.
    pub fn traction(&self, x: Point, n: [f64; 2]) -> [f64; 2] {
        let d = self.strain(x);
        let p = self.pressure(x);
        [2.0 * self.nu * (d[0][0] * n[0] + d[0][1] * n[1]) - p * n[0], 2.0 * self.nu * (d[1][0] * n[0] + d[1][1] * n[1]) - p * n[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, LevelSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ms() -> ManufacturedSolution {
        ManufacturedSolution::new(0.8)
    }

    #[test]
    fn point_values() {
        let u = ms().velocity([0.25, 0.25]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] + 0.5).abs() < 1e-15);
        assert_eq!(ms().pressure([0.5, 0.5]), 0.0);
    }

    #[test]
    fn divergence_free_with_diagonal_strain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let g = ms().velocity_gradient(x);
            assert!((g[0][0] + g[1][1]).abs() < 1e-12);
            assert!(ms().strain(x)[0][1].abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = ms();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-5;
        for _ in 0..20 {
            let x = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
            let g = m.velocity_gradient(x);
            let gp = m.pressure_gradient(x);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += eps;
                xm[j] -= eps;
                for c in 0..2 {
                    let fd = (m.velocity(xp)[c] - m.velocity(xm)[c]) / (2.0 * eps);
                    assert!((fd - g[c][j]).abs() < 1e-8);
                }
                let fd = (m.pressure(xp) - m.pressure(xm)) / (2.0 * eps);
                assert!((fd - gp[j]).abs() < 1e-8);
            }
            // Laplacian by the five-point stencil.
            let h = 1e-4;
            let f = m.body_force(x);
            for c in 0..2 {
                let u = |dx: f64, dy: f64| m.velocity([x[0] + dx, x[1] + dy])[c];
                let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
                assert!((f[c] - (-m.nu * lap + gp[c])).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn boundary_datum_compatible() {
        let c = Circle::new([0.5, 0.5], 0.21);
        let m = 4000;
        let mut flux = 0.0;
        for k in 0..m {
            let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let x = [0.5 + 0.21 * t.cos(), 0.5 + 0.21 * t.sin()];
            let g = c.gradient(x).unwrap();
            let u = ms().velocity(x);
            flux += (u[0] * g[0] + u[1] * g[1]) * 2.0 * PI * 0.21 / m as f64;
        }
        assert!(flux.abs() < 1e-6);
    }
}
