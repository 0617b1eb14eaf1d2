//! Mesh, cut rules and dof layout bundled for one geometric configuration,
//! plus evaluation of discrete fields.

use crate::cut::{build_rules, QuadratureSet};
use crate::dofs::{DofLayout, DofStatus};
use crate::error::Result;
use crate::fe::{FeTriplet, NodeKind, ScalarElement, Shape};
use crate::geometry::{classify_elements, AffineMap, BackgroundMesh, LevelSet, Point};

/// Gauss points per interface chord.
pub const SURFACE_POINTS: usize = 3;

pub type VectorField<'a> = &'a dyn Fn(Point) -> [f64; 2];
pub type ScalarField<'a> = &'a dyn Fn(Point) -> f64;

#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: BackgroundMesh,
    pub rules: QuadratureSet,
    pub layout: DofLayout,
}

/// Shape values with physical gradients.
pub(crate) fn physical_shape(map: &AffineMap, el: ScalarElement, x: Point) -> Shape {
    let mut s = el.eval_unchecked(map.to_reference(x));
    for k in 0..s.len {
        s.grad[k] = map.push_gradient(s.grad[k]);
    }
    s
}

impl Discretization {
    pub fn new(n: usize, triplet: FeTriplet, ls: &dyn LevelSet) -> Result<Self> {
        let mesh = BackgroundMesh::new(n, triplet.cell_kind())?;
        let class = classify_elements(&mesh, ls);
        let rules = build_rules(&mesh, &class, ls, triplet.volume_degree(), SURFACE_POINTS)?;
        let layout = DofLayout::build(&mesh, &rules, triplet, ls)?.prune_multiplier(&rules);
        Ok(Self { mesh, rules, layout })
    }

    pub fn triplet(&self) -> FeTriplet {
        self.layout.triplet
    }

    pub fn h(&self) -> f64 {
        self.layout.h
    }

    pub fn velocity_shape(&self, map: &AffineMap, x: Point) -> Shape {
        physical_shape(map, self.layout.velocity.element, x)
    }

    pub fn pressure_shape(&self, map: &AffineMap, x: Point) -> Shape {
        physical_shape(map, self.layout.pressure.element, x)
    }

    /// Nodal velocity values on the outer wall, zero elsewhere; indexed
    /// `2·node + c`.
    pub fn wall_values(&self, wall: VectorField) -> Vec<f64> {
        let sp = &self.layout.velocity;
        let mut out = vec![0.0; 2 * sp.num_dofs()];
        for d in 0..sp.num_dofs() {
            if self.layout.on_boundary[d] && self.layout.velocity_status[d] != DofStatus::Removed {
                let v = wall(sp.position(d));
                out[2 * d] = v[0];
                out[2 * d + 1] = v[1];
            }
        }
        out
    }

    /// Scatters an unknown vector into nodal fields, filling wall nodes from
    /// `wall` (same indexing as [`Self::wall_values`]).
    pub fn expand(&self, x: &[f64], wall: Option<&[f64]>) -> FieldVectors {
        let l = &self.layout;
        let nv = l.velocity.num_dofs();
        let mut vel = match wall {
            Some(w) => w.to_vec(),
            None => vec![0.0; 2 * nv],
        };
        for d in 0..nv {
            for c in 0..2 {
                if let Some(i) = l.velocity_unknown(d, c) {
                    vel[2 * d + c] = x[i];
                }
            }
        }
        let pre = (0..l.pressure.num_dofs()).map(|d| l.pressure_unknown(d).map_or(0.0, |i| x[l.pressure_offset() + i])).collect();
        let lam = (0..self.mesh.num_elements())
            .map(|e| match l.multiplier_unknown(e, 0) {
                Some(i) => [x[l.multiplier_offset() + i], x[l.multiplier_offset() + i + 1]],
                None => [0.0, 0.0],
            })
            .collect();
        let mean = x.get(l.mean_row()).copied().unwrap_or(0.0);
        FieldVectors { vel, pre, lam, mean }
    }

    /// Inverse of [`Self::expand`] on the retained dofs.
    pub fn restrict(&self, f: &FieldVectors) -> Vec<f64> {
        let l = &self.layout;
        let mut x = vec![0.0; l.num_unknowns()];
        for d in 0..l.velocity.num_dofs() {
            for c in 0..2 {
                if let Some(i) = l.velocity_unknown(d, c) {
                    x[i] = f.vel[2 * d + c];
                }
            }
        }
        for d in 0..l.pressure.num_dofs() {
            if let Some(i) = l.pressure_unknown(d) {
                x[l.pressure_offset() + i] = f.pre[d];
            }
        }
        for &e in l.multiplier_elements() {
            let i = l.multiplier_unknown(e, 0).unwrap();
            x[l.multiplier_offset() + i] = f.lam[e][0];
            x[l.multiplier_offset() + i + 1] = f.lam[e][1];
        }
        x[l.mean_row()] = f.mean;
        x
    }

    /// Interpolates smooth fields: nodal values at lattice nodes, interior
    /// coefficients fixed by matching the field at the interior node, and
    /// the multiplier as its chord average.
    pub fn interpolate(&self, u: VectorField, p: ScalarField, lambda: &dyn Fn(Point, [f64; 2]) -> [f64; 2]) -> FieldVectors {
        let l = &self.layout;
        let mut vel = vec![0.0; 2 * l.velocity.num_dofs()];
        let mut pre = vec![0.0; l.pressure.num_dofs()];
        for e in 0..self.mesh.num_elements() {
            let map = self.mesh.affine_map(e);
            let uv = |x: Point| {
                let v = u(x);
                v.to_vec()
            };
            interpolate_element(&map, l.velocity.element, l.velocity.element_dofs(e), 2, &uv, &mut vel);
            interpolate_element(&map, l.pressure.element, l.pressure.element_dofs(e), 1, &|x| vec![p(x)], &mut pre);
        }
        let mut lam = vec![[0.0, 0.0]; self.mesh.num_elements()];
        for &e in l.multiplier_elements() {
            let r = self.rules.rule(e).expect("multiplier on a fluid-free element");
            let len: f64 = r.surface_points.iter().map(|s| s.weight).sum();
            let mut acc = [0.0, 0.0];
            for s in &r.surface_points {
                let v = lambda(s.x, s.normal);
                acc[0] += s.weight * v[0];
                acc[1] += s.weight * v[1];
            }
            lam[e] = [acc[0] / len, acc[1] / len];
        }
        FieldVectors { vel, pre, lam, mean: 0.0 }
    }
}

fn interpolate_element(map: &AffineMap, el: ScalarElement, dofs: &[usize], ncomp: usize, f: &dyn Fn(Point) -> Vec<f64>, out: &mut [f64]) {
    let nodes = el.nodes();
    let lattice: Vec<(usize, Point)> = nodes
        .iter()
        .enumerate()
        .filter_map(|(k, n)| match n {
            NodeKind::Lattice(xi) => Some((k, *xi)),
            NodeKind::Interior(_) => None,
        })
        .collect();
    let lattice_vals: Vec<Vec<f64>> = lattice.iter().map(|&(_, xi)| f(map.to_physical(xi))).collect();
    for (&(k, _), v) in lattice.iter().zip(&lattice_vals) {
        for c in 0..ncomp {
            out[ncomp * dofs[k] + c] = v[c];
        }
    }
    for (k, node) in nodes.iter().enumerate() {
        if let NodeKind::Interior(xi) = *node {
            let s = el.eval_unchecked(xi);
            let target = f(map.to_physical(xi));
            for c in 0..ncomp {
                let partial: f64 = lattice.iter().zip(&lattice_vals).map(|(&(a, _), v)| v[c] * s.val[a]).sum();
                out[ncomp * dofs[k] + c] = (target[c] - partial) / s.val[k];
            }
        }
    }
}

/// Nodal representation of a discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVectors {
    /// `2·node + c`.
    pub vel: Vec<f64>,
    pub pre: Vec<f64>,
    /// Per element; zero where no multiplier is retained.
    pub lam: Vec<[f64; 2]>,
    pub mean: f64,
}

/// Velocity, its gradient (`grad[c][j] = ∂_j u_c`) and pressure at a point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointValues {
    pub u: [f64; 2],
    pub grad: [[f64; 2]; 2],
    pub p: f64,
}

impl PointValues {
    /// Symmetric gradient.
    pub fn strain(&self) -> [[f64; 2]; 2] {
        let off = 0.5 * (self.grad[0][1] + self.grad[1][0]);
        [[self.grad[0][0], off], [off, self.grad[1][1]]]
    }

    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }

    /// `2ν D(u) n − p n`.
    pub fn traction(&self, nu: f64, n: [f64; 2]) -> [f64; 2] {
        let d = self.strain();
        [2.0 * nu * (d[0][0] * n[0] + d[0][1] * n[1]) - self.p * n[0], 2.0 * nu * (d[1][0] * n[0] + d[1][1] * n[1]) - self.p * n[1]]
    }
}

impl FieldVectors {
    pub fn eval(&self, disc: &Discretization, e: usize, map: &AffineMap, x: Point) -> PointValues {
        let l = &disc.layout;
        let sv = disc.velocity_shape(map, x);
        let sp = disc.pressure_shape(map, x);
        let mut out = PointValues::default();
        for (a, &d) in l.velocity.element_dofs(e).iter().enumerate() {
            for c in 0..2 {
                let coef = self.vel[2 * d + c];
                out.u[c] += coef * sv.val[a];
                out.grad[c][0] += coef * sv.grad[a][0];
                out.grad[c][1] += coef * sv.grad[a][1];
            }
        }
        for (j, &d) in l.pressure.element_dofs(e).iter().enumerate() {
            out.p += self.pre[d] * sp.val[j];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;

    fn disc(t: FeTriplet, n: usize) -> Discretization {
        Discretization::new(n, t, &Circle::new([0.5, 0.5], 0.21)).unwrap()
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        // Quadratic velocity and linear pressure lie in the P2/P1 and Q2/Q1 spaces.
        let u = |x: Point| [x[0] * x[0] - 2.0 * x[0] * x[1], 1.0 + x[1] * x[1]];
        let p = |x: Point| 3.0 * x[0] - x[1];
        for t in [FeTriplet::P2P1P0, FeTriplet::Q2Q1Q0] {
            let d = disc(t, 8);
            let f = d.interpolate(&u, &p, &|_, _| [0.0, 0.0]);
            for e in [0, 17, 40, 63] {
                let map = d.mesh.affine_map(e);
                let x = d.mesh.centroid(e);
                let v = f.eval(&d, e, &map, [x[0] + 0.01, x[1] - 0.005]);
                let y = [x[0] + 0.01, x[1] - 0.005];
                assert!((v.u[0] - u(y)[0]).abs() < 1e-12 && (v.u[1] - u(y)[1]).abs() < 1e-12);
                assert!((v.p - p(y)).abs() < 1e-12);
                assert!((v.grad[0][0] - (2.0 * y[0] - 2.0 * y[1])).abs() < 1e-10);
                assert!((v.grad[0][1] + 2.0 * y[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bubble_interpolation_matches_centroid() {
        let d = disc(FeTriplet::P1bP1P0, 8);
        let u = |x: Point| [(3.0 * x[0]).sin(), x[0] * x[1]];
        let f = d.interpolate(&u, &|_| 0.0, &|_, _| [0.0, 0.0]);
        let e = 33;
        let c = d.mesh.centroid(e);
        let v = f.eval(&d, e, &d.mesh.affine_map(e), c);
        assert!((v.u[0] - u(c)[0]).abs() < 1e-12 && (v.u[1] - u(c)[1]).abs() < 1e-12);
    }

    #[test]
    fn expand_restrict_roundtrip() {
        let d = disc(FeTriplet::P2P1P0, 10);
        let n = d.layout.num_unknowns();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(d.restrict(&d.expand(&x, None)), x);
    }
}
