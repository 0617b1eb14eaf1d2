//! Structured background mesh of the unit box, level-set description of the
//! immersed solid, and element classification.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Quad,
}

impl CellKind {
    pub fn vertices_per_element(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Quad => 4,
        }
    }
}

/// Uniform mesh of `[0,1]²` with `n` cells per axis.
///
/// Vertex `(i, j)` has index `i + j (n + 1)`. Triangle meshes split every
/// cell along its lower-left to upper-right diagonal into a lower triangle
/// `(v00, v10, v11)` and an upper triangle `(v00, v11, v01)`; element `2c`
/// is the lower and `2c + 1` the upper half of cell `c = i + j n`.
#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    n: usize,
    kind: CellKind,
    vertices: Vec<Point>,
    connectivity: Vec<usize>,
}

impl BackgroundMesh {
    pub fn new(n: usize, kind: CellKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::MeshTooCoarse(n));
        }
        let step = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * step, j as f64 * step]);
            }
        }
        let vid = |i: usize, j: usize| i + j * (n + 1);
        let mut connectivity = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                match kind {
                    CellKind::Triangle => {
                        connectivity.extend_from_slice(&[v00, v10, v11]);
                        connectivity.extend_from_slice(&[v00, v11, v01]);
                    }
                    CellKind::Quad => connectivity.extend_from_slice(&[v00, v10, v11, v01]),
                }
            }
        }
        Ok(Self { n, kind, vertices, connectivity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_elements(&self) -> usize {
        self.connectivity.len() / self.kind.vertices_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.kind.vertices_per_element();
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn element_points(&self, e: usize) -> Vec<Point> {
        self.element(e).iter().map(|&v| self.vertices[v]).collect()
    }

    /// Cell `(i, j)` containing element `e`.
    pub fn cell_of(&self, e: usize) -> (usize, usize) {
        let c = match self.kind {
            CellKind::Triangle => e / 2,
            CellKind::Quad => e,
        };
        (c % self.n, c / self.n)
    }

    /// Analytic element diameter, the cell diagonal `√2 / n`.
    pub fn h_analytic(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64
    }

    /// Largest vertex-to-vertex distance over all elements.
    pub fn h_measured(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| {
                let p = self.element_points(e);
                let mut d: f64 = 0.0;
                for a in 0..p.len() {
                    for b in a + 1..p.len() {
                        d = d.max(dist(p[a], p[b]));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    pub fn element_area(&self, e: usize) -> f64 {
        polygon_area(&self.element_points(e))
    }

    pub fn affine_map(&self, e: usize) -> AffineMap {
        let p = self.element_points(e);
        match self.kind {
            CellKind::Triangle => AffineMap::from_columns(p[0], sub(p[1], p[0]), sub(p[2], p[0])),
            CellKind::Quad => AffineMap::from_columns(p[0], sub(p[1], p[0]), sub(p[3], p[0])),
        }
    }

    pub fn centroid(&self, e: usize) -> Point {
        let p = self.element_points(e);
        let k = p.len() as f64;
        let s = p.iter().fold([0.0, 0.0], |acc, q| [acc[0] + q[0], acc[1] + q[1]]);
        [s[0] / k, s[1] / k]
    }
}

/// Affine map `x = origin + J ξ` from a reference element.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Point,
    pub jac: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    det: f64,
}

impl AffineMap {
    fn from_columns(origin: Point, c0: Point, c1: Point) -> Self {
        let jac = [[c0[0], c1[0]], [c0[1], c1[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Self { origin, jac, inv, det }
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        [self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1], self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1]]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = sub(x, self.origin);
        [self.inv[0][0] * d[0] + self.inv[0][1] * d[1], self.inv[1][0] * d[0] + self.inv[1][1] * d[1]]
    }

    /// Maps a reference gradient to physical coordinates (`J^{-T} ĝ`).
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [self.inv[0][0] * g[0] + self.inv[1][0] * g[1], self.inv[0][1] * g[0] + self.inv[1][1] * g[1]]
    }
}

/// Implicit interface description. Negative inside the solid, positive in
/// the fluid.
pub trait LevelSet {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Result<[f64; 2]>;
}

/// Signed distance to a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn circumference(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

impl LevelSet for Circle {
    fn value(&self, x: Point) -> f64 {
        dist(x, self.center) - self.radius
    }

    fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        let d = sub(x, self.center);
        let r = norm(d);
        if r == 0.0 {
            return Err(Error::DegeneratePoint(x[0], x[1]));
        }
        Ok([d[0] / r, d[1] / r])
    }
}

/// Returns `(φ(x), ∇φ(x))`.
pub fn eval_levelset(ls: &dyn LevelSet, x: Point) -> Result<(f64, [f64; 2])> {
    Ok((ls.value(x), ls.gradient(x)?))
}

/// Unit normal on the interface pointing out of the fluid, `-∇φ/|∇φ|`.
///
/// Also used at points of the per-element interface chord, which lie within
/// `O(h²)` of the exact interface.
pub fn interface_normal(ls: &dyn LevelSet, x: Point) -> Result<[f64; 2]> {
    let g = ls.gradient(x)?;
    let r = norm(g);
    if r == 0.0 {
        return Err(Error::DegeneratePoint(x[0], x[1]));
    }
    Ok([-g[0] / r, -g[1] / r])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Fluid,
    Solid,
    Cut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementClass {
    pub tags: Vec<Tag>,
}

impl ElementClass {
    pub fn count(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn cut_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.tags.iter().enumerate().filter(|(_, &t)| t == Tag::Cut).map(|(e, _)| e)
    }
}

/// Tags every element from the level-set signs at its vertices and centroid.
pub fn classify_elements(mesh: &BackgroundMesh, ls: &dyn LevelSet) -> ElementClass {
    let phi: Vec<f64> = mesh.vertices().iter().map(|&x| ls.value(x)).collect();
    let tags = (0..mesh.num_elements())
        .map(|e| {
            let c = ls.value(mesh.centroid(e));
            let vals = mesh.element(e).iter().map(|&v| phi[v]).chain(std::iter::once(c));
            let (mut pos, mut neg) = (true, true);
            for s in vals {
                pos &= s > 0.0;
                neg &= s < 0.0;
            }
            if pos {
                Tag::Fluid
            } else if neg {
                Tag::Solid
            } else {
                Tag::Cut
            }
        })
        .collect();
    ElementClass { tags }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(p: &[Point]) -> f64 {
    let k = p.len();
    (0..k).map(|i| p[i][0] * p[(i + 1) % k][1] - p[(i + 1) % k][0] * p[i][1]).sum::<f64>() * 0.5
}
