//! Scalar reference elements and the velocity/pressure/multiplier triplets
//! built from them.

use crate::error::{Error, Result};
use crate::geometry::{CellKind, Point};

/// Largest local basis size among the supported elements (Q2).
pub const MAX_LOCAL: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarElement {
    P0,
    P1,
    /// P1 enriched by the cubic bubble `27 λ₁λ₂λ₃` (hierarchical).
    P1Bubble,
    P2,
    Q0,
    Q1,
    Q2,
}

/// Values and reference gradients of all local shape functions at a point.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub len: usize,
    pub val: [f64; MAX_LOCAL],
    pub grad: [[f64; 2]; MAX_LOCAL],
}

impl Shape {
    fn new(len: usize) -> Self {
        Self { len, val: [0.0; MAX_LOCAL], grad: [[0.0; 2]; MAX_LOCAL] }
    }
}

/// Where a local dof lives on the reference element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// Shared node of a continuous element, at the given reference point.
    Lattice(Point),
    /// Private to the element (bubble, piecewise constant).
    Interior(Point),
}

fn lagrange_quadratic(t: f64) -> ([f64; 3], [f64; 3]) {
    ([2.0 * (t - 0.5) * (t - 1.0), 4.0 * t * (1.0 - t), 2.0 * t * (t - 0.5)], [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0])
}

impl ScalarElement {
    pub fn cell_kind(self) -> CellKind {
        match self {
            ScalarElement::P0 | ScalarElement::P1 | ScalarElement::P1Bubble | ScalarElement::P2 => CellKind::Triangle,
            _ => CellKind::Quad,
        }
    }

    pub fn num_local(self) -> usize {
        match self {
            ScalarElement::P0 | ScalarElement::Q0 => 1,
            ScalarElement::P1 => 3,
            ScalarElement::P1Bubble | ScalarElement::Q1 => 4,
            ScalarElement::P2 => 6,
            ScalarElement::Q2 => 9,
        }
    }

    /// Lattice refinement factor of the shared nodes (1 for vertices only,
    /// 2 when edge and cell midpoints carry dofs).
    pub fn lattice_factor(self) -> usize {
        match self {
            ScalarElement::P2 | ScalarElement::Q2 => 2,
            _ => 1,
        }
    }

    pub fn is_discontinuous(self) -> bool {
        matches!(self, ScalarElement::P0 | ScalarElement::Q0)
    }

    pub fn nodes(self) -> Vec<NodeKind> {
        use NodeKind::*;
        match self {
            ScalarElement::P0 => vec![Interior([1.0 / 3.0, 1.0 / 3.0])],
            ScalarElement::Q0 => vec![Interior([0.5, 0.5])],
            ScalarElement::P1 => vec![Lattice([0.0, 0.0]), Lattice([1.0, 0.0]), Lattice([0.0, 1.0])],
            ScalarElement::P1Bubble => {
                vec![Lattice([0.0, 0.0]), Lattice([1.0, 0.0]), Lattice([0.0, 1.0]), Interior([1.0 / 3.0, 1.0 / 3.0])]
            }
            ScalarElement::P2 => {
                vec![Lattice([0.0, 0.0]), Lattice([1.0, 0.0]), Lattice([0.0, 1.0]), Lattice([0.5, 0.0]), Lattice([0.5, 0.5]), Lattice([0.0, 0.5])]
            }
            ScalarElement::Q1 => vec![Lattice([0.0, 0.0]), Lattice([1.0, 0.0]), Lattice([1.0, 1.0]), Lattice([0.0, 1.0])],
            ScalarElement::Q2 => (0..9).map(|k| Lattice([(k % 3) as f64 * 0.5, (k / 3) as f64 * 0.5])).collect(),
        }
    }

    pub fn contains(self, xi: Point) -> bool {
        const TOL: f64 = 1e-10;
        match self.cell_kind() {
            CellKind::Triangle => xi[0] >= -TOL && xi[1] >= -TOL && xi[0] + xi[1] <= 1.0 + TOL,
            CellKind::Quad => (-TOL..=1.0 + TOL).contains(&xi[0]) && (-TOL..=1.0 + TOL).contains(&xi[1]),
        }
    }

    /// Shape functions and their reference gradients at `xi`.
    pub fn eval(self, xi: Point) -> Result<Shape> {
        if !self.contains(xi) {
            return Err(Error::OutsideReference(xi[0], xi[1]));
        }
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(self, xi: Point) -> Shape {
        let (x, y) = (xi[0], xi[1]);
        let mut s = Shape::new(self.num_local());
        match self {
            ScalarElement::P0 | ScalarElement::Q0 => s.val[0] = 1.0,
            ScalarElement::P1 | ScalarElement::P1Bubble => {
                s.val[..3].copy_from_slice(&[1.0 - x - y, x, y]);
                s.grad[..3].copy_from_slice(&[[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
                if self == ScalarElement::P1Bubble {
                    let l0 = 1.0 - x - y;
                    s.val[3] = 27.0 * l0 * x * y;
                    s.grad[3] = [27.0 * y * (l0 - x), 27.0 * x * (l0 - y)];
                }
            }
            ScalarElement::P2 => {
                let l = [1.0 - x - y, x, y];
                let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
                for k in 0..3 {
                    s.val[k] = l[k] * (2.0 * l[k] - 1.0);
                    let f = 4.0 * l[k] - 1.0;
                    s.grad[k] = [f * dl[k][0], f * dl[k][1]];
                }
                for (m, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                    s.val[3 + m] = 4.0 * l[a] * l[b];
                    s.grad[3 + m] = [4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]), 4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1])];
                }
            }
            ScalarElement::Q1 => {
                s.val[..4].copy_from_slice(&[(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y]);
                s.grad[..4].copy_from_slice(&[[y - 1.0, x - 1.0], [1.0 - y, -x], [y, x], [-y, 1.0 - x]]);
            }
            ScalarElement::Q2 => {
                let (lx, dx) = lagrange_quadratic(x);
                let (ly, dy) = lagrange_quadratic(y);
                for k in 0..9 {
                    let (a, b) = (k % 3, k / 3);
                    s.val[k] = lx[a] * ly[b];
                    s.grad[k] = [dx[a] * ly[b], lx[a] * dy[b]];
                }
            }
        }
        s
    }
}

/// Velocity/pressure/multiplier element combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeTriplet {
    P1bP1P0,
    P2P1P0,
    Q1Q0Q0,
    Q2Q1Q0,
}

impl FeTriplet {
    pub const ALL: [FeTriplet; 4] = [FeTriplet::P1bP1P0, FeTriplet::P2P1P0, FeTriplet::Q1Q0Q0, FeTriplet::Q2Q1Q0];

    pub fn velocity(self) -> ScalarElement {
        match self {
            FeTriplet::P1bP1P0 => ScalarElement::P1Bubble,
            FeTriplet::P2P1P0 => ScalarElement::P2,
            FeTriplet::Q1Q0Q0 => ScalarElement::Q1,
            FeTriplet::Q2Q1Q0 => ScalarElement::Q2,
        }
    }

    pub fn pressure(self) -> ScalarElement {
        match self {
            FeTriplet::P1bP1P0 | FeTriplet::P2P1P0 => ScalarElement::P1,
            FeTriplet::Q1Q0Q0 => ScalarElement::Q0,
            FeTriplet::Q2Q1Q0 => ScalarElement::Q1,
        }
    }

    pub fn multiplier(self) -> ScalarElement {
        match self.cell_kind() {
            CellKind::Triangle => ScalarElement::P0,
            CellKind::Quad => ScalarElement::Q0,
        }
    }

    pub fn cell_kind(self) -> CellKind {
        self.velocity().cell_kind()
    }

    /// Volume quadrature degree used for assembly.
    pub fn volume_degree(self) -> usize {
        match self {
            FeTriplet::P2P1P0 | FeTriplet::Q2Q1Q0 => 6,
            _ => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeTriplet::P1bP1P0 => "p1bp1p0",
            FeTriplet::P2P1P0 => "p2p1p0",
            FeTriplet::Q1Q0Q0 => "q1q0q0",
            FeTriplet::Q2Q1Q0 => "q2q1q0",
        }
    }
}

impl std::fmt::Display for FeTriplet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeTriplet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "p1bp1p0" | "p1p1p0" | "minip0" => Ok(FeTriplet::P1bP1P0),
            "p2p1p0" => Ok(FeTriplet::P2P1P0),
            "q1q0q0" => Ok(FeTriplet::Q1Q0Q0),
            "q2q1q0" => Ok(FeTriplet::Q2Q1Q0),
            _ => Err(Error::InvalidParameter(format!("unknown triplet '{s}'"))),
        }
    }
}
