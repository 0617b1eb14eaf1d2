//! Global numbering of velocity, pressure and multiplier dofs, trimmed to the
//! basis functions that see the fluid.

use crate::cut::QuadratureSet;
use crate::error::{Error, Result};
use crate::fe::{FeTriplet, NodeKind, ScalarElement};
use crate::geometry::{BackgroundMesh, LevelSet, Point, Tag};

/// Scalar finite-element space on the background mesh.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    pub element: ScalarElement,
    num_dofs: usize,
    elem_dofs: Vec<usize>,
    positions: Vec<Point>,
}

impl ScalarSpace {
    pub fn new(mesh: &BackgroundMesh, element: ScalarElement) -> Self {
        let nodes = element.nodes();
        let k = element.lattice_factor() * mesh.n();
        let lattice_count = if nodes.iter().any(|n| matches!(n, NodeKind::Lattice(_))) { (k + 1) * (k + 1) } else { 0 };
        let interior_per_elem = nodes.iter().filter(|n| matches!(n, NodeKind::Interior(_))).count();
        let ne = mesh.num_elements();
        let num_dofs = lattice_count + interior_per_elem * ne;
        let mut positions = vec![[0.0, 0.0]; num_dofs];
        let mut elem_dofs = Vec::with_capacity(ne * nodes.len());
        for e in 0..ne {
            let map = mesh.affine_map(e);
            let mut interior = 0;
            for node in &nodes {
                let (dof, x) = match *node {
                    NodeKind::Lattice(xi) => {
                        let x = map.to_physical(xi);
                        let i = (x[0] * k as f64).round() as usize;
                        let j = (x[1] * k as f64).round() as usize;
                        (i + j * (k + 1), x)
                    }
                    NodeKind::Interior(xi) => {
                        let d = lattice_count + e * interior_per_elem + interior;
                        interior += 1;
                        (d, map.to_physical(xi))
                    }
                };
                positions[dof] = x;
                elem_dofs.push(dof);
            }
        }
        Self { element, num_dofs, elem_dofs, positions }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let k = self.element.num_local();
        &self.elem_dofs[e * k..(e + 1) * k]
    }

    pub fn position(&self, dof: usize) -> Point {
        self.positions[dof]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofStatus {
    Active,
    Virtual,
    Removed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatusCounts {
    pub active: usize,
    pub virtual_: usize,
    pub removed: usize,
}

/// Unknown numbering of the saddle system `[U | P | Λ | m]`.
///
/// Velocity dof `2 node + c` holds component `c` of the scalar velocity node.
/// Dofs that are removed or sit on the outer boundary get no unknown.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub triplet: FeTriplet,
    pub velocity: ScalarSpace,
    pub pressure: ScalarSpace,
    pub velocity_status: Vec<DofStatus>,
    pub pressure_status: Vec<DofStatus>,
    pub on_boundary: Vec<bool>,
    velocity_index: Vec<Option<usize>>,
    pressure_index: Vec<Option<usize>>,
    multiplier_elements: Vec<usize>,
    multiplier_slot: Vec<Option<usize>>,
    n_velocity: usize,
    n_pressure: usize,
    pub h: f64,
}

fn statuses(space: &ScalarSpace, mesh: &BackgroundMesh, tags: &[Tag], ls: &dyn LevelSet) -> Vec<DofStatus> {
    let mut seen = vec![false; space.num_dofs()];
    for e in 0..mesh.num_elements() {
        if tags[e] != Tag::Solid {
            for &d in space.element_dofs(e) {
                seen[d] = true;
            }
        }
    }
    (0..space.num_dofs())
        .map(|d| match (seen[d], ls.value(space.position(d)) > 0.0) {
            (false, _) => DofStatus::Removed,
            (true, true) => DofStatus::Active,
            (true, false) => DofStatus::Virtual,
        })
        .collect()
}

fn on_outer_boundary(x: Point) -> bool {
    const TOL: f64 = 1e-12;
    x[0] < TOL || x[1] < TOL || x[0] > 1.0 - TOL || x[1] > 1.0 - TOL
}

impl DofLayout {
    /// Numbers the retained dofs. `rules.class` must be the classification
    /// after degenerate cuts were reassigned.
    pub fn build(mesh: &BackgroundMesh, rules: &QuadratureSet, triplet: FeTriplet, ls: &dyn LevelSet) -> Result<Self> {
        if triplet.cell_kind() != mesh.kind() {
            return Err(Error::InvalidParameter(format!("triplet {triplet} needs a {:?} mesh", triplet.cell_kind())));
        }
        let tags = &rules.class.tags;
        let multiplier_elements: Vec<usize> = rules.class.cut_elements().collect();
        if multiplier_elements.is_empty() {
            return Err(Error::NoInterface);
        }
        let velocity = ScalarSpace::new(mesh, triplet.velocity());
        let pressure = ScalarSpace::new(mesh, triplet.pressure());
        let velocity_status = statuses(&velocity, mesh, tags, ls);
        let pressure_status = statuses(&pressure, mesh, tags, ls);
        let on_boundary: Vec<bool> = (0..velocity.num_dofs())
            .map(|d| {
                let interior = matches!(velocity.element, ScalarElement::P1Bubble) && d >= (mesh.n() + 1).pow(2);
                !interior && on_outer_boundary(velocity.position(d))
            })
            .collect();
        let mut layout = Self {
            triplet,
            velocity,
            pressure,
            velocity_status,
            pressure_status,
            on_boundary,
            velocity_index: Vec::new(),
            pressure_index: Vec::new(),
            multiplier_elements,
            multiplier_slot: Vec::new(),
            n_velocity: 0,
            n_pressure: 0,
            h: mesh.h_measured(),
        };
        layout.renumber(mesh.num_elements());
        Ok(layout)
    }

    fn renumber(&mut self, num_elements: usize) {
        let mut next = 0;
        self.velocity_index = vec![None; 2 * self.velocity.num_dofs()];
        for d in 0..self.velocity.num_dofs() {
            if self.velocity_status[d] != DofStatus::Removed && !self.on_boundary[d] {
                for c in 0..2 {
                    self.velocity_index[2 * d + c] = Some(next);
                    next += 1;
                }
            }
        }
        self.pressure_index = vec![None; self.pressure.num_dofs()];
        let mut np = 0;
        for d in 0..self.pressure.num_dofs() {
            if self.pressure_status[d] != DofStatus::Removed {
                self.pressure_index[d] = Some(np);
                np += 1;
            }
        }
        self.n_velocity = next;
        self.n_pressure = np;
        self.multiplier_slot = vec![None; num_elements];
        for (k, &e) in self.multiplier_elements.iter().enumerate() {
            self.multiplier_slot[e] = Some(k);
        }
    }

    /// Drops the multiplier of every cut element whose interface chord is
    /// shorter than `10⁻¹⁰ h`.
    pub fn prune_multiplier(mut self, rules: &QuadratureSet) -> Self {
        let threshold = 1e-10 * self.h;
        let n_elem = self.multiplier_slot.len();
        self.multiplier_elements.retain(|&e| rules.rule(e).map(|r| r.chord_length() >= threshold).unwrap_or(false));
        self.renumber(n_elem);
        self
    }

    pub fn num_velocity(&self) -> usize {
        self.n_velocity
    }

    pub fn num_pressure(&self) -> usize {
        self.n_pressure
    }

    pub fn num_multiplier(&self) -> usize {
        2 * self.multiplier_elements.len()
    }

    /// Total unknowns including the zero-mean pressure constraint.
    pub fn num_unknowns(&self) -> usize {
        self.num_velocity() + self.num_pressure() + self.num_multiplier() + 1
    }

    pub fn pressure_offset(&self) -> usize {
        self.num_velocity()
    }

    pub fn multiplier_offset(&self) -> usize {
        self.num_velocity() + self.num_pressure()
    }

    pub fn mean_row(&self) -> usize {
        self.num_unknowns() - 1
    }

    /// Block-local index of velocity component `c` at scalar node `node`.
    pub fn velocity_unknown(&self, node: usize, c: usize) -> Option<usize> {
        self.velocity_index[2 * node + c]
    }

    pub fn pressure_unknown(&self, dof: usize) -> Option<usize> {
        self.pressure_index[dof]
    }

    /// Block-local multiplier index of component `c` on element `e`.
    pub fn multiplier_unknown(&self, e: usize, c: usize) -> Option<usize> {
        self.multiplier_slot[e].map(|k| 2 * k + c)
    }

    pub fn multiplier_elements(&self) -> &[usize] {
        &self.multiplier_elements
    }

    pub fn velocity_counts(&self) -> StatusCounts {
        count(&self.velocity_status)
    }

    pub fn pressure_counts(&self) -> StatusCounts {
        count(&self.pressure_status)
    }

    /// One-line status summary, e.g. for the CLI.
    pub fn report(&self) -> String {
        let v = self.velocity_counts();
        let p = self.pressure_counts();
        format!(
            "velocity nodes: {} active, {} virtual, {} removed ({} boundary); pressure: {} active, {} virtual, {} removed; multiplier: {} elements ({} dofs)",
            v.active,
            v.virtual_,
            v.removed,
            self.on_boundary.iter().filter(|&&b| b).count(),
            p.active,
            p.virtual_,
            p.removed,
            self.multiplier_elements.len(),
            self.num_multiplier()
        )
    }
}

fn count(s: &[DofStatus]) -> StatusCounts {
    let mut c = StatusCounts::default();
    for st in s {
        match st {
            DofStatus::Active => c.active += 1,
            DofStatus::Virtual => c.virtual_ += 1,
            DofStatus::Removed => c.removed += 1,
        }
    }
    c
}
