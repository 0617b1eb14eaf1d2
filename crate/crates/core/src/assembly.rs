//! Block assembly of the saddle-point system over (U, P, Λ, m).

use crate::discretization::{Discretization, FieldVectors, VectorField};
use crate::dofs::DofLayout;
use crate::error::{Error, Result};
use crate::fe::{Shape, MAX_LOCAL};
use crate::sparse::{SparseMatrix, TripletList};

const MV: usize = 2 * MAX_LOCAL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesCoefficients {
    pub nu: f64,
    pub gamma0: f64,
    pub h: f64,
}

impl StokesCoefficients {
    pub fn new(nu: f64, gamma0: f64, h: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")));
        }
        if !(gamma0 >= 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma0 must be non-negative, got {gamma0}")));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh size must be positive, got {h}")));
        }
        Ok(Self { nu, gamma0, h })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma0 * self.h
    }
}

/// Body force, interface datum and outer-wall velocity.
#[derive(Clone, Copy)]
pub struct ProblemData<'a> {
    pub f: VectorField<'a>,
    pub g: VectorField<'a>,
    pub wall: VectorField<'a>,
}

fn zero_field(_: crate::geometry::Point) -> [f64; 2] {
    [0.0, 0.0]
}

impl ProblemData<'static> {
    pub fn homogeneous() -> Self {
        Self { f: &zero_field, g: &zero_field, wall: &zero_field }
    }
}

/// Blocks stored with block-local indices.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub uu: SparseMatrix,
    pub up: SparseMatrix,
    pub ul: SparseMatrix,
    pub pp: SparseMatrix,
    pub pl: SparseMatrix,
    pub ll: SparseMatrix,
    /// `∫_F χ_j`, the zero-mean constraint row.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub coeffs: StokesCoefficients,
    pub blocks: Blocks,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Nodal wall velocity used for the lift, `2·node + c`.
    pub wall: Vec<f64>,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn expand(&self, disc: &Discretization, x: &[f64]) -> FieldVectors {
        disc.expand(x, Some(&self.wall))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Unknown(usize),
    Fixed(f64),
    Dropped,
}

struct ElementDofs {
    vel: [Slot; MV],
    pre: [Slot; MAX_LOCAL],
    lam: [Slot; 2],
    nvv: usize,
    np: usize,
}

impl ElementDofs {
    fn new(layout: &DofLayout, e: usize, wall: &[f64]) -> Self {
        let mut vel = [Slot::Dropped; MV];
        let vdofs = layout.velocity.element_dofs(e);
        for (a, &d) in vdofs.iter().enumerate() {
            for c in 0..2 {
                vel[2 * a + c] = match layout.velocity_unknown(d, c) {
                    Some(i) => Slot::Unknown(i),
                    None if layout.on_boundary[d] => Slot::Fixed(wall[2 * d + c]),
                    None => Slot::Dropped,
                };
            }
        }
        let mut pre = [Slot::Dropped; MAX_LOCAL];
        let pdofs = layout.pressure.element_dofs(e);
        for (j, &d) in pdofs.iter().enumerate() {
            pre[j] = layout.pressure_unknown(d).map_or(Slot::Dropped, Slot::Unknown);
        }
        let lam = [0, 1].map(|k| layout.multiplier_unknown(e, k).map_or(Slot::Dropped, Slot::Unknown));
        Self { vel, pre, lam, nvv: 2 * vdofs.len(), np: pdofs.len() }
    }

    fn has_multiplier(&self) -> bool {
        matches!(self.lam[0], Slot::Unknown(_))
    }
}

/// Dense element contributions.
struct Local {
    uu: [[f64; MV]; MV],
    up: [[f64; MAX_LOCAL]; MV],
    ul: [[f64; 2]; MV],
    pp: [[f64; MAX_LOCAL]; MAX_LOCAL],
    pl: [[f64; 2]; MAX_LOCAL],
    ll: [[f64; 2]; 2],
    fu: [f64; MV],
    gl: [f64; 2],
    mean: [f64; MAX_LOCAL],
}

impl Local {
    fn zero() -> Self {
        Self {
            uu: [[0.0; MV]; MV],
            up: [[0.0; MAX_LOCAL]; MV],
            ul: [[0.0; 2]; MV],
            pp: [[0.0; MAX_LOCAL]; MAX_LOCAL],
            pl: [[0.0; 2]; MAX_LOCAL],
            ll: [[0.0; 2]; 2],
            fu: [0.0; MV],
            gl: [0.0; 2],
            mean: [0.0; MAX_LOCAL],
        }
    }
}

/// `D(φ)n` for the vector basis function `e_c N_a`.
#[inline]
fn strain_normal(sv: &Shape, a: usize, c: usize, n: [f64; 2]) -> [f64; 2] {
    let g = sv.grad[a];
    let gn = g[0] * n[0] + g[1] * n[1];
    let mut t = [0.5 * g[0] * n[c], 0.5 * g[1] * n[c]];
    t[c] += 0.5 * gn;
    t
}

/// `D(e_c N_a) : D(e_d N_b)`.
#[inline]
fn strain_product(sv: &Shape, a: usize, c: usize, b: usize, d: usize) -> f64 {
    let (ga, gb) = (sv.grad[a], sv.grad[b]);
    let same = if c == d { ga[0] * gb[0] + ga[1] * gb[1] } else { 0.0 };
    0.5 * (same + ga[d] * gb[c])
}

fn add_volume(loc: &mut Local, sv: &Shape, sp: &Shape, w: f64, nu: f64, f: [f64; 2]) {
    let nv = sv.len;
    for a in 0..nv {
        for c in 0..2 {
            let i = 2 * a + c;
            for b in 0..nv {
                for d in 0..2 {
                    loc.uu[i][2 * b + d] += w * 2.0 * nu * strain_product(sv, a, c, b, d);
                }
            }
            for j in 0..sp.len {
                loc.up[i][j] -= w * sp.val[j] * sv.grad[a][c];
            }
            loc.fu[i] += w * f[c] * sv.val[a];
        }
    }
    for j in 0..sp.len {
        loc.mean[j] += w * sp.val[j];
    }
}

fn add_trace(loc: &mut Local, sv: &Shape, w: f64, g: [f64; 2]) {
    for a in 0..sv.len {
        for c in 0..2 {
            loc.ul[2 * a + c][c] -= w * sv.val[a];
        }
    }
    loc.gl[0] -= w * g[0];
    loc.gl[1] -= w * g[1];
}

fn add_stabilization(loc: &mut Local, sv: &Shape, sp: &Shape, w: f64, n: [f64; 2], nu: f64, gamma: f64) {
    let nv = sv.len;
    let mut t = [[0.0; 2]; MV];
    for a in 0..nv {
        for c in 0..2 {
            t[2 * a + c] = strain_normal(sv, a, c, n);
        }
    }
    for i in 0..2 * nv {
        let ti = t[i];
        for (k, tk) in t[..2 * nv].iter().enumerate() {
            loc.uu[i][k] -= w * 4.0 * nu * nu * gamma * (ti[0] * tk[0] + ti[1] * tk[1]);
        }
        let tn = ti[0] * n[0] + ti[1] * n[1];
        for j in 0..sp.len {
            loc.up[i][j] += w * 2.0 * nu * gamma * sp.val[j] * tn;
        }
        for k in 0..2 {
            loc.ul[i][k] += w * 2.0 * nu * gamma * ti[k];
        }
    }
    for i in 0..sp.len {
        for j in 0..sp.len {
            loc.pp[i][j] -= w * gamma * sp.val[i] * sp.val[j];
        }
        for k in 0..2 {
            loc.pl[i][k] -= w * gamma * sp.val[i] * n[k];
        }
    }
    for k in 0..2 {
        loc.ll[k][k] -= w * gamma;
    }
}

struct GlobalBuilder {
    uu: TripletList,
    up: TripletList,
    ul: TripletList,
    pp: TripletList,
    pl: TripletList,
    ll: TripletList,
    mean: Vec<f64>,
    fu: Vec<f64>,
    fp: Vec<f64>,
    gl: Vec<f64>,
}

impl GlobalBuilder {
    fn new(l: &DofLayout) -> Self {
        let (nu, np, nl) = (l.num_velocity(), l.num_pressure(), l.num_multiplier());
        Self {
            uu: TripletList::new(nu, nu),
            up: TripletList::new(nu, np),
            ul: TripletList::new(nu, nl),
            pp: TripletList::new(np, np),
            pl: TripletList::new(np, nl),
            ll: TripletList::new(nl, nl),
            mean: vec![0.0; np],
            fu: vec![0.0; nu],
            fp: vec![0.0; np],
            gl: vec![0.0; nl],
        }
    }

    /// Scatters one element. Fixed velocity columns move to the right-hand
    /// side; rows of fixed dofs are discarded.
    fn scatter(&mut self, ed: &ElementDofs, loc: &Local) {
        for i in 0..ed.nvv {
            let Slot::Unknown(gi) = ed.vel[i] else { continue };
            self.fu[gi] += loc.fu[i];
            for k in 0..ed.nvv {
                match ed.vel[k] {
                    Slot::Unknown(gk) => self.uu.push(gi, gk, loc.uu[i][k]),
                    Slot::Fixed(v) => self.fu[gi] -= loc.uu[i][k] * v,
                    Slot::Dropped => {}
                }
            }
            for j in 0..ed.np {
                if let Slot::Unknown(gj) = ed.pre[j] {
                    self.up.push(gi, gj, loc.up[i][j]);
                }
            }
            for k in 0..2 {
                if let Slot::Unknown(gk) = ed.lam[k] {
                    self.ul.push(gi, gk, loc.ul[i][k]);
                }
            }
        }
        for j in 0..ed.np {
            let Slot::Unknown(gj) = ed.pre[j] else { continue };
            self.mean[gj] += loc.mean[j];
            for i in 0..ed.nvv {
                if let Slot::Fixed(v) = ed.vel[i] {
                    self.fp[gj] -= loc.up[i][j] * v;
                }
            }
            for m in 0..ed.np {
                if let Slot::Unknown(gm) = ed.pre[m] {
                    self.pp.push(gj, gm, loc.pp[j][m]);
                }
            }
            for k in 0..2 {
                if let Slot::Unknown(gk) = ed.lam[k] {
                    self.pl.push(gj, gk, loc.pl[j][k]);
                }
            }
        }
        for k in 0..2 {
            let Slot::Unknown(gk) = ed.lam[k] else { continue };
            self.gl[gk] += loc.gl[k];
            for i in 0..ed.nvv {
                if let Slot::Fixed(v) = ed.vel[i] {
                    self.gl[gk] -= loc.ul[i][k] * v;
                }
            }
            for m in 0..2 {
                if let Slot::Unknown(gm) = ed.lam[m] {
                    self.ll.push(gk, gm, loc.ll[k][m]);
                }
            }
        }
    }

    fn finish(self, layout: &DofLayout, coeffs: StokesCoefficients, wall: Vec<f64>) -> Result<SaddleSystem> {
        let blocks = Blocks {
            uu: self.uu.into_csr(),
            up: self.up.into_csr(),
            ul: self.ul.into_csr(),
            pp: self.pp.into_csr(),
            pl: self.pl.into_csr(),
            ll: self.ll.into_csr(),
            mean: self.mean,
        };
        let matrix = block_matrix(layout, &blocks);
        check_multiplier_rows(&matrix, layout)?;
        let mut rhs = Vec::with_capacity(layout.num_unknowns());
        rhs.extend(self.fu);
        rhs.extend(self.fp);
        rhs.extend(self.gl);
        rhs.push(0.0);
        Ok(SaddleSystem { coeffs, blocks, matrix, rhs, wall })
    }
}

/// Full symmetric matrix from its blocks.
pub fn block_matrix(layout: &DofLayout, b: &Blocks) -> SparseMatrix {
    let n = layout.num_unknowns();
    let (po, lo, m) = (layout.pressure_offset(), layout.multiplier_offset(), layout.mean_row());
    let mut t = TripletList::new(n, n);
    t.extend_from(&b.uu, 0, 0, 1.0);
    t.extend_from(&b.up, 0, po, 1.0);
    t.extend_from_transpose(&b.up, po, 0, 1.0);
    t.extend_from(&b.ul, 0, lo, 1.0);
    t.extend_from_transpose(&b.ul, lo, 0, 1.0);
    t.extend_from(&b.pp, po, po, 1.0);
    t.extend_from(&b.pl, po, lo, 1.0);
    t.extend_from_transpose(&b.pl, lo, po, 1.0);
    t.extend_from(&b.ll, lo, lo, 1.0);
    for (j, &v) in b.mean.iter().enumerate() {
        t.push(po + j, m, v);
        t.push(m, po + j, v);
    }
    t.into_csr()
}

/// Every retained multiplier row must couple to something.
pub fn check_multiplier_rows(matrix: &SparseMatrix, layout: &DofLayout) -> Result<()> {
    let lo = layout.multiplier_offset();
    for i in lo..lo + layout.num_multiplier() {
        if matrix.row_is_zero(i) {
            return Err(Error::SingularLayout(i));
        }
    }
    Ok(())
}

fn assemble_impl(disc: &Discretization, coeffs: StokesCoefficients, data: ProblemData, stabilized: bool) -> Result<SaddleSystem> {
    let layout = &disc.layout;
    let wall = disc.wall_values(data.wall);
    let mut gb = GlobalBuilder::new(layout);
    let gamma = coeffs.gamma();
    for r in disc.rules.rules() {
        let e = r.element;
        let map = disc.mesh.affine_map(e);
        let ed = ElementDofs::new(layout, e, &wall);
        let mut loc = Local::zero();
        for &(x, w) in &r.volume_points {
            let sv = disc.velocity_shape(&map, x);
            let sp = disc.pressure_shape(&map, x);
            add_volume(&mut loc, &sv, &sp, w, coeffs.nu, (data.f)(x));
        }
        if ed.has_multiplier() {
            for s in &r.surface_points {
                let sv = disc.velocity_shape(&map, s.x);
                add_trace(&mut loc, &sv, s.weight, (data.g)(s.x));
                if stabilized {
                    let sp = disc.pressure_shape(&map, s.x);
                    add_stabilization(&mut loc, &sv, &sp, s.weight, s.normal, coeffs.nu, gamma);
                }
            }
        }
        gb.scatter(&ed, &loc);
    }
    gb.finish(layout, coeffs, wall)
}

/// Stabilized system with `γ = γ₀ h`.
pub fn assemble(disc: &Discretization, coeffs: StokesCoefficients, data: ProblemData) -> Result<SaddleSystem> {
    assemble_impl(disc, coeffs, data, true)
}

/// The method without the interface residual penalty; `γ₀` is ignored.
pub fn assemble_unstabilized(disc: &Discretization, coeffs: StokesCoefficients, data: ProblemData) -> Result<SaddleSystem> {
    assemble_impl(disc, StokesCoefficients { gamma0: 0.0, ..coeffs }, data, false)
}

/// Gram matrix `S` of the interface residual `2νD(u)n − pn − λ` over all
/// unknowns, so that the stabilized matrix equals `A⁰ − γS`.
pub fn interface_gram(disc: &Discretization, nu: f64) -> SparseMatrix {
    let layout = &disc.layout;
    let n = layout.num_unknowns();
    let (po, lo) = (layout.pressure_offset(), layout.multiplier_offset());
    let zero_wall = vec![0.0; 2 * layout.velocity.num_dofs()];
    let mut t = TripletList::new(n, n);
    for r in disc.rules.rules() {
        let e = r.element;
        let ed = ElementDofs::new(layout, e, &zero_wall);
        if !ed.has_multiplier() {
            continue;
        }
        let map = disc.mesh.affine_map(e);
        for s in &r.surface_points {
            let sv = disc.velocity_shape(&map, s.x);
            let sp = disc.pressure_shape(&map, s.x);
            let mut res: Vec<(usize, [f64; 2])> = Vec::with_capacity(MV + MAX_LOCAL + 2);
            for a in 0..sv.len {
                for c in 0..2 {
                    if let Slot::Unknown(i) = ed.vel[2 * a + c] {
                        let d = strain_normal(&sv, a, c, s.normal);
                        res.push((i, [2.0 * nu * d[0], 2.0 * nu * d[1]]));
                    }
                }
            }
            for j in 0..sp.len {
                if let Slot::Unknown(i) = ed.pre[j] {
                    res.push((po + i, [-sp.val[j] * s.normal[0], -sp.val[j] * s.normal[1]]));
                }
            }
            for k in 0..2 {
                if let Slot::Unknown(i) = ed.lam[k] {
                    let mut v = [0.0, 0.0];
                    v[k] = -1.0;
                    res.push((lo + i, v));
                }
            }
            for &(i, ri) in &res {
                for &(j, rj) in &res {
                    t.push(i, j, s.weight * (ri[0] * rj[0] + ri[1] * rj[1]));
                }
            }
        }
    }
    t.into_csr()
}

/// `∫_Γ ψ_i·ψ_j` on the retained multiplier dofs.
pub fn interface_mass(disc: &Discretization) -> SparseMatrix {
    let layout = &disc.layout;
    let mut t = TripletList::new(layout.num_multiplier(), layout.num_multiplier());
    for &e in layout.multiplier_elements() {
        let len: f64 = disc.rules.rule(e).map_or(0.0, |r| r.surface_points.iter().map(|s| s.weight).sum());
        for k in 0..2 {
            let i = layout.multiplier_unknown(e, k).unwrap();
            t.push(i, i, len);
        }
    }
    t.into_csr()
}

/// Evaluates the compact bilinear form, plus the zero-mean coupling, by
/// integrating the discrete fields directly.
pub fn apply_compact_form(disc: &Discretization, coeffs: StokesCoefficients, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = disc.layout.num_unknowns();
    for v in [x, y] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let fx = disc.expand(x, None);
    let fy = disc.expand(y, None);
    let (nu, gamma) = (coeffs.nu, coeffs.gamma());
    let mut total = 0.0;
    let (mut mean_px, mut mean_qy) = (0.0, 0.0);
    for r in disc.rules.rules() {
        let e = r.element;
        let map = disc.mesh.affine_map(e);
        for &(pt, w) in &r.volume_points {
            let a = fx.eval(disc, e, &map, pt);
            let b = fy.eval(disc, e, &map, pt);
            let (da, db) = (a.strain(), b.strain());
            let dd: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| da[i][j] * db[i][j]).sum();
            total += w * (2.0 * nu * dd - a.p * b.div() - b.p * a.div());
            mean_px += w * a.p;
            mean_qy += w * b.p;
        }
        if disc.layout.multiplier_unknown(e, 0).is_none() {
            continue;
        }
        let (la, lb) = (fx.lam[e], fy.lam[e]);
        for s in &r.surface_points {
            let a = fx.eval(disc, e, &map, s.x);
            let b = fy.eval(disc, e, &map, s.x);
            let ra = a.traction(nu, s.normal);
            let rb = b.traction(nu, s.normal);
            let ra = [ra[0] - la[0], ra[1] - la[1]];
            let rb = [rb[0] - lb[0], rb[1] - lb[1]];
            total -= s.weight * (la[0] * b.u[0] + la[1] * b.u[1] + lb[0] * a.u[0] + lb[1] * a.u[1]);
            total -= s.weight * gamma * (ra[0] * rb[0] + ra[1] * rb[1]);
        }
    }
    Ok(total + fx.mean * mean_qy + fy.mean * mean_px)
}

/// Matrices entering the assumption constants.
#[derive(Debug, Clone)]
pub struct AuxMatrices {
    /// `∫_F ∇φ:∇φ + φ·φ`, velocity unknowns.
    pub h1_fluid: SparseMatrix,
    /// `∫_Γ D(φ):D(φ)`, velocity unknowns.
    pub l2_gamma_vel: SparseMatrix,
    pub l2_fluid_p: SparseMatrix,
    pub l2_gamma_p: SparseMatrix,
}

pub fn assemble_aux_matrices(disc: &Discretization) -> AuxMatrices {
    let layout = &disc.layout;
    let (nu, np) = (layout.num_velocity(), layout.num_pressure());
    let zero_wall = vec![0.0; 2 * layout.velocity.num_dofs()];
    let mut h1 = TripletList::new(nu, nu);
    let mut gv = TripletList::new(nu, nu);
    let mut fp = TripletList::new(np, np);
    let mut gp = TripletList::new(np, np);
    for r in disc.rules.rules() {
        let e = r.element;
        let map = disc.mesh.affine_map(e);
        let ed = ElementDofs::new(layout, e, &zero_wall);
        let vel_pairs = |f: &mut dyn FnMut(usize, usize, usize, usize, usize, usize)| {
            for i in 0..ed.nvv {
                let Slot::Unknown(gi) = ed.vel[i] else { continue };
                for k in 0..ed.nvv {
                    if let Slot::Unknown(gk) = ed.vel[k] {
                        f(gi, gk, i / 2, i % 2, k / 2, k % 2);
                    }
                }
            }
        };
        let pre_pairs = |f: &mut dyn FnMut(usize, usize, usize, usize)| {
            for i in 0..ed.np {
                let Slot::Unknown(gi) = ed.pre[i] else { continue };
                for k in 0..ed.np {
                    if let Slot::Unknown(gk) = ed.pre[k] {
                        f(gi, gk, i, k);
                    }
                }
            }
        };
        for &(x, w) in &r.volume_points {
            let sv = disc.velocity_shape(&map, x);
            let sp = disc.pressure_shape(&map, x);
            vel_pairs(&mut |gi, gk, a, c, b, d| {
                if c == d {
                    let (ga, gb) = (sv.grad[a], sv.grad[b]);
                    h1.push(gi, gk, w * (ga[0] * gb[0] + ga[1] * gb[1] + sv.val[a] * sv.val[b]));
                }
            });
            pre_pairs(&mut |gi, gk, i, k| fp.push(gi, gk, w * sp.val[i] * sp.val[k]));
        }
        for s in &r.surface_points {
            let sv = disc.velocity_shape(&map, s.x);
            let sp = disc.pressure_shape(&map, s.x);
            vel_pairs(&mut |gi, gk, a, c, b, d| gv.push(gi, gk, s.weight * strain_product(&sv, a, c, b, d)));
            pre_pairs(&mut |gi, gk, i, k| gp.push(gi, gk, s.weight * sp.val[i] * sp.val[k]));
        }
    }
    AuxMatrices { h1_fluid: h1.into_csr(), l2_gamma_vel: gv.into_csr(), l2_fluid_p: fp.into_csr(), l2_gamma_p: gp.into_csr() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::FeTriplet;
    use crate::geometry::{Circle, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const R: f64 = 0.21;

    fn disc(t: FeTriplet, n: usize) -> Discretization {
        Discretization::new(n, t, &Circle::new([0.5, 0.5], R)).unwrap()
    }

    fn coeffs(d: &Discretization, nu: f64, gamma0: f64) -> StokesCoefficients {
        StokesCoefficients::new(nu, gamma0, d.h()).unwrap()
    }

    fn smooth_data() -> ProblemData<'static> {
        ProblemData { f: &|x: Point| [(x[0] * 3.0).sin(), x[1] * x[0]], g: &|x: Point| [x[1], -x[0]], wall: &|x: Point| [x[0] * x[1], 0.5 - x[0]] }
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn coefficients_validated() {
        assert!(StokesCoefficients::new(0.0, 0.05, 0.1).is_err());
        assert!(StokesCoefficients::new(1.0, -1e-3, 0.1).is_err());
        let c = StokesCoefficients::new(1.0, 0.05, 0.2).unwrap();
        assert_eq!(c.gamma(), 0.05 * 0.2);
    }

    #[test]
    fn system_symmetric() {
        for t in FeTriplet::ALL {
            let d = disc(t, 10);
            let s = assemble(&d, coeffs(&d, 1.0, 0.05), smooth_data()).unwrap();
            assert!(s.matrix.symmetry_defect() < 1e-12, "{t}");
            assert_eq!(s.dim(), d.layout.num_unknowns());
        }
    }

    #[test]
    fn zero_gamma_matches_unstabilized() {
        for t in FeTriplet::ALL {
            let d = disc(t, 10);
            let c = coeffs(&d, 1.0, 0.0);
            let a = assemble(&d, c, smooth_data()).unwrap();
            let b = assemble_unstabilized(&d, c, smooth_data()).unwrap();
            assert!(a.matrix.max_abs_diff(&b.matrix) <= 1e-14, "{t}");
            assert!(a.blocks.pp.max_abs() == 0.0 && a.blocks.pl.max_abs() == 0.0 && a.blocks.ll.max_abs() == 0.0);
            assert_eq!(a.rhs, b.rhs);
        }
    }

    #[test]
    fn stabilized_equals_base_minus_gram() {
        for t in [FeTriplet::P2P1P0, FeTriplet::Q1Q0Q0] {
            let d = disc(t, 10);
            let c = coeffs(&d, 0.7, 0.3);
            let a = assemble(&d, c, smooth_data()).unwrap().matrix;
            let a0 = assemble_unstabilized(&d, c, smooth_data()).unwrap().matrix;
            let s = interface_gram(&d, c.nu);
            let diff = a.max_abs_diff(&a0.add(&s, -c.gamma()));
            assert!(diff < 1e-12 * a.max_abs(), "{t}: {diff}");
        }
    }

    #[test]
    fn multiplier_block_negative_definite_diagonal() {
        let d = disc(FeTriplet::P2P1P0, 20);
        let c = coeffs(&d, 1.0, 0.05);
        let s = assemble(&d, c, smooth_data()).unwrap();
        let m = interface_mass(&d);
        assert!(s.blocks.ll.max_abs_diff(&m.scaled(-c.gamma())) < 1e-15);
        assert!(s.blocks.ll.diagonal().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn rigid_motions_in_kernel() {
        // With the wall lifted from the same field, the velocity rows of A⁰
        // vanish for any field with D = 0.
        let translation = |_: Point| [1.0, -2.0];
        let rotation = |x: Point| [-(x[1] - 0.5), x[0] - 0.5];
        for t in FeTriplet::ALL {
            let d = disc(t, 10);
            for field in [&translation as &dyn Fn(Point) -> [f64; 2], &rotation] {
                let data = ProblemData { f: &|_| [0.0, 0.0], g: &|_| [0.0, 0.0], wall: field };
                let s = assemble_unstabilized(&d, coeffs(&d, 1.0, 0.0), data).unwrap();
                let iv = d.interpolate(field, &|_| 0.0, &|_, _| [0.0, 0.0]);
                let x = d.restrict(&iv);
                let v = &x[..d.layout.num_velocity()];
                let av = s.blocks.uu.mul_vec(v);
                let worst = av.iter().zip(&s.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(worst < 1e-11 * s.blocks.uu.max_abs(), "{t}: {worst}");
            }
        }
    }

    #[test]
    fn viscosity_scaling() {
        let d = disc(FeTriplet::P2P1P0, 8);
        let s = 2.5;
        let data = ProblemData::homogeneous();
        let vol = |nu| assemble_unstabilized(&d, coeffs(&d, nu, 0.05), data).unwrap().blocks.uu;
        let full = |nu| assemble(&d, coeffs(&d, nu, 0.05), data).unwrap().blocks.uu;
        let (v1, vs) = (vol(1.3), vol(1.3 * s));
        assert!(vs.max_abs_diff(&v1.scaled(s)) < 1e-12 * vs.max_abs());
        let (i1, is) = (full(1.3).add(&v1, -1.0), full(1.3 * s).add(&vs, -1.0));
        assert!(i1.max_abs() > 0.0);
        assert!(is.max_abs_diff(&i1.scaled(s * s)) < 1e-12 * is.max_abs());
    }

    #[test]
    fn compact_form_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in FeTriplet::ALL {
            let d = disc(t, 8);
            let c = coeffs(&d, 1.0, 0.05);
            let a = assemble(&d, c, ProblemData::homogeneous()).unwrap();
            let n = d.layout.num_unknowns();
            assert_eq!(apply_compact_form(&d, c, &vec![0.0; n], &vec![0.0; n]).unwrap(), 0.0);
            for _ in 0..10 {
                let x = random_vec(n, &mut rng);
                let y = random_vec(n, &mut rng);
                let m_xy = apply_compact_form(&d, c, &x, &y).unwrap();
                let m_yx = apply_compact_form(&d, c, &y, &x).unwrap();
                let q = a.matrix.bilinear(&x, &y);
                let scale = q.abs().max(1.0);
                assert!((m_xy - q).abs() < 1e-10 * scale, "{t}: {m_xy} vs {q}");
                assert!((m_xy - m_yx).abs() < 1e-10 * scale);
            }
        }
        let d = disc(FeTriplet::P2P1P0, 6);
        let c = coeffs(&d, 1.0, 0.05);
        assert!(matches!(apply_compact_form(&d, c, &[0.0; 3], &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn aux_matrices_measure_geometry() {
        let d = disc(FeTriplet::P2P1P0, 40);
        let aux = assemble_aux_matrices(&d);
        let ones = vec![1.0; d.layout.num_pressure()];
        let area = aux.l2_fluid_p.bilinear(&ones, &ones);
        assert!((area - (1.0 - std::f64::consts::PI * R * R)).abs() < 1e-3, "{area}");
        let mut cv = vec![0.0; d.layout.num_velocity()];
        for node in 0..d.layout.velocity.num_dofs() {
            if let Some(i) = d.layout.velocity_unknown(node, 0) {
                cv[i] = 1.0;
            }
        }
        let cc = aux.l2_gamma_vel.bilinear(&cv, &cv);
        assert!(cc.abs() < 1e-12 * aux.l2_gamma_vel.max_abs(), "{cc}");
        for m in [&aux.h1_fluid, &aux.l2_gamma_vel, &aux.l2_fluid_p, &aux.l2_gamma_p] {
            assert!(m.symmetry_defect() < 1e-13);
        }

        let d = disc(FeTriplet::P2P1P0, 80);
        let aux = assemble_aux_matrices(&d);
        let ones = vec![1.0; d.layout.num_pressure()];
        let len = aux.l2_gamma_p.bilinear(&ones, &ones);
        assert!((len - 2.0 * std::f64::consts::PI * R).abs() < 5e-4, "{len}");
    }

    #[test]
    fn divergence_block_consistent_with_fine_quadrature() {
        // b(v, q) for interpolants against an independent midpoint-rule
        // integral of −q div v over the fluid.
        let v = |x: Point| [(2.0 * x[0]).sin() * x[1], x[0] * x[0] - x[1]];
        let div = |x: Point| 2.0 * (2.0 * x[0]).cos() * x[1] - 1.0;
        let q = |x: Point| x[0] - 0.3 * x[1];
        let d = disc(FeTriplet::P2P1P0, 20);
        let c = coeffs(&d, 1.0, 0.05);
        let s = assemble_unstabilized(&d, c, ProblemData { wall: &v, ..ProblemData::homogeneous() }).unwrap();
        let fv = d.interpolate(&v, &q, &|_, _| [0.0, 0.0]);
        let x = d.restrict(&fv);
        let (vu, qp) = (&x[..d.layout.num_velocity()], &x[d.layout.pressure_offset()..d.layout.multiplier_offset()]);
        // Wall part of b(v, q) is the pressure right-hand side of the lifted system.
        let b = s.blocks.up.bilinear(vu, qp) - crate::sparse::dot(qp, &s.rhs[d.layout.pressure_offset()..d.layout.multiplier_offset()]);
        let m = 1000;
        let hh = 1.0 / m as f64;
        let mut reference = 0.0;
        let circle = Circle::new([0.5, 0.5], R);
        for i in 0..m {
            for j in 0..m {
                let x = [(i as f64 + 0.5) * hh, (j as f64 + 0.5) * hh];
                if crate::geometry::LevelSet::value(&circle, x) > 0.0 {
                    reference -= hh * hh * q(x) * div(x);
                }
            }
        }
        assert!((b - reference).abs() < 2e-3 * reference.abs().max(1.0), "{b} vs {reference}");
    }
}
