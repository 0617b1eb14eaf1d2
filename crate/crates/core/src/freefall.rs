//! Vertical fall of a rigid ball driven by gravity and quasi-static Stokes
//! drag.

use crate::assembly::{assemble, assemble_unstabilized, ProblemData, SaddleSystem, StokesCoefficients};
use crate::discretization::{Discretization, FieldVectors};
use crate::error::{Error, Result};
use crate::fe::FeTriplet;
use crate::geometry::{Circle, Point, Tag};
use crate::solver::{solve, SolveReport};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragConfig {
    pub triplet: FeTriplet,
    pub n: usize,
    pub gamma0: f64,
    pub nu: f64,
    pub radius: f64,
}

impl Default for DragConfig {
    fn default() -> Self {
        Self { triplet: FeTriplet::P2P1P0, n: 20, gamma0: 0.05, nu: 1.0, radius: 0.21 }
    }
}

/// Distance from the ball to the nearest wall.
pub fn wall_clearance(center: Point, radius: f64) -> f64 {
    [center[0], 1.0 - center[0], center[1], 1.0 - center[1]].into_iter().fold(f64::INFINITY, f64::min) - radius
}

/// Gap between the ball and the floor, the wall it falls toward.
pub fn floor_clearance(h2: f64, radius: f64) -> f64 {
    h2 - radius
}

/// Solution of the unit-velocity auxiliary problem.
pub struct DragSolve {
    pub center: Point,
    pub nu: f64,
    pub disc: Discretization,
    pub system: SaddleSystem,
    pub solve: SolveReport,
    /// Second component of `∫_Γ λʰ`.
    pub alpha: f64,
}

impl DragSolve {
    pub fn fields(&self) -> FieldVectors {
        self.system.expand(&self.disc, &self.solve.solution)
    }

    /// `∫_Γ λʰ` from the multiplier dofs.
    pub fn traction_integral(&self) -> [f64; 2] {
        multiplier_integral(&self.disc, &self.solve.solution)
    }

    /// Force through the volume residual: `∫_F 2νD(uʰ):D(w) − pʰ div w`
    /// with `w = e₂` on every velocity node of a cut or solid element and
    /// zero elsewhere (hierarchical bubbles included). On cut elements
    /// `D(w) = 0` and `w = e₂`, so the discrete momentum rows tested with
    /// `w` reduce to this integral minus the multiplier integral.
    pub fn alpha_volume(&self) -> f64 {
        let disc = &self.disc;
        let layout = &disc.layout;
        let tags = &disc.rules.class.tags;
        let sp = &layout.velocity;
        let mut wv = vec![0.0; 2 * sp.num_dofs()];
        let interior_start = if matches!(sp.element, crate::fe::ScalarElement::P1Bubble) { (disc.mesh.n() + 1).pow(2) } else { usize::MAX };
        for e in 0..disc.mesh.num_elements() {
            if tags[e] != Tag::Fluid {
                for &d in sp.element_dofs(e) {
                    if d < interior_start && !layout.on_boundary[d] {
                        wv[2 * d + 1] = 1.0;
                    }
                }
            }
        }
        let w = FieldVectors { vel: wv, pre: vec![0.0; layout.pressure.num_dofs()], lam: vec![[0.0; 2]; disc.mesh.num_elements()], mean: 0.0 };
        let u = self.fields();
        let mut total = 0.0;
        for r in disc.rules.rules() {
            let e = r.element;
            let map = disc.mesh.affine_map(e);
            for &(x, wt) in &r.volume_points {
                let a = u.eval(disc, e, &map, x);
                let b = w.eval(disc, e, &map, x);
                let (da, db) = (a.strain(), b.strain());
                let dd = da[0][0] * db[0][0] + 2.0 * da[0][1] * db[0][1] + da[1][1] * db[1][1];
                total += wt * (2.0 * self.nu * dd - a.p * b.div());
            }
        }
        total
    }
}

/// `∫_Γ λʰ` summed over the retained multiplier elements.
pub fn multiplier_integral(disc: &Discretization, x: &[f64]) -> [f64; 2] {
    let layout = &disc.layout;
    let mut acc = [0.0, 0.0];
    for &e in layout.multiplier_elements() {
        let len: f64 = disc.rules.rule(e).map_or(0.0, |r| r.surface_points.iter().map(|s| s.weight).sum());
        let i = layout.multiplier_offset() + layout.multiplier_unknown(e, 0).unwrap();
        acc[0] += len * x[i];
        acc[1] += len * x[i + 1];
    }
    acc
}

/// Solves the Stokes problem with `f = 0`, `u = (0, vertical)` on the ball
/// and `u = 0` on the walls.
pub fn drag_solve(center: Point, cfg: &DragConfig, vertical: f64) -> Result<DragSolve> {
    let clearance = wall_clearance(center, cfg.radius);
    if !(clearance > 0.0) {
        return Err(Error::InvalidParameter(format!("ball at ({}, {}) is not inside the box", center[0], center[1])));
    }
    let circle = Circle::new(center, cfg.radius);
    let disc = Discretization::new(cfg.n, cfg.triplet, &circle)?;
    let coeffs = StokesCoefficients::new(cfg.nu, cfg.gamma0, disc.h())?;
    let g = move |_: Point| [0.0, vertical];
    let data = ProblemData { g: &g, ..ProblemData::homogeneous() };
    let system = if cfg.gamma0 == 0.0 { assemble_unstabilized(&disc, coeffs, data)? } else { assemble(&disc, coeffs, data)? };
    let report = solve(&system)?;
    let alpha = multiplier_integral(&disc, &report.solution)[1];
    Ok(DragSolve { center, nu: cfg.nu, disc, system, solve: report, alpha })
}

/// Drag coefficient α at a ball position; fails if α is not positive.
pub fn drag_alpha(center: Point, cfg: &DragConfig) -> Result<DragSolve> {
    let d = drag_solve(center, cfg, 1.0)?;
    if !(d.alpha > 0.0) {
        return Err(Error::NonPositiveDrag(d.alpha));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallState {
    pub t: f64,
    pub h2: f64,
    pub h2dot: f64,
}

/// One semi-implicit step of `M h'' = −α h' − gM`.
pub fn step(state: BallState, dt: f64, alpha: f64, mass: f64, gravity: f64) -> BallState {
    let h2dot = (state.h2dot - gravity * dt) / (1.0 + alpha / mass * dt);
    BallState { t: state.t + dt, h2: state.h2 + dt * h2dot, h2dot }
}

/// Fixed point of [`step`].
pub fn terminal_velocity(alpha: f64, mass: f64, gravity: f64) -> f64 {
    -gravity * mass / alpha
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallConfig {
    pub drag: DragConfig,
    pub x_c: f64,
    pub h2_initial: f64,
    pub mass: f64,
    pub gravity: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Recompute α every this many steps.
    pub cadence: usize,
}

impl Default for FallConfig {
    fn default() -> Self {
        Self { drag: DragConfig::default(), x_c: 0.5, h2_initial: 0.75, mass: 0.02, gravity: GRAVITY, dt: 1e-3, t_end: 0.1, cadence: 1 }
    }
}

impl FallConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("dt", self.dt), ("t_end", self.t_end), ("nu", self.drag.nu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cadence == 0 {
            return Err(Error::InvalidParameter("cadence must be at least 1".into()));
        }
        if self.drag.n < 2 {
            return Err(Error::MeshTooCoarse(self.drag.n));
        }
        if !(self.drag.radius > 0.0 && self.drag.radius < 0.5) {
            return Err(Error::InvalidParameter(format!("radius must lie in (0, 0.5), got {}", self.drag.radius)));
        }
        if !(self.drag.gamma0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma0 must be non-negative, got {}", self.drag.gamma0)));
        }
        if !(wall_clearance([self.x_c, self.h2_initial], self.drag.radius) > 0.0) {
            return Err(Error::InvalidParameter("ball must start strictly inside the box".into()));
        }
        if floor_clearance(self.h2_initial, self.drag.radius) < self.contact_distance() {
            return Err(Error::InvalidParameter("ball starts within one element diameter of the floor".into()));
        }
        Ok(())
    }

    /// One element diameter.
    pub fn contact_distance(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.drag.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallStatus {
    Ok,
    Contact,
}

impl std::fmt::Display for FallStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FallStatus::Ok => "ok",
            FallStatus::Contact => "contact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub state: BallState,
    /// α used for the step that produced this state (0 for the initial row).
    pub alpha: f64,
    pub status: FallStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub status: FallStatus,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "t,h2,h2dot,alpha,status";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{:.6},{:.12e},{:.12e},{:.12e},{}\n", r.state.t, r.state.h2, r.state.h2dot, r.alpha, r.status));
        }
        s
    }
}

/// Runs the time loop. `on_solve` sees every fresh drag solve with the step
/// index, e.g. to write snapshots. The loop halts with [`FallStatus::Contact`]
/// once the ball comes within one element diameter of the floor. The
/// starting height may sit closer than that to the ceiling, since the ball
/// moves away from it.
pub fn simulate(cfg: &FallConfig, mut on_solve: impl FnMut(usize, &DragSolve)) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = BallState { t: 0.0, h2: cfg.h2_initial, h2dot: 0.0 };
    let mut rows = vec![TrajectoryRow { state, alpha: 0.0, status: FallStatus::Ok }];
    let mut alpha = 0.0;
    for k in 0..steps {
        if k % cfg.cadence == 0 {
            let d = drag_alpha([cfg.x_c, state.h2], &cfg.drag)?;
            alpha = d.alpha;
            on_solve(k, &d);
        }
        state = step(state, cfg.dt, alpha, cfg.mass, cfg.gravity);
        let contact = floor_clearance(state.h2, cfg.drag.radius) < cfg.contact_distance();
        let status = if contact { FallStatus::Contact } else { FallStatus::Ok };
        rows.push(TrajectoryRow { state, alpha, status });
        if contact {
            return Ok(Trajectory { rows, status });
        }
    }
    Ok(Trajectory { rows, status: FallStatus::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> DragConfig {
        DragConfig { n: 12, ..DragConfig::default() }
    }

    #[test]
    fn step_reductions() {
        let s = BallState { t: 0.0, h2: 0.5, h2dot: -0.3 };
        let dt = 1e-3;
        let free = step(s, dt, 0.0, 0.02, GRAVITY);
        assert!((free.h2dot - (-0.3 - GRAVITY * dt)).abs() < 1e-12);
        let vt = terminal_velocity(2.5, 0.02, GRAVITY);
        let fixed = step(BallState { h2dot: vt, ..s }, dt, 2.5, 0.02, GRAVITY);
        assert!((fixed.h2dot - vt).abs() < 1e-12);
        let one = step(BallState { t: 0.0, h2: 0.75, h2dot: 0.0 }, 1e-4, 1.0, 0.02, GRAVITY);
        assert!((one.h2dot + 9.81e-4 / 1.005).abs() < 1e-15);
        assert!((one.h2dot + 9.7612e-4).abs() < 1e-8);
    }

    #[test]
    fn step_contracts_toward_terminal_velocity() {
        let (alpha, m) = (3.0, 0.02);
        let vt = terminal_velocity(alpha, m, GRAVITY);
        let mut s = BallState { t: 0.0, h2: 0.7, h2dot: 1.0 };
        for _ in 0..100 {
            let next = step(s, 0.01, alpha, m, GRAVITY);
            assert!((next.h2dot - vt).abs() <= (s.h2dot - vt).abs());
            s = next;
        }
    }

    #[test]
    fn centered_alpha_positive_and_deterministic() {
        let a = drag_alpha([0.5, 0.5], &coarse()).unwrap();
        let b = drag_alpha([0.5, 0.5], &coarse()).unwrap();
        assert!(a.alpha > 0.0);
        assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
        // The diagonal split breaks the mirror symmetry, so the horizontal
        // force is small but not zero.
        assert!(a.traction_integral()[0].abs() < 0.02 * a.alpha);
    }

    #[test]
    fn traction_linear_in_velocity() {
        let a = drag_solve([0.5, 0.6], &coarse(), 1.0).unwrap();
        let b = drag_solve([0.5, 0.6], &coarse(), -0.37).unwrap();
        assert!((b.alpha - (-0.37) * a.alpha).abs() < 1e-8 * a.alpha.abs());
    }

    #[test]
    fn dual_force_evaluation_agrees() {
        let d = drag_alpha([0.5, 0.55], &coarse()).unwrap();
        let v = d.alpha_volume();
        assert!((v - d.alpha).abs() < 1e-6 * d.alpha, "{v} vs {}", d.alpha);
    }

    #[test]
    fn viscosity_scaling() {
        let c = coarse();
        let unstab = DragConfig { gamma0: 0.0, ..c };
        let a1 = drag_alpha([0.5, 0.5], &unstab).unwrap().alpha;
        let a2 = drag_alpha([0.5, 0.5], &DragConfig { nu: 2.0, ..unstab }).unwrap().alpha;
        assert!((a2 - 2.0 * a1).abs() < 1e-8 * a2);
        // With stabilization the exact invariance needs γν fixed.
        let s1 = drag_alpha([0.5, 0.5], &c).unwrap().alpha;
        let s2 = drag_alpha([0.5, 0.5], &DragConfig { nu: 2.0, gamma0: c.gamma0 / 2.0, ..c }).unwrap().alpha;
        assert!((s2 - 2.0 * s1).abs() < 1e-8 * s2);
    }

    #[test]
    fn zero_gravity_stays_put() {
        let cfg = FallConfig { drag: coarse(), gravity: 0.0, t_end: 5e-3, ..FallConfig::default() };
        let tr = simulate(&cfg, |_, _| {}).unwrap();
        assert!(tr.rows.iter().all(|r| r.state.h2 == 0.75 && r.state.h2dot == 0.0));
    }

    #[test]
    fn short_fall_decreases() {
        let cfg = FallConfig { drag: coarse(), t_end: 6e-3, cadence: 2, ..FallConfig::default() };
        let mut solves = 0;
        let tr = simulate(&cfg, |_, _| solves += 1).unwrap();
        assert_eq!(solves, 3);
        assert_eq!(tr.rows.len(), 7);
        assert!(tr.rows.windows(2).all(|w| w[1].state.h2 < w[0].state.h2));
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,h2,h2dot,alpha,status\n0.000000,"));
    }

    #[test]
    fn contact_halts() {
        let cfg = FallConfig { drag: coarse(), h2_initial: 0.21 + 0.1 + 0.13, mass: 1.0, dt: 0.05, t_end: 10.0, cadence: 1000, ..FallConfig::default() };
        let tr = simulate(&cfg, |_, _| {}).unwrap();
        assert_eq!(tr.status, FallStatus::Contact);
        let last = tr.rows.last().unwrap();
        assert!(floor_clearance(last.state.h2, 0.21) < cfg.contact_distance());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(FallConfig { mass: 0.0, ..FallConfig::default() }.validate().is_err());
        assert!(FallConfig { h2_initial: 0.25, ..FallConfig::default() }.validate().is_err());
        assert!(FallConfig { cadence: 0, ..FallConfig::default() }.validate().is_err());
    }
}
