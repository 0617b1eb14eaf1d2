//! Quadrature over the fluid part of each element and over the interface
//! chord, with the level set linearized from its vertex values.

use crate::error::{Error, Result};
use crate::geometry::{dist, interface_normal, polygon_area, BackgroundMesh, ElementClass, LevelSet, Point, Tag};
use crate::quadrature::{gauss_legendre_unit, triangle_rule};

/// Fluid fractions below this are treated as solid.
pub const DEGENERATE_FRACTION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: Point,
    pub weight: f64,
    /// Unit normal pointing out of the fluid, from the exact level-set gradient.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct CutRule {
    pub element: usize,
    pub volume_points: Vec<(Point, f64)>,
    pub surface_points: Vec<SurfacePoint>,
    pub fluid_area_fraction: f64,
    /// Fluid sub-polygons (one, or two when a quad was split).
    pub polygons: Vec<Vec<Point>>,
    pub chords: Vec<[Point; 2]>,
}

impl CutRule {
    pub fn fluid_area(&self) -> f64 {
        self.volume_points.iter().map(|(_, w)| w).sum()
    }

    pub fn chord_length(&self) -> f64 {
        self.chords.iter().map(|c| dist(c[0], c[1])).sum()
    }
}

/// Clips a convex element against `φ_lin ≥ 0`, where `φ_lin` interpolates the
/// vertex values linearly along each edge.
///
/// Returns an empty polygon when no part of the element is fluid, and
/// [`Error::DegenerateCut`] when the fluid part is a sliver.
pub fn clip_element(polygon: &[Point], phi: &[f64]) -> Result<Vec<Point>> {
    let k = polygon.len();
    let mut out = Vec::with_capacity(k + 2);
    for i in 0..k {
        let j = (i + 1) % k;
        let (a, b) = (phi[i], phi[j]);
        if a >= 0.0 {
            out.push(polygon[i]);
        }
        if (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0) {
            out.push(crossing(polygon[i], polygon[j], a, b));
        }
    }
    out.dedup_by(|p, q| dist(*p, *q) < 1e-15);
    if out.len() > 1 && dist(out[0], out[out.len() - 1]) < 1e-15 {
        out.pop();
    }
    if out.len() < 3 {
        return Ok(Vec::new());
    }
    let full = polygon_area(polygon).abs();
    let frac = polygon_area(&out).abs() / full;
    if frac < DEGENERATE_FRACTION {
        return Err(Error::DegenerateCut(frac));
    }
    Ok(out)
}

fn crossing(p: Point, q: Point, a: f64, b: f64) -> Point {
    let t = a / (a - b);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Fan-triangulates a convex polygon from its first vertex and applies a
/// symmetric triangle rule of the given degree on every fan triangle.
pub fn volume_rule(polygon: &[Point], degree: usize) -> Result<Vec<(Point, f64)>> {
    if polygon.len() < 3 {
        return Err(Error::InvalidParameter("volume rule needs a non-empty polygon".into()));
    }
    let mut pts = Vec::new();
    for i in 1..polygon.len() - 1 {
        let tri = [polygon[0], polygon[i], polygon[i + 1]];
        if polygon_area(&tri).abs() <= 0.0 {
            continue;
        }
        pts.extend(triangle_rule(tri, degree)?);
    }
    Ok(pts)
}

/// Zero points of the linearized level set on the element boundary: strict
/// sign changes along edges plus vertices where `φ = 0`.
fn zero_points(polygon: &[Point], phi: &[f64]) -> Vec<Point> {
    let k = polygon.len();
    let mut pts: Vec<Point> = Vec::new();
    for i in 0..k {
        let j = (i + 1) % k;
        if phi[i] == 0.0 {
            pts.push(polygon[i]);
        }
        if (phi[i] > 0.0 && phi[j] < 0.0) || (phi[i] < 0.0 && phi[j] > 0.0) {
            pts.push(crossing(polygon[i], polygon[j], phi[i], phi[j]));
        }
    }
    let mut unique: Vec<Point> = Vec::new();
    for p in pts {
        if unique.iter().all(|&q| dist(p, q) > 1e-15) {
            unique.push(p);
        }
    }
    unique
}

/// Gauss–Legendre rule on the interface chord of a cut element.
///
/// Returns an empty rule when the linearized zero set does not span a chord
/// inside the element. A quad whose zero set crosses all four edges yields
/// [`Error::AmbiguousCut`].
pub fn surface_rule(element: usize, polygon: &[Point], phi: &[f64], ls: &dyn LevelSet, n_points: usize) -> Result<(Vec<SurfacePoint>, Option<[Point; 2]>)> {
    let zeros = zero_points(polygon, phi);
    match zeros.len() {
        0 | 1 => Ok((Vec::new(), None)),
        2 => {
            let (a, b) = (zeros[0], zeros[1]);
            let len = dist(a, b);
            let mut pts = Vec::with_capacity(n_points);
            for (t, w) in gauss_legendre_unit(n_points) {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                pts.push(SurfacePoint { x, weight: w * len, normal: interface_normal(ls, x)? });
            }
            Ok((pts, Some([a, b])))
        }
        k => Err(Error::AmbiguousCut(k, element)),
    }
}

/// Per-element rules for a whole mesh, together with the classification
/// after degenerate cuts were moved to the solid side.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    pub class: ElementClass,
    rules: Vec<Option<CutRule>>,
    pub degree: usize,
}

impl QuadratureSet {
    pub fn rule(&self, e: usize) -> Option<&CutRule> {
        self.rules[e].as_ref()
    }

    pub fn rules(&self) -> impl Iterator<Item = &CutRule> {
        self.rules.iter().flatten()
    }

    pub fn fluid_area(&self) -> f64 {
        self.rules().map(CutRule::fluid_area).sum()
    }

    pub fn interface_length(&self) -> f64 {
        self.rules().flat_map(|r| r.surface_points.iter()).map(|p| p.weight).sum()
    }
}

pub fn build_rules(mesh: &BackgroundMesh, class: &ElementClass, ls: &dyn LevelSet, degree: usize, n_surface: usize) -> Result<QuadratureSet> {
    let mut tags = class.tags.clone();
    let mut rules = Vec::with_capacity(mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let poly = mesh.element_points(e);
        let area = polygon_area(&poly);
        let rule = match tags[e] {
            Tag::Solid => None,
            Tag::Fluid => Some(CutRule {
                element: e,
                volume_points: volume_rule(&poly, degree)?,
                surface_points: Vec::new(),
                fluid_area_fraction: 1.0,
                polygons: vec![poly.clone()],
                chords: Vec::new(),
            }),
            Tag::Cut => {
                let phi: Vec<f64> = poly.iter().map(|&x| ls.value(x)).collect();
                let pieces: Vec<(Vec<Point>, Vec<f64>)> = match surface_rule(e, &poly, &phi, ls, n_surface) {
                    Err(Error::AmbiguousCut(..)) if poly.len() == 4 => {
                        vec![(vec![poly[0], poly[1], poly[2]], vec![phi[0], phi[1], phi[2]]), (vec![poly[0], poly[2], poly[3]], vec![phi[0], phi[2], phi[3]])]
                    }
                    Err(err) => return Err(err),
                    Ok(_) => vec![(poly.clone(), phi.clone())],
                };
                let mut rule = CutRule {
                    element: e,
                    volume_points: Vec::new(),
                    surface_points: Vec::new(),
                    fluid_area_fraction: 0.0,
                    polygons: Vec::new(),
                    chords: Vec::new(),
                };
                for (p, f) in &pieces {
                    let clipped = match clip_element(p, f) {
                        Ok(c) => c,
                        Err(Error::DegenerateCut(_)) => Vec::new(),
                        Err(err) => return Err(err),
                    };
                    if clipped.is_empty() {
                        continue;
                    }
                    rule.volume_points.extend(volume_rule(&clipped, degree)?);
                    let (sp, chord) = surface_rule(e, p, f, ls, n_surface)?;
                    rule.surface_points.extend(sp);
                    rule.chords.extend(chord);
                    rule.polygons.push(clipped);
                }
                rule.fluid_area_fraction = rule.polygons.iter().map(|p| polygon_area(p).abs()).sum::<f64>() / area;
                if rule.fluid_area_fraction < DEGENERATE_FRACTION {
                    tags[e] = Tag::Solid;
                    None
                } else {
                    Some(rule)
                }
            }
        };
        rules.push(rule);
    }
    Ok(QuadratureSet { class: ElementClass { tags }, rules, degree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_elements, CellKind, Circle};

    fn same_polygon(a: &[Point], b: &[Point]) -> bool {
        a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| dist(*p, *q) < 1e-14))
    }

    #[test]
    fn uncut_triangle_is_returned() {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(same_polygon(&clip_element(&t, &[1.0, 1.0, 1.0]).unwrap(), &t));
        assert!(clip_element(&t, &[-1.0, -1.0, -1.0]).unwrap().is_empty());
    }

    #[test]
    fn clip_at_edge_midpoints() {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let c = clip_element(&t, &[-1.0, 1.0, -1.0]).unwrap();
        assert!(same_polygon(&c, &[[0.5, 0.0], [1.0, 0.0], [0.5, 0.5]]));
    }

    #[test]
    fn clip_square_in_half() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let c = clip_element(&sq, &[-1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(same_polygon(&c, &[[1.0, 0.5], [1.0, 1.0], [0.0, 1.0], [0.0, 0.5]]));
        assert!((polygon_area(&c) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sliver_is_degenerate() {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(clip_element(&t, &[1e-9, -1.0, -1.0]), Err(Error::DegenerateCut(_))));
    }

    #[test]
    fn clipping_ignores_vertex_labels() {
        let t = [[0.1, 0.2], [0.9, 0.1], [0.3, 0.8]];
        let phi = [0.4, -0.3, 0.2];
        let base = polygon_area(&clip_element(&t, &phi).unwrap()).abs();
        for r in 0..3 {
            let tt: Vec<Point> = (0..3).map(|i| t[(i + r) % 3]).collect();
            let pp: Vec<f64> = (0..3).map(|i| phi[(i + r) % 3]).collect();
            assert!((polygon_area(&clip_element(&tt, &pp).unwrap()).abs() - base).abs() < 1e-14);
            let tr: Vec<Point> = tt.iter().rev().copied().collect();
            let pr: Vec<f64> = pp.iter().rev().copied().collect();
            assert!((polygon_area(&clip_element(&tr, &pr).unwrap()).abs() - base).abs() < 1e-14);
        }
    }

    #[test]
    fn volume_rule_on_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        for d in 1..=6 {
            let r = volume_rule(&sq, d).unwrap();
            let s: f64 = r.iter().map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-14);
            let mx: f64 = r.iter().map(|(x, w)| w * x[0]).sum();
            assert!((mx - 0.5).abs() < 1e-14);
        }
        assert!(volume_rule(&sq, 7).is_err());
    }

    #[test]
    fn chord_along_full_edge() {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let c = Circle::new([0.5, -3.0], 3.0);
        let (pts, chord) = surface_rule(0, &t, &[0.0, 0.0, 1.0], &c, 3).unwrap();
        let len: f64 = pts.iter().map(|p| p.weight).sum();
        assert!((len - 1.0).abs() < 1e-15);
        assert!(chord.is_some());
    }

    #[test]
    fn saddle_quad_is_ambiguous() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let c = Circle::new([0.5, 0.5], 0.3);
        assert!(matches!(surface_rule(3, &sq, &[1.0, -1.0, 1.0, -1.0], &c, 3), Err(Error::AmbiguousCut(4, 3))));
    }

    fn geometry_gaps(n: usize, kind: CellKind) -> (f64, f64) {
        let c = Circle::new([0.5, 0.5], 0.21);
        let m = BackgroundMesh::new(n, kind).unwrap();
        let class = classify_elements(&m, &c);
        let q = build_rules(&m, &class, &c, 4, 3).unwrap();
        ((q.fluid_area() - (1.0 - c.area())).abs(), (q.interface_length() - c.circumference()).abs())
    }

    #[test]
    fn total_area_and_length() {
        let (da, _) = geometry_gaps(40, CellKind::Triangle);
        assert!(da < 1e-3);
        let (da, dl) = geometry_gaps(80, CellKind::Triangle);
        assert!(da < 1e-3 && dl < 5e-4, "{da} {dl}");
        let (da, dl) = geometry_gaps(80, CellKind::Quad);
        assert!(da < 1e-3 && dl < 5e-4, "{da} {dl}");
    }

    #[test]
    fn normals_unit_and_inward_to_solid() {
        let c = Circle::new([0.5, 0.5], 0.21);
        let m = BackgroundMesh::new(24, CellKind::Quad).unwrap();
        let q = build_rules(&m, &classify_elements(&m, &c), &c, 4, 3).unwrap();
        for p in q.rules().flat_map(|r| r.surface_points.iter()) {
            assert!((p.normal[0].hypot(p.normal[1]) - 1.0).abs() < 1e-12);
            assert!(p.normal[0] * (p.x[0] - 0.5) + p.normal[1] * (p.x[1] - 0.5) < 0.0);
            assert!(p.weight > 0.0);
        }
    }
}
