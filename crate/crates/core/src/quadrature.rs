//! Symmetric Gauss rules on triangles and Gauss–Legendre rules on segments.

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const MAX_TRIANGLE_DEGREE: usize = 6;

fn s3(w: f64) -> Vec<([f64; 3], f64)> {
    vec![([1.0 / 3.0; 3], w)]
}

fn s21(a: f64, w: f64) -> Vec<([f64; 3], f64)> {
    let b = 1.0 - 2.0 * a;
    vec![([a, a, b], w), ([a, b, a], w), ([b, a, a], w)]
}

fn s111(a: f64, b: f64, w: f64) -> Vec<([f64; 3], f64)> {
    let c = 1.0 - a - b;
    vec![([a, b, c], w), ([a, c, b], w), ([b, a, c], w), ([b, c, a], w), ([c, a, b], w), ([c, b, a], w)]
}

// Dunavant rules in barycentric coordinates, weights summing to 1. Degree 3
// reuses the degree-4 rule, whose weights are all positive.
fn barycentric_rule(degree: usize) -> Vec<([f64; 3], f64)> {
    match degree {
        1 => s3(1.0),
        2 => s21(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            let mut r = s21(0.445948490915965, 0.223381589678011);
            r.extend(s21(0.091576213509771, 0.109951743655322));
            r
        }
        5 => {
            let mut r = s3(0.225);
            r.extend(s21(0.470142064105115, 0.132394152788506));
            r.extend(s21(0.101286507323456, 0.125939180544827));
            r
        }
        _ => {
            let mut r = s21(0.249286745170910, 0.116786275726379);
            r.extend(s21(0.063089014491502, 0.050844906370207));
            r.extend(s111(0.053145049844817, 0.310352451033784, 0.082851075618374));
            r
        }
    }
}

/// Quadrature rule on an arbitrary triangle, exact for polynomials of the
/// requested total degree.
pub fn triangle_rule(vertices: [Point; 3], degree: usize) -> Result<Vec<(Point, f64)>> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let [a, b, c] = vertices;
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    Ok(barycentric_rule(degree)
        .into_iter()
        .map(|(l, w)| {
            let x = [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]];
            (x, w * area)
        })
        .collect())
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let pts: &[(f64, f64)] = match n {
        1 => &[(0.0, 2.0)],
        2 => &[(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)],
        3 => &[(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)],
        4 => &[
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ],
        _ => &[
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ],
    };
    pts.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    #[test]
    fn weights_positive_and_sum_to_area() {
        for d in 1..=MAX_TRIANGLE_DEGREE {
            let r = triangle_rule([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]], d).unwrap();
            assert!(r.iter().all(|(_, w)| *w > 0.0));
            let s: f64 = r.iter().map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_on_monomials() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for d in 1..=MAX_TRIANGLE_DEGREE {
            let r = triangle_rule(tri, d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got: f64 = r.iter().map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32)).sum();
                    assert!((got - exact).abs() < 1e-13, "degree {d}, x^{a} y^{b}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn x2y2_over_unit_triangle() {
        let r = triangle_rule([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 4).unwrap();
        let got: f64 = r.iter().map(|(x, w)| w * x[0] * x[0] * x[1] * x[1]).sum();
        assert!((got - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_degree() {
        assert_eq!(triangle_rule([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 7).unwrap_err(), Error::UnsupportedDegree(7));
        assert!(triangle_rule([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=5 {
            let r = gauss_legendre_unit(n);
            for k in 0..2 * n as i32 {
                let got: f64 = r.iter().map(|(x, w)| w * x.powi(k)).sum();
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }
}
