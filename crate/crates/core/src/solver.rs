//! Sparse direct solves, a 1-norm condition estimate and a power iteration
//! for symmetric pencils.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseMatrix};

pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const MAX_REFINEMENT: usize = 3;

/// LU factorization with partial pivoting.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

fn to_faer(a: &SparseMatrix) -> Result<SparseColMat<usize, f64>> {
    let t: Vec<Triplet<usize, usize, f64>> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &t).map_err(|e| Error::InvalidParameter(format!("{e:?}")))
}

impl Factorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        let lu = to_faer(a)?.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular(Some(index)),
            LuError::Generic(_) => Error::Singular(None),
        })?;
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm2(b);
    let rel = if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) };
    (r, rel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub residual: f64,
    /// False when the raw solve needed refinement or produced non-finite
    /// values.
    pub pivots_healthy: bool,
    pub refinement_steps: usize,
    pub condition: Option<f64>,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    pub const CSV_HEADER: &'static str = "dofs,residual,cond,factor_seconds,solve_seconds";

    pub fn csv_row(&self) -> String {
        let cond = self.condition.map_or_else(|| "nan".to_string(), |c| format!("{c:.6e}"));
        format!("{},{:.3e},{},{:.3},{:.3}", self.solution.len(), self.residual, cond, self.factor_seconds, self.solve_seconds)
    }
}

/// Solves with the given factorization, refining until the residual
/// contract holds.
pub fn solve_factored(a: &SparseMatrix, fact: &Factorization, b: &[f64]) -> Result<SolveReport> {
    if b.len() != fact.dim() {
        return Err(Error::DimensionMismatch { expected: fact.dim(), got: b.len() });
    }
    let t0 = Instant::now();
    let mut x = fact.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(None));
    }
    let (mut r, mut rel) = relative_residual(a, &x, b);
    let healthy = rel <= RESIDUAL_TOLERANCE;
    let mut steps = 0;
    while rel > RESIDUAL_TOLERANCE && steps < MAX_REFINEMENT {
        let dx = fact.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        (r, rel) = relative_residual(a, &x, b);
        steps += 1;
    }
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual(rel));
    }
    Ok(SolveReport {
        solution: x,
        residual: rel,
        pivots_healthy: healthy,
        refinement_steps: steps,
        condition: None,
        factor_seconds: 0.0,
        solve_seconds: t0.elapsed().as_secs_f64(),
    })
}

pub fn solve_linear(a: &SparseMatrix, b: &[f64]) -> Result<SolveReport> {
    let t0 = Instant::now();
    let fact = Factorization::new(a)?;
    let factor_seconds = t0.elapsed().as_secs_f64();
    let mut rep = solve_factored(a, &fact, b)?;
    rep.factor_seconds = factor_seconds;
    Ok(rep)
}

pub fn solve(system: &SaddleSystem) -> Result<SolveReport> {
    solve_linear(&system.matrix, &system.rhs)
}

/// Solve plus condition estimate from the same factorization.
pub fn solve_with_condition(system: &SaddleSystem) -> Result<SolveReport> {
    let t0 = Instant::now();
    let fact = Factorization::new(&system.matrix)?;
    let factor_seconds = t0.elapsed().as_secs_f64();
    let mut rep = solve_factored(&system.matrix, &fact, &system.rhs)?;
    rep.factor_seconds = factor_seconds;
    rep.condition = Some(condition_estimate(&system.matrix, &fact));
    Ok(rep)
}

/// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`, a lower bound on κ₁.
pub fn condition_estimate(a: &SparseMatrix, fact: &Factorization) -> f64 {
    let n = fact.dim();
    if n == 0 {
        return 0.0;
    }
    let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let y = fact.solve(&x);
        let ny = norm1(&y);
        if iter > 0 && ny <= est {
            break;
        }
        est = ny;
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = fact.solve_transpose(&xi);
        let (j, zj) = z.iter().enumerate().fold((0, 0.0), |(bj, bv), (k, &v)| if v.abs() > bv { (k, v.abs()) } else { (bj, bv) });
        if iter > 0 && (zj <= dot(&z, &x) || j == last_j) {
            break;
        }
        last_j = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    // Higham's alternating probe guards against unlucky sign patterns.
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let alt_est = 2.0 * norm1(&fact.solve(&alt)) / (3.0 * n as f64);
    a.norm_1() * est.max(alt_est)
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    /// `h · λ_max(B⁻¹A)`.
    pub value: f64,
    pub iterations: usize,
    /// Top Ritz value per iteration, without the `h` factor.
    pub history: Vec<f64>,
}

pub const EIG_TOLERANCE: f64 = 1e-8;
pub const EIG_MAX_ITER: usize = 500;
/// Vectors iterated together; clustered top eigenvalues (symmetric
/// geometries give near-degenerate pairs) stall a single vector.
pub const EIG_BLOCK: usize = 4;

/// Orthonormalizes `x[k]` against `x[..k]` in the `B` inner product, twice
/// for stability. Returns false if the vector collapsed.
fn b_orthonormalize(b: &SparseMatrix, x: &mut [Vec<f64>], k: usize) -> bool {
    let before = b.bilinear(&x[k], &x[k]).sqrt();
    for _ in 0..2 {
        let bx = b.mul_vec(&x[k]);
        for j in 0..k {
            let c = dot(&x[j], &bx);
            let (head, tail) = x.split_at_mut(k);
            tail[0].iter_mut().zip(&head[j]).for_each(|(v, w)| *v -= c * w);
        }
    }
    let after = b.bilinear(&x[k], &x[k]).sqrt();
    if !(after > 1e-10 * before) || !after.is_finite() {
        return false;
    }
    x[k].iter_mut().for_each(|v| *v /= after);
    true
}

fn orthonormal_block(b: &SparseMatrix, x: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for k in 0..x.len() {
        let mut tries = 0;
        while !b_orthonormalize(b, x, k) {
            tries += 1;
            assert!(tries < 20, "cannot complete a B-orthonormal block");
            x[k].iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        }
    }
}

/// Power iteration on `h B⁻¹A` for symmetric `A ⪰ 0`, `B ≻ 0`: a seeded
/// random block, kept `B`-orthonormal, with a Rayleigh–Ritz step per
/// iteration. Stops when the top Ritz value changes by less than
/// [`EIG_TOLERANCE`] relative.
pub fn generalized_eigmax(a: &SparseMatrix, b: &SparseMatrix, h: f64, seed: u64) -> Result<EigenReport> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: b.nrows(), got: a.nrows() });
    }
    let n = a.nrows();
    let k = EIG_BLOCK.min(n);
    let fact = Factorization::new(b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    orthonormal_block(b, &mut x, &mut rng);
    let mut history: Vec<f64> = Vec::new();
    for it in 1..=EIG_MAX_ITER {
        let ax: Vec<Vec<f64>> = x.iter().map(|v| a.mul_vec(v)).collect();
        let hm = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (dot(&x[i], &ax[j]) + dot(&x[j], &ax[i])));
        let evd = hm.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::NoConvergence { iterations: it, estimate: f64::NAN })?;
        let theta = evd.S().column_vector();
        let top = theta[k - 1];
        history.push(top);
        if top <= 0.0 {
            return Ok(EigenReport { value: 0.0, iterations: it, history });
        }
        if let [.., prev, last] = history[..] {
            if (last - prev).abs() <= EIG_TOLERANCE * last.abs() {
                return Ok(EigenReport { value: h * last, iterations: it, history });
            }
        }
        let y = evd.U();
        let mut z: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                let mut r = vec![0.0; n];
                for (i, axi) in ax.iter().enumerate() {
                    let yc = y[(i, c)];
                    r.iter_mut().zip(axi).for_each(|(rv, v)| *rv += yc * v);
                }
                fact.solve(&r)
            })
            .collect();
        if z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Singular(None));
        }
        // Largest Ritz direction first so it is never the one replaced.
        z.reverse();
        orthonormal_block(b, &mut z, &mut rng);
        x = z;
    }
    Err(Error::NoConvergence { iterations: EIG_MAX_ITER, estimate: h * history.last().copied().unwrap_or(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let a = SparseMatrix::identity(4);
        let r = solve_linear(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.solution, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(r.pivots_healthy);
    }

    #[test]
    fn small_saddle() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 0.0]]);
        let r = solve_linear(&a, &[3.0, 1.0]).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-14 && (r.solution[1] - 1.0).abs() < 1e-14);
        assert!(r.residual <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn structurally_singular_reports_index() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 2.0]]);
        assert!(matches!(solve_linear(&a, &[1.0, 1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn condition_of_diagonals() {
        let a = SparseMatrix::identity(5);
        let f = Factorization::new(&a).unwrap();
        assert!((condition_estimate(&a, &f) - 1.0).abs() < 1e-12);
        let a = SparseMatrix::from_diagonal(&[1.0, 1e6]);
        let f = Factorization::new(&a).unwrap();
        let k = condition_estimate(&a, &f);
        assert!((k / 1e6 - 1.0).abs() < 0.01, "{k}");
    }

    #[test]
    fn condition_matches_dense_inverse() {
        // Tridiagonal with known inverse norm computed column by column.
        let n = 30;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            rows[i][i] = 2.0 + i as f64 * 0.1;
            if i + 1 < n {
                rows[i][i + 1] = -1.0;
                rows[i + 1][i] = -1.3;
            }
        }
        let a = SparseMatrix::from_dense(&rows);
        let f = Factorization::new(&a).unwrap();
        let mut inv_norm: f64 = 0.0;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            inv_norm = inv_norm.max(f.solve(&e).iter().map(|v| v.abs()).sum());
        }
        let exact = a.norm_1() * inv_norm;
        let est = condition_estimate(&a, &f);
        assert!(est <= exact * (1.0 + 1e-10) && est >= 0.3 * exact, "{est} vs {exact}");
    }

    #[test]
    fn eigmax_simple_pencils() {
        let b = SparseMatrix::from_diagonal(&[1.0, 3.0, 2.0]);
        let r = generalized_eigmax(&b, &b, 0.25, 1).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0]);
        let r = generalized_eigmax(&a, &SparseMatrix::identity(2), 1.0, 1).unwrap();
        assert!((r.value - 2.0).abs() < 1e-7);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }

    #[test]
    fn eigmax_dense_pencil_rayleigh_monotone() {
        let n = 12;
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![vec![0.0; n]; n];
        for i in 0..n {
            b[i][i] = 2.0;
            a[i][i] = 1.0 + (i as f64).sqrt();
            if i + 1 < n {
                b[i][i + 1] = 0.5;
                b[i + 1][i] = 0.5;
                a[i][i + 1] = -0.4;
                a[i + 1][i] = -0.4;
            }
        }
        let (a, b) = (SparseMatrix::from_dense(&a), SparseMatrix::from_dense(&b));
        let r = generalized_eigmax(&a, &b, 1.0, 3).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        // Rayleigh quotient of the top eigenvector bounds every trial vector.
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            assert!(a.bilinear(&e, &e) / b.bilinear(&e, &e) <= r.value * (1.0 + 1e-6));
        }
        let r2 = generalized_eigmax(&a, &b, 2.0, 3).unwrap();
        assert!((r2.value - 2.0 * r.value).abs() < 1e-12 * r2.value);
    }

    #[test]
    fn csv_row_shape() {
        let r = solve_linear(&SparseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.csv_row().split(',').count(), SolveReport::CSV_HEADER.split(',').count());
    }
}
