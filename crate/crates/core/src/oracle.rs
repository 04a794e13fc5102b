//! Brute-force reference solutions for small polynomial problems.
//!
//! `P(λ) = Σ λ^i A_i` is linearized to the `mn × mn` pencil `λX + Y` with
//!
//! ```text
//! X = diag(A_m, I, …, I),   Y = [ A_{m-1} A_{m-2} … A_0 ]
//!                               [   -I      0     …  0  ]
//!                               [          …            ]
//! ```
//!
//! acting on `z = [λ^{m-1}x; …; λx; x]`, and solved with a dense QZ.

use faer::{Col, Mat};

use crate::dense::{generalized_eigen, smallest_singular_triplet, C64};
use crate::error::{Error, Result};
use crate::homogeneous::{hom_weights, ExtendedScalar, ProjectivePoint};
use crate::problems::PolyProblem;

pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Size cap for dense oracles; `EIGENSEL_ORACLE_CAP` overrides the default.
pub fn oracle_cap() -> usize {
    parse_cap(std::env::var("EIGENSEL_ORACLE_CAP").ok().as_deref())
}

fn parse_cap(var: Option<&str>) -> usize {
    var.and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_ORACLE_CAP)
}

/// Fails with [`Error::SizeCap`] when `size` exceeds the oracle cap.
pub fn check_size(size: usize) -> Result<()> {
    check_size_against(size, oracle_cap())
}

fn check_size_against(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    Ok(())
}

/// One eigenvalue of the linearization.
#[derive(Clone, Debug)]
pub struct OracleEigenvalue {
    pub point: ProjectivePoint,
    pub value: ExtendedScalar,
}

#[derive(Clone, Debug)]
pub struct OraclePair {
    pub point: ProjectivePoint,
    pub value: ExtendedScalar,
    /// Unit right eigenvector.
    pub right: Col<C64>,
    /// Unit left eigenvector.
    pub left: Col<C64>,
}

impl OraclePair {
    pub fn finite(&self) -> Option<C64> {
        self.value.finite()
    }
}

/// The companion pencil `(X, Y)` described in the module docs.
pub fn companion_pencil(problem: &PolyProblem) -> (Mat<C64>, Mat<C64>) {
    let n = problem.dim();
    let m = problem.degree();
    let big = n * m;
    let mut x = Mat::<C64>::zeros(big, big);
    let mut y = Mat::<C64>::zeros(big, big);
    let am = problem.coeff(m).to_dense();
    for j in 0..n {
        for i in 0..n {
            x[(i, j)] = am[(i, j)];
        }
    }
    for k in n..big {
        x[(k, k)] = C64::from(1.0);
    }
    for blk in 0..m {
        let a = problem.coeff(m - 1 - blk).to_dense();
        for j in 0..n {
            for i in 0..n {
                y[(i, blk * n + j)] = a[(i, j)];
            }
        }
    }
    for blk in 1..m {
        for i in 0..n {
            y[(blk * n + i, (blk - 1) * n + i)] = C64::from(-1.0);
        }
    }
    (x, y)
}

struct Linearized {
    points: Vec<ProjectivePoint>,
}

fn linearize_and_solve(problem: &PolyProblem) -> Result<Linearized> {
    check_size(problem.dim() * problem.degree())?;
    let (x, y) = companion_pencil(problem);
    let minus_y = Mat::from_fn(y.nrows(), y.ncols(), |i, j| -y[(i, j)]);
    let gev = generalized_eigen(minus_y.as_ref(), x.as_ref())?;
    let points = gev
        .alpha
        .iter()
        .zip(&gev.beta)
        .map(|(&a, &b)| {
            ProjectivePoint::new(a, b)
                .map(|p| p.scale_canonical())
                .map_err(|_| Error::Eigensolver("singular pencil: α = β = 0".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Linearized { points })
}

/// All `mn` eigenvalues (finite and infinite) of the problem.
pub fn oracle_eigenvalues(problem: &PolyProblem) -> Result<Vec<OracleEigenvalue>> {
    let lin = linearize_and_solve(problem)?;
    Ok(lin.points.into_iter().map(|p| OracleEigenvalue { value: p.to_scalar(), point: p }).collect())
}

/// All `mn` eigenvalues with unit right and left eigenvectors.
///
/// Eigenvectors are the singular vectors of `P(α, β)` belonging to its
/// smallest singular value, which is more accurate than reading them off the
/// linearization.
pub fn oracle_all_eigenpairs(problem: &PolyProblem) -> Result<Vec<OraclePair>> {
    let lin = linearize_and_solve(problem)?;
    let m = problem.degree();
    let mut out = Vec::with_capacity(lin.points.len());
    for p in &lin.points {
        let pm = problem.combination(&hom_weights(m, p));
        let (right, left, _, _) = smallest_singular_triplet(pm.as_ref())?;
        out.push(OraclePair { point: *p, value: p.to_scalar(), right, left });
    }
    Ok(out)
}

/// Finite oracle eigenvalues sorted by distance to `target`; values whose
/// projective `|β|` is below `inf_tol` are treated as infinite and dropped.
pub fn nearest_finite(values: &[OracleEigenvalue], target: C64, inf_tol: f64) -> Vec<C64> {
    let mut v: Vec<C64> = values
        .iter()
        .filter(|e| e.point.beta().norm() > inf_tol)
        .map(|e| e.point.alpha() / e.point.beta())
        .collect();
    v.sort_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::c64;
    use crate::problems::{gen_diagonal_qep, gen_gyroscopic, gen_random_pep};

    #[test]
    fn diagonal_qep_spectrum() {
        let q = gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap();
        let mut pairs = oracle_all_eigenpairs(&q).unwrap();
        pairs.sort_by(|a, b| a.finite().unwrap().re.total_cmp(&b.finite().unwrap().re));
        for (k, pr) in pairs.iter().enumerate() {
            assert!((pr.finite().unwrap() - c64(k as f64 + 1.0, 0.0)).norm() < 1e-12);
            let idx = if k < 2 { 0 } else { 1 };
            assert!(pr.right[idx].norm() > 1.0 - 1e-12);
            assert!(pr.left[idx].norm() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn random_pep_counts_and_residuals() {
        let q = gen_random_pep(6, 2, 1, false).unwrap();
        assert_eq!(oracle_eigenvalues(&q).unwrap().len(), 12);
        let c = gen_random_pep(4, 3, 2, false).unwrap();
        let pairs = oracle_all_eigenpairs(&c).unwrap();
        assert_eq!(pairs.len(), 12);
        for pr in &pairs {
            let l = pr.finite().unwrap();
            let r = c.eval_apply(l, pr.right.as_ref()).norm_l2();
            assert!(r <= 1e-8 * c.residual_scale(l), "residual {r}");
            let rl = c.eval(l).adjoint() * &pr.left;
            assert!(rl.norm_l2() <= 1e-8 * c.residual_scale(l));
        }
    }

    #[test]
    fn gyroscopic_has_infinite_eigenvalues() {
        let q = gen_gyroscopic(10, 4).unwrap();
        let vals = oracle_eigenvalues(&q).unwrap();
        assert_eq!(vals.len(), 20);
        let infinite = vals.iter().filter(|e| e.point.beta().norm() < 1e-6).count();
        assert!(infinite >= 1);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(parse_cap(None), DEFAULT_ORACLE_CAP);
        assert_eq!(parse_cap(Some(" 4 ")), 4);
        assert_eq!(parse_cap(Some("lots")), DEFAULT_ORACLE_CAP);
        assert!(matches!(check_size_against(6, 4), Err(Error::SizeCap { size: 6, cap: 4 })));
        assert!(check_size_against(4, 4).is_ok());
    }
}
