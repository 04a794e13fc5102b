//! Registry of detected eigentriplets and the divided-difference selection
//! criterion.
//!
//! A candidate `(θ, v)` is rejected when, for some registered triplet
//! `(λ_i, x_i, y_i)`,
//!
//! ```text
//! |y_i^* F[λ_i, θ] v| / |y_i^* F'(λ_i) x_i|  >=  η
//! ```
//!
//! The ratio is 1 when the candidate is the registered pair itself and 0 for
//! an eigenpair belonging to a different eigenvalue, even if the two share
//! an eigenvector. In homogeneous mode the divided difference and derivative
//! are replaced by their projective counterparts, so infinite eigenvalues
//! take part as well.

use faer::{Col, ColRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{c64, dot, norm, norm2_estimate, normalized, C64};
use crate::error::{Error, Result};
use crate::homogeneous::{
    hom_d_weights, hom_divided_difference_weights, ExtendedScalar, ProjectivePoint, SWITCH_TOL,
};
use crate::problems::{NonlinearProblem, PolyProblem, DEFECTIVE_THRESHOLD};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Standard,
    Homogeneous,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "homogeneous" => Ok(Self::Homogeneous),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}' (expected standard or homogeneous)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub eta_sel: f64,
    pub mode: SelectionMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { eta_sel: 0.1, mode: SelectionMode::Standard }
    }
}

impl SelectionConfig {
    pub fn new(eta_sel: f64, mode: SelectionMode) -> Result<Self> {
        let cfg = Self { eta_sel, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_sel > 0.0 && self.eta_sel < 1.0) {
            return Err(Error::InvalidArgument(format!("eta_sel must lie in (0, 1), got {}", self.eta_sel)));
        }
        Ok(())
    }
}

/// An eigenvalue either as a plain scalar or as a projective point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigenValue {
    Scalar(C64),
    Projective(ProjectivePoint),
}

impl EigenValue {
    pub fn to_extended(&self) -> ExtendedScalar {
        match self {
            Self::Scalar(z) => ExtendedScalar::Finite(*z),
            Self::Projective(p) => p.to_scalar(),
        }
    }

    pub fn to_point(&self) -> ProjectivePoint {
        match self {
            Self::Scalar(z) => ProjectivePoint::from_scalar(*z),
            Self::Projective(p) => *p,
        }
    }

    /// The scalar value, if finite.
    pub fn scalar(&self) -> Option<C64> {
        self.to_extended().finite()
    }

    pub fn is_infinite(&self) -> bool {
        self.to_extended().is_infinite()
    }

    /// `|λ − μ|` for two scalars, chordal distance otherwise.
    pub fn distance(&self, other: &EigenValue) -> f64 {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => (a - b).norm(),
            _ => self.to_point().chordal_distance(&other.to_point()),
        }
    }

    /// Distinctness test used for duplicate detection: relative `1e-6` for
    /// scalars, chordal `1e-6` for projective values.
    pub fn same_as(&self, other: &EigenValue, tol: f64) -> bool {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => (a - b).norm() <= tol * a.norm().max(1.0),
            _ => self.distance(other) <= tol,
        }
    }
}

/// A converged eigenvalue with its unit right and left eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenTriplet {
    pub value: EigenValue,
    pub right: Col<C64>,
    pub left: Col<C64>,
    /// `y^* F'(λ) x`, or `y^* DP(α, β) x` in homogeneous mode.
    pub denom: C64,
    pub cond: f64,
    pub residual: f64,
    /// Outer iteration at which the triplet was detected (0 if unknown).
    pub iteration: usize,
    /// `A_j^H y` for polynomial problems, so that criterion numerators cost
    /// one inner product per coefficient.
    left_products: Option<Vec<Col<C64>>>,
}

#[derive(Serialize, Deserialize)]
struct TripletRepr {
    value: ExtendedScalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point: Option<ProjectivePoint>,
    right_re: Vec<f64>,
    right_im: Vec<f64>,
    left_re: Vec<f64>,
    left_im: Vec<f64>,
    denom: [f64; 2],
    cond: f64,
    residual: f64,
    #[serde(default)]
    iteration: usize,
}

fn split(x: &Col<C64>) -> (Vec<f64>, Vec<f64>) {
    (x.iter().map(|z| z.re).collect(), x.iter().map(|z| z.im).collect())
}

fn join(re: &[f64], im: &[f64]) -> std::result::Result<Col<C64>, String> {
    if re.len() != im.len() {
        return Err("real and imaginary parts differ in length".into());
    }
    Ok(Col::from_fn(re.len(), |i| c64(re[i], im[i])))
}

impl Serialize for EigenTriplet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (right_re, right_im) = split(&self.right);
        let (left_re, left_im) = split(&self.left);
        let point = match self.value {
            EigenValue::Projective(p) => Some(p),
            EigenValue::Scalar(_) => None,
        };
        TripletRepr {
            value: self.value.to_extended(),
            point,
            right_re,
            right_im,
            left_re,
            left_im,
            denom: [self.denom.re, self.denom.im],
            cond: self.cond,
            residual: self.residual,
            iteration: self.iteration,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EigenTriplet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = TripletRepr::deserialize(d)?;
        let value = match (r.point, r.value) {
            (Some(p), _) => EigenValue::Projective(p),
            (None, ExtendedScalar::Finite(z)) => EigenValue::Scalar(z),
            (None, ExtendedScalar::Infinite) => EigenValue::Projective(ProjectivePoint::infinity()),
        };
        Ok(Self {
            value,
            right: join(&r.right_re, &r.right_im).map_err(D::Error::custom)?,
            left: join(&r.left_re, &r.left_im).map_err(D::Error::custom)?,
            denom: c64(r.denom[0], r.denom[1]),
            cond: r.cond,
            residual: r.residual,
            iteration: r.iteration,
            left_products: None,
        })
    }
}

/// Approximate eigenpair offered to the selection test.
#[derive(Clone, Debug)]
pub struct CandidatePair {
    pub theta: EigenValue,
    pub v: Col<C64>,
}

impl CandidatePair {
    /// Normalizes `v`.
    pub fn new(theta: EigenValue, v: Col<C64>) -> Self {
        Self { theta, v: normalized(v) }
    }
}

/// Append-only list of detected triplets together with the selection
/// configuration.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    cfg: SelectionConfig,
    triplets: Vec<EigenTriplet>,
}

impl Registry {
    pub fn new(cfg: SelectionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, triplets: Vec::new() })
    }

    pub fn config(&self) -> &SelectionConfig {
        &self.cfg
    }

    pub fn triplets(&self) -> &[EigenTriplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn into_triplets(self) -> Vec<EigenTriplet> {
        self.triplets
    }

    fn homogeneous<'a>(&self, problem: &'a dyn NonlinearProblem) -> Option<&'a PolyProblem> {
        match self.cfg.mode {
            SelectionMode::Homogeneous => problem.as_polynomial(),
            SelectionMode::Standard => None,
        }
    }

    /// `y_i^* F[λ_i, θ] v` for one registered triplet.
    fn numerator(&self, t: &EigenTriplet, problem: &dyn NonlinearProblem, theta: &EigenValue, v: ColRef<'_, C64>) -> C64 {
        if let Some(poly) = self.homogeneous(problem) {
            let w = hom_divided_difference_weights(poly.degree(), &t.value.to_point(), &theta.to_point(), SWITCH_TOL);
            return weighted_numerator(t, poly, &w, v);
        }
        let (Some(li), Some(th)) = (t.value.scalar(), theta.scalar()) else {
            // An infinite value cannot be compared in standard coordinates.
            return C64::from(f64::INFINITY);
        };
        match problem.as_polynomial() {
            Some(poly) => weighted_numerator(t, poly, &poly.divided_difference_weights(li, th), v),
            None => dot(t.left.as_ref(), problem.divided_difference_apply(li, th, v).as_ref()),
        }
    }

    /// `max_i |y_i^* F[λ_i, θ] v| / |denom_i|`, or 0 for an empty registry.
    pub fn criterion_value(&self, problem: &dyn NonlinearProblem, cand: &CandidatePair) -> f64 {
        let v = cand.v.as_ref();
        let nv = norm(v);
        self.triplets
            .iter()
            .map(|t| self.numerator(t, problem, &cand.theta, v).norm() / (nv * t.denom.norm()))
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, problem: &dyn NonlinearProblem, cand: &CandidatePair) -> bool {
        self.criterion_value(problem, cand) < self.cfg.eta_sel
    }

    /// Normalizes `x` and `y`, computes the criterion denominator and the
    /// condition number, and appends the triplet.
    ///
    /// Fails with [`Error::Defective`] when `|y^* F'(λ) x|` is below
    /// `1e-12 ‖F'(λ)‖` (or the homogeneous analogue).
    pub fn register(
        &mut self,
        problem: &dyn NonlinearProblem,
        value: EigenValue,
        x: Col<C64>,
        y: Col<C64>,
        residual: f64,
        iteration: usize,
    ) -> Result<&EigenTriplet> {
        let n = problem.dim();
        if x.nrows() != n || y.nrows() != n {
            return Err(Error::Dimension(format!("eigenvectors must have length {n}")));
        }
        let x = normalized(x);
        let y = normalized(y);
        if norm(x.as_ref()) == 0.0 || norm(y.as_ref()) == 0.0 {
            return Err(Error::InvalidArgument("zero eigenvector".into()));
        }
        let (value, denom, dnorm, cond) = if let Some(poly) = self.homogeneous(problem) {
            let p = value.to_point().scale_canonical();
            let w = hom_d_weights(poly.degree(), &p);
            let denom = dot(y.as_ref(), poly.combination_apply(&w, x.as_ref()).as_ref());
            let dnorm = combination_norm2(poly, &w);
            let a = p.alpha().norm();
            let b = p.beta().norm();
            let m = poly.degree() as i32;
            let num: f64 = poly.norms2().iter().enumerate().map(|(i, nr)| a.powi(i as i32) * b.powi(m - i as i32) * nr).sum();
            (EigenValue::Projective(p), denom, dnorm, num / denom.norm())
        } else {
            let lambda = value
                .scalar()
                .ok_or_else(|| Error::InvalidArgument("an infinite eigenvalue needs homogeneous mode".into()))?;
            let denom = dot(y.as_ref(), problem.derivative_apply(lambda, x.as_ref()).as_ref());
            let dnorm = match problem.as_polynomial() {
                Some(poly) => combination_norm2(poly, &poly.derivative_weights(lambda)),
                None => problem.derivative_norm2(lambda),
            };
            let cond = match problem.as_polynomial() {
                Some(poly) => {
                    let a = lambda.norm();
                    poly.norms2().iter().enumerate().map(|(i, nr)| a.powi(i as i32) * nr).sum::<f64>() / denom.norm()
                }
                None => 1.0 / denom.norm(),
            };
            (EigenValue::Scalar(lambda), denom, dnorm, cond)
        };
        let threshold = DEFECTIVE_THRESHOLD * dnorm;
        if !(denom.norm() > threshold) {
            return Err(Error::Defective { denom: denom.norm(), threshold });
        }
        let left_products = problem
            .as_polynomial()
            .map(|poly| poly.coeffs().iter().map(|a| a.apply_adjoint(y.as_ref())).collect());
        self.triplets.push(EigenTriplet { value, right: x, left: y, denom, cond, residual, iteration, left_products });
        Ok(self.triplets.last().expect("just pushed"))
    }

    /// Inserts an already-complete triplet (e.g. read back from JSON). The
    /// cached products are recomputed for polynomial problems.
    pub fn push_existing(&mut self, problem: &dyn NonlinearProblem, mut t: EigenTriplet) {
        t.left_products = problem
            .as_polynomial()
            .map(|poly| poly.coeffs().iter().map(|a| a.apply_adjoint(t.left.as_ref())).collect());
        self.triplets.push(t);
    }
}

fn weighted_numerator(t: &EigenTriplet, poly: &PolyProblem, w: &[C64], v: ColRef<'_, C64>) -> C64 {
    match &t.left_products {
        Some(lp) => lp.iter().zip(w).map(|(ay, &wj)| wj * dot(ay.as_ref(), v)).sum(),
        None => dot(t.left.as_ref(), poly.combination_apply(w, v).as_ref()),
    }
}

/// Spectral norm estimate of `Σ w_i A_i` without forming it.
pub(crate) fn combination_norm2(poly: &PolyProblem, w: &[C64]) -> f64 {
    norm2_estimate(
        poly.dim(),
        |x| poly.combination_apply(w, x),
        |x| poly.combination_apply_adjoint(w, x),
        1e-3,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_diagonal_qep, gen_example_2x2};

    fn e(n: usize, i: usize) -> Col<C64> {
        Col::from_fn(n, |k| if k == i { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    fn diag_qep() -> PolyProblem {
        gen_diagonal_qep(&[-3.0, -7.0], &[2.0, 12.0]).unwrap()
    }

    #[test]
    fn empty_registry_passes_everything() {
        let q = diag_qep();
        let reg = Registry::new(SelectionConfig::default()).unwrap();
        let cand = CandidatePair::new(EigenValue::Scalar(c64(1.0, 0.0)), e(2, 0));
        assert_eq!(reg.criterion_value(&q, &cand), 0.0);
        assert!(reg.passes(&q, &cand));
    }

    #[test]
    fn registered_pair_scores_one_and_shared_vector_scores_zero() {
        let q = diag_qep();
        let mut reg = Registry::new(SelectionConfig::default()).unwrap();
        let t = reg.register(&q, EigenValue::Scalar(c64(1.0, 0.0)), e(2, 0), e(2, 0), 0.0, 0).unwrap();
        assert!((t.denom - c64(-1.0, 0.0)).norm() < 1e-15);
        let same = CandidatePair::new(EigenValue::Scalar(c64(1.0, 0.0)), e(2, 0));
        assert!((reg.criterion_value(&q, &same) - 1.0).abs() < 1e-15);
        assert!(!reg.passes(&q, &same));
        // λ = 2 has the same eigenvector e1, yet y1^* Q[1,2] e1 = 3 - 3 = 0
        let other = CandidatePair::new(EigenValue::Scalar(c64(2.0, 0.0)), e(2, 0));
        assert!(reg.criterion_value(&q, &other) < 1e-15);
        assert!(reg.passes(&q, &other));
    }

    #[test]
    fn register_normalizes_and_rejects_defective() {
        let q = diag_qep();
        let mut reg = Registry::new(SelectionConfig::default()).unwrap();
        let x = Col::from_fn(2, |i| if i == 0 { c64(3.0, 0.0) } else { c64(0.0, 0.0) });
        let t = reg.register(&q, EigenValue::Scalar(c64(1.0, 0.0)), x.clone(), x, 0.0, 0).unwrap();
        assert!((norm(t.right.as_ref()) - 1.0).abs() < 1e-15);
        assert!((t.denom - c64(-1.0, 0.0)).norm() < 1e-15);
        // a double root: λ² - 2λ + 1 has Q'(1) = 0
        let dbl = gen_diagonal_qep(&[-2.0], &[1.0]).unwrap();
        let one = Col::from_fn(1, |_| c64(1.0, 0.0));
        let err = reg.register(&dbl, EigenValue::Scalar(c64(1.0, 0.0)), one.clone(), one, 0.0, 0);
        assert!(matches!(err, Err(Error::Defective { .. })));
    }

    #[test]
    fn example_2x2_discrimination() {
        let (delta, eps) = (1e-6, 1e-3);
        let a = gen_example_2x2(delta, eps);
        let mut reg = Registry::new(SelectionConfig::default()).unwrap();
        let y = Col::from_fn(2, |i| if i == 0 { c64(delta, 0.0) } else { c64(-eps, 0.0) });
        reg.register(&a, EigenValue::Scalar(c64(0.0, 0.0)), e(2, 0), y, 0.0, 0).unwrap();
        let v1 = CandidatePair::new(EigenValue::Scalar(c64(0.3, 0.0)), e(2, 0));
        assert!((reg.criterion_value(&a, &v1) - 1.0).abs() < 1e-10);
        let v2 = CandidatePair::new(
            EigenValue::Scalar(c64(delta, 0.0)),
            Col::from_fn(2, |i| if i == 0 { c64(eps, 0.0) } else { c64(delta, 0.0) }),
        );
        assert!(reg.criterion_value(&a, &v2) < 1e-10);
    }

    #[test]
    fn homogeneous_mode_handles_infinity() {
        // leading coefficient singular: λ² diag(0, 1) + λ I + I has an infinite eigenvalue with x = e1
        let q = PolyProblem::from_dense(vec![
            faer::Mat::from_fn(2, 2, |i, j| if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) }),
            faer::Mat::from_fn(2, 2, |i, j| if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) }),
            faer::Mat::from_fn(2, 2, |i, j| if i == j && i == 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) }),
        ])
        .unwrap();
        let cfg = SelectionConfig::new(0.1, SelectionMode::Homogeneous).unwrap();
        let mut reg = Registry::new(cfg).unwrap();
        let inf = EigenValue::Projective(ProjectivePoint::infinity());
        reg.register(&q, inf, e(2, 0), e(2, 0), 0.0, 0).unwrap();
        let same = CandidatePair::new(inf, e(2, 0));
        assert!((reg.criterion_value(&q, &same) - 1.0).abs() < 1e-14);
        // the finite eigenvalue of the first row, λ = -1, shares x = e1
        let other = CandidatePair::new(EigenValue::Scalar(c64(-1.0, 0.0)), e(2, 0));
        assert!(reg.criterion_value(&q, &other) < 1e-14);

        let json = serde_json::to_string(&reg.triplets()[0]).unwrap();
        assert!(json.contains(r#""value":{"inf":true}"#));
        let back: EigenTriplet = serde_json::from_str(&json).unwrap();
        assert!(back.value.is_infinite());
    }

    #[test]
    fn criterion_is_phase_invariant() {
        let q = diag_qep();
        let mut reg = Registry::new(SelectionConfig::default()).unwrap();
        reg.register(&q, EigenValue::Scalar(c64(3.0, 0.0)), e(2, 1), e(2, 1), 0.0, 0).unwrap();
        let v = Col::from_fn(2, |i| c64(0.3 + i as f64, -0.2));
        let c1 = CandidatePair::new(EigenValue::Scalar(c64(3.5, 0.1)), v.clone());
        let c2 = CandidatePair::new(EigenValue::Scalar(c64(3.5, 0.1)), v * faer::Scale(c64(0.0, 1.0)));
        assert!((reg.criterion_value(&q, &c1) - reg.criterion_value(&q, &c2)).abs() < 1e-15);
    }
}
