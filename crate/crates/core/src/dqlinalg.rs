//! Vectors and Hermitian matrices over dual quaternions.
//!
//! Holds the componentwise projection onto UDQⁿ and the power iteration that
//! finds the dominant right eigenpair of a Hermitian dual quaternion matrix.

use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dq::{DualQuaternion, UnitDualQuaternion};
use crate::dualnum::DualNumber;
use crate::error::{Error, Result};
use crate::quat::Quaternion;

/// Power-iteration stopping residual.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: usize = 1000;

/// Hermitian symmetry tolerance per component.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DQVector(Vec<DualQuaternion>);

impl DQVector {
    pub fn new(entries: Vec<DualQuaternion>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![DualQuaternion::ZERO; n])
    }

    /// The all-ones vector `1ⁿ`.
    pub fn ones(n: usize) -> Self {
        Self(vec![DualQuaternion::ONE; n])
    }

    pub fn from_unit(entries: &[UnitDualQuaternion]) -> Self {
        Self(entries.iter().map(|u| u.get()).collect())
    }

    /// Entries with each of the eight real components i.i.d. standard normal.
    pub fn random_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let mut q = || Quaternion::new(g(), g(), g(), g());
        Self((0..n).map(|_| DualQuaternion::new(q(), q())).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[DualQuaternion] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DualQuaternion> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<DualQuaternion> {
        self.0
    }

    /// Entrywise conversion; fails on the first entry violating the unit condition.
    pub fn to_unit(&self) -> Result<Vec<UnitDualQuaternion>> {
        self.0.iter().map(|x| UnitDualQuaternion::new(*x)).collect()
    }

    /// Index of the first entry that is not unit within `tol`.
    pub fn first_non_unit(&self, tol: f64) -> Option<usize> {
        self.0.iter().position(|x| !x.is_unit(tol))
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.first_non_unit(tol).is_none()
    }

    /// `‖x‖₂` as a dual number.
    ///
    /// `√(Σ|x_i|²)` when the standard part of the vector is nonzero, otherwise
    /// `√(Σ|(x_i)_du|²) ε`.
    pub fn norm2(&self) -> DualNumber {
        let appreciable = self.0.iter().any(|x| !x.st.is_zero());
        if appreciable {
            let s: DualNumber = self.0.iter().map(|x| x.magnitude_squared()).sum();
            let r = s.st.sqrt();
            DualNumber::new(r, s.du / (2.0 * r))
        } else {
            let s: f64 = self.0.iter().map(|x| x.du.norm_squared()).sum();
            DualNumber::new(0.0, s.sqrt())
        }
    }

    /// Entrywise right multiplication by a dual number.
    pub fn scale_dual(&self, a: DualNumber) -> Self {
        Self(self.0.iter().map(|x| x.scale_dual(a)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x.scale(s)).collect())
    }

    /// Entrywise right multiplication `x z`.
    pub fn mul_right(&self, z: &DualQuaternion) -> Self {
        Self(self.0.iter().map(|x| *x * *z).collect())
    }

    /// Inner product `x* y = Σ x_i* y_i`.
    pub fn inner(&self, y: &DQVector) -> Result<DualQuaternion> {
        check_len(self.len(), y.len())?;
        Ok(self.0.iter().zip(&y.0).map(|(a, b)| a.conj() * *b).sum())
    }

    pub fn sub(&self, y: &DQVector) -> Result<DQVector> {
        check_len(self.len(), y.len())?;
        Ok(Self(self.0.iter().zip(&y.0).map(|(a, b)| *a - *b).collect()))
    }

    pub fn add(&self, y: &DQVector) -> Result<DQVector> {
        check_len(self.len(), y.len())?;
        Ok(Self(self.0.iter().zip(&y.0).map(|(a, b)| *a + *b).collect()))
    }
}

impl Index<usize> for DQVector {
    type Output = DualQuaternion;
    fn index(&self, i: usize) -> &DualQuaternion {
        &self.0[i]
    }
}

impl IndexMut<usize> for DQVector {
    fn index_mut(&mut self, i: usize) -> &mut DualQuaternion {
        &mut self.0[i]
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `vec_norm2`
pub fn vec_norm2(x: &DQVector) -> DualNumber {
    x.norm2()
}

/// `vec_scale_dual`
pub fn vec_scale_dual(x: &DQVector, a: DualNumber) -> DQVector {
    x.scale_dual(a)
}

/// `inner`
pub fn inner(x: &DQVector, y: &DQVector) -> Result<DualQuaternion> {
    x.inner(y)
}

/// Dense `n × n` Hermitian matrix over dual quaternions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianDQMatrix {
    n: usize,
    entries: Vec<DualQuaternion>,
}

impl HermitianDQMatrix {
    pub fn identity(n: usize) -> Self {
        let mut m = Self { n, entries: vec![DualQuaternion::ZERO; n * n] };
        for i in 0..n {
            m.entries[i * n + i] = DualQuaternion::ONE;
        }
        m
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![DualQuaternion::ZERO; n * n] }
    }

    /// Builds from the diagonal and the strict upper triangle; the lower
    /// triangle is filled by conjugation. Diagonal entries keep only their
    /// scalar parts so they are exactly self-conjugate.
    pub fn from_upper<F>(n: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> DualQuaternion,
    {
        let mut m = Self::zeros(n);
        for i in 0..n {
            let d = f(i, i).scalar_part();
            m.entries[i * n + i] = DualQuaternion::from_dual(d);
            for j in (i + 1)..n {
                let c = f(i, j);
                m.entries[i * n + j] = c;
                m.entries[j * n + i] = c.conj();
            }
        }
        m
    }

    /// Validates a full dense matrix for Hermitian symmetry.
    pub fn from_dense(n: usize, entries: Vec<DualQuaternion>) -> Result<Self> {
        check_len(n * n, entries.len())?;
        let m = Self { n, entries };
        if !m.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Domain("matrix is not Hermitian"));
        }
        Ok(m)
    }

    /// Rank-one `x xᴴ`.
    pub fn outer(x: &DQVector) -> Self {
        let n = x.len();
        Self::from_upper(n, |i, j| x[i] * x[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> DualQuaternion {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[DualQuaternion] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            let d = self.get(i, i);
            d.st.v.norm() <= tol
                && d.du.v.norm() <= tol
                && ((i + 1)..n).all(|j| self.get(j, i).approx_eq(&self.get(i, j).conj(), tol))
        })
    }

    /// `self − other`, still Hermitian.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a - *b).collect(),
        })
    }

    /// `(Cx)_i = Σ_j C_ij x_j`.
    pub fn matvec(&self, x: &DQVector) -> Result<DQVector> {
        check_len(self.n, x.len())?;
        let xs = x.as_slice();
        let out = (0..self.n)
            .map(|i| {
                let mut acc = DualQuaternion::ZERO;
                for (c, xj) in self.row(i).iter().zip(xs) {
                    if !c.is_zero() {
                        acc += *c * *xj;
                    }
                }
                acc
            })
            .collect();
        Ok(DQVector::new(out))
    }

    /// Hermitian quadratic form `x* C x` as a dual number.
    pub fn quadratic_form(&self, x: &DQVector) -> Result<DualNumber> {
        Ok(x.inner(&self.matvec(x)?)?.scalar_part())
    }
}

/// `matvec`
pub fn matvec(c: &HermitianDQMatrix, x: &DQVector) -> Result<DQVector> {
    c.matvec(x)
}

/// Dominant right eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: DualNumber,
    /// Eigenvector scaled so that `‖v‖₂² = n`.
    pub vector: DQVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Componentwise projection onto UDQⁿ.
///
/// Nonzero entries are normalized. A zero entry is replaced by the
/// normalization of `e* y`, where `e` is the all-ones vector, or the first
/// standard basis vector with `e* y ≠ 0` if that vanishes. `y = 0` maps to `1ⁿ`.
pub fn project_udq(y: &DQVector) -> DQVector {
    project_udq_counted(y).0
}

/// [`project_udq`] plus the number of entries that took the zero-entry branch.
pub fn project_udq_counted(y: &DQVector) -> (DQVector, usize) {
    let n = y.len();
    let mut fallback: Option<Option<UnitDualQuaternion>> = None;
    let mut degenerate = 0;
    let out = y
        .iter()
        .map(|yi| match yi.normalize() {
            Ok(u) => u.get(),
            Err(_) => {
                degenerate += 1;
                let f = *fallback.get_or_insert_with(|| zero_entry_fill(y));
                f.map_or(DualQuaternion::ONE, |u| u.get())
            }
        })
        .collect();
    if degenerate == n {
        return (DQVector::ones(n), degenerate);
    }
    (DQVector::new(out), degenerate)
}

fn zero_entry_fill(y: &DQVector) -> Option<UnitDualQuaternion> {
    let total: DualQuaternion = y.iter().copied().sum();
    if let Ok(u) = total.normalize() {
        return Some(u);
    }
    // e = k-th basis vector gives e* y = y_k
    y.iter().find_map(|yi| yi.normalize().ok())
}

/// Dominant eigenpair of a Hermitian matrix via normalized power iteration.
///
/// Iterates `y = C w`, `w = y ‖y‖₂⁻¹` until the Rayleigh residual
/// `‖C w − w λ‖₂,st / |λ_st|` (with `λ = w* C w`) drops below `residual_tol`.
pub fn power_iteration(
    c: &HermitianDQMatrix,
    w0: &DQVector,
    residual_tol: f64,
    max_iters: usize,
) -> Result<EigenPair> {
    check_len(c.dim(), w0.len())?;
    power_iteration_with(c.dim(), |w| c.matvec(w), w0, residual_tol, max_iters)
}

pub(crate) fn power_iteration_with<F>(
    n: usize,
    apply: F,
    w0: &DQVector,
    residual_tol: f64,
    max_iters: usize,
) -> Result<EigenPair>
where
    F: Fn(&DQVector) -> Result<DQVector>,
{
    let mut w = normalize_vec(w0, 0)?;
    let mut cw = apply(&w)?;
    let sqrt_n = (n as f64).sqrt();
    let mut best: Option<(f64, DualNumber, DQVector)> = None;

    for k in 0..=max_iters {
        let lambda = w.inner(&cw)?.scalar_part();
        let residual = rayleigh_residual(&w, &cw, lambda)?;
        if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
            best = Some((residual, lambda, w.clone()));
        }
        if residual < residual_tol {
            return Ok(EigenPair { value: lambda, vector: w.scale(sqrt_n), iterations: k, residual });
        }
        if k == max_iters {
            break;
        }
        w = normalize_vec(&cw, k + 1)?;
        cw = apply(&w)?;
    }

    let (residual, value, w) = best.expect("at least one iterate");
    Err(Error::MaxItersExceeded(Box::new(EigenPair {
        value,
        vector: w.scale(sqrt_n),
        iterations: max_iters,
        residual,
    })))
}

fn normalize_vec(y: &DQVector, step: usize) -> Result<DQVector> {
    let norm = y.norm2();
    if !norm.is_appreciable() {
        return Err(Error::NonAppreciableNorm(step));
    }
    Ok(y.scale_dual(norm.inverse()?))
}

fn rayleigh_residual(w: &DQVector, cw: &DQVector, lambda: DualNumber) -> Result<f64> {
    let r = cw.sub(&w.scale_dual(lambda))?;
    let denom = lambda.st.abs();
    let num = r.norm2().st;
    if denom == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / denom)
}

/// Operator norm of a Hermitian matrix: the magnitude of its dominant eigenvalue.
///
/// Runs the power iteration on `M²`, which is positive semidefinite, so that
/// eigenvalues of opposite sign and similar magnitude cannot stall it, then
/// takes the dual square root.
pub fn hermitian_opnorm(m: &HermitianDQMatrix, w0: &DQVector, residual_tol: f64, max_iters: usize) -> Result<DualNumber> {
    check_len(m.dim(), w0.len())?;
    if m.entries.iter().all(|e| e.is_zero()) {
        return Ok(DualNumber::ZERO);
    }
    let pair = power_iteration_with(m.dim(), |w| m.matvec(&m.matvec(w)?), w0, residual_tol, max_iters)?;
    pair.value.abs().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::{pose_to_dq, Pose};
    use crate::quat::Vec3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_udq_vec(n: usize, rng: &mut ChaCha8Rng) -> DQVector {
        DQVector::new(
            DQVector::random_gaussian(n, rng)
                .iter()
                .map(|x| x.normalize().unwrap().get())
                .collect(),
        )
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianDQMatrix {
        let g = DQVector::random_gaussian(n * n, rng);
        HermitianDQMatrix::from_upper(n, |i, j| g[i * n + j])
    }

    #[test]
    fn matvec_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DQVector::random_gaussian(5, &mut rng);
        assert_eq!(HermitianDQMatrix::identity(5).matvec(&x).unwrap(), x);

        let xhat = random_udq_vec(6, &mut rng);
        let c = HermitianDQMatrix::outer(&xhat);
        let y = c.matvec(&xhat).unwrap();
        for i in 0..6 {
            assert!(y[i].approx_eq(&xhat[i].scale(6.0), 1e-12));
        }
        assert!(matches!(
            c.matvec(&DQVector::ones(3)),
            Err(Error::DimensionMismatch { expected: 6, got: 3 })
        ));
    }

    #[test]
    fn matvec_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let c = random_hermitian(5, &mut rng);
            let u = DQVector::random_gaussian(5, &mut rng);
            let v = DQVector::random_gaussian(5, &mut rng);
            let lhs = u.inner(&c.matvec(&v).unwrap()).unwrap();
            let rhs = c.matvec(&u).unwrap().inner(&v).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-10));
        }
    }

    #[test]
    fn norm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_udq_vec(7, &mut rng);
        assert!(x.norm2().approx_eq(&DualNumber::new(7f64.sqrt(), 0.0), 1e-12));
        assert_eq!(DQVector::zeros(4).norm2(), DualNumber::ZERO);
        let inf = DQVector::new(vec![DualQuaternion::new(Quaternion::ZERO, Quaternion::J); 9]);
        assert_eq!(inf.norm2(), DualNumber::new(0.0, 3.0));
    }

    #[test]
    fn scale_dual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DQVector::random_gaussian(5, &mut rng);
        assert_eq!(x.scale_dual(DualNumber::ONE), x);
        let unit = x.scale_dual(x.norm2().inverse().unwrap());
        assert!(unit.norm2().approx_eq(&DualNumber::ONE, 1e-12));
        assert!(x.scale_dual(DualNumber::ZERO).iter().all(|e| e.is_zero()));
    }

    #[test]
    fn inner_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_udq_vec(8, &mut rng);
        assert!(x.inner(&x).unwrap().approx_eq(&DualQuaternion::from_dual(DualNumber::real(8.0)), 1e-12));
        let a = DQVector::random_gaussian(8, &mut rng);
        let b = DQVector::random_gaussian(8, &mut rng);
        assert!(a.inner(&b).unwrap().approx_eq(&b.inner(&a).unwrap().conj(), 1e-12));
        for _ in 0..200 {
            let a = DQVector::random_gaussian(4, &mut rng);
            let b = DQVector::random_gaussian(4, &mut rng);
            let lhs = a.inner(&b).unwrap().magnitude();
            let rhs = a.norm2() * b.norm2();
            assert!(lhs.total_cmp(&rhs).is_le(), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_udq_vec(5, &mut rng);
        let px = project_udq(&x);
        for i in 0..5 {
            assert!(px[i].approx_eq(&x[i], 1e-12));
        }
        assert_eq!(project_udq(&DQVector::zeros(4)), DQVector::ones(4));
    }

    #[test]
    fn projection_zero_entry_uses_sum_then_basis() {
        let a = pose_to_dq(&Pose::new(Quaternion::new(0.0, 1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0))).unwrap().get();
        let y = DQVector::new(vec![a, DualQuaternion::ZERO, a.scale(2.0)]);
        let (p, deg) = project_udq_counted(&y);
        assert_eq!(deg, 1);
        assert!(p[1].approx_eq(&a, 1e-12));

        // Sum cancels: fall back to the first nonzero entry.
        let y = DQVector::new(vec![a, DualQuaternion::ZERO, -a]);
        let p = project_udq(&y);
        assert!(p[1].approx_eq(&a, 1e-12));
        assert!(p[2].approx_eq(&-a, 1e-12));
    }

    #[test]
    fn power_iteration_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xhat = random_udq_vec(10, &mut rng);
        let c = HermitianDQMatrix::outer(&xhat);
        let w0 = DQVector::random_gaussian(10, &mut rng);
        let pair = power_iteration(&c, &w0, 1e-12, 100).unwrap();
        assert!(pair.value.approx_eq(&DualNumber::real(10.0), 1e-9));
        assert!((pair.vector.norm2().st - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_identity_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w0 = random_udq_vec(6, &mut rng);
        let pair = power_iteration(&HermitianDQMatrix::identity(6), &w0, 1e-10, 10).unwrap();
        assert_eq!(pair.iterations, 0);
        assert!(pair.value.approx_eq(&DualNumber::ONE, 1e-12));
    }

    #[test]
    fn power_iteration_rejects_infinitesimal_start() {
        let c = HermitianDQMatrix::identity(3);
        let w0 = DQVector::new(vec![DualQuaternion::new(Quaternion::ZERO, Quaternion::ONE); 3]);
        assert!(matches!(power_iteration(&c, &w0, 1e-8, 10), Err(Error::NonAppreciableNorm(0))));
    }

    #[test]
    fn power_iteration_reports_max_iters_with_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_hermitian(8, &mut rng);
        let w0 = DQVector::random_gaussian(8, &mut rng);
        match power_iteration(&c, &w0, 1e-300, 3) {
            Err(Error::MaxItersExceeded(best)) => {
                assert_eq!(best.vector.len(), 8);
                assert!(best.residual.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residual_nonincreasing_after_burn_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = 12;
            let xhat = random_udq_vec(n, &mut rng);
            let noise = random_hermitian(n, &mut rng);
            let signal = HermitianDQMatrix::outer(&xhat);
            let c = HermitianDQMatrix::from_upper(n, |i, j| {
                signal.get(i, j) + noise.get(i, j).scale(0.1)
                    + if i == j { DualQuaternion::from_dual(DualNumber::real(2.0)) } else { DualQuaternion::ZERO }
            });
            let mut w = DQVector::random_gaussian(n, &mut rng);
            let mut residuals = Vec::new();
            for _ in 0..30 {
                w = normalize_vec(&w, 0).unwrap();
                let cw = c.matvec(&w).unwrap();
                let lambda = w.inner(&cw).unwrap().scalar_part();
                residuals.push(rayleigh_residual(&w, &cw, lambda).unwrap());
                w = cw;
            }
            for k in 5..residuals.len() - 1 {
                assert!(
                    residuals[k + 1] <= residuals[k] * (1.0 + 1e-9) + 1e-14,
                    "k={k}: {} > {}",
                    residuals[k + 1],
                    residuals[k]
                );
            }
        }
    }

    #[test]
    fn opnorm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w0 = DQVector::random_gaussian(5, &mut rng);
        assert_eq!(hermitian_opnorm(&HermitianDQMatrix::zeros(5), &w0, 1e-10, 100).unwrap(), DualNumber::ZERO);

        let c = DualNumber::new(-3.0, 0.5);
        let m = HermitianDQMatrix::from_upper(5, |i, j| {
            if i == j { DualQuaternion::from_dual(c) } else { DualQuaternion::ZERO }
        });
        assert!(hermitian_opnorm(&m, &w0, 1e-12, 100).unwrap().approx_eq(&c.abs(), 1e-10));

        let xhat = random_udq_vec(5, &mut rng);
        let r1 = HermitianDQMatrix::outer(&xhat);
        assert!(hermitian_opnorm(&r1, &w0, 1e-12, 100).unwrap().approx_eq(&DualNumber::real(5.0), 1e-9));
    }
}
