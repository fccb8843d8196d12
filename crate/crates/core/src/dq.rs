//! Dual quaternions, the unit set UDQ and the SE(3) correspondence.
//!
//! A rigid motion `(q, t)` (rotate by `q`, then translate by `t`) maps to the
//! unit dual quaternion `x = (1 + ε t/2) q`, i.e. `x_st = q` and
//! `x_du = t q / 2`. The map is a 2-to-1 homomorphism: `x` and `−x` describe
//! the same motion, and `x y` is the motion "apply `y`, then `x`".

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::dualnum::DualNumber;
use crate::error::{Error, Result};
use crate::quat::{Quaternion, Vec3, UNIT_TOL};

/// Tolerance on the unit condition (`|st| − 1` and `sc(st du*)`).
pub const UDQ_TOL: f64 = 1e-9;

/// Constructors re-normalize inputs whose unit defect is below this bound.
pub const UDQ_REPAIR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualQuaternion {
    pub st: Quaternion,
    pub du: Quaternion,
}

impl DualQuaternion {
    pub const ZERO: DualQuaternion = DualQuaternion { st: Quaternion::ZERO, du: Quaternion::ZERO };
    pub const ONE: DualQuaternion = DualQuaternion { st: Quaternion::ONE, du: Quaternion::ZERO };

    #[inline]
    pub const fn new(st: Quaternion, du: Quaternion) -> Self {
        Self { st, du }
    }

    /// Embeds a dual number as a self-conjugate dual quaternion.
    #[inline]
    pub fn from_dual(a: DualNumber) -> Self {
        Self::new(Quaternion::new(a.st, 0.0, 0.0, 0.0), Quaternion::new(a.du, 0.0, 0.0, 0.0))
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.st.conj(), self.du.conj())
    }

    pub fn is_zero(&self) -> bool {
        self.st.is_zero() && self.du.is_zero()
    }

    pub fn is_appreciable(&self) -> bool {
        !self.st.is_zero()
    }

    /// Scalar parts of both components, read as a dual number.
    #[inline]
    pub fn scalar_part(&self) -> DualNumber {
        DualNumber::new(self.st.w, self.du.w)
    }

    /// Right multiplication by a dual number (dual numbers commute with everything).
    #[inline]
    pub fn scale_dual(self, a: DualNumber) -> Self {
        Self::new(self.st * a.st, self.du * a.st + self.st * a.du)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.st * s, self.du * s)
    }

    /// `|q|² = q q*` read as a dual number: `|q_st|² + 2⟨q_st, q_du⟩ ε`.
    #[inline]
    pub fn magnitude_squared(&self) -> DualNumber {
        DualNumber::new(self.st.norm_squared(), 2.0 * self.st.dot(&self.du))
    }

    /// Dual-number magnitude.
    ///
    /// `|q_st| + sc(q_st q_du* + q_du q_st*)/(2|q_st|) ε` for appreciable `q`,
    /// otherwise `|q_du| ε`.
    pub fn magnitude(&self) -> DualNumber {
        let n = self.st.norm();
        if n == 0.0 {
            DualNumber::new(0.0, self.du.norm())
        } else {
            DualNumber::new(n, self.st.dot(&self.du) / n)
        }
    }

    /// `q⁻¹ = q_st⁻¹ − q_st⁻¹ q_du q_st⁻¹ ε`.
    pub fn inverse(&self) -> Result<Self> {
        if self.st.is_zero() {
            return Err(Error::NonAppreciable("dual quaternion inverse"));
        }
        let inv = self.st.inverse()?;
        Ok(Self::new(inv, -(inv * self.du * inv)))
    }

    /// `(|st| − 1, sc(st du*))`.
    pub fn unit_defect(&self) -> (f64, f64) {
        (self.st.norm() - 1.0, self.st.dot(&self.du))
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        let (a, b) = self.unit_defect();
        a.abs() <= tol && b.abs() <= tol
    }

    /// Normalization onto UDQ; coincides with the metric projection.
    ///
    /// For `x_st ≠ 0`, with `n = |x_st|` and `u_st = x_st / n`:
    /// `u_du = x_du / n − u_st · sc(u_st* x_du / n)`.
    /// For `x_st = 0` the standard part becomes `x_du / |x_du|` and the dual part
    /// is set to zero, one of the admissible choices.
    pub fn normalize(&self) -> Result<UnitDualQuaternion> {
        let n = self.st.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            let u_st = self.st * inv;
            let d = self.du * inv;
            let u_du = d - u_st * u_st.dot(&d);
            Ok(UnitDualQuaternion(Self::new(u_st, u_du)))
        } else {
            let m = self.du.norm();
            if m == 0.0 {
                return Err(Error::ZeroInput);
            }
            Ok(UnitDualQuaternion(Self::new(self.du * (1.0 / m), Quaternion::ZERO)))
        }
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        let d = *self - *o;
        d.st.to_array().iter().chain(d.du.to_array().iter()).all(|c| c.abs() <= tol)
    }
}

impl fmt::Display for DualQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.st, self.du)
    }
}

impl Mul for DualQuaternion {
    type Output = Self;
    /// `pq = p_st q_st + (p_st q_du + p_du q_st) ε`.
    #[inline]
    fn mul(self, q: Self) -> Self {
        Self::new(self.st * q.st, self.st * q.du + self.du * q.st)
    }
}

impl Add for DualQuaternion {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.st + o.st, self.du + o.du)
    }
}

impl AddAssign for DualQuaternion {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.st += o.st;
        self.du += o.du;
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.st - o.st, self.du - o.du)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.st, -self.du)
    }
}

impl std::iter::Sum for DualQuaternion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// A dual quaternion satisfying `|st| = 1` and `sc(st du*) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DualQuaternion", into = "DualQuaternion")]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    pub const IDENTITY: UnitDualQuaternion = UnitDualQuaternion(DualQuaternion::ONE);

    /// Accepts `x` if it is unit within [`UDQ_TOL`], re-normalizes if within
    /// [`UDQ_REPAIR_TOL`], and rejects it otherwise.
    pub fn new(x: DualQuaternion) -> Result<Self> {
        let (a, b) = x.unit_defect();
        if a.abs() <= UDQ_TOL && b.abs() <= UDQ_TOL {
            Ok(Self(x))
        } else if a.abs() <= UDQ_REPAIR_TOL && b.abs() <= UDQ_REPAIR_TOL {
            x.normalize()
        } else {
            Err(Error::NotUnit { norm_defect: a, orth_defect: b })
        }
    }

    /// Wraps `x` without checking; callers guarantee the unit condition.
    #[inline]
    pub(crate) const fn new_unchecked(x: DualQuaternion) -> Self {
        Self(x)
    }

    #[inline]
    pub fn get(&self) -> DualQuaternion {
        self.0
    }

    #[inline]
    pub fn st(&self) -> Quaternion {
        self.0.st
    }

    #[inline]
    pub fn du(&self) -> Quaternion {
        self.0.du
    }

    /// Inverse, which for unit elements is the conjugate.
    #[inline]
    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    /// Rigid motion `x = (1 + ε t/2) q`.
    pub fn from_pose(p: &Pose) -> Result<Self> {
        let n = p.rotation.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitRotation(n));
        }
        let du = Quaternion::pure(p.translation) * p.rotation * 0.5;
        Ok(Self(DualQuaternion::new(p.rotation, du)))
    }

    /// Recovers `(q, t)` with `t` the vector part of `2 du st*`.
    pub fn to_pose(&self) -> Pose {
        let t = self.0.du * self.0.st.conj() * 2.0;
        Pose { rotation: self.0.st, translation: t.v }
    }

    /// Applies the rigid motion to a point: `R p + t`.
    pub fn transform_point(&self, point: Vec3) -> Vec3 {
        let pose = self.to_pose();
        pose.rotation.rotate_unchecked(point) + pose.translation
    }
}

impl TryFrom<DualQuaternion> for UnitDualQuaternion {
    type Error = Error;
    fn try_from(x: DualQuaternion) -> Result<Self> {
        Self::new(x)
    }
}

impl From<UnitDualQuaternion> for DualQuaternion {
    fn from(u: UnitDualQuaternion) -> Self {
        u.0
    }
}

impl Mul for UnitDualQuaternion {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self(self.0 * o.0)
    }
}

impl Neg for UnitDualQuaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Rigid motion: rotate by the unit quaternion, then translate (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: Quaternion::ONE, translation: Vec3::ZERO };

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation.rotate_unchecked(other.translation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let qc = self.rotation.conj();
        Pose { rotation: qc, translation: -qc.rotate_unchecked(self.translation) }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate_unchecked(p) + self.translation
    }
}

/// `pose_to_dq`: `(1 + ε t/2) q`.
pub fn pose_to_dq(p: &Pose) -> Result<UnitDualQuaternion> {
    UnitDualQuaternion::from_pose(p)
}

/// `dq_to_pose`: validates the unit condition, then extracts `(q, t)`.
pub fn dq_to_pose(x: &DualQuaternion) -> Result<Pose> {
    Ok(UnitDualQuaternion::new(*x)?.to_pose())
}

/// Point action of a unit dual quaternion.
pub fn se3_action(x: &DualQuaternion, point: Vec3) -> Result<Vec3> {
    Ok(UnitDualQuaternion::new(*x)?.transform_point(point))
}
