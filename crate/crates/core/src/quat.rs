//! Hamilton quaternions and the rotation action on 3-vectors.
//!
//! Storage order is `(w, x, y, z)`: scalar part first.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|q| − 1` (and `|axis| − 1`) accepted by rotation routines.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(&self, o: &Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn distance(&self, o: &Vec3) -> f64 {
        (*self - *o).norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// Quaternion `w + v` with scalar part `w` and vector part `v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub v: Vec3,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { w: 0.0, v: Vec3::ZERO };
    pub const ONE: Quaternion = Quaternion { w: 1.0, v: Vec3::ZERO };
    pub const I: Quaternion = Quaternion { w: 0.0, v: Vec3::new(1.0, 0.0, 0.0) };
    pub const J: Quaternion = Quaternion { w: 0.0, v: Vec3::new(0.0, 1.0, 0.0) };
    pub const K: Quaternion = Quaternion { w: 0.0, v: Vec3::new(0.0, 0.0, 1.0) };

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, v: Vec3::new(x, y, z) }
    }

    #[inline]
    pub const fn from_parts(w: f64, v: Vec3) -> Self {
        Self { w, v }
    }

    /// Pure quaternion `0 + v`.
    #[inline]
    pub const fn pure(v: Vec3) -> Self {
        Self { w: 0.0, v }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.v.x, self.v.y, self.v.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self { w: self.w, v: -self.v }
    }

    /// Euclidean inner product in R⁴; equals `sc(p q*) = sc(p* q)`.
    #[inline]
    pub fn dot(&self, o: &Quaternion) -> f64 {
        self.w * o.w + self.v.dot(&o.v)
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self { w: self.w * s, v: self.v * s }
    }

    pub fn is_zero(&self) -> bool {
        self.w == 0.0 && self.v.x == 0.0 && self.v.y == 0.0 && self.v.z == 0.0
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// `q⁻¹ = q* / |q|²`.
    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_squared();
        if n2 == 0.0 {
            return Err(Error::ZeroQuaternion);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroQuaternion);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Scalar part `sc(q) = (q + q*)/2`.
    #[inline]
    pub fn sc(&self) -> f64 {
        self.w
    }

    /// Imaginary part as a pure quaternion.
    #[inline]
    pub fn im(&self) -> Self {
        Self::pure(self.v)
    }

    /// Rotation by `theta` radians about the unit `axis`: `cos θ/2 + axis·sin θ/2`.
    pub fn from_axis_angle(axis: Vec3, theta: f64) -> Result<Self> {
        let n = axis.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitAxis(n));
        }
        let (s, c) = (0.5 * theta).sin_cos();
        Ok(Self::from_parts(c, axis * s))
    }

    /// Inverse of [`Quaternion::from_axis_angle`] with `θ ∈ [0, 2π)` measured via `atan2`.
    ///
    /// Returns the x-axis for the identity rotation.
    pub fn to_axis_angle(&self) -> (Vec3, f64) {
        let s = self.v.norm();
        if s == 0.0 {
            return (Vec3::new(1.0, 0.0, 0.0), 0.0);
        }
        let theta = 2.0 * s.atan2(self.w);
        (self.v * (1.0 / s), theta)
    }

    /// `ψ_q(v) = q v q*` with `v` embedded as a pure quaternion.
    pub fn rotate_vector(&self, v: Vec3) -> Result<Vec3> {
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitQuaternion(n));
        }
        Ok(self.rotate_unchecked(v))
    }

    #[inline]
    pub(crate) fn rotate_unchecked(&self, v: Vec3) -> Vec3 {
        // q v q* expanded: v + 2w (u × v) + 2 u × (u × v)
        let u = self.v;
        let t = u.cross(&v) * 2.0;
        v + t * self.w + u.cross(&t)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.w, self.v.x, self.v.y, self.v.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    /// `pq = p₀q₀ − p·q + p₀q + q₀p + p×q`.
    #[inline]
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion {
            w: p.w * q.w - p.v.dot(&q.v),
            v: q.v * p.w + p.v * q.w + p.v.cross(&q.v),
        }
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion { w: self.w + o.w, v: self.v + o.v }
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, o: Quaternion) {
        self.w += o.w;
        self.v += o.v;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion { w: self.w - o.w, v: self.v - o.v }
    }
}

impl SubAssign for Quaternion {
    #[inline]
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Quaternion {
        Quaternion { w: -self.w, v: -self.v }
    }
}
