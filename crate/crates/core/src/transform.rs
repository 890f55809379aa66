use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
#[error("rotation quaternion must be finite and non-zero")]
pub struct InvalidRotation;

/// Rotation followed by translation. Serialized as
/// `{"rotation": [w, x, y, z], "translation": [x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform(pub Isometry3<f64>);

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self(Isometry3::identity())
    }

    /// Normalizes `wxyz` so the stored rotation is unit within rounding.
    pub fn new(wxyz: [f64; 4], translation: Vec3) -> Result<Self, InvalidRotation> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let n = q.norm();
        if !(n.is_finite() && n > 0.0) || !translation.iter().all(|c| c.is_finite()) {
            return Err(InvalidRotation);
        }
        // Already-unit input is kept bit-exact so serialized poses round-trip.
        let rotation = if (n - 1.0).abs() < 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::new_normalize(q)
        };
        Ok(Self(Isometry3::from_parts(Translation3::from(translation), rotation)))
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self(Isometry3::translation(t.x, t.y, t.z))
    }

    /// Rotation about +z by `yaw` radians, then translation.
    pub fn from_yaw(yaw: f64, t: Vec3) -> Self {
        Self(Isometry3::new(t, Vec3::z() * yaw))
    }

    /// Rotation given as axis·angle (radians), then translation.
    pub fn from_axis_angle(axis_angle: Vec3, t: Vec3) -> Self {
        Self(Isometry3::new(t, axis_angle))
    }

    pub fn translation(&self) -> Vec3 {
        self.0.translation.vector
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    /// `[w, x, y, z]`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.0.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    #[inline]
    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.0.rotation * p + self.0.translation.vector
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.0.rotation * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform(self.0 * other.0)
    }

    pub fn inverse(&self) -> RigidTransform {
        RigidTransform(self.0.inverse())
    }

    /// Heading about +z, extracted from the rotation.
    pub fn yaw(&self) -> f64 {
        self.0.rotation.euler_angles().2
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    #[serde(default = "identity_quat")]
    rotation: [f64; 4],
    #[serde(default)]
    translation: [f64; 3],
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let t = self.translation();
        TransformRepr {
            rotation: self.quaternion_wxyz(),
            translation: [t.x, t.y, t.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TransformRepr::deserialize(d)?;
        RigidTransform::new(r.rotation, Vec3::from(r.translation)).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_applies_right_first() {
        let a = RigidTransform::from_yaw(std::f64::consts::FRAC_PI_2, Vec3::zeros());
        let b = RigidTransform::from_translation(Vec3::x());
        let p = a.compose(&b).apply_point(&Vec3::zeros());
        assert_relative_eq!(p, Vec3::y(), epsilon = 1e-12);
    }

    #[test]
    fn quaternion_is_normalized() {
        let t = RigidTransform::new([2.0, 0.0, 0.0, 0.0], Vec3::zeros()).unwrap();
        let q = t.quaternion_wxyz();
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
        assert!(RigidTransform::new([0.0; 4], Vec3::zeros()).is_err());
    }

    #[test]
    fn json_shape() {
        let t: RigidTransform = serde_json::from_str(r#"{"translation": [1, 2, 3]}"#).unwrap();
        assert_eq!(t.translation(), Vec3::new(1.0, 2.0, 3.0));
        let back = serde_json::to_value(t).unwrap();
        assert_eq!(back["rotation"], serde_json::json!([1.0, 0.0, 0.0, 0.0]));
    }
}
