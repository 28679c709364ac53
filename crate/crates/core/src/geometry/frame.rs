//! Rigid frames anchored at the target actor.
//!
//! The frame's x-axis follows the tangent of the lane nearest to the actor.
//! Only a rotation about the actor's position is applied; there is no
//! arc-length projection onto the lane.

use super::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rotation by `theta` about `origin`, mapping local coordinates to city coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFrame {
    pub origin: Vec2,
    pub theta: f64,
    /// Row-major `[[cos, -sin], [sin, cos]]`.
    pub rotation: [[f64; 2]; 2],
}

/// Serialized form: origin and angle only; the matrix is rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub origin: Vec2,
    pub theta: f64,
}

impl RotationFrame {
    pub fn from_angle(origin: Vec2, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        RotationFrame {
            origin,
            theta,
            rotation: [[c, -s], [s, c]],
        }
    }

    pub fn identity() -> Self {
        Self::from_angle(Vec2::ZERO, 0.0)
    }

    /// R · v
    #[inline]
    pub fn rotate(&self, v: Vec2) -> Vec2 {
        let r = &self.rotation;
        Vec2::new(r[0][0] * v.x + r[0][1] * v.y, r[1][0] * v.x + r[1][1] * v.y)
    }

    /// R⁻¹ · v, with R⁻¹ = Rᵀ.
    #[inline]
    pub fn unrotate(&self, v: Vec2) -> Vec2 {
        let r = &self.rotation;
        Vec2::new(r[0][0] * v.x + r[1][0] * v.y, r[0][1] * v.x + r[1][1] * v.y)
    }

    #[inline]
    pub fn point_to_local(&self, p: Vec2) -> Vec2 {
        self.unrotate(p - self.origin)
    }

    #[inline]
    pub fn point_to_city(&self, q: Vec2) -> Vec2 {
        self.rotate(q) + self.origin
    }

    pub fn record(&self) -> FrameRecord {
        FrameRecord {
            origin: self.origin,
            theta: self.theta,
        }
    }
}

impl From<FrameRecord> for RotationFrame {
    fn from(r: FrameRecord) -> Self {
        RotationFrame::from_angle(r.origin, r.theta)
    }
}

/// Builds the frame whose +x axis is `tangent`, which must be unit length within 1e-9.
pub fn frame_from_tangent(origin: Vec2, tangent: Vec2) -> Result<RotationFrame> {
    if !origin.is_finite() || !tangent.is_finite() {
        return Err(Error::Precondition("frame origin and tangent must be finite".into()));
    }
    let n = tangent.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "tangent must be a unit vector, got norm {n}"
        )));
    }
    Ok(RotationFrame::from_angle(origin, tangent.angle()))
}

/// Maps city-frame points into the frame: R⁻¹ · (p − origin).
pub fn to_local(frame: &RotationFrame, points: &[Vec2]) -> Vec<Vec2> {
    points.iter().map(|&p| frame.point_to_local(p)).collect()
}

/// Maps frame-local points back to city coordinates: R · q + origin.
pub fn to_city(frame: &RotationFrame, points: &[Vec2]) -> Vec<Vec2> {
    points.iter().map(|&q| frame.point_to_city(q)).collect()
}
