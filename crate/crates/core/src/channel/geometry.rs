use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::C64;

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Axis-aligned box that blocks every path segment crossing it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub min: Vec3,
    pub max: Vec3,
}

impl Occluder {
    /// Slab test for the closed segment `a → b`.
    pub fn intersects_segment(&self, a: Vec3, b: Vec3) -> bool {
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for axis in 0..3 {
            let d = b[axis] - a[axis];
            if d.abs() < 1e-15 {
                if a[axis] < self.min[axis] || a[axis] > self.max[axis] {
                    return false;
                }
                continue;
            }
            let mut ta = (self.min[axis] - a[axis]) / d;
            let mut tb = (self.max[axis] - a[axis]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Shoebox room `[0, width] × [0, depth] × [0, height]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomSpec {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    /// Complex amplitude applied once per wall/floor/ceiling bounce.
    pub wall_reflection_coeff: C64,
    pub max_reflection_order: u32,
    pub occluders: Vec<Occluder>,
}

impl RoomSpec {
    pub fn new(
        width: f64,
        depth: f64,
        height: f64,
        wall_reflection_coeff: C64,
        max_reflection_order: u32,
    ) -> Result<Self> {
        if !(width > 0.0 && depth > 0.0 && height > 0.0) {
            return Err(domain(format!(
                "room dimensions must be positive, got {width} x {depth} x {height}"
            )));
        }
        if wall_reflection_coeff.norm() > 1.0 + 1e-12 {
            return Err(domain(format!(
                "|reflection coefficient| must not exceed 1, got {}",
                wall_reflection_coeff.norm()
            )));
        }
        Ok(Self {
            width,
            depth,
            height,
            wall_reflection_coeff,
            max_reflection_order,
            occluders: Vec::new(),
        })
    }

    pub fn with_occluder(mut self, occluder: Occluder) -> Self {
        self.occluders.push(occluder);
        self
    }

    pub fn dims(&self) -> Vec3 {
        [self.width, self.depth, self.height]
    }

    /// Strict interior test; points on a wall would make a reflection
    /// coincide with the direct path.
    pub fn contains(&self, p: Vec3) -> bool {
        let d = self.dims();
        (0..3).all(|k| p[k] > 0.0 && p[k] < d[k])
    }
}

/// Position and orientation of a device's uniform linear array.
#[derive(Clone, Debug, PartialEq)]
pub struct DevicePose {
    pub position: Vec3,
    pub array_axis: Vec3,
    pub num_antennas: usize,
    /// Inter-element spacing in carrier wavelengths.
    pub element_spacing: f64,
}

impl DevicePose {
    /// Builds a pose with half-wavelength spacing. The axis is normalised.
    pub fn new(position: Vec3, array_axis: Vec3, num_antennas: usize) -> Result<Self> {
        Self::with_spacing(position, array_axis, num_antennas, 0.5)
    }

    pub fn with_spacing(
        position: Vec3,
        array_axis: Vec3,
        num_antennas: usize,
        element_spacing: f64,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(domain("a device needs at least one antenna"));
        }
        let len = norm(array_axis);
        if !(len > 1e-12) || !len.is_finite() {
            return Err(domain("array axis must be a nonzero vector"));
        }
        if !(element_spacing > 0.0) {
            return Err(domain("element spacing must be positive"));
        }
        Ok(Self {
            position,
            array_axis: [array_axis[0] / len, array_axis[1] / len, array_axis[2] / len],
            num_antennas,
            element_spacing,
        })
    }

    /// Element positions, centred on `position`, for the given wavelength.
    pub fn element_positions(&self, wavelength: f64) -> Vec<Vec3> {
        let n = self.num_antennas;
        let d = self.element_spacing * wavelength;
        (0..n)
            .map(|i| {
                let s = (i as f64 - (n as f64 - 1.0) / 2.0) * d;
                [
                    self.position[0] + s * self.array_axis[0],
                    self.position[1] + s * self.array_axis[1],
                    self.position[2] + s * self.array_axis[2],
                ]
            })
            .collect()
    }

    /// Direction cosine `u = axis · k̂` toward `target`, i.e. `sin θ` with
    /// `θ` measured from broadside.
    pub fn direction_cosine(&self, target: Vec3) -> f64 {
        let d = sub(target, self.position);
        (dot(self.array_axis, d) / norm(d)).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_validation() {
        assert!(RoomSpec::new(1.0, 1.0, 0.0, C64::new(0.3, 0.0), 1).is_err());
        assert!(RoomSpec::new(1.0, 1.0, 1.0, C64::new(1.5, 0.0), 1).is_err());
        let room = RoomSpec::new(10.0, 10.0, 3.0, C64::new(-0.3, 0.0), 2).unwrap();
        assert!(room.contains([1.0, 1.0, 1.0]));
        assert!(!room.contains([0.0, 1.0, 1.0]));
    }

    #[test]
    fn element_positions_are_centred() {
        let pose = DevicePose::new([1.0, 2.0, 1.5], [0.0, 2.0, 0.0], 4).unwrap();
        let pos = pose.element_positions(0.01);
        assert_eq!(pos.len(), 4);
        let mean_y: f64 = pos.iter().map(|p| p[1]).sum::<f64>() / 4.0;
        assert!((mean_y - 2.0).abs() < 1e-15);
        assert!((pos[1][1] - pos[0][1] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn occluder_slab_test() {
        let b = Occluder { min: [1.0, 1.0, 0.0], max: [2.0, 2.0, 3.0] };
        assert!(b.intersects_segment([0.0, 1.5, 1.0], [3.0, 1.5, 1.0]));
        assert!(!b.intersects_segment([0.0, 2.5, 1.0], [3.0, 2.5, 1.0]));
        assert!(!b.intersects_segment([0.0, 1.5, 1.0], [0.9, 1.5, 1.0]));
    }
}
