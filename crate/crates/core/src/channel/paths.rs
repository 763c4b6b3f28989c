use std::f64::consts::PI;

use ndarray::Array2;

use super::geometry::{dist, DevicePose, RoomSpec, Vec3};
use crate::error::{domain, Result};
use crate::{C64, SPEED_OF_LIGHT};

/// One propagation path between two arrays.
#[derive(Clone, Debug)]
pub struct Path {
    /// Complex gain `β_p`, including the carrier phase of the
    /// centroid-to-centroid path length.
    pub gain: C64,
    /// `τ_p^{i,j}` in seconds; rows index receive elements, columns transmit
    /// elements.
    pub delays: Array2<f64>,
    pub bounce_count: u32,
    /// Centroid-to-centroid (unfolded) path length in metres.
    pub length: f64,
}

impl Path {
    pub fn mean_delay(&self) -> f64 {
        self.delays.mean().unwrap_or(0.0)
    }

    pub fn centroid_delay(&self) -> f64 {
        self.length / SPEED_OF_LIGHT
    }
}

/// Ordered multipath description of one transmitter → receiver link.
#[derive(Clone, Debug)]
pub struct PathSet {
    /// Sorted by ascending mean delay; index 0 is the direct path unless it
    /// is blocked.
    pub paths: Vec<Path>,
    pub carrier_frequency: f64,
    pub los_present: bool,
}

impl PathSet {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Number of non-direct paths (`P` in the channel sum `p = 0..=P`).
    pub fn nlos_count(&self) -> usize {
        self.paths.len().saturating_sub(1)
    }
}

/// Image transform along one axis: `x ↦ sign·x + offset`.
#[derive(Clone, Copy, Debug)]
struct AxisImage {
    sign: f64,
    offset: f64,
    bounces: u32,
}

fn axis_images(len: f64, order: u32) -> Vec<AxisImage> {
    let order = order as i64;
    let mut out = Vec::new();
    for n in -order..=order {
        for p in 0..=1_i64 {
            let bounces = (2 * n - p).unsigned_abs() as u32;
            if bounces as i64 <= order {
                out.push(AxisImage {
                    sign: if p == 0 { 1.0 } else { -1.0 },
                    offset: 2.0 * n as f64 * len,
                    bounces,
                });
            }
        }
    }
    out
}

fn apply(images: &[AxisImage; 3], p: Vec3) -> Vec3 {
    [
        images[0].sign * p[0] + images[0].offset,
        images[1].sign * p[1] + images[1].offset,
        images[2].sign * p[2] + images[2].offset,
    ]
}

/// Folds a point of the unfolded (mirrored) space back into the room.
fn fold(p: Vec3, dims: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let r = p[k].rem_euclid(2.0 * dims[k]);
        out[k] = if r <= dims[k] { r } else { 2.0 * dims[k] - r };
    }
    out
}

/// Physical segments of the path from an image source to the receiver,
/// obtained by splitting the unfolded straight line at wall crossings.
fn folded_segments(source: Vec3, receiver: Vec3, dims: Vec3) -> Vec<(Vec3, Vec3)> {
    let mut cuts = vec![0.0, 1.0];
    for k in 0..3 {
        let (a, b) = (source[k], receiver[k]);
        if (b - a).abs() < 1e-15 {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let first = (lo / dims[k]).ceil() as i64;
        let last = (hi / dims[k]).floor() as i64;
        for j in first..=last {
            let t = (j as f64 * dims[k] - a) / (b - a);
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let at = |t: f64| -> Vec3 {
        [
            source[0] + t * (receiver[0] - source[0]),
            source[1] + t * (receiver[1] - source[1]),
            source[2] + t * (receiver[2] - source[2]),
        ]
    };
    cuts.windows(2)
        .filter(|w| w[1] - w[0] > 1e-12)
        .map(|w| {
            // Folding is affine on each piece; nudge the endpoints inward so
            // the mirror branch is picked from the piece's interior.
            let eps = 1e-9 * (w[1] - w[0]);
            (fold(at(w[0] + eps), dims), fold(at(w[1] - eps), dims))
        })
        .collect()
}

/// Image-source ray tracing between two devices.
///
/// Every image source up to `room.max_reflection_order` bounces yields one
/// path. Gains follow free-space Friis amplitude `λ / (4π d_p)` times
/// `Γ^bounces` times the carrier phase `e^{-j2π f₀ d_p / c}` evaluated on
/// the centroid path length. Per-element delays use exact distances between
/// receive elements and the mirrored transmit elements.
pub fn trace_paths(room: &RoomSpec, tx: &DevicePose, rx: &DevicePose, f0: f64) -> Result<PathSet> {
    if !(f0 > 0.0) {
        return Err(domain("carrier frequency must be positive"));
    }
    let wavelength = SPEED_OF_LIGHT / f0;
    let tx_el = tx.element_positions(wavelength);
    let rx_el = rx.element_positions(wavelength);
    for (name, elems) in [("transmitter", &tx_el), ("receiver", &rx_el)] {
        if let Some(p) = elems.iter().find(|p| !room.contains(**p)) {
            return Err(domain(format!("{name} element at {p:?} lies outside the room")));
        }
    }
    if dist(tx.position, rx.position) < 1e-9 {
        return Err(domain("transmitter and receiver are coincident"));
    }

    let dims = room.dims();
    let per_axis: Vec<Vec<AxisImage>> =
        (0..3).map(|k| axis_images(dims[k], room.max_reflection_order)).collect();

    let mut paths = Vec::new();
    let mut los_present = false;
    for ix in &per_axis[0] {
        for iy in &per_axis[1] {
            for iz in &per_axis[2] {
                let bounces = ix.bounces + iy.bounces + iz.bounces;
                if bounces > room.max_reflection_order {
                    continue;
                }
                let img = [*ix, *iy, *iz];
                let source = apply(&img, tx.position);
                let blocked = room.occluders.iter().any(|occ| {
                    folded_segments(source, rx.position, dims)
                        .iter()
                        .any(|(a, b)| occ.intersects_segment(*a, *b))
                });
                if blocked {
                    continue;
                }
                if bounces == 0 {
                    los_present = true;
                }
                let length = dist(source, rx.position);
                let images: Vec<Vec3> = tx_el.iter().map(|&p| apply(&img, p)).collect();
                let delays = Array2::from_shape_fn((rx_el.len(), tx_el.len()), |(i, j)| {
                    dist(rx_el[i], images[j]) / SPEED_OF_LIGHT
                });
                let gain = C64::from_polar(wavelength / (4.0 * PI * length), -2.0 * PI * length / wavelength)
                    * room.wall_reflection_coeff.powu(bounces);
                paths.push(Path { gain, delays, bounce_count: bounces, length });
            }
        }
    }
    paths.sort_by(|a, b| {
        a.mean_delay()
            .partial_cmp(&b.mean_delay())
            .unwrap()
            .then(a.bounce_count.cmp(&b.bounce_count))
    });
    Ok(PathSet { paths, carrier_frequency: f0, los_present })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(order: u32, gamma: f64) -> RoomSpec {
        RoomSpec::new(10.0, 8.0, 3.0, C64::new(gamma, 0.0), order).unwrap()
    }

    #[test]
    fn order_zero_gives_direct_path_only() {
        let tx = DevicePose::new([2.0, 2.0, 1.5], [0.0, 1.0, 0.0], 4).unwrap();
        let rx = DevicePose::new([6.0, 5.0, 1.2], [0.0, 1.0, 0.0], 4).unwrap();
        let ps = trace_paths(&room(0, -0.3), &tx, &rx, 100e9).unwrap();
        assert_eq!(ps.paths.len(), 1);
        assert!(ps.los_present);
        assert_eq!(ps.nlos_count(), 0);
    }

    #[test]
    fn first_order_matches_mirror_geometry() {
        let (t, r) = ([2.0, 3.0, 1.0], [7.0, 5.0, 2.0]);
        let tx = DevicePose::new(t, [1.0, 0.0, 0.0], 1).unwrap();
        let rx = DevicePose::new(r, [1.0, 0.0, 0.0], 1).unwrap();
        let rm = room(1, -0.3);
        let ps = trace_paths(&rm, &tx, &rx, 60e9).unwrap();
        assert_eq!(ps.paths.len(), 7);
        // Closed-form mirror images of the transmitter in each of the six planes.
        let mut expected: Vec<f64> = vec![
            dist([-t[0], t[1], t[2]], r),
            dist([2.0 * 10.0 - t[0], t[1], t[2]], r),
            dist([t[0], -t[1], t[2]], r),
            dist([t[0], 2.0 * 8.0 - t[1], t[2]], r),
            dist([t[0], t[1], -t[2]], r),
            dist([t[0], t[1], 2.0 * 3.0 - t[2]], r),
        ];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got: Vec<f64> = ps.paths[1..].iter().map(|p| p.length).collect();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
        assert!((ps.paths[0].length - dist(t, r)).abs() < 1e-12);
        assert!(ps.paths[1..].iter().all(|p| p.bounce_count == 1));
    }

    #[test]
    fn friis_magnitude_at_one_metre() {
        let f0 = 100e9;
        let tx = DevicePose::new([2.0, 2.0, 1.5], [0.0, 1.0, 0.0], 1).unwrap();
        let rx = DevicePose::new([3.0, 2.0, 1.5], [0.0, 1.0, 0.0], 1).unwrap();
        let ps = trace_paths(&room(2, 0.0), &tx, &rx, f0).unwrap();
        let lambda = SPEED_OF_LIGHT / f0;
        assert!((ps.paths[0].gain.norm() - lambda / (4.0 * PI)).abs() < 1e-15);
        assert!(ps.paths[1..].iter().all(|p| p.gain.norm() == 0.0));
    }

    #[test]
    fn los_has_strictly_smallest_delay() {
        let tx = DevicePose::new([1.5, 2.5, 1.2], [0.6, 0.8, 0.0], 8).unwrap();
        let rx = DevicePose::new([8.0, 6.0, 1.4], [1.0, 0.0, 0.0], 8).unwrap();
        let ps = trace_paths(&room(2, -0.3), &tx, &rx, 100e9).unwrap();
        assert_eq!(ps.paths[0].bounce_count, 0);
        let d0 = ps.paths[0].mean_delay();
        assert!(ps.paths[1..].iter().all(|p| p.mean_delay() > d0));
        assert!(ps.paths.iter().all(|p| p.delays.iter().all(|&t| t > 0.0)));
        // 1 + 6 + 18 image sources up to second order.
        assert_eq!(ps.paths.len(), 25);
    }

    #[test]
    fn reciprocity_transposes_delays() {
        let rm = room(2, -0.3);
        let a = DevicePose::new([1.5, 2.5, 1.2], [0.6, 0.8, 0.0], 4).unwrap();
        let b = DevicePose::new([8.0, 6.0, 1.4], [1.0, 0.0, 0.0], 4).unwrap();
        let ab = trace_paths(&rm, &a, &b, 100e9).unwrap();
        let ba = trace_paths(&rm, &b, &a, 100e9).unwrap();
        assert_eq!(ab.paths.len(), ba.paths.len());
        for p in &ab.paths {
            let q = ba
                .paths
                .iter()
                .find(|q| (q.delays.t().to_owned() - &p.delays).iter().all(|d| d.abs() < 1e-18))
                .expect("reciprocal path");
            assert!((q.gain - p.gain).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_poses() {
        let rm = room(1, -0.3);
        let inside = DevicePose::new([2.0, 2.0, 1.5], [0.0, 1.0, 0.0], 4).unwrap();
        let outside = DevicePose::new([12.0, 2.0, 1.5], [0.0, 1.0, 0.0], 4).unwrap();
        assert!(matches!(trace_paths(&rm, &inside, &outside, 1e11), Err(crate::Error::Domain(_))));
        assert!(trace_paths(&rm, &inside, &inside, 1e11).is_err());
        assert!(trace_paths(&rm, &inside, &outside, -1.0).is_err());
    }

    #[test]
    fn occluder_removes_direct_path() {
        use super::super::geometry::Occluder;
        let rm = room(1, -0.3).with_occluder(Occluder { min: [4.0, 0.0, 0.0], max: [4.5, 8.0, 3.0] });
        let tx = DevicePose::new([2.0, 4.0, 1.5], [0.0, 1.0, 0.0], 1).unwrap();
        let rx = DevicePose::new([7.0, 4.0, 1.5], [0.0, 1.0, 0.0], 1).unwrap();
        let ps = trace_paths(&rm, &tx, &rx, 1e11).unwrap();
        assert!(!ps.los_present);
        // A wall spanning the room blocks everything.
        assert!(ps.paths.is_empty());
        let partial = room(1, -0.3).with_occluder(Occluder { min: [4.0, 3.5, 1.0], max: [4.5, 4.5, 2.0] });
        let ps = trace_paths(&partial, &tx, &rx, 1e11).unwrap();
        assert!(!ps.los_present);
        // Floor, ceiling and both side walls route around the small box.
        assert_eq!(ps.paths.len(), 4);
    }
}
