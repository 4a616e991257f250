//! Random geometry shared by the property suites.

use ceph_core::geometry::{normalize_orientation, Calibration, LandmarkId, LandmarkSet, Orientation, Point2};
use ceph_core::steiner::{compute_all, MeasurementId};
use proptest::prelude::*;

pub fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y).unwrap()
}

pub fn point() -> impl Strategy<Value = Point2> {
    (-2000.0..2000.0f64, -2000.0..2000.0f64).prop_map(|(x, y)| p(x, y))
}

#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub theta: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Similarity {
    pub fn apply(self, q: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        p(self.scale * (c * q.x - s * q.y) + self.tx, self.scale * (s * q.x + c * q.y) + self.ty)
    }
}

pub fn similarity() -> impl Strategy<Value = Similarity> {
    (-std::f64::consts::PI..std::f64::consts::PI, 0.1..10.0f64, -5000.0..5000.0f64, -5000.0..5000.0f64)
        .prop_map(|(theta, scale, tx, ty)| Similarity { theta, scale, tx, ty })
}

/// Rotations small enough to keep the face pointing right.
pub fn upright_similarity() -> impl Strategy<Value = Similarity> {
    (-0.5..0.5f64, 0.25..4.0f64, -3000.0..3000.0f64, -3000.0..3000.0f64)
        .prop_map(|(theta, scale, tx, ty)| Similarity { theta, scale, tx, ty })
}

pub fn far_apart(a: Point2, b: Point2) -> bool {
    (a.x - b.x).hypot(a.y - b.y) > 1.0
}

const LAYOUT: [(LandmarkId, f64, f64); 17] = [
    (LandmarkId::S, 700.0, 900.0),
    (LandmarkId::N, 1350.0, 800.0),
    (LandmarkId::Or, 1250.0, 1000.0),
    (LandmarkId::Po, 550.0, 1050.0),
    (LandmarkId::A, 1330.0, 1350.0),
    (LandmarkId::B, 1280.0, 1750.0),
    (LandmarkId::Pog, 1290.0, 1900.0),
    (LandmarkId::Gn, 1260.0, 1970.0),
    (LandmarkId::Me, 1200.0, 2000.0),
    (LandmarkId::Go, 750.0, 1700.0),
    (LandmarkId::D, 1220.0, 1850.0),
    (LandmarkId::U1E, 1380.0, 1560.0),
    (LandmarkId::U1A, 1270.0, 1300.0),
    (LandmarkId::L1E, 1360.0, 1540.0),
    (LandmarkId::L1A, 1220.0, 1780.0),
    (LandmarkId::OcA, 1370.0, 1550.0),
    (LandmarkId::OcP, 1000.0, 1500.0),
];

/// Right-facing set with every measurement's landmarks jittered around a plausible layout.
pub fn landmark_set() -> impl Strategy<Value = LandmarkSet> {
    proptest::collection::vec((-120.0..120.0f64, -120.0..120.0f64), LAYOUT.len()).prop_map(|jitter| {
        let mut set = LandmarkSet::new(Some(Calibration::new(0.1).unwrap()), Orientation::Unknown);
        for ((id, x, y), (dx, dy)) in LAYOUT.iter().zip(jitter) {
            set.insert(*id, p(x + dx, y + dy));
        }
        set
    })
}

pub fn values(set: &LandmarkSet) -> Vec<(MeasurementId, f64)> {
    let normalized = normalize_orientation(set).unwrap();
    compute_all(&normalized, &MeasurementId::ALL).results.into_iter().map(|r| (r.id, r.value)).collect()
}

/// S, N, A, B with A and B placed at known angles from N→S. Returns the set
/// and the constructed ANB.
pub fn anb_construction() -> impl Strategy<Value = (LandmarkSet, f64)> {
    (
        (300.0..900.0f64, 700.0..1100.0f64, 400.0..900.0f64, -0.3..0.3f64),
        (60.0..110.0f64, 60.0..110.0f64, 100.0..800.0f64, 100.0..800.0f64),
    )
        .prop_map(|((sx, sy, len, tilt), (sna, snb, ra, rb))| {
            let (nx, ny) = (sx + len * tilt.cos(), sy - len * tilt.sin());
            let (ux, uy) = ((sx - nx) / len, (sy - ny) / len);
            // y points down, so a negative rotation of N→S swings toward the face.
            let ray = |deg: f64, r: f64| {
                let (sn, cs) = (-deg.to_radians()).sin_cos();
                (nx + r * (cs * ux - sn * uy), ny + r * (sn * ux + cs * uy))
            };
            let (ax, ay) = ray(sna, ra);
            let (bx, by) = ray(snb, rb);
            let set = LandmarkSet::from_points(
                [(LandmarkId::S, sx, sy), (LandmarkId::N, nx, ny), (LandmarkId::A, ax, ay), (LandmarkId::B, bx, by)],
                None,
            )
            .unwrap();
            (set, sna - snb)
        })
}
