//! Landmark vocabulary and the planar primitives every measurement is built from.
//!
//! Coordinates follow the image convention: `x` grows to the right and `y`
//! grows downward. A normalized [`LandmarkSet`] faces right, so anterior
//! structures have larger `x` than posterior ones.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("cannot determine facing direction: no Or/Po or N/S pair and orientation is unknown")]
    OrientationUndetermined,
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("calibration must be positive and finite, got {0}")]
    InvalidCalibration(f64),
    #[error("unknown landmark identifier {0:?}")]
    UnknownLandmark(String),
}

macro_rules! landmarks {
    ($($variant:ident => $name:literal, $desc:literal;)*) => {
        /// Canonical landmark identifiers. Declaration order is the canonical
        /// serialization order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum LandmarkId {
            $(#[doc = $desc] $variant,)*
        }

        impl LandmarkId {
            pub const ALL: &'static [LandmarkId] = &[$(LandmarkId::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(LandmarkId::$variant => $name,)*
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(LandmarkId::$variant => $desc,)*
                }
            }
        }

        impl FromStr for LandmarkId {
            type Err = GeometryError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(LandmarkId::$variant),)*
                    other => Err(GeometryError::UnknownLandmark(other.to_string())),
                }
            }
        }
    };
}

landmarks! {
    S => "S", "sella";
    N => "N", "nasion";
    Or => "Or", "orbitale";
    Po => "Po", "porion";
    A => "A", "subspinale (point A)";
    B => "B", "supramentale (point B)";
    Pog => "Pog", "pogonion";
    Gn => "Gn", "gnathion";
    Me => "Me", "menton";
    Go => "Go", "gonion";
    D => "D", "symphysis center";
    U1E => "U1E", "upper incisor incisal edge";
    U1A => "U1A", "upper incisor root apex";
    L1E => "L1E", "lower incisor incisal edge";
    L1A => "L1A", "lower incisor root apex";
    OcA => "OcA", "anterior occlusal point";
    OcP => "OcP", "posterior occlusal point";
    Ans => "ANS", "anterior nasal spine";
    Pns => "PNS", "posterior nasal spine";
    Ar => "Ar", "articulare";
    UpperLip => "UL", "upper lip (soft tissue)";
    LowerLip => "LL", "lower lip (soft tissue)";
    Subnasale => "Sn", "subnasale (soft tissue)";
    SoftPogonion => "PogS", "soft tissue pogonion";
}

impl LandmarkId {
    pub fn is_soft_tissue(self) -> bool {
        matches!(
            self,
            LandmarkId::UpperLip
                | LandmarkId::LowerLip
                | LandmarkId::Subnasale
                | LandmarkId::SoftPogonion
        )
    }
}

impl fmt::Display for LandmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for LandmarkId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LandmarkId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    /// Checked constructor; rejects NaN and infinities.
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(GeometryError::NonFinite { x, y })
        }
    }

    fn minus(self, other: Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// Millimetres per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Calibration(f64);

impl Calibration {
    pub fn new(mm_per_px: f64) -> Result<Self, GeometryError> {
        if mm_per_px.is_finite() && mm_per_px > 0.0 {
            Ok(Calibration(mm_per_px))
        } else {
            Err(GeometryError::InvalidCalibration(mm_per_px))
        }
    }

    pub fn mm_per_px(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Calibration {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Calibration::new(f64::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[serde(rename = "right")]
    FacingRight,
    #[serde(rename = "left")]
    FacingLeft,
    #[default]
    Unknown,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::FacingRight => "right",
            Orientation::FacingLeft => "left",
            Orientation::Unknown => "unknown",
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "right" => Ok(Orientation::FacingRight),
            "left" => Ok(Orientation::FacingLeft),
            "unknown" => Ok(Orientation::Unknown),
            other => Err(format!("invalid orientation {other:?}, expected left|right|unknown")),
        }
    }
}

/// Landmarks of one case, in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSet {
    points: BTreeMap<LandmarkId, Point2>,
    calibration: Option<Calibration>,
    orientation: Orientation,
}

impl LandmarkSet {
    pub fn new(calibration: Option<Calibration>, orientation: Orientation) -> Self {
        LandmarkSet {
            points: BTreeMap::new(),
            calibration,
            orientation,
        }
    }

    /// Builds a set from `(id, x, y)` triples. Later duplicates overwrite earlier ones.
    pub fn from_points<I>(points: I, calibration: Option<Calibration>) -> Result<Self, GeometryError>
    where
        I: IntoIterator<Item = (LandmarkId, f64, f64)>,
    {
        let mut set = LandmarkSet::new(calibration, Orientation::Unknown);
        for (id, x, y) in points {
            set.insert(id, Point2::new(x, y)?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, id: LandmarkId, p: Point2) -> Option<Point2> {
        self.points.insert(id, p)
    }

    pub fn get(&self, id: LandmarkId) -> Option<Point2> {
        self.points.get(&id).copied()
    }

    pub fn contains(&self, id: LandmarkId) -> bool {
        self.points.contains_key(&id)
    }

    pub fn points(&self) -> &BTreeMap<LandmarkId, Point2> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn calibration(&self) -> Option<Calibration> {
        self.calibration
    }

    pub fn set_calibration(&mut self, calibration: Option<Calibration>) {
        self.calibration = calibration;
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn set_orientation(&mut self, orientation: Orientation) {
        self.orientation = orientation;
    }

    /// Facing direction implied by the landmarks: Or/Po first, N/S as fallback.
    pub fn inferred_orientation(&self) -> Option<Orientation> {
        let pair = match (self.get(LandmarkId::Or), self.get(LandmarkId::Po)) {
            (Some(or), Some(po)) => Some((or, po)),
            _ => match (self.get(LandmarkId::N), self.get(LandmarkId::S)) {
                (Some(n), Some(s)) => Some((n, s)),
                _ => None,
            },
        };
        pair.map(|(anterior, posterior)| {
            if anterior.x < posterior.x {
                Orientation::FacingLeft
            } else {
                Orientation::FacingRight
            }
        })
    }

    /// Applies `f` to every point, keeping calibration and orientation.
    pub fn map_points(&self, mut f: impl FnMut(Point2) -> Point2) -> LandmarkSet {
        LandmarkSet {
            points: self.points.iter().map(|(&id, &p)| (id, f(p))).collect(),
            calibration: self.calibration,
            orientation: self.orientation,
        }
    }
}

/// Unsigned angle in degrees between the rays `vertex→p1` and `vertex→p2`.
pub fn angle_at_vertex(vertex: Point2, p1: Point2, p2: Point2) -> Result<f64, GeometryError> {
    if vertex == p1 || vertex == p2 {
        return Err(GeometryError::Degenerate(
            "zero-length ray at vertex".to_string(),
        ));
    }
    Ok(unsigned_angle(p1.minus(vertex), p2.minus(vertex)))
}

/// Unsigned angle in degrees between the directions `a1→a2` and `b1→b2`.
/// Reversing one direction turns `r` into `180 - r`.
pub fn directed_line_angle(
    a1: Point2,
    a2: Point2,
    b1: Point2,
    b2: Point2,
) -> Result<f64, GeometryError> {
    if a1 == a2 || b1 == b2 {
        return Err(GeometryError::Degenerate(
            "zero-length direction".to_string(),
        ));
    }
    Ok(unsigned_angle(a2.minus(a1), b2.minus(b1)))
}

// atan2(|u×v|, u·v) stays accurate near 0 and 180 where acos does not.
fn unsigned_angle(u: (f64, f64), v: (f64, f64)) -> f64 {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    cross.abs().atan2(dot).to_degrees()
}

/// Perpendicular distance from `p` to the line through `a` and `b`, signed by
/// `cross(p - a, unit(b - a))`. With a craniocaudal line in the canonical
/// frame, anterior points come out positive. Swapping `a` and `b` negates
/// the result bit for bit.
pub fn signed_point_line_distance(p: Point2, a: Point2, b: Point2) -> Result<f64, GeometryError> {
    if a == b {
        return Err(GeometryError::Degenerate(
            "line defined by coincident points".to_string(),
        ));
    }
    if (b.x, b.y) < (a.x, a.y) {
        return signed_point_line_distance(p, b, a).map(|d| -d);
    }
    let (dx, dy) = b.minus(a);
    let len = dx.hypot(dy);
    let (px, py) = p.minus(a);
    Ok((px * dy - py * dx) / len)
}

pub fn to_physical(px: f64, calibration: Calibration) -> f64 {
    px * calibration.mm_per_px()
}

/// Returns the set facing right. Left-facing sets are mirrored about the
/// centroid of their x coordinates, which preserves every length and angle.
pub fn normalize_orientation(set: &LandmarkSet) -> Result<LandmarkSet, GeometryError> {
    let facing = match set.inferred_orientation() {
        Some(o) => o,
        None => match set.orientation {
            Orientation::Unknown => return Err(GeometryError::OrientationUndetermined),
            declared => declared,
        },
    };
    if facing == Orientation::FacingRight {
        let mut out = set.clone();
        out.orientation = Orientation::FacingRight;
        return Ok(out);
    }
    let n = set.points.len() as f64;
    let cx = set.points.values().map(|p| p.x).sum::<f64>() / n;
    let mut out = set.map_points(|p| Point2 { x: 2.0 * cx - p.x, y: p.y });
    out.orientation = Orientation::FacingRight;
    Ok(out)
}
