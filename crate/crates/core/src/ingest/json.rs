//! Native landmark document:
//!
//! ```json
//! {"case_id": "c1", "image": "c1.png", "image_size_px": [1935, 2400],
//!  "calibration_mm_per_px": 0.1, "orientation": "right",
//!  "landmarks": {"S": [812.5, 1003.0], "N": [1390.0, 940.25]}}
//! ```
//!
//! Only `calibration_mm_per_px` and `landmarks` are required. The writer emits a
//! canonical form: fixed key order, landmarks in canonical order, coordinates
//! with six decimals, two-space indentation, LF line endings.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use super::{utf8, CaseFile, IngestError};
use crate::geometry::{Calibration, LandmarkId, LandmarkSet, Orientation, Point2};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    case_id: Option<String>,
    #[serde(default)]
    image: Option<String>,
    #[serde(default)]
    image_size_px: Option<[f64; 2]>,
    #[serde(default)]
    calibration_mm_per_px: Option<f64>,
    #[serde(default)]
    orientation: Option<String>,
    landmarks: RawLandmarks,
}

/// Landmark entries in document order, duplicates preserved.
struct RawLandmarks(Vec<(String, [f64; 2])>);

impl<'de> Deserialize<'de> for RawLandmarks {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = RawLandmarks;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping landmark names to [x, y]")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, [f64; 2]>()? {
                    entries.push((k, v));
                }
                Ok(RawLandmarks(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

fn field_error(field: &str, detail: String) -> IngestError {
    IngestError::Parse { detail, line: None, column: None, field: Some(field.to_string()) }
}

pub fn parse_landmarks_json(bytes: &[u8]) -> Result<CaseFile, IngestError> {
    let text = utf8(bytes)?;
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| IngestError::Parse {
        detail: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        field: None,
    })?;

    let mut points: Vec<(LandmarkId, Point2)> = Vec::with_capacity(raw.landmarks.0.len());
    for (name, [x, y]) in &raw.landmarks.0 {
        let id: LandmarkId = name
            .parse()
            .map_err(|_| IngestError::UnknownLandmark { name: name.clone(), line: None })?;
        if points.iter().any(|(seen, _)| *seen == id) {
            return Err(IngestError::DuplicateId { name: name.clone() });
        }
        let p = Point2::new(*x, *y)
            .map_err(|e| field_error(&format!("landmarks.{name}"), e.to_string()))?;
        points.push((id, p));
    }

    let calibration = match raw.calibration_mm_per_px {
        None => return Err(IngestError::MissingCalibration),
        Some(v) => Calibration::new(v)
            .map_err(|e| field_error("calibration_mm_per_px", e.to_string()))?,
    };
    let orientation = match raw.orientation.as_deref() {
        None => Orientation::Unknown,
        Some(s) => s.parse().map_err(|e: String| field_error("orientation", e))?,
    };
    if let Some([w, h]) = raw.image_size_px {
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(field_error(
                "image_size_px",
                format!("image size must be positive, got [{w}, {h}]"),
            ));
        }
    }

    let mut set = LandmarkSet::new(Some(calibration), orientation);
    for (id, p) in points {
        set.insert(id, p);
    }
    Ok(CaseFile {
        source: None,
        case_id: raw.case_id,
        image: raw.image,
        image_size_px: raw.image_size_px,
        landmarks: set,
    })
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Canonical serialization. Writing semantically equal case files yields identical bytes.
pub fn write_landmarks_json(case: &CaseFile) -> Vec<u8> {
    let mut out = String::from("{\n");
    if let Some(id) = &case.case_id {
        out.push_str(&format!("  \"case_id\": {},\n", json_string(id)));
    }
    if let Some(image) = &case.image {
        out.push_str(&format!("  \"image\": {},\n", json_string(image)));
    }
    if let Some([w, h]) = case.image_size_px {
        out.push_str(&format!("  \"image_size_px\": [{w:?}, {h:?}],\n"));
    }
    if let Some(c) = case.landmarks.calibration() {
        out.push_str(&format!("  \"calibration_mm_per_px\": {:?},\n", c.mm_per_px()));
    }
    out.push_str(&format!(
        "  \"orientation\": \"{}\",\n",
        case.landmarks.orientation().as_str()
    ));
    let points = case.landmarks.points();
    if points.is_empty() {
        out.push_str("  \"landmarks\": {}\n}\n");
        return out.into_bytes();
    }
    out.push_str("  \"landmarks\": {\n");
    let n = points.len();
    for (i, (id, p)) in points.iter().enumerate() {
        let comma = if i + 1 < n { "," } else { "" };
        out.push_str(&format!("    \"{}\": [{:.6}, {:.6}]{comma}\n", id.as_str(), p.x, p.y));
    }
    out.push_str("  }\n}\n");
    out.into_bytes()
}
