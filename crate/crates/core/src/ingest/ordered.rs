//! Positional text files (one `x,y` pair per line in a fixed landmark order)
//! and the `landmark,x,y` CSV variant.

use std::str::FromStr;

use super::{utf8, CaseFile, IngestError};
use crate::geometry::{Calibration, LandmarkId, LandmarkSet, Orientation, Point2};

/// Scale assumed for the 19-point challenge corpus when none is supplied.
pub const ISBI19_DEFAULT_MM_PER_PX: f64 = 0.1;

const CSV_CALIBRATION_KEY: &str = "calibration_mm_per_px";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderProfile {
    Isbi19,
}

impl OrderProfile {
    pub fn order(self) -> &'static [LandmarkId] {
        use LandmarkId::*;
        match self {
            OrderProfile::Isbi19 => &[
                S, N, Or, Po, A, B, Pog, Me, Gn, Go, L1E, U1E, UpperLip, LowerLip, Subnasale,
                SoftPogonion, Pns, Ans, Ar,
            ],
        }
    }

    pub fn default_calibration(self) -> Calibration {
        match self {
            OrderProfile::Isbi19 => {
                Calibration::new(ISBI19_DEFAULT_MM_PER_PX).expect("positive constant")
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderProfile::Isbi19 => "isbi19",
        }
    }
}

impl FromStr for OrderProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isbi19" => Ok(OrderProfile::Isbi19),
            other => Err(format!("unknown order profile {other:?}")),
        }
    }
}

fn parse_coordinate(field: &str, line: usize) -> Result<f64, IngestError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| IngestError::parse(format!("invalid coordinate {:?}", field.trim()), Some(line)))?;
    if !v.is_finite() {
        return Err(IngestError::parse(format!("non-finite coordinate {:?}", field.trim()), Some(line)));
    }
    Ok(v)
}

fn parse_pair(text: &str, line: usize) -> Result<Point2, IngestError> {
    let mut fields = text.split(',');
    let (Some(x), Some(y), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(IngestError::parse(format!("expected `x,y`, got {text:?}"), Some(line)));
    };
    Ok(Point2 { x: parse_coordinate(x, line)?, y: parse_coordinate(y, line)? })
}

/// Reads the first `profile.order().len()` non-empty lines. Anything after them
/// (the challenge files carry extra metadata lines) is ignored.
pub fn parse_landmarks_ordered_txt(
    bytes: &[u8],
    profile: OrderProfile,
    calibration: Option<Calibration>,
) -> Result<CaseFile, IngestError> {
    let text = utf8(bytes)?;
    let order = profile.order();
    let calibration = calibration.unwrap_or_else(|| profile.default_calibration());
    let mut set = LandmarkSet::new(Some(calibration), Orientation::Unknown);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    for (k, &id) in order.iter().enumerate() {
        let Some((line, content)) = lines.next() else {
            let missing = order[k..].to_vec();
            return Err(IngestError::MissingLandmark {
                detail: format!(
                    "profile {} needs {} lines, found {k}",
                    profile.as_str(),
                    order.len()
                ),
                missing,
            });
        };
        set.insert(id, parse_pair(content, line)?);
    }
    Ok(CaseFile::new(set))
}

/// Writes the profile order; every profile landmark must be present.
pub fn write_landmarks_ordered_txt(
    case: &CaseFile,
    profile: OrderProfile,
) -> Result<Vec<u8>, IngestError> {
    let order = profile.order();
    let missing: Vec<LandmarkId> =
        order.iter().copied().filter(|&id| !case.landmarks.contains(id)).collect();
    if !missing.is_empty() {
        let names: Vec<&str> = missing.iter().map(|id| id.as_str()).collect();
        return Err(IngestError::MissingLandmark {
            detail: format!("profile {} requires {}", profile.as_str(), names.join(", ")),
            missing,
        });
    }
    let mut out = String::new();
    for &id in order {
        let p = case.landmarks.get(id).expect("checked above");
        out.push_str(&format!("{:.6},{:.6}\n", p.x, p.y));
    }
    Ok(out.into_bytes())
}

/// Scale line accepted ahead of the CSV header: `# calibration_mm_per_px=0.1`.
fn csv_calibration(text: &str) -> Result<Option<Calibration>, IngestError> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let Some(comment) = line.strip_prefix('#') else {
            if line.is_empty() {
                continue;
            }
            break;
        };
        let Some((key, value)) = comment.split_once('=') else { continue };
        if key.trim() != CSV_CALIBRATION_KEY {
            continue;
        }
        let v = parse_coordinate(value, i + 1)?;
        return Calibration::new(v)
            .map(Some)
            .map_err(|e| IngestError::parse(e.to_string(), Some(i + 1)));
    }
    Ok(None)
}

/// `landmark,x,y` rows under a header. The scale comes from `calibration` or a
/// leading `# calibration_mm_per_px=<v>` line.
pub fn parse_landmarks_csv(
    bytes: &[u8],
    calibration: Option<Calibration>,
) -> Result<CaseFile, IngestError> {
    let text = utf8(bytes)?;
    let calibration = match calibration {
        Some(c) => c,
        None => csv_calibration(text)?.ok_or(IngestError::MissingCalibration)?,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::parse(e.to_string(), Some(1)))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["landmark", "x", "y"] {
        return Err(IngestError::parse(
            format!("expected header `landmark,x,y`, got {:?}", headers.iter().collect::<Vec<_>>().join(",")),
            headers.position().map(|p| p.line() as usize),
        ));
    }
    let mut set = LandmarkSet::new(Some(calibration), Orientation::Unknown);
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            IngestError::parse(e.to_string(), line)
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(IngestError::parse(
                format!("expected 3 fields, got {}", record.len()),
                Some(line),
            ));
        }
        let name = &record[0];
        let id: LandmarkId = name
            .parse()
            .map_err(|_| IngestError::UnknownLandmark { name: name.to_string(), line: Some(line) })?;
        if set.contains(id) {
            return Err(IngestError::DuplicateId { name: name.to_string() });
        }
        let p = Point2 { x: parse_coordinate(&record[1], line)?, y: parse_coordinate(&record[2], line)? };
        set.insert(id, p);
    }
    Ok(CaseFile::new(set))
}

pub fn write_landmarks_csv(case: &CaseFile) -> Vec<u8> {
    let mut out = String::new();
    if let Some(c) = case.landmarks.calibration() {
        out.push_str(&format!("# {CSV_CALIBRATION_KEY}={:?}\n", c.mm_per_px()));
    }
    out.push_str("landmark,x,y\n");
    for (id, p) in case.landmarks.points() {
        out.push_str(&format!("{},{:.6},{:.6}\n", id.as_str(), p.x, p.y));
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(n: usize) -> String {
        (0..n).map(|i| format!("{},{}\n", 100 + i * 10, 200 + i * 5)).collect()
    }

    #[test]
    fn nineteen_lines() {
        let case = parse_landmarks_ordered_txt(lines(19).as_bytes(), OrderProfile::Isbi19, None).unwrap();
        assert_eq!(case.landmarks.len(), 19);
        assert_eq!(case.landmarks.calibration().unwrap().mm_per_px(), 0.1);
        assert_eq!(case.landmarks.get(LandmarkId::Me).unwrap(), Point2 { x: 170.0, y: 235.0 });
        assert_eq!(case.landmarks.get(LandmarkId::Ar).unwrap(), Point2 { x: 280.0, y: 290.0 });
    }

    #[test]
    fn trailing_metadata_ignored_and_override_applied() {
        let text = format!("{}\n1\n2\n", lines(19));
        let cal = Calibration::new(0.125).unwrap();
        let case = parse_landmarks_ordered_txt(text.as_bytes(), OrderProfile::Isbi19, Some(cal)).unwrap();
        assert_eq!(case.landmarks.calibration(), Some(cal));
    }

    #[test]
    fn eighteen_lines() {
        let err = parse_landmarks_ordered_txt(lines(18).as_bytes(), OrderProfile::Isbi19, None).unwrap_err();
        assert_eq!(err.code(), "MISSING_LANDMARK");
    }

    #[test]
    fn malformed_line_number() {
        let mut text = lines(19);
        text = text.replacen("120,210", "a,b", 1);
        let err = parse_landmarks_ordered_txt(text.as_bytes(), OrderProfile::Isbi19, None).unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        assert!(matches!(err, IngestError::Parse { line: Some(3), .. }), "{err:?}");
    }

    #[test]
    fn ordered_round_trip() {
        let case = parse_landmarks_ordered_txt(lines(19).as_bytes(), OrderProfile::Isbi19, None).unwrap();
        let written = write_landmarks_ordered_txt(&case, OrderProfile::Isbi19).unwrap();
        let again = parse_landmarks_ordered_txt(&written, OrderProfile::Isbi19, None).unwrap();
        assert_eq!(again, case);
    }

    #[test]
    fn csv_round_trip() {
        let text = "# calibration_mm_per_px=0.1\nlandmark,x,y\nS,100,120\nN, 300.5 ,110\n";
        let case = parse_landmarks_csv(text.as_bytes(), None).unwrap();
        assert_eq!(case.landmarks.len(), 2);
        let again = parse_landmarks_csv(&write_landmarks_csv(&case), None).unwrap();
        assert_eq!(again, case);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(
            parse_landmarks_csv(b"landmark,x,y\nS,1,2\n", None),
            Err(IngestError::MissingCalibration)
        );
        let cal = Some(Calibration::new(0.1).unwrap());
        let err = parse_landmarks_csv(b"landmark,x,y\nS,1,2\nS,3,4\n", cal).unwrap_err();
        assert_eq!(err.code(), "DUPLICATE_ID");
        let err = parse_landmarks_csv(b"landmark,x,y\nQ,1,2\n", cal).unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        let err = parse_landmarks_csv(b"name,x,y\nS,1,2\n", cal).unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        let err = parse_landmarks_csv(b"landmark,x,y\nS,1,z\n", cal).unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: Some(2), .. }), "{err:?}");
    }
}
