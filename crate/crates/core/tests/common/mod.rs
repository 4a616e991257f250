#![allow(dead_code)]

pub mod geom;
pub mod logs;
pub mod stub;

use std::path::{Path, PathBuf};

use ceph_core::ingest::{load_case_file, CaseFile};
use ceph_core::{analyze, Analysis, AnalysisConfig};

pub const JSON_FIXTURES: [&str; 6] = [
    "synthetic_case_01",
    "synthetic_case_02",
    "synthetic_case_03",
    "table2_row1",
    "table2_row2",
    "table2_row3",
];

pub const ALL_FIXTURES: [&str; 8] = [
    "synthetic_case_01.json",
    "synthetic_case_02.json",
    "synthetic_case_03.json",
    "table2_row1.json",
    "table2_row2.json",
    "table2_row3.json",
    "isbi19_case_04.txt",
    "csv_case_05.csv",
];

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> CaseFile {
    load_case_file(&fixture(name), None, None).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn analyze_fixture(name: &str) -> Analysis {
    analyze(&load(name), &AnalysisConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Values printed in each Table 2 row, in prompt order.
pub const TABLE2: [[f64; 9]; 3] = [
    [84.41, 85.7, -1.29, 61.28, 28.03, 94.25, 6.34, 6.6, 0.08],
    [84.54, 84.27, 0.27, 58.64, 26.6, 89.64, 6.18, 8.91, -3.56],
    [80.01, 73.87, 6.14, 63.03, 31.03, 96.67, 0.41, 11.55, -0.94],
];

/// English reference text of each Table 2 row as printed.
pub const TABLE2_TEXT: [&str; 3] = [
    "\n Reference measurements: SNA angle: 84.41, SNB angle: 85.7, ANB angle: -1.29, Y-axis angle: 61.28, MP-FH angle: 28.03, facial angle: 94.25, U1-NA distance: 6.34, L1-NB distance: 6.6, Po-NB distance: 0.08",
    "\nReference measurements: SNA angle: 84.54, SNB angle: 84.27, ANB angle: 0.27, Y-axis angle: 58.64, MP-FH angle: 26.6, facial angle: 89.64, U1-NA distance: 6.18, L1-NB distance: 8.91, Po-NB distance: -3.56.",
    "\nReference measurements: SNA angle: 80.01, SNB angle: 73.87, ANB angle: 6.14, Y-axis angle: 63.03, MP-FH angle: 31.03, facial angle: 96.67, U1-NA distance: 0.41, L1-NB distance: 11.55, Po-NB distance: -0.94.",
];

/// Drops a space directly after a newline and a single trailing period.
pub fn normalize_suffix(s: &str) -> String {
    let s = s.replace("\n ", "\n");
    s.strip_suffix('.').map(str::to_string).unwrap_or(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
