//! Reference data files shipped with the repository.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hardy::HardyData;
use crate::measurement::{read_records_csv, CountRecord};

/// Environment variable overriding the fixture directory.
pub const FIXTURE_ENV: &str = "ENTANGLE_FIXTURES";
pub const TABLE1_FILE: &str = "table1_counts.csv";
pub const HARDY_FILE: &str = "hardy_paper_counts.json";

/// Embedded copies, for builds without filesystem access.
pub const TABLE1_CSV: &str = include_str!("../../../fixtures/table1_counts.csv");
pub const HARDY_JSON: &str = include_str!("../../../fixtures/hardy_paper_counts.json");

/// `$ENTANGLE_FIXTURES`, else the repository's `fixtures/` directory.
pub fn fixture_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(FIXTURE_ENV) {
        return PathBuf::from(dir);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open fixture {}: {e}", path.display()),
        ))
    })
}

pub fn load_records(path: &Path) -> Result<Vec<CountRecord>> {
    read_records_csv(open(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_hardy(path: &Path) -> Result<HardyData> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn table1_records() -> Result<Vec<CountRecord>> {
    load_records(&fixture_dir().join(TABLE1_FILE))
}

pub fn hardy_data() -> Result<HardyData> {
    load_hardy(&fixture_dir().join(HARDY_FILE))
}

pub fn embedded_table1_records() -> Vec<CountRecord> {
    read_records_csv(TABLE1_CSV.as_bytes()).expect("embedded tomography fixture parses")
}

pub fn embedded_hardy_data() -> HardyData {
    serde_json::from_str(HARDY_JSON).expect("embedded Hardy fixture parses")
}
