//! JSON documents. Output is pretty-printed with a trailing newline; floats
//! use shortest round-trip formatting, so serialising a parsed document
//! reproduces it byte for byte.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::fit::PrototypeExemplars;
use crate::model::{BankMetadata, ClassPrototypes, PrototypeBank};
use crate::video::{TransectReport, REPORT_SCHEMA_VERSION};

pub const BANK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankFile {
    pub schema_version: u32,
    pub temperature: f64,
    pub classes: Vec<ClassPrototypes>,
    pub metadata: BankMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplars: Option<Vec<PrototypeExemplars>>,
}

impl BankFile {
    pub fn new(bank: &PrototypeBank, exemplars: Option<Vec<PrototypeExemplars>>) -> Self {
        Self {
            schema_version: BANK_SCHEMA_VERSION,
            temperature: bank.temperature(),
            classes: bank.classes().to_vec(),
            metadata: bank.metadata().clone(),
            exemplars,
        }
    }

    pub fn to_bank(&self) -> Result<PrototypeBank, FormatError> {
        PrototypeBank::new(self.classes.clone(), self.temperature, self.metadata.clone()).map_err(|e| {
            FormatError::SchemaMismatch {
                line: 0,
                detail: e.to_string(),
            }
        })
    }
}

/// Exemplar export: the top components for each prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExemplarFile {
    pub schema_version: u32,
    pub top: usize,
    pub prototypes: Vec<PrototypeExemplars>,
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}

fn parse<T: DeserializeOwned>(s: &str) -> Result<T, FormatError> {
    serde_json::from_str(s).map_err(|e| {
        if e.is_data() {
            FormatError::SchemaMismatch {
                line: e.line() as u64,
                detail: e.to_string(),
            }
        } else {
            FormatError::Json(e.to_string())
        }
    })
}

fn check_version(found: u32, expected: u32) -> Result<(), FormatError> {
    if found != expected {
        return Err(FormatError::SchemaMismatch {
            line: 0,
            detail: format!("schema_version {found}, expected {expected}"),
        });
    }
    Ok(())
}

pub fn write_bank_json(bank: &PrototypeBank, exemplars: Option<Vec<PrototypeExemplars>>) -> String {
    to_canonical_json(&BankFile::new(bank, exemplars))
}

pub fn read_bank_file(s: &str) -> Result<BankFile, FormatError> {
    let file: BankFile = parse(s)?;
    check_version(file.schema_version, BANK_SCHEMA_VERSION)?;
    file.to_bank()?;
    Ok(file)
}

pub fn read_bank_json(s: &str) -> Result<PrototypeBank, FormatError> {
    read_bank_file(s)?.to_bank()
}

pub fn write_report_json(report: &TransectReport) -> String {
    to_canonical_json(report)
}

pub fn read_report_json(s: &str) -> Result<TransectReport, FormatError> {
    let r: TransectReport = parse(s)?;
    check_version(r.schema_version, REPORT_SCHEMA_VERSION)?;
    Ok(r)
}
