//! File formats: the binary embedding container, CSV tables, and JSON
//! documents for banks, reports, and evaluation output.

mod container;
mod json;
mod tables;

pub use container::{
    read_container_bytes, read_embedding_record, write_container, EmbeddingContainer, EmbeddingRecord, ManifestEntry,
    CONTAINER_MAGIC, CONTAINER_VERSION,
};
pub use json::{
    read_bank_file, read_bank_json, read_report_json, to_canonical_json, write_bank_json, write_report_json, BankFile,
    ExemplarFile, BANK_SCHEMA_VERSION,
};
pub use tables::{
    format_sig9, labels_by_id, read_labels_csv, read_scores_csv, read_timeline_csv, write_heatmap_csv,
    write_labels_csv, write_pr_csv, write_scores_csv, write_timeline_csv, LabelRow, ScoreRow, HEATMAP_FIXED_COLUMNS,
    LABEL_COLUMNS, PR_COLUMNS, SCORE_COLUMNS, TIMELINE_COLUMNS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic at byte {offset}")]
    BadMagic { offset: u64 },
    #[error("unsupported container version {version} at byte {offset}")]
    UnsupportedVersion { version: u32, offset: u64 },
    #[error("dimension mismatch at byte {offset}: {detail}")]
    DimMismatch { offset: u64, detail: String },
    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: u64 },
    #[error("truncated record: needed {needed} bytes at byte {offset}, {available} available")]
    Truncated { offset: u64, needed: u64, available: u64 },
    #[error("invalid record at byte {offset}: {detail}")]
    InvalidRecord { offset: u64, detail: String },
    #[error("manifest timestamps decrease at record {index}")]
    NonMonotoneManifest { index: usize },
    #[error("schema mismatch at line {line}: {detail}")]
    SchemaMismatch { line: u64, detail: String },
    #[error("duplicate id {id:?} at line {line}")]
    DuplicateId { line: u64, id: String },
    #[error("inconsistent label for {id:?} at line {line}: SLoF {slof} with presence {presence}")]
    LabelInconsistent { line: u64, id: String, presence: u8, slof: u8 },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
