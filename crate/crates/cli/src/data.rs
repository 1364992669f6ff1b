//! CSV ingestion.

use std::path::Path;

use ovbsense_core::model::{validate_dataset, Dataset, RawTable};
use sha2::{Digest, Sha256};

use crate::config::{hex, DataSection};
use crate::error::{CliError, CliResult};

/// Parses a header-row CSV of plain decimal numbers.
pub fn parse_table(bytes: &[u8]) -> CliResult<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::Data("data file has no header row".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("row {}: {e}", row + 1)))?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("row {}, column '{}': cannot parse '{}' as a number", row + 1, names[j], field))
            })?;
            columns[j].push(v);
        }
    }
    Ok(RawTable { names, columns })
}

pub struct LoadedData {
    pub dataset: Dataset,
    /// SHA-256 of the file bytes, hex encoded.
    pub hash: String,
}

pub fn load_dataset(path: &Path, section: &DataSection) -> CliResult<LoadedData> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let table = parse_table(&bytes)?;
    let dataset = validate_dataset(&table, &section.outcome, &section.treatment, section.covariates.as_deref())
        .map_err(CliError::from_data)?;
    Ok(LoadedData { dataset, hash: hex(&Sha256::digest(&bytes)) })
}
