//! Dataset interchange: a CSV (`x1,...,xp,target`) plus a JSON metadata
//! sidecar at `<stem>.meta.json`.

use super::{Dataset, DatagenError, DatasetMeta, Scenario, Snr};
use crate::data::Matrix;
use std::path::{Path, PathBuf};

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the dataset CSV and its metadata sidecar.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DatagenError> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| DatagenError::File(e.to_string()))?;
    let mut header = d.meta.column_names.clone();
    header.push("target".to_string());
    writer
        .write_record(&header)
        .map_err(|e| DatagenError::File(e.to_string()))?;
    for (i, row) in d.x.iter_rows().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(d.y[i].to_string());
        writer
            .write_record(&record)
            .map_err(|e| DatagenError::File(e.to_string()))?;
    }
    writer.flush()?;

    let meta_file = std::fs::File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(meta_file, &d.meta)
        .map_err(|e| DatagenError::File(e.to_string()))?;
    Ok(())
}

/// Reads a dataset CSV; the metadata sidecar is used when present and
/// reconstructed minimally (no ground truth, empty oracle set) otherwise.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset, DatagenError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| DatagenError::File(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DatagenError::File(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.last().map(String::as_str) != Some("target") {
        return Err(DatagenError::File(format!(
            "{}: last column must be `target`",
            path.display()
        )));
    }
    let p = headers.len() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DatagenError::File(e.to_string()))?;
        let mut row = Vec::with_capacity(p);
        for field in record.iter().take(p) {
            row.push(
                field
                    .parse::<f64>()
                    .map_err(|_| DatagenError::File(format!("bad numeric field `{field}`")))?,
            );
        }
        y.push(
            record
                .get(p)
                .ok_or_else(|| DatagenError::File("short record".into()))?
                .parse::<f64>()
                .map_err(|_| DatagenError::File("bad target field".into()))?,
        );
        rows.push(row);
    }

    let meta = match std::fs::File::open(sidecar_path(path)) {
        Ok(file) => {
            serde_json::from_reader(file).map_err(|e| DatagenError::File(e.to_string()))?
        }
        Err(_) => DatasetMeta {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string()),
            expression: None,
            variables: Vec::new(),
            column_names: headers[..p].to_vec(),
            p0: 0,
            s0: Vec::new(),
            snr: Snr::INFINITE,
            sigma_f2: 0.0,
            sigma_eps2: 0.0,
            bounds: Vec::new(),
            seed: 0,
            scenario: Scenario::Standard,
        },
    };

    Ok(Dataset {
        x: Matrix::from_rows(rows),
        y,
        meta,
    })
}
