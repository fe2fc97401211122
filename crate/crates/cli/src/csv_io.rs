//! CSV tables. The first row is a header; an empty cell or `NA` is missing.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use maternal_core::data::{Dataset, FeatureSchema, RawTable};
use maternal_core::Matrix;

use crate::error::{AppError, AppResult};

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

pub fn read_table_from<R: Read>(reader: R) -> AppResult<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| AppError::Data(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| AppError::Data(format!("row {}: {e}", i + 1)))?;
        let row = record
            .iter()
            .zip(&header)
            .map(|(cell, column)| {
                if is_missing(cell) {
                    return Ok(None);
                }
                cell.parse::<f64>().map(Some).map_err(|_| {
                    AppError::Data(format!("row {}, column `{column}`: `{cell}` is not a number", i + 1))
                })
            })
            .collect::<AppResult<Vec<_>>>()?;
        rows.push(row);
    }
    RawTable::new(header, rows).map_err(|e| AppError::Data(e.to_string()))
}

pub fn read_table(path: &Path) -> AppResult<RawTable> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_table_from(file).map_err(|e| match e {
        AppError::Data(msg) => AppError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| AppError::Data(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::Data(e.to_string()))?;
    write_file(path, &bytes)
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| AppError::io(path, e))?;
    f.write_all(bytes).map_err(|e| AppError::io(path, e))
}

pub fn write_table(path: &Path, table: &RawTable) -> AppResult<()> {
    let rows = table
        .rows()
        .iter()
        .map(|r| r.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()).collect());
    write_csv(path, table.header(), rows)
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> AppResult<()> {
    write_table(path, &ds.to_raw_table())
}

/// Feature columns of `table` in schema order. Other columns, including
/// the label, are ignored; a missing cell is an error.
pub fn feature_matrix(table: &RawTable, schema: &FeatureSchema) -> AppResult<Matrix> {
    let columns = schema
        .feature_names()
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| AppError::Data(format!("missing column `{name}`")))
        })
        .collect::<AppResult<Vec<_>>>()?;
    let mut out = Matrix::zeros(0, 0);
    for (i, row) in table.rows().iter().enumerate() {
        let values = columns
            .iter()
            .map(|&j| {
                row[j].ok_or_else(|| {
                    AppError::Data(format!("row {}: missing value in column `{}`", i + 1, table.header()[j]))
                })
            })
            .collect::<AppResult<Vec<f64>>>()?;
        out.push_row(&values).map_err(|e| AppError::Data(e.to_string()))?;
    }
    Ok(out)
}

/// Parses one comma-separated feature vector against `schema`.
pub fn parse_row(text: &str, schema: &FeatureSchema) -> AppResult<Vec<f64>> {
    let cells: Vec<&str> = text.split(',').map(str::trim).collect();
    let names = schema.feature_names();
    if cells.len() < names.len() {
        return Err(AppError::Data(format!(
            "row has {} values; missing column `{}`",
            cells.len(),
            names[cells.len()]
        )));
    }
    if cells.len() > names.len() {
        return Err(AppError::Data(format!(
            "row has {} values but the schema has {} features",
            cells.len(),
            names.len()
        )));
    }
    cells
        .iter()
        .zip(names)
        .map(|(c, name)| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::Data(format!("column `{name}`: `{c}` is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_markers() {
        let t = read_table_from("a,b\n1,\nNA,2.5\n".as_bytes()).unwrap();
        assert_eq!(t.rows(), &[vec![Some(1.0), None], vec![None, Some(2.5)]]);
    }

    #[test]
    fn bad_cell_names_column() {
        let err = read_table_from("a,b\n1,x\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("column `b`"), "{err}");
    }

    #[test]
    fn short_row_names_missing_column() {
        let schema = FeatureSchema::default();
        let err = parse_row("1,0,1,0,1,0,1,0", &schema).unwrap_err().to_string();
        assert!(err.contains("patient_type"), "{err}");
        assert_eq!(parse_row("1,0,1,0,1,0,1,0,1", &schema).unwrap().len(), 9);
    }
}
