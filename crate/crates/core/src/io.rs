//! File helpers with path-tagged errors.

use std::path::Path;

use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    image::open(path)
        .map(|img| img.to_rgb8())
        .map_err(|source| Error::Image {
            path: path.to_owned(),
            source,
        })
}

pub fn write_png(path: &Path, image: &RgbImage) -> Result<()> {
    ensure_parent(path)?;
    image.save_with_format(path, image::ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

/// Rows of an id-keyed numeric table.
pub type VectorRows = Vec<(String, Vec<f64>)>;

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Writes a headered CSV: `id` followed by `columns`. Missing values are
/// written as `NaN`.
pub fn write_vectors_csv(path: &Path, columns: &[&str], rows: &[(String, Vec<f64>)]) -> Result<()> {
    ensure_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(csv_error(path))?;
    writer
        .write_record(std::iter::once("id").chain(columns.iter().copied()))
        .map_err(csv_error(path))?;
    for (id, v) in rows {
        if v.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: v.len(),
            });
        }
        writer
            .write_record(std::iter::once(id.clone()).chain(v.iter().map(|x| x.to_string())))
            .map_err(csv_error(path))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_vectors_csv`], returning the column
/// names (without `id`) and the rows.
pub fn read_vectors_csv(path: &Path) -> Result<(Vec<String>, VectorRows)> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = reader.headers().map_err(csv_error(path))?.clone();
    if header.get(0) != Some("id") {
        return Err(Error::Format {
            path: path.to_owned(),
            message: "first column must be `id`".into(),
        });
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error(path))?;
        let id = record[0].to_string();
        let values = record
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Format {
                path: path.to_owned(),
                message: format!("row `{id}`: {e}"),
            })?;
        rows.push((id, values));
    }
    Ok((columns, rows))
}
