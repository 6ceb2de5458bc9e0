//! CSV rows with 17 significant digits.

use crate::error::{Error, Result};

/// A row type with a fixed column layout.
pub trait CsvRow {
    const HEADER: &'static [&'static str];

    fn fields(&self) -> Vec<String>;
}

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(R::HEADER).map_err(csv_error)?;
    for row in rows {
        let fields = row.fields();
        debug_assert_eq!(fields.len(), R::HEADER.len());
        writer.write_record(&fields).map_err(csv_error)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}
