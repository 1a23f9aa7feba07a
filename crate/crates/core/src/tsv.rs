//! Minimal tab-separated table IO shared by the corpus, ranking and score files.
//!
//! Every table has exactly one header row. Fields are never quoted, so a field
//! may not contain a tab or a line break; all fields are NFC-normalized on read.

use std::io::Write;

use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error)]
#[error("{file}:{line}: {message}")]
pub struct TsvError {
    pub file: String,
    pub line: u64,
    pub message: String,
}

impl TsvError {
    pub fn new(file: &str, line: u64, message: impl Into<String>) -> Self {
        TsvError {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub line: u64,
    pub fields: Vec<String>,
}

impl Row {
    pub fn get(&self, idx: usize) -> &str {
        &self.fields[idx]
    }
}

/// Parses `content` as a TSV table whose header must equal `header`.
///
/// A completely empty input is accepted and yields no rows.
pub fn read_rows(file: &str, content: &str, header: &[&str]) -> Result<Vec<Row>, TsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(false)
        .flexible(true)
        .from_reader(content.as_bytes());

    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            TsvError::new(file, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Vec<String> = record.iter().map(|f| f.nfc().collect()).collect();
        if !saw_header {
            saw_header = true;
            if fields.len() != header.len() || fields.iter().zip(header).any(|(a, b)| a != b) {
                return Err(TsvError::new(
                    file,
                    line,
                    format!(
                        "expected header `{}`, found `{}`",
                        header.join("\t"),
                        fields.join("\t")
                    ),
                ));
            }
            continue;
        }
        if fields.len() != header.len() {
            return Err(TsvError::new(
                file,
                line,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        rows.push(Row { line, fields });
    }
    Ok(rows)
}

/// Writes a header and rows. Fails if a field would break the unquoted format.
pub fn write_rows<W, I>(writer: W, header: &[&str], rows: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    out.write_record(header)?;
    for row in rows {
        if let Some(bad) = row.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("field contains a tab or line break: {bad:?}"),
            ));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Formats a float so that it parses back to the identical value.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:?}")
}
