use std::path::Path;
use std::str::FromStr;

use super::{Dataset, RawTable};
use crate::error::{Error, Result};

/// Which CSV column holds the class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    #[default]
    Last,
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers are column indices, `last` is the last column, anything else a name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label_column: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label_column: LabelColumn::Last,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    Dataset::from_table(read_csv_table(path, options)?)
}

pub fn read_csv_table(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_table(file, options)
}

pub(crate) fn parse_csv_table(input: impl std::io::Read, options: &CsvOptions) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header: Option<Vec<String>> = if options.has_header {
        let h = reader.headers()?;
        if h.is_empty() {
            return Err(Error::invalid("empty file"));
        }
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut records = reader.records().peekable();
    let width = match (&header, records.peek()) {
        (Some(h), _) => h.len(),
        (None, Some(Ok(r))) => r.len(),
        (None, Some(Err(_))) => records.next().unwrap()?.len(),
        (None, None) => return Err(Error::invalid("empty file")),
    };
    let label_idx = match &options.label_column {
        LabelColumn::Last => width.checked_sub(1),
        LabelColumn::Index(i) => Some(*i).filter(|&i| i < width),
        LabelColumn::Name(name) => match &header {
            Some(h) => h.iter().position(|c| c == name),
            None => {
                return Err(Error::invalid(format!(
                    "label column '{name}' addressed by name but the file has no header"
                )))
            }
        },
    }
    .ok_or_else(|| Error::invalid(format!("missing label column {:?}", options.label_column)))?;
    if width < 2 {
        return Err(Error::invalid("need at least one feature column and a label column"));
    }

    let feature_names: Vec<String> = match &header {
        Some(h) => h
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .map(|(_, n)| n.clone())
            .collect(),
        None => (0..width - 1).map(|j| format!("x{j}")).collect(),
    };

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::parse(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            row.push(field.parse::<f64>().map_err(|_| {
                Error::parse(line, format!("non-numeric feature value '{field}'"))
            })?);
        }
        rows.push(row);
        labels.push(record[label_idx].to_string());
    }
    if rows.is_empty() {
        return Err(Error::invalid("empty file"));
    }
    Ok(RawTable {
        feature_names,
        rows,
        labels,
        class_order: Vec::new(),
    })
}
