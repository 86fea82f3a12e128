//! KEEL `.dat` reader.
//!
//! ```text
//! @relation iris0
//! @attribute SepalLength real [4.3, 7.9]
//! @attribute Class {positive, negative}
//! @inputs SepalLength
//! @outputs Class
//! @data
//! 5.1, positive
//! ```

use std::path::Path;

use super::{Dataset, RawTable};
use crate::error::{Error, Result};

#[derive(Debug)]
struct Attribute {
    name: String,
    /// Declared values for nominal attributes.
    nominal: Option<Vec<String>>,
    line: usize,
}

pub fn load_keel(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_table(read_keel_table(path)?)
}

pub fn read_keel_table(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keel_table(&text)
}

pub fn parse_keel(text: &str) -> Result<Dataset> {
    Dataset::from_table(parse_keel_table(text)?)
}

fn parse_keel_table(text: &str) -> Result<RawTable> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut inputs: Option<(Vec<String>, usize)> = None;
    let mut outputs: Option<(Vec<String>, usize)> = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut data_line = None;

    for (line_no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(Error::parse(
                line_no,
                "expected a header line starting with '@' before @data",
            ));
        }
        let (keyword, rest) = split_keyword(line);
        match keyword.to_ascii_lowercase().as_str() {
            "@attribute" => attributes.push(parse_attribute(rest, line_no)?),
            "@inputs" | "@input" => inputs = Some((split_names(rest), line_no)),
            "@outputs" | "@output" => outputs = Some((split_names(rest), line_no)),
            "@data" => {
                data_line = Some(line_no);
                break;
            }
            _ => {} // @relation and anything unknown
        }
    }
    let last_line = text.lines().count().max(1);
    if data_line.is_none() {
        return Err(Error::parse(last_line, "missing @data section"));
    }
    if attributes.len() < 2 {
        return Err(Error::parse(
            last_line,
            "need at least one input attribute and a class attribute",
        ));
    }

    let find = |name: &str, line: usize| -> Result<usize> {
        attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::parse(line, format!("unknown attribute '{name}'")))
    };
    let class_idx = match &outputs {
        Some((names, line)) if names.len() == 1 => find(&names[0], *line)?,
        Some((names, line)) => {
            return Err(Error::parse(
                *line,
                format!("expected one output attribute, found {}", names.len()),
            ))
        }
        None => attributes.len() - 1,
    };
    let input_idx: Vec<usize> = match &inputs {
        Some((names, line)) => names
            .iter()
            .map(|n| find(n, *line))
            .collect::<Result<_>>()?,
        None => (0..attributes.len()).filter(|&j| j != class_idx).collect(),
    };
    if let Some(&j) = input_idx.iter().find(|&&j| j == class_idx) {
        return Err(Error::parse(
            attributes[j].line,
            "class attribute listed as an input",
        ));
    }
    if let Some(a) = input_idx.iter().map(|&j| &attributes[j]).find(|a| a.nominal.is_some()) {
        return Err(Error::parse(
            a.line,
            format!("categorical input attribute '{}' is not supported", a.name),
        ));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected {} values, found {}",
                    attributes.len(),
                    fields.len()
                ),
            ));
        }
        let mut row = Vec::with_capacity(input_idx.len());
        for &j in &input_idx {
            let value: f64 = fields[j].parse().map_err(|_| {
                Error::parse(
                    line_no,
                    format!(
                        "non-numeric value '{}' for attribute '{}'",
                        fields[j], attributes[j].name
                    ),
                )
            })?;
            row.push(value);
        }
        let class = fields[class_idx].to_string();
        if let Some(values) = &attributes[class_idx].nominal {
            if !values.contains(&class) {
                return Err(Error::parse(
                    line_no,
                    format!("undeclared class value '{class}'"),
                ));
            }
        }
        rows.push(row);
        labels.push(class);
    }

    Ok(RawTable {
        feature_names: input_idx
            .iter()
            .map(|&j| attributes[j].name.clone())
            .collect(),
        rows,
        labels,
        class_order: attributes[class_idx].nominal.clone().unwrap_or_default(),
    })
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(p) => (&line[..p], line[p..].trim()),
        None => (line, ""),
    }
}

fn split_names(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| unquote(s.trim()).to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn unquote(s: &str) -> &str {
    s.trim_matches(|c| c == '\'' || c == '"')
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let (name, tail) = if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..]
            .find(q)
            .ok_or_else(|| Error::parse(line, "unterminated quoted attribute name"))?;
        (&rest[1..=end], rest[end + 2..].trim())
    } else {
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '{')
            .ok_or_else(|| Error::parse(line, "attribute without a type"))?;
        (&rest[..end], rest[end..].trim())
    };
    if name.is_empty() {
        return Err(Error::parse(line, "empty attribute name"));
    }
    let nominal = if let Some(body) = tail.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line, "unterminated nominal value list"))?;
        Some(split_names(body))
    } else {
        let kind = tail
            .split(|c: char| c.is_whitespace() || c == '[')
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        match kind.as_str() {
            "real" | "integer" | "numeric" => None,
            "" => return Err(Error::parse(line, "attribute without a type")),
            other => {
                return Err(Error::parse(
                    line,
                    format!("unsupported attribute type '{other}'"),
                ))
            }
        }
    };
    Ok(Attribute {
        name: name.to_string(),
        nominal,
        line,
    })
}
