//! Plain-text interchange formats: error maps, candidate sweeps,
//! predictions, flat `key=value` configs and contact sheets.

use std::collections::BTreeMap;

use crate::corrupt::EVAL_SIGMAS;
use crate::error::{Error, Result};
use crate::metrics::{Candidate, ErrorMap, EvalResult};
use crate::tensor::ImageTensor;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("not a finite number: {field:?}")))
}

/// Parses CSV lines `kind,severity,error`. A leading header row starting
/// with `kind` is skipped.
pub fn parse_error_map(text: &str) -> Result<ErrorMap> {
    let mut map = ErrorMap::new();
    for (n, line) in content_lines(text) {
        if line.starts_with("kind") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(n, format!("expected 3 fields, found {}", fields.len())));
        }
        let kind = fields[0].trim();
        if kind.is_empty() {
            return Err(parse_err(n, "empty kind"));
        }
        let severity: u32 = fields[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("bad severity {:?}", fields[1])))?;
        let err = parse_f64(n, fields[2])?;
        if !(0.0..=1.0).contains(&err) {
            return Err(parse_err(n, format!("error {err} outside [0,1]")));
        }
        if map.insert((kind.to_string(), severity), err).is_some() {
            return Err(parse_err(n, format!("duplicate entry {kind},{severity}")));
        }
    }
    Ok(map)
}

pub fn format_error_map(map: &ErrorMap) -> String {
    let mut out = String::from("kind,severity,error\n");
    for ((kind, sev), err) in map {
        out.push_str(&format!("{kind},{sev},{err}\n"));
    }
    out
}

/// Header row of a candidates file.
pub fn candidates_header() -> String {
    let mut h = String::from("label,clean_acc");
    for s in EVAL_SIGMAS {
        h.push_str(&format!(",acc_{s}"));
    }
    h
}

/// Parses CSV lines `label,clean_acc,acc_0.1,...,acc_1.0`. Accuracies are
/// fractions in `[0,1]`; a header row starting with `label` is skipped.
pub fn parse_candidates(text: &str) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (n, line) in content_lines(text) {
        if line.starts_with("label") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + EVAL_SIGMAS.len() {
            return Err(parse_err(
                n,
                format!("expected {} fields, found {}", 2 + EVAL_SIGMAS.len(), fields.len()),
            ));
        }
        let clean = parse_f64(n, fields[1])?;
        let mut suite = [0.0; 6];
        for (slot, f) in suite.iter_mut().zip(&fields[2..]) {
            *slot = parse_f64(n, f)?;
        }
        let eval = EvalResult::with_suite(clean, suite).map_err(|e| parse_err(n, e.to_string()))?;
        out.push(Candidate::new(fields[0].trim(), eval));
    }
    Ok(out)
}

pub fn format_candidates(candidates: &[Candidate]) -> String {
    let mut out = candidates_header();
    out.push('\n');
    for c in candidates {
        out.push_str(&c.label);
        out.push_str(&format!(",{}", c.eval.clean_accuracy));
        for s in EVAL_SIGMAS {
            let a = c.eval.sigma_accuracy(s).unwrap_or(f64::NAN);
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
    }
    out
}

/// One non-negative integer label per line.
pub fn parse_predictions(text: &str) -> Result<Vec<usize>> {
    content_lines(text)
        .map(|(n, l)| l.parse::<usize>().map_err(|_| parse_err(n, format!("bad label {l:?}"))))
        .collect()
}

pub fn format_predictions(preds: &[usize]) -> String {
    preds.iter().map(|p| format!("{p}\n")).collect()
}

/// Flat `key = value` config. Later keys overwrite earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in content_lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(n, format!("expected key=value, got {line:?}")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(parse_err(n, "empty key"));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Tiles images left to right, top to bottom into a grid `cols` wide with
/// a one-pixel black gutter. Grayscale images are replicated to RGB.
pub fn contact_sheet(images: &[ImageTensor], cols: usize) -> Result<ImageTensor> {
    let first = images.first().ok_or(Error::EmptyDataset)?;
    let (h, w) = (first.height(), first.width());
    if cols == 0 {
        return Err(Error::InvalidArgument("contact sheet needs at least one column".into()));
    }
    let cols = cols.min(images.len());
    let rows = images.len().div_ceil(cols);
    let sheet_h = rows * (h + 1) - 1;
    let sheet_w = cols * (w + 1) - 1;
    let mut sheet = ImageTensor::zeros(sheet_h, sheet_w, 3);
    for (k, img) in images.iter().enumerate() {
        if img.height() != h || img.width() != w {
            return Err(Error::ShapeMismatch(format!(
                "contact sheet tile {k} is {}, expected {h}x{w}",
                img.shape()
            )));
        }
        let rgb = img.to_rgb()?;
        let (oy, ox) = ((k / cols) * (h + 1), (k % cols) * (w + 1));
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    sheet.set(oy + y, ox + x, c, rgb.get(y, x, c));
                }
            }
        }
    }
    Ok(sheet)
}
