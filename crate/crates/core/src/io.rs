// SPDX-License-Identifier: MIT OR Apache-2.0

//! Series ingestion and segment-table serialization.
//!
//! Input files hold one observation per line, either a bare value or a
//! `position,value` / `position<TAB>value` pair, with an optional header row.
//! Segment tables are tab-separated with 1-based inclusive bounds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SameError};
use crate::pipeline::{Segment, Segmentation};
use crate::series::Series;

pub const SEGMENT_TABLE_HEADER: &str = "start\tend\tlength\tmean";

fn split_fields(line: &str) -> Vec<&str> {
    let sep = if line.contains('\t') { '\t' } else { ',' };
    line.split(sep).map(str::trim).collect()
}

fn parse_field(field: &str) -> Option<f64> {
    field.parse::<f64>().ok()
}

/// Parses series text; `origin` names the source in error messages.
pub fn parse_series(text: &str, origin: &Path) -> Result<Series> {
    let parse_err = |line: usize, message: String| SameError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut columns: Option<usize> = None;
    let mut last_position: Option<f64> = None;
    let mut seen_row = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(line);
        if !seen_row {
            seen_row = true;
            let is_header = fields.iter().all(|f| !f.is_empty())
                && fields.iter().any(|f| parse_field(f).is_none());
            if is_header {
                if fields.len() > 2 {
                    return Err(parse_err(
                        line_no,
                        format!("expected 1 or 2 columns, found {}", fields.len()),
                    ));
                }
                columns = Some(fields.len());
                continue;
            }
        }
        let expected = *columns.get_or_insert(fields.len());
        if fields.len() != expected || expected > 2 {
            return Err(parse_err(
                line_no,
                format!(
                    "expected {} column(s), found {}",
                    expected.min(2),
                    fields.len()
                ),
            ));
        }
        let numbers = fields
            .iter()
            .map(|f| {
                parse_field(f)
                    .ok_or_else(|| parse_err(line_no, format!("cannot parse '{f}' as a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if numbers.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(line_no, "value is not finite".to_string()));
        }
        if let [position, _] = numbers[..] {
            if last_position.is_some_and(|prev| position <= prev) {
                return Err(parse_err(
                    line_no,
                    format!("position {position} is not increasing"),
                ));
            }
            last_position = Some(position);
        }
        values.push(*numbers.last().expect("at least one field"));
    }
    Series::new(values)
}

/// Reads a series file (see module docs for the accepted layouts).
pub fn read_series(path: impl AsRef<Path>) -> Result<Series> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SameError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_series(&text, path)
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros trimmed.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{value:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Renders segments as the tab-separated segment table.
pub fn segment_table(segmentation: &Segmentation) -> String {
    let mut out = String::from(SEGMENT_TABLE_HEADER);
    out.push('\n');
    for seg in &segmentation.segments {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            seg.start,
            seg.end,
            seg.length,
            format_sig6(seg.mean)
        );
    }
    out
}

/// Parses a segment table and checks that its rows tile `[1, n]`.
pub fn parse_segment_table(text: &str, origin: &Path) -> Result<Vec<Segment>> {
    let err = |line: usize, message: String| SameError::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == SEGMENT_TABLE_HEADER => {}
        Some((i, _)) => {
            return Err(err(
                i + 1,
                format!("expected header '{SEGMENT_TABLE_HEADER}'"),
            ))
        }
        None => return Err(err(1, "empty segment table".to_string())),
    }
    let mut segments: Vec<Segment> = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [start, end, length, mean] = fields[..] else {
            return Err(err(
                i + 1,
                format!("expected 4 columns, found {}", fields.len()),
            ));
        };
        let int = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| err(i + 1, format!("cannot parse '{f}' as an index")))
        };
        let seg = Segment {
            start: int(start)?,
            end: int(end)?,
            length: int(length)?,
            mean: mean
                .parse()
                .map_err(|_| err(i + 1, format!("cannot parse '{mean}' as a number")))?,
        };
        let expected_start = segments.last().map_or(1, |s| s.end + 1);
        if seg.start != expected_start
            || seg.end < seg.start
            || seg.length != seg.end - seg.start + 1
        {
            return Err(err(
                i + 1,
                format!(
                    "segment {}..{} does not continue the tiling",
                    seg.start, seg.end
                ),
            ));
        }
        segments.push(seg);
    }
    Ok(segments)
}
