//! Line-oriented text blocks shared by interaction and state serialization.

use std::collections::BTreeMap;
use std::fmt::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::C64;

pub(crate) fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Iterator over meaningful lines with 1-based line numbers.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.inner.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
            } else {
                break;
            }
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.skip_blank();
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.trim()))
            }
            None => Err(parse_error(self.last + 1, "unexpected end of input")),
        }
    }
}

/// Parses `keyword k1=v1 k2=v2`, checking the keyword.
pub(crate) fn header(line_no: usize, line: &str, keyword: &str) -> Result<BTreeMap<String, String>> {
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(k) if k == keyword => {}
        other => {
            return Err(parse_error(
                line_no,
                format!("expected `{keyword}`, found `{}`", other.unwrap_or("")),
            ))
        }
    }
    let mut out = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| parse_error(line_no, format!("expected key=value, found `{p}`")))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

pub(crate) fn field<'m>(
    map: &'m BTreeMap<String, String>,
    line_no: usize,
    key: &str,
) -> Result<&'m str> {
    map.get(key)
        .map(|s| s.as_str())
        .ok_or_else(|| parse_error(line_no, format!("missing `{key}`")))
}

pub(crate) fn parse_num<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_error(line_no, format!("cannot parse `{s}`")))
}

pub(crate) fn parse_list<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| parse_num(line_no, x.trim())).collect()
}

pub(crate) fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per line: `re im re im ...`.
pub(crate) fn write_matrix(out: &mut String, m: &DMatrix<C64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{} {}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub(crate) fn read_matrix(lines: &mut Lines<'_>, rows: usize, cols: usize) -> Result<DMatrix<C64>> {
    let mut m = DMatrix::from_element(rows, cols, C64::new(0.0, 0.0));
    for i in 0..rows {
        let (no, line) = lines.next_line()?;
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| parse_num(no, t))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * cols {
            return Err(parse_error(
                no,
                format!("expected {} numbers, found {}", 2 * cols, nums.len()),
            ));
        }
        for j in 0..cols {
            m[(i, j)] = C64::new(nums[2 * j], nums[2 * j + 1]);
        }
    }
    Ok(m)
}

pub(crate) fn expect_end(lines: &mut Lines<'_>) -> Result<()> {
    let (no, line) = lines.next_line()?;
    if line != "end" {
        return Err(parse_error(no, format!("expected `end`, found `{line}`")));
    }
    Ok(())
}
