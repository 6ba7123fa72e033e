use std::fmt::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::text::fmt_f64;

/// Least-squares fit of `value(n) = p + c₁/n + … + c_k/n^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    pub residual: f64,
    pub degree: usize,
}

/// Finite-n values with the metadata describing where they came from.
#[derive(Clone, Debug, Default)]
pub struct PressureSequence {
    pub label: String,
    pub metadata: Vec<(String, String)>,
    entries: Vec<(usize, f64)>,
    extrapolation: Option<Extrapolation>,
}

impl PressureSequence {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn from_entries(label: impl Into<String>, entries: &[(usize, f64)]) -> Result<Self> {
        let mut seq = Self::new(label);
        for &(n, v) in entries {
            seq.push(n, v)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, n: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value at n = {n}")));
        }
        if let Some(&(last, _)) = self.entries.last() {
            if n <= last {
                return Err(Error::InvalidArgument(format!(
                    "n must increase strictly ({n} after {last})"
                )));
            }
        }
        self.entries.push((n, value));
        self.extrapolation = None;
        Ok(())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == n).map(|e| e.1)
    }

    pub fn extrapolation(&self) -> Option<Extrapolation> {
        self.extrapolation
    }

    /// Extrapolated limit when one is stored, last entry otherwise.
    pub fn best_estimate(&self) -> Option<f64> {
        self.extrapolation
            .map(|e| e.limit)
            .or_else(|| self.last_value())
    }

    /// CSV with header `n,value` and `#`-prefixed metadata lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value\n");
        for (n, v) in &self.entries {
            let _ = writeln!(out, "{n},{}", fmt_f64(*v));
        }
        if !self.label.is_empty() {
            let _ = writeln!(out, "# label = {}", self.label);
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        if let Some(e) = self.extrapolation {
            let _ = writeln!(out, "# extrapolated_limit = {}", fmt_f64(e.limit));
            let _ = writeln!(out, "# fit_residual = {}", fmt_f64(e.residual));
            let _ = writeln!(out, "# fit_degree = {}", e.degree);
        }
        out
    }
}

/// Fits `p + c/n` and stores the result in the sequence.
pub fn extrapolate_limit(seq: &mut PressureSequence) -> Result<Extrapolation> {
    extrapolate_with_degree(seq, 1)
}

pub fn extrapolate_with_degree(seq: &mut PressureSequence, degree: usize) -> Result<Extrapolation> {
    let needed = (degree + 2).max(3);
    if seq.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            got: seq.len(),
        });
    }
    let rows = seq.len();
    let a = DMatrix::from_fn(rows, degree + 1, |i, j| {
        (seq.entries[i].0 as f64).powi(-(j as i32))
    });
    let b = DVector::from_iterator(rows, seq.entries.iter().map(|e| e.1));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let fit = &a * &coef;
    let residual = ((&fit - &b).norm_squared() / rows as f64).sqrt();
    let e = Extrapolation {
        limit: coef[0],
        residual,
        degree,
    };
    seq.extrapolation = Some(e);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence() {
        let mut s = PressureSequence::from_entries("c", &[(2, 0.7), (3, 0.7), (5, 0.7)]).unwrap();
        let e = extrapolate_limit(&mut s).unwrap();
        assert!((e.limit - 0.7).abs() < 1e-14);
        assert!(e.residual < 1e-14);
    }

    #[test]
    fn exact_fit_class() {
        let entries: Vec<(usize, f64)> = (3..10).map(|n| (n, 2.0 + 3.0 / n as f64)).collect();
        let mut s = PressureSequence::from_entries("fit", &entries).unwrap();
        let e = extrapolate_limit(&mut s).unwrap();
        assert!((e.limit - 2.0).abs() < 1e-12);
        assert!(e.residual <= 1e-12);
        assert_eq!(s.extrapolation(), Some(e));
    }

    #[test]
    fn too_few_points() {
        let mut s = PressureSequence::from_entries("x", &[(1, 1.0), (2, 1.0)]).unwrap();
        assert!(matches!(
            extrapolate_limit(&mut s),
            Err(Error::TooFewPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn rejects_non_increasing_and_non_finite() {
        let mut s = PressureSequence::new("x");
        s.push(3, 1.0).unwrap();
        assert!(s.push(3, 1.0).is_err());
        assert!(s.push(4, f64::INFINITY).is_err());
    }

    #[test]
    fn csv_has_header_and_metadata() {
        let mut s = PressureSequence::from_entries("p", &[(1, 0.5), (2, 0.25), (3, 0.125)])
            .unwrap()
            .with_meta("state", "tracial");
        extrapolate_limit(&mut s).unwrap();
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,value"));
        assert_eq!(lines.next(), Some("1,5.0000000000000000e-1"));
        assert!(csv.contains("# state = tracial"));
        assert!(csv.contains("# extrapolated_limit = "));
        let parsed: f64 = "5.0000000000000000e-1".parse().unwrap();
        assert_eq!(parsed, 0.5);
    }
}
