//! Flat parameter vector with named views.

use std::ops::Range;

use crate::error::{Error, Result};

/// A flat `Vec<f64>` of parameters plus named index ranges.
///
/// Views are disjoint and jointly cover `0..len()`; the constructor enforces
/// this so a view lookup can never alias or miss parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: Vec<f64>,
    views: Vec<(String, Range<usize>)>,
}

impl Params {
    /// Builds a parameter vector, validating the view layout.
    pub fn new(values: Vec<f64>, views: Vec<(String, Range<usize>)>) -> Result<Self> {
        let mut sorted: Vec<&Range<usize>> = views.iter().map(|(_, r)| r).collect();
        sorted.sort_by_key(|r| r.start);
        let mut cursor = 0;
        for r in sorted {
            if r.start != cursor {
                return Err(Error::Invalid(format!(
                    "parameter views must tile 0..{} without gaps or overlap (hole at {})",
                    values.len(),
                    cursor
                )));
            }
            cursor = r.end;
        }
        if cursor != values.len() {
            return Err(Error::Invalid(format!(
                "parameter views cover 0..{cursor} but there are {} values",
                values.len()
            )));
        }
        Ok(Self { values, views })
    }

    /// All-zero parameters with the given layout.
    pub fn zeros(len: usize, views: Vec<(String, Range<usize>)>) -> Self {
        Self::new(vec![0.0; len], views).expect("field supplied an inconsistent view layout")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn views(&self) -> &[(String, Range<usize>)] {
        &self.views
    }

    /// Slice of the named view; `None` when the name is unknown.
    pub fn view(&self, name: &str) -> Option<&[f64]> {
        self.views
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| &self.values[r.clone()])
    }

    /// Mutable slice of the named view.
    pub fn view_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let r = self
            .views
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.clone())?;
        Some(&mut self.values[r])
    }

    /// RMS of `self - other` over all entries.
    pub fn rms_distance(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len());
        if self.is_empty() {
            return 0.0;
        }
        let ss: f64 = self
            .values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (ss / self.len() as f64).sqrt()
    }
}
