//! Sliding window of per-frame scales and the Gaussian + median filter.

use std::collections::VecDeque;

use super::ScaleError;

/// FIFO of the last `capacity` raw scales.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleQueue {
    values: VecDeque<f64>,
    capacity: usize,
    sigma: f64,
}

impl ScaleQueue {
    pub fn new(capacity: usize, sigma: f64) -> Result<Self, ScaleError> {
        if capacity == 0 {
            return Err(ScaleError::InvalidParameter("window length must be at least 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ScaleError::InvalidParameter("filter sigma must be positive"));
        }
        Ok(Self { values: VecDeque::with_capacity(capacity), capacity, sigma })
    }

    /// Queue pre-filled with `values` (oldest first); only the last
    /// `capacity` are kept.
    pub fn from_values(values: &[f64], capacity: usize, sigma: f64) -> Result<Self, ScaleError> {
        let mut q = Self::new(capacity, sigma)?;
        for &v in values {
            q.push(v)?;
        }
        Ok(q)
    }

    pub fn push(&mut self, scale: f64) -> Result<(), ScaleError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ScaleError::NonPositiveScale(scale));
        }
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(scale);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }
}

/// Half-sample symmetric reflection of an index into `0..len`.
fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Discrete Gaussian smoothing with a centered kernel of `2r + 1` taps,
/// `r = (len - 1) / 2`, normalized weights and reflective boundary.
///
/// Each output is clamped to the range of the samples it combines, which it
/// lies in exactly; the clamp only removes rounding.
pub fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    let len = values.len();
    let radius = (len.saturating_sub(1) / 2) as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();

    (0..len as isize)
        .map(|i| {
            let mut acc = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (w, k) in weights.iter().zip(-radius..=radius) {
                let v = values[reflect(i + k, len)];
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (acc / total).clamp(lo, hi)
        })
        .collect()
}

/// Lower median (the `(n - 1) / 2`-th order statistic).
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Gaussian smoothing of the window followed by its median.
pub fn mixed_filter(queue: &ScaleQueue) -> Result<f64, ScaleError> {
    if queue.is_empty() {
        return Err(ScaleError::EmptyQueue);
    }
    let smoothed = gaussian_smooth(&queue.values(), queue.sigma);
    lower_median(&smoothed).ok_or(ScaleError::EmptyQueue)
}
