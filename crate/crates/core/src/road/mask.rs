use std::collections::BTreeSet;

use super::RoadError;
use crate::geometry::{Pixel, TrackedPoint};
use crate::motion::Correspondence;

/// Per-pixel semantic labels for one image, row-major, one byte per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    pub road_label: u8,
    pub dynamic_labels: BTreeSet<u8>,
}

impl LabelMask {
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u8>,
        road_label: u8,
        dynamic_labels: BTreeSet<u8>,
    ) -> Result<Self, RoadError> {
        if labels.len() != width * height {
            return Err(RoadError::MaskSize { expected: width * height, got: labels.len() });
        }
        Ok(Self { width, height, labels, road_label, dynamic_labels })
    }

    /// A mask filled with a single label.
    pub fn filled(width: usize, height: usize, label: u8, road_label: u8, dynamic_labels: BTreeSet<u8>) -> Self {
        Self { width, height, labels: vec![label; width * height], road_label, dynamic_labels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Option<u8> {
        (x < self.width && y < self.height).then(|| self.labels[y * self.width + x])
    }

    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        if x < self.width && y < self.height {
            self.labels[y * self.width + x] = label;
        }
    }

    /// Integer cell of a sub-pixel location, rounding half up.
    pub fn cell(p: Pixel) -> Option<(usize, usize)> {
        if !p.is_finite() {
            return None;
        }
        let x = (p.u + 0.5).floor();
        let y = (p.v + 0.5).floor();
        (x >= 0.0 && y >= 0.0).then_some((x as usize, y as usize))
    }

    /// Label under a pixel, `None` outside the image.
    pub fn label_at(&self, p: Pixel) -> Option<u8> {
        let (x, y) = Self::cell(p)?;
        self.get(x, y)
    }

    pub fn is_dynamic(&self, p: Pixel) -> Option<bool> {
        self.label_at(p).map(|l| self.dynamic_labels.contains(&l))
    }

    pub fn is_road(&self, p: Pixel) -> Option<bool> {
        self.label_at(p).map(|l| l == self.road_label)
    }
}

/// Drops features that land on a dynamic label or outside the image.
pub fn filter_dynamic(features: &[Pixel], mask: &LabelMask) -> Vec<Pixel> {
    features.iter().copied().filter(|p| mask.is_dynamic(*p) == Some(false)).collect()
}

/// Dynamic filtering of matches, judged on the frame t-1 pixel.
pub fn filter_dynamic_matches(matches: &[Correspondence], mask: &LabelMask) -> Vec<Correspondence> {
    matches.iter().copied().filter(|m| mask.is_dynamic(m.a) == Some(false)).collect()
}

/// Indices of the points whose frame t-1 pixel lies on the road label.
pub fn road_indices(points: &[TrackedPoint], mask: &LabelMask) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| (mask.is_road(p.pixel) == Some(true)).then_some(i))
        .collect()
}

/// Keeps only points whose frame t-1 pixel lies on the road label.
pub fn filter_road(points: &[TrackedPoint], mask: &LabelMask) -> Vec<TrackedPoint> {
    road_indices(points, mask).into_iter().map(|i| points[i]).collect()
}
