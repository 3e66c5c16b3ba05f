//! Axis-aligned boxes in image pixel coordinates (origin top-left).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner-form bounding box: `(x_min, y_min, x_max, y_max)` in pixels.
///
/// Valid boxes have strictly positive width and height and finite,
/// non-negative coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    /// Builds a box, rejecting inverted, zero-area, negative or non-finite
    /// coordinates.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = BBox { x_min, y_min, x_max, y_max };
        b.validate("BBox::new")?;
        Ok(b)
    }

    pub(crate) fn validate(&self, context: &str) -> Result<()> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::BoxOutOfBounds {
                context: context.to_string(),
                reason: "non-finite coordinate".to_string(),
            });
        }
        if coords.iter().any(|&c| c < 0.0) {
            return Err(Error::BoxOutOfBounds {
                context: context.to_string(),
                reason: "negative coordinate".to_string(),
            });
        }
        if self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::BoxOutOfBounds {
                context: context.to_string(),
                reason: format!(
                    "requires x_min < x_max and y_min < y_max, got [{}, {}, {}, {}]",
                    self.x_min, self.y_min, self.x_max, self.y_max
                ),
            });
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Intersection area with `other`; 0 when disjoint.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersects with the image rectangle `[0, w] x [0, h]`.
    /// Returns `None` when nothing with positive area remains.
    pub fn clip(&self, width: u32, height: u32) -> Option<BBox> {
        let b = BBox {
            x_min: self.x_min.max(0.0),
            y_min: self.y_min.max(0.0),
            x_max: self.x_max.min(width as f64),
            y_max: self.y_max.min(height as f64),
        };
        (b.x_min < b.x_max && b.y_min < b.y_max).then_some(b)
    }

    /// True when the box lies fully inside an image of the given dimensions.
    pub fn inside(&self, width: u32, height: u32) -> bool {
        self.x_min >= 0.0
            && self.y_min >= 0.0
            && self.x_max <= width as f64
            && self.y_max <= height as f64
    }

    /// Serialized array form used by the manifest schema.
    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    /// Total order on the coordinate tuple. Used for deterministic
    /// tie-breaking in score sorts.
    pub fn lex_cmp(&self, other: &BBox) -> std::cmp::Ordering {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| !o.is_eq())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Intersection over union of two valid boxes. 0 when disjoint, 1 when equal.
pub fn bbox_iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}
