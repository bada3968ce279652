//! Axis-aligned boxes in normalized image coordinates ([0, 1000] on both axes).

use core::fmt;

use serde::{Deserialize, Serialize};

/// Side length of the normalized image.
pub const IMAGE_EXTENT: i32 = 1000;

/// Integer box `[x1, y1, x2, y2]`; serialized as a 4-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct NormBox {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

impl From<[i32; 4]> for NormBox {
    fn from([x1, y1, x2, y2]: [i32; 4]) -> Self {
        NormBox { x1, y1, x2, y2 }
    }
}

impl From<NormBox> for [i32; 4] {
    fn from(b: NormBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl NormBox {
    pub const fn new(x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        NormBox { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> i32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i32 {
        self.y2 - self.y1
    }

    /// Area, zero for degenerate or inverted boxes.
    pub fn area(&self) -> f64 {
        (self.width().max(0) as f64) * (self.height().max(0) as f64)
    }

    pub fn area_ratio(&self) -> f64 {
        self.area() / (IMAGE_EXTENT as f64 * IMAGE_EXTENT as f64)
    }

    /// Strictly ordered with every coordinate inside the image.
    pub fn is_valid(&self) -> bool {
        let in_range = |v: i32| (0..=IMAGE_EXTENT).contains(&v);
        self.x1 < self.x2
            && self.y1 < self.y2
            && in_range(self.x1)
            && in_range(self.y1)
            && in_range(self.x2)
            && in_range(self.y2)
    }

    /// Minimum distance from any edge to the matching image border.
    pub fn border_margin(&self) -> i32 {
        self.x1
            .min(self.y1)
            .min(IMAGE_EXTENT - self.x2)
            .min(IMAGE_EXTENT - self.y2)
    }

    pub fn iou(&self, other: &NormBox) -> f64 {
        let ix = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0) as f64;
        let iy = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0) as f64;
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

impl fmt::Display for NormBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.x1, self.y1, self.x2, self.y2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn display_matches_answer_grammar() {
        assert_eq!(
            NormBox::new(48, 558, 226, 681).to_string(),
            "[48, 558, 226, 681]"
        );
    }

    #[test]
    fn iou_by_hand() {
        let a = NormBox::new(0, 0, 100, 100);
        let b = NormBox::new(50, 0, 150, 100);
        // inter 50*100, union 15000
        assert!((a.iou(&b) - 5000.0 / 15000.0).abs() < 1e-15);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&NormBox::new(200, 200, 300, 300)), 0.0);
        assert_eq!(a.iou(&NormBox::new(10, 10, 10, 10)), 0.0);
    }

    #[test]
    fn validity() {
        assert!(NormBox::new(0, 0, 1000, 1000).is_valid());
        assert!(!NormBox::new(500, 500, 100, 100).is_valid());
        assert!(!NormBox::new(-1, 0, 10, 10).is_valid());
        assert!(!NormBox::new(0, 0, 10, 1001).is_valid());
        assert_eq!(NormBox::new(12, 30, 900, 995).border_margin(), 5);
    }
}
