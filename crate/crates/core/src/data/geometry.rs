use serde::{Deserialize, Serialize};

use crate::raster::Mask;

/// Axis-aligned pixel rectangle, half-open on `x1`/`y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_valid(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.is_valid() && self.x1 <= width && self.y1 <= height
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        };
        r.is_valid().then_some(r)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("mask has no foreground pixels")]
pub struct EmptyMaskError;

/// Minimal rectangle covering every foreground pixel of `mask`.
pub fn tight_bounding_rect(mask: &Mask) -> Result<Rect, EmptyMaskError> {
    let (w, h) = mask.dims();
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h {
        let row = mask.row(y);
        let Some(first) = row.iter().position(|&b| b) else {
            continue;
        };
        let last = row.iter().rposition(|&b| b).unwrap_or(first);
        x0 = x0.min(first);
        x1 = x1.max(last + 1);
        y0 = y0.min(y);
        y1 = y + 1;
    }
    if x0 == usize::MAX {
        debug_assert!(w == 0 || h == 0 || mask.count() == 0);
        return Err(EmptyMaskError);
    }
    Ok(Rect { x0, y0, x1, y1 })
}
