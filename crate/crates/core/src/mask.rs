//! Binary segmentation masks stored as a tight bounding box plus a bitmap.

use alloc::vec;
use alloc::vec::Vec;

/// A per-object binary mask.
///
/// Pixels are addressed in absolute image coordinates; only the bounding box
/// of the object is materialized. Equality is pixel-exact, which is what the
/// determinism checks rely on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    origin_x: i32,
    origin_y: i32,
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    /// Builds a mask over the given bounding box, setting each pixel for
    /// which `f(x, y)` (absolute coordinates) returns true.
    pub fn from_fn(
        origin_x: i32,
        origin_y: i32,
        width: u32,
        height: u32,
        mut f: impl FnMut(i32, i32) -> bool,
    ) -> Self {
        let mut bits = vec![false; (width as usize) * (height as usize)];
        for row in 0..height {
            for col in 0..width {
                let x = origin_x + col as i32;
                let y = origin_y + row as i32;
                bits[(row * width + col) as usize] = f(x, y);
            }
        }
        Mask {
            origin_x,
            origin_y,
            width,
            height,
            bits,
        }
    }

    pub fn empty() -> Self {
        Mask {
            origin_x: 0,
            origin_y: 0,
            width: 0,
            height: 0,
            bits: Vec::new(),
        }
    }

    pub fn get(&self, x: i32, y: i32) -> bool {
        let col = x - self.origin_x;
        let row = y - self.origin_y;
        if col < 0 || row < 0 || col >= self.width as i32 || row >= self.height as i32 {
            return false;
        }
        self.bits[(row as u32 * self.width + col as u32) as usize]
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Arithmetic mean of set-pixel coordinates, `None` for an empty mask.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0u64;
        let (mut sx, mut sy) = (0i64, 0i64);
        for row in 0..self.height {
            for col in 0..self.width {
                if self.bits[(row * self.width + col) as usize] {
                    n += 1;
                    sx += (self.origin_x + col as i32) as i64;
                    sy += (self.origin_y + row as i32) as i64;
                }
            }
        }
        if n == 0 {
            None
        } else {
            Some((sx as f64 / n as f64, sy as f64 / n as f64))
        }
    }

    /// Tight bounding box of set pixels as `(x_min, y_min, x_max, y_max)`
    /// inclusive, `None` for an empty mask.
    pub fn bounds(&self) -> Option<(i32, i32, i32, i32)> {
        let mut b: Option<(i32, i32, i32, i32)> = None;
        for row in 0..self.height {
            for col in 0..self.width {
                if self.bits[(row * self.width + col) as usize] {
                    let x = self.origin_x + col as i32;
                    let y = self.origin_y + row as i32;
                    b = Some(match b {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        b
    }

    /// Morphological erosion with a square structuring element of Chebyshev
    /// radius `px`; out-of-box neighbours count as unset.
    pub fn eroded(&self, px: u32) -> Mask {
        if px == 0 {
            return self.clone();
        }
        let r = px as i32;
        Mask::from_fn(self.origin_x, self.origin_y, self.width, self.height, |x, y| {
            for dy in -r..=r {
                for dx in -r..=r {
                    if !self.get(x + dx, y + dy) {
                        return false;
                    }
                }
            }
            true
        })
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Mask {
        Mask {
            origin_x: self.origin_x + dx,
            origin_y: self.origin_y + dy,
            width: self.width,
            height: self.height,
            bits: self.bits.clone(),
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (0..self.height).flat_map(move |row| {
            (0..self.width).filter_map(move |col| {
                if self.bits[(row * self.width + col) as usize] {
                    Some((self.origin_x + col as i32, self.origin_y + row as i32))
                } else {
                    None
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::abs;

    #[test]
    fn solid_square_centroid() {
        // 10x10 solid square at the origin: mean of 0..=9 is 4.5 on both axes.
        let m = Mask::from_fn(0, 0, 10, 10, |_, _| true);
        assert_eq!(m.area(), 100);
        assert_eq!(m.centroid(), Some((4.5, 4.5)));
    }

    #[test]
    fn disk_centroid_matches_center() {
        let (cx, cy, r) = (100.0, 50.0, 7.0);
        let m = Mask::from_fn(90, 40, 21, 21, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        });
        let (gx, gy) = m.centroid().unwrap();
        assert!(abs(gx - cx) < 0.5 && abs(gy - cy) < 0.5);
    }

    #[test]
    fn l_shape_centroid_matches_enumeration() {
        // L-shape: vertical bar 2x6 at (0,0) plus horizontal bar 4x2 at (2,4).
        let in_l = |x: i32, y: i32| (0..2).contains(&x) && (0..6).contains(&y)
            || (2..6).contains(&x) && (4..6).contains(&y);
        let m = Mask::from_fn(0, 0, 6, 6, in_l);

        // Independent oracle: exhaustive pixel enumeration.
        let (mut n, mut sx, mut sy) = (0i64, 0i64, 0i64);
        for y in 0..6 {
            for x in 0..6 {
                if in_l(x, y) {
                    n += 1;
                    sx += x as i64;
                    sy += y as i64;
                }
            }
        }
        let expect = (sx as f64 / n as f64, sy as f64 / n as f64);
        assert_eq!(m.centroid(), Some(expect));
    }

    #[test]
    fn centroid_translates_exactly() {
        let m = Mask::from_fn(3, 3, 5, 4, |x, y| (x + y) % 3 != 0);
        let (cx, cy) = m.centroid().unwrap();
        let (tx, ty) = m.translated(11, -4).centroid().unwrap();
        assert!(abs(tx - (cx + 11.0)) < 1e-9 && abs(ty - (cy - 4.0)) < 1e-9);
    }

    #[test]
    fn erosion_shrinks_and_empty_centroid_is_none() {
        let m = Mask::from_fn(0, 0, 5, 5, |_, _| true);
        let e = m.eroded(1);
        assert_eq!(e.area(), 9);
        assert_eq!(e.bounds(), Some((1, 1, 3, 3)));
        assert!(Mask::empty().centroid().is_none());
    }
}
