//! Table geometry derived from pocket detections.

use alloc::vec::Vec;

use crate::billiards::{BoundaryName, PocketName};
use crate::math::Vec2;
use crate::propagation::BoxRect;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("expected exactly 6 pocket detections, got {0}")]
    WrongPocketCount(usize),
    #[error("pocket layout ambiguous: top and bottom rows overlap")]
    AmbiguousLayout,
    #[error("buffer zones must lie strictly inside the playing field")]
    BufferTooWide,
}

/// The four rail lines, the named pockets and the rebound buffer setup.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGeometry {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
    pub buffer_margin: f64,
    pub near_pocket_radius: f64,
    pub pockets: Vec<(PocketName, Vec2)>,
}

/// Resolves the six pocket boxes into a named layout purely by position:
/// three smallest centers by y form the top row, left/middle/right by x
/// within each row. Input order does not matter.
pub fn derive_geometry(
    pocket_boxes: &[BoxRect],
    buffer_margin: f64,
    near_pocket_radius: f64,
) -> Result<TableGeometry, GeometryError> {
    if pocket_boxes.len() != 6 {
        return Err(GeometryError::WrongPocketCount(pocket_boxes.len()));
    }
    let mut centers: Vec<Vec2> = pocket_boxes
        .iter()
        .map(|b| {
            let (x, y) = b.center();
            Vec2::new(x, y)
        })
        .collect();
    centers.sort_by(|a, b| a.y.total_cmp(&b.y));
    let (top_row, bottom_row) = centers.split_at(3);
    let mut top_row = top_row.to_vec();
    let mut bottom_row = bottom_row.to_vec();
    if top_row.iter().map(|c| c.y).fold(f64::MIN, f64::max)
        >= bottom_row.iter().map(|c| c.y).fold(f64::MAX, f64::min)
    {
        return Err(GeometryError::AmbiguousLayout);
    }
    top_row.sort_by(|a, b| a.x.total_cmp(&b.x));
    bottom_row.sort_by(|a, b| a.x.total_cmp(&b.x));

    let top = (top_row[0].y + top_row[1].y + top_row[2].y) / 3.0;
    let bottom = (bottom_row[0].y + bottom_row[1].y + bottom_row[2].y) / 3.0;
    let left = (top_row[0].x + bottom_row[0].x) / 2.0;
    let right = (top_row[2].x + bottom_row[2].x) / 2.0;

    if buffer_margin >= (bottom - top) / 2.0 || buffer_margin >= (right - left) / 2.0 {
        return Err(GeometryError::BufferTooWide);
    }

    let named = [
        (PocketName::TL, top_row[0]),
        (PocketName::TM, top_row[1]),
        (PocketName::TR, top_row[2]),
        (PocketName::BL, bottom_row[0]),
        (PocketName::BM, bottom_row[1]),
        (PocketName::BR, bottom_row[2]),
    ];

    Ok(TableGeometry {
        top,
        bottom,
        left,
        right,
        buffer_margin,
        near_pocket_radius,
        pockets: named.to_vec(),
    })
}

impl TableGeometry {
    /// Inward distance from a rail line; negative means outside the field.
    pub fn distance_to_boundary(&self, pos: Vec2, boundary: BoundaryName) -> f64 {
        match boundary {
            BoundaryName::Left => pos.x - self.left,
            BoundaryName::Right => self.right - pos.x,
            BoundaryName::Top => pos.y - self.top,
            BoundaryName::Bottom => self.bottom - pos.y,
        }
    }

    /// The buffer zone containing `pos`, preferring the nearest rail when
    /// two zones overlap in a corner.
    pub fn zone_of(&self, pos: Vec2) -> Option<BoundaryName> {
        let mut best: Option<(BoundaryName, f64)> = None;
        for b in [
            BoundaryName::Left,
            BoundaryName::Right,
            BoundaryName::Top,
            BoundaryName::Bottom,
        ] {
            let d = self.distance_to_boundary(pos, b);
            if d <= self.buffer_margin && best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((b, d));
            }
        }
        best.map(|(b, _)| b)
    }

    /// Velocity component toward the given rail (positive = approaching).
    pub fn toward_component(&self, vel: Vec2, boundary: BoundaryName) -> f64 {
        match boundary {
            BoundaryName::Left => -vel.x,
            BoundaryName::Right => vel.x,
            BoundaryName::Top => -vel.y,
            BoundaryName::Bottom => vel.y,
        }
    }

    /// Velocity component parallel to the given rail.
    pub fn parallel_component(&self, vel: Vec2, boundary: BoundaryName) -> f64 {
        match boundary {
            BoundaryName::Left | BoundaryName::Right => vel.y,
            BoundaryName::Top | BoundaryName::Bottom => vel.x,
        }
    }

    pub fn nearest_pocket(&self, pos: Vec2) -> (PocketName, Vec2, f64) {
        let mut best = (self.pockets[0].0, self.pockets[0].1, f64::MAX);
        for &(name, center) in &self.pockets {
            let d = pos.distance(center);
            if d < best.2 {
                best = (name, center, d);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiards::TableSpec;
    use crate::math::abs;

    fn pocket_boxes(table: &TableSpec) -> Vec<BoxRect> {
        table
            .pockets()
            .iter()
            .map(|(_, c)| BoxRect {
                x_min: (c.x - table.pocket_radius) as f32,
                y_min: (c.y - table.pocket_radius) as f32,
                x_max: (c.x + table.pocket_radius) as f32,
                y_max: (c.y + table.pocket_radius) as f32,
            })
            .collect()
    }

    #[test]
    fn axis_aligned_table_boundaries_match_edges() {
        let table = TableSpec::standard(800.0, 400.0);
        let g = derive_geometry(&pocket_boxes(&table), 15.0, 40.0).unwrap();
        assert!(abs(g.top - 0.0) < 0.5);
        assert!(abs(g.bottom - 400.0) < 0.5);
        assert!(abs(g.left - 0.0) < 0.5);
        assert!(abs(g.right - 800.0) < 0.5);
        let (name, _, d) = g.nearest_pocket(Vec2::new(10.0, 10.0));
        assert_eq!(name, PocketName::TL);
        assert!(d < 20.0);
    }

    #[test]
    fn five_pockets_is_an_error() {
        let table = TableSpec::standard(800.0, 400.0);
        let mut boxes = pocket_boxes(&table);
        boxes.pop();
        assert_eq!(
            derive_geometry(&boxes, 15.0, 40.0),
            Err(GeometryError::WrongPocketCount(5))
        );
    }

    #[test]
    fn permuted_input_yields_identical_geometry() {
        let table = TableSpec::standard(800.0, 400.0);
        let boxes = pocket_boxes(&table);
        let a = derive_geometry(&boxes, 15.0, 40.0).unwrap();
        // Try a handful of permutations.
        let orders: [[usize; 6]; 3] = [[5, 4, 3, 2, 1, 0], [2, 0, 4, 1, 5, 3], [3, 5, 0, 4, 2, 1]];
        for order in orders {
            let permuted: Vec<BoxRect> = order.iter().map(|&i| boxes[i]).collect();
            assert_eq!(derive_geometry(&permuted, 15.0, 40.0).unwrap(), a);
        }
    }

    #[test]
    fn zone_lookup_picks_nearest_rail() {
        let table = TableSpec::standard(800.0, 400.0);
        let g = derive_geometry(&pocket_boxes(&table), 25.0, 40.0).unwrap();
        assert_eq!(g.zone_of(Vec2::new(10.0, 200.0)), Some(BoundaryName::Left));
        assert_eq!(g.zone_of(Vec2::new(400.0, 390.0)), Some(BoundaryName::Bottom));
        assert_eq!(g.zone_of(Vec2::new(400.0, 200.0)), None);
        // Corner: closer to the left rail than the top one.
        assert_eq!(g.zone_of(Vec2::new(5.0, 20.0)), Some(BoundaryName::Left));
    }
}
