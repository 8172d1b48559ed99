//! Regular grids over a geodetic box.

use super::IngestError;
use crate::geometry::{GeoBox, LocalFrame};
use crate::layer::{PhysicalKind, PhysicalLayer, PhysicalObject};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_CELLS: usize = 1_000_000;

/// Square cells of `cell` meters tiling the projected region, starting at
/// its south-west corner. The last row and column are clipped to the
/// region. Object ids run row by row from the south.
pub fn make_grid(
    name: &str,
    region: &GeoBox,
    cell: f64,
    frame: &LocalFrame,
    max_cells: usize,
) -> Result<PhysicalLayer, IngestError> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(IngestError::InvalidConfig(format!("grid cell must be positive, got {cell}")));
    }
    if !region.is_valid() || region.lat_min >= region.lat_max || region.lon_min >= region.lon_max {
        return Err(IngestError::InvalidConfig("grid region is degenerate".into()));
    }
    let b = region.project(frame);
    // projection round-off must not add a sliver row or column
    let count = |len: f64| (len / cell - 1e-6).ceil().max(1.0);
    let cols = count(b.width());
    let rows = count(b.height());
    if cols * rows > max_cells as f64 {
        return Err(IngestError::TooManyCells { cells: (cols * rows) as u64, limit: max_cells });
    }
    let (cols, rows) = (cols as usize, rows as usize);
    let mut objects = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        let y0 = b.min.y + r as f64 * cell;
        let y1 = if r + 1 == rows { b.max.y } else { y0 + cell };
        for c in 0..cols {
            let x0 = b.min.x + c as f64 * cell;
            let x1 = if c + 1 == cols { b.max.x } else { x0 + cell };
            let mut obj = PhysicalObject {
                object_id: (r * cols + c) as u32,
                coordinates: vec![x0, y0, 0.0, x1, y0, 0.0, x1, y1, 0.0, x0, y1, 0.0],
                rings: vec![4],
                ..Default::default()
            };
            obj.attributes.insert("row".into(), Scalar::number(r as f64));
            obj.attributes.insert("col".into(), Scalar::number(c as f64));
            objects.push(obj);
        }
    }
    Ok(PhysicalLayer::new(name, PhysicalKind::Grid, *frame, objects))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(w: f64, h: f64, frame: &LocalFrame) -> GeoBox {
        let (lat0, lon0, _) = frame.unproject(crate::Vec3::new(0.0, 0.0, 0.0));
        let (lat1, lon1, _) = frame.unproject(crate::Vec3::new(w, h, 0.0));
        GeoBox::new(lat0, lon0, lat1, lon1)
    }

    #[test]
    fn hundred_meters_at_ten() {
        let f = LocalFrame::new(41.88, -87.63);
        let g = make_grid("g", &region(100.0, 100.0, &f), 10.0, &f, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(g.objects.len(), 100);
        g.validate().unwrap();
    }

    #[test]
    fn oversized_cell_covers_region() {
        let f = LocalFrame::new(41.88, -87.63);
        let g = make_grid("g", &region(30.0, 20.0, &f), 500.0, &f, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(g.objects.len(), 1);
        let bb = g.objects[0].bbox();
        assert!((bb.width() - 30.0).abs() < 1e-6 && (bb.height() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn too_many_cells() {
        let f = LocalFrame::new(0.0, 0.0);
        let r = make_grid("g", &region(1000.0, 1000.0, &f), 0.5, &f, DEFAULT_MAX_CELLS);
        assert!(matches!(r, Err(IngestError::TooManyCells { .. })));
    }
}
