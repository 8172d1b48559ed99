//! Candidate-generating spatial indexes over boxes in the workspace plane.
//!
//! Queries return a sorted, de-duplicated superset of the true matches;
//! callers refine candidates with the exact predicates.

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::{Deserialize, Serialize};

use super::vec::{Aabb2, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    UniformGrid,
    Rtree,
}

#[derive(Debug, Clone)]
pub struct UniformGrid {
    bounds: Aabb2,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
}

type BoxEntry = GeomWithData<Rectangle<[f64; 2]>, usize>;

#[derive(Debug, Clone)]
pub enum SpatialIndex {
    Empty,
    Grid(UniformGrid),
    Rtree(RTree<BoxEntry>),
}

const MAX_GRID_CELLS: usize = 1 << 20;

impl UniformGrid {
    fn build(items: &[Aabb2]) -> UniformGrid {
        let bounds = items.iter().fold(Aabb2::empty(), |acc, b| acc.union(b));
        let extent = bounds.width().max(bounds.height());
        let n = items.len().max(1) as f64;
        let mut cell = if extent > 0.0 { extent / n.sqrt().ceil() } else { 1.0 };
        let mean_size = items.iter().map(|b| b.width().max(b.height())).sum::<f64>() / n;
        cell = cell.max(mean_size).max(f64::MIN_POSITIVE);
        let dims = |cell: f64| {
            (
                ((bounds.width() / cell).floor() as usize + 1),
                ((bounds.height() / cell).floor() as usize + 1),
            )
        };
        let (mut cols, mut rows) = dims(cell);
        while cols * rows > MAX_GRID_CELLS {
            cell *= 2.0;
            (cols, rows) = dims(cell);
        }
        let mut grid = UniformGrid { bounds, cell, cols, rows, cells: vec![Vec::new(); cols * rows] };
        for (i, b) in items.iter().enumerate() {
            if let Some((c0, r0, c1, r1)) = grid.cell_range(b) {
                for r in r0..=r1 {
                    for c in c0..=c1 {
                        grid.cells[r * cols + c].push(i as u32);
                    }
                }
            }
        }
        grid
    }

    fn cell_range(&self, b: &Aabb2) -> Option<(usize, usize, usize, usize)> {
        if !self.bounds.intersects(b) {
            return None;
        }
        let to_col = |x: f64| (((x - self.bounds.min.x) / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let to_row = |y: f64| (((y - self.bounds.min.y) / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        Some((to_col(b.min.x), to_row(b.min.y), to_col(b.max.x), to_row(b.max.y)))
    }

    fn query(&self, probe: &Aabb2) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some((c0, r0, c1, r1)) = self.cell_range(probe) {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    out.extend(self.cells[r * self.cols + c].iter().map(|&i| i as usize));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl SpatialIndex {
    /// Builds an index over item boxes; item `i` is reported as candidate `i`.
    pub fn build(items: &[Aabb2], kind: IndexKind) -> SpatialIndex {
        if items.is_empty() {
            return SpatialIndex::Empty;
        }
        match kind {
            IndexKind::UniformGrid => SpatialIndex::Grid(UniformGrid::build(items)),
            IndexKind::Rtree => {
                let entries = items
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        GeomWithData::new(Rectangle::from_corners([b.min.x, b.min.y], [b.max.x, b.max.y]), i)
                    })
                    .collect();
                SpatialIndex::Rtree(RTree::bulk_load(entries))
            }
        }
    }

    pub fn build_points(points: &[Vec2], kind: IndexKind) -> SpatialIndex {
        let boxes: Vec<Aabb2> = points.iter().map(|&p| Aabb2::from_point(p)).collect();
        SpatialIndex::build(&boxes, kind)
    }

    /// Candidates whose boxes intersect `probe`, ascending.
    pub fn query(&self, probe: &Aabb2) -> Vec<usize> {
        match self {
            SpatialIndex::Empty => Vec::new(),
            SpatialIndex::Grid(g) => g.query(probe),
            SpatialIndex::Rtree(t) => {
                let env = AABB::from_corners([probe.min.x, probe.min.y], [probe.max.x, probe.max.y]);
                let mut out: Vec<usize> = t.locate_in_envelope_intersecting(&env).map(|e| e.data).collect();
                out.sort_unstable();
                out
            }
        }
    }
}

type PointEntry = GeomWithData<[f64; 3], usize>;

/// Exact nearest-neighbour search over 3D points, ties resolved to the
/// lowest index.
#[derive(Debug, Clone)]
pub struct PointNearest {
    tree: RTree<PointEntry>,
}

impl PointNearest {
    pub fn new(points: &[Vec3]) -> PointNearest {
        let entries = points.iter().enumerate().map(|(i, p)| GeomWithData::new(p.to_array(), i)).collect();
        PointNearest { tree: RTree::bulk_load(entries) }
    }

    pub fn is_empty(&self) -> bool {
        self.tree.size() == 0
    }

    /// Index and squared distance of the nearest point.
    pub fn nearest(&self, q: Vec3) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (entry, d2) in self.tree.nearest_neighbor_iter_with_distance_2(&q.to_array()) {
            match best {
                None => best = Some((entry.data, d2)),
                Some((bi, bd)) => {
                    if d2 > bd {
                        break;
                    }
                    if entry.data < bi {
                        best = Some((entry.data, bd));
                    }
                }
            }
        }
        best
    }
}

/// Nearest search over arbitrary shapes: candidates are visited in order of
/// their bounding-box distance and refined with the exact distance.
#[derive(Debug, Clone)]
pub struct ShapeNearest {
    tree: RTree<BoxEntry>,
}

impl ShapeNearest {
    pub fn new(boxes: &[Aabb2]) -> ShapeNearest {
        let entries = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| GeomWithData::new(Rectangle::from_corners([b.min.x, b.min.y], [b.max.x, b.max.y]), i))
            .collect();
        ShapeNearest { tree: RTree::bulk_load(entries) }
    }

    /// `exact(i)` returns the squared distance from the query to shape `i`.
    pub fn nearest(&self, q: Vec2, exact: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (entry, lower) in self.tree.nearest_neighbor_iter_with_distance_2(&[q.x, q.y]) {
            if let Some((_, bd)) = best {
                if lower > bd {
                    break;
                }
            }
            let d2 = exact(entry.data);
            best = match best {
                None => Some((entry.data, d2)),
                Some((bi, bd)) if d2 < bd || (d2 == bd && entry.data < bi) => Some((entry.data, d2)),
                keep => keep,
            };
        }
        best
    }
}
