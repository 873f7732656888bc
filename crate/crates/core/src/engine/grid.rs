use crate::geo::Point;

/// Uniform bucket grid over household locations for radius queries.
#[derive(Debug, Clone)]
pub(crate) struct SpatialGrid {
    origin: Point,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
    points: Vec<Point>,
}

impl SpatialGrid {
    pub(crate) fn new(points: &[Point], cell: f64) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 0.0, 0.0);
        }
        let cols = ((max_x - min_x) / cell).floor() as usize + 1;
        let rows = ((max_y - min_y) / cell).floor() as usize + 1;
        let mut grid = SpatialGrid {
            origin: Point::new(min_x, min_y),
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
            points: points.to_vec(),
        };
        for (i, p) in points.iter().enumerate() {
            let (c, r) = grid.cell_of(p);
            grid.buckets[r * cols + c].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let c = ((p.x - self.origin.x) / self.cell)
            .floor()
            .clamp(0.0, (self.cols - 1) as f64);
        let r = ((p.y - self.origin.y) / self.cell)
            .floor()
            .clamp(0.0, (self.rows - 1) as f64);
        (c as usize, r as usize)
    }

    /// Indices of points within `radius` of `center`, appended to `out` in
    /// unspecified order.
    pub(crate) fn within(&self, center: Point, radius: f64, out: &mut Vec<usize>) {
        let span = |v: f64, o: f64, n: usize| {
            let lo = ((v - radius - o) / self.cell).floor();
            let hi = ((v + radius - o) / self.cell).floor();
            if hi < 0.0 || lo > (n - 1) as f64 {
                None
            } else {
                Some((lo.max(0.0) as usize, hi.min((n - 1) as f64) as usize))
            }
        };
        let (Some((c0, c1)), Some((r0, r1))) = (
            span(center.x, self.origin.x, self.cols),
            span(center.y, self.origin.y, self.rows),
        ) else {
            return;
        };
        for r in r0..=r1 {
            for c in c0..=c1 {
                for &i in &self.buckets[r * self.cols + c] {
                    if self.points[i as usize].distance(&center) <= radius {
                        out.push(i as usize);
                    }
                }
            }
        }
    }
}
