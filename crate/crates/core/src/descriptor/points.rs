//! Exact nearest-neighbour queries over a static 2D point set, bucketed on a
//! uniform grid.

#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<[f64; 2]>,
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointIndex {
    pub fn new(points: &[[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let extent = [(hi[0] - lo[0]).max(0.0), (hi[1] - lo[1]).max(0.0)];
        let n = points.len().max(1) as f64;
        let longest = extent[0].max(extent[1]);
        // about one point per cell, degenerating gracefully for collinear sets
        let area = (extent[0] * extent[1]).max(longest * longest / n);
        let cell = (area / n).sqrt().max(longest / 4096.0).max(1e-9);
        let dims = [
            (extent[0] / cell).floor() as usize + 1,
            (extent[1] / cell).floor() as usize + 1,
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let mut index = PointIndex {
            points: points.to_vec(),
            origin: lo,
            cell,
            dims,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(*p);
            buckets[cy * dims[0] + cx].push(i);
        }
        index.buckets = buckets;
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |d: usize| {
            let c = ((p[d] - self.origin[d]) / self.cell).floor();
            c.clamp(0.0, (self.dims[d] - 1) as f64) as usize
        };
        (f(0), f(1))
    }

    /// The `k` points nearest to `q` as `(index, distance)`, ordered by
    /// distance then index. `exclude` skips one point (the query itself).
    pub fn knn(&self, q: [f64; 2], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 || self.points.is_empty() {
            return best;
        }
        let (qx, qy) = self.cell_of(q);
        // distance from q to the boundary of its own cell block, so rings
        // cover everything within `ring * cell + slack`
        let slack = {
            let mut s = f64::INFINITY;
            for d in 0..2 {
                let c = if d == 0 { qx } else { qy } as f64;
                let lo = self.origin[d] + c * self.cell;
                s = s.min(q[d] - lo).min(lo + self.cell - q[d]);
            }
            s.max(0.0)
        };
        let max_ring = self.dims[0].max(self.dims[1]);
        for ring in 0..=max_ring {
            let r = ring as i64;
            for cy in (qy as i64 - r)..=(qy as i64 + r) {
                if cy < 0 || cy >= self.dims[1] as i64 {
                    continue;
                }
                let on_edge_row = cy == qy as i64 - r || cy == qy as i64 + r;
                let step = if on_edge_row || r == 0 { 1 } else { 2 * r as usize };
                let mut cx = qx as i64 - r;
                while cx <= qx as i64 + r {
                    if cx >= 0 && cx < self.dims[0] as i64 {
                        for &i in &self.buckets[cy as usize * self.dims[0] + cx as usize] {
                            if Some(i) == exclude {
                                continue;
                            }
                            let p = self.points[i];
                            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
                            insert_sorted(&mut best, (i, d), k);
                        }
                    }
                    cx += step as i64;
                }
            }
            if best.len() == k && best[k - 1].1 <= ring as f64 * self.cell + slack {
                break;
            }
        }
        best
    }

    /// Distance from `q` to the nearest indexed point.
    pub fn nearest_distance(&self, q: [f64; 2]) -> f64 {
        self.knn(q, 1, None).first().map_or(f64::INFINITY, |&(_, d)| d)
    }
}

fn insert_sorted(best: &mut Vec<(usize, f64)>, cand: (usize, f64), k: usize) {
    let key = |e: &(usize, f64)| (e.1, e.0);
    if best.len() == k {
        let last = best[k - 1];
        if cand.1 > last.1 || (cand.1 == last.1 && cand.0 > last.0) {
            return;
        }
    }
    let pos = best
        .iter()
        .position(|e| {
            let (d, i) = key(e);
            cand.1 < d || (cand.1 == d && cand.0 < i)
        })
        .unwrap_or(best.len());
    best.insert(pos, cand);
    best.truncate(k);
}
