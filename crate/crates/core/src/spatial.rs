//! Uniform-bin neighbor search over a fixed point cloud.

use crate::kernel::Point;

/// Points bucketed into square cells, stored in compressed row form.
#[derive(Debug, Clone)]
pub struct SpatialBins {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    indices: Vec<usize>,
}

impl SpatialBins {
    /// `cell` must be positive. An empty cloud yields a single empty cell.
    pub fn new(points: &[Point], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let (mut lo, mut hi) = (Point::new(0.0, 0.0), Point::new(0.0, 0.0));
        if let Some(first) = points.first() {
            lo = *first;
            hi = *first;
            for p in points {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);

        let mut bins = SpatialBins {
            origin: lo,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            indices: Vec::new(),
        };
        let keys: Vec<usize> = points.iter().map(|p| bins.key(p)).collect();
        for &k in &keys {
            bins.starts[k + 1] += 1;
        }
        for i in 0..nx * ny {
            bins.starts[i + 1] += bins.starts[i];
        }
        let mut fill = bins.starts.clone();
        bins.indices = vec![0; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            bins.indices[fill[k]] = i;
            fill[k] += 1;
        }
        bins
    }

    fn cell_coords(&self, p: &Point) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
        )
    }

    fn key(&self, p: &Point) -> usize {
        let (ix, iy) = self.cell_coords(p);
        let ix = ix.clamp(0, self.nx as isize - 1) as usize;
        let iy = iy.clamp(0, self.ny as isize - 1) as usize;
        iy * self.nx + ix
    }

    fn cell_slice(&self, ix: usize, iy: usize) -> &[usize] {
        let k = iy * self.nx + ix;
        &self.indices[self.starts[k]..self.starts[k + 1]]
    }

    /// Indices of every point whose cell overlaps the square of half-width
    /// `radius` around `p`. Callers filter by the exact distance.
    pub fn candidates(&self, p: &Point, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.cell_coords(&Point::new(p.x - radius, p.y - radius));
        let hi = self.cell_coords(&Point::new(p.x + radius, p.y + radius));
        let x0 = lo.0.max(0) as usize;
        let y0 = lo.1.max(0) as usize;
        let x1 = hi.0.min(self.nx as isize - 1);
        let y1 = hi.1.min(self.ny as isize - 1);
        let (xs, ys) = if x1 < x0 as isize || y1 < y0 as isize {
            (0..0, 0..0)
        } else {
            (x0..x1 as usize + 1, y0..y1 as usize + 1)
        };
        ys.flat_map(move |iy| {
            xs.clone()
                .flat_map(move |ix| self.cell_slice(ix, iy).iter().copied())
        })
    }

    /// Nearest point to `p` as `(index, distance)`, or `None` for an empty cloud.
    pub fn nearest(&self, points: &[Point], p: &Point) -> Option<(usize, f64)> {
        if points.is_empty() {
            return None;
        }
        let (cx, cy) = self.cell_coords(p);
        let cx = cx.clamp(0, self.nx as isize - 1);
        let cy = cy.clamp(0, self.ny as isize - 1);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            for iy in (cy - ring)..=(cy + ring) {
                if iy < 0 || iy >= self.ny as isize {
                    continue;
                }
                for ix in (cx - ring)..=(cx + ring) {
                    if ix < 0 || ix >= self.nx as isize {
                        continue;
                    }
                    // ring boundary only
                    if (iy - cy).abs() != ring && (ix - cx).abs() != ring {
                        continue;
                    }
                    for &i in self.cell_slice(ix as usize, iy as usize) {
                        let d = (points[i] - p).norm();
                        if best.is_none_or(|(_, b)| d < b) {
                            best = Some((i, d));
                        }
                    }
                }
            }
            if let Some((_, b)) = best {
                if b <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..2.0)))
            .collect()
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = cloud(300, 1);
        let bins = SpatialBins::new(&pts, 0.13);
        let probes = cloud(200, 2);
        for q in probes
            .iter()
            .chain([Point::new(5.0, 5.0), Point::new(-3.0, 0.0)].iter())
        {
            let (_, d) = bins.nearest(&pts, q).unwrap();
            let brute = pts
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
        }
    }

    #[test]
    fn candidates_cover_radius() {
        let pts = cloud(400, 3);
        let bins = SpatialBins::new(&pts, 0.2);
        for q in cloud(50, 4) {
            let mut got: Vec<usize> = bins
                .candidates(&q, 0.2)
                .filter(|&i| (pts[i] - q).norm() < 0.2)
                .collect();
            got.sort_unstable();
            let want: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i] - q).norm() < 0.2)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn empty_cloud() {
        let bins = SpatialBins::new(&[], 0.5);
        assert!(bins.nearest(&[], &Point::new(0.0, 0.0)).is_none());
        assert_eq!(bins.candidates(&Point::new(0.0, 0.0), 1.0).count(), 0);
    }
}
