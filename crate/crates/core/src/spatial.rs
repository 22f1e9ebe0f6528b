//! Static k-d tree for exact radius queries.

use crate::error::{Error, Result};
use crate::geometry::Point3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
        // Bounding box of everything below this node.
        lo: [f64; 3],
        hi: [f64; 3],
    },
}

/// Immutable spatial index over a fixed point sequence.
///
/// Radius queries use a closed ball (`‖p − c‖ ≤ r`) and report indices into
/// the original sequence in ascending order.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn build(points: &[Point3]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build_node(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            // All points coincide; splitting cannot separate them.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        // Placeholder, patched once the children exist.
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
            lo,
            hi,
        };
        id
    }

    /// Indices of all points within distance `r` of `center`, ascending.
    pub fn radius_neighbors(&self, center: &Point3, r: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.radius_neighbors_into(center, r, &mut out)?;
        Ok(out)
    }

    /// Like [`radius_neighbors`](Self::radius_neighbors) but reuses `out`.
    pub fn radius_neighbors_into(&self, center: &Point3, r: f64, out: &mut Vec<usize>) -> Result<()> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::invalid(format!("radius must be non-negative, got {r}")));
        }
        out.clear();
        if self.nodes.is_empty() {
            return Ok(());
        }
        self.visit_ball(0, center, r * r, &mut |i| out.push(i));
        out.sort_unstable();
        Ok(())
    }

    /// Calls `f` for every index in the closed ball, in no particular order.
    pub fn for_each_in_ball(&self, center: &Point3, r: f64, mut f: impl FnMut(usize)) {
        if self.nodes.is_empty() || r.is_nan() || r < 0.0 {
            return;
        }
        self.visit_ball(0, center, r * r, &mut f);
    }

    /// True if at least one point lies in the closed ball.
    pub fn any_within(&self, center: &Point3, r: f64) -> bool {
        let mut found = false;
        self.for_each_in_ball(center, r, |_| found = true);
        found
    }

    fn visit_ball(&self, node: usize, c: &Point3, r2: f64, f: &mut impl FnMut(usize)) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    if (self.points[i] - c).norm_squared() <= r2 {
                        f(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
                lo,
                hi,
            } => {
                let mut gap2 = 0.0;
                for a in 0..3 {
                    let d = if c[a] < lo[a] {
                        lo[a] - c[a]
                    } else if c[a] > hi[a] {
                        c[a] - hi[a]
                    } else {
                        0.0
                    };
                    gap2 += d * d;
                }
                if gap2 > r2 {
                    return;
                }
                let diff = c[*axis] - value;
                let (near, far) = if diff < 0.0 { (*left, *right) } else { (*right, *left) };
                self.visit_ball(near, c, r2, f);
                // Points equal to the split value can sit on either side.
                if diff * diff <= r2 {
                    self.visit_ball(far, c, r2, f);
                }
            }
        }
    }

    /// Index of the closest point, lowest index on ties; `None` when empty.
    pub fn nearest(&self, center: &Point3) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.visit_nearest(0, center, &mut best);
        Some((best.0, best.1.sqrt()))
    }

    fn visit_nearest(&self, node: usize, c: &Point3, best: &mut (usize, f64)) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d2 = (self.points[i] - c).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split {
                axis, value, left, right, ..
            } => {
                let diff = c[*axis] - value;
                let (near, far) = if diff < 0.0 { (*left, *right) } else { (*right, *left) };
                self.visit_nearest(near, c, best);
                if diff * diff <= best.1 {
                    self.visit_nearest(far, c, best);
                }
            }
        }
    }
}

/// Linear-scan reference for radius queries.
pub fn radius_neighbors_linear(points: &[Point3], center: &Point3, r: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - center).norm_squared() <= r * r)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_index_returns_nothing() {
        let idx = SpatialIndex::build(&[]);
        assert!(idx.radius_neighbors(&Point3::origin(), 100.0).unwrap().is_empty());
        assert!(idx.nearest(&Point3::origin()).is_none());
    }

    #[test]
    fn single_point_containment() {
        let idx = SpatialIndex::build(&[Point3::origin()]);
        assert_eq!(idx.radius_neighbors(&Point3::origin(), 1.0).unwrap(), vec![0]);
    }

    #[test]
    fn zero_radius_hits_existing_point() {
        let pts: Vec<_> = (0..100).map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let idx = SpatialIndex::build(&pts);
        assert_eq!(idx.radius_neighbors(&pts[37], 0.0).unwrap(), vec![37]);
    }

    #[test]
    fn far_center_is_empty() {
        let pts: Vec<_> = (0..100).map(|i| Point3::new(i as f64, 1.0, 2.0)).collect();
        let idx = SpatialIndex::build(&pts);
        assert!(idx.radius_neighbors(&Point3::new(1e6, 0., 0.), 10.0).unwrap().is_empty());
    }

    #[test]
    fn negative_radius_is_rejected() {
        let idx = SpatialIndex::build(&[Point3::origin()]);
        assert!(matches!(
            idx.radius_neighbors(&Point3::origin(), -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn boundary_distance_is_included() {
        let pts = vec![Point3::new(3.0, 4.0, 0.0)];
        let idx = SpatialIndex::build(&pts);
        assert_eq!(idx.radius_neighbors(&Point3::origin(), 5.0).unwrap(), vec![0]);
    }

    #[test]
    fn matches_linear_scan_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..1000)
            .map(|_| {
                Point3::new(
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..10.0),
                )
            })
            .collect();
        let idx = SpatialIndex::build(&pts);
        for _ in 0..50 {
            let c = Point3::new(
                rng.random_range(-1.0..11.0),
                rng.random_range(-1.0..11.0),
                rng.random_range(-1.0..11.0),
            );
            let r = rng.random_range(0.0..4.0);
            assert_eq!(idx.radius_neighbors(&c, r).unwrap(), radius_neighbors_linear(&pts, &c, r));
        }
    }

    #[test]
    fn duplicate_points_all_reported() {
        let pts = vec![Point3::new(1., 1., 1.); 40];
        let idx = SpatialIndex::build(&pts);
        assert_eq!(idx.radius_neighbors(&Point3::new(1., 1., 1.), 0.0).unwrap().len(), 40);
        assert_eq!(idx.nearest(&Point3::origin()).unwrap().0, 0);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<_> = (0..500)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let idx = SpatialIndex::build(&pts);
        for _ in 0..100 {
            let c = Point3::new(rng.random(), rng.random(), rng.random());
            let brute = pts
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - c).norm().total_cmp(&(b.1 - c).norm()))
                .unwrap()
                .0;
            assert_eq!(idx.nearest(&c).unwrap().0, brute);
        }
    }
}
