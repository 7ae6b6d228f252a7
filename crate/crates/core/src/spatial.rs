//! Exact k-nearest-neighbor search over a static point set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Point, PointCloud};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

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
    },
}

/// Immutable kd-tree. Queries are exact; ties in distance resolve to the
/// lower point index.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(pc: &PointCloud) -> Self {
        Self::from_points(pc.points())
    }

    pub fn from_points(points: &[Point]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let axis = (hi - lo).imax();
        if hi[axis] - lo[axis] <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `query`, sorted by distance. With
    /// `exclude_self`, one point coinciding with the query (the lowest such
    /// index) is left out.
    pub fn knn_query(&self, query: &Point, k: usize, exclude_self: bool) -> Vec<Neighbor> {
        let skip = if exclude_self {
            self.nearest_coincident(query)
        } else {
            None
        };
        self.knn_excluding(query, k, skip)
    }

    /// Neighbors of the member point `i`, excluding `i` itself.
    pub fn knn_of(&self, i: usize, k: usize) -> Vec<Neighbor> {
        self.knn_excluding(&self.points[i], k, Some(i))
    }

    fn nearest_coincident(&self, query: &Point) -> Option<usize> {
        self.knn_excluding(query, 1, None)
            .first()
            .filter(|n| n.distance == 0.0)
            .map(|n| n.index)
    }

    fn knn_excluding(&self, query: &Point, k: usize, skip: Option<usize>) -> Vec<Neighbor> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, skip, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.dist_sq.sqrt(),
            })
            .collect()
    }

    fn search(
        &self,
        node: usize,
        query: &Point,
        k: usize,
        skip: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == skip {
                        continue;
                    }
                    let cand = Candidate {
                        dist_sq: (self.points[i] - query).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, skip, heap);
                // Equal-distance points on the far side can still win on index.
                let bound = heap.peek().map_or(f64::INFINITY, |c| c.dist_sq);
                if heap.len() < k || diff * diff <= bound {
                    self.search(far, query, k, skip, heap);
                }
            }
        }
    }
}

/// Fixed neighbor lists (self excluded), one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub neighbors: Vec<Vec<usize>>,
}

impl KnnGraph {
    pub fn build(index: &SpatialIndex, k: usize) -> Self {
        let neighbors = (0..index.len())
            .map(|i| index.knn_of(i, k).into_iter().map(|n| n.index).collect())
            .collect();
        Self { neighbors }
    }

    pub fn from_points(points: &[Point], k: usize) -> Self {
        Self::build(&SpatialIndex::from_points(points), k)
    }
}
