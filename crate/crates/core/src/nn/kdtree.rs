use crate::domcount::PointSet;
use crate::scalar::Scalar;

const LEAF: usize = 8;

#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: T, left: usize, right: usize },
}

/// Static k-d tree answering exact nearest-neighbour queries that return the
/// complete set of points at the minimal squared distance.
///
/// Pruning only discards a subtree when the distance to its splitting plane
/// is strictly larger than the current best, so equidistant points are never
/// lost. Floating-point subtraction and addition are monotone, so the plane
/// distance is a true lower bound on every computed point distance.
pub struct KdTree<'a, T> {
    points: &'a PointSet<T>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<'a, T: Scalar> KdTree<'a, T> {
    pub fn build(points: &'a PointSet<T>) -> Self {
        let mut tree = Self { points, order: (0..points.len()).collect(), nodes: Vec::new() };
        if !points.is_empty() {
            tree.build_node(0, points.len());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let pts = self.points;
        let d = pts.dim();
        let mut dim = 0;
        let mut widest = T::neg_infinity();
        for k in 0..d {
            let (lo, hi) = self.order[start..end].iter().fold(
                (T::infinity(), T::neg_infinity()),
                |(lo, hi), &i| {
                    let v = pts.coord(i, k);
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > widest {
                widest = hi - lo;
                dim = k;
            }
        }
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&p, &q| {
            pts.coord(p, dim).partial_cmp(&pts.coord(q, dim)).unwrap()
        });
        let value = pts.coord(self.order[mid], dim);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// All points (other than `exclude`) at the minimal squared distance from
    /// `query`, with that distance. Indices are unsorted.
    pub fn nearest_all(&self, query: &[T], exclude: usize, found: &mut Vec<usize>) -> T {
        found.clear();
        let mut best = T::infinity();
        if !self.nodes.is_empty() {
            self.search(0, query, exclude, &mut best, found);
        }
        best
    }

    fn search(&self, node: usize, q: &[T], exclude: usize, best: &mut T, found: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == exclude {
                        continue;
                    }
                    let d2 = sq_dist(q, self.points.point(i));
                    if d2 < *best {
                        *best = d2;
                        found.clear();
                        found.push(i);
                    } else if d2 == *best {
                        found.push(i);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff <= T::zero() { (left, right) } else { (right, left) };
                self.search(near, q, exclude, best, found);
                if diff * diff <= *best {
                    self.search(far, q, exclude, best, found);
                }
            }
        }
    }
}
