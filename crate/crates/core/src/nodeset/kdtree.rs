//! Static 2-D kd-tree with bounding-box pruning.

use super::{distance, Point};

const LEAF_SIZE: usize = 12;
// Squared-distance prefilters are widened by this factor so they never reject a
// candidate that the exact (square-rooted) comparison would keep.
const SLACK: f64 = 1.0 + 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    #[inline]
    fn before(&self, other: &Neighbor) -> bool {
        self.distance < other.distance || (self.distance == other.distance && self.index < other.index)
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: [f64; 4],
    // leaf: `left == usize::MAX`, points in [start, end) of the leaf-ordered arrays
    left: usize,
    right: usize,
    start: usize,
    end: usize,
}

/// Owns a copy of the points; indices returned by queries refer to the slice the
/// tree was built from.
#[derive(Debug, Clone)]
pub struct KdTree {
    // points permuted into leaf order, with their original indices
    points: Vec<Point>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    // leaf node holding each original index
    leaf_of: Vec<usize>,
    // parent of each node, `usize::MAX` at the root
    parent: Vec<usize>,
}

#[inline]
fn box_dist2(bbox: &[f64; 4], q: Point) -> f64 {
    let dx = (bbox[0] - q[0]).max(0.0).max(q[0] - bbox[2]);
    let dy = (bbox[1] - q[1]).max(0.0).max(q[1] - bbox[3]);
    dx * dx + dy * dy
}

/// Whether every point within `radius` of `q` lies strictly inside `bbox`. Points
/// outside a subtree are separated from its box by a splitting line, so they are
/// then farther than `radius`.
#[inline]
fn ball_inside(bbox: &[f64; 4], q: Point, radius: f64) -> bool {
    let r = radius * (1.0 + 1e-9);
    q[0] - bbox[0] > r && bbox[2] - q[0] > r && q[1] - bbox[1] > r && bbox[3] - q[1] > r
}

#[inline]
fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Candidate list of the `cap` best neighbours found so far.
struct Best<'a> {
    list: &'a mut Vec<Neighbor>,
    cap: usize,
    // points at or beyond `factor * (second entry's distance)` are not wanted
    factor: f64,
    // exact distance beyond which nothing is wanted, whether that distance itself
    // is still wanted, and the widened squared bound used for prefiltering
    bound: f64,
    inclusive: bool,
    bound2: f64,
}

impl<'a> Best<'a> {
    fn new(list: &'a mut Vec<Neighbor>, cap: usize, factor: f64) -> Self {
        Best {
            list,
            cap,
            factor,
            bound: f64::INFINITY,
            inclusive: true,
            bound2: f64::INFINITY,
        }
    }

    fn update_bound(&mut self) {
        let mut b = (f64::INFINITY, true);
        if self.list.len() == self.cap {
            b = (self.list[self.cap - 1].distance, true);
        }
        if self.list.len() >= 2 {
            let f = self.factor * self.list[1].distance;
            if f <= b.0 {
                b = (f, false);
            }
        }
        self.bound = b.0;
        self.inclusive = b.1;
        self.bound2 = b.0 * b.0 * SLACK;
    }

    #[inline]
    fn offer(&mut self, cand: Neighbor) {
        if cand.distance > self.bound || (!self.inclusive && cand.distance >= self.bound) {
            return;
        }
        if self.list.len() == self.cap && !cand.before(&self.list[self.cap - 1]) {
            return;
        }
        let pos = self.list.partition_point(|b| b.before(&cand));
        self.list.insert(pos, cand);
        self.list.truncate(self.cap);
        self.update_bound();
    }
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut items: Vec<(Point, usize)> = points.iter().copied().zip(0..).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 2);
        if !items.is_empty() {
            let n = items.len();
            Self::build(&mut items, &mut nodes, 0, n);
        }
        let mut leaf_of = vec![0; items.len()];
        let mut parent = vec![usize::MAX; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            if node.left != usize::MAX {
                parent[node.left] = id;
                parent[node.right] = id;
            } else {
                for t in &items[node.start..node.end] {
                    leaf_of[t.1] = id;
                }
            }
        }
        KdTree {
            points: items.iter().map(|t| t.0).collect(),
            ids: items.iter().map(|t| t.1).collect(),
            nodes,
            leaf_of,
            parent,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(items: &mut [(Point, usize)], nodes: &mut Vec<Node>, start: usize, end: usize) -> usize {
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for (p, _) in &items[start..end] {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].min(p[1]);
            bbox[2] = bbox[2].max(p[0]);
            bbox[3] = bbox[3].max(p[1]);
        }
        let id = nodes.len();
        nodes.push(Node {
            bbox,
            left: usize::MAX,
            right: usize::MAX,
            start,
            end,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let dim = if bbox[2] - bbox[0] >= bbox[3] - bbox[1] { 0 } else { 1 };
        let mid = start + (end - start) / 2;
        items[start..end].select_nth_unstable_by(mid - start, |a, b| a.0[dim].total_cmp(&b.0[dim]).then(a.1.cmp(&b.1)));
        let left = Self::build(items, nodes, start, mid);
        let right = Self::build(items, nodes, mid, end);
        nodes[id].left = left;
        nodes[id].right = right;
        id
    }

    /// The `k` nearest points to `q`, ordered by (distance, index).
    pub fn nearest(&self, q: Point, k: usize) -> Vec<Neighbor> {
        let mut out = Vec::with_capacity(k + 1);
        self.nearest_into(q, k, &mut out);
        out
    }

    /// [`KdTree::nearest`] writing into a reusable buffer.
    pub fn nearest_into(&self, q: Point, k: usize, out: &mut Vec<Neighbor>) {
        self.nearest_bounded_into(q, k, f64::INFINITY, out);
    }

    /// Like [`KdTree::nearest_into`], but may omit any point whose distance is at
    /// least `factor` times the distance of the second-nearest point. Every point
    /// closer than that is reported exactly as the unbounded query would.
    pub fn nearest_bounded_into(&self, q: Point, k: usize, factor: f64, out: &mut Vec<Neighbor>) {
        out.clear();
        if k == 0 || self.points.is_empty() {
            return;
        }
        let mut best = Best::new(out, k, factor);
        self.search(0, q, &mut best, usize::MAX);
    }

    /// [`KdTree::nearest_bounded_into`] for the query point `i` of the tree itself.
    /// Starting from the leaf that holds it usually gives a tight bound at once.
    pub fn nearest_member_bounded_into(&self, i: usize, k: usize, factor: f64, out: &mut Vec<Neighbor>) {
        out.clear();
        if k == 0 {
            return;
        }
        let leaf = self.leaf_of[i];
        let node = &self.nodes[leaf];
        let q = self.points[node.start + self.ids[node.start..node.end].iter().position(|&j| j == i).unwrap()];
        let mut best = Best::new(out, k, factor);
        self.scan_leaf(node, q, &mut best);
        // climb towards the root, visiting sibling subtrees, until the search ball
        // lies inside the subtree searched so far
        let mut child = leaf;
        while self.parent[child] != usize::MAX && !ball_inside(&self.nodes[child].bbox, q, best.bound) {
            let up = &self.nodes[self.parent[child]];
            let sibling = if up.left == child { up.right } else { up.left };
            if box_dist2(&self.nodes[sibling].bbox, q) <= best.bound2 {
                self.search(sibling, q, &mut best, usize::MAX);
            }
            child = self.parent[child];
        }
    }

    #[inline]
    fn scan_leaf(&self, node: &Node, q: Point, best: &mut Best) {
        for t in node.start..node.end {
            let p = self.points[t];
            if dist2(q, p) > best.bound2 {
                continue;
            }
            best.offer(Neighbor {
                index: self.ids[t],
                distance: distance(q, p),
            });
        }
    }

    fn search(&self, id: usize, q: Point, best: &mut Best, skip: usize) {
        let node = &self.nodes[id];
        if node.left == usize::MAX {
            if id != skip {
                self.scan_leaf(node, q, best);
            }
            return;
        }
        let dl = box_dist2(&self.nodes[node.left].bbox, q);
        let dr = box_dist2(&self.nodes[node.right].bbox, q);
        let (first, d_first, second, d_second) = if dl <= dr {
            (node.left, dl, node.right, dr)
        } else {
            (node.right, dr, node.left, dl)
        };
        // inclusive with slack so equidistant candidates with smaller indices stay reachable
        if d_first <= best.bound2 {
            self.search(first, q, best, skip);
        }
        if d_second <= best.bound2 {
            self.search(second, q, best, skip);
        }
    }

    /// All points strictly closer than `radius` to `q`, ordered by (distance, index).
    pub fn within(&self, q: Point, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let r2 = radius * radius * SLACK;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(&node.bbox, q) > r2 {
                continue;
            }
            if node.left == usize::MAX {
                for t in node.start..node.end {
                    let p = self.points[t];
                    if dist2(q, p) > r2 {
                        continue;
                    }
                    let d = distance(q, p);
                    if d < radius {
                        out.push(Neighbor {
                            index: self.ids[t],
                            distance: d,
                        });
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
        out
    }
}
