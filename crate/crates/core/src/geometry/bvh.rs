use super::triangle::closest_point_on_triangle;
use super::{SurfacePoint, TriMesh};
use crate::error::{Error, Result};
use crate::Vec3;

pub const DEFAULT_LEAF_SIZE: usize = 4;

/// Relative slack on the box-distance pruning test. Box distances and
/// triangle distances round differently; pruning slightly less than the exact
/// bound keeps traversal results identical to an exhaustive scan.
const PRUNE_SLACK: f64 = 1e-12;

/// Whether a box at squared distance `box_d2` cannot hold a face at or below
/// `best_d2`.
#[inline]
fn pruned(box_d2: f64, best_d2: f64) -> bool {
    box_d2 * (1.0 - PRUNE_SLACK) > best_d2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    /// Squared distance from `p` to the box; zero inside.
    pub fn distance_sq(&self, p: &Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        let dz = (self.min.z - p.z).max(p.z - self.max.z).max(0.0);
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BvhNode {
    Leaf {
        bounds: Aabb,
        /// Range into [`Bvh::face_order`].
        start: usize,
        count: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy over the faces of one [`TriMesh`].
///
/// Built by median split along the longest axis of the face-centroid bounds.
/// Node 0 is the root. The tree only depends on the mesh, so building twice
/// yields identical trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    face_order: Vec<usize>,
    face_bounds: Vec<Aabb>,
    degenerate: Vec<usize>,
    leaf_size: usize,
    /// Triangle corners in `face_order`, so leaves read contiguous memory.
    packed: Vec<PackedFace>,
    /// Per node: `(left, right)` child boxes for inner nodes, unused for leaves.
    child_bounds: Vec<[Aabb; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
struct PackedFace {
    face: usize,
    bounds: Aabb,
    corners: [Vec3; 3],
    degenerate: bool,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        Self::build_with_leaf_size(mesh, DEFAULT_LEAF_SIZE)
    }

    pub fn build_with_leaf_size(mesh: &TriMesh, leaf_size: usize) -> Result<Self> {
        if mesh.num_faces() == 0 {
            return Err(Error::EmptyMesh);
        }
        if leaf_size == 0 {
            return Err(Error::invalid("leaf_size", "must be at least 1"));
        }
        let mut face_bounds = Vec::with_capacity(mesh.num_faces());
        let mut centroids = Vec::with_capacity(mesh.num_faces());
        for f in 0..mesh.num_faces() {
            let tri = mesh.triangle(f);
            let mut b = Aabb::empty();
            tri.iter().for_each(|v| b.grow(v));
            face_bounds.push(b);
            centroids.push((tri[0] + tri[1] + tri[2]) / 3.0);
        }
        let mut bvh = Bvh {
            nodes: Vec::new(),
            face_order: (0..mesh.num_faces()).collect(),
            face_bounds,
            degenerate: mesh.degenerate_faces(),
            leaf_size,
            packed: Vec::new(),
            child_bounds: Vec::new(),
        };
        let n = bvh.face_order.len();
        bvh.build_node(&centroids, 0, n);
        bvh.packed = bvh
            .face_order
            .iter()
            .map(|&f| PackedFace {
                face: f,
                bounds: bvh.face_bounds[f],
                corners: mesh.triangle(f),
                degenerate: mesh.is_degenerate(f),
            })
            .collect();
        bvh.child_bounds = bvh
            .nodes
            .iter()
            .map(|n| match *n {
                BvhNode::Inner { left, right, .. } => {
                    [*bvh.nodes[left].bounds(), *bvh.nodes[right].bounds()]
                }
                BvhNode::Leaf { bounds, .. } => [bounds, bounds],
            })
            .collect();
        Ok(bvh)
    }

    fn build_node(&mut self, centroids: &[Vec3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut centroid_bounds = Aabb::empty();
        for &f in &self.face_order[start..end] {
            bounds.merge(&self.face_bounds[f]);
            centroid_bounds.grow(&centroids[f]);
        }

        let index = self.nodes.len();
        let count = end - start;
        if count <= self.leaf_size {
            self.nodes.push(BvhNode::Leaf {
                bounds,
                start,
                count,
            });
            return index;
        }

        let extent = centroid_bounds.max - centroid_bounds.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        self.face_order[start..end].sort_by(|&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });

        // Placeholder; patched once both children exist.
        self.nodes.push(BvhNode::Leaf {
            bounds,
            start,
            count,
        });
        let mid = start + count / 2;
        let left = self.build_node(centroids, start, mid);
        let right = self.build_node(centroids, mid, end);
        self.nodes[index] = BvhNode::Inner {
            bounds,
            left,
            right,
        };
        index
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn face_order(&self) -> &[usize] {
        &self.face_order
    }

    pub fn num_faces(&self) -> usize {
        self.face_order.len()
    }

    pub fn face_bounds(&self, face: usize) -> &Aabb {
        &self.face_bounds[face]
    }

    /// Faces flagged as zero-area at build time.
    pub fn degenerate_faces(&self) -> &[usize] {
        &self.degenerate
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Nearest point on the mesh surface to `p`.
    ///
    /// Equal distances resolve to the lowest face index, so the result is
    /// bit-identical to an exhaustive scan over all faces. Returns `None` only
    /// when every face is degenerate. `mesh` must be the mesh the tree was
    /// built from; only its face count and normals are read here.
    pub fn closest_point(&self, mesh: &TriMesh, p: &Vec3) -> Result<Option<SurfacePoint>> {
        if mesh.num_faces() != self.num_faces() {
            return Err(Error::dimension(
                "bvh face count",
                self.num_faces(),
                mesh.num_faces(),
            ));
        }
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::NonFinite("query point".into()));
        }

        let mut best: Option<(usize, f64, Vec3, [f64; 3])> = None;
        let mut best_d2 = f64::INFINITY;
        // Entries carry the node's box distance, so pruned nodes are never read.
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds().distance_sq(p)));
        while let Some((ni, box_d2)) = stack.pop() {
            if pruned(box_d2, best_d2) {
                continue;
            }
            match self.nodes[ni] {
                BvhNode::Leaf { start, count, .. } => {
                    for pf in &self.packed[start..start + count] {
                        if pf.degenerate || pruned(pf.bounds.distance_sq(p), best_d2) {
                            continue;
                        }
                        let [a, b, c] = &pf.corners;
                        let (q, bary, _) = closest_point_on_triangle(p, a, b, c);
                        let d2 = (p - q).norm_squared();
                        let better = match best {
                            None => true,
                            Some((bf, bd2, ..)) => d2 < bd2 || (d2 == bd2 && pf.face < bf),
                        };
                        if better {
                            best = Some((pf.face, d2, q, bary));
                            best_d2 = d2;
                        }
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    let [bl, br] = &self.child_bounds[ni];
                    let (dl, dr) = (bl.distance_sq(p), br.distance_sq(p));
                    // Nearer child is popped first.
                    let (near, far) = if dl <= dr {
                        ((left, dl), (right, dr))
                    } else {
                        ((right, dr), (left, dl))
                    };
                    if !pruned(far.1, best_d2) {
                        stack.push(far);
                    }
                    if !pruned(near.1, best_d2) {
                        stack.push(near);
                    }
                }
            }
        }

        Ok(best.map(|(face, dist_sq, point, bary)| SurfacePoint {
            face,
            bary,
            point,
            signed_dist: mesh.normal(face).dot(&(p - point)),
            dist_sq,
        }))
    }
}

/// A mesh paired with its BVH.
#[derive(Debug, Clone)]
pub struct IndexedMesh {
    mesh: TriMesh,
    bvh: Bvh,
}

impl IndexedMesh {
    pub fn new(mesh: TriMesh) -> Result<Self> {
        let bvh = Bvh::build(&mesh)?;
        Ok(IndexedMesh { mesh, bvh })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn closest_point(&self, p: &Vec3) -> Result<SurfacePoint> {
        self.bvh
            .closest_point(&self.mesh, p)?
            .ok_or(Error::DegenerateFace(0))
    }
}
