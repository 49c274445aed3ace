use crate::error::{ensure_finite, Error, Result};
use crate::Vec3;

/// Faces whose doubled area falls below this are treated as degenerate.
const DEGENERATE_CROSS_NORM: f64 = 1e-20;

/// Vertex positions with fixed triangle topology and cached face normals.
///
/// Faces wind counter-clockwise around their normal. Degenerate faces keep a
/// zero normal and are skipped by surface queries.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    degenerate: Vec<bool>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        ensure_finite("mesh vertices", vertices.iter().flat_map(|v| v.iter()))?;
        let n = vertices.len();
        for (fi, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(
                    format!("faces[{fi}]"),
                    format!("vertex index {bad} out of range for {n} vertices"),
                ));
            }
        }
        let mut mesh = TriMesh {
            vertices,
            faces,
            normals: Vec::new(),
            degenerate: Vec::new(),
        };
        mesh.refresh_normals();
        Ok(mesh)
    }

    /// Same topology, new positions. Used when re-posing a model.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::dimension(
                "mesh vertices",
                self.vertices.len(),
                vertices.len(),
            ));
        }
        ensure_finite("mesh vertices", vertices.iter().flat_map(|v| v.iter()))?;
        let mut mesh = TriMesh {
            vertices,
            faces: self.faces.clone(),
            normals: Vec::new(),
            degenerate: Vec::new(),
        };
        mesh.refresh_normals();
        Ok(mesh)
    }

    fn refresh_normals(&mut self) {
        self.normals.clear();
        self.degenerate.clear();
        for f in &self.faces {
            let [a, b, c] = self.corners_of(f);
            let cross = (b - a).cross(&(c - a));
            let len = cross.norm();
            if len > DEGENERATE_CROSS_NORM {
                self.normals.push(cross / len);
                self.degenerate.push(false);
            } else {
                self.normals.push(Vec3::zeros());
                self.degenerate.push(true);
            }
        }
    }

    fn corners_of(&self, f: &[usize; 3]) -> [Vec3; 3] {
        [
            self.vertices[f[0]],
            self.vertices[f[1]],
            self.vertices[f[2]],
        ]
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn normal(&self, face: usize) -> Vec3 {
        self.normals[face]
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn is_degenerate(&self, face: usize) -> bool {
        self.degenerate[face]
    }

    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.degenerate[f])
            .collect()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.corners_of(&self.faces[face])
    }

    pub fn same_topology(&self, other: &TriMesh) -> bool {
        self.vertices.len() == other.vertices.len() && self.faces == other.faces
    }

    /// Axis-aligned bounds `(min, max)` over all vertices.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Applies `x -> R x + t` to every vertex.
    pub fn transformed(&self, rotation: &crate::Mat3, translation: &Vec3) -> Result<Self> {
        self.with_vertices(
            self.vertices
                .iter()
                .map(|v| rotation * v + translation)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn ccw_normal_points_up() {
        let m = unit_triangle();
        assert_eq!(m.normal(0), Vec3::new(0.0, 0.0, 1.0));
        assert!(!m.is_degenerate(0));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = TriMesh::new(vec![Vec3::zeros(); 2], vec![[0, 1, 2]]).unwrap_err();
        assert!(err.to_string().contains("faces[0]"));
    }

    #[test]
    fn collinear_face_is_flagged() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.degenerate_faces(), vec![0]);
        assert_eq!(m.normal(0), Vec3::zeros());
    }

    #[test]
    fn non_finite_vertex_rejected() {
        let err = TriMesh::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
