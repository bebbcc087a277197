//! Triangle meshes, validation, rest-state precomputation and sequence I/O.

mod obj;
mod rest;
mod sequence;
mod validate;

use std::collections::BTreeMap;

pub use obj::{load_mesh, parse_obj, read_index_file, save_mesh, write_index_file, write_obj};
pub use rest::{build_rest_state, Hinge, RestState};
pub use sequence::{frame_file_name, load_sequence, save_sequence, MeshSequence};
pub use validate::{validate_mesh, Finding, ValidationReport};

use crate::error::{Error, Result};
use crate::geom::{area_normal, triangle_area, Vec3};

/// Minimum rest area of a face, in m².
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Optional per-vertex labels carried next to a mesh in sidecar index files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VertexLabels {
    /// Garment vertices. `None` means the whole mesh is garment.
    pub garment: Option<Vec<usize>>,
    /// Dirichlet boundary vertices.
    pub boundary: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    labels: VertexLabels,
}

impl TriMesh {
    /// Builds a mesh and checks every invariant.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_labels(vertices, faces, VertexLabels::default())
    }

    pub fn with_labels(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, labels: VertexLabels) -> Result<Self> {
        let mesh = TriMesh {
            vertices,
            faces,
            labels,
        };
        let report = validate_mesh(&mesh);
        if report.is_empty() {
            Ok(mesh)
        } else {
            Err(Error::Validation(report))
        }
    }

    /// Builds a mesh without validation. Use [`validate_mesh`] to inspect it.
    pub fn from_raw(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            faces,
            labels: VertexLabels::default(),
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn labels(&self) -> &VertexLabels {
        &self.labels
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same topology and labels with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Invalid(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Self::with_labels(vertices, self.faces.clone(), self.labels.clone())
    }

    /// Replaces the labels, re-validating them against the mesh.
    pub fn relabel(&self, labels: VertexLabels) -> Result<Self> {
        Self::with_labels(self.vertices.clone(), self.faces.clone(), labels)
    }

    pub fn is_garment(&self, v: usize) -> bool {
        match &self.labels.garment {
            None => true,
            Some(g) => g.contains(&v),
        }
    }

    /// Garment vertex indices, sorted.
    pub fn garment_vertices(&self) -> Vec<usize> {
        match &self.labels.garment {
            None => (0..self.vertices.len()).collect(),
            Some(g) => {
                let mut g = g.clone();
                g.sort_unstable();
                g.dedup();
                g
            }
        }
    }

    /// Indices of faces whose three vertices are all garment vertices.
    pub fn garment_faces(&self) -> Vec<usize> {
        let mask = self.garment_mask();
        (0..self.faces.len())
            .filter(|&f| self.faces[f].iter().all(|&v| mask.get(v).copied().unwrap_or(false)))
            .collect()
    }

    pub(crate) fn garment_mask(&self) -> Vec<bool> {
        match &self.labels.garment {
            None => vec![true; self.vertices.len()],
            Some(g) => {
                let mut mask = vec![false; self.vertices.len()];
                for &v in g {
                    if v < mask.len() {
                        mask[v] = true;
                    }
                }
                mask
            }
        }
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted vertex normals, normalized. Isolated vertices get zero.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); self.vertices.len()];
        for &[a, b, c] in &self.faces {
            let n = area_normal(&self.vertices[a], &self.vertices[b], &self.vertices[c]);
            normals[a] += n;
            normals[b] += n;
            normals[c] += n;
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Undirected edges with their incident faces, keyed by `(min, max)`.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        edge_face_map(&self.faces, |_| true)
    }

    /// Sorted, deduplicated vertex neighbors (1-ring) for every vertex.
    pub fn vertex_rings(&self) -> Vec<Vec<usize>> {
        let mut rings = vec![Vec::new(); self.vertices.len()];
        for &[a, b, c] in &self.faces {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                rings[p].push(q);
                rings[q].push(p);
            }
        }
        for r in &mut rings {
            r.sort_unstable();
            r.dedup();
        }
        rings
    }

    /// Edge-adjacent faces for every face.
    pub fn face_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.faces.len()];
        for faces in self.edge_faces().values() {
            for &f in faces {
                for &g in faces {
                    if f != g {
                        nbrs[f].push(g);
                    }
                }
            }
        }
        for n in &mut nbrs {
            n.sort_unstable();
            n.dedup();
        }
        nbrs
    }

    /// Extracts the garment region as its own mesh.
    ///
    /// Returns the submesh and, for each submesh vertex, its index in `self`.
    /// Boundary labels are carried over; the result has no garment label.
    pub fn garment_submesh(&self) -> Result<(TriMesh, Vec<usize>)> {
        let garment = self.garment_vertices();
        let mut remap = vec![usize::MAX; self.vertices.len()];
        for (new, &old) in garment.iter().enumerate() {
            remap[old] = new;
        }
        let faces = self
            .garment_faces()
            .into_iter()
            .map(|f| self.faces[f].map(|v| remap[v]))
            .collect();
        let vertices = garment.iter().map(|&v| self.vertices[v]).collect();
        let boundary = self
            .labels
            .boundary
            .iter()
            .filter(|&&v| remap[v] != usize::MAX)
            .map(|&v| remap[v])
            .collect();
        let mesh = TriMesh::with_labels(
            vertices,
            faces,
            VertexLabels {
                garment: None,
                boundary,
            },
        )?;
        Ok((mesh, garment))
    }
}

pub(crate) fn edge_face_map(
    faces: &[[usize; 3]],
    include: impl Fn(usize) -> bool,
) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        if !include(f) {
            continue;
        }
        for (p, q) in [(a, b), (b, c), (c, a)] {
            map.entry((p.min(q), p.max(q))).or_default().push(f);
        }
    }
    map
}
