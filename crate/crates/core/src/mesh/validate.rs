use std::fmt;

use super::{edge_face_map, TriMesh, MIN_FACE_AREA};

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    NonFiniteVertex {
        vertex: usize,
    },
    IndexOutOfRange {
        face: usize,
        index: usize,
    },
    RepeatedVertex {
        face: usize,
    },
    DegenerateFace {
        face: usize,
        area: f64,
    },
    NonManifoldEdge {
        edge: (usize, usize),
        faces: Vec<usize>,
    },
    InconsistentOrientation {
        edge: (usize, usize),
        faces: (usize, usize),
    },
    LabelOutOfRange {
        label: &'static str,
        vertex: usize,
    },
    BoundaryNotGarment {
        vertex: usize,
    },
    /// The mesh has no faces where some are required.
    EmptyMesh,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NonFiniteVertex { vertex } => write!(f, "vertex {vertex} is not finite"),
            Finding::IndexOutOfRange { face, index } => {
                write!(f, "face {face} references missing vertex {index}")
            }
            Finding::RepeatedVertex { face } => write!(f, "face {face} repeats a vertex"),
            Finding::DegenerateFace { face, area } => {
                write!(f, "face {face} is degenerate (area {area:e})")
            }
            Finding::NonManifoldEdge { edge, faces } => {
                write!(f, "edge {edge:?} is shared by faces {faces:?}")
            }
            Finding::InconsistentOrientation { edge, faces } => write!(
                f,
                "faces {} and {} traverse edge {edge:?} in the same direction",
                faces.0, faces.1
            ),
            Finding::LabelOutOfRange { label, vertex } => {
                write!(f, "{label} label references missing vertex {vertex}")
            }
            Finding::BoundaryNotGarment { vertex } => {
                write!(f, "boundary vertex {vertex} is not a garment vertex")
            }
            Finding::EmptyMesh => write!(f, "mesh has no faces"),
        }
    }
}

/// Every violated mesh invariant, in a stable order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

pub fn validate_mesh(mesh: &TriMesh) -> ValidationReport {
    let mut findings = Vec::new();
    let n = mesh.vertices.len();

    for (v, p) in mesh.vertices.iter().enumerate() {
        if !p.iter().all(|c| c.is_finite()) {
            findings.push(Finding::NonFiniteVertex { vertex: v });
        }
    }

    let mut usable = vec![true; mesh.faces.len()];
    for (f, face) in mesh.faces.iter().enumerate() {
        let mut ok = true;
        for &index in face {
            if index >= n {
                findings.push(Finding::IndexOutOfRange { face: f, index });
                ok = false;
            }
        }
        if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
            findings.push(Finding::RepeatedVertex { face: f });
            ok = false;
        }
        if ok {
            let area = mesh.face_area(f);
            if !(area > MIN_FACE_AREA) {
                findings.push(Finding::DegenerateFace { face: f, area });
            }
        }
        usable[f] = ok;
    }

    let labels = &mesh.labels;
    if let Some(garment) = &labels.garment {
        for &v in garment {
            if v >= n {
                findings.push(Finding::LabelOutOfRange {
                    label: "garment",
                    vertex: v,
                });
            }
        }
    }
    for &v in &labels.boundary {
        if v >= n {
            findings.push(Finding::LabelOutOfRange {
                label: "boundary",
                vertex: v,
            });
        } else if !mesh.is_garment(v) {
            findings.push(Finding::BoundaryNotGarment { vertex: v });
        }
    }

    let mask = mesh.garment_mask();
    let edges = edge_face_map(&mesh.faces, |f| usable[f] && mesh.faces[f].iter().all(|&v| mask[v]));
    for (&edge, faces) in &edges {
        match faces.len() {
            1 => {}
            2 => {
                let (f, g) = (faces[0], faces[1]);
                if traverses(mesh.faces[f], edge) == traverses(mesh.faces[g], edge) {
                    findings.push(Finding::InconsistentOrientation { edge, faces: (f, g) });
                }
            }
            _ => findings.push(Finding::NonManifoldEdge {
                edge,
                faces: faces.clone(),
            }),
        }
    }

    ValidationReport { findings }
}

/// True if `face` walks the edge from its smaller to its larger vertex.
pub(crate) fn traverses(face: [usize; 3], edge: (usize, usize)) -> bool {
    (0..3).any(|i| face[i] == edge.0 && face[(i + 1) % 3] == edge.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::mesh::VertexLabels;

    fn square_vertices() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn valid_quad_has_empty_report() {
        let m = TriMesh::from_raw(square_vertices(), vec![[0, 1, 2], [0, 2, 3]]);
        assert!(validate_mesh(&m).is_empty());
    }

    #[test]
    fn repeated_vertex_is_reported() {
        let m = TriMesh::from_raw(square_vertices(), vec![[0, 0, 1]]);
        let r = validate_mesh(&m);
        assert_eq!(r.findings, vec![Finding::RepeatedVertex { face: 0 }]);
    }

    #[test]
    fn three_faces_on_one_edge_is_non_manifold() {
        let mut v = square_vertices();
        v.push(Vec3::new(0.5, 0.5, 1.0));
        let m = TriMesh::from_raw(v, vec![[0, 1, 2], [0, 2, 3], [2, 0, 4]]);
        let r = validate_mesh(&m);
        assert!(r.findings.iter().any(|f| matches!(
            f,
            Finding::NonManifoldEdge { edge: (0, 2), faces } if faces.len() == 3
        )));
    }

    #[test]
    fn out_of_range_and_degenerate() {
        let mut v = square_vertices();
        v.push(Vec3::new(2.0, 0.0, 0.0));
        let m = TriMesh::from_raw(v, vec![[0, 1, 9], [0, 1, 4]]);
        let r = validate_mesh(&m);
        assert!(r.findings.contains(&Finding::IndexOutOfRange { face: 0, index: 9 }));
        assert!(r
            .findings
            .iter()
            .any(|f| matches!(f, Finding::DegenerateFace { face: 1, .. })));
    }

    #[test]
    fn flipped_neighbor_is_reported() {
        let m = TriMesh::from_raw(square_vertices(), vec![[0, 1, 2], [0, 3, 2]]);
        let r = validate_mesh(&m);
        assert!(matches!(
            r.findings[..],
            [Finding::InconsistentOrientation { edge: (0, 2), .. }]
        ));
    }

    #[test]
    fn boundary_outside_garment() {
        let m = TriMesh::from_raw(square_vertices(), vec![[0, 1, 2], [0, 2, 3]]);
        let err = m
            .relabel(VertexLabels {
                garment: Some(vec![0, 1, 2]),
                boundary: vec![3],
            })
            .unwrap_err();
        assert!(err.to_string().contains("boundary vertex 3"));
    }
}
