use nalgebra::Matrix2;

use super::validate::traverses;
use super::{edge_face_map, Finding, TriMesh, ValidationReport, MIN_FACE_AREA};
use crate::error::{Error, Result};
use crate::geom::{dihedral_angle, Vec3};

/// An interior edge with its two incident faces.
///
/// `verts = [i, j, k, l]`: face one is the face that walks `i -> j` and has `k`
/// as its third vertex; face two walks `j -> i` and has `l`. `i < j` always.
#[derive(Debug, Clone, PartialEq)]
pub struct Hinge {
    pub verts: [usize; 4],
    pub faces: [usize; 2],
    pub rest_angle: f64,
    pub rest_edge_length: f64,
    /// `(A1 + A2) / (3 |e|)`
    pub rest_height: f64,
}

impl Hinge {
    /// `|e| / h`, the per-hinge bending weight.
    pub fn weight(&self) -> f64 {
        self.rest_edge_length / self.rest_height
    }
}

#[derive(Debug, Clone)]
pub struct RestState {
    pub faces: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    /// Inverse of the 2x2 rest edge matrix in each face's own planar frame.
    pub dm_inv: Vec<Matrix2<f64>>,
    pub hinges: Vec<Hinge>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    pub density: f64,
    pub thickness: f64,
}

impl RestState {
    /// Lumped masses for a different density, keeping the geometry.
    pub fn with_density(&self, density: f64) -> RestState {
        let scale = density / self.density;
        let mut out = self.clone();
        for m in &mut out.masses {
            *m *= scale;
        }
        out.total_mass = out.masses.iter().sum();
        out.density = density;
        out
    }
}

/// Rest edge matrix `[e1 e2]` expressed in an orthonormal frame of the face plane.
pub(crate) fn rest_edge_matrix(x0: &Vec3, x1: &Vec3, x2: &Vec3) -> Matrix2<f64> {
    let e1 = x1 - x0;
    let e2 = x2 - x0;
    let t1 = e1.normalize();
    let n = e1.cross(&e2);
    let t2 = n.cross(&e1).normalize();
    Matrix2::new(e1.dot(&t1), e2.dot(&t1), e1.dot(&t2), e2.dot(&t2))
}

pub fn build_rest_state(mesh: &TriMesh, density: f64, thickness: f64) -> Result<RestState> {
    if !(density > 0.0) || !(thickness > 0.0) {
        return Err(Error::Invalid(format!(
            "density and thickness must be positive (got {density}, {thickness})"
        )));
    }
    let verts = mesh.vertices();
    let faces = mesh.faces();
    let mut areas = Vec::with_capacity(faces.len());
    let mut dm_inv = Vec::with_capacity(faces.len());
    let mut report = ValidationReport::default();
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        let area = mesh.face_area(f);
        let inv = rest_edge_matrix(&verts[a], &verts[b], &verts[c]).try_inverse();
        match inv {
            Some(inv) if area > MIN_FACE_AREA => {
                areas.push(area);
                dm_inv.push(inv);
            }
            _ => {
                report.findings.push(Finding::DegenerateFace { face: f, area });
                areas.push(area);
                dm_inv.push(Matrix2::zeros());
            }
        }
    }

    let mask = mesh.garment_mask();
    let edges = edge_face_map(faces, |f| faces[f].iter().all(|&v| mask[v]));
    let mut hinges = Vec::new();
    for (&(i, j), inc) in &edges {
        match inc.len() {
            1 => {}
            2 => {
                let (f1, f2) = if traverses(faces[inc[0]], (i, j)) {
                    (inc[0], inc[1])
                } else {
                    (inc[1], inc[0])
                };
                if traverses(faces[f2], (i, j)) {
                    report.findings.push(Finding::InconsistentOrientation {
                        edge: (i, j),
                        faces: (f1, f2),
                    });
                    continue;
                }
                let k = opposite(faces[f1], i, j);
                let l = opposite(faces[f2], i, j);
                let x = [&verts[i], &verts[j], &verts[k], &verts[l]];
                let Some(rest_angle) = dihedral_angle(x) else {
                    continue;
                };
                let rest_edge_length = (verts[j] - verts[i]).norm();
                let rest_height = (areas[f1] + areas[f2]) / (3.0 * rest_edge_length);
                hinges.push(Hinge {
                    verts: [i, j, k, l],
                    faces: [f1, f2],
                    rest_angle,
                    rest_edge_length,
                    rest_height,
                });
            }
            _ => report.findings.push(Finding::NonManifoldEdge {
                edge: (i, j),
                faces: inc.clone(),
            }),
        }
    }
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }

    let areal = density * thickness;
    let mut masses = vec![0.0; verts.len()];
    for (f, face) in faces.iter().enumerate() {
        let share = areal * areas[f] / 3.0;
        for &v in face {
            masses[v] += share;
        }
    }
    if let Some(v) = masses.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::Invalid(format!("vertex {v} belongs to no face and has no mass")));
    }
    let total_mass = masses.iter().sum();
    Ok(RestState {
        faces: faces.to_vec(),
        areas,
        dm_inv,
        hinges,
        masses,
        total_mass,
        density,
        thickness,
    })
}

fn opposite(face: [usize; 3], i: usize, j: usize) -> usize {
    *face
        .iter()
        .find(|&&v| v != i && v != j)
        .expect("triangle has a third vertex")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_right_triangle_mass() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        for &mass in &rest.masses {
            assert!((mass - 0.02).abs() < 1e-15, "{mass}");
        }
        assert!(rest.hinges.is_empty());
        // Dm maps the rest triangle onto itself: |det| equals twice the area
        let det = rest.dm_inv[0].try_inverse().unwrap().determinant();
        assert!((det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_quad_has_one_flat_hinge() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        assert_eq!(rest.hinges.len(), 1);
        let h = &rest.hinges[0];
        assert_eq!(h.verts, [0, 2, 3, 1]);
        assert_eq!(h.rest_angle, 0.0);
        assert!((h.rest_height - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    pub(crate) fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn closed_tetrahedron_has_six_hinges() {
        let rest = build_rest_state(&tetrahedron(), 400.0, 3e-4).unwrap();
        assert_eq!(rest.hinges.len(), 6);
        // outward normals: every edge is a convex fold
        assert!(rest.hinges.iter().all(|h| h.rest_angle > 0.0));
    }

    #[test]
    fn hinges_follow_garment_region() {
        let m = tetrahedron()
            .relabel(crate::mesh::VertexLabels {
                garment: Some(vec![0, 1, 2]),
                boundary: vec![],
            })
            .unwrap();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        assert!(rest.hinges.is_empty());
    }

    #[test]
    fn with_density_rescales_masses() {
        let rest = build_rest_state(&tetrahedron(), 400.0, 3e-4).unwrap();
        let heavy = rest.with_density(800.0);
        assert!((heavy.total_mass - 2.0 * rest.total_mass).abs() < 1e-15);
    }

    fn random_mesh(seed_pts: &[f64]) -> TriMesh {
        // jittered 4x4 grid
        let n = 4;
        let mut verts = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let k = 3 * (r * n + c);
                verts.push(Vec3::new(
                    c as f64 + 0.3 * seed_pts[k],
                    r as f64 + 0.3 * seed_pts[k + 1],
                    seed_pts[k + 2],
                ));
            }
        }
        let mut faces = Vec::new();
        for r in 0..n - 1 {
            for c in 0..n - 1 {
                let a = r * n + c;
                faces.push([a, a + 1, a + n + 1]);
                faces.push([a, a + n + 1, a + n]);
            }
        }
        TriMesh::new(verts, faces).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn lumped_mass_total(pts in prop::collection::vec(-1.0f64..1.0, 48),
                             rho in 200.0f64..640.0) {
            let m = random_mesh(&pts);
            let rest = build_rest_state(&m, rho, 3e-4).unwrap();
            let expect = rho * 3e-4 * m.total_area();
            prop_assert!((rest.total_mass - expect).abs() <= 1e-12 * expect);
        }

        #[test]
        fn hinges_independent_of_face_order(pts in prop::collection::vec(-1.0f64..1.0, 48),
                                            rot in 0usize..18) {
            let m = random_mesh(&pts);
            let mut faces = m.faces().to_vec();
            faces.rotate_left(rot);
            faces.reverse();
            let shuffled = TriMesh::new(m.vertices().to_vec(), faces).unwrap();
            let a = build_rest_state(&m, 400.0, 3e-4).unwrap();
            let b = build_rest_state(&shuffled, 400.0, 3e-4).unwrap();
            prop_assert_eq!(a.hinges.len(), b.hinges.len());
            for (ha, hb) in a.hinges.iter().zip(&b.hinges) {
                prop_assert_eq!(ha.verts, hb.verts);
                prop_assert!((ha.rest_angle - hb.rest_angle).abs() < 1e-12);
            }
        }

        #[test]
        fn mirror_negates_rest_angles(pts in prop::collection::vec(-1.0f64..1.0, 48)) {
            let m = random_mesh(&pts);
            let mirrored: Vec<Vec3> = m.vertices().iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
            let mm = TriMesh::new(mirrored, m.faces().to_vec()).unwrap();
            let a = build_rest_state(&m, 400.0, 3e-4).unwrap();
            let b = build_rest_state(&mm, 400.0, 3e-4).unwrap();
            for (ha, hb) in a.hinges.iter().zip(&b.hinges) {
                prop_assert!((ha.rest_angle + hb.rest_angle).abs() < 1e-12);
            }
        }
    }
}
