//! Isometry and normal-smoothness regularizers with analytic gradients.

use crate::error::{Error, Result};
use crate::geom::{area_normal, Vec3};
use crate::mesh::TriMesh;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// 1-ring neighborhoods and their lengths in the initial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryRef {
    pub rings: Vec<Vec<usize>>,
    pub lengths: Vec<Vec<f64>>,
    /// Penalize the squared length change instead of its magnitude.
    pub squared: bool,
    /// Width of the rounded corner of the magnitude, m. Zero is the exact `|d|`.
    pub smoothing: f64,
}

impl IsometryRef {
    pub fn new(initial: &TriMesh, squared: bool) -> Self {
        let rings = initial.vertex_rings();
        let x = initial.vertices();
        let lengths = rings
            .iter()
            .enumerate()
            .map(|(v, ring)| ring.iter().map(|&u| (x[v] - x[u]).norm()).collect())
            .collect();
        IsometryRef {
            rings,
            lengths,
            squared,
            smoothing: 0.0,
        }
    }

    /// `1/|V| sum_v 1/|N(v)| sum_{u in N(v)} |l1(v,u) - lt(v,u)|`.
    pub fn loss_grad(&self, x: &[Vec3]) -> (f64, Vec<Vec3>) {
        let n = self.rings.len();
        let mut loss = 0.0;
        let mut grad = vec![Vec3::zeros(); x.len()];
        for v in 0..n {
            let ring = &self.rings[v];
            if ring.is_empty() {
                continue;
            }
            let w = 1.0 / (ring.len() as f64 * n as f64);
            for (&u, &l1) in ring.iter().zip(&self.lengths[v]) {
                let e = x[v] - x[u];
                let lt = e.norm();
                let diff = l1 - lt;
                let eta = self.smoothing;
                let (term, dterm) = if self.squared {
                    (diff * diff, 2.0 * diff)
                } else if eta > 0.0 {
                    let r = (diff * diff + eta * eta).sqrt();
                    (r - eta, diff / r)
                } else {
                    (diff.abs(), sign(diff))
                };
                loss += w * term;
                if lt > 0.0 && dterm != 0.0 {
                    // d(diff)/dx_v = -e/lt
                    let g = e * (-w * dterm / lt);
                    grad[v] += g;
                    grad[u] -= g;
                }
            }
        }
        (loss, grad)
    }
}

/// Edge-adjacent faces of every face.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalRef {
    pub faces: Vec<[usize; 3]>,
    pub neighbors: Vec<Vec<usize>>,
}

impl NormalRef {
    pub fn new(mesh: &TriMesh) -> Self {
        NormalRef {
            faces: mesh.faces().to_vec(),
            neighbors: mesh.face_neighbors(),
        }
    }

    /// `1/|F| sum_f sum_{g in N(f)} (1 - n_f . n_g)`.
    pub fn loss_grad(&self, x: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let nf = self.faces.len();
        let mut area = Vec::with_capacity(nf);
        let mut normals = Vec::with_capacity(nf);
        for (fi, f) in self.faces.iter().enumerate() {
            let a = area_normal(&x[f[0]], &x[f[1]], &x[f[2]]);
            let len = a.norm();
            if !(0.5 * len > 1e-14) {
                return Err(Error::SingularElement {
                    kind: "normal",
                    index: fi,
                    msg: format!("face area {:e}", 0.5 * len),
                });
            }
            area.push(a);
            normals.push(a / len);
        }
        let scale = 1.0 / nf as f64;
        let mut loss = 0.0;
        let mut grad = vec![Vec3::zeros(); x.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let n = normals[fi];
            let mut gn = Vec3::zeros();
            for &g in &self.neighbors[fi] {
                loss += scale * (1.0 - n.dot(&normals[g]));
                // Each unordered pair appears twice in the sum.
                gn -= normals[g] * (2.0 * scale);
            }
            let len = area[fi].norm();
            let ga = (gn - n * n.dot(&gn)) / len;
            let (e1, e2) = (x[f[1]] - x[f[0]], x[f[2]] - x[f[0]]);
            let g1 = e2.cross(&ga);
            let g2 = ga.cross(&e1);
            grad[f[0]] -= g1 + g2;
            grad[f[1]] += g1;
            grad[f[2]] += g2;
        }
        Ok((loss, grad))
    }
}

/// Isometry loss of `current` against the 1-ring edge lengths of `initial`,
/// using absolute length differences.
pub fn iso_loss(current: &[Vec3], initial: &TriMesh) -> f64 {
    IsometryRef::new(initial, false).loss_grad(current).0
}

/// Normal-consistency loss of `current` over the face adjacency of `mesh`.
pub fn normal_loss(current: &[Vec3], mesh: &TriMesh) -> Result<f64> {
    Ok(NormalRef::new(mesh).loss_grad(current)?.0)
}
