//! Discrete-shell hinge bending energy.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::ModelConstants;
use crate::error::{Error, Result};
use crate::geom::{dihedral_angle, dihedral_angle_gradient, dihedral_angle_hessian, wrap_angle, Vec3};
use crate::linalg::project_psd;
use crate::mesh::{Hinge, RestState};

const MIN_CURRENT_AREA: f64 = 1e-14;

fn hinge_points<'a>(x: &'a [Vec3], h: &Hinge) -> [&'a Vec3; 4] {
    let [i, j, k, l] = h.verts;
    [&x[i], &x[j], &x[k], &x[l]]
}

fn singular(index: usize, msg: &str) -> Error {
    Error::SingularElement {
        kind: "bending",
        index,
        msg: msg.to_string(),
    }
}

fn check_hinge(p: [&Vec3; 4], index: usize) -> Result<()> {
    let e = p[1] - p[0];
    let a1 = 0.5 * e.cross(&(p[2] - p[0])).norm();
    let a2 = 0.5 * e.cross(&(p[3] - p[0])).norm();
    if a1 < MIN_CURRENT_AREA || a2 < MIN_CURRENT_AREA || !(a1 + a2).is_finite() {
        return Err(singular(index, "incident face collapsed"));
    }
    Ok(())
}

/// `kappa_b * k_base * sum_h (theta - theta_rest)^2 * |e| / h_e` and its gradient.
pub fn bending_energy_grad(
    x: &[Vec3],
    rest: &RestState,
    kappa_b: f64,
    constants: &ModelConstants,
) -> Result<(f64, Vec<Vec3>)> {
    let k = kappa_b * constants.bending_base;
    let mut energy = 0.0;
    let mut grad = vec![Vec3::zeros(); x.len()];
    for (hi, hinge) in rest.hinges.iter().enumerate() {
        let p = hinge_points(x, hinge);
        check_hinge(p, hi)?;
        let theta = dihedral_angle(p).ok_or_else(|| singular(hi, "degenerate hinge"))?;
        let dtheta = dihedral_angle_gradient(p).ok_or_else(|| singular(hi, "degenerate hinge"))?;
        let diff = wrap_angle(theta - hinge.rest_angle);
        let w = k * hinge.weight();
        energy += w * diff * diff;
        let scale = 2.0 * w * diff;
        for (v, g) in hinge.verts.iter().zip(&dtheta) {
            grad[*v] += g * scale;
        }
    }
    Ok((energy, grad))
}

/// Per-hinge Hessian `2 w (grad theta grad theta^T + diff * hess theta)`, projected to PSD.
pub fn bending_hessian(
    x: &[Vec3],
    rest: &RestState,
    kappa_b: f64,
    constants: &ModelConstants,
    sink: &mut dyn FnMut(usize, usize, &Matrix3<f64>),
) -> Result<()> {
    let k = kappa_b * constants.bending_base;
    for (hi, hinge) in rest.hinges.iter().enumerate() {
        let p = hinge_points(x, hinge);
        check_hinge(p, hi)?;
        let theta = dihedral_angle(p).ok_or_else(|| singular(hi, "degenerate hinge"))?;
        let dtheta = dihedral_angle_gradient(p).ok_or_else(|| singular(hi, "degenerate hinge"))?;
        let diff = wrap_angle(theta - hinge.rest_angle);
        let w = k * hinge.weight();
        let mut g = SVector::<f64, 12>::zeros();
        for v in 0..4 {
            g.fixed_rows_mut::<3>(3 * v).copy_from(&dtheta[v]);
        }
        let mut hess: SMatrix<f64, 12, 12> = g * g.transpose();
        if diff != 0.0 {
            let h2 = dihedral_angle_hessian(p).ok_or_else(|| singular(hi, "degenerate hinge"))?;
            hess += h2 * diff;
        }
        let hess = project_psd(&(hess * (2.0 * w)));
        for (a, &va) in hinge.verts.iter().enumerate() {
            for (b, &vb) in hinge.verts.iter().enumerate() {
                let block: Matrix3<f64> = hess.fixed_view::<3, 3>(3 * a, 3 * b).into();
                sink(va, vb, &block);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rest_state, TriMesh};
    use std::f64::consts::FRAC_PI_2;

    /// Hinge along x with |e| = 1 and two faces of area 1/2 each, so h = 1/3.
    fn unit_hinge() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.5, 1.0, 0.0),
                Vec3::new(0.5, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn flat_is_zero() {
        let m = unit_hinge();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        let (e, g) = bending_energy_grad(m.vertices(), &rest, 1.0, &ModelConstants::default()).unwrap();
        assert_eq!(e, 0.0);
        assert!(g.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn right_angle_fold_energy() {
        let m = unit_hinge();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        let h = &rest.hinges[0];
        assert!((h.rest_height - 1.0 / 3.0).abs() < 1e-15);
        // fold face two down to 90 degrees, keeping its height 1 from the edge
        let mut x = m.vertices().to_vec();
        x[3] = Vec3::new(0.5, 0.0, -1.0);
        let c = ModelConstants {
            bending_base: 1.0,
            ..ModelConstants::default()
        };
        let (e, _) = bending_energy_grad(&x, &rest, 1.0, &c).unwrap();
        let expect = FRAC_PI_2 * FRAC_PI_2 * 3.0;
        assert!((e - expect).abs() < 1e-12, "{e}");
        assert!((expect - 7.402203).abs() < 1e-6);
    }

    #[test]
    fn linear_in_kappa() {
        let m = unit_hinge();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        let mut x = m.vertices().to_vec();
        x[2].z += 0.3;
        let c = ModelConstants::default();
        let (e1, _) = bending_energy_grad(&x, &rest, 1.5, &c).unwrap();
        let (e2, _) = bending_energy_grad(&x, &rest, 3.0, &c).unwrap();
        assert_eq!(e2, 2.0 * e1);
    }

    #[test]
    fn collapsed_face_is_singular() {
        let m = unit_hinge();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        let mut x = m.vertices().to_vec();
        x[2] = Vec3::new(0.5, 0.0, 0.0);
        assert!(matches!(
            bending_energy_grad(&x, &rest, 1.0, &ModelConstants::default()),
            Err(Error::SingularElement { kind: "bending", .. })
        ));
    }
}
