//! Isotropic StVK membrane energy on constant-strain triangles.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, SMatrix};

use super::ModelConstants;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::project_psd;
use crate::mesh::RestState;

/// Current faces below this area are treated as collapsed.
const MIN_CURRENT_AREA: f64 = 1e-14;

struct Element {
    f: Matrix3x2<f64>,
    s: Matrix2<f64>,
    psi: f64,
}

fn element(x: [&Vec3; 3], dm_inv: &Matrix2<f64>, mu: f64, lambda: f64) -> Element {
    let ds = Matrix3x2::from_columns(&[x[1] - x[0], x[2] - x[0]]);
    let f = ds * dm_inv;
    let e = (f.transpose() * f - Matrix2::identity()) * 0.5;
    let tr = e.trace();
    let s = e * (2.0 * mu) + Matrix2::identity() * (lambda * tr);
    let psi = mu * e.norm_squared() + 0.5 * lambda * tr * tr;
    Element { f, s, psi }
}

fn check_face(x: &[Vec3], face: [usize; 3], index: usize) -> Result<()> {
    let [a, b, c] = face;
    let area = 0.5 * (x[b] - x[a]).cross(&(x[c] - x[a])).norm();
    if area < MIN_CURRENT_AREA || !area.is_finite() {
        return Err(Error::SingularElement {
            kind: "membrane",
            index,
            msg: format!("current area {area:e}"),
        });
    }
    Ok(())
}

/// Returns the membrane energy `sum_f A h Psi(F)` and its gradient.
pub fn membrane_energy_grad(
    x: &[Vec3],
    rest: &RestState,
    kappa_s: f64,
    constants: &ModelConstants,
) -> Result<(f64, Vec<Vec3>)> {
    let (mu, lambda) = constants.lame(kappa_s);
    let h = rest.thickness;
    let mut energy = 0.0;
    let mut grad = vec![Vec3::zeros(); x.len()];
    for (fi, &face) in rest.faces.iter().enumerate() {
        check_face(x, face, fi)?;
        let [a, b, c] = face;
        let el = element([&x[a], &x[b], &x[c]], &rest.dm_inv[fi], mu, lambda);
        let vol = rest.areas[fi] * h;
        energy += vol * el.psi;
        // dW/dDs = vol * P * Dm^-T with P = F S
        let g = (el.f * el.s) * rest.dm_inv[fi].transpose() * vol;
        let g1: Vec3 = g.column(0).into();
        let g2: Vec3 = g.column(1).into();
        grad[b] += g1;
        grad[c] += g2;
        grad[a] -= g1 + g2;
    }
    Ok((energy, grad))
}

/// Second derivative of `Psi` with respect to `vec(F)` (column-major 3x2).
fn psi_hessian(f: &Matrix3x2<f64>, s: &Matrix2<f64>, mu: f64, lambda: f64) -> SMatrix<f64, 6, 6> {
    let mut out = SMatrix::<f64, 6, 6>::zeros();
    for col in 0..6 {
        let mut df = Matrix3x2::zeros();
        df[(col % 3, col / 3)] = 1.0;
        let de = (df.transpose() * f + f.transpose() * df) * 0.5;
        let ds = de * (2.0 * mu) + Matrix2::identity() * (lambda * de.trace());
        let dp = df * s + f * ds;
        for k in 0..6 {
            out[(k, col)] = dp[(k % 3, k / 3)];
        }
    }
    out
}

/// Exact per-element StVK Hessian, projected to PSD, delivered as 3x3 blocks.
pub fn membrane_hessian(
    x: &[Vec3],
    rest: &RestState,
    kappa_s: f64,
    constants: &ModelConstants,
    sink: &mut dyn FnMut(usize, usize, &Matrix3<f64>),
) -> Result<()> {
    let (mu, lambda) = constants.lame(kappa_s);
    for (fi, &face) in rest.faces.iter().enumerate() {
        check_face(x, face, fi)?;
        let [a, b, c] = face;
        let dm = &rest.dm_inv[fi];
        let el = element([&x[a], &x[b], &x[c]], dm, mu, lambda);
        let hf = psi_hessian(&el.f, &el.s, mu, lambda);
        // vec(F) = B x, where F[:, c] = sum_v coef(v, c) x_v
        let coef = |v: usize, col: usize| match v {
            0 => -(dm[(0, col)] + dm[(1, col)]),
            1 => dm[(0, col)],
            _ => dm[(1, col)],
        };
        let mut b_mat = SMatrix::<f64, 6, 9>::zeros();
        for col in 0..2 {
            for v in 0..3 {
                for r in 0..3 {
                    b_mat[(col * 3 + r, v * 3 + r)] = coef(v, col);
                }
            }
        }
        let vol = rest.areas[fi] * rest.thickness;
        let hx = project_psd(&(b_mat.transpose() * hf * b_mat * vol));
        for (p, &vp) in face.iter().enumerate() {
            for (q, &vq) in face.iter().enumerate() {
                let block: Matrix3<f64> = hx.fixed_view::<3, 3>(3 * p, 3 * q).into();
                sink(vp, vq, &block);
            }
        }
    }
    Ok(())
}
