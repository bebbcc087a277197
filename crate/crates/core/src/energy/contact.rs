//! Log-barrier contact between garment vertices and analytic colliders.

use nalgebra::Matrix3;

use super::{ColliderSet, ModelConstants};
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// `b(d) = -kappa (d - dhat)^2 ln(d / dhat)` for `0 < d < dhat`, zero beyond.
pub fn barrier(d: f64, dhat: f64, kappa: f64) -> f64 {
    if d >= dhat {
        return 0.0;
    }
    let s = d - dhat;
    -kappa * s * s * (d / dhat).ln()
}

pub fn barrier_derivative(d: f64, dhat: f64, kappa: f64) -> f64 {
    if d >= dhat {
        return 0.0;
    }
    let s = d - dhat;
    -kappa * (2.0 * s * (d / dhat).ln() + s * s / d)
}

pub fn barrier_second_derivative(d: f64, dhat: f64, kappa: f64) -> f64 {
    if d >= dhat {
        return 0.0;
    }
    let s = d - dhat;
    -kappa * (2.0 * (d / dhat).ln() + 4.0 * s / d - s * s / (d * d))
}

fn for_each_active(
    x: &[Vec3],
    colliders: &ColliderSet,
    frame: usize,
    dhat: f64,
    mut visit: impl FnMut(usize, f64, Vec3),
) -> Result<()> {
    for (ci, c) in colliders.colliders.iter().enumerate() {
        for (v, p) in x.iter().enumerate() {
            let (d, n) = c.distance_and_gradient(p, frame)?;
            if !(d > 0.0) {
                return Err(Error::Penetration {
                    vertex: v,
                    collider: ci,
                    distance: d,
                });
            }
            if d < dhat {
                visit(v, d, n);
            }
        }
    }
    Ok(())
}

/// Summed barrier energy over every vertex-collider pair, with its gradient.
pub fn contact_energy_grad(
    x: &[Vec3],
    colliders: &ColliderSet,
    frame: usize,
    constants: &ModelConstants,
) -> Result<(f64, Vec<Vec3>)> {
    let (dhat, kappa) = (constants.barrier_dhat, constants.barrier_stiffness);
    let mut energy = 0.0;
    let mut grad = vec![Vec3::zeros(); x.len()];
    for_each_active(x, colliders, frame, dhat, |v, d, n| {
        energy += barrier(d, dhat, kappa);
        grad[v] += n * barrier_derivative(d, dhat, kappa);
    })?;
    Ok((energy, grad))
}

/// Per-pair Hessian `b''(d) n n^T`. The omitted `b'(d) hess d` part is
/// negative semidefinite (b' < 0, distance Hessians are PSD), so this is
/// exactly its PSD projection.
pub fn contact_hessian(
    x: &[Vec3],
    colliders: &ColliderSet,
    frame: usize,
    constants: &ModelConstants,
    sink: &mut dyn FnMut(usize, usize, &Matrix3<f64>),
) -> Result<()> {
    let (dhat, kappa) = (constants.barrier_dhat, constants.barrier_stiffness);
    for_each_active(x, colliders, frame, dhat, |v, d, n| {
        let block = n * n.transpose() * barrier_second_derivative(d, dhat, kappa);
        sink(v, v, &block);
    })
}
