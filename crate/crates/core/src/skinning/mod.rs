//! Linear blend skinning, skin-weight transfer and boundary driving.

mod capsule;
mod io;
mod transfer;

pub use capsule::{capsule_man, capsule_man_poses};

pub use io::{load_pose_csv, load_weights_csv, save_pose_csv, save_weights_csv};
pub use transfer::{
    harmonic_fill, inpaint_weights, transfer_weights_direct, Laplacian, PartialWeights, TransferConfig,
};

use nalgebra::{Isometry3, Point3};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sim::BoundaryTrack;

/// Tolerance on the row sums of [`SkinWeights`].
pub const ROW_SUM_TOL: f64 = 1e-8;

/// Per-vertex `(bone, weight)` rows, sorted by bone with zero weights dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinWeights {
    rows: Vec<Vec<(usize, f64)>>,
    bones: usize,
}

pub(crate) fn canonical_row(row: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    let mut sorted = row.to_vec();
    sorted.sort_by_key(|&(b, _)| b);
    for (b, w) in sorted {
        match out.last_mut() {
            Some((lb, lw)) if *lb == b => *lw += w,
            _ => out.push((b, w)),
        }
    }
    out.retain(|&(_, w)| w != 0.0);
    out
}

impl SkinWeights {
    pub fn new(rows: Vec<Vec<(usize, f64)>>, bones: usize) -> Result<Self> {
        let rows: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| canonical_row(r)).collect();
        for (v, row) in rows.iter().enumerate() {
            if let Some(&(b, w)) = row.iter().find(|&&(b, w)| b >= bones || !(w >= 0.0)) {
                return Err(Error::Invalid(format!(
                    "vertex {v}: bone {b} weight {w} invalid for {bones} bones"
                )));
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Invalid(format!("vertex {v}: weights sum to {sum}")));
            }
        }
        Ok(SkinWeights { rows, bones })
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, v: usize) -> &[(usize, f64)] {
        &self.rows[v]
    }

    pub fn bones(&self) -> usize {
        self.bones
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row `v` as a dense vector over all bones.
    pub fn dense_row(&self, v: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.bones];
        for &(b, w) in &self.rows[v] {
            d[b] = w;
        }
        d
    }
}

/// One rigid transform per bone for a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPose {
    pub transforms: Vec<Isometry3<f64>>,
}

impl SkeletonPose {
    pub fn identity(bones: usize) -> Self {
        SkeletonPose {
            transforms: vec![Isometry3::identity(); bones],
        }
    }
}

/// `x_i = sum_j w_ij T_j(x_i)`.
pub fn lbs_pose(rest: &[Vec3], weights: &SkinWeights, pose: &SkeletonPose) -> Result<Vec<Vec3>> {
    if rest.len() != weights.len() {
        return Err(Error::Invalid(format!(
            "{} rest vertices, {} weight rows",
            rest.len(),
            weights.len()
        )));
    }
    if pose.transforms.len() < weights.bones() {
        return Err(Error::Invalid(format!(
            "pose has {} bones, weights reference {}",
            pose.transforms.len(),
            weights.bones()
        )));
    }
    Ok(rest
        .iter()
        .zip(weights.rows())
        .map(|(p, row)| {
            let p = Point3::from(*p);
            row.iter()
                .fold(Vec3::zeros(), |acc, &(b, w)| acc + (pose.transforms[b] * p).coords * w)
        })
        .collect())
}

/// Boundary track from skinning: each boundary vertex takes the weight row of
/// its nearest body vertex at rest (lowest index on ties) and is posed by LBS.
pub fn drive_boundary(
    boundary: &[usize],
    garment_rest: &[Vec3],
    body_rest: &[Vec3],
    body_weights: &SkinWeights,
    poses: &[SkeletonPose],
) -> Result<BoundaryTrack> {
    if body_rest.is_empty() || body_rest.len() != body_weights.len() {
        return Err(Error::Invalid(format!(
            "{} body vertices, {} weight rows",
            body_rest.len(),
            body_weights.len()
        )));
    }
    let mut rows = Vec::with_capacity(boundary.len());
    let mut points = Vec::with_capacity(boundary.len());
    for &b in boundary {
        let p = garment_rest
            .get(b)
            .ok_or_else(|| Error::Invalid(format!("boundary vertex {b} out of range")))?;
        let nearest = body_rest
            .iter()
            .enumerate()
            .fold((usize::MAX, f64::INFINITY), |best, (i, q)| {
                let d = (p - q).norm_squared();
                if d < best.1 {
                    (i, d)
                } else {
                    best
                }
            })
            .0;
        rows.push(body_weights.row(nearest).to_vec());
        points.push(*p);
    }
    let weights = SkinWeights::new(rows, body_weights.bones())?;
    let positions = poses
        .iter()
        .map(|pose| lbs_pose(&points, &weights, pose))
        .collect::<Result<Vec<_>>>()?;
    BoundaryTrack::new(boundary.to_vec(), positions)
}
