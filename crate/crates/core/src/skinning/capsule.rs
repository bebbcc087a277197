//! A small rigged body made of capsules, used as a skinning source in tests
//! and examples. Bones: 0 pelvis, 1 chest, 2 left arm, 3 right arm.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};

use super::{SkeletonPose, SkinWeights};
use crate::error::Result;
use crate::geom::Vec3;
use crate::mesh::TriMesh;

const SEGMENTS: usize = 12;
const CAP_RINGS: usize = 4;
const SIDE_RINGS: usize = 6;

/// Capsule along +y centered at the origin, outward-facing triangles.
fn capsule(radius: f64, half_length: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut rings: Vec<(f64, f64)> = Vec::new(); // (y, ring radius)
    for k in 1..=CAP_RINGS {
        let phi = -PI / 2.0 + PI / 2.0 * k as f64 / CAP_RINGS as f64;
        rings.push((-half_length + radius * phi.sin(), radius * phi.cos()));
    }
    for k in 1..SIDE_RINGS {
        rings.push((-half_length + 2.0 * half_length * k as f64 / SIDE_RINGS as f64, radius));
    }
    for k in 0..CAP_RINGS {
        let phi = PI / 2.0 * k as f64 / CAP_RINGS as f64;
        rings.push((half_length + radius * phi.sin(), radius * phi.cos()));
    }
    let mut v = vec![Vec3::new(0.0, -half_length - radius, 0.0)];
    for &(y, r) in &rings {
        for j in 0..SEGMENTS {
            let t = 2.0 * PI * j as f64 / SEGMENTS as f64;
            v.push(Vec3::new(r * t.cos(), y, -r * t.sin()));
        }
    }
    let top = v.len();
    v.push(Vec3::new(0.0, half_length + radius, 0.0));
    let at = |k: usize, j: usize| 1 + k * SEGMENTS + j % SEGMENTS;
    let mut f = Vec::new();
    for j in 0..SEGMENTS {
        f.push([0, at(0, j + 1), at(0, j)]);
        for k in 0..rings.len() - 1 {
            let (a, b, c, d) = (at(k, j), at(k, j + 1), at(k + 1, j + 1), at(k + 1, j));
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
        let k = rings.len() - 1;
        f.push([at(k, j), at(k, j + 1), top]);
    }
    (v, f)
}

fn smooth(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

const PELVIS_PIVOT: [f64; 3] = [0.0, 0.7, 0.0];
const CHEST_PIVOT: [f64; 3] = [0.0, 1.0, 0.0];
const SHOULDER_X: f64 = 0.25;
const SHOULDER_Y: f64 = 1.35;

/// Torso plus two arms, with smooth pelvis/chest and chest/arm blends.
pub fn capsule_man() -> Result<(TriMesh, SkinWeights)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut rows = Vec::new();

    let (tv, tf) = capsule(0.15, 0.35);
    for p in &tv {
        let p = p + Vec3::new(0.0, 1.0, 0.0);
        let t = smooth((p.y - PELVIS_PIVOT[1]) / 0.6);
        rows.push(vec![(0, 1.0 - t), (1, t)]);
        vertices.push(p);
    }
    faces.extend(tf);

    let (av, af) = capsule(0.06, 0.2);
    for (side, bone) in [(1.0, 2usize), (-1.0, 3usize)] {
        let base = vertices.len();
        // Rotate the +y capsule onto +-x.
        let r = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), -side * PI / 2.0);
        for p in &av {
            let p = r * p + Vec3::new(side * 0.45, SHOULDER_Y, 0.0);
            let s = smooth((p.x.abs() - SHOULDER_X) / 0.2);
            rows.push(vec![(1, 1.0 - s), (bone, s)]);
            vertices.push(p);
        }
        faces.extend(af.iter().map(|f| f.map(|i| i + base)));
    }
    let mesh = TriMesh::new(vertices, faces)?;
    let weights = SkinWeights::new(rows, 4)?;
    Ok((mesh, weights))
}

fn about(pivot: Vec3, rotation: UnitQuaternion<f64>) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::from(pivot), rotation)
        * Isometry3::from_parts(Translation3::from(-pivot), UnitQuaternion::identity())
}

/// A periodic walk-in-place: pelvis sways, chest twists, arms swing.
/// Frame 0 is the rest pose.
pub fn capsule_man_poses(frames: usize, amplitude: f64) -> Vec<SkeletonPose> {
    (0..frames)
        .map(|f| {
            let s = amplitude * (2.0 * PI * f as f64 / frames.max(1) as f64).sin();
            let pelvis = Isometry3::translation(0.0, 0.0, 0.05 * s);
            let chest = pelvis
                * about(
                    Vec3::from(CHEST_PIVOT),
                    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.2 * s),
                );
            let arm = |side: f64| {
                chest
                    * about(
                        Vec3::new(side * SHOULDER_X, SHOULDER_Y, 0.0),
                        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), side * 0.4 * s),
                    )
            };
            SkeletonPose {
                transforms: vec![pelvis, chest, arm(1.0), arm(-1.0)],
            }
        })
        .collect()
}
