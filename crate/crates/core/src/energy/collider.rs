//! Analytic collider primitives with rigid per-frame transform tracks.
//!
//! Config format (TOML):
//!
//! ```toml
//! [[collider]]
//! type = "sphere"                 # sphere | capsule | half-space
//! params = [0.0, 0.0, 0.0, 0.1]   # sphere: cx cy cz r
//!                                 # capsule: ax ay az bx by bz r
//!                                 # half-space: px py pz nx ny nz
//! frames = [[1, 0, 0, 0, 0, 0, 0]] # optional, per frame: qw qx qy qz tx ty tz
//! ```

use std::fs;
use std::path::Path;

use nalgebra::{Isometry3, Quaternion, Translation3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{unit_quaternion, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    Capsule {
        a: Vec3,
        b: Vec3,
        radius: f64,
    },
    /// Solid side is `(p - point) . normal < 0`.
    HalfSpace {
        point: Vec3,
        normal: Vec3,
    },
}

impl Primitive {
    pub fn validate(&self) -> Result<()> {
        match self {
            Primitive::Sphere { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Invalid(format!("sphere radius must be positive, got {radius}")))
            }
            Primitive::Capsule { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Invalid(format!("capsule radius must be positive, got {radius}")))
            }
            Primitive::Capsule { a, b, .. } if a == b => {
                Err(Error::Invalid("capsule endpoints must be distinct".into()))
            }
            Primitive::HalfSpace { normal, .. } if (normal.norm() - 1.0).abs() > 1e-9 => Err(Error::Invalid(format!(
                "half-space normal must be unit length, got {normal:?}"
            ))),
            _ => Ok(()),
        }
    }

    /// Signed distance and its gradient for a point in the primitive's own frame.
    fn local_distance(&self, p: &Vec3) -> (f64, Vec3) {
        match self {
            Primitive::Sphere { center, radius } => {
                let d = p - center;
                let len = d.norm();
                let n = if len > 0.0 { d / len } else { Vec3::y() };
                (len - radius, n)
            }
            Primitive::Capsule { a, b, radius } => {
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                let d = p - (a + ab * t);
                let len = d.norm();
                let n = if len > 0.0 { d / len } else { Vec3::y() };
                (len - radius, n)
            }
            Primitive::HalfSpace { point, normal } => ((p - point).dot(normal), *normal),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collider {
    pub primitive: Primitive,
    /// Per-frame placement. Empty means identity for every frame; a single entry
    /// is used for every frame.
    pub track: Vec<Isometry3<f64>>,
}

impl Collider {
    pub fn fixed(primitive: Primitive) -> Self {
        Collider {
            primitive,
            track: Vec::new(),
        }
    }

    pub fn pose(&self, frame: usize) -> Result<Isometry3<f64>> {
        match self.track.len() {
            0 => Ok(Isometry3::identity()),
            1 => Ok(self.track[0]),
            n if frame < n => Ok(self.track[frame]),
            n => Err(Error::Invalid(format!(
                "collider track has {n} frames, frame {frame} requested"
            ))),
        }
    }

    /// Signed distance from a world point and its world-space gradient.
    pub fn distance_and_gradient(&self, p: &Vec3, frame: usize) -> Result<(f64, Vec3)> {
        let pose = self.pose(frame)?;
        let local = pose.inverse_transform_point(&(*p).into());
        let (d, n) = self.primitive.local_distance(&local.coords);
        Ok((d, pose.rotation * n))
    }
}

/// Signed distance from `point` to `primitive` placed by `transform`; negative inside.
pub fn collider_distance(point: &Vec3, primitive: &Primitive, transform: &Isometry3<f64>) -> f64 {
    let local = transform.inverse_transform_point(&(*point).into());
    primitive.local_distance(&local.coords).0
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColliderSet {
    pub colliders: Vec<Collider>,
}

impl ColliderSet {
    pub fn new(colliders: Vec<Collider>) -> Result<Self> {
        for c in &colliders {
            c.primitive.validate()?;
        }
        Ok(ColliderSet { colliders })
    }

    pub fn empty() -> Self {
        ColliderSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.colliders.is_empty()
    }

    /// True if every track has a pose for frames `0..=last`.
    pub fn covers(&self, last: usize) -> bool {
        self.colliders
            .iter()
            .all(|c| c.track.len() <= 1 || c.track.len() > last)
    }

    /// Smallest signed distance of any point to any collider at `frame`,
    /// with the vertex and collider achieving it.
    pub fn min_distance(&self, x: &[Vec3], frame: usize) -> Result<Option<(f64, usize, usize)>> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ci, c) in self.colliders.iter().enumerate() {
            let pose = c.pose(frame)?;
            for (v, p) in x.iter().enumerate() {
                let d = collider_distance(p, &c.primitive, &pose);
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, v, ci));
                }
            }
        }
        Ok(best)
    }

    /// Largest step fraction in `[0, 1]` along `x + s * dx` such that no point
    /// comes closer than `keep` times its current distance to any collider.
    ///
    /// Uses conservative advancement, relying only on distance being
    /// 1-Lipschitz, so it works for every primitive.
    pub fn max_safe_step(&self, x: &[Vec3], dx: &[Vec3], frame: usize, keep: f64) -> Result<f64> {
        let mut alpha: f64 = 1.0;
        for c in &self.colliders {
            let pose = c.pose(frame)?;
            for (p, d) in x.iter().zip(dx) {
                let len = d.norm();
                if len == 0.0 {
                    continue;
                }
                let d0 = collider_distance(p, &c.primitive, &pose);
                if d0 >= len * alpha {
                    continue;
                }
                let floor = keep * d0;
                let mut t = 0.0;
                for _ in 0..200 {
                    let dist = collider_distance(&(p + d * t), &c.primitive, &pose);
                    let step = (dist - floor) / len;
                    if step <= 1e-12 * alpha {
                        break;
                    }
                    t += step;
                    if t >= alpha {
                        break;
                    }
                }
                alpha = alpha.min(t);
            }
        }
        Ok(alpha.max(0.0))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ColliderFile {
    #[serde(default)]
    collider: Vec<ColliderEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ColliderEntry {
    #[serde(rename = "type")]
    kind: String,
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    frames: Vec<[f64; 7]>,
}

pub fn parse_colliders(text: &str) -> Result<ColliderSet> {
    let file: ColliderFile = toml::from_str(text).map_err(|e| Error::Invalid(format!("collider config: {e}")))?;
    let mut colliders = Vec::new();
    for (i, entry) in file.collider.into_iter().enumerate() {
        let p = &entry.params;
        let need = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::Invalid(format!(
                    "collider {i} ({}) needs {n} params, got {}",
                    entry.kind,
                    p.len()
                )))
            }
        };
        let v = |k: usize| Vec3::new(p[k], p[k + 1], p[k + 2]);
        let primitive = match entry.kind.as_str() {
            "sphere" => {
                need(4)?;
                Primitive::Sphere {
                    center: v(0),
                    radius: p[3],
                }
            }
            "capsule" => {
                need(7)?;
                Primitive::Capsule {
                    a: v(0),
                    b: v(3),
                    radius: p[6],
                }
            }
            "half-space" | "halfspace" | "plane" => {
                need(6)?;
                Primitive::HalfSpace {
                    point: v(0),
                    normal: v(3),
                }
            }
            other => return Err(Error::Invalid(format!("unknown collider type {other:?}"))),
        };
        let track = entry
            .frames
            .iter()
            .map(|f| {
                let q = unit_quaternion(Quaternion::new(f[0], f[1], f[2], f[3]));
                Isometry3::from_parts(Translation3::new(f[4], f[5], f[6]), q)
            })
            .collect();
        colliders.push(Collider { primitive, track });
    }
    ColliderSet::new(colliders)
}

pub fn load_colliders(path: impl AsRef<Path>) -> Result<ColliderSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_colliders(&text)
}

pub fn colliders_to_toml(set: &ColliderSet) -> String {
    let entries = set
        .colliders
        .iter()
        .map(|c| {
            let (kind, params) = match &c.primitive {
                Primitive::Sphere { center, radius } => ("sphere", vec![center.x, center.y, center.z, *radius]),
                Primitive::Capsule { a, b, radius } => ("capsule", vec![a.x, a.y, a.z, b.x, b.y, b.z, *radius]),
                Primitive::HalfSpace { point, normal } => (
                    "half-space",
                    vec![point.x, point.y, point.z, normal.x, normal.y, normal.z],
                ),
            };
            let frames = c
                .track
                .iter()
                .map(|iso| {
                    let q = iso.rotation.quaternion();
                    let t = iso.translation.vector;
                    [q.w, q.i, q.j, q.k, t.x, t.y, t.z]
                })
                .collect();
            ColliderEntry {
                kind: kind.to_string(),
                params,
                frames,
            }
        })
        .collect();
    toml::to_string(&ColliderFile { collider: entries }).expect("collider config serializes")
}

pub fn save_colliders(set: &ColliderSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, colliders_to_toml(set)).map_err(|e| Error::io(path, e))
}
