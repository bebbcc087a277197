//! CSV formats for skin weights and pose tracks.

use std::path::Path;

use nalgebra::{Isometry3, Quaternion, Translation3};

use super::{SkeletonPose, SkinWeights};
use crate::error::{Error, Result};
use crate::geom::unit_quaternion;

/// Allowed deviation of a pose quaternion from unit length before it is rejected.
const QUAT_NORM_TOL: f64 = 1e-6;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Malformed {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn check_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header {}", expected.join(",")),
        });
    }
    Ok(())
}

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads `vertex,bone,weight` rows. The bone count is one more than the
/// largest bone index seen.
pub fn load_weights_csv(path: impl AsRef<Path>, vertex_count: usize) -> Result<SkinWeights> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(path, &mut rdr, &["vertex", "bone", "weight"])?;
    let mut rows = vec![Vec::new(); vertex_count];
    let mut bones = 0;
    for rec in rdr.deserialize::<(usize, usize, f64)>() {
        let (v, b, w) = rec.map_err(|e| csv_error(path, e))?;
        if v >= vertex_count {
            return Err(Error::Invalid(format!("{}: vertex {v} out of range", path.display())));
        }
        bones = bones.max(b + 1);
        rows[v].push((b, w));
    }
    SkinWeights::new(rows, bones)
}

pub fn save_weights_csv(path: impl AsRef<Path>, weights: &SkinWeights) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["vertex", "bone", "weight"])
        .map_err(|e| csv_error(path, e))?;
    for (v, row) in weights.rows().iter().enumerate() {
        for &(b, x) in row {
            w.serialize((v, b, x)).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `frame,bone,qw,qx,qy,qz,tx,ty,tz` rows into one pose per frame.
/// Frames must be contiguous from 0 and list the same bones `0..n`.
pub fn load_pose_csv(path: impl AsRef<Path>) -> Result<Vec<SkeletonPose>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    check_header(
        path,
        &mut rdr,
        &["frame", "bone", "qw", "qx", "qy", "qz", "tx", "ty", "tz"],
    )?;
    let mut frames: Vec<Vec<Option<Isometry3<f64>>>> = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, usize, [f64; 7])>().enumerate() {
        let line = i + 2;
        let (f, b, [qw, qx, qy, qz, tx, ty, tz]) = rec.map_err(|e| csv_error(path, e))?;
        let q = Quaternion::new(qw, qx, qy, qz);
        if !((q.norm() - 1.0).abs() <= QUAT_NORM_TOL) {
            return Err(malformed(path, line, format!("quaternion norm {} is not 1", q.norm())));
        }
        if ![tx, ty, tz].iter().all(|t| t.is_finite()) {
            return Err(malformed(path, line, "non-finite translation"));
        }
        if f >= frames.len() {
            frames.resize(f + 1, Vec::new());
        }
        let slots = &mut frames[f];
        if b >= slots.len() {
            slots.resize(b + 1, None);
        }
        if slots[b].is_some() {
            return Err(malformed(path, line, format!("duplicate frame {f} bone {b}")));
        }
        slots[b] = Some(Isometry3::from_parts(Translation3::new(tx, ty, tz), unit_quaternion(q)));
    }
    let bones = frames.first().map_or(0, |f| f.len());
    frames
        .into_iter()
        .enumerate()
        .map(|(f, slots)| {
            if slots.len() != bones || slots.iter().any(|s| s.is_none()) {
                return Err(Error::Invalid(format!(
                    "{}: frame {f} does not list bones 0..{bones}",
                    path.display()
                )));
            }
            Ok(SkeletonPose {
                transforms: slots.into_iter().flatten().collect(),
            })
        })
        .collect()
}

pub fn save_pose_csv(path: impl AsRef<Path>, poses: &[SkeletonPose]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["frame", "bone", "qw", "qx", "qy", "qz", "tx", "ty", "tz"])
        .map_err(|e| csv_error(path, e))?;
    for (f, pose) in poses.iter().enumerate() {
        for (b, iso) in pose.transforms.iter().enumerate() {
            let q = iso.rotation.quaternion();
            let t = iso.translation.vector;
            w.serialize((f, b, q.w, q.i, q.j, q.k, t.x, t.y, t.z))
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
