//! Per-frame mesh tracking against vertex targets.
//!
//! Each frame minimizes a confidence-weighted vertex data term plus the
//! isometry and normal regularizers, starting from the previous frame's
//! result.

mod loss;

pub use loss::{iso_loss, normal_loss, IsometryRef, NormalRef};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{MeshSequence, TriMesh};
use crate::optim::{AdamConfig, AdamState};

/// Halvings tried on one Adam direction before the frame stops early.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    pub iso_weight: f64,
    pub normal_weight: f64,
    pub data_weight: f64,
    pub iterations: usize,
    /// Adam step size, m.
    pub step: f64,
    /// Squared instead of absolute edge-length differences in the isometry term.
    pub squared_iso: bool,
    /// Rounds the corner of the absolute difference over this width, m.
    /// At exactly zero every untouched edge sits on the kink, where the
    /// subgradient is 0 and any move looks uphill, so descent stalls.
    pub iso_smoothing: f64,
    pub adam: AdamConfig,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            iso_weight: 10.0,
            normal_weight: 0.1,
            // The data term is in m² and the isometry term in m; at weight 1
            // the isometry term locks the mesh before it can follow the targets.
            data_weight: 30.0,
            iterations: 200,
            step: 1e-3,
            squared_iso: false,
            iso_smoothing: 1e-4,
            adam: AdamConfig::default(),
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        let w = [
            self.iso_weight,
            self.normal_weight,
            self.data_weight,
            self.iso_smoothing,
        ];
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Invalid(format!(
                "tracking weights and smoothing must be non-negative, got {w:?}"
            )));
        }
        if self.iterations < 1 || !(self.step > 0.0) {
            return Err(Error::Invalid(format!(
                "tracking needs at least one iteration and a positive step, got {} and {}",
                self.iterations, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFrame {
    pub positions: Vec<Vec3>,
    /// Per-vertex confidence in `[0, 1]`; `None` means all ones.
    pub confidence: Option<Vec<f64>>,
}

impl TargetFrame {
    pub fn new(positions: Vec<Vec3>, confidence: Option<Vec<f64>>) -> Result<Self> {
        if let Some(c) = &confidence {
            if c.len() != positions.len() {
                return Err(Error::Invalid(format!(
                    "{} confidences for {} target vertices",
                    c.len(),
                    positions.len()
                )));
            }
            if let Some(i) = c.iter().position(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::Invalid(format!("confidence of vertex {i} is {}", c[i])));
            }
        }
        Ok(TargetFrame { positions, confidence })
    }

    fn weight(&self, i: usize) -> f64 {
        self.confidence.as_ref().map_or(1.0, |c| c[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub positions: Vec<Vec3>,
    /// Objective at the start and after every accepted iterate.
    pub objective: Vec<f64>,
}

/// Tracking objective for one garment, with its initial-frame references precomputed.
#[derive(Debug, Clone)]
pub struct Tracker {
    iso: IsometryRef,
    normals: NormalRef,
    cfg: TrackingConfig,
}

impl Tracker {
    pub fn new(initial: &TriMesh, cfg: TrackingConfig) -> Result<Self> {
        cfg.validate()?;
        let mut iso = IsometryRef::new(initial, cfg.squared_iso);
        iso.smoothing = cfg.iso_smoothing;
        Ok(Tracker {
            iso,
            normals: NormalRef::new(initial),
            cfg,
        })
    }

    pub fn config(&self) -> &TrackingConfig {
        &self.cfg
    }

    pub fn data_term(&self, x: &[Vec3], target: &TargetFrame) -> (f64, Vec<Vec3>) {
        let n = x.len() as f64;
        let mut loss = 0.0;
        let grad = x
            .iter()
            .zip(&target.positions)
            .enumerate()
            .map(|(i, (p, t))| {
                let w = target.weight(i) / n;
                let d = p - t;
                loss += w * d.norm_squared();
                d * (2.0 * w)
            })
            .collect();
        (loss, grad)
    }

    pub fn objective(&self, x: &[Vec3], target: &TargetFrame) -> Result<(f64, Vec<Vec3>)> {
        let (ld, gd) = self.data_term(x, target);
        let (li, gi) = self.iso.loss_grad(x);
        let (ln, gn) = self.normals.loss_grad(x)?;
        let c = &self.cfg;
        let value = c.data_weight * ld + c.iso_weight * li + c.normal_weight * ln;
        if !value.is_finite() {
            return Err(Error::Numeric(format!("tracking objective is {value}")));
        }
        let grad = (0..x.len())
            .map(|i| gd[i] * c.data_weight + gi[i] * c.iso_weight + gn[i] * c.normal_weight)
            .collect();
        Ok((value, grad))
    }

    /// Adam descent from `previous` toward `target`. A proposal that raises
    /// the objective is rejected and retried at half the step; accepted
    /// steps let the step size recover toward its configured value. When no
    /// step size helps, the moments are reset once before giving up.
    pub fn track_frame(&self, previous: &[Vec3], target: &TargetFrame) -> Result<FrameResult> {
        if previous.len() != self.iso.rings.len() || target.positions.len() != previous.len() {
            return Err(Error::Invalid(format!(
                "tracker expects {} vertices, got {} previous and {} target",
                self.iso.rings.len(),
                previous.len(),
                target.positions.len()
            )));
        }
        let mut x = previous.to_vec();
        let (mut value, mut grad) = self.objective(&x, target)?;
        let mut objective = vec![value];
        let mut adam = AdamState::new(3 * x.len());
        let mut step = self.cfg.step;
        let mut fresh = true;
        'outer: for _ in 0..self.cfg.iterations {
            let flat: Vec<f64> = grad.iter().flat_map(|g| g.iter().copied()).collect();
            let dir = adam.direction(&flat, &self.cfg.adam)?;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<Vec3> = x
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p - Vec3::new(dir[3 * i], dir[3 * i + 1], dir[3 * i + 2]) * step)
                    .collect();
                match self.objective(&trial, target) {
                    Ok((tv, tg)) if tv <= value => {
                        x = trial;
                        value = tv;
                        grad = tg;
                        objective.push(value);
                        step = (step * 1.25).min(self.cfg.step);
                        fresh = false;
                        continue 'outer;
                    }
                    Ok(_) | Err(Error::SingularElement { .. }) => step *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            // Stale moments can point uphill; a fresh first step is sign(g),
            // which always descends for small enough steps.
            if fresh {
                break;
            }
            adam = AdamState::new(3 * x.len());
            step = self.cfg.step;
            fresh = true;
        }
        Ok(FrameResult {
            positions: x,
            objective,
        })
    }
}

/// Tracks a single frame; see [`Tracker::track_frame`].
pub fn track_frame(
    previous: &[Vec3],
    target: &TargetFrame,
    initial: &TriMesh,
    cfg: &TrackingConfig,
) -> Result<Vec<Vec3>> {
    Ok(Tracker::new(initial, *cfg)?.track_frame(previous, target)?.positions)
}

/// Tracks every target frame in order, warm-starting from the previous
/// result. The output starts with `initial` and has one more frame than
/// `targets`.
pub fn track_sequence(
    initial: &TriMesh,
    targets: &[TargetFrame],
    cfg: &TrackingConfig,
    dt: f64,
) -> Result<MeshSequence> {
    let tracker = Tracker::new(initial, *cfg)?;
    let mut frames = vec![initial.vertices().to_vec()];
    for (k, target) in targets.iter().enumerate() {
        let prev = frames.last().expect("initial frame present");
        let next = tracker
            .track_frame(prev, target)
            .map_err(|e| e.at_frame(k + 1))?
            .positions;
        frames.push(next);
    }
    MeshSequence::new(initial.faces().to_vec(), frames, dt)
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfidenceRow {
    frame: usize,
    vertex: usize,
    confidence: f64,
}

/// Reads `frame,vertex,confidence` rows into per-frame confidence arrays
/// for `frames` frames of `vertices` vertices. Unlisted vertices get 1.
pub fn load_confidence_csv(path: impl AsRef<Path>, frames: usize, vertices: usize) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = vec![vec![1.0; vertices]; frames];
    for (k, rec) in reader.deserialize::<ConfidenceRow>().enumerate() {
        let line = k + 2;
        let malformed = |msg: String| Error::Malformed {
            path: path.into(),
            line,
            msg,
        };
        let row = rec.map_err(|e| malformed(e.to_string()))?;
        if row.frame >= frames || row.vertex >= vertices {
            return Err(malformed(format!(
                "frame {} vertex {} out of range",
                row.frame, row.vertex
            )));
        }
        if !(0.0..=1.0).contains(&row.confidence) {
            return Err(malformed(format!("confidence {} outside [0, 1]", row.confidence)));
        }
        out[row.frame][row.vertex] = row.confidence;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    fn grid(n: usize) -> TriMesh {
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                v.push(Vec3::new(0.1 * i as f64, 0.1 * j as f64, 0.0));
            }
        }
        let mut f = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                f.push([a, a + 1, a + n + 1]);
                f.push([a, a + n + 1, a + n]);
            }
        }
        TriMesh::new(v, f).unwrap()
    }

    #[test]
    fn already_optimal_stays_put() {
        let m = grid(4);
        let t = TargetFrame::new(m.vertices().to_vec(), None).unwrap();
        let out = track_frame(m.vertices(), &t, &m, &TrackingConfig::default()).unwrap();
        for (a, b) in out.iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn follows_rigid_motion() {
        let m = grid(4);
        let r = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.05);
        let targets: Vec<Vec3> = m
            .vertices()
            .iter()
            .map(|p| r * p + Vec3::new(0.01, -0.02, 0.005))
            .collect();
        let t = TargetFrame::new(targets.clone(), None).unwrap();
        // Convergence, not the default per-frame budget, is what is checked here.
        let cfg = TrackingConfig {
            iterations: 1000,
            ..TrackingConfig::default()
        };
        let tracker = Tracker::new(&m, cfg).unwrap();
        let res = tracker.track_frame(m.vertices(), &t).unwrap();
        assert!(res.objective.windows(2).all(|w| w[1] <= w[0]));
        let (data, _) = tracker.data_term(&res.positions, &t);
        assert!(data < 1e-8, "data term {data}");
    }

    #[test]
    fn sequence_has_initial_frame() {
        let m = grid(3);
        let t = TargetFrame::new(m.vertices().to_vec(), None).unwrap();
        let seq = track_sequence(&m, &[t], &TrackingConfig::default(), 0.04).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frame(0), m.vertices());
    }

    #[test]
    fn confidence_validation() {
        assert!(TargetFrame::new(vec![Vec3::zeros()], Some(vec![1.5])).is_err());
        assert!(TargetFrame::new(vec![Vec3::zeros()], Some(vec![0.5, 0.5])).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "frame,vertex,confidence\n1,2,0.25\n").unwrap();
        let c = load_confidence_csv(&p, 2, 3).unwrap();
        assert_eq!(c, vec![vec![1.0; 3], vec![1.0, 1.0, 0.25]]);
        fs::write(&p, "frame,vertex,confidence\n0,7,0.25\n").unwrap();
        assert!(load_confidence_csv(&p, 2, 3).is_err());
    }
}
