//! Fabric parameter estimation from a reference sequence.
//!
//! The simulation loss is differentiated by forward finite differences (one
//! baseline plus one perturbed run per parameter) and minimized with Adam.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{ColliderSet, ModelConstants, PhysicsParams};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{MeshSequence, TriMesh, VertexLabels};
use crate::optim::{AdamConfig, AdamState};
use crate::sim::{BoundaryTrack, Simulator, StepConfig};

pub const PARAM_NAMES: [&str; 3] = ["rho", "kappa_s", "kappa_b"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Finite-difference steps for (rho, kappa_s, kappa_b).
    pub deltas: [f64; 3],
    pub iterations: usize,
    pub learning_rates: [f64; 3],
    pub adam: AdamConfig,
    /// Training window length in frames, the initial frame included.
    pub frames: usize,
    /// Record wall-clock seconds in the trace. Off gives reproducible traces.
    pub timing: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            deltas: [5.0, 0.05, 0.05],
            iterations: 100,
            learning_rates: [20.0, 0.2, 0.2],
            adam: AdamConfig::default(),
            frames: 24,
            timing: true,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Invalid(format!(
                "finite-difference steps must be positive, got {:?}",
                self.deltas
            )));
        }
        if self.learning_rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Invalid(format!(
                "learning rates must be non-negative, got {:?}",
                self.learning_rates
            )));
        }
        if self.frames < 2 {
            return Err(Error::Invalid(format!(
                "training window needs at least 2 frames, got {}",
                self.frames
            )));
        }
        Ok(())
    }
}

/// Mean squared vertex distance over the first `frames` frames of two
/// sequences, restricted to `vertices`.
pub fn sequence_mse(a: &[Vec<Vec3>], b: &[Vec<Vec3>], vertices: &[usize], frames: usize) -> Result<f64> {
    if a.len() < frames || b.len() < frames {
        return Err(Error::Invalid(format!(
            "need {frames} frames, sequences have {} and {}",
            a.len(),
            b.len()
        )));
    }
    if frames == 0 || vertices.is_empty() {
        return Err(Error::Invalid("empty loss window".into()));
    }
    let mut total = 0.0;
    for t in 0..frames {
        let mut frame = 0.0;
        for &v in vertices {
            frame += (a[t][v] - b[t][v]).norm_squared();
        }
        total += frame / vertices.len() as f64;
    }
    Ok(total / frames as f64)
}

/// Everything the simulation loss needs besides the parameters.
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    /// Garment mesh at the reference's first frame, with garment/boundary labels.
    pub mesh: TriMesh,
    pub reference: MeshSequence,
    pub boundary: BoundaryTrack,
    pub colliders: ColliderSet,
    pub constants: ModelConstants,
    pub step: StepConfig,
}

impl EstimationProblem {
    pub fn new(
        reference: MeshSequence,
        garment: Option<Vec<usize>>,
        boundary: BoundaryTrack,
        colliders: ColliderSet,
        constants: ModelConstants,
        step: StepConfig,
    ) -> Result<Self> {
        let mesh = TriMesh::with_labels(
            reference.frame(0).to_vec(),
            reference.faces().to_vec(),
            VertexLabels {
                garment,
                boundary: boundary.indices.clone(),
            },
        )?;
        // The simulator steps at the reference's frame spacing.
        let step = StepConfig {
            dt: reference.dt(),
            ..step
        };
        step.validate()?;
        Ok(EstimationProblem {
            mesh,
            reference,
            boundary,
            colliders,
            constants,
            step,
        })
    }

    /// Simulates `frames` frames from the reference's first frame at rest and
    /// returns the mean squared garment-vertex error against the reference.
    pub fn sim_loss(&self, params: PhysicsParams, frames: usize) -> Result<f64> {
        if frames < 1 || frames > self.reference.len() {
            return Err(Error::Invalid(format!(
                "loss window of {frames} frames, reference has {}",
                self.reference.len()
            )));
        }
        let sim = Simulator::new(&self.mesh, &self.boundary.indices, params, self.constants, self.step)?;
        let (seq, _) = sim.run(self.reference.frame(0), &self.boundary, &self.colliders, frames - 1)?;
        sequence_mse(
            seq.frames(),
            self.reference.frames(),
            &self.mesh.garment_vertices(),
            frames,
        )
    }
}

/// Forward-difference gradient of a loss, plus the baseline value it reused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGradient {
    pub gradient: [f64; 3],
    pub loss: f64,
    /// Parameters whose forward step left the legal range and were differenced backward.
    pub backward: [bool; 3],
}

fn eval_error(label: &'static str, p: PhysicsParams, source: Error) -> Error {
    Error::Evaluation {
        label,
        rho: p.rho,
        kappa_s: p.kappa_s,
        kappa_b: p.kappa_b,
        source: Box::new(source),
    }
}

/// `(L(p + delta_k e_k) - L(p)) / delta_k` for each parameter, with exactly
/// four loss evaluations. They run in parallel but are combined in a fixed
/// order, so the result does not depend on scheduling.
pub fn fd_gradient<F>(loss: F, params: PhysicsParams, deltas: [f64; 3]) -> Result<FdGradient>
where
    F: Fn(PhysicsParams) -> Result<f64> + Sync,
{
    let base = params.as_array();
    let ranges = PhysicsParams::ranges();
    let mut backward = [false; 3];
    let mut points = vec![("baseline", params)];
    for k in 0..3 {
        let mut p = base;
        if base[k] + deltas[k] > ranges[k].1 {
            backward[k] = true;
            p[k] -= deltas[k];
        } else {
            p[k] += deltas[k];
        }
        points.push((
            PARAM_NAMES[k],
            PhysicsParams {
                rho: p[0],
                kappa_s: p[1],
                kappa_b: p[2],
            },
        ));
    }
    let values: Vec<Result<f64>> = points.par_iter().map(|&(_, p)| loss(p)).collect();
    let mut out = [0.0; 4];
    for (k, (v, &(label, p))) in values.into_iter().zip(&points).enumerate() {
        let v = v.map_err(|e| eval_error(label, p, e))?;
        if !v.is_finite() {
            return Err(eval_error(label, p, Error::Numeric(format!("loss is {v}"))));
        }
        out[k] = v;
    }
    let mut gradient = [0.0; 3];
    for k in 0..3 {
        gradient[k] = if backward[k] {
            (out[0] - out[k + 1]) / deltas[k]
        } else {
            (out[k + 1] - out[0]) / deltas[k]
        };
    }
    Ok(FdGradient {
        gradient,
        loss: out[0],
        backward,
    })
}

/// One bias-corrected Adam step on the parameter triple, clamped to the legal ranges.
pub fn adam_update(
    mut state: AdamState,
    gradient: [f64; 3],
    params: PhysicsParams,
    learning_rates: [f64; 3],
    adam: &AdamConfig,
) -> Result<(AdamState, PhysicsParams)> {
    let dir = state.direction(&gradient, adam)?;
    let p = params.as_array();
    let next = [
        p[0] - learning_rates[0] * dir[0],
        p[1] - learning_rates[1] * dir[1],
        p[2] - learning_rates[2] * dir[2],
    ];
    Ok((state, PhysicsParams::from_array_clamped(next)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub rho: f64,
    pub kappa_s: f64,
    pub kappa_b: f64,
    pub loss: f64,
    /// Wall-clock seconds since the estimation started, or 0 with timing off.
    pub seconds: f64,
    #[serde(skip)]
    pub backward: [bool; 3],
}

impl TraceRow {
    pub fn params(&self) -> PhysicsParams {
        PhysicsParams {
            rho: self.rho,
            kappa_s: self.kappa_s,
            kappa_b: self.kappa_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimationTrace {
    pub rows: Vec<TraceRow>,
}

impl EstimationTrace {
    /// Row with the lowest loss; the earliest wins ties.
    pub fn best(&self) -> Option<&TraceRow> {
        self.rows.iter().fold(None, |best: Option<&TraceRow>, r| match best {
            Some(b) if b.loss <= r.loss => Some(b),
            _ => Some(r),
        })
    }

    /// Running minimum of the loss, one entry per row.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.rows
            .iter()
            .map(|r| {
                best = best.min(r.loss);
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Parameters of the lowest-loss trace row, or the initial ones for an empty run.
    pub params: PhysicsParams,
    pub loss: Option<f64>,
    pub trace: EstimationTrace,
}

/// A failed estimation keeps the trace recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct EstimationFailure {
    #[source]
    pub error: Error,
    pub trace: EstimationTrace,
}

/// Adam on forward-difference gradients of an arbitrary loss.
///
/// Each iteration records the current parameters and their loss, then
/// steps. The returned parameters are the best recorded, not the last.
pub fn minimize<F>(loss: F, initial: PhysicsParams, cfg: &EstimationConfig) -> Result<Estimate, EstimationFailure>
where
    F: Fn(PhysicsParams) -> Result<f64> + Sync,
{
    let mut trace = EstimationTrace::default();
    let fail = |error, trace| EstimationFailure { error, trace };
    if let Err(e) = cfg.validate().and_then(|_| initial.check()) {
        return Err(fail(e, trace));
    }
    let start = Instant::now();
    let mut params = initial;
    let mut state = AdamState::new(3);
    for iter in 0..cfg.iterations {
        let fd = match fd_gradient(&loss, params, cfg.deltas) {
            Ok(fd) => fd,
            Err(e) => return Err(fail(e, trace)),
        };
        trace.rows.push(TraceRow {
            iter,
            rho: params.rho,
            kappa_s: params.kappa_s,
            kappa_b: params.kappa_b,
            loss: fd.loss,
            seconds: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
            backward: fd.backward,
        });
        log::debug!(
            "iter {iter}: rho={} kappa_s={} kappa_b={} loss={:e} grad={:?}",
            params.rho,
            params.kappa_s,
            params.kappa_b,
            fd.loss,
            fd.gradient
        );
        match adam_update(state, fd.gradient, params, cfg.learning_rates, &cfg.adam) {
            Ok((s, p)) => {
                state = s;
                params = p;
            }
            Err(e) => return Err(fail(e, trace)),
        }
    }
    let (params, loss) = match trace.best() {
        Some(r) => (r.params(), Some(r.loss)),
        None => (initial, None),
    };
    Ok(Estimate { params, loss, trace })
}

/// Estimates `(rho, kappa_s, kappa_b)` for `problem` over its first `cfg.frames` frames.
pub fn estimate_parameters(
    initial: PhysicsParams,
    problem: &EstimationProblem,
    cfg: &EstimationConfig,
) -> Result<Estimate, EstimationFailure> {
    minimize(|p| problem.sim_loss(p, cfg.frames), initial, cfg)
}
