//! Subcommand bodies. Inputs are only read; everything is written under `--out`.

use std::fs;
use std::path::Path;

use drapefit::energy::{load_colliders, ColliderSet, ModelConstants, PhysicsParams};
use drapefit::estimate::{estimate_parameters, EstimationConfig, EstimationProblem};
use drapefit::gradcheck::{run_gradcheck, TOLERANCE};
use drapefit::mesh::{load_mesh, load_sequence, read_index_file, save_sequence, write_index_file, MeshSequence};
use drapefit::metrics::{write_step_stats_csv, write_trace_csv, write_track_stats_csv};
use drapefit::sim::{load_boundary_csv, load_boundary_frames, BoundaryTrack, Simulator, StepConfig};
use drapefit::skinning::{
    drive_boundary, inpaint_weights, load_pose_csv, load_weights_csv, save_weights_csv, transfer_weights_direct,
    Laplacian, TransferConfig,
};
use drapefit::synthetic::{gen_reference, write_reference, PinSelector, ScenarioSpec, Swing};
use drapefit::track::{load_confidence_csv, TargetFrame, Tracker, TrackingConfig};
use drapefit::Error;
use serde_json::json;

use crate::config::pick;
use crate::{
    Context, EstimateArgs, Failure, GenArgs, GradcheckArgs, LaplacianArg, Material, PinnedArg, SimulateArgs, TrackArgs,
    TransferArgs,
};

const DEFAULT_SIM_FRAMES: usize = 24;
const INITIAL_GUESS: [f64; 3] = [300.0, 4.0, 4.0];

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Domain(Error::Invalid(format!("cannot create {}: {e}", dir.display()))))
}

fn material(ctx: &Context, m: &Material, default: [f64; 3]) -> Result<PhysicsParams, Failure> {
    let f = &ctx.file;
    Ok(PhysicsParams::new(
        pick(m.rho, f.rho, default[0]),
        pick(m.kappa_s, f.kappa_s, default[1]),
        pick(m.kappa_b, f.kappa_b, default[2]),
    )?)
}

fn colliders(path: &Option<std::path::PathBuf>) -> Result<ColliderSet, Failure> {
    Ok(match path {
        Some(p) => load_colliders(p)?,
        None => ColliderSet::empty(),
    })
}

fn step_config(ctx: &Context, tolerance: Option<f64>, max_iterations: Option<usize>) -> StepConfig {
    let d = StepConfig::default();
    StepConfig {
        dt: ctx.dt(d.dt),
        tolerance: pick(tolerance, ctx.file.tolerance, d.tolerance),
        max_iterations: pick(max_iterations, ctx.file.max_iterations, d.max_iterations),
        ..d
    }
}

fn print(value: serde_json::Value) {
    println!("{value}");
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<(), Failure> {
    let out = ctx.out()?;
    let mesh = load_mesh(&a.mesh)?;
    let params = material(ctx, &a.material, [400.0, 1.0, 0.5])?;
    let step = step_config(ctx, a.tolerance, a.max_iterations);
    let indices = match &a.boundary_idx {
        Some(p) => Some(read_index_file(p)?),
        None => None,
    };

    let track = if let Some(body) = &a.body {
        let body = load_mesh(body)?;
        let weights = load_weights_csv(a.body_weights.as_ref().expect("clap requires"), body.vertex_count())?;
        let poses = load_pose_csv(a.poses.as_ref().expect("clap requires"))?;
        Some(drive_boundary(
            indices.as_deref().expect("clap requires"),
            mesh.vertices(),
            body.vertices(),
            &weights,
            &poses,
        )?)
    } else if let Some(b) = &a.boundary {
        if b.is_dir() {
            let idx = indices
                .as_ref()
                .ok_or_else(|| Failure::Usage("--boundary given as a directory needs --boundary-idx".into()))?;
            Some(load_boundary_frames(b, idx, step.dt)?)
        } else {
            let t = load_boundary_csv(b)?;
            if let Some(idx) = &indices {
                if *idx != t.indices {
                    return Err(Failure::Usage("--boundary-idx disagrees with the boundary CSV".into()));
                }
            }
            Some(t)
        }
    } else {
        None
    };
    let frames = match (ctx.frames(), &track) {
        (Some(n), _) => n,
        (None, Some(t)) => t.frame_count().saturating_sub(1),
        (None, None) => DEFAULT_SIM_FRAMES,
    };
    let track = match track {
        Some(t) => t,
        None => BoundaryTrack::fixed(&mesh, indices.as_deref().unwrap_or(&[]), frames + 1)?,
    };
    let colliders = colliders(&a.colliders)?;

    let sim = Simulator::new(&mesh, &track.indices, params, ModelConstants::default(), step)?;
    let (seq, reports) = sim.run(mesh.vertices(), &track, &colliders, frames)?;
    create_dir(&out)?;
    save_sequence(&seq, out.join("frames"))?;
    write_step_stats_csv(&reports, out.join("steps.csv"))?;
    print(json!({
        "status": "ok",
        "frames": seq.len(),
        "newton_iterations": reports.iter().map(|r| r.iterations).sum::<usize>(),
    }));
    Ok(())
}

pub fn estimate(ctx: &Context, a: &EstimateArgs) -> Result<(), Failure> {
    let out = ctx.out()?;
    let f = &ctx.file;
    let step = step_config(ctx, None, None);
    let reference = load_sequence(&a.reference, step.dt)?;
    let boundary = match (&a.boundary_idx, &a.boundary) {
        (Some(p), _) => BoundaryTrack::from_sequence(&reference, &read_index_file(p)?)?,
        (None, Some(p)) => load_boundary_csv(p)?,
        (None, None) => BoundaryTrack::fixed(&reference.mesh_at(0)?, &[], reference.len())?,
    };
    let garment = match &a.garment_idx {
        Some(p) => Some(read_index_file(p)?),
        None => None,
    };
    let initial = material(ctx, &a.material, INITIAL_GUESS)?;
    let d = EstimationConfig::default();
    let cfg = EstimationConfig {
        deltas: [
            pick(None, f.delta_rho, d.deltas[0]),
            pick(None, f.delta_kappa_s, d.deltas[1]),
            pick(None, f.delta_kappa_b, d.deltas[2]),
        ],
        iterations: pick(a.iterations, f.iterations, d.iterations),
        learning_rates: [
            pick(None, f.lr_rho, d.learning_rates[0]),
            pick(None, f.lr_kappa_s, d.learning_rates[1]),
            pick(None, f.lr_kappa_b, d.learning_rates[2]),
        ],
        frames: ctx.frames().unwrap_or(d.frames.min(reference.len())),
        timing: a.timing || f.timing.unwrap_or(false),
        ..d
    };
    cfg.validate()?;
    let problem = EstimationProblem::new(
        reference,
        garment,
        boundary,
        colliders(&a.colliders)?,
        ModelConstants::default(),
        step,
    )?;

    create_dir(&out)?;
    let result = estimate_parameters(initial, &problem, &cfg);
    let trace = match &result {
        Ok(e) => &e.trace,
        Err(fail) => &fail.trace,
    };
    write_trace_csv(trace, out.join("trace.csv"))?;
    let est = result.map_err(|fail| Failure::Domain(fail.error))?;
    let p = est.params;
    let loss = est.loss.map_or(String::new(), |l| l.to_string());
    let path = out.join("estimate.csv");
    fs::write(
        &path,
        format!(
            "rho,kappa_s,kappa_b,loss\n{},{},{},{loss}\n",
            p.rho, p.kappa_s, p.kappa_b
        ),
    )
    .map_err(|e| Failure::Domain(Error::Invalid(format!("cannot write {}: {e}", path.display()))))?;
    print(json!({
        "status": "ok",
        "rho": p.rho,
        "kappa_s": p.kappa_s,
        "kappa_b": p.kappa_b,
        "loss": est.loss,
        "iterations": est.trace.rows.len(),
    }));
    Ok(())
}

pub fn track(ctx: &Context, a: &TrackArgs) -> Result<(), Failure> {
    let out = ctx.out()?;
    let f = &ctx.file;
    let initial = load_mesh(&a.initial)?;
    let dt = ctx.dt(StepConfig::default().dt);
    let targets: MeshSequence = load_sequence(&a.targets, dt)?;
    if targets.vertex_count() != initial.vertex_count() {
        return Err(Failure::Domain(Error::Invalid(format!(
            "targets have {} vertices, initial mesh {}",
            targets.vertex_count(),
            initial.vertex_count()
        ))));
    }
    let available = targets.len().saturating_sub(1);
    let frames = ctx.frames().unwrap_or(available);
    if frames > available {
        return Err(Failure::Domain(Error::Invalid(format!(
            "{frames} frames requested, targets hold {available} after frame 0"
        ))));
    }
    let confidence = match &a.confidence {
        Some(p) => Some(load_confidence_csv(p, targets.len(), targets.vertex_count())?),
        None => None,
    };
    let d = TrackingConfig::default();
    let cfg = TrackingConfig {
        iso_weight: pick(a.iso_weight, f.iso_weight, d.iso_weight),
        normal_weight: pick(a.normal_weight, f.normal_weight, d.normal_weight),
        data_weight: pick(a.data_weight, f.data_weight, d.data_weight),
        iterations: pick(a.iterations, f.track_iterations, d.iterations),
        step: pick(a.step, f.track_step, d.step),
        ..d
    };
    let tracker = Tracker::new(&initial, cfg)?;
    let mut positions = vec![initial.vertices().to_vec()];
    let mut objectives = Vec::with_capacity(frames);
    for t in 1..=frames {
        let target = TargetFrame::new(targets.frame(t).to_vec(), confidence.as_ref().map(|c| c[t].clone()))?;
        let r = tracker
            .track_frame(positions.last().expect("initial frame"), &target)
            .map_err(|e| e.at_frame(t))?;
        objectives.push(*r.objective.last().expect("objective recorded"));
        positions.push(r.positions);
    }
    let seq = MeshSequence::new(initial.faces().to_vec(), positions, dt)?;
    create_dir(&out)?;
    save_sequence(&seq, out.join("tracked"))?;
    write_track_stats_csv(&objectives, out.join("track.csv"))?;
    print(json!({ "status": "ok", "frames": seq.len() }));
    Ok(())
}

pub fn transfer_weights(ctx: &Context, a: &TransferArgs) -> Result<(), Failure> {
    let out = ctx.out()?;
    let f = &ctx.file;
    let source = load_mesh(&a.source)?;
    let target = load_mesh(&a.target)?;
    let weights = load_weights_csv(&a.weights, source.vertex_count())?;
    let cfg = TransferConfig {
        d_max: a.d_max.or(f.d_max),
        theta_max: a.theta_max.or(f.theta_max).map(f64::to_radians),
    };
    let laplacian = match (a.laplacian, f.laplacian.as_deref()) {
        (Some(LaplacianArg::Cotangent), _) | (None, Some("cotangent")) => Laplacian::Cotangent,
        (Some(LaplacianArg::Uniform), _) | (None, Some("uniform")) | (None, None) => Laplacian::Uniform,
        (None, Some(other)) => return Err(Failure::Usage(format!("unknown laplacian {other:?}"))),
    };
    let (d_max, theta_max) = cfg.resolve(&source);
    let partial = transfer_weights_direct(&source, &weights, &target, d_max, theta_max)?;
    let full = inpaint_weights(&target, &partial, laplacian)?;
    create_dir(&out)?;
    save_weights_csv(out.join("weights.csv"), &full)?;
    let matched: Vec<usize> = (0..partial.matched.len()).filter(|&v| partial.matched[v]).collect();
    write_index_file(out.join("matched.idx"), &matched)?;
    print(json!({
        "status": "ok",
        "vertices": target.vertex_count(),
        "matched": matched.len(),
        "d_max": d_max,
        "theta_max_deg": theta_max.to_degrees(),
    }));
    Ok(())
}

pub fn gen_synthetic(ctx: &Context, a: &GenArgs) -> Result<(), Failure> {
    let out = ctx.out()?;
    let f = &ctx.file;
    let d = ScenarioSpec::default();
    let pinned = match (a.pinned, f.pinned.as_deref()) {
        (Some(PinnedArg::TopRow), _) | (None, Some("top-row")) | (None, None) => PinSelector::TopRow,
        (Some(PinnedArg::None), _) | (None, Some("none")) => PinSelector::None,
        (None, Some(other)) => return Err(Failure::Usage(format!("unknown pin selector {other:?}"))),
    };
    let t = d.truth;
    let spec = ScenarioSpec {
        size: [pick(a.width, f.width, d.size[0]), pick(a.height, f.height, d.size[1])],
        resolution: [pick(a.nx, f.nx, d.resolution[0]), pick(a.ny, f.ny, d.resolution[1])],
        pinned,
        swing: Swing {
            amplitude: pick(a.swing_amplitude, f.swing_amplitude, d.swing.amplitude),
            frequency: pick(a.swing_frequency, f.swing_frequency, d.swing.frequency),
            ..d.swing
        },
        colliders: colliders(&a.colliders)?,
        truth: material(ctx, &a.material, [t.rho, t.kappa_s, t.kappa_b])?,
        step: step_config(ctx, None, None),
        frames: ctx.frames().unwrap_or(d.frames),
        noise: pick(a.noise, f.noise, d.noise),
        seed: ctx.seed(),
        ..d
    };
    let reference = gen_reference(&spec)?;
    write_reference(&reference, &spec, &out)?;
    print(json!({
        "status": "ok",
        "frames": reference.sequence.len(),
        "vertices": reference.mesh.vertex_count(),
    }));
    Ok(())
}

pub fn gradcheck(ctx: &Context, a: &GradcheckArgs) -> Result<(), Failure> {
    let configs = pick(a.configs, ctx.file.configs, 100);
    let report = run_gradcheck(ctx.seed(), configs)?;
    let body = json!({
        "seed": report.seed,
        "tolerance": TOLERANCE,
        "passed": report.passed(),
        "terms": report.terms,
    });
    if let Some(out) = ctx.common.out.clone().or_else(|| ctx.file.out.clone()) {
        create_dir(&out)?;
        let path = out.join("gradcheck.json");
        fs::write(&path, format!("{body:#}\n"))
            .map_err(|e| Failure::Domain(Error::Invalid(format!("cannot write {}: {e}", path.display()))))?;
    }
    print(body);
    if report.passed() {
        Ok(())
    } else {
        let worst = report
            .terms
            .iter()
            .filter(|t| t.max_rel_error >= TOLERANCE)
            .map(|t| format!("{} {:e}", t.term.name(), t.max_rel_error))
            .collect::<Vec<_>>()
            .join(", ");
        Err(Failure::Domain(Error::Numeric(format!(
            "gradient check failed: {worst}"
        ))))
    }
}
