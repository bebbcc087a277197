//! Implicit-Euler garment stepping.
//!
//! Each step minimizes the incremental potential
//! `IP(x) = 1/(2 dt^2) |x - (x_t + dt v_t)|_M^2 + E(x)` over the free vertices
//! with projected Newton and a backtracking line search. Boundary vertices are
//! pinned to their prescribed positions and colliders are held at the pose of
//! the target frame.

mod boundary;

pub use boundary::{load_boundary_csv, load_boundary_frames, save_boundary_csv, BoundaryTrack};

use serde::{Deserialize, Serialize};

use crate::energy::{ColliderSet, EnergyModel, ModelConstants, PhysicsParams};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::{reverse_cuthill_mckee, BandMatrix};
use crate::mesh::{build_rest_state, MeshSequence, RestState, TriMesh};

/// Fraction of its current collider distance a vertex may close in one line-search step.
const CONTACT_KEEP: f64 = 0.1;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    /// Time step, s.
    pub dt: f64,
    /// Newton stops when the free-DOF gradient infinity norm drops below this, N.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub shrink: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 0.04,
            tolerance: 1e-6,
            max_iterations: 50,
            shrink: 0.5,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.tolerance > 0.0) || self.max_iterations < 1 {
            return Err(Error::Invalid(format!("bad step config {self:?}")));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Invalid(format!(
                "line-search shrink must be in (0, 1), got {}",
                self.shrink
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub frame: usize,
}

impl SimState {
    /// Positions from `mesh`, zero velocity, frame 0.
    pub fn at_rest(mesh: &TriMesh) -> Self {
        SimState {
            positions: mesh.vertices().to_vec(),
            velocities: vec![Vec3::zeros(); mesh.vertex_count()],
            frame: 0,
        }
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    /// Incremental potential at the start and after each accepted Newton iterate.
    pub potentials: Vec<f64>,
    /// Smallest vertex-collider distance at the accepted state.
    pub min_distance: Option<f64>,
}

/// A garment ready to be stepped: rest state, pinned set and solver layout.
#[derive(Debug, Clone)]
pub struct Simulator {
    rest: RestState,
    params: PhysicsParams,
    constants: ModelConstants,
    cfg: StepConfig,
    boundary: Vec<usize>,
    /// Position of each free vertex in the solver ordering.
    slot: Vec<Option<usize>>,
    free: Vec<usize>,
    bandwidth: usize,
}

impl Simulator {
    pub fn new(
        mesh: &TriMesh,
        boundary: &[usize],
        params: PhysicsParams,
        constants: ModelConstants,
        cfg: StepConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let rest = build_rest_state(mesh, params.rho, constants.thickness)?;
        let n = mesh.vertex_count();
        let mut pinned = vec![false; n];
        for &b in boundary {
            if b >= n {
                return Err(Error::Invalid(format!("boundary vertex {b} out of range")));
            }
            pinned[b] = true;
        }

        let mut adjacency = vec![Vec::new(); n];
        let mut couple = |a: usize, b: usize| {
            if !pinned[a] && !pinned[b] && a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        };
        for f in mesh.faces() {
            for (p, q) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                couple(p, q);
            }
        }
        for h in &rest.hinges {
            couple(h.verts[2], h.verts[3]);
        }
        let order: Vec<usize> = reverse_cuthill_mckee(&adjacency)
            .into_iter()
            .filter(|&v| !pinned[v])
            .collect();
        let mut slot = vec![None; n];
        for (s, &v) in order.iter().enumerate() {
            slot[v] = Some(s);
        }
        let mut spread = 0;
        for (v, nbrs) in adjacency.iter().enumerate() {
            for &u in nbrs {
                if let (Some(a), Some(b)) = (slot[v], slot[u]) {
                    spread = spread.max(a.abs_diff(b));
                }
            }
        }
        Ok(Simulator {
            rest,
            params,
            constants,
            cfg,
            boundary: boundary.to_vec(),
            slot,
            free: order,
            bandwidth: 3 * spread + 2,
        })
    }

    pub fn rest(&self) -> &RestState {
        &self.rest
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn params(&self) -> PhysicsParams {
        self.params
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    fn model<'a>(&'a self, colliders: &'a ColliderSet, frame: usize) -> EnergyModel<'a> {
        EnergyModel {
            rest: &self.rest,
            params: self.params,
            constants: &self.constants,
            colliders,
            frame,
        }
    }

    fn potential(&self, model: &EnergyModel, x: &[Vec3], target: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let (e, mut g) = model.total(x)?;
        let inv_dt2 = 1.0 / (self.cfg.dt * self.cfg.dt);
        let mut inertia = 0.0;
        for (i, gi) in g.iter_mut().enumerate() {
            let d = x[i] - target[i];
            let m = self.rest.masses[i];
            inertia += 0.5 * m * inv_dt2 * d.norm_squared();
            *gi += d * (m * inv_dt2);
        }
        Ok((inertia + e, g))
    }

    fn residual(&self, g: &[Vec3]) -> f64 {
        self.free.iter().map(|&v| g[v].amax()).fold(0.0, f64::max)
    }

    /// Advances `state` by one step.
    ///
    /// `boundary_next` holds the prescribed positions of [`Self::boundary`]
    /// vertices at the new frame, in the same order.
    pub fn step(
        &self,
        state: &SimState,
        boundary_next: &[Vec3],
        colliders: &ColliderSet,
    ) -> Result<(SimState, StepReport)> {
        let n = self.rest.masses.len();
        if state.positions.len() != n || state.velocities.len() != n {
            return Err(Error::Invalid("state does not match the mesh".into()));
        }
        if boundary_next.len() != self.boundary.len() {
            return Err(Error::Invalid(format!(
                "expected {} boundary positions, got {}",
                self.boundary.len(),
                boundary_next.len()
            )));
        }
        let frame = state.frame + 1;
        let dt = self.cfg.dt;
        let model = self.model(colliders, frame);

        if let Some((d, v, c)) = colliders.min_distance(&state.positions, state.frame)? {
            if !(d > 0.0) {
                return Err(Error::Penetration {
                    vertex: v,
                    collider: c,
                    distance: d,
                });
            }
        }

        let target: Vec<Vec3> = state
            .positions
            .iter()
            .zip(&state.velocities)
            .map(|(x, v)| x + v * dt)
            .collect();

        let mut x = state.positions.clone();
        for (&b, p) in self.boundary.iter().zip(boundary_next) {
            x[b] = *p;
        }
        if let Some((d, v, c)) = colliders.min_distance(&x, frame)? {
            if !(d > 0.0) {
                return Err(Error::Penetration {
                    vertex: v,
                    collider: c,
                    distance: d,
                });
            }
        }

        // Start from the inertial prediction when it is reachable without contact.
        let mut guess_dir = vec![Vec3::zeros(); n];
        for &v in &self.free {
            guess_dir[v] = target[v] - x[v];
        }
        let alpha = colliders.max_safe_step(&x, &guess_dir, frame, CONTACT_KEEP)?;
        let mut cur = self.potential(&model, &x, &target);
        if alpha > 0.0 {
            let trial: Vec<Vec3> = x.iter().zip(&guess_dir).map(|(p, d)| p + d * alpha).collect();
            if let Ok(tp) = self.potential(&model, &trial, &target) {
                if cur.as_ref().map_or(true, |c| tp.0 <= c.0) {
                    x = trial;
                    cur = Ok(tp);
                }
            }
        }
        let (mut ip, mut grad) = cur?;

        let mut report = StepReport {
            iterations: 0,
            residual: self.residual(&grad),
            potentials: vec![ip],
            min_distance: None,
        };

        let ndof = 3 * self.free.len();
        let inv_dt2 = 1.0 / (dt * dt);
        loop {
            report.residual = self.residual(&grad);
            if report.residual < self.cfg.tolerance || ndof == 0 {
                break;
            }
            if report.iterations >= self.cfg.max_iterations {
                return Err(Error::Solver {
                    iterations: report.iterations,
                    residual: report.residual,
                });
            }

            let mut hess = BandMatrix::zeros(ndof, self.bandwidth.min(ndof.saturating_sub(1)));
            for &v in &self.free {
                let s = self.slot[v].expect("free vertex has a slot");
                let m = self.rest.masses[v] * inv_dt2;
                for c in 0..3 {
                    hess.add(3 * s + c, 3 * s + c, m);
                }
            }
            model.hessian(&x, &mut |i, j, block| {
                if let (Some(si), Some(sj)) = (self.slot[i], self.slot[j]) {
                    for r in 0..3 {
                        for c in 0..3 {
                            let (row, col) = (3 * si + r, 3 * sj + c);
                            if row >= col {
                                hess.add(row, col, block[(r, c)]);
                            }
                        }
                    }
                }
            })?;
            let mut rhs = vec![0.0; ndof];
            for &v in &self.free {
                let s = self.slot[v].expect("free vertex has a slot");
                for c in 0..3 {
                    rhs[3 * s + c] = -grad[v][c];
                }
            }
            let sol = hess.cholesky()?.solve(&rhs);
            let mut dx = vec![Vec3::zeros(); n];
            for &v in &self.free {
                let s = self.slot[v].expect("free vertex has a slot");
                dx[v] = Vec3::new(sol[3 * s], sol[3 * s + 1], sol[3 * s + 2]);
            }

            let mut alpha = colliders.max_safe_step(&x, &dx, frame, CONTACT_KEEP)?;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<Vec3> = x.iter().zip(&dx).map(|(p, d)| p + d * alpha).collect();
                match self.potential(&model, &trial, &target) {
                    Ok((tip, tg)) if tip <= ip => {
                        accepted = Some((trial, tip, tg));
                        break;
                    }
                    Ok(_) | Err(Error::Penetration { .. }) | Err(Error::SingularElement { .. }) => {
                        alpha *= self.cfg.shrink;
                    }
                    Err(e) => return Err(e),
                }
            }
            let Some((trial, tip, tg)) = accepted else {
                return Err(Error::Solver {
                    iterations: report.iterations,
                    residual: report.residual,
                });
            };
            x = trial;
            ip = tip;
            grad = tg;
            report.iterations += 1;
            report.potentials.push(ip);
        }

        report.min_distance = colliders.min_distance(&x, frame)?.map(|(d, _, _)| d);
        let velocities = x.iter().zip(&state.positions).map(|(a, b)| (a - b) / dt).collect();
        Ok((
            SimState {
                positions: x,
                velocities,
                frame,
            },
            report,
        ))
    }

    /// Runs `frames` steps from `initial` (velocity zero). The output holds
    /// `frames + 1` frames, the initial one first.
    pub fn run(
        &self,
        initial: &[Vec3],
        boundary: &BoundaryTrack,
        colliders: &ColliderSet,
        frames: usize,
    ) -> Result<(MeshSequence, Vec<StepReport>)> {
        if boundary.indices != self.boundary {
            return Err(Error::Invalid(
                "boundary track indices differ from the simulator's".into(),
            ));
        }
        if frames > 0 && boundary.frame_count() < frames + 1 {
            return Err(Error::Invalid(format!(
                "boundary track covers {} frames, {} needed",
                boundary.frame_count(),
                frames + 1
            )));
        }
        if !colliders.covers(frames) {
            return Err(Error::Invalid(format!("collider tracks do not cover {frames} frames")));
        }
        let mut state = SimState {
            positions: initial.to_vec(),
            velocities: vec![Vec3::zeros(); initial.len()],
            frame: 0,
        };
        let mut seq = MeshSequence::new(self.rest.faces.clone(), vec![initial.to_vec()], self.cfg.dt)?;
        let mut reports = Vec::with_capacity(frames);
        for t in 1..=frames {
            let (next, report) = self
                .step(&state, boundary.at(t), colliders)
                .map_err(|e| e.at_frame(t))?;
            seq.push(next.positions.clone());
            reports.push(report);
            state = next;
        }
        Ok((seq, reports))
    }
}

/// Simulates `frames` steps of `mesh` from rest, returning `frames + 1` frames.
pub fn simulate_sequence(
    mesh: &TriMesh,
    boundary: &BoundaryTrack,
    colliders: &ColliderSet,
    params: PhysicsParams,
    constants: ModelConstants,
    cfg: StepConfig,
    frames: usize,
) -> Result<MeshSequence> {
    let sim = Simulator::new(mesh, &boundary.indices, params, constants, cfg)?;
    Ok(sim.run(mesh.vertices(), boundary, colliders, frames)?.0)
}
