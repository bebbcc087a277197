use drapefit::energy::{collider_distance, Collider, ColliderSet, ModelConstants, PhysicsParams, Primitive};
use drapefit::mesh::{build_rest_state, TriMesh};
use drapefit::sim::{simulate_sequence, BoundaryTrack, SimState, Simulator, StepConfig};
use drapefit::synthetic::{make_cloth_grid, ScenarioSpec};
use drapefit::Vec3;
use nalgebra::Isometry3;
use proptest::prelude::*;

/// Horizontal n x n-quad cloth in the x-z plane at height `y`.
fn sheet(n: usize, size: f64, y: f64) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            v.push(Vec3::new(
                size * (i as f64 / n as f64 - 0.5),
                y,
                size * (j as f64 / n as f64 - 0.5),
            ));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut f = Vec::new();
    for j in 0..n {
        for i in 0..n {
            f.push([id(i, j), id(i, j + 1), id(i + 1, j)]);
            f.push([id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

fn params() -> PhysicsParams {
    PhysicsParams::new(400.0, 1.0, 0.5).unwrap()
}

fn no_gravity() -> ModelConstants {
    ModelConstants {
        gravity: [0.0; 3],
        ..ModelConstants::default()
    }
}

#[test]
fn free_particle_matches_closed_form() {
    let dt = 0.04;
    for mesh in [
        TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.1)],
            vec![[0, 2, 1]],
        )
        .unwrap(),
        sheet(4, 0.4, 1.0),
    ] {
        let sim = Simulator::new(&mesh, &[], params(), ModelConstants::default(), StepConfig::default()).unwrap();
        let (next, _) = sim.step(&SimState::at_rest(&mesh), &[], &ColliderSet::empty()).unwrap();
        let v1 = Vec3::new(0.0, -0.392, 0.0);
        let dx = Vec3::new(0.0, -0.01568, 0.0);
        assert!((v1 - Vec3::new(0.0, -9.8 * dt, 0.0)).norm() < 1e-15);
        for ((p, v), p0) in next.positions.iter().zip(&next.velocities).zip(mesh.vertices()) {
            assert!((p - p0 - dx).norm() < 1e-10, "{:?}", p - p0);
            assert!((v - v1).norm() < 1e-10, "{v:?}");
        }
    }
}

#[test]
fn zero_frames_is_the_initial_mesh() {
    let mesh = sheet(2, 0.2, 0.0);
    let track = BoundaryTrack::fixed(&mesh, &[], 1).unwrap();
    let seq = simulate_sequence(
        &mesh,
        &track,
        &ColliderSet::empty(),
        params(),
        ModelConstants::default(),
        StepConfig::default(),
        0,
    )
    .unwrap();
    assert_eq!(seq.len(), 1);
    assert_eq!(seq.frame(0), mesh.vertices());
}

#[test]
fn pinned_mesh_is_a_fixed_point() {
    let mesh = sheet(3, 0.3, 0.5);
    let all: Vec<usize> = (0..mesh.vertex_count()).collect();
    let track = BoundaryTrack::fixed(&mesh, &all, 11).unwrap();
    let seq = simulate_sequence(
        &mesh,
        &track,
        &ColliderSet::empty(),
        params(),
        ModelConstants::default(),
        StepConfig::default(),
        10,
    )
    .unwrap();
    for f in seq.frames() {
        assert_eq!(f, mesh.vertices());
    }
}

#[test]
fn flat_cloth_without_gravity_is_stationary() {
    let mesh = sheet(5, 0.5, 0.2);
    let track = BoundaryTrack::fixed(&mesh, &[], 21).unwrap();
    let seq = simulate_sequence(
        &mesh,
        &track,
        &ColliderSet::empty(),
        params(),
        no_gravity(),
        StepConfig::default(),
        20,
    )
    .unwrap();
    for f in seq.frames() {
        for (a, b) in f.iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn momentum_is_conserved(seed in prop::collection::vec(-1.0f64..1.0, 6 * 16)) {
        let mesh = sheet(3, 0.3, 0.0);
        let n = mesh.vertex_count();
        let rest = build_rest_state(&mesh, 400.0, 3e-4).unwrap();
        let sim = Simulator::new(&mesh, &[], params(), no_gravity(), StepConfig::default()).unwrap();
        let mut state = SimState {
            positions: (0..n).map(|i| mesh.vertices()[i] + Vec3::new(seed[6 * i], seed[6 * i + 1], seed[6 * i + 2]) * 0.005).collect(),
            velocities: (0..n).map(|i| Vec3::new(seed[6 * i + 3], seed[6 * i + 4], seed[6 * i + 5]) * 0.05).collect(),
            frame: 0,
        };
        let momentum = |s: &SimState| -> Vec3 { s.velocities.iter().zip(&rest.masses).map(|(v, m)| v * *m).sum() };
        let mut p = momentum(&state);
        for _ in 0..20 {
            let (next, _) = sim.step(&state, &[], &ColliderSet::empty()).unwrap();
            let q = momentum(&next);
            prop_assert!((q - p).norm() < 1e-8, "drift {:e}", (q - p).norm());
            p = q;
            state = next;
        }
    }
}

#[test]
fn drop_onto_sphere_never_penetrates() {
    let mesh = sheet(8, 0.4, 0.12);
    let sphere = Primitive::Sphere {
        center: Vec3::zeros(),
        radius: 0.1,
    };
    let colliders = ColliderSet::new(vec![Collider::fixed(sphere.clone())]).unwrap();
    let sim = Simulator::new(&mesh, &[], params(), ModelConstants::default(), StepConfig::default()).unwrap();
    let track = BoundaryTrack::fixed(&mesh, &[], 61).unwrap();
    let (seq, reports) = sim.run(mesh.vertices(), &track, &colliders, 60).unwrap();
    for (t, f) in seq.frames().iter().enumerate() {
        let d = f
            .iter()
            .map(|p| collider_distance(p, &sphere, &Isometry3::identity()))
            .fold(f64::INFINITY, f64::min);
        assert!(d > 0.0, "frame {t}: {d}");
    }
    assert!(reports.iter().all(|r| r.min_distance.unwrap() > 0.0));
    // The cloth actually reached the sphere.
    let last = seq.frame(seq.len() - 1);
    let touching = last
        .iter()
        .map(|p| collider_distance(p, &sphere, &Isometry3::identity()))
        .fold(f64::INFINITY, f64::min);
    assert!(touching < 2e-3, "{touching}");
}

#[test]
fn hanging_cloth_settles() {
    let spec = ScenarioSpec {
        resolution: [8, 8],
        ..ScenarioSpec::default()
    };
    let mesh = make_cloth_grid(&spec).unwrap();
    let pinned = spec.boundary_indices();
    let track = BoundaryTrack::fixed(&mesh, &pinned, 201).unwrap();
    let sim = Simulator::new(
        &mesh,
        &pinned,
        params(),
        ModelConstants::default(),
        StepConfig::default(),
    )
    .unwrap();
    let (seq, _) = sim.run(mesh.vertices(), &track, &ColliderSet::empty(), 200).unwrap();
    let (a, b) = (seq.frame(199), seq.frame(200));
    let speed = a.iter().zip(b).map(|(p, q)| (q - p).norm() / 0.04).fold(0.0, f64::max);
    assert!(speed < 1e-3, "{speed}");
}

#[test]
fn static_boundary_steps_never_raise_the_potential() {
    let spec = ScenarioSpec {
        resolution: [6, 6],
        ..ScenarioSpec::default()
    };
    let mesh = make_cloth_grid(&spec).unwrap();
    let pinned = spec.boundary_indices();
    let track = BoundaryTrack::fixed(&mesh, &pinned, 31).unwrap();
    let sim = Simulator::new(
        &mesh,
        &pinned,
        params(),
        ModelConstants::default(),
        StepConfig::default(),
    )
    .unwrap();
    let (_, reports) = sim.run(mesh.vertices(), &track, &ColliderSet::empty(), 30).unwrap();
    for r in reports {
        assert!(r.potentials.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = ScenarioSpec {
        resolution: [6, 6],
        frames: 5,
        ..ScenarioSpec::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| drapefit::synthetic::gen_reference(&spec).unwrap().sequence)
    };
    assert_eq!(run(1), run(8));
}
