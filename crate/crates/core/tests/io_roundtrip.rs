use drapefit::energy::{colliders_to_toml, parse_colliders, Collider, ColliderSet, Primitive};
use drapefit::mesh::{
    load_mesh, load_sequence, parse_obj, save_mesh, save_sequence, validate_mesh, MeshSequence, TriMesh,
};
use drapefit::sim::{load_boundary_csv, save_boundary_csv, BoundaryTrack};
use drapefit::synthetic::{add_noise, gen_reference, make_cloth_grid, ScenarioSpec};
use drapefit::Vec3;
use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use proptest::prelude::*;
use std::path::Path;

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3f64..1e3, -1e-6f64..1e-6, Just(0.0), Just(-0.0)]
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn grid(n: usize) -> TriMesh {
    make_cloth_grid(&ScenarioSpec {
        resolution: [n, n],
        ..ScenarioSpec::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn obj_round_trip_is_bit_exact(v in prop::collection::vec(vec3(), 9)) {
        let mesh = grid(3);
        let moved: Vec<Vec3> = mesh.vertices().iter().zip(&v).map(|(p, d)| p + d * 1e-3).collect();
        let mesh = TriMesh::from_raw(moved, mesh.faces().to_vec());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn boundary_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(vec3(), 3), 1..5)) {
        let track = BoundaryTrack::new(vec![0, 4, 7], rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        save_boundary_csv(&track, &path).unwrap();
        prop_assert_eq!(load_boundary_csv(&path).unwrap(), track);
    }

    #[test]
    fn collider_config_round_trip(c in vec3(), r in 0.01f64..2.0, t in vec3(), angle in -3.0f64..3.0) {
        let pose = Isometry3::from_parts(Translation3::from(t), UnitQuaternion::from_euler_angles(angle, 0.5 * angle, 0.0));
        let set = ColliderSet::new(vec![
            Collider::fixed(Primitive::Sphere { center: c, radius: r }),
            Collider { primitive: Primitive::Capsule { a: c, b: c + Vec3::x(), radius: r }, track: vec![pose, Isometry3::identity()] },
            Collider::fixed(Primitive::HalfSpace { point: c, normal: Vec3::y() }),
        ]).unwrap();
        let back = parse_colliders(&colliders_to_toml(&set)).unwrap();
        prop_assert_eq!(back, set);
    }
}

#[test]
fn single_triangle_obj() {
    let (v, f) = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", Path::new("t.obj")).unwrap();
    assert_eq!((v.len(), f), (3, vec![[0, 1, 2]]));
    assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", Path::new("t.obj")).is_err());
}

#[test]
fn sequence_round_trip_keeps_mesh_valid() {
    let r = gen_reference(&ScenarioSpec {
        resolution: [5, 4],
        frames: 3,
        ..ScenarioSpec::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_sequence(&r.sequence, dir.path()).unwrap();
    let back = load_sequence(dir.path(), r.sequence.dt()).unwrap();
    assert_eq!(back, r.sequence);
    for t in 0..back.len() {
        assert!(validate_mesh(&back.mesh_at(t).unwrap()).is_empty());
    }
}

#[test]
fn grid_counts() {
    let m = make_cloth_grid(&ScenarioSpec {
        size: [1.0, 1.0],
        resolution: [2, 2],
        ..ScenarioSpec::default()
    })
    .unwrap();
    assert_eq!((m.vertex_count(), m.face_count()), (4, 2));
    for (n, k) in [(3, 7), (5, 2), (20, 20)] {
        let m = make_cloth_grid(&ScenarioSpec {
            resolution: [n, k],
            ..ScenarioSpec::default()
        })
        .unwrap();
        assert_eq!(m.face_count(), 2 * (n - 1) * (k - 1));
        assert!(validate_mesh(&m).is_empty());
    }
}

#[test]
fn noise_free_targets_and_seeded_noise() {
    let spec = ScenarioSpec {
        resolution: [4, 4],
        frames: 2,
        ..ScenarioSpec::default()
    };
    let r = gen_reference(&spec).unwrap();
    assert_eq!(r.targets, r.sequence);
    let a = add_noise(&r.sequence, 5e-3, 11).unwrap();
    let b = add_noise(&r.sequence, 5e-3, 11).unwrap();
    let c = add_noise(&r.sequence, 5e-3, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let seq: &MeshSequence = &a;
    let n = (seq.len() * seq.vertex_count() * 3) as f64;
    let var: f64 = seq
        .frames()
        .iter()
        .zip(r.sequence.frames())
        .flat_map(|(f, g)| f.iter().zip(g).map(|(p, q)| (p - q).norm_squared()))
        .sum::<f64>()
        / n;
    assert!((var.sqrt() - 5e-3).abs() < 1e-3, "{}", var.sqrt());
}
