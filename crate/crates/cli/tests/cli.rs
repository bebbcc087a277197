use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn drapefit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drapefit"))
        .args(args)
        .current_dir(dir)
        .env_remove("DRAPEFIT_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> serde_json::Value {
    let out = drapefit(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not a JSON error line: {text}"))
}

fn capsule(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/capsule_man")
        .join(name)
}

fn scene(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "gen-synthetic",
        "--nx",
        "5",
        "--ny",
        "5",
        "--frames",
        "4",
        "--out",
        "scene",
    ];
    args.extend_from_slice(extra);
    ok(&args, dir);
}

#[test]
fn gradcheck_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let v = ok(
        &["gradcheck", "--seed", "7", "--configs", "10", "--out", "g"],
        tmp.path(),
    );
    assert_eq!(v["passed"], true, "{v}");
    assert!(tmp.path().join("g/gradcheck.json").is_file());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = drapefit(&["estimate", "--out", "e"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = drapefit(&["gradcheck", "--configs", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_drapefit"))
        .args(["gradcheck", "--configs", "1"])
        .env("DRAPEFIT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["kind"], "usage");
    fs::write(tmp.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let out = drapefit(&["--config", "bad.toml", "gradcheck"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = drapefit(&["simulate", "--mesh", "missing.obj", "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let v = error_line(&out);
    assert_eq!(v["status"], "error");
    assert!(v["message"].as_str().unwrap().contains("missing.obj"));
    fs::write(tmp.path().join("bad.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").unwrap();
    let out = drapefit(&["simulate", "--mesh", "bad.obj", "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulating_the_boundary_reproduces_the_reference() {
    let tmp = tempfile::tempdir().unwrap();
    scene(tmp.path(), &[]);
    let before = fs::read(tmp.path().join("scene/boundary.csv")).unwrap();
    ok(
        &[
            "simulate",
            "--mesh",
            "scene/reference/frame_0000.obj",
            "--boundary-idx",
            "scene/boundary.idx",
            "--boundary",
            "scene/boundary.csv",
            "--out",
            "sim",
        ],
        tmp.path(),
    );
    for t in 0..=4 {
        let name = format!("frame_{t:04}.obj");
        assert_eq!(
            fs::read(tmp.path().join("sim/frames").join(&name)).unwrap(),
            fs::read(tmp.path().join("scene/reference").join(&name)).unwrap(),
            "{name}"
        );
    }
    let steps = fs::read_to_string(tmp.path().join("sim/steps.csv")).unwrap();
    assert_eq!(steps.lines().count(), 5);
    assert_eq!(fs::read(tmp.path().join("scene/boundary.csv")).unwrap(), before);
}

#[test]
fn estimate_writes_trace_and_result() {
    let tmp = tempfile::tempdir().unwrap();
    scene(tmp.path(), &[]);
    let v = ok(
        &[
            "estimate",
            "--reference",
            "scene/reference",
            "--boundary-idx",
            "scene/boundary.idx",
            "--iterations",
            "3",
            "--out",
            "est",
        ],
        tmp.path(),
    );
    assert_eq!(v["status"], "ok");
    let trace = fs::read_to_string(tmp.path().join("est/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);
    assert!(trace.starts_with("iter,rho,kappa_s,kappa_b,loss,seconds"));
    assert!(tmp.path().join("est/estimate.csv").is_file());
}

#[test]
fn track_writes_frames_and_objective() {
    let tmp = tempfile::tempdir().unwrap();
    scene(tmp.path(), &["--noise", "0.005"]);
    ok(
        &[
            "track",
            "--initial",
            "scene/reference/frame_0000.obj",
            "--targets",
            "scene/targets",
            "--iterations",
            "20",
            "--out",
            "tr",
        ],
        tmp.path(),
    );
    assert_eq!(fs::read_dir(tmp.path().join("tr/tracked")).unwrap().count(), 5);
    let stats = fs::read_to_string(tmp.path().join("tr/track.csv")).unwrap();
    assert!(stats.starts_with("frame,objective"));
}

#[test]
fn transfer_onto_the_same_mesh_copies_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let (body, weights) = (capsule("body.obj"), capsule("weights.csv"));
    let original = fs::read(&weights).unwrap();
    ok(
        &[
            "transfer-weights",
            "--source",
            body.to_str().unwrap(),
            "--weights",
            weights.to_str().unwrap(),
            "--target",
            body.to_str().unwrap(),
            "--out",
            "w",
        ],
        tmp.path(),
    );
    assert_eq!(fs::read(tmp.path().join("w/weights.csv")).unwrap(), original);
    assert_eq!(fs::read(&weights).unwrap(), original);
}

#[test]
fn skinned_body_drives_the_boundary() {
    let tmp = tempfile::tempdir().unwrap();
    // The body doubles as the garment, pinned near the top of the torso.
    let (body, weights, poses) = (capsule("body.obj"), capsule("weights.csv"), capsule("poses.csv"));
    let mesh = drapefit::mesh::load_mesh(&body).unwrap();
    let top: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| mesh.vertices()[v].y > 1.15)
        .collect();
    assert!(!top.is_empty());
    let idx: String = top.iter().map(|v| format!("{v}\n")).collect();
    fs::write(tmp.path().join("top.idx"), idx).unwrap();
    let v = ok(
        &[
            "simulate",
            "--mesh",
            body.to_str().unwrap(),
            "--boundary-idx",
            "top.idx",
            "--body",
            body.to_str().unwrap(),
            "--body-weights",
            weights.to_str().unwrap(),
            "--poses",
            poses.to_str().unwrap(),
            "--frames",
            "2",
            "--out",
            "s",
        ],
        tmp.path(),
    );
    assert_eq!(v["status"], "ok", "{v}");
    assert_eq!(fs::read_dir(tmp.path().join("s/frames")).unwrap().count(), 3);
}
