use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fplm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fplm"))
        .args(args)
        .env("FPLM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit status")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn pipeline(kind: &str, resolution: Option<&str>, dir: &Path) -> (Output, Output, Output) {
    let mut gen = vec!["generate", "--kind", kind, "--out", p(dir)];
    if let Some(r) = resolution {
        gen.extend(["--resolution", r]);
    }
    let g = fplm(&gen);
    let mesh = dir.join("mesh.json");
    let e = fplm(&["embed", "--mesh", p(&mesh), "--out", p(dir)]);
    let v = fplm(&[
        "validate",
        "--mesh",
        p(&mesh),
        "--embedding",
        p(&dir.join("embedding.csv")),
        "--out",
        p(dir),
    ]);
    (g, e, v)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("embed-manifest.json")).unwrap()).unwrap()
}

#[test]
fn every_surface_certifies_end_to_end() {
    for kind in [
        "swiss-roll",
        "paraboloid",
        "monkey-saddle",
        "twin-peaks",
        "sphere",
        "grid-disk",
    ] {
        let tmp = TempDir::new().unwrap();
        let (g, e, v) = pipeline(kind, None, tmp.path());
        assert_eq!(code(&g), 0, "{kind}: {}", String::from_utf8_lossy(&g.stderr));
        assert_eq!(code(&e), 0, "{kind}: {}", String::from_utf8_lossy(&e.stderr));
        assert_eq!(code(&v), 0, "{kind}: {}", String::from_utf8_lossy(&v.stdout));
        assert!(tmp.path().join("report.txt").exists());
        let report: Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(report["verdict"], "injective-certified");
    }
}

#[test]
fn ball_runs_and_reports_its_verdict() {
    let tmp = TempDir::new().unwrap();
    let (g, e, v) = pipeline("ball3", Some("3"), tmp.path());
    assert_eq!(code(&g), 0);
    assert_eq!(code(&e), 0);
    // Mixed orientations in 3D are reported, not hidden.
    assert!(matches!(code(&v), 0 | 3));
    assert_eq!(manifest(tmp.path())["embedding"]["rounds_run"], 2);
}

#[test]
fn swiss_roll_uses_two_rounds() {
    let tmp = TempDir::new().unwrap();
    let (_, e, _) = pipeline("swiss-roll", Some("30x30"), tmp.path());
    assert_eq!(code(&e), 0);
    let csv = fs::read_to_string(tmp.path().join("embedding.csv")).unwrap();
    assert_eq!(csv.lines().count(), 901);
    let m = manifest(tmp.path());
    assert_eq!(m["embedding"]["rounds_run"], 2);
    assert_eq!(m["embedding"]["branch"], "two-round");
    assert!(m["timings_ms"]["fplm"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["gamma"], 0.1);
}

#[test]
fn sphere_uses_one_round_and_drops_the_seed() {
    let tmp = TempDir::new().unwrap();
    let (_, e, v) = pipeline("sphere", Some("3"), tmp.path());
    assert_eq!(code(&e), 0);
    assert_eq!(code(&v), 0);
    let csv = fs::read_to_string(tmp.path().join("embedding.csv")).unwrap();
    assert_eq!(csv.lines().count(), 643);
    let m = manifest(tmp.path());
    assert_eq!(m["embedding"]["rounds_run"], 1);
    assert!(m["embedding"]["removed_simplex"].is_u64());
}

#[test]
fn coarse_disk_takes_the_polygon_branch() {
    let tmp = TempDir::new().unwrap();
    let (_, e, v) = pipeline("grid-disk", Some("2x2"), tmp.path());
    assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));
    assert_eq!(code(&v), 0);
    assert_eq!(manifest(tmp.path())["embedding"]["branch"], "p-gon");
}

#[test]
fn embedding_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    pipeline("twin-peaks", Some("20x20"), a.path());
    pipeline("twin-peaks", Some("20x20"), b.path());
    assert_eq!(
        fs::read(a.path().join("embedding.csv")).unwrap(),
        fs::read(b.path().join("embedding.csv")).unwrap()
    );
}

#[test]
fn bad_input_exits_with_status_two() {
    let tmp = TempDir::new().unwrap();
    let out = fplm(&["generate", "--kind", "torus", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    let missing = tmp.path().join("missing.json");
    let out = fplm(&["embed", "--mesh", p(&missing), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let bad = tmp.path().join("bad.off");
    fs::write(&bad, "OFF\n3 1 0\n0 0 0\n1 0\n0 1 0\n3 0 1 2\n").unwrap();
    let out = fplm(&["embed", "--mesh", p(&bad), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

fn write_square(dir: &Path) -> std::path::PathBuf {
    let mesh = dir.join("square.off");
    fs::write(
        &mesh,
        "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n",
    )
    .unwrap();
    mesh
}

#[test]
fn folded_embedding_is_a_violation() {
    let tmp = TempDir::new().unwrap();
    let mesh = write_square(tmp.path());
    let emb = tmp.path().join("folded.csv");
    // Vertex 3 is folded across the diagonal onto the side of vertex 1.
    fs::write(&emb, "id,y0,y1\n0,0,0\n1,1,0\n2,1,1\n3,0.9,0.2\n").unwrap();
    let out = fplm(&[
        "validate",
        "--mesh",
        p(&mesh),
        "--embedding",
        p(&emb),
        "--key-value",
    ]);
    assert_eq!(code(&out), 3);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("certified=false"), "{text}");
}

#[test]
fn render_draws_one_line_per_edge() {
    let tmp = TempDir::new().unwrap();
    let mesh = tmp.path().join("tri.off");
    fs::write(&mesh, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let emb = tmp.path().join("tri.csv");
    fs::write(&emb, "id,y0,y1\n0,0,0\n1,1,0\n2,0,1\n").unwrap();
    let svg = tmp.path().join("out/tri.svg");
    let out = fplm(&[
        "render",
        "--mesh",
        p(&mesh),
        "--embedding",
        p(&emb),
        "--out",
        p(&svg),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<line").count(), 3);
}

#[test]
fn render_rejects_three_dimensional_coordinates() {
    let tmp = TempDir::new().unwrap();
    let mesh = write_square(tmp.path());
    let emb = tmp.path().join("e.csv");
    fs::write(&emb, "id,y0,y1,y2\n0,0,0,0\n1,1,0,0\n2,1,1,0\n3,0,1,0\n").unwrap();
    let out = fplm(&[
        "render",
        "--mesh",
        p(&mesh),
        "--embedding",
        p(&emb),
        "--out",
        p(&tmp.path().join("x.svg")),
    ]);
    assert_eq!(code(&out), 2);
}
