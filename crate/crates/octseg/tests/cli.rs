use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use octseg::cli::{EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use octseg::phantom::PhantomSpec;
use octseg::BoundaryId;
use tempfile::TempDir;

fn octseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_octseg")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small phantom written by the CLI and segmented once, shared by tests.
struct Fixture {
    _dir: TempDir,
    phantom: PathBuf,
    seg: PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let spec = dir.path().join("spec.json");
        fs::write(&spec, PhantomSpec::noisy(3).resized(160, 24, 320).to_json().unwrap()).unwrap();
        let phantom = dir.path().join("ph");
        let o = octseg(&["phantom", "--config", s(&spec), "--out", s(&phantom)]);
        assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
        let seg = dir.path().join("seg");
        let o = octseg(&["segment", "--input", s(&phantom.join("volume.raw")), "--out", s(&seg)]);
        assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
        Fixture { _dir: dir, phantom, seg }
    })
}

#[test]
fn phantom_then_segment_writes_everything() {
    let f = fixture();
    assert!(f.phantom.join("volume.raw").is_file());
    assert!(f.phantom.join("volume.json").is_file());
    for id in BoundaryId::ALL {
        assert!(f.phantom.join("truth").join(format!("{}.csv", id.file_stem())).is_file());
        assert!(f.seg.join(format!("{}.csv", id.file_stem())).is_file());
        assert!(f.seg.join(format!("{}.pgm", id.file_stem())).is_file());
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.seg.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["frames"], 24);
    assert!(summary["seconds_per_frame"].as_f64().unwrap() > 0.0);
    assert!(summary["flagged_columns"].is_u64());
    let stages: Vec<&str> = summary["stages"].as_array().unwrap().iter().map(|s| s[0].as_str().unwrap()).collect();
    assert_eq!(stages, ["rpe", "flatten", "ilm", "isos", "opl_onl", "nfl_gcl", "ipl_inl", "inl_opl", "unflatten"]);
}

#[test]
fn eval_against_truth() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let o = octseg(&[
        "eval", "--input", s(&f.seg), "--truth", s(&f.phantom.join("truth")), "--scale-um-per-px", "3.9", "--out", s(&csv),
    ]);
    assert_eq!(code(&o), EXIT_OK);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("Overall") && table.contains("Absolute (um)"), "{table}");
    let report = fs::read_to_string(&csv).unwrap();
    assert_eq!(report.lines().count(), 9);
    let overall: Vec<&str> = report.lines().last().unwrap().split(',').collect();
    assert_eq!(overall[0], "Overall");
    assert!(overall[1].parse::<f64>().unwrap() <= 3.0);
}

#[test]
fn eval_of_truth_against_itself_is_zero() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let truth = f.phantom.join("truth");
    let csv = dir.path().join("r.csv");
    let o = octseg(&["eval", "--input", s(&truth), "--truth", s(&truth), "--out", s(&csv)]);
    assert_eq!(code(&o), EXIT_OK);
    for line in fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[1..5].iter().all(|c| c.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn eval_names_the_missing_boundary() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    for id in BoundaryId::ALL.into_iter().filter(|&b| b != BoundaryId::NflGcl) {
        let name = format!("{}.csv", id.file_stem());
        fs::copy(f.seg.join(&name), dir.path().join(&name)).unwrap();
    }
    let o = octseg(&["eval", "--input", s(dir.path()), "--truth", s(&f.phantom.join("truth"))]);
    assert_ne!(code(&o), EXIT_OK);
    assert!(String::from_utf8_lossy(&o.stderr).contains("NflGcl"));
}

#[test]
fn render_overlay_and_heatmap() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let raw = f.phantom.join("volume.raw");
    let png = dir.path().join("o.png");
    let o = octseg(&["render", "--input", s(&raw), "--boundaries", s(&f.seg), "--frame", "12", "--out", s(&png)]);
    assert_eq!(code(&o), EXIT_OK);
    assert_eq!(image::open(&png).unwrap().to_rgb8().dimensions(), (160, 320));

    let heat = dir.path().join("t.png");
    let o = octseg(&[
        "render", "--input", s(&raw), "--boundaries", s(&f.seg), "--thickness", "VitreousILM", "RpeChoroid", "--out", s(&heat),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(image::open(&heat).unwrap().to_rgb8().dimensions(), (160, 24));
    let legend: serde_json::Value = serde_json::from_str(&fs::read_to_string(heat.with_extension("json")).unwrap()).unwrap();
    assert_eq!(legend["unit"], "um");
    assert!(legend["min"].as_f64().unwrap() <= legend["max"].as_f64().unwrap());
    assert_eq!(fs::read_to_string(heat.with_extension("csv")).unwrap().lines().count(), 24);

    let o = octseg(&["render", "--input", s(&raw), "--boundaries", s(&f.seg), "--frame", "200", "--out", s(&png)]);
    assert_eq!(code(&o), EXIT_VALIDATION);
    assert!(String::from_utf8_lossy(&o.stderr).contains("200"));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = octseg(&["segment", "--input", "/definitely/not/here.raw", "--out", s(&out)]);
    assert_eq!(code(&o), EXIT_IO);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here.raw"));
    assert!(!out.exists());
}

#[test]
fn oversized_kernel_fails_before_any_output() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"rpe": {"mean_kernel": {"x": 7, "y": 7, "z": 999}}}"#).unwrap();
    let out = dir.path().join("out");
    let o = octseg(&["segment", "--input", s(&f.phantom.join("volume.raw")), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), EXIT_VALIDATION);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rpe.mean_kernel"));
    assert!(!out.exists());
}

#[test]
fn phantom_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&octseg(&["phantom", "--seed", "7", "--out", s(out)])), EXIT_OK);
    }
    for rel in ["volume.raw", "volume.json", "phantom.json", "truth/rpe_choroid.csv", "truth/vitreous_ilm.csv"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    assert_eq!(fs::metadata(a.join("volume.raw")).unwrap().len(), 512 * 97 * 496);
}

#[test]
fn phantom_bands_past_depth_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.json");
    fs::write(&spec, r#"{"depth": 200}"#).unwrap();
    let o = octseg(&["phantom", "--config", s(&spec), "--out", s(&dir.path().join("p"))]);
    assert_eq!(code(&o), EXIT_VALIDATION);
}

#[test]
fn thread_count_does_not_change_results() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let raw = f.phantom.join("volume.raw");
    for n in ["1", "3"] {
        let out = dir.path().join(n);
        assert_eq!(code(&octseg(&["segment", "--input", s(&raw), "--out", s(&out), "--threads", n])), EXIT_OK);
        for id in BoundaryId::ALL {
            let name = format!("{}.csv", id.file_stem());
            assert_eq!(fs::read(out.join(&name)).unwrap(), fs::read(f.seg.join(&name)).unwrap(), "{name} with {n} threads");
        }
    }
}

#[test]
fn usage_errors() {
    assert_eq!(code(&octseg(&[])), EXIT_USAGE);
    assert_eq!(code(&octseg(&["segment"])), EXIT_USAGE);
    assert_eq!(code(&octseg(&["render", "--boundaries", "b", "--frame", "1", "--thickness", "A", "B", "--out", "x"])), EXIT_USAGE);
    assert_eq!(code(&octseg(&["--help"])), EXIT_OK);
}
