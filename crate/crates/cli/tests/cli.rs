use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvol"))
        .args(args)
        .env_remove("QVOL_THREADS")
        .output()
        .expect("run qvol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small_cube(dir: &Path) -> PathBuf {
    let out = dir.join("cube");
    let o = qvol(&[
        "phantom",
        "--shape",
        "cube",
        "--edge-mm",
        "20",
        "--grid",
        "32x32x25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("volume.txt")
}

#[test]
fn phantom_prints_true_volume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = qvol(&[
        "phantom",
        "--shape",
        "cube",
        "--edge-mm",
        "80",
        "--grid",
        "128x128x100",
        "--spacing-mm",
        "1,1,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("true_volume_mm3=512000\n"), "{}", stdout(&o));
    assert!(out.join("volume.txt").exists() && out.join("volume.raw").exists());

    let o = qvol(&[
        "phantom",
        "--shape",
        "cylinder",
        "--radius-mm",
        "30",
        "--height-mm",
        "150",
        "--grid",
        "128x128x170",
        "--encoding",
        "f32le",
        "--out",
        dir.path().join("cyl").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("true_volume_mm3=424115\n"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = qvol(&["phantom", "--shape", "cube", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--edge-mm"));

    let m = small_cube(dir.path());
    let m = m.to_str().unwrap();
    for args in [
        vec!["volume", "--manifest", m, "--points", "0"],
        vec!["volume", "--manifest", m, "--bases", "2,4"],
        vec!["volume", "--manifest", m, "--truth", "-1"],
        vec!["volume", "--manifest", m, "--method", "sobol"],
        vec!["converge", "--manifest", m, "--grid-points", "400,100"],
        vec!["points-to-target", "--manifest", m, "--target", "1.5"],
        vec!["phantom", "--shape", "cube", "--edge-mm", "200", "--out", "x"],
        vec!["phantom", "--shape", "cube", "--edge-mm", "2", "--grid", "3x3", "--out", "x"],
    ] {
        assert_eq!(qvol(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let o = qvol(&["volume", "--manifest", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let m = small_cube(dir.path());
    std::fs::write(m.with_extension("raw"), [0u8; 10]).unwrap();
    let o = qvol(&["volume", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected"));
}

#[test]
fn volume_reports_error_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_cube(dir.path());
    let o = qvol(&[
        "volume",
        "--manifest",
        m.to_str().unwrap(),
        "--points",
        "4000",
        "--truth",
        "8000",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,points_per_slice,volume_mm3,truth_mm3,relative_error"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("\"halton(2,11)@1\",4000,"), "{row}");
    let err: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(err < 0.05, "{err}");
}

#[test]
fn per_slice_output_has_one_row_per_slice() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_cube(dir.path());
    let o = qvol(&["volume", "--manifest", m.to_str().unwrap(), "--per-slice", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("slice,hits,total,area_mm2"));
    assert_eq!(text.lines().count(), 1 + 25);

    let o = qvol(&["volume", "--manifest", m.to_str().unwrap(), "--per-slice", "--format", "json"]);
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[0]["type"], "volume");
    assert_eq!(lines[25]["slice"], 24);
}

#[test]
fn compare_prints_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_cube(dir.path());
    let o = qvol(&["compare", "--manifest", m.to_str().unwrap(), "--truth", "8000", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,volume_mm3,relative_error");
    assert!(lines[1].starts_with("halton,"));
    assert!(lines[2].starts_with("mc,"));

    let o = qvol(&[
        "compare",
        "--manifest",
        m.to_str().unwrap(),
        "--truth",
        "8000",
        "--display-unit",
        "cm3",
    ]);
    let text = stdout(&o);
    assert!(text.contains("volume_cm3"));
    assert!(text.contains('%') && !text.contains("**"));
}

#[test]
fn converge_csv_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_cube(dir.path());
    let o = qvol(&[
        "converge",
        "--manifest",
        m.to_str().unwrap(),
        "--grid-points",
        "50,100,200,400",
        "--seeds",
        "4",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("n,qmc_error,mc_error_mean,mc_error_std,theory_qmc,theory_mc"));
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn points_to_target_on_full_mask_has_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("full.txt");
    std::fs::write(
        &m,
        "width = 4\nheight = 4\nslices = 3\ndx_mm = 1\ndy_mm = 1\nthickness_mm = 1\nencoding = u8\ndata = full.raw\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("full.raw"), [255u8; 48]).unwrap();
    let o = qvol(&["points-to-target", "--manifest", m.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "target,n_mc,n_qmc,ratio\n0.01,10,10,1.000\n");
}

#[test]
fn worker_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_cube(dir.path());
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qvol"))
            .args(["compare", "--manifest", m.to_str().unwrap(), "--truth", "8000"])
            .env("QVOL_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(one.stdout, run("4").stdout);
    assert_eq!(one.stdout, run("0").stdout);
    assert_eq!(run("lots").status.code(), Some(2));
}
