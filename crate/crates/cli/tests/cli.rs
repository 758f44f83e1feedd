use cube_rmatrix::{build_r_p_direct, ChiralCouplings, ContractionPattern, C64};
use cube_rmatrix_cli::matrix_io::read_matrix;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cube-rmatrix"))
        .args(args)
        .current_dir(dir)
        .env("CUBE_RMATRIX_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_coupling_r_has_a_single_entry() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["build", "--model", "ising", "--J", "0", "0", "0", "--kind", "R", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = read_matrix(&dir.path().join("r.json")).unwrap();
    assert_eq!((f.rows, f.cols), (16, 16));
    assert_eq!(f.header.kind, "R");
    assert_eq!(f.header.n, 2);
    for (r, row) in f.data.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let want = if (r, c) == (15, 15) { [16.0, 0.0] } else { [0.0, 0.0] };
            assert_eq!(*v, want, "entry ({r}, {c})");
        }
    }
}

#[test]
fn potts_matrix_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["build", "--model", "potts", "--N", "3", "--J", "0.3", "-0.2", "0.45", "--kind", "RP", "--out", "rp.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = read_matrix(&dir.path().join("rp.json")).unwrap();
    assert_eq!((f.rows, f.cols), (81, 81));
    let fill = |v: f64| vec![C64::new(v, 0.0); 2];
    let direct = build_r_p_direct(&ChiralCouplings::new(3, fill(0.3), fill(-0.2), fill(0.45)).unwrap()).unwrap();
    let m = f.matrix().unwrap();
    for r in 0..81 {
        for c in 0..81 {
            let (a, b) = (m[(r, c)], direct.matrix()[(r, c)]);
            assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()), "entry ({r}, {c})");
        }
    }
    let text = std::fs::read_to_string(dir.path().join("rp.json")).unwrap();
    assert_eq!(serde_json::to_string(&f).unwrap(), text);
}

#[test]
fn chiral_file_input_builds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"N": 3, "jx": [[0.2, 0.1], [0.2, -0.1]], "jy": [[0.3, 0.0], [0.3, 0.0]], "jz": [[0.1, 0.05], [0.1, -0.05]]}"#;
    std::fs::write(dir.path().join("j.json"), cfg).unwrap();
    let o = run(&["build", "--model", "chiral", "--Jk-file", "j.json", "--kind", "WP", "--out", "w.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_matrix(&dir.path().join("w.json")).unwrap().rows, 81);
}

#[test]
fn malformed_couplings_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"N": 3, "jx": [[0.2, "x"], [0.2, 0.0]], "jy": [[0,0],[0,0]], "jz": [[0,0],[0,0]]}"#, "jx"),
        (r#"{"N": 3, "jx": [[0,0],[0,0]], "jy": [[0,0]], "jz": [[0,0],[0,0]]}"#, "jy"),
        (r#"{"N": 3, "jx": [[0,0],[0,0]], "jy": [[0,0],[0,0]]}"#, "jz"),
        (r#"{"N": 3, "jx": [[0,0],[0,0]], "jy": [[0,0],[0,0]], "jz": [[0,0],[0,0]], "hx": []}"#, "hx"),
    ];
    for (text, field) in cases {
        std::fs::write(dir.path().join("bad.json"), text).unwrap();
        let o = run(&["build", "--model", "chiral", "--Jk-file", "bad.json", "--kind", "RP", "--out", "o.json"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
    let o = run(&["build", "--model", "ising", "--J", "0", "0", "0", "--kind", "RP", "--out", "o.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["build", "--model", "potts", "--J", "0", "0", "0", "--kind", "RP", "--out", "o.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parity_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--suite", "parity", "--samples", "100", "--out", "report.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], "parity");
}

#[test]
fn rt_table_lists_mismatching_entries() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--suite", "rt-table", "--samples", "20"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let failing: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 2, "{out}");
    assert!(failing[0].contains("entry  9 R_0010^1000") && failing[1].contains("entry 16 R_1001^0110"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS entry")).count(), 28);
}

#[test]
fn generic_point_is_not_free_fermion() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--suite", "free-fermion", "--J", "0.3", "0.4", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL interaction at J = (0.3, 0.4, 0.5)"));
    let o = run(&["validate", "--suite", "free-fermion", "--J", "0", "0.4", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn scan_without_root_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scan", "--range", "0.1", "0.15", "--grids", "8", "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NO_ROOT"));
    let o = run(&["scan", "--range", "0.3", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |p: &'static str| ["scan", "--range", "0.28", "0.31", "--grids", "8", "12", "--out", p];
    assert_eq!(run(&args("a"), dir.path()).status.code(), Some(0));
    assert_eq!(run(&args("b"), dir.path()).status.code(), Some(0));
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.svg"), read("b.svg"));
    assert!(String::from_utf8(read("a.svg")).unwrap().contains("<polyline"));
}

#[test]
fn partition_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["z", "--J", "0", "0.3", "0.4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let values: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| l.split("ln Z = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| (v - values[0]).abs() < 1e-10), "{values:?}");
}

#[test]
fn emitted_pattern_drives_the_survey() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["integrability", "--preset", "degeneration", "--emit-pattern", "p.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("p.json")).unwrap();
    ContractionPattern::from_json(&text).unwrap().validate().unwrap();
    let survey = |extra: &[&str], out: &str| {
        let mut args = vec!["integrability", "--samples", "3", "--out", out];
        args.extend_from_slice(extra);
        assert_eq!(run(&args, dir.path()).status.code(), Some(0));
        std::fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let preset = survey(&["--preset", "degeneration"], "a.csv");
    let from_file = survey(&["--pattern-file", "p.json"], "b.csv");
    assert_eq!(preset, from_file);
    assert_eq!(preset.lines().count(), 4);
    let degenerate = survey(&["--preset", "degeneration", "--degenerate"], "c.csv");
    assert!(degenerate.lines().skip(1).all(|l| l.contains(",true,")), "{degenerate}");
}

#[test]
fn elliptic_survey_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["elliptic", "--grid", "4", "--k", "0.6", "--out", "e"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let jac = std::fs::read_to_string(dir.path().join("e_jacobi.csv")).unwrap();
    assert_eq!(jac.lines().count(), 1 + 16);
    assert!(dir.path().join("e_baxter.csv").exists());
}
