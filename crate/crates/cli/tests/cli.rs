use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hatano_cli::output::{Manifest, MANIFEST};

fn hatano(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hatano")).args(args).output().unwrap()
}

fn files_under(root: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out
}

/// Every file on disk is listed in the manifest and vice versa.
fn assert_no_orphans(root: &Path) -> Manifest {
    let m = Manifest::load(&root.join(MANIFEST)).unwrap();
    let mut listed: BTreeSet<String> = m.files.iter().cloned().collect();
    listed.insert(MANIFEST.to_string());
    assert_eq!(files_under(root), listed);
    m
}

/// A sweep small enough for a unit test.
fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.json");
    fs::write(
        &path,
        r#"{
  "spec": {"kind": "uniform", "a": -1.0, "b": 1.0},
  "n": [12, 16],
  "g_grid": [0.05, 0.1, 0.2],
  "epsilon": 0.15,
  "realizations": 4,
  "seed": 7,
  "lyapunov": {"spacing": 0.1, "steps": 2000, "replicas": 2},
  "large_deviation": {"energy": 0.0, "replicas": 50},
  "precision": "extended",
  "points_per_stretch": 20,
  "output_dir": "unused"
}"#,
    )
    .unwrap();
    path
}

#[test]
fn zero_potential_spectrum_is_circulant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp");
    let o = hatano(&[
        "spectrum",
        "--zero-potential",
        "--n",
        "4",
        "--g",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("n4/spectrum/r0000.csv")).unwrap();
    let rows: Vec<(f64, f64, bool)> = r
        .records()
        .map(|x| {
            let x = x.unwrap();
            (x[2].parse().unwrap(), x[3].parse().unwrap(), x[4].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    let expected = [
        (-2.2552, 0.0, true),
        (0.0, -1.0421, false),
        (0.0, 1.0421, false),
        (2.2552, 0.0, true),
    ];
    for ((re, im, real), (ere, eim, ereal)) in rows.iter().zip(expected) {
        assert!((re - ere).abs() < 1e-4 && (im - eim).abs() < 1e-4);
        assert_eq!(*real, ereal);
    }
    assert_no_orphans(&out);
}

#[test]
fn missing_config_exits_with_one() {
    let o = hatano(&["verify", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_field_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"spec": {"kind": "uniform", "a": 0, "b": 1}, "typo": 1}"#).unwrap();
    assert_eq!(hatano(&["bands", "--config", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn oversized_ng_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = hatano(&[
        "spectrum",
        "--zero-potential",
        "--n",
        "100",
        "--g",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_thread_count_exits_with_one() {
    let o = Command::new(env!("CARGO_BIN_EXE_hatano"))
        .args(["bands", "--zero-potential", "--n", "4", "--out", "/nonexistent/never"])
        .env("HATANO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn per_command_outputs_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for cmd in ["sample", "lyapunov", "bands", "spectrum", "flow"] {
        let out = dir.path().join(cmd);
        let o = hatano(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let m = assert_no_orphans(&out);
        assert_eq!(m.command, cmd);
        assert!(!m.files.is_empty());
    }
    let bands = fs::read_to_string(dir.path().join("bands/n12/bands/r0000.csv")).unwrap();
    assert!(bands.starts_with("j,E_j,left,right,width,logwidth,tp_logmag\n"));
    assert_eq!(bands.lines().count(), 13);
    let flow = fs::read_to_string(dir.path().join("flow/n16/flows/r0003.csv")).unwrap();
    assert!(flow.starts_with("g,j,re,im,is_real\n"));
    // the flow grid gains a leading zero
    assert_eq!(flow.lines().count(), 1 + 4 * 16);
}

#[test]
fn sweep_reruns_byte_identically_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = dir.path().join("first");
    let o = hatano(&["sweep", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_no_orphans(&first);
    let verify = fs::read_to_string(first.join("n12/verify.csv")).unwrap();
    assert!(verify.starts_with("statement_id,sample_id,j,g,epsilon,margin,passed\n"));

    let second = dir.path().join("second");
    let manifest = first.join(MANIFEST);
    let o = hatano(&["sweep", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success());
    let files = files_under(&first);
    assert_eq!(files, files_under(&second));
    for f in files.iter().filter(|f| *f != MANIFEST) {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f} differs");
    }

    let o = hatano(&["plot", "--input", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plots = first.join("plots");
    let m = assert_no_orphans(&plots);
    for expected in ["n12/rates.svg", "n12/bandwidth_rates.svg", "n16/spectrum_r0000.svg"] {
        assert!(m.files.iter().any(|f| f == expected), "missing {expected} in {:?}", m.files);
        let svg = fs::read_to_string(plots.join(expected)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
