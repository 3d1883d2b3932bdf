use std::path::Path;
use std::process::Command;

fn antijam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_antijam"))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn fig8_has_one_row_per_slot_scheduler_and_drop() {
    let dir = tempfile::tempdir().unwrap();
    let status = antijam()
        .args(["--figure", "8", "--drops", "4", "--seed", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let (header, rows) = read_csv(&dir.path().join("fig8.csv"));
    assert_eq!(
        header,
        [
            "scheduler",
            "num_rrh",
            "target_rate_bps",
            "jammer_power_w",
            "static_power_w",
            "config_hash",
            "seed",
            "drop_id",
            "slot",
            "outage_pct"
        ]
    );
    assert_eq!(rows.len(), 10 * 3 * 4);
    assert_eq!(rows[0][6], "3");
    assert_eq!(rows[10][7], "1");
    let (_, summary) = read_csv(&dir.path().join("fig8_summary.csv"));
    assert_eq!(summary.len(), 10 * 3);
    assert!(summary.iter().all(|r| r[7] == "all"));
}

#[test]
fn fig2_sweeps_ten_targets_per_scheduler_and_rrh_count() {
    let dir = tempfile::tempdir().unwrap();
    let status = antijam()
        .args([
            "--figure",
            "2",
            "--drops",
            "2",
            "--scheduler",
            "oma",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let (_, summary) = read_csv(&dir.path().join("fig2_summary.csv"));
    assert_eq!(summary.len(), 10 * 3);
    for r in ["1", "4", "7"] {
        assert_eq!(summary.iter().filter(|row| row[1] == r).count(), 10);
    }
    assert!(summary.iter().all(|row| row[0] == "oma"));
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, workers) in dirs.iter().zip(["1", "3"]) {
        let status = antijam()
            .args([
                "--figure",
                "all",
                "--drops",
                "3",
                "--workers",
                workers,
                "--out",
            ])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 14);
    for name in names {
        let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "num_users = 8\nhorizon_slots = 4\nschedulers = [\"mat\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = antijam()
        .arg("--config")
        .arg(&cfg)
        .args(["--figure", "8", "--drops", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (_, rows) = read_csv(&out.join("fig8.csv"));
    assert_eq!(rows.len(), 4 * 2);
    assert!(rows.iter().all(|r| r[0] == "mat"));
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "num_userz = 8\n").unwrap();
    let out = antijam()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_userz"));
}

#[test]
fn unwritable_output_dir_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = antijam()
        .args(["--figure", "8", "--drops", "1", "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_flags_exit_nonzero() {
    for args in [
        ["--figure", "9"],
        ["--scheduler", "tdma"],
        ["--workers", "0"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = antijam()
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(!out.status.success(), "{args:?}");
    }
}
