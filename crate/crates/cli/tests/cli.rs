use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cea"))
        .args(args)
        .env_remove("CEA_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn nug12() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/nug12.dat").to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data files of a result directory, excluding the metadata sidecar.
fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "meta.txt")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn missing_grid_is_usage_error() {
    let o = cea(&["takeover", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--grid"));
}

#[test]
fn bad_grid_spec_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cea(&["takeover", "--grid", "8by8", "--beta", "0.5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = cea(&["takeover", "--grid", "8x8", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn beta_one_takeover_is_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let o = cea(&["takeover", "--grid", "8x8", "--beta", "1", "--cap", "100", "--replicates", "3", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("takeover_summary.csv")).unwrap();
    assert_eq!(summary, "beta,mean_takeover,std,defined,replicates\n1,undefined,undefined,0,3\n");
    assert!(dir.path().join("growth_curves.csv").exists());
    assert!(dir.path().join("growth_rates.csv").exists());
    let meta = fs::read_to_string(dir.path().join("meta.txt")).unwrap();
    assert!(meta.contains("seed = 0"));
}

#[test]
fn takeover_reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cea(&["takeover", "--grid", "10x10", "--beta-grid", "0:0.8:0.4", "--replicates", "4", "--seed", "9", "--out", s(d.path())]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(data_files(a.path()), data_files(b.path()));
    assert_eq!(data_files(a.path()).len(), 3);
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path, w: &str| {
        cea(&["--workers", w, "sweep", "--nk", "16,3,random,5", "--beta", "0.2,1", "--grid", "6x6", "--replicates", "3", "--generations", "40", "--out", s(d)])
    };
    assert!(args(a.path(), "1").status.success());
    assert!(args(b.path(), "3").status.success());
    assert_eq!(data_files(a.path()), data_files(b.path()));
}

#[test]
fn sweep_writes_tables_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = cea(&[
        "sweep", "--qap", &nug12(), "--beta", "0.2,0.85", "--grid", "6x6", "--replicates", "4",
        "--generations", "30", "--compare", "0.2,0.85", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "beta,mean,std,n,best");
    assert_eq!(lines.len(), 3);
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 9);
    let cmp = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert!(cmp.starts_with("beta_a,beta_b,mean_a,mean_b,p_value,better\n0.2,0.85,"));
}

#[test]
fn unreadable_instance_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = cea(&["sweep", "--qap", "/no/such/nug99.dat", "--beta", "0.5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/nug99.dat"));
}

#[test]
fn resume_completes_only_missing_runs() {
    let (full, part) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sweep = |d: &Path, resume: bool| {
        let mut args = vec![
            "sweep", "--nk", "20,4,adjacent,3", "--beta", "0.3,0.9", "--grid", "5x5",
            "--replicates", "5", "--generations", "25", "--seed", "4", "--out", s(d),
        ];
        if resume {
            args.push("--resume");
        }
        cea(&args)
    };
    assert!(sweep(full.path(), false).status.success());

    // Simulate a sweep killed mid-write: four finished runs in completion
    // order, then a torn line.
    let runs = fs::read_to_string(full.path().join("runs.csv")).unwrap();
    let lines: Vec<&str> = runs.lines().collect();
    let interrupted = format!("{}\n{}\n{}\n{}\n{}\n{}", lines[0], lines[7], lines[2], lines[9], lines[4], &lines[5][..6]);
    fs::write(part.path().join("runs.csv"), interrupted).unwrap();

    let o = sweep(part.path(), true);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("resumed 4 of 10 runs"), "{}", stderr(&o));
    assert_eq!(data_files(full.path()), data_files(part.path()));
}

#[test]
fn resume_rejects_foreign_seed() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["sweep", "--nk", "12,2,adjacent,1", "--beta", "0.5", "--grid", "4x4", "--replicates", "2", "--generations", "5"];
    let mut first = base.to_vec();
    first.extend(["--seed", "1", "--out", s(dir.path())]);
    assert!(cea(&first).status.success());
    let mut second = base.to_vec();
    second.extend(["--seed", "2", "--resume", "--out", s(dir.path())]);
    assert_eq!(cea(&second).status.code(), Some(2));
}

fn write_flat_landscape(path: &Path) {
    let tables: Vec<Vec<f64>> = (0..6).map(|_| vec![0.5; 4]).collect();
    let links: Vec<Vec<usize>> = (0..6).map(|i| vec![(i + 1) % 6]).collect();
    let json = format!(
        "{{\"n\":6,\"k\":1,\"kind\":\"adjacent\",\"seed\":0,\"links\":{links:?},\"tables\":{tables:?}}}"
    );
    fs::write(path, json).unwrap();
}

#[test]
fn flat_landscape_gives_low_confidence_report() {
    let dir = tempfile::tempdir().unwrap();
    let nk = dir.path().join("flat.json");
    write_flat_landscape(&nk);
    let out = dir.path().join("pem");
    let o = cea(&[
        "pem", "--nk-file", s(&nk), "--build-sigma", "--sigma-grid", "0:1:0.25", "--sigma-replicates", "3",
        "--horizon", "10", "--grid", "5x5", "--runs", "3", "--generations", "60", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pij = fs::read_to_string(out.join("pij.csv")).unwrap();
    let rows: Vec<&str> = pij.lines().collect();
    assert_eq!(rows[0], "window_start,p00,p01,p11,trials00,trials01,trials11,flag");
    assert_eq!(rows.len(), 3);
    // every cell shares the best value: only 11 matings, never a success
    assert_eq!(rows[1], format!("0,0.5,0.5,{},0,0,3750,prior:00+01", 1.0 / 3752.0));
    let stars = fs::read_to_string(out.join("beta_star.csv")).unwrap();
    assert!(stars.lines().skip(1).all(|l| l.ends_with(",1")), "{stars}");
    assert!(out.join("sigma_table.csv").exists());
}

#[test]
fn sigma_table_must_cover_requested_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = cea(&["sigma-table", "--grid", "5x5", "--beta-grid", "0:0.5:0.25", "--horizon", "5", "--replicates", "2", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = dir.path().join("sigma_table.csv");
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("beta,T,sigma00,sigma01,sigma11\n0,5,"));
    let o = cea(&["pem", "--nk", "8,2,adjacent,1", "--sigma-table", s(&table), "--grid", "5x5", "--runs", "1", "--generations", "5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("covers"), "{}", stderr(&o));
    let o = cea(&["pem", "--nk", "8,2,adjacent,1", "--sigma-table", s(&table), "--beta-range", "0:0.5", "--grid", "5x5", "--runs", "1", "--generations", "5", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn plotdata_reshapes_results() {
    let dir = tempfile::tempdir().unwrap();
    let res = dir.path().join("res");
    let o = cea(&["takeover", "--grid", "6x6", "--beta", "0.2,1", "--cap", "50", "--replicates", "2", "--out", s(&res)]);
    assert!(o.status.success());
    let plots = dir.path().join("plots");
    let o = cea(&["plotdata", "--input", s(&res), "--out", s(&plots)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fig2 = fs::read_to_string(plots.join("fig2.csv")).unwrap();
    assert!(fig2.starts_with("beta,mean_takeover\n0.2,"));
    assert_eq!(fig2.lines().count(), 2, "undefined beta=1 row is dropped");
    let fig3 = fs::read_to_string(plots.join("fig3.csv")).unwrap();
    assert!(fig3.starts_with("beta,t,N,dN\n0.2,0,1,0\n"));

    let o = cea(&["plotdata", "--input", s(&dir.path().join("nope")), "--out", s(&plots)]);
    assert_eq!(o.status.code(), Some(2));
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(cea(&["plotdata", "--input", s(&empty), "--out", s(&plots)]).status.code(), Some(2));
}

#[test]
fn recipe_matches_flags_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let via_flags = dir.path().join("flags");
    let via_recipe = dir.path().join("recipe");
    let o = cea(&["takeover", "--grid", "7x7", "--beta-grid", "0:0.5:0.25", "--replicates", "3", "--seed", "5", "--out", s(&via_flags)]);
    assert!(o.status.success());
    let recipe = dir.path().join("r.toml");
    fs::write(
        &recipe,
        format!(
            "command = \"takeover\"\ngrid = \"7x7\"\nbeta-grid = \"0:0.5:0.25\"\nreplicates = 3\nseed = 5\nout = {:?}\n",
            s(&via_recipe)
        ),
    )
    .unwrap();
    let o = cea(&["run", s(&recipe)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_files(&via_flags), data_files(&via_recipe));
    let meta = fs::read_to_string(via_recipe.join("meta.txt")).unwrap();
    assert!(meta.contains("[recipe]\ncommand = \"takeover\""));

    fs::write(&recipe, "command = \"takeover\"\ngrid = \"7x7\"\nbeta = 0.5\nflavour = 1\n").unwrap();
    let o = cea(&["run", s(&recipe)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flavour"), "{}", stderr(&o));
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target: PathBuf = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_cea"))
        .args(["takeover", "--grid", "5x5", "--beta", "0.5", "--replicates", "1"])
        .env("CEA_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("takeover_summary.csv").exists());
}
