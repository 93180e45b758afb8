use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aegis(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_aegis"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("AEGIS_OUTPUT_DIR")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn staged_subcommands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    aegis(d, &["generate", "--n-u", "30", "--n-v", "30", "--blocks", "3", "--out", "data"]);
    aegis(d, &["percolate", "--edges", "data/edges.txt", "--n-u", "30", "--n-v", "30", "--q", "0.6", "--out", "kept.txt"]);
    aegis(d, &["split", "--edges", "kept.txt", "--n-u", "30", "--n-v", "30", "--out", "split"]);
    aegis(d, &["augment", "--split", "split", "--policy", "degree-aware", "--phi", "4", "--out", "aug.txt"]);
    let train_pos = fs::read_to_string(d.join("split/train_pos.txt")).unwrap().lines().count();
    let aug = fs::read_to_string(d.join("aug.txt")).unwrap().lines().count();
    assert_eq!(aug, train_pos * 4);
    let prov = fs::read_to_string(d.join("aug.prov.toml")).unwrap();
    assert!(prov.contains("kind = \"degree_aware\""), "{prov}");

    aegis(d, &["train", "--split", "split", "--positives", "aug.txt", "--epochs", "5", "--out", "m.ckpt"]);
    aegis(d, &["eval", "--model", "m.ckpt", "--split", "split", "--out", "m.csv"]);
    let metrics = fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(metrics.starts_with("split,auc,brier\nval,"));
}

#[test]
fn ingest_assigns_dense_ids() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("raw.csv"), "alice,x\nbob,y\nalice,y\n").unwrap();
    let out = aegis(tmp.path(), &["ingest", "--input", "raw.csv", "--out", "ing"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("edges = 3"));
    assert_eq!(fs::read_to_string(tmp.path().join("ing/u_ids.csv")).unwrap(), "alice,0\nbob,1\n");
    assert_eq!(fs::read_to_string(tmp.path().join("ing/edges.txt")).unwrap(), "0,0\n1,1\n0,1\n");
}

#[test]
fn experiment_and_report_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    aegis(d, &["generate", "--n-u", "30", "--n-v", "30", "--blocks", "3", "--out", "data"]);
    fs::write(
        d.join("exp.toml"),
        "name = \"e\"\nn_seeds = 2\nphi = 3\n[dataset]\nedges = \"data/edges.txt\"\nn_u = 30\nn_v = 30\n\
         [train]\nepochs = 5\n[[policies]]\nkind = \"none\"\n[[policies]]\nkind = \"simple\"\n",
    )
    .unwrap();
    aegis(d, &["experiment", "--config", "exp.toml", "--out", "runs"]);
    let results = d.join("runs/e/results.csv");
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 1 + 2 * 2 * 2);
    aegis(d, &["report", "--results", "runs/e/results.csv", "--out", "rep"]);
    let md = fs::read_to_string(d.join("rep/auc_table.md")).unwrap();
    assert!(md.contains("| baseline |") && md.contains("| simple |"), "{md}");
}

#[test]
fn bad_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("exp.toml"),
        "name = \"e\"\nbogus = 1\n[dataset]\nedges = \"e.txt\"\nn_u = 1\nn_v = 1\n[[policies]]\nkind = \"none\"\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aegis"))
        .current_dir(tmp.path())
        .args(["experiment", "--config", "exp.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}
