mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vpi_core::episode::EpisodeRecord;

fn vpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpi")).args(args).output().unwrap()
}

fn generate(out: &Path, task: &str, pref: &str, seed: &str, extra: &[&str]) -> std::path::PathBuf {
    let mut args = vec!["generate", "--task", task, "--preference", pref, "--seed", seed, "--size", "128", "--out"];
    let out_s = out.to_str().unwrap();
    args.push(out_s);
    args.extend_from_slice(extra);
    let o = vpi(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("episodes").join(task).join(pref).join(seed)
}

#[test]
fn generate_two_images() {
    let dir = tempfile::tempdir().unwrap();
    let ep_dir = generate(dir.path(), "block", "cluster_quadrant_2", "4", &["--n", "2"]);
    let mut pngs = 0;
    let mut jsons = 0;
    for entry in std::fs::read_dir(&ep_dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        pngs += usize::from(name.ends_with(".png"));
        jsons += usize::from(name.ends_with(".json"));
    }
    assert_eq!((pngs, jsons), (2, 1));
    let ep = EpisodeRecord::from_json(&std::fs::read_to_string(ep_dir.join("episode.json")).unwrap()).unwrap();
    assert_eq!(ep.image_count(), 2);
    assert_eq!(ep.image_paths.as_ref().unwrap().len(), 2);
    assert!(ep.integrity_violations().is_empty());
}

#[test]
fn infer_oracle_reads_color_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let ep = generate(dir.path(), "polygon", "group_by_color", "9", &[]).join("episode.json");
    let ep = ep.to_str().unwrap();
    let o = vpi(&["infer", "--episode", ep, "--method", "covr", "--backend", "oracle:p=0,seed=0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["preference"], "group_by_color");

    let o = vpi(&["infer", "--episode", ep, "--method", "mdpe"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["preference"], "group_by_color");
}

#[test]
fn infer_over_http_mock() {
    let mock = common::spawn_mock();
    let dir = tempfile::tempdir().unwrap();
    let ep = generate(dir.path(), "block", "align_vertical", "1", &["--n", "3"]).join("episode.json");
    let run = |mode: &str| {
        Command::new(env!("CARGO_BIN_EXE_vpi"))
            .args(["infer", "--episode", ep.to_str().unwrap(), "--method", "covr", "--backend", "http"])
            .env("VPI_API_BASE", format!("{}/{mode}", mock.base))
            .env_remove("VPI_API_KEY")
            .output()
            .unwrap()
    };
    let o = run("ok");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["transcript"].as_array().unwrap().len(), 3);

    let o = run("garbage");
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for r in v["residuals"].as_array().unwrap() {
        assert_eq!(r["status"], "unparsed");
    }
    assert_eq!(v["transcript"].as_array().unwrap().len(), 2 * 3 + 1);

    let o = run("fail");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(vpi(&["generate", "--task", "block"]).status.code(), Some(2));
    assert_eq!(vpi(&["generate", "--task", "spaceship", "--preference", "align_vertical"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = vpi(&["generate", "--task", "polygon", "--preference", "align_vertical", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "preference the task cannot realize");
    assert_eq!(vpi(&["infer", "--episode", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(vpi(&["infer", "--episode", "x.json", "--backend", "carrier-pigeon"]).status.code(), Some(2));
    assert_eq!(vpi(&["bogus"]).status.code(), Some(2));
}

#[test]
fn render_writes_one_png_per_scene() {
    let dir = tempfile::tempdir().unwrap();
    let ep = generate(dir.path(), "household", "group_by_category", "3", &[]).join("episode.json");
    let out = dir.path().join("frames");
    let o = vpi(&["render", "--episode", ep.to_str().unwrap(), "--out", out.to_str().unwrap(), "--size", "96", "--annotate"]);
    assert!(o.status.success());
    let record = EpisodeRecord::from_json(&std::fs::read_to_string(&ep).unwrap()).unwrap();
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), record.image_count());
}

#[test]
fn bench_is_reproducible_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        "master_seed = 5\ntasks = [\"polygon\"]\nrepeats = 2\nimage_size = 96\n\n[backend]\nkind = \"oracle\"\nnoise = 0.1\nseed = 2\n",
    )
    .unwrap();
    let run = |id: &str| {
        let o = vpi(&["bench", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--run-id", id]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(id).join("report.txt")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(dir.path().join("a/report.csv").exists());
    assert!(dir.path().join("a/episodes/covr/polygon/group_by_color").is_dir());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "tasks = [\"block\"]\nmethods = [\"covr\"]\nrepeats = 1\n\n[backend]\nkind = \"http\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vpi"))
        .args(["bench", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--no-audit"])
        .env("VPI_API_BASE", "http://127.0.0.1:9")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Failed cells"));
}
