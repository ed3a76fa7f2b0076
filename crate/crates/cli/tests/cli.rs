use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_skyaug");
const TINY: [&str; 12] = [
    "--set", "side=16",
    "--set", "synthetic_count=30",
    "--set", "gan_epochs=2",
    "--set", "candidate_count=6",
    "--set", "pls_max_comp=4",
    "--set", "gan_wide_channels=8",
];

fn skyaug(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .args(TINY)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn prepare_writes_default_split_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["prepare", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let split = fs::read_to_string(dir.path().join("split.csv")).unwrap();
    let count = |tag: &str| split.lines().filter(|l| l.ends_with(&format!(",{tag}"))).count();
    assert_eq!((count("train"), count("val"), count("test")), (69, 18, 28));

    // same seed → same manifest
    let again = tempfile::tempdir().unwrap();
    Command::new(BIN).args(["prepare", "--out"]).arg(again.path()).output().unwrap();
    assert_eq!(split, fs::read_to_string(again.path().join("split.csv")).unwrap());
}

#[test]
fn missing_dataset_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = skyaug(dir.path(), &["prepare", "--set", "dataset=/no/such/dataset"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/dataset"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| Command::new(BIN).args(args).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(run(&["prepare", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(run(&["prepare", "--set", "side=15"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn stage_order_violation_names_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = skyaug(dir.path(), &["filter"]);
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("split.csv") || msg.contains("data"), "{msg}");
    assert!(msg.contains("prepare"), "{msg}");
}

#[test]
fn staged_run_caching_and_isolation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for stage in [
        "prepare",
        "train-gan",
        "sample-gan",
        "pseudolabel",
        "tune-pls",
        "filter",
        "train-final",
        "evaluate",
        "report",
    ] {
        let o = skyaug(out, &[stage]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
        assert!(stderr(&o).contains("done"));
    }

    // unchanged inputs → no-op, unless forced
    let o = skyaug(out, &["train-gan"]);
    assert!(stderr(&o).contains("up to date"), "{}", stderr(&o));
    let o = skyaug(out, &["train-gan", "--force"]);
    assert!(stderr(&o).contains("done"));
    // forced rerun reproduces bytes, so downstream stays current
    assert!(stderr(&skyaug(out, &["sample-gan"])).contains("up to date"));

    // deleting a downstream artifact and rerunning that stage reproduces it
    let comparison = fs::read(out.join("eval/comparison.csv")).unwrap();
    let roc_before = fs::read_dir(out.join("eval/roc/after_augmentation")).unwrap().count();
    fs::remove_dir_all(out.join("eval")).unwrap();
    assert!(skyaug(out, &["evaluate"]).status.success());
    assert_eq!(fs::read(out.join("eval/comparison.csv")).unwrap(), comparison);
    assert_eq!(fs::read_dir(out.join("eval/roc/after_augmentation")).unwrap().count(), roc_before);

    // tampering with an upstream artifact is detected
    fs::write(out.join("pls/n_comp.txt"), "1\n").unwrap();
    let o = skyaug(out, &["filter"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("tune-pls"));

    // report contents
    let sweep = fs::read_to_string(out.join("report/ncomp_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 4);
    let filter = fs::read_to_string(out.join("report/filter_decisions.csv")).unwrap();
    assert_eq!(filter.lines().count(), 1 + 6);
    let comparison = String::from_utf8(comparison).unwrap();
    let lines: Vec<&str> = comparison.lines().collect();
    assert_eq!(lines[0], "case,r2_train,r2_test,precision,recall,f_score");
    assert!(lines[1].starts_with("without_augmentation,"));
    assert!(lines[2].starts_with("after_augmentation,"));
    let test_images = fs::read_to_string(out.join("split.csv")).unwrap().lines().filter(|l| l.ends_with(",test")).count();
    assert_eq!(fs::read_dir(out.join("report/roc/without_augmentation")).unwrap().count(), test_images);
    let manifest = fs::read_to_string(out.join("run_manifest.toml")).unwrap();
    assert!(manifest.contains("[stages.train-gan]") || manifest.contains("[stages.\"train-gan\"]"));
    assert!(manifest.contains("wall_time_secs"));
}

#[test]
fn config_file_and_show_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "side = 16\ncandidate_count = 3 # few\n").unwrap();
    let o = Command::new(BIN).args(["show-config", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("side = 16"));
    assert!(text.contains("candidate_count = 3"));
    assert!(text.contains("gan_epochs = 1000"));
}

#[test]
fn external_dataset_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ds");
    fs::create_dir_all(data.join("images")).unwrap();
    fs::create_dir_all(data.join("GTmaps")).unwrap();
    for (i, (img, map)) in skyaug::imageio::synth_dataset(12, 20, 3).unwrap().iter().enumerate() {
        skyaug::imageio::save_image_file(img, data.join(format!("images/{i:02}.pgm"))).unwrap();
        skyaug::imageio::save_map_file(map, data.join(format!("GTmaps/{i:02}_GT.pgm"))).unwrap();
    }
    let out = dir.path().join("out");
    let o = skyaug(&out, &["prepare", "--set", &format!("dataset={}", data.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let split = fs::read_to_string(out.join("split.csv")).unwrap();
    assert_eq!(split.lines().count(), 13);
    let img = skyaug::imageio::load_image_file(out.join("data/images/00.pgm")).unwrap();
    assert_eq!((img.width(), img.height()), (16, 16));
}
