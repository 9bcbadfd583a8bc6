use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use synergy_harness::suite::{RunManifest, SuiteRecord};

const TINY: &str = "\
[world]
seed = 3
level1 = 2
level2 = 2
level3 = 2
sites_per_region = 3
days = 120

[train]
seed = 5
hidden = 6
window = 10
batch = 8
epochs = 2

[experiment]
sampling_seed = 9
min_roi_sites = 3

[eval]
warmup = 5

[io]
workers = 1
";

fn synergy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synergy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("cfg.ini");
    fs::write(&p, format!("{TINY}{extra}")).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifests(out: &Path) -> Vec<RunManifest> {
    let rec: SuiteRecord = serde_json::from_str(&fs::read_to_string(out.join("suite.json")).unwrap()).unwrap();
    rec.runs
        .iter()
        .map(|r| RunManifest::load(&out.join("runs").join(&r.run_id).join("manifest.json")).unwrap())
        .collect()
}

#[test]
fn gen_world_is_deterministic_and_needs_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = synergy(&["gen-world", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    for f in [
        "sites.csv",
        "forcing.csv",
        "target.csv",
        "latent_truth.csv",
        "taxonomy.csv",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.join("sites.csv")).unwrap().lines().count(), 1 + 24);

    let noseed = tmp.path().join("noseed.ini");
    fs::write(&noseed, "[world]\ndays = 10\n").unwrap();
    let o = synergy(&["gen-world", "--config", s(&noseed), "--out", s(&tmp.path().join("c"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("world.seed"));

    let o = synergy(&[
        "gen-world",
        "--config",
        s(&noseed),
        "--seed-override",
        "2",
        "--out",
        s(&tmp.path().join("d")),
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
}

#[test]
fn default_world_has_432_sites() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synergy(&["gen-world", "--seed-override", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{o:?}");
    let sites = fs::read_to_string(tmp.path().join("sites.csv")).unwrap();
    assert_eq!(sites.lines().count(), 1 + 432);
    let target = fs::read_to_string(tmp.path().join("target.csv")).unwrap();
    assert_eq!(target.lines().count(), 1 + 432 * 730);
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    for (section, keys) in [
        (
            "[experiment]\n",
            "train_start = 2015-04-01\ntrain_end = 2015-06-01\ntest_start = 2015-05-01\ntest_end = 2015-07-01\n",
        ),
        (
            "[experiment]\n",
            "train_start = 2019-01-01\ntrain_end = 2019-02-01\ntest_start = 2019-02-01\ntest_end = 2019-03-01\n",
        ),
        ("[experiment]\n", "train_start = 2015-04-01\n"),
        ("[train]\n", "bogus = 1\n"),
    ] {
        let cfg = tmp.path().join("bad.ini");
        fs::write(&cfg, TINY.replace(section, &format!("{section}{keys}"))).unwrap();
        let o = synergy(&["run-suite", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
        assert_eq!(code(&o), 1, "{keys}: {o:?}");
    }
}

#[test]
fn global_local_suite_report_and_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("suite");
    let o = synergy(&["run-suite", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let summary = stdout(&o);
    // Header, one row per letter (A..D), pooled row.
    assert_eq!(summary.lines().count(), 1 + 4 + 1, "{summary}");
    let pooled = summary.lines().last().unwrap();
    assert!(pooled.starts_with("All"), "{summary}");
    // Every site enters the pooled test once.
    assert_eq!(pooled.split_whitespace().last(), Some("24"), "{summary}");

    let ms = manifests(&out);
    assert_eq!(ms.len(), 5);
    assert_eq!(ms[0].model_id, "global");
    assert_eq!(ms[0].training_site_count, 24);
    let local_total: usize = ms[1..].iter().map(|m| m.training_site_count).sum();
    assert_eq!(local_total, 24);
    for m in &ms {
        let dir = out.join("runs").join(&m.run_id);
        for f in [
            "manifest.json",
            "checkpoint.bin",
            "metrics.csv",
            "comparisons.csv",
            "train_log.csv",
        ] {
            assert!(dir.join(f).exists(), "{f}");
        }
        let log = fs::read_to_string(dir.join("train_log.csv")).unwrap();
        assert!(log.starts_with("epoch,mean_loss,clip_events\n"));
        assert_eq!(log.lines().count(), 3);
    }
    let metrics = fs::read_to_string(out.join("runs").join(&ms[0].run_id).join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("site_id,region,model_id,rmse,corr,nse,n_obs\n"));

    // Rerun from a manifest reproduces the artifacts byte for byte.
    for m in [&ms[0], &ms[2]] {
        let dir = out.join("runs").join(&m.run_id);
        let again = tmp.path().join(format!("again-{}", m.run_id));
        let o = synergy(&[
            "train",
            "--from-manifest",
            s(&dir.join("manifest.json")),
            "--out",
            s(&again),
        ]);
        assert_eq!(code(&o), 0, "{o:?}");
        for f in ["checkpoint.bin", "metrics.csv", "train_log.csv", "manifest.json"] {
            assert_eq!(fs::read(dir.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
        }
    }

    // Standalone evaluation reproduces the suite's metrics.
    let run = out.join("runs").join(&ms[1].run_id);
    let ev = tmp.path().join("eval");
    let o = synergy(&["eval", "--run", s(&run), "--out", s(&ev)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(
        fs::read_to_string(run.join("metrics.csv")).unwrap(),
        fs::read_to_string(ev.join("metrics.csv")).unwrap()
    );

    // Report.
    let rep = tmp.path().join("report");
    let o = synergy(&["report", s(&out), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(stdout(&o), summary);
    let table = fs::read_to_string(rep.join("table.csv")).unwrap();
    assert!(table.starts_with("region,comparison,rmse_a,rmse_b,p_rmse,n_rmse,"));
    assert_eq!(table.lines().count(), 6);
    let boxes = fs::read_to_string(rep.join("boxplot_global_vs_local.csv")).unwrap();
    assert!(boxes.starts_with("region,metric,model,n,min,q25,median,q75,max\n"));

    let empty = tempfile::tempdir().unwrap();
    let o = synergy(&["report", s(empty.path()), "--out", s(&rep)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn suite_is_byte_identical_across_runs_and_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&synergy(&["run-suite", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(
        code(&synergy(&[
            "run-suite",
            "--config",
            s(&cfg),
            "--workers",
            "3",
            "--out",
            s(&b)
        ])),
        0
    );
    for f in [
        "comparisons.csv",
        "pairs.csv",
        "metrics.csv",
        "suite.json",
        "summary.txt",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    for m in manifests(&a) {
        for f in ["checkpoint.bin", "metrics.csv", "manifest.json"] {
            let pa = a.join("runs").join(&m.run_id).join(f);
            let pb = b.join("runs").join(&m.run_id).join(f);
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{f}");
        }
    }
}

#[test]
fn similar_dissimilar_with_size_control() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sd.ini");
    fs::write(
        &cfg,
        TINY.replace(
            "[experiment]\n",
            "[experiment]\nfamily = similar_dissimilar\nrois = S1.1.1, S2.2.2\nsize_controlled = both\n",
        ),
    )
    .unwrap();
    let out = tmp.path().join("sd");
    let o = synergy(&["run-suite", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let ms = manifests(&out);
    // Per ROI: local, three augmented, three size-controlled augmented.
    assert_eq!(ms.len(), 14);
    for roi in ["S1.1.1", "S2.2.2"] {
        let of = |suffix: &str| -> Vec<&RunManifest> {
            ms.iter()
                .filter(|m| m.model_id.starts_with(roi) && m.model_id.ends_with(suffix))
                .collect()
        };
        let sc = of("+sc");
        assert_eq!(sc.len(), 3);
        let added: Vec<usize> = sc.iter().map(|m| m.added_site_count.unwrap()).collect();
        assert!(added.iter().all(|a| *a == added[0] && *a > 0), "{added:?}");
        // Close pool is the rest of the level-II region: 1 region x 3 sites.
        assert_eq!(added[0], 3);
        let local = ms.iter().find(|m| m.model_id == format!("{roi}/local")).unwrap();
        for m in ms.iter().filter(|m| m.model_id.starts_with(roi)) {
            assert_eq!(m.eval_site_ids, local.eval_site_ids);
            for id in &local.training_site_ids {
                assert!(m.training_site_ids.contains(id));
            }
        }
        assert!(sc.iter().all(|m| m.notes.iter().any(|n| n.contains("whole sites"))));
    }
    let summary = stdout(&o);
    assert!(summary.contains("local_vs_dissimilar+sc"), "{summary}");
    assert!(summary.lines().any(|l| l.starts_with("All")), "{summary}");
}

#[test]
fn train_and_data_dir_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let data = tmp.path().join("data");
    assert_eq!(
        code(&synergy(&["gen-world", "--config", s(&cfg), "--out", s(&data)])),
        0
    );
    let out = tmp.path().join("t");
    let o = synergy(&[
        "train",
        "--config",
        s(&cfg),
        "--data",
        s(&data),
        "--model",
        "local:B",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("local:B trained"));
    let o = synergy(&[
        "train",
        "--config",
        s(&cfg),
        "--data",
        s(&data),
        "--model",
        "local:Z",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
}
