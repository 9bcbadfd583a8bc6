use std::fs;
use std::path::Path;

use synergy_core::synth::{gen_world, WorldConfig};
use synergy_harness::io::{self, load_dataset, save_dataset, save_world};
use synergy_harness::HarnessError;

fn small_world() -> synergy_core::synth::World {
    gen_world(&WorldConfig {
        seed: 4,
        level1: 2,
        level2: 2,
        level3: 1,
        sites_per_region: 2,
        days: 20,
        ..Default::default()
    })
    .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn save_load_save_is_byte_identical() {
    let w = small_world();
    let a = tempfile::tempdir().unwrap();
    save_world(a.path(), &w).unwrap();
    let loaded = load_dataset(a.path()).unwrap();
    assert_eq!(loaded, w.dataset);
    let b = tempfile::tempdir().unwrap();
    save_dataset(b.path(), &loaded).unwrap();
    for f in [io::SITES, io::FORCING, io::TARGET] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert!(read(a.path(), io::TARGET).contains(",NA\n"));
    assert!(read(a.path(), io::LATENT_TRUTH).starts_with("site_id,C,k,gamma,beta\n"));
    let tax = io::load_taxonomy(&a.path().join(io::TAXONOMY)).unwrap();
    assert_eq!(tax, w.taxonomy);
}

#[test]
fn two_site_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join(io::SITES), "site_id,region,area\na,1.1.1,3\nb,1.2.1,4.5\n").unwrap();
    fs::write(
        p.join(io::FORCING),
        "site_id,date,precip\na,2020-01-01,1\na,2020-01-02,0\nb,2020-01-01,2\nb,2020-01-02,0.25\n",
    )
    .unwrap();
    fs::write(
        p.join(io::TARGET),
        "site_id,date,value\na,2020-01-01,0.5\na,2020-01-02,NA\nb,2020-01-01,NA\nb,2020-01-02,0.75\n",
    )
    .unwrap();
    let ds = load_dataset(p).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.n_time(), 2);
    assert_eq!(ds.sites()[0].target, [Some(0.5), None]);
    assert_eq!(ds.sites()[1].forcing, [2.0, 0.25]);
    assert_eq!(ds.attr_names(), ["area"]);

    let out = tempfile::tempdir().unwrap();
    save_dataset(out.path(), &ds).unwrap();
    for f in [io::SITES, io::FORCING, io::TARGET] {
        assert_eq!(read(p, f), read(out.path(), f), "{f}");
    }
}

/// Writes a valid fixture, then replaces one file's content.
fn broken(file: &str, content: &str) -> HarnessError {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join(io::SITES), "site_id,region,area\na,1.1.1,3\nb,1.2.1,4\n").unwrap();
    fs::write(
        p.join(io::FORCING),
        "site_id,date,precip\na,2020-01-01,1\na,2020-01-02,0\nb,2020-01-01,2\nb,2020-01-02,0\n",
    )
    .unwrap();
    fs::write(
        p.join(io::TARGET),
        "site_id,date,value\na,2020-01-01,1\na,2020-01-02,NA\nb,2020-01-01,NA\nb,2020-01-02,1\n",
    )
    .unwrap();
    fs::write(p.join(file), content).unwrap();
    load_dataset(p).unwrap_err()
}

fn assert_format(e: HarnessError, file: &str, line: u64, needle: &str) {
    match &e {
        HarnessError::Format {
            file: f,
            line: l,
            message,
        } => {
            assert!(f.ends_with(file), "{e}");
            assert_eq!(*l, line, "{e}");
            assert!(message.contains(needle), "{e}");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn loader_errors_name_file_and_line() {
    assert_format(
        broken(io::FORCING, "site_id,date,precip\na,2020-01-01,1\na,2020-01-02,NA\n"),
        io::FORCING,
        3,
        "forcing must be complete",
    );
    assert_format(
        broken(io::SITES, "site_id,region,area\na,1.1.1,3\na,1.2.1,4\n"),
        io::SITES,
        3,
        "duplicate site id",
    );
    assert_format(
        broken(io::SITES, "site_id,region,area\na,1.1.1,x\nb,1.2.1,4\n"),
        io::SITES,
        2,
        "not a number",
    );
    assert_format(
        broken(io::SITES, "site_id,region,area\na,1.1,3\nb,1.2.1,4\n"),
        io::SITES,
        2,
        "level-III",
    );
    assert_format(
        broken(
            io::FORCING,
            "site_id,date,precip\na,2020-01-01,1\na,2020-01-02,0\nb,2020-01-01,2\n",
        ),
        io::FORCING,
        0,
        "time axis",
    );
    assert_format(
        broken(io::TARGET, "site_id,date,value\na,2020-01-01,1\na,2020-01-01,2\n"),
        io::TARGET,
        3,
        "duplicate row",
    );
    assert_format(
        broken(io::TARGET, "site_id,date,value\nz,2020-01-01,1\n"),
        io::TARGET,
        2,
        "unknown site",
    );
    assert_format(broken(io::TARGET, "site,date,value\n"), io::TARGET, 1, "header");
    assert_format(
        broken(io::FORCING, "site_id,date,precip\na,01/02/2020,1\n"),
        io::FORCING,
        2,
        "ISO-8601",
    );
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(e, HarnessError::Io { .. }), "{e}");
    assert!(e.to_string().contains(io::SITES));
}
