use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nmqsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmqsd")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn transfer_config(out: &Path) -> String {
    format!(
        "experiment = \"transfer\"\noutput = {:?}\n[model]\nn_sites = 5\nshift = -2.6\n\
         [numerics]\nt_max = 2.0\n[ensemble]\nn_trajectories = 40\nmaster_seed = 3\ninitial_site = 2\n\
         record_density = true\ntraces = 2\n",
        out.to_str().unwrap()
    )
}

#[test]
fn transfer_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ca = write_config(dir.path(), "a.toml", &transfer_config(&a));
    let cb = write_config(dir.path(), "b.toml", &transfer_config(&b));
    assert!(nmqsd(&["run", &ca]).status.success());
    assert!(nmqsd(&["run", &cb]).status.success());
    for f in ["populations.csv", "density.csv", "traces.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let pops = fs::read_to_string(a.join("populations.csv")).unwrap();
    assert_eq!(pops.lines().next(), Some("time,site,population,stderr"));
    assert!(pops.lines().nth(2).unwrap().starts_with("0,2,1,"));

    // The manifest is itself a valid configuration that reproduces the run.
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    for key in ["# version:", "# master_seed: 3", "# rng: ChaCha20", "# calibration_factor:", "# wall_time_s:", "# excluded_trajectories: 0"] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
    let c = dir.path().join("c");
    let replay = manifest.replace(a.to_str().unwrap(), c.to_str().unwrap());
    let cc = write_config(dir.path(), "c.toml", &replay);
    assert!(nmqsd(&["run", &cc]).status.success());
    assert_eq!(fs::read(a.join("populations.csv")).unwrap(), fs::read(c.join("populations.csv")).unwrap());
}

#[test]
fn misspelled_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = transfer_config(&dir.path().join("o")).replace("master_seed", "master_sed");
    let path = write_config(dir.path(), "bad.toml", &body);
    for verb in ["run", "validate"] {
        let out = nmqsd(&[verb, &path]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("master_sed"), "{err}");
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_file_and_bad_verb_are_config_errors() {
    assert_eq!(nmqsd(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
    assert_eq!(nmqsd(&["launch"]).status.code(), Some(1));
}

#[test]
fn validate_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "m.toml", "experiment = \"monomer-spectrum\"\noutput = \"x\"\n");
    let out = nmqsd(&["validate", &path]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("damping_time = 50.0"), "{text}");
    assert!(text.contains("calibration factor: 1.14"), "{text}");
}

#[test]
fn seed_info_is_deterministic() {
    let a = nmqsd(&["seed-info", "--seed", "7", "--trajectory", "3"]);
    let b = nmqsd(&["seed-info", "--seed", "7", "--trajectory", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("ChaCha20"));
    assert_ne!(a.stdout, nmqsd(&["seed-info", "--seed", "7", "--trajectory", "4"]).stdout);
}

#[test]
fn blow_ups_beyond_budget_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = transfer_config(&dir.path().join("o")).replace("t_max = 2.0", "t_max = 2.0\nstep = 1.5");
    let path = write_config(dir.path(), "coarse.toml", &body);
    let out = nmqsd(&["run", &path]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn spectrum_sweep_writes_one_file_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let body = format!(
        "experiment = \"aggregate-spectrum\"\noutput = {:?}\n[model]\nn_sites = [1, 3]\nshift = -2.6\n\
         [numerics]\ndamping_time = 10.0\nfreq_points = 161\n",
        out.to_str().unwrap()
    );
    let path = write_config(dir.path(), "s.toml", &body);
    let run = nmqsd(&["run", &path]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let s3 = fs::read_to_string(out.join("spectrum_N3.csv")).unwrap();
    assert_eq!(s3.lines().next(), Some("frequency,intensity"));
    assert_eq!(s3.lines().count(), 162);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("1,ok,"));
    assert!(summary.lines().nth(2).unwrap().starts_with("3,ok,"));
}

#[test]
fn unreachable_shift_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = "experiment = \"aggregate-spectrum\"\noutput = \"x\"\n[model]\nn_sites = [4]\nshift = -2.6\n";
    let path = write_config(dir.path(), "four.toml", body);
    let out = nmqsd(&["validate", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.shift"));
}

#[test]
fn noise_check_passes_on_default_bath() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let body = format!(
        "experiment = \"noise-check\"\noutput = {:?}\n[ensemble]\nmaster_seed = 2\n[noise]\nsamples = 600\nmax_lag = 10.0\n",
        out.to_str().unwrap()
    );
    let path = write_config(dir.path(), "n.toml", &body);
    let run = nmqsd(&["run", &path]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let cov = fs::read_to_string(out.join("covariance.csv")).unwrap();
    assert_eq!(cov.lines().next(), Some("lag,kind,re,im,stderr_re,stderr_im,target_re,target_im,sigmas"));
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("# noise_check: PASS"));
}
