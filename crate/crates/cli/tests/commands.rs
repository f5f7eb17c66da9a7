use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use etpl_cli::config::RunConfig;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

fn etpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etpl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_cmd(cmd: &str, config: &Path, out: &Path) -> Output {
    etpl(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn exit_code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(GOLDEN).join(name)).unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

/// Column `col` of a CSV file with header, parsed as floats.
fn column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn steady_value(path: &Path, key: &str) -> f64 {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(|v| v.parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing"))
}

const SMALL: &str = "\
scenario.kind = hybrid
scenario.kerr = 0.25
scenario.kappa2 = 0.5
integrator.t_max = 0.5
integrator.n_outputs = 11
fock_dim = 12
";

#[test]
fn evolve_writes_golden_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", SMALL);
    let out = dir.path().join("out");
    let o = run_cmd("evolve", &cfg, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));

    let ts = out.join("timeseries.csv");
    assert_eq!(format!("{}\n", first_line(&ts)), golden("timeseries_header.csv"));
    let text = fs::read_to_string(&ts).unwrap();
    assert_eq!(text.lines().count(), 12);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9);
        for f in fields {
            let mantissa = f.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "17 significant digits expected in {f}");
        }
    }

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let echoed = RunConfig::parse_manifest(&manifest).unwrap();
    let mut original = RunConfig::parse(SMALL).unwrap();
    original.output_dir = out.clone();
    assert_eq!(echoed, original);
    assert!(manifest.contains("result.max_trace_drift = "));
    assert!(manifest.contains("result.truncation_converged = "));
    assert!(manifest.contains("result.tool_version = "));
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn fock_dim_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", SMALL);
    let out = dir.path().join("out");
    let o = etpl(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--fock-dim",
        "14",
        "--seedless",
    ]);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let echoed = RunConfig::parse_manifest(&fs::read_to_string(out.join("manifest.txt")).unwrap()).unwrap();
    assert_eq!(echoed.fock_dim, 14);
}

#[test]
fn config_errors_exit_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("evolve", format!("{SMALL}integrator.t_max = 0\n"), "duplicate"),
        ("evolve", SMALL.replace("integrator.t_max = 0.5", "integrator.t_max = 0"), "integrator.t_max"),
        ("evolve", format!("{SMALL}scenario.detuning = 1\n"), "scenario.detuning"),
        ("evolve", format!("{SMALL}scenario.kerr2 = 1\n"), "line 7"),
        ("wigner", format!("{SMALL}output.wigner_times = 0.2, 0.7\n"), "output.wigner_times"),
        ("wigner", SMALL.to_string(), "output.wigner_times"),
        ("sweep", format!("{SMALL}sweep.axis = kappa2\nsweep.values =\n"), "sweep.values"),
        ("sweep", SMALL.to_string(), "sweep.axis"),
        (
            "steady",
            "scenario.kind = hybrid\nscenario.kerr = 0\nscenario.kappa2 = 0\nfock_dim = 12\n".to_string(),
            "undefined",
        ),
    ];
    for (i, (cmd, text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.cfg"), text);
        let o = run_cmd(cmd, &cfg, &out);
        assert_eq!(exit_code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(exit_code(&run_cmd("evolve", &missing, dir.path())), 4);

    let cfg = write_config(dir.path(), "run.cfg", SMALL);
    let blocker = dir.path().join("a_file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(exit_code(&run_cmd("evolve", &cfg, &blocker.join("out"))), 4);
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}sweep.axis = kappa2\nsweep.values = 0.5, 0, 0.1\nsweep.thresholds = 1, 3\nsweep.workers = 2\n");
    let cfg = write_config(dir.path(), "sweep.cfg", &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_cmd("sweep", &cfg, out);
        assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    }
    let windows = fs::read_to_string(a.join("windows.csv")).unwrap();
    assert_eq!(format!("{}\n", windows.lines().next().unwrap()), golden("windows_header.csv"));
    assert_eq!(windows, fs::read_to_string(b.join("windows.csv")).unwrap());
    let values: Vec<f64> = column(&a.join("windows.csv"), 0);
    assert_eq!(values, [0.5, 0.5, 0.0, 0.0, 0.1, 0.1]);
    for sub in ["kappa2_0.5", "kappa2_0", "kappa2_0.1"] {
        let ta = fs::read(a.join(sub).join("timeseries.csv")).unwrap();
        let tb = fs::read(b.join(sub).join("timeseries.csv")).unwrap();
        assert_eq!(ta, tb, "{sub}");
        assert!(a.join(sub).join("manifest.txt").exists());
    }
}

#[test]
fn sweep_records_failed_values() {
    let dir = tempfile::tempdir().unwrap();
    // Fixed-step RK4 is stable for the first value and not for the second.
    let text = "\
scenario.kind = hybrid
scenario.kerr = 0.25
integrator.t_max = 0.5
integrator.n_outputs = 11
integrator.method = rk4
integrator.max_step = 0.005
fock_dim = 12
sweep.axis = kappa2
sweep.values = 0, 40
";
    let cfg = write_config(dir.path(), "sweep.cfg", text);
    let out = dir.path().join("out");
    let o = run_cmd("sweep", &cfg, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let windows = fs::read_to_string(out.join("windows.csv")).unwrap();
    let rows: Vec<&str> = windows.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(",ok") || rows[0].ends_with(",empty"), "{}", rows[0]);
    assert!(rows[1].contains(",error: "), "{}", rows[1]);
}

fn evolve_peak(kind: &str, extra: &str) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "scenario.kind = {kind}\nscenario.kerr = 0.25\n{extra}integrator.t_max = 4\nintegrator.n_outputs = 201\nfock_dim = 60\n"
    );
    let cfg = write_config(dir.path(), "run.cfg", &text);
    let out = dir.path().join("out");
    let o = run_cmd("evolve", &cfg, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let gq = column(&out.join("timeseries.csv"), 1);
    gq.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn kerr_preset_peaks_between_11_and_13_db() {
    let baseline = evolve_peak("tpd_kerr", "");
    assert!((11.0..=13.0).contains(&baseline), "peak {baseline}");
    // Engineered loss lowers the early peak a little.
    let hybrid = evolve_peak("hybrid", "scenario.kappa2 = 0.5\n");
    assert!(hybrid < baseline && hybrid > 9.0, "hybrid peak {hybrid}");
}

#[test]
fn wigner_snapshots_show_fringes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
scenario.kind = hybrid
scenario.kerr = 0.25
scenario.kappa2 = 0.5
integrator.t_max = 1.5
integrator.n_outputs = 151
fock_dim = 60
output.wigner_times = 0, 1.2
";
    let cfg = write_config(dir.path(), "run.cfg", text);
    let out = dir.path().join("out");
    let o = run_cmd("wigner", &cfg, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    for name in ["wigner_t0.csv", "wigner_t1.2.csv"] {
        assert_eq!(format!("{}\n", first_line(&out.join(name))), golden("wigner_header.csv"));
    }
    assert_eq!(format!("{}\n", first_line(&out.join("pn_t1.2.csv"))), golden("pn_header.csv"));
    let w = column(&out.join("wigner_t1.2.csv"), 2);
    assert_eq!(w.len(), 121 * 121);
    assert!(w.iter().copied().fold(f64::INFINITY, f64::min) < -0.02);
    let vacuum = column(&out.join("wigner_t0.csv"), 2);
    assert!(vacuum.iter().all(|&v| v > -1e-12));
    let pn: f64 = column(&out.join("pn_t1.2.csv"), 1).iter().sum();
    assert!((pn - 1.0).abs() < 1e-9);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("result.snapshot.1.2 = 1.2"), "{manifest}");
}

#[test]
fn coarse_wigner_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}output.wigner_times = 0.2\noutput.grid_points = 5\n");
    let cfg = write_config(dir.path(), "run.cfg", &text);
    let o = run_cmd("wigner", &cfg, &dir.path().join("out"));
    assert_eq!(exit_code(&o), 2);
    assert!(stderr(&o).contains("output.grid_points"), "{}", stderr(&o));
}

#[test]
fn steady_kerr_mixture_and_etpl_phase() {
    let dir = tempfile::tempdir().unwrap();
    let kerr = write_config(
        dir.path(),
        "kerr.cfg",
        "scenario.kind = tpd_kerr\nscenario.kerr = 0.25\nfock_dim = 40\n",
    );
    let out = dir.path().join("kerr");
    let o = run_cmd("steady", &kerr, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let csv = out.join("steady.csv");
    let keys: Vec<String> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(keys.join("\n") + "\n", golden("steady_kerr_quantities.txt"));
    assert!(steady_value(&csv, "fidelity_mixture_kerr") >= 0.99);

    let etpl = write_config(
        dir.path(),
        "etpl.cfg",
        "scenario.kind = tpd_etpl\nscenario.kappa2 = 0.5\nscenario.kappa = 0\nfock_dim = 30\n",
    );
    let out = dir.path().join("etpl");
    let o = run_cmd("steady", &etpl, &out);
    assert_eq!(exit_code(&o), 0, "{}", stderr(&o));
    let csv = out.join("steady.csv");
    assert!((steady_value(&csv, "alpha_cat_arg") + std::f64::consts::FRAC_PI_4).abs() < 1e-3);
    assert_eq!(steady_value(&csv, "sector"), 1.0);
    assert!(steady_value(&csv, "fidelity_cat") > 0.9999);
    let a2_im = steady_value(&csv, "a2_im");
    assert!((a2_im + 4.0).abs() < 0.04, "<a^2> imaginary part {a2_im}");
}
