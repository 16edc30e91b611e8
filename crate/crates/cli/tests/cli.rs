use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mdpsm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdpsm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MDPSM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn qpsk_sweep_peaks_at_thirty_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.spec", "kind = angle_sweep\nscheme1 = QPSK\nscheme2 = QPSK\noutput = qq\n");
    let o = mdpsm(&["run", &spec], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("theta_opt = [30.0]"));
    let csv = fs::read_to_string(dir.path().join("qq.csv")).unwrap();
    let rows: Vec<Vec<f64>> = body(&csv)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let best = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert_eq!(best[0], 30.0);
    assert_eq!(rows.len(), 451);
    assert!(dir.path().join("qq.manifest.json").exists());
}

#[test]
fn complexity_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "c.spec",
        "kind = complexity_report\nrows = psm:4:4:6, mdpsm:4:4:4:2:2, psm:12:8:6, mdpsm:12:12:8:1:2\n",
    );
    let o = mdpsm(&["run", &spec], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("complexity_report.csv")).unwrap();
    let rows = body(&csv);
    let counts: Vec<&str> = rows.lines().skip(1).map(|l| l.rsplit(',').nth(2).unwrap()).collect();
    assert_eq!(counts, ["704", "264", "1216", "266"]);
}

#[test]
fn missing_field_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "m.spec", "kind = ber_run\nseed = 1\nmode = psm\nn_t = 4\nscheme = QPSK\nsnr_db = 0\n");
    let o = mdpsm(&["run", &spec], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`n_r`"), "{}", stderr(&o));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "b.spec", "# header\nkind = angle_sweep\nscheme1 QPSK\n");
    let o = mdpsm(&["run", &spec], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3:"), "{}", stderr(&o));
}

#[test]
fn stochastic_kinds_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kind = channel_stats\nn_t = 4\nn_r = 2\ndraws = 100\n";
    let spec = write_spec(dir.path(), "n.spec", text);
    let o = mdpsm(&["run", &spec], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`seed`"));
    let o = mdpsm(&["run", &spec, "--seed", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn runtime_failures_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "r.spec",
        "kind = ber_vs_theta\nseed = 1\nmode = mdpsm\nn_t1 = 2\nn_t2 = 2\nn_r = 2\nscheme1 = QPSK\nscheme2 = QPSK\n\
         theta = 30\nthetas = 0, 90\nsnr_db = 10\ntrials = 10000\n",
    );
    let o = mdpsm(&["run", &spec], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("unique"));
}

#[test]
fn reruns_are_byte_identical_and_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kind = ber_run\nseed = 42\noutput = curve\nmode = mdpsm\nn_t1 = 2\nn_t2 = 2\nn_r = 2\n\
                scheme1 = QPSK\nscheme2 = QPSK\ntheta = 30\nsnr_db = 0, 5, 10\nmin_errors = 100\nmax_uses = 50000\n";
    let spec = write_spec(dir.path(), "r.spec", text);
    let a_dir = dir.path().join("a");
    let b_dir = dir.path().join("b");
    assert!(mdpsm(&["run", &spec], &a_dir).status.success());
    assert!(mdpsm(&["run", &spec, "--jobs", "2"], &b_dir).status.success());
    let a = fs::read_to_string(a_dir.join("curve.csv")).unwrap();
    let b = fs::read_to_string(b_dir.join("curve.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("# seed: 42\n"));
    assert!(a.contains("# spec_sha256: "));
    assert!(body(&a).starts_with("snr_db,ber,bit_errors,bits_tested,capped"));
    assert_eq!(fs::read_to_string(&spec).unwrap(), text);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a_dir.join("curve.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["kind"], "ber_run");
    assert!(m["version"].as_str().unwrap().starts_with("mdpsm "));
    assert!(m["finished_unix"].as_f64().unwrap() >= m["started_unix"].as_f64().unwrap());
    let hash = m["spec_sha256"].as_str().unwrap();
    assert!(a.contains(hash));

    let c_dir = dir.path().join("c");
    assert!(mdpsm(&["run", &spec, "--seed", "43"], &c_dir).status.success());
    let c = fs::read_to_string(c_dir.join("curve.csv")).unwrap();
    assert!(c.contains("# seed: 43\n"));
    assert_ne!(body(&a), body(&c));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "e.spec", "kind = complexity_report\nrows = psm:4:4:2\n");
    let target = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_mdpsm"))
        .args(["run", &spec])
        .env("MDPSM_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("complexity_report.csv").exists());
}

#[test]
fn presets_are_listed_and_unknown_ones_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdpsm(&["--list-presets"], dir.path());
    assert!(o.status.success());
    for id in ["fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig4", "fig5", "fig6", "fig7", "table3", "channel"] {
        assert!(stdout(&o).contains(id), "{id}");
    }
    let o = mdpsm(&["reproduce", "fig99"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig2a") && stderr(&o).contains("table3"));
}

#[test]
fn quick_presets_match_headlines() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["table3", "fig2a", "fig2b", "channel"] {
        let o = mdpsm(&["reproduce", id], dir.path());
        assert!(o.status.success(), "{id}: {}", stderr(&o));
        let out = stdout(&o);
        assert!(out.contains("PASS"), "{id}: {out}");
        assert!(!out.contains("FAIL"), "{id}: {out}");
        let report = fs::read_to_string(dir.path().join(format!("{id}_report.txt"))).unwrap();
        assert!(report.contains("spec_sha256"));
    }
    assert!(dir.path().join("table3.spec").exists());
    assert!(dir.path().join("sweep_qpsk_qpsk.csv").exists());
}
