use std::path::PathBuf;
use std::process::{Command, Output};

fn weyl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weyl")).args(args).output().expect("spawn weyl")
}

fn spec(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn q_csv_has_split_columns_and_17_digits() {
    let o = weyl(&["q", "--zoo", "diag41", "--r-min", "1", "--r-max", "100", "--per-decade", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "r,theta,q_re,q_im,error_radius,t_used");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let mantissa = row[3].split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{}", row[3]);
        assert!((row[3].parse::<f64>().unwrap() - 2.0).abs() < 1e-8);
    }
    assert!(stderr(&o).contains("CHECK q.certificate PASS margin="));
}

#[test]
fn out_flag_writes_file_and_summary_to_stdout() {
    let path = std::env::temp_dir().join(format!("weyl_cli_{}.csv", std::process::id()));
    let o = weyl(&["envelopes", "--zoo", "identity", "--r-max", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(csv.starts_with("r,t_ring,t_hat,A,L\n"), "{csv}");
    assert!(stdout(&o).starts_with("CHECK envelopes.l_below_a PASS"));
}

#[test]
fn theorem1_header_follows_record_fields() {
    let o = weyl(&["theorem1", "--model", &spec("powerlog.toml"), "--r-max", "1e3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.starts_with("r,q_re,q_im,im_q,abs_q,A,L,t_ring,t_hat,"), "{header}");
}

#[test]
fn every_shipped_model_spec_runs() {
    for f in ["powerlog", "hpl", "r3", "diagonal", "table", "prescribed_angle"] {
        let o = weyl(&["theorem1", "--model", &spec(&format!("{f}.toml")), "--r-max", "1e4"]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stderr(&o));
    }
    for f in ["string_uniform", "string_two_atoms"] {
        let o = weyl(&["string", "--spec", &spec(&format!("{f}.toml"))]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stderr(&o));
    }
    for f in ["sl_free", "sl_potential"] {
        let o = weyl(&["sl", "--spec", &spec(&format!("{f}.toml")), "--r-max", "100"]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stderr(&o));
    }
}

#[test]
fn remaining_subcommands_succeed() {
    for cmd in ["band", "prop24", "cor25", "slowvar"] {
        let o = weyl(&[cmd, "--zoo", "powerlog", "--r-min", "10", "--r-max", "1e4"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).lines().any(|l| l.starts_with("CHECK ")), "{cmd}");
    }
    let o = weyl(&["zoo", "hpl", "--r-max", "1e4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = weyl(&["tails", "--zoo", "identity"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn degenerate_powerlog_is_rejected() {
    let o = weyl(&["q", "--model", &spec("powerlog_degenerate.toml")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta1 == beta2"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_key() {
    let path = std::env::temp_dir().join(format!("weyl_bad_{}.toml", std::process::id()));
    std::fs::write(&path, "[model]\nkind = \"hpl\"\np = 0.5\nl = 0.5\n[options]\nthetta = 1.0\n").unwrap();
    let o = weyl(&["q", "--model", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("thetta"), "{}", stderr(&o));

    let o = weyl(&["q", "--zoo", "identity", "--theta", "4.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("options.theta"), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_weyl")).args(["q", "--zoo", "identity"]).env("WEYL_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("WEYL_THREADS"));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |n: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_weyl"))
            .args(["q", "--zoo", "hpl", "--r-max", "1e4"])
            .env("WEYL_THREADS", n)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn failing_check_exits_one() {
    // the hpl ratio bands exceed a limit of 1.01
    let o = weyl(&["theorem1", "--zoo", "hpl", "--r-max", "1e4", "--band-limit", "1.01"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains(" FAIL margin="));
}

#[test]
fn verify_all_reports_criteria() {
    let o = weyl(&["verify-all", "--only", "1,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("CRITERION 1 PASS") && err.contains("CRITERION 4 PASS"), "{err}");
    assert!(stdout(&o).starts_with("criterion,name,pass,margin,seconds,detail\n"));
}
