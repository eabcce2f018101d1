use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bvent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvent")).args(args).output().expect("binary runs")
}

fn bvent_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvent"))
        .args(args)
        .env("BVENT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_rows_and_flags() {
    let o = bvent(&["bounds", "--eps", "0.1", "--eps", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# bvent-v1");
    assert!(lines[1].starts_with("eps,status,N,eps_prime"));
    assert!(lines[2].starts_with("0.1,ok,21,0.025,"));
    assert!(lines[2].contains(",650.0,"));
    assert!(lines[3].starts_with("0.2,eps_out_of_range"));
}

#[test]
fn bounds_empty_list_is_header_only() {
    let o = bvent(&["bounds"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn bounds_json_format() {
    let o = bvent(&["bounds", "--eps", "0.1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "bvent-v1");
    assert_eq!(v["rows"][0]["N"], 21);
    assert_eq!(v["rows"][0]["gamma_bits"], 650.0);
}

#[test]
fn bad_flags_exit_with_parse_code() {
    assert_eq!(bvent(&["bounds", "--eps", "abc"]).status.code(), Some(2));
    assert_eq!(bvent(&["bounds", "--n", "0"]).status.code(), Some(2));
    assert_eq!(bvent(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn encode_decode_zero_function() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("zero.json");
    let stream = dir.path().join("zero.bve");
    let back = dir.path().join("back.json");
    fs::write(&grid, r#"{"n":2,"L":1.0,"N":1,"values":[0.0]}"#).unwrap();
    let o = bvent(&["encode", "--n", "2", "--eps", "0.1", "--input", path_str(&grid), "--output", path_str(&stream)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("bit_length=") && text.contains("certified_eps=0.1") && text.contains("OK"));
    assert_eq!(&fs::read(&stream).unwrap()[..4], b"BVE1");

    let o = bvent(&["decode", "--input", path_str(&stream), "--output", path_str(&back)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&back).unwrap()).unwrap();
    assert_eq!(v["n"], 2);
    assert!(v["values"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
}

#[test]
fn encode_decode_random_member_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("u.json");
    let stream = dir.path().join("u.bve");
    fs::write(&grid, r#"{"n":1,"L":1.0,"N":4,"values":[0.0,0.5,0.5,0.25]}"#).unwrap();
    let o = bvent(&["encode", "--eps", "0.05", "--input", path_str(&grid), "--output", path_str(&stream)]);
    assert_eq!(o.status.code(), Some(0));
    let o = bvent(&["decode", "--input", path_str(&stream)]);
    assert_eq!(o.status.code(), Some(0));
    let json_line = stdout(&o).lines().find(|l| l.starts_with('{')).unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&json_line).unwrap();
    assert_eq!(v["N"], 41);
}

#[test]
fn encode_decode_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let big = dir.path().join("big.json");
    let junk = dir.path().join("junk.json");
    let stream = dir.path().join("s.bve");
    fs::write(&good, r#"{"n":1,"L":1.0,"N":2,"values":[0.0,0.5]}"#).unwrap();
    fs::write(&big, r#"{"n":1,"L":1.0,"N":2,"values":[0.0,2.0]}"#).unwrap();
    fs::write(&junk, "not json").unwrap();
    let enc = |input: &Path, eps: &str| {
        bvent(&["encode", "--eps", eps, "--input", path_str(input), "--output", path_str(&stream)]).status.code()
    };
    assert_eq!(enc(&junk, "0.1"), Some(2));
    assert_eq!(enc(&big, "0.1"), Some(3));
    assert_eq!(enc(&good, "0.2"), Some(4));
    assert_eq!(enc(&good, "0.1"), Some(0));

    let mut bytes = fs::read(&stream).unwrap();
    bytes[0] = b'X';
    let tampered = dir.path().join("bad.bve");
    fs::write(&tampered, &bytes).unwrap();
    let o = bvent(&["decode", "--input", path_str(&tampered)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn verify_default_configs_pass() {
    assert_eq!(bvent(&["verify"]).status.code(), Some(0));
    assert_eq!(bvent(&["verify", "--n", "2", "--samples", "8"]).status.code(), Some(0));
}

#[test]
fn verify_catches_injected_fault() {
    // constant probes at +-M overshoot by one quantization level without the clamp
    let args = ["verify", "--M", "0.5", "--eps", "0.03", "--samples", "4"];
    assert_eq!(bvent(&args).status.code(), Some(0));
    let mut faulty = args.to_vec();
    faulty.extend(["--inject-fault", "skip-clamp"]);
    let o = bvent(&faulty);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("decoded_sup,6,2,"));
}

#[test]
fn verify_out_of_range_eps() {
    assert_eq!(bvent(&["verify", "--eps", "0.2"]).status.code(), Some(4));
}

#[test]
fn packing_rows() {
    let o = bvent(&["packing", "--eps", "0.01", "--eps", "0.05", "--eps", "0.3", "--cap-exact", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    let cols: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(&cols[..7], &["0.01", "ok", "12", "0.08333333333333333", "12", "2", "79"]);
    assert_eq!(cols[10], "true");
    assert_eq!(cols[11], "skipped");
    let cols: Vec<&str> = lines[3].split(',').collect();
    assert_eq!((cols[4], cols[11], cols[12]), ("2", "4", "4"));
    assert!(lines[4].starts_with("0.3,eps_out_of_range"));
}

#[test]
fn scaling_fits_slope() {
    let o = bvent(&["scaling"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let slope: f64 = text.lines().find_map(|l| l.strip_prefix("# slope: ")).unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() <= 0.3);
    assert!(text.lines().skip(2).take(4).all(|l| l.ends_with(",match")));
    assert_eq!(bvent(&["scaling", "--n", "2"]).status.code(), Some(0));
    assert_eq!(bvent(&["scaling", "--eps", "0.1", "--eps", "0.05"]).status.code(), Some(4));
}

#[test]
fn output_independent_of_thread_count() {
    let args = ["verify", "--eps", "0.1", "--eps", "0.05", "--samples", "6", "--seed", "9"];
    let one = bvent_env(&args, "1");
    let many = bvent_env(&args, "4");
    assert_eq!(one.stdout, many.stdout);
    let b1 = bvent_env(&["bounds", "--eps", "0.1", "--eps", "0.02", "--eps", "0.05"], "1");
    let b4 = bvent_env(&["bounds", "--eps", "0.1", "--eps", "0.02", "--eps", "0.05"], "3");
    assert_eq!(b1.stdout, b4.stdout);
}

#[test]
fn output_file_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.csv");
    let o = bvent(&["bounds", "--eps", "0.1", "--output", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(&out).unwrap().starts_with("# bvent-v1\n"));
}
