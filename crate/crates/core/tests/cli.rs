use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_seqmatch");

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn seqmatch(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SEQMATCH_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Report lines without the `#` manifest.
fn body(out: &Output) -> Vec<String> {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn value<'a>(lines: &'a [String], key: &str) -> &'a str {
    lines
        .iter()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
        .unwrap_or_else(|| panic!("no {key} in {lines:?}"))
}

#[test]
fn known_accept_fixture() {
    let src = fixture("sources.txt");
    let seq = fixture("accept_sequences.txt");
    let out = seqmatch(&[
        "match-known", "--sources", &src, "--sequences", &seq, "--k", "2", "--lambda", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = body(&out);
    assert_eq!(value(&lines, "verdict"), "accept");
    assert_eq!(value(&lines, "matching"), "0:0 1:1");
    assert_eq!(value(&lines, "best_weight"), "0");
    let report = stdout(&out);
    assert!(report.starts_with("# subcommand = match-known\n"));
    assert!(report.contains(&format!("# input sources = {src}\n")));
    assert!(report.contains("# config_hash = "));
    assert!(report.contains(&format!("# version = {}\n", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn known_identical_sequences_reject() {
    // Both hypotheses weigh D((½,½)‖(0.9,0.1)) ≈ 0.737 while the threshold
    // is 3 - 4·log2(11)/10 ≈ 1.62.
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("sources.txt"),
        "--sequences",
        &fixture("identical_sequences.txt"),
        "--k",
        "2",
        "--lambda",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    let lines = body(&out);
    assert_eq!(value(&lines, "verdict"), "reject");
    assert_eq!(value(&lines, "best_weight"), value(&lines, "second_weight"));
}

#[test]
fn known_infeasible_exits_3() {
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("point_sources.txt"),
        "--sequences",
        &fixture("zeros.txt"),
        "--k",
        "2",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(value(&body(&out), "verdict"), "infeasible");
}

#[test]
fn unconstrained_collision_exits_4() {
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("sources.txt"),
        "--sequences",
        &fixture("identical_sequences.txt"),
        "--k",
        "2",
        "--lambda",
        "0.05",
        "--unconstrained",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let lines = body(&out);
    assert_eq!(value(&lines, "verdict"), "collision");
    assert_eq!(value(&lines, "assignment"), "0 0");
}

#[test]
fn missing_file_exits_1() {
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("does_not_exist.txt"),
        "--sequences",
        &fixture("accept_sequences.txt"),
        "--k",
        "2",
        "--lambda",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does_not_exist.txt"));
}

#[test]
fn malformed_files_report_line_numbers() {
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("ragged_sources.txt"),
        "--sequences",
        &fixture("accept_sequences.txt"),
        "--k",
        "2",
        "--lambda",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ragged_sources.txt:2:"));

    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("sources.txt"),
        "--sequences",
        &fixture("bad_symbol.txt"),
        "--k",
        "1",
        "--lambda",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad_symbol.txt:1:"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(seqmatch(&[]).status.code(), Some(1));
    assert_eq!(seqmatch(&["match-known", "--k", "2"]).status.code(), Some(1));
    assert_eq!(seqmatch(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_accept_fixture() {
    let out = seqmatch(&[
        "match-unknown",
        "--train",
        &fixture("train.txt"),
        "--sequences",
        &fixture("unknown_sequences.txt"),
        "--k",
        "2",
        "--lambda",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(value(&body(&out), "matching"), "0:1 1:0");
}

#[test]
fn unknown_identical_strings_reject() {
    let zeros = fixture("zeros.txt");
    let out = seqmatch(&[
        "match-unknown", "--train", &zeros, "--sequences", &zeros, "--k", "2", "--lambda", "10",
        "--alphabet-size", "2",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    let lines = body(&out);
    assert_eq!(value(&lines, "best_weight"), "0");
    assert_eq!(value(&lines, "second_weight"), "0");
}

#[test]
fn unknown_unequal_lengths_need_the_flag() {
    let train = fixture("train.txt");
    let short = fixture("zeros.txt");
    let args = ["match-unknown", "--train", &train, "--sequences", &short, "--k", "2", "--lambda", "0.05"];
    assert_eq!(seqmatch(&args).status.code(), Some(1));
    let mut with_flag = args.to_vec();
    with_flag.push("--unequal-lengths");
    let out = seqmatch(&with_flag);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bernoulli_exponents_golden() {
    let out = seqmatch(&["exponents", "--bernoulli-rho-grid", "0.05:0.95:0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_str!("golden/exponents_bernoulli.csv")
        .replace("{version}", env!("CARGO_PKG_VERSION"));
    assert_eq!(stdout(&out), golden);
}

#[test]
fn exponents_single_point_and_identical_sources() {
    let out = seqmatch(&["exponents", "--bernoulli-rho-grid", "0.5:0.5:1"]);
    assert_eq!(body(&out), ["parameter,c_star,c_uc_star,rej_exp_constrained,rej_exp_unconstrained", "0.5,0,0,0,0"]);

    let out = seqmatch(&[
        "exponents",
        "--sources",
        &fixture("identical_sources.txt"),
        "--lambda-grid",
        "0.1:0.3:0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = body(&out);
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert!(row.ends_with(",0,0,0,0"), "{row}");
    }
}

#[test]
fn exponent_guards_exit_1() {
    assert_eq!(seqmatch(&["exponents", "--bernoulli-rho-grid", "0.9:0.1:0.1"]).status.code(), Some(1));
    assert_eq!(seqmatch(&["exponents"]).status.code(), Some(1));
}

#[test]
fn simulate_from_plan_golden() {
    let plan = fixture("plan.txt");
    let out = seqmatch(&["simulate", "--plan", &plan]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = include_str!("golden/simulate_plan.csv");
    assert_eq!(body(&out).join("\n") + "\n", golden);
    assert!(stdout(&out).contains("# seed = 20240601\n"));
}

#[test]
fn simulate_inline_flags_override_plan_and_env_supplies_seed() {
    let plan = fixture("plan.txt");
    let a = seqmatch(&["simulate", "--plan", &plan, "--test", "constrained", "--trials", "50"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(body(&a).iter().skip(1).all(|l| l.contains(",constrained,")));
    assert_eq!(body(&a).len(), 4);

    let inline = [
        "simulate", "--mode", "unknown", "--rho", "0.2", "--lambda", "0.05", "--n-grid", "16",
        "--trials", "40",
    ];
    let with_env = Command::new(BIN).args(inline).env("SEQMATCH_SEED", "99").output().unwrap();
    assert!(String::from_utf8_lossy(&with_env.stdout).contains("# seed = 99\n"));
    let mut explicit = inline.to_vec();
    explicit.extend(["--seed", "99"]);
    assert_eq!(body(&with_env), body(&seqmatch(&explicit)));
}

#[test]
fn simulate_validation_exits_1() {
    let out = seqmatch(&[
        "simulate", "--mode", "known", "--rho", "0.1", "--lambda", "0.05", "--n-grid", "20,10",
        "--trials", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = seqmatch(&["simulate", "--mode", "known", "--rho", "0.1", "--n-grid", "20", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = seqmatch(&[
        "match-known",
        "--sources",
        &fixture("sources.txt"),
        "--sequences",
        &fixture("accept_sequences.txt"),
        "--k",
        "1",
        "--lambda",
        "0.05",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(path).unwrap();
    assert!(written.contains("verdict = accept\n"));
}
