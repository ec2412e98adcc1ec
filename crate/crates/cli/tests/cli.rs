use std::fs;
use std::process::{Command, Output};

fn abpasd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abpasd"))
        .args(args)
        .env("ABPASD_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_writes_one_row_per_snr_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cer.csv");
    let o = abpasd(&[
        "simulate",
        "--code",
        "15,11,m=4",
        "--decoder",
        "abp-asd",
        "--snr",
        "2:0.5:6",
        "--n1",
        "5",
        "--ith",
        "3",
        "--cost",
        "inf",
        "--trials",
        "300",
        "--seed",
        "7",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "snr_db,trials,errors,cer,ci_lo,ci_hi,mean_iters,mean_delta"
    );
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("2,"));
    assert!(lines[9].starts_with("6,"));
}

#[test]
fn same_seed_gives_identical_csv() {
    let args = [
        "simulate",
        "--code",
        "15,11,m=4",
        "--decoder",
        "abp-bm",
        "--snr",
        "3,4",
        "--trials",
        "600",
        "--seed",
        "11",
    ];
    let a = abpasd(&args);
    let b = abpasd(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = abpasd(&[&args[..], &["--seed", "12"]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    fs::write(
        &cfg,
        r#"
code = "15,11,m=4"
decoder = "abp-asd"
cost = 1000
snr_db = [3.0, 5.0]
trials = 200
seed = 3

[abp]
n1 = 2
it_h = 3

[channel]
kind = "rayleigh"
doppler_hz = 50.0
codeword_sec = 0.02
csi_known = true
"#,
    )
    .unwrap();
    let o = abpasd(&["simulate", "--config", cfg.to_str().unwrap(), "--snr", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().nth(1).unwrap().starts_with("4,200,"));
}

#[test]
fn bad_config_exits_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "code = \"15,11,m=4\"\ndecoder = \"abp-bm\"\nsnr_db = []\ntrials = 10\n",
    )
    .unwrap();
    let o = abpasd(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SNR"));

    fs::write(
        &cfg,
        "code = \"15,11,m=4\"\ndecoder = \"abp-bm\"\nsnr_db = [1.0]\ntrials = 10\nbogus = 1\n",
    )
    .unwrap();
    let o = abpasd(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = abpasd(&[
        "simulate",
        "--code",
        "15,11,m=4",
        "--decoder",
        "kv",
        "--snr",
        "3",
        "--real-decode",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn histogram_bins_sum_to_all_trials() {
    let o = abpasd(&[
        "histogram",
        "--code",
        "15,11,m=4",
        "--decoder",
        "abp-bm",
        "--snr",
        "2.5",
        "--n1",
        "3",
        "--n2",
        "2",
        "--trials",
        "400",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[7][0], "failure");
    let total: u64 = rows.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 400);
    assert_eq!(rows[1][3], "1");
    assert_eq!(rows[4][3], "1");
}

#[test]
fn decode_noiseless_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rx.txt");
    // all-zero codeword, bit 0 sent as +1
    fs::write(
        &input,
        "# received\n".to_string() + &vec!["1.0"; 60].join(" "),
    )
    .unwrap();
    for decoder in ["hd-bm", "kv", "abp-hd", "abp-bm", "abp-asd"] {
        let o = abpasd(&[
            "decode",
            "--code",
            "15,11,m=4",
            "--decoder",
            decoder,
            "--input",
            input.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{decoder}");
        assert!(
            stdout(&o).starts_with("decoded: 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n"),
            "{decoder}"
        );
    }
}

#[test]
fn decode_failure_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rx.txt");
    // every fifth bit flipped: 12 symbol errors that BM cannot resolve
    let v: Vec<String> = (0..60)
        .map(|i| if i % 5 == 0 { "-1" } else { "1" }.to_string())
        .collect();
    fs::write(&input, v.join(",")).unwrap();
    let o = abpasd(&[
        "decode",
        "--code",
        "15,11,m=4",
        "--decoder",
        "hd-bm",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("decoding failed"));

    fs::write(&input, "1 1 1").unwrap();
    let o = abpasd(&[
        "decode",
        "--code",
        "15,11,m=4",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_single_criterion() {
    let o = abpasd(&[
        "selftest",
        "--quick",
        "--criterion",
        "1",
        "--criterion",
        "11",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("[PASS]  1 formula pins"));
    assert!(out.contains("[PASS] 11 GS completeness"));
}
