#![allow(clippy::needless_range_loop)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use zigzag::codec::{Codec, CodecOptions};
use zigzag::shard::{bytes_to_symbols, Shard};

fn zgz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zgz"))
        .args(args)
        .output()
        .expect("run zgz")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = zgz(&all);
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8_lossy(&out.stdout);
    let v = serde_json::from_str(&text).unwrap_or(Value::Null);
    (code, v)
}

fn shard(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("shard_{node:03}.zgz"))
}

fn payload(dir: &Path, node: usize) -> Vec<u8> {
    Shard::from_bytes(&fs::read(shard(dir, node)).unwrap())
        .unwrap()
        .payload
}

fn sample(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 37 + 11) as u8).collect()
}

/// Encodes `data` with `codec_args` into a fresh directory.
fn encoded(data: &[u8], codec_args: &[&str]) -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in.bin");
    fs::write(&input, data).unwrap();
    let out = tmp.path().join("shards");
    let mut args = vec![
        "encode",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(codec_args);
    let o = zgz(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (tmp, out)
}

#[test]
fn empty_input_gives_header_only_shards() {
    let (_tmp, dir) = encoded(&[], &[]);
    for node in 0..5 {
        let s = Shard::from_bytes(&fs::read(shard(&dir, node)).unwrap()).unwrap();
        assert_eq!(s.header.stripes, 0);
        assert!(s.payload.is_empty());
    }
    fs::remove_file(shard(&dir, 1)).unwrap();
    let (code, v) = json(&["rebuild", "--dir", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["ratio"], Value::Null);
    assert!(shard(&dir, 1).exists());
}

#[test]
fn one_stripe_parity_zero_is_row_sums() {
    // Two bytes pack into 12 ternary symbols: one 4 x 3 stripe.
    let data = [200u8, 77];
    let (_tmp, dir) = encoded(&data, &["--r", "2", "--m", "2"]);
    let symbols = bytes_to_symbols(&data, 3);
    let cols: Vec<Vec<u8>> = symbols.chunks(4).map(<[u8]>::to_vec).collect();
    for node in 0..3 {
        assert_eq!(payload(&dir, node), cols[node]);
    }
    let sums: Vec<u8> = (0..4)
        .map(|i| ((cols[0][i] + cols[1][i] + cols[2][i]) % 3) as u8)
        .collect();
    assert_eq!(payload(&dir, 3), sums);
}

#[test]
fn any_node_shards_follow_the_code() {
    let data = sample(40);
    let (_tmp, dir) = encoded(&data, &["--construction", "2", "--r", "2", "--m", "3"]);
    let codec = Codec::build(&CodecOptions::new(2, 2, 3)).unwrap();
    let mut symbols = bytes_to_symbols(&data, 3);
    let stripes = symbols.len().div_ceil(16);
    symbols.resize(stripes * 16, 0);
    let payloads: Vec<Vec<u8>> = (0..4).map(|n| payload(&dir, n)).collect();
    for (s, chunk) in symbols.chunks(16).enumerate() {
        let info: Vec<Vec<u8>> = chunk.chunks(8).map(<[u8]>::to_vec).collect();
        let cw = codec.array().encode(&info).unwrap();
        for node in 0..4 {
            assert_eq!(&payloads[node][s * 8..(s + 1) * 8], cw.column(node));
        }
    }
}

#[test]
fn rebuild_two_systematic_reports_two_thirds() {
    let data = sample(300);
    let (_tmp, dir) = encoded(&data, &["--r", "3", "--m", "2"]);
    let before: Vec<Vec<u8>> = (0..2).map(|n| fs::read(shard(&dir, n)).unwrap()).collect();
    for n in 0..2 {
        fs::remove_file(shard(&dir, n)).unwrap();
    }
    let (code, v) = json(&["rebuild", "--dir", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["ratio"], "2/3");
    assert_eq!(v["lower_bound"], "2/3");
    assert_eq!(v["path"], "optimal");
    for n in 0..2 {
        assert_eq!(fs::read(shard(&dir, n)).unwrap(), before[n]);
    }
}

#[test]
fn rebuild_any_node_parity_reports_half() {
    let data = sample(100);
    let (_tmp, dir) = encoded(&data, &["--construction", "2", "--r", "2", "--m", "3"]);
    let before = fs::read(shard(&dir, 2)).unwrap();
    fs::remove_file(shard(&dir, 2)).unwrap();
    let (code, v) = json(&["rebuild", "--dir", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["ratio"], "1/2");
    assert_eq!(fs::read(shard(&dir, 2)).unwrap(), before);
}

#[test]
fn too_many_missing_is_a_parameter_error() {
    let (_tmp, dir) = encoded(&sample(50), &[]);
    for n in 0..3 {
        fs::remove_file(shard(&dir, n)).unwrap();
    }
    let o = zgz(&["rebuild", "--dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn corrupt_header_is_an_io_error() {
    let (_tmp, dir) = encoded(&sample(50), &[]);
    let mut bytes = fs::read(shard(&dir, 0)).unwrap();
    bytes[0] = b'X';
    fs::write(shard(&dir, 0), bytes).unwrap();
    let o = zgz(&["rebuild", "--dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn round_trip_every_regression_codec() {
    let data = sample(700);
    let cases: &[(&[&str], &[&[usize]])] = &[
        (&["--r", "2", "--m", "2"], &[&[0], &[4], &[1, 2], &[0, 3]]),
        (
            &["--r", "3", "--m", "2"],
            &[&[1], &[0, 2], &[0, 1, 2], &[3, 5]],
        ),
        (&["--r", "2", "--m", "3"], &[&[2], &[1, 3]]),
        (
            &["--r", "3", "--vectors", "0,0;1,0;0,1;1,1"],
            &[&[0], &[1, 2], &[0, 1, 3]],
        ),
        (
            &["--construction", "2", "--r", "2", "--m", "3"],
            &[&[0], &[3], &[0, 1]],
        ),
        (
            &["--construction", "2", "--r", "3", "--m", "3"],
            &[&[1], &[2, 4], &[0, 1, 2]],
        ),
        (
            &["--r", "4", "--m", "1", "--vectors", "1;3"],
            &[&[0], &[0, 1]],
        ),
    ];
    for (args, patterns) in cases {
        let (_tmp, dir) = encoded(&data, args);
        let n = fs::read_dir(&dir).unwrap().count();
        let before: Vec<Vec<u8>> = (0..n).map(|j| fs::read(shard(&dir, j)).unwrap()).collect();
        for pattern in *patterns {
            for &j in *pattern {
                fs::remove_file(shard(&dir, j)).unwrap();
            }
            let o = zgz(&["rebuild", "--dir", dir.to_str().unwrap()]);
            assert!(
                o.status.success(),
                "{args:?} {pattern:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            for j in 0..n {
                assert_eq!(
                    fs::read(shard(&dir, j)).unwrap(),
                    before[j],
                    "{args:?} {pattern:?} node {j}"
                );
            }
        }
        let out = dir.with_file_name("out.bin");
        fs::remove_file(shard(&dir, 0)).unwrap();
        assert!(zgz(&[
            "decode",
            "--dir",
            dir.to_str().unwrap(),
            "--output",
            out.to_str().unwrap()
        ])
        .status
        .success());
        assert_eq!(fs::read(&out).unwrap(), data);
    }
}

#[test]
fn scrub_fixes_erasure_plus_cell() {
    let data = sample(200);
    let (tmp, dir) = encoded(&data, &["--r", "2", "--m", "2"]);
    let d = dir.to_str().unwrap();
    let o = zgz(&["corrupt", "--dir", d, "--cell", "1:0:2=2", "--delete", "0"]);
    assert!(o.status.success());
    let (code, v) = json(&["scrub", "--dir", d]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "corrected");
    let diag = &v["diagnoses"][0];
    assert_eq!(diag["kind"], "element_error");
    assert_eq!(diag["stripe"], 2);
    assert_eq!(diag["col"], 1);
    assert_eq!(diag["row"], 0);
    assert_eq!(diag["magnitude"], 2);
    let (code, _) = json(&["scrub", "--dir", d]);
    assert_eq!(code, 0);
    let out = tmp.path().join("o.bin");
    zgz(&["decode", "--dir", d, "--output", out.to_str().unwrap()]);
    assert_eq!(fs::read(out).unwrap(), data);
}

#[test]
fn scrub_fixes_whole_column() {
    for args in [
        &["--r", "3", "--m", "2"][..],
        &["--construction", "2", "--r", "2", "--m", "3"][..],
    ] {
        let (_tmp, dir) = encoded(&sample(150), args);
        let d = dir.to_str().unwrap();
        let before: Vec<Vec<u8>> = (0..4).map(|j| fs::read(shard(&dir, j)).unwrap()).collect();
        assert!(
            zgz(&["corrupt", "--dir", d, "--column", "1", "--seed", "3"])
                .status
                .success()
        );
        assert_ne!(fs::read(shard(&dir, 1)).unwrap(), before[1]);
        let (code, v) = json(&["scrub", "--dir", d]);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(v["diagnoses"][0]["kind"], "node_error");
        assert_eq!(v["diagnoses"][0]["col"], 1);
        for j in 0..4 {
            assert_eq!(fs::read(shard(&dir, j)).unwrap(), before[j]);
        }
    }
}

#[test]
fn scrub_reports_two_columns_uncorrectable() {
    let (_tmp, dir) = encoded(&sample(150), &["--r", "3", "--m", "2"]);
    let d = dir.to_str().unwrap();
    assert!(
        zgz(&["corrupt", "--dir", d, "--column", "0", "--column", "2"])
            .status
            .success()
    );
    let snapshot: Vec<Vec<u8>> = (0..6).map(|j| fs::read(shard(&dir, j)).unwrap()).collect();
    let (code, v) = json(&["scrub", "--dir", d]);
    assert_eq!(code, 3);
    assert_eq!(v["status"], "uncorrectable");
    for j in 0..6 {
        assert_eq!(fs::read(shard(&dir, j)).unwrap(), snapshot[j]);
    }
}

#[test]
fn verify_and_bounds() {
    let (code, v) = json(&["verify", "--r", "3", "--m", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["mds"], true);
    assert_eq!(v["patterns_checked"], 20);
    assert_eq!(v["update_count"]["min"], 3);
    let (code, v) = json(&["verify", "--construction", "2", "--r", "2", "--m", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["patterns_checked"], 6);
    assert_eq!(v["update_count"]["max"], 3);
    let (code, v) = json(&["verify", "--r", "2", "--m", "2", "--field", "2"]);
    assert_eq!(code, 3);
    assert_eq!(v["mds"], false);
    let (code, v) = json(&["bounds", "--e", "1", "--r", "3", "--k", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["ratio_lower_bound"], "1/3");
    assert_eq!(v["normalized_bandwidth_lower_bound"], "1/3");
    let (_, v) = json(&[
        "bounds",
        "--e",
        "1",
        "--r",
        "2",
        "--k",
        "4",
        "--helpers",
        "2",
    ]);
    assert_eq!(v["ratio_upper_bound_partial"], "3/5");
    assert_eq!(
        zgz(&["bounds", "--e", "4", "--r", "3"]).status.code(),
        Some(4)
    );
}

#[test]
fn ratio_sweeps() {
    let (code, v) = json(&["ratio-sweep", "--r", "3", "--m", "2", "--e", "2"]);
    assert_eq!(code, 0);
    let pats = v["patterns"].as_array().unwrap();
    assert_eq!(pats.len(), 3);
    assert!(pats.iter().all(|p| p["ratio"] == "2/3"));
    assert_eq!(v["average"], "2/3");
    let t4 = ["ratio-sweep", "--r", "3", "--vectors", "0,0;1,0;0,1;1,1"];
    let (_, v) = json(&[&t4[..], &["--e", "1"]].concat());
    assert!(v["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["ratio"].as_str().unwrap() != "1/3"));
    let (_, v) = json(&[&t4[..], &["--e", "2"]].concat());
    assert!(v["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["ratio"] == "2/3"));
    let (_, v) = json(&[
        "ratio-sweep",
        "--construction",
        "2",
        "--r",
        "3",
        "--m",
        "3",
        "--e",
        "1",
    ]);
    assert_eq!(v["patterns"].as_array().unwrap().len(), 5);
    assert_eq!(v["max"], "1/3");
}
