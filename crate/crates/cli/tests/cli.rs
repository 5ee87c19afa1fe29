//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lca_core::dictionary::Dictionary;
use lca_core::metrics::CSV_HEADER;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lca-bench")
}

fn golden3() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/golden3.idx")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("the benchmark binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "unexpected exit code; stderr:\n{}",
        stderr_of(out)
    );
}

/// Writes a 3-dimensional unsigned-byte IDX image file.
fn write_idx(path: &Path, images: &[Vec<u8>], rows: u32, cols: u32) {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&rows.to_be_bytes());
    bytes.extend_from_slice(&cols.to_be_bytes());
    for image in images {
        assert_eq!(image.len(), (rows * cols) as usize);
        bytes.extend_from_slice(image);
    }
    fs::write(path, bytes).unwrap();
}

/// Ten deterministic 4x4 images with varied intensity patterns.
fn write_ten_images(path: &Path) {
    let images: Vec<Vec<u8>> = (0..10u16)
        .map(|i| {
            (0..16u16)
                .map(|p| ((i * 37 + p * 23 + (i * p) % 11 * 19) % 256) as u8)
                .collect()
        })
        .collect();
    write_idx(path, &images, 4, 4);
}

fn make_dict(dir: &Path, name: &str, m: usize, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let out_s = out.to_str().unwrap().to_owned();
    let (m_s, n_s, seed_s) = (m.to_string(), n.to_string(), seed.to_string());
    let args = [
        "make-dict", "--mode", "gaussian", "--m", &m_s, "--n", &n_s, "--seed", &seed_s, "--out",
        &out_s,
    ];
    let out_run = run_cli(&args);
    assert_code(&out_run, 0);
    out
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let idx = CSV_HEADER.split(',').position(|c| c == name).unwrap();
    rows.iter().map(|r| r[idx].clone()).collect()
}

#[test]
fn make_dict_output_is_loadable_and_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = make_dict(dir.path(), "a.lcad", 16, 16, 7);
    let second = make_dict(dir.path(), "b.lcad", 16, 16, 7);
    let third = make_dict(dir.path(), "c.lcad", 16, 16, 8);

    let dict = Dictionary::<f64>::load(&first).unwrap();
    assert_eq!((dict.input_dim(), dict.atom_count()), (16, 16));

    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    assert_ne!(fs::read(&first).unwrap(), fs::read(&third).unwrap());
}

#[test]
fn make_dict_dct_mode_is_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dct.lcad");
    let run = run_cli(&[
        "make-dict",
        "--mode",
        "dct",
        "--m",
        "16",
        "--n",
        "32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let dict = Dictionary::<f64>::load(&out).unwrap();
    assert_eq!((dict.input_dim(), dict.atom_count()), (16, 32));
}

#[test]
fn make_dict_rejects_zero_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.lcad");
    let run = run_cli(&[
        "make-dict",
        "--mode",
        "gaussian",
        "--m",
        "16",
        "--n",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 1);
    assert!(stderr_of(&run).contains("error:"));
    assert!(!out.exists());
}

#[test]
fn unknown_model_is_a_usage_error() {
    let run = run_cli(&[
        "run",
        "--model",
        "three-layer-quantum",
        "--dict",
        "d.lcad",
        "--images",
        "i.idx",
        "--out",
        "o.csv",
    ]);
    assert_code(&run, 2);
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let run = run_cli(&["run", "--model", "one-layer-float"]);
    assert_code(&run, 2);
}

#[test]
fn help_exits_zero() {
    let run = run_cli(&["--help"]);
    assert_code(&run, 0);
    assert!(String::from_utf8_lossy(&run.stdout).contains("sweep-lambda"));
}

#[test]
fn zero_steps_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 8, 7);
    let out = dir.path().join("o.csv");
    let run = run_cli(&[
        "run",
        "--model",
        "one-layer-float",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--steps",
        "0",
    ]);
    assert_code(&run, 1);
    assert!(stderr_of(&run).contains("error:"));
}

#[test]
fn missing_dictionary_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_cli(&[
        "run",
        "--model",
        "one-layer-float",
        "--dict",
        dir.path().join("absent.lcad").to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_code(&run, 1);
    assert!(stderr_of(&run).contains("absent.lcad"));
}

#[test]
fn mismatched_dictionary_and_images_fail() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 10, 8, 7);
    let run = run_cli(&[
        "run",
        "--model",
        "one-layer-float",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_code(&run, 1);
}

#[test]
fn run_writes_one_row_per_image_for_every_model() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 24, 7);
    for model in [
        "one-layer-float",
        "one-layer-fixed",
        "two-layer-float",
        "two-layer-fixed",
    ] {
        let out = dir.path().join(format!("{model}.csv"));
        let run = run_cli(&[
            "run",
            "--model",
            model,
            "--dict",
            dict.to_str().unwrap(),
            "--images",
            golden3().to_str().unwrap(),
            "--num-images",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
        assert!(
            stderr_of(&run).contains("not the usual 28x28"),
            "tiny test images should draw a size warning"
        );
        let rows = read_rows(&out);
        assert_eq!(rows.len(), 3, "{model} should emit one row per image");
        assert_eq!(column(&rows, "model"), vec![model; 3]);
        assert_eq!(column(&rows, "image_index"), vec!["0", "1", "2"]);
        let lambda_e = column(&rows, "lambda_e");
        if model.starts_with("one-layer") {
            assert_eq!(lambda_e, vec!["0"; 3], "one-layer rows record lambda_e 0");
        } else {
            assert_eq!(lambda_e, vec!["64"; 3], "default residual exponent is 6");
        }
    }
}

#[test]
fn run_asks_for_more_images_than_the_file_has() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 8, 7);
    let out = dir.path().join("o.csv");
    let run = run_cli(&[
        "run",
        "--model",
        "one-layer-float",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--num-images",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    assert_eq!(read_rows(&out).len(), 3);
}

#[test]
fn sweep_lambda_default_grid_yields_220_rows() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 24, 7);
    let images = dir.path().join("ten.idx");
    write_ten_images(&images);
    let out = dir.path().join("sweep.csv");
    let run = run_cli(&[
        "sweep-lambda",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        images.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);

    let rows = read_rows(&out);
    assert_eq!(rows.len(), 2 * 11 * 10, "2 models x 11 lambdas x 10 images");

    let models = column(&rows, "model");
    assert_eq!(models.iter().filter(|m| *m == "one-layer-float").count(), 110);
    assert_eq!(models.iter().filter(|m| *m == "one-layer-fixed").count(), 110);

    // Rows are sorted, so lambdas within a model ascend from 2^-6 to 2^4.
    let lambdas = column(&rows, "lambda");
    assert_eq!(lambdas[0], "0.015625");
    assert_eq!(lambdas[109], "16");
}

#[test]
fn sweep_lambda_mean_active_count_is_monotone_in_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 24, 7);
    let images = dir.path().join("ten.idx");
    write_ten_images(&images);
    let out = dir.path().join("sweep.csv");
    let run = run_cli(&[
        "sweep-lambda",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        images.to_str().unwrap(),
        "--models",
        "one-layer-float",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);

    let rows = read_rows(&out);
    let lambdas: Vec<f64> = column(&rows, "lambda")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let actives: Vec<f64> = column(&rows, "active_count")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();

    let mut grid: Vec<f64> = lambdas.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    assert_eq!(grid.len(), 11);

    let mean_at = |lambda: f64| {
        let picked: Vec<f64> = lambdas
            .iter()
            .zip(&actives)
            .filter(|(l, _)| **l == lambda)
            .map(|(_, a)| *a)
            .collect();
        assert_eq!(picked.len(), 10);
        picked.iter().sum::<f64>() / picked.len() as f64
    };
    let means: Vec<f64> = grid.iter().map(|&l| mean_at(l)).collect();
    for pair in means.windows(2) {
        assert!(
            pair[1] <= pair[0],
            "mean active count should not grow with lambda: {means:?}"
        );
    }
}

#[test]
fn sweep_lambda_single_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 8, 7);
    let out = dir.path().join("one.csv");
    let run = run_cli(&[
        "sweep-lambda",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--models",
        "one-layer-float",
        "--min-exp",
        "0",
        "--max-exp",
        "0",
        "--num-images",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let rows = read_rows(&out);
    assert_eq!(rows.len(), 3);
    assert_eq!(column(&rows, "lambda"), vec!["1"; 3]);
}

#[test]
fn sweep_lambda_rejects_inverted_range() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 8, 7);
    let run = run_cli(&[
        "sweep-lambda",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--min-exp",
        "2",
        "--max-exp",
        "-2",
        "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_code(&run, 1);
}

#[test]
fn sweep_lambda_e_defaults_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 24, 7);
    let out = dir.path().join("esweep.csv");
    let run = run_cli(&[
        "sweep-lambda-e",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&run, 0);

    let rows = read_rows(&out);
    assert_eq!(rows.len(), 23 * 3, "23 lambda_e values x 3 images");
    assert_eq!(column(&rows, "model"), vec!["two-layer-float"; 69]);

    let lambda_e: Vec<f64> = column(&rows, "lambda_e")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(lambda_e[0], 2f64.powi(-16));
    assert_eq!(lambda_e[68], 64.0);
}

#[test]
fn sweep_lambda_e_rejects_one_layer_models() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 8, 7);
    let run = run_cli(&[
        "sweep-lambda-e",
        "--dict",
        dict.to_str().unwrap(),
        "--images",
        golden3().to_str().unwrap(),
        "--model",
        "one-layer-fixed",
        "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_code(&run, 1);
    assert!(stderr_of(&run).contains("two-layer"));
}

#[test]
fn no_timing_zeroes_wall_ns_and_makes_reruns_identical() {
    let dir = tempfile::tempdir().unwrap();
    let dict = make_dict(dir.path(), "d.lcad", 16, 24, 7);
    let sweep = |out: &Path, jobs: &str| {
        let run = run_cli(&[
            "sweep-lambda",
            "--dict",
            dict.to_str().unwrap(),
            "--images",
            golden3().to_str().unwrap(),
            "--num-images",
            "3",
            "--no-timing",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
    };

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    sweep(&a, "1");
    sweep(&b, "1");
    sweep(&c, "4");

    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap(), "reruns must match exactly");
    assert_eq!(bytes, fs::read(&c).unwrap(), "thread count must not matter");

    let rows = read_rows(&a);
    assert!(column(&rows, "wall_ns").iter().all(|v| v == "0"));
}
