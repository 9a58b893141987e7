//! The command line, driven in-process through `cli::run`.

use gbm_integrals::cli::{run, CSV_HEADER, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn argv(args: &str) -> Vec<String> {
    std::iter::once("gbm-integrals")
        .chain(args.split_whitespace())
        .map(String::from)
        .collect()
}

fn run_to_file(args: &str) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out");
    let code = run(argv(&format!("{args} --output {}", path.display())));
    (code, std::fs::read_to_string(&path).unwrap_or_default())
}

#[test]
fn zero_paths_is_a_validation_error() {
    assert_eq!(
        run(argv("price --strike 1 --t 1 --sigma 1 --n 0")),
        EXIT_USAGE
    );
}

#[test]
fn unknown_flag_and_bad_values_exit_two() {
    assert_eq!(run(argv("cdf --t 1 --a 1 --frobnicate")), EXIT_USAGE);
    assert_eq!(run(argv("cdf --t -1 --a 1 --n 10")), EXIT_USAGE);
    assert_eq!(
        run(argv("cdf --t 1 --a 1 --n 10 --scheme simpson")),
        EXIT_USAGE
    );
    assert_eq!(
        run(argv("verify --suite supermartingale --times 1,0.5 --n 10")),
        EXIT_USAGE
    );
    assert_eq!(run(argv("nonsense")), EXIT_USAGE);
}

#[test]
fn csv_has_schema_and_seventeen_digits() {
    let (code, text) = run_to_file("density --t 1 --a 1 --n 2000 --steps 64 --seed 3");
    assert_eq!(code, EXIT_OK);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 11);
    assert_eq!(row[0], "density_event");
    let mantissa = row[5].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn json_carries_both_routes_and_report() {
    let (code, text) = run_to_file("cdf --t 1 --a 2 --n 4000 --steps 64 --seed 7 --format json");
    assert!(code == EXIT_OK || code == EXIT_FAILED);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let ids: Vec<&str> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["cdf_direct", "cdf_identity"]);
    assert_eq!(v["reports"][0]["identity"], "cdf");
    assert_eq!(v["pass"].as_bool().unwrap(), code == EXIT_OK);
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let args = "cdf --t 1 --a 0.5,1 --n 3000 --steps 64 --seed 5";
    let (_, one) = run_to_file(&format!("{args} --threads 1"));
    let (_, eight) = run_to_file(&format!("{args} --threads 8"));
    assert!(!one.is_empty());
    assert_eq!(one, eight);
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.toml");
    std::fs::write(
        &conf,
        "n = 1500\nsteps = 32\nseed = 9\nscheme = \"left-riemann\"\n",
    )
    .unwrap();
    let (code, from_file) =
        run_to_file(&format!("density --t 1 --a 1 --config {}", conf.display()));
    assert_eq!(code, EXIT_OK);
    let (_, explicit) =
        run_to_file("density --t 1 --a 1 --n 1500 --steps 32 --seed 9 --scheme left-riemann");
    assert_eq!(from_file, explicit);
    let (_, overridden) = run_to_file(&format!(
        "density --t 1 --a 1 --config {} --n 1600",
        conf.display()
    ));
    assert!(overridden.lines().nth(1).unwrap().contains(",1600,"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    assert_eq!(
        run(argv("density --t 1 --a 1 --config /nonexistent/run.toml")),
        EXIT_USAGE
    );
}

#[test]
fn dufresne_suite_passes_and_its_negative_control_fails() {
    let (code, _) = run_to_file("verify --suite dufresne --mu 2 --n 2000 --steps 512 --seed 1");
    assert_eq!(code, EXIT_OK);
    let (code, _) =
        run_to_file("verify --suite dufresne --mu 2 --oracle-mu 4 --n 2000 --steps 512 --seed 1");
    assert_eq!(code, EXIT_FAILED);
}

#[test]
fn yor_suite_passes_at_unit_horizon() {
    let (code, text) = run_to_file("verify --suite yor --u 0 --t 1 --n 20000 --steps 512 --seed 2");
    assert_eq!(code, EXIT_OK, "{text}");
    assert!(text.contains("yor_closed_form,1.0000000000000000e0,0.0000000000000000e0,5.0000000000000000e-1,1,1.0000000000000000e0"));
}

#[test]
fn simulate_and_moment_emit_records() {
    let (code, text) = run_to_file("simulate --t 1 --nu 0,-0.5 --n 500 --steps 32");
    assert_eq!(code, EXIT_OK);
    assert_eq!(text.lines().count(), 4);
    let (code, text) = run_to_file("moment --theta 1,2 --n 1000 --steps 32");
    assert_eq!(code, EXIT_OK);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn environment_seed_is_a_fallback() {
    // only this test touches GBM_SEED
    let (_, explicit) = run_to_file("density --t 1 --a 1 --n 800 --steps 16 --seed 42");
    std::env::set_var("GBM_SEED", "42");
    let (_, from_env) = run_to_file("density --t 1 --a 1 --n 800 --steps 16");
    let (_, overridden) = run_to_file("density --t 1 --a 1 --n 800 --steps 16 --seed 41");
    std::env::remove_var("GBM_SEED");
    assert_eq!(explicit, from_env);
    assert_ne!(explicit, overridden);
}
