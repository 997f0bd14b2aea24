use eife_cli::config::parse_config;
use eife_cli::CliError;
use eife_core::{BoundaryKind, Scheme};

const MINIMAL: &str = r#"
[problem]
name = "linear_rd"

[mesh]
n = [16, 8]

[time]
scheme = "eife2"
nt = 1024
"#;

fn config_error(text: &str) -> String {
    match parse_config(text) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.scheme, Scheme::Eife2 { c2: 0.5 });
    assert_eq!(cfg.nt, 1024);
    assert_eq!(cfg.t_end, 1.0);
    assert_eq!(cfg.dt, 1.0 / 1024.0);
    assert_eq!(cfg.observe_every, 10);
    assert_eq!(cfg.bc, BoundaryKind::HomogeneousDirichlet);
    assert!(cfg.series);
    assert_eq!(cfg.report_name, "report.csv");
}

#[test]
fn small_step_counts_observe_every_step() {
    let cfg = parse_config(&MINIMAL.replace("nt = 1024", "nt = 50")).unwrap();
    assert_eq!(cfg.observe_every, 1);
}

#[test]
fn dt_and_nt_must_agree() {
    let ok = MINIMAL.replace("nt = 1024", "nt = 4\ndt = 0.25");
    assert_eq!(parse_config(&ok).unwrap().nt, 4);
    let bad = MINIMAL.replace("nt = 1024", "nt = 4\ndt = 0.2");
    assert!(config_error(&bad).contains("time.dt"));
    let uneven = MINIMAL.replace("nt = 1024", "dt = 0.3");
    assert!(config_error(&uneven).contains("time.dt"));
    let neither = MINIMAL.replace("nt = 1024", "");
    assert!(config_error(&neither).contains("time.nt"));
}

#[test]
fn boundary_kind_must_match_problem() {
    let text = r#"
[problem]
name = "allen_cahn_wave"

[mesh]
n = [8, 4, 4]
bc = "periodic"

[time]
scheme = "eife1"
nt = 8
"#;
    assert!(config_error(text).contains("mesh.bc"));
    assert!(parse_config(&text.replace("periodic", "dirichlet")).is_ok());
}

#[test]
fn unknown_and_misplaced_keys_are_rejected() {
    assert!(config_error(&MINIMAL.replace("nt = 1024", "nt = 1024\nsteps = 3")).contains("steps"));
    assert!(
        config_error(&MINIMAL.replace("name = \"linear_rd\"", "name = \"linear_rd\"\nseed = 4"))
            .contains("problem.seed")
    );
    assert!(config_error(&MINIMAL.replace("linear_rd", "heat")).contains("problem.name"));
    assert!(config_error(&MINIMAL.replace("[16, 8]", "[16]")).contains("mesh.n"));
    let eife1_c2 = MINIMAL.replace("scheme = \"eife2\"", "scheme = \"eife1\"\nc2 = 0.5");
    assert!(config_error(&eife1_c2).contains("time.c2"));
    assert!(config_error(&MINIMAL.replace("nt = 1024", "nt = 1024\nc2 = 0")).contains("time.c2"));
}

#[test]
fn cadence_zero_is_rejected() {
    let text = format!("{MINIMAL}\n[output]\nobserve_every = 0\n");
    assert!(config_error(&text).contains("output.observe_every"));
    let text = format!("{MINIMAL}\n[output]\nobserve_every = 4\nsnapshot_every = 6\n");
    assert!(config_error(&text).contains("output.snapshot_every"));
}

#[test]
fn study_sections() {
    let text = format!("mode = \"convergence\"\n{MINIMAL}");
    assert!(config_error(&text).contains("study"));
    let text = format!("{text}\n[study]\nkind = \"temporal\"\nlevels = 3\nreference = \"exact\"\n");
    let cfg = parse_config(&text).unwrap();
    let study = cfg.study.unwrap();
    assert_eq!(study.levels, 3);
    assert_eq!(study.reference, eife_core::ErrorReference::Exact);
}

#[test]
fn custom_problem_needs_its_definition() {
    let text = r#"
[problem]
name = "custom"
diffusion = 1.0
reaction = "-u"
initial = "sin(pi*x)"
exact = "exp(-(1 + pi^2)*t)*sin(pi*x)"
domain = [[0.0, 1.0]]

[mesh]
n = [32]

[time]
scheme = "eife2"
t_end = 0.5
nt = 20
"#;
    let cfg = parse_config(text).unwrap();
    let p = cfg.problem(None).unwrap();
    assert_eq!(p.t_end, 0.5);
    assert!(config_error(&text.replace("t_end = 0.5\n", "")).contains("time.t_end"));
    assert!(config_error(&text.replace("reaction = \"-u\"\n", "")).contains("problem.reaction"));
}

#[test]
fn every_shipped_example_parses() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert_eq!(count, 8);
}
