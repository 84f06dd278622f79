//! End-to-end contract tests for the command line front end: frozen outputs
//! for the two canonical instances, exit codes, and format round trips.

use cvxflow_cli::{emit_instance, parse_instance, run_cli};
use cvxflow_core::{Arc, CostFn, Network};
use proptest::prelude::*;

const T1: &str = include_str!("fixtures/t1.net");
const T2: &str = include_str!("fixtures/t2.net");
const T1_GOLDEN: &str = include_str!("fixtures/t1.golden.json");
const T2_GOLDEN: &str = include_str!("fixtures/t2.golden.json");

fn run(args: &[&str], stdin: &str) -> (i32, String, String) {
    let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let mut input = stdin.as_bytes();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(&args, &mut input, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("stdout is utf-8"),
        String::from_utf8(err).expect("stderr is utf-8"),
    )
}

fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn quadratic_triangle_matches_frozen_output() {
    let (code, out, err) = run(&[&fixture_path("t1.net")], "");
    assert_eq!(code, 0, "stderr: {err}");
    assert_eq!(out, T1_GOLDEN);
    assert!(err.is_empty());
}

#[test]
fn linear_triangle_matches_frozen_output() {
    let (code, out, err) = run(&[&fixture_path("t2.net")], "");
    assert_eq!(code, 0, "stderr: {err}");
    assert_eq!(out, T2_GOLDEN);
    assert!(err.is_empty());
}

#[test]
fn stdin_dash_is_equivalent_to_file_input() {
    let (code, out, _) = run(&["-"], T1);
    assert_eq!(code, 0);
    assert_eq!(out, T1_GOLDEN);
    let (code, out, _) = run(&[], T2);
    assert_eq!(code, 0);
    assert_eq!(out, T2_GOLDEN);
}

#[test]
fn frozen_outputs_are_valid_json_with_expected_fields() {
    for golden in [T1_GOLDEN, T2_GOLDEN] {
        let value: serde_json::Value = serde_json::from_str(golden).expect("golden parses");
        assert_eq!(value["status"], "ok");
        assert_eq!(value["termination"], "Optimal");
        assert!(value["objective"].is_number());
        assert!(value["kkt_residual"].is_number());
        assert!(value["iterations"].is_number());
        assert_eq!(value["flows"].as_array().expect("flows array").len(), 3);
    }
}

#[test]
fn malformed_file_reports_parse_error_with_line() {
    let (code, out, err) = run(&[&fixture_path("bad.net")], "");
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("parse error"), "stderr: {err}");
    assert!(err.contains("line 6"), "stderr: {err}");
}

#[test]
fn wrong_way_arc_is_infeasible_with_exit_code_2() {
    let text = "p mccnfp 2 1\nn 1 1\nn 2 -1\na 2 1 lin 1\n";
    let (code, out, _) = run(&[], text);
    assert_eq!(code, 2);
    let value: serde_json::Value = serde_json::from_str(&out).expect("output parses");
    assert_eq!(value["status"], "infeasible");
    assert_eq!(value["termination"], "Infeasible");
    assert!(value["objective"].is_null());
    assert!(value["kkt_residual"].is_null());
    assert_eq!(value["flows"].as_array().expect("flows array").len(), 0);
}

#[test]
fn text_format_reports_flow_table() {
    let (code, out, _) = run(&["--format", "text", &fixture_path("t2.net")], "");
    assert_eq!(code, 0);
    assert!(out.starts_with("status: optimal\n"), "output: {out}");
    assert!(out.contains("objective: 8.00000000000\n"));
    assert!(out.contains("iterations: 0\n"));
}

#[test]
fn oracle_check_reports_gap_on_stderr() {
    let (code, out, err) = run(&["--oracle-check", &fixture_path("t1.net")], "");
    assert_eq!(code, 0);
    assert_eq!(out, T1_GOLDEN, "oracle check must not alter the report");
    assert!(err.contains("oracle objective:"), "stderr: {err}");
    let gap_line = err
        .lines()
        .find(|l| l.starts_with("oracle gap:"))
        .expect("gap line present");
    let gap: f64 = gap_line["oracle gap:".len()..].trim().parse().expect("gap is a number");
    assert!(gap.abs() < 1e-2, "oracle gap too large: {gap}");
}

/// Generates an arbitrary connected network: a random spanning tree plus a few
/// extra arcs, integer balanced supplies, and one of the four cost families
/// per arc.
fn network_strategy() -> impl Strategy<Value = Network> {
    let cost = prop_oneof![
        (0.1f64..10.0).prop_map(CostFn::linear),
        ((0.1f64..5.0), (0.0f64..5.0)).prop_map(|(q, c)| CostFn::quadratic(q, c)),
        ((0.1f64..3.0), (1.0f64..4.0)).prop_map(|(k, p)| CostFn::power(k, p)),
        ((0.0f64..2.0), (0.0f64..1.5)).prop_map(|(k, a)| CostFn::exponential(k, a)),
    ];
    (2usize..=8)
        .prop_flat_map(move |m| {
            let tree = proptest::collection::vec((any::<prop::sample::Index>(), any::<bool>()), m - 1);
            let extras = proptest::collection::vec((0..m, 1..m), 0..=4);
            let supplies = proptest::collection::vec(-10i32..=10, m - 1);
            let costs = proptest::collection::vec(cost.clone(), m + 3);
            let root = 0..m;
            (Just(m), tree, extras, supplies, costs, root)
        })
        .prop_map(|(m, tree, extras, supplies, mut costs, root)| {
            let mut arcs = Vec::new();
            for (i, (pick, flip)) in tree.into_iter().enumerate() {
                let child = i + 1;
                let parent = pick.index(child);
                let (tail, head) = if flip { (child, parent) } else { (parent, child) };
                arcs.push(Arc::new(tail, head, costs.pop().expect("cost pool")));
            }
            for (tail, offset) in extras {
                let head = (tail + offset) % m;
                arcs.push(Arc::new(tail, head, costs.pop().expect("cost pool")));
            }
            let mut b: Vec<f64> = supplies.iter().map(|&v| f64::from(v)).collect();
            b.push(-b.iter().sum::<f64>());
            Network::new(m, b, arcs, root).expect("generated network is valid")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Writing an instance out and reading it back yields the same network.
    #[test]
    fn emit_then_parse_is_identity(net in network_strategy()) {
        let text = emit_instance(&net).expect("no custom costs generated");
        let reparsed = parse_instance(&text).expect("emitted text parses");
        prop_assert_eq!(&reparsed, &net);
    }

    /// The solver front end always produces valid JSON and a known exit code
    /// on well-formed input.
    #[test]
    fn cli_output_is_valid_json_on_generated_instances(net in network_strategy()) {
        let text = emit_instance(&net).expect("no custom costs generated");
        let (code, out, _) = run(&[], &text);
        prop_assert!(code == 0 || code == 2 || code == 3, "unexpected exit code {code}");
        let value: serde_json::Value = serde_json::from_str(&out).expect("output parses");
        let status = value["status"].as_str().expect("status string");
        prop_assert!(matches!(status, "ok" | "infeasible" | "iteration_limit"));
    }

    /// Arbitrary junk input never panics the parser and either parses or
    /// reports a line-tagged error.
    #[test]
    fn parser_never_panics_on_junk(text in "[ -~\n]{0,200}") {
        match parse_instance(&text) {
            Ok(_) => {}
            Err(e) => {
                prop_assert!(e.to_string().starts_with("line "));
            }
        }
    }
}
