//! Result rendering: JSON for machines, a small table for people.
//!
//! All numbers go through [`format_sig12`] so output is deterministic and
//! diffable: 12 significant digits, plain decimal notation, no exponent.

use std::fmt::Write;

use cvxflow_core::{Network, SolveResult, Termination, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

/// 12 significant digits in plain decimal, `0` for zero. The result is a
/// valid JSON number.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    debug_assert!(v.is_finite(), "formatting a non-finite value");
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 30) as usize;
    format!("{v:.decimals$}")
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format_sig12(v)
    } else {
        "null".to_string()
    }
}

fn status_word(t: Termination) -> &'static str {
    match t {
        Termination::Optimal | Termination::HeuristicLambdaOne => "ok",
        Termination::Infeasible => "infeasible",
        Termination::MaxIterations => "iteration_limit",
    }
}

fn trace_json(out: &mut String, trace: &[TraceRecord]) {
    out.push_str(",\n  \"trace\": [");
    for (i, rec) in trace.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let leaving = match rec.leaving {
            Some(a) => a.to_string(),
            None => "null".to_string(),
        };
        let _ = write!(
            out,
            "\n    {{ \"iter\": {}, \"case\": \"{}\", \"entering\": {}, \"leaving\": {}, \
             \"delta\": {}, \"lambda\": {}, \"objective\": {} }}",
            rec.iter,
            rec.kind,
            rec.entering,
            leaving,
            json_number(rec.delta),
            json_number(rec.lambda),
            json_number(rec.objective),
        );
    }
    if trace.is_empty() {
        out.push(']');
    } else {
        out.push_str("\n  ]");
    }
}

fn emit_json(net: &Network, result: &SolveResult) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"status\": \"{}\",", status_word(result.termination));
    let _ = writeln!(out, "  \"objective\": {},", json_number(result.objective));
    let _ = writeln!(out, "  \"kkt_residual\": {},", json_number(result.kkt_residual));
    let _ = writeln!(out, "  \"iterations\": {},", result.iterations);
    let _ = writeln!(out, "  \"termination\": \"{}\",", result.termination);
    out.push_str("  \"flows\": [");
    if result.termination == Termination::Infeasible {
        out.push(']');
    } else {
        for (a, arc) in net.arcs().iter().enumerate() {
            if a > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "\n    {{ \"tail\": {}, \"head\": {}, \"arc_id\": {}, \"flow\": {} }}",
                arc.tail + 1,
                arc.head + 1,
                a,
                json_number(result.flows.flow(a)),
            );
        }
        out.push_str("\n  ]");
    }
    if let Some(trace) = &result.trace {
        trace_json(&mut out, trace);
    }
    out.push_str("\n}");
    out
}

fn emit_text(net: &Network, result: &SolveResult) -> String {
    if result.termination == Termination::Infeasible {
        return "status: infeasible".to_string();
    }
    let mut out = String::new();
    let status = match result.termination {
        Termination::Optimal => "optimal",
        Termination::HeuristicLambdaOne => "heuristic",
        Termination::MaxIterations => "iteration limit",
        Termination::Infeasible => unreachable!(),
    };
    let _ = writeln!(out, "status: {status}");
    let _ = writeln!(out, "objective: {}", format_sig12(result.objective));
    let _ = writeln!(out, "kkt_residual: {}", format_sig12(result.kkt_residual));
    let _ = writeln!(out, "iterations: {}", result.iterations);
    let _ = writeln!(out, "flows:");
    let _ = writeln!(out, "  {:>4}  {:>4}  {:>4}  {:>16}", "arc", "tail", "head", "flow");
    for (a, arc) in net.arcs().iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:>4}  {:>4}  {:>4}  {:>16}",
            a,
            arc.tail + 1,
            arc.head + 1,
            format_sig12(result.flows.flow(a)),
        );
    }
    if let Some(trace) = &result.trace {
        let _ = writeln!(out, "trace:");
        let _ = writeln!(
            out,
            "  {:>4}  {:>8}  {:>8}  {:>7}  {:>16}  {:>16}  {:>16}",
            "iter", "case", "entering", "leaving", "delta", "lambda", "objective"
        );
        for rec in trace {
            let leaving = match rec.leaving {
                Some(a) => a.to_string(),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "  {:>4}  {:>8}  {:>8}  {:>7}  {:>16}  {:>16}  {:>16}",
                rec.iter,
                rec.kind.to_string(),
                rec.entering,
                leaving,
                format_sig12(rec.delta),
                format_sig12(rec.lambda),
                format_sig12(rec.objective),
            );
        }
    }
    out.truncate(out.trim_end().len());
    out
}

/// Renders a solve result. The returned string has no trailing newline.
pub fn emit_result(net: &Network, result: &SolveResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => emit_json(net, result),
        OutputFormat::Text => emit_text(net, result),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_instance;
    use cvxflow_core::{solve, SolverParams};

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(-0.0), "0");
        assert_eq!(format_sig12(32.0 / 3.0), "10.6666666667");
        assert_eq!(format_sig12(4.0 / 3.0), "1.33333333333");
        assert_eq!(format_sig12(8.0), "8.00000000000");
        assert_eq!(format_sig12(-4.0 / 3.0), "-1.33333333333");
        assert_eq!(format_sig12(1.0e-3 / 3.0), "0.000333333333333");
        assert_eq!(format_sig12(123456789.0), "123456789.000");
        assert_eq!(format_sig12(1.5e15), "1500000000000000");
    }

    fn t1_result(trace: bool) -> (cvxflow_core::Network, cvxflow_core::SolveResult) {
        let net = parse_instance(
            "p mccnfp 3 3\nn 1 4\nn 3 -4\na 1 2 quad 1 0\na 2 3 quad 1 0\na 1 3 quad 1 0\n",
        )
        .unwrap();
        let params = SolverParams { record_trace: trace, ..SolverParams::default() };
        let result = solve(&net, &params);
        (net, result)
    }

    #[test]
    fn json_has_the_documented_fields_in_order() {
        let (net, result) = t1_result(false);
        let json = emit_result(&net, &result, OutputFormat::Json);
        let fields: Vec<usize> = [
            "\"status\"",
            "\"objective\"",
            "\"kkt_residual\"",
            "\"iterations\"",
            "\"termination\"",
            "\"flows\"",
        ]
        .iter()
        .map(|f| json.find(f).unwrap_or_else(|| panic!("{f} missing")))
        .collect();
        assert!(fields.windows(2).all(|w| w[0] < w[1]));
        assert!(json.contains("\"status\": \"ok\""));
        assert!(json.contains("\"termination\": \"Optimal\""));
        assert!(json.contains("\"objective\": 10.6666666667"));
        assert!(json.contains("\"arc_id\": 2"));
        assert!(!json.contains("\"trace\""));
    }

    #[test]
    fn json_trace_appears_when_recorded() {
        let (net, result) = t1_result(true);
        let json = emit_result(&net, &result, OutputFormat::Json);
        assert!(json.contains("\"trace\": ["));
        assert!(json.contains("\"case\": \"increase\""));
        assert!(json.contains("\"lambda\": 0.333333333333"));
    }

    #[test]
    fn infeasible_renders_nulls_and_empty_flows() {
        let net = parse_instance("p mccnfp 2 1\nn 1 1\nn 2 -1\na 2 1 lin 1\n").unwrap();
        let result = solve(&net, &SolverParams::default());
        let json = emit_result(&net, &result, OutputFormat::Json);
        assert!(json.contains("\"status\": \"infeasible\""));
        assert!(json.contains("\"objective\": null"));
        assert!(json.contains("\"kkt_residual\": null"));
        assert!(json.contains("\"flows\": []"));
        let text = emit_result(&net, &result, OutputFormat::Text);
        assert_eq!(text, "status: infeasible");
    }

    #[test]
    fn text_table_lists_every_arc() {
        let (net, result) = t1_result(false);
        let text = emit_result(&net, &result, OutputFormat::Text);
        assert!(text.starts_with("status: optimal"));
        assert!(text.contains("objective: 10.6666666667"));
        assert!(text.contains("flows:"));
        for needle in ["1.33333333333", "2.66666666667"] {
            assert!(text.contains(needle), "missing {needle}: {text}");
        }
    }
}
