//! Argument handling and the top level run function.

use std::io::{Read, Write};

use cvxflow_core::{cycle_space_bruteforce, solve, SolverParams, Termination};

use crate::instance::parse_instance;
use crate::report::{emit_result, format_sig12, OutputFormat};

pub const USAGE: &str = "\
usage: cvxflow [options] [input.net]

Solves minimum convex-cost network flow instances. Reads the instance from
the given file or standard input and prints the solution to standard output.

options:
  --input <path>    read the instance from <path> ('-' for standard input)
  --format <fmt>    output format: json (default) or text
  --eps-opt <x>     optimality tolerance (default 1e-7)
  --ls-tol <x>      line search interval tolerance (default 1e-10)
  --max-iters <n>   pivot budget (default 10000)
  --trace           include the pivot trace in the output
  --oracle-check    cross-check the objective with a grid search (stderr)
  --help            print this help

exit codes: 0 solved, 1 usage or parse error, 2 infeasible, 3 iteration limit";

struct Options {
    input: Option<String>,
    format: OutputFormat,
    params: SolverParams,
    oracle_check: bool,
    help: bool,
}

fn parse_args(args: &[String]) -> Result<Options, String> {
    let mut opts = Options {
        input: None,
        format: OutputFormat::Json,
        params: SolverParams::default(),
        oracle_check: false,
        help: false,
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut value = |name: &str| {
            it.next().map(String::as_str).ok_or(format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--help" | "-h" => opts.help = true,
            "--trace" => opts.params.record_trace = true,
            "--oracle-check" => opts.oracle_check = true,
            "--input" => {
                let v = value("--input")?;
                if opts.input.is_some() {
                    return Err("input given twice".to_string());
                }
                opts.input = Some(v.to_string());
            }
            "--format" => {
                opts.format = match value("--format")? {
                    "json" => OutputFormat::Json,
                    "text" => OutputFormat::Text,
                    other => return Err(format!("unknown format `{other}`")),
                }
            }
            "--eps-opt" => {
                let v = value("--eps-opt")?;
                opts.params.eps_opt = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x > 0.0)
                    .ok_or(format!("--eps-opt needs a positive number, got `{v}`"))?;
            }
            "--ls-tol" => {
                let v = value("--ls-tol")?;
                opts.params.ls_tol = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x > 0.0)
                    .ok_or(format!("--ls-tol needs a positive number, got `{v}`"))?;
            }
            "--max-iters" => {
                let v = value("--max-iters")?;
                opts.params.max_iters = v
                    .parse::<usize>()
                    .map_err(|_| format!("--max-iters needs a nonnegative integer, got `{v}`"))?;
            }
            other if other.starts_with('-') && other != "-" => {
                return Err(format!("unknown option `{other}`"));
            }
            path => {
                if opts.input.is_some() {
                    return Err("input given twice".to_string());
                }
                opts.input = Some(path.to_string());
            }
        }
    }
    Ok(opts)
}

/// Runs the tool against explicit streams and returns the exit code.
pub fn run_cli(
    args: &[String],
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let opts = match parse_args(args) {
        Ok(opts) => opts,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            let _ = writeln!(stderr, "{USAGE}");
            return 1;
        }
    };
    if opts.help {
        let _ = writeln!(stdout, "{USAGE}");
        return 0;
    }

    let text = match opts.input.as_deref() {
        None | Some("-") => {
            let mut buf = String::new();
            match stdin.read_to_string(&mut buf) {
                Ok(_) => buf,
                Err(e) => {
                    let _ = writeln!(stderr, "error: cannot read standard input: {e}");
                    return 1;
                }
            }
        }
        Some(path) => match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot read {path}: {e}");
                return 1;
            }
        },
    };

    let net = match parse_instance(&text) {
        Ok(net) => net,
        Err(e) => {
            let _ = writeln!(stderr, "parse error: {e}");
            return 1;
        }
    };

    let result = solve(&net, &opts.params);

    if opts.oracle_check && result.termination != Termination::Infeasible {
        match cycle_space_bruteforce(&net, result.flows.flows(), 3) {
            Ok(reference) => {
                let _ = writeln!(stderr, "oracle objective: {}", format_sig12(reference.objective));
                let _ = writeln!(
                    stderr,
                    "oracle gap: {}",
                    format_sig12(result.objective - reference.objective)
                );
            }
            Err(e) => {
                let _ = writeln!(stderr, "oracle check skipped: {e}");
            }
        }
    }

    let _ = writeln!(stdout, "{}", emit_result(&net, &result, opts.format));

    match result.termination {
        Termination::Optimal | Termination::HeuristicLambdaOne => 0,
        Termination::Infeasible => 2,
        Termination::MaxIterations => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str], input: &str) -> (i32, String, String) {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let mut stdin = input.as_bytes();
        let mut stdout = Vec::new();
        let mut stderr = Vec::new();
        let code = run_cli(&args, &mut stdin, &mut stdout, &mut stderr);
        (
            code,
            String::from_utf8(stdout).unwrap(),
            String::from_utf8(stderr).unwrap(),
        )
    }

    const T1: &str =
        "p mccnfp 3 3\nn 1 4\nn 3 -4\na 1 2 quad 1 0\na 2 3 quad 1 0\na 1 3 quad 1 0\n";

    #[test]
    fn solves_from_stdin_by_default() {
        let (code, out, err) = run(&[], T1);
        assert_eq!(code, 0, "stderr: {err}");
        assert!(out.contains("\"objective\": 10.6666666667"));
    }

    #[test]
    fn help_wins_and_exits_clean() {
        let (code, out, _) = run(&["--help"], "");
        assert_eq!(code, 0);
        assert!(out.contains("usage: cvxflow"));
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let (code, _, err) = run(&["--frobnicate"], T1);
        assert_eq!(code, 1);
        assert!(err.contains("unknown option"));
        assert!(err.contains("usage: cvxflow"));
    }

    #[test]
    fn bad_numbers_in_flags_are_usage_errors() {
        for args in [
            &["--eps-opt", "-1"][..],
            &["--eps-opt", "nan"],
            &["--ls-tol", "0"],
            &["--max-iters", "many"],
            &["--format", "xml"],
            &["--input"],
        ] {
            let (code, _, err) = run(args, T1);
            assert_eq!(code, 1, "args {args:?} gave stderr {err}");
        }
    }

    #[test]
    fn parse_errors_exit_one_with_line_info() {
        let (code, _, err) = run(&[], "p mccnfp 2 1\na 1 2 lin\n");
        assert_eq!(code, 1);
        assert!(err.contains("parse error: line 2"));
    }

    #[test]
    fn infeasible_exits_two() {
        let (code, out, _) = run(&[], "p mccnfp 2 1\nn 1 1\nn 2 -1\na 2 1 lin 1\n");
        assert_eq!(code, 2);
        assert!(out.contains("\"status\": \"infeasible\""));
    }

    #[test]
    fn iteration_limit_exits_three() {
        let (code, out, _) = run(&["--max-iters", "0"], T1);
        assert_eq!(code, 3);
        assert!(out.contains("\"status\": \"iteration_limit\""));
        assert!(out.contains("\"termination\": \"MaxIterations\""));
    }

    #[test]
    fn text_format_and_trace_flags_work() {
        let (code, out, _) = run(&["--format", "text", "--trace"], T1);
        assert_eq!(code, 0);
        assert!(out.starts_with("status: optimal"));
        assert!(out.contains("trace:"));
    }

    #[test]
    fn oracle_check_reports_a_small_gap() {
        let (code, _, err) = run(&["--oracle-check"], T1);
        assert_eq!(code, 0);
        assert!(err.contains("oracle objective: 10.666"));
        assert!(err.contains("oracle gap: "));
    }

    #[test]
    fn missing_file_is_reported() {
        let (code, _, err) = run(&["/no/such/file.net"], "");
        assert_eq!(code, 1);
        assert!(err.contains("cannot read /no/such/file.net"));
    }
}
