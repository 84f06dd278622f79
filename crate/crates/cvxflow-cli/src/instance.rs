//! Instance file parsing and writing.
//!
//! ```text
//! c anything            comment
//! c root <id>           designate the root node (default: node 1)
//! p mccnfp <m> <n>      m nodes, n arcs; must precede n and a lines
//! n <id> <supply>       node supply (demand if negative); default 0
//! a <tail> <head> <family> <params...>
//! ```
//!
//! Cost families: `lin c` for `c*x`, `quad c2 c1` for `c2*x^2 + c1*x`,
//! `pow k p` for `k*x^p`, `expc k a` for `k*(exp(a*x) - 1)`.

use std::fmt;

use cvxflow_core::{Arc, CostFn, Network};

/// Parse failure with the 1-based line it was detected on.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn parse_count(line: usize, token: &str, what: &str) -> Result<usize, ParseError> {
    token
        .parse::<usize>()
        .map_err(|_| ParseError::new(line, format!("invalid {what} `{token}`")))
}

fn parse_real(line: usize, token: &str, what: &str) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} `{token}`")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, format!("{what} `{token}` must be finite")));
    }
    Ok(v)
}

fn parse_node_id(line: usize, token: &str, nodes: usize) -> Result<usize, ParseError> {
    let id = parse_count(line, token, "node id")?;
    if id < 1 || id > nodes {
        return Err(ParseError::new(line, format!("node id {id} out of range 1..={nodes}")));
    }
    Ok(id - 1)
}

/// Parses an instance, never panicking on malformed text. The first
/// problem detected wins; everything structural (balance, connectivity,
/// cost convexity) is reported against the offending line where one
/// exists and against the problem line otherwise.
pub fn parse_instance(text: &str) -> Result<Network, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut supplies: Vec<f64> = Vec::new();
    let mut has_supply: Vec<bool> = Vec::new();
    let mut arcs: Vec<Arc> = Vec::new();
    let mut arc_lines: Vec<usize> = Vec::new();
    let mut root: Option<(usize, usize)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&kind) = tokens.first() else { continue };
        match kind {
            "c" => {
                if tokens.get(1) == Some(&"root") {
                    if tokens.len() != 3 {
                        return Err(ParseError::new(line, "root directive must be `c root <id>`"));
                    }
                    if root.is_some() {
                        return Err(ParseError::new(line, "duplicate root directive"));
                    }
                    let id = parse_count(line, tokens[2], "root node id")?;
                    root = Some((id, line));
                }
            }
            "p" => {
                if header.is_some() {
                    return Err(ParseError::new(line, "duplicate problem line"));
                }
                if tokens.len() != 4 || tokens[1] != "mccnfp" {
                    return Err(ParseError::new(line, "problem line must be `p mccnfp <nodes> <arcs>`"));
                }
                let m = parse_count(line, tokens[2], "node count")?;
                let n = parse_count(line, tokens[3], "arc count")?;
                if m < 2 {
                    return Err(ParseError::new(line, "need at least 2 nodes"));
                }
                if n < 1 {
                    return Err(ParseError::new(line, "need at least 1 arc"));
                }
                supplies = vec![0.0; m];
                has_supply = vec![false; m];
                header = Some((m, n, line));
            }
            "n" => {
                let Some((m, ..)) = header else {
                    return Err(ParseError::new(line, "node line before problem line"));
                };
                if tokens.len() != 3 {
                    return Err(ParseError::new(line, "node line must be `n <id> <supply>`"));
                }
                let id = parse_node_id(line, tokens[1], m)?;
                if has_supply[id] {
                    return Err(ParseError::new(line, format!("duplicate supply for node {}", id + 1)));
                }
                has_supply[id] = true;
                supplies[id] = parse_real(line, tokens[2], "supply")?;
            }
            "a" => {
                let Some((m, ..)) = header else {
                    return Err(ParseError::new(line, "arc line before problem line"));
                };
                if tokens.len() < 4 {
                    return Err(ParseError::new(
                        line,
                        "arc line must be `a <tail> <head> <family> <params...>`",
                    ));
                }
                let tail = parse_node_id(line, tokens[1], m)?;
                let head = parse_node_id(line, tokens[2], m)?;
                if tail == head {
                    return Err(ParseError::new(line, format!("self loop at node {}", tail + 1)));
                }
                let params = &tokens[4..];
                let expect = |k: usize| -> Result<(), ParseError> {
                    if params.len() == k {
                        Ok(())
                    } else {
                        Err(ParseError::new(
                            line,
                            format!(
                                "cost family `{}` takes {k} parameter{}, found {}",
                                tokens[3],
                                if k == 1 { "" } else { "s" },
                                params.len()
                            ),
                        ))
                    }
                };
                let cost = match tokens[3] {
                    "lin" => {
                        expect(1)?;
                        CostFn::linear(parse_real(line, params[0], "slope")?)
                    }
                    "quad" => {
                        expect(2)?;
                        CostFn::quadratic(
                            parse_real(line, params[0], "quadratic coefficient")?,
                            parse_real(line, params[1], "slope")?,
                        )
                    }
                    "pow" => {
                        expect(2)?;
                        CostFn::power(
                            parse_real(line, params[0], "scale")?,
                            parse_real(line, params[1], "exponent")?,
                        )
                    }
                    "expc" => {
                        expect(2)?;
                        CostFn::exponential(
                            parse_real(line, params[0], "scale")?,
                            parse_real(line, params[1], "rate")?,
                        )
                    }
                    other => {
                        return Err(ParseError::new(line, format!("unknown cost family `{other}`")));
                    }
                };
                cost.validate()
                    .map_err(|e| ParseError::new(line, e.to_string()))?;
                arcs.push(Arc::new(tail, head, cost));
                arc_lines.push(line);
            }
            other => {
                return Err(ParseError::new(line, format!("unknown line kind `{other}`")));
            }
        }
    }

    let Some((m, n, p_line)) = header else {
        return Err(ParseError::new(1, "missing problem line"));
    };
    if arcs.len() != n {
        return Err(ParseError::new(
            p_line,
            format!("problem line declares {n} arcs, found {}", arcs.len()),
        ));
    }
    let root0 = match root {
        Some((id, line)) => {
            if id < 1 || id > m {
                return Err(ParseError::new(line, format!("root node {id} out of range 1..={m}")));
            }
            id - 1
        }
        None => 0,
    };
    Network::new(m, supplies, arcs, root0).map_err(|e| ParseError::new(p_line, e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitError {
    /// Custom cost curves have no file representation.
    CustomCost { arc: usize },
}

impl fmt::Display for EmitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmitError::CustomCost { arc } => {
                write!(f, "arc {arc} has a custom cost with no file representation")
            }
        }
    }
}

impl std::error::Error for EmitError {}

/// Writes a network back in the instance format, so that parsing the
/// result reproduces it exactly. Only nonzero supplies are written.
pub fn emit_instance(net: &Network) -> Result<String, EmitError> {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "p mccnfp {} {}", net.node_count(), net.arc_count());
    if net.root() != 0 {
        let _ = writeln!(out, "c root {}", net.root() + 1);
    }
    for (i, &b) in net.supplies().iter().enumerate() {
        if b != 0.0 {
            let _ = writeln!(out, "n {} {}", i + 1, b);
        }
    }
    for (id, arc) in net.arcs().iter().enumerate() {
        let family = match arc.cost {
            CostFn::Linear { slope } => format!("lin {slope}"),
            CostFn::Quadratic { quad, slope } => format!("quad {quad} {slope}"),
            CostFn::Power { scale, exponent } => format!("pow {scale} {exponent}"),
            CostFn::Exponential { scale, rate } => format!("expc {scale} {rate}"),
            CostFn::Custom(_) => return Err(EmitError::CustomCost { arc: id }),
        };
        let _ = writeln!(out, "a {} {} {family}", arc.tail + 1, arc.head + 1);
    }
    Ok(out)
}
