//! BLIF netlist ingestion.
//!
//! Supports the technology-mapped subset: `.model`, `.inputs`, `.outputs`,
//! `.names`, `.latch`, `.end`. Hierarchical `.subckt` files are rejected.

use std::collections::HashSet;
use thiserror::Error;

/// A single-output LUT (`.names` block).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lut {
    pub inputs: Vec<String>,
    pub output: String,
    /// Truth table rows, verbatim: `(input pattern, output value)`.
    /// The pattern is empty for constant generators.
    pub rows: Vec<(String, char)>,
}

/// A `.latch` statement. The clock is `None` when the file gives no control
/// signal (or gives `NIL`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Latch {
    pub input: String,
    pub output: String,
    pub clock: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    pub model_name: String,
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
    pub luts: Vec<Lut>,
    pub latches: Vec<Latch>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlifError {
    #[error("unknown or unsupported directive `{0}`")]
    UnknownDirective(String),
    #[error("signal `{0}` has more than one driver")]
    DuplicateDriver(String),
    #[error("LUT driving `{signal}` has {width} inputs, exceeds K={k}")]
    LutTooWide { signal: String, width: usize, k: usize },
    #[error("signal `{0}` is referenced but never driven")]
    DanglingSignal(String),
    #[error("malformed truth table row `{0}`")]
    MalformedTruthTableRow(String),
    #[error("malformed BLIF: {0}")]
    Syntax(String),
}

impl Netlist {
    /// Set of signals used as latch clocks.
    pub fn clock_signals(&self) -> HashSet<&str> {
        self.latches
            .iter()
            .filter_map(|l| l.clock.as_deref())
            .collect()
    }
}

/// Parse BLIF text. `k` is the architecture LUT size; wider `.names` blocks
/// are rejected. Comments (`#`) and line continuations (`\`) are handled.
pub fn parse_blif(text: &str, k: usize) -> Result<Netlist, BlifError> {
    let mut netlist = Netlist::default();
    let mut saw_model = false;
    let mut saw_end = false;
    // The truth table of the most recently opened `.names` block.
    let mut open_lut: Option<usize> = None;

    for line in logical_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let head = tokens[0];
        if head.starts_with('.') {
            open_lut = None;
        }
        match head {
            ".model" => {
                if saw_model {
                    return Err(BlifError::Syntax("multiple .model statements".into()));
                }
                saw_model = true;
                netlist.model_name = tokens.get(1).unwrap_or(&"").to_string();
            }
            ".inputs" => {
                netlist
                    .primary_inputs
                    .extend(tokens[1..].iter().map(|s| s.to_string()));
            }
            ".outputs" => {
                netlist
                    .primary_outputs
                    .extend(tokens[1..].iter().map(|s| s.to_string()));
            }
            ".names" => {
                if tokens.len() < 2 {
                    return Err(BlifError::Syntax(".names without output signal".into()));
                }
                let output = tokens[tokens.len() - 1].to_string();
                let inputs: Vec<String> =
                    tokens[1..tokens.len() - 1].iter().map(|s| s.to_string()).collect();
                if inputs.len() > k {
                    return Err(BlifError::LutTooWide {
                        signal: output,
                        width: inputs.len(),
                        k,
                    });
                }
                netlist.luts.push(Lut {
                    inputs,
                    output,
                    rows: Vec::new(),
                });
                open_lut = Some(netlist.luts.len() - 1);
            }
            ".latch" => {
                // .latch <input> <output> [<type> <control>] [<init-val>]
                let args = &tokens[1..];
                if args.len() < 2 {
                    return Err(BlifError::Syntax(".latch needs input and output".into()));
                }
                let clock = match args.len() {
                    2 | 3 => None,
                    4 | 5 => match args[3] {
                        "NIL" => None,
                        c => Some(c.to_string()),
                    },
                    _ => return Err(BlifError::Syntax("too many .latch arguments".into())),
                };
                netlist.latches.push(Latch {
                    input: args[0].to_string(),
                    output: args[1].to_string(),
                    clock,
                });
            }
            ".end" => {
                saw_end = true;
            }
            d if d.starts_with('.') => {
                return Err(BlifError::UnknownDirective(d.to_string()));
            }
            _ => {
                // Truth table row for the open .names block.
                let lut_idx = open_lut
                    .ok_or_else(|| BlifError::Syntax(format!("stray line `{line}`")))?;
                let lut = &mut netlist.luts[lut_idx];
                let (pattern, value) = if lut.inputs.is_empty() {
                    if tokens.len() != 1 || tokens[0].len() != 1 {
                        return Err(BlifError::MalformedTruthTableRow(line.clone()));
                    }
                    (String::new(), tokens[0].chars().next().unwrap())
                } else {
                    if tokens.len() != 2 || tokens[1].len() != 1 {
                        return Err(BlifError::MalformedTruthTableRow(line.clone()));
                    }
                    (tokens[0].to_string(), tokens[1].chars().next().unwrap())
                };
                if pattern.len() != lut.inputs.len()
                    || !pattern.chars().all(|c| matches!(c, '0' | '1' | '-'))
                    || !matches!(value, '0' | '1')
                {
                    return Err(BlifError::MalformedTruthTableRow(line.clone()));
                }
                lut.rows.push((pattern, value));
            }
        }
    }

    if !saw_model {
        return Err(BlifError::Syntax("missing .model".into()));
    }
    if !saw_end {
        return Err(BlifError::Syntax("missing .end".into()));
    }
    validate(&netlist)?;
    Ok(netlist)
}

fn validate(netlist: &Netlist) -> Result<(), BlifError> {
    let mut driven: HashSet<&str> = HashSet::new();
    for s in &netlist.primary_inputs {
        if !driven.insert(s) {
            return Err(BlifError::DuplicateDriver(s.clone()));
        }
    }
    for l in &netlist.luts {
        if !driven.insert(&l.output) {
            return Err(BlifError::DuplicateDriver(l.output.clone()));
        }
    }
    for l in &netlist.latches {
        if !driven.insert(&l.output) {
            return Err(BlifError::DuplicateDriver(l.output.clone()));
        }
    }

    let check = |s: &str| -> Result<(), BlifError> {
        if driven.contains(s) {
            Ok(())
        } else {
            Err(BlifError::DanglingSignal(s.to_string()))
        }
    };
    for s in &netlist.primary_outputs {
        check(s)?;
    }
    for l in &netlist.luts {
        for s in &l.inputs {
            check(s)?;
        }
    }
    for l in &netlist.latches {
        check(&l.input)?;
        if let Some(c) = &l.clock {
            check(c)?;
        }
    }
    Ok(())
}

/// Strip comments and fold `\` continuations into logical lines.
fn logical_lines(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut pending = String::new();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = line.trim_end();
        if let Some(stripped) = trimmed.strip_suffix('\\') {
            pending.push_str(stripped);
            pending.push(' ');
        } else {
            pending.push_str(trimmed);
            if !pending.trim().is_empty() {
                out.push(std::mem::take(&mut pending));
            } else {
                pending.clear();
            }
        }
    }
    if !pending.trim().is_empty() {
        out.push(pending);
    }
    out
}

/// Emit a Netlist back to BLIF text. Round-trips through [`parse_blif`].
pub fn emit_blif(netlist: &Netlist) -> String {
    let mut s = String::new();
    s.push_str(&format!(".model {}\n", netlist.model_name));
    if !netlist.primary_inputs.is_empty() {
        s.push_str(&format!(".inputs {}\n", netlist.primary_inputs.join(" ")));
    }
    if !netlist.primary_outputs.is_empty() {
        s.push_str(&format!(".outputs {}\n", netlist.primary_outputs.join(" ")));
    }
    for l in &netlist.latches {
        match &l.clock {
            Some(c) => s.push_str(&format!(".latch {} {} re {} 2\n", l.input, l.output, c)),
            None => s.push_str(&format!(".latch {} {} 2\n", l.input, l.output)),
        }
    }
    for l in &netlist.luts {
        s.push_str(".names ");
        for i in &l.inputs {
            s.push_str(i);
            s.push(' ');
        }
        s.push_str(&l.output);
        s.push('\n');
        for (pat, val) in &l.rows {
            if pat.is_empty() {
                s.push_str(&format!("{val}\n"));
            } else {
                s.push_str(&format!("{pat} {val}\n"));
            }
        }
    }
    s.push_str(".end\n");
    s
}
