//! A small OpenQASM 2.0 reader that extracts circuit width, layered depth
//! and gate count.
//!
//! Supported: `qreg`, `creg`, `include` (ignored), the gates
//! `h x rx ry rz cz cx swap`, `measure` and `barrier`. Operands may be single
//! qubits (`q[3]`) or whole registers, which broadcast. Gate parameters are
//! numeric literals and products/quotients with `pi` (`-3*pi/4`).
//!
//! Depth is ASAP layering: a gate lands one layer after the latest layer
//! among its qubits. A barrier raises its qubits to their common maximum
//! without adding a layer. Measurements count toward neither depth nor gates.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("line {line}: missing `OPENQASM 2.0;` header")]
    MissingHeader { line: usize },
    #[error("line {line}: unsupported OpenQASM version {version}")]
    Version { line: usize, version: String },
    #[error("line {line}: unsupported statement `{statement}`")]
    Unsupported { line: usize, statement: String },
    #[error("line {line}: undeclared register `{name}`")]
    UndeclaredRegister { line: usize, name: String },
    #[error("line {line}: index {index} out of range for register `{name}` of size {size}")]
    IndexOutOfRange {
        line: usize,
        name: String,
        index: usize,
        size: usize,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QasmCircuitSummary {
    pub n_qubits: usize,
    pub depth: usize,
    pub gate_count: usize,
}

struct Statement {
    line: usize,
    text: String,
}

fn split_statements(text: &str) -> Result<Vec<Statement>, QasmError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let code = raw.split("//").next().unwrap_or("");
        for ch in code.chars() {
            if ch == '{' || ch == '}' {
                let statement = format!("{}{ch}", current.trim());
                return Err(QasmError::Unsupported {
                    line: if current.trim().is_empty() { line_no } else { start_line },
                    statement,
                });
            }
            if ch == ';' {
                out.push(Statement {
                    line: start_line,
                    text: current.trim().to_string(),
                });
                current.clear();
                continue;
            }
            if current.trim().is_empty() && !ch.is_whitespace() {
                start_line = line_no;
            }
            current.push(ch);
        }
        current.push(' ');
    }
    if !current.trim().is_empty() {
        return Err(QasmError::Syntax {
            line: start_line,
            message: format!("statement `{}` is not terminated by `;`", current.trim()),
        });
    }
    Ok(out)
}

fn syntax(line: usize, message: impl Into<String>) -> QasmError {
    QasmError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_identifier(s: &str) -> Option<&str> {
    let mut chars = s.chars();
    let first = chars.next()?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    if chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(s)
    } else {
        None
    }
}

/// `name` or `name[index]`
fn parse_operand(s: &str, line: usize) -> Result<(String, Option<usize>), QasmError> {
    let s = s.trim();
    if let Some(open) = s.find('[') {
        let name = s[..open].trim();
        let close = s
            .rfind(']')
            .filter(|c| *c > open && s[c + 1..].trim().is_empty())
            .ok_or_else(|| syntax(line, format!("malformed operand `{s}`")))?;
        let index = s[open + 1..close]
            .trim()
            .parse::<usize>()
            .map_err(|_| syntax(line, format!("bad index in `{s}`")))?;
        let name = parse_identifier(name).ok_or_else(|| syntax(line, format!("bad register name in `{s}`")))?;
        Ok((name.to_string(), Some(index)))
    } else {
        let name = parse_identifier(s).ok_or_else(|| syntax(line, format!("malformed operand `{s}`")))?;
        Ok((name.to_string(), None))
    }
}

/// Numeric literals and `pi`, combined with `*` and `/`, optional leading sign.
fn eval_param(expr: &str, line: usize) -> Result<f64, QasmError> {
    let e: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match e.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, e.strip_prefix('+').unwrap_or(&e)),
    };
    if body.is_empty() {
        return Err(syntax(line, format!("empty parameter `{expr}`")));
    }
    let term = |t: &str| -> Result<f64, QasmError> {
        if t == "pi" {
            Ok(PI)
        } else {
            t.parse::<f64>()
                .map_err(|_| syntax(line, format!("unsupported parameter expression `{expr}`")))
        }
    };
    let mut value = 1.0;
    let mut op = '*';
    let mut token = String::new();
    for ch in body.chars().chain(std::iter::once('\0')) {
        if ch == '*' || ch == '/' || ch == '\0' {
            // exponent signs like 1e-3 never reach here; `*`/`/` only
            let v = term(&token)?;
            value = if op == '*' { value * v } else { value / v };
            op = ch;
            token.clear();
        } else {
            token.push(ch);
        }
    }
    Ok(sign * value)
}

struct Register {
    offset: usize,
    size: usize,
}

struct Program {
    qregs: HashMap<String, Register>,
    cregs: HashMap<String, usize>,
    width: usize,
    layer: Vec<usize>,
    gate_count: usize,
}

impl Program {
    /// Resolves operands into per-application qubit lists, broadcasting
    /// whole-register operands.
    fn resolve(&self, operands: &[(String, Option<usize>)], line: usize) -> Result<Vec<Vec<usize>>, QasmError> {
        let mut broadcast: Option<usize> = None;
        for (name, index) in operands {
            let reg = self.qregs.get(name).ok_or_else(|| QasmError::UndeclaredRegister {
                line,
                name: name.clone(),
            })?;
            match index {
                Some(i) if *i >= reg.size => {
                    return Err(QasmError::IndexOutOfRange {
                        line,
                        name: name.clone(),
                        index: *i,
                        size: reg.size,
                    })
                }
                Some(_) => {}
                None => match broadcast {
                    Some(b) if b != reg.size => {
                        return Err(syntax(line, "broadcast registers differ in size"))
                    }
                    _ => broadcast = Some(reg.size),
                },
            }
        }
        let reps = broadcast.unwrap_or(1);
        let mut out = Vec::with_capacity(reps);
        for r in 0..reps {
            let qubits: Vec<usize> = operands
                .iter()
                .map(|(name, index)| self.qregs[name].offset + index.unwrap_or(r))
                .collect();
            for (i, q) in qubits.iter().enumerate() {
                if qubits[..i].contains(q) {
                    return Err(syntax(line, format!("qubit {q} used twice in one gate")));
                }
            }
            out.push(qubits);
        }
        Ok(out)
    }

    fn check_creg(&self, name: &str, index: Option<usize>, line: usize) -> Result<(), QasmError> {
        let size = *self.cregs.get(name).ok_or_else(|| QasmError::UndeclaredRegister {
            line,
            name: name.to_string(),
        })?;
        match index {
            Some(i) if i >= size => Err(QasmError::IndexOutOfRange {
                line,
                name: name.to_string(),
                index: i,
                size,
            }),
            _ => Ok(()),
        }
    }

    fn place_gate(&mut self, qubits: &[usize]) {
        let layer = 1 + qubits.iter().map(|&q| self.layer[q]).max().unwrap_or(0);
        for &q in qubits {
            self.layer[q] = layer;
        }
        self.gate_count += 1;
    }

    fn barrier(&mut self, qubits: &[usize]) {
        let top = qubits.iter().map(|&q| self.layer[q]).max().unwrap_or(0);
        for &q in qubits {
            self.layer[q] = top;
        }
    }
}

fn gate_arity(name: &str) -> Option<(usize, usize)> {
    // (qubit operands, parameters)
    match name {
        "h" | "x" => Some((1, 0)),
        "rx" | "ry" | "rz" => Some((1, 1)),
        "cz" | "cx" | "swap" => Some((2, 0)),
        _ => None,
    }
}

fn split_operands(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).collect()
}

pub fn parse_qasm_subset(text: &str) -> Result<QasmCircuitSummary, QasmError> {
    let statements = split_statements(text)?;
    let mut iter = statements.into_iter();
    let header = iter.next().ok_or(QasmError::MissingHeader { line: 1 })?;
    let mut words = header.text.split_whitespace();
    if words.next() != Some("OPENQASM") {
        return Err(QasmError::MissingHeader { line: header.line });
    }
    let version = words.next().unwrap_or("").to_string();
    if version != "2.0" && version != "2" {
        return Err(QasmError::Version {
            line: header.line,
            version,
        });
    }

    let mut prog = Program {
        qregs: HashMap::new(),
        cregs: HashMap::new(),
        width: 0,
        layer: Vec::new(),
        gate_count: 0,
    };

    for Statement { line, text } in iter {
        if text.is_empty() {
            continue;
        }
        let (head, rest) = match text.find(|c: char| c.is_whitespace() || c == '(') {
            Some(i) => (&text[..i], text[i..].trim()),
            None => (text.as_str(), ""),
        };
        match head {
            "include" => {
                log::warn!("line {line}: ignoring `{text}`");
            }
            "qreg" | "creg" => {
                let (name, size) = parse_operand(rest, line)?;
                let size = size.ok_or_else(|| syntax(line, format!("`{head}` needs a size")))?;
                if prog.qregs.contains_key(&name) || prog.cregs.contains_key(&name) {
                    return Err(syntax(line, format!("register `{name}` declared twice")));
                }
                if head == "qreg" {
                    prog.qregs.insert(
                        name,
                        Register {
                            offset: prog.width,
                            size,
                        },
                    );
                    prog.width += size;
                    prog.layer.resize(prog.width, 0);
                } else {
                    prog.cregs.insert(name, size);
                }
            }
            "measure" => {
                let (src, dst) = rest
                    .split_once("->")
                    .ok_or_else(|| syntax(line, "measure needs `->`"))?;
                let src = parse_operand(src, line)?;
                let dst = parse_operand(dst, line)?;
                prog.resolve(std::slice::from_ref(&src), line)?;
                prog.check_creg(&dst.0, dst.1, line)?;
            }
            "barrier" => {
                let operands = split_operands(rest)
                    .into_iter()
                    .map(|o| parse_operand(o, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut qubits = Vec::new();
                for op in &operands {
                    for group in prog.resolve(std::slice::from_ref(op), line)? {
                        qubits.extend(group);
                    }
                }
                prog.barrier(&qubits);
            }
            name => {
                let (n_operands, n_params) = gate_arity(name).ok_or_else(|| QasmError::Unsupported {
                    line,
                    statement: text.clone(),
                })?;
                let (params, args) = if let Some(after) = rest.strip_prefix('(') {
                    let close = after
                        .find(')')
                        .ok_or_else(|| syntax(line, "unclosed parameter list"))?;
                    (Some(&after[..close]), after[close + 1..].trim())
                } else {
                    (None, rest)
                };
                let values = match params {
                    Some(p) => p
                        .split(',')
                        .map(|e| eval_param(e, line))
                        .collect::<Result<Vec<_>, _>>()?,
                    None => vec![],
                };
                if values.len() != n_params {
                    return Err(syntax(
                        line,
                        format!("`{name}` takes {n_params} parameter(s), got {}", values.len()),
                    ));
                }
                let operands = split_operands(args)
                    .into_iter()
                    .map(|o| parse_operand(o, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if operands.len() != n_operands {
                    return Err(syntax(
                        line,
                        format!("`{name}` takes {n_operands} operand(s), got {}", operands.len()),
                    ));
                }
                for qubits in prog.resolve(&operands, line)? {
                    prog.place_gate(&qubits);
                }
            }
        }
    }

    Ok(QasmCircuitSummary {
        n_qubits: prog.width,
        depth: prog.layer.iter().copied().max().unwrap_or(0),
        gate_count: prog.gate_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

    fn parse(body: &str) -> Result<QasmCircuitSummary, QasmError> {
        parse_qasm_subset(&format!("{HEADER}{body}"))
    }

    #[test]
    fn chained_cnots() {
        let s = parse("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap();
        assert_eq!(
            s,
            QasmCircuitSummary {
                n_qubits: 3,
                depth: 3,
                gate_count: 3
            }
        );
    }

    #[test]
    fn disjoint_gates_share_a_layer() {
        let s = parse("qreg q[2]; h q[0]; h q[1];").unwrap();
        assert_eq!((s.depth, s.gate_count), (1, 2));
    }

    #[test]
    fn empty_body() {
        let s = parse("qreg q[4];\ncreg c[4];\n").unwrap();
        assert_eq!((s.n_qubits, s.depth, s.gate_count), (4, 0, 0));
    }

    #[test]
    fn barrier_synchronizes() {
        let s = parse("qreg q[2]; h q[0]; h q[0]; barrier q; x q[1];").unwrap();
        assert_eq!(s.depth, 3);
        let s = parse("qreg q[2]; h q[0]; h q[0]; x q[1];").unwrap();
        assert_eq!(s.depth, 2);
    }

    #[test]
    fn measures_are_not_counted() {
        let s = parse("qreg q[2]; creg c[2]; h q[0]; measure q[0] -> c[0]; measure q -> c;").unwrap();
        assert_eq!((s.depth, s.gate_count), (1, 1));
    }

    #[test]
    fn register_broadcast() {
        let s = parse("qreg a[3]; qreg b[3]; h a; cx a,b;").unwrap();
        assert_eq!((s.n_qubits, s.depth, s.gate_count), (6, 2, 6));
    }

    #[test]
    fn parameters() {
        assert!((eval_param("-3*pi/4", 1).unwrap() + 0.75 * PI).abs() < 1e-15);
        assert_eq!(eval_param("0.5", 1).unwrap(), 0.5);
        assert_eq!(eval_param("1e-3", 1).unwrap(), 1e-3);
        assert_eq!(eval_param("2*pi", 1).unwrap(), 2.0 * PI);
        assert!(eval_param("sin(pi)", 1).is_err());
        let s = parse("qreg q[1]; rx(pi/2) q[0]; rz(-0.25) q[0];").unwrap();
        assert_eq!(s.gate_count, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("qreg q[2];\nh q[0];\nccx q[0],q[1],q[0];").unwrap_err();
        assert!(matches!(err, QasmError::Unsupported { line: 5, .. }), "{err:?}");

        let err = parse("qreg q[2];\nh r[0];").unwrap_err();
        assert!(matches!(err, QasmError::UndeclaredRegister { line: 4, ref name } if name == "r"));

        let err = parse("qreg q[2];\nh q[2];").unwrap_err();
        assert!(matches!(err, QasmError::IndexOutOfRange { line: 4, index: 2, size: 2, .. }));

        let err = parse("qreg q[2];\ngate foo a { h a; }").unwrap_err();
        assert!(matches!(err, QasmError::Unsupported { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn header_required() {
        assert!(matches!(
            parse_qasm_subset("qreg q[1];"),
            Err(QasmError::MissingHeader { line: 1 })
        ));
        assert!(matches!(
            parse_qasm_subset("OPENQASM 3.0;\nqubit q;"),
            Err(QasmError::Version { .. })
        ));
    }

    #[test]
    fn wrong_operand_counts() {
        assert!(parse("qreg q[2]; cx q[0];").is_err());
        assert!(parse("qreg q[2]; rx q[0];").is_err());
        assert!(parse("qreg q[2]; cx q[0],q[0];").is_err());
        assert!(parse("qreg q[2]; h q[0]").is_err());
    }
}
