// Copyright contributors to the telesabre project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! A small OpenQASM 2 subset: `qreg` declarations, one- and two-qubit gate
//! applications with optional parameter lists. `creg`, `measure`, `barrier`
//! and `reset` statements are accepted and ignored.
//!
//! When no `qreg` is declared, bare operands such as `q3` address qubit 3
//! directly.

use super::{CircuitBuilder, CircuitDag, CircuitError};

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Statement {
    text: String,
    pos: Pos,
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

struct Application {
    name: String,
    qubits: Vec<usize>,
    pos: Pos,
}

fn err(pos: Pos, message: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn split_statements(text: &str) -> Result<Vec<Statement>, CircuitError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start: Option<Pos> = None;
    for (li, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find("//") {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        for (ci, ch) in line.chars().enumerate() {
            let pos = Pos {
                line: li + 1,
                column: ci + 1,
            };
            if ch == ';' {
                let pos = start.take().unwrap_or(pos);
                out.push(Statement {
                    text: std::mem::take(&mut current).trim().to_string(),
                    pos,
                });
                continue;
            }
            if ch == '{' || ch == '}' {
                return Err(err(pos, "gate definitions and blocks are not supported"));
            }
            if start.is_none() && !ch.is_whitespace() {
                start = Some(pos);
            }
            current.push(ch);
        }
        current.push(' ');
    }
    if let Some(pos) = start {
        return Err(err(pos, "statement is missing a terminating `;`"));
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `name[idx]` into its parts.
fn indexed(s: &str, pos: Pos) -> Result<(String, Option<usize>), CircuitError> {
    let s = s.trim();
    match s.find('[') {
        Some(open) => {
            let close = s
                .strip_suffix(']')
                .ok_or_else(|| err(pos, format!("malformed operand `{s}`")))?;
            let name = s[..open].trim();
            let index = close[open + 1..]
                .trim()
                .parse::<usize>()
                .map_err(|_| err(pos, format!("malformed index in `{s}`")))?;
            if !is_identifier(name) {
                return Err(err(pos, format!("malformed operand `{s}`")));
            }
            Ok((name.to_string(), Some(index)))
        }
        None if is_identifier(s) => Ok((s.to_string(), None)),
        None => Err(err(pos, format!("malformed operand `{s}`"))),
    }
}

fn implicit_index(name: &str) -> Option<usize> {
    let digits = name.trim_start_matches(|c: char| !c.is_ascii_digit());
    if digits.is_empty() || digits.len() == name.len() {
        return None;
    }
    digits.parse().ok()
}

pub fn parse_qasm(text: &str) -> Result<CircuitDag, CircuitError> {
    let mut registers: Vec<Register> = Vec::new();
    let mut raw_apps: Vec<(String, Vec<(String, Option<usize>)>, Pos)> = Vec::new();

    for stmt in split_statements(text)? {
        let t = stmt.text.as_str();
        if t.is_empty() {
            continue;
        }
        let (head, rest) = match t.find(|c: char| c.is_whitespace() || c == '(') {
            Some(i) => (&t[..i], &t[i..]),
            None => (t, ""),
        };
        match head {
            "OPENQASM" | "include" | "creg" | "measure" | "barrier" | "reset" => continue,
            "gate" | "opaque" | "if" => {
                return Err(err(
                    stmt.pos,
                    format!("`{head}` statements are not supported"),
                ))
            }
            "qreg" => {
                let (name, size) = indexed(rest, stmt.pos)?;
                let size = size.ok_or_else(|| err(stmt.pos, "qreg requires a size"))?;
                if registers.iter().any(|r| r.name == name) {
                    return Err(err(stmt.pos, format!("register `{name}` declared twice")));
                }
                let offset = registers.iter().map(|r| r.size).sum();
                registers.push(Register { name, offset, size });
                continue;
            }
            _ => {}
        }
        if !is_identifier(head) {
            return Err(err(stmt.pos, format!("unexpected token `{head}`")));
        }
        let mut operands = rest.trim_start();
        if operands.starts_with('(') {
            let close = operands
                .find(')')
                .ok_or_else(|| err(stmt.pos, "unbalanced parameter list"))?;
            operands = &operands[close + 1..];
        }
        let args = operands
            .split(',')
            .map(|a| indexed(a, stmt.pos))
            .collect::<Result<Vec<_>, _>>()?;
        raw_apps.push((head.to_ascii_lowercase(), args, stmt.pos));
    }

    let implicit = registers.is_empty();
    let mut apps = Vec::with_capacity(raw_apps.len());
    let mut num_qubits: usize = registers.iter().map(|r| r.size).sum();
    for (name, args, pos) in raw_apps {
        let mut qubits = Vec::with_capacity(args.len());
        for (reg, index) in args {
            let q = if let Some(r) = registers.iter().find(|r| r.name == reg) {
                match index {
                    Some(i) if i < r.size => r.offset + i,
                    Some(i) => return Err(err(pos, format!("index {i} out of range for `{reg}`"))),
                    None if r.size == 1 => r.offset,
                    None => {
                        return Err(err(
                            pos,
                            format!("register broadcast on `{reg}` is not supported"),
                        ))
                    }
                }
            } else if implicit && index.is_none() {
                let q = implicit_index(&reg)
                    .ok_or_else(|| err(pos, format!("unknown qubit `{reg}`")))?;
                num_qubits = num_qubits.max(q + 1);
                q
            } else {
                return Err(err(pos, format!("unknown register `{reg}`")));
            };
            qubits.push(q);
        }
        apps.push(Application { name, qubits, pos });
    }

    let mut builder = CircuitBuilder::new(num_qubits);
    for app in apps {
        let located = |e: CircuitError| match e {
            CircuitError::Invalid(message) => err(app.pos, message),
            other => other,
        };
        match app.qubits.as_slice() {
            [q] => {
                builder.single(&app.name, *q).map_err(located)?;
            }
            [a, b] => {
                builder.two(&app.name, *a, *b).map_err(located)?;
            }
            qs => {
                return Err(CircuitError::UnsupportedGate {
                    name: app.name,
                    arity: qs.len(),
                    line: app.pos.line,
                    column: app.pos.column,
                })
            }
        }
    }
    Ok(builder.build())
}
