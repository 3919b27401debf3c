//! OpenQASM 2 text export and a matching parser, used for round-trip
//! verification of generated circuits. The engineered gates are exported
//! through their exact Pauli-sandwich decompositions so the emitted gate set
//! stays within {x, y, z, h, rz, cx, cz}.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind, GateTag};

/// Emit OpenQASM-2-compatible text for a circuit.
pub fn export_circuit(circuit: &Circuit) -> Result<String, CircuitError> {
    let mut body = String::new();
    for gate in &circuit.gates {
        let t = &gate.targets;
        match &gate.kind {
            GateKind::X => writeln!(body, "x q[{}];", t[0]).unwrap(),
            GateKind::Y => writeln!(body, "y q[{}];", t[0]).unwrap(),
            GateKind::Z => writeln!(body, "z q[{}];", t[0]).unwrap(),
            GateKind::H => writeln!(body, "h q[{}];", t[0]).unwrap(),
            GateKind::Rz(l) => writeln!(body, "rz({}) q[{}];", format_angle(*l), t[0]).unwrap(),
            GateKind::Cnot | GateKind::U1 => {
                writeln!(body, "cx q[{}],q[{}];", t[0], t[1]).unwrap()
            }
            GateKind::Cz => writeln!(body, "cz q[{}],q[{}];", t[0], t[1]).unwrap(),
            GateKind::U2 | GateKind::U3 | GateKind::U4 => {
                let p = match gate.kind {
                    GateKind::U2 => "x",
                    GateKind::U3 => "y",
                    _ => "z",
                };
                writeln!(body, "{p} q[{}];", t[0]).unwrap();
                writeln!(body, "{p} q[{}];", t[1]).unwrap();
                writeln!(body, "cx q[{}],q[{}];", t[0], t[1]).unwrap();
                writeln!(body, "{p} q[{}];", t[0]).unwrap();
                writeln!(body, "{p} q[{}];", t[1]).unwrap();
            }
            GateKind::Ecr => {
                // ECR = exp(i pi/4 X(x)Z) (I(x)X); the middle factor is a
                // cx-conjugated z rotation.
                writeln!(body, "x q[{}];", t[1]).unwrap();
                writeln!(body, "h q[{}];", t[0]).unwrap();
                writeln!(body, "cx q[{}],q[{}];", t[0], t[1]).unwrap();
                writeln!(body, "rz(-pi/2) q[{}];", t[1]).unwrap();
                writeln!(body, "cx q[{}],q[{}];", t[0], t[1]).unwrap();
                writeln!(body, "h q[{}];", t[0]).unwrap();
            }
            GateKind::Custom { name, .. } => {
                return Err(CircuitError::UnsupportedGate(name.clone()))
            }
        }
    }

    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", circuit.qubits).unwrap();
    writeln!(out, "creg c[{}];", circuit.qubits).unwrap();
    out.push_str(&body);
    out.push_str("measure q -> c;\n");
    Ok(out)
}

fn format_angle(l: f64) -> String {
    for (val, name) in [
        (PI, "pi"),
        (-PI, "-pi"),
        (PI / 2.0, "pi/2"),
        (-PI / 2.0, "-pi/2"),
        (PI / 4.0, "pi/4"),
        (-PI / 4.0, "-pi/4"),
    ] {
        if l == val {
            return name.to_string();
        }
    }
    format!("{l:e}")
}

fn parse_angle(s: &str) -> Result<f64, CircuitError> {
    let bad = || CircuitError::Parse(format!("bad angle: {s}"));
    let t = s.trim();
    let (sign, t) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    if let Ok(v) = t.parse::<f64>() {
        return Ok(sign * v);
    }
    if !t.contains("pi") {
        return Err(bad());
    }
    let (coeff_str, rest) = match t.split_once("pi") {
        Some(parts) => parts,
        None => return Err(bad()),
    };
    let coeff = match coeff_str.trim().trim_end_matches('*').trim() {
        "" => 1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match rest.trim() {
        "" => 1.0,
        r => {
            let r = r.strip_prefix('/').ok_or_else(bad)?;
            r.trim().parse::<f64>().map_err(|_| bad())?
        }
    };
    Ok(sign * coeff * PI / divisor)
}

fn parse_target(tok: &str) -> Result<usize, CircuitError> {
    let t = tok.trim().trim_end_matches(';').trim();
    let inner = t
        .strip_prefix("q[")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| CircuitError::Parse(format!("bad target: {tok}")))?;
    inner
        .parse()
        .map_err(|_| CircuitError::Parse(format!("bad target index: {tok}")))
}

/// Parse OpenQASM-2 text emitted by `export_circuit` (plus plain hand-written
/// circuits over the same gate set). Measurements and barriers are ignored.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let mut qubits: Option<usize> = None;
    let mut gates: Vec<Gate> = Vec::new();

    for raw in text.lines() {
        let line = match raw.split_once("//") {
            Some((l, _)) => l.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        for stmt in line.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            if stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("qreg") {
                let rest = rest.trim();
                let inner = rest
                    .split_once('[')
                    .and_then(|(_, r)| r.strip_suffix(']'))
                    .ok_or_else(|| CircuitError::Parse(format!("bad qreg: {stmt}")))?;
                qubits = Some(
                    inner
                        .parse()
                        .map_err(|_| CircuitError::Parse(format!("bad qreg size: {stmt}")))?,
                );
                continue;
            }
            if stmt.starts_with("creg") || stmt.starts_with("measure") || stmt.starts_with("barrier")
            {
                continue;
            }

            let (head, args) = stmt
                .split_once(char::is_whitespace)
                .ok_or_else(|| CircuitError::Parse(format!("bad statement: {stmt}")))?;
            let (name, param) = match head.split_once('(') {
                Some((n, p)) => {
                    let p = p
                        .strip_suffix(')')
                        .ok_or_else(|| CircuitError::Parse(format!("bad params: {stmt}")))?;
                    (n, Some(p))
                }
                None => (head, None),
            };
            let targets: Vec<usize> = args
                .split(',')
                .map(parse_target)
                .collect::<Result<_, _>>()?;
            let kind = match (name, param) {
                ("x", None) => GateKind::X,
                ("y", None) => GateKind::Y,
                ("z", None) => GateKind::Z,
                ("h", None) => GateKind::H,
                ("rz", Some(p)) => GateKind::Rz(parse_angle(p)?),
                ("cx", None) => GateKind::Cnot,
                ("cz", None) => GateKind::Cz,
                _ => return Err(CircuitError::Parse(format!("unsupported gate: {stmt}"))),
            };
            if kind.qubit_count() != targets.len() {
                return Err(CircuitError::Parse(format!("wrong target count: {stmt}")));
            }
            gates.push(Gate::new(kind, targets, GateTag::Untagged));
        }
    }

    let qubits = qubits.ok_or_else(|| CircuitError::Parse("missing qreg".to_string()))?;
    let mut circuit = Circuit::new(qubits);
    for g in gates {
        for &t in &g.targets {
            if t >= qubits {
                return Err(CircuitError::Parse(format!("target {t} out of range")));
            }
        }
        circuit.gates.push(g);
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_first_order_circuit, build_second_order_circuit, ecr, GateTag as Tag,
    };
    use crate::operator::Operator;

    #[test]
    fn single_cnot_two_line_body() {
        let mut circuit = Circuit::new(2);
        circuit
            .gates
            .push(Gate::new(GateKind::Cnot, vec![0, 1], Tag::Untagged));
        let text = export_circuit(&circuit).unwrap();
        let body: Vec<&str> = text
            .lines()
            .filter(|l| {
                !(l.starts_with("OPENQASM")
                    || l.starts_with("include")
                    || l.starts_with("qreg")
                    || l.starts_with("creg"))
            })
            .collect();
        assert_eq!(body, vec!["cx q[0],q[1];", "measure q -> c;"]);
    }

    #[test]
    fn engineered_gate_decompositions_match() {
        for kind in [GateKind::U2, GateKind::U3, GateKind::U4] {
            let mut circuit = Circuit::new(2);
            circuit
                .gates
                .push(Gate::new(kind.clone(), vec![0, 1], Tag::Untagged));
            let direct = circuit.unitary();
            let parsed = parse_circuit(&export_circuit(&circuit).unwrap()).unwrap();
            assert!(parsed.unitary().sub(&direct).max_norm() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn ecr_export_matches_exact_matrix() {
        let mut circuit = Circuit::new(2);
        circuit
            .gates
            .push(Gate::new(GateKind::Ecr, vec![0, 1], Tag::Untagged));
        let parsed = parse_circuit(&export_circuit(&circuit).unwrap()).unwrap();
        assert!(parsed.unitary().sub(&ecr()).max_norm() < 1e-12);
        // And the kind's own matrix is the same exact matrix.
        assert!(GateKind::Ecr.matrix().sub(&ecr()).max_norm() == 0.0);
        assert!(ecr().unitarity_defect() < 1e-15);
    }

    #[test]
    fn round_trip_generated_circuits() {
        let mut circuits = vec![
            build_first_order_circuit(1),
            build_first_order_circuit(3),
            build_second_order_circuit(4, false).unwrap(),
            build_second_order_circuit(4, true).unwrap(),
        ];
        let mut with_rz = Circuit::new(2);
        with_rz
            .gates
            .push(Gate::new(GateKind::Rz(0.7331), vec![1], Tag::Untagged));
        with_rz
            .gates
            .push(Gate::new(GateKind::Ecr, vec![0, 1], Tag::Untagged));
        circuits.push(with_rz);

        for circuit in circuits {
            let text = export_circuit(&circuit).unwrap();
            let parsed = parse_circuit(&text).unwrap();
            assert_eq!(parsed.qubits, circuit.qubits);
            let d = parsed
                .unitary()
                .sub(&circuit.unitary())
                .max_norm();
            assert!(d < 1e-9, "round trip distance {d}");
        }
    }

    #[test]
    fn unsupported_gate_rejected() {
        let mut circuit = Circuit::new(2);
        circuit.gates.push(Gate::new(
            GateKind::Custom {
                name: "mystery".to_string(),
                matrix: Operator::identity(4),
            },
            vec![0, 1],
            Tag::Untagged,
        ));
        assert!(matches!(
            export_circuit(&circuit),
            Err(CircuitError::UnsupportedGate(_))
        ));
    }

    #[test]
    fn angle_parsing() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!((parse_angle("1.5e-1").unwrap() - 0.15).abs() < 1e-15);
        assert!(parse_angle("two").is_err());
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(parse_circuit("x q[0];").is_err()); // no qreg
        assert!(parse_circuit("qreg q[1];\nfoo q[0];").is_err());
        assert!(parse_circuit("qreg q[1];\nx q[5];").is_err());
    }
}
