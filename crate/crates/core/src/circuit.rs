//! Distributed circuits and their text format.
//!
//! Gate positions are physical data-qubit ids. A TeleGate CNOT is recorded on
//! its logical endpoints `(control, remote target)`; a TeleData CNOT is
//! recorded on the positions where it finally runs locally, i.e. with the
//! teleported endpoint already replaced by its landing qubit.
//!
//! ```text
//! dqas-circuit 1
//! device 6d0c8f0a1b2c3d4e
//! assignment 0 1 2 3 6 7
//! empty 8 9
//! ebits 2
//! params 6
//! meta method=telegate gate_dist=0.5,0.25,0.25 p_nonlocal=0.2 seed=42
//! gates 4
//! U 2 slot=0
//! CNOT 2 6 telegate=0
//! U 1 slot=3
//! CNOT 7 8 teledata=1 from=2 to=7
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::QubitAssignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "telegate")]
    TeleGate,
    #[serde(rename = "teledata")]
    TeleData,
    Both,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::TeleGate => "telegate",
            Method::TeleData => "teledata",
            Method::Both => "both",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "telegate" => Ok(Method::TeleGate),
            "teledata" => Ok(Method::TeleData),
            "both" => Ok(Method::Both),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    U,
    Cnot,
    Swap,
}

/// Which nonlocal method realized a CNOT. `cycle` numbers ebits from zero;
/// every TeleGate CNOT sharing one cat-entangler carries the same cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NonlocalTag {
    TeleGate {
        cycle: u32,
    },
    TeleData {
        cycle: u32,
        mover: usize,
        landing: usize,
    },
}

impl NonlocalTag {
    pub fn cycle(&self) -> u32 {
        match *self {
            NonlocalTag::TeleGate { cycle } | NonlocalTag::TeleData { cycle, .. } => cycle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    /// `U(θ, φ, λ)` reading `params[slot..slot + 3]`.
    U {
        qubit: usize,
        slot: usize,
    },
    Cnot {
        control: usize,
        target: usize,
        tag: Option<NonlocalTag>,
    },
    Swap {
        a: usize,
        b: usize,
    },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::U { .. } => GateKind::U,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Swap { .. } => GateKind::Swap,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot {
            control,
            target,
            tag: None,
        }
    }

    /// Positions the gate acts on, as recorded.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::U { qubit, .. } => vec![qubit],
            Gate::Cnot {
                control, target, ..
            } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
        }
    }

    /// Every physical data qubit whose history this gate changes, including
    /// the source qubit of a teleportation.
    pub fn touches(&self) -> Vec<usize> {
        let mut q = self.qubits();
        if let Gate::Cnot {
            tag: Some(NonlocalTag::TeleData { mover, .. }),
            ..
        } = *self
        {
            q.push(mover);
        }
        q
    }

    pub fn tag(&self) -> Option<NonlocalTag> {
        match *self {
            Gate::Cnot { tag, .. } => tag,
            _ => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        !matches!(self, Gate::U { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenMeta {
    pub method: Method,
    /// Probabilities of U, CNOT and SWAP.
    pub gate_dist: [f64; 3],
    pub p_nonlocal: f64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("U gate #{index} uses slot {slot}, expected {expected}")]
    BadSlot {
        index: usize,
        slot: usize,
        expected: usize,
    },
    #[error("gate #{0} repeats a qubit")]
    RepeatedQubit(usize),
    #[error("gate #{index} touches qubit {qubit} which the assignment does not know")]
    UnknownQubit { index: usize, qubit: usize },
    #[error("ebit cycle {cycle} at gate #{index} is out of order")]
    CycleOrder { index: usize, cycle: u32 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    gates: Vec<Gate>,
    n_params: usize,
    ebits: u32,
    assignment: QubitAssignment,
    meta: Option<GenMeta>,
    device: Option<String>,
}

impl Circuit {
    /// Validates the structural invariants and derives `n_params` and `ebits`.
    ///
    /// U slots must be `0, 3, 6, ...` in gate order, two-qubit gates need
    /// distinct positions, every position must be a qubit known to the
    /// assignment, and ebit cycles must appear in increasing order.
    pub fn new(assignment: QubitAssignment, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let known: BTreeSet<usize> = assignment
            .map()
            .iter()
            .chain(assignment.empty_set())
            .copied()
            .collect();
        let mut n_u = 0;
        let mut next_cycle = 0u32;
        let mut telegate_cycles = HashSet::new();
        for (index, g) in gates.iter().enumerate() {
            if let Gate::U { slot, .. } = *g {
                if slot != 3 * n_u {
                    return Err(CircuitError::BadSlot {
                        index,
                        slot,
                        expected: 3 * n_u,
                    });
                }
                n_u += 1;
            }
            let qs = g.touches();
            for &q in &qs {
                if !known.contains(&q) {
                    return Err(CircuitError::UnknownQubit { index, qubit: q });
                }
            }
            let distinct: BTreeSet<_> = qs.iter().collect();
            if distinct.len() != qs.len() {
                return Err(CircuitError::RepeatedQubit(index));
            }
            if let Some(tag) = g.tag() {
                let cycle = tag.cycle();
                let is_telegate = matches!(tag, NonlocalTag::TeleGate { .. });
                if !(is_telegate && telegate_cycles.contains(&cycle)) {
                    if cycle != next_cycle {
                        return Err(CircuitError::CycleOrder { index, cycle });
                    }
                    next_cycle += 1;
                    if is_telegate {
                        telegate_cycles.insert(cycle);
                    }
                }
            }
        }
        Ok(Self {
            gates,
            n_params: 3 * n_u,
            ebits: next_cycle,
            assignment,
            meta: None,
            device: None,
        })
    }

    pub fn with_meta(mut self, meta: GenMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn with_device(mut self, fingerprint: impl Into<String>) -> Self {
        self.device = Some(fingerprint.into());
        self
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ebits(&self) -> u32 {
        self.ebits
    }

    pub fn assignment(&self) -> &QubitAssignment {
        &self.assignment
    }

    pub fn n_logical(&self) -> usize {
        self.assignment.n_logical()
    }

    pub fn meta(&self) -> Option<&GenMeta> {
        self.meta.as_ref()
    }

    pub fn device_fingerprint(&self) -> Option<&str> {
        self.device.as_deref()
    }

    /// Highest physical qubit id referenced, plus one.
    pub fn qubit_span(&self) -> usize {
        self.assignment
            .map()
            .iter()
            .chain(self.assignment.empty_set())
            .copied()
            .chain(self.gates.iter().flat_map(|g| g.touches()))
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("dqas-circuit 1\n");
        let _ = writeln!(out, "device {}", self.device.as_deref().unwrap_or("-"));
        out.push_str("assignment");
        for q in self.assignment.map() {
            let _ = write!(out, " {q}");
        }
        out.push_str("\nempty");
        for q in self.assignment.empty_set() {
            let _ = write!(out, " {q}");
        }
        let _ = writeln!(out, "\nebits {}", self.ebits);
        let _ = writeln!(out, "params {}", self.n_params);
        match &self.meta {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "meta method={} gate_dist={},{},{} p_nonlocal={} seed={}",
                    m.method, m.gate_dist[0], m.gate_dist[1], m.gate_dist[2], m.p_nonlocal, m.seed
                );
            }
            None => out.push_str("meta -\n"),
        }
        let _ = writeln!(out, "gates {}", self.gates.len());
        for g in &self.gates {
            match *g {
                Gate::U { qubit, slot } => {
                    let _ = writeln!(out, "U {qubit} slot={slot}");
                }
                Gate::Cnot {
                    control,
                    target,
                    tag,
                } => {
                    let _ = write!(out, "CNOT {control} {target}");
                    match tag {
                        None => {}
                        Some(NonlocalTag::TeleGate { cycle }) => {
                            let _ = write!(out, " telegate={cycle}");
                        }
                        Some(NonlocalTag::TeleData {
                            cycle,
                            mover,
                            landing,
                        }) => {
                            let _ = write!(out, " teledata={cycle} from={mover} to={landing}");
                        }
                    }
                    out.push('\n');
                }
                Gate::Swap { a, b } => {
                    let _ = writeln!(out, "SWAP {a} {b}");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CircuitError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |key: &str| -> Result<(usize, Vec<&str>), CircuitError> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
            let mut words = line.split_whitespace();
            if words.next() != Some(key) {
                return Err(parse_err(no, format!("expected `{key}`")));
            }
            Ok((no, words.collect()))
        };

        let (no, v) = next("dqas-circuit")?;
        if v != ["1"] {
            return Err(parse_err(no, "unsupported format version"));
        }
        let (no, v) = next("device")?;
        let device = match v.as_slice() {
            ["-"] => None,
            [fp] => Some(fp.to_string()),
            _ => return Err(parse_err(no, "expected one device fingerprint")),
        };
        let (no, v) = next("assignment")?;
        let map = parse_usizes(no, &v)?;
        let (no, v) = next("empty")?;
        let empty: BTreeSet<usize> = parse_usizes(no, &v)?.into_iter().collect();
        let assignment =
            QubitAssignment::from_parts(map, empty).map_err(|e| parse_err(no, e.to_string()))?;
        let (ebits_no, v) = next("ebits")?;
        let ebits = parse_single(ebits_no, &v)?;
        let (params_no, v) = next("params")?;
        let n_params = parse_single(params_no, &v)?;
        let (no, v) = next("meta")?;
        let meta = if v == ["-"] {
            None
        } else {
            Some(parse_meta(no, &v)?)
        };
        let (count_no, v) = next("gates")?;
        let count = parse_single(count_no, &v)?;

        let mut gates = Vec::new();
        for (no, line) in lines {
            gates.push(parse_gate(no, line)?);
        }
        if gates.len() != count {
            return Err(parse_err(
                count_no,
                format!("header says {count} gates, found {}", gates.len()),
            ));
        }
        let mut circuit = Circuit::new(assignment, gates)?;
        if circuit.ebits as usize != ebits {
            return Err(parse_err(ebits_no, "ebit count does not match gate tags"));
        }
        if circuit.n_params != n_params {
            return Err(parse_err(
                params_no,
                "parameter count does not match U gates",
            ));
        }
        circuit.meta = meta;
        circuit.device = device;
        Ok(circuit)
    }
}

fn parse_usizes(line: usize, words: &[&str]) -> Result<Vec<usize>, CircuitError> {
    words
        .iter()
        .map(|w| {
            w.parse()
                .map_err(|_| parse_err(line, format!("bad integer `{w}`")))
        })
        .collect()
}

fn parse_single(line: usize, words: &[&str]) -> Result<usize, CircuitError> {
    match parse_usizes(line, words)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(parse_err(line, "expected one integer")),
    }
}

fn parse_meta(line: usize, words: &[&str]) -> Result<GenMeta, CircuitError> {
    let mut method = None;
    let mut gate_dist = None;
    let mut p_nonlocal = None;
    let mut seed = None;
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected key=value, got `{w}`")))?;
        let bad = || parse_err(line, format!("bad value for `{k}`"));
        match k {
            "method" => method = Some(v.parse::<Method>().map_err(|e| parse_err(line, e))?),
            "gate_dist" => {
                let p: Vec<f64> = v
                    .split(',')
                    .map(|x| x.parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                let arr: [f64; 3] = p.try_into().map_err(|_| bad())?;
                gate_dist = Some(arr);
            }
            "p_nonlocal" => p_nonlocal = Some(v.parse().map_err(|_| bad())?),
            "seed" => seed = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(parse_err(line, format!("unknown meta key `{k}`"))),
        }
    }
    match (method, gate_dist, p_nonlocal, seed) {
        (Some(method), Some(gate_dist), Some(p_nonlocal), Some(seed)) => Ok(GenMeta {
            method,
            gate_dist,
            p_nonlocal,
            seed,
        }),
        _ => Err(parse_err(
            line,
            "meta needs method, gate_dist, p_nonlocal and seed",
        )),
    }
}

fn parse_gate(line: usize, text: &str) -> Result<Gate, CircuitError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let num = |w: &str| -> Result<usize, CircuitError> {
        w.parse()
            .map_err(|_| parse_err(line, format!("bad integer `{w}`")))
    };
    let keyed = |w: &str, key: &str| -> Result<usize, CircuitError> {
        match w.split_once('=') {
            Some((k, v)) if k == key => num(v),
            _ => Err(parse_err(line, format!("expected `{key}=<n>`, got `{w}`"))),
        }
    };
    match words.as_slice() {
        ["U", q, slot] => Ok(Gate::U {
            qubit: num(q)?,
            slot: keyed(slot, "slot")?,
        }),
        ["SWAP", a, b] => Ok(Gate::Swap {
            a: num(a)?,
            b: num(b)?,
        }),
        ["CNOT", c, t] => Ok(Gate::cnot(num(c)?, num(t)?)),
        ["CNOT", c, t, cyc] => Ok(Gate::Cnot {
            control: num(c)?,
            target: num(t)?,
            tag: Some(NonlocalTag::TeleGate {
                cycle: keyed(cyc, "telegate")? as u32,
            }),
        }),
        ["CNOT", c, t, cyc, from, to] => {
            let (control, target) = (num(c)?, num(t)?);
            let landing = keyed(to, "to")?;
            if landing != control && landing != target {
                return Err(parse_err(line, "teledata landing must be a gate endpoint"));
            }
            Ok(Gate::Cnot {
                control,
                target,
                tag: Some(NonlocalTag::TeleData {
                    cycle: u32::try_from(keyed(cyc, "teledata")?)
                        .map_err(|_| parse_err(line, "cycle out of range"))?,
                    mover: keyed(from, "from")?,
                    landing,
                }),
            })
        }
        _ => Err(parse_err(line, format!("unrecognized gate `{text}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Circuit {
        let assignment =
            QubitAssignment::new(vec![0, 1, 2, 3, 6, 8], &[0, 1, 2, 3, 6, 7, 8, 9]).unwrap();
        let gates = vec![
            Gate::U { qubit: 2, slot: 0 },
            Gate::Cnot {
                control: 2,
                target: 6,
                tag: Some(NonlocalTag::TeleGate { cycle: 0 }),
            },
            Gate::U { qubit: 1, slot: 3 },
            Gate::Cnot {
                control: 2,
                target: 6,
                tag: Some(NonlocalTag::TeleGate { cycle: 0 }),
            },
            Gate::Cnot {
                control: 7,
                target: 8,
                tag: Some(NonlocalTag::TeleData {
                    cycle: 1,
                    mover: 2,
                    landing: 7,
                }),
            },
            Gate::Swap { a: 0, b: 1 },
        ];
        Circuit::new(assignment, gates)
            .unwrap()
            .with_meta(GenMeta {
                method: Method::Both,
                gate_dist: [0.4, 0.2, 0.4],
                p_nonlocal: 0.3,
                seed: 99,
            })
            .with_device("abcdef0123456789")
    }

    #[test]
    fn derived_counts() {
        let c = sample();
        assert_eq!(c.n_params(), 6);
        assert_eq!(c.ebits(), 2);
        assert_eq!(c.qubit_span(), 10);
    }

    #[test]
    fn text_round_trip() {
        let c = sample();
        let text = c.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_bad_slots_and_cycles() {
        let a = QubitAssignment::identity(2);
        assert!(matches!(
            Circuit::new(a.clone(), vec![Gate::U { qubit: 0, slot: 1 }]),
            Err(CircuitError::BadSlot { .. })
        ));
        let g = Gate::Cnot {
            control: 0,
            target: 1,
            tag: Some(NonlocalTag::TeleGate { cycle: 1 }),
        };
        assert!(matches!(
            Circuit::new(a.clone(), vec![g]),
            Err(CircuitError::CycleOrder { .. })
        ));
        assert!(matches!(
            Circuit::new(a, vec![Gate::Swap { a: 1, b: 1 }]),
            Err(CircuitError::RepeatedQubit(0))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut text = sample().to_text();
        text = text.replace("SWAP 0 1", "SWAP 0 x");
        let bad_line = text.lines().position(|l| l == "SWAP 0 x").unwrap() + 1;
        match Circuit::from_text(&text) {
            Err(CircuitError::Parse { line, .. }) => assert_eq!(line, bad_line),
            other => panic!("unexpected {other:?}"),
        }
        let truncated: String = sample()
            .to_text()
            .lines()
            .take(12)
            .collect::<Vec<_>>()
            .join("\n");
        assert!(Circuit::from_text(&truncated).is_err());
    }
}
