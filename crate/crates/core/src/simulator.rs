//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of the basis index everywhere.
//!
//! Two routes compute a circuit's output. [`apply_circuit`] works on the
//! logical register only: a TeleGate CNOT is a plain CNOT on its recorded
//! endpoints, and SWAPs and teleportations just move logical qubits between
//! physical positions. [`apply_physical`] runs the lowered device program on
//! every device qubit, with Bell pairs, cat-entanglers and teleportation made
//! unitary by deferring each measurement into a controlled correction.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, NonlocalTag};
use crate::circuitgen::{lower, GenError, PhysicalOp};
use crate::device::DeviceGraph;
use crate::hamiltonian::PauliHamiltonian;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("register of {0} qubits is too large for dense simulation")]
    TooLarge(usize),
    #[error("gate #{index} acts on qubit {qubit}, which holds no logical qubit")]
    EmptyWire { index: usize, qubit: usize },
    #[error(
        "qubit {qubit} is entangled with the rest of the register (overlap defect {defect:.3e})"
    )]
    Entangled { qubit: usize, defect: f64 },
    #[error(transparent)]
    Lowering(#[from] GenError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    /// Wraps raw amplitudes; length must be a power of two. Not normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(SimError::Dimension {
                expected: n,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        for a in &mut self.amps {
            *a /= n;
        }
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    /// Applies a 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_1q(&mut self, m: &[Complex64; 4], q: usize) {
        let bit = self.mask(q);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (self.mask(control), self.mask(target));
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let m = self.mask(a) | self.mask(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let (ab, bb) = (self.mask(a), self.mask(b));
        for i in 0..self.amps.len() {
            if i & ab != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ab) | bb);
            }
        }
    }

    pub fn apply_h(&mut self, q: usize) {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.apply_1q(&[h, h, h, -h], q);
    }

    /// Resets qubit `q` to |0>, provided it is in a product state with the
    /// rest of the register (true for measured-and-corrected ancillas).
    pub fn reset_product(&mut self, q: usize) -> Result<(), SimError> {
        let bit = self.mask(q);
        let mut n0 = 0.0;
        let mut n1 = 0.0;
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                n0 += a0.norm_sqr();
                n1 += a1.norm_sqr();
                overlap += a0.conj() * a1;
            }
        }
        // Cauchy-Schwarz is tight exactly when the two branches are parallel.
        let defect = n0 * n1 - overlap.norm_sqr();
        if defect > 1e-9 {
            return Err(SimError::Entangled { qubit: q, defect });
        }
        let use_one = n1 > n0;
        let scale = 1.0 / (if use_one { n1 } else { n0 }).sqrt();
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let src = if use_one {
                    self.amps[i | bit]
                } else {
                    self.amps[i]
                };
                self.amps[i] = src * scale;
                self.amps[i | bit] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(())
    }
}

/// `U(θ, φ, λ)` as `[m00, m01, m10, m11]`.
pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> [Complex64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        Complex64::new(c, 0.0),
        -Complex64::from_polar(s, lambda),
        Complex64::from_polar(s, phi),
        Complex64::from_polar(c, phi + lambda),
    ]
}

/// Partial derivatives of [`u_matrix`] with respect to θ, φ and λ.
pub fn u_derivatives(theta: f64, phi: f64, lambda: f64) -> [[Complex64; 4]; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    let i = Complex64::i();
    let zero = Complex64::new(0.0, 0.0);
    let e_l = Complex64::from_polar(1.0, lambda);
    let e_p = Complex64::from_polar(1.0, phi);
    let e_pl = Complex64::from_polar(1.0, phi + lambda);
    [
        [
            Complex64::new(-s / 2.0, 0.0),
            -e_l * (c / 2.0),
            e_p * (c / 2.0),
            -e_pl * (s / 2.0),
        ],
        [zero, zero, i * e_p * s, i * e_pl * c],
        [zero, -i * e_l * s, zero, i * e_pl * c],
    ]
}

pub fn dagger(m: &[Complex64; 4]) -> [Complex64; 4] {
    [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalOp {
    U { wire: usize, slot: usize },
    Cnot { control: usize, target: usize },
}

/// A circuit compiled onto its logical register.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalProgram {
    pub n_qubits: usize,
    pub n_params: usize,
    pub ops: Vec<LogicalOp>,
}

impl LogicalProgram {
    pub fn compile(circuit: &Circuit) -> Result<Self, SimError> {
        let mut occ = circuit.assignment().occupancy(circuit.qubit_span());
        let mut ops = Vec::with_capacity(circuit.len());
        for (index, gate) in circuit.gates().iter().enumerate() {
            let wire = |occ: &[Option<usize>], qubit: usize| {
                occ[qubit].ok_or(SimError::EmptyWire { index, qubit })
            };
            match *gate {
                Gate::U { qubit, slot } => ops.push(LogicalOp::U {
                    wire: wire(&occ, qubit)?,
                    slot,
                }),
                Gate::Swap { a, b } => occ.swap(a, b),
                Gate::Cnot {
                    control,
                    target,
                    tag,
                } => {
                    if let Some(NonlocalTag::TeleData { mover, landing, .. }) = tag {
                        occ[landing] = Some(wire(&occ, mover)?);
                        occ[mover] = None;
                    }
                    ops.push(LogicalOp::Cnot {
                        control: wire(&occ, control)?,
                        target: wire(&occ, target)?,
                    });
                }
            }
        }
        Ok(Self {
            n_qubits: circuit.n_logical(),
            n_params: circuit.n_params(),
            ops,
        })
    }

    fn check(&self, params: &[f64], state: &Statevector) -> Result<(), SimError> {
        if params.len() != self.n_params {
            return Err(SimError::ParamCount {
                expected: self.n_params,
                got: params.len(),
            });
        }
        if state.n != self.n_qubits {
            return Err(SimError::Dimension {
                expected: self.n_qubits,
                got: state.n,
            });
        }
        Ok(())
    }

    pub fn apply(&self, params: &[f64], state: &mut Statevector) -> Result<(), SimError> {
        self.check(params, state)?;
        for op in &self.ops {
            match *op {
                LogicalOp::U { wire, slot } => {
                    let m = u_matrix(params[slot], params[slot + 1], params[slot + 2]);
                    state.apply_1q(&m, wire);
                }
                LogicalOp::Cnot { control, target } => state.apply_cnot(control, target),
            }
        }
        Ok(())
    }

    /// Output state from |0...0>.
    pub fn run(&self, params: &[f64]) -> Result<Statevector, SimError> {
        let mut s = Statevector::zero(self.n_qubits);
        self.apply(params, &mut s)?;
        Ok(s)
    }

    /// Energy and its exact gradient by reverse-mode (adjoint) differentiation.
    pub fn energy_and_gradient(
        &self,
        params: &[f64],
        h: &PauliHamiltonian,
    ) -> Result<(f64, Vec<f64>), SimError> {
        if h.n_qubits() != self.n_qubits {
            return Err(SimError::Dimension {
                expected: self.n_qubits,
                got: h.n_qubits(),
            });
        }
        let mut psi = self.run(params)?;
        let mut lambda = Statevector {
            n: psi.n,
            amps: h.apply(psi.amplitudes()),
        };
        let energy = psi.inner(&lambda).re;
        let mut grad = vec![0.0; self.n_params];

        let mut scratch = psi.clone();
        for op in self.ops.iter().rev() {
            match *op {
                LogicalOp::Cnot { control, target } => {
                    psi.apply_cnot(control, target);
                    lambda.apply_cnot(control, target);
                }
                LogicalOp::U { wire, slot } => {
                    let (t, p, l) = (params[slot], params[slot + 1], params[slot + 2]);
                    let inv = dagger(&u_matrix(t, p, l));
                    psi.apply_1q(&inv, wire);
                    for (k, d) in u_derivatives(t, p, l).iter().enumerate() {
                        scratch.amps.copy_from_slice(&psi.amps);
                        scratch.apply_1q(d, wire);
                        grad[slot + k] = 2.0 * lambda.inner(&scratch).re;
                    }
                    lambda.apply_1q(&inv, wire);
                }
            }
        }
        Ok((energy, grad))
    }
}

pub fn apply_circuit(
    circuit: &Circuit,
    params: &[f64],
    initial: &Statevector,
) -> Result<Statevector, SimError> {
    let program = LogicalProgram::compile(circuit)?;
    let mut state = initial.clone();
    program.apply(params, &mut state)?;
    Ok(state)
}

/// `<ψ|H|ψ>`.
pub fn expectation(state: &Statevector, h: &PauliHamiltonian) -> Result<f64, SimError> {
    if state.n != h.n_qubits() {
        return Err(SimError::Dimension {
            expected: h.n_qubits(),
            got: state.n,
        });
    }
    Ok(h.expectation(state.amplitudes()))
}

fn bell_pair(s: &mut Statevector, a: usize, b: usize) {
    s.apply_h(a);
    s.apply_cnot(a, b);
}

/// Executes the lowered device program of `circuit` from |0...0> on every
/// device qubit, then returns the state of the logical register read off the
/// final physical positions. Every other qubit must end in a product state.
pub fn apply_physical(
    circuit: &Circuit,
    params: &[f64],
    device: &DeviceGraph,
) -> Result<Statevector, SimError> {
    if params.len() != circuit.n_params() {
        return Err(SimError::ParamCount {
            expected: circuit.n_params(),
            got: params.len(),
        });
    }
    let n = device.num_qubits();
    if n > MAX_QUBITS {
        return Err(SimError::TooLarge(n));
    }
    let lowered = lower(device, circuit)?;
    let mut s = Statevector::zero(n);
    for op in &lowered.ops {
        match *op {
            PhysicalOp::U { qubit, slot } => {
                let m = u_matrix(params[slot], params[slot + 1], params[slot + 2]);
                s.apply_1q(&m, qubit);
            }
            PhysicalOp::Cnot { control, target } => s.apply_cnot(control, target),
            PhysicalOp::Swap { a, b } => s.apply_swap(a, b),
            PhysicalOp::CatEntangle { control, near, far } => {
                bell_pair(&mut s, near, far);
                s.apply_cnot(control, near);
                // Measuring `near` then X on `far` if 1, deferred.
                s.apply_cnot(near, far);
                s.reset_product(near)?;
            }
            PhysicalOp::CatDisentangle { control, far } => {
                s.apply_h(far);
                // Measuring `far` then Z on `control` if 1, deferred.
                s.apply_cz(far, control);
                s.reset_product(far)?;
            }
            PhysicalOp::Teleport {
                mover,
                near,
                far,
                landing,
            } => {
                bell_pair(&mut s, near, far);
                s.apply_cnot(mover, near);
                s.apply_h(mover);
                s.apply_cnot(near, far);
                s.apply_cz(mover, far);
                s.reset_product(near)?;
                s.reset_product(mover)?;
                s.apply_swap(far, landing);
                s.reset_product(far)?;
            }
        }
    }

    let n_logical = circuit.n_logical();
    let mut position = vec![usize::MAX; n_logical];
    for (q, occ) in lowered.occupancy.iter().enumerate() {
        match occ {
            Some(l) => position[*l] = q,
            None => s.reset_product(q)?,
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); 1 << n_logical];
    for (li, amp) in out.iter_mut().enumerate() {
        let mut pi = 0usize;
        for (l, &q) in position.iter().enumerate() {
            if li & (1 << (n_logical - 1 - l)) != 0 {
                pi |= 1 << (n - 1 - q);
            }
        }
        *amp = s.amps[pi];
    }
    Ok(Statevector {
        n: n_logical,
        amps: out,
    })
}
