//! Random generation of distributed circuits.
//!
//! [`Builder`] is the legality state machine: it owns the dynamic VCG state
//! and the physical → logical occupancy, checks every gate against the
//! permissible positions, applies the control-mode exit rules and lowers
//! each accepted gate to [`PhysicalOp`]s. [`Generator`] drives it with random
//! proposals; [`lower`] replays a finished circuit through a fresh builder.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GenMeta, Method, NonlocalTag};
use crate::device::{sample_assignment, DeviceError, DeviceGraph, LinkId, QubitAssignment};
use crate::vcg::{derive_position_sets, PositionSets, VcgError, VcgEvent, VcgState};

/// Consecutive rejected proposals tolerated before generation gives up.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Vcg(#[from] VcgError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gate {gate:?} not permitted: {reason}")]
    NotPermitted { gate: Gate, reason: &'static str },
    #[error("no legal gate found after {attempts} proposals at slot {slot}")]
    Unsatisfiable { slot: usize, attempts: usize },
    #[error("replay diverged at gate #{index}: {reason}")]
    ReplayMismatch { index: usize, reason: String },
    #[error("circuit was generated for device {circuit} but replayed on {device}")]
    WrongDevice { circuit: String, device: String },
}

/// Device-level instruction stream, including communication qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhysicalOp {
    U {
        qubit: usize,
        slot: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Swap {
        a: usize,
        b: usize,
    },
    /// Bell pair on `(near, far)`, then CNOT(control → near), measure `near`
    /// and correct `far` with X.
    CatEntangle {
        control: usize,
        near: usize,
        far: usize,
    },
    /// H on `far`, measure it and correct `control` with Z.
    CatDisentangle {
        control: usize,
        far: usize,
    },
    /// Teleport `mover` to `far` through a Bell pair on `(near, far)`, then
    /// swap it into the empty `landing` qubit.
    Teleport {
        mover: usize,
        near: usize,
        far: usize,
        landing: usize,
    },
}

/// A way to teleport a data qubit next to its partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Route {
    pub link: LinkId,
    pub near: usize,
    pub far: usize,
    pub landing: usize,
}

/// Output of a builder run.
#[derive(Clone, Debug)]
pub struct Lowered {
    pub gates: Vec<Gate>,
    pub ops: Vec<PhysicalOp>,
    /// Final physical → logical occupancy.
    pub occupancy: Vec<Option<usize>>,
    pub ebits: u32,
}

#[derive(Clone, Debug)]
pub struct Builder<'d> {
    device: &'d DeviceGraph,
    sets: &'d PositionSets,
    vcg: VcgState<'d>,
    occupancy: Vec<Option<usize>>,
    gates: Vec<Gate>,
    ops: Vec<PhysicalOp>,
    n_u: usize,
    active_cycle: Vec<Option<u32>>,
    next_cycle: u32,
}

impl<'d> Builder<'d> {
    pub fn new(
        device: &'d DeviceGraph,
        sets: &'d PositionSets,
        assignment: &QubitAssignment,
    ) -> Self {
        Self {
            device,
            sets,
            vcg: VcgState::new(device),
            occupancy: assignment.occupancy(device.num_qubits()),
            gates: Vec::new(),
            ops: Vec::new(),
            n_u: 0,
            active_cycle: vec![None; device.num_qubits()],
            next_cycle: 0,
        }
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

    pub fn vcg(&self) -> &VcgState<'d> {
        &self.vcg
    }

    /// True for data qubits that currently hold no logical qubit.
    pub fn is_empty_qubit(&self, q: usize) -> bool {
        self.occupancy.get(q).is_some_and(|o| o.is_none())
    }

    pub fn occupied(&self, q: usize) -> bool {
        self.occupancy.get(q).is_some_and(|o| o.is_some())
    }

    pub fn occupancy(&self) -> &[Option<usize>] {
        &self.occupancy
    }

    fn absorb(&mut self, events: impl IntoIterator<Item = VcgEvent>) {
        for ev in events {
            match ev {
                VcgEvent::Entangled {
                    control, near, far, ..
                } => self
                    .ops
                    .push(PhysicalOp::CatEntangle { control, near, far }),
                VcgEvent::Disentangled { control, far, .. } => {
                    self.active_cycle[control] = None;
                    self.ops.push(PhysicalOp::CatDisentangle { control, far });
                }
            }
        }
    }

    fn exit_control(&mut self, q: usize) {
        let ev = self.vcg.exit_control_mode(q);
        self.absorb(ev);
    }

    fn require_occupied(&self, gate: Gate, qs: &[usize]) -> Result<(), GenError> {
        if qs.iter().all(|&q| self.occupied(q)) {
            Ok(())
        } else {
            Err(GenError::NotPermitted {
                gate,
                reason: "targets an empty qubit",
            })
        }
    }

    pub fn push_u(&mut self, qubit: usize) -> Result<(), GenError> {
        let slot = 3 * self.n_u;
        let gate = Gate::U { qubit, slot };
        self.require_occupied(gate, &[qubit])?;
        self.exit_control(qubit);
        self.n_u += 1;
        self.ops.push(PhysicalOp::U { qubit, slot });
        self.gates.push(gate);
        Ok(())
    }

    pub fn push_local_cnot(&mut self, control: usize, target: usize) -> Result<(), GenError> {
        let gate = Gate::cnot(control, target);
        if !self.sets.contains_local(control, target) {
            return Err(GenError::NotPermitted {
                gate,
                reason: "not a local position",
            });
        }
        self.require_occupied(gate, &[control, target])?;
        self.exit_control(target);
        self.ops.push(PhysicalOp::Cnot { control, target });
        self.gates.push(gate);
        Ok(())
    }

    pub fn push_swap(&mut self, a: usize, b: usize) -> Result<(), GenError> {
        let gate = Gate::Swap { a, b };
        if !self.sets.contains_swap(a, b) {
            return Err(GenError::NotPermitted {
                gate,
                reason: "not a permissible SWAP position",
            });
        }
        if !self.occupied(a) && !self.occupied(b) {
            return Err(GenError::NotPermitted {
                gate,
                reason: "both participants are empty",
            });
        }
        self.exit_control(a);
        self.exit_control(b);
        self.occupancy.swap(a, b);
        self.ops.push(PhysicalOp::Swap { a, b });
        self.gates.push(gate);
        Ok(())
    }

    /// Nonlocal CNOT through a cat-entangler. Reuses an active virtual edge
    /// for free; otherwise entangles `control` over the link (one ebit).
    /// Returns the ebit cycle the gate belongs to.
    pub fn push_telegate(&mut self, control: usize, target: usize) -> Result<u32, GenError> {
        let probe = Gate::cnot(control, target);
        if !self.sets.telegate.contains(&(control, target)) {
            return Err(GenError::NotPermitted {
                gate: probe,
                reason: "not a TeleGate position",
            });
        }
        self.require_occupied(probe, &[control, target])?;

        let cycle = if self.vcg.has_virtual_edge(control, target) {
            self.active_cycle[control].expect("active edge has a cycle")
        } else {
            let link = self
                .telegate_link(control, target)
                .ok_or(GenError::NotPermitted {
                    gate: probe,
                    reason: "no link joins the two sides",
                })?;
            let events = self.vcg.cat_entangle(control, link)?;
            self.absorb(events);
            let cycle = self.next_cycle;
            self.next_cycle += 1;
            self.active_cycle[control] = Some(cycle);
            cycle
        };
        self.exit_control(target);

        let link = self
            .vcg
            .control_link(control)
            .expect("control is entangled");
        let (_, far) = self.vcg.orient(control, link)?;
        self.ops.push(PhysicalOp::Cnot {
            control: far,
            target,
        });
        self.gates.push(Gate::Cnot {
            control,
            target,
            tag: Some(NonlocalTag::TeleGate { cycle }),
        });
        Ok(cycle)
    }

    fn telegate_link(&self, control: usize, target: usize) -> Option<LinkId> {
        let near = self.device.comm_neighbor(control)?;
        let far = self.device.comm_neighbor(target)?;
        self.device.find_link(near, far)
    }

    /// Landing sites that put `mover` next to `partner` after teleportation.
    pub fn teledata_routes(&self, mover: usize, partner: usize) -> Vec<Route> {
        let Some(near) = self.device.comm_neighbor(mover) else {
            return Vec::new();
        };
        let mut routes = Vec::new();
        for (link, far) in self.device.links_at(near) {
            for &landing in self.device.neighbors(far) {
                if self.device.is_data(landing)
                    && self.is_empty_qubit(landing)
                    && landing != partner
                    && self.device.coupled(landing, partner)
                {
                    routes.push(Route {
                        link,
                        near,
                        far,
                        landing,
                    });
                }
            }
        }
        routes
    }

    /// Nonlocal CNOT on `(control, target)` by teleporting `mover` (one of
    /// the two) along `route`, then running the CNOT locally.
    pub fn push_teledata(
        &mut self,
        control: usize,
        target: usize,
        mover: usize,
        route: Route,
    ) -> Result<u32, GenError> {
        let probe = Gate::cnot(control, target);
        let not_permitted = |reason| GenError::NotPermitted {
            gate: probe,
            reason,
        };
        if !self.sets.teledata.contains(&(control, target)) {
            return Err(not_permitted("not a TeleData position"));
        }
        self.require_occupied(probe, &[control, target])?;
        let partner = if mover == control {
            target
        } else if mover == target {
            control
        } else {
            return Err(not_permitted("mover is not a gate endpoint"));
        };
        let valid = self.device.comm_neighbor(mover) == Some(route.near)
            && self.device.find_link(route.near, route.far) == Some(route.link)
            && self.device.is_data(route.landing)
            && self.is_empty_qubit(route.landing)
            && self.device.coupled(route.landing, route.far)
            && self.device.coupled(route.landing, partner);
        if !valid {
            return Err(not_permitted("no valid teleportation route"));
        }

        let events = self.vcg.release_links_touching(route.link);
        self.absorb(events);
        self.exit_control(partner);
        self.exit_control(mover);
        self.exit_control(route.landing);
        self.vcg.charge_teleport();
        let cycle = self.next_cycle;
        self.next_cycle += 1;

        self.occupancy[route.landing] = self.occupancy[mover].take();
        self.ops.push(PhysicalOp::Teleport {
            mover,
            near: route.near,
            far: route.far,
            landing: route.landing,
        });
        let (c, t) = if mover == control {
            (route.landing, target)
        } else {
            (control, route.landing)
        };
        self.ops.push(PhysicalOp::Cnot {
            control: c,
            target: t,
        });
        self.gates.push(Gate::Cnot {
            control: c,
            target: t,
            tag: Some(NonlocalTag::TeleData {
                cycle,
                mover,
                landing: route.landing,
            }),
        });
        Ok(cycle)
    }

    /// Closes any open cat-entanglers and returns the lowered program.
    pub fn finish(mut self) -> Lowered {
        for q in 0..self.device.num_qubits() {
            self.exit_control(q);
        }
        Lowered {
            gates: self.gates,
            ops: self.ops,
            occupancy: self.occupancy,
            ebits: self.vcg.ebits_consumed(),
        }
    }
}

/// Redundancy filter applied before a gate is added.
///
/// `history` is the circuit so far; `candidate` a TeleData CNOT is checked on
/// its original (pre-teleport) positions. `is_empty` reports the current
/// emptiness of data qubits.
///
/// Rules: a U directly after a U on the same qubit; a CNOT directly after the
/// identical CNOT on both wires; a CNOT whose control has not been touched
/// yet; a SWAP(a, b) repeated with no intervening two-qubit gate or
/// teleportation on a or b; a SWAP of two untouched non-empty qubits.
pub fn is_redundant(history: &[Gate], candidate: &Gate, is_empty: impl Fn(usize) -> bool) -> bool {
    let last_touch = |q: usize| history.iter().rposition(|g| g.touches().contains(&q));
    match *candidate {
        Gate::U { qubit, .. } => {
            matches!(last_touch(qubit).map(|i| &history[i]), Some(Gate::U { .. }))
        }
        Gate::Cnot {
            control, target, ..
        } => {
            let (Some(ic), Some(it)) = (last_touch(control), last_touch(target)) else {
                // Either an untouched control (|0> controls nothing) or a
                // fresh target; only the former is redundant.
                return last_touch(control).is_none();
            };
            ic == it
                && matches!(history[ic], Gate::Cnot { control: c, target: t, .. }
                    if c == control && t == target)
        }
        Gate::Swap { a, b } => {
            if last_touch(a).is_none() && last_touch(b).is_none() && !is_empty(a) && !is_empty(b) {
                return true;
            }
            let same = |g: &Gate| matches!(*g, Gate::Swap { a: x, b: y } if (x == a && y == b) || (x == b && y == a));
            match history.iter().rposition(same) {
                None => false,
                Some(j) => !history[j + 1..].iter().any(|g| {
                    let t = g.touches();
                    (g.is_two_qubit() || g.tag().is_some()) && (t.contains(&a) || t.contains(&b))
                }),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenRequest {
    pub n_gates: usize,
    /// Probabilities of U, CNOT and SWAP.
    pub gate_dist: [f64; 3],
    pub p_nonlocal: f64,
    pub method: Method,
    pub n_logical: usize,
    pub seed: u64,
}

pub struct Generator<'d> {
    device: &'d DeviceGraph,
    sets: PositionSets,
    fingerprint: String,
}

enum Proposal {
    Rejected,
    Accepted,
}

impl<'d> Generator<'d> {
    pub fn new(device: &'d DeviceGraph) -> Self {
        Self {
            device,
            sets: derive_position_sets(device),
            fingerprint: device.fingerprint(),
        }
    }

    pub fn position_sets(&self) -> &PositionSets {
        &self.sets
    }

    pub fn generate(&self, req: &GenRequest) -> Result<Circuit, GenError> {
        let sum: f64 = req.gate_dist.iter().sum();
        if req.gate_dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(GenError::InvalidRequest(format!(
                "gate distribution {:?} is not a probability vector",
                req.gate_dist
            )));
        }
        if !(0.0..=1.0).contains(&req.p_nonlocal) {
            return Err(GenError::InvalidRequest(format!(
                "p_nonlocal {} outside [0, 1]",
                req.p_nonlocal
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let assignment = sample_assignment(self.device, req.n_logical, &mut rng)?;
        let mut builder = Builder::new(self.device, &self.sets, &assignment);
        let mut rejections = 0;
        while builder.len() < req.n_gates {
            match self.propose(&mut builder, req, &mut rng)? {
                Proposal::Accepted => rejections = 0,
                Proposal::Rejected => {
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        return Err(GenError::Unsatisfiable {
                            slot: builder.len(),
                            attempts: rejections,
                        });
                    }
                }
            }
        }
        let lowered = builder.finish();
        let circuit = Circuit::new(assignment, lowered.gates)?
            .with_meta(GenMeta {
                method: req.method,
                gate_dist: req.gate_dist,
                p_nonlocal: req.p_nonlocal,
                seed: req.seed,
            })
            .with_device(self.fingerprint.clone());
        debug_assert_eq!(circuit.ebits(), lowered.ebits);
        Ok(circuit)
    }

    fn propose(
        &self,
        b: &mut Builder<'_>,
        req: &GenRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<Proposal, GenError> {
        let draw: f64 = rng.random();
        let [pu, pc, _] = req.gate_dist;
        if draw < pu {
            let candidates: Vec<usize> = self
                .device
                .data_qubits()
                .into_iter()
                .filter(|&q| b.occupied(q))
                .collect();
            let Some(&q) = candidates.choose(rng) else {
                return Ok(Proposal::Rejected);
            };
            if is_redundant(b.gates(), &Gate::U { qubit: q, slot: 0 }, |x| {
                b.is_empty_qubit(x)
            }) {
                return Ok(Proposal::Rejected);
            }
            b.push_u(q)?;
            Ok(Proposal::Accepted)
        } else if draw < pu + pc {
            if rng.random_bool(req.p_nonlocal) {
                self.propose_nonlocal(b, req.method, rng)
            } else {
                let pairs: Vec<(usize, usize)> = self
                    .sets
                    .local
                    .iter()
                    .copied()
                    .filter(|&(x, y)| b.occupied(x) && b.occupied(y))
                    .collect();
                let Some(&(x, y)) = pairs.choose(rng) else {
                    return Ok(Proposal::Rejected);
                };
                let (c, t) = if rng.random_bool(0.5) { (x, y) } else { (y, x) };
                if is_redundant(b.gates(), &Gate::cnot(c, t), |x| b.is_empty_qubit(x)) {
                    return Ok(Proposal::Rejected);
                }
                b.push_local_cnot(c, t)?;
                Ok(Proposal::Accepted)
            }
        } else {
            let pairs: Vec<(usize, usize)> = self
                .sets
                .swap
                .iter()
                .copied()
                .filter(|&(x, y)| b.occupied(x) || b.occupied(y))
                .collect();
            let Some(&(x, y)) = pairs.choose(rng) else {
                return Ok(Proposal::Rejected);
            };
            if is_redundant(b.gates(), &Gate::Swap { a: x, b: y }, |q| {
                b.is_empty_qubit(q)
            }) {
                return Ok(Proposal::Rejected);
            }
            b.push_swap(x, y)?;
            Ok(Proposal::Accepted)
        }
    }

    fn propose_nonlocal(
        &self,
        b: &mut Builder<'_>,
        method: Method,
        rng: &mut ChaCha8Rng,
    ) -> Result<Proposal, GenError> {
        let pool: BTreeSet<(usize, usize)> = match method {
            Method::TeleGate => self.sets.telegate.clone(),
            Method::TeleData => self.sets.teledata.clone(),
            Method::Both => self
                .sets
                .telegate
                .union(&self.sets.teledata)
                .copied()
                .collect(),
        };
        let pairs: Vec<(usize, usize)> = pool
            .into_iter()
            .filter(|&(x, y)| b.occupied(x) && b.occupied(y))
            .collect();
        let Some(&(c, t)) = pairs.choose(rng) else {
            return Ok(Proposal::Rejected);
        };
        if is_redundant(b.gates(), &Gate::cnot(c, t), |x| b.is_empty_qubit(x)) {
            return Ok(Proposal::Rejected);
        }

        let in_tg = method != Method::TeleData && self.sets.telegate.contains(&(c, t));
        let in_td = method != Method::TeleGate && self.sets.teledata.contains(&(c, t));
        let use_telegate = if !in_tg {
            false
        } else if b.vcg().has_virtual_edge(c, t) {
            true
        } else if in_td && self.has_route(b, c, t) {
            rng.random_bool(0.5)
        } else {
            true
        };

        if use_telegate {
            b.push_telegate(c, t)?;
            return Ok(Proposal::Accepted);
        }
        if !in_td {
            return Ok(Proposal::Rejected);
        }
        let movers: Vec<(usize, Vec<Route>)> = [(c, t), (t, c)]
            .into_iter()
            .map(|(m, p)| (m, b.teledata_routes(m, p)))
            .filter(|(_, r)| !r.is_empty())
            .collect();
        let Some((mover, routes)) = movers.choose(rng) else {
            return Ok(Proposal::Rejected);
        };
        let route = *routes.choose(rng).expect("non-empty routes");
        b.push_teledata(c, t, *mover, route)?;
        Ok(Proposal::Accepted)
    }

    fn has_route(&self, b: &Builder<'_>, c: usize, t: usize) -> bool {
        !b.teledata_routes(c, t).is_empty() || !b.teledata_routes(t, c).is_empty()
    }
}

/// Replays `circuit` through a fresh builder on `device`, checking every gate
/// is legal where it stands, and returns the physical instruction stream.
pub fn lower(device: &DeviceGraph, circuit: &Circuit) -> Result<Lowered, GenError> {
    if let Some(fp) = circuit.device_fingerprint() {
        let here = device.fingerprint();
        if fp != here {
            return Err(GenError::WrongDevice {
                circuit: fp.to_string(),
                device: here,
            });
        }
    }
    let sets = derive_position_sets(device);
    let mut b = Builder::new(device, &sets, circuit.assignment());
    for (index, gate) in circuit.gates().iter().enumerate() {
        let mismatch = |reason: String| GenError::ReplayMismatch { index, reason };
        match *gate {
            Gate::U { qubit, .. } => b.push_u(qubit)?,
            Gate::Swap { a, b: y } => b.push_swap(a, y)?,
            Gate::Cnot {
                control,
                target,
                tag: None,
            } => b.push_local_cnot(control, target)?,
            Gate::Cnot {
                control,
                target,
                tag: Some(NonlocalTag::TeleGate { cycle }),
            } => {
                let got = b.push_telegate(control, target)?;
                if got != cycle {
                    return Err(mismatch(format!(
                        "recorded ebit cycle {cycle}, replay used {got}"
                    )));
                }
            }
            Gate::Cnot {
                control,
                target,
                tag:
                    Some(NonlocalTag::TeleData {
                        cycle,
                        mover,
                        landing,
                    }),
            } => {
                let (c, t) = if control == landing {
                    (mover, target)
                } else if target == landing {
                    (control, mover)
                } else {
                    return Err(mismatch("landing qubit is not a gate endpoint".into()));
                };
                let partner = if c == mover { t } else { c };
                let route = b
                    .teledata_routes(mover, partner)
                    .into_iter()
                    .find(|r| r.landing == landing)
                    .ok_or_else(|| mismatch(format!("no route from {mover} to {landing}")))?;
                let got = b.push_teledata(c, t, mover, route)?;
                if got != cycle {
                    return Err(mismatch(format!(
                        "recorded ebit cycle {cycle}, replay used {got}"
                    )));
                }
            }
        }
        if b.gates().last() != Some(gate) {
            return Err(mismatch("replayed gate differs from record".into()));
        }
    }
    let lowered = b.finish();
    if lowered.ebits != circuit.ebits() {
        return Err(GenError::ReplayMismatch {
            index: circuit.len(),
            reason: format!("ebits {} vs recorded {}", lowered.ebits, circuit.ebits()),
        });
    }
    Ok(lowered)
}
