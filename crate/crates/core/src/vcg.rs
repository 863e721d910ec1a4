//! Virtual connectivity graph.
//!
//! The static part is the four permissible-position sets derived from the
//! device: local two-qubit positions, SWAP positions, TeleGate (virtual edge)
//! positions and TeleData positions. The dynamic part tracks which data qubits
//! are in control mode after a cat-entangler, the virtual edges that gives
//! them, which link each one occupies, and the ebit bill.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::device::{DeviceGraph, LinkId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VcgError {
    #[error("qubit {0} is not a data qubit")]
    NotData(usize),
    #[error("qubit {control} is not coupled to either endpoint of link {link:?}")]
    NotAdjacentToLink { control: usize, link: LinkId },
    #[error("qubit {0} is not in control mode")]
    NotInControlMode(usize),
    #[error("far endpoint {far} of link {link:?} has no data neighbors")]
    NoRemoteTargets { link: LinkId, far: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PositionSets {
    /// Unordered data-qubit couplings, stored `(min, max)`.
    pub local: BTreeSet<(usize, usize)>,
    /// Subset of `local` whose SWAP changes connectivity.
    pub swap: BTreeSet<(usize, usize)>,
    /// Ordered `(control, target)` pairs reachable through a cat-entangler.
    pub telegate: BTreeSet<(usize, usize)>,
    /// Ordered pairs reachable by teleporting one endpoint across a link.
    pub teledata: BTreeSet<(usize, usize)>,
}

impl PositionSets {
    pub fn contains_local(&self, a: usize, b: usize) -> bool {
        self.local.contains(&(a.min(b), a.max(b)))
    }

    pub fn contains_swap(&self, a: usize, b: usize) -> bool {
        self.swap.contains(&(a.min(b), a.max(b)))
    }

    /// Plain-text dump, one set per block, used in tests and debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, set) in [
            ("local", &self.local),
            ("swap", &self.swap),
            ("telegate", &self.telegate),
            ("teledata", &self.teledata),
        ] {
            let _ = write!(out, "{name} {}:", set.len());
            for (a, b) in set {
                let _ = write!(out, " {a}-{b}");
            }
            out.push('\n');
        }
        out
    }
}

fn data_neighbors(device: &DeviceGraph, x: usize) -> impl Iterator<Item = usize> + '_ {
    device
        .neighbors(x)
        .iter()
        .copied()
        .filter(|&y| device.is_data(y))
}

/// Data qubits two coupling hops from `x`, excluding `x`.
fn second_neighbors(device: &DeviceGraph, x: usize) -> BTreeSet<usize> {
    device
        .neighbors(x)
        .iter()
        .flat_map(|&y| device.neighbors(y).iter().copied())
        .filter(|&z| z != x && device.is_data(z))
        .collect()
}

pub fn derive_position_sets(device: &DeviceGraph) -> PositionSets {
    let local: BTreeSet<(usize, usize)> = device
        .couplings()
        .iter()
        .copied()
        .filter(|&(a, b)| device.is_data(a) && device.is_data(b))
        .collect();

    let mut local_nbrs = vec![BTreeSet::new(); device.num_qubits()];
    for &(a, b) in &local {
        local_nbrs[a].insert(b);
        local_nbrs[b].insert(a);
    }
    let swap = local
        .iter()
        .copied()
        .filter(|&(a, b)| {
            let mut ra = local_nbrs[a].clone();
            ra.remove(&b);
            let mut rb = local_nbrs[b].clone();
            rb.remove(&a);
            ra != rb
        })
        .collect();

    let mut telegate = BTreeSet::new();
    let mut teledata = BTreeSet::new();
    for &(a, b) in device.links() {
        for (near, far) in [(a, b), (b, a)] {
            let near1: Vec<usize> = data_neighbors(device, near).collect();
            let far1: Vec<usize> = data_neighbors(device, far).collect();
            for &c in &near1 {
                for &t in &far1 {
                    telegate.insert((c, t));
                }
            }
            for &c in &second_neighbors(device, near) {
                for &t in &far1 {
                    teledata.insert((c, t));
                }
            }
            for &c in &near1 {
                for &t in &second_neighbors(device, far) {
                    teledata.insert((c, t));
                }
            }
        }
    }

    PositionSets {
        local,
        swap,
        telegate,
        teledata,
    }
}

/// Side effects of a state transition, in the order they happen. The circuit
/// lowering turns these into cat-entangler/disentangler primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcgEvent {
    Entangled {
        control: usize,
        link: LinkId,
        near: usize,
        far: usize,
    },
    Disentangled {
        control: usize,
        link: LinkId,
        near: usize,
        far: usize,
    },
}

#[derive(Clone, Debug)]
pub struct VcgState<'d> {
    device: &'d DeviceGraph,
    virtual_edges: BTreeSet<(usize, usize)>,
    /// Per qubit: link it currently holds a cat-entangler on.
    control_link: Vec<Option<LinkId>>,
    /// Per link: the control qubit that owns it.
    link_owner: Vec<Option<usize>>,
    ebits: u32,
}

impl<'d> VcgState<'d> {
    pub fn new(device: &'d DeviceGraph) -> Self {
        Self {
            device,
            virtual_edges: BTreeSet::new(),
            control_link: vec![None; device.num_qubits()],
            link_owner: vec![None; device.links().len()],
            ebits: 0,
        }
    }

    pub fn device(&self) -> &'d DeviceGraph {
        self.device
    }

    pub fn virtual_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.virtual_edges
    }

    pub fn has_virtual_edge(&self, control: usize, target: usize) -> bool {
        self.virtual_edges.contains(&(control, target))
    }

    pub fn control_mode(&self, q: usize) -> bool {
        self.control_link[q].is_some()
    }

    pub fn control_link(&self, q: usize) -> Option<LinkId> {
        self.control_link[q]
    }

    pub fn link_owner(&self, link: LinkId) -> Option<usize> {
        self.link_owner[link.0]
    }

    pub fn ebits_consumed(&self) -> u32 {
        self.ebits
    }

    /// Returns `(near, far)` endpoints of `link` as seen from data qubit `q`.
    pub fn orient(&self, q: usize, link: LinkId) -> Result<(usize, usize), VcgError> {
        let (a, b) = self.device.link(link);
        if self.device.coupled(q, a) {
            Ok((a, b))
        } else if self.device.coupled(q, b) {
            Ok((b, a))
        } else {
            Err(VcgError::NotAdjacentToLink { control: q, link })
        }
    }

    /// Frees `link` if a cat-entangler occupies it.
    pub fn release_link(&mut self, link: LinkId) -> Option<VcgEvent> {
        let owner = self.link_owner[link.0]?;
        Some(
            self.cat_disentangle(owner)
                .expect("link owner is in control mode"),
        )
    }

    /// Frees `link` and every other link sharing one of its communication
    /// qubits, since a new Bell pair overwrites both endpoints.
    pub fn release_links_touching(&mut self, link: LinkId) -> Vec<VcgEvent> {
        let (a, b) = self.device.link(link);
        let device = self.device;
        let mut events = Vec::new();
        for (i, &(x, y)) in device.links().iter().enumerate() {
            if x == a || x == b || y == a || y == b {
                events.extend(self.release_link(LinkId(i)));
            }
        }
        events
    }

    /// Takes `q` out of control mode if it is in it.
    pub fn exit_control_mode(&mut self, q: usize) -> Option<VcgEvent> {
        if self.control_mode(q) {
            Some(self.cat_disentangle(q).expect("checked control mode"))
        } else {
            None
        }
    }

    /// Cat-entangler on `control` over `link`. An occupied link is released
    /// first, as is any cat-entangler `control` already holds. Costs one ebit.
    pub fn cat_entangle(
        &mut self,
        control: usize,
        link: LinkId,
    ) -> Result<Vec<VcgEvent>, VcgError> {
        if !self.device.is_data(control) {
            return Err(VcgError::NotData(control));
        }
        let (near, far) = self.orient(control, link)?;
        if data_neighbors(self.device, far).next().is_none() {
            return Err(VcgError::NoRemoteTargets { link, far });
        }
        let mut events = Vec::new();
        events.extend(self.exit_control_mode(control));
        events.extend(self.release_links_touching(link));

        let device = self.device;
        for t in data_neighbors(device, far) {
            self.virtual_edges.insert((control, t));
        }
        self.control_link[control] = Some(link);
        self.link_owner[link.0] = Some(control);
        self.ebits += 1;
        events.push(VcgEvent::Entangled {
            control,
            link,
            near,
            far,
        });
        Ok(events)
    }

    /// Cat-disentangler: removes the virtual edges of `control` and frees its
    /// link. The ebit was already charged by the entangler.
    pub fn cat_disentangle(&mut self, control: usize) -> Result<VcgEvent, VcgError> {
        let link = self
            .control_link
            .get(control)
            .copied()
            .flatten()
            .ok_or(VcgError::NotInControlMode(control))?;
        let (near, far) = self.orient(control, link)?;
        self.virtual_edges.retain(|&(c, _)| c != control);
        self.control_link[control] = None;
        self.link_owner[link.0] = None;
        Ok(VcgEvent::Disentangled {
            control,
            link,
            near,
            far,
        })
    }

    /// Bills one ebit for a teleportation.
    pub fn charge_teleport(&mut self) {
        self.ebits += 1;
    }

    /// Checks the bookkeeping invariants; used by property tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        for q in 0..self.control_link.len() {
            let has_edges = self.virtual_edges.iter().any(|&(c, _)| c == q);
            if has_edges != self.control_mode(q) {
                return Err(format!("qubit {q}: edges {has_edges} vs control mode"));
            }
            if let Some(link) = self.control_link[q] {
                if self.link_owner[link.0] != Some(q) {
                    return Err(format!("qubit {q} holds {link:?} but is not its owner"));
                }
            }
        }
        for (i, owner) in self.link_owner.iter().enumerate() {
            if let Some(o) = owner {
                if self.control_link[*o] != Some(LinkId(i)) {
                    return Err(format!("link {i} owner {o} disagrees"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link0() -> LinkId {
        LinkId(0)
    }

    #[test]
    fn fig1_worked_memberships() {
        let d = DeviceGraph::yorktown_pair();
        let s = derive_position_sets(&d);
        for (c, t) in [(2, 6), (2, 7), (3, 6), (3, 7)] {
            assert!(s.telegate.contains(&(c, t)));
            assert!(s.telegate.contains(&(t, c)));
        }
        assert_eq!(s.telegate.len(), 8);
        assert!(s.contains_local(0, 1));
        assert!(!s.contains_swap(0, 1));
        assert!(!s.contains_swap(8, 9));
        assert!(s.contains_swap(2, 3));
        assert!(s.teledata.contains(&(2, 8)));
        assert!(s.teledata.contains(&(8, 2)));
        assert!(s.local.iter().all(|&(a, b)| d.is_data(a) && d.is_data(b)));
        assert!(s.swap.is_subset(&s.local));
    }

    #[test]
    fn no_links_means_no_nonlocal_positions() {
        let d = DeviceGraph::new(
            vec![
                (crate::device::Role::Data, 0),
                (crate::device::Role::Data, 0),
                (crate::device::Role::Data, 0),
            ],
            [(0, 1), (1, 2)],
            [],
        )
        .unwrap();
        let s = derive_position_sets(&d);
        assert!(s.telegate.is_empty() && s.teledata.is_empty());
        assert_eq!(s.local.len(), 2);
    }

    #[test]
    fn entangle_adds_edges_and_enters_control_mode() {
        let d = DeviceGraph::yorktown_pair();
        let mut st = VcgState::new(&d);
        st.cat_entangle(2, link0()).unwrap();
        let edges: Vec<_> = st.virtual_edges().iter().copied().collect();
        assert_eq!(edges, vec![(2, 6), (2, 7)]);
        assert!(st.control_mode(2));
        assert_eq!(st.ebits_consumed(), 1);
        st.check_invariants().unwrap();
    }

    #[test]
    fn entangle_on_busy_link_releases_owner_first() {
        let d = DeviceGraph::yorktown_pair();
        let mut st = VcgState::new(&d);
        st.cat_entangle(2, link0()).unwrap();
        let events = st.cat_entangle(3, link0()).unwrap();
        assert!(matches!(
            events[0],
            VcgEvent::Disentangled { control: 2, .. }
        ));
        let edges: Vec<_> = st.virtual_edges().iter().copied().collect();
        assert_eq!(edges, vec![(3, 6), (3, 7)]);
        assert!(!st.control_mode(2));
        assert_eq!(st.ebits_consumed(), 2);
        st.check_invariants().unwrap();
    }

    #[test]
    fn entangle_requires_adjacency() {
        let d = DeviceGraph::yorktown_pair();
        let mut st = VcgState::new(&d);
        assert_eq!(
            st.cat_entangle(0, link0()),
            Err(VcgError::NotAdjacentToLink {
                control: 0,
                link: link0()
            })
        );
        assert_eq!(st.ebits_consumed(), 0);
    }

    #[test]
    fn disentangle_clears_and_frees_link() {
        let d = DeviceGraph::yorktown_pair();
        let mut st = VcgState::new(&d);
        assert_eq!(st.cat_disentangle(2), Err(VcgError::NotInControlMode(2)));
        st.cat_entangle(2, link0()).unwrap();
        st.cat_disentangle(2).unwrap();
        assert!(st.virtual_edges().is_empty());
        assert_eq!(st.link_owner(link0()), None);
        st.cat_entangle(2, link0()).unwrap();
        assert_eq!(st.ebits_consumed(), 2);
    }

    #[test]
    fn dump_lists_every_set() {
        let s = derive_position_sets(&DeviceGraph::yorktown_pair());
        let text = s.to_text();
        assert!(text.starts_with("local 8:"));
        assert!(text.contains("telegate 8:"));
        assert!(text.contains(" 2-8"));
    }
}
