//! Distributed quantum architecture search.
//!
//! A device is a set of QPUs joined by quantum links ([`device`]). Random
//! distributed circuits are generated on it with TeleGate or TeleData nonlocal
//! CNOTs ([`vcg`], [`circuitgen`]), ranked by two training-free proxies
//! ([`dag`], [`expressibility`]) and the survivors are trained as VQE
//! ansätze ([`vqe`]). [`pipeline`] strings the stages together with on-disk,
//! resumable scoreboards.

pub mod circuit;
pub mod circuitgen;
pub mod dag;
pub mod device;
pub mod expressibility;
pub mod hamiltonian;
pub mod pipeline;
pub mod rng;
pub mod simulator;
pub mod vcg;
pub mod vqe;
