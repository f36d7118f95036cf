//! Composite basis for the two-atom cavity model.
//!
//! A basis state is a tuple
//!
//! ```text
//! |p12u, p12d, p01u, p01d, ph, bond, nuclei, el_up, el_dn>
//! ```
//!
//! where `p12u`/`p12d` count photons in the two ionization modes (one per
//! electron spin), `p01u`/`p01d` count photons in the two excitation modes,
//! and `ph` counts phonons in the vibrational mode that carries the
//! covalent-bond energy. `bond = 0` means the bond is formed, `1` broken;
//! `nuclei = 0` means both nuclei sit in the same cavity, `1` in different
//! cavities. `el_up`/`el_dn` give the orbital of the spin-up/spin-down
//! electron.
//!
//! Two occupancy rules shape the electron registers: at most one electron may
//! occupy the top orbital at a time, and at most one electron may be detached
//! (absorbed by the environment or an anode) at a time. Both rules are
//! global, so 14 of the 16 orbital pairs are admissible.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use crate::Error;

/// Orbital of a single electron. `Detached` marks an electron that has left
/// the molecule; it keeps the energy of the top orbital so that detachment
/// itself is energy-neutral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElectronLevel {
    /// Ground orbital.
    Phi0,
    /// First excited orbital.
    Phi1,
    /// Top orbital; the only one an electron can detach from.
    Phi2,
    /// Electron removed from the molecule.
    Detached,
}

impl ElectronLevel {
    pub const ALL: [ElectronLevel; 4] = [
        ElectronLevel::Phi0,
        ElectronLevel::Phi1,
        ElectronLevel::Phi2,
        ElectronLevel::Detached,
    ];

    /// Excitation quanta the orbital holds: one per absorbed excitation
    /// photon, one more per absorbed ionization photon. A detached electron
    /// keeps both quanta.
    pub fn quanta(self) -> u8 {
        match self {
            ElectronLevel::Phi0 => 0,
            ElectronLevel::Phi1 => 1,
            ElectronLevel::Phi2 | ElectronLevel::Detached => 2,
        }
    }

    /// True for orbitals that have absorbed an ionization-mode photon.
    pub fn holds_ionization_quantum(self) -> bool {
        matches!(self, ElectronLevel::Phi2 | ElectronLevel::Detached)
    }

    pub fn label(self) -> &'static str {
        match self {
            ElectronLevel::Phi0 => "Phi0",
            ElectronLevel::Phi1 => "Phi1",
            ElectronLevel::Phi2 => "Phi2",
            ElectronLevel::Detached => "Detached",
        }
    }
}

/// True when the two electron orbitals may coexist: at most one electron in
/// the top orbital, at most one detached.
pub fn electron_pair_allowed(up: ElectronLevel, dn: ElectronLevel) -> bool {
    !(up == ElectronLevel::Phi2 && dn == ElectronLevel::Phi2)
        && !(up == ElectronLevel::Detached && dn == ElectronLevel::Detached)
}

/// One basis vector of the composite space. Field order defines the
/// lexicographic basis order (derived `Ord`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    /// Ionization-mode photons, spin-up channel.
    pub p12u: u8,
    /// Ionization-mode photons, spin-down channel.
    pub p12d: u8,
    /// Excitation-mode photons, spin-up channel.
    pub p01u: u8,
    /// Excitation-mode photons, spin-down channel.
    pub p01d: u8,
    /// Phonons in the vibrational mode.
    pub ph: u8,
    /// Covalent bond: 0 formed, 1 broken.
    pub bond: u8,
    /// Nuclei separation: 0 same cavity, 1 different cavities.
    pub nuclei: u8,
    /// Spin-up electron orbital.
    pub el_up: ElectronLevel,
    /// Spin-down electron orbital.
    pub el_dn: ElectronLevel,
}

impl BasisState {
    /// Conserved charge four-tuple `(nu, nd, mu, md)`.
    ///
    /// `nu`/`nd` count all excitation quanta per spin channel (photons plus
    /// orbital quanta); `mu`/`md` count ionization quanta per spin channel
    /// (ionization photons plus one if the electron passed the top orbital).
    /// Every Hamiltonian term preserves the tuple and every jump operator
    /// shifts it by a state-independent amount, so the density matrix never
    /// develops observable-relevant coherence between different tuples. The
    /// evolution engine uses this to block-diagonalize.
    pub fn charges(&self) -> [u8; 4] {
        let nu = self.p12u + self.p01u + self.el_up.quanta();
        let nd = self.p12d + self.p01d + self.el_dn.quanta();
        let mu = self.p12u + self.el_up.holds_ionization_quantum() as u8;
        let md = self.p12d + self.el_dn.holds_ionization_quantum() as u8;
        [nu, nd, mu, md]
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "|{}{}{}{}{},{},{},{},{}>",
            self.p12u,
            self.p12d,
            self.p01u,
            self.p01d,
            self.ph,
            self.bond,
            self.nuclei,
            self.el_up.label(),
            self.el_dn.label()
        )
    }
}

/// Truncation caps for the boson registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoffs {
    /// Maximum photon count in each ionization mode.
    pub p12: u8,
    /// Maximum photon count in each excitation mode and the phonon mode.
    pub p01: u8,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs { p12: 2, p01: 1 }
    }
}

/// Ordered basis of the composite space, with reverse lookup.
#[derive(Clone, Debug)]
pub struct StateSpace {
    cutoffs: Cutoffs,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl StateSpace {
    /// Enumerates every admissible basis state in lexicographic register
    /// order. The enumeration is a pure function of the cutoffs.
    pub fn build(cutoffs: Cutoffs) -> StateSpace {
        let mut states = Vec::new();
        for p12u in 0..=cutoffs.p12 {
            for p12d in 0..=cutoffs.p12 {
                for p01u in 0..=cutoffs.p01 {
                    for p01d in 0..=cutoffs.p01 {
                        for ph in 0..=cutoffs.p01 {
                            for bond in 0..=1u8 {
                                for nuclei in 0..=1u8 {
                                    for el_up in ElectronLevel::ALL {
                                        for el_dn in ElectronLevel::ALL {
                                            if electron_pair_allowed(el_up, el_dn) {
                                                states.push(BasisState {
                                                    p12u,
                                                    p12d,
                                                    p01u,
                                                    p01d,
                                                    ph,
                                                    bond,
                                                    nuclei,
                                                    el_up,
                                                    el_dn,
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Self::from_states(cutoffs, states)
    }

    fn from_states(cutoffs: Cutoffs, states: Vec<BasisState>) -> StateSpace {
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        StateSpace {
            cutoffs,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn cutoffs(&self) -> Cutoffs {
        self.cutoffs
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> BasisState {
        self.states[i]
    }

    /// Index of `state` in this basis, or `None` if the state is not part of
    /// it (inadmissible, beyond the cutoffs, or pruned away).
    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Order-insensitive fingerprint of the exact basis content and order,
    /// recorded in operator dumps so that row/column indices can be matched
    /// to the basis that produced them.
    pub fn ordering_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for s in &self.states {
            (
                s.p12u, s.p12d, s.p01u, s.p01d, s.ph, s.bond, s.nuclei, s.el_up as u8,
                s.el_dn as u8,
            )
                .hash(&mut h);
        }
        h.finish()
    }

    /// Restricts the basis to the states reachable from `seed` along the
    /// symmetric closure of `support` (nonzero positions of the generators:
    /// Hamiltonian plus every jump operator). Returned states keep their
    /// relative order, so restriction never reorders surviving indices.
    ///
    /// Evolving on the restricted basis is exact as long as `support` really
    /// covers every generator applied afterwards.
    pub fn reachable_from(
        &self,
        support: &[(usize, usize)],
        seed: &[usize],
    ) -> Result<StateSpace, Error> {
        if seed.is_empty() {
            return Err(Error::EmptySeed);
        }
        let n = self.dim();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(r, c) in support {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange(r.max(c), n));
            }
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &s in seed {
            if s >= n {
                return Err(Error::IndexOutOfRange(s, n));
            }
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let states: Vec<BasisState> = (0..n).filter(|&i| seen[i]).map(|i| self.states[i]).collect();
        Ok(Self::from_states(self.cutoffs, states))
    }
}
