//! Sparse operators on the composite basis: boson ladder operators, electron
//! transition and detachment operators, bond and nuclei flips, and the
//! rotating-wave Hamiltonian assembled from them.

use ndarray::Array2;
use num_complex::Complex64;

use crate::hilbert::{BasisState, ElectronLevel, StateSpace};
use crate::{Error, Result};

/// Boson registers addressable by ladder operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Register {
    /// Ionization-mode photons, spin-up channel (`p12u`).
    Ion12Up,
    /// Ionization-mode photons, spin-down channel (`p12d`).
    Ion12Dn,
    /// Excitation-mode photons, spin-up channel (`p01u`).
    Exc01Up,
    /// Excitation-mode photons, spin-down channel (`p01d`).
    Exc01Dn,
    /// Vibrational phonons (`ph`).
    Phonon,
}

impl Register {
    pub const ALL: [Register; 5] = [
        Register::Ion12Up,
        Register::Ion12Dn,
        Register::Exc01Up,
        Register::Exc01Dn,
        Register::Phonon,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Register::Ion12Up => "ion12_up",
            Register::Ion12Dn => "ion12_dn",
            Register::Exc01Up => "exc01_up",
            Register::Exc01Dn => "exc01_dn",
            Register::Phonon => "phonon",
        }
    }

    fn count(self, s: &BasisState) -> u8 {
        match self {
            Register::Ion12Up => s.p12u,
            Register::Ion12Dn => s.p12d,
            Register::Exc01Up => s.p01u,
            Register::Exc01Dn => s.p01d,
            Register::Phonon => s.ph,
        }
    }

    fn with_count(self, s: &BasisState, n: u8) -> BasisState {
        let mut t = *s;
        match self {
            Register::Ion12Up => t.p12u = n,
            Register::Ion12Dn => t.p12d = n,
            Register::Exc01Up => t.p01u = n,
            Register::Exc01Dn => t.p01d = n,
            Register::Phonon => t.ph = n,
        }
        t
    }
}

/// Electron spin channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    Up,
    Dn,
}

impl Spin {
    pub fn label(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Dn => "dn",
        }
    }

    fn level(self, s: &BasisState) -> ElectronLevel {
        match self {
            Spin::Up => s.el_up,
            Spin::Dn => s.el_dn,
        }
    }

    fn with_level(self, s: &BasisState, l: ElectronLevel) -> BasisState {
        let mut t = *s;
        match self {
            Spin::Up => t.el_up = l,
            Spin::Dn => t.el_dn = l,
        }
        t
    }
}

/// Orbital transition addressed by an electron lowering operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transition {
    /// `Phi1 -> Phi0` (excitation channel).
    Phi1ToPhi0,
    /// `Phi2 -> Phi1` (ionization channel).
    Phi2ToPhi1,
}

impl Transition {
    fn upper(self) -> ElectronLevel {
        match self {
            Transition::Phi1ToPhi0 => ElectronLevel::Phi1,
            Transition::Phi2ToPhi1 => ElectronLevel::Phi2,
        }
    }

    fn lower(self) -> ElectronLevel {
        match self {
            Transition::Phi1ToPhi0 => ElectronLevel::Phi0,
            Transition::Phi2ToPhi1 => ElectronLevel::Phi1,
        }
    }
}

/// Sparse complex operator with entries sorted by `(row, col)`.
///
/// Images that would leave the basis (beyond a boson cutoff, violating an
/// electron occupancy rule, or pruned away by a reachable restriction) are
/// dropped, which is exactly the truncation semantics the model uses:
/// a creation operator silently annihilates at the cap.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(u32, u32, Complex64)>,
}

impl SparseOp {
    pub fn from_triplets(dim: usize, mut entries: Vec<(u32, u32, Complex64)>) -> SparseOp {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != Complex64::new(0.0, 0.0));
        SparseOp {
            dim,
            entries: merged,
        }
    }

    pub fn zero(dim: usize) -> SparseOp {
        SparseOp {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> SparseOp {
        let one = Complex64::new(1.0, 0.0);
        SparseOp {
            dim,
            entries: (0..dim as u32).map(|i| (i, i, one)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u32, u32, Complex64)] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> SparseOp {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        SparseOp::from_triplets(self.dim, entries)
    }

    pub fn scaled(&self, factor: Complex64) -> SparseOp {
        SparseOp::from_triplets(
            self.dim,
            self.entries.iter().map(|&(r, c, v)| (r, c, factor * v)).collect(),
        )
    }

    pub fn add(&self, other: &SparseOp) -> Result<SparseOp> {
        self.check_dim(other)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(SparseOp::from_triplets(self.dim, entries))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseOp) -> Result<SparseOp> {
        self.check_dim(other)?;
        // Row index over `other` for cache-friendly accumulation.
        let mut row_start = vec![0usize; self.dim + 1];
        for &(r, _, _) in &other.entries {
            row_start[r as usize + 1] += 1;
        }
        for i in 0..self.dim {
            row_start[i + 1] += row_start[i];
        }
        let mut out = Vec::new();
        for &(r, c, v) in &self.entries {
            let (lo, hi) = (row_start[c as usize], row_start[c as usize + 1]);
            for &(_, c2, v2) in &other.entries[lo..hi] {
                out.push((r, c2, v * v2));
            }
        }
        Ok(SparseOp::from_triplets(self.dim, out))
    }

    pub fn commutator(&self, other: &SparseOp) -> Result<SparseOp> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add(&ba.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        m
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r as usize] = v;
            }
        }
        d
    }

    /// Nonzero positions, usable as a reachability support set.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .map(|&(r, c, _)| (r as usize, c as usize))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation `|A[i,j] - conj(A[j,i])|` from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        let adj = self.dagger();
        let diff = self
            .add(&adj.scaled(Complex64::new(-1.0, 0.0)))
            .expect("same dim");
        diff.max_abs()
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
        y
    }

    /// Writes `row col re im` per nonzero, preceded by a header that names
    /// the basis-ordering fingerprint the indices refer to.
    pub fn write_dump<W: std::io::Write>(&self, w: &mut W, basis_hash: u64) -> Result<()> {
        writeln!(w, "# basis_ordering_hash = {basis_hash:016x}")?;
        writeln!(w, "# dim = {}", self.dim)?;
        writeln!(w, "# nnz = {}", self.nnz())?;
        for &(r, c, v) in &self.entries {
            writeln!(w, "{r} {c} {:.8e} {:.8e}", v.re, v.im)?;
        }
        Ok(())
    }

    fn check_dim(&self, other: &SparseOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Truncated boson lowering operator: `a|p> = sqrt(p)|p-1>`.
pub fn annihilate(space: &StateSpace, reg: Register) -> SparseOp {
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        let p = reg.count(s);
        if p > 0 {
            let image = reg.with_count(s, p - 1);
            if let Some(j) = space.index_of(&image) {
                entries.push((j as u32, i as u32, Complex64::new(f64::from(p).sqrt(), 0.0)));
            }
        }
    }
    SparseOp::from_triplets(space.dim(), entries)
}

/// Truncated boson raising operator: `a'|p> = sqrt(p+1)|p+1>` below the cap
/// and zero at the cap.
pub fn create(space: &StateSpace, reg: Register) -> SparseOp {
    annihilate(space, reg).dagger()
}

/// Electron lowering operator for one spin channel and one orbital
/// transition, unit amplitude.
pub fn electron_lower(space: &StateSpace, spin: Spin, tr: Transition) -> SparseOp {
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        if spin.level(s) == tr.upper() {
            let image = spin.with_level(s, tr.lower());
            if let Some(j) = space.index_of(&image) {
                entries.push((j as u32, i as u32, Complex64::new(1.0, 0.0)));
            }
        }
    }
    SparseOp::from_triplets(space.dim(), entries)
}

/// Detachment operator for one spin channel: moves a top-orbital electron to
/// `Detached` with unit amplitude. Images that would detach both electrons
/// are dropped.
pub fn electron_detach(space: &StateSpace, spin: Spin) -> SparseOp {
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        if spin.level(s) == ElectronLevel::Phi2 {
            let image = spin.with_level(s, ElectronLevel::Detached);
            if let Some(j) = space.index_of(&image) {
                entries.push((j as u32, i as u32, Complex64::new(1.0, 0.0)));
            }
        }
    }
    SparseOp::from_triplets(space.dim(), entries)
}

/// Bond lowering operator: takes the broken bond (`bond = 1`, which carries
/// the bond energy) to the formed bond (`bond = 0`).
pub fn bond_sigma(space: &StateSpace) -> SparseOp {
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        if s.bond == 1 {
            let mut image = *s;
            image.bond = 0;
            if let Some(j) = space.index_of(&image) {
                entries.push((j as u32, i as u32, Complex64::new(1.0, 0.0)));
            }
        }
    }
    SparseOp::from_triplets(space.dim(), entries)
}

/// Nuclei lowering operator: takes scattered nuclei (`nuclei = 1`) to nuclei
/// sharing a cavity (`nuclei = 0`).
pub fn nuclei_sigma(space: &StateSpace) -> SparseOp {
    let mut entries = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        if s.nuclei == 1 {
            let mut image = *s;
            image.nuclei = 0;
            if let Some(j) = space.index_of(&image) {
                entries.push((j as u32, i as u32, Complex64::new(1.0, 0.0)));
            }
        }
    }
    SparseOp::from_triplets(space.dim(), entries)
}

/// Total excitation number: photons and phonons plus electron orbital quanta.
/// Commutes with the Hamiltonian exactly when the bond-phonon exchange is
/// switched off, because that exchange trades a phonon against the (uncounted)
/// bond flag.
pub fn excitation_number(space: &StateSpace) -> SparseOp {
    let entries = space
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let n = f64::from(
                s.p12u
                    + s.p12d
                    + s.p01u
                    + s.p01d
                    + s.ph
                    + s.el_up.quanta()
                    + s.el_dn.quanta(),
            );
            (i as u32, i as u32, Complex64::new(n, 0.0))
        })
        .collect();
    SparseOp::from_triplets(space.dim(), entries)
}

/// Model frequencies, couplings, and structure flags. All energies are in
/// units of `hbar * omega01_up` when the defaults are used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub hbar: f64,
    /// Excitation transition frequency, per spin channel.
    pub omega01_up: f64,
    pub omega01_dn: f64,
    /// Ionization transition frequency, per spin channel.
    pub omega12_up: f64,
    pub omega12_dn: f64,
    /// Phonon frequency (also the energy released by bond formation).
    pub omega_ph: f64,
    /// Electron-photon couplings per channel.
    pub g01_up: f64,
    pub g01_dn: f64,
    pub g12_up: f64,
    pub g12_dn: f64,
    /// Bond-phonon exchange coupling.
    pub g_ph: f64,
    /// Nuclei tunneling amplitude.
    pub zeta: f64,
    /// When false (default), the spin-down top orbital reuses the spin-up
    /// energy `omega01_up + omega12_up`; when true it uses the spin-down
    /// frequencies. Irrelevant for spin-degenerate parameters.
    pub atom_energy_spin_symmetric: bool,
    /// When true (default), tunneling moves the nuclei between cavities while
    /// the bond is broken. When false it degenerates to a flat energy offset
    /// `zeta` on broken-bond states and the nuclei flag never changes, so no
    /// molecule or cation can ever form from scattered atoms.
    pub tunneling_flips_nuclei: bool,
    /// When true (default), the bond can only form or break while the nuclei
    /// share a cavity.
    pub bond_requires_nuclei_together: bool,
    /// When true (default), the bond degree of freedom freezes once an
    /// electron has been detached: a one-electron ion no longer exchanges
    /// bond energy with the phonon mode.
    pub bond_requires_both_electrons: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            hbar: 1.0,
            omega01_up: 1.0,
            omega01_dn: 1.0,
            omega12_up: 1.0,
            omega12_dn: 1.0,
            omega_ph: 0.1,
            g01_up: 0.02,
            g01_dn: 0.02,
            g12_up: 0.02,
            g12_dn: 0.02,
            g_ph: 0.02,
            zeta: 0.01,
            atom_energy_spin_symmetric: false,
            tunneling_flips_nuclei: true,
            bond_requires_nuclei_together: true,
            bond_requires_both_electrons: true,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let freqs = [
            ("hbar", self.hbar),
            ("omega01_up", self.omega01_up),
            ("omega01_dn", self.omega01_dn),
            ("omega12_up", self.omega12_up),
            ("omega12_dn", self.omega12_dn),
            ("omega_ph", self.omega_ph),
        ];
        for (name, v) in freqs {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let couplings = [
            ("g01_up", self.g01_up),
            ("g01_dn", self.g01_dn),
            ("g12_up", self.g12_up),
            ("g12_dn", self.g12_dn),
            ("g_ph", self.g_ph),
            ("zeta", self.zeta),
        ];
        for (name, v) in couplings {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Energy of a single electron orbital, spin-resolved.
    fn orbital_energy(&self, spin: Spin, level: ElectronLevel) -> f64 {
        match (spin, level) {
            (_, ElectronLevel::Phi0) => 0.0,
            (Spin::Up, ElectronLevel::Phi1) => self.hbar * self.omega01_up,
            (Spin::Dn, ElectronLevel::Phi1) => self.hbar * self.omega01_dn,
            (Spin::Up, ElectronLevel::Phi2 | ElectronLevel::Detached) => {
                self.hbar * (self.omega01_up + self.omega12_up)
            }
            (Spin::Dn, ElectronLevel::Phi2 | ElectronLevel::Detached) => {
                if self.atom_energy_spin_symmetric {
                    self.hbar * (self.omega01_dn + self.omega12_dn)
                } else {
                    self.hbar * (self.omega01_up + self.omega12_up)
                }
            }
        }
    }

    /// Diagonal energy of one basis state: photon and phonon energies, the
    /// bond energy carried by a broken bond, both orbital energies, and (for
    /// the flat tunneling variant only) the tunneling offset.
    pub fn diagonal_energy(&self, s: &BasisState) -> f64 {
        let mut e = 0.0;
        e += self.hbar * self.omega12_up * f64::from(s.p12u);
        e += self.hbar * self.omega12_dn * f64::from(s.p12d);
        e += self.hbar * self.omega01_up * f64::from(s.p01u);
        e += self.hbar * self.omega01_dn * f64::from(s.p01d);
        e += self.hbar * self.omega_ph * f64::from(s.ph);
        e += self.hbar * self.omega_ph * f64::from(s.bond);
        e += self.orbital_energy(Spin::Up, s.el_up);
        e += self.orbital_energy(Spin::Dn, s.el_dn);
        if !self.tunneling_flips_nuclei {
            e += self.zeta * f64::from(s.bond);
        }
        e
    }
}

/// Interaction channels: (photon register, spin, transition, coupling picker).
fn interaction_channels(p: &ModelParams) -> [(Register, Spin, Transition, f64); 4] {
    [
        (Register::Exc01Up, Spin::Up, Transition::Phi1ToPhi0, p.g01_up),
        (Register::Exc01Dn, Spin::Dn, Transition::Phi1ToPhi0, p.g01_dn),
        (Register::Ion12Up, Spin::Up, Transition::Phi2ToPhi1, p.g12_up),
        (Register::Ion12Dn, Spin::Dn, Transition::Phi2ToPhi1, p.g12_dn),
    ]
}

/// Assembles the full Hamiltonian on `space`:
///
/// * diagonal part: photon, phonon, bond, and orbital energies;
/// * electron-photon exchange on all four channels, active only while the
///   bond is formed;
/// * bond-phonon exchange (bond formation emits a phonon), gated by the
///   structure flags;
/// * nuclei tunneling while the bond is broken (or, with
///   `tunneling_flips_nuclei = false`, a flat `zeta` offset on broken-bond
///   states).
///
/// The result is Hermitian by construction; a final check enforces it.
pub fn assemble_hamiltonian(space: &StateSpace, p: &ModelParams) -> Result<SparseOp> {
    p.validate()?;
    let mut entries: Vec<(u32, u32, Complex64)> = Vec::with_capacity(space.dim() * 8);
    let channels = interaction_channels(p);
    for (i, s) in space.states().iter().enumerate() {
        let i = i as u32;
        entries.push((i, i, Complex64::new(p.diagonal_energy(s), 0.0)));

        // Electron-photon exchange, gated on the formed bond. Primary
        // direction: emission (orbital drops, photon count rises); the
        // mirrored absorption entry is added alongside so each pair is
        // created exactly once.
        if s.bond == 0 {
            for (reg, spin, tr, g) in channels {
                if g != 0.0 && spin.level(s) == tr.upper() {
                    let photons = reg.count(s);
                    let image = reg.with_count(&spin.with_level(s, tr.lower()), photons + 1);
                    if let Some(j) = space.index_of(&image) {
                        let amp = Complex64::new(g * f64::from(photons + 1).sqrt(), 0.0);
                        entries.push((j as u32, i, amp));
                        entries.push((i, j as u32, amp));
                    }
                }
            }
        }

        // Bond formation emits a phonon. Gates: nuclei in the same cavity,
        // both electrons attached (per flags).
        if s.bond == 1
            && p.g_ph != 0.0
            && (!p.bond_requires_nuclei_together || s.nuclei == 0)
            && (!p.bond_requires_both_electrons
                || (s.el_up != ElectronLevel::Detached && s.el_dn != ElectronLevel::Detached))
        {
            let mut image = *s;
            image.bond = 0;
            image.ph = s.ph + 1;
            if let Some(j) = space.index_of(&image) {
                let amp = Complex64::new(p.g_ph * f64::from(s.ph + 1).sqrt(), 0.0);
                entries.push((j as u32, i, amp));
                entries.push((i, j as u32, amp));
            }
        }

        // Nuclei tunneling while the bond is broken.
        if p.tunneling_flips_nuclei && p.zeta != 0.0 && s.bond == 1 && s.nuclei == 1 {
            let mut image = *s;
            image.nuclei = 0;
            if let Some(j) = space.index_of(&image) {
                let amp = Complex64::new(p.zeta, 0.0);
                entries.push((j as u32, i, amp));
                entries.push((i, j as u32, amp));
            }
        }
    }
    let h = SparseOp::from_triplets(space.dim(), entries);
    let dev = h.hermitian_deviation();
    if dev > 1e-12 {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: 1e-12,
        });
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Cutoffs;
    use approx::assert_abs_diff_eq;

    fn space() -> StateSpace {
        StateSpace::build(Cutoffs::default())
    }

    fn small_space() -> StateSpace {
        StateSpace::build(Cutoffs { p12: 1, p01: 1 })
    }

    #[test]
    fn ladder_entries_follow_sqrt_of_count() {
        let sp = space();
        let a = annihilate(&sp, Register::Ion12Up);
        // Pick a state with two ionization photons and read off sqrt(2).
        let s2 = sp
            .states()
            .iter()
            .position(|s| s.p12u == 2)
            .expect("cutoff is 2");
        let x = {
            let mut v = vec![Complex64::new(0.0, 0.0); sp.dim()];
            v[s2] = Complex64::new(1.0, 0.0);
            v
        };
        let y = a.apply_vec(&x);
        let mut image = sp.state(s2);
        image.p12u = 1;
        let j = sp.index_of(&image).unwrap();
        assert_abs_diff_eq!(y[j].re, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(y.iter().filter(|v| v.norm() > 0.0).count(), 1);
    }

    #[test]
    fn create_annihilates_at_the_cap() {
        let sp = space();
        let adag = create(&sp, Register::Ion12Up);
        let s_cap = sp.states().iter().position(|s| s.p12u == 2).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); sp.dim()];
        x[s_cap] = Complex64::new(1.0, 0.0);
        let y = adag.apply_vec(&x);
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn ladder_commutator_is_identity_below_the_cap() {
        let sp = space();
        let a = annihilate(&sp, Register::Phonon);
        let comm = a.commutator(&a.dagger()).unwrap();
        for (i, s) in sp.states().iter().enumerate() {
            let expected = if s.ph < sp.cutoffs().p01 {
                1.0
            } else {
                // Truncation defect at the cap: aa' is missing its top entry.
                1.0 - f64::from(sp.cutoffs().p01 + 1)
            };
            let d = comm
                .entries()
                .iter()
                .find(|&&(r, c, _)| r == i as u32 && c == i as u32)
                .map(|e| e.2.re)
                .unwrap_or(0.0);
            assert_abs_diff_eq!(d, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn electron_lowering_is_nilpotent_and_unit_amplitude() {
        let sp = small_space();
        let s01 = electron_lower(&sp, Spin::Up, Transition::Phi1ToPhi0);
        assert!(s01.matmul(&s01).unwrap().is_zero());
        assert!(s01.entries().iter().all(|e| e.2 == Complex64::new(1.0, 0.0)));
        let s12 = electron_lower(&sp, Spin::Dn, Transition::Phi2ToPhi1);
        assert!(s12.matmul(&s12).unwrap().is_zero());
    }

    #[test]
    fn double_detachment_is_impossible() {
        let sp = space();
        let du = electron_detach(&sp, Spin::Up);
        let dd = electron_detach(&sp, Spin::Dn);
        // Detaching one spin and then the other needs a source with both
        // electrons in the top orbital, which the basis excludes.
        assert!(du.matmul(&dd).unwrap().is_zero());
        assert!(dd.matmul(&du).unwrap().is_zero());
    }

    #[test]
    fn detach_drops_images_that_would_empty_the_molecule() {
        let sp = space();
        let du = electron_detach(&sp, Spin::Up);
        // Source (Phi2, Detached) exists, but its image (Detached, Detached)
        // does not; the operator must be zero on that source.
        let src = sp
            .states()
            .iter()
            .position(|s| s.el_up == ElectronLevel::Phi2 && s.el_dn == ElectronLevel::Detached)
            .unwrap();
        assert!(du.entries().iter().all(|&(_, c, _)| c != src as u32));
    }

    #[test]
    fn bond_and_nuclei_sigmas_are_two_level_lowerings() {
        let sp = small_space();
        for op in [bond_sigma(&sp), nuclei_sigma(&sp)] {
            assert!(op.matmul(&op).unwrap().is_zero());
            let completeness = op
                .matmul(&op.dagger())
                .unwrap()
                .add(&op.dagger().matmul(&op).unwrap())
                .unwrap();
            let diff = completeness
                .add(&SparseOp::identity(sp.dim()).scaled(Complex64::new(-1.0, 0.0)))
                .unwrap();
            assert!(diff.is_zero(), "sigma sigma' + sigma' sigma must be identity");
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_for_asymmetric_parameters() {
        let sp = small_space();
        let p = ModelParams {
            omega01_dn: 1.3,
            omega12_up: 0.7,
            g01_dn: 0.05,
            g12_up: 0.11,
            zeta: 0.03,
            atom_energy_spin_symmetric: true,
            ..ModelParams::default()
        };
        let h = assemble_hamiltonian(&sp, &p).unwrap();
        assert_eq!(h.hermitian_deviation(), 0.0);
    }

    #[test]
    fn interaction_is_silent_while_the_bond_is_broken() {
        let sp = small_space();
        let h = assemble_hamiltonian(&sp, &ModelParams::default()).unwrap();
        for &(r, c, _) in h.entries() {
            if r == c {
                continue;
            }
            let (a, b) = (sp.state(r as usize), sp.state(c as usize));
            let electron_moved = a.el_up != b.el_up || a.el_dn != b.el_dn;
            let photon_moved =
                a.p12u != b.p12u || a.p12d != b.p12d || a.p01u != b.p01u || a.p01d != b.p01d;
            if electron_moved && photon_moved {
                assert_eq!(a.bond, 0);
                assert_eq!(b.bond, 0);
            }
        }
    }

    #[test]
    fn diagonal_matches_independent_energy_accountant() {
        let sp = small_space();
        let p = ModelParams {
            omega01_up: 1.1,
            omega01_dn: 0.9,
            omega12_up: 1.4,
            omega12_dn: 1.2,
            omega_ph: 0.21,
            ..ModelParams::default()
        };
        let h = assemble_hamiltonian(&sp, &p).unwrap();
        let diag = h.diagonal();
        for (i, s) in sp.states().iter().enumerate() {
            // Re-derive the energy with straight-line arithmetic.
            let mut e = 1.4 * f64::from(s.p12u)
                + 1.2 * f64::from(s.p12d)
                + 1.1 * f64::from(s.p01u)
                + 0.9 * f64::from(s.p01d)
                + 0.21 * f64::from(s.ph)
                + 0.21 * f64::from(s.bond);
            e += match s.el_up {
                ElectronLevel::Phi0 => 0.0,
                ElectronLevel::Phi1 => 1.1,
                _ => 1.1 + 1.4,
            };
            e += match s.el_dn {
                ElectronLevel::Phi0 => 0.0,
                ElectronLevel::Phi1 => 0.9,
                // Spin-down reuses the spin-up top-orbital energy by default.
                _ => 1.1 + 1.4,
            };
            assert_abs_diff_eq!(diag[i].re, e, epsilon = 1e-12);
            assert_abs_diff_eq!(diag[i].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn couplings_off_leaves_a_diagonal_hamiltonian() {
        let sp = small_space();
        let p = ModelParams {
            g01_up: 0.0,
            g01_dn: 0.0,
            g12_up: 0.0,
            g12_dn: 0.0,
            g_ph: 0.0,
            zeta: 0.0,
            ..ModelParams::default()
        };
        let h = assemble_hamiltonian(&sp, &p).unwrap();
        assert!(h.entries().iter().all(|&(r, c, _)| r == c));
    }

    #[test]
    fn flat_tunneling_variant_is_an_offset_on_broken_bonds() {
        let sp = small_space();
        let base = ModelParams {
            g01_up: 0.0,
            g01_dn: 0.0,
            g12_up: 0.0,
            g12_dn: 0.0,
            g_ph: 0.0,
            zeta: 0.0,
            ..ModelParams::default()
        };
        let flat = ModelParams {
            zeta: 0.07,
            tunneling_flips_nuclei: false,
            ..base
        };
        let h0 = assemble_hamiltonian(&sp, &base).unwrap();
        let h1 = assemble_hamiltonian(&sp, &flat).unwrap();
        let diff = h1.add(&h0.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        // Exactly zeta on every broken-bond diagonal entry, nothing else.
        for (i, s) in sp.states().iter().enumerate() {
            let d = diff
                .entries()
                .iter()
                .find(|&&(r, c, _)| r == i as u32 && c == i as u32)
                .map(|e| e.2.re)
                .unwrap_or(0.0);
            assert_abs_diff_eq!(d, 0.07 * f64::from(s.bond), epsilon = 1e-15);
        }
        assert!(diff.entries().iter().all(|&(r, c, _)| r == c));
    }

    #[test]
    fn tunneling_connects_cavities_only_while_the_bond_is_broken() {
        let sp = small_space();
        let h = assemble_hamiltonian(&sp, &ModelParams::default()).unwrap();
        let mut saw_flip = false;
        for &(r, c, v) in h.entries() {
            let (a, b) = (sp.state(r as usize), sp.state(c as usize));
            if a.nuclei != b.nuclei {
                assert_eq!(a.bond, 1);
                assert_eq!(b.bond, 1);
                assert_eq!(
                    (a.p12u, a.p12d, a.p01u, a.p01d, a.ph, a.el_up, a.el_dn),
                    (b.p12u, b.p12d, b.p01u, b.p01d, b.ph, b.el_up, b.el_dn)
                );
                assert_abs_diff_eq!(v.re, 0.01, epsilon = 1e-15);
                saw_flip = true;
            }
        }
        assert!(saw_flip);
    }

    #[test]
    fn bond_exchange_respects_its_gates() {
        let sp = small_space();
        let h = assemble_hamiltonian(&sp, &ModelParams::default()).unwrap();
        for &(r, c, _) in h.entries() {
            let (a, b) = (sp.state(r as usize), sp.state(c as usize));
            if a.bond != b.bond {
                // Bond flips pair with a phonon and need co-located nuclei
                // and both electrons attached.
                assert_ne!(a.ph, b.ph);
                assert_eq!(a.nuclei, 0);
                assert_eq!(b.nuclei, 0);
                for s in [a, b] {
                    assert_ne!(s.el_up, ElectronLevel::Detached);
                    assert_ne!(s.el_dn, ElectronLevel::Detached);
                }
            }
        }
    }

    #[test]
    fn excitation_number_commutes_with_the_exchange_terms() {
        let sp = small_space();
        let p = ModelParams {
            g_ph: 0.0,
            zeta: 0.0,
            ..ModelParams::default()
        };
        let h = assemble_hamiltonian(&sp, &p).unwrap();
        let n = excitation_number(&sp);
        assert!(h.commutator(&n).unwrap().is_zero());
    }

    #[test]
    fn bond_exchange_moves_excitation_between_counted_and_uncounted_registers() {
        let sp = small_space();
        let h = assemble_hamiltonian(&sp, &ModelParams::default()).unwrap();
        let n = excitation_number(&sp);
        assert!(!h.commutator(&n).unwrap().is_zero());
    }

    #[test]
    fn every_hamiltonian_term_preserves_the_charge_tuple() {
        let sp = space();
        let h = assemble_hamiltonian(&sp, &ModelParams::default()).unwrap();
        for &(r, c, _) in h.entries() {
            assert_eq!(
                sp.state(r as usize).charges(),
                sp.state(c as usize).charges()
            );
        }
    }

    #[test]
    fn rejects_nonpositive_frequencies_and_negative_couplings() {
        let sp = small_space();
        let bad_freq = ModelParams {
            omega_ph: 0.0,
            ..ModelParams::default()
        };
        assert!(assemble_hamiltonian(&sp, &bad_freq).is_err());
        let bad_g = ModelParams {
            g12_up: -0.1,
            ..ModelParams::default()
        };
        assert!(assemble_hamiltonian(&sp, &bad_g).is_err());
    }
}
