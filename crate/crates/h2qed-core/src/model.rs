//! Scenario vocabulary: the eight initial states, the atoms / molecule /
//! cation classification of basis states, the stabilization-time detector,
//! and the anode channel set.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::hilbert::{BasisState, ElectronLevel, StateSpace};
use crate::lindblad::{Channel, DiagonalObservables, TimeSeries};
use crate::operators::{electron_detach, Spin};
use crate::{Error, Result};

/// The eight initial configurations: a photon arrangement in the two
/// ionizing modes tensored with a fixed rest (no other quanta, bond broken,
/// nuclei apart, electrons in a product of bonding/antibonding mixtures).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialState {
    Psi0,
    Psi1,
    Psi2,
    Psi3,
    Psi4,
    Psi5,
    Psi6,
    Psi7,
}

impl InitialState {
    pub const ALL: [InitialState; 8] = [
        InitialState::Psi0,
        InitialState::Psi1,
        InitialState::Psi2,
        InitialState::Psi3,
        InitialState::Psi4,
        InitialState::Psi5,
        InitialState::Psi6,
        InitialState::Psi7,
    ];

    /// (p12 up, p12 down, amplitude) triples of the photon part.
    fn photon_parts(self) -> Vec<(u8, u8, f64)> {
        use std::f64::consts::FRAC_1_SQRT_2;
        match self {
            InitialState::Psi0 => vec![(1, 0, 1.0)],
            InitialState::Psi1 => vec![(0, 1, 1.0)],
            InitialState::Psi2 => vec![(1, 0, FRAC_1_SQRT_2), (0, 1, FRAC_1_SQRT_2)],
            InitialState::Psi3 => vec![(2, 0, 1.0)],
            InitialState::Psi4 => vec![(0, 2, 1.0)],
            InitialState::Psi5 => vec![(1, 1, 1.0)],
            InitialState::Psi6 => vec![(2, 0, 0.5), (0, 2, 0.5), (1, 1, FRAC_1_SQRT_2)],
            InitialState::Psi7 => vec![(0, 0, 1.0)],
        }
    }

    fn max_p12(self) -> u8 {
        self.photon_parts().iter().map(|&(a, b, _)| a.max(b)).max().unwrap()
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = Self::ALL.iter().position(|s| s == self).unwrap();
        write!(f, "psi{n}")
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<InitialState> {
        let t = s.trim().to_ascii_lowercase();
        for (n, id) in InitialState::ALL.iter().enumerate() {
            if t == format!("psi{n}") {
                return Ok(*id);
            }
        }
        Err(Error::Config(format!(
            "unknown initial state {s:?}; expected psi0 through psi7"
        )))
    }
}

/// Amplitude vector of the chosen initial state over `space`.
///
/// Every state shares the same rest: no quanta in the lower-transition
/// modes or the phonon mode, bond broken, nuclei in separate cavities, and
/// the electron pair in (|00> - |01> + |10> - |11>)/2 over the bonding and
/// antibonding levels.
pub fn build_initial_amplitudes(space: &StateSpace, id: InitialState) -> Result<Vec<Complex64>> {
    let need = id.max_p12();
    if space.cutoffs().p12 < need {
        return Err(Error::CutoffTooSmall {
            state: format!("{id}"),
            requirement: format!(
                "ionizing-mode registers need capacity {need}, space allows {}",
                space.cutoffs().p12
            ),
        });
    }
    let electron_parts = [
        (ElectronLevel::Phi0, ElectronLevel::Phi0, 0.5),
        (ElectronLevel::Phi0, ElectronLevel::Phi1, -0.5),
        (ElectronLevel::Phi1, ElectronLevel::Phi0, 0.5),
        (ElectronLevel::Phi1, ElectronLevel::Phi1, -0.5),
    ];
    let mut amps = vec![Complex64::new(0.0, 0.0); space.dim()];
    let mut norm = 0.0;
    for (pu, pd, ap) in id.photon_parts() {
        for &(eu, ed, ae) in &electron_parts {
            let s = BasisState {
                p12u: pu,
                p12d: pd,
                p01u: 0,
                p01d: 0,
                ph: 0,
                bond: 1,
                nuclei: 1,
                el_up: eu,
                el_dn: ed,
            };
            let idx = space.index_of(&s).ok_or_else(|| Error::CutoffTooSmall {
                state: format!("{id}"),
                requirement: format!("basis state {s:?} missing from the space"),
            })?;
            let a = ap * ae;
            amps[idx] = Complex64::new(a, 0.0);
            norm += a * a;
        }
    }
    debug_assert!((norm - 1.0).abs() <= 1e-14, "normalization {norm}");
    Ok(amps)
}

/// The reported partition of the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// Bond broken: two separate atoms.
    Atoms,
    /// Bond formed, nuclei together, both electrons attached.
    Molecule,
    /// Bond formed, nuclei together, exactly one electron lost.
    Cation,
    /// Everything else (for example bond formed with nuclei apart).
    Other,
}

impl Subspace {
    pub const ALL: [Subspace; 4] = [
        Subspace::Atoms,
        Subspace::Molecule,
        Subspace::Cation,
        Subspace::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subspace::Atoms => "atoms",
            Subspace::Molecule => "molecule",
            Subspace::Cation => "cation",
            Subspace::Other => "other",
        }
    }
}

/// Total classification of one basis state.
pub fn classify(s: &BasisState) -> Subspace {
    if s.bond == 1 {
        return Subspace::Atoms;
    }
    if s.nuclei != 0 {
        return Subspace::Other;
    }
    let up = s.el_up != ElectronLevel::Detached;
    let dn = s.el_dn != ElectronLevel::Detached;
    match (up, dn) {
        (true, true) => Subspace::Molecule,
        (false, false) => Subspace::Other,
        _ => Subspace::Cation,
    }
}

/// Observable map feeding the evolution engine: one class per subspace, in
/// `Subspace::ALL` order.
pub fn observables(space: &StateSpace) -> DiagonalObservables {
    let class_of = (0..space.dim())
        .map(|i| {
            let s = space.state(i);
            Subspace::ALL
                .iter()
                .position(|&c| c == classify(&s))
                .unwrap() as u8
        })
        .collect();
    DiagonalObservables {
        names: Subspace::ALL.iter().map(|c| c.name().to_string()).collect(),
        class_of,
    }
}

/// Per-subspace probabilities of one recorded sample.
pub fn subspace_probabilities(series: &TimeSeries, sample: usize) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (c, sub) in Subspace::ALL.iter().enumerate() {
        let idx = series
            .class_index(sub.name())
            .expect("series built from observables()");
        out[c] = series.probs[idx][sample];
    }
    out
}

/// Outcome of the stabilization search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stabilization {
    /// First recorded time from which molecule + cation probability stays
    /// above the threshold through the end of the series. The resolution is
    /// one observer stride.
    Reached { t_stb: f64, sample: usize },
    NotReached,
}

/// Latching detector on the recorded samples: the crossing must hold at
/// every later sample, so a dip below the threshold restarts the search.
pub fn detect_stabilization(series: &TimeSeries, threshold: f64) -> Result<Stabilization> {
    if series.times.is_empty() {
        return Err(Error::Config("stabilization needs a non-empty series".into()));
    }
    let mol = series
        .class_index(Subspace::Molecule.name())
        .ok_or_else(|| Error::Config("series lacks a molecule column".into()))?;
    let cat = series
        .class_index(Subspace::Cation.name())
        .ok_or_else(|| Error::Config("series lacks a cation column".into()))?;
    let n = series.times.len();
    let mut latch: Option<usize> = None;
    for k in 0..n {
        let p = series.probs[mol][k] + series.probs[cat][k];
        if p > threshold {
            latch.get_or_insert(k);
        } else {
            latch = None;
        }
    }
    Ok(match latch {
        Some(k) => Stabilization::Reached {
            t_stb: series.times[k],
            sample: k,
        },
        None => Stabilization::NotReached,
    })
}

/// The anode variant: exactly the two electron-detach channels, no photon
/// or phonon loss, no influx.
pub fn anode_channels(space: &StateSpace, gamma_e: f64) -> Result<Vec<Channel>> {
    Ok(vec![
        Channel::new("electron_up", electron_detach(space, Spin::Up), gamma_e, 0.0)?,
        Channel::new("electron_dn", electron_detach(space, Spin::Dn), gamma_e, 0.0)?,
    ])
}
