//! TOML run configuration: strict parsing, defaulting, and resolution into
//! the concrete objects the scenario runner consumes.
//!
//! Dissipation rates are written in log10 form (`log10_gamma_photon = 7.0`
//! means a rate of 1e7 in source units) and mapped to internal units by
//! `gamma_unit`, so configs read like the headline rate values. Influx
//! ratios `mu_*` are plain numbers in [0, 1).

use serde::Deserialize;

use crate::hilbert::Cutoffs;
use crate::model::InitialState;
use crate::operators::ModelParams;
use crate::propagator::ExpmConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Closed system: no channels.
    Unitary,
    /// All seven loss channels, influx ratios as configured (usually zero).
    Dissipative,
    /// Same channel set as dissipative; conventionally nonzero influx.
    Influx,
    /// Only the two electron-detach channels, no influx.
    Anode,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Unitary => "unitary",
            Scenario::Dissipative => "dissipative",
            Scenario::Influx => "influx",
            Scenario::Anode => "anode",
        }
    }
}

/// Channel rates as the user writes them: log10 magnitudes plus influx ratios.
#[derive(Clone, Copy, Debug)]
pub struct ChannelRates {
    pub gamma_unit: f64,
    pub log10_gamma_photon: f64,
    pub log10_gamma_phonon: f64,
    pub log10_gamma_electron: f64,
    pub mu_photon: f64,
    pub mu_phonon: f64,
    pub mu_electron: f64,
}

impl Default for ChannelRates {
    fn default() -> Self {
        ChannelRates {
            gamma_unit: 1e-8,
            log10_gamma_photon: 7.0,
            log10_gamma_phonon: 7.0,
            log10_gamma_electron: 7.0,
            mu_photon: 0.0,
            mu_phonon: 0.0,
            mu_electron: 0.0,
        }
    }
}

/// The six sweepable quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepQuantity {
    GammaPhoton,
    GammaPhonon,
    GammaElectron,
    MuPhoton,
    MuPhonon,
    MuElectron,
}

impl SweepQuantity {
    pub const ALL: [SweepQuantity; 6] = [
        SweepQuantity::GammaPhoton,
        SweepQuantity::GammaPhonon,
        SweepQuantity::GammaElectron,
        SweepQuantity::MuPhoton,
        SweepQuantity::MuPhonon,
        SweepQuantity::MuElectron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepQuantity::GammaPhoton => "gamma_photon",
            SweepQuantity::GammaPhonon => "gamma_phonon",
            SweepQuantity::GammaElectron => "gamma_electron",
            SweepQuantity::MuPhoton => "mu_photon",
            SweepQuantity::MuPhonon => "mu_phonon",
            SweepQuantity::MuElectron => "mu_electron",
        }
    }

    fn parse(s: &str) -> Result<SweepQuantity> {
        Self::ALL
            .iter()
            .copied()
            .find(|q| q.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown sweep channel {s:?}; expected one of gamma_photon, gamma_phonon, \
                     gamma_electron, mu_photon, mu_phonon, mu_electron"
                ))
            })
    }

    /// Gamma axes carry log10 values; mu axes carry plain ratios.
    pub fn is_log10(self) -> bool {
        matches!(
            self,
            SweepQuantity::GammaPhoton | SweepQuantity::GammaPhonon | SweepQuantity::GammaElectron
        )
    }

    pub fn apply(self, rates: &mut ChannelRates, value: f64) {
        match self {
            SweepQuantity::GammaPhoton => rates.log10_gamma_photon = value,
            SweepQuantity::GammaPhonon => rates.log10_gamma_phonon = value,
            SweepQuantity::GammaElectron => rates.log10_gamma_electron = value,
            SweepQuantity::MuPhoton => rates.mu_photon = value,
            SweepQuantity::MuPhonon => rates.mu_phonon = value,
            SweepQuantity::MuElectron => rates.mu_electron = value,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepAxis {
    pub quantity: SweepQuantity,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DissipatorKind {
    /// Plain first-order increment, exactly as printed.
    Euler,
    /// Trace-exact completely positive factorization of the same substep.
    CpFactorized,
}

impl DissipatorKind {
    pub fn name(self) -> &'static str {
        match self {
            DissipatorKind::Euler => "euler",
            DissipatorKind::CpFactorized => "cp",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integration {
    /// None means automatic: 0.05 / max |H diagonal|.
    pub dt: Option<f64>,
    /// None means the per-scenario default.
    pub t_end: Option<f64>,
    pub stride: usize,
    pub trace_tol: f64,
    pub expm: ExpmConfig,
    pub dissipator: DissipatorKind,
    /// Target number of positivity spot checks per run.
    pub psd_checks: usize,
    /// Restrict the basis to states reachable from the initial support.
    pub prune: bool,
    /// Stop a run early once every subspace probability has settled to
    /// within saturation_tol over the trailing 10% of samples.
    pub saturation_tol: Option<f64>,
}

impl Default for Integration {
    fn default() -> Self {
        Integration {
            dt: None,
            t_end: None,
            stride: 100,
            trace_tol: 1e-4,
            expm: ExpmConfig::default(),
            dissipator: DissipatorKind::Euler,
            psd_checks: 10,
            prune: true,
            saturation_tol: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            prefix: "out/run".into(),
        }
    }
}

/// Fully resolved run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub initial_state: InitialState,
    pub params: ModelParams,
    pub cutoffs: Cutoffs,
    pub rates: ChannelRates,
    pub integration: Integration,
    pub sweep: Vec<SweepAxis>,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Internal dissipation rate for a log10 magnitude.
    pub fn internal_rate(&self, log10_gamma: f64) -> f64 {
        self.rates.gamma_unit * 10f64.powf(log10_gamma) * self.params.omega01_up
    }

    /// Effective t_end: explicit value or the per-scenario default.
    pub fn t_end(&self) -> f64 {
        self.integration.t_end.unwrap_or(match self.scenario {
            // 50 periods of the slow bond-formation oscillation.
            Scenario::Unitary => 50.0 * std::f64::consts::PI / 0.02,
            Scenario::Dissipative => 600.0,
            Scenario::Influx => 800.0,
            // Room for the cation plateau to saturate; the drift stop rule
            // usually ends the run near t ~ 11000-24000 depending on state.
            Scenario::Anode => 30000.0,
        })
    }

    /// Every effective setting, one `key = value` line each, echoed into
    /// output headers and `validate`.
    pub fn resolved_lines(&self) -> Vec<String> {
        let p = &self.params;
        let r = &self.rates;
        let i = &self.integration;
        let mut out = vec![
            format!("scenario = {}", self.scenario.name()),
            format!("initial_state = {}", self.initial_state),
            format!("omega01_up = {}", p.omega01_up),
            format!("omega01_dn = {}", p.omega01_dn),
            format!("omega12_up = {}", p.omega12_up),
            format!("omega12_dn = {}", p.omega12_dn),
            format!("omega_ph = {}", p.omega_ph),
            format!("g01_up = {}", p.g01_up),
            format!("g01_dn = {}", p.g01_dn),
            format!("g12_up = {}", p.g12_up),
            format!("g12_dn = {}", p.g12_dn),
            format!("g_ph = {}", p.g_ph),
            format!("zeta = {}", p.zeta),
            format!("hbar = {}", p.hbar),
            format!("atom_energy_spin_symmetric = {}", p.atom_energy_spin_symmetric),
            format!("tunneling_flips_nuclei = {}", p.tunneling_flips_nuclei),
            format!(
                "bond_requires_nuclei_together = {}",
                p.bond_requires_nuclei_together
            ),
            format!(
                "bond_requires_both_electrons = {}",
                p.bond_requires_both_electrons
            ),
            format!("cutoff_p12 = {}", self.cutoffs.p12),
            format!("cutoff_p01 = {}", self.cutoffs.p01),
            format!("gamma_unit = {:e}", r.gamma_unit),
            format!("log10_gamma_photon = {}", r.log10_gamma_photon),
            format!("log10_gamma_phonon = {}", r.log10_gamma_phonon),
            format!("log10_gamma_electron = {}", r.log10_gamma_electron),
            format!("mu_photon = {}", r.mu_photon),
            format!("mu_phonon = {}", r.mu_phonon),
            format!("mu_electron = {}", r.mu_electron),
            format!(
                "dt = {}",
                i.dt.map(|v| v.to_string()).unwrap_or_else(|| "auto".into())
            ),
            format!("t_end = {}", self.t_end()),
            format!("stride = {}", i.stride),
            format!("trace_tol = {:e}", i.trace_tol),
            format!("expm_squarings = {}", i.expm.squarings),
            format!("expm_taylor_order = {}", i.expm.taylor_order),
            format!("dissipator = {}", i.dissipator.name()),
            format!("psd_checks = {}", i.psd_checks),
            format!("prune = {}", i.prune),
            format!(
                "saturation_tol = {}",
                i.saturation_tol
                    .map(|v| format!("{v:e}"))
                    .unwrap_or_else(|| "off".into())
            ),
            format!("output_prefix = {}", self.output.prefix),
        ];
        for axis in &self.sweep {
            out.push(format!(
                "sweep_axis {} = {:?}",
                axis.quantity.name(),
                axis.values
            ));
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    initial_state: String,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    channels: RawChannels,
    #[serde(default)]
    integration: RawIntegration,
    #[serde(default)]
    sweep: Option<RawSweep>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawModel {
    omega01_up: Option<f64>,
    omega01_dn: Option<f64>,
    omega12_up: Option<f64>,
    omega12_dn: Option<f64>,
    omega_ph: Option<f64>,
    g01_up: Option<f64>,
    g01_dn: Option<f64>,
    g12_up: Option<f64>,
    g12_dn: Option<f64>,
    g_ph: Option<f64>,
    zeta: Option<f64>,
    hbar: Option<f64>,
    atom_energy_spin_symmetric: Option<bool>,
    tunneling_flips_nuclei: Option<bool>,
    bond_requires_nuclei_together: Option<bool>,
    bond_requires_both_electrons: Option<bool>,
    cutoff_p12: Option<u8>,
    cutoff_p01: Option<u8>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawChannels {
    gamma_unit: Option<f64>,
    log10_gamma_photon: Option<f64>,
    log10_gamma_phonon: Option<f64>,
    log10_gamma_electron: Option<f64>,
    mu_photon: Option<f64>,
    mu_phonon: Option<f64>,
    mu_electron: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    dt: Option<f64>,
    t_end: Option<f64>,
    stride: Option<usize>,
    trace_tol: Option<f64>,
    squarings: Option<u32>,
    taylor_order: Option<u32>,
    dissipator: Option<String>,
    psd_checks: Option<usize>,
    prune: Option<bool>,
    saturation_tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Vec<RawAxis>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    channel: String,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    prefix: Option<String>,
}

/// Parse and validate a TOML document into a resolved RunConfig.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

    let scenario = match raw.scenario.as_str() {
        "unitary" => Scenario::Unitary,
        "dissipative" => Scenario::Dissipative,
        "influx" => Scenario::Influx,
        "anode" => Scenario::Anode,
        other => {
            return Err(Error::Config(format!(
                "unknown scenario {other:?}; expected unitary, dissipative, influx, or anode"
            )))
        }
    };
    let initial_state: InitialState = raw.initial_state.parse()?;

    let d = ModelParams::default();
    let m = raw.model;
    let params = ModelParams {
        hbar: m.hbar.unwrap_or(d.hbar),
        omega01_up: m.omega01_up.unwrap_or(d.omega01_up),
        omega01_dn: m.omega01_dn.unwrap_or(d.omega01_dn),
        omega12_up: m.omega12_up.unwrap_or(d.omega12_up),
        omega12_dn: m.omega12_dn.unwrap_or(d.omega12_dn),
        omega_ph: m.omega_ph.unwrap_or(d.omega_ph),
        g01_up: m.g01_up.unwrap_or(d.g01_up),
        g01_dn: m.g01_dn.unwrap_or(d.g01_dn),
        g12_up: m.g12_up.unwrap_or(d.g12_up),
        g12_dn: m.g12_dn.unwrap_or(d.g12_dn),
        g_ph: m.g_ph.unwrap_or(d.g_ph),
        zeta: m.zeta.unwrap_or(d.zeta),
        atom_energy_spin_symmetric: m
            .atom_energy_spin_symmetric
            .unwrap_or(d.atom_energy_spin_symmetric),
        tunneling_flips_nuclei: m.tunneling_flips_nuclei.unwrap_or(d.tunneling_flips_nuclei),
        bond_requires_nuclei_together: m
            .bond_requires_nuclei_together
            .unwrap_or(d.bond_requires_nuclei_together),
        bond_requires_both_electrons: m
            .bond_requires_both_electrons
            .unwrap_or(d.bond_requires_both_electrons),
    };
    params.validate()?;
    let cutoffs = Cutoffs {
        p12: m.cutoff_p12.unwrap_or(2),
        p01: m.cutoff_p01.unwrap_or(1),
    };

    let rd = ChannelRates::default();
    let c = raw.channels;
    let rates = ChannelRates {
        gamma_unit: c.gamma_unit.unwrap_or(rd.gamma_unit),
        log10_gamma_photon: c.log10_gamma_photon.unwrap_or(rd.log10_gamma_photon),
        log10_gamma_phonon: c.log10_gamma_phonon.unwrap_or(rd.log10_gamma_phonon),
        log10_gamma_electron: c.log10_gamma_electron.unwrap_or(rd.log10_gamma_electron),
        mu_photon: c.mu_photon.unwrap_or(rd.mu_photon),
        mu_phonon: c.mu_phonon.unwrap_or(rd.mu_phonon),
        mu_electron: c.mu_electron.unwrap_or(rd.mu_electron),
    };
    if !(rates.gamma_unit > 0.0) {
        return Err(Error::Config("gamma_unit must be positive".into()));
    }
    for (name, mu) in [
        ("mu_photon", rates.mu_photon),
        ("mu_phonon", rates.mu_phonon),
        ("mu_electron", rates.mu_electron),
    ] {
        check_mu(name, mu)?;
    }

    let id = Integration::default();
    let i = raw.integration;
    let dissipator = match i.dissipator.as_deref() {
        None => id.dissipator,
        Some("euler") => DissipatorKind::Euler,
        Some("cp") => DissipatorKind::CpFactorized,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown dissipator {other:?}; expected euler or cp"
            )))
        }
    };
    let integration = Integration {
        dt: i.dt,
        t_end: i.t_end,
        stride: i.stride.unwrap_or(id.stride),
        trace_tol: i.trace_tol.unwrap_or(id.trace_tol),
        expm: ExpmConfig {
            squarings: i.squarings.unwrap_or(id.expm.squarings),
            taylor_order: i.taylor_order.unwrap_or(id.expm.taylor_order),
        },
        dissipator,
        psd_checks: i.psd_checks.unwrap_or(id.psd_checks),
        prune: i.prune.unwrap_or(id.prune),
        saturation_tol: i.saturation_tol,
    };
    if let Some(dt) = integration.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
    }
    if let Some(t) = integration.t_end {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("t_end must be non-negative, got {t}")));
        }
    }
    if integration.stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }

    let mut sweep = Vec::new();
    if let Some(s) = raw.sweep {
        if s.axis.is_empty() || s.axis.len() > 2 {
            return Err(Error::Config(format!(
                "sweep needs 1 or 2 axes, got {}",
                s.axis.len()
            )));
        }
        for ax in &s.axis {
            let quantity = SweepQuantity::parse(&ax.channel)?;
            let values = match &ax.values {
                Some(v) => v.clone(),
                // Rate axes default to 13 log-spaced magnitudes spanning
                // 1e4..1e7; influx strengths have no natural default range.
                None if quantity.is_log10() => (0..13).map(|i| 4.0 + 0.25 * i as f64).collect(),
                None => {
                    return Err(Error::Config(format!(
                        "sweep axis {} requires an explicit values list",
                        quantity.name()
                    )))
                }
            };
            if values.is_empty() {
                return Err(Error::Config(format!(
                    "sweep axis {} has an empty values list",
                    quantity.name()
                )));
            }
            if !quantity.is_log10() {
                for &v in &values {
                    check_mu(quantity.name(), v)?;
                }
            }
            sweep.push(SweepAxis { quantity, values });
        }
        if sweep.len() == 2 && sweep[0].quantity == sweep[1].quantity {
            return Err(Error::Config(format!(
                "sweep axes must reference distinct channels, both are {}",
                sweep[0].quantity.name()
            )));
        }
    }

    let output = OutputConfig {
        prefix: raw.output.prefix.unwrap_or_else(|| OutputConfig::default().prefix),
    };

    Ok(RunConfig {
        scenario,
        initial_state,
        params,
        cutoffs,
        rates,
        integration,
        sweep,
        output,
    })
}

fn check_mu(name: &str, mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::Config(format!(
            "{name} = {mu} is outside [0, 1): influx must stay weaker than dissipation \
             so the overall trend stays dissipative"
        )));
    }
    Ok(())
}
