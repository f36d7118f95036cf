//! Scenario orchestration: turn a RunConfig into channel sets, a (possibly
//! pruned) state space, evolution options, and executed runs or sweep grids.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{DissipatorKind, RunConfig, Scenario};
use crate::hilbert::StateSpace;
use crate::lindblad::{
    BlockedDensity, Channel, DiagonalObservables, DissipatorScheme, Engine, EvolveOptions,
    StopRule, TimeSeries,
};
use crate::model::{anode_channels, build_initial_amplitudes, detect_stabilization, observables};
use crate::operators::{annihilate, assemble_hamiltonian, electron_detach, Register, SparseOp, Spin};
use crate::output::{write_grid, write_time_series, CellSummary};
use crate::sectors::{Blocking, Grading};
use crate::{Error, Result};

/// Channel set implied by the scenario and the (possibly sweep-adjusted)
/// rate table.
pub fn build_channels(
    space: &StateSpace,
    cfg: &RunConfig,
    rates: &crate::config::ChannelRates,
) -> Result<Vec<Channel>> {
    let gamma = |lg: f64| cfg.rates.gamma_unit * 10f64.powf(lg) * cfg.params.omega01_up;
    match cfg.scenario {
        Scenario::Unitary => Ok(Vec::new()),
        Scenario::Anode => anode_channels(space, gamma(rates.log10_gamma_electron)),
        Scenario::Dissipative | Scenario::Influx => {
            let g_om = gamma(rates.log10_gamma_photon);
            let g_ph = gamma(rates.log10_gamma_phonon);
            let g_el = gamma(rates.log10_gamma_electron);
            Ok(vec![
                Channel::new(
                    "photon_12_up",
                    annihilate(space, Register::Ion12Up),
                    g_om,
                    rates.mu_photon,
                )?,
                Channel::new(
                    "photon_12_dn",
                    annihilate(space, Register::Ion12Dn),
                    g_om,
                    rates.mu_photon,
                )?,
                Channel::new(
                    "photon_01_up",
                    annihilate(space, Register::Exc01Up),
                    g_om,
                    rates.mu_photon,
                )?,
                Channel::new(
                    "photon_01_dn",
                    annihilate(space, Register::Exc01Dn),
                    g_om,
                    rates.mu_photon,
                )?,
                Channel::new(
                    "phonon",
                    annihilate(space, Register::Phonon),
                    g_ph,
                    rates.mu_phonon,
                )?,
                Channel::new(
                    "electron_up",
                    electron_detach(space, Spin::Up),
                    g_el,
                    rates.mu_electron,
                )?,
                Channel::new(
                    "electron_dn",
                    electron_detach(space, Spin::Dn),
                    g_el,
                    rates.mu_electron,
                )?,
            ])
        }
    }
}

/// Space, Hamiltonian, blocking, and observables shared by every cell of a
/// run or sweep. Pruning keeps only states reachable from the initial
/// support along the Hamiltonian and the scenario's jump operators, which
/// is exact for every scenario because rates scale but never extend the
/// channel support.
pub struct Prepared {
    pub space: StateSpace,
    pub full_dim: usize,
    pub h: SparseOp,
    pub blocking: Blocking,
    pub obs: DiagonalObservables,
    pub amps: Vec<Complex64>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let full = StateSpace::build(cfg.cutoffs);
    let full_dim = full.dim();
    let space = if cfg.integration.prune {
        let amps = build_initial_amplitudes(&full, cfg.initial_state)?;
        let h = assemble_hamiltonian(&full, &cfg.params)?;
        let channels = build_channels(&full, cfg, &cfg.rates)?;
        let seeds: Vec<usize> = amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, _)| i)
            .collect();
        let mut support = h.support();
        for c in &channels {
            support.extend(c.jump.support());
        }
        full.reachable_from(&support, &seeds)?
    } else {
        full
    };
    let amps = build_initial_amplitudes(&space, cfg.initial_state)?;
    let h = assemble_hamiltonian(&space, &cfg.params)?;
    let blocking = Blocking::build(&space, Grading::Charges);
    let obs = observables(&space);
    Ok(Prepared {
        space,
        full_dim,
        h,
        blocking,
        obs,
        amps,
    })
}

/// Resolved evolution options for one run.
pub fn evolve_options(cfg: &RunConfig, prep: &Prepared) -> EvolveOptions {
    let dt = cfg.integration.dt.unwrap_or_else(|| {
        let max_diag = prep
            .h
            .diagonal()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1e-12);
        0.05 / max_diag
    });
    let t_end = cfg.t_end();
    let n_steps = (t_end / dt).ceil().max(1.0);
    let expected_samples = (n_steps / cfg.integration.stride as f64).ceil() as usize + 1;
    let stop = match (cfg.scenario, cfg.integration.saturation_tol) {
        // Anode semantics: run until the cation probability settles.
        (Scenario::Anode, tol) => StopRule::Saturated {
            class: Some(2),
            window: 0.1,
            tol: tol.unwrap_or(1e-5),
            min_time: 0.2 * t_end,
        },
        (_, Some(tol)) => StopRule::Saturated {
            class: None,
            window: 0.1,
            tol,
            min_time: 0.2 * t_end,
        },
        (_, None) => StopRule::None,
    };
    let divisor = cfg.integration.psd_checks.max(1)
        * if stop == StopRule::None { 1 } else { 5 };
    let psd_sample_stride = (expected_samples / divisor).max(1);
    EvolveOptions {
        dt,
        t_end,
        stride: cfg.integration.stride,
        trace_tol: cfg.integration.trace_tol,
        expm: cfg.integration.expm,
        hbar: cfg.params.hbar,
        stop,
        psd_sample_stride,
        scheme: match cfg.integration.dissipator {
            DissipatorKind::Euler => DissipatorScheme::Euler,
            DissipatorKind::CpFactorized => DissipatorScheme::CpFactorized,
        },
    }
}

/// Outcome of one evolution.
pub struct RunOutcome {
    pub series: TimeSeries,
    pub summary: CellSummary,
}

fn summarize(series: &TimeSeries) -> Result<CellSummary> {
    let mut final_probs = [0.0; 4];
    let last = crate::model::subspace_probabilities(series, series.n_samples() - 1);
    final_probs.copy_from_slice(&last);
    let stabilization = detect_stabilization(series, 0.999)?;
    let trace_defect = series
        .trace
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CellSummary {
        final_probs,
        stabilization,
        trace_defect,
    })
}

/// Evolve one cell on an already prepared space with the given rates.
pub fn run_cell(
    cfg: &RunConfig,
    prep: &Prepared,
    rates: &crate::config::ChannelRates,
) -> Result<RunOutcome> {
    let channels = build_channels(&prep.space, cfg, rates)?;
    let mut engine = Engine::new(&prep.blocking, &prep.h, &channels)?;
    let mut rho = BlockedDensity::from_amplitudes(&prep.blocking, &prep.amps)?;
    let opts = evolve_options(cfg, prep);
    let series = engine.evolve(&mut rho, &prep.obs, &opts)?;
    let summary = summarize(&series)?;
    Ok(RunOutcome { series, summary })
}

/// Single (non-sweep) scenario run.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutcome> {
    let prep = prepare(cfg)?;
    run_cell(cfg, &prep, &cfg.rates)
}

/// Completed sweep: axis values plus per-cell results in row-major order.
pub struct SweepOutcome {
    pub axis_names: Vec<&'static str>,
    pub axis_values: Vec<Vec<f64>>,
    pub cells: Vec<std::result::Result<CellSummary, String>>,
}

impl SweepOutcome {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.is_err()).count()
    }
}

/// Run every grid cell independently; cells are pure functions of the
/// config so any thread count produces identical results.
pub fn run_sweep(cfg: &RunConfig, threads: usize) -> Result<SweepOutcome> {
    if cfg.sweep.is_empty() {
        return Err(Error::Config(
            "sweep requested but the config has no [[sweep.axis]] entries".into(),
        ));
    }
    let prep = prepare(cfg)?;
    let axis_names: Vec<&'static str> = cfg.sweep.iter().map(|a| a.quantity.name()).collect();
    let axis_values: Vec<Vec<f64>> = cfg.sweep.iter().map(|a| a.values.clone()).collect();
    let n_cells: usize = axis_values.iter().map(|v| v.len()).product();

    let cell_rates: Vec<crate::config::ChannelRates> = (0..n_cells)
        .map(|cell| {
            let mut rest = cell;
            let mut rates = cfg.rates;
            for a in (0..cfg.sweep.len()).rev() {
                let idx = rest % axis_values[a].len();
                rest /= axis_values[a].len();
                cfg.sweep[a].quantity.apply(&mut rates, axis_values[a][idx]);
            }
            rates
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<std::result::Result<CellSummary, String>> = pool.install(|| {
        cell_rates
            .par_iter()
            .enumerate()
            .map(|(cell, rates)| {
                run_cell(cfg, &prep, rates)
                    .map(|o| o.summary)
                    .map_err(|e| format!("cell {cell}: {e}"))
            })
            .collect()
    });

    Ok(SweepOutcome {
        axis_names,
        axis_values,
        cells,
    })
}

fn header_lines(cfg: &RunConfig, prep_dim: usize, full_dim: usize) -> Vec<String> {
    let mut lines = vec![format!(
        "generated_by = h2qed {}",
        env!("CARGO_PKG_VERSION")
    )];
    lines.extend(cfg.resolved_lines());
    lines.push(format!("basis_dimension = {prep_dim}"));
    lines.push(format!("basis_dimension_unpruned = {full_dim}"));
    lines
}

/// Execute a single run end to end and write `<prefix>_series.dat`.
pub fn execute_run(cfg: &RunConfig) -> Result<PathBuf> {
    let prep = prepare(cfg)?;
    let outcome = run_cell(cfg, &prep, &cfg.rates)?;
    let header = header_lines(cfg, prep.space.dim(), prep.full_dim);
    let path = PathBuf::from(format!("{}_series.dat", cfg.output.prefix));
    write_time_series(&path, &outcome.series, &header)?;
    Ok(path)
}

/// Execute a sweep and write one grid file per observable. Returns the
/// written paths and the number of failed cells.
pub fn execute_sweep(cfg: &RunConfig, threads: usize) -> Result<(Vec<PathBuf>, usize)> {
    let prep = prepare(cfg)?;
    let outcome = run_sweep(cfg, threads)?;
    for (cell, res) in outcome.cells.iter().enumerate() {
        if let Err(msg) = res {
            eprintln!("sweep cell failed: {msg}");
        }
        let _ = cell;
    }
    let header = header_lines(cfg, prep.space.dim(), prep.full_dim);
    let axis_refs: Vec<&[f64]> = outcome.axis_values.iter().map(|v| v.as_slice()).collect();
    let names: Vec<&str> = outcome.axis_names.clone();
    let mut written = Vec::new();
    let observables: [(&str, Box<dyn Fn(&CellSummary) -> f64>); 6] = [
        ("atoms", Box::new(|c: &CellSummary| c.final_probs[0])),
        ("molecule", Box::new(|c: &CellSummary| c.final_probs[1])),
        ("cation", Box::new(|c: &CellSummary| c.final_probs[2])),
        ("other", Box::new(|c: &CellSummary| c.final_probs[3])),
        ("t_stb", Box::new(|c: &CellSummary| c.t_stb())),
        ("trace_defect", Box::new(|c: &CellSummary| c.trace_defect)),
    ];
    for (name, extract) in &observables {
        let path = PathBuf::from(format!("{}_grid_{}.dat", cfg.output.prefix, name));
        write_grid(&path, &header, &names, &axis_refs, name, |cell| {
            match &outcome.cells[cell] {
                Ok(summary) => extract(summary),
                Err(_) => f64::NAN,
            }
        })?;
        written.push(path);
    }
    Ok((written, outcome.n_failed()))
}
