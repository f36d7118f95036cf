//! Acceptance suite: twelve release criteria, one test per criterion,
//! each printing one `ACCEPTANCE <n> <name>: PASS|FAIL` line.
//!
//! Tolerances and grids are pinned here, not configurable. Runs share a
//! single dissipative sweep where criteria overlap.

use std::fmt::Write as _;
use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use h2qed_core::config::parse_config;
use h2qed_core::lindblad::{dissipator_dense, Channel, TimeSeries};
use h2qed_core::operators::{assemble_hamiltonian, excitation_number, ModelParams, SparseOp};
use h2qed_core::propagator::{unitary_doubling, unitary_eig, ExpmConfig};
use h2qed_core::scenario::{prepare, run_cell, run_sweep, RunOutcome, SweepOutcome};

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    eprintln!(
        "ACCEPTANCE {n} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn run_from_toml(text: &str) -> RunOutcome {
    let cfg = parse_config(text).expect("acceptance config must parse");
    let prep = prepare(&cfg).expect("space preparation");
    run_cell(&cfg, &prep, &cfg.rates).expect("evolution")
}

/// Criterion 9 bounds, enforced on every acceptance run that records a
/// series: trace within 1e-4, exact hermiticity after symmetrization,
/// spot-checked eigenvalues no lower than -1e-8.
fn assert_physical(label: &str, series: &TimeSeries) -> (f64, f64) {
    let trace_defect = series
        .trace
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max);
    let herm = series.herm_defect.iter().cloned().fold(0.0, f64::max);
    let worst_eig = series
        .min_eig_checks
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    assert!(trace_defect <= 1e-4, "{label}: trace defect {trace_defect:e}");
    assert!(herm == 0.0, "{label}: hermiticity defect {herm:e}");
    assert!(
        !series.min_eig_checks.is_empty(),
        "{label}: no eigenvalue spot checks recorded"
    );
    assert!(
        worst_eig >= -1e-8,
        "{label}: eigenvalue floor {worst_eig:e} at {} checks",
        series.min_eig_checks.len()
    );
    (trace_defect, worst_eig)
}

// ---------------------------------------------------------------- 1

const ANODE_TARGETS: [(u8, f64); 8] = [
    (0, 0.5),
    (1, 0.5),
    (2, 0.5),
    (3, 0.5),
    (4, 0.5),
    (5, 0.75),
    (6, 0.625),
    (7, 0.0),
];

#[test]
fn criterion_01_anode_limits() {
    let mut detail = String::new();
    let mut pass = true;
    for (n, target) in ANODE_TARGETS {
        // Default model parameters; the run ends when the cation drift
        // drops below 1e-5 over the trailing tenth of the samples.
        let outcome = run_from_toml(&format!(
            "scenario = \"anode\"\ninitial_state = \"psi{n}\"\n\
             [integration]\ndt = 0.02\nstride = 100\ndissipator = \"cp\"\n"
        ));
        assert_physical(&format!("anode psi{n}"), &outcome.series);
        assert!(
            outcome.series.stopped_early,
            "anode psi{n}: cation probability did not saturate by t = 30000"
        );
        let cation = outcome.summary.final_probs[2];
        let ok = if n == 7 {
            cation.abs() <= 1e-12
        } else {
            (cation - target).abs() <= 0.01
        };
        pass &= ok;
        let _ = write!(detail, "psi{n}={cation:.4} ");
    }
    verdict(1, "anode-limits", pass, detail.trim());
    assert!(pass, "asymptotic cation probabilities off target: {detail}");
}

/// Companion to criterion 1: the counting argument behind the 1/2, 3/4, 5/8
/// limits predicts the total detached-electron population. That total is
/// reproduced to three decimals; the criterion's shortfall is entirely the
/// share of detachments that happen after the bond has re-broken, which the
/// subspace labels file under atoms rather than cation.
#[test]
fn detached_population_reaches_the_hybridization_limits() {
    use h2qed_core::hilbert::ElectronLevel;
    use h2qed_core::lindblad::{BlockedDensity, Engine, StopRule};
    use h2qed_core::scenario::{build_channels, evolve_options};

    for (n, target) in [(0, 0.5_f64), (5, 0.75)] {
        let cfg = parse_config(&format!(
            "scenario = \"anode\"\ninitial_state = \"psi{n}\"\n\
             [integration]\ndt = 0.02\nt_end = 20000.0\nstride = 100\ndissipator = \"cp\"\n"
        ))
        .unwrap();
        let prep = prepare(&cfg).unwrap();
        let channels = build_channels(&prep.space, &cfg, &cfg.rates).unwrap();
        let mut engine = Engine::new(&prep.blocking, &prep.h, &channels).unwrap();
        let mut rho = BlockedDensity::from_amplitudes(&prep.blocking, &prep.amps).unwrap();
        let mut opts = evolve_options(&cfg, &prep);
        opts.stop = StopRule::None;
        engine.evolve(&mut rho, &prep.obs, &opts).unwrap();
        let dense = rho.to_dense(&prep.blocking);
        let detached: f64 = prep
            .space
            .states()
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                s.el_up == ElectronLevel::Detached || s.el_dn == ElectronLevel::Detached
            })
            .map(|(i, _)| dense[(i, i)].re)
            .sum();
        assert!(
            (detached - target).abs() <= 1e-3,
            "psi{n}: total detached population {detached:.6} vs predicted {target}"
        );
    }
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_closed_degeneracy() {
    // 50 Rabi periods of the bond-phonon exchange at g = 0.02.
    let t_end = 50.0 * std::f64::consts::PI / 0.02;
    let series: Vec<TimeSeries> = (0..=4)
        .map(|n| {
            let outcome = run_from_toml(&format!(
                "scenario = \"unitary\"\ninitial_state = \"psi{n}\"\n\
                 [integration]\ndt = 0.05\nt_end = {t_end}\nstride = 40\n"
            ));
            assert_physical(&format!("closed psi{n}"), &outcome.series);
            outcome.series
        })
        .collect();
    let atoms = 0;
    let mut worst = (0.0f64, 0, 0);
    let mut detail = String::new();
    for a in 0..5 {
        for b in a + 1..5 {
            let diff = series[a].probs[atoms]
                .iter()
                .zip(&series[b].probs[atoms])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if diff > worst.0 {
                worst = (diff, a, b);
            }
            let _ = write!(detail, "psi{a}/psi{b}={diff:.2e} ");
        }
    }
    let pass = worst.0 <= 1e-8;
    verdict(2, "closed-degeneracy", pass, detail.trim());
    assert!(
        pass,
        "max pointwise P(atoms) difference {:.3e} between psi{} and psi{} exceeds 1e-8; all pairs: {detail}",
        worst.0, worst.1, worst.2
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_psi7_ionization_lockout() {
    let outcome = run_from_toml(
        "scenario = \"dissipative\"\ninitial_state = \"psi7\"\n\
         [integration]\ndt = 0.05\nt_end = 600.0\nstride = 100\ndissipator = \"cp\"\n",
    );
    assert_physical("lockout psi7", &outcome.series);
    let cation_max = outcome.series.probs[2].iter().cloned().fold(0.0, f64::max);
    let pass = cation_max <= 1e-12;
    verdict(
        3,
        "psi7-ionization-lockout",
        pass,
        &format!("max cation {cation_max:.2e}"),
    );
    assert!(pass, "cation probability reached {cation_max:e} from psi7");
}

// ---------------------------------------------------------------- 4

const MU_GRID: [f64; 5] = [0.0, 0.225, 0.45, 0.675, 0.9];

#[test]
fn criterion_04_influx_phonon_row() {
    // 5x5 (mu_photon, mu_electron) grid with no phonon influx: the
    // atoms subspace must fully drain in every cell. t_end = 2400 puts
    // every cell past its transient: the slowest electron-refilled cell
    // (0.9, 0.225) is at 6.0e-4 and falling by then, while the
    // mu_electron = 0 cells have converged to their limits.
    //
    // Known red: with zero electron influx a detached electron is never
    // replaced, and any detachment that happens while the bond is broken
    // freezes that weight in the atoms subspace permanently. The frozen
    // floor grows with photon influx (which keeps re-exciting electrons
    // toward detachment) and crosses 1e-3 near mu_photon = 0.4:
    // measured limits 5.7e-4 / 1.069e-3 / 1.387e-3 / 1.545e-3 at
    // mu_photon = 0.225 / 0.45 / 0.675 / 0.9. See README.
    let mut axes = String::new();
    let _ = write!(
        axes,
        "[[sweep.axis]]\nchannel = \"mu_photon\"\nvalues = {MU_GRID:?}\n\
         [[sweep.axis]]\nchannel = \"mu_electron\"\nvalues = {MU_GRID:?}\n"
    );
    let cfg = parse_config(&format!(
        "scenario = \"influx\"\ninitial_state = \"psi6\"\n\
         [integration]\ndt = 0.05\nt_end = 2400.0\nstride = 100\ndissipator = \"cp\"\n{axes}"
    ))
    .unwrap();
    let sweep = run_sweep(&cfg, 1).expect("influx sweep");
    let mut worst = 0.0f64;
    let mut over = String::new();
    for (idx, cell) in sweep.cells.iter().enumerate() {
        let summary = cell.as_ref().expect("cell must integrate");
        let atoms = summary.final_probs[0];
        worst = worst.max(atoms);
        if atoms > 0.001 {
            let _ = write!(
                over,
                "(mu_ph={}, mu_el={}) {:.3e}; ",
                MU_GRID[idx / MU_GRID.len()],
                MU_GRID[idx % MU_GRID.len()],
                atoms
            );
        }
        assert!(summary.trace_defect <= 1e-4);
    }
    let drained = worst <= 0.001;

    // With phonon influx at 0.9 the bond keeps re-breaking: one cell of
    // the same grid demonstrates the atoms subspace staying populated.
    let outcome = run_from_toml(
        "scenario = \"influx\"\ninitial_state = \"psi6\"\n\
         [channels]\nmu_phonon = 0.9\n\
         [integration]\ndt = 0.05\nt_end = 1200.0\nstride = 100\ndissipator = \"cp\"\n",
    );
    assert_physical("influx mu_phonon=0.9", &outcome.series);
    let held = outcome.summary.final_probs[0];
    let pass = drained && held >= 0.01;
    verdict(
        4,
        "influx-phonon-row",
        pass,
        &format!("worst drained cell {worst:.2e}, held cell {held:.3}"),
    );
    assert!(
        pass,
        "mu_phonon=0 cells above the 1e-3 drain bound: {over}(bond-frozen \
         atoms floor at zero electron influx); mu_phonon=0.9 atoms {held:e} (need >=0.01)"
    );
}

// ------------------------------------------------------- shared sweep

const LG_OM_AXIS: [f64; 5] = [6.5, 6.75, 7.0, 7.25, 7.5];
const LG_EL_AXIS: [f64; 5] = [4.5, 5.0, 5.5, 6.0, 6.5];

/// The 5x5 dissipative test grid shared by criteria 5, 6, and 7:
/// gamma_photon x gamma_electron, phonon drain fixed at 10^7.
fn dissipative_grid() -> &'static SweepOutcome {
    static GRID: OnceLock<SweepOutcome> = OnceLock::new();
    GRID.get_or_init(|| {
        let cfg = parse_config(&format!(
            "scenario = \"dissipative\"\ninitial_state = \"psi6\"\n\
             [integration]\ndt = 0.05\nt_end = 1200.0\nstride = 100\ndissipator = \"cp\"\n\
             [[sweep.axis]]\nchannel = \"gamma_photon\"\nvalues = {LG_OM_AXIS:?}\n\
             [[sweep.axis]]\nchannel = \"gamma_electron\"\nvalues = {LG_EL_AXIS:?}\n"
        ))
        .unwrap();
        run_sweep(&cfg, 1).expect("dissipative sweep")
    })
}

fn grid_cell(grid: &SweepOutcome, i_om: usize, i_el: usize) -> &h2qed_core::output::CellSummary {
    grid.cells[i_om * LG_EL_AXIS.len() + i_el]
        .as_ref()
        .expect("cell must integrate")
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_rate_monotonicity() {
    let grid = dissipative_grid();
    // Photon-loss axis at the middle electron rate: cation final
    // probability must not increase.
    let mid_el = 2;
    let along_om: Vec<f64> = (0..5).map(|i| grid_cell(grid, i, mid_el).final_probs[2]).collect();
    let om_ok = along_om.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    // Electron-loss axis at the middle photon rate: must not decrease.
    let mid_om = 2;
    let along_el: Vec<f64> = (0..5).map(|i| grid_cell(grid, mid_om, i).final_probs[2]).collect();
    let el_ok = along_el.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let pass = om_ok && el_ok;
    verdict(
        5,
        "rate-monotonicity",
        pass,
        &format!(
            "cation along gamma_photon [{}], along gamma_electron [{}]",
            fmt(&along_om),
            fmt(&along_el)
        ),
    );
    assert!(om_ok, "cation not non-increasing in gamma_photon: {}", fmt(&along_om));
    assert!(el_ok, "cation not non-decreasing in gamma_electron: {}", fmt(&along_el));
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_06_molecule_dominance() {
    let grid = dissipative_grid();
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for i in 0..5 {
        for j in 0..5 {
            let cell = grid_cell(grid, i, j);
            let margin = cell.final_probs[1] - cell.final_probs[2];
            worst_margin = worst_margin.min(margin);
            pass &= cell.final_probs[1] > cell.final_probs[2];
        }
    }
    verdict(
        6,
        "molecule-dominance",
        pass,
        &format!("min molecule-cation margin {worst_margin:.4}"),
    );
    assert!(pass, "a grid cell has molecule <= cation (margin {worst_margin:e})");
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_stabilization_speedup() {
    let grid = dissipative_grid();
    let mid_el = 2;
    let t_stb: Vec<f64> = (0..5).map(|i| grid_cell(grid, i, mid_el).t_stb()).collect();
    let all_reached = t_stb.iter().all(|t| t.is_finite());
    let monotone = t_stb.windows(2).all(|w| w[1] <= w[0]);
    let pass = all_reached && monotone;
    verdict(
        7,
        "stabilization-speedup",
        pass,
        &format!("t_stb along gamma_photon {t_stb:?}"),
    );
    assert!(all_reached, "stabilization not reached in some cell: {t_stb:?}");
    assert!(monotone, "t_stb not non-increasing along gamma_photon: {t_stb:?}");
}

// ---------------------------------------------------------------- 8

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<Complex64> {
    let a = Array2::from_shape_fn((n, n), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let adag = a.t().mapv(|z| z.conj());
    (&a + &adag).mapv(|z| z * 0.5)
}

#[test]
fn criterion_08_propagator_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_8);
    let cfg = ExpmConfig::default();
    let mut worst_oracle = 0.0f64;
    let mut worst_group = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(4..=64);
        let h = random_hermitian(&mut rng, n);
        let norm = h2qed_core::propagator::eigvals_hermitian(&h)
            .unwrap()
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max);
        let dt = 2.0 / norm.max(1e-12);
        let fast = unitary_doubling(&h, dt, 1.0, &cfg);
        let oracle = unitary_eig(&h, dt, 1.0).unwrap();
        let diff = (&fast - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_oracle = worst_oracle.max(diff);
        let twice = unitary_doubling(&h, 2.0 * dt, 1.0, &cfg);
        let squared = fast.dot(&fast);
        let gdiff = (&squared - &twice).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_group = worst_group.max(gdiff);
    }
    let pass = worst_oracle <= 1e-10 && worst_group <= 1e-9;
    verdict(
        8,
        "propagator-oracle-equivalence",
        pass,
        &format!("max |fast-oracle| {worst_oracle:.2e}, max group defect {worst_group:.2e}"),
    );
    assert!(worst_oracle <= 1e-10, "oracle deviation {worst_oracle:e}");
    assert!(worst_group <= 1e-9, "group property deviation {worst_group:e}");
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_physicality_audit() {
    // Dedicated audit on one run per open-system family; the same bounds
    // are also enforced inside every other criterion via assert_physical.
    let cases = [
        (
            "dissipative",
            "scenario = \"dissipative\"\ninitial_state = \"psi6\"\n\
             [integration]\ndt = 0.05\nt_end = 600.0\nstride = 100\ndissipator = \"cp\"\n",
        ),
        (
            "influx",
            "scenario = \"influx\"\ninitial_state = \"psi6\"\n\
             [channels]\nmu_photon = 0.45\nmu_phonon = 0.45\nmu_electron = 0.45\n\
             [integration]\ndt = 0.05\nt_end = 300.0\nstride = 100\ndissipator = \"cp\"\n",
        ),
        (
            "anode",
            "scenario = \"anode\"\ninitial_state = \"psi5\"\n\
             [integration]\ndt = 0.02\nt_end = 2000.0\nstride = 100\ndissipator = \"cp\"\n",
        ),
    ];
    let mut detail = String::new();
    for (family, toml) in cases {
        let outcome = run_from_toml(toml);
        let checks = outcome.series.min_eig_checks.len();
        assert!(checks >= 10, "{family}: only {checks} eigenvalue spot checks");
        let (trace, eig) = assert_physical(family, &outcome.series);
        let _ = write!(detail, "{family}: trace {trace:.1e} eig {eig:.1e} ({checks} checks); ");
    }
    verdict(9, "physicality", true, detail.trim_end_matches("; "));
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_dissipator_trace_neutrality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_10);
    let dim = 16;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        // Random density matrix: normalized Wishart-like PSD.
        let a = Array2::from_shape_fn((dim, dim), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let mut rho = a.dot(&a.t().mapv(|z| z.conj()));
        let tr: Complex64 = (0..dim).map(|i| rho[(i, i)]).sum();
        rho.mapv_inplace(|z| z / tr);

        let n_channels = rng.gen_range(1..=3);
        let channels: Vec<Channel> = (0..n_channels)
            .map(|k| {
                let entries: Vec<(u32, u32, Complex64)> = (0..dim as u32)
                    .flat_map(|i| (0..dim as u32).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        (
                            i,
                            j,
                            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                        )
                    })
                    .collect();
                Channel::new(
                    format!("random_{k}"),
                    SparseOp::from_triplets(dim, entries),
                    rng.gen::<f64>() * 2.0,
                    rng.gen::<f64>() * 0.99,
                )
                .unwrap()
            })
            .collect();
        let l = dissipator_dense(&rho, &channels).unwrap();
        let tr_l: Complex64 = (0..dim).map(|i| l[(i, i)]).sum();
        worst = worst.max(tr_l.norm());
    }
    let pass = worst <= 1e-12;
    verdict(
        10,
        "dissipator-trace-neutrality",
        pass,
        &format!("max |tr L(rho)| {worst:.2e} over 50 instances"),
    );
    assert!(pass, "dissipator trace leakage {worst:e}");
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_closed_system_conservation() {
    // With tunneling and bond exchange off, the excitation number is
    // conserved exactly: the sparse commutator has no entries at all.
    let space = h2qed_core::hilbert::StateSpace::build(Default::default());
    let mut params = ModelParams::default();
    params.zeta = 0.0;
    params.g_ph = 0.0;
    let h = assemble_hamiltonian(&space, &params).unwrap();
    let n_op = excitation_number(&space);
    let comm = h.commutator(&n_op).unwrap();
    let comm_zero = comm.is_zero();
    let comm_max = comm.max_abs();

    // Subspace probabilities partition the trace along a closed run.
    let outcome = run_from_toml(
        "scenario = \"unitary\"\ninitial_state = \"psi6\"\n\
         [integration]\ndt = 0.05\nt_end = 200.0\nstride = 100\n",
    );
    let series = &outcome.series;
    let mut worst_partition = 0.0f64;
    for k in 0..series.n_samples() {
        let sum: f64 = (0..4).map(|c| series.probs[c][k]).sum();
        worst_partition = worst_partition.max((sum - series.trace[k]).abs());
    }
    let pass = comm_zero && worst_partition <= 1e-12;
    verdict(
        11,
        "closed-system-conservation",
        pass,
        &format!("commutator max {comm_max:.1e}, partition defect {worst_partition:.2e}"),
    );
    assert!(comm_zero, "[H, N] has entries up to {comm_max:e}");
    assert!(worst_partition <= 1e-12, "partition defect {worst_partition:e}");
}

// ---------------------------------------------------------------- 12

#[test]
fn criterion_12_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.toml");
    let prefix = dir.path().join("det").to_str().unwrap().to_string();
    std::fs::write(
        &config_path,
        format!(
            "scenario = \"dissipative\"\ninitial_state = \"psi6\"\n\
             [integration]\ndt = 0.05\nt_end = 20.0\nstride = 20\ndissipator = \"cp\"\n\
             [[sweep.axis]]\nchannel = \"gamma_photon\"\nvalues = [6.5, 7.0, 7.5]\n\
             [[sweep.axis]]\nchannel = \"gamma_electron\"\nvalues = [5.0, 6.0]\n\
             [output]\nprefix = \"{prefix}\"\n"
        ),
    )
    .unwrap();
    let run = |threads: &str| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_h2qed"))
            .args(["sweep", "--threads", threads, "--config"])
            .arg(&config_path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "sweep failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let names = ["atoms", "molecule", "cation", "other", "t_stb", "trace_defect"];
        names
            .iter()
            .map(|n| std::fs::read(format!("{prefix}_grid_{n}.dat")).unwrap())
            .collect::<Vec<_>>()
    };
    let first = run("1");
    let second = run("1");
    let threaded = run("3");
    let pass = first == second && first == threaded;
    verdict(
        12,
        "sweep-determinism",
        pass,
        "rerun and 1-vs-3-thread grid files byte-compared",
    );
    assert_eq!(first, second, "grid files differ between identical reruns");
    assert_eq!(first, threaded, "grid files differ across thread counts");
}
