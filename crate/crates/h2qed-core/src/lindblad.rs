//! Density-matrix evolution: exact step unitary followed by a first-order
//! Euler application of the dissipator, with Hermiticity restored by
//! symmetrization after every step.
//!
//! The production engine stores the density matrix as one dense block per
//! conserved-charge sector and only touches blocks that carry population.
//! Dropping cross-sector coherence at initialization is exact for every
//! reported quantity: all observables here are diagonal in the basis, the
//! unitary is block-diagonal, and the jump terms map sector blocks to sector
//! blocks, so the off-sector part of the density matrix never feeds back
//! into the tracked blocks.

use ndarray::Array2;
use num_complex::Complex64;

use crate::operators::SparseOp;
use crate::propagator::{eigvals_hermitian, unitary_doubling, ExpmConfig};
use crate::sectors::{BlockColumnMap, Blocking};
use crate::{Error, Result};

/// One open-system channel: a jump operator, its dissipation rate, and the
/// influx-to-dissipation ratio. The influx term reuses the conjugate jump.
#[derive(Clone, Debug)]
pub struct Channel {
    pub label: String,
    pub jump: SparseOp,
    /// Dissipation rate, internal units.
    pub gamma: f64,
    /// Influx rate is `mu * gamma`.
    pub mu: f64,
}

impl Channel {
    pub fn new(label: impl Into<String>, jump: SparseOp, gamma: f64, mu: f64) -> Result<Channel> {
        let label = label.into();
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Config(format!(
                "channel {label}: gamma must be finite and non-negative, got {gamma}"
            )));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::Config(format!(
                "channel {label}: mu must lie in [0, 1) so the net trend stays dissipative, \
                 got {mu}"
            )));
        }
        Ok(Channel {
            label,
            jump,
            gamma,
            mu,
        })
    }
}

/// Assignment of every basis index to a named diagonal observable class.
#[derive(Clone, Debug)]
pub struct DiagonalObservables {
    pub names: Vec<String>,
    /// For each global basis index, the class it belongs to.
    pub class_of: Vec<u8>,
}

impl DiagonalObservables {
    pub fn n_classes(&self) -> usize {
        self.names.len()
    }
}

/// How the dissipator substep is discretized.
///
/// `Euler` is the plain first-order increment rho + L(rho) dt. It does not
/// preserve positivity: the smallest eigenvalue acquires an O(dt) dent that
/// accumulates over weakly damped runs. `CpFactorized` rewrites the same
/// substep as a Kraus map: entry (i, j) of the loss factor becomes
/// sqrt(1 - 2 w_i dt) sqrt(1 - 2 w_j dt) instead of 1 - (w_i + w_j) dt,
/// with the gain terms unchanged. Because every jump operator here has a
/// diagonal A'A, the Kraus operators sum to the identity exactly, so the
/// map is completely positive and trace-preserving at machine precision
/// while agreeing with Euler to second order in dt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DissipatorScheme {
    #[default]
    Euler,
    CpFactorized,
}

/// Early-exit rules evaluated on the recorded samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    None,
    /// Stop once the observable(s) changed by less than `tol` over the
    /// trailing `window` fraction of samples, but never before `min_time`.
    /// `class: Some(c)` watches one class; `None` watches all of them.
    Saturated {
        class: Option<usize>,
        window: f64,
        tol: f64,
        min_time: f64,
    },
}

/// Integration controls for one evolution.
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride` steps (plus the initial and final samples).
    pub stride: usize,
    /// Hard-error threshold on |tr rho - 1|.
    pub trace_tol: f64,
    pub expm: ExpmConfig,
    pub hbar: f64,
    pub stop: StopRule,
    /// Positivity spot-check every this many recorded samples; 0 disables.
    pub psd_sample_stride: usize,
    pub scheme: DissipatorScheme,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 1e-2,
            t_end: 1.0,
            stride: 100,
            trace_tol: 1e-4,
            expm: ExpmConfig::default(),
            hbar: 1.0,
            stop: StopRule::None,
            psd_sample_stride: 0,
            scheme: DissipatorScheme::Euler,
        }
    }
}

impl EvolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if !(self.trace_tol > 0.0) {
            return Err(Error::Config("trace_tol must be positive".into()));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::Config("hbar must be positive".into()));
        }
        Ok(())
    }
}

/// Recorded telemetry of one evolution.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub class_names: Vec<String>,
    pub times: Vec<f64>,
    /// `probs[class][sample]`.
    pub probs: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    /// Post-symmetrization Hermiticity defect at each sample (identically 0).
    pub herm_defect: Vec<f64>,
    /// Largest pre-symmetrization Hermiticity defect seen during the run.
    pub presym_defect_max: f64,
    /// (time, smallest eigenvalue) at the spot-checked samples.
    pub min_eig_checks: Vec<(f64, f64)>,
    pub stopped_early: bool,
}

impl TimeSeries {
    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn final_probs(&self) -> Vec<f64> {
        self.probs
            .iter()
            .map(|p| *p.last().expect("series never empty"))
            .collect()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

/// Density matrix stored as per-sector dense blocks.
#[derive(Clone, Debug)]
pub struct BlockedDensity {
    blocks: Vec<Array2<Complex64>>,
    active: Vec<bool>,
    time: f64,
}

impl BlockedDensity {
    /// Pure-state initialization. Coherence between different sectors is
    /// discarded (see module docs); everything reported stays exact.
    pub fn from_amplitudes(blocking: &Blocking, amps: &[Complex64]) -> Result<BlockedDensity> {
        if amps.len() != blocking.dim() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector {} vs space {}",
                amps.len(),
                blocking.dim()
            )));
        }
        let mut blocks = Vec::with_capacity(blocking.n_blocks());
        let mut active = Vec::with_capacity(blocking.n_blocks());
        for q in 0..blocking.n_blocks() {
            let members = blocking.block(q);
            let n = members.len();
            let psi: Vec<Complex64> = members.iter().map(|&g| amps[g as usize]).collect();
            let mut rho = Array2::zeros((n, n));
            let mut any = false;
            for i in 0..n {
                for j in 0..n {
                    let v = psi[i] * psi[j].conj();
                    rho[(i, j)] = v;
                    any |= v != Complex64::new(0.0, 0.0);
                }
            }
            blocks.push(rho);
            active.push(any);
        }
        Ok(BlockedDensity {
            blocks,
            active,
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn trace(&self) -> f64 {
        let mut t = 0.0;
        for (q, b) in self.blocks.iter().enumerate() {
            if self.active[q] {
                t += b.diag().iter().map(|z| z.re).sum::<f64>();
            }
        }
        t
    }

    pub fn probabilities(&self, blocking: &Blocking, obs: &DiagonalObservables) -> Vec<f64> {
        let mut acc = vec![0.0; obs.n_classes()];
        for (q, b) in self.blocks.iter().enumerate() {
            if !self.active[q] {
                continue;
            }
            for (i, &g) in blocking.block(q).iter().enumerate() {
                acc[obs.class_of[g as usize] as usize] += b[(i, i)].re;
            }
        }
        acc
    }

    /// Smallest eigenvalue across all populated blocks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        let mut saw = false;
        for (q, b) in self.blocks.iter().enumerate() {
            if !self.active[q] {
                continue;
            }
            saw = true;
            let ev = eigvals_hermitian(b)?;
            for v in ev {
                min = min.min(v);
            }
        }
        Ok(if saw { min } else { 0.0 })
    }

    /// Largest |rho - rho'| entry, for test assertions.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut dev = 0.0_f64;
        for (q, b) in self.blocks.iter().enumerate() {
            if !self.active[q] {
                continue;
            }
            let n = b.nrows();
            for i in 0..n {
                for j in i..n {
                    dev = dev.max((b[(i, j)] - b[(j, i)].conj()).norm());
                }
            }
        }
        dev
    }

    /// Dense reassembly, for small-space reference tests.
    pub fn to_dense(&self, blocking: &Blocking) -> Array2<Complex64> {
        let n = blocking.dim();
        let mut m = Array2::zeros((n, n));
        for (q, b) in self.blocks.iter().enumerate() {
            let members = blocking.block(q);
            for (i, &gi) in members.iter().enumerate() {
                for (j, &gj) in members.iter().enumerate() {
                    m[(gi as usize, gj as usize)] = b[(i, j)];
                }
            }
        }
        m
    }
}

struct PreparedChannel {
    gamma: f64,
    mu: f64,
    maps: Vec<BlockColumnMap>,
    influx_maps: Option<Vec<BlockColumnMap>>,
}

/// Blocked split-step engine bound to one Hamiltonian and channel set.
pub struct Engine<'a> {
    blocking: &'a Blocking,
    h_blocks: Vec<Array2<Complex64>>,
    channels: Vec<PreparedChannel>,
    /// Fused loss weights w[i] = sum_k gamma_k/2 * (A'A)_ii + influx part.
    loss_weight: Vec<f64>,
    unitaries: Vec<Option<Array2<Complex64>>>,
    built_dt: Option<(f64, ExpmConfig, f64)>,
}

impl<'a> Engine<'a> {
    pub fn new(blocking: &'a Blocking, h: &SparseOp, channels: &[Channel]) -> Result<Engine<'a>> {
        blocking.check_preserves_blocks(h)?;
        let h_blocks = blocking.dense_blocks(h)?;
        let dim = blocking.dim();
        let mut loss_weight = vec![0.0; dim];
        let mut prepared = Vec::with_capacity(channels.len());
        for ch in channels {
            if ch.gamma == 0.0 {
                continue;
            }
            let maps = blocking.column_maps(&ch.jump)?;
            accumulate_loss(&mut loss_weight, blocking, &maps, ch.gamma / 2.0);
            let influx_maps = if ch.mu > 0.0 {
                let maps_dag = blocking.column_maps(&ch.jump.dagger())?;
                accumulate_loss(&mut loss_weight, blocking, &maps_dag, ch.mu * ch.gamma / 2.0);
                Some(maps_dag)
            } else {
                None
            };
            prepared.push(PreparedChannel {
                gamma: ch.gamma,
                mu: ch.mu,
                maps,
                influx_maps,
            });
        }
        let n_blocks = blocking.n_blocks();
        Ok(Engine {
            blocking,
            h_blocks,
            channels: prepared,
            loss_weight,
            unitaries: vec![None; n_blocks],
            built_dt: None,
        })
    }

    fn unitary(&mut self, q: usize, dt: f64, expm: &ExpmConfig, hbar: f64) -> &Array2<Complex64> {
        if self.built_dt != Some((dt, *expm, hbar)) {
            self.unitaries = vec![None; self.blocking.n_blocks()];
            self.built_dt = Some((dt, *expm, hbar));
        }
        if self.unitaries[q].is_none() {
            self.unitaries[q] = Some(unitary_doubling(&self.h_blocks[q], dt, hbar, expm));
        }
        self.unitaries[q].as_ref().unwrap()
    }

    /// One split step: unitary conjugation, Euler dissipator, symmetrization.
    /// Returns the pre-symmetrization Hermiticity defect.
    pub fn step(&mut self, rho: &mut BlockedDensity, opts: &EvolveOptions) -> Result<f64> {
        let n_blocks = self.blocking.n_blocks();
        // Unitary substep on populated blocks.
        for q in 0..n_blocks {
            if !rho.active[q] || self.h_blocks[q].nrows() == 0 {
                continue;
            }
            let u = self.unitary(q, opts.dt, &opts.expm, opts.hbar).clone();
            let tmp = u.dot(&rho.blocks[q]);
            rho.blocks[q] = tmp.dot(&u.t().mapv(|z| z.conj()));
        }

        // Dissipator substep from the post-unitary snapshot: all gain terms
        // are gathered first so that no block is read after its loss factor
        // has been applied.
        let dt_over_hbar = opts.dt / opts.hbar;
        let mut delta: Vec<Option<Array2<Complex64>>> = vec![None; n_blocks];
        for q in 0..n_blocks {
            if !rho.active[q] {
                continue;
            }
            for ch in &self.channels {
                scatter_gain(
                    &mut delta,
                    &rho.blocks,
                    q,
                    &ch.maps[q],
                    ch.gamma * dt_over_hbar,
                );
                if let Some(influx) = &ch.influx_maps {
                    scatter_gain(
                        &mut delta,
                        &rho.blocks,
                        q,
                        &influx[q],
                        ch.mu * ch.gamma * dt_over_hbar,
                    );
                }
            }
        }
        // Fused anticommutator loss, elementwise and in place.
        for q in 0..n_blocks {
            if !rho.active[q] {
                continue;
            }
            let members = self.blocking.block(q);
            match opts.scheme {
                DissipatorScheme::Euler => {
                    let b = &mut rho.blocks[q];
                    for (i, &gi) in members.iter().enumerate() {
                        for (j, &gj) in members.iter().enumerate() {
                            let w =
                                self.loss_weight[gi as usize] + self.loss_weight[gj as usize];
                            if w != 0.0 {
                                b[(i, j)] *= 1.0 - w * dt_over_hbar;
                            }
                        }
                    }
                }
                DissipatorScheme::CpFactorized => {
                    let mut factor = Vec::with_capacity(members.len());
                    for &gi in members {
                        let x = 1.0 - 2.0 * self.loss_weight[gi as usize] * dt_over_hbar;
                        if x < 0.0 {
                            return Err(Error::Config(format!(
                                "step size too large for the factorized dissipator substep: \
                                 loss weight {} at dt {} exceeds the unit budget",
                                self.loss_weight[gi as usize], opts.dt
                            )));
                        }
                        factor.push(x.sqrt());
                    }
                    let b = &mut rho.blocks[q];
                    for i in 0..members.len() {
                        for j in 0..members.len() {
                            let f = factor[i] * factor[j];
                            if f != 1.0 {
                                b[(i, j)] *= f;
                            }
                        }
                    }
                }
            }
        }
        for (q, d) in delta.into_iter().enumerate() {
            if let Some(d) = d {
                rho.blocks[q] += &d;
                rho.active[q] = true;
            }
        }

        // Symmetrize and measure the defect it removed.
        let mut presym = 0.0_f64;
        for q in 0..n_blocks {
            if !rho.active[q] {
                continue;
            }
            let b = &mut rho.blocks[q];
            let n = b.nrows();
            for i in 0..n {
                for j in i..n {
                    let x = b[(i, j)];
                    let y = b[(j, i)];
                    presym = presym.max((x - y.conj()).norm());
                    let avg = (x + y.conj()) * 0.5;
                    b[(i, j)] = avg;
                    b[(j, i)] = avg.conj();
                }
            }
        }

        rho.time += opts.dt;
        let tr = rho.trace();
        let defect = (tr - 1.0).abs();
        if defect > opts.trace_tol {
            return Err(Error::TraceDrift {
                time: rho.time,
                trace: tr,
                defect,
                tol: opts.trace_tol,
            });
        }
        Ok(presym)
    }

    /// Full evolution loop with recording, spot checks, and stop rules.
    pub fn evolve(
        &mut self,
        rho: &mut BlockedDensity,
        obs: &DiagonalObservables,
        opts: &EvolveOptions,
    ) -> Result<TimeSeries> {
        opts.validate()?;
        if obs.class_of.len() != self.blocking.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable map {} vs space {}",
                obs.class_of.len(),
                self.blocking.dim()
            )));
        }
        let mut series = TimeSeries {
            class_names: obs.names.clone(),
            times: Vec::new(),
            probs: vec![Vec::new(); obs.n_classes()],
            trace: Vec::new(),
            herm_defect: Vec::new(),
            presym_defect_max: 0.0,
            min_eig_checks: Vec::new(),
            stopped_early: false,
        };
        self.record(rho, obs, opts, &mut series)?;

        let n_steps = (opts.t_end / opts.dt - 1e-9).ceil().max(0.0) as u64;
        for step in 1..=n_steps {
            let presym = self.step(rho, opts)?;
            series.presym_defect_max = series.presym_defect_max.max(presym);
            if step % opts.stride as u64 == 0 || step == n_steps {
                self.record(rho, obs, opts, &mut series)?;
                if self.should_stop(&series, opts) {
                    series.stopped_early = true;
                    break;
                }
            }
        }
        Ok(series)
    }

    fn record(
        &self,
        rho: &BlockedDensity,
        obs: &DiagonalObservables,
        opts: &EvolveOptions,
        series: &mut TimeSeries,
    ) -> Result<()> {
        series.times.push(rho.time);
        let probs = rho.probabilities(self.blocking, obs);
        for (c, p) in probs.into_iter().enumerate() {
            series.probs[c].push(p);
        }
        series.trace.push(rho.trace());
        series.herm_defect.push(rho.hermiticity_defect());
        let sample_idx = series.times.len() - 1;
        if opts.psd_sample_stride > 0 && sample_idx % opts.psd_sample_stride == 0 {
            series
                .min_eig_checks
                .push((rho.time, rho.min_eigenvalue()?));
        }
        Ok(())
    }

    fn should_stop(&self, series: &TimeSeries, opts: &EvolveOptions) -> bool {
        let StopRule::Saturated {
            class,
            window,
            tol,
            min_time,
        } = opts.stop
        else {
            return false;
        };
        let n = series.times.len();
        let t = *series.times.last().unwrap();
        if t < min_time {
            return false;
        }
        let w = ((n as f64 * window).ceil() as usize).max(5);
        if w >= n {
            return false;
        }
        let saturated = |p: &Vec<f64>| {
            let tail = &p[n - w..];
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo < tol
        };
        match class {
            Some(c) => saturated(&series.probs[c]),
            None => series.probs.iter().all(saturated),
        }
    }
}

fn accumulate_loss(
    loss: &mut [f64],
    blocking: &Blocking,
    maps: &[BlockColumnMap],
    half_rate: f64,
) {
    for (q, m) in maps.iter().enumerate() {
        for (pos, col) in m.columns.iter().enumerate() {
            if let Some((_, amp)) = col {
                let g = blocking.block(q)[pos] as usize;
                loss[g] += half_rate * amp.norm_sqr();
            }
        }
    }
}

/// delta[target] += rate * A rho_q A' for one source block, where A is the
/// column map (at most one entry per column).
fn scatter_gain(
    delta: &mut [Option<Array2<Complex64>>],
    blocks: &[Array2<Complex64>],
    q: usize,
    map: &BlockColumnMap,
    rate: f64,
) {
    if rate == 0.0 {
        return;
    }
    let any = map.columns.iter().any(Option::is_some);
    if !any {
        return;
    }
    let tq = map.target_block as usize;
    let src = &blocks[q];
    let n_t = blocks[tq].nrows();
    let d = delta[tq].get_or_insert_with(|| Array2::zeros((n_t, n_t)));
    for (i, ci) in map.columns.iter().enumerate() {
        let Some((ti, ai)) = ci else { continue };
        for (j, cj) in map.columns.iter().enumerate() {
            let Some((tj, aj)) = cj else { continue };
            d[(*ti as usize, *tj as usize)] += ai * aj.conj() * src[(i, j)] * rate;
        }
    }
}

/// Textbook dense dissipator, used as the reference implementation and for
/// arbitrary jump operators that the blocked engine does not accept.
pub fn dissipator_dense(rho: &Array2<Complex64>, channels: &[Channel]) -> Result<Array2<Complex64>> {
    let n = rho.nrows();
    let mut out = Array2::zeros((n, n));
    for ch in channels {
        if ch.jump.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "channel {} jump dim {} vs rho dim {}",
                ch.label,
                ch.jump.dim(),
                n
            )));
        }
        if ch.gamma == 0.0 {
            continue;
        }
        let a = ch.jump.to_dense();
        let adag = a.t().mapv(|z| z.conj());
        let contrib = lindblad_term(rho, &a, &adag, ch.gamma);
        out += &contrib;
        if ch.mu > 0.0 {
            let contrib = lindblad_term(rho, &adag, &a, ch.mu * ch.gamma);
            out += &contrib;
        }
    }
    Ok(out)
}

/// gamma * (B rho B' - 1/2 {B'B, rho}) with B' supplied explicitly.
fn lindblad_term(
    rho: &Array2<Complex64>,
    b: &Array2<Complex64>,
    bdag: &Array2<Complex64>,
    gamma: f64,
) -> Array2<Complex64> {
    let gain = b.dot(rho).dot(bdag);
    let n = bdag.dot(b);
    let loss = n.dot(rho) + rho.dot(&n);
    let g = Complex64::new(gamma, 0.0);
    let half = Complex64::new(0.5 * gamma, 0.0);
    gain.mapv(|z| z * g) - loss.mapv(|z| z * half)
}
