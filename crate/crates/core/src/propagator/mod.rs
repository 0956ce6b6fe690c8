//! Time stepping with the exponential midpoint rule ψ(t + dt) = exp(−i H(t + dt/2) dt) ψ(t),
//! the exponential evaluated in a Lanczos subspace.

mod checkpoint;
mod krylov;
mod mask;

pub use checkpoint::{hash64, pulse_hash, read_checkpoint, write_checkpoint, CheckpointHeader};
pub use krylov::KrylovStats;
pub use mask::{apply_mask, MaskOperator, MaskSpec};

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{scale_raw, AssembledHamiltonian, SpectralSpace, WavefunctionState};
use krylov::{expm_apply, KrylovWorkspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub krylov_dim_max: usize,
    pub krylov_tol: f64,
    /// Rescale to the pre-step norm after every step.
    pub renormalize: bool,
    pub mask: Option<MaskSpec>,
}

impl PropagatorConfig {
    pub const DEFAULT_STEPS_PER_CYCLE: f64 = 200.0;
    pub const DEFAULT_KRYLOV_DIM: usize = 40;
    pub const DEFAULT_KRYLOV_TOL: f64 = 1e-12;

    /// Defaults with 200 steps per optical cycle of `omega`.
    pub fn for_frequency(omega: f64) -> Self {
        Self {
            dt: 2.0 * std::f64::consts::PI / omega / Self::DEFAULT_STEPS_PER_CYCLE,
            krylov_dim_max: Self::DEFAULT_KRYLOV_DIM,
            krylov_tol: Self::DEFAULT_KRYLOV_TOL,
            renormalize: false,
            mask: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(2..=200).contains(&self.krylov_dim_max) {
            return Err(Error::invalid(format!(
                "krylov_dim_max must be in 2..=200, got {}",
                self.krylov_dim_max
            )));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::invalid(format!("krylov_tol must be > 0, got {}", self.krylov_tol)));
        }
        Ok(())
    }
}

/// Quantities recorded along a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Norm,
    GroundPopulation,
    BoundPopulation,
    MNonzeroPopulation,
}

impl Probe {
    pub fn name(self) -> &'static str {
        match self {
            Probe::Norm => "norm",
            Probe::GroundPopulation => "ground_population",
            Probe::BoundPopulation => "bound_population",
            Probe::MNonzeroPopulation => "m_nonzero_population",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    /// Record every `stride` steps (and always at the first and last step).
    pub stride: usize,
    pub probes: Vec<Probe>,
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self {
            stride: 10,
            probes: vec![Probe::Norm],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub final_state: WavefunctionState,
    pub times: Vec<f64>,
    pub series: Vec<(Probe, Vec<f64>)>,
    pub steps: usize,
    /// Step actually used: the window divided into a whole number of steps.
    pub dt: f64,
    pub mean_krylov_dim: f64,
    pub max_residual: f64,
    /// Norm removed by the mask.
    pub absorbed_fraction: f64,
}

impl RunTrace {
    pub fn probe(&self, p: Probe) -> Option<&[f64]> {
        self.series.iter().find(|(q, _)| *q == p).map(|(_, v)| v.as_slice())
    }
}

/// Periodic state dumps during a run.
#[derive(Debug, Clone)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    pub every_steps: usize,
    pub pulse_hash: u64,
    pub config_hash: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub krylov: KrylovStats,
    pub absorbed: f64,
}

pub struct Propagator<'a> {
    h: &'a AssembledHamiltonian,
    cfg: PropagatorConfig,
    mask: Option<MaskOperator>,
    ws: KrylovWorkspace,
    checkpoints: Option<CheckpointPolicy>,
}

impl<'a> Propagator<'a> {
    /// `space` is needed only when the configuration enables a mask.
    pub fn new(h: &'a AssembledHamiltonian, cfg: PropagatorConfig, space: Option<&SpectralSpace>) -> Result<Self> {
        cfg.validate()?;
        let mask = match (cfg.mask, space) {
            (None, _) => None,
            (Some(spec), Some(space)) => Some(MaskOperator::new(spec, space, h.channels())?),
            (Some(_), None) => return Err(Error::invalid("a mask requires the spectral space")),
        };
        Ok(Self {
            h,
            cfg,
            mask,
            ws: KrylovWorkspace::default(),
            checkpoints: None,
        })
    }

    pub fn with_checkpoints(mut self, policy: CheckpointPolicy) -> Self {
        self.checkpoints = Some(policy);
        self
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.cfg
    }

    /// Advances `psi` from psi.t to psi.t + dt, then applies the mask.
    pub fn step(&mut self, psi: &mut WavefunctionState, dt: f64) -> Result<StepReport> {
        let t0 = psi.t;
        let krylov = self.exponential(psi, t0, dt)?;
        psi.t = t0 + dt;
        let absorbed = self.absorb(psi);
        Ok(StepReport { krylov, absorbed })
    }

    fn exponential(&mut self, psi: &mut WavefunctionState, t0: f64, dt: f64) -> Result<KrylovStats> {
        let h = self.h;
        let n = h.n_radial();
        let scalars = h.model().scalars(h.pulse(), t0 + 0.5 * dt);
        let before = psi.norm_sq();
        let stats = expm_apply(
            n,
            psi.raw_mut(),
            dt,
            self.cfg.krylov_dim_max,
            self.cfg.krylov_tol,
            &mut self.ws,
            |v, out| h.apply_with(scalars, v, out),
        )
        .map_err(|s| Error::Propagation {
            t: t0,
            source: Box::new(Error::KrylovNotConverged {
                t: t0,
                residual: s.residual,
                dim: s.dim,
            }),
        })?;
        if self.cfg.renormalize {
            let after = psi.norm_sq();
            if after > 0.0 {
                scale_raw(n, Complex64::new((before / after).sqrt(), 0.0), psi.raw_mut());
            }
        }
        Ok(stats)
    }

    fn absorb(&self, psi: &mut WavefunctionState) -> f64 {
        match &self.mask {
            Some(mask) if !mask.is_identity() => {
                let before = psi.norm_sq();
                mask.apply(psi);
                before - psi.norm_sq()
            }
            _ => 0.0,
        }
    }

    /// Propagates to the end of the pulse window on the grid
    /// t_k = t_start + k·window/N, N = ⌈window/dt⌉. A state whose time lies on
    /// the grid resumes from there.
    pub fn run(&mut self, psi0: WavefunctionState, schedule: &ProbeSchedule) -> Result<RunTrace> {
        self.run_steps(psi0, schedule, usize::MAX)
    }

    /// Like `run`, stopping after at most `limit` steps.
    pub fn run_steps(&mut self, psi0: WavefunctionState, schedule: &ProbeSchedule, limit: usize) -> Result<RunTrace> {
        let h = self.h;
        if psi0.n_channels() != h.channels().len() || psi0.n_radial() != h.n_radial() {
            return Err(Error::BasisMismatch(format!(
                "state has {} × {} coefficients, Hamiltonian expects {} × {}",
                psi0.n_channels(),
                psi0.n_radial(),
                h.channels().len(),
                h.n_radial()
            )));
        }
        let (t_start, t_end) = (h.pulse().t_start, h.pulse().t_end);
        let window = t_end - t_start;
        let n_steps = if window > 0.0 {
            ((window / self.cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
        } else {
            0
        };
        let dt = if n_steps > 0 { window / n_steps as f64 } else { 0.0 };
        let k0 = if n_steps == 0 {
            0
        } else {
            let k = ((psi0.t - t_start) / dt).round();
            if !(0.0..=n_steps as f64).contains(&k) || (t_start + k * dt - psi0.t).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::invalid(format!(
                    "initial time {} is not on the step grid of [{t_start}, {t_end}]",
                    psi0.t
                )));
            }
            k as usize
        };

        let stride = schedule.stride.max(1);
        let mut trace = RunTrace {
            final_state: psi0,
            times: Vec::new(),
            series: schedule.probes.iter().map(|&p| (p, Vec::new())).collect(),
            steps: 0,
            dt,
            mean_krylov_dim: 0.0,
            max_residual: 0.0,
            absorbed_fraction: 0.0,
        };
        let mut psi = std::mem::replace(&mut trace.final_state, h.zero_state(0.0));
        record(h, &psi, &mut trace);
        let mut dim_sum = 0usize;
        let k_end = n_steps.min(k0.saturating_add(limit));
        for k in k0..k_end {
            let t0 = t_start + k as f64 * dt;
            psi.t = t0;
            let stats = self.exponential(&mut psi, t0, dt)?;
            psi.t = t_start + (k + 1) as f64 * dt;
            trace.absorbed_fraction += self.absorb(&mut psi);
            dim_sum += stats.dim;
            trace.max_residual = trace.max_residual.max(stats.residual);
            trace.steps += 1;
            let done = k + 1 - k0;
            if done % stride == 0 || k + 1 == k_end {
                record(h, &psi, &mut trace);
            }
            if let Some(cp) = &self.checkpoints {
                if cp.every_steps > 0 && (done % cp.every_steps == 0 || k + 1 == k_end) {
                    write_checkpoint(&cp.path, &psi, cp.pulse_hash, cp.config_hash)?;
                }
            }
        }
        if trace.steps > 0 {
            trace.mean_krylov_dim = dim_sum as f64 / trace.steps as f64;
        }
        trace.final_state = psi;
        Ok(trace)
    }
}

fn record(h: &AssembledHamiltonian, psi: &WavefunctionState, trace: &mut RunTrace) {
    trace.times.push(psi.t);
    for (probe, values) in &mut trace.series {
        values.push(probe_value(h, psi, *probe));
    }
}

fn probe_value(h: &AssembledHamiltonian, psi: &WavefunctionState, probe: Probe) -> f64 {
    match probe {
        Probe::Norm => psi.norm_sq(),
        Probe::GroundPopulation => {
            let ch = h.channels().index(0, 0).expect("channel (0, 0) is always present");
            psi.get(ch, 0).norm_sqr()
        }
        Probe::BoundPopulation => {
            let n = h.n_radial();
            let e = h.field_free_energies();
            (0..psi.n_channels())
                .map(|c| {
                    let (re, im) = psi.channel(c);
                    (0..n)
                        .filter(|&i| e[c * n + i] < 0.0)
                        .map(|i| re[i] * re[i] + im[i] * im[i])
                        .sum::<f64>()
                })
                .sum()
        }
        Probe::MNonzeroPopulation => h
            .channels()
            .channels()
            .iter()
            .enumerate()
            .filter(|(_, ch)| ch.m != 0)
            .map(|(c, _)| psi.channel_norm_sq(c))
            .sum(),
    }
}

/// One step without a mask.
pub fn step(h: &AssembledHamiltonian, psi: &WavefunctionState, dt: f64, cfg: &PropagatorConfig) -> Result<WavefunctionState> {
    let cfg = PropagatorConfig { mask: None, ..*cfg };
    let mut out = psi.clone();
    Propagator::new(h, cfg, None)?.step(&mut out, dt)?;
    Ok(out)
}

/// Propagates `psi0` across the pulse window.
pub fn propagate(
    h: &AssembledHamiltonian,
    space: Option<&SpectralSpace>,
    psi0: WavefunctionState,
    cfg: &PropagatorConfig,
    schedule: &ProbeSchedule,
) -> Result<RunTrace> {
    Propagator::new(h, *cfg, space)?.run(psi0, schedule)
}

#[cfg(test)]
mod tests;
