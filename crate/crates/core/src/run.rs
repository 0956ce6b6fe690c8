//! Executes a configuration: builds the spectral spaces, propagates every job,
//! and writes the requested tables plus a `run.json` summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Observable, ResolvedRun, RunConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::hamiltonian::{gauge_boundary_check, AssembledHamiltonian, GaugeBoundaryReport, InteractionModel, SpectralSpace};
use crate::observables::{
    angular_distribution, energy_spectrum, ionization_probability, project, AngularMesh, EnergyGrid, SpectralProjection,
};
use crate::propagator::{
    hash64, pulse_hash, read_checkpoint, CheckpointPolicy, Probe, ProbeSchedule, Propagator, RunTrace,
};
use crate::table::{sha256_hex, write_table, Table};

/// Resolution of the emitted dP/dE grid, a.u.
pub const ENERGY_STEP: f64 = 0.02;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out_dir: Option<PathBuf>,
    /// Resumes a single-job configuration from this checkpoint.
    pub resume: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableRecord {
    pub kind: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobOutput {
    pub ionization_probability: f64,
    pub final_norm: f64,
    pub absorbed_fraction: f64,
    pub bound_population: f64,
    pub gauge_boundary: GaugeBoundaryReport,
    pub steps: usize,
    pub dt: f64,
    pub mean_krylov_dim: f64,
    pub max_residual: f64,
    pub n_radial: usize,
    pub n_channels: usize,
    pub wall_seconds: f64,
    pub tables: Vec<TableRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobFailure {
    pub message: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobResult {
    pub index: usize,
    pub model: InteractionModel,
    pub sweep_value: Option<f64>,
    pub directory: PathBuf,
    /// SHA-256 of the resolved configuration echo.
    pub config_hash: String,
    pub resolved_config: String,
    pub output: Option<JobOutput>,
    pub error: Option<JobFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub code_version: &'static str,
    /// SHA-256 of the configuration text.
    pub config_hash: String,
    pub sweep_parameter: Option<&'static str>,
    pub jobs: Vec<JobResult>,
    pub tables: Vec<TableRecord>,
}

impl RunResult {
    pub fn failed(&self) -> impl Iterator<Item = &JobResult> {
        self.jobs.iter().filter(|j| j.error.is_some())
    }

    pub fn any_numerical_failure(&self) -> bool {
        self.failed().any(|j| j.error.as_ref().is_some_and(|e| e.numerical))
    }
}

/// Hash binding a checkpoint to the physics of a job: the echo without outputs
/// and checkpoint cadence.
pub fn state_hash(job: &ResolvedRun) -> u64 {
    let echo = job.echo();
    let physics: String = echo
        .split("\n[outputs]")
        .next()
        .unwrap_or("")
        .lines()
        .filter(|l| !l.starts_with("checkpoint_every"))
        .flat_map(|l| [l, "\n"])
        .collect();
    hash64(physics.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct SpaceKey(String);

fn space_key(job: &ResolvedRun) -> SpaceKey {
    SpaceKey(format!("{:?}|{}|{:?}", job.basis, job.l_max, job.e_cut))
}

pub fn build_space(job: &ResolvedRun, cache_dir: Option<&Path>) -> Result<SpectralSpace> {
    SpectralSpace::build(job.basis, job.l_max, 1.0, job.e_cut, cache_dir)
}

/// Runs every job of `config`. Per-job failures are recorded in the result; only
/// failures that concern the whole run (resolution, output directory) are returned as errors.
pub fn run(config: &RunConfig, config_text: &str, opts: &RunOptions) -> Result<RunResult> {
    let jobs = config.jobs();
    let resolved = jobs.iter().map(RunConfig::resolve).collect::<Result<Vec<_>>>()?;
    if opts.resume.is_some() && resolved.len() != 1 {
        return Err(Error::invalid("--resume requires a configuration without a sweep"));
    }
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| config.outputs.directory.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let config_hash = sha256_hex(config_text.as_bytes());

    // Bases are built once per distinct (radial basis, l_max, e_cut) and shared.
    let mut keys: BTreeMap<SpaceKey, usize> = BTreeMap::new();
    for job in &resolved {
        let n = keys.len();
        keys.entry(space_key(job)).or_insert(n);
    }
    let mut representative = vec![0; keys.len()];
    for (i, job) in resolved.iter().enumerate().rev() {
        representative[keys[&space_key(job)]] = i;
    }
    let spaces: Vec<std::result::Result<Arc<SpectralSpace>, String>> = representative
        .iter()
        .map(|&i| build_space(&resolved[i], opts.cache_dir.as_deref()).map(Arc::new).map_err(|e| e.to_string()))
        .collect();

    let sweep = config.sweep.as_ref();
    let results: Vec<JobResult> = resolved
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let dir = if resolved.len() == 1 {
                out_dir.clone()
            } else {
                out_dir.join(format!("job_{index:03}_{}", job.model.name()))
            };
            let echo = job.echo();
            let sweep_value = sweep.map(|s| s.values[index % s.values.len()]);
            let (output, error) = match &spaces[keys[&space_key(job)]] {
                Err(msg) => (
                    None,
                    Some(JobFailure {
                        message: format!("building the spectral space failed: {msg}"),
                        numerical: true,
                    }),
                ),
                Ok(space) => match run_job(job, space, &dir, &config_hash, opts.resume.as_deref()) {
                    Ok(out) => (Some(out), None),
                    Err(e) => (
                        None,
                        Some(JobFailure {
                            numerical: e.is_numerical(),
                            message: e.to_string(),
                        }),
                    ),
                },
            };
            JobResult {
                index,
                model: job.model,
                sweep_value,
                directory: dir,
                config_hash: sha256_hex(echo.as_bytes()),
                resolved_config: echo,
                output,
                error,
            }
        })
        .collect();

    let mut tables = Vec::new();
    if resolved.iter().any(|j| j.outputs.wants(Observable::Ionization)) {
        tables.extend(ionization_tables(config, &resolved, &results, &out_dir, &config_hash)?);
    }
    let result = RunResult {
        code_version: env!("CARGO_PKG_VERSION"),
        config_hash,
        sweep_parameter: sweep.map(|s| s.parameter.name()),
        jobs: results,
        tables,
    };
    let path = out_dir.join("run.json");
    let json = serde_json::to_string_pretty(&result).map_err(|e| Error::Format {
        what: "run summary",
        reason: e.to_string(),
    })?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(result)
}

fn metadata(table: Table, config_hash: &str, job: Option<&ResolvedRun>) -> Table {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let t = table
        .meta("config_hash", config_hash)
        .meta("code_version", env!("CARGO_PKG_VERSION"))
        .meta("timestamp_unix", timestamp);
    match job {
        Some(j) => t
            .meta("model", j.model.name())
            .meta("e0_au", j.pulse.e0)
            .meta("omega_au", j.pulse.omega),
        None => t,
    }
}

/// One ionization table per model: P_ion against the swept parameter.
fn ionization_tables(
    config: &RunConfig,
    resolved: &[ResolvedRun],
    results: &[JobResult],
    out_dir: &Path,
    config_hash: &str,
) -> Result<Vec<TableRecord>> {
    let parameter = config.sweep.as_ref().map_or(SweepParameter::E0, |s| s.parameter);
    let mut models: Vec<InteractionModel> = Vec::new();
    for j in resolved {
        if !models.contains(&j.model) {
            models.push(j.model);
        }
    }
    let mut records = Vec::new();
    for model in models {
        let mut table = metadata(Table::new([parameter.column(), "p_ion"]), config_hash, None).meta("model", model.name());
        for (job, res) in resolved.iter().zip(results) {
            if job.model != model {
                continue;
            }
            let Some(out) = &res.output else { continue };
            let x = res.sweep_value.unwrap_or(job.pulse.e0);
            table.push(vec![x, out.ionization_probability]);
        }
        let path = out_dir.join(format!("ionization_{}.csv", model.name()));
        let sha256 = write_table(&table, &path)?;
        records.push(TableRecord {
            kind: "ionization".into(),
            path,
            sha256,
        });
    }
    Ok(records)
}

fn probe_schedule(job: &ResolvedRun) -> ProbeSchedule {
    let mut probes = vec![Probe::Norm];
    if job.outputs.wants(Observable::Probes) {
        probes.extend([Probe::GroundPopulation, Probe::BoundPopulation]);
    }
    if job.outputs.wants(Observable::MPopulation) || job.outputs.wants(Observable::Probes) {
        probes.push(Probe::MNonzeroPopulation);
    }
    ProbeSchedule {
        stride: job.outputs.probe_stride,
        probes,
    }
}

fn run_job(
    job: &ResolvedRun,
    space: &SpectralSpace,
    dir: &Path,
    config_hash: &str,
    resume: Option<&Path>,
) -> Result<JobOutput> {
    let clock = Instant::now();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let channels = job.channels()?;
    let h = AssembledHamiltonian::assemble(job.model, job.pulse, channels, space)?;
    let phash = pulse_hash(&job.pulse);
    let shash = state_hash(job);
    let psi0 = match resume {
        None => h.ground_state(job.pulse.t_start),
        Some(path) => {
            let (header, psi) = read_checkpoint(path)?;
            if header.pulse_hash != phash || header.config_hash != shash {
                return Err(Error::invalid(format!(
                    "checkpoint {} was written for a different configuration",
                    path.display()
                )));
            }
            psi
        }
    };
    let mut prop = Propagator::new(&h, job.propagator, Some(space))?;
    if job.checkpoint_every > 0 {
        prop = prop.with_checkpoints(CheckpointPolicy {
            path: dir.join("state.ndts"),
            every_steps: job.checkpoint_every,
            pulse_hash: phash,
            config_hash: shash,
        });
    }
    let trace = prop.run(psi0, &probe_schedule(job))?;
    let proj = project(&trace.final_state, space, h.channels())?.with_absorbed(trace.absorbed_fraction);
    let mut tables = observable_tables(job, &proj, config_hash, dir)?;
    if let Some(rec) = probe_table(job, &trace, config_hash, dir)? {
        tables.push(rec);
    }
    Ok(JobOutput {
        ionization_probability: ionization_probability(&proj),
        final_norm: trace.final_state.norm_sq(),
        absorbed_fraction: trace.absorbed_fraction,
        bound_population: proj.bound_population(),
        gauge_boundary: gauge_boundary_check(&job.pulse),
        steps: trace.steps,
        dt: trace.dt,
        mean_krylov_dim: trace.mean_krylov_dim,
        max_residual: trace.max_residual,
        n_radial: space.n_retained(),
        n_channels: h.channels().len(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        tables,
    })
}

/// Grid for dP/dE on [0, energy_max].
pub fn spectrum_grid(energy_max: f64) -> Result<EnergyGrid> {
    let n = (energy_max / ENERGY_STEP).round().max(1.0) as usize + 1;
    EnergyGrid::uniform(0.0, energy_max, n)
}

/// Cell-centred grid above threshold for the angular distribution.
pub fn angular_grid(energy_max: f64) -> Result<EnergyGrid> {
    let n = (energy_max / ENERGY_STEP).round().max(2.0) as usize;
    let h = energy_max / n as f64;
    EnergyGrid::uniform(0.5 * h, energy_max - 0.5 * h, n)
}

/// Writes the energy and angular tables requested by `job` for a projected state.
pub fn observable_tables(
    job: &ResolvedRun,
    proj: &SpectralProjection,
    config_hash: &str,
    dir: &Path,
) -> Result<Vec<TableRecord>> {
    let mut records = Vec::new();
    if job.outputs.wants(Observable::EnergySpectrum) {
        let spec = energy_spectrum(proj, &spectrum_grid(job.outputs.energy_max)?)?;
        let mut columns = vec!["energy_au".to_string(), "dpde_total".to_string()];
        columns.extend((0..spec.per_l.len()).map(|l| format!("dpde_l{l}")));
        let mut table = metadata(Table::new(columns), config_hash, Some(job))
            .meta("units", "dP/dE in 1/a.u.")
            .meta("continuum_population", proj.continuum_population());
        for (k, &e) in spec.grid.nodes().iter().enumerate() {
            let mut row = vec![e, spec.total[k]];
            row.extend(spec.per_l.iter().map(|c| c[k]));
            table.push(row);
        }
        let path = dir.join("dpde.csv");
        let sha256 = write_table(&table, &path)?;
        records.push(TableRecord {
            kind: "energy_spectrum".into(),
            path,
            sha256,
        });
    }
    if job.outputs.wants(Observable::AngularDistribution) {
        let mesh = AngularMesh::new(job.n_theta, job.outputs.n_phi)?;
        let dist = angular_distribution(proj, &angular_grid(job.outputs.energy_max)?, &mesh, job.pulse.t_end)?;
        let mut table = metadata(Table::new(["theta_rad", "phi_rad", "dp_domega"]), config_hash, Some(job))
            .meta("integration", format!("incoherent over continuum energies in (0, {}] a.u.", job.outputs.energy_max))
            .meta("axes", "z along polarization, x along propagation");
        for (i, &theta) in dist.mesh.theta.iter().enumerate() {
            for (j, &phi) in dist.mesh.phi.iter().enumerate() {
                table.push(vec![theta, phi, dist.get(i, j)]);
            }
        }
        let path = dir.join("angular.csv");
        let sha256 = write_table(&table, &path)?;
        records.push(TableRecord {
            kind: "angular_distribution".into(),
            path,
            sha256,
        });
    }
    Ok(records)
}

fn probe_table(job: &ResolvedRun, trace: &RunTrace, config_hash: &str, dir: &Path) -> Result<Option<TableRecord>> {
    let wanted = job.outputs.wants(Observable::Probes) || job.outputs.wants(Observable::MPopulation);
    if !wanted {
        return Ok(None);
    }
    let mut columns = vec!["t_au".to_string()];
    columns.extend(trace.series.iter().map(|(p, _)| p.name().to_string()));
    let mut table = metadata(Table::new(columns), config_hash, Some(job));
    for (k, &t) in trace.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(trace.series.iter().map(|(_, v)| v[k]));
        table.push(row);
    }
    let path = dir.join("probes.csv");
    let sha256 = write_table(&table, &path)?;
    Ok(Some(TableRecord {
        kind: "probes".into(),
        path,
        sha256,
    }))
}

/// Post-processes a checkpoint: projects the stored state and writes the observable tables.
pub fn spectrum_from_checkpoint(
    config: &RunConfig,
    checkpoint: &Path,
    out_dir: &Path,
    cache_dir: Option<&Path>,
) -> Result<(f64, Vec<TableRecord>)> {
    let jobs = config.jobs();
    if jobs.len() != 1 {
        return Err(Error::invalid("post-processing requires a configuration without a sweep"));
    }
    let job = jobs[0].resolve()?;
    let (header, psi) = read_checkpoint(checkpoint)?;
    if header.pulse_hash != pulse_hash(&job.pulse) || header.config_hash != state_hash(&job) {
        return Err(Error::invalid(format!(
            "checkpoint {} was written for a different configuration",
            checkpoint.display()
        )));
    }
    let space = build_space(&job, cache_dir)?;
    let channels = job.channels()?;
    let proj = project(&psi, &space, &channels)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let hash = sha256_hex(job.echo().as_bytes());
    let tables = observable_tables(&job, &proj, &hash, out_dir)?;
    Ok((ionization_probability(&proj), tables))
}
