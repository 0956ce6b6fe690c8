//! Run configuration: a TOML document with `model` and the sections
//! `[pulse]`, `[basis]`, `[propagator]`, `[outputs]` and `[sweep]`.
//!
//! ```toml
//! model = "envelope_vg"
//!
//! [pulse]
//! shape = "sin2"          # sin2 | gaussian | fermi_dirac
//! omega = 3.5
//! e0 = 45.0               # or intensity (W/cm²) or quiver_fraction (E₀/ω in units of c)
//! n_cycles = 15           # or duration (a.u.)
//! cep = 0.0
//! # sigma = 0.8           # fermi_dirac only
//! # t_start, t_end        # window override
//!
//! [basis]
//! r_max = "auto"          # or a radius in a.u.
//! order = 7
//! n_breakpoints = "auto"
//! knot_law = "sqrt_ramp"  # or linear
//! r_match = 20.0
//! l_max = 20
//! m_max = "auto"          # l_max for nondipole models, 0 for dipole
//! e_cut = 30.0
//! symmetry = "full"       # or reflection_even
//!
//! [propagator]
//! steps_per_cycle = 200   # or dt
//! krylov_dim_max = 40
//! krylov_tol = 1e-12
//! renormalize = false
//! checkpoint_every = 0
//! # mask = { r_on = 100.0, exponent = 0.125 }
//!
//! [outputs]
//! observables = ["ionization", "energy_spectrum"]
//! probe_stride = 10
//! directory = "out"
//! energy_max = 15.0
//! n_theta = "auto"
//! n_phi = 96
//!
//! [sweep]
//! parameter = "e0"
//! values = [10.0, 20.0, 30.0]
//! models = ["dipole", "first_order"]   # optional second axis
//! ```
//!
//! Every error carries the line and column of the offending key or value.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::angular::{ChannelBasis, Symmetry};
use crate::error::{Error, Result};
use crate::hamiltonian::InteractionModel;
use crate::propagator::{MaskSpec, PropagatorConfig};
use crate::pulse::{EnvelopeShape, Pulse};
use crate::radial::{default_r_max, BasisParams, KnotLaw};
use crate::units::{field_for_quiver_fraction, field_from_intensity};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

type S<T> = Option<Spanned<T>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: S<String>,
    pulse: S<RawPulse>,
    basis: Option<RawBasis>,
    propagator: Option<RawPropagator>,
    outputs: Option<RawOutputs>,
    sweep: S<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    shape: S<String>,
    omega: S<f64>,
    e0: S<f64>,
    intensity: S<f64>,
    quiver_fraction: S<f64>,
    n_cycles: S<f64>,
    duration: S<f64>,
    cep: S<f64>,
    sigma: S<f64>,
    t_start: S<f64>,
    t_end: S<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AutoOr<T> {
    Value(T),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    r_max: S<AutoOr<f64>>,
    order: S<usize>,
    n_breakpoints: S<AutoOr<usize>>,
    knot_law: S<String>,
    r_match: S<f64>,
    l_max: S<usize>,
    m_max: S<AutoOr<usize>>,
    e_cut: S<f64>,
    symmetry: S<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMask {
    r_on: S<f64>,
    exponent: S<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagator {
    dt: S<f64>,
    steps_per_cycle: S<f64>,
    krylov_dim_max: S<usize>,
    krylov_tol: S<f64>,
    renormalize: S<bool>,
    checkpoint_every: S<usize>,
    mask: S<RawMask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    observables: S<Vec<Spanned<String>>>,
    probe_stride: S<usize>,
    directory: S<String>,
    energy_max: S<f64>,
    n_theta: S<AutoOr<usize>>,
    n_phi: S<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: S<String>,
    values: S<Vec<f64>>,
    models: S<Vec<Spanned<String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldStrength {
    /// Peak field, a.u.
    E0(f64),
    /// Cycle-averaged intensity, W/cm².
    Intensity(f64),
    /// Peak quiver velocity E₀/ω as a fraction of c.
    QuiverFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseLength {
    Cycles(f64),
    Duration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub shape: EnvelopeShape,
    pub omega: f64,
    pub field: FieldStrength,
    pub length: PulseLength,
    pub cep: f64,
    pub window: Option<(f64, f64)>,
}

impl PulseSpec {
    pub fn e0(&self) -> f64 {
        match self.field {
            FieldStrength::E0(e) => e,
            FieldStrength::Intensity(i) => field_from_intensity(i),
            FieldStrength::QuiverFraction(q) => field_for_quiver_fraction(self.omega, q),
        }
    }

    pub fn duration(&self) -> f64 {
        match self.length {
            PulseLength::Cycles(n) => n * 2.0 * std::f64::consts::PI / self.omega,
            PulseLength::Duration(t) => t,
        }
    }

    pub fn build(&self) -> Result<Pulse> {
        let pulse = match self.length {
            PulseLength::Cycles(n) => Pulse::with_cycles(self.shape, self.e0(), self.omega, n)?,
            PulseLength::Duration(t) => Pulse::new(self.shape, self.e0(), self.omega, t)?,
        }
        .with_cep(self.cep);
        match self.window {
            Some((a, b)) => pulse.with_window(a, b),
            None => Ok(pulse),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub r_max: Auto<f64>,
    pub order: usize,
    pub n_breakpoints: Auto<usize>,
    pub knot_law: KnotLaw,
    pub l_max: usize,
    pub m_max: Auto<usize>,
    pub e_cut: f64,
    pub symmetry: Symmetry,
}

/// Breakpoint count for a box: spacing 0.25 a.u. in the linear region keeps the
/// box states accurate up to the default energy cut.
pub fn default_breakpoints(r_max: f64) -> usize {
    (4.0 * r_max).ceil() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSpec {
    Dt(f64),
    StepsPerCycle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSpec {
    pub step: StepSpec,
    pub krylov_dim_max: usize,
    pub krylov_tol: f64,
    pub renormalize: bool,
    pub checkpoint_every: usize,
    pub mask: Option<MaskSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Ionization,
    EnergySpectrum,
    AngularDistribution,
    MPopulation,
    Probes,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::Ionization,
        Observable::EnergySpectrum,
        Observable::AngularDistribution,
        Observable::MPopulation,
        Observable::Probes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Ionization => "ionization",
            Observable::EnergySpectrum => "energy_spectrum",
            Observable::AngularDistribution => "angular_distribution",
            Observable::MPopulation => "m_population",
            Observable::Probes => "probes",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub observables: Vec<Observable>,
    pub probe_stride: usize,
    pub directory: PathBuf,
    /// Upper end of the emitted energy grid, a.u.
    pub energy_max: f64,
    pub n_theta: Auto<usize>,
    pub n_phi: usize,
}

impl OutputSpec {
    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    E0,
    Intensity,
    QuiverFraction,
    Omega,
    NCycles,
    Duration,
    Cep,
    LMax,
    ECut,
}

impl SweepParameter {
    const ALL: [SweepParameter; 9] = [
        SweepParameter::E0,
        SweepParameter::Intensity,
        SweepParameter::QuiverFraction,
        SweepParameter::Omega,
        SweepParameter::NCycles,
        SweepParameter::Duration,
        SweepParameter::Cep,
        SweepParameter::LMax,
        SweepParameter::ECut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::E0 => "e0",
            SweepParameter::Intensity => "intensity",
            SweepParameter::QuiverFraction => "quiver_fraction",
            SweepParameter::Omega => "omega",
            SweepParameter::NCycles => "n_cycles",
            SweepParameter::Duration => "duration",
            SweepParameter::Cep => "cep",
            SweepParameter::LMax => "l_max",
            SweepParameter::ECut => "e_cut",
        }
    }

    /// Column header with units.
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::E0 => "e0_au",
            SweepParameter::Intensity => "intensity_w_cm2",
            SweepParameter::QuiverFraction => "quiver_fraction",
            SweepParameter::Omega => "omega_au",
            SweepParameter::NCycles => "n_cycles",
            SweepParameter::Duration => "duration_au",
            SweepParameter::Cep => "cep_rad",
            SweepParameter::LMax => "l_max",
            SweepParameter::ECut => "e_cut_au",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub models: Option<Vec<InteractionModel>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: InteractionModel,
    pub pulse: PulseSpec,
    pub basis: BasisSpec,
    pub propagator: PropagatorSpec,
    pub outputs: OutputSpec,
    pub sweep: Option<SweepSpec>,
}

/// One job with every automatic choice made explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub model: InteractionModel,
    pub pulse: Pulse,
    pub basis: BasisParams,
    pub l_max: usize,
    pub m_max: usize,
    pub e_cut: f64,
    pub symmetry: Symmetry,
    pub propagator: PropagatorConfig,
    pub checkpoint_every: usize,
    pub outputs: OutputSpec,
    pub n_theta: usize,
}

impl ResolvedRun {
    pub fn channels(&self) -> Result<ChannelBasis> {
        ChannelBasis::new(self.l_max, self.m_max, self.symmetry)
    }

    /// A complete configuration without automatic values or sweep that reproduces this job.
    pub fn echo(&self) -> String {
        use std::fmt::Write;
        let f = |x: f64| format!("{x:?}");
        let s = |x: &str| toml::Value::String(x.to_string()).to_string();
        let p = &self.pulse;
        let b = &self.basis;
        let c = &self.propagator;
        let o = &self.outputs;
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "model = {}", s(self.model.name()));

        let _ = writeln!(w, "\n[pulse]");
        let shape = match p.shape {
            EnvelopeShape::SinSquared => "sin2",
            EnvelopeShape::Gaussian => "gaussian",
            EnvelopeShape::FermiDirac { .. } => "fermi_dirac",
        };
        let _ = writeln!(w, "shape = {}", s(shape));
        if let EnvelopeShape::FermiDirac { sigma } = p.shape {
            let _ = writeln!(w, "sigma = {}", f(sigma));
        }
        let _ = writeln!(w, "omega = {}", f(p.omega));
        let _ = writeln!(w, "e0 = {}", f(p.e0));
        let _ = writeln!(w, "duration = {}", f(p.duration));
        let _ = writeln!(w, "cep = {}", f(p.cep));
        let _ = writeln!(w, "t_start = {}", f(p.t_start));
        let _ = writeln!(w, "t_end = {}", f(p.t_end));

        let _ = writeln!(w, "\n[basis]");
        let _ = writeln!(w, "r_max = {}", f(b.r_max));
        let _ = writeln!(w, "order = {}", b.order);
        let _ = writeln!(w, "n_breakpoints = {}", b.n_breakpoints);
        match b.knot_law {
            KnotLaw::Linear => {
                let _ = writeln!(w, "knot_law = \"linear\"");
            }
            KnotLaw::SqrtRamp { r_match } => {
                let _ = writeln!(w, "knot_law = \"sqrt_ramp\"\nr_match = {}", f(r_match));
            }
        }
        let _ = writeln!(w, "l_max = {}", self.l_max);
        let _ = writeln!(w, "m_max = {}", self.m_max);
        let _ = writeln!(w, "e_cut = {}", f(self.e_cut));
        let symmetry = match self.symmetry {
            Symmetry::Full => "full",
            Symmetry::ReflectionEven => "reflection_even",
        };
        let _ = writeln!(w, "symmetry = {}", s(symmetry));

        let _ = writeln!(w, "\n[propagator]");
        let _ = writeln!(w, "dt = {}", f(c.dt));
        let _ = writeln!(w, "krylov_dim_max = {}", c.krylov_dim_max);
        let _ = writeln!(w, "krylov_tol = {}", f(c.krylov_tol));
        let _ = writeln!(w, "renormalize = {}", c.renormalize);
        let _ = writeln!(w, "checkpoint_every = {}", self.checkpoint_every);
        if let Some(m) = c.mask {
            let _ = writeln!(w, "mask = {{ r_on = {}, exponent = {} }}", f(m.r_on), f(m.exponent));
        }

        let _ = writeln!(w, "\n[outputs]");
        let list: Vec<String> = o.observables.iter().map(|x| s(x.name())).collect();
        let _ = writeln!(w, "observables = [{}]", list.join(", "));
        let _ = writeln!(w, "probe_stride = {}", o.probe_stride);
        let _ = writeln!(w, "directory = {}", s(&o.directory.to_string_lossy()));
        let _ = writeln!(w, "energy_max = {}", f(o.energy_max));
        let _ = writeln!(w, "n_theta = {}", self.n_theta);
        let _ = writeln!(w, "n_phi = {}", o.n_phi);
        out
    }
}

impl RunConfig {
    /// One configuration per sweep point (and model), in sweep order.
    pub fn jobs(&self) -> Vec<RunConfig> {
        let Some(sweep) = &self.sweep else {
            return vec![self.clone()];
        };
        let models = sweep.models.clone().unwrap_or_else(|| vec![self.model]);
        let mut out = Vec::new();
        for &model in &models {
            for &v in &sweep.values {
                let mut c = self.clone();
                c.sweep = None;
                c.model = model;
                match sweep.parameter {
                    SweepParameter::E0 => c.pulse.field = FieldStrength::E0(v),
                    SweepParameter::Intensity => c.pulse.field = FieldStrength::Intensity(v),
                    SweepParameter::QuiverFraction => c.pulse.field = FieldStrength::QuiverFraction(v),
                    SweepParameter::Omega => c.pulse.omega = v,
                    SweepParameter::NCycles => c.pulse.length = PulseLength::Cycles(v),
                    SweepParameter::Duration => c.pulse.length = PulseLength::Duration(v),
                    SweepParameter::Cep => c.pulse.cep = v,
                    SweepParameter::LMax => c.basis.l_max = v as usize,
                    SweepParameter::ECut => c.basis.e_cut = v,
                }
                out.push(c);
            }
        }
        out
    }

    /// Makes every automatic choice for a configuration without a sweep.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let pulse = self.pulse.build()?;
        let b = &self.basis;
        let r_max = match b.r_max {
            Auto::Auto => default_r_max(pulse.quiver_amplitude()),
            Auto::Fixed(r) => r,
        };
        let n_breakpoints = match b.n_breakpoints {
            Auto::Auto => default_breakpoints(r_max),
            Auto::Fixed(n) => n,
        };
        let m_max = match b.m_max {
            Auto::Auto if self.model.is_dipole() => 0,
            Auto::Auto => b.l_max,
            Auto::Fixed(m) => m,
        };
        if m_max > b.l_max {
            return Err(Error::invalid(format!("m_max = {m_max} exceeds l_max = {}", b.l_max)));
        }
        let p = &self.propagator;
        let dt = match p.step {
            StepSpec::Dt(dt) => dt,
            StepSpec::StepsPerCycle(n) => pulse.period() / n,
        };
        let propagator = PropagatorConfig {
            dt,
            krylov_dim_max: p.krylov_dim_max,
            krylov_tol: p.krylov_tol,
            renormalize: p.renormalize,
            mask: p.mask,
        };
        propagator.validate()?;
        let n_theta = match self.outputs.n_theta {
            Auto::Auto => (2 * b.l_max + 2).max(48),
            Auto::Fixed(n) => n,
        };
        Ok(ResolvedRun {
            model: self.model,
            pulse,
            basis: BasisParams {
                r_max,
                order: b.order,
                n_breakpoints,
                knot_law: b.knot_law,
            },
            l_max: b.l_max,
            m_max,
            e_cut: b.e_cut,
            symmetry: b.symmetry,
            propagator,
            checkpoint_every: p.checkpoint_every,
            outputs: OutputSpec {
                n_theta: Auto::Fixed(n_theta),
                ..self.outputs.clone()
            },
            n_theta,
        })
    }
}

/// Collects diagnostics with positions.
struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        let (line, column) = position(self.text, span.start);
        ConfigError {
            line,
            column,
            message: message.into(),
        }
    }

    fn positive(&self, v: &Spanned<f64>, name: &str) -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(self.err(v.span(), format!("{name} must be a finite number > 0, got {x}")))
        }
    }

    fn finite(&self, v: &Spanned<f64>, name: &str) -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err(v.span(), format!("{name} must be finite")))
        }
    }

    fn one_of<'v, T>(
        &self,
        section: Range<usize>,
        options: &[(&'static str, &'v S<T>)],
    ) -> Result<(&'static str, &'v Spanned<T>), ConfigError> {
        let present: Vec<_> = options
            .iter()
            .filter_map(|(name, v)| v.as_ref().map(|v| (*name, v)))
            .collect();
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        match present.as_slice() {
            [one] => Ok(*one),
            [] => Err(self.err(section, format!("exactly one of {} is required", names.join(", ")))),
            [_, second, ..] => Err(self.err(
                second.1.span(),
                format!("only one of {} may be given", names.join(", ")),
            )),
        }
    }
}

fn model_from(ctx: &Ctx, v: &Spanned<String>) -> Result<InteractionModel, ConfigError> {
    InteractionModel::from_name(v.get_ref()).ok_or_else(|| {
        let names: Vec<&str> = InteractionModel::ALL.iter().map(|m| m.name()).collect();
        ctx.err(
            v.span(),
            format!("unknown model `{}`, expected one of {}", v.get_ref(), names.join(", ")),
        )
    })
}

fn auto_or<T: Copy>(ctx: &Ctx, v: &Spanned<AutoOr<T>>, name: &str) -> Result<Auto<T>, ConfigError> {
    match v.get_ref() {
        AutoOr::Value(x) => Ok(Auto::Fixed(*x)),
        AutoOr::Word(w) if w == "auto" => Ok(Auto::Auto),
        AutoOr::Word(w) => Err(ctx.err(v.span(), format!("{name} must be a number or \"auto\", got `{w}`"))),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let ctx = Ctx { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = position(text, e.span().map_or(0, |s| s.start));
        ConfigError {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;

    let model = match &raw.model {
        Some(m) => model_from(&ctx, m)?,
        None => return Err(ctx.err(0..0, "missing required key `model`")),
    };

    let Some(pulse_raw) = &raw.pulse else {
        return Err(ctx.err(0..0, "missing required section [pulse]"));
    };
    let pspan = pulse_raw.span();
    let rp = pulse_raw.get_ref();
    let omega = match &rp.omega {
        Some(v) => ctx.positive(v, "omega")?,
        None => return Err(ctx.err(pspan, "missing required key `omega`")),
    };
    let shape_name = rp.shape.as_ref().ok_or_else(|| ctx.err(pspan.clone(), "missing required key `shape`"))?;
    let shape = match shape_name.get_ref().as_str() {
        "sin2" => EnvelopeShape::SinSquared,
        "gaussian" => EnvelopeShape::Gaussian,
        "fermi_dirac" => {
            let sigma = rp
                .sigma
                .as_ref()
                .ok_or_else(|| ctx.err(shape_name.span(), "shape fermi_dirac requires `sigma`"))?;
            EnvelopeShape::FermiDirac {
                sigma: ctx.positive(sigma, "sigma")?,
            }
        }
        other => {
            return Err(ctx.err(
                shape_name.span(),
                format!("unknown shape `{other}`, expected sin2, gaussian or fermi_dirac"),
            ))
        }
    };
    if let (Some(s), false) = (&rp.sigma, matches!(shape, EnvelopeShape::FermiDirac { .. })) {
        return Err(ctx.err(s.span(), "`sigma` applies only to shape fermi_dirac"));
    }
    let field = match ctx.one_of(
        pspan.clone(),
        &[
            ("e0", &rp.e0),
            ("intensity", &rp.intensity),
            ("quiver_fraction", &rp.quiver_fraction),
        ],
    )? {
        ("e0", v) => {
            let x = ctx.finite(v, "e0")?;
            if x < 0.0 {
                return Err(ctx.err(v.span(), format!("e0 must be >= 0, got {x}")));
            }
            FieldStrength::E0(x)
        }
        ("intensity", v) => {
            let x = ctx.finite(v, "intensity")?;
            if x < 0.0 {
                return Err(ctx.err(v.span(), format!("intensity must be >= 0, got {x}")));
            }
            FieldStrength::Intensity(x)
        }
        (_, v) => FieldStrength::QuiverFraction(ctx.positive(v, "quiver_fraction")?),
    };
    let length = match ctx.one_of(pspan.clone(), &[("n_cycles", &rp.n_cycles), ("duration", &rp.duration)])? {
        ("n_cycles", v) => PulseLength::Cycles(ctx.positive(v, "n_cycles")?),
        (_, v) => PulseLength::Duration(ctx.positive(v, "duration")?),
    };
    let cep = match &rp.cep {
        Some(v) => ctx.finite(v, "cep")?,
        None => 0.0,
    };
    let window = match (&rp.t_start, &rp.t_end) {
        (None, None) => None,
        (Some(a), Some(b)) => {
            let (x, y) = (ctx.finite(a, "t_start")?, ctx.finite(b, "t_end")?);
            if !(x < y) {
                return Err(ctx.err(b.span(), "t_end must exceed t_start"));
            }
            Some((x, y))
        }
        (Some(a), None) => return Err(ctx.err(a.span(), "t_start requires t_end")),
        (None, Some(b)) => return Err(ctx.err(b.span(), "t_end requires t_start")),
    };
    let pulse = PulseSpec {
        shape,
        omega,
        field,
        length,
        cep,
        window,
    };

    let basis = {
        let empty = RawBasis {
            r_max: None,
            order: None,
            n_breakpoints: None,
            knot_law: None,
            r_match: None,
            l_max: None,
            m_max: None,
            e_cut: None,
            symmetry: None,
        };
        let rb = raw.basis.as_ref().unwrap_or(&empty);
        let r_max = match &rb.r_max {
            Some(v) => match auto_or(&ctx, v, "r_max")? {
                Auto::Fixed(r) if !(r > 0.0 && r.is_finite()) => {
                    return Err(ctx.err(v.span(), format!("r_max must be > 0, got {r}")))
                }
                a => a,
            },
            None => Auto::Auto,
        };
        let order = match &rb.order {
            Some(v) if !(4..=20).contains(v.get_ref()) => {
                return Err(ctx.err(v.span(), format!("order must be in 4..=20, got {}", v.get_ref())))
            }
            Some(v) => *v.get_ref(),
            None => 7,
        };
        let n_breakpoints = match &rb.n_breakpoints {
            Some(v) => match auto_or(&ctx, v, "n_breakpoints")? {
                Auto::Fixed(n) if n < order + 2 => {
                    return Err(ctx.err(v.span(), format!("n_breakpoints must be at least order + 2 = {}", order + 2)))
                }
                a => a,
            },
            None => Auto::Auto,
        };
        let r_match = match &rb.r_match {
            Some(v) => ctx.positive(v, "r_match")?,
            None => KnotLaw::DEFAULT_MATCH_RADIUS,
        };
        let knot_law = match rb.knot_law.as_ref().map(|v| (v.get_ref().as_str(), v.span())) {
            None | Some(("sqrt_ramp", _)) => KnotLaw::SqrtRamp { r_match },
            Some(("linear", _)) => {
                if let Some(m) = &rb.r_match {
                    return Err(ctx.err(m.span(), "`r_match` applies only to knot_law sqrt_ramp"));
                }
                KnotLaw::Linear
            }
            Some((other, span)) => {
                return Err(ctx.err(span, format!("unknown knot_law `{other}`, expected sqrt_ramp or linear")))
            }
        };
        if let (KnotLaw::SqrtRamp { r_match }, Auto::Fixed(r)) = (knot_law, r_max) {
            if r_match >= r {
                let span = rb.r_match.as_ref().map(|v| v.span()).or(rb.r_max.as_ref().map(|v| v.span())).unwrap_or(0..0);
                return Err(ctx.err(span, format!("r_match = {r_match} must be below r_max = {r}")));
            }
        }
        let l_max = match &rb.l_max {
            Some(v) if *v.get_ref() > 200 => {
                return Err(ctx.err(v.span(), format!("l_max must be at most 200, got {}", v.get_ref())))
            }
            Some(v) => *v.get_ref(),
            None => 20,
        };
        let m_max = match &rb.m_max {
            Some(v) => match auto_or(&ctx, v, "m_max")? {
                Auto::Fixed(m) if m > l_max => {
                    return Err(ctx.err(v.span(), format!("m_max = {m} exceeds l_max = {l_max}")))
                }
                a => a,
            },
            None => Auto::Auto,
        };
        let e_cut = match &rb.e_cut {
            Some(v) => ctx.positive(v, "e_cut")?,
            None => 30.0,
        };
        let symmetry = match rb.symmetry.as_ref().map(|v| (v.get_ref().as_str(), v.span())) {
            None | Some(("full", _)) => Symmetry::Full,
            Some(("reflection_even", _)) => Symmetry::ReflectionEven,
            Some((other, span)) => {
                return Err(ctx.err(span, format!("unknown symmetry `{other}`, expected full or reflection_even")))
            }
        };
        BasisSpec {
            r_max,
            order,
            n_breakpoints,
            knot_law,
            l_max,
            m_max,
            e_cut,
            symmetry,
        }
    };

    let propagator = {
        let (mut step, mut krylov_dim_max, mut krylov_tol) = (
            StepSpec::StepsPerCycle(PropagatorConfig::DEFAULT_STEPS_PER_CYCLE),
            PropagatorConfig::DEFAULT_KRYLOV_DIM,
            PropagatorConfig::DEFAULT_KRYLOV_TOL,
        );
        let (mut renormalize, mut checkpoint_every, mut mask) = (false, 0, None);
        if let Some(rp) = &raw.propagator {
            match (&rp.dt, &rp.steps_per_cycle) {
                (Some(_), Some(b)) => return Err(ctx.err(b.span(), "only one of dt, steps_per_cycle may be given")),
                (Some(a), None) => step = StepSpec::Dt(ctx.positive(a, "dt")?),
                (None, Some(b)) => step = StepSpec::StepsPerCycle(ctx.positive(b, "steps_per_cycle")?),
                (None, None) => {}
            }
            if let Some(v) = &rp.krylov_dim_max {
                if !(2..=200).contains(v.get_ref()) {
                    return Err(ctx.err(v.span(), format!("krylov_dim_max must be in 2..=200, got {}", v.get_ref())));
                }
                krylov_dim_max = *v.get_ref();
            }
            if let Some(v) = &rp.krylov_tol {
                krylov_tol = ctx.positive(v, "krylov_tol")?;
            }
            if let Some(v) = &rp.renormalize {
                renormalize = *v.get_ref();
            }
            if let Some(v) = &rp.checkpoint_every {
                checkpoint_every = *v.get_ref();
            }
            if let Some(m) = &rp.mask {
                let rm = m.get_ref();
                let r_on = rm
                    .r_on
                    .as_ref()
                    .ok_or_else(|| ctx.err(m.span(), "mask requires `r_on`"))
                    .and_then(|v| ctx.positive(v, "r_on"))?;
                let exponent = match &rm.exponent {
                    Some(v) => ctx.positive(v, "exponent")?,
                    None => 0.125,
                };
                mask = Some(MaskSpec { r_on, exponent });
            }
        }
        PropagatorSpec {
            step,
            krylov_dim_max,
            krylov_tol,
            renormalize,
            checkpoint_every,
            mask,
        }
    };

    let outputs = {
        let mut o = OutputSpec {
            observables: vec![Observable::Ionization, Observable::EnergySpectrum],
            probe_stride: 10,
            directory: PathBuf::from("out"),
            energy_max: 15.0,
            n_theta: Auto::Auto,
            n_phi: 96,
        };
        if let Some(ro) = &raw.outputs {
            if let Some(list) = &ro.observables {
                let mut seen = Vec::new();
                for item in list.get_ref() {
                    let obs = Observable::from_name(item.get_ref()).ok_or_else(|| {
                        let names: Vec<&str> = Observable::ALL.iter().map(|o| o.name()).collect();
                        ctx.err(
                            item.span(),
                            format!("unknown observable `{}`, expected one of {}", item.get_ref(), names.join(", ")),
                        )
                    })?;
                    if !seen.contains(&obs) {
                        seen.push(obs);
                    }
                }
                o.observables = seen;
            }
            if let Some(v) = &ro.probe_stride {
                if *v.get_ref() == 0 {
                    return Err(ctx.err(v.span(), "probe_stride must be at least 1"));
                }
                o.probe_stride = *v.get_ref();
            }
            if let Some(v) = &ro.directory {
                o.directory = PathBuf::from(v.get_ref());
            }
            if let Some(v) = &ro.energy_max {
                o.energy_max = ctx.positive(v, "energy_max")?;
            }
            if let Some(v) = &ro.n_theta {
                o.n_theta = match auto_or(&ctx, v, "n_theta")? {
                    Auto::Fixed(0) => return Err(ctx.err(v.span(), "n_theta must be at least 1")),
                    a => a,
                };
            }
            if let Some(v) = &ro.n_phi {
                if *v.get_ref() == 0 {
                    return Err(ctx.err(v.span(), "n_phi must be at least 1"));
                }
                o.n_phi = *v.get_ref();
            }
        }
        o
    };

    let sweep = match &raw.sweep {
        None => None,
        Some(s) => {
            let rs = s.get_ref();
            let pname = rs
                .parameter
                .as_ref()
                .ok_or_else(|| ctx.err(s.span(), "sweep requires `parameter`"))?;
            let parameter = SweepParameter::ALL
                .into_iter()
                .find(|p| p.name() == pname.get_ref())
                .ok_or_else(|| {
                    let names: Vec<&str> = SweepParameter::ALL.iter().map(|p| p.name()).collect();
                    ctx.err(
                        pname.span(),
                        format!("unknown sweep parameter `{}`, expected one of {}", pname.get_ref(), names.join(", ")),
                    )
                })?;
            let values = rs.values.as_ref().ok_or_else(|| ctx.err(s.span(), "sweep requires `values`"))?;
            for &x in values.get_ref() {
                let ok = match parameter {
                    SweepParameter::E0 | SweepParameter::Intensity => x >= 0.0 && x.is_finite(),
                    SweepParameter::Cep => x.is_finite(),
                    SweepParameter::LMax => x >= 0.0 && x <= 200.0 && x.fract() == 0.0,
                    _ => x > 0.0 && x.is_finite(),
                };
                if !ok {
                    return Err(ctx.err(
                        values.span(),
                        format!("sweep value {x} is out of range for `{}`", parameter.name()),
                    ));
                }
            }
            let models = match &rs.models {
                None => None,
                Some(list) => Some(
                    list.get_ref()
                        .iter()
                        .map(|m| model_from(&ctx, m))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
            };
            Some(SweepSpec {
                parameter,
                values: values.get_ref().clone(),
                models,
            })
        }
    };

    Ok(RunConfig {
        model,
        pulse,
        basis,
        propagator,
        outputs,
        sweep,
    })
}
