use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use qstrat_core::jones::Gate;
use qstrat_core::synth::{DefectShape, SynthKind};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qstrat", version, about = "Quantitative stratification of discretized measures and curvature fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Generate a synthetic measure and write it in the standard format.
    Synth(SynthArgs),
    /// Density profiles, cone-tip tests, symmetry certificates and Jones numbers at one point.
    Analyze(AnalyzeArgs),
    /// Quadrature checks of the stationarity and monotonicity identities.
    Verify(VerifyArgs),
    /// Stratum extraction and the inductive covering, with Minkowski content per scale.
    Stratify(StratifyArgs),
    /// Jones numbers of a point measure at one center.
    Jones(JonesArgs),
    /// Discrete (ball family) or continuous (sample) Reifenberg condition.
    ReifenbergCheck(ReifenbergArgs),
}

/// Flags shared by every command. Unused ones are still recorded in the report.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Ambient dimension of a built-in source.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Stratum, plane or symmetry dimension.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Density exponent p in θ(x,r) = r^{p-n} μ(B_r(x)).
    #[arg(long, global = true, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps1: f64,
    /// Effective-spanning parameter.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub tau: f64,
    /// Energy drop per covering stage, as a fraction of the energy bound.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub eta: f64,
    /// Reifenberg threshold δ; the condition is compared with δ².
    #[arg(long, global = true, default_value_t = 0.01)]
    pub delta: f64,
    /// Practical mass gate g: balls with μ(B_r) < g r^k are skipped.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub gate: f64,
    /// Quadrature spacing, or grid spacing for `synth`.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Probe lattice spacing.
    #[arg(long, global = true)]
    pub probe: Option<f64>,
    /// Dyadic exponents `a:b`, meaning radii 2^-a down to 2^-b.
    #[arg(long, global = true)]
    pub scales: Option<ScaleRange>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Report path (artifact path for `synth`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit wall-clock fields so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Use the gate constant (1000n)^{-7n²} instead of --gate.
    #[arg(long, global = true)]
    pub paper_exact_gate: bool,
}

impl Common {
    pub fn gate(&self) -> Gate {
        if self.paper_exact_gate {
            Gate::Exact
        } else {
            Gate::Practical(self.gate)
        }
    }

    pub fn scales_or(&self, a: i32, b: i32) -> ScaleRange {
        self.scales.unwrap_or(ScaleRange { from: a, to: b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleRange {
    pub from: i32,
    pub to: i32,
}

impl ScaleRange {
    /// Radii 2^-from, ..., 2^-to, largest first.
    pub fn radii(&self) -> Vec<f64> {
        qstrat_core::numeric::dyadic_range(self.from, self.to)
    }
}

impl FromStr for ScaleRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
        let from: i32 = a.trim().parse().map_err(|e| format!("bad exponent {a:?}: {e}"))?;
        let to: i32 = b.trim().parse().map_err(|e| format!("bad exponent {b:?}: {e}"))?;
        if to < from {
            return Err(format!("scale range {s:?} must satisfy a <= b"));
        }
        Ok(ScaleRange { from, to })
    }
}

/// A built-in source: any synthetic kind, or the zero field/measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Synth(SynthKind),
    Zero,
}

impl Serialize for Builtin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Builtin::Synth(k) => k.serialize(s),
            Builtin::Zero => s.serialize_str("zero"),
        }
    }
}

fn parse_builtin(s: &str) -> Result<Builtin, String> {
    if s == "zero" {
        return Ok(Builtin::Zero);
    }
    serde_json::from_value(serde_json::Value::String(s.to_string())).map(Builtin::Synth).map_err(|_| {
        format!("unknown kind {s:?}; expected radial_cone, k_symmetric_cone, instanton, defect_measure, uniform, perturbed or zero")
    })
}

fn parse_shape(s: &str) -> Result<DefectShape, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown shape {s:?}; expected segment, circle or k_disk"))
}

/// Comma-separated list, e.g. a point `0.5,0,0` or axes `0,1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<T>().map_err(|e| format!("bad list entry {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

/// Where the measure or field comes from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Source {
    /// Measure file: JSON-lines atoms or a binary grid.
    #[arg(long, conflicts_with = "kind")]
    pub input: Option<PathBuf>,
    /// Built-in source.
    #[arg(long, value_parser = parse_builtin)]
    pub kind: Option<Builtin>,
    /// Cone amplitude or uniform density constant.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Instanton scale.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub half_width: f64,
    #[arg(long)]
    pub inner_cut: Option<f64>,
    #[arg(long, value_parser = parse_shape, default_value = "segment")]
    pub shape: DefectShape,
    /// Defect weight Θ.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Defect radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Plane dimension of a k-symmetric cone, perturbed cone or defect.
    /// `synth` falls back to --k.
    #[arg(long)]
    pub plane_k: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: Source,
    /// Check the generator's analytic ground truth before writing.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Analysis point, comma separated; the origin by default.
    #[arg(long)]
    pub center: Option<List<f64>>,
    /// Largest symmetry dimension to search for.
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Tip lattice spacing is r / stride.
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub center: Option<List<f64>>,
    /// Outer radius R of the checks.
    #[arg(long, default_value_t = 1.0)]
    pub outer: f64,
    /// Absolute tolerance on residuals and gaps.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StratifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub probe_center: Option<List<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub probe_radius: f64,
    /// Restrict probes to these coordinate axes, comma separated.
    #[arg(long)]
    pub probe_axes: Option<List<usize>>,
    /// Per-stage content budget.
    #[arg(long, default_value_t = 100.0)]
    pub budget: f64,
    #[arg(long, default_value_t = 4)]
    pub stride: usize,
    /// Skip the Reifenberg checks on the covers.
    #[arg(long)]
    pub no_drr: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JonesArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub center: Option<List<f64>>,
    /// Also run the independent brute-force plane search.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReifenbergArgs {
    /// JSON lines of {"center": [...], "radius": r}: the discrete check.
    #[arg(long, conflicts_with_all = ["input", "kind"])]
    pub balls: Option<PathBuf>,
    #[command(flatten)]
    pub source: Source,
    /// Omit the unit lattice balls from the discrete test family.
    #[arg(long)]
    pub no_lattice: bool,
    /// Content budget.
    #[arg(long, default_value_t = 100.0)]
    pub budget: f64,
}
