use std::fs::File;
use std::io::{BufReader, Read};
use std::sync::Arc;

use qstrat_core::field::{CurvatureField, QuadSpec, ZeroField};
use qstrat_core::measure::{GridDensity, Measure, WeightedPointMeasure, ZeroMeasure};
use qstrat_core::synth::{generate, SynthKind, SynthSpec, Synthetic};
use qstrat_core::{Error, Result};

use crate::args::{Builtin, Common, Source};

pub enum Loaded {
    Synthetic(Synthetic),
    Zero(usize),
    Grid(GridDensity),
    Points(WeightedPointMeasure),
}

pub fn default_n(kind: SynthKind) -> usize {
    match kind {
        SynthKind::RadialCone => 5,
        SynthKind::KSymmetricCone | SynthKind::Perturbed => 6,
        SynthKind::Instanton => 4,
        SynthKind::DefectMeasure | SynthKind::Uniform => 3,
    }
}

fn default_k(kind: SynthKind) -> usize {
    match kind {
        SynthKind::KSymmetricCone | SynthKind::DefectMeasure | SynthKind::Perturbed => 1,
        _ => 0,
    }
}

/// Default spacing of gridded artifacts; the perturbed cone is a 6D point
/// cloud, so it gets a coarser grid.
pub fn default_grid_h(kind: SynthKind) -> f64 {
    if kind == SynthKind::Perturbed {
        0.25
    } else {
        0.125
    }
}

/// The generator spec implied by the flags; `grid_h` is the spacing of any
/// gridded artifact.
pub fn synth_spec(kind: SynthKind, source: &Source, common: &Common, grid_h: f64, verify: bool) -> SynthSpec {
    SynthSpec {
        kind,
        n: common.n.unwrap_or_else(|| default_n(kind)),
        k: source.plane_k.unwrap_or_else(|| default_k(kind)),
        amplitude: source.amplitude,
        rho: source.rho,
        h: grid_h,
        half_width: source.half_width,
        inner_cut: source.inner_cut,
        shape: source.shape,
        theta: source.theta,
        radius: source.radius,
        samples: source.samples,
        noise: source.noise,
        seed: common.seed,
        verify,
    }
}

/// Reads a measure file: the binary grid format if it starts with the grid
/// magic, JSON lines otherwise.
pub fn read_measure(path: &std::path::Path) -> Result<Loaded> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    if bytes.starts_with(b"GRD1") {
        Ok(Loaded::Grid(GridDensity::read_binary(&bytes[..])?))
    } else {
        Ok(Loaded::Points(WeightedPointMeasure::read_jsonl(BufReader::new(&bytes[..]))?))
    }
}

pub fn load(source: &Source, common: &Common, fallback: Builtin) -> Result<Loaded> {
    if let Some(path) = &source.input {
        return read_measure(path);
    }
    match source.kind.unwrap_or(fallback) {
        Builtin::Zero => Ok(Loaded::Zero(common.n.unwrap_or(4))),
        Builtin::Synth(kind) => {
            let grid_h = common.h.unwrap_or_else(|| default_grid_h(kind));
            let spec = synth_spec(kind, source, common, grid_h, false);
            Ok(Loaded::Synthetic(generate(&spec)?))
        }
    }
}

impl Loaded {
    pub fn measure(&self, quad: &QuadSpec) -> Box<dyn Measure + '_> {
        match self {
            Loaded::Synthetic(s) => s.measure(quad),
            Loaded::Zero(n) => Box::new(ZeroMeasure::new(*n)),
            Loaded::Grid(g) => Box::new(g),
            Loaded::Points(p) => Box::new(p),
        }
    }

    /// The full curvature field; scalar-only inputs cannot provide one.
    pub fn field(&self) -> Result<Arc<dyn CurvatureField>> {
        match self {
            Loaded::Zero(n) => Ok(Arc::new(ZeroField::new(*n, 3))),
            Loaded::Synthetic(s) => s
                .field()
                .ok_or_else(|| Error::capability("this synthetic source is a measure without a curvature field")),
            Loaded::Grid(_) => Err(Error::capability("a grid density carries |F|² only, not the full curvature")),
            Loaded::Points(_) => Err(Error::capability("a point measure carries no curvature field")),
        }
    }

    pub fn points(&self) -> Result<&WeightedPointMeasure> {
        match self {
            Loaded::Synthetic(Synthetic::Points(p)) | Loaded::Points(p) => Ok(p),
            _ => Err(Error::capability("this operation needs a weighted point measure")),
        }
    }
}
