//! Synthetic measures and curvature fields with known ground truth.
//!
//! Cones are returned as analytic measures paired with their fields; a grid
//! sample with the vertex (or plane) excised is available through
//! [`Synthetic::to_grid`]. All randomness flows from `SynthSpec::seed`.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{contract, Bpst, ConeField, CurvatureField, FieldEnergyMeasure, QuadSpec};
use crate::measure::{theta, ConeMeasure, DensityExponent, GridDensity, Measure, UniformDensity, WeightedPointMeasure};
use crate::numeric::{unit_ball_volume, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    RadialCone,
    KSymmetricCone,
    Instanton,
    DefectMeasure,
    Uniform,
    Perturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectShape {
    /// Unit-length segment along e_1 centered at the origin.
    Segment,
    /// Circle of the given radius in the (e_1, e_2) plane.
    Circle,
    /// k-disk of the given radius in span{e_1..e_k}.
    KDisk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub k: usize,
    /// Cone amplitude c, or the constant of the uniform density.
    pub amplitude: f64,
    /// Instanton scale ρ.
    pub rho: f64,
    /// Grid spacing used for gridded output and for the perturbed cone.
    pub h: f64,
    /// Gridded output covers [-half_width, half_width]^n.
    pub half_width: f64,
    /// Excision radius around the singular set; defaults to 4h.
    pub inner_cut: Option<f64>,
    pub shape: DefectShape,
    /// Defect weight Θ.
    pub theta: f64,
    pub radius: f64,
    pub samples: usize,
    pub noise: f64,
    pub seed: u64,
    /// Check the stated analytic properties at generation time.
    pub verify: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            kind: SynthKind::RadialCone,
            n: 5,
            k: 0,
            amplitude: 1.0,
            rho: 1.0,
            h: 0.125,
            half_width: 1.0,
            inner_cut: None,
            shape: DefectShape::Segment,
            theta: 1.0,
            radius: 1.0,
            samples: 100,
            noise: 0.0,
            seed: 0,
            verify: false,
        }
    }
}

impl SynthSpec {
    pub fn inner_cut(&self) -> f64 {
        self.inner_cut.unwrap_or(4.0 * self.h)
    }
}

/// Exact cone: the analytic measure c·d(x,V)^{-4} and a field realizing it.
#[derive(Debug)]
pub struct ConeSynth {
    pub measure: ConeMeasure,
    pub field: Arc<ConeField>,
}

pub enum Synthetic {
    Cone(ConeSynth),
    Instanton(Arc<Bpst>),
    Points(WeightedPointMeasure),
    Uniform(UniformDensity),
}

impl Synthetic {
    /// The ground-truth measure. Instantons use the energy measure under `quad`.
    pub fn measure(&self, quad: &QuadSpec) -> Box<dyn Measure + '_> {
        match self {
            Synthetic::Cone(c) => Box::new(&c.measure),
            Synthetic::Instanton(b) => Box::new(FieldEnergyMeasure::new(b.clone(), *quad)),
            Synthetic::Points(p) => Box::new(p),
            Synthetic::Uniform(u) => Box::new(u),
        }
    }

    pub fn field(&self) -> Option<Arc<dyn CurvatureField>> {
        match self {
            Synthetic::Cone(c) => Some(c.field.clone()),
            Synthetic::Instanton(b) => Some(b.clone()),
            _ => None,
        }
    }

    /// Samples the density at cell centers of [-w, w]^n with spacing h,
    /// zeroing cells within `cut` of the singular set.
    pub fn to_grid(&self, h: f64, w: f64, cut: f64) -> Result<GridDensity> {
        match self {
            Synthetic::Cone(c) => GridDensity::sample(c.measure.dim(), -w, w, h, |x| {
                if c.measure.distance_to_plane(x) < cut {
                    0.0
                } else {
                    c.measure.density(x)
                }
            }),
            Synthetic::Instanton(b) => GridDensity::sample(4, -w, w, h, |x| b.energy_density(x)),
            Synthetic::Uniform(u) => GridDensity::uniform_cube(u.dim(), -w, w, h, u.constant()),
            Synthetic::Points(_) => Err(Error::capability("point measures have no grid form")),
        }
    }

    /// Writes the standard format: JSON lines for atoms, the binary grid format
    /// otherwise.
    pub fn write(&self, spec: &SynthSpec, out: impl Write) -> Result<()> {
        match self {
            Synthetic::Points(p) => p.write_jsonl(out),
            _ => self.to_grid(spec.h, spec.half_width, spec.inner_cut()).and_then(|g| g.write_binary(out)),
        }
    }
}

/// c|x|^{-4} with the purely angular cone field. Needs n ≥ 5.
pub fn gen_radial_cone(n: usize, c: f64) -> Result<ConeSynth> {
    gen_k_symmetric_cone(n, 0, c)
}

/// c·d(x, span{e_1..e_k})^{-4}. Needs n - k ≥ 5.
pub fn gen_k_symmetric_cone(n: usize, k: usize, c: f64) -> Result<ConeSynth> {
    if n < k + 5 {
        return Err(Error::input(format!(
            "d(x,V_{k})^-4 is not locally integrable against p = 4 in R^{n}: need n - k >= 5"
        )));
    }
    Ok(ConeSynth { measure: ConeMeasure::coordinate(n, k, c)?, field: Arc::new(ConeField::coordinate(n, k, c)?) })
}

pub fn gen_instanton(rho: f64) -> Result<Bpst> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input(format!("instanton scale must be positive, got {rho}")));
    }
    Ok(Bpst::new(rho))
}

/// Equal atoms on the set, each carrying Θ times its share of the H^k measure
/// (segment: length 1; circle: 2πR; k-disk: ω_k R^k).
pub fn gen_defect_measure(
    shape: DefectShape,
    n: usize,
    k: usize,
    theta_weight: f64,
    radius: f64,
    samples: usize,
) -> Result<WeightedPointMeasure> {
    if samples < 10 {
        return Err(Error::input("defect measures need at least 10 samples"));
    }
    if !(theta_weight > 0.0 && theta_weight.is_finite() && radius > 0.0 && radius.is_finite()) {
        return Err(Error::input("defect weight and radius must be positive"));
    }
    let mut atoms = Vec::with_capacity(samples);
    match shape {
        DefectShape::Segment => {
            if n < 1 {
                return Err(Error::input("segment needs n >= 1"));
            }
            let w = theta_weight / samples as f64;
            for i in 0..samples {
                let mut x = vec![0.0; n];
                x[0] = -0.5 + (i as f64 + 0.5) / samples as f64;
                atoms.push((x, w));
            }
        }
        DefectShape::Circle => {
            if n < 2 {
                return Err(Error::input("circle needs n >= 2"));
            }
            let w = 2.0 * std::f64::consts::PI * radius * theta_weight / samples as f64;
            for i in 0..samples {
                let a = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                let mut x = vec![0.0; n];
                x[0] = radius * a.cos();
                x[1] = radius * a.sin();
                atoms.push((x, w));
            }
        }
        DefectShape::KDisk => {
            if k == 0 || k > n {
                return Err(Error::input(format!("k-disk needs 1 <= k <= n, got k = {k}")));
            }
            // cubic lattice with about `samples` points inside the disk
            let h = radius * (unit_ball_volume(k) / samples as f64).powf(1.0 / k as f64);
            let m = (radius / h).ceil() as i64;
            let side = (2 * m + 1) as usize;
            let mut pts = Vec::new();
            for flat in 0..side.pow(k as u32) {
                let mut rest = flat;
                let mut x = vec![0.0; n];
                for v in x[..k].iter_mut().rev() {
                    *v = ((rest % side) as i64 - m) as f64 * h;
                    rest /= side;
                }
                if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    pts.push(x);
                }
            }
            let w = unit_ball_volume(k) * radius.powi(k as i32) * theta_weight / pts.len() as f64;
            atoms.extend(pts.into_iter().map(|x| (x, w)));
        }
    }
    WeightedPointMeasure::from_atoms(n, &atoms)
}

/// Jitters every atom by independent uniform noise in [-s, s]^n.
pub fn perturb(mu: &WeightedPointMeasure, noise: f64, seed: u64) -> Result<WeightedPointMeasure> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::input(format!("noise scale must be finite and nonnegative, got {noise}")));
    }
    if noise == 0.0 {
        return Ok(mu.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = mu.coords().iter().map(|c| c + rng.gen_range(-noise..=noise)).collect();
    WeightedPointMeasure::new(mu.dim(), coords, mu.weights().to_vec())
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    let out = match spec.kind {
        SynthKind::RadialCone => Synthetic::Cone(gen_radial_cone(spec.n, spec.amplitude)?),
        SynthKind::KSymmetricCone => Synthetic::Cone(gen_k_symmetric_cone(spec.n, spec.k, spec.amplitude)?),
        SynthKind::Instanton => {
            if spec.n != 4 {
                return Err(Error::input("the instanton lives in n = 4"));
            }
            Synthetic::Instanton(Arc::new(gen_instanton(spec.rho)?))
        }
        SynthKind::DefectMeasure => Synthetic::Points(gen_defect_measure(
            spec.shape,
            spec.n,
            spec.k,
            spec.theta,
            spec.radius,
            spec.samples,
        )?),
        SynthKind::Uniform => {
            if !(spec.amplitude >= 0.0 && spec.amplitude.is_finite()) {
                return Err(Error::input("uniform density must be finite and nonnegative"));
            }
            Synthetic::Uniform(UniformDensity::new(spec.n, spec.amplitude))
        }
        SynthKind::Perturbed => {
            let cone = Synthetic::Cone(gen_k_symmetric_cone(spec.n, spec.k, spec.amplitude)?);
            let grid = cone.to_grid(spec.h, spec.half_width, spec.inner_cut())?;
            Synthetic::Points(perturb(&grid.to_point_measure()?, spec.noise, spec.seed)?)
        }
    };
    if spec.verify {
        check_ground_truth(spec, &out)?;
    }
    Ok(out)
}

/// Asserts the generator's stated analytic property; a violation is an
/// internal error.
pub fn check_ground_truth(spec: &SynthSpec, s: &Synthetic) -> Result<()> {
    let fail = |what: String| Err(Error::Internal(format!("ground truth violated: {what}")));
    match s {
        Synthetic::Cone(c) => {
            let exp = DensityExponent::default();
            let x = vec![0.0; c.measure.dim()];
            let t0 = theta(&c.measure, &x, 1.0, exp)?;
            for r in [0.5, 0.25, 0.125] {
                let t = theta(&c.measure, &x, r, exp)?;
                if (t - t0).abs() > 1e-8 * t0.max(1.0) {
                    return fail(format!("theta(0,{r}) = {t} differs from theta(0,1) = {t0}"));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let n = c.measure.dim();
            for _ in 0..100 {
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut w = y.clone();
                w[..spec.k.min(n)].iter_mut().for_each(|v| *v = 0.0);
                let scale = c.measure.density(&y).sqrt();
                let radial = contract(c.field.as_ref(), &w, &y)?;
                let mut worst = radial.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for b in c.measure.plane_basis() {
                    worst = contract(c.field.as_ref(), b, &y)?.iter().fold(worst, |a, v| a.max(v.abs()));
                }
                if worst > 1e-12 * scale.max(1.0) * (1.0 + crate::numeric::norm(&w)) {
                    return fail(format!("kernel contraction {worst} at {y:?}"));
                }
            }
        }
        Synthetic::Instanton(b) => {
            let f0 = b.energy_density(&[0.0; 4]);
            let want = 48.0 / b.rho().powi(4);
            if (f0 / want - 1.0).abs() > 1e-12 {
                return fail(format!("|F|^2(0) = {f0}, expected {want}"));
            }
        }
        Synthetic::Points(p) => {
            if spec.kind == SynthKind::DefectMeasure {
                let want = match spec.shape {
                    DefectShape::Segment => spec.theta,
                    DefectShape::Circle => 2.0 * std::f64::consts::PI * spec.radius * spec.theta,
                    DefectShape::KDisk => unit_ball_volume(spec.k) * spec.radius.powi(spec.k as i32) * spec.theta,
                };
                let total: KahanSum = p.weights().iter().copied().collect();
                if (total.value() - want).abs() > 1e-10 * want {
                    return fail(format!("total mass {} expected {want}", total.value()));
                }
            }
        }
        Synthetic::Uniform(_) => {}
    }
    Ok(())
}
