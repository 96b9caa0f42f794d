use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};

use qstrat_core::field::{
    dyadic_radial_bound, dyadic_radial_sum, monotonicity_check, psi_monotonicity_check, stationarity_residual,
    BumpDilation, BumpTranslation, CoordinatePhi, IdentityCheck, QuadSpec,
};
use qstrat_core::jones::{jones_beta, jones_beta_bruteforce, JonesResult};
use qstrat_core::measure::{theta, DensityExponent, Measure};
use qstrat_core::reifenberg::{drr_check, dyadic_jones_profile, rr_check_continuous, DrrConfig, RrConfig};
use qstrat_core::stratify::{extract_stratum, stratify_inductive, EnergyBudget, ProbeSpec, StratifyParams};
use qstrat_core::symmetry::{check_scale, cone_tip_test, detect_symmetry, ConeTipCertificate, SymmetryCertificate, SymmetryParams};
use qstrat_core::synth::generate;
use qstrat_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{AnalyzeArgs, Builtin, Common, JonesArgs, ReifenbergArgs, StratifyArgs, SynthArgs, VerifyArgs};
use crate::source::{load, synth_spec};

/// A command's result and whether its checks passed (exit 0 vs 1).
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

fn ok(result: Value) -> Outcome {
    Outcome { result, passed: true }
}

fn quad(common: &Common) -> QuadSpec {
    QuadSpec::new(common.h.unwrap_or(0.05))
}

fn symmetry_params(common: &Common, stride: usize) -> SymmetryParams {
    SymmetryParams { tau: common.tau, eps: common.eps, candidate_stride: stride, exp: DensityExponent::new(common.p) }
}

fn center_or_origin(center: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match center {
        Some(c) if c.len() != n => Err(Error::input(format!("center has {} coordinates, expected {n}", c.len()))),
        Some(c) => Ok(c.to_vec()),
        None => Ok(vec![0.0; n]),
    }
}

pub fn synth(args: &SynthArgs, common: &Common) -> Result<Outcome> {
    let kind = match args.source.kind {
        Some(Builtin::Synth(k)) => k,
        Some(Builtin::Zero) => return Err(Error::input("zero is not a synthetic kind")),
        None => return Err(Error::input("synth needs --kind")),
    };
    let path = common.out.as_ref().ok_or_else(|| Error::input("synth needs --out"))?;
    let mut source = args.source.clone();
    source.plane_k = source.plane_k.or(common.k);
    let spec = synth_spec(kind, &source, common, common.h.unwrap_or_else(|| crate::source::default_grid_h(kind)), args.verify);
    let made = generate(&spec)?;
    let mut w = BufWriter::new(File::create(path)?);
    made.write(&spec, &mut w)?;
    w.flush()?;
    let format = if matches!(made, qstrat_core::synth::Synthetic::Points(_)) { "jsonl" } else { "grid" };
    Ok(ok(json!({ "spec": spec, "path": path, "format": format, "bytes": std::fs::metadata(path)?.len() })))
}

#[derive(Serialize)]
struct ScaleRow {
    r: f64,
    theta: f64,
    cone_tip: ConeTipCertificate,
    /// Largest k ≤ max_k with a certificate at this scale.
    symmetry_k: Option<usize>,
    certificate: Option<SymmetryCertificate>,
    jones: Option<JonesResult>,
}

pub fn analyze(args: &AnalyzeArgs, common: &Common) -> Result<Outcome> {
    let loaded = load(&args.source, common, Builtin::Synth(qstrat_core::synth::SynthKind::RadialCone))?;
    let q = quad(common);
    let mu = loaded.measure(&q);
    let n = mu.dim();
    let x = center_or_origin(args.center.as_ref().map(|c| &c.0[..]), n)?;
    let params = symmetry_params(common, args.stride);
    params.validate()?;
    let radii = common.scales_or(0, 6).radii();
    let smallest = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    check_scale(mu.as_ref(), 2.0 * common.eps * smallest)?;
    let max_k = args.max_k.unwrap_or(n).min(n);
    let jones_k = common.k.unwrap_or(1).min(n.saturating_sub(1));
    let points = loaded.points().ok();
    let empty = points.is_some_and(|p| p.is_empty());
    let mut rows = Vec::new();
    if !empty {
        for &r in &radii {
            let th = theta(mu.as_ref(), &x, r, params.exp)?;
            let tip = cone_tip_test(mu.as_ref(), &x, r, common.eps, params.exp)?;
            let mut best = None;
            for k in 0..=max_k {
                match detect_symmetry(mu.as_ref(), &x, r, k, &params)? {
                    Some(c) => best = Some((k, c)),
                    None => break,
                }
            }
            let jones = match points {
                Some(p) => Some(jones_beta(p, &x, r, jones_k, common.gate())?),
                None => None,
            };
            let (symmetry_k, certificate) = match best {
                Some((k, c)) => (Some(k), Some(c)),
                None => (None, None),
            };
            rows.push(ScaleRow { r, theta: th, cone_tip: tip, symmetry_k, certificate, jones });
        }
    }
    Ok(ok(json!({ "n": n, "center": x, "jones_k": jones_k, "rows": rows })))
}

#[derive(Serialize)]
struct Named<T> {
    name: String,
    value: T,
    passed: bool,
}

pub fn verify(args: &VerifyArgs, common: &Common) -> Result<Outcome> {
    let loaded = load(&args.source, common, Builtin::Synth(qstrat_core::synth::SynthKind::Instanton))?;
    let field = loaded.field()?;
    let n = field.dim();
    let x = center_or_origin(args.center.as_ref().map(|c| &c.0[..]), n)?;
    let q = quad(common);
    let exp = DensityExponent::new(common.p);
    let big = args.outer;
    let tol = args.tol;
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;

    let translation = BumpTranslation { center: x.clone(), radius: 0.6 * big, direction: e0 };
    let dilation = BumpDilation { center: x.clone(), radius: 0.6 * big, origin: x.clone() };
    let mut stationarity = Vec::new();
    for (name, v) in [("translation", stationarity_residual(field.as_ref(), &translation, &q)?), ("dilation", stationarity_residual(field.as_ref(), &dilation, &q)?)] {
        stationarity.push(Named { name: name.into(), value: v, passed: v.abs() <= tol });
    }

    let within = |c: &IdentityCheck| c.gap.abs() <= tol + 5.0 * c.error_estimate.unwrap_or(0.0);
    let mut monotonicity = Vec::new();
    for (s, r) in [(0.25 * big, 0.5 * big), (0.5 * big, big)] {
        let c = monotonicity_check(field.as_ref(), &x, s, r, exp, &q)?;
        let passed = within(&c);
        monotonicity.push(Named { name: format!("sigma={s} rho={r}"), value: c, passed });
    }
    let psi = psi_monotonicity_check(field.as_ref(), &x, 0.3 * big, 0.7 * big, &CoordinatePhi(0), exp, &q)?;
    let psi = Named { name: "phi=u_0".into(), passed: within(&psi), value: psi };

    let betas: Vec<i32> = (0..4).collect();
    let fine = q.with_min_cells(12);
    let sum = dyadic_radial_sum(field.as_ref(), &x, &betas, common.eps1, exp, &fine)?;
    let bound = dyadic_radial_bound(field.clone(), &x, &betas, common.eps1, exp, &fine)?;
    let dyadic = json!({ "sum": sum, "bound": bound, "passed": sum.total <= bound * (1.0 + 1e-9) + 1e-15 });

    let passed = stationarity.iter().all(|c| c.passed)
        && monotonicity.iter().all(|c| c.passed)
        && psi.passed
        && dyadic["passed"].as_bool() == Some(true);
    Ok(Outcome {
        result: json!({
            "n": n,
            "center": x,
            "tolerance": tol,
            "stationarity": stationarity,
            "monotonicity": monotonicity,
            "psi_monotonicity": psi,
            "dyadic_radial": dyadic,
            "passed": passed,
        }),
        passed,
    })
}

pub fn stratify(args: &StratifyArgs, common: &Common) -> Result<Outcome> {
    let loaded = load(&args.source, common, Builtin::Synth(qstrat_core::synth::SynthKind::KSymmetricCone))?;
    let q = quad(common);
    let mu = loaded.measure(&q);
    let n = mu.dim();
    let k = common.k.unwrap_or(1);
    let radii = common.scales_or(2, 4).radii();
    let spacing = common.probe.unwrap_or(0.125);
    let center = center_or_origin(args.probe_center.as_ref().map(|c| &c.0[..]), n)?;
    let probe = match &args.probe_axes {
        Some(axes) => ProbeSpec::slice(center, spacing, axes.0.clone()),
        None => ProbeSpec::full(center, spacing),
    }
    .with_radius(args.probe_radius);
    let params = StratifyParams {
        symmetry: symmetry_params(common, args.stride),
        eta_fraction: common.eta,
        content_budget: args.budget,
        drr: DrrConfig { delta: common.delta, gate: common.gate(), budget: args.budget, floor: None, lattice_balls: false },
        run_drr: !args.no_drr,
    };
    let mut runs = Vec::new();
    let mut minkowski_by_r = Vec::new();
    let mut final_ball_count = Vec::new();
    let mut content_by_stage = Vec::new();
    let mut drr_reports = Vec::new();
    let mut stages = Vec::new();
    for &r in &radii {
        let st = extract_stratum(mu.as_ref(), k, common.eps, r, &probe, &params.symmetry)?;
        let budget = EnergyBudget::from_stratum(mu.as_ref(), &st, params.symmetry.exp, params.eta_fraction)?;
        let rep = stratify_inductive(mu.as_ref(), &st, &budget, &params)?;
        minkowski_by_r.push(json!({ "r": r, "minkowski": rep.minkowski }));
        final_ball_count.push(json!({ "r": r, "count": rep.final_cover.ball_count() }));
        content_by_stage.push(json!({ "r": r, "content": rep.stages.iter().map(|s| s.content).collect::<Vec<_>>() }));
        drr_reports.push(json!({ "r": r, "reports": rep.final_cover.drr }));
        stages.push(json!({ "r": r, "stages": rep.stages }));
        runs.push(json!({
            "r": r,
            "probes_tested": st.probes_tested,
            "flagged": st.flagged.len(),
            "undersampled": st.undersampled,
            "budget": rep.budget,
            "complete": rep.complete,
            "conforming": rep.final_cover.conforming,
            "warnings": rep.warnings,
        }));
    }
    Ok(ok(json!({
        "n": n,
        "k": k,
        "probe": probe,
        "stages": stages,
        "final_ball_count": final_ball_count,
        "content_by_stage": content_by_stage,
        "minkowski_by_r": minkowski_by_r,
        "drr_reports": drr_reports,
        "runs": runs,
    })))
}

pub fn jones(args: &JonesArgs, common: &Common) -> Result<Outcome> {
    let loaded = load(&args.source, common, Builtin::Synth(qstrat_core::synth::SynthKind::DefectMeasure))?;
    let mu = loaded.points()?;
    let n = mu.dim();
    let k = common.k.unwrap_or(1);
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}, n = {n}")));
    }
    let x = center_or_origin(args.center.as_ref().map(|c| &c.0[..]), n)?;
    let radii = common.scales_or(0, 6).radii();
    let mut rows = Vec::new();
    for &r in &radii {
        let e = jones_beta(mu, &x, r, k, common.gate())?;
        let brute = if args.oracle { Some(jones_beta_bruteforce(mu, &x, r, k)?) } else { None };
        rows.push(json!({ "r": r, "jones": e, "bruteforce": brute }));
    }
    let top = radii[0];
    let floor = radii[radii.len() - 1];
    let profile = if mu.is_empty() { None } else { Some(dyadic_jones_profile(mu, mu, &x, top, k, common.gate(), floor)?) };
    Ok(ok(json!({ "n": n, "k": k, "center": x, "rows": rows, "profile": profile })))
}

#[derive(Deserialize)]
struct BallLine {
    center: Vec<f64>,
    radius: f64,
}

fn read_balls(path: &std::path::Path) -> Result<Vec<(Vec<f64>, f64)>> {
    let file = File::open(path).map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let b: BallLine = serde_json::from_str(&line).map_err(|e| Error::input(format!("line {}: {e}", i + 1)))?;
        out.push((b.center, b.radius));
    }
    if let Some(n) = out.first().map(|b| b.0.len()) {
        if out.iter().any(|b| b.0.len() != n) {
            return Err(Error::input("balls have mixed dimensions"));
        }
    }
    Ok(out)
}

pub fn reifenberg(args: &ReifenbergArgs, common: &Common) -> Result<Outcome> {
    let k = common.k.unwrap_or(1);
    let report = if let Some(path) = &args.balls {
        let balls = read_balls(path)?;
        let config = DrrConfig {
            delta: common.delta,
            gate: common.gate(),
            budget: args.budget,
            floor: common.scales.map(|s| 2f64.powi(-s.to)),
            lattice_balls: !args.no_lattice,
        };
        drr_check(&balls, k, &config)?
    } else {
        let loaded = load(&args.source, common, Builtin::Synth(qstrat_core::synth::SynthKind::DefectMeasure))?;
        let mu = loaded.points()?;
        let scales = common.scales_or(0, 2);
        let config = RrConfig {
            delta: common.delta,
            gate: common.gate(),
            test_radii: scales.radii(),
            floor: 2f64.powi(-(scales.to + 4)),
            density_eps: common.eps,
            max_centers: 256,
            budget: args.budget,
        };
        rr_check_continuous(mu, k, &config)?
    };
    Ok(ok(serde_json::to_value(report)?))
}
