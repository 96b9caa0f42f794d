//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to run
//! a subset.

use std::hash::{DefaultHasher, Hasher};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use qstrat_core::field::{
    dyadic_radial_sum, monotonicity_check_many, stationarity_residual, Bpst, BumpDilation, BumpTranslation,
    CurvatureField, FieldEnergyMeasure, QuadSpec, VectorField,
};
use qstrat_core::jones::{jones_beta, jones_beta_bruteforce, l2_bound_check, Gate};
use qstrat_core::measure::{
    theta, AffinePlane, ConeMeasure, DensityExponent, FlatMeasure, Measure, UniformDensity, WeightedPointMeasure,
};
use qstrat_core::numeric::dyadic_range;
use qstrat_core::reifenberg::{drr_check, dyadic_jones_profile, rr_check_continuous, ContentReport, DrrConfig, RrConfig};
use qstrat_core::stratify::{extract_stratum, stratify_inductive, EnergyBudget, ProbeSpec, StratifyParams};
use qstrat_core::symmetry::{
    detect_symmetry, dimension_reduction_scan, plane_angle, strict_symmetry_check, translation_symmetry_check,
    verify_certificate, SymmetryParams,
};
use qstrat_core::synth::{
    gen_defect_measure, gen_k_symmetric_cone, gen_radial_cone, generate, DefectShape, SynthKind, SynthSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Check = fn() -> (bool, String);

fn exp4() -> DensityExponent {
    DensityExponent::default()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, count: usize, spread: f64) -> WeightedPointMeasure {
    let atoms: Vec<(Vec<f64>, f64)> = (0..count)
        .map(|_| ((0..n).map(|_| rng.gen_range(-spread..spread)).collect(), rng.gen_range(0.1..2.0)))
        .collect();
    WeightedPointMeasure::from_atoms(n, &atoms).unwrap()
}

fn unit_vector_orthogonal_to_axis(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        v[0] = 0.0;
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 0.1 {
            return v.into_iter().map(|a| a / len).collect();
        }
    }
}

fn spread(vals: &[f64]) -> f64 {
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi.abs().max(lo.abs())
}

fn c1_jones_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut comparisons = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=5);
        let count = rng.gen_range(1..=50);
        let mu = random_measure(&mut rng, n, count, 0.6);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let r = rng.gen_range(0.5..1.5);
        for k in 0..n {
            let e = jones_beta(&mu, &x, r, k, Gate::Practical(0.0)).unwrap().value;
            let b = jones_beta_bruteforce(&mu, &x, r, k).unwrap();
            worst = worst.max((e - b).abs());
            comparisons += 1;
        }
    }
    (worst <= 1e-8, format!("{comparisons} comparisons, max |eigen - brute| = {worst:.3e}"))
}

fn c2_monotonicity() -> (bool, String) {
    let f = Bpst::new(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<(f64, f64)> = (0..20)
        .map(|_| loop {
            let a: f64 = rng.gen_range(0.2..1.5);
            let b: f64 = rng.gen_range(0.2..1.5);
            if (a - b).abs() > 0.05 {
                break (a.min(b), a.max(b));
            }
        })
        .collect();
    let p = [0.05, -0.02, 0.0, 0.03];
    let mut gaps = Vec::new();
    for h in [1.0 / 50.0, 1.0 / 100.0] {
        let q = QuadSpec::new(h).with_min_cells(1);
        let checks = monotonicity_check_many(&f, &p, &pairs, exp4(), &q, false).unwrap();
        gaps.push(checks.iter().map(|c| c.gap.abs()).fold(0.0, f64::max));
    }
    let ok = gaps[0] <= 1e-3 && gaps[1] <= 2.5e-4;
    (ok, format!("max gap {:.3e} at h = 1/50, {:.3e} at h = 1/100", gaps[0], gaps[1]))
}

fn c3_stationarity() -> (bool, String) {
    let f = Bpst::new(1.0);
    let q = QuadSpec::new(1.0 / 50.0);
    let fields: Vec<Box<dyn VectorField>> = vec![
        Box::new(BumpTranslation { center: vec![0.0; 4], radius: 0.6, direction: vec![1.0, 0.0, 0.0, 0.0] }),
        Box::new(BumpTranslation { center: vec![0.2, 0.0, 0.1, 0.0], radius: 0.6, direction: vec![0.3, 1.0, 0.0, -0.4] }),
        Box::new(BumpTranslation { center: vec![0.0, -0.3, 0.0, 0.2], radius: 0.5, direction: vec![0.0, 0.0, 1.0, 1.0] }),
        Box::new(BumpDilation { center: vec![0.0; 4], radius: 0.6, origin: vec![0.1, 0.0, 0.0, 0.0] }),
        Box::new(BumpDilation { center: vec![0.1, 0.1, -0.1, 0.0], radius: 0.5, origin: vec![0.0, 0.0, 0.2, 0.0] }),
    ];
    let res: Vec<f64> = fields.iter().map(|x| stationarity_residual(&f, x.as_ref(), &q).unwrap()).collect();
    let worst = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    (worst <= 1e-3, format!("5 bump fields, max |residual| = {worst:.3e}"))
}

fn c4_cone_theta() -> (bool, String) {
    let scales = dyadic_range(0, 7);
    let radial = gen_radial_cone(5, 1.0).unwrap();
    let ksym = gen_k_symmetric_cone(6, 1, 1.0).unwrap();
    let cases: Vec<(&str, &ConeMeasure, Vec<f64>)> = vec![
        ("radial n=5 vertex", &radial.measure, vec![0.0; 5]),
        ("1-symmetric n=6 origin", &ksym.measure, vec![0.0; 6]),
        ("1-symmetric n=6 plane point", &ksym.measure, vec![0.37, 0.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    let mut worst: f64 = 0.0;
    for (_, mu, x) in &cases {
        let vals: Vec<f64> = scales.iter().map(|&r| theta(*mu, x, r, exp4()).unwrap()).collect();
        worst = worst.max(spread(&vals));
    }
    (worst <= 1e-4, format!("{} points over r in [2^-7, 1], max relative variation {worst:.3e}", cases.len()))
}

fn c5_certificates() -> (bool, String) {
    let cone = gen_k_symmetric_cone(6, 1, 1.0).unwrap().measure;
    let radial = gen_radial_cone(5, 1.0).unwrap().measure;
    let flat = FlatMeasure::coordinate(5, 1, 1.0).unwrap();
    let uniform = UniformDensity::new(3, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let heavy = random_measure(&mut rng, 3, 30, 0.5);
    let light: Vec<f64> = heavy.weights().iter().map(|w| 0.01 * w).collect();
    let atoms = WeightedPointMeasure::new(3, heavy.coords().to_vec(), light).unwrap();
    let bpst = FieldEnergyMeasure::new(Arc::new(Bpst::new(1.0)), QuadSpec::new(0.02));

    let p = SymmetryParams::new(0.1);
    let mut returned = 0;
    let mut verified = 0;
    let mut tally = |mu: &dyn Measure, x: &[f64], r: f64, k: usize, params: &SymmetryParams| {
        if let Some(cert) = detect_symmetry(mu, x, r, k, params).unwrap() {
            returned += 1;
            if verify_certificate(mu, &cert).unwrap() {
                verified += 1;
            }
            Some(cert)
        } else {
            None
        }
    };

    let cert = tally(&cone, &[0.0; 6], 1.0, 1, &p);
    let angle = cert.as_ref().map(|c| plane_angle(&c.plane.basis, cone.plane_basis())).unwrap_or(f64::INFINITY);
    tally(&cone, &[0.3, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5, 1, &p);
    tally(&cone, &[0.0, 0.2, 0.0, 0.0, 0.0, 0.0], 0.5, 0, &p);
    tally(&cone, &[0.0, 0.6, 0.0, 0.0, 0.0, 0.0], 0.25, 2, &p);
    tally(&radial, &[0.0; 5], 1.0, 0, &p);
    tally(&radial, &[0.0; 5], 1.0, 1, &p);
    tally(&flat, &[0.0, 0.5, 0.0, 0.0, 0.0], 0.25, 2, &p);
    tally(&flat, &[0.0; 5], 1.0, 1, &p);
    let p3 = p.with_exp(3.0);
    for k in 0..=3 {
        tally(&uniform, &[0.1, 0.0, -0.2], 0.5, k, &p3);
    }
    for i in 0..8 {
        let x = [0.1 * i as f64 - 0.35, 0.0, 0.05];
        tally(&heavy, &x, 1.0, i % 3, &p3.with_stride(2));
        tally(&atoms, &x, 1.0, i % 4, &p3.with_stride(2));
    }
    for k in [0, 1, 4] {
        tally(&bpst, &[0.0; 4], 0.02, k, &p);
    }
    let ok = returned > 0 && verified == returned && angle <= 1e-3;
    (ok, format!("{verified}/{returned} certificates re-verify, plane angle {angle:.3e}"))
}

fn c6_coherence() -> (bool, String) {
    let cone = gen_k_symmetric_cone(6, 1, 1.0).unwrap().measure;
    let plane = AffinePlane::coordinate(6, 1);
    let shifts = vec![vec![0.25, 0.0, 0.0, 0.0, 0.0, 0.0], vec![-0.5, 0.0, 0.0, 0.0, 0.0, 0.0]];
    let x = [0.0; 6];
    let tol = 1e-4;
    let exact = [
        strict_symmetry_check(&cone, &x, 1.0, &plane, 16, tol, exp4()).unwrap(),
        translation_symmetry_check(&cone, &plane, &shifts, tol).unwrap(),
        detect_symmetry(&cone, &x, 1.0, 1, &SymmetryParams::new(tol)).unwrap().is_some(),
    ];
    let spec = SynthSpec {
        kind: SynthKind::Perturbed,
        n: 6,
        k: 1,
        h: 0.25,
        inner_cut: Some(0.25),
        noise: 0.05,
        seed: 11,
        ..Default::default()
    };
    let perturbed = match generate(&spec).unwrap() {
        qstrat_core::synth::Synthetic::Points(mu) => mu,
        _ => unreachable!("perturbed cones are point measures"),
    };
    let noisy = [
        strict_symmetry_check(&perturbed, &x, 1.0, &plane, 16, tol, exp4()).unwrap_or(false),
        translation_symmetry_check(&perturbed, &plane, &shifts, tol).unwrap_or(false),
        matches!(detect_symmetry(&perturbed, &x, 1.0, 1, &SymmetryParams::new(tol)), Ok(Some(_))),
    ];
    let ok = exact.iter().all(|&b| b) && noisy.iter().any(|&b| !b);
    (ok, format!("exact cone (strict, translation, detect) = {exact:?}, perturbed = {noisy:?}"))
}

fn c7_dyadic_sum() -> (bool, String) {
    let f = Bpst::new(1.0);
    let q = QuadSpec::new(0.02).with_min_cells(12);
    let betas: Vec<i32> = (0..4).collect();
    let totals: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&e| dyadic_radial_sum(&f, &[0.0; 4], &betas, e, exp4(), &q).unwrap().total)
        .collect();
    let ratios = [totals[0] / totals[1], totals[1] / totals[2]];
    (ratios.iter().all(|&r| r >= 2.0), format!("totals {:.3e} {:.3e} {:.3e}, step ratios {ratios:.2?}", totals[0], totals[1], totals[2]))
}

fn circle_balls() -> Vec<(Vec<f64>, f64)> {
    let count = 32;
    (0..count)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            (vec![0.75 * t.cos(), 0.75 * t.sin(), 0.0], 0.07)
        })
        .collect()
}

fn circle_drr() -> ContentReport {
    drr_check(&circle_balls(), 1, &DrrConfig::default()).unwrap()
}

#[allow(clippy::excessive_precision)]
const CIRCLE_CONTENT: f64 = 2.2400000000000002;
const CIRCLE_CONDITION_SUP: f64 = 2.209614828053599e-2;

fn c8_drr() -> (bool, String) {
    let segment: Vec<(Vec<f64>, f64)> =
        (0..16).map(|i| (vec![-1.0 + (2 * i + 1) as f64 / 16.0, 0.0], 1.0 / 16.0)).collect();
    let line = drr_check(&segment, 1, &DrrConfig::default()).unwrap();
    let runs = [pool(1).install(circle_drr), pool(1).install(circle_drr), pool(8).install(circle_drr)];
    let stable = runs.iter().all(|r| {
        (r.content - CIRCLE_CONTENT).abs() <= 1e-10 && (r.condition_sup - CIRCLE_CONDITION_SUP).abs() <= 1e-10
    });
    let ok = line.passed && line.content == 1.0 && stable;
    (
        ok,
        format!(
            "segment content {} passed {}; circle content {:.16e} sup {:.16e} (pinned {:.16e}, {:.16e})",
            line.content, line.passed, runs[2].content, runs[2].condition_sup, CIRCLE_CONTENT, CIRCLE_CONDITION_SUP
        ),
    )
}

fn c9_minkowski() -> (bool, String) {
    let mu = gen_k_symmetric_cone(6, 1, 0.025).unwrap().measure;
    let params = StratifyParams::default();
    let probe = ProbeSpec::slice(vec![0.0; 6], 2f64.powi(-7), vec![0, 1]);
    let mut values = Vec::new();
    let mut ok = true;
    let mut notes = Vec::new();
    for j in 3..=7 {
        let r = 2f64.powi(-j);
        let st = extract_stratum(&mu, 1, 0.1, r, &probe, &params.symmetry).unwrap();
        let budget = EnergyBudget::from_stratum(&mu, &st, exp4(), params.eta_fraction).unwrap();
        let rep = stratify_inductive(&mu, &st, &budget, &params).unwrap();
        let within = rep.stages.iter().all(|s| s.content <= s.content_budget);
        let staged = rep.stages.len() <= budget.max_stages;
        ok &= within && staged;
        notes.push(format!("r=2^-{j}: {} stages / {}", rep.stages.len(), budget.max_stages));
        values.push(rep.minkowski);
    }
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    ok &= lo > 0.0 && ratio <= 4.0;
    (ok, format!("minkowski {values:.2?}, max/min {ratio:.3}; {}", notes.join(", ")))
}

fn c10_scan() -> (bool, String) {
    let mu = FlatMeasure::coordinate(5, 1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let params = SymmetryParams::new(0.1);
    let mut good = 0;
    let mut smallest = f64::INFINITY;
    for _ in 0..10 {
        let d = rng.gen_range(0.3..0.8);
        let u = unit_vector_orthogonal_to_axis(&mut rng, 5);
        let mut y: Vec<f64> = u.iter().map(|a| d * a).collect();
        y[0] = rng.gen_range(-0.5..0.5);
        if let Some(res) = dimension_reduction_scan(&mu, &y, 0.1, 0.25, 1, 2.0, &params).unwrap() {
            smallest = smallest.min(res.r_star);
            let valid = res.certificate.k == 2 && verify_certificate(&mu, &res.certificate).unwrap();
            if valid && res.r_star >= 2f64.powi(-20) {
                good += 1;
            }
        }
    }
    (good == 10, format!("{good}/10 valid (2, 0.1)-certificates, smallest r* = {smallest:.3e}"))
}

fn c11_l2_bound() -> (bool, String) {
    let field: Arc<dyn CurvatureField> = Arc::new(Bpst::new(1.0));
    let r = 0.008;
    let (delta, eps, eps1) = (0.1, 1e-6, 0.5);
    let coarse = QuadSpec::default();
    let energy = FieldEnergyMeasure::new(field.clone(), coarse);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut configs = 0;
    let mut ok = true;
    let mut ratios = Vec::new();
    while configs < 10 {
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let near = detect_symmetry(&energy, &p, 8.0 * r, 0, &SymmetryParams::new(delta)).unwrap().is_some();
        let absent = detect_symmetry(&energy, &p, r, 1, &SymmetryParams::new(eps)).unwrap().is_none();
        if !(near && absent) {
            continue;
        }
        configs += 1;
        let atoms: Vec<(Vec<f64>, f64)> = (0..20)
            .map(|_| loop {
                let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-r..r)).collect();
                if z.iter().map(|a| a * a).sum::<f64>() < 0.9 * r * r {
                    break (p.iter().zip(&z).map(|(a, b)| a + b).collect(), rng.gen_range(0.5..1.5));
                }
            })
            .collect();
        let mu = WeightedPointMeasure::from_atoms(4, &atoms).unwrap();
        let a = l2_bound_check(field.clone(), &mu, &p, r, 0, eps, eps1, exp4(), &coarse).unwrap().ratio;
        let b = l2_bound_check(field.clone(), &mu, &p, r, 0, eps, eps1, exp4(), &coarse.refined()).unwrap().ratio;
        ok &= a.is_finite() && b.is_finite() && b <= a;
        ratios.push((a, b));
    }
    let rises = ratios.iter().filter(|(a, b)| b > a).count();
    let worst = ratios.iter().map(|(a, b)| b / a - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let shown: Vec<String> = ratios.iter().take(3).map(|(a, b)| format!("{a:.4e}->{b:.4e}")).collect();
    (
        ok,
        format!(
            "{configs} configurations, {rises} increase under h -> h/2 (largest relative rise {worst:.2e}); {} ...",
            shown.join(", ")
        ),
    )
}

fn digest(bytes: &[u8]) -> String {
    let mut h = DefaultHasher::new();
    h.write(bytes);
    format!("{:016x}:{}", h.finish(), bytes.len())
}

fn corpus_report() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let jones: Vec<f64> = (0..10)
        .map(|i| {
            let mu = random_measure(&mut rng, 3 + i % 3, 40, 0.5);
            jones_beta(&mu, &vec![0.0; mu.dim()], 0.7, 1, Gate::default()).unwrap().value
        })
        .collect();

    let cone = gen_k_symmetric_cone(6, 1, 0.025).unwrap().measure;
    let profile: Vec<f64> = dyadic_range(0, 7).iter().map(|&s| theta(&cone, &[0.0, 0.3, 0.0, 0.0, 0.0, 0.0], s, exp4()).unwrap()).collect();
    let cert = detect_symmetry(&cone, &[0.0; 6], 1.0, 1, &SymmetryParams::new(0.1)).unwrap();

    let circle = gen_defect_measure(DefectShape::Circle, 3, 1, 1.0, 0.6, 200).unwrap();
    let segment = gen_defect_measure(DefectShape::Segment, 3, 1, 1.0, 0.8, 100).unwrap();
    let rr = rr_check_continuous(&circle, 1, &RrConfig::default()).unwrap();
    let prof = dyadic_jones_profile(&segment, &segment, &[0.0; 3], 1.0, 1, Gate::default(), 2f64.powi(-6)).unwrap();

    let params = StratifyParams::default();
    let probe = ProbeSpec::slice(vec![0.0; 6], 2f64.powi(-4), vec![0, 1]);
    let st = extract_stratum(&cone, 1, 0.1, 0.25, &probe, &params.symmetry).unwrap();
    let budget = EnergyBudget::from_stratum(&cone, &st, exp4(), params.eta_fraction).unwrap();
    let strat = stratify_inductive(&cone, &st, &budget, &params).unwrap();

    let bpst = Bpst::new(1.0);
    let q = QuadSpec::new(0.05);
    let mono = monotonicity_check_many(&bpst, &[0.0; 4], &[(0.3, 0.6), (0.5, 1.0)], exp4(), &q, false).unwrap();
    let bump = BumpDilation { center: vec![0.0; 4], radius: 0.6, origin: vec![0.0; 4] };
    let sta = stationarity_residual(&bpst, &bump, &q).unwrap();
    let scan = dimension_reduction_scan(&FlatMeasure::coordinate(5, 1, 1.0).unwrap(), &[0.1, 0.4, 0.0, 0.0, 0.0], 0.1, 0.25, 1, 2.0, &SymmetryParams::new(0.1)).unwrap();

    let specs = [
        SynthSpec { kind: SynthKind::RadialCone, n: 5, h: 0.5, ..Default::default() },
        SynthSpec { kind: SynthKind::KSymmetricCone, n: 6, k: 1, h: 0.5, ..Default::default() },
        SynthSpec { kind: SynthKind::Instanton, n: 4, h: 0.25, ..Default::default() },
        SynthSpec { kind: SynthKind::DefectMeasure, n: 3, k: 1, shape: DefectShape::Circle, ..Default::default() },
        SynthSpec { kind: SynthKind::Uniform, n: 3, h: 0.25, ..Default::default() },
        SynthSpec { kind: SynthKind::Perturbed, n: 6, k: 1, h: 0.5, inner_cut: Some(0.25), noise: 0.05, seed: 3, ..Default::default() },
    ];
    let synth: Vec<String> = specs
        .iter()
        .map(|s| {
            let mut bytes = Vec::new();
            generate(s).unwrap().write(s, &mut bytes).unwrap();
            digest(&bytes)
        })
        .collect();

    serde_json::to_string(&json!({
        "jones": jones,
        "cone_theta": profile,
        "certificate": cert,
        "circle_drr": circle_drr(),
        "rr_circle": rr,
        "segment_profile": prof,
        "stratify": strat,
        "monotonicity": mono,
        "stationarity": sta,
        "scan": scan,
        "synth": synth,
    }))
    .unwrap()
}

fn c12_determinism() -> (bool, String) {
    let one = pool(1).install(corpus_report);
    let eight = pool(8).install(corpus_report);
    let same = one.as_bytes() == eight.as_bytes();
    (same, format!("report of {} bytes, 1 vs 8 threads identical: {same}", one.len()))
}

fn main() {
    let checks: [(u32, &str, Check); 12] = [
        (1, "jones oracle equivalence", c1_jones_oracle),
        (2, "monotonicity identity", c2_monotonicity),
        (3, "stationarity residual", c3_stationarity),
        (4, "cone density constancy", c4_cone_theta),
        (5, "certificate soundness", c5_certificates),
        (6, "symmetry check coherence", c6_coherence),
        (7, "dyadic summability", c7_dyadic_sum),
        (8, "discrete Reifenberg checker", c8_drr),
        (9, "minkowski scaling", c9_minkowski),
        (10, "dimension reduction scan", c10_scan),
        (11, "L2 bound under refinement", c11_l2_bound),
        (12, "thread-count determinism", c12_determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in checks {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id} ({name}): {verdict} [{:.1}s] {detail}", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
