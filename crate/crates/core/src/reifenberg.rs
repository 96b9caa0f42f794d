//! Dyadic Jones profiles and checkers for the continuous and discrete
//! rectifiable-Reifenberg conditions.
//!
//! The conditions quantify over all balls; the checkers evaluate them on a
//! deterministic test family (atom-centered dyadic balls plus unit-scale
//! lattice balls) which is recorded in every report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_radius, Error, Result};
use crate::jones::{jones_beta, Gate};
use crate::measure::{Measure, WeightedPointMeasure};
use crate::numeric::{dist, lex_cmp, unit_ball_volume, KahanSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicJonesProfile {
    pub center: Vec<f64>,
    pub radius: f64,
    pub k: usize,
    /// (2^{-α}, ∫_{B_r(x)} D^k(y, 2^{-α}) dμ_weight(y)), largest scale first.
    pub rows: Vec<(f64, f64)>,
    pub normalized_sum: f64,
}

/// Dyadic scales 2^{-α}, α ≥ 1, with floor ≤ 2^{-α} ≤ top; largest first.
fn profile_scales(top: f64, floor: f64) -> Vec<f64> {
    crate::numeric::dyadic_between(floor, top.min(0.5))
}

/// For each dyadic scale s = 2^{-α} ≤ 2r down to `floor`, integrates
/// D^k_{probe}(y, s) against `weight` over B_r(x).
#[allow(clippy::too_many_arguments)]
pub fn dyadic_jones_profile(
    probe: &WeightedPointMeasure,
    weight: &WeightedPointMeasure,
    x: &[f64],
    r: f64,
    k: usize,
    gate: Gate,
    floor: f64,
) -> Result<DyadicJonesProfile> {
    check_radius(r, "profile radius")?;
    check_radius(floor, "profile floor")?;
    check_finite(x, "profile center")?;
    if probe.dim() != weight.dim() || x.len() != probe.dim() {
        return Err(Error::input("profile measures and center must share a dimension"));
    }
    let ids = weight.atoms_in_ball(x, r);
    let scales = profile_scales(2.0 * r, floor);
    let rows = scales
        .iter()
        .map(|&s| -> Result<(f64, f64)> {
            let vals = ids
                .par_iter()
                .map(|&i| Ok(weight.weight(i) * jones_beta(probe, weight.position(i), s, k, gate)?.value))
                .collect::<Result<Vec<f64>>>()?;
            Ok((s, vals.into_iter().collect::<KahanSum>().value()))
        })
        .collect::<Result<Vec<_>>>()?;
    let total: KahanSum = rows.iter().map(|r| r.1).collect();
    Ok(DyadicJonesProfile { center: x.to_vec(), radius: r, k, normalized_sum: total.value() / r.powi(k as i32), rows })
}

/// D^k_μ(y_i, s_j) for every atom y_i and scale s_j of a fixed list.
struct JonesTable {
    scales: Vec<f64>,
    /// values[i * scales.len() + j]
    values: Vec<f64>,
}

impl JonesTable {
    fn build(mu: &WeightedPointMeasure, k: usize, gate: Gate, scales: Vec<f64>) -> Result<Self> {
        let ns = scales.len();
        let per_atom = (0..mu.len())
            .into_par_iter()
            .map(|i| {
                scales
                    .iter()
                    .map(|&s| Ok(jones_beta(mu, mu.position(i), s, k, gate)?.value))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(mu.len() * ns);
        for row in per_atom {
            values.extend(row);
        }
        Ok(JonesTable { scales, values })
    }

    /// Rows of the profile over B_r(x) using scales ≤ top.
    fn rows(&self, mu: &WeightedPointMeasure, x: &[f64], r: f64, top: f64) -> Vec<(f64, f64)> {
        let ids = mu.atoms_in_ball(x, r);
        let ns = self.scales.len();
        self.scales
            .iter()
            .enumerate()
            .filter(|(_, s)| **s <= top * (1.0 + 1e-12))
            .map(|(j, &s)| {
                let v: KahanSum = ids.iter().map(|&i| mu.weight(i) * self.values[i * ns + j]).collect();
                (s, v.value())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestBallRow {
    pub center: Vec<f64>,
    pub radius: f64,
    pub mass: f64,
    pub gated: bool,
    pub rows: Vec<(f64, f64)>,
    /// Condition value divided by r^k.
    pub normalized_sum: f64,
    /// μ(B_r(x)) / (ω_k r^k); only meaningful for Hausdorff-weighted samples.
    pub density_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentReport {
    pub k: usize,
    pub balls: Vec<(Vec<f64>, f64)>,
    pub content: f64,
    pub delta: f64,
    pub gate: Gate,
    pub condition_sup: f64,
    pub per_ball_rows: Vec<TestBallRow>,
    pub passed: bool,
    pub test_family: String,
    pub budget: f64,
    pub within_budget: bool,
    /// Largest density ratio over atom-centered balls inside B_1 (continuous check only).
    pub density_ratio_sup: Option<f64>,
    pub density_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrrConfig {
    pub delta: f64,
    pub gate: Gate,
    /// Content budget standing in for the unknown constant D(n).
    pub budget: f64,
    /// Smallest profile scale; defaults to the smallest ball radius.
    pub floor: Option<f64>,
    /// Include unit balls centered on the lattice (Z/2)^n ∩ B_1.
    pub lattice_balls: bool,
}

impl Default for DrrConfig {
    fn default() -> Self {
        DrrConfig { delta: 0.01, gate: Gate::default(), budget: 100.0, floor: None, lattice_balls: true }
    }
}

/// Rejects any pair with |x_i - x_j| < r_i + r_j.
pub fn check_disjoint(balls: &[(Vec<f64>, f64)]) -> Result<()> {
    if balls.is_empty() {
        return Ok(());
    }
    let n = balls[0].0.len();
    let mut coords = Vec::with_capacity(balls.len() * n);
    let mut rmax: f64 = 0.0;
    for (c, r) in balls {
        if c.len() != n {
            return Err(Error::input("balls have mixed dimensions"));
        }
        check_finite(c, "ball center")?;
        check_radius(*r, "ball radius")?;
        coords.extend_from_slice(c);
        rmax = rmax.max(*r);
    }
    let tree = crate::kdtree::KdTree::build(n, &coords);
    for (i, (c, r)) in balls.iter().enumerate() {
        for j in tree.query_ball(c, r + rmax) {
            if j != i && dist(c, &balls[j].0) < r + balls[j].1 {
                return Err(Error::input(format!("balls {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

/// Half-integer lattice points z with |z| ≤ 1 (so B_1(z) ⊆ B_2).
fn lattice_centers(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut z = vec![-2i32; n];
    loop {
        let zz: i32 = z.iter().map(|v| v * v).sum();
        if zz <= 4 {
            out.push(z.iter().map(|v| *v as f64 * 0.5).collect());
        }
        let mut i = 0;
        while i < n {
            z[i] += 1;
            if z[i] <= 2 {
                break;
            }
            z[i] = -2;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    out
}

fn sort_family(family: &mut Vec<(Vec<f64>, f64)>) {
    family.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| lex_cmp(&a.0, &b.0)));
    family.dedup();
}

/// Evaluates the discrete condition for μ = Σ r_j^k δ_{x_j}.
///
/// Test balls: B_ρ(x_j) for dyadic ρ ∈ [r_j, 1] and, optionally, B_1(z) for
/// z ∈ (Z/2)^n ∩ B_1; only balls inside B_2 with μ(B_ρ) ≥ gate·ρ^k count.
/// Each counted ball contributes Σ_{2^{-α} ≤ 2ρ} ∫_{B_ρ} D^k(y,2^{-α}) dμ / ρ^k.
pub fn drr_check(balls: &[(Vec<f64>, f64)], k: usize, config: &DrrConfig) -> Result<ContentReport> {
    check_disjoint(balls)?;
    if balls.is_empty() {
        return Ok(ContentReport {
            k,
            balls: Vec::new(),
            content: 0.0,
            delta: config.delta,
            gate: config.gate,
            condition_sup: 0.0,
            per_ball_rows: Vec::new(),
            passed: true,
            test_family: family_label(config),
            budget: config.budget,
            within_budget: true,
            density_ratio_sup: None,
            density_ok: None,
        });
    }
    let n = balls[0].0.len();
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}")));
    }
    let atoms: Vec<(Vec<f64>, f64)> = balls.iter().map(|(c, r)| (c.clone(), r.powi(k as i32))).collect();
    let mu = WeightedPointMeasure::from_atoms(n, &atoms)?;
    let rmin = balls.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let floor = config.floor.unwrap_or(rmin);
    let mut family: Vec<(Vec<f64>, f64)> = Vec::new();
    for (c, r) in balls {
        for rho in crate::numeric::dyadic_between(*r, 1.0) {
            family.push((c.clone(), rho));
        }
    }
    if config.lattice_balls {
        for z in lattice_centers(n) {
            family.push((z, 1.0));
        }
    }
    sort_family(&mut family);
    let table = JonesTable::build(&mu, k, config.gate, profile_scales(2.0, floor))?;
    let rows = evaluate_family(&mu, &table, &family, k, config.gate, 1.0)?;
    let condition_sup = rows.iter().filter(|r| !r.gated).map(|r| r.normalized_sum).fold(0.0, f64::max);
    let content: KahanSum = balls.iter().map(|b| b.1.powi(k as i32)).collect();
    let content = content.value();
    Ok(ContentReport {
        k,
        balls: balls.to_vec(),
        content,
        delta: config.delta,
        gate: config.gate,
        condition_sup,
        per_ball_rows: rows,
        passed: condition_sup <= config.delta * config.delta,
        test_family: family_label(config),
        budget: config.budget,
        within_budget: content <= config.budget,
        density_ratio_sup: None,
        density_ok: None,
    })
}

fn family_label(config: &DrrConfig) -> String {
    if config.lattice_balls {
        "atom-centered dyadic balls B_rho(x_j), r_j <= rho <= 1; unit balls at (Z/2)^n within B_1".into()
    } else {
        "atom-centered dyadic balls B_rho(x_j), r_j <= rho <= 1".into()
    }
}

fn evaluate_family(
    mu: &WeightedPointMeasure,
    table: &JonesTable,
    family: &[(Vec<f64>, f64)],
    k: usize,
    gate: Gate,
    scale_factor: f64,
) -> Result<Vec<TestBallRow>> {
    let n = mu.dim();
    let omega = unit_ball_volume(k);
    family
        .par_iter()
        .filter(|(c, rho)| crate::numeric::norm(c) + rho <= 2.0 * (1.0 + 1e-12))
        .map(|(c, rho)| {
            let mass = mu.mass_in_ball(c, *rho)?;
            let gated = gate.is_gated(n, mass, *rho, k);
            let rows = if gated { Vec::new() } else { table.rows(mu, c, *rho, 2.0 * rho) };
            let total: KahanSum = rows.iter().map(|r| r.1).collect();
            Ok(TestBallRow {
                center: c.clone(),
                radius: *rho,
                mass,
                gated,
                normalized_sum: scale_factor * total.value() / rho.powi(k as i32),
                rows,
                density_ratio: mass / (omega * rho.powi(k as i32)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrConfig {
    pub delta: f64,
    pub gate: Gate,
    /// Test-ball radii.
    pub test_radii: Vec<f64>,
    /// Smallest dyadic scale in the ds/s sum.
    pub floor: f64,
    /// Tolerance ε in the density bound μ(B_r(x)) ≤ (1+ε) ω_k r^k.
    pub density_eps: f64,
    /// At most this many atoms (evenly strided in index order) serve as centers.
    pub max_centers: usize,
    pub budget: f64,
}

impl Default for RrConfig {
    fn default() -> Self {
        RrConfig {
            delta: 0.01,
            gate: Gate::default(),
            test_radii: vec![1.0, 0.5, 0.25],
            floor: 2f64.powi(-6),
            density_eps: 0.02,
            max_centers: 256,
            budget: 100.0,
        }
    }
}

/// Continuous condition for a sample of H^k|_S: ∫_0^r D^k(y,s) ds/s is
/// replaced by ln 2 · Σ_{2^{-α} ≤ r} D^k(y, 2^{-α}); the reported values
/// include the ln 2 factor. The weights must approximate H^k (caller's duty).
pub fn rr_check_continuous(sample: &WeightedPointMeasure, k: usize, config: &RrConfig) -> Result<ContentReport> {
    let n = sample.dim();
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}")));
    }
    check_radius(config.floor, "rr floor")?;
    let rmax = config.test_radii.iter().cloned().fold(0.0, f64::max);
    let table = JonesTable::build(sample, k, config.gate, crate::numeric::dyadic_between(config.floor, rmax))?;
    let count = sample.len();
    let stride = count.div_ceil(config.max_centers.max(1)).max(1);
    let mut family = Vec::new();
    for i in (0..count).step_by(stride) {
        for &rho in &config.test_radii {
            family.push((sample.position(i).to_vec(), rho));
        }
    }
    sort_family(&mut family);
    // the ds/s sum runs over scales ≤ r rather than ≤ 2r
    let rows: Vec<TestBallRow> = family
        .par_iter()
        .filter(|(c, rho)| crate::numeric::norm(c) + rho <= 2.0 * (1.0 + 1e-12))
        .map(|(c, rho)| {
            let mass = sample.mass_in_ball(c, *rho)?;
            let gated = config.gate.is_gated(n, mass, *rho, k);
            let rows = if gated { Vec::new() } else { table.rows(sample, c, *rho, *rho) };
            let total: KahanSum = rows.iter().map(|r| r.1).collect();
            Ok(TestBallRow {
                center: c.clone(),
                radius: *rho,
                mass,
                gated,
                normalized_sum: std::f64::consts::LN_2 * total.value() / rho.powi(k as i32),
                rows,
                density_ratio: mass / (unit_ball_volume(k) * rho.powi(k as i32)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let condition_sup = rows.iter().filter(|r| !r.gated).map(|r| r.normalized_sum).fold(0.0, f64::max);
    let density_sup = rows
        .iter()
        .filter(|r| crate::numeric::norm(&r.center) + r.radius <= 1.0 + 1e-12)
        .map(|r| r.density_ratio)
        .fold(0.0, f64::max);
    let content = sample.total_mass();
    Ok(ContentReport {
        k,
        balls: Vec::new(),
        content,
        delta: config.delta,
        gate: config.gate,
        condition_sup,
        per_ball_rows: rows,
        passed: condition_sup <= config.delta * config.delta,
        test_family: format!("atom-centered balls of radii {:?}, every {stride}-th atom", config.test_radii),
        budget: config.budget,
        within_budget: content <= config.budget,
        density_ratio_sup: Some(density_sup),
        density_ok: Some(density_sup <= 1.0 + config.density_eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::jones_beta;
    use std::f64::consts::PI;

    fn circle_atoms(count: usize, radius: f64) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / count as f64;
                vec![radius * t.cos(), radius * t.sin(), 0.0]
            })
            .collect()
    }

    #[test]
    fn profile_matches_direct_double_loop() {
        let pts = circle_atoms(64, 1.0);
        let list: Vec<(Vec<f64>, f64)> = pts.iter().map(|p| (p.clone(), 1.0)).collect();
        let mu = WeightedPointMeasure::from_atoms(3, &list).unwrap();
        let prof = dyadic_jones_profile(&mu, &mu, &[0.0; 3], 1.01, 1, Gate::default(), 2f64.powi(-6)).unwrap();
        assert_eq!(prof.rows.len(), 6);
        for (s, v) in &prof.rows {
            let mut direct = 0.0;
            for p in &pts {
                direct += jones_beta(&mu, p, *s, 1, Gate::default()).unwrap().value;
            }
            assert!((v - direct).abs() <= 1e-8 * (1.0 + direct));
        }
        let total: f64 = prof.rows.iter().map(|r| r.1).sum();
        assert!((prof.normalized_sum - total / 1.01).abs() <= 1e-12 * (1.0 + total));
        // the table path used by the checkers agrees
        let table = JonesTable::build(&mu, 1, Gate::default(), profile_scales(2.0, 2f64.powi(-6))).unwrap();
        for (a, b) in table.rows(&mu, &[0.0; 3], 1.01, 2.02).iter().zip(&prof.rows) {
            assert!((a.1 - b.1).abs() <= 1e-12 * (1.0 + b.1));
        }
    }

    #[test]
    fn flat_and_single_atom_profiles_vanish() {
        let pts: Vec<(Vec<f64>, f64)> = (0..20).map(|i| (vec![0.05 * i as f64 - 0.5, 0.1 * i as f64 - 1.0, 0.0], 1.0)).collect();
        let mu = WeightedPointMeasure::from_atoms(3, &pts).unwrap();
        let prof = dyadic_jones_profile(&mu, &mu, &[0.0; 3], 1.0, 1, Gate::default(), 1e-3).unwrap();
        assert!(prof.rows.iter().all(|r| r.1.abs() < 1e-12));
        let one = WeightedPointMeasure::from_atoms(3, &[(vec![0.0; 3], 1.0)]).unwrap();
        let prof = dyadic_jones_profile(&one, &one, &[0.0; 3], 1.0, 1, Gate::default(), 1e-3).unwrap();
        assert!(prof.rows.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn removing_finest_scale_never_increases_sum() {
        let pts = circle_atoms(40, 0.7);
        let list: Vec<(Vec<f64>, f64)> = pts.iter().map(|p| (p.clone(), 0.5)).collect();
        let mu = WeightedPointMeasure::from_atoms(3, &list).unwrap();
        let fine = dyadic_jones_profile(&mu, &mu, &[0.0; 3], 1.0, 1, Gate::default(), 2f64.powi(-7)).unwrap();
        let coarse = dyadic_jones_profile(&mu, &mu, &[0.0; 3], 1.0, 1, Gate::default(), 2f64.powi(-6)).unwrap();
        assert_eq!(fine.rows.len(), coarse.rows.len() + 1);
        assert!(coarse.normalized_sum <= fine.normalized_sum);
    }

    #[test]
    fn drr_examples() {
        let one = drr_check(&[(vec![0.0; 3], 1.0)], 1, &DrrConfig::default()).unwrap();
        assert!(one.passed && one.content == 1.0 && one.condition_sup == 0.0);
        let m = 5;
        let r = 2f64.powi(-m);
        let segment: Vec<(Vec<f64>, f64)> = (0..(1 << m)).map(|i| (vec![-1.0 + r + 2.0 * r * i as f64, 0.0, 0.0], r)).collect();
        let rep = drr_check(&segment, 1, &DrrConfig::default()).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.content, 1.0);
        assert!(rep.condition_sup < 1e-20);
    }

    #[test]
    fn drr_rejects_overlap() {
        let balls = vec![(vec![0.0, 0.0], 0.5), (vec![0.9, 0.0], 0.5)];
        assert!(matches!(drr_check(&balls, 1, &DrrConfig::default()), Err(Error::Input(_))));
        let touching = vec![(vec![0.0, 0.0], 0.5), (vec![1.0, 0.0], 0.5)];
        assert!(drr_check(&touching, 1, &DrrConfig::default()).is_ok());
    }

    #[test]
    fn flat_plane_passes_for_every_delta() {
        let balls: Vec<(Vec<f64>, f64)> = (0..8)
            .flat_map(|i| (0..8).map(move |j| (vec![0.2 * i as f64 - 0.7, 0.2 * j as f64 - 0.7, 0.0, 0.0], 0.099)))
            .collect();
        for delta in [1e-6, 1e-3, 0.1] {
            let rep = drr_check(&balls, 2, &DrrConfig { delta, ..DrrConfig::default() }).unwrap();
            assert!(rep.passed, "{}", rep.condition_sup);
        }
    }

    #[test]
    fn rr_flat_disk_and_single_point() {
        // 100 x 100 grid on the unit square restricted to the unit disk
        let h = 2.0 / 113.0;
        let mut atoms = Vec::new();
        for i in 0..113 {
            for j in 0..113 {
                let (x, y) = (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                if x * x + y * y <= 1.0 {
                    atoms.push((vec![x, y, 0.0], h * h));
                }
            }
        }
        let mu = WeightedPointMeasure::from_atoms(3, &atoms).unwrap();
        let cfg = RrConfig { test_radii: vec![0.5], floor: 2f64.powi(-4), ..RrConfig::default() };
        let rep = rr_check_continuous(&mu, 2, &cfg).unwrap();
        assert!(rep.condition_sup < 1e-20);
        assert!(rep.density_ratio_sup.unwrap() <= 1.02, "{:?}", rep.density_ratio_sup);
        let point = WeightedPointMeasure::from_atoms(3, &[(vec![0.0; 3], 1e-6)]).unwrap();
        let rep = rr_check_continuous(&point, 1, &RrConfig::default()).unwrap();
        assert!(rep.passed && rep.per_ball_rows.iter().all(|r| r.gated));
    }

    #[test]
    fn rr_circle_arc_improves_under_refinement() {
        let arc = |count: usize| {
            let step = 1.0 / count as f64;
            let atoms: Vec<(Vec<f64>, f64)> = (0..count)
                .map(|i| {
                    let t = (i as f64 + 0.5) * step - 0.5;
                    (vec![t.sin(), 1.0 - t.cos(), 0.0], step)
                })
                .collect();
            WeightedPointMeasure::from_atoms(3, &atoms).unwrap()
        };
        let cfg = RrConfig { test_radii: vec![0.5, 0.25], floor: 2f64.powi(-5), ..RrConfig::default() };
        let a = rr_check_continuous(&arc(64), 1, &cfg).unwrap();
        let b = rr_check_continuous(&arc(128), 1, &cfg).unwrap();
        assert!(a.condition_sup > 0.0 && a.condition_sup < 0.01);
        assert!(b.condition_sup <= a.condition_sup, "{} {}", b.condition_sup, a.condition_sup);
    }
}
