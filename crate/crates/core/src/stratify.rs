//! Quantitative strata on a probe lattice, the inductive covering
//! construction with energy induction, and Minkowski content by lattice
//! counting.
//!
//! All statements are about probe points: a probe is flagged when no dyadic
//! scale s ∈ [r, 1] admits a (k+1, ε)-certificate in B_s(y) among the
//! candidate family of [`detect_symmetry`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_radius, Error, Result};
use crate::kdtree::KdTree;
use crate::measure::{theta, DensityExponent, Measure, Rescaled};
use crate::numeric::{dist2, dyadic_between, lex_cmp, unit_ball_volume};
use crate::reifenberg::{drr_check, DrrConfig};
use crate::symmetry::{detect_symmetry, SymmetryParams};

/// Probe lattice: center + spacing·z for integer z, restricted to the closed
/// ball of the given radius. With `axes` set, only those coordinates vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub spacing: f64,
    pub axes: Option<Vec<usize>>,
}

impl ProbeSpec {
    pub fn full(center: Vec<f64>, spacing: f64) -> Self {
        ProbeSpec { center, radius: 1.0, spacing, axes: None }
    }

    pub fn slice(center: Vec<f64>, spacing: f64, axes: Vec<usize>) -> Self {
        ProbeSpec { center, radius: 1.0, spacing, axes: Some(axes) }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.center.len() != n {
            return Err(Error::input("probe center has the wrong dimension"));
        }
        check_finite(&self.center, "probe center")?;
        check_radius(self.spacing, "probe spacing")?;
        check_radius(self.radius, "probe region radius")?;
        if self.radius > 1.0 + 1e-12 {
            return Err(Error::input("probe region must lie in the unit ball"));
        }
        if let Some(axes) = &self.axes {
            if axes.is_empty() || axes.iter().any(|&a| a >= n) {
                return Err(Error::input("probe axes must be nonempty and below n"));
            }
            let mut sorted = axes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != axes.len() {
                return Err(Error::input("probe axes repeat"));
            }
        }
        Ok(())
    }

    /// Probe points in lexicographic order of their integer offsets.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.center.len();
        let axes: Vec<usize> = self.axes.clone().unwrap_or_else(|| (0..n).collect());
        let m = axes.len();
        let half = (self.radius / self.spacing * (1.0 + 1e-12)).floor() as i64;
        let lim = self.radius * self.radius * (1.0 + 1e-12);
        let mut out = Vec::new();
        let mut z = vec![-half; m];
        loop {
            let mut y = self.center.clone();
            for (a, v) in axes.iter().zip(&z) {
                y[*a] += self.spacing * *v as f64;
            }
            if dist2(&y, &self.center) <= lim {
                out.push(y);
            }
            let mut i = m;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                z[i] += 1;
                if z[i] <= half {
                    break;
                }
                z[i] = -half;
            }
        }
    }
}

/// A flagged probe and the scales at which no certificate was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub x: Vec<f64>,
    pub rejected_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSample {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub r: f64,
    pub probe: ProbeSpec,
    /// Dyadic scales tested, ascending.
    pub scales: Vec<f64>,
    pub probes_tested: usize,
    pub flagged: Vec<FlaggedPoint>,
    /// Set when the probe spacing exceeds r/4.
    pub undersampled: bool,
}

impl StratumSample {
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.flagged.iter().map(|f| f.x.clone()).collect()
    }
}

/// Flags probes y ∈ B_1(p) such that B_s(y) carries no (k+1, ε)-certificate
/// for every dyadic s ∈ [r, 1]. Scales are tried from the smallest up and the
/// search stops at the first certificate.
pub fn extract_stratum(
    mu: &dyn Measure,
    k: usize,
    eps: f64,
    r: f64,
    probe: &ProbeSpec,
    params: &SymmetryParams,
) -> Result<StratumSample> {
    let n = mu.dim();
    if k >= n {
        return Err(Error::input(format!("stratum dimension must satisfy k <= n - 1, got k = {k}, n = {n}")));
    }
    check_radius(r, "stratum scale")?;
    if r > 1.0 {
        return Err(Error::input("stratum scale must be at most 1"));
    }
    probe.validate(n)?;
    let params = params.with_eps(eps);
    params.validate()?;
    let mut scales = dyadic_between(r, 1.0);
    scales.reverse();
    let probes = probe.points();
    let flagged = probes
        .par_iter()
        .map(|y| -> Result<Option<FlaggedPoint>> {
            for &s in &scales {
                if detect_symmetry(mu, y, s, k + 1, &params)?.is_some() {
                    return Ok(None);
                }
            }
            Ok(Some(FlaggedPoint { x: y.clone(), rejected_scales: scales.clone() }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StratumSample {
        n,
        k,
        eps,
        r,
        probe: probe.clone(),
        scales,
        probes_tested: probes.len(),
        flagged: flagged.into_iter().flatten().collect(),
        undersampled: probe.spacing > r / 4.0 * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    /// Energy ceiling: sup of θ(y,1) over the flagged probes.
    pub e: f64,
    pub eta: f64,
    pub lambda: f64,
    pub max_stages: usize,
}

impl EnergyBudget {
    pub fn new(e: f64, eta: f64, lambda: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::input(format!("energy drop eta must be positive, got {eta}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite() && e >= 0.0 && e.is_finite()) {
            return Err(Error::input("energy bounds must be finite and nonnegative"));
        }
        if e > lambda * (1.0 + 1e-12) {
            return Err(Error::input(format!("energy ceiling {e} exceeds the bound {lambda}")));
        }
        let max_stages = (lambda / eta).ceil() as usize + 1;
        Ok(EnergyBudget { e, eta, lambda, max_stages })
    }

    /// E = sup θ(y,1) over the flagged probes, Λ = E and η = eta_fraction·Λ.
    /// An empty or massless stratum gets a single-stage budget.
    pub fn from_stratum(mu: &dyn Measure, stratum: &StratumSample, exp: DensityExponent, eta_fraction: f64) -> Result<Self> {
        if !(eta_fraction > 0.0 && eta_fraction <= 1.0) {
            return Err(Error::input("eta fraction must lie in (0, 1]"));
        }
        let thetas = stratum
            .flagged
            .par_iter()
            .map(|f| theta(mu, &f.x, 1.0, exp))
            .collect::<Result<Vec<_>>>()?;
        let e = thetas.into_iter().fold(0.0, f64::max);
        if e > 0.0 {
            Self::new(e, eta_fraction * e, e)
        } else {
            Self::new(0.0, 1.0, 0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlusBall {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Sup of θ(y, radius) over flagged probes y in the ball.
    pub energy: f64,
}

/// Compact record of a discrete Reifenberg check on a selected sub-family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrrSummary {
    pub stage: usize,
    pub family: String,
    pub balls: usize,
    pub content: f64,
    pub condition_sup: f64,
    pub passed: bool,
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub stage: usize,
    pub n: usize,
    pub k: usize,
    pub r: f64,
    /// Centers of the radius-r balls.
    pub u_r: Vec<Vec<f64>>,
    pub u_plus: Vec<PlusBall>,
    /// Vol of the union of the radius-r balls, by lattice counting.
    pub u_r_volume: f64,
    pub content: f64,
    pub drr: Vec<DrrSummary>,
    pub conforming: bool,
}

impl Cover {
    fn empty(n: usize, k: usize, r: f64, stage: usize) -> Self {
        Cover {
            stage,
            n,
            k,
            r,
            u_r: Vec::new(),
            u_plus: Vec::new(),
            u_r_volume: 0.0,
            content: 0.0,
            drr: Vec::new(),
            conforming: true,
        }
    }

    /// Whether x lies in some ball of the cover.
    pub fn covers(&self, x: &[f64]) -> bool {
        let slack = 1.0 + 1e-9;
        self.u_r.iter().any(|c| dist2(c, x) <= self.r * self.r * slack)
            || self.u_plus.iter().any(|b| dist2(&b.center, x) <= b.radius * b.radius * slack)
    }

    pub fn ball_count(&self) -> usize {
        self.u_r.len() + self.u_plus.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifyParams {
    pub symmetry: SymmetryParams,
    /// η as a fraction of Λ when the budget is derived from the stratum.
    pub eta_fraction: f64,
    /// Per-stage bound on the cover content.
    pub content_budget: f64,
    pub drr: DrrConfig,
    pub run_drr: bool,
}

impl Default for StratifyParams {
    fn default() -> Self {
        StratifyParams {
            symmetry: SymmetryParams::new(0.1),
            eta_fraction: 0.05,
            content_budget: 100.0,
            drr: DrrConfig { lattice_balls: false, ..DrrConfig::default() },
            run_drr: true,
        }
    }
}

/// One application of the covering lemma at unit scale, in coordinates where
/// the ball is B_1(0).
struct LocalCover {
    u_r: Vec<Vec<f64>>,
    u_plus: Vec<PlusBall>,
    drr: Vec<(String, crate::reifenberg::ContentReport)>,
}

/// Greedy maximal family with pairwise distances > sep, in the given order.
fn vitali(points: &[Vec<f64>], order: &[usize], sep: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let sep2 = sep * sep;
    for &i in order {
        if chosen.iter().all(|&j| dist2(&points[i], &points[j]) > sep2) {
            chosen.push(i);
        }
    }
    chosen
}

fn local_cover(
    mu: &dyn Measure,
    points: &[Vec<f64>],
    e: f64,
    eta: f64,
    r: f64,
    k: usize,
    params: &StratifyParams,
) -> Result<LocalCover> {
    let n = mu.dim();
    let exp = params.symmetry.exp;
    let mut out = LocalCover { u_r: Vec::new(), u_plus: Vec::new(), drr: Vec::new() };
    if points.is_empty() {
        return Ok(out);
    }
    let coords: Vec<f64> = points.iter().flatten().copied().collect();
    let tree = KdTree::build(n, &coords);
    let mut covered = vec![false; points.len()];
    let scales: Vec<f64> = dyadic_between(r, 1.0).into_iter().filter(|&s| s > r * (1.0 + 1e-12)).collect();
    for &s in &scales {
        let th = points
            .par_iter()
            .map(|y| theta(mu, y, s, exp))
            .collect::<Result<Vec<_>>>()?;
        // energy of B_s(y): sup of θ(z,s) over flagged z in the ball
        let mut cand: Vec<(usize, f64)> = Vec::new();
        for (i, y) in points.iter().enumerate() {
            if covered[i] {
                continue;
            }
            let mut sup: f64 = 0.0;
            tree.for_each_in_ball(y, s, |j| sup = sup.max(th[j]));
            if sup <= e - eta {
                cand.push((i, sup));
            }
        }
        if cand.is_empty() {
            continue;
        }
        cand.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&points[a.0], &points[b.0])));
        let order: Vec<usize> = cand.iter().map(|c| c.0).collect();
        let energy: HashMap<usize, f64> = cand.iter().copied().collect();
        // disjoint B_{s/5}, inflated by 5
        let chosen = vitali(points, &order, 0.4 * s);
        let mut family = Vec::with_capacity(chosen.len());
        for &i in &chosen {
            tree.for_each_in_ball(&points[i], s, |j| covered[j] = true);
            out.u_plus.push(PlusBall { center: points[i].clone(), radius: s, energy: energy[&i] });
            family.push((points[i].clone(), 0.2 * s));
        }
        if params.run_drr && k < n {
            out.drr.push((format!("u_plus s={s:e}"), drr_check(&family, k, &params.drr)?));
        }
    }
    let mut rest: Vec<usize> = (0..points.len()).filter(|&i| !covered[i]).collect();
    if !rest.is_empty() {
        let th = rest
            .par_iter()
            .map(|&i| theta(mu, &points[i], r, exp))
            .collect::<Result<Vec<_>>>()?;
        let mut keyed: Vec<(usize, f64)> = rest.iter().copied().zip(th).collect();
        keyed.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| lex_cmp(&points[a.0], &points[b.0])));
        rest = keyed.into_iter().map(|c| c.0).collect();
        let chosen = vitali(points, &rest, 0.4 * r);
        let family: Vec<(Vec<f64>, f64)> = chosen.iter().map(|&i| (points[i].clone(), 0.2 * r)).collect();
        out.u_r = chosen.iter().map(|&i| points[i].clone()).collect();
        if params.run_drr && k < n {
            out.drr.push(("u_r".to_string(), drr_check(&family, k, &params.drr)?));
        }
    }
    Ok(out)
}

fn cover_content(n: usize, k: usize, r: f64, u_r: &[Vec<f64>], u_plus: &[PlusBall]) -> (f64, f64) {
    let vol = union_volume(u_r, r, r / 4.0, None);
    let plus: f64 = u_plus.iter().map(|b| b.radius.powi(k as i32)).sum();
    (vol, r.powi(k as i32 - n as i32) * vol + unit_ball_volume(k) * plus)
}

fn summarize(stage: usize, drr: Vec<(String, crate::reifenberg::ContentReport)>) -> Vec<DrrSummary> {
    drr.into_iter()
        .map(|(family, rep)| DrrSummary {
            stage,
            family,
            balls: rep.balls.len(),
            content: rep.content,
            condition_sup: rep.condition_sup,
            passed: rep.passed,
            within_budget: rep.within_budget,
        })
        .collect()
}

/// One application of the covering lemma on B_1(p) to the flagged probes.
///
/// Descending through dyadic s ∈ (r, 1], probes whose ball B_s(y) has
/// energy sup θ(z,s) ≤ E - η over flagged z are covered by a Vitali family
/// (disjoint B_{s/5}, inflated by 5) of U_plus balls. Remaining probes are
/// covered the same way by radius-r balls. Each selected family, with radii
/// r_i/5 so that the balls stay disjoint, goes through [`drr_check`].
pub fn build_cover(
    mu: &dyn Measure,
    stratum: &StratumSample,
    budget: &EnergyBudget,
    r: f64,
    params: &StratifyParams,
) -> Result<Cover> {
    let n = mu.dim();
    let k = stratum.k;
    check_radius(r, "cover scale")?;
    if stratum.flagged.is_empty() {
        return Ok(Cover::empty(n, k, r, 1));
    }
    let p = &stratum.probe.center;
    let local_mu = Rescaled::new(mu, p, 1.0, params.symmetry.exp)?;
    let local: Vec<Vec<f64>> =
        stratum.flagged.iter().map(|f| f.x.iter().zip(p).map(|(a, c)| a - c).collect()).collect();
    let lc = local_cover(&local_mu, &local, budget.e, budget.eta, r, k, params)?;
    let shift = |x: &[f64]| -> Vec<f64> { x.iter().zip(p).map(|(a, c)| a + c).collect() };
    let u_r: Vec<Vec<f64>> = lc.u_r.iter().map(|c| shift(c)).collect();
    let u_plus: Vec<PlusBall> =
        lc.u_plus.iter().map(|b| PlusBall { center: shift(&b.center), radius: b.radius, energy: b.energy }).collect();
    let (u_r_volume, content) = cover_content(n, k, r, &u_r, &u_plus);
    let drr = summarize(1, lc.drr);
    let conforming = drr.iter().all(|d| d.passed);
    Ok(Cover { stage: 1, n, k, r, u_r, u_plus, u_r_volume, content, drr, conforming })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub u_r_count: usize,
    pub u_plus_count: usize,
    pub content: f64,
    pub content_budget: f64,
    pub within_budget: bool,
    /// Λ - ℓη.
    pub energy_ceiling: f64,
    pub max_plus_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductiveReport {
    pub budget: EnergyBudget,
    pub stages: Vec<StageReport>,
    pub final_cover: Cover,
    /// r^{k-n} Vol of the union of the final radius-r balls.
    pub minkowski: f64,
    pub complete: bool,
    pub warnings: Vec<String>,
}

/// Iterates the covering lemma: every U_plus ball B_{r_i}(x_i) of stage ℓ is
/// blown up to unit scale and re-covered with target scale r/r_i and energy
/// ceiling E_i, until no U_plus balls remain or `budget.max_stages` is hit.
/// The flagged probes of the original stratum are reused inside each ball.
pub fn stratify_inductive(
    mu: &dyn Measure,
    stratum: &StratumSample,
    budget: &EnergyBudget,
    params: &StratifyParams,
) -> Result<InductiveReport> {
    let n = mu.dim();
    let k = stratum.k;
    let r = stratum.r;
    let exp = params.symmetry.exp;
    if budget.max_stages == 0 {
        return Err(Error::input("max_stages must be positive"));
    }
    let mut stages = Vec::new();
    let mut cover = build_cover(mu, stratum, budget, r, params)?;
    let mut drr = cover.drr.clone();
    let points = stratum.points();
    let coords: Vec<f64> = points.iter().flatten().copied().collect();
    let tree = KdTree::build(n, &coords);
    let record = |cover: &Cover, stage: usize| StageReport {
        stage,
        u_r_count: cover.u_r.len(),
        u_plus_count: cover.u_plus.len(),
        content: cover.content,
        content_budget: params.content_budget,
        within_budget: cover.content <= params.content_budget,
        energy_ceiling: budget.lambda - stage as f64 * budget.eta,
        max_plus_energy: cover.u_plus.iter().map(|b| b.energy).fold(0.0, f64::max),
    };
    stages.push(record(&cover, 1));
    let mut stage = 1;
    while !cover.u_plus.is_empty() && stage < budget.max_stages {
        stage += 1;
        let results = cover
            .u_plus
            .par_iter()
            .map(|b| -> Result<LocalCover> {
                let inside: Vec<Vec<f64>> = tree
                    .query_ball(&b.center, b.radius * (1.0 + 1e-9))
                    .into_iter()
                    .map(|i| points[i].iter().zip(&b.center).map(|(a, c)| (a - c) / b.radius).collect())
                    .collect();
                let local_mu = Rescaled::new(mu, &b.center, b.radius, exp)?;
                local_cover(&local_mu, &inside, b.energy, budget.eta, r / b.radius, k, params)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut u_r = std::mem::take(&mut cover.u_r);
        let mut u_plus = Vec::new();
        let mut stage_drr = Vec::new();
        for (b, lc) in cover.u_plus.iter().zip(results) {
            let back = |x: &[f64]| -> Vec<f64> { x.iter().zip(&b.center).map(|(a, c)| c + b.radius * a).collect() };
            u_r.extend(lc.u_r.iter().map(|c| back(c)));
            u_plus.extend(lc.u_plus.iter().map(|q| PlusBall {
                center: back(&q.center),
                radius: b.radius * q.radius,
                energy: q.energy,
            }));
            stage_drr.extend(summarize(stage, lc.drr));
        }
        let (u_r_volume, content) = cover_content(n, k, r, &u_r, &u_plus);
        let conforming = cover.conforming && stage_drr.iter().all(|d| d.passed);
        drr.extend(stage_drr.iter().cloned());
        cover = Cover { stage, n, k, r, u_r, u_plus, u_r_volume, content, drr: stage_drr, conforming };
        stages.push(record(&cover, stage));
    }
    let mut warnings = Vec::new();
    if stratum.undersampled {
        warnings.push(format!(
            "probe spacing {} exceeds r/4 = {}; the stratum is undersampled",
            stratum.probe.spacing,
            r / 4.0
        ));
    }
    let complete = cover.u_plus.is_empty();
    if !complete {
        warnings.push(format!(
            "stage limit {} reached with {} U_plus balls left; partial result",
            budget.max_stages,
            cover.u_plus.len()
        ));
    }
    let minkowski = r.powi(k as i32 - n as i32) * cover.u_r_volume;
    cover.drr = drr;
    Ok(InductiveReport { budget: *budget, stages, final_cover: cover, minkowski, complete, warnings })
}

/// Depth-first over the transverse axes 1..n carrying the partial squared
/// offset; each leaf appends the covered index run along axis 0.
#[allow(clippy::too_many_arguments)]
fn walk(
    p: &[f64],
    axis: usize,
    acc: f64,
    r2: f64,
    h: f64,
    idx: &mut Vec<i64>,
    clip: &dyn Fn(usize, i64, i64) -> (i64, i64),
    rows: &mut HashMap<Vec<i64>, Vec<(i64, i64)>>,
) {
    let n = p.len();
    if axis == n {
        let rem = (r2 - acc).sqrt();
        let lo = ((p[0] - rem) / h - 0.5).ceil() as i64;
        let hi = ((p[0] + rem) / h - 0.5).floor() as i64;
        let (a, b) = clip(0, lo, hi);
        if a <= b {
            rows.entry(idx.clone()).or_default().push((a, b));
        }
        return;
    }
    let rem = (r2 - acc).max(0.0).sqrt();
    let lo = ((p[axis] - rem) / h - 0.5).ceil() as i64;
    let hi = ((p[axis] + rem) / h - 0.5).floor() as i64;
    let (a, b) = clip(axis, lo, hi);
    for i in a..=b {
        let c = (i as f64 + 0.5) * h - p[axis];
        let next = acc + c * c;
        if next <= r2 {
            idx[axis - 1] = i;
            walk(p, axis + 1, next, r2, h, idx, clip, rows);
        }
    }
}

/// Volume of the union of closed balls B_radius(x) over the points, clipped to
/// an axis-aligned box when given, by counting cells of side h on the global
/// grid (h Z + h/2)^n whose centers fall in some ball.
pub fn union_volume(points: &[Vec<f64>], radius: f64, h: f64, bounds: Option<&[(f64, f64)]>) -> f64 {
    if points.is_empty() || !(radius >= 0.0) || !(h > 0.0) {
        return 0.0;
    }
    let n = points[0].len();
    let lo_idx = |v: f64| -> i64 { (v / h - 0.5).ceil() as i64 };
    let hi_idx = |v: f64| -> i64 { (v / h - 0.5).floor() as i64 };
    let clip = |axis: usize, lo: i64, hi: i64| -> (i64, i64) {
        match bounds {
            Some(b) => (lo.max(lo_idx(b[axis].0)), hi.min(hi_idx(b[axis].1))),
            None => (lo, hi),
        }
    };
    let r2 = radius * radius;
    let mut rows: HashMap<Vec<i64>, Vec<(i64, i64)>> = HashMap::new();
    let mut idx = vec![0i64; n.saturating_sub(1)];
    for p in points {
        if n == 1 {
            let (a, b) = clip(0, lo_idx(p[0] - radius), hi_idx(p[0] + radius));
            if a <= b {
                rows.entry(Vec::new()).or_default().push((a, b));
            }
            continue;
        }
        walk(p, 1, 0.0, r2, h, &mut idx, &clip, &mut rows);
    }
    let mut count: u64 = 0;
    for (_, mut iv) in rows {
        iv.sort_unstable();
        let (mut a, mut b) = iv[0];
        for &(c, d) in &iv[1..] {
            if c > b + 1 {
                count += (b - a + 1) as u64;
                a = c;
                b = d;
            } else {
                b = b.max(d);
            }
        }
        count += (b - a + 1) as u64;
    }
    count as f64 * h.powi(n as i32)
}

/// Vol(B_r(points) ∩ box) / r^{n-k}, counting cells of side r/4.
pub fn minkowski_content(points: &[Vec<f64>], r: f64, k: usize, bounds: Option<&[(f64, f64)]>) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points[0].len();
    union_volume(points, r, r / 4.0, bounds) / r.powi(n as i32 - k as i32)
}
