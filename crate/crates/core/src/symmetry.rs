//! Cone tips, effective spanning and quantitative symmetry.
//!
//! Symmetry detection searches a fixed, deterministic set of tip candidates
//! (a lattice in B_{r/2}(x) plus any support points of μ there). A returned
//! certificate always re-verifies from raw mass queries; a `None` only means
//! that no certificate was found among the candidates.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_radius, Error, Result};
use crate::measure::{theta, AffinePlane, DensityExponent, Measure};
use crate::numeric::{dist, dist2, dot, lex_cmp, norm};

/// Relative slack for ball-membership tests on candidate points.
const MEMBERSHIP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTipCertificate {
    pub x0: Vec<f64>,
    pub r: f64,
    pub eps: f64,
    /// θ(x0, 2r).
    pub theta_outer: f64,
    /// θ(x0, 2εr).
    pub theta_inner: f64,
    pub drop: f64,
    pub valid: bool,
}

/// |θ(x0, 2r) - θ(x0, 2εr)| ≤ ε.
pub fn cone_tip_test(mu: &dyn Measure, x0: &[f64], r: f64, eps: f64, exp: DensityExponent) -> Result<ConeTipCertificate> {
    check_radius(r, "cone tip scale")?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::input(format!("cone tip parameter must lie in (0, 1), got {eps}")));
    }
    check_scale(mu, 2.0 * eps * r)?;
    let theta_outer = theta(mu, x0, 2.0 * r, exp)?;
    let theta_inner = theta(mu, x0, 2.0 * eps * r, exp)?;
    let drop = theta_outer - theta_inner;
    Ok(ConeTipCertificate { x0: x0.to_vec(), r, eps, theta_outer, theta_inner, drop, valid: drop.abs() <= eps })
}

/// Errors if the smallest scale a test needs is under twice the resolution.
pub fn check_scale(mu: &dyn Measure, smallest: f64) -> Result<()> {
    let res = mu.resolution();
    if res > 0.0 && smallest < 2.0 * res {
        return Err(Error::resolution(format!(
            "scale {smallest:.3e} is below twice the measure resolution {res:.3e}"
        )));
    }
    Ok(())
}

/// Why a point list failed to effectively span.
#[derive(Debug, Clone, PartialEq)]
pub enum SpanFailure {
    /// Point `index` lies outside B_{r/2}(x).
    OutsideBall { index: usize },
    /// Point `index` is closer than τr to the span of its predecessors.
    Degenerate { index: usize, distance: f64 },
}

/// Checks that `points` lie in B_{r/2}(x) and each is at distance ≥ τr from
/// the affine span of its predecessors; returns the spanned plane.
pub fn effective_span(points: &[Vec<f64>], x: &[f64], r: f64, tau: f64) -> std::result::Result<AffinePlane, SpanFailure> {
    assert!(!points.is_empty(), "effective_span needs at least one point");
    let n = x.len();
    assert!(points.len() <= n + 1, "at most n + 1 points can span");
    for (i, p) in points.iter().enumerate() {
        if dist(p, x) > 0.5 * r * (1.0 + MEMBERSHIP_SLACK) {
            return Err(SpanFailure::OutsideBall { index: i });
        }
    }
    let base = points[0].clone();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(points.len() - 1);
    for (i, p) in points.iter().enumerate().skip(1) {
        let mut w: Vec<f64> = p.iter().zip(&base).map(|(a, b)| a - b).collect();
        // two Gram-Schmidt passes keep the basis orthonormal to roundoff
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&w, e);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= c * ei;
                }
            }
        }
        let d = norm(&w);
        if d < tau * r {
            return Err(SpanFailure::Degenerate { index: i, distance: d });
        }
        basis.push(w.iter().map(|v| v / d).collect());
    }
    Ok(AffinePlane { base, basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryParams {
    pub tau: f64,
    pub eps: f64,
    /// The tip lattice has spacing r / candidate_stride.
    pub candidate_stride: usize,
    pub exp: DensityExponent,
}

impl SymmetryParams {
    pub fn new(eps: f64) -> Self {
        SymmetryParams { tau: 0.01, eps, candidate_stride: 4, exp: DensityExponent::default() }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_exp(mut self, p: f64) -> Self {
        self.exp = DensityExponent::new(p);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.candidate_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 0.25) {
            return Err(Error::input(format!("tau must lie in (0, 1/4], got {}", self.tau)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::input(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.candidate_stride == 0 {
            return Err(Error::input("candidate stride must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCertificate {
    pub k: usize,
    pub eps: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub plane: AffinePlane,
    pub tips: Vec<ConeTipCertificate>,
    pub tau: f64,
    pub p: f64,
}

/// Deterministic tip candidates: lattice points x + (r/stride) z in B_{r/2}(x)
/// ordered by (|z|², z lexicographic), followed by support points of μ in
/// B_{r/2}(x) ordered by distance to x, then lexicographically. The lattice
/// order depends only on integer offsets, so it is unchanged by rescaling.
pub fn tip_candidates(mu: &dyn Measure, x: &[f64], r: f64, stride: usize) -> Vec<Vec<f64>> {
    let step = r / stride as f64;
    let mut out: Vec<Vec<f64>> = lattice_offsets(x.len(), stride)
        .iter()
        .map(|z| x.iter().zip(z).map(|(a, b)| a + step * *b as f64).collect())
        .collect();
    let mut support = mu.support_points_in_ball(x, 0.5 * r);
    support.sort_by(|a, b| dist2(a, x).total_cmp(&dist2(b, x)).then_with(|| lex_cmp(a, b)));
    support.dedup();
    out.extend(support);
    out
}

type OffsetTable = HashMap<(usize, usize), Arc<Vec<Vec<i64>>>>;

/// Integer offsets z with |z| ≤ stride/2, sorted by (|z|², z). Memoized per
/// (n, stride) since the enumeration dominates small searches.
fn lattice_offsets(n: usize, stride: usize) -> Arc<Vec<Vec<i64>>> {
    static TABLE: OnceLock<Mutex<OffsetTable>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = table.lock().expect("offset table").get(&(n, stride)) {
        return v.clone();
    }
    let half = (stride / 2) as i64;
    let lim2 = (stride * stride) as i64;
    let mut offsets = Vec::new();
    let mut z = vec![-half; n];
    loop {
        let zz: i64 = z.iter().map(|v| v * v).sum();
        // |z| ≤ stride/2  ⇔  4|z|² ≤ stride²
        if 4 * zz <= lim2 {
            offsets.push((zz, z.clone()));
        }
        let mut i = 0;
        while i < n {
            z[i] += 1;
            if z[i] <= half {
                break;
            }
            z[i] = -half;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    offsets.sort();
    let v = Arc::new(offsets.into_iter().map(|(_, z)| z).collect::<Vec<_>>());
    table.lock().expect("offset table").insert((n, stride), v.clone());
    v
}

/// Searches for a (k, ε)-symmetry certificate in B_r(x).
pub fn detect_symmetry(
    mu: &dyn Measure,
    x: &[f64],
    r: f64,
    k: usize,
    params: &SymmetryParams,
) -> Result<Option<SymmetryCertificate>> {
    params.validate()?;
    let n = mu.dim();
    if x.len() != n {
        return Err(Error::input("ball center has the wrong dimension"));
    }
    check_finite(x, "ball center")?;
    check_radius(r, "ball radius")?;
    if k > n {
        return Err(Error::input(format!("symmetry dimension {k} exceeds n = {n}")));
    }
    check_scale(mu, 2.0 * params.eps * r)?;
    let candidates = tip_candidates(mu, x, r, params.candidate_stride);
    // Tips are tested in candidate order, a chunk at a time. The greedy chain
    // from the first valid tip only looks at a prefix, so when it completes
    // with an admissible plane it agrees with the exhaustive search below.
    let mut tests: Vec<ConeTipCertificate> = Vec::with_capacity(candidates.len());
    let mut found = None;
    for chunk in candidates.chunks(LAZY_CHUNK) {
        let part = chunk
            .par_iter()
            .map(|c| cone_tip_test(mu, c, r, params.eps, params.exp))
            .collect::<Result<Vec<_>>>()?;
        tests.extend(part);
        let valid: Vec<&ConeTipCertificate> = tests.iter().filter(|t| t.valid).collect();
        if let Some(hit) = first_chain(&valid, x, r, k, params.tau) {
            found = Some(hit);
            break;
        }
    }
    let found = match found {
        Some(hit) => Some(hit),
        None => {
            let rest = candidates[tests.len()..]
                .par_iter()
                .map(|c| cone_tip_test(mu, c, r, params.eps, params.exp))
                .collect::<Result<Vec<_>>>()?;
            tests.extend(rest);
            let valid: Vec<&ConeTipCertificate> = tests.iter().filter(|t| t.valid).collect();
            select_tips(&valid, x, r, k, params.tau)
        }
    };
    Ok(found.map(|(plane, tips)| SymmetryCertificate {
        k,
        eps: params.eps,
        center: x.to_vec(),
        radius: r,
        plane,
        tips,
        tau: params.tau,
        p: params.exp.p,
    }))
}

const LAZY_CHUNK: usize = 16;

type Selection = (AffinePlane, Vec<ConeTipCertificate>);

/// Greedy chain from the first valid tip, when it completes with a plane
/// meeting B_{r/10}(x). Otherwise the exhaustive search decides.
fn first_chain(valid: &[&ConeTipCertificate], x: &[f64], r: f64, k: usize, tau: f64) -> Option<Selection> {
    let first = valid.first()?;
    let mut chosen = vec![0];
    let mut pts = vec![first.x0.clone()];
    for (j, t) in valid.iter().enumerate().skip(1) {
        if chosen.len() == k + 1 {
            break;
        }
        pts.push(t.x0.clone());
        if effective_span(&pts, x, r, tau).is_ok() {
            chosen.push(j);
        } else {
            pts.pop();
        }
    }
    if chosen.len() < k + 1 {
        return None;
    }
    let plane = effective_span(&pts, x, r, tau).ok()?;
    if plane.distance(x) <= r / 10.0 {
        Some((plane, chosen.iter().map(|&i| valid[i].clone()).collect()))
    } else {
        None
    }
}

/// For each valid tip as a starting point (in candidate order), greedily
/// extends by the next tips that keep the effective spanning margin, and
/// accepts the first plane meeting B_{r/10}(x).
fn select_tips(
    valid: &[&ConeTipCertificate],
    x: &[f64],
    r: f64,
    k: usize,
    tau: f64,
) -> Option<Selection> {
    for start in 0..valid.len() {
        let mut chosen = vec![start];
        let mut pts = vec![valid[start].x0.clone()];
        for (j, t) in valid.iter().enumerate() {
            if chosen.len() == k + 1 {
                break;
            }
            if j == start {
                continue;
            }
            pts.push(t.x0.clone());
            if effective_span(&pts, x, r, tau).is_ok() {
                chosen.push(j);
            } else {
                pts.pop();
            }
        }
        if chosen.len() < k + 1 {
            // later starts only see a subset of the same candidates
            return None;
        }
        let plane = effective_span(&pts, x, r, tau).ok()?;
        if plane.distance(x) <= r / 10.0 {
            return Some((plane, chosen.iter().map(|&i| valid[i].clone()).collect()));
        }
    }
    None
}

/// Recomputes every drop and spanning margin from μ; returns the list of
/// problems (empty when the certificate is sound).
pub fn certificate_problems(mu: &dyn Measure, cert: &SymmetryCertificate) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let exp = DensityExponent::new(cert.p);
    if cert.tips.len() != cert.k + 1 {
        problems.push(format!("expected {} tips, found {}", cert.k + 1, cert.tips.len()));
        return Ok(problems);
    }
    for (i, t) in cert.tips.iter().enumerate() {
        let fresh = cone_tip_test(mu, &t.x0, cert.radius, cert.eps, exp)?;
        if !fresh.valid {
            problems.push(format!("tip {i} fails the cone tip test (drop {})", fresh.drop));
        }
        if (fresh.drop - t.drop).abs() > 1e-10 * (1.0 + t.theta_outer.abs()) {
            problems.push(format!("tip {i} recorded drop {} differs from recomputed {}", t.drop, fresh.drop));
        }
    }
    let pts: Vec<Vec<f64>> = cert.tips.iter().map(|t| t.x0.clone()).collect();
    match effective_span(&pts, &cert.center, cert.radius, cert.tau) {
        Ok(plane) => {
            if plane.distance(&cert.center) > cert.radius / 10.0 {
                problems.push("plane misses B_{r/10}(x)".to_string());
            }
            if plane_angle(&plane.basis, &cert.plane.basis) > 1e-9 || cert.plane.distance(&plane.base) > 1e-9 * cert.radius {
                problems.push("recorded plane differs from the span of the tips".to_string());
            }
        }
        Err(f) => problems.push(format!("tips do not effectively span: {f:?}")),
    }
    Ok(problems)
}

pub fn verify_certificate(mu: &dyn Measure, cert: &SymmetryCertificate) -> Result<bool> {
    Ok(certificate_problems(mu, cert)?.is_empty())
}

/// Largest principal angle between span(a) and span(b), as arcsin of the
/// spectral norm of (I - P_b) A. Spans must have equal dimension.
pub fn plane_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.is_empty() {
        return 0.0;
    }
    let n = a[0].len();
    let mut m = DMatrix::<f64>::zeros(n, a.len());
    for (j, v) in a.iter().enumerate() {
        let mut w = v.clone();
        for e in b {
            let c = dot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        for i in 0..n {
            m[(i, j)] = w[i];
        }
    }
    let s = m.singular_values().iter().fold(0.0f64, |acc, v| acc.max(*v));
    s.min(1.0).asin()
}

/// Deterministic points in the unit k-ball from a radical-inverse sequence;
/// the first point is the origin.
pub(crate) fn ball_samples(k: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let radical = |mut i: u64, b: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    let mut out = vec![vec![0.0; k]];
    if k == 0 {
        return out;
    }
    let mut i = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..k).map(|d| 2.0 * radical(i, PRIMES[d % PRIMES.len()]) - 1.0).collect();
        if dot(&p, &p) <= 1.0 {
            out.push(p);
        }
        i += 1;
    }
    out
}

/// Checks that θ(y, s) is constant (relative variation ≤ tol) for sampled y
/// on plane ∩ B_r(x) and dyadic s = 2r, r, r/2, ... (eight scales, stopping
/// above twice the resolution).
#[allow(clippy::too_many_arguments)]
pub fn strict_symmetry_check(
    mu: &dyn Measure,
    x: &[f64],
    r: f64,
    plane: &AffinePlane,
    samples: usize,
    tol: f64,
    exp: DensityExponent,
) -> Result<bool> {
    check_radius(r, "ball radius")?;
    let d = plane.distance(x);
    if d > r / 10.0 {
        return Err(Error::input("plane does not meet B_{r/10}(x)"));
    }
    let k = plane.basis.len();
    // foot of x on the plane
    let mut foot = plane.base.clone();
    let w: Vec<f64> = x.iter().zip(&plane.base).map(|(a, b)| a - b).collect();
    for e in &plane.basis {
        let c = dot(&w, e);
        for (fi, ei) in foot.iter_mut().zip(e) {
            *fi += c * ei;
        }
    }
    let reach = 0.9 * (r * r - d * d).sqrt();
    let res = mu.resolution();
    let scales: Vec<f64> = (0..8).map(|j| 2.0 * r * 0.5f64.powi(j)).filter(|s| res == 0.0 || *s >= 2.0 * res).collect();
    if scales.is_empty() {
        return Err(Error::resolution("no scale above the measure resolution"));
    }
    let pts: Vec<Vec<f64>> = ball_samples(k, samples.max(1))
        .into_iter()
        .map(|c| {
            let mut y = foot.clone();
            for (ci, e) in c.iter().zip(&plane.basis) {
                for (yi, ei) in y.iter_mut().zip(e) {
                    *yi += reach * ci * ei;
                }
            }
            y
        })
        .collect();
    let ok: Vec<bool> = pts
        .par_iter()
        .map(|y| -> Result<bool> {
            let vals = scales.iter().map(|s| theta(mu, y, *s, exp)).collect::<Result<Vec<f64>>>()?;
            Ok(relative_spread(&vals) <= tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ok.into_iter().all(|b| b))
}

fn relative_spread(vals: &[f64]) -> f64 {
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = hi.abs().max(lo.abs());
    if scale == 0.0 {
        0.0
    } else {
        (hi - lo) / scale
    }
}

/// Compares μ(B_ρ(y)) with μ(B_ρ(y + v)) for each shift v; probes are the
/// plane base, base ± e_i/2, and up to 64 support points of μ in B_2(base),
/// with ρ = 1/4. True iff the largest relative discrepancy is ≤ tol.
pub fn translation_symmetry_check(mu: &dyn Measure, plane: &AffinePlane, shifts: &[Vec<f64>], tol: f64) -> Result<bool> {
    let n = mu.dim();
    let mut probes = vec![plane.base.clone()];
    for i in 0..n {
        for s in [-0.5, 0.5] {
            let mut p = plane.base.clone();
            p[i] += s;
            probes.push(p);
        }
    }
    let mut support = mu.support_points_in_ball(&plane.base, 2.0);
    support.sort_by(|a, b| lex_cmp(a, b));
    support.truncate(64);
    probes.extend(support);
    translation_symmetry_check_with(mu, plane, shifts, &probes, 0.25, tol)
}

pub fn translation_symmetry_check_with(
    mu: &dyn Measure,
    plane: &AffinePlane,
    shifts: &[Vec<f64>],
    probes: &[Vec<f64>],
    radius: f64,
    tol: f64,
) -> Result<bool> {
    check_radius(radius, "probe radius")?;
    for v in shifts {
        if v.len() != mu.dim() {
            return Err(Error::input("shift has the wrong dimension"));
        }
        let along: f64 = plane.basis.iter().map(|e| dot(v, e).powi(2)).sum();
        let off = (dot(v, v) - along).max(0.0).sqrt();
        if off > 1e-12 * (1.0 + norm(v)) {
            return Err(Error::input("translation shifts must lie in the plane"));
        }
    }
    let mut worst: f64 = 0.0;
    for y in probes {
        let a = mu.mass_in_ball(y, radius)?;
        for v in shifts {
            let z: Vec<f64> = y.iter().zip(v).map(|(p, q)| p + q).collect();
            let b = mu.mass_in_ball(&z, radius)?;
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    Ok(worst <= tol)
}

/// Result of the pigeonhole scale scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub r_star: f64,
    pub certificate: SymmetryCertificate,
    /// Scales at which the drop condition held but no certificate was found.
    pub attempts: Vec<f64>,
}

/// Scans r* = r0, r0/2, ... down to max(r0 (ε₀/10)^{10Λ/ε₀}, resolution, 2^-40).
/// At every r* with |θ(y,10r*) - θ(y,ε₀r*/10)| < ε₀/10, tries a
/// (k+1, ε₀)-certificate in B_{r*}(y) and returns the first one found.
pub fn dimension_reduction_scan(
    mu: &dyn Measure,
    y: &[f64],
    eps0: f64,
    r0: f64,
    k: usize,
    lambda: f64,
    params: &SymmetryParams,
) -> Result<Option<ScanResult>> {
    check_radius(r0, "initial scan scale")?;
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::input("eps0 must lie in (0, 1)"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::input("energy bound must be finite and nonnegative"));
    }
    let exponent = 10.0 * lambda / eps0;
    let formula = r0 * (eps0 / 10.0).powf(exponent);
    let res = mu.resolution();
    // the (k+1)-test at r* needs 2 ε₀ r* ≥ 2 res
    let clip = (res / eps0).max(2f64.powi(-40));
    let floor = formula.max(clip);
    let p = params.with_eps(eps0);
    let mut attempts = Vec::new();
    let mut r = r0;
    while r >= floor * (1.0 - 1e-12) {
        let outer = theta(mu, y, 10.0 * r, p.exp)?;
        let inner = theta(mu, y, eps0 * r / 10.0, p.exp)?;
        if (outer - inner).abs() < eps0 / 10.0 {
            if let Some(cert) = detect_symmetry(mu, y, r, k + 1, &p)? {
                return Ok(Some(ScanResult { r_star: r, certificate: cert, attempts }));
            }
            attempts.push(r);
        }
        r *= 0.5;
    }
    if formula < clip {
        return Err(Error::resolution(format!(
            "scan reached the clipped floor {floor:.3e} without a certificate (nominal floor {formula:.3e})"
        )));
    }
    Ok(None)
}
