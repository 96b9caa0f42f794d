//! Second moments, Jones β₂ numbers D^k_μ(x,r), a brute-force plane-search
//! oracle, and the L²-best-approximation evaluator for curvature fields.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_radius, Error, Result};
use crate::field::{check_ball, contract_norm2, radial_defect_integral, ball_cells, CurvatureField, FieldEnergyMeasure, QuadSpec};
use crate::measure::{theta, AffinePlane, DensityExponent, Measure, WeightedPointMeasure};
use crate::numeric::{dot, norm, KahanSum};

/// Largest atom count accepted by [`jones_beta_bruteforce`].
pub const ORACLE_MAX_ATOMS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentSummary {
    pub center: Vec<f64>,
    pub mass: f64,
    /// Row-major n×n matrix Σ w (y - c)(y - c)^T.
    pub t: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

fn centered_atoms(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> Result<(Vec<usize>, Vec<f64>, f64)> {
    let n = mu.dim();
    if x.len() != n {
        return Err(Error::input("ball center has the wrong dimension"));
    }
    check_finite(x, "ball center")?;
    check_radius(r, "ball radius")?;
    let ids = mu.atoms_in_ball(x, r);
    let mut mass = KahanSum::new();
    let mut first = vec![KahanSum::new(); n];
    for &i in &ids {
        let w = mu.weight(i);
        mass.add(w);
        for (s, v) in first.iter_mut().zip(mu.position(i)) {
            s.add(w * v);
        }
    }
    let m = mass.value();
    if m <= 0.0 {
        return Err(Error::EmptyMeasure(format!("no mass in B_{r}(x)")));
    }
    let center = first.iter().map(|s| s.value() / m).collect();
    Ok((ids, center, m))
}

/// Mass-centered second moment of μ restricted to the closed ball B_r(x).
pub fn second_moment(mu: &WeightedPointMeasure, x: &[f64], r: f64) -> Result<SecondMomentSummary> {
    let n = mu.dim();
    let (ids, center, mass) = centered_atoms(mu, x, r)?;
    let mut acc = vec![KahanSum::new(); n * n];
    let mut y = vec![0.0; n];
    for &i in &ids {
        let w = mu.weight(i);
        for (yj, (p, c)) in y.iter_mut().zip(mu.position(i).iter().zip(&center)) {
            *yj = p - c;
        }
        for a in 0..n {
            for b in a..n {
                acc[a * n + b].add(w * y[a] * y[b]);
            }
        }
    }
    let mut t = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = acc[a * n + b].value();
            t[a * n + b] = v;
            t[b * n + a] = v;
        }
    }
    let (eigenvalues, eigenvectors) = sorted_eigen(&t, n)?;
    Ok(SecondMomentSummary { center, mass, t, eigenvalues, eigenvectors })
}

/// Symmetric eigendecomposition, sorted by descending eigenvalue. Each
/// eigenvector is signed so its largest-magnitude component (first on ties)
/// is positive; equal eigenvalues are ordered by lexicographically larger
/// eigenvector first.
fn sorted_eigen(t: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = DMatrix::from_row_slice(n, n, t);
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            let lead = v.iter().enumerate().fold(0usize, |best, (i, c)| if c.abs() > v[best].abs() * (1.0 + 1e-12) { i } else { best });
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            (eig.eigenvalues[j], v)
        })
        .collect();
    let tie = 1e-14 * (scale + f64::MIN_POSITIVE);
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= tie {
            crate::numeric::lex_cmp(&b.1, &a.1)
        } else {
            b.0.total_cmp(&a.0)
        }
    });
    for (lam, v) in &pairs {
        let mut res = 0.0f64;
        for i in 0..n {
            let tv: f64 = (0..n).map(|j| t[i * n + j] * v[j]).sum();
            res += (tv - lam * v[i]).powi(2);
        }
        if res.sqrt() > 1e-10 * (scale + 1.0) {
            return Err(Error::Internal(format!("eigen residual {} too large", res.sqrt())));
        }
    }
    Ok(pairs.into_iter().unzip())
}

/// Mass gate below which D^k is reported as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// μ(B_r(x)) < g · r^k gates the ball.
    Practical(f64),
    /// g = (1000n)^{-7n²}, compared in log space.
    Exact,
}

impl Default for Gate {
    fn default() -> Self {
        Gate::Practical(1e-3)
    }
}

impl Gate {
    /// ln of the gate constant for ambient dimension n.
    pub fn ln_constant(&self, n: usize) -> f64 {
        match *self {
            Gate::Practical(g) => g.ln(),
            Gate::Exact => -7.0 * (n * n) as f64 * (1000.0 * n as f64).ln(),
        }
    }

    pub fn is_gated(&self, n: usize, mass: f64, r: f64, k: usize) -> bool {
        if mass <= 0.0 {
            return true;
        }
        match *self {
            Gate::Practical(g) => mass < g * r.powi(k as i32),
            Gate::Exact => mass.ln() < self.ln_constant(n) + k as f64 * r.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JonesResult {
    pub value: f64,
    pub gated: bool,
    pub best_plane: Option<AffinePlane>,
    pub mass: f64,
    pub eigenvalues: Vec<f64>,
}

/// D^k_μ(x,r) = r^{-(k+2)} inf_L ∫_{B_r(x)} d²(y,L) dμ = r^{-(k+2)} Σ_{j>k} λ_j.
pub fn jones_beta(mu: &WeightedPointMeasure, x: &[f64], r: f64, k: usize, gate: Gate) -> Result<JonesResult> {
    let n = mu.dim();
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}, n = {n}")));
    }
    check_radius(r, "ball radius")?;
    let mass = mu.mass_in_ball(x, r)?;
    if gate.is_gated(n, mass, r, k) {
        return Ok(JonesResult { value: 0.0, gated: true, best_plane: None, mass, eigenvalues: Vec::new() });
    }
    let sm = second_moment(mu, x, r)?;
    let tail: f64 = sm.eigenvalues[k..].iter().copied().collect::<KahanSum>().value().max(0.0);
    let value = tail * r.powi(-(k as i32 + 2));
    let plane = AffinePlane { base: sm.center.clone(), basis: sm.eigenvectors[..k].to_vec() };
    Ok(JonesResult { value, gated: false, best_plane: Some(plane), mass, eigenvalues: sm.eigenvalues })
}

/// Independent plane search: 256 random orthonormal frames through the mass
/// center, the best refined by subspace iteration on directly summed moments.
/// The residual ∫ d²(y,L) dμ is always recomputed atom by atom.
pub fn jones_beta_bruteforce(mu: &WeightedPointMeasure, x: &[f64], r: f64, k: usize) -> Result<f64> {
    let n = mu.dim();
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}, n = {n}")));
    }
    let ids = mu.atoms_in_ball(x, r);
    if ids.len() > ORACLE_MAX_ATOMS {
        return Err(Error::OracleScale(format!("{} atoms exceed the oracle limit {ORACLE_MAX_ATOMS}", ids.len())));
    }
    if ids.is_empty() {
        return Ok(0.0);
    }
    let (_, center, _) = centered_atoms(mu, x, r)?;
    let ys: Vec<(f64, Vec<f64>)> = ids
        .iter()
        .map(|&i| (mu.weight(i), mu.position(i).iter().zip(&center).map(|(a, c)| a - c).collect()))
        .collect();
    let residual = |frame: &[Vec<f64>]| -> f64 {
        let mut s = KahanSum::new();
        for (w, y) in &ys {
            let along: f64 = frame.iter().map(|e| dot(y, e).powi(2)).sum();
            s.add(w * (dot(y, y) - along).max(0.0));
        }
        s.value()
    };
    let scale = r.powi(-(k as i32 + 2));
    if k == 0 {
        return Ok(residual(&[]) * scale);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a6f6e6573);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..256 {
        let raw: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        if let Some(frame) = orthonormalize(raw) {
            let v = residual(&frame);
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, frame));
            }
        }
    }
    let (mut value, mut frame) = best.ok_or_else(|| Error::Internal("no frame sampled".into()))?;
    // refinement: E ← orth(M E) with M = Σ w y y^T accumulated per atom
    let mut stall = 0;
    for _ in 0..20000 {
        let next: Vec<Vec<f64>> = frame
            .iter()
            .map(|e| {
                let mut out = vec![0.0; n];
                for (w, y) in &ys {
                    let c = w * dot(y, e);
                    for (o, yi) in out.iter_mut().zip(y) {
                        *o += c * yi;
                    }
                }
                out
            })
            .collect();
        let Some(next) = orthonormalize(next) else { break };
        let v = residual(&next);
        if v < value {
            let gain = value - v;
            value = v;
            frame = next;
            stall = if gain <= 1e-17 * (1.0 + value) { stall + 1 } else { 0 };
        } else {
            stall += 1;
            frame = next;
        }
        if stall >= 50 {
            break;
        }
    }
    Ok(value * scale)
}

fn orthonormalize(mut vs: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let c = dot(&vs[i], &vs[j]);
                let vj = vs[j].clone();
                for (a, b) in vs[i].iter_mut().zip(&vj) {
                    *a -= c * b;
                }
            }
        }
        let l = norm(&vs[i]);
        if l < 1e-300 {
            return None;
        }
        vs[i].iter_mut().for_each(|a| *a /= l);
    }
    Some(vs)
}

/// Terms of the L²-best-approximation inequality for μ in B_r(p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Bound {
    pub k: usize,
    pub r: f64,
    pub eps: f64,
    pub eps1: f64,
    pub lhs: f64,
    pub rhs_w: f64,
    pub rhs_defect: f64,
    /// lhs / (rhs_w + rhs_defect); 0 when lhs vanishes, ∞ when only the
    /// denominator does.
    pub ratio: f64,
}

/// lhs = r^{-2-k} inf_L ∫ d²(x,L) dμ, rhs_W = r^{-k} ∫ W_r dμ with
/// W_r(x) = θ(x,8r) - θ(x,ε₁r) for the energy measure of F, and
/// rhs_defect = r^{-k} ∫ r^{2-n} ∫_{B_{ε₁r}(x)} |ι_{x-y}F(y)|² dV(y) dμ(x).
#[allow(clippy::too_many_arguments)]
pub fn l2_bound_check(
    field: Arc<dyn CurvatureField>,
    mu: &WeightedPointMeasure,
    p: &[f64],
    r: f64,
    k: usize,
    eps: f64,
    eps1: f64,
    exp: DensityExponent,
    quad: &QuadSpec,
) -> Result<L2Bound> {
    let n = field.dim();
    if mu.dim() != n {
        return Err(Error::input("measure and field dimensions differ"));
    }
    if k >= n {
        return Err(Error::input(format!("need k <= n - 1, got k = {k}")));
    }
    check_ball(field.as_ref(), p, 8.0 * r)?;
    if !(eps1 > 0.0 && eps1 < 8.0) {
        return Err(Error::input("eps1 must lie in (0, 8)"));
    }
    let inside = mu.atoms_in_ball(p, r);
    let atoms: Vec<usize> = (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    if inside.len() < atoms.len() {
        return Err(Error::input("measure must be supported in B_r(p)"));
    }
    let lhs = if mu.total_mass() > 0.0 {
        let sm = second_moment(mu, p, r)?;
        sm.eigenvalues[k..].iter().copied().collect::<KahanSum>().value().max(0.0) * r.powi(-(k as i32 + 2))
    } else {
        0.0
    };
    let energy = FieldEnergyMeasure::new(field.clone(), *quad);
    let mut w_sum = KahanSum::new();
    let mut d_sum = KahanSum::new();
    for &i in &atoms {
        let x = mu.position(i);
        let w = mu.weight(i);
        let drop = theta(&energy, x, 8.0 * r, exp)? - theta(&energy, x, eps1 * r, exp)?;
        w_sum.add(w * drop);
        let defect = radial_defect_integral(field.as_ref(), x, x, eps1 * r, quad)?;
        d_sum.add(w * r.powi(2 - n as i32) * defect);
    }
    let rk = r.powi(-(k as i32));
    let rhs_w = rk * w_sum.value();
    let rhs_defect = rk * d_sum.value();
    let denom = rhs_w + rhs_defect;
    let ratio = if lhs <= 1e-14 {
        0.0
    } else if denom <= 0.0 {
        f64::INFINITY
    } else {
        lhs / denom
    };
    Ok(L2Bound { k, r, eps, eps1, lhs, rhs_w, rhs_defect, ratio })
}

/// Σ_i ∫_{B_{4r}(p)} |ι_{ν_i} F|² dV for an orthonormal frame ν.
pub fn energy_lower_bound(field: &dyn CurvatureField, frame: &[Vec<f64>], p: &[f64], r: f64, quad: &QuadSpec) -> Result<f64> {
    let n = field.dim();
    let m = field.lie_dim();
    AffinePlane::new(p.to_vec(), frame.to_vec())?;
    check_ball(field, p, 4.0 * r)?;
    let h = quad.spacing_for(4.0 * r);
    let total = ball_cells(
        p,
        4.0 * r,
        h,
        || (KahanSum::new(), vec![0.0; m * n * n]),
        |(acc, buf), x, _, _| {
            field.sample_into(x, buf);
            for v in frame {
                acc.add(contract_norm2(buf, n, m, v));
            }
        },
        |a, b| a.0.merge(&b.0),
    );
    Ok(total.0.value() * h.powi(n as i32))
}
