use serde::Serialize;

use super::{
    ball_cells, check_ball, contract_dot, contract_norm2, norm2, require_yang_mills, Bins, CurvatureField,
    FieldEnergyMeasure, QuadSpec, VectorField,
};
use crate::error::{Error, Result};
use crate::measure::{theta, DensityExponent};
use crate::numeric::{dot, KahanSum};

/// Both sides of an integral identity and their difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub sigma: f64,
    pub rho: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Individual right-hand terms (radial term, ψ-gradient correction).
    pub rhs_terms: [f64; 2],
    /// |result(h) - result(h/2)| when a refinement run was requested.
    pub error_estimate: Option<f64>,
    pub h: f64,
    pub excised_cells: u64,
}

/// A function φ on the unit sphere, evaluated through an extension to R^n.
pub trait SphereFunction: Send + Sync {
    fn value(&self, u: &[f64]) -> f64;
    /// Gradient of the extension at u; only its tangential part is used.
    fn gradient(&self, u: &[f64]) -> Vec<f64>;
}

/// φ ≡ c.
pub struct ConstantPhi(pub f64);

impl SphereFunction for ConstantPhi {
    fn value(&self, _u: &[f64]) -> f64 {
        self.0
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        vec![0.0; u.len()]
    }
}

/// φ(u) = u_axis.
pub struct CoordinatePhi(pub usize);

impl SphereFunction for CoordinatePhi {
    fn value(&self, u: &[f64]) -> f64 {
        u[self.0]
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; u.len()];
        g[self.0] = 1.0;
        g
    }
}

/// ∫ ( |F|² div X - 4 Σ_{ij} ⟨F(∇_{e_i}X, e_j), F(e_i, e_j)⟩ ) dV over supp X.
///
/// With J_{ki} = ∂X_k/∂x_i and G_{ki} = Σ_a Σ_j F^a_{kj} F^a_{ij}, the
/// integrand is |F|² tr J - 4 Σ_{ki} J_{ki} G_{ki}.
pub fn stationarity_residual(field: &dyn CurvatureField, x: &dyn VectorField, quad: &QuadSpec) -> Result<f64> {
    let n = field.dim();
    let m = field.lie_dim();
    if x.dim() != n {
        return Err(Error::input("vector field dimension does not match the curvature field"));
    }
    let (c, radius) = x.support();
    check_ball(field, &c, radius)?;
    let h = quad.spacing_for(radius);
    let sum = ball_cells(
        &c,
        radius,
        h,
        || (KahanSum::new(), vec![0.0; m * n * n]),
        |(acc, buf), pt, _, _| {
            let jac = x.jacobian(pt);
            if jac.iter().all(|v| *v == 0.0) {
                return;
            }
            field.sample_into(pt, buf);
            let f2 = norm2(buf);
            let mut div = 0.0;
            for k in 0..n {
                div += jac[k * n + k];
            }
            let mut stress = 0.0;
            for a in 0..m {
                let blk = &buf[a * n * n..(a + 1) * n * n];
                for k in 0..n {
                    for i in 0..n {
                        let jki = jac[k * n + i];
                        if jki == 0.0 {
                            continue;
                        }
                        let mut g = 0.0;
                        for j in 0..n {
                            g += blk[k * n + j] * blk[i * n + j];
                        }
                        stress += jki * g;
                    }
                }
            }
            acc.add(f2 * div - 4.0 * stress);
        },
        |a, b| a.0.merge(&b.0),
    );
    Ok(sum.0.value() * h.powi(n as i32))
}

fn validate_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::input("no (sigma, rho) pairs given"));
    }
    for &(s, r) in pairs {
        if !(s.is_finite() && r.is_finite() && s > 0.0 && s < r) {
            return Err(Error::input(format!("need 0 < sigma < rho, got sigma = {s}, rho = {r}")));
        }
    }
    Ok(())
}

struct MonoPass {
    breaks: Vec<f64>,
    mass: Vec<f64>,
    weighted: Vec<f64>,
    excised: u64,
}

/// One quadrature sweep over B_{max ρ}(p), binning |F|² and the radial
/// kernel term by the radii in `breaks` (sorted, closed on the right).
fn mono_pass(field: &dyn CurvatureField, p: &[f64], breaks: Vec<f64>, quad: &QuadSpec) -> MonoPass {
    let n = field.dim();
    let m = field.lie_dim();
    let h = quad.h;
    let rmax = *breaks.last().expect("nonempty breaks");
    let cut = if n > 4 { quad.excision * h } else { 0.0 };
    let nb = breaks.len();
    let bins = ball_cells(
        p,
        rmax,
        h,
        || (Bins::new(2 * nb), vec![0.0; m * n * n], vec![0.0; n]),
        |(acc, buf, u), x, y, d2| {
            let s = d2.sqrt();
            let j = breaks.partition_point(|b| *b < s);
            if j >= nb {
                return;
            }
            field.sample_into(x, buf);
            acc.sums[j].add(norm2(buf));
            if s < cut {
                acc.count += 1;
                return;
            }
            for (ui, yi) in u.iter_mut().zip(y) {
                *ui = yi / s;
            }
            let kernel = if n == 4 { 4.0 } else { 4.0 * s.powi(4 - n as i32) };
            acc.sums[nb + j].add(kernel * contract_norm2(buf, n, m, u));
        },
        |a, b| a.0.merge(b.0),
    )
    .0;
    let vol = h.powi(n as i32);
    let all = bins.values(vol);
    MonoPass { breaks, mass: all[..nb].to_vec(), weighted: all[nb..].to_vec(), excised: bins.count }
}

impl MonoPass {
    fn ball_mass(&self, r: f64) -> f64 {
        let upto = self.breaks.partition_point(|b| *b <= r);
        self.mass[..upto].iter().copied().collect::<KahanSum>().value()
    }

    fn annulus_weighted(&self, sigma: f64, rho: f64) -> f64 {
        let lo = self.breaks.partition_point(|b| *b <= sigma);
        let hi = self.breaks.partition_point(|b| *b <= rho);
        self.weighted[lo..hi].iter().copied().collect::<KahanSum>().value()
    }

    fn check(&self, n: usize, sigma: f64, rho: f64, h: f64) -> IdentityCheck {
        let e = 4.0 - n as f64;
        let lhs = rho.powf(e) * self.ball_mass(rho) - sigma.powf(e) * self.ball_mass(sigma);
        let rhs = self.annulus_weighted(sigma, rho);
        IdentityCheck {
            sigma,
            rho,
            lhs,
            rhs,
            gap: lhs - rhs,
            rhs_terms: [rhs, 0.0],
            error_estimate: None,
            h,
            excised_cells: self.excised,
        }
    }
}

/// Monotonicity identity for many (σ, ρ) pairs from a single sweep:
/// lhs = θ(p,ρ) - θ(p,σ), rhs = ∫_{A_{σ,ρ}(p)} 4|x-p|^{4-n} |ι_{∂r} F|².
pub fn monotonicity_check_many(
    field: &dyn CurvatureField,
    p: &[f64],
    pairs: &[(f64, f64)],
    exp: DensityExponent,
    quad: &QuadSpec,
    estimate_error: bool,
) -> Result<Vec<IdentityCheck>> {
    require_yang_mills(exp)?;
    validate_pairs(pairs)?;
    let mut breaks: Vec<f64> = pairs.iter().flat_map(|&(s, r)| [s, r]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    check_ball(field, p, *breaks.last().expect("nonempty"))?;
    let n = field.dim();
    let pass = mono_pass(field, p, breaks.clone(), quad);
    let mut out: Vec<IdentityCheck> = pairs.iter().map(|&(s, r)| pass.check(n, s, r, quad.h)).collect();
    if estimate_error {
        let fine_quad = quad.refined();
        let fine = mono_pass(field, p, breaks, &fine_quad);
        for c in out.iter_mut() {
            let f = fine.check(n, c.sigma, c.rho, fine_quad.h);
            c.error_estimate = Some((c.lhs - f.lhs).abs().max((c.rhs - f.rhs).abs()));
        }
    }
    Ok(out)
}

/// Single-pair monotonicity check with an h vs h/2 error estimate.
pub fn monotonicity_check(
    field: &dyn CurvatureField,
    p: &[f64],
    sigma: f64,
    rho: f64,
    exp: DensityExponent,
    quad: &QuadSpec,
) -> Result<IdentityCheck> {
    Ok(monotonicity_check_many(field, p, &[(sigma, rho)], exp, quad, true)?.remove(0))
}

/// ψ-weighted monotonicity with ψ(x) = φ((x-p)/|x-p|).
///
/// The τ-integral of the correction term is exchanged with the volume
/// integral, giving each cell at radius s the weight ∫_{max(σ,s)}^ρ 4τ^{3-n} dτ,
/// and |x-p| ⟨ι_{∂r}F, ι_{∇ψ}F⟩ = ⟨ι_u F, ι_g F⟩ with g the tangential
/// gradient of φ at u.
pub fn psi_monotonicity_check(
    field: &dyn CurvatureField,
    p: &[f64],
    sigma: f64,
    rho: f64,
    phi: &dyn SphereFunction,
    exp: DensityExponent,
    quad: &QuadSpec,
) -> Result<IdentityCheck> {
    require_yang_mills(exp)?;
    validate_pairs(&[(sigma, rho)])?;
    check_ball(field, p, rho)?;
    let coarse = psi_pass(field, p, sigma, rho, phi, quad);
    let fine = psi_pass(field, p, sigma, rho, phi, &quad.refined());
    let mut out = coarse;
    out.error_estimate = Some((out.lhs - fine.lhs).abs().max((out.rhs - fine.rhs).abs()));
    Ok(out)
}

fn psi_pass(
    field: &dyn CurvatureField,
    p: &[f64],
    sigma: f64,
    rho: f64,
    phi: &dyn SphereFunction,
    quad: &QuadSpec,
) -> IdentityCheck {
    let n = field.dim();
    let m = field.lie_dim();
    let h = quad.h;
    let cut = if n > 4 { quad.excision * h } else { 0.0 };
    let weight = |s: f64| -> f64 {
        let a = s.max(sigma);
        if n == 4 {
            4.0 * (rho / a).ln()
        } else {
            let e = 4 - n as i32;
            4.0 * (a.powi(e) - rho.powi(e)) / (n as f64 - 4.0)
        }
    };
    let bins = ball_cells(
        p,
        rho,
        h,
        || (Bins::new(4), vec![0.0; m * n * n], vec![0.0; n]),
        |(acc, buf, u), x, y, d2| {
            let s = d2.sqrt();
            for (ui, yi) in u.iter_mut().zip(y) {
                *ui = yi / s;
            }
            field.sample_into(x, buf);
            let psi = phi.value(u);
            let e = psi * norm2(buf);
            acc.sums[0].add(e);
            if s <= sigma {
                acc.sums[1].add(e);
            }
            if s < cut {
                acc.count += 1;
                return;
            }
            if s > sigma {
                let kernel = 4.0 * s.powi(4 - n as i32);
                acc.sums[2].add(kernel * psi * contract_norm2(buf, n, m, u));
            }
            let mut g = phi.gradient(u);
            let radial = dot(&g, u);
            for (gi, ui) in g.iter_mut().zip(u.iter()) {
                *gi -= radial * ui;
            }
            if g.iter().any(|v| *v != 0.0) {
                acc.sums[3].add(weight(s) * contract_dot(buf, n, m, u, &g));
            }
        },
        |a, b| a.0.merge(b.0),
    )
    .0;
    let v = bins.values(h.powi(n as i32));
    let e = 4.0 - n as f64;
    let lhs = rho.powf(e) * v[0] - sigma.powf(e) * v[1];
    let rhs = v[2] - v[3];
    IdentityCheck {
        sigma,
        rho,
        lhs,
        rhs,
        gap: lhs - rhs,
        rhs_terms: [v[2], v[3]],
        error_estimate: None,
        h,
        excised_cells: bins.count,
    }
}

/// ∫_{B_radius(center)} |ι_{z-y} F(y)|² dV(y); the contraction vector is the
/// unnormalized difference (outer point z minus integration variable y).
pub fn radial_defect_integral(
    field: &dyn CurvatureField,
    z: &[f64],
    center: &[f64],
    radius: f64,
    quad: &QuadSpec,
) -> Result<f64> {
    check_ball(field, center, radius)?;
    if z.len() != field.dim() {
        return Err(Error::input("defect point has the wrong dimension"));
    }
    let n = field.dim();
    let m = field.lie_dim();
    let h = quad.spacing_for(radius);
    let sum = ball_cells(
        center,
        radius,
        h,
        || (KahanSum::new(), vec![0.0; m * n * n], vec![0.0; n]),
        |(acc, buf, v), x, _, _| {
            for i in 0..n {
                v[i] = z[i] - x[i];
            }
            field.sample_into(x, buf);
            acc.add(contract_norm2(buf, n, m, v));
        },
        |a, b| a.0.merge(&b.0),
    );
    Ok(sum.0.value() * h.powi(n as i32))
}

/// Per-scale terms and total of Σ_β s_β^{2-n} ∫_{B_{ε₁ s_β}(z)} |ι_{z-x}F|² dV, s_β = 2^{-β}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicRadialSum {
    pub eps1: f64,
    pub terms: Vec<(f64, f64)>,
    pub total: f64,
}

pub fn dyadic_radial_sum(
    field: &dyn CurvatureField,
    z: &[f64],
    betas: &[i32],
    eps1: f64,
    exp: DensityExponent,
    quad: &QuadSpec,
) -> Result<DyadicRadialSum> {
    require_yang_mills(exp)?;
    if !(eps1 > 0.0 && eps1.is_finite()) {
        return Err(Error::input("eps1 must be positive"));
    }
    let n = field.dim() as i32;
    let mut terms = Vec::with_capacity(betas.len());
    let mut total = KahanSum::new();
    for &b in betas {
        let s = 2f64.powi(-b);
        let v = s.powi(2 - n) * radial_defect_integral(field, z, z, eps1 * s, quad)?;
        terms.push((s, v));
        total.add(v);
    }
    Ok(DyadicRadialSum { eps1, terms, total: total.value() })
}

/// Annulus-by-annulus bound C(n) ε₁^{n-2} Λ_loc for [`dyadic_radial_sum`],
/// with C(n) = 1/(4(1 - 2^{2-n})) and Λ_loc = θ(z, ε₁ max s) bounding the
/// θ-drop of every telescoping chain of annuli inside B_{ε₁ max s}(z).
pub fn dyadic_radial_bound(
    field: std::sync::Arc<dyn CurvatureField>,
    z: &[f64],
    betas: &[i32],
    eps1: f64,
    exp: DensityExponent,
    quad: &QuadSpec,
) -> Result<f64> {
    require_yang_mills(exp)?;
    let n = field.dim() as i32;
    let bmin = *betas.iter().min().ok_or_else(|| Error::input("no scales given"))?;
    let smax = 2f64.powi(-bmin);
    let mu = FieldEnergyMeasure::new(field, *quad);
    let lambda_loc = theta(&mu, z, eps1 * smax, exp)?;
    let c = 1.0 / (4.0 * (1.0 - 2f64.powi(2 - n)));
    Ok(c * eps1.powi(n - 2) * lambda_loc)
}
