//! Curvature 2-forms with an opaque internal index, their contractions, and
//! quadrature checks of the stationarity and monotonicity identities.
//!
//! Components are stored as `F[a][i][j]`, antisymmetric in `(i, j)`, and
//! `|F|² = Σ_a Σ_{i,j} (F^a_{ij})²`. All identities assume the Yang-Mills
//! scaling exponent p = 4.

mod energy;
mod fields;
mod identities;
mod quadrature;
mod vector;

pub use energy::FieldEnergyMeasure;
pub use fields::{Bpst, ConeField, ConstantField, ZeroField};
pub use identities::{
    dyadic_radial_bound, dyadic_radial_sum, monotonicity_check, monotonicity_check_many,
    psi_monotonicity_check, radial_defect_integral, stationarity_residual, ConstantPhi,
    CoordinatePhi, IdentityCheck, SphereFunction,
};
pub use quadrature::QuadSpec;
pub use vector::{fd_consistency, BumpDilation, BumpTranslation, VectorField};

pub(crate) use quadrature::{ball_cells, Bins};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DensityExponent;
use crate::numeric::dist;

/// Ball on which a field's samples are valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Domain {
    pub fn whole_space(n: usize) -> Self {
        Domain { center: vec![0.0; n], radius: f64::INFINITY }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.radius.is_infinite() || dist(x, &self.center) <= self.radius
    }

    pub fn contains_ball(&self, x: &[f64], r: f64) -> bool {
        self.radius.is_infinite() || dist(x, &self.center) + r <= self.radius * (1.0 + 1e-12)
    }
}

/// A sampled curvature 2-form.
pub trait CurvatureField: Send + Sync {
    fn dim(&self) -> usize;

    fn lie_dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::whole_space(self.dim())
    }

    /// Writes `F^a_{ij}(x)` into `out[a*n*n + i*n + j]`. The caller guarantees
    /// `x` lies in the domain and `out` has length `m n²`.
    fn sample_into(&self, x: &[f64], out: &mut [f64]);

    /// Distance from `x` to the declared singular set (∞ if there is none).
    fn singular_distance(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> &str;
}

/// Components of F at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub n: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl FieldSample {
    #[inline]
    pub fn get(&self, a: usize, i: usize, j: usize) -> f64 {
        self.data[a * self.n * self.n + i * self.n + j]
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    /// (ι_v F)^a_j = Σ_i v_i F^a_{ij}, laid out as `out[a*n + j]`.
    pub fn contract(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.n];
        contract_into(&self.data, self.n, self.m, v, &mut out);
        out
    }
}

#[inline]
pub(crate) fn norm2(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn contract_into(data: &[f64], n: usize, m: usize, v: &[f64], out: &mut [f64]) {
    for a in 0..m {
        let block = &data[a * n * n..(a + 1) * n * n];
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += v[i] * block[i * n + j];
            }
            out[a * n + j] = s;
        }
    }
}

/// |ι_v F|² without allocating.
#[inline]
pub(crate) fn contract_norm2(data: &[f64], n: usize, m: usize, v: &[f64]) -> f64 {
    let mut total = 0.0;
    for a in 0..m {
        let block = &data[a * n * n..(a + 1) * n * n];
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += v[i] * block[i * n + j];
            }
            total += s * s;
        }
    }
    total
}

/// ⟨ι_u F, ι_v F⟩ summed over the internal index.
#[inline]
pub(crate) fn contract_dot(data: &[f64], n: usize, m: usize, u: &[f64], v: &[f64]) -> f64 {
    let mut total = 0.0;
    for a in 0..m {
        let block = &data[a * n * n..(a + 1) * n * n];
        for j in 0..n {
            let mut su = 0.0;
            let mut sv = 0.0;
            for i in 0..n {
                su += u[i] * block[i * n + j];
                sv += v[i] * block[i * n + j];
            }
            total += su * sv;
        }
    }
    total
}

/// Samples F at x after a domain check.
pub fn sample(field: &dyn CurvatureField, x: &[f64]) -> Result<FieldSample> {
    check_point(field, x)?;
    let (n, m) = (field.dim(), field.lie_dim());
    let mut data = vec![0.0; m * n * n];
    field.sample_into(x, &mut data);
    Ok(FieldSample { n, m, data })
}

/// ι_v F at x.
pub fn contract(field: &dyn CurvatureField, v: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if v.len() != field.dim() {
        return Err(Error::input("contraction vector has the wrong dimension"));
    }
    Ok(sample(field, x)?.contract(v))
}

fn check_point(field: &dyn CurvatureField, x: &[f64]) -> Result<()> {
    if x.len() != field.dim() {
        return Err(Error::input("sample point has the wrong dimension"));
    }
    crate::error::check_finite(x, "sample point")?;
    if !field.domain().contains_point(x) {
        return Err(Error::domain(format!("point lies outside the {} field domain", field.name())));
    }
    Ok(())
}

pub(crate) fn check_ball(field: &dyn CurvatureField, x: &[f64], r: f64) -> Result<()> {
    if x.len() != field.dim() {
        return Err(Error::input("ball center has the wrong dimension"));
    }
    crate::error::check_finite(x, "ball center")?;
    crate::error::check_radius(r, "ball radius")?;
    if !field.domain().contains_ball(x, r) {
        return Err(Error::domain(format!(
            "ball of radius {r} leaves the {} field domain",
            field.name()
        )));
    }
    Ok(())
}

pub(crate) fn require_yang_mills(exp: DensityExponent) -> Result<()> {
    if exp.p != 4.0 {
        return Err(Error::input(format!(
            "field identities are stated for p = 4, got p = {}",
            exp.p
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_contracts_to_zero() {
        let f = Bpst::new(1.0);
        let c = contract(&f, &[0.0; 4], &[0.3, 0.1, 0.0, 0.2]).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn outside_domain_is_rejected() {
        let f = ConstantField::standard(4, 1.0).with_domain(Domain { center: vec![0.0; 4], radius: 1.0 });
        assert!(matches!(contract(&f, &[1.0, 0.0, 0.0, 0.0], &[2.0, 0.0, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn contraction_is_linear_and_bounded(
            x in proptest::collection::vec(-2.0f64..2.0, 4),
            u in proptest::collection::vec(-3.0f64..3.0, 4),
            v in proptest::collection::vec(-3.0f64..3.0, 4),
            s in -2.0f64..2.0,
        ) {
            let f = Bpst::new(0.7);
            let fs = sample(&f, &x).unwrap();
            let a = fs.contract(&u);
            let b = fs.contract(&v);
            let w: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p + s * q).collect();
            let c = fs.contract(&w);
            for j in 0..a.len() {
                prop_assert!((c[j] - (a[j] + s * b[j])).abs() < 1e-10 * (1.0 + c[j].abs()));
            }
            let uu: f64 = u.iter().map(|t| t * t).sum();
            prop_assert!(norm2(&a) <= uu * fs.norm2() * (1.0 + 1e-12) + 1e-300);
            for a_ in 0..3 {
                for i in 0..4 {
                    for j in 0..4 {
                        prop_assert_eq!(fs.get(a_, i, j), -fs.get(a_, j, i));
                    }
                }
            }
        }
    }
}
