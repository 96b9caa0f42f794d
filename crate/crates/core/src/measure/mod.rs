//! Discretized and analytic Radon measures, the monotone density θ and
//! blow-up rescaling.
//!
//! Every measure answers closed-ball mass queries. Atomic and gridded
//! measures carry a resolution floor below which scale-dependent tests refuse
//! to run; analytic measures report a floor of zero.

mod analytic;
mod grid;
mod point;

pub use analytic::{AffinePlane, ConeMeasure, FlatMeasure, UniformDensity, ZeroMeasure};
pub use grid::{GridDensity, GridValues};
pub use point::WeightedPointMeasure;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_radius, Error, Result};

/// A finite Radon measure on R^n queried through closed balls.
pub trait Measure: Send + Sync {
    fn dim(&self) -> usize;

    /// μ(B_r(x)) for the closed ball.
    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64>;

    /// Smallest length scale the representation resolves.
    fn resolution(&self) -> f64 {
        0.0
    }

    /// Support points inside the closed ball, offered to symmetry searches as
    /// extra tip candidates.
    fn support_points_in_ball(&self, _x: &[f64], _r: f64) -> Vec<Vec<f64>> {
        Vec::new()
    }

    /// The underlying atoms when the measure is atomic.
    fn as_point_measure(&self) -> Option<&WeightedPointMeasure> {
        None
    }
}

impl<T: Measure + ?Sized> Measure for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        (**self).mass_in_ball(x, r)
    }

    fn resolution(&self) -> f64 {
        (**self).resolution()
    }

    fn support_points_in_ball(&self, x: &[f64], r: f64) -> Vec<Vec<f64>> {
        (**self).support_points_in_ball(x, r)
    }

    fn as_point_measure(&self) -> Option<&WeightedPointMeasure> {
        (**self).as_point_measure()
    }
}

/// Scaling exponent p of θ(x,r) = r^{p-n} μ(B_r(x)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityExponent {
    pub p: f64,
}

impl Default for DensityExponent {
    fn default() -> Self {
        DensityExponent { p: 4.0 }
    }
}

impl DensityExponent {
    pub fn new(p: f64) -> Self {
        DensityExponent { p }
    }

    /// Checks 2 ≤ p ≤ n.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p.is_finite() && self.p >= 2.0 && self.p <= n as f64 {
            Ok(())
        } else {
            Err(Error::input(format!(
                "density exponent p = {} must satisfy 2 <= p <= n = {n}",
                self.p
            )))
        }
    }

    /// The power r^{p-n}.
    #[inline]
    pub fn scale_factor(&self, n: usize, r: f64) -> f64 {
        let e = self.p - n as f64;
        if e == 0.0 {
            1.0
        } else if e.fract() == 0.0 {
            r.powi(e as i32)
        } else {
            r.powf(e)
        }
    }
}

pub(crate) fn validate_query(n: usize, x: &[f64], r: f64) -> Result<()> {
    if x.len() != n {
        return Err(Error::input(format!(
            "query point has dimension {}, measure has {n}",
            x.len()
        )));
    }
    check_finite(x, "query point")?;
    check_radius(r, "query radius")
}

/// θ(x,r) = r^{p-n} μ(B_r(x)).
pub fn theta(mu: &dyn Measure, x: &[f64], r: f64, exp: DensityExponent) -> Result<f64> {
    check_radius(r, "theta radius")?;
    let n = mu.dim();
    Ok(exp.scale_factor(n, r) * mu.mass_in_ball(x, r)?)
}

/// Lazy blow-up view μ_λ(E) = λ^{p-n} μ(λE + x) of an arbitrary measure.
///
/// Queries are forwarded as μ(B_{λr}(x + λy)) so that
/// θ_{μ_λ}(0,r) and θ_μ(x,λr) follow the same floating-point path.
pub struct Rescaled<'a> {
    inner: &'a dyn Measure,
    center: Vec<f64>,
    lambda: f64,
    exp: DensityExponent,
}

impl<'a> Rescaled<'a> {
    pub fn new(inner: &'a dyn Measure, center: &[f64], lambda: f64, exp: DensityExponent) -> Result<Self> {
        check_radius(lambda, "blow-up factor")?;
        if center.len() != inner.dim() {
            return Err(Error::input("blow-up center has the wrong dimension"));
        }
        check_finite(center, "blow-up center")?;
        Ok(Rescaled { inner, center: center.to_vec(), lambda, exp })
    }

    fn forward(&self, y: &[f64]) -> Vec<f64> {
        self.center.iter().zip(y).map(|(c, v)| c + self.lambda * v).collect()
    }
}

impl Measure for Rescaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.dim(), x, r)?;
        let n = self.dim();
        let m = self.inner.mass_in_ball(&self.forward(x), self.lambda * r)?;
        Ok(self.exp.scale_factor(n, self.lambda) * m)
    }

    fn resolution(&self) -> f64 {
        self.inner.resolution() / self.lambda
    }

    fn support_points_in_ball(&self, x: &[f64], r: f64) -> Vec<Vec<f64>> {
        self.inner
            .support_points_in_ball(&self.forward(x), self.lambda * r)
            .into_iter()
            .map(|p| p.iter().zip(&self.center).map(|(a, c)| (a - c) / self.lambda).collect())
            .collect()
    }
}
