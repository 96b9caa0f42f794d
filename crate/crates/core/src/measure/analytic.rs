//! Closed-form measures used as ground truth: homogeneous cones around an
//! affine plane, flat Hausdorff measures and constants.

use std::collections::HashMap;
use std::sync::RwLock;

use super::{validate_query, Measure};
use crate::error::{check_finite, Error, Result};
use crate::numeric::{beta_half, dot, integrate_clustered, unit_ball_volume, unit_sphere_area};

/// An affine k-plane: base point plus orthonormal basis.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffinePlane {
    pub base: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl AffinePlane {
    pub fn new(base: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<Self> {
        let n = base.len();
        check_finite(&base, "plane base point")?;
        for (i, b) in basis.iter().enumerate() {
            if b.len() != n {
                return Err(Error::input("plane basis vector has the wrong dimension"));
            }
            check_finite(b, "plane basis vector")?;
            for (j, c) in basis.iter().enumerate().take(i + 1) {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot(b, c) - expect).abs() > 1e-10 {
                    return Err(Error::input("plane basis is not orthonormal"));
                }
            }
        }
        if basis.len() > n {
            return Err(Error::input("plane dimension exceeds ambient dimension"));
        }
        Ok(AffinePlane { base, basis })
    }

    /// span{e_1, ..., e_k} through the origin.
    pub fn coordinate(n: usize, k: usize) -> Self {
        let basis = (0..k)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        AffinePlane { base: vec![0.0; n], basis }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut w: Vec<f64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        for e in &self.basis {
            let c = dot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        dot(&w, &w).sqrt()
    }
}

/// Density c · d(x, V)^{-4} around an affine k-plane V in R^n.
///
/// Invariant under translations along V and homogeneous of degree 4 - n
/// under dilations about any point of V, so θ with p = 4 is constant along V.
/// Integrability near V needs n - k ≥ 5.
#[derive(Debug)]
pub struct ConeMeasure {
    n: usize,
    plane: AffinePlane,
    c: f64,
    cache: RwLock<HashMap<(u64, u64), f64>>,
}

const CACHE_LIMIT: usize = 1 << 20;

impl ConeMeasure {
    pub fn new(n: usize, base: Vec<f64>, basis: Vec<Vec<f64>>, c: f64) -> Result<Self> {
        if base.len() != n {
            return Err(Error::input("cone base point has the wrong dimension"));
        }
        let plane = AffinePlane::new(base, basis)?;
        let k = plane.basis.len();
        if n < k + 5 {
            return Err(Error::input(format!(
                "density d(x,V_{k})^-4 is not integrable in R^{n}: need n - k >= 5"
            )));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::input("cone amplitude must be finite and nonnegative"));
        }
        Ok(ConeMeasure { n, plane, c, cache: RwLock::new(HashMap::new()) })
    }

    /// c |x|^{-4}.
    pub fn radial(n: usize, c: f64) -> Result<Self> {
        Self::new(n, vec![0.0; n], Vec::new(), c)
    }

    /// c · d(x, span{e_1..e_k})^{-4}.
    pub fn coordinate(n: usize, k: usize, c: f64) -> Result<Self> {
        let p = AffinePlane::coordinate(n, k);
        Self::new(n, p.base, p.basis, c)
    }

    pub fn k(&self) -> usize {
        self.plane.basis.len()
    }

    pub fn amplitude(&self) -> f64 {
        self.c
    }

    pub fn plane_base(&self) -> &[f64] {
        &self.plane.base
    }

    pub fn plane_basis(&self) -> &[Vec<f64>] {
        &self.plane.basis
    }

    pub fn distance_to_plane(&self, x: &[f64]) -> f64 {
        self.plane.distance(x)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let d = self.distance_to_plane(x);
        self.c / (d * d * d * d)
    }

    /// θ along the plane with p = 4: c ω_k σ_{m-1} B((m-4)/2, k/2+1) / 2, m = n - k.
    pub fn theta_on_plane(&self) -> f64 {
        let k = self.k();
        let m = self.n - k;
        self.c * unit_ball_volume(k) * unit_sphere_area(m) * beta_half((m - 4) as u32, (k + 2) as u32) / 2.0
    }

    /// Mass of a ball of radius r whose center sits at distance d from V.
    fn mass_at(&self, d: f64, r: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        let key = (d.to_bits(), r.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return *v;
        }
        let v = self.mass_uncached(d, r);
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        v
    }

    fn mass_uncached(&self, d: f64, r: f64) -> f64 {
        let n = self.n;
        let k = self.k();
        let m = n - k;
        if d <= 1e-15 * r {
            return self.theta_on_plane() * r.powi(n as i32 - 4);
        }
        let half_k = k as f64 / 2.0;
        let tpow = (m as f64 - 3.0) / 2.0;
        // inner integral over the cosine t between the transverse offset and the
        // transverse direction of the center
        let inner = |rho: f64| -> f64 {
            let a = r * r - rho * rho - d * d;
            let b = 2.0 * rho * d;
            let t0 = (-a / b).max(-1.0);
            if t0 >= 1.0 {
                return 0.0;
            }
            integrate_clustered(t0, 1.0, |t| {
                let s = (a + b * t).max(0.0);
                let chord = if k == 0 { 1.0 } else { s.powf(half_k) };
                chord * (1.0 - t * t).max(0.0).powf(tpow)
            })
        };
        let outer = |rho: f64| rho.powi(m as i32 - 5) * inner(rho);
        let body = if d < r {
            integrate_clustered(0.0, r - d, outer) + integrate_clustered(r - d, r + d, outer)
        } else {
            integrate_clustered(d - r, d + r, outer)
        };
        self.c * unit_ball_volume(k) * unit_sphere_area(m - 1) * body
    }
}

impl Measure for ConeMeasure {
    fn dim(&self) -> usize {
        self.n
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.n, x, r)?;
        Ok(self.mass_at(self.distance_to_plane(x), r))
    }
}

/// Θ · H^k restricted to an affine k-plane.
#[derive(Debug, Clone)]
pub struct FlatMeasure {
    n: usize,
    plane: AffinePlane,
    theta: f64,
}

impl FlatMeasure {
    pub fn new(n: usize, base: Vec<f64>, basis: Vec<Vec<f64>>, theta: f64) -> Result<Self> {
        if base.len() != n {
            return Err(Error::input("plane base point has the wrong dimension"));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::input("flat measure density must be finite and nonnegative"));
        }
        Ok(FlatMeasure { n, plane: AffinePlane::new(base, basis)?, theta })
    }

    pub fn coordinate(n: usize, k: usize, theta: f64) -> Result<Self> {
        let p = AffinePlane::coordinate(n, k);
        Self::new(n, p.base, p.basis, theta)
    }

    pub fn k(&self) -> usize {
        self.plane.basis.len()
    }

    pub fn plane_basis(&self) -> &[Vec<f64>] {
        &self.plane.basis
    }

    pub fn distance_to_plane(&self, x: &[f64]) -> f64 {
        self.plane.distance(x)
    }
}

impl Measure for FlatMeasure {
    fn dim(&self) -> usize {
        self.n
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.n, x, r)?;
        let d = self.plane.distance(x);
        if d > r {
            return Ok(0.0);
        }
        let k = self.k();
        let chord2 = (r * r - d * d).max(0.0);
        Ok(self.theta * unit_ball_volume(k) * chord2.powf(k as f64 / 2.0))
    }
}

/// Constant density c on all of R^n.
#[derive(Debug, Clone)]
pub struct UniformDensity {
    n: usize,
    c: f64,
}

impl UniformDensity {
    pub fn new(n: usize, c: f64) -> Self {
        UniformDensity { n, c }
    }

    pub fn constant(&self) -> f64 {
        self.c
    }
}

impl Measure for UniformDensity {
    fn dim(&self) -> usize {
        self.n
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.n, x, r)?;
        Ok(self.c * unit_ball_volume(self.n) * r.powi(self.n as i32))
    }
}

/// The zero measure.
#[derive(Debug, Clone)]
pub struct ZeroMeasure {
    n: usize,
}

impl ZeroMeasure {
    pub fn new(n: usize) -> Self {
        ZeroMeasure { n }
    }
}

impl Measure for ZeroMeasure {
    fn dim(&self) -> usize {
        self.n
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.n, x, r)?;
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{theta, DensityExponent};

    /// Shell-by-shell midpoint oracle for c|x|^{-4} in R^n: each sphere of
    /// radius s about the vertex meets B_r(y) in a cap of known area.
    fn radial_shell_oracle(n: usize, d: f64, r: f64, steps: usize) -> f64 {
        let lo = (d - r).max(0.0);
        let hi = d + r;
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            let s = lo + (i as f64 + 0.5) * h;
            let frac = if s <= r - d {
                1.0
            } else {
                let t0 = ((s * s + d * d - r * r) / (2.0 * s * d)).clamp(-1.0, 1.0);
                // fraction of S^{n-1} with cos(angle) >= t0, by midpoint in t
                let m = 4000;
                let dt = (1.0 - t0) / m as f64;
                let mut cap = 0.0;
                for j in 0..m {
                    let t = t0 + (j as f64 + 0.5) * dt;
                    cap += (1.0 - t * t).powf((n as f64 - 3.0) / 2.0) * dt;
                }
                cap * unit_sphere_area(n - 1) / unit_sphere_area(n)
            };
            total += unit_sphere_area(n) * s.powi(n as i32 - 5) * frac * h;
        }
        total
    }

    #[test]
    fn radial_cone_off_vertex_matches_shell_oracle() {
        let mu = ConeMeasure::radial(5, 1.0).unwrap();
        for (d, r) in [(0.3, 0.5), (0.5, 0.3), (0.2, 0.2), (1.0, 0.1)] {
            let x = [d, 0.0, 0.0, 0.0, 0.0];
            let a = mu.mass_in_ball(&x, r).unwrap();
            let b = radial_shell_oracle(5, d, r, 4000);
            assert!((a - b).abs() < 2e-4 * b, "d={d} r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn cone_mass_is_continuous_at_the_plane() {
        let mu = ConeMeasure::coordinate(6, 1, 1.0).unwrap();
        let on = mu.mass_in_ball(&[0.0; 6], 0.5).unwrap();
        let near = mu.mass_in_ball(&[0.0, 1e-7, 0.0, 0.0, 0.0, 0.0], 0.5).unwrap();
        assert!((on - near).abs() < 1e-5 * on, "{on} {near}");
    }

    #[test]
    fn k_symmetric_theta_constant_along_plane() {
        let mu = ConeMeasure::coordinate(6, 1, 1.0).unwrap();
        let exp = DensityExponent::default();
        let t0 = mu.theta_on_plane();
        for y in [0.0, 0.3, -0.7] {
            for r in [1.0, 0.25, 0.01] {
                let t = theta(&mu, &[y, 0.0, 0.0, 0.0, 0.0, 0.0], r, exp).unwrap();
                assert!((t - t0).abs() <= 1e-12 * t0);
            }
        }
    }

    #[test]
    fn k_symmetric_mass_is_invariant_along_plane() {
        let mu = ConeMeasure::coordinate(6, 1, 1.0).unwrap();
        let a = mu.mass_in_ball(&[0.0, 0.2, 0.1, 0.0, 0.0, 0.0], 0.3).unwrap();
        let b = mu.mass_in_ball(&[0.4, 0.2, 0.1, 0.0, 0.0, 0.0], 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonintegrable_cones_are_rejected() {
        assert!(ConeMeasure::radial(4, 1.0).is_err());
        assert!(ConeMeasure::coordinate(5, 1, 1.0).is_err());
    }

    #[test]
    fn flat_measure_line_density() {
        let mu = FlatMeasure::coordinate(5, 1, 1.0).unwrap();
        let exp = DensityExponent::default();
        for r in [0.1, 1.0, 3.0] {
            let t = theta(&mu, &[0.5, 0.0, 0.0, 0.0, 0.0], r, exp).unwrap();
            assert!((t - 2.0).abs() < 1e-14);
        }
        let off = mu.mass_in_ball(&[0.0, 0.6, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert!((off - 1.6).abs() < 1e-14);
        assert_eq!(mu.mass_in_ball(&[0.0, 0.6, 0.0, 0.0, 0.0], 0.5).unwrap(), 0.0);
    }
}
