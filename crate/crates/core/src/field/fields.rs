use super::{CurvatureField, Domain};
use crate::error::{Error, Result};
use crate::measure::AffinePlane;
use crate::numeric::dot;

/// F ≡ 0.
#[derive(Debug, Clone)]
pub struct ZeroField {
    n: usize,
    m: usize,
}

impl ZeroField {
    pub fn new(n: usize, m: usize) -> Self {
        ZeroField { n, m }
    }
}

impl CurvatureField for ZeroField {
    fn dim(&self) -> usize {
        self.n
    }

    fn lie_dim(&self) -> usize {
        self.m
    }

    fn sample_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn name(&self) -> &str {
        "zero"
    }
}

/// A constant 2-form with one internal component.
#[derive(Debug, Clone)]
pub struct ConstantField {
    n: usize,
    components: Vec<f64>,
    domain: Domain,
}

impl ConstantField {
    /// `components` is an antisymmetric n×n matrix, row-major.
    pub fn new(n: usize, components: Vec<f64>) -> Result<Self> {
        if components.len() != n * n {
            return Err(Error::input("constant field needs n² components"));
        }
        for i in 0..n {
            for j in 0..n {
                if components[i * n + j] != -components[j * n + i] {
                    return Err(Error::input("constant field components are not antisymmetric"));
                }
            }
        }
        Ok(ConstantField { n, components, domain: Domain::whole_space(n) })
    }

    /// amplitude · e_1 ∧ e_2.
    pub fn standard(n: usize, amplitude: f64) -> Self {
        let mut c = vec![0.0; n * n];
        c[1] = amplitude;
        c[n] = -amplitude;
        ConstantField { n, components: c, domain: Domain::whole_space(n) }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
}

impl CurvatureField for ConstantField {
    fn dim(&self) -> usize {
        self.n
    }

    fn lie_dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        self.domain.clone()
    }

    fn sample_into(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.components);
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// 't Hooft symbol η^a_{μν} (self-dual), 0-based indices with μ = 3 the
/// fourth axis.
pub fn thooft_eta(a: usize, mu: usize, nu: usize) -> f64 {
    fn levi(i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }
    match (mu, nu) {
        (3, 3) => 0.0,
        (m, 3) => {
            if m == a {
                1.0
            } else {
                0.0
            }
        }
        (3, m) => {
            if m == a {
                -1.0
            } else {
                0.0
            }
        }
        (m, l) => levi(a, m, l),
    }
}

/// BPST instanton of scale ρ centered at c, in R^4 with su(2) index:
/// F^a_{μν} = -2ρ² η^a_{μν} / (|x-c|² + ρ²)², so |F|² = 48ρ⁴/(|x-c|²+ρ²)⁴.
#[derive(Debug, Clone)]
pub struct Bpst {
    rho: f64,
    center: [f64; 4],
    eta: [f64; 48],
}

impl Bpst {
    pub fn new(rho: f64) -> Self {
        Self::centered(rho, [0.0; 4])
    }

    pub fn centered(rho: f64, center: [f64; 4]) -> Self {
        let mut eta = [0.0; 48];
        for a in 0..3 {
            for i in 0..4 {
                for j in 0..4 {
                    eta[a * 16 + i * 4 + j] = thooft_eta(a, i, j);
                }
            }
        }
        Bpst { rho, center, eta }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn center(&self) -> &[f64; 4] {
        &self.center
    }

    /// Closed-form |F|²(x).
    pub fn energy_density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let rho2 = self.rho * self.rho;
        48.0 * rho2 * rho2 / (r2 + rho2).powi(4)
    }
}

impl CurvatureField for Bpst {
    fn dim(&self) -> usize {
        4
    }

    fn lie_dim(&self) -> usize {
        3
    }

    fn sample_into(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let rho2 = self.rho * self.rho;
        let den = r2 + rho2;
        let s = -2.0 * rho2 / (den * den);
        for (o, e) in out.iter_mut().zip(self.eta.iter()) {
            *o = s * e;
        }
    }

    fn name(&self) -> &str {
        "instanton"
    }
}

/// Homogeneous cone field around an affine k-plane V (k = 0 gives the
/// radial cone). At x with transverse offset w = d·u from V, the field is a
/// fixed seed 2-form of the orthogonal factor projected onto V^⊥ ∩ u^⊥ and
/// rescaled so that |F|² = c d^{-4}. Hence ι_ν F = 0 for ν ∈ V and ι_u F = 0.
#[derive(Debug, Clone)]
pub struct ConeField {
    n: usize,
    plane: AffinePlane,
    c: f64,
    seed: Vec<f64>,
}

impl ConeField {
    pub fn new(n: usize, base: Vec<f64>, basis: Vec<Vec<f64>>, c: f64) -> Result<Self> {
        if base.len() != n {
            return Err(Error::input("cone base point has the wrong dimension"));
        }
        let plane = AffinePlane::new(base, basis)?;
        let k = plane.basis.len();
        if n < k + 4 {
            return Err(Error::input("cone field needs at least four transverse dimensions"));
        }
        // orthonormal complement of V by Gram-Schmidt on the standard basis
        let mut frame: Vec<Vec<f64>> = plane.basis.clone();
        let mut complement = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            for f in &frame {
                let c = dot(&e, f);
                for (a, b) in e.iter_mut().zip(f) {
                    *a -= c * b;
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                e.iter_mut().for_each(|v| *v /= norm);
                frame.push(e.clone());
                complement.push(e);
            }
        }
        // seed f1∧f2 + f3∧f4 keeps full rank after removing one direction
        let mut seed = vec![0.0; n * n];
        for (p, q) in [(0, 1), (2, 3)] {
            let (a, b) = (&complement[p], &complement[q]);
            for i in 0..n {
                for j in 0..n {
                    seed[i * n + j] += a[i] * b[j] - b[i] * a[j];
                }
            }
        }
        Ok(ConeField { n, plane, c, seed })
    }

    pub fn radial(n: usize, c: f64) -> Result<Self> {
        Self::new(n, vec![0.0; n], Vec::new(), c)
    }

    pub fn coordinate(n: usize, k: usize, c: f64) -> Result<Self> {
        let p = AffinePlane::coordinate(n, k);
        Self::new(n, p.base, p.basis, c)
    }

    pub fn plane_basis(&self) -> &[Vec<f64>] {
        &self.plane.basis
    }

    fn transverse(&self, x: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = x.iter().zip(&self.plane.base).map(|(a, b)| a - b).collect();
        for e in &self.plane.basis {
            let c = dot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        w
    }
}

impl CurvatureField for ConeField {
    fn dim(&self) -> usize {
        self.n
    }

    fn lie_dim(&self) -> usize {
        1
    }

    fn sample_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let w = self.transverse(x);
        let d = dot(&w, &w).sqrt();
        if d == 0.0 || self.c == 0.0 {
            out.fill(0.0);
            return;
        }
        let u: Vec<f64> = w.iter().map(|v| v / d).collect();
        // g = M u; (I - uu^T) M (I - uu^T) = M - u (u^T M) - (M u) u^T with u^T M = -g^T
        let mut g = vec![0.0; n];
        for i in 0..n {
            g[i] = (0..n).map(|j| self.seed[i * n + j] * u[j]).sum();
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.seed[i * n + j] + u[i] * g[j] - g[i] * u[j];
            }
        }
        let current: f64 = out.iter().map(|v| v * v).sum();
        let scale = (self.c / (d * d * d * d) / current).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
    }

    fn singular_distance(&self, x: &[f64]) -> f64 {
        let w = self.transverse(x);
        dot(&w, &w).sqrt()
    }

    fn name(&self) -> &str {
        if self.plane.basis.is_empty() {
            "radial_cone"
        } else {
            "k_symmetric_cone"
        }
    }
}
