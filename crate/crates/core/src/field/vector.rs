use crate::numeric::dist2;

/// Smooth compactly supported vector field with its Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// X(x).
    fn value(&self, x: &[f64]) -> Vec<f64>;

    /// J[i*n + j] = ∂X_i/∂x_j.
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;

    /// Ball outside of which X vanishes identically.
    fn support(&self) -> (Vec<f64>, f64);
}

/// Standard bump ξ(x) = exp(1 - 1/(1 - |x-c|²/R²)) inside B_R(c), with ξ(c) = 1.
fn bump(center: &[f64], radius: f64, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let s = dist2(x, center) / (radius * radius);
    if s >= 1.0 {
        return None;
    }
    let q = 1.0 - s;
    let xi = (1.0 - 1.0 / q).exp();
    // ∇ξ = -ξ/q² · ∇s, ∇s = 2(x - c)/R²
    let f = -xi / (q * q) * 2.0 / (radius * radius);
    let grad = x.iter().zip(center).map(|(a, b)| f * (a - b)).collect();
    Some((xi, grad))
}

/// X = ξ · a for a fixed direction a.
#[derive(Debug, Clone)]
pub struct BumpTranslation {
    pub center: Vec<f64>,
    pub radius: f64,
    pub direction: Vec<f64>,
}

impl VectorField for BumpTranslation {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        match bump(&self.center, self.radius, x) {
            Some((xi, _)) => self.direction.iter().map(|a| a * xi).collect(),
            None => vec![0.0; self.dim()],
        }
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut j = vec![0.0; n * n];
        if let Some((_, g)) = bump(&self.center, self.radius, x) {
            for a in 0..n {
                for b in 0..n {
                    j[a * n + b] = self.direction[a] * g[b];
                }
            }
        }
        j
    }

    fn support(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }
}

/// X = ξ · (x - o), a localized dilation about o.
#[derive(Debug, Clone)]
pub struct BumpDilation {
    pub center: Vec<f64>,
    pub radius: f64,
    pub origin: Vec<f64>,
}

impl VectorField for BumpDilation {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        match bump(&self.center, self.radius, x) {
            Some((xi, _)) => x.iter().zip(&self.origin).map(|(a, o)| xi * (a - o)).collect(),
            None => vec![0.0; self.dim()],
        }
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut j = vec![0.0; n * n];
        if let Some((xi, g)) = bump(&self.center, self.radius, x) {
            for a in 0..n {
                for b in 0..n {
                    j[a * n + b] = (x[a] - self.origin[a]) * g[b] + if a == b { xi } else { 0.0 };
                }
            }
        }
        j
    }

    fn support(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }
}

/// Largest deviation between central finite differences of X and the
/// declared Jacobian over the probe points.
pub fn fd_consistency(field: &dyn VectorField, probes: &[Vec<f64>], step: f64) -> f64 {
    let n = field.dim();
    let mut worst: f64 = 0.0;
    for x in probes {
        let jac = field.jacobian(x);
        for b in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[b] += step;
            xm[b] -= step;
            let vp = field.value(&xp);
            let vm = field.value(&xm);
            for a in 0..n {
                let fd = (vp[a] - vm[a]) / (2.0 * step);
                worst = worst.max((fd - jac[a * n + b]).abs());
            }
        }
    }
    worst
}
