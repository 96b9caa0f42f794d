//! Small numerical helpers shared by every module: compensated summation,
//! ball/sphere constants, Gauss-Legendre rules and dyadic scale grids.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Neumaier-compensated accumulator. Summation order is the caller's order,
/// so results are reproducible whenever the input order is fixed.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice in index order.
pub fn stable_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<KahanSum>().value()
}

/// Gamma function at a positive integer or half-integer `x = m/2`.
pub fn gamma_half(m: u32) -> f64 {
    assert!(m > 0, "gamma_half needs a positive argument");
    if m.is_multiple_of(2) {
        // Γ(j) = (j-1)!
        (1..m / 2).fold(1.0, |acc, j| acc * j as f64)
    } else {
        // Γ(j + 1/2) = sqrt(pi) * prod_{i<j} (i + 1/2)
        (0..m / 2).fold(PI.sqrt(), |acc, i| acc * (i as f64 + 0.5))
    }
}

/// Volume of the unit ball in R^n (ω_0 = 1).
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n as u32 + 2)
}

/// Surface area of the unit sphere S^{n-1} ⊂ R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// B(a/2, b/2) for positive integers a, b.
pub fn beta_half(a: u32, b: u32) -> f64 {
    gamma_half(a) * gamma_half(b) / gamma_half(a + b)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=order {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cached 48-point rule, used by the analytic measures.
pub(crate) fn gl48() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(48))
}

/// Integrate `f` over [a, b] with a cosine substitution that clusters nodes at
/// both ends. Endpoint behaviour like (t - a)^{q/2} becomes smooth in the
/// new variable, so square-root edges integrate to near machine precision.
pub(crate) fn integrate_clustered(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let (nodes, weights) = gl48();
    let half = 0.5 * (b - a);
    let mut acc = KahanSum::new();
    for (u, w) in nodes.iter().zip(weights) {
        // u in [-1,1] -> phi in [0, pi]; t = a + (b-a)(1 - cos phi)/2
        let phi = 0.5 * PI * (u + 1.0);
        let t = a + half * (1.0 - phi.cos());
        let jac = half * phi.sin() * 0.5 * PI;
        acc.add(w * jac * f(t));
    }
    acc.value()
}

/// Dyadic radii `2^{-j}` for `j = j_min..=j_max`, largest first.
pub fn dyadic_range(j_min: i32, j_max: i32) -> Vec<f64> {
    (j_min..=j_max).map(|j| 2f64.powi(-j)).collect()
}

/// All dyadic radii `s = 2^{-j}` with `lo <= s <= hi`, largest first.
/// A small relative slack absorbs rounding on the endpoints.
pub fn dyadic_between(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo > 0.0) || hi < lo {
        return Vec::new();
    }
    let slack = 1e-12;
    let j_hi = (-(hi * (1.0 + slack)).log2()).ceil() as i32;
    let mut out = Vec::new();
    let mut j = j_hi;
    loop {
        let s = 2f64.powi(-j);
        if s < lo * (1.0 - slack) {
            break;
        }
        if s <= hi * (1.0 + slack) {
            out.push(s);
        }
        j += 1;
    }
    out
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lexicographic comparison of float slices (total order, NaN last).
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_constants() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert_eq!(unit_ball_volume(0), 1.0);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn clustered_rule_handles_sqrt_edges() {
        // ∫_0^1 sqrt(t(1-t)) dt = π/8
        let v = integrate_clustered(0.0, 1.0, |t| (t * (1.0 - t)).sqrt());
        assert!((v - PI / 8.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kahan_beats_naive_on_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(stable_sum(&xs), 2.0);
    }

    #[test]
    fn dyadic_grid() {
        assert_eq!(dyadic_between(0.125, 1.0), vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(dyadic_between(0.2, 0.9), vec![0.5, 0.25]);
        assert!(dyadic_between(0.5, 0.25).is_empty());
    }
}
