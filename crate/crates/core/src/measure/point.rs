use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{validate_query, DensityExponent, Measure};
use crate::error::{check_finite, check_radius, Error, Result};
use crate::kdtree::KdTree;
use crate::numeric::{stable_sum, KahanSum};

/// Finite atomic measure Σ w_i δ_{x_i} with a kd-tree over the positions.
#[derive(Debug, Clone)]
pub struct WeightedPointMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    tree: KdTree,
    total_mass: f64,
    resolution: OnceLock<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    format: String,
}

#[derive(Serialize, Deserialize)]
struct AtomLine {
    x: Vec<f64>,
    w: f64,
}

const FORMAT_TAG: &str = "wpm-v1";

impl WeightedPointMeasure {
    /// `coords` holds the positions row by row, `weights[i]` belongs to atom i.
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::input("dimension must be positive"));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::input(format!(
                "{} coordinates do not match {} atoms in dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        check_finite(&coords, "atom position")?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::input(format!("atom weight {w} is not a nonnegative finite number")));
        }
        let tree = KdTree::build(dim, &coords);
        let total_mass = stable_sum(&weights);
        Ok(WeightedPointMeasure { dim, coords, weights, tree, total_mass, resolution: OnceLock::new() })
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(dim, Vec::new(), Vec::new()).expect("empty measure is valid")
    }

    pub fn from_atoms(dim: usize, atoms: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if x.len() != dim {
                return Err(Error::input("atom with wrong dimension"));
            }
            coords.extend_from_slice(x);
            weights.push(*w);
        }
        Self::new(dim, coords, weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    /// Atom ids in the closed ball, ascending.
    pub fn atoms_in_ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        self.tree.query_ball(x, r)
    }

    /// μ_λ(E) = λ^{p-n} μ(λE + x): positions (y - x)/λ, weights scaled by λ^{p-n}.
    pub fn rescale_blowup(&self, x: &[f64], lambda: f64, exp: DensityExponent) -> Result<Self> {
        check_radius(lambda, "blow-up factor")?;
        if x.len() != self.dim {
            return Err(Error::input("blow-up center has the wrong dimension"));
        }
        check_finite(x, "blow-up center")?;
        if lambda == 1.0 && x.iter().all(|v| *v == 0.0) {
            return Ok(self.clone());
        }
        let scale = exp.scale_factor(self.dim, lambda);
        let coords = self
            .coords
            .chunks(self.dim)
            .flat_map(|p| p.iter().zip(x).map(|(a, c)| (a - c) / lambda).collect::<Vec<_>>())
            .collect();
        let weights = self.weights.iter().map(|w| w * scale).collect();
        Self::new(self.dim, coords, weights)
    }

    /// Nearest-neighbour distance quantile used as the resolution floor.
    fn nn_quantile(&self, q: f64) -> f64 {
        let count = self.len();
        if count < 2 {
            return 0.0;
        }
        let mut d: Vec<f64> = (0..count)
            .map(|i| {
                self.tree
                    .nearest(self.position(i), Some(i))
                    .map_or(0.0, |(_, d2)| d2.sqrt())
            })
            .collect();
        d.sort_by(f64::total_cmp);
        let idx = ((count - 1) as f64 * q).floor() as usize;
        d[idx]
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        let header = Header { dim: self.dim, format: FORMAT_TAG.to_string() };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for i in 0..self.len() {
            let line = AtomLine { x: self.position(i).to_vec(), w: self.weights[i] };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header_line = loop {
            match lines.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
                None => return Err(Error::input("point-measure file is empty")),
            }
        };
        let header: Header = serde_json::from_str(&header_line)
            .map_err(|e| Error::input(format!("bad point-measure header: {e}")))?;
        if header.format != FORMAT_TAG {
            return Err(Error::input(format!("unsupported format tag {:?}", header.format)));
        }
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (lineno, l) in lines.enumerate() {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let atom: AtomLine = serde_json::from_str(&l)
                .map_err(|e| Error::input(format!("line {}: {e}", lineno + 2)))?;
            if atom.x.len() != header.dim {
                return Err(Error::input(format!(
                    "line {}: atom has {} coordinates, expected {}",
                    lineno + 2,
                    atom.x.len(),
                    header.dim
                )));
            }
            coords.extend(atom.x);
            weights.push(atom.w);
        }
        Self::new(header.dim, coords, weights)
    }
}

impl Measure for WeightedPointMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.dim, x, r)?;
        let mut acc = KahanSum::new();
        for i in self.tree.query_ball(x, r) {
            acc.add(self.weights[i]);
        }
        Ok(acc.value())
    }

    fn resolution(&self) -> f64 {
        *self.resolution.get_or_init(|| self.nn_quantile(0.05))
    }

    fn support_points_in_ball(&self, x: &[f64], r: f64) -> Vec<Vec<f64>> {
        self.tree
            .query_ball(x, r)
            .into_iter()
            .map(|i| self.position(i).to_vec())
            .collect()
    }

    fn as_point_measure(&self) -> Option<&WeightedPointMeasure> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::theta;
    use crate::numeric::dist2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(seed: u64, n: usize, count: usize) -> WeightedPointMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n * count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = (0..count).map(|_| rng.gen_range(0.0..2.0)).collect();
        WeightedPointMeasure::new(n, coords, weights).unwrap()
    }

    #[test]
    fn atom_inside_and_outside() {
        let inside = WeightedPointMeasure::new(5, vec![0.0; 5], vec![1.0]).unwrap();
        assert_eq!(inside.mass_in_ball(&[0.0; 5], 1.0).unwrap(), 1.0);
        let outside = WeightedPointMeasure::new(5, vec![2.0, 0.0, 0.0, 0.0, 0.0], vec![1.0]).unwrap();
        assert_eq!(outside.mass_in_ball(&[0.0; 5], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn boundary_atoms_count() {
        let mu = WeightedPointMeasure::new(2, vec![1.0, 0.0], vec![3.0]).unwrap();
        assert_eq!(mu.mass_in_ball(&[0.0, 0.0], 1.0).unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightedPointMeasure::new(2, vec![0.0, 0.0], vec![-1.0]).is_err());
        assert!(WeightedPointMeasure::new(2, vec![0.0, f64::INFINITY], vec![1.0]).is_err());
        assert!(WeightedPointMeasure::new(2, vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn ball_queries_bit_identical_to_brute_force() {
        let n = 4;
        let mu = random_measure(11, n, 2000);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let r = rng.gen_range(0.01..1.5);
            let mut brute = KahanSum::new();
            for i in 0..mu.len() {
                if dist2(mu.position(i), &x) <= r * r {
                    brute.add(mu.weight(i));
                }
            }
            assert_eq!(mu.mass_in_ball(&x, r).unwrap().to_bits(), brute.value().to_bits());
        }
    }

    #[test]
    fn total_mass_matches_sum() {
        let mu = random_measure(5, 3, 10_000);
        let naive: f64 = mu.weights().iter().sum();
        assert!((mu.total_mass() - naive).abs() <= 1e-12 * mu.total_mass());
    }

    #[test]
    fn blowup_identity_and_atom_example() {
        let exp = DensityExponent::default();
        let mu = random_measure(1, 5, 30);
        let same = mu.rescale_blowup(&[0.0; 5], 1.0, exp).unwrap();
        assert_eq!(same.coords(), mu.coords());
        assert_eq!(same.weights(), mu.weights());

        let d = 0.4;
        let atom = WeightedPointMeasure::new(5, vec![d, 0.0, 0.0, 0.0, 0.0], vec![1.0]).unwrap();
        let b = atom.rescale_blowup(&[0.0; 5], d, exp).unwrap();
        assert!((b.position(0)[0] - 1.0).abs() < 1e-15);
        assert!((b.weight(0) - d.powi(-1)).abs() < 1e-14);
    }

    #[test]
    fn jsonl_round_trip() {
        let mu = random_measure(2, 3, 20);
        let mut buf = Vec::new();
        mu.write_jsonl(&mut buf).unwrap();
        let back = WeightedPointMeasure::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.coords(), mu.coords());
        assert_eq!(back.weights(), mu.weights());
        assert!(WeightedPointMeasure::read_jsonl("{\"dim\":2,\"format\":\"x\"}\n".as_bytes()).is_err());
        assert!(WeightedPointMeasure::read_jsonl("{\"dim\":2,\"format\":\"wpm-v1\"}\n{\"x\":[1],\"w\":1}".as_bytes()).is_err());
    }

    #[test]
    fn resolution_is_small_nn_quantile() {
        let mu = WeightedPointMeasure::new(1, (0..100).map(|i| i as f64 * 0.1).collect(), vec![1.0; 100]).unwrap();
        assert!((mu.resolution() - 0.1).abs() < 1e-12);
        assert_eq!(WeightedPointMeasure::empty(3).resolution(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn blowup_scale_covariance(seed in 0u64..1000, lambda in 0.05f64..5.0, r in 0.05f64..2.0) {
            let exp = DensityExponent::default();
            let mu = random_measure(seed, 5, 40);
            let x = mu.position(0).to_vec();
            let b = mu.rescale_blowup(&x, lambda, exp).unwrap();
            let lhs = theta(&b, &[0.0; 5], r, exp).unwrap();
            let rhs = theta(&mu, &x, lambda * r, exp).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) || (lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn mass_is_monotone_in_radius(seed in 0u64..1000, r in 0.0f64..2.0, dr in 0.0f64..1.0) {
            let mu = random_measure(seed, 3, 200);
            let x = [0.1, -0.2, 0.3];
            let a = mu.mass_in_ball(&x, r.max(1e-9)).unwrap();
            let b = mu.mass_in_ball(&x, r.max(1e-9) + dr).unwrap();
            prop_assert!(b >= a);
        }
    }
}
