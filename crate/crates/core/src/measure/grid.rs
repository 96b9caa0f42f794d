use std::io::{Read, Write};

use super::{validate_query, Measure, WeightedPointMeasure};
use crate::error::{check_finite, Error, Result};
use crate::numeric::KahanSum;

const MAGIC: &[u8; 4] = b"GRD1";

/// Sample storage of a [`GridDensity`].
#[derive(Debug, Clone, PartialEq)]
pub enum GridValues {
    /// One value per cell, row-major (last axis fastest).
    Dense(Vec<f64>),
    /// The same value in every cell; avoids materializing huge uniform grids.
    Uniform(f64),
}

/// Piecewise-constant density on a regular grid. Cell `i` has center
/// `origin + (i + 1/2) h` and contributes `value · h^n` to a ball iff its
/// center lies in the closed ball.
#[derive(Debug, Clone)]
pub struct GridDensity {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    extents: Vec<usize>,
    values: GridValues,
}

impl GridDensity {
    pub fn new(origin: Vec<f64>, spacing: f64, extents: Vec<usize>, values: GridValues) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || extents.len() != dim {
            return Err(Error::input("grid origin and extents must share a positive dimension"));
        }
        check_finite(&origin, "grid origin")?;
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::input(format!("grid spacing {spacing} must be positive")));
        }
        match &values {
            GridValues::Dense(v) => {
                let cells = extents.iter().try_fold(1usize, |a, &e| a.checked_mul(e));
                if cells != Some(v.len()) {
                    return Err(Error::input("grid value count does not match extents"));
                }
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::input("grid values must be finite and nonnegative"));
                }
            }
            GridValues::Uniform(c) => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::input("grid values must be finite and nonnegative"));
                }
            }
        }
        Ok(GridDensity { dim, origin, spacing, extents, values })
    }

    /// Constant density `value` on the cube [lo, hi]^n, cells of size h.
    pub fn uniform_cube(n: usize, lo: f64, hi: f64, h: f64, value: f64) -> Result<Self> {
        let cells = ((hi - lo) / h).round() as usize;
        Self::new(vec![lo; n], h, vec![cells; n], GridValues::Uniform(value))
    }

    /// Samples `density` at the cell centers of the cube [lo, hi]^n.
    pub fn sample(n: usize, lo: f64, hi: f64, h: f64, density: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let cells = ((hi - lo) / h).round() as usize;
        let extents = vec![cells; n];
        let total = cells.checked_pow(n as u32).ok_or_else(|| Error::input("grid too large"))?;
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        for _ in 0..total {
            for a in 0..n {
                x[a] = lo + (idx[a] as f64 + 0.5) * h;
            }
            values.push(density(&x));
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < cells {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self::new(vec![lo; n], h, extents, GridValues::Dense(values))
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn values(&self) -> &GridValues {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.extents.iter().product()
    }

    fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    #[inline]
    fn value_at(&self, flat: usize) -> f64 {
        match &self.values {
            GridValues::Dense(v) => v[flat],
            GridValues::Uniform(c) => *c,
        }
    }

    /// Midpoint-rule integral over the whole grid.
    pub fn total_mass(&self) -> f64 {
        let vol = self.cell_volume();
        match &self.values {
            GridValues::Dense(v) => v.iter().map(|x| x * vol).collect::<KahanSum>().value(),
            GridValues::Uniform(c) => c * vol * self.cell_count() as f64,
        }
    }

    /// Range of cell indices along `axis` whose centers satisfy |c - x| <= half.
    fn axis_range(&self, axis: usize, x: f64, half: f64) -> Option<(usize, usize)> {
        let o = self.origin[axis];
        let h = self.spacing;
        let lo = ((x - half - o) / h - 0.5).ceil().max(0.0);
        let hi = ((x + half - o) / h - 0.5).floor().min(self.extents[axis] as f64 - 1.0);
        if hi < lo {
            return None;
        }
        let (mut lo, mut hi) = (lo as usize, hi as usize);
        // the float bounds may be off by one cell; fix them against the exact test
        let center = |i: usize| o + (i as f64 + 0.5) * h;
        while lo <= hi && (center(lo) - x).abs() > half {
            lo += 1;
        }
        while hi >= lo && (center(hi) - x).abs() > half {
            if hi == 0 {
                return None;
            }
            hi -= 1;
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Each cell as an atom at its center with weight value · h^n; empty cells are skipped.
    pub fn to_point_measure(&self) -> Result<WeightedPointMeasure> {
        let n = self.dim;
        let vol = self.cell_volume();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; n];
        for flat in 0..self.cell_count() {
            let v = self.value_at(flat);
            if v > 0.0 {
                for a in 0..n {
                    coords.push(self.origin[a] + (idx[a] as f64 + 0.5) * self.spacing);
                }
                weights.push(v * vol);
            }
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < self.extents[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        WeightedPointMeasure::new(n, coords, weights)
    }

    pub fn write_binary(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for o in &self.origin {
            out.write_all(&o.to_le_bytes())?;
        }
        out.write_all(&self.spacing.to_le_bytes())?;
        for e in &self.extents {
            out.write_all(&(*e as u32).to_le_bytes())?;
        }
        for flat in 0..self.cell_count() {
            out.write_all(&self.value_at(flat).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut input: impl Read) -> Result<Self> {
        let bad = |what: &str| Error::input(format!("grid file: {what}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u = [0u8; 4];
        let mut f = [0u8; 8];
        input.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
        let n = u32::from_le_bytes(u) as usize;
        if n == 0 || n > 64 {
            return Err(bad("implausible dimension"));
        }
        let mut origin = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut f).map_err(|_| bad("truncated origin"))?;
            origin.push(f64::from_le_bytes(f));
        }
        input.read_exact(&mut f).map_err(|_| bad("truncated spacing"))?;
        let spacing = f64::from_le_bytes(f);
        let mut extents = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut u).map_err(|_| bad("truncated extents"))?;
            extents.push(u32::from_le_bytes(u) as usize);
        }
        let cells = extents
            .iter()
            .try_fold(1usize, |a, &e| a.checked_mul(e))
            .ok_or_else(|| bad("extents overflow"))?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != cells * 8 {
            return Err(bad("value block has the wrong length"));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(origin, spacing, extents, GridValues::Dense(values))
    }
}

impl Measure for GridDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.dim, x, r)?;
        let n = self.dim;
        let h = self.spacing;
        let mut acc = KahanSum::new();
        let mut strides = vec![1usize; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.extents[a + 1];
        }
        // recursive sweep: fix leading axes, then the last axis is an interval
        fn sweep(
            g: &GridDensity,
            x: &[f64],
            axis: usize,
            rem2: f64,
            flat: usize,
            strides: &[usize],
            acc: &mut KahanSum,
        ) {
            let n = g.dim;
            let half = rem2.max(0.0).sqrt();
            let Some((lo, hi)) = g.axis_range(axis, x[axis], half) else {
                return;
            };
            if axis + 1 == n {
                if let GridValues::Uniform(c) = g.values {
                    acc.add(c * (hi - lo + 1) as f64);
                    return;
                }
            }
            let o = g.origin[axis];
            for i in lo..=hi {
                let c = o + (i as f64 + 0.5) * g.spacing - x[axis];
                let next = rem2 - c * c;
                if next < 0.0 {
                    continue;
                }
                let f = flat + i * strides[axis];
                if axis + 1 == n {
                    acc.add(g.value_at(f));
                } else {
                    sweep(g, x, axis + 1, next, f, strides, acc);
                }
            }
        }
        sweep(self, x, 0, r * r, 0, &strides, &mut acc);
        Ok(acc.value() * h.powi(n as i32))
    }

    fn resolution(&self) -> f64 {
        self.spacing
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{dist2, unit_ball_volume};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_ball_volume_in_five_dimensions() {
        let g = GridDensity::uniform_cube(5, -1.0, 1.0, 0.02, 1.0).unwrap();
        let m = g.mass_in_ball(&[0.0; 5], 0.5).unwrap();
        let exact = unit_ball_volume(5) * 0.5f64.powi(5);
        assert!((m / exact - 1.0).abs() < 0.02, "{m} vs {exact}");
    }

    #[test]
    fn ball_mass_matches_cell_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = GridDensity::sample(3, -1.0, 1.0, 0.1, |x| 1.0 + x[0] * x[0] + 0.5 * x[2]).unwrap();
        let pm = g.to_point_measure().unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = rng.gen_range(0.05..1.0);
            let a = g.mass_in_ball(&x, r).unwrap();
            let b: f64 = (0..pm.len())
                .filter(|&i| dist2(pm.position(i), &x) <= r * r)
                .map(|i| pm.weight(i))
                .sum();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn total_mass_matches_induced_point_measure() {
        let g = GridDensity::sample(4, -1.0, 1.0, 0.125, |x| x.iter().map(|v| v * v).sum()).unwrap();
        let pm = g.to_point_measure().unwrap();
        assert!((g.total_mass() - pm.total_mass()).abs() <= 1e-10 * g.total_mass());
    }

    #[test]
    fn binary_round_trip_and_rejections() {
        let g = GridDensity::sample(2, -1.0, 1.0, 0.5, |x| x[0].abs() + x[1].abs()).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        let back = GridDensity::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.values(), g.values());
        assert_eq!(back.extents(), g.extents());
        assert!(GridDensity::read_binary(&buf[..buf.len() - 3]).is_err());
        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(GridDensity::read_binary(wrong.as_slice()).is_err());
        assert!(GridDensity::new(vec![0.0], 1.0, vec![2], GridValues::Dense(vec![1.0, -1.0])).is_err());
    }
}
