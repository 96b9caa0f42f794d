//! Midpoint quadrature on a regular grid anchored at a ball center.
//!
//! Cell centers sit at `center + (i + 1/2) h` for integer multi-indices `i`,
//! so no center ever coincides with the anchor. A cell belongs to the ball iff
//! its center does. Work is split into slabs along the first axis; slabs are
//! evaluated in parallel and merged in slab order, so results do not depend
//! on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Grid spacing policy for field quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Nominal spacing h.
    pub h: f64,
    /// Minimum number of cells per radius; small balls get a finer grid.
    pub min_cells: usize,
    /// Radius of the ball excised around singular kernels, in units of h.
    pub excision: f64,
}

impl QuadSpec {
    pub fn new(h: f64) -> Self {
        QuadSpec { h, min_cells: 8, excision: 2.0 }
    }

    pub fn with_min_cells(mut self, min_cells: usize) -> Self {
        self.min_cells = min_cells.max(1);
        self
    }

    /// Spacing used for a ball of the given radius.
    pub fn spacing_for(&self, radius: f64) -> f64 {
        self.h.min(radius / self.min_cells as f64)
    }

    pub fn refined(&self) -> Self {
        QuadSpec { h: self.h / 2.0, min_cells: self.min_cells * 2, excision: self.excision }
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::new(0.02)
    }
}

/// Visit every grid cell whose center lies in the closed ball `B_radius(center)`.
/// `visit(acc, x, y, |y|²)` receives the cell center `x` and offset `y = x - center`.
/// The caller multiplies by the cell volume `h^n`.
pub(crate) fn ball_cells<A, I, V, M>(center: &[f64], radius: f64, h: f64, init: I, visit: V, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[f64], &[f64], f64) + Sync,
    M: Fn(&mut A, A),
{
    let n = center.len();
    let r2 = radius * radius;
    let (lo, hi) = index_range(r2, h);
    let slabs: Vec<A> = (lo..=hi)
        .into_par_iter()
        .map(|i0| {
            let mut acc = init();
            let y0 = (i0 as f64 + 0.5) * h;
            let rem = r2 - y0 * y0;
            if rem < 0.0 {
                return acc;
            }
            let mut y = vec![0.0; n];
            let mut x = center.to_vec();
            y[0] = y0;
            x[0] = center[0] + y0;
            if n == 1 {
                visit(&mut acc, &x, &y, y0 * y0);
            } else {
                sweep(1, center, h, rem, y0 * y0, &mut y, &mut x, &mut acc, &visit);
            }
            acc
        })
        .collect();
    let mut it = slabs.into_iter();
    let mut total = it.next().unwrap_or_else(&init);
    for s in it {
        merge(&mut total, s);
    }
    total
}

fn index_range(rem2: f64, h: f64) -> (i64, i64) {
    let s = rem2.max(0.0).sqrt() / h;
    ((-s - 0.5).ceil() as i64, (s - 0.5).floor() as i64)
}

#[allow(clippy::too_many_arguments)]
fn sweep<A, V>(
    axis: usize,
    center: &[f64],
    h: f64,
    rem2: f64,
    d2: f64,
    y: &mut [f64],
    x: &mut [f64],
    acc: &mut A,
    visit: &V,
) where
    V: Fn(&mut A, &[f64], &[f64], f64),
{
    let n = center.len();
    let (lo, hi) = index_range(rem2, h);
    for i in lo..=hi {
        let yi = (i as f64 + 0.5) * h;
        let next = rem2 - yi * yi;
        if next < 0.0 {
            continue;
        }
        y[axis] = yi;
        x[axis] = center[axis] + yi;
        let dd = d2 + yi * yi;
        if axis + 1 == n {
            visit(acc, x, y, dd);
        } else {
            sweep(axis + 1, center, h, next, dd, y, x, acc, visit);
        }
    }
}

/// Compensated vector of bin sums, used as a quadrature accumulator.
#[derive(Debug, Clone)]
pub(crate) struct Bins {
    pub sums: Vec<crate::numeric::KahanSum>,
    pub count: u64,
}

impl Bins {
    pub fn new(len: usize) -> Self {
        Bins { sums: vec![crate::numeric::KahanSum::new(); len], count: 0 }
    }

    pub fn merge(&mut self, other: Bins) {
        for (a, b) in self.sums.iter_mut().zip(other.sums.iter()) {
            a.merge(b);
        }
        self.count += other.count;
    }

    pub fn values(&self, scale: f64) -> Vec<f64> {
        self.sums.iter().map(|s| s.value() * scale).collect()
    }
}
