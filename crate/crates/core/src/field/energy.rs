use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::{ball_cells, check_ball, norm2, CurvatureField, QuadSpec};
use crate::error::Result;
use crate::measure::{validate_query, Measure};
use crate::numeric::KahanSum;

const CACHE_LIMIT: usize = 1 << 16;

/// The energy measure |F|² dV, evaluated by midpoint quadrature.
///
/// Cells within `quad.excision · h` of the declared singular set are dropped.
/// Ball masses are memoized by the exact bits of the query.
pub struct FieldEnergyMeasure {
    field: Arc<dyn CurvatureField>,
    quad: QuadSpec,
    cache: RwLock<HashMap<Vec<u64>, f64>>,
}

impl FieldEnergyMeasure {
    pub fn new(field: Arc<dyn CurvatureField>, quad: QuadSpec) -> Self {
        FieldEnergyMeasure { field, quad, cache: RwLock::new(HashMap::new()) }
    }

    pub fn field(&self) -> &dyn CurvatureField {
        self.field.as_ref()
    }

    pub fn quad(&self) -> &QuadSpec {
        &self.quad
    }

    fn integrate(&self, x: &[f64], r: f64) -> f64 {
        let field = self.field.as_ref();
        let n = field.dim();
        let m = field.lie_dim();
        let h = self.quad.spacing_for(r);
        let cut = self.quad.excision * h;
        let sum = ball_cells(
            x,
            r,
            h,
            || (KahanSum::new(), vec![0.0; m * n * n]),
            |(acc, buf), pt, _, _| {
                if field.singular_distance(pt) < cut {
                    return;
                }
                field.sample_into(pt, buf);
                acc.add(norm2(buf));
            },
            |a, b| a.0.merge(&b.0),
        );
        sum.0.value() * h.powi(n as i32)
    }
}

impl Measure for FieldEnergyMeasure {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn mass_in_ball(&self, x: &[f64], r: f64) -> Result<f64> {
        validate_query(self.dim(), x, r)?;
        check_ball(self.field.as_ref(), x, r)?;
        let mut key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        key.push(r.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.integrate(x, r);
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        Ok(v)
    }
}
