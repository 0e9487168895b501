//! Weighted empirical measures.

use crate::error::{HoroError, Result};
use crate::manifold::Geometry;

/// Weight sums must equal one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Finite list of manifold points with nonnegative weights summing to one.
///
/// Measures whose weights are all equal are flagged uniform; masses of
/// uniform measures are computed as exact counts divided by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<P> {
    points: Vec<P>,
    weights: Vec<f64>,
    uniform: bool,
}

impl<P: Clone> EmpiricalMeasure<P> {
    pub fn uniform(points: Vec<P>) -> Result<Self> {
        if points.is_empty() {
            return Err(HoroError::invalid("empirical measure needs at least one point"));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(EmpiricalMeasure { points, weights, uniform: true })
    }

    /// Weights must be nonnegative and sum to one within `WEIGHT_SUM_TOL`.
    pub fn weighted(points: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(HoroError::invalid("empirical measure needs at least one point"));
        }
        HoroError::check_dim(points.len(), weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(HoroError::invalid("weights must be finite and nonnegative"));
        }
        let total: CompensatedSum = weights.iter().copied().collect();
        if (total.value() - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(HoroError::invalid(format!("weights sum to {} instead of 1", total.value())));
        }
        let uniform = weights.iter().all(|&w| w == weights[0]);
        if uniform {
            return Self::uniform(points);
        }
        Ok(EmpiricalMeasure { points, weights, uniform })
    }

    /// Rescales nonnegative raw weights to sum to one. The flag reports
    /// whether the input sum was off by more than `1e-9`.
    pub fn normalized(points: Vec<P>, raw: Vec<f64>) -> Result<(Self, bool)> {
        if raw.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(HoroError::invalid("weights must be finite and nonnegative"));
        }
        let total = raw.iter().copied().collect::<CompensatedSum>().value();
        if !(total > 0.0) {
            return Err(HoroError::invalid("weights sum to zero"));
        }
        let off = (total - 1.0).abs() > 1e-9;
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // Push the residual rounding into the largest weight.
        let mut weights = weights;
        let residual = 1.0 - weights.iter().copied().collect::<CompensatedSum>().value();
        if let Some((imax, _)) = weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            weights[imax] += residual;
        }
        Ok((Self::weighted(points, weights)?, off))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Total weight of the points selected by `pred`, summed exactly as a
    /// count for uniform measures.
    pub fn mass_where(&self, mut pred: impl FnMut(&P) -> bool) -> f64 {
        if self.uniform {
            let k = self.points.iter().filter(|p| pred(p)).count();
            k as f64 / self.points.len() as f64
        } else {
            self.iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).collect::<CompensatedSum>().value()
        }
    }

    /// As `mass_where`, with the point index passed to the predicate.
    pub fn mass_where_indexed(&self, mut pred: impl FnMut(usize, &P) -> bool) -> f64 {
        if self.uniform {
            let k = self.points.iter().enumerate().filter(|(i, p)| pred(*i, p)).count();
            k as f64 / self.points.len() as f64
        } else {
            self.iter()
                .enumerate()
                .filter(|(i, (p, _))| pred(*i, p))
                .map(|(_, (_, w))| w)
                .collect::<CompensatedSum>()
                .value()
        }
    }

    /// Index of the heaviest point (first on ties).
    pub fn heaviest(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn map_points<Q: Clone>(&self, f: impl FnMut(&P) -> Result<Q>) -> Result<EmpiricalMeasure<Q>> {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(EmpiricalMeasure { points, weights: self.weights.clone(), uniform: self.uniform })
    }

    /// Stable 64-bit FNV-1a fingerprint of the point rows and weights.
    pub fn fingerprint<G: Geometry<Point = P>>(&self, geometry: &G) -> String {
        let mut h = Fnv::new();
        h.write(geometry.context().tag().as_bytes());
        for (p, w) in self.iter() {
            for v in geometry.point_to_row(p) {
                h.write(&v.to_bits().to_le_bytes());
            }
            h.write(&w.to_bits().to_le_bytes());
        }
        format!("{:016x}", h.finish())
    }
}

pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
