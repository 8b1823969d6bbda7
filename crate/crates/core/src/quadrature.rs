//! Uniform periodic grids in angle coordinates and normalized Haar averaging.
//!
//! On a periodic grid the trapezoidal rule reduces to the plain node mean,
//! which is spectrally accurate for smooth integrands. Reductions run in
//! parallel over the outermost axis; each slab is summed in a fixed order
//! and the slab totals are combined pairwise, so results do not depend on
//! the number of worker threads.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product grid with `nodes[a]` equispaced nodes on `[0, 2π)` per axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    nodes: Vec<usize>,
}

impl PeriodicGrid {
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        if let Some(&n) = nodes.iter().find(|&&n| n < 4 || n % 2 != 0) {
            return Err(Error::InvalidGrid(format!(
                "node count {n} must be even and at least 4"
            )));
        }
        Ok(Self { nodes })
    }

    pub fn circle(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(vec![n, n])
    }

    pub fn torus(n_s: usize, n_t: usize) -> Result<Self> {
        Self::new(vec![n_s, n_t])
    }

    pub fn cube(n: usize, dim: usize) -> Result<Self> {
        Self::new(vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_nodes(&self) -> usize {
        *self.nodes.iter().min().expect("non-empty")
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        TAU / self.nodes[axis] as f64
    }

    /// Angle of node `i` on `axis`.
    #[inline]
    pub fn angle(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    /// Angles of the node with row-major flat index `flat` (last axis fastest).
    pub fn point(&self, mut flat: usize, out: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let n = self.nodes[axis];
            out[axis] = self.angle(axis, flat % n);
            flat /= n;
        }
    }

    /// Samples `field` at every node, row-major with the last axis fastest.
    pub fn sample<F>(&self, field: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let inner = self.len() / self.nodes[0];
        let dim = self.dim();
        (0..self.nodes[0])
            .into_par_iter()
            .flat_map_iter(|i0| {
                let mut p = vec![0.0; dim];
                let base = i0 * inner;
                let field = &field;
                (0..inner).map(move |j| {
                    self.point(base + j, &mut p);
                    field(&p)
                })
            })
            .collect()
    }

    /// Samples `K` fallible fields together at every node, one column per field.
    pub fn sample_fields<const K: usize, F>(&self, field: F) -> Result<[Vec<f64>; K]>
    where
        F: Fn(&[f64]) -> Result<[f64; K]> + Sync,
    {
        let inner = self.len() / self.nodes[0];
        let dim = self.dim();
        let slabs: Vec<Vec<[f64; K]>> = (0..self.nodes[0])
            .into_par_iter()
            .map(|i0| {
                let mut p = vec![0.0; dim];
                (0..inner)
                    .map(|j| {
                        self.point(i0 * inner + j, &mut p);
                        field(&p)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(std::array::from_fn(|k| slabs.iter().flatten().map(|v| v[k]).collect()))
    }

    /// Normalized Haar averages of `K` fields evaluated together at each node.
    pub fn average_fields<const K: usize, F>(&self, field: F) -> Result<[f64; K]>
    where
        F: Fn(&[f64]) -> Result<[f64; K]> + Sync,
    {
        let inner = self.len() / self.nodes[0];
        let dim = self.dim();
        let slabs: Vec<[f64; K]> = (0..self.nodes[0])
            .into_par_iter()
            .map(|i0| {
                let mut p = vec![0.0; dim];
                let mut acc = [Compensated::default(); K];
                for j in 0..inner {
                    self.point(i0 * inner + j, &mut p);
                    let v = field(&p)?;
                    for (a, x) in acc.iter_mut().zip(v) {
                        a.add(x);
                    }
                }
                Ok(acc.map(|a| a.total()))
            })
            .collect::<Result<_>>()?;
        let n = self.len() as f64;
        let mut out = [0.0; K];
        for (k, o) in out.iter_mut().enumerate() {
            let column: Vec<f64> = slabs.iter().map(|s| s[k]).collect();
            *o = pairwise_sum(&column) / n;
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "grid average" });
        }
        Ok(out)
    }
}

/// Uniform mean of grid samples.
pub fn haar_average(samples: &[f64], grid: &PeriodicGrid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "expected {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "grid samples" });
    }
    Ok(pairwise_sum(samples) / samples.len() as f64)
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut acc = Compensated::default();
        for &v in values {
            acc.add(v);
        }
        return acc.total();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
