//! The `A_d` simplex resonance family on the hyperplane `H_d ⊂ ℝ^{d+1}`.
//!
//! Roots `k_ij = (e_i - e_j)/√2` are written in the Helmert orthonormal basis
//! of `H_d`. Points of the simplex torus are parameterized by angles
//! `ϑ_1, …, ϑ_d` with the gauge `ϑ_{d+1} = 0`, so that `k_ij · x = ϑ_i - ϑ_j`
//! and the Haar average is a plain average over `[0, 2π)^d`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{integrands_at, triple_from_weighted_sums, FunctionalTriple, Jet, LogDensityJet};
use crate::quadrature::PeriodicGrid;
use crate::transfer::{envelope_means, shifted_triple, ShellMetric};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 6;
/// Largest Euclidean realization dimension handled by the shell sums.
pub const MAX_EUCLIDEAN_DIM: usize = 3;
pub const DEFAULT_BUDGET: u128 = 1 << 24;
pub const MIN_NODES: usize = 16;
/// Below this many nodes per angle the run is marked as reduced accuracy.
pub const FULL_ACCURACY_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWaveSystem {
    d: usize,
    /// `(i, j)` with `i < j`, zero-based over `0..=d`.
    pairs: Vec<(usize, usize)>,
    /// Root `k_ij` for each pair, in Helmert coordinates of `H_d`.
    roots: Vec<Vec<f64>>,
    triangles: Vec<(usize, usize, usize)>,
}

impl SimplexWaveSystem {
    pub fn build(d: usize) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&d) {
            return Err(Error::DimensionOutOfRange {
                dim: d,
                min: MIN_DIM,
                max: MAX_DIM,
            });
        }
        // Helmert basis b_k = (e_1 + … + e_k - k e_{k+1}) / √(k(k+1)).
        let basis: Vec<Vec<f64>> = (1..=d)
            .map(|k| {
                let norm = ((k * (k + 1)) as f64).sqrt();
                (0..=d)
                    .map(|i| match i.cmp(&k) {
                        std::cmp::Ordering::Less => 1.0 / norm,
                        std::cmp::Ordering::Equal => -(k as f64) / norm,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                    .collect()
            })
            .collect();
        let mut pairs = Vec::new();
        let mut roots = Vec::new();
        for i in 0..=d {
            for j in i + 1..=d {
                pairs.push((i, j));
                roots.push(
                    basis
                        .iter()
                        .map(|b| (b[i] - b[j]) / std::f64::consts::SQRT_2)
                        .collect(),
                );
            }
        }
        let mut triangles = Vec::new();
        for i in 0..=d {
            for j in i + 1..=d {
                for k in j + 1..=d {
                    triangles.push((i, j, k));
                }
            }
        }
        Ok(Self {
            d,
            pairs,
            roots,
            triangles,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    pub fn triangles(&self) -> &[(usize, usize, usize)] {
        &self.triangles
    }

    pub fn root(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.pairs
            .iter()
            .position(|&p| p == (i, j))
            .map(|n| self.roots[n].as_slice())
    }

    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.roots
            .iter()
            .map(|a| self.roots.iter().map(|b| dot(a, b)).collect())
            .collect()
    }

    /// Gram matrix of the angle frequencies `k_{a,d+1}`: `(1 + δ_ab)/2`.
    pub fn angle_metric(&self) -> ShellMetric {
        let gram = (0..self.d)
            .map(|a| {
                let ka = self.root(a, self.d).expect("root to last vertex");
                (0..self.d)
                    .map(|b| dot(ka, self.root(b, self.d).expect("root to last vertex")))
                    .collect()
            })
            .collect();
        ShellMetric::new(gram)
    }

    /// Angle of pair `(i, j)` at gauge-fixed angles `ϑ` (length `d`).
    fn pair_angle(&self, theta: &[f64], (i, j): (usize, usize)) -> f64 {
        let at = |k: usize| if k == self.d { 0.0 } else { theta[k] };
        at(i) - at(j)
    }

    /// Jet of `φ_d = Σ cos(k_ij · x)` at gauge-fixed angles.
    pub fn phi_jet_at<const D: usize>(&self, theta: &[f64]) -> Jet<D> {
        assert_eq!(D, self.d, "jet dimension must equal the simplex dimension");
        let mut value = 0.0;
        let mut grad = [0.0; D];
        let mut hess = [[0.0; D]; D];
        let mut third = [[[0.0; D]; D]; D];
        for (&pair, k) in self.pairs.iter().zip(&self.roots) {
            let (sn, cs) = self.pair_angle(theta, pair).sin_cos();
            value += cs;
            for a in 0..D {
                grad[a] -= sn * k[a];
                for b in 0..D {
                    hess[a][b] -= cs * k[a] * k[b];
                    for c in 0..D {
                        third[a][b][c] += sn * k[a] * k[b] * k[c];
                    }
                }
            }
        }
        Jet::from_symmetric(value, grad, hess, third)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f_{d,ε} = Z⁻¹ e^{εφ_d}` on the simplex torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexExpFamily {
    pub eps: f64,
    pub waves: SimplexWaveSystem,
}

impl SimplexExpFamily {
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        Ok(Self {
            eps,
            waves: SimplexWaveSystem::build(d)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.waves.dim()
    }

    pub fn log_jet_at<const D: usize>(&self, theta: &[f64]) -> LogDensityJet<D> {
        LogDensityJet::new(self.waves.phi_jet_at::<D>(theta).scaled(self.eps))
    }
}

/// Default nodes per angle for dimension `d` under the default budget.
pub fn default_nodes(d: usize) -> usize {
    match d {
        0..=4 => 32,
        5 => 24,
        _ => 16,
    }
}

/// Whether a run at `nodes` per angle counts as reduced accuracy.
pub fn reduced_accuracy(nodes: usize) -> bool {
    nodes < FULL_ACCURACY_NODES
}

fn simplex_grid(d: usize, nodes: usize, budget: u128) -> Result<PeriodicGrid> {
    if nodes < MIN_NODES {
        return Err(Error::InvalidGrid(format!(
            "simplex quadrature needs at least {MIN_NODES} nodes per angle, got {nodes}"
        )));
    }
    let total = (nodes as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::Budget {
            nodes,
            dim: d,
            total,
            budget,
        });
    }
    PeriodicGrid::cube(nodes, d)
}

/// Samples `[w, w j1, w j2, w j3]` with `w = e^{εφ_d}` on the angle grid.
fn weighted_fields<const D: usize>(fam: &SimplexExpFamily, grid: &PeriodicGrid) -> Result<[Vec<f64>; 4]> {
    grid.sample_fields(|p| {
        let jet = fam.log_jet_at::<D>(p);
        let w = jet.u().exp();
        let v = integrands_at(&jet)?;
        Ok([w, w * v.j1, w * v.j2, w * v.j3])
    })
}

fn weighted_averages<const D: usize>(fam: &SimplexExpFamily, grid: &PeriodicGrid) -> Result<[f64; 4]> {
    grid.average_fields(|p| {
        let jet = fam.log_jet_at::<D>(p);
        let w = jet.u().exp();
        let v = integrands_at(&jet)?;
        Ok([w, w * v.j1, w * v.j2, w * v.j3])
    })
}

macro_rules! dispatch_dim {
    ($d:expr, $f:ident, $($arg:expr),*) => {
        match $d {
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            4 => $f::<4>($($arg),*),
            5 => $f::<5>($($arg),*),
            6 => $f::<6>($($arg),*),
            d => Err(Error::DimensionOutOfRange { dim: d, min: MIN_DIM, max: MAX_DIM }),
        }
    };
}

/// Haar-average triple on a `nodes^d` gauge-fixed angle grid.
pub fn simplex_functionals(fam: &SimplexExpFamily, nodes: usize) -> Result<FunctionalTriple> {
    simplex_functionals_with_budget(fam, nodes, DEFAULT_BUDGET)
}

pub fn simplex_functionals_with_budget(fam: &SimplexExpFamily, nodes: usize, budget: u128) -> Result<FunctionalTriple> {
    let grid = simplex_grid(fam.dim(), nodes, budget)?;
    let sums = dispatch_dim!(fam.dim(), weighted_averages, fam, &grid)?;
    Ok(triple_from_weighted_sums(sums))
}

/// Triple of the Euclidean realization `e^{εφ_d - |x|²/(2R²)}` on `H_d ≅ ℝ^d`.
pub fn simplex_euclidean_functionals(
    fam: &SimplexExpFamily,
    radius: f64,
    nodes: usize,
    max_mode: usize,
) -> Result<FunctionalTriple> {
    crate::error::check_positive("radius", radius)?;
    let d = fam.dim();
    if d > MAX_EUCLIDEAN_DIM {
        return Err(Error::DimensionOutOfRange {
            dim: d,
            min: MIN_DIM,
            max: MAX_EUCLIDEAN_DIM,
        });
    }
    let grid = simplex_grid(d, nodes, DEFAULT_BUDGET)?;
    let fields = dispatch_dim!(d, weighted_fields, fam, &grid)?;
    let means = envelope_means(&fields, &grid, &fam.waves.angle_metric(), radius, max_mode)?;
    Ok(shifted_triple(&means, d, radius.powi(-2)))
}

/// Exact expansion coefficients of the simplex family in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexCoefficients {
    pub s: Ratio<i64>,
    pub alpha: Ratio<i64>,
    pub gamma: Ratio<i64>,
    pub delta: Ratio<i64>,
    pub slope: Ratio<i64>,
}

/// `S = d(d+1)/4`, `α = d(d+1)(d-1)/8`, `γ = α/2`, `δ = -α/4`, slope `-(d-1)/8`.
pub fn simplex_closed_form_coeffs(d: u32) -> SimplexCoefficients {
    let d = i64::from(d);
    let cube = d * (d + 1) * (d - 1);
    SimplexCoefficients {
        s: Ratio::new(d * (d + 1), 4),
        alpha: Ratio::new(cube, 8),
        gamma: Ratio::new(cube, 16),
        delta: Ratio::new(-cube, 32),
        slope: Ratio::new(-(d - 1), 8),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus2d::{torus_functionals, TorusExpFamily};

    #[test]
    fn counts() {
        for d in 2..=6 {
            let w = SimplexWaveSystem::build(d).unwrap();
            assert_eq!(w.roots().len(), d * (d + 1) / 2);
            assert_eq!(w.triangles().len(), (d + 1) * d * (d - 1) / 6);
        }
        assert!(SimplexWaveSystem::build(1).is_err());
        assert!(SimplexWaveSystem::build(7).is_err());
    }

    #[test]
    fn unit_roots_and_allowed_dots() {
        for d in 2..=6 {
            let w = SimplexWaveSystem::build(d).unwrap();
            for row in w.gram() {
                for g in row {
                    let ok = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().any(|v| (g - v).abs() < 1e-14);
                    assert!(ok, "dot {g}");
                }
            }
            for k in w.roots() {
                assert!((dot(k, k) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn triangle_relations() {
        let w = SimplexWaveSystem::build(4).unwrap();
        for &(i, j, k) in w.triangles() {
            let (a, b, c) = (w.root(i, j).unwrap(), w.root(j, k).unwrap(), w.root(i, k).unwrap());
            for x in 0..4 {
                assert!((a[x] + b[x] - c[x]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn d2_gram_is_a_triad() {
        let w = SimplexWaveSystem::build(2).unwrap();
        let g = w.gram();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.5 };
                assert!((g[i][j].abs() - expect).abs() < 1e-14);
            }
        }
        // k12 and k23 enclose 120 degrees, like the triad.
        assert!((g[0][2] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn angle_map_matches_roots() {
        let w = SimplexWaveSystem::build(3).unwrap();
        let metric = w.angle_metric();
        assert!((metric.norm_sq(&[1, 0, 0]) - 1.0).abs() < 1e-14);
        assert!((metric.norm_sq(&[1, -1, 0]) - 1.0).abs() < 1e-14);
        assert!((metric.norm_sq(&[1, 1, 0]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_phi_is_minus_phi() {
        let w = SimplexWaveSystem::build(3).unwrap();
        let jet = w.phi_jet_at::<3>(&[0.3, -1.2, 2.0]);
        let lap: f64 = (0..3).map(|a| jet.hess()[a][a]).sum();
        assert!((lap + jet.value()).abs() < 1e-13);
    }

    #[test]
    fn d2_matches_hexagonal_model() {
        let fam = SimplexExpFamily::new(2, 0.05).unwrap();
        let s = simplex_functionals(&fam, 64).unwrap();
        let t = torus_functionals(&TorusExpFamily::new(0.05), &PeriodicGrid::square(64).unwrap()).unwrap();
        assert!(s.max_abs_diff(&t) <= 1e-10);
        assert!((s.defect - t.defect).abs() <= 1e-12);
    }

    #[test]
    fn flat_at_zero_eps() {
        let t = simplex_functionals(&SimplexExpFamily::new(3, 0.0).unwrap(), 16).unwrap();
        assert!(t.components().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn budget_is_enforced() {
        let fam = SimplexExpFamily::new(6, 0.05).unwrap();
        match simplex_functionals(&fam, 24) {
            Err(Error::Budget { nodes, dim, total, .. }) => {
                assert_eq!((nodes, dim), (24, 6));
                assert_eq!(total, 24u128.pow(6));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(simplex_functionals(&fam, 8).is_err());
    }

    #[test]
    fn quadratic_coefficient() {
        // The even part removes the cubic term, which alone is a 1% shift of
        // 𝓘 at d = 3.
        let eps = 0.01;
        for d in [2, 3] {
            let at = |e: f64| simplex_functionals(&SimplexExpFamily::new(d, e).unwrap(), 32).unwrap();
            let (p, m) = (at(eps), at(-eps));
            let s = (d * (d + 1)) as f64 / 4.0;
            for (a, b) in p.components().iter().zip(m.components()) {
                let even = 0.5 * (a + b) / (eps * eps);
                assert!((even / s - 1.0).abs() <= 1e-2, "d {d}: {even}");
            }
            assert!((p.q_val / (eps * eps) / s - 1.0).abs() <= 1e-2);
            assert!((p.d_val / (eps * eps) / s - 1.0).abs() <= 1e-2);
        }
    }

    #[test]
    fn defect_negative() {
        for (d, nodes) in [(2, 32), (3, 32), (4, 20)] {
            let t = simplex_functionals(&SimplexExpFamily::new(d, 0.05).unwrap(), nodes).unwrap();
            assert!(t.defect < 0.0, "d {d}: {}", t.defect);
        }
    }

    #[test]
    fn closed_forms() {
        let c = simplex_closed_form_coeffs(2);
        assert_eq!(
            (c.s, c.alpha, c.gamma, c.delta, c.slope),
            (Ratio::new(3, 2), Ratio::new(3, 4), Ratio::new(3, 8), Ratio::new(-3, 16), Ratio::new(-1, 8))
        );
        let c = simplex_closed_form_coeffs(3);
        assert_eq!(
            (c.s, c.alpha, c.gamma, c.delta, c.slope),
            (Ratio::from(3), Ratio::from(3), Ratio::new(3, 2), Ratio::new(-3, 4), Ratio::new(-1, 4))
        );
        assert_eq!(simplex_closed_form_coeffs(1).slope, Ratio::from(0));
    }

    #[test]
    fn euclidean_d2_matches_triad_transfer() {
        let fam = SimplexExpFamily::new(2, 0.04).unwrap();
        let s = simplex_euclidean_functionals(&fam, 3.0, 64, 16).unwrap();
        let env = crate::transfer::EnvelopeFamily::new(0.04, 3.0).unwrap();
        let t = crate::transfer::euclidean_functionals(&env, &PeriodicGrid::square(64).unwrap(), 16).unwrap();
        assert!(s.max_abs_diff(&t) <= 1e-12, "{s:?} {t:?}");
    }

    #[test]
    fn euclidean_large_radius_limit() {
        let fam = SimplexExpFamily::new(3, 0.05).unwrap();
        let e = simplex_euclidean_functionals(&fam, 1e5, 32, 12).unwrap();
        let t = simplex_functionals(&fam, 32).unwrap();
        // Only the zero shell survives, leaving the exact c_R shift.
        let shifted = shifted_triple(
            &crate::transfer::EnvelopeMeans {
                trace: t.i_val,
                trace_sq: t.q_val,
                third: t.d_val,
            },
            3,
            1e-10,
        );
        assert!(e.max_abs_diff(&shifted) <= 1e-15, "{e:?} {shifted:?}");
        assert!(simplex_euclidean_functionals(&SimplexExpFamily::new(4, 0.05).unwrap(), 10.0, 16, 4).is_err());
    }
}
