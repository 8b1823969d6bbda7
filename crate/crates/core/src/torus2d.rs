//! The hexagonal triad model on the triangular torus and the circle family.
//!
//! Points of the torus are parameterized by the angles `(s, t)` with
//! `θ₁ = s`, `θ₂ = t`, `θ₃ = -(s + t)`; the normalized Haar average becomes the
//! plain average over `[0, 2π)²`. Derivatives are taken in the ambient
//! coordinates `x ∈ ℝ²`, where `θⱼ = kⱼ · x`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jets::{integrands_at, triple_from_weighted_sums, FunctionalTriple, Jet, LogDensityJet};
use crate::quadrature::PeriodicGrid;

/// The resonant unit vectors `k₁ + k₂ + k₃ = 0` and their Gram table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadWaveSystem {
    pub k: [[f64; 2]; 3],
    pub gram: [[f64; 3]; 3],
}

impl TriadWaveSystem {
    pub fn hexagonal() -> Self {
        let h = 3f64.sqrt() / 2.0;
        let k = [[1.0, 0.0], [-0.5, h], [-0.5, -h]];
        let mut gram = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] = k[i][0] * k[j][0] + k[i][1] * k[j][1];
            }
        }
        Self { k, gram }
    }

    /// Jet of `φ = cos θ₁ + cos θ₂ + cos θ₃` at angles `(s, t)`.
    pub fn phi_jet_at(&self, s: f64, t: f64) -> Jet<2> {
        let thetas = [s, t, -(s + t)];
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        let mut third = [[[0.0; 2]; 2]; 2];
        for (kj, &th) in self.k.iter().zip(&thetas) {
            let (sn, cs) = th.sin_cos();
            value += cs;
            for a in 0..2 {
                grad[a] -= sn * kj[a];
                for b in 0..2 {
                    hess[a][b] -= cs * kj[a] * kj[b];
                    for c in 0..2 {
                        third[a][b][c] += sn * kj[a] * kj[b] * kj[c];
                    }
                }
            }
        }
        Jet::from_symmetric(value, grad, hess, third)
    }

    /// Squared length `|m k₁ + n k₂|² = m² + n² - mn` of a lattice frequency.
    pub fn frequency_norm_sq(m: i64, n: i64) -> f64 {
        (m * m + n * n - m * n) as f64
    }
}

impl Default for TriadWaveSystem {
    fn default() -> Self {
        Self::hexagonal()
    }
}

/// `f_ε = Z⁻¹ e^{εφ}` on the triangular torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusExpFamily {
    pub eps: f64,
    pub waves: TriadWaveSystem,
}

impl TorusExpFamily {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            waves: TriadWaveSystem::hexagonal(),
        }
    }

    /// Unnormalized log-density jet `u = εφ` at `(s, t)`.
    pub fn log_jet_at(&self, s: f64, t: f64) -> LogDensityJet<2> {
        LogDensityJet::new(self.waves.phi_jet_at(s, t).scaled(self.eps))
    }
}

/// `f_ε = Z⁻¹ e^{ε cos x}` on the flat circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleExpFamily {
    pub eps: f64,
}

impl CircleExpFamily {
    pub fn new(eps: f64) -> Self {
        Self { eps }
    }

    pub fn log_jet_at(&self, x: f64) -> LogDensityJet<1> {
        let (sn, cs) = x.sin_cos();
        let e = self.eps;
        LogDensityJet::new(Jet::from_symmetric(e * cs, [-e * sn], [[-e * cs]], [[[e * sn]]]))
    }
}

/// Exact weighted-average triple of the torus family at this `ε`.
pub fn torus_functionals(family: &TorusExpFamily, grid: &PeriodicGrid) -> Result<FunctionalTriple> {
    check_axes(grid, 2)?;
    let sums = grid.average_fields(|p| {
        let jet = family.log_jet_at(p[0], p[1]);
        let w = jet.u().exp();
        let v = integrands_at(&jet)?;
        Ok([w, w * v.j1, w * v.j2, w * v.j3])
    })?;
    Ok(triple_from_weighted_sums(sums))
}

pub fn circle_functionals(family: &CircleExpFamily, grid: &PeriodicGrid) -> Result<FunctionalTriple> {
    check_axes(grid, 1)?;
    let sums = grid.average_fields(|p| {
        let jet = family.log_jet_at(p[0]);
        let w = jet.u().exp();
        let v = integrands_at(&jet)?;
        Ok([w, w * v.j1, w * v.j2, w * v.j3])
    })?;
    Ok(triple_from_weighted_sums(sums))
}

fn check_axes(grid: &PeriodicGrid, dim: usize) -> Result<()> {
    if grid.dim() != dim {
        return Err(crate::Error::InvalidGrid(format!(
            "expected a {dim}-axis grid, got {} axes",
            grid.dim()
        )));
    }
    Ok(())
}

/// The nine unweighted averages of `φ` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexagonalAverages {
    pub grad_sq: f64,
    pub phi_grad_sq: f64,
    pub hess_sq: f64,
    pub phi_hess_sq: f64,
    pub third_sq: f64,
    pub phi_third_sq: f64,
    pub trace_hess_cubed: f64,
    pub phi_sq: f64,
    pub phi_cubed: f64,
    /// `⟨φ⟩`, reported alongside as a zero-mean sanity value.
    pub phi: f64,
}

impl HexagonalAverages {
    pub const CLOSED_FORMS: [(&'static str, f64); 10] = [
        ("<|grad phi|^2>", 1.5),
        ("<phi |grad phi|^2>", 0.75),
        ("<|hess phi|^2>", 1.5),
        ("<phi |hess phi|^2>", 0.375),
        ("<|grad hess phi|^2>", 1.5),
        ("<phi |grad hess phi|^2>", 0.1875),
        ("<tr (hess phi)^3>", 0.1875),
        ("<phi^2>", 1.5),
        ("<phi^3>", 1.5),
        ("<phi>", 0.0),
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.grad_sq,
            self.phi_grad_sq,
            self.hess_sq,
            self.phi_hess_sq,
            self.third_sq,
            self.phi_third_sq,
            self.trace_hess_cubed,
            self.phi_sq,
            self.phi_cubed,
            self.phi,
        ]
    }

    /// `(name, computed, closed form)` rows.
    pub fn entries(&self) -> Vec<(&'static str, f64, f64)> {
        Self::CLOSED_FORMS
            .iter()
            .zip(self.values())
            .map(|(&(name, exact), v)| (name, v, exact))
            .collect()
    }

    pub fn max_abs_error(&self) -> f64 {
        self.entries()
            .iter()
            .map(|(_, v, e)| (v - e).abs())
            .fold(0.0, f64::max)
    }
}

pub fn hexagonal_average_table(grid: &PeriodicGrid) -> Result<HexagonalAverages> {
    check_axes(grid, 2)?;
    let waves = TriadWaveSystem::hexagonal();
    let v = grid.average_fields(|p| {
        let jet = waves.phi_jet_at(p[0], p[1]);
        let phi = jet.value();
        let g = jet.grad();
        let h = jet.hess();
        let t3 = jet.third();
        let grad_sq = g[0] * g[0] + g[1] * g[1];
        let mut hess_sq = 0.0;
        let mut third_sq = 0.0;
        let mut tr3 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                hess_sq += h[a][b] * h[a][b];
                for c in 0..2 {
                    third_sq += t3[a][b][c] * t3[a][b][c];
                    tr3 += h[a][b] * h[b][c] * h[c][a];
                }
            }
        }
        Ok([
            grad_sq,
            phi * grad_sq,
            hess_sq,
            phi * hess_sq,
            third_sq,
            phi * third_sq,
            tr3,
            phi * phi,
            phi * phi * phi,
            phi,
        ])
    })?;
    Ok(HexagonalAverages {
        grad_sq: v[0],
        phi_grad_sq: v[1],
        hess_sq: v[2],
        phi_hess_sq: v[3],
        third_sq: v[4],
        phi_third_sq: v[5],
        trace_hess_cubed: v[6],
        phi_sq: v[7],
        phi_cubed: v[8],
        phi: v[9],
    })
}
