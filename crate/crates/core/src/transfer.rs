//! Gaussian-envelope transfer of periodic families to Euclidean space.
//!
//! For a periodic field `G(x)` with angle-coordinate Fourier coefficients
//! `Ĝ(m)`, the Gaussian-weighted integral is a shell sum:
//!
//! ```text
//! ∫ G(x) e^{-|x|²/(2R²)} dx ∝ Σ_m Ĝ(m) exp(-R² |ξ_m|² / 2)
//! ```
//!
//! with `|ξ_m|² = mᵀ G m` for the Gram matrix of the frequency basis. The
//! envelope adds `R⁻² I` to the logarithmic Hessian and leaves `∇H` unchanged,
//! so every functional of `F_{R,ε}` is a polynomial in `c_R = R⁻²` whose
//! coefficients are envelope-weighted averages of periodic integrands.

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::jets::{integrands_at, FunctionalTriple};
use crate::quadrature::{pairwise_sum, PeriodicGrid};
use crate::spectral::{fft_index, fft_nd, mode_vectors};
use crate::torus2d::{TorusExpFamily, TriadWaveSystem};

/// Default mode truncation for envelope sums.
pub const DEFAULT_MODES: usize = 16;

/// Shell exponents below this are flushed to an exact zero factor.
const SHELL_LOG_FLOOR: f64 = -700.0;

/// Gram matrix of the angle-coordinate frequency basis: `|ξ_m|² = mᵀ G m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellMetric {
    gram: Vec<Vec<f64>>,
}

impl ShellMetric {
    pub fn new(gram: Vec<Vec<f64>>) -> Self {
        Self { gram }
    }

    /// `|m k₁ + n k₂|² = m² + n² - mn`.
    pub fn triad() -> Self {
        Self::new(vec![vec![1.0, -0.5], vec![-0.5, 1.0]])
    }

    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn norm_sq(&self, m: &[i64]) -> f64 {
        let mut acc = 0.0;
        for (a, row) in self.gram.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                acc += m[a] as f64 * g * m[b] as f64;
            }
        }
        acc
    }

    /// `exp(-R²|ξ_m|²/2)`, flushed to zero below `e^{-700}`.
    pub fn shell_factor(&self, m: &[i64], radius: f64) -> f64 {
        let expo = -0.5 * radius * radius * self.norm_sq(m);
        if expo < SHELL_LOG_FLOOR {
            0.0
        } else {
            expo.exp()
        }
    }
}

/// Fourier coefficients over `[-M, M]^dim` of a grid-sampled field.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    dim: usize,
    max_mode: usize,
    coeffs: Vec<Complex64>,
}

impl FourierTable {
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn side(&self) -> usize {
        2 * self.max_mode + 1
    }

    fn flat(&self, m: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for &x in m {
            if x.unsigned_abs() as usize > self.max_mode {
                return None;
            }
            idx = idx * self.side() + (x + self.max_mode as i64) as usize;
        }
        Some(idx)
    }

    /// Coefficient of mode `m`; zero outside the truncation.
    pub fn coeff(&self, m: &[i64]) -> Complex64 {
        self.flat(m).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn modes(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        mode_vectors(self.dim, self.max_mode).zip(self.coeffs.iter().copied())
    }

    /// Applies a per-mode multiplier.
    pub fn map_modes(&self, f: impl Fn(&[i64], Complex64) -> Complex64) -> Self {
        let coeffs = mode_vectors(self.dim, self.max_mode)
            .zip(&self.coeffs)
            .map(|(m, &c)| f(&m, c))
            .collect();
        Self {
            dim: self.dim,
            max_mode: self.max_mode,
            coeffs,
        }
    }

    /// `Σ |Ĝ(m)|` over the outermost ring `max_a |m_a| = M`, a proxy for the
    /// mass beyond the truncation.
    pub fn boundary_mass(&self) -> f64 {
        let edge = self.max_mode as i64;
        self.modes()
            .filter(|(m, _)| m.iter().any(|x| x.abs() == edge))
            .map(|(_, c)| c.norm())
            .sum()
    }

    /// `Σ_m Ĝ(m) exp(-R²|ξ_m|²/2)`; the imaginary parts cancel for real fields.
    pub fn shell_sum(&self, metric: &ShellMetric, radius: f64) -> f64 {
        let terms: Vec<f64> = self
            .modes()
            .map(|(m, c)| {
                let w = metric.shell_factor(&m, radius);
                if w == 0.0 {
                    0.0
                } else {
                    c.re * w
                }
            })
            .collect();
        pairwise_sum(&terms)
    }
}

/// Rectangle-rule Fourier coefficients `Ĝ(m) = ⟨G e^{-i m·θ}⟩` for `|m_a| ≤ M`.
pub fn fourier_coefficients(samples: &[f64], grid: &PeriodicGrid, max_mode: usize) -> Result<FourierTable> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "expected {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    if 2 * max_mode >= grid.min_nodes() {
        return Err(Error::ModesTooLarge {
            modes: max_mode,
            nodes: grid.min_nodes(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "field samples" });
    }
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, grid.nodes(), FftDirection::Forward);
    let norm = 1.0 / grid.len() as f64;
    let coeffs = mode_vectors(grid.dim(), max_mode)
        .map(|m| data[fft_index(&m, grid.nodes())] * norm)
        .collect();
    Ok(FourierTable {
        dim: grid.dim(),
        max_mode,
        coeffs,
    })
}

/// `F_{R,ε} ∝ exp(εφ - |x|²/(2R²))` on `ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFamily {
    pub eps: f64,
    pub radius: f64,
    c_r: f64,
}

impl EnvelopeFamily {
    pub fn new(eps: f64, radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        if !eps.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "must be finite",
            });
        }
        Ok(Self {
            eps,
            radius,
            c_r: radius.powi(-2),
        })
    }

    /// Envelope shift `c_R = R⁻²` of the logarithmic Hessian.
    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    pub fn torus(&self) -> TorusExpFamily {
        TorusExpFamily::new(self.eps)
    }
}

/// `𝔼_R[G]`: the `e^{εφ} e^{-|x|²/(2R²)}`-weighted mean of a periodic field.
pub fn gaussian_weighted_average(
    g_samples: &[f64],
    eps: f64,
    radius: f64,
    grid: &PeriodicGrid,
    max_mode: usize,
) -> Result<f64> {
    check_positive("radius", radius)?;
    let waves = TriadWaveSystem::hexagonal();
    let weights = grid.sample(|p| (eps * waves.phi_jet_at(p[0], p[1]).value()).exp());
    let weighted: Vec<f64> = g_samples.iter().zip(&weights).map(|(g, w)| g * w).collect();
    let metric = ShellMetric::triad();
    let num = fourier_coefficients(&weighted, grid, max_mode)?.shell_sum(&metric, radius);
    let den = fourier_coefficients(&weights, grid, max_mode)?.shell_sum(&metric, radius);
    let out = num / den;
    if !out.is_finite() || den <= 0.0 {
        return Err(Error::NonFinite { what: "Gaussian-weighted average" });
    }
    Ok(out)
}

/// Envelope-weighted means `(𝔼_R[j1], 𝔼_R[j2], 𝔼_R[j3])` of the periodic integrands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMeans {
    pub trace: f64,
    pub trace_sq: f64,
    pub third: f64,
}

/// Computes the envelope means from samples of `[w, w j1, w j2, w j3]`.
pub(crate) fn envelope_means(
    fields: &[Vec<f64>; 4],
    grid: &PeriodicGrid,
    metric: &ShellMetric,
    radius: f64,
    max_mode: usize,
) -> Result<EnvelopeMeans> {
    let mut sums = [0.0; 4];
    for (s, f) in sums.iter_mut().zip(fields) {
        *s = fourier_coefficients(f, grid, max_mode)?.shell_sum(metric, radius);
    }
    if sums[0] <= 0.0 || sums.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "envelope shell sums" });
    }
    Ok(EnvelopeMeans {
        trace: sums[1] / sums[0],
        trace_sq: sums[2] / sums[0],
        third: sums[3] / sums[0],
    })
}

/// Exact functionals after shifting the logarithmic Hessian by `c I_dim`.
///
/// With `H = A + c I` and `∇H = ∇A`:
/// `I = 𝔼[tr A] + dim c`,
/// `Q = 𝔼[tr A²] + 2c 𝔼[tr A] + dim c²`,
/// `D = 𝔼[D₀] + 6c 𝔼[tr A²] + 6c² 𝔼[tr A] + 2 dim c³`.
pub fn shifted_triple(means: &EnvelopeMeans, dim: usize, c: f64) -> FunctionalTriple {
    let d = dim as f64;
    FunctionalTriple::new(
        means.trace + d * c,
        means.trace_sq + 2.0 * c * means.trace + d * c * c,
        means.third + 6.0 * c * means.trace_sq + 6.0 * c * c * means.trace + 2.0 * d * c.powi(3),
    )
}

/// Envelope means of the periodic integrands of `u = εφ` for the triad model.
pub fn triad_envelope_means(fam: &EnvelopeFamily, grid: &PeriodicGrid, max_mode: usize) -> Result<EnvelopeMeans> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("triad model needs a 2-axis grid".into()));
    }
    let torus = fam.torus();
    let fields = grid.sample_fields(|p| {
        let jet = torus.log_jet_at(p[0], p[1]);
        let w = jet.u().exp();
        let v = integrands_at(&jet)?;
        Ok([w, w * v.j1, w * v.j2, w * v.j3])
    })?;
    envelope_means(&fields, grid, &ShellMetric::triad(), fam.radius, max_mode)
}

/// Exact triple of `F_{R,ε}` via the Fourier-shell formula.
pub fn euclidean_functionals(fam: &EnvelopeFamily, grid: &PeriodicGrid, max_mode: usize) -> Result<FunctionalTriple> {
    let means = triad_envelope_means(fam, grid, max_mode)?;
    Ok(shifted_triple(&means, 2, fam.c_r()))
}

/// One periodic test field with its envelope and torus averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub field: String,
    pub envelope: f64,
    pub torus: f64,
}

impl LimitRow {
    pub fn abs_diff(&self) -> f64 {
        (self.envelope - self.torus).abs()
    }
}

/// `𝔼_R[G]` against `𝔼_∞[G] = ⟨G e^{εφ}⟩/⟨e^{εφ}⟩` for `φ`, `|∇²φ|²`,
/// `|∇³φ|²`, `tr (∇²φ)³` and the cubic integrand `j3` of `u = εφ`.
pub fn transfer_limit_table(eps: f64, radius: f64, grid: &PeriodicGrid, max_mode: usize) -> Result<Vec<LimitRow>> {
    let waves = TriadWaveSystem::hexagonal();
    let torus = TorusExpFamily::new(eps);
    let names = ["phi", "|hess phi|^2", "|grad hess phi|^2", "tr (hess phi)^3", "j3"];
    let cols = grid.sample_fields(|p| {
        let jet = waves.phi_jet_at(p[0], p[1]);
        let h = jet.hess();
        let t3 = jet.third();
        let (mut hs, mut ts, mut tr3) = (0.0, 0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                hs += h[a][b] * h[a][b];
                for c in 0..2 {
                    ts += t3[a][b][c] * t3[a][b][c];
                    tr3 += h[a][b] * h[b][c] * h[c][a];
                }
            }
        }
        let j3 = integrands_at(&torus.log_jet_at(p[0], p[1]))?.j3;
        Ok([jet.value(), hs, ts, tr3, j3])
    })?;
    let weights = grid.sample(|p| (eps * waves.phi_jet_at(p[0], p[1]).value()).exp());
    let z = pairwise_sum(&weights);
    names
        .iter()
        .zip(&cols)
        .map(|(name, g)| {
            let weighted: Vec<f64> = g.iter().zip(&weights).map(|(a, w)| a * w).collect();
            Ok(LimitRow {
                field: (*name).into(),
                envelope: gaussian_weighted_average(g, eps, radius, grid, max_mode)?,
                torus: pairwise_sum(&weighted) / z,
            })
        })
        .collect()
}
