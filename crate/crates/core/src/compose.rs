//! Composition calculus: products, Gaussian blocks, dilations and separated
//! one-dimensional mixtures.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::jets::{integrands_at, jet_of_log_from_density_jet, FunctionalTriple, Jet, LogDensityJet};
use crate::quadrature::Compensated;

/// Triple of a product density: the logarithmic Hessian is block diagonal,
/// so the three functionals add.
pub fn product_triple(a: &FunctionalTriple, b: &FunctionalTriple) -> FunctionalTriple {
    FunctionalTriple::new(a.i_val + b.i_val, a.q_val + b.q_val, a.d_val + b.d_val)
}

/// Isotropic Gaussian `N(0, σ² I_dim)`: `(dim σ⁻², dim σ⁻⁴, 2 dim σ⁻⁶)`.
pub fn gaussian_block(dim: usize, sigma: f64) -> Result<FunctionalTriple> {
    check_positive("sigma", sigma)?;
    if dim == 0 {
        return Err(Error::DimensionOutOfRange {
            dim,
            min: 1,
            max: usize::MAX,
        });
    }
    let d = dim as f64;
    let s2 = sigma.powi(-2);
    Ok(FunctionalTriple::new(d * s2, d * s2 * s2, 2.0 * d * s2 * s2 * s2))
}

/// Triple of `g_r(x) = r^{-n} g(x/r)`: `(r⁻² 𝓘, r⁻⁴ 𝓠, r⁻⁶ 𝓓)`.
pub fn rescale_triple(t: &FunctionalTriple, r: f64) -> Result<FunctionalTriple> {
    check_positive("r", r)?;
    let s = r.powi(-2);
    Ok(FunctionalTriple::new(t.i_val * s, t.q_val * s * s, t.d_val * s * s * s))
}

/// A smooth positive density on the line, described through its log-jet.
pub trait Density1d: Sync {
    /// Jet of the logarithm of the (normalized) density at `x`.
    fn log_jet(&self, x: f64) -> Result<LogDensityJet<1>>;

    /// Intervals that carry all mass at quadrature precision.
    fn intervals(&self) -> Vec<(f64, f64)>;
}

/// `N(mean, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian1d {
    pub mean: f64,
    pub sigma: f64,
}

impl Gaussian1d {
    pub fn new(mean: f64, sigma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        Ok(Self { mean, sigma })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sigma: 1.0 }
    }
}

impl Density1d for Gaussian1d {
    fn log_jet(&self, x: f64) -> Result<LogDensityJet<1>> {
        let s2 = self.sigma * self.sigma;
        let z = x - self.mean;
        let u = -0.5 * z * z / s2 - (self.sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        Ok(LogDensityJet::new(Jet::new(u, [-z / s2], [[-1.0 / s2]], [[[0.0]]])))
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        vec![(self.mean - 10.0 * self.sigma, self.mean + 10.0 * self.sigma)]
    }
}

/// `∝ exp(ε cos x - x²/(2R²))`, the one-dimensional envelope family.
/// Left unnormalized; the functionals do not see the constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineEnvelope1d {
    pub eps: f64,
    pub radius: f64,
}

impl CosineEnvelope1d {
    pub fn new(eps: f64, radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        Ok(Self { eps, radius })
    }
}

impl Density1d for CosineEnvelope1d {
    fn log_jet(&self, x: f64) -> Result<LogDensityJet<1>> {
        let (sn, cs) = x.sin_cos();
        let c = self.radius.powi(-2);
        let e = self.eps;
        Ok(LogDensityJet::new(Jet::new(
            e * cs - 0.5 * c * x * x,
            [-e * sn - c * x],
            [[-e * cs - c]],
            [[[e * sn]]],
        )))
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        vec![(-12.0 * self.radius, 12.0 * self.radius)]
    }
}

/// `g_r(x) = r⁻¹ g(x/r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaled<G> {
    pub inner: G,
    pub r: f64,
}

impl<G: Density1d> Rescaled<G> {
    pub fn new(inner: G, r: f64) -> Result<Self> {
        check_positive("r", r)?;
        Ok(Self { inner, r })
    }
}

impl<G: Density1d> Density1d for Rescaled<G> {
    fn log_jet(&self, x: f64) -> Result<LogDensityJet<1>> {
        let j = self.inner.log_jet(x / self.r)?.jet().dilated(self.r);
        Ok(LogDensityJet::new(j.add(&Jet::constant(-self.r.ln()))))
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        self.inner
            .intervals()
            .into_iter()
            .map(|(a, b)| (a * self.r, b * self.r))
            .collect()
    }
}

/// `(1-η) h + η g(· - L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mixture<H, G> {
    pub background: H,
    pub bump: G,
    pub eta: f64,
    pub shift: f64,
}

impl<H: Density1d, G: Density1d> Density1d for Mixture<H, G> {
    // Log-sum-exp on jets: both components are rescaled by the larger one
    // before adding, so neither tail underflows the sum.
    fn log_jet(&self, x: f64) -> Result<LogDensityJet<1>> {
        let a = self.background.log_jet(x)?.jet().add(&Jet::constant((1.0 - self.eta).ln()));
        let b = self.bump.log_jet(x - self.shift)?.jet().add(&Jet::constant(self.eta.ln()));
        let m = a.value().max(b.value());
        let shifted = |j: Jet<1>| j.add(&Jet::constant(-m)).exp();
        let sum = shifted(a).add(&shifted(b));
        let log = jet_of_log_from_density_jet(&sum, &[x])?;
        Ok(LogDensityJet::new(log.jet().add(&Jet::constant(m))))
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        let mut all = self.background.intervals();
        all.extend(self.bump.intervals().into_iter().map(|(a, b)| (a + self.shift, b + self.shift)));
        all
    }
}

/// Midpoint-rule settings for direct 1-D triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature1d {
    pub cells_per_interval: usize,
}

impl Default for Quadrature1d {
    fn default() -> Self {
        Self { cells_per_interval: 4096 }
    }
}

/// Merges overlapping intervals, keeping the finest cell width of the parts.
fn merge_intervals(mut parts: Vec<(f64, f64, f64)>) -> Vec<(f64, f64, f64)> {
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (a, b, h) in parts {
        match out.last_mut() {
            Some(last) if a <= last.1 => {
                last.1 = last.1.max(b);
                last.2 = last.2.min(h);
            }
            _ => out.push((a, b, h)),
        }
    }
    out
}

/// Direct quadrature of `∫ f j_k / ∫ f` over the density's intervals.
pub fn direct_triple<F: Density1d + ?Sized>(density: &F, quad: &Quadrature1d) -> Result<FunctionalTriple> {
    if quad.cells_per_interval == 0 {
        return Err(Error::InvalidGrid("need at least one quadrature cell".into()));
    }
    let parts = density
        .intervals()
        .into_iter()
        .map(|(a, b)| (a, b, (b - a) / quad.cells_per_interval as f64))
        .collect();
    let mut jets = Vec::new();
    for (a, b, h) in merge_intervals(parts) {
        let n = ((b - a) / h).round().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            jets.push((h, density.log_jet(x)?));
        }
    }
    // Weights relative to the largest log-density, for a safe exponent.
    let top = jets.iter().map(|(_, j)| j.u()).fold(f64::NEG_INFINITY, f64::max);
    let mut acc = [Compensated::default(); 4];
    for (h, jet) in &jets {
        let w = h * (jet.u() - top).exp();
        let v = integrands_at(jet)?;
        for (a, x) in acc.iter_mut().zip([w, w * v.j1, w * v.j2, w * v.j3]) {
            a.add(x);
        }
    }
    let z = acc[0].total();
    let t = FunctionalTriple::new(acc[1].total() / z, acc[2].total() / z, acc[3].total() / z);
    if !t.is_finite() {
        return Err(Error::NonFinite { what: "1-D quadrature" });
    }
    Ok(t)
}

/// The separated mixture `(1-η) N(0,1) + η g_r(· - L)` with a Gaussian bump of width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub bump_sigma: f64,
    pub r: f64,
    pub eta: f64,
    pub separation: f64,
}

impl MixtureSpec {
    pub fn new(bump_sigma: f64, r: f64, eta: f64, separation: f64) -> Result<Self> {
        check_positive("bump_sigma", bump_sigma)?;
        check_positive("r", r)?;
        check_positive("L", separation)?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            bump_sigma,
            r,
            eta,
            separation,
        })
    }

    pub fn density(&self) -> Mixture<Gaussian1d, Rescaled<Gaussian1d>> {
        Mixture {
            background: Gaussian1d::standard(),
            bump: Rescaled {
                inner: Gaussian1d {
                    mean: 0.0,
                    sigma: self.bump_sigma,
                },
                r: self.r,
            },
            eta: self.eta,
            shift: self.separation,
        }
    }

    /// `(1-η) T[h] + η T[g_r]` from the closed forms of both components.
    pub fn additive_limit(&self) -> Result<FunctionalTriple> {
        let h = gaussian_block(1, 1.0)?;
        let g = rescale_triple(&gaussian_block(1, self.bump_sigma)?, self.r)?;
        let e = self.eta;
        Ok(FunctionalTriple::new(
            (1.0 - e) * h.i_val + e * g.i_val,
            (1.0 - e) * h.q_val + e * g.q_val,
            (1.0 - e) * h.d_val + e * g.d_val,
        ))
    }
}

pub fn mixture_functionals(spec: &MixtureSpec, quad: &Quadrature1d) -> Result<FunctionalTriple> {
    direct_triple(&spec.density(), quad)
}

/// One row of a mixture sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRow {
    pub spec: MixtureSpec,
    pub triple: FunctionalTriple,
    pub additive: FunctionalTriple,
    /// Largest componentwise deviation from the additive limit.
    pub deviation: f64,
    /// Roundoff scale of the quadrature sums.
    pub roundoff: f64,
}

pub fn mixture_row(spec: &MixtureSpec, quad: &Quadrature1d) -> Result<MixtureRow> {
    let triple = mixture_functionals(spec, quad)?;
    let additive = spec.additive_limit()?;
    let deviation = triple.max_abs_diff(&additive);
    let scale = additive.components().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(MixtureRow {
        spec: *spec,
        triple,
        additive,
        deviation,
        roundoff: 64.0 * f64::EPSILON * scale,
    })
}

/// Sweep of the separation `L` at fixed bump, scale and mass.
pub fn mixture_sweep(base: &MixtureSpec, separations: &[f64], quad: &Quadrature1d) -> Result<Vec<MixtureRow>> {
    separations
        .iter()
        .map(|&l| mixture_row(&MixtureSpec::new(base.bump_sigma, base.r, base.eta, l)?, quad))
        .collect()
}

/// The `η = r³` schedule of the dichotomy construction, row per scale `r`.
/// This only tabulates; no blow-up is asserted.
pub fn dichotomy_schedule(
    bump_sigma: f64,
    scales: &[f64],
    separation: f64,
    quad: &Quadrature1d,
) -> Result<Vec<MixtureRow>> {
    scales
        .iter()
        .map(|&r| mixture_row(&MixtureSpec::new(bump_sigma, r, r.powi(3), separation)?, quad))
        .collect()
}

/// Smallest doubling `σ₀ = 2^k σ_start` for which the product with a 1-D
/// Gaussian block moves the ratio by at most `rel_tol |ρ|`.
pub fn monotonicity_sigma0(t: &FunctionalTriple, sigma_start: f64, rel_tol: f64) -> Result<(f64, f64)> {
    check_positive("sigma_start", sigma_start)?;
    check_positive("rel_tol", rel_tol)?;
    let rho = t.ratio.ok_or(Error::RatioUndefined { eps: f64::NAN })?;
    let mut sigma = sigma_start;
    for _ in 0..200 {
        let p = product_triple(t, &gaussian_block(1, sigma)?);
        if let Some(r) = p.ratio {
            if (r - rho).abs() <= rel_tol * rho.abs() {
                return Ok((sigma, r));
            }
        }
        sigma *= 2.0;
    }
    Err(Error::InvalidParameter {
        name: "sigma_start",
        value: sigma_start,
        reason: "no admissible sigma found within 200 doublings",
    })
}
