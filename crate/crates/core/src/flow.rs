//! Heat flow `P_t = e^{tΔ/2}` of the triad torus family.
//!
//! The density itself is evolved, mode by mode, as `f̂(m) e^{-t|ξ_m|²/2}`.
//! Log-jets at the grid nodes are recovered from spectral derivatives of `f`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{integrands_at, jet_of_log_from_density_jet, FunctionalTriple, Jet};
use crate::quadrature::{pairwise_sum, PeriodicGrid};
use crate::spectral::{fft_index, fft_nd};
use crate::torus2d::{TorusExpFamily, TriadWaveSystem};
use crate::transfer::{fourier_coefficients, FourierTable, ShellMetric};

pub const DEFAULT_MODES: usize = 24;
pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_DT: f64 = 1e-3;
/// Allowed coefficient mass on the outermost retained ring.
pub const TAIL_LIMIT: f64 = 1e-13;

/// Fourier coefficients of a normalized torus density at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    table: FourierTable,
    time: f64,
}

impl SpectralDensity {
    /// Coefficients of `f_ε = e^{εφ}/⟨e^{εφ}⟩` sampled on `grid`.
    pub fn from_family(fam: &TorusExpFamily, grid: &PeriodicGrid, max_mode: usize) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidGrid("heat flow runs on a 2-axis grid".into()));
        }
        let samples = grid.sample(|p| fam.log_jet_at(p[0], p[1]).u().exp());
        let raw = fourier_coefficients(&samples, grid, max_mode)?;
        let tail = raw.boundary_mass();
        if tail > TAIL_LIMIT * raw.coeff(&[0, 0]).re {
            return Err(Error::TruncationTail {
                modes: max_mode,
                tail,
                limit: TAIL_LIMIT,
            });
        }
        let z = raw.coeff(&[0, 0]).re;
        Ok(Self {
            table: raw.map_modes(|_, c| c / z),
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn table(&self) -> &FourierTable {
        &self.table
    }

    pub fn coeff(&self, m: &[i64]) -> Complex64 {
        self.table.coeff(m)
    }

    /// Moves the density by `dt` along the flow. Negative `dt` runs the
    /// truncated series backwards, which stays well defined for short times.
    pub fn advanced(&self, dt: f64) -> Self {
        let metric = ShellMetric::triad();
        Self {
            table: self
                .table
                .map_modes(|m, c| c * (-0.5 * dt * metric.norm_sq(m)).exp()),
            time: self.time + dt,
        }
    }

    /// Direct evaluation of the Fourier series at angles `(s, t)`.
    pub fn value_at(&self, s: f64, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .table
            .modes()
            .map(|(m, c)| (c * Complex64::from_polar(1.0, m[0] as f64 * s + m[1] as f64 * t)).re)
            .collect();
        pairwise_sum(&terms)
    }
}

/// Solves the heat flow from `f_ε` up to time `t ≥ 0`.
pub fn evolve(fam: &TorusExpFamily, t: f64, grid: &PeriodicGrid, max_mode: usize) -> Result<SpectralDensity> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must be finite and non-negative",
        });
    }
    Ok(SpectralDensity::from_family(fam, grid, max_mode)?.advanced(t))
}

/// Density jets on all grid nodes, by ten inverse FFTs of `(iξ)^α f̂`.
fn density_jets(sd: &SpectralDensity, grid: &PeriodicGrid) -> Result<Vec<Jet<2>>> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("heat flow runs on a 2-axis grid".into()));
    }
    if 2 * sd.table.max_mode() >= grid.min_nodes() {
        return Err(Error::ModesTooLarge {
            modes: sd.table.max_mode(),
            nodes: grid.min_nodes(),
        });
    }
    let k = TriadWaveSystem::hexagonal().k;
    let shape = grid.nodes();
    // Multi-indices of derivatives, up to order three.
    let orders: Vec<Vec<usize>> = vec![
        vec![],
        vec![0],
        vec![1],
        vec![0, 0],
        vec![0, 1],
        vec![1, 1],
        vec![0, 0, 0],
        vec![0, 0, 1],
        vec![0, 1, 1],
        vec![1, 1, 1],
    ];
    let fields: Vec<Vec<f64>> = orders
        .iter()
        .map(|alpha| {
            let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (m, c) in sd.table.modes() {
                let xi = [
                    m[0] as f64 * k[0][0] + m[1] as f64 * k[1][0],
                    m[0] as f64 * k[0][1] + m[1] as f64 * k[1][1],
                ];
                let mut mult = Complex64::new(1.0, 0.0);
                for &a in alpha {
                    mult *= Complex64::new(0.0, xi[a]);
                }
                data[fft_index(&m, shape)] += c * mult;
            }
            fft_nd(&mut data, shape, FftDirection::Inverse);
            data.iter().map(|z| z.re).collect()
        })
        .collect();
    Ok((0..grid.len())
        .map(|n| {
            let v = |i: usize| fields[i][n];
            let hess = [[v(3), v(4)], [v(4), v(5)]];
            let third = [
                [[v(6), v(7)], [v(7), v(8)]],
                [[v(7), v(8)], [v(8), v(9)]],
            ];
            Jet::new(v(0), [v(1), v(2)], hess, third)
        })
        .collect())
}

/// Sampled density `f_t` on the grid nodes.
pub fn density_on_grid(sd: &SpectralDensity, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    Ok(density_jets(sd, grid)?.iter().map(|j| j.value()).collect())
}

/// `𝓘, 𝓠, 𝓓` of `f_t` by quadrature over the grid.
pub fn functionals_at_time(sd: &SpectralDensity, grid: &PeriodicGrid) -> Result<FunctionalTriple> {
    let jets = density_jets(sd, grid)?;
    let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut p = [0.0; 2];
    for (n, jet) in jets.iter().enumerate() {
        grid.point(n, &mut p);
        let log = jet_of_log_from_density_jet(jet, &p)?;
        let v = integrands_at(&log)?;
        let w = jet.value();
        for (col, x) in cols.iter_mut().zip([w, w * v.j1, w * v.j2, w * v.j3]) {
            col.push(x);
        }
    }
    let s: Vec<f64> = cols.iter().map(|c| pairwise_sum(c)).collect();
    let t = FunctionalTriple::new(s[1] / s[0], s[2] / s[0], s[3] / s[0]);
    if !t.is_finite() {
        return Err(Error::NonFinite { what: "flow functionals" });
    }
    Ok(t)
}

/// `𝓘 = ⟨|∇f|²/f⟩ / ⟨f⟩`, the score form. On the grid it agrees with the
/// `tr 𝖧` form exactly in exact arithmetic (the `Δf` term is a band-limited
/// field of zero mean) but sums positive terms only, so it carries far less
/// roundoff; the difference quotients of `verify_identities` rely on that.
pub fn score_information(sd: &SpectralDensity, grid: &PeriodicGrid) -> Result<f64> {
    let jets = density_jets(sd, grid)?;
    let mut p = [0.0; 2];
    let mut num = Vec::with_capacity(jets.len());
    let mut den = Vec::with_capacity(jets.len());
    for (n, jet) in jets.iter().enumerate() {
        let f = jet.value();
        if !(f > crate::jets::POSITIVITY_THRESHOLD) {
            grid.point(n, &mut p);
            return Err(Error::Positivity { at: p.to_vec(), value: f });
        }
        let g = jet.grad();
        num.push((g[0] * g[0] + g[1] * g[1]) / f);
        den.push(f);
    }
    Ok(pairwise_sum(&num) / pairwise_sum(&den))
}

/// Finite-difference checks of `I' = -𝓠` and `I'' = 𝓓` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub t: f64,
    pub triple: FunctionalTriple,
    /// `|(I(t+h) - I(t-h))/(2h) + 𝓠(t)|` at `h = dt` and `h = dt/2`.
    pub first_residual: [f64; 2],
    /// `|(I(t+h) - 2I(t) + I(t-h))/h² - 𝓓(t)|` at `h = dt` and `h = dt/2`.
    pub second_residual: [f64; 2],
}

impl IdentityRow {
    /// Residual ratios under step halving; about 4 for a second-order scheme.
    pub fn orders(&self) -> [f64; 2] {
        [
            self.first_residual[0] / self.first_residual[1],
            self.second_residual[0] / self.second_residual[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub eps: f64,
    pub dt: f64,
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    pub fn max_first_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.first_residual[0]).fold(0.0, f64::max)
    }

    pub fn max_second_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.second_residual[0]).fold(0.0, f64::max)
    }
}

/// Central differences of `I(t)` against `-𝓠` and `𝓓`. Times below `dt`
/// use the backward-extended truncated series for `I(t - h)`.
pub fn verify_identities(
    fam: &TorusExpFamily,
    times: &[f64],
    dt: f64,
    grid: &PeriodicGrid,
    max_mode: usize,
) -> Result<IdentityReport> {
    crate::error::check_positive("dt", dt)?;
    let base = SpectralDensity::from_family(fam, grid, max_mode)?;
    let info = |t: f64| score_information(&base.advanced(t), grid);
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "must be finite and non-negative",
            });
        }
        let triple = functionals_at_time(&base.advanced(t), grid)?;
        let centre = info(t)?;
        let mut first = [0.0; 2];
        let mut second = [0.0; 2];
        for (k, h) in [dt, 0.5 * dt].into_iter().enumerate() {
            let (up, down) = (info(t + h)?, info(t - h)?);
            first[k] = ((up - down) / (2.0 * h) + triple.q_val).abs();
            second[k] = ((up - 2.0 * centre + down) / (h * h) - triple.d_val).abs();
        }
        rows.push(IdentityRow {
            t,
            triple,
            first_residual: first,
            second_residual: second,
        });
    }
    Ok(IdentityReport { eps: fam.eps, dt, rows })
}

/// Triples and `Φ(t) = I I'' - I'² = 𝓘𝓓 - 𝓠²` along the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowProfile {
    pub eps: f64,
    pub times: Vec<f64>,
    pub triples: Vec<FunctionalTriple>,
    pub phi_defect: Vec<f64>,
}

impl FlowProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,I,Q,D,defect,ratio\n");
        for (t, x) in self.times.iter().zip(&self.triples) {
            let ratio = x.ratio.map_or(String::from("NaN"), |r| format!("{r:.16e}"));
            let _ = writeln!(
                out,
                "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{ratio}",
                x.i_val, x.q_val, x.d_val, x.defect
            );
        }
        out
    }
}

pub fn flow_profile(fam: &TorusExpFamily, times: &[f64], grid: &PeriodicGrid, max_mode: usize) -> Result<FlowProfile> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "times",
            value: f64::NAN,
            reason: "must be strictly increasing",
        });
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter {
            name: "times",
            value: f64::NAN,
            reason: "must be finite and non-negative",
        });
    }
    let base = SpectralDensity::from_family(fam, grid, max_mode)?;
    let triples = times
        .iter()
        .map(|&t| functionals_at_time(&base.advanced(t), grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowProfile {
        eps: fam.eps,
        times: times.to_vec(),
        phi_defect: triples.iter().map(|x| x.defect).collect(),
        triples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::haar_average;
    use crate::torus2d::torus_functionals;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::square(DEFAULT_GRID).unwrap()
    }

    fn start(eps: f64) -> SpectralDensity {
        SpectralDensity::from_family(&TorusExpFamily::new(eps), &grid(), DEFAULT_MODES).unwrap()
    }

    #[test]
    fn zero_time_matches_torus() {
        let fam = TorusExpFamily::new(0.05);
        let flow = functionals_at_time(&evolve(&fam, 0.0, &grid(), DEFAULT_MODES).unwrap(), &grid()).unwrap();
        let direct = torus_functionals(&fam, &grid()).unwrap();
        assert!(flow.max_abs_diff(&direct) <= 1e-10, "{flow:?} {direct:?}");
    }

    #[test]
    fn mass_is_conserved() {
        let sd = start(0.08);
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(sd.advanced(t).coeff(&[0, 0]), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn semigroup() {
        let sd = start(0.05);
        let a = sd.advanced(0.07).advanced(0.2);
        let b = sd.advanced(0.27);
        for ((_, x), (_, y)) in a.table().modes().zip(b.table().modes()) {
            assert!((x - y).norm() <= 1e-14);
        }
    }

    #[test]
    fn truncation_tail_is_checked() {
        let r = SpectralDensity::from_family(&TorusExpFamily::new(0.05), &grid(), 2);
        assert!(matches!(r, Err(Error::TruncationTail { .. })));
        assert!(evolve(&TorusExpFamily::new(0.05), -1.0, &grid(), DEFAULT_MODES).is_err());
    }

    #[test]
    fn flattens_at_long_times() {
        let sd = start(0.05).advanced(20.0);
        let f = density_on_grid(&sd, &grid()).unwrap();
        let sup = f.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        // Six unit-frequency modes of size ≈ ε/2 decay like e^{-t/2}.
        assert!(sup <= 0.2 * (-10.0f64).exp(), "{sup}");
        let t = functionals_at_time(&sd, &grid()).unwrap();
        assert!(t.components().iter().all(|v| v.abs() <= 1e-4));
    }

    #[test]
    fn grid_values_match_direct_series() {
        let sd = start(0.05).advanced(0.1);
        let g = PeriodicGrid::square(64).unwrap();
        let f = density_on_grid(&sd, &g).unwrap();
        let mut p = [0.0; 2];
        for n in [0, 17, 1000, 4095] {
            g.point(n, &mut p);
            assert!((f[n] - sd.value_at(p[0], p[1])).abs() <= 1e-14);
        }
    }

    // Oracle: planar convolution of f_ε with the heat kernel of variance t,
    // by the trapezoid rule over |y|_∞ ≤ 12√t.
    fn convolved(eps: f64, t: f64, x: [f64; 2]) -> f64 {
        let waves = TriadWaveSystem::hexagonal();
        let g = PeriodicGrid::square(64).unwrap();
        let z = haar_average(&g.sample(|p| (eps * waves.phi_jet_at(p[0], p[1]).value()).exp()), &g).unwrap();
        let half = 12.0 * t.sqrt();
        let n = 480;
        let h = 2.0 * half / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y0 = -half + i as f64 * h;
            for j in 0..=n {
                let y1 = -half + j as f64 * h;
                let (p0, p1) = (x[0] - y0, x[1] - y1);
                let s = waves.k[0][0] * p0 + waves.k[0][1] * p1;
                let tt = waves.k[1][0] * p0 + waves.k[1][1] * p1;
                let phi = s.cos() + tt.cos() + (s + tt).cos();
                acc += (eps * phi).exp() * (-(y0 * y0 + y1 * y1) / (2.0 * t)).exp();
            }
        }
        acc * h * h / (2.0 * PI * t) / z
    }

    #[test]
    fn matches_heat_kernel_convolution() {
        let (eps, t) = (0.05, 0.1);
        let sd = start(eps).advanced(t);
        let waves = TriadWaveSystem::hexagonal();
        for x in [[0.0, 0.0], [0.7, -1.3], [2.9, 0.4]] {
            let s = waves.k[0][0] * x[0] + waves.k[0][1] * x[1];
            let tt = waves.k[1][0] * x[0] + waves.k[1][1] * x[1];
            let spectral = sd.value_at(s, tt);
            let oracle = convolved(eps, t, x);
            assert!((spectral - oracle).abs() <= 1e-10, "{spectral} {oracle}");
        }
    }

    #[test]
    fn score_form_agrees() {
        let sd = start(0.05).advanced(0.03);
        let a = score_information(&sd, &grid()).unwrap();
        let b = functionals_at_time(&sd, &grid()).unwrap().i_val;
        assert!((a - b).abs() <= 1e-16, "{a} {b}");
    }

    #[test]
    fn fisher_information_decreases() {
        let fam = TorusExpFamily::new(0.05);
        let times: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let p = flow_profile(&fam, &times, &grid(), DEFAULT_MODES).unwrap();
        for w in p.triples.windows(2) {
            assert!(w[1].i_val < w[0].i_val);
        }
        let early = flow_profile(&fam, &[0.0, 0.05], &grid(), DEFAULT_MODES).unwrap();
        assert!(early.triples[1].i_val < early.triples[0].i_val);
    }

    #[test]
    fn identities_are_second_order() {
        let fam = TorusExpFamily::new(0.05);
        let report = verify_identities(&fam, &[0.0, 0.02, 0.05, 0.1], DEFAULT_DT, &grid(), DEFAULT_MODES).unwrap();
        for row in &report.rows {
            let [a, b] = row.orders();
            assert!((3.5..=4.5).contains(&a), "t {}: {a}", row.t);
            assert!((3.5..=4.5).contains(&b), "t {}: {b}", row.t);
        }
        assert!(report.rows[1].first_residual[0] <= 1e-6);
        assert!(report.max_second_residual() <= 1e-8);
    }

    #[test]
    fn defect_profile_negative_on_short_window() {
        let fam = TorusExpFamily::new(0.05);
        let times: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64).collect();
        let p = flow_profile(&fam, &times, &grid(), DEFAULT_MODES).unwrap();
        assert!(p.phi_defect.iter().all(|&v| v < 0.0), "{:?}", p.phi_defect);
        let csv = p.to_csv();
        assert!(csv.starts_with("t,I,Q,D,defect,ratio\n"));
        assert_eq!(csv.lines().count(), 12);
        assert!(flow_profile(&fam, &[0.1, 0.1], &grid(), DEFAULT_MODES).is_err());
    }
}

