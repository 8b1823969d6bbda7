//! Closed-form expansion coefficients and their numerical extraction.
//!
//! Near `ε = 0` the torus functionals behave like `c₂ε² + c₃ε³ + …` and the
//! defect like `c₅ε⁵ + …`. Fits sample the functionals on a window of `ε`
//! values and solve for the series coefficients by least squares.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::FunctionalTriple;
use crate::simplex::simplex_closed_form_coeffs;

/// Fits whose scaled design matrix exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e8;
pub const DEFAULT_WINDOW: [f64; 3] = [0.01, 0.02, 0.04];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ClosedForm,
    Fitted,
}

/// Quadratic and cubic coefficient of one functional of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub family: String,
    pub functional: String,
    pub quadratic: f64,
    pub cubic: f64,
    /// Exact values as `"p/q"` strings, for closed-form records.
    pub exact: Option<[String; 2]>,
    pub source: Source,
    pub fit_window: Vec<f64>,
}

impl ExpansionRecord {
    pub fn closed_form(family: &str, functional: &str, quadratic: Ratio<i64>, cubic: Ratio<i64>) -> Self {
        Self {
            family: family.into(),
            functional: functional.into(),
            quadratic: ratio_to_f64(quadratic),
            cubic: ratio_to_f64(cubic),
            exact: Some([quadratic.to_string(), cubic.to_string()]),
            source: Source::ClosedForm,
            fit_window: Vec::new(),
        }
    }

    pub fn fitted(family: &str, functional: &str, fit: &SeriesFit, window: &[f64]) -> Self {
        Self {
            family: family.into(),
            functional: functional.into(),
            quadratic: fit.coeff(2).unwrap_or(f64::NAN),
            cubic: fit.coeff(3).unwrap_or(f64::NAN),
            exact: None,
            source: Source::Fitted,
            fit_window: window.to_vec(),
        }
    }

    /// Largest relative deviation of the two coefficients from `other`.
    pub fn rel_error(&self, other: &Self) -> f64 {
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        rel(self.quadratic, other.quadratic).max(rel(self.cubic, other.cubic))
    }
}

pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact coefficients of the triad torus family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusExpansion {
    pub records: [ExpansionRecord; 3],
    /// `a₂d₃ + a₃d₂ - 2q₂q₃`, the `ε⁵` coefficient of the defect.
    pub defect_coefficient: String,
    pub slope: String,
}

/// Records for `𝓘 ≈ Sε² + αε³`, `𝓠 ≈ Sε² + γε³`, `𝓓 ≈ Sε² + δε³`, and the
/// derived defect and quotient-slope coefficients.
fn closed_form_records(family: &str, s: Ratio<i64>, cubics: [Ratio<i64>; 3]) -> ([ExpansionRecord; 3], Ratio<i64>, Ratio<i64>) {
    let [a, q, d] = cubics;
    let defect = s * d + a * s - Ratio::from(2) * s * q;
    let slope = (a + d - Ratio::from(2) * q) / s;
    (
        [
            ExpansionRecord::closed_form(family, "I", s, a),
            ExpansionRecord::closed_form(family, "Q", s, q),
            ExpansionRecord::closed_form(family, "D", s, d),
        ],
        defect,
        slope,
    )
}

pub fn closed_form_torus() -> TorusExpansion {
    let (records, defect, slope) = closed_form_records(
        "torus",
        Ratio::new(3, 2),
        [Ratio::new(3, 4), Ratio::new(3, 8), Ratio::new(-3, 16)],
    );
    TorusExpansion {
        records,
        defect_coefficient: defect.to_string(),
        slope: slope.to_string(),
    }
}

/// Closed-form records for the simplex family in dimension `d`.
pub fn closed_form_simplex(d: u32) -> TorusExpansion {
    let c = simplex_closed_form_coeffs(d);
    let (records, defect, slope) = closed_form_records(&format!("simplex-d{d}"), c.s, [c.alpha, c.gamma, c.delta]);
    TorusExpansion {
        records,
        defect_coefficient: defect.to_string(),
        slope: slope.to_string(),
    }
}

/// Result of a power-series fit `y ≈ Σ c_p x^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub powers: Vec<i32>,
    pub coeffs: Vec<f64>,
    /// Largest absolute residual relative to the largest `|y|`.
    pub residual: f64,
    /// 2-norm condition number of the column-scaled design matrix.
    pub cond: f64,
}

impl SeriesFit {
    pub fn coeff(&self, power: i32) -> Option<f64> {
        self.powers.iter().position(|&p| p == power).map(|i| self.coeffs[i])
    }
}

/// Least-squares fit of `ys` by the given powers of `xs`. Columns are scaled
/// by `(x/x_max)^p` before the SVD so that conditioning reflects the window
/// rather than the size of `ε`.
pub fn fit_series(xs: &[f64], ys: &[f64], powers: &[i32]) -> Result<SeriesFit> {
    if xs.len() != ys.len() || xs.len() < powers.len() || powers.is_empty() {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: xs.len() as f64,
            reason: "need at least as many samples as fitted powers",
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "fit samples" });
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    let a = DMatrix::from_fn(xs.len(), powers.len(), |i, j| (xs[i] / scale).powi(powers[j]));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let b = DVector::from_column_slice(ys);
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::IllConditioned { cond })?;
    let fitted = &a * &sol;
    let ymax = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let resid = fitted
        .iter()
        .zip(ys)
        .map(|(f, y)| (f - y).abs())
        .fold(0.0, f64::max);
    Ok(SeriesFit {
        powers: powers.to_vec(),
        coeffs: sol
            .iter()
            .zip(powers)
            .map(|(c, &p)| c / scale.powi(p))
            .collect(),
        residual: if ymax > 0.0 { resid / ymax } else { resid },
        cond,
    })
}

/// How the `ε` window is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitScheme {
    /// `ε` only, with the fixed basis `ε^k, ε^{k+1}, ε^{k+2}`.
    Plain,
    /// `±ε`, with a square basis of `2n` consecutive powers. Evaluating both
    /// signs separates even and odd parts, so the leading odd coefficient is
    /// not contaminated by the next even one.
    Mirrored,
}

fn check_window(eps_set: &[f64]) -> Result<()> {
    let mut sorted = eps_set.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < 3 || sorted.len() != eps_set.len() {
        return Err(Error::InvalidParameter {
            name: "eps_set",
            value: eps_set.len() as f64,
            reason: "need at least three distinct values",
        });
    }
    if let Some(&bad) = eps_set.iter().find(|&&e| !(e > 0.0 && e <= 0.1)) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: bad,
            reason: "fit windows must lie in (0, 0.1]",
        });
    }
    Ok(())
}

/// Evaluated samples of an evaluator on a fit window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSamples {
    pub window: Vec<f64>,
    pub scheme: FitScheme,
    pub eps: Vec<f64>,
    pub triples: Vec<FunctionalTriple>,
}

pub fn sample_window<E>(evaluator: E, eps_set: &[f64], scheme: FitScheme) -> Result<FitSamples>
where
    E: Fn(f64) -> Result<FunctionalTriple>,
{
    check_window(eps_set)?;
    let eps: Vec<f64> = match scheme {
        FitScheme::Plain => eps_set.to_vec(),
        FitScheme::Mirrored => eps_set.iter().flat_map(|&e| [e, -e]).collect(),
    };
    let triples = eps.iter().map(|&e| evaluator(e)).collect::<Result<Vec<_>>>()?;
    Ok(FitSamples {
        window: eps_set.to_vec(),
        scheme,
        eps,
        triples,
    })
}

impl FitSamples {
    fn powers(&self, leading: i32) -> Vec<i32> {
        let n = match self.scheme {
            FitScheme::Plain => 3,
            FitScheme::Mirrored => self.eps.len() as i32,
        };
        (leading..leading + n).collect()
    }

    /// Fits of `𝓘, 𝓠, 𝓓` starting at `ε²`.
    pub fn fit_functionals(&self) -> Result<[SeriesFit; 3]> {
        let powers = self.powers(2);
        let col = |k: usize| self.triples.iter().map(|t| t.components()[k]).collect::<Vec<_>>();
        Ok([
            fit_series(&self.eps, &col(0), &powers)?,
            fit_series(&self.eps, &col(1), &powers)?,
            fit_series(&self.eps, &col(2), &powers)?,
        ])
    }

    /// Fit of the defect starting at `ε⁵`.
    pub fn fit_defect(&self) -> Result<SeriesFit> {
        let ys: Vec<f64> = self.triples.iter().map(|t| t.defect).collect();
        fit_series(&self.eps, &ys, &self.powers(5))
    }

    pub fn records(&self, family: &str) -> Result<[ExpansionRecord; 3]> {
        let [i, q, d] = self.fit_functionals()?;
        Ok([
            ExpansionRecord::fitted(family, "I", &i, &self.window),
            ExpansionRecord::fitted(family, "Q", &q, &self.window),
            ExpansionRecord::fitted(family, "D", &d, &self.window),
        ])
    }
}

/// Fitted records for `𝓘, 𝓠, 𝓓` of an evaluator.
pub fn fit_coefficients<E>(evaluator: E, family: &str, eps_set: &[f64], scheme: FitScheme) -> Result<[ExpansionRecord; 3]>
where
    E: Fn(f64) -> Result<FunctionalTriple>,
{
    sample_window(evaluator, eps_set, scheme)?.records(family)
}

/// Limit of `(ratio(ε) - 1)/ε` as `ε → 0`, by polynomial extrapolation
/// through the window (a quadratic in `ε` for three points).
pub fn quotient_slope<E>(evaluator: E, eps_set: &[f64]) -> Result<f64>
where
    E: Fn(f64) -> Result<FunctionalTriple>,
{
    check_window(eps_set)?;
    let mut g = Vec::with_capacity(eps_set.len());
    for &e in eps_set {
        let t = evaluator(e)?;
        let r = t.ratio.ok_or(Error::RatioUndefined { eps: e })?;
        g.push((r - 1.0) / e);
    }
    let degree = eps_set.len().min(3) as i32;
    let powers: Vec<i32> = (0..degree).collect();
    Ok(fit_series(eps_set, &g, &powers)?.coeffs[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::PeriodicGrid;
    use crate::simplex::{simplex_functionals, SimplexExpFamily};
    use crate::torus2d::{circle_functionals, torus_functionals, CircleExpFamily, TorusExpFamily};
    use proptest::prelude::*;

    fn torus(eps: f64) -> Result<FunctionalTriple> {
        torus_functionals(&TorusExpFamily::new(eps), &PeriodicGrid::square(64)?)
    }

    #[test]
    fn torus_closed_forms() {
        let t = closed_form_torus();
        assert_eq!(t.defect_coefficient, "-9/32");
        assert_eq!(t.slope, "-1/8");
        assert_eq!(t.records[2].exact.as_ref().unwrap()[1], "-3/16");
    }

    #[test]
    fn simplex_d2_closed_forms_match_torus() {
        let s = closed_form_simplex(2);
        let t = closed_form_torus();
        assert_eq!(s.defect_coefficient, t.defect_coefficient);
        for (a, b) in s.records.iter().zip(&t.records) {
            assert_eq!(a.exact, b.exact);
        }
        assert_eq!(closed_form_simplex(3).slope, "-1/4");
        assert_eq!(closed_form_simplex(1).slope, "0");
    }

    #[test]
    fn exact_polynomial_is_recovered() {
        let xs: [f64; 4] = [0.01, 0.02, 0.04, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x * x - 0.2 * x * x * x + 0.7 * x.powi(4)).collect();
        let fit = fit_series(&xs, &ys, &[2, 3, 4]).unwrap();
        assert!((fit.coeff(2).unwrap() - 1.5).abs() < 1e-10);
        assert!((fit.coeff(3).unwrap() + 0.2).abs() < 1e-8);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn zero_evaluator_fits_zero() {
        let recs = fit_coefficients(|_| Ok(FunctionalTriple::zero()), "zero", &DEFAULT_WINDOW, FitScheme::Plain).unwrap();
        for r in recs {
            assert_eq!((r.quadratic, r.cubic), (0.0, 0.0));
        }
    }

    #[test]
    fn nearly_equal_window_is_ill_conditioned() {
        let xs = [0.04, 0.04 + 1e-6, 0.04 + 2e-6];
        let r = fit_series(&xs, &[1.0, 1.0, 1.0], &[2, 3, 4]);
        assert!(matches!(r, Err(Error::IllConditioned { .. })));
        assert!(check_window(&[0.01, 0.02]).is_err());
        assert!(check_window(&[0.01, 0.02, 0.2]).is_err());
    }

    #[test]
    fn mirrored_torus_fit_matches_closed_forms() {
        let fitted = fit_coefficients(torus, "torus", &DEFAULT_WINDOW, FitScheme::Mirrored).unwrap();
        for (f, c) in fitted.iter().zip(&closed_form_torus().records) {
            assert!(f.rel_error(c) <= 1e-4, "{f:?}");
        }
    }

    #[test]
    fn plain_fit_of_d_is_biased_by_the_quartic_term() {
        let fitted = fit_coefficients(torus, "torus", &DEFAULT_WINDOW, FitScheme::Plain).unwrap();
        let err = (fitted[2].cubic / -0.1875 - 1.0).abs();
        assert!(err > 0.01 && err < 0.05, "{err}");
        // The quadratic coefficient is unaffected at this level.
        assert!((fitted[2].quadratic / 1.5 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn defect_coefficient() {
        let mirrored = sample_window(torus, &DEFAULT_WINDOW, FitScheme::Mirrored).unwrap();
        let c5 = mirrored.fit_defect().unwrap().coeff(5).unwrap();
        assert!((c5 / -0.28125 - 1.0).abs() <= 1e-2, "{c5}");
        let plain = sample_window(torus, &DEFAULT_WINDOW, FitScheme::Plain).unwrap();
        let c5 = plain.fit_defect().unwrap().coeff(5).unwrap();
        assert!((c5 / -0.28125 - 1.0).abs() <= 1e-2, "{c5}");
    }

    #[test]
    fn shrinking_window_improves_plain_fit() {
        let wide = fit_coefficients(torus, "torus", &[0.02, 0.04, 0.08], FitScheme::Plain).unwrap();
        let narrow = fit_coefficients(torus, "torus", &[0.01, 0.02, 0.04], FitScheme::Plain).unwrap();
        let exact = closed_form_torus();
        for k in 0..3 {
            assert!(narrow[k].rel_error(&exact.records[k]) < wide[k].rel_error(&exact.records[k]));
        }
    }

    #[test]
    fn quotient_slopes() {
        let s = quotient_slope(torus, &DEFAULT_WINDOW).unwrap();
        assert!((s / -0.125 - 1.0).abs() <= 2e-2, "{s}");
        let circle = |e: f64| circle_functionals(&CircleExpFamily::new(e), &PeriodicGrid::circle(64)?);
        assert!(quotient_slope(circle, &DEFAULT_WINDOW).unwrap().abs() <= 5e-3);
        let d3 = |e: f64| simplex_functionals(&SimplexExpFamily::new(3, e)?, 32);
        let s = quotient_slope(d3, &DEFAULT_WINDOW).unwrap();
        assert!((s / -0.25 - 1.0).abs() <= 2e-2, "{s}");
        assert!(matches!(
            quotient_slope(|_| Ok(FunctionalTriple::zero()), &DEFAULT_WINDOW),
            Err(Error::RatioUndefined { .. })
        ));
    }

    proptest! {
        #[test]
        fn fits_recover_random_cubics(c2 in -5.0f64..5.0, c3 in -5.0f64..5.0, c4 in -5.0f64..5.0) {
            let xs: [f64; 3] = [0.01, 0.02, 0.04];
            let ys: Vec<f64> = xs.iter().map(|x| c2 * x * x + c3 * x.powi(3) + c4 * x.powi(4)).collect();
            let fit = fit_series(&xs, &ys, &[2, 3, 4]).unwrap();
            prop_assert!((fit.coeff(2).unwrap() - c2).abs() <= 1e-9 * (1.0 + c2.abs() + c3.abs() + c4.abs()));
            prop_assert!((fit.coeff(3).unwrap() - c3).abs() <= 1e-7 * (1.0 + c2.abs() + c3.abs() + c4.abs()));
        }
    }
}
