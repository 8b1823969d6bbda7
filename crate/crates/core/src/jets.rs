//! Log-density jets and the pointwise integrands of the three functionals.
//!
//! A density `f = e^u` enters the functionals only through the jet of `u`
//! (gradient, Hessian, third-derivative tensor). With `H = -∇²u`:
//!
//! | integrand | formula |
//! |-----------|---------|
//! | `j1` | `tr H` |
//! | `j2` | `tr H²` |
//! | `j3` | `|∇H|² + 2 tr H³` |
//!
//! Weighting `j1`, `j2`, `j3` by `f` and integrating gives `I`, `Q`, `D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Densities below this value are treated as underflow, not as a model property.
pub const POSITIVITY_THRESHOLD: f64 = 1e-300;

/// Value, gradient, Hessian and third-derivative tensor of a scalar field at a point.
///
/// Tensors are stored densely; the constructors that accept raw tensors
/// symmetrize them, so every `Jet` is symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const D: usize> {
    value: f64,
    grad: [f64; D],
    hess: [[f64; D]; D],
    third: [[[f64; D]; D]; D],
}

impl<const D: usize> Jet<D> {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            grad: [0.0; D],
            hess: [[0.0; D]; D],
            third: [[[0.0; D]; D]; D],
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            value,
            ..Self::zero()
        }
    }

    /// Builds a jet from raw tensors, projecting them onto their symmetric parts.
    pub fn new(value: f64, grad: [f64; D], hess: [[f64; D]; D], third: [[[f64; D]; D]; D]) -> Self {
        Self {
            value,
            grad,
            hess: symmetrize2(&hess),
            third: symmetrize3(&third),
        }
    }

    /// Builds a jet from tensors the caller guarantees are already symmetric.
    pub(crate) fn from_symmetric(
        value: f64,
        grad: [f64; D],
        hess: [[f64; D]; D],
        third: [[[f64; D]; D]; D],
    ) -> Self {
        debug_assert!(is_symmetric2(&hess, 1e-12) && is_symmetric3(&third, 1e-12));
        Self {
            value,
            grad,
            hess,
            third,
        }
    }

    pub fn dim(&self) -> usize {
        D
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64; D] {
        &self.grad
    }

    pub fn hess(&self) -> &[[f64; D]; D] {
        &self.hess
    }

    pub fn third(&self) -> &[[[f64; D]; D]; D] {
        &self.third
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = *self;
        out.value *= c;
        for i in 0..D {
            out.grad[i] *= c;
            for j in 0..D {
                out.hess[i][j] *= c;
                for k in 0..D {
                    out.third[i][j][k] *= c;
                }
            }
        }
        out
    }

    /// Jet of `x ↦ g(x / r)`: the k-th derivative picks up `r^{-k}`.
    pub fn dilated(&self, r: f64) -> Self {
        let inv = 1.0 / r;
        let mut out = *self;
        for i in 0..D {
            out.grad[i] *= inv;
            for j in 0..D {
                out.hess[i][j] *= inv * inv;
                for k in 0..D {
                    out.third[i][j][k] *= inv * inv * inv;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        out.value += other.value;
        for i in 0..D {
            out.grad[i] += other.grad[i];
            for j in 0..D {
                out.hess[i][j] += other.hess[i][j];
                for k in 0..D {
                    out.third[i][j][k] += other.third[i][j][k];
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().flatten().all(|v| v.is_finite())
            && self.third.iter().flatten().flatten().all(|v| v.is_finite())
    }

    /// Jet of `exp` of this field; used to build density jets from log-jets.
    pub fn exp(&self) -> Self {
        let f = self.value.exp();
        let g = &self.grad;
        let h = &self.hess;
        let t = &self.third;
        let mut grad = [0.0; D];
        let mut hess = [[0.0; D]; D];
        let mut third = [[[0.0; D]; D]; D];
        for i in 0..D {
            grad[i] = f * g[i];
            for j in 0..D {
                hess[i][j] = f * (h[i][j] + g[i] * g[j]);
                for k in 0..D {
                    third[i][j][k] = f
                        * (t[i][j][k]
                            + h[i][j] * g[k]
                            + h[i][k] * g[j]
                            + h[j][k] * g[i]
                            + g[i] * g[j] * g[k]);
                }
            }
        }
        Self::from_symmetric(f, grad, hess, third)
    }
}

/// Jet of `u = log f`. The value `u` is carried along but no integrand uses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensityJet<const D: usize>(Jet<D>);

impl<const D: usize> LogDensityJet<D> {
    pub fn new(jet: Jet<D>) -> Self {
        Self(jet)
    }

    pub fn jet(&self) -> &Jet<D> {
        &self.0
    }

    pub fn u(&self) -> f64 {
        self.0.value
    }
}

/// Pointwise integrands `(tr H, tr H², |∇H|² + 2 tr H³)` with `H = -∇²u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrandValues {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

pub fn integrands_at<const D: usize>(jet: &LogDensityJet<D>) -> Result<IntegrandValues> {
    let jet = jet.jet();
    if !jet.is_finite() {
        return Err(Error::NonFinite { what: "log-density jet" });
    }
    let u2 = &jet.hess;
    let mut j1 = 0.0;
    let mut j2 = 0.0;
    let mut grad_sq = 0.0;
    let mut cubic = 0.0;
    for i in 0..D {
        j1 -= u2[i][i];
        for j in 0..D {
            j2 += u2[i][j] * u2[i][j];
            for k in 0..D {
                grad_sq += jet.third[i][j][k] * jet.third[i][j][k];
                // tr((-u2)^3) = -Σ u2_ij u2_jk u2_ki
                cubic -= u2[i][j] * u2[j][k] * u2[k][i];
            }
        }
    }
    Ok(IntegrandValues {
        j1,
        j2,
        j3: grad_sq + 2.0 * cubic,
    })
}

/// Converts the jet of a positive density into the jet of its logarithm.
///
/// `at` names the evaluation point in error messages.
pub fn jet_of_log_from_density_jet<const D: usize>(
    density: &Jet<D>,
    at: &[f64],
) -> Result<LogDensityJet<D>> {
    let f = density.value;
    if !f.is_finite() || f <= POSITIVITY_THRESHOLD {
        return Err(Error::Positivity {
            at: at.to_vec(),
            value: f,
        });
    }
    let inv = 1.0 / f;
    let mut g = [0.0; D];
    for i in 0..D {
        g[i] = density.grad[i] * inv;
    }
    let mut hess = [[0.0; D]; D];
    let mut third = [[[0.0; D]; D]; D];
    for i in 0..D {
        for j in 0..D {
            hess[i][j] = density.hess[i][j] * inv - g[i] * g[j];
        }
    }
    // ∇³u = ∇³f/f - 3 Sym(∇²f ⊗ ∇f)/f² + 2 (∇f)^{⊗3}/f³, written with g = ∇f/f.
    for i in 0..D {
        for j in 0..D {
            for k in 0..D {
                let h_ij = density.hess[i][j] * inv;
                let h_ik = density.hess[i][k] * inv;
                let h_jk = density.hess[j][k] * inv;
                third[i][j][k] = density.third[i][j][k] * inv
                    - (h_ij * g[k] + h_ik * g[j] + h_jk * g[i])
                    + 2.0 * g[i] * g[j] * g[k];
            }
        }
    }
    Ok(LogDensityJet(Jet::from_symmetric(
        f.ln(),
        g,
        symmetrize2(&hess),
        symmetrize3(&third),
    )))
}

/// The three functionals of a density together with the log-convexity defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTriple {
    pub i_val: f64,
    pub q_val: f64,
    pub d_val: f64,
    pub defect: f64,
    pub ratio: Option<f64>,
}

impl FunctionalTriple {
    pub fn new(i_val: f64, q_val: f64, d_val: f64) -> Self {
        let ratio = (q_val > 0.0).then(|| i_val * d_val / (q_val * q_val));
        Self {
            i_val,
            q_val,
            d_val,
            defect: i_val * d_val - q_val * q_val,
            ratio,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.i_val, self.q_val, self.d_val]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Turns averages `[⟨w⟩, ⟨w j1⟩, ⟨w j2⟩, ⟨w j3⟩]` into a triple.
pub(crate) fn triple_from_weighted_sums(sums: [f64; 4]) -> FunctionalTriple {
    let z = sums[0];
    FunctionalTriple::new(sums[1] / z, sums[2] / z, sums[3] / z)
}

fn symmetrize2<const D: usize>(m: &[[f64; D]; D]) -> [[f64; D]; D] {
    let mut out = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            out[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    out
}

fn symmetrize3<const D: usize>(t: &[[[f64; D]; D]; D]) -> [[[f64; D]; D]; D] {
    let mut out = [[[0.0; D]; D]; D];
    for i in 0..D {
        for j in 0..D {
            for k in 0..D {
                out[i][j][k] = (t[i][j][k]
                    + t[i][k][j]
                    + t[j][i][k]
                    + t[j][k][i]
                    + t[k][i][j]
                    + t[k][j][i])
                    / 6.0;
            }
        }
    }
    out
}

fn is_symmetric2<const D: usize>(m: &[[f64; D]; D], tol: f64) -> bool {
    (0..D).all(|i| (0..D).all(|j| (m[i][j] - m[j][i]).abs() <= tol * (1.0 + m[i][j].abs())))
}

fn is_symmetric3<const D: usize>(t: &[[[f64; D]; D]; D], tol: f64) -> bool {
    (0..D).all(|i| {
        (0..D).all(|j| {
            (0..D).all(|k| {
                let v = t[i][j][k];
                [t[i][k][j], t[j][i][k], t[j][k][i], t[k][i][j], t[k][j][i]]
                    .iter()
                    .all(|w| (v - w).abs() <= tol * (1.0 + v.abs()))
            })
        })
    })
}
