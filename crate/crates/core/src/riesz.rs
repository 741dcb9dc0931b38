//! The Riesz s-energy of the five electrons,
//! `G_s(p) = Σ_{i<j} ‖p_i − p_j‖⁻ˢ`, with analytic ambient gradient and
//! Hessian. `s = 1` is the Coulomb potential of the Thomson problem.

use crate::constraint::CostFunction;
use crate::sphere::{fixed_point, Configuration, MIN_SEPARATION};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RieszError {
    #[error("Riesz exponent must be strictly positive, got {s}")]
    NonPositiveExponent { s: f64 },
    #[error("singular pair: electrons {i} and {j} are {dist:e} apart (minimum {MIN_SEPARATION:e})")]
    Singular { i: usize, j: usize, dist: f64 },
}

/// A validated Riesz exponent, `s > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszExponent(f64);

impl RieszExponent {
    pub fn new(s: f64) -> Result<Self, RieszError> {
        if s > 0.0 && s.is_finite() {
            Ok(Self(s))
        } else {
            Err(RieszError::NonPositiveExponent { s })
        }
    }

    /// The Coulomb case, `s = 1`.
    pub fn coulomb() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn ambient_points(x: &DVector<f64>) -> [Vector3<f64>; 5] {
    [
        Vector3::new(x[0], x[1], x[2]),
        Vector3::new(x[3], x[4], x[5]),
        Vector3::new(x[6], x[7], x[8]),
        Vector3::new(x[9], x[10], x[11]),
        fixed_point(),
    ]
}

/// The prolonged cost `G_s : ℝ¹² → ℝ` as an ambient evaluator triple.
///
/// The evaluators are pure and unguarded; use the module-level [`energy`],
/// [`energy_gradient`] and [`energy_hessian`] for the separation-checked
/// entry points on configurations.
#[derive(Debug, Clone, Copy)]
pub struct RieszEnergy {
    s: f64,
}

impl RieszEnergy {
    pub fn new(exponent: RieszExponent) -> Self {
        Self {
            s: exponent.value(),
        }
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }
}

impl CostFunction for RieszEnergy {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let pts = ambient_points(x);
        let mut e = 0.0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                e += (pts[i] - pts[j]).norm().powf(-self.s);
            }
        }
        e
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        // d/dp_i of r^{-s} over all pairs touching p_i:
        // -s (p_i - p_j) / r^{s+2}.
        let pts = ambient_points(x);
        let mut g = DVector::zeros(12);
        for i in 0..4 {
            let mut gi = Vector3::zeros();
            for j in 0..5 {
                if j == i {
                    continue;
                }
                let d = pts[i] - pts[j];
                gi += d * (-self.s * d.norm().powf(-self.s - 2.0));
            }
            g.rows_mut(3 * i, 3).copy_from(&gi);
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let pts = ambient_points(x);
        let s = self.s;
        let mut hess = DMatrix::zeros(12, 12);
        let mut add = |bi: usize, bj: usize, m: &Matrix3<f64>, sign: f64| {
            for r in 0..3 {
                for c in 0..3 {
                    hess[(3 * bi + r, 3 * bj + c)] += sign * m[(r, c)];
                }
            }
        };
        for i in 0..4 {
            for j in (i + 1)..5 {
                let d = pts[i] - pts[j];
                let r = d.norm();
                // A = s(s+2) r^{-s-4} d dᵀ − s r^{-s-2} I
                let a = d * d.transpose() * (s * (s + 2.0) * r.powf(-s - 4.0))
                    - Matrix3::identity() * (s * r.powf(-s - 2.0));
                add(i, i, &a, 1.0);
                if j < 4 {
                    add(j, j, &a, 1.0);
                    add(i, j, &a, -1.0);
                    add(j, i, &a, -1.0);
                }
            }
        }
        hess
    }
}

fn check_separation(cfg: &Configuration) -> Result<(), RieszError> {
    let pts = cfg.points();
    for i in 0..5 {
        for j in (i + 1)..5 {
            let dist = (pts[i] - pts[j]).norm();
            if dist < MIN_SEPARATION {
                return Err(RieszError::Singular { i, j, dist });
            }
        }
    }
    Ok(())
}

/// Total Riesz s-energy over the 10 unordered pairs, fixed electron
/// included.
pub fn energy(cfg: &Configuration, s: RieszExponent) -> Result<f64, RieszError> {
    check_separation(cfg)?;
    Ok(RieszEnergy::new(s).value(&cfg.ambient()))
}

/// Analytic ambient gradient of the energy, as a 12-vector over the free
/// electrons.
pub fn energy_gradient(cfg: &Configuration, s: RieszExponent) -> Result<DVector<f64>, RieszError> {
    check_separation(cfg)?;
    Ok(RieszEnergy::new(s).gradient(&cfg.ambient()))
}

/// Analytic ambient Hessian of the energy, 12×12 symmetric.
pub fn energy_hessian(cfg: &Configuration, s: RieszExponent) -> Result<DMatrix<f64>, RieszError> {
    check_separation(cfg)?;
    Ok(RieszEnergy::new(s).hessian(&cfg.ambient()))
}

/// Left-hand side of the criticality system written directly from the pair
/// sums: block `i` is `Σ_{j≠i} (p_j − ⟨p_j, p_i⟩ p_i) / ‖p_i − p_j‖^{s+2}`.
///
/// On the unit level set this equals `∂G_s / s`; a configuration is
/// critical exactly when all twelve components vanish. Kept as an
/// independent route for cross-checking the embedded gradient.
pub fn critical_equation_residual(
    cfg: &Configuration,
    s: RieszExponent,
) -> Result<DVector<f64>, RieszError> {
    check_separation(cfg)?;
    let pts = cfg.points();
    let s = s.value();
    let mut out = DVector::zeros(12);
    for i in 0..4 {
        let mut acc = Vector3::zeros();
        for j in 0..5 {
            if j == i {
                continue;
            }
            let r = (pts[i] - pts[j]).norm();
            acc += (pts[j] - pts[i] * pts[j].dot(&pts[i])) * r.powf(-s - 2.0);
        }
        out.rows_mut(3 * i, 3).copy_from(&acc);
    }
    Ok(out)
}
