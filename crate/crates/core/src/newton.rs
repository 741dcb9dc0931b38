//! The embedded Newton iteration: solve the frame-coordinate Newton system
//! `Σ_i h_ij v^i = −g_j`, assemble the ambient line-search vector
//! `v = Σ v^j b_j`, retract, repeat until `‖∂G‖` falls under the stopping
//! tolerance.
//!
//! Newton converges to critical points of any index, not just minima; a
//! converged trace says nothing about minimality. Classification of the
//! endpoint is a separate step (see [`crate::families::classify`]).

use crate::constraint::{
    embedded_gradient, frame_gradient_coords, restricted_hessian, ConstraintError,
    ConstraintSystem, CostFunction, TangentFrame,
};
use crate::families::FamilyInstance;
use crate::sphere::Configuration;
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

/// Geometry hooks the iteration needs from a manifold instance: a tangent
/// frame at each point, a retraction, and the domain guard.
pub trait ManifoldOps {
    fn tangent_frame(&self, x: &DVector<f64>) -> Result<TangentFrame, ConstraintError>;

    /// Move from `x` along the ambient tangent vector `v` back onto the
    /// manifold; `None` when the step leaves the retraction's domain.
    fn retract(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>>;

    /// Instance-specific admissibility (e.g. the minimum-separation guard).
    fn in_domain(&self, _x: &DVector<f64>) -> bool {
        true
    }
}

/// Optional globalization when the raw Newton step misbehaves. Off by
/// default; the random-start preset enables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    None,
    DampedGradient,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonSettings {
    /// Stop when `‖∂G‖` falls below this.
    pub grad_tol: f64,
    /// Maximum number of Newton steps.
    pub max_iters: usize,
    /// Relative eigenvalue cutoff for rank-revealing solves of the Newton
    /// system, and the inconsistency threshold for its residual.
    pub rank_tol: f64,
    /// Cap on the frame-coordinate norm of the step, when enabled.
    pub step_cap: Option<f64>,
    /// Rescue strategy when the Newton step is unusable or sharply
    /// increases `‖∂G‖`.
    pub fallback: Fallback,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 100,
            rank_tol: 1e-8,
            step_cap: None,
            fallback: Fallback::None,
        }
    }
}

impl NewtonSettings {
    /// Globalized preset for solves from random starting points: step cap
    /// at frame-coordinate norm 1 plus the damped-gradient fallback.
    pub fn random_start() -> Self {
        Self {
            step_cap: Some(1.0),
            fallback: Fallback::DampedGradient,
            ..Self::default()
        }
    }

    fn is_valid(&self) -> bool {
        self.grad_tol > 0.0
            && self.rank_tol > 0.0
            && self.max_iters >= 1
            && self.step_cap.is_none_or(|c| c > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    MaxIters,
    SingularSystem,
    LeftDomain,
}

/// One visited point: its embedded-gradient norm, the ambient norm of the
/// step taken from it (0 for the final point), and whether the Newton
/// system was rank-deficient there.
#[derive(Debug, Clone)]
pub struct NewtonIterate {
    pub point: DVector<f64>,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonTrace {
    pub iterates: Vec<NewtonIterate>,
    pub status: NewtonStatus,
}

impl NewtonTrace {
    pub fn converged(&self) -> bool {
        self.status == NewtonStatus::Converged
    }

    /// The last visited point, if any iterate was recorded.
    pub fn endpoint(&self) -> Option<&DVector<f64>> {
        self.iterates.last().map(|it| &it.point)
    }

    /// Number of steps taken (visited points minus one).
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn final_grad_norm(&self) -> Option<f64> {
        self.iterates.last().map(|it| it.grad_norm)
    }
}

#[derive(Debug, Error)]
pub enum NewtonError {
    /// The Newton system is inconsistent: the least-squares residual
    /// exceeds `rank_tol · ‖g‖`.
    #[error("singular Newton system (least-squares residual {residual:.3e} vs gradient norm {grad_norm:.3e})")]
    SingularSystem { residual: f64, grad_norm: f64 },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Solution of one Newton linear system.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    /// The ambient line-search vector `v = Σ v^j b_j`.
    pub ambient: DVector<f64>,
    /// The frame coordinates `(v^1, …, v^s)`.
    pub coords: DVector<f64>,
    /// True when the system was solved in the minimal-norm least-squares
    /// sense because `h` is rank-deficient at `rank_tol`.
    pub rank_deficient: bool,
}

/// Solve the Newton system `h v = −g` at `x` in the given frame.
///
/// When `h` is nonsingular the solution is unique; when it is
/// rank-deficient (relative eigenvalue cutoff `rank_tol`) the minimal-norm
/// least-squares solution is returned and flagged. An inconsistent system —
/// least-squares residual above `rank_tol · ‖g‖` — is an error.
pub fn newton_step<C, G>(
    cs: &C,
    cost: &G,
    frame: &TangentFrame,
    x: &DVector<f64>,
    settings: &NewtonSettings,
) -> Result<NewtonStep, NewtonError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    let g = frame_gradient_coords(cs, cost, frame, x)?;
    let h = restricted_hessian(cs, cost, frame, x)?;

    // Symmetric eigendecomposition doubles as a rank-revealing solver.
    let eig = h.matrix().clone().symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cutoff = settings.rank_tol * max_abs;
    // Eigenvalues at round-off level span the numerical null space of h;
    // only the part of g living there counts toward inconsistency. Small
    // non-zero eigenvalues below `cutoff` are merely truncated from the
    // returned step, which keeps the iteration well-defined near the
    // critical curves where the Hessian has an exact kernel direction.
    let null_cutoff = 64.0 * f64::EPSILON * max_abs;

    let mut coords = DVector::zeros(g.len());
    let mut rank_deficient = false;
    let mut null_residual_sq = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let q = eig.eigenvectors.column(k);
        if lambda.abs() <= cutoff || max_abs == 0.0 {
            rank_deficient = true;
            if lambda.abs() <= null_cutoff {
                let c = q.dot(&g);
                null_residual_sq += c * c;
            }
            continue;
        }
        let c = q.dot(&g) / lambda;
        coords -= q * c;
    }

    let residual = null_residual_sq.sqrt();
    let grad_norm = g.norm();
    // A right-hand side already below the stopping tolerance is round-off;
    // the minimal-norm step is returned without an inconsistency verdict.
    if grad_norm >= settings.grad_tol && residual > settings.rank_tol * grad_norm {
        return Err(NewtonError::SingularSystem {
            residual,
            grad_norm,
        });
    }
    Ok(NewtonStep {
        ambient: frame.ambient(&coords),
        coords,
        rank_deficient,
    })
}

fn grad_norm_at<C, G>(cs: &C, cost: &G, x: &DVector<f64>) -> Option<f64>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    embedded_gradient(cs, cost, x).ok().map(|g| g.norm())
}

/// One backtracking step along `−∂G`: halve until `‖∂G‖` decreases.
fn damped_gradient_step<C, G, M>(
    cs: &C,
    cost: &G,
    geometry: &M,
    x: &DVector<f64>,
    neg_grad: &DVector<f64>,
    grad_norm: f64,
) -> Option<(DVector<f64>, f64)>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
    M: ManifoldOps + ?Sized,
{
    let mut t = 1.0 / grad_norm.max(1.0);
    for _ in 0..40 {
        if let Some(candidate) = geometry.retract(x, &(neg_grad * t)) {
            if geometry.in_domain(&candidate) {
                if let Some(nd) = grad_norm_at(cs, cost, &candidate) {
                    if nd < grad_norm {
                        return Some((candidate, neg_grad.norm() * t));
                    }
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Iterate `x_{n+1} = R_{x_n}(v_{x_n})` from `x0` until `‖∂G‖ < grad_tol`,
/// the iteration budget runs out, the Newton system turns inconsistent, or
/// an iterate violates the domain guard.
///
/// Every visited point is recorded with its gradient norm; on `Converged`
/// the endpoint satisfies the constraints to retraction round-off.
pub fn newton_solve<C, G, M>(
    cs: &C,
    cost: &G,
    geometry: &M,
    x0: &DVector<f64>,
    settings: &NewtonSettings,
) -> NewtonTrace
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
    M: ManifoldOps + ?Sized,
{
    assert!(settings.is_valid(), "invalid Newton settings");
    let mut iterates: Vec<NewtonIterate> = Vec::new();
    if !geometry.in_domain(x0) {
        return NewtonTrace {
            iterates,
            status: NewtonStatus::LeftDomain,
        };
    }

    let mut x = x0.clone();
    let mut status = NewtonStatus::MaxIters;

    for iter in 0..=settings.max_iters {
        let grad = match embedded_gradient(cs, cost, &x) {
            Ok(g) => g,
            Err(_) => {
                status = NewtonStatus::SingularSystem;
                break;
            }
        };
        let nd = grad.norm();
        if nd < settings.grad_tol {
            iterates.push(NewtonIterate {
                point: x,
                grad_norm: nd,
                step_norm: 0.0,
                rank_deficient: false,
            });
            status = NewtonStatus::Converged;
            break;
        }
        if iter == settings.max_iters {
            iterates.push(NewtonIterate {
                point: x,
                grad_norm: nd,
                step_norm: 0.0,
                rank_deficient: false,
            });
            status = NewtonStatus::MaxIters;
            break;
        }

        let frame = match geometry.tangent_frame(&x) {
            Ok(f) => f,
            Err(_) => {
                iterates.push(NewtonIterate {
                    point: x,
                    grad_norm: nd,
                    step_norm: 0.0,
                    rank_deficient: false,
                });
                status = NewtonStatus::SingularSystem;
                break;
            }
        };

        let step = match newton_step(cs, cost, &frame, &x, settings) {
            Ok(mut step) => {
                if let Some(cap) = settings.step_cap {
                    let norm = step.coords.norm();
                    if norm > cap {
                        let scale = cap / norm;
                        step.coords *= scale;
                        step.ambient *= scale;
                    }
                }
                Some(step)
            }
            Err(_) => None,
        };

        let neg_grad = -&grad;
        let mut rank_flag = false;
        // Status to report when no usable step is found on this iteration.
        let mut failure_status = NewtonStatus::LeftDomain;
        let accepted: Option<(DVector<f64>, f64)> = match step {
            Some(step) => {
                rank_flag = step.rank_deficient;
                let candidate = geometry
                    .retract(&x, &step.ambient)
                    .filter(|c| geometry.in_domain(c));
                match (candidate, settings.fallback) {
                    (Some(c), Fallback::None) => Some((c, step.ambient.norm())),
                    (Some(c), Fallback::DampedGradient) => {
                        let nd_next =
                            grad_norm_at(cs, cost, &c).unwrap_or(f64::INFINITY);
                        if nd_next > 10.0 * nd {
                            damped_gradient_step(cs, cost, geometry, &x, &neg_grad, nd)
                                .or(Some((c, step.ambient.norm())))
                        } else {
                            Some((c, step.ambient.norm()))
                        }
                    }
                    (None, Fallback::DampedGradient) => {
                        damped_gradient_step(cs, cost, geometry, &x, &neg_grad, nd)
                    }
                    (None, Fallback::None) => None,
                }
            }
            None => {
                // An inconsistent Newton system is rescued by a gradient
                // step when the fallback is enabled.
                failure_status = NewtonStatus::SingularSystem;
                match settings.fallback {
                    Fallback::DampedGradient => {
                        damped_gradient_step(cs, cost, geometry, &x, &neg_grad, nd)
                    }
                    Fallback::None => None,
                }
            }
        };

        match accepted {
            Some((next, step_norm)) => {
                iterates.push(NewtonIterate {
                    point: x,
                    grad_norm: nd,
                    step_norm,
                    rank_deficient: rank_flag,
                });
                x = next;
            }
            None => {
                iterates.push(NewtonIterate {
                    point: x,
                    grad_norm: nd,
                    step_norm: 0.0,
                    rank_deficient: rank_flag,
                });
                status = failure_status;
                break;
            }
        }
    }

    NewtonTrace { iterates, status }
}

/// Match a converged endpoint against known family generators by the
/// sorted pairwise-distance multiset (plus the fixed-electron distance
/// profile, which separates variant tags). Returns `None` ("unknown") for
/// non-converged traces or unmatched endpoints.
pub fn classify_run_endpoint(
    trace: &NewtonTrace,
    known: &[FamilyInstance],
) -> Option<crate::families::FamilyLabel> {
    const MATCH_TOL: f64 = 1e-6;
    if !trace.converged() {
        return None;
    }
    let cfg = Configuration::from_ambient(trace.endpoint()?).ok()?;
    let d10 = cfg.pairwise_distances();
    let d5 = cfg.fixed_point_distances();
    known
        .iter()
        .find(|inst| {
            let close10 = inst
                .distances
                .iter()
                .zip(&d10)
                .all(|(a, b)| (a - b).abs() < MATCH_TOL);
            let close5 = inst
                .fixed_point_distances
                .iter()
                .zip(&d5)
                .all(|(a, b)| (a - b).abs() < MATCH_TOL);
            close10 && close5
        })
        .map(|inst| inst.label)
}
