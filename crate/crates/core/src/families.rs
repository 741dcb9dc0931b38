//! The named critical families of the five-electron problem: generators for
//! their defining curves, scalar solvers for their shape equations,
//! Morse/Morse–Bott classification, and the s-sweep bifurcation scanner.
//!
//! Four families are tracked. The bi-pyramid and regular pentagon are
//! critical for every `s > 0`; the square right pyramid is critical at the
//! height `α` solving `T_s(α) = 0`; the double-tetrahedron branch exists
//! only for `s` above its birth threshold and solves the two-variable
//! system `E_s(β,γ) = E_s(γ,β) = 0`.

use crate::constraint::{embedded_gradient, restricted_hessian, ConstraintError, MetricEigen};
use crate::riesz::{self, RieszEnergy, RieszError, RieszExponent};
use crate::sphere::{chart_metric_gram, product_frame, Configuration, SphereProductConstraints};
use nalgebra::{DVector, Rotation3, Vector2, Vector3};
use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Absolute embedded-gradient residual under which a configuration counts
/// as critical for classification purposes.
pub const CRITICALITY_TOL: f64 = 1e-8;

/// Eigenvalues within `ZERO_TOL_FACTOR · max|λ|` of zero count toward the
/// nullity; separates the structural Morse–Bott zero mode from small
/// genuine eigenvalues.
pub const ZERO_TOL_FACTOR: f64 = 1e-7;

/// Relative residual bound for the kernel check `‖h·w‖ ≤ tol·‖h‖·‖w‖` on
/// the curve tangent.
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-6;

/// Bisection refinement width for bifurcation thresholds in `s`.
pub const BIFURCATION_REFINE_TOL: f64 = 1e-8;

const FAMILY_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FamiliesError {
    #[error("no sign change of the pyramid height equation in (-1, 0) at s = {s}")]
    NoRoot { s: f64 },
    #[error("no non-trivial double-tetrahedron solution at s = {s}")]
    NotPresent { s: f64 },
    #[error("configuration is not critical: embedded-gradient residual {residual:.3e} exceeds {CRITICALITY_TOL:e}")]
    NotCritical { residual: f64 },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Riesz(#[from] RieszError),
}

/// The four family names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    BiPyramid,
    SquareRightPyramid,
    RegularPentagon,
    DoubleTetrahedron,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::BiPyramid => "bi-pyramid",
            Family::SquareRightPyramid => "square-right-pyramid",
            Family::RegularPentagon => "regular-pentagon",
            Family::DoubleTetrahedron => "double-tetrahedron",
        }
    }

    pub const ALL: [Family; 4] = [
        Family::BiPyramid,
        Family::SquareRightPyramid,
        Family::RegularPentagon,
        Family::DoubleTetrahedron,
    ];
}

/// A family together with the role played by the fixed electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyLabel {
    /// Fixed electron is a vertex of the equilateral triangle.
    BiPyramidTriangleVertex,
    /// Fixed electron is one of the two antipodal points.
    BiPyramidAxial,
    /// Fixed electron at the apex of the pyramid.
    PyramidApex,
    /// Fixed electron is a vertex of the square base.
    PyramidBaseVertex,
    Pentagon,
    DoubleTetrahedron,
}

impl FamilyLabel {
    pub fn family(self) -> Family {
        match self {
            FamilyLabel::BiPyramidTriangleVertex | FamilyLabel::BiPyramidAxial => Family::BiPyramid,
            FamilyLabel::PyramidApex | FamilyLabel::PyramidBaseVertex => {
                Family::SquareRightPyramid
            }
            FamilyLabel::Pentagon => Family::RegularPentagon,
            FamilyLabel::DoubleTetrahedron => Family::DoubleTetrahedron,
        }
    }

    pub fn name(self) -> &'static str {
        self.family().name()
    }

    pub fn variant_name(self) -> &'static str {
        match self {
            FamilyLabel::BiPyramidTriangleVertex => "fixed-on-triangle",
            FamilyLabel::BiPyramidAxial => "fixed-axial",
            FamilyLabel::PyramidApex => "fixed-apex",
            FamilyLabel::PyramidBaseVertex => "fixed-base-vertex",
            FamilyLabel::Pentagon => "canonical",
            FamilyLabel::DoubleTetrahedron => "canonical",
        }
    }
}

/// Shape parameters pinning one configuration of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyShape {
    BiPyramid,
    SquareRightPyramid { alpha: f64 },
    RegularPentagon,
    DoubleTetrahedron { beta: f64, gamma: f64 },
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// The bi-pyramid curve `c(λ)`, `λ ∈ [−1, 1]`: the fixed electron is a
/// vertex of the equilateral triangle, the remaining antipodal pair sweeps
/// the orthogonal great circle.
pub fn gen_bipyramid(lam: f64) -> Configuration {
    assert!((-1.0..=1.0).contains(&lam), "lambda must lie in [-1, 1]");
    let r = (1.0 - lam * lam).max(0.0).sqrt();
    let h = 3.0_f64.sqrt() / 2.0;
    Configuration::from_unit_points([
        Vector3::new(h * lam, -h * r, -0.5),
        Vector3::new(-h * lam, h * r, -0.5),
        Vector3::new(r, lam, 0.0),
        Vector3::new(-r, -lam, 0.0),
    ])
}

/// Bi-pyramid variant with the fixed electron as one of the antipodal pair:
/// an equilateral triangle on the equator (rotated by `lam`) plus the south
/// pole.
pub fn gen_bipyramid_axial(lam: f64) -> Configuration {
    let v = |k: f64| {
        let a = lam + k * 2.0 * PI / 3.0;
        Vector3::new(a.cos(), a.sin(), 0.0)
    };
    Configuration::from_unit_points([v(0.0), v(1.0), v(2.0), Vector3::new(0.0, 0.0, -1.0)])
}

/// The square-right-pyramid curve `c_α(λ)`: square base at signed height
/// `α ∈ (−1, 1)`, fixed electron at the apex.
pub fn gen_pyramid(alpha: f64, lam: f64) -> Configuration {
    assert!(alpha.abs() < 1.0, "alpha must lie in (-1, 1)");
    let r = (1.0 - alpha * alpha).sqrt();
    let v = |k: f64| {
        let a = lam + k * FRAC_PI_2;
        Vector3::new(r * a.cos(), r * a.sin(), alpha)
    };
    Configuration::from_unit_points([v(0.0), v(1.0), v(2.0), v(3.0)])
}

/// Pyramid variant with the fixed electron as a base vertex: the apex
/// pyramid rotated so its first base vertex lands on the north pole.
pub fn gen_pyramid_base_vertex(alpha: f64, lam: f64) -> Configuration {
    assert!(alpha.abs() < 1.0, "alpha must lie in (-1, 1)");
    let r = (1.0 - alpha * alpha).sqrt();
    let base = |k: f64| {
        let a = lam + k * FRAC_PI_2;
        Vector3::new(r * a.cos(), r * a.sin(), alpha)
    };
    let north = Vector3::new(0.0, 0.0, 1.0);
    let rot = Rotation3::rotation_between(&base(0.0), &north)
        .expect("base vertex is never antipodal to the north pole for |alpha| < 1");
    Configuration::from_unit_points([
        (rot * north).normalize(),
        (rot * base(1.0)).normalize(),
        (rot * base(2.0)).normalize(),
        (rot * base(3.0)).normalize(),
    ])
}

/// The regular-pentagon curve: five electrons (fixed one included) equally
/// spaced on a great circle through the north pole; `lam` rotates the
/// circle's plane about the polar axis.
pub fn gen_pentagon(lam: f64) -> Configuration {
    let (c1, s1) = ((PI / 10.0).cos(), (PI / 10.0).sin());
    let (c3, s3) = ((3.0 * PI / 10.0).cos(), (3.0 * PI / 10.0).sin());
    let (sl, cl) = (lam.sin(), lam.cos());
    Configuration::from_unit_points([
        Vector3::new(-sl * c1, -cl * c1, s1),
        Vector3::new(-sl * c3, -cl * c3, -s3),
        Vector3::new(sl * c3, cl * c3, -s3),
        Vector3::new(sl * c1, cl * c1, s1),
    ])
}

/// The double-tetrahedron curve `c_{β,γ}(λ)`: the segment `P₁P₃` at signed
/// height `β`, `P₂P₄` at height `γ`, the two segments orthogonal and both
/// parallel to the equatorial plane.
pub fn gen_double_tetrahedron(beta: f64, gamma: f64, lam: f64) -> Configuration {
    assert!(
        beta.abs() < 1.0 && gamma.abs() < 1.0,
        "beta and gamma must lie in (-1, 1)"
    );
    let rb = (1.0 - beta * beta).sqrt();
    let rg = (1.0 - gamma * gamma).sqrt();
    let at = |radius: f64, height: f64, a: f64| Vector3::new(radius * a.cos(), radius * a.sin(), height);
    Configuration::from_unit_points([
        at(rb, beta, lam),
        at(rg, gamma, lam + FRAC_PI_2),
        at(rb, beta, lam + PI),
        at(rg, gamma, lam + 3.0 * FRAC_PI_2),
    ])
}

/// Central finite difference of a generator curve in its sweep parameter —
/// the tangent to the critical submanifold as an ambient 12-vector.
pub fn curve_tangent(gen: impl Fn(f64) -> Configuration, lam: f64) -> DVector<f64> {
    let h = 1e-6;
    (gen(lam + h).ambient() - gen(lam - h).ambient()) / (2.0 * h)
}

// ---------------------------------------------------------------------------
// Shape equations and their solvers
// ---------------------------------------------------------------------------

/// The pyramid height equation `T_s(α)`; the pyramid of height `α` is
/// critical for `G_s` exactly when `T_s(α) = 0`. `T_1` is the `Q(α)` of the
/// Coulomb case.
pub fn pyramid_height_equation(alpha: f64, s: f64) -> f64 {
    let a = alpha;
    (2.0 - 2.0 * a).powf(-s / 2.0)
        + 2.0 * (2.0 - 2.0 * a * a).powf(-s / 2.0) * a
        + a * (4.0 - 4.0 * a * a).powf(-s / 2.0)
        + (2.0 - 2.0 * a).powf(-s / 2.0) * a
}

/// Analytic derivative `dT_s/dα`; strictly positive on `(−1, 0)`.
fn pyramid_height_equation_deriv(alpha: f64, s: f64) -> f64 {
    let a = alpha;
    s * (1.0 + a) * (2.0 - 2.0 * a).powf(-s / 2.0 - 1.0)
        + (2.0 - 2.0 * a).powf(-s / 2.0)
        + 2.0 * (2.0 - 2.0 * a * a).powf(-s / 2.0)
        + 4.0 * s * a * a * (2.0 - 2.0 * a * a).powf(-s / 2.0 - 1.0)
        + (4.0 - 4.0 * a * a).powf(-s / 2.0)
        + 4.0 * s * a * a * (4.0 - 4.0 * a * a).powf(-s / 2.0 - 1.0)
}

/// Solve `T_s(α) = 0` for the pyramid height: bracketed bisection to 1e-3
/// followed by a Newton polish. The root lies in `(−0.25, 0)` for every
/// `s > 0`, approaching the equator as `s` grows.
pub fn solve_pyramid_height(s: f64) -> Result<f64, FamiliesError> {
    let (mut lo, mut hi) = (-1.0 + 1e-6, -1e-9);
    let (flo, fhi) = (
        pyramid_height_equation(lo, s),
        pyramid_height_equation(hi, s),
    );
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(FamiliesError::NoRoot { s });
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if pyramid_height_equation(mid, s) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..60 {
        let f = pyramid_height_equation(alpha, s);
        let df = pyramid_height_equation_deriv(alpha, s);
        let delta = f / df;
        alpha -= delta;
        alpha = alpha.clamp(lo, hi);
        if delta.abs() < 1e-13 {
            break;
        }
    }
    Ok(alpha)
}

/// The double-tetrahedron shape function `E_s(β, γ)` as printed; the curve
/// is critical exactly when both `E_s(β, γ)` and `E_s(γ, β)` vanish.
fn e_shape(beta: f64, gamma: f64, s: f64) -> f64 {
    let (b, g) = (beta, gamma);
    let p = |base: f64| base.powf(-s / 2.0);
    -p(2.0 - 2.0 * b) * b - p(2.0 - 2.0 * b) - b * p(4.0 - 4.0 * b * b)
        + p(2.0 - 2.0 * b) * b * b * g
        - 2.0 * p(2.0 - 2.0 * b * g) * g
        + 2.0 * p(2.0 - 2.0 * b * g) * b * b * g
        + p(2.0 - 2.0 * b) * b * g
        + b * b * g * p(4.0 - 4.0 * b * b)
}

/// Both components of the double-tetrahedron system:
/// `(E_s(β, γ), E_s(γ, β))`.
pub fn double_tetra_equation(beta: f64, gamma: f64, s: f64) -> (f64, f64) {
    (e_shape(beta, gamma, s), e_shape(gamma, beta, s))
}

fn dt_residual(beta: f64, gamma: f64, s: f64) -> Vector2<f64> {
    let (a, b) = double_tetra_equation(beta, gamma, s);
    Vector2::new(a, b)
}

/// Damped 2-variable Newton on the `E_s` system from a seed; `None` when it
/// leaves the open square or stalls.
fn dt_newton(mut beta: f64, mut gamma: f64, s: f64) -> Option<(f64, f64)> {
    const FD: f64 = 1e-7;
    for _ in 0..80 {
        let f = dt_residual(beta, gamma, s);
        if f.norm() < 1e-14 {
            break;
        }
        let j00 = (e_shape(beta + FD, gamma, s) - e_shape(beta - FD, gamma, s)) / (2.0 * FD);
        let j01 = (e_shape(beta, gamma + FD, s) - e_shape(beta, gamma - FD, s)) / (2.0 * FD);
        let j10 = (e_shape(gamma, beta + FD, s) - e_shape(gamma, beta - FD, s)) / (2.0 * FD);
        let j11 = (e_shape(gamma + FD, beta, s) - e_shape(gamma - FD, beta, s)) / (2.0 * FD);
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1e-300 {
            return None;
        }
        let mut db = (-f.x * j11 + f.y * j01) / det;
        let mut dg = (-f.y * j00 + f.x * j10) / det;
        let norm = (db * db + dg * dg).sqrt();
        if norm > 0.2 {
            db *= 0.2 / norm;
            dg *= 0.2 / norm;
        }
        beta += db;
        gamma += dg;
        if beta.abs() >= 0.999 || gamma.abs() >= 0.999 {
            return None;
        }
    }
    (dt_residual(beta, gamma, s).norm() < 1e-11).then_some((beta, gamma))
}

fn is_trivial_dt_root(beta: f64, gamma: f64) -> bool {
    (beta - gamma).abs() < FAMILY_MATCH_TOL
        || ((beta + 0.5).abs() < FAMILY_MATCH_TOL && gamma.abs() < FAMILY_MATCH_TOL)
        || (beta.abs() < FAMILY_MATCH_TOL && (gamma + 0.5).abs() < FAMILY_MATCH_TOL)
}

/// Polish a double-tetrahedron root from a known nearby solution (warm
/// start for continuation in `s`).
pub fn solve_double_tetrahedron_from(
    s: f64,
    seed: (f64, f64),
) -> Result<(f64, f64), FamiliesError> {
    if let Some((b, g)) = dt_newton(seed.0, seed.1, s) {
        let (b, g) = if b >= g { (b, g) } else { (g, b) };
        if !is_trivial_dt_root(b, g) {
            return Ok((b, g));
        }
    }
    solve_double_tetrahedron(s)
}

/// Find the non-trivial double-tetrahedron solution of the `E_s` system
/// with `β ≥ γ`, excluding the known trivial roots (the `β = γ` diagonal,
/// which is the pyramid, and `(−0.5, 0)`/`(0, −0.5)`, which are
/// bi-pyramids). Returns `NotPresent` below the branch's birth threshold.
pub fn solve_double_tetrahedron(s: f64) -> Result<(f64, f64), FamiliesError> {
    let mut found: Vec<(f64, f64)> = Vec::new();
    let grid = 39;
    for ib in 0..grid {
        let b0 = -0.95 + 1.9 * ib as f64 / (grid - 1) as f64;
        let gsteps = 20;
        for ig in 0..gsteps {
            let g0 = -0.95 + (b0 + 0.95) * ig as f64 / gsteps as f64;
            let Some((b, g)) = dt_newton(b0, g0, s) else {
                continue;
            };
            let (b, g) = if b >= g { (b, g) } else { (g, b) };
            if is_trivial_dt_root(b, g) {
                continue;
            }
            if !found
                .iter()
                .any(|&(fb, fg)| (fb - b).abs() < FAMILY_MATCH_TOL && (fg - g).abs() < FAMILY_MATCH_TOL)
            {
                found.push((b, g));
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    found.pop().ok_or(FamiliesError::NotPresent { s })
}

/// Closed-form Riesz s-energy of a family configuration; equals the direct
/// pair sum on the generator output to round-off.
pub fn family_energy_closed_form(shape: &FamilyShape, s: f64) -> f64 {
    let inv = |d2: f64| d2.sqrt().powf(-s);
    match *shape {
        FamilyShape::BiPyramid => {
            3.0 * inv(3.0) + 6.0 * inv(2.0) + inv(4.0)
        }
        FamilyShape::SquareRightPyramid { alpha: a } => {
            2.0 * inv(4.0 - 4.0 * a * a) + 4.0 * inv(2.0 - 2.0 * a * a) + 4.0 * inv(2.0 - 2.0 * a)
        }
        FamilyShape::RegularPentagon => {
            3.0 * inv(2.0 - 2.0 * (2.0 * PI / 5.0).cos())
                + 3.0 * inv(2.0 + 2.0 * (PI / 5.0).cos())
                + 2.0 * inv(2.0 - 2.0 * (PI / 10.0).sin())
                + 2.0 * inv(2.0 + 2.0 * (3.0 * PI / 10.0).sin())
        }
        FamilyShape::DoubleTetrahedron { beta: b, gamma: g } => {
            inv(4.0 - 4.0 * b * b)
                + inv(4.0 - 4.0 * g * g)
                + 2.0 * inv(2.0 - 2.0 * b)
                + 2.0 * inv(2.0 - 2.0 * g)
                + 4.0 * inv(2.0 - 2.0 * b * g)
        }
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Eigen-classification of a critical configuration.
#[derive(Debug, Clone)]
pub struct CriticalReport {
    /// The eight restricted-Hessian eigenvalues, ascending, computed
    /// against the north-chart coordinate metric (chart-invariant).
    pub eigenvalues: Vec<f64>,
    /// Count of eigenvalues below `−zero_tol`.
    pub morse_index: usize,
    /// Count of eigenvalues within `±zero_tol`.
    pub nullity: usize,
    /// True when a curve tangent was supplied, it is annihilated by the
    /// restricted Hessian, and the nullity is exactly one.
    pub morse_bott_verified: bool,
    pub energy: f64,
    pub family: Option<FamilyLabel>,
}

fn weighted_eigen(
    cfg: &Configuration,
    s: RieszExponent,
) -> Result<(MetricEigen, crate::constraint::TangentFrame), FamiliesError> {
    let cs = SphereProductConstraints::default();
    let cost = RieszEnergy::new(s);
    let frame = product_frame(cfg);
    let h = restricted_hessian(&cs, &cost, &frame, &cfg.ambient())?;
    let metric = chart_metric_gram(cfg, &frame);
    Ok((h.metric_eigen(&metric)?, frame))
}

/// Classify a critical configuration: eigen-decomposition of the restricted
/// Hessian, Morse index and nullity, optional Morse–Bott kernel check
/// against a supplied curve tangent, and the family match by distance
/// fingerprint.
///
/// Fails with `NotCritical` when the embedded-gradient residual exceeds
/// [`CRITICALITY_TOL`].
pub fn classify(
    cfg: &Configuration,
    s: RieszExponent,
    family_curve_tangent: Option<&DVector<f64>>,
) -> Result<CriticalReport, FamiliesError> {
    let cs = SphereProductConstraints::default();
    let cost = RieszEnergy::new(s);
    let x = cfg.ambient();

    let residual = embedded_gradient(&cs, &cost, &x)?.norm();
    if residual > CRITICALITY_TOL {
        return Err(FamiliesError::NotCritical { residual });
    }

    let frame = product_frame(cfg);
    let h = restricted_hessian(&cs, &cost, &frame, &x)?;
    let metric = chart_metric_gram(cfg, &frame);
    let eig = h.metric_eigen(&metric)?;

    let max_abs = eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let zero_tol = ZERO_TOL_FACTOR * max_abs;
    let morse_index = eig.values.iter().filter(|&&l| l < -zero_tol).count();
    let nullity = eig.values.iter().filter(|&&l| l.abs() <= zero_tol).count();

    let morse_bott_verified = match family_curve_tangent {
        Some(tangent) => {
            let w = frame.coords_of(tangent)?;
            let kernel_residual = (h.matrix() * &w).norm();
            kernel_residual <= KERNEL_RESIDUAL_TOL * h.matrix().norm() * w.norm() && nullity == 1
        }
        None => false,
    };

    Ok(CriticalReport {
        eigenvalues: eig.values,
        morse_index,
        nullity,
        morse_bott_verified,
        energy: riesz::energy(cfg, s)?,
        family: match_family(cfg, s.value()),
    })
}

/// A family generator output bundled with its distance fingerprint, for
/// endpoint deduplication.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub label: FamilyLabel,
    pub shape: FamilyShape,
    pub configuration: Configuration,
    pub distances: [f64; 10],
    pub fixed_point_distances: [f64; 4],
}

impl FamilyInstance {
    fn new(label: FamilyLabel, shape: FamilyShape, configuration: Configuration) -> Self {
        let distances = configuration.pairwise_distances();
        let fixed_point_distances = configuration.fixed_point_distances();
        Self {
            label,
            shape,
            configuration,
            distances,
            fixed_point_distances,
        }
    }

    fn matches(&self, d10: &[f64; 10], d5: &[f64; 4]) -> bool {
        self.distances
            .iter()
            .zip(d10)
            .all(|(a, b)| (a - b).abs() < FAMILY_MATCH_TOL)
            && self
                .fixed_point_distances
                .iter()
                .zip(d5)
                .all(|(a, b)| (a - b).abs() < FAMILY_MATCH_TOL)
    }
}

fn cheap_family_instances(s: f64) -> Vec<FamilyInstance> {
    let mut out = vec![
        FamilyInstance::new(
            FamilyLabel::BiPyramidTriangleVertex,
            FamilyShape::BiPyramid,
            gen_bipyramid(0.0),
        ),
        FamilyInstance::new(
            FamilyLabel::BiPyramidAxial,
            FamilyShape::BiPyramid,
            gen_bipyramid_axial(0.0),
        ),
    ];
    if let Ok(alpha) = solve_pyramid_height(s) {
        let shape = FamilyShape::SquareRightPyramid { alpha };
        out.push(FamilyInstance::new(
            FamilyLabel::PyramidApex,
            shape,
            gen_pyramid(alpha, 0.0),
        ));
        out.push(FamilyInstance::new(
            FamilyLabel::PyramidBaseVertex,
            shape,
            gen_pyramid_base_vertex(alpha, 0.0),
        ));
    }
    out.push(FamilyInstance::new(
        FamilyLabel::Pentagon,
        FamilyShape::RegularPentagon,
        gen_pentagon(0.0),
    ));
    out
}

/// Generator instances of every family present at the given exponent
/// (both bi-pyramid variants, both pyramid variants, the pentagon, and the
/// double-tetrahedron branch when it exists).
pub fn known_families(s: f64) -> Vec<FamilyInstance> {
    let mut out = cheap_family_instances(s);
    if let Ok((beta, gamma)) = solve_double_tetrahedron(s) {
        out.push(FamilyInstance::new(
            FamilyLabel::DoubleTetrahedron,
            FamilyShape::DoubleTetrahedron { beta, gamma },
            gen_double_tetrahedron(beta, gamma, 0.0),
        ));
    }
    out
}

/// Match a configuration against the known families at `s`. The
/// double-tetrahedron system is only solved when none of the cheap
/// families match.
fn match_family(cfg: &Configuration, s: f64) -> Option<FamilyLabel> {
    let d10 = cfg.pairwise_distances();
    let d5 = cfg.fixed_point_distances();
    if let Some(inst) = cheap_family_instances(s)
        .iter()
        .find(|inst| inst.matches(&d10, &d5))
    {
        return Some(inst.label);
    }
    if let Ok((beta, gamma)) = solve_double_tetrahedron(s) {
        let inst = FamilyInstance::new(
            FamilyLabel::DoubleTetrahedron,
            FamilyShape::DoubleTetrahedron { beta, gamma },
            gen_double_tetrahedron(beta, gamma, 0.0),
        );
        if inst.matches(&d10, &d5) {
            return Some(FamilyLabel::DoubleTetrahedron);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Branch sampling and the bifurcation scanner
// ---------------------------------------------------------------------------

/// One sampled point of a family branch at a fixed exponent.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub label: FamilyLabel,
    pub s: f64,
    pub shape: FamilyShape,
    pub energy: f64,
    pub morse_index: usize,
    pub nullity: usize,
    /// Smallest eigenvalue after removing the structural zero mode (the one
    /// whose eigenvector best aligns with the curve tangent).
    pub smallest_nonzero_eigenvalue: f64,
}

/// A family representative at a fixed exponent: the canonical generator
/// output with its label, shape parameters and sweep tangent.
struct FamilySample {
    label: FamilyLabel,
    shape: FamilyShape,
    configuration: Configuration,
    tangent: DVector<f64>,
}

/// Canonical generator, sweep tangent and shape parameters for a family at
/// a given `s`; `None` when the family is not present there.
fn family_at(
    family: Family,
    s: f64,
    dt_seed: Option<(f64, f64)>,
) -> Result<Option<FamilySample>, FamiliesError> {
    const LAM: f64 = 0.3;
    match family {
        Family::BiPyramid => Ok(Some(FamilySample {
            label: FamilyLabel::BiPyramidTriangleVertex,
            shape: FamilyShape::BiPyramid,
            configuration: gen_bipyramid(LAM),
            tangent: curve_tangent(gen_bipyramid, LAM),
        })),
        Family::SquareRightPyramid => {
            let alpha = solve_pyramid_height(s)?;
            Ok(Some(FamilySample {
                label: FamilyLabel::PyramidApex,
                shape: FamilyShape::SquareRightPyramid { alpha },
                configuration: gen_pyramid(alpha, LAM),
                tangent: curve_tangent(|l| gen_pyramid(alpha, l), LAM),
            }))
        }
        Family::RegularPentagon => Ok(Some(FamilySample {
            label: FamilyLabel::Pentagon,
            shape: FamilyShape::RegularPentagon,
            configuration: gen_pentagon(LAM),
            tangent: curve_tangent(gen_pentagon, LAM),
        })),
        Family::DoubleTetrahedron => {
            let solved = match dt_seed {
                Some(seed) => solve_double_tetrahedron_from(s, seed),
                None => solve_double_tetrahedron(s),
            };
            match solved {
                Ok((beta, gamma)) => Ok(Some(FamilySample {
                    label: FamilyLabel::DoubleTetrahedron,
                    shape: FamilyShape::DoubleTetrahedron { beta, gamma },
                    configuration: gen_double_tetrahedron(beta, gamma, LAM),
                    tangent: curve_tangent(|l| gen_double_tetrahedron(beta, gamma, l), LAM),
                })),
                Err(FamiliesError::NotPresent { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        }
    }
}

/// Smallest nontrivial eigenvalue: drop the eigenvalue whose eigenvector
/// best aligns with the (whitened) curve tangent, take the minimum of the
/// rest. The structural Morse–Bott zero would otherwise mask index changes.
fn min_nontrivial_eigenvalue(
    cfg: &Configuration,
    tangent: &DVector<f64>,
    s: RieszExponent,
) -> Result<f64, FamiliesError> {
    let (eig, frame) = weighted_eigen(cfg, s)?;
    let w = frame.coords_of(tangent)?;
    let y = eig.whiten(&w);
    let mut skip = 0;
    let mut best = -1.0;
    for k in 0..eig.values.len() {
        let align = eig.vectors.column(k).dot(&y).abs();
        if align > best {
            best = align;
            skip = k;
        }
    }
    Ok(eig
        .values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min))
}

/// Sample one family branch at a fixed exponent: shape parameters, energy,
/// Morse data and the monitored eigenvalue. `Ok(None)` when the family has
/// no representative at this `s`. A previous double-tetrahedron root may be
/// passed as a warm start for continuation along a sweep.
pub fn branch_point(
    family: Family,
    s: f64,
    dt_seed: Option<(f64, f64)>,
) -> Result<Option<BranchPoint>, FamiliesError> {
    let exponent = RieszExponent::new(s)?;
    let Some(sample) = family_at(family, s, dt_seed)? else {
        return Ok(None);
    };
    let report = classify(&sample.configuration, exponent, Some(&sample.tangent))?;
    let smallest = min_nontrivial_eigenvalue(&sample.configuration, &sample.tangent, exponent)?;
    Ok(Some(BranchPoint {
        label: sample.label,
        s,
        shape: sample.shape,
        energy: report.energy,
        morse_index: report.morse_index,
        nullity: report.nullity,
        smallest_nonzero_eigenvalue: smallest,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    IndexChange,
    EnergyCrossing,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::IndexChange => "index_change",
            Transition::EnergyCrossing => "energy_crossing",
        }
    }
}

/// Monitored values bracketing a detected transition; the two values have
/// opposite signs.
#[derive(Debug, Clone, Copy)]
pub struct TransitionBracket {
    pub s_before: f64,
    pub value_before: f64,
    pub s_after: f64,
    pub value_after: f64,
}

/// A detected bifurcation: an index change on one family branch, or the
/// energy-ordering crossing between the bi-pyramid and the pyramid (filed
/// under the bi-pyramid, whose energy becomes the larger of the two above
/// `s_star`).
#[derive(Debug, Clone)]
pub struct BifurcationRecord {
    pub family: FamilyLabel,
    pub s_star: f64,
    pub transition: Transition,
    pub details: TransitionBracket,
}

fn refine_sign_change(
    monitor: &mut dyn FnMut(f64) -> Option<f64>,
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
) -> f64 {
    while hi - lo > BIFURCATION_REFINE_TOL {
        let mid = 0.5 * (lo + hi);
        let Some(fm) = monitor(mid) else { break };
        if f_lo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Sweep `s` over `[s_min, s_max]` with the given grid step, monitoring for
/// each requested family the smallest nontrivial restricted-Hessian
/// eigenvalue, plus the bi-pyramid/pyramid energy difference when both
/// families are requested. Every sign change is bracketed and refined by
/// bisection to [`BIFURCATION_REFINE_TOL`] in `s`. Records are sorted by
/// `s_star`.
pub fn scan_bifurcations(
    s_min: f64,
    s_max: f64,
    step: f64,
    families: &[Family],
) -> Vec<BifurcationRecord> {
    assert!(s_min > 0.0 && step > 0.0, "scan range must be positive");
    let mut grid: Vec<f64> = Vec::new();
    let mut s = s_min;
    while s <= s_max + 1e-12 {
        grid.push(s.min(s_max));
        s += step;
    }
    if grid.is_empty() || grid.len() == 1 {
        return Vec::new();
    }

    let dt_seed: RefCell<Option<(f64, f64)>> = RefCell::new(None);
    let index_monitor = |family: Family| {
        let dt_seed = &dt_seed;
        move |s: f64| -> Option<f64> {
            let exponent = RieszExponent::new(s).ok()?;
            let seed = *dt_seed.borrow();
            let sample = family_at(family, s, seed).ok()??;
            if let FamilyShape::DoubleTetrahedron { beta, gamma } = sample.shape {
                *dt_seed.borrow_mut() = Some((beta, gamma));
            }
            min_nontrivial_eigenvalue(&sample.configuration, &sample.tangent, exponent).ok()
        }
    };
    let energy_monitor = |s: f64| -> Option<f64> {
        let alpha = solve_pyramid_height(s).ok()?;
        Some(
            family_energy_closed_form(&FamilyShape::BiPyramid, s)
                - family_energy_closed_form(&FamilyShape::SquareRightPyramid { alpha }, s),
        )
    };

    struct Monitor<'a> {
        family: FamilyLabel,
        transition: Transition,
        eval: Box<dyn FnMut(f64) -> Option<f64> + 'a>,
    }

    let mut monitors: Vec<Monitor> = Vec::new();
    for &family in families {
        let label = match family {
            Family::BiPyramid => FamilyLabel::BiPyramidTriangleVertex,
            Family::SquareRightPyramid => FamilyLabel::PyramidApex,
            Family::RegularPentagon => FamilyLabel::Pentagon,
            Family::DoubleTetrahedron => FamilyLabel::DoubleTetrahedron,
        };
        monitors.push(Monitor {
            family: label,
            transition: Transition::IndexChange,
            eval: Box::new(index_monitor(family)),
        });
    }
    if families.contains(&Family::BiPyramid) && families.contains(&Family::SquareRightPyramid) {
        monitors.push(Monitor {
            family: FamilyLabel::BiPyramidTriangleVertex,
            transition: Transition::EnergyCrossing,
            eval: Box::new(energy_monitor),
        });
    }

    let mut records: Vec<BifurcationRecord> = Vec::new();
    for monitor in &mut monitors {
        let values: Vec<Option<f64>> = grid.iter().map(|&s| (monitor.eval)(s)).collect();
        for k in 0..grid.len() - 1 {
            let (Some(a), Some(b)) = (values[k], values[k + 1]) else {
                continue;
            };
            if a * b < 0.0 {
                let s_star = refine_sign_change(&mut monitor.eval, grid[k], a, grid[k + 1]);
                records.push(BifurcationRecord {
                    family: monitor.family,
                    s_star,
                    transition: monitor.transition,
                    details: TransitionBracket {
                        s_before: grid[k],
                        value_before: a,
                        s_after: grid[k + 1],
                        value_after: b,
                    },
                });
            }
        }
    }
    records.sort_by(|a, b| a.s_star.partial_cmp(&b.s_star).unwrap());
    records
}
