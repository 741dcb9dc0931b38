//! The concrete constraint instance: a product of four unit spheres in ℝ¹²
//! with a fifth electron pinned at the north pole.
//!
//! Constraints are `F_i(p) = ½‖p_i‖²`, tangent frames come from the
//! stereographic chart frame on each sphere factor (north-pole chart by
//! default, switching to the mirrored south-pole chart for points with
//! `z > 0.9`, where the north frame degenerates), and the retraction is
//! blockwise normalization.

use crate::constraint::{ConstraintSystem, TangentFrame};
use crate::newton::ManifoldOps;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum allowed distance between any two electrons (including the fixed
/// one); below this the energy and its derivatives blow up.
pub const MIN_SEPARATION: f64 = 1e-6;

/// Unit-norm tolerance accepted when loading a configuration; points within
/// this tolerance are re-normalized exactly.
pub const UNIT_NORM_LOAD_TOL: f64 = 1e-9;

/// The north chart is used for `z ≤ 1 − CHART_SWITCH_MARGIN`, the south
/// chart otherwise; keeps frame conditioning bounded.
pub const CHART_SWITCH_MARGIN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SphereError {
    #[error("point has norm {norm} but must be a unit vector (tolerance {UNIT_NORM_LOAD_TOL:e})")]
    NotUnit { norm: f64 },
    #[error("electrons {i} and {j} are only {dist:e} apart (minimum {MIN_SEPARATION:e})")]
    TooClose { i: usize, j: usize, dist: f64 },
    #[error("point is within the chart-switch margin of the chart pole (z = {z})")]
    NearChartPole { z: f64 },
    #[error("retraction undefined: block {block} of p + v is the zero vector")]
    ZeroVector { block: usize },
    #[error("ambient vector has length {len}, expected 12")]
    BadAmbientLength { len: usize },
}

/// The fixed fifth electron, pinned at the north pole.
pub fn fixed_point() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, 1.0)
}

/// Positions of the four free electrons on the unit sphere; the fifth is
/// implicit at the north pole. The ambient form is the 12-component
/// concatenation of the free points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 4]", into = "[[f64; 3]; 4]")]
pub struct Configuration {
    free: [Vector3<f64>; 4],
}

impl Configuration {
    /// Build a configuration from four points, validating unit norms (to
    /// [`UNIT_NORM_LOAD_TOL`], then re-normalizing exactly) and pairwise
    /// separation (including the fixed point).
    pub fn new(points: [Vector3<f64>; 4]) -> Result<Self, SphereError> {
        let mut free = points;
        for p in &mut free {
            let norm = p.norm();
            if (norm - 1.0).abs() > UNIT_NORM_LOAD_TOL {
                return Err(SphereError::NotUnit { norm });
            }
            // Points already unit to round-off are kept bit-identical.
            if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                *p /= norm;
            }
        }
        let cfg = Self { free };
        cfg.check_separation()?;
        Ok(cfg)
    }

    /// Internal constructor for points already known to be unit vectors
    /// (generator formulas, retraction output).
    pub(crate) fn from_unit_points(free: [Vector3<f64>; 4]) -> Self {
        Self { free }
    }

    pub fn from_ambient(x: &DVector<f64>) -> Result<Self, SphereError> {
        if x.len() != 12 {
            return Err(SphereError::BadAmbientLength { len: x.len() });
        }
        Self::new(core::array::from_fn(|i| {
            Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2])
        }))
    }

    pub fn ambient(&self) -> DVector<f64> {
        DVector::from_iterator(12, self.free.iter().flat_map(|p| [p.x, p.y, p.z]))
    }

    pub fn free_points(&self) -> &[Vector3<f64>; 4] {
        &self.free
    }

    /// All five electron positions, the fixed one last.
    pub fn points(&self) -> [Vector3<f64>; 5] {
        [
            self.free[0],
            self.free[1],
            self.free[2],
            self.free[3],
            fixed_point(),
        ]
    }

    fn check_separation(&self) -> Result<(), SphereError> {
        let pts = self.points();
        for i in 0..5 {
            for j in (i + 1)..5 {
                let dist = (pts[i] - pts[j]).norm();
                if dist < MIN_SEPARATION {
                    return Err(SphereError::TooClose { i, j, dist });
                }
            }
        }
        Ok(())
    }

    /// Smallest pairwise distance among the five electrons.
    pub fn min_separation(&self) -> f64 {
        let pts = self.points();
        let mut best = f64::INFINITY;
        for i in 0..5 {
            for j in (i + 1)..5 {
                best = best.min((pts[i] - pts[j]).norm());
            }
        }
        best
    }

    /// The sorted multiset of the 10 pairwise distances (fixed point
    /// included); invariant under relabeling and rotation, used to
    /// deduplicate solver endpoints into families.
    pub fn pairwise_distances(&self) -> [f64; 10] {
        let pts = self.points();
        let mut out = [0.0; 10];
        let mut k = 0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                out[k] = (pts[i] - pts[j]).norm();
                k += 1;
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// Sorted distances from the four free electrons to the fixed one;
    /// separates configurations that share a pairwise multiset but assign
    /// the fixed electron a different role.
    pub fn fixed_point_distances(&self) -> [f64; 4] {
        let mut out = core::array::from_fn(|i| (self.free[i] - fixed_point()).norm());
        out.sort_by(|a: &f64, b: &f64| a.partial_cmp(b).unwrap());
        out
    }

    /// Draw a configuration uniformly at random: per-point isotropic
    /// Gaussian then normalization, rejecting draws that violate the
    /// minimum-separation guard.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut free = [Vector3::zeros(); 4];
            let mut ok = true;
            for p in &mut free {
                let v = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                let n = v.norm();
                if n < 1e-8 {
                    ok = false;
                    break;
                }
                *p = v / n;
            }
            if !ok {
                continue;
            }
            let cfg = Self { free };
            if cfg.check_separation().is_ok() {
                return cfg;
            }
        }
    }
}

impl TryFrom<[[f64; 3]; 4]> for Configuration {
    type Error = SphereError;
    fn try_from(raw: [[f64; 3]; 4]) -> Result<Self, SphereError> {
        Self::new(raw.map(|p| Vector3::new(p[0], p[1], p[2])))
    }
}

impl From<Configuration> for [[f64; 3]; 4] {
    fn from(cfg: Configuration) -> Self {
        cfg.free.map(|p| [p.x, p.y, p.z])
    }
}

/// The stereographic chart frame on S² from the north-pole chart:
/// `e_1 = (1−z−x², −xy, x(1−z))`, `e_2 = (−xy, 1−z−y², y(1−z))`.
///
/// Valid for `z ≤ 1 − CHART_SWITCH_MARGIN`; degenerates as `z → 1`.
pub fn stereographic_frame_vectors(
    q: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), SphereError> {
    if q.z > 1.0 - CHART_SWITCH_MARGIN {
        return Err(SphereError::NearChartPole { z: q.z });
    }
    let (x, y, z) = (q.x, q.y, q.z);
    Ok((
        Vector3::new(1.0 - z - x * x, -x * y, x * (1.0 - z)),
        Vector3::new(-x * y, 1.0 - z - y * y, y * (1.0 - z)),
    ))
}

/// South-pole chart analogue of [`stereographic_frame_vectors`]: the
/// north-chart formulas mirrored through the equator (`z → −z`). Valid for
/// `z ≥ −(1 − CHART_SWITCH_MARGIN)`.
pub fn south_stereographic_frame_vectors(
    q: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), SphereError> {
    if q.z < -(1.0 - CHART_SWITCH_MARGIN) {
        return Err(SphereError::NearChartPole { z: q.z });
    }
    let (x, y, z) = (q.x, q.y, q.z);
    Ok((
        Vector3::new(1.0 + z - x * x, -x * y, -x * (1.0 + z)),
        Vector3::new(-x * y, 1.0 + z - y * y, -y * (1.0 + z)),
    ))
}

fn frame_pair(q: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    match stereographic_frame_vectors(q) {
        Ok(pair) => pair,
        // A unit vector with z > 0.9 is always inside the south chart.
        Err(_) => south_stereographic_frame_vectors(q)
            .expect("unit vector cannot be near both chart poles"),
    }
}

pub(crate) fn product_frame_ambient(x: &DVector<f64>) -> TangentFrame {
    let mut basis = DMatrix::zeros(12, 8);
    for i in 0..4 {
        let q = Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        let (e1, e2) = frame_pair(&q);
        for r in 0..3 {
            basis[(3 * i + r, 2 * i)] = e1[r];
            basis[(3 * i + r, 2 * i + 1)] = e2[r];
        }
    }
    TangentFrame::new(basis)
}

/// The adapted frame `b_1..b_8` on the product manifold: each sphere factor
/// contributes its two chart-frame vectors, embedded in the matching ℝ³
/// block of ℝ¹².
pub fn product_frame(cfg: &Configuration) -> TangentFrame {
    product_frame_ambient(&cfg.ambient())
}

/// Blockwise normalization retraction
/// `R_p(v) = ((p_i + v_i)/‖p_i + v_i‖)_i`; first-order consistent with the
/// exponential map and restores the sphere constraints exactly.
pub fn retract(cfg: &Configuration, v: &DVector<f64>) -> Result<Configuration, SphereError> {
    assert_eq!(v.len(), 12, "tangent vector must have 12 components");
    let mut free = *cfg.free_points();
    for (i, p) in free.iter_mut().enumerate() {
        let step = Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
        if step == Vector3::zeros() {
            continue;
        }
        let moved = *p + step;
        let n = moved.norm();
        if n < 1e-300 {
            return Err(SphereError::ZeroVector { block: i });
        }
        *p = moved / n;
    }
    Ok(Configuration::from_unit_points(free))
}

/// Gram matrix of the tangent frame with respect to the north-chart
/// coordinate metric `Σ_i (1−z_i)⁻² ⟨·,·⟩_i`.
///
/// Restricted-Hessian eigenvalues computed against this metric coincide
/// with the plain matrix eigenvalues in the (unnormalized) north
/// stereographic frame, while being invariant under chart switching and any
/// other change of frame.
pub fn chart_metric_gram(cfg: &Configuration, frame: &TangentFrame) -> DMatrix<f64> {
    let mut weighted = frame.basis().clone();
    for i in 0..4 {
        let w = (1.0 - cfg.free_points()[i].z).powi(-2);
        for r in 0..3 {
            for c in 0..weighted.ncols() {
                weighted[(3 * i + r, c)] *= w;
            }
        }
    }
    frame.basis().tr_mul(&weighted)
}

/// The sphere-product constraint system: `F_i(p) = ½‖p_i‖²` for the four
/// free electrons, with the minimum-separation domain guard for the
/// singular pair potential.
#[derive(Debug, Clone)]
pub struct SphereProductConstraints {
    pub min_separation: f64,
}

impl Default for SphereProductConstraints {
    fn default() -> Self {
        Self {
            min_separation: MIN_SEPARATION,
        }
    }
}

impl ConstraintSystem for SphereProductConstraints {
    fn ambient_dim(&self) -> usize {
        12
    }

    fn num_constraints(&self) -> usize {
        4
    }

    fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(4, |i, _| 0.5 * x.rows(3 * i, 3).norm_squared())
    }

    fn constraint_gradients(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut grads = DMatrix::zeros(12, 4);
        for i in 0..4 {
            for r in 0..3 {
                grads[(3 * i + r, i)] = x[3 * i + r];
            }
        }
        grads
    }

    fn constraint_hessians(&self, _x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        (0..4)
            .map(|i| {
                let mut h = DMatrix::zeros(12, 12);
                for r in 0..3 {
                    h[(3 * i + r, 3 * i + r)] = 1.0;
                }
                h
            })
            .collect()
    }
}

impl ManifoldOps for SphereProductConstraints {
    fn tangent_frame(
        &self,
        x: &DVector<f64>,
    ) -> Result<TangentFrame, crate::constraint::ConstraintError> {
        Ok(product_frame_ambient(x))
    }

    fn retract(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let mut out = DVector::zeros(12);
        for i in 0..4 {
            if v.rows(3 * i, 3).iter().all(|&c| c == 0.0) {
                out.rows_mut(3 * i, 3).copy_from(&x.rows(3 * i, 3));
                continue;
            }
            let moved = x.rows(3 * i, 3) + v.rows(3 * i, 3);
            let n = moved.norm();
            if n < 1e-300 {
                return None;
            }
            out.rows_mut(3 * i, 3).copy_from(&(moved / n));
        }
        Some(out)
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        let mut pts: Vec<Vector3<f64>> = (0..4)
            .map(|i| Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]))
            .collect();
        pts.push(fixed_point());
        for i in 0..5 {
            for j in (i + 1)..5 {
                if (pts[i] - pts[j]).norm() < self.min_separation {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::restricted_hessian;
    use crate::riesz::{RieszEnergy, RieszExponent};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coulomb() -> RieszEnergy {
        RieszEnergy::new(RieszExponent::coulomb())
    }

    #[test]
    fn north_frame_at_equator_point() {
        let (e1, e2) = stereographic_frame_vectors(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(e1, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(e2, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn north_frame_rejects_points_near_pole() {
        let q = Vector3::new(0.0, 0.1, (1.0f64 - 0.01).sqrt());
        assert!(matches!(
            stereographic_frame_vectors(&q),
            Err(SphereError::NearChartPole { .. })
        ));
        assert!(south_stereographic_frame_vectors(&q).is_ok());
    }

    #[test]
    fn frame_vectors_tangent_and_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let cfg = Configuration::random(&mut rng);
            for q in cfg.free_points() {
                if q.z >= 0.9 {
                    continue;
                }
                let (e1, e2) = stereographic_frame_vectors(q).unwrap();
                assert!(e1.dot(q).abs() < 1e-12);
                assert!(e2.dot(q).abs() < 1e-12);
                assert!(e1.cross(&e2).norm() > 0.0);
            }
        }
    }

    #[test]
    fn product_frame_southern_hemisphere_uses_north_chart() {
        let cfg = crate::families::gen_bipyramid(0.0);
        let frame = product_frame(&cfg);
        for (i, q) in cfg.free_points().iter().enumerate() {
            let (e1, _) = stereographic_frame_vectors(q).unwrap();
            for r in 0..3 {
                assert_eq!(frame.basis()[(3 * i + r, 2 * i)], e1[r]);
            }
        }
    }

    #[test]
    fn product_frame_switches_chart_near_north_pole() {
        let z = (1.0f64 - 0.01).sqrt();
        let near_pole = Vector3::new(0.0, 0.1, z);
        let cfg = Configuration::new([
            near_pole,
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
        ])
        .unwrap();
        let frame = product_frame(&cfg);
        let (s1, _) = south_stereographic_frame_vectors(&near_pole).unwrap();
        for r in 0..3 {
            assert_eq!(frame.basis()[(r, 0)], s1[r]);
        }
    }

    #[test]
    fn product_frame_orthogonality_residual_small() {
        let cfg = crate::families::gen_bipyramid(0.0);
        let frame = product_frame(&cfg);
        let cs = SphereProductConstraints::default();
        let grads = cs.constraint_gradients(&cfg.ambient());
        let mut residual: f64 = 0.0;
        for b in frame.basis().column_iter() {
            for g in grads.column_iter() {
                residual = residual.max(b.dot(&g).abs());
            }
        }
        assert!(residual < 1e-12);
    }

    #[test]
    fn retract_zero_vector_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = Configuration::random(&mut rng);
        let same = retract(&cfg, &DVector::zeros(12)).unwrap();
        assert_eq!(cfg, same);
    }

    #[test]
    fn retract_normalizes_blockwise() {
        let cfg = Configuration::new([
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
        ])
        .unwrap();
        let mut v = DVector::zeros(12);
        v[1] = 1.0; // push p_1 along y
        let moved = retract(&cfg, &v).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(
            moved.free_points()[0],
            Vector3::new(inv_sqrt2, inv_sqrt2, 0.0),
            epsilon = 1e-15
        );
        for p in moved.free_points() {
            assert!((p.norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn retract_is_first_order_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = Configuration::random(&mut rng);
        let frame = product_frame(&cfg);
        let coords = DVector::from_fn(8, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let v = frame.ambient(&coords);
        let t = 1e-6;
        let plus = retract(&cfg, &(&v * t)).unwrap().ambient();
        let minus = retract(&cfg, &(&v * -t)).unwrap().ambient();
        let fd = (plus - minus) / (2.0 * t);
        assert!((fd - &v).norm() < 1e-6 * v.norm().max(1.0));
    }

    #[test]
    fn chart_consistency_of_spectra() {
        // Same configuration, all-north vs all-south frames: identical
        // metric spectra. Holds at critical and generic points alike.
        let cs = SphereProductConstraints::default();
        let cost = coulomb();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut cases = vec![crate::families::gen_bipyramid(0.37)];
        cases.extend((0..4).map(|_| Configuration::random(&mut rng)));

        for cfg in cases {
            if cfg.free_points().iter().any(|p| p.z.abs() > 0.85) {
                continue; // both charts must be valid at every point
            }
            let x = cfg.ambient();
            let north = product_frame(&cfg);
            let mut south_basis = DMatrix::zeros(12, 8);
            for (i, q) in cfg.free_points().iter().enumerate() {
                let (e1, e2) = south_stereographic_frame_vectors(q).unwrap();
                for r in 0..3 {
                    south_basis[(3 * i + r, 2 * i)] = e1[r];
                    south_basis[(3 * i + r, 2 * i + 1)] = e2[r];
                }
            }
            let south = TangentFrame::new(south_basis);

            let hn = restricted_hessian(&cs, &cost, &north, &x).unwrap();
            let hs = restricted_hessian(&cs, &cost, &south, &x).unwrap();
            let evn = hn
                .eigenvalues_with_metric(&chart_metric_gram(&cfg, &north))
                .unwrap();
            let evs = hs
                .eigenvalues_with_metric(&chart_metric_gram(&cfg, &south))
                .unwrap();
            for (a, b) in evn.iter().zip(&evs) {
                assert!((a - b).abs() < 1e-8, "north {a} vs south {b}");
            }
        }
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = Configuration::random(&mut rng);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);

        // Norm off by more than 1e-9 is rejected.
        let bad = "[[1.0001,0,0],[0,1,0],[-1,0,0],[0,-1,0]]";
        assert!(serde_json::from_str::<Configuration>(bad).is_err());

        // Norm within 1e-9 is accepted and re-normalized.
        let near = format!(
            "[[{},0,0],[0,1,0],[-1,0,0],[0,-1,0]]",
            1.0 + 0.5 * UNIT_NORM_LOAD_TOL
        );
        let cfg: Configuration = serde_json::from_str(&near).unwrap();
        assert!((cfg.free_points()[0].norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn coincident_electrons_rejected() {
        let p = Vector3::new(0.0, 1.0, 0.0);
        assert!(matches!(
            Configuration::new([p, p, Vector3::new(1.0, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0)]),
            Err(SphereError::TooClose { .. })
        ));
        // Collision with the fixed north-pole electron is also rejected.
        assert!(Configuration::new([
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ])
        .is_err());
    }

    #[test]
    fn random_configurations_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let cfg = Configuration::random(&mut rng);
            for p in cfg.free_points() {
                assert!((p.norm() - 1.0).abs() < 1e-12);
            }
            assert!(cfg.min_separation() > MIN_SEPARATION);
        }
    }
}
