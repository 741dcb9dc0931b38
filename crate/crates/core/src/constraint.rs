//! Optimization machinery on a level set `S = F⁻¹(c)` written entirely in
//! ambient coordinates.
//!
//! A [`ConstraintSystem`] supplies the constraint map `F : ℝⁿ → ℝᵏ` through
//! value/gradient/Hessian evaluators, a [`CostFunction`] supplies the
//! prolonged cost `G : ℝⁿ → ℝ`, and a [`TangentFrame`] holds `s = n − k`
//! ambient vectors spanning the tangent space of `S` at a point. All
//! evaluators are pure functions of the point; nothing here caches.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Relative singular-value threshold below which the constraint gradients
/// are treated as linearly dependent.
pub const GRADIENT_INDEPENDENCE_TOL: f64 = 1e-8;

/// Relative tolerance for the frame-tangency check `⟨b_i, ∇F_α⟩ = 0`.
pub const FRAME_ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ConstraintError {
    /// The constraint gradients are (numerically) linearly dependent at the
    /// evaluation point, so the point is not near a regular level set.
    #[error("degenerate constraint gradients (singular-value ratio {sv_ratio:.3e})")]
    DegenerateConstraints { sv_ratio: f64 },
    /// The supplied tangent frame fails its invariants at the evaluation
    /// point.
    #[error("tangent frame mismatch: {0}")]
    FrameMismatch(String),
}

/// A level-set description `S = F⁻¹(c)`: `k` scalar constraints with
/// analytic first and second derivatives.
///
/// Invariants expected from implementors: at every admissible point the `k`
/// constraint gradients are linearly independent (`c` is a regular value),
/// and each constraint Hessian is symmetric to within round-off.
pub trait ConstraintSystem {
    fn ambient_dim(&self) -> usize;
    fn num_constraints(&self) -> usize;

    /// The constraint values `F(x) ∈ ℝᵏ`.
    fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64>;

    /// The constraint gradients `∇F_α(x)` as the columns of an `n × k`
    /// matrix.
    fn constraint_gradients(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// The `k` constraint Hessians `Hess F_α(x)`, each `n × n` symmetric.
    fn constraint_hessians(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>>;

    /// Dimension of the tangent space, `s = n − k`.
    fn tangent_dim(&self) -> usize {
        self.ambient_dim() - self.num_constraints()
    }
}

/// A smooth prolongation of the cost to the ambient space: value, gradient
/// and Hessian evaluators.
pub trait CostFunction {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// An adapted tangent frame: `s` ambient vectors `b_1..b_s` spanning the
/// tangent space of `S` at its anchor point, stored as the columns of an
/// `n × s` matrix.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    basis: DMatrix<f64>,
}

impl TangentFrame {
    pub fn new(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    /// Frame vectors as columns of an `n × s` matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Number of frame vectors, `s`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Gram matrix `BᵀB` of the frame vectors.
    pub fn gram(&self) -> DMatrix<f64> {
        self.basis.tr_mul(&self.basis)
    }

    /// Assemble the ambient vector `Σ v_i b_i` from frame coordinates.
    pub fn ambient(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }

    /// Frame coordinates of an ambient tangent vector (least-squares
    /// solution of `B w = t`; exact when `t` lies in the frame's span).
    pub fn coords_of(&self, tangent: &DVector<f64>) -> Result<DVector<f64>, ConstraintError> {
        let svd = self.basis.clone().svd(true, true);
        svd.solve(tangent, 1e-12 * svd.singular_values.max())
            .map_err(|e| ConstraintError::FrameMismatch(e.to_string()))
    }

    /// Check the frame invariants at `x`: every `b_i` orthogonal to every
    /// `∇F_α` (relative tolerance [`FRAME_ORTHOGONALITY_TOL`]) and the `b_i`
    /// linearly independent (relative singular-value ratio above
    /// [`GRADIENT_INDEPENDENCE_TOL`]).
    pub fn validate<C: ConstraintSystem + ?Sized>(
        &self,
        cs: &C,
        x: &DVector<f64>,
    ) -> Result<(), ConstraintError> {
        let n = cs.ambient_dim();
        let s = cs.tangent_dim();
        if self.basis.nrows() != n || self.basis.ncols() != s {
            return Err(ConstraintError::FrameMismatch(format!(
                "frame is {}x{}, expected {}x{}",
                self.basis.nrows(),
                self.basis.ncols(),
                n,
                s
            )));
        }
        let grads = cs.constraint_gradients(x);
        for i in 0..s {
            let b = self.basis.column(i);
            let nb = b.norm();
            if nb == 0.0 {
                return Err(ConstraintError::FrameMismatch(format!(
                    "frame vector {i} is zero"
                )));
            }
            for (alpha, g) in grads.column_iter().enumerate() {
                let dot = b.dot(&g);
                if dot.abs() > FRAME_ORTHOGONALITY_TOL * nb * g.norm() {
                    return Err(ConstraintError::FrameMismatch(format!(
                        "frame vector {i} not tangent: <b_{i}, grad F_{alpha}> = {dot:.3e}"
                    )));
                }
            }
        }
        let sv = self.basis.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smin <= GRADIENT_INDEPENDENCE_TOL * smax {
            return Err(ConstraintError::FrameMismatch(format!(
                "frame vectors nearly dependent (singular-value ratio {:.3e})",
                smin / smax
            )));
        }
        Ok(())
    }
}

/// Gram matrix `Σ` with entries `⟨∇u_i, ∇v_j⟩` for two gradient column sets.
fn gramian(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    u.tr_mul(v)
}

fn check_regularity(grads: &DMatrix<f64>) -> Result<(), ConstraintError> {
    let sv = grads.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smax == 0.0 || smin <= GRADIENT_INDEPENDENCE_TOL * smax {
        return Err(ConstraintError::DegenerateConstraints {
            sv_ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    Ok(())
}

/// Lagrange multiplier functions `σ_α(x)`.
///
/// Solves the Gramian system `Σ_F^F σ = (⟨∇G, ∇F_α⟩)_α`, i.e. computes the
/// coefficients of the orthogonal projection of `∇G` onto
/// `span{∇F_1, …, ∇F_k}`. Equals the determinant-ratio formula implemented
/// in [`lagrange_multipliers_by_cramer`] but is numerically stable.
pub fn lagrange_multipliers<C, G>(
    cs: &C,
    cost: &G,
    x: &DVector<f64>,
) -> Result<DVector<f64>, ConstraintError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    let grads = cs.constraint_gradients(x);
    check_regularity(&grads)?;
    let gram = gramian(&grads, &grads);
    let rhs = grads.tr_mul(&cost.gradient(x));
    Cholesky::new(gram)
        .map(|ch| ch.solve(&rhs))
        .ok_or(ConstraintError::DegenerateConstraints { sv_ratio: 0.0 })
}

/// Reference implementation of the multipliers as Gramian determinant
/// ratios: `σ_α = det Σ(…G in slot α…) / det Σ_F^F`.
///
/// Kept as an independent oracle for the linear-solve path; prefer
/// [`lagrange_multipliers`] everywhere else.
pub fn lagrange_multipliers_by_cramer<C, G>(
    cs: &C,
    cost: &G,
    x: &DVector<f64>,
) -> Result<DVector<f64>, ConstraintError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    let grads = cs.constraint_gradients(x);
    check_regularity(&grads)?;
    let gram = gramian(&grads, &grads);
    let rhs = grads.tr_mul(&cost.gradient(x));
    let denom = gram.determinant();
    if denom.abs() == 0.0 {
        return Err(ConstraintError::DegenerateConstraints { sv_ratio: 0.0 });
    }
    let k = cs.num_constraints();
    let mut sigma = DVector::zeros(k);
    for alpha in 0..k {
        let mut num = gram.clone();
        num.set_column(alpha, &rhs);
        sigma[alpha] = num.determinant() / denom;
    }
    Ok(sigma)
}

/// The embedded gradient vector field `∂G(x) = ∇G(x) − Σ_α σ_α(x) ∇F_α(x)`.
///
/// Restricted to `S` this is the Riemannian gradient of the restricted cost;
/// it is orthogonal to every constraint gradient at every admissible point.
pub fn embedded_gradient<C, G>(
    cs: &C,
    cost: &G,
    x: &DVector<f64>,
) -> Result<DVector<f64>, ConstraintError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    let sigma = lagrange_multipliers(cs, cost, x)?;
    let grads = cs.constraint_gradients(x);
    Ok(cost.gradient(x) - grads * sigma)
}

/// The frame coordinates of the differential: `g_i = ⟨∇G(x), b_i(x)⟩`.
///
/// All `g_i` vanish exactly when `∂G(x) = 0` (for a valid frame).
pub fn frame_gradient_coords<C, G>(
    cs: &C,
    cost: &G,
    frame: &TangentFrame,
    x: &DVector<f64>,
) -> Result<DVector<f64>, ConstraintError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    frame.validate(cs, x)?;
    Ok(frame.basis().tr_mul(&cost.gradient(x)))
}

/// The restricted Hessian in frame coordinates:
/// `h_ij = (Hess G − Σ_α σ_α Hess F_α)(b_i, b_j)`.
///
/// The output is exactly symmetrized, `(h + hᵀ)/2`.
pub fn restricted_hessian<C, G>(
    cs: &C,
    cost: &G,
    frame: &TangentFrame,
    x: &DVector<f64>,
) -> Result<RestrictedHessian, ConstraintError>
where
    C: ConstraintSystem + ?Sized,
    G: CostFunction + ?Sized,
{
    frame.validate(cs, x)?;
    let sigma = lagrange_multipliers(cs, cost, x)?;
    let mut corrected = cost.hessian(x);
    for (alpha, hf) in cs.constraint_hessians(x).into_iter().enumerate() {
        corrected -= hf * sigma[alpha];
    }
    let h = frame.basis().tr_mul(&(&corrected * frame.basis()));
    let sym = (&h + h.transpose()) * 0.5;
    Ok(RestrictedHessian { matrix: sym })
}

/// The `s × s` symmetric matrix of the restricted Hessian in an adapted
/// frame.
#[derive(Debug, Clone)]
pub struct RestrictedHessian {
    matrix: DMatrix<f64>,
}

/// Eigen-decomposition of a restricted Hessian relative to a metric Gram
/// matrix, with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct MetricEigen {
    /// Generalized eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Matching eigenvectors (columns), expressed in the whitened
    /// coordinates `y = Lᵀ w` where `metric = L Lᵀ` and `w` are frame
    /// coordinates.
    pub vectors: DMatrix<f64>,
    /// The lower Cholesky factor `L` of the metric Gram matrix.
    pub chol_l: DMatrix<f64>,
}

impl MetricEigen {
    /// Whiten frame coordinates: `y = Lᵀ w`, normalized.
    pub fn whiten(&self, frame_coords: &DVector<f64>) -> DVector<f64> {
        let y = self.chol_l.tr_mul(frame_coords);
        let n = y.norm();
        if n > 0.0 {
            y / n
        } else {
            y
        }
    }
}

impl RestrictedHessian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Plain eigenvalues of the frame-coordinate matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Eigenvalues of the restricted Hessian as a bilinear form relative to
    /// the positive-definite metric whose Gram matrix in the same frame is
    /// `metric`: the generalized problem `h u = λ · metric · u`.
    ///
    /// These are invariant under any change of frame (both matrices
    /// transform congruently), which makes the reported spectrum
    /// independent of chart choices.
    pub fn metric_eigen(&self, metric: &DMatrix<f64>) -> Result<MetricEigen, ConstraintError> {
        let chol: Cholesky<f64, Dyn> = Cholesky::new(metric.clone()).ok_or_else(|| {
            ConstraintError::FrameMismatch("metric Gram matrix not positive definite".into())
        })?;
        let l = chol.l();
        // L⁻¹ h L⁻ᵀ = L⁻¹ (L⁻¹ h)ᵀ since h is symmetric.
        let s1 = l
            .solve_lower_triangular(&self.matrix)
            .ok_or_else(|| ConstraintError::FrameMismatch("singular Cholesky factor".into()))?;
        let s2 = l
            .solve_lower_triangular(&s1.transpose())
            .ok_or_else(|| ConstraintError::FrameMismatch("singular Cholesky factor".into()))?;
        let sym = (&s2 + s2.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), eig.eigenvectors.ncols());
        for (new, &old) in order.iter().enumerate() {
            vectors.set_column(new, &eig.eigenvectors.column(old));
        }
        Ok(MetricEigen {
            values,
            vectors,
            chol_l: l,
        })
    }

    /// Sorted generalized eigenvalues, see [`RestrictedHessian::metric_eigen`].
    pub fn eigenvalues_with_metric(
        &self,
        metric: &DMatrix<f64>,
    ) -> Result<Vec<f64>, ConstraintError> {
        Ok(self.metric_eigen(metric)?.values)
    }
}
