//! Almost-Hermitian structure analysis on an invariant frame: Nijenhuis
//! tensor, structure classification, Levi-Civita and canonical connections,
//! unitary frames, connection/torsion/curvature forms, and the real and
//! complex Ricci and scalar curvatures.
//!
//! Curvature extraction runs in an orthonormal J-adapted frame (supplied or
//! built by Gram-Schmidt with `(u, Ju)` pairing in input order), where the
//! index conventions below are valid:
//!
//! * connection 1-forms `w^i_j = sum_k G^i_{kj} e^k` with
//!   `G^k_{ij} = e^k(D_{E_i} E_j)`;
//! * curvature `W^i_j = dw^i_j + sum_k w^i_k ∧ w^k_j`;
//! * real Ricci `R_{ij} = sum_{k<j}` (coefficient of `e^k ∧ e^j` in `W^k_i`),
//!   summing expansion coefficients over strictly increasing pairs only;
//! * complex Ricci `R_{k lbar} = sum_i R^i_{ik lbar}` from the (1,1)-part of
//!   the unitary curvature matrix.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::invariant_algebra::{
    FrameChange, FrameTag, InvariantAlgebra, InvariantForm, VectorValuedForm,
};
use crate::tolerances;
use crate::{AkgeoError, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// An almost complex structure as a real matrix acting on frame vectors
/// (column `j` holds the coefficients of `J E_j`).
#[derive(Clone, Debug)]
pub struct AlmostComplexStructure {
    matrix: DMatrix<f64>,
    frame_tag: FrameTag,
}

impl AlmostComplexStructure {
    pub fn new(matrix: DMatrix<f64>, frame_tag: FrameTag) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_multiple_of(2) {
            return Err(AkgeoError::DimensionMismatch {
                expected: dim,
                got: matrix.ncols(),
            });
        }
        let residual = (&matrix * &matrix + DMatrix::<f64>::identity(dim, dim))
            .abs()
            .max();
        if residual > tolerances::FRAME {
            return Err(AkgeoError::NotAlmostComplex { residual });
        }
        Ok(AlmostComplexStructure { matrix, frame_tag })
    }

    /// The block-standard structure `J E_{2i-1} = E_{2i}`.
    pub fn standard(dim: usize, frame_tag: FrameTag) -> Result<Self> {
        Self::new(standard_block_matrix(dim), frame_tag)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frame_tag(&self) -> &FrameTag {
        &self.frame_tag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn matrix_complex(&self) -> DMatrix<Complex64> {
        self.matrix.map(|x| Complex64::new(x, 0.0))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (&self.matrix * v).iter().copied().collect()
    }
}

/// The matrix of the block-standard almost complex structure.
pub fn standard_block_matrix(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..dim / 2 {
        j[(2 * p + 1, 2 * p)] = 1.0;
        j[(2 * p, 2 * p + 1)] = -1.0;
    }
    j
}

/// A compatible metric together with its fundamental 2-form
/// `omega(X, Y) = g(JX, Y)`.
#[derive(Clone, Debug)]
pub struct MetricData {
    g: DMatrix<f64>,
    omega: InvariantForm,
    frame_tag: FrameTag,
}

impl MetricData {
    /// Builds the pair `(g, omega)` from a metric matrix.
    pub fn new(g: DMatrix<f64>, j: &AlmostComplexStructure, frame_tag: FrameTag) -> Result<Self> {
        if frame_tag != *j.frame_tag() {
            return Err(AkgeoError::FrameMismatch {
                left: frame_tag.0,
                right: j.frame_tag().0.clone(),
            });
        }
        let dim = g.nrows();
        if g.ncols() != dim || dim != j.dim() {
            return Err(AkgeoError::DimensionMismatch {
                expected: j.dim(),
                got: g.ncols(),
            });
        }
        let sym_residual = (&g - g.transpose()).abs().max();
        if sym_residual > tolerances::FRAME {
            return Err(AkgeoError::Algebra(format!(
                "metric is not symmetric (residual {sym_residual:.3e})"
            )));
        }
        let eigen = g.clone().symmetric_eigen();
        let min_eig = eigen.eigenvalues.min();
        if min_eig < tolerances::POSITIVE_DEFINITE_MIN_EIGENVALUE {
            return Err(AkgeoError::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        // omega(E_i, E_j) = g(J E_i, E_j) = (J^T g)_{ij}.
        let w = j.matrix().transpose() * &g;
        let antisym_residual = (&w + w.transpose()).abs().max();
        if antisym_residual > tolerances::FRAME {
            return Err(AkgeoError::IncompatibleTriple {
                residual: antisym_residual,
            });
        }
        let mut omega = InvariantForm::zero(dim, 2, frame_tag.clone());
        for i in 0..dim {
            for jj in (i + 1)..dim {
                omega.add_term(&[i, jj], Complex64::new(w[(i, jj)], 0.0))?;
            }
        }
        Ok(MetricData {
            g,
            omega,
            frame_tag,
        })
    }

    /// Builds the pair from a symplectic form instead, via `g = W J` where
    /// `W_{ij} = omega(E_i, E_j)`.
    pub fn from_omega(
        omega_matrix: DMatrix<f64>,
        j: &AlmostComplexStructure,
        frame_tag: FrameTag,
    ) -> Result<Self> {
        let g = &omega_matrix * j.matrix();
        Self::new(g, j, frame_tag)
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn omega(&self) -> &InvariantForm {
        &self.omega
    }

    pub fn frame_tag(&self) -> &FrameTag {
        &self.frame_tag
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                acc += x[r] * self.g[(r, c)] * y[c];
            }
        }
        acc
    }

    /// Largest deviation of `omega(X, Y) - g(JX, Y)` over frame pairs.
    pub fn compatibility_residual(&self, j: &AlmostComplexStructure) -> f64 {
        let w = j.matrix().transpose() * &self.g;
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for jj in (i + 1)..self.dim() {
                let coeff = self.omega.coeff(&[i, jj]);
                worst = worst.max((coeff - Complex64::new(w[(i, jj)], 0.0)).norm());
            }
        }
        worst
    }
}

/// The Nijenhuis tensor as a tangent-valued 2-form over the frame:
/// `N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`.
pub fn nijenhuis(j: &AlmostComplexStructure, alg: &InvariantAlgebra) -> Result<VectorValuedForm> {
    if j.frame_tag() != alg.frame_tag() {
        return Err(AkgeoError::FrameMismatch {
            left: j.frame_tag().0.clone(),
            right: alg.frame_tag().0.clone(),
        });
    }
    let dim = alg.dim();
    let jc = j.matrix_complex();
    let basis = |k: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::ZERO; dim];
        v[k] = ONE;
        v
    };
    let apply_j = |v: &[Complex64]| -> Vec<Complex64> {
        (0..dim)
            .map(|r| (0..dim).map(|c| jc[(r, c)] * v[c]).sum())
            .collect()
    };
    let mut components = vec![InvariantForm::zero(dim, 2, alg.frame_tag().clone()); dim];
    for i in 0..dim {
        for jj in (i + 1)..dim {
            let x = basis(i);
            let y = basis(jj);
            let jx = apply_j(&x);
            let jy = apply_j(&y);
            let t1 = alg.bracket(&jx, &jy)?;
            let t2 = apply_j(&alg.bracket(&jx, &y)?);
            let t3 = apply_j(&alg.bracket(&x, &jy)?);
            let t4 = alg.bracket(&x, &y)?;
            for k in 0..dim {
                let value = t1[k] - t2[k] - t3[k] - t4[k];
                if value.norm() >= tolerances::PRUNE_EPS {
                    components[k].add_term(&[i, jj], value)?;
                }
            }
        }
    }
    VectorValuedForm::new(components)
}

/// Structure classification with the residuals that decided each flag.
#[derive(Clone, Debug)]
pub struct ClassificationFlags {
    pub integrable: bool,
    pub almost_kahler: bool,
    pub quasi_kahler: bool,
    pub nijenhuis_max: f64,
    pub d_omega_max: f64,
    pub quasi_kahler_residual: f64,
}

/// Classifies the almost-Hermitian triple: integrable iff `N = 0`, almost
/// Kähler iff `d omega = 0`, quasi Kähler via the Levi-Civita criterion
/// `(grad J)_{JX} Y = -J (grad J)_X Y`.
pub fn classify(
    j: &AlmostComplexStructure,
    metric: &MetricData,
    alg: &InvariantAlgebra,
) -> Result<ClassificationFlags> {
    let triple = metric.compatibility_residual(j);
    if triple > tolerances::FRAME {
        return Err(AkgeoError::IncompatibleTriple { residual: triple });
    }
    let n = nijenhuis(j, alg)?;
    let nijenhuis_max = n.max_abs();
    let d_omega_max = alg.exterior_derivative(metric.omega())?.max_abs();
    let lc = levi_civita(metric, alg)?;
    let dim = alg.dim();
    let jm = j.matrix();
    // K_i = (grad_{E_i} J) as an endomorphism; the criterion reads
    // sum_a J_{ai} K_a + J K_i = 0 for every i.
    let k_mats: Vec<DMatrix<f64>> = (0..dim)
        .map(|i| &lc.gamma[i] * jm - jm * &lc.gamma[i])
        .collect();
    let mut quasi_kahler_residual: f64 = 0.0;
    for i in 0..dim {
        let mut lhs = jm * &k_mats[i];
        for (a, k_a) in k_mats.iter().enumerate() {
            lhs += k_a * jm[(a, i)];
        }
        quasi_kahler_residual = quasi_kahler_residual.max(lhs.abs().max());
    }
    Ok(ClassificationFlags {
        integrable: nijenhuis_max < tolerances::CONNECTION,
        almost_kahler: d_omega_max < tolerances::CONNECTION,
        quasi_kahler: quasi_kahler_residual < tolerances::CONNECTION,
        nijenhuis_max,
        d_omega_max,
        quasi_kahler_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionKind {
    LeviCivita,
    Canonical,
}

/// An invariant linear connection: `gamma[i][(k, j)] = G^k_{ij}`, the `e^k`
/// component of the derivative of `E_j` along `E_i`.
#[derive(Clone, Debug)]
pub struct RealConnection {
    pub gamma: Vec<DMatrix<f64>>,
    pub kind: ConnectionKind,
    pub frame_tag: FrameTag,
}

impl RealConnection {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Coefficients of the derivative of the vector `v` along `E_i`.
    pub fn derive(&self, i: usize, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (&self.gamma[i] * v).iter().copied().collect()
    }

    /// Largest entry of `grad g` over frame directions.
    pub fn metric_residual(&self, metric: &MetricData) -> f64 {
        let g = metric.g();
        self.gamma
            .iter()
            .map(|gm| (gm.transpose() * g + g * gm).abs().max())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `grad J` over frame directions.
    pub fn j_residual(&self, j: &AlmostComplexStructure) -> f64 {
        let jm = j.matrix();
        self.gamma
            .iter()
            .map(|gm| (gm * jm - jm * gm).abs().max())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `G^k_{ij} - G^k_{ji} - c^k_{ij}` (torsion of the
    /// coefficients against the bracket).
    pub fn torsion_residual(&self, alg: &InvariantAlgebra) -> Result<f64> {
        let dim = self.dim();
        let constants = alg.real_structure_constants()?;
        let mut c = vec![DMatrix::<f64>::zeros(dim, dim); dim];
        for (i, j, k, v) in constants {
            c[k][(i, j)] += v;
            c[k][(j, i)] -= v;
        }
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let value = self.gamma[i][(k, j)] - self.gamma[j][(k, i)] - c[k][(i, j)];
                    worst = worst.max(value.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Levi-Civita connection by the Koszul formula, valid in any invariant
/// frame with constant metric coefficients:
/// `2 g(grad_{E_i} E_j, E_k) = g([E_i,E_j],E_k) - g([E_j,E_k],E_i) - g([E_i,E_k],E_j)`.
pub fn levi_civita(metric: &MetricData, alg: &InvariantAlgebra) -> Result<RealConnection> {
    if metric.frame_tag() != alg.frame_tag() {
        return Err(AkgeoError::FrameMismatch {
            left: metric.frame_tag().0.clone(),
            right: alg.frame_tag().0.clone(),
        });
    }
    let dim = alg.dim();
    let g = metric.g();
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| AkgeoError::SingularMatrix("metric matrix is not invertible".to_string()))?;
    let real_bracket = |i: usize, j: usize| -> Result<Vec<f64>> {
        let mut x = vec![Complex64::ZERO; dim];
        let mut y = vec![Complex64::ZERO; dim];
        x[i] = ONE;
        y[j] = ONE;
        Ok(alg.bracket(&x, &y)?.iter().map(|c| c.re).collect())
    };
    let pair = |v: &[f64], k: usize| -> f64 { (0..dim).map(|r| v[r] * g[(r, k)]).sum() };
    let mut gamma = vec![DMatrix::<f64>::zeros(dim, dim); dim];
    for i in 0..dim {
        for j in 0..dim {
            let b_ij = real_bracket(i, j)?;
            let mut w = DVector::<f64>::zeros(dim);
            for k in 0..dim {
                let b_jk = real_bracket(j, k)?;
                let b_ik = real_bracket(i, k)?;
                w[k] = 0.5 * (pair(&b_ij, k) - pair(&b_jk, i) - pair(&b_ik, j));
            }
            let coeffs = &g_inv * w;
            for k in 0..dim {
                gamma[i][(k, j)] = coeffs[k];
            }
        }
    }
    let conn = RealConnection {
        gamma,
        kind: ConnectionKind::LeviCivita,
        frame_tag: alg.frame_tag().clone(),
    };
    let torsion = conn.torsion_residual(alg)?;
    let metric_res = conn.metric_residual(metric);
    if torsion > tolerances::FRAME || metric_res > tolerances::FRAME {
        return Err(AkgeoError::Algebra(format!(
            "Koszul solve left residuals (torsion {torsion:.3e}, metric {metric_res:.3e})"
        )));
    }
    Ok(conn)
}

/// Canonical connection `D_X Y = (1/2)(grad_X Y - J grad_X (JY))` from the
/// Levi-Civita connection; parallelizes both `g` and `J`.
pub fn canonical_connection(
    lc: &RealConnection,
    j: &AlmostComplexStructure,
    metric: &MetricData,
) -> Result<RealConnection> {
    if lc.kind != ConnectionKind::LeviCivita {
        return Err(AkgeoError::Domain(
            "canonical connection must be built from a Levi-Civita connection".to_string(),
        ));
    }
    let jm = j.matrix();
    let gamma: Vec<DMatrix<f64>> = lc.gamma.iter().map(|g| (g - jm * g * jm) * 0.5).collect();
    let conn = RealConnection {
        gamma,
        kind: ConnectionKind::Canonical,
        frame_tag: lc.frame_tag.clone(),
    };
    let j_res = conn.j_residual(j);
    let g_res = conn.metric_residual(metric);
    if j_res > tolerances::CONNECTION || g_res > tolerances::CONNECTION {
        return Err(AkgeoError::Algebra(format!(
            "canonical connection fails to parallelize the structure \
             (J residual {j_res:.3e}, g residual {g_res:.3e})"
        )));
    }
    Ok(conn)
}

/// Frame tag of the orthonormal J-adapted frame derived from `orig`.
pub fn adapted_tag(orig: &FrameTag) -> FrameTag {
    FrameTag(format!("{}|on", orig.0))
}

/// Frame tag of the unitary complex frame derived from `orig`.
pub fn unitary_tag(orig: &FrameTag) -> FrameTag {
    FrameTag(format!("{}|u", orig.0))
}

/// Everything attached to the unitary frame of an almost-Hermitian triple:
/// the orthonormalizing change, the algebra/metric/J rewritten in the
/// adapted real frame, the complexification `z_i = (sqrt2/2)(E_{2i-1} - i E_{2i})`,
/// and the structure constants in the unitary frame.
#[derive(Clone, Debug)]
pub struct ComplexFrameData {
    n: usize,
    orthonormalizing: FrameChange,
    algebra_adapted: InvariantAlgebra,
    j_adapted: AlmostComplexStructure,
    metric_adapted: MetricData,
    to_unitary: FrameChange,
    complex_algebra: InvariantAlgebra,
    z_vectors: Vec<Vec<Complex64>>,
}

impl ComplexFrameData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Change from the original real frame to the adapted orthonormal one.
    pub fn orthonormalizing(&self) -> &FrameChange {
        &self.orthonormalizing
    }

    pub fn algebra_adapted(&self) -> &InvariantAlgebra {
        &self.algebra_adapted
    }

    pub fn j_adapted(&self) -> &AlmostComplexStructure {
        &self.j_adapted
    }

    pub fn metric_adapted(&self) -> &MetricData {
        &self.metric_adapted
    }

    /// Change from the adapted real frame to the unitary frame
    /// `(z_1..z_n, conj z_1..conj z_n)`.
    pub fn to_unitary(&self) -> &FrameChange {
        &self.to_unitary
    }

    /// Structure constants in the unitary frame.
    pub fn complex_algebra(&self) -> &InvariantAlgebra {
        &self.complex_algebra
    }

    /// `z_i` coordinates over the adapted real frame.
    pub fn z_vectors(&self) -> &[Vec<Complex64>] {
        &self.z_vectors
    }

    pub fn adapted_frame_tag(&self) -> &FrameTag {
        self.algebra_adapted.frame_tag()
    }

    pub fn unitary_frame_tag(&self) -> &FrameTag {
        self.complex_algebra.frame_tag()
    }

    /// The matrix of J in the unitary frame: `+i` on the `z` block, `-i` on
    /// the conjugate block.
    pub fn unitary_j(&self) -> DMatrix<Complex64> {
        let mut j = DMatrix::<Complex64>::zeros(2 * self.n, 2 * self.n);
        for p in 0..self.n {
            j[(p, p)] = Complex64::new(0.0, 1.0);
            j[(self.n + p, self.n + p)] = Complex64::new(0.0, -1.0);
        }
        j
    }

    /// Conjugation of a form over the unitary coframe: conjugates the
    /// coefficients and swaps barred with unbarred coframe indices.
    pub fn conjugate_form(&self, form: &InvariantForm) -> Result<InvariantForm> {
        if form.frame_tag() != self.unitary_frame_tag() {
            return Err(AkgeoError::FrameMismatch {
                left: form.frame_tag().0.clone(),
                right: self.unitary_frame_tag().0.clone(),
            });
        }
        let n = self.n;
        let mut out = InvariantForm::zero(2 * n, form.degree(), form.frame_tag().clone());
        let mut swapped = Vec::new();
        for (idx, c) in form.terms() {
            swapped.clear();
            swapped.extend(idx.iter().map(|&p| if p < n { p + n } else { p - n }));
            out.add_term(&swapped, c.conj())?;
        }
        Ok(out)
    }

    /// The unitary coframe basis 1-form `Phi^i` (`i < n`) or its conjugate
    /// (`i >= n`).
    pub fn phi(&self, i: usize) -> Result<InvariantForm> {
        InvariantForm::one_form(2 * self.n, i, self.unitary_frame_tag().clone())
    }
}

fn orthonormal_adapted_frame(
    metric: &MetricData,
    j: &AlmostComplexStructure,
) -> Result<FrameChange> {
    let dim = metric.dim();
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for k in 0..dim {
        if accepted.len() == dim {
            break;
        }
        let mut w = vec![0.0; dim];
        w[k] = 1.0;
        for f in &accepted {
            let c = metric.inner(&w, f);
            for (w_r, f_r) in w.iter_mut().zip(f.iter()) {
                *w_r -= c * f_r;
            }
        }
        let norm = metric.inner(&w, &w).sqrt();
        // Vectors already in the span of earlier pairs contribute nothing.
        if norm < 1e-8 {
            continue;
        }
        let u: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let v = j.apply(&u);
        accepted.push(u);
        accepted.push(v);
    }
    if accepted.len() != dim {
        return Err(AkgeoError::FrameNotAdapted(
            "Gram-Schmidt pairing did not span the frame".to_string(),
        ));
    }
    let mut p = DMatrix::<f64>::zeros(dim, dim);
    for (col, vec) in accepted.iter().enumerate() {
        for (row, &x) in vec.iter().enumerate() {
            p[(row, col)] = x;
        }
    }
    FrameChange::from_real(
        p,
        metric.frame_tag().clone(),
        adapted_tag(metric.frame_tag()),
    )
}

fn check_adapted(fc: &FrameChange, metric: &MetricData, j: &AlmostComplexStructure) -> Result<()> {
    let dim = metric.dim();
    let p = fc.matrix().map(|c| c.re);
    let imag = fc.matrix().map(|c| c.im).abs().max();
    if imag > tolerances::FRAME {
        return Err(AkgeoError::FrameNotAdapted(
            "orthonormalizing change must be real".to_string(),
        ));
    }
    let gram = p.transpose() * metric.g() * &p;
    let gram_res = (&gram - DMatrix::<f64>::identity(dim, dim)).abs().max();
    if gram_res > tolerances::FRAME {
        return Err(AkgeoError::FrameNotAdapted(format!(
            "supplied frame is not orthonormal (residual {gram_res:.3e})"
        )));
    }
    let p_inv = fc.inverse_matrix().map(|c| c.re);
    let j_new = &p_inv * j.matrix() * &p;
    let j_res = (&j_new - standard_block_matrix(dim)).abs().max();
    if j_res > tolerances::FRAME {
        return Err(AkgeoError::FrameNotAdapted(format!(
            "supplied frame does not put J in standard block form (residual {j_res:.3e})"
        )));
    }
    Ok(())
}

/// Builds the unitary frame data for a compatible triple. When `supplied` is
/// given it must orthonormalize `g` and standardize `J` (checked); otherwise
/// a Gram-Schmidt `(u, Ju)` pairing over the input order is used.
pub fn unitary_frame(
    metric: &MetricData,
    j: &AlmostComplexStructure,
    alg: &InvariantAlgebra,
    supplied: Option<&FrameChange>,
) -> Result<ComplexFrameData> {
    let dim = alg.dim();
    let n = dim / 2;
    let orthonormalizing = match supplied {
        Some(fc) => {
            check_adapted(fc, metric, j)?;
            fc.clone()
        }
        None => {
            let fc = orthonormal_adapted_frame(metric, j)?;
            check_adapted(&fc, metric, j)?;
            fc
        }
    };
    let on_tag = orthonormalizing.to_tag().clone();
    let on_labels: Vec<String> = (1..=dim).map(|i| format!("F{i}")).collect();
    let algebra_adapted = orthonormalizing.transform_algebra(alg, on_labels)?;
    let j_adapted = AlmostComplexStructure::standard(dim, on_tag.clone())?;
    let metric_adapted = MetricData::new(
        DMatrix::<f64>::identity(dim, dim),
        &j_adapted,
        on_tag.clone(),
    )?;

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut q = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        q[(2 * i, i)] = Complex64::new(s, 0.0);
        q[(2 * i + 1, i)] = Complex64::new(0.0, -s);
        q[(2 * i, n + i)] = Complex64::new(s, 0.0);
        q[(2 * i + 1, n + i)] = Complex64::new(0.0, s);
    }
    let u_tag = unitary_tag(alg.frame_tag());
    let to_unitary = FrameChange::new(q.clone(), on_tag, u_tag.clone())?;

    let z_vectors: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..dim).map(|r| q[(r, i)]).collect())
        .collect();
    // h-unitarity in the adapted frame, where h(Z, W) reduces to the
    // standard Hermitian product.
    for a in 0..n {
        for b in 0..n {
            let h: Complex64 = (0..dim)
                .map(|r| z_vectors[a][r] * z_vectors[b][r].conj())
                .sum();
            let expect = if a == b { ONE } else { Complex64::ZERO };
            if (h - expect).norm() > tolerances::FRAME {
                return Err(AkgeoError::FrameNotAdapted(format!(
                    "unitary frame fails h(z_{}, z_{}) = {} (got {})",
                    a + 1,
                    b + 1,
                    if a == b { 1 } else { 0 },
                    h
                )));
            }
        }
    }

    let mut u_labels: Vec<String> = (1..=n).map(|i| format!("Phi{i}")).collect();
    u_labels.extend((1..=n).map(|i| format!("PhiB{i}")));
    let complex_algebra = to_unitary.transform_algebra(&algebra_adapted, u_labels)?;

    Ok(ComplexFrameData {
        n,
        orthonormalizing,
        algebra_adapted,
        j_adapted,
        metric_adapted,
        to_unitary,
        complex_algebra,
        z_vectors,
    })
}

/// The unitary connection matrix: degree-1 forms with
/// `D z_j = sum_i theta^i_j z_i`.
#[derive(Clone, Debug)]
pub struct ConnectionMatrix {
    pub theta: Vec<Vec<InvariantForm>>,
}

impl ConnectionMatrix {
    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Largest coefficient of `theta^i_j + conj(theta^j_i)`.
    pub fn skew_hermitian_residual(&self, cf: &ComplexFrameData) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in 0..self.n() {
                let conj = cf.conjugate_form(&self.theta[j][i])?;
                worst = worst.max(self.theta[i][j].add(&conj)?.max_abs());
            }
        }
        Ok(worst)
    }
}

/// Connection 1-forms of the canonical connection in the unitary frame,
/// assembled from the real coefficients by expanding `D_{E_r} z_j` and
/// reading off the `z_i` components. A nonvanishing conjugate component
/// means J is not parallel and the forms are ill-defined.
pub fn connection_forms(conn: &RealConnection, cf: &ComplexFrameData) -> Result<ConnectionMatrix> {
    if conn.kind != ConnectionKind::Canonical {
        return Err(AkgeoError::Domain(
            "complex connection forms require the canonical connection".to_string(),
        ));
    }
    if conn.frame_tag != *cf.adapted_frame_tag() {
        return Err(AkgeoError::FrameMismatch {
            left: conn.frame_tag.0.clone(),
            right: cf.adapted_frame_tag().0.clone(),
        });
    }
    let n = cf.n();
    let dim = 2 * n;
    let mut theta_on: Vec<Vec<InvariantForm>> =
        vec![vec![InvariantForm::zero(dim, 1, cf.adapted_frame_tag().clone()); n]; n];
    for r in 0..dim {
        let gamma_r = conn.gamma[r].map(|x| Complex64::new(x, 0.0));
        for j in 0..n {
            let z_j = cf.z_vectors()[j].clone();
            let dz: Vec<Complex64> = (0..dim)
                .map(|row| (0..dim).map(|c| gamma_r[(row, c)] * z_j[c]).sum())
                .collect();
            let w = cf.to_unitary().vector_to_new(&dz)?;
            let antiholo: f64 = w[n..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            if antiholo > tolerances::CONNECTION {
                return Err(AkgeoError::NotComplexLinear { residual: antiholo });
            }
            for i in 0..n {
                if w[i].norm() >= tolerances::PRUNE_EPS {
                    theta_on[i][j].add_term(&[r], w[i])?;
                }
            }
        }
    }
    let theta = theta_on
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|f| cf.to_unitary().transform_form(&f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = ConnectionMatrix { theta };
    let skew = matrix.skew_hermitian_residual(cf)?;
    if skew > tolerances::CONNECTION {
        return Err(AkgeoError::Algebra(format!(
            "connection matrix is not skew-Hermitian (residual {skew:.3e})"
        )));
    }
    Ok(matrix)
}

/// Complex torsion 2-forms from the first structure equation
/// `T^i = d Phi^i + sum_j theta^i_j ∧ Phi^j`.
pub fn torsion_forms(
    theta: &ConnectionMatrix,
    cf: &ComplexFrameData,
) -> Result<Vec<InvariantForm>> {
    let n = cf.n();
    let alg = cf.complex_algebra();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = alg.exterior_derivative(&cf.phi(i)?)?;
        for j in 0..n {
            t = t.add(&theta.theta[i][j].wedge(&cf.phi(j)?)?)?;
        }
        out.push(t);
    }
    Ok(out)
}

/// Real torsion 2-forms `T^i = d e^i + sum_j w^i_j ∧ e^j` of a connection in
/// its own frame.
pub fn real_torsion_forms(
    conn: &RealConnection,
    alg: &InvariantAlgebra,
) -> Result<Vec<InvariantForm>> {
    if conn.frame_tag != *alg.frame_tag() {
        return Err(AkgeoError::FrameMismatch {
            left: conn.frame_tag.0.clone(),
            right: alg.frame_tag().0.clone(),
        });
    }
    let dim = alg.dim();
    let omega = connection_one_forms(conn, alg)?;
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let e_i = InvariantForm::one_form(dim, i, alg.frame_tag().clone())?;
        let mut t = alg.exterior_derivative(&e_i)?;
        for j in 0..dim {
            let e_j = InvariantForm::one_form(dim, j, alg.frame_tag().clone())?;
            t = t.add(&omega[i][j].wedge(&e_j)?)?;
        }
        out.push(t);
    }
    Ok(out)
}

/// Connection 1-form matrix `w^i_j = sum_k G^i_{kj} e^k`.
pub fn connection_one_forms(
    conn: &RealConnection,
    alg: &InvariantAlgebra,
) -> Result<Vec<Vec<InvariantForm>>> {
    let dim = alg.dim();
    let mut out = vec![vec![InvariantForm::zero(dim, 1, conn.frame_tag.clone()); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let v = conn.gamma[k][(i, j)];
                if v.abs() >= tolerances::PRUNE_EPS {
                    out[i][j].add_term(&[k], Complex64::new(v, 0.0))?;
                }
            }
        }
    }
    Ok(out)
}

/// Type components of a degree-2 form under an almost complex structure
/// given as a matrix over the same frame.
#[derive(Clone, Debug)]
pub struct TypeComponents {
    pub f20: InvariantForm,
    pub f11: InvariantForm,
    pub f02: InvariantForm,
}

/// Splits a 2-form into its (2,0), (1,1) and (0,2) parts by the projector
/// identities `phi^{1,1}(X,Y) = (phi(X,Y) + phi(JX,JY))/2` and
/// `phi^{2,0/0,2}(X,Y) = (phi(X,Y) - phi(JX,JY) ∓ i(phi(JX,Y) + phi(X,JY)))/4`.
pub fn type_decompose(form: &InvariantForm, j: &DMatrix<Complex64>) -> Result<TypeComponents> {
    if form.degree() != 2 {
        return Err(AkgeoError::DegreeMismatch {
            expected: 2,
            got: form.degree(),
        });
    }
    let dim = form.dim();
    if j.nrows() != dim || j.ncols() != dim {
        return Err(AkgeoError::DimensionMismatch {
            expected: dim,
            got: j.nrows(),
        });
    }
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for (idx, c) in form.terms() {
        a[(idx[0], idx[1])] = c;
        a[(idx[1], idx[0])] = -c;
    }
    let jt = j.transpose();
    let jaj = &jt * &a * j;
    let mixed = &jt * &a + &a * j;
    let i = Complex64::new(0.0, 1.0);
    let m11 = (&a + &jaj) * Complex64::new(0.5, 0.0);
    let m20 = (&a - &jaj - &mixed * i) * Complex64::new(0.25, 0.0);
    let m02 = (&a - &jaj + &mixed * i) * Complex64::new(0.25, 0.0);
    let build = |m: &DMatrix<Complex64>| -> Result<InvariantForm> {
        let mut f = InvariantForm::zero(dim, 2, form.frame_tag().clone());
        for r in 0..dim {
            for c in (r + 1)..dim {
                if m[(r, c)].norm() >= tolerances::PRUNE_EPS {
                    f.add_term(&[r, c], m[(r, c)])?;
                }
            }
        }
        Ok(f)
    };
    Ok(TypeComponents {
        f20: build(&m20)?,
        f11: build(&m11)?,
        f02: build(&m02)?,
    })
}

/// Splits each component of a vector-valued 2-form.
pub fn type_decompose_vector_valued(
    form: &VectorValuedForm,
    j: &DMatrix<Complex64>,
) -> Result<(VectorValuedForm, VectorValuedForm, VectorValuedForm)> {
    let mut f20 = Vec::new();
    let mut f11 = Vec::new();
    let mut f02 = Vec::new();
    for c in &form.components {
        let parts = type_decompose(c, j)?;
        f20.push(parts.f20);
        f11.push(parts.f11);
        f02.push(parts.f02);
    }
    Ok((
        VectorValuedForm::new(f20)?,
        VectorValuedForm::new(f11)?,
        VectorValuedForm::new(f02)?,
    ))
}

/// Curvature data of the canonical connection, complex and real halves.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    /// Unitary curvature matrix from the second structure equation.
    pub psi: Vec<Vec<InvariantForm>>,
    /// `R^i_{jk lbar}`: coefficient of `Phi^k ∧ conj(Phi^l)` in `psi[i][j]`.
    pub psi11_coeffs: BTreeMap<(usize, usize, usize, usize), Complex64>,
    /// `R_{k lbar} = sum_i R^i_{ik lbar}`.
    pub ricci_complex: DMatrix<Complex64>,
    /// Trace of `ricci_complex` (imaginary part checked to vanish).
    pub scal_complex: f64,
    /// Real curvature matrix in the adapted orthonormal frame.
    pub omega_real: Vec<Vec<InvariantForm>>,
    /// Real Ricci matrix from increasing-pair coefficients.
    pub ricci_real: DMatrix<f64>,
    /// Trace of `ricci_real`.
    pub scal_real: f64,
}

/// Complex half of the curvature computation.
pub struct ComplexCurvature {
    pub psi: Vec<Vec<InvariantForm>>,
    pub psi11_coeffs: BTreeMap<(usize, usize, usize, usize), Complex64>,
    pub ricci_complex: DMatrix<Complex64>,
    pub scal_complex: f64,
}

/// Curvature matrix, (1,1)-coefficients, complex Ricci and scalar from the
/// second structure equation `Psi^i_j = d theta^i_j + sum_k theta^i_k ∧ theta^k_j`.
pub fn curvature(theta: &ConnectionMatrix, cf: &ComplexFrameData) -> Result<ComplexCurvature> {
    let n = cf.n();
    let alg = cf.complex_algebra();
    let mut psi = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut p = alg.exterior_derivative(&theta.theta[i][j])?;
            for k in 0..n {
                p = p.add(&theta.theta[i][k].wedge(&theta.theta[k][j])?)?;
            }
            row.push(p);
        }
        psi.push(row);
    }
    let mut skew: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let conj = cf.conjugate_form(&psi[j][i])?;
            skew = skew.max(psi[i][j].add(&conj)?.max_abs());
        }
    }
    if skew > tolerances::CONNECTION {
        return Err(AkgeoError::Algebra(format!(
            "curvature matrix is not skew-Hermitian (residual {skew:.3e})"
        )));
    }
    let mut psi11_coeffs = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let c = psi[i][j].coeff(&[k, n + l]);
                    if c.norm() >= tolerances::PRUNE_EPS {
                        psi11_coeffs.insert((i, j, k, l), c);
                    }
                }
            }
        }
    }
    let mut ricci_complex = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let mut acc = Complex64::ZERO;
            for i in 0..n {
                if let Some(c) = psi11_coeffs.get(&(i, i, k, l)) {
                    acc += c;
                }
            }
            ricci_complex[(k, l)] = acc;
        }
    }
    let trace: Complex64 = (0..n).map(|k| ricci_complex[(k, k)]).sum();
    if trace.im.abs() > tolerances::COMPOSITE {
        return Err(AkgeoError::Algebra(format!(
            "complex scalar curvature has imaginary part {:.3e}",
            trace.im
        )));
    }
    Ok(ComplexCurvature {
        psi,
        psi11_coeffs,
        ricci_complex,
        scal_complex: trace.re,
    })
}

/// Scalar curvature recomputed directly from the (1,1)-coefficients,
/// bypassing the assembled Ricci matrix.
pub fn scalar_from_psi11(
    psi11: &BTreeMap<(usize, usize, usize, usize), Complex64>,
    n: usize,
) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for k in 0..n {
            if let Some(c) = psi11.get(&(i, i, k, k)) {
                acc += c;
            }
        }
    }
    acc
}

/// Real half of the curvature computation.
pub struct RealCurvature {
    pub connection_forms: Vec<Vec<InvariantForm>>,
    pub omega_real: Vec<Vec<InvariantForm>>,
    pub ricci_real: DMatrix<f64>,
    pub scal_real: f64,
}

/// Real curvature matrix, Ricci and scalar of a canonical connection in an
/// orthonormal frame.
pub fn real_curvature(
    conn: &RealConnection,
    alg: &InvariantAlgebra,
    metric: &MetricData,
) -> Result<RealCurvature> {
    if conn.kind != ConnectionKind::Canonical {
        return Err(AkgeoError::Domain(
            "real curvature extraction expects the canonical connection".to_string(),
        ));
    }
    let dim = alg.dim();
    let identity_res = (metric.g() - DMatrix::<f64>::identity(dim, dim))
        .abs()
        .max();
    if identity_res > tolerances::FRAME {
        return Err(AkgeoError::FrameNotAdapted(format!(
            "real curvature extraction requires an orthonormal frame \
             (metric deviates from identity by {identity_res:.3e})"
        )));
    }
    let w = connection_one_forms(conn, alg)?;
    let mut omega_real = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut row = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut big = alg.exterior_derivative(&w[i][j])?;
            for k in 0..dim {
                big = big.add(&w[i][k].wedge(&w[k][j])?)?;
            }
            row.push(big);
        }
        omega_real.push(row);
    }
    let mut ricci_real = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..j {
                acc += omega_real[k][i].coeff(&[k, j]);
            }
            if acc.im.abs() > tolerances::COMPOSITE {
                return Err(AkgeoError::Algebra(format!(
                    "real Ricci entry ({i},{j}) has imaginary part {:.3e}",
                    acc.im
                )));
            }
            ricci_real[(i, j)] = acc.re;
        }
    }
    let scal_real = ricci_real.trace();
    Ok(RealCurvature {
        connection_forms: w,
        omega_real,
        ricci_real,
        scal_real,
    })
}

/// Assembles the two curvature halves into the combined report.
pub fn curvature_report(complex: ComplexCurvature, real: RealCurvature) -> CurvatureReport {
    CurvatureReport {
        psi: complex.psi,
        psi11_coeffs: complex.psi11_coeffs,
        ricci_complex: complex.ricci_complex,
        scal_complex: complex.scal_complex,
        omega_real: real.omega_real,
        ricci_real: real.ricci_real,
        scal_real: real.scal_real,
    }
}
