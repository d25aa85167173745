//! Exterior calculus on left-invariant forms of a Lie algebra presented by
//! structure constants in a chosen global frame.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * `[E_i, E_j] = sum_k c^k_{ij} E_k` with `i < j`; antisymmetry is
//!   structural, only `i < j` keys are stored.
//! * `de^k(E_i, E_j) = -e^k([E_i, E_j])`, extended to all degrees as an
//!   antiderivation. With Jacobi-closed constants this gives `d o d = 0`.
//! * A form is a sparse map from strictly increasing multi-indices over the
//!   coframe to complex coefficients. Coefficients below
//!   [`tolerances::PRUNE_EPS`] are dropped on normalization.
//!
//! Every value carries a [`FrameTag`]; binary operations refuse to mix frames
//! so coefficients can never be silently reinterpreted. A [`FrameChange`]
//! moves forms, vectors, vector-valued forms and whole algebras between
//! frames.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::tolerances;
use crate::{AkgeoError, Result};

/// Identifier of the (co)frame a set of coefficients refers to.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct FrameTag(pub String);

impl FrameTag {
    pub fn new(name: &str) -> Self {
        FrameTag(name.to_string())
    }
}

impl fmt::Display for FrameTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn frame_mismatch(left: &FrameTag, right: &FrameTag) -> AkgeoError {
    AkgeoError::FrameMismatch {
        left: left.0.clone(),
        right: right.0.clone(),
    }
}

/// Sorts a multi-index, tracking the permutation sign.
///
/// Returns `None` when an index repeats (the wedge monomial vanishes).
fn canonicalize_index(mut idx: Vec<usize>) -> Option<(Vec<usize>, f64)> {
    let mut sign = 1.0;
    // Insertion sort; swap counting gives the permutation parity.
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((idx, sign))
}

/// A left-invariant complex-valued differential form of fixed degree.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantForm {
    degree: usize,
    dim: usize,
    coeffs: BTreeMap<Vec<usize>, Complex64>,
    frame_tag: FrameTag,
}

impl InvariantForm {
    /// The zero form of the given degree.
    pub fn zero(dim: usize, degree: usize, frame_tag: FrameTag) -> Self {
        InvariantForm {
            degree,
            dim,
            coeffs: BTreeMap::new(),
            frame_tag,
        }
    }

    /// The basis monomial `e^{i_1} ∧ … ∧ e^{i_p}` (0-based indices, any order).
    pub fn basis(dim: usize, indices: &[usize], frame_tag: FrameTag) -> Result<Self> {
        let mut form = InvariantForm::zero(dim, indices.len(), frame_tag);
        form.add_term(indices, Complex64::new(1.0, 0.0))?;
        Ok(form)
    }

    /// The coordinate one-form `e^i`.
    pub fn one_form(dim: usize, i: usize, frame_tag: FrameTag) -> Result<Self> {
        Self::basis(dim, &[i], frame_tag)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_tag(&self) -> &FrameTag {
        &self.frame_tag
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Iterates over `(multi-index, coefficient)` terms in index order.
    pub fn terms(&self) -> impl Iterator<Item = (&[usize], Complex64)> {
        self.coeffs.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Coefficient of a multi-index given in any order (sign-adjusted).
    pub fn coeff(&self, indices: &[usize]) -> Complex64 {
        match canonicalize_index(indices.to_vec()) {
            None => Complex64::ZERO,
            Some((idx, sign)) => self.coeffs.get(&idx).map_or(Complex64::ZERO, |c| c * sign),
        }
    }

    /// Evaluates a 1-form on a coefficient vector.
    pub fn evaluate_one(&self, v: &[Complex64]) -> Complex64 {
        debug_assert_eq!(self.degree, 1);
        self.coeffs.iter().map(|(idx, c)| c * v[idx[0]]).sum()
    }

    /// Evaluates a 2-form on a pair of coefficient vectors.
    pub fn evaluate_two(&self, v: &[Complex64], w: &[Complex64]) -> Complex64 {
        debug_assert_eq!(self.degree, 2);
        self.coeffs
            .iter()
            .map(|(idx, c)| c * (v[idx[0]] * w[idx[1]] - v[idx[1]] * w[idx[0]]))
            .sum()
    }

    /// Adds `value * e^{indices}` in place, canonicalizing and pruning.
    pub fn add_term(&mut self, indices: &[usize], value: Complex64) -> Result<()> {
        if indices.len() != self.degree {
            return Err(AkgeoError::DegreeMismatch {
                expected: self.degree,
                got: indices.len(),
            });
        }
        for &i in indices {
            if i >= self.dim {
                return Err(AkgeoError::IndexOutOfRange {
                    index: i,
                    dim: self.dim,
                });
            }
        }
        if let Some((idx, sign)) = canonicalize_index(indices.to_vec()) {
            let entry = self.coeffs.entry(idx.clone()).or_insert(Complex64::ZERO);
            *entry += value * sign;
            if entry.norm() < tolerances::PRUNE_EPS {
                self.coeffs.remove(&idx);
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.frame_tag != other.frame_tag {
            return Err(frame_mismatch(&self.frame_tag, &other.frame_tag));
        }
        if self.dim != other.dim {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(AkgeoError::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for (idx, c) in other.coeffs.iter() {
            let entry = out.coeffs.entry(idx.clone()).or_insert(Complex64::ZERO);
            *entry += c;
            if entry.norm() < tolerances::PRUNE_EPS {
                out.coeffs.remove(idx);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        if factor.norm() < tolerances::PRUNE_EPS {
            out.coeffs.clear();
            return out;
        }
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out.prune();
        out
    }

    /// Complex conjugation of the coefficients (the coframe is left alone;
    /// conjugating forms over a complex-adapted coframe additionally swaps
    /// barred and unbarred labels, which is handled where that coframe is
    /// built).
    pub fn conjugated_coefficients(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.conj();
        }
        out
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() >= tolerances::PRUNE_EPS);
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (idx, c) in self.coeffs.iter() {
            let d = other.coeffs.get(idx).copied().unwrap_or(Complex64::ZERO);
            worst = worst.max((c - d).norm());
        }
        for (idx, d) in other.coeffs.iter() {
            if !self.coeffs.contains_key(idx) {
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Wedge product. Graded-commutative and associative.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out =
            InvariantForm::zero(self.dim, self.degree + other.degree, self.frame_tag.clone());
        let mut scratch = Vec::with_capacity(out.degree);
        for (i_idx, i_c) in self.coeffs.iter() {
            for (j_idx, j_c) in other.coeffs.iter() {
                scratch.clear();
                scratch.extend_from_slice(i_idx);
                scratch.extend_from_slice(j_idx);
                out.add_term(&scratch, i_c * j_c)?;
            }
        }
        Ok(out)
    }

    /// Evaluates a 2-form on the frame pair `(E_i, E_j)`.
    pub fn evaluate_pair(&self, i: usize, j: usize) -> Complex64 {
        debug_assert_eq!(self.degree, 2);
        self.coeff(&[i, j])
    }

    /// Renders the form with the given coframe labels, e.g. `(1+0i)·E2∧E3`.
    pub fn format_with_labels(&self, labels: &[String]) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (idx, c) in self.coeffs.iter() {
            let monomial = if idx.is_empty() {
                "1".to_string()
            } else {
                idx.iter()
                    .map(|&i| labels[i].as_str())
                    .collect::<Vec<_>>()
                    .join("^")
            };
            parts.push(format!("({})·{}", format_complex(*c), monomial));
        }
        parts.join(" + ")
    }
}

/// Formats a complex scalar compactly for reports.
pub fn format_complex(c: Complex64) -> String {
    if c.im.abs() < tolerances::PRUNE_EPS {
        format!("{:.9}", c.re)
    } else if c.re.abs() < tolerances::PRUNE_EPS {
        format!("{:.9}i", c.im)
    } else {
        format!("{:.9}{:+.9}i", c.re, c.im)
    }
}

/// A form with values in the tangent bundle: one [`InvariantForm`] per frame
/// vector, all of the same degree and frame.
#[derive(Clone, Debug)]
pub struct VectorValuedForm {
    pub components: Vec<InvariantForm>,
}

impl VectorValuedForm {
    pub fn new(components: Vec<InvariantForm>) -> Result<Self> {
        if let Some(first) = components.first() {
            for c in &components {
                if c.degree() != first.degree() {
                    return Err(AkgeoError::DegreeMismatch {
                        expected: first.degree(),
                        got: c.degree(),
                    });
                }
                first.check_compatible(c)?;
            }
        }
        Ok(VectorValuedForm { components })
    }

    pub fn degree(&self) -> usize {
        self.components.first().map_or(0, |c| c.degree())
    }

    /// Evaluates on a frame pair, returning the value-vector coefficients.
    pub fn evaluate_pair(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.components
            .iter()
            .map(|c| c.evaluate_pair(i, j))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// A Lie algebra given by structure constants in a global frame.
///
/// Structure constants may be complex because frames themselves may be
/// complex (a complexified algebra in an adapted coframe is an
/// `InvariantAlgebra` like any other); user-facing constructors take real
/// constants.
#[derive(Clone, Debug)]
pub struct InvariantAlgebra {
    dim: usize,
    /// `(i, j, k) -> c^k_{ij}` with `i < j`.
    structure: BTreeMap<(usize, usize, usize), Complex64>,
    frame_labels: Vec<String>,
    frame_tag: FrameTag,
}

/// Outcome of [`validate_algebra`].
#[derive(Clone, Debug)]
pub struct AlgebraDiagnostics {
    pub max_jacobi_residual: f64,
    pub pass: bool,
}

impl InvariantAlgebra {
    /// Builds an algebra from real structure-constant triples
    /// `(i, j, k, c^k_{ij})` with 0-based indices.
    pub fn new(
        dim: usize,
        frame_labels: Vec<String>,
        frame_tag: FrameTag,
        triples: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let complex: Vec<(usize, usize, usize, Complex64)> = triples
            .iter()
            .map(|&(i, j, k, v)| (i, j, k, Complex64::new(v, 0.0)))
            .collect();
        Self::new_complex(dim, frame_labels, frame_tag, &complex)
    }

    /// Builds an algebra from complex structure-constant triples.
    pub fn new_complex(
        dim: usize,
        frame_labels: Vec<String>,
        frame_tag: FrameTag,
        triples: &[(usize, usize, usize, Complex64)],
    ) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(AkgeoError::Algebra(format!(
                "dimension must be positive and even, got {dim}"
            )));
        }
        if frame_labels.len() != dim {
            return Err(AkgeoError::DimensionMismatch {
                expected: dim,
                got: frame_labels.len(),
            });
        }
        let mut structure = BTreeMap::new();
        for &(i, j, k, v) in triples {
            for idx in [i, j, k] {
                if idx >= dim {
                    return Err(AkgeoError::IndexOutOfRange { index: idx, dim });
                }
            }
            if i == j {
                return Err(AkgeoError::Algebra(format!(
                    "bracket [E_{i}, E_{i}] of a vector with itself cannot carry a constant"
                )));
            }
            // Store only i < j; a key given as (j, i) contributes with the
            // opposite sign.
            let (key, value) = if i < j {
                ((i, j, k), v)
            } else {
                ((j, i, k), -v)
            };
            let entry = structure.entry(key).or_insert(Complex64::ZERO);
            *entry += value;
            if entry.norm() < tolerances::PRUNE_EPS {
                structure.remove(&key);
            }
        }
        Ok(InvariantAlgebra {
            dim,
            structure,
            frame_labels,
            frame_tag,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_tag(&self) -> &FrameTag {
        &self.frame_tag
    }

    pub fn frame_labels(&self) -> &[String] {
        &self.frame_labels
    }

    /// Iterates over stored `(i, j, k, c^k_{ij})` entries with `i < j`.
    pub fn structure_constants(
        &self,
    ) -> impl Iterator<Item = (usize, usize, usize, Complex64)> + '_ {
        self.structure.iter().map(|(&(i, j, k), &c)| (i, j, k, c))
    }

    /// Structure constants as reals; errors when any entry has an imaginary
    /// part (the frame is genuinely complex and no real bracket exists).
    pub fn real_structure_constants(&self) -> Result<Vec<(usize, usize, usize, f64)>> {
        let mut out = Vec::with_capacity(self.structure.len());
        for (&(i, j, k), &c) in self.structure.iter() {
            if c.im.abs() > tolerances::FRAME {
                return Err(AkgeoError::Algebra(format!(
                    "structure constant c^{k}_{{{i}{j}}} = {c} is not real"
                )));
            }
            out.push((i, j, k, c.re));
        }
        Ok(out)
    }

    /// `[E_i, E_j]` as a coefficient vector.
    pub fn bracket_basis(&self, i: usize, j: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dim];
        if i == j {
            return out;
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        for (&(p, q, k), &c) in self.structure.range((a, b, 0)..=(a, b, usize::MAX)) {
            debug_assert_eq!((p, q), (a, b));
            out[k] += c * sign;
        }
        out
    }

    /// Bilinear bracket of coefficient vectors.
    pub fn bracket(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim,
                got: if x.len() != self.dim {
                    x.len()
                } else {
                    y.len()
                },
            });
        }
        let mut out = vec![Complex64::ZERO; self.dim];
        for (&(i, j, k), &c) in self.structure.iter() {
            out[k] += c * (x[i] * y[j] - x[j] * y[i]);
        }
        Ok(out)
    }

    /// Maximal Jacobi residual `max |[[E_i,E_j],E_k] + cyclic|` over basis
    /// triples.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in (j + 1)..self.dim {
                    let mut acc = vec![Complex64::ZERO; self.dim];
                    for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                        let inner = self.bracket_basis(a, b);
                        let mut basis = vec![Complex64::ZERO; self.dim];
                        basis[c] = Complex64::new(1.0, 0.0);
                        let outer = self.bracket(&inner, &basis).expect("dimensions agree");
                        for (acc_v, o) in acc.iter_mut().zip(outer) {
                            *acc_v += o;
                        }
                    }
                    for v in acc {
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }

    /// `d e^k` as an invariant 2-form: `-sum_{i<j} c^k_{ij} e^i ∧ e^j`.
    pub fn d_one_form(&self, k: usize) -> Result<InvariantForm> {
        if k >= self.dim {
            return Err(AkgeoError::IndexOutOfRange {
                index: k,
                dim: self.dim,
            });
        }
        let mut out = InvariantForm::zero(self.dim, 2, self.frame_tag.clone());
        for (&(i, j, target), &c) in self.structure.iter() {
            if target == k {
                out.add_term(&[i, j], -c)?;
            }
        }
        Ok(out)
    }

    /// Exterior derivative of an invariant form in this algebra's frame.
    pub fn exterior_derivative(&self, form: &InvariantForm) -> Result<InvariantForm> {
        if form.frame_tag != self.frame_tag {
            return Err(frame_mismatch(&form.frame_tag, &self.frame_tag));
        }
        if form.dim != self.dim {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim,
                got: form.dim,
            });
        }
        let mut out = InvariantForm::zero(self.dim, form.degree + 1, self.frame_tag.clone());
        let mut rest = Vec::with_capacity(form.degree.saturating_sub(1));
        for (idx, coeff) in form.coeffs.iter() {
            for (r, &k) in idx.iter().enumerate() {
                // d(e^{i_0..i_{p-1}}) = sum_r (-1)^r de^{i_r} ∧ e^{rest};
                // the 2-form de^{i_r} commutes past the leading one-forms.
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                rest.clear();
                rest.extend(idx.iter().take(r).copied());
                rest.extend(idx.iter().skip(r + 1).copied());
                for (&(i, j, target), &c) in self.structure.iter() {
                    if target == k {
                        let mut full = Vec::with_capacity(form.degree + 1);
                        full.push(i);
                        full.push(j);
                        full.extend_from_slice(&rest);
                        out.add_term(&full, -c * coeff * sign)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative of a vector-valued form, componentwise on the
    /// form parts.
    pub fn exterior_derivative_vv(&self, form: &VectorValuedForm) -> Result<VectorValuedForm> {
        let components = form
            .components
            .iter()
            .map(|c| self.exterior_derivative(c))
            .collect::<Result<Vec<_>>>()?;
        VectorValuedForm::new(components)
    }
}

/// Checks well-formedness and the Jacobi identity.
pub fn validate_algebra(alg: &InvariantAlgebra) -> AlgebraDiagnostics {
    let residual = alg.jacobi_residual();
    AlgebraDiagnostics {
        max_jacobi_residual: residual,
        pass: residual < tolerances::FRAME,
    }
}

/// An invertible change of frame.
///
/// `matrix` expresses the new frame vectors in the old frame (column `j`
/// holds the old-frame coefficients of the new vector `X'_j`). Coframes then
/// transform by `e_old^l = sum_k P_{lk} e_new^k`.
#[derive(Clone, Debug)]
pub struct FrameChange {
    matrix: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
    from: FrameTag,
    to: FrameTag,
}

impl FrameChange {
    pub fn new(matrix: DMatrix<Complex64>, from: FrameTag, to: FrameTag) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(AkgeoError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let inverse = matrix.clone().try_inverse().ok_or_else(|| {
            AkgeoError::SingularMatrix(format!("frame change `{from}` -> `{to}` is not invertible"))
        })?;
        let identity = DMatrix::<Complex64>::identity(matrix.nrows(), matrix.ncols());
        let residual = (&matrix * &inverse - identity).norm();
        if residual > tolerances::FRAME {
            return Err(AkgeoError::SingularMatrix(format!(
                "frame change `{from}` -> `{to}` inverts poorly (residual {residual:.3e})"
            )));
        }
        Ok(FrameChange {
            matrix,
            inverse,
            from,
            to,
        })
    }

    pub fn from_real(matrix: DMatrix<f64>, from: FrameTag, to: FrameTag) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)), from, to)
    }

    pub fn identity(dim: usize, from: FrameTag, to: FrameTag) -> Self {
        let id = DMatrix::<Complex64>::identity(dim, dim);
        FrameChange {
            matrix: id.clone(),
            inverse: id,
            from,
            to,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn from_tag(&self) -> &FrameTag {
        &self.from
    }

    pub fn to_tag(&self) -> &FrameTag {
        &self.to
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &DMatrix<Complex64> {
        &self.inverse
    }

    /// The inverse change, mapping the new frame back to the old one.
    pub fn inverted(&self) -> FrameChange {
        FrameChange {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            from: self.to.clone(),
            to: self.from.clone(),
        }
    }

    /// Old-frame coefficients of a vector given in the new frame.
    pub fn vector_to_old(&self, v_new: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_matrix(&self.matrix, v_new)
    }

    /// New-frame coefficients of a vector given in the old frame.
    pub fn vector_to_new(&self, v_old: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_matrix(&self.inverse, v_old)
    }

    fn apply_matrix(&self, m: &DMatrix<Complex64>, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![Complex64::ZERO; self.dim()];
        for (r, out_r) in out.iter_mut().enumerate() {
            for (c, v_c) in v.iter().enumerate() {
                *out_r += m[(r, c)] * v_c;
            }
        }
        Ok(out)
    }

    /// Rewrites a form over the old coframe in terms of the new coframe.
    pub fn transform_form(&self, form: &InvariantForm) -> Result<InvariantForm> {
        if form.frame_tag != self.from {
            return Err(frame_mismatch(&form.frame_tag, &self.from));
        }
        if form.dim != self.dim() {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim(),
                got: form.dim,
            });
        }
        let mut out = InvariantForm::zero(form.dim, form.degree, self.to.clone());
        // Substitute e_old^l = sum_k P_{lk} e_new^k in each monomial and
        // expand multilinearly.
        let mut choice = vec![0usize; form.degree];
        for (idx, coeff) in form.coeffs.iter() {
            if form.degree == 0 {
                out.add_term(&[], *coeff)?;
                continue;
            }
            choice.iter_mut().for_each(|c| *c = 0);
            'expand: loop {
                let mut factor = *coeff;
                for (slot, &k) in choice.iter().enumerate() {
                    factor *= self.matrix[(idx[slot], k)];
                }
                if factor.norm() >= tolerances::PRUNE_EPS {
                    out.add_term(&choice, factor)?;
                }
                // Odometer increment over the new-frame indices.
                let mut slot = 0;
                loop {
                    choice[slot] += 1;
                    if choice[slot] < self.dim() {
                        break;
                    }
                    choice[slot] = 0;
                    slot += 1;
                    if slot == form.degree {
                        break 'expand;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rewrites a vector-valued form: form parts covariantly, the value
    /// vector contravariantly.
    pub fn transform_vector_valued(&self, form: &VectorValuedForm) -> Result<VectorValuedForm> {
        let dim = self.dim();
        if form.components.len() != dim {
            return Err(AkgeoError::DimensionMismatch {
                expected: dim,
                got: form.components.len(),
            });
        }
        let transformed: Vec<InvariantForm> = form
            .components
            .iter()
            .map(|c| self.transform_form(c))
            .collect::<Result<Vec<_>>>()?;
        let degree = form.degree();
        let mut out = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut comp = InvariantForm::zero(dim, degree, self.to.clone());
            for (c, old) in transformed.iter().enumerate() {
                let w = self.inverse[(k, c)];
                if w.norm() >= tolerances::PRUNE_EPS {
                    comp = comp.add(&old.scaled(w))?;
                }
            }
            out.push(comp);
        }
        VectorValuedForm::new(out)
    }

    /// Structure constants of the same bracket expressed in the new frame.
    pub fn transform_algebra(
        &self,
        alg: &InvariantAlgebra,
        new_labels: Vec<String>,
    ) -> Result<InvariantAlgebra> {
        if alg.frame_tag != self.from {
            return Err(frame_mismatch(&alg.frame_tag, &self.from));
        }
        if alg.dim != self.dim() {
            return Err(AkgeoError::DimensionMismatch {
                expected: self.dim(),
                got: alg.dim,
            });
        }
        let dim = alg.dim;
        let mut triples = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                // [X'_i, X'_j] in old coordinates, then back to new ones.
                let xi: Vec<Complex64> = (0..dim).map(|r| self.matrix[(r, i)]).collect();
                let xj: Vec<Complex64> = (0..dim).map(|r| self.matrix[(r, j)]).collect();
                let w_old = alg.bracket(&xi, &xj)?;
                let w_new = self.vector_to_new(&w_old)?;
                for (k, c) in w_new.into_iter().enumerate() {
                    if c.norm() >= tolerances::PRUNE_EPS {
                        triples.push((i, j, k, c));
                    }
                }
            }
        }
        InvariantAlgebra::new_complex(dim, new_labels, self.to.clone(), &triples)
    }
}

/// Maps between registered frames; mixed-frame operations that have no
/// registered change fail loudly instead of reinterpreting coefficients.
#[derive(Default, Debug)]
pub struct FrameRegistry {
    changes: BTreeMap<(FrameTag, FrameTag), FrameChange>,
}

impl FrameRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a change and its inverse.
    pub fn register(&mut self, fc: FrameChange) {
        self.changes
            .insert((fc.from.clone(), fc.to.clone()), fc.inverted().inverted());
        self.changes
            .insert((fc.to.clone(), fc.from.clone()), fc.inverted());
    }

    pub fn get(&self, from: &FrameTag, to: &FrameTag) -> Option<&FrameChange> {
        self.changes.get(&(from.clone(), to.clone()))
    }

    /// Converts a form into `to`, erroring when no change is registered.
    pub fn convert_form(&self, form: &InvariantForm, to: &FrameTag) -> Result<InvariantForm> {
        if form.frame_tag() == to {
            return Ok(form.clone());
        }
        match self.get(form.frame_tag(), to) {
            Some(fc) => fc.transform_form(form),
            None => Err(frame_mismatch(form.frame_tag(), to)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn tag(s: &str) -> FrameTag {
        FrameTag::new(s)
    }

    fn labels(prefix: &str, dim: usize) -> Vec<String> {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect()
    }

    /// Heisenberg-times-circle algebra in its orthonormal frame:
    /// [E_2, E_3] = a E_4.
    fn kodaira_algebra(a: f64) -> InvariantAlgebra {
        InvariantAlgebra::new(4, labels("E", 4), tag("E"), &[(1, 2, 3, a)]).unwrap()
    }

    /// Completely solvable 6-dimensional algebra with
    /// dE^3 = E^{13}, dE^4 = -E^{14}, dE^5 = E^{15}, dE^6 = -E^{16},
    /// equivalently [E_1,E_3] = -E_3, [E_1,E_4] = E_4, [E_1,E_5] = -E_5,
    /// [E_1,E_6] = E_6.
    fn solvable_algebra() -> InvariantAlgebra {
        InvariantAlgebra::new(
            6,
            labels("E", 6),
            tag("E"),
            &[
                (0, 2, 2, -1.0),
                (0, 3, 3, 1.0),
                (0, 4, 4, -1.0),
                (0, 5, 5, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn multi_index_canonicalization_tracks_signs() {
        let (idx, sign) = canonicalize_index(vec![2, 0]).unwrap();
        assert_eq!(idx, vec![0, 2]);
        assert_eq!(sign, -1.0);
        // [3, 1, 0] has three inversions, an odd permutation of [0, 1, 3].
        let (idx, sign) = canonicalize_index(vec![3, 1, 0]).unwrap();
        assert_eq!(idx, vec![0, 1, 3]);
        assert_eq!(sign, -1.0);
        assert!(canonicalize_index(vec![1, 1]).is_none());
    }

    #[test]
    fn wedge_of_basis_one_forms() {
        let e1 = InvariantForm::one_form(4, 0, tag("E")).unwrap();
        let e2 = InvariantForm::one_form(4, 1, tag("E")).unwrap();
        let w12 = e1.wedge(&e2).unwrap();
        assert_eq!(w12.coeff(&[0, 1]), ONE);
        let w21 = e2.wedge(&e1).unwrap();
        assert_eq!(w21.coeff(&[0, 1]), -ONE);
    }

    #[test]
    fn wedge_expands_bilinearly() {
        // (E^1 + iE^2) ∧ (E^3 + iE^4) = E^{13} + iE^{14} + iE^{23} - E^{24}.
        let mut a = InvariantForm::zero(4, 1, tag("E"));
        a.add_term(&[0], ONE).unwrap();
        a.add_term(&[1], I).unwrap();
        let mut b = InvariantForm::zero(4, 1, tag("E"));
        b.add_term(&[2], ONE).unwrap();
        b.add_term(&[3], I).unwrap();
        let w = a.wedge(&b).unwrap();
        assert_eq!(w.coeff(&[0, 2]), ONE);
        assert_eq!(w.coeff(&[0, 3]), I);
        assert_eq!(w.coeff(&[1, 2]), I);
        assert_eq!(w.coeff(&[1, 3]), -ONE);
    }

    #[test]
    fn wedge_is_graded_commutative_on_samples() {
        let alg_tag = tag("E");
        let mut a = InvariantForm::zero(6, 1, alg_tag.clone());
        a.add_term(&[0], Complex64::new(0.5, -1.0)).unwrap();
        a.add_term(&[4], Complex64::new(2.0, 0.25)).unwrap();
        let mut b = InvariantForm::zero(6, 2, alg_tag.clone());
        b.add_term(&[1, 3], Complex64::new(-1.0, 2.0)).unwrap();
        b.add_term(&[2, 5], ONE).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        // deg 1 * deg 2 odd product: ab = (-1)^{1*2} ba = ba.
        assert!(ab.max_abs_diff(&ba) < 1e-15);
    }

    #[test]
    fn bracket_reproduces_the_single_heisenberg_relation() {
        let alg = kodaira_algebra(2.0);
        let b = alg.bracket_basis(1, 2);
        assert_eq!(b[3], Complex64::new(2.0, 0.0));
        assert!(b.iter().take(3).all(|c| c.norm() == 0.0));
        // Antisymmetry.
        let b_rev = alg.bracket_basis(2, 1);
        assert_eq!(b_rev[3], Complex64::new(-2.0, 0.0));
        // [X, X] = 0 for a generic vector.
        let x: Vec<Complex64> = (0..4)
            .map(|k| Complex64::new(k as f64 + 0.5, 1.0))
            .collect();
        let xx = alg.bracket(&x, &x).unwrap();
        assert!(xx.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn solvable_brackets_match_their_structure_equations() {
        let alg = solvable_algebra();
        // [E_1, E_4] = +E_4 is forced by dE^4 = -E^{14} under the convention
        // de^k(E_i, E_j) = -e^k([E_i, E_j]).
        let b = alg.bracket_basis(0, 3);
        assert_eq!(b[3], ONE);
        let d_e4 = alg.d_one_form(3).unwrap();
        assert_eq!(d_e4.coeff(&[0, 3]), -ONE);
        let d_e3 = alg.d_one_form(2).unwrap();
        assert_eq!(d_e3.coeff(&[0, 2]), ONE);
    }

    #[test]
    fn exterior_derivative_on_the_heisenberg_coframe() {
        let a = 2.0;
        let alg = kodaira_algebra(a);
        // dE^4 = -a E^2 ∧ E^3.
        let d_e4 = alg
            .exterior_derivative(&InvariantForm::one_form(4, 3, tag("E")).unwrap())
            .unwrap();
        assert_eq!(d_e4.coeff(&[1, 2]), Complex64::new(-a, 0.0));
        assert_eq!(d_e4.terms().count(), 1);
        for k in 0..3 {
            let d = alg
                .exterior_derivative(&InvariantForm::one_form(4, k, tag("E")).unwrap())
                .unwrap();
            assert!(d.is_zero());
        }
    }

    #[test]
    fn d_squared_vanishes_on_all_basis_forms() {
        for alg in [kodaira_algebra(3.0), solvable_algebra()] {
            let dim = alg.dim();
            for k in 0..dim {
                let e = InvariantForm::one_form(dim, k, alg.frame_tag().clone()).unwrap();
                let dd = alg
                    .exterior_derivative(&alg.exterior_derivative(&e).unwrap())
                    .unwrap();
                assert!(dd.max_abs() < 1e-14, "d^2 e^{k} != 0");
            }
            // Also on a few 2-form monomials.
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let e = InvariantForm::basis(dim, &[i, j], alg.frame_tag().clone()).unwrap();
                    let dd = alg
                        .exterior_derivative(&alg.exterior_derivative(&e).unwrap())
                        .unwrap();
                    assert!(dd.max_abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn jacobi_validation_accepts_closed_constants_and_rejects_broken_ones() {
        assert!(validate_algebra(&kodaira_algebra(2.0)).pass);
        assert!(validate_algebra(&solvable_algebra()).pass);
        // so(3)-like constants.
        let so3 = InvariantAlgebra::new(
            4,
            labels("E", 4),
            tag("E"),
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)],
        )
        .unwrap();
        assert!(validate_algebra(&so3).pass);
        // [E_1,E_2] = E_3 together with [E_3,E_4] = E_4 violates Jacobi on
        // the triple (1, 2, 4).
        let broken = InvariantAlgebra::new(
            4,
            labels("E", 4),
            tag("E"),
            &[(0, 1, 2, 1.0), (2, 3, 3, 1.0)],
        )
        .unwrap();
        let diag = validate_algebra(&broken);
        assert!(!diag.pass);
        assert!(diag.max_jacobi_residual > 0.5);
    }

    #[test]
    fn frame_change_rescales_structure_constants() {
        // Coordinate frame algebra [e_2, e_3] = e_4; the orthonormal frame
        // E_3 = sqrt(a) e_3, E_4 = e_4 / sqrt(a) turns it into
        // [E_2, E_3] = a E_4.
        let a = 4.0_f64;
        let alg_e = InvariantAlgebra::new(4, labels("e", 4), tag("e"), &[(1, 2, 3, 1.0)]).unwrap();
        let mut p = DMatrix::<f64>::identity(4, 4);
        p[(2, 2)] = a.sqrt();
        p[(3, 3)] = 1.0 / a.sqrt();
        let fc = FrameChange::from_real(p, tag("e"), tag("E")).unwrap();
        let alg_cap = fc.transform_algebra(&alg_e, labels("E", 4)).unwrap();
        let b = alg_cap.bracket_basis(1, 2);
        assert!((b[3] - Complex64::new(a, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn frame_change_round_trips_forms() {
        let mut m = DMatrix::<Complex64>::identity(4, 4);
        m[(0, 1)] = Complex64::new(0.3, -0.2);
        m[(2, 3)] = Complex64::new(-1.5, 0.0);
        m[(3, 0)] = Complex64::new(0.0, 0.7);
        let fc = FrameChange::new(m, tag("old"), tag("new")).unwrap();
        let mut form = InvariantForm::zero(4, 2, tag("old"));
        form.add_term(&[0, 2], Complex64::new(1.0, -2.0)).unwrap();
        form.add_term(&[1, 3], Complex64::new(0.25, 0.0)).unwrap();
        let round = fc
            .inverted()
            .transform_form(&fc.transform_form(&form).unwrap())
            .unwrap();
        assert!(round.max_abs_diff(&form) < 1e-12);
    }

    #[test]
    fn exterior_derivative_commutes_with_frame_changes() {
        let alg = kodaira_algebra(2.5);
        let mut m = DMatrix::<f64>::identity(4, 4);
        m[(1, 1)] = 2.0;
        m[(2, 1)] = -0.5;
        m[(0, 3)] = 0.25;
        let fc = FrameChange::from_real(m, tag("E"), tag("F")).unwrap();
        let alg_f = fc.transform_algebra(&alg, labels("F", 4)).unwrap();
        let mut form = InvariantForm::zero(4, 1, tag("E"));
        form.add_term(&[2], Complex64::new(1.0, 0.5)).unwrap();
        form.add_term(&[3], Complex64::new(-2.0, 0.0)).unwrap();
        let d_then_transform = fc
            .transform_form(&alg.exterior_derivative(&form).unwrap())
            .unwrap();
        let transform_then_d = alg_f
            .exterior_derivative(&fc.transform_form(&form).unwrap())
            .unwrap();
        assert!(d_then_transform.max_abs_diff(&transform_then_d) < 1e-10);
    }

    #[test]
    fn mixed_frames_are_rejected() {
        let e1 = InvariantForm::one_form(4, 0, tag("E")).unwrap();
        let f1 = InvariantForm::one_form(4, 0, tag("F")).unwrap();
        assert!(matches!(
            e1.wedge(&f1),
            Err(AkgeoError::FrameMismatch { .. })
        ));
        let registry = FrameRegistry::new();
        assert!(registry.convert_form(&e1, &tag("F")).is_err());
    }

    #[test]
    fn registry_round_trips_through_registered_changes() {
        let mut m = DMatrix::<f64>::identity(4, 4);
        m[(2, 2)] = 3.0;
        let fc = FrameChange::from_real(m, tag("E"), tag("F")).unwrap();
        let mut registry = FrameRegistry::new();
        registry.register(fc);
        let e = InvariantForm::basis(4, &[1, 2], tag("E")).unwrap();
        let f = registry.convert_form(&e, &tag("F")).unwrap();
        assert!((f.coeff(&[1, 2]) - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        let back = registry.convert_form(&f, &tag("E")).unwrap();
        assert!(back.max_abs_diff(&e) < 1e-12);
    }
}
