//! Model families: the Kodaira-Thurston surfaces X_a and an almost-Kahler
//! deformation family on the completely solvable Nakamura manifold, with
//! closed-form expected-value tables evaluated at the family parameters.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::hermitian_geometry::{
    adapted_tag, standard_block_matrix, unitary_tag, AlmostComplexStructure, MetricData,
};
use crate::invariant_algebra::{FrameChange, FrameTag, InvariantAlgebra, InvariantForm};
use crate::tolerances;
use crate::{AkgeoError, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default circle length of the mapping-torus direction: the logarithm of
/// the larger eigenvalue of the unimodular matrix [[2,1],[1,1]] generating
/// the torus automorphism.
pub fn zeta_default() -> f64 {
    ((3.0 + 5.0_f64.sqrt()) / 2.0).ln()
}

/// Kodaira dimension of the manifolds in this crate: only the two extreme
/// values occur.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KodairaDimension {
    Zero,
    MinusInfinity,
}

impl KodairaDimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            KodairaDimension::Zero => "0",
            KodairaDimension::MinusInfinity => "-infinity",
        }
    }
}

impl fmt::Display for KodairaDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter of the Kodaira-Thurston family.
#[derive(Clone, Copy, Debug)]
pub struct KodairaThurstonParams {
    pub a: f64,
}

impl KodairaThurstonParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(AkgeoError::Domain(format!(
                "Kodaira-Thurston parameter must be positive, got {a}"
            )));
        }
        Ok(KodairaThurstonParams { a })
    }
}

/// The six coefficient functions of the Nakamura deformation.
#[derive(Clone, Copy, Debug)]
pub struct DeformationCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Evaluates the coefficient functions and asserts the defining identities
/// `-alpha^2 - beta*gamma = 1` and `-delta^2 - lambda*mu = 1`.
pub fn deformation_coefficients(t: [f64; 4]) -> Result<DeformationCoefficients> {
    check_domain(t)?;
    let den1 = t[0] * t[0] + t[1] * t[1] - 1.0;
    let den2 = t[2] * t[2] + t[3] * t[3] - 1.0;
    let alpha = 2.0 * t[1] / den1;
    let beta = ((1.0 - t[0]).powi(2) + t[1] * t[1]) / den1;
    let gamma = -((1.0 + t[0]).powi(2) + t[1] * t[1]) / den1;
    let delta = 2.0 * t[3] / den2;
    let lambda = ((1.0 - t[2]).powi(2) + t[3] * t[3]) / den2;
    let mu = -((1.0 + t[2]).powi(2) + t[3] * t[3]) / den2;
    let id1 = (-alpha * alpha - beta * gamma - 1.0).abs();
    let id2 = (-delta * delta - lambda * mu - 1.0).abs();
    if id1 > tolerances::FRAME || id2 > tolerances::FRAME {
        return Err(AkgeoError::Domain(format!(
            "coefficient identities violated (residuals {id1:.3e}, {id2:.3e})"
        )));
    }
    if beta >= 0.0 {
        return Err(AkgeoError::Domain(format!(
            "beta must be negative on the domain, got {beta}"
        )));
    }
    Ok(DeformationCoefficients {
        alpha,
        beta,
        gamma,
        delta,
        lambda,
        mu,
    })
}

fn check_domain(t: [f64; 4]) -> Result<()> {
    let p1 = t[0] * t[0] + t[1] * t[1];
    let p2 = t[2] * t[2] + t[3] * t[3];
    let limit = 1.0 - tolerances::DOMAIN_MARGIN;
    if !t.iter().all(|x| x.is_finite()) || p1 >= limit || p2 >= limit {
        return Err(AkgeoError::Domain(format!(
            "deformation parameter outside the domain: t1^2+t2^2 = {p1}, t3^2+t4^2 = {p2} \
             (each must stay below 1)"
        )));
    }
    Ok(())
}

/// A point of the Nakamura deformation family with its derived coefficients.
#[derive(Clone, Copy, Debug)]
pub struct NakamuraDeformation {
    t: [f64; 4],
    zeta: f64,
    coeffs: DeformationCoefficients,
}

impl NakamuraDeformation {
    pub fn new(t: [f64; 4]) -> Result<Self> {
        Self::with_zeta(t, zeta_default())
    }

    pub fn with_zeta(t: [f64; 4], zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(AkgeoError::Domain(format!(
                "zeta must be positive, got {zeta}"
            )));
        }
        let coeffs = deformation_coefficients(t)?;
        Ok(NakamuraDeformation { t, zeta, coeffs })
    }

    pub fn t(&self) -> [f64; 4] {
        self.t
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn coefficients(&self) -> &DeformationCoefficients {
        &self.coeffs
    }
}

/// Family membership of a spec, carrying the originating parameters.
#[derive(Clone, Debug)]
pub enum FamilyParams {
    KodairaThurston(KodairaThurstonParams),
    Nakamura(NakamuraDeformation),
    Generic,
}

/// One fully specified invariant almost-Hermitian manifold.
#[derive(Clone, Debug)]
pub struct AlmostHermitianSpec {
    pub name: String,
    pub algebra: InvariantAlgebra,
    pub j: AlmostComplexStructure,
    pub metric: MetricData,
    /// Preferred orthonormal J-adapted frame, when one is singled out.
    pub orthonormal_frame: Option<FrameChange>,
    pub family: FamilyParams,
}

impl AlmostHermitianSpec {
    pub fn deformation(&self) -> Option<&NakamuraDeformation> {
        match &self.family {
            FamilyParams::Nakamura(def) => Some(def),
            _ => None,
        }
    }

    pub fn kodaira_thurston_params(&self) -> Option<&KodairaThurstonParams> {
        match &self.family {
            FamilyParams::KodairaThurston(p) => Some(p),
            _ => None,
        }
    }
}

fn frame_labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("E{i}")).collect()
}

fn standard_symplectic(dim: usize) -> DMatrix<f64> {
    let mut w = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..dim / 2 {
        w[(2 * p, 2 * p + 1)] = 1.0;
        w[(2 * p + 1, 2 * p)] = -1.0;
    }
    w
}

/// The Kodaira-Thurston surface X_a: nilpotent algebra `[E_2, E_3] = a E_4`,
/// block-standard J, identity metric.
pub fn kodaira_thurston(a: f64) -> Result<AlmostHermitianSpec> {
    let params = KodairaThurstonParams::new(a)?;
    let tag = FrameTag::new("E");
    let algebra = InvariantAlgebra::new(4, frame_labels(4), tag.clone(), &[(1, 2, 3, a)])?;
    let j = AlmostComplexStructure::standard(4, tag.clone())?;
    let metric = MetricData::new(DMatrix::identity(4, 4), &j, tag)?;
    let d_omega = algebra.exterior_derivative(metric.omega())?.max_abs();
    if d_omega > tolerances::FRAME {
        return Err(AkgeoError::Algebra(format!(
            "fundamental form is not closed (residual {d_omega:.3e})"
        )));
    }
    Ok(AlmostHermitianSpec {
        name: format!("kodaira-thurston a={a}"),
        algebra,
        j,
        metric,
        orthonormal_frame: None,
        family: FamilyParams::KodairaThurston(params),
    })
}

/// Closed-form matrix of J_t over the invariant frame (columns act on frame
/// vectors).
pub fn j_t_matrix(c: &DeformationCoefficients) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(6, 6);
    m[(0, 0)] = c.alpha;
    m[(0, 1)] = c.beta;
    m[(1, 0)] = c.gamma;
    m[(1, 1)] = -c.alpha;
    m[(2, 3)] = -1.0;
    m[(3, 2)] = 1.0;
    m[(4, 4)] = c.delta;
    m[(4, 5)] = c.lambda;
    m[(5, 4)] = c.mu;
    m[(5, 5)] = -c.delta;
    m
}

fn l_t_matrix(t: [f64; 4]) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(6, 6);
    m[(0, 0)] = -t[0];
    m[(1, 0)] = -t[1];
    m[(0, 1)] = -t[1];
    m[(1, 1)] = t[0];
    m[(2, 2)] = 1.0;
    m[(3, 3)] = 1.0;
    m[(4, 4)] = -t[2];
    m[(5, 4)] = -t[3];
    m[(4, 5)] = -t[3];
    m[(5, 5)] = t[2];
    m
}

fn nakamura_structure() -> [(usize, usize, usize, f64); 4] {
    // [E_1, E_3] = -E_3, [E_1, E_4] = E_4, [E_1, E_5] = -E_5, [E_1, E_6] = E_6.
    [
        (0, 2, 2, -1.0),
        (0, 3, 3, 1.0),
        (0, 4, 4, -1.0),
        (0, 5, 5, 1.0),
    ]
}

/// Difference between the two constructions of J_t: conjugating the standard
/// structure by I + L_t versus the closed-form coefficient matrix.
pub fn dual_path_residual(t: [f64; 4]) -> Result<f64> {
    let c = deformation_coefficients(t)?;
    let i_plus_l = DMatrix::<f64>::identity(6, 6) + l_t_matrix(t);
    let inv = i_plus_l.clone().try_inverse().ok_or_else(|| {
        AkgeoError::SingularMatrix("I + L_t is singular at this parameter".to_string())
    })?;
    let conjugated = &i_plus_l * standard_block_matrix(6) * &inv;
    Ok((&conjugated - j_t_matrix(&c)).abs().max())
}

/// Nakamura deformation point Y_t with the default zeta.
pub fn nakamura(t: [f64; 4]) -> Result<AlmostHermitianSpec> {
    nakamura_with_zeta(t, zeta_default())
}

/// Nakamura deformation point with an explicit mapping-torus length. Builds
/// J_t two ways (conjugation by I + L_t, and the closed-form coefficient
/// matrix) and requires agreement.
pub fn nakamura_with_zeta(t: [f64; 4], zeta: f64) -> Result<AlmostHermitianSpec> {
    let def = NakamuraDeformation::with_zeta(t, zeta)?;
    let c = *def.coefficients();
    let tag = FrameTag::new("E");
    let algebra = InvariantAlgebra::new(6, frame_labels(6), tag.clone(), &nakamura_structure())?;

    let closed_form = j_t_matrix(&c);
    let dual_path = dual_path_residual(t)?;
    if dual_path > tolerances::FRAME {
        return Err(AkgeoError::OracleDisagreement(format!(
            "J_t conjugation and closed form differ by {dual_path:.3e}"
        )));
    }

    let j = AlmostComplexStructure::new(closed_form, tag.clone())?;
    let w = standard_symplectic(6);
    let omega_invariance = (j.matrix().transpose() * &w * j.matrix() - &w).abs().max();
    if omega_invariance > tolerances::FRAME {
        return Err(AkgeoError::IncompatibleTriple {
            residual: omega_invariance,
        });
    }
    let metric = MetricData::from_omega(w, &j, tag.clone())?;
    let d_omega = algebra.exterior_derivative(metric.omega())?.max_abs();
    if d_omega > tolerances::FRAME {
        return Err(AkgeoError::Algebra(format!(
            "fundamental form is not closed (residual {d_omega:.3e})"
        )));
    }

    // Orthonormal J-adapted frame: E'_1 = E_1/sqrt(gamma),
    // E'_2 = (alpha E_1 + gamma E_2)/sqrt(gamma), middle block untouched,
    // E'_5 = E_5/sqrt(mu), E'_6 = (delta E_5 + mu E_6)/sqrt(mu).
    let sg = c.gamma.sqrt();
    let sm = c.mu.sqrt();
    let mut p = DMatrix::<f64>::zeros(6, 6);
    p[(0, 0)] = 1.0 / sg;
    p[(0, 1)] = c.alpha / sg;
    p[(1, 1)] = sg;
    p[(2, 2)] = 1.0;
    p[(3, 3)] = 1.0;
    p[(4, 4)] = 1.0 / sm;
    p[(4, 5)] = c.delta / sm;
    p[(5, 5)] = sm;
    let gram = (p.transpose() * metric.g() * &p - DMatrix::<f64>::identity(6, 6))
        .abs()
        .max();
    if gram > tolerances::FRAME {
        return Err(AkgeoError::FrameNotAdapted(format!(
            "displayed orthonormal frame fails the Gram check (residual {gram:.3e})"
        )));
    }
    let orthonormal_frame = FrameChange::from_real(p, tag.clone(), adapted_tag(&tag))?;

    Ok(AlmostHermitianSpec {
        name: format!("nakamura t=[{},{},{},{}]", t[0], t[1], t[2], t[3]),
        algebra,
        j,
        metric,
        orthonormal_frame: Some(orthonormal_frame),
        family: FamilyParams::Nakamura(def),
    })
}

fn phi_t_tag(orig: &FrameTag) -> FrameTag {
    FrameTag::new(&format!("{orig}|phi"))
}

/// Frame change from the invariant frame to the complex coframe
/// `Phi^1 = (1 - i alpha) E^1 - i beta E^2`, `Phi^2 = E^3 + i E^4`,
/// `Phi^3 = (1 - i delta) E^5 - i lambda E^6` and conjugates. Index position
/// (first or second half) gives the form type in this coframe.
pub fn phi_t_frame(def: &NakamuraDeformation, from: &FrameTag) -> Result<FrameChange> {
    let c = def.coefficients();
    let mut m = DMatrix::<Complex64>::zeros(6, 6);
    m[(0, 0)] = ONE - I * c.alpha;
    m[(0, 1)] = -I * c.beta;
    m[(1, 2)] = ONE;
    m[(1, 3)] = I;
    m[(2, 4)] = ONE - I * c.delta;
    m[(2, 5)] = -I * c.lambda;
    for r in 0..3 {
        for col in 0..6 {
            m[(r + 3, col)] = m[(r, col)].conj();
        }
    }
    // Rows hold the new coframe over the old one; the frame matrix is the
    // inverse.
    let frame_matrix = m.try_inverse().ok_or_else(|| {
        AkgeoError::SingularMatrix("complex coframe matrix is singular".to_string())
    })?;
    FrameChange::new(frame_matrix, from.clone(), phi_t_tag(from))
}

/// Residual of `d Phi^2 = (1/2) Phi^1 ^ conj(Phi^2)` on the (1,1)-part in the
/// deformed coframe. The leftover (0,2)-part is the torsion contribution and
/// is not constrained here.
pub fn dbar_phi2_residual(spec: &AlmostHermitianSpec) -> Result<f64> {
    let def = spec
        .deformation()
        .ok_or_else(|| AkgeoError::Domain("dbar check needs a Nakamura spec".to_string()))?;
    let fc = phi_t_frame(def, spec.algebra.frame_tag())?;
    let mut phi2 = InvariantForm::zero(6, 1, spec.algebra.frame_tag().clone());
    phi2.add_term(&[2], ONE)?;
    phi2.add_term(&[3], I)?;
    let d_phi2 = fc.transform_form(&spec.algebra.exterior_derivative(&phi2)?)?;
    let mut worst = (d_phi2.coeff(&[0, 4]) - Complex64::new(0.5, 0.0)).norm();
    for (idx, coeff) in d_phi2.terms() {
        let unbarred = idx.iter().filter(|&&p| p < 3).count();
        if unbarred == 1 && idx != [0, 4] {
            worst = worst.max(coeff.norm());
        }
    }
    Ok(worst)
}

/// Arithmetic class of the angle parameter of an integrable Kodaira-surface
/// structure; numeric detection from a float is impossible, so the caller
/// supplies the classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleClass {
    RationalMultipleOfPi,
    IrrationalMultipleOfPi,
}

/// Kodaira dimension of the integrable structures on the Kodaira surface by
/// angle class.
pub fn kodaira_surface_dimension(a_class: AngleClass) -> KodairaDimension {
    match a_class {
        AngleClass::RationalMultipleOfPi => KodairaDimension::Zero,
        AngleClass::IrrationalMultipleOfPi => KodairaDimension::MinusInfinity,
    }
}

/// Closed-form expected values for a family point; absent fields are not
/// checked. Keys are 0-based frame indices.
#[derive(Clone, Debug, Default)]
pub struct ExpectedResults {
    /// Unitary connection 1-forms by matrix position.
    pub theta_entries: Option<BTreeMap<(usize, usize), InvariantForm>>,
    /// Unitary curvature 2-forms by matrix position.
    pub psi_entries: Option<BTreeMap<(usize, usize), InvariantForm>>,
    /// Nonzero coefficients of the (1,1)-curvature, keyed (i, j, k, l).
    pub psi11_coeffs: Option<BTreeMap<(usize, usize, usize, usize), Complex64>>,
    pub ricci_complex: Option<DMatrix<Complex64>>,
    pub scal_complex: Option<f64>,
    /// Complex torsion 2-forms over the unitary coframe.
    pub torsion_complex: Option<Vec<InvariantForm>>,
    /// Real torsion 2-forms over the adapted orthonormal coframe.
    pub torsion_real: Option<Vec<InvariantForm>>,
    /// Real connection 1-forms by matrix position.
    pub connection_real_entries: Option<BTreeMap<(usize, usize), InvariantForm>>,
    /// Real curvature 2-forms by matrix position.
    pub omega_real_entries: Option<BTreeMap<(usize, usize), InvariantForm>>,
    pub ricci_real: Option<DMatrix<f64>>,
    pub scal_real: Option<f64>,
}

impl ExpectedResults {
    /// Rejects tables holding non-finite numbers.
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(AkgeoError::Domain(format!(
                    "expected table `{what}` contains a non-finite value"
                )))
            }
        };
        let form_ok = |f: &InvariantForm| f.max_abs().is_finite();
        if let Some(m) = &self.theta_entries {
            check(m.values().all(form_ok), "theta")?;
        }
        if let Some(m) = &self.psi_entries {
            check(m.values().all(form_ok), "psi")?;
        }
        if let Some(m) = &self.psi11_coeffs {
            check(m.values().all(|c| c.norm().is_finite()), "psi11")?;
        }
        if let Some(m) = &self.ricci_complex {
            check(m.iter().all(|c| c.norm().is_finite()), "ricci_complex")?;
        }
        if let Some(x) = self.scal_complex {
            check(x.is_finite(), "scal_complex")?;
        }
        if let Some(v) = &self.torsion_complex {
            check(v.iter().all(form_ok), "torsion_complex")?;
        }
        if let Some(v) = &self.torsion_real {
            check(v.iter().all(form_ok), "torsion_real")?;
        }
        if let Some(m) = &self.connection_real_entries {
            check(m.values().all(form_ok), "connection_real")?;
        }
        if let Some(m) = &self.omega_real_entries {
            check(m.values().all(form_ok), "omega_real")?;
        }
        if let Some(m) = &self.ricci_real {
            check(m.iter().all(|x| x.is_finite()), "ricci_real")?;
        }
        if let Some(x) = self.scal_real {
            check(x.is_finite(), "scal_real")?;
        }
        Ok(())
    }
}

fn form_from_terms(
    dim: usize,
    degree: usize,
    tag: &FrameTag,
    terms: &[(&[usize], Complex64)],
) -> Result<InvariantForm> {
    let mut f = InvariantForm::zero(dim, degree, tag.clone());
    for (idx, c) in terms {
        f.add_term(idx, *c)?;
    }
    Ok(f)
}

/// Expected geometry of X_a: connection and curvature matrices in both the
/// unitary and the real orthonormal frame, Ricci and scalar curvatures,
/// torsion forms.
pub fn expected_kodaira(a: f64) -> Result<ExpectedResults> {
    KodairaThurstonParams::new(a)?;
    let e_tag = FrameTag::new("E");
    let u = unitary_tag(&e_tag);
    let on = adapted_tag(&e_tag);
    let cc = Complex64::new(2.0_f64.sqrt() * a / 4.0, 0.0);
    let k = Complex64::new(a * a / 8.0, 0.0);

    let mut theta = BTreeMap::new();
    theta.insert((0, 0), InvariantForm::zero(4, 1, u.clone()));
    theta.insert((0, 1), form_from_terms(4, 1, &u, &[(&[1], cc)])?);
    theta.insert((1, 0), form_from_terms(4, 1, &u, &[(&[3], -cc)])?);
    theta.insert(
        (1, 1),
        form_from_terms(4, 1, &u, &[(&[0], cc), (&[2], -cc)])?,
    );

    let mut psi = BTreeMap::new();
    psi.insert((0, 0), form_from_terms(4, 2, &u, &[(&[1, 3], -k)])?);
    psi.insert(
        (0, 1),
        form_from_terms(
            4,
            2,
            &u,
            &[
                (&[0, 1], -2.0 * k),
                (&[0, 3], -k),
                (&[1, 2], -2.0 * k),
                (&[2, 3], k),
            ],
        )?,
    );
    psi.insert(
        (1, 0),
        form_from_terms(
            4,
            2,
            &u,
            &[
                (&[0, 1], -k),
                (&[0, 3], -2.0 * k),
                (&[1, 2], -k),
                (&[2, 3], 2.0 * k),
            ],
        )?,
    );
    psi.insert((1, 1), form_from_terms(4, 2, &u, &[(&[1, 3], k)])?);

    let mut psi11 = BTreeMap::new();
    psi11.insert((0, 0, 1, 1), -k);
    psi11.insert((0, 1, 0, 1), -k);
    psi11.insert((0, 1, 1, 0), -2.0 * k);
    psi11.insert((1, 0, 0, 1), -2.0 * k);
    psi11.insert((1, 0, 1, 0), -k);
    psi11.insert((1, 1, 1, 1), k);

    let q = Complex64::new(a / 4.0, 0.0);
    let torsion_real = vec![
        InvariantForm::zero(4, 2, on.clone()),
        InvariantForm::zero(4, 2, on.clone()),
        form_from_terms(4, 2, &on, &[(&[0, 2], q), (&[1, 3], -q)])?,
        form_from_terms(4, 2, &on, &[(&[1, 2], -q), (&[0, 3], -q)])?,
    ];
    let torsion_complex = vec![
        InvariantForm::zero(4, 2, u.clone()),
        form_from_terms(4, 2, &u, &[(&[2, 3], cc)])?,
    ];

    // Real connection matrix: upper triangle, completed by antisymmetry.
    let conn_upper: [(usize, usize, Vec<(&[usize], Complex64)>); 6] = [
        (0, 1, vec![]),
        (0, 2, vec![(&[2], q)]),
        (0, 3, vec![(&[3], -q)]),
        (1, 2, vec![(&[3], q)]),
        (1, 3, vec![(&[2], q)]),
        (2, 3, vec![(&[1], -2.0 * q)]),
    ];
    let mut connection_real = BTreeMap::new();
    for d in 0..4 {
        connection_real.insert((d, d), InvariantForm::zero(4, 1, on.clone()));
    }
    for (i, j, terms) in conn_upper {
        let f = form_from_terms(4, 1, &on, &terms)?;
        connection_real.insert((j, i), f.scaled(-ONE));
        connection_real.insert((i, j), f);
    }

    // Real curvature matrix: upper triangle, completed by antisymmetry.
    let upper: [(usize, usize, Vec<(&[usize], Complex64)>); 6] = [
        (0, 1, vec![(&[2, 3], -k)]),
        (0, 2, vec![(&[1, 3], k)]),
        (0, 3, vec![(&[1, 2], 3.0 * k)]),
        (1, 2, vec![(&[1, 2], -3.0 * k)]),
        (1, 3, vec![(&[1, 3], k)]),
        (2, 3, vec![(&[2, 3], k)]),
    ];
    let mut omega_real = BTreeMap::new();
    for d in 0..4 {
        omega_real.insert((d, d), InvariantForm::zero(4, 2, on.clone()));
    }
    for (i, j, terms) in upper {
        let f = form_from_terms(4, 2, &on, &terms)?;
        omega_real.insert((j, i), f.scaled(-ONE));
        omega_real.insert((i, j), f);
    }

    let results = ExpectedResults {
        theta_entries: Some(theta),
        psi_entries: Some(psi),
        psi11_coeffs: Some(psi11),
        ricci_complex: Some(DMatrix::zeros(2, 2)),
        scal_complex: Some(0.0),
        torsion_complex: Some(torsion_complex),
        torsion_real: Some(torsion_real),
        connection_real_entries: Some(connection_real),
        omega_real_entries: Some(omega_real),
        ricci_real: Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.0,
            0.0,
            -3.0 * a * a / 8.0,
            a * a / 4.0,
        ]))),
        scal_real: Some(-a * a / 8.0),
    };
    results.validate()?;
    Ok(results)
}

/// Expected geometry of Y_t: unitary connection matrix, the displayed
/// curvature entries, torsion forms in both frames, and vanishing complex
/// Ricci curvature.
pub fn expected_nakamura(t: [f64; 4]) -> Result<ExpectedResults> {
    let def = NakamuraDeformation::new(t)?;
    let c = def.coefficients();
    let e_tag = FrameTag::new("E");
    let u = unitary_tag(&e_tag);
    let on = adapted_tag(&e_tag);
    let (alpha, delta) = (c.alpha, c.delta);
    let sg = c.gamma.sqrt();
    // Recurring scales: connection k1 = sqrt2/(2 sqrt(gamma)), curvature
    // p = (1 + alpha^2)/(2 gamma).
    let k1 = 2.0_f64.sqrt() / (2.0 * sg);
    let p = Complex64::new((1.0 + alpha * alpha) / (2.0 * c.gamma), 0.0);
    let ia = ONE + I * alpha;

    let zero1 = InvariantForm::zero(6, 1, u.clone());
    let mut theta = BTreeMap::new();
    theta.insert((0, 0), zero1.clone());
    theta.insert((0, 1), form_from_terms(6, 1, &u, &[(&[1], -k1 * ia)])?);
    theta.insert(
        (0, 2),
        form_from_terms(6, 1, &u, &[(&[2], -k1 * ia * (ONE - I * delta))])?,
    );
    theta.insert(
        (1, 0),
        form_from_terms(6, 1, &u, &[(&[4], k1 * ia.conj())])?,
    );
    theta.insert((1, 1), zero1.clone());
    theta.insert((1, 2), zero1.clone());
    theta.insert(
        (2, 0),
        form_from_terms(6, 1, &u, &[(&[5], k1 * ia.conj() * (ONE + I * delta))])?,
    );
    theta.insert((2, 1), zero1.clone());
    theta.insert(
        (2, 2),
        form_from_terms(
            6,
            1,
            &u,
            &[
                (&[0], Complex64::new(k1 * delta, 0.0) * (alpha + I)),
                (&[3], -Complex64::new(k1 * delta, 0.0) * (alpha - I)),
            ],
        )?,
    );

    let dd = 1.0 + delta * delta;
    let mut psi = BTreeMap::new();
    psi.insert(
        (0, 0),
        form_from_terms(6, 2, &u, &[(&[1, 4], -p), (&[2, 5], -p * dd)])?,
    );
    psi.insert(
        (0, 1),
        form_from_terms(
            6,
            2,
            &u,
            &[(&[0, 4], -p), (&[3, 4], -ia * ia / (2.0 * c.gamma))],
        )?,
    );
    psi.insert(
        (1, 0),
        form_from_terms(
            6,
            2,
            &u,
            &[
                (&[1, 3], -p),
                (&[0, 1], ia.conj() * ia.conj() / (2.0 * c.gamma)),
            ],
        )?,
    );
    psi.insert((1, 1), form_from_terms(6, 2, &u, &[(&[1, 4], p)])?);
    psi.insert(
        (1, 2),
        form_from_terms(6, 2, &u, &[(&[2, 4], p * (ONE - I * delta))])?,
    );
    psi.insert(
        (2, 1),
        form_from_terms(6, 2, &u, &[(&[1, 5], p * (ONE + I * delta))])?,
    );
    psi.insert((2, 2), form_from_terms(6, 2, &u, &[(&[2, 5], p * dd)])?);

    let torsion_complex = vec![
        InvariantForm::zero(6, 2, u.clone()),
        form_from_terms(6, 2, &u, &[(&[3, 4], k1 * ia)])?,
        form_from_terms(6, 2, &u, &[(&[3, 5], k1 * ia * (ONE + I * delta))])?,
    ];

    let h = Complex64::new(1.0 / (2.0 * sg), 0.0);
    let am = Complex64::new(alpha, 0.0) * h;
    let one_ad = Complex64::new(1.0 - alpha * delta, 0.0) * h;
    let a_plus_d = Complex64::new(alpha + delta, 0.0) * h;
    let torsion_real = vec![
        InvariantForm::zero(6, 2, on.clone()),
        InvariantForm::zero(6, 2, on.clone()),
        form_from_terms(
            6,
            2,
            &on,
            &[(&[0, 2], h), (&[0, 3], am), (&[1, 2], am), (&[1, 3], -h)],
        )?,
        form_from_terms(
            6,
            2,
            &on,
            &[(&[0, 2], am), (&[0, 3], -h), (&[1, 2], -h), (&[1, 3], -am)],
        )?,
        form_from_terms(
            6,
            2,
            &on,
            &[
                (&[0, 4], one_ad),
                (&[0, 5], a_plus_d),
                (&[1, 4], a_plus_d),
                (&[1, 5], -one_ad),
            ],
        )?,
        form_from_terms(
            6,
            2,
            &on,
            &[
                (&[0, 4], a_plus_d),
                (&[0, 5], -one_ad),
                (&[1, 4], -one_ad),
                (&[1, 5], -a_plus_d),
            ],
        )?,
    ];

    let results = ExpectedResults {
        theta_entries: Some(theta),
        psi_entries: Some(psi),
        psi11_coeffs: None,
        ricci_complex: Some(DMatrix::zeros(3, 3)),
        scal_complex: Some(0.0),
        torsion_complex: Some(torsion_complex),
        torsion_real: Some(torsion_real),
        connection_real_entries: None,
        omega_real_entries: None,
        ricci_real: None,
        scal_real: None,
    };
    results.validate()?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian_geometry::{nijenhuis, unitary_frame};

    #[test]
    fn zeta_default_matches_the_eigenvalue_logarithm() {
        assert!((zeta_default() - 0.962_423_650_119_206_9).abs() < 1e-15);
    }

    #[test]
    fn coefficients_at_the_origin() {
        let c = deformation_coefficients([0.0; 4]).unwrap();
        assert_eq!(
            (c.alpha, c.beta, c.gamma, c.delta, c.lambda, c.mu),
            (0.0, -1.0, 1.0, 0.0, -1.0, 1.0)
        );
    }

    #[test]
    fn coefficients_at_a_fourth_direction_point() {
        let c = deformation_coefficients([0.0, 0.0, 0.0, 0.1]).unwrap();
        assert!((c.delta + 20.0 / 99.0).abs() < 1e-15);
        assert!((c.lambda + 101.0 / 99.0).abs() < 1e-15);
        assert!((c.mu - 101.0 / 99.0).abs() < 1e-15);
        assert!((-c.delta * c.delta - c.lambda * c.mu - 1.0).abs() < 1e-14);
    }

    #[test]
    fn domain_boundary_is_rejected() {
        assert!(deformation_coefficients([1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(deformation_coefficients([0.8, 0.7, 0.0, 0.0]).is_err());
        assert!(deformation_coefficients([0.0, 0.0, 0.6, 0.9]).is_err());
        assert!(NakamuraDeformation::with_zeta([0.0; 4], -1.0).is_err());
    }

    #[test]
    fn kodaira_thurston_constructor() {
        assert!(kodaira_thurston(-1.0).is_err());
        assert!(kodaira_thurston(0.0).is_err());
        let spec = kodaira_thurston(4.0).unwrap();
        let de4 = spec.algebra.d_one_form(3).unwrap();
        assert!((de4.coeff(&[1, 2]) - Complex64::new(-4.0, 0.0)).norm() < 1e-15);
        let flags =
            crate::hermitian_geometry::classify(&spec.j, &spec.metric, &spec.algebra).unwrap();
        assert!(flags.almost_kahler && !flags.integrable);
    }

    #[test]
    fn nakamura_at_the_origin_has_the_standard_structure() {
        let spec = nakamura([0.0; 4]).unwrap();
        assert!((spec.j.matrix() - standard_block_matrix(6)).abs().max() < 1e-15);
        assert!(
            (spec.metric.g() - DMatrix::<f64>::identity(6, 6))
                .abs()
                .max()
                < 1e-15
        );
        // Base structure is almost Kahler but not integrable.
        let n = nijenhuis(&spec.j, &spec.algebra).unwrap();
        let v = n.evaluate_pair(0, 2);
        assert!((v[2] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        let flags =
            crate::hermitian_geometry::classify(&spec.j, &spec.metric, &spec.algebra).unwrap();
        assert!(flags.almost_kahler && !flags.integrable && flags.quasi_kahler);
    }

    #[test]
    fn nakamura_dual_path_and_compatibility_on_sample_points() {
        for t in [
            [0.1, 0.2, 0.0, 0.0],
            [0.1, -0.2, 0.25, 0.15],
            [-0.3, 0.3, -0.3, 0.3],
            [0.0, 0.0, 0.0, 0.1],
        ] {
            let spec = nakamura(t).unwrap();
            let c = spec.deformation().unwrap().coefficients();
            // Metric blocks in closed form.
            let g = spec.metric.g();
            assert!((g[(0, 0)] - c.gamma).abs() < 1e-13);
            assert!((g[(0, 1)] + c.alpha).abs() < 1e-13);
            assert!((g[(1, 1)] + c.beta).abs() < 1e-13);
            assert!((g[(2, 2)] - 1.0).abs() < 1e-13);
            assert!((g[(4, 4)] - c.mu).abs() < 1e-13);
            assert!((g[(4, 5)] + c.delta).abs() < 1e-13);
            assert!((g[(5, 5)] + c.lambda).abs() < 1e-13);
        }
    }

    #[test]
    fn gram_schmidt_reproduces_the_displayed_orthonormal_frame() {
        let spec = nakamura([0.1, -0.2, 0.3, 0.15]).unwrap();
        let supplied = unitary_frame(
            &spec.metric,
            &spec.j,
            &spec.algebra,
            spec.orthonormal_frame.as_ref(),
        )
        .unwrap();
        let auto = unitary_frame(&spec.metric, &spec.j, &spec.algebra, None).unwrap();
        let diff = (supplied.orthonormalizing().matrix() - auto.orthonormalizing().matrix())
            .map(|z| z.norm())
            .max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn dbar_of_the_second_coframe_element() {
        // d Phi^2_t has (1,1)-part (1/2) Phi^1 ∧ conj(Phi^2) and (0,2)-part
        // (1/2) conj(Phi^1) ∧ conj(Phi^2) in the deformed coframe.
        let t = [0.1, 0.2, 0.15, -0.1];
        let spec = nakamura(t).unwrap();
        let def = spec.deformation().unwrap();
        let fc = phi_t_frame(def, spec.algebra.frame_tag()).unwrap();
        let mut phi2 = InvariantForm::zero(6, 1, spec.algebra.frame_tag().clone());
        phi2.add_term(&[2], ONE).unwrap();
        phi2.add_term(&[3], I).unwrap();
        let d = spec.algebra.exterior_derivative(&phi2).unwrap();
        let d_in_phi = fc.transform_form(&d).unwrap();
        assert!((d_in_phi.coeff(&[0, 4]) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((d_in_phi.coeff(&[3, 4]) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        for (idx, c) in d_in_phi.terms() {
            if idx != [0, 4] && idx != [3, 4] {
                assert!(c.norm() < 1e-12, "unexpected term at {idx:?}");
            }
        }
    }

    #[test]
    fn expected_kodaira_tables_evaluate() {
        let e = expected_kodaira(2.0).unwrap();
        assert_eq!(e.scal_real, Some(-0.5));
        let r = e.ricci_real.unwrap();
        assert_eq!(r[(2, 2)], -1.5);
        assert_eq!(r[(3, 3)], 1.0);
        assert!(e.ricci_complex.unwrap().iter().all(|c| c.norm() == 0.0));
        let theta = e.theta_entries.unwrap();
        let c = 2.0_f64.sqrt() * 2.0 / 4.0;
        assert!((theta[&(0, 1)].coeff(&[1]) - Complex64::new(c, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expected_nakamura_tables_evaluate() {
        let e = expected_nakamura([0.0; 4]).unwrap();
        let theta = e.theta_entries.unwrap();
        let s = 2.0_f64.sqrt() / 2.0;
        assert!((theta[&(0, 1)].coeff(&[1]) + Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!(theta[&(2, 2)].is_zero());
        assert!(e.ricci_complex.unwrap().iter().all(|c| c.norm() == 0.0));
        // theta^3_3 turns on with delta.
        let e = expected_nakamura([0.0, 0.0, 0.0, 0.2]).unwrap();
        let theta = e.theta_entries.unwrap();
        let def = NakamuraDeformation::new([0.0, 0.0, 0.0, 0.2]).unwrap();
        let delta = def.coefficients().delta;
        let expect = Complex64::new(s * delta, 0.0) * I;
        assert!((theta[&(2, 2)].coeff(&[0]) - expect).norm() < 1e-15);
    }

    #[test]
    fn kodaira_surface_dimension_lookup() {
        assert_eq!(
            kodaira_surface_dimension(AngleClass::RationalMultipleOfPi),
            KodairaDimension::Zero
        );
        assert_eq!(
            kodaira_surface_dimension(AngleClass::IrrationalMultipleOfPi),
            KodairaDimension::MinusInfinity
        );
    }
}
