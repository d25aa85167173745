//! Plurigenera and Kodaira dimension for the Nakamura deformation family.
//!
//! A pluricanonical section is a function multiple of the m-th power of the
//! canonical coframe product; expanding the function in Fourier modes
//! `exp(2 pi i (n x + (m'/zeta) s))` turns dbar-closedness into one quadratic
//! relation per mode,
//!
//! `(beta/zeta^2) m'^2 - (2 alpha/zeta) n m' - gamma n^2 = -beta (m delta)^2 / pi^2`,
//!
//! whose integer solutions are the surviving modes. The discriminant in `m'`
//! is `-(4/zeta^2)(n^2 + beta^2 (m delta)^2 / pi^2)`, nonpositive and zero
//! only for `n = 0` and `delta = 0`, so the solution set is `{(0, 0)}` on the
//! `delta = 0` locus and empty off it. The decision is made three ways
//! (delta test, discriminant, exhaustive mode search) which must agree.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::invariant_algebra::InvariantForm;
use crate::model_families::{
    phi_t_frame, AlmostHermitianSpec, KodairaDimension, NakamuraDeformation,
};
use crate::tolerances;
use crate::{AkgeoError, Result};

/// Default half-width of the exhaustive mode search.
pub const DEFAULT_MODE_BOUND: i64 = 1000;

/// One Fourier-mode relation: `quad_s m'^2 + cross n m' + quad_x n^2 = rhs`.
#[derive(Clone, Copy, Debug)]
pub struct ModeEquation {
    pub m_power: u32,
    /// Coefficient of `m'^2`: beta/zeta^2, negative on the domain.
    pub quad_s: f64,
    /// Coefficient of `n m'`: -2 alpha/zeta.
    pub cross: f64,
    /// Coefficient of `n^2`: -gamma.
    pub quad_x: f64,
    /// Right-hand side: -beta (m delta)^2 / pi^2.
    pub rhs: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl ModeEquation {
    /// Residual of the relation at an integer mode pair.
    pub fn residual(&self, n: i64, m_prime: i64) -> f64 {
        let n = n as f64;
        let m = m_prime as f64;
        self.quad_s * m * m + self.cross * n * m + self.quad_x * n * n - self.rhs
    }

    /// Largest coefficient magnitude, the scale for equality testing.
    pub fn scale(&self) -> f64 {
        self.quad_s
            .abs()
            .max(self.cross.abs())
            .max(self.quad_x.abs())
            .max(self.rhs.abs())
    }
}

/// Builds the mode relation for the m-th pluricanonical power.
pub fn mode_equation(def: &NakamuraDeformation, m: u32) -> Result<ModeEquation> {
    if m == 0 {
        return Err(AkgeoError::Domain(
            "pluricanonical power must be at least 1".to_string(),
        ));
    }
    let c = def.coefficients();
    let zeta = def.zeta();
    let md = m as f64 * c.delta;
    let eq = ModeEquation {
        m_power: m,
        quad_s: c.beta / (zeta * zeta),
        cross: -2.0 * c.alpha / zeta,
        quad_x: -c.gamma,
        rhs: -c.beta * md * md / (PI * PI),
        alpha: c.alpha,
        beta: c.beta,
        gamma: c.gamma,
        delta: c.delta,
        zeta,
    };
    if !(eq.quad_s < 0.0) || !eq.scale().is_finite() {
        return Err(AkgeoError::Domain(format!(
            "mode equation is degenerate (quadratic coefficient {})",
            eq.quad_s
        )));
    }
    Ok(eq)
}

/// Discriminant of the relation as a quadratic in `m'` at fixed `n`,
/// computed in closed form as `-(4/zeta^2)(n^2 + beta^2 (m delta)^2/pi^2)`
/// and cross-checked against `b^2 - 4ac`.
pub fn discriminant(eq: &ModeEquation, n: i64) -> Result<f64> {
    let nf = n as f64;
    let bd = eq.beta * eq.m_power as f64 * eq.delta;
    let closed = -(4.0 / (eq.zeta * eq.zeta)) * (nf * nf + bd * bd / (PI * PI));
    let b = eq.cross * nf;
    let c = eq.quad_x * nf * nf - eq.rhs;
    let direct = b * b - 4.0 * eq.quad_s * c;
    let scale = closed.abs().max(direct.abs()).max(1.0);
    if (closed - direct).abs() > tolerances::COMPOSITE * scale {
        return Err(AkgeoError::OracleDisagreement(format!(
            "discriminant closed form {closed} disagrees with b^2-4ac {direct}"
        )));
    }
    Ok(closed)
}

/// Exhaustive integer search over `|n|, |m'| <= bound` for modes satisfying
/// the relation, with equality tolerance scaled by the coefficient size.
pub fn brute_force_modes(eq: &ModeEquation, bound: i64) -> Result<Vec<(i64, i64)>> {
    if bound < 1 {
        return Err(AkgeoError::Domain(format!(
            "mode search bound must be at least 1, got {bound}"
        )));
    }
    let tol = tolerances::MODE_EQUALITY * eq.scale();
    let mut hits = Vec::new();
    for n in -bound..=bound {
        for m_prime in -bound..=bound {
            if eq.residual(n, m_prime).abs() < tol {
                hits.push((n, m_prime));
            }
        }
    }
    Ok(hits)
}

struct ModeDecision {
    p: u8,
    discriminant_at_zero: f64,
    solutions: Vec<(i64, i64)>,
}

fn decide(def: &NakamuraDeformation, m: u32, bound: i64) -> Result<ModeDecision> {
    let eq = mode_equation(def, m)?;
    let delta_on_locus = eq.delta.abs() < tolerances::DELTA_ZERO;
    let p_delta: u8 = if delta_on_locus { 1 } else { 0 };

    // Analytic path: the discriminant at n = 0 vanishes exactly on the
    // locus; map the delta threshold through the closed form so both tests
    // draw the line at the same place.
    let disc0 = discriminant(&eq, 0)?;
    let threshold =
        (4.0 / (eq.zeta * eq.zeta)) * (eq.beta * m as f64 * tolerances::DELTA_ZERO / PI).powi(2);
    let p_analytic: u8 = if disc0 > -threshold { 1 } else { 0 };

    let raw_hits = brute_force_modes(&eq, bound)?;
    if let Some(bad) = raw_hits.iter().find(|&&s| s != (0, 0)) {
        return Err(AkgeoError::OracleDisagreement(format!(
            "mode search found an unexpected solution {bad:?} for m = {m}"
        )));
    }
    // The search certifies that no nontrivial mode solves the relation. The
    // trivial mode solves it iff rhs = 0, which is the delta test rescaled
    // by beta (m/pi)^2, so it gets the shared delta threshold rather than
    // the generic equality tolerance.
    let trivial_threshold = eq.beta.abs() * (m as f64 * tolerances::DELTA_ZERO / PI).powi(2);
    let p_brute = u8::from(eq.rhs.abs() < trivial_threshold);
    let solutions: Vec<(i64, i64)> = if p_brute == 1 {
        vec![(0, 0)]
    } else {
        Vec::new()
    };

    if p_delta != p_analytic || p_delta != p_brute {
        return Err(AkgeoError::OracleDisagreement(format!(
            "plurigenus oracles disagree for m = {m}: delta test {p_delta}, \
             discriminant {p_analytic}, mode search {p_brute}"
        )));
    }
    Ok(ModeDecision {
        p: p_delta,
        discriminant_at_zero: disc0,
        solutions,
    })
}

/// The m-th plurigenus of the deformation point, in {0, 1}.
pub fn plurigenus(def: &NakamuraDeformation, m: u32) -> Result<u8> {
    plurigenus_with_bound(def, m, DEFAULT_MODE_BOUND)
}

/// Same decision with an explicit mode-search bound; the three oracles must
/// still agree.
pub fn plurigenus_with_bound(def: &NakamuraDeformation, m: u32, bound: i64) -> Result<u8> {
    Ok(decide(def, m, bound)?.p)
}

/// Evidence backing a plurigenus decision.
#[derive(Clone, Debug)]
pub struct PlurigenusEvidence {
    pub delta: f64,
    pub mode_bound: i64,
    /// Discriminant at n = 0, per power m.
    pub discriminant_at_zero: BTreeMap<u32, f64>,
    /// Integer mode solutions found, per power m.
    pub solutions: BTreeMap<u32, Vec<(i64, i64)>>,
}

/// Plurigenera and the resulting Kodaira dimension.
#[derive(Clone, Debug)]
pub struct PlurigenusResult {
    pub per_m: BTreeMap<u32, u8>,
    pub kappa: KodairaDimension,
    pub evidence: PlurigenusEvidence,
}

/// Computes P_m for m = 1..m_max and the Kodaira dimension.
pub fn kodaira_dimension(def: &NakamuraDeformation, m_max: u32) -> Result<PlurigenusResult> {
    kodaira_dimension_with_bound(def, m_max, DEFAULT_MODE_BOUND)
}

/// As `kodaira_dimension` with an explicit mode-search bound.
pub fn kodaira_dimension_with_bound(
    def: &NakamuraDeformation,
    m_max: u32,
    bound: i64,
) -> Result<PlurigenusResult> {
    if m_max < 1 {
        return Err(AkgeoError::Domain("m_max must be at least 1".to_string()));
    }
    let mut per_m = BTreeMap::new();
    let mut disc = BTreeMap::new();
    let mut solutions = BTreeMap::new();
    for m in 1..=m_max {
        let d = decide(def, m, bound)?;
        per_m.insert(m, d.p);
        disc.insert(m, d.discriminant_at_zero);
        solutions.insert(m, d.solutions);
    }
    let first = per_m[&1];
    if per_m.values().any(|&p| p != first) {
        return Err(AkgeoError::OracleDisagreement(format!(
            "plurigenus is not constant in m: {per_m:?}"
        )));
    }
    let kappa = if first == 1 {
        KodairaDimension::Zero
    } else {
        KodairaDimension::MinusInfinity
    };
    Ok(PlurigenusResult {
        per_m,
        kappa,
        evidence: PlurigenusEvidence {
            delta: def.coefficients().delta,
            mode_bound: bound,
            discriminant_at_zero: disc,
            solutions,
        },
    })
}

/// The (0,1)-form `eta` with `dbar(sigma^m) = eta tensor sigma^m` for the
/// m-th power of the canonical coframe product, over the deformed complex
/// coframe. Computed from the exterior derivative of the coframe product
/// and checked against the closed form `-m (i delta / 2) conj(Phi^1)`.
pub fn dbar_canonical_coefficient(spec: &AlmostHermitianSpec, m: u32) -> Result<InvariantForm> {
    if m == 0 {
        return Err(AkgeoError::Domain(
            "pluricanonical power must be at least 1".to_string(),
        ));
    }
    let def = spec.deformation().ok_or_else(|| {
        AkgeoError::Domain("dbar coefficient is defined for Nakamura points only".to_string())
    })?;
    let fc = phi_t_frame(def, spec.algebra.frame_tag())?;

    // The coframe rows over the invariant frame.
    let coframe = fc.inverse_matrix();
    let phi_over_e = |a: usize| -> Result<InvariantForm> {
        let mut f = InvariantForm::zero(6, 1, spec.algebra.frame_tag().clone());
        for l in 0..6 {
            let c = coframe[(a, l)];
            if c.norm() >= 1e-15 {
                f.add_term(&[l], c)?;
            }
        }
        Ok(f)
    };
    let top = phi_over_e(0)?
        .wedge(&phi_over_e(1)?)?
        .wedge(&phi_over_e(2)?)?;
    let d_top = spec.algebra.exterior_derivative(&top)?;
    let d_in_phi = fc.transform_form(&d_top)?;

    // d of a (3,0)-form can only produce (3,1) and (2,2) terms; anything
    // else signals a broken coframe.
    let mut eta = InvariantForm::zero(6, 1, fc.to_tag().clone());
    for (idx, c) in d_in_phi.terms() {
        let unbarred = idx.iter().filter(|&&p| p < 3).count();
        match unbarred {
            3 => {
                // (3,1) term Phi^{123} ^ conj(Phi^l); moving the barred
                // factor to the front costs a sign.
                let l = idx[3];
                eta.add_term(&[l], -c * m as f64)?;
            }
            2 => {}
            _ => {
                if c.norm() > tolerances::CONNECTION {
                    return Err(AkgeoError::Algebra(format!(
                        "dbar action on the canonical power is not decomposable \
                         (type-({unbarred},{}) term of size {:.3e})",
                        4 - unbarred,
                        c.norm()
                    )));
                }
            }
        }
    }

    let delta = def.coefficients().delta;
    let mut closed = InvariantForm::zero(6, 1, fc.to_tag().clone());
    closed.add_term(&[3], Complex64::new(0.0, -0.5 * m as f64 * delta))?;
    let diff = eta.max_abs_diff(&closed);
    if diff > tolerances::CONNECTION {
        return Err(AkgeoError::OracleDisagreement(format!(
            "computed dbar coefficient deviates from the closed form by {diff:.3e}"
        )));
    }
    Ok(eta)
}

/// Principal symbol data of the second-order operator governing the mode
/// reduction, `4(V_2 conj(V_2) + V_3 conj(V_3))`.
#[derive(Clone, Copy, Debug)]
pub struct EllipticOperatorSymbol {
    pub delta: f64,
    pub lambda: f64,
    pub zeta: f64,
}

impl EllipticOperatorSymbol {
    pub fn new(def: &NakamuraDeformation) -> Self {
        let c = def.coefficients();
        EllipticOperatorSymbol {
            delta: c.delta,
            lambda: c.lambda,
            zeta: def.zeta(),
        }
    }

    /// Symbol matrix in the fiber coordinates (y1, y2, y3, y4) at height s.
    pub fn matrix(&self, s: f64) -> DMatrix<f64> {
        let en = (-2.0 * s).exp();
        let ep = (2.0 * s).exp();
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m[(0, 0)] = en;
        m[(1, 1)] = ep;
        m[(2, 2)] = en;
        m[(3, 3)] = (1.0 + self.delta * self.delta) / (self.lambda * self.lambda) * ep;
        m[(2, 3)] = -self.delta / self.lambda;
        m[(3, 2)] = -self.delta / self.lambda;
        m
    }

    /// Exact determinant of the (y3, y4) block, independent of s.
    pub fn block_determinant(&self) -> f64 {
        1.0 / (self.lambda * self.lambda)
    }
}

/// Outcome of sampling the symbol along the mapping-torus direction.
#[derive(Clone, Copy, Debug)]
pub struct EllipticityReport {
    pub sample_count: usize,
    pub min_eigenvalue: f64,
    pub max_block_det_residual: f64,
}

/// Samples the principal symbol at `sample_count` points of [0, zeta] and
/// verifies positive definiteness with margin, plus the closed-form value of
/// the (y3, y4)-block determinant.
pub fn ellipticity_check(
    def: &NakamuraDeformation,
    sample_count: usize,
) -> Result<EllipticityReport> {
    if sample_count < 2 {
        return Err(AkgeoError::Domain(
            "ellipticity sampling needs at least 2 points".to_string(),
        ));
    }
    let symbol = EllipticOperatorSymbol::new(def);
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_block_det_residual: f64 = 0.0;
    for k in 0..sample_count {
        let s = symbol.zeta * k as f64 / (sample_count - 1) as f64;
        let m = symbol.matrix(s);
        let block_det = m[(2, 2)] * m[(3, 3)] - m[(2, 3)] * m[(3, 2)];
        max_block_det_residual =
            max_block_det_residual.max((block_det - symbol.block_determinant()).abs());
        let eigen = m.symmetric_eigen();
        min_eigenvalue = min_eigenvalue.min(eigen.eigenvalues.min());
    }
    if min_eigenvalue <= tolerances::ELLIPTIC_MARGIN {
        return Err(AkgeoError::Domain(format!(
            "principal symbol is not positive definite (min eigenvalue {min_eigenvalue:.3e})"
        )));
    }
    if max_block_det_residual > tolerances::FRAME {
        return Err(AkgeoError::OracleDisagreement(format!(
            "block determinant deviates from 1/lambda^2 by {max_block_det_residual:.3e}"
        )));
    }
    Ok(EllipticityReport {
        sample_count,
        min_eigenvalue,
        max_block_det_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_families::nakamura;

    fn def(t: [f64; 4]) -> NakamuraDeformation {
        NakamuraDeformation::new(t).unwrap()
    }

    #[test]
    fn mode_equation_at_the_origin() {
        let eq = mode_equation(&def([0.0; 4]), 1).unwrap();
        let z = eq.zeta;
        assert!((eq.quad_s + 1.0 / (z * z)).abs() < 1e-15);
        assert_eq!(eq.cross, 0.0);
        assert_eq!(eq.quad_x, -1.0);
        assert_eq!(eq.rhs, 0.0);
    }

    #[test]
    fn mode_equation_rhs_scales_with_m_squared() {
        let d = def([0.0, 0.0, 0.0, 0.1]);
        let eq1 = mode_equation(&d, 1).unwrap();
        let eq2 = mode_equation(&d, 2).unwrap();
        let delta = d.coefficients().delta;
        // beta = -1 here, so rhs = +delta^2/pi^2.
        assert!((eq1.rhs - delta * delta / (PI * PI)).abs() < 1e-15);
        assert!((eq2.rhs - 4.0 * eq1.rhs).abs() < 1e-15);
    }

    #[test]
    fn discriminant_values_and_sign() {
        let d0 = def([0.0; 4]);
        let eq = mode_equation(&d0, 1).unwrap();
        assert_eq!(discriminant(&eq, 0).unwrap(), 0.0);
        let z = eq.zeta;
        assert!((discriminant(&eq, 1).unwrap() + 4.0 / (z * z)).abs() < 1e-14);

        let d1 = def([0.0, 0.0, 0.0, 0.1]);
        let eq = mode_equation(&d1, 1).unwrap();
        assert!(discriminant(&eq, 0).unwrap() < -1e-6);
        for t in [
            [0.3, -0.3, 0.3, 0.3],
            [0.1, 0.2, -0.25, 0.15],
            [-0.3, 0.0, 0.0, -0.3],
        ] {
            let dd = def(t);
            for m in [1, 3] {
                let eq = mode_equation(&dd, m).unwrap();
                for n in -10..=10 {
                    let disc = discriminant(&eq, n).unwrap();
                    assert!(disc < 0.0, "discriminant must be negative off the locus");
                }
            }
        }
    }

    #[test]
    fn brute_force_finds_only_the_constant_mode_on_the_locus() {
        let eq = mode_equation(&def([0.1, 0.1, 0.2, 0.0]), 1).unwrap();
        assert_eq!(brute_force_modes(&eq, 1000).unwrap(), vec![(0, 0)]);
        let eq = mode_equation(&def([0.0; 4]), 1).unwrap();
        assert_eq!(brute_force_modes(&eq, 10).unwrap(), vec![(0, 0)]);
    }

    #[test]
    fn brute_force_finds_nothing_off_the_locus() {
        let eq = mode_equation(&def([0.0, 0.0, 0.0, 0.1]), 1).unwrap();
        assert!(brute_force_modes(&eq, 1000).unwrap().is_empty());
    }

    #[test]
    fn plurigenus_values() {
        assert_eq!(plurigenus(&def([0.1, 0.1, 0.2, 0.0]), 1).unwrap(), 1);
        assert_eq!(plurigenus(&def([0.1, 0.1, 0.2, 0.0]), 5).unwrap(), 1);
        assert_eq!(plurigenus(&def([0.0, 0.0, 0.0, 0.1]), 1).unwrap(), 0);
        assert_eq!(plurigenus(&def([0.0; 4]), 3).unwrap(), 1);
    }

    #[test]
    fn kodaira_dimension_phase_values() {
        let r = kodaira_dimension_with_bound(&def([0.1, 0.1, 0.1, 0.0]), 4, 200).unwrap();
        assert_eq!(r.kappa, KodairaDimension::Zero);
        assert!(r.per_m.values().all(|&p| p == 1));
        let r = kodaira_dimension_with_bound(&def([0.1, 0.1, 0.1, 0.05]), 4, 200).unwrap();
        assert_eq!(r.kappa, KodairaDimension::MinusInfinity);
        assert!(r.per_m.values().all(|&p| p == 0));
        let r = kodaira_dimension_with_bound(&def([0.0; 4]), 2, 200).unwrap();
        assert_eq!(r.kappa, KodairaDimension::Zero);
    }

    #[test]
    fn dbar_coefficient_matches_the_closed_form() {
        let spec = nakamura([0.0, 0.0, 0.0, 0.1]).unwrap();
        let delta = spec.deformation().unwrap().coefficients().delta;
        let eta1 = dbar_canonical_coefficient(&spec, 1).unwrap();
        let expect = Complex64::new(0.0, -0.5 * delta);
        assert!((eta1.coeff(&[3]) - expect).norm() < 1e-12);
        assert_eq!(eta1.terms().count(), 1);
        let eta3 = dbar_canonical_coefficient(&spec, 3).unwrap();
        assert!(eta3.max_abs_diff(&eta1.scaled(Complex64::new(3.0, 0.0))) < 1e-12);

        let on_locus = nakamura([0.2, -0.1, 0.3, 0.0]).unwrap();
        let eta = dbar_canonical_coefficient(&on_locus, 2).unwrap();
        assert!(eta.max_abs() < 1e-13);
    }

    #[test]
    fn ellipticity_margin_on_samples() {
        let r = ellipticity_check(&def([0.0; 4]), 16).unwrap();
        assert!(r.min_eigenvalue > 0.1);
        let r = ellipticity_check(&def([0.0, 0.0, 0.1, 0.1]), 16).unwrap();
        assert!(r.min_eigenvalue > tolerances::ELLIPTIC_MARGIN);
        assert!(r.max_block_det_residual < 1e-12);
        assert!(ellipticity_check(&def([0.0; 4]), 1).is_err());
    }
}
