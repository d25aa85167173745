//! Manifold description files, the end-to-end analysis pipeline,
//! verification against closed-form tables, and report emission.
//!
//! Description files and emitted reports use 1-based frame indices to match
//! the labels `E1..En`; everything internal stays 0-based. Reports round
//! floats to 12 significant digits and iterate only sorted containers, so
//! equal inputs produce byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hermitian_geometry::{
    adapted_tag, canonical_connection, classify, connection_forms, curvature, levi_civita,
    nijenhuis, real_curvature, real_torsion_forms, scalar_from_psi11, torsion_forms, unitary_frame,
    AlmostComplexStructure, ClassificationFlags, ComplexCurvature, ConnectionMatrix, MetricData,
    RealConnection, RealCurvature,
};
use crate::invariant_algebra::{
    format_complex, validate_algebra, FrameChange, FrameTag, InvariantAlgebra, InvariantForm,
    VectorValuedForm,
};
use crate::model_families::{
    expected_kodaira, expected_nakamura, kodaira_thurston, nakamura, nakamura_with_zeta,
    AlmostHermitianSpec, ExpectedResults, FamilyParams,
};
use crate::plurigenus_analysis::{kodaira_dimension_with_bound, PlurigenusResult};
use crate::tolerances;
use crate::{AkgeoError, Result};

/// Rounds to 12 significant digits for report output. Collapses signed zero.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("rounded float parses")
}

/// Default verification tolerance, overridable through `AKGEO_TOL`.
pub fn default_tolerance() -> f64 {
    std::env::var("AKGEO_TOL")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|t: &f64| t.is_finite() && *t > 0.0)
        .unwrap_or(1e-9)
}

/// JSON manifold description. Either a `family` shortcut with its parameters,
/// or an explicit structure-constant/J/metric triple.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpecFile {
    #[serde(default)]
    pub name: Option<String>,
    /// `"kodaira_thurston"` or `"nakamura"`.
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
    /// Bracket triples `[i, j, k, value]`, 1-based: `[E_i, E_j] += value E_k`.
    #[serde(default)]
    pub structure: Option<Vec<(usize, usize, usize, f64)>>,
    /// Row-major matrix of J acting on frame coefficients.
    #[serde(default)]
    pub j: Option<Vec<Vec<f64>>>,
    /// Row-major metric matrix; alternative to `symplectic`.
    #[serde(default)]
    pub metric: Option<Vec<Vec<f64>>>,
    /// Fundamental 2-form as `[i, j, value]` triples, 1-based; the metric is
    /// then recovered through J.
    #[serde(default)]
    pub symplectic: Option<Vec<(usize, usize, f64)>>,
    /// Optional row-major matrix whose columns are an orthonormal J-adapted
    /// frame over the invariant one.
    #[serde(default)]
    pub orthonormal_frame: Option<Vec<Vec<f64>>>,
}

fn parse_matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(AkgeoError::SpecFile(format!(
            "`{what}` must be a {dim}x{dim} row-major matrix"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|x| !x.is_finite()) {
        return Err(AkgeoError::SpecFile(format!(
            "`{what}` contains a non-finite entry"
        )));
    }
    Ok(DMatrix::from_row_slice(dim, dim, &flat))
}

fn reject_fields(names: &[(&str, bool)], context: &str) -> Result<()> {
    for (name, present) in names {
        if *present {
            return Err(AkgeoError::SpecFile(format!(
                "field `{name}` does not apply to {context}"
            )));
        }
    }
    Ok(())
}

/// Reads and validates a manifold description file.
pub fn load_spec(path: &Path) -> Result<AlmostHermitianSpec> {
    let text = fs::read_to_string(path).map_err(|source| AkgeoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ManifoldSpecFile =
        serde_json::from_str(&text).map_err(|source| AkgeoError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    spec_from_file(file)
}

/// Builds a validated spec from a parsed description, re-running every
/// constructor-level invariant (Jacobi, J^2 = -I, positivity, compatibility).
pub fn spec_from_file(file: ManifoldSpecFile) -> Result<AlmostHermitianSpec> {
    if let Some(fam) = file.family.as_deref() {
        let generic_fields = [
            ("structure", file.structure.is_some()),
            ("j", file.j.is_some()),
            ("metric", file.metric.is_some()),
            ("symplectic", file.symplectic.is_some()),
            ("orthonormal_frame", file.orthonormal_frame.is_some()),
        ];
        let mut spec = match fam {
            "kodaira_thurston" => {
                reject_fields(&generic_fields, "the kodaira_thurston family")?;
                reject_fields(
                    &[("t", file.t.is_some()), ("zeta", file.zeta.is_some())],
                    "the kodaira_thurston family",
                )?;
                let a = file.a.ok_or_else(|| {
                    AkgeoError::SpecFile("family kodaira_thurston needs `a`".to_string())
                })?;
                kodaira_thurston(a)?
            }
            "nakamura" => {
                reject_fields(&generic_fields, "the nakamura family")?;
                reject_fields(&[("a", file.a.is_some())], "the nakamura family")?;
                let t = file
                    .t
                    .as_deref()
                    .ok_or_else(|| AkgeoError::SpecFile("family nakamura needs `t`".to_string()))?;
                let t: [f64; 4] = t.try_into().map_err(|_| {
                    AkgeoError::SpecFile("`t` must hold exactly four numbers".to_string())
                })?;
                match file.zeta {
                    Some(z) => nakamura_with_zeta(t, z)?,
                    None => nakamura(t)?,
                }
            }
            other => {
                return Err(AkgeoError::SpecFile(format!("unknown family `{other}`")));
            }
        };
        if let Some(dim) = file.dim {
            if dim != spec.algebra.dim() {
                return Err(AkgeoError::SpecFile(format!(
                    "`dim` = {dim} contradicts the family dimension {}",
                    spec.algebra.dim()
                )));
            }
        }
        if let Some(name) = file.name {
            spec.name = name;
        }
        return Ok(spec);
    }

    reject_fields(
        &[
            ("a", file.a.is_some()),
            ("t", file.t.is_some()),
            ("zeta", file.zeta.is_some()),
        ],
        "an explicit manifold description",
    )?;
    let dim = file
        .dim
        .ok_or_else(|| AkgeoError::SpecFile("`dim` is required".to_string()))?;
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(AkgeoError::SpecFile(format!(
            "`dim` must be positive and even, got {dim}"
        )));
    }
    let mut triples = Vec::new();
    for &(i, j, k, v) in file.structure.as_deref().unwrap_or(&[]) {
        if i == 0 || j == 0 || k == 0 || i > dim || j > dim || k > dim {
            return Err(AkgeoError::SpecFile(format!(
                "structure triple [{i}, {j}, {k}, {v}] uses indices outside 1..={dim}"
            )));
        }
        if !v.is_finite() {
            return Err(AkgeoError::SpecFile(
                "structure constants must be finite".to_string(),
            ));
        }
        triples.push((i - 1, j - 1, k - 1, v));
    }
    let tag = FrameTag::new("E");
    let labels = (1..=dim).map(|i| format!("E{i}")).collect();
    let algebra = InvariantAlgebra::new(dim, labels, tag.clone(), &triples)?;
    let diag = validate_algebra(&algebra);
    if !diag.pass {
        return Err(AkgeoError::SpecFile(format!(
            "structure constants violate the Jacobi identity (residual {:.3e})",
            diag.max_jacobi_residual
        )));
    }

    let j_rows = file
        .j
        .as_deref()
        .ok_or_else(|| AkgeoError::SpecFile("`j` is required".to_string()))?;
    let j = AlmostComplexStructure::new(parse_matrix(j_rows, dim, "j")?, tag.clone())?;

    let metric = match (&file.metric, &file.symplectic) {
        (Some(rows), None) => MetricData::new(parse_matrix(rows, dim, "metric")?, &j, tag.clone())?,
        (None, Some(terms)) => {
            let mut w = DMatrix::<f64>::zeros(dim, dim);
            for &(i, jj, v) in terms {
                if i == 0 || jj == 0 || i > dim || jj > dim || i == jj {
                    return Err(AkgeoError::SpecFile(format!(
                        "symplectic term [{i}, {jj}, {v}] uses invalid indices"
                    )));
                }
                w[(i - 1, jj - 1)] += v;
                w[(jj - 1, i - 1)] -= v;
            }
            MetricData::from_omega(w, &j, tag.clone())?
        }
        (None, None) => {
            return Err(AkgeoError::SpecFile(
                "one of `metric` or `symplectic` is required".to_string(),
            ));
        }
        (Some(_), Some(_)) => {
            return Err(AkgeoError::SpecFile(
                "give either `metric` or `symplectic`, not both".to_string(),
            ));
        }
    };

    let orthonormal_frame = match &file.orthonormal_frame {
        Some(rows) => Some(FrameChange::from_real(
            parse_matrix(rows, dim, "orthonormal_frame")?,
            tag.clone(),
            adapted_tag(&tag),
        )?),
        None => None,
    };

    Ok(AlmostHermitianSpec {
        name: file.name.unwrap_or_else(|| "manifold".to_string()),
        algebra,
        j,
        metric,
        orthonormal_frame,
        family: FamilyParams::Generic,
    })
}

/// Knobs for a pipeline run.
#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    /// Tolerance for expected-table comparisons.
    pub tolerance: f64,
    /// Plurigenera are computed for `m = 1..=m_max`.
    pub m_max: u32,
    /// Exhaustive Fourier-mode search bound.
    pub mode_bound: i64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            tolerance: default_tolerance(),
            m_max: 10,
            mode_bound: crate::plurigenus_analysis::DEFAULT_MODE_BOUND,
        }
    }
}

/// Everything one pipeline run computes.
pub struct PipelineOutput {
    pub spec: AlmostHermitianSpec,
    pub flags: ClassificationFlags,
    pub nijenhuis: VectorValuedForm,
    pub frame: crate::hermitian_geometry::ComplexFrameData,
    pub levi_civita: RealConnection,
    pub canonical: RealConnection,
    pub theta: ConnectionMatrix,
    pub torsion_complex: Vec<InvariantForm>,
    pub torsion_real: Vec<InvariantForm>,
    pub complex_curvature: ComplexCurvature,
    pub real_curvature: RealCurvature,
    pub plurigenus: Option<PlurigenusResult>,
}

/// Runs the full pipeline: classification, Levi-Civita and canonical
/// connections in the adapted orthonormal frame, unitary connection and
/// curvature forms, torsion, Ricci and scalar curvatures, and (for the
/// Nakamura family) plurigenera. Errors carry the stage that failed.
pub fn run_pipeline(
    spec: &AlmostHermitianSpec,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    let diag = validate_algebra(&spec.algebra);
    if !diag.pass {
        return Err(AkgeoError::Algebra(format!(
            "Jacobi residual {:.3e}",
            diag.max_jacobi_residual
        ))
        .at_stage("validate"));
    }
    let flags =
        classify(&spec.j, &spec.metric, &spec.algebra).map_err(|e| e.at_stage("classify"))?;
    let nij = nijenhuis(&spec.j, &spec.algebra).map_err(|e| e.at_stage("nijenhuis"))?;
    let frame = unitary_frame(
        &spec.metric,
        &spec.j,
        &spec.algebra,
        spec.orthonormal_frame.as_ref(),
    )
    .map_err(|e| e.at_stage("unitary-frame"))?;
    let lc = levi_civita(frame.metric_adapted(), frame.algebra_adapted())
        .map_err(|e| e.at_stage("levi-civita"))?;
    let canonical = canonical_connection(&lc, frame.j_adapted(), frame.metric_adapted())
        .map_err(|e| e.at_stage("canonical-connection"))?;
    let theta = connection_forms(&canonical, &frame).map_err(|e| e.at_stage("connection-forms"))?;
    let torsion_complex = torsion_forms(&theta, &frame).map_err(|e| e.at_stage("torsion"))?;
    let torsion_real = real_torsion_forms(&canonical, frame.algebra_adapted())
        .map_err(|e| e.at_stage("torsion"))?;
    let complex_curvature = curvature(&theta, &frame).map_err(|e| e.at_stage("curvature"))?;
    let two_path = (scalar_from_psi11(&complex_curvature.psi11_coeffs, frame.n())
        - Complex64::new(complex_curvature.scal_complex, 0.0))
    .norm();
    if two_path > tolerances::FRAME {
        return Err(AkgeoError::OracleDisagreement(format!(
            "scalar curvature differs between contraction orders by {two_path:.3e}"
        ))
        .at_stage("curvature"));
    }
    let real_curv = real_curvature(&canonical, frame.algebra_adapted(), frame.metric_adapted())
        .map_err(|e| e.at_stage("real-curvature"))?;
    let plurigenus = match spec.deformation() {
        Some(def) => Some(
            kodaira_dimension_with_bound(def, options.m_max, options.mode_bound)
                .map_err(|e| e.at_stage("plurigenus"))?,
        ),
        None => None,
    };
    Ok(PipelineOutput {
        spec: spec.clone(),
        flags,
        nijenhuis: nij,
        frame,
        levi_civita: lc,
        canonical,
        theta,
        torsion_complex,
        torsion_real,
        complex_curvature,
        real_curvature: real_curv,
        plurigenus,
    })
}

/// One named residual check.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationItem {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A set of residual checks; passes iff every item does.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationResult {
    pub items: Vec<VerificationItem>,
    pub pass: bool,
}

impl VerificationResult {
    fn new() -> Self {
        VerificationResult {
            items: Vec::new(),
            pass: true,
        }
    }

    fn push(&mut self, name: &str, residual: f64, tolerance: f64) {
        let pass = residual < tolerance;
        self.pass &= pass;
        self.items.push(VerificationItem {
            name: name.to_string(),
            residual: sig12(residual),
            tolerance,
            pass,
        });
    }

    /// Appends all items of another result.
    pub fn merge(&mut self, other: VerificationResult) {
        self.pass &= other.pass;
        self.items.extend(other.items);
    }
}

fn form_residual(expected: &InvariantForm, computed: &InvariantForm) -> Result<f64> {
    if expected.frame_tag() != computed.frame_tag() {
        return Err(AkgeoError::FrameMismatch {
            left: expected.frame_tag().to_string(),
            right: computed.frame_tag().to_string(),
        });
    }
    if expected.degree() != computed.degree() || expected.dim() != computed.dim() {
        return Err(AkgeoError::DegreeMismatch {
            expected: expected.degree(),
            got: computed.degree(),
        });
    }
    Ok(expected.max_abs_diff(computed))
}

fn matrix_entry_residual(
    expected: &BTreeMap<(usize, usize), InvariantForm>,
    computed: &[Vec<InvariantForm>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for ((i, j), form) in expected {
        let entry =
            computed
                .get(*i)
                .and_then(|row| row.get(*j))
                .ok_or(AkgeoError::IndexOutOfRange {
                    index: (*i).max(*j),
                    dim: computed.len(),
                })?;
        worst = worst.max(form_residual(form, entry)?);
    }
    Ok(worst)
}

fn forms_residual(expected: &[InvariantForm], computed: &[InvariantForm]) -> Result<f64> {
    if expected.len() != computed.len() {
        return Err(AkgeoError::DimensionMismatch {
            expected: expected.len(),
            got: computed.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for (e, c) in expected.iter().zip(computed) {
        worst = worst.max(form_residual(e, c)?);
    }
    Ok(worst)
}

/// Largest deviation over the union of the two coefficient sets.
fn psi11_residual(
    expected: &BTreeMap<(usize, usize, usize, usize), Complex64>,
    computed: &BTreeMap<(usize, usize, usize, usize), Complex64>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (key, value) in expected {
        let c = computed.get(key).copied().unwrap_or(Complex64::ZERO);
        worst = worst.max((c - value).norm());
    }
    for (key, value) in computed {
        if !expected.contains_key(key) {
            worst = worst.max(value.norm());
        }
    }
    worst
}

fn real_matrix_residual(expected: &DMatrix<f64>, computed: &DMatrix<f64>) -> Result<f64> {
    if expected.shape() != computed.shape() {
        return Err(AkgeoError::DimensionMismatch {
            expected: expected.nrows(),
            got: computed.nrows(),
        });
    }
    Ok((expected - computed).abs().max())
}

fn complex_matrix_residual(
    expected: &DMatrix<Complex64>,
    computed: &DMatrix<Complex64>,
) -> Result<f64> {
    if expected.shape() != computed.shape() {
        return Err(AkgeoError::DimensionMismatch {
            expected: expected.nrows(),
            got: computed.nrows(),
        });
    }
    Ok((expected - computed)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max))
}

/// Compares a pipeline run against expected tables; one item per present
/// table, each carrying its max-abs residual.
pub fn verify(
    out: &PipelineOutput,
    expected: &ExpectedResults,
    tol: f64,
) -> Result<VerificationResult> {
    expected.validate()?;
    let mut result = VerificationResult::new();
    if let Some(map) = &expected.theta_entries {
        result.push("theta", matrix_entry_residual(map, &out.theta.theta)?, tol);
    }
    if let Some(map) = &expected.psi_entries {
        result.push(
            "psi",
            matrix_entry_residual(map, &out.complex_curvature.psi)?,
            tol,
        );
    }
    if let Some(map) = &expected.psi11_coeffs {
        result.push(
            "psi11",
            psi11_residual(map, &out.complex_curvature.psi11_coeffs),
            tol,
        );
    }
    if let Some(m) = &expected.ricci_complex {
        result.push(
            "ricci_complex",
            complex_matrix_residual(m, &out.complex_curvature.ricci_complex)?,
            tol,
        );
    }
    if let Some(x) = expected.scal_complex {
        result.push(
            "scal_complex",
            (x - out.complex_curvature.scal_complex).abs(),
            tol,
        );
    }
    if let Some(v) = &expected.torsion_complex {
        result.push(
            "torsion_complex",
            forms_residual(v, &out.torsion_complex)?,
            tol,
        );
    }
    if let Some(v) = &expected.torsion_real {
        result.push("torsion_real", forms_residual(v, &out.torsion_real)?, tol);
    }
    if let Some(map) = &expected.connection_real_entries {
        result.push(
            "connection_real",
            matrix_entry_residual(map, &out.real_curvature.connection_forms)?,
            tol,
        );
    }
    if let Some(map) = &expected.omega_real_entries {
        result.push(
            "omega_real",
            matrix_entry_residual(map, &out.real_curvature.omega_real)?,
            tol,
        );
    }
    if let Some(m) = &expected.ricci_real {
        result.push(
            "ricci_real",
            real_matrix_residual(m, &out.real_curvature.ricci_real)?,
            tol,
        );
    }
    if let Some(x) = expected.scal_real {
        result.push("scal_real", (x - out.real_curvature.scal_real).abs(), tol);
    }
    if result.items.is_empty() {
        return Err(AkgeoError::Domain(
            "expected tables are empty; nothing to verify".to_string(),
        ));
    }
    Ok(result)
}

fn d_squared_residual(alg: &InvariantAlgebra) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..alg.dim() {
        worst = worst.max(alg.exterior_derivative(&alg.d_one_form(k)?)?.max_abs());
    }
    Ok(worst)
}

/// Residuals of the two torsion identities over all unitary basis pairs:
/// `T = (1/4) (1,0)-part of the complexified Nijenhuis tensor`, and
/// `T(X, Y) = -(1,0)-part of [X^(0,1), Y^(0,1)]`.
pub fn torsion_identity_residuals(out: &PipelineOutput) -> Result<(f64, f64)> {
    let cf = &out.frame;
    let n = cf.n();
    let dim = 2 * n;
    // Columns: unitary basis vectors in original-frame coordinates.
    let combined = cf.orthonormalizing().matrix() * cf.to_unitary().matrix();
    let basis: Vec<Vec<Complex64>> = (0..dim)
        .map(|p| (0..dim).map(|r| combined[(r, p)]).collect())
        .collect();
    let mut worst_nijenhuis: f64 = 0.0;
    let mut worst_bracket: f64 = 0.0;
    for p in 0..dim {
        for q in (p + 1)..dim {
            let value: Vec<Complex64> = out
                .nijenhuis
                .components
                .iter()
                .map(|f| f.evaluate_two(&basis[p], &basis[q]))
                .collect();
            let adapted = cf.orthonormalizing().vector_to_new(&value)?;
            let unitary = cf.to_unitary().vector_to_new(&adapted)?;
            let bracket = if p >= n && q >= n {
                cf.complex_algebra().bracket_basis(p, q)
            } else {
                vec![Complex64::ZERO; dim]
            };
            for i in 0..n {
                let t_val = out.torsion_complex[i].coeff(&[p, q]);
                worst_nijenhuis = worst_nijenhuis.max((t_val - unitary[i] * 0.25).norm());
                worst_bracket = worst_bracket.max((t_val + bracket[i]).norm());
            }
        }
    }
    Ok((worst_nijenhuis, worst_bracket))
}

/// Largest entry of `Psi^i_j + conj(Psi^j_i)` in the unitary frame.
pub fn psi_skew_residual(out: &PipelineOutput) -> Result<f64> {
    let n = out.frame.n();
    let psi = &out.complex_curvature.psi;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let conj = out.frame.conjugate_form(&psi[j][i])?;
            worst = worst.max(psi[i][j].add(&conj)?.max_abs());
        }
    }
    Ok(worst)
}

/// Identity checks every canonical connection must satisfy, independent of
/// any expected table.
pub fn structural_checks(out: &PipelineOutput) -> Result<VerificationResult> {
    let mut result = VerificationResult::new();
    result.push(
        "d_squared",
        d_squared_residual(&out.spec.algebra)?,
        tolerances::FRAME,
    );
    let (t_nij, t_bracket) = torsion_identity_residuals(out)?;
    result.push("torsion_vs_nijenhuis", t_nij, tolerances::COMPOSITE);
    result.push("torsion_vs_bracket", t_bracket, tolerances::COMPOSITE);
    result.push(
        "theta_skew_hermitian",
        out.theta.skew_hermitian_residual(&out.frame)?,
        tolerances::CONNECTION,
    );
    result.push(
        "psi_skew_hermitian",
        psi_skew_residual(out)?,
        tolerances::CONNECTION,
    );
    result.push(
        "canonical_parallel_j",
        out.canonical.j_residual(out.frame.j_adapted()),
        tolerances::CONNECTION,
    );
    result.push(
        "canonical_parallel_g",
        out.canonical.metric_residual(out.frame.metric_adapted()),
        tolerances::CONNECTION,
    );
    Ok(result)
}

/// The expected-value tables for a family point; explicit manifolds have
/// none.
pub fn expected_for(spec: &AlmostHermitianSpec) -> Result<ExpectedResults> {
    match &spec.family {
        FamilyParams::KodairaThurston(p) => expected_kodaira(p.a),
        FamilyParams::Nakamura(def) => expected_nakamura(def.t()),
        FamilyParams::Generic => Err(AkgeoError::SpecFile(
            "no closed-form tables exist for an explicit manifold; \
             verification needs a named family"
                .to_string(),
        )),
    }
}

/// One-parameter sweep `param=start:step:end`, endpoints inclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSweep {
    pub param: String,
    pub values: Vec<f64>,
}

/// Parses a sweep such as `t4=0:0.1:0.3`.
pub fn parse_grid(text: &str) -> Result<GridSweep> {
    let bad = || AkgeoError::SpecFile(format!("grid `{text}` is not `param=start:step:end`"));
    let (param, rest) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = rest
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, step, end] = parts.as_slice() else {
        return Err(bad());
    };
    if !step.is_finite() || *step <= 0.0 || start > end {
        return Err(AkgeoError::SpecFile(format!(
            "grid `{text}` needs a positive step and start <= end"
        )));
    }
    let mut values = Vec::new();
    for k in 0.. {
        let v = start + step * k as f64;
        // Half-step slack absorbs accumulated rounding at the endpoint.
        if v > end + step * 0.5 {
            break;
        }
        // Decimal grids accumulate binary noise; 12 digits restore the
        // intended values.
        values.push(sig12(v));
        if values.len() > 10_000 {
            return Err(AkgeoError::SpecFile(format!(
                "grid `{text}` expands to more than 10000 points"
            )));
        }
    }
    Ok(GridSweep {
        param: param.trim().to_string(),
        values,
    })
}

fn respec(spec: &AlmostHermitianSpec, param: &str, value: f64) -> Result<AlmostHermitianSpec> {
    match &spec.family {
        FamilyParams::KodairaThurston(_) => {
            if param == "a" {
                kodaira_thurston(value)
            } else {
                Err(AkgeoError::SpecFile(format!(
                    "unknown sweep parameter `{param}` for the kodaira_thurston family"
                )))
            }
        }
        FamilyParams::Nakamura(def) => {
            let mut t = def.t();
            match param {
                "t1" => t[0] = value,
                "t2" => t[1] = value,
                "t3" => t[2] = value,
                "t4" => t[3] = value,
                "zeta" => return nakamura_with_zeta(def.t(), value),
                _ => {
                    return Err(AkgeoError::SpecFile(format!(
                        "unknown sweep parameter `{param}` for the nakamura family"
                    )));
                }
            }
            nakamura_with_zeta(t, def.zeta())
        }
        FamilyParams::Generic => Err(AkgeoError::SpecFile(
            "parameter sweeps need a named family".to_string(),
        )),
    }
}

/// Verifies a family spec against its tables, optionally swept along one
/// parameter. Structural identity checks are included at every point.
pub fn verify_spec(
    spec: &AlmostHermitianSpec,
    sweep: Option<&GridSweep>,
    options: &PipelineOptions,
) -> Result<Vec<(String, VerificationResult)>> {
    let points: Vec<AlmostHermitianSpec> = match sweep {
        None => vec![spec.clone()],
        Some(sw) => sw
            .values
            .iter()
            .map(|v| respec(spec, &sw.param, *v))
            .collect::<Result<_>>()?,
    };
    let mut results = Vec::new();
    for point in points {
        let out = run_pipeline(&point, options)?;
        let expected = expected_for(&point)?;
        let mut res = structural_checks(&out)?;
        res.merge(verify(&out, &expected, options.tolerance)?);
        results.push((point.name.clone(), res));
    }
    Ok(results)
}

/// One wedge monomial of a report form, with 1-based indices.
#[derive(Clone, Debug, Serialize)]
pub struct TermJson {
    pub indices: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// A form as a list of monomials over the frame named in context.
#[derive(Clone, Debug, Serialize)]
pub struct FormJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationJson {
    pub integrable: bool,
    pub almost_kahler: bool,
    pub quasi_kahler: bool,
    pub nijenhuis_max: f64,
    pub d_omega_max: f64,
    pub quasi_kahler_residual: f64,
}

/// One `(1,1)`-curvature coefficient `R^i_{j k lbar}`, 1-based.
#[derive(Clone, Debug, Serialize)]
pub struct Psi11Json {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlurigenusJson {
    pub delta: f64,
    pub mode_bound: i64,
    pub per_m: BTreeMap<u32, u8>,
    pub kappa: String,
    pub discriminant_at_zero: BTreeMap<u32, f64>,
    pub solutions: BTreeMap<u32, Vec<(i64, i64)>>,
}

/// Full machine-readable analysis report.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub dim: usize,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub classification: ClassificationJson,
    pub frame_labels: Vec<String>,
    pub adapted_labels: Vec<String>,
    pub unitary_labels: Vec<String>,
    /// Nijenhuis component 2-forms over the original frame.
    pub nijenhuis: Vec<FormJson>,
    /// `gamma[i][k][j]` coefficient tables in the adapted frame.
    pub levi_civita_gamma: Vec<Vec<Vec<f64>>>,
    pub canonical_gamma: Vec<Vec<Vec<f64>>>,
    /// Real connection 1-forms of the canonical connection, adapted frame.
    pub connection_real: Vec<Vec<FormJson>>,
    /// Unitary connection 1-forms.
    pub theta: Vec<Vec<FormJson>>,
    pub torsion_complex: Vec<FormJson>,
    pub torsion_real: Vec<FormJson>,
    /// Unitary curvature 2-forms.
    pub psi: Vec<Vec<FormJson>>,
    pub psi11: Vec<Psi11Json>,
    /// Real curvature 2-forms, adapted frame.
    pub omega_real: Vec<Vec<FormJson>>,
    pub ricci_complex: ComplexMatrixJson,
    pub scal_complex: f64,
    pub ricci_real: Vec<Vec<f64>>,
    pub scal_real: f64,
    pub plurigenus: Option<PlurigenusJson>,
    pub verification: Option<VerificationResult>,
}

fn form_json(f: &InvariantForm) -> FormJson {
    FormJson {
        degree: f.degree(),
        terms: f
            .terms()
            .map(|(idx, c)| TermJson {
                indices: idx.iter().map(|i| i + 1).collect(),
                re: sig12(c.re),
                im: sig12(c.im),
            })
            .collect(),
    }
}

fn form_grid_json(grid: &[Vec<InvariantForm>]) -> Vec<Vec<FormJson>> {
    grid.iter()
        .map(|row| row.iter().map(form_json).collect())
        .collect()
}

fn gamma_json(conn: &RealConnection) -> Vec<Vec<Vec<f64>>> {
    conn.gamma
        .iter()
        .map(|m| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| sig12(m[(r, c)])).collect())
                .collect()
        })
        .collect()
}

fn real_matrix_json(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| sig12(m[(r, c)])).collect())
        .collect()
}

fn complex_matrix_json(m: &DMatrix<Complex64>) -> ComplexMatrixJson {
    ComplexMatrixJson {
        re: (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| sig12(m[(r, c)].re)).collect())
            .collect(),
        im: (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| sig12(m[(r, c)].im)).collect())
            .collect(),
    }
}

fn family_params(spec: &AlmostHermitianSpec) -> (String, BTreeMap<String, f64>) {
    match &spec.family {
        FamilyParams::KodairaThurston(p) => (
            "kodaira_thurston".to_string(),
            BTreeMap::from([("a".to_string(), sig12(p.a))]),
        ),
        FamilyParams::Nakamura(def) => {
            let t = def.t();
            let mut params = BTreeMap::new();
            for (i, v) in t.iter().enumerate() {
                params.insert(format!("t{}", i + 1), sig12(*v));
            }
            params.insert("zeta".to_string(), sig12(def.zeta()));
            ("nakamura".to_string(), params)
        }
        FamilyParams::Generic => ("generic".to_string(), BTreeMap::new()),
    }
}

/// Assembles the serializable report from a pipeline run.
pub fn build_report(out: &PipelineOutput, verification: Option<VerificationResult>) -> Report {
    let (family, params) = family_params(&out.spec);
    let flags = &out.flags;
    Report {
        name: out.spec.name.clone(),
        dim: out.spec.algebra.dim(),
        family,
        params,
        classification: ClassificationJson {
            integrable: flags.integrable,
            almost_kahler: flags.almost_kahler,
            quasi_kahler: flags.quasi_kahler,
            nijenhuis_max: sig12(flags.nijenhuis_max),
            d_omega_max: sig12(flags.d_omega_max),
            quasi_kahler_residual: sig12(flags.quasi_kahler_residual),
        },
        frame_labels: out.spec.algebra.frame_labels().to_vec(),
        adapted_labels: out.frame.algebra_adapted().frame_labels().to_vec(),
        unitary_labels: out.frame.complex_algebra().frame_labels().to_vec(),
        nijenhuis: out.nijenhuis.components.iter().map(form_json).collect(),
        levi_civita_gamma: gamma_json(&out.levi_civita),
        canonical_gamma: gamma_json(&out.canonical),
        connection_real: form_grid_json(&out.real_curvature.connection_forms),
        theta: form_grid_json(&out.theta.theta),
        torsion_complex: out.torsion_complex.iter().map(form_json).collect(),
        torsion_real: out.torsion_real.iter().map(form_json).collect(),
        psi: form_grid_json(&out.complex_curvature.psi),
        psi11: out
            .complex_curvature
            .psi11_coeffs
            .iter()
            .map(|(&(i, j, k, l), c)| Psi11Json {
                i: i + 1,
                j: j + 1,
                k: k + 1,
                l: l + 1,
                re: sig12(c.re),
                im: sig12(c.im),
            })
            .collect(),
        omega_real: form_grid_json(&out.real_curvature.omega_real),
        ricci_complex: complex_matrix_json(&out.complex_curvature.ricci_complex),
        scal_complex: sig12(out.complex_curvature.scal_complex),
        ricci_real: real_matrix_json(&out.real_curvature.ricci_real),
        scal_real: sig12(out.real_curvature.scal_real),
        plurigenus: out.plurigenus.as_ref().map(|r| PlurigenusJson {
            delta: sig12(r.evidence.delta),
            mode_bound: r.evidence.mode_bound,
            per_m: r.per_m.clone(),
            kappa: r.kappa.as_str().to_string(),
            discriminant_at_zero: r
                .evidence
                .discriminant_at_zero
                .iter()
                .map(|(k, v)| (*k, sig12(*v)))
                .collect(),
            solutions: r.evidence.solutions.clone(),
        }),
        verification,
    }
}

/// Pretty JSON with a trailing newline.
pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn write_form_lines(
    s: &mut String,
    heading: &str,
    names: impl Iterator<Item = String>,
    forms: impl Iterator<Item = InvariantForm>,
    labels: &[String],
    skip_zero: bool,
) {
    let _ = writeln!(s, "{heading}");
    let mut any = false;
    for (name, form) in names.zip(forms) {
        if skip_zero && form.is_zero() {
            continue;
        }
        any = true;
        let _ = writeln!(s, "  {name} = {}", form.format_with_labels(labels));
    }
    if !any {
        let _ = writeln!(s, "  all zero");
    }
}

fn grid_names(n: usize, base: &str) -> impl Iterator<Item = String> {
    let base = base.to_string();
    (0..n).flat_map(move |i| {
        let base = base.clone();
        (0..n).map(move |j| format!("{base}^{}_{}", i + 1, j + 1))
    })
}

/// Human-readable report.
pub fn render_text(out: &PipelineOutput, verification: Option<&VerificationResult>) -> String {
    let mut s = String::new();
    let spec = &out.spec;
    let dim = spec.algebra.dim();
    let (family, params) = family_params(spec);
    let _ = writeln!(s, "== {} ==", spec.name);
    let _ = write!(s, "dimension {dim}, family {family}");
    for (k, v) in &params {
        let _ = write!(s, ", {k} = {v}");
    }
    s.push('\n');
    let f = &out.flags;
    let _ = writeln!(
        s,
        "classification: integrable = {}, almost Kahler = {}, quasi Kahler = {}",
        f.integrable, f.almost_kahler, f.quasi_kahler
    );
    let _ = writeln!(
        s,
        "  |N|_max = {:.3e}, |d omega|_max = {:.3e}, quasi-Kahler residual = {:.3e}",
        f.nijenhuis_max, f.d_omega_max, f.quasi_kahler_residual
    );

    let labels_orig = spec.algebra.frame_labels();
    let labels_adapted = out.frame.algebra_adapted().frame_labels();
    let labels_unitary = out.frame.complex_algebra().frame_labels();

    write_form_lines(
        &mut s,
        "\nNijenhuis tensor (original frame):",
        (0..dim).map(|k| format!("N^{}", k + 1)),
        out.nijenhuis.components.iter().cloned(),
        labels_orig,
        true,
    );
    write_form_lines(
        &mut s,
        "\nCanonical connection 1-forms (adapted orthonormal frame):",
        grid_names(dim, "w"),
        out.real_curvature
            .connection_forms
            .iter()
            .flatten()
            .cloned(),
        labels_adapted,
        true,
    );
    let n = out.frame.n();
    write_form_lines(
        &mut s,
        "\nUnitary connection 1-forms:",
        grid_names(n, "theta"),
        out.theta.theta.iter().flatten().cloned(),
        labels_unitary,
        false,
    );
    write_form_lines(
        &mut s,
        "\nComplex torsion 2-forms:",
        (0..n).map(|i| format!("T^{}", i + 1)),
        out.torsion_complex.iter().cloned(),
        labels_unitary,
        false,
    );
    write_form_lines(
        &mut s,
        "\nReal torsion 2-forms (adapted frame):",
        (0..dim).map(|i| format!("Theta^{}", i + 1)),
        out.torsion_real.iter().cloned(),
        labels_adapted,
        true,
    );
    write_form_lines(
        &mut s,
        "\nUnitary curvature 2-forms:",
        grid_names(n, "Psi"),
        out.complex_curvature.psi.iter().flatten().cloned(),
        labels_unitary,
        true,
    );
    write_form_lines(
        &mut s,
        "\nReal curvature 2-forms (adapted frame):",
        grid_names(dim, "Omega"),
        out.real_curvature.omega_real.iter().flatten().cloned(),
        labels_adapted,
        true,
    );

    s.push_str("\nComplex Ricci matrix:\n");
    let rc = &out.complex_curvature.ricci_complex;
    for r in 0..n {
        let row: Vec<String> = (0..n).map(|c| format_complex(rc[(r, c)])).collect();
        let _ = writeln!(s, "  [ {} ]", row.join(", "));
    }
    let _ = writeln!(
        s,
        "complex scalar curvature = {:.9}",
        out.complex_curvature.scal_complex
    );
    s.push_str("\nReal Ricci matrix:\n");
    let rr = &out.real_curvature.ricci_real;
    for r in 0..dim {
        let row: Vec<String> = (0..dim).map(|c| format!("{:.9}", rr[(r, c)])).collect();
        let _ = writeln!(s, "  [ {} ]", row.join(", "));
    }
    let _ = writeln!(
        s,
        "real scalar curvature = {:.9}",
        out.real_curvature.scal_real
    );

    if let Some(p) = &out.plurigenus {
        s.push_str("\nPlurigenera:\n");
        for (m, value) in &p.per_m {
            let _ = writeln!(s, "  P_{m} = {value}");
        }
        let _ = writeln!(s, "Kodaira dimension = {}", p.kappa.as_str());
        let _ = writeln!(
            s,
            "  delta = {:.3e}, mode search bound = {}",
            p.evidence.delta + 0.0,
            p.evidence.mode_bound
        );
    }

    if let Some(v) = verification {
        s.push_str("\nVerification:\n");
        for item in &v.items {
            let _ = writeln!(
                s,
                "  [{}] {}: residual {:.3e} (tolerance {:.1e})",
                if item.pass { "PASS" } else { "FAIL" },
                item.name,
                item.residual,
                item.tolerance
            );
        }
        let _ = writeln!(s, "overall: {}", if v.pass { "PASS" } else { "FAIL" });
    }
    s
}

/// Built-in acceptance checks shared by the CLI and the test suite.
pub mod checks {
    use super::*;
    use crate::model_families::{
        dbar_phi2_residual, deformation_coefficients, dual_path_residual, KodairaDimension,
        NakamuraDeformation,
    };
    use crate::plurigenus_analysis::{ellipticity_check, plurigenus_with_bound};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Outcome of one acceptance criterion.
    #[derive(Clone, Debug)]
    pub struct CriterionOutcome {
        pub index: usize,
        pub name: &'static str,
        pub passed: bool,
        pub detail: String,
    }

    impl CriterionOutcome {
        /// One-line pass/fail summary.
        pub fn line(&self) -> String {
            format!(
                "criterion {} [{}] {}: {}",
                self.index,
                if self.passed { "PASS" } else { "FAIL" },
                self.name,
                self.detail
            )
        }
    }

    const KT_SAMPLES: [f64; 4] = [0.5, 1.0, 2.0, 3.7];

    fn guard(
        index: usize,
        name: &'static str,
        body: impl FnOnce() -> Result<(bool, String)>,
    ) -> CriterionOutcome {
        match body() {
            Ok((passed, detail)) => CriterionOutcome {
                index,
                name,
                passed,
                detail,
            },
            Err(e) => CriterionOutcome {
                index,
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }

    // Small mode bound: plurigenus correctness at full bound is criterion 7's
    // job; grid-wide pipeline runs only need the decision.
    fn grid_options() -> PipelineOptions {
        PipelineOptions {
            tolerance: 1e-9,
            m_max: 1,
            mode_bound: 100,
        }
    }

    /// The 3^4 deformation-parameter grid used by the family criteria.
    pub fn nakamura_grid() -> Vec<[f64; 4]> {
        let vals = [-0.3, 0.0, 0.3];
        let mut pts = Vec::with_capacity(81);
        for &t1 in &vals {
            for &t2 in &vals {
                for &t3 in &vals {
                    for &t4 in &vals {
                        pts.push([t1, t2, t3, t4]);
                    }
                }
            }
        }
        pts
    }

    fn random_points(count: usize) -> Vec<[f64; 4]> {
        // Fixed seed keeps runs reproducible; |t_i| < 0.6 keeps every pair
        // norm below 1.
        let mut rng = StdRng::seed_from_u64(0x00AD_11CE);
        (0..count)
            .map(|_| {
                [
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                ]
            })
            .collect()
    }

    /// Real scalar curvature of the Kodaira-Thurston surface is `-a^2/8`.
    pub fn criterion_1() -> CriterionOutcome {
        guard(1, "kodaira-thurston real scalar curvature", || {
            let mut worst: f64 = 0.0;
            for a in KT_SAMPLES {
                let out = run_pipeline(&kodaira_thurston(a)?, &grid_options())?;
                worst = worst.max((out.real_curvature.scal_real + a * a / 8.0).abs());
            }
            Ok((
                worst < 1e-9,
                format!("worst residual {worst:.3e} over a in {KT_SAMPLES:?} (tol 1e-9)"),
            ))
        })
    }

    /// Real Ricci matrix is `diag(0, 0, -3a^2/8, a^2/4)`.
    pub fn criterion_2() -> CriterionOutcome {
        guard(2, "kodaira-thurston real Ricci matrix", || {
            let mut worst: f64 = 0.0;
            for a in KT_SAMPLES {
                let out = run_pipeline(&kodaira_thurston(a)?, &grid_options())?;
                let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![
                    0.0,
                    0.0,
                    -3.0 * a * a / 8.0,
                    a * a / 4.0,
                ]));
                worst = worst.max(real_matrix_residual(
                    &expected,
                    &out.real_curvature.ricci_real,
                )?);
            }
            Ok((
                worst < 1e-9,
                format!("worst residual {worst:.3e} (tol 1e-9)"),
            ))
        })
    }

    /// Complex Ricci curvature vanishes identically while the displayed
    /// `(1,1)`-curvature coefficients are nonzero and match.
    pub fn criterion_3() -> CriterionOutcome {
        guard(3, "kodaira-thurston complex Ricci and coefficients", || {
            let mut worst: f64 = 0.0;
            for a in KT_SAMPLES {
                let out = run_pipeline(&kodaira_thurston(a)?, &grid_options())?;
                let exp = expected_kodaira(a)?;
                let ricci = out
                    .complex_curvature
                    .ricci_complex
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                let coeffs = psi11_residual(
                    exp.psi11_coeffs.as_ref().expect("table present"),
                    &out.complex_curvature.psi11_coeffs,
                );
                worst = worst.max(ricci).max(coeffs);
            }
            Ok((
                worst < 1e-9,
                format!("worst residual {worst:.3e} (tol 1e-9)"),
            ))
        })
    }

    /// Connection and curvature matrices match the closed forms entrywise in
    /// both the adapted real frame and the unitary frame.
    pub fn criterion_4() -> CriterionOutcome {
        guard(
            4,
            "kodaira-thurston connection and curvature tables",
            || {
                let mut worst: f64 = 0.0;
                for a in KT_SAMPLES {
                    let out = run_pipeline(&kodaira_thurston(a)?, &grid_options())?;
                    let exp = expected_kodaira(a)?;
                    worst = worst
                        .max(matrix_entry_residual(
                            exp.connection_real_entries.as_ref().expect("table present"),
                            &out.real_curvature.connection_forms,
                        )?)
                        .max(matrix_entry_residual(
                            exp.omega_real_entries.as_ref().expect("table present"),
                            &out.real_curvature.omega_real,
                        )?)
                        .max(matrix_entry_residual(
                            exp.theta_entries.as_ref().expect("table present"),
                            &out.theta.theta,
                        )?)
                        .max(matrix_entry_residual(
                            exp.psi_entries.as_ref().expect("table present"),
                            &out.complex_curvature.psi,
                        )?);
                }
                Ok((
                    worst < 1e-10,
                    format!("worst entry residual {worst:.3e} (tol 1e-10)"),
                ))
            },
        )
    }

    /// Over the deformation grid the complex Ricci curvature vanishes and the
    /// unitary connection and torsion match the closed forms.
    pub fn criterion_5() -> CriterionOutcome {
        guard(5, "nakamura Ricci-flatness and connection tables", || {
            let mut worst_ricci: f64 = 0.0;
            let mut worst_tables: f64 = 0.0;
            for t in nakamura_grid() {
                let out = run_pipeline(&nakamura(t)?, &grid_options())?;
                let exp = expected_nakamura(t)?;
                worst_ricci = worst_ricci.max(
                    out.complex_curvature
                        .ricci_complex
                        .iter()
                        .map(|c| c.norm())
                        .fold(0.0, f64::max),
                );
                worst_tables = worst_tables
                    .max(matrix_entry_residual(
                        exp.theta_entries.as_ref().expect("table present"),
                        &out.theta.theta,
                    )?)
                    .max(forms_residual(
                        exp.torsion_complex.as_ref().expect("table present"),
                        &out.torsion_complex,
                    )?);
            }
            Ok((
                worst_ricci < 1e-8 && worst_tables < 1e-9,
                format!(
                    "81 grid points: max |Ricci| {worst_ricci:.3e} (tol 1e-8), \
                     worst table residual {worst_tables:.3e} (tol 1e-9)"
                ),
            ))
        })
    }

    /// Kodaira-dimension phase diagram: kappa = 0 exactly on the t4 = 0
    /// locus, with plurigenera constant in m up to 10.
    pub fn criterion_6() -> CriterionOutcome {
        guard(6, "kodaira dimension phase diagram", || {
            let mut points = nakamura_grid();
            points.extend(random_points(20));
            let mut failures = Vec::new();
            for t in &points {
                let def = NakamuraDeformation::new(*t)?;
                let result = kodaira_dimension_with_bound(&def, 10, 100)?;
                let want = if t[3].abs() < tolerances::DELTA_ZERO {
                    KodairaDimension::Zero
                } else {
                    KodairaDimension::MinusInfinity
                };
                if result.kappa != want {
                    failures.push(format!("t = {t:?} gave {}", result.kappa.as_str()));
                }
            }
            Ok((
                failures.is_empty(),
                if failures.is_empty() {
                    format!(
                        "{} points (81 grid + 20 random), P_m constant for m <= 10",
                        points.len()
                    )
                } else {
                    failures.join("; ")
                },
            ))
        })
    }

    /// The exhaustive mode search at bound 1000 agrees with the discriminant
    /// classification at every tested point.
    pub fn criterion_7() -> CriterionOutcome {
        guard(7, "mode-search and discriminant equivalence", || {
            let mut pairs = 0usize;
            let mut failures = Vec::new();
            for t in nakamura_grid() {
                let def = NakamuraDeformation::new(t)?;
                for m in [1u32, 5, 10] {
                    // Any oracle disagreement surfaces as an error here.
                    let p = plurigenus_with_bound(&def, m, 1000)?;
                    let want = u8::from(t[3].abs() < tolerances::DELTA_ZERO);
                    if p != want {
                        failures.push(format!("t = {t:?}, m = {m}: P = {p}"));
                    }
                    pairs += 1;
                }
            }
            for t in random_points(20) {
                let def = NakamuraDeformation::new(t)?;
                let p = plurigenus_with_bound(&def, 1, 1000)?;
                if p != 0 {
                    failures.push(format!("t = {t:?}, m = 1: P = {p}"));
                }
                pairs += 1;
            }
            Ok((
                failures.is_empty(),
                if failures.is_empty() {
                    format!("{pairs} (t, m) pairs at mode bound 1000, all oracles agree")
                } else {
                    failures.join("; ")
                },
            ))
        })
    }

    /// Structural identity suite over both families.
    pub fn criterion_8() -> CriterionOutcome {
        guard(8, "structural identities", || {
            let specs = [
                kodaira_thurston(0.5)?,
                kodaira_thurston(2.0)?,
                nakamura([0.0; 4])?,
                nakamura([0.1, -0.2, 0.25, 0.15])?,
            ];
            let mut items: Vec<(&str, f64, f64)> = Vec::new();
            let mut d2: f64 = 0.0;
            let mut t_nij: f64 = 0.0;
            let mut t_bracket: f64 = 0.0;
            let mut skew_theta: f64 = 0.0;
            let mut skew_psi: f64 = 0.0;
            let mut parallel: f64 = 0.0;
            for spec in &specs {
                let out = run_pipeline(spec, &grid_options())?;
                d2 = d2.max(d_squared_residual(&spec.algebra)?);
                let (a, b) = torsion_identity_residuals(&out)?;
                t_nij = t_nij.max(a);
                t_bracket = t_bracket.max(b);
                skew_theta = skew_theta.max(out.theta.skew_hermitian_residual(&out.frame)?);
                skew_psi = skew_psi.max(psi_skew_residual(&out)?);
                parallel = parallel
                    .max(out.canonical.j_residual(out.frame.j_adapted()))
                    .max(out.canonical.metric_residual(out.frame.metric_adapted()));
            }
            items.push(("d^2", d2, 1e-12));
            items.push(("torsion vs Nijenhuis", t_nij, 1e-9));
            items.push(("torsion vs bracket", t_bracket, 1e-9));
            items.push(("theta skew-Hermitian", skew_theta, 1e-10));
            items.push(("psi skew-Hermitian", skew_psi, 1e-10));
            items.push(("canonical parallelism", parallel, 1e-10));

            let mut identities: f64 = 0.0;
            let mut dual: f64 = 0.0;
            let mut dbar: f64 = 0.0;
            for t in nakamura_grid() {
                let c = deformation_coefficients(t)?;
                identities = identities
                    .max((-c.alpha * c.alpha - c.beta * c.gamma - 1.0).abs())
                    .max((-c.delta * c.delta - c.lambda * c.mu - 1.0).abs());
                dual = dual.max(dual_path_residual(t)?);
                dbar = dbar.max(dbar_phi2_residual(&nakamura(t)?)?);
            }
            items.push(("coefficient identities", identities, 1e-12));
            items.push(("J_t dual construction", dual, 1e-12));
            items.push(("dbar Phi^2", dbar, 1e-10));

            let passed = items.iter().all(|(_, r, tol)| r < tol);
            let detail = items
                .iter()
                .map(|(name, r, tol)| format!("{name} {r:.2e}/{tol:.0e}"))
                .collect::<Vec<_>>()
                .join(", ");
            Ok((passed, detail))
        })
    }

    /// The deformed Dolbeault symbol stays uniformly elliptic over the grid.
    pub fn criterion_9() -> CriterionOutcome {
        guard(9, "uniform ellipticity of the symbol", || {
            let mut min_margin = f64::INFINITY;
            let mut worst_det: f64 = 0.0;
            for t in nakamura_grid() {
                let def = NakamuraDeformation::new(t)?;
                let report = ellipticity_check(&def, 16)?;
                min_margin = min_margin.min(report.min_eigenvalue);
                worst_det = worst_det.max(report.max_block_det_residual);
            }
            Ok((
                min_margin > 1e-10,
                format!(
                    "min symbol eigenvalue {min_margin:.3e} over 81 points x 16 samples, \
                     block-determinant residual {worst_det:.3e}"
                ),
            ))
        })
    }

    /// All built-in criteria in order.
    pub fn run_all() -> Vec<CriterionOutcome> {
        vec![
            criterion_1(),
            criterion_2(),
            criterion_3(),
            criterion_4(),
            criterion_5(),
            criterion_6(),
            criterion_7(),
            criterion_8(),
            criterion_9(),
        ]
    }
}
