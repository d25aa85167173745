//! Property tests for the exterior calculus, frame changes, and the
//! plurigenus decision, checked over randomized inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use akgeo::cli_report::{run_pipeline, structural_checks, PipelineOptions};
use akgeo::hermitian_geometry::type_decompose;
use akgeo::invariant_algebra::{FrameChange, FrameTag, InvariantAlgebra, InvariantForm};
use akgeo::model_families::{kodaira_thurston, nakamura, NakamuraDeformation};
use akgeo::plurigenus_analysis::{
    brute_force_modes, discriminant, kodaira_dimension_with_bound, mode_equation,
};

/// Zero thresholds for exact algebraic identities evaluated in floating
/// point; inputs are O(1), so a few hundred ulps suffice.
const IDENTITY_TOL: f64 = 1e-12;

fn tag() -> FrameTag {
    FrameTag::new("E")
}

fn labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("E{i}")).collect()
}

/// Two-step nilpotent algebra in dimension 6: brackets of the four
/// generators land in the 2-dimensional center, so all double brackets
/// vanish and Jacobi holds for any coefficients.
fn two_step_algebra(coeffs: &[f64; 12]) -> InvariantAlgebra {
    let mut triples = Vec::new();
    let mut it = coeffs.iter();
    for i in 0..4 {
        for j in (i + 1)..4 {
            triples.push((i, j, 4, *it.next().unwrap()));
            triples.push((i, j, 5, *it.next().unwrap()));
        }
    }
    InvariantAlgebra::new(6, labels(6), tag(), &triples).expect("two-step algebra")
}

fn small_coeff() -> impl Strategy<Value = f64> {
    // Bounded away from huge values so residuals stay comparable to 1.
    (-4.0..4.0f64).prop_map(|x| (x * 8.0).round() / 8.0)
}

fn form_from_coeffs(dim: usize, degree: usize, coeffs: &[(Vec<usize>, f64, f64)]) -> InvariantForm {
    let mut f = InvariantForm::zero(dim, degree, tag());
    for (idx, re, im) in coeffs {
        f.add_term(idx, Complex64::new(*re, *im))
            .expect("valid index");
    }
    f
}

fn one_form_strategy(dim: usize) -> impl Strategy<Value = InvariantForm> {
    proptest::collection::vec((small_coeff(), small_coeff()), dim).prop_map(move |cs| {
        let coeffs: Vec<(Vec<usize>, f64, f64)> = cs
            .into_iter()
            .enumerate()
            .map(|(i, (re, im))| (vec![i], re, im))
            .collect();
        form_from_coeffs(dim, 1, &coeffs)
    })
}

fn two_form_strategy(dim: usize) -> impl Strategy<Value = InvariantForm> {
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| ((i + 1)..dim).map(move |j| (i, j)))
        .collect();
    proptest::collection::vec((small_coeff(), small_coeff()), pairs.len()).prop_map(move |cs| {
        let coeffs: Vec<(Vec<usize>, f64, f64)> = cs
            .into_iter()
            .zip(&pairs)
            .map(|((re, im), &(i, j))| (vec![i, j], re, im))
            .collect();
        form_from_coeffs(dim, 2, &coeffs)
    })
}

fn nakamura_params() -> impl Strategy<Value = [f64; 4]> {
    // |t_i| <= 0.6 keeps both coefficient pairs inside the unit disc.
    proptest::array::uniform4(-0.6..0.6f64)
}

fn wall_params() -> impl Strategy<Value = [f64; 4]> {
    // t4 is exactly on the wall or clearly off it; the decision threshold
    // sits at 1e-12, far below 1e-3.
    (
        -0.6..0.6f64,
        -0.6..0.6f64,
        -0.6..0.6f64,
        prop_oneof![Just(0.0f64), 0.001..0.6f64, -0.6..-0.001f64],
    )
        .prop_map(|(t1, t2, t3, t4)| [t1, t2, t3, t4])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_squared_vanishes_on_two_step_algebras(coeffs in proptest::array::uniform12(-3.0..3.0f64)) {
        let alg = two_step_algebra(&coeffs);
        for k in 0..alg.dim() {
            let dd = alg.exterior_derivative(&alg.d_one_form(k).unwrap()).unwrap();
            prop_assert!(dd.max_abs() < IDENTITY_TOL);
        }
    }

    #[test]
    fn d_squared_vanishes_on_family_points(a in 0.2..4.0f64, t in nakamura_params()) {
        for alg in [&kodaira_thurston(a).unwrap().algebra, &nakamura(t).unwrap().algebra] {
            for k in 0..alg.dim() {
                let dd = alg.exterior_derivative(&alg.d_one_form(k).unwrap()).unwrap();
                prop_assert!(dd.max_abs() < IDENTITY_TOL);
            }
        }
    }

    #[test]
    fn wedge_is_graded_commutative(
        a in one_form_strategy(6),
        b in one_form_strategy(6),
        p in two_form_strategy(6),
    ) {
        // Odd times odd anticommutes.
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        prop_assert!(ab.add(&ba).unwrap().max_abs() < IDENTITY_TOL);
        // Odd times even commutes.
        let ap = a.wedge(&p).unwrap();
        let pa = p.wedge(&a).unwrap();
        prop_assert!(ap.max_abs_diff(&pa) < IDENTITY_TOL);
    }

    #[test]
    fn wedge_is_associative(
        a in one_form_strategy(6),
        b in one_form_strategy(6),
        c in one_form_strategy(6),
    ) {
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < IDENTITY_TOL);
    }

    #[test]
    fn d_is_an_antiderivation(
        coeffs in proptest::array::uniform12(-3.0..3.0f64),
        a in one_form_strategy(6),
        b in one_form_strategy(6),
    ) {
        let alg = two_step_algebra(&coeffs);
        let lhs = alg.exterior_derivative(&a.wedge(&b).unwrap()).unwrap();
        let da_b = alg.exterior_derivative(&a).unwrap().wedge(&b).unwrap();
        let a_db = a.wedge(&alg.exterior_derivative(&b).unwrap()).unwrap();
        let rhs = da_b.add(&a_db.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < IDENTITY_TOL);
    }

    #[test]
    fn frame_changes_round_trip(
        entries in proptest::array::uniform16(-1.0..1.0f64),
        form in two_form_strategy(4),
    ) {
        // Diagonal dominance keeps the matrix far from singular.
        let mut m = DMatrix::<f64>::from_row_slice(4, 4, &entries);
        for i in 0..4 {
            m[(i, i)] += 5.0;
        }
        let fc = FrameChange::from_real(m.clone(), tag(), FrameTag::new("F")).unwrap();
        let back = FrameChange::from_real(
            m.try_inverse().unwrap(),
            FrameTag::new("F"),
            tag(),
        )
        .unwrap();
        let there = fc.transform_form(&form).unwrap();
        let again = back.transform_form(&there).unwrap();
        prop_assert!(form.max_abs_diff(&again) < 1e-10);
    }

    #[test]
    fn d_commutes_with_frame_changes(
        coeffs in proptest::array::uniform12(-2.0..2.0f64),
        entries in proptest::array::uniform16(-1.0..1.0f64),
        form in one_form_strategy(6),
    ) {
        let alg = two_step_algebra(&coeffs);
        let mut m = DMatrix::<f64>::identity(6, 6);
        // Mix the four generators only; the center stays put so the image
        // algebra is still honest.
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = entries[4 * i + j] + if i == j { 5.0 } else { 0.0 };
            }
        }
        let fc = FrameChange::from_real(m, tag(), FrameTag::new("F")).unwrap();
        let new_labels = (1..=6).map(|i| format!("F{i}")).collect();
        let new_alg = fc.transform_algebra(&alg, new_labels).unwrap();
        let d_then_move = fc.transform_form(&alg.exterior_derivative(&form).unwrap()).unwrap();
        let move_then_d = new_alg
            .exterior_derivative(&fc.transform_form(&form).unwrap())
            .unwrap();
        prop_assert!(d_then_move.max_abs_diff(&move_then_d) < 1e-10);
    }

    #[test]
    fn type_decomposition_sums_and_projects(form in two_form_strategy(4)) {
        let spec = kodaira_thurston(1.0).unwrap();
        let j: DMatrix<Complex64> = spec.j.matrix().map(|x| Complex64::new(x, 0.0));
        let parts = type_decompose(&form, &j).unwrap();
        let sum = parts.f20.add(&parts.f11).unwrap().add(&parts.f02).unwrap();
        prop_assert!(sum.max_abs_diff(&form) < IDENTITY_TOL);
        // Projections are idempotent.
        let again = type_decompose(&parts.f11, &j).unwrap();
        prop_assert!(again.f11.max_abs_diff(&parts.f11) < IDENTITY_TOL);
        prop_assert!(again.f20.max_abs() < IDENTITY_TOL);
        prop_assert!(again.f02.max_abs() < IDENTITY_TOL);
    }
}

proptest! {
    // Pipeline cases run a full analysis; fewer cases keep the suite quick.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn structural_identities_hold_at_random_family_points(
        a in 0.2..4.0f64,
        t in nakamura_params(),
    ) {
        let options = PipelineOptions {
            tolerance: 1e-9,
            m_max: 1,
            mode_bound: 50,
        };
        for spec in [kodaira_thurston(a).unwrap(), nakamura(t).unwrap()] {
            let out = run_pipeline(&spec, &options).unwrap();
            let result = structural_checks(&out).unwrap();
            prop_assert!(result.pass, "failed items: {:?}", result.items);
        }
    }

    #[test]
    fn plurigenera_are_binary_and_match_the_wall(t in wall_params(), m_max in 1u32..6) {
        let def = NakamuraDeformation::new(t).unwrap();
        let result = kodaira_dimension_with_bound(&def, m_max, 200).unwrap();
        let expected_p = u8::from(t[3] == 0.0);
        for (m, p) in &result.per_m {
            prop_assert!(*m >= 1 && *m <= m_max);
            prop_assert_eq!(*p, expected_p, "t = {:?}, m = {}", t, m);
        }
        let all_one = result.per_m.values().all(|&p| p == 1);
        prop_assert_eq!(result.kappa.as_str() == "0", all_one);
    }

    #[test]
    fn mode_search_matches_the_exact_solution_set(t in wall_params(), m in 1u32..8) {
        let def = NakamuraDeformation::new(t).unwrap();
        let eq = mode_equation(&def, m).unwrap();
        let solutions = brute_force_modes(&eq, 60).unwrap();
        // On the wall the relation degenerates to a negative-definite form,
        // solved only by the trivial mode; off it nothing solves it.
        if t[3] == 0.0 {
            prop_assert_eq!(solutions, vec![(0, 0)]);
        } else {
            prop_assert_eq!(solutions, Vec::<(i64, i64)>::new());
        }
        // The discriminant stays nonpositive, strictly negative off n = 0.
        for n in [-3i64, -1, 0, 1, 3] {
            let disc = discriminant(&eq, n).unwrap();
            prop_assert!(disc <= 0.0);
            if n != 0 {
                prop_assert!(disc < -1.0);
            }
        }
    }
}
