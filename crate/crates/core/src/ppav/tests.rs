use super::io::*;
use super::*;
use crate::characteristics::theta_2m_bound;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn count(tau: &RiemannMatrix) -> CountReport {
    theta2_count(tau, DEFAULT_EPS, DEFAULT_VANISH_TOL).unwrap()
}

#[test]
fn product_constructor() {
    let t = product_ppav(&[c(0.0, 1.0), c(0.0, 2.0)]).unwrap();
    assert_eq!(t.genus(), 2);
    assert_eq!(t.entry(1, 1), c(0.0, 2.0));
    assert_eq!(t.entry(0, 1), c(0.0, 0.0));
    assert!(product_ppav(&[c(0.0, 1.0), c(1.0, 0.0)]).is_err());
    assert!(product_ppav(&[c(0.0, -1.0)]).is_err());
    assert!(product_ppav(&[]).is_err());
}

#[test]
fn random_is_deterministic_and_valid() {
    for g in 1..=4 {
        for seed in 0..10 {
            let a = random_ppav(g, seed).unwrap();
            let b = random_ppav(g, seed).unwrap();
            assert_eq!(a, b);
            for i in 0..g {
                for j in 0..g {
                    assert!(a.re()[(i, j)].abs() <= 0.5);
                    let off = if i == j { 1.0 } else { 0.0 };
                    assert!((a.im()[(i, j)] - off).abs() <= 0.25 + 1e-12);
                }
            }
        }
    }
    assert_ne!(random_ppav(2, 1).unwrap(), random_ppav(2, 2).unwrap());
    assert!(random_ppav(0, 1).is_err());
    assert!(random_ppav(5, 1).is_err());
}

#[test]
fn torsion_point_counts_and_order() {
    assert_eq!(torsion_points(2, 2).unwrap().len(), 16);
    assert_eq!(torsion_points(1, 4).unwrap().len(), 16);
    assert_eq!(torsion_points(1, 1).unwrap().len(), 1);
    let pts = torsion_points(3, 2).unwrap();
    let chars = enumerate_characteristics(3).unwrap();
    assert_eq!(pts.len(), 64);
    for (p, ch) in pts.iter().zip(&chars) {
        assert_eq!(&p.to_characteristic().unwrap(), ch);
        assert_eq!(&TorsionPoint::from_characteristic(ch), p);
    }
    assert!(matches!(
        torsion_points(4, 100),
        Err(Error::BudgetExceeded { .. })
    ));
    assert!(torsion_points(2, 0).is_err());
}

#[test]
fn torsion_point_validation_and_geometry() {
    assert!(TorsionPoint::new(vec![0, 3], vec![0, 0], 3).is_err());
    assert!(TorsionPoint::new(vec![0], vec![0, 0], 3).is_err());
    let tau = product_ppav(&[c(0.25, 1.0), c(0.0, 2.0)]).unwrap();
    let p = TorsionPoint::new(vec![1, 2], vec![3, 0], 4).unwrap();
    let z = p.to_complex(&tau);
    assert!((z[0] - c(0.25 + 0.75 * 0.25, 0.75)).norm() < 1e-15);
    assert!((z[1] - c(0.5, 0.0)).norm() < 1e-15);
    assert!(!p.is_two_torsion());
    let q = TorsionPoint::new(vec![2, 0], vec![2, 2], 4).unwrap();
    assert_eq!(q.to_characteristic().unwrap().to_string(), "[11;10]");
}

#[test]
fn classification_thresholds() {
    let tol = 1e-6;
    assert_eq!(classify(1e-9, 1e-9, tol), Verdict::Vanishes);
    assert_eq!(classify(1e-9, 2e-7, tol), Verdict::Ambiguous);
    assert_eq!(classify(5e-6, 1e-9, tol), Verdict::Ambiguous);
    assert_eq!(classify(1e-5 * 1.01, 1e-9, tol), Verdict::Nonvanishing);
    assert!(check_tolerances(1e-6, 1e-6).is_err());
    assert!(check_tolerances(1e-7, 1e-6).is_ok());
}

#[test]
fn product_counts_achieve_bound() {
    let i = c(0.0, 1.0);
    let r = count(&product_ppav(&[i, 2.0 * i]).unwrap());
    assert_eq!((r.theta_n, r.odd_count, r.even_vanishing), (7, 6, 1));
    assert!(r.achieves_bound);
    assert_eq!(count(&product_ppav(&[i, i, 1.5 * i]).unwrap()).theta_n, 37);
    assert_eq!(count(&product_ppav(&[i, i, i]).unwrap()).theta_n, 37);
    assert_eq!(count(&product_ppav(&[i]).unwrap()).theta_n, 1);
}

#[test]
fn product_counts_through_genus_five() {
    let moduli = [
        c(0.1, 1.0),
        c(-0.3, 1.2),
        c(0.5, 0.9),
        c(0.0, 1.5),
        c(0.2, 1.1),
    ];
    for g in 1..=5 {
        let r = count(&product_ppav(&moduli[..g]).unwrap());
        assert_eq!(r.theta_n, theta2_bound(g), "g={g}");
    }
}

#[test]
fn generic_genus_two_has_only_odd_points() {
    for seed in 1..=20 {
        let r = count(&random_ppav(2, seed).unwrap());
        assert_eq!(r.theta_n, 6, "seed {seed}");
        assert!(!r.achieves_bound);
    }
}

#[test]
fn quarter_periods_on_square_curve() {
    let tau = product_ppav(&[c(0.0, 1.0)]).unwrap();
    let r = theta_n_count(&tau, 4, DEFAULT_EPS, DEFAULT_VANISH_TOL).unwrap();
    assert_eq!(r.theta_n, 1);
    assert_eq!(r.bound, 4);
    let r = theta_n_count(&tau, 2, DEFAULT_EPS, DEFAULT_VANISH_TOL).unwrap();
    assert_eq!(r.theta_n, 1);
    let r = theta_n_count(&tau, 3, DEFAULT_EPS, DEFAULT_VANISH_TOL).unwrap();
    assert_eq!(r.theta_n, 0);
}

#[test]
fn product_quarter_periods_within_bound() {
    let i = c(0.0, 1.0);
    let r = theta_n_count(
        &product_ppav(&[i, 2.0 * i]).unwrap(),
        4,
        DEFAULT_EPS,
        DEFAULT_VANISH_TOL,
    )
    .unwrap();
    assert_eq!(r.bound, theta_2m_bound(2, 2));
    assert_eq!(r.bound, 112);
    // points with one coordinate at the odd half-period of its factor
    assert_eq!(r.theta_n, 2 * 16 - 1);
}

#[test]
fn order_two_matches_thetanull_count() {
    for tau in [
        random_ppav(2, 3).unwrap(),
        random_ppav(3, 4).unwrap(),
        product_ppav(&[c(0.0, 1.0), c(0.3, 1.4)]).unwrap(),
    ] {
        let a = count(&tau);
        let b = theta_n_count(&tau, 2, DEFAULT_EPS, DEFAULT_VANISH_TOL).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn counts_independent_of_execution() {
    let tau = random_ppav(3, 9).unwrap();
    let a = theta2_verdicts(&tau, DEFAULT_EPS, DEFAULT_VANISH_TOL, Execution::Sequential).unwrap();
    let b = theta2_verdicts(&tau, DEFAULT_EPS, DEFAULT_VANISH_TOL, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ambiguous_band_is_an_error() {
    // a product perturbed off the diagonal by about 1e-6 puts one even
    // thetanull inside the gap
    let mut im = nalgebra::DMatrix::identity(2, 2);
    im[(1, 1)] = 2.0;
    let mut re = nalgebra::DMatrix::zeros(2, 2);
    for delta in [2e-7, 5e-7, 1e-6, 2e-6, 4e-6] {
        re[(0, 1)] = delta;
        re[(1, 0)] = delta;
        let tau = RiemannMatrix::from_real_imag(re.clone(), im.clone()).unwrap();
        let v =
            theta2_verdicts(&tau, DEFAULT_EPS, DEFAULT_VANISH_TOL, Execution::Sequential).unwrap();
        if v.iter().any(|v| v.verdict == Verdict::Ambiguous) {
            assert!(matches!(
                theta2_count(&tau, DEFAULT_EPS, DEFAULT_VANISH_TOL),
                Err(Error::Ambiguous(_))
            ));
            return;
        }
    }
    panic!("no perturbation landed in the ambiguous band");
}

#[test]
fn rejects_loose_eps() {
    let tau = product_ppav(&[c(0.0, 1.0)]).unwrap();
    assert!(theta2_count(&tau, 1e-6, 1e-6).is_err());
    assert!(theta_n_count(&tau, 0, 1e-9, 1e-6).is_err());
}

#[test]
fn translates_of_zero_match_thetanulls() {
    let tau = random_ppav(2, 5).unwrap();
    let origin = vec![c(0.0, 0.0); 2];
    let a = two_torsion_translate_verdicts(
        &tau,
        &origin,
        DEFAULT_EPS,
        DEFAULT_VANISH_TOL,
        Execution::Sequential,
    )
    .unwrap();
    let b = theta2_verdicts(&tau, DEFAULT_EPS, DEFAULT_VANISH_TOL, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn divisor_points() {
    let tau = product_ppav(&[c(0.0, 1.0), c(0.2, 1.3)]).unwrap();
    let ev = ThetaEvaluator::new(&tau);
    let zero = Characteristic::zero(2).unwrap();
    let z = product_divisor_point(&tau, 1, &[c(0.1, 0.05), c(0.0, 0.0)]);
    assert!(ev.theta_scaled(&z, &zero, 1e-12).unwrap().value.norm() < 1e-11);

    let tau = random_ppav(2, 7).unwrap();
    let ev = ThetaEvaluator::new(&tau);
    let odd = Characteristic::new(&[1, 0], &[1, 0]).unwrap();
    let mut start = TorsionPoint::from_characteristic(&odd).to_complex(&tau);
    start[1] += c(0.2, 0.1);
    let z = divisor_point_near(&ev, &start, 0).expect("secant converges");
    assert!(ev.theta_scaled(&z, &zero, 1e-13).unwrap().value.norm() < 1e-11);
}

#[test]
fn period_matrix_file_round_trip() {
    let tau = random_ppav(3, 11).unwrap();
    let text = period_matrix_json(&tau);
    assert_eq!(parse_period_matrix(&text).unwrap(), tau);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tau.json");
    write_period_matrix(&path, &tau).unwrap();
    assert_eq!(read_period_matrix(&path).unwrap(), tau);

    let nested = r#"{"g": 2, "re": [[0, 0.5], [0.5, 0]], "im": [[1, 0], [0, 2]]}"#;
    let flat = r#"{"g": 2, "re": [0, 0.5, 0.5, 0], "im": [1, 0, 0, 2]}"#;
    assert_eq!(
        parse_period_matrix(nested).unwrap(),
        parse_period_matrix(flat).unwrap()
    );

    assert!(matches!(parse_period_matrix("{"), Err(Error::Parse(_))));
    assert!(parse_period_matrix(r#"{"g": 2, "re": [0], "im": [1, 0, 0, 2]}"#).is_err());
    assert!(parse_period_matrix(r#"{"g": 2, "re": [0, 0, 0, 0], "im": [1, 0, 0, -2]}"#).is_err());
    assert!(matches!(
        read_period_matrix(&dir.path().join("missing.json")),
        Err(Error::Io(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_count_is_permutation_invariant(
        moduli in proptest::collection::vec((-0.5f64..0.5, 0.8f64..2.0), 2..=3),
        rot in 0usize..3,
    ) {
        let taus: Vec<_> = moduli.iter().map(|&(x, y)| c(x, y)).collect();
        let mut permuted = taus.clone();
        permuted.rotate_left(rot % taus.len());
        permuted.swap(0, taus.len() - 1);
        let a = count(&product_ppav(&taus).unwrap());
        let b = count(&product_ppav(&permuted).unwrap());
        prop_assert_eq!(a.theta_n, b.theta_n);
        prop_assert_eq!(a.theta_n, theta2_bound(taus.len()));
    }

    #[test]
    fn random_counts_respect_bounds(g in 1usize..=3, seed in 0u64..1000) {
        let r = count(&random_ppav(g, seed).unwrap());
        prop_assert!(r.theta_n >= odd_count(g));
        prop_assert!(r.theta_n <= theta2_bound(g));
    }
}
