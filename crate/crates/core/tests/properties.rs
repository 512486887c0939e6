use proptest::prelude::*;

use qem_core::cdr::fit_regression;
use qem_core::circuit::{clifford_angle, fold_cnots, substitute_cliffords, Circuit, CliffordMask, Gate, GateKind};
use qem_core::opt::ThinPlateRbf;
use qem_core::sim::{run_noisy, NoiseModel, Pauli, PauliObservable};
use qem_core::uq::{quantile_sorted, relative_error, tvar_sorted, RiskEstimates};
use qem_core::zne::{allocate_shots, extrapolate_cubic, noise_scale, ZneConfig};
use qem_core::StateVector64;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..n, 1..n).prop_map(move |(a, s)| Gate::cnot(a, (a + s) % n).unwrap()),
        (0..n).prop_map(Gate::sqrt_x),
        (0..n, -7.0..7.0f64).prop_map(|(q, t)| Gate::rz(q, t).unwrap()),
    ]
}

fn circuit(n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate(n), 1..max_len).prop_map(move |g| Circuit::new(n, g).unwrap())
}

fn observable(n: usize) -> impl Strategy<Value = PauliObservable> {
    prop::collection::vec(0..4u8, n).prop_filter_map("identity", |ps| {
        let f: Vec<(usize, Pauli)> = ps
            .iter()
            .enumerate()
            .filter_map(|(q, &p)| match p {
                1 => Some((q, Pauli::X)),
                2 => Some((q, Pauli::Y)),
                3 => Some((q, Pauli::Z)),
                _ => None,
            })
            .collect();
        (!f.is_empty()).then(|| PauliObservable::new(f).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folding_multiplies_cnots_only(c in circuit(3, 30), k in 1usize..=10) {
        let f = fold_cnots(&c, k).unwrap();
        prop_assert_eq!(f.count(GateKind::Cnot), (2 * k - 1) * c.count(GateKind::Cnot));
        prop_assert_eq!(f.count(GateKind::Rz), c.count(GateKind::Rz));
        prop_assert_eq!(f.count(GateKind::SqrtX), c.count(GateKind::SqrtX));
        let singles = |c: &Circuit| c.gates().iter().filter(|g| g.kind() != GateKind::Cnot).copied().collect::<Vec<_>>();
        prop_assert_eq!(singles(&f), singles(&c));
    }

    #[test]
    fn substitution_keeps_structure(c in circuit(3, 30), powers in prop::collection::vec(0u8..4, 30)) {
        let rz = c.rz_positions();
        let mask = CliffordMask::new(&c, rz.clone()).unwrap();
        let assignment: Vec<f64> = powers.iter().take(rz.len()).map(|&p| clifford_angle(p)).collect();
        prop_assume!(assignment.len() == rz.len());
        let s = substitute_cliffords(&c, &mask, &assignment).unwrap();
        prop_assert_eq!(s.len(), c.len());
        for (a, b) in s.gates().iter().zip(c.gates()) {
            prop_assert_eq!(a.kind(), b.kind());
            prop_assert_eq!(a.max_qubit(), b.max_qubit());
        }
        prop_assert_eq!(s.non_clifford_count(1e-9), 0);
    }

    #[test]
    fn circuit_json_round_trip(c in circuit(4, 40)) {
        prop_assert_eq!(Circuit::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn allocation_sums_and_orders(n in 4usize..=10, alpha in 0.0..=1.0f64, total in 1_000u64..10_000_000) {
        let a = allocate_shots(&ZneConfig::new(n, alpha, total).unwrap()).unwrap();
        prop_assert_eq!(a.iter().sum::<u64>(), total);
        prop_assert!(a.iter().all(|&s| s >= 1));
        if alpha < 0.5 {
            prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        } else if alpha > 0.5 {
            prop_assert!(a.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn cubic_extrapolation_is_exact(c in prop::array::uniform4(-2.0..2.0f64), n in 4usize..=10) {
        let points: Vec<(f64, f64)> = (1..=n)
            .map(|k| {
                let x = noise_scale(k);
                (x, c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x)
            })
            .collect();
        prop_assert!((extrapolate_cubic(&points).unwrap() - c[0]).abs() < 1e-8);
    }

    #[test]
    fn estimators_are_ordered_and_monotone_in_beta(
        mut v in prop::collection::vec(0.0..10.0f64, 1..200),
        b1 in 0.01..0.99f64,
        b2 in 0.01..0.99f64,
    ) {
        let r = RiskEstimates::from_values(&v, b1).unwrap();
        prop_assert!(r.min <= r.quantile && r.quantile <= r.tvar && r.tvar <= r.max);
        prop_assert!(r.min <= r.mean && r.mean <= r.max);
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(quantile_sorted(&v, lo).unwrap() <= quantile_sorted(&v, hi).unwrap());
        prop_assert!(tvar_sorted(&v, lo).unwrap() <= tvar_sorted(&v, hi).unwrap() + 1e-12);
    }

    #[test]
    fn eta_is_symmetric_and_scale_free(e in -1.0..1.0f64, m in -1.0..1.0f64, s in 0.1..10.0f64) {
        prop_assume!((e + m).abs() > 1e-6);
        let eta = relative_error(e, m);
        prop_assert!(eta >= 0.0);
        prop_assert!((relative_error(m, e) - eta).abs() <= 1e-12 * eta.max(1.0));
        prop_assert!((relative_error(-e, -m) - eta).abs() <= 1e-12 * eta.max(1.0));
        prop_assert!((relative_error(s * e, s * m) - eta).abs() <= 1e-9 * eta.max(1.0));
        prop_assert_eq!(relative_error(e, e), 0.0);
    }

    #[test]
    fn regression_predictions_are_affine_equivariant(
        pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..20),
        a in 0.2..5.0f64,
        b in -1.0..1.0f64,
        x in -1.0..1.0f64,
    ) {
        let spread = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
            - pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let f = fit_regression(&pairs).unwrap();
        let moved: Vec<(f64, f64)> = pairs.iter().map(|&(n, e)| (a * n + b, e)).collect();
        let g = fit_regression(&moved).unwrap();
        prop_assert!((g.apply(a * x + b) - f.apply(x)).abs() < 1e-8);
        // shifting targets shifts predictions
        let lifted: Vec<(f64, f64)> = pairs.iter().map(|&(n, e)| (n, e + b)).collect();
        prop_assert!((fit_regression(&lifted).unwrap().apply(x) - f.apply(x) - b).abs() < 1e-9);
    }

    #[test]
    fn rbf_interpolates_its_centers(pts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, -1.0..1.0f64), 4..25)) {
        let centers: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
        // well-separated, non-colinear centers only
        let separated = centers.iter().enumerate().all(|(i, a)| {
            centers[..i].iter().all(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() > 0.02)
        });
        let area = |a: &[f64], b: &[f64], c: &[f64]| ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
        prop_assume!(separated && area(&centers[0], &centers[1], &centers[2]) > 0.01);
        let values: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let rbf = ThinPlateRbf::fit(&centers, &values).unwrap();
        for (c, v) in centers.iter().zip(&values) {
            prop_assert!((rbf.evaluate(c) - v).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_noise_density_matches_statevector(c in circuit(3, 25), obs in observable(3)) {
        let rho = run_noisy::<f64>(&c, &NoiseModel::noiseless()).unwrap();
        let psi = StateVector64::run(&c);
        prop_assert!((rho.expectation(&obs) - psi.expectation(&obs)).abs() < 1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}
