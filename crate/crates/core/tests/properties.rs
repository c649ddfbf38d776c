use proptest::prelude::*;

use qepi::convolution::{char_value, qconv};
use qepi::fockspace::{make_state, MixturePart};
use qepi::inequalities::{
    entropy_sum_form_check, gamma_distribution, guha_monotonicity, theorem1_check, theorem2_check, Ensemble,
    InequalityMargin, SubsetCollection, WeightChoice, WeightDistribution,
};
use qepi::information::entropy;
use qepi::liftproof::lift;
use qepi::linalg::max_abs;
use qepi::quadrature::QuadratureConfig;
use qepi::{CMatrix, DensityMatrix, StateFamily, Subset, C64};

fn thermal_fock(nbar: f64, p: f64, cutoff: usize) -> DensityMatrix {
    let f = StateFamily::Mixture {
        parts: vec![
            MixturePart { weight: p, state: StateFamily::Fock { n: 1 } },
            MixturePart { weight: 1.0 - p, state: StateFamily::Thermal { nbar } },
        ],
    };
    make_state(&f, cutoff).unwrap()
}

fn g(nbar: f64) -> f64 {
    (nbar + 1.0) * (nbar + 1.0).ln() - nbar * nbar.ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn thermal_entropy_is_g(nbar in 0.05f64..1.5) {
        let s = entropy(&make_state(&StateFamily::Thermal { nbar }, 80).unwrap()).unwrap();
        prop_assert!((s - g(nbar)).abs() < 1e-8);
    }

    #[test]
    fn beam_splitter_factorizes_char(
        eta in 0.0f64..=1.0, a in 0.0f64..1.2, b in 0.1f64..0.8, re in -1.5f64..1.5, im in -1.5f64..1.5,
    ) {
        let n = 30;
        let r = make_state(&StateFamily::Coherent { re: a, im: -a / 2.0 }, n).unwrap();
        let s = make_state(&StateFamily::Thermal { nbar: b }, n).unwrap();
        let out = qconv(&r, &s, eta).unwrap();
        let z = C64::new(re, im);
        let want = char_value(r.matrix(), z * eta.sqrt()) * char_value(s.matrix(), z * (1.0 - eta).sqrt());
        prop_assert!((char_value(out.matrix(), z) - want).norm() < 1e-8);
    }

    #[test]
    fn collection_multiplicity_is_brute_force(bits in prop::collection::btree_set(1u32..32, 1..6)) {
        let subsets: Vec<Subset> = bits.iter().map(|b| Subset::from_bits(*b)).collect();
        let c = SubsetCollection::quantum(5, subsets.clone()).unwrap();
        let r = (1..=5).map(|i| subsets.iter().filter(|s| s.contains(i)).count()).max().unwrap();
        prop_assert_eq!(c.r(), r);
    }

    #[test]
    fn margin_pass_flag(lhs in -2.0f64..2.0, rhs in -2.0f64..2.0, tol in 0.0f64..0.5) {
        let m = InequalityMargin::new("x", lhs, rhs, tol, Default::default());
        prop_assert_eq!(m.pass, m.margin >= -tol);
        prop_assert_eq!(m.margin, lhs - rhs);
    }

    #[test]
    fn subset_serde_round_trip(bits in 0u32..u32::MAX) {
        let s = Subset::from_bits(bits);
        let text = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<Subset>(&text).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lift_is_linear(seed in 0u64..1000, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let cfg = QuadratureConfig { lift_nodes: 40, ..QuadratureConfig::default() };
        let n = 4;
        let a = qepi::fockspace::ginibre_state(n + 1, seed);
        let b = qepi::fockspace::ginibre_state(n + 1, seed + 1);
        let c = C64::new(re, im);
        let v = Subset::of(&[1]).unwrap();
        let combo: CMatrix = &a * c + &b;
        let (lc, la, lb) = (lift(&combo, 2, v, &cfg).unwrap(), lift(&a, 2, v, &cfg).unwrap(), lift(&b, 2, v, &cfg).unwrap());
        // Each lift picks its own integration radius, so linearity holds up
        // to the reported quadrature errors.
        let budget = lc.quadrature_error + c.norm() * la.quadrature_error + lb.quadrature_error;
        let gap = max_abs(&(lc.matrix - (la.matrix * c + lb.matrix)));
        prop_assert!(gap <= budget.max(1e-12), "gap {gap:e} budget {budget:e}");
    }

    #[test]
    fn optimal_weights_minimize(w in prop::collection::vec(0.01f64..1.0, 3)) {
        let e = Ensemble::quantum(vec![
            thermal_fock(0.5, 0.3, 30),
            make_state(&StateFamily::Thermal { nbar: 0.4 }, 30).unwrap(),
            thermal_fock(0.8, 0.6, 30),
        ]).unwrap();
        let c = SubsetCollection::all_of_size(3, 2).unwrap();
        let total: f64 = w.iter().sum();
        let mu = WeightDistribution::new(w.iter().map(|x| x / total).collect()).unwrap();
        let given = theorem2_check(&e, &c, &WeightChoice::Given(mu), 1e-5).unwrap();
        let opt = theorem2_check(&e, &c, &WeightChoice::Optimal, 1e-5).unwrap();
        prop_assert!(opt.margin <= given.margin + 1e-12);
        prop_assert!(opt.pass);
    }

    #[test]
    fn leave_one_out_reproduces_guha(nbar in 0.1f64..0.6, p in 0.0f64..0.9) {
        let rho = thermal_fock(nbar, p, 30);
        let guha = guha_monotonicity(&rho, 3, 1e-6, 1e-6).unwrap();
        let e = Ensemble::quantum(vec![rho; 3]).unwrap();
        let m = theorem1_check(&e, &SubsetCollection::all_of_size(3, 2).unwrap(), 1e-6).unwrap();
        let last = &guha[1];
        let want = last.lhs.exp() - last.rhs.exp();
        prop_assert!((m.margin - want).abs() < 1e-8);
        prop_assert!(m.pass);
    }

    #[test]
    fn gamma_weights_turn_sum_form_into_power_form(a in 0.1f64..0.6, b in 0.1f64..0.6, p in 0.0f64..0.9) {
        let e = Ensemble::quantum(vec![
            make_state(&StateFamily::Thermal { nbar: a }, 30).unwrap(),
            make_state(&StateFamily::Thermal { nbar: b }, 30).unwrap(),
            thermal_fock(0.3, p, 30),
        ]).unwrap();
        // Disjoint elements: r = 1, so every γ satisfies r γ ≤ 1.
        let c = SubsetCollection::quantum(3, vec![Subset::of(&[1]).unwrap(), Subset::of(&[2, 3]).unwrap()]).unwrap();
        let gamma = gamma_distribution(&e, &c).unwrap();
        let sum = entropy_sum_form_check(&e, &c, &gamma, 1e-6).unwrap();
        let power = theorem1_check(&e, &c, 1e-6).unwrap();
        // With γ the sum form's right side is m ln of the power form's right side.
        prop_assert!((sum.rhs - power.rhs.ln()).abs() < 1e-10);
    }
}
