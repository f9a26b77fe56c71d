use mccavi::bbvi::{AdaGradState, FactorFamily};
use mccavi::harness::summarize_trace;
use mccavi::mc_cavi::McSchedule;
use mccavi::mcmc::{adapt_scale, mwg_sweep, run_mcmc, ChainState, Conditionals, ProposalKind, Transform, UpdateRule};
use mccavi::models::model2::{self, mcmc_conditionals, mcmc_initial_chain, KappaPsiFactor, McmcLayout, Truth};
use mccavi::models::nmr::{generate_fixture, NmrMcmc, NmrModel};
use mccavi::stats::{sample_truncated_normal, truncated_normal_moments, RngHandle};
use mccavi::vi::SweepTrace;
use proptest::prelude::*;

proptest! {
    #[test]
    fn truncated_samples_stay_in_bounds(
        mean in -50.0f64..50.0,
        sd in 1e-3f64..20.0,
        lo in -30.0f64..30.0,
        width in 1e-6f64..10.0,
        one_sided in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let hi = if one_sided { f64::INFINITY } else { lo + width };
        let mut rng = RngHandle::new(seed);
        for _ in 0..200 {
            let x = sample_truncated_normal(mean, sd * sd, lo, hi, &mut rng);
            prop_assert!(x >= lo && x <= hi, "{} outside [{}, {}]", x, lo, hi);
        }
    }

    #[test]
    fn truncated_moments_are_inside_and_shrink(
        mean in -5.0f64..5.0,
        sd in 0.05f64..5.0,
        lo in -6.0f64..6.0,
        width in 0.01f64..10.0,
    ) {
        let hi = lo + width;
        if let Ok((m, v)) = truncated_normal_moments(mean, sd * sd, lo, hi) {
            prop_assert!(m >= lo && m <= hi);
            prop_assert!(v > 0.0 && v <= sd * sd * (1.0 + 1e-12));
            prop_assert!(v <= width * width / 4.0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn adapt_scale_is_positive_and_monotone(s in 1e-6f64..1e3, a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.05f64..0.95) {
        let (x, y) = (adapt_scale(s, a, t), adapt_scale(s, b, t));
        prop_assert!(x > 0.0 && y > 0.0);
        if a < b {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn adagrad_accumulator_never_shrinks(grads in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20)) {
        let mut ada = AdaGradState::new(3, 0.5);
        let mut l = vec![0.0; 3];
        for g in &grads {
            let before = ada.g.clone();
            ada.step(&mut l, g);
            for j in 0..3 {
                prop_assert!(ada.g[j] >= before[j]);
            }
        }
        let before = (l.clone(), ada.g.clone());
        ada.step(&mut l, &[0.0; 3]);
        prop_assert_eq!((l, ada.g), before);
    }

    #[test]
    fn schedules_round_trip(a in 1usize..100_000, b in 0usize..1000, extra in 0usize..100_000) {
        let c = a + extra;
        let s = McSchedule::new(a, b, c).unwrap();
        if extra > 0 {
            prop_assert!(McSchedule::new(c, b, a).is_err());
        }
        prop_assert_eq!(McSchedule::parse(&s.to_string()).unwrap(), s);
        prop_assert_eq!(s.sample_size(b.max(1)), if b == 0 { c } else { a });
        prop_assert_eq!(s.sample_size(b + 1), c);
    }

    #[test]
    fn sweeps_preserve_random_box_constraints(
        boxes in prop::collection::vec((-10.0f64..10.0, 0.01f64..5.0), 1..6),
        seed in any::<u64>(),
    ) {
        let bounds: Vec<(f64, f64)> = boxes.iter().map(|&(a, w)| (a, a + w)).collect();
        let rules = bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| match i % 3 {
                0 => UpdateRule::gibbs(move |_, rng| sample_truncated_normal(0.0, 4.0, lo, hi, rng)),
                1 => UpdateRule::metropolis(ProposalKind::TruncatedRandomWalk { lower: lo, upper: hi }, |_, x| -x * x),
                _ => UpdateRule::metropolis(ProposalKind::RandomWalk { transform: Transform::Identity }, move |_, x| {
                    if x > lo && x < hi { 0.0 } else { f64::NEG_INFINITY }
                }),
            })
            .collect();
        let b2 = bounds.clone();
        let conds = Conditionals::new(rules).with_constraint(move |v| {
            for (i, (&x, &(lo, hi))) in v.iter().zip(&b2).enumerate() {
                if !(x >= lo && x <= hi) {
                    return Err(format!("coordinate {i} = {x} outside [{lo}, {hi}]"));
                }
            }
            Ok(())
        });
        let start: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut chain = ChainState::new(start, 1.0);
        let mut rng = RngHandle::new(seed);
        for _ in 0..200 {
            prop_assert!(mwg_sweep(&mut chain, &conds, &mut rng).is_ok());
        }
    }

    #[test]
    fn frozen_scales_never_change(seed in any::<u64>()) {
        let conds = Conditionals::new(vec![UpdateRule::metropolis(
            ProposalKind::RandomWalk { transform: Transform::Identity },
            |_, x| -0.5 * x * x,
        )]);
        let mut chain = ChainState::new(vec![0.0], 7.0);
        chain.freeze();
        let mut rng = RngHandle::new(seed);
        for _ in 0..500 {
            mwg_sweep(&mut chain, &conds, &mut rng).unwrap();
        }
        prop_assert_eq!(chain.scales[0], 7.0);
        prop_assert!(chain.accepted[0] <= chain.proposed[0]);
    }

    #[test]
    fn summaries_recompute_from_csv(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 2), 2..40), burn in 0usize..10) {
        let mut t = SweepTrace::default();
        for r in &rows {
            t.push(&[("a".to_string(), r[0]), ("b".to_string(), r[1])], None, 0.0);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.save_csv(&path).unwrap();
        let back = SweepTrace::load_csv(&path).unwrap();
        let burn = burn.min(rows.len() - 1);
        prop_assert_eq!(summarize_trace(&t, burn).unwrap(), summarize_trace(&back, burn).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn model2_mcmc_respects_constraints(seed in any::<u64>()) {
        let n = 30;
        let y = model2::generate(n, Truth::default(), &mut RngHandle::new(seed));
        let conds = mcmc_conditionals(&y).unwrap();
        let layout = McmcLayout { n };
        let mut bad = 0;
        run_mcmc(mcmc_initial_chain(n), &conds, 300, 100, &mut RngHandle::new(seed ^ 1), |_| vec![], |_, v| {
            bad += layout.violation(v).is_some() as usize;
            true
        }).unwrap();
        prop_assert_eq!(bad, 0);
    }

    #[test]
    fn model2_bbvi_samples_respect_constraints(
        ak in -3.0f64..3.0, gk in -4.0f64..2.0, ap in -3.0f64..5.0, gp in -4.0f64..2.0, seed in any::<u64>(),
    ) {
        let mut rng = RngHandle::new(seed);
        let l = [ak, gk, ap, gp];
        for _ in 0..1000 {
            let z = KappaPsiFactor.sample(&l, &mut rng);
            prop_assert!(z[0].abs() < z[1] && z[1] < 2.0, "kappa {} psi {}", z[0], z[1]);
            let mut s = [0.0; 4];
            KappaPsiFactor.score(&l, &z, &mut s);
            prop_assert!(s.iter().all(|v| v.is_finite()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn nmr_mcmc_respects_constraints(seed in 0u64..1000) {
        let fixture = generate_fixture(&mut RngHandle::new(seed)).unwrap();
        let model = NmrModel::new(&fixture.spectrum, fixture.templates.clone()).unwrap();
        let mut chain = NmrMcmc::new(&model, 50, RngHandle::new(seed + 1));
        for _ in 0..100 {
            // step checks the constraints itself and errors on a violation
            chain.step().unwrap();
            prop_assert!(model.check_constraints(chain.vartheta(), chain.tau()).is_ok());
        }
    }
}
