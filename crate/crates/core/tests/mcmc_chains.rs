use mccavi::mcmc::{
    mh_update, mwg_sweep, run_mcmc, ChainState, Conditionals, MhProposal, ProposalKind, Transform, UpdateRule,
};
use mccavi::models::model2::{self, mcmc_conditionals, mcmc_initial_chain, McmcLayout, Truth};
use mccavi::stats::{truncated_normal_moments, RngHandle};

fn std_normal_log(x: f64) -> f64 {
    -0.5 * x * x
}

#[test]
fn random_walk_on_standard_normal() {
    let mut rng = RngHandle::new(1);
    let p = MhProposal::random_walk(2.4);
    let (mut x, mut acc, mut sum) = (0.0, 0usize, 0.0);
    let steps = 100_000;
    for _ in 0..steps {
        let (v, a) = mh_update(x, &p, std_normal_log, &mut rng);
        x = v;
        acc += a as usize;
        sum += x;
    }
    assert!((sum / steps as f64).abs() < 0.03);
    let rate = acc as f64 / steps as f64;
    assert!((0.3..=0.6).contains(&rate), "acceptance {rate}");
}

#[test]
fn adaptation_reaches_target_rate() {
    let conds = Conditionals::new(vec![UpdateRule::metropolis(
        ProposalKind::RandomWalk { transform: Transform::Identity },
        |_, x| std_normal_log(x),
    )]);
    // a far-off start so adaptation has real work to do
    let chain = ChainState::new(vec![0.0], 40.0);
    let mut rng = RngHandle::new(2);
    let out = run_mcmc(chain, &conds, 10_000, 10_000, &mut rng, |_| vec![], |_, _| true).unwrap();
    let tail = run_mcmc(out.chain.clone(), &conds, 2_000, 0, &mut rng, |_| vec![], |_, _| true).unwrap();
    let acc = (tail.chain.accepted[0] - out.chain.accepted[0]) as f64 / 2_000.0;
    assert!((0.35..=0.55).contains(&acc), "acceptance {acc} with scale {}", out.chain.scales[0]);
}

#[test]
fn log_random_walk_includes_jacobian() {
    // Gamma(3, rate 2) target; a missing Jacobian would bias the mean down
    let log_target = |x: f64| if x > 0.0 { 2.0 * x.ln() - 2.0 * x } else { f64::NEG_INFINITY };
    let p = MhProposal::log_random_walk(0.8);
    let mut rng = RngHandle::new(3);
    let (mut x, mut sum) = (1.0, 0.0);
    let steps = 400_000;
    for _ in 0..steps {
        x = mh_update(x, &p, log_target, &mut rng).0;
        sum += x;
    }
    assert!((sum / steps as f64 - 1.5).abs() < 0.02);
}

fn chain_mean(proposal: MhProposal, log_target: impl Fn(f64) -> f64, start: f64, steps: usize, seed: u64) -> f64 {
    let mut rng = RngHandle::new(seed);
    let (mut x, mut sum) = (start, 0.0);
    for _ in 0..steps {
        x = mh_update(x, &proposal, &log_target, &mut rng).0;
        sum += x;
    }
    sum / steps as f64
}

#[test]
fn asymmetric_proposals_carry_their_density_ratio() {
    // target TN(1, 1, 0, 3)
    let target = |x: f64| if (0.0..=3.0).contains(&x) { -0.5 * (x - 1.0).powi(2) } else { f64::NEG_INFINITY };
    let (truth, _) = truncated_normal_moments(1.0, 1.0, 0.0, 3.0).unwrap();
    let ind = MhProposal::new(
        ProposalKind::IndependentTruncatedNormal {
            mean: 0.0,
            lower: 0.0,
            upper: 3.0,
        },
        0.8,
    );
    assert!((chain_mean(ind, target, 1.0, 400_000, 4) - truth).abs() < 0.01);
    let trw = MhProposal::new(ProposalKind::TruncatedRandomWalk { lower: 0.0, upper: 3.0 }, 1.5);
    assert!((chain_mean(trw, target, 1.0, 400_000, 5) - truth).abs() < 0.01);
    let uni = MhProposal::uniform(0.0, 3.0);
    assert!((chain_mean(uni, target, 1.0, 400_000, 6) - truth).abs() < 0.01);
}

#[test]
fn discrete_target_is_stationary() {
    // five cells of a piecewise-constant density, moved by independent uniform proposals
    let weights = [1.0, 3.0, 0.5, 2.0, 3.5];
    let total: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let log_target = |x: f64| {
        if (0.0..5.0).contains(&x) {
            weights[x.floor() as usize].ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let p = MhProposal::uniform(0.0, 5.0);
    let mut rng = RngHandle::new(7);
    let mut counts = [[0f64; 5]; 5];
    let mut x: f64 = 0.5;
    for _ in 0..1_000_000 {
        let from = x.floor() as usize;
        x = mh_update(x, &p, log_target, &mut rng).0;
        counts[from][x.floor() as usize] += 1.0;
    }
    for j in 0..5 {
        let flow: f64 = (0..5)
            .map(|i| pi[i] * counts[i][j] / counts[i].iter().sum::<f64>())
            .sum();
        assert!((flow - pi[j]).abs() < 1e-2, "state {j}: {flow} vs {}", pi[j]);
    }
}

#[test]
fn exact_conditionals_give_gibbs_autocorrelation() {
    let rho: f64 = 0.5;
    let sd = (1.0 - rho * rho).sqrt();
    let conds = Conditionals::new(vec![
        UpdateRule::gibbs(move |v, rng| rho * v[1] + sd * rng.standard_normal()),
        UpdateRule::gibbs(move |v, rng| rho * v[0] + sd * rng.standard_normal()),
    ]);
    let mut chain = ChainState::new(vec![0.0, 0.0], 1.0);
    let mut rng = RngHandle::new(8);
    let k = 100_000;
    let mut xs = Vec::with_capacity(k);
    for _ in 0..k {
        mwg_sweep(&mut chain, &conds, &mut rng).unwrap();
        xs.push(chain.values[0]);
    }
    let m = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    assert!((cov / var - rho * rho).abs() < 0.05);
}

#[test]
fn degenerate_conditionals_leave_modes_alone() {
    let conds = Conditionals::new(vec![
        UpdateRule::gibbs(|v, _| 0.5 * v[1]),
        UpdateRule::gibbs(|v, _| 2.0 * v[0]),
    ]);
    let mut chain = ChainState::new(vec![1.5, 3.0], 1.0);
    mwg_sweep(&mut chain, &conds, &mut RngHandle::new(0)).unwrap();
    assert_eq!(chain.values, vec![1.5, 3.0]);
}

#[test]
fn model2_conditionals_keep_the_constraints() {
    let n = 100;
    let y = model2::generate(n, Truth::default(), &mut RngHandle::new(43));
    let conds = mcmc_conditionals(&y).unwrap();
    let layout = McmcLayout { n };
    let mut violations = 0;
    run_mcmc(
        mcmc_initial_chain(n),
        &conds,
        10_000,
        1_000,
        &mut RngHandle::new(9),
        |_| vec![],
        |_, v| {
            violations += layout.violation(v).is_some() as usize;
            true
        },
    )
    .unwrap();
    assert_eq!(violations, 0);
}
