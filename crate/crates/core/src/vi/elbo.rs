use super::{ModelSpec, VariationalState};
use crate::error::{Error, Result};
use crate::stats::RngHandle;

/// How [`elbo`] evaluates the bound.
pub enum ElboMode<'r> {
    /// Closed-form cross-entropies; only some models provide them.
    Analytic,
    /// Average of `log p(z, x) - log q(z)` over `samples` draws `z ~ q`.
    MonteCarlo { samples: usize, rng: &'r mut RngHandle },
}

pub fn elbo<M: ModelSpec + ?Sized>(model: &M, state: &VariationalState, mode: ElboMode<'_>) -> Result<f64> {
    match mode {
        ElboMode::Analytic => model.elbo_analytic(state),
        ElboMode::MonteCarlo { samples, rng } => elbo_monte_carlo(model, state, samples, rng).map(|(m, _)| m),
    }
}

/// Monte Carlo ELBO estimate and its standard error.
pub fn elbo_monte_carlo<M: ModelSpec + ?Sized>(
    model: &M,
    state: &VariationalState,
    samples: usize,
    rng: &mut RngHandle,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidParameter("ELBO estimate needs at least one sample".into()));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=samples {
        let z = model.sample_q(state, rng)?;
        let v = model.log_joint(&z)? - model.log_q(state, &z)?;
        let d = v - mean;
        mean += d / k as f64;
        m2 += d * (v - mean);
    }
    let n = samples as f64;
    let se = if samples > 1 { (m2 / (n - 1.0) / n).sqrt() } else { f64::NAN };
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::{BlockState, Moments};

    /// Three-state latent with joint p(z, x) = w_z; q is set to p(z | x).
    struct Discrete {
        joint: [f64; 3],
    }

    impl Discrete {
        fn evidence(&self) -> f64 {
            self.joint.iter().sum()
        }
    }

    impl ModelSpec for Discrete {
        fn block_names(&self) -> Vec<String> {
            vec!["z".into()]
        }
        fn is_closed_form(&self, _: usize) -> bool {
            true
        }
        fn initial_state(&self) -> VariationalState {
            VariationalState::new(vec![BlockState::default()])
        }
        fn monitored(&self, _: &VariationalState) -> Result<Vec<(String, f64)>> {
            Ok(vec![])
        }
        fn sample_q(&self, _: &VariationalState, rng: &mut RngHandle) -> Result<Vec<f64>> {
            let u = rng.uniform() * self.evidence();
            let z = if u < self.joint[0] {
                0
            } else if u < self.joint[0] + self.joint[1] {
                1
            } else {
                2
            };
            Ok(vec![z as f64])
        }
        fn log_q(&self, _: &VariationalState, z: &[f64]) -> Result<f64> {
            Ok((self.joint[z[0] as usize] / self.evidence()).ln())
        }
        fn log_joint(&self, z: &[f64]) -> Result<f64> {
            Ok(self.joint[z[0] as usize].ln())
        }
    }

    #[test]
    fn exact_posterior_gives_log_evidence() {
        let m = Discrete {
            joint: [0.02, 0.05, 0.13],
        };
        let state = m.initial_state();
        let mut rng = RngHandle::new(3);
        let (est, se) = elbo_monte_carlo(&m, &state, 200, &mut rng).unwrap();
        assert!((est - m.evidence().ln()).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn analytic_mode_without_closed_form_is_config_error() {
        let m = Discrete { joint: [1.0, 1.0, 1.0] };
        let err = elbo(&m, &m.initial_state(), ElboMode::Analytic).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let _ = Moments::new();
    }
}
