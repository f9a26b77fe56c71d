use crate::stats::{log_normal_cdf_diff, sample_truncated_normal, truncated_normal_log_pdf, RngHandle};

/// Scale on which a random-walk proposal moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Gaussian steps on log(x); requires x > 0.
    Log,
}

/// Proposal families used by the Metropolis-Hastings kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalKind {
    /// Symmetric Gaussian random walk on the transformed scale.
    RandomWalk { transform: Transform },
    /// Independent uniform draw on `[lower, upper]`.
    IndependentUniform { lower: f64, upper: f64 },
    /// Independent truncated-normal draw; the proposal `scale` is its sd.
    IndependentTruncatedNormal { mean: f64, lower: f64, upper: f64 },
    /// Truncated normal centred at the current value on a fixed window.
    TruncatedRandomWalk { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhProposal {
    pub kind: ProposalKind,
    /// Proposal standard deviation (ignored by the uniform kind).
    pub scale: f64,
}

impl MhProposal {
    pub fn new(kind: ProposalKind, scale: f64) -> Self {
        assert!(scale > 0.0, "proposal scale must be positive");
        Self { kind, scale }
    }

    pub fn random_walk(scale: f64) -> Self {
        Self::new(ProposalKind::RandomWalk { transform: Transform::Identity }, scale)
    }

    pub fn log_random_walk(scale: f64) -> Self {
        Self::new(ProposalKind::RandomWalk { transform: Transform::Log }, scale)
    }

    pub fn uniform(lower: f64, upper: f64) -> Self {
        Self::new(ProposalKind::IndependentUniform { lower, upper }, 1.0)
    }

    /// Draws a candidate and returns it with `log q(current | candidate) - log q(candidate | current)`.
    pub fn propose(&self, current: f64, rng: &mut RngHandle) -> (f64, f64) {
        let s = self.scale;
        match self.kind {
            ProposalKind::RandomWalk { transform: Transform::Identity } => {
                (current + s * rng.standard_normal(), 0.0)
            }
            ProposalKind::RandomWalk { transform: Transform::Log } => {
                let y = current.ln() + s * rng.standard_normal();
                let cand = y.exp();
                // Jacobian of the log map
                (cand, y - current.ln())
            }
            ProposalKind::IndependentUniform { lower, upper } => {
                (lower + (upper - lower) * rng.uniform(), 0.0)
            }
            ProposalKind::IndependentTruncatedNormal { mean, lower, upper } => {
                let v = s * s;
                let cand = sample_truncated_normal(mean, v, lower, upper, rng);
                let corr = truncated_normal_log_pdf(current, mean, v, lower, upper)
                    - truncated_normal_log_pdf(cand, mean, v, lower, upper);
                (cand, corr)
            }
            ProposalKind::TruncatedRandomWalk { lower, upper } => {
                let cand = sample_truncated_normal(current, s * s, lower, upper, rng);
                // kernels differ only through their normalizing masses
                let mass = |c: f64| log_normal_cdf_diff((lower - c) / s, (upper - c) / s);
                (cand, mass(current) - mass(cand))
            }
        }
    }
}
