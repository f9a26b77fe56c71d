use super::{check_data, PRIOR_VAR, PSI_LOC, PSI_MAX};
use crate::bbvi::{truncated_normal_score, BbviModel, FactorFamily, GammaFactor, NormalFactor};
use crate::error::Result;
use crate::stats::quad::GaussLegendre;
use crate::stats::{log_normal_cdf_diff, sample_truncated_normal, truncated_normal_moments, truncated_normal_quantile, RngHandle};

/// `q(kappa, psi) = TN(alpha_k, exp(2 gamma_k), -psi, psi) x TN(alpha_p, exp(2 gamma_p), 0, 2)`
/// with parameters `(alpha_k, gamma_k, alpha_p, gamma_p)` and draws
/// `(kappa, psi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KappaPsiFactor;

impl FactorFamily for KappaPsiFactor {
    fn dim(&self) -> usize {
        4
    }

    fn sample_dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["alpha_kappa".into(), "gamma_kappa".into(), "alpha_psi".into(), "gamma_psi".into()]
    }

    fn sample(&self, l: &[f64], rng: &mut RngHandle) -> Vec<f64> {
        let sp = l[3].exp();
        let psi = sample_truncated_normal(l[2], sp * sp, 0.0, PSI_MAX, rng);
        let sk = l[1].exp();
        let kappa = sample_truncated_normal(l[0], sk * sk, -psi, psi, rng);
        vec![kappa, psi]
    }

    fn log_q(&self, l: &[f64], z: &[f64]) -> f64 {
        let (lk, _, _) = truncated_normal_score(l[0], l[1], -z[1], z[1], z[0]);
        let (lp, _, _) = truncated_normal_score(l[2], l[3], 0.0, PSI_MAX, z[1]);
        lk + lp
    }

    fn score(&self, l: &[f64], z: &[f64], out: &mut [f64]) {
        let (_, ak, gk) = truncated_normal_score(l[0], l[1], -z[1], z[1], z[0]);
        let (_, ap, gp) = truncated_normal_score(l[2], l[3], 0.0, PSI_MAX, z[1]);
        out.copy_from_slice(&[ak, gk, ap, gp]);
    }
}

/// BBVI form of the constrained model: factor 0 is `q(vartheta)`, factor 1
/// is `q(theta)`, factor `2 + j` is `q(kappa_j, psi_j)`.
#[derive(Debug, Clone)]
pub struct Model2Bbvi {
    y: Vec<f64>,
    quad: GaussLegendre,
}

/// Expectations under the current factors that the local terms need.
#[derive(Debug, Clone)]
pub struct Model2Cache {
    pub e_theta: f64,
    pub e_mu: f64,
    pub e_mu2: f64,
    pub e_kappa: Vec<f64>,
    pub e_kappa2: Vec<f64>,
}

impl Model2Bbvi {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        check_data(&y)?;
        Ok(Self {
            y,
            quad: GaussLegendre::new(20),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `(E kappa, E kappa^2)` under `q(kappa, psi)`, integrating the
    /// conditional truncated-normal moments over the quantiles of `q(psi)`.
    pub fn kappa_moments(&self, l: &[f64]) -> (f64, f64) {
        let sp = l[3].exp();
        let sk = l[1].exp();
        let f = |u: f64, k: usize| {
            let psi = truncated_normal_quantile(l[2], sp * sp, 0.0, PSI_MAX, u);
            match truncated_normal_moments(l[0], sk * sk, -psi, psi) {
                Ok((m, v)) => {
                    if k == 1 {
                        m
                    } else {
                        v + m * m
                    }
                }
                // a window too narrow to carry mass pins kappa to ~0
                Err(_) => 0.0,
            }
        };
        let m1 = self.quad.integrate(|u| f(u, 1), 0.0, 1.0, 2);
        let m2 = self.quad.integrate(|u| f(u, 2), 0.0, 1.0, 2);
        (m1, m2)
    }

    /// Sum over j of `E (y_j - vartheta - kappa_j)^2` under the cache.
    fn expected_ss(&self, c: &Model2Cache) -> f64 {
        (0..self.n())
            .map(|j| {
                let y = self.y[j];
                y * y + c.e_mu2 + c.e_kappa2[j] - 2.0 * y * c.e_mu - 2.0 * y * c.e_kappa[j] + 2.0 * c.e_mu * c.e_kappa[j]
            })
            .sum()
    }
}

impl BbviModel for Model2Bbvi {
    type Cache = Model2Cache;

    fn factor_count(&self) -> usize {
        2 + self.n()
    }

    fn factor(&self, i: usize) -> &dyn FactorFamily {
        match i {
            0 => &NormalFactor,
            1 => &GammaFactor,
            _ => &KappaPsiFactor,
        }
    }

    fn factor_name(&self, i: usize) -> String {
        match i {
            0 => "vartheta".into(),
            1 => "theta".into(),
            j => format!("kappa_psi[{}]", j - 1),
        }
    }

    /// All parameters 0 except the location of `q(vartheta)`, which is 4.
    fn initial_lambda(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![4.0, 0.0], vec![0.0, 0.0]];
        l.extend((0..self.n()).map(|_| vec![0.0; 4]));
        l
    }

    fn cache(&self, lambda: &[Vec<f64>]) -> Model2Cache {
        let (e_kappa, e_kappa2) = lambda[2..].iter().map(|l| self.kappa_moments(l)).unzip();
        Model2Cache {
            e_theta: (lambda[1][0] - lambda[1][1]).exp(),
            e_mu: lambda[0][0],
            e_mu2: lambda[0][0].powi(2) + lambda[0][1].exp(),
            e_kappa,
            e_kappa2,
        }
    }

    fn log_c(&self, i: usize, z: &[f64], _lambda: &[Vec<f64>], c: &Model2Cache) -> f64 {
        match i {
            0 => {
                let mu = z[0];
                let ss: f64 = (0..self.n())
                    .map(|j| {
                        let r = self.y[j] - mu;
                        r * r - 2.0 * r * c.e_kappa[j] + c.e_kappa2[j]
                    })
                    .sum();
                -mu * mu / (2.0 * PRIOR_VAR) - 0.5 * c.e_theta * ss
            }
            1 => {
                let theta = z[0];
                0.5 * self.n() as f64 * theta.ln() - theta * (1.0 + 0.5 * self.expected_ss(c))
            }
            _ => {
                let j = i - 2;
                let (kappa, psi) = (z[0], z[1]);
                if !super::admissible(kappa, psi) {
                    return f64::NEG_INFINITY;
                }
                let r = self.y[j] - kappa;
                let e_sq = r * r - 2.0 * r * c.e_mu + c.e_mu2;
                let s = PRIOR_VAR.sqrt();
                -0.5 * c.e_theta * e_sq - kappa * kappa / (2.0 * PRIOR_VAR)
                    - (psi - PSI_LOC).powi(2) / (2.0 * PRIOR_VAR)
                    - log_normal_cdf_diff(-psi / s, psi / s)
            }
        }
    }

    fn monitored(&self, lambda: &[Vec<f64>]) -> Vec<(String, f64)> {
        vec![
            ("vartheta".into(), lambda[0][0]),
            ("theta".into(), (lambda[1][0] - lambda[1][1]).exp()),
        ]
    }
}
