use super::spectrum::Spectrum;
use super::template::{catalogue_centers, mat_vec, MetaboliteTemplate};
use super::wavelet::{Wavelet, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::mcmc::{ChainState, MhProposal, ProposalKind};
use crate::stats::{sample_truncated_normal, Distribution, RngHandle};
use crate::vi::{BlockState, InnerKernel, Moments, ModelSpec, VariationalState};

/// Block indices in update order.
pub const PSI: usize = 0;
pub const THETA: usize = 1;
pub const PEAKS: usize = 2;
pub const WAVELETS: usize = 3;

/// Allowed slack when checking `W^-1 vartheta >= tau` in floating point.
const CONSTRAINT_TOL: f64 = 1e-10;
/// Bound inversions smaller than this are rounding noise.
const INVERSION_TOL: f64 = 1e-9;

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NmrPriors {
    pub c: f64,
    pub d: f64,
    pub h: f64,
    pub r: f64,
    pub a: f64,
    pub e: f64,
    pub beta_mean: f64,
    pub beta_precision: f64,
    /// Half-width of the window around each catalogue center.
    pub shift_window: f64,
    pub shift_variance: f64,
}

impl Default for NmrPriors {
    fn default() -> Self {
        Self {
            c: 0.05,
            d: 1e-8,
            h: -0.002,
            r: 1e5,
            a: 1e-9,
            e: 1e-6,
            beta_mean: 0.0,
            beta_precision: 1e-3,
            shift_window: 0.03,
            shift_variance: 1e-4,
        }
    }
}

/// Shape of the gamma update for the noise precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaShape {
    /// `a + n1 + n/2`: prior exponent plus the `n1` wavelet-likelihood terms.
    #[default]
    Posterior,
    /// `a + (n + n1)/2`: the prior exponent alone.
    PriorExponent,
}

/// NMR deconvolution model.
///
/// MC-CAVI blocks, in order: `psi` and `theta` (closed form), then
/// `(beta, delta, gamma)` and `(vartheta, tau)` (inner chains).
#[derive(Debug, Clone)]
pub struct NmrModel {
    grid: Vec<f64>,
    y: Vec<f64>,
    observed: usize,
    templates: Vec<MetaboliteTemplate>,
    centers_hat: Vec<f64>,
    owner: Vec<usize>,
    wavelet: Wavelet,
    columns: Vec<Vec<(usize, f64)>>,
    wy: Vec<f64>,
    yty: f64,
    priors: NmrPriors,
    theta_shape: ThetaShape,
    gamma_init: f64,
}

impl NmrModel {
    /// Builds the model, zero-padding the spectrum to a multiple of `2^levels`
    /// on an extension of its grid.
    pub fn new(spectrum: &Spectrum, templates: Vec<MetaboliteTemplate>) -> Result<Self> {
        Self::with_levels(spectrum, templates, DEFAULT_LEVELS)
    }

    pub fn with_levels(spectrum: &Spectrum, templates: Vec<MetaboliteTemplate>, levels: usize) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::InvalidParameter("at least one metabolite template is required".into()));
        }
        templates.iter().try_for_each(MetaboliteTemplate::validate)?;
        let observed = spectrum.len();
        let n = Wavelet::padded_len(observed, levels);
        let mut grid = spectrum.x.clone();
        let mut y = spectrum.y.clone();
        if n > observed {
            if observed < 2 {
                return Err(Error::InvalidParameter("cannot pad a single-point spectrum".into()));
            }
            let step = grid[observed - 1] - grid[observed - 2];
            for k in 1..=n - observed {
                grid.push(spectrum.x[observed - 1] + step * k as f64);
                y.push(0.0);
            }
        }
        let wavelet = Wavelet::sym6(n, levels)?;
        let columns = wavelet.synthesis_columns();
        let wy = wavelet.forward(&y)?;
        let yty = y.iter().map(|v| v * v).sum();
        let centers_hat = catalogue_centers(&templates);
        let owner = templates
            .iter()
            .enumerate()
            .flat_map(|(m, t)| std::iter::repeat_n(m, t.multiplets.len()))
            .collect();
        let mut model = Self {
            grid,
            y,
            observed,
            templates,
            centers_hat,
            owner,
            wavelet,
            columns,
            wy,
            yty,
            priors: NmrPriors::default(),
            theta_shape: ThetaShape::default(),
            gamma_init: 1.0,
        };
        model.gamma_init = model.pilot_width();
        Ok(model)
    }

    pub fn with_priors(mut self, priors: NmrPriors) -> Self {
        self.priors = priors;
        self
    }

    pub fn with_theta_shape(mut self, shape: ThetaShape) -> Self {
        self.theta_shape = shape;
        self
    }

    pub fn with_gamma_init(mut self, gamma: f64) -> Self {
        self.gamma_init = gamma;
        self
    }

    pub fn priors(&self) -> &NmrPriors {
        &self.priors
    }

    /// Padded length (equal to the number of wavelet coefficients).
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of points in the original spectrum.
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn metabolites(&self) -> usize {
        self.templates.len()
    }

    pub fn multiplets(&self) -> usize {
        self.centers_hat.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.y
    }

    pub fn wavelet(&self) -> &Wavelet {
        &self.wavelet
    }

    pub fn centers_hat(&self) -> &[f64] {
        &self.centers_hat
    }

    pub fn gamma_init(&self) -> f64 {
        self.gamma_init
    }

    pub fn metabolite_names(&self) -> Vec<String> {
        self.templates.iter().map(|t| t.name.clone()).collect()
    }

    /// Column `m` of the template matrix.
    pub fn template_column(&self, m: usize, gamma: f64, centers: &[f64]) -> Vec<f64> {
        let first = self.owner.iter().position(|&o| o == m).expect("metabolite index in range");
        let mut col = vec![0.0; self.n()];
        for (k, mult) in self.templates[m].multiplets.iter().enumerate() {
            let c = centers[first + k];
            for (v, x) in col.iter_mut().zip(&self.grid) {
                *v += mult.eval(*x, c, gamma);
            }
        }
        col
    }

    pub fn template_columns(&self, gamma: f64, centers: &[f64]) -> Vec<Vec<f64>> {
        (0..self.metabolites()).map(|m| self.template_column(m, gamma, centers)).collect()
    }

    /// `[beta, delta, gamma]` offsets in the peak chain.
    fn peak_layout(&self) -> (usize, usize) {
        (self.metabolites(), self.metabolites() + self.multiplets())
    }

    /// Peak width giving the smallest residual of a non-negative least
    /// squares template fit at the catalogue centers, over a log grid from
    /// 1e-4 to 1e-1 ppm. Used as the starting width of every chain.
    pub fn pilot_width(&self) -> f64 {
        let mut best = (f64::INFINITY, 1.0);
        for k in 0..=60 {
            let gamma = 10f64.powf(-4.0 + 3.0 * k as f64 / 60.0);
            let cols = self.template_columns(gamma, &self.centers_hat);
            let beta = nnls(&cols, &self.y, 100);
            let fit = mat_vec(&cols, &beta);
            let rss: f64 = self.y.iter().zip(&fit).map(|(y, f)| (y - f).powi(2)).sum();
            if rss < best.0 {
                best = (rss, gamma);
            }
        }
        best.1
    }

    pub fn theta_shape_value(&self) -> f64 {
        let n = self.n() as f64;
        match self.theta_shape {
            ThetaShape::Posterior => self.priors.a + n + n / 2.0,
            ThetaShape::PriorExponent => self.priors.a + n,
        }
    }

    fn psi_factor(&self, theta_vartheta2: f64) -> Distribution {
        let p = &self.priors;
        Distribution::Gamma {
            shape: p.c + 0.5,
            rate: (theta_vartheta2 + p.d) / 2.0,
        }
    }

    fn theta_factor(&self, penalty: f64) -> Result<Distribution> {
        Distribution::gamma(self.theta_shape_value(), 0.5 * (self.priors.e + penalty))
    }

    /// Checks `W^-1 vartheta >= tau` and `tau <= h`, allowing for rounding.
    pub fn check_constraints(&self, vartheta: &[f64], tau: &[f64]) -> std::result::Result<(), String> {
        let s = self.wavelet.inverse(vartheta).map_err(|e| e.to_string())?;
        let h = self.priors.h;
        for (i, (si, ti)) in s.iter().zip(tau).enumerate() {
            if *ti > h {
                return Err(format!("tau[{i}] = {ti} exceeds h = {h}"));
            }
            if si - ti < -CONSTRAINT_TOL {
                return Err(format!("residual {si} below truncation limit {ti} at point {i}"));
            }
        }
        Ok(())
    }

    /// Initial chain for the `(beta, delta, gamma)` block: zero
    /// concentrations at the catalogue centers and the pilot width.
    pub fn initial_peak_chain(&self) -> ChainState {
        let mut values = vec![0.0; self.metabolites()];
        values.extend_from_slice(&self.centers_hat);
        values.push(self.gamma_init);
        let mut scales = vec![1.0; self.metabolites()];
        scales.extend(std::iter::repeat_n(0.1 * self.priors.shift_variance.sqrt(), self.multiplets()));
        scales.push(0.1);
        ChainState::new(values, 1.0).with_scales(scales)
    }

    /// Initial chain for the `(vartheta, tau)` block: zero residual and
    /// `tau = h`.
    pub fn initial_wavelet_chain(&self) -> ChainState {
        let mut values = vec![0.0; self.n()];
        values.extend(std::iter::repeat_n(self.priors.h, self.n()));
        ChainState::new(values, 1.0)
    }

    /// `E(T beta) + W^-1 E(vartheta)` for a variational state.
    pub fn fitted_spectrum(&self, state: &VariationalState) -> Result<Vec<f64>> {
        let tb = state.moment_vec(PEAKS, "E(T beta)")?;
        let s = self.wavelet.inverse(state.moment_vec(WAVELETS, "E(vartheta)")?)?;
        Ok(tb.iter().zip(&s).map(|(a, b)| a + b).collect())
    }

    /// Peak kernel for a given noise precision and target `y - W^-1 vartheta`.
    pub fn peak_kernel(&self, theta: f64, target: Vec<f64>) -> PeakKernel<'_> {
        PeakKernel {
            model: self,
            theta,
            target,
        }
    }

    /// Wavelet kernel for a noise precision, shrinkage weights and the
    /// transformed template residual `W (y - T beta)`.
    pub fn wavelet_kernel(&self, theta: f64, psi: Vec<f64>, resid: Vec<f64>) -> WaveletKernel<'_> {
        WaveletKernel {
            model: self,
            theta,
            psi,
            resid,
        }
    }

    /// `e + sum psi vartheta^2 + ||y - T beta - W^-1 vartheta||^2 + r sum (tau - h)^2`
    /// at a point; the exact-draw counterpart of the variational rate.
    pub fn theta_penalty(&self, psi: &[f64], peaks: &[f64], wave: &[f64]) -> Result<f64> {
        let (nb, nd) = self.peak_layout();
        let n = self.n();
        let (vt, tau) = wave.split_at(n);
        let fit = mat_vec(&self.template_columns(peaks[nd], &peaks[nb..nd]), &peaks[..nb]);
        let s = self.wavelet.inverse(vt)?;
        let rss: f64 = (0..n).map(|i| (self.y[i] - fit[i] - s[i]).powi(2)).sum();
        let shrink: f64 = psi.iter().zip(vt).map(|(p, v)| p * v * v).sum();
        let h = self.priors.h;
        let tpen: f64 = tau.iter().map(|t| (t - h).powi(2)).sum();
        Ok(shrink + rss + self.priors.r * tpen)
    }

    /// Exact conditional draws of `psi` and `theta` used by the MCMC engine.
    pub fn draw_psi(&self, theta: f64, vartheta: &[f64], rng: &mut RngHandle) -> Vec<f64> {
        vartheta
            .iter()
            .map(|v| self.psi_factor(theta * v * v).sample(rng))
            .collect()
    }

    pub fn draw_theta(&self, psi: &[f64], peaks: &[f64], wave: &[f64], rng: &mut RngHandle) -> Result<f64> {
        let pen = self.theta_penalty(psi, peaks, wave)?;
        Ok(self.theta_factor(pen)?.sample(rng))
    }

    pub fn transformed_residual(&self, tb: &[f64]) -> Result<Vec<f64>> {
        let d: Vec<f64> = self.y.iter().zip(tb).map(|(y, t)| y - t).collect();
        self.wavelet.forward(&d)
    }

    pub fn peak_target(&self, vartheta: &[f64]) -> Result<Vec<f64>> {
        let s = self.wavelet.inverse(vartheta)?;
        Ok(self.y.iter().zip(&s).map(|(y, v)| y - v).collect())
    }
}

/// Projected coordinate descent for `min ||y - T b||^2, b >= 0`.
fn nnls(cols: &[Vec<f64>], y: &[f64], passes: usize) -> Vec<f64> {
    let mut b = vec![0.0; cols.len()];
    let mut resid = y.to_vec();
    for _ in 0..passes {
        for (m, col) in cols.iter().enumerate() {
            let nn: f64 = col.iter().map(|v| v * v).sum();
            if nn <= 0.0 {
                continue;
            }
            let g: f64 = col.iter().zip(&resid).map(|(c, r)| c * r).sum();
            let new = (b[m] + g / nn).max(0.0);
            let step = new - b[m];
            for (r, c) in resid.iter_mut().zip(col) {
                *r -= step * c;
            }
            b[m] = new;
        }
    }
    b
}

fn gauss_loglik(theta: f64, target: &[f64], fit: &[f64]) -> f64 {
    -0.5 * theta * target.iter().zip(fit).map(|(t, f)| (t - f).powi(2)).sum::<f64>()
}

/// Inner kernel over `(beta, delta, gamma)`: truncated-normal Gibbs for each
/// concentration, log random-walk MH for the width and window-restricted
/// truncated-normal MH for each multiplet center.
pub struct PeakKernel<'a> {
    model: &'a NmrModel,
    theta: f64,
    target: Vec<f64>,
}

impl PeakKernel<'_> {
    fn accept(log_ratio: f64, rng: &mut RngHandle) -> bool {
        log_ratio >= 0.0 || rng.uniform().ln() < log_ratio
    }
}

impl InnerKernel for PeakKernel<'_> {
    fn sweep(&self, chain: &mut ChainState, rng: &mut RngHandle) -> Result<()> {
        let model = self.model;
        let p = &model.priors;
        let (nb, nd) = model.peak_layout();
        let theta = self.theta;
        let mut cols = model.template_columns(chain.values[nd], &chain.values[nb..nd]);
        let mut fit = mat_vec(&cols, &chain.values[..nb]);

        for m in 0..nb {
            let col = &cols[m];
            let old = chain.values[m];
            let (mut nn, mut g) = (0.0, 0.0);
            for i in 0..col.len() {
                nn += col[i] * col[i];
                g += col[i] * (self.target[i] - fit[i] + col[i] * old);
            }
            let prec = p.beta_precision + theta * nn;
            let mean = (p.beta_precision * p.beta_mean + theta * g) / prec;
            let new = sample_truncated_normal(mean, 1.0 / prec, 0.0, f64::INFINITY, rng);
            for (f, c) in fit.iter_mut().zip(col) {
                *f += c * (new - old);
            }
            chain.values[m] = new;
        }

        let mut ll = gauss_loglik(theta, &self.target, &fit);

        // peak width
        let gamma = chain.values[nd];
        let prop = MhProposal::log_random_walk(chain.scales[nd]);
        let (cand, corr) = prop.propose(gamma, rng);
        let log_prior = |g: f64| -g.ln() - 0.5 * g.ln().powi(2);
        let accepted = if cand > 0.0 && cand.is_finite() {
            let cand_cols = model.template_columns(cand, &chain.values[nb..nd]);
            let cand_fit = mat_vec(&cand_cols, &chain.values[..nb]);
            let cand_ll = gauss_loglik(theta, &self.target, &cand_fit);
            if Self::accept(cand_ll + log_prior(cand) - ll - log_prior(gamma) + corr, rng) {
                chain.values[nd] = cand;
                cols = cand_cols;
                fit = cand_fit;
                ll = cand_ll;
                true
            } else {
                false
            }
        } else {
            false
        };
        chain.record(nd, accepted);

        // multiplet centers
        for u in 0..model.multiplets() {
            let k = nb + u;
            let hat = model.centers_hat[u];
            let (lo, hi) = (hat - p.shift_window, hat + p.shift_window);
            let prop = MhProposal::new(ProposalKind::TruncatedRandomWalk { lower: lo, upper: hi }, chain.scales[k]);
            let cur = chain.values[k];
            let (cand, corr) = prop.propose(cur, rng);
            let m = model.owner[u];
            let mut centers = chain.values[nb..nd].to_vec();
            centers[u] = cand;
            let cand_col = model.template_column(m, chain.values[nd], &centers);
            let bm = chain.values[m];
            let cand_fit: Vec<f64> = fit
                .iter()
                .zip(cand_col.iter().zip(&cols[m]))
                .map(|(f, (cn, co))| f + bm * (cn - co))
                .collect();
            let cand_ll = gauss_loglik(theta, &self.target, &cand_fit);
            let lp = |d: f64| -0.5 * (d - hat).powi(2) / p.shift_variance;
            let ok = Self::accept(cand_ll + lp(cand) - ll - lp(cur) + corr, rng);
            if ok {
                chain.values[k] = cand;
                cols[m] = cand_col;
                fit = cand_fit;
                ll = cand_ll;
            }
            chain.record(k, ok);
        }
        Ok(())
    }

    fn layout(&self) -> Vec<(String, usize)> {
        let m = self.model;
        vec![
            ("E(T beta)".into(), m.n()),
            ("E(|T beta|^2)".into(), 1),
            ("E(beta)".into(), m.metabolites()),
            ("E(beta^2)".into(), m.metabolites()),
            ("E(gamma)".into(), 1),
            ("E(delta)".into(), m.multiplets()),
        ]
    }

    fn statistics(&self, values: &[f64], out: &mut [f64]) {
        let m = self.model;
        let (nb, nd) = m.peak_layout();
        let n = m.n();
        let fit = mat_vec(&m.template_columns(values[nd], &values[nb..nd]), &values[..nb]);
        out[..n].copy_from_slice(&fit);
        out[n] = fit.iter().map(|v| v * v).sum();
        let mut o = n + 1;
        for b in &values[..nb] {
            out[o] = *b;
            out[o + nb] = b * b;
            o += 1;
        }
        o += nb;
        out[o] = values[nd];
        out[o + 1..o + 1 + m.multiplets()].copy_from_slice(&values[nb..nd]);
    }
}

/// Inner Gibbs kernel over `(vartheta, tau)`. Each coefficient is drawn from
/// its truncated normal with limits that keep `W^-1 vartheta >= tau`; the
/// reconstruction `W^-1 vartheta` is kept up to date incrementally and
/// rebuilt at the start of every sweep.
pub struct WaveletKernel<'a> {
    model: &'a NmrModel,
    theta: f64,
    psi: Vec<f64>,
    resid: Vec<f64>,
}

impl InnerKernel for WaveletKernel<'_> {
    fn sweep(&self, chain: &mut ChainState, rng: &mut RngHandle) -> Result<()> {
        let model = self.model;
        let n = model.n();
        let h = model.priors.h;
        let (vt, tau) = chain.values.split_at_mut(n);
        let mut s = model.wavelet.inverse(vt)?;
        for l in 0..n {
            let old = vt[l];
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for &(i, b) in &model.columns[l] {
                let bound = old + (tau[i] - s[i]) / b;
                if b > 0.0 {
                    lo = lo.max(bound);
                } else {
                    hi = hi.min(bound);
                }
            }
            let shrink = 1.0 + self.psi[l];
            let new = if lo > hi {
                if lo - hi > INVERSION_TOL {
                    return Err(Error::InvertedBounds { index: l, lower: lo, upper: hi });
                }
                0.5 * (lo + hi)
            } else {
                sample_truncated_normal(self.resid[l] / shrink, 1.0 / (self.theta * shrink), lo, hi, rng)
            };
            if new != old {
                for &(i, b) in &model.columns[l] {
                    s[i] += b * (new - old);
                }
                vt[l] = new;
            }
        }
        let var = 1.0 / (self.theta * model.priors.r);
        for i in 0..n {
            tau[i] = sample_truncated_normal(h, var, f64::NEG_INFINITY, h.min(s[i]), rng);
        }
        Ok(())
    }

    fn layout(&self) -> Vec<(String, usize)> {
        let n = self.model.n();
        vec![
            ("E(vartheta)".into(), n),
            ("E(vartheta^2)".into(), n),
            ("E(tau)".into(), n),
            ("E(sum (tau-h)^2)".into(), 1),
        ]
    }

    fn statistics(&self, values: &[f64], out: &mut [f64]) {
        let n = self.model.n();
        let h = self.model.priors.h;
        for l in 0..n {
            out[l] = values[l];
            out[n + l] = values[l] * values[l];
            out[2 * n + l] = values[n + l];
        }
        out[3 * n] = values[n..].iter().map(|t| (t - h).powi(2)).sum();
    }
}

impl ModelSpec for NmrModel {
    fn block_names(&self) -> Vec<String> {
        vec!["psi".into(), "theta".into(), "peaks".into(), "wavelets".into()]
    }

    fn is_closed_form(&self, i: usize) -> bool {
        i == PSI || i == THETA
    }

    /// `E(theta) = 2a/e` (the prior mean), `E(T beta) = y`,
    /// `E(|T beta|^2) = y'y`, zero wavelet moments and `tau = h`.
    fn initial_state(&self) -> VariationalState {
        let n = self.n();
        let p = &self.priors;
        let mut peaks = Moments::new()
            .with("E(|T beta|^2)", self.yty)
            .with("E(gamma)", self.gamma_init);
        peaks.set_vec("E(T beta)", self.y.clone());
        peaks.set_vec("E(beta)", vec![0.0; self.metabolites()]);
        peaks.set_vec("E(beta^2)", vec![0.0; self.metabolites()]);
        peaks.set_vec("E(delta)", self.centers_hat.clone());
        let mut wave = Moments::new().with("E(sum (tau-h)^2)", n as f64 * p.h * p.h);
        wave.set_vec("E(vartheta)", vec![0.0; n]);
        wave.set_vec("E(vartheta^2)", vec![0.0; n]);
        wave.set_vec("E(tau)", vec![p.h; n]);
        let mut psi = Moments::new();
        psi.set_vec("E(psi)", vec![1.0; n]);
        VariationalState::new(vec![
            BlockState::from_moments(psi),
            BlockState::from_moments(Moments::new().with("E(theta)", 2.0 * p.a / p.e)),
            BlockState::from_moments(peaks),
            BlockState::from_moments(wave),
        ])
    }

    fn cavi_update(&self, i: usize, state: &VariationalState) -> Result<BlockState> {
        let e_theta = state.moment(THETA, "E(theta)")?;
        let vt2 = state.moment_vec(WAVELETS, "E(vartheta^2)")?;
        match i {
            PSI => {
                let mut m = Moments::new();
                m.set_vec("E(psi)", vt2.iter().map(|v| self.psi_factor(e_theta * v).mean()).collect());
                Ok(BlockState::from_moments(m))
            }
            THETA => {
                let psi = state.moment_vec(PSI, "E(psi)")?;
                let pk = &state.blocks[PEAKS].moments;
                let wv = &state.blocks[WAVELETS].moments;
                let tb = pk.vector("E(T beta)")?;
                let vt = wv.vector("E(vartheta)")?;
                let s = self.wavelet.inverse(vt)?;
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let sum_vt2: f64 = vt2.iter().sum();
                // blocks are independent under q and W is orthonormal
                let rss = self.yty + pk.get("E(|T beta|^2)")? + sum_vt2 - 2.0 * dot(&self.y, tb)
                    - 2.0 * dot(&self.wy, vt)
                    + 2.0 * dot(tb, &s);
                let penalty = dot(psi, vt2) + rss.max(0.0) + self.priors.r * wv.get("E(sum (tau-h)^2)")?;
                let q = self.theta_factor(penalty)?;
                Ok(BlockState::from_factor(q, Moments::new().with("E(theta)", q.mean())))
            }
            _ => Err(Error::Config(format!("block {i} is updated by Monte Carlo"))),
        }
    }

    fn mc_kernel<'a>(&'a self, i: usize, state: &VariationalState) -> Result<Box<dyn InnerKernel + 'a>> {
        let e_theta = state.moment(THETA, "E(theta)")?;
        match i {
            PEAKS => {
                let target = self.peak_target(state.moment_vec(WAVELETS, "E(vartheta)")?)?;
                Ok(Box::new(self.peak_kernel(e_theta, target)))
            }
            WAVELETS => {
                let resid = self.transformed_residual(state.moment_vec(PEAKS, "E(T beta)")?)?;
                let psi = state.moment_vec(PSI, "E(psi)")?.to_vec();
                Ok(Box::new(self.wavelet_kernel(e_theta, psi, resid)))
            }
            _ => Err(Error::Config(format!("block {i} is closed form"))),
        }
    }

    fn init_chain(&self, i: usize) -> Result<ChainState> {
        match i {
            PEAKS => Ok(self.initial_peak_chain()),
            WAVELETS => Ok(self.initial_wavelet_chain()),
            _ => Err(Error::Config(format!("block {i} has no inner chain"))),
        }
    }

    fn absorb(&self, i: usize, _state: &VariationalState, estimates: Moments) -> Result<BlockState> {
        match i {
            PEAKS | WAVELETS => Ok(BlockState::from_moments(estimates)),
            _ => Err(Error::Config(format!("block {i} has no inner chain"))),
        }
    }

    fn monitored(&self, state: &VariationalState) -> Result<Vec<(String, f64)>> {
        let pk = &state.blocks[PEAKS].moments;
        let b = pk.vector("E(beta)")?;
        let b2 = pk.vector("E(beta^2)")?;
        let mut out = Vec::new();
        for m in 0..self.metabolites() {
            out.push((format!("beta[{}]", m + 1), b[m]));
        }
        for m in 0..self.metabolites() {
            out.push((format!("sd(beta[{}])", m + 1), (b2[m] - b[m] * b[m]).max(0.0).sqrt()));
        }
        out.push(("gamma".into(), pk.get("E(gamma)")?));
        for (u, d) in pk.vector("E(delta)")?.iter().enumerate() {
            out.push((format!("delta[{}]", u + 1), *d));
        }
        out.push(("theta".into(), state.moment(THETA, "E(theta)")?));
        Ok(out)
    }
}
