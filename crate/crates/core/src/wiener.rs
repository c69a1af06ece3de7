//! Statistical experiments on the discrete Brownian shift: Birkhoff
//! averages of cylinder functionals along a single shift orbit, and
//! decorrelation diagnostics across lags.
//!
//! Consecutive shift images overlap whenever a functional looks more than
//! one period into the path, so plain `sigma/sqrt(N)` underestimates the
//! error; standard errors here come from a circular block bootstrap with
//! block length equal to the functional's depth.

use serde::Serialize;

use crate::error::{ErgoError, Result};
use crate::noise::{NoiseState, NoiseSystem};
use crate::rng::RandomStream;
use crate::stats;

type PathValuesFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bounded functional of the path values `W(t)` at finitely many times
/// inside its depth window.
pub struct CylinderFunctional {
    pub name: String,
    /// Evaluation times, multiples of the mesh, all within `depth * tau`.
    pub times: Vec<f64>,
    eval: PathValuesFn,
}

impl CylinderFunctional {
    pub fn new(
        name: impl Into<String>,
        times: Vec<f64>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CylinderFunctional {
            name: name.into(),
            times,
            eval: Box::new(eval),
        }
    }

    /// Depth in periods: how many consecutive shift images overlap this
    /// functional's window.
    pub fn depth_periods(&self, tau: f64) -> usize {
        let max_t = self.times.iter().fold(0.0f64, |m, &t| m.max(t));
        (max_t / tau).ceil().max(1.0) as usize
    }

    pub fn value(&self, state: &NoiseState) -> Result<f64> {
        let values = self
            .times
            .iter()
            .map(|&t| state.wiener_value(t))
            .collect::<Result<Vec<f64>>>()?;
        Ok((self.eval)(&values))
    }
}

impl std::fmt::Debug for CylinderFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderFunctional")
            .field("name", &self.name)
            .field("times", &self.times)
            .finish()
    }
}

/// The three-functional battery with analytic targets: the sign of
/// `W(tau)` (1/2), the squared increment (tau), and the joint positivity
/// of `W(tau)` and `W(2 tau)` (3/8, the Gaussian orthant value for
/// correlation `1/sqrt(2)`).
pub fn standard_functionals(tau: f64) -> Vec<(CylinderFunctional, f64)> {
    vec![
        (
            CylinderFunctional::new("ind_w_tau_pos", vec![tau], |w| f64::from(w[0] > 0.0)),
            0.5,
        ),
        (
            CylinderFunctional::new("w_tau_squared", vec![tau], |w| w[0] * w[0]),
            tau,
        ),
        (
            CylinderFunctional::new("ind_w_tau_and_w_2tau_pos", vec![tau, 2.0 * tau], |w| {
                f64::from(w[0] > 0.0 && w[1] > 0.0)
            }),
            0.375,
        ),
    ]
}

/// Result of a single-orbit Birkhoff average run.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitAverage {
    pub functional: String,
    pub n: usize,
    pub estimate: f64,
    /// Block-bootstrap standard error (block length = functional depth).
    pub stderr: f64,
    pub block_len: usize,
    pub mesh: f64,
    pub tau: f64,
    /// The per-step functional values, for running-average plots.
    #[serde(skip)]
    pub series: Vec<f64>,
}

impl OrbitAverage {
    /// Distance to a target in standard errors.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if (self.estimate - target).abs() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - target).abs() / self.stderr
        }
    }
}

/// Streams one orbit of the period-`tau` shift, evaluating the functional
/// after each shift, and reports the running mean with a block-bootstrap
/// standard error. The rolling increment buffer keeps memory constant in
/// `n_steps`.
pub fn birkhoff_shift_average(
    functional: &CylinderFunctional,
    tau: f64,
    n_steps: usize,
    mesh: f64,
    seed: u64,
) -> Result<OrbitAverage> {
    if n_steps < 100 {
        return Err(ErgoError::InvalidInput(format!(
            "n_steps = {n_steps} < 100"
        )));
    }
    let depth = functional.depth_periods(tau);
    let horizon = depth as f64 * tau;
    let sys = NoiseSystem::wiener_grid(mesh, horizon)?;
    let mut state = sys.sample_invariant(RandomStream::new(seed, 0x7769_656e));
    let mut series = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        series.push(functional.value(&state)?);
        state = sys.shift(tau, &state)?;
    }
    let estimate = stats::mean(&series);
    let mut boot = RandomStream::new(seed, 0x626f_6f74);
    let stderr = stats::block_bootstrap_se(&series, depth, 400, &mut boot);
    Ok(OrbitAverage {
        functional: functional.name.clone(),
        n: n_steps,
        estimate,
        stderr,
        block_len: depth,
        mesh,
        tau,
        series,
    })
}

/// Covariance of `F` and `G` composed with the lag-fold shift, along one
/// orbit, with a block-bootstrap standard error.
#[derive(Debug, Clone, Serialize)]
pub struct LagCovariance {
    pub lag: usize,
    pub covariance: f64,
    pub stderr: f64,
}

pub fn decorrelation(
    f: &CylinderFunctional,
    g: &CylinderFunctional,
    tau: f64,
    lags: &[usize],
    n_steps: usize,
    mesh: f64,
    seed: u64,
) -> Result<Vec<LagCovariance>> {
    if n_steps < 100 {
        return Err(ErgoError::InvalidInput(format!(
            "n_steps = {n_steps} < 100"
        )));
    }
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let depth = f.depth_periods(tau).max(g.depth_periods(tau));
    let horizon = depth as f64 * tau;
    let sys = NoiseSystem::wiener_grid(mesh, horizon)?;
    let mut state = sys.sample_invariant(RandomStream::new(seed, 0x6465_636f));
    let total = n_steps + max_lag;
    let mut f_series = Vec::with_capacity(total);
    let mut g_series = Vec::with_capacity(total);
    for _ in 0..total {
        f_series.push(f.value(&state)?);
        g_series.push(g.value(&state)?);
        state = sys.shift(tau, &state)?;
    }
    let mut boot = RandomStream::new(seed, 0x6c61_6773);
    lags.iter()
        .map(|&lag| {
            let products: Vec<f64> = (0..n_steps)
                .map(|i| f_series[i] * g_series[i + lag])
                .collect();
            let fa = &f_series[..n_steps];
            let gb = &g_series[lag..lag + n_steps];
            let covariance = stats::mean(&products) - stats::mean(fa) * stats::mean(gb);
            // bootstrap the centered estimator over circular blocks
            let block = depth + lag;
            let replicates = 300;
            let mut cov_samples = Vec::with_capacity(replicates);
            for _ in 0..replicates {
                let mut sp = 0.0;
                let mut sf = 0.0;
                let mut sg = 0.0;
                let mut taken = 0usize;
                while taken < n_steps {
                    let start = boot.index(n_steps);
                    for j in 0..block.min(n_steps - taken) {
                        let idx = (start + j) % n_steps;
                        sp += products[idx];
                        sf += fa[idx];
                        sg += gb[idx];
                        taken += 1;
                    }
                }
                let inv = 1.0 / n_steps as f64;
                cov_samples.push(sp * inv - (sf * inv) * (sg * inv));
            }
            Ok(LagCovariance {
                lag,
                covariance,
                stderr: stats::variance(&cov_samples).sqrt(),
            })
        })
        .collect()
}
