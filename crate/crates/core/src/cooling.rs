//! Residual energy after A's measurement when A may apply any local channel
//! (chosen per outcome) to its own qubit.
//!
//! A channel for outcome `mu` is an isometry `V: C^2 -> C^2 (x) C^d` with
//! Kraus operators `M_alpha = (I (x) <alpha|) V`, so `sum M^dag M = V^dag V = I`
//! holds by construction and the search is unconstrained.
//!
//! The energy of a branch after the channel is a quadratic form in the
//! vectorized Kraus operators, `sum_alpha m_alpha^dag K m_alpha`, with a 4x4
//! response matrix `K` that depends only on the branch. Building `K` costs four
//! applications of `H`; every later objective evaluation is O(1).

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::CalibratedChain;
use crate::error::{QetError, Result};
use crate::optim::NelderMead;
use crate::pauli::HermitianOperator;
use crate::protocol::{measure, projectors, Branch, MeasurementSetup, MixedEnsemble, BRANCH_WEIGHT_FLOOR};
use crate::state::StateVector;

/// Environment dimension of the isometry; four covers every qubit channel.
pub const ENV_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    /// `kraus[mu]` is the Kraus set used after outcome `mu`.
    kraus: Vec<Vec<Matrix2<Complex64>>>,
}

impl LocalChannel {
    pub fn new(kraus: Vec<Vec<Matrix2<Complex64>>>) -> Self {
        Self { kraus }
    }

    /// Does nothing, for both outcomes.
    pub fn identity() -> Self {
        Self::new(vec![vec![Matrix2::identity()]; 2])
    }

    pub fn from_isometries(isometries: &[DMatrix<Complex64>]) -> Self {
        Self::new(isometries.iter().map(kraus_from_isometry).collect())
    }

    pub fn kraus(&self, outcome: usize) -> Option<&[Matrix2<Complex64>]> {
        self.kraus.get(outcome).map(Vec::as_slice)
    }

    pub fn outcomes(&self) -> usize {
        self.kraus.len()
    }

    /// `max_mu || sum_alpha M^dag M - I ||`.
    pub fn completeness_error(&self) -> f64 {
        self.kraus
            .iter()
            .map(|set| {
                let s: Matrix2<Complex64> = set.iter().map(|m| m.adjoint() * m).sum();
                (s - Matrix2::identity()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Kraus operators of an isometry with rows indexed `alpha * 2 + t`.
fn kraus_from_isometry(v: &DMatrix<Complex64>) -> Vec<Matrix2<Complex64>> {
    (0..v.nrows() / 2)
        .map(|a| Matrix2::new(v[(2 * a, 0)], v[(2 * a, 1)], v[(2 * a + 1, 0)], v[(2 * a + 1, 1)]))
        .collect()
}

/// Orthonormalizes the two columns of a `(2 d) x 2` matrix built from
/// `8 d` real parameters (real and imaginary parts, column-major).
pub fn isometry_from_params(params: &[f64], env_dim: usize) -> DMatrix<Complex64> {
    let rows = 2 * env_dim;
    assert_eq!(params.len(), 4 * rows);
    let mut a = DMatrix::from_fn(rows, 2, |i, j| {
        let k = 2 * (j * rows + i);
        Complex64::new(params[k], params[k + 1])
    });
    for j in 0..2 {
        for k in 0..j {
            let proj = a.column(k).dotc(&a.column(j));
            let ck = a.column(k).clone_owned();
            a.column_mut(j).axpy(-proj, &ck, Complex64::new(1.0, 0.0));
        }
        let n = a.column(j).norm();
        if n > 0.0 {
            a.column_mut(j).unscale_mut(n);
        }
    }
    a
}

fn random_params(rng: &mut ChaCha8Rng, env_dim: usize) -> Vec<f64> {
    (0..8 * env_dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Channel with a Haar-random isometry into a `ENV_DIM` environment for
/// each of the two outcomes.
pub fn random_channel(seed: u64) -> LocalChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let isometries: Vec<_> = (0..2)
        .map(|_| isometry_from_params(&random_params(&mut rng, ENV_DIM), ENV_DIM))
        .collect();
    LocalChannel::from_isometries(&isometries)
}

/// Applies the outcome-conditioned channel on `site`, splitting each branch
/// into one branch per Kraus operator.
pub fn apply_channel(
    ensemble: &MixedEnsemble,
    channel: &LocalChannel,
    site: usize,
) -> Result<MixedEnsemble> {
    let mut branches = Vec::new();
    for br in &ensemble.branches {
        let set = channel
            .kraus(br.outcome)
            .ok_or(QetError::MissingKraus(br.outcome))?;
        if br.weight == 0.0 {
            continue;
        }
        for m in set {
            let mut out = br.state.apply_local(site, m);
            let p = out.norm_sqr();
            let weight = br.weight * p;
            if weight < BRANCH_WEIGHT_FLOOR {
                continue;
            }
            out.normalize();
            branches.push(Branch {
                weight,
                state: out,
                outcome: br.outcome,
            });
        }
    }
    Ok(MixedEnsemble { branches })
}

/// `K[(t', s'), (t, s)] = w <u_{t's'}|H|u_{ts}>` where `u_{ts}` puts the
/// `site = s` slice of the branch onto `site = t`.
pub fn response_matrix(
    branch: &Branch,
    h: &HermitianOperator,
    site: usize,
) -> Result<Matrix4<Complex64>> {
    let psi = &branch.state;
    let bit = 1usize << site;
    let moved: Vec<StateVector> = (0..4)
        .map(|k| {
            let (t, s) = (k / 2, k % 2);
            let mut u = vec![Complex64::default(); psi.dim()];
            for (b, slot) in u.iter_mut().enumerate() {
                if (b & bit != 0) as usize == t {
                    let src = if s == 1 { b | bit } else { b & !bit };
                    *slot = psi.amplitudes()[src];
                }
            }
            StateVector::from_amplitudes(psi.n_sites(), u)
        })
        .collect::<Result<_>>()?;
    let applied: Vec<StateVector> = moved.iter().map(|u| h.apply(u)).collect::<Result<_>>()?;
    let mut k = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            k[(i, j)] = moved[i].inner(&applied[j]) * branch.weight;
        }
    }
    Ok((k + k.adjoint()) * Complex64::new(0.5, 0.0))
}

/// `sum_alpha vec(M_alpha)^dag K vec(M_alpha)`.
pub fn quadratic_energy(k: &Matrix4<Complex64>, kraus: &[Matrix2<Complex64>]) -> f64 {
    kraus
        .iter()
        .map(|m| {
            let v = nalgebra::Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            v.dotc(&(k * v)).re
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct CoolingOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Per restart and outcome.
    pub max_evals: usize,
    /// In units of `J`.
    pub tol: f64,
    pub env_dim: usize,
}

impl Default for CoolingOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            max_evals: 5000,
            tol: 1e-10,
            env_dim: ENV_DIM,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoolingResult {
    pub e_r_numeric: f64,
    /// Energy after the measurement alone (the identity channel).
    pub e_a: f64,
    #[serde(skip)]
    pub best_channel: LocalChannel,
    pub restarts_used: usize,
    /// Total residual energy reached by each restart.
    pub per_restart_minima: Vec<f64>,
    /// Best contribution of each outcome branch.
    pub per_outcome_minima: Vec<f64>,
    /// Every local search hit its tolerance inside the budget.
    pub converged: bool,
}

struct RestartOutcome {
    value: f64,
    params: Vec<f64>,
    converged: bool,
}

fn restart_rng(seed: u64, outcome: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((outcome as u64) << 32) | restart as u64);
    rng
}

/// Minimizes one outcome's quadratic form over isometries.
fn minimize_branch(
    k: &Matrix4<Complex64>,
    outcome: usize,
    opts: &CoolingOptions,
    scale: f64,
) -> Vec<RestartOutcome> {
    let nm = NelderMead {
        max_evals: opts.max_evals,
        f_tol: opts.tol * scale,
        initial_step: 0.5,
    };
    (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(opts.seed, outcome, r);
            let x0 = random_params(&mut rng, opts.env_dim);
            let objective = |p: &[f64]| {
                let v = isometry_from_params(p, opts.env_dim);
                quadratic_energy(k, &kraus_from_isometry(&v))
            };
            let m = nm.minimize(objective, &x0);
            RestartOutcome {
                value: m.value,
                params: m.x,
                converged: m.converged,
            }
        })
        .collect()
}

/// Post-measurement ensemble for A's measurement on the calibrated chain.
pub fn measured_ensemble(
    chain: &CalibratedChain,
    setup: &MeasurementSetup,
) -> Result<(MixedEnsemble, f64)> {
    let spec = &chain.spec;
    let (p0, p1) = projectors(&setup.axis_a, spec.n_sites(), spec.site_a())?;
    measure(&chain.ground.state, &p0, &p1, &chain.hamiltonian)
}

/// Searches A's outcome-conditioned local channels for the lowest energy
/// reachable right after the measurement. The objective is a sum of
/// independent per-outcome terms, each minimized on its own.
pub fn minimize_residual(
    chain: &CalibratedChain,
    setup: &MeasurementSetup,
    opts: &CoolingOptions,
) -> Result<CoolingResult> {
    if opts.restarts == 0 {
        return Err(QetError::Config("at least one restart is required".into()));
    }
    if !(1..=ENV_DIM).contains(&opts.env_dim) {
        return Err(QetError::Config(format!(
            "environment dimension must be 1..={ENV_DIM}"
        )));
    }
    let site = chain.spec.site_a();
    let (ensemble, e_a) = measured_ensemble(chain, setup)?;
    let scale = chain.spec.coupling();

    let mut per_restart = vec![0.0; opts.restarts];
    let mut per_outcome = Vec::new();
    let mut isometries = Vec::new();
    let mut converged = true;
    for br in &ensemble.branches {
        if br.weight == 0.0 {
            per_outcome.push(0.0);
            isometries.push(isometry_from_params(&vec![1.0; 8 * opts.env_dim], opts.env_dim));
            continue;
        }
        let k = response_matrix(br, &chain.hamiltonian, site)?;
        let runs = minimize_branch(&k, br.outcome, opts, scale);
        for (total, run) in per_restart.iter_mut().zip(&runs) {
            *total += run.value;
        }
        // Lowest value wins; ties go to the earlier restart.
        let best = runs
            .iter()
            .reduce(|a, b| if b.value < a.value { b } else { a })
            .expect("at least one restart");
        converged &= runs.iter().all(|r| r.converged);
        per_outcome.push(best.value);
        isometries.push(isometry_from_params(&best.params, opts.env_dim));
    }

    Ok(CoolingResult {
        e_r_numeric: per_outcome.iter().sum(),
        e_a,
        best_channel: LocalChannel::from_isometries(&isometries),
        restarts_used: opts.restarts,
        per_restart_minima: per_restart,
        per_outcome_minima: per_outcome,
        converged,
    })
}
