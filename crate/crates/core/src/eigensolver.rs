//! Ground states of Pauli-sum operators.
//!
//! The default path is a restarted Lanczos iteration with full
//! reorthogonalization against every stored Krylov vector. Chains of up to
//! ten sites can also be solved by dense diagonalization, which doubles as
//! the fallback when Lanczos runs out of iterations.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QetError, Result};
use crate::pauli::{HermitianOperator, PauliSum};
use crate::state::StateVector;

/// Chains up to this size may be diagonalized densely.
pub const DENSE_MAX_SITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Lanczos, falling back to dense diagonalization for small chains.
    Auto,
    Lanczos,
    Dense,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target residual `||Hv - Ev||`, in energy units.
    pub tol: f64,
    /// Total Lanczos steps over all restarts.
    pub max_iter: usize,
    pub seed: u64,
    pub krylov_dim: usize,
    /// Run a second, deflated Lanczos pass to estimate the spectral gap.
    pub estimate_gap: bool,
    /// Gaps below this are flagged as a degenerate ground space.
    pub degeneracy_threshold: f64,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            seed: 0,
            krylov_dim: 60,
            estimate_gap: true,
            degeneracy_threshold: 1e-8,
            method: SolverMethod::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energy: f64,
    pub state: StateVector,
    pub residual: f64,
    pub iterations: usize,
    /// Estimated distance to the next eigenvalue, when requested.
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub method: SolverMethod,
}

/// `op * state`, never forming a matrix.
pub fn apply(op: &PauliSum, state: &StateVector) -> Result<StateVector> {
    op.apply(state)
}

/// `<state|op|state>` without normalization or Hermiticity checks.
pub fn expectation_raw(state: &StateVector, op: &PauliSum) -> Complex64 {
    let mut out = vec![Complex64::default(); state.dim()];
    op.apply_into(state.amplitudes(), &mut out);
    state
        .amplitudes()
        .iter()
        .zip(&out)
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// Real expectation value of a Hermitian operator in a normalized state.
pub fn expectation(state: &StateVector, op: &HermitianOperator) -> Result<f64> {
    if state.n_sites() != op.n_sites() {
        return Err(QetError::DimensionMismatch {
            expected: op.n_sites(),
            found: state.n_sites(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QetError::NotNormalized { norm });
    }
    let v = expectation_raw(state, op);
    if v.im.abs() > 1e-12 * op.scale().max(1.0) {
        return Err(QetError::NotHermitian { residue: v.im.abs() });
    }
    Ok(v.re)
}

pub fn ground_state(op: &HermitianOperator, opts: &SolverOptions) -> Result<EigenResult> {
    let n = op.n_sites();
    match opts.method {
        SolverMethod::Dense => dense_ground_state(op, opts),
        SolverMethod::Lanczos => lanczos_ground_state(op, opts),
        SolverMethod::Auto => match lanczos_ground_state(op, opts) {
            Err(QetError::NotConverged { .. }) if n <= DENSE_MAX_SITES => {
                dense_ground_state(op, opts)
            }
            other => other,
        },
    }
}

fn lanczos_ground_state(op: &HermitianOperator, opts: &SolverOptions) -> Result<EigenResult> {
    let start = StateVector::random(op.n_sites(), opts.seed);
    let run = lanczos_lowest(op, start, &[], opts.tol, opts.max_iter, opts.krylov_dim);
    if run.residual >= opts.tol {
        return Err(QetError::NotConverged {
            iterations: run.iterations,
            residual: run.residual,
        });
    }
    let mut state = run.vector;
    state.fix_global_phase();
    let gap = if opts.estimate_gap && state.dim() > 1 {
        let start = StateVector::random(op.n_sites(), opts.seed.wrapping_add(0x9e37_79b9));
        let locked = [state.clone()];
        let excited = lanczos_lowest(
            op,
            start,
            &locked,
            opts.tol.max(1e-7),
            opts.max_iter,
            opts.krylov_dim,
        );
        Some(excited.value - run.value)
    } else {
        None
    };
    Ok(EigenResult {
        energy: run.value,
        state,
        residual: run.residual,
        iterations: run.iterations,
        degenerate: gap.is_some_and(|g| g < opts.degeneracy_threshold),
        gap,
        method: SolverMethod::Lanczos,
    })
}

struct LanczosRun {
    value: f64,
    vector: StateVector,
    residual: f64,
    iterations: usize,
}

fn orthogonalize(w: &mut StateVector, against: &[StateVector]) {
    // Two passes of classical Gram-Schmidt keep the basis orthogonal to
    // working precision.
    for _ in 0..2 {
        for v in against {
            let c = v.inner(w);
            w.axpy(-c, v);
        }
    }
}

/// Lowest eigenpair of `op` restricted to the complement of `locked`,
/// restarting from the current Ritz vector every `krylov_dim` steps.
fn lanczos_lowest(
    op: &PauliSum,
    start: StateVector,
    locked: &[StateVector],
    tol: f64,
    max_iter: usize,
    krylov_dim: usize,
) -> LanczosRun {
    let dim = start.dim();
    let m_max = krylov_dim.clamp(2, dim.saturating_sub(locked.len()).max(1));
    let breakdown = 1e-13 * op.scale().max(1.0);

    let mut v = start;
    orthogonalize(&mut v, locked);
    v.normalize();

    let mut best = LanczosRun {
        value: f64::INFINITY,
        vector: v.clone(),
        residual: f64::INFINITY,
        iterations: 0,
    };
    let mut iterations = 0usize;
    let mut w = v.clone();

    while iterations < max_iter {
        let mut basis: Vec<StateVector> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        loop {
            let j = basis.len() - 1;
            op.apply_into(basis[j].amplitudes(), w.amplitudes_mut());
            let alpha = basis[j].inner(&w).re;
            alphas.push(alpha);
            iterations += 1;
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let beta = w.norm();
            if basis.len() >= m_max || beta < breakdown || iterations >= max_iter {
                break;
            }
            betas.push(beta);
            let mut next = w.clone();
            next.normalize();
            basis.push(next);
        }

        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = alphas[k];
            if k + 1 < m {
                t[(k, k + 1)] = betas[k];
                t[(k + 1, k)] = betas[k];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (k_min, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &e)| if e < acc.1 { (k, e) } else { acc });
        let y = eig.eigenvectors.column(k_min);

        let mut x = basis[0].scaled(y[0]);
        for (k, b) in basis.iter().enumerate().skip(1) {
            x.axpy(y[k], b);
        }
        orthogonalize(&mut x, locked);
        x.normalize();

        op.apply_into(x.amplitudes(), w.amplitudes_mut());
        let rayleigh = x.inner(&w).re;
        w.axpy(-rayleigh, &x);
        orthogonalize(&mut w, locked);
        let residual = w.norm();

        if residual < best.residual {
            best = LanczosRun {
                value: rayleigh,
                vector: x.clone(),
                residual,
                iterations,
            };
        }
        best.iterations = iterations;
        if residual < tol {
            break;
        }
        v = x;
    }
    best
}

/// Dense diagonalization; real symmetric when the matrix has no imaginary
/// entries.
pub fn dense_spectrum(op: &PauliSum) -> (Vec<f64>, DMatrix<Complex64>) {
    let m = op.to_dense();
    if op.has_real_matrix() {
        let real = m.map(|c| c.re);
        let eig = SymmetricEigen::new(real);
        sort_eigen(
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|r| Complex64::new(r, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m);
        sort_eigen(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

fn sort_eigen(values: Vec<f64>, vectors: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, order[j])]
    });
    (sorted_values, sorted_vectors)
}

fn dense_ground_state(op: &HermitianOperator, opts: &SolverOptions) -> Result<EigenResult> {
    let n = op.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(QetError::InvalidChain(format!(
            "dense diagonalization limited to {DENSE_MAX_SITES} sites, got {n}"
        )));
    }
    let (values, vectors) = dense_spectrum(op);
    let amps = vectors.column(0).iter().copied().collect();
    let mut state = StateVector::from_amplitudes(n, amps)?;
    state.normalize();
    state.fix_global_phase();
    let hv = op.apply(&state)?;
    let mut r = hv;
    r.axpy(-values[0], &state);
    let gap = values.get(1).map(|e1| e1 - values[0]);
    Ok(EigenResult {
        energy: values[0],
        state,
        residual: r.norm(),
        iterations: 0,
        degenerate: gap.is_some_and(|g| g < opts.degeneracy_threshold),
        gap,
        method: SolverMethod::Dense,
    })
}
