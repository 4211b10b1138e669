//! The critical transverse-field Ising chain written as a sum of site-local
//! energy densities
//!
//! ```text
//! T_n = -J sigma^z_n - (J/2) sigma^x_n (sigma^x_{n+1} + sigma^x_{n-1}) - eps_n
//! ```
//!
//! with the offsets `eps_n` chosen so that every density vanishes in the
//! ground state. Open chains drop the missing neighbor and need per-site
//! offsets; periodic chains end up with a uniform one.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{expectation, expectation_raw, ground_state, EigenResult, SolverOptions};
use crate::error::{QetError, Result};
use crate::pauli::{HermitianOperator, Pauli, PauliString, PauliSum};
use crate::state::{StateVector, MAX_STATE_SITES};

/// `max_n |<g|T_n|g>|` allowed after calibration, in units of `J`.
pub const CALIBRATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl FromStr for Boundary {
    type Err = QetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            other => Err(QetError::Config(format!("unknown boundary '{other}'"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
    boundary: Boundary,
    epsilon: Vec<f64>,
    site_a: usize,
    site_b: usize,
}

impl ChainSpec {
    /// A chain with all offsets zero. Sites are 0-based.
    pub fn new(
        n_sites: usize,
        coupling: f64,
        boundary: Boundary,
        site_a: usize,
        site_b: usize,
    ) -> Result<Self> {
        if n_sites < 3 {
            return Err(QetError::InvalidChain(format!(
                "need at least 3 sites, got {n_sites}"
            )));
        }
        if n_sites > MAX_STATE_SITES {
            return Err(QetError::InvalidChain(format!(
                "{n_sites} sites exceeds the state-vector limit of {MAX_STATE_SITES}"
            )));
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(QetError::InvalidChain(format!(
                "coupling must be positive and finite, got {coupling}"
            )));
        }
        for site in [site_a, site_b] {
            if site >= n_sites {
                return Err(QetError::SiteOutOfRange { site, n_sites });
            }
        }
        if site_a == site_b {
            return Err(QetError::InvalidChain(format!(
                "sender and receiver share site {site_a}"
            )));
        }
        Ok(Self {
            n_sites,
            coupling,
            boundary,
            epsilon: vec![0.0; n_sites],
            site_a,
            site_b,
        })
    }

    pub fn with_epsilon(mut self, epsilon: Vec<f64>) -> Result<Self> {
        if epsilon.len() != self.n_sites {
            return Err(QetError::InvalidChain(format!(
                "expected {} offsets, got {}",
                self.n_sites,
                epsilon.len()
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_sites(mut self, site_a: usize, site_b: usize) -> Result<Self> {
        let fresh = Self::new(self.n_sites, self.coupling, self.boundary, site_a, site_b)?;
        self.site_a = fresh.site_a;
        self.site_b = fresh.site_b;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn site_a(&self) -> usize {
        self.site_a
    }

    pub fn site_b(&self) -> usize {
        self.site_b
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(QetError::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    /// Nearest neighbors of `n`, left one first.
    pub fn neighbors(&self, n: usize) -> Vec<usize> {
        let last = self.n_sites - 1;
        match self.boundary {
            Boundary::Periodic => vec![(n + last) % self.n_sites, (n + 1) % self.n_sites],
            Boundary::Open => {
                let mut v = Vec::with_capacity(2);
                if n > 0 {
                    v.push(n - 1);
                }
                if n < last {
                    v.push(n + 1);
                }
                v
            }
        }
    }

    /// Sites `T_n` acts on, in ascending order.
    pub fn density_support(&self, n: usize) -> Vec<usize> {
        let mut s = self.neighbors(n);
        s.push(n);
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Chain distance; circular for periodic chains.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Periodic => d.min(self.n_sites - d),
            Boundary::Open => d,
        }
    }

    /// Distance between the sender and receiver sites.
    pub fn separation(&self) -> usize {
        self.distance(self.site_a, self.site_b)
    }
}

/// `T_n` without its offset.
fn bare_density(spec: &ChainSpec, n: usize) -> PauliSum {
    let j = spec.coupling;
    let mut terms = vec![PauliString::new(-j, &[(n, Pauli::Z)])];
    for m in spec.neighbors(n) {
        terms.push(PauliString::new(-0.5 * j, &[(n, Pauli::X), (m, Pauli::X)]));
    }
    PauliSum::from_terms(spec.n_sites, terms)
}

pub fn build_energy_density(spec: &ChainSpec, n: usize) -> Result<HermitianOperator> {
    spec.check_site(n)?;
    let mut sum = bare_density(spec, n);
    let offset = PauliSum::identity(spec.n_sites, -spec.epsilon[n]);
    sum = PauliSum::from_terms(
        spec.n_sites,
        sum.terms().iter().chain(offset.terms()).copied().collect(),
    );
    HermitianOperator::new(sum.canonicalize_with(DROP_SCALE * spec.coupling))
}

const DROP_SCALE: f64 = crate::pauli::DROP_TOLERANCE;

pub fn build_densities(spec: &ChainSpec) -> Vec<HermitianOperator> {
    (0..spec.n_sites)
        .map(|n| build_energy_density(spec, n).expect("site in range"))
        .collect()
}

/// `H = sum_n T_n`, canonicalized.
pub fn build_hamiltonian(spec: &ChainSpec) -> HermitianOperator {
    let terms = (0..spec.n_sites)
        .flat_map(|n| {
            build_energy_density(spec, n)
                .expect("site in range")
                .into_sum()
                .terms()
                .to_vec()
        })
        .collect();
    let sum = PauliSum::from_terms(spec.n_sites, terms).canonicalize_with(DROP_SCALE * spec.coupling);
    HermitianOperator::new(sum).expect("real coefficients")
}

/// Offsets `eps_n = <g| bare T_n |g>` that make every `<g|T_n|g>` vanish.
pub fn calibrate_epsilon(spec: &ChainSpec, g: &StateVector) -> Result<Vec<f64>> {
    if g.n_sites() != spec.n_sites {
        return Err(QetError::DimensionMismatch {
            expected: spec.n_sites,
            found: g.n_sites(),
        });
    }
    let norm = g.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QetError::NotNormalized { norm });
    }
    (0..spec.n_sites)
        .map(|n| {
            let bare = HermitianOperator::new(bare_density(spec, n))?;
            expectation(g, &bare)
        })
        .collect()
}

/// A chain together with its calibrated Hamiltonian and ground state.
#[derive(Debug, Clone)]
pub struct CalibratedChain {
    pub spec: ChainSpec,
    pub hamiltonian: HermitianOperator,
    pub densities: Vec<HermitianOperator>,
    /// Ground state of the calibrated `H`; `energy` is `<g|H|g>`.
    pub ground: EigenResult,
}

impl CalibratedChain {
    pub fn density_profile(&self, state: &StateVector) -> Vec<f64> {
        self.densities
            .iter()
            .map(|t| expectation_raw(state, t).re)
            .collect()
    }

    /// Same chain with different sender/receiver sites. The ground state
    /// does not depend on them.
    pub fn with_sites(&self, site_a: usize, site_b: usize) -> Result<Self> {
        let mut c = self.clone();
        c.spec = c.spec.with_sites(site_a, site_b)?;
        Ok(c)
    }
}

/// Solves for the ground state, fixes the offsets and rebuilds `H`.
///
/// Offsets only shift `H` by a multiple of the identity, so the ground state
/// of the uncalibrated chain is reused.
pub fn calibrate(spec: ChainSpec, opts: &SolverOptions) -> Result<CalibratedChain> {
    let j = spec.coupling;
    let bare = spec.clone().with_epsilon(vec![0.0; spec.n_sites])?;
    let h0 = build_hamiltonian(&bare);
    let scaled = SolverOptions {
        tol: opts.tol * j,
        degeneracy_threshold: opts.degeneracy_threshold * j,
        ..opts.clone()
    };
    let mut ground = ground_state(&h0, &scaled)?;
    let eps = calibrate_epsilon(&bare, &ground.state)?;
    let spec = bare.with_epsilon(eps)?;
    let hamiltonian = build_hamiltonian(&spec);
    let densities = build_densities(&spec);
    let max_density = densities
        .iter()
        .map(|t| expectation_raw(&ground.state, t).re.abs())
        .fold(0.0, f64::max);
    if max_density > CALIBRATION_TOLERANCE * j {
        return Err(QetError::CalibrationFailed { max_density });
    }
    ground.energy = expectation(&ground.state, &hamiltonian)?;
    Ok(CalibratedChain {
        spec,
        hamiltonian,
        densities,
        ground,
    })
}

/// Spectrum of `T_n` on its own support.
#[derive(Debug, Clone, Serialize)]
pub struct LocalSpectrum {
    pub site: usize,
    /// Support sites, ascending; local basis bit `k` is `support[k]`.
    pub support: Vec<usize>,
    /// Distinct eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    #[serde(skip)]
    projectors: Vec<DMatrix<Complex64>>,
}

impl LocalSpectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Weights `<g|Pi_nu|g>` of `state` on each eigenspace of `T_n`.
    pub fn level_weights(&self, state: &StateVector) -> Vec<f64> {
        let rho = state.reduced_density_matrix(&self.support);
        self.projectors
            .iter()
            .map(|p| (&rho * p).trace().re)
            .collect()
    }
}

/// Eigenvalues closer than this are merged into one level.
const LEVEL_MERGE: f64 = 1e-9;

pub fn local_density_spectrum(spec: &ChainSpec, n: usize) -> Result<LocalSpectrum> {
    let t = build_energy_density(spec, n)?;
    let support = spec.density_support(n);
    let local = t.restrict(&support);
    let (values, vectors) = crate::eigensolver::dense_spectrum(&local);
    let dim = values.len();

    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut multiplicities = Vec::new();
    let mut projectors: Vec<DMatrix<Complex64>> = Vec::new();
    for (k, &e) in values.iter().enumerate() {
        let v = vectors.column(k);
        let outer = v * v.adjoint();
        match eigenvalues.last() {
            Some(&last) if (e - last).abs() <= LEVEL_MERGE * spec.coupling.max(1.0) => {
                *multiplicities.last_mut().unwrap() += 1;
                *projectors.last_mut().unwrap() += outer;
            }
            _ => {
                eigenvalues.push(e);
                multiplicities.push(1);
                projectors.push(outer);
            }
        }
    }
    debug_assert_eq!(multiplicities.iter().sum::<usize>(), dim);
    Ok(LocalSpectrum {
        site: n,
        support,
        eigenvalues,
        multiplicities,
        projectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    /// `<g|T O|g>`
    pub lhs: f64,
    /// `<g|T|g> <g|O|g>`
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `<g|T O|g>` with `<g|T|g><g|O|g>` for operators on disjoint
/// supports.
pub fn correlation_check(
    g: &StateVector,
    t: &HermitianOperator,
    o: &HermitianOperator,
) -> Result<Correlation> {
    if t.support_mask() & o.support_mask() != 0 {
        return Err(QetError::OverlappingSupport(format!(
            "supports {:#b} and {:#b} share sites",
            t.support_mask(),
            o.support_mask()
        )));
    }
    let product = t.mul(o);
    let lhs = expectation_raw(g, &product);
    let rhs = expectation(g, t)? * expectation(g, o)?;
    Ok(Correlation {
        lhs: lhs.re,
        rhs,
        gap: (lhs.re - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(n: usize) -> ChainSpec {
        ChainSpec::new(n, 1.0, Boundary::Periodic, 0, 1).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ChainSpec::new(2, 1.0, Boundary::Periodic, 0, 1).is_err());
        assert!(ChainSpec::new(6, 0.0, Boundary::Periodic, 0, 1).is_err());
        assert!(ChainSpec::new(6, 1.0, Boundary::Periodic, 2, 2).is_err());
        assert!(matches!(
            ChainSpec::new(6, 1.0, Boundary::Periodic, 0, 6),
            Err(QetError::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn interior_density_has_three_strings() {
        let t = build_energy_density(&periodic(6), 2).unwrap();
        assert_eq!(t.len(), 3);
        let mut coeffs: Vec<f64> = t.terms().iter().map(|s| s.coeff.re).collect();
        coeffs.sort_by(f64::total_cmp);
        assert_eq!(coeffs, vec![-1.0, -0.5, -0.5]);
        for s in t.terms() {
            assert_ne!(s.letter(2), Pauli::I);
        }
    }

    #[test]
    fn open_edge_density_has_two_strings() {
        let spec = ChainSpec::new(6, 1.0, Boundary::Open, 0, 1).unwrap();
        let t = build_energy_density(&spec, 0).unwrap();
        assert_eq!(t.len(), 2);
        let xx = t.terms().iter().find(|s| s.support().len() == 2).unwrap();
        assert_eq!(xx.support(), vec![0, 1]);
        assert!((xx.coeff.re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_rejects_out_of_range_site() {
        assert!(matches!(
            build_energy_density(&periodic(5), 5),
            Err(QetError::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn offset_appears_as_identity_term() {
        let spec = periodic(4).with_epsilon(vec![0.25; 4]).unwrap();
        let t = build_energy_density(&spec, 1).unwrap();
        let id = t.terms().iter().find(|s| s.support_mask() == 0).unwrap();
        assert!((id.coeff.re + 0.25).abs() < 1e-15);
    }

    #[test]
    fn three_site_hamiltonian_by_hand() {
        let h = build_hamiltonian(&periodic(3));
        assert_eq!(h.len(), 6);
        for s in h.terms() {
            assert!((s.coeff.re + 1.0).abs() < 1e-15, "{}", h.as_sum());
        }
    }

    #[test]
    fn hamiltonian_is_sum_of_densities() {
        let spec = ChainSpec::new(7, 0.8, Boundary::Open, 0, 3)
            .unwrap()
            .with_epsilon((0..7).map(|k| 0.1 * k as f64).collect())
            .unwrap();
        let total = build_densities(&spec)
            .into_iter()
            .reduce(|a, b| a.sum_with(&b))
            .unwrap();
        assert_eq!(total, build_hamiltonian(&spec));
    }

    #[test]
    fn distances() {
        let p = periodic(10);
        assert_eq!(p.distance(1, 9), 2);
        assert_eq!(p.distance(0, 5), 5);
        let o = ChainSpec::new(10, 1.0, Boundary::Open, 0, 1).unwrap();
        assert_eq!(o.distance(1, 9), 8);
        assert_eq!(o.density_support(9), vec![8, 9]);
        assert_eq!(p.density_support(0), vec![0, 1, 9]);
    }

    #[test]
    fn calibration_zeroes_densities() {
        let chain = calibrate(periodic(8), &SolverOptions::default()).unwrap();
        let eps = chain.spec.epsilon();
        for e in eps {
            assert!((e - eps[0]).abs() < 1e-10);
        }
        for t in chain.density_profile(&chain.ground.state) {
            assert!(t.abs() < 1e-10);
        }
        assert!(chain.ground.energy.abs() < 1e-9);
    }

    #[test]
    fn calibrate_epsilon_rejects_unnormalized_state() {
        let spec = periodic(4);
        let g = StateVector::all_up(4).scaled(3.0);
        assert!(matches!(
            calibrate_epsilon(&spec, &g),
            Err(QetError::NotNormalized { .. })
        ));
    }

    #[test]
    fn local_spectrum_structure() {
        let chain = calibrate(periodic(8), &SolverOptions::default()).unwrap();
        let s = local_density_spectrum(&chain.spec, 3).unwrap();
        assert_eq!(s.multiplicities.iter().sum::<usize>(), 8);
        assert!(s.min() < 0.0);
        let trace: f64 = s
            .eigenvalues
            .iter()
            .zip(&s.multiplicities)
            .map(|(e, &m)| e * m as f64)
            .sum();
        assert!((trace + 8.0 * chain.spec.epsilon()[3]).abs() < 1e-10);
        let w = s.level_weights(&chain.ground.state);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = s.eigenvalues.iter().zip(&w).map(|(e, p)| e * p).sum();
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn correlation_rejects_overlap() {
        let spec = periodic(6);
        let t = build_energy_density(&spec, 2).unwrap();
        let o = HermitianOperator::new(PauliSum::single(6, 3, Pauli::Z, 1.0)).unwrap();
        assert!(matches!(
            correlation_check(&StateVector::all_up(6), &t, &o),
            Err(QetError::OverlappingSupport(_))
        ));
    }

    #[test]
    fn product_state_factorizes() {
        let spec = periodic(6);
        let t = build_energy_density(&spec, 1).unwrap();
        let o = HermitianOperator::new(PauliSum::single(6, 4, Pauli::X, 1.0)).unwrap();
        let c = Complex64::new(0.6, 0.0);
        let s = Complex64::new(0.0, 0.8);
        let psi = StateVector::product(&[[c, s], [s, c], [c, -s], [c, s], [s, c], [c, -s]]);
        let r = correlation_check(&psi, &t, &o).unwrap();
        assert!(r.gap < 1e-12);
    }
}
