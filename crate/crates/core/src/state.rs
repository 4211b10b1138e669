use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QetError, Result};

/// Largest chain a state vector may describe.
pub const MAX_STATE_SITES: usize = 26;

/// Pure state of `n_sites` qubits as `2^n_sites` complex amplitudes.
///
/// Basis index bit `n` is the spin at site `n`; bit value 0 is the `sigma^z = +1`
/// eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_sites: usize, index: usize) -> Self {
        assert!(n_sites <= MAX_STATE_SITES);
        let mut amps = vec![Complex64::default(); 1 << n_sites];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_sites, amps }
    }

    /// All spins up along z, `|00...0>`.
    pub fn all_up(n_sites: usize) -> Self {
        Self::basis(n_sites, 0)
    }

    /// Normalized random state with Gaussian amplitudes.
    pub fn random(n_sites: usize, seed: u64) -> Self {
        assert!(n_sites <= MAX_STATE_SITES);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1usize << n_sites)
            .map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let mut s = Self { n_sites, amps };
        s.normalize();
        s
    }

    /// Tensor product of single-site states, `factors[n]` on site `n`.
    pub fn product(factors: &[[Complex64; 2]]) -> Self {
        let n_sites = factors.len();
        assert!(n_sites <= MAX_STATE_SITES);
        let amps = (0..1usize << n_sites)
            .map(|b| {
                factors
                    .iter()
                    .enumerate()
                    .map(|(n, f)| f[b >> n & 1])
                    .product()
            })
            .collect();
        Self { n_sites, amps }
    }

    pub fn from_amplitudes(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_sites > MAX_STATE_SITES || amps.len() != 1usize << n_sites {
            return Err(QetError::DimensionMismatch {
                expected: n_sites,
                found: amps.len().trailing_zeros() as usize,
            });
        }
        Ok(Self { n_sites, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(n_sites: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_sites);
        Self { n_sites, amps }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Scales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    pub fn scaled(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self {
            n_sites: self.n_sites,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: impl Into<Complex64>, other: &Self) {
        let c = c.into();
        self.amps
            .iter_mut()
            .zip(&other.amps)
            .for_each(|(a, b)| *a += c * b);
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Multiplies by a global phase so the largest-magnitude amplitude is
    /// real and positive.
    pub fn fix_global_phase(&mut self) {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for (k, a) in self.amps.iter().enumerate() {
            let m = a.norm_sqr();
            if m > best_mag * (1.0 + 1e-10) {
                best = k;
                best_mag = m;
            }
        }
        let a = self.amps[best];
        if a.norm() > 0.0 {
            let phase = a.conj() / a.norm();
            self.amps.iter_mut().for_each(|v| *v *= phase);
        }
    }

    /// Applies a 2x2 matrix on `site`.
    pub fn apply_local(&self, site: usize, m: &Matrix2<Complex64>) -> Self {
        assert!(site < self.n_sites);
        let bit = 1usize << site;
        let mut out = self.amps.clone();
        for b in 0..self.amps.len() {
            if b & bit != 0 {
                continue;
            }
            let a0 = self.amps[b];
            let a1 = self.amps[b | bit];
            out[b] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            out[b | bit] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
        }
        Self {
            n_sites: self.n_sites,
            amps: out,
        }
    }

    /// Reduced density matrix on `sites`; row index bit `k` is the spin at
    /// `sites[k]`.
    pub fn reduced_density_matrix(&self, sites: &[usize]) -> DMatrix<Complex64> {
        let k = sites.len();
        let dim_s = 1usize << k;
        let mask: usize = sites.iter().map(|s| 1usize << s).sum();
        let spread = |l: usize| -> usize {
            sites
                .iter()
                .enumerate()
                .map(|(j, &s)| (l >> j & 1) << s)
                .sum()
        };
        let mut rho = DMatrix::<Complex64>::zeros(dim_s, dim_s);
        for b in 0..self.amps.len() {
            if b & mask != 0 {
                continue;
            }
            for i in 0..dim_s {
                let ai = self.amps[b | spread(i)];
                if ai == Complex64::default() {
                    continue;
                }
                for j in 0..dim_s {
                    rho[(i, j)] += ai * self.amps[b | spread(j)].conj();
                }
            }
        }
        rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_normalized_and_reproducible() {
        let a = StateVector::random(5, 7);
        let b = StateVector::random(5, 7);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, b);
        assert_ne!(a, StateVector::random(5, 8));
    }

    #[test]
    fn product_state_layout() {
        let up = [Complex64::new(1.0, 0.0), Complex64::default()];
        let down = [Complex64::default(), Complex64::new(1.0, 0.0)];
        let s = StateVector::product(&[down, up, up]);
        assert_eq!(s, StateVector::basis(3, 0b001));
    }

    #[test]
    fn fixed_phase_makes_peak_real_positive() {
        let mut s = StateVector::random(4, 3).scaled(Complex64::new(0.0, -1.0));
        s.fix_global_phase();
        let peak = s
            .amplitudes()
            .iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        assert!(peak.im.abs() < 1e-14 && peak.re > 0.0);
    }

    #[test]
    fn reduced_density_matrix_has_unit_trace() {
        let s = StateVector::random(5, 11);
        let rho = s.reduced_density_matrix(&[4, 1]);
        let tr: Complex64 = (0..4).map(|i| rho[(i, i)]).sum();
        assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((&rho - rho.adjoint()).norm() < 1e-12);
    }
}
