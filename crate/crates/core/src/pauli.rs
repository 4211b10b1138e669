//! Pauli strings and weighted Pauli sums, applied matrix-free to state vectors.
//!
//! A string stores its letters as two bit masks: bit `n` of `x` is set for
//! `X` or `Y` on site `n`, bit `n` of `z` for `Z` or `Y`. Internally a string
//! with `k` `Y` letters acts as `i^k X^x Z^z`, which is what the bit kernels in
//! [`PauliSum::apply_into`] evaluate.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QetError, Result};
use crate::state::StateVector;

/// Largest chain the bit-mask representation supports.
pub const MAX_SITES: usize = 64;

/// Coefficients with magnitude below this (relative to the operator scale)
/// are dropped on canonicalization.
pub const DROP_TOLERANCE: f64 = 1e-15;

const PAR_CHUNK: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// `i^k` for `k` taken mod 4.
fn i_pow(k: i32) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    pub coeff: Complex64,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(coeff: impl Into<Complex64>) -> Self {
        Self {
            coeff: coeff.into(),
            x: 0,
            z: 0,
        }
    }

    /// Builds a string from `(site, letter)` pairs. Repeated sites multiply.
    pub fn new(coeff: impl Into<Complex64>, letters: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(coeff);
        for &(site, p) in letters {
            assert!(site < MAX_SITES, "site {site} exceeds {MAX_SITES}");
            let (x, z) = p.bits();
            let single = Self {
                coeff: Complex64::new(1.0, 0.0),
                x: (x as u64) << site,
                z: (z as u64) << site,
            };
            s = s.mul(&single);
        }
        s
    }

    pub fn letter(&self, site: usize) -> Pauli {
        Pauli::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    /// Bit mask of sites where the string acts non-trivially.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        let m = self.support_mask();
        (0..MAX_SITES).filter(|&k| m >> k & 1 == 1).collect()
    }

    pub fn masks(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    fn y_count(&self) -> i32 {
        (self.x & self.z).count_ones() as i32
    }

    pub fn mul(&self, other: &Self) -> Self {
        // (i^a X^xa Z^za)(i^b X^xb Z^zb) = i^(a+b) (-1)^|za&xb| X^(xa^xb) Z^(za^zb)
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let sign = if (self.z & other.x).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let ny = (x & z).count_ones() as i32;
        let phase = i_pow(self.y_count() + other.y_count() - ny) * sign;
        Self {
            coeff: self.coeff * other.coeff * phase,
            x,
            z,
        }
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    fn key(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    fn render(&self, n_sites: usize) -> String {
        (0..n_sites)
            .map(|k| match self.letter(k) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            })
            .collect()
    }
}

/// Weighted sum of Pauli strings on `n_sites` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn zero(n_sites: usize) -> Self {
        assert!(n_sites <= MAX_SITES);
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_sites: usize, coeff: impl Into<Complex64>) -> Self {
        Self::from_terms(n_sites, vec![PauliString::identity(coeff)])
    }

    /// A single-site Pauli component, e.g. `sigma^x_site`.
    pub fn single(n_sites: usize, site: usize, letter: Pauli, coeff: f64) -> Self {
        Self::from_terms(n_sites, vec![PauliString::new(coeff, &[(site, letter)])])
    }

    pub fn from_terms(n_sites: usize, terms: Vec<PauliString>) -> Self {
        assert!(n_sites <= MAX_SITES);
        let full = if n_sites == MAX_SITES {
            u64::MAX
        } else {
            (1u64 << n_sites) - 1
        };
        for t in &terms {
            assert!(
                t.support_mask() & !full == 0,
                "term acts outside {n_sites} sites"
            );
        }
        Self { n_sites, terms }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support_mask(&self) -> u64 {
        self.terms.iter().fold(0, |m, t| m | t.support_mask())
    }

    /// Largest coefficient magnitude; the reference scale for tolerances.
    pub fn scale(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// Merges identical letter patterns and drops coefficients below
    /// `DROP_TOLERANCE * scale`. Terms come out sorted by their masks.
    pub fn canonicalize(&self) -> Self {
        self.canonicalize_with(DROP_TOLERANCE * self.scale())
    }

    pub fn canonicalize_with(&self, threshold: f64) -> Self {
        let mut merged: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.key()).or_default() += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > threshold)
            .map(|((x, z), coeff)| PauliString { coeff, x, z })
            .collect();
        Self {
            n_sites: self.n_sites,
            terms,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_sites, other.n_sites);
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(self.n_sites, terms).canonicalize()
    }

    pub fn scale_by(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|t| PauliString {
                    coeff: t.coeff * c,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_sites, other.n_sites);
        let terms = self
            .terms
            .iter()
            .flat_map(|a| other.terms.iter().map(move |b| a.mul(b)))
            .collect();
        Self::from_terms(self.n_sites, terms).canonicalize()
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self).scale_by(-1.0))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|t| PauliString {
                    coeff: t.coeff.conj(),
                    ..*t
                })
                .collect(),
        }
    }

    /// Largest imaginary coefficient after canonicalization; zero for a
    /// Hermitian sum.
    pub fn hermiticity_residue(&self) -> f64 {
        self.canonicalize_with(0.0)
            .terms
            .iter()
            .map(|t| t.coeff.im.abs())
            .fold(0.0, f64::max)
    }

    /// True when the matrix in the computational basis is real.
    pub fn has_real_matrix(&self) -> bool {
        self.terms
            .iter()
            .all(|t| (t.coeff * i_pow(t.y_count())).im.abs() <= 1e-15 * self.scale().max(1.0))
    }

    /// Accumulates `self * input` into `out` (which is overwritten).
    ///
    /// Each output amplitude sums over the strings in a fixed order, so the
    /// result does not depend on how rayon splits the work.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = input.len();
        debug_assert_eq!(dim, out.len());
        let kernels: Vec<(u64, u64, Complex64)> = self
            .terms
            .iter()
            .map(|t| (t.x, t.z, t.coeff * i_pow(t.y_count())))
            .collect();
        let run = |offset: usize, chunk: &mut [Complex64]| {
            chunk.iter_mut().for_each(|v| *v = Complex64::default());
            for &(x, z, c) in &kernels {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let src = ((offset + k) as u64) ^ x;
                    let amp = input[src as usize];
                    if (src & z).count_ones() & 1 == 1 {
                        *slot -= c * amp;
                    } else {
                        *slot += c * amp;
                    }
                }
            }
        };
        if dim >= 4 * PAR_CHUNK {
            out.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(i, chunk)| run(i * PAR_CHUNK, chunk));
        } else {
            run(0, out);
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_sites() != self.n_sites {
            return Err(QetError::DimensionMismatch {
                expected: self.n_sites,
                found: state.n_sites(),
            });
        }
        let mut out = vec![Complex64::default(); state.dim()];
        self.apply_into(state.amplitudes(), &mut out);
        Ok(StateVector::from_amplitudes_unchecked(self.n_sites, out))
    }

    /// Restricts the sum to `sites` (in the given order), re-indexing site
    /// `sites[k]` to `k`. Panics if a term acts outside `sites`.
    pub fn restrict(&self, sites: &[usize]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let letters: Vec<(usize, Pauli)> = t
                    .support()
                    .into_iter()
                    .map(|s| {
                        let k = sites
                            .iter()
                            .position(|&q| q == s)
                            .unwrap_or_else(|| panic!("term acts on site {s} outside restriction"));
                        (k, t.letter(s))
                    })
                    .collect();
                PauliString::new(t.coeff, &letters)
            })
            .collect();
        Self::from_terms(sites.len(), terms)
    }

    /// Dense matrix in the computational basis. Only for small supports.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        assert!(self.n_sites <= 14, "dense matrix too large");
        let dim = 1usize << self.n_sites;
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        let mut col = vec![Complex64::default(); dim];
        let mut basis = vec![Complex64::default(); dim];
        for j in 0..dim {
            basis[j] = Complex64::new(1.0, 0.0);
            self.apply_into(&basis, &mut col);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
            basis[j] = Complex64::default();
        }
        m
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i) {}", t.coeff.re, t.coeff.im, t.render(self.n_sites))?;
        }
        Ok(())
    }
}

/// A Pauli sum with real coefficients, i.e. a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(PauliSum);

impl HermitianOperator {
    /// Canonicalizes `sum` and checks that every coefficient is real to
    /// `1e-12` relative to its scale; the imaginary parts are then discarded.
    pub fn new(sum: PauliSum) -> Result<Self> {
        let sum = sum.canonicalize();
        let tol = 1e-12 * sum.scale().max(1.0);
        let residue = sum.hermiticity_residue();
        if residue > tol {
            return Err(QetError::NotHermitian { residue });
        }
        let terms = sum
            .terms
            .iter()
            .map(|t| PauliString {
                coeff: Complex64::new(t.coeff.re, 0.0),
                ..*t
            })
            .collect();
        Ok(Self(PauliSum::from_terms(sum.n_sites, terms)))
    }

    pub fn as_sum(&self) -> &PauliSum {
        &self.0
    }

    pub fn into_sum(self) -> PauliSum {
        self.0
    }

    pub fn sum_with(&self, other: &Self) -> Self {
        Self(self.0.add(&other.0))
    }
}

impl Deref for HermitianOperator {
    type Target = PauliSum;

    fn deref(&self) -> &PauliSum {
        &self.0
    }
}
