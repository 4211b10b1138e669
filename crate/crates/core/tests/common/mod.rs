//! Independent dense references built from explicit Kronecker products.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use qet::pauli::{Pauli, PauliString, PauliSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn pauli_matrix(p: Pauli) -> DMatrix<C> {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `sigma_{n-1} (x) ... (x) sigma_0`, so site `k` is bit `k` of the index.
pub fn site_product(n: usize, letters: &[(usize, Pauli)]) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for site in (0..n).rev() {
        let p = letters
            .iter()
            .find(|(s, _)| *s == site)
            .map_or(Pauli::I, |(_, p)| *p);
        m = kron(&m, &pauli_matrix(p));
    }
    m
}

pub fn string_matrix(n: usize, s: &PauliString) -> DMatrix<C> {
    let letters: Vec<(usize, Pauli)> = (0..n).map(|k| (k, s.letter(k))).collect();
    site_product(n, &letters) * s.coeff
}

pub fn sum_matrix(sum: &PauliSum) -> DMatrix<C> {
    let n = sum.n_sites();
    let d = 1usize << n;
    sum.terms()
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, s| acc + string_matrix(n, s))
}

/// The critical transverse-field chain written out term by term:
/// `-J sum Z_n - J sum_bonds X_n X_m - sum eps_n`.
pub fn ising_matrix(n: usize, j: f64, periodic: bool, eps: &[f64]) -> DMatrix<C> {
    let d = 1usize << n;
    let mut h = DMatrix::<C>::zeros(d, d);
    for k in 0..n {
        h -= site_product(n, &[(k, Pauli::Z)]) * c(j, 0.0);
    }
    let bonds = if periodic { n } else { n - 1 };
    for k in 0..bonds {
        let m = (k + 1) % n;
        h -= site_product(n, &[(k, Pauli::X), (m, Pauli::X)]) * c(j, 0.0);
    }
    let shift: f64 = eps.iter().sum();
    for i in 0..d {
        h[(i, i)] -= c(shift, 0.0);
    }
    h
}

pub fn lowest_eigenvalue(h: &DMatrix<C>) -> f64 {
    let im = h.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if im == 0.0 {
        let r = h.map(|z| z.re);
        r.symmetric_eigenvalues().min()
    } else {
        h.clone().symmetric_eigenvalues().min()
    }
}

pub fn to_vector(amps: &[C]) -> DVector<C> {
    DVector::from_column_slice(amps)
}

pub fn random_sum(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> PauliSum {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let strings = (0..terms)
        .map(|_| {
            let ls: Vec<(usize, Pauli)> = (0..n)
                .map(|k| (k, letters[rng.random_range(0..4)]))
                .collect();
            PauliString::new(c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), &ls)
        })
        .collect();
    PauliSum::from_terms(n, strings)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `prod_{k=1}^{n-1} k^(n-k)` exactly.
pub fn h_exact(n: u64) -> BigInt {
    (1..n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k).pow((n - k) as u32))
}

/// `2^(2n(n-1)) h(n)^4 / ((4n^2 - 1) h(2n))` as an exact rational, so
/// `Delta(n) = (2/pi)^n` times this.
pub fn delta_rational_part(n: u64) -> BigRational {
    let num = (BigInt::one() << (2 * n * (n - 1)) as usize) * h_exact(n).pow(4);
    let den = BigInt::from(4 * n * n - 1) * h_exact(2 * n);
    BigRational::new(num, den)
}

pub fn delta_exact(n: u64) -> f64 {
    delta_rational_part(n)
        .to_f64().expect("finite") * (2.0 / std::f64::consts::PI).powi(n as i32)
}

pub fn max_entry_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}
