//! The three-step teleportation protocol: A measures a Pauli component on
//! its site, announces the outcome `mu`, and B applies
//! `V_B(mu) = cos(theta) I + i (-1)^mu sin(theta) sigma_B`.
//!
//! Mixed states are kept as weighted pure branches, one per measurement
//! outcome. No time evolution happens between the steps.
//!
//! After feedback the energy is exactly
//! `E_A + (eta/2) sin(2 theta) + (xi/2)(1 - cos(2 theta))`. The coefficients
//! used here are read off the post-measurement ensemble, which makes that
//! identity hold for every geometry. When A sits outside the support of
//! `[H, sigma_B]` (separation at least two) they coincide with the
//! ground-state correlators `xi = <g|sigma_B H sigma_B|g>` and
//! `eta = i <g|sigma_A [H, sigma_B]|g>`, reported alongside as
//! [`ProtocolResult::ground_correlators`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::CalibratedChain;
use crate::eigensolver::expectation_raw;
use crate::error::{QetError, Result};
use crate::pauli::{HermitianOperator, Pauli, PauliString, PauliSum};
use crate::state::StateVector;

/// Branches lighter than this carry weight zero.
pub const BRANCH_WEIGHT_FLOOR: f64 = 1e-14;

/// `|eta|` at or below this (in units of `J`) counts as zero: no energy can
/// be extracted.
pub const ETA_FLOOR: f64 = 1e-12;

/// Imaginary residue tolerated on `eta`, in units of `J`.
pub const ETA_IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Unit Bloch vector selecting a Pauli component `a . sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis([f64; 3]);

impl Axis {
    pub const X: Axis = Axis([1.0, 0.0, 0.0]);
    pub const Y: Axis = Axis([0.0, 1.0, 0.0]);
    pub const Z: Axis = Axis([0.0, 0.0, 1.0]);

    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(QetError::InvalidAxis(format!("{v:?} has no direction")));
        }
        Ok(Axis([v[0] / n, v[1] / n, v[2] / n]))
    }

    /// Direction at polar angle `theta` and azimuth `phi`.
    pub fn spherical(theta: f64, phi: f64) -> Self {
        Axis([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// `a . sigma` on `site`.
    pub fn pauli(&self, n_sites: usize, site: usize) -> HermitianOperator {
        let terms = [Pauli::X, Pauli::Y, Pauli::Z]
            .iter()
            .zip(self.0)
            .map(|(&p, c)| PauliString::new(c, &[(site, p)]))
            .collect();
        HermitianOperator::new(PauliSum::from_terms(n_sites, terms))
            .expect("real coefficients")
    }

    fn label(&self) -> String {
        if *self == Axis::X {
            "x".into()
        } else if *self == Axis::Y {
            "y".into()
        } else if *self == Axis::Z {
            "z".into()
        } else {
            let [a, b, c] = self.0;
            format!("{a:.6}:{b:.6}:{c:.6}")
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Axis {
    type Err = QetError;

    /// `x`, `y`, `z`, or three components separated by `:` (e.g. `1:0:1`).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => {
                let parts: Vec<f64> = other
                    .split(':')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| QetError::InvalidAxis(format!("'{s}': {e}")))?;
                let v: [f64; 3] = parts
                    .try_into()
                    .map_err(|_| QetError::InvalidAxis(format!("'{s}' needs 3 components")))?;
                Axis::new(v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetup {
    pub axis_a: Axis,
    pub axis_b: Axis,
}

impl MeasurementSetup {
    pub fn new(axis_a: Axis, axis_b: Axis) -> Self {
        Self { axis_a, axis_b }
    }
}

impl Default for MeasurementSetup {
    fn default() -> Self {
        Self::new(Axis::X, Axis::X)
    }
}

impl fmt::Display for MeasurementSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.axis_a, self.axis_b)
    }
}

impl FromStr for MeasurementSetup {
    type Err = QetError;

    /// `"a,b"`, e.g. `"y,x"` or `"0:1:0,1:0:0"`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| QetError::InvalidAxis(format!("'{s}' is not 'axis_a,axis_b'")))?;
        Ok(Self::new(a.parse()?, b.parse()?))
    }
}

/// `P_mu = (I + (-1)^mu a.sigma) / 2` on `site`.
pub fn projectors(
    axis: &Axis,
    n_sites: usize,
    site: usize,
) -> Result<(HermitianOperator, HermitianOperator)> {
    if site >= n_sites {
        return Err(QetError::SiteOutOfRange { site, n_sites });
    }
    let sigma = axis.pauli(n_sites, site);
    let half = PauliSum::identity(n_sites, 0.5);
    let p0 = HermitianOperator::new(half.add(&sigma.scale_by(0.5)))?;
    let p1 = HermitianOperator::new(half.add(&sigma.scale_by(-0.5)))?;
    Ok((p0, p1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    /// Normalized, except for zero-weight branches.
    pub state: StateVector,
    pub outcome: usize,
}

/// `rho = sum_k w_k |psi_k><psi_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEnsemble {
    pub branches: Vec<Branch>,
}

impl MixedEnsemble {
    pub fn pure(state: StateVector) -> Self {
        Self {
            branches: vec![Branch {
                weight: 1.0,
                state,
                outcome: 0,
            }],
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// `Tr[rho O]` for a Hermitian `O`.
    pub fn expectation(&self, op: &PauliSum) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.weight > 0.0)
            .map(|b| b.weight * expectation_raw(&b.state, op).re)
            .sum()
    }

    /// `Tr[rho T_n]` for every density.
    pub fn profile(&self, densities: &[HermitianOperator]) -> Vec<f64> {
        densities.iter().map(|t| self.expectation(t)).collect()
    }
}

/// A's projective measurement. Returns the outcome branches and
/// `E_A = sum_mu <g|P_mu H P_mu|g>`.
pub fn measure(
    g: &StateVector,
    p0: &HermitianOperator,
    p1: &HermitianOperator,
    h: &HermitianOperator,
) -> Result<(MixedEnsemble, f64)> {
    let mut branches = Vec::with_capacity(2);
    let mut e_a = 0.0;
    for (outcome, p) in [p0, p1].into_iter().enumerate() {
        let mut v = p.apply(g)?;
        let w = v.norm_sqr();
        e_a += expectation_raw(&v, h).re;
        let weight = if w < BRANCH_WEIGHT_FLOOR {
            0.0
        } else {
            v.normalize();
            w
        };
        branches.push(Branch {
            weight,
            state: v,
            outcome,
        });
    }
    Ok((MixedEnsemble { branches }, e_a))
}

/// `xi = <g|sigma_B H sigma_B|g>` and `eta = i <g|sigma_A [H, sigma_B]|g>`
/// in the ground state. Fails if `eta` has an imaginary part, which happens
/// when `sigma_A` overlaps the support of `[H, sigma_B]`.
pub fn xi_eta(
    g: &StateVector,
    sigma_a: &HermitianOperator,
    sigma_b: &HermitianOperator,
    h: &HermitianOperator,
) -> Result<(f64, f64)> {
    let b = sigma_b.apply(g)?;
    let hb = h.apply(&b)?;
    let xi = b.inner(&hb);
    let a = sigma_a.apply(g)?;
    let bhg = sigma_b.apply(&h.apply(g)?)?;
    // i (<a|H sigma_B g> - <a|sigma_B H g>)
    let eta = Complex64::i() * (a.inner(&hb) - a.inner(&bhg));
    let tol = ETA_IMAGINARY_TOLERANCE * h.scale().max(1.0);
    let residue = xi.im.abs().max(eta.im.abs());
    if residue > tol {
        return Err(QetError::NotHermitian { residue });
    }
    Ok((xi.re, eta.re))
}

/// Coefficients of the post-feedback energy read off the measured ensemble:
/// `xi = sum_mu w_mu <psi_mu|sigma_B H sigma_B|psi_mu> - E_A` and
/// `eta = sum_mu (-1)^mu w_mu <psi_mu|i[H, sigma_B]|psi_mu>`.
pub fn feedback_coefficients(
    ensemble: &MixedEnsemble,
    sigma_b: &HermitianOperator,
    h: &HermitianOperator,
) -> Result<(f64, f64)> {
    let mut flipped = 0.0;
    let mut before = 0.0;
    let mut eta = 0.0;
    for br in ensemble.branches.iter().filter(|b| b.weight > 0.0) {
        let psi = &br.state;
        let phi = sigma_b.apply(psi)?;
        let h_phi = h.apply(&phi)?;
        let h_psi = h.apply(psi)?;
        before += br.weight * psi.inner(&h_psi).re;
        flipped += br.weight * phi.inner(&h_phi).re;
        // <psi|i[H, s]|psi> = -2 Im <psi|H s|psi>
        let sign = if br.outcome % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * br.weight * (-2.0 * psi.inner(&h_phi).im);
    }
    Ok((flipped - before, eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaChoice {
    pub theta: f64,
    /// Both coefficients vanish; nothing can be extracted.
    pub degenerate: bool,
}

/// `theta* = atan2(-eta, xi) / 2`, in `(-pi/2, pi/2]`.
pub fn optimal_theta(xi: f64, eta: f64) -> ThetaChoice {
    if xi == 0.0 && eta == 0.0 {
        return ThetaChoice {
            theta: 0.0,
            degenerate: true,
        };
    }
    let mut theta = 0.5 * (-eta).atan2(xi);
    if theta <= -PI / 2.0 {
        theta += PI;
    }
    ThetaChoice {
        theta,
        degenerate: false,
    }
}

/// Post-feedback energy from the coefficients.
pub fn energy_identity(e_a: f64, xi: f64, eta: f64, theta: f64) -> f64 {
    e_a + 0.5 * eta * (2.0 * theta).sin() + 0.5 * xi * (1.0 - (2.0 * theta).cos())
}

/// `E_B = (sqrt(xi^2 + eta^2) - xi) / 2`, written without cancellation.
pub fn teleported_energy(xi: f64, eta: f64) -> f64 {
    let r = xi.hypot(eta);
    if xi > 0.0 {
        0.5 * eta * eta / (r + xi)
    } else {
        0.5 * (r - xi)
    }
}

/// Applies `V_B(mu)` to every branch.
pub fn apply_feedback(
    ensemble: &MixedEnsemble,
    sigma_b: &HermitianOperator,
    theta: f64,
) -> Result<MixedEnsemble> {
    let (s, c) = theta.sin_cos();
    let branches = ensemble
        .branches
        .iter()
        .map(|br| {
            let sign = if br.outcome % 2 == 0 { 1.0 } else { -1.0 };
            let mut out = br.state.scaled(c);
            out.axpy(Complex64::new(0.0, sign * s), &sigma_b.apply(&br.state)?);
            Ok(Branch {
                weight: br.weight,
                state: out,
                outcome: br.outcome,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MixedEnsemble { branches })
}

/// `Tr[rho H]`.
pub fn ensemble_energy(ensemble: &MixedEnsemble, h: &HermitianOperator) -> f64 {
    ensemble.expectation(h)
}

#[derive(Debug, Clone, Serialize)]
pub struct Profiles {
    pub ground: Vec<f64>,
    pub measured: Vec<f64>,
    pub feedback: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub setup: MeasurementSetup,
    pub e_a: f64,
    pub xi: f64,
    pub eta: f64,
    pub theta_star: f64,
    /// Optimal extraction `(sqrt(xi^2 + eta^2) - xi) / 2`.
    pub e_b: f64,
    /// Rotation actually applied (`theta_star` unless overridden).
    pub theta: f64,
    /// `Tr[rho H]` after feedback at `theta`.
    pub energy_after: f64,
    /// `E_A - energy_after`.
    pub extracted: f64,
    /// Ground-state `(xi, eta)` when they are real and agree with the
    /// ensemble coefficients.
    pub ground_correlators: Option<(f64, f64)>,
    pub degenerate_theta: bool,
    pub profiles: Profiles,
}

/// Runs measurement, feedback at `theta_star` (or `theta_override`) and the
/// energy bookkeeping on a calibrated chain.
pub fn run_protocol(
    chain: &CalibratedChain,
    setup: &MeasurementSetup,
    theta_override: Option<f64>,
) -> Result<ProtocolResult> {
    let spec = &chain.spec;
    let n = spec.n_sites();
    let j = spec.coupling();
    let h = &chain.hamiltonian;
    let g = &chain.ground.state;

    let sigma_a = setup.axis_a.pauli(n, spec.site_a());
    let sigma_b = setup.axis_b.pauli(n, spec.site_b());
    let (p0, p1) = projectors(&setup.axis_a, n, spec.site_a())?;
    let (measured, e_a) = measure(g, &p0, &p1, h)?;
    let (xi, mut eta) = feedback_coefficients(&measured, &sigma_b, h)?;
    if eta.abs() <= ETA_FLOOR * j {
        eta = 0.0;
    }
    let choice = optimal_theta(xi, eta);
    let e_b = if eta == 0.0 { 0.0 } else { teleported_energy(xi, eta) };
    let theta = theta_override.unwrap_or(choice.theta);

    let after = apply_feedback(&measured, &sigma_b, theta)?;
    let energy_after = ensemble_energy(&after, h);

    let ground_correlators = xi_eta(g, &sigma_a, &sigma_b, h).ok().filter(|(gx, ge)| {
        let tol = 1e-9 * j;
        (gx - xi).abs() < tol && (ge - eta).abs() < tol
    });

    Ok(ProtocolResult {
        setup: *setup,
        e_a,
        xi,
        eta,
        theta_star: choice.theta,
        e_b,
        theta,
        energy_after,
        extracted: e_a - energy_after,
        ground_correlators,
        degenerate_theta: choice.degenerate,
        profiles: Profiles {
            ground: chain.density_profile(g),
            measured: measured.profile(&chain.densities),
            feedback: after.profile(&chain.densities),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisPoint {
    pub setup: MeasurementSetup,
    pub e_a: f64,
    pub xi: f64,
    pub eta: f64,
    pub e_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisGrid {
    /// The nine pairs drawn from `{x, y, z}`.
    Cartesian,
    /// Cartesian pairs plus all pairs of `k` quasi-uniform sphere points.
    Spherical(usize),
}

impl AxisGrid {
    pub fn setups(&self) -> Vec<MeasurementSetup> {
        let mut axes = vec![Axis::X, Axis::Y, Axis::Z];
        if let AxisGrid::Spherical(k) = *self {
            axes.extend(fibonacci_sphere(k));
        }
        axes.iter()
            .flat_map(|&a| axes.iter().map(move |&b| MeasurementSetup::new(a, b)))
            .collect()
    }
}

/// `k` points spread over the upper hemisphere (a Pauli axis and its
/// negative give the same extractable energy).
fn fibonacci_sphere(k: usize) -> Vec<Axis> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / k as f64;
            Axis::spherical(z.acos(), golden * i as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub best: AxisPoint,
    pub table: Vec<AxisPoint>,
}

/// Energy bookkeeping for one axis pair without the profiles.
pub fn evaluate_axes(chain: &CalibratedChain, setup: &MeasurementSetup) -> Result<AxisPoint> {
    let spec = &chain.spec;
    let n = spec.n_sites();
    let (p0, p1) = projectors(&setup.axis_a, n, spec.site_a())?;
    let (measured, e_a) = measure(&chain.ground.state, &p0, &p1, &chain.hamiltonian)?;
    let sigma_b = setup.axis_b.pauli(n, spec.site_b());
    let (xi, eta) = feedback_coefficients(&measured, &sigma_b, &chain.hamiltonian)?;
    let eta = if eta.abs() <= ETA_FLOOR * spec.coupling() { 0.0 } else { eta };
    Ok(AxisPoint {
        setup: *setup,
        e_a,
        xi,
        eta,
        e_b: if eta == 0.0 { 0.0 } else { teleported_energy(xi, eta) },
    })
}

/// Evaluates `E_B` over an axis grid and returns the best pair (first one
/// wins ties) with the whole table in grid order.
pub fn axis_sweep(chain: &CalibratedChain, grid: AxisGrid) -> Result<SweepResult> {
    let table: Vec<AxisPoint> = grid
        .setups()
        .par_iter()
        .map(|s| evaluate_axes(chain, s))
        .collect::<Result<_>>()?;
    let best = table
        .iter()
        .copied()
        .reduce(|best, p| if p.e_b > best.e_b { p } else { best })
        .expect("grid is non-empty");
    Ok(SweepResult { best, table })
}
