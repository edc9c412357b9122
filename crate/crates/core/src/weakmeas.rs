//! Finite-dimensional weak measurement with an explicit Gaussian pointer.
//!
//! A pointer `φ(Q) ∝ exp(-Q²/4σ²)` is coupled to an observable `R` by the
//! impulsive unitary `exp(-i g P⊗R)`, which translates the pointer by
//! `g·r` in each eigenspace of `R`. After post-selecting the system on `|f⟩`
//! the pointer is `χ(Q) = Σ_j ⟨f|r_j⟩⟨r_j|i⟩ φ(Q − g r_j)`; for small `g` its
//! mean position moves by `g·Re w` and its mean momentum by `g·Im w/(2σ²)`,
//! where `w = ⟨f|R|i⟩/⟨f|i⟩` is the weak value.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Smallest `|⟨f|i⟩|` for which a weak value is reported.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-10;
/// Tolerance on unit norm and Hermiticity of inputs.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance on `P² = P` and on basis orthonormality.
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const DEFAULT_POINTER_POINTS: usize = 4096;
pub const DEFAULT_POINTER_SPAN_SIGMAS: f64 = 12.0;
/// Couplings used for the `g → 0` extrapolation.
pub const DEFAULT_COUPLINGS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Errors unless `|v| = 1`.
pub fn check_state(v: &CVector) -> Result<()> {
    let norm = v.norm();
    if v.is_empty() || !((norm - 1.0).abs() <= STATE_TOL) {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(invalid(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    let defect = (m - m.adjoint()).camax();
    if defect > STATE_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

pub fn check_projector(p: &CMatrix) -> Result<()> {
    if !p.is_square() {
        return Err(invalid("projector must be square"));
    }
    let herm = (p - p.adjoint()).camax();
    let idem = (p * p - p).camax();
    let defect = herm.max(idem);
    if defect > PROJECTOR_TOL {
        return Err(Error::NotProjector { defect });
    }
    Ok(())
}

fn check_dims(n: usize, what: &str, m: usize) -> Result<()> {
    if n == m {
        Ok(())
    } else {
        Err(invalid(format!("{what} has dimension {m}, expected {n}")))
    }
}

/// `|v⟩⟨v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

fn bracket(f: &CVector, op: &CMatrix, i: &CVector) -> Complex64 {
    f.dotc(&(op * i))
}

fn postselect(i: &CVector, f: &CVector) -> Result<Complex64> {
    let overlap = f.dotc(i);
    if overlap.norm() <= DEFAULT_OVERLAP_THRESHOLD {
        return Err(Error::DegeneratePostSelection { magnitude: overlap.norm(), threshold: DEFAULT_OVERLAP_THRESHOLD });
    }
    Ok(overlap)
}

/// `⟨f|R|i⟩/⟨f|i⟩`.
pub fn weak_value(state_i: &CVector, state_f: &CVector, observable: &CMatrix) -> Result<Complex64> {
    check_state(state_i)?;
    check_state(state_f)?;
    check_hermitian(observable)?;
    check_dims(state_i.len(), "final state", state_f.len())?;
    check_dims(state_i.len(), "observable", observable.nrows())?;
    let overlap = postselect(state_i, state_f)?;
    Ok(bracket(state_f, observable, state_i) / overlap)
}

/// `P(A&B) = ⟨ψ|B A|ψ⟩`; complex unless `A` and `B` commute.
pub fn joint_prob(state: &CVector, proj_a: &CMatrix, proj_b: &CMatrix) -> Result<Complex64> {
    check_state(state)?;
    check_projector(proj_a)?;
    check_projector(proj_b)?;
    check_dims(state.len(), "projector A", proj_a.nrows())?;
    check_dims(state.len(), "projector B", proj_b.nrows())?;
    Ok(bracket(state, &(proj_b * proj_a), state))
}

/// `P(A|f) = ⟨f|A|i⟩/⟨f|i⟩` for a projector `A`.
pub fn conditional_prob(state_i: &CVector, state_f: &CVector, proj_a: &CMatrix) -> Result<Complex64> {
    check_projector(proj_a)?;
    weak_value(state_i, state_f, proj_a)
}

/// `P(A&B|f) = ⟨f|B A|i⟩/⟨f|i⟩`.
pub fn conditional_joint_prob(
    state_i: &CVector,
    state_f: &CVector,
    proj_a: &CMatrix,
    proj_b: &CMatrix,
) -> Result<Complex64> {
    check_state(state_i)?;
    check_state(state_f)?;
    check_projector(proj_a)?;
    check_projector(proj_b)?;
    check_dims(state_i.len(), "final state", state_f.len())?;
    check_dims(state_i.len(), "projector A", proj_a.nrows())?;
    check_dims(state_i.len(), "projector B", proj_b.nrows())?;
    let overlap = postselect(state_i, state_f)?;
    Ok(bracket(state_f, &(proj_b * proj_a), state_i) / overlap)
}

/// One post-selection channel of an expectation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    /// `|⟨f|i⟩|²`.
    pub probability: f64,
    /// `None` when `|⟨f|i⟩|` is below the threshold.
    pub weak_value: Option<Complex64>,
    /// `⟨i|f⟩⟨f|R|i⟩`, which equals `P(f)·w` whenever the weak value exists.
    pub contribution: Complex64,
}

/// Splits `⟨i|R|i⟩` over an orthonormal basis of final states.
pub fn decompose_expectation(state_i: &CVector, observable: &CMatrix, basis: &[CVector]) -> Result<Vec<Channel>> {
    check_state(state_i)?;
    check_hermitian(observable)?;
    let n = state_i.len();
    check_dims(n, "observable", observable.nrows())?;
    if basis.len() != n || basis.iter().any(|b| b.len() != n) {
        return Err(Error::IncompleteBasis { defect: 1.0 });
    }
    let gram = DMatrix::from_fn(n, n, |a, b| basis[a].dotc(&basis[b]));
    let defect = (gram - CMatrix::identity(n, n)).camax();
    if defect > PROJECTOR_TOL {
        return Err(Error::IncompleteBasis { defect });
    }
    let r_i = observable * state_i;
    Ok(basis
        .iter()
        .map(|f| {
            let overlap = f.dotc(state_i);
            let fr = f.dotc(&r_i);
            Channel {
                probability: overlap.norm_sqr(),
                weak_value: (overlap.norm() > DEFAULT_OVERLAP_THRESHOLD).then(|| fr / overlap),
                contribution: overlap.conj() * fr,
            }
        })
        .collect())
}

/// Everything needed to simulate one weak measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSetup {
    pub state_i: CVector,
    pub state_f: CVector,
    pub observable: CMatrix,
    pub sigma: f64,
    pub g: f64,
    pub points: usize,
    /// Pointer grid covers `[-half_span, half_span)`.
    pub half_span: f64,
}

impl WeakSetup {
    /// Setup on the default pointer grid of 4096 points over ±12σ.
    pub fn new(state_i: CVector, state_f: CVector, observable: CMatrix, sigma: f64, g: f64) -> Result<Self> {
        let setup = Self {
            state_i,
            state_f,
            observable,
            sigma,
            g,
            points: DEFAULT_POINTER_POINTS,
            half_span: DEFAULT_POINTER_SPAN_SIGMAS * sigma,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_grid(mut self, points: usize, half_span: f64) -> Result<Self> {
        self.points = points;
        self.half_span = half_span;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, half_span: self.half_span * sigma / self.sigma, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.state_i.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(invalid("weak setup needs dimension >= 2"));
        }
        check_state(&self.state_i)?;
        check_state(&self.state_f)?;
        check_hermitian(&self.observable)?;
        check_dims(self.dim(), "final state", self.state_f.len())?;
        check_dims(self.dim(), "observable", self.observable.nrows())?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("pointer width sigma = {} must be > 0", self.sigma)));
        }
        if !self.g.is_finite() {
            return Err(invalid("coupling g must be finite"));
        }
        if self.points < 16 || !(self.half_span > 0.0) {
            return Err(invalid("pointer grid needs >= 16 points and a positive span"));
        }
        postselect(&self.state_i, &self.state_f)?;
        Ok(())
    }

    pub fn weak_value(&self) -> Result<Complex64> {
        weak_value(&self.state_i, &self.state_f, &self.observable)
    }
}

/// Conditioned pointer statistics relative to the unperturbed pointer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerReadout {
    pub delta_q: f64,
    pub delta_p: f64,
    pub prob_postselect: f64,
}

/// Position grid and signed angular wavenumbers of the DFT bins.
fn pointer_axes(n: usize, half_span: f64) -> (Vec<f64>, Vec<f64>) {
    let dq = 2.0 * half_span / n as f64;
    let q = (0..n).map(|j| -half_span + j as f64 * dq).collect();
    let p = (0..n)
        .map(|j| {
            let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * m / (n as f64 * dq)
        })
        .collect();
    (q, p)
}

/// `(norm, ⟨x⟩)` of a density sampled on `x`.
fn moments(x: &[f64], psi: &[Complex64]) -> (f64, f64) {
    let (m0, m1) = x.iter().zip(psi).fold((0.0, 0.0), |(a, b), (&x, v)| (a + v.norm_sqr(), b + x * v.norm_sqr()));
    (m0, m1 / m0)
}

/// Largest density within `n/64` bins of index `centre` (cyclically), relative to the peak.
fn edge_fraction(psi: &[Complex64], centre: usize) -> f64 {
    let n = psi.len();
    let edge = (n / 64).max(1);
    let peak = psi.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let tail = (0..2 * edge).map(|j| psi[(centre + n + j - edge) % n].norm_sqr()).fold(0.0, f64::max);
    tail / peak
}

/// Exact pointer evolution, post-selection and readout.
pub fn simulate_pointer(setup: &WeakSetup) -> Result<PointerReadout> {
    setup.validate()?;
    let n = setup.points;
    let (q, p) = pointer_axes(n, setup.half_span);
    let dq = 2.0 * setup.half_span / n as f64;

    let eig = setup.observable.clone().symmetric_eigen();
    let shifts: Vec<f64> = eig.eigenvalues.iter().map(|r| setup.g * r).collect();
    let max_shift = shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max_shift > setup.half_span - 8.0 * setup.sigma {
        return Err(Error::PointerAliasing(format!(
            "shift {max_shift:.3e} leaves less than 8 sigma inside the half-span {:.3e}",
            setup.half_span
        )));
    }
    let weights: Vec<Complex64> = eig
        .eigenvectors
        .column_iter()
        .map(|v| {
            let v: CVector = v.into_owned();
            setup.state_f.dotc(&v) * v.dotc(&setup.state_i)
        })
        .collect();

    let mut phi: Vec<Complex64> =
        q.iter().map(|&x| Complex64::new((-(x * x) / (4.0 * setup.sigma * setup.sigma)).exp(), 0.0)).collect();
    let norm: f64 = phi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dq;
    phi.iter_mut().for_each(|v| *v /= norm.sqrt());
    let (_, q0) = moments(&q, &phi);

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut phi_p = phi.clone();
    forward.process(&mut phi_p);
    let (_, p0) = moments(&p, &phi_p);

    let chi_p: Vec<Complex64> = p
        .iter()
        .zip(&phi_p)
        .map(|(&pk, &a)| {
            a * shifts.iter().zip(&weights).map(|(&s, &w)| w * Complex64::from_polar(1.0, -pk * s)).sum::<Complex64>()
        })
        .collect();
    let mut chi = chi_p.clone();
    inverse.process(&mut chi);
    chi.iter_mut().for_each(|v| *v /= n as f64);

    // Position samples wrap at index 0, DFT bins at the Nyquist bin.
    for (what, field, centre) in [("position", &chi, 0), ("momentum", &chi_p, n / 2)] {
        let frac = edge_fraction(field, centre);
        if frac > 1e-12 {
            return Err(Error::PointerAliasing(format!("{what} grid edge holds {frac:.3e} of the peak density")));
        }
    }

    let (m0, qm) = moments(&q, &chi);
    let (_, pm) = moments(&p, &chi_p);
    Ok(PointerReadout { delta_q: qm - q0, delta_p: pm - p0, prob_postselect: (m0 * dq).clamp(0.0, 1.0) })
}

/// Neville extrapolation of samples `(x_j, y_j)` to `x = 0`.
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    for m in 1..x.len() {
        for j in 0..x.len() - m {
            p[j] = (x[j + m] * p[j] - x[j] * p[j + 1]) / (x[j + m] - x[j]);
        }
    }
    p[0]
}

/// First-order pointer response: `ΔQ/g` and `2σ²ΔP/g` extrapolated to `g → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakEstimate {
    pub position: f64,
    pub momentum: f64,
}

impl WeakEstimate {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.position, self.momentum)
    }
}

pub fn estimate_weak_value(setup: &WeakSetup, couplings: &[f64]) -> Result<WeakEstimate> {
    if couplings.is_empty() || couplings.contains(&0.0) {
        return Err(invalid("need non-zero couplings for extrapolation"));
    }
    let mut q = Vec::with_capacity(couplings.len());
    let mut p = Vec::with_capacity(couplings.len());
    for &g in couplings {
        let r = simulate_pointer(&setup.with_coupling(g))?;
        q.push(r.delta_q / g);
        p.push(r.delta_p * 2.0 * setup.sigma * setup.sigma / g);
    }
    Ok(WeakEstimate { position: extrapolate_to_zero(couplings, &q), momentum: extrapolate_to_zero(couplings, &p) })
}
