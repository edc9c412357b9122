//! Wave packets synthesised from scattering eigenstates.
//!
//! The incident packet is
//! `ψ_i(x,t) = ∫ dk/√(2π) Φ(k) ψ_k(x) e^{-ik²t/2}` with a real Gaussian
//! bandwidth function, evaluated by Gauss–Legendre quadrature. Because Φ is
//! real, the free packet is centred on `x = 0` at `t = 0`; `t = 0` is thus the
//! free-packet arrival time at the barrier centre.
//!
//! Final (post-selected) states come in two flavours, see [`FinalState`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre, trapezoid};
use crate::scattering::{Eigenstate, PotentialProfile, ScatteringAmplitudes};

/// Gauss–Legendre nodes used for the k-integral unless overridden.
pub const DEFAULT_NODES: usize = 801;
/// Half-width of the k window in units of `delta_k`. `|Φ|²` at the edge is `e^{-32}`.
pub const DEFAULT_WINDOW_SIGMAS: f64 = 8.0;
/// Relative spread of `T(k)` across the band above which the narrow-band picture is suspect.
pub const NARROWBAND_WARN: f64 = 0.2;

/// Real Gaussian bandwidth function sampled on a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSpec {
    k_center: f64,
    delta_k: f64,
    window_sigmas: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    amplitude: Vec<f64>,
}

impl BandwidthSpec {
    /// `|Φ(k)|²` Gaussian with rms width `delta_k` about `k_center`.
    pub fn gaussian(k_center: f64, delta_k: f64) -> Result<Self> {
        Self::with_rule(k_center, delta_k, DEFAULT_NODES, DEFAULT_WINDOW_SIGMAS)
    }

    pub fn with_rule(k_center: f64, delta_k: f64, nodes: usize, window_sigmas: f64) -> Result<Self> {
        if !(delta_k > 0.0 && delta_k.is_finite()) {
            return Err(invalid(format!("delta_k = {delta_k} must be > 0")));
        }
        if !(window_sigmas > 0.0) {
            return Err(invalid("quadrature window must be positive"));
        }
        let lo = k_center - window_sigmas * delta_k;
        let hi = k_center + window_sigmas * delta_k;
        if !(lo > 0.0) {
            return Err(invalid(format!("k window [{lo}, {hi}] must lie in k > 0")));
        }
        let (k, w) = gauss_legendre(nodes, lo, hi)?;
        let raw: Vec<f64> = k.iter().map(|&q| (-(q - k_center).powi(2) / (4.0 * delta_k * delta_k)).exp()).collect();
        let norm: f64 = raw.iter().zip(&w).map(|(a, w)| w * a * a).sum::<f64>().sqrt();
        let amplitude = raw.into_iter().map(|a| a / norm).collect();
        Ok(Self { k_center, delta_k, window_sigmas, nodes: k, weights: w, amplitude })
    }

    pub fn k_center(&self) -> f64 {
        self.k_center
    }

    pub fn delta_k(&self) -> f64 {
        self.delta_k
    }

    pub fn window_sigmas(&self) -> f64 {
        self.window_sigmas
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Φ at the nodes.
    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ dk |Φ|²` under the rule.
    pub fn norm(&self) -> f64 {
        self.amplitude.iter().zip(&self.weights).map(|(a, w)| w * a * a).sum()
    }

    /// Spatial rms width `1/(2Δk)` of the packet at its waist.
    pub fn spatial_width(&self) -> f64 {
        0.5 / self.delta_k
    }

    /// Time for the packet to pass a point, `1/(2Δk k_center)`.
    pub fn temporal_width(&self) -> f64 {
        self.spatial_width() / self.k_center
    }

    /// Same band with a different number of nodes.
    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        Self::with_rule(self.k_center, self.delta_k, nodes, self.window_sigmas)
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Sample positions and times of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    x: Vec<f64>,
    t: Vec<f64>,
}

impl SpaceTimeGrid {
    pub fn new(x: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if x.is_empty() || t.is_empty() {
            return Err(invalid("grid axes must be non-empty"));
        }
        if !strictly_increasing(&x) || !strictly_increasing(&t) {
            return Err(invalid("grid axes must be strictly increasing"));
        }
        Ok(Self { x, t })
    }

    /// Uniform axes; a single point sits at the lower bound.
    pub fn uniform(x_range: (f64, f64), nx: usize, t_range: (f64, f64), nt: usize) -> Result<Self> {
        Self::new(linspace(x_range.0, x_range.1, nx), linspace(t_range.0, t_range.1, nt))
    }

    /// `x ∈ ±8/Δk` on 2001 points and `t` over ±6 temporal widths in 41 frames.
    pub fn default_for(spec: &BandwidthSpec) -> Result<Self> {
        let xm = 8.0 / spec.delta_k();
        let tm = 6.0 * spec.temporal_width();
        Self::uniform((-xm, xm), 2001, (-tm, tm), 41)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// The grid under `(x, t) → (−x, −t)`, kept ascending.
    pub fn mirrored(&self) -> Self {
        Self { x: self.x.iter().rev().map(|x| -x).collect(), t: self.t.iter().rev().map(|t| -t).collect() }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Complex samples on a space-time grid, stored frame by frame (index `(t, x)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpaceTimeGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpaceTimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.x.len() * grid.t.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.t.len(),
                grid.x.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(invalid("field contains non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.grid.x
    }

    pub fn t(&self) -> &[f64] {
        &self.grid.t
    }

    pub fn nx(&self) -> usize {
        self.grid.x.len()
    }

    pub fn nt(&self) -> usize {
        self.grid.t.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, it: usize, ix: usize) -> Complex64 {
        self.values[it * self.nx() + ix]
    }

    /// All x samples at time index `it`.
    pub fn frame(&self, it: usize) -> &[Complex64] {
        let nx = self.nx();
        &self.values[it * nx..(it + 1) * nx]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.values.chunks(self.nx())
    }

    pub fn require_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<ComplexField> {
        self.require_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ComplexField::new(self.grid.clone(), values)
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `∫ dx` of frame `it` by the trapezoid rule.
    pub fn spatial_integral(&self, it: usize) -> Complex64 {
        trapezoid(self.x(), self.frame(it))
    }
}

/// How the post-selected final states `ψ_t`, `ψ_r` are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalState {
    /// Per-wavevector coefficients inside the k-integral:
    /// `ψ_t = ∫ Φ [T*(k) ψ_k(x) + R*(k) ψ_k(−x)]`. Satisfies
    /// `ψ_t(x,t) = ψ_i*(−x,−t)` exactly for a symmetric real barrier.
    Spectral,
    /// Coefficients frozen at the band centre:
    /// `ψ_t = T* ψ_i(x,t) + R* ψ_i(−x,t)`, `ψ_r = R* ψ_i(x,t) + T* ψ_i(−x,t)`.
    /// Makes `T ψ_t + R ψ_r = ψ_i` an exact identity.
    #[default]
    Narrowband,
}

/// Eigenstates on the quadrature nodes of a bandwidth function.
#[derive(Debug, Clone)]
pub struct WavePacket {
    spec: BandwidthSpec,
    profile: PotentialProfile,
    states: Vec<Eigenstate>,
    center: ScatteringAmplitudes,
}

/// Incident and post-selected packets on one grid.
#[derive(Debug, Clone)]
pub struct PacketFields {
    pub incident: ComplexField,
    pub transmitted: ComplexField,
    pub reflected: ComplexField,
}

impl WavePacket {
    pub fn new(spec: BandwidthSpec, profile: PotentialProfile) -> Result<Self> {
        let states = spec.nodes().par_iter().map(|&k| Eigenstate::solve(&profile, k)).collect::<Result<Vec<_>>>()?;
        let center = *Eigenstate::solve(&profile, spec.k_center())?.amplitudes();
        Ok(Self { spec, profile, states, center })
    }

    pub fn spec(&self) -> &BandwidthSpec {
        &self.spec
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    /// Amplitudes at the band centre; these are the `T`, `R` of the narrow-band states.
    pub fn center(&self) -> &ScatteringAmplitudes {
        &self.center
    }

    /// `max_k |T(k) − T(k_c)| / |T(k_c)|` over nodes carrying non-negligible weight.
    pub fn band_variation(&self) -> f64 {
        let tc = self.center.t_amp;
        let peak = self.spec.amplitude().iter().cloned().fold(0.0, f64::max);
        self.states
            .iter()
            .zip(self.spec.amplitude())
            .filter(|(_, &a)| a > 1e-3 * peak)
            .map(|(s, _)| (s.amplitudes().t_amp - tc).norm() / tc.norm())
            .fold(0.0, f64::max)
    }

    /// `Σ_k c_k e^{-iω_k t} [a_k ψ_k(x) + b_k ψ_k(−x)]` on the grid.
    fn synthesize<F>(&self, grid: &SpaceTimeGrid, coeffs: F) -> ComplexField
    where
        F: Fn(&Eigenstate) -> (Complex64, Complex64) + Sync,
    {
        let x = grid.x();
        let basis: Vec<Vec<Complex64>> = self
            .states
            .par_iter()
            .map(|s| {
                let (a, b) = coeffs(s);
                x.iter()
                    .map(|&xi| {
                        let mut v = Complex64::new(0.0, 0.0);
                        if a != Complex64::new(0.0, 0.0) {
                            v += a * s.eval(xi);
                        }
                        if b != Complex64::new(0.0, 0.0) {
                            v += b * s.eval(-xi);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let prefactor: Vec<f64> =
            self.spec.weights().iter().zip(self.spec.amplitude()).map(|(w, a)| w * a / (2.0 * PI).sqrt()).collect();
        let nodes = self.spec.nodes();
        let values: Vec<Complex64> = grid
            .t()
            .par_iter()
            .flat_map_iter(|&t| {
                let mut row = vec![Complex64::new(0.0, 0.0); x.len()];
                for ((u, &c), &k) in basis.iter().zip(&prefactor).zip(nodes) {
                    let phase = Complex64::from_polar(c, -0.5 * k * k * t);
                    for (r, &ui) in row.iter_mut().zip(u) {
                        *r += phase * ui;
                    }
                }
                row
            })
            .collect();
        ComplexField { grid: grid.clone(), values }
    }

    /// ψ_i(x,t).
    pub fn incident(&self, grid: &SpaceTimeGrid) -> ComplexField {
        let one = Complex64::new(1.0, 0.0);
        self.synthesize(grid, |_| (one, Complex64::new(0.0, 0.0)))
    }

    fn require_symmetric(&self) -> Result<()> {
        if self.profile.is_mirror_symmetric(1e-12) {
            Ok(())
        } else {
            Err(Error::NotSymmetric)
        }
    }

    /// Transmitted final state ψ_t.
    pub fn transmitted_state(&self, grid: &SpaceTimeGrid, construction: FinalState) -> Result<ComplexField> {
        self.require_symmetric()?;
        let (tc, rc) = (self.center.t_amp.conj(), self.center.r_amp.conj());
        Ok(match construction {
            FinalState::Spectral => {
                self.synthesize(grid, |s| (s.amplitudes().t_amp.conj(), s.amplitudes().r_amp.conj()))
            }
            FinalState::Narrowband => self.synthesize(grid, |_| (tc, rc)),
        })
    }

    /// Reflected final state ψ_r, with the roles of `T` and `R` exchanged.
    pub fn reflected_state(&self, grid: &SpaceTimeGrid, construction: FinalState) -> Result<ComplexField> {
        self.require_symmetric()?;
        let (tc, rc) = (self.center.t_amp.conj(), self.center.r_amp.conj());
        Ok(match construction {
            FinalState::Spectral => {
                self.synthesize(grid, |s| (s.amplitudes().r_amp.conj(), s.amplitudes().t_amp.conj()))
            }
            FinalState::Narrowband => self.synthesize(grid, |_| (rc, tc)),
        })
    }

    pub fn fields(&self, grid: &SpaceTimeGrid, construction: FinalState) -> Result<PacketFields> {
        Ok(PacketFields {
            incident: self.incident(grid),
            transmitted: self.transmitted_state(grid, construction)?,
            reflected: self.reflected_state(grid, construction)?,
        })
    }

    /// `⟨ψ_t|ψ_i⟩ = ∫ dk |Φ(k)|² T(k)` for the spectral final state.
    pub fn overlap_transmission(&self) -> Complex64 {
        self.band_average(|a| a.t_amp)
    }

    /// `⟨ψ_r|ψ_i⟩ = ∫ dk |Φ(k)|² R(k)`.
    pub fn overlap_reflection(&self) -> Complex64 {
        self.band_average(|a| a.r_amp)
    }

    /// `∫ dk |Φ(k)|² f(k)` over the eigenstate amplitudes.
    pub fn band_average(&self, f: impl Fn(&ScatteringAmplitudes) -> Complex64) -> Complex64 {
        self.states
            .iter()
            .zip(self.spec.amplitude().iter().zip(self.spec.weights()))
            .map(|(s, (a, w))| f(s.amplitudes()) * (w * a * a))
            .sum()
    }

    /// Rebuilds the packet with twice the nodes and returns the largest change
    /// of ψ_i on `grid`; errors if it exceeds `tol`.
    pub fn check_convergence(&self, grid: &SpaceTimeGrid, tol: f64) -> Result<f64> {
        let fine = WavePacket::new(self.spec.with_nodes(2 * self.spec.node_count())?, self.profile.clone())?;
        let change = self.incident(grid).max_abs_diff(&fine.incident(grid))?;
        if change > tol {
            Err(Error::QuadratureNotConverged { change, tol })
        } else {
            Ok(change)
        }
    }
}

/// ψ_i on `grid` for a fresh packet.
pub fn psi_incident(spec: &BandwidthSpec, profile: &PotentialProfile, grid: &SpaceTimeGrid) -> Result<ComplexField> {
    Ok(WavePacket::new(spec.clone(), profile.clone())?.incident(grid))
}

pub fn psi_transmitted_state(
    spec: &BandwidthSpec,
    profile: &PotentialProfile,
    grid: &SpaceTimeGrid,
    construction: FinalState,
) -> Result<ComplexField> {
    WavePacket::new(spec.clone(), profile.clone())?.transmitted_state(grid, construction)
}

pub fn psi_reflected_state(
    spec: &BandwidthSpec,
    profile: &PotentialProfile,
    grid: &SpaceTimeGrid,
    construction: FinalState,
) -> Result<ComplexField> {
    WavePacket::new(spec.clone(), profile.clone())?.reflected_state(grid, construction)
}

pub fn overlap_transmission(spec: &BandwidthSpec, profile: &PotentialProfile) -> Result<Complex64> {
    Ok(WavePacket::new(spec.clone(), profile.clone())?.overlap_transmission())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_is_normalised_and_positive() {
        let spec = BandwidthSpec::gaussian(0.5, 0.03).unwrap();
        assert!((spec.norm() - 1.0).abs() < 1e-12);
        assert!(spec.nodes().iter().all(|&k| k > 0.0));
        assert!(spec.amplitude().iter().all(|&a| a >= 0.0));
        assert_eq!(spec.node_count(), DEFAULT_NODES);
    }

    #[test]
    fn window_must_stay_positive() {
        assert!(BandwidthSpec::gaussian(0.1, 0.03).is_err());
        assert!(BandwidthSpec::gaussian(0.5, 0.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SpaceTimeGrid::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(SpaceTimeGrid::new(vec![], vec![1.0]).is_err());
        let g = SpaceTimeGrid::uniform((-1.0, 1.0), 3, (0.0, 2.0), 2).unwrap();
        assert_eq!(g.mirrored().t(), &[-2.0, 0.0]);
        assert!(ComplexField::new(g.clone(), vec![Complex64::new(0.0, 0.0); 5]).is_err());
        assert!(ComplexField::new(g, vec![Complex64::new(f64::NAN, 0.0); 6]).is_err());
    }

    #[test]
    fn asymmetric_profile_has_no_final_states() {
        use crate::scattering::Segment;
        let p = PotentialProfile::new(vec![Segment::new(0.0, 2.0, Complex64::new(0.2, 0.0))]).unwrap();
        let spec = BandwidthSpec::with_rule(0.8, 0.02, 41, 6.0).unwrap();
        let packet = WavePacket::new(spec, p).unwrap();
        let grid = SpaceTimeGrid::uniform((-5.0, 5.0), 5, (0.0, 1.0), 2).unwrap();
        assert_eq!(packet.transmitted_state(&grid, FinalState::Spectral).unwrap_err(), Error::NotSymmetric);
    }
}
