//! Stationary scattering off piecewise-constant 1D potentials.
//!
//! Units are ħ = m = 1, so a plane wave `e^{ikx}` has energy `k²/2` and the
//! Schrödinger equation inside a segment of height `v` reads
//! `ψ'' = (2v − k²) ψ`. Eigenstates are normalised to a unit-amplitude
//! incident wave from the left:
//!
//! ```text
//! ψ_k(x) = e^{ikx} + R e^{-ikx}    x < x_min
//! ψ_k(x) = T e^{ikx}               x > x_max
//! ```
//!
//! For a single rectangular segment on `[-d/2, d/2]` the interior wave is
//! written in the centred basis `B e^{-κx} + C e^{κx}`, so that
//! `|B/C| = e^{κd}` for sub-barrier energies. Above the barrier
//! `κ = -i·sqrt(k² − k0²)`, which keeps `B` the forward-moving component.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `|κd|` the evanescent basis degenerates and `B`, `C` are not reported.
pub const DEGENERATE_KAPPA_D: f64 = 1e-6;

/// `sinh(z)/z`, continued to 1 at the origin.
pub fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < DEGENERATE_KAPPA_D {
        Complex64::new(1.0, 0.0) + z * z / 6.0
    } else {
        z.sinh() / z
    }
}

/// Decay constant for `κ² = 2v − k²`, using `κ = -i|κ|` on the negative real axis.
pub fn decay_constant(kappa_sq: Complex64) -> Complex64 {
    if kappa_sq.im == 0.0 && kappa_sq.re < 0.0 {
        Complex64::new(0.0, -(-kappa_sq.re).sqrt())
    } else {
        kappa_sq.sqrt()
    }
}

/// One constant-potential piece of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_start: f64,
    pub x_end: f64,
    /// Potential height; a negative imaginary part absorbs.
    pub v: Complex64,
}

impl Segment {
    pub fn new(x_start: f64, x_end: f64, v: Complex64) -> Self {
        Self { x_start, x_end, v }
    }

    pub fn width(&self) -> f64 {
        self.x_end - self.x_start
    }
}

/// Piecewise-constant potential; zero outside the listed segments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct PotentialProfile {
    segments: Vec<Segment>,
}

impl TryFrom<Vec<Segment>> for PotentialProfile {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PotentialProfile> for Vec<Segment> {
    fn from(p: PotentialProfile) -> Self {
        p.segments
    }
}

impl PotentialProfile {
    /// Validates ordering, positivity of widths and finiteness.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.x_start.is_finite() && s.x_end.is_finite() && s.v.re.is_finite() && s.v.im.is_finite()) {
                return Err(invalid(format!("segment {i} has non-finite data")));
            }
            if s.x_end <= s.x_start {
                return Err(invalid(format!("segment {i} has x_end <= x_start")));
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if w[1].x_start < w[0].x_end {
                return Err(invalid(format!("segments {i} and {} overlap or are unordered", i + 1)));
            }
        }
        Ok(Self { segments })
    }

    /// No potential anywhere.
    pub fn free() -> Self {
        Self::default()
    }

    /// Barrier of height `k0²/2` on `[-d/2, d/2]`.
    pub fn rectangular(k0: f64, d: f64) -> Result<Self> {
        if !(k0 >= 0.0 && k0.is_finite()) {
            return Err(invalid(format!("barrier wavevector k0 = {k0} must be >= 0")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(invalid(format!("barrier width d = {d} must be > 0")));
        }
        Self::new(vec![Segment::new(-0.5 * d, 0.5 * d, Complex64::new(0.5 * k0 * k0, 0.0))])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `(x_min, x_max)` of the scattering region, `(0, 0)` for an empty profile.
    pub fn extent(&self) -> (f64, f64) {
        match (self.segments.first(), self.segments.last()) {
            (Some(a), Some(b)) => (a.x_start, b.x_end),
            _ => (0.0, 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        self.segments.iter().all(|s| s.v.im == 0.0)
    }

    /// Potential at `x` (segment boundaries belong to the segment on their right).
    pub fn potential_at(&self, x: f64) -> Complex64 {
        self.segments.iter().find(|s| x >= s.x_start && x < s.x_end).map_or(Complex64::new(0.0, 0.0), |s| s.v)
    }

    /// Whether `V(x) = V(-x)` for all x, to within `tol` on positions and heights.
    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        let n = self.segments.len();
        (0..n).all(|i| {
            let a = &self.segments[i];
            let b = &self.segments[n - 1 - i];
            (a.x_start + b.x_end).abs() <= tol && (a.x_end + b.x_start).abs() <= tol && (a.v - b.v).norm() <= tol
        })
    }

    /// `(k0, d)` if this is a single real non-negative segment centred on the origin.
    pub fn as_rectangular(&self) -> Option<(f64, f64)> {
        match self.segments.as_slice() {
            [s] if s.v.im == 0.0 && s.v.re >= 0.0 && (s.x_start + s.x_end).abs() <= 1e-12 * s.width() => {
                Some(((2.0 * s.v.re).sqrt(), s.width()))
            }
            _ => None,
        }
    }
}

/// Transmission/reflection amplitudes at one wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringAmplitudes {
    pub k: f64,
    pub t_amp: Complex64,
    pub r_amp: Complex64,
    /// Coefficient of the decaying wave `e^{-κx}`; single centred segment only.
    pub b_coeff: Option<Complex64>,
    /// Coefficient of the growing wave `e^{κx}`.
    pub c_coeff: Option<Complex64>,
    pub kappa: Option<Complex64>,
}

impl ScatteringAmplitudes {
    pub fn transmission(&self) -> f64 {
        self.t_amp.norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.r_amp.norm_sqr()
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("wavevector k = {k} must be > 0")))
    }
}

/// Interior coefficients from the wave at the exit face `x = h` of a centred segment.
fn interior_coefficients(kappa: Complex64, h: f64, psi: Complex64, dpsi: Complex64) -> (Complex64, Complex64) {
    let b = (kappa * h).exp() * (psi - dpsi / kappa) * 0.5;
    let c = (-kappa * h).exp() * (psi + dpsi / kappa) * 0.5;
    (b, c)
}

/// Closed-form solution for a rectangular barrier of height `k0²/2` on `[-d/2, d/2]`.
///
/// Uses `T = e^{-ikd}/D`, `R = -i k0²/(2k) · sinh(κd)/κ · e^{-ikd}/D` with
/// `D = cosh κd + i(κ² − k²)/(2k) · sinh(κd)/κ`. Both are even in κ, so
/// the expression is regular through `k = k0`.
pub fn solve_rectangular(k: f64, k0: f64, d: f64) -> Result<ScatteringAmplitudes> {
    check_k(k)?;
    PotentialProfile::rectangular(k0, d)?;
    let kappa_sq = Complex64::new(k0 * k0 - k * k, 0.0);
    let kappa = decay_constant(kappa_sq);
    let s = sinhc(kappa * d) * d;
    let denom = (kappa * d).cosh() + I * (kappa_sq - k * k) / (2.0 * k) * s;
    let phase = Complex64::from_polar(1.0, -k * d);
    let t_amp = phase / denom;
    let r_amp = -I * (k0 * k0 / (2.0 * k)) * s * phase / denom;

    let h = 0.5 * d;
    let (b_coeff, c_coeff) = if (kappa * d).norm() < DEGENERATE_KAPPA_D {
        (None, None)
    } else {
        let psi = t_amp * Complex64::from_polar(1.0, k * h);
        let (b, c) = interior_coefficients(kappa, h, psi, I * k * psi);
        (Some(b), Some(c))
    };
    Ok(ScatteringAmplitudes { k, t_amp, r_amp, b_coeff, c_coeff, kappa: Some(kappa) })
}

/// Region of constant potential between `left` and `right`, with the wave stored at `right`.
#[derive(Debug, Clone, Copy)]
struct Region {
    right: f64,
    kappa: Complex64,
    psi: Complex64,
    dpsi: Complex64,
}

impl Region {
    /// Propagates the stored right-face data by `u = x − right` (stable towards the entrance).
    fn propagate(&self, u: f64) -> (Complex64, Complex64) {
        let z = self.kappa * u;
        let c = z.cosh();
        let s = sinhc(z) * u;
        let kappa_sq = self.kappa * self.kappa;
        (self.psi * c + self.dpsi * s, self.psi * kappa_sq * s + self.dpsi * c)
    }
}

/// A scattering eigenstate that can be evaluated anywhere on the real line.
#[derive(Debug, Clone)]
pub struct Eigenstate {
    amplitudes: ScatteringAmplitudes,
    regions: Vec<Region>,
    x_min: f64,
    x_max: f64,
}

impl Eigenstate {
    /// Solves by propagating `(ψ, ψ')` from the exit face back to the entrance
    /// through a product of 2×2 transfer matrices.
    pub fn solve(profile: &PotentialProfile, k: f64) -> Result<Self> {
        check_k(k)?;
        let (x_min, x_max) = profile.extent();
        let k2 = Complex64::new(k * k, 0.0);

        // Segments plus the free gaps between them, left to right.
        let mut pieces: Vec<(f64, f64, Complex64, Option<usize>)> = Vec::new();
        let mut cursor = x_min;
        for (i, s) in profile.segments().iter().enumerate() {
            if s.x_start > cursor {
                pieces.push((cursor, s.x_start, Complex64::new(0.0, 0.0), None));
            }
            pieces.push((s.x_start, s.x_end, s.v, Some(i)));
            cursor = s.x_end;
        }

        let mut psi = Complex64::from_polar(1.0, k * x_max);
        let mut dpsi = I * k * psi;
        let mut regions = Vec::with_capacity(pieces.len());
        for &(left, right, v, seg) in pieces.iter().rev() {
            let region = Region { right, kappa: decay_constant(2.0 * v - k2), psi, dpsi };
            let (p, dp) = region.propagate(left - right);
            if !(p.re.is_finite() && p.im.is_finite() && dp.re.is_finite() && dp.im.is_finite()) {
                return Err(Error::SingularSegment { segment: seg.unwrap_or(0) });
            }
            psi = p;
            dpsi = dp;
            regions.push(region);
        }
        regions.reverse();

        let forward = (psi + dpsi / (I * k)) * Complex64::from_polar(0.5, -k * x_min);
        let backward = (psi - dpsi / (I * k)) * Complex64::from_polar(0.5, k * x_min);
        if forward.norm() < 1e-300 || !forward.norm().is_finite() {
            return Err(Error::SingularSegment { segment: profile.segments().len().saturating_sub(1) });
        }
        let t_amp = forward.inv();
        let r_amp = backward * t_amp;
        for r in &mut regions {
            r.psi *= t_amp;
            r.dpsi *= t_amp;
        }

        let mut amplitudes = ScatteringAmplitudes { k, t_amp, r_amp, b_coeff: None, c_coeff: None, kappa: None };
        if let [seg] = profile.segments() {
            if (seg.x_start + seg.x_end).abs() <= 1e-12 * seg.width() {
                let region = regions[0];
                let h = 0.5 * seg.width();
                amplitudes.kappa = Some(region.kappa);
                if (region.kappa * seg.width()).norm() >= DEGENERATE_KAPPA_D {
                    let (b, c) = interior_coefficients(region.kappa, h, region.psi, region.dpsi);
                    amplitudes.b_coeff = Some(b);
                    amplitudes.c_coeff = Some(c);
                }
            }
        }
        Ok(Self { amplitudes, regions, x_min, x_max })
    }

    pub fn amplitudes(&self) -> &ScatteringAmplitudes {
        &self.amplitudes
    }

    pub fn k(&self) -> f64 {
        self.amplitudes.k
    }

    /// ψ_k(x) (time-independent part).
    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_with_derivative(x).0
    }

    /// `(ψ_k(x), ψ_k'(x))`.
    pub fn eval_with_derivative(&self, x: f64) -> (Complex64, Complex64) {
        let k = self.amplitudes.k;
        if x <= self.x_min {
            let inc = Complex64::from_polar(1.0, k * x);
            let refl = self.amplitudes.r_amp * inc.conj();
            return (inc + refl, I * k * (inc - refl));
        }
        if x >= self.x_max {
            let out = self.amplitudes.t_amp * Complex64::from_polar(1.0, k * x);
            return (out, I * k * out);
        }
        let idx = self.regions.partition_point(|r| r.right < x);
        let region = &self.regions[idx.min(self.regions.len() - 1)];
        region.propagate(x - region.right)
    }
}

/// Transfer-matrix solution for an arbitrary profile.
pub fn solve_piecewise(profile: &PotentialProfile, k: f64) -> Result<ScatteringAmplitudes> {
    Eigenstate::solve(profile, k).map(|e| e.amplitudes)
}

/// Options for the finite-difference phase derivative.
#[derive(Debug, Clone, Copy)]
pub struct DelayOptions {
    /// Half-step in k relative to k.
    pub rel_step: f64,
}

impl Default for DelayOptions {
    fn default() -> Self {
        Self { rel_step: 1e-5 }
    }
}

fn phase_derivative<F>(k: f64, opts: DelayOptions, amp: F) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    check_k(k)?;
    let dk = opts.rel_step * k;
    if !(dk > 1e-12 * k) || k - dk <= 0.0 {
        return Err(Error::StepUnderflow { at: k });
    }
    let (lo, hi) = (amp(k - dk)?, amp(k + dk)?);
    if lo.norm() == 0.0 || hi.norm() == 0.0 {
        return Err(Error::DegeneratePostSelection { magnitude: 0.0, threshold: f64::MIN_POSITIVE });
    }
    let jump = (hi / lo).arg();
    if jump.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(Error::PhaseUnwrap { lo: k - dk, hi: k + dk, jump });
    }
    // dE = k dk for E = k²/2
    Ok(jump / (2.0 * k * dk))
}

/// Transmission group delay `d/dE [arg T + k (x_max − x_min)]`.
///
/// Measured from arrival at the entrance face to departure from the exit
/// face, so a zero-height barrier of width `L` gives `L/k`.
pub fn group_delay(k: f64, profile: &PotentialProfile) -> Result<f64> {
    group_delay_with(k, profile, DelayOptions::default())
}

pub fn group_delay_with(k: f64, profile: &PotentialProfile, opts: DelayOptions) -> Result<f64> {
    let (x_min, x_max) = profile.extent();
    let width = x_max - x_min;
    phase_derivative(k, opts, |q| solve_piecewise(profile, q).map(|a| a.t_amp * Complex64::from_polar(1.0, q * width)))
}

/// Reflection group delay `d/dE [arg R − 2k x_min]`, referenced to the entrance face.
pub fn reflection_group_delay(k: f64, profile: &PotentialProfile) -> Result<f64> {
    let (x_min, _) = profile.extent();
    phase_derivative(k, DelayOptions::default(), |q| {
        solve_piecewise(profile, q).map(|a| a.r_amp * Complex64::from_polar(1.0, -2.0 * q * x_min))
    })
}
