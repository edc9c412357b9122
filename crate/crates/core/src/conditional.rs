//! Conditional (weak-valued) probabilities and conditional dwell times.
//!
//! For a final state `f` with amplitude `A_f = ⟨ψ_f|ψ_i⟩` the conditional
//! density is `P(x,t|f) = ψ_f*(x,t) ψ_i(x,t) / A_f`. It integrates to one but
//! is complex: the real part is what a weakly coupled position pointer reads,
//! the imaginary part the back-action on its conjugate momentum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::scattering::{sinhc, solve_rectangular};
use crate::wavepacket::{ComplexField, FinalState, WavePacket};
use crate::SpaceTimeGrid;

/// Smallest `|A_f|` accepted for post-selection.
pub const DEFAULT_POSTSELECT_THRESHOLD: f64 = 1e-12;
/// Residual of the barrier-integrated `|P|` at the time-grid ends, relative to its peak.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-6;

fn conditional(psi_i: &ComplexField, psi_f: &ComplexField, amp: Complex64) -> Result<ComplexField> {
    if !(amp.norm() > DEFAULT_POSTSELECT_THRESHOLD) {
        return Err(Error::DegeneratePostSelection { magnitude: amp.norm(), threshold: DEFAULT_POSTSELECT_THRESHOLD });
    }
    psi_f.zip_map(psi_i, |f, i| f.conj() * i / amp)
}

/// `P(x,t|trans) = ψ_t* ψ_i / T`.
pub fn cond_prob_trans(psi_i: &ComplexField, psi_t: &ComplexField, t_amp: Complex64) -> Result<ComplexField> {
    conditional(psi_i, psi_t, t_amp)
}

/// `P(x,t|refl) = ψ_r* ψ_i / R`.
pub fn cond_prob_refl(psi_i: &ComplexField, psi_r: &ComplexField, r_amp: Complex64) -> Result<ComplexField> {
    conditional(psi_i, psi_r, r_amp)
}

/// `|ψ|²` as a (real-valued) complex field.
pub fn density(psi: &ComplexField) -> ComplexField {
    psi.map(|v| Complex64::new(v.norm_sqr(), 0.0))
}

/// Incident density and both conditional densities on one grid.
#[derive(Debug, Clone)]
pub struct ConditionalFields {
    pub density: ComplexField,
    pub trans: ComplexField,
    /// Absent when the reflection amplitude vanishes.
    pub refl: Option<ComplexField>,
    pub t_amp: Complex64,
    pub r_amp: Complex64,
}

impl ConditionalFields {
    /// Narrow-band final states are normalised by the centre amplitudes,
    /// spectral ones by the band-averaged overlaps.
    pub fn compute(packet: &WavePacket, grid: &SpaceTimeGrid, construction: FinalState) -> Result<Self> {
        let fields = packet.fields(grid, construction)?;
        let (t_amp, r_amp) = match construction {
            FinalState::Narrowband => (packet.center().t_amp, packet.center().r_amp),
            FinalState::Spectral => (packet.overlap_transmission(), packet.overlap_reflection()),
        };
        let trans = cond_prob_trans(&fields.incident, &fields.transmitted, t_amp)?;
        let refl = match cond_prob_refl(&fields.incident, &fields.reflected, r_amp) {
            Ok(p) => Some(p),
            Err(Error::DegeneratePostSelection { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { density: density(&fields.incident), trans, refl, t_amp, r_amp })
    }

    /// `max |T|²P_trans + |R|²P_refl − |ψ_i|²` over the grid.
    pub fn mixture_defect(&self) -> f64 {
        let (tp, rp) = (self.t_amp.norm_sqr(), self.r_amp.norm_sqr());
        (0..self.density.values().len())
            .map(|n| {
                let r = self.refl.as_ref().map_or(Complex64::new(0.0, 0.0), |f| f.values()[n] * rp);
                (self.trans.values()[n] * tp + r - self.density.values()[n]).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn lerp(x: &[f64], y: &[Complex64], at: f64) -> Complex64 {
    let j = x.partition_point(|&v| v <= at).clamp(1, x.len() - 1);
    let s = (at - x[j - 1]) / (x[j] - x[j - 1]);
    y[j - 1] * (1.0 - s) + y[j] * s
}

/// Trapezoid integral of samples `y(x)` over `[a, b]`, interpolating linearly at the ends.
pub fn window_integral(x: &[f64], y: &[Complex64], (a, b): (f64, f64)) -> Complex64 {
    let (lo, hi) = (a.max(x[0]), b.min(x[x.len() - 1]));
    if !(hi > lo) || x.len() < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let i0 = x.partition_point(|&v| v <= lo);
    let i1 = x.partition_point(|&v| v < hi);
    let mut xs = Vec::with_capacity(i1.saturating_sub(i0) + 2);
    let mut ys = Vec::with_capacity(xs.capacity());
    xs.push(lo);
    ys.push(lerp(x, y, lo));
    for j in i0..i1 {
        xs.push(x[j]);
        ys.push(y[j]);
    }
    xs.push(hi);
    ys.push(lerp(x, y, hi));
    trapezoid(&xs, &ys)
}

/// `∫_region dx P(x,t)` for every frame.
pub fn region_trace(p: &ComplexField, region: (f64, f64)) -> Vec<Complex64> {
    p.frames().map(|row| window_integral(p.x(), row, region)).collect()
}

/// `∫dt ∫_region dx P(x,t)`.
pub fn dwell_times_numeric(p: &ComplexField, region: (f64, f64)) -> Result<Complex64> {
    dwell_times_numeric_with(p, region, DEFAULT_TRUNCATION_TOL)
}

pub fn dwell_times_numeric_with(p: &ComplexField, region: (f64, f64), tol: f64) -> Result<Complex64> {
    let trace = region_trace(p, region);
    let mags: Vec<f64> = p
        .frames()
        .map(|row| {
            let abs: Vec<Complex64> = row.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
            window_integral(p.x(), &abs, region).re
        })
        .collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let ends = mags[0].max(mags[mags.len() - 1]);
    if peak > 0.0 && ends > tol * peak {
        return Err(Error::TimeGridTruncated { residual: ends / peak, tol });
    }
    Ok(trapezoid(p.t(), &trace))
}

/// Stationary conditional times for a rectangular barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTimes {
    pub tau_trans: Complex64,
    /// `None` when `R = 0`.
    pub tau_refl: Option<Complex64>,
    pub tau_dwell: f64,
    /// `d/κ`; only below the barrier top.
    pub tau_bl: Option<f64>,
    pub transmission: f64,
    pub reflection: f64,
}

impl ConditionalTimes {
    /// `|T|²τ_T + |R|²τ_R − τ_d`.
    pub fn identity_residual(&self) -> Complex64 {
        let r = self.tau_refl.map_or(Complex64::new(0.0, 0.0), |t| t * self.reflection);
        self.tau_trans * self.transmission + r - self.tau_dwell
    }
}

/// `(sinhc(z) − 1)/z²`.
fn sinhc_excess(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let z2 = z * z;
        let mut term = Complex64::new(1.0 / 6.0, 0.0);
        let mut sum = term;
        for n in 2..20 {
            term *= z2 / ((2 * n) as f64 * (2 * n + 1) as f64);
            sum += term;
        }
        sum
    } else {
        (sinhc(z) - 1.0) / (z * z)
    }
}

/// Conditional dwell times of `[-d/2, d/2]` from the stationary state.
///
/// With `S = sinh(κd)/κ`,
/// `τ_T = [(B²+C²)d + 2BC·S]/(kT)`, `τ_R = [2BC·d + (B²+C²)S]/(kR)` and
/// `τ_d = [(|B|²+|C|²)S_r + 2Re(B*C)S_i]/k`, where `S_r`, `S_i` are the
/// integrals of `e^{±(κ+κ*)x}` and `e^{(κ−κ*)x}`. Close to the barrier top
/// the same integrals are taken in the even/odd basis `cosh κx`, `sinh κx/κ`.
pub fn dwell_times_closed(k: f64, k0: f64, d: f64) -> Result<ConditionalTimes> {
    let amps = solve_rectangular(k, k0, d)?;
    let kappa = amps.kappa.unwrap_or_default();
    let (t, r) = (amps.t_amp, amps.r_amp);
    let z = kappa * d;
    let has_r = r.norm() > DEFAULT_POSTSELECT_THRESHOLD;

    let (num_t, num_r, dwell) = match (amps.b_coeff, amps.c_coeff) {
        (Some(b), Some(c)) if z.norm() >= 1e-2 => {
            let s = sinhc(z) * d;
            let int = |a: Complex64| sinhc(a * (0.5 * d)) * d;
            let dwell = b.norm_sqr() * int(-kappa - kappa.conj()).re
                + c.norm_sqr() * int(kappa + kappa.conj()).re
                + 2.0 * (b.conj() * c * int(kappa - kappa.conj())).re;
            ((b * b + c * c) * d + b * c * s * 2.0, b * c * d * 2.0 + (b * b + c * c) * s, dwell)
        }
        _ => {
            let h = 0.5 * d;
            let psi_h = t * Complex64::from_polar(1.0, k * h);
            let dpsi_h = Complex64::new(0.0, k) * psi_h;
            let ch = (kappa * h).cosh();
            let sh = sinhc(kappa * h) * h;
            let alpha = psi_h * ch - dpsi_h * sh;
            let beta = -psi_h * kappa * kappa * sh + dpsi_h * ch;
            let cc = (1.0 + sinhc(z)) * h;
            let ss = sinhc_excess(z) * (d * d * h);
            let dwell = (alpha.norm_sqr() * cc + beta.norm_sqr() * ss).re;
            (alpha * alpha * cc - beta * beta * ss, alpha * alpha * cc + beta * beta * ss, dwell)
        }
    };
    Ok(ConditionalTimes {
        tau_trans: num_t / (t * k),
        tau_refl: has_r.then(|| num_r / (r * k)),
        tau_dwell: dwell / k,
        tau_bl: (k < k0).then(|| d / kappa.re),
        transmission: amps.transmission(),
        reflection: amps.reflection(),
    })
}

/// `d/κ` with `κ = sqrt(k0² − k²)`.
pub fn buttiker_landauer(k: f64, k0: f64, d: f64) -> Result<f64> {
    if !(k > 0.0) || !(d >= 0.0) {
        return Err(crate::error::invalid(format!("need k > 0 and d >= 0, got k = {k}, d = {d}")));
    }
    if k >= k0 {
        return Err(Error::NotEvanescent { k, k0 });
    }
    Ok(d / (k0 * k0 - k * k).sqrt())
}
