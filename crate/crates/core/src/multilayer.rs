//! Normal-incidence transfer matrices for dielectric layer stacks.
//!
//! Each layer contributes the characteristic matrix
//! `[[cos δ, -i sin δ / n], [-i n sin δ, cos δ]]` with `δ = 2π f n t / λ0`,
//! where `f = k/k0` is the frequency in units of the design frequency. With
//! `[B, C]ᵀ = Π M_j [1, n_s]ᵀ` the amplitudes are `t = 2n_a/(n_a B + C)`,
//! `r = (n_a B − C)/(n_a B + C)` and the power transmission is
//! `T = (n_s/n_a)|t|²`. A positive imaginary index absorbs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Lossless reflectance treated as zero by [`loss_scan`].
pub const VANISHING_REFLECTION: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub index: Complex64,
    pub thickness: f64,
}

impl Layer {
    /// Quarter-wave layer at the design wavelength.
    pub fn quarter_wave(index: f64, design_wavelength: f64) -> Self {
        Self { index: Complex64::new(index, 0.0), thickness: design_wavelength / (4.0 * index) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    layers: Vec<Layer>,
    design_wavelength: f64,
    ambient_index: f64,
    substrate_index: f64,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>, design_wavelength: f64, ambient_index: f64, substrate_index: f64) -> Result<Self> {
        if !(design_wavelength > 0.0 && design_wavelength.is_finite()) {
            return Err(invalid("design wavelength must be positive"));
        }
        if !(ambient_index > 0.0 && substrate_index > 0.0) {
            return Err(invalid("ambient and substrate indices must be positive"));
        }
        for (j, l) in layers.iter().enumerate() {
            if !(l.index.re > 0.0) || l.index.im < 0.0 || !l.index.im.is_finite() {
                return Err(invalid(format!("layer {}: index {} needs Re > 0 and Im >= 0", j + 1, l.index)));
            }
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(invalid(format!("layer {}: thickness must be positive", j + 1)));
            }
        }
        Ok(Self { layers, design_wavelength, ambient_index, substrate_index })
    }

    /// Quarter-wave layers of the given real indices.
    pub fn quarter_wave(indices: &[f64], design_wavelength: f64, ambient: f64, substrate: f64) -> Result<Self> {
        if indices.iter().any(|&n| !(n > 0.0)) {
            return Err(invalid("quarter-wave indices must be positive"));
        }
        let layers = indices.iter().map(|&n| Layer::quarter_wave(n, design_wavelength)).collect();
        Self::new(layers, design_wavelength, ambient, substrate)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn design_wavelength(&self) -> f64 {
        self.design_wavelength
    }

    pub fn ambient_index(&self) -> f64 {
        self.ambient_index
    }

    pub fn substrate_index(&self) -> f64 {
        self.substrate_index
    }

    /// Geometric thickness of the stack.
    pub fn thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// `Σ Re(n)·t`.
    pub fn optical_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.index.re * l.thickness).sum()
    }

    /// Copy with layer `j` (0-based) given a new index.
    pub fn with_layer_index(&self, j: usize, index: Complex64) -> Result<Self> {
        let mut layers = self.layers.clone();
        let layer = layers.get_mut(j).ok_or_else(|| invalid(format!("no layer {}", j + 1)))?;
        layer.index = index;
        Self::new(layers, self.design_wavelength, self.ambient_index, self.substrate_index)
    }

    /// The same structure seen from the substrate side.
    pub fn reversed(&self) -> Self {
        Self {
            layers: self.layers.iter().rev().copied().collect(),
            design_wavelength: self.design_wavelength,
            ambient_index: self.substrate_index,
            substrate_index: self.ambient_index,
        }
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        self.ambient_index == self.substrate_index && self.layers.iter().eq(self.layers.iter().rev())
    }
}

/// `H(LH)^pairs` quarter-wave mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterWaveMirror {
    pub n_high: f64,
    pub n_low: f64,
    pub pairs: usize,
    pub ambient: f64,
    pub substrate: f64,
    pub design_wavelength: f64,
}

impl Default for QuarterWaveMirror {
    /// Eleven layers of TiO₂-like and silica-like index on a glass substrate.
    fn default() -> Self {
        Self { n_high: 2.22, n_low: 1.41, pairs: 5, ambient: 1.0, substrate: 1.45, design_wavelength: 1.0 }
    }
}

impl QuarterWaveMirror {
    pub fn indices(&self) -> Vec<f64> {
        let mut v = vec![self.n_high];
        for _ in 0..self.pairs {
            v.push(self.n_low);
            v.push(self.n_high);
        }
        v
    }

    pub fn build(&self) -> Result<LayerStack> {
        LayerStack::quarter_wave(&self.indices(), self.design_wavelength, self.ambient, self.substrate)
    }

    pub fn midgap_transmission(&self) -> Result<f64> {
        Ok(stack_response(&self.build()?, 1.0)?.transmission)
    }

    /// Rescales `n_high` within `±max_rel` so that the midgap transmission equals `target`.
    pub fn tune_high_index(&self, target: f64, max_rel: f64) -> Result<QuarterWaveMirror> {
        let at = |n: f64| -> Result<f64> { QuarterWaveMirror { n_high: n, ..*self }.midgap_transmission() };
        let (mut lo, mut hi) = (self.n_high * (1.0 - max_rel), self.n_high * (1.0 + max_rel));
        let (t_lo, t_hi) = (at(lo)?, at(hi)?);
        // Midgap transmission falls as the index contrast grows.
        if !(t_hi <= target && target <= t_lo) {
            return Err(invalid(format!(
                "target midgap transmission {target} outside [{t_hi:.4e}, {t_lo:.4e}] reachable within ±{max_rel}"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if at(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(QuarterWaveMirror { n_high: 0.5 * (lo + hi), ..*self })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackResponse {
    pub t_amp: Complex64,
    pub r_amp: Complex64,
    /// Power transmission including the `n_s/n_a` flux factor.
    pub transmission: f64,
    pub reflection: f64,
}

fn check_frequency(frequency: f64) -> Result<()> {
    if frequency > 0.0 && frequency.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("frequency {frequency} must be > 0")))
    }
}

/// Amplitudes at frequency `k/k0`.
pub fn stack_response(stack: &LayerStack, frequency: f64) -> Result<StackResponse> {
    check_frequency(frequency)?;
    let (na, ns) = (stack.ambient_index, stack.substrate_index);
    // Accumulate [B, C] from the substrate side.
    let mut b = Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(ns, 0.0);
    for l in stack.layers.iter().rev() {
        let delta = 2.0 * PI * frequency * l.index * l.thickness / stack.design_wavelength;
        let (cos, sin) = (delta.cos(), delta.sin());
        let nb = cos * b - I * sin / l.index * c;
        let nc = -I * l.index * sin * b + cos * c;
        b = nb;
        c = nc;
    }
    let denom = na * b + c;
    if !(denom.norm() > 0.0) || !denom.re.is_finite() || !denom.im.is_finite() {
        return Err(Error::SingularStack { frequency });
    }
    let t_amp = 2.0 * na / denom;
    let r_amp = (na * b - c) / denom;
    Ok(StackResponse { t_amp, r_amp, transmission: ns / na * t_amp.norm_sqr(), reflection: r_amp.norm_sqr() })
}

/// Imaginary index giving single-pass amplitude `1 − amplitude_loss` at the design wavelength.
pub fn absorption_index(thickness: f64, design_wavelength: f64, amplitude_loss: f64) -> f64 {
    -(1.0 - amplitude_loss).ln() * design_wavelength / (2.0 * PI * thickness)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossScanResult {
    /// 1-based position counted from the illuminated side.
    pub layer_index: usize,
    pub log_ratio_t: f64,
    /// `-∞` when the lossless reflection vanishes.
    pub log_ratio_r: f64,
}

/// `ln(T_j/T_0)` and `ln(R_j/R_0)` for loss in each layer, in units of `ln((1−α)²)`.
pub fn loss_scan(stack: &LayerStack, frequency: f64, amplitude_loss: f64) -> Result<Vec<LossScanResult>> {
    if !(0.0..1.0).contains(&amplitude_loss) {
        return Err(invalid(format!("amplitude loss {amplitude_loss} must lie in [0, 1)")));
    }
    let base = stack_response(stack, frequency)?;
    if amplitude_loss == 0.0 {
        return Ok((1..=stack.len())
            .map(|j| LossScanResult { layer_index: j, log_ratio_t: 0.0, log_ratio_r: 0.0 })
            .collect());
    }
    let unit = ((1.0 - amplitude_loss) * (1.0 - amplitude_loss)).ln();
    stack
        .layers
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let extra = absorption_index(l.thickness, stack.design_wavelength, amplitude_loss);
            let lossy = stack.with_layer_index(j, l.index + I * extra)?;
            let resp = stack_response(&lossy, frequency)?;
            let log_ratio_r = if base.reflection > VANISHING_REFLECTION {
                (resp.reflection / base.reflection).ln() / unit
            } else {
                f64::NEG_INFINITY
            };
            Ok(LossScanResult {
                layer_index: j + 1,
                log_ratio_t: (resp.transmission / base.transmission).ln() / unit,
                log_ratio_r,
            })
        })
        .collect()
}

/// Frequency, power coefficients and group delay `dφ_T/dω` in units of `λ0/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    pub frequency: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub delay: f64,
}

/// `dφ_T/dω` at one frequency by a centred difference of relative step `1e-6`.
pub fn group_delay(stack: &LayerStack, frequency: f64) -> Result<f64> {
    check_frequency(frequency)?;
    let h = 1e-6 * frequency;
    let lo = stack_response(stack, frequency - h)?.t_amp;
    let hi = stack_response(stack, frequency + h)?.t_amp;
    let jump = (hi / lo).arg();
    if jump.abs() > 0.5 * PI {
        return Err(Error::PhaseUnwrap { lo: frequency - h, hi: frequency + h, jump });
    }
    // ω = 2πc f/λ0, so dφ/dω = (λ0/c) dφ/df / 2π.
    Ok(jump / (2.0 * h) / (2.0 * PI))
}

/// Delay over an ascending frequency grid; adjacent transmission phases must differ by less than π/2.
pub fn delay_spectrum(stack: &LayerStack, frequencies: &[f64]) -> Result<Vec<DelayPoint>> {
    if frequencies.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("frequency grid must be strictly increasing"));
    }
    let responses = frequencies.iter().map(|&f| stack_response(stack, f)).collect::<Result<Vec<_>>>()?;
    for (w, r) in frequencies.windows(2).zip(responses.windows(2)) {
        let jump = (r[1].t_amp / r[0].t_amp).arg();
        if jump.abs() > 0.5 * PI {
            return Err(Error::PhaseUnwrap { lo: w[0], hi: w[1], jump });
        }
    }
    frequencies
        .iter()
        .zip(&responses)
        .map(|(&f, r)| {
            Ok(DelayPoint {
                frequency: f,
                transmission: r.transmission,
                reflection: r.reflection,
                delay: group_delay(stack, f)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Max,
    Min,
}

/// Golden-section refinement of a bracketed extremum of `T(f)`.
fn refine(stack: &LayerStack, mut a: f64, mut b: f64, kind: Extremum) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let score = |f: f64| -> Result<f64> {
        let t = stack_response(stack, f)?.transmission;
        Ok(if kind == Extremum::Max { -t } else { t })
    };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (score(c)?, score(d)?);
    while (b - a).abs() > 1e-12 * b {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = score(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = score(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// First local extremum of `T(f)` of the given kind above `start`.
fn next_extremum(stack: &LayerStack, start: f64, kind: Extremum) -> Result<f64> {
    let step = 1e-3;
    let sign = if kind == Extremum::Max { 1.0 } else { -1.0 };
    let t = |f: f64| stack_response(stack, f).map(|r| sign * r.transmission);
    let (mut f0, mut f1) = (start, start + step);
    let (mut t0, mut t1) = (t(f0)?, t(f1)?);
    // Leave the region where T is moving away from the requested extremum.
    while t1 <= t0 {
        (f0, f1) = (f1, f1 + step);
        (t0, t1) = (t1, t(f1)?);
        if f1 > start + 2.0 {
            return Err(invalid("no extremum within two design frequencies"));
        }
    }
    loop {
        let f2 = f1 + step;
        let t2 = t(f2)?;
        if t2 < t1 {
            return refine(stack, f0, f2, kind);
        }
        (f0, f1, t1) = (f1, f2, t2);
        if f1 > start + 2.0 {
            return Err(invalid("no extremum within two design frequencies"));
        }
    }
}

/// Transmission peak closest to the upper band edge of the midgap stop band.
pub fn first_resonance(stack: &LayerStack) -> Result<f64> {
    next_extremum(stack, 1.0, Extremum::Max)
}

/// Transmission minimum following [`first_resonance`].
pub fn first_minimum(stack: &LayerStack) -> Result<f64> {
    next_extremum(stack, first_resonance(stack)?, Extremum::Min)
}
