//! Scenario files. Every file carries a `kind` matching the subcommand; unknown keys are rejected.

use condprob::multilayer::QuarterWaveMirror;
use condprob::{Complex64, FinalState};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Barrier {
    Free,
    Rectangular {
        k0: f64,
        d: f64,
    },
    /// Pieces `{x_start, x_end, v: [re, im]}`.
    Segments(Vec<condprob::Segment>),
}

/// A single value or an inclusive uniform range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Value(f64),
    Range(Range),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub kind: String,
    pub barrier: Barrier,
    pub k: Sweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub kind: String,
    pub barrier: Barrier,
    pub k_center: f64,
    pub delta_k: f64,
    #[serde(default)]
    pub final_state: FinalState,
    /// Defaults to ±8/Δk in x and ±6 temporal widths in t.
    pub grid: Option<GridConfig>,
    pub nodes: Option<usize>,
}

/// Wave-packet evaluation of the conditional times.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericDwell {
    pub delta_k: f64,
    #[serde(default = "default_dwell_nx")]
    pub nx: usize,
    #[serde(default = "default_dwell_nt")]
    pub nt: usize,
    /// Half-length of the time grid in temporal widths.
    #[serde(default = "default_dwell_widths")]
    pub t_widths: f64,
}

fn default_dwell_nx() -> usize {
    401
}

fn default_dwell_nt() -> usize {
    401
}

fn default_dwell_widths() -> f64 {
    7.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellConfig {
    pub kind: String,
    pub k: f64,
    pub k0: f64,
    pub d: f64,
    pub numeric: Option<NumericDwell>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakConfig {
    pub kind: String,
    /// Components as `[re, im]`.
    pub state_i: Vec<Complex64>,
    pub state_f: Vec<Complex64>,
    /// Row-major.
    pub observable: Vec<Vec<Complex64>>,
    pub sigma: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    pub couplings: Option<Vec<f64>>,
    pub pointer_points: Option<usize>,
    pub pointer_half_span: Option<f64>,
}

fn default_g() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSpec {
    #[serde(default = "defaults::n_high")]
    pub n_high: f64,
    #[serde(default = "defaults::n_low")]
    pub n_low: f64,
    #[serde(default = "defaults::pairs")]
    pub pairs: usize,
    #[serde(default = "defaults::ambient")]
    pub ambient: f64,
    #[serde(default = "defaults::substrate")]
    pub substrate: f64,
    #[serde(default = "defaults::design_wavelength")]
    pub design_wavelength: f64,
}

mod defaults {
    use condprob::multilayer::QuarterWaveMirror;

    pub fn n_high() -> f64 {
        QuarterWaveMirror::default().n_high
    }
    pub fn n_low() -> f64 {
        QuarterWaveMirror::default().n_low
    }
    pub fn pairs() -> usize {
        QuarterWaveMirror::default().pairs
    }
    pub fn ambient() -> f64 {
        QuarterWaveMirror::default().ambient
    }
    pub fn substrate() -> f64 {
        QuarterWaveMirror::default().substrate
    }
    pub fn design_wavelength() -> f64 {
        QuarterWaveMirror::default().design_wavelength
    }
}

impl From<&MirrorSpec> for QuarterWaveMirror {
    fn from(m: &MirrorSpec) -> Self {
        QuarterWaveMirror {
            n_high: m.n_high,
            n_low: m.n_low,
            pairs: m.pairs,
            ambient: m.ambient,
            substrate: m.substrate,
            design_wavelength: m.design_wavelength,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    pub target: f64,
    #[serde(default = "default_max_rel")]
    pub max_rel: f64,
}

fn default_max_rel() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Landmark {
    FirstResonance,
    FirstMinimum,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Value(f64),
    Landmark(Landmark),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    /// 1-based layer that receives the loss in the lossy columns.
    pub lossy_layer: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorConfig {
    pub kind: String,
    pub mirror: MirrorSpec,
    pub tune: Option<Tuning>,
    pub frequency: Frequency,
    pub amplitude_loss: f64,
    pub spectrum: Option<Spectrum>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_forms() {
        let b: Barrier = serde_json::from_str(r#""free""#).unwrap();
        assert!(matches!(b, Barrier::Free));
        let b: Barrier = serde_json::from_str(r#"{"rectangular":{"k0":0.75,"d":10}}"#).unwrap();
        assert!(matches!(b, Barrier::Rectangular { k0, d } if k0 == 0.75 && d == 10.0));
        let b: Barrier = serde_json::from_str(r#"{"segments":[{"x_start":-1,"x_end":1,"v":[0.2,-0.01]}]}"#).unwrap();
        assert!(matches!(b, Barrier::Segments(s) if s.len() == 1 && s[0].v.im == -0.01));
        assert!(serde_json::from_str::<Barrier>(r#"{"rectangular":{"k0":1,"d":1,"h":2}}"#).is_err());
    }

    #[test]
    fn sweep_and_frequency_forms() {
        assert!(matches!(serde_json::from_str::<Sweep>("0.5").unwrap(), Sweep::Value(v) if v == 0.5));
        let r = serde_json::from_str::<Sweep>(r#"{"from":0.1,"to":0.2,"points":3}"#).unwrap();
        assert!(matches!(r, Sweep::Range(Range { points: 3, .. })));
        let f = serde_json::from_str::<Frequency>(r#""first-minimum""#).unwrap();
        assert!(matches!(f, Frequency::Landmark(Landmark::FirstMinimum)));
        assert!(serde_json::from_str::<Frequency>(r#""second-resonance""#).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let m: MirrorConfig =
            serde_json::from_str(r#"{"kind":"mirror","mirror":{},"frequency":1.0,"amplitude_loss":0.05}"#).unwrap();
        assert_eq!(QuarterWaveMirror::from(&m.mirror), QuarterWaveMirror::default());
        let d: DwellConfig =
            serde_json::from_str(r#"{"kind":"dwell","k":0.5,"k0":0.75,"d":10,"numeric":{"delta_k":0.002}}"#).unwrap();
        let n = d.numeric.unwrap();
        assert_eq!((n.nx, n.nt, n.t_widths), (401, 401, 7.0));
        let e: EvolveConfig =
            serde_json::from_str(r#"{"kind":"evolve","barrier":"free","k_center":0.5,"delta_k":0.03}"#).unwrap();
        assert_eq!(e.final_state, FinalState::Narrowband);
    }
}
