use std::fmt::Write as _;

use condprob::conditional::{dwell_times_closed, dwell_times_numeric, ConditionalFields};
use condprob::multilayer::{
    absorption_index, delay_spectrum, first_minimum, first_resonance, group_delay as mirror_delay, loss_scan,
    stack_response, QuarterWaveMirror,
};
use condprob::scattering::{group_delay, solve_piecewise};
use condprob::wavepacket::{linspace, DEFAULT_NODES, DEFAULT_WINDOW_SIGMAS, NARROWBAND_WARN};
use condprob::weakmeas::{estimate_weak_value, simulate_pointer, CMatrix, CVector, WeakSetup, DEFAULT_COUPLINGS};
use condprob::{BandwidthSpec, Complex64, PotentialProfile, SpaceTimeGrid, WavePacket};
use serde::Serialize;

use crate::config::{
    Barrier, DwellConfig, EvolveConfig, Frequency, Landmark, MirrorConfig, ScatterConfig, Sweep, WeakConfig,
};

pub const FORMAT: &str = "condprob v1";

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<condprob::Error> for Failure {
    fn from(e: condprob::Error) -> Self {
        if e.is_input_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub nodes: Option<usize>,
    pub frames: Option<usize>,
}

/// Bytes to write, an optional second table, and diagnostics for stderr.
#[derive(Debug, Default)]
pub struct Artifact {
    pub body: Vec<u8>,
    pub spectrum: Option<Vec<u8>>,
    pub warnings: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_table(comments: &[String], header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Outcome<Vec<u8>> {
    let mut buf = String::new();
    for c in comments {
        let _ = writeln!(buf, "# {c}");
    }
    let mut w = csv::Writer::from_writer(buf.into_bytes());
    let io = |e: csv::Error| Failure::Numerical(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Failure::Numerical(format!("csv: {e}")))
}

fn json<T: Serialize>(value: &T) -> Outcome<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn profile(b: &Barrier) -> Outcome<PotentialProfile> {
    Ok(match b {
        Barrier::Free => PotentialProfile::free(),
        Barrier::Rectangular { k0, d } => PotentialProfile::rectangular(*k0, *d)?,
        Barrier::Segments(s) => PotentialProfile::new(s.clone())?,
    })
}

fn sweep(s: &Sweep) -> Outcome<Vec<f64>> {
    match s {
        Sweep::Value(v) => Ok(vec![*v]),
        Sweep::Range(r) if r.points >= 1 && r.from.is_finite() && r.to.is_finite() => {
            Ok(linspace(r.from, r.to, r.points))
        }
        Sweep::Range(_) => Err(Failure::Config("range needs finite bounds and at least one point".into())),
    }
}

fn bandwidth(k_center: f64, delta_k: f64, o: Overrides) -> Outcome<BandwidthSpec> {
    Ok(BandwidthSpec::with_rule(k_center, delta_k, o.nodes.unwrap_or(DEFAULT_NODES), DEFAULT_WINDOW_SIGMAS)?)
}

pub fn scatter(cfg: &ScatterConfig) -> Outcome<Artifact> {
    let p = profile(&cfg.barrier)?;
    let ks = sweep(&cfg.k)?;
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let a = solve_piecewise(&p, k)?;
        let gd = group_delay(k, &p)?;
        rows.push(vec![
            num(k),
            num(a.t_amp.re),
            num(a.t_amp.im),
            num(a.r_amp.re),
            num(a.r_amp.im),
            num(a.transmission()),
            num(gd),
        ]);
    }
    let body = csv_table(
        &[format!("{FORMAT} scatter")],
        &["k", "re_t", "im_t", "re_r", "im_r", "abs_t2", "group_delay"],
        rows,
    )?;
    Ok(Artifact { body, ..Default::default() })
}

pub fn evolve(cfg: &EvolveConfig, o: Overrides) -> Outcome<Artifact> {
    let p = profile(&cfg.barrier)?;
    let nodes = cfg.nodes.or(o.nodes);
    let spec = bandwidth(cfg.k_center, cfg.delta_k, Overrides { nodes, ..o })?;
    let mut grid = match &cfg.grid {
        Some(g) => SpaceTimeGrid::uniform((g.x_min, g.x_max), g.nx, (g.t_min, g.t_max), g.nt)?,
        None => SpaceTimeGrid::default_for(&spec)?,
    };
    if let Some(n) = o.frames {
        let t = grid.t();
        grid = SpaceTimeGrid::new(grid.x().to_vec(), linspace(t[0], t[t.len() - 1], n))?;
    }
    let packet = WavePacket::new(spec, p)?;
    let mut warnings = Vec::new();
    let spread = packet.band_variation();
    if spread > NARROWBAND_WARN {
        warnings.push(format!(
            "transmission varies by {:.0}% across the band; narrow-band final states are approximate",
            100.0 * spread
        ));
    }
    let c = ConditionalFields::compute(&packet, &grid, cfg.final_state)?;
    let mut comments = vec![
        format!("{FORMAT} evolve"),
        format!("final_state={:?}", cfg.final_state).to_lowercase(),
        format!("t_amp={},{}", num(c.t_amp.re), num(c.t_amp.im)),
        format!("r_amp={},{}", num(c.r_amp.re), num(c.r_amp.im)),
        format!("mixture_defect={}", num(c.mixture_defect())),
    ];
    if c.refl.is_none() {
        comments.push("reflection channel empty; p_refl columns are nan".into());
    }
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut rows = Vec::with_capacity(grid.t().len() * grid.x().len());
    for (it, &t) in grid.t().iter().enumerate() {
        for (ix, &x) in grid.x().iter().enumerate() {
            let pt = c.trans.at(it, ix);
            let pr = c.refl.as_ref().map_or(nan, |f| f.at(it, ix));
            rows.push(vec![
                num(t),
                num(x),
                num(pt.re),
                num(pt.im),
                num(pr.re),
                num(pr.im),
                num(c.density.at(it, ix).re),
            ]);
        }
    }
    let body =
        csv_table(&comments, &["t", "x", "re_p_trans", "im_p_trans", "re_p_refl", "im_p_refl", "abs_psi2"], rows)?;
    Ok(Artifact { body, spectrum: None, warnings })
}

#[derive(Serialize)]
struct C {
    re: f64,
    im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        C { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct NumericTimes {
    delta_k: f64,
    nodes: usize,
    tau_trans: C,
    tau_refl: Option<C>,
    tau_dwell: f64,
    identity_residual: f64,
}

#[derive(Serialize)]
struct DwellReport {
    format: String,
    k: f64,
    k0: f64,
    d: f64,
    transmission: f64,
    reflection: f64,
    tau_trans: C,
    tau_refl: Option<C>,
    tau_dwell: f64,
    tau_bl: Option<f64>,
    identity_residual: f64,
    numeric: Option<NumericTimes>,
}

pub fn dwell(cfg: &DwellConfig, o: Overrides) -> Outcome<Artifact> {
    let closed = dwell_times_closed(cfg.k, cfg.k0, cfg.d)?;
    let numeric = match &cfg.numeric {
        None => None,
        Some(n) => {
            let spec = bandwidth(cfg.k, n.delta_k, o)?;
            let w = n.t_widths * spec.temporal_width();
            let nt = o.frames.unwrap_or(n.nt);
            let h = 0.5 * cfg.d;
            let grid = SpaceTimeGrid::new(linspace(-h, h, n.nx), linspace(-w, w, nt))?;
            let nodes = spec.node_count();
            let packet = WavePacket::new(spec, PotentialProfile::rectangular(cfg.k0, cfg.d)?)?;
            let c = ConditionalFields::compute(&packet, &grid, Default::default())?;
            let tt = dwell_times_numeric(&c.trans, (-h, h))?;
            let tr = c.refl.as_ref().map(|f| dwell_times_numeric(f, (-h, h))).transpose()?;
            let td = dwell_times_numeric(&c.density, (-h, h))?.re;
            let sum = tt * c.t_amp.norm_sqr() + tr.unwrap_or_default() * c.r_amp.norm_sqr();
            Some(NumericTimes {
                delta_k: n.delta_k,
                nodes,
                tau_trans: tt.into(),
                tau_refl: tr.map(C::from),
                tau_dwell: td,
                identity_residual: (sum - td).norm() / td.abs(),
            })
        }
    };
    let report = DwellReport {
        format: format!("{FORMAT} dwell"),
        k: cfg.k,
        k0: cfg.k0,
        d: cfg.d,
        transmission: closed.transmission,
        reflection: closed.reflection,
        tau_trans: closed.tau_trans.into(),
        tau_refl: closed.tau_refl.map(C::from),
        tau_dwell: closed.tau_dwell,
        tau_bl: closed.tau_bl,
        identity_residual: closed.identity_residual().norm(),
        numeric,
    };
    Ok(Artifact { body: json(&report)?, ..Default::default() })
}

#[derive(Serialize)]
struct PointerReport {
    g: f64,
    delta_q: f64,
    delta_p: f64,
    prob_postselect: f64,
    predicted_delta_q: f64,
    predicted_delta_p: f64,
}

#[derive(Serialize)]
struct WeakReport {
    format: String,
    dim: usize,
    sigma: f64,
    weak_value: C,
    pointer: PointerReport,
    couplings: Vec<f64>,
    /// `ΔQ/g` and `2σ²ΔP/g` extrapolated to `g → 0`.
    extrapolated: C,
}

pub fn weak(cfg: &WeakConfig) -> Outcome<Artifact> {
    let n = cfg.state_i.len();
    if cfg.observable.len() != n || cfg.observable.iter().any(|r| r.len() != n) {
        return Err(Failure::Config(format!("observable must be {n}x{n}")));
    }
    let obs = CMatrix::from_fn(n, n, |a, b| cfg.observable[a][b]);
    let setup = WeakSetup::new(
        CVector::from_vec(cfg.state_i.clone()),
        CVector::from_vec(cfg.state_f.clone()),
        obs,
        cfg.sigma,
        cfg.g,
    )?;
    let setup = match (cfg.pointer_points, cfg.pointer_half_span) {
        (None, None) => setup,
        (p, h) => {
            let (points, half) = (p.unwrap_or(setup.points), h.unwrap_or(setup.half_span));
            setup.with_grid(points, half)?
        }
    };
    let w = setup.weak_value()?;
    let r = simulate_pointer(&setup)?;
    let couplings = cfg.couplings.clone().unwrap_or_else(|| DEFAULT_COUPLINGS.to_vec());
    let est = estimate_weak_value(&setup, &couplings)?;
    let s2 = 2.0 * cfg.sigma * cfg.sigma;
    let report = WeakReport {
        format: format!("{FORMAT} weak"),
        dim: n,
        sigma: cfg.sigma,
        weak_value: w.into(),
        pointer: PointerReport {
            g: cfg.g,
            delta_q: r.delta_q,
            delta_p: r.delta_p,
            prob_postselect: r.prob_postselect,
            predicted_delta_q: cfg.g * w.re,
            predicted_delta_p: cfg.g * w.im / s2,
        },
        couplings,
        extrapolated: est.as_complex().into(),
    };
    Ok(Artifact { body: json(&report)?, ..Default::default() })
}

pub fn mirror(cfg: &MirrorConfig) -> Outcome<Artifact> {
    let base = QuarterWaveMirror::from(&cfg.mirror);
    let untuned = base.midgap_transmission()?;
    let design = match &cfg.tune {
        Some(t) => base.tune_high_index(t.target, t.max_rel)?,
        None => base,
    };
    let stack = design.build()?;
    let frequency = match cfg.frequency {
        Frequency::Value(f) => f,
        Frequency::Landmark(Landmark::FirstResonance) => first_resonance(&stack)?,
        Frequency::Landmark(Landmark::FirstMinimum) => first_minimum(&stack)?,
    };
    let resp = stack_response(&stack, frequency)?;
    let scan = loss_scan(&stack, frequency, cfg.amplitude_loss)?;
    let mut comments = vec![
        format!("{FORMAT} mirror"),
        format!(
            "n_high={} n_low={} pairs={} ambient={} substrate={}",
            num(design.n_high),
            num(design.n_low),
            design.pairs,
            num(design.ambient),
            num(design.substrate)
        ),
        format!("untuned_midgap_transmission={}", num(untuned)),
    ];
    if cfg.tune.is_some() {
        comments.push(format!(
            "tuned n_high from {} (x{}); midgap_transmission={}",
            num(base.n_high),
            num(design.n_high / base.n_high),
            num(design.midgap_transmission()?)
        ));
    }
    comments.push(format!("frequency={}", num(frequency)));
    comments.push(format!("transmission={} reflection={}", num(resp.transmission), num(resp.reflection)));
    comments.push(format!("group_delay={}", num(mirror_delay(&stack, frequency)?)));
    comments.push(format!("amplitude_loss={}", num(cfg.amplitude_loss)));
    let body = csv_table(
        &comments,
        &["layer_index", "log_ratio_t", "log_ratio_r"],
        scan.iter().map(|r| vec![r.layer_index.to_string(), num(r.log_ratio_t), num(r.log_ratio_r)]),
    )?;

    let spectrum = match &cfg.spectrum {
        None => None,
        Some(s) => {
            if s.points < 2 {
                return Err(Failure::Config("spectrum needs at least two points".into()));
            }
            let grid = linspace(s.from, s.to, s.points);
            let clean = delay_spectrum(&stack, &grid)?;
            let lossy = match s.lossy_layer {
                None => None,
                Some(j) if (1..=stack.len()).contains(&j) => {
                    let l = stack.layers()[j - 1];
                    let extra = absorption_index(l.thickness, stack.design_wavelength(), cfg.amplitude_loss);
                    let st = stack.with_layer_index(j - 1, l.index + Complex64::new(0.0, extra))?;
                    Some(delay_spectrum(&st, &grid)?)
                }
                Some(j) => return Err(Failure::Config(format!("lossy_layer {j} outside 1..={}", stack.len()))),
            };
            let mut header = vec!["frequency", "transmission", "reflection", "delay"];
            if lossy.is_some() {
                header.extend(["transmission_lossy", "delay_lossy"]);
            }
            let rows = clean.iter().enumerate().map(|(i, p)| {
                let mut row = vec![num(p.frequency), num(p.transmission), num(p.reflection), num(p.delay)];
                if let Some(l) = &lossy {
                    row.extend([num(l[i].transmission), num(l[i].delay)]);
                }
                row
            });
            let comments =
                vec![format!("{FORMAT} mirror-spectrum"), format!("stack_thickness={}", num(stack.thickness()))];
            Some(csv_table(&comments, &header, rows)?)
        }
    };
    Ok(Artifact { body, spectrum, warnings: Vec::new() })
}
