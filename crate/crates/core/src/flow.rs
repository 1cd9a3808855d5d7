//! Ricci flow of profiles.
//!
//! Every profile is flowed in the form
//!
//! ```text
//! g = e^{2w(θ)} (dθ² + sin²θ (e^{2P(θ)} σ₁² + σ₂² + σ₃²)),   θ ∈ [0, π],
//! ```
//!
//! with `w` and `P` even at both poles and `P = 0` there. A radial
//! diffeomorphism keeps the flow in this form: with
//! `I(θ) = ∫₀^θ (Ric₀₀ − Ric₂₂)/sin`, `c = −I(π)/2` and `ξ = sin θ (I + c)`,
//!
//! ```text
//! ∂t w = −Ric₂₂ + κR̄/4 + ξ w_θ + (I + c) cos θ,
//! ∂t P = Ric₂₂ − Ric₁₁ + ξ P_θ.
//! ```
//!
//! `κ = 1` gives the normalized flow `∂t g = −2Ric + ½R̄g`, `κ = 0` the
//! plain Ricci flow. Squashed profiles are moved into this form once at the
//! start; conformal profiles are the case `P ≡ 0`. Time stepping is the
//! classical four-stage Runge–Kutta scheme.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ConformalProfile, Profile, WarpedProfile, ORBIT_VOLUME};
use crate::error::{Error, Result};
use crate::frame::{ricci_diag, Connection, FrameJet};
use crate::functionals::{evaluate, FunctionalConfig, FunctionalSeries, Sample};
use crate::radial::{
    cumulative_integral, quadrature_weights, DerivativeScheme, Parity, QuadratureKind, RadialDiff,
};

/// Largest relative deviation from `b = φ sin θ` accepted for warped input.
const GAUGE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Integrate `∂t g = −2Ric + ½R̄g` from the unit-volume rescaling of
    /// the initial metric.
    #[default]
    DirectNormalized,
    /// Integrate `∂t g = −2Ric` and rescale the trajectory afterwards.
    RescaleAfter,
    /// Integrate `∂t g = −2Ric` and keep the result as is.
    Unnormalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowTolerances {
    /// Stop once `sup K · Vol^{1/2}` falls below this value.
    pub converge_k: Option<f64>,
    /// Degeneration once `sup |Riem| · Vol^{1/2}` exceeds this value.
    pub curvature_limit: f64,
    /// Degeneration once the time step falls below this value.
    pub min_dt: f64,
}

impl Default for FlowTolerances {
    fn default() -> Self {
        FlowTolerances { converge_k: Some(1e-10), curvature_limit: 1e5, min_dt: 1e-13 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// `dt ≤ cfl / sup|Riem|` and `dt ≤ min(cfl, 0.2) · (e^w h)²`.
    pub cfl: f64,
    pub t_max: f64,
    /// Time between samples.
    pub sample_interval: f64,
    pub normalization: Normalization,
    pub scheme: DerivativeScheme,
    pub tolerances: FlowTolerances,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cfl: 0.1,
            t_max: 1.0,
            sample_interval: 0.01,
            normalization: Normalization::DirectNormalized,
            scheme: DerivativeScheme::Spectral,
            tolerances: FlowTolerances::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::Config(format!("cfl = {} outside (0, 0.5]", self.cfl)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("T = {} must be positive", self.t_max)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::Config(format!("sample interval {} must be positive", self.sample_interval)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed { t: f64 },
    Converged { t: f64 },
    Degenerate { t: f64, detail: String },
}

impl Termination {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Termination::Degenerate { .. })
    }
}

/// Largest diffusive step `dt / (e^w h)²` used whatever the CFL
/// coefficient; the four-stage scheme loses stability near 0.28.
const DIFFUSIVE_CFL: f64 = 0.2;

/// Time derivative of the flow variables, including the gauge field `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRate {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: Vec<f64>,
    /// `∂t log` of the frame lengths `(e^w, a, b, b)` before the gauge
    /// terms: `−Ric_kk + κR̄/4` with `κ = 1` for the normalized flow.
    pub log_metric: Vec<[f64; 4]>,
    /// Average scalar curvature.
    pub rbar: f64,
}

/// Stepping state `[w…, P…]` on the θ grid.
#[derive(Clone, Debug)]
pub struct Flow {
    n: usize,
    conformal: bool,
    kappa: f64,
    rd: RadialDiff,
    /// Simpson weights times `sin³θ`.
    vol_weights: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    vol0: f64,
}

struct Eval {
    rate: Vec<f64>,
    ric: Vec<[f64; 4]>,
    rbar: f64,
    xi: Vec<f64>,
    riem_max: f64,
    vol: f64,
    min_spacing: f64,
}

/// `(w, P)` of a profile, transforming squashed input first.
fn gauge_variables(p: &Profile) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let warped = match p {
        Profile::Conformal(c) => return Ok((c.w().to_vec(), vec![0.0; c.n()], true)),
        Profile::Squashed(q) => q.conformal_gauge()?,
        Profile::Warped(w) => {
            if !w.is_conformal_gauge(GAUGE_TOL) {
                return Err(Error::InvalidProfile(
                    "warped input must have the form e^{2w}(dθ² + sin²θ(e^{2P}σ₁² + σ₂² + σ₃²))".into(),
                ));
            }
            w.clone()
        }
    };
    let n = warped.n();
    let w = warped.phi().iter().map(|v| v.ln()).collect();
    let mut pv = vec![0.0; n];
    for i in 1..n - 1 {
        pv[i] = (warped.a()[i] / warped.b()[i]).ln();
    }
    Ok((w, pv, false))
}

impl Flow {
    /// Starts a flow at `p0` as given (no rescaling).
    pub fn new(p0: &Profile, normalized: bool, scheme: DerivativeScheme) -> Result<Flow> {
        let (w, pv, conformal) = gauge_variables(p0)?;
        let n = w.len();
        let h = PI / (n - 1) as f64;
        let mut y = w;
        y.extend(pv);
        let sin: Vec<f64> = (0..n).map(|i| if i == n - 1 { 0.0 } else { (i as f64 * h).sin() }).collect();
        let vol_weights =
            quadrature_weights(n, h, QuadratureKind::Simpson).iter().zip(&sin).map(|(w, s)| w * s.powi(3)).collect();
        let mut flow = Flow {
            n,
            conformal,
            kappa: if normalized { 1.0 } else { 0.0 },
            rd: RadialDiff::new(n, scheme),
            vol_weights,
            sin,
            cos: (0..n).map(|i| (i as f64 * h).cos()).collect(),
            y,
            t: 0.0,
            vol0: 0.0,
        };
        flow.vol0 = flow.volume_of(&flow.y);
        Ok(flow)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn volume(&self) -> f64 {
        self.volume_of(&self.y)
    }

    /// Conformal factor `w` and squash `P` at the nodes.
    pub fn state(&self) -> (&[f64], &[f64]) {
        self.y.split_at(self.n)
    }

    /// Current state as a validated profile: conformal when the input was
    /// conformal, warped otherwise.
    pub fn profile(&self) -> Result<Profile> {
        let (w, pv) = self.state();
        if self.conformal {
            return Ok(Profile::Conformal(ConformalProfile::new(w.to_vec())?));
        }
        let phi: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let b: Vec<f64> = phi.iter().zip(&self.sin).map(|(e, s)| e * s).collect();
        let a = b.iter().zip(pv).map(|(b, p)| b * p.exp()).collect();
        Ok(Profile::Warped(WarpedProfile::new(PI, phi, a, b)?))
    }

    fn volume_of(&self, y: &[f64]) -> f64 {
        let n = self.n;
        (1..n - 1).map(|i| self.vol_weights[i] * (4.0 * y[i] + y[n + i]).exp()).sum::<f64>() * ORBIT_VOLUME
    }

    fn eval(&self, y: &[f64], want_riem: bool) -> Result<Eval> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField(i));
        }
        let n = self.n;
        let (w, pv) = y.split_at(n);
        let h = PI / (n - 1) as f64;
        let ((w1, w2), (p1, p2)) = self.rd.derivatives_pair(w, pv, Parity::Even, h);
        let mut ric = vec![[0.0; 4]; n];
        let mut dv = vec![0.0; n];
        let mut riem_sq = 0.0f64;
        for i in 1..n - 1 {
            let (s, c) = (self.sin[i], self.cos[i]);
            let e = w[i].exp();
            let ep = if self.conformal { 1.0 } else { pv[i].exp() };
            let b = e * s;
            let d = w1[i] * s + c;
            let d_theta = w2[i] * s + w1[i] * c - s;
            let dd = d_theta / e;
            let q = p1[i] * s + d;
            let a_dd = ep * (p1[i] * q + p2[i] * s + p1[i] * c + d_theta) / e;
            let jet = FrameJet { a: [ep * b, b, b], d: [ep * q, d, d], dd: [a_dd, dd, dd] };
            ric[i] = ricci_diag(&jet);
            if want_riem {
                riem_sq = riem_sq.max(Connection::new(&jet).riemann_norm_sq());
            }
            let e2 = e * e;
            dv[i] = self.vol_weights[i] * e2 * e2 * ep;
        }
        // limit of the closed form at a pole, where Ric is isotropic
        for i in [0, n - 1] {
            ric[i] = [3.0 * (-2.0 * w[i]).exp() * (1.0 - 2.0 * w2[i] - p2[i]); 4];
        }
        let vol: f64 = dv.iter().sum();
        let mut g = vec![0.0; n];
        for i in 1..n - 1 {
            g[i] = (ric[i][0] - ric[i][2]) / self.sin[i];
        }
        let int = cumulative_integral(&g, Parity::Odd, h);
        let c = -0.5 * int[n - 1];
        let mut rate = vec![0.0; 2 * n];
        let mut xi = vec![0.0; n];
        for i in 0..n {
            let ic = int[i] + c;
            xi[i] = self.sin[i] * ic;
            rate[i] = -ric[i][2] + xi[i] * w1[i] + ic * self.cos[i];
            if i > 0 && i < n - 1 && !self.conformal {
                rate[n + i] = ric[i][2] - ric[i][1] + xi[i] * p1[i];
            }
        }
        if self.kappa != 0.0 {
            // R̄/4 in the form that keeps the discrete volume fixed
            let growth: f64 = (0..n).map(|i| dv[i] * (4.0 * rate[i] + rate[n + i])).sum();
            let shift = -growth / (4.0 * vol);
            rate[..n].iter_mut().for_each(|r| *r += shift);
        }
        let rbar = (0..n).map(|i| dv[i] * ric[i].iter().sum::<f64>()).sum::<f64>() / vol;
        let riem_max = riem_sq.sqrt();
        let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Eval { rate, ric, rbar, xi, riem_max, vol: vol * ORBIT_VOLUME, min_spacing: wmin.exp() * h })
    }

    /// Current time derivative.
    pub fn rate(&self) -> Result<ProfileRate> {
        let e = self.eval(&self.y, false)?;
        let (w, p) = e.rate.split_at(self.n);
        let shift = 0.25 * self.kappa * e.rbar;
        let log_metric = e.ric.iter().map(|r| r.map(|v| shift - v)).collect();
        Ok(ProfileRate { w: w.to_vec(), p: p.to_vec(), xi: e.xi, log_metric, rbar: e.rbar })
    }

    /// `(sup |Riem|, Vol)` of the current state.
    pub fn curvature_scale(&self) -> Result<(f64, f64)> {
        let e = self.eval(&self.y, true)?;
        Ok((e.riem_max, e.vol))
    }

    /// Largest step allowed by the CFL policy.
    pub fn stable_dt(&self, cfl: f64) -> Result<f64> {
        let e = self.eval(&self.y, true)?;
        Ok(Self::dt_from(&e, cfl))
    }

    fn dt_from(e: &Eval, cfl: f64) -> f64 {
        let curv = if e.riem_max > 0.0 { cfl / e.riem_max } else { f64::INFINITY };
        curv.min(cfl.min(DIFFUSIVE_CFL) * e.min_spacing * e.min_spacing)
    }

    fn rk4(&self, k1: &[f64], dt: f64) -> Result<Vec<f64>> {
        let y = &self.y;
        let axpy = |c: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + c * k).collect() };
        let k2 = self.eval(&axpy(0.5 * dt, k1), false)?.rate;
        let k3 = self.eval(&axpy(0.5 * dt, &k2), false)?.rate;
        let k4 = self.eval(&axpy(dt, &k3), false)?.rate;
        Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
    }

    /// One Runge–Kutta step of size `dt`. In normalized mode the volume is
    /// projected back to its initial value afterwards, which removes the
    /// fifth-order drift of the step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let k1 = self.eval(&self.y, false)?.rate;
        self.advance(&k1, dt)
    }

    fn advance(&mut self, k1: &[f64], dt: f64) -> Result<()> {
        let mut y = self.rk4(k1, dt)?;
        if self.kappa != 0.0 {
            let s = 0.25 * (self.vol0 / self.volume_of(&y)).ln();
            y[..self.n].iter_mut().for_each(|v| *v += s);
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField(i));
        }
        self.y = y;
        self.t += dt;
        Ok(())
    }

    /// Advances to `t_target` with CFL-limited steps, checking the
    /// degeneration criteria along the way. Returns the number of steps.
    ///
    /// `sup |Riem|` is refreshed every step while the curvature bound is
    /// within a factor 4 of the diffusive one, and every 16 steps otherwise.
    fn advance_to(&mut self, t_target: f64, cfg: &FlowConfig) -> std::result::Result<usize, String> {
        let mut steps = 0;
        let mut riem = (0.0, 0);
        while self.t < t_target * (1.0 - 1e-14) {
            let mut e = self.eval(&self.y, riem.1 == 0).map_err(|e| e.to_string())?;
            if riem.1 == 0 {
                let scale = e.riem_max * e.vol.sqrt();
                if scale > cfg.tolerances.curvature_limit {
                    return Err(format!("curvature blow-up (sup|Riem|·Vol^1/2 = {scale:.3e})"));
                }
                let relaxed = e.riem_max * cfg.cfl.min(DIFFUSIVE_CFL) * e.min_spacing * e.min_spacing < 0.25 * cfg.cfl;
                riem = (e.riem_max, if relaxed { 16 } else { 1 });
            } else {
                e.riem_max = riem.0;
            }
            riem.1 -= 1;
            let dt_cfl = Self::dt_from(&e, cfg.cfl);
            if dt_cfl < cfg.tolerances.min_dt {
                return Err(format!("time step underflow ({dt_cfl:.3e})"));
            }
            let remaining = t_target - self.t;
            // avoid a sliver step just before a sample time
            let dt = if remaining <= dt_cfl {
                remaining
            } else if remaining < 2.0 * dt_cfl {
                0.5 * remaining
            } else {
                dt_cfl
            };
            self.advance(&e.rate, dt).map_err(|e| e.to_string())?;
            steps += 1;
        }
        self.t = t_target;
        Ok(steps)
    }
}

/// Time derivative of `p` in the gauge described in the module docs.
pub fn ricci_rhs(p: &Profile, normalized: bool) -> Result<ProfileRate> {
    Flow::new(p, normalized, DerivativeScheme::Spectral)?.rate()
}

/// One step of size `dt`.
pub fn step(p: &Profile, dt: f64, normalized: bool) -> Result<Profile> {
    let mut f = Flow::new(p, normalized, DerivativeScheme::Spectral)?;
    f.step(dt)?;
    f.profile()
}

/// The profile scaled to unit volume.
pub fn unit_volume(p: &Profile) -> Result<Profile> {
    scale_volume(p, 1.0 / p.volume())
}

/// Multiplies the volume by `factor` (lengths by `factor^{1/4}`).
fn scale_volume(p: &Profile, factor: f64) -> Result<Profile> {
    let s = factor.powf(0.25);
    Ok(match p {
        Profile::Squashed(q) => Profile::Squashed(q.scaled(s)?),
        Profile::Conformal(q) => {
            Profile::Conformal(ConformalProfile::new(q.w().iter().map(|w| w + s.ln()).collect())?)
        }
        Profile::Warped(q) => Profile::Warped(q.scaled(s)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub normalization: Normalization,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub profiles: Vec<Profile>,
    pub series: FunctionalSeries,
    pub termination: Termination,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `snap_NNNNN.txt` profile snapshots and `manifest.json` into
    /// `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, config: &FlowConfig) -> Result<Vec<String>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.profiles.len());
        let mut index = Vec::with_capacity(self.profiles.len());
        for (i, (t, p)) in self.times.iter().zip(&self.profiles).enumerate() {
            let name = format!("snap_{i:05}.txt");
            p.write_file(dir.join(&name))?;
            index.push(serde_json::json!({"index": i, "t": t, "file": name}));
            files.push(name);
        }
        let manifest = serde_json::json!({
            "config": config,
            "normalization": self.normalization,
            "termination": self.termination,
            "steps": self.steps,
            "samples": index,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        files.push("manifest.json".into());
        Ok(files)
    }
}

/// Integrates the flow from `p0` and samples every functional of `fcfg`.
pub fn run(p0: &Profile, cfg: &FlowConfig, fcfg: &FunctionalConfig) -> Result<Trajectory> {
    cfg.validate()?;
    fcfg.validate()?;
    match cfg.normalization {
        Normalization::DirectNormalized => integrate(&unit_volume(p0)?, cfg, fcfg, true),
        Normalization::Unnormalized => integrate(p0, cfg, fcfg, false),
        Normalization::RescaleAfter => rescale_to_normalized(&integrate(p0, cfg, fcfg, false)?, fcfg),
    }
}

fn sample(p: &Profile, fcfg: &FunctionalConfig, t: f64) -> Result<Sample> {
    evaluate(&p.geometry()?, fcfg, t)
}

fn integrate(p0: &Profile, cfg: &FlowConfig, fcfg: &FunctionalConfig, normalized: bool) -> Result<Trajectory> {
    let mut flow = Flow::new(p0, normalized, cfg.scheme)?;
    let start = flow.profile()?;
    let s0 = sample(&start, fcfg, 0.0)?;
    let mut traj = Trajectory {
        normalization: cfg.normalization,
        times: vec![0.0],
        profiles: vec![start],
        series: FunctionalSeries::new(fcfg.p.clone()),
        termination: Termination::Completed { t: 0.0 },
        steps: 0,
    };
    let converged = |s: &Sample| cfg.tolerances.converge_k.is_some_and(|tol| s.k_sup * s.vol.sqrt() < tol);
    let done = converged(&s0);
    traj.series.samples.push(s0);
    if done {
        traj.termination = Termination::Converged { t: 0.0 };
        return Ok(traj);
    }
    let n_samples = (cfg.t_max / cfg.sample_interval).round().max(1.0) as usize;
    for k in 1..=n_samples {
        let target = (k as f64 * cfg.sample_interval).min(cfg.t_max);
        let t_prev = flow.time();
        let outcome = flow.advance_to(target, cfg).and_then(|steps| {
            let p = flow.profile().map_err(|e| e.to_string())?;
            let s = sample(&p, fcfg, target).map_err(|e| e.to_string())?;
            Ok((steps, p, s))
        });
        match outcome {
            Ok((steps, p, s)) => {
                traj.steps += steps;
                let stop = converged(&s);
                traj.times.push(target);
                traj.profiles.push(p);
                traj.series.samples.push(s);
                if stop {
                    traj.termination = Termination::Converged { t: target };
                    return Ok(traj);
                }
            }
            Err(detail) => {
                traj.termination = Termination::Degenerate { t: flow.time().max(t_prev), detail };
                return Ok(traj);
            }
        }
    }
    traj.termination = Termination::Completed { t: cfg.t_max };
    Ok(traj)
}

/// `∫₀^{tᵢ} f` on non-uniform samples by local cubic interpolation.
fn cumulative_cubic(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let seg = if n < 4 {
            0.5 * (f[i] + f[i + 1]) * (t[i + 1] - t[i])
        } else {
            let s = i.saturating_sub(1).min(n - 4);
            let nodes = &t[s..s + 4];
            let vals = &f[s..s + 4];
            lagrange_integral(nodes, vals, t[i], t[i + 1])
        };
        out[i + 1] = out[i] + seg;
    }
    out
}

/// Exact integral over `[lo, hi]` of the cubic through four points, by
/// 3-point Gauss–Legendre.
fn lagrange_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let eval = |s: f64| -> f64 {
        (0..4)
            .map(|j| {
                let mut l = y[j];
                for m in 0..4 {
                    if m != j {
                        l *= (s - x[m]) / (x[j] - x[m]);
                    }
                }
                l
            })
            .sum()
    };
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let g = (0.6f64).sqrt();
    half * (5.0 / 9.0 * eval(mid - g * half) + 8.0 / 9.0 * eval(mid) + 5.0 / 9.0 * eval(mid + g * half))
}

/// Maps a Ricci flow trajectory `g(t)` to the normalized flow
/// `g̃ = ψ g`, `t̃ = ∫₀ᵗ ψ`, with `ψ = Vol(g(t))^{-1/2}`.
pub fn rescale_to_normalized(traj: &Trajectory, fcfg: &FunctionalConfig) -> Result<Trajectory> {
    if traj.profiles.len() != traj.times.len() {
        return Err(Error::InvalidProfile("trajectory has no profile snapshots".into()));
    }
    let vols: Vec<f64> = traj.profiles.iter().map(Profile::volume).collect();
    if let Some(i) = vols.iter().position(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::DegenerateProfile { node: i, what: "non-positive volume".into() });
    }
    let psi: Vec<f64> = vols.iter().map(|v| v.powf(-0.5)).collect();
    let times = cumulative_cubic(&traj.times, &psi);
    let mut profiles = Vec::with_capacity(traj.len());
    let mut series = FunctionalSeries::new(fcfg.p.clone());
    for ((p, v), t) in traj.profiles.iter().zip(&vols).zip(&times) {
        let q = scale_volume(p, 1.0 / v)?;
        series.samples.push(sample(&q, fcfg, *t)?);
        profiles.push(q);
    }
    let last = *times.last().unwrap_or(&0.0);
    let termination = match &traj.termination {
        Termination::Completed { .. } => Termination::Completed { t: last },
        Termination::Converged { .. } => Termination::Converged { t: last },
        Termination::Degenerate { detail, .. } => Termination::Degenerate { t: last, detail: detail.clone() },
    };
    Ok(Trajectory {
        normalization: Normalization::RescaleAfter,
        times,
        profiles,
        series,
        termination,
        steps: traj.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{SquashShape, SquashedProfile};

    fn max(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn round_is_a_fixed_point() {
        let p = unit_volume(&SquashedProfile::round(65, 1.0).unwrap().into()).unwrap();
        let r = ricci_rhs(&p, true).unwrap();
        assert!(max(&r.w) < 1e-8 && max(&r.p) < 1e-8, "{} {}", max(&r.w), max(&r.p));
        let c = unit_volume(&ConformalProfile::round(65).unwrap().into()).unwrap();
        let r = ricci_rhs(&c, true).unwrap();
        assert!(max(&r.w) < 1e-9 && max(&r.p) == 0.0);
        assert!(r.log_metric.iter().flatten().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn unnormalized_round_is_homothetic() {
        // ρ² = 1 shrinks as ρ² − 6t, so ∂t w = −3
        let r = ricci_rhs(&ConformalProfile::round(65).unwrap().into(), false).unwrap();
        assert!(r.w.iter().all(|v| (v + 3.0).abs() < 1e-9));
        assert!(max(&r.xi) < 1e-9);
        assert!(r.log_metric.iter().flatten().all(|v| (v + 3.0).abs() < 1e-9));
        assert!((r.rbar - 12.0).abs() < 1e-9);
    }

    #[test]
    fn squashed_input_is_moved_isometrically() {
        let q = SquashedProfile::round(65, 1.3).unwrap().perturb_squash(0.1, &SquashShape::SinSq).unwrap();
        let flow = Flow::new(&q.clone().into(), true, DerivativeScheme::Spectral).unwrap();
        let g0 = q.as_warped().geometry().unwrap();
        let g1 = flow.profile().unwrap().geometry().unwrap();
        assert!((g0.volume() - g1.volume()).abs() < 1e-10 * g0.volume());
        let w0 = g0.integrate(|d| d.weyl_op_sq()).unwrap();
        let w1 = g1.integrate(|d| d.weyl_op_sq()).unwrap();
        assert!((w0 - w1).abs() < 1e-8 * w0, "{w0} {w1}");
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p: Profile =
            unit_volume(&SquashedProfile::round(33, 1.0).unwrap().perturb_squash(0.2, &SquashShape::SinSq).unwrap().into())
                .unwrap();
        let flow = Flow::new(&p, true, DerivativeScheme::Spectral).unwrap();
        let dt = flow.stable_dt(0.05).unwrap();
        let run = |m: usize| {
            let mut f = flow.clone();
            for _ in 0..16 * m {
                f.step(dt / m as f64).unwrap();
            }
            f.y
        };
        let (y1, y2, y4) = (run(1), run(2), run(4));
        let dist = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ratio = dist(&y1, &y2) / dist(&y2, &y4);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn cubic_cumulative_integral() {
        let t: Vec<f64> = (0..40).map(|i| (i as f64 * 0.05).powf(1.2)).collect();
        let f: Vec<f64> = t.iter().map(|t| t.cos()).collect();
        let c = cumulative_cubic(&t, &f);
        for (t, c) in t.iter().zip(&c) {
            assert!((c - t.sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn cfl_range_is_enforced() {
        for (cfl, ok) in [(0.0, false), (0.05, true), (0.5, true), (0.51, false)] {
            let cfg = FlowConfig { cfl, ..Default::default() };
            assert_eq!(cfg.validate().is_ok(), ok);
        }
    }

    #[test]
    fn round_input_converges_immediately() {
        let traj = run(&ConformalProfile::round(65).unwrap().into(), &FlowConfig::default(), &FunctionalConfig::default())
            .unwrap();
        assert_eq!(traj.termination, Termination::Converged { t: 0.0 });
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn deep_neck_degenerates() {
        // bulbs of radius ≈ 8.6 joined by a neck of radius 1
        let p = ConformalProfile::from_fn(257, |t| 2.5 * (2.0 * t).sin().powi(2)).unwrap();
        let cfg =
            FlowConfig { t_max: 2.0, sample_interval: 0.01, normalization: Normalization::Unnormalized, ..Default::default() };
        let traj = run(&p.into(), &cfg, &FunctionalConfig::default()).unwrap();
        match &traj.termination {
            Termination::Degenerate { t, .. } => assert!(*t > 0.0 && *t < 2.0),
            other => panic!("{other:?}"),
        }
        assert!(traj.series.samples.iter().all(|s| s.f2.is_finite() && s.k_sup.is_finite()));
    }

    #[test]
    fn rescaled_and_direct_flows_agree() {
        let p: Profile =
            SquashedProfile::round(65, 1.2).unwrap().perturb_squash(0.1, &SquashShape::SinSq).unwrap().into();
        let fcfg = FunctionalConfig::default();
        // ρ² = 1.44 shrinks to zero at t = 0.24; t = 0.2 maps to t̃ ≈ 0.058
        let cfg = FlowConfig { t_max: 0.06, sample_interval: 0.001, ..Default::default() };
        let direct = run(&p, &cfg, &fcfg).unwrap();
        let cfg_after =
            FlowConfig { normalization: Normalization::RescaleAfter, t_max: 0.2, sample_interval: 0.002, ..cfg };
        let after = run(&p, &cfg_after, &fcfg).unwrap();
        assert!(after.times.windows(2).all(|w| w[1] > w[0]));
        let (td, fd) = (direct.series.column_t(), direct.series.column(|s| s.f2));
        let (ta, fa) = (after.series.column_t(), after.series.column(|s| s.f2));
        let mut worst = 0.0f64;
        for (t, f) in ta.iter().zip(&fa) {
            if *t > td[td.len() - 1] {
                break;
            }
            let k = td.partition_point(|x| x < t).clamp(2, td.len() - 2) - 2;
            let v = lagrange_eval(&td[k..k + 4], &fd[k..k + 4], *t);
            worst = worst.max((v - f).abs() / fd[0]);
        }
        assert!(worst < 1e-4, "{worst}");
        assert!(after.series.samples.iter().all(|s| (s.vol - 1.0).abs() < 1e-10));
    }

    fn lagrange_eval(x: &[f64], y: &[f64], s: f64) -> f64 {
        (0..x.len())
            .map(|j| (0..x.len()).filter(|&m| m != j).fold(y[j], |l, m| l * (s - x[m]) / (x[j] - x[m])))
            .sum()
    }
}
