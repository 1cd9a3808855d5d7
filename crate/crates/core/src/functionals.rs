//! Integral invariants, bounds and monitors on profiles and trajectories.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::CurvDecomp;
use crate::ansatz::Geometry;
use crate::error::{Error, Result};
use crate::radial::{DerivativeScheme, Parity, RadialDiff};

/// `16π²`, the value of the Chern–Gauss–Bonnet integral on S⁴.
pub const GB_TARGET: f64 = 16.0 * PI * PI;

/// Smallness thresholds on `∫‖W‖²` and on the quantities the
/// corresponding monotonicity arguments actually consume.
pub mod thresholds {
    use std::f64::consts::PI;

    /// `∫‖W‖²` bound for `F₂` monotonicity.
    pub const F2_WEYL: f64 = 8.0 / 25.0 * PI * PI;
    /// `F₂` bound used by the `F₂` monotonicity argument.
    pub const F2_F2: f64 = 16.0 / 25.0 * PI * PI;
    /// `G₂(0)` bound of the `δ = 0` argument.
    pub const G2_G2: f64 = 16.0 / 145.0 * PI * PI;
    /// Largest `a` allowed by the `δ = 0` argument.
    pub const G2_A: f64 = 1.0 / 192.0;
    /// `∫‖W‖²` bound for `G_{2+δ}` decay.
    pub const GP_WEYL: f64 = PI * PI / 2000.0;
    /// `F₂` bound used by the `G_{2+δ}` argument.
    pub const GP_F2: f64 = PI * PI / 1000.0;
    /// Upper end of the admissible exponent range.
    pub const P_MAX: f64 = 8.0 / 3.0;
    /// Largest `δ` covered by the decay statement.
    pub const DELTA_MAX: f64 = 1.0 / 3.0;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    /// Exponents `p = 2 + δ` of the monitored `G_p`.
    pub p: Vec<f64>,
    /// Coefficient of `|R − R̄|^p`.
    pub a: f64,
    /// Young-inequality parameter; recorded only.
    pub eta: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig { p: vec![2.0], a: 1e-6, eta: 0.01 }
    }
}

impl FunctionalConfig {
    /// `p = 2` with the largest `a` the `δ = 0` argument allows.
    pub fn delta_zero() -> Self {
        FunctionalConfig { p: vec![2.0], a: thresholds::G2_A, eta: 0.01 }
    }

    pub fn with_deltas(deltas: &[f64]) -> Self {
        FunctionalConfig { p: deltas.iter().map(|d| 2.0 + d).collect(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() {
            return Err(Error::Config("at least one exponent p is required".into()));
        }
        if let Some(p) = self.p.iter().find(|p| !(2.0..=thresholds::P_MAX).contains(*p)) {
            return Err(Error::Config(format!("exponent p = {p} outside [2, 8/3]")));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Config(format!("coefficient a = {} must be positive", self.a)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta = {} must be positive", self.eta)));
        }
        Ok(())
    }
}

/// Every monitored quantity at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub vol: f64,
    pub rbar: f64,
    pub f2: f64,
    pub gp: Vec<f64>,
    pub wp_sup: f64,
    pub k_sup: f64,
    pub gauss_bonnet_residual: f64,
    pub signature_residual: f64,
    pub weyl_l2: f64,
    pub e_l2: f64,
    pub r_dev_l2: f64,
    pub y_lower: f64,
}

/// Evaluates all functionals of a profile.
pub fn evaluate(g: &Geometry, cfg: &FunctionalConfig, t: f64) -> Result<Sample> {
    let vol = g.volume();
    let rbar = g.rbar()?;
    let weyl_l2 = g.integrate(|d| d.weyl_op_sq())?;
    let e_l2 = g.integrate(|d| d.e_sq())?;
    let r_dev_l2 = g.integrate(|d| (d.scalar - rbar).powi(2))?;
    let gp = cfg.p.iter().map(|&p| g_p(g, p, cfg.a)).collect::<Result<Vec<_>>>()?;
    let (gb, sig) = topo_residuals(g)?;
    Ok(Sample {
        t,
        vol,
        rbar,
        f2: weyl_l2 + 0.5 * e_l2,
        gp,
        wp_sup: wp_sup(g),
        k_sup: k_sup(g, rbar),
        gauss_bonnet_residual: gb,
        signature_residual: sig,
        weyl_l2,
        e_l2,
        r_dev_l2,
        y_lower: yamabe_lower(weyl_l2).value,
    })
}

/// `F₂ = ∫ ‖W‖² + ½|E|² dv`.
pub fn f2(g: &Geometry) -> Result<f64> {
    g.integrate(|d| d.weyl_op_sq() + 0.5 * d.e_sq())
}

/// `G_p = ∫ ‖W‖^p + ½|E|^p + a|R − R̄|^p dv`.
pub fn g_p(g: &Geometry, p: f64, a: f64) -> Result<f64> {
    let rbar = g.rbar()?;
    let h = p / 2.0;
    g.integrate(|d| d.weyl_op_sq().powf(h) + 0.5 * d.e_sq().powf(h) + a * (d.scalar - rbar).abs().powf(p))
}

/// Pointwise `|E| + ‖W‖ + |R − R̄|`.
pub fn k_field(g: &Geometry, rbar: f64) -> Vec<f64> {
    g.field(|d| d.e_sq().sqrt() + d.weyl_op_sq().sqrt() + (d.scalar - rbar).abs())
}

pub fn k_sup(g: &Geometry, rbar: f64) -> f64 {
    k_field(g, rbar).into_iter().fold(0.0, f64::max)
}

/// Largest weak pinching over the nodes; infinite when `R ≤ 0` somewhere.
pub fn wp_sup(g: &Geometry) -> f64 {
    g.decomps.iter().fold(0.0, |m: f64, d| {
        if d.scalar > 0.0 {
            m.max((d.weyl_sq() + 2.0 * d.e_sq()) / (d.scalar * d.scalar))
        } else {
            f64::INFINITY
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YamabeBound {
    pub value: f64,
    /// `false` when `∫‖W‖² ≥ 16π²` and the bound is vacuous.
    pub in_range: bool,
}

/// Lower bound `[24(16π² − ∫‖W‖²)]^{1/2}` for the Yamabe constant.
pub fn yamabe_lower(weyl_l2: f64) -> YamabeBound {
    let s = GB_TARGET - weyl_l2;
    if s > 0.0 {
        YamabeBound { value: (24.0 * s).sqrt(), in_range: true }
    } else {
        YamabeBound { value: 0.0, in_range: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RComparison {
    /// `(1/24) ∫(R − R̄)² dv`.
    pub r_dev: f64,
    /// `½ ∫|E|² dv`.
    pub e_half: f64,
    /// `e_half − r_dev`.
    pub slack: f64,
    /// `∫(R − R̄)² ≤ 12 ∫|E|²` up to `tol`.
    pub holds: bool,
}

pub fn r_comparison(g: &Geometry, tol: f64) -> Result<RComparison> {
    let rbar = g.rbar()?;
    let r2 = g.integrate(|d| (d.scalar - rbar).powi(2))?;
    let e2 = g.integrate(|d| d.e_sq())?;
    let r_dev = r2 / 24.0;
    let e_half = 0.5 * e2;
    Ok(RComparison { r_dev, e_half, slack: e_half - r_dev, holds: r2 <= 12.0 * e2 + tol })
}

/// A radial test function for the Sobolev inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestField {
    Constant,
    /// `cos(kπx/X)`.
    Cosine(u32),
    /// `exp(−((x/X − c)/w)²)`.
    Bump { center: f64, width: f64 },
}

impl TestField {
    pub fn library() -> Vec<TestField> {
        vec![
            TestField::Constant,
            TestField::Cosine(1),
            TestField::Cosine(2),
            TestField::Bump { center: 0.5, width: 0.15 },
            TestField::Bump { center: 0.3, width: 0.1 },
        ]
    }

    fn eval(&self, s: f64) -> f64 {
        match *self {
            TestField::Constant => 1.0,
            TestField::Cosine(k) => (k as f64 * PI * s).cos(),
            TestField::Bump { center, width } => (-((s - center) / width).powi(2)).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevRow {
    pub field: TestField,
    /// `Y_lower ‖u‖₄²`.
    pub lhs: f64,
    /// `6∫|∇u|² + ∫Ru²`.
    pub rhs: f64,
    pub holds: bool,
    /// `‖u‖₄² / ∫(|∇u|² + u²)`; a lower estimate of the uniform Sobolev
    /// constant.
    pub uniform_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub rows: Vec<SobolevRow>,
    /// Largest `uniform_ratio` over the test fields.
    pub uniform_constant: f64,
}

/// Checks `Y ‖u‖₄² ≤ 6∫|∇u|² + ∫Ru²` with `Y` replaced by its lower bound.
/// `tol` is a relative allowance for quadrature error.
pub fn sobolev_check(g: &Geometry, fields: &[TestField], tol: f64) -> Result<SobolevReport> {
    let n = g.n();
    let x = g.nodes();
    let len = x[n - 1];
    let rd = RadialDiff::new(n, DerivativeScheme::Spectral);
    let y = yamabe_lower(g.integrate(|d| d.weyl_op_sq())?).value;
    let r = g.field(|d| d.scalar);
    let mut rows = Vec::with_capacity(fields.len());
    for f in fields {
        let u: Vec<f64> = x.iter().map(|&s| f.eval(s / len)).collect();
        let (du, _) = rd.derivatives(&u, Parity::Even, g.h());
        let grad: Vec<f64> = du.iter().zip(g.phi()).map(|(d, p)| (d / p).powi(2)).collect();
        let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
        let u4: Vec<f64> = u2.iter().map(|v| v * v).collect();
        let ru2: Vec<f64> = u2.iter().zip(&r).map(|(a, b)| a * b).collect();
        let q = |f: &[f64]| crate::ansatz::integrate(f, &g.quad);
        let norm4 = q(&u4)?.sqrt();
        let (g2, l2, rl2) = (q(&grad)?, q(&u2)?, q(&ru2)?);
        let lhs = y * norm4;
        let rhs = 6.0 * g2 + rl2;
        rows.push(SobolevRow {
            field: f.clone(),
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + tol),
            uniform_ratio: norm4 / (g2 + l2),
        });
    }
    let uniform_constant = rows.iter().map(|r| r.uniform_ratio).fold(0.0, f64::max);
    Ok(SobolevReport { rows, uniform_constant })
}

/// `σ₂(A) − ¼|W|² − λ` at every node, and its sup norm.
pub fn pde_residual(g: &Geometry, lambda: f64) -> (Vec<f64>, f64) {
    let f = g.field(|d| d.sigma2() - 0.25 * d.weyl_sq() - lambda);
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (f, sup)
}

/// `((∫(‖W‖² − ½|E|² + R²/24) − 16π²)/16π², ∫(‖W⁺‖² − ‖W⁻‖²))`.
pub fn topo_residuals(g: &Geometry) -> Result<(f64, f64)> {
    let gb = g.integrate(|d| d.weyl_op_sq() - 0.5 * d.e_sq() + d.scalar * d.scalar / 24.0)?;
    let sig = g.integrate(|d| d.w_plus_sq() - d.w_minus_sq())?;
    Ok(((gb - GB_TARGET) / GB_TARGET, sig))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbarBound {
    /// `R̄²`.
    pub lhs: f64,
    /// `24 Vol⁻¹ (16π² + ½‖E‖₂²)`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn rbar_bound_check(g: &Geometry, tol: f64) -> Result<RbarBound> {
    let rbar = g.rbar()?;
    let e2 = g.integrate(|d| d.e_sq())?;
    let lhs = rbar * rbar;
    let rhs = 24.0 / g.volume() * (GB_TARGET + 0.5 * e2);
    Ok(RbarBound { lhs, rhs, holds: lhs <= rhs * (1.0 + tol) })
}

/// Space integrals of the right-hand sides of the evolution equations of
/// `∫|E|²dv`, `∫(R − R̄)²dv` and `∫‖W‖²dv` under unnormalized Ricci flow,
/// including the `−R dv` change of the volume form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRates {
    pub e_l2: f64,
    pub r_dev_l2: f64,
    /// `∫(−2‖∇W‖² + 36(det W⁺ + det W⁻) − R‖W‖²) dv`, without the `WEE` term.
    pub weyl_l2_base: f64,
    /// `∫ WEE dv`.
    pub wee: f64,
}

pub fn evolution_rates(g: &Geometry) -> Result<EvolutionRates> {
    let grads = g.gradient_norms();
    let rbar = g.rbar()?;
    let vol = g.volume();
    let avg = |f: &dyn Fn(&CurvDecomp) -> f64| -> Result<f64> { Ok(g.integrate(f)? / vol) };
    let avg_e2 = avg(&|d| d.e_sq())?;
    let avg_r2 = avg(&|d| d.scalar * d.scalar)?;
    let field = |f: &dyn Fn(&CurvDecomp, &crate::ansatz::GradNorms) -> f64| -> Vec<f64> {
        g.decomps.iter().zip(&grads).map(|(d, gr)| f(d, gr)).collect()
    };
    let q = |f: Vec<f64>| crate::ansatz::integrate(&f, &g.quad);
    let e_l2 = q(field(&|d, gr| {
        let r = d.scalar;
        -2.0 * gr.e + 4.0 * d.wee() - 4.0 * d.tr_e3() + 2.0 / 3.0 * r * d.e_sq() - r * d.e_sq()
    }))?;
    let r_dev_l2 = q(field(&|d, gr| {
        let r = d.scalar;
        let dev = r - rbar;
        -2.0 * gr.scalar + dev * (4.0 * d.e_sq() - 4.0 * avg_e2 + r * r + avg_r2 - 2.0 * rbar * rbar)
            - r * dev * dev
    }))?;
    let weyl_l2_base = q(field(&|d, gr| {
        -2.0 * 0.25 * gr.weyl + 36.0 * (d.det_plus() + d.det_minus()) - d.scalar * d.weyl_op_sq()
    }))?;
    let wee = q(field(&|d, _| d.wee()))?;
    Ok(EvolutionRates { e_l2, r_dev_l2, weyl_l2_base, wee })
}

/// Which smallness hypotheses an initial sample satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// `F₂` monotone: `∫‖W‖² < 8π²/25` and `F₂ < 16π²/25`.
    pub f2_monotone: bool,
    /// `G₂` monotone: `G₂ < 16π²/145` with `a ≤ 1/192`.
    pub g2_monotone: bool,
    /// `G_{2+δ}` decay, `δ ∈ [0, 1/3]`: `∫‖W‖² < π²/2000` and `F₂ < π²/1000`.
    pub gp_decay: bool,
}

impl Hypotheses {
    pub fn check(s0: &Sample, cfg: &FunctionalConfig) -> Hypotheses {
        use thresholds::*;
        let g2 = cfg.p.iter().position(|&p| p == 2.0).map(|i| s0.gp[i]);
        Hypotheses {
            f2_monotone: s0.weyl_l2 < F2_WEYL && s0.f2 < F2_F2,
            g2_monotone: cfg.a <= G2_A && g2.is_some_and(|g| g < G2_G2),
            gp_decay: s0.weyl_l2 < GP_WEYL && s0.f2 < GP_F2,
        }
    }

    /// Whether the hypotheses cover `G_p` with the configured `a`.
    pub fn covers_gp(&self, p: f64, a: f64) -> bool {
        let in_range = (2.0..=2.0 + thresholds::DELTA_MAX + 1e-12).contains(&p);
        (self.gp_decay && in_range && a <= 1e-6) || (p == 2.0 && self.g2_monotone)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Monotonicity {
    Monotone,
    Violation { first_time: f64, worst_relative: f64 },
    /// Violations (if any) outside the hypotheses are recorded but do not
    /// count as failures.
    NotInHypothesis { violations: usize },
}

impl Monotonicity {
    pub fn is_failure(&self) -> bool {
        matches!(self, Monotonicity::Violation { .. })
    }
}

/// Minimum series length for a monotonicity verdict.
pub const MIN_MONITOR_SAMPLES: usize = 50;

/// Checks `v[i+1] ≤ v[i](1 + slack)`.
pub fn monotonicity_monitor(t: &[f64], v: &[f64], in_hypothesis: bool, slack: f64) -> Result<Monotonicity> {
    if v.len() < MIN_MONITOR_SAMPLES {
        return Err(Error::TooFewSamples { got: v.len(), need: MIN_MONITOR_SAMPLES });
    }
    let mut first = None;
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..v.len() - 1 {
        let excess = v[i + 1] - v[i];
        if excess > slack * v[i].abs() {
            count += 1;
            first.get_or_insert(t[i + 1]);
            worst = worst.max(excess / v[i].abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(match (in_hypothesis, first) {
        (_, None) if in_hypothesis => Monotonicity::Monotone,
        (false, _) => Monotonicity::NotInHypothesis { violations: count },
        (true, Some(first_time)) => Monotonicity::Violation { first_time, worst_relative: worst },
        _ => unreachable!(),
    })
}

/// Monotonicity verdicts for every series of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub hypotheses: Hypotheses,
    pub f2: Monotonicity,
    pub gp: Vec<(f64, Monotonicity)>,
}

impl MonitorReport {
    pub fn any_failure(&self) -> bool {
        self.f2.is_failure() || self.gp.iter().any(|(_, m)| m.is_failure())
    }
}

pub fn monitor_series(series: &FunctionalSeries, cfg: &FunctionalConfig, slack: f64) -> Result<MonitorReport> {
    let s0 = series.samples.first().ok_or(Error::TooFewSamples { got: 0, need: MIN_MONITOR_SAMPLES })?;
    let hyp = Hypotheses::check(s0, cfg);
    let t = series.column_t();
    let f2 = monotonicity_monitor(&t, &series.column(|s| s.f2), hyp.f2_monotone, slack)?;
    let gp = series
        .p
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            monotonicity_monitor(&t, &series.column(|s| s.gp[k]), hyp.covers_gp(p, cfg.a), slack).map(|m| (p, m))
        })
        .collect::<Result<_>>()?;
    Ok(MonitorReport { hypotheses: hyp, f2, gp })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `−d log v / dt` on the tail half.
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub quality: f64,
    /// Multiplier `e^{intercept}`.
    pub amplitude: f64,
    /// The tail contains non-positive values; no fit was made.
    pub converged: bool,
}

/// Least-squares fit of `log v` against `t` on the second half of the
/// series.
pub fn decay_fit(t: &[f64], v: &[f64]) -> Result<DecayFit> {
    if t.len() != v.len() || t.len() < 4 {
        return Err(Error::TooFewSamples { got: t.len().min(v.len()), need: 4 });
    }
    let start = t.len() / 2;
    let (tt, vv) = (&t[start..], &v[start..]);
    if vv.iter().any(|&x| x <= 0.0) {
        return Ok(DecayFit { rate: f64::INFINITY, quality: 1.0, amplitude: 0.0, converged: true });
    }
    let y: Vec<f64> = vv.iter().map(|x| x.ln()).collect();
    let (slope, intercept, r2) = linear_fit(tt, &y);
    Ok(DecayFit { rate: -slope, quality: r2, amplitude: intercept.exp(), converged: false })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    pub rate: f64,
    /// `max K e^{C't}/(1 + t⁻¹)` over `[t_min, T]`.
    pub max_full: f64,
    /// The same over `[t_min, (t_min + T)/2]`.
    pub max_half: f64,
    pub bounded: bool,
}

/// Checks that `v(t) e^{C't} / (1 + t⁻¹)` stays bounded on `[t_min, T]`,
/// with `C'` from [`decay_fit`]. Bounded means the maximum over the whole
/// window is at most twice the maximum over its first half.
pub fn decay_shape_check(t: &[f64], v: &[f64], t_min: f64) -> Result<ShapeCheck> {
    let fit = decay_fit(t, v)?;
    let rate = if fit.converged { 0.0 } else { fit.rate };
    let t_end = t.last().copied().unwrap_or(0.0);
    let t_mid = 0.5 * (t_min + t_end);
    let mut max_full = 0.0f64;
    let mut max_half = 0.0f64;
    for (&ti, &vi) in t.iter().zip(v) {
        if ti < t_min || ti <= 0.0 {
            continue;
        }
        let r = vi * (rate * ti).exp() / (1.0 + 1.0 / ti);
        max_full = max_full.max(r);
        if ti <= t_mid {
            max_half = max_half.max(r);
        }
    }
    Ok(ShapeCheck { rate, max_full, max_half, bounded: max_full.is_finite() && max_full <= 2.0 * max_half })
}

/// Samples of a trajectory with the exponents they were computed for.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub p: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl FunctionalSeries {
    pub fn new(p: Vec<f64>) -> Self {
        FunctionalSeries { p, samples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn column_t(&self) -> Vec<f64> {
        self.column(|s| s.t)
    }

    /// Column names in CSV order.
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = ["t", "Vol", "Rbar", "F2"].iter().map(|s| s.to_string()).collect();
        c.extend(self.p.iter().map(|p| format!("G_{p}")));
        c.extend(
            ["WP_sup", "K_sup", "gauss_bonnet_residual", "signature_residual", "W2", "E2", "Rdev2", "Y_lower"]
                .iter()
                .map(|s| s.to_string()),
        );
        c
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        for s in &self.samples {
            let mut row = vec![s.t, s.vol, s.rbar, s.f2];
            row.extend(&s.gp);
            row.extend([
                s.wp_sup,
                s.k_sup,
                s.gauss_bonnet_residual,
                s.signature_residual,
                s.weyl_l2,
                s.e_l2,
                s.r_dev_l2,
                s.y_lower,
            ]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Reads back the output of [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<FunctionalSeries> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let names: Vec<&str> = header.split(',').collect();
        let p: Vec<f64> = names
            .iter()
            .filter_map(|n| n.strip_prefix("G_"))
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line: 1, msg: format!("bad column `G_{s}`") }))
            .collect::<Result<_>>()?;
        let series = FunctionalSeries::new(p);
        if names != series.columns().iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Parse { line: 1, msg: "unexpected column layout".into() });
        }
        let k = series.p.len();
        let mut samples = Vec::new();
        for (i, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number `{c}`") }))
                .collect::<Result<_>>()?;
            if v.len() != names.len() {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} cells", names.len()) });
            }
            let r = &v[4 + k..];
            samples.push(Sample {
                t: v[0],
                vol: v[1],
                rbar: v[2],
                f2: v[3],
                gp: v[4..4 + k].to_vec(),
                wp_sup: r[0],
                k_sup: r[1],
                gauss_bonnet_residual: r[2],
                signature_residual: r[3],
                weyl_l2: r[4],
                e_l2: r[5],
                r_dev_l2: r[6],
                y_lower: r[7],
            });
        }
        Ok(FunctionalSeries { samples, ..series })
    }

    /// JSON schema describing the CSV columns.
    pub fn json_schema(&self) -> serde_json::Value {
        let describe = |name: &str| -> &'static str {
            match name {
                "t" => "flow time",
                "Vol" => "volume",
                "Rbar" => "average scalar curvature",
                "F2" => "integral of |W|_op^2 + |E|^2/2",
                "WP_sup" => "maximum weak pinching (|W|^2 + 2|E|^2)/R^2",
                "K_sup" => "maximum of |E| + |W|_op + |R - Rbar|",
                "gauss_bonnet_residual" => "relative deviation of the Gauss-Bonnet integral from 16 pi^2",
                "signature_residual" => "integral of |W+|^2 - |W-|^2",
                "W2" => "integral of |W|_op^2",
                "E2" => "integral of |E|^2",
                "Rdev2" => "integral of (R - Rbar)^2",
                "Y_lower" => "lower bound for the Yamabe constant",
                _ => "integral of |W|_op^p + |E|^p/2 + a|R - Rbar|^p",
            }
        };
        let cols: Vec<serde_json::Value> = self
            .columns()
            .iter()
            .enumerate()
            .map(|(i, c)| serde_json::json!({"index": i, "name": c, "type": "number", "description": describe(c)}))
            .collect();
        serde_json::json!({
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": "FunctionalSeries",
            "format": "csv",
            "header": true,
            "number_format": "decimal scientific, 17 significant digits",
            "columns": cols,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{ConformalProfile, SquashShape, SquashedProfile};
    use approx::assert_relative_eq;

    #[test]
    fn round_sphere_functionals() {
        let g = SquashedProfile::round(129, 1.0).unwrap().as_warped().geometry().unwrap();
        let s = evaluate(&g, &FunctionalConfig::with_deltas(&[0.0, 1.0 / 6.0]), 0.0).unwrap();
        assert!(s.f2.abs() < 1e-20 && s.gp.iter().all(|g| g.abs() < 1e-12));
        assert!(s.gauss_bonnet_residual.abs() < 1e-7, "{}", s.gauss_bonnet_residual);
        assert_relative_eq!(s.y_lower, 384f64.sqrt() * PI, max_relative = 1e-14);
        assert_relative_eq!(s.y_lower.powi(2) / 24.0 + s.weyl_l2, GB_TARGET, max_relative = 1e-12);
        let (res, sup) = pde_residual(&g, 6.0);
        assert!(sup < 1e-8, "{sup}");
        assert!(pde_residual(&g, 0.0).0.iter().all(|v| (v - 6.0).abs() < 1e-8) && res.len() == 129);
        let b = rbar_bound_check(&g, 1e-8).unwrap();
        assert_relative_eq!(b.lhs, b.rhs, max_relative = 1e-7);
    }

    #[test]
    fn yamabe_bound_boundary() {
        assert_eq!(yamabe_lower(GB_TARGET), YamabeBound { value: 0.0, in_range: false });
    }

    #[test]
    fn gp_at_two_without_a_is_f2() {
        let p = SquashedProfile::round(65, 1.0).unwrap().perturb_squash(0.1, &SquashShape::SinSq).unwrap();
        let g = p.as_warped().geometry().unwrap();
        assert_eq!(g_p(&g, 2.0, 0.0).unwrap(), f2(&g).unwrap());
    }

    #[test]
    fn conformal_profile_f2_is_half_e() {
        let g = ConformalProfile::from_fn(65, |t| 0.1 * t.cos()).unwrap().as_warped().geometry().unwrap();
        assert_relative_eq!(f2(&g).unwrap(), 0.5 * g.integrate(|d| d.e_sq()).unwrap(), max_relative = 1e-12);
        assert!(r_comparison(&g, 1e-10).unwrap().holds);
    }

    #[test]
    fn synthetic_decay() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = decay_fit(&t, &v).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-3 && fit.quality > 0.999);
        let t: Vec<f64> = (1..400).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = t.iter().map(|t| (-t).exp() / t).collect();
        let shape = decay_shape_check(&t, &v, 0.1).unwrap();
        assert!(shape.bounded && (shape.rate - 1.0).abs() < 0.1, "{shape:?}");
    }

    #[test]
    fn monitor_rejects_short_series() {
        assert!(matches!(monotonicity_monitor(&[0.0; 3], &[1.0; 3], true, 1e-6), Err(Error::TooFewSamples { .. })));
        let t: Vec<f64> = (0..60).map(f64::from).collect();
        let mut v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert_eq!(monotonicity_monitor(&t, &v, true, 1e-6).unwrap(), Monotonicity::Monotone);
        v[30] = v[29] * 1.01;
        assert!(monotonicity_monitor(&t, &v, true, 1e-6).unwrap().is_failure());
        assert!(!monotonicity_monitor(&t, &v, false, 1e-6).unwrap().is_failure());
    }

    #[test]
    fn csv_round_trip() {
        let g = SquashedProfile::round(65, 1.0).unwrap().perturb_squash(0.1, &SquashShape::Sin4).unwrap();
        let g = g.as_warped().geometry().unwrap();
        let cfg = FunctionalConfig::with_deltas(&[0.0, 1.0 / 3.0]);
        let mut s = FunctionalSeries::new(cfg.p.clone());
        s.samples.push(evaluate(&g, &cfg, 0.0).unwrap());
        s.samples.push(evaluate(&g, &cfg, 0.5).unwrap());
        let back = FunctionalSeries::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.json_schema()["columns"].as_array().unwrap().len(), s.columns().len());
    }
}
