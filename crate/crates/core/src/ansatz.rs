//! Symmetric metrics on S⁴ as radial profiles.
//!
//! Three profile types are provided.
//!
//! * [`SquashedProfile`]: `dr² + a(r)²σ₁² + b(r)²(σ₂² + σ₃²)`, `r ∈ [0, L]`.
//! * [`ConformalProfile`]: `e^{2w(θ)} g_c` with `g_c` the unit round metric
//!   in polar form `dθ² + sin²θ (σ₁² + σ₂² + σ₃²)`.
//! * [`WarpedProfile`]: the common form
//!   `φ(x)²dx² + a(x)²σ₁² + b(x)²(σ₂² + σ₃²)`, `x ∈ [0, X]`, which the other
//!   two convert into and which also results from a conformal change of a
//!   squashed profile.
//!
//! The left-invariant coframe satisfies `dσ₁ = 2σ₂∧σ₃` (cyclic), so
//! `σ₁² + σ₂² + σ₃²` is the unit round S³ and the orbit volume is `2π²`.
//! Curvature comes from [`crate::frame`] at interior nodes. At the two
//! poles the (even) frame components are extrapolated from the interior;
//! pole nodes carry zero quadrature weight.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{CurvDecomp, CurvTensor, Sym2};
use crate::error::{Error, Result};
use crate::frame::{Connection, FrameJet};
use crate::radial::{
    even_pole_value, interior_d1, quadrature_weights, DerivativeScheme, Parity, QuadratureKind, RadialDiff,
};

/// Volume of the unit round S³.
pub const ORBIT_VOLUME: f64 = 2.0 * PI * PI;

/// Smallest admissible grid.
pub const MIN_NODES: usize = 33;

/// Tolerance of the pole smoothness conditions.
pub const POLE_TOL: f64 = 1e-8;

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_NODES || n.is_multiple_of(2) {
        return Err(Error::InvalidProfile(format!("node count {n} must be odd and at least {MIN_NODES}")));
    }
    Ok(())
}

fn check_finite(name: &str, f: &[f64]) -> Result<()> {
    match f.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::DegenerateProfile { node: i, what: format!("{name} is not finite") }),
        None => Ok(()),
    }
}

/// One-sided 8th-order first derivative at the left end of `f`.
fn one_sided_slope(f: &[f64], h: f64) -> f64 {
    const C: [f64; 9] = [-761.0 / 280.0, 8.0, -14.0, 56.0 / 3.0, -35.0 / 2.0, 56.0 / 5.0, -14.0 / 3.0, 8.0 / 7.0, -0.125];
    C.iter().zip(f).map(|(c, v)| c * v).sum::<f64>() / h
}

fn end_slopes(f: &[f64], h: f64) -> (f64, f64) {
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    (one_sided_slope(f, h), -one_sided_slope(&rev, h))
}

/// Shape of a squashing perturbation as a function of `u = πr/L ∈ [0, π]`.
/// Every shape vanishes to second order at both poles and is even about
/// them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquashShape {
    SinSq,
    Sin4,
    /// `Σₖ cₖ sin²u cos(ku)`.
    Modes(Vec<f64>),
}

impl SquashShape {
    pub fn eval(&self, u: f64) -> f64 {
        let s2 = u.sin().powi(2);
        match self {
            SquashShape::SinSq => s2,
            SquashShape::Sin4 => s2 * s2,
            SquashShape::Modes(c) => c.iter().enumerate().map(|(k, ck)| ck * s2 * (k as f64 * u).cos()).sum(),
        }
    }
}

/// `φ(x)²dx² + a(x)²σ₁² + b(x)²(σ₂² + σ₃²)` on a uniform grid of `[0, X]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedProfile {
    len: f64,
    phi: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl WarpedProfile {
    /// Validates and wraps the node values. `a`, `b` must vanish at the
    /// poles with unit slope with respect to arclength, `φ` must be positive
    /// with zero slope there.
    pub fn new(len: f64, phi: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = phi.len();
        check_grid(n)?;
        if a.len() != n || b.len() != n {
            return Err(Error::InvalidProfile("field lengths differ".into()));
        }
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidProfile(format!("domain length {len} must be positive")));
        }
        check_finite("phi", &phi)?;
        check_finite("a", &a)?;
        check_finite("b", &b)?;
        if let Some(i) = phi.iter().position(|&v| v <= 0.0) {
            return Err(Error::DegenerateProfile { node: i, what: "phi <= 0".into() });
        }
        for (name, f) in [("a", &a), ("b", &b)] {
            if let Some(i) = (1..n - 1).find(|&i| f[i] <= 0.0) {
                return Err(Error::DegenerateProfile { node: i, what: format!("{name} <= 0") });
            }
        }
        let p = WarpedProfile { len, phi, a, b };
        p.check_poles()?;
        Ok(p)
    }

    fn check_poles(&self) -> Result<()> {
        let n = self.n();
        let h = self.h();
        let scale = self.a.iter().chain(&self.b).fold(0.0f64, |m, v| m.max(v.abs())) * h;
        for (name, f) in [("a", &self.a), ("b", &self.b)] {
            for &i in &[0, n - 1] {
                if f[i].abs() > POLE_TOL * scale.max(1.0) {
                    return Err(Error::DegenerateProfile { node: i, what: format!("{name} does not vanish at pole") });
                }
            }
        }
        let rd = RadialDiff::new(n, DerivativeScheme::Spectral);
        for (name, f) in [("a", &self.a), ("b", &self.b)] {
            let (d1, _) = rd.derivatives(f, Parity::Odd, h);
            for (i, sign) in [(0, 1.0), (n - 1, -1.0)] {
                let slope = sign * d1[i] / self.phi[i];
                if (slope - 1.0).abs() > POLE_TOL {
                    return Err(Error::DegenerateProfile {
                        node: i,
                        what: format!("{name} has pole slope {slope:.12} instead of 1"),
                    });
                }
            }
        }
        let (s0, s1) = end_slopes(&self.phi, h);
        let tol = POLE_TOL * self.phi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if s0.abs() > tol || s1.abs() > tol {
            return Err(Error::DegenerateProfile { node: 0, what: "phi has nonzero slope at a pole".into() });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn h(&self) -> f64 {
        self.len / (self.n() - 1) as f64
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n()).map(|i| i as f64 * h).collect()
    }

    /// Radial jets `(Aₖ, e₀Aₖ, e₀²Aₖ)` at every node. Entries at the poles
    /// have `Aₖ = 0` and must not be fed to the frame engine.
    pub fn jets(&self, rd: &RadialDiff) -> Vec<FrameJet> {
        if self.is_conformal_gauge(1e-13) {
            return self.gauge_jets(rd);
        }
        let h = self.h();
        let (p1, _) = rd.derivatives(&self.phi, Parity::Even, h);
        let (a1, a2) = rd.derivatives(&self.a, Parity::Odd, h);
        let (b1, b2) = rd.derivatives(&self.b, Parity::Odd, h);
        (0..self.n())
            .map(|i| {
                let f = self.phi[i];
                let d = |x1: f64| x1 / f;
                let dd = |x1: f64, x2: f64| x2 / (f * f) - p1[i] * x1 / (f * f * f);
                FrameJet {
                    a: [self.a[i], self.b[i], self.b[i]],
                    d: [d(a1[i]), d(b1[i]), d(b1[i])],
                    dd: [dd(a1[i], a2[i]), dd(b1[i], b2[i]), dd(b1[i], b2[i])],
                }
            })
            .collect()
    }

    /// Jets of `e^{2w}(dθ² + sin²θ(e^{2P}σ₁² + σ₂² + σ₃²))` from the
    /// derivatives of `w` and `P`, which avoids differentiating `sin θ`
    /// numerically.
    fn gauge_jets(&self, rd: &RadialDiff) -> Vec<FrameJet> {
        let n = self.n();
        let h = self.h();
        let w: Vec<f64> = self.phi.iter().map(|v| v.ln()).collect();
        let pv: Vec<f64> =
            (0..n).map(|i| if i == 0 || i == n - 1 { 0.0 } else { (self.a[i] / self.b[i]).ln() }).collect();
        let ((w1, w2), (p1, p2)) = rd.derivatives_pair(&w, &pv, Parity::Even, h);
        (0..n)
            .map(|i| {
                let (s, c) = (i as f64 * h).sin_cos();
                let e = self.phi[i];
                let ep = pv[i].exp();
                let d = w1[i] * s + c;
                let d_theta = w2[i] * s + w1[i] * c - s;
                let q = p1[i] * s + d;
                let a_dd = ep * (p1[i] * q + p2[i] * s + p1[i] * c + d_theta) / e;
                FrameJet {
                    a: [self.a[i], self.b[i], self.b[i]],
                    d: [ep * q, d, d],
                    dd: [a_dd, d_theta / e, d_theta / e],
                }
            })
            .collect()
    }

    /// Riemannian volume density `2π² φ a b²` at every node.
    pub fn volume_density(&self) -> Vec<f64> {
        (0..self.n()).map(|i| ORBIT_VOLUME * self.phi[i] * self.a[i] * self.b[i] * self.b[i]).collect()
    }

    pub fn quadrature(&self, kind: QuadratureKind) -> QuadratureRule {
        let w = quadrature_weights(self.n(), self.h(), kind);
        let mut weights: Vec<f64> = w.iter().zip(self.volume_density()).map(|(w, v)| w * v).collect();
        let n = weights.len();
        weights[0] = 0.0;
        weights[n - 1] = 0.0;
        QuadratureRule { kind, weights }
    }

    pub fn volume(&self) -> f64 {
        self.quadrature(QuadratureKind::Simpson).weights.iter().sum()
    }

    /// Curvature data with spectral radial derivatives and Simpson weights.
    pub fn geometry(&self) -> Result<Geometry> {
        self.geometry_with(&RadialDiff::new(self.n(), DerivativeScheme::Spectral), QuadratureKind::Simpson)
    }

    pub fn geometry_with(&self, rd: &RadialDiff, kind: QuadratureKind) -> Result<Geometry> {
        let n = self.n();
        let jets = self.jets(rd);
        let mut decomps = vec![CurvDecomp::constant_curvature(0.0); n];
        for i in 1..n - 1 {
            let riem = Connection::new(&jets[i]).riemann();
            if let Some(bad) = riem.components().iter().position(|v| !v.is_finite()) {
                let _ = bad;
                return Err(Error::NonFiniteField(i));
            }
            decomps[i] = crate::algebra::decompose_frame(&riem);
        }
        decomps[0] = extrapolate_decomp(&decomps[1], &decomps[2], &decomps[3]);
        decomps[n - 1] = extrapolate_decomp(&decomps[n - 2], &decomps[n - 3], &decomps[n - 4]);
        Ok(Geometry { h: self.h(), phi: self.phi.clone(), jets, decomps, quad: self.quadrature(kind) })
    }

    /// Band-limited refinement onto a grid `factor` times finer.
    /// Metric `λ²g` (the coordinate range is kept).
    pub fn scaled(&self, lambda: f64) -> Result<WarpedProfile> {
        let s = |f: &[f64]| f.iter().map(|v| lambda * v).collect();
        WarpedProfile::new(self.len, s(&self.phi), s(&self.a), s(&self.b))
    }

    /// Whether the profile has the form
    /// `e^{2w}(dθ² + sin²θ(e^{2P}σ₁² + σ₂² + σ₃²))` on `[0, π]`.
    pub fn is_conformal_gauge(&self, tol: f64) -> bool {
        let h = self.h();
        (self.len - PI).abs() < 1e-12
            && (0..self.n()).all(|i| (self.b[i] - self.phi[i] * (i as f64 * h).sin()).abs() <= tol * self.phi[i])
    }

    pub fn refine(&self, factor: usize) -> Result<WarpedProfile> {
        check_factor(factor)?;
        let rd = RadialDiff::new(self.n(), DerivativeScheme::Spectral);
        WarpedProfile::new(
            self.len,
            rd.interpolate(&self.phi, Parity::Even, factor),
            rd.interpolate(&self.a, Parity::Odd, factor),
            rd.interpolate(&self.b, Parity::Odd, factor),
        )
    }
}

fn check_factor(factor: usize) -> Result<()> {
    if factor != 2 && factor != 4 {
        return Err(Error::InvalidProfile(format!("refinement factor {factor} must be 2 or 4")));
    }
    Ok(())
}

fn extrapolate_decomp(d1: &CurvDecomp, d2: &CurvDecomp, d3: &CurvDecomp) -> CurvDecomp {
    CurvDecomp::combine(&[(1.5, d1), (-0.6, d2), (0.1, d3)])
}

/// Trigonometric interpolant of a function sampled on `[0, L]` that is odd
/// about both ends.
struct SineSeries {
    coef: Vec<f64>,
}

impl SineSeries {
    fn new(f: &[f64]) -> Self {
        let m = f.len() - 1;
        let coef = (1..m)
            .map(|k| {
                (1..m).map(|j| f[j] * (PI * (k * j) as f64 / m as f64).sin()).sum::<f64>() * 2.0 / m as f64
            })
            .collect();
        SineSeries { coef }
    }

    fn eval(&self, x: f64, len: f64) -> f64 {
        let u = PI * x / len;
        self.coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * u).sin()).sum()
    }

    /// `∫₀ˣ f`.
    fn antiderivative(&self, x: f64, len: f64) -> f64 {
        let u = PI * x / len;
        self.coef
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let q = (k + 1) as f64;
                c * len / (PI * q) * (1.0 - (q * u).cos())
            })
            .sum()
    }
}

/// `dr² + a(r)²σ₁² + b(r)²(σ₂² + σ₃²)` with `r` arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct SquashedProfile {
    len: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    warped: WarpedProfile,
}

impl SquashedProfile {
    pub fn new(len: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let warped = WarpedProfile::new(len, vec![1.0; a.len()], a.clone(), b.clone())?;
        Ok(SquashedProfile { len, a, b, warped })
    }

    pub fn from_fn(n: usize, len: f64, fa: impl Fn(f64) -> f64, fb: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        let h = len / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut a: Vec<f64> = r.iter().map(|&x| fa(x)).collect();
        let mut b: Vec<f64> = r.iter().map(|&x| fb(x)).collect();
        for f in [&mut a, &mut b] {
            // sin(π) is not exactly zero in floating point
            if f[n - 1].abs() < 1e-12 * len {
                f[n - 1] = 0.0;
            }
        }
        Self::new(len, a, b)
    }

    /// Round sphere of radius `rho`.
    pub fn round(n: usize, rho: f64) -> Result<Self> {
        let f = move |r: f64| rho * (r / rho).sin();
        Self::from_fn(n, PI * rho, f, f)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn h(&self) -> f64 {
        self.len / (self.n() - 1) as f64
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.warped.nodes()
    }

    pub fn as_warped(&self) -> &WarpedProfile {
        &self.warped
    }

    pub fn volume(&self) -> f64 {
        self.warped.volume()
    }

    /// Metric `λ²g`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            lambda * self.len,
            self.a.iter().map(|v| lambda * v).collect(),
            self.b.iter().map(|v| lambda * v).collect(),
        )
    }

    pub fn refine(&self, factor: usize) -> Result<Self> {
        let w = self.warped.refine(factor)?;
        Self::new(self.len, w.a, w.b)
    }

    /// `a ← a(1 + amplitude·shape(πr/L))`.
    pub fn perturb_squash(&self, amplitude: f64, shape: &SquashShape) -> Result<Self> {
        let h = self.h();
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, v)| v * (1.0 + amplitude * shape.eval(PI * i as f64 * h / self.len)))
            .collect();
        Self::new(self.len, a, self.b.clone())
    }

    /// The same metric written as `e^{2w}(dθ² + sin²θ(e^{2P}σ₁² + σ₂² + σ₃²))`
    /// on `θ ∈ [0, π]` with the same node count.
    ///
    /// The change of variable solves `dθ/dr = sin θ / b`, which fixes `θ(r)`
    /// up to a dilation along the axis. That freedom is spent on making `w`
    /// take the same value at both poles.
    pub fn conformal_gauge(&self) -> Result<WarpedProfile> {
        let n = self.n();
        let len = self.len;
        let h = self.h();
        let k = PI / len;
        // r = 1/b − k/sin(kr) is smooth and odd at both poles
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            r[i] = 1.0 / self.b[i] - k / (k * i as f64 * h).sin();
        }
        let rs = SineSeries::new(&r);
        let g_end = rs.antiderivative(len, len);
        let bs = SineSeries::new(&self.b);
        let as_ = SineSeries::new(&self.a);
        let theta_of = |x: f64| -> f64 {
            let f = (0.5 * k * x).tan().ln() + rs.antiderivative(x, len) - 0.5 * g_end;
            2.0 * f.exp().atan()
        };
        let w_pole = (len / PI).ln() + 0.5 * g_end;
        let mut phi = vec![w_pole.exp(); n];
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let dt = PI / (n - 1) as f64;
        for i in 1..n - 1 {
            let target = i as f64 * dt;
            // θ(r) is increasing; bisect to a bracket, then polish with Newton
            let (mut lo, mut hi) = (0.0, len);
            let mut x = target / k;
            for _ in 0..200 {
                let f = theta_of(x) - target;
                if f.abs() < 1e-15 {
                    break;
                }
                if f > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                let bx = bs.eval(x, len);
                let step = f * bx / theta_of(x).sin();
                let next = x - step;
                x = if next > lo && next < hi && bx > 0.0 { next } else { 0.5 * (lo + hi) };
                if hi - lo < 1e-15 * len {
                    break;
                }
            }
            let bx = bs.eval(x, len);
            let s = target.sin();
            phi[i] = bx / s;
            a[i] = as_.eval(x, len);
            b[i] = phi[i] * s;
        }
        WarpedProfile::new(PI, phi, a, b)
    }

    /// The metric `e^{2w(r)} g` for node values `w`, which must be even at
    /// both poles.
    pub fn conformal_change(&self, w: &[f64]) -> Result<WarpedProfile> {
        if w.len() != self.n() {
            return Err(Error::InvalidProfile("conformal factor has wrong length".into()));
        }
        check_finite("w", w)?;
        let e: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        WarpedProfile::new(
            self.len,
            e.clone(),
            self.a.iter().zip(&e).map(|(a, e)| a * e).collect(),
            self.b.iter().zip(&e).map(|(b, e)| b * e).collect(),
        )
    }
}

/// `e^{2w(θ)} g_c`, `θ ∈ [0, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalProfile {
    w: Vec<f64>,
    warped: WarpedProfile,
}

impl ConformalProfile {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let n = w.len();
        check_grid(n)?;
        check_finite("w", &w)?;
        let h = PI / (n - 1) as f64;
        let (s0, s1) = end_slopes(&w, h);
        let tol = POLE_TOL * w.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if s0.abs() > tol || s1.abs() > tol {
            return Err(Error::DegenerateProfile { node: 0, what: "w has nonzero slope at a pole".into() });
        }
        let e: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let s: Vec<f64> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.0 } else { e[i] * (i as f64 * h).sin() })
            .collect();
        let warped = WarpedProfile::new(PI, e, s.clone(), s)?;
        Ok(ConformalProfile { w, warped })
    }

    pub fn from_fn(n: usize, w: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        let h = PI / (n - 1) as f64;
        Self::new((0..n).map(|i| w(i as f64 * h)).collect())
    }

    pub fn round(n: usize) -> Result<Self> {
        Self::from_fn(n, |_| 0.0)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn h(&self) -> f64 {
        PI / (self.n() - 1) as f64
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.warped.nodes()
    }

    pub fn as_warped(&self) -> &WarpedProfile {
        &self.warped
    }

    pub fn volume(&self) -> f64 {
        self.warped.volume()
    }

    pub fn refine(&self, factor: usize) -> Result<Self> {
        check_factor(factor)?;
        let rd = RadialDiff::new(self.n(), DerivativeScheme::Spectral);
        Self::new(rd.interpolate(&self.w, Parity::Even, factor))
    }
}

/// Any admissible profile.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Squashed(SquashedProfile),
    Conformal(ConformalProfile),
    Warped(WarpedProfile),
}

impl From<SquashedProfile> for Profile {
    fn from(p: SquashedProfile) -> Self {
        Profile::Squashed(p)
    }
}

impl From<ConformalProfile> for Profile {
    fn from(p: ConformalProfile) -> Self {
        Profile::Conformal(p)
    }
}

impl From<WarpedProfile> for Profile {
    fn from(p: WarpedProfile) -> Self {
        Profile::Warped(p)
    }
}

impl Profile {
    pub fn warped(&self) -> &WarpedProfile {
        match self {
            Profile::Squashed(p) => p.as_warped(),
            Profile::Conformal(p) => p.as_warped(),
            Profile::Warped(p) => p,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Profile::Squashed(_) => "squashed",
            Profile::Conformal(_) => "conformal",
            Profile::Warped(_) => "warped",
        }
    }

    pub fn n(&self) -> usize {
        self.warped().n()
    }

    pub fn volume(&self) -> f64 {
        self.warped().volume()
    }

    pub fn geometry(&self) -> Result<Geometry> {
        self.warped().geometry()
    }

    pub fn refine(&self, factor: usize) -> Result<Profile> {
        Ok(match self {
            Profile::Squashed(p) => Profile::Squashed(p.refine(factor)?),
            Profile::Conformal(p) => Profile::Conformal(p.refine(factor)?),
            Profile::Warped(p) => Profile::Warped(p.refine(factor)?),
        })
    }

    /// Columnar text form: a three-line header (`ansatz <tag>`, `N <n>`,
    /// `L <length>`) followed by one row per node. Values are written with
    /// 17 significant digits, so reading the text back is bit-exact.
    pub fn to_text(&self) -> String {
        let w = self.warped();
        let mut s = String::new();
        let _ = writeln!(s, "ansatz {}", self.tag());
        let _ = writeln!(s, "N {}", w.n());
        let _ = writeln!(s, "L {:.16e}", w.len());
        let x = w.nodes();
        for i in 0..w.n() {
            let _ = match self {
                Profile::Squashed(p) => writeln!(s, "{:.16e} {:.16e} {:.16e}", x[i], p.a[i], p.b[i]),
                Profile::Conformal(p) => writeln!(s, "{:.16e} {:.16e}", x[i], p.w[i]),
                Profile::Warped(p) => writeln!(s, "{:.16e} {:.16e} {:.16e} {:.16e}", x[i], p.phi[i], p.a[i], p.b[i]),
            };
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Profile> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing `{key}` header") })?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse { line: ln, msg: format!("expected `{key} <value>`") });
            }
            let v = it.next().ok_or(Error::Parse { line: ln, msg: format!("`{key}` has no value") })?;
            if it.next().is_some() {
                return Err(Error::Parse { line: ln, msg: "trailing tokens".into() });
            }
            Ok((ln, v.to_string()))
        };
        let (tag_line, tag) = header("ansatz")?;
        let (n_line, n) = header("N")?;
        let n: usize = n.parse().map_err(|_| Error::Parse { line: n_line, msg: format!("bad node count `{n}`") })?;
        let (l_line, len) = header("L")?;
        let len: f64 = len.parse().map_err(|_| Error::Parse { line: l_line, msg: format!("bad length `{len}`") })?;
        let cols = match tag.as_str() {
            "squashed" => 3,
            "conformal" => 2,
            "warped" => 4,
            other => return Err(Error::Parse { line: tag_line, msg: format!("unknown ansatz `{other}`") }),
        };
        if n < 2 {
            return Err(Error::Parse { line: n_line, msg: format!("node count {n} too small") });
        }
        let h = len / (n - 1) as f64;
        let mut data = vec![Vec::with_capacity(n); cols - 1];
        let mut last = l_line;
        for (ln, l) in lines {
            last = ln;
            let row: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: ln, msg: format!("bad number `{t}`") }))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse { line: ln, msg: format!("expected {cols} columns, found {}", row.len()) });
            }
            let i = data[0].len();
            if i >= n {
                return Err(Error::Parse { line: ln, msg: format!("more than {n} rows") });
            }
            if (row[0] - i as f64 * h).abs() > 1e-10 * len.max(1.0) {
                return Err(Error::Parse { line: ln, msg: format!("node {i} is not on the uniform grid") });
            }
            for (c, v) in data.iter_mut().zip(&row[1..]) {
                c.push(*v);
            }
        }
        if data[0].len() != n {
            return Err(Error::Parse { line: last, msg: format!("expected {n} rows, found {}", data[0].len()) });
        }
        let mut it = data.into_iter();
        let mut next = || it.next().unwrap_or_default();
        Ok(match cols {
            3 => {
                let a = next();
                Profile::Squashed(SquashedProfile::new(len, a, next())?)
            }
            2 => {
                if (len - PI).abs() > 1e-12 {
                    return Err(Error::Parse { line: l_line, msg: "conformal profiles live on [0, π]".into() });
                }
                Profile::Conformal(ConformalProfile::new(next())?)
            }
            _ => {
                let phi = next();
                let a = next();
                Profile::Warped(WarpedProfile::new(len, phi, a, next())?)
            }
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Profile> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Node weights for `∫_{S⁴} f dv ≈ Σᵢ wᵢ fᵢ`; the volume density is folded
/// into the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub weights: Vec<f64>,
}

/// `∫ f dv` of a per-node field.
pub fn integrate(field: &[f64], q: &QuadratureRule) -> Result<f64> {
    if field.len() != q.weights.len() {
        return Err(Error::InvalidProfile("field and quadrature rule differ in length".into()));
    }
    if let Some(i) = field.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteField(i));
    }
    Ok(field.iter().zip(&q.weights).map(|(f, w)| f * w).sum())
}

/// Squared norms of the covariant derivatives of `W`, `E` and `R`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradNorms {
    pub weyl: f64,
    pub e: f64,
    pub scalar: f64,
}

/// Pointwise curvature of a profile together with its quadrature rule.
#[derive(Clone, Debug)]
pub struct Geometry {
    h: f64,
    phi: Vec<f64>,
    jets: Vec<FrameJet>,
    pub decomps: Vec<CurvDecomp>,
    pub quad: QuadratureRule,
}

impl Geometry {
    pub fn n(&self) -> usize {
        self.decomps.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| i as f64 * self.h).collect()
    }

    pub fn field(&self, f: impl Fn(&CurvDecomp) -> f64) -> Vec<f64> {
        self.decomps.iter().map(f).collect()
    }

    pub fn integrate(&self, f: impl Fn(&CurvDecomp) -> f64) -> Result<f64> {
        integrate(&self.field(f), &self.quad)
    }

    pub fn volume(&self) -> f64 {
        self.quad.weights.iter().sum()
    }

    /// Average scalar curvature.
    pub fn rbar(&self) -> Result<f64> {
        Ok(self.integrate(|d| d.scalar)? / self.volume())
    }

    /// `|Riem|² = |W|² + 2|E|² + R²/6` at each node.
    pub fn riem_norm(&self) -> Vec<f64> {
        self.field(|d| (d.weyl_sq() + 2.0 * d.e_sq() + d.scalar * d.scalar / 6.0).sqrt())
    }

    /// `(|∇W|², |∇E|², |∇R|²)` at each node. Frame components are
    /// differentiated along `e₀` with 4th-order stencils on the interior
    /// nodes; pole values are extrapolated.
    pub fn gradient_norms(&self) -> Vec<GradNorms> {
        let n = self.n();
        let h = self.h;
        let col = |f: &dyn Fn(&CurvDecomp) -> f64| -> Vec<f64> {
            let v: Vec<f64> = self.decomps.iter().map(f).collect();
            interior_d1(&v, h).iter().zip(&self.phi).map(|(d, p)| d / p).collect()
        };
        let mut dw = vec![[0.0; 256]; n];
        for c in 0..256 {
            let d = col(&|x: &CurvDecomp| x.weyl.components()[c]);
            for i in 0..n {
                dw[i][c] = d[i];
            }
        }
        let mut de = vec![[[0.0; 4]; 4]; n];
        for j in 0..4 {
            for k in j..4 {
                let d = col(&|x: &CurvDecomp| x.e.get(j, k));
                for i in 0..n {
                    de[i][j][k] = d[i];
                    de[i][k][j] = d[i];
                }
            }
        }
        let dr = col(&|x: &CurvDecomp| x.scalar);
        let mut out = vec![GradNorms::default(); n];
        for i in 1..n - 1 {
            let conn = Connection::new(&self.jets[i]);
            let d = &self.decomps[i];
            let dwi = CurvTensor::from_fn(|a, b, c, e| dw[i][((a * 4 + b) * 4 + c) * 4 + e]);
            let dei = Sym2::from_fn(|a, b| de[i][a][b]);
            out[i] = GradNorms {
                weyl: conn.grad_curv_sq(&d.weyl, &dwi),
                e: conn.grad_sym2_sq(&d.e, &dei),
                scalar: dr[i] * dr[i],
            };
        }
        let ext = |a: &GradNorms, b: &GradNorms, c: &GradNorms| GradNorms {
            weyl: even_pole_value(a.weyl, b.weyl, c.weyl),
            e: even_pole_value(a.e, b.e, c.e),
            scalar: even_pole_value(a.scalar, b.scalar, c.scalar),
        };
        out[0] = ext(&out[1], &out[2], &out[3]);
        out[n - 1] = ext(&out[n - 2], &out[n - 3], &out[n - 4]);
        out
    }
}

/// Curvature of a squashed profile at node `i`.
pub fn curvature_from_squashed(p: &SquashedProfile, i: usize) -> Result<CurvDecomp> {
    node_decomp(p.as_warped(), i)
}

/// Curvature of a conformal profile at node `i`. The metric is conformally
/// flat, so a Weyl part above `1e-8` (relative to the curvature scale) is
/// reported as an error.
pub fn curvature_from_conformal(p: &ConformalProfile, i: usize) -> Result<CurvDecomp> {
    let d = node_decomp(p.as_warped(), i)?;
    let w = d.weyl_sq().sqrt();
    let scale = 1.0 + (2.0 * d.e_sq() + d.scalar * d.scalar / 6.0).sqrt();
    if w > 1e-8 * scale {
        return Err(Error::InvalidProfile(format!("conformal profile has Weyl norm {w:.3e} at node {i}")));
    }
    Ok(d)
}

fn node_decomp(p: &WarpedProfile, i: usize) -> Result<CurvDecomp> {
    if i >= p.n() {
        return Err(Error::InvalidProfile(format!("node {i} out of range")));
    }
    Ok(p.geometry()?.decomps[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_volume_and_curvature() {
        let p = SquashedProfile::round(257, 1.0).unwrap();
        assert_relative_eq!(p.volume(), 8.0 * PI * PI / 3.0, max_relative = 1e-8);
        let g = p.as_warped().geometry().unwrap();
        for d in &g.decomps {
            assert!((d.scalar - 12.0).abs() < 1e-8, "R = {}", d.scalar);
            assert!(d.e_sq() < 1e-16 && d.weyl_sq() < 1e-16);
        }
        assert_relative_eq!(g.integrate(|d| d.scalar).unwrap(), 32.0 * PI * PI, max_relative = 1e-8);
    }

    #[test]
    fn degenerate_profiles_are_rejected() {
        assert!(SquashedProfile::from_fn(65, PI, |r| r.sin(), |r| 0.5 * r.sin()).is_err());
        assert!(SquashedProfile::from_fn(64, PI, |r| r.sin(), |r| r.sin()).is_err());
        assert!(SquashedProfile::from_fn(65, PI, |r| r.sin() * (1.0 - 2.0 * r.sin()), |r| r.sin()).is_err());
        assert!(ConformalProfile::from_fn(65, |t| 0.1 * t.sin()).is_err());
        let p = SquashedProfile::round(65, 1.0).unwrap();
        assert!(matches!(
            integrate(&[f64::NAN; 65], &p.as_warped().quadrature(QuadratureKind::Simpson)),
            Err(Error::NonFiniteField(0))
        ));
    }

    #[test]
    fn homothetic_conformal_profile() {
        let c = 0.3;
        let p = ConformalProfile::from_fn(65, |_| c).unwrap();
        for i in [0, 7, 32, 64] {
            let d = curvature_from_conformal(&p, i).unwrap();
            assert_relative_eq!(d.scalar, 12.0 * (-2.0 * c).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let p: Profile = SquashedProfile::round(33, 0.7)
            .unwrap()
            .perturb_squash(0.05, &SquashShape::SinSq)
            .unwrap()
            .into();
        assert_eq!(Profile::from_text(&p.to_text()).unwrap(), p);
        let c: Profile = ConformalProfile::from_fn(33, |t| 0.1 * t.cos()).unwrap().into();
        assert_eq!(Profile::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let p: Profile = SquashedProfile::round(33, 1.0).unwrap().into();
        let mut text = p.to_text();
        text = text.replacen("\n0.0000000000000000e0 ", "\n0.0000000000000000e0 x", 1);
        match Profile::from_text(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
