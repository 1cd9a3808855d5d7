//! Finite-difference curvature on coordinate charts.
//!
//! Everything here is computed from a metric closure by central differences
//! of step `h`, so values are second-order accurate. Results are expressed
//! in the orthonormal frame `F = L⁻ᵀ` built from the Cholesky factor
//! `g = LLᵀ` at the evaluation point, the same frame used by
//! [`crate::algebra::decompose`]. The oracle is slow and meant for tests.

use std::sync::Arc;

use nalgebra::Matrix4;

use crate::algebra::{bach_assemble, decompose_frame, CurvDecomp, CurvTensor, Sym2};
use crate::error::{Error, Result};

pub type Point = [f64; 4];

type MetricFn = dyn Fn(&Point) -> Matrix4<f64> + Send + Sync;

/// `Γᵐᵢⱼ` stored as `[m][i][j]`.
type Christoffel = [[[f64; 4]; 4]; 4];

/// A metric on a coordinate box together with the difference step.
#[derive(Clone)]
pub struct ChartSampler {
    metric: Arc<MetricFn>,
    lo: Point,
    hi: Point,
    h: f64,
}

impl std::fmt::Debug for ChartSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartSampler").field("lo", &self.lo).field("hi", &self.hi).field("h", &self.h).finish()
    }
}

/// A value with its Richardson error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// Combines results at steps `h` and `h/2` of a second-order method.
    pub fn richardson(coarse: f64, fine: f64) -> Estimate {
        Estimate { value: (4.0 * fine - coarse) / 3.0, error: (fine - coarse).abs() / 3.0 }
    }
}

/// `(|∇W|², |∇E|², |∇R|²)` as full tensor norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradNormsFd {
    pub weyl: f64,
    pub e: f64,
    pub scalar: f64,
}

/// Coordinate components of the curvature at one point.
struct CoordCurvature {
    g: Matrix4<f64>,
    ginv: Matrix4<f64>,
    gamma: Christoffel,
    riem: CurvTensor,
    ric: Matrix4<f64>,
    scalar: f64,
}

impl CoordCurvature {
    fn e(&self) -> Matrix4<f64> {
        self.ric - self.g * (self.scalar / 4.0)
    }

    /// `W = Rm − ½E⊙g − (R/24) g⊙g` with coordinate components.
    fn weyl(&self) -> CurvTensor {
        let e = self.e();
        let g = &self.g;
        let kn = |h: &Matrix4<f64>, k: &Matrix4<f64>, a: usize, b: usize, c: usize, d: usize| {
            h[(a, c)] * k[(b, d)] + h[(b, d)] * k[(a, c)] - h[(a, d)] * k[(b, c)] - h[(b, c)] * k[(a, d)]
        };
        CurvTensor::from_fn(|a, b, c, d| {
            self.riem.get(a, b, c, d) - 0.5 * kn(&e, g, a, b, c, d) - self.scalar / 24.0 * kn(g, g, a, b, c, d)
        })
    }
}

fn shift(x: &Point, m: usize, d: f64) -> Point {
    let mut y = *x;
    y[m] += d;
    y
}

/// Coordinate curvature at a point with `∇W`, `∇E` and `dR`.
type Gradients = (CoordCurvature, Vec<f64>, [Matrix4<f64>; 4], Point);

impl ChartSampler {
    /// `h` must lie in `[1e-4, 1e-2]` times the smallest box width.
    pub fn new(
        metric: impl Fn(&Point) -> Matrix4<f64> + Send + Sync + 'static,
        lo: Point,
        hi: Point,
        h: f64,
    ) -> Result<ChartSampler> {
        let scale = (0..4).map(|m| hi[m] - lo[m]).fold(f64::INFINITY, f64::min);
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::Config("empty chart box".into()));
        }
        if !(h >= 1e-4 * scale && h <= 1e-2 * scale) {
            return Err(Error::Config(format!("step {h} outside [1e-4, 1e-2] of the box width {scale}")));
        }
        Ok(ChartSampler { metric: Arc::new(metric), lo, hi, h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The same chart with step `h`.
    pub fn with_step(&self, h: f64) -> Result<ChartSampler> {
        let m = self.metric.clone();
        ChartSampler::new(move |x| m(x), self.lo, self.hi, h)
    }

    fn check_margin(&self, x: &Point, steps: f64) -> Result<()> {
        let margin = steps * self.h;
        for m in 0..4 {
            if !(x[m] - margin >= self.lo[m] && x[m] + margin <= self.hi[m]) {
                return Err(Error::OutsideChart { margin });
            }
        }
        Ok(())
    }

    /// Metric at `x`; fails unless finite and positive definite.
    pub fn metric(&self, x: &Point) -> Result<Matrix4<f64>> {
        let g = (self.metric)(x);
        if g.iter().any(|v| !v.is_finite()) || (g - g.transpose()).amax() > 1e-12 * g.amax() {
            return Err(Error::DegenerateMetric);
        }
        g.cholesky().ok_or(Error::DegenerateMetric)?;
        Ok(g)
    }

    fn christoffel(&self, x: &Point) -> Result<(Matrix4<f64>, Matrix4<f64>, Christoffel)> {
        let g = self.metric(x)?;
        let ginv = g.try_inverse().ok_or(Error::DegenerateMetric)?;
        let mut dg = [Matrix4::zeros(); 4];
        for (m, d) in dg.iter_mut().enumerate() {
            *d = (self.metric(&shift(x, m, self.h))? - self.metric(&shift(x, m, -self.h))?) / (2.0 * self.h);
        }
        let mut gamma = [[[0.0; 4]; 4]; 4];
        for m in 0..4 {
            for i in 0..4 {
                for j in i..4 {
                    let mut s = 0.0;
                    for k in 0..4 {
                        s += ginv[(m, k)] * (dg[i][(k, j)] + dg[j][(k, i)] - dg[k][(i, j)]);
                    }
                    gamma[m][i][j] = 0.5 * s;
                    gamma[m][j][i] = 0.5 * s;
                }
            }
        }
        Ok((g, ginv, gamma))
    }

    fn curvature(&self, x: &Point) -> Result<CoordCurvature> {
        let (g, ginv, gamma) = self.christoffel(x)?;
        // dgamma[n] = ∂ₙΓ
        let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
        for (n, dn) in dgamma.iter_mut().enumerate() {
            let (_, _, gp) = self.christoffel(&shift(x, n, self.h))?;
            let (_, _, gm) = self.christoffel(&shift(x, n, -self.h))?;
            for m in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        dn[m][i][j] = (gp[m][i][j] - gm[m][i][j]) / (2.0 * self.h);
                    }
                }
            }
        }
        // R_{ijkl} = g(R(∂ᵢ,∂ⱼ)∂ₗ, ∂ₖ)
        let riem = CurvTensor::from_fn(|i, j, k, l| {
            let mut s = 0.0;
            for m in 0..4 {
                let mut v = dgamma[i][m][j][l] - dgamma[j][m][i][l];
                for p in 0..4 {
                    v += gamma[p][j][l] * gamma[m][i][p] - gamma[p][i][l] * gamma[m][j][p];
                }
                s += g[(k, m)] * v;
            }
            s
        });
        let mut ric = Matrix4::zeros();
        for j in 0..4 {
            for l in 0..4 {
                let mut s = 0.0;
                for i in 0..4 {
                    for k in 0..4 {
                        s += ginv[(i, k)] * riem.get(i, j, k, l);
                    }
                }
                ric[(j, l)] = s;
            }
        }
        let ric = (ric + ric.transpose()) * 0.5;
        let scalar = (ginv.component_mul(&ric)).sum();
        Ok(CoordCurvature { g, ginv, gamma, riem, ric, scalar })
    }

    fn frame(g: &Matrix4<f64>) -> Result<Matrix4<f64>> {
        let l = g.cholesky().ok_or(Error::DegenerateMetric)?.l();
        l.transpose().try_inverse().ok_or(Error::DegenerateMetric)
    }

    /// Riemann tensor at `x` in the orthonormal Cholesky frame. Needs a
    /// margin of `2h` to the chart boundary.
    pub fn riemann_fd(&self, x: &Point) -> Result<CurvTensor> {
        self.check_margin(x, 2.0)?;
        let c = self.curvature(x)?;
        Ok(c.riem.transform(&Self::frame(&c.g)?))
    }

    /// Richardson combination of [`riemann_fd`](Self::riemann_fd) at `h`
    /// and `h/2`, with the largest component error estimate.
    pub fn riemann_richardson(&self, x: &Point) -> Result<(CurvTensor, f64)> {
        let coarse = self.riemann_fd(x)?;
        let fine = self.with_step(self.h / 2.0)?.riemann_fd(x)?;
        let value = fine * (4.0 / 3.0) - coarse * (1.0 / 3.0);
        Ok((value, (fine - coarse).max_abs() / 3.0))
    }

    /// Frame decomposition `(W, E, R)` at `x`.
    pub fn decomp_fd(&self, x: &Point) -> Result<CurvDecomp> {
        Ok(decompose_frame(&self.riemann_fd(x)?))
    }

    /// `∇W`, `∇E` and `dR` at `x` in coordinates. Index order of `∇T` is
    /// `(m, T-indices…)`.
    fn gradients(&self, x: &Point) -> Result<Gradients> {
        let c = self.curvature(x)?;
        let mut dw = vec![0.0; 1024];
        let mut de = [Matrix4::zeros(); 4];
        let mut dr = [0.0; 4];
        for m in 0..4 {
            let p = self.curvature(&shift(x, m, self.h))?;
            let q = self.curvature(&shift(x, m, -self.h))?;
            let (wp, wq) = (p.weyl(), q.weyl());
            for (n, (a, b)) in wp.components().iter().zip(wq.components()).enumerate() {
                dw[m * 256 + n] = (a - b) / (2.0 * self.h);
            }
            de[m] = (p.e() - q.e()) / (2.0 * self.h);
            dr[m] = (p.scalar - q.scalar) / (2.0 * self.h);
        }
        let w = c.weyl();
        let e = c.e();
        let gm = &c.gamma;
        let mut cov_w = vec![0.0; 1024];
        for m in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            let mut v = dw[m * 256 + ((i * 4 + j) * 4 + k) * 4 + l];
                            for p in 0..4 {
                                v -= gm[p][m][i] * w.get(p, j, k, l)
                                    + gm[p][m][j] * w.get(i, p, k, l)
                                    + gm[p][m][k] * w.get(i, j, p, l)
                                    + gm[p][m][l] * w.get(i, j, k, p);
                            }
                            cov_w[m * 256 + ((i * 4 + j) * 4 + k) * 4 + l] = v;
                        }
                    }
                }
            }
        }
        let mut cov_e = [Matrix4::zeros(); 4];
        for m in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut v = de[m][(i, j)];
                    for p in 0..4 {
                        v -= gm[p][m][i] * e[(p, j)] + gm[p][m][j] * e[(i, p)];
                    }
                    cov_e[m][(i, j)] = v;
                }
            }
        }
        Ok((c, cov_w, cov_e, dr))
    }

    /// `(|∇W|², |∇E|², |∇R|²)` at `x`; needs a margin of `3h`.
    pub fn grad_norms_fd(&self, x: &Point) -> Result<GradNormsFd> {
        self.check_margin(x, 3.0)?;
        let (c, cov_w, cov_e, dr) = self.gradients(x)?;
        let gi = &c.ginv;
        let weyl = norm_sq_n(&cov_w, 5, gi);
        let mut flat_e = vec![0.0; 64];
        for m in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    flat_e[(m * 4 + i) * 4 + j] = cov_e[m][(i, j)];
                }
            }
        }
        let e = norm_sq_n(&flat_e, 3, gi);
        let scalar = norm_sq_n(&dr, 1, gi);
        Ok(GradNormsFd { weyl, e, scalar })
    }

    /// Richardson-combined gradient norms.
    pub fn grad_norms_richardson(&self, x: &Point) -> Result<[Estimate; 3]> {
        let a = self.grad_norms_fd(x)?;
        let b = self.with_step(self.h / 2.0)?.grad_norms_fd(x)?;
        Ok([
            Estimate::richardson(a.weyl, b.weyl),
            Estimate::richardson(a.e, b.e),
            Estimate::richardson(a.scalar, b.scalar),
        ])
    }

    /// `Uₖᵢⱼ = ∇ˡW_{kijl}` in coordinates.
    fn weyl_divergence(&self, x: &Point) -> Result<(CoordCurvature, [[[f64; 4]; 4]; 4])> {
        let (c, cov_w, _, _) = self.gradients(x)?;
        let mut u = [[[0.0; 4]; 4]; 4];
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        for a in 0..4 {
                            s += c.ginv[(l, a)] * cov_w[a * 256 + ((k * 4 + i) * 4 + j) * 4 + l];
                        }
                    }
                    u[k][i][j] = s;
                }
            }
        }
        Ok((c, u))
    }

    /// Bach tensor `B_{ij} = ∇ᵏ∇ˡW_{kijl} + ½RᵏˡW_{kijl}` at `x` in the
    /// orthonormal frame; needs a margin of `4h`.
    pub fn bach_fd(&self, x: &Point) -> Result<Sym2> {
        self.check_margin(x, 4.0)?;
        let (c, u) = self.weyl_divergence(x)?;
        let mut du = [[[[0.0; 4]; 4]; 4]; 4];
        for (b, dub) in du.iter_mut().enumerate() {
            let (_, up) = self.weyl_divergence(&shift(x, b, self.h))?;
            let (_, uq) = self.weyl_divergence(&shift(x, b, -self.h))?;
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        dub[k][i][j] = (up[k][i][j] - uq[k][i][j]) / (2.0 * self.h);
                    }
                }
            }
        }
        let gm = &c.gamma;
        let mut dd = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for b in 0..4 {
                    for k in 0..4 {
                        let mut v = du[b][k][i][j];
                        for p in 0..4 {
                            v -= gm[p][b][k] * u[p][i][j] + gm[p][b][i] * u[k][p][j] + gm[p][b][j] * u[k][i][p];
                        }
                        s += c.ginv[(k, b)] * v;
                    }
                }
                dd[(i, j)] = s;
            }
        }
        let f = Self::frame(&c.g)?;
        let dd_frame = Sym2::symmetrize(f.transpose() * dd * f);
        let ric_frame = Sym2::symmetrize(f.transpose() * c.ric * f);
        let w_frame = c.weyl().transform(&f);
        Ok(bach_assemble(&dd_frame, &ric_frame, &w_frame))
    }

    /// Bach tensor at `h` and `h/2`, Richardson-combined, with the largest
    /// component error estimate.
    pub fn bach_richardson(&self, x: &Point) -> Result<(Sym2, f64)> {
        let a = self.bach_fd(x)?;
        let b = self.with_step(self.h / 2.0)?.bach_fd(x)?;
        let value = Sym2::symmetrize(b.matrix() * (4.0 / 3.0) - a.matrix() * (1.0 / 3.0));
        Ok((value, (b.matrix() - a.matrix()).amax() / 3.0))
    }
}

/// `|T|²` of an `order`-index covariant tensor with inverse metric `gi`.
fn norm_sq_n(t: &[f64], order: usize, gi: &Matrix4<f64>) -> f64 {
    // raise every index, then contract with the original
    let mut raised = t.to_vec();
    for slot in 0..order {
        let stride = 4usize.pow((order - 1 - slot) as u32);
        let mut next = vec![0.0; raised.len()];
        for (n, out) in next.iter_mut().enumerate() {
            let a = (n / stride) % 4;
            let base = n - a * stride;
            *out = (0..4).map(|i| gi[(a, i)] * raised[base + i * stride]).sum();
        }
        raised = next;
    }
    raised.iter().zip(t).map(|(a, b)| a * b).sum()
}

/// The two integral identities satisfied by Bach-flat metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `∫ 3(|∇E|² − |∇R|²/12) + 6 tr E³ + R|E|² − 6 W(E,E)`.
    Identity1,
    /// `∫ |∇W|² − 72 det W⁺ − 72 det W⁻ + ½R|W|² − 2 W(E,E)`.
    Identity2,
}

/// Node fields for [`identity_eval`]. `weights` are full volume weights
/// (quadrature times density).
#[derive(Clone, Debug, Default)]
pub struct IdentityFields {
    pub weights: Vec<f64>,
    pub decomps: Option<Vec<CurvDecomp>>,
    pub grad_w_sq: Option<Vec<f64>>,
    pub grad_e_sq: Option<Vec<f64>>,
    pub grad_r_sq: Option<Vec<f64>>,
}

/// Integral of an identity together with the integral of the absolute
/// values of its terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityValue {
    pub value: f64,
    pub scale: f64,
}

impl IdentityValue {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

fn field<'a>(f: &'a Option<Vec<f64>>, name: &'static str, n: usize) -> Result<&'a [f64]> {
    let v = f.as_deref().ok_or(Error::MissingField(name))?;
    if v.len() != n {
        return Err(Error::LengthMismatch { field: name, got: v.len(), need: n });
    }
    Ok(v)
}

/// Evaluates one identity on node fields.
pub fn identity_eval(which: Identity, fields: &IdentityFields) -> Result<IdentityValue> {
    let n = fields.weights.len();
    let d = fields.decomps.as_deref().ok_or(Error::MissingField("decomps"))?;
    if d.len() != n {
        return Err(Error::LengthMismatch { field: "decomps", got: d.len(), need: n });
    }
    let mut value = 0.0;
    let mut scale = 0.0;
    match which {
        Identity::Identity1 => {
            let ge = field(&fields.grad_e_sq, "grad_e_sq", n)?;
            let gr = field(&fields.grad_r_sq, "grad_r_sq", n)?;
            for i in 0..n {
                let c = &d[i];
                let terms = [
                    3.0 * ge[i],
                    -0.25 * gr[i],
                    6.0 * c.tr_e3(),
                    c.scalar * c.e_sq(),
                    -6.0 * c.wee(),
                ];
                value += fields.weights[i] * terms.iter().sum::<f64>();
                scale += fields.weights[i] * terms.iter().map(|t| t.abs()).sum::<f64>();
            }
        }
        Identity::Identity2 => {
            let gw = field(&fields.grad_w_sq, "grad_w_sq", n)?;
            for i in 0..n {
                let c = &d[i];
                let terms = [
                    gw[i],
                    -72.0 * c.det_plus(),
                    -72.0 * c.det_minus(),
                    0.5 * c.scalar * c.weyl_sq(),
                    -2.0 * c.wee(),
                ];
                value += fields.weights[i] * terms.iter().sum::<f64>();
                scale += fields.weights[i] * terms.iter().map(|t| t.abs()).sum::<f64>();
            }
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFiniteField(0));
    }
    Ok(IdentityValue { value, scale })
}

/// Sample charts.
pub mod charts {
    use super::*;

    /// Euclidean `R⁴` on `[-1, 1]⁴`.
    pub fn flat(h: f64) -> Result<ChartSampler> {
        ChartSampler::new(|_| Matrix4::identity(), [-1.0; 4], [1.0; 4], h)
    }

    fn stereo_factor(x: &Point) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        2.0 / (1.0 + r2)
    }

    /// Unit round `S⁴` in stereographic coordinates on `[-2, 2]⁴`.
    pub fn round_stereographic(h: f64) -> Result<ChartSampler> {
        ChartSampler::new(|x| Matrix4::identity() * stereo_factor(x).powi(2), [-2.0; 4], [2.0; 4], h)
    }

    /// `e^{2w(θ)}` times the unit round metric, `θ` the polar angle from
    /// the chart's centre. With `far_pole` the chart is centred at `θ = π`.
    pub fn conformal_round(
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
        far_pole: bool,
        h: f64,
    ) -> Result<ChartSampler> {
        ChartSampler::new(
            move |x| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let t = 2.0 * r.atan();
                let theta = if far_pole { std::f64::consts::PI - t } else { t };
                Matrix4::identity() * (stereo_factor(x) * w(theta).exp()).powi(2)
            },
            [-2.0; 4],
            [2.0; 4],
            h,
        )
    }

    /// Chart point at polar angle `theta` for [`conformal_round`], and
    /// whether the far-pole chart is the one to use.
    pub fn conformal_round_point(theta: f64) -> (Point, bool) {
        let half = std::f64::consts::FRAC_PI_2;
        if theta <= half {
            ([(theta / 2.0).tan(), 0.0, 0.0, 0.0], false)
        } else {
            ([((std::f64::consts::PI - theta) / 2.0).tan(), 0.0, 0.0, 0.0], true)
        }
    }

    /// `φ(r)²dr² + a₁²σ₁² + a₂²σ₂² + a₃²σ₃²` in coordinates `(r, ϑ, ϕ, ψ)`
    /// with the Euler-angle forms
    /// `σ₁ = ½(dψ + cos ϑ dϕ)`, `σ₂ = ½(−sin ψ dϑ + cos ψ sin ϑ dϕ)`,
    /// `σ₃ = ½(cos ψ dϑ + sin ψ sin ϑ dϕ)`.
    ///
    /// The box is `[r_lo, r_hi] × [0.3, π − 0.3] × [−π, π] × [−π, π]`.
    pub fn cohomogeneity_one(
        profile: impl Fn(f64) -> [f64; 4] + Send + Sync + 'static,
        r_lo: f64,
        r_hi: f64,
        h: f64,
    ) -> Result<ChartSampler> {
        use std::f64::consts::PI;
        ChartSampler::new(
            move |x| {
                let [phi, a1, a2, a3] = profile(x[0]);
                let (st, ct) = x[1].sin_cos();
                let (sp, cp) = x[3].sin_cos();
                let s1 = [0.0, 0.0, 0.5 * ct, 0.5];
                let s2 = [0.0, -0.5 * sp, 0.5 * cp * st, 0.0];
                let s3 = [0.0, 0.5 * cp, 0.5 * sp * st, 0.0];
                let mut g = Matrix4::zeros();
                g[(0, 0)] = phi * phi;
                for (a, s) in [(a1, s1), (a2, s2), (a3, s3)] {
                    for i in 0..4 {
                        for j in 0..4 {
                            g[(i, j)] += a * a * s[i] * s[j];
                        }
                    }
                }
                g
            },
            [r_lo, 0.3, -PI, -PI],
            [r_hi, PI - 0.3, PI, PI],
            h,
        )
    }

    /// A generic interior point of a [`cohomogeneity_one`] chart.
    pub fn cohomogeneity_point(r: f64) -> Point {
        [r, std::f64::consts::FRAC_PI_2, 0.2, 0.1]
    }

    /// Fubini–Study metric on `CP²` with holomorphic sectional curvature 4
    /// (`Ric = 6g`), `r ∈ (0, π/2)`.
    pub fn fubini_study(h: f64) -> Result<ChartSampler> {
        cohomogeneity_one(|r| [1.0, r.sin() * r.cos(), r.sin(), r.sin()], 0.2, 1.3, h)
    }

    /// `e^{2f(r)}` times the Fubini–Study metric.
    pub fn conformal_fubini_study(f: impl Fn(f64) -> f64 + Send + Sync + 'static, h: f64) -> Result<ChartSampler> {
        cohomogeneity_one(
            move |r| {
                let e = f(r).exp();
                [e, e * r.sin() * r.cos(), e * r.sin(), e * r.sin()]
            },
            0.2,
            1.3,
            h,
        )
    }

    /// Unit `S³` times a line.
    pub fn s3_times_s1(h: f64) -> Result<ChartSampler> {
        cohomogeneity_one(|_| [1.0, 1.0, 1.0, 1.0], -1.0, 1.0, h)
    }

    /// `dr² + a(r)²σ₁² + b(r)²(σ₂² + σ₃²)` for analytic `a`, `b`.
    pub fn squashed(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_lo: f64,
        r_hi: f64,
        h: f64,
    ) -> Result<ChartSampler> {
        cohomogeneity_one(move |r| [1.0, a(r), b(r), b(r)], r_lo, r_hi, h)
    }
}
