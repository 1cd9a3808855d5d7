//! Pointwise algebra of four-dimensional curvature tensors.
//!
//! Everything here works on frame components. Unless a metric is passed
//! explicitly the frame is assumed orthonormal, so the frame metric is the
//! identity and no index raising is needed.
//!
//! Conventions:
//!
//! * `R_{ijkl}` is normalised so that `R_{ijij}` is the sectional curvature of
//!   the plane `e_i ∧ e_j`; the unit round sphere has `R = ½ g ⊙ g`.
//! * Kulkarni–Nomizu product:
//!   `(h ⊙ k)_{ijkl} = h_{ik}k_{jl} + h_{jl}k_{ik} − h_{il}k_{jk} − h_{jk}k_{il}`.
//! * Ricci contraction: `Ric_{jl} = Σ_i R_{ijil}`.
//! * 2-forms use the ordered basis `e01, e02, e03, e12, e13, e23` with
//!   `|e_i ∧ e_j| = 1`; the curvature operator has matrix entries
//!   `M_{(ij),(kl)} = R_{ijkl}`, so the unit sphere has `M = I`.
//! * `‖W‖² = ¼|W|²` is the squared norm of the Weyl operator on Λ², where
//!   `|W|² = W_{ijkl}W_{ijkl}` is the tensor norm.

use nalgebra::{Matrix3, Matrix4, Matrix6, SymmetricEigen};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Ordered basis of Λ² used for the operator form.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Symmetric 2-tensor in a frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2(Matrix4<f64>);

impl Sym2 {
    pub fn zero() -> Self {
        Sym2(Matrix4::zeros())
    }

    pub fn identity() -> Self {
        Sym2(Matrix4::identity())
    }

    pub fn diag(d: [f64; 4]) -> Self {
        Sym2(Matrix4::from_diagonal(&d.into()))
    }

    /// Accepts only exactly symmetric input.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        if asym != 0.0 {
            return Err(Error::NonSymmetric(asym));
        }
        Ok(Sym2(m))
    }

    /// Symmetric part `½(m + mᵀ)`.
    pub fn symmetrize(m: Matrix4<f64>) -> Self {
        Sym2((m + m.transpose()) * 0.5)
    }

    pub fn from_fn(f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::symmetrize(Matrix4::from_fn(f))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Frame norm `h_{ij}h_{ij}`.
    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn dot(&self, other: &Sym2) -> f64 {
        self.0.dot(&other.0)
    }

    /// Trace-free part in dimension four.
    pub fn trace_free(&self) -> Sym2 {
        *self - Sym2::identity() * (self.trace() / 4.0)
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, rhs: Sym2) -> Sym2 {
        Sym2(self.0 + rhs.0)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, rhs: Sym2) -> Sym2 {
        Sym2(self.0 - rhs.0)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, rhs: f64) -> Sym2 {
        Sym2(self.0 * rhs)
    }
}

impl Neg for Sym2 {
    type Output = Sym2;
    fn neg(self) -> Sym2 {
        Sym2(-self.0)
    }
}

#[inline]
const fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 4 + j) * 4 + k) * 4 + l
}

/// Covariant 4-tensor with (intended) Riemann symmetries, stored as all 256
/// frame components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvTensor {
    c: [f64; 256],
}

impl Default for CurvTensor {
    fn default() -> Self {
        Self::zero()
    }
}

impl CurvTensor {
    pub fn zero() -> Self {
        CurvTensor { c: [0.0; 256] }
    }

    /// Raw constructor; no symmetry is imposed.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        t.c[idx(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.c[idx(i, j, k, l)] = v;
    }

    pub fn components(&self) -> &[f64; 256] {
        &self.c
    }

    /// Builds the tensor from a symmetric operator on Λ².
    pub fn from_operator(m: &Matrix6<f64>) -> Self {
        let mut t = Self::zero();
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            for (q, &(k, l)) in PAIRS.iter().enumerate() {
                let v = m[(p, q)];
                t.c[idx(i, j, k, l)] = v;
                t.c[idx(j, i, k, l)] = -v;
                t.c[idx(i, j, l, k)] = -v;
                t.c[idx(j, i, l, k)] = v;
            }
        }
        t
    }

    /// Curvature operator on Λ² in the basis [`PAIRS`].
    pub fn operator(&self) -> Matrix6<f64> {
        Matrix6::from_fn(|p, q| {
            let (i, j) = PAIRS[p];
            let (k, l) = PAIRS[q];
            self.c[idx(i, j, k, l)]
        })
    }

    /// Tensor norm `|T|² = T_{ijkl}T_{ijkl}`.
    pub fn norm_sq(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }

    pub fn inner(&self, other: &CurvTensor) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `Ric_{jl} = Σ_i R_{ijil}`.
    pub fn ricci(&self) -> Sym2 {
        let mut m = Matrix4::zeros();
        for j in 0..4 {
            for l in 0..4 {
                m[(j, l)] = (0..4).map(|i| self.c[idx(i, j, i, l)]).sum();
            }
        }
        Sym2::symmetrize(m)
    }

    pub fn scalar(&self) -> f64 {
        self.ricci().trace()
    }

    /// Largest violation of the pair symmetry and of the two antisymmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let v = self.get(i, j, k, l);
                        r = r
                            .max((v + self.get(j, i, k, l)).abs())
                            .max((v + self.get(i, j, l, k)).abs())
                            .max((v - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        r
    }

    /// Largest violation of `R_{ijkl} + R_{iklj} + R_{iljk} = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let s = self.get(i, j, k, l) + self.get(i, k, l, j) + self.get(i, l, j, k);
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }

    /// Change of frame: `T'_{abcd} = T_{ijkl} F_{ia} F_{jb} F_{kc} F_{ld}`.
    pub fn transform(&self, f: &Matrix4<f64>) -> CurvTensor {
        // one slot at a time: 4 passes of 4·256 products
        let mut cur = self.c;
        for slot in 0..4 {
            let mut next = [0.0; 256];
            for (n, out) in next.iter_mut().enumerate() {
                let mut ix = [n >> 6, (n >> 4) & 3, (n >> 2) & 3, n & 3];
                let a = ix[slot];
                let mut s = 0.0;
                for i in 0..4 {
                    ix[slot] = i;
                    s += cur[idx(ix[0], ix[1], ix[2], ix[3])] * f[(i, a)];
                }
                *out = s;
            }
            cur = next;
        }
        CurvTensor { c: cur }
    }
}

impl Add for CurvTensor {
    type Output = CurvTensor;
    fn add(mut self, rhs: CurvTensor) -> CurvTensor {
        self.c.iter_mut().zip(rhs.c.iter()).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for CurvTensor {
    type Output = CurvTensor;
    fn sub(mut self, rhs: CurvTensor) -> CurvTensor {
        self.c.iter_mut().zip(rhs.c.iter()).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul<f64> for CurvTensor {
    type Output = CurvTensor;
    fn mul(mut self, rhs: f64) -> CurvTensor {
        self.c.iter_mut().for_each(|a| *a *= rhs);
        self
    }
}

/// Kulkarni–Nomizu product of two symmetric 2-tensors.
pub fn kulkarni_nomizu(h: &Sym2, k: &Sym2) -> CurvTensor {
    CurvTensor::from_fn(|a, b, c, d| {
        h.get(a, c) * k.get(b, d) + h.get(b, d) * k.get(a, c)
            - h.get(a, d) * k.get(b, c)
            - h.get(b, c) * k.get(a, d)
    })
}

/// Orientation of the frame, which fixes the sign of the Hodge star.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// Rows are the unit self-dual (first three) and anti-self-dual (last three)
/// 2-forms in the [`PAIRS`] basis for the given orientation.
fn duality_basis(orientation: Orientation) -> Matrix6<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let o = orientation.sign();
    // *e01 = e23, *e02 = −e13, *e03 = e12 for the positive orientation
    let mut p = Matrix6::zeros();
    let pairs = [(0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)];
    for (r, &(a, b, sgn)) in pairs.iter().enumerate() {
        p[(r, a)] = s;
        p[(r, b)] = s * sgn * o;
        p[(r + 3, a)] = s;
        p[(r + 3, b)] = -s * sgn * o;
    }
    p
}

fn duality_blocks(w: &CurvTensor, orientation: Orientation) -> (Matrix3<f64>, Matrix3<f64>) {
    let p = duality_basis(orientation);
    let m = p * w.operator() * p.transpose();
    let plus = m.fixed_view::<3, 3>(0, 0).into_owned();
    let minus = m.fixed_view::<3, 3>(3, 3).into_owned();
    (
        (plus + plus.transpose()) * 0.5,
        (minus + minus.transpose()) * 0.5,
    )
}

/// Self-dual and anti-self-dual blocks of a Weyl tensor viewed as an
/// operator on Λ².
pub fn sd_asd_split(w: &CurvTensor, orientation: Orientation) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let ric = w.ricci().norm_sq().sqrt();
    if ric > 1e-8 * (1.0 + w.norm_sq().sqrt()) {
        return Err(Error::NotWeyl(ric));
    }
    Ok(duality_blocks(w, orientation))
}

/// The parts of a curvature tensor in an orthonormal frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvDecomp {
    pub weyl: CurvTensor,
    /// Trace-free Ricci tensor `E = Ric − ¼Rg`.
    pub e: Sym2,
    pub scalar: f64,
    pub w_plus: Matrix3<f64>,
    pub w_minus: Matrix3<f64>,
}

impl CurvDecomp {
    /// Assembles a decomposition from a Weyl tensor, `E` and `R`.
    pub fn from_parts(weyl: CurvTensor, e: Sym2, scalar: f64) -> Self {
        let (w_plus, w_minus) = duality_blocks(&weyl, Orientation::Positive);
        CurvDecomp { weyl, e, scalar, w_plus, w_minus }
    }

    /// Round data of a sphere of sectional curvature `k`.
    pub fn constant_curvature(k: f64) -> Self {
        Self::from_parts(CurvTensor::zero(), Sym2::zero(), 12.0 * k)
    }

    /// `|W|²` as a (0,4)-tensor.
    pub fn weyl_sq(&self) -> f64 {
        self.weyl.norm_sq()
    }

    /// `‖W‖² = ¼|W|²`.
    pub fn weyl_op_sq(&self) -> f64 {
        0.25 * self.weyl.norm_sq()
    }

    pub fn e_sq(&self) -> f64 {
        self.e.norm_sq()
    }

    pub fn ricci(&self) -> Sym2 {
        self.e + Sym2::identity() * (self.scalar / 4.0)
    }

    pub fn tr_e3(&self) -> f64 {
        tr_e3(&self.e)
    }

    pub fn wee(&self) -> f64 {
        wee(&self.weyl, &self.e)
    }

    pub fn det_plus(&self) -> f64 {
        det_w(&self.w_plus)
    }

    pub fn det_minus(&self) -> f64 {
        det_w(&self.w_minus)
    }

    pub fn w_plus_sq(&self) -> f64 {
        self.w_plus.norm_squared()
    }

    pub fn w_minus_sq(&self) -> f64 {
        self.w_minus.norm_squared()
    }

    pub fn sigma2(&self) -> f64 {
        sigma2_closed(self.e_sq(), self.scalar)
    }

    pub fn weak_pinching(&self) -> Result<f64> {
        weak_pinching(self)
    }

    pub fn integrand_g(&self) -> f64 {
        integrand_g(self)
    }

    /// Data of the metric `λ²g`: every frame component scales by `λ⁻²`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let s = lambda.powi(-2);
        CurvDecomp {
            weyl: self.weyl * s,
            e: self.e * s,
            scalar: self.scalar * s,
            w_plus: self.w_plus * s,
            w_minus: self.w_minus * s,
        }
    }

    /// Linear combination `Σ cᵢ dᵢ`; the invariants of a decomposition are
    /// linear, so the result is again a decomposition.
    pub fn combine(terms: &[(f64, &CurvDecomp)]) -> Self {
        let mut weyl = CurvTensor::zero();
        let mut e = Sym2::zero();
        let mut scalar = 0.0;
        let mut wp = Matrix3::zeros();
        let mut wm = Matrix3::zeros();
        for &(c, d) in terms {
            weyl = weyl + d.weyl * c;
            e = e + d.e * c;
            scalar += c * d.scalar;
            wp += d.w_plus * c;
            wm += d.w_minus * c;
        }
        CurvDecomp { weyl, e, scalar, w_plus: wp, w_minus: wm }
    }
}

/// Decomposition in an orthonormal frame (frame metric = identity).
pub fn decompose_frame(riem: &CurvTensor) -> CurvDecomp {
    let ric = riem.ricci();
    let r = ric.trace();
    let e = ric.trace_free();
    let id = Sym2::identity();
    let weyl = *riem - kulkarni_nomizu(&e, &id) * 0.5 - kulkarni_nomizu(&id, &id) * (r / 24.0);
    CurvDecomp::from_parts(weyl, e, r)
}

/// Orthonormal frame `F = L⁻ᵀ` from the Cholesky factor `g = LLᵀ`, together
/// with `Lᵀ` (its inverse).
fn cholesky_frame(g: &Sym2) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    let chol = g.0.cholesky().ok_or(Error::DegenerateMetric)?;
    let l = chol.l();
    let lt = l.transpose();
    let f = lt.try_inverse().ok_or(Error::DegenerateMetric)?;
    Ok((f, lt))
}

/// Splits `riem = W + ½E⊙g + (R/24)g⊙g`.
///
/// The returned parts are expressed in the orthonormal frame obtained from
/// the Cholesky factor of `g`; for `g = I` that is the input frame itself.
pub fn decompose(riem: &CurvTensor, g: &Sym2) -> Result<CurvDecomp> {
    let (f, _) = cholesky_frame(g)?;
    if *g == Sym2::identity() {
        return Ok(decompose_frame(riem));
    }
    Ok(decompose_frame(&riem.transform(&f)))
}

/// Inverse of [`decompose`] for the same `g`.
pub fn reconstruct(d: &CurvDecomp, g: &Sym2) -> Result<CurvTensor> {
    let (_, lt) = cholesky_frame(g)?;
    let id = Sym2::identity();
    let t = d.weyl + kulkarni_nomizu(&d.e, &id) * 0.5 + kulkarni_nomizu(&id, &id) * (d.scalar / 24.0);
    if *g == Sym2::identity() {
        return Ok(t);
    }
    Ok(t.transform(&lt))
}

/// Weak pinching `(|W|² + 2|E|²)/R²`.
pub fn weak_pinching(d: &CurvDecomp) -> Result<f64> {
    if d.scalar == 0.0 {
        return Err(Error::UndefinedPinching);
    }
    Ok((d.weyl_sq() + 2.0 * d.e_sq()) / (d.scalar * d.scalar))
}

pub fn det_w(block: &Matrix3<f64>) -> f64 {
    block.determinant()
}

/// `tr E³ = E_{ij}E_{ik}E_{jk}`.
pub fn tr_e3(e: &Sym2) -> f64 {
    let m = e.matrix();
    (m * m).dot(m)
}

/// `W_{ijkl} E_{ik} E_{jl}`.
pub fn wee(w: &CurvTensor, e: &Sym2) -> f64 {
    // E ⊗ E flattened as (i,k),(j,l) so the sum is a single dot product
    let m = e.matrix();
    let c = w.components();
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let base = (i * 4 + j) * 16;
            for k in 0..4 {
                let eik = m[(i, k)];
                if eik == 0.0 {
                    continue;
                }
                let row = &c[base + k * 4..base + k * 4 + 4];
                s += eik * (row[0] * m[(j, 0)] + row[1] * m[(j, 1)] + row[2] * m[(j, 2)] + row[3] * m[(j, 3)]);
            }
        }
    }
    s
}

/// Schouten tensor `A = Ric − (R/6) g` in dimension four.
pub fn schouten(ric: &Sym2, r: f64, g: &Sym2) -> Sym2 {
    *ric - *g * (r / 6.0)
}

/// Elementary symmetric polynomial of the eigenvalues of a self-adjoint
/// endomorphism (given by its matrix in an orthonormal frame).
pub fn sigma_k(s: &Matrix4<f64>, k: usize) -> Result<f64> {
    if !(1..=4).contains(&k) {
        return Err(Error::Config(format!("sigma_k order {k} outside 1..=4")));
    }
    let asym = (s - s.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + s.abs().max()) {
        return Err(Error::NonSymmetric(asym));
    }
    let ev = SymmetricEigen::new((s + s.transpose()) * 0.5).eigenvalues;
    // e_k via the recurrence on the coefficients of Π(1 + λᵢ x)
    let mut e = [1.0, 0.0, 0.0, 0.0, 0.0];
    for lam in ev.iter() {
        for j in (1..=4).rev() {
            e[j] += lam * e[j - 1];
        }
    }
    Ok(e[k])
}

/// `σ₂(A) = R²/24 − ½|E|²`.
pub fn sigma2_closed(e_norm2: f64, r: f64) -> f64 {
    r * r / 24.0 - 0.5 * e_norm2
}

/// `G = 6 tr E³ + R|E|² − 9 WEE − 108 det W⁺ − 108 det W⁻ + ¾ R|W|²`.
pub fn integrand_g(d: &CurvDecomp) -> f64 {
    6.0 * d.tr_e3() + d.scalar * d.e_sq() - 9.0 * d.wee() - 108.0 * d.det_plus() - 108.0 * d.det_minus()
        + 0.75 * d.scalar * d.weyl_sq()
}

/// `B_{ij} = ∇ᵏ∇ˡW_{kijl} + ½ Rᵏˡ W_{kijl}` from the externally supplied
/// second-derivative contraction.
pub fn bach_assemble(dd_w: &Sym2, ric: &Sym2, w: &CurvTensor) -> Sym2 {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    s += ric.get(k, l) * w.get(k, i, j, l);
                }
            }
            m[(i, j)] = dd_w.get(i, j) + 0.5 * s;
        }
    }
    Sym2::symmetrize(m)
}
