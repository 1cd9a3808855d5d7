//! Curvature of the diagonal cohomogeneity-one ansatz
//!
//! ```text
//! g = φ(x)² dx² + A₁(x)² σ₁² + A₂(x)² σ₂² + A₃(x)² σ₃²,   dσ₁ = 2 σ₂∧σ₃ (cyclic)
//! ```
//!
//! in the orthonormal frame `e₀ = φ⁻¹∂ₓ`, `eₖ = Aₖ⁻¹Xₖ` (`Xₖ` dual to `σₖ`).
//! Frame components of invariant tensors depend on `x` only, and every
//! frame derivative of such a function vanishes except along `e₀`. All
//! inputs are therefore radial jets: the values `Aₖ` and their first and
//! second derivatives along `e₀`.

use crate::algebra::{CurvTensor, Sym2};

/// Values and `e₀`-derivatives of the three orbit warping functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameJet {
    pub a: [f64; 3],
    pub d: [f64; 3],
    pub dd: [f64; 3],
}

type T3 = [[[f64; 4]; 4]; 4];

/// Structure constants `[eᵢ, eⱼ] = cᵢⱼᵏ eₖ`, the Levi-Civita coefficients
/// `Γᵢⱼₖ = g(∇_{eᵢ} eⱼ, eₖ)` and their `e₀`-derivatives.
#[derive(Clone, Debug)]
pub struct Connection {
    pub c: T3,
    pub dc: T3,
    pub gamma: T3,
    pub dgamma: T3,
}

const CYCLIC: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

impl Connection {
    pub fn new(jet: &FrameJet) -> Self {
        let mut c = [[[0.0; 4]; 4]; 4];
        let mut dc = [[[0.0; 4]; 4]; 4];
        let q: [f64; 3] = std::array::from_fn(|k| jet.d[k] / jet.a[k]);
        for k in 1..4 {
            let qk = q[k - 1];
            let dqk = jet.dd[k - 1] / jet.a[k - 1] - qk * qk;
            c[0][k][k] = -qk;
            c[k][0][k] = qk;
            dc[0][k][k] = -dqk;
            dc[k][0][k] = dqk;
        }
        for &(i, j, k) in &CYCLIC {
            let v = 2.0 * jet.a[k - 1] / (jet.a[i - 1] * jet.a[j - 1]);
            let dv = v * (q[k - 1] - q[i - 1] - q[j - 1]);
            c[i][j][k] = -v;
            c[j][i][k] = v;
            dc[i][j][k] = -dv;
            dc[j][i][k] = dv;
        }
        let koszul = |s: &T3| -> T3 {
            let mut g = [[[0.0; 4]; 4]; 4];
            for (i, gi) in g.iter_mut().enumerate() {
                for (j, gij) in gi.iter_mut().enumerate() {
                    for (k, gijk) in gij.iter_mut().enumerate() {
                        *gijk = 0.5 * (s[i][j][k] - s[j][k][i] + s[k][i][j]);
                    }
                }
            }
            g
        };
        let gamma = koszul(&c);
        let dgamma = koszul(&dc);
        Connection { c, dc, gamma, dgamma }
    }

    /// One component `R_{ijnk}`.
    pub fn component(&self, i: usize, j: usize, n: usize, k: usize) -> f64 {
        let g = &self.gamma;
        let dg = &self.dgamma;
        let c = &self.c;
        // g(R(eᵢ,eⱼ)eₖ, eₙ)
        let mut s = 0.0;
        if i == 0 {
            s += dg[j][k][n];
        }
        if j == 0 {
            s -= dg[i][k][n];
        }
        for m in 0..4 {
            s += g[j][k][m] * g[i][m][n] - g[i][k][m] * g[j][m][n] - c[i][j][m] * g[m][k][n];
        }
        s
    }

    /// Riemann tensor with `R_{ijij}` the sectional curvature.
    pub fn riemann(&self) -> CurvTensor {
        CurvTensor::from_fn(|i, j, n, k| self.component(i, j, n, k))
    }

    /// `|Riem|²` from the nine independent components. On Λ² the curvature
    /// operator of this ansatz only couples `e₀∧eₖ` with `eᵢ∧eⱼ`.
    pub fn riemann_norm_sq(&self) -> f64 {
        CYCLIC
            .iter()
            .map(|&(i, j, k)| {
                let a = self.component(0, k, 0, k);
                let b = self.component(i, j, i, j);
                let x = self.component(0, k, i, j);
                4.0 * (a * a + b * b + 2.0 * x * x)
            })
            .sum()
    }

    /// `|∇T|²` for a symmetric 2-tensor with frame components `t` and
    /// `e₀`-derivative `dt`.
    pub fn grad_sym2_sq(&self, t: &Sym2, dt: &Sym2) -> f64 {
        let g = &self.gamma;
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let mut v = if i == 0 { dt.get(j, k) } else { 0.0 };
                    for m in 0..4 {
                        v -= g[i][j][m] * t.get(m, k) + g[i][k][m] * t.get(j, m);
                    }
                    s += v * v;
                }
            }
        }
        s
    }

    /// `|∇T|²` for a 4-tensor.
    pub fn grad_curv_sq(&self, t: &CurvTensor, dt: &CurvTensor) -> f64 {
        let g = &self.gamma;
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        for n in 0..4 {
                            let mut v = if i == 0 { dt.get(j, k, l, n) } else { 0.0 };
                            for m in 0..4 {
                                v -= g[i][j][m] * t.get(m, k, l, n)
                                    + g[i][k][m] * t.get(j, m, l, n)
                                    + g[i][l][m] * t.get(j, k, m, n)
                                    + g[i][n][m] * t.get(j, k, l, m);
                            }
                            s += v * v;
                        }
                    }
                }
            }
        }
        s
    }
}

/// Riemann tensor of the ansatz at one radial position.
pub fn riemann(jet: &FrameJet) -> CurvTensor {
    Connection::new(jet).riemann()
}

/// Diagonal of the Ricci tensor `(Ric₀₀, Ric₁₁, Ric₂₂, Ric₃₃)`; the
/// off-diagonal frame components vanish for this ansatz.
pub fn ricci_diag(jet: &FrameJet) -> [f64; 4] {
    let [a1, a2, a3] = jet.a;
    let q: [f64; 3] = std::array::from_fn(|k| jet.d[k] / jet.a[k]);
    let p: [f64; 3] = std::array::from_fn(|k| jet.dd[k] / jet.a[k]);
    let vol2 = (a1 * a2 * a3).powi(2);
    let sq = [a1 * a1, a2 * a2, a3 * a3];
    let orbit = |k: usize, i: usize, j: usize| 2.0 * (sq[k] * sq[k] - (sq[i] - sq[j]).powi(2)) / vol2;
    [
        -(p[0] + p[1] + p[2]),
        -p[0] - q[0] * (q[1] + q[2]) + orbit(0, 1, 2),
        -p[1] - q[1] * (q[0] + q[2]) + orbit(1, 0, 2),
        -p[2] - q[2] * (q[0] + q[1]) + orbit(2, 0, 1),
    ]
}
