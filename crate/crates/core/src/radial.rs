//! Radial calculus on a uniform grid `x_i = i h`, `i = 0..n-1`, whose two
//! ends are poles of S⁴.
//!
//! Smooth invariant functions have a definite parity about both poles
//! (warping functions are odd, the lapse and curvature scalars are even), so
//! their reflections across the ends are 2(n-1)h-periodic. Derivatives are
//! taken either spectrally on that periodic extension or with 4th-order
//! central stencils whose ghost points come from the same reflection.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeScheme {
    /// Fourier differentiation of the reflected periodic extension.
    #[default]
    Spectral,
    /// 4th-order central differences with parity ghost points.
    FiniteDifference4,
}

/// First and second radial derivatives for a fixed grid size.
#[derive(Clone)]
pub struct RadialDiff {
    n: usize,
    scheme: DerivativeScheme,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RadialDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDiff").field("n", &self.n).field("scheme", &self.scheme).finish()
    }
}

impl RadialDiff {
    pub fn new(n: usize, scheme: DerivativeScheme) -> Self {
        assert!(n >= 5, "radial grid needs at least 5 nodes");
        let mut planner = FftPlanner::new();
        let m2 = 2 * (n - 1);
        RadialDiff { n, scheme, fwd: planner.plan_fft_forward(m2), inv: planner.plan_fft_inverse(m2) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    /// `(f', f'')` at every node.
    pub fn derivatives(&self, f: &[f64], parity: Parity, h: f64) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(f.len(), self.n);
        match self.scheme {
            DerivativeScheme::Spectral => self.spectral(f, parity, h),
            DerivativeScheme::FiniteDifference4 => fd4(f, parity, h),
        }
    }

    /// Derivatives of two fields of the same parity; on the spectral path
    /// both share one complex transform.
    #[allow(clippy::type_complexity)]
    pub fn derivatives_pair(
        &self,
        f: &[f64],
        g: &[f64],
        parity: Parity,
        h: f64,
    ) -> ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
        assert_eq!(f.len(), self.n);
        assert_eq!(g.len(), self.n);
        if self.scheme == DerivativeScheme::FiniteDifference4 {
            return (fd4(f, parity, h), fd4(g, parity, h));
        }
        let mut spec = self.extend(f, parity);
        let m = self.n - 1;
        let s = parity.sign();
        for i in 0..=m {
            spec[i].im = g[i];
        }
        for i in 1..m {
            spec[2 * m - i].im = s * g[i];
        }
        let (d1, d2) = self.spectral_apply(spec, h);
        let split = |d: Vec<Complex64>| -> (Vec<f64>, Vec<f64>) { (d.iter().map(|c| c.re).collect(), d.iter().map(|c| c.im).collect()) };
        let ((f1, g1), (f2, g2)) = (split(d1), split(d2));
        ((f1, f2), (g1, g2))
    }

    /// Applies `ik` and `−k²` to an extended signal; returns the first `n`
    /// samples of both results, normalised.
    fn spectral_apply(&self, mut spec: Vec<Complex64>, h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.n - 1;
        let len = 2 * m;
        let scratch_len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        self.fwd.process_with_scratch(&mut spec, &mut scratch);
        let k0 = std::f64::consts::PI / (m as f64 * h);
        let mut d1 = spec.clone();
        let mut d2 = spec;
        for j in 0..len {
            let kj = if j <= m { j as f64 } else { j as f64 - len as f64 } * k0;
            d1[j] = if j == m { Complex64::new(0.0, 0.0) } else { d1[j] * Complex64::new(0.0, kj) };
            d2[j] *= -kj * kj;
        }
        self.inv.process_with_scratch(&mut d1, &mut scratch);
        self.inv.process_with_scratch(&mut d2, &mut scratch);
        let norm = 1.0 / len as f64;
        d1.truncate(self.n);
        d2.truncate(self.n);
        for c in d1.iter_mut().chain(d2.iter_mut()) {
            *c *= norm;
        }
        (d1, d2)
    }

    fn extend(&self, f: &[f64], parity: Parity) -> Vec<Complex64> {
        let m = self.n - 1;
        let s = parity.sign();
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m];
        for i in 0..=m {
            buf[i].re = f[i];
        }
        for i in 1..m {
            buf[2 * m - i].re = s * f[i];
        }
        buf
    }

    fn spectral(&self, f: &[f64], parity: Parity, h: f64) -> (Vec<f64>, Vec<f64>) {
        let (d1, d2) = self.spectral_apply(self.extend(f, parity), h);
        (d1.iter().map(|c| c.re).collect(), d2.iter().map(|c| c.re).collect())
    }

    /// Band-limited interpolation onto a grid `factor` times finer.
    pub fn interpolate(&self, f: &[f64], parity: Parity, factor: usize) -> Vec<f64> {
        let m = self.n - 1;
        let len = 2 * m;
        let mut spec = self.extend(f, parity);
        let scratch_len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        self.fwd.process_with_scratch(&mut spec, &mut scratch);
        let big = len * factor;
        let mut padded = vec![Complex64::new(0.0, 0.0); big];
        padded[..m].copy_from_slice(&spec[..m]);
        for j in 1..m {
            padded[big - j] = spec[len - j];
        }
        // split the Nyquist coefficient symmetrically
        padded[m] = spec[m] * 0.5;
        padded[big - m] = spec[m] * 0.5;
        let inv = FftPlanner::new().plan_fft_inverse(big);
        inv.process(&mut padded);
        let norm = 1.0 / len as f64;
        padded[..=m * factor].iter().map(|c| c.re * norm).collect()
    }
}

fn ghost(f: &[f64], i: isize, parity: Parity) -> f64 {
    let m = (f.len() - 1) as isize;
    let s = parity.sign();
    if i < 0 {
        s * f[(-i) as usize]
    } else if i > m {
        s * f[(2 * m - i) as usize]
    } else {
        f[i as usize]
    }
}

fn fd4(f: &[f64], parity: Parity, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n as isize {
        let fm2 = ghost(f, i - 2, parity);
        let fm1 = ghost(f, i - 1, parity);
        let f0 = f[i as usize];
        let fp1 = ghost(f, i + 1, parity);
        let fp2 = ghost(f, i + 2, parity);
        d1[i as usize] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        d2[i as usize] = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    }
    (d1, d2)
}

/// First derivative of a field known only on the interior nodes `1..n-1`
/// (the entries at the two poles are ignored). 4th-order central stencils,
/// one-sided 4th-order stencils next to the poles. Pole entries of the
/// result are zero.
pub fn interior_d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let (lo, hi) = (1usize, n - 2);
    assert!(hi - lo >= 4, "need at least five interior nodes");
    let mut d = vec![0.0; n];
    for i in lo..=hi {
        d[i] = if i >= lo + 2 && i + 2 <= hi {
            (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h)
        } else if i == lo {
            (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4]) / (12.0 * h)
        } else if i == lo + 1 {
            (-3.0 * f[i - 1] - 10.0 * f[i] + 18.0 * f[i + 1] - 6.0 * f[i + 2] + f[i + 3]) / (12.0 * h)
        } else if i == hi {
            (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / (12.0 * h)
        } else {
            (3.0 * f[i + 1] + 10.0 * f[i] - 18.0 * f[i - 1] + 6.0 * f[i - 2] - f[i - 3]) / (12.0 * h)
        };
    }
    d
}

/// Value at a pole of an even function from its first three neighbours
/// (quadratic in `x²`).
#[inline]
pub fn even_pole_value(f1: f64, f2: f64, f3: f64) -> f64 {
    1.5 * f1 - 0.6 * f2 + 0.1 * f3
}

/// Fills `f[0]` and `f[n-1]` from the interior by [`even_pole_value`].
pub fn fill_even_poles(f: &mut [f64]) {
    let n = f.len();
    f[0] = even_pole_value(f[1], f[2], f[3]);
    f[n - 1] = even_pole_value(f[n - 2], f[n - 3], f[n - 4]);
}

/// `F_i = ∫₀^{x_i} f`, 4th order, with ghost values from the parity of `f`.
pub fn cumulative_integral(f: &[f64], parity: Parity, h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let ii = i as isize;
        let seg = -ghost(f, ii - 1, parity) + 13.0 * f[i] + 13.0 * f[i + 1] - ghost(f, ii + 2, parity);
        out[i + 1] = out[i] + h * seg / 24.0;
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    /// Composite Simpson rule (odd node count).
    #[default]
    Simpson,
    /// End-corrected trapezoid rule of Gregory type, 4th order.
    Gregory,
}

/// Plain 1-D weights for `∫₀^{(n-1)h} f dx`.
pub fn quadrature_weights(n: usize, h: f64, kind: QuadratureKind) -> Vec<f64> {
    match kind {
        QuadratureKind::Simpson => {
            assert!(n % 2 == 1 && n >= 3, "Simpson rule needs an odd node count");
            (0..n)
                .map(|i| {
                    let c = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect()
        }
        QuadratureKind::Gregory => {
            assert!(n >= 7, "Gregory rule needs at least 7 nodes");
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            let mut w = vec![h; n];
            for (k, e) in ends.iter().enumerate() {
                w[k] = e * h;
                w[n - 1 - k] = e * h;
            }
            w
        }
    }
}
