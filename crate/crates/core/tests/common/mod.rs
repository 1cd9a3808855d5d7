#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci4::ansatz::{ConformalProfile, Profile, SquashedProfile};

/// `Σₖ cₖ sin²u cos(ku)`, which is even about both poles and vanishes there
/// to second order.
pub fn modes(c: &[f64], u: f64) -> f64 {
    c.iter().enumerate().map(|(k, ck)| ck * u.sin().powi(2) * (k as f64 * u).cos()).sum()
}

pub fn random_squashed(rng: &mut ChaCha8Rng, n: usize) -> SquashedProfile {
    let rho = rng.random_range(0.5..2.0);
    let ca: Vec<f64> = (0..4).map(|_| rng.random_range(-0.12..0.12)).collect();
    let cb: Vec<f64> = (0..4).map(|_| rng.random_range(-0.12..0.12)).collect();
    let len = std::f64::consts::PI * rho;
    SquashedProfile::from_fn(
        n,
        len,
        move |r| rho * (r / rho).sin() * (1.0 + modes(&ca, r / rho)),
        move |r| rho * (r / rho).sin() * (1.0 + modes(&cb, r / rho)),
    )
    .unwrap()
}

pub fn random_conformal(rng: &mut ChaCha8Rng, n: usize) -> ConformalProfile {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.15..0.15)).collect();
    let shift = rng.random_range(-0.5..0.5);
    ConformalProfile::from_fn(n, move |t| {
        shift + c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * t).cos()).sum::<f64>()
    })
    .unwrap()
}

/// Ten squashed and ten conformal profiles from a fixed seed.
pub fn corpus(n: usize) -> Vec<Profile> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    let mut out: Vec<Profile> = Vec::new();
    for _ in 0..10 {
        out.push(random_squashed(&mut rng, n).into());
        out.push(random_conformal(&mut rng, n).into());
    }
    out
}
