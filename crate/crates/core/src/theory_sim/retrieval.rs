use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{invalid, SimError};

/// Integration range half-width around each score distribution.
pub const QUAD_HALF_WIDTH_SIGMAS: f64 = 8.0;
const QUAD_REL_TOL: f64 = 1e-8;
const QUAD_ABS_FLOOR: f64 = 1e-13;
const QUAD_PANELS: usize = 64;
const QUAD_MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub stddev: f64,
}

impl Gaussian {
    fn dist(&self) -> Normal {
        Normal::new(self.mean, self.stddev).expect("validated gaussian")
    }
}

/// Similarity of the relevant tool (`relevant`) against each of `N - 1`
/// distractors (`noise`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalNoiseModel {
    pub relevant: Gaussian,
    pub noise: Gaussian,
    pub n_values: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
}

impl RetrievalNoiseModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for g in [self.relevant, self.noise] {
            if !(g.stddev > 0.0 && g.stddev.is_finite() && g.mean.is_finite()) {
                return invalid("gaussians need a finite mean and a positive stddev");
            }
        }
        if self.n_values.contains(&0) {
            return invalid("library sizes must be at least 1");
        }
        if self.samples == 0 {
            return invalid("samples must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalPoint {
    pub n: u64,
    pub p_mc: f64,
    pub p_quad: f64,
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `eps`,
/// started from `panels` equal sub-intervals so narrow peaks are not missed.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let per_panel = eps / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            simpson_rec(
                &f,
                lo,
                hi,
                fa,
                fm,
                fb,
                simpson(fa, fm, fb, lo, hi),
                per_panel,
                QUAD_MAX_DEPTH,
            )
        })
        .sum()
}

/// `P_N = ∫ F_n(s)^(N-1) f_r(s) ds`, the chance the relevant tool outscores
/// all `N - 1` distractors.
pub fn success_probability_quad(relevant: Gaussian, noise: Gaussian, n: u64) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let (fr, fnoise) = (relevant.dist(), noise.dist());
    let w = QUAD_HALF_WIDTH_SIGMAS;
    let lo = (relevant.mean - w * relevant.stddev).min(noise.mean - w * noise.stddev);
    let hi = (relevant.mean + w * relevant.stddev).max(noise.mean + w * noise.stddev);
    let power = (n - 1) as i32;
    let integrand = |s: f64| fnoise.cdf(s).powi(power) * fr.pdf(s);
    // A crude first pass sets the scale for the relative tolerance.
    let rough = adaptive_simpson(integrand, lo, hi, 1e-6, QUAD_PANELS);
    let eps = (QUAD_REL_TOL * rough.abs()).max(QUAD_ABS_FLOOR);
    adaptive_simpson(integrand, lo, hi, eps, QUAD_PANELS)
}

fn seed_for(seed: u64, n: u64) -> u64 {
    seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Monte Carlo estimate: success iff the relevant score strictly beats
/// every distractor.
pub fn success_probability_mc(
    relevant: Gaussian,
    noise: Gaussian,
    n: u64,
    samples: usize,
    seed: u64,
) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, n));
    let r = NormalSampler::new(relevant.mean, relevant.stddev).expect("validated gaussian");
    let d = NormalSampler::new(noise.mean, noise.stddev).expect("validated gaussian");
    let mut wins = 0usize;
    for _ in 0..samples {
        let s = r.sample(&mut rng);
        if (1..n).all(|_| d.sample(&mut rng) < s) {
            wins += 1;
        }
    }
    wins as f64 / samples as f64
}

pub fn retrieval_success_curve(
    model: &RetrievalNoiseModel,
) -> Result<Vec<RetrievalPoint>, SimError> {
    model.validate()?;
    Ok(model
        .n_values
        .iter()
        .map(|&n| RetrievalPoint {
            n,
            p_mc: success_probability_mc(model.relevant, model.noise, n, model.samples, model.seed),
            p_quad: success_probability_quad(model.relevant, model.noise, n),
        })
        .collect())
}
