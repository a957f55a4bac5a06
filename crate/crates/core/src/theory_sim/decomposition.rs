use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, SimError};

/// How the set of operations a query needs is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JointModel {
    /// Each operation is needed independently with its marginal.
    Independent,
    /// With probability `1 - p_partial` a query needs every operation;
    /// otherwise it needs a strict subset drawn from the marginals.
    AllOrSubset { p_partial: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSimConfig {
    pub k: usize,
    pub op_marginals: Vec<f64>,
    pub joint_model: JointModel,
    pub num_queries: usize,
    pub seed: u64,
}

impl DecompositionSimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.k == 0 {
            return invalid("k must be at least 1");
        }
        if self.op_marginals.len() != self.k {
            return invalid(format!(
                "expected {} marginals, got {}",
                self.k,
                self.op_marginals.len()
            ));
        }
        if self.op_marginals.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return invalid("marginals must lie in [0, 1]");
        }
        if let JointModel::AllOrSubset { p_partial } = self.joint_model {
            if !(0.0..=1.0).contains(&p_partial) {
                return invalid("p_partial must lie in [0, 1]");
            }
        }
        if self.num_queries == 0 {
            return invalid("num_queries must be at least 1");
        }
        Ok(())
    }
}

/// Reuse totals over all queries. `gap_std_error` is the Monte Carlo
/// standard error of `gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionGain {
    pub atomic_sum: f64,
    pub k_times_mono: f64,
    pub gap: f64,
    pub gap_std_error: f64,
}

const MAX_SUBSET_DRAWS: usize = 64;

fn draw_independent(marginals: &[f64], rng: &mut ChaCha8Rng, needed: &mut [bool]) {
    for (slot, &p) in needed.iter_mut().zip(marginals) {
        *slot = rng.random::<f64>() < p;
    }
}

fn draw_query(cfg: &DecompositionSimConfig, rng: &mut ChaCha8Rng, needed: &mut [bool]) {
    match cfg.joint_model {
        JointModel::Independent => draw_independent(&cfg.op_marginals, rng, needed),
        JointModel::AllOrSubset { p_partial } => {
            if rng.random::<f64>() >= p_partial {
                needed.fill(true);
                return;
            }
            for _ in 0..MAX_SUBSET_DRAWS {
                draw_independent(&cfg.op_marginals, rng, needed);
                if needed.iter().any(|n| !n) {
                    return;
                }
            }
            // Marginals near 1 rarely leave anything out; drop one op at random.
            needed.fill(true);
            let drop = rng.random_range(0..needed.len());
            needed[drop] = false;
        }
    }
}

/// Counts per-operation reuse (atomic tools) against whole-query reuse (a
/// monolithic tool that only fits queries needing every operation).
pub fn simulate_decomposition_gain(
    cfg: &DecompositionSimConfig,
) -> Result<DecompositionGain, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut needed = vec![false; cfg.k];
    let k = cfg.k as f64;
    let (mut atomic, mut mono) = (0.0, 0.0);
    let (mut sum_d, mut sum_d2) = (0.0, 0.0);
    for _ in 0..cfg.num_queries {
        draw_query(cfg, &mut rng, &mut needed);
        let a = needed.iter().filter(|n| **n).count() as f64;
        let m = if needed.iter().all(|n| *n) { 1.0 } else { 0.0 };
        atomic += a;
        mono += m;
        let d = a - k * m;
        sum_d += d;
        sum_d2 += d * d;
    }
    let n = cfg.num_queries as f64;
    let mean = sum_d / n;
    let var = if cfg.num_queries > 1 {
        ((sum_d2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(DecompositionGain {
        atomic_sum: atomic,
        k_times_mono: k * mono,
        gap: atomic - k * mono,
        gap_std_error: (n * var).sqrt(),
    })
}
