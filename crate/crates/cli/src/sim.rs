use std::path::PathBuf;

use clap::{Args, Subcommand};
use tte_core::theory_sim::{
    library_growth, retrieval_success_curve, simulate_decomposition_gain, DecompositionSimConfig,
    Gaussian, GrowthParams, JointModel, RetrievalNoiseModel,
};

use crate::error::{usage, CliError};
use crate::output::{csv_writer, emit, finish_csv};

#[derive(Args, Debug)]
pub struct OutArg {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SimCommand {
    /// Library size under constant generation and pruning rates
    /// (columns t, L_numeric, L_closed).
    Growth {
        #[arg(long, default_value_t = 10.0)]
        lambda_g: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda_p: f64,
        #[arg(long, default_value_t = 500.0)]
        k_cap: f64,
        #[arg(long, default_value_t = 0.0)]
        l0: f64,
        /// Defaults to 20 time constants.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Emit every n-th integration step.
        #[arg(long, default_value_t = 20)]
        every: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Top-1 retrieval success against library size (columns N, p_mc, p_quad).
    Retrieval {
        #[arg(long, default_value_t = 0.7)]
        relevant_mean: f64,
        #[arg(long, default_value_t = 0.1)]
        relevant_sd: f64,
        #[arg(long, default_value_t = 0.5)]
        noise_mean: f64,
        #[arg(long, default_value_t = 0.15)]
        noise_sd: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        n: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Reuse of atomic tools against monolithic ones
    /// (columns atomic_sum, k_times_mono, gap, gap_std_error).
    Decomposition {
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// One marginal per operation, or a single value for all.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        marginals: Vec<f64>,
        /// Use the all-or-subset model with this probability of a partial
        /// query instead of independent operations.
        #[arg(long)]
        p_partial: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn row(w: &mut csv::Writer<Vec<u8>>, fields: &[String]) {
    w.write_record(fields).expect("in-memory csv write");
}

pub fn cmd_sim(cmd: SimCommand) -> Result<(), CliError> {
    match cmd {
        SimCommand::Growth {
            lambda_g,
            lambda_p,
            k_cap,
            l0,
            horizon,
            dt,
            every,
            out,
        } => {
            if every == 0 {
                return Err(usage("--every must be at least 1"));
            }
            let horizon = horizon.unwrap_or(20.0 / (lambda_g / k_cap + lambda_p));
            let p = GrowthParams {
                lambda_g,
                lambda_p,
                k_cap,
                l0,
                horizon,
                dt,
            };
            let traj = library_growth(&p).map_err(usage)?;
            let mut w = csv_writer();
            row(&mut w, &["t".into(), "L_numeric".into(), "L_closed".into()]);
            let last = traj.points.len() - 1;
            for (i, pt) in traj.points.iter().enumerate() {
                if i % every == 0 || i == last {
                    row(
                        &mut w,
                        &[
                            pt.t.to_string(),
                            pt.l_numeric.to_string(),
                            pt.l_closed.to_string(),
                        ],
                    );
                }
            }
            emit(out.out.as_deref(), &finish_csv(w))
        }
        SimCommand::Retrieval {
            relevant_mean,
            relevant_sd,
            noise_mean,
            noise_sd,
            n,
            samples,
            seed,
            out,
        } => {
            let model = RetrievalNoiseModel {
                relevant: Gaussian {
                    mean: relevant_mean,
                    stddev: relevant_sd,
                },
                noise: Gaussian {
                    mean: noise_mean,
                    stddev: noise_sd,
                },
                n_values: n,
                samples,
                seed,
            };
            let curve = retrieval_success_curve(&model).map_err(usage)?;
            let mut w = csv_writer();
            row(&mut w, &["N".into(), "p_mc".into(), "p_quad".into()]);
            for pt in curve {
                row(
                    &mut w,
                    &[pt.n.to_string(), pt.p_mc.to_string(), pt.p_quad.to_string()],
                );
            }
            emit(out.out.as_deref(), &finish_csv(w))
        }
        SimCommand::Decomposition {
            k,
            marginals,
            p_partial,
            queries,
            seed,
            out,
        } => {
            let op_marginals = if marginals.len() == 1 {
                vec![marginals[0]; k]
            } else {
                marginals
            };
            let cfg = DecompositionSimConfig {
                k,
                op_marginals,
                joint_model: p_partial.map_or(JointModel::Independent, |p_partial| {
                    JointModel::AllOrSubset { p_partial }
                }),
                num_queries: queries,
                seed,
            };
            let g = simulate_decomposition_gain(&cfg).map_err(usage)?;
            let mut w = csv_writer();
            row(
                &mut w,
                &[
                    "atomic_sum".into(),
                    "k_times_mono".into(),
                    "gap".into(),
                    "gap_std_error".into(),
                ],
            );
            row(
                &mut w,
                &[
                    g.atomic_sum.to_string(),
                    g.k_times_mono.to_string(),
                    g.gap.to_string(),
                    g.gap_std_error.to_string(),
                ],
            );
            emit(out.out.as_deref(), &finish_csv(w))
        }
    }
}
