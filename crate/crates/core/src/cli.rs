use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use loopinv::config::{
    default_solver_path, DEFAULT_CONFLICT_GROUP_SIZE, DEFAULT_MAX_FEATURE_SIZE, DEFAULT_NUM_STATES,
    DEFAULT_RECORD_INSTANCES, DEFAULT_STEPS_ON_RESTART, DEFAULT_TOTAL_TIMEOUT_S,
};
use loopinv::Config;

#[derive(Debug, Parser)]
#[command(name = "loopinv", version, about = "Loop invariant synthesis for SyGuS-INV problems")]
pub struct Cli {
    /// Log progress to standard error
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize an invariant and print it as a define-fun
    Solve {
        /// SyGuS-INV problem file
        path: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Check an invariant against a problem
    Check {
        /// SyGuS-INV problem file
        path: PathBuf,
        /// File holding the candidate define-fun
        invariant: PathBuf,
        /// Solver binary [default: $SOLVER_PATH or z3]
        #[arg(long)]
        solver_path: Option<PathBuf>,
        /// Per-query solver timeout in milliseconds
        #[arg(long, default_value_t = 10_000)]
        query_timeout: u64,
    },
}

#[derive(Debug, Args)]
pub struct SolveOpts {
    /// States sampled before learning starts
    #[arg(long, default_value_t = DEFAULT_NUM_STATES)]
    pub states: usize,
    /// States sampled from each precondition-check counterexample
    #[arg(long, default_value_t = DEFAULT_STEPS_ON_RESTART)]
    pub steps_on_restart: usize,
    /// Cap on each side of a conflict group
    #[arg(long, default_value_t = DEFAULT_CONFLICT_GROUP_SIZE)]
    pub conflict_group_size: usize,
    /// Parallel sampling instances
    #[arg(long, default_value_t = DEFAULT_RECORD_INSTANCES)]
    pub record_instances: usize,
    /// Seed for one sampling instance (repeatable, in instance order)
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Node-count bound on synthesized features
    #[arg(long, default_value_t = DEFAULT_MAX_FEATURE_SIZE)]
    pub max_feature_size: usize,
    /// Solver binary [default: $SOLVER_PATH or z3]
    #[arg(long)]
    pub solver_path: Option<PathBuf>,
    /// Total time limit in seconds
    #[arg(long, default_value_t = DEFAULT_TOTAL_TIMEOUT_S)]
    pub timeout: u64,
}

impl SolveOpts {
    pub fn config(&self) -> Result<Config, String> {
        let mut cfg = Config {
            num_states: self.states,
            num_steps_on_restart: self.steps_on_restart,
            conflict_group_size: self.conflict_group_size,
            record_instances: self.record_instances,
            max_feature_size: self.max_feature_size,
            solver_path: self.solver_path.clone().unwrap_or_else(default_solver_path),
            total_timeout: Duration::from_secs(self.timeout),
            ..Config::default()
        };
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
