use std::path::PathBuf;
use std::time::Duration;

/// Tunables for one synthesis run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Total number of states collected by the initial sampling phase.
    pub num_states: usize,
    /// Cap on each side of a conflict group handed to the feature synthesizer.
    pub conflict_group_size: usize,
    /// States sampled from each precondition-check counterexample.
    pub num_steps_on_restart: usize,
    /// Parallel sampling instances, each with its own solver and seed.
    pub record_instances: usize,
    /// One seed per sampling instance; missing seeds are derived from the last one.
    pub seeds: Vec<u64>,
    /// Node-count bound on synthesized features.
    pub max_feature_size: usize,
    pub solver_path: PathBuf,
    pub query_timeout: Duration,
    pub record_timeout: Duration,
    pub total_timeout: Duration,
    pub max_restarts: usize,
}

pub const DEFAULT_NUM_STATES: usize = 512;
pub const DEFAULT_CONFLICT_GROUP_SIZE: usize = 64;
pub const DEFAULT_STEPS_ON_RESTART: usize = 256;
pub const DEFAULT_RECORD_INSTANCES: usize = 2;
pub const DEFAULT_MAX_FEATURE_SIZE: usize = 7;
pub const DEFAULT_QUERY_TIMEOUT_MS: u64 = 2000;
pub const DEFAULT_RECORD_TIMEOUT_S: u64 = 5;
pub const DEFAULT_TOTAL_TIMEOUT_S: u64 = 60;
pub const DEFAULT_MAX_RESTARTS: usize = 50;

impl Default for Config {
    fn default() -> Self {
        Config {
            num_states: DEFAULT_NUM_STATES,
            conflict_group_size: DEFAULT_CONFLICT_GROUP_SIZE,
            num_steps_on_restart: DEFAULT_STEPS_ON_RESTART,
            record_instances: DEFAULT_RECORD_INSTANCES,
            seeds: vec![1, 2],
            max_feature_size: DEFAULT_MAX_FEATURE_SIZE,
            solver_path: default_solver_path(),
            query_timeout: Duration::from_millis(DEFAULT_QUERY_TIMEOUT_MS),
            record_timeout: Duration::from_secs(DEFAULT_RECORD_TIMEOUT_S),
            total_timeout: Duration::from_secs(DEFAULT_TOTAL_TIMEOUT_S),
            max_restarts: DEFAULT_MAX_RESTARTS,
        }
    }
}

/// `$SOLVER_PATH`, falling back to `z3` on the search path.
pub fn default_solver_path() -> PathBuf {
    std::env::var_os("SOLVER_PATH")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("z3"))
}

impl Config {
    /// Seed for sampling instance `i`.
    pub fn seed(&self, i: usize) -> u64 {
        match self.seeds.get(i) {
            Some(s) => *s,
            None => {
                let last = self.seeds.last().copied().unwrap_or(0);
                last.wrapping_add((i + 1 - self.seeds.len()) as u64)
            }
        }
    }

    /// Seed for the inference session's random completions.
    pub fn infer_seed(&self) -> u64 {
        self.seed(0) ^ 0x9e37_79b9_7f4a_7c15
    }

    pub fn validate(&self) -> Result<(), String> {
        let counts = [
            ("states", self.num_states),
            ("conflict-group-size", self.conflict_group_size),
            ("steps-on-restart", self.num_steps_on_restart),
            ("record-instances", self.record_instances),
            ("max-feature-size", self.max_feature_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(format!("--{name} must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_extend_past_given_list() {
        let c = Config {
            seeds: vec![7],
            ..Config::default()
        };
        assert_eq!(c.seed(0), 7);
        assert_eq!(c.seed(1), 8);
        assert_eq!(c.seed(2), 9);
    }

    #[test]
    fn zero_counts_rejected() {
        let c = Config {
            num_states: 0,
            ..Config::default()
        };
        assert!(c.validate().is_err());
        assert!(Config::default().validate().is_ok());
    }
}
