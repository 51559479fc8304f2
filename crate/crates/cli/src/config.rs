//! Harness configuration: defaults, flat key-value config files, environment
//! and CLI-flag precedence (flags > file > environment > defaults).

use std::path::Path;

/// Output format for rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Sampling policy: grids at most this large are swept exhaustively; larger
/// ones draw `random_samples` seeded points.
#[derive(Debug, Clone, Copy)]
pub struct SamplePolicy {
    pub exhaustive_threshold: u64,
    pub random_samples: u64,
}

/// Full sweep/verify configuration. The seed pins every randomized choice;
/// the budget caps estimated summand evaluations.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Restrict the default grid to these primes (empty = suite default).
    pub primes: Vec<u64>,
    /// Restrict to these exponents n (empty = suite default).
    pub n_values: Vec<u32>,
    /// Restrict to these r (empty = suite default).
    pub r_values: Vec<u32>,
    /// Restrict the auxiliary moduli c (empty = suite default).
    pub c_values: Vec<u64>,
    /// Divisor policy for d | c: all divisors or just d = 1.
    pub all_divisors: bool,
    pub sample_policy: SamplePolicy,
    pub seed: u64,
    pub budget: u64,
    /// Absolute tolerance override; `None` keeps each check's own default.
    pub tolerance: Option<f64>,
    pub workers: usize,
    pub format: Format,
}

/// Environment variable overriding the default budget.
pub const BUDGET_ENV: &str = "PADIC_EXPSUMS_BUDGET";

pub const DEFAULT_VERIFY_BUDGET: u64 = 10_000_000_000;
pub const DEFAULT_SWEEP_BUDGET: u64 = 100_000_000;

impl SweepConfig {
    /// Defaults for verify commands (larger budget: the exhaustive suites are
    /// sized by their pinned grids).
    pub fn verify_defaults() -> Self {
        Self::defaults_with_budget(DEFAULT_VERIFY_BUDGET)
    }

    /// Defaults for measurement sweeps.
    pub fn sweep_defaults() -> Self {
        Self::defaults_with_budget(DEFAULT_SWEEP_BUDGET)
    }

    fn defaults_with_budget(budget: u64) -> Self {
        let budget = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(budget);
        Self {
            primes: Vec::new(),
            n_values: Vec::new(),
            r_values: Vec::new(),
            c_values: Vec::new(),
            all_divisors: true,
            sample_policy: SamplePolicy { exhaustive_threshold: 100_000, random_samples: 1000 },
            seed: 0,
            budget,
            tolerance: None,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            format: Format::Csv,
        }
    }

    /// Merge a flat `key = value` config file (lower precedence than flags).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected 'key = value'", path.display(), lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| format!("{}:{}: bad {key}: {e}", path.display(), lineno + 1);
            match key {
                "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
                "budget" => self.budget = value.parse().map_err(|e| bad(&e))?,
                "tolerance" => self.tolerance = Some(value.parse().map_err(|e| bad(&e))?),
                "workers" => self.workers = value.parse().map_err(|e| bad(&e))?,
                "format" => self.format = value.parse().map_err(|e| bad(&e))?,
                "samples" => self.sample_policy.random_samples = value.parse().map_err(|e| bad(&e))?,
                "primes" => self.primes = parse_list(value).map_err(|e| bad(&e))?,
                "n" => self.n_values = parse_list(value).map_err(|e| bad(&e))?,
                "r" => self.r_values = parse_list(value).map_err(|e| bad(&e))?,
                "c" => self.c_values = parse_list(value).map_err(|e| bad(&e))?,
                "all_divisors" => self.all_divisors = value.parse().map_err(|e| bad(&e))?,
                other => return Err(format!("{}:{}: unknown key '{other}'", path.display(), lineno + 1)),
            }
        }
        Ok(())
    }

    /// Keep only grid values passing the restriction lists (empty = keep all).
    pub fn keep_p(&self, p: u64) -> bool {
        self.primes.is_empty() || self.primes.contains(&p)
    }

    pub fn keep_n(&self, n: u32) -> bool {
        self.n_values.is_empty() || self.n_values.contains(&n)
    }

    pub fn keep_r(&self, r: u32) -> bool {
        self.r_values.is_empty() || self.r_values.contains(&r)
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| e.to_string()))
        .collect()
}
