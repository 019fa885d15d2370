//! Declarative experiment runner for the `aging-core` simulators: TOML
//! configs in, tidy CSV out, plus regression comparison against closed forms.

pub mod compare;
pub mod config;
pub mod error;
pub mod results;
pub mod run;

pub use error::{HarnessError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "AGING_WORKERS";

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const COMPARISON_FAILED: u8 = 1;
    pub const ERROR: u8 = 2;
}

/// Parses a grid argument: either `x1,x2,...` or `start:stop:count` with
/// `count` evenly spaced points including both ends.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let bad = |m: &str| format!("grid {text:?}: {m}");
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, count) = rest.split_once(':').ok_or_else(|| bad("expected start:stop:count"))?;
        let start: f64 = start.trim().parse().map_err(|_| bad("start is not a number"))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad("stop is not a number"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("count is not an integer"))?;
        return match count {
            0 => Err(bad("count must be positive")),
            1 => Ok(vec![start]),
            _ => Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()),
        };
    }
    text.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad(&format!("{x:?} is not a number"))))
        .collect()
}
