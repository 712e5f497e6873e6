//! Sweep grids: `v1,v2,...`, `lo:hi:n` (linear) or `lo:hi[:n]:log`.

use std::fmt;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Points of a logarithmic grid whose count is not given.
pub const DEFAULT_LOG_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    Linear { lo: f64, hi: f64, n: usize },
    Log { lo: f64, hi: f64, n: usize },
}

impl Default for Grid {
    fn default() -> Self {
        Grid::List(Vec::new())
    }
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let spaced = |lo: f64, hi: f64, n: usize, map: &dyn Fn(f64) -> f64| -> Vec<f64> {
            if n == 1 {
                return vec![lo];
            }
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => map(i as f64 / (n - 1) as f64),
                })
                .collect()
        };
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Linear { lo, hi, n } => spaced(lo, hi, n, &|t| lo + (hi - lo) * t),
            Grid::Log { lo, hi, n } => {
                let (a, b) = (lo.ln(), hi.ln());
                spaced(lo, hi, n, &|t| (a + (b - a) * t).exp())
            }
        }
    }

    /// Values, rejecting empty or non-increasing grids.
    pub fn checked_values(&self) -> CliResult<Vec<f64>> {
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::Invalid("sweep grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Invalid(format!(
                "sweep grid `{self}` must be finite and strictly increasing"
            )));
        }
        Ok(v)
    }
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Invalid(format!("malformed grid `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let count = |t: &str| match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(bad()),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let grid = match parts.as_slice() {
            [single] => Grid::List(single.split(',').map(num).collect::<CliResult<_>>()?),
            [lo, hi, n] if n.trim() == "log" => Grid::Log {
                lo: num(lo)?,
                hi: num(hi)?,
                n: DEFAULT_LOG_POINTS,
            },
            [lo, hi, n] => Grid::Linear {
                lo: num(lo)?,
                hi: num(hi)?,
                n: count(n)?,
            },
            [lo, hi, n, kind] if kind.trim() == "log" => Grid::Log {
                lo: num(lo)?,
                hi: num(hi)?,
                n: count(n)?,
            },
            _ => return Err(bad()),
        };
        if let Grid::Log { lo, .. } = grid {
            if lo <= 0.0 {
                return Err(CliError::Invalid(format!(
                    "log grid `{s}` must start above zero"
                )));
            }
        }
        grid.checked_values()?;
        Ok(grid)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            Grid::Linear { lo, hi, n } => write!(f, "{lo}:{hi}:{n}"),
            Grid::Log { lo, hi, n } => write!(f, "{lo}:{hi}:{n}:log"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0.1,0.3".parse::<Grid>().unwrap().values(), vec![0.1, 0.3]);
        assert_eq!(
            "0:1:5".parse::<Grid>().unwrap().values(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let log = "0.01:5:log".parse::<Grid>().unwrap().values();
        assert_eq!(log.len(), DEFAULT_LOG_POINTS);
        assert_eq!((log[0], log[49]), (0.01, 5.0));
        let ratio = log[1] / log[0];
        assert!(log
            .windows(2)
            .all(|w| (w[1] / w[0] / ratio - 1.0).abs() < 1e-9));
        assert!(("0.1:10:3:log".parse::<Grid>().unwrap().values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_grids() {
        for bad in [
            "",
            "a,b",
            "1:0:3",
            "0:1:0",
            "0:1:4:lin",
            "0:1:log",
            "0.2,0.1",
        ] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["0.1,0.25", "0.05:1:20", "0.01:5:60:log"] {
            let g: Grid = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
            assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
        }
    }
}
