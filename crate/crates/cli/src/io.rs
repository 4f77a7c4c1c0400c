//! Input loading, grid parsing and canonical report output.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ghcert_core::foliation::{leaf_space, LeafSpaceMode};
use ghcert_core::{FiniteMetricSpace, FoliatedSample, Metric};
use serde::Serialize;
use serde_json::{json, Value};

/// Any metric input: a plain finite metric space or a foliated sample.
pub enum Space {
    Dense(FiniteMetricSpace),
    Foliated(Box<FoliatedSample>),
}

impl Metric for Space {
    fn len(&self) -> usize {
        match self {
            Space::Dense(d) => d.len(),
            Space::Foliated(f) => f.len(),
        }
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            Space::Dense(d) => d.dist(i, j),
            Space::Foliated(f) => f.metric().dist(i, j),
        }
    }
}

impl Space {
    pub fn kind(&self) -> &'static str {
        match self {
            Space::Dense(_) => "finite-metric-space",
            Space::Foliated(_) => "foliated-sample",
        }
    }

    /// For a foliated sample, its chain-infimum leaf space; otherwise the
    /// space itself.
    pub fn into_leaf_space(self) -> Result<FiniteMetricSpace> {
        match self {
            Space::Dense(d) => Ok(d),
            Space::Foliated(f) => Ok(leaf_space(&f, LeafSpaceMode::ChainInfimum)?.space),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Loads `.csv` (lower-triangular matrix) or JSON (metric space or
/// foliated sample, told apart by the `leaf_id` key).
pub fn load_space(path: &Path) -> Result<Space> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Ok(Space::Dense(FiniteMetricSpace::from_csv(&text)?));
    }
    let value: Value = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    if value.get("leaf_id").is_some() {
        Ok(Space::Foliated(Box::new(FoliatedSample::from_json(&text)?)))
    } else {
        Ok(Space::Dense(FiniteMetricSpace::from_json(&text)?))
    }
}

pub fn load_sample(path: &Path) -> Result<FoliatedSample> {
    match load_space(path)? {
        Space::Foliated(f) => Ok(*f),
        Space::Dense(_) => bail!("{} is not a foliated sample (no leaf_id)", path.display()),
    }
}

/// `start:step:stop` (inclusive, evaluated as `start + i·step`) or a
/// comma-separated list. The result must be positive and increasing.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) =
                (start.trim().parse()?, step.trim().parse()?, stop.trim().parse()?);
            if !(step > 0.0) || !(stop >= start) {
                bail!("grid {s}: need step > 0 and stop ≥ start");
            }
            let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
            if count > 1_000_000 {
                bail!("grid {s} has more than 10^6 points");
            }
            (0..count).map(|i| start + step * i as f64).collect()
        }
        [_] => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad grid value {t:?}")))
            .collect::<Result<Vec<_>>>()?,
        _ => bail!("grid {s}: expected start:step:stop or a comma list"),
    };
    check_grid(&grid)?;
    Ok(grid)
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!("empty grid");
    }
    if grid.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        bail!("grid values must be positive and finite");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("grid must be strictly increasing");
    }
    Ok(())
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',').map(|t| t.trim().parse::<T>().with_context(|| format!("bad list value {t:?}"))).collect()
}

/// Sorted-key JSON with shortest round-trip floats, newline-terminated.
pub fn canonical<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Wraps a result with the tool name, version, command and resolved
/// configuration.
pub fn envelope<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<Value> {
    Ok(json!({
        "tool": "ghcert",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": serde_json::to_value(config)?,
        "result": serde_json::to_value(result)?,
    }))
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

pub fn emit_report(path: Option<&Path>, report: &Value) -> Result<()> {
    emit(path, &canonical(report)?)
}
