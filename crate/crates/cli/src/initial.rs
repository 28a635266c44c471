//! Initial-condition spellings.
//!
//! Dispersers `u0`:
//! - `constant(v)`
//! - `cosine-bump(amplitude, modes)`: `amplitude (1 + cos(modes pi x / L)) / 2`
//! - `equilibrium(path)`: the `x,u` file written by the `equilibrium` command
//! - `eigenfunction(scale)`: `scale * phi`, the max-normalized principal eigenvector
//!
//! Sedentary `w0`:
//! - `constant(v)`
//! - `exp-decay(rate)` or `exp-decay(rate, amplitude)`: `amplitude exp(-rate a)`
//! - `file(path)`: an `x,a,w` file in the snapshot layout

use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use hybridpop::rates::{ModelParams, SpatialField};
use hybridpop::solver::AgeField;
use hybridpop::spectral::Spectral;
use hybridpop::Discretization;

use crate::config::R0Config;

#[derive(Debug, Clone, PartialEq)]
pub enum DisperserInit {
    Constant(f64),
    CosineBump { amplitude: f64, modes: u32 },
    Equilibrium(String),
    Eigenfunction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SedentaryInit {
    Constant(f64),
    ExpDecay { rate: f64, amplitude: f64 },
    File(String),
}

fn call(s: &str) -> Result<(&str, &str)> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| anyhow!("`{s}`: expected name(arguments)"))?;
    ensure!(s.ends_with(')'), "`{s}`: missing closing parenthesis");
    Ok((s[..open].trim(), s[open + 1..s.len() - 1].trim()))
}

fn nums(spelling: &str, args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().with_context(|| format!("`{spelling}`: `{}` is not a number", t.trim()))?;
            ensure!(v.is_finite(), "`{spelling}`: `{v}` is not finite");
            Ok(v)
        })
        .collect()
}

fn nonnegative(spelling: &str, v: f64) -> Result<f64> {
    ensure!(v >= 0.0, "`{spelling}`: initial densities must be nonnegative");
    Ok(v)
}

impl std::str::FromStr for DisperserInit {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = call(s)?;
        match name {
            "constant" => match nums(s, args)?[..] {
                [v] => Ok(Self::Constant(nonnegative(s, v)?)),
                _ => bail!("`{s}`: constant takes one value"),
            },
            "cosine-bump" => match nums(s, args)?[..] {
                [amplitude, modes] if modes >= 0.0 && modes.fract() == 0.0 => Ok(Self::CosineBump {
                    amplitude: nonnegative(s, amplitude)?,
                    modes: modes as u32,
                }),
                _ => bail!("`{s}`: cosine-bump takes an amplitude and a whole number of modes"),
            },
            "equilibrium" if !args.is_empty() => Ok(Self::Equilibrium(args.to_string())),
            "eigenfunction" => match nums(s, args)?[..] {
                [v] => Ok(Self::Eigenfunction(nonnegative(s, v)?)),
                _ => bail!("`{s}`: eigenfunction takes one scale"),
            },
            _ => bail!("`{s}`: expected constant, cosine-bump, equilibrium or eigenfunction"),
        }
    }
}

impl std::str::FromStr for SedentaryInit {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = call(s)?;
        match name {
            "constant" => match nums(s, args)?[..] {
                [v] => Ok(Self::Constant(nonnegative(s, v)?)),
                _ => bail!("`{s}`: constant takes one value"),
            },
            "exp-decay" => match nums(s, args)?[..] {
                [rate] => Ok(Self::ExpDecay { rate, amplitude: 1.0 }),
                [rate, amplitude] => Ok(Self::ExpDecay {
                    rate,
                    amplitude: nonnegative(s, amplitude)?,
                }),
                _ => bail!("`{s}`: exp-decay takes a rate and an optional amplitude"),
            },
            "file" if !args.is_empty() => Ok(Self::File(args.to_string())),
            _ => bail!("`{s}`: expected constant, exp-decay or file"),
        }
    }
}

/// Makes a relative path inside a file-reading spelling relative to `base`.
pub fn rebase(spelling: &str, base: &Path) -> String {
    match call(spelling) {
        Ok((name @ ("equilibrium" | "file"), path)) if Path::new(path).is_relative() && !path.is_empty() => {
            format!("{name}({})", base.join(path).display())
        }
        _ => spelling.to_string(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn read_table(path: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {path}"))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{path}: row {}", i + 1))?;
        ensure!(rec.len() == columns, "{path}: row {} has {} columns, expected {columns}", i + 1, rec.len());
        rows.push(
            rec.iter()
                .map(|f| f.parse::<f64>().with_context(|| format!("{path}: `{f}` is not a number")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(rows)
}

pub fn disperser(
    init: &DisperserInit,
    params: &ModelParams,
    grid: &Discretization,
    spectral: &R0Config,
) -> Result<SpatialField> {
    let n = grid.n_x;
    Ok(match init {
        DisperserInit::Constant(v) => SpatialField::constant(n, *v),
        DisperserInit::CosineBump { amplitude, modes } => SpatialField::new(
            (0..n)
                .map(|i| {
                    let arg = *modes as f64 * std::f64::consts::PI * grid.x(i) / grid.length;
                    amplitude * 0.5 * (1.0 + arg.cos())
                })
                .collect(),
        )?,
        DisperserInit::Equilibrium(path) => {
            let rows = read_table(path, 2)?;
            ensure!(rows.len() == n, "{path}: {} rows for a grid of {n} nodes", rows.len());
            for (i, r) in rows.iter().enumerate() {
                ensure!(close(r[0], grid.x(i)), "{path}: x = {} does not match grid node {}", r[0], grid.x(i));
                ensure!(r[1] >= 0.0, "{path}: negative density {}", r[1]);
            }
            SpatialField::new(rows.into_iter().map(|r| r[1]).collect())?
        }
        DisperserInit::Eigenfunction(scale) => {
            let phi = Spectral::new(params, grid, spectral.spectral())?.principal(0.0)?.vector;
            SpatialField::new(phi.iter().map(|v| scale * v).collect())?
        }
    })
}

pub fn sedentary(init: &SedentaryInit, grid: &Discretization) -> Result<AgeField> {
    Ok(match init {
        SedentaryInit::Constant(v) => AgeField::from_fn(grid, |_, _| *v),
        SedentaryInit::ExpDecay { rate, amplitude } => AgeField::from_fn(grid, |_, a| amplitude * (-rate * a).exp()),
        SedentaryInit::File(path) => {
            let rows = read_table(path, 3)?;
            let (nx, na) = (grid.n_x, grid.n_ages());
            ensure!(rows.len() == nx * na, "{path}: {} rows for a {nx} x {na} grid", rows.len());
            let mut w = AgeField::for_grid(grid);
            for (k, r) in rows.iter().enumerate() {
                let (i, j) = (k / na, k % na);
                ensure!(
                    close(r[0], grid.x(i)) && close(r[1], grid.age(j)),
                    "{path}: row {} at ({}, {}) does not match grid node ({}, {})",
                    k + 1,
                    r[0],
                    r[1],
                    grid.x(i),
                    grid.age(j)
                );
                ensure!(r[2] >= 0.0, "{path}: negative density {}", r[2]);
                w.set(i, j, r[2]);
            }
            w
        }
    })
}
