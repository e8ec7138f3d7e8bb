//! Command-line front end: sampling, kernel tables, scaling-limit tables and
//! the validation suite. Every output is a CSV file with a JSON manifest
//! next to it.

mod config;
mod output;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use config::RunConfig;
use coupled_ginibre::kernel_finite::{kernel_contour_grid, FiniteKernel};
use coupled_ginibre::kernel_limit::{kernel_ginibre_infinite_grid, kernel_interpolating_grid, verify_scaling_limit, LimitRegime};
use coupled_ginibre::model::{sample_points, ModelConfig};
use coupled_ginibre::validation::{run_suite, Suite, ValidationOptions};
use output::{csv_bytes, emit, fmt_f64, read_manifest, resolve_out, sha256_hex};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status when a run completes but a numerical check fails. Status 1
/// is used for errors and status 2 by clap for usage errors.
const CHECK_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "coupled-ginibre", version, about = "Coupled Ginibre product processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample point configurations of all levels.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: usize,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate K(r,x;s,y) on a grid.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        /// x grid as start:stop:count.
        #[arg(long)]
        grid: String,
        /// y grid as start:stop:count; defaults to the x grid.
        #[arg(long)]
        grid_y: Option<String>,
        /// sum, contour, limit:ginibre or limit:interpolating(α).
        #[arg(long, default_value = "sum")]
        representation: String,
        /// Second representation to compare against; adds K_compare and
        /// rel_diff columns and fails when rel_diff exceeds rel_tol.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sup-distance of the rescaled kernel to its limit along a sequence of n.
    Limits {
        #[arg(long)]
        config: PathBuf,
        /// weak, strong or interpolating(α).
        #[arg(long)]
        regime: String,
        /// Comma-separated, strictly increasing sizes.
        #[arg(long, default_value = "20,40,80")]
        ns: String,
        /// Row level; defaults to m.
        #[arg(long)]
        r: Option<usize>,
        /// Column level; defaults to m.
        #[arg(long)]
        s: Option<usize>,
        /// Comma-separated limit-variable grid.
        #[arg(long, default_value = "0.5,1,2")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a validation suite: specfun, hankel, kernels, mc, limits or all.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Monte Carlo sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the output of a `sample` manifest and compare digests.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write the regenerated file; nothing is written if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Kernel representation selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rep {
    Sum,
    Contour,
    LimitGinibre,
    LimitInterpolating(f64),
}

fn parse_rep(text: &str) -> Result<Rep> {
    Ok(match text {
        "sum" => Rep::Sum,
        "contour" => Rep::Contour,
        "limit:ginibre" => Rep::LimitGinibre,
        other => {
            let alpha = other
                .strip_prefix("limit:interpolating(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| anyhow!("unknown representation '{other}'"))?;
            Rep::LimitInterpolating(alpha.trim().parse().with_context(|| format!("invalid α in '{other}'"))?)
        }
    })
}

fn parse_regime(text: &str) -> Result<LimitRegime> {
    let regime = match text {
        "weak" => LimitRegime::Weak,
        "strong" => LimitRegime::Strong,
        other => {
            let alpha = other
                .strip_prefix("interpolating(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| anyhow!("unknown regime '{other}'"))?;
            LimitRegime::Interpolating { alpha: alpha.trim().parse().with_context(|| format!("invalid α in '{other}'"))? }
        }
    };
    regime.validate()?;
    Ok(regime)
}

/// Parses `start:stop:count` into `count` equally spaced points.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, count] = parts[..] else {
        bail!("grid '{text}' must be start:stop:count");
    };
    let (start, stop): (f64, f64) = (start.parse()?, stop.parse()?);
    let count: usize = count.parse()?;
    if !(start > 0.0) || !(stop >= start) || count == 0 || (count == 1 && stop != start) {
        bail!("grid '{text}' needs 0 < start ≤ stop and count ≥ 1 (count = 1 only when start = stop)");
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| anyhow!("invalid {what} '{v}'")))
        .collect()
}

/// Kernel values and error estimates on `xs × ys`, row-major.
fn kernel_table(rep: Rep, cfg: &ModelConfig, r: usize, s: usize, xs: &[f64], ys: &[f64]) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<(usize, f64)> = xs.iter().map(|&x| (r, x)).collect();
    let cols: Vec<(usize, f64)> = ys.iter().map(|&y| (s, y)).collect();
    let table: Vec<Vec<(f64, f64)>> = match rep {
        Rep::Sum => FiniteKernel::new(cfg)?
            .kernel_grid(&rows, &cols)?
            .into_iter()
            .map(|row| row.into_iter().map(|v| (v, 0.0)).collect())
            .collect(),
        Rep::Contour => kernel_contour_grid(cfg, &rows, &cols)?
            .into_iter()
            .map(|row| row.into_iter().map(|e| (e.value, e.error_estimate)).collect())
            .collect(),
        Rep::LimitGinibre => {
            let mut nus = cfg.nus.clone();
            nus.push(0);
            kernel_ginibre_infinite_grid(&nus, &rows, &cols)?
                .into_iter()
                .map(|row| row.into_iter().map(|e| (e.value, e.error_estimate)).collect())
                .collect()
        }
        Rep::LimitInterpolating(alpha) => kernel_interpolating_grid(alpha, &cfg.nus, &rows, &cols)?
            .into_iter()
            .map(|row| row.into_iter().map(|e| (e.value, e.error_estimate)).collect())
            .collect(),
    };
    Ok(table.into_iter().flatten().collect())
}

fn sample_csv(cfg: &ModelConfig, seed: u64, samples: usize) -> Result<Vec<u8>> {
    let points = sample_points(cfg, seed, samples)?;
    let mut rows = Vec::with_capacity(samples * cfg.m * cfg.n);
    for (i, sample) in points.iter().enumerate() {
        for (l, level) in sample.levels.iter().enumerate() {
            for (k, &y) in level.iter().enumerate() {
                rows.push(vec![i.to_string(), (l + 1).to_string(), (k + 1).to_string(), fmt_f64(y)]);
            }
        }
    }
    csv_bytes(&["sample", "level", "index", "value"], &rows)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sample { config, samples, seed, out } => {
            let run_cfg = RunConfig::load(&config)?;
            let seed = seed.unwrap_or(run_cfg.seed);
            let bytes = sample_csv(&run_cfg.model()?, seed, samples)?;
            let path = resolve_out(out, "sample.csv");
            emit(&path, &bytes, Some(&run_cfg), Some(seed), Some(samples))?;
            println!("wrote {samples} samples to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Kernel { config, r, s, grid, grid_y, representation, compare, out } => {
            let run_cfg = RunConfig::load(&config)?;
            let cfg = run_cfg.model()?;
            let xs = parse_grid(&grid)?;
            let ys = match &grid_y {
                Some(g) => parse_grid(g)?,
                None => xs.clone(),
            };
            let values = kernel_table(parse_rep(&representation)?, &cfg, r, s, &xs, &ys)?;
            let other = compare.as_deref().map(parse_rep).transpose()?;
            let reference = other.map(|rep| kernel_table(rep, &cfg, r, s, &xs, &ys)).transpose()?;
            let mut header = vec!["x", "y", "K", "err_estimate"];
            if reference.is_some() {
                header.extend(["K_compare", "rel_diff"]);
            }
            let mut rows = Vec::with_capacity(values.len());
            let mut worst: f64 = 0.0;
            for (idx, &(k, err)) in values.iter().enumerate() {
                let (x, y) = (xs[idx / ys.len()], ys[idx % ys.len()]);
                let mut row = vec![fmt_f64(x), fmt_f64(y), fmt_f64(k), fmt_f64(err)];
                if let Some(reference) = &reference {
                    let k2 = reference[idx].0;
                    let rel = (k - k2).abs() / k2.abs();
                    worst = worst.max(rel);
                    row.extend([fmt_f64(k2), fmt_f64(rel)]);
                }
                rows.push(row);
            }
            let path = resolve_out(out, "kernel.csv");
            emit(&path, &csv_bytes(&header, &rows)?, Some(&run_cfg), None, None)?;
            println!("wrote {} kernel values to {}", rows.len(), path.display());
            if reference.is_some() {
                let ok = worst <= run_cfg.rel_tol;
                println!(
                    "max relative difference {worst:.3e} {} rel_tol {:e}",
                    if ok { "≤" } else { ">" },
                    run_cfg.rel_tol
                );
                if !ok {
                    return Ok(ExitCode::from(CHECK_FAILED));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Limits { config, regime, ns, r, s, grid, out } => {
            let run_cfg = RunConfig::load(&config)?;
            let base = run_cfg.model()?;
            let regime = parse_regime(&regime)?;
            let ns: Vec<usize> = parse_list(&ns, "n")?;
            let grid: Vec<f64> = parse_list(&grid, "grid point")?;
            let (r, s) = (r.unwrap_or(base.m), s.unwrap_or(base.m));
            let cfgs = regime.sequence(&base, &ns)?;
            let report = verify_scaling_limit(regime, r, s, &grid, &cfgs)?;
            let rows: Vec<Vec<String>> = cfgs
                .iter()
                .zip(report.distances.iter().zip(&report.error_estimates))
                .map(|(c, (d, e))| vec![c.n.to_string(), fmt_f64(c.b), fmt_f64(*d), fmt_f64(*e)])
                .collect();
            let path = resolve_out(out, "limits.csv");
            emit(&path, &csv_bytes(&["n", "b", "sup_distance", "error_estimate"], &rows)?, Some(&run_cfg), None, None)?;
            for row in &rows {
                println!("n = {:>6}  sup-distance = {}", row[0], row[2]);
            }
            let verdict = report.strictly_decreasing();
            println!(
                "{} regime, block ({r},{s}): {}",
                regime.label(),
                if verdict { "PASS (strictly decreasing)" } else { "FAIL (not strictly decreasing)" }
            );
            Ok(if verdict { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
        }
        Command::Validate { suite, samples, seed, out } => {
            let suite = Suite::parse(&suite)?;
            let defaults = ValidationOptions::default();
            let opts = ValidationOptions {
                mc_samples: samples.unwrap_or(defaults.mc_samples),
                seed: seed.unwrap_or(defaults.seed),
            };
            let reports = run_suite(suite, &opts)?;
            let mut rows = Vec::new();
            for rep in &reports {
                println!("{}", rep.line());
                rows.push(vec![
                    rep.id.to_string(),
                    rep.name.to_string(),
                    rep.passed.to_string(),
                    fmt_f64(rep.seconds),
                    rep.summary.clone(),
                ]);
            }
            let path = resolve_out(out, "validation.csv");
            emit(&path, &csv_bytes(&["criterion", "name", "passed", "seconds", "summary"], &rows)?, None, Some(opts.seed), None)?;
            Ok(if reports.iter().all(|r| r.passed) { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
        }
        Command::Replay { manifest, out } => {
            let recorded = read_manifest(&manifest)?;
            let (Some(run_cfg), Some(seed), Some(samples)) = (&recorded.config, recorded.seed, recorded.samples) else {
                bail!("manifest {} does not describe a sample run", manifest.display());
            };
            let bytes = sample_csv(&run_cfg.model()?, seed, samples)?;
            let digest = sha256_hex(&bytes);
            let expected = recorded.outputs.first().map(|o| o.sha256.as_str()).unwrap_or("");
            if let Some(path) = out {
                emit(&path, &bytes, Some(run_cfg), Some(seed), Some(samples))?;
            }
            let same = digest == expected;
            println!("replayed digest {digest} {} recorded {expected}", if same { "matches" } else { "differs from" });
            Ok(if same { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_representations_parse() {
        assert_eq!(parse_grid("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert!(parse_grid("0:1:3").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("2:1:3").is_err());
        assert_eq!(parse_rep("limit:interpolating(0.25)").unwrap(), Rep::LimitInterpolating(0.25));
        assert_eq!(parse_rep("contour").unwrap(), Rep::Contour);
        assert!(parse_rep("limit:other").is_err());
        assert_eq!(parse_regime("interpolating(2)").unwrap(), LimitRegime::Interpolating { alpha: 2.0 });
        assert!(parse_regime("interpolating(-1)").is_err());
    }
}
