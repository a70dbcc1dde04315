//! Grids of runs executed in parallel, with a summary table.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{entries, read, ConfigError, ExperimentConfig};
use crate::runner::{run_benchmark, status_label, RunSummary, THRESHOLDS};

/// Expands a grid file into configurations.
///
/// The format is the config format with comma-separated value lists; the grid
/// is their Cartesian product, with earlier keys varying slowest. `out` is
/// ignored since the sweep names its files.
pub fn parse_grid(text: &str) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let mut axes: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (line, key, value) in entries(text)? {
        if key == "out" {
            continue;
        }
        let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(ConfigError::Parse {
                line,
                key,
                message: "empty value in list".into(),
            });
        }
        axes.push((line, key, values));
    }
    let mut configs = vec![ExperimentConfig::default()];
    for (line, key, values) in &axes {
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for base in &configs {
            for v in values {
                let mut cfg = base.clone();
                cfg.set(key, v).map_err(|message| ConfigError::Parse {
                    line: *line,
                    key: key.clone(),
                    message,
                })?;
                next.push(cfg);
            }
        }
        configs = next;
    }
    for cfg in &configs {
        cfg.validate()?;
    }
    Ok(configs)
}

pub fn grid_from_file(path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    parse_grid(&read(path)?)
}

/// File stem identifying a configuration within a sweep.
pub fn run_name(cfg: &ExperimentConfig) -> String {
    format!("{}_n{}_mu{}", cfg.method, cfg.n, cfg.mu)
}

#[derive(Debug)]
pub struct SweepEntry {
    pub name: String,
    pub config: ExperimentConfig,
    pub outcome: Result<RunSummary, String>,
}

impl SweepEntry {
    pub fn failed(&self) -> bool {
        self.outcome.as_ref().map_or(true, |s| s.failed())
    }
}

/// Runs every configuration with at most `jobs` in flight, writing
/// `<name>.csv` files and `summary.csv` into `out_dir`.
pub fn run_sweep(
    configs: Vec<ExperimentConfig>,
    jobs: usize,
    out_dir: &Path,
) -> anyhow::Result<Vec<SweepEntry>> {
    fs::create_dir_all(out_dir)?;
    let mut named: Vec<(String, ExperimentConfig)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for mut cfg in configs {
        let base = run_name(&cfg);
        let count = seen.entry(base.clone()).or_insert(0);
        let name = if *count == 0 {
            base
        } else {
            format!("{base}_{count}")
        };
        *count += 1;
        cfg.out = out_dir.join(format!("{name}.csv"));
        named.push((name, cfg));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        named
            .into_par_iter()
            .map(|(name, config)| {
                let outcome = run_benchmark(&config).map_err(|e| e.to_string());
                if let Err(e) = &outcome {
                    log::warn!("{name}: {e}");
                }
                SweepEntry {
                    name,
                    config,
                    outcome,
                }
            })
            .collect()
    });
    write_summary(&entries, &out_dir.join("summary.csv"))?;
    Ok(entries)
}

fn fmt_calls(v: Option<usize>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

pub fn write_summary(entries: &[SweepEntry], path: &PathBuf) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let thr: Vec<String> = THRESHOLDS.iter().map(|t| format!("{t:e}")).collect();
    write!(w, "run,method,n,mu,iterations,status")?;
    for t in &thr {
        write!(w, ",calls_eps_opt_{t}")?;
    }
    for t in &thr {
        write!(w, ",calls_eps_cert_{t}")?;
    }
    writeln!(w)?;
    for e in entries {
        let c = &e.config;
        match &e.outcome {
            Ok(s) => {
                let status = if s.failed() {
                    format!("FAILED {}", status_label(&s.status))
                } else {
                    status_label(&s.status)
                };
                write!(
                    w,
                    "{},{},{},{},{},\"{}\"",
                    e.name,
                    c.method,
                    c.n,
                    c.mu,
                    s.iterations,
                    status.replace('"', "'")
                )?;
                for v in s.calls_to_eps_opt.iter().chain(&s.calls_to_eps_cert) {
                    write!(w, ",{}", fmt_calls(*v))?;
                }
            }
            Err(msg) => {
                write!(
                    w,
                    "{},{},{},{},0,\"FAILED {}\"",
                    e.name,
                    c.method,
                    c.n,
                    c.mu,
                    msg.replace('"', "'")
                )?;
                write!(w, "{}", ",".repeat(2 * THRESHOLDS.len()))?;
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;

    #[test]
    fn grid_is_a_cartesian_product() {
        let cfgs = parse_grid("method=vaidya,ellipsoid\nn=10,20,30\nmu=0.01,0.1\n").unwrap();
        assert_eq!(cfgs.len(), 12);
        assert_eq!(cfgs[0].method, Method::Vaidya);
        assert_eq!((cfgs[0].n, cfgs[0].mu), (10, 0.01));
        assert_eq!((cfgs[1].n, cfgs[1].mu), (10, 0.1));
        assert_eq!(cfgs[11].method, Method::Ellipsoid);
        let mut names: Vec<String> = cfgs.iter().map(run_name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(
            parse_grid("n=10,,20"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_grid("n=10\nmu=0.1,-1"),
            Err(ConfigError::Validation(_))
        ));
    }
}
