//! Parameter sweeps: one run per value, summarized as a CSV table.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{ConfigError, ScenarioConfig};
use crate::engine::{run, EngineError};
use crate::summary::RunSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub summary: RunSummary,
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_values(text: &str) -> Result<Vec<String>, ConfigError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| ConfigError::Parse(format!("bad range `{text}`")));
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(ConfigError::Parse(format!("bad range `{text}`")));
        }
        let integral = [a, b, step].iter().all(|x| x.fract() == 0.0);
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n)
            .map(|k| {
                let v = a + k as f64 * step;
                if integral { format!("{}", v as i64) } else { format!("{v:?}") }
            })
            .collect());
    }
    Ok(text.split(',').map(|s| s.trim().to_string()).collect())
}

/// Runs `base` once per value of `param`. With `seed_per_value` the k-th
/// run uses `base.seed + k`; otherwise every run shares `base.seed`.
/// Runs execute on up to `threads` worker threads; results keep value order.
pub fn sweep(
    base: &ScenarioConfig,
    param: &str,
    values: &[String],
    seed_per_value: bool,
    threads: usize,
) -> Result<Vec<SweepRow>, EngineError> {
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let mut cfg = base.with_override(param, v)?;
            if seed_per_value {
                cfg.seed = base.seed + k as u64;
            }
            Ok(cfg)
        })
        .collect::<Result<_, ConfigError>>()?;
    let summaries = run_many(&configs, threads)?;
    Ok(values.iter().cloned().zip(summaries).map(|(value, summary)| SweepRow { value, summary }).collect())
}

/// Runs independent configurations concurrently, returning summaries in
/// input order.
pub fn run_many(configs: &[ScenarioConfig], threads: usize) -> Result<Vec<RunSummary>, EngineError> {
    let threads = threads.max(1).min(configs.len().max(1));
    let mut results: Vec<Option<Result<RunSummary, EngineError>>> = (0..configs.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= configs.len() {
                    break;
                }
                let r = run(&configs[k], None).map(|(summary, _)| summary);
                slots.lock().expect("no poisoned workers")[k] = Some(r);
            });
        }
    });
    results.into_iter().map(|r| r.expect("every run completed")).collect()
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub const TABLE_HEADER: &str = "value,seed,ota,calib,confirm,correction,control,collisions,half_duplex,channel_losses,occupancy,min_safe_distance,crash,distance_std,mean_error,max_error,mean_aoi";

pub fn table_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("# param={param}\n{TABLE_HEADER}\n");
    for r in rows {
        let s = &r.summary;
        let a = |k: &str| s.attempts.get(k).copied().unwrap_or(0);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:?},{:?},{},{:?},{:?},{:?},{}",
            r.value,
            s.meta.seed,
            s.total_ota(),
            a("calib"),
            a("confirm"),
            a("correction"),
            a("control"),
            s.collisions,
            s.half_duplex,
            s.channel_losses,
            s.occupancy,
            s.min_safe_distance,
            s.crash,
            s.distance_std,
            s.mean_error,
            s.max_error,
            s.mean_aoi.map(|x| format!("{x:?}")).unwrap_or_default(),
        );
    }
    out
}

pub fn write_table(path: &Path, param: &str, rows: &[SweepRow]) -> std::io::Result<()> {
    std::fs::write(path, table_csv(param, rows))
}
