//! Benchmark matrix over generated instances.

use std::fmt::Write;
use std::str::FromStr;

use mapf_core::model::validate;
use mapf_core::runtime::{solve, RuntimeConfig, RuntimeError, Trace};
use tracing::warn;

use crate::generate::{generate, GenerateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchRow {
    pub width: usize,
    pub height: usize,
    pub agents: usize,
}

/// Parses `WxH:N[,N...]` into one row per agent count.
pub fn parse_rows(s: &str) -> Result<Vec<BenchRow>, String> {
    let (map, counts) = s.split_once(':').ok_or_else(|| format!("expected WxH:N[,N...], got `{s}`"))?;
    let (w, h) = map.split_once('x').ok_or_else(|| format!("expected WxH, got `{map}`"))?;
    let num = |t: &str| usize::from_str(t.trim()).map_err(|e| format!("`{t}`: {e}"));
    let (width, height) = (num(w)?, num(h)?);
    counts
        .split(',')
        .map(|c| {
            Ok(BenchRow {
                width,
                height,
                agents: num(c)?,
            })
        })
        .collect()
}

/// The desk-scale reference rows: five 24x24 loads and 48x48 with 92.
pub fn reference_rows() -> Vec<BenchRow> {
    let mut rows: Vec<BenchRow> = [23, 46, 69, 92, 120]
        .into_iter()
        .map(|agents| BenchRow {
            width: 24,
            height: 24,
            agents,
        })
        .collect();
    rows.push(BenchRow {
        width: 48,
        height: 48,
        agents: 92,
    });
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Solved { time: f64, span: usize, moves: usize },
    Timeout,
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Markdown,
    Csv,
}

/// Solves one generated instance per row; row `i` uses seed `seed + i`.
pub fn run_bench(rows: &[BenchRow], density: f64, seed: u64, cfg: &RuntimeConfig) -> Vec<(BenchRow, Cell)> {
    rows.iter()
        .enumerate()
        .map(|(i, &row)| {
            let spec = GenerateSpec {
                width: row.width,
                height: row.height,
                agents: row.agents,
                density,
                seed: seed + i as u64,
                solvable: density > 0.0,
            };
            let cell = match generate(&spec) {
                Err(e) => Cell::Failed(e.to_string()),
                Ok(g) => match solve(&g.problem, cfg, &Trace::off()) {
                    Ok(r) if validate(&g.problem, &r.solution).ok => Cell::Solved {
                        time: r.elapsed.as_secs_f64(),
                        span: r.solution.makespan,
                        moves: r.solution.moves,
                    },
                    Ok(_) => Cell::Failed("invalid solution".into()),
                    Err(RuntimeError::Timeout) => Cell::Timeout,
                    Err(e) => Cell::Failed(e.to_string()),
                },
            };
            if let Cell::Failed(why) = &cell {
                warn!(width = row.width, height = row.height, agents = row.agents, "bench cell failed: {why}");
            }
            (row, cell)
        })
        .collect()
}

/// Timeouts print as `-`, other failures as `x`.
pub fn format_table(results: &[(BenchRow, Cell)], format: TableFormat) -> String {
    let mut out = String::new();
    let cols = |c: &Cell| -> [String; 3] {
        match c {
            Cell::Solved { time, span, moves } => [format!("{time:.1}"), span.to_string(), moves.to_string()],
            Cell::Timeout => ["-".into(), "-".into(), "-".into()],
            Cell::Failed(_) => ["x".into(), "x".into(), "x".into()],
        }
    };
    match format {
        TableFormat::Markdown => {
            out.push_str("| Map | n_R | Time | Span | Moves |\n|---|---:|---:|---:|---:|\n");
            for (r, c) in results {
                let [t, s, m] = cols(c);
                let _ = writeln!(out, "| {}x{} | {} | {t} | {s} | {m} |", r.width, r.height, r.agents);
            }
        }
        TableFormat::Csv => {
            out.push_str("map,n_r,time,span,moves\n");
            for (r, c) in results {
                let [t, s, m] = cols(c);
                let _ = writeln!(out, "{}x{},{},{t},{s},{m}", r.width, r.height, r.agents);
            }
        }
    }
    out
}
