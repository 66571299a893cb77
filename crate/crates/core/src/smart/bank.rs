//! Auxiliary-cost grid and the precomputed policy bank, persisted as a
//! plain-text file keyed by a hash of the transition model.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::mdp::{solve_decoupled_mdp, Action, DecoupledMdp, MdpSolution};
use crate::error::{invalid, Error, Result};

const HEADER: &str = "parcomm-policy-bank 1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxCostGrid {
    pub m_min: f64,
    pub m_int: f64,
    pub m_max: f64,
}

impl AuxCostGrid {
    pub fn new(m_min: f64, m_int: f64, m_max: f64) -> Result<Self> {
        if !(m_min.is_finite() && m_max.is_finite() && m_int.is_finite()) || m_int <= 0.0 || m_max < m_min {
            return Err(invalid("aux cost grid needs m_int > 0 and m_min <= m_max"));
        }
        Ok(AuxCostGrid { m_min, m_int, m_max })
    }

    pub fn len(&self) -> usize {
        ((self.m_max - self.m_min) / self.m_int + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        self.m_min + k as f64 * self.m_int
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Index of the grid point nearest to `m` (clamped to the grid).
    pub fn nearest(&self, m: f64) -> usize {
        let k = ((m - self.m_min) / self.m_int).round();
        k.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Quantises a prediction error to the nearest representative level.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorQuantizer {
    levels: Vec<f64>,
}

impl ErrorQuantizer {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| !(w[0] < w[1])) || levels.iter().any(|l| !l.is_finite()) {
            return Err(invalid("quantizer levels must be finite and strictly increasing"));
        }
        Ok(ErrorQuantizer { levels })
    }

    /// `n` levels spaced `step` apart starting at 0.
    pub fn uniform(n: usize, step: f64) -> Result<Self> {
        Self::new((0..n).map(|k| k as f64 * step).collect())
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn n_states(&self) -> usize {
        self.levels.len()
    }

    /// Nearest level; ties go to the lower level.
    pub fn state(&self, error: f64) -> usize {
        let mut best = 0;
        for (k, l) in self.levels.iter().enumerate() {
            if (error - l).abs() < (error - self.levels[best]).abs() {
                best = k;
            }
        }
        best
    }
}

pub fn model_hash(mdp: &DecoupledMdp) -> String {
    let mut h = Sha256::new();
    h.update((mdp.n_states() as u64).to_le_bytes());
    let rows = mdp.p_silent.iter().chain(&mdp.p_transmit).flatten();
    for x in mdp.cost_silent.iter().chain(&mdp.cost_transmit).chain(rows) {
        h.update(x.to_bits().to_le_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub m: f64,
    pub solution: MdpSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBank {
    pub hash: String,
    pub grid: AuxCostGrid,
    pub entries: Vec<BankEntry>,
}

impl PolicyBank {
    pub fn build(grid: AuxCostGrid, mdp: &DecoupledMdp) -> Result<Self> {
        let entries = grid
            .points()
            .map(|m| Ok(BankEntry { m, solution: solve_decoupled_mdp(mdp, m)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolicyBank { hash: model_hash(mdp), grid, entries })
    }

    pub fn n_states(&self) -> usize {
        self.entries.first().map_or(0, |e| e.solution.policy.len())
    }

    /// Entry for the grid point nearest to `m`.
    pub fn lookup(&self, m: f64) -> &BankEntry {
        &self.entries[self.grid.nearest(m)]
    }

    pub fn transmits(&self, m: f64, state: usize) -> bool {
        self.lookup(m).solution.transmits(state)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let g = &self.grid;
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "hash {}", self.hash);
        let _ = writeln!(out, "grid {:?} {:?} {:?}", g.m_min, g.m_int, g.m_max);
        let _ = writeln!(out, "states {}", self.n_states());
        for e in &self.entries {
            let s = &e.solution;
            let _ = writeln!(out, "entry {:?} {:?} {} {:?}", e.m, s.avg_cost, s.sweeps, s.residual);
            let policy: Vec<&str> = s.policy.iter().map(|a| if *a == Action::Transmit { "1" } else { "0" }).collect();
            let _ = writeln!(out, "policy {}", policy.join(" "));
            let f: Vec<String> = s.f.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "f {}", f.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::BankFormat(msg.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing header"));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad("truncated file"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::BankFormat(format!("expected `{key}` line")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::BankFormat(format!("bad number `{s}`")));
        let hash = field("hash")?.into_iter().next().ok_or_else(|| bad("empty hash"))?;
        let g = field("grid")?;
        if g.len() != 3 {
            return Err(bad("grid needs three values"));
        }
        let grid = AuxCostGrid::new(num(&g[0])?, num(&g[1])?, num(&g[2])?).map_err(|e| Error::BankFormat(e.to_string()))?;
        let n: usize = field("states")?.first().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad state count"))?;
        let mut entries = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let e = field("entry")?;
            if e.len() != 4 {
                return Err(bad("entry needs four values"));
            }
            let policy = field("policy")?
                .iter()
                .map(|p| match p.as_str() {
                    "0" => Ok(Action::Silent),
                    "1" => Ok(Action::Transmit),
                    _ => Err(bad("bad policy action")),
                })
                .collect::<Result<Vec<_>>>()?;
            let f = field("f")?.iter().map(|v| num(v)).collect::<Result<Vec<_>>>()?;
            if policy.len() != n || f.len() != n {
                return Err(bad("state count mismatch"));
            }
            entries.push(BankEntry {
                m: num(&e[0])?,
                solution: MdpSolution {
                    policy,
                    f,
                    avg_cost: num(&e[1])?,
                    sweeps: e[2].parse().map_err(|_| bad("bad sweep count"))?,
                    residual: num(&e[3])?,
                },
            });
        }
        Ok(PolicyBank { hash, grid, entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Loads the bank at `path` when its hash and grid match, otherwise
    /// rebuilds and rewrites it.
    pub fn load_or_build(path: &Path, grid: AuxCostGrid, mdp: &DecoupledMdp) -> Result<Self> {
        if let Ok(bank) = Self::load(path) {
            if bank.hash == model_hash(mdp) && bank.grid == grid {
                return Ok(bank);
            }
        }
        let bank = Self::build(grid, mdp)?;
        bank.save(path)?;
        Ok(bank)
    }
}

/// SMART transmit gate: project the error onto the nearest quantizer level
/// and read the bank policy at the nearest grid point to `m`.
pub fn smart_tx_gate(bank: &PolicyBank, quantizer: &ErrorQuantizer, m: f64, error: f64) -> bool {
    bank.transmits(m, quantizer.state(error))
}
