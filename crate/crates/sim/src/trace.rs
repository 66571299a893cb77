//! Per-run trace: one CSV row per event.
//!
//! Columns, in order:
//! `slot,event,node,peer,kind,stamp,subframe,subchannel,outcome,s_0..,shat_0..,shatp_0..,error,noise,m,distance`
//!
//! * `state` rows (one per link per slot): `node` is the source, `peer` the
//!   destination, `s_*` the true status, `shat_*` the source estimate,
//!   `shatp_*` the destination estimate, `error` the recovery error
//!   `g(s, shatp)` and `noise` the sensing error `g(s, sensed)`, both on the
//!   predicted components; `m` is the SMART auxiliary cost when enabled.
//! * `tx` rows (one per attempt per receiver of interest): `slot` is the air
//!   slot, `kind` the packet kind, `stamp` the packet stamp.
//! * `plant` rows (one per vehicle per slot): `s_*` holds the physical
//!   state, `peer` the front vehicle and `distance` the gap to it.
//!
//! Empty cells mean "not applicable". Floats use shortest round-trip
//! formatting so the file reproduces the in-memory values exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use parcomm_core::mac::Outcome;
use parcomm_core::protocol::PacketKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    State,
    Tx,
    Plant,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::State => "state",
            Event::Tx => "tx",
            Event::Plant => "plant",
        }
    }

    pub fn parse(s: &str) -> Option<Event> {
        match s {
            "state" => Some(Event::State),
            "tx" => Some(Event::Tx),
            "plant" => Some(Event::Plant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub slot: u64,
    pub event: Event,
    pub node: usize,
    pub peer: Option<usize>,
    pub kind: Option<PacketKind>,
    pub stamp: Option<u64>,
    pub subframe: Option<u64>,
    pub subchannel: Option<u64>,
    pub outcome: Option<Outcome>,
    pub s: Vec<f64>,
    pub shat: Vec<f64>,
    pub shatp: Vec<f64>,
    pub error: Option<f64>,
    pub noise: Option<f64>,
    pub m: Option<f64>,
    pub distance: Option<f64>,
}

impl TraceRow {
    pub fn new(slot: u64, event: Event, node: usize) -> Self {
        TraceRow {
            slot,
            event,
            node,
            peer: None,
            kind: None,
            stamp: None,
            subframe: None,
            subchannel: None,
            outcome: None,
            s: Vec::new(),
            shat: Vec::new(),
            shatp: Vec::new(),
            error: None,
            noise: None,
            m: None,
            distance: None,
        }
    }
}

pub fn header(dim: usize) -> String {
    let mut cols = vec!["slot", "event", "node", "peer", "kind", "stamp", "subframe", "subchannel", "outcome"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for prefix in ["s", "shat", "shatp"] {
        cols.extend((0..dim).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(["error", "noise", "m", "distance"].map(String::from));
    cols.join(",")
}

fn opt<T: std::fmt::Display>(out: &mut String, v: Option<T>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

fn opt_f(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v:?}");
    }
}

fn vec_f(out: &mut String, v: &[f64], dim: usize) {
    for i in 0..dim {
        opt_f(out, v.get(i).copied());
    }
}

pub fn format_row(row: &TraceRow, dim: usize) -> String {
    let mut out = String::with_capacity(64 + dim * 60);
    let _ = write!(out, "{},{},{}", row.slot, row.event.as_str(), row.node);
    opt(&mut out, row.peer);
    opt(&mut out, row.kind.map(PacketKind::as_str));
    opt(&mut out, row.stamp);
    opt(&mut out, row.subframe);
    opt(&mut out, row.subchannel);
    opt(&mut out, row.outcome.map(Outcome::as_str));
    vec_f(&mut out, &row.s, dim);
    vec_f(&mut out, &row.shat, dim);
    vec_f(&mut out, &row.shatp, dim);
    opt_f(&mut out, row.error);
    opt_f(&mut out, row.noise);
    opt_f(&mut out, row.m);
    opt_f(&mut out, row.distance);
    out
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {reason}")]
    Format { line: usize, reason: String },
}

fn parse_opt<T: std::str::FromStr>(cell: &str) -> Result<Option<T>, String> {
    if cell.is_empty() {
        Ok(None)
    } else {
        cell.parse().map(Some).map_err(|_| format!("bad cell `{cell}`"))
    }
}

pub fn parse_row(line: &str, dim: usize) -> Result<TraceRow, String> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != 13 + 3 * dim {
        return Err(format!("expected {} cells, got {}", 13 + 3 * dim, cells.len()));
    }
    let need = |i: usize| -> Result<&str, String> {
        if cells[i].is_empty() {
            Err(format!("column {i} is required"))
        } else {
            Ok(cells[i])
        }
    };
    let vec_at = |start: usize| -> Result<Vec<f64>, String> {
        let v: Vec<Option<f64>> = (0..dim).map(|i| parse_opt(cells[start + i])).collect::<Result<_, _>>()?;
        Ok(v.into_iter().flatten().collect())
    };
    let tail = 9 + 3 * dim;
    Ok(TraceRow {
        slot: need(0)?.parse().map_err(|_| "bad slot".to_string())?,
        event: Event::parse(need(1)?).ok_or("bad event")?,
        node: need(2)?.parse().map_err(|_| "bad node".to_string())?,
        peer: parse_opt(cells[3])?,
        kind: if cells[4].is_empty() { None } else { Some(PacketKind::parse(cells[4]).ok_or("bad kind")?) },
        stamp: parse_opt(cells[5])?,
        subframe: parse_opt(cells[6])?,
        subchannel: parse_opt(cells[7])?,
        outcome: if cells[8].is_empty() { None } else { Some(Outcome::parse(cells[8]).ok_or("bad outcome")?) },
        s: vec_at(9)?,
        shat: vec_at(9 + dim)?,
        shatp: vec_at(9 + 2 * dim)?,
        error: parse_opt(cells[tail])?,
        noise: parse_opt(cells[tail + 1])?,
        m: parse_opt(cells[tail + 2])?,
        distance: parse_opt(cells[tail + 3])?,
    })
}

pub struct TraceWriter {
    out: BufWriter<File>,
    dim: usize,
}

impl TraceWriter {
    pub fn create(path: &Path, dim: usize) -> Result<Self, TraceError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header(dim))?;
        Ok(TraceWriter { out, dim })
    }

    pub fn write(&mut self, row: &TraceRow) -> Result<(), TraceError> {
        writeln!(self.out, "{}", format_row(row, self.dim))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a trace file; the status dimension is taken from the header.
pub fn read_trace(path: &Path) -> Result<(usize, Vec<TraceRow>), TraceError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let head = lines.next().ok_or(TraceError::Format { line: 1, reason: "empty file".into() })??;
    let dim = head.split(',').filter(|c| c.starts_with("s_")).count();
    if head != header(dim) {
        return Err(TraceError::Format { line: 1, reason: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        rows.push(parse_row(&line, dim).map_err(|reason| TraceError::Format { line: i + 2, reason })?);
    }
    Ok((dim, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        let mut row = TraceRow::new(12, Event::State, 3);
        row.peer = Some(0);
        row.s = vec![1.0 / 3.0, -2.5e-12, 7.0];
        row.shat = vec![0.1, 0.2, 0.3];
        row.shatp = vec![f64::MIN_POSITIVE, 1e300, -0.0];
        row.error = Some(0.125);
        row.noise = Some(0.0);
        row.m = Some(1.5);
        let text = format_row(&row, 3);
        assert_eq!(parse_row(&text, 3).unwrap(), row);

        let mut tx = TraceRow::new(5, Event::Tx, 1);
        tx.kind = Some(PacketKind::ModelConfirmation);
        tx.outcome = Some(Outcome::HalfDuplex);
        tx.stamp = Some(4);
        tx.subframe = Some(5);
        tx.subchannel = Some(1);
        assert_eq!(parse_row(&format_row(&tx, 3), 3).unwrap(), tx);
    }

    #[test]
    fn header_has_fixed_layout() {
        assert_eq!(
            header(2),
            "slot,event,node,peer,kind,stamp,subframe,subchannel,outcome,s_0,s_1,shat_0,shat_1,shatp_0,shatp_1,error,noise,m,distance"
        );
    }
}
