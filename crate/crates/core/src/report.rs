//! Plot-ready CSV output.
//!
//! Every file starts with `#`-prefixed metadata lines (tool version, command,
//! seed and the full configuration as JSON) followed by a header row.
//! Floating-point values use Rust's shortest round-trip representation, so
//! identical inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::coarse::Binning;
use crate::error::{Error, Result};
use crate::estimator::WeightVector;
use crate::montecarlo::{SimulateRow, TrialReport};
use crate::scaling::ScalingRow;

/// Maximum bin number of the weight tables.
pub const TABLE_MAX_BINS: usize = 10;

/// Writes the `#` metadata block.
pub fn write_header<W: Write + ?Sized, C: Serialize + ?Sized>(
    out: &mut W,
    command: &str,
    seed: Option<u64>,
    config: &C,
) -> Result<()> {
    writeln!(out, "# cgmetro {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {command}")?;
    if let Some(seed) = seed {
        writeln!(out, "# seed: {seed}")?;
    }
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// Columns `M,binning,f_M`.
pub fn write_fisher_ratio<W: Write + ?Sized>(out: &mut W, rows: &[(usize, Binning, f64)]) -> Result<()> {
    writeln!(out, "M,binning,f_M")?;
    for (m, b, f) in rows {
        writeln!(out, "{m},{b},{f}")?;
    }
    Ok(())
}

/// Columns `M,w1,...,w10`; entries beyond `M` are left blank.
pub fn write_weights_table<W: Write + ?Sized>(out: &mut W, rows: &[(usize, WeightVector)]) -> Result<()> {
    let head: Vec<String> = (1..=TABLE_MAX_BINS).map(|k| format!("w{k}")).collect();
    writeln!(out, "M,{}", head.join(","))?;
    for (m, w) in rows {
        if w.len() > TABLE_MAX_BINS {
            return Err(Error::param(format!("weight table supports at most {TABLE_MAX_BINS} bins")));
        }
        let cells: Vec<String> = (0..TABLE_MAX_BINS)
            .map(|k| w.get(k).map(|v| format!("{v:.6}")).unwrap_or_default())
            .collect();
        writeln!(out, "{m},{}", cells.join(","))?;
    }
    Ok(())
}

/// Parses a weights table written by [`write_weights_table`] (comments and
/// blank cells allowed).
pub fn parse_weights_table(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let bad = |line: &str| Error::param(format!("malformed weights row: {line:?}"));
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') || line.starts_with("M,") {
            continue;
        }
        let mut cells = line.split(',');
        let m: usize = cells.next().and_then(|c| c.trim().parse().ok()).ok_or_else(|| bad(line))?;
        let w = cells
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(|c| c.parse::<f64>().map_err(|_| bad(line)))
            .collect::<Result<Vec<_>>>()?;
        if w.len() != m {
            return Err(bad(line));
        }
        rows.push((m, w));
    }
    Ok(rows)
}

/// Columns `n_tot,dphi_ideal,dphi_M,hl,sql`.
pub fn write_sweep<W: Write + ?Sized>(out: &mut W, rows: &[ScalingRow]) -> Result<()> {
    writeln!(out, "n_tot,dphi_ideal,dphi_M,hl,sql")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.n_tot, r.dphi_ideal, r.dphi_m, r.hl, r.sql)?;
    }
    Ok(())
}

/// Columns `phi_deg,dphi_rad,dphi_err_rad,crb_rad,flags`.
pub fn write_campaign<W: Write + ?Sized>(out: &mut W, reports: &[TrialReport]) -> Result<()> {
    writeln!(out, "phi_deg,dphi_rad,dphi_err_rad,crb_rad,flags")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.phi_true.degrees(),
            r.dphi_std,
            r.dphi_bootstrap_err,
            r.crb_dphi(),
            r.flags
        )?;
    }
    Ok(())
}

/// Columns of the bin-number campaign; all errors in radians.
pub fn write_simulate<W: Write + ?Sized>(out: &mut W, rows: &[SimulateRow]) -> Result<()> {
    writeln!(
        out,
        "M,binning,dphi_quantum,dphi_quantum_err,dphi_classical,dphi_classical_err,crb_quantum,dphi_ideal_quantum,dphi_ideal_classical"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.bins,
            r.binning,
            r.dphi_quantum,
            r.dphi_quantum_err,
            r.dphi_classical,
            r.dphi_classical_err,
            r.crb_quantum,
            r.dphi_ideal_quantum,
            r.dphi_ideal_classical
        )?;
    }
    Ok(())
}
