//! CSV tables written and read by the tool. Numbers use 17 significant
//! digits so every double round-trips.

use std::fmt::Write;

use super::{EfficiencyRecord, SpectralScan};
use crate::dynamics::EvolutionResult;
use crate::error::ValidationError;
use crate::spectral::{SpectralResult, TransitionReport};

pub const EFFICIENCY_HEADER: &str = "kappa_L,kappa_R,eta_L,eta_R,unbalanced,final_trace";
pub const SPECTRUM_HEADER: &str = "k,Re_E_cm1,Gamma_cm1,PR,overlap_L,overlap_R";
pub const TRANSITIONS_HEADER: &str = "kappa_L,avg_sub_width_over_D";
pub const SCAN_HEADER: &str = "kappa_L,kappa_R,k,Re_E_cm1,Gamma_cm1,PR,overlap_L,overlap_R";

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

pub fn efficiency_csv(records: &[EfficiencyRecord]) -> String {
    let mut out = format!("{EFFICIENCY_HEADER}\n");
    for r in records {
        push_row(
            &mut out,
            [r.kappa_l, r.kappa_r, r.eta_l, r.eta_r, r.unbalanced, r.final_trace].map(fmt_num),
        );
    }
    out
}

pub fn parse_efficiency_csv(text: &str) -> Result<Vec<EfficiencyRecord>, ValidationError> {
    let t = read_table(text)?;
    t.expect_header(EFFICIENCY_HEADER)?;
    Ok(t.rows
        .iter()
        .map(|r| EfficiencyRecord {
            kappa_l: r[0],
            kappa_r: r[1],
            eta_l: r[2],
            eta_r: r[3],
            unbalanced: r[4],
            final_trace: r[5],
        })
        .collect())
}

/// One row per eigenstate, k 1-based in ascending Re(E).
pub fn spectrum_csv(s: &SpectralResult) -> String {
    let mut out = format!("{SPECTRUM_HEADER}\n");
    for k in 0..s.dim() {
        let mut cells = vec![(k + 1).to_string()];
        cells.extend([s.eigenvalues[k].re, s.widths[k], s.pr[k], s.overlap_l[k], s.overlap_r[k]].map(fmt_num));
        push_row(&mut out, cells);
    }
    out
}

pub fn transitions_csv(report: &TransitionReport) -> String {
    let mut out = format!("{TRANSITIONS_HEADER}\n");
    for (k, w) in report.kappa_grid.iter().zip(&report.avg_sub_width) {
        push_row(&mut out, [fmt_num(*k), fmt_num(*w)]);
    }
    out
}

/// Long format: one row per (κ point, eigenstate).
pub fn scan_csv(scan: &SpectralScan) -> String {
    let mut out = format!("{SCAN_HEADER}\n");
    for p in &scan.points {
        for k in 0..p.widths.len() {
            let mut cells = vec![fmt_num(p.kappa_l), fmt_num(p.kappa_r), (k + 1).to_string()];
            cells.extend([p.re_energy[k], p.widths[k], p.pr[k], p.overlap_l[k], p.overlap_r[k]].map(fmt_num));
            push_row(&mut out, cells);
        }
    }
    out
}

/// `t_ps`, populations `rho_i_i`, `abs_rho_a_b` for `pair`, then η and trace.
pub fn trajectory_header(n_sites: usize, pair: (usize, usize)) -> String {
    let mut h = String::from("t_ps");
    for i in 1..=n_sites {
        let _ = write!(h, ",rho_{i}_{i}");
    }
    let _ = write!(h, ",abs_rho_{}_{},eta_L,eta_R,trace", pair.0 + 1, pair.1 + 1);
    h
}

pub fn trajectory_csv(res: &EvolutionResult, n_sites: usize, pair: (usize, usize)) -> String {
    let mut out = trajectory_header(n_sites, pair);
    out.push('\n');
    for (t, &time) in res.times.iter().enumerate() {
        let mut cells = vec![fmt_num(time)];
        cells.extend(res.trajectory.populations(t).into_iter().map(fmt_num));
        cells.extend(
            [
                res.trajectory.coherence(t, pair.0, pair.1),
                res.eta_l[t],
                res.eta_r[t],
                res.traces[t],
            ]
            .map(fmt_num),
        );
        push_row(&mut out, cells);
    }
    out
}

/// A numeric CSV table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn expect_header(&self, header: &str) -> Result<(), ValidationError> {
        if self.header.join(",") != header {
            return Err(ValidationError::invalid(format!(
                "unexpected CSV header '{}', expected '{header}'",
                self.header.join(",")
            )));
        }
        Ok(())
    }
}

pub fn read_table(text: &str) -> Result<Table, ValidationError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| ValidationError::invalid("empty CSV"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| {
                        ValidationError::invalid(format!("CSV line {}: '{}' is not a number", i + 2, c.trim()))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if row.len() != header.len() {
                return Err(ValidationError::invalid(format!(
                    "CSV line {} has {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table { header, rows })
}
