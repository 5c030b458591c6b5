//! CSV and JSON writers.

use std::io::Write;

use cpsis::stability::SweepRow;
use cpsis::{CpState, DegreeDistribution, ThetaState, Trajectory};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SWEEP_HEADER: [&str; 4] = ["tau", "dfe_lead_re", "endemic_sum_I", "endemic_lead_re"];

/// Shortest representation that parses back to the same double.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn trajectory_header(classes: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=classes).map(|l| format!("I_{l}")));
    h.extend((1..=classes).map(|l| format!("S_{l}")));
    h.extend(["SI", "SS", "II", "theta"].map(String::from));
    h
}

/// Writes `t,I_1..I_L,S_1..S_L,SI,SS,II,theta`.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, dist: &DegreeDistribution) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(dist.len()))?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let c = CpState::from_slice(y);
        let theta = ThetaState::from_full(&c, dist)?.theta;
        let mut row = vec![num(*t)];
        row.extend(c.i.iter().map(|&v| num(v)));
        row.extend(c.s.iter().map(|&v| num(v)));
        row.extend([c.si, c.ss, c.ii, theta].map(num));
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| CliError::io("output", e))?;
    Ok(())
}

/// Writes `tau,dfe_lead_re,endemic_sum_I,endemic_lead_re`; absent values are
/// empty fields.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        out.write_record([
            num(r.tau),
            num(r.dfe_lead_re),
            opt(r.endemic_sum_i),
            opt(r.endemic_lead_re),
        ])?;
    }
    out.flush().map_err(|e| CliError::io("output", e))?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| CliError::io("output", e))?;
    Ok(())
}
