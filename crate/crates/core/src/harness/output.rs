//! CSV writers. Every file starts with one `# ` comment line (the
//! preamble) followed by a header row.

use std::io::Write;

use super::batch::{SummaryStats, TraceRow};
use super::bounds::BoundCheckReport;
use super::sweep::SweepResult;
use crate::error::Result;

pub const TRACE_HEADER: [&str; 7] = ["policy", "rep", "t", "arm", "reward", "inst_regret", "cum_regret"];
pub const SUMMARY_HEADER: [&str; 13] = [
    "policy", "env", "T", "K", "V_T", "reps", "mean_final", "std", "q05", "q25", "q50", "q75", "q95",
];
pub const BOUNDS_HEADER: [&str; 7] = ["lemma", "x", "l", "trials", "empirical", "bound", "margin"];
pub const SWEEP_HEADER: [&str; 4] = ["policy", "T", "mean_final", "std_err"];
pub const SLOPES_HEADER: [&str; 2] = ["policy", "slope"];

fn writer<W: Write>(mut out: W, preamble: &str, header: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(out, "# {preamble}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

/// `policy_names[p]` labels rows with `policy == p`.
pub fn write_trace_csv<W: Write>(out: W, preamble: &str, policy_names: &[String], rows: &[TraceRow]) -> Result<()> {
    let mut w = writer(out, preamble, &TRACE_HEADER)?;
    for r in rows {
        let s = &r.step;
        w.write_record([
            policy_names[r.policy].clone(),
            r.rep.to_string(),
            s.t.to_string(),
            s.arm.to_string(),
            s.reward.to_string(),
            s.inst_regret.to_string(),
            s.cum_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, preamble: &str, summaries: &[SummaryStats]) -> Result<()> {
    let mut w = writer(out, preamble, &SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record([
            s.policy.clone(),
            s.env.clone(),
            s.horizon.to_string(),
            s.arms.to_string(),
            s.budget.to_string(),
            s.reps.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.q05.to_string(),
            s.q25.to_string(),
            s.q50.to_string(),
            s.q75.to_string(),
            s.q95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds_csv<W: Write>(out: W, preamble: &str, reports: &[BoundCheckReport]) -> Result<()> {
    let mut w = writer(out, preamble, &BOUNDS_HEADER)?;
    for r in reports {
        w.write_record([
            r.lemma.to_string(),
            r.x.to_string(),
            r.l.to_string(),
            r.trials.to_string(),
            r.empirical.to_string(),
            r.bound.to_string(),
            r.margin.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, preamble: &str, results: &[SweepResult]) -> Result<()> {
    let mut w = writer(out, preamble, &SWEEP_HEADER)?;
    for res in results {
        for row in &res.rows {
            w.write_record([
                res.policy.name(),
                row.horizon.to_string(),
                row.mean.to_string(),
                row.std_err.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// An undefined slope is written as an empty field.
pub fn write_slopes_csv<W: Write>(out: W, preamble: &str, results: &[SweepResult]) -> Result<()> {
    let mut w = writer(out, preamble, &SLOPES_HEADER)?;
    for res in results {
        w.write_record([res.policy.name(), res.slope.map_or_else(String::new, |s| s.to_string())])?;
    }
    w.flush()?;
    Ok(())
}
