//! CSV emission. Every table starts with a header row, reaction indices are
//! one based and floats use the shortest representation that round-trips, so
//! identical results always produce identical bytes.

use std::io::Write;

use crate::analysis::ExitExperiment;
use crate::coupling::CoupledTrajectory;
use crate::engine::Trajectory;
use crate::error::{CrnError, Result};
use crate::sensitivity::{EstimateReport, ScanReport};

fn csv_err(e: csv::Error) -> CrnError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CrnError::Io(e),
        other => CrnError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// `path, time, reaction, <species...>`. The first row of each path is the
/// initial state with an empty reaction; summary-mode paths contribute their
/// initial and terminal states only, the latter with an empty reaction.
pub fn write_trajectories<W: Write>(w: W, species: &[String], paths: &[Trajectory<f64>]) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["path".to_string(), "time".into(), "reaction".into()];
    header.extend(species.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for (i, p) in paths.iter().enumerate() {
        let row = |time: f64, reaction: String, state: &[u64]| {
            let mut r = vec![i.to_string(), time.to_string(), reaction];
            r.extend(state.iter().map(u64::to_string));
            r
        };
        out.write_record(row(0.0, String::new(), &p.x0)).map_err(csv_err)?;
        if p.events.is_empty() && p.n_events > 0 {
            out.write_record(row(p.t_end, String::new(), &p.final_state)).map_err(csv_err)?;
        }
        for e in &p.events {
            out.write_record(row(e.time, (e.reaction + 1).to_string(), &e.state)).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `path, <species>_perturbed..., <species>_nominal..., n_events, decouple_index, decouple_time`,
/// states taken at the end of the horizon.
pub fn write_pairs<W: Write>(w: W, species: &[String], pairs: &[CoupledTrajectory<f64>]) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["path".to_string()];
    header.extend(species.iter().map(|s| format!("{s}_perturbed")));
    header.extend(species.iter().map(|s| format!("{s}_nominal")));
    header.extend(["n_events", "decouple_index", "decouple_time"].map(String::from));
    out.write_record(&header).map_err(csv_err)?;
    for (i, p) in pairs.iter().enumerate() {
        let mut r = vec![i.to_string()];
        r.extend(p.perturbed.final_state.iter().map(u64::to_string));
        r.extend(p.nominal.final_state.iter().map(u64::to_string));
        r.push(p.n_events.to_string());
        r.push(opt(p.decouple_index));
        r.push(opt(p.decouple_time));
        out.write_record(&r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per labelled estimate, e.g. `("derivative", report)`; `epsilon` is
/// the full perturbation vector joined by `;`.
pub fn write_estimates<W: Write>(w: W, reports: &[(String, EstimateReport)]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["quantity", "method", "epsilon", "value", "std_error", "n_paths", "master_seed"])
        .map_err(csv_err)?;
    for (quantity, r) in reports {
        out.write_record([
            quantity.clone(),
            r.method.to_string(),
            join(&r.epsilon),
            r.value.to_string(),
            r.std_error.to_string(),
            r.n_paths.to_string(),
            r.master_seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per method and grid point, with a pair of columns per gap moment.
/// Every report must carry the same moments.
pub fn write_scan<W: Write>(w: W, reports: &[ScanReport]) -> Result<()> {
    let mut out = writer(w);
    let moments: Vec<f64> = reports
        .first()
        .and_then(|r| r.rows.first())
        .map(|row| row.gap_moments.iter().map(|m| m.0).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = ["method", "eps_norm", "var_diff", "var_std_error", "ci_half_width"]
        .map(String::from)
        .to_vec();
    for r in &moments {
        header.push(format!("gap_moment_{r}"));
        header.push(format!("gap_moment_{r}_std_error"));
    }
    out.write_record(&header).map_err(csv_err)?;
    for report in reports {
        for row in &report.rows {
            if row.gap_moments.len() != moments.len() {
                return Err(CrnError::Argument("scan reports carry different moment sets".into()));
            }
            let mut rec = vec![
                report.method.to_string(),
                row.eps_norm.to_string(),
                row.var_diff.to_string(),
                row.var_std_error.to_string(),
                row.ci_half_width.to_string(),
            ];
            for &(_, value, se) in &row.gap_moments {
                rec.push(value.to_string());
                rec.push(se.to_string());
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Fitted log-log slopes: `method, quantity, slope, intercept, slope_std_error`,
/// where `quantity` is `var_diff` or `gap_moment_<r>`.
pub fn write_scan_slopes<W: Write>(w: W, reports: &[ScanReport]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["method", "quantity", "slope", "intercept", "slope_std_error"])
        .map_err(csv_err)?;
    for report in reports {
        let fits = std::iter::once(("var_diff".to_string(), &report.var_slope))
            .chain(report.gap_slopes.iter().map(|(r, f)| (format!("gap_moment_{r}"), f)));
        for (name, fit) in fits {
            out.write_record([
                report.method.to_string(),
                name,
                fit.slope.to_string(),
                fit.intercept.to_string(),
                fit.slope_se.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `m, t, n_paths, n_hit, p_hat, upper_conf, bound, prefactor, decay`.
pub fn write_exit_times<W: Write>(w: W, experiment: &ExitExperiment) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["m", "t", "n_paths", "n_hit", "p_hat", "upper_conf", "bound", "prefactor", "decay"])
        .map_err(csv_err)?;
    let c = &experiment.constants;
    for (s, b) in experiment.samples.iter().zip(&experiment.bound) {
        out.write_record([
            s.m.to_string(),
            s.t.to_string(),
            s.n_paths.to_string(),
            s.n_hit.to_string(),
            s.p_hat.to_string(),
            s.upper_conf.to_string(),
            b.to_string(),
            c.prefactor.to_string(),
            c.decay.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Generic `header` plus rows of already formatted cells.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(header).map_err(csv_err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(CrnError::Dimension {
                what: "table row",
                got: r.len(),
                expected: header.len(),
            });
        }
        out.write_record(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
