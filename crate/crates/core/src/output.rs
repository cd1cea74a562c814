//! File formats: trajectory and sweep CSVs and `key=value` summaries.
//! Floats are written with 17 significant digits, lines end in LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::design::SweepResult;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

pub fn trajectory_header(traj: &Trajectory) -> Vec<String> {
    let n = traj.target.x.len();
    let mut cols = vec!["t".to_string()];
    cols.extend(traj.state_labels.iter().cloned());
    for prefix in ["x", "q", "p", "r"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(["cost", "L_total", "U", "V_norm"].map(String::from));
    cols
}

/// `t,<state>,x_*,q_*,p_*,r_*,cost,L_total,U,V_norm`; `L_total` is `NaN`
/// when the rule has no storage function.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = trajectory_header(traj).join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut row: Vec<f64> = vec![s.t];
        row.extend(&s.y);
        row.extend(&s.x);
        row.extend(&s.q);
        row.extend(&s.p);
        row.extend(&s.r);
        row.extend([s.cost, s.lyapunov.unwrap_or(f64::NAN), s.exo_lyapunov, s.v_norm]);
        out.push_str(&fmt_vec(&row));
        out.push('\n');
    }
    out
}

/// `k1,k2,I_max,feasible`, one row per cell in sweep order; failed cells
/// carry `NaN` and `false`.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("k1,k2,I_max,feasible\n");
    for c in &sweep.cells {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(c.k1),
            fmt_f64(c.k2),
            fmt_f64(c.i_max.unwrap_or(f64::NAN)),
            sweep.feasible(c)
        );
    }
    out
}

pub fn key_values(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
