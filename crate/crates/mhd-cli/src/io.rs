//! Snapshot persistence for full states and trajectories, plus the CSV
//! emitters for diagnostics.

use std::io::Write;
use std::path::{Path, PathBuf};

use mhd_core::error::{MhdError, Result};
use mhd_core::estimates::{InequalityRecord, StabilityReport};
use mhd_core::field::VectorField;
use mhd_core::mms::{OrderTable, SweepKind};
use mhd_core::picard::Trajectory;
use mhd_core::snapshot::Snapshot;
use mhd_core::state::State;

const COMPONENT_NAMES: [[&str; 3]; 2] = [["u0", "u1", "u2"], ["h0", "h1", "h2"]];

pub fn save_state(state: &State, time: f64, path: &Path) -> Result<()> {
    let mut snap = Snapshot::new(state.grid().clone(), time);
    snap.push_scalar("rho", &state.rho);
    for (names, field) in COMPONENT_NAMES.iter().zip([&state.u, &state.h]) {
        for (name, comp) in names.iter().zip(field.components()) {
            snap.push_scalar(name, comp);
        }
    }
    snap.write(path)
}

pub fn load_state(path: &Path) -> Result<(State, f64)> {
    let snap = Snapshot::read(path)?;
    let rho = snap.scalar_field("rho")?;
    let mut vectors = Vec::new();
    for names in COMPONENT_NAMES {
        let comps = [
            snap.scalar_field(names[0])?,
            snap.scalar_field(names[1])?,
            snap.scalar_field(names[2])?,
        ];
        vectors.push(VectorField::from_components(comps)?);
    }
    let h = vectors.pop().unwrap();
    let u = vectors.pop().unwrap();
    Ok((State::new(rho, u, h)?, snap.time))
}

fn level_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("level_{k:05}.snap"))
}

/// One snapshot file per retained time level.
pub fn save_trajectory(traj: &Trajectory, dir: &Path, cadence: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(MhdError::Io)?;
    let last = traj.num_levels() - 1;
    for k in 0..traj.num_levels() {
        if k % cadence.max(1) != 0 && k != last {
            continue;
        }
        save_state(traj.state(k), traj.time_of(k), &level_path(dir, k))?;
    }
    Ok(())
}

/// Rebuild a trajectory from a directory of level snapshots. Levels
/// must be uniformly spaced in time (cadence 1 dumps).
pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(MhdError::Io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().map(|e| e == "snap").unwrap_or(false)
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("level_"))
                    .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(MhdError::SnapshotFormat(format!(
            "need at least 2 level snapshots in '{}'",
            dir.display()
        )));
    }
    let mut states = Vec::with_capacity(paths.len());
    let mut times = Vec::with_capacity(paths.len());
    for p in &paths {
        let (s, t) = load_state(p)?;
        states.push(s);
        times.push(t);
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1e-9) {
            return Err(MhdError::SnapshotFormat(
                "level snapshots are not uniformly spaced in time".into(),
            ));
        }
    }
    Trajectory::new(times[0], dt, states)
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// name,t,lhs,rhs,margin,fitted_constant,pass rows for every record.
pub fn write_audit_csv(records: &[InequalityRecord], path: &Path) -> Result<()> {
    let mut out = String::from("name,t,lhs,rhs,margin,fitted_constant,pass\n");
    for r in records {
        let margins = r.margins();
        for i in 0..r.times.len() {
            let fitted = r.fitted_constant.map(fmt).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.name,
                fmt(r.times[i]),
                fmt(r.lhs[i]),
                fmt(r.rhs[i]),
                fmt(margins[i]),
                fitted,
                r.pass
            ));
        }
    }
    std::fs::write(path, out).map_err(MhdError::Io)
}

/// t,D,rate,envelope rows plus a trailer with the constants.
pub fn write_stability_csv(report: &StabilityReport, path: &Path) -> Result<()> {
    let mut out = String::from("t,d,rate,envelope\n");
    for i in 0..report.times.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(report.times[i]),
            fmt(report.d[i]),
            fmt(report.rate[i]),
            fmt(report.envelope[i])
        ));
    }
    out.push_str(&format!(
        "# fitted_constant = {}, used_constant = {}, pass = {}\n",
        fmt(report.fitted_constant),
        fmt(report.used_constant),
        report.pass
    ));
    std::fs::write(path, out).map_err(MhdError::Io)
}

/// sweep,n,dt,error_rho,error_u,error_h rows followed by order rows.
pub fn write_order_csv(table: &OrderTable, path: &Path) -> Result<()> {
    let mut out = String::from("sweep,n,dt,error_rho,error_u,error_h\n");
    for row in &table.rows {
        let kind = match row.sweep {
            SweepKind::Spatial => "spatial",
            SweepKind::Temporal => "temporal",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            kind,
            row.n,
            fmt(row.dt),
            fmt(row.err_rho),
            fmt(row.err_u),
            fmt(row.err_h)
        ));
    }
    for (name, orders) in [
        ("spatial_order", table.spatial_order),
        ("temporal_order", table.temporal_order),
    ] {
        if let Some(o) = orders {
            out.push_str(&format!(
                "{name},,,{},{},{}\n",
                fmt(o[0]),
                fmt(o[1]),
                fmt(o[2])
            ));
        }
    }
    std::fs::write(path, out).map_err(MhdError::Io)
}

pub fn write_summary(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(MhdError::Io)?;
    f.write_all(text.as_bytes()).map_err(MhdError::Io)
}
