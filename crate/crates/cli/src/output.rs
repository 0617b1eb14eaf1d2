use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use cutstokes_core::discretization::Discretization;
use cutstokes_core::freefall::simulate;
use cutstokes_core::harness::{
    assumption_scan, convergence_study, csv_table, gamma_sweep, geometry_sweep, linear_grid, solve_case, AssumptionRow, ErrorReport, GeometryRow,
};
use cutstokes_core::solver::SolveReport;
use cutstokes_core::vtk;
use sha2::{Digest, Sha256};

use crate::config::{Cli, Command, OUTPUT_ROOT_VAR};

fn run_dir(cli: &Cli) -> anyhow::Result<PathBuf> {
    let dir = match &cli.common.out {
        Some(d) => d.clone(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
            let digest = Sha256::digest(cli.manifest().as_bytes());
            let hash: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
            let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
            root.join(format!("{stamp}-{}-{hash}", cli.command.name()))
        }
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_vtk(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Validates, runs the selected experiment and writes its files. Returns
/// the run directory.
pub fn dispatch(cli: &Cli) -> anyhow::Result<PathBuf> {
    cli.validate()?;
    let dir = run_dir(cli)?;
    write(&dir, "manifest.json", &cli.manifest())?;
    let c = &cli.common;
    let mut log = String::new();
    match &cli.command {
        Command::Single { n } => {
            let cfg = c.case(*n)?;
            let sol = solve_case(&cfg)?;
            let report = ErrorReport {
                triplet: cfg.triplet,
                n: cfg.n,
                h: sol.disc.h(),
                gamma0: cfg.gamma0,
                errors: sol.errors(),
                cond: None,
                dofs: sol.system.dim(),
                status: "ok".into(),
            };
            let csv = csv_table(ErrorReport::CSV_HEADER, &[report], ErrorReport::csv_row);
            print!("{csv}");
            write(&dir, "results.csv", &csv)?;
            write(&dir, "dofs.txt", &(sol.disc.layout.report() + "\n"))?;
            log = format!("{}\n{}\n", SolveReport::CSV_HEADER, sol.solve.csv_row());
            if c.vtk {
                let fields = sol.fields();
                write_vtk(&dir, "fields.vtk", |w| vtk::write_fields(w, &sol.disc, &fields, "velocity and pressure"))?;
                write_vtk(&dir, "cut.vtk", |w| vtk::write_cut_geometry(w, &sol.disc))?;
            }
        }
        Command::Convergence { levels } => {
            let table = convergence_study(&c.case(levels[0])?, levels)?;
            let csv = csv_table(ErrorReport::CSV_HEADER, &table.rows, ErrorReport::csv_row);
            print!("{csv}{}", table.orders_csv());
            write(&dir, "convergence.csv", &csv)?;
            write(&dir, "orders.csv", &table.orders_csv())?;
            if c.vtk {
                for &n in levels {
                    let disc = Discretization::new(n, c.triplet()?, &c.case(n)?.circle())?;
                    write_vtk(&dir, &format!("cut_n{n}.vtk"), |w| vtk::write_cut_geometry(w, &disc))?;
                }
            }
        }
        Command::GammaSweep { n, grid } => {
            let rows = gamma_sweep(&c.case(*n)?, grid)?;
            let csv = csv_table(ErrorReport::CSV_HEADER, &rows, ErrorReport::csv_row);
            print!("{csv}");
            write(&dir, "gamma_sweep.csv", &csv)?;
        }
        Command::GeometrySweep { n, xc_from, xc_to, xc_step } => {
            let xs = linear_grid(*xc_from, *xc_to, *xc_step)?;
            let rows = geometry_sweep(&c.case(*n)?, &xs)?;
            let csv = csv_table(GeometryRow::CSV_HEADER, &rows, GeometryRow::csv_row);
            print!("{csv}");
            write(&dir, "geometry_sweep.csv", &csv)?;
        }
        Command::Assumptions { levels } => {
            let rows = assumption_scan(&c.case(levels[0])?, levels, c.seed);
            let csv = csv_table(AssumptionRow::CSV_HEADER, &rows, AssumptionRow::csv_row);
            print!("{csv}");
            write(&dir, "assumptions.csv", &csv)?;
        }
        Command::Freefall { snapshot_every, .. } => {
            let cfg = cli.fall()?;
            let every = (*snapshot_every).max(1);
            let mut solves = 0usize;
            let mut vtk_err = None;
            let tr = simulate(&cfg, |step, d| {
                if c.vtk && solves.is_multiple_of(every) && vtk_err.is_none() {
                    let fields = d.fields();
                    let name = format!("snapshot_{step:06}.vtk");
                    if let Err(e) = write_vtk(&dir, &name, |w| vtk::write_fields(w, &d.disc, &fields, "falling ball")) {
                        vtk_err = Some(e);
                    }
                }
                solves += 1;
            })?;
            if let Some(e) = vtk_err {
                return Err(e);
            }
            let csv = tr.to_csv();
            write(&dir, "trajectory.csv", &csv)?;
            println!("{} rows, final status {}", tr.rows.len(), tr.status);
        }
        Command::Rerun { .. } => unreachable!("resolved before dispatch"),
    }
    if !log.is_empty() {
        write(&dir, "timing.log", &log)?;
    }
    Ok(dir)
}
