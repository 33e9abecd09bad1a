//! Command-line front end. The `probekit` binary only forwards to [`run`].
//!
//! Exit codes: 0 on success, 1 when a verification criterion fails, 2 on
//! invalid input or any other error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bvp::Solver;
use crate::config::RunConfig;
use crate::dtn::{assemble_dtn, DtNMatrix};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Region};
use crate::indicator::{reference_baseline, scan, write_csv, write_vtk, DataModel, DirectModel, Lattice};
use crate::io::{atomic_write, write_mesh};
use crate::oracle::ModalSolution;
use crate::verify::{report, Geometry, Status, Suite};

#[derive(Debug, Parser)]
#[command(name = "probekit", version, about = "Indicator functions for the Laplace Neumann obstacle problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "probekit.toml")]
    pub config: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the surface meshes and print their invariants.
    Mesh,
    /// Synthesize the DtN maps with and without the obstacle.
    Forward,
    /// Evaluate the indicators on the scan grid and write CSV (and VTK).
    Scan,
    /// Run the identity suite and write a pass/fail report.
    Verify,
    /// Evaluate the series solution on the scan grid (concentric spheres).
    Oracle,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("probekit: {e}");
            2
        }
    }
}

/// Runs one command; Ok carries the exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = RunConfig::load(&cli.config)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.output.dir));
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::Mesh => cmd_mesh(&cfg, &out),
        Command::Forward => cmd_forward(&cfg, &out),
        Command::Scan => cmd_scan(&cfg, &out),
        Command::Verify => cmd_verify(&cfg, &out),
        Command::Oracle => cmd_oracle(&cfg, &out),
    }
}

fn cmd_mesh(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let d = cfg.domain()?;
    let mut surfaces = vec![("outer", &d.outer)];
    if let Some(o) = &d.obstacle {
        surfaces.push(("obstacle", o));
    }
    for (name, s) in surfaces {
        let path = out.join(format!("{name}.mesh"));
        write_mesh(&path, s)?;
        println!(
            "{name}: {} vertices, {} triangles, volume {:.6}, fingerprint {} -> {}",
            s.n_vertices(),
            s.triangles.len(),
            s.enclosed_volume(),
            s.fingerprint(),
            path.display()
        );
    }
    Ok(0)
}

/// Both maps on the configured mesh, optionally synthesized on a finer mesh
/// and projected down.
pub fn forward_maps(cfg: &RunConfig) -> Result<(DtNMatrix, DtNMatrix)> {
    let coarse = cfg.domain()?;
    let Some(level) = cfg.data.fine_level else {
        let solver = Solver::new(&coarse)?;
        return Ok((assemble_dtn(&solver.background)?, assemble_dtn(&solver.op)?));
    };
    let fine = cfg.domain_at(level)?;
    let solver = Solver::new(&fine)?;
    let (l0, ld) = (assemble_dtn(&solver.background)?, assemble_dtn(&solver.op)?);
    Ok((l0.project_to(&fine.outer, &coarse.outer), ld.project_to(&fine.outer, &coarse.outer)))
}

fn cmd_forward(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (l0, ld) = forward_maps(cfg)?;
    let (p0, pd) = (cfg.lambda0_path(out), cfg.lambda_d_path(out));
    l0.write(&p0, cfg.data.binary)?;
    ld.write(&pd, cfg.data.binary)?;
    println!(
        "n = {}, fingerprint {}, symmetry residual {:.2e} / {:.2e}",
        l0.n(),
        l0.fingerprint,
        l0.symmetry_residual(),
        ld.symmetry_residual()
    );
    println!("wrote {} and {}", p0.display(), pd.display());
    Ok(0)
}

/// Reads both maps and checks them against the configured ∂Ω.
pub fn load_data(cfg: &RunConfig, domain: &Domain, out: &Path) -> Result<DataModel> {
    let l0 = DtNMatrix::read(&cfg.lambda0_path(out))?;
    let ld = DtNMatrix::read(&cfg.lambda_d_path(out))?;
    DataModel::new(domain, l0, ld, cfg.sequences()?, cfg.criteria())
}

fn cmd_scan(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let domain = cfg.domain()?;
    let data = load_data(cfg, &domain, out)?;
    let direct = DirectModel::new(&domain)?;
    let grid = cfg.grid(&domain);
    let strategy = cfg.strategy()?;
    let rows = if cfg.scan.classify {
        let base = reference_baseline(&data);
        scan(&direct, Some((&data, &strategy, base)), &grid)
    } else {
        scan(&direct, None, &grid)
    };
    let csv = out.join("scan.csv");
    write_csv(&csv, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows ({} skipped near a surface, {failed} failed) -> {}", rows.len(), grid.len() - rows.len(), csv.display());
    if let Some(col) = &cfg.scan.vtk_column {
        if cfg.scan.points.is_some() {
            return Err(Error::Config("vtk output needs a box grid".into()));
        }
        let (lo, hi) = (cfg.scan.lo, cfg.scan.hi);
        let lat = Lattice::from_box(lo.into(), hi.into(), cfg.scan.spacing);
        let vtk = out.join("scan.vtk");
        write_vtk(&vtk, &rows, &lat, col)?;
        println!("{col} -> {}", vtk.display());
    }
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let domain = cfg.domain()?;
    let data = load_data(cfg, &domain, out)?;
    let geometry = match cfg.concentric() {
        Some((center, r0, r1)) => Geometry::Concentric { center, r0, r1 },
        None => Geometry::General,
    };
    let suite = Suite::new(DirectModel::new(&domain)?, data, geometry, cfg.seed);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "maps: n = {}, symmetry residual {:.2e} (background) {:.2e} (with obstacle)",
        suite.data.l0.n(),
        suite.data.l0.symmetry_residual(),
        suite.data.ld.symmetry_residual()
    );
    let results = suite.run_all();
    text.push_str(&report(&results));
    print!("{text}");
    atomic_write(&out.join("verify.txt"), text.as_bytes())?;
    Ok(if results.iter().any(|r| r.status == Status::Fail) { 1 } else { 0 })
}

const ORACLE_HEADER: &str = "x,y,z,I,w_xx,I1,w1_xx,W_xx,I_star,w_star_xx";

fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let Some((c, r0, Some(r1))) = cfg.concentric() else {
        return Err(Error::Config("the oracle needs concentric spheres for both surfaces".into()));
    };
    let domain = cfg.domain()?;
    let grid = cfg.grid(&domain);
    let mut text = String::from(ORACLE_HEADER);
    text.push('\n');
    let mut n = 0;
    for p in grid.points.iter().filter(|p| p.region == Region::InShell && !p.near) {
        let x = p.x;
        // The mesh is inscribed, so a shell point may sit outside the exact sphere.
        let Ok(m) = ModalSolution::new(r0, r1, x - c, 60) else {
            continue;
        };
        let o = m.indicators();
        let vals = [o.i, o.w_xx, o.i1, o.w1_xx, o.big_w_xx, o.i_star, o.w_star_xx];
        let cols: Vec<String> = x.iter().chain(&vals).map(|v| format!("{v:.16e}")).collect();
        text.push_str(&cols.join(","));
        text.push('\n');
        n += 1;
    }
    let path = out.join("oracle.csv");
    atomic_write(&path, text.as_bytes())?;
    println!("{n} rows -> {}", path.display());
    Ok(0)
}
