use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use polaron_core::cylinder::{CylGrid, CylSolution};
use polaron_core::eigen::EigenOptions;
use polaron_core::energy::{virial_report, Problem};
use polaron_core::field::Direction;
use polaron_core::linop::LinearizedOp;
use polaron_core::oracle::{radial_reference, solve_radial, RMAX_NATURAL};
use polaron_core::verify::{Plan, Status, Suite, VerificationReport, Verifier};
use polaron_core::{CanonicalPotential, Error, Grid3, MinimizeResult, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const VERSION: &str = concat!("polaron ", env!("CARGO_PKG_VERSION"));

/// Writes JSON-lines records that all carry the config hash and version.
pub struct Emitter<W: Write> {
    out: W,
    hash: String,
}

impl<W: Write> Emitter<W> {
    pub fn new(out: W, hash: String) -> Self {
        Self { out, hash }
    }

    pub fn emit(&mut self, kind: &str, body: Value) -> Result<()> {
        let mut record = json!({ "kind": kind, "version": VERSION, "config_hash": self.hash });
        if let (Value::Object(r), Value::Object(b)) = (&mut record, body) {
            r.extend(b);
        }
        writeln!(self.out, "{record}")?;
        Ok(())
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.clone())
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn solve_record(pot: &CanonicalPotential, grid: &Grid3, res: &MinimizeResult) -> Value {
    json!({
        "energy": res.energy,
        "mu": res.mu,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "lambda": res.lambda,
        "kinetic": res.kinetic,
        "interaction": res.interaction,
        "grid": { "n": grid.n, "half_length": grid.half_len },
        "potential": { "model": pot.model, "d": pot.d },
    })
}

fn minimize(cfg: &RunConfig) -> Result<(CanonicalPotential, Grid3, MinimizeResult)> {
    let (pot, grid) = (cfg.potential()?, cfg.grid()?);
    let res = Problem::new(&pot, &grid).minimize(&cfg.solver)?;
    res.require_converged()?;
    Ok((pot, grid, res))
}

pub fn solve<W: Write>(cfg: &RunConfig, em: &mut Emitter<W>) -> Result<()> {
    let (pot, grid, res) = minimize(cfg)?;
    let dir = output_dir(cfg)?;
    let field = dir.join("psi.pfld");
    res.psi.save(&field)?;
    let coords = grid.coords(0);
    let axes: Vec<Vec<f64>> = (0..3).map(|a| res.psi.interpolate_axis(a, &coords)).collect();
    let rows: Vec<String> =
        (0..coords.len()).map(|i| format!("{},{},{},{}", coords[i], axes[0][i], axes[1][i], axes[2][i])).collect();
    write_csv(&dir.join("profile.csv"), "x,psi_axis0,psi_axis1,psi_axis2", &rows)?;
    let mut record = solve_record(&pot, &grid, &res);
    record["virial_deviation"] = json!(virial_report(&res)?.max_relative_deviation);
    record["field"] = json!(field);
    em.emit("solve", record)
}

pub fn spectrum<W: Write>(cfg: &RunConfig, sweep: Option<(usize, Vec<f64>)>, em: &mut Emitter<W>) -> Result<()> {
    let base = cfg.potential()?;
    let points: Vec<CanonicalPotential> = match &sweep {
        None => vec![base],
        Some((axis, values)) => values
            .iter()
            .map(|&v| {
                let mut d = base.d;
                d[*axis] = v;
                CanonicalPotential::new(base.model, d)
            })
            .collect::<Result<_>>()?,
    };
    let grid = cfg.grid()?;
    let sectors = cfg.sectors()?;
    let mut rows = Vec::new();
    for pot in points {
        let res = Problem::new(&pot, &grid).minimize(&cfg.solver)?;
        res.require_converged()?;
        let op = LinearizedOp::from_minimizer(&pot, &res)?;
        let tol_zero = cfg.spectrum.tol_zero.unwrap_or_else(|| 10.0 * op.max_translation_residual());
        let mut total = 0;
        for &sector in &sectors {
            let spec = op.sector_lowest(sector, cfg.spectrum.k)?;
            let zero = spec.eigenvalues.iter().filter(|v| v.abs() < tol_zero).count();
            total += zero;
            for (i, (v, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
                rows.push(format!("{},{},{},{},{},{v},{r}", pot.d[0], pot.d[1], pot.d[2], sector.label(), i));
            }
            em.emit(
                "sector",
                json!({
                    "potential": { "model": pot.model, "d": pot.d },
                    "sector": sector.label(),
                    "eigenvalues": spec.eigenvalues,
                    "residuals": spec.residuals,
                    "zero_count": zero,
                }),
            )?;
        }
        em.emit(
            "census",
            json!({
                "potential": { "model": pot.model, "d": pot.d },
                "tol_zero": tol_zero,
                "translation_residual": op.max_translation_residual(),
                "zero_total": total,
                "sectors": sectors.iter().map(|s| s.label()).collect::<Vec<_>>(),
            }),
        )?;
    }
    write_csv(&output_dir(cfg)?.join("eigenvalues.csv"), "d1,d2,d3,sector,index,eigenvalue,residual", &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CylCheck {
    VnPositivity,
    Beta,
    Tn,
    Spectrum,
    HeatKernel,
    Remark67,
}

impl CylCheck {
    fn criterion(self) -> u8 {
        match self {
            CylCheck::VnPositivity => 7,
            CylCheck::Beta => 8,
            CylCheck::Remark67 => 9,
            CylCheck::Tn => 10,
            CylCheck::Spectrum => 11,
            CylCheck::HeatKernel => 12,
        }
    }
}

/// Returns whether every requested check passed.
pub fn cyl<W: Write>(
    cfg: &RunConfig,
    n_list: Option<Vec<u32>>,
    checks: &[CylCheck],
    table_out: Option<PathBuf>,
    em: &mut Emitter<W>,
) -> Result<bool> {
    if !checks.is_empty() {
        let plan = match cfg.case() {
            Ok(case) => Plan::for_case(case)?,
            Err(_) => Plan::acceptance()?,
        };
        let mut v = Verifier::new(plan);
        let report = VerificationReport { checks: checks.iter().map(|c| v.check(c.criterion())).collect() };
        for c in &report.checks {
            em.emit("check", to_value(c))?;
        }
        return Ok(report.passed());
    }
    let (pot, _, res) = minimize(cfg)?;
    let op = LinearizedOp::from_minimizer(&pot, &res)?;
    let axis = pot.cylinder_axis().ok_or_else(|| Error::Invalid("potential has no doubly degenerate spectrum".into()))?;
    let qgrid = op.q().grid();
    let extent = cfg.cyl.extent.unwrap_or(0.95 * qgrid.half_len[(axis + 1) % 3].min(qgrid.half_len[axis]));
    let sol = CylSolution::new(&op, CylGrid::new(cfg.cyl.size, cfg.cyl.size, extent, extent)?)?;
    let n_list = n_list.unwrap_or_else(|| cfg.cyl.n_list.clone());
    let nmax = n_list.iter().copied().max().unwrap_or(0);
    let table = sol.table(nmax)?;
    if let Some(path) = table_out {
        table.save(&path)?;
    }
    let opts = EigenOptions { tol: 1e-8, max_iter: 1000, ..Default::default() };
    let mut rows = Vec::new();
    for &n in &n_list {
        let cop = sol.operator(&table, n)?;
        let start = match n {
            0 => Some(sol.q.as_slice()),
            1 => Some(sol.dq.as_slice()),
            _ => None,
        };
        let spec = cop.lowest(cfg.cyl.k, start, &opts)?;
        for (i, (v, r)) in spec.values.iter().zip(&spec.residuals).enumerate() {
            rows.push(format!("{n},{i},{v},{r},{}", spec.sign_ratio));
        }
        let mut record = json!({
            "n": n,
            "eigenvalues": spec.values,
            "residuals": spec.residuals,
            "sign_ratio": spec.sign_ratio,
            "grid": { "size": cfg.cyl.size, "extent": extent },
        });
        if n == 1 {
            record["translation_residual"] = json!(cop.residual_of(&sol.dq));
        }
        em.emit("cyl-spectrum", record)?;
    }
    write_csv(&output_dir(cfg)?.join("cyl_eigenvalues.csv"), "n,index,eigenvalue,residual,sign_ratio", &rows)?;
    Ok(true)
}

pub fn oracle<W: Write>(s: f64, lambda: f64, out: Option<PathBuf>, em: &mut Emitter<W>) -> Result<()> {
    let sol = solve_radial(s, lambda)?;
    let reference = radial_reference(s, lambda)?;
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        let psi = sol.psi();
        let rows: Vec<String> = sol.r.iter().zip(&psi).map(|(r, p)| format!("{r},{p}")).collect();
        write_csv(&dir.join("radial_profile.csv"), "r,psi", &rows)?;
    }
    em.emit(
        "oracle",
        json!({
            "energy": reference.energy,
            "mu": reference.mu,
            "residual": sol.residual,
            "iterations": sol.iterations,
            "converged": true,
            "lambda": lambda,
            "kinetic": reference.kinetic,
            "interaction": reference.interaction,
            "energy_correction": reference.energy_correction,
            "grid": { "points": sol.r.len(), "rmax": RMAX_NATURAL },
            "potential": { "model": "full", "d": [s, s, s] },
        }),
    )
}

pub fn verify<W: Write>(cfg: Option<&RunConfig>, suite: Suite, em: &mut Emitter<W>) -> Result<VerificationReport> {
    let plan = match cfg.map(|c| c.case()) {
        Some(Ok(case)) => Plan::for_case(case)?,
        _ => Plan::acceptance()?,
    };
    let mut verifier = Verifier::new(plan);
    let report = verifier.run(suite);
    for c in &report.checks {
        em.emit("check", to_value(c))?;
    }
    let failed: Vec<u8> = report.failures().map(|c| c.id).collect();
    let skipped = report.checks.iter().filter(|c| c.status == Status::Skip).count();
    em.emit("report", json!({ "suite": suite, "passed": report.passed(), "failed": failed, "skipped": skipped }))?;
    Ok(report)
}

/// Returns whether the symmetry tests passed.
pub fn symmetry_check<W: Write>(cfg: &RunConfig, em: &mut Emitter<W>) -> Result<bool> {
    const TOL: f64 = 1e-3;
    let (pot, grid, res) = minimize(cfg)?;
    let problem = Problem::new(&pot, &grid);
    let centered = res.psi.center()?;
    let criteria = pot.steiner_criteria();
    let mut ok = true;
    let mut directions = Vec::new();
    for k in (0..3).filter(|&k| criteria.axes[k]) {
        directions.push(Direction::Axis(k));
    }
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        if criteria.plane(a, b) {
            directions.push(Direction::Plane(a, b));
        }
    }
    let base = problem.energy_parts(&centered)?;
    for dir in directions {
        let asymmetry = match dir {
            Direction::Axis(k) => Some(centered.reflection_asymmetry(k)),
            Direction::Plane(..) => None,
        };
        let st = problem.energy_parts(&centered.steiner_rearrange(dir)?)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let (de, dk, di) =
            (rel(st.energy, base.energy), rel(st.kinetic, base.kinetic), rel(st.interaction, base.interaction));
        let pass = asymmetry.map_or(true, |a| a < TOL) && de < TOL && dk < TOL && di < TOL;
        ok &= pass;
        em.emit(
            "symmetry",
            json!({
                "direction": to_value(&dir),
                "asymmetry": asymmetry,
                "energy_change": de,
                "kinetic_change": dk,
                "interaction_change": di,
                "tolerance": TOL,
                "pass": pass,
            }),
        )?;
    }
    Ok(ok)
}
