//! The `pairindex` command-line tool.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 gap
//! closed at E_F, 4 quality gate failed or estimators disagree.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ModelKind, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::experiment::{centered_gap, run_persisted, SweepOutput};
use crate::kspace::{
    berry_curvature, bulk_gap, chern_lattice_report, dirac_report, gauge_patch_report,
    z2_ebz_report, BZGrid, BlochHamiltonian, GaugePatchPair,
};
use crate::lattice::{central_dual_point, Boundary, LatticeSpec};
use crate::model::{add_disorder, build_haldane, build_kane_mele, Hamiltonian, TimeReversalOp};
use crate::ncindex::{
    build_pair_ops, connes_area_sum, connes_target, index_report, kubo_hall, local_chern_marker,
    susy_pairing_audit, trs_even_degeneracy_audit, FluxUnitary, IndexReport,
};
use crate::spectral::{diagonalize, fermi_projection, spectral_gap, EigenDecomposition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GAP_CLOSED: i32 = 3;
pub const EXIT_QUALITY: i32 = 4;

/// Largest deviation of the local Chern marker from the reference integer.
pub const LCM_TOL: f64 = 0.1;
/// Largest deviation of the Kubo sum from the reference integer.
pub const KUBO_TOL: f64 = 0.2;
/// Largest relative error of a truncated Connes sum against its target.
pub const CONNES_TOL: f64 = 0.05;
/// Window and tolerance of the eigenvalue pairing audits.
pub const AUDIT_WINDOW: (f64, f64) = (0.01, 0.99);
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "pairindex", version, about = "Chern and Z2 indices from a pair of projections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Disorder seed; sweeps derive per-realization seeds from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Linear size L of the L×L box.
    #[arg(long, global = true)]
    pub size: Option<usize>,
    /// Half-width of the eigenvalue windows at ±1.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Chern number from the index, the local marker, the Kubo sum and k-space.
    Chern,
    /// Z2 index of a time-reversal symmetric model, with symmetry audits.
    Z2,
    /// Energy spectrum of the box and its gap at E_F.
    Spectrum,
    /// Parameter sweep of the Kane-Mele model (needs a [sweep] section).
    Sweep,
    /// Truncated Connes area sums against the oriented area.
    ConnesCheck,
    /// Bloch bands, Berry curvature, Dirac points and gauge patches.
    Kspace,
    /// Z2 index over the effective Brillouin zone.
    EbzZ2,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Chern => "chern",
            Command::Z2 => "z2",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::ConnesCheck => "connes-check",
            Command::Kspace => "kspace",
            Command::EbzZ2 => "ebz-z2",
        }
    }

    fn default_model(self) -> ModelKind {
        match self {
            Command::Z2 | Command::Sweep | Command::EbzZ2 => ModelKind::KaneMele,
            _ => ModelKind::Haldane,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    /// Rounded human-readable summary.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::GapClosed(_) | Error::FermiLevelOnSpectrum { .. } => EXIT_GAP_CLOSED,
        _ => EXIT_OTHER,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::for_model(cli.command.default_model()),
    };
    let cfg = base.apply(&Overrides {
        seed: cli.seed,
        size: cli.size,
        delta: cli.delta,
        out: cli.out.clone(),
        threads: cli.threads,
    });
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    run_config(cli.command, &cfg)
}

/// Run `command` with an already resolved configuration.
pub fn run_config(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut ctx = Ctx { command, cfg, files: Vec::new() };
    let provenance = ctx.provenance();
    ctx.write_json("provenance.json", &provenance)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let (exit_code, summary) = pool.install(|| match command {
        Command::Chern => cmd_chern(&mut ctx),
        Command::Z2 => cmd_z2(&mut ctx),
        Command::Spectrum => cmd_spectrum(&mut ctx),
        Command::Sweep => cmd_sweep(&mut ctx),
        Command::ConnesCheck => cmd_connes(&mut ctx),
        Command::Kspace => cmd_kspace(&mut ctx),
        Command::EbzZ2 => cmd_ebz_z2(&mut ctx),
    })?;
    Ok(Outcome { exit_code, summary, files: ctx.files })
}

struct Ctx<'a> {
    command: Command,
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn provenance(&self) -> Value {
        json!({
            "command": self.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.cfg.seed,
            "config": self.cfg,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let mut f = File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")?;
        self.files.push(path);
        Ok(())
    }

    /// JSON report with the provenance block attached.
    fn write_report(&mut self, name: &str, report: Value) -> Result<()> {
        let value = json!({ "provenance": self.provenance(), "report": report });
        self.write_json(name, &value)
    }

    fn write_csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let path = self.path(name);
        write_csv(&path, rows)?;
        self.files.push(path);
        Ok(())
    }
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn spins(model: ModelKind) -> usize {
    match model {
        ModelKind::Haldane => 1,
        ModelKind::KaneMele => 2,
    }
}

fn build(cfg: &RunConfig, boundary: Boundary) -> Result<Hamiltonian> {
    let spec = LatticeSpec::with_spins(cfg.size, cfg.size, boundary, 2, spins(cfg.model))?;
    match cfg.model {
        ModelKind::Haldane => {
            let h = build_haldane(&cfg.haldane(), &spec, cfg.chirality)?;
            add_disorder(&h, cfg.disorder_w, cfg.seed)
        }
        ModelKind::KaneMele => build_kane_mele(&cfg.kane_mele(), &spec),
    }
}

fn bloch(cfg: &RunConfig) -> Result<BlochHamiltonian> {
    match cfg.model {
        ModelKind::Haldane => Ok(BlochHamiltonian::haldane(cfg.haldane(), cfg.chirality)),
        ModelKind::KaneMele => {
            let mut p = cfg.kane_mele();
            p.disorder_w = 0.0;
            BlochHamiltonian::kane_mele(&p)
        }
    }
}

/// Bulk gap at E_F: the [`centered_gap`] of the periodic box carrying the
/// same disorder, and for a clean model at E_F = 0 also the Bloch-band gap
/// with the Dirac points included, which a box of size not divisible by 3
/// misses.
fn bulk_gap_of(cfg: &RunConfig) -> Result<f64> {
    let boxed = centered_gap(&diagonalize(&build(cfg, Boundary::Periodic)?)?, cfg.e_f);
    if cfg.disorder_w == 0.0 && cfg.e_f == 0.0 {
        return Ok(boxed.min(bulk_gap(&bloch(cfg)?, &BZGrid::new(cfg.grid_n)?)?));
    }
    Ok(boxed)
}

fn require_gap(cfg: &RunConfig) -> Result<f64> {
    let gap = bulk_gap_of(cfg)?;
    if gap < cfg.gap_threshold {
        return Err(Error::GapClosed(format!(
            "bulk gap {gap:.3e} below gap_threshold {}",
            cfg.gap_threshold
        )));
    }
    Ok(gap)
}

#[derive(Serialize)]
struct ASpectrumRow {
    eigenvalue: f64,
    localization: f64,
}

fn open_index(ctx: &mut Ctx, d: &EigenDecomposition) -> Result<(IndexReport, crate::ncindex::PairProjectionOps, FluxUnitary)> {
    let cfg = ctx.cfg;
    let p = fermi_projection(d, cfg.e_f)?;
    let u = FluxUnitary::new(d.spec(), central_dual_point(d.spec()))?;
    let ops = build_pair_ops(&p, &u)?;
    let report = index_report(&ops, cfg.delta)?;
    ctx.write_csv(
        "a_spectrum.csv",
        report
            .eigenvalues_of_a
            .iter()
            .zip(&report.localization)
            .map(|(&eigenvalue, &localization)| ASpectrumRow { eigenvalue, localization }),
    )?;
    Ok((report, ops, u))
}

fn cmd_chern(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    if cfg.lcm_side > cfg.size {
        return Err(Error::Config(format!("lcm_side {} exceeds size {}", cfg.lcm_side, cfg.size)));
    }
    let gap = require_gap(cfg)?;
    let h = build(cfg, Boundary::Open)?;
    let d = diagonalize(&h)?;
    let (report, ops, _) = open_index(ctx, &d)?;
    let p = fermi_projection(&d, cfg.e_f)?;
    let region = crate::lattice::RegionMask::central_square(h.spec(), cfg.lcm_side)?;
    let lcm = local_chern_marker(&p, &region)?;
    let kubo = kubo_hall(&d, cfg.e_f, ops.point())?;
    let k_space = if cfg.disorder_w == 0.0 {
        Some(chern_lattice_report(&bloch(cfg)?, &BZGrid::new(cfg.grid_n)?)?)
    } else {
        None
    };
    let reference = k_space.map(|k| k.chern).unwrap_or(report.chern);
    let index_agrees = report.chern == reference;
    let lcm_agrees = (lcm - reference as f64).abs() <= LCM_TOL;
    let kubo_agrees = (kubo - reference as f64).abs() <= KUBO_TOL;
    let gate = report.passes_quality_gate();
    let agree = index_agrees && lcm_agrees && kubo_agrees;
    ctx.write_report(
        "chern.json",
        json!({
            "bulk_gap": gap,
            "reference": reference,
            "index": report.summary(),
            "local_chern_marker": lcm,
            "lcm_side": cfg.lcm_side,
            "kubo_hall": kubo,
            "k_space": k_space,
            "quality_gate": gate,
            "agreement": {
                "index": index_agrees,
                "local_chern_marker": lcm_agrees,
                "kubo_hall": kubo_agrees,
                "lcm_tol": LCM_TOL,
                "kubo_tol": KUBO_TOL,
            },
        }),
    )?;
    let summary = format!(
        "chern: index {} (Tr A³ {:.4}, residual {:.3}), local marker {:.4}, Kubo {:.4}, k-space {}, gap {:.4}",
        report.chern,
        report.trace_a3,
        report.residual,
        lcm,
        kubo,
        k_space.map(|k| k.chern.to_string()).unwrap_or_else(|| "n/a".into()),
        gap
    );
    let code = if gate && agree { EXIT_OK } else { EXIT_QUALITY };
    Ok((code, summary))
}

fn cmd_z2(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    if cfg.model != ModelKind::KaneMele {
        return Err(Error::Config("z2 needs model = \"kane_mele\"".into()));
    }
    let gap = require_gap(cfg)?;
    let h = build(cfg, Boundary::Open)?;
    let d = diagonalize(&h)?;
    let (report, ops, u) = open_index(ctx, &d)?;
    let theta = TimeReversalOp::new(h.spec())?;
    let pairing = susy_pairing_audit(&ops, AUDIT_WINDOW, AUDIT_TOL)?;
    let trs = trs_even_degeneracy_audit(&ops, &theta, &u, AUDIT_WINDOW, AUDIT_TOL)?;
    let ebz = if cfg.disorder_w == 0.0 {
        Some(z2_ebz_report(&bloch(cfg)?, &BZGrid::new(even(cfg.grid_n))?, &|_, _, _| 0.0)?)
    } else {
        None
    };
    let gate = report.passes_quality_gate() && pairing.passed() && trs.passed();
    let agree = ebz.is_none_or(|e| e.z2 == report.z2);
    ctx.write_report(
        "z2.json",
        json!({
            "bulk_gap": gap,
            "index": report.summary(),
            "pairing_audit": pairing,
            "trs_audit": trs,
            "ebz": ebz,
            "quality_gate": gate,
            "ebz_agrees": agree,
        }),
    )?;
    let summary = format!(
        "z2: {} (n+ {}, Tr A³ {:.4}, residual {:.3}), EBZ {}, audits {}",
        report.z2,
        report.n_plus,
        report.trace_a3,
        report.residual,
        ebz.map(|e| e.z2.to_string()).unwrap_or_else(|| "n/a".into()),
        if pairing.passed() && trs.passed() { "passed" } else { "FAILED" }
    );
    let code = if gate && agree { EXIT_OK } else { EXIT_QUALITY };
    Ok((code, summary))
}

fn even(n: usize) -> usize {
    n + n % 2
}

#[derive(Serialize)]
struct EnergyRow {
    index: usize,
    energy: f64,
}

fn cmd_spectrum(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    let mut out = serde_json::Map::new();
    let mut lines = Vec::new();
    for (name, boundary) in [("open", Boundary::Open), ("periodic", Boundary::Periodic)] {
        let d = diagonalize(&build(cfg, boundary)?)?;
        ctx.write_csv(
            &format!("spectrum_{name}.csv"),
            d.eigenvalues().iter().enumerate().map(|(index, &energy)| EnergyRow { index, energy }),
        )?;
        let g = spectral_gap(&d, cfg.e_f);
        lines.push(format!("{name} gap {:.4}", g.gap));
        out.insert(name.into(), json!({ "dim": d.dim(), "gap": g }));
    }
    ctx.write_report("spectrum.json", Value::Object(out))?;
    Ok((EXIT_OK, format!("spectrum: {}", lines.join(", "))))
}

fn cmd_sweep(ctx: &mut Ctx) -> Result<(i32, String)> {
    let sc = ctx.cfg.sweep_config()?;
    let out = SweepOutput::in_dir(&ctx.cfg.out);
    let (records, summary) = run_persisted(&sc, &out)?;
    ctx.files.push(out.csv.clone());
    ctx.files.push(out.summary.clone());
    let flagged = records.iter().filter(|r| !r.is_unflagged()).count();
    let audits_failed = records.iter().filter(|r| r.degeneracy_audit == Some(false)).count();
    let text = format!(
        "sweep: {} records, {} flagged, {} z2 flips, constant on unflagged runs: {}",
        records.len(),
        flagged,
        summary.flips.len(),
        summary.constant_on_unflagged_runs
    );
    let code = if summary.constant_on_unflagged_runs && audits_failed == 0 { EXIT_OK } else { EXIT_QUALITY };
    Ok((code, text))
}

fn cmd_connes(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (u, v, w) in cfg.triples() {
        let sum = connes_area_sum(u, v, w, cfg.connes_radius)?;
        let target = connes_target(u, v, w);
        let rel = if target.norm() > 0.0 { (sum - target).norm() / target.norm() } else { sum.norm() };
        worst = worst.max(rel);
        rows.push(json!({
            "u": [u.0, u.1], "v": [v.0, v.1], "w": [w.0, w.1],
            "sum_re": sum.re, "sum_im": sum.im,
            "target_re": target.re, "target_im": target.im,
            "relative_error": rel,
        }));
    }
    ctx.write_report(
        "connes.json",
        json!({ "radius": cfg.connes_radius, "tolerance": CONNES_TOL, "triples": rows }),
    )?;
    let code = if worst <= CONNES_TOL { EXIT_OK } else { EXIT_QUALITY };
    Ok((code, format!("connes-check: {} triples, worst relative error {:.3e}", rows.len(), worst)))
}

#[derive(Serialize)]
struct BandRow {
    m1: usize,
    m2: usize,
    k1: f64,
    k2: f64,
    band: usize,
    energy: f64,
}

fn cmd_kspace(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    let bh = bloch(cfg)?;
    let grid = BZGrid::new(cfg.grid_n)?;
    let mut bands = Vec::new();
    for m2 in 0..grid.n() {
        for m1 in 0..grid.n() {
            let k = grid.k(m1, m2);
            for (band, energy) in bh.energies(k)?.into_iter().enumerate() {
                bands.push(BandRow { m1, m2, k1: k.0, k2: k.1, band, energy });
            }
        }
    }
    ctx.write_csv("bands.csv", bands)?;
    let gap = bulk_gap(&bh, &grid)?;
    if gap < cfg.gap_threshold {
        return Err(Error::GapClosed(format!("bulk gap {gap:.3e} below gap_threshold {}", cfg.gap_threshold)));
    }
    let chern = chern_lattice_report(&bh, &grid)?;
    ctx.write_csv("berry_curvature.csv", berry_curvature(&bh, &grid)?)?;
    let mut report = json!({ "bulk_gap": gap, "chern": chern });
    let mut summary = format!("kspace: chern {} (raw {:.6}), bulk gap {:.4}", chern.chern, chern.raw, gap);
    if cfg.model == ModelKind::Haldane {
        report["dirac_points"] = json!(dirac_report(&bh)?);
        if cfg.t != 0.0 {
            let patches = gauge_patch_report(&GaugePatchPair::new(cfg.haldane())?, &grid)?;
            summary += &format!(", gauge patch K sum {:.4}i", patches.k_sum_imag);
            report["gauge_patch_passed"] = json!(patches.passed());
            report["gauge_patches"] = json!(patches);
        }
    }
    ctx.write_report("kspace.json", report)?;
    Ok((EXIT_OK, summary))
}

fn cmd_ebz_z2(ctx: &mut Ctx) -> Result<(i32, String)> {
    let cfg = ctx.cfg;
    if cfg.model != ModelKind::KaneMele {
        return Err(Error::Config("ebz-z2 needs model = \"kane_mele\"".into()));
    }
    if cfg.disorder_w != 0.0 {
        return Err(Error::Config("ebz-z2 needs a clean model (disorder_w = 0)".into()));
    }
    require_gap(cfg)?;
    let grid = BZGrid::new(even(cfg.grid_n))?;
    let r = z2_ebz_report(&bloch(cfg)?, &grid, &|_, _, _| 0.0)?;
    ctx.write_report("ebz_z2.json", json!(r))?;
    Ok((EXIT_OK, format!("ebz-z2: {} (raw {:.6}, min gap {:.4})", r.z2, r.raw, r.min_gap)))
}
