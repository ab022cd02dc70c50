//! Parameter sweeps of the Kane-Mele model that track the spectral gap and the
//! real-space indices, plus the norm-continuity study of P_F and A.
//!
//! Each sweep point is computed on an open box for the index and on a periodic
//! twin box with the same disorder realization for the bulk gap; the open
//! box's own gap is dominated by edge states and does not see bulk closure.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{hermitian_eigenvalues, hermitian_norm2};
use crate::error::{domain, Error, Result};
use crate::lattice::{central_dual_point, Boundary, LatticeSpec};
use crate::model::{build_kane_mele, check_odd_trs, trs_residual, Hamiltonian, KaneMeleParams, TimeReversalOp};
use crate::ncindex::{
    build_pair_ops, index_report, trs_even_degeneracy_check, FluxUnitary, WINDOW_EDGE_TOL,
};
use crate::spectral::{diagonalize, fermi_projection, spectral_gap, EigenDecomposition};

/// Relative tolerance of the odd time-reversal check on each sweep point.
pub const TRS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    DisorderW,
    LambdaV,
    LambdaR,
}

impl SweptParameter {
    fn apply(self, base: &KaneMeleParams, value: f64) -> KaneMeleParams {
        let mut p = *base;
        match self {
            SweptParameter::DisorderW => p.disorder_w = value,
            SweptParameter::LambdaV => p.haldane.lambda_v = value,
            SweptParameter::LambdaR => p.lambda_r = value,
        }
        p
    }
}

fn default_realizations() -> usize {
    1
}
fn default_delta() -> f64 {
    crate::ncindex::DEFAULT_DELTA
}
fn default_gap_threshold() -> f64 {
    10.0 * WINDOW_EDGE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Base model; the swept parameter and the seed are overwritten per point.
    pub model: KaneMeleParams,
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Linear size L of the L×L box.
    pub size: usize,
    #[serde(default)]
    pub e_f: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Records whose bulk gap is below this carry no index claim.
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    /// Fraction of unflagged records that also run the even-degeneracy audit.
    #[serde(default)]
    pub audit_fraction: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.values.is_empty() {
            return fail("sweep has no values".into());
        }
        let up = self.values.windows(2).all(|w| w[0] < w[1]);
        let down = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return fail("sweep values must be strictly monotone".into());
        }
        if self.realizations == 0 {
            return fail("realizations must be ≥ 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.gap_threshold >= 0.0) {
            return fail("gap_threshold must be ≥ 0".into());
        }
        if !(0.0..=1.0).contains(&self.audit_fraction) {
            return fail("audit_fraction must lie in [0, 1]".into());
        }
        if self.size < 4 {
            return fail(format!("size must be ≥ 4, got {}", self.size));
        }
        Ok(())
    }

    fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::with_capacity(self.values.len() * self.realizations);
        for &value in &self.values {
            for realization in 0..self.realizations {
                out.push(Task {
                    index: out.len(),
                    value,
                    realization,
                    seed: self.base_seed + realization as u64,
                });
            }
        }
        out
    }

    /// Deterministic spread of `audit_fraction` over the record indices.
    fn audited(&self, index: usize) -> bool {
        let f = self.audit_fraction;
        ((index + 1) as f64 * f).floor() > (index as f64 * f).floor()
    }
}

#[derive(Debug, Clone, Copy)]
struct Task {
    index: usize,
    value: f64,
    realization: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub value: f64,
    pub realization: usize,
    pub seed: u64,
    /// Bulk gap at E_F of the periodic twin box, see [`centered_gap`].
    pub gap: f64,
    /// [`centered_gap`] of the open box; absent when the bulk gap is closed.
    pub edge_gap: Option<f64>,
    pub trace_a3: Option<f64>,
    pub chern: Option<i64>,
    pub z2: Option<u8>,
    pub residual: Option<f64>,
    pub gap_closed: bool,
    pub ambiguous_window: bool,
    /// Residual and window-count gates of the index report hold.
    pub quality_ok: bool,
    pub degeneracy_audit: Option<bool>,
    pub wall_time: f64,
}

impl SweepRecord {
    /// Carries a trusted index claim.
    pub fn is_unflagged(&self) -> bool {
        !self.gap_closed && !self.ambiguous_window && self.quality_ok
    }
}

/// Width of the widest spectrum-free interval centered at `e_f`, that is
/// twice the distance from `e_f` to the spectrum.
///
/// Unlike the width of the gap containing `e_f`, this vanishes when a band
/// edge approaches `e_f` from one side only, which is how the Fermi level
/// leaves the gap when bands invert without particle-hole symmetry.
pub fn centered_gap(d: &EigenDecomposition, e_f: f64) -> f64 {
    let g = spectral_gap(d, e_f);
    if g.gap == 0.0 {
        return 0.0;
    }
    (2.0 * (e_f - g.highest_occupied).min(g.lowest_empty - e_f)).max(0.0)
}

fn compute_record(cfg: &SweepConfig, task: Task) -> Result<SweepRecord> {
    let start = Instant::now();
    let mut params = cfg.parameter.apply(&cfg.model, task.value);
    params.seed = task.seed;

    let periodic = LatticeSpec::new(cfg.size, cfg.size, Boundary::Periodic, 2)?;
    let open = periodic.with_boundary(Boundary::Open);
    let h_periodic = build_kane_mele(&params, &periodic)?;
    let h_open = build_kane_mele(&params, &open)?;
    for h in [&h_periodic, &h_open] {
        let theta = TimeReversalOp::new(h.spec())?;
        if !check_odd_trs(h, &theta, TRS_TOL)? {
            return Err(Error::TimeReversalViolated(format!(
                "sweep point {} = {} seed {}: residual {:.3e}",
                param_name(cfg.parameter),
                task.value,
                task.seed,
                trs_residual(h, &theta)?
            )));
        }
    }

    let gap = centered_gap(&diagonalize(&h_periodic)?, cfg.e_f);
    let mut record = SweepRecord {
        value: task.value,
        realization: task.realization,
        seed: task.seed,
        gap,
        edge_gap: None,
        trace_a3: None,
        chern: None,
        z2: None,
        residual: None,
        gap_closed: gap < cfg.gap_threshold,
        ambiguous_window: false,
        quality_ok: false,
        degeneracy_audit: None,
        wall_time: 0.0,
    };
    if !record.gap_closed {
        let d = diagonalize(&h_open)?;
        record.edge_gap = Some(centered_gap(&d, cfg.e_f));
        match fermi_projection(&d, cfg.e_f) {
            Err(Error::FermiLevelOnSpectrum { .. }) => record.gap_closed = true,
            Err(e) => return Err(e),
            Ok(p) => {
                let u = FluxUnitary::new(&open, central_dual_point(&open))?;
                let ops = build_pair_ops(&p, &u)?;
                let report = index_report(&ops, cfg.delta)?;
                record.trace_a3 = Some(report.trace_a3);
                record.chern = Some(report.chern);
                record.z2 = Some(report.z2);
                record.residual = Some(report.residual);
                record.ambiguous_window = report.ambiguous_window;
                record.quality_ok = report.passes_quality_gate();
                if record.is_unflagged() && cfg.audited(task.index) {
                    let theta = TimeReversalOp::new(&open)?;
                    record.degeneracy_audit =
                        Some(trs_even_degeneracy_check(&ops, &theta, &u, (0.01, 0.99), 1e-6)?);
                }
            }
        }
    }
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}

fn param_name(p: SweptParameter) -> &'static str {
    match p {
        SweptParameter::DisorderW => "disorder_w",
        SweptParameter::LambdaV => "lambda_v",
        SweptParameter::LambdaR => "lambda_r",
    }
}

/// Records of a sweep in (value, realization) order.
///
/// Points run in parallel; `sink` sees each record in order as soon as all
/// earlier ones are done. Tasks with index below `skip` are not run.
fn run_tasks(
    cfg: &SweepConfig,
    skip: usize,
    mut sink: impl FnMut(&SweepRecord) -> Result<()>,
) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let tasks: Vec<Task> = cfg.tasks().into_iter().skip(skip).collect();
    let (tx, rx) = mpsc::channel::<(usize, Result<SweepRecord>)>();
    let mut out = Vec::with_capacity(tasks.len());
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            tasks.par_iter().for_each_with(tx, |tx, &task| {
                // the receiver only disappears after an earlier error
                let _ = tx.send((task.index, compute_record(cfg, task)));
            });
        });
        let mut pending: BTreeMap<usize, SweepRecord> = BTreeMap::new();
        let mut next = skip;
        for (index, record) in rx {
            pending.insert(index, record?);
            while let Some(r) = pending.remove(&next) {
                sink(&r)?;
                out.push(r);
                next += 1;
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// One record per (value, realization) over any swept parameter.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    run_tasks(cfg, 0, |_| Ok(()))
}

pub fn disorder_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    if cfg.parameter != SweptParameter::DisorderW {
        return Err(Error::Config("disorder_sweep sweeps disorder_w".into()));
    }
    sweep(cfg)
}

pub fn transition_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    if cfg.parameter != SweptParameter::LambdaV {
        return Err(Error::Config("transition_sweep sweeps lambda_v".into()));
    }
    sweep(cfg)
}

/// Output files of a persisted sweep.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

impl SweepOutput {
    pub fn in_dir(dir: &Path) -> Self {
        SweepOutput { csv: dir.join("sweep.csv"), summary: dir.join("sweep_summary.json") }
    }
}

/// Records already in `path`, which must be a prefix of this sweep's task list.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Run a sweep, appending each record to the CSV as soon as it is in order,
/// then write the JSON summary. Records already present are kept and their
/// tasks skipped.
pub fn run_persisted(cfg: &SweepConfig, out: &SweepOutput) -> Result<(Vec<SweepRecord>, SweepSummary)> {
    cfg.validate()?;
    let mut records = read_records(&out.csv)?;
    let tasks = cfg.tasks();
    if records.len() > tasks.len() {
        return domain(format!("{} has more records than the sweep defines", out.csv.display()));
    }
    for (r, t) in records.iter().zip(&tasks) {
        if r.value != t.value || r.realization != t.realization || r.seed != t.seed {
            return domain(format!(
                "{} does not belong to this sweep (record {} = {}, seed {})",
                out.csv.display(),
                r.value,
                r.realization,
                r.seed
            ));
        }
    }
    let fresh = records.is_empty();
    if fresh {
        // a header-only file from an interrupted run is rewritten
        File::create(&out.csv)?;
    }
    let file = OpenOptions::new().append(true).open(&out.csv)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let new = run_tasks(cfg, records.len(), |r| {
        writer.serialize(r)?;
        writer.flush()?;
        Ok(())
    })?;
    records.extend(new);
    let summary = summarize(cfg, &records);
    let mut f = File::create(&out.summary)?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n")?;
    Ok((records, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueSummary {
    pub value: f64,
    pub records: usize,
    pub flagged: usize,
    pub min_gap: f64,
    /// Common z2 of the unflagged records, if they agree.
    pub z2_consensus: Option<u8>,
    pub chern_consensus: Option<i64>,
    pub audits_passed: usize,
    pub audits_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipInterval {
    pub from_value: f64,
    pub to_value: f64,
    pub from_z2: u8,
    pub to_z2: u8,
    /// Smallest bulk gap over the values from `from_value` to `to_value`.
    pub min_gap_between: f64,
    /// Some record in the interval carries the gap_closed flag.
    pub closure_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub parameter: SweptParameter,
    pub per_value: Vec<ValueSummary>,
    pub flips: Vec<FlipInterval>,
    /// z2 is constant on every maximal run of values whose records are all
    /// unflagged.
    pub constant_on_unflagged_runs: bool,
}

pub fn summarize(cfg: &SweepConfig, records: &[SweepRecord]) -> SweepSummary {
    let mut per_value: Vec<ValueSummary> = Vec::new();
    for &value in &cfg.values {
        let rs: Vec<&SweepRecord> = records.iter().filter(|r| r.value == value).collect();
        if rs.is_empty() {
            continue;
        }
        let good: Vec<&&SweepRecord> = rs.iter().filter(|r| r.is_unflagged()).collect();
        let consensus = |f: &dyn Fn(&SweepRecord) -> Option<i64>| -> Option<i64> {
            let first = f(good.first()?)?;
            good.iter().all(|r| f(r) == Some(first)).then_some(first)
        };
        per_value.push(ValueSummary {
            value,
            records: rs.len(),
            flagged: rs.len() - good.len(),
            min_gap: rs.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
            z2_consensus: consensus(&|r| r.z2.map(i64::from)).map(|z| z as u8),
            chern_consensus: consensus(&|r| r.chern),
            audits_passed: rs.iter().filter(|r| r.degeneracy_audit == Some(true)).count(),
            audits_run: rs.iter().filter(|r| r.degeneracy_audit.is_some()).count(),
        });
    }

    let mut flips = Vec::new();
    let mut last: Option<(usize, u8)> = None;
    for (i, v) in per_value.iter().enumerate() {
        let Some(z) = v.z2_consensus else { continue };
        if let Some((j, zl)) = last {
            if zl != z {
                let span = &per_value[j..=i];
                flips.push(FlipInterval {
                    from_value: per_value[j].value,
                    to_value: v.value,
                    from_z2: zl,
                    to_z2: z,
                    min_gap_between: span.iter().map(|s| s.min_gap).fold(f64::INFINITY, f64::min),
                    closure_flagged: span.iter().any(|s| s.flagged > 0),
                });
            }
        }
        last = Some((i, z));
    }

    let mut constant_on_unflagged_runs = true;
    let mut run_z2: Option<u8> = None;
    for v in &per_value {
        if v.flagged > 0 {
            run_z2 = None;
            continue;
        }
        match (run_z2, v.z2_consensus) {
            (_, None) => constant_on_unflagged_runs = false,
            (Some(a), Some(b)) if a != b => constant_on_unflagged_runs = false,
            (_, z) => run_z2 = z,
        }
    }
    SweepSummary { parameter: cfg.parameter, per_value, flips, constant_on_unflagged_runs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub scale: f64,
    /// ‖s δH‖₂
    pub dh_norm: f64,
    /// ‖P' − P‖₂
    pub dp_norm: f64,
    /// ‖A' − A‖₂
    pub da_norm: f64,
    /// max_i |λ_i(A') − λ_i(A)| over the sorted spectra.
    pub eigenvalue_drift: f64,
    pub gap_closed: bool,
}

/// Response of P_F and A = P − U_a P U_a* (flux at the central dual point) to
/// H → H + s δH for each scale s, in increasing order. The first scale with a
/// closed gap is reported flagged and larger scales are skipped.
pub fn continuity_study(
    h: &Hamiltonian,
    dh_direction: &Hamiltonian,
    scales: &[f64],
    e_f: f64,
) -> Result<Vec<ContinuityRow>> {
    if h.spec() != dh_direction.spec() {
        return domain("Hamiltonian and perturbation live on different boxes");
    }
    if !scales.windows(2).all(|w| w[0] < w[1]) || scales.iter().any(|s| *s < 0.0) {
        return domain("scales must be non-negative and strictly increasing");
    }
    let spec = *h.spec();
    let u = FluxUnitary::new(&spec, central_dual_point(&spec))?;
    let p0 = fermi_projection(&diagonalize(h)?, e_f)
        .map_err(|_| Error::GapClosed("unperturbed Hamiltonian".into()))?;
    let a0 = build_pair_ops(&p0, &u)?;
    let l0 = hermitian_eigenvalues(a0.a().as_ref())?;
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let dh = dh_direction.scaled(s);
        let dh_norm = hermitian_norm2(dh.matrix().as_ref())?;
        let p = match fermi_projection(&diagonalize(&h.sum(&dh)?)?, e_f) {
            Ok(p) => p,
            Err(Error::FermiLevelOnSpectrum { .. }) => {
                rows.push(ContinuityRow {
                    scale: s,
                    dh_norm,
                    dp_norm: f64::NAN,
                    da_norm: f64::NAN,
                    eigenvalue_drift: f64::NAN,
                    gap_closed: true,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let a = build_pair_ops(&p, &u)?;
        let l = hermitian_eigenvalues(a.a().as_ref())?;
        rows.push(ContinuityRow {
            scale: s,
            dh_norm,
            dp_norm: hermitian_norm2((p.matrix() - p0.matrix()).as_ref())?,
            da_norm: hermitian_norm2((a.a() - a0.a()).as_ref())?,
            eigenvalue_drift: l.iter().zip(&l0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            gap_closed: false,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{add_disorder, HaldaneParams};

    fn base() -> KaneMeleParams {
        KaneMeleParams { lambda_r: 0.05, ..KaneMeleParams::clean(HaldaneParams::new(1.0, 0.1)) }
    }

    fn cfg(parameter: SweptParameter, values: Vec<f64>, realizations: usize) -> SweepConfig {
        SweepConfig {
            model: base(),
            parameter,
            values,
            realizations,
            base_seed: 7,
            size: 6,
            e_f: 0.0,
            delta: 0.5,
            gap_threshold: 0.01,
            audit_fraction: 0.5,
        }
    }

    #[test]
    fn validation() {
        assert!(cfg(SweptParameter::DisorderW, vec![0.0, 0.2, 0.1], 1).validate().is_err());
        assert!(cfg(SweptParameter::DisorderW, vec![0.0], 0).validate().is_err());
        assert!(cfg(SweptParameter::DisorderW, vec![0.3, 0.1], 1).validate().is_ok());
        assert!(disorder_sweep(&cfg(SweptParameter::LambdaV, vec![0.0], 1)).is_err());
        assert!(transition_sweep(&cfg(SweptParameter::DisorderW, vec![0.0], 1)).is_err());
    }

    #[test]
    fn seeds_and_order_are_deterministic() {
        let c = cfg(SweptParameter::DisorderW, vec![0.0, 0.2], 3);
        let a = sweep(&c).unwrap();
        let b = sweep(&c).unwrap();
        let key = |r: &SweepRecord| (r.value, r.realization, r.seed);
        assert_eq!(a.iter().map(key).collect::<Vec<_>>(), vec![
            (0.0, 0, 7),
            (0.0, 1, 8),
            (0.0, 2, 9),
            (0.2, 0, 7),
            (0.2, 1, 8),
            (0.2, 2, 9)
        ]);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(SweepRecord { wall_time: 0.0, ..x.clone() }, SweepRecord { wall_time: 0.0, ..y.clone() });
        }
        // no randomness at W = 0
        for r in &a[1..3] {
            assert_eq!(r.gap, a[0].gap);
            assert_eq!(r.trace_a3, a[0].trace_a3);
        }
    }

    #[test]
    fn audit_fraction_spreads_evenly() {
        let c = SweepConfig { audit_fraction: 0.25, ..cfg(SweptParameter::DisorderW, vec![0.0], 1) };
        let picked = (0..8).filter(|&i| c.audited(i)).count();
        assert_eq!(picked, 2);
        let none = SweepConfig { audit_fraction: 0.0, ..c.clone() };
        assert!((0..8).all(|i| !none.audited(i)));
    }

    #[test]
    fn gap_closure_is_flagged_without_index_claim() {
        // L = 6 contains the Dirac points, so λ_v = 3√3 t' closes the bulk gap exactly
        let closing = 3.0 * 3f64.sqrt() * 0.1;
        let mut c = cfg(SweptParameter::LambdaV, vec![closing], 1);
        c.model.lambda_r = 0.0;
        let r = &transition_sweep(&c).unwrap()[0];
        assert!(r.gap < 1e-9);
        assert!(r.gap_closed && r.z2.is_none() && r.chern.is_none());
    }

    #[test]
    fn persisted_sweep_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let out = SweepOutput::in_dir(dir.path());
        let full = cfg(SweptParameter::DisorderW, vec![0.0, 0.1, 0.2], 1);
        let partial = SweepConfig { values: vec![0.0, 0.1], ..full.clone() };
        let (first, _) = run_persisted(&partial, &out).unwrap();
        assert_eq!(first.len(), 2);
        let (all, summary) = run_persisted(&full, &out).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(read_records(&out.csv).unwrap().len(), 3);
        assert_eq!(summary.per_value.len(), 3);
        assert!(out.summary.exists());
        let fresh = sweep(&full).unwrap();
        for (x, y) in all.iter().zip(&fresh) {
            assert_eq!(x.trace_a3, y.trace_a3);
            assert_eq!(x.z2, y.z2);
        }
        let other = SweepConfig { base_seed: 99, ..full };
        assert!(run_persisted(&other, &out).is_err());
    }

    #[test]
    fn summary_reports_flips() {
        let c = cfg(SweptParameter::LambdaV, vec![0.0, 1.0, 2.0, 3.0], 1);
        let rec = |value: f64, z2: Option<u8>, gap: f64, closed: bool| SweepRecord {
            value,
            realization: 0,
            seed: 7,
            gap,
            edge_gap: None,
            trace_a3: Some(0.0),
            chern: Some(0),
            z2,
            residual: Some(0.0),
            gap_closed: closed,
            ambiguous_window: false,
            quality_ok: !closed,
            degeneracy_audit: None,
            wall_time: 0.0,
        };
        let rs = vec![
            rec(0.0, Some(1), 1.0, false),
            rec(1.0, None, 0.0, true),
            rec(2.0, Some(0), 0.8, false),
            rec(3.0, Some(0), 1.5, false),
        ];
        let s = summarize(&c, &rs);
        assert_eq!(s.flips.len(), 1);
        assert_eq!((s.flips[0].from_value, s.flips[0].to_value), (0.0, 2.0));
        assert!(s.flips[0].closure_flagged && s.flips[0].min_gap_between == 0.0);
        assert!(s.constant_on_unflagged_runs);
        let bad = vec![rec(0.0, Some(1), 1.0, false), rec(1.0, Some(0), 1.0, false)];
        assert!(!summarize(&c, &bad).constant_on_unflagged_runs);
    }

    #[test]
    fn continuity_rows() {
        let spec = LatticeSpec::new(6, 6, Boundary::Open, 2).unwrap();
        let h = build_kane_mele(&base(), &spec).unwrap();
        let zero = Hamiltonian::zero(spec);
        let dh = add_disorder(&zero, 1.0, 3).unwrap();
        let rows = continuity_study(&h, &dh, &[0.0, 0.005, 0.01, 0.02], 0.0).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].dp_norm, 0.0);
        assert_eq!(rows[0].eigenvalue_drift, 0.0);
        for r in &rows {
            // Weyl: eigenvalue drift ≤ ‖A' − A‖₂ ≤ 2‖P' − P‖₂
            assert!(r.eigenvalue_drift <= r.da_norm + 1e-12);
            assert!(r.da_norm <= 2.0 * r.dp_norm + 1e-12);
        }
        let ratio = rows[1].dp_norm / rows[2].dp_norm;
        assert!((0.25..=1.0).contains(&ratio), "ratio {ratio}");
        assert!(rows.windows(2).all(|w| w[0].dp_norm <= w[1].dp_norm));
    }

    #[test]
    fn continuity_stops_at_closure() {
        // flat on-site ±1 split; shifting every level by s = 1 puts E_F on the spectrum
        let spec = LatticeSpec::new(4, 4, Boundary::Open, 2).unwrap();
        let mut t = crate::model::HoppingTable::new(4);
        for s in 0..2 {
            t.push(s, s, (0, 0), crate::dense::c64::new(-1.0, 0.0));
            t.push(2 + s, 2 + s, (0, 0), crate::dense::c64::new(1.0, 0.0));
        }
        let h = t.realize(&spec).unwrap();
        let mut up = crate::model::HoppingTable::new(4);
        for c in 0..4 {
            up.push(c, c, (0, 0), crate::dense::c64::new(1.0, 0.0));
        }
        let dh = up.realize(&spec).unwrap();
        let rows = continuity_study(&h, &dh, &[0.0, 0.5, 1.0, 1.5], 0.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].gap_closed);
    }
}
