//! Seeded Monte-Carlo sweeps, lift histograms and single-instance analysis.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::lift::lift_table;
use crate::measures::MeasureKind;
use crate::prob::{random_joint, JointDistribution};
use crate::report::{MechanismKind, MechanismReport};
use crate::response::{aorr, srr, AORR_CAP};
use crate::watchdog::{complete_merge_mechanism, subset_merge_mechanism};

/// Random joint of trial `index`: depends only on the seed and the index.
pub fn trial_joint(seed: u64, index: u64, ns: usize, nx: usize) -> JointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    random_joint(ns, nx, &mut rng)
}

/// Runs one mechanism on one instance.
pub fn analyze(
    j: &JointDistribution,
    mechanism: MechanismKind,
    kind: MeasureKind,
    b: &Budget,
    aorr_cap: usize,
) -> Result<MechanismReport> {
    match mechanism {
        MechanismKind::WatchdogComplete => complete_merge_mechanism(j, kind, b),
        MechanismKind::WatchdogSubset => subset_merge_mechanism(j, kind, b),
        MechanismKind::Srr => srr(j, kind, b),
        MechanismKind::Aorr => {
            if !matches!(kind, MeasureKind::Alip) {
                return Err(Error::UnsupportedKind(format!(
                    "aorr only bounds lifts directly, not {kind}"
                )));
            }
            aorr(j, b, aorr_cap)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub ns: usize,
    pub nx: usize,
    pub trials: usize,
    /// LDP budgets `eps = eps_l + eps_u`.
    pub eps: Vec<f64>,
    /// Fractions `eps_l / eps`.
    pub lambdas: Vec<f64>,
    pub mechanisms: Vec<MechanismKind>,
    /// One entry per α for the α-lift measure.
    pub kinds: Vec<MeasureKind>,
    pub seed: u64,
    pub aorr_cap: usize,
    /// Record wall time per trial. Off by default so that output depends only
    /// on the seed.
    pub timing: bool,
    /// Use this joint in every trial instead of random ones.
    pub joint: Option<JointDistribution>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ns: 5,
            nx: 17,
            trials: 1000,
            eps: vec![2.0],
            lambdas: vec![0.5],
            mechanisms: vec![MechanismKind::WatchdogSubset],
            kinds: vec![MeasureKind::Alip],
            seed: 42,
            aorr_cap: AORR_CAP,
            timing: false,
            joint: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.ns == 0 || self.nx == 0 {
            return bad("alphabet sizes must be positive");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.eps.is_empty() {
            return bad("eps grid is empty");
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("eps values must be finite and nonnegative");
        }
        if self.lambdas.is_empty() {
            return bad("lambda list is empty");
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad("lambda values must lie in (0, 1)");
        }
        if self.mechanisms.is_empty() || self.kinds.is_empty() {
            return bad("no mechanism or measure selected");
        }
        Ok(())
    }

    fn instance(&self, index: usize) -> JointDistribution {
        match &self.joint {
            Some(j) => j.clone(),
            None => trial_joint(self.seed, index as u64, self.ns, self.nx),
        }
    }
}

/// One `(eps, lambda, mechanism, kind)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub eps: f64,
    pub lambda: f64,
    pub mechanism: MechanismKind,
    pub kind: MeasureKind,
    pub mean_nmi: f64,
    pub mean_max_lift_leak: f64,
    pub mean_min_lift_leak: f64,
    pub mean_wall_time_s: f64,
    pub trials: usize,
    /// Fraction of trials meeting the budget. Not written to CSV.
    pub satisfied_fraction: f64,
}

pub const SWEEP_HEADER: [&str; 10] = [
    "eps",
    "lambda",
    "mechanism",
    "kind",
    "alpha",
    "mean_nmi",
    "mean_max_lift_leak",
    "mean_min_lift_leak",
    "mean_wall_time_s",
    "trials",
];

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// One diagnostic per skipped cell.
    pub skipped: Vec<String>,
}

struct TrialResult {
    nmi: f64,
    max_leak: f64,
    min_leak: f64,
    satisfied: bool,
    secs: f64,
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Runs every cell of the grid. Trials run in parallel and are reduced in
/// index order, so the result does not depend on the thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let joints: Vec<JointDistribution> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| cfg.instance(i))
        .collect();
    let nx = joints[0].n_cols();

    let mut out = SweepOutcome::default();
    for &kind in &cfg.kinds {
        for &mechanism in &cfg.mechanisms {
            for &lambda in &cfg.lambdas {
                for &eps in &cfg.eps {
                    let cell = format!("eps={eps} lambda={lambda} mechanism={mechanism} kind={kind}");
                    if mechanism == MechanismKind::Aorr && nx > cfg.aorr_cap {
                        let msg = format!(
                            "{cell}: skipped, alphabet size {nx} exceeds aorr cap {}",
                            cfg.aorr_cap
                        );
                        log::warn!("{msg}");
                        out.skipped.push(msg);
                        continue;
                    }
                    let b = Budget::from_ldp(eps, lambda)?;
                    let results: Vec<Result<TrialResult>> = joints
                        .par_iter()
                        .map(|j| {
                            let start = cfg.timing.then(Instant::now);
                            let r = analyze(j, mechanism, kind, &b, cfg.aorr_cap)?;
                            Ok(TrialResult {
                                nmi: r.nmi,
                                max_leak: r.max_lift_leak,
                                min_leak: r.min_lift_leak,
                                satisfied: r.satisfied,
                                secs: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
                            })
                        })
                        .collect();
                    let trials = match results.into_iter().collect::<Result<Vec<_>>>() {
                        Ok(t) => t,
                        Err(e) => {
                            let msg = format!("{cell}: skipped, {e}");
                            log::warn!("{msg}");
                            out.skipped.push(msg);
                            continue;
                        }
                    };
                    let n = trials.len();
                    out.records.push(SweepRecord {
                        eps,
                        lambda,
                        mechanism,
                        kind,
                        mean_nmi: mean(trials.iter().map(|t| t.nmi), n),
                        mean_max_lift_leak: mean(trials.iter().map(|t| t.max_leak), n),
                        mean_min_lift_leak: mean(trials.iter().map(|t| t.min_leak), n),
                        mean_wall_time_s: mean(trials.iter().map(|t| t.secs), n),
                        trials: n,
                        satisfied_fraction: trials.iter().filter(|t| t.satisfied).count() as f64
                            / n as f64,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SWEEP_HEADER)?;
    for r in records {
        wtr.write_record([
            fmt_f64(r.eps),
            fmt_f64(r.lambda),
            r.mechanism.name().to_string(),
            r.kind.name().to_string(),
            r.kind.alpha().map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.mean_nmi),
            fmt_f64(r.mean_max_lift_leak),
            fmt_f64(r.mean_min_lift_leak),
            fmt_f64(r.mean_wall_time_s),
            r.trials.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Density histogram of one statistic on the shared bin grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Series {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn peak_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }
}

/// Pooled `log Ψ(x)` and `log Λ(x)` of random joints on a common grid of
/// fixed-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftHistogram {
    pub lo: f64,
    pub bin_width: f64,
    pub log_min_lift: Series,
    pub log_max_lift: Series,
}

impl LiftHistogram {
    pub fn bin_center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.bin_width
    }

    pub fn n_bins(&self) -> usize {
        self.log_min_lift.counts.len()
    }
}

fn bin_series(values: &[f64], lo: f64, width: f64, bins: usize) -> Series {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = values.len().max(1) as f64;
    Series {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        counts,
    }
}

/// Histogram of pooled log-lifts over `trials` seeded joints.
pub fn lift_histogram(
    ns: usize,
    nx: usize,
    trials: usize,
    seed: u64,
    bins: usize,
) -> Result<LiftHistogram> {
    if ns == 0 || nx == 0 || trials == 0 || bins == 0 {
        return Err(Error::InvalidConfig(
            "sizes, trials and bins must be positive".into(),
        ));
    }
    let joints: Vec<JointDistribution> = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial_joint(seed, i, ns, nx))
        .collect();
    Ok(histogram_of(&joints, bins))
}

/// Ranges narrower than this collapse to a single unit-width bin.
const DEGENERATE_RANGE: f64 = 1e-12;

/// Histogram of pooled log-lifts of the given joints.
pub fn histogram_of(joints: &[JointDistribution], bins: usize) -> LiftHistogram {
    let mut mins = Vec::new();
    let mut maxs = Vec::new();
    for j in joints {
        let lt = lift_table(j);
        mins.extend(lt.psi().iter().map(|p| p.ln()));
        maxs.extend(lt.lambda().iter().map(|l| l.ln()));
    }
    let finite = mins.iter().chain(&maxs).copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    mins.retain(|v| v.is_finite());
    let (lo, width, bins) = if hi - lo > DEGENERATE_RANGE {
        (lo, (hi - lo) / bins as f64, bins)
    } else {
        ((lo + hi) / 2.0 - 0.5, 1.0, 1)
    };
    LiftHistogram {
        lo,
        bin_width: width,
        log_min_lift: bin_series(&mins, lo, width, bins),
        log_max_lift: bin_series(&maxs, lo, width, bins),
    }
}

pub fn write_histogram_csv<W: Write>(h: &LiftHistogram, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["bin_center", "log_min_lift_density", "log_max_lift_density"])?;
    for k in 0..h.n_bins() {
        wtr.write_record([
            fmt_f64(h.bin_center(k)),
            fmt_f64(h.log_min_lift.density[k]),
            fmt_f64(h.log_max_lift.density[k]),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::validate_joint;

    fn canonical() -> JointDistribution {
        validate_joint(&[vec![0.25, 0.20, 0.05], vec![0.05, 0.20, 0.25]]).unwrap()
    }

    #[test]
    fn canonical_override_record() {
        let cfg = SweepConfig {
            trials: 1,
            eps: vec![1.2],
            lambdas: vec![0.5],
            mechanisms: vec![MechanismKind::WatchdogComplete],
            joint: Some(canonical()),
            ..SweepConfig::default()
        };
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!((out.records[0].mean_nmi - 0.6180).abs() < 1e-4);
        assert_eq!(out.records[0].satisfied_fraction, 1.0);
    }

    #[test]
    fn csv_is_deterministic() {
        let cfg = SweepConfig {
            ns: 3,
            nx: 6,
            trials: 20,
            eps: vec![1.0, 2.0],
            lambdas: vec![0.35, 0.65],
            mechanisms: vec![MechanismKind::WatchdogSubset, MechanismKind::Srr],
            ..SweepConfig::default()
        };
        let render = || {
            let mut buf = Vec::new();
            write_sweep_csv(&run_sweep(&cfg).unwrap().records, &mut buf).unwrap();
            buf
        };
        let a = render();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(render);
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("eps,lambda,mechanism,kind,alpha,mean_nmi,"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn aorr_cap_skips_cell() {
        let cfg = SweepConfig {
            ns: 2,
            nx: 13,
            trials: 2,
            mechanisms: vec![MechanismKind::Aorr],
            ..SweepConfig::default()
        };
        let out = run_sweep(&cfg).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        let base = SweepConfig::default();
        for cfg in [
            SweepConfig { trials: 0, ..base.clone() },
            SweepConfig { eps: vec![], ..base.clone() },
            SweepConfig { lambdas: vec![1.0], ..base.clone() },
            SweepConfig { eps: vec![-1.0], ..base.clone() },
        ] {
            assert!(matches!(run_sweep(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn trial_joints_are_independent_of_grid() {
        let a = trial_joint(9, 3, 4, 5);
        let b = trial_joint(9, 3, 4, 5);
        let c = trial_joint(9, 4, 4, 5);
        assert_eq!(a.probs(), b.probs());
        assert_ne!(a.probs(), c.probs());
    }

    #[test]
    fn independence_histogram_is_at_zero() {
        let j = validate_joint(&[vec![0.1, 0.3], vec![0.15, 0.45]]).unwrap();
        let h = histogram_of(&[j], 10);
        assert_eq!(h.n_bins(), 1);
        assert!(h.bin_center(0).abs() < 1e-12);
        assert_eq!(h.log_min_lift.counts, vec![2]);
        assert_eq!(h.log_max_lift.counts, vec![2]);
    }

    #[test]
    fn single_sensitive_symbol_has_unit_lifts() {
        let h = lift_histogram(1, 6, 5, 3, 8).unwrap();
        assert_eq!(h.n_bins(), 1);
        assert!(h.log_min_lift.range() < 1e-12);
        assert!(h.log_max_lift.max.abs() < 1e-12);
    }
}
