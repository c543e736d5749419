//! Verification of claimed-physical samples.
//!
//! A sample is checked by decoding its on-site energies, re-simulating the
//! walk exactly and comparing the decoded observable against the exact one:
//! KL divergence (natural log) for correlation maps, trace fidelity for
//! unitaries.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_image, read_corpus, DecodedObservable, ImageMetadata, Layout, TrainingImage};
use crate::ensemble::WalkEngine;
use crate::parallel::run_with_workers;
use crate::{Error, Result, C64};

/// Q is floored at this value (then renormalised) before taking logs.
pub const KL_FLOOR: f64 = 1e-12;

fn normalized(values: &[f64], what: &str) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Distribution(format!(
            "{what} must be finite and non-negative"
        )));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::Distribution(format!("{what} has zero total mass")));
    }
    Ok(values.iter().map(|v| v / total).collect())
}

/// KL(P‖Q) = Σ P ln(P/Q), natural log.
///
/// Both inputs are renormalised to sum 1. Cells with P = 0 contribute
/// nothing; Q is floored at [`KL_FLOOR`] and renormalised so the result is
/// always finite.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "P has {} cells, Q has {}",
            p.len(),
            q.len()
        )));
    }
    let p = normalized(p, "P")?;
    let mut q = normalized(q, "Q")?;
    q.iter_mut().for_each(|v| *v = v.max(KL_FLOOR));
    let q_total: f64 = q.iter().sum();
    let kl: f64 = p
        .iter()
        .zip(&q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi * q_total / qi).ln())
        .sum();
    // rounding can leave a tiny negative value when P == Q
    Ok(kl.max(0.0))
}

/// |tr(U_e† U_g)| / D.
pub fn fidelity(exact: &DMatrix<C64>, tested: &DMatrix<C64>) -> Result<f64> {
    if exact.shape() != tested.shape() || exact.nrows() != exact.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {:?} against {:?}",
            exact.shape(),
            tested.shape()
        )));
    }
    let trace: C64 = exact
        .iter()
        .zip(tested.iter())
        .map(|(e, g)| e.conj() * g)
        .sum();
    Ok(trace.norm() / exact.nrows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A correlation sample passes when KL < max_kl.
    pub max_kl: f64,
    /// A unitary sample passes when fidelity > min_fidelity.
    pub min_fidelity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_kl: 0.03,
            min_fidelity: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub file: Option<String>,
    pub index: Option<u64>,
    pub layout: Option<Layout>,
    pub energies: Vec<f64>,
    pub kl: Option<f64>,
    pub fidelity: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

impl SampleReport {
    fn failure(file: Option<String>, message: String) -> Self {
        Self {
            file,
            index: None,
            layout: None,
            energies: Vec::new(),
            kl: None,
            fidelity: None,
            passed: false,
            error: Some(message),
        }
    }
}

/// Normalised exact and decoded correlation maps of one sample, kept for
/// the disorder-averaged comparison.
#[derive(Debug, Clone)]
struct Maps {
    exact: DMatrix<f64>,
    decoded: DMatrix<f64>,
}

fn check_sample(image: &TrainingImage, meta: &ImageMetadata) -> Result<(Vec<f64>, f64, Option<Maps>)> {
    let decoded = decode_image(image, meta)?;
    let engine = WalkEngine::new(meta.template.clone())?;
    match decoded.observable {
        DecodedObservable::Correlation(q) => {
            let exact = engine.observe(decoded.energies.clone())?.correlation.normalized();
            let kl = kl_divergence(exact.as_slice(), q.as_slice())?;
            Ok((decoded.energies, kl, Some(Maps { exact, decoded: q })))
        }
        DecodedObservable::Unitary(g) => {
            let exact = engine.unitary(decoded.energies.clone())?;
            let f = fidelity(exact.matrix(), &g)?;
            Ok((decoded.energies, f, None))
        }
    }
}

fn verify_inner(
    image: &TrainingImage,
    meta: &ImageMetadata,
    thresholds: &Thresholds,
) -> (SampleReport, Option<Maps>) {
    let mut report = SampleReport {
        file: None,
        index: meta.index,
        layout: Some(meta.layout),
        energies: Vec::new(),
        kl: None,
        fidelity: None,
        passed: false,
        error: None,
    };
    match check_sample(image, meta) {
        Ok((energies, score, maps)) => {
            report.energies = energies;
            match meta.layout {
                Layout::CorrelationV1 => {
                    report.kl = Some(score);
                    report.passed = score < thresholds.max_kl;
                }
                Layout::UnitaryV1 => {
                    report.fidelity = Some(score);
                    report.passed = score > thresholds.min_fidelity;
                }
            }
            (report, maps)
        }
        Err(e) => {
            report.error = Some(e.to_string());
            (report, None)
        }
    }
}

/// Decodes, re-simulates and scores one image. Failures (undecodable
/// image, bad metadata) are recorded in the report rather than returned.
pub fn verify_sample(image: &TrainingImage, meta: &ImageMetadata, thresholds: &Thresholds) -> SampleReport {
    verify_inner(image, meta, thresholds).0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: values.len(),
            mean,
            std,
            median: quantile(&sorted, 0.5),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Pooled histogram of on-site energies across a batch of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub values: usize,
    pub mean: f64,
    pub std: f64,
    /// Estimated disorder bound: 99th percentile × 100/99.
    pub eta_estimate: f64,
}

/// Pools every energy of every sample into `bins` equal bins over `range`
/// (default: from 0 to the largest value). A batch whose values are all
/// equal collapses to a single bin.
pub fn disorder_histogram(
    batch: &[Vec<f64>],
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<DisorderHistogram> {
    let mut pooled: Vec<f64> = batch.iter().flatten().copied().collect();
    if pooled.is_empty() {
        return Err(Error::Distribution("empty batch".into()));
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("decoded energies"));
    }
    pooled.sort_by(f64::total_cmp);
    let (min, max) = (pooled[0], pooled[pooled.len() - 1]);
    let (lo, hi) = range.unwrap_or((min.min(0.0), max));
    let bins = if hi <= lo { 1 } else { bins.max(1) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in &pooled {
        let k = if width > 0.0 {
            (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let std = (pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DisorderHistogram {
        edges,
        counts,
        values: pooled.len(),
        mean,
        std,
        eta_estimate: quantile(&pooled, 0.99) * 100.0 / 99.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub thresholds: Thresholds,
    pub workers: usize,
    pub bins: usize,
    /// The batch passes when at least this fraction of samples pass.
    pub min_pass_fraction: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            workers: 0,
            bins: 30,
            min_pass_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: Vec<SampleReport>,
    pub kl: Option<Summary>,
    pub fidelity: Option<Summary>,
    /// KL between the batch-averaged exact and decoded correlation maps.
    pub averaged_kl: Option<f64>,
    pub histogram: Option<DisorderHistogram>,
    pub passed_count: usize,
    pub failed_count: usize,
    pub errored_count: usize,
    pub partial_manifest: bool,
    pub thresholds: Thresholds,
    pub kl_log_base: String,
    pub kl_floor: f64,
    pub passed: bool,
}

impl EvalReport {
    fn assemble(
        entries: Vec<(SampleReport, Option<Maps>)>,
        options: &VerifyOptions,
        partial_manifest: bool,
    ) -> Self {
        let kls: Vec<f64> = entries.iter().filter_map(|(r, _)| r.kl).collect();
        let fids: Vec<f64> = entries.iter().filter_map(|(r, _)| r.fidelity).collect();
        let maps: Vec<&Maps> = entries.iter().filter_map(|(_, m)| m.as_ref()).collect();
        let averaged_kl = maps.first().and_then(|first| {
            let (r, c) = first.exact.shape();
            let mut exact = DMatrix::zeros(r, c);
            let mut decoded = DMatrix::zeros(r, c);
            for m in &maps {
                exact += &m.exact;
                decoded += &m.decoded;
            }
            kl_divergence(exact.as_slice(), decoded.as_slice()).ok()
        });
        let energies: Vec<Vec<f64>> = entries
            .iter()
            .filter(|(r, _)| r.error.is_none())
            .map(|(r, _)| r.energies.clone())
            .collect();
        let histogram = disorder_histogram(&energies, options.bins, None).ok();
        let samples: Vec<SampleReport> = entries.into_iter().map(|(r, _)| r).collect();
        let passed_count = samples.iter().filter(|r| r.passed).count();
        let errored_count = samples.iter().filter(|r| r.error.is_some()).count();
        let failed_count = samples.len() - passed_count;
        let passed = !samples.is_empty()
            && passed_count as f64 >= options.min_pass_fraction * samples.len() as f64;
        Self {
            samples,
            kl: Summary::of(&kls),
            fidelity: Summary::of(&fids),
            averaged_kl,
            histogram,
            passed_count,
            failed_count,
            errored_count,
            partial_manifest,
            thresholds: options.thresholds,
            kl_log_base: "e".into(),
            kl_floor: KL_FLOOR,
            passed,
        }
    }

    /// Human-readable summary.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let total = self.samples.len();
        out.push_str(&format!(
            "samples   {total}\npassed    {}\nfailed    {} ({} unreadable)\n",
            self.passed_count, self.failed_count, self.errored_count
        ));
        let row = |name: &str, s: &Summary| {
            format!(
                "{name:<9} mean {:.5}  std {:.5}  median {:.5}  min {:.5}  max {:.5}\n",
                s.mean, s.std, s.median, s.min, s.max
            )
        };
        if let Some(s) = &self.kl {
            out.push_str(&row("kl", s));
        }
        if let Some(kl) = self.averaged_kl {
            out.push_str(&format!("kl(avg)   {kl:.5}\n"));
        }
        if let Some(s) = &self.fidelity {
            out.push_str(&row("fidelity", s));
        }
        if let Some(h) = &self.histogram {
            out.push_str(&format!(
                "energies  mean {:.4}  std {:.4}  eta_hat {:.4}\n",
                h.mean, h.std, h.eta_estimate
            ));
        }
        if self.partial_manifest {
            out.push_str("manifest  PARTIAL\n");
        }
        out.push_str(if self.passed { "result    PASS\n" } else { "result    FAIL\n" });
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serialises");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Verifies a batch of in-memory samples.
pub fn verify_batch(samples: &[(TrainingImage, ImageMetadata)], options: &VerifyOptions) -> EvalReport {
    let entries = run_with_workers(options.workers, || {
        samples
            .par_iter()
            .map(|(img, meta)| verify_inner(img, meta, &options.thresholds))
            .collect()
    });
    EvalReport::assemble(entries, options, false)
}

/// Verifies every sample listed in the manifest of `dir`. Unreadable images
/// and manifest lines become failed samples.
pub fn verify_corpus(dir: &Path, options: &VerifyOptions) -> Result<EvalReport> {
    let corpus = read_corpus(dir)?;
    let mut entries: Vec<(SampleReport, Option<Maps>)> = run_with_workers(options.workers, || {
        corpus
            .records
            .par_iter()
            .map(|record| {
                let mut entry = match corpus.load_image(record) {
                    Ok(img) => verify_inner(&img, &record.metadata, &options.thresholds),
                    Err(e) => (SampleReport::failure(None, e.to_string()), None),
                };
                entry.0.file = Some(record.file.clone());
                entry.0.index = record.metadata.index;
                entry
            })
            .collect()
    });
    for (line, message) in &corpus.bad_lines {
        entries.push((
            SampleReport::failure(None, format!("manifest line {line}: {message}")),
            None,
        ));
    }
    Ok(EvalReport::assemble(entries, options, corpus.is_partial()))
}
