//! PNG corpora with a JSON-lines manifest.
//!
//! A corpus directory holds:
//!
//! * `dataset.json`: the generating [`DatasetConfig`] (absent for
//!   externally produced sample directories).
//! * `manifest.jsonl`: one [`ManifestRecord`] per line, in index order. A
//!   record is appended only after its PNG is on disk.
//! * `{corpus}_{index:06}.png`: the images.
//!
//! A directory with a header but no manifest is also readable: each PNG in
//! it is then described by the header's layout, template and scaling. This
//! is how generated samples are handed to the verifier.
//!
//! Manifest fields: `file`, `layout`, `sites`, `particles`, `hopping`,
//! `interaction` (Γ), `disorder_bound` (η), `time`, `occupation`, `upscale`,
//! optional `resolution`, `scale` (correlation maximum), `diagonal_phases`,
//! `master_seed` and `index`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{encode_correlation, encode_unitary, ImageMetadata, Layout, TrainingImage};
use crate::ensemble::{WalkEngine, WalkTemplate};
use crate::fock::FockBasis;
use crate::parallel::ordered_chunks;
use crate::{Error, Result};

pub const HEADER_FILE: &str = "dataset.json";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

const CHUNK: u64 = 512;

/// How the native canvas is enlarged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Integer block replication, no padding.
    Factor(usize),
    /// Largest integer factor that fits a `n`×`n` square, padded with
    /// black to exactly `n`×`n` (`n` must be a power of two).
    Resolution(usize),
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::Factor(1)
    }
}

impl Scaling {
    /// (upscale factor, padded resolution) for a canvas of the given shape.
    pub fn resolve(self, rows: usize, cols: usize) -> Result<(usize, Option<usize>)> {
        match self {
            Scaling::Factor(0) => Err(Error::Image("upscale factor must be positive".into())),
            Scaling::Factor(f) => Ok((f, None)),
            Scaling::Resolution(n) => {
                if !n.is_power_of_two() {
                    return Err(Error::Image(format!("resolution {n} is not a power of two")));
                }
                let factor = n / rows.max(cols);
                if factor == 0 {
                    return Err(Error::Image(format!(
                        "resolution {n} is smaller than the {rows}x{cols} canvas"
                    )));
                }
                Ok((factor, Some(n)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// File-name prefix.
    pub corpus: String,
    pub layout: Layout,
    pub count: u64,
    pub master_seed: u64,
    pub template: WalkTemplate,
    #[serde(default)]
    pub scaling: Scaling,
    /// Not part of the corpus identity: any worker count writes the same
    /// bytes.
    #[serde(skip)]
    pub workers: usize,
}

impl DatasetConfig {
    pub fn file_name(&self, index: u64) -> String {
        format!("{}_{index:06}.png", self.corpus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub file: String,
    #[serde(flatten)]
    pub metadata: ImageMetadata,
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub manifest: PathBuf,
    /// Images produced by this call.
    pub written: u64,
    /// Images already present from an earlier, interrupted run.
    pub resumed: u64,
    pub elapsed: Duration,
}

impl DatasetSummary {
    pub fn images_per_second(&self) -> f64 {
        self.written as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Generates (or resumes) a corpus in `out_dir`.
pub fn write_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<DatasetSummary> {
    let started = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let engine = WalkEngine::new(config.template.clone())?;
    let dim = engine.basis().dimension();
    let (rows, cols) = config.layout.canvas_shape(config.template.sites, dim);
    let (upscale, resolution) = config.scaling.resolve(rows, cols)?;

    let header_path = out_dir.join(HEADER_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let resumed = if header_path.exists() {
        let mut existing: DatasetConfig = read_json(&header_path)?;
        existing.workers = config.workers;
        if &existing != config {
            return Err(Error::Manifest {
                path: header_path,
                message: "existing corpus was generated with a different configuration".into(),
            });
        }
        truncate_to_valid_prefix(out_dir, &manifest_path)?
    } else {
        let json = serde_json::to_string_pretty(config).expect("config serialises");
        fs::write(&header_path, json + "\n").map_err(|e| Error::io(&header_path, e))?;
        File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        0
    };

    let mut manifest = BufWriter::new(
        OpenOptions::new()
            .append(true)
            .open(&manifest_path)
            .map_err(|e| Error::io(&manifest_path, e))?,
    );

    let mut base = ImageMetadata::new(config.layout, config.template.clone());
    base.upscale = upscale;
    base.resolution = resolution;
    base.master_seed = Some(config.master_seed);

    let produce = |index: u64| -> Result<(Vec<u8>, ManifestRecord)> {
        let energies = engine.sample(config.master_seed, index);
        let mut meta = base.clone();
        meta.index = Some(index);
        let encoded = match config.layout {
            Layout::CorrelationV1 => {
                let obs = engine.observe(energies.clone())?;
                encode_correlation(&energies, &obs.correlation, &meta)?
            }
            Layout::UnitaryV1 => {
                let u = engine.unitary(energies.clone())?;
                encode_unitary(&energies, &u, &meta)?
            }
        };
        let png = encoded.image.to_png()?;
        let record = ManifestRecord {
            file: config.file_name(index),
            metadata: encoded.metadata,
        };
        Ok((png, record))
    };

    ordered_chunks(
        resumed..config.count,
        config.workers,
        CHUNK,
        produce,
        |index, outcome| {
            let (png, record) = outcome.map_err(|e| Error::Realization {
                index,
                source: Box::new(e),
            })?;
            let path = out_dir.join(&record.file);
            fs::write(&path, png).map_err(|e| Error::io(&path, e))?;
            let line = serde_json::to_string(&record).expect("record serialises");
            writeln!(manifest, "{line}").map_err(|e| Error::io(&manifest_path, e))?;
            if (index + 1) % CHUNK == 0 {
                manifest.flush().map_err(|e| Error::io(&manifest_path, e))?;
            }
            Ok::<(), Error>(())
        },
    )?;
    manifest.flush().map_err(|e| Error::io(&manifest_path, e))?;

    Ok(DatasetSummary {
        manifest: manifest_path,
        written: config.count - resumed.min(config.count),
        resumed,
        elapsed: started.elapsed(),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Keeps the longest run of manifest lines that parse, carry consecutive
/// indices from zero and point at existing files. Returns its length.
fn truncate_to_valid_prefix(dir: &Path, manifest_path: &Path) -> Result<u64> {
    let text = match fs::read_to_string(manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(Error::io(manifest_path, e)),
    };
    let mut keep_bytes = 0usize;
    let mut count = 0u64;
    for line in text.split_inclusive('\n') {
        if !line.ends_with('\n') {
            break;
        }
        let valid = serde_json::from_str::<ManifestRecord>(line.trim_end())
            .map(|r| r.metadata.index == Some(count) && dir.join(&r.file).is_file())
            .unwrap_or(false);
        if !valid {
            break;
        }
        keep_bytes += line.len();
        count += 1;
    }
    let file = OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(false)
        .open(manifest_path)
        .map_err(|e| Error::io(manifest_path, e))?;
    file.set_len(keep_bytes as u64)
        .map_err(|e| Error::io(manifest_path, e))?;
    Ok(count)
}

/// A corpus or sample directory as read back for verification.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dir: PathBuf,
    pub config: Option<DatasetConfig>,
    pub records: Vec<ManifestRecord>,
    /// Manifest lines that failed to parse, as (line number, message).
    pub bad_lines: Vec<(usize, String)>,
}

impl Corpus {
    /// True when lines were unreadable or fewer records exist than the
    /// header promises.
    pub fn is_partial(&self) -> bool {
        !self.bad_lines.is_empty()
            || self
                .config
                .as_ref()
                .is_some_and(|c| (self.records.len() as u64) < c.count)
    }

    pub fn load_image(&self, record: &ManifestRecord) -> Result<TrainingImage> {
        let path = self.dir.join(&record.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        TrainingImage::from_png(&bytes, record.metadata.layout, record.metadata.upscale)
    }
}

pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let header_path = dir.join(HEADER_FILE);
    let config = if header_path.exists() {
        Some(read_json::<DatasetConfig>(&header_path)?)
    } else {
        None
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        if let Some(config) = config {
            return listing_corpus(dir, config);
        }
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut records = Vec::new();
    let mut bad_lines = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ManifestRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) => bad_lines.push((n + 1, e.to_string())),
        }
    }
    Ok(Corpus {
        dir: dir.to_owned(),
        config,
        records,
        bad_lines,
    })
}

/// A directory holding a header and PNG files but no manifest (for example
/// generator output): every `*.png` is described by the header alone.
fn listing_corpus(dir: &Path, config: DatasetConfig) -> Result<Corpus> {
    let dim = FockBasis::new(config.template.sites, config.template.particles)?.dimension();
    let (rows, cols) = config.layout.canvas_shape(config.template.sites, dim);
    let (upscale, resolution) = config.scaling.resolve(rows, cols)?;
    let mut files: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".png"))
        .collect();
    files.sort();
    let mut base = ImageMetadata::new(config.layout, config.template.clone());
    base.upscale = upscale;
    base.resolution = resolution;
    let records = files
        .into_iter()
        .map(|file| ManifestRecord {
            file,
            metadata: base.clone(),
        })
        .collect();
    Ok(Corpus {
        dir: dir.to_owned(),
        config: None,
        records,
        bad_lines: Vec::new(),
    })
}
