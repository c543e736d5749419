//! Image encodings of (on-site energies, observable) pairs.
//!
//! Every value is quantised onto 256 equal half-open bins of its range and
//! decoded to the bin centre, so the roundtrip error is at most range/512.
//! All three RGB channels carry the same byte.
//!
//! `correlation-v1`: an M × (M+1) canvas. Column 0 holds E_m (range [0, η]),
//! columns 1..=M hold γ_{q,r} scaled by its per-image maximum.
//!
//! `unitary-v1`: a D × (D+1) canvas for a D-dimensional Fock space. Column 0
//! rows 0..M hold E_m, the rest of column 0 is black. Pixel (i, j+1) holds
//! |U_ij| (range [0, 1]) for i ≥ j and arg U_ij (range [-π, π)) for j > i.
//! U is complex symmetric, so this stores every off-diagonal element; the
//! diagonal phases go to the metadata sidecar.

mod dataset;
mod image;

pub use dataset::{
    read_corpus, write_dataset, Corpus, DatasetConfig, DatasetSummary, ManifestRecord, Scaling,
    HEADER_FILE, MANIFEST_FILE,
};
pub use image::{Canvas, TrainingImage};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CorrelationMatrix, Propagator, UNITARY_TOLERANCE};
use crate::ensemble::WalkTemplate;
use crate::fock::FockBasis;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    #[serde(rename = "correlation-v1")]
    CorrelationV1,
    #[serde(rename = "unitary-v1")]
    UnitaryV1,
}

impl Layout {
    pub fn tag(self) -> &'static str {
        match self {
            Layout::CorrelationV1 => "correlation-v1",
            Layout::UnitaryV1 => "unitary-v1",
        }
    }

    /// Native (rows, cols) for a lattice of `sites` sites and a Fock space
    /// of dimension `dimension`.
    pub fn canvas_shape(self, sites: usize, dimension: usize) -> (usize, usize) {
        match self {
            Layout::CorrelationV1 => (sites, sites + 1),
            Layout::UnitaryV1 => (dimension, dimension + 1),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation-v1" | "correlation" => Ok(Layout::CorrelationV1),
            "unitary-v1" | "unitary" => Ok(Layout::UnitaryV1),
            other => Err(Error::UnknownLayout(other.to_owned())),
        }
    }
}

/// Byte of `value` on 256 bins spanning [lo, hi); `hi` itself maps to 255.
pub fn quantize(value: f64, lo: f64, hi: f64) -> u8 {
    if hi <= lo {
        return 0;
    }
    let bin = ((value - lo) / (hi - lo) * 256.0).floor();
    bin.clamp(0.0, 255.0) as u8
}

/// Centre of bin `byte` on [lo, hi).
pub fn dequantize(byte: u8, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    lo + (byte as f64 + 0.5) / 256.0 * (hi - lo)
}

/// Magnitudes below this have no meaningful phase and are stored as phase 0.
const PHASE_FLOOR: f64 = 1e-12;

fn phase_of(z: C64) -> f64 {
    if z.norm() < PHASE_FLOOR {
        0.0
    } else {
        z.arg()
    }
}

/// Everything needed to decode an image and re-simulate its physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetadata {
    pub layout: Layout,
    #[serde(flatten)]
    pub template: WalkTemplate,
    pub upscale: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Per-image maximum of γ (correlation-v1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// arg U_ii for every basis state (unitary-v1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_phases: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
}

impl ImageMetadata {
    pub fn new(layout: Layout, template: WalkTemplate) -> Self {
        Self {
            layout,
            template,
            upscale: 1,
            resolution: None,
            scale: None,
            diagonal_phases: None,
            master_seed: None,
            index: None,
        }
    }

    fn dimension(&self) -> Result<usize> {
        match self.layout {
            Layout::CorrelationV1 => Ok(0),
            Layout::UnitaryV1 => {
                Ok(FockBasis::new(self.template.sites, self.template.particles)?.dimension())
            }
        }
    }

    pub fn canvas_shape(&self) -> Result<(usize, usize)> {
        Ok(self
            .layout
            .canvas_shape(self.template.sites, self.dimension()?))
    }
}

/// An encoded image together with its completed sidecar.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub image: TrainingImage,
    pub metadata: ImageMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodedObservable {
    /// γ̂ renormalised to sum 1.
    Correlation(DMatrix<f64>),
    Unitary(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub energies: Vec<f64>,
    pub observable: DecodedObservable,
}

fn write_energies(canvas: &mut Canvas, energies: &[f64], bound: f64) -> Result<()> {
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("on-site energies"));
    }
    if let Some(e) = energies.iter().find(|&&e| e < 0.0 || e > bound) {
        return Err(Error::Image(format!(
            "on-site energy {e} outside the encodable range [0, {bound}]"
        )));
    }
    for (m, &e) in energies.iter().enumerate() {
        canvas.set(m, 0, quantize(e, 0.0, bound));
    }
    Ok(())
}

fn read_energies(canvas: &Canvas, sites: usize, bound: f64) -> Vec<f64> {
    (0..sites)
        .map(|m| dequantize(canvas.get(m, 0), 0.0, bound))
        .collect()
}

fn check_sites(energies: &[f64], meta: &ImageMetadata) -> Result<()> {
    if energies.len() != meta.template.sites {
        return Err(Error::DimensionMismatch(format!(
            "{} energies for {} sites",
            energies.len(),
            meta.template.sites
        )));
    }
    Ok(())
}

fn render(canvas: &Canvas, metadata: ImageMetadata) -> Result<Encoded> {
    let image = TrainingImage::render(
        metadata.layout,
        canvas,
        metadata.upscale,
        metadata.resolution,
    )?;
    Ok(Encoded { image, metadata })
}

pub fn encode_correlation(
    energies: &[f64],
    gamma: &CorrelationMatrix,
    meta: &ImageMetadata,
) -> Result<Encoded> {
    check_sites(energies, meta)?;
    let sites = meta.template.sites;
    if gamma.sites() != sites {
        return Err(Error::DimensionMismatch(format!(
            "{}-site correlation for {sites} sites",
            gamma.sites()
        )));
    }
    let mut canvas = Canvas::new(sites, sites + 1);
    write_energies(&mut canvas, energies, meta.template.disorder_bound)?;
    let scale = gamma.values().max();
    for q in 0..sites {
        for r in 0..sites {
            canvas.set(q, r + 1, quantize(gamma.get(q, r), 0.0, scale));
        }
    }
    let mut metadata = ImageMetadata {
        layout: Layout::CorrelationV1,
        ..meta.clone()
    };
    metadata.scale = Some(scale);
    metadata.diagonal_phases = None;
    render(&canvas, metadata)
}

pub fn encode_unitary(energies: &[f64], u: &Propagator, meta: &ImageMetadata) -> Result<Encoded> {
    check_sites(energies, meta)?;
    let dim = u.basis().dimension();
    if u.basis().sites() != meta.template.sites || u.basis().particles() != meta.template.particles
    {
        return Err(Error::DimensionMismatch(
            "propagator basis differs from the metadata lattice".into(),
        ));
    }
    if dim < energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "a {dim}-row canvas cannot hold {} energies",
            energies.len()
        )));
    }
    let matrix = u.matrix();
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("propagator"));
    }
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary(defect));
    }

    let mut canvas = Canvas::new(dim, dim + 1);
    write_energies(&mut canvas, energies, meta.template.disorder_bound)?;
    for i in 0..dim {
        for j in 0..dim {
            let z = matrix[(i, j)];
            let byte = if i >= j {
                quantize(z.norm(), 0.0, 1.0)
            } else {
                quantize(phase_of(z), -PI, PI)
            };
            canvas.set(i, j + 1, byte);
        }
    }
    let mut metadata = ImageMetadata {
        layout: Layout::UnitaryV1,
        ..meta.clone()
    };
    metadata.scale = None;
    metadata.diagonal_phases = Some((0..dim).map(|i| phase_of(matrix[(i, i)])).collect());
    render(&canvas, metadata)
}

/// Inverts [`encode_correlation`] or [`encode_unitary`] up to quantisation.
///
/// Images without a sidecar scale decode γ̂ on a unit scale (the result is
/// renormalised anyway); unitary images without diagonal phases get zero
/// diagonal phases.
pub fn decode_image(image: &TrainingImage, meta: &ImageMetadata) -> Result<Decoded> {
    if image.layout() != meta.layout {
        return Err(Error::UnknownLayout(format!(
            "image is {} but metadata says {}",
            image.layout(),
            meta.layout
        )));
    }
    let (rows, cols) = meta.canvas_shape()?;
    let canvas = image.canvas(rows, cols)?;
    let sites = meta.template.sites;
    let energies = read_energies(&canvas, sites, meta.template.disorder_bound);

    let observable = match meta.layout {
        Layout::CorrelationV1 => {
            let scale = meta.scale.unwrap_or(1.0);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let gamma = DMatrix::from_fn(sites, sites, |q, r| {
                dequantize(canvas.get(q, r + 1), 0.0, scale)
            });
            let total = gamma.sum();
            DecodedObservable::Correlation(gamma / total)
        }
        Layout::UnitaryV1 => {
            let dim = rows;
            if let Some(phases) = &meta.diagonal_phases {
                if phases.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{} diagonal phases for dimension {dim}",
                        phases.len()
                    )));
                }
            }
            let mut u = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..=i {
                    let magnitude = dequantize(canvas.get(i, j + 1), 0.0, 1.0);
                    let phase = if i == j {
                        meta.diagonal_phases.as_ref().map_or(0.0, |p| p[i])
                    } else {
                        dequantize(canvas.get(j, i + 1), -PI, PI)
                    };
                    let z = C64::from_polar(magnitude, phase);
                    u[(i, j)] = z;
                    u[(j, i)] = z;
                }
            }
            DecodedObservable::Unitary(u)
        }
    };
    Ok(Decoded {
        energies,
        observable,
    })
}

/// Wraps a decoded unitary as a [`Propagator`] over the metadata's basis.
pub fn decoded_propagator(u: DMatrix<C64>, meta: &ImageMetadata) -> Result<Propagator> {
    let basis = Arc::new(FockBasis::new(meta.template.sites, meta.template.particles)?);
    Propagator::from_matrix(&basis, meta.template.time, u)
}
