//! Gaussian, Cutout and Patch Gaussian augmentations, flip-and-crop, and the
//! ordered training pipeline.
//!
//! Each randomized operation takes an [`RngStream`] and consumes it in a fixed
//! order so results are reproducible:
//!
//! * Gaussian: `sigma`, then one normal per element (row-major, channels
//!   interleaved);
//! * Cutout: center x, center y;
//! * Patch Gaussian: patch size (only with `sample_up_to`), center x,
//!   center y, `sigma`, then the full-image normal field;
//! * flip-and-crop: flip draw, crop offset x, crop offset y.

use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};
use crate::tensor::{ChannelMean, ImageTensor, Shape};

/// Half-open pixel rectangle `[start_x, end_x) x [start_y, end_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRect {
    pub start_x: usize,
    pub start_y: usize,
    pub end_x: usize,
    pub end_y: usize,
}

impl PatchRect {
    /// The patch of side `patch` centered at `(cx, cy)`, clipped to the image.
    ///
    /// The unclipped patch spans `[c - floor(patch/2), c + ceil(patch/2))`
    /// on each axis.
    pub fn centered(cx: usize, cy: usize, height: usize, width: usize, patch: usize) -> Self {
        let (lo, hi) = (patch / 2, patch.div_ceil(2));
        Self {
            start_x: cx.saturating_sub(lo),
            start_y: cy.saturating_sub(lo),
            end_x: (cx + hi).min(width),
            end_y: (cy + hi).min(height),
        }
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.start_x..self.end_x).contains(&x) && (self.start_y..self.end_y).contains(&y)
    }

    pub fn area(&self) -> usize {
        (self.end_x - self.start_x) * (self.end_y - self.start_y)
    }
}

/// Draws a patch center uniformly over the image (x first, then y) and
/// returns the clipped rectangle.
pub fn sample_patch_bounds(
    rng: &mut RngStream,
    height: usize,
    width: usize,
    patch: usize,
) -> Result<PatchRect> {
    if patch < 1 {
        return Err(Error::InvalidArgument("patch size must be at least 1".into()));
    }
    if height < 1 || width < 1 {
        return Err(Error::InvalidArgument(format!(
            "image extent {height}x{width} must be at least 1x1"
        )));
    }
    let cx = rng.next_index(width);
    let cy = rng.next_index(height);
    Ok(PatchRect::centered(cx, cy, height, width, patch))
}

/// A standard-normal field with the same shape as an image.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    shape: Shape,
    data: Vec<f64>,
}

impl NoiseField {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "noise field for {} needs {} values, got {}",
                shape,
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// One `next_normal` per element, in storage order.
    pub fn sample(shape: Shape, rng: &mut RngStream) -> Self {
        let data = (0..shape.len()).map(|_| rng.next_normal()).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `clip_unit(img + sigma * noise)`.
pub fn apply_gaussian_kernel(img: &ImageTensor, sigma: f64, noise: &NoiseField) -> Result<ImageTensor> {
    if noise.shape() != img.shape() {
        return Err(Error::ShapeMismatch(format!(
            "noise field {} vs image {}",
            noise.shape(),
            img.shape()
        )));
    }
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut out = img.clone();
    for (o, &z) in out.data_mut().iter_mut().zip(noise.data()) {
        *o = (*o as f64 + sigma * z).clamp(0.0, 1.0) as f32;
    }
    Ok(out)
}

/// Replaces pixels inside `rect` with the matching pixels of the noisy copy
/// `clip_unit(img + sigma * noise)`; everything outside is copied untouched.
pub fn patch_gaussian_kernel(
    img: &ImageTensor,
    rect: PatchRect,
    sigma: f64,
    noise: &NoiseField,
) -> Result<ImageTensor> {
    let noisy = apply_gaussian_kernel(img, sigma, noise)?;
    Ok(combine_inside(img, &noisy, rect))
}

fn combine_inside(outside: &ImageTensor, inside: &ImageTensor, rect: PatchRect) -> ImageTensor {
    let shape = outside.shape();
    let mut out = outside.clone();
    let c = shape.channels;
    for y in rect.start_y..rect.end_y {
        let lo = shape.index(y, rect.start_x, 0);
        let hi = lo + (rect.end_x - rect.start_x) * c;
        out.data_mut()[lo..hi].copy_from_slice(&inside.data()[lo..hi]);
    }
    out
}

/// Sets every pixel inside `rect` to `fill`.
pub fn cutout_kernel(img: &ImageTensor, rect: PatchRect, fill: &ChannelMean) -> Result<ImageTensor> {
    if fill.channels() != img.channels() {
        return Err(Error::ShapeMismatch(format!(
            "fill has {} channels, image has {}",
            fill.channels(),
            img.channels()
        )));
    }
    let mut out = img.clone();
    for y in rect.start_y..rect.end_y {
        for x in rect.start_x..rect.end_x {
            for (c, &v) in fill.values().iter().enumerate() {
                out.set(y, x, c, v as f32);
            }
        }
    }
    Ok(out)
}

/// Which augmentation to apply and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum AugmentKind {
    None,
    Gaussian {
        sigma_max: f64,
    },
    Cutout {
        patch_size: usize,
        fill: ChannelMean,
    },
    PatchGaussian {
        patch_size: usize,
        sigma_max: f64,
        sample_up_to: bool,
    },
}

impl AugmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentKind::None => "none",
            AugmentKind::Gaussian { .. } => "gaussian",
            AugmentKind::Cutout { .. } => "cutout",
            AugmentKind::PatchGaussian { .. } => "patch_gaussian",
        }
    }

    fn validate(&self) -> Result<()> {
        let (sigma, patch) = match self {
            AugmentKind::None => (None, None),
            AugmentKind::Gaussian { sigma_max } => (Some(*sigma_max), None),
            AugmentKind::Cutout { patch_size, .. } => (None, Some(*patch_size)),
            AugmentKind::PatchGaussian {
                patch_size,
                sigma_max,
                ..
            } => (Some(*sigma_max), Some(*patch_size)),
        };
        if let Some(s) = sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("sigma_max must be finite and >= 0, got {s}")));
            }
        }
        if patch == Some(0) {
            return Err(Error::InvalidArgument("patch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Whether flip-and-crop runs after (CIFAR-10 style) or before (ImageNet
/// style) the augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PipelineOrder {
    #[default]
    AugmentThenFlipCrop,
    FlipCropThenAugment,
}

impl PipelineOrder {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineOrder::AugmentThenFlipCrop => "augment_then_flipcrop",
            PipelineOrder::FlipCropThenAugment => "flipcrop_then_augment",
        }
    }
}

impl std::str::FromStr for PipelineOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augment_then_flipcrop" => Ok(Self::AugmentThenFlipCrop),
            "flipcrop_then_augment" => Ok(Self::FlipCropThenAugment),
            other => Err(Error::UnknownKind(format!("pipeline order {other:?}"))),
        }
    }
}

/// One augmentation plus the flip-and-crop settings around it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    pub order: PipelineOrder,
    pub pad: usize,
}

impl AugmentSpec {
    pub fn new(kind: AugmentKind) -> Self {
        Self {
            kind,
            order: PipelineOrder::default(),
            pad: 0,
        }
    }

    pub fn none() -> Self {
        Self::new(AugmentKind::None)
    }

    pub fn gaussian(sigma_max: f64) -> Self {
        Self::new(AugmentKind::Gaussian { sigma_max })
    }

    pub fn cutout(patch_size: usize, fill: ChannelMean) -> Self {
        Self::new(AugmentKind::Cutout { patch_size, fill })
    }

    pub fn patch_gaussian(patch_size: usize, sigma_max: f64, sample_up_to: bool) -> Self {
        Self::new(AugmentKind::PatchGaussian {
            patch_size,
            sigma_max,
            sample_up_to,
        })
    }

    pub fn with_order(mut self, order: PipelineOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()
    }
}

fn kind_mismatch(expected: &str, spec: &AugmentSpec) -> Error {
    Error::InvalidArgument(format!("expected a {expected} spec, got {}", spec.kind.name()))
}

/// Whole-image Gaussian noise with `sigma = sigma_max * u`, `u ~ U[0, 1)`.
pub fn apply_gaussian(img: &ImageTensor, spec: &AugmentSpec, rng: &mut RngStream) -> Result<ImageTensor> {
    let AugmentKind::Gaussian { sigma_max } = spec.kind else {
        return Err(kind_mismatch("gaussian", spec));
    };
    spec.validate()?;
    let sigma = sigma_max * rng.next_unit();
    let field = NoiseField::sample(img.shape(), rng);
    apply_gaussian_kernel(img, sigma, &field)
}

/// Fills a randomly centered square with the configured per-channel mean.
pub fn apply_cutout(img: &ImageTensor, spec: &AugmentSpec, rng: &mut RngStream) -> Result<ImageTensor> {
    let AugmentKind::Cutout { patch_size, ref fill } = spec.kind else {
        return Err(kind_mismatch("cutout", spec));
    };
    spec.validate()?;
    let rect = sample_patch_bounds(rng, img.height(), img.width(), patch_size)?;
    cutout_kernel(img, rect, fill)
}

/// Adds clipped Gaussian noise inside a randomly centered square.
///
/// With `sample_up_to` the side is first drawn from `{1, ..., patch_size}`.
pub fn apply_patch_gaussian(
    img: &ImageTensor,
    spec: &AugmentSpec,
    rng: &mut RngStream,
) -> Result<ImageTensor> {
    let AugmentKind::PatchGaussian {
        patch_size,
        sigma_max,
        sample_up_to,
    } = spec.kind
    else {
        return Err(kind_mismatch("patch_gaussian", spec));
    };
    spec.validate()?;
    let patch = if sample_up_to {
        rng.next_int(1, patch_size as i64)? as usize
    } else {
        patch_size
    };
    let rect = sample_patch_bounds(rng, img.height(), img.width(), patch)?;
    let sigma = sigma_max * rng.next_unit();
    let field = NoiseField::sample(img.shape(), rng);
    patch_gaussian_kernel(img, rect, sigma, &field)
}

/// Dispatches on `spec.kind`; `None` returns a copy.
pub fn apply_augmentation(img: &ImageTensor, spec: &AugmentSpec, rng: &mut RngStream) -> Result<ImageTensor> {
    match spec.kind {
        AugmentKind::None => Ok(img.clone()),
        AugmentKind::Gaussian { .. } => apply_gaussian(img, spec, rng),
        AugmentKind::Cutout { .. } => apply_cutout(img, spec, rng),
        AugmentKind::PatchGaussian { .. } => apply_patch_gaussian(img, spec, rng),
    }
}

/// Optional horizontal mirror, then a window of the original size cut from
/// the zero-padded image at offset `(offset_x, offset_y)`, each in
/// `0..=2*pad`.
pub fn flip_and_crop_kernel(
    img: &ImageTensor,
    pad: usize,
    flip: bool,
    offset_x: usize,
    offset_y: usize,
) -> Result<ImageTensor> {
    if offset_x > 2 * pad || offset_y > 2 * pad {
        return Err(Error::InvalidArgument(format!(
            "crop offset ({offset_x}, {offset_y}) exceeds 2*pad = {}",
            2 * pad
        )));
    }
    let Shape {
        height: h,
        width: w,
        channels: ch,
    } = img.shape();
    let mut out = ImageTensor::zeros(h, w, ch);
    for y in 0..h {
        // Row in the original image, if the window row is not padding.
        let Some(sy) = (y + offset_y).checked_sub(pad).filter(|&sy| sy < h) else {
            continue;
        };
        for x in 0..w {
            let Some(sx) = (x + offset_x).checked_sub(pad).filter(|&sx| sx < w) else {
                continue;
            };
            let sx = if flip { w - 1 - sx } else { sx };
            for c in 0..ch {
                out.set(y, x, c, img.get(sy, sx, c));
            }
        }
    }
    Ok(out)
}

/// Random horizontal flip (probability 1/2) and zero-padded random crop.
pub fn flip_and_crop(img: &ImageTensor, pad: usize, rng: &mut RngStream) -> Result<ImageTensor> {
    let flip = rng.next_unit() < 0.5;
    let range = 2 * pad as i64;
    let ox = rng.next_int(0, range)? as usize;
    let oy = rng.next_int(0, range)? as usize;
    flip_and_crop_kernel(img, pad, flip, ox, oy)
}

pub const AUGMENT_TAG: &str = "aug";
pub const FLIPCROP_TAG: &str = "flipcrop";

/// Runs the augmentation and flip-and-crop in `spec.order`, each on its own
/// stream derived from `(seed, index)` with tags `"aug"` and `"flipcrop"`.
pub fn run_pipeline(img: &ImageTensor, spec: &AugmentSpec, seed: u64, index: u64) -> Result<ImageTensor> {
    let mut aug_rng = derive_stream(seed, index, AUGMENT_TAG);
    let mut crop_rng = derive_stream(seed, index, FLIPCROP_TAG);
    match spec.order {
        PipelineOrder::AugmentThenFlipCrop => {
            let a = apply_augmentation(img, spec, &mut aug_rng)?;
            flip_and_crop(&a, spec.pad, &mut crop_rng)
        }
        PipelineOrder::FlipCropThenAugment => {
            let f = flip_and_crop(img, spec.pad, &mut crop_rng)?;
            apply_augmentation(&f, spec, &mut aug_rng)
        }
    }
}
