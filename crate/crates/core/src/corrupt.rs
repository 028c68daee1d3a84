//! Test-time corruptions and the fixed Gaussian-sigma evaluation suite.
//!
//! Seven corruption kinds are implemented; they need no external assets.
//! Severity levels 1-5 map to parameters through a [`SeverityTable`], which
//! can be loaded from a text file (`kind level parameter` per line) to swap
//! in other benchmark parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::augment::{apply_gaussian_kernel, NoiseField};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};
use crate::tensor::{ImageTensor, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    Brightness,
    Contrast,
    DefocusBlur,
    Pixelate,
}

/// Whether a larger parameter means a stronger corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthDirection {
    Increasing,
    Decreasing,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 7] = [
        CorruptionKind::GaussianNoise,
        CorruptionKind::ShotNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::Brightness,
        CorruptionKind::Contrast,
        CorruptionKind::DefocusBlur,
        CorruptionKind::Pixelate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::ShotNoise => "shot_noise",
            CorruptionKind::ImpulseNoise => "impulse_noise",
            CorruptionKind::Brightness => "brightness",
            CorruptionKind::Contrast => "contrast",
            CorruptionKind::DefocusBlur => "defocus_blur",
            CorruptionKind::Pixelate => "pixelate",
        }
    }

    pub fn is_noise(self) -> bool {
        matches!(
            self,
            CorruptionKind::GaussianNoise | CorruptionKind::ShotNoise | CorruptionKind::ImpulseNoise
        )
    }

    pub fn strength_direction(self) -> StrengthDirection {
        match self {
            CorruptionKind::ShotNoise | CorruptionKind::Contrast => StrengthDirection::Decreasing,
            _ => StrengthDirection::Increasing,
        }
    }

    /// Checks `param` against the kind's domain.
    pub fn validate_param(self, param: f64) -> Result<()> {
        let ok = param.is_finite()
            && match self {
                CorruptionKind::GaussianNoise => param >= 0.0,
                CorruptionKind::ShotNoise => param > 0.0,
                CorruptionKind::ImpulseNoise => (0.0..=1.0).contains(&param),
                CorruptionKind::Brightness => (-1.0..=1.0).contains(&param),
                CorruptionKind::Contrast => param >= 0.0,
                CorruptionKind::DefocusBlur => param >= 0.0,
                CorruptionKind::Pixelate => param >= 1.0 && param.fract() == 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "parameter {param} outside the domain of {}",
                self.name()
            )))
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(format!("corruption {s:?}")))
    }
}

/// A severity level (1-5) or an explicit parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Severity {
    Level(u8),
    Param(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: Severity,
}

impl CorruptionSpec {
    pub fn level(kind: CorruptionKind, level: u8) -> Self {
        Self {
            kind,
            severity: Severity::Level(level),
        }
    }

    pub fn param(kind: CorruptionKind, param: f64) -> Self {
        Self {
            kind,
            severity: Severity::Param(param),
        }
    }

    /// The concrete parameter, looking levels up in `table`.
    pub fn resolve(&self, table: &SeverityTable) -> Result<f64> {
        let p = match self.severity {
            Severity::Level(l) => table.param(self.kind, l)?,
            Severity::Param(p) => p,
        };
        self.kind.validate_param(p)?;
        Ok(p)
    }
}

/// Five parameters per corruption kind, ordered from mildest to strongest.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverityTable {
    entries: BTreeMap<CorruptionKind, [f64; 5]>,
}

impl Default for SeverityTable {
    /// Toolkit defaults, sized for 32x32 inputs.
    fn default() -> Self {
        use CorruptionKind::*;
        let entries = BTreeMap::from([
            (GaussianNoise, [0.04, 0.06, 0.08, 0.09, 0.10]),
            (ShotNoise, [500.0, 250.0, 100.0, 75.0, 50.0]),
            (ImpulseNoise, [0.01, 0.02, 0.03, 0.05, 0.07]),
            (Brightness, [0.05, 0.10, 0.15, 0.20, 0.30]),
            (Contrast, [0.75, 0.50, 0.40, 0.30, 0.15]),
            (DefocusBlur, [1.0, 1.5, 2.0, 2.5, 3.0]),
            (Pixelate, [2.0, 3.0, 4.0, 5.0, 6.0]),
        ]);
        Self { entries }
    }
}

impl SeverityTable {
    pub fn param(&self, kind: CorruptionKind, level: u8) -> Result<f64> {
        if !(1..=5).contains(&level) {
            return Err(Error::InvalidArgument(format!("severity level {level} not in 1..=5")));
        }
        self.entries
            .get(&kind)
            .map(|row| row[level as usize - 1])
            .ok_or_else(|| Error::UnknownKind(format!("no severity row for {kind}")))
    }

    pub fn kinds(&self) -> impl Iterator<Item = CorruptionKind> + '_ {
        self.entries.keys().copied()
    }

    /// Parses `kind level parameter` lines (whitespace or comma separated,
    /// `#` comments). Every listed kind needs all five levels, strictly
    /// monotone in its strength direction. Kinds not listed keep defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: BTreeMap<CorruptionKind, [Option<f64>; 5]> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let [kind, level, param] = fields[..] else {
                return Err(err(format!("expected 3 fields, got {}", fields.len())));
            };
            let kind: CorruptionKind = kind.parse().map_err(|e: Error| err(e.to_string()))?;
            let level: usize = level
                .parse()
                .ok()
                .filter(|l| (1..=5).contains(l))
                .ok_or_else(|| err(format!("bad level {level:?}")))?;
            let param: f64 = param.parse().map_err(|_| err(format!("bad parameter {param:?}")))?;
            kind.validate_param(param).map_err(|e| err(e.to_string()))?;
            let slot = &mut rows.entry(kind).or_default()[level - 1];
            if slot.is_some() {
                return Err(err(format!("duplicate entry for {kind} level {level}")));
            }
            *slot = Some(param);
        }
        let mut table = Self::default();
        for (kind, row) in rows {
            let mut values = [0.0; 5];
            for (l, v) in row.iter().enumerate() {
                values[l] = v.ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("{kind} is missing level {}", l + 1),
                })?;
            }
            let monotone = values.windows(2).all(|w| match kind.strength_direction() {
                StrengthDirection::Increasing => w[0] < w[1],
                StrengthDirection::Decreasing => w[0] > w[1],
            });
            if !monotone {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("{kind} levels are not strictly monotone"),
                });
            }
            table.entries.insert(kind, values);
        }
        Ok(table)
    }

    /// Renders in the format accepted by [`SeverityTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (kind, row) in &self.entries {
            for (l, v) in row.iter().enumerate() {
                out.push_str(&format!("{} {} {}\n", kind, l + 1, v));
            }
        }
        out
    }
}

/// Applies one corruption, resolving levels through `table`.
///
/// Random kinds draw from `rng` in element order: gaussian one normal per
/// element, shot one uniform per element, impulse two uniforms per element
/// (hit, then value).
pub fn corrupt(
    img: &ImageTensor,
    spec: &CorruptionSpec,
    table: &SeverityTable,
    rng: &mut RngStream,
) -> Result<ImageTensor> {
    let p = spec.resolve(table)?;
    match spec.kind {
        CorruptionKind::GaussianNoise => gaussian_noise(img, p, rng),
        CorruptionKind::ShotNoise => Ok(shot_noise(img, p, rng)),
        CorruptionKind::ImpulseNoise => Ok(impulse_noise(img, p, rng)),
        CorruptionKind::Brightness => Ok(map_values(img, |v| v + p)),
        CorruptionKind::Contrast => Ok(contrast(img, p)),
        CorruptionKind::DefocusBlur => Ok(defocus_blur(img, p)),
        CorruptionKind::Pixelate => Ok(pixelate(img, p as usize)),
    }
}

fn map_values(img: &ImageTensor, f: impl Fn(f64) -> f64) -> ImageTensor {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = f(*v as f64).clamp(0.0, 1.0) as f32;
    }
    out
}

fn gaussian_noise(img: &ImageTensor, sigma: f64, rng: &mut RngStream) -> Result<ImageTensor> {
    let field = NoiseField::sample(img.shape(), rng);
    apply_gaussian_kernel(img, sigma, &field)
}

fn shot_noise(img: &ImageTensor, lambda: f64, rng: &mut RngStream) -> ImageTensor {
    let mut out = img.clone();
    for v in out.data_mut() {
        let mean = (*v as f64).clamp(0.0, 1.0) * lambda;
        let k = poisson_inverse(mean, rng.next_unit());
        *v = (k / lambda).clamp(0.0, 1.0) as f32;
    }
    out
}

/// Inverse-transform Poisson sample: the smallest `k` with `F(k) >= u`.
///
/// Small means walk up from zero; large means start the walk at the mode,
/// whose CDF is summed from the pmf tail.
pub fn poisson_inverse(mean: f64, u: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean < 64.0 {
        let mut k = 0.0;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1.0;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }
    let mode = mean.floor();
    let p_mode = (mode * mean.ln() - mean - ln_gamma(mode + 1.0)).exp();
    // CDF at the mode: sum the pmf downward until terms vanish.
    let mut cdf = p_mode;
    let (mut k, mut p) = (mode, p_mode);
    while k > 0.0 {
        p *= k / mean;
        k -= 1.0;
        cdf += p;
        if p < p_mode * 1e-18 {
            break;
        }
    }
    let (mut k, mut p) = (mode, p_mode);
    if u <= cdf {
        // Walk down while F(k - 1) still covers u.
        while k > 0.0 && u <= cdf - p {
            cdf -= p;
            p *= k / mean;
            k -= 1.0;
        }
    } else {
        while u > cdf {
            k += 1.0;
            p *= mean / k;
            if p == 0.0 {
                break;
            }
            cdf += p;
        }
    }
    k
}

fn impulse_noise(img: &ImageTensor, prob: f64, rng: &mut RngStream) -> ImageTensor {
    let mut out = img.clone();
    for v in out.data_mut() {
        let hit = rng.next_unit() < prob;
        let high = rng.next_unit() >= 0.5;
        if hit {
            *v = if high { 1.0 } else { 0.0 };
        }
    }
    out
}

fn contrast(img: &ImageTensor, c: f64) -> ImageTensor {
    let ch = img.channels();
    let n = img.shape().pixels() as f64;
    let mut means = vec![0.0f64; ch];
    for px in img.data().chunks_exact(ch) {
        for (m, &v) in means.iter_mut().zip(px) {
            *m += v as f64;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(ch) {
        for (v, &m) in px.iter_mut().zip(&means) {
            *v = ((*v as f64 - m) * c + m).clamp(0.0, 1.0) as f32;
        }
    }
    out
}

/// Normalized disk kernel: offsets with `dx^2 + dy^2 <= r^2`.
pub fn disk_offsets(radius: f64) -> Vec<(i64, i64)> {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx * dx + dy * dy) as f64 <= r2 {
                offs.push((dy, dx));
            }
        }
    }
    offs
}

fn defocus_blur(img: &ImageTensor, radius: f64) -> ImageTensor {
    let offs = disk_offsets(radius);
    let weight = 1.0 / offs.len() as f64;
    let (h, w, ch) = (img.height() as i64, img.width() as i64, img.channels());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let sum: f64 = offs
                    .iter()
                    .map(|&(dy, dx)| {
                        let sy = (y + dy).clamp(0, h - 1) as usize;
                        let sx = (x + dx).clamp(0, w - 1) as usize;
                        img.get(sy, sx, c) as f64
                    })
                    .sum();
                out.set(y as usize, x as usize, c, (sum * weight).clamp(0.0, 1.0) as f32);
            }
        }
    }
    out
}

/// Averages each `k x k` block (partial blocks at the border average what
/// they cover) and paints the block with its mean.
fn pixelate(img: &ImageTensor, k: usize) -> ImageTensor {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut out = img.clone();
    for by in (0..h).step_by(k) {
        for bx in (0..w).step_by(k) {
            let (ey, ex) = ((by + k).min(h), (bx + k).min(w));
            let n = ((ey - by) * (ex - bx)) as f64;
            for c in 0..ch {
                let mut sum = 0.0f64;
                for y in by..ey {
                    for x in bx..ex {
                        sum += img.get(y, x, c) as f64;
                    }
                }
                let mean = (sum / n) as f32;
                for y in by..ey {
                    for x in bx..ex {
                        out.set(y, x, c, mean);
                    }
                }
            }
        }
    }
    out
}

/// The test-time noise levels used for Gaussian robustness.
pub const EVAL_SIGMAS: [f64; 6] = [0.1, 0.2, 0.3, 0.5, 0.8, 1.0];

/// Stream tag for image `index` under eval sigma `sigma`.
pub fn eval_tag(sigma: f64) -> String {
    format!("eval_sigma:{sigma}")
}

/// Corrupts every image with `corruption` using per-image streams
/// `(seed, index, tag)`. Order and content do not depend on thread count.
pub fn corrupt_dataset(
    dataset: &LabeledDataset,
    spec: &CorruptionSpec,
    table: &SeverityTable,
    seed: u64,
    tag: &str,
) -> Result<LabeledDataset> {
    let images = dataset
        .images()
        .par_iter()
        .enumerate()
        .map(|(i, img)| corrupt(img, spec, table, &mut derive_stream(seed, i as u64, tag)))
        .collect::<Result<Vec<_>>>()?;
    dataset.with_images(images)
}

/// The six Gaussian-noise test sets, in [`EVAL_SIGMAS`] order.
pub fn gaussian_eval_suite(dataset: &LabeledDataset, seed: u64) -> Result<Vec<(f64, LabeledDataset)>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let table = SeverityTable::default();
    EVAL_SIGMAS
        .iter()
        .map(|&sigma| {
            let spec = CorruptionSpec::param(CorruptionKind::GaussianNoise, sigma);
            Ok((sigma, corrupt_dataset(dataset, &spec, &table, seed, &eval_tag(sigma))?))
        })
        .collect()
}
