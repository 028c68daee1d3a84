//! Classifier interface, the random-feature toy model, its trainer and a
//! synthetic dataset whose classes differ in spatial frequency.
//!
//! The toy model is a frozen bank of 3x3 convolution filters (clamp-to-edge
//! same padding) followed by ReLU, `G x G` average pooling and a trainable
//! affine softmax head. The ReLU output is the "first layer" probe point.

use rayon::prelude::*;

use crate::augment::{run_pipeline, AugmentSpec};
use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::tensor::{ImageTensor, LabeledDataset};

/// Anything that labels images.
pub trait Classifier: Sync {
    fn num_classes(&self) -> usize;

    fn predict(&self, img: &ImageTensor) -> Result<usize>;

    /// Activations right after the first convolution, if the model exposes
    /// them.
    fn first_layer(&self, _img: &ImageTensor) -> Option<Result<Vec<f64>>> {
        None
    }

    fn predict_all(&self, imgs: &[ImageTensor]) -> Result<Vec<usize>> {
        imgs.par_iter().map(|img| self.predict(img)).collect()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Architecture of a [`ToyModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub filters: usize,
    pub channels: usize,
    pub pool: usize,
    pub classes: usize,
    /// Subtracted from every pixel before the convolution.
    pub input_offset: f64,
}

impl ToyConfig {
    /// Inputs centered at mid-gray.
    pub fn new(filters: usize, channels: usize, pool: usize, classes: usize) -> Self {
        Self {
            filters,
            channels,
            pool,
            classes,
            input_offset: 0.5,
        }
    }
}

/// Output of [`ToyModel::forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub logits: Vec<f64>,
    /// `filters x H x W`, filter-major.
    pub activations: Vec<f64>,
    /// Pooled features followed by a constant 1 for the bias row.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    config: ToyConfig,
    /// `[filter][dy][dx][channel]`.
    filters: Vec<f64>,
    /// `[feature][class]`, `feature_len()` rows.
    head: Vec<f64>,
}

impl ToyModel {
    /// Filters are `N(0, 1/(9C))` draws from stream `(seed, 0, "filters")`;
    /// the head starts at zero.
    pub fn init(seed: u64, config: ToyConfig) -> Result<Self> {
        let ToyConfig {
            filters,
            channels,
            pool,
            classes,
            input_offset,
        } = config;
        if filters < 1 || channels < 1 || pool < 1 || classes < 1 || !input_offset.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "toy model needs positive sizes, got {config:?}"
            )));
        }
        let scale = 1.0 / ((9 * channels) as f64).sqrt();
        let mut rng = derive_stream(seed, 0, "filters");
        let weights = (0..filters * 9 * channels).map(|_| rng.next_normal() * scale).collect();
        let head = vec![0.0; (filters * pool * pool + 1) * classes];
        Ok(Self {
            config,
            filters: weights,
            head,
        })
    }

    pub fn from_parts(config: ToyConfig, filters: Vec<f64>, head: Vec<f64>) -> Result<Self> {
        let m = Self::init(0, config)?;
        if filters.len() != m.filters.len() || head.len() != m.head.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} filter and {} head weights, got {} and {}",
                m.filters.len(),
                m.head.len(),
                filters.len(),
                head.len()
            )));
        }
        if head.iter().chain(&filters).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite model weight".into()));
        }
        Ok(Self { config, filters, head })
    }

    pub fn config(&self) -> ToyConfig {
        self.config
    }

    pub fn filters(&self) -> &[f64] {
        &self.filters
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn set_head(&mut self, head: Vec<f64>) -> Result<()> {
        if head.len() != self.head.len() {
            return Err(Error::ShapeMismatch(format!(
                "head needs {} weights, got {}",
                self.head.len(),
                head.len()
            )));
        }
        self.head = head;
        Ok(())
    }

    /// Pooled features plus the bias input.
    pub fn feature_len(&self) -> usize {
        self.config.filters * self.config.pool * self.config.pool + 1
    }

    fn check_input(&self, img: &ImageTensor) -> Result<()> {
        if img.channels() != self.config.channels {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} channels, image is {}",
                self.config.channels,
                img.shape()
            )));
        }
        Ok(())
    }

    /// Convolution + ReLU, `filters x H x W`.
    pub fn activations(&self, img: &ImageTensor) -> Result<Vec<f64>> {
        self.check_input(img)?;
        let (h, w, ch) = (img.height(), img.width(), img.channels());
        let k = self.config.filters;
        let mut out = vec![0.0f64; k * h * w];
        let mut patch = vec![0.0f64; 9 * ch];
        let off = self.config.input_offset;
        for y in 0..h {
            for x in 0..w {
                for dy in 0..3 {
                    let sy = (y + dy).saturating_sub(1).min(h - 1);
                    for dx in 0..3 {
                        let sx = (x + dx).saturating_sub(1).min(w - 1);
                        for c in 0..ch {
                            patch[(dy * 3 + dx) * ch + c] = img.get(sy, sx, c) as f64 - off;
                        }
                    }
                }
                for f in 0..k {
                    let wts = &self.filters[f * 9 * ch..(f + 1) * 9 * ch];
                    let v: f64 = wts.iter().zip(&patch).map(|(a, b)| a * b).sum();
                    out[(f * h + y) * w + x] = v.max(0.0);
                }
            }
        }
        Ok(out)
    }

    fn pool(&self, acts: &[f64], h: usize, w: usize) -> Vec<f64> {
        let g = self.config.pool;
        let mut feats = Vec::with_capacity(self.feature_len());
        for f in 0..self.config.filters {
            let plane = &acts[f * h * w..(f + 1) * h * w];
            for by in 0..g {
                let (y0, y1) = (by * h / g, (by + 1) * h / g);
                for bx in 0..g {
                    let (x0, x1) = (bx * w / g, (bx + 1) * w / g);
                    let n = (y1 - y0) * (x1 - x0);
                    let mut sum = 0.0;
                    for y in y0..y1 {
                        sum += plane[y * w + x0..y * w + x1].iter().sum::<f64>();
                    }
                    feats.push(if n > 0 { sum / n as f64 } else { 0.0 });
                }
            }
        }
        feats.push(1.0);
        feats
    }

    /// Affine head applied to a feature vector.
    pub fn logits_from_features(&self, feats: &[f64]) -> Vec<f64> {
        head_logits(&self.head, feats, self.config.classes)
    }

    pub fn features(&self, img: &ImageTensor) -> Result<Vec<f64>> {
        let acts = self.activations(img)?;
        Ok(self.pool(&acts, img.height(), img.width()))
    }

    pub fn forward(&self, img: &ImageTensor) -> Result<Forward> {
        let activations = self.activations(img)?;
        let features = self.pool(&activations, img.height(), img.width());
        let logits = self.logits_from_features(&features);
        Ok(Forward {
            logits,
            activations,
            features,
        })
    }

    /// Serializes as a `TOYM` checkpoint: magic, version, the four
    /// architecture sizes as little-endian `u32`, the input offset as `f64`,
    /// then a `FILT` and a `HEAD` section, each a `u32` count followed by
    /// little-endian `f64` values.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TOYM_MAGIC);
        out.extend_from_slice(&TOYM_VERSION.to_le_bytes());
        let c = self.config;
        for d in [c.filters, c.channels, c.pool, c.classes] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&c.input_offset.to_le_bytes());
        for (tag, values) in [(b"FILT", &self.filters), (b"HEAD", &self.head)] {
            out.extend_from_slice(tag);
            out.extend_from_slice(&(values.len() as u32).to_le_bytes());
            for v in values.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != TOYM_MAGIC {
            return Err(Error::BadMagic { expected: "TOYM" });
        }
        let version = r.u32()?;
        if version != TOYM_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let config = ToyConfig {
            filters: r.u32()? as usize,
            channels: r.u32()? as usize,
            pool: r.u32()? as usize,
            classes: r.u32()? as usize,
            input_offset: f64::from_le_bytes(r.take(8)?.try_into().unwrap()),
        };
        let filters = r.section(b"FILT")?;
        let head = r.section(b"HEAD")?;
        if r.pos != bytes.len() {
            return Err(Error::LengthMismatch {
                expected: r.pos,
                actual: bytes.len(),
            });
        }
        Self::from_parts(config, filters, head)
    }
}

const TOYM_MAGIC: &[u8; 4] = b"TOYM";
const TOYM_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::DimOverflow)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::TruncatedHeader)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn section(&mut self, tag: &[u8; 4]) -> Result<Vec<f64>> {
        if self.take(4)? != tag {
            return Err(Error::BadMagic {
                expected: if tag == b"FILT" { "FILT" } else { "HEAD" },
            });
        }
        let n = self.u32()? as usize;
        let len = n.checked_mul(8).ok_or(Error::DimOverflow)?;
        let raw = self.take(len).map_err(|_| Error::LengthMismatch {
            expected: n,
            actual: self.bytes.len() - self.pos,
        })?;
        Ok(raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
}

impl Classifier for ToyModel {
    fn num_classes(&self) -> usize {
        self.config.classes
    }

    fn predict(&self, img: &ImageTensor) -> Result<usize> {
        Ok(argmax(&self.forward(img)?.logits))
    }

    fn first_layer(&self, img: &ImageTensor) -> Option<Result<Vec<f64>>> {
        Some(self.activations(img))
    }
}

fn head_logits(head: &[f64], feats: &[f64], classes: usize) -> Vec<f64> {
    let mut logits = vec![0.0; classes];
    for (d, &f) in feats.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let row = &head[d * classes..(d + 1) * classes];
        for (l, &w) in logits.iter_mut().zip(row) {
            *l += f * w;
        }
    }
    logits
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Mean softmax cross-entropy of `head` over a batch of feature vectors.
pub fn head_loss(head: &[f64], feats: &[Vec<f64>], labels: &[usize], classes: usize) -> f64 {
    let total: f64 = feats
        .iter()
        .zip(labels)
        .map(|(f, &y)| {
            let z = head_logits(head, f, classes);
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
            lse - z[y]
        })
        .sum();
    total / feats.len() as f64
}

/// Analytic gradient of [`head_loss`] with respect to `head`.
pub fn head_gradient(head: &[f64], feats: &[Vec<f64>], labels: &[usize], classes: usize) -> Vec<f64> {
    let mut grad = vec![0.0; head.len()];
    let inv = 1.0 / feats.len() as f64;
    for (f, &y) in feats.iter().zip(labels) {
        let mut p = softmax(&head_logits(head, f, classes));
        p[y] -= 1.0;
        for (d, &fd) in f.iter().enumerate() {
            if fd == 0.0 {
                continue;
            }
            let row = &mut grad[d * classes..(d + 1) * classes];
            for (g, &pc) in row.iter_mut().zip(&p) {
                *g += inv * fd * pc;
            }
        }
    }
    grad
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub augment: AugmentSpec,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        self.augment.validate()
    }
}

/// Mini-batch SGD on the head. Epoch `e` visits examples in the order of
/// stream `(seed, e, "shuffle")`; example `i` in epoch `e` is augmented by
/// `run_pipeline` with index `e * n + i`.
pub fn train(model: &ToyModel, dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<ToyModel> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = model.config.classes;
    if dataset.labels().iter().any(|&l| l >= classes) {
        return Err(Error::InvalidArgument(format!(
            "dataset labels exceed the model's {classes} classes"
        )));
    }
    let n = dataset.len();
    let mut model = model.clone();
    for epoch in 0..cfg.epochs {
        let order = derive_stream(cfg.seed, epoch as u64, "shuffle").permutation(n);
        for batch in order.chunks(cfg.batch_size) {
            let mut feats = Vec::with_capacity(batch.len());
            let mut labels = Vec::with_capacity(batch.len());
            for &i in batch {
                let index = (epoch * n + i) as u64;
                let img = run_pipeline(&dataset.images()[i], &cfg.augment, cfg.seed, index)?;
                feats.push(model.features(&img)?);
                labels.push(dataset.labels()[i]);
            }
            let grad = head_gradient(&model.head, &feats, &labels, classes);
            for (w, g) in model.head.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
    }
    Ok(model)
}

/// Accuracy of `model` on `dataset`.
pub fn evaluate<M: Classifier + ?Sized>(model: &M, dataset: &LabeledDataset) -> Result<f64> {
    let preds = model.predict_all(dataset.images())?;
    crate::metrics::accuracy(&preds, dataset.labels())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Class 0: low-frequency grating; class 1: high-frequency grating.
    LowFreqVsHighFreq,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low_freq_vs_high_freq" => Ok(SynthKind::LowFreqVsHighFreq),
            other => Err(Error::UnknownKind(format!("synthetic dataset {other:?}"))),
        }
    }
}

/// Side of synthetic images.
pub const SYNTH_SIZE: usize = 32;
/// Standard deviation of the background noise.
pub const SYNTH_NOISE: f64 = 0.05;

/// Integer frequency vectors `(fy, fx)` (one per conjugate pair) whose
/// magnitude lies in `[lo, hi]`.
fn lattice_band(lo: f64, hi: f64) -> Vec<(i64, i64)> {
    let r = hi.ceil() as i64;
    let mut out = Vec::new();
    for fy in 0..=r {
        for fx in -r..=r {
            if fy == 0 && fx <= 0 {
                continue;
            }
            let m = ((fy * fy + fx * fx) as f64).sqrt();
            if m >= lo && m <= hi {
                out.push((fy, fx));
            }
        }
    }
    out
}

/// Frequencies (cycles per image) of class-0 gratings: period >= 16 px.
pub fn low_band() -> Vec<(i64, i64)> {
    lattice_band(1.0, 2.0)
}

/// Frequencies of class-1 gratings: period <= 4 px.
pub fn high_band() -> Vec<(i64, i64)> {
    lattice_band(8.0, 10.0)
}

/// Grating amplitude range.
pub const SYNTH_AMPLITUDE: (f64, f64) = (0.1, 0.3);

/// Balanced two-class 32x32x1 dataset. Image `i` has label `i % 2` and uses
/// stream `(seed, i, "synth")` for its frequency, phase, amplitude and
/// background noise.
pub fn synth_dataset(seed: u64, n: usize, kind: SynthKind) -> Result<LabeledDataset> {
    synth_dataset_with_noise(seed, n, kind, SYNTH_NOISE)
}

/// [`synth_dataset`] with a custom background noise level.
pub fn synth_dataset_with_noise(seed: u64, n: usize, kind: SynthKind, noise: f64) -> Result<LabeledDataset> {
    let SynthKind::LowFreqVsHighFreq = kind;
    if n < 2 {
        return Err(Error::InvalidArgument("synthetic dataset needs at least 2 images".into()));
    }
    let bands = [low_band(), high_band()];
    let size = SYNTH_SIZE;
    let tau = 2.0 * std::f64::consts::PI;
    let (images, labels): (Vec<_>, Vec<_>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let label = i % 2;
            let mut rng = derive_stream(seed, i as u64, "synth");
            let band = &bands[label];
            let (fy, fx) = band[rng.next_index(band.len())];
            let phase = tau * rng.next_unit();
            let (a_lo, a_hi) = SYNTH_AMPLITUDE;
            let amp = a_lo + (a_hi - a_lo) * rng.next_unit();
            let mut data = Vec::with_capacity(size * size);
            for y in 0..size as i64 {
                for x in 0..size as i64 {
                    let t = (fy * y + fx * x).rem_euclid(size as i64) as f64 / size as f64;
                    let v = 0.5 + amp * (tau * t + phase).cos() + noise * rng.next_normal();
                    data.push(v.clamp(0.0, 1.0) as f32);
                }
            }
            (ImageTensor::new(size, size, 1, data).expect("sized"), label)
        })
        .unzip();
    LabeledDataset::new(images, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(filters: usize, channels: usize) -> ToyConfig {
        ToyConfig::new(filters, channels, 2, 3)
    }

    #[test]
    fn init_is_deterministic() {
        let a = ToyModel::init(5, cfg(4, 3)).unwrap();
        let b = ToyModel::init(5, cfg(4, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.filters(), ToyModel::init(6, cfg(4, 3)).unwrap().filters());
        assert!(ToyModel::init(0, cfg(0, 3)).is_err());
    }

    #[test]
    fn zero_head_predicts_class_zero() {
        let m = ToyModel::init(1, cfg(4, 1)).unwrap();
        let img = ImageTensor::filled(6, 6, 1, 0.7);
        assert!(m.forward(&img).unwrap().activations.iter().any(|&a| a > 0.0));
        assert_eq!(m.predict(&img).unwrap(), 0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }

    #[test]
    fn filter_variance_matches_scale() {
        let c = 3;
        let m = ToyModel::init(11, cfg(400, c)).unwrap();
        let w = m.filters();
        assert!(w.len() >= 10_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let target = 1.0 / (9.0 * c as f64);
        assert!((var / target - 1.0).abs() < 0.2, "var {var} target {target}");
    }

    #[test]
    fn zero_image_zero_output() {
        let config = ToyConfig {
            input_offset: 0.0,
            ..cfg(3, 1)
        };
        let m = ToyModel::init(2, config).unwrap();
        let f = m.forward(&ImageTensor::zeros(4, 4, 1)).unwrap();
        assert!(f.activations.iter().all(|&a| a == 0.0));
        assert!(f.logits.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn identity_filter_passes_relu_of_input() {
        let mut filters = vec![0.0; 9];
        filters[4] = 1.0;
        let config = ToyConfig {
            input_offset: 0.0,
            ..ToyConfig::new(1, 1, 1, 2)
        };
        let m = ToyModel::from_parts(config, filters, vec![0.0; 4]).unwrap();
        let img = ImageTensor::new(2, 2, 1, vec![0.1, -0.4, 0.9, 0.3]).unwrap();
        let acts = m.activations(&img).unwrap();
        let expected: Vec<f64> = img.data().iter().map(|&v| (v as f64).max(0.0)).collect();
        assert_eq!(acts, expected);
    }

    #[test]
    fn channel_mismatch() {
        let m = ToyModel::init(2, cfg(3, 3)).unwrap();
        assert!(m.forward(&ImageTensor::zeros(4, 4, 1)).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_errors() {
        let mut m = ToyModel::init(3, cfg(2, 1)).unwrap();
        let head: Vec<f64> = (0..m.head().len()).map(|v| v as f64 * 0.25 - 1.0).collect();
        m.set_head(head).unwrap();
        let bytes = m.encode();
        assert_eq!(&bytes[..4], b"TOYM");
        assert_eq!(ToyModel::decode(&bytes).unwrap(), m);

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(ToyModel::decode(&bad), Err(Error::UnsupportedVersion(9)));
        assert!(ToyModel::decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(ToyModel::decode(b"IMGT").is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(ToyModel::decode(&extra).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_head() {
        let ds = synth_dataset(1, 8, SynthKind::LowFreqVsHighFreq).unwrap();
        let m = ToyModel::init(1, ToyConfig::new(2, 1, 2, 2)).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            learning_rate: 0.0,
            batch_size: 3,
            seed: 4,
            augment: AugmentSpec::gaussian(0.5),
        };
        assert_eq!(train(&m, &ds, &cfg).unwrap(), m);
    }

    #[test]
    fn train_config_validation() {
        let base = TrainConfig {
            epochs: 1,
            learning_rate: 0.1,
            batch_size: 1,
            seed: 0,
            augment: AugmentSpec::none(),
        };
        assert!(base.validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..base.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..base.clone() }.validate().is_err());
        assert!(TrainConfig { learning_rate: f64::NAN, ..base }.validate().is_err());
    }

    #[test]
    fn synth_basic_properties() {
        let ds = synth_dataset(3, 11, SynthKind::LowFreqVsHighFreq).unwrap();
        let ones = ds.labels().iter().filter(|&&l| l == 1).count();
        assert!((ones as i64 - (11 - ones) as i64).abs() <= 1);
        assert!(ds.images().iter().all(ImageTensor::is_unit_range));
        assert_eq!(ds.shape().unwrap(), crate::tensor::Shape::new(32, 32, 1));
        assert!(synth_dataset(3, 1, SynthKind::LowFreqVsHighFreq).is_err());
    }

    #[test]
    fn bands_respect_periods() {
        for (fy, fx) in low_band() {
            assert!(32.0 / ((fy * fy + fx * fx) as f64).sqrt() >= 16.0);
        }
        for (fy, fx) in high_band() {
            assert!(32.0 / ((fy * fy + fx * fx) as f64).sqrt() <= 4.0);
        }
    }
}
