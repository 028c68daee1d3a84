//! Image tensors, labeled datasets and the byte-level formats they travel in.
//!
//! Intensities live in `[0, 1]` as `f32`, stored row-major with channels
//! interleaved (`data[(y * width + x) * channels + c]`). Byte-valued formats
//! (CIFAR-10 batches, PPM) convert at the boundary.

use crate::error::{Error, Result};

/// Height, width and channel count of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    /// Number of scalar elements.
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// An `H x W x C` image.
///
/// Values are not forced into `[0, 1]` on construction; operations that
/// document clipping guarantee the range on their output.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    shape: Shape,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let shape = Shape::new(height, width, channels);
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} image needs {} values, got {}",
                shape,
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        let shape = Shape::new(height, width, channels);
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    /// Builds an image from per-channel planes, each `height * width` long.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let shape = Shape::new(height, width, planes.len());
        let mut data = vec![0.0f32; shape.len()];
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != shape.pixels() {
                return Err(Error::ShapeMismatch(format!(
                    "plane {} has {} values, expected {}",
                    c,
                    plane.len(),
                    shape.pixels()
                )));
            }
            for (p, &v) in plane.iter().enumerate() {
                data[p * shape.channels + c] = v as f32;
            }
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[self.shape.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        let i = self.shape.index(y, x, c);
        self.data[i] = v;
    }

    /// One channel as a row-major `f64` plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.shape.channels)
            .map(|&v| v as f64)
            .collect()
    }

    /// Elementwise `min(max(x, 0), 1)`.
    pub fn clip_unit(&self) -> Self {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|&v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    /// True when every element lies in `[0, 1]`.
    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Serializes to the `IMGT` container: magic, three little-endian `u32`
    /// dims (H, W, C), then the values as little-endian `f32`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(IMGT_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(IMGT_MAGIC);
        for d in [self.shape.height, self.shape.width, self.shape.channels] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses an `IMGT` container produced by [`ImageTensor::encode`].
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != IMGT_MAGIC {
            return Err(Error::BadMagic { expected: "IMGT" });
        }
        if bytes.len() < IMGT_HEADER_LEN {
            return Err(Error::TruncatedHeader);
        }
        let dim = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap());
        let (h, w, c) = (dim(0) as usize, dim(1) as usize, dim(2) as usize);
        let count = h
            .checked_mul(w)
            .and_then(|n| n.checked_mul(c))
            .ok_or(Error::DimOverflow)?;
        let payload = &bytes[IMGT_HEADER_LEN..];
        if count.checked_mul(4).ok_or(Error::DimOverflow)? != payload.len() {
            return Err(Error::LengthMismatch {
                expected: count,
                actual: payload.len(),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(Self {
            shape: Shape::new(h, w, c),
            data,
        })
    }

    /// Binary P6 PPM with maxval 255; intensities quantize as `round(x * 255)`
    /// with halves rounded up, after clamping to `[0, 1]`.
    pub fn write_ppm(&self) -> Result<Vec<u8>> {
        if self.shape.channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "PPM needs 3 channels, image has {}",
                self.shape.channels
            )));
        }
        let mut out = format!("P6\n{} {}\n255\n", self.shape.width, self.shape.height).into_bytes();
        out.extend(self.data.iter().map(|&v| quantize(v)));
        Ok(out)
    }

    /// Replicates a single-channel image into three identical channels.
    pub fn to_rgb(&self) -> Result<Self> {
        match self.shape.channels {
            3 => Ok(self.clone()),
            1 => Ok(Self {
                shape: Shape::new(self.shape.height, self.shape.width, 3),
                data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
            }),
            c => Err(Error::ShapeMismatch(format!(
                "cannot convert {c}-channel image to RGB"
            ))),
        }
    }
}

const IMGT_MAGIC: &[u8; 4] = b"IMGT";
const IMGT_HEADER_LEN: usize = 16;

fn quantize(v: f32) -> u8 {
    ((v.clamp(0.0, 1.0) as f64) * 255.0 + 0.5).floor() as u8
}

/// Per-channel mean intensity, used as the Cutout fill color.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMean(Vec<f64>);

impl ChannelMean {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("channel mean needs at least one channel".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("channel mean {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn channels(&self) -> usize {
        self.0.len()
    }
}

/// Images of one shape with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Vec<ImageTensor>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(first) = images.first() {
            if let Some(bad) = images.iter().find(|im| im.shape() != first.shape()) {
                return Err(Error::ShapeMismatch(format!(
                    "mixed shapes {} and {}",
                    first.shape(),
                    bad.shape()
                )));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {l} not below class count {num_classes}"
            )));
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    pub fn images(&self) -> &[ImageTensor] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> Option<Shape> {
        self.images.first().map(ImageTensor::shape)
    }

    /// Same labels, new images (e.g. after corrupting every image).
    pub fn with_images(&self, images: Vec<ImageTensor>) -> Result<Self> {
        Self::new(images, self.labels.clone(), self.num_classes)
    }

    /// Arithmetic mean over every pixel of every image, per channel.
    pub fn channel_mean(&self) -> Result<ChannelMean> {
        let shape = self.shape().ok_or(Error::EmptyDataset)?;
        let mut sums = vec![0.0f64; shape.channels];
        for img in &self.images {
            for px in img.data().chunks_exact(shape.channels) {
                for (s, &v) in sums.iter_mut().zip(px) {
                    *s += v as f64;
                }
            }
        }
        let n = (self.images.len() * shape.pixels()) as f64;
        Ok(ChannelMean(sums.into_iter().map(|s| s / n).collect()))
    }
}

pub const CIFAR_RECORD_LEN: usize = 1 + 3 * 32 * 32;
pub const CIFAR_CLASSES: usize = 10;

/// Decodes a CIFAR-10 binary batch: per record one label byte followed by the
/// red, green and blue 32x32 planes.
pub fn read_cifar10_batch(bytes: &[u8]) -> Result<LabeledDataset> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(Error::MalformedBatch(bytes.len()));
    }
    let plane = 32 * 32;
    let mut images = Vec::with_capacity(bytes.len() / CIFAR_RECORD_LEN);
    let mut labels = Vec::with_capacity(images.capacity());
    for (record, chunk) in bytes.chunks_exact(CIFAR_RECORD_LEN).enumerate() {
        let label = chunk[0];
        if label as usize >= CIFAR_CLASSES {
            return Err(Error::LabelOutOfRange {
                record,
                label: label as u32,
            });
        }
        let pixels = &chunk[1..];
        let mut data = Vec::with_capacity(3 * plane);
        for p in 0..plane {
            for c in 0..3 {
                data.push(pixels[c * plane + p] as f32 / 255.0);
            }
        }
        images.push(ImageTensor::new(32, 32, 3, data)?);
        labels.push(label as usize);
    }
    LabeledDataset::new(images, labels, CIFAR_CLASSES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_saturates_and_keeps_interior() {
        let t = ImageTensor::new(1, 3, 1, vec![-0.2, 0.5, 1.7]).unwrap();
        assert_eq!(t.clip_unit().data(), &[0.0, 0.5, 1.0]);
        let gray = ImageTensor::filled(4, 4, 3, 0.5);
        assert_eq!(gray.clip_unit(), gray);
    }

    #[test]
    fn channel_mean_cases() {
        let ds = LabeledDataset::new(vec![ImageTensor::zeros(2, 2, 3)], vec![0], 1).unwrap();
        assert_eq!(ds.channel_mean().unwrap().values(), &[0.0, 0.0, 0.0]);

        let ds = LabeledDataset::new(
            vec![ImageTensor::zeros(1, 1, 3), ImageTensor::filled(1, 1, 3, 1.0)],
            vec![0, 0],
            1,
        )
        .unwrap();
        assert_eq!(ds.channel_mean().unwrap().values(), &[0.5, 0.5, 0.5]);

        let empty = LabeledDataset::new(vec![], vec![], 1).unwrap();
        assert_eq!(empty.channel_mean(), Err(Error::EmptyDataset));
    }

    #[test]
    fn cifar_zero_record() {
        let ds = read_cifar10_batch(&[0u8; CIFAR_RECORD_LEN]).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels(), &[0]);
        assert!(ds.images()[0].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cifar_saturated_record() {
        let mut rec = vec![255u8; CIFAR_RECORD_LEN];
        rec[0] = 7;
        let ds = read_cifar10_batch(&rec).unwrap();
        assert_eq!(ds.labels(), &[7]);
        assert!(ds.images()[0].data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cifar_channel_major_layout() {
        let mut rec = vec![0u8; CIFAR_RECORD_LEN];
        rec[1..1 + 1024].fill(10);
        rec[1 + 1024..1 + 2048].fill(20);
        rec[1 + 2048..].fill(30);
        // Mark pixel (row 1, col 2) of the green plane only.
        rec[1 + 1024 + 32 + 2] = 99;
        let ds = read_cifar10_batch(&rec).unwrap();
        let img = &ds.images()[0];
        assert_eq!(img.get(0, 0, 0), 10.0 / 255.0);
        assert_eq!(img.get(0, 0, 1), 20.0 / 255.0);
        assert_eq!(img.get(0, 0, 2), 30.0 / 255.0);
        assert_eq!(img.get(1, 2, 1), 99.0 / 255.0);
        assert_eq!(img.get(1, 2, 0), 10.0 / 255.0);
    }

    #[test]
    fn cifar_errors() {
        assert_eq!(
            read_cifar10_batch(&[0u8; 100]),
            Err(Error::MalformedBatch(100))
        );
        let mut rec = vec![0u8; 2 * CIFAR_RECORD_LEN];
        rec[CIFAR_RECORD_LEN] = 10;
        assert_eq!(
            read_cifar10_batch(&rec),
            Err(Error::LabelOutOfRange { record: 1, label: 10 })
        );
    }

    #[test]
    fn imgt_minimal_encoding() {
        let bytes = ImageTensor::zeros(1, 1, 1).encode();
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[..4], b"IMGT");
        assert_eq!(&bytes[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[16..], &[0, 0, 0, 0]);
    }

    #[test]
    fn imgt_decode_errors() {
        assert_eq!(
            ImageTensor::decode(b"IMGX\0\0\0\0"),
            Err(Error::BadMagic { expected: "IMGT" })
        );
        assert_eq!(ImageTensor::decode(b"IMGT\x01\0"), Err(Error::TruncatedHeader));

        let mut bad = b"IMGT".to_vec();
        for d in [2u32, 2, 3] {
            bad.extend_from_slice(&d.to_le_bytes());
        }
        bad.extend(std::iter::repeat_n(0u8, 40));
        assert_eq!(
            ImageTensor::decode(&bad),
            Err(Error::LengthMismatch {
                expected: 12,
                actual: 40
            })
        );

        let mut huge = b"IMGT".to_vec();
        for _ in 0..3 {
            huge.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        let err = ImageTensor::decode(&huge).unwrap_err();
        if cfg!(target_pointer_width = "64") {
            // 2^32-1 cubed overflows usize on 64-bit targets.
            assert_eq!(err, Error::DimOverflow);
        }
    }

    #[test]
    fn ppm_encoding() {
        let white = ImageTensor::filled(1, 1, 3, 1.0);
        let mut expected = b"P6\n1 1\n255\n".to_vec();
        expected.extend([255, 255, 255]);
        assert_eq!(white.write_ppm().unwrap(), expected);

        let gray = ImageTensor::filled(1, 1, 3, 0.5);
        assert_eq!(&gray.write_ppm().unwrap()[11..], &[128, 128, 128]);

        let two = ImageTensor::new(1, 2, 3, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = two.write_ppm().unwrap();
        assert_eq!(&out[..11], b"P6\n2 1\n255\n");
        assert_eq!(&out[11..], &[0, 0, 0, 255, 255, 255]);

        assert!(ImageTensor::zeros(1, 1, 1).write_ppm().is_err());
    }

    #[test]
    fn dataset_validation() {
        let a = ImageTensor::zeros(2, 2, 1);
        let b = ImageTensor::zeros(3, 2, 1);
        assert!(LabeledDataset::new(vec![a.clone()], vec![], 2).is_err());
        assert!(LabeledDataset::new(vec![a.clone(), b], vec![0, 1], 2).is_err());
        assert!(LabeledDataset::new(vec![a], vec![2], 2).is_err());
    }
}
