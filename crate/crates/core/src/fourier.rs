//! 2D DFT, Fourier-basis perturbations, sensitivity heatmaps and high-pass
//! filtering.
//!
//! Transforms are unitary (`1/sqrt(HW)` each way) so `||x|| = ||X||`.
//! Spectra use centered indexing: frequency `(i, j)` with `i` along rows
//! (y) and `j` along columns (x), each in
//! `[-floor(n/2), ceil(n/2) - 1]`. The forward kernel is
//! `exp(-2 pi sqrt(-1) (i y / H + j x / W))`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::rng::{derive_stream, RngStream};
use crate::tensor::{ImageTensor, LabeledDataset};

/// A single real-valued channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} plane needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Plane) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

/// Lowest centered frequency on an axis of length `n`.
fn freq_min(n: usize) -> i64 {
    -((n / 2) as i64)
}

/// Highest centered frequency on an axis of length `n`.
fn freq_max(n: usize) -> i64 {
    n.div_ceil(2) as i64 - 1
}

/// Maps any integer frequency onto the centered range.
fn wrap_freq(f: i64, n: usize) -> i64 {
    let half = (n / 2) as i64;
    (f + half).rem_euclid(n as i64) - half
}

fn in_grid(i: i64, j: i64, h: usize, w: usize) -> bool {
    (freq_min(h)..=freq_max(h)).contains(&i) && (freq_min(w)..=freq_max(w)).contains(&j)
}

/// Complex coefficients of a 2D DFT in centered layout: storage position
/// `(r, c)` holds frequency `(r - floor(H/2), c - floor(W/2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn pos(&self, i: i64, j: i64) -> usize {
        let r = (i - freq_min(self.height)) as usize;
        let c = (j - freq_min(self.width)) as usize;
        r * self.width + c
    }

    /// Coefficient at centered frequency `(i, j)`.
    pub fn get(&self, i: i64, j: i64) -> Result<Complex64> {
        self.check(i, j)?;
        Ok(self.data[self.pos(i, j)])
    }

    pub fn set(&mut self, i: i64, j: i64, v: Complex64) -> Result<()> {
        self.check(i, j)?;
        let p = self.pos(i, j);
        self.data[p] = v;
        Ok(())
    }

    fn check(&self, i: i64, j: i64) -> Result<()> {
        if in_grid(i, j, self.height, self.width) {
            Ok(())
        } else {
            Err(Error::FrequencyOutOfGrid {
                i,
                j,
                h: self.height,
                w: self.width,
            })
        }
    }

    /// Every `(i, j, coefficient)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let (h0, w0) = (freq_min(self.height), freq_min(self.width));
        self.data.iter().enumerate().map(move |(p, &v)| {
            (
                (p / self.width) as i64 + h0,
                (p % self.width) as i64 + w0,
                v,
            )
        })
    }

    /// Zeroes every coefficient for which `keep(i, j)` is false.
    pub fn retain(&mut self, mut keep: impl FnMut(i64, i64) -> bool) {
        let (h0, w0) = (freq_min(self.height), freq_min(self.width));
        let width = self.width;
        for (p, v) in self.data.iter_mut().enumerate() {
            if !keep((p / width) as i64 + h0, (p % width) as i64 + w0) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// In-place unitary 2D transform of a row-major natural-order buffer.
fn fft2_in_place(buf: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
    let scale = 1.0 / ((h * w) as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Unitary forward DFT of a plane, returned in centered layout.
pub fn dft2(plane: &Plane) -> Spectrum {
    let (h, w) = (plane.height, plane.width);
    let mut buf: Vec<Complex64> = plane.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, h, w, false);
    let mut spec = Spectrum {
        height: h,
        width: w,
        data: vec![Complex64::new(0.0, 0.0); h * w],
    };
    for y in 0..h {
        for x in 0..w {
            let i = wrap_freq(y as i64, h);
            let j = wrap_freq(x as i64, w);
            let p = spec.pos(i, j);
            spec.data[p] = buf[y * w + x];
        }
    }
    spec
}

/// Largest imaginary residue accepted by [`idft2`].
pub const MAX_IMAGINARY_RESIDUE: f64 = 1e-6;

/// Unitary inverse DFT; fails if the result is not real.
pub fn idft2(spec: &Spectrum) -> Result<Plane> {
    let (h, w) = (spec.height, spec.width);
    let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
    for (i, j, v) in spec.iter() {
        let y = i.rem_euclid(h as i64) as usize;
        let x = j.rem_euclid(w as i64) as usize;
        buf[y * w + x] = v;
    }
    fft2_in_place(&mut buf, h, w, true);
    let residue = buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if residue >= MAX_IMAGINARY_RESIDUE {
        return Err(Error::NonRealInverse(residue));
    }
    Ok(Plane {
        height: h,
        width: w,
        data: buf.into_iter().map(|v| v.re).collect(),
    })
}

/// The unit-norm cosine grating whose spectrum sits on `(i, j)` and
/// `(-i, -j)` with equal real coefficients (zero phase).
pub fn fourier_basis(h: usize, w: usize, i: i64, j: i64) -> Result<Plane> {
    if !in_grid(i, j, h, w) {
        return Err(Error::FrequencyOutOfGrid { i, j, h, w });
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut data = Vec::with_capacity(h * w);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let phase = (i * y).rem_euclid(h as i64) as f64 / h as f64
                + (j * x).rem_euclid(w as i64) as f64 / w as f64;
            data.push((tau * phase).cos());
        }
    }
    let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    data.iter_mut().for_each(|v| *v /= norm);
    Ok(Plane {
        height: h,
        width: w,
        data,
    })
}

/// One representative per conjugate pair `{(i, j), (-i, -j)}` (the
/// lexicographically larger one), covering the whole grid.
pub fn half_plane_frequencies(h: usize, w: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for i in freq_min(h)..=freq_max(h) {
        for j in freq_min(w)..=freq_max(w) {
            if (i, j) >= (wrap_freq(-i, h), wrap_freq(-j, w)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Half-plane frequencies with `|i| <= max_abs` and `|j| <= max_abs`.
pub fn frequencies_within(h: usize, w: usize, max_abs: i64) -> Vec<(i64, i64)> {
    half_plane_frequencies(h, w)
        .into_iter()
        .filter(|&(i, j)| i.abs() <= max_abs && j.abs() <= max_abs)
        .collect()
}

/// `sign * norm * basis`, the pre-clip perturbation added to each channel.
pub fn basis_perturbation(basis: &Plane, norm: f64, sign: f64) -> Plane {
    Plane {
        height: basis.height,
        width: basis.width,
        data: basis.data.iter().map(|&u| sign * norm * u).collect(),
    }
}

/// Adds `r * norm * basis` to every channel and clips, with one random sign
/// `r` per image (`next_unit < 0.5` gives `-1`).
pub fn perturb_with_basis(img: &ImageTensor, basis: &Plane, norm: f64, rng: &mut RngStream) -> Result<ImageTensor> {
    if basis.height != img.height() || basis.width != img.width() {
        return Err(Error::ShapeMismatch(format!(
            "basis {}x{} vs image {}",
            basis.height,
            basis.width,
            img.shape()
        )));
    }
    let sign = if rng.next_unit() < 0.5 { -1.0 } else { 1.0 };
    let ch = img.channels();
    let mut out = img.clone();
    for (p, px) in out.data_mut().chunks_exact_mut(ch).enumerate() {
        let delta = sign * norm * basis.data[p];
        for v in px {
            *v = (*v as f64 + delta).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

/// What a heatmap measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// `1 - accuracy` on the perturbed dataset.
    TestError,
    /// Change of the first-layer activations, relative to the clean norm.
    FirstLayer,
}

impl Probe {
    pub fn name(self) -> &'static str {
        match self {
            Probe::TestError => "test_error",
            Probe::FirstLayer => "first_layer",
        }
    }
}

impl std::str::FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test_error" => Ok(Probe::TestError),
            "first_layer" => Ok(Probe::FirstLayer),
            other => Err(Error::UnknownKind(format!("probe {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    pub i: i64,
    pub j: i64,
    pub value: f64,
    /// First-layer probe only: mean absolute activation change.
    pub absolute: Option<f64>,
}

/// Sensitivity per frequency for one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHeatmap {
    pub probe: Probe,
    pub norm: f64,
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub cells: Vec<HeatCell>,
}

impl FourierHeatmap {
    pub fn value(&self, i: i64, j: i64) -> Option<f64> {
        let (ci, cj) = (wrap_freq(-i, self.height), wrap_freq(-j, self.width));
        self.cells
            .iter()
            .find(|c| (c.i, c.j) == (i, j) || (c.i, c.j) == (ci, cj))
            .map(|c| c.value)
    }

    /// Metadata comment line, then `i,j,value` (plus `absolute` for the
    /// first-layer probe), one row per computed frequency.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# probe={} norm={} seed={} size={}x{}\n",
            self.probe.name(),
            self.norm,
            self.seed,
            self.height,
            self.width
        );
        let first_layer = self.probe == Probe::FirstLayer;
        out.push_str(if first_layer { "i,j,value,absolute\n" } else { "i,j,value\n" });
        for c in &self.cells {
            match (first_layer, c.absolute) {
                (true, Some(a)) => out.push_str(&format!("{},{},{},{}\n", c.i, c.j, c.value, a)),
                _ => out.push_str(&format!("{},{},{}\n", c.i, c.j, c.value)),
            }
        }
        out
    }

    /// Grayscale rendering over the full centered grid; conjugate cells
    /// share a value. Test error maps directly to gray; first-layer values
    /// are scaled by their maximum. Uncomputed cells are black.
    pub fn to_image(&self) -> ImageTensor {
        let (h, w) = (self.height, self.width);
        let scale = match self.probe {
            Probe::TestError => 1.0,
            Probe::FirstLayer => {
                let m = self.cells.iter().map(|c| c.value).fold(0.0, f64::max);
                if m > 0.0 { 1.0 / m } else { 0.0 }
            }
        };
        let mut img = ImageTensor::zeros(h, w, 3);
        let (h0, w0) = (freq_min(h), freq_min(w));
        for c in &self.cells {
            let g = (c.value * scale).clamp(0.0, 1.0) as f32;
            for (i, j) in [(c.i, c.j), (wrap_freq(-c.i, h), wrap_freq(-c.j, w))] {
                let (y, x) = ((i - h0) as usize, (j - w0) as usize);
                for ch in 0..3 {
                    img.set(y, x, ch, g);
                }
            }
        }
        img
    }
}

/// Stream tag for perturbing images at frequency `(i, j)`.
pub fn fourier_tag(i: i64, j: i64) -> String {
    format!("fourier:{i},{j}")
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Perturbs every image with each frequency's basis at norm `norm` and
/// records the probe. Image `n` at frequency `(i, j)` draws its sign from
/// stream `(seed, n, "fourier:i,j")`.
pub fn sensitivity_heatmap<M: Classifier + ?Sized>(
    model: &M,
    dataset: &LabeledDataset,
    freqs: &[(i64, i64)],
    norm: f64,
    probe: Probe,
    seed: u64,
) -> Result<FourierHeatmap> {
    let shape = dataset.shape().ok_or(Error::EmptyDataset)?;
    let (h, w) = (shape.height, shape.width);
    let clean_acts: Vec<Vec<f64>> = match probe {
        Probe::TestError => Vec::new(),
        Probe::FirstLayer => dataset
            .images()
            .par_iter()
            .map(|img| {
                model
                    .first_layer(img)
                    .unwrap_or_else(|| Err(Error::UnsupportedProbe(probe.name().into())))
            })
            .collect::<Result<_>>()?,
    };
    let clean_norm = if probe == Probe::FirstLayer {
        let m = clean_acts.iter().map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>()
            / clean_acts.len() as f64;
        if m <= 0.0 {
            return Err(Error::ZeroActivation);
        }
        m
    } else {
        0.0
    };

    let cells = freqs
        .par_iter()
        .map(|&(i, j)| -> Result<HeatCell> {
            let basis = fourier_basis(h, w, i, j)?;
            let tag = fourier_tag(i, j);
            let perturbed = dataset
                .images()
                .iter()
                .enumerate()
                .map(|(n, img)| perturb_with_basis(img, &basis, norm, &mut derive_stream(seed, n as u64, &tag)))
                .collect::<Result<Vec<_>>>()?;
            match probe {
                Probe::TestError => {
                    let preds = model.predict_all(&perturbed)?;
                    let acc = crate::metrics::accuracy(&preds, dataset.labels())?;
                    Ok(HeatCell {
                        i,
                        j,
                        value: 1.0 - acc,
                        absolute: None,
                    })
                }
                Probe::FirstLayer => {
                    let mut total = 0.0;
                    for (img, clean) in perturbed.iter().zip(&clean_acts) {
                        let act = model
                            .first_layer(img)
                            .unwrap_or_else(|| Err(Error::UnsupportedProbe(probe.name().into())))?;
                        total += l2_distance(&act, clean);
                    }
                    let absolute = total / perturbed.len() as f64;
                    Ok(HeatCell {
                        i,
                        j,
                        value: absolute / clean_norm,
                        absolute: Some(absolute),
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FourierHeatmap {
        probe,
        norm,
        seed,
        height: h,
        width: w,
        cells,
    })
}

fn removed(i: i64, j: i64, radius: f64) -> bool {
    (((i * i + j * j) as f64).sqrt()) < radius
}

/// Pre-clip high-pass of one plane: drops coefficients closer than `radius`
/// to the zero frequency and re-centers at 0.5 if the DC term went.
pub fn high_pass_plane(plane: &Plane, radius: f64) -> Result<Plane> {
    let mut spec = dft2(plane);
    spec.retain(|i, j| !removed(i, j, radius));
    let mut out = idft2(&spec)?;
    if removed(0, 0, radius) {
        out.data.iter_mut().for_each(|v| *v += 0.5);
    }
    Ok(out)
}

/// The complementary band: only coefficients closer than `radius`.
pub fn low_band_plane(plane: &Plane, radius: f64) -> Result<Plane> {
    let mut spec = dft2(plane);
    spec.retain(|i, j| removed(i, j, radius));
    idft2(&spec)
}

/// Per-channel high-pass filter, clipped to `[0, 1]`.
pub fn high_pass(img: &ImageTensor, radius: f64) -> Result<ImageTensor> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be >= 0, got {radius}")));
    }
    let (h, w) = (img.height(), img.width());
    let planes = (0..img.channels())
        .map(|c| {
            let p = Plane::new(h, w, img.plane(c))?;
            let mut out = high_pass_plane(&p, radius)?;
            out.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            Ok(out.data)
        })
        .collect::<Result<Vec<_>>>()?;
    ImageTensor::from_planes(h, w, &planes)
}

/// [`high_pass`] over a whole dataset, labels unchanged.
pub fn high_pass_dataset(dataset: &LabeledDataset, radius: f64) -> Result<LabeledDataset> {
    let images = dataset
        .images()
        .par_iter()
        .map(|img| high_pass(img, radius))
        .collect::<Result<Vec<_>>>()?;
    dataset.with_images(images)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_ranges() {
        assert_eq!((freq_min(4), freq_max(4)), (-2, 1));
        assert_eq!((freq_min(5), freq_max(5)), (-2, 2));
        assert_eq!(wrap_freq(2, 4), -2);
        assert_eq!(wrap_freq(-3, 5), 2);
    }

    #[test]
    fn constant_plane_is_dc_only() {
        let c = 0.3;
        let spec = dft2(&Plane::new(3, 5, vec![c; 15]).unwrap());
        for (i, j, v) in spec.iter() {
            if (i, j) == (0, 0) {
                assert!((v.re - c * 15f64.sqrt()).abs() < 1e-12 && v.im.abs() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12, "({i},{j}) {v}");
            }
        }
    }

    #[test]
    fn idft_rejects_non_real() {
        let mut spec = dft2(&Plane::zeros(4, 4));
        spec.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(idft2(&spec), Err(Error::NonRealInverse(_))));
        assert!(spec.get(2, 0).is_err());
    }

    #[test]
    fn dc_basis_is_flat() {
        let u = fourier_basis(4, 6, 0, 0).unwrap();
        let expected = 1.0 / 24f64.sqrt();
        assert!(u.data.iter().all(|v| (v - expected).abs() < 1e-12));
        assert!(fourier_basis(4, 4, 2, 0).is_err());
    }

    #[test]
    fn half_plane_covers_each_pair_once() {
        for (h, w) in [(4, 4), (5, 3), (6, 7), (1, 1)] {
            let half = half_plane_frequencies(h, w);
            let mut seen = std::collections::HashSet::new();
            for &(i, j) in &half {
                seen.insert((i, j));
                seen.insert((wrap_freq(-i, h), wrap_freq(-j, w)));
            }
            assert_eq!(seen.len(), h * w, "{h}x{w}");
            let self_conj = half
                .iter()
                .filter(|&&(i, j)| (wrap_freq(-i, h), wrap_freq(-j, w)) == (i, j))
                .count();
            assert_eq!(2 * half.len() - self_conj, h * w);
        }
    }

    #[test]
    fn probe_parsing() {
        assert_eq!("first_layer".parse::<Probe>().unwrap(), Probe::FirstLayer);
        assert!("middle".parse::<Probe>().is_err());
    }

    #[test]
    fn high_pass_limits() {
        let data: Vec<f32> = (0..48).map(|v| (v % 7) as f32 / 7.0).collect();
        let img = ImageTensor::new(4, 4, 3, data).unwrap();
        let same = high_pass(&img, 0.0).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6);
        }
        let flat = high_pass(&img, 10.0).unwrap();
        assert!(flat.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
        assert!(high_pass(&img, -1.0).is_err());
    }
}
