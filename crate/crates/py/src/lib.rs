//! Python bindings: images, augmentation specs, the pipeline, corruptions,
//! robustness metrics, Fourier helpers and the toy model.

use std::collections::{BTreeMap, HashMap};

use patchnoise::corrupt::{corrupt as corrupt_image, CorruptionKind, CorruptionSpec, SeverityTable};
use patchnoise::metrics::{self, Candidate, ErrorMap};
use patchnoise::model::{self, SynthKind};
use patchnoise::{Classifier, EvalResult};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn py_err(e: patchnoise::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "ImageTensor", module = "patchnoise", frozen, from_py_object)]
#[derive(Clone)]
struct PyImage(patchnoise::ImageTensor);

#[pymethods]
impl PyImage {
    /// Interleaved `height x width x channels` values.
    #[new]
    fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> PyResult<Self> {
        patchnoise::ImageTensor::new(height, width, channels, data).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Self(patchnoise::ImageTensor::filled(height, width, channels, value))
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.0.height(), self.0.width(), self.0.channels())
    }

    fn data(&self) -> Vec<f32> {
        self.0.data().to_vec()
    }

    fn get(&self, y: usize, x: usize, c: usize) -> PyResult<f32> {
        let s = self.0.shape();
        if y >= s.height || x >= s.width || c >= s.channels {
            return Err(PyValueError::new_err(format!("({y}, {x}, {c}) outside {s}")));
        }
        Ok(self.0.get(y, x, c))
    }

    fn clip_unit(&self) -> Self {
        Self(self.0.clip_unit())
    }

    fn encode<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.encode())
    }

    #[staticmethod]
    fn decode(bytes: &[u8]) -> PyResult<Self> {
        patchnoise::ImageTensor::decode(bytes).map(Self).map_err(py_err)
    }

    fn to_ppm<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = self.0.to_rgb().and_then(|t| t.write_ppm()).map_err(py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("ImageTensor({})", self.0.shape())
    }
}

#[pyclass(name = "AugmentSpec", module = "patchnoise", frozen, from_py_object)]
#[derive(Clone)]
struct PyAugmentSpec(patchnoise::AugmentSpec);

#[pymethods]
impl PyAugmentSpec {
    #[staticmethod]
    fn none() -> Self {
        Self(patchnoise::AugmentSpec::none())
    }

    #[staticmethod]
    fn gaussian(sigma_max: f64) -> PyResult<Self> {
        checked(patchnoise::AugmentSpec::gaussian(sigma_max))
    }

    #[staticmethod]
    fn cutout(patch_size: usize, fill: Vec<f64>) -> PyResult<Self> {
        let fill = patchnoise::ChannelMean::new(fill).map_err(py_err)?;
        checked(patchnoise::AugmentSpec::cutout(patch_size, fill))
    }

    #[staticmethod]
    #[pyo3(signature = (patch_size, sigma_max, sample_up_to = false))]
    fn patch_gaussian(patch_size: usize, sigma_max: f64, sample_up_to: bool) -> PyResult<Self> {
        checked(patchnoise::AugmentSpec::patch_gaussian(patch_size, sigma_max, sample_up_to))
    }

    fn with_pad(&self, pad: usize) -> Self {
        Self(self.0.clone().with_pad(pad))
    }

    /// `"augment_then_flipcrop"` or `"flipcrop_then_augment"`.
    fn with_order(&self, order: &str) -> PyResult<Self> {
        let order = order.parse().map_err(py_err)?;
        Ok(Self(self.0.clone().with_order(order)))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.name()
    }

    fn __repr__(&self) -> String {
        format!("AugmentSpec({:?}, order={}, pad={})", self.0.kind, self.0.order.name(), self.0.pad)
    }
}

fn checked(spec: patchnoise::AugmentSpec) -> PyResult<PyAugmentSpec> {
    spec.validate().map_err(py_err)?;
    Ok(PyAugmentSpec(spec))
}

#[pyclass(name = "ToyModel", module = "patchnoise", frozen, from_py_object)]
#[derive(Clone)]
struct PyToyModel(patchnoise::ToyModel);

#[pymethods]
impl PyToyModel {
    #[staticmethod]
    #[pyo3(signature = (seed, filters, channels, pool, classes))]
    fn init(seed: u64, filters: usize, channels: usize, pool: usize, classes: usize) -> PyResult<Self> {
        let cfg = patchnoise::ToyConfig::new(filters, channels, pool, classes);
        patchnoise::ToyModel::init(seed, cfg).map(Self).map_err(py_err)
    }

    fn predict(&self, img: &PyImage) -> PyResult<usize> {
        self.0.predict(&img.0).map_err(py_err)
    }

    fn predict_all(&self, py: Python<'_>, images: Vec<PyImage>) -> PyResult<Vec<usize>> {
        let imgs: Vec<_> = images.into_iter().map(|i| i.0).collect();
        py.detach(|| self.0.predict_all(&imgs)).map_err(py_err)
    }

    fn logits(&self, img: &PyImage) -> PyResult<Vec<f64>> {
        Ok(self.0.forward(&img.0).map_err(py_err)?.logits)
    }

    /// ReLU activations after the convolution, filter-major.
    fn first_layer(&self, img: &PyImage) -> PyResult<Vec<f64>> {
        self.0.activations(&img.0).map_err(py_err)
    }

    #[pyo3(signature = (images, labels, spec, epochs = 15, learning_rate = 1.0, batch_size = 16, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &self,
        py: Python<'_>,
        images: Vec<PyImage>,
        labels: Vec<usize>,
        spec: &PyAugmentSpec,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let classes = self.0.config().classes;
        let ds = patchnoise::LabeledDataset::new(images.into_iter().map(|i| i.0).collect(), labels, classes)
            .map_err(py_err)?;
        let cfg = patchnoise::TrainConfig {
            epochs,
            learning_rate,
            batch_size,
            seed,
            augment: spec.0.clone(),
        };
        py.detach(|| model::train(&self.0, &ds, &cfg)).map(Self).map_err(py_err)
    }

    fn encode<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.encode())
    }

    #[staticmethod]
    fn decode(bytes: &[u8]) -> PyResult<Self> {
        patchnoise::ToyModel::decode(bytes).map(Self).map_err(py_err)
    }
}

#[pyfunction]
fn run_pipeline(img: &PyImage, spec: &PyAugmentSpec, seed: u64, index: u64) -> PyResult<PyImage> {
    patchnoise::run_pipeline(&img.0, &spec.0, seed, index).map(PyImage).map_err(py_err)
}

/// Applies one corruption given either a severity level or a parameter.
#[pyfunction]
#[pyo3(signature = (img, kind, seed, index = 0, severity = None, param = None))]
fn corrupt(img: &PyImage, kind: &str, seed: u64, index: u64, severity: Option<u8>, param: Option<f64>) -> PyResult<PyImage> {
    let kind: CorruptionKind = kind.parse().map_err(py_err)?;
    let spec = match (severity, param) {
        (Some(l), None) => CorruptionSpec::level(kind, l),
        (None, Some(p)) => CorruptionSpec::param(kind, p),
        _ => return Err(PyValueError::new_err("give exactly one of severity or param")),
    };
    let mut rng = patchnoise::derive_stream(seed, index, &format!("corrupt:{kind}"));
    corrupt_image(&img.0, &spec, &SeverityTable::default(), &mut rng)
        .map(PyImage)
        .map_err(py_err)
}

#[pyfunction]
fn eval_sigmas() -> Vec<f64> {
    patchnoise::EVAL_SIGMAS.to_vec()
}

#[pyfunction]
fn accuracy(predictions: Vec<usize>, labels: Vec<usize>) -> PyResult<f64> {
    metrics::accuracy(&predictions, &labels).map_err(py_err)
}

/// `suite` holds the accuracies at each of `eval_sigmas()`.
#[pyfunction]
fn relative_gaussian_robustness(clean: f64, suite: [f64; 6]) -> PyResult<f64> {
    let e = EvalResult::with_suite(clean, suite).map_err(py_err)?;
    metrics::relative_gaussian_robustness(&e).map_err(py_err)
}

fn error_map(m: HashMap<(String, u32), f64>) -> ErrorMap {
    m.into_iter().collect()
}

/// Maps of `(kind, severity) -> error` to per-kind CE.
#[pyfunction]
fn corruption_error(
    model: HashMap<(String, u32), f64>,
    baseline: HashMap<(String, u32), f64>,
) -> PyResult<BTreeMap<String, f64>> {
    metrics::corruption_error(&error_map(model), &error_map(baseline)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (ce, exclude_noise = false))]
fn mce(ce: BTreeMap<String, f64>, exclude_noise: bool) -> PyResult<f64> {
    metrics::mce(&ce, exclude_noise).map_err(py_err)
}

/// Candidates are `(label, clean_accuracy, [six sigma accuracies])`;
/// returns the index of the selected one.
#[pyfunction]
fn select_hparams(candidates: Vec<(String, f64, [f64; 6])>, z: f64) -> PyResult<usize> {
    let cands = candidates
        .into_iter()
        .map(|(label, clean, suite)| Ok(Candidate::new(label, EvalResult::with_suite(clean, suite)?)))
        .collect::<patchnoise::Result<Vec<_>>>()
        .map_err(py_err)?;
    metrics::select_hparams_index(&cands, z).map_err(py_err)
}

/// Row-major unit-norm cosine grating at centered frequency `(i, j)`.
#[pyfunction]
fn fourier_basis(h: usize, w: usize, i: i64, j: i64) -> PyResult<Vec<f64>> {
    patchnoise::fourier::fourier_basis(h, w, i, j).map(|p| p.data).map_err(py_err)
}

#[pyfunction]
fn high_pass(img: &PyImage, radius: f64) -> PyResult<PyImage> {
    patchnoise::fourier::high_pass(&img.0, radius).map(PyImage).map_err(py_err)
}

/// Synthetic low- vs high-frequency dataset as `(images, labels)`.
#[pyfunction]
fn synth_dataset(seed: u64, n: usize) -> PyResult<(Vec<PyImage>, Vec<usize>)> {
    let ds = model::synth_dataset(seed, n, SynthKind::LowFreqVsHighFreq).map_err(py_err)?;
    Ok((ds.images().iter().cloned().map(PyImage).collect(), ds.labels().to_vec()))
}

#[pymodule]
#[pyo3(name = "patchnoise")]
fn patchnoise_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyAugmentSpec>()?;
    m.add_class::<PyToyModel>()?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt, m)?)?;
    m.add_function(wrap_pyfunction!(eval_sigmas, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(relative_gaussian_robustness, m)?)?;
    m.add_function(wrap_pyfunction!(corruption_error, m)?)?;
    m.add_function(wrap_pyfunction!(mce, m)?)?;
    m.add_function(wrap_pyfunction!(select_hparams, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_basis, m)?)?;
    m.add_function(wrap_pyfunction!(high_pass, m)?)?;
    m.add_function(wrap_pyfunction!(synth_dataset, m)?)?;
    Ok(())
}
