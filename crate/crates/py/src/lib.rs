//! Python module `gesture`.
//!
//! Images cross the boundary as [`Image`] objects holding interleaved 8-bit
//! samples; vectors and probability distributions are plain lists of floats.

use gesture_core::data::synth_digits as core_synth_digits;
use gesture_core::generative::{self, VaeConfig, VaeLayout, VaeParams};
use gesture_core::imaging::{self, pnm, BinaryMask, FloatImage};
use gesture_core::neuralnet::{self, Architecture, ModelFile, Network, Tensor};
use gesture_core::tracking::{self, CamShiftParams, MeanShiftParams, TrackConfig, Window};
use gesture_core::{Error, ImageBuffer};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Numeric(_) | Error::LostTrack(_) | Error::DegenerateFusion => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for gesture_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[pyclass(module = "gesture", from_py_object)]
#[derive(Clone)]
pub struct Image {
    inner: ImageBuffer,
}

#[pymethods]
impl Image {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(Self { inner: ImageBuffer::from_vec(width, height, channels, data).py()? })
    }

    /// Reads a binary PGM or PPM file.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self { inner: pnm::read(path).py()? })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        pnm::write(path, &self.inner).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.data())
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<Vec<u8>> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("pixel ({x}, {y}) is outside the image")));
        }
        Ok(self.inner.pixel(x, y).to_vec())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}x{})", self.inner.width(), self.inner.height(), self.inner.channels())
    }
}

fn mask_of(img: &Image) -> PyResult<BinaryMask> {
    BinaryMask::from_image(img.inner.clone(), 255).py()
}

#[pyfunction]
fn grayscale(img: &Image) -> PyResult<Image> {
    Ok(Image { inner: imaging::grayscale(&img.inner).py()? })
}

/// `max_value` where `src > threshold`, 0 elsewhere.
#[pyfunction]
#[pyo3(signature = (img, threshold, max_value = 255))]
fn threshold_binary(img: &Image, threshold: u8, max_value: u8) -> PyResult<Image> {
    Ok(Image { inner: imaging::threshold_binary(&img.inner, threshold, max_value).py()?.into_image() })
}

#[pyfunction]
fn color_distance_mask(img: &Image, key_color: [u8; 3], threshold: u8) -> PyResult<Image> {
    Ok(Image { inner: imaging::color_distance_mask(&img.inner, key_color, threshold).py()?.into_image() })
}

/// Frame where the 0/255 mask is set, `background` elsewhere.
#[pyfunction]
fn replace_background(frame: &Image, background: &Image, mask: &Image) -> PyResult<Image> {
    Ok(Image { inner: imaging::replace_background(&frame.inner, &background.inner, &mask_of(mask)?).py()? })
}

#[pyfunction]
fn frame_difference(frame: &Image, previous: &Image, threshold: u8) -> PyResult<Image> {
    Ok(Image { inner: imaging::frame_difference(&frame.inner, &previous.inner, threshold).py()?.into_image() })
}

/// Hull vertices `(x, y)` of the set pixels of a 0/255 mask.
#[pyfunction]
fn convex_hull(mask: &Image) -> PyResult<Vec<(usize, usize)>> {
    Ok(imaging::convex_hull(&mask_of(mask)?).py()?.into_iter().map(|p| (p.x, p.y)).collect())
}

/// Raw moments `M_ij` and central moments `mu_pq` (orders up to 2) of a
/// row-major float image, keyed "m00", "mu11", ...
#[pyfunction]
fn moments<'py>(py: Python<'py>, values: Vec<f64>, width: usize, height: usize) -> PyResult<Bound<'py, PyDict>> {
    let img = FloatImage::from_vec(width, height, values).py()?;
    let m = tracking::moments(&img, None).py()?;
    let d = PyDict::new(py);
    for i in 0..3 {
        for j in 0..3 - i {
            d.set_item(format!("m{i}{j}"), m.raw[i][j])?;
            d.set_item(format!("mu{i}{j}"), m.central[i][j])?;
        }
    }
    Ok(d)
}

/// CamShift over gray frames. Returns one dict per frame with "centroid",
/// "window" `(x, y, w, h)`, "iterations", "converged" and "lost".
#[pyfunction]
#[pyo3(signature = (frames, roi, bins = 32, max_iter = 20, eps = 1.0, p_max = 1.0))]
fn track_sequence<'py>(
    py: Python<'py>,
    frames: Vec<Image>,
    roi: (i64, i64, usize, usize),
    bins: usize,
    max_iter: usize,
    eps: f64,
    p_max: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let frames: Vec<ImageBuffer> = frames.into_iter().map(|f| f.inner).collect();
    let config =
        TrackConfig { bin_count: bins, camshift: CamShiftParams { search: MeanShiftParams { max_iter, eps }, p_max } };
    let states = tracking::track_sequence(&frames, Window::new(roi.0, roi.1, roi.2, roi.3), &config).py()?;
    states
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("centroid", s.centroid)?;
            d.set_item("window", (s.window.x, s.window.y, s.window.w, s.window.h))?;
            d.set_item("iterations", s.iterations)?;
            d.set_item("converged", s.converged)?;
            d.set_item("lost", s.lost)?;
            Ok(d)
        })
        .collect()
}

/// Per-layer parameter counts of the built-in classifier.
#[pyfunction]
#[pyo3(signature = (input_size = 28, channels = 1))]
fn figure1_param_counts(input_size: usize, channels: usize) -> PyResult<Vec<usize>> {
    Ok(Architecture::figure1(input_size, channels, (0.25, 0.5)).py()?.count_params())
}

#[pyfunction]
fn fuse_predict(probs_low: Vec<f64>, probs_high: Vec<f64>) -> PyResult<(Vec<f64>, usize)> {
    neuralnet::fuse_predict(&probs_low, &probs_high).py()
}

#[pyfunction]
fn softmax(logits: Vec<f64>) -> Vec<f64> {
    neuralnet::softmax(&logits)
}

/// Seeded synthetic 28×28 digits as `(pixels, labels)`.
#[pyfunction]
fn synth_digits<'py>(py: Python<'py>, n: usize, seed: u64) -> (Bound<'py, PyBytes>, Vec<u8>) {
    let ds = core_synth_digits(n, seed);
    (PyBytes::new(py, ds.pixels()), ds.labels().to_vec())
}

/// Trained CNN classifier loaded from a GNET file.
#[pyclass(module = "gesture")]
pub struct Classifier {
    net: Network,
}

#[pymethods]
impl Classifier {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { net: ModelFile::load(path).py()?.into_network().py()? })
    }

    /// Untrained network with the initial weights for `seed`.
    #[staticmethod]
    #[pyo3(signature = (input_size = 28, channels = 1, seed = 0))]
    fn figure1(input_size: usize, channels: usize, seed: u64) -> PyResult<Self> {
        let arch = Architecture::figure1(input_size, channels, (0.25, 0.5)).py()?;
        Ok(Self { net: neuralnet::init_params(&arch, seed) })
    }

    fn save(&self, path: &str, seed: u64) -> PyResult<()> {
        ModelFile::classifier(&self.net, seed, None).save(path).py()
    }

    #[getter]
    fn input_shape(&self) -> [usize; 3] {
        self.net.input_shape()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.net.architecture().total_params()
    }

    /// Class probabilities for one input, flattened row-major `[h, w, c]`.
    fn predict(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = Tensor::from_vec(self.net.input_shape().to_vec(), values).py()?;
        self.net.predict(&x).py()
    }
}

#[pyfunction]
fn kl_gaussian(mu: Vec<f64>, log_var: Vec<f64>) -> PyResult<f64> {
    if mu.len() != log_var.len() {
        return Err(PyValueError::new_err("mu and log_var lengths differ"));
    }
    Ok(generative::kl_gaussian(&mu, &log_var))
}

#[pyfunction]
fn elbo(x: Vec<f64>, recon: Vec<f64>, mu: Vec<f64>, log_var: Vec<f64>) -> PyResult<f64> {
    if x.len() != recon.len() || mu.len() != log_var.len() {
        return Err(PyValueError::new_err("vector lengths differ"));
    }
    Ok(generative::elbo(&x, &recon, &mu, &log_var))
}

#[pyfunction]
fn reparameterize(mu: Vec<f64>, log_var: Vec<f64>, eps: Vec<f64>) -> PyResult<Vec<f64>> {
    if mu.len() != log_var.len() || mu.len() != eps.len() {
        return Err(PyValueError::new_err("vector lengths differ"));
    }
    Ok(generative::reparameterize(&mu, &log_var, &eps))
}

/// Variational autoencoder with a Bernoulli decoder.
#[pyclass(module = "gesture")]
pub struct Vae {
    params: VaeParams,
}

#[pymethods]
impl Vae {
    #[new]
    #[pyo3(signature = (input = 784, hidden = 256, latent = 2, seed = 0, zero = false))]
    fn new(input: usize, hidden: usize, latent: usize, seed: u64, zero: bool) -> PyResult<Self> {
        let layout = VaeLayout::new(input, hidden, latent).py()?;
        let params = if zero { VaeParams::zeros(layout) } else { VaeParams::init(layout, seed) };
        Ok(Self { params })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { params: VaeParams::from_model_file(ModelFile::load(path).py()?).py()? })
    }

    fn save(&self, path: &str, seed: u64) -> PyResult<()> {
        self.params.to_model_file(seed, None).save(path).py()
    }

    /// Trains in place on images in `[0, 1]`; returns per-epoch mean
    /// negative ELBO.
    #[pyo3(signature = (data, epochs = 20, learning_rate = 5e-4, momentum = 0.9, batch_size = 25, seed = 0))]
    fn train(
        &mut self,
        py: Python<'_>,
        data: Vec<Vec<f64>>,
        epochs: usize,
        learning_rate: f64,
        momentum: f64,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        let layout = self.params.layout();
        let config = VaeConfig {
            hidden: layout.hidden,
            latent: layout.latent,
            learning_rate,
            momentum,
            batch_size,
            epochs,
            seed,
        };
        let params = &mut self.params;
        py.detach(|| generative::train_vae_from(params, &data, &config)).py()
    }

    fn encode(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.params.encode(&x).py()
    }

    fn decode(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.params.decode(&z).py()
    }

    /// Decoded `grid`×`grid` lattice over `[-radius, radius]^2` as one image.
    #[pyo3(signature = (grid = 10, radius = 3.0))]
    fn latent_mosaic(&self, grid: usize, radius: f64) -> PyResult<Image> {
        let tiles = generative::latent_grid(&self.params, grid, radius).py()?;
        Ok(Image { inner: generative::mosaic(&tiles, grid).py()? })
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.params.param_count()
    }
}

#[pymodule]
fn gesture(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Image>()?;
    m.add_class::<Classifier>()?;
    m.add_class::<Vae>()?;
    m.add_function(wrap_pyfunction!(grayscale, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_binary, m)?)?;
    m.add_function(wrap_pyfunction!(color_distance_mask, m)?)?;
    m.add_function(wrap_pyfunction!(replace_background, m)?)?;
    m.add_function(wrap_pyfunction!(frame_difference, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(track_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(figure1_param_counts, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_predict, m)?)?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(synth_digits, m)?)?;
    m.add_function(wrap_pyfunction!(kl_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(elbo, m)?)?;
    m.add_function(wrap_pyfunction!(reparameterize, m)?)?;
    Ok(())
}
