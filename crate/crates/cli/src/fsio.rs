//! Dataset directories and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use patchnoise::formats::{format_predictions, parse_config, parse_predictions};
use patchnoise::tensor::read_cifar10_batch;
use patchnoise::{ImageTensor, LabeledDataset};

const LABELS_FILE: &str = "labels.txt";
const META_FILE: &str = "dataset.cfg";

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Fills a fresh temporary directory next to `path` via `fill`, then
/// replaces `path` with it. Nothing is left behind if `fill` fails.
pub fn write_dir_atomic(path: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::Builder::new().prefix(".patchnoise-").tempdir_in(&dir)?;
    fill(tmp.path())?;
    if path.exists() {
        if !path.is_dir() {
            bail!("{} exists and is not a directory", path.display());
        }
        fs::remove_dir_all(path).with_context(|| format!("replacing {}", path.display()))?;
    }
    let kept = tmp.keep();
    fs::rename(&kept, path).with_context(|| format!("moving output to {}", path.display()))?;
    Ok(())
}

/// Writes `NNNNNN.imgt` files, `labels.txt` and `dataset.cfg` into `dir`.
pub fn fill_dataset_dir(dir: &Path, ds: &LabeledDataset) -> Result<()> {
    for (i, img) in ds.images().iter().enumerate() {
        fs::write(dir.join(format!("{i:06}.imgt")), img.encode())?;
    }
    fs::write(dir.join(LABELS_FILE), format_predictions(ds.labels()))?;
    let meta = format!("count={}\nclasses={}\n", ds.len(), ds.num_classes());
    fs::write(dir.join(META_FILE), meta)?;
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &LabeledDataset) -> Result<()> {
    write_dir_atomic(path, |dir| fill_dataset_dir(dir, ds))
}

/// Reads an IMGT dataset directory or a CIFAR-10 binary batch file.
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    if path.is_dir() {
        read_dataset_dir(path).with_context(|| format!("reading dataset {}", path.display()))
    } else {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        read_cifar10_batch(&bytes).with_context(|| format!("decoding CIFAR batch {}", path.display()))
    }
}

fn read_dataset_dir(dir: &Path) -> Result<LabeledDataset> {
    let meta = parse_config(&fs::read_to_string(dir.join(META_FILE))?)?;
    let count: usize = meta.get("count").context("dataset.cfg lacks count")?.parse()?;
    let classes: usize = meta.get("classes").context("dataset.cfg lacks classes")?.parse()?;
    let labels = parse_predictions(&fs::read_to_string(dir.join(LABELS_FILE))?)?;
    if labels.len() != count {
        bail!("labels.txt has {} entries, dataset.cfg says {count}", labels.len());
    }
    let images = (0..count)
        .map(|i| {
            let p = dir.join(format!("{i:06}.imgt"));
            let bytes = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
            ImageTensor::decode(&bytes).with_context(|| format!("decoding {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::new(images, labels, classes)?)
}
