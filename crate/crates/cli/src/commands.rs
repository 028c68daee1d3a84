use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use patchnoise::corrupt::{corrupt_dataset, gaussian_eval_suite};
use patchnoise::formats::{contact_sheet, parse_candidates, parse_error_map, parse_predictions};
use patchnoise::fourier::{half_plane_frequencies, frequencies_within, high_pass_dataset, sensitivity_heatmap};
use patchnoise::metrics::{accuracy, select_hparams_index};
use patchnoise::model::{synth_dataset, train as train_model};
use patchnoise::{
    run_pipeline, AugmentSpec, Classifier, CorruptionKind, CorruptionSpec, EvalResult, LabeledDataset,
    PipelineOrder, Probe, RobustnessReport, SeverityTable, SynthKind, ToyConfig, ToyModel, TrainConfig,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::fsio::{fill_dataset_dir, read_dataset, write_atomic, write_dataset, write_dir_atomic};
use crate::{AugmentArgs, Settings};

const CONTACT_SHEET_TILES: usize = 64;
const CONTACT_SHEET_COLS: usize = 8;

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes a report to `output` if given, else prints it.
fn emit(output: Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<ToyModel> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ToyModel::decode(&bytes).with_context(|| format!("decoding checkpoint {}", path.display()))
}

fn augment_spec(s: &Settings, a: &AugmentArgs, ds: &LabeledDataset) -> Result<AugmentSpec> {
    let kind = s.or(a.kind.clone(), "kind", "none".to_string())?;
    let sigma_max = s.get(a.sigma_max, "sigma-max")?;
    let patch = s.get(a.patch_size, "patch-size")?;
    let need = |v: Option<f64>, name: &str| v.with_context(|| format!("{kind} needs --{name}"));
    let spec = match kind.as_str() {
        "none" => AugmentSpec::none(),
        "gaussian" => AugmentSpec::gaussian(need(sigma_max, "sigma-max")?),
        "cutout" => {
            let patch = patch.context("cutout needs --patch-size")?;
            AugmentSpec::cutout(patch, ds.channel_mean()?)
        }
        "patch_gaussian" => {
            let patch = patch.context("patch_gaussian needs --patch-size")?;
            let up_to = s.or(a.sample_up_to, "sample-up-to", false)?;
            AugmentSpec::patch_gaussian(patch, need(sigma_max, "sigma-max")?, up_to)
        }
        other => bail!("unknown augmentation kind {other:?}"),
    };
    let order: PipelineOrder = s.or(a.order.clone(), "order", "augment_then_flipcrop".into())?.parse()?;
    let spec = spec.with_order(order).with_pad(s.or(a.pad, "pad", 0)?);
    spec.validate()?;
    Ok(spec)
}

pub fn augment(
    s: &Settings,
    seed: u64,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    a: &AugmentArgs,
    sheet: Option<PathBuf>,
) -> Result<()> {
    let ds = read_dataset(&s.require(input, "input")?)?;
    let output: PathBuf = s.require(output, "output")?;
    let spec = augment_spec(s, a, &ds)?;
    let images = ds
        .images()
        .par_iter()
        .enumerate()
        .map(|(i, img)| run_pipeline(img, &spec, seed, i as u64))
        .collect::<patchnoise::Result<Vec<_>>>()?;
    let out = ds.with_images(images)?;
    let sheet_bytes = match s.get(sheet, "contact-sheet")? {
        Some(p) => {
            let n = out.len().min(CONTACT_SHEET_TILES);
            let sheet = contact_sheet(&out.images()[..n], CONTACT_SHEET_COLS)?;
            Some((p, sheet.write_ppm()?))
        }
        None => None,
    };
    write_dataset(&output, &out)?;
    if let Some((p, bytes)) = sheet_bytes {
        write_atomic(&p, &bytes)?;
    }
    println!("augmented {} images ({}) -> {}", out.len(), spec.kind.name(), output.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn corrupt(
    s: &Settings,
    seed: u64,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    kind: Option<String>,
    severity: Option<u8>,
    param: Option<f64>,
    table: Option<PathBuf>,
) -> Result<()> {
    let ds = read_dataset(&s.require(input, "input")?)?;
    let output: PathBuf = s.require(output, "output")?;
    let table = match s.get(table, "severity-table")? {
        Some(p) => SeverityTable::parse(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
        None => SeverityTable::default(),
    };
    match s.get(kind, "kind")? {
        None => {
            let suite = gaussian_eval_suite(&ds, seed)?;
            write_dir_atomic(&output, |dir| {
                for (sigma, d) in &suite {
                    let sub = dir.join(format!("sigma_{sigma}"));
                    std::fs::create_dir(&sub)?;
                    fill_dataset_dir(&sub, d)?;
                }
                Ok(())
            })?;
            println!("wrote {} gaussian eval sets -> {}", suite.len(), output.display());
        }
        Some(name) => {
            let kind: CorruptionKind = name.parse()?;
            let spec = match (s.get(severity, "severity")?, s.get(param, "param")?) {
                (Some(level), None) => CorruptionSpec::level(kind, level),
                (None, Some(p)) => CorruptionSpec::param(kind, p),
                _ => bail!("give exactly one of --severity or --param"),
            };
            let tag = format!("corrupt:{kind}");
            let out = corrupt_dataset(&ds, &spec, &table, seed, &tag)?;
            write_dataset(&output, &out)?;
            println!("corrupted {} images ({kind}) -> {}", out.len(), output.display());
        }
    }
    Ok(())
}

fn read_predictions(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_predictions(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn eval(
    s: &Settings,
    input: Option<PathBuf>,
    predictions: Option<PathBuf>,
    sigma_predictions: &[String],
    output: Option<PathBuf>,
) -> Result<()> {
    let ds = read_dataset(&s.require(input, "input")?)?;
    let clean = accuracy(&read_predictions(&s.require(predictions, "predictions")?)?, ds.labels())?;
    let mut result = EvalResult::new(clean)?;
    for entry in sigma_predictions {
        let (sigma, path) = entry
            .split_once('=')
            .with_context(|| format!("expected sigma=path, got {entry:?}"))?;
        let sigma: f64 = sigma.trim().parse().with_context(|| format!("bad sigma {sigma:?}"))?;
        let acc = accuracy(&read_predictions(Path::new(path.trim()))?, ds.labels())?;
        result.set_sigma_accuracy(sigma, acc)?;
    }
    let mut sigmas = Map::new();
    for (sigma, acc) in &result.per_sigma_accuracy {
        sigmas.insert(sigma.to_string(), json!(acc));
    }
    let mut report = Map::new();
    report.insert("clean_accuracy".into(), json!(result.clean_accuracy));
    report.insert("sigma_accuracy".into(), Value::Object(sigmas));
    if let Ok(r) = patchnoise::metrics::relative_gaussian_robustness(&result) {
        report.insert("relative_robustness".into(), json!(r));
    }
    emit(output, &json_text(&Value::Object(report)))
}

pub fn mce(
    s: &Settings,
    input: Option<PathBuf>,
    baseline: Option<PathBuf>,
    exclude_noise: bool,
    output: Option<PathBuf>,
) -> Result<()> {
    let read = |p: PathBuf| -> Result<_> {
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        parse_error_map(&text).with_context(|| format!("parsing {}", p.display()))
    };
    let model = read(s.require(input, "input")?)?;
    let base = read(s.require(baseline, "baseline")?)?;
    let exclude_noise = s.flag(exclude_noise, "exclude-noise")?;
    let report = RobustnessReport::build(&model, &base, None)?;
    if exclude_noise && report.mce_minus_noise.is_none() {
        return Err(patchnoise::Error::EmptyAfterExclusion.into());
    }
    for (kind, ce) in &report.ce {
        println!("CE {kind} {ce:.3}");
    }
    println!("mCE {:.3}", report.mce);
    if exclude_noise {
        println!("mCE(-noise) {:.3}", report.mce_minus_noise.unwrap_or(f64::NAN));
    }
    if let Some(p) = output {
        let ce: Map<String, Value> = report.ce.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let v = json!({
            "ce": ce,
            "mce": report.mce,
            "mce_minus_noise": report.mce_minus_noise,
        });
        write_atomic(&p, json_text(&v).as_bytes())?;
    }
    Ok(())
}

/// Accepts `0.965` or `96.5%`.
fn parse_z(raw: &str) -> Result<f64> {
    let t = raw.trim();
    let z = match t.strip_suffix('%') {
        Some(pct) => pct.trim().parse::<f64>()? / 100.0,
        None => t.parse::<f64>()?,
    };
    if !(0.0..=1.0).contains(&z) {
        bail!("Z must lie in [0, 1] (or 0%..100%), got {raw}");
    }
    Ok(z)
}

pub fn select(s: &Settings, input: Option<PathBuf>, z: Option<String>, output: Option<PathBuf>) -> Result<()> {
    let path: PathBuf = s.require(input, "input")?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let cands = parse_candidates(&text).with_context(|| format!("parsing {}", path.display()))?;
    let z = parse_z(&s.require(z, "z")?)?;
    let idx = select_hparams_index(&cands, z)?;
    let c = &cands[idx];
    let rob = patchnoise::metrics::relative_gaussian_robustness(&c.eval)?;
    let gated = c.eval.clean_accuracy >= z;
    println!("selected {}", c.label);
    println!(
        "clean {:.4} robustness {:.4} ({})",
        c.eval.clean_accuracy,
        rob,
        if gated { "meets Z" } else { "no candidate meets Z; highest clean accuracy" }
    );
    if let Some(p) = output {
        let v = json!({
            "clean_accuracy": c.eval.clean_accuracy,
            "index": idx,
            "label": c.label,
            "meets_z": gated,
            "relative_robustness": rob,
            "z": z,
        });
        write_atomic(&p, json_text(&v).as_bytes())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn fourier(
    s: &Settings,
    seed: u64,
    model: Option<PathBuf>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    image: Option<PathBuf>,
    norm: Option<f64>,
    probe: Option<String>,
    max_freq: Option<i64>,
) -> Result<()> {
    let model = load_model(&s.require(model, "model")?)?;
    let ds = read_dataset(&s.require(input, "input")?)?;
    let output: PathBuf = s.require(output, "output")?;
    let norm = s.or(norm, "norm", 4.0)?;
    let probe: Probe = s.or(probe, "probe", "test_error".to_string())?.parse()?;
    let shape = ds.shape().context("empty dataset")?;
    let freqs = match s.get(max_freq, "max-freq")? {
        Some(m) => frequencies_within(shape.height, shape.width, m),
        None => half_plane_frequencies(shape.height, shape.width),
    };
    let map = sensitivity_heatmap(&model, &ds, &freqs, norm, probe, seed)?;
    let ppm = match s.get(image, "image")? {
        Some(p) => Some((p, map.to_image().write_ppm()?)),
        None => None,
    };
    write_atomic(&output, map.to_csv().as_bytes())?;
    if let Some((p, bytes)) = ppm {
        write_atomic(&p, &bytes)?;
    }
    println!("{} frequencies ({}) -> {}", map.cells.len(), probe.name(), output.display());
    Ok(())
}

pub fn highpass(s: &Settings, input: Option<PathBuf>, output: Option<PathBuf>, radius: Option<f64>) -> Result<()> {
    let ds = read_dataset(&s.require(input, "input")?)?;
    let output: PathBuf = s.require(output, "output")?;
    let radius = s.require(radius, "radius")?;
    let out = high_pass_dataset(&ds, radius)?;
    write_dataset(&output, &out)?;
    println!("high-passed {} images at r = {radius} -> {}", out.len(), output.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    s: &Settings,
    seed: u64,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    filters: Option<usize>,
    pool: Option<usize>,
    epochs: Option<usize>,
    lr: Option<f64>,
    batch_size: Option<usize>,
    a: &AugmentArgs,
) -> Result<()> {
    let ds = read_dataset(&s.require(input, "input")?)?;
    let output: PathBuf = s.require(output, "output")?;
    let shape = ds.shape().context("empty dataset")?;
    let config = ToyConfig::new(
        s.or(filters, "filters", 24)?,
        shape.channels,
        s.or(pool, "pool", 3)?,
        ds.num_classes(),
    );
    let init = ToyModel::init(seed, config)?;
    let cfg = TrainConfig {
        epochs: s.or(epochs, "epochs", 15)?,
        learning_rate: s.or(lr, "lr", 1.0)?,
        batch_size: s.or(batch_size, "batch-size", 16)?,
        seed,
        augment: augment_spec(s, a, &ds)?,
    };
    let model = train_model(&init, &ds, &cfg)?;
    let acc = patchnoise::model::evaluate(&model, &ds)?;
    write_atomic(&output, &model.encode())?;
    println!("trained ({}) train accuracy {acc:.4} -> {}", cfg.augment.kind.name(), output.display());
    Ok(())
}

pub fn predict(s: &Settings, model: Option<PathBuf>, input: Option<PathBuf>, output: Option<PathBuf>) -> Result<()> {
    let model = load_model(&s.require(model, "model")?)?;
    let ds = read_dataset(&s.require(input, "input")?)?;
    let preds = model.predict_all(ds.images())?;
    emit(output, &patchnoise::formats::format_predictions(&preds))
}

pub fn synth(s: &Settings, seed: u64, output: Option<PathBuf>, n: Option<usize>, kind: Option<String>) -> Result<()> {
    let output: PathBuf = s.require(output, "output")?;
    let kind: SynthKind = s.or(kind, "kind", "low_freq_vs_high_freq".to_string())?.parse()?;
    let n = s.or(n, "n", 1000)?;
    let ds = synth_dataset(seed, n, kind)?;
    write_dataset(&output, &ds)?;
    println!("synthesized {n} images -> {}", output.display());
    Ok(())
}
