//! Mini-batch training from scratch, fine-tuning from a checkpoint, and
//! evaluation of saved models.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::data::{apply_norm, fnv1a64, normalize, smote, stratified_split, Dataset, NormStats, DEFAULT_K};
use crate::error::{Error, Result};
use crate::loss::bce_loss;
use crate::metrics::{confusion, report, EvalReport};
use crate::model::{backward, forward, predict, ModelParams, Prediction, CONV_A, CONV_B, DEFAULT_THRESHOLD};
use crate::optim::{adam_step, OptimizerState};
use crate::svg::{line_panels, Series};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub val_fraction: f64,
    pub smote_enabled: bool,
    pub freeze_features: bool,
    pub threshold: f32,
}

impl TrainConfig {
    /// 100 epochs at lr 1e-3.
    pub fn scratch(seed: u64) -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            seed,
            val_fraction: 0.2,
            smote_enabled: true,
            freeze_features: false,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// 20 epochs at lr 1e-4.
    pub fn finetune(seed: u64) -> Self {
        Self {
            epochs: 20,
            learning_rate: 1e-4,
            ..Self::scratch(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }

    fn stream(&self, name: &str) -> u64 {
        self.seed ^ fnv1a64(name.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    /// Optimizer steps taken.
    pub steps: u64,
    /// Validation report after the last epoch.
    pub report: EvalReport,
    /// Training rows after SMOTE.
    pub train_rows: usize,
    pub val_rows: usize,
}

/// Train and validation splits, normalized with training statistics.
struct Prepared {
    train: Dataset,
    val: Dataset,
    stats: NormStats,
}

fn prepare(ds: &Dataset, cfg: &TrainConfig) -> Result<Prepared> {
    if ds.norm_stats().is_some() {
        return Err(Error::Usage("training expects raw features, got a normalized dataset".into()));
    }
    let (train, val) = stratified_split(ds, cfg.val_fraction, cfg.stream("split"))?;
    let (train, stats) = normalize(&train)?;
    let val = apply_norm(&stats, &val)?;
    let train = if cfg.smote_enabled {
        smote(&train, DEFAULT_K, cfg.stream("smote"))?
    } else {
        train
    };
    Ok(Prepared { train, val, stats })
}

/// Trains a freshly initialized model.
pub fn train_scratch(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let params = ModelParams::build(ds.feature_count(), cfg.stream("init"))?;
    run(params, ds, cfg)
}

/// Continues training from `source` on a new dataset with the same feature count.
pub fn finetune(source: &Checkpoint, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_compatible(source, ds)?;
    let mut params = source.params.clone();
    if cfg.freeze_features {
        params.set_trainable(CONV_A, false)?;
        params.set_trainable(CONV_B, false)?;
    }
    run(params, ds, cfg)
}

fn check_compatible(ckpt: &Checkpoint, ds: &Dataset) -> Result<()> {
    let fingerprint = ds.schema().fingerprint();
    if ckpt.feature_count() != ds.feature_count() {
        return Err(Error::Compatibility(format!(
            "checkpoint has {} features (fingerprint {:016x}), dataset has {} (fingerprint {:016x})",
            ckpt.feature_count(),
            ckpt.fingerprint,
            ds.feature_count(),
            fingerprint
        )));
    }
    if ckpt.fingerprint != fingerprint {
        log::warn!(
            "feature names differ from the checkpoint (fingerprint {:016x} vs {:016x}); continuing by position",
            ckpt.fingerprint,
            fingerprint
        );
    }
    Ok(())
}

fn run(mut params: ModelParams<f32>, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let Prepared { train, val, stats } = prepare(ds, cfg)?;
    let f = train.feature_count();
    let x_train = train.features_f32();
    let x_val = val.features_f32();
    let mut opt = OptimizerState::<f32>::new(cfg.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.stream("shuffle"));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = params.zero_gradients();
            for &i in batch {
                let x = Tensor::from_slice(&[f, 1], x_train.row(i))?;
                let y = train.labels()[i];
                let (p, cache) = forward(&params, &x)?;
                let (loss, dp) = bce_loss(p as f64, y)?;
                loss_sum += loss;
                correct += usize::from(u8::from(p >= cfg.threshold) == y);
                grads.accumulate(&backward(&params, cache, dp as f32)?)?;
            }
            grads.scale(1.0 / batch.len() as f32);
            adam_step(&mut opt, params.layers_mut(), &grads.tensors)?;
        }
        let (val_loss, val_acc) = loss_and_accuracy(&params, &x_val, val.labels(), cfg.threshold)?;
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
        };
        log::info!(
            "epoch {epoch}/{}: loss {:.4} acc {:.4} val_loss {:.4} val_acc {:.4}",
            cfg.epochs,
            entry.train_loss,
            entry.train_acc,
            entry.val_loss,
            entry.val_acc
        );
        if !entry.train_loss.is_finite() || !entry.val_loss.is_finite() {
            return Err(Error::Data(format!("training diverged at epoch {epoch}")));
        }
        log.push(entry);
    }

    let report = report_for(&params, &x_val, val.labels(), cfg.threshold)?;
    let checkpoint = Checkpoint::new(params, stats, ds.schema().fingerprint())?;
    Ok(TrainOutcome {
        checkpoint,
        log,
        steps: opt.step_count(),
        report,
        train_rows: train.len(),
        val_rows: val.len(),
    })
}

fn loss_and_accuracy(params: &ModelParams<f32>, x: &Tensor<f32>, y: &[u8], threshold: f32) -> Result<(f64, f64)> {
    let preds = predict(params, x, threshold)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (p, &t) in preds.iter().zip(y) {
        loss += bce_loss(p.probability as f64, t)?.0;
        correct += usize::from(p.label == t);
    }
    Ok((loss / y.len() as f64, correct as f64 / y.len() as f64))
}

fn report_for(params: &ModelParams<f32>, x: &Tensor<f32>, y: &[u8], threshold: f32) -> Result<EvalReport> {
    let labels: Vec<u8> = predict(params, x, threshold)?.iter().map(|p| p.label).collect();
    report(&confusion(y, &labels)?)
}

/// Predictions for raw (unnormalized) rows, using the checkpoint's statistics.
pub fn predict_dataset(ckpt: &Checkpoint, ds: &Dataset, threshold: f32) -> Result<Vec<Prediction>> {
    check_compatible(ckpt, ds)?;
    let normed = apply_norm(&ckpt.norm_stats, ds)?;
    predict(&ckpt.params, &normed.features_f32(), threshold)
}

pub fn evaluate(ckpt: &Checkpoint, ds: &Dataset, threshold: f32) -> Result<EvalReport> {
    let labels: Vec<u8> = predict_dataset(ckpt, ds, threshold)?.iter().map(|p| p.label).collect();
    report(&confusion(ds.labels(), &labels)?)
}

pub fn write_epoch_log(log: &[EpochLog], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for e in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Accuracy and loss curves side by side.
pub fn curves_svg(log: &[EpochLog]) -> String {
    let col = |f: fn(&EpochLog) -> f64| log.iter().map(f).collect::<Vec<_>>();
    line_panels(&[
        (
            "Accuracy",
            vec![
                Series { name: "train", color: "#1f77b4", values: col(|e| e.train_acc) },
                Series { name: "validation", color: "#ff7f0e", values: col(|e| e.val_acc) },
            ],
        ),
        (
            "Loss",
            vec![
                Series { name: "train", color: "#1f77b4", values: col(|e| e.train_loss) },
                Series { name: "validation", color: "#ff7f0e", values: col(|e| e.val_loss) },
            ],
        ),
    ])
}
