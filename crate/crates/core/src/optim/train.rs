use std::path::PathBuf;

use crate::data_eval::macro_f1;
use crate::error::{Error, Result};
use crate::layers::{ParamKind, Parameterized};
use crate::models::{decide, Model, ModelInput};
use crate::numeric::{RngStream, Tensor};
use crate::optim::{l2_penalty, loss, Optimizer, OptimizerKind};

/// One labeled model input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: ModelInput,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l2_lambda: f64,
    pub patience: usize,
    pub lr_reduction_factor: f64,
    pub min_lr: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Written each time validation loss improves.
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 128,
            lr: 0.01,
            l2_lambda: 0.01,
            patience: 3,
            lr_reduction_factor: 0.5,
            min_lr: 1e-5,
            seed: 0,
            optimizer: OptimizerKind::Amsgrad,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    /// Settings for the recurrent head over contextual embeddings.
    pub fn contextual() -> Self {
        TrainConfig {
            batch_size: 16,
            lr: 2e-5,
            optimizer: OptimizerKind::Adam,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad(format!("l2_lambda must be non-negative, got {}", self.l2_lambda));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.lr_reduction_factor > 0.0 && self.lr_reduction_factor <= 1.0) {
            return bad(format!("lr_reduction_factor must lie in (0, 1], got {}", self.lr_reduction_factor));
        }
        if !(self.min_lr >= 0.0) {
            return bad(format!("min_lr must be non-negative, got {}", self.min_lr));
        }
        Ok(())
    }
}

pub fn batches_per_epoch(n_examples: usize, batch_size: usize) -> usize {
    n_examples.div_ceil(batch_size)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_macro_f1,lr\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_loss, e.val_loss, e.val_macro_f1, e.lr
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub reduce_lr: bool,
    pub stop: bool,
}

/// Validation-loss plateau tracking: the learning rate drops after
/// `patience - 1` epochs without improvement and training halts after
/// `patience`.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    epochs_seen: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience: patience.max(1),
            best: f64::INFINITY,
            best_epoch: 0,
            epochs_seen: 0,
            bad_epochs: 0,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> StopDecision {
        self.epochs_seen += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = self.epochs_seen;
            self.bad_epochs = 0;
            return StopDecision {
                improved: true,
                reduce_lr: false,
                stop: false,
            };
        }
        self.bad_epochs += 1;
        StopDecision {
            improved: false,
            reduce_lr: self.patience > 1 && self.bad_epochs == self.patience - 1,
            stop: self.bad_epochs >= self.patience,
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Mean loss, macro-F1 and accuracy of `model` on `data` in eval mode.
pub fn evaluate(model: &Model, data: &[Example]) -> Result<(f64, f64, f64)> {
    let kind = model.loss_kind();
    let mut total = 0.0;
    let mut preds = Vec::with_capacity(data.len());
    let mut golds = Vec::with_capacity(data.len());
    for ex in data {
        let p = model.predict(&ex.input)?;
        total += loss(kind, &p, ex.label)?.0;
        preds.push(decide(&p));
        golds.push(ex.label);
    }
    let n = data.len().max(1) as f64;
    let correct = preds.iter().zip(&golds).filter(|(p, g)| p == g).count();
    Ok((total / n, macro_f1(&preds, &golds, model.spec().head.classes())?, correct as f64 / n))
}

fn check_data(model: &Model, data: &[Example], what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    let classes = model.spec().head.classes();
    if let Some(ex) = data.iter().find(|ex| ex.label >= classes) {
        return Err(Error::Data(format!(
            "{what} label {} does not fit the {} head ({classes} classes)",
            ex.label,
            model.spec().head.name()
        )));
    }
    Ok(())
}

/// Mini-batch training state; [`Trainer::run_epoch`] advances one epoch.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: Model,
    grads: Model,
    config: TrainConfig,
    optimizer: Optimizer,
    trainable: Vec<bool>,
    kernels: Vec<bool>,
    stopping: EarlyStopping,
    best: Option<Model>,
    history: TrainHistory,
    finished: bool,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let named = model.named_params();
        let trainable: Vec<bool> = named.iter().map(|p| p.trainable).collect();
        let kernels = named
            .iter()
            .map(|p| p.trainable && p.kind == ParamKind::Kernel)
            .collect();
        drop(named);
        Ok(Trainer {
            grads: model.zeros_like(),
            optimizer: Optimizer::new(config.optimizer, config.lr),
            stopping: EarlyStopping::new(config.patience),
            model,
            config,
            trainable,
            kernels,
            best: None,
            history: TrainHistory::default(),
            finished: false,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    pub fn optimizer(&self) -> &Optimizer {
        &self.optimizer
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn step(&mut self, batch: &[&Example], epoch: u64, first_index: usize, order: &[usize]) -> Result<f64> {
        self.grads.zero_grads();
        let kind = self.model.loss_kind();
        let scale = 1.0 / batch.len() as f64;
        let mut batch_loss = 0.0;
        for (k, ex) in batch.iter().enumerate() {
            let mut rng = RngStream::derived(self.config.seed, &[epoch, order[first_index + k] as u64]);
            let pass = self.model.forward_train(&ex.input, &mut rng)?;
            let (value, mut g) = loss(kind, &pass.probs, ex.label)?;
            batch_loss += value;
            g.iter_mut().for_each(|v| *v *= scale);
            self.model.backward(&pass, &g, &mut self.grads)?;
        }
        {
            let params: Vec<&Tensor> = self.model.named_params().into_iter().map(|p| p.tensor).collect();
            let kernels: Vec<&Tensor> = params
                .iter()
                .zip(&self.kernels)
                .filter(|(_, &k)| k)
                .map(|(t, _)| *t)
                .collect();
            let mut grads: Vec<&mut Tensor> = self
                .grads
                .params_mut()
                .into_iter()
                .zip(&self.kernels)
                .filter(|(_, &k)| k)
                .map(|(t, _)| t)
                .collect();
            l2_penalty(&kernels, self.config.l2_lambda, &mut grads)?;
        }
        let grads: Vec<&Tensor> = self
            .grads
            .named_params()
            .into_iter()
            .zip(&self.trainable)
            .filter(|(_, &t)| t)
            .map(|(p, _)| p.tensor)
            .collect();
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient at epoch {}", epoch + 1)));
        }
        let mut params: Vec<&mut Tensor> = self
            .model
            .params_mut()
            .into_iter()
            .zip(&self.trainable)
            .filter(|(_, &t)| t)
            .map(|(p, _)| p)
            .collect();
        self.optimizer.update(&mut params, &grads)?;
        Ok(batch_loss)
    }

    /// Trains one epoch and evaluates on `val`. Returns the epoch's record,
    /// or `None` once training has stopped.
    pub fn run_epoch(&mut self, train: &[Example], val: &[Example]) -> Result<Option<EpochRecord>> {
        if self.finished {
            return Ok(None);
        }
        check_data(&self.model, train, "training")?;
        check_data(&self.model, val, "validation")?;
        let epoch = self.history.epochs.len();
        let mut order: Vec<usize> = (0..train.len()).collect();
        RngStream::derived(self.config.seed, &[u64::MAX, epoch as u64]).shuffle(&mut order);
        let lr = self.optimizer.lr;
        let mut total = 0.0;
        for start in (0..order.len()).step_by(self.config.batch_size) {
            let end = (start + self.config.batch_size).min(order.len());
            let batch: Vec<&Example> = order[start..end].iter().map(|&i| &train[i]).collect();
            total += self.step(&batch, epoch as u64, start, &order)?;
        }
        let (val_loss, val_f1, _) = evaluate(&self.model, val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {}", epoch + 1)));
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: total / train.len() as f64,
            val_loss,
            val_macro_f1: val_f1,
            lr,
        };
        self.history.epochs.push(record);
        let decision = self.stopping.observe(val_loss);
        if decision.improved {
            self.best = Some(self.model.clone());
            self.history.best_epoch = epoch + 1;
            if let Some(path) = &self.config.checkpoint_path {
                crate::optim::save_checkpoint(&self.model, path)?;
            }
        }
        if decision.reduce_lr {
            self.optimizer.lr = (self.optimizer.lr * self.config.lr_reduction_factor).max(self.config.min_lr);
            log::info!("epoch {}: lr reduced to {}", epoch + 1, self.optimizer.lr);
        }
        log::info!(
            "epoch {}: train_loss {:.5} val_loss {:.5} val_macro_f1 {:.4}",
            epoch + 1,
            record.train_loss,
            val_loss,
            val_f1
        );
        if decision.stop || self.history.epochs.len() >= self.config.epochs {
            self.finished = true;
        }
        Ok(Some(record))
    }

    /// The best-validation model and the full history.
    pub fn finish(self) -> (Model, TrainHistory) {
        (self.best.unwrap_or(self.model), self.history)
    }
}

/// Trains until the epoch budget or early stopping, returning the model
/// from the epoch with the lowest validation loss.
pub fn train(model: Model, train_set: &[Example], val_set: &[Example], config: &TrainConfig) -> Result<(Model, TrainHistory)> {
    check_data(&model, train_set, "training")?;
    check_data(&model, val_set, "validation")?;
    let mut trainer = Trainer::new(model, config.clone())?;
    while trainer.run_epoch(train_set, val_set)?.is_some() {}
    Ok(trainer.finish())
}
