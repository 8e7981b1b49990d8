//! The mapper-coach network.
//!
//! The mapper reads the delay vector `Y_t = [y_t, y_{t-1}]` and emits one
//! scalar, the bottleneck. The coach reads `[bottleneck, x_{t-1}]` and
//! predicts `x_t`. Both halves are trained jointly on the prediction error;
//! the coach gets no other view of `Y_t`, so whatever it needs to know about
//! the hidden driver has to pass through the bottleneck. After training the
//! coach is dropped and [`MapperCoachNet::reconstruct`] runs the mapper alone.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddedDataset;
use crate::error::{Error, Result};
use crate::neuralnet::{
    init_network_with_rng, mse_grad, mse_loss, Activation, AdamConfig, AdamState, Mlp, MlpDocument,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Hidden layout shared by mapper and coach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub width: usize,
    pub depth: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            width: 20,
            depth: 2,
        }
    }
}

impl Architecture {
    /// `[2, width × depth, 1]` with tanh hidden layers and a linear output.
    pub fn subnetwork_shape(&self) -> (Vec<usize>, Vec<Activation>) {
        let mut dims = vec![2];
        dims.extend(std::iter::repeat_n(self.width, self.depth));
        dims.push(1);
        let mut acts = vec![Activation::Tanh; self.depth];
        acts.push(Activation::Linear);
        (dims, acts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.depth == 0 {
            return Err(Error::Config(format!(
                "hidden width and depth must be positive, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(flatten)]
    pub adam: AdamConfig,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    #[serde(flatten)]
    pub architecture: Architecture,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 2000,
            epochs: 4000,
            adam: AdamConfig::default(),
            seed: 0,
            architecture: Architecture::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, n_train: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.batch_size > n_train {
            return Err(Error::Config(format!(
                "batch_size {} exceeds the {n_train} training samples",
                self.batch_size
            )));
        }
        self.adam.validate()?;
        self.architecture.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapperCoachNet {
    mapper: Mlp,
    coach: Mlp,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    mapper: MlpDocument,
    coach: MlpDocument,
}

impl MapperCoachNet {
    /// Checks that the mapper ends in a single unit and the coach takes
    /// exactly `[bottleneck, x_prev]`.
    pub fn new(mapper: Mlp, coach: Mlp) -> Result<Self> {
        if mapper.in_dim() != 2 {
            return Err(Error::Shape(format!(
                "mapper must read the 2-value delay vector, reads {}",
                mapper.in_dim()
            )));
        }
        if mapper.out_dim() != 1 {
            return Err(Error::Shape(format!(
                "bottleneck must be scalar, mapper emits {}",
                mapper.out_dim()
            )));
        }
        if coach.in_dim() != 2 || coach.out_dim() != 1 {
            return Err(Error::Shape(format!(
                "coach must map [bottleneck, x_prev] to one value, is {} -> {}",
                coach.in_dim(),
                coach.out_dim()
            )));
        }
        Ok(Self { mapper, coach })
    }

    /// Fresh Glorot-initialized network; mapper then coach from one RNG stream.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let (dims, acts) = arch.subnetwork_shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mapper = init_network_with_rng(&dims, &acts, &mut rng)?;
        let coach = init_network_with_rng(&dims, &acts, &mut rng)?;
        Self::new(mapper, coach)
    }

    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let (dims, acts) = arch.subnetwork_shape();
        Self::new(Mlp::zeros(&dims, &acts)?, Mlp::zeros(&dims, &acts)?)
    }

    pub fn mapper(&self) -> &Mlp {
        &self.mapper
    }

    pub fn coach(&self) -> &Mlp {
        &self.coach
    }

    pub fn coach_mut(&mut self) -> &mut Mlp {
        &mut self.coach
    }

    pub fn mapper_mut(&mut self) -> &mut Mlp {
        &mut self.mapper
    }

    pub fn n_params(&self) -> usize {
        self.mapper.n_params() + self.coach.n_params()
    }

    /// Mapper parameters followed by coach parameters.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = self.mapper.params_flat();
        p.extend(self.coach.params_flat());
        p
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let (m, c) = params.split_at(self.mapper.n_params());
        self.mapper.set_params_flat(m)?;
        self.coach.set_params_flat(c)
    }

    pub fn predict(&self, y_embed_row: [f64; 2], x_prev: f64) -> Result<f64> {
        Ok(self.predict_batch(&[y_embed_row], &[x_prev])?[0])
    }

    pub fn predict_batch(&self, y_rows: &[[f64; 2]], x_prev: &[f64]) -> Result<Vec<f64>> {
        check_batch(y_rows, x_prev)?;
        let z_hat = self.reconstruct(y_rows)?;
        let coach_in = interleave(&z_hat, x_prev);
        self.coach.predict_batch(&coach_in, y_rows.len())
    }

    /// Mapper output for every row: the estimate of `z_{t-1}`. The coach is
    /// not evaluated.
    pub fn reconstruct(&self, y_rows: &[[f64; 2]]) -> Result<Vec<f64>> {
        self.mapper
            .predict_batch(y_rows.as_flattened(), y_rows.len())
    }

    /// Batch MSE and its gradient over [`Self::params_flat`]. The coach's
    /// input gradient for the bottleneck column is fed back into the mapper.
    pub fn loss_and_gradient(
        &self,
        y_rows: &[[f64; 2]],
        x_prev: &[f64],
        x_target: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        check_batch(y_rows, x_prev)?;
        let batch = y_rows.len();
        let mapper_cache = self.mapper.forward_batch(y_rows.as_flattened(), batch)?;
        let coach_in = interleave(mapper_cache.output(), x_prev);
        let coach_cache = self.coach.forward_batch(&coach_in, batch)?;

        let pred = coach_cache.output();
        let loss = mse_loss(pred, x_target)?;
        let coach_grads = self
            .coach
            .backward(&coach_cache, &mse_grad(pred, x_target)?)?;
        let bottleneck_grad: Vec<f64> = coach_grads.input.iter().step_by(2).copied().collect();
        let mapper_grads = self.mapper.backward(&mapper_cache, &bottleneck_grad)?;

        let mut grads = mapper_grads.params;
        grads.extend(coach_grads.params);
        Ok((loss, grads))
    }

    pub fn evaluate_loss(&self, ds: &EmbeddedDataset) -> Result<f64> {
        let pred = self.predict_batch(&ds.y_embed, &ds.x_prev)?;
        mse_loss(&pred, &ds.x_target)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            mapper: (&self.mapper).into(),
            coach: (&self.coach).into(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Self::new(doc.mapper.try_into()?, doc.coach.try_into()?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_batch(y_rows: &[[f64; 2]], x_prev: &[f64]) -> Result<()> {
    if y_rows.len() != x_prev.len() {
        return Err(Error::Shape(format!(
            "{} delay rows but {} x_prev values",
            y_rows.len(),
            x_prev.len()
        )));
    }
    if y_rows.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(())
}

fn interleave(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).flat_map(|(&u, &v)| [u, v]).collect()
}

/// Outcome of [`train`].
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: MapperCoachNet,
    /// Mean training loss of each epoch, weighted by batch size.
    pub learning_curve: Vec<f64>,
}

/// Mini-batch ADAM on the prediction MSE, mapper and coach together.
///
/// Each epoch draws a fresh permutation of the training indices from an RNG
/// seeded with `cfg.seed` and walks it in contiguous batches of
/// `cfg.batch_size` (the last one may be shorter). Once the loss turns
/// non-finite training stops and the remaining curve entries are NaN.
pub fn train(
    net: MapperCoachNet,
    train_set: &EmbeddedDataset,
    cfg: &TrainingConfig,
) -> Result<TrainedModel> {
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    cfg.validate(train_set.len())?;

    let mut net = net;
    let mut params = net.params_flat();
    let mut adam = AdamState::new(params.len(), cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    let mut y_batch = Vec::with_capacity(cfg.batch_size);
    let mut x_batch = Vec::with_capacity(cfg.batch_size);
    let mut t_batch = Vec::with_capacity(cfg.batch_size);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            y_batch.clear();
            x_batch.clear();
            t_batch.clear();
            for &i in chunk {
                y_batch.push(train_set.y_embed[i]);
                x_batch.push(train_set.x_prev[i]);
                t_batch.push(train_set.x_target[i]);
            }
            let (loss, grads) = net.loss_and_gradient(&y_batch, &x_batch, &t_batch)?;
            total += loss * chunk.len() as f64;
            adam.step(&mut params, &grads)?;
            net.set_params_flat(&params)?;
        }
        let epoch_loss = total / train_set.len() as f64;
        curve.push(epoch_loss);
        if !epoch_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            curve.resize(cfg.epochs, f64::NAN);
            break;
        }
    }

    Ok(TrainedModel {
        net,
        learning_curve: curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{max_relative_error, numeric_gradient, LayerParams};
    use rand::Rng;

    fn small_arch() -> Architecture {
        Architecture { width: 5, depth: 2 }
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 2]>, Vec<f64>, Vec<f64>) {
        let y = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
        let x = (0..n).map(|_| rng.gen()).collect();
        let t = (0..n).map(|_| rng.gen()).collect();
        (y, x, t)
    }

    #[test]
    fn zero_net_predicts_zero() {
        let net = MapperCoachNet::zeros(&Architecture::default()).unwrap();
        assert_eq!(net.predict([0.3, 0.9], 0.5).unwrap(), 0.0);
        assert_eq!(
            net.reconstruct(&[[0.1, 0.2], [0.7, 0.4]]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn coach_blind_to_bottleneck_ignores_delay_vector() {
        let mut net = MapperCoachNet::init(&small_arch(), 3).unwrap();
        let first = &mut net.coach_mut().layers_mut()[0];
        let in_dim = first.in_dim();
        for row in first.weights_mut().chunks_mut(in_dim) {
            row[0] = 0.0;
        }
        let a = net.predict([0.1, 0.9], 0.4).unwrap();
        let b = net.predict([0.8, 0.2], 0.4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, net.predict([0.8, 0.2], 0.6).unwrap());
    }

    #[test]
    fn composed_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..10 {
            let net = MapperCoachNet::init(&Architecture::default(), rng.gen()).unwrap();
            let (y, x, t) = random_batch(&mut rng, 3);
            let (_, analytic) = net.loss_and_gradient(&y, &x, &t).unwrap();
            let mut probe = net.clone();
            let numeric = numeric_gradient(&net.params_flat(), 1e-6, |p| {
                probe.set_params_flat(p).unwrap();
                mse_loss(&probe.predict_batch(&y, &x).unwrap(), &t).unwrap()
            });
            let err = max_relative_error(&analytic, &numeric);
            assert!(err < 1e-5, "trial {trial}: {err}");
        }
    }

    #[test]
    fn reconstruct_ignores_coach() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = MapperCoachNet::init(&small_arch(), 8).unwrap();
        let rows: Vec<[f64; 2]> = (0..50).map(|_| [rng.gen(), rng.gen()]).collect();
        let before = net.reconstruct(&rows).unwrap();
        for layer in net.coach_mut().layers_mut() {
            for w in layer.weights_mut() {
                *w += 0.37;
            }
        }
        assert_eq!(before, net.reconstruct(&rows).unwrap());
    }

    #[test]
    fn bottleneck_must_be_scalar() {
        let acts = [Activation::Tanh, Activation::Linear];
        let wide = Mlp::zeros(&[2, 4, 2], &acts).unwrap();
        let coach = Mlp::zeros(&[2, 4, 1], &acts).unwrap();
        assert!(matches!(
            MapperCoachNet::new(wide, coach),
            Err(Error::Shape(_))
        ));
        let mapper = Mlp::zeros(&[2, 4, 1], &acts).unwrap();
        let skip = Mlp::zeros(&[4, 4, 1], &acts).unwrap();
        assert!(matches!(
            MapperCoachNet::new(mapper, skip),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let net = MapperCoachNet::init(&Architecture::default(), 12).unwrap();
        let text = net.to_json().unwrap();
        let back = MapperCoachNet::from_json(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn load_rejects_wide_bottleneck() {
        let acts = [Activation::Tanh, Activation::Linear];
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            mapper: (&Mlp::zeros(&[2, 3, 2], &acts).unwrap()).into(),
            coach: (&Mlp::zeros(&[2, 3, 1], &acts).unwrap()).into(),
        };
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(
            MapperCoachNet::from_json(&text),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn load_rejects_garbage_and_versions() {
        assert!(matches!(
            MapperCoachNet::from_json("{"),
            Err(Error::Format(_))
        ));
        let net = MapperCoachNet::zeros(&small_arch()).unwrap();
        let text = net
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(
            MapperCoachNet::from_json(&text),
            Err(Error::Format(_))
        ));
    }

    fn constant_target_set(n: usize, c: f64, seed: u64) -> EmbeddedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EmbeddedDataset::from_columns(
            (0..n).map(|_| [rng.gen(), rng.gen()]).collect(),
            (0..n).map(|_| rng.gen()).collect(),
            vec![c; n],
            vec![0.0; n],
        )
        .unwrap()
    }

    #[test]
    fn epochs_zero_rejected_one_accepted() {
        let ds = constant_target_set(8, 0.5, 1);
        let net = MapperCoachNet::init(&small_arch(), 1).unwrap();
        let mut cfg = TrainingConfig {
            batch_size: 4,
            epochs: 0,
            architecture: small_arch(),
            ..TrainingConfig::default()
        };
        assert!(matches!(
            train(net.clone(), &ds, &cfg),
            Err(Error::Config(_))
        ));
        cfg.epochs = 1;
        assert_eq!(
            train(net.clone(), &ds, &cfg).unwrap().learning_curve.len(),
            1
        );
        cfg.batch_size = 9;
        assert!(matches!(train(net, &ds, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn fits_constant_target() {
        let c = 0.42;
        let ds = constant_target_set(64, c, 2);
        let cfg = TrainingConfig {
            batch_size: 16,
            epochs: 400,
            adam: AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
            seed: 5,
            architecture: small_arch(),
        };
        let net = MapperCoachNet::init(&small_arch(), 4).unwrap();
        let trained = train(net, &ds, &cfg).unwrap();
        let curve = &trained.learning_curve;
        assert_eq!(curve.len(), 400);
        assert!(curve[399] < 1e-4 && curve[399] < curve[0], "{}", curve[399]);
        for p in trained.net.predict_batch(&ds.y_embed, &ds.x_prev).unwrap() {
            assert!((p - c).abs() < 0.02);
        }
    }

    #[test]
    fn training_is_reproducible() {
        let ds = constant_target_set(40, 0.3, 3);
        let cfg = TrainingConfig {
            batch_size: 7,
            epochs: 20,
            seed: 11,
            architecture: small_arch(),
            ..TrainingConfig::default()
        };
        let a = train(MapperCoachNet::init(&small_arch(), 6).unwrap(), &ds, &cfg).unwrap();
        let b = train(MapperCoachNet::init(&small_arch(), 6).unwrap(), &ds, &cfg).unwrap();
        assert_eq!(a.net, b.net);
        let bits = |c: &[f64]| c.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.learning_curve), bits(&b.learning_curve));
    }

    #[test]
    fn new_validates_mapper_input() {
        let mapper = Mlp::new(vec![LayerParams::zeros(3, 1, Activation::Linear).unwrap()]).unwrap();
        let coach = Mlp::new(vec![LayerParams::zeros(2, 1, Activation::Linear).unwrap()]).unwrap();
        assert!(matches!(
            MapperCoachNet::new(mapper, coach),
            Err(Error::Shape(_))
        ));
    }
}
