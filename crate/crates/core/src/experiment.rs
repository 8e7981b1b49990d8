//! Multi-restart protocol: train several independently seeded networks,
//! score them on held-out data, group them by outcome and pick the best.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{phi_oracle, simulate, LogisticSystemParams};
use crate::embedding::{build_dataset, default_n_train, split, EmbeddedDataset};
use crate::error::{Error, Result};
use crate::mapper_coach::{train, MapperCoachNet, TrainingConfig};

/// Pearson correlation with sample moments. Zero-variance input gives 0.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Length(format!(
            "correlation needs two series of equal length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if constant(a) || constant(b) {
        return Ok(0.0);
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (da, db) = (x - mean_a, y - mean_b);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    // The (n - 1) factors of covariance and both deviations cancel.
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(if r.is_nan() { 0.0 } else { r.clamp(-1.0, 1.0) })
}

/// Squared Pearson correlation, in `[0, 1]`.
pub fn r_squared(a: &[f64], b: &[f64]) -> Result<f64> {
    let r = pearson(a, b)?;
    Ok(r * r)
}

/// Sign of the least-squares slope of `estimate` against `truth`.
pub fn slope_sign(truth: &[f64], estimate: &[f64]) -> Result<i8> {
    let r = pearson(truth, estimate)?;
    Ok(if r > 0.0 {
        1
    } else if r < 0.0 {
        -1
    } else {
        0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cluster {
    Failed,
    LocalMinimum,
    Converged,
}

/// Lower bounds on test-set prediction r² for each cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterThresholds {
    pub converged: f64,
    pub local_minimum: f64,
}

impl Default for ClusterThresholds {
    fn default() -> Self {
        Self {
            converged: 0.9,
            local_minimum: 0.1,
        }
    }
}

impl ClusterThresholds {
    pub fn classify(&self, r2_prediction: f64) -> Cluster {
        if r2_prediction >= self.converged {
            Cluster::Converged
        } else if r2_prediction >= self.local_minimum {
            Cluster::LocalMinimum
        } else {
            Cluster::Failed
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.local_minimum)
            || !(0.0..=1.0).contains(&self.converged)
            || self.local_minimum > self.converged
        {
            return Err(Error::Config(format!(
                "cluster thresholds must satisfy 0 <= local_minimum <= converged <= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() { Some(*v) } else { None }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(
                v.iter()
                    .map(|x| if x.is_finite() { Some(*x) } else { None }),
            )
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let raw = Vec::<Option<f64>>::deserialize(d)?;
            Ok(raw.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub restart_index: usize,
    pub seed: u64,
    #[serde(with = "nan_as_null::vec")]
    pub learning_curve: Vec<f64>,
    #[serde(with = "nan_as_null")]
    pub final_train_loss: f64,
    pub r2_prediction: f64,
    pub r2_reconstruction: f64,
    pub reconstruction_slope_sign: i8,
    pub cluster: Cluster,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCounts {
    pub failed: usize,
    pub local_minimum: usize,
    pub converged: usize,
}

impl ClusterCounts {
    pub fn tally(records: &[RunRecord]) -> Self {
        let mut c = Self::default();
        for r in records {
            match r.cluster {
                Cluster::Failed => c.failed += 1,
                Cluster::LocalMinimum => c.local_minimum += 1,
                Cluster::Converged => c.converged += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.failed + self.local_minimum + self.converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub records: Vec<RunRecord>,
    /// Index into `records` of the run with the highest prediction r².
    pub best_run: Option<usize>,
    pub cluster_counts: ClusterCounts,
    /// Correlation of prediction and reconstruction r² over non-failed runs;
    /// absent with fewer than two such runs.
    pub pred_rec_correlation: Option<f64>,
    /// r² of the analytic inverse against the hidden truth on the test set.
    pub oracle_ceiling: Option<f64>,
    pub thresholds: ClusterThresholds,
}

impl EvaluationReport {
    pub fn assemble(
        records: Vec<RunRecord>,
        thresholds: ClusterThresholds,
        oracle_ceiling: Option<f64>,
    ) -> Self {
        let records = classify_runs(records, &thresholds);
        Self {
            best_run: best_run(&records),
            cluster_counts: ClusterCounts::tally(&records),
            pred_rec_correlation: pred_vs_rec_correlation(&records).ok(),
            oracle_ceiling,
            thresholds,
            records,
        }
    }

    pub fn best(&self) -> Option<&RunRecord> {
        self.best_run.map(|i| &self.records[i])
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Labels every record from its prediction r².
pub fn classify_runs(
    mut records: Vec<RunRecord>,
    thresholds: &ClusterThresholds,
) -> Vec<RunRecord> {
    for r in &mut records {
        r.cluster = thresholds.classify(r.r2_prediction);
    }
    records
}

/// Highest prediction r²; ties go to the lowest restart index.
pub fn best_run(records: &[RunRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &records[b];
                let better = r.r2_prediction > cur.r2_prediction
                    || (r.r2_prediction == cur.r2_prediction
                        && r.restart_index < cur.restart_index);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

pub fn pred_vs_rec_correlation(records: &[RunRecord]) -> Result<f64> {
    let (pred, rec): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.cluster != Cluster::Failed)
        .map(|r| (r.r2_prediction, r.r2_reconstruction))
        .unzip();
    if pred.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 non-failed runs, have {}",
            pred.len()
        )));
    }
    pearson(&pred, &rec)
}

/// r² between the analytic inverse applied to every delay row and the
/// recorded hidden values: the best any learned mapper could score.
pub fn oracle_ceiling(ds: &EmbeddedDataset, params: &LogisticSystemParams) -> Result<f64> {
    let z_hat = ds
        .y_embed
        .iter()
        .map(|[y_t, y_prev]| phi_oracle(*y_t, *y_prev, params))
        .collect::<Result<Vec<_>>>()?;
    r_squared(&z_hat, &ds.z_truth)
}

/// SplitMix64 finalizer over `(master, index)`. Adding restarts never
/// changes the seeds of earlier ones.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Size and split of the simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_points: usize,
    pub burn_in: usize,
    /// Defaults to `n_points / 2 - 1`, which leaves `n_points / 2` test samples.
    pub n_train: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_points: 20_000,
            burn_in: crate::dynamics::DEFAULT_BURN_IN,
            n_train: None,
        }
    }
}

impl DatasetConfig {
    pub fn effective_n_train(&self) -> usize {
        self.n_train
            .unwrap_or_else(|| default_n_train(self.n_points))
    }
}

/// Everything a restart batch produced, including the trained networks.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvaluationReport,
    pub nets: Vec<MapperCoachNet>,
    pub train_set: EmbeddedDataset,
    pub test_set: EmbeddedDataset,
}

impl ExperimentOutcome {
    pub fn best_net(&self) -> Option<&MapperCoachNet> {
        self.report.best_run.map(|i| &self.nets[i])
    }
}

/// Settings shared by every restart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartSettings {
    pub training: TrainingConfig,
    pub n_restarts: usize,
    pub master_seed: u64,
    pub thresholds: ClusterThresholds,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
}

/// Trains `n_restarts` networks on `train_set` and scores each on `test_set`.
///
/// Restart `i` uses `seed_i = derive_seed(master_seed, i)`; its network is
/// initialized from `derive_seed(seed_i, 0)` and its batches shuffled from
/// `derive_seed(seed_i, 1)`. Results do not depend on `jobs`.
pub fn run_restarts_on(
    train_set: EmbeddedDataset,
    test_set: EmbeddedDataset,
    params: Option<&LogisticSystemParams>,
    settings: &RestartSettings,
) -> Result<ExperimentOutcome> {
    if settings.n_restarts == 0 {
        return Err(Error::Config("n_restarts must be at least 1".into()));
    }
    if settings.jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    if test_set.len() < 2 {
        return Err(Error::Config(format!(
            "test set needs at least 2 samples, has {}",
            test_set.len()
        )));
    }
    settings.thresholds.validate()?;
    settings.training.validate(train_set.len())?;

    let run_one = |i: usize| -> Result<(RunRecord, MapperCoachNet)> {
        let seed = derive_seed(settings.master_seed, i as u64);
        let net = MapperCoachNet::init(&settings.training.architecture, derive_seed(seed, 0))?;
        let cfg = TrainingConfig {
            seed: derive_seed(seed, 1),
            ..settings.training
        };
        let trained = train(net, &train_set, &cfg)?;
        let record = score_run(
            i,
            seed,
            &trained.net,
            trained.learning_curve,
            &train_set,
            &test_set,
        )?;
        Ok((record, trained.net))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", settings.jobs)))?;
    let results: Vec<Result<(RunRecord, MapperCoachNet)>> = pool.install(|| {
        (0..settings.n_restarts)
            .into_par_iter()
            .map(run_one)
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut nets = Vec::with_capacity(results.len());
    for res in results {
        let (record, net) = res?;
        records.push(record);
        nets.push(net);
    }

    let oracle = params.and_then(|p| oracle_ceiling(&test_set, p).ok());
    Ok(ExperimentOutcome {
        report: EvaluationReport::assemble(records, settings.thresholds, oracle),
        nets,
        train_set,
        test_set,
    })
}

fn score_run(
    restart_index: usize,
    seed: u64,
    net: &MapperCoachNet,
    learning_curve: Vec<f64>,
    train_set: &EmbeddedDataset,
    test_set: &EmbeddedDataset,
) -> Result<RunRecord> {
    let pred = net.predict_batch(&test_set.y_embed, &test_set.x_prev)?;
    let z_hat = net.reconstruct(&test_set.y_embed)?;
    let final_train_loss = net.evaluate_loss(train_set)?;
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());

    let (r2_prediction, r2_reconstruction, reconstruction_slope_sign) =
        if finite(&pred) && finite(&z_hat) && final_train_loss.is_finite() {
            (
                r_squared(&pred, &test_set.x_target)?,
                r_squared(&z_hat, &test_set.z_truth)?,
                slope_sign(&test_set.z_truth, &z_hat)?,
            )
        } else {
            (0.0, 0.0, 0)
        };

    Ok(RunRecord {
        restart_index,
        seed,
        learning_curve,
        final_train_loss,
        r2_prediction,
        r2_reconstruction,
        reconstruction_slope_sign,
        cluster: Cluster::Failed,
    })
}

/// Simulates the system, builds and splits the dataset, then runs
/// [`run_restarts_on`]. The trajectory is seeded with `master_seed`.
pub fn run_restarts_detailed(
    params: &LogisticSystemParams,
    data: &DatasetConfig,
    settings: &RestartSettings,
) -> Result<ExperimentOutcome> {
    let traj = simulate(params, data.n_points, data.burn_in, settings.master_seed)?;
    let ds = build_dataset(&traj)?;
    let (train_set, test_set) = split(&ds, data.effective_n_train())?;
    run_restarts_on(train_set, test_set, Some(params), settings)
}

pub fn run_restarts(
    params: &LogisticSystemParams,
    data: &DatasetConfig,
    training: &TrainingConfig,
    n_restarts: usize,
    master_seed: u64,
) -> Result<EvaluationReport> {
    let settings = RestartSettings {
        training: *training,
        n_restarts,
        master_seed,
        thresholds: ClusterThresholds::default(),
        jobs: 1,
    };
    Ok(run_restarts_detailed(params, data, &settings)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper_coach::Architecture;
    use proptest::prelude::*;

    #[test]
    fn r_squared_basic_cases() {
        let a = [0.1, 0.5, 0.2, 0.9];
        assert!((r_squared(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|v| -2.0 * v + 3.0).collect();
        assert!((r_squared(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(
            r_squared(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn r_squared_matches_textbook_formula() {
        // Independent route: sample covariance over sample deviations.
        let a = [0.3, 0.7, 0.1, 0.8, 0.4, 0.95];
        let b = [0.2, 0.9, 0.3, 0.6, 0.5, 0.7];
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (n - 1.0);
        let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let expected = (cov / (sa * sb)).powi(2);
        assert!((r_squared(&a, &b).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn r_squared_degenerate_inputs() {
        assert_eq!(
            r_squared(
                &[0.5; 10],
                &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
            )
            .unwrap(),
            0.0
        );
        assert!(matches!(r_squared(&[1.0], &[1.0]), Err(Error::Length(_))));
        assert!(matches!(
            r_squared(&[1.0, 2.0], &[1.0]),
            Err(Error::Length(_))
        ));
    }

    proptest! {
        #[test]
        fn r_squared_properties(
            a in prop::collection::vec(-10.0f64..10.0, 3..40),
            seed in any::<u64>(),
            alpha in prop_oneof![-50.0f64..-0.05, 0.05f64..50.0],
            beta in -50.0f64..50.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate()
                .map(|(i, v)| (v * 1.7 + (derive_seed(seed, i as u64) % 1000) as f64 / 100.0).sin())
                .collect();
            let rab = r_squared(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&rab));
            prop_assert_eq!(rab, r_squared(&b, &a).unwrap());
            let spread = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - a.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            let affine: Vec<f64> = a.iter().map(|v| alpha * v + beta).collect();
            prop_assert!((r_squared(&a, &affine).unwrap() - 1.0).abs() < 1e-9);
            let b_affine: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
            prop_assert!((r_squared(&a, &b_affine).unwrap() - rab).abs() < 1e-9);
        }
    }

    fn record(i: usize, pred: f64, rec: f64) -> RunRecord {
        RunRecord {
            restart_index: i,
            seed: i as u64,
            learning_curve: vec![],
            final_train_loss: 0.0,
            r2_prediction: pred,
            r2_reconstruction: rec,
            reconstruction_slope_sign: 1,
            cluster: Cluster::Failed,
        }
    }

    #[test]
    fn classification_thresholds() {
        let t = ClusterThresholds::default();
        assert_eq!(t.classify(0.99), Cluster::Converged);
        assert_eq!(t.classify(0.9), Cluster::Converged);
        assert_eq!(t.classify(0.5), Cluster::LocalMinimum);
        assert_eq!(t.classify(0.1), Cluster::LocalMinimum);
        assert_eq!(t.classify(0.05), Cluster::Failed);
        let labeled = classify_runs(vec![record(0, 0.99, 0.9), record(1, 0.05, 0.0)], &t);
        assert_eq!(labeled[0].cluster, Cluster::Converged);
        assert_eq!(labeled[1].cluster, Cluster::Failed);
    }

    #[test]
    fn best_run_breaks_ties_by_index() {
        let recs = vec![
            record(0, 0.5, 0.0),
            record(1, 0.8, 0.0),
            record(2, 0.8, 0.0),
        ];
        assert_eq!(best_run(&recs), Some(1));
        assert_eq!(best_run(&[]), None);
    }

    #[test]
    fn correlation_over_estimable_runs() {
        let t = ClusterThresholds::default();
        let line = classify_runs(
            vec![
                record(0, 0.3, 0.2),
                record(1, 0.6, 0.5),
                record(2, 0.95, 0.85),
                record(3, 0.0, 0.9),
            ],
            &t,
        );
        assert!((pred_vs_rec_correlation(&line).unwrap() - 1.0).abs() < 1e-12);

        let flat = classify_runs(vec![record(0, 0.5, 0.3), record(1, 0.95, 0.3)], &t);
        assert_eq!(pred_vs_rec_correlation(&flat).unwrap(), 0.0);

        let lonely = classify_runs(vec![record(0, 0.95, 0.9), record(1, 0.01, 0.0)], &t);
        assert!(matches!(
            pred_vs_rec_correlation(&lonely),
            Err(Error::InsufficientData(_))
        ));
    }

    fn weak() -> LogisticSystemParams {
        LogisticSystemParams {
            r: 3.99,
            beta_xz: 0.01,
            beta_yz: 0.01,
        }
    }

    #[test]
    fn oracle_ceiling_is_exact() {
        let traj = simulate(&weak(), 2_000, 200, 4).unwrap();
        let ds = build_dataset(&traj).unwrap();
        assert!((oracle_ceiling(&ds, &weak()).unwrap() - 1.0).abs() < 1e-12);

        let mut shuffled = ds.clone();
        shuffled.z_truth.reverse();
        assert!(oracle_ceiling(&shuffled, &weak()).unwrap() < 0.1);

        let single = ds.slice(0..1);
        assert!(matches!(
            oracle_ceiling(&single, &weak()),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn seed_derivation_is_stable() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        let seeds: std::collections::HashSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    fn small_settings(n_restarts: usize, jobs: usize) -> RestartSettings {
        RestartSettings {
            training: TrainingConfig {
                batch_size: 50,
                epochs: 3,
                architecture: Architecture { width: 6, depth: 2 },
                ..TrainingConfig::default()
            },
            n_restarts,
            master_seed: 99,
            thresholds: ClusterThresholds::default(),
            jobs,
        }
    }

    fn small_data() -> DatasetConfig {
        DatasetConfig {
            n_points: 400,
            burn_in: 100,
            n_train: None,
        }
    }

    #[test]
    fn single_restart_is_best() {
        let out = run_restarts_detailed(&weak(), &small_data(), &small_settings(1, 1)).unwrap();
        assert_eq!(out.report.records.len(), 1);
        assert_eq!(out.report.best_run, Some(0));
        assert_eq!(out.report.records[0].learning_curve.len(), 3);
        assert_eq!(out.report.cluster_counts.total(), 1);
        assert!((out.report.oracle_ceiling.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!((out.train_set.len(), out.test_set.len()), (199, 200));
    }

    #[test]
    fn reports_are_reproducible_and_parallel_safe() {
        let seq = run_restarts_detailed(&weak(), &small_data(), &small_settings(4, 1)).unwrap();
        let again = run_restarts_detailed(&weak(), &small_data(), &small_settings(4, 1)).unwrap();
        let par = run_restarts_detailed(&weak(), &small_data(), &small_settings(4, 3)).unwrap();
        assert_eq!(
            seq.report.to_json().unwrap(),
            again.report.to_json().unwrap()
        );
        assert_eq!(seq.report.to_json().unwrap(), par.report.to_json().unwrap());
        assert_eq!(seq.nets, par.nets);
    }

    #[test]
    fn adding_restarts_keeps_earlier_runs() {
        let three = run_restarts_detailed(&weak(), &small_data(), &small_settings(3, 1)).unwrap();
        let two = run_restarts_detailed(&weak(), &small_data(), &small_settings(2, 1)).unwrap();
        assert_eq!(three.report.records[..2], two.report.records[..]);
    }

    #[test]
    fn invalid_settings_rejected() {
        let mut s = small_settings(0, 1);
        assert!(matches!(
            run_restarts_detailed(&weak(), &small_data(), &s),
            Err(Error::Config(_))
        ));
        s.n_restarts = 1;
        s.training.epochs = 0;
        assert!(matches!(
            run_restarts_detailed(&weak(), &small_data(), &s),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn default_coupling_diverges() {
        let err = run_restarts(
            &LogisticSystemParams::default(),
            &DatasetConfig::default(),
            &TrainingConfig::default(),
            1,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn report_json_round_trip_keeps_nan_curves() {
        let mut r = record(0, 0.5, 0.4);
        r.learning_curve = vec![0.2, f64::NAN];
        r.final_train_loss = f64::NAN;
        let report = EvaluationReport::assemble(vec![r], ClusterThresholds::default(), None);
        let text = report.to_json().unwrap();
        let back = EvaluationReport::from_json(&text).unwrap();
        assert!(back.records[0].learning_curve[1].is_nan());
        assert!(back.records[0].final_train_loss.is_nan());
        assert_eq!(back.to_json().unwrap(), text);
    }
}
