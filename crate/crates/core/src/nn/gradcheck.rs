//! Central finite-difference checks of every layer's reverse pass.
//!
//! Each trial draws a random shape, random inputs and parameters, and a
//! random projection `R`; the checked scalar is `sum(R * op(x))` for layers
//! and the loss itself for the losses. Errors are reported per parameter
//! group as `max|analytic - numeric| / max(|analytic|, |numeric|)` over the
//! group, so a group whose gradient is tiny everywhere does not divide by
//! near-zero entries.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::layers::{BatchNorm, Conv, Linear};
use super::loss::{binary_cross_entropy, cross_entropy};
use super::ops::ConvGeometry;
use super::params::ParamStore;
use super::tape::{Mode, NodeId, Tape};
use super::tensor::{FeatureMap, Matrix, Tensor3, Value};
use super::Scalar;
use crate::error::Result;
use crate::rng::{rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn tolerance(self) -> f64 {
        match self {
            Precision::Single => 1e-3,
            Precision::Double => 1e-6,
        }
    }

    fn step(self) -> f64 {
        match self {
            Precision::Single => 1e-2,
            Precision::Double => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckedOp {
    ComplexConv1d,
    RealConv1d2ch,
    SplitRelu,
    SplitBatchNorm,
    SplitBatchNormEval,
    MaxPool,
    ResidualAdd,
    GlobalAvgPool,
    Linear,
    CrossEntropy,
    BinaryCrossEntropy,
}

impl CheckedOp {
    pub const ALL: [CheckedOp; 11] = [
        CheckedOp::ComplexConv1d,
        CheckedOp::RealConv1d2ch,
        CheckedOp::SplitRelu,
        CheckedOp::SplitBatchNorm,
        CheckedOp::SplitBatchNormEval,
        CheckedOp::MaxPool,
        CheckedOp::ResidualAdd,
        CheckedOp::GlobalAvgPool,
        CheckedOp::Linear,
        CheckedOp::CrossEntropy,
        CheckedOp::BinaryCrossEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckedOp::ComplexConv1d => "complex_conv1d",
            CheckedOp::RealConv1d2ch => "real_conv1d_2ch",
            CheckedOp::SplitRelu => "split_relu",
            CheckedOp::SplitBatchNorm => "split_batchnorm_train",
            CheckedOp::SplitBatchNormEval => "split_batchnorm_eval",
            CheckedOp::MaxPool => "split_maxpool",
            CheckedOp::ResidualAdd => "residual_add",
            CheckedOp::GlobalAvgPool => "global_avg_pool",
            CheckedOp::Linear => "linear",
            CheckedOp::CrossEntropy => "cross_entropy",
            CheckedOp::BinaryCrossEntropy => "binary_cross_entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub group: String,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub op: String,
    pub precision: Precision,
    pub trials: usize,
    pub groups: Vec<GroupError>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

type Forward<T> = Box<dyn Fn(&mut Tape<T>, &mut ParamStore<T>, NodeId) -> Result<NodeId>>;

enum Objective<T> {
    Projection(Value<T>),
    CrossEntropy(Vec<usize>),
    BinaryCrossEntropy(Vec<u8>),
}

/// One randomized instance: parameters, an input and a scalar objective.
pub struct Case<T: Scalar> {
    pub store: ParamStore<T>,
    pub input: Value<T>,
    forward: Forward<T>,
    objective: Option<Objective<T>>,
}

impl<T: Scalar> Case<T> {
    pub fn new(
        store: ParamStore<T>,
        input: Value<T>,
        forward: impl Fn(&mut Tape<T>, &mut ParamStore<T>, NodeId) -> Result<NodeId> + 'static,
    ) -> Self {
        Case { store, input, forward: Box::new(forward), objective: None }
    }

    fn run(&mut self, input: &Value<T>) -> Result<(Tape<T>, NodeId, NodeId)> {
        let mut tape = Tape::new();
        let x = tape.input(input.clone());
        let y = (self.forward)(&mut tape, &mut self.store, x)?;
        Ok((tape, x, y))
    }

    fn evaluate(&mut self, input: &Value<T>) -> Result<(f64, Value<T>)> {
        let (tape, _, y) = self.run(input)?;
        let out = tape.value(y);
        Ok(match self.objective.as_ref().expect("objective set before evaluation") {
            Objective::Projection(r) => {
                let f = out
                    .data_slices()
                    .iter()
                    .zip(r.data_slices())
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.f64() * y.f64()))
                    .sum();
                (f, r.clone())
            }
            Objective::CrossEntropy(labels) => {
                let (l, g) = cross_entropy(out.as_matrix(), labels)?;
                (l, Value::Matrix(g))
            }
            Objective::BinaryCrossEntropy(t) => {
                let (l, g) = binary_cross_entropy(out.as_matrix(), t)?;
                (l, Value::Matrix(g))
            }
        })
    }

    /// Per-group maximum relative error; at most `max_per_group` coordinates
    /// of each group are probed.
    pub fn check(&mut self, step: f64, max_per_group: usize, rng: &mut Rng) -> Result<Vec<GroupError>> {
        if self.objective.is_none() {
            let (tape, _, y) = self.run(&self.input.clone())?;
            let mut r = tape.value(y).zeros_like();
            for s in r.data_slices_mut() {
                for v in s.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = T::of(z);
                }
            }
            self.objective = Some(Objective::Projection(r));
        }
        let input = self.input.clone();
        self.store.zero_grad();
        let (mut tape, x, y) = self.run(&input)?;
        let (_, seed) = self.evaluate(&input)?;
        tape.backward(&mut self.store, y, seed);
        let input_grad = tape.grad(x).cloned().unwrap_or_else(|| input.zeros_like());
        let mut groups = Vec::new();

        // input coordinates
        let analytic: Vec<f64> = input_grad.data_slices().iter().flat_map(|s| s.iter().map(|v| v.f64())).collect();
        let mut idx: Vec<usize> = (0..analytic.len()).collect();
        idx.shuffle(rng);
        idx.truncate(max_per_group);
        let mut numeric = Vec::with_capacity(idx.len());
        for &i in &idx {
            let mut plus = input.clone();
            let mut minus = input.clone();
            nudge(&mut plus, i, step);
            nudge(&mut minus, i, -step);
            let (fp, _) = self.evaluate(&plus)?;
            let (fm, _) = self.evaluate(&minus)?;
            numeric.push((i, (fp - fm) / (2.0 * step)));
        }
        groups.push(GroupError { group: "input".into(), max_rel_error: group_error(&analytic, &numeric) });

        // parameter groups
        let trainable: Vec<usize> =
            (0..self.store.len()).filter(|&p| self.store.iter().nth(p).unwrap().trainable).collect();
        for p in trainable {
            let id = super::ParamId(p);
            let analytic: Vec<f64> = self.store.get(id).grad.iter().map(|v| v.f64()).collect();
            let mut idx: Vec<usize> = (0..analytic.len()).collect();
            idx.shuffle(rng);
            idx.truncate(max_per_group);
            let mut numeric = Vec::with_capacity(idx.len());
            for &i in &idx {
                let orig = self.store.get(id).value[i];
                self.store.get_mut(id).value[i] = T::of(orig.f64() + step);
                let (fp, _) = self.evaluate(&input)?;
                self.store.get_mut(id).value[i] = T::of(orig.f64() - step);
                let (fm, _) = self.evaluate(&input)?;
                self.store.get_mut(id).value[i] = orig;
                numeric.push((i, (fp - fm) / (2.0 * step)));
            }
            groups.push(GroupError {
                group: self.store.get(id).name.clone(),
                max_rel_error: group_error(&analytic, &numeric),
            });
        }
        Ok(groups)
    }
}

fn nudge<T: Scalar>(v: &mut Value<T>, mut i: usize, delta: f64) {
    for s in v.data_slices_mut() {
        if i < s.len() {
            s[i] = T::of(s[i].f64() + delta);
            return;
        }
        i -= s.len();
    }
}

fn group_error(analytic: &[f64], numeric: &[(usize, f64)]) -> f64 {
    let scale = analytic.iter().map(|v| v.abs()).chain(numeric.iter().map(|(_, v)| v.abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    numeric.iter().map(|&(i, n)| (analytic[i] - n).abs()).fold(0.0, f64::max) / scale
}

fn normal_tensor<T: Scalar>(rng: &mut Rng, shape: [usize; 3]) -> Tensor3<T> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(z)
        })
        .collect();
    Tensor3::from_vec(shape, data).expect("shape")
}

/// Values bounded away from zero so no coordinate sits within a step of the
/// ReLU kink.
fn off_kink_tensor<T: Scalar>(rng: &mut Rng, shape: [usize; 3]) -> Tensor3<T> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = rng.random_range(0.1..1.0);
            T::of(if rng.random::<bool>() { mag } else { -mag })
        })
        .collect();
    Tensor3::from_vec(shape, data).expect("shape")
}

/// Distinct values spaced `0.05` apart in random order, so pooling winners
/// are stable under the finite-difference step.
fn distinct_tensor<T: Scalar>(rng: &mut Rng, shape: [usize; 3]) -> Tensor3<T> {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.05 - n as f64 * 0.025).collect();
    vals.shuffle(rng);
    Tensor3::from_vec(shape, vals.into_iter().map(T::of).collect()).expect("shape")
}

fn complex_map<T: Scalar>(rng: &mut Rng, shape: [usize; 3]) -> Value<T> {
    Value::Map(FeatureMap::complex(normal_tensor(rng, shape), normal_tensor(rng, shape)))
}

/// Builds one random instance of `op`.
pub fn random_case<T: Scalar>(op: CheckedOp, rng: &mut Rng) -> Case<T> {
    let batch = rng.random_range(2..=4);
    let channels = rng.random_range(1..=3);
    let len = rng.random_range(6..=16);
    let mut store = ParamStore::new();
    let shape = [channels, batch, len];
    match op {
        CheckedOp::ComplexConv1d | CheckedOp::RealConv1d2ch => {
            let taps = *[1usize, 3, 5].choose(rng).unwrap();
            let g = ConvGeometry {
                in_channels: channels,
                out_channels: rng.random_range(1..=3),
                taps,
                stride: rng.random_range(1..=2),
                pad: rng.random_range(0..=taps / 2),
            };
            if op == CheckedOp::ComplexConv1d {
                let conv = Conv::new(&mut store, "conv", g, true, rng);
                Case::new(store, complex_map(rng, shape), move |t, s, x| conv.forward(t, s, x))
            } else {
                let g = ConvGeometry { in_channels: 2 * g.in_channels, out_channels: 2 * g.out_channels, ..g };
                let conv = Conv::new(&mut store, "conv", g, false, rng);
                let x = Value::Map(FeatureMap::real(normal_tensor(rng, [2 * channels, batch, len])));
                Case::new(store, x, move |t, s, x| conv.forward(t, s, x))
            }
        }
        CheckedOp::SplitRelu => {
            let x = Value::Map(FeatureMap::complex(off_kink_tensor(rng, shape), off_kink_tensor(rng, shape)));
            Case::new(store, x, |t, _, x| Ok(t.relu(x)))
        }
        CheckedOp::SplitBatchNorm | CheckedOp::SplitBatchNormEval => {
            let bn = BatchNorm::new(&mut store, "bn", channels, 2);
            randomize(&mut store, rng);
            let mode = if op == CheckedOp::SplitBatchNorm { Mode::Train } else { Mode::Eval };
            Case::new(store, complex_map(rng, shape), move |t, s, x| bn.forward(t, s, x, mode))
        }
        CheckedOp::MaxPool => {
            let x = Value::Map(FeatureMap::complex(distinct_tensor(rng, shape), distinct_tensor(rng, shape)));
            Case::new(store, x, |t, _, x| Ok(t.max_pool(x, 3, 2, 1)))
        }
        CheckedOp::ResidualAdd => {
            // x + relu(x), so both branches carry gradient
            let x = Value::Map(FeatureMap::complex(off_kink_tensor(rng, shape), off_kink_tensor(rng, shape)));
            Case::new(store, x, |t, _, x| {
                let r = t.relu(x);
                t.add(x, r)
            })
        }
        CheckedOp::GlobalAvgPool => Case::new(store, complex_map(rng, shape), |t, _, x| Ok(t.global_avg_pool(x))),
        CheckedOp::Linear => {
            let (inp, out) = (rng.random_range(1..=8), rng.random_range(1..=5));
            let lin = Linear::new(&mut store, "fc", inp, out, rng);
            let x = Value::Matrix(matrix(rng, batch, inp, 1.0));
            Case::new(store, x, move |t, s, x| lin.forward(t, s, x))
        }
        CheckedOp::CrossEntropy => {
            let k = rng.random_range(2..=17);
            let labels = (0..batch).map(|_| rng.random_range(0..k)).collect();
            let mut case = Case::new(store, Value::Matrix(matrix(rng, batch, k, 2.0)), |_, _, x| Ok(x));
            case.objective = Some(Objective::CrossEntropy(labels));
            case
        }
        CheckedOp::BinaryCrossEntropy => {
            let k = rng.random_range(1..=17);
            let targets = (0..batch * k).map(|_| rng.random_range(0..=1u8)).collect();
            let mut case = Case::new(store, Value::Matrix(matrix(rng, batch, k, 2.0)), |_, _, x| Ok(x));
            case.objective = Some(Objective::BinaryCrossEntropy(targets));
            case
        }
    }
}

fn matrix<T: Scalar>(rng: &mut Rng, rows: usize, cols: usize, std: f64) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(std * z)
        })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("shape")
}

/// Moves every array away from its identity initialization so the check
/// exercises non-trivial scales, shifts and running statistics.
fn randomize<T: Scalar>(store: &mut ParamStore<T>, rng: &mut Rng) {
    for p in store.iter_mut() {
        let positive = p.name.ends_with("running_var");
        for v in p.value.iter_mut() {
            *v = T::of(if positive { rng.random_range(0.5..2.0) } else { rng.random_range(-1.5..1.5) });
        }
    }
}

/// Runs `trials` random instances of `op`.
pub fn grad_check_op(op: CheckedOp, precision: Precision, trials: usize, seed: u64) -> Result<GradCheckReport> {
    match precision {
        Precision::Single => run_trials::<f32>(op, precision, trials, seed),
        Precision::Double => run_trials::<f64>(op, precision, trials, seed),
    }
}

fn run_trials<T: Scalar>(op: CheckedOp, precision: Precision, trials: usize, seed: u64) -> Result<GradCheckReport> {
    let mut worst: Vec<GroupError> = Vec::new();
    for trial in 0..trials {
        let mut rng = rng_from(seed, &[op as u64, trial as u64]);
        let mut case = random_case::<T>(op, &mut rng);
        for g in case.check(precision.step(), 48, &mut rng)? {
            match worst.iter_mut().find(|w| w.group == g.group) {
                Some(w) => w.max_rel_error = w.max_rel_error.max(g.max_rel_error),
                None => worst.push(g),
            }
        }
    }
    let max_rel_error = worst.iter().map(|g| g.max_rel_error).fold(0.0, f64::max);
    let tolerance = precision.tolerance();
    Ok(GradCheckReport {
        op: op.name().into(),
        precision,
        trials,
        groups: worst,
        max_rel_error,
        tolerance,
        passed: max_rel_error <= tolerance,
    })
}

/// Every registered op at the given precision.
pub fn grad_check_all(precision: Precision, trials: usize, seed: u64) -> Result<Vec<GradCheckReport>> {
    CheckedOp::ALL.iter().map(|&op| grad_check_op(op, precision, trials, seed)).collect()
}
