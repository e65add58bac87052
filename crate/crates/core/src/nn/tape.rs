//! Layer-granular reverse-mode tape.
//!
//! Each node holds its forward value and the operation that produced it.
//! [`Tape::backward`] walks the nodes in reverse, accumulating gradients into
//! node slots and into the [`ParamStore`] gradient buffers.

use super::ops::{self, BnCache, ConvGeometry};
use super::params::{ParamId, ParamStore};
use super::tensor::{FeatureMap, Matrix, Tensor3, Value};
use super::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub(crate) enum BnSaved<T> {
    Train(Vec<BnCache<T>>),
    Eval { mean: Vec<T>, var: Vec<T> },
}

pub(crate) enum Op<T> {
    Input,
    Conv { x: NodeId, w: ParamId, g: ConvGeometry },
    ComplexConv { x: NodeId, wr: ParamId, wi: ParamId, g: ConvGeometry },
    BatchNorm { x: NodeId, gamma: ParamId, beta: ParamId, eps: f64, saved: BnSaved<T> },
    Relu { x: NodeId },
    Add { a: NodeId, b: NodeId },
    MaxPool { x: NodeId, arg: Vec<Vec<u32>> },
    AvgPool { x: NodeId },
    Linear { x: NodeId, w: ParamId, b: ParamId },
}

struct Node<T> {
    value: Value<T>,
    op: Op<T>,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Value<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), grads: Vec::new() }
    }

    pub(crate) fn push(&mut self, value: Value<T>, op: Op<T>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Value<T>) -> NodeId {
        self.push(value, Op::Input)
    }

    pub fn value(&self, id: NodeId) -> &Value<T> {
        &self.nodes[id.0].value
    }

    pub fn map(&self, id: NodeId) -> &FeatureMap<T> {
        self.nodes[id.0].value.as_map()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gradient reaching `id` in the last backward pass.
    pub fn grad(&self, id: NodeId) -> Option<&Value<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let planes = self.map(x).planes.iter().map(ops::relu_forward).collect();
        self.push(Value::Map(FeatureMap { planes }), Op::Relu { x })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ma, mb) = (self.map(a), self.map(b));
        if ma.shape() != mb.shape() || ma.planes.len() != mb.planes.len() {
            return Err(Error::dim(format!("residual add {:?} + {:?}", ma.shape(), mb.shape())));
        }
        let planes = ma.planes.iter().zip(&mb.planes).map(|(p, q)| ops::add_forward(p, q)).collect();
        Ok(self.push(Value::Map(FeatureMap { planes }), Op::Add { a, b }))
    }

    pub fn max_pool(&mut self, x: NodeId, size: usize, stride: usize, pad: usize) -> NodeId {
        let (planes, arg) = self.map(x).planes.iter().map(|p| ops::maxpool_forward(p, size, stride, pad)).unzip();
        self.push(Value::Map(FeatureMap { planes }), Op::MaxPool { x, arg })
    }

    pub fn global_avg_pool(&mut self, x: NodeId) -> NodeId {
        let m = ops::global_avg_pool(&self.map(x).planes);
        self.push(Value::Matrix(m), Op::AvgPool { x })
    }

    /// Reverse sweep from `out`, seeded with `seed` (same shape as the
    /// output). Parameter gradients are added to `store`.
    pub fn backward(&mut self, store: &mut ParamStore<T>, out: NodeId, seed: Value<T>) {
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[out.0] = Some(seed);
        for i in (0..=out.0).rev() {
            let Some(g) = self.grads[i].take() else { continue };
            let node = &self.nodes[i];
            let contributions = backprop_node(&self.nodes, node, &g, store);
            self.grads[i] = Some(g);
            for (target, grad) in contributions {
                match &mut self.grads[target.0] {
                    Some(existing) => existing.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            }
        }
    }
}

fn backprop_node<T: Scalar>(
    nodes: &[Node<T>],
    node: &Node<T>,
    g: &Value<T>,
    store: &mut ParamStore<T>,
) -> Vec<(NodeId, Value<T>)> {
    let input_map = |x: NodeId| nodes[x.0].value.as_map();
    match &node.op {
        Op::Input => vec![],
        Op::Conv { x, w, g: geom } => {
            let xm = input_map(*x);
            let gy = g.as_map();
            let (dx, dw) = ops::conv_backward(&xm.planes[0], store.value(*w), &gy.planes[0], geom);
            store.accumulate_grad(*w, &dw);
            vec![(*x, Value::Map(FeatureMap::real(dx)))]
        }
        Op::ComplexConv { x, wr, wi, g: geom } => {
            let xm = input_map(*x);
            let gy = g.as_map();
            let r = ops::complex_conv_backward(
                &xm.planes[0],
                &xm.planes[1],
                store.value(*wr),
                store.value(*wi),
                &gy.planes[0],
                &gy.planes[1],
                geom,
            );
            store.accumulate_grad(*wr, &r.dwr);
            store.accumulate_grad(*wi, &r.dwi);
            vec![(*x, Value::Map(FeatureMap::complex(r.dxr, r.dxi)))]
        }
        Op::BatchNorm { x, gamma, beta, eps, saved } => {
            let xm = input_map(*x);
            let gy = g.as_map();
            let c = xm.shape()[0];
            let gamma_v = store.value(*gamma).to_vec();
            let mut dgamma = Vec::with_capacity(gamma_v.len());
            let mut dbeta = Vec::with_capacity(gamma_v.len());
            let mut planes = Vec::with_capacity(xm.planes.len());
            for (p, dy) in gy.planes.iter().enumerate() {
                let gp = &gamma_v[p * c..][..c];
                let (dx, dg, db) = match saved {
                    BnSaved::Train(caches) => ops::bn_train_backward(&caches[p], gp, dy),
                    BnSaved::Eval { mean, var } => {
                        ops::bn_eval_backward(&xm.planes[p], gp, &mean[p * c..][..c], &var[p * c..][..c], *eps, dy)
                    }
                };
                planes.push(dx);
                dgamma.extend(dg);
                dbeta.extend(db);
            }
            store.accumulate_grad(*gamma, &dgamma);
            store.accumulate_grad(*beta, &dbeta);
            vec![(*x, Value::Map(FeatureMap { planes }))]
        }
        Op::Relu { x } => {
            let y = node.value.as_map();
            let planes = y.planes.iter().zip(&g.as_map().planes).map(|(yp, gp)| ops::relu_backward(yp, gp)).collect();
            vec![(*x, Value::Map(FeatureMap { planes }))]
        }
        Op::Add { a, b } => vec![(*a, g.clone()), (*b, g.clone())],
        Op::MaxPool { x, arg } => {
            let xm = input_map(*x);
            let planes =
                g.as_map().planes.iter().zip(arg).map(|(gp, a)| ops::maxpool_backward(xm.shape(), a, gp)).collect();
            vec![(*x, Value::Map(FeatureMap { planes }))]
        }
        Op::AvgPool { x } => {
            let xm = input_map(*x);
            let planes = ops::global_avg_pool_backward(xm.shape(), xm.planes.len(), g.as_matrix());
            vec![(*x, Value::Map(FeatureMap { planes }))]
        }
        Op::Linear { x, w, b } => {
            let xv = nodes[x.0].value.as_matrix();
            let (dx, dw, db) = ops::linear_backward(xv, store.value(*w), g.as_matrix());
            store.accumulate_grad(*w, &dw);
            store.accumulate_grad(*b, &db);
            vec![(*x, Value::Matrix(dx))]
        }
    }
}

// Forward recorders used by the layer types.
impl<T: Scalar> Tape<T> {
    pub(crate) fn record_conv(&mut self, x: NodeId, w: ParamId, g: ConvGeometry, y: Tensor3<T>) -> NodeId {
        self.push(Value::Map(FeatureMap::real(y)), Op::Conv { x, w, g })
    }

    pub(crate) fn record_complex_conv(
        &mut self,
        x: NodeId,
        wr: ParamId,
        wi: ParamId,
        g: ConvGeometry,
        y: (Tensor3<T>, Tensor3<T>),
    ) -> NodeId {
        self.push(Value::Map(FeatureMap::complex(y.0, y.1)), Op::ComplexConv { x, wr, wi, g })
    }

    pub(crate) fn record_bn(
        &mut self,
        x: NodeId,
        gamma: ParamId,
        beta: ParamId,
        eps: f64,
        saved: BnSaved<T>,
        y: FeatureMap<T>,
    ) -> NodeId {
        self.push(Value::Map(y), Op::BatchNorm { x, gamma, beta, eps, saved })
    }

    pub(crate) fn record_linear(&mut self, x: NodeId, w: ParamId, b: ParamId, y: Matrix<T>) -> NodeId {
        self.push(Value::Matrix(y), Op::Linear { x, w, b })
    }
}
