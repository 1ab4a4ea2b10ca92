//! Network graphs: definition, validation, shape inference, initialization,
//! and the forward/backward executor.
//!
//! A network is a flat list of nodes; each node names its inputs as either
//! the network input or an *earlier* node, so every definition is a DAG by
//! construction and index order is already a topological order. The last
//! node is the network output. Shapes exclude the batch axis and are fully
//! inferred when a definition is compiled into a runnable [`Network`].

use super::layer::{self, conv_out_side, conv_transpose_out_side, ConvGeom, LayerDef};
use super::tensor::Tensor;
use super::NnError;
use crate::rng::{derive_key, KeyedRng};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Where a node reads one of its inputs from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortRef {
    /// The network's input tensor.
    Input,
    /// The output of an earlier node (by index).
    Node(usize),
}

/// One layer application inside a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub layer: LayerDef,
    pub inputs: Vec<PortRef>,
}

/// Serializable network description: input shape (no batch axis) plus the
/// node list. The final node is the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDef {
    pub input_shape: Vec<usize>,
    pub nodes: Vec<Node>,
}

impl NetworkDef {
    /// Checks graph wiring and returns per-node output shapes.
    pub fn infer_shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        if self.nodes.is_empty() {
            return Err(NnError::BadGraph("network has no nodes".into()));
        }
        if self.input_shape.is_empty() || self.input_shape.iter().any(|&d| d == 0) {
            return Err(NnError::BadGraph(format!(
                "bad input shape {:?}",
                self.input_shape
            )));
        }
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            if !node.layer.arity().accepts(node.inputs.len()) {
                return Err(NnError::BadGraph(format!(
                    "node {idx} ({}) takes {:?} inputs, got {}",
                    node.layer.tag(),
                    node.layer.arity(),
                    node.inputs.len()
                )));
            }
            let mut in_shapes: Vec<&[usize]> = Vec::with_capacity(node.inputs.len());
            for port in &node.inputs {
                match *port {
                    PortRef::Input => in_shapes.push(&self.input_shape),
                    PortRef::Node(j) => {
                        if j >= idx {
                            return Err(NnError::BadGraph(format!(
                                "node {idx} reads node {j}, which is not earlier"
                            )));
                        }
                        in_shapes.push(&shapes[j]);
                    }
                }
            }
            shapes.push(infer_node_shape(idx, &node.layer, &in_shapes)?);
        }
        Ok(shapes)
    }

    /// Output shape of the whole network (batch axis excluded).
    pub fn output_shape(&self) -> Result<Vec<usize>, NnError> {
        Ok(self.infer_shapes()?.pop().expect("non-empty checked"))
    }
}

fn infer_node_shape(
    idx: usize,
    layer: &LayerDef,
    inputs: &[&[usize]],
) -> Result<Vec<usize>, NnError> {
    let bad = |msg: String| NnError::BadGraph(format!("node {idx} ({}): {msg}", layer.tag()));
    match *layer {
        LayerDef::Dense { in_features, out_features } => {
            if inputs[0] != [in_features] {
                return Err(bad(format!(
                    "wants a flat [{in_features}] input, got {:?}",
                    inputs[0]
                )));
            }
            Ok(vec![out_features])
        }
        LayerDef::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
            let [c, h, w] = three_d(inputs[0]).ok_or_else(|| {
                bad(format!("wants a [C, H, W] input, got {:?}", inputs[0]))
            })?;
            if c != in_channels {
                return Err(bad(format!("expects {in_channels} channels, got {c}")));
            }
            let oh = conv_out_side(h, kernel, stride, padding)
                .ok_or_else(|| bad(format!("kernel {kernel} does not fit height {h}")))?;
            let ow = conv_out_side(w, kernel, stride, padding)
                .ok_or_else(|| bad(format!("kernel {kernel} does not fit width {w}")))?;
            Ok(vec![out_channels, oh, ow])
        }
        LayerDef::ConvTranspose2d { in_channels, out_channels, kernel, stride, padding } => {
            let [c, h, w] = three_d(inputs[0]).ok_or_else(|| {
                bad(format!("wants a [C, H, W] input, got {:?}", inputs[0]))
            })?;
            if c != in_channels {
                return Err(bad(format!("expects {in_channels} channels, got {c}")));
            }
            let oh = conv_transpose_out_side(h, kernel, stride, padding)
                .ok_or_else(|| bad(format!("degenerate output for input height {h}")))?;
            let ow = conv_transpose_out_side(w, kernel, stride, padding)
                .ok_or_else(|| bad(format!("degenerate output for input width {w}")))?;
            Ok(vec![out_channels, oh, ow])
        }
        LayerDef::LeakyRelu { negative_slope } => {
            if !negative_slope.is_finite() {
                return Err(bad("negative_slope must be finite".into()));
            }
            Ok(inputs[0].to_vec())
        }
        LayerDef::Sigmoid => Ok(inputs[0].to_vec()),
        LayerDef::Flatten => Ok(vec![inputs[0].iter().product()]),
        LayerDef::Unflatten { channels, height, width } => {
            let want = channels * height * width;
            if inputs[0] != [want] {
                return Err(bad(format!(
                    "wants a flat [{want}] input for [{channels}, {height}, {width}], got {:?}",
                    inputs[0]
                )));
            }
            Ok(vec![channels, height, width])
        }
        LayerDef::Concat => {
            let [c0, h, w] = three_d(inputs[0])
                .ok_or_else(|| bad(format!("wants [C, H, W] inputs, got {:?}", inputs[0])))?;
            let mut channels = c0;
            for s in &inputs[1..] {
                let [ci, hi, wi] = three_d(s)
                    .ok_or_else(|| bad(format!("wants [C, H, W] inputs, got {s:?}")))?;
                if (hi, wi) != (h, w) {
                    return Err(bad(format!(
                        "spatial mismatch: [{c0}, {h}, {w}] vs {s:?}"
                    )));
                }
                channels += ci;
            }
            Ok(vec![channels, h, w])
        }
        LayerDef::Add => {
            for s in &inputs[1..] {
                if *s != inputs[0] {
                    return Err(bad(format!(
                        "shape mismatch: {:?} vs {s:?}",
                        inputs[0]
                    )));
                }
            }
            Ok(inputs[0].to_vec())
        }
        LayerDef::WeightedGlobalAvgPool => {
            let [c, _, _] = three_d(inputs[0])
                .ok_or_else(|| bad(format!("wants a [C, H, W] input, got {:?}", inputs[0])))?;
            Ok(vec![c])
        }
    }
}

fn three_d(shape: &[usize]) -> Option<[usize; 3]> {
    match shape {
        [c, h, w] => Some([*c, *h, *w]),
        _ => None,
    }
}

/// Incremental builder for the common chain-with-branches graph shape.
#[derive(Clone, Debug)]
pub struct NetBuilder {
    input_shape: Vec<usize>,
    nodes: Vec<Node>,
}

impl NetBuilder {
    pub fn new(input_shape: &[usize]) -> Self {
        Self {
            input_shape: input_shape.to_vec(),
            nodes: Vec::new(),
        }
    }

    /// Adds a node with explicit inputs; returns a reference to it.
    pub fn push(&mut self, layer: LayerDef, inputs: &[PortRef]) -> PortRef {
        self.nodes.push(Node {
            layer,
            inputs: inputs.to_vec(),
        });
        PortRef::Node(self.nodes.len() - 1)
    }

    /// Adds a node fed by the most recent node (or the input when empty).
    pub fn chain(&mut self, layer: LayerDef) -> PortRef {
        let from = if self.nodes.is_empty() {
            PortRef::Input
        } else {
            PortRef::Node(self.nodes.len() - 1)
        };
        self.push(layer, &[from])
    }

    /// Reference to the most recently added node (or the input when empty).
    pub fn head(&self) -> PortRef {
        if self.nodes.is_empty() {
            PortRef::Input
        } else {
            PortRef::Node(self.nodes.len() - 1)
        }
    }

    pub fn finish(self) -> NetworkDef {
        NetworkDef {
            input_shape: self.input_shape,
            nodes: self.nodes,
        }
    }
}

/// Trainable parameters of one node. Paramless layers hold empty buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeParams<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Parameter gradients, aligned with [`Network::params`].
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub nodes: Vec<NodeParams<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zero(&mut self) {
        for n in &mut self.nodes {
            n.weight.fill(T::zero());
            n.bias.fill(T::zero());
        }
    }

    /// Flat views over every gradient buffer, weight before bias, node order.
    pub fn slices(&self) -> Vec<&[T]> {
        param_slices(&self.nodes)
    }
}

fn param_slices<T>(nodes: &[NodeParams<T>]) -> Vec<&[T]> {
    let mut out = Vec::new();
    for n in nodes {
        if !n.weight.is_empty() {
            out.push(n.weight.as_slice());
        }
        if !n.bias.is_empty() {
            out.push(n.bias.as_slice());
        }
    }
    out
}

/// A compiled, runnable network: definition + inferred shapes + parameters.
#[derive(Clone, Debug)]
pub struct Network<T> {
    def: NetworkDef,
    shapes: Vec<Vec<usize>>,
    params: Vec<NodeParams<T>>,
}

/// Retained activations from a forward pass, consumed by [`Network::backward`].
#[derive(Debug)]
pub struct ForwardTrace<T> {
    input: Tensor<T>,
    acts: Vec<Tensor<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.acts.last().expect("networks are non-empty")
    }

    pub fn batch(&self) -> usize {
        self.input.batch()
    }
}

impl<T: Scalar> Network<T> {
    /// Compiles a definition with zero-valued parameters (loaded later or
    /// initialized via [`Network::init`]).
    pub fn compile(def: NetworkDef) -> Result<Self, NnError> {
        let shapes = def.infer_shapes()?;
        let params = def
            .nodes
            .iter()
            .enumerate()
            .map(|(idx, node)| {
                let in_ch = input_channels_of(&def, &shapes, idx);
                let (w, b) = node.layer.param_lens(in_ch);
                NodeParams {
                    weight: vec![T::zero(); w],
                    bias: vec![T::zero(); b],
                }
            })
            .collect();
        Ok(Self { def, shapes, params })
    }

    /// Compiles and fills parameters with the standard scheme: weights feeding
    /// a LeakyRelu get the fan-in uniform init matched to its slope, all other
    /// weights get the symmetric fan-sum uniform init, biases start at zero,
    /// and pooling scales start at one. Deterministic in `seed`, and each
    /// node draws from its own keyed stream so editing one layer leaves the
    /// rest of the initialization untouched.
    pub fn init(def: NetworkDef, seed: u64) -> Result<Self, NnError> {
        let mut net = Self::compile(def)?;
        for idx in 0..net.def.nodes.len() {
            let layer = net.def.nodes[idx].layer.clone();
            if !layer.has_params() {
                continue;
            }
            let mut rng = KeyedRng::new(derive_key(seed, &[idx as u64]));
            let (fan_in, fan_out) = match layer {
                LayerDef::Dense { in_features, out_features } => (in_features, out_features),
                LayerDef::Conv2d { in_channels, out_channels, kernel, .. }
                | LayerDef::ConvTranspose2d { in_channels, out_channels, kernel, .. } => {
                    (in_channels * kernel * kernel, out_channels * kernel * kernel)
                }
                LayerDef::WeightedGlobalAvgPool => {
                    net.params[idx].weight.fill(T::one());
                    continue;
                }
                _ => unreachable!("has_params filtered"),
            };
            let bound = match consumer_slope(&net.def, idx) {
                Some(slope) => {
                    (2.0 / (1.0 + slope * slope)).sqrt() * (3.0 / fan_in as f64).sqrt()
                }
                None => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            for v in &mut net.params[idx].weight {
                *v = T::of(rng.uniform_in(-bound, bound));
            }
            // Biases stay zero.
        }
        Ok(net)
    }

    pub fn def(&self) -> &NetworkDef {
        &self.def
    }

    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().expect("non-empty")
    }

    pub fn params(&self) -> &[NodeParams<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [NodeParams<T>] {
        &mut self.params
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.params
            .iter()
            .map(|p| p.weight.len() + p.bias.len())
            .sum()
    }

    /// Flat views over every parameter buffer, weight before bias, node order.
    pub fn param_views(&self) -> Vec<&[T]> {
        param_slices(&self.params)
    }

    /// Mutable counterpart of [`Network::param_views`].
    pub fn param_views_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for n in &mut self.params {
            if !n.weight.is_empty() {
                out.push(n.weight.as_mut_slice());
            }
            if !n.bias.is_empty() {
                out.push(n.bias.as_mut_slice());
            }
        }
        out
    }

    /// Zeroed gradient buffers matching this network's parameters.
    pub fn zero_grads(&self) -> Gradients<T> {
        Gradients {
            nodes: self
                .params
                .iter()
                .map(|p| NodeParams {
                    weight: vec![T::zero(); p.weight.len()],
                    bias: vec![T::zero(); p.bias.len()],
                })
                .collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(), NnError> {
        let shape = input.shape();
        if shape.len() != self.def.input_shape.len() + 1
            || shape[1..] != self.def.input_shape[..]
            || shape[0] == 0
        {
            return Err(NnError::BadShape(format!(
                "network input wants [N, {:?}], got {:?}",
                self.def.input_shape, shape
            )));
        }
        Ok(())
    }

    /// Runs the network, retaining every node activation for backward.
    pub fn forward_trace(&self, input: Tensor<T>) -> Result<ForwardTrace<T>, NnError> {
        self.check_input(&input)?;
        let n = input.batch();
        let mut acts: Vec<Tensor<T>> = Vec::with_capacity(self.def.nodes.len());
        for (idx, node) in self.def.nodes.iter().enumerate() {
            let out = {
                let resolve = |p: &PortRef| -> &Tensor<T> {
                    match *p {
                        PortRef::Input => &input,
                        PortRef::Node(j) => &acts[j],
                    }
                };
                let ins: Vec<&Tensor<T>> = node.inputs.iter().map(resolve).collect();
                self.node_forward(idx, n, &ins)?
            };
            acts.push(out);
        }
        Ok(ForwardTrace { input, acts })
    }

    /// Runs the network and returns only the output tensor.
    pub fn forward(&self, input: Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut trace = self.forward_trace(input)?;
        Ok(trace.acts.pop().expect("non-empty"))
    }

    fn node_forward(
        &self,
        idx: usize,
        n: usize,
        ins: &[&Tensor<T>],
    ) -> Result<Tensor<T>, NnError> {
        let out_shape = &self.shapes[idx];
        let mut full_shape = Vec::with_capacity(out_shape.len() + 1);
        full_shape.push(n);
        full_shape.extend_from_slice(out_shape);
        let p = &self.params[idx];
        match self.def.nodes[idx].layer {
            LayerDef::Dense { in_features, out_features } => {
                let mut y = Tensor::zeros(full_shape);
                layer::dense_forward(
                    ins[0].data(),
                    &p.weight,
                    &p.bias,
                    n,
                    in_features,
                    out_features,
                    y.data_mut(),
                );
                Ok(y)
            }
            LayerDef::Conv2d { .. } => {
                let g = self.conv_geom(idx);
                let mut y = Tensor::zeros(full_shape);
                layer::conv2d_forward(ins[0].data(), &p.weight, &p.bias, n, &g, y.data_mut());
                Ok(y)
            }
            LayerDef::ConvTranspose2d { .. } => {
                let g = self.conv_geom(idx);
                let mut y = Tensor::zeros(full_shape);
                layer::conv_transpose2d_forward(
                    ins[0].data(),
                    &p.weight,
                    &p.bias,
                    n,
                    &g,
                    y.data_mut(),
                );
                Ok(y)
            }
            LayerDef::LeakyRelu { negative_slope } => {
                let mut y = Tensor::zeros(full_shape);
                layer::leaky_relu_forward(ins[0].data(), T::of(negative_slope), y.data_mut());
                Ok(y)
            }
            LayerDef::Sigmoid => {
                let mut y = Tensor::zeros(full_shape);
                layer::sigmoid_forward(ins[0].data(), y.data_mut());
                Ok(y)
            }
            LayerDef::Flatten | LayerDef::Unflatten { .. } => {
                ins[0].clone().reshape(full_shape)
            }
            LayerDef::Concat => {
                let mut y = Tensor::zeros(full_shape);
                let spans: Vec<usize> = ins.iter().map(|t| t.sample_len()).collect();
                let total: usize = spans.iter().sum();
                let out = y.data_mut();
                for i in 0..n {
                    let mut off = i * total;
                    for (t, &span) in ins.iter().zip(&spans) {
                        out[off..off + span].copy_from_slice(t.sample(i));
                        off += span;
                    }
                }
                Ok(y)
            }
            LayerDef::Add => {
                let mut y = ins[0].clone();
                for t in &ins[1..] {
                    for (a, &b) in y.data_mut().iter_mut().zip(t.data()) {
                        *a += b;
                    }
                }
                Ok(y)
            }
            LayerDef::WeightedGlobalAvgPool => {
                let [c, h, w] = three_d(&self.shapes_of_input(idx)).expect("checked 3-d");
                let mut y = Tensor::zeros(full_shape);
                layer::wgap_forward(ins[0].data(), &p.weight, n, c, h * w, y.data_mut());
                Ok(y)
            }
        }
    }

    /// Shape of a node's first input (batch axis excluded).
    fn shapes_of_input(&self, idx: usize) -> Vec<usize> {
        match self.def.nodes[idx].inputs[0] {
            PortRef::Input => self.def.input_shape.clone(),
            PortRef::Node(j) => self.shapes[j].clone(),
        }
    }

    fn conv_geom(&self, idx: usize) -> ConvGeom {
        let input = self.shapes_of_input(idx);
        let [in_c, in_h, in_w] = three_d(&input).expect("conv input checked 3-d");
        let [out_c, out_h, out_w] = three_d(&self.shapes[idx]).expect("conv output 3-d");
        let (kernel, stride, padding) = match self.def.nodes[idx].layer {
            LayerDef::Conv2d { kernel, stride, padding, .. }
            | LayerDef::ConvTranspose2d { kernel, stride, padding, .. } => {
                (kernel, stride, padding)
            }
            _ => unreachable!("conv_geom on non-conv node"),
        };
        ConvGeom {
            in_c,
            out_c,
            kernel,
            stride,
            padding,
            in_h,
            in_w,
            out_h,
            out_w,
        }
    }

    /// Backpropagates `d_output` through the trace, accumulating parameter
    /// gradients into `grads` and returning the gradient at the network
    /// input. Nodes feeding several consumers receive the sum of their
    /// consumers' gradients.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        d_output: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Tensor<T>, NnError> {
        let n = trace.batch();
        let last = self.def.nodes.len() - 1;
        if d_output.shape() != trace.acts[last].shape() {
            return Err(NnError::BadShape(format!(
                "output gradient shape {:?} does not match output {:?}",
                d_output.shape(),
                trace.acts[last].shape()
            )));
        }

        let mut d_acts: Vec<Option<Tensor<T>>> = vec![None; self.def.nodes.len()];
        let mut d_input: Option<Tensor<T>> = None;
        d_acts[last] = Some(d_output.clone());

        for idx in (0..self.def.nodes.len()).rev() {
            let dy = match d_acts[idx].take() {
                Some(t) => t,
                None => continue, // node feeds nothing reachable from the output
            };
            let node = &self.def.nodes[idx];
            let ins: Vec<&Tensor<T>> = node
                .inputs
                .iter()
                .map(|p| match *p {
                    PortRef::Input => &trace.input,
                    PortRef::Node(j) => &trace.acts[j],
                })
                .collect();
            let d_ins = self.node_backward(idx, n, &ins, &trace.acts[idx], &dy, grads)?;
            debug_assert_eq!(d_ins.len(), node.inputs.len());
            for (port, d) in node.inputs.iter().zip(d_ins) {
                let slot = match *port {
                    PortRef::Input => &mut d_input,
                    PortRef::Node(j) => &mut d_acts[j],
                };
                match slot {
                    Some(acc) => {
                        for (a, &b) in acc.data_mut().iter_mut().zip(d.data()) {
                            *a += b;
                        }
                    }
                    None => *slot = Some(d),
                }
            }
        }

        d_input.ok_or_else(|| {
            NnError::BadGraph("no gradient reached the network input".into())
        })
    }

    fn node_backward(
        &self,
        idx: usize,
        n: usize,
        ins: &[&Tensor<T>],
        out: &Tensor<T>,
        dy: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Vec<Tensor<T>>, NnError> {
        let p = &self.params[idx];
        let g = &mut grads.nodes[idx];
        match self.def.nodes[idx].layer {
            LayerDef::Dense { in_features, out_features } => {
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::dense_backward(
                    ins[0].data(),
                    &p.weight,
                    dy.data(),
                    n,
                    in_features,
                    out_features,
                    dx.data_mut(),
                    &mut g.weight,
                    &mut g.bias,
                );
                Ok(vec![dx])
            }
            LayerDef::Conv2d { .. } => {
                let geom = self.conv_geom(idx);
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::conv2d_backward(
                    ins[0].data(),
                    &p.weight,
                    dy.data(),
                    n,
                    &geom,
                    dx.data_mut(),
                    &mut g.weight,
                    &mut g.bias,
                );
                Ok(vec![dx])
            }
            LayerDef::ConvTranspose2d { .. } => {
                let geom = self.conv_geom(idx);
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::conv_transpose2d_backward(
                    ins[0].data(),
                    &p.weight,
                    dy.data(),
                    n,
                    &geom,
                    dx.data_mut(),
                    &mut g.weight,
                    &mut g.bias,
                );
                Ok(vec![dx])
            }
            LayerDef::LeakyRelu { negative_slope } => {
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::leaky_relu_backward(
                    ins[0].data(),
                    T::of(negative_slope),
                    dy.data(),
                    dx.data_mut(),
                );
                Ok(vec![dx])
            }
            LayerDef::Sigmoid => {
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::sigmoid_backward(out.data(), dy.data(), dx.data_mut());
                Ok(vec![dx])
            }
            LayerDef::Flatten | LayerDef::Unflatten { .. } => {
                Ok(vec![dy.clone().reshape(ins[0].shape().to_vec())?])
            }
            LayerDef::Concat => {
                let spans: Vec<usize> = ins.iter().map(|t| t.sample_len()).collect();
                let total: usize = spans.iter().sum();
                let mut outs: Vec<Tensor<T>> = ins
                    .iter()
                    .map(|t| Tensor::zeros(t.shape().to_vec()))
                    .collect();
                for i in 0..n {
                    let mut off = i * total;
                    for (t, &span) in outs.iter_mut().zip(&spans) {
                        t.sample_mut(i).copy_from_slice(&dy.data()[off..off + span]);
                        off += span;
                    }
                }
                Ok(outs)
            }
            LayerDef::Add => Ok(ins.iter().map(|_| dy.clone()).collect()),
            LayerDef::WeightedGlobalAvgPool => {
                let [c, h, w] = three_d(&self.shapes_of_input(idx)).expect("checked 3-d");
                let mut dx = Tensor::zeros(ins[0].shape().to_vec());
                layer::wgap_backward(
                    ins[0].data(),
                    &p.weight,
                    dy.data(),
                    n,
                    c,
                    h * w,
                    dx.data_mut(),
                    &mut g.weight,
                );
                Ok(vec![dx])
            }
        }
    }
}

/// Channel count a node's first input carries (0 when not 3-d).
pub(super) fn input_channels_of(def: &NetworkDef, shapes: &[Vec<usize>], idx: usize) -> usize {
    let shape = match def.nodes[idx].inputs.first() {
        Some(PortRef::Input) => &def.input_shape,
        Some(PortRef::Node(j)) => &shapes[*j],
        None => return 0,
    };
    three_d(shape).map(|[c, _, _]| c).unwrap_or(0)
}

/// Negative slope of the LeakyRelu that consumes node `idx`'s output, if the
/// first consumer is one; used to pick the initialization scheme.
fn consumer_slope(def: &NetworkDef, idx: usize) -> Option<f64> {
    for node in &def.nodes[idx + 1..] {
        if node.inputs.contains(&PortRef::Node(idx)) {
            return match node.layer {
                LayerDef::LeakyRelu { negative_slope } => Some(negative_slope),
                _ => None,
            };
        }
    }
    None
}
