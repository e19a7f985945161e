//! Static computation graphs for the fixed architectures.
//!
//! A [`GraphBuilder`] wires ops into a topologically ordered node list and
//! declares parameters in a fixed order (the order weights are serialized
//! in). Execution happens against a [`Workspace`] holding one value and one
//! gradient buffer per node, reused across iterations so the training loop
//! does not allocate. Backward accumulates into node gradients and parameter
//! gradients; callers zero those once per step and seed output-node
//! gradients with loss derivatives in between.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::ops;
use crate::nn::{init_weights, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone)]
pub enum Op {
    /// Copies the `slot`-th external input.
    Input { slot: usize },
    /// Same-padded stride-1 convolution, kernel size 1 or 3.
    Conv {
        input: NodeId,
        w: ParamId,
        b: ParamId,
        k: usize,
    },
    Relu { input: NodeId },
    AvgPool4 { input: NodeId },
    Dense {
        input: NodeId,
        w: ParamId,
        b: ParamId,
    },
    ConcatChannels { inputs: Vec<NodeId> },
    Add { a: NodeId, b: NodeId },
    /// Identity forward, zero backward.
    StopGradient { input: NodeId },
    /// Constant channel holding `sum(x) / (h * w)`.
    SpatialSumChannel { input: NodeId },
}

#[derive(Debug, Clone)]
pub struct ParamDef {
    pub name: String,
    pub shape: Vec<usize>,
    /// Fan-in for initialization; 0 means zero-init (biases).
    pub fan_in: usize,
}

#[derive(Debug, Clone)]
struct NodeDef {
    op: Op,
    shape: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<NodeDef>,
    params: Vec<ParamDef>,
    n_inputs: usize,
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<NodeDef>,
    params: Vec<ParamDef>,
    n_inputs: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>) -> NodeId {
        self.nodes.push(NodeDef { op, shape });
        NodeId(self.nodes.len() - 1)
    }

    fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    fn chw(&self, id: NodeId) -> Result<(usize, usize, usize)> {
        match *self.shape(id) {
            [c, h, w] => Ok((c, h, w)),
            ref s => Err(Error::Dimension(format!(
                "expected a [c, h, w] tensor, got shape {s:?}"
            ))),
        }
    }

    pub fn input(&mut self, shape: &[usize]) -> NodeId {
        let slot = self.n_inputs;
        self.n_inputs += 1;
        self.push(Op::Input { slot }, shape.to_vec())
    }

    fn declare_param(&mut self, name: &str, shape: Vec<usize>, fan_in: usize) -> ParamId {
        self.params.push(ParamDef {
            name: name.into(),
            shape,
            fan_in,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn conv(&mut self, input: NodeId, c_out: usize, k: usize, name: &str) -> Result<NodeId> {
        if k != 1 && k != 3 {
            return Err(Error::InvalidArgument(format!(
                "kernel size {k} unsupported (1 or 3)"
            )));
        }
        let (c_in, h, w) = self.chw(input)?;
        let wp = self.declare_param(
            &format!("{name}.weight"),
            vec![c_out, c_in, k, k],
            c_in * k * k,
        );
        let bp = self.declare_param(&format!("{name}.bias"), vec![c_out], 0);
        Ok(self.push(
            Op::Conv {
                input,
                w: wp,
                b: bp,
                k,
            },
            vec![c_out, h, w],
        ))
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let shape = self.shape(input).to_vec();
        self.push(Op::Relu { input }, shape)
    }

    pub fn avg_pool4(&mut self, input: NodeId) -> Result<NodeId> {
        let (c, h, w) = self.chw(input)?;
        if h % 4 != 0 || w % 4 != 0 {
            return Err(Error::Dimension(format!(
                "avg_pool4 needs dims divisible by 4, got {h}x{w}"
            )));
        }
        Ok(self.push(Op::AvgPool4 { input }, vec![c, h / 4, w / 4]))
    }

    pub fn dense(&mut self, input: NodeId, n_out: usize, name: &str) -> NodeId {
        let n_in: usize = self.shape(input).iter().product();
        let wp = self.declare_param(&format!("{name}.weight"), vec![n_out, n_in], n_in);
        let bp = self.declare_param(&format!("{name}.bias"), vec![n_out], 0);
        self.push(
            Op::Dense {
                input,
                w: wp,
                b: bp,
            },
            vec![n_out],
        )
    }

    pub fn concat_channels(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        let (mut c_total, h0, w0) = self.chw(inputs[0])?;
        for &id in &inputs[1..] {
            let (c, h, w) = self.chw(id)?;
            if h != h0 || w != w0 {
                return Err(Error::Dimension(format!(
                    "concat spatial mismatch: {h}x{w} vs {h0}x{w0}"
                )));
            }
            c_total += c;
        }
        Ok(self.push(
            Op::ConcatChannels {
                inputs: inputs.to_vec(),
            },
            vec![c_total, h0, w0],
        ))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Dimension(format!(
                "add shape mismatch: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let shape = self.shape(a).to_vec();
        Ok(self.push(Op::Add { a, b }, shape))
    }

    pub fn stop_gradient(&mut self, input: NodeId) -> NodeId {
        let shape = self.shape(input).to_vec();
        self.push(Op::StopGradient { input }, shape)
    }

    pub fn spatial_sum_channel(&mut self, input: NodeId) -> Result<NodeId> {
        let (_c, h, w) = self.chw(input)?;
        Ok(self.push(Op::SpatialSumChannel { input }, vec![1, h, w]))
    }

    pub fn finish(self) -> Graph {
        Graph {
            nodes: self.nodes,
            params: self.params,
            n_inputs: self.n_inputs,
        }
    }
}

/// Per-graph execution buffers: one value and one gradient plane per node
/// plus padding/flip scratch. Reusable across calls; never shrinks.
#[derive(Debug)]
pub struct Workspace {
    values: Vec<Vec<f32>>,
    grads: Vec<Vec<f32>>,
    pad: Vec<f32>,
    pad2: Vec<f32>,
    wflip: Vec<f32>,
}

impl Workspace {
    pub fn new(graph: &Graph) -> Self {
        let sizes: Vec<usize> = graph
            .nodes
            .iter()
            .map(|n| n.shape.iter().product())
            .collect();
        Self {
            values: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            grads: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            pad: Vec::new(),
            pad2: Vec::new(),
            wflip: Vec::new(),
        }
    }

    pub fn values(&self, id: NodeId) -> &[f32] {
        &self.values[id.0]
    }

    pub fn grad(&self, id: NodeId) -> &[f32] {
        &self.grads[id.0]
    }

    /// Seed loss gradients here between `forward` and `backward`.
    pub fn grad_mut(&mut self, id: NodeId) -> &mut [f32] {
        &mut self.grads[id.0]
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }
}

impl Graph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn param_defs(&self) -> &[ParamDef] {
        &self.params
    }

    /// Total number of scalar parameters.
    pub fn n_param_scalars(&self) -> usize {
        self.params
            .iter()
            .map(|p| p.shape.iter().product::<usize>())
            .sum()
    }

    pub fn node_shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    /// Fresh parameter tensors: fan-in-scaled uniform weights, zero biases.
    pub fn init_params<R: rand::Rng>(&self, rng: &mut R) -> Vec<Tensor> {
        self.params
            .iter()
            .map(|p| {
                if p.fan_in == 0 {
                    Tensor::zeros(&p.shape)
                } else {
                    init_weights(&p.shape, p.fan_in, rng)
                }
            })
            .collect()
    }

    /// Run the graph forward. `inputs[slot]` must match the declared input
    /// shapes exactly.
    pub fn forward(&self, params: &[Tensor], inputs: &[&[f32]], ws: &mut Workspace) {
        assert_eq!(inputs.len(), self.n_inputs, "input slot count");
        for i in 0..self.nodes.len() {
            let (before, rest) = ws.values.split_at_mut(i);
            let out = &mut rest[0][..];
            let def = &self.nodes[i];
            match def.op {
                Op::Input { slot } => {
                    assert_eq!(inputs[slot].len(), out.len(), "input slot {slot} size");
                    out.copy_from_slice(inputs[slot]);
                }
                Op::Conv { input, w, b, k } => {
                    let x = &before[input.0];
                    let [c_in, h, wd] = *self.nodes[input.0].shape.as_slice() else {
                        unreachable!()
                    };
                    let c_out = def.shape[0];
                    if k == 3 {
                        ops::conv3_fwd(
                            x,
                            c_in,
                            h,
                            wd,
                            params[w.0].values(),
                            params[b.0].values(),
                            c_out,
                            &mut ws.pad,
                            out,
                        );
                    } else {
                        ops::conv1_fwd(
                            x,
                            c_in,
                            h * wd,
                            params[w.0].values(),
                            params[b.0].values(),
                            c_out,
                            out,
                        );
                    }
                }
                Op::Relu { input } => ops::relu_fwd(&before[input.0], out),
                Op::AvgPool4 { input } => {
                    let [c, h, wd] = *self.nodes[input.0].shape.as_slice() else {
                        unreachable!()
                    };
                    ops::avg_pool4_fwd(&before[input.0], c, h, wd, out);
                }
                Op::Dense { input, w, b } => {
                    ops::dense_fwd(
                        &before[input.0],
                        params[w.0].values(),
                        params[b.0].values(),
                        def.shape[0],
                        out,
                    );
                }
                Op::ConcatChannels { ref inputs } => {
                    let mut off = 0;
                    for &src in inputs {
                        let v = &before[src.0];
                        out[off..off + v.len()].copy_from_slice(v);
                        off += v.len();
                    }
                }
                Op::Add { a, b } => {
                    let (xa, xb) = (&before[a.0], &before[b.0]);
                    for ((o, &u), &v) in out.iter_mut().zip(xa.iter()).zip(xb.iter()) {
                        *o = u + v;
                    }
                }
                Op::StopGradient { input } => out.copy_from_slice(&before[input.0]),
                Op::SpatialSumChannel { input } => {
                    // Constant channel: sum over every input element, divided
                    // by the spatial size (not the element count).
                    let hw = def.shape[1] * def.shape[2];
                    out.fill(ops::sum_all(&before[input.0]) / hw as f32);
                }
            }
        }
    }

    /// Reverse pass. Node gradients seeded in the workspace flow back to
    /// earlier nodes; parameter gradients accumulate into each tensor's grad
    /// buffer. Call `ws.zero_grads()` (and zero parameter grads) first.
    pub fn backward(&self, params: &mut [Tensor], ws: &mut Workspace) {
        for i in (0..self.nodes.len()).rev() {
            let (gbefore, grest) = ws.grads.split_at_mut(i);
            let gout = &grest[0][..];
            let def = &self.nodes[i];
            match def.op {
                Op::Input { .. } => {}
                Op::Conv { input, w, b, k } => {
                    let x = &ws.values[input.0];
                    let [c_in, h, wd] = *self.nodes[input.0].shape.as_slice() else {
                        unreachable!()
                    };
                    let c_out = def.shape[0];
                    if k == 3 {
                        ops::conv3_bwd_input(
                            gout,
                            c_in,
                            h,
                            wd,
                            params[w.0].values(),
                            c_out,
                            &mut ws.pad,
                            &mut ws.wflip,
                            &mut gbefore[input.0],
                        );
                        ops::pad_chw(x, c_in, h, wd, &mut ws.pad2);
                        let (wt, bt) = two_mut(params, w.0, b.0);
                        ops::conv3_bwd_params(
                            gout,
                            c_out,
                            &ws.pad2,
                            c_in,
                            h,
                            wd,
                            wt.grad_mut(),
                            bt.grad_mut(),
                        );
                    } else {
                        let wvals = params[w.0].values().to_vec();
                        let (wt, bt) = two_mut(params, w.0, b.0);
                        ops::conv1_bwd(
                            gout,
                            x,
                            c_in,
                            h * wd,
                            &wvals,
                            c_out,
                            &mut gbefore[input.0],
                            wt.grad_mut(),
                            bt.grad_mut(),
                        );
                    }
                }
                Op::Relu { input } => {
                    ops::relu_bwd(gout, &ws.values[input.0], &mut gbefore[input.0]);
                }
                Op::AvgPool4 { input } => {
                    let [c, h, wd] = *self.nodes[input.0].shape.as_slice() else {
                        unreachable!()
                    };
                    ops::avg_pool4_bwd(gout, c, h, wd, &mut gbefore[input.0]);
                }
                Op::Dense { input, w, b } => {
                    let wvals = params[w.0].values().to_vec();
                    let (wt, bt) = two_mut(params, w.0, b.0);
                    ops::dense_bwd(
                        gout,
                        &ws.values[input.0],
                        &wvals,
                        def.shape[0],
                        &mut gbefore[input.0],
                        wt.grad_mut(),
                        bt.grad_mut(),
                    );
                }
                Op::ConcatChannels { ref inputs } => {
                    let mut off = 0;
                    for &src in inputs {
                        let gin = &mut gbefore[src.0];
                        let len = gin.len();
                        for (g, &go) in gin.iter_mut().zip(&gout[off..off + len]) {
                            *g += go;
                        }
                        off += len;
                    }
                }
                Op::Add { a, b } => {
                    for (g, &go) in gbefore[a.0].iter_mut().zip(gout.iter()) {
                        *g += go;
                    }
                    for (g, &go) in gbefore[b.0].iter_mut().zip(gout.iter()) {
                        *g += go;
                    }
                }
                Op::StopGradient { .. } => {}
                Op::SpatialSumChannel { input } => {
                    // d out_ij / d x_e = 1 / (h * w) for every input element.
                    let hw = def.shape[1] * def.shape[2];
                    let ginc = ops::sum_all(gout) / hw as f32;
                    for v in gbefore[input.0].iter_mut() {
                        *v += ginc;
                    }
                }
            }
        }
    }
}

/// Two distinct mutable references into the parameter slice (`i < j`).
fn two_mut(params: &mut [Tensor], i: usize, j: usize) -> (&mut Tensor, &mut Tensor) {
    assert!(i < j);
    let (a, b) = params.split_at_mut(j);
    (&mut a[i], &mut b[0])
}
