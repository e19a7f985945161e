//! The three learned predictors and their training loops.
//!
//! All three share the same fully-convolutional vocabulary: per-input towers
//! of three 32-channel 3x3 conv+ReLU layers, concatenated into a trunk of
//! ten more, ending in a head.
//!
//! - Single-stage net: height-map tower + action-map tower -> trunk ->
//!   1-channel 1x1 head emitting the per-cell height delta for the whole
//!   action.
//! - Scoop & dump net: two single-stage stacks. The top half predicts the
//!   scoop-phase delta; the bottom half sees the predicted post-scoop
//!   surface plus a constant mass channel (the summed scoop delta) and
//!   predicts the dump-phase delta; the output is their sum. Stop-gradients
//!   isolate the top half so it trains only against the intermediate scoop
//!   target, and the mass channel lets the bottom half reason about how much
//!   media is airborne.
//! - Value net: height, goal and action towers -> trunk -> two 16-channel
//!   conv + 4x4 average-pool stages -> dense scalar. It regresses the change
//!   in mean absolute error to the goal caused by the action; negative means
//!   the action helps.
//!
//! Heights are divided by [`HEIGHT_SCALE_MM`] on the way in and deltas are
//! multiplied back on the way out, keeping activations O(1). Training is
//! plain minibatched Adam on L2 losses, single-threaded and bit-reproducible
//! for a given seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngExt;

use crate::action::{render_action_map, ActionMap, ParamBounds, ScoopDumpParams, ACTION_CHANNELS};
use crate::baseline::baseline_predict;
use crate::error::{Error, Result};
use crate::grid::{l1_distance, GridSpec, HeightMap};
use crate::nn::{adam_step, l2_loss, l2_loss_backward, AdamState, NodeId};
use crate::nn::{Graph, GraphBuilder, Tensor, Workspace};
use crate::rng::{stream_rng, Stream};

/// Input scaling: heights enter the networks divided by this many mm.
pub const HEIGHT_SCALE_MM: f64 = 50.0;

/// One dataset row: a full observed transition plus the goal that was active
/// when the action was chosen.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub before: HeightMap,
    pub params: ScoopDumpParams,
    /// Intermediate surface after the scoop phase (pushed pile settled, load
    /// still airborne). Required to train the scoop & dump net.
    pub after_scoop: Option<HeightMap>,
    pub after: HeightMap,
    pub goal: HeightMap,
}

impl EpisodeRecord {
    /// Regression target for the value net: change in mean absolute error to
    /// the goal, in mm. Negative when the action helped.
    pub fn value_label(&self) -> Result<f64> {
        Ok(l1_distance(&self.goal, &self.after)? - l1_distance(&self.goal, &self.before)?)
    }
}

/// Which architecture a [`Model`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Single,
    ScoopDump,
    Value,
}

/// Training schedule. The default runs in minutes on one core; `paper`
/// holds the full-scale constants for when you have the hours.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub pretrain_iters: usize,
    pub train_iters: usize,
    pub batch: usize,
    pub lr: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_iters: 2_000,
            train_iters: 10_000,
            batch: 16,
            lr: 5e-4,
        }
    }
}

impl TrainConfig {
    /// Full-scale schedule: 30k pretraining iterations, 100k training
    /// iterations, learning rate 5e-4.
    pub fn paper() -> Self {
        Self {
            pretrain_iters: 30_000,
            train_iters: 100_000,
            batch: 16,
            lr: 5e-4,
        }
    }
}

/// Options for one optimization run.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub iters: usize,
    pub batch: usize,
    pub lr: f32,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            iters: 10_000,
            batch: 16,
            lr: 5e-4,
            seed: 0,
        }
    }
}

/// Node handles of interest inside a built graph.
#[derive(Debug, Clone, Copy)]
struct ModelNodes {
    /// Scoop-phase delta before the stop-gradient (scoop & dump net only).
    top_delta: Option<NodeId>,
    /// Dump-phase delta (scoop & dump net only).
    bottom_delta: Option<NodeId>,
    /// Final output: total delta, or the scalar for the value net.
    output: NodeId,
}

/// A built architecture with its parameters.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    rows: usize,
    cols: usize,
    graph: Graph,
    params: Vec<Tensor>,
    nodes: ModelNodes,
}

/// Three conv+ReLU layers of 32 channels.
fn tower(b: &mut GraphBuilder, input: NodeId, name: &str) -> Result<NodeId> {
    let mut x = input;
    for i in 0..3 {
        let c = b.conv(x, 32, 3, &format!("{name}.conv{i}"))?;
        x = b.relu(c);
    }
    Ok(x)
}

/// Ten conv+ReLU trunk layers followed by the 1-channel 1x1 delta head.
fn trunk_to_delta(b: &mut GraphBuilder, input: NodeId, name: &str) -> Result<NodeId> {
    let mut x = input;
    for i in 0..10 {
        let c = b.conv(x, 32, 3, &format!("{name}.conv{i}"))?;
        x = b.relu(c);
    }
    b.conv(x, 1, 1, &format!("{name}.head"))
}

/// One single-stage stack: state tower + action tower -> trunk -> delta.
fn single_stack(
    b: &mut GraphBuilder,
    state_in: NodeId,
    action_in: NodeId,
    prefix: &str,
) -> Result<NodeId> {
    let ts = tower(b, state_in, &format!("{prefix}.state_tower"))?;
    let ta = tower(b, action_in, &format!("{prefix}.action_tower"))?;
    let cat = b.concat_channels(&[ts, ta])?;
    trunk_to_delta(b, cat, &format!("{prefix}.trunk"))
}

fn build_single(rows: usize, cols: usize) -> Result<(Graph, ModelNodes)> {
    let mut b = GraphBuilder::new();
    let h = b.input(&[1, rows, cols]);
    let a = b.input(&[ACTION_CHANNELS, rows, cols]);
    let delta = single_stack(&mut b, h, a, "net")?;
    Ok((
        b.finish(),
        ModelNodes {
            top_delta: None,
            bottom_delta: None,
            output: delta,
        },
    ))
}

fn build_scoopdump(rows: usize, cols: usize) -> Result<(Graph, ModelNodes)> {
    let mut b = GraphBuilder::new();
    let h = b.input(&[1, rows, cols]);
    let a = b.input(&[ACTION_CHANNELS, rows, cols]);

    let scoop_delta = single_stack(&mut b, h, a, "top")?;

    // The bottom half must not push its loss into the top half: every path
    // from the final output back to `scoop_delta` passes a stop-gradient.
    let sg = b.stop_gradient(scoop_delta);
    let post_scoop = b.add(h, sg)?;
    let mass = b.spatial_sum_channel(sg)?;
    let bottom_state = b.concat_channels(&[post_scoop, mass])?;
    let dump_delta = single_stack(&mut b, bottom_state, a, "bottom")?;
    let total = b.add(sg, dump_delta)?;

    Ok((
        b.finish(),
        ModelNodes {
            top_delta: Some(scoop_delta),
            bottom_delta: Some(dump_delta),
            output: total,
        },
    ))
}

fn build_value(rows: usize, cols: usize) -> Result<(Graph, ModelNodes)> {
    let mut b = GraphBuilder::new();
    let h = b.input(&[1, rows, cols]);
    let g = b.input(&[1, rows, cols]);
    let a = b.input(&[ACTION_CHANNELS, rows, cols]);
    let th = tower(&mut b, h, "state_tower")?;
    let tg = tower(&mut b, g, "goal_tower")?;
    let ta = tower(&mut b, a, "action_tower")?;
    let cat = b.concat_channels(&[th, tg, ta])?;
    let mut x = cat;
    for i in 0..10 {
        let c = b.conv(x, 32, 3, &format!("trunk.conv{i}"))?;
        x = b.relu(c);
    }
    let c = b.conv(x, 16, 3, "tail.conv0")?;
    x = b.relu(c);
    x = b.avg_pool4(x)?;
    let c = b.conv(x, 16, 3, "tail.conv1")?;
    x = b.relu(c);
    x = b.avg_pool4(x)?;
    let out = b.dense(x, 1, "tail.fc");
    Ok((
        b.finish(),
        ModelNodes {
            top_delta: None,
            bottom_delta: None,
            output: out,
        },
    ))
}

/// Parameter count for an architecture on a given grid; the spatial size
/// only affects the value net's dense layer.
pub fn expected_param_count(kind: ModelKind, rows: usize, cols: usize) -> usize {
    let conv = |ci: usize, co: usize, k: usize| co * ci * k * k + co;
    let tower = |ci: usize| conv(ci, 32, 3) + 2 * conv(32, 32, 3);
    let trunk_to_delta = |cin: usize| conv(cin, 32, 3) + 9 * conv(32, 32, 3) + conv(32, 1, 1);
    let stack = |state_c: usize| tower(state_c) + tower(ACTION_CHANNELS) + trunk_to_delta(64);
    match kind {
        ModelKind::Single => stack(1),
        ModelKind::ScoopDump => stack(1) + stack(2),
        ModelKind::Value => {
            tower(1)
                + tower(1)
                + tower(ACTION_CHANNELS)
                + conv(96, 32, 3)
                + 9 * conv(32, 32, 3)
                + conv(32, 16, 3)
                + conv(16, 16, 3)
                + (16 * (rows / 16) * (cols / 16) + 1)
        }
    }
}

fn scaled_heights(h: &HeightMap) -> Vec<f32> {
    h.data()
        .iter()
        .map(|&v| (v / HEIGHT_SCALE_MM) as f32)
        .collect()
}

fn scaled_delta(after: &HeightMap, before: &HeightMap) -> Vec<f32> {
    after
        .data()
        .iter()
        .zip(before.data())
        .map(|(a, b)| ((a - b) / HEIGHT_SCALE_MM) as f32)
        .collect()
}

/// One prepared training example.
struct Sample {
    height: Vec<f32>,
    action: ActionMap,
    goal: Option<Vec<f32>>,
    target_next: Option<Vec<f32>>,
    target_scoop: Option<Vec<f32>>,
    target_value: Option<f64>,
}

impl Model {
    /// Build an architecture with freshly initialized weights.
    pub fn new(kind: ModelKind, spec: &GridSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let (rows, cols) = (spec.rows, spec.cols);
        let (graph, nodes) = match kind {
            ModelKind::Single => build_single(rows, cols)?,
            ModelKind::ScoopDump => build_scoopdump(rows, cols)?,
            ModelKind::Value => build_value(rows, cols)?,
        };
        let mut rng = stream_rng(seed, Stream::WeightInit);
        let params = graph.init_params(&mut rng);
        Ok(Self {
            kind,
            rows,
            cols,
            graph,
            params,
            nodes,
        })
    }

    /// Same architecture with all parameters zeroed (predicts zero delta).
    pub fn zeroed(kind: ModelKind, spec: &GridSpec) -> Result<Self> {
        let mut m = Self::new(kind, spec, 0)?;
        for p in &mut m.params {
            p.values_mut().fill(0.0);
        }
        Ok(m)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable parameter access (weight loading, gradient checks).
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.graph.n_param_scalars()
    }

    fn check_map(&self, h: &HeightMap) -> Result<()> {
        if h.spec().rows != self.rows || h.spec().cols != self.cols {
            return Err(Error::Dimension(format!(
                "model built for {}x{}, map is {}x{}",
                self.rows,
                self.cols,
                h.spec().rows,
                h.spec().cols
            )));
        }
        Ok(())
    }

    /// Predict the next surface for one action. Dynamics models only.
    pub fn predict_next(&self, h: &HeightMap, p: &ScoopDumpParams) -> Result<HeightMap> {
        if self.kind == ModelKind::Value {
            return Err(Error::InvalidArgument(
                "value net does not predict states".into(),
            ));
        }
        self.check_map(h)?;
        let amap = render_action_map(p, h.spec())?;
        let hin = scaled_heights(h);
        let mut ws = Workspace::new(&self.graph);
        self.graph
            .forward(&self.params, &[&hin, amap.data()], &mut ws);
        let delta = ws.values(self.nodes.output);
        let spec = *h.spec();
        let data = h
            .data()
            .iter()
            .zip(delta)
            .map(|(&v, &d)| (v + d as f64 * HEIGHT_SCALE_MM).clamp(0.0, spec.max_height))
            .collect();
        HeightMap::from_data(spec, data)
    }

    /// Raw scoop/dump/total deltas in scaled units (scoop & dump net only).
    pub fn scoopdump_deltas(
        &self,
        h: &HeightMap,
        p: &ScoopDumpParams,
    ) -> Result<(Vec<f32>, Vec<f32>, Vec<f32>)> {
        let (Some(top), Some(bottom)) = (self.nodes.top_delta, self.nodes.bottom_delta) else {
            return Err(Error::InvalidArgument(
                "scoop/dump decomposition needs the scoop & dump net".into(),
            ));
        };
        self.check_map(h)?;
        let amap = render_action_map(p, h.spec())?;
        let hin = scaled_heights(h);
        let mut ws = Workspace::new(&self.graph);
        self.graph
            .forward(&self.params, &[&hin, amap.data()], &mut ws);
        Ok((
            ws.values(top).to_vec(),
            ws.values(bottom).to_vec(),
            ws.values(self.nodes.output).to_vec(),
        ))
    }

    /// Estimate the change in L1 error to `goal` caused by the action, mm.
    pub fn predict_value(
        &self,
        h: &HeightMap,
        goal: &HeightMap,
        p: &ScoopDumpParams,
    ) -> Result<f64> {
        if self.kind != ModelKind::Value {
            return Err(Error::InvalidArgument(
                "state-prediction nets do not score actions directly".into(),
            ));
        }
        self.check_map(h)?;
        self.check_map(goal)?;
        let amap = render_action_map(p, h.spec())?;
        let hin = scaled_heights(h);
        let gin = scaled_heights(goal);
        let mut ws = Workspace::new(&self.graph);
        self.graph
            .forward(&self.params, &[&hin, &gin, amap.data()], &mut ws);
        Ok(ws.values(self.nodes.output)[0] as f64)
    }

    /// Feed the model its own predictions over an action sequence; returns
    /// `actions.len() + 1` states starting with `h0`.
    pub fn rollout(&self, h0: &HeightMap, actions: &[ScoopDumpParams]) -> Result<Vec<HeightMap>> {
        let mut states = Vec::with_capacity(actions.len() + 1);
        states.push(h0.clone());
        for p in actions {
            let next = self.predict_next(states.last().expect("non-empty"), p)?;
            states.push(next);
        }
        Ok(states)
    }

    fn sample_from_record(&self, rec: &EpisodeRecord) -> Result<Sample> {
        self.check_map(&rec.before)?;
        let action = render_action_map(&rec.params, rec.before.spec())?;
        let height = scaled_heights(&rec.before);
        Ok(match self.kind {
            ModelKind::Single => Sample {
                height,
                action,
                goal: None,
                target_next: Some(scaled_delta(&rec.after, &rec.before)),
                target_scoop: None,
                target_value: None,
            },
            ModelKind::ScoopDump => {
                let mid = rec.after_scoop.as_ref().ok_or_else(|| {
                    Error::Data("record lacks the intermediate scoop state".into())
                })?;
                Sample {
                    height,
                    action,
                    goal: None,
                    target_next: Some(scaled_delta(&rec.after, &rec.before)),
                    target_scoop: Some(scaled_delta(mid, &rec.before)),
                    target_value: None,
                }
            }
            ModelKind::Value => Sample {
                goal: Some(scaled_heights(&rec.goal)),
                target_value: Some(rec.value_label()?),
                height,
                action,
                target_next: None,
                target_scoop: None,
            },
        })
    }

    /// Forward + loss + backward for one sample with the selected loss terms
    /// active; gradients accumulate into the parameter buffers scaled by
    /// `inv_batch`. Returns the sample's (unweighted) loss.
    fn accumulate_sample(
        &mut self,
        s: &Sample,
        inv_batch: f32,
        use_final: bool,
        use_scoop: bool,
        ws: &mut Workspace,
    ) -> f64 {
        let mut loss = 0.0;
        match self.kind {
            ModelKind::Value => {
                let inputs: [&[f32]; 3] = [
                    &s.height,
                    s.goal.as_deref().expect("value sample has goal"),
                    s.action.data(),
                ];
                self.graph.forward(&self.params, &inputs, ws);
                ws.zero_grads();
                if use_final {
                    let pred = [ws.values(self.nodes.output)[0]];
                    let target = [s.target_value.expect("value sample has label") as f32];
                    loss += l2_loss(&pred, &target).expect("scalar loss");
                    l2_loss_backward(&pred, &target, inv_batch, ws.grad_mut(self.nodes.output));
                }
            }
            ModelKind::Single | ModelKind::ScoopDump => {
                let inputs: [&[f32]; 2] = [&s.height, s.action.data()];
                self.graph.forward(&self.params, &inputs, ws);
                ws.zero_grads();
                if use_final {
                    let target = s.target_next.as_deref().expect("dynamics sample");
                    loss += l2_loss(ws.values(self.nodes.output), target)
                        .expect("matching shapes");
                    let pred = ws.values(self.nodes.output).to_vec();
                    l2_loss_backward(&pred, target, inv_batch, ws.grad_mut(self.nodes.output));
                }
                if use_scoop {
                    if let (Some(top), Some(ts)) =
                        (self.nodes.top_delta, s.target_scoop.as_deref())
                    {
                        // Intermediate scoop loss, added with equal weight.
                        loss += l2_loss(ws.values(top), ts).expect("matching shapes");
                        let pred = ws.values(top).to_vec();
                        l2_loss_backward(&pred, ts, inv_batch, ws.grad_mut(top));
                    }
                }
            }
        }
        self.graph.backward(&mut self.params, ws);
        loss
    }

    /// Batch loss + parameter gradients for a fixed set of records, without
    /// an optimizer step. `use_final` / `use_scoop` select which loss terms
    /// are active (the scoop term only exists on the scoop & dump net).
    /// Exposed for gradient checks and diagnostics.
    pub fn loss_and_grads(
        &mut self,
        records: &[EpisodeRecord],
        use_final: bool,
        use_scoop: bool,
    ) -> Result<f64> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let samples: Vec<Sample> = records
            .iter()
            .map(|r| self.sample_from_record(r))
            .collect::<Result<_>>()?;
        let mut ws = Workspace::new(&self.graph);
        self.zero_param_grads();
        let inv_batch = 1.0 / samples.len() as f32;
        let mut total = 0.0;
        for s in &samples {
            total += self.accumulate_sample(s, inv_batch, use_final, use_scoop, &mut ws);
        }
        Ok(total / samples.len() as f64)
    }

    fn zero_param_grads(&mut self) {
        for p in &mut self.params {
            p.zero_grad();
        }
    }

    fn check_dataset(&self, records: &[EpisodeRecord]) -> Result<()> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        for r in records {
            self.check_map(&r.before)?;
            if self.kind == ModelKind::ScoopDump && r.after_scoop.is_none() {
                return Err(Error::Data(
                    "scoop & dump training needs the intermediate scoop state in every record"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// Minibatched Adam on the recorded transitions. Returns the loss curve
    /// sampled every 100 iterations as `(iter, batch_loss)` pairs.
    pub fn train(
        &mut self,
        records: &[EpisodeRecord],
        opts: &TrainOptions,
    ) -> Result<Vec<(usize, f64)>> {
        self.check_dataset(records)?;
        let mut adam = AdamState::new(opts.lr, &self.params);
        let mut rng = stream_rng(opts.seed, Stream::BatchSampling);
        let mut ws = Workspace::new(&self.graph);
        let mut curve = Vec::new();
        let inv_batch = 1.0 / opts.batch as f32;
        for iter in 0..opts.iters {
            self.zero_param_grads();
            let mut loss = 0.0;
            for _ in 0..opts.batch {
                let idx = rng.random_range(0..records.len());
                let s = self.sample_from_record(&records[idx])?;
                loss += self.accumulate_sample(&s, inv_batch, true, true, &mut ws);
            }
            loss /= opts.batch as f64;
            adam_step(&mut self.params, &mut adam);
            if iter % 100 == 0 {
                curve.push((iter, loss));
            }
        }
        Ok(curve)
    }

    /// Pretraining: same optimization, but targets come from the heuristic
    /// predictor applied to recorded before-states under freshly drawn
    /// random valid actions (the recorded goal supplies the value-net label).
    pub fn pretrain_on_baseline(
        &mut self,
        records: &[EpisodeRecord],
        scoop_width: f64,
        opts: &TrainOptions,
    ) -> Result<Vec<(usize, f64)>> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        let spec = *records[0].before.spec();
        let bounds = ParamBounds::from_spec(&spec);
        let mut adam = AdamState::new(opts.lr, &self.params);
        let mut rng = stream_rng(opts.seed, Stream::PretrainActions);
        let mut ws = Workspace::new(&self.graph);
        let mut curve = Vec::new();
        let inv_batch = 1.0 / opts.batch as f32;
        for iter in 0..opts.iters {
            self.zero_param_grads();
            let mut loss = 0.0;
            for _ in 0..opts.batch {
                let rec = &records[rng.random_range(0..records.len())];
                let action = draw_valid_action(&bounds, &spec, &mut rng)?;
                let synth = synthesize_baseline_record(rec, action, scoop_width)?;
                let s = self.sample_from_record(&synth)?;
                loss += self.accumulate_sample(&s, inv_batch, true, true, &mut ws);
            }
            loss /= opts.batch as f64;
            adam_step(&mut self.params, &mut adam);
            if iter % 100 == 0 {
                curve.push((iter, loss));
            }
        }
        Ok(curve)
    }

    /// Named parameter tensors in declaration (= serialization) order.
    pub fn param_entries(&self) -> impl Iterator<Item = (&str, &[usize], &[f32])> {
        self.graph
            .param_defs()
            .iter()
            .zip(&self.params)
            .map(|(def, t)| (def.name.as_str(), def.shape.as_slice(), t.values()))
    }

    /// Replace parameter values; entries must match the declared names and
    /// shapes in order.
    pub fn load_param_values(&mut self, entries: &[(String, Vec<usize>, Vec<f32>)]) -> Result<()> {
        let defs = self.graph.param_defs();
        if entries.len() != defs.len() {
            return Err(Error::Data(format!(
                "weight blob has {} tensors, model wants {}",
                entries.len(),
                defs.len()
            )));
        }
        for ((name, shape, values), def) in entries.iter().zip(defs) {
            if name != &def.name || shape != &def.shape {
                return Err(Error::Data(format!(
                    "weight tensor {name} {shape:?} does not match declared {} {:?}",
                    def.name, def.shape
                )));
            }
            if values.len() != def.shape.iter().product::<usize>() {
                return Err(Error::Data(format!("tensor {name} has wrong length")));
            }
        }
        for (p, (_, _, values)) in self.params.iter_mut().zip(entries) {
            p.values_mut().copy_from_slice(values);
        }
        Ok(())
    }
}

/// Rejection-sample a valid action from box bounds.
pub fn draw_valid_action<R: rand::Rng>(
    bounds: &ParamBounds,
    spec: &GridSpec,
    rng: &mut R,
) -> Result<ScoopDumpParams> {
    for _ in 0..10_000 {
        let p = ScoopDumpParams::from_array(bounds.sample_uniform(rng));
        if crate::action::validate(&p, spec).is_empty() {
            return Ok(p);
        }
    }
    Err(Error::Sampling { attempts: 10_000 })
}

/// Build a synthetic record from the heuristic predictor's outputs.
fn synthesize_baseline_record(
    rec: &EpisodeRecord,
    action: ScoopDumpParams,
    scoop_width: f64,
) -> Result<EpisodeRecord> {
    let outcome = baseline_predict(&rec.before, &action, scoop_width)?;
    Ok(EpisodeRecord {
        before: rec.before.clone(),
        params: action,
        after_scoop: Some(outcome.after_scoop),
        after: outcome.next,
        goal: rec.goal.clone(),
    })
}
