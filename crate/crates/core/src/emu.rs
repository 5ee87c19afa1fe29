//! Event-driven emulation of the sparse coding dynamics as a graded-spike
//! neural network, in two wirings:
//!
//! * **One layer**: coefficient neurons carry a constant per-neuron bias
//!   (the input drive, folded in off-chip) and inhibit each other through
//!   dense lateral weights `-tau * (dict^T dict - I)`.
//! * **Two layers**: a residual population accumulates the input minus the
//!   current reconstruction streamed from the coefficient layer through the
//!   dictionary, fires its accumulator as a graded payload once it reaches
//!   `lambda_e`, and feeds the coefficient layer back through `tau * dict^T`.
//!   As `lambda_e` shrinks this reproduces the one-layer dynamics without
//!   ever materializing the dense lateral matrix.
//!
//! The emulation is generic over the value type: [`FxValue`] reproduces a
//! fixed-point datapath bit for bit (8-bit shared-exponent weights, Q7.16
//! state, round-to-nearest-even, saturating adds), while `f64` runs the same
//! schedule in floating point. With floats, "saturation events" count
//! results whose magnitude exceeds the fixed-point range; values are not
//! clamped.

use std::time::Instant;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::fixedpoint::{self, FxValue, QuantizedWeights};
use crate::mat::Mat;

/// Value type the emulation runs on: fixed point or float.
pub trait EmuScalar: Copy + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    /// Synaptic weight block mapping spike frames to dendritic sums.
    type Weights: std::fmt::Debug + Send + Sync;

    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn to_real(self) -> f64;
    fn is_zero(self) -> bool;
    /// Addition, counting results outside the fixed-point range.
    fn add_counting(self, rhs: Self, saturations: &mut u64) -> Self;
    /// Subtraction, counting results outside the fixed-point range.
    fn sub_counting(self, rhs: Self, saturations: &mut u64) -> Self;
    /// One leak step: `self * (1 - 2^-tau_exp)`.
    fn decay(self, tau_exp: u32) -> Self;
    /// The leaked fraction: `self * 2^-tau_exp`.
    fn tau_scale(self, tau_exp: u32) -> Self;
    /// One-sided shrink: `self - lambda` when above `lambda`, else zero.
    fn soft_threshold(self, lambda: Self) -> Self;
    fn magnitude_at_least(self, threshold: Self) -> bool;
    fn build_weights(real: &Mat<f64>) -> Result<Self::Weights>;
    /// Applies a weight block to a sparse spike frame, counting saturated
    /// outputs.
    fn apply_weights(
        weights: &Self::Weights,
        spikes: &[(usize, Self)],
        saturations: &mut u64,
    ) -> Result<Vec<Self>>;
}

impl EmuScalar for FxValue {
    type Weights = QuantizedWeights;

    fn zero() -> Self {
        FxValue::ZERO
    }

    fn from_real(x: f64) -> Self {
        FxValue::from_real(x)
    }

    fn to_real(self) -> f64 {
        FxValue::to_real(self)
    }

    fn is_zero(self) -> bool {
        FxValue::is_zero(self)
    }

    fn add_counting(self, rhs: Self, saturations: &mut u64) -> Self {
        FxValue::add_counting(self, rhs, saturations)
    }

    fn sub_counting(self, rhs: Self, saturations: &mut u64) -> Self {
        FxValue::sub_counting(self, rhs, saturations)
    }

    fn decay(self, tau_exp: u32) -> Self {
        FxValue::decay(self, tau_exp)
    }

    fn tau_scale(self, tau_exp: u32) -> Self {
        FxValue::tau_scale(self, tau_exp)
    }

    fn soft_threshold(self, lambda: Self) -> Self {
        FxValue::soft_threshold(self, lambda)
    }

    fn magnitude_at_least(self, threshold: Self) -> bool {
        FxValue::magnitude_at_least(self, threshold)
    }

    fn build_weights(real: &Mat<f64>) -> Result<Self::Weights> {
        QuantizedWeights::quantize(real)
    }

    fn apply_weights(
        weights: &Self::Weights,
        spikes: &[(usize, Self)],
        saturations: &mut u64,
    ) -> Result<Vec<Self>> {
        weights.apply_sparse(spikes, saturations)
    }
}

impl EmuScalar for f64 {
    type Weights = Mat<f64>;

    fn zero() -> Self {
        0.0
    }

    fn from_real(x: f64) -> Self {
        x
    }

    fn to_real(self) -> f64 {
        self
    }

    fn is_zero(self) -> bool {
        self == 0.0
    }

    fn add_counting(self, rhs: Self, saturations: &mut u64) -> Self {
        let s = self + rhs;
        if s.abs() > fixedpoint::max_real() {
            *saturations += 1;
        }
        s
    }

    fn sub_counting(self, rhs: Self, saturations: &mut u64) -> Self {
        let s = self - rhs;
        if s.abs() > fixedpoint::max_real() {
            *saturations += 1;
        }
        s
    }

    fn decay(self, tau_exp: u32) -> Self {
        self - self * 2f64.powi(-(tau_exp as i32))
    }

    fn tau_scale(self, tau_exp: u32) -> Self {
        self * 2f64.powi(-(tau_exp as i32))
    }

    fn soft_threshold(self, lambda: Self) -> Self {
        if self > lambda {
            self - lambda
        } else {
            0.0
        }
    }

    fn magnitude_at_least(self, threshold: Self) -> bool {
        self.abs() >= threshold.abs()
    }

    fn build_weights(real: &Mat<f64>) -> Result<Self::Weights> {
        if !real.is_finite() {
            return Err(Error::NonFinite {
                context: "weight matrix",
            });
        }
        Ok(real.clone())
    }

    fn apply_weights(
        weights: &Self::Weights,
        spikes: &[(usize, Self)],
        saturations: &mut u64,
    ) -> Result<Vec<Self>> {
        let out = weights.dot_sparse(spikes)?;
        for v in &out {
            if v.abs() > fixedpoint::max_real() {
                *saturations += 1;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    OneLayer,
    TwoLayer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmuConfig {
    pub topology: Topology,
    /// Activation threshold of the coefficient neurons.
    pub lambda: f64,
    /// Firing threshold of the residual accumulators (two-layer only).
    pub lambda_e: f64,
    /// Leak is `2^-tau_exp` per step.
    pub tau_exp: u32,
    pub steps: usize,
}

impl EmuConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold(self.lambda, "lambda")?;
        check_threshold(self.lambda_e, "lambda_e")?;
        if self.tau_exp == 0 || self.tau_exp > 24 {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "tau_exp must lie in 1..=24 (one fractional word), got {}",
                    self.tau_exp
                ),
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig {
                reason: "step count must be at least 1".into(),
            });
        }
        Ok(())
    }
}

fn check_threshold(v: f64, name: &str) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidConfig {
            reason: format!("{name} must be finite and nonnegative, got {v}"),
        });
    }
    Ok(())
}

/// All spikes one population emitted in one timestep. Payloads are reported
/// as real numbers whatever the value type; fixed-point payloads convert
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeFrame {
    pub timestep: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Synaptic operations a frame list causes downstream: every spike reaches
/// `fanout` synapses.
pub fn count_synops(frames: &[SpikeFrame], fanout: usize) -> u64 {
    frames
        .iter()
        .map(|f| f.entries.len() as u64 * fanout as u64)
        .sum()
}

#[derive(Debug)]
enum Wiring<V: EmuScalar> {
    OneLayer {
        /// `-tau * (dict^T dict - I)`, coefficient to coefficient.
        lateral: V::Weights,
        /// `tau * dict^T` kept in full precision: the per-neuron bias is
        /// computed off-chip from the input image and quantized once.
        bias_proj: Mat<f64>,
    },
    TwoLayer {
        /// `tau * dict^T`, residual to coefficient.
        input: V::Weights,
        /// `dict`, coefficient to residual.
        recon: V::Weights,
    },
}

/// Synaptic wiring for one dictionary, topology, and leak rate. Building it
/// quantizes the weights once; many runs with different inputs and
/// thresholds can share it.
#[derive(Debug)]
pub struct Network<V: EmuScalar> {
    input_dim: usize,
    atom_count: usize,
    cfg: EmuConfig,
    wiring: Wiring<V>,
}

impl<V: EmuScalar> Network<V> {
    pub fn new(dict: &Dictionary<f64>, cfg: &EmuConfig) -> Result<Network<V>> {
        cfg.validate()?;
        let tau = 2f64.powi(-(cfg.tau_exp as i32));
        let wiring = match cfg.topology {
            Topology::OneLayer => Wiring::OneLayer {
                lateral: V::build_weights(&dict.lateral_weights(tau))?,
                bias_proj: dict.atoms().transpose().scale(tau),
            },
            Topology::TwoLayer => Wiring::TwoLayer {
                input: V::build_weights(&dict.atoms().transpose().scale(tau))?,
                recon: V::build_weights(dict.atoms())?,
            },
        };
        Ok(Network {
            input_dim: dict.input_dim(),
            atom_count: dict.atom_count(),
            cfg: *cfg,
            wiring,
        })
    }

    pub fn config(&self) -> &EmuConfig {
        &self.cfg
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    /// Synapses one coefficient spike reaches: every other coefficient
    /// neuron in one layer, every residual accumulator in two.
    pub fn v1_fanout(&self) -> usize {
        match self.cfg.topology {
            Topology::OneLayer => self.atom_count - 1,
            Topology::TwoLayer => self.input_dim,
        }
    }

    /// Synapses one residual spike reaches.
    pub fn residual_fanout(&self) -> usize {
        match self.cfg.topology {
            Topology::OneLayer => 0,
            Topology::TwoLayer => self.atom_count,
        }
    }

    /// Binds the network to one input image with the configured thresholds.
    pub fn instance(&self, x: &[f64]) -> Result<Emulation<'_, V>> {
        self.instance_with(x, self.cfg.lambda, self.cfg.lambda_e)
    }

    /// Binds the network to one input image, overriding the thresholds.
    /// Threshold sweeps reuse the quantized weights through this.
    pub fn instance_with(
        &self,
        x: &[f64],
        lambda: f64,
        lambda_e: f64,
    ) -> Result<Emulation<'_, V>> {
        if x.len() != self.input_dim {
            return Err(Error::DimMismatch {
                context: "emulation input image",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "input image",
            });
        }
        check_threshold(lambda, "lambda")?;
        check_threshold(lambda_e, "lambda_e")?;

        let (x_q, bias, e) = match &self.wiring {
            Wiring::OneLayer { bias_proj, .. } => {
                let drive = bias_proj.dot(x)?;
                let bias = drive.into_iter().map(V::from_real).collect();
                (Vec::new(), bias, Vec::new())
            }
            Wiring::TwoLayer { .. } => {
                let x_q = x.iter().map(|&v| V::from_real(v)).collect();
                (x_q, Vec::new(), vec![V::zero(); self.input_dim])
            }
        };

        Ok(Emulation {
            net: self,
            lambda: V::from_real(lambda),
            lambda_e: V::from_real(lambda_e),
            steps: self.cfg.steps,
            x: x_q,
            bias,
            u: vec![V::zero(); self.atom_count],
            a: vec![V::zero(); self.atom_count],
            e,
            t: 0,
            saturations: 0,
            v1_frames: Vec::new(),
            residual_frames: Vec::new(),
        })
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Final coefficients, as real numbers.
    pub activations: Vec<f64>,
    /// Final potentials, as real numbers.
    pub potentials: Vec<f64>,
    pub v1_frames: Vec<SpikeFrame>,
    pub residual_frames: Vec<SpikeFrame>,
    pub v1_fanout: usize,
    pub residual_fanout: usize,
    pub saturation_events: u64,
    /// Wall time of the stepping loop alone.
    pub wall_ns: u64,
}

impl RunOutcome {
    pub fn v1_spike_count(&self) -> u64 {
        self.v1_frames.iter().map(|f| f.entries.len() as u64).sum()
    }

    pub fn residual_spike_count(&self) -> u64 {
        self.residual_frames
            .iter()
            .map(|f| f.entries.len() as u64)
            .sum()
    }

    pub fn synops(&self) -> u64 {
        count_synops(&self.v1_frames, self.v1_fanout)
            + count_synops(&self.residual_frames, self.residual_fanout)
    }

    pub fn active_count(&self) -> usize {
        self.activations.iter().filter(|&&a| a != 0.0).count()
    }
}

/// One network bound to one input image: the evolving state of a run.
#[derive(Debug)]
pub struct Emulation<'n, V: EmuScalar> {
    net: &'n Network<V>,
    lambda: V,
    lambda_e: V,
    steps: usize,
    /// Quantized input image (two-layer wiring only).
    x: Vec<V>,
    /// Per-neuron constant drive (one-layer wiring only).
    bias: Vec<V>,
    u: Vec<V>,
    a: Vec<V>,
    /// Residual accumulators (two-layer wiring only).
    e: Vec<V>,
    t: usize,
    saturations: u64,
    v1_frames: Vec<SpikeFrame>,
    residual_frames: Vec<SpikeFrame>,
}

impl<'n, V: EmuScalar> Emulation<'n, V> {
    pub fn potentials_real(&self) -> Vec<f64> {
        self.u.iter().map(|v| v.to_real()).collect()
    }

    pub fn activations_real(&self) -> Vec<f64> {
        self.a.iter().map(|v| v.to_real()).collect()
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturations
    }

    /// Returns the state to exactly how [`Network::instance_with`] built it.
    pub fn reset(&mut self) {
        for v in &mut self.u {
            *v = V::zero();
        }
        for v in &mut self.a {
            *v = V::zero();
        }
        for v in &mut self.e {
            *v = V::zero();
        }
        self.t = 0;
        self.saturations = 0;
        self.v1_frames.clear();
        self.residual_frames.clear();
    }

    fn current_frame(&self) -> Vec<(usize, V)> {
        self.a
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i, v))
            .collect()
    }

    fn archive(entries: &[(usize, V)], timestep: usize) -> SpikeFrame {
        SpikeFrame {
            timestep,
            entries: entries.iter().map(|&(i, v)| (i, v.to_real())).collect(),
        }
    }

    /// Advances one timestep. Within the step every add applies in a fixed
    /// order (leak, then drive, then synaptic input), which pins down where
    /// saturation strikes first.
    pub fn step(&mut self) -> Result<()> {
        match self.net.cfg.topology {
            Topology::OneLayer => self.step_one_layer(),
            Topology::TwoLayer => self.step_two_layer(),
        }
    }

    fn step_one_layer(&mut self) -> Result<()> {
        let net = self.net;
        let Wiring::OneLayer { lateral, .. } = &net.wiring else {
            unreachable!("wiring matches the configured topology");
        };
        let frame = self.current_frame();
        let mut sat = 0;
        let syn = V::apply_weights(lateral, &frame, &mut sat)?;
        let tau_exp = net.cfg.tau_exp;
        for i in 0..self.u.len() {
            let mut u = self.u[i].decay(tau_exp);
            u = u.add_counting(self.bias[i], &mut sat);
            u = u.add_counting(syn[i], &mut sat);
            self.u[i] = u;
            self.a[i] = u.soft_threshold(self.lambda);
        }
        self.saturations += sat;
        self.v1_frames.push(Self::archive(&frame, self.t));
        self.t += 1;
        Ok(())
    }

    fn step_two_layer(&mut self) -> Result<()> {
        let net = self.net;
        let Wiring::TwoLayer { input, recon } = &net.wiring else {
            unreachable!("wiring matches the configured topology");
        };
        let tau_exp = net.cfg.tau_exp;
        let mut sat = 0;

        // Phase 1: the residual population consumes this step's coefficient
        // frame, accumulates input minus reconstruction, and fires any
        // accumulator at or above lambda_e as a graded payload, resetting it.
        let a_frame = self.current_frame();
        let recon_sum = V::apply_weights(recon, &a_frame, &mut sat)?;
        let mut e_frame = Vec::new();
        for i in 0..self.e.len() {
            let mut e = self.e[i].add_counting(self.x[i], &mut sat);
            e = e.sub_counting(recon_sum[i], &mut sat);
            if !e.is_zero() && e.magnitude_at_least(self.lambda_e) {
                e_frame.push((i, e));
                e = V::zero();
            }
            self.e[i] = e;
        }

        // Phase 2: the coefficient population consumes the residual frame
        // within the same step. The tau-scaled self term cancels the
        // neuron's own contribution to the residual, leaving the same
        // dynamics the lateral wiring computes directly.
        let syn = V::apply_weights(input, &e_frame, &mut sat)?;
        for i in 0..self.u.len() {
            let mut u = self.u[i].decay(tau_exp);
            u = u.add_counting(self.a[i].tau_scale(tau_exp), &mut sat);
            u = u.add_counting(syn[i], &mut sat);
            self.u[i] = u;
            self.a[i] = u.soft_threshold(self.lambda);
        }

        self.saturations += sat;
        self.v1_frames.push(Self::archive(&a_frame, self.t));
        self.residual_frames.push(Self::archive(&e_frame, self.t));
        self.t += 1;
        Ok(())
    }

    /// Runs the configured number of steps from the current state and
    /// reports the outcome. Timing covers the stepping loop alone.
    pub fn run(&mut self) -> Result<RunOutcome> {
        let start = Instant::now();
        for _ in 0..self.steps {
            self.step()?;
        }
        let wall_ns = start.elapsed().as_nanos() as u64;
        Ok(RunOutcome {
            activations: self.activations_real(),
            potentials: self.potentials_real(),
            v1_frames: self.v1_frames.clone(),
            residual_frames: self.residual_frames.clone(),
            v1_fanout: self.net.v1_fanout(),
            residual_fanout: self.net.residual_fanout(),
            saturation_events: self.saturations,
            wall_ns,
        })
    }
}

/// Builds the network, binds the input, and runs it: the one-call path when
/// weights are not reused.
pub fn run_emulation<V: EmuScalar>(
    dict: &Dictionary<f64>,
    cfg: &EmuConfig,
    x: &[f64],
) -> Result<RunOutcome> {
    let net: Network<V> = Network::new(dict, cfg)?;
    let mut em = net.instance(x)?;
    em.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{LcaConfig, Solver};

    fn scalar_dict() -> Dictionary<f64> {
        Dictionary::new(Mat::from_col_major(1, 1, vec![1.0]).unwrap()).unwrap()
    }

    fn cfg(topology: Topology, lambda: f64, lambda_e: f64, steps: usize) -> EmuConfig {
        EmuConfig {
            topology,
            lambda,
            lambda_e,
            tau_exp: 7,
            steps,
        }
    }

    fn test_image(dim: usize, seed: u64) -> Vec<f64> {
        (0..dim)
            .map(|i| ((seed * 31 + i as u64) * 2654435761 % 97) as f64 / 97.0)
            .collect()
    }

    #[test]
    fn config_validation() {
        let good = cfg(Topology::OneLayer, 0.5, 0.0, 256);
        assert!(good.validate().is_ok());
        assert!(EmuConfig { lambda: -1.0, ..good }.validate().is_err());
        assert!(EmuConfig { lambda_e: f64::NAN, ..good }.validate().is_err());
        assert!(EmuConfig { tau_exp: 0, ..good }.validate().is_err());
        assert!(EmuConfig { tau_exp: 25, ..good }.validate().is_err());
        assert!(EmuConfig { steps: 0, ..good }.validate().is_err());
    }

    #[test]
    fn instance_rejects_bad_images() {
        let d: Dictionary<f64> = Dictionary::gaussian(9, 12, 1).unwrap();
        let net: Network<f64> = Network::new(&d, &cfg(Topology::OneLayer, 0.1, 0.0, 8)).unwrap();
        assert!(net.instance(&vec![0.1; 8]).is_err());
        assert!(net.instance(&vec![f64::NAN; 9]).is_err());
    }

    #[test]
    fn float_one_layer_matches_the_reference_solver_stepwise() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 5).unwrap();
        let x = test_image(16, 3);
        let tau = 1.0 / 128.0;
        let solver = Solver::new(d.clone(), LcaConfig::new(0.1, tau, 64).unwrap());
        let mut state = solver.init_state(&x).unwrap();

        let net: Network<f64> = Network::new(&d, &cfg(Topology::OneLayer, 0.1, 0.0, 64)).unwrap();
        let mut em = net.instance(&x).unwrap();

        for step in 0..64 {
            em.step().unwrap();
            solver.step(&mut state);
            let u = em.potentials_real();
            let a = em.activations_real();
            for i in 0..24 {
                assert_eq!(u[i], state.u[i], "potential {i} diverged at step {step}");
                assert_eq!(a[i], state.a[i], "activation {i} diverged at step {step}");
            }
        }
    }

    #[test]
    fn v1_frames_mirror_the_activation_trajectory() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 5).unwrap();
        let x = test_image(16, 4);
        let tau = 1.0 / 128.0;
        let steps = 48;
        let solver = Solver::new(d.clone(), LcaConfig::new(0.05, tau, steps).unwrap());
        let mut state = solver.init_state(&x).unwrap();

        let net: Network<f64> =
            Network::new(&d, &cfg(Topology::OneLayer, 0.05, 0.0, steps)).unwrap();
        let mut em = net.instance(&x).unwrap();
        let outcome = em.run().unwrap();

        assert_eq!(outcome.v1_frames.len(), steps);
        assert!(outcome.residual_frames.is_empty());
        // Frame t carries the activations entering step t: empty at t = 0,
        // then exactly the nonzeros of the solver state after t steps.
        assert!(outcome.v1_frames[0].entries.is_empty());
        for t in 0..steps {
            assert_eq!(outcome.v1_frames[t].timestep, t);
            let expected: Vec<(usize, f64)> = state
                .a
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0.0)
                .map(|(i, &a)| (i, a))
                .collect();
            assert_eq!(outcome.v1_frames[t].entries, expected, "frame {t}");
            solver.step(&mut state);
        }

        let nonzero_total: u64 = outcome
            .v1_frames
            .iter()
            .map(|f| f.entries.len() as u64)
            .sum();
        assert_eq!(outcome.v1_spike_count(), nonzero_total);
    }

    #[test]
    fn scalar_fixed_two_layer_reaches_the_fixed_point() {
        let d = scalar_dict();
        let c = cfg(Topology::TwoLayer, 0.25, 1.0 / 65536.0, 2560);
        let outcome = run_emulation::<FxValue>(&d, &c, &[1.0]).unwrap();
        assert!(
            (outcome.activations[0] - 0.75).abs() <= 1.0 / 256.0,
            "activation {}",
            outcome.activations[0]
        );
        assert!((outcome.potentials[0] - 1.0).abs() <= 1.0 / 256.0);
        assert_eq!(outcome.saturation_events, 0);
    }

    #[test]
    fn scalar_fixed_one_layer_reaches_the_fixed_point() {
        let d = scalar_dict();
        let c = cfg(Topology::OneLayer, 0.25, 0.0, 2560);
        let outcome = run_emulation::<FxValue>(&d, &c, &[1.0]).unwrap();
        assert!((outcome.activations[0] - 0.75).abs() <= 1.0 / 256.0);
    }

    #[test]
    fn residual_accumulates_below_threshold_and_fires_above() {
        let d = scalar_dict();
        // lambda far above any drive keeps the coefficient layer silent, so
        // the residual sees the bare input every step.
        let quiet = cfg(Topology::TwoLayer, 10.0, 64.0, 4);
        let outcome = run_emulation::<FxValue>(&d, &quiet, &[0.5]).unwrap();
        assert_eq!(outcome.residual_spike_count(), 0);
        assert_eq!(outcome.v1_spike_count(), 0);

        let firing = cfg(Topology::TwoLayer, 10.0, 1.0 / 65536.0, 4);
        let outcome = run_emulation::<FxValue>(&d, &firing, &[0.5]).unwrap();
        assert_eq!(outcome.residual_spike_count(), 4);
        for frame in &outcome.residual_frames {
            assert_eq!(frame.entries.len(), 1);
            // Fired and reset each step, so every payload is one step's
            // worth of input.
            assert_eq!(frame.entries[0], (0, 0.5));
        }
    }

    #[test]
    fn residual_payload_is_the_accumulated_value() {
        let d = scalar_dict();
        // lambda_e = 1.2 lets the 0.5-per-step residual fire only once 3
        // steps have accumulated: payloads of 1.5, on steps 2 and 5.
        let c = cfg(Topology::TwoLayer, 10.0, 1.2, 6);
        let outcome = run_emulation::<FxValue>(&d, &c, &[0.5]).unwrap();
        let fired: Vec<(usize, f64)> = outcome
            .residual_frames
            .iter()
            .flat_map(|f| f.entries.iter().map(move |&(_, v)| (f.timestep, v)))
            .collect();
        assert_eq!(fired, vec![(2, 1.5), (5, 1.5)]);
    }

    #[test]
    fn float_topologies_agree_when_every_residual_fires() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 8).unwrap();
        let x = test_image(16, 9);
        let one = run_emulation::<f64>(&d, &cfg(Topology::OneLayer, 0.1, 0.0, 256), &x).unwrap();
        let two = run_emulation::<f64>(&d, &cfg(Topology::TwoLayer, 0.1, 1e-12, 256), &x).unwrap();
        for i in 0..24 {
            assert!(
                (one.activations[i] - two.activations[i]).abs() < 1e-9,
                "atom {i}: one {} two {}",
                one.activations[i],
                two.activations[i]
            );
        }
    }

    #[test]
    fn fixed_runs_are_deterministic_and_reset_is_complete() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 8).unwrap();
        let x = test_image(16, 10);
        let c = cfg(Topology::TwoLayer, 0.125, 1.0 / 65536.0, 128);
        let net: Network<FxValue> = Network::new(&d, &c).unwrap();
        let mut em = net.instance(&x).unwrap();
        let first = em.run().unwrap();
        em.reset();
        let second = em.run().unwrap();
        assert_eq!(first.activations, second.activations);
        assert_eq!(first.potentials, second.potentials);
        assert_eq!(first.v1_frames, second.v1_frames);
        assert_eq!(first.residual_frames, second.residual_frames);
        assert_eq!(first.saturation_events, second.saturation_events);

        let fresh = net.instance(&x).unwrap().run().unwrap();
        assert_eq!(first.activations, fresh.activations);
        assert_eq!(first.v1_frames, fresh.v1_frames);

        // Frames are well formed: one per timestep in order, entries sorted
        // by neuron index without repeats, payloads never zero.
        for frames in [&first.v1_frames, &first.residual_frames] {
            assert_eq!(frames.len(), 128);
            for (t, frame) in frames.iter().enumerate() {
                assert_eq!(frame.timestep, t);
                assert!(frame.entries.windows(2).all(|w| w[0].0 < w[1].0));
                assert!(frame.entries.iter().all(|&(_, p)| p != 0.0));
            }
        }
    }

    #[test]
    fn saturation_clamps_and_counts_instead_of_wrapping() {
        let d = scalar_dict();
        // An input far beyond the representable range drives the potential
        // into the ceiling.
        let c = cfg(Topology::OneLayer, 0.5, 0.0, 4000);
        let net: Network<FxValue> = Network::new(&d, &c).unwrap();
        let mut em = net.instance(&[200.0]).unwrap();
        let outcome = em.run().unwrap();
        assert!(outcome.saturation_events > 0);
        let max = fixedpoint::max_real();
        assert!(outcome.potentials[0] <= max);
        assert!(outcome.potentials[0] > 0.0, "wrapped negative");
        assert_eq!(outcome.potentials[0], max);
    }

    #[test]
    fn huge_lambda_silences_the_network() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 8).unwrap();
        let x = test_image(16, 11);
        let c = cfg(Topology::OneLayer, 16.0, 0.0, 256);
        let outcome = run_emulation::<FxValue>(&d, &c, &x).unwrap();
        assert_eq!(outcome.active_count(), 0);
        assert_eq!(outcome.v1_spike_count(), 0);
        assert_eq!(outcome.synops(), 0);
    }

    #[test]
    fn synop_counting_is_spikes_times_fanout() {
        let frames = vec![
            SpikeFrame {
                timestep: 0,
                entries: vec![(0, 1.0), (3, 0.5)],
            },
            SpikeFrame {
                timestep: 1,
                entries: vec![(1, 0.25)],
            },
        ];
        assert_eq!(count_synops(&frames, 10), 30);
        assert_eq!(count_synops(&frames, 0), 0);
        assert_eq!(count_synops(&[], 10), 0);
    }

    #[test]
    fn two_layer_fanouts_follow_the_population_sizes() {
        let d: Dictionary<f64> = Dictionary::gaussian(16, 24, 8).unwrap();
        let one: Network<f64> = Network::new(&d, &cfg(Topology::OneLayer, 0.1, 0.0, 8)).unwrap();
        assert_eq!(one.v1_fanout(), 23);
        assert_eq!(one.residual_fanout(), 0);
        let two: Network<f64> = Network::new(&d, &cfg(Topology::TwoLayer, 0.1, 0.1, 8)).unwrap();
        assert_eq!(two.v1_fanout(), 16);
        assert_eq!(two.residual_fanout(), 24);
    }
}
