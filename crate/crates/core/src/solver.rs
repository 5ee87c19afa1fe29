//! Floating-point reference implementation of the locally competitive
//! algorithm (LCA) for sparse coding.
//!
//! The solver descends the energy `E = 0.5 * |x - dict * a|^2 + lambda * |a|`
//! by integrating leaky neuron potentials `u` under lateral inhibition:
//!
//! ```text
//! u <- u - tau * u + tau * dict^T x + lateral * a
//! a  = soft_threshold(u, lambda)
//! ```
//!
//! with `lateral = -tau * (dict^T dict - I)`. The activation is one sided:
//! coefficients are nonnegative, potentials below `lambda` stay silent.

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::Scalar;

/// One-sided shrink: `u - lambda` when `u > lambda`, else zero.
pub fn soft_threshold<T: Scalar>(u: T, lambda: T) -> T {
    if u > lambda {
        u - lambda
    } else {
        T::zero()
    }
}

/// Sparse coding energy `0.5 * |x - dict * a|^2 + lambda * sum |a_i|`.
pub fn energy<T: Scalar>(dict: &Dictionary<T>, x: &[T], a: &[T], lambda: T) -> Result<T> {
    let recon = dict.synthesize(a)?;
    if x.len() != recon.len() {
        return Err(Error::DimMismatch {
            context: "energy input image",
            expected: recon.len(),
            actual: x.len(),
        });
    }
    let mut quad = T::zero();
    for (xi, ri) in x.iter().zip(&recon) {
        let d = *xi - *ri;
        quad = quad + d * d;
    }
    let mut l1 = T::zero();
    for ai in a {
        l1 = l1 + ai.abs();
    }
    Ok(T::from_f64(0.5).expect("f64 narrows to the element type") * quad + lambda * l1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaConfig<T> {
    lambda: T,
    tau: T,
    steps: usize,
}

impl<T: Scalar> LcaConfig<T> {
    pub fn new(lambda: T, tau: T, steps: usize) -> Result<LcaConfig<T>> {
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::InvalidConfig {
                reason: format!("lambda must be finite and nonnegative, got {lambda:?}"),
            });
        }
        if !tau.is_finite() || tau <= T::zero() || tau >= T::one() {
            return Err(Error::InvalidConfig {
                reason: format!("tau must lie strictly between 0 and 1, got {tau:?}"),
            });
        }
        if steps == 0 {
            return Err(Error::InvalidConfig {
                reason: "step count must be at least 1".into(),
            });
        }
        Ok(LcaConfig { lambda, tau, steps })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Evolving solver state: potentials, activations, and the constant input
/// drive for the image being coded.
#[derive(Debug, Clone)]
pub struct LcaState<T> {
    pub u: Vec<T>,
    pub a: Vec<T>,
    /// `dict^T x`, fixed for the whole run.
    pub b: Vec<T>,
}

#[derive(Debug)]
pub struct Solver<T> {
    dict: Dictionary<T>,
    lateral: Mat<T>,
    cfg: LcaConfig<T>,
}

impl<T: Scalar> Solver<T> {
    pub fn new(dict: Dictionary<T>, cfg: LcaConfig<T>) -> Solver<T> {
        let lateral = dict.lateral_weights(cfg.tau);
        Solver { dict, lateral, cfg }
    }

    pub fn dict(&self) -> &Dictionary<T> {
        &self.dict
    }

    pub fn config(&self) -> &LcaConfig<T> {
        &self.cfg
    }

    pub fn init_state(&self, x: &[T]) -> Result<LcaState<T>> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "input image",
            });
        }
        let b = self.dict.analyze(x)?;
        let n = self.dict.atom_count();
        Ok(LcaState {
            u: vec![T::zero(); n],
            a: vec![T::zero(); n],
            b,
        })
    }

    /// Advances the dynamics by one step.
    pub fn step(&self, state: &mut LcaState<T>) {
        let syn = self
            .lateral
            .dot(&state.a)
            .expect("state dimensions fixed at init");
        let tau = self.cfg.tau;
        for i in 0..state.u.len() {
            let u = state.u[i];
            // u * (1 - tau) written as u - u * tau: with a power-of-two tau
            // both orderings are exact, and this is the form the
            // event-driven emulation uses.
            state.u[i] = u - u * tau + tau * state.b[i] + syn[i];
            state.a[i] = soft_threshold(state.u[i], self.cfg.lambda);
        }
    }

    /// Runs the configured number of steps from a zero state.
    pub fn run(&self, x: &[T]) -> Result<LcaState<T>> {
        let mut state = self.init_state(x)?;
        for _ in 0..self.cfg.steps {
            self.step(&mut state);
        }
        Ok(state)
    }

    /// Runs while recording the energy after every step.
    pub fn run_traced(&self, x: &[T]) -> Result<(LcaState<T>, Vec<T>)> {
        let mut state = self.init_state(x)?;
        let mut energies = Vec::with_capacity(self.cfg.steps);
        for _ in 0..self.cfg.steps {
            self.step(&mut state);
            energies.push(energy(&self.dict, x, &state.a, self.cfg.lambda)?);
        }
        Ok((state, energies))
    }

    /// Infinity norm of the stationarity residual
    /// `dict^T (x - dict a) + a - u`, which vanishes at a fixed point of the
    /// dynamics.
    pub fn fixed_point_residual(&self, x: &[T], state: &LcaState<T>) -> Result<T> {
        let recon = self.dict.synthesize(&state.a)?;
        if recon.len() != x.len() {
            return Err(Error::DimMismatch {
                context: "fixed point residual image",
                expected: recon.len(),
                actual: x.len(),
            });
        }
        let err: Vec<T> = x.iter().zip(&recon).map(|(xi, ri)| *xi - *ri).collect();
        let drive = self.dict.analyze(&err)?;
        let mut worst = T::zero();
        for i in 0..state.u.len() {
            let r = (drive[i] + state.a[i] - state.u[i]).abs();
            if r > worst {
                worst = r;
            }
        }
        Ok(worst)
    }
}
