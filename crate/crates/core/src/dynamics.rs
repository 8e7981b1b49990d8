//! Three coupled logistic maps with a hidden common driver.
//!
//! The hidden map `z` evolves on its own and forces both observed maps:
//!
//! ```text
//! x_t = r x_{t-1} (1 - x_{t-1} - beta_xz z_{t-1})
//! y_t = r y_{t-1} (1 - y_{t-1} - beta_yz z_{t-1})
//! z_t = r z_{t-1} (1 - z_{t-1})
//! ```
//!
//! This is a concrete instance of a discrete dynamical system
//! `s_{t+1} = f(s_t)` with state `s = (x, y, z)` observed through
//! `g(s) = (x, y)`. Because `y` depends on `z` only through the coupling
//! term, `z_{t-1}` can be solved for exactly from two consecutive `y`
//! values; [`phi_oracle`] and [`h_compose_phi`] provide that inverse and are
//! used as ground-truth oracles.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial conditions tried by [`simulate`] before giving up.
pub const MAX_SIMULATION_ATTEMPTS: usize = 100;

pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticSystemParams {
    pub r: f64,
    pub beta_xz: f64,
    pub beta_yz: f64,
}

impl Default for LogisticSystemParams {
    fn default() -> Self {
        Self {
            r: 3.99,
            beta_xz: 0.2,
            beta_yz: 0.2,
        }
    }
}

impl LogisticSystemParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r.is_finite()
            && self.r > 0.0
            && self.beta_xz.is_finite()
            && self.beta_xz >= 0.0
            && self.beta_yz.is_finite()
            && self.beta_yz >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "system parameters need r > 0 and non-negative couplings, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SystemState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn in_unit_cube(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.x) && unit(self.y) && unit(self.z)
    }
}

/// One iteration of the coupled system. Every right-hand side uses the
/// pre-step state, including `z`. No range check is applied.
pub fn step(state: SystemState, params: &LogisticSystemParams) -> SystemState {
    let SystemState { x, y, z } = state;
    let r = params.r;
    SystemState {
        x: r * x * (1.0 - x - params.beta_xz * z),
        y: r * y * (1.0 - y - params.beta_yz * z),
        z: r * z * (1.0 - z),
    }
}

/// Aligned `(x, y, z)` series. Only [`simulate`] and [`Trajectory::from_series`]
/// construct one, so the invariants below always hold:
///
/// - all three series share a length of at least 2,
/// - every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    params: LogisticSystemParams,
    seed: u64,
}

impl Trajectory {
    /// Wraps externally produced series (e.g. read back from CSV).
    pub fn from_series(
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        params: LogisticSystemParams,
        seed: u64,
    ) -> Result<Self> {
        if x.len() != y.len() || y.len() != z.len() {
            return Err(Error::Length(format!(
                "series lengths differ: x={}, y={}, z={}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientLength {
                needed: 2,
                got: x.len(),
            });
        }
        let bad = x
            .iter()
            .chain(&y)
            .chain(&z)
            .position(|v| !(0.0..=1.0).contains(v));
        if let Some(i) = bad {
            return Err(Error::Format(format!(
                "value #{i} of the concatenated series lies outside [0, 1]"
            )));
        }
        Ok(Self {
            x,
            y,
            z,
            params,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn params(&self) -> &LogisticSystemParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self, t: usize) -> SystemState {
        SystemState::new(self.x[t], self.y[t], self.z[t])
    }
}

/// Iterates the coupled system from a random initial state.
///
/// The initial state is drawn uniformly from the open unit cube. The first
/// `burn_in` iterates are discarded, the next `n_points` are kept. Whenever a
/// component leaves `[0, 1]` the attempt is abandoned and a fresh initial
/// state is drawn from the same RNG stream; after
/// [`MAX_SIMULATION_ATTEMPTS`] failures [`Error::Divergence`] is returned.
pub fn simulate(
    params: &LogisticSystemParams,
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Trajectory> {
    params.validate()?;
    if n_points < 2 {
        return Err(Error::InsufficientLength {
            needed: 2,
            got: n_points,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..MAX_SIMULATION_ATTEMPTS {
        let mut state =
            SystemState::new(rng.sample(Open01), rng.sample(Open01), rng.sample(Open01));
        for _ in 0..burn_in {
            state = step(state, params);
            if !state.in_unit_cube() {
                continue 'attempt;
            }
        }

        let mut x = Vec::with_capacity(n_points);
        let mut y = Vec::with_capacity(n_points);
        let mut z = Vec::with_capacity(n_points);
        for i in 0..n_points {
            if i > 0 {
                state = step(state, params);
                if !state.in_unit_cube() {
                    continue 'attempt;
                }
            }
            x.push(state.x);
            y.push(state.y);
            z.push(state.z);
        }
        return Ok(Trajectory {
            x,
            y,
            z,
            params: *params,
            seed,
        });
    }
    Err(Error::Divergence {
        attempts: MAX_SIMULATION_ATTEMPTS,
    })
}

/// Solves the `y` update for the hidden value `z_{t-1}`.
pub fn phi_oracle(y_t: f64, y_prev: f64, params: &LogisticSystemParams) -> Result<f64> {
    if y_prev == 0.0 {
        return Err(Error::SingularInput("y_prev is zero".into()));
    }
    if params.beta_yz == 0.0 {
        return Err(Error::SingularInput("beta_yz is zero".into()));
    }
    Ok((1.0 - y_prev - y_t / (params.r * y_prev)) / params.beta_yz)
}

/// `z_t` recovered from `(y_t, y_{t-1})`: the hidden map applied to [`phi_oracle`].
pub fn h_compose_phi(y_t: f64, y_prev: f64, params: &LogisticSystemParams) -> Result<f64> {
    let z_prev = phi_oracle(y_t, y_prev, params)?;
    Ok(params.r * z_prev * (1.0 - z_prev))
}
