//! Per-epoch curriculum weight λ(e).
//!
//! λ multiplies the easy (coarse binary) loss and `1 - λ` multiplies the hard
//! (three-class) loss. Every kind starts at λ = 1 on epoch 0 and is pinned to
//! λ = 0 from the switchover epoch `L` through the last epoch `E`:
//!
//! ```text
//! kind               0 <= e < L
//! cosine             (cos(e·π/L) + 1) / 2
//! linear             1 - e/L
//! concave_quadratic  1 - (e/L)^2
//! convex_quadratic   (e - L)^2 / L^2
//! exponential        ε^(e/L)
//! logarithm          ln(1 + L - e) / ln(1 + L)
//! step               1
//! constant_zero      0        (every epoch, baseline arm)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Cosine,
    Linear,
    ConcaveQuadratic,
    ConvexQuadratic,
    Exponential,
    Logarithm,
    Step,
    ConstantZero,
}

impl SchedulerKind {
    /// The seven curriculum kinds, excluding the baseline.
    pub const CURRICULUM: [SchedulerKind; 7] = [
        SchedulerKind::Cosine,
        SchedulerKind::Linear,
        SchedulerKind::ConcaveQuadratic,
        SchedulerKind::ConvexQuadratic,
        SchedulerKind::Exponential,
        SchedulerKind::Logarithm,
        SchedulerKind::Step,
    ];

    pub const ALL: [SchedulerKind; 8] = [
        SchedulerKind::Cosine,
        SchedulerKind::Linear,
        SchedulerKind::ConcaveQuadratic,
        SchedulerKind::ConvexQuadratic,
        SchedulerKind::Exponential,
        SchedulerKind::Logarithm,
        SchedulerKind::Step,
        SchedulerKind::ConstantZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Cosine => "cosine",
            SchedulerKind::Linear => "linear",
            SchedulerKind::ConcaveQuadratic => "concave_quadratic",
            SchedulerKind::ConvexQuadratic => "convex_quadratic",
            SchedulerKind::Exponential => "exponential",
            SchedulerKind::Logarithm => "logarithm",
            SchedulerKind::Step => "step",
            SchedulerKind::ConstantZero => "constant_zero",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SchedulerKind::ALL.iter().map(|k| k.name()).collect();
                Error::validation(format!(
                    "unknown scheduler kind `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// A scheduler kind with its switchover epoch `L`, total epochs `E` and the
/// exponential floor ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerSpec<T> {
    kind: SchedulerKind,
    switch_epoch: usize,
    total_epochs: usize,
    epsilon: T,
}

impl<T: Scalar> SchedulerSpec<T> {
    pub fn new(kind: SchedulerKind, switch_epoch: usize, total_epochs: usize) -> Result<Self> {
        Self::with_epsilon(kind, switch_epoch, total_epochs, T::lit(DEFAULT_EPSILON))
    }

    /// Uses `L = E / 2` (rounded down).
    pub fn with_default_switch(kind: SchedulerKind, total_epochs: usize) -> Result<Self> {
        Self::new(kind, total_epochs / 2, total_epochs)
    }

    pub fn with_epsilon(
        kind: SchedulerKind,
        switch_epoch: usize,
        total_epochs: usize,
        epsilon: T,
    ) -> Result<Self> {
        let spec = SchedulerSpec {
            kind,
            switch_epoch,
            total_epochs,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.switch_epoch < 1 {
            return Err(Error::validation(format!(
                "switchover epoch L must be at least 1, got {}",
                self.switch_epoch
            )));
        }
        if self.switch_epoch > self.total_epochs {
            return Err(Error::validation(format!(
                "switchover epoch L = {} exceeds total epochs E = {}",
                self.switch_epoch, self.total_epochs
            )));
        }
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return Err(Error::validation(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn switch_epoch(&self) -> usize {
        self.switch_epoch
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// λ for zero-based epoch `epoch`, held fixed for every batch of that epoch.
    pub fn lambda_at(&self, epoch: usize) -> Result<T> {
        self.validate()?;
        if epoch > self.total_epochs {
            return Err(Error::EpochOutOfRange {
                epoch,
                total: self.total_epochs,
            });
        }
        if self.kind == SchedulerKind::ConstantZero || epoch >= self.switch_epoch {
            return Ok(T::zero());
        }

        let one = T::one();
        let e = T::from_usize(epoch).unwrap();
        let l = T::from_usize(self.switch_epoch).unwrap();
        let r = e / l;
        let value = match self.kind {
            SchedulerKind::Cosine => ((r * T::PI()).cos() + one) / T::lit(2.0),
            SchedulerKind::Linear => one - r,
            SchedulerKind::ConcaveQuadratic => one - r * r,
            SchedulerKind::ConvexQuadratic => (e - l) * (e - l) / (l * l),
            SchedulerKind::Exponential => self.epsilon.powf(r),
            SchedulerKind::Logarithm => (one + l - e).ln() / (one + l).ln(),
            SchedulerKind::Step => one,
            SchedulerKind::ConstantZero => unreachable!(),
        };
        // rounding can leave values a hair outside [0, 1]
        Ok(value.max(T::zero()).min(one))
    }

    /// λ for every epoch `0..E`.
    pub fn schedule(&self) -> Result<Vec<T>> {
        (0..self.total_epochs).map(|e| self.lambda_at(e)).collect()
    }
}
