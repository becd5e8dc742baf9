//! Synthetic nonvolatile memristor with an odd-cubic current–voltage law.
//!
//! A device state is labelled by its secant resistance read at +100 mV. The
//! current is `i(v) = g1·v + g3·v³`, where `rho` is the share of the 100 mV
//! secant conductance carried by the cubic term.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};

/// Read voltage used to label a device state.
pub const READ_VOLTAGE: f64 = 0.1;
/// Lower edge of the designed operating window, in ohms.
pub const R_WINDOW_MIN: f64 = 1.0e5;
/// Upper edge of the designed operating window, in ohms.
pub const R_WINDOW_MAX: f64 = 1.1e6;
pub const DEFAULT_RHO: f64 = 0.5;

/// Nonvolatile device state: low-voltage (100 mV) resistance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorState {
    r_low_voltage: f64,
}

impl MemristorState {
    pub fn new(r_low_voltage: f64) -> Result<Self> {
        if !r_low_voltage.is_finite() || r_low_voltage <= 0.0 {
            return Err(invalid("r_low_voltage", "must be positive and finite"));
        }
        if !(R_WINDOW_MIN..=R_WINDOW_MAX).contains(&r_low_voltage) {
            return Err(invalid(
                "r_low_voltage",
                format!("{r_low_voltage} ohm outside operating window [{R_WINDOW_MIN}, {R_WINDOW_MAX}]"),
            ));
        }
        Ok(Self { r_low_voltage })
    }

    pub fn r_low_voltage(&self) -> f64 {
        self.r_low_voltage
    }

    pub fn read_conductance(&self) -> f64 {
        1.0 / self.r_low_voltage
    }
}

/// Odd-cubic current–voltage characteristic of a programmed device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorIV {
    /// Linear conductance coefficient, S.
    pub g1: f64,
    /// Cubic coefficient, A/V³.
    pub g3: f64,
    pub state: MemristorState,
}

impl MemristorIV {
    /// Builds the model whose 100 mV secant conductance equals the state's
    /// read conductance, splitting it `1 − rho` linear / `rho` cubic.
    pub fn build(state: MemristorState, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid("rho", format!("{rho} not in [0, 1)")));
        }
        // Re-validate: the state may have been deserialized.
        let state = MemristorState::new(state.r_low_voltage)?;
        let r = state.r_low_voltage;
        Ok(Self {
            g1: (1.0 - rho) / r,
            g3: rho / (r * READ_VOLTAGE * READ_VOLTAGE),
            state,
        })
    }

    /// Convenience for `build(MemristorState::new(r)?, rho)`.
    pub fn from_resistance(r_low_voltage: f64, rho: f64) -> Result<Self> {
        Self::build(MemristorState::new(r_low_voltage)?, rho)
    }

    pub fn current(&self, v: f64) -> Result<f64> {
        ensure_finite(v, "memristor voltage")?;
        Ok(self.current_unchecked(v))
    }

    /// Hot-path evaluation without the finiteness check.
    #[inline]
    pub fn current_unchecked(&self, v: f64) -> f64 {
        // v·(g1 + g3·v²) keeps i(−v) = −i(v) bit-exact.
        v * (self.g1 + self.g3 * (v * v))
    }

    pub fn slope(&self, v: f64) -> Result<f64> {
        ensure_finite(v, "memristor voltage")?;
        Ok(self.g1 + 3.0 * self.g3 * v * v)
    }
}
