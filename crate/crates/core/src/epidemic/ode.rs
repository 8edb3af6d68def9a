//! Homogeneous-mixing SI/SIS reference model with the population normalized to 1:
//!
//! ```text
//! ds/dt = -β s i + γ i
//! di/dt = -ds/dt
//! ```
//!
//! Integrated with classical fixed-step RK4.

use super::{EpidemicError, EpidemicParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState<T> {
    pub s: T,
    pub i: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdePoint<T> {
    pub t: T,
    pub state: OdeState<T>,
}

fn derivative<T: Scalar>(beta: T, gamma: T, y: OdeState<T>) -> OdeState<T> {
    let ds = -beta * y.s * y.i + gamma * y.i;
    OdeState { s: ds, i: -ds }
}

fn axpy<T: Scalar>(y: OdeState<T>, h: T, k: OdeState<T>) -> OdeState<T> {
    OdeState { s: y.s + h * k.s, i: y.i + h * k.i }
}

/// Trajectory from `t = 0` to `horizon`, starting at `i = params.i0`.
///
/// The horizon is split into `ceil(horizon / dt)` equal steps, so the actual
/// step never exceeds `dt` and the last point lands exactly on `horizon`.
pub fn ode_reference<T: Scalar>(
    params: &EpidemicParams<T>,
    horizon: T,
    dt: T,
) -> Result<Vec<OdePoint<T>>, EpidemicError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(EpidemicError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(EpidemicError::InvalidParameter(format!("horizon must be finite and ≥ 0, got {horizon}")));
    }
    let steps = (horizon / dt).ceil().to_usize().unwrap_or(0);
    let h = if steps == 0 { T::zero() } else { horizon / T::from_count(steps) };
    let (beta, gamma) = (params.beta, params.gamma);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);

    let mut y = OdeState { s: T::one() - params.i0, i: params.i0 };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(OdePoint { t: T::zero(), state: y });
    for n in 1..=steps {
        let k1 = derivative(beta, gamma, y);
        let k2 = derivative(beta, gamma, axpy(y, half * h, k1));
        let k3 = derivative(beta, gamma, axpy(y, half * h, k2));
        let k4 = derivative(beta, gamma, axpy(y, h, k3));
        let ds = (k1.s + two * k2.s + two * k3.s + k4.s) * sixth;
        // di = -ds exactly, which keeps s + i = 1 up to rounding
        let i = y.i - h * ds;
        y = OdeState { s: T::one() - i, i };
        out.push(OdePoint { t: h * T::from_count(n), state: y });
    }
    Ok(out)
}
