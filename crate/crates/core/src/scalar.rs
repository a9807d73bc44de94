//! Scalar abstraction for the numeric kernels.
//!
//! Everything numerical in this crate (orbit propagation, weighted least
//! squares, protection levels, the simplex solver) is written against the
//! [`Real`] trait so the kernels can run in `f32` or `f64`. The simulation
//! layer fixes `f64`; the crate root exports the matching type aliases.

use std::fmt;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numeric kernels are generic over.
pub trait Real: Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for
    /// the finite literals this crate feeds it.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal must convert")
    }

    /// The scalar as `f64`, for reporting and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
