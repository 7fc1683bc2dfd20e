//! Scalar abstraction for the whole crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    fn to_double(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive> Real for T {}
