//! Airy and Hermite functions: the transverse and tangential factors of the
//! low-lying modes.

pub(crate) mod airy;
mod hermite;

pub use airy::{airy_ai, airy_mode, airy_mode_norm, airy_zero, AiryValue, AIRY_RANGE, AIRY_ZERO_MAX};
pub use hermite::{hermite_function, hermite_mode, HermiteSpec, MAX_HERMITE_INDEX};
