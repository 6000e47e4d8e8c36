pub mod coeff;
pub mod constant;
pub mod exponent;
pub mod phase;
pub mod powersum;
pub mod quad;
pub mod model;
pub mod prepare;
pub mod integrate;
pub mod equidist;
pub mod asymptotics;
