//! Cramér-Rao bounds for uplink MIMO-OFDM positioning at a legitimate and an
//! unauthorized receiver, and transmit covariance design that minimizes the
//! legitimate bound while holding the unauthorized bound above a threshold.

extern crate openblas_src;

pub mod beampattern;
pub mod benchmarks;
pub mod channel;
pub mod conic;
pub mod design;
pub mod fim;
pub mod pdd;
pub mod scenario;
pub mod sweep;
