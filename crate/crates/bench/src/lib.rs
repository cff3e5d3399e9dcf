//! Shared fixtures for the benchmarks.

use sscosamp_core::sensing::{
    CoefficientModel, InstanceParams, MeasurementKind, SensingInstance, SignalStructure,
};
use sscosamp_core::{CVector, Dictionary, Result};

pub const N: usize = 256;
pub const D: usize = 1024;
pub const K: usize = 8;

pub fn dictionary() -> Dictionary {
    Dictionary::build(N, D).expect("valid dimensions")
}

/// Noiseless instance at the desk-scale dimensions.
pub fn instance(dict: &Dictionary, m: usize, structure: SignalStructure, seed: u64) -> Result<SensingInstance> {
    let params = InstanceParams {
        m,
        k: K,
        structure,
        coefficients: CoefficientModel::Gaussian,
        measurement: MeasurementKind::Gaussian,
        epsilon: 0.0,
    };
    SensingInstance::generate(dict, &params, seed)
}

/// `x = D alpha` for a `K`-sparse `alpha` with the given structure.
pub fn sparse_signal(dict: &Dictionary, structure: SignalStructure, seed: u64) -> CVector {
    instance(dict, N, structure, seed).expect("feasible structure").x_true
}
