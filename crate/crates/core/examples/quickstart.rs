//! Recover a separated 8-sparse signal from 128 Gaussian measurements.

use sscosamp_core::projection::Backend;
use sscosamp_core::recovery::{recover, RecoveryConfig};
use sscosamp_core::sensing::{snr_db, CoefficientModel, InstanceParams, MeasurementKind, SensingInstance, SignalStructure};
use sscosamp_core::Dictionary;

fn main() -> sscosamp_core::Result<()> {
    let dict = Dictionary::build(256, 1024)?;
    let params = InstanceParams {
        m: 128,
        k: 8,
        structure: SignalStructure::Separated { h_min: 16 },
        coefficients: CoefficientModel::Gaussian,
        measurement: MeasurementKind::Gaussian,
        epsilon: 0.0,
    };
    let instance = SensingInstance::generate(&dict, &params, 42)?;
    println!("true support {:?}", instance.alpha.support.as_slice());
    for backend in [Backend::Omp, Backend::Cosamp, Backend::L1] {
        let (x_hat, state) = recover(&instance.a, &dict, &instance.y, &RecoveryConfig::new(8, backend))?;
        println!(
            "{backend:>6}: snr {:7.1} dB after {} iterations, support {:?}",
            snr_db(&instance.x_true, &x_hat)?,
            state.iteration,
            state.support.as_slice()
        );
    }
    Ok(())
}
