//! Every example runs to completion.

#[path = "../examples/ensembles_and_spectra.rs"]
mod ensembles_and_spectra;

#[path = "../examples/partitions.rs"]
mod partitions;

#[path = "../examples/ou_dynamics.rs"]
mod ou_dynamics;

#[path = "../examples/eigen_derivatives.rs"]
mod eigen_derivatives;

#[path = "../examples/resampling_paths.rs"]
mod resampling_paths;

#[path = "../examples/variance_identities.rs"]
mod variance_identities;

#[path = "../examples/decorrelation_experiment.rs"]
mod decorrelation_experiment;

#[test]
fn ensembles_and_spectra_runs() {
    ensembles_and_spectra::run().unwrap();
}

#[test]
fn partitions_runs() {
    partitions::run().unwrap();
}

#[test]
fn ou_dynamics_runs() {
    ou_dynamics::run().unwrap();
}

#[test]
fn eigen_derivatives_runs() {
    eigen_derivatives::run().unwrap();
}

#[test]
fn resampling_paths_runs() {
    resampling_paths::run().unwrap();
}

#[test]
fn variance_identities_runs() {
    variance_identities::run().unwrap();
}

#[test]
fn decorrelation_experiment_runs() {
    decorrelation_experiment::run().unwrap();
}
