//! A small OU decorrelation sweep through the experiment runner, written as
//! CSV plus metadata to a temporary directory.

use eigenchaos::experiments::{self, summary, AlphaSpec, ExperimentConfig, ExperimentKind};
use eigenchaos::Result;

pub fn run() -> Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::OuDecorrelation, vec![16, 32], vec![AlphaSpec::Index(1), AlphaSpec::Quantile(0.5)], 100, 42);
    cfg.params.controls = vec![0.0, 0.5, 1.0, 2.0];
    let res = experiments::run(&cfg)?;
    print!("{}", res.to_csv());
    println!("{}", summary(&res));
    let dir = std::env::temp_dir().join("eigenchaos-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("ou.csv");
    res.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
