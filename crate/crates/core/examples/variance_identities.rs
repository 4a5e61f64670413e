//! Monte Carlo checks of the variance identities: eigenvalue variance against
//! the OU overlap integral and against block-resampling covariances.

use eigenchaos::identities::{ou_time_grid, ou_variance_identity_check, pdbr_identity_and_ladder};
use eigenchaos::{entries_partition, Ensemble, Result};

pub fn run() -> Result<()> {
    let grid = ou_time_grid(1.0, 5.0, 9)?;
    let ou = ou_variance_identity_check(2, 1, 1.0, &grid, 20_000, 1)?;
    println!("OU: Var λ_1 = {:.4} ± {:.4}, overlap integral = {:.4} ± {:.4}, z = {:.2}", ou.lhs.mean, ou.lhs.std_error, ou.rhs.mean, ou.rhs.std_error, ou.z);

    let p = entries_partition(2)?;
    let (pdbr, ladder) = pdbr_identity_and_ladder(&Ensemble::goe(2), &p, 1, 20_000, 2)?;
    println!("block resampling: Var λ_1 = {:.4}, block sum = {:.4}, z = {:.2}", pdbr.lhs.mean, pdbr.rhs.mean, pdbr.z);
    let t: Vec<String> = ladder.t.iter().map(|e| format!("{:.4}", e.mean)).collect();
    println!("T_k ladder [{}], holds: {}", t.join(", "), ladder.holds());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
