//! Run the matrix Ornstein-Uhlenbeck process from a GOE draw and watch the
//! top eigenvector overlap decay while the spectrum stays stationary.

use eigenchaos::dynamics::ou_advance;
use eigenchaos::spectral::overlap_sq_spectra;
use eigenchaos::{eigh, sample_goe, Result, SeedStream, VarianceProfile};

pub fn run() -> Result<()> {
    let n = 100;
    let tau = 1.0;
    let profile = VarianceProfile::goe(n)?;
    let mut rng = SeedStream::new(11, 0).rng();
    let g0 = sample_goe(n, &mut rng);
    let s0 = eigh(&g0)?;
    let mut g = g0.clone();
    let dt = 0.05;
    println!("{:>6} {:>10} {:>10} {:>12}", "t", "λ_1", "λ_50", "⟨v_1(0),v_1(t)⟩²");
    for step in 0..=20 {
        if step > 0 {
            g = ou_advance(&g, dt, tau, &profile, &mut rng)?;
        }
        let s = eigh(&g)?;
        println!("{:>6.2} {:>10.4} {:>10.4} {:>12.4}", step as f64 * dt, s.value(1), s.value(50), overlap_sq_spectra(&s0, &s, 1)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
