//! Exact first and second eigenvalue derivatives checked against central
//! differences on a single GOE draw.

use eigenchaos::eigen::eigenvalue;
use eigenchaos::spectral::{eig_grad, EigenHessian};
use eigenchaos::{eigh, sample_goe, Result, SeedStream, SymmetricMatrix};

pub fn run() -> Result<()> {
    let n = 6;
    let alpha = 2;
    let mut rng = SeedStream::new(5, 0).rng();
    let x = sample_goe(n, &mut rng);
    let spec = eigh(&x)?;
    let grad = eig_grad(&spec, alpha)?;

    let h = 1e-6;
    let mut e = SymmetricMatrix::zeros(n);
    e.set(0, 3, 1.0);
    let fd = (eigenvalue(&x.lincomb(1.0, &e, h)?, alpha)? - eigenvalue(&x.lincomb(1.0, &e, -h)?, alpha)?) / (2.0 * h);
    println!("∂λ_2 along E_03: formula {:.8}, difference {:.8}", grad.get(0, 3) + grad.get(3, 0), fd);

    let d = sample_goe(n, &mut rng);
    let hess = EigenHessian::new(&spec, alpha)?;
    let h = 1e-4;
    let fd2 = (eigenvalue(&x.lincomb(1.0, &d, h)?, alpha)? - 2.0 * spec.value(alpha) + eigenvalue(&x.lincomb(1.0, &d, -h)?, alpha)?) / (h * h);
    println!("second derivative along a random direction: formula {:.6}, difference {:.6}", hess.directional(&d), fd2);
    println!("Hessian entry ∂_01 ∂_23 λ_2 = {:.6}", hess.entry((0, 1), (2, 3)));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
