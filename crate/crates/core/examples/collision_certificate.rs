//! Any continuous encoder into `R^(M-1)` maps two sets with `f*` values `+1`
//! and `-1` to the same latent point. Find such a pair and certify it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use setlab::approx::{find_collision, PhiSpec, SearchBudget};

fn main() -> setlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = 4;
    let phi = PhiSpec::random_piecewise_linear(m - 1, 8, &mut rng)?;
    let cert = find_collision(&phi, m, 1e-9, &SearchBudget::default(), 11)?;
    cert.verify(&phi)?;
    println!("z*  = {:?}", cert.z_star);
    println!(
        "x+  = {:?}  Phi = {:?}",
        cert.x_plus,
        phi.encode_set(&cert.x_plus)
    );
    println!(
        "x-  = {:?}  Phi = {:?}",
        cert.x_minus,
        phi.encode_set(&cert.x_minus)
    );
    println!(
        "residual {:.2e}, f* gap {}, {} starts",
        cert.phi_residual, cert.f_gap, cert.search_trace.starts
    );

    // The semicircle encoder of the three-element picture.
    let semi = PhiSpec::semicircle(64)?;
    let cert = find_collision(&semi, 3, 1e-9, &SearchBudget::default(), 0)?;
    println!(
        "semicircle: x+ = {:?}, x- = {:?}",
        cert.x_plus, cert.x_minus
    );
    println!("{}", cert.to_json()?);
    Ok(())
}
