//! Encode a multiset by its power sums, decode it back, and evaluate a set
//! function through the latent space.

use setlab::sets::{f_star, SetInput};
use setlab::sumdec::{exact_eval, power_sum_decode, power_sum_encode};

fn main() -> setlab::Result<()> {
    let x = SetInput::new(vec![0.2, 0.9, 0.4, -0.7])?;
    let latent = power_sum_encode(&x)?;
    println!("x           = {:?}", x.values());
    println!("power sums  = {:?}", latent.coords());

    let back = power_sum_decode(&latent, x.len())?;
    println!("decoded     = {:?}", back.coords());

    // rho = f o decode represents any set function exactly.
    let via_latent = exact_eval(|z| setlab::sets::f_star_sorted(z.coords()), &x)?;
    println!("f*(x)       = {} (direct {})", via_latent, f_star(&x));

    // Two elements closer than double precision power sums can resolve on
    // their own still come back apart.
    let close = SetInput::new(vec![0.6081400, 0.6081511, 0.61, 0.6, -0.3, 0.9, 0.1, -0.95])?;
    let back = power_sum_decode(&power_sum_encode(&close)?, close.len())?;
    println!("close pair  = {:?}", &back.coords()[2..4]);
    Ok(())
}
