//! The cube-to-simplex map `nu` and the symmetries that force `Gamma` to vanish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setlab::approx::{gamma, left_shift, nu, PhiSpec, ShiftedPhi};
use setlab::sets::SimplexPoint;

fn main() -> setlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 3;
    let phi = PhiSpec::random_piecewise_linear(n, 10, &mut rng)?;
    let g = ShiftedPhi::new(&phi);

    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    println!("x = {x:?}\nnu(x) = {:?}", nu(&x)?.coords());

    // On the cube surface, Gamma o nu is odd.
    let mut s = x.clone();
    s[1] = 1.0;
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    let a = g.gamma(nu(&s)?.coords());
    let b = g.gamma(nu(&neg)?.coords());
    println!("surface point {s:?}\n  Gamma(nu(x))  = {a:?}\n  Gamma(nu(-x)) = {b:?}");

    // The left shift negates Gamma on the face x_1 = 1.
    let z = SimplexPoint::new(vec![1.0, 0.3, -0.6])?;
    let shifted = left_shift(&z)?;
    println!("alpha{:?} = {:?}", z.coords(), shifted.coords());
    println!(
        "  Gamma = {:?}\n  Gamma(alpha) = {:?}",
        gamma(&z, &phi)?.coords(),
        gamma(&shifted, &phi)?.coords()
    );
    Ok(())
}
