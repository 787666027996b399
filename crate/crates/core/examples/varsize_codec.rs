//! One latent space for every set size up to `m_max`.

use setlab::sumdec::{varsize_decode, varsize_encode, VarSizeCodec};

fn main() -> setlab::Result<()> {
    let codec = VarSizeCodec::new(4)?;
    for x in [
        vec![],
        vec![0.5],
        vec![0.0, 1.0],
        vec![-0.3, 0.8, 0.8],
        vec![0.1, -0.2, 0.3, -0.4],
    ] {
        let latent = varsize_encode(&x, &codec)?;
        let back = varsize_decode(&latent, &codec)?;
        println!("{x:?} -> {:?} -> {:?}", latent.coords(), back.coords());
    }
    Ok(())
}
