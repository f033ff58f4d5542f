//! Flat binary network checkpoints.
//!
//! Layout (little-endian): magic `MLP1`, one activation byte, a `u32` layer
//! size count followed by the sizes, then every parameter as `f64` bits in
//! canonical order (per layer: weights row-major, then biases). Round-trips
//! are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use super::{Activation, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MLP1";

pub fn write_mlp<W: Write>(p: &Mlp, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    let act = match p.activation {
        Activation::Relu => 0u8,
        Activation::Tanh => 1u8,
    };
    out.write_all(&[act])?;
    out.write_all(&(p.sizes.len() as u32).to_le_bytes())?;
    for &s in &p.sizes {
        out.write_all(&(s as u32).to_le_bytes())?;
    }
    for l in 0..p.sizes.len() - 1 {
        for &v in &p.weights[l] {
            out.write_all(&v.to_le_bytes())?;
        }
        for &v in &p.biases[l] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_mlp<R: Read>(mut input: R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut act = [0u8; 1];
    input.read_exact(&mut act)?;
    let activation = match act[0] {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => return Err(Error::Checkpoint(format!("unknown activation tag {other}"))),
    };
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let n_sizes = u32::from_le_bytes(u32buf) as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(Error::Checkpoint(format!("implausible layer count {n_sizes}")));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        input.read_exact(&mut u32buf)?;
        let s = u32::from_le_bytes(u32buf) as usize;
        if s == 0 || s > 1 << 20 {
            return Err(Error::Checkpoint(format!("implausible layer width {s}")));
        }
        sizes.push(s);
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut f64buf)?;
            v.push(f64::from_le_bytes(f64buf));
        }
        Ok(v)
    };
    let mut weights = Vec::with_capacity(n_sizes - 1);
    let mut biases = Vec::with_capacity(n_sizes - 1);
    for l in 0..n_sizes - 1 {
        weights.push(read_f64s(sizes[l] * sizes[l + 1])?);
        biases.push(read_f64s(sizes[l + 1])?);
    }
    Ok(Mlp::from_parts(sizes, weights, biases, activation))
}

pub fn save_mlp<P: AsRef<Path>>(p: &Mlp, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_mlp(p, &mut buf)?;
    use std::io::Write as _;
    buf.flush()?;
    Ok(())
}

pub fn load_mlp<P: AsRef<Path>>(path: P) -> Result<Mlp> {
    let file = std::fs::File::open(path)?;
    read_mlp(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn test_round_trip_is_bit_exact() {
        let mut r = rng::seeded(21);
        for activation in [Activation::Relu, Activation::Tanh] {
            let p = Mlp::new(&[3, 16, 16, 2], activation, &mut r);
            let mut buf = Vec::new();
            write_mlp(&p, &mut buf).unwrap();
            let q = read_mlp(&buf[..]).unwrap();
            assert_eq!(p, q);
            for k in 0..p.param_count() {
                assert_eq!(p.param(k).to_bits(), q.param(k).to_bits());
            }
        }
    }

    #[test]
    fn test_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.mlp");
        let p = Mlp::new(&[2, 8, 1], Activation::Tanh, &mut rng::seeded(3));
        save_mlp(&p, &path).unwrap();
        assert_eq!(load_mlp(&path).unwrap(), p);
    }

    #[test]
    fn test_rejects_corrupt_headers() {
        let p = Mlp::new(&[2, 4, 1], Activation::Relu, &mut rng::seeded(5));
        let mut buf = Vec::new();
        write_mlp(&p, &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(read_mlp(&bad_magic[..]).is_err());

        let mut bad_act = buf.clone();
        bad_act[4] = 9;
        assert!(read_mlp(&bad_act[..]).is_err());

        let truncated = &buf[..buf.len() - 3];
        assert!(read_mlp(truncated).is_err());
    }
}
