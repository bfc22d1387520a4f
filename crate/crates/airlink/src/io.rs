//! Model checkpoint format "AIRN v1".
//!
//! Little-endian layout: magic `AIRN`, u32 version = 1, u32 layer count,
//! then per layer u32 out, u32 in, u8 activation tag (0 identity, 1 relu),
//! the weights row-major as f32, then the biases as f32. Parameters are
//! stored at f32 precision and widened to f64 on load.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, Layer, Matrix, Network};

const MODEL_MAGIC: &[u8; 4] = b"AIRN";
const MODEL_VERSION: u32 = 1;

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1,
    }
}

fn activation_from_tag(t: u8) -> Result<Activation> {
    match t {
        0 => Ok(Activation::Identity),
        1 => Ok(Activation::Relu),
        other => Err(Error::Format(format!("unknown activation tag {other}"))),
    }
}

pub fn write_model<W: Write>(net: &Network, mut w: W) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(net.layer_count() as u32).to_le_bytes())?;
    for layer in net.layers() {
        w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
        w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
        w.write_all(&[activation_tag(layer.activation)])?;
        for &v in layer.weights.as_slice() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        for &v in &layer.bias {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<Network> {
    fn bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)?;
        Ok(buf)
    }
    let magic: [u8; 4] = bytes(&mut r)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("bad model magic".into()));
    }
    let version = u32::from_le_bytes(bytes(&mut r)?);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let layer_count = u32::from_le_bytes(bytes(&mut r)?) as usize;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let out = u32::from_le_bytes(bytes(&mut r)?) as usize;
        let input = u32::from_le_bytes(bytes(&mut r)?) as usize;
        let activation = activation_from_tag(bytes::<1>(&mut r)?[0])?;
        let mut weights = Matrix::zeros(out, input);
        for v in weights.as_mut_slice() {
            *v = f32::from_le_bytes(bytes(&mut r)?) as f64;
        }
        let mut bias = vec![0.0; out];
        for v in &mut bias {
            *v = f32::from_le_bytes(bytes(&mut r)?) as f64;
        }
        layers.push(Layer {
            weights,
            bias,
            activation,
        });
    }
    Network::new(layers)
}

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    write_model(net, &mut file)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Network> {
    let file = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(file))
}
