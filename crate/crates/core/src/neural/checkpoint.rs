use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ClassifierModel, NetworkConfig, NeuralError};

pub const NLCM_MAGIC: &[u8; 4] = b"NLCM";
pub const NLCM_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: NetworkConfig,
    rng_seed: u64,
    parameter_count: usize,
}

/// `NLCM`, u32 version, u32 header length, JSON header, f32 parameters (all LE).
pub fn write_checkpoint<W: Write>(model: &ClassifierModel, mut w: W) -> std::io::Result<()> {
    let header = serde_json::to_vec(&Header {
        config: model.config().clone(),
        rng_seed: model.rng_seed(),
        parameter_count: model.parameter_count(),
    })
    .expect("header serializes");
    w.write_all(NLCM_MAGIC)?;
    w.write_all(&NLCM_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for &p in model.params() {
        w.write_all(&(p as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ClassifierModel, NeuralError> {
    let err = |m: String| NeuralError::Checkpoint(m);
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4).map_err(|e| err(e.to_string()))?;
    if &buf4 != NLCM_MAGIC {
        return Err(err("bad magic".into()));
    }
    r.read_exact(&mut buf4).map_err(|e| err(e.to_string()))?;
    let version = u32::from_le_bytes(buf4);
    if version != NLCM_VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    r.read_exact(&mut buf4).map_err(|e| err(e.to_string()))?;
    let mut header = vec![0u8; u32::from_le_bytes(buf4) as usize];
    r.read_exact(&mut header).map_err(|e| err(e.to_string()))?;
    let header: Header = serde_json::from_slice(&header).map_err(|e| err(e.to_string()))?;
    let mut params = Vec::with_capacity(header.parameter_count);
    for _ in 0..header.parameter_count {
        r.read_exact(&mut buf4).map_err(|e| err(format!("truncated parameters: {e}")))?;
        params.push(f32::from_le_bytes(buf4) as f64);
    }
    if r.read(&mut buf4).map_err(|e| err(e.to_string()))? != 0 {
        return Err(err("trailing bytes".into()));
    }
    ClassifierModel::from_params(header.config, params, header.rng_seed)
}

#[cfg(test)]
mod tests {
    use super::super::{StreamKind, StreamSpec};
    use super::*;

    #[test]
    fn round_trip_is_f32_exact() {
        let cfg = NetworkConfig::new(vec![
            StreamSpec::new(StreamKind::AbstractText, 3).with_width(4),
            StreamSpec::new(StreamKind::CpcAvg, 2).with_width(4),
        ]);
        let m = ClassifierModel::init(cfg, 9).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"NLCM");
        let back = read_checkpoint(&bytes[..]).unwrap();
        assert_eq!(back.config(), m.config());
        for (a, b) in back.params().iter().zip(m.params()) {
            assert_eq!(*a, *b as f32 as f64);
        }
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(again, bytes);
        assert!(read_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(read_checkpoint(&bytes[..]).is_err());
    }
}
