use std::path::Path;

use super::{ArchitectureConfig, ConvFilterParams, ConvLayer};
use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SCNN";
const VERSION: u32 = 1;

/// Provenance stored alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelMeta {
    pub seed: u64,
    pub config_digest: [u8; 32],
}

pub(crate) fn encode_model(params: &ConvFilterParams, meta: &ModelMeta) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    let a = &params.arch;
    w.u64(a.n_hidden_layers as u64);
    w.u64(a.kernel_size as u64);
    w.u64(a.hidden_channels as u64);
    w.f64(a.leaky_slope);
    w.u64(a.input_length as u64);
    w.u8(a.residual as u8);
    w.u64(meta.seed);
    w.bytes(&meta.config_digest);
    w.u64(params.layers.len() as u64);
    for l in &params.layers {
        w.u64(l.out_channels as u64);
        w.u64(l.in_channels as u64);
        w.u64(l.kernel_size as u64);
        w.f64s(&l.weights);
    }
    w.buf
}

pub(crate) fn decode_model(data: &[u8]) -> Result<(ConvFilterParams, ModelMeta)> {
    let mut r = Reader::new(data, "model");
    r.expect_magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch { expected: VERSION, found: version });
    }
    let arch = ArchitectureConfig {
        n_hidden_layers: r.u64()? as usize,
        kernel_size: r.u64()? as usize,
        hidden_channels: r.u64()? as usize,
        leaky_slope: r.f64()?,
        input_length: r.u64()? as usize,
        residual: match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Corrupt(format!("model: invalid residual flag {b}"))),
        },
    };
    arch.validate().map_err(|e| Error::Corrupt(format!("model: {e}")))?;
    let seed = r.u64()?;
    let mut config_digest = [0u8; 32];
    config_digest.copy_from_slice(r.bytes(32)?);
    let n_layers = r.u64()? as usize;
    let shapes = arch.layer_shapes();
    if n_layers != shapes.len() {
        return Err(Error::Corrupt(format!(
            "model: {n_layers} layers stored but the architecture has {}",
            shapes.len()
        )));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for (i, &(o, c)) in shapes.iter().enumerate() {
        let (so, sc, sk) = (r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
        if (so, sc, sk) != (o, c, arch.kernel_size) {
            return Err(Error::Corrupt(format!("model: layer {i} has shape {so}x{sc}x{sk}")));
        }
        let weights = r.f64s(o * c * sk)?;
        layers.push(ConvLayer { out_channels: o, in_channels: c, kernel_size: sk, weights });
    }
    r.finish()?;
    let params = ConvFilterParams { arch, layers };
    if !params.is_finite() {
        return Err(Error::Corrupt("model: non-finite weights".into()));
    }
    Ok((params, ModelMeta { seed, config_digest }))
}

pub fn save_model(params: &ConvFilterParams, meta: &ModelMeta, path: &Path) -> Result<()> {
    write_file(path, &encode_model(params, meta))
}

pub fn load_model(path: &Path) -> Result<(ConvFilterParams, ModelMeta)> {
    decode_model(&read_file(path)?)
}

/// Loads a model and checks it against an expected architecture, naming
/// the first layer whose shape differs.
pub fn load_model_expecting(path: &Path, expected: &ArchitectureConfig) -> Result<(ConvFilterParams, ModelMeta)> {
    let (params, meta) = load_model(path)?;
    let want = expected.layer_shapes();
    let have = params.arch.layer_shapes();
    for i in 0..want.len().max(have.len()) {
        let w = want.get(i).map(|s| (s.0, s.1, expected.kernel_size));
        let h = params.layers.get(i).map(|l| (l.out_channels, l.in_channels, l.kernel_size));
        if w != h {
            let show = |s: Option<(usize, usize, usize)>| match s {
                Some((o, c, k)) => format!("{o}x{c}x{k}"),
                None => "no layer".to_string(),
            };
            return Err(Error::ShapeMismatch { layer: format!("layer {i}"), expected: show(w), found: show(h) });
        }
    }
    if params.arch != *expected {
        return Err(Error::ShapeMismatch {
            layer: "architecture".into(),
            expected: format!("{expected:?}"),
            found: format!("{:?}", params.arch),
        });
    }
    Ok((params, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let p = ConvFilterParams::init(ArchitectureConfig::desk(), 4).unwrap();
        let meta = ModelMeta { seed: 4, config_digest: [7; 32] };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&p, &meta, &path).unwrap();
        let (q, m) = load_model(&path).unwrap();
        assert_eq!(m, meta);
        let x: Vec<f64> = (0..36).map(|i| (i as f64 * 0.3).sin()).collect();
        assert_eq!(p.forward(&x).unwrap(), q.forward(&x).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let p = ConvFilterParams::init(ArchitectureConfig::desk(), 4).unwrap();
        let bytes = encode_model(&p, &ModelMeta::default());
        for cut in [3, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_model(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_model(&bad), Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn deeper_model_into_shallower_expectation_names_layer() {
        let five = ArchitectureConfig { n_hidden_layers: 5, ..ArchitectureConfig::desk() };
        let p = ConvFilterParams::init(five, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&p, &ModelMeta::default(), &path).unwrap();
        match load_model_expecting(&path, &ArchitectureConfig::desk()) {
            Err(Error::ShapeMismatch { layer, .. }) => assert_eq!(layer, "layer 3"),
            other => panic!("{other:?}"),
        }
    }
}
