//! Checkpoint container: versioned header (dimensions, τ, pq parameters,
//! embedding provider id) followed by named, shape-prefixed tensors of
//! little-endian f32.

use super::*;

use std::path::Path;

const MAGIC: &[u8; 8] = b"T2SQGCL\x01";
const VERSION: u32 = 1;

pub fn save_checkpoint(params: &EncoderParams, path: &Path) -> Result<(), GclError> {
    let meta = &params.meta;
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for dim in [meta.d_text, meta.d_h, meta.heads, meta.d_z, meta.pq_p, meta.pq_q] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&(meta.tau as f32).to_le_bytes());
    out.extend_from_slice(&(meta.provider_id.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.provider_id.as_bytes());

    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        match tensor {
            Tensor::Mat(m) => {
                out.extend_from_slice(&2u32.to_le_bytes());
                out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
                out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
                for x in m.iter() {
                    out.extend_from_slice(&(*x as f32).to_le_bytes());
                }
            }
            Tensor::Vec(v) => {
                out.extend_from_slice(&1u32.to_le_bytes());
                out.extend_from_slice(&(v.len() as u32).to_le_bytes());
                for x in v.iter() {
                    out.extend_from_slice(&(*x as f32).to_le_bytes());
                }
            }
        }
    }
    std::fs::write(path, &out)?;
    Ok(())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GclError> {
        if self.pos + n > self.data.len() {
            return Err(GclError::Format("truncated checkpoint".to_string()));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, GclError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, GclError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, GclError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| GclError::Format("bad utf-8 in checkpoint".to_string()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<EncoderParams, GclError> {
    let data = std::fs::read(path)?;
    let mut r = Reader { data: &data, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(GclError::Format("bad checkpoint magic".to_string()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(GclError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let d_text = r.u32()? as usize;
    let d_h = r.u32()? as usize;
    let heads = r.u32()? as usize;
    let d_z = r.u32()? as usize;
    let pq_p = r.u32()? as usize;
    let pq_q = r.u32()? as usize;
    let tau = f64::from(r.f32()?);
    let provider_id = r.string()?;
    let meta = EncoderMeta {
        d_text,
        d_h,
        heads,
        d_z,
        tau,
        pq_p,
        pq_q,
        provider_id,
    };
    let mut params = EncoderParams::init(meta, 0);

    let tensor_count = r.u32()? as usize;
    let mut mats: std::collections::HashMap<String, (Vec<usize>, Vec<f64>)> =
        std::collections::HashMap::new();
    for _ in 0..tensor_count {
        let name = r.string()?;
        let ndim = r.u32()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32()? as usize);
        }
        let len: usize = dims.iter().product();
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f64::from(r.f32()?));
        }
        mats.insert(name, (dims, values));
    }

    let assign_mat = |target: &mut Array2<f64>, name: &str,
                      mats: &std::collections::HashMap<String, (Vec<usize>, Vec<f64>)>|
     -> Result<(), GclError> {
        let (dims, values) = mats
            .get(name)
            .ok_or_else(|| GclError::Format(format!("missing tensor {name}")))?;
        if dims.len() != 2 || dims[0] != target.nrows() || dims[1] != target.ncols() {
            return Err(GclError::Format(format!("tensor {name} has wrong shape")));
        }
        *target = Array2::from_shape_vec((dims[0], dims[1]), values.clone())
            .map_err(|e| GclError::Format(e.to_string()))?;
        Ok(())
    };
    let assign_vec = |target: &mut Array1<f64>, name: &str,
                      mats: &std::collections::HashMap<String, (Vec<usize>, Vec<f64>)>|
     -> Result<(), GclError> {
        let (dims, values) = mats
            .get(name)
            .ok_or_else(|| GclError::Format(format!("missing tensor {name}")))?;
        if dims.len() != 1 || dims[0] != target.len() {
            return Err(GclError::Format(format!("tensor {name} has wrong shape")));
        }
        *target = Array1::from_vec(values.clone());
        Ok(())
    };

    for (li, layer) in [(1usize, &mut params.layer1), (2, &mut params.layer2)] {
        for (hi, head) in layer.heads.iter_mut().enumerate() {
            assign_mat(&mut head.weight, &format!("layer{li}.head{hi}.weight"), &mats)?;
            assign_vec(&mut head.attn_src, &format!("layer{li}.head{hi}.attn_src"), &mats)?;
            assign_vec(&mut head.attn_dst, &format!("layer{li}.head{hi}.attn_dst"), &mats)?;
        }
    }
    assign_mat(&mut params.projection.w1, "projection.w1", &mats)?;
    assign_vec(&mut params.projection.b1, "projection.b1", &mats)?;
    assign_mat(&mut params.projection.w2, "projection.w2", &mats)?;
    assign_vec(&mut params.projection.b2, "projection.b2", &mats)?;
    Ok(params)
}
