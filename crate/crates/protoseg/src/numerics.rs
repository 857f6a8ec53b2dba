//! Dense-tensor arithmetic and the neural forward-pass kernels used by
//! every other module: linear maps, layer normalization, multi-head
//! attention, MLP, activations, bilinear resize, cosine similarity.
//!
//! Everything is `f64`, row-major, and allocates its output; there is
//! no in-place mutation of inputs anywhere.

use crate::error::{Error, Result};

/// Norms below this are treated as zero when normalizing directions.
pub const NORM_FLOOR: f64 = 1e-12;

/// Epsilon used by every layer normalization in the project.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Row-major dense tensor of `f64` scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        let expect: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "tensor shape {shape:?} has a zero dimension"
            )));
        }
        if expect != data.len() {
            return Err(Error::Dimension(format!(
                "tensor shape {shape:?} wants {expect} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn full(shape: Vec<usize>, value: f64) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    /// m×m identity matrix.
    pub fn identity(m: usize) -> Tensor {
        let mut t = Tensor::zeros(vec![m, m]);
        for i in 0..m {
            t.data[i * m + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[self.shape.len() - 1]
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn at2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.shape[1] + j]
    }

    pub fn set2(&mut self, i: usize, j: usize, v: f64) {
        let c = self.shape[1];
        self.data[i * c + j] = v;
    }

    /// Element of a C×h×w volume.
    pub fn at3(&self, c: usize, y: usize, x: usize) -> f64 {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[c * h * w + y * w + x]
    }

    pub fn set3(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[c * h * w + y * w + x] = v;
    }

    /// Channel vector at pixel (y, x) of a C×h×w volume.
    pub fn pixel_channels(&self, y: usize, x: usize, out: &mut Vec<f64>) {
        let (c, h, w) = (self.shape[0], self.shape[1], self.shape[2]);
        out.clear();
        for ch in 0..c {
            out.push(self.data[ch * h * w + y * w + x]);
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|v| v * s)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Standard matrix product of two 2-D tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape.len() != 2 || b.shape.len() != 2 {
        return Err(Error::Dimension(format!(
            "matmul wants 2-D tensors, got {:?} and {:?}",
            a.shape, b.shape
        )));
    }
    let (m, k) = (a.shape[0], a.shape[1]);
    let (k2, n) = (b.shape[0], b.shape[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: {:?} x {:?}",
            a.shape, b.shape
        )));
    }
    let mut out = Tensor::zeros(vec![m, n]);
    for i in 0..m {
        for p in 0..k {
            let av = a.data[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    Ok(out)
}

/// Row-wise softmax, computed shift-invariantly (row max subtracted).
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let (m, n) = (x.shape[0], x.shape[1]);
    let mut out = Tensor::zeros(vec![m, n]);
    for i in 0..m {
        let row = x.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for j in 0..n {
            let e = (row[j] - max).exp();
            out.data[i * n + j] = e;
            sum += e;
        }
        for j in 0..n {
            out.data[i * n + j] /= sum;
        }
    }
    out
}

/// Per-row normalization to zero mean / unit variance, then affine.
pub fn layer_norm(x: &Tensor, scale: &[f64], shift: &[f64], eps: f64) -> Result<Tensor> {
    let (m, c) = (x.shape[0], x.shape[1]);
    if scale.len() != c || shift.len() != c {
        return Err(Error::Dimension(format!(
            "layer_norm: row width {c} but scale/shift lengths {}/{}",
            scale.len(),
            shift.len()
        )));
    }
    let mut out = Tensor::zeros(vec![m, c]);
    for i in 0..m {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + eps).sqrt();
        for j in 0..c {
            out.data[i * c + j] = (row[j] - mean) * inv * scale[j] + shift[j];
        }
    }
    Ok(out)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_tensor(x: &Tensor) -> Tensor {
    x.map(sigmoid)
}

pub fn relu_tensor(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Cosine of the angle between two equal-length vectors.
///
/// A vector with norm below [`NORM_FLOOR`] carries no direction, so the
/// similarity is defined as 0 in that case.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    let nu = nu.sqrt();
    let nv = nv.sqrt();
    if nu < NORM_FLOOR || nv < NORM_FLOOR {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// Bilinear interpolation of a C×h×w volume to C×out_h×out_w,
/// align-corners-false convention, edge samples clamped.
pub fn bilinear_resize(x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if x.shape.len() != 3 {
        return Err(Error::Dimension(format!(
            "bilinear_resize wants C×h×w, got {:?}",
            x.shape
        )));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension("bilinear_resize: zero target size".into()));
    }
    let (c, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    let mut out = Tensor::zeros(vec![c, out_h, out_w]);
    let sy = h as f64 / out_h as f64;
    let sx = w as f64 / out_w as f64;
    for oy in 0..out_h {
        let fy = (oy as f64 + 0.5) * sy - 0.5;
        let y0 = fy.floor();
        let ty = fy - y0;
        let y0c = (y0 as isize).clamp(0, h as isize - 1) as usize;
        let y1c = (y0 as isize + 1).clamp(0, h as isize - 1) as usize;
        for ox in 0..out_w {
            let fx = (ox as f64 + 0.5) * sx - 0.5;
            let x0 = fx.floor();
            let tx = fx - x0;
            let x0c = (x0 as isize).clamp(0, w as isize - 1) as usize;
            let x1c = (x0 as isize + 1).clamp(0, w as isize - 1) as usize;
            for ch in 0..c {
                let v00 = x.at3(ch, y0c, x0c);
                let v01 = x.at3(ch, y0c, x1c);
                let v10 = x.at3(ch, y1c, x0c);
                let v11 = x.at3(ch, y1c, x1c);
                let top = v00 * (1.0 - tx) + v01 * tx;
                let bot = v10 * (1.0 - tx) + v11 * tx;
                out.set3(ch, oy, ox, top * (1.0 - ty) + bot * ty);
            }
        }
    }
    Ok(out)
}

/// Weights of an affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// out×in weight matrix.
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn new(weight: Tensor, bias: Vec<f64>) -> Result<LinearParams> {
        if weight.shape().len() != 2 {
            return Err(Error::Config("linear weight must be 2-D".into()));
        }
        if weight.shape()[0] != bias.len() {
            return Err(Error::Config(format!(
                "linear weight rows {} != bias length {}",
                weight.shape()[0],
                bias.len()
            )));
        }
        Ok(LinearParams { weight, bias })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> LinearParams {
        LinearParams {
            weight: Tensor::zeros(vec![out_dim, in_dim]),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn identity(dim: usize) -> LinearParams {
        LinearParams {
            weight: Tensor::identity(dim),
            bias: vec![0.0; dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    /// Apply to a single vector.
    pub fn apply_vec(&self, x: &[f64], out: &mut Vec<f64>) {
        let (o, i) = (self.out_dim(), self.in_dim());
        debug_assert_eq!(x.len(), i);
        out.clear();
        for r in 0..o {
            let wrow = &self.weight.data()[r * i..(r + 1) * i];
            let mut acc = self.bias[r];
            for p in 0..i {
                acc += wrow[p] * x[p];
            }
            out.push(acc);
        }
    }

    /// Apply independently to every row of an m×in tensor.
    pub fn apply_rows(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.in_dim() {
            return Err(Error::Dimension(format!(
                "linear map wants row width {}, got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        let m = x.rows();
        let mut out = Tensor::zeros(vec![m, self.out_dim()]);
        let mut buf = Vec::with_capacity(self.out_dim());
        for r in 0..m {
            self.apply_vec(x.row(r), &mut buf);
            out.data_mut()[r * buf.len()..(r + 1) * buf.len()].copy_from_slice(&buf);
        }
        Ok(out)
    }

    /// Apply per pixel across a C_in×h×w volume (a 1×1 convolution).
    pub fn apply_volume(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 3 {
            return Err(Error::Dimension(format!(
                "1x1 map wants C×h×w, got {:?}",
                x.shape()
            )));
        }
        if x.shape()[0] != self.in_dim() {
            return Err(Error::Config(format!(
                "1x1 map wants {} input channels, volume has {}",
                self.in_dim(),
                x.shape()[0]
            )));
        }
        let (h, w) = (x.shape()[1], x.shape()[2]);
        let mut out = Tensor::zeros(vec![self.out_dim(), h, w]);
        let mut px = Vec::with_capacity(self.in_dim());
        let mut py = Vec::with_capacity(self.out_dim());
        for y in 0..h {
            for xx in 0..w {
                x.pixel_channels(y, xx, &mut px);
                self.apply_vec(&px, &mut py);
                for (c, &v) in py.iter().enumerate() {
                    out.set3(c, y, xx, v);
                }
            }
        }
        Ok(out)
    }
}

/// Per-feature affine parameters of one layer normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl LayerNormParams {
    pub fn identity(dim: usize) -> LayerNormParams {
        LayerNormParams {
            scale: vec![1.0; dim],
            shift: vec![0.0; dim],
        }
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        layer_norm(x, &self.scale, &self.shift, LAYER_NORM_EPS)
    }
}

/// Two linear maps with a ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: LinearParams,
    pub output: LinearParams,
}

impl MlpParams {
    pub fn apply_rows(&self, x: &Tensor) -> Result<Tensor> {
        let h = relu_tensor(&self.hidden.apply_rows(x)?);
        self.output.apply_rows(&h)
    }
}

/// Projections of one attention head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub query: LinearParams,
    pub key: LinearParams,
    pub value: LinearParams,
}

/// Parameters of the single transformer block used by the prototype
/// scorer: two layer norms, multi-head self-attention, and an MLP.
/// There are no positional embeddings anywhere; the block is
/// permutation-equivariant over input rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub heads: Vec<HeadParams>,
    pub output: LinearParams,
    pub norm1: LayerNormParams,
    pub norm2: LayerNormParams,
    pub mlp: MlpParams,
}

impl AttentionParams {
    /// Model width, from the output projection.
    pub fn width(&self) -> usize {
        self.output.out_dim()
    }

    pub fn head_dim(&self) -> usize {
        self.width() / self.heads.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.width();
        let h = self.heads.len();
        if h == 0 {
            return Err(Error::Config("attention needs at least one head".into()));
        }
        if c % h != 0 {
            return Err(Error::Config(format!(
                "model width {c} not divisible by head count {h}"
            )));
        }
        let d = c / h;
        for (i, head) in self.heads.iter().enumerate() {
            for (name, lin) in [
                ("query", &head.query),
                ("key", &head.key),
                ("value", &head.value),
            ] {
                if lin.in_dim() != c || lin.out_dim() != d {
                    return Err(Error::Config(format!(
                        "head {i} {name} projection is {}x{}, want {d}x{c}",
                        lin.out_dim(),
                        lin.in_dim()
                    )));
                }
            }
        }
        if self.output.in_dim() != c {
            return Err(Error::Config(format!(
                "output projection input width {} != model width {c}",
                self.output.in_dim()
            )));
        }
        if self.norm1.scale.len() != c
            || self.norm1.shift.len() != c
            || self.norm2.scale.len() != c
            || self.norm2.shift.len() != c
        {
            return Err(Error::Config("layer norm width != model width".into()));
        }
        if self.mlp.hidden.in_dim() != c || self.mlp.output.out_dim() != c {
            return Err(Error::Config("mlp widths inconsistent with model width".into()));
        }
        if self.mlp.hidden.out_dim() != self.mlp.output.in_dim() {
            return Err(Error::Config("mlp hidden widths disagree".into()));
        }
        Ok(())
    }
}

/// Scaled dot-product multi-head self-attention over the rows of `x`.
///
/// Queries, keys and values are all `x`; scaling is 1/sqrt(head_dim);
/// per-head results are concatenated and output-projected.
pub fn multi_head_attention(x: &Tensor, p: &AttentionParams) -> Result<Tensor> {
    p.validate()?;
    let c = p.width();
    if x.cols() != c {
        return Err(Error::Config(format!(
            "attention width {c} but input rows have width {}",
            x.cols()
        )));
    }
    let m = x.rows();
    let d = p.head_dim();
    let scale = 1.0 / (d as f64).sqrt();
    let mut concat = Tensor::zeros(vec![m, c]);
    for (h, head) in p.heads.iter().enumerate() {
        let q = head.query.apply_rows(x)?;
        let k = head.key.apply_rows(x)?;
        let v = head.value.apply_rows(x)?;
        // scores[i][j] = q_i . k_j / sqrt(d)
        let mut scores = Tensor::zeros(vec![m, m]);
        for i in 0..m {
            for j in 0..m {
                let mut dot = 0.0;
                for t in 0..d {
                    dot += q.at2(i, t) * k.at2(j, t);
                }
                scores.set2(i, j, dot * scale);
            }
        }
        let attn = softmax_rows(&scores);
        for i in 0..m {
            for t in 0..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += attn.at2(i, j) * v.at2(j, t);
                }
                concat.set2(i, h * d + t, acc);
            }
        }
    }
    p.output.apply_rows(&concat)
}
