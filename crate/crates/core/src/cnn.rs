//! Fixed-point CNN inference engine.
//!
//! Convolutions run on a row-stationary schedule: the processing element
//! at `(dy, y)` keeps kernel row `dy` resident and slides it along input
//! row `y + dy - 1`, and the partial-sum rows of the three kernel rows are
//! added vertically. Products are rescaled to Q1.15 with round-half-up,
//! accumulated exactly in a wide integer together with the bias, and
//! saturated once at the output. Borders are zero padded so every PE does
//! the same number of MACs.

use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fixed::Q15;
use crate::memory::{CnnMemory, MemError, LANES};

pub const KERNEL: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Filters per convolution layer.
    pub conv_filters: Vec<usize>,
    pub fc_out: usize,
    /// MACs the PE array retires per cycle.
    pub pe_parallelism: u64,
    pub layer_overhead_cycles: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            height: 64,
            width: 128,
            channels: 2,
            conv_filters: vec![16; 4],
            fc_out: 2,
            pe_parallelism: 32,
            layer_overhead_cycles: 64,
        }
    }
}

impl NetworkConfig {
    /// Input channels of each convolution layer.
    pub fn conv_inputs(&self) -> Vec<usize> {
        std::iter::once(self.channels)
            .chain(self.conv_filters.iter().copied())
            .take(self.conv_filters.len())
            .collect()
    }

    pub fn fc_in(&self) -> usize {
        self.height * self.width * self.conv_filters.last().copied().unwrap_or(self.channels)
    }

    /// MACs per layer, convolutions first, then the fully connected head.
    pub fn layer_macs(&self) -> Vec<u64> {
        let plane = (self.height * self.width) as u64;
        let mut v: Vec<u64> = self
            .conv_filters
            .iter()
            .zip(self.conv_inputs())
            .map(|(&f, c)| plane * f as u64 * c as u64 * (KERNEL * KERNEL) as u64)
            .collect();
        v.push((self.fc_out * self.fc_in()) as u64);
        v
    }

    pub fn total_macs(&self) -> u64 {
        self.layer_macs().iter().sum()
    }

    pub fn cycles_for(&self, macs: u64) -> u64 {
        macs.div_ceil(self.pe_parallelism)
            + self.layer_overhead_cycles * (self.conv_filters.len() as u64 + 1)
    }
}

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("layer {layer}: {msg}")]
    Layer { layer: usize, msg: String },
    #[error(transparent)]
    Memory(#[from] MemError),
    #[error("weight file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Activations, plane-major: element `(y, x, ch)` at `(ch * h + y) * w + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<Q15>,
}

impl Tensor {
    pub fn zeros(h: usize, w: usize, c: usize) -> Tensor {
        Tensor { h, w, c, data: vec![Q15::ZERO; h * w * c] }
    }

    pub fn from_fn(h: usize, w: usize, c: usize, mut f: impl FnMut(usize, usize, usize) -> Q15) -> Tensor {
        let mut t = Tensor::zeros(h, w, c);
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    t.data[(ch * h + y) * w + x] = f(y, x, ch);
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, ch: usize) -> Q15 {
        self.data[(ch * self.h + y) * self.w + x]
    }

    /// Zero outside the plane.
    #[inline]
    fn padded(&self, y: isize, x: isize, ch: usize) -> Q15 {
        if y < 0 || x < 0 || y >= self.h as isize || x >= self.w as isize {
            Q15::ZERO
        } else {
            self.get(y as usize, x as usize, ch)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvLayer {
    pub filters: usize,
    pub in_ch: usize,
    /// `[f][c][dy][dx]`
    pub weights: Vec<Q15>,
    pub bias: Vec<Q15>,
}

impl ConvLayer {
    #[inline]
    pub fn weight(&self, f: usize, c: usize, dy: usize, dx: usize) -> Q15 {
        self.weights[((f * self.in_ch + c) * KERNEL + dy) * KERNEL + dx]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FcLayer {
    pub out: usize,
    pub inp: usize,
    /// Row-major `out x inp`.
    pub weights: Vec<Q15>,
    pub bias: Vec<Q15>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    pub conv: Vec<ConvLayer>,
    pub fc: FcLayer,
}

fn uniform_q15(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<Q15> {
    (0..n).map(|_| Q15::from_f64(rng.random_range(-amp..amp))).collect()
}

impl Weights {
    /// Synthetic weights, uniform in `+-1/sqrt(fan_in)`.
    pub fn random(cfg: &NetworkConfig, seed: u64) -> Weights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv = cfg
            .conv_filters
            .iter()
            .zip(cfg.conv_inputs())
            .map(|(&filters, in_ch)| {
                let amp = 1.0 / ((in_ch * KERNEL * KERNEL) as f64).sqrt();
                ConvLayer {
                    filters,
                    in_ch,
                    weights: uniform_q15(&mut rng, filters * in_ch * KERNEL * KERNEL, amp),
                    bias: uniform_q15(&mut rng, filters, 0.05),
                }
            })
            .collect();
        let inp = cfg.fc_in();
        let fc = FcLayer {
            out: cfg.fc_out,
            inp,
            weights: uniform_q15(&mut rng, cfg.fc_out * inp, 1.0 / (inp as f64).sqrt()),
            bias: uniform_q15(&mut rng, cfg.fc_out, 0.05),
        };
        Weights { conv, fc }
    }

    /// Check layer shapes against a network configuration.
    pub fn check(&self, cfg: &NetworkConfig) -> Result<(), CnnError> {
        if self.conv.len() != cfg.conv_filters.len() {
            return Err(CnnError::Layer {
                layer: self.conv.len(),
                msg: format!("expected {} convolution layers", cfg.conv_filters.len()),
            });
        }
        for (i, (l, (&f, c))) in self
            .conv
            .iter()
            .zip(cfg.conv_filters.iter().zip(cfg.conv_inputs()))
            .enumerate()
        {
            if l.filters != f || l.in_ch != c || l.weights.len() != f * c * 9 || l.bias.len() != f {
                return Err(CnnError::Layer {
                    layer: i,
                    msg: format!("weights are {}x{}, network wants {f}x{c}", l.filters, l.in_ch),
                });
            }
        }
        let fc = &self.fc;
        if fc.out != cfg.fc_out || fc.inp != cfg.fc_in() || fc.weights.len() != fc.out * fc.inp {
            return Err(CnnError::Layer {
                layer: self.conv.len(),
                msg: format!("fully connected layer is {}x{}, network wants {}x{}", fc.out, fc.inp, cfg.fc_out, cfg.fc_in()),
            });
        }
        Ok(())
    }

    /// Total weight and bias elements.
    pub fn elements(&self) -> usize {
        self.conv.iter().map(|l| l.weights.len() + l.bias.len()).sum::<usize>()
            + self.fc.weights.len()
            + self.fc.bias.len()
    }
}

const WEIGHT_MAGIC: &[u8; 4] = b"CNNW";
const KIND_CONV: u32 = 0;
const KIND_FC: u32 = 1;

/// Weight file layout, all integers little endian:
///
/// ```text
/// "CNNW"  u32 layer_count
/// per layer: u32 kind (0 conv, 1 fc), u32 out, u32 in, u32 kh, u32 kw
/// per layer, in order: out*in*kh*kw i16 weights, then out i16 biases
/// ```
pub fn write_weights<W: Write>(mut w: W, weights: &Weights) -> io::Result<()> {
    w.write_all(WEIGHT_MAGIC)?;
    let n = weights.conv.len() as u32 + 1;
    w.write_all(&n.to_le_bytes())?;
    let mut header = |kind: u32, out: usize, inp: usize, k: usize| -> io::Result<()> {
        for v in [kind, out as u32, inp as u32, k as u32, k as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    for l in &weights.conv {
        header(KIND_CONV, l.filters, l.in_ch, KERNEL)?;
    }
    header(KIND_FC, weights.fc.out, weights.fc.inp, 1)?;
    let mut payload = |v: &[Q15]| -> io::Result<()> {
        for q in v {
            w.write_all(&q.0.to_le_bytes())?;
        }
        Ok(())
    };
    for l in &weights.conv {
        payload(&l.weights)?;
        payload(&l.bias)?;
    }
    payload(&weights.fc.weights)?;
    payload(&weights.fc.bias)
}

pub fn read_weights<R: Read>(mut r: R) -> Result<Weights, CnnError> {
    let bad = |m: &str| CnnError::File(m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != WEIGHT_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32_ = || -> Result<u32, CnnError> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let n = u32_()? as usize;
    if n == 0 || n > 64 {
        return Err(bad("implausible layer count"));
    }
    let mut headers = Vec::with_capacity(n);
    for _ in 0..n {
        let h: Vec<usize> = (0..5).map(|_| u32_().map(|v| v as usize)).collect::<Result<_, _>>()?;
        headers.push(h);
    }
    let mut read_q = |len: usize| -> Result<Vec<Q15>, CnnError> {
        let mut buf = vec![0u8; len * 2];
        r.read_exact(&mut buf)?;
        Ok(buf.chunks_exact(2).map(|c| Q15(i16::from_le_bytes([c[0], c[1]]))).collect())
    };
    let mut conv = Vec::new();
    let mut fc = None;
    for (i, h) in headers.iter().enumerate() {
        let (kind, out, inp, kh, kw) = (h[0] as u32, h[1], h[2], h[3], h[4]);
        match kind {
            KIND_CONV if i + 1 < n && kh == KERNEL && kw == KERNEL => conv.push(ConvLayer {
                filters: out,
                in_ch: inp,
                weights: read_q(out * inp * KERNEL * KERNEL)?,
                bias: read_q(out)?,
            }),
            KIND_FC if i + 1 == n && kh == 1 && kw == 1 => {
                fc = Some(FcLayer { out, inp, weights: read_q(out * inp)?, bias: read_q(out)? })
            }
            _ => return Err(bad(&format!("unexpected layer header {h:?} at position {i}"))),
        }
    }
    Ok(Weights { conv, fc: fc.ok_or_else(|| bad("missing fully connected layer"))? })
}

/// Same-padded 3x3 convolution with stride 1, row-stationary schedule.
/// Returns the output and the number of MACs performed.
pub fn conv2d(input: &Tensor, layer: &ConvLayer) -> Result<(Tensor, u64), CnnError> {
    if input.c != layer.in_ch || layer.weights.len() != layer.filters * layer.in_ch * 9 || layer.bias.len() != layer.filters {
        return Err(CnnError::Layer {
            layer: 0,
            msg: format!("input has {} channels, layer expects {}", input.c, layer.in_ch),
        });
    }
    let (h, w) = (input.h, input.w);
    let mut out = Tensor::zeros(h, w, layer.filters);
    let mut macs = 0u64;
    let mut psum = vec![0i64; h * w];
    for f in 0..layer.filters {
        psum.fill(layer.bias[f].0 as i64);
        for c in 0..layer.in_ch {
            for dy in 0..KERNEL {
                // PE (dy, y): kernel row dy stays put while input row y+dy-1 streams past
                let k = [layer.weight(f, c, dy, 0), layer.weight(f, c, dy, 1), layer.weight(f, c, dy, 2)];
                for y in 0..h {
                    let iy = y as isize + dy as isize - 1;
                    let row = &mut psum[y * w..(y + 1) * w];
                    for (x, acc) in row.iter_mut().enumerate() {
                        for (dx, &kv) in k.iter().enumerate() {
                            let v = input.padded(iy, x as isize + dx as isize - 1, c);
                            *acc += v.mul_wide(kv);
                        }
                    }
                    macs += (w * KERNEL) as u64;
                }
            }
        }
        for (o, &acc) in out.data[f * h * w..(f + 1) * h * w].iter_mut().zip(&psum) {
            *o = Q15::saturate(acc);
        }
    }
    Ok((out, macs))
}

pub fn relu(t: &Tensor) -> Tensor {
    Tensor {
        data: t.data.iter().map(|q| q.relu()).collect(),
        ..t.clone()
    }
}

/// Flatten in `(y, x, ch)` order and apply the affine layer.
pub fn fully_connected(t: &Tensor, fc: &FcLayer) -> Result<(Vec<Q15>, u64), CnnError> {
    let n = t.h * t.w * t.c;
    if fc.inp != n || fc.weights.len() != fc.out * n || fc.bias.len() != fc.out {
        return Err(CnnError::Layer {
            layer: 0,
            msg: format!("fully connected layer takes {} inputs, tensor has {n}", fc.inp),
        });
    }
    let mut flat = Vec::with_capacity(n);
    for y in 0..t.h {
        for x in 0..t.w {
            for ch in 0..t.c {
                flat.push(t.get(y, x, ch));
            }
        }
    }
    let out = (0..fc.out)
        .map(|o| {
            let row = &fc.weights[o * n..(o + 1) * n];
            let acc = row
                .iter()
                .zip(&flat)
                .fold(fc.bias[o].0 as i64, |acc, (w, v)| acc + v.mul_wide(*w));
            Q15::saturate(acc)
        })
        .collect();
    Ok((out, (fc.out * n) as u64))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkOutput {
    pub position: Vec<Q15>,
    pub layer_macs: Vec<u64>,
    pub macs: u64,
    pub cycles: u64,
}

/// Four conv + ReLU layers, then the fully connected head.
pub fn run_network(input: &Tensor, cfg: &NetworkConfig, weights: &Weights) -> Result<NetworkOutput, CnnError> {
    weights.check(cfg)?;
    if (input.h, input.w, input.c) != (cfg.height, cfg.width, cfg.channels) {
        return Err(CnnError::Layer {
            layer: 0,
            msg: format!(
                "input is {}x{}x{}, network wants {}x{}x{}",
                input.h, input.w, input.c, cfg.height, cfg.width, cfg.channels
            ),
        });
    }
    let mut t = input.clone();
    let mut layer_macs = Vec::new();
    for (i, l) in weights.conv.iter().enumerate() {
        let (o, macs) = conv2d(&t, l).map_err(|e| match e {
            CnnError::Layer { msg, .. } => CnnError::Layer { layer: i, msg },
            e => e,
        })?;
        t = relu(&o);
        layer_macs.push(macs);
    }
    let (position, macs) = fully_connected(&t, &weights.fc)?;
    layer_macs.push(macs);
    let total = layer_macs.iter().sum();
    Ok(NetworkOutput {
        position,
        cycles: cfg.cycles_for(total),
        layer_macs,
        macs: total,
    })
}

/// The engine with its private memory. Weights live in memory from the
/// start; the input planes are written by DMA at `input_addr`.
#[derive(Clone, Debug)]
pub struct CnnEngine {
    pub cfg: NetworkConfig,
    pub mem: CnnMemory,
    weights: Weights,
    weights_addr: usize,
    input_addr: usize,
    /// Two activation buffers used alternately by consecutive layers.
    act_addr: [usize; 2],
}

impl CnnEngine {
    /// Size the memory to hold the weights, the input planes and two full
    /// activation buffers.
    pub fn new(cfg: NetworkConfig, weights: Weights) -> Result<CnnEngine, CnnError> {
        weights.check(&cfg)?;
        let words = |elems: usize| elems.div_ceil(LANES);
        let weights_addr = 0;
        let input_addr = words(weights.elements());
        let plane = cfg.height * cfg.width;
        let max_ch = cfg.conv_filters.iter().copied().max().unwrap_or(0).max(cfg.channels);
        let a0 = input_addr + cfg.channels * words(plane);
        let a1 = a0 + words(plane * max_ch);
        let total = a1 + words(plane * max_ch);
        let mut mem = CnnMemory::with_words(total);
        let mut at = weights_addr * LANES;
        let mut store = |mem: &mut CnnMemory, v: &[Q15]| -> Result<(), CnnError> {
            let dst = mem.region_mut(0, mem.capacity() * LANES)?;
            dst[at..at + v.len()].copy_from_slice(v);
            at += v.len();
            Ok(())
        };
        for l in &weights.conv {
            store(&mut mem, &l.weights)?;
            store(&mut mem, &l.bias)?;
        }
        store(&mut mem, &weights.fc.weights)?;
        store(&mut mem, &weights.fc.bias)?;
        Ok(CnnEngine { cfg, mem, weights, weights_addr, input_addr, act_addr: [a0, a1] })
    }

    /// Word addresses of the first two input planes (real and imaginary
    /// parts of the CSI image).
    pub fn input_planes(&self) -> (usize, usize) {
        let pw = (self.cfg.height * self.cfg.width).div_ceil(LANES);
        (self.input_addr, self.input_addr + pw)
    }

    pub fn weights_addr(&self) -> usize {
        self.weights_addr
    }

    /// Run the network on the planes currently in memory, staging every
    /// layer's output through the activation buffers.
    pub fn run(&mut self) -> Result<NetworkOutput, CnnError> {
        let (h, w, c) = (self.cfg.height, self.cfg.width, self.cfg.channels);
        let plane_words = (h * w).div_ceil(LANES);
        let mut data = Vec::with_capacity(h * w * c);
        for ch in 0..c {
            data.extend_from_slice(self.mem.region(self.input_addr + ch * plane_words, h * w)?);
        }
        let mut t = Tensor { h, w, c, data };
        let mut layer_macs = Vec::new();
        for (i, l) in self.weights.conv.iter().enumerate() {
            let (o, macs) = conv2d(&t, l)?;
            let o = relu(&o);
            let dst = self.act_addr[i % 2];
            self.mem.region_mut(dst, o.data.len())?.copy_from_slice(&o.data);
            t = Tensor { data: self.mem.region(dst, o.data.len())?.to_vec(), ..o };
            layer_macs.push(macs);
        }
        let (position, macs) = fully_connected(&t, &self.weights.fc)?;
        layer_macs.push(macs);
        let total = layer_macs.iter().sum();
        Ok(NetworkOutput { position, cycles: self.cfg.cycles_for(total), layer_macs, macs: total })
    }
}
