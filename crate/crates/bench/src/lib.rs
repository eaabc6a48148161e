//! Criterion benchmarks of the simulator's host-side cost: how long the
//! model takes to run each kernel, not the simulated cycle counts.

use std::hint::black_box;

use criterion::Criterion;

use asip_core::bf16::{Bf16, CBf16};
use asip_core::cnn::{conv2d, NetworkConfig, Tensor, Weights};
use asip_core::fixed::Q15;
use asip_core::sim::MachineConfig;
use asip_core::workloads::{channel, gemm, zf};

fn bf16_ops(c: &mut Criterion) {
    let xs: Vec<Bf16> = (0..1024).map(|i| Bf16::from_f64(i as f64 * 0.37 - 150.0)).collect();
    c.bench_function("bf16 add+mul x1024", |b| {
        b.iter(|| {
            let mut acc = Bf16::from_f64(0.0);
            for &x in &xs {
                acc = acc.add(x.mul(x));
            }
            black_box(acc)
        })
    });
    let zs: Vec<CBf16> = xs.iter().map(|&x| CBf16::from_f64(x.to_f64(), -x.to_f64())).collect();
    c.bench_function("complex mac x1024", |b| {
        b.iter(|| zs.iter().fold(CBf16::ZERO, |acc, &z| acc.mac(z, z.conj())))
    });
}

fn kernels(c: &mut Criterion) {
    let cfg = MachineConfig::default();
    let mut rng = channel::rng(7);
    let a16 = channel::gaussian_channel(&mut rng, 16, 16);
    let b16 = channel::gaussian_channel(&mut rng, 16, 16);
    c.bench_function("vector gemm 16x16", |b| {
        b.iter(|| gemm::vector(black_box(&a16), &b16, &cfg).unwrap())
    });
    let a64 = channel::gaussian_channel(&mut rng, 64, 64);
    let b64 = channel::gaussian_channel(&mut rng, 64, 64);
    c.bench_function("systolic gemm 64x64", |b| {
        b.iter(|| gemm::systolic(black_box(&a64), &b64, &cfg).unwrap())
    });
    let h = channel::gaussian_channel(&mut rng, 128, 16);
    c.bench_function("zf detection matrix 128x16", |b| {
        b.iter(|| zf::zf_detection_matrix(black_box(&h), &cfg).unwrap())
    });
}

fn conv(c: &mut Criterion) {
    let net = NetworkConfig::default();
    let weights = Weights::random(&net, 3);
    let input = Tensor::from_fn(64, 128, 2, |y, x, ch| Q15(((y * 131 + x * 7 + ch) % 2000) as i16 - 1000));
    c.bench_function("conv layer 64x128x2 -> 16", |b| {
        b.iter(|| conv2d(black_box(&input), &weights.conv[0]).unwrap())
    });
}

pub fn benchmarks(c: &mut Criterion) {
    bf16_ops(c);
    kernels(c);
    conv(c);
}
