//! CSI-based positioning: 2-D DFT on the systolic array, copy-and-split DMA
//! into the CNN memory, then the CNN engine.

use super::fft::fft2d;
use super::WorkloadError;
use crate::cnn::{CnnEngine, NetworkConfig, Weights};
use crate::fixed::Q15;
use crate::matrix::CMatrix;
use crate::memory::dma_copy_split;
use crate::sim::MachineConfig;

#[derive(Clone, Debug)]
pub struct PositioningOutput {
    pub position: Vec<Q15>,
    /// Power-of-two gain applied by the DMA so the spectrum fits Q1.15.
    pub dma_scale: f32,
    pub fft_cycles: u64,
    pub dma_cycles: u64,
    pub cnn_cycles: u64,
    pub macs: u64,
}

impl PositioningOutput {
    pub fn total_cycles(&self) -> u64 {
        self.fft_cycles + self.dma_cycles + self.cnn_cycles
    }

    /// Localizations per second at `clock_hz`.
    pub fn rate(&self, clock_hz: f64) -> f64 {
        clock_hz / self.total_cycles() as f64
    }
}

/// Smallest power of two that brings `peak` below one.
fn fit_scale(peak: f64) -> f32 {
    if peak == 0.0 || !peak.is_finite() {
        return 1.0;
    }
    2f32.powi(-(peak.log2().floor() as i32 + 1))
}

/// One localization from a `height x width` CSI matrix (subcarriers x antennas).
pub fn localize(
    csi: &CMatrix,
    net: &NetworkConfig,
    weights: Weights,
    cfg: &MachineConfig,
) -> Result<PositioningOutput, WorkloadError> {
    if (csi.rows(), csi.cols()) != (net.height, net.width) || net.channels != 2 {
        return Err(WorkloadError::Shape(format!(
            "CSI is {}x{}, network expects {}x{}x{}",
            csi.rows(),
            csi.cols(),
            net.height,
            net.width,
            net.channels
        )));
    }
    let fft = fft2d(csi, cfg)?;
    let peak = fft
        .f
        .as_slice()
        .iter()
        .flat_map(|z| [z.re.to_f64().abs(), z.im.to_f64().abs()])
        .fold(0.0, f64::max);
    let scale = fit_scale(peak);
    let mut engine = CnnEngine::new(net.clone(), weights)?;
    let (re, im) = engine.input_planes();
    let dma_cycles = dma_copy_split(&fft.machine.mem, &fft.handle, &mut engine.mem, re, im, scale)?;
    let out = engine.run()?;
    Ok(PositioningOutput {
        position: out.position,
        dma_scale: scale,
        fft_cycles: fft.report.cycles,
        dma_cycles,
        cnn_cycles: out.cycles,
        macs: out.macs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_is_a_power_of_two_below_one() {
        assert_eq!(fit_scale(0.0), 1.0);
        assert_eq!(fit_scale(0.5), 1.0);
        assert_eq!(fit_scale(1.0), 0.5);
        assert_eq!(fit_scale(300.0), 1.0 / 512.0);
        for p in [0.01, 0.9, 7.0, 1e4] {
            assert!(p * (fit_scale(p) as f64) < 1.0);
            assert!(p * (fit_scale(p) as f64) >= 0.5);
        }
    }
}
