//! Analytic resource-grid and detection-throughput calculators.

/// One OFDM numerology: a second of the time-frequency grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub subcarrier_spacing_hz: f64,
    pub bandwidth_hz: f64,
    /// Total subcarriers N.
    pub subcarriers: u64,
    /// OFDM symbols per second M.
    pub symbols_per_second: u64,
}

impl GridConfig {
    pub fn resource_elements_per_second(&self) -> u64 {
        self.subcarriers * self.symbols_per_second
    }
}

/// The four numerologies of the inversion-rate table.
pub const TABLE_GRIDS: [GridConfig; 4] = [
    GridConfig { subcarrier_spacing_hz: 15e3, bandwidth_hz: 20e6, subcarriers: 1200, symbols_per_second: 14_000 },
    GridConfig { subcarrier_spacing_hz: 15e3, bandwidth_hz: 50e6, subcarriers: 3300, symbols_per_second: 14_000 },
    GridConfig { subcarrier_spacing_hz: 60e3, bandwidth_hz: 100e6, subcarriers: 1650, symbols_per_second: 56_000 },
    GridConfig { subcarrier_spacing_hz: 60e3, bandwidth_hz: 200e6, subcarriers: 3300, symbols_per_second: 56_000 },
];

/// Region over which the channel is treated as constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceBlock {
    /// Subcarriers per coherence bandwidth.
    pub n_b: u64,
    /// OFDM symbols per coherence time.
    pub n_t: u64,
    /// UE speed label in km/h.
    pub ue_speed_kmh: f64,
}

impl CoherenceBlock {
    pub fn new(n_b: u64, n_t: u64) -> CoherenceBlock {
        assert!(n_b >= 1 && n_t >= 1, "coherence block must be non-empty");
        CoherenceBlock { n_b, n_t, ue_speed_kmh: 0.0 }
    }

    pub fn resource_elements(&self) -> u64 {
        self.n_b * self.n_t
    }
}

/// The block assumed for the inversion-rate table: 16 subcarriers x 5 symbols.
pub const INVERSION_BLOCK: CoherenceBlock = CoherenceBlock { n_b: 16, n_t: 5, ue_speed_kmh: 100.0 };

/// Coherence blocks for 5, 50 and 100 km/h.
pub const SPEED_BLOCKS: [CoherenceBlock; 3] = [
    CoherenceBlock { n_b: 16, n_t: 100, ue_speed_kmh: 5.0 },
    CoherenceBlock { n_b: 16, n_t: 10, ue_speed_kmh: 50.0 },
    CoherenceBlock { n_b: 16, n_t: 5, ue_speed_kmh: 100.0 },
];

/// Channel inversions needed per second. Partial blocks are not counted.
pub fn inversions_per_second(g: &GridConfig, block: &CoherenceBlock) -> u64 {
    g.resource_elements_per_second() / block.resource_elements()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThroughputReport {
    pub bits: u64,
    pub seconds: f64,
    pub gbps: f64,
    /// Gb/s per mm^2, when an area is given.
    pub area_efficiency: Option<f64>,
    /// pJ per bit, when a power figure is given.
    pub energy_pj_per_bit: Option<f64>,
}

/// Bits detected per coherence block (6 bits per 64-QAM symbol and user)
/// over the time the machine needs for that block.
pub fn throughput_report(
    users: u64,
    block: &CoherenceBlock,
    cycles: u64,
    clock_hz: f64,
    area_mm2: Option<f64>,
    power_w: Option<f64>,
) -> ThroughputReport {
    let bits = block.resource_elements() * users * super::qam::BITS_PER_SYMBOL as u64;
    let seconds = cycles as f64 / clock_hz;
    let bps = bits as f64 / seconds;
    let gbps = bps / 1e9;
    ThroughputReport {
        bits,
        seconds,
        gbps,
        area_efficiency: area_mm2.map(|a| gbps / a),
        energy_pj_per_bit: power_w.map(|p| p / bps * 1e12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let got: Vec<u64> = TABLE_GRIDS.iter().map(|g| inversions_per_second(g, &INVERSION_BLOCK)).collect();
        assert_eq!(got, vec![210_000, 577_500, 1_155_000, 2_310_000]);
        assert_eq!(TABLE_GRIDS[3].resource_elements_per_second(), 184_800_000);
        assert_eq!(inversions_per_second(&TABLE_GRIDS[0], &CoherenceBlock::new(1, 1)), 16_800_000);
    }

    #[test]
    fn throughput_formula() {
        let t = throughput_report(16, &SPEED_BLOCKS[1], 5_800, 800e6, None, None);
        assert_eq!(t.bits, 15_360);
        assert!((t.gbps - 2.1186).abs() < 1e-3);
        let t2 = throughput_report(16, &SPEED_BLOCKS[1], 5_800, 1600e6, Some(2.0), Some(1.0));
        assert_eq!(t2.gbps, 2.0 * t.gbps);
        assert_eq!(t2.area_efficiency, Some(t2.gbps / 2.0));
        assert!(t.energy_pj_per_bit.is_none());
        let t = throughput_report(16, &SPEED_BLOCKS[0], 26_500, 800e6, None, None);
        assert!((t.gbps - 4.64).abs() < 0.01);
    }
}
