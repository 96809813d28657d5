//! Synthetic reference traces with the power-logger header
//! `Timestamp (S), Arc Main Current (A), Arc Main Voltage (V),
//! Arc Main Energy (J), Arc UART (TXT)`.
//!
//! The trace is clean by construction: four real-valued columns sampled at
//! 1 kHz, and a sparse UART column carrying phase flags and periodic sensor
//! readouts tagged with device identifiers. The text is already in the
//! canonical CSV dialect.

use std::fmt::Write;

use crate::dsl::DataType;
use crate::rng::SeededRng;

pub const HEADER: [&str; 5] = [
    "Timestamp (S)",
    "Arc Main Current (A)",
    "Arc Main Voltage (V)",
    "Arc Main Energy (J)",
    "Arc UART (TXT)",
];

/// Declared type of each [`HEADER`] column.
pub const SCHEMA: [DataType; 5] = [
    DataType::Real,
    DataType::Real,
    DataType::Real,
    DataType::Real,
    DataType::Uart,
];

pub const PHASE_MARKER: &str = "IMG_LOAD_START";

/// Voltage samples stay inside this band.
pub const VOLTAGE_BAND: (f64, f64) = (4.95, 5.05);

#[derive(Clone, Debug)]
pub struct GoldenConfig {
    pub rows: usize,
    pub seed: u64,
    /// Number of `IMG_LOAD_START` flags; the first one is never on row 0.
    pub phase_markers: usize,
    /// A sensor readout is logged every this many rows.
    pub readout_period: usize,
}

impl Default for GoldenConfig {
    fn default() -> Self {
        GoldenConfig {
            rows: 10_000,
            seed: 2024,
            phase_markers: 12,
            readout_period: 37,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GoldenTrace {
    pub csv: String,
    /// Data-row indices of the `IMG_LOAD_START` flags.
    pub marker_rows: Vec<usize>,
}

impl GoldenTrace {
    pub fn data_lines(&self) -> impl Iterator<Item = &str> {
        self.csv.lines().skip(1)
    }
}

pub fn generate(cfg: &GoldenConfig) -> GoldenTrace {
    let mut rng = SeededRng::new(cfg.seed);
    let n = cfg.rows;

    // Phase flags evenly spread over the trace, starting after a prefix.
    let marker_rows: Vec<usize> = if cfg.phase_markers == 0 || n < 2 {
        Vec::new()
    } else {
        let span = n - 1;
        (0..cfg.phase_markers)
            .map(|j| 1 + j * span / cfg.phase_markers)
            .filter(|&r| r < n)
            .collect()
    };

    let mut csv = HEADER.join(",");
    csv.push('\n');
    let mut energy = 0.0;
    let (v_lo, v_hi) = VOLTAGE_BAND;
    for i in 0..n {
        let t = i as f64 * 0.001;
        let phase = (i as f64 * 0.013).sin();
        let current = 0.45 + 0.08 * phase + 0.01 * (rng.unit() - 0.5);
        let voltage = 5.0 + 0.03 * (rng.unit() - 0.5) + 0.01 * phase;
        let voltage = voltage.clamp(v_lo, v_hi);
        energy += voltage * current * 0.001;

        let uart = if marker_rows.contains(&i) {
            PHASE_MARKER.to_string()
        } else if i == 0 {
            "PROC_START".to_string()
        } else if marker_rows.iter().any(|&m| i == m + 120) {
            "IMG_LOAD_END".to_string()
        } else if i % cfg.readout_period.max(1) == 0 {
            let k = i / cfg.readout_period.max(1);
            if k.is_multiple_of(2) {
                format!("ID_7 TEMP {:.1}C", 44.0 + 4.0 * rng.unit())
            } else {
                format!("ID_3 CLK {}MHz", [1400, 1500, 2000][rng.below(3)])
            }
        } else {
            String::new()
        };

        let _ = writeln!(
            csv,
            "{t:.3},{current:.4},{voltage:.3},{energy:.6},{uart}"
        );
    }
    GoldenTrace { csv, marker_rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{parse_csv_str, to_csv_string, ReadOptions};

    #[test]
    fn default_trace_shape() {
        let g = generate(&GoldenConfig::default());
        assert_eq!(g.data_lines().count(), 10_000);
        assert_eq!(g.marker_rows.len(), 12);
        assert!(g.marker_rows[0] > 0);
        assert!(g.marker_rows.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn already_canonical() {
        let g = generate(&GoldenConfig {
            rows: 500,
            ..Default::default()
        });
        let (t, _) = parse_csv_str(&g.csv, &ReadOptions::default()).unwrap();
        assert_eq!(to_csv_string(&t), g.csv);
    }

    #[test]
    fn deterministic() {
        let cfg = GoldenConfig {
            rows: 300,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).csv, generate(&cfg).csv);
        let other = GoldenConfig { seed: 1, ..cfg };
        assert_ne!(generate(&other).csv, generate(&GoldenConfig { rows: 300, ..Default::default() }).csv);
    }
}
