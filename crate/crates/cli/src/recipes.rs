//! Built-in sweeps for the entanglement (fig2–fig5) and cooling (fig6–fig9)
//! contour plots.

use crate::config::{PhaseNoiseConfig, SystemConfig};
use crate::sweep::{Axis, AxisName, Output, SweepConfig};

pub const DEFAULT_GRID: usize = 80;

pub const POWER_RANGE_MW: (f64, f64) = (1.0, 50.0);
pub const DETUNING_RANGE: (f64, f64) = (0.25, 2.0);
pub const KAPPA_RANGE: (f64, f64) = (0.1, 2.0);

/// Every recipe id, in figure order.
pub fn recipe_ids() -> Vec<String> {
    (2..=9)
        .flat_map(|f| ["a", "b", "c"].into_iter().map(move |p| format!("fig{f}{p}")))
        .collect()
}

/// Band-pass noise with γ̃ = Ω/2.
pub fn bandpass(linewidth_hz: f64, center_hz: f64) -> PhaseNoiseConfig {
    if linewidth_hz == 0.0 {
        return PhaseNoiseConfig::None;
    }
    PhaseNoiseConfig::Bandpass {
        linewidth_over_2pi_hz: linewidth_hz,
        band_center_over_2pi_hz: center_hz,
        bandwidth_over_2pi_hz: Some(0.5 * center_hz),
    }
}

/// Recipe `id` on a `grid`×`grid` mesh, or `None` for an unknown id.
pub fn recipe(id: &str, grid: usize) -> Option<SweepConfig> {
    let rest = id.strip_prefix("fig")?;
    let (fig, panel) = rest.split_at(rest.len().checked_sub(1)?);
    let fig: u32 = fig.parse().ok()?;
    let panel = ["a", "b", "c"].iter().position(|p| *p == panel)?;

    const LINEWIDTHS_HZ: [f64; 3] = [0.0, 100.0, 1000.0];
    const CENTERS_HZ: [f64; 3] = [30e3, 80e3, 140e3];
    // Entanglement figures fix κ = 0.5 ω_m in the detuning sweeps; cooling
    // figures use κ = ω_m.
    let (output, fixed_kappa) = match fig {
        2..=5 => (Output::EN, 0.5),
        6..=9 => (Output::NEff, 1.0),
        _ => return None,
    };
    let noise = match fig {
        2 | 3 | 6 | 7 => bandpass(LINEWIDTHS_HZ[panel], 50e3),
        _ => bandpass(100.0, CENTERS_HZ[panel]),
    };
    let detuning_sweep = matches!(fig, 2 | 4 | 6 | 8);

    let mut system = SystemConfig {
        phase_noise: Some(noise),
        ..Default::default()
    };
    let y = if detuning_sweep {
        system.kappa_over_omega_m = Some(fixed_kappa);
        Axis::linear(AxisName::DeltaOverOmegaM, DETUNING_RANGE.0, DETUNING_RANGE.1, grid)
    } else {
        system.detuning_over_omega_m = Some(1.0);
        Axis::linear(AxisName::KappaOverOmegaM, KAPPA_RANGE.0, KAPPA_RANGE.1, grid)
    };
    Some(SweepConfig {
        id: Some(id.to_string()),
        system: system.resolved(),
        x: Axis::linear(AxisName::PowerMw, POWER_RANGE_MW.0, POWER_RANGE_MW.1, grid),
        y,
        outputs: vec![output],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_recipes_resolve() {
        let ids = recipe_ids();
        assert_eq!(ids.len(), 24);
        for id in ids {
            let r = recipe(&id, 4).unwrap();
            r.validate().unwrap();
            assert_eq!(r.id.as_deref(), Some(id.as_str()));
        }
        assert!(recipe("fig1a", 4).is_none());
        assert!(recipe("fig2d", 4).is_none());
        assert!(recipe("fig", 4).is_none());
    }

    #[test]
    fn caption_parameters() {
        let r = recipe("fig4c", 80).unwrap();
        assert_eq!(r.system.kappa_over_omega_m, Some(0.5));
        assert_eq!(r.y.name, AxisName::DeltaOverOmegaM);
        assert_eq!(
            r.system.phase_noise,
            Some(PhaseNoiseConfig::Bandpass {
                linewidth_over_2pi_hz: 100.0,
                band_center_over_2pi_hz: 140e3,
                bandwidth_over_2pi_hz: Some(70e3),
            })
        );
        let r = recipe("fig7a", 80).unwrap();
        assert_eq!(r.outputs, vec![Output::NEff]);
        assert_eq!(r.system.detuning_over_omega_m, Some(1.0));
        assert_eq!(r.system.phase_noise, Some(PhaseNoiseConfig::None));
        assert_eq!(r.y.name, AxisName::KappaOverOmegaM);
    }
}
