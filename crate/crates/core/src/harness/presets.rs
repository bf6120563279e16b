//! Canned phase-separation scenarios.

use std::fmt;
use std::str::FromStr;

use crate::model::ModelParams;

/// Simulated time beyond which presets need the extended-run flag.
pub const DEFAULT_TIME_CAP: f64 = 100.0;

/// Amplitude of the random perturbation around the mean.
pub const PERTURBATION_AMPLITUDE: f64 = 0.01;

pub const DEFAULT_SEED: u64 = 20_180_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Cn,
    Bdf2,
    Ns,
    CnElectric,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Cn, SchemeKind::Bdf2, SchemeKind::Ns, SchemeKind::CnElectric];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Cn => "cn",
            SchemeKind::Bdf2 => "bdf2",
            SchemeKind::Ns => "ns",
            SchemeKind::CnElectric => "cn-electric",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme '{s}' (expected cn, bdf2, ns or cn-electric)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub scheme: SchemeKind,
    pub params: ModelParams,
    /// Mean of the initial field.
    pub phi_mean: f64,
    pub amplitude: f64,
    /// One run per entry; all presets except the energy study have one.
    pub dts: Vec<f64>,
    /// End time of the full scenario.
    pub full_t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
}

impl Preset {
    /// End time honouring the default cap unless `extended` is set.
    pub fn t_end(&self, extended: bool) -> f64 {
        if extended {
            self.full_t_end
        } else {
            self.full_t_end.min(DEFAULT_TIME_CAP)
        }
    }

    /// Snapshot times that fall inside the run.
    pub fn snapshots(&self, extended: bool) -> Vec<f64> {
        let t_end = self.t_end(extended);
        self.snapshot_times.iter().copied().filter(|t| *t <= t_end).collect()
    }
}

fn pattern(
    name: &'static str,
    description: &'static str,
    scheme: SchemeKind,
    params: ModelParams,
    phi_mean: f64,
    snapshot_times: &[f64],
) -> Preset {
    Preset {
        name,
        description,
        scheme,
        params,
        phi_mean,
        amplitude: PERTURBATION_AMPLITUDE,
        dts: vec![1e-3],
        full_t_end: *snapshot_times.last().expect("snapshot list"),
        snapshot_times: snapshot_times.to_vec(),
        seed: DEFAULT_SEED,
    }
}

/// The energy-study preset and the eight pattern-formation scenarios.
pub fn experiment_presets() -> Vec<Preset> {
    let base = ModelParams::default();
    let electric = base.with_alpha(10.0).with_beta(0.2);
    vec![
        Preset {
            name: "fig1",
            description: "energy decay for five time steps up to t = 1",
            scheme: SchemeKind::Cn,
            params: base,
            phi_mean: 0.0,
            amplitude: PERTURBATION_AMPLITUDE,
            dts: vec![1e-4, 5e-4, 1e-3, 5e-3, 1e-2],
            full_t_end: 1.0,
            snapshot_times: vec![],
            seed: DEFAULT_SEED,
        },
        pattern(
            "fig2",
            "weak nonlocal term, symmetric mixture",
            SchemeKind::Cn,
            base,
            0.0,
            &[0.25, 0.5, 1.0, 5.0, 10.0, 20.0, 30.0, 100.0],
        ),
        pattern(
            "fig3",
            "weak nonlocal term, asymmetric mixture",
            SchemeKind::Cn,
            base,
            0.3,
            &[0.25, 0.5, 1.0, 10.0, 40.0, 60.0, 100.0, 400.0],
        ),
        pattern(
            "fig4",
            "lamellae, symmetric mixture",
            SchemeKind::Cn,
            base.with_alpha(5.0),
            0.0,
            &[0.25, 0.5, 40.0, 700.0],
        ),
        pattern(
            "fig5",
            "cylinders, asymmetric mixture",
            SchemeKind::Cn,
            base.with_alpha(10.0),
            0.3,
            &[0.25, 1.0, 60.0, 700.0],
        ),
        pattern(
            "fig7",
            "coupled flow, symmetric mixture",
            SchemeKind::Ns,
            base.with_alpha(5.0),
            0.0,
            &[0.25, 1.0, 20.0, 200.0],
        ),
        pattern(
            "fig8",
            "coupled flow, asymmetric mixture",
            SchemeKind::Ns,
            base.with_alpha(5.0),
            0.3,
            &[0.25, 1.0, 20.0, 200.0],
        ),
        pattern(
            "fig10",
            "imposed field, symmetric mixture",
            SchemeKind::CnElectric,
            electric,
            0.0,
            &[0.25, 0.5, 5.0, 700.0],
        ),
        pattern(
            "fig11",
            "imposed field, asymmetric mixture",
            SchemeKind::CnElectric,
            electric,
            0.3,
            &[0.25, 0.5, 4.0, 700.0],
        ),
    ]
}

pub fn find_preset(name: &str) -> Option<Preset> {
    experiment_presets().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_presets_with_unique_names() {
        let all = experiment_presets();
        assert_eq!(all.len(), 9);
        let mut names: Vec<_> = all.iter().map(|p| p.name).collect();
        names.dedup();
        assert_eq!(names.len(), 9);
        for p in &all {
            assert!(p.params.validate().is_ok());
            assert!(p.snapshot_times.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn fig2_values() {
        let p = find_preset("fig2").unwrap();
        assert_eq!(p.params.alpha, 0.001);
        assert_eq!(p.phi_mean, 0.0);
        assert_eq!(p.dts, vec![1e-3]);
        assert_eq!(p.snapshot_times, vec![0.25, 0.5, 1.0, 5.0, 10.0, 20.0, 30.0, 100.0]);
    }

    #[test]
    fn fig1_and_fig10_values() {
        let p = find_preset("fig1").unwrap();
        assert_eq!(p.dts, vec![1e-4, 5e-4, 1e-3, 5e-3, 1e-2]);
        assert_eq!(p.t_end(false), 1.0);
        let e = find_preset("fig10").unwrap();
        assert_eq!((e.params.beta, e.params.alpha, e.phi_mean), (0.2, 10.0, 0.0));
        assert_eq!(e.scheme, SchemeKind::CnElectric);
    }

    #[test]
    fn long_runs_are_capped() {
        let p = find_preset("fig4").unwrap();
        assert_eq!(p.t_end(false), DEFAULT_TIME_CAP);
        assert_eq!(p.t_end(true), 700.0);
        assert_eq!(p.snapshots(false), vec![0.25, 0.5, 40.0]);
        assert_eq!(p.snapshots(true).len(), 4);
    }

    #[test]
    fn scheme_names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert!("rk4".parse::<SchemeKind>().is_err());
    }
}
