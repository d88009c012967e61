//! Klein–Gordon models for each scenario kind.

use std::f64::consts::PI;
use std::sync::Arc;

use kreinprop::evolution::{Smoothness, TimeGrid};
use kreinprop::kleingordon::{lattice_model, KGData, LatticeParams, SiteFn};
use kreinprop::linalg::{c, eye};
use kreinprop::{CMat, Result};
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A model with the metadata the pipeline needs.
pub struct Model {
    pub kg: KGData,
    pub grid: TimeGrid,
    /// Lattice sites and spacing; `None` for a single mode.
    pub lattice: Option<(usize, f64)>,
    /// m²(t) with the freeze applied, when the scenario is a pure mass profile.
    pub mass2: Option<ScalarFn>,
    /// W vanishes identically, so a real (neutral) structure exists.
    pub real: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelInfo {
    pub scenario: &'static str,
    pub n: usize,
    pub dim: usize,
    pub shift_b: f64,
    pub w_smallness: f64,
    pub warning: Option<String>,
}

fn mass_family(
    sites: Option<usize>,
    spacing: f64,
    m2: ScalarFn,
    grid: TimeGrid,
    smoothness: Smoothness,
) -> Result<(KGData, Option<(usize, f64)>)> {
    match sites {
        None => Ok((KGData::mode(move |t| m2(t)).with_smoothness(smoothness), None)),
        Some(s) => {
            let mass2: SiteFn = Arc::new(move |t, _| m2(t));
            let zero: SiteFn = Arc::new(|_, _| 0.0);
            let kg = lattice_model(LatticeParams {
                sites: s,
                spacing,
                mass2,
                scalar: zero.clone(),
                electric: zero,
                window: (grid.t_minus, grid.t_plus),
                smoothness,
            })?;
            Ok((kg, Some((s, spacing))))
        }
    }
}

pub fn build(cfg: &ScenarioConfig) -> Result<Model> {
    let g = &cfg.grid;
    let grid = TimeGrid::new(g.t_minus, g.t_plus, g.n)?;
    let freeze = g.freeze;
    let clamp = move |t: f64| freeze.map_or(t, |f| t.clamp(-f, f));
    let (profile, sites, spacing, smoothness): (ScalarFn, Option<usize>, f64, Smoothness) = match cfg.scenario {
        Scenario::MinkowskiMode { omega } => (Arc::new(move |_| omega * omega), None, 1.0, Smoothness::C1),
        Scenario::LatticeStatic { sites, spacing, mass } => {
            (Arc::new(move |_| mass * mass), Some(sites), spacing, Smoothness::C1)
        }
        Scenario::MassQuench { sites, spacing, m0, m1 } => (
            Arc::new(move |t| if t < 0.0 { m0 * m0 } else { m1 * m1 }),
            sites,
            spacing,
            Smoothness::PiecewiseConstant,
        ),
        Scenario::AdiabaticPulse { sites, spacing, m0, m1, width } => (
            Arc::new(move |t| m0 * m0 + (m1 * m1 - m0 * m0) * 0.5 * (1.0 + (t / width).tanh())),
            sites,
            spacing,
            Smoothness::C1,
        ),
        Scenario::ElectricPulse { sites, spacing, mass, amplitude, width } => {
            let v = move |t: f64| amplitude / (t / width).cosh().powi(2);
            let (kg, lattice) = match sites {
                None => {
                    let kg = KGData::new(
                        1,
                        move |_| CMat::from_element(1, 1, c(mass * mass, 0.0)),
                        |_| eye(1),
                        move |t| CMat::from_element(1, 1, c(-v(t), 0.0)),
                    )?;
                    (kg, None)
                }
                Some(s) => {
                    let kg = lattice_model(LatticeParams {
                        sites: s,
                        spacing,
                        mass2: Arc::new(move |_, _| mass * mass),
                        scalar: Arc::new(|_, _| 0.0),
                        electric: Arc::new(move |t, x| v(t) * (2.0 * PI * x as f64 / s as f64).cos()),
                        window: (grid.t_minus, grid.t_plus),
                        smoothness: Smoothness::C1,
                    })?;
                    (kg, Some((s, spacing)))
                }
            };
            return Ok(Model { kg: kg.with_freeze(freeze), grid, lattice, mass2: None, real: amplitude == 0.0 });
        }
    };
    let (kg, lattice) = mass_family(sites, spacing, profile.clone(), grid, smoothness)?;
    Ok(Model {
        kg: kg.with_freeze(freeze),
        grid,
        lattice,
        mass2: Some(Arc::new(move |t| profile(clamp(t)))),
        real: true,
    })
}
