//! Absorber level structure and its two-photon spectral response
//! `K(w) = sum_k mu_fk mu_kg / (eps_k - eps_g - w - i gamma)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, VssError};
use crate::spdc::FrequencyGrid;

/// Distance (eV) below which a zero-linewidth pole is considered hit.
pub const POLE_TOL_EV: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy_ev: f64,
    /// `mu_fk * mu_kg`, arbitrary units.
    pub dipole: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumLevels {
    pub ground_energy_ev: f64,
    pub final_energy_ev: f64,
    pub levels: Vec<Level>,
    pub linewidth_ev: f64,
}

impl MediumLevels {
    pub fn new(
        ground_energy_ev: f64,
        final_energy_ev: f64,
        levels: Vec<Level>,
        linewidth_ev: f64,
    ) -> Result<Self> {
        if !(final_energy_ev > ground_energy_ev) {
            return Err(VssError::config(format!(
                "final energy {final_energy_ev} eV must exceed ground energy {ground_energy_ev} eV"
            )));
        }
        if levels.is_empty() {
            return Err(VssError::config("medium needs at least one intermediate level"));
        }
        if levels
            .iter()
            .any(|l| !l.energy_ev.is_finite() || !l.dipole.is_finite())
        {
            return Err(VssError::config("level energies and dipoles must be finite"));
        }
        if !(linewidth_ev >= 0.0 && linewidth_ev.is_finite()) {
            return Err(VssError::config(format!(
                "linewidth must be >= 0, got {linewidth_ev}"
            )));
        }
        Ok(Self {
            ground_energy_ev,
            final_energy_ev,
            levels,
            linewidth_ev,
        })
    }

    /// Levels outside `(eps_g, eps_f)`; allowed but unusual.
    pub fn warnings(&self) -> Vec<String> {
        self.levels
            .iter()
            .filter(|l| !(l.energy_ev > self.ground_energy_ev && l.energy_ev < self.final_energy_ev))
            .map(|l| {
                format!(
                    "level at {} eV lies outside ({}, {}) eV",
                    l.energy_ev, self.ground_energy_ev, self.final_energy_ev
                )
            })
            .collect()
    }

    /// Energy mismatches `2 eps_k - eps_f` (eV), in level order.
    pub fn mismatch_energies(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| 2.0 * l.energy_ev - self.final_energy_ev)
            .collect()
    }

    /// Same levels with every dipole product multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            l.dipole *= c;
        }
        out
    }

    /// Pole positions on the photon-energy axis, `eps_k - eps_g`.
    pub fn poles(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().map(move |l| l.energy_ev - self.ground_energy_ev)
    }
}

/// Spectral response at photon energy `omega_ev`.
pub fn response(omega_ev: f64, medium: &MediumLevels) -> Result<Complex64> {
    let gamma = medium.linewidth_ev;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in &medium.levels {
        let detuning = l.energy_ev - medium.ground_energy_ev - omega_ev;
        if gamma == 0.0 {
            if detuning.abs() < POLE_TOL_EV {
                return Err(VssError::PoleProximity {
                    omega_ev,
                    level_ev: l.energy_ev,
                    distance_ev: detuning.abs(),
                });
            }
            acc += l.dipole / detuning;
        } else {
            acc += l.dipole / Complex64::new(detuning, -gamma);
        }
    }
    Ok(acc)
}

/// Response sampled on every node of `grid`.
pub fn response_on_grid(grid: &FrequencyGrid, medium: &MediumLevels) -> Result<Vec<Complex64>> {
    (0..grid.points)
        .map(|j| response(grid.energy(j), medium))
        .collect()
}

/// eps_g = 0, eps_f = 3.1 eV, levels at (eps_f + {0.05, 0.075, 0.089}) / 2,
/// unit dipoles, no linewidth.
pub fn reference_medium() -> MediumLevels {
    let ef = 3.1;
    let levels = [0.05, 0.075, 0.089]
        .iter()
        .map(|m| Level {
            energy_ev: 0.5 * (ef + m),
            dipole: 1.0,
        })
        .collect();
    MediumLevels::new(0.0, ef, levels, 0.0).expect("default medium is valid")
}

/// Seeded random level set: `count` mismatches `2 eps_k - eps_f` drawn
/// uniformly from `[min_mismatch, max_mismatch]` (eV), sorted ascending,
/// unit dipoles.
pub fn random_medium(
    final_energy_ev: f64,
    count: usize,
    min_mismatch_ev: f64,
    max_mismatch_ev: f64,
    seed: u64,
) -> Result<MediumLevels> {
    if count == 0 {
        return Err(VssError::config("random level count must be >= 1"));
    }
    if !(max_mismatch_ev > min_mismatch_ev) {
        return Err(VssError::config("random mismatch range is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mism: Vec<f64> = (0..count)
        .map(|_| rng.random_range(min_mismatch_ev..=max_mismatch_ev))
        .collect();
    mism.sort_by(f64::total_cmp);
    let levels = mism
        .into_iter()
        .map(|m| Level {
            energy_ev: 0.5 * (final_energy_ev + m),
            dipole: 1.0,
        })
        .collect();
    MediumLevels::new(0.0, final_energy_ev, levels, 0.0)
}

/// How grid nodes are kept away from zero-linewidth poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolePlacement {
    /// Widen the grid (at most +10 %) so every pole sits as close as possible
    /// to the middle of a grid cell.
    #[default]
    Midpoint,
    /// Only perturb the half width by 1e-6 relative when a node hits a pole.
    Nudge,
}

/// Fractional cell offset of each pole on grids with half width `w`;
/// returns `min_k sin(pi a_k)` (1 when every pole is at a cell midpoint).
fn placement_score(centers: &[f64], w: f64, n: usize, poles: &[f64]) -> f64 {
    let step = 2.0 * w / (n - 1) as f64;
    let mut score = 1.0_f64;
    for &c in centers {
        let lo = c - w;
        for &p in poles {
            let x = (p - lo) / step;
            if x < 0.0 || x > (n - 1) as f64 {
                continue;
            }
            score = score.min((std::f64::consts::PI * x.fract()).sin());
        }
    }
    score
}

fn min_pole_distance(grids: &[FrequencyGrid], poles: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for g in grids {
        for &p in poles {
            let x = (p - g.energy(0)) / g.step();
            let j = x.round().clamp(0.0, (g.points - 1) as f64) as usize;
            best = best.min((g.energy(j) - p).abs());
        }
    }
    best
}

/// Adjusts the shared half width of an aligned grid pair so that no node
/// falls on a pole of `medium`. A non-zero linewidth needs no adjustment.
pub fn place_grids(
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
    medium: &MediumLevels,
    placement: PolePlacement,
) -> Result<(FrequencyGrid, FrequencyGrid)> {
    if medium.linewidth_ev > 0.0 {
        return Ok((*grid_s, *grid_i));
    }
    let poles: Vec<f64> = medium.poles().collect();
    let n = grid_s.points;
    let w0 = grid_s.half_width_ev;
    let centers = [grid_s.center_ev, grid_i.center_ev];
    let rebuild = |w: f64| -> Result<(FrequencyGrid, FrequencyGrid)> {
        Ok((
            FrequencyGrid::new(grid_s.center_ev, w, n)?,
            FrequencyGrid::new(grid_i.center_ev, w, grid_i.points)?,
        ))
    };

    let w = match placement {
        PolePlacement::Midpoint => {
            // exact midpoint solutions for each (pole, grid, cell), plus w0
            let mut best = (placement_score(&centers, w0, n, &poles), w0);
            let w_max = 1.1 * w0;
            for &c in &centers {
                for &p in &poles {
                    for m in 0..n - 1 {
                        // p = c - w + (m + 1/2) 2w / (n - 1)
                        let denom = 1.0 - (2 * m + 1) as f64 / (n - 1) as f64;
                        if denom.abs() < 1e-15 {
                            continue;
                        }
                        let w = (c - p) / denom;
                        if !(w > w0 && w <= w_max) {
                            continue;
                        }
                        let s = placement_score(&centers, w, n, &poles);
                        if s > best.0 + 1e-12 || (s > best.0 - 1e-12 && w < best.1) {
                            best = (s, w);
                        }
                    }
                }
            }
            best.1
        }
        PolePlacement::Nudge => {
            let mut w = w0;
            for _ in 0..64 {
                let (gs, gi) = rebuild(w)?;
                if min_pole_distance(&[gs, gi], &poles) >= POLE_TOL_EV {
                    break;
                }
                w *= 1.0 + 1e-6;
            }
            w
        }
    };
    let (gs, gi) = rebuild(w)?;
    let dist = min_pole_distance(&[gs, gi], &poles);
    if dist < POLE_TOL_EV {
        return Err(VssError::config(format!(
            "could not move grid nodes off the medium poles (closest {dist:e} eV)"
        )));
    }
    Ok((gs, gi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn single(e: f64) -> MediumLevels {
        MediumLevels::new(0.0, 3.1, vec![Level { energy_ev: e, dipole: 1.0 }], 0.0).unwrap()
    }

    #[test]
    fn single_level_value() {
        let k = response(1.55, &single(1.575)).unwrap();
        assert_relative_eq!(k.re, 40.0, max_relative = 1e-12);
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn reference_levels_value() {
        let m = reference_medium();
        let k = response(1.55, &m).unwrap();
        let hand = 1.0 / 0.025 + 1.0 / 0.0375 + 1.0 / 0.0445;
        assert_relative_eq!(k.re, hand, max_relative = 1e-12);
        assert_relative_eq!(k.re, 89.1386, epsilon = 1e-4);
    }

    #[test]
    fn sign_change_across_pole() {
        let m = single(1.575);
        assert!(response(1.574, &m).unwrap().re > 0.0);
        assert!(response(1.576, &m).unwrap().re < 0.0);
    }

    #[test]
    fn pole_hit_is_reported() {
        let m = single(1.575);
        match response(1.575, &m) {
            Err(VssError::PoleProximity { level_ev, .. }) => assert_eq!(level_ev, 1.575),
            other => panic!("unexpected {other:?}"),
        }
        let lossy = MediumLevels { linewidth_ev: 1e-3, ..m };
        assert!(response(1.575, &lossy).is_ok());
    }

    #[test]
    fn reference_contents() {
        let m = reference_medium();
        assert_eq!(m.final_energy_ev, 3.1);
        assert_eq!(m.ground_energy_ev, 0.0);
        let energies: Vec<f64> = m.levels.iter().map(|l| l.energy_ev).collect();
        for (e, want) in energies.iter().zip([1.575, 1.5875, 1.5945]) {
            assert_relative_eq!(*e, want, max_relative = 1e-15);
        }
        for (d, want) in m.mismatch_energies().iter().zip([0.05, 0.075, 0.089]) {
            assert!((d - want).abs() < 1e-12);
        }
        assert!(m.levels.iter().all(|l| l.energy_ev > 0.0 && l.energy_ev < 3.1));
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn invalid_media_rejected() {
        assert!(MediumLevels::new(0.0, 0.0, vec![Level { energy_ev: 1.0, dipole: 1.0 }], 0.0).is_err());
        assert!(MediumLevels::new(0.0, 3.1, vec![], 0.0).is_err());
        assert!(MediumLevels::new(0.0, 3.1, vec![Level { energy_ev: 1.0, dipole: 1.0 }], -1.0).is_err());
        let outside = MediumLevels::new(0.0, 3.1, vec![Level { energy_ev: 4.0, dipole: 1.0 }], 0.0).unwrap();
        assert_eq!(outside.warnings().len(), 1);
    }

    #[test]
    fn random_medium_is_seeded() {
        let a = random_medium(3.1, 4, 0.02, 0.1, 7).unwrap();
        let b = random_medium(3.1, 4, 0.02, 0.1, 7).unwrap();
        let c = random_medium(3.1, 4, 0.02, 0.1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for m in a.mismatch_energies() {
            assert!((0.02..=0.1).contains(&(m + 1e-15)) || (m - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_placement_on_reference_levels() {
        let m = reference_medium();
        for (n, w, want) in [(1024, 0.12, 0.127875), (256, 0.06, 0.06375)] {
            let g = FrequencyGrid::new(1.55, w, n).unwrap();
            let (gs, gi) = place_grids(&g, &g, &m, PolePlacement::Midpoint).unwrap();
            assert_eq!(gs, gi);
            assert!((gs.half_width_ev - want).abs() < 1e-12, "n {n}: {}", gs.half_width_ev);
            let score = placement_score(&[1.55], gs.half_width_ev, n, &m.poles().collect::<Vec<_>>());
            assert!(score > 1.0 - 1e-9);
        }
    }

    #[test]
    fn nudge_moves_off_exact_hit() {
        // level exactly on a node of a 1024-point grid
        let g = FrequencyGrid::new(1.55, 0.12, 1024).unwrap();
        let m = single(g.energy(700));
        assert!(response_on_grid(&g, &m).is_err());
        let (gs, _) = place_grids(&g, &g, &m, PolePlacement::Nudge).unwrap();
        assert!(gs.half_width_ev > 0.12 && gs.half_width_ev < 0.12 * (1.0 + 1e-5));
        assert!(response_on_grid(&gs, &m).is_ok());

        // already clear: untouched
        let m = reference_medium();
        let (gs, _) = place_grids(&g, &g, &m, PolePlacement::Nudge).unwrap();
        assert_eq!(gs, g);
    }

    proptest! {
        #[test]
        fn linear_in_dipoles(c in -5.0f64..5.0, w in 1.0f64..2.0, gamma in 0.0f64..0.01) {
            let mut m = reference_medium();
            m.linewidth_ev = gamma;
            prop_assume!(m.poles().all(|p| (p - w).abs() > 1e-6));
            let base = response(w, &m).unwrap();
            let scaled = response(w, &m.scaled(c)).unwrap();
            prop_assert!((scaled - base * c).norm() <= 1e-12 * (base * c).norm().max(1e-300));
        }

        // 1 / (d - i gamma) = (d + i gamma) / (d^2 + gamma^2)
        #[test]
        fn imaginary_sign_with_linewidth(w in -10.0f64..10.0, gamma in 1e-6f64..0.1) {
            let mut m = reference_medium();
            m.linewidth_ev = gamma;
            prop_assert!(response(w, &m).unwrap().im > 0.0);
        }
    }

    #[test]
    fn vanishes_far_away() {
        let m = reference_medium();
        let bound_num: f64 = m.levels.iter().map(|l| l.dipole.abs()).sum();
        let emax = m.levels.iter().map(|l| l.energy_ev.abs()).fold(0.0, f64::max);
        for w in [1e6, -1e6] {
            let k = response(w, &m).unwrap();
            assert!(k.norm() < bound_num / (w.abs() - emax));
        }
    }
}
