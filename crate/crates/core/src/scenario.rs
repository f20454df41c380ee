//! Random user drops in a single cell.
//!
//! Users are placed uniformly by area in the annulus between the hole radius
//! `r_h` and the cell radius `R`, and receive
//! `beta_k = z_k / (r_k / r_h)^v` with log-normal shadowing
//! `10 log10(z_k) ~ N(0, sigma_shadow^2)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::ScenarioSpec;
use crate::error::Result;

/// Large-scale coefficient of a user at distance `r` with shadowing `shadow_db`.
pub fn large_scale_at(spec: &ScenarioSpec, r: f64, shadow_db: f64) -> f64 {
    let z = 10f64.powf(shadow_db / 10.0);
    z / (r / spec.hole_radius).powf(spec.path_loss_exp)
}

/// Radius with CDF `(r^2 - r_h^2) / (R^2 - r_h^2)` on `[r_h, R]`.
pub fn draw_radius<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let (rh2, rc2) = (spec.hole_radius.powi(2), spec.cell_radius.powi(2));
    (rh2 + u * (rc2 - rh2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDrop {
    pub radius: f64,
    pub shadow_db: f64,
    pub beta: f64,
}

/// Drops `spec.num_users` users and returns their placement.
pub fn drop_users_detailed<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Vec<UserDrop>> {
    spec.validate()?;
    Ok((0..spec.num_users)
        .map(|_| {
            let radius = draw_radius(spec, rng);
            let g: f64 = rng.sample(StandardNormal);
            let shadow_db = g * spec.shadow_std_db;
            UserDrop {
                radius,
                shadow_db,
                beta: large_scale_at(spec, radius, shadow_db),
            }
        })
        .collect())
}

/// Large-scale fading coefficients for one random drop.
pub fn drop_users<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Vec<f64>> {
    Ok(drop_users_detailed(spec, rng)?.into_iter().map(|u| u.beta).collect())
}
