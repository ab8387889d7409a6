//! Green-Kubo transport coefficients from multiple-origin autocorrelation
//! functions of fluxes sampled every `n_ext` steps.

mod correlation;
mod flux;
mod residence;

pub use correlation::{
    electric_conductivity, self_diffusion, thermal_conductivity, AcfSummary, CorrelationSet, PlateauCheck,
    TransportResult, MIN_ORIGINS,
};
pub use flux::{electric_current, heat_flux, heat_flux_pure, species_velocities};
pub use residence::{OccupancyBitmap, ResidenceCorrelator, ResidenceResult, MAX_TOLERANCE};
