//! Rank-one subshifts built from spacer parameter schedules.

pub mod dimgroup;
pub mod linalg;
pub mod measure;
pub mod morphisms;
pub mod params;
pub mod presets;
pub mod spectra;
pub mod towers;
pub mod words;
