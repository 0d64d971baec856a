pub mod error;
pub mod fourcurve;
pub mod fourier;
pub mod geometry;
pub mod measure;
pub mod phasemap;
pub mod quadrature;
pub mod rigidity;
pub mod variational;
