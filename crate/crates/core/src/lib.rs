pub mod blockmat;
pub mod boggroup;
pub mod checks;
pub mod error;
pub mod fockoracle;
pub mod g1pdm;
pub mod hfbopt;
pub mod orbitgeo;
pub mod rng;
pub mod sympkahler;

pub use error::{Error, Result};
