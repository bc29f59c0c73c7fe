pub mod cli;
pub mod gf;
pub mod model;
pub mod netcode;
pub mod oracle;
pub mod ratealloc;
pub mod sfm;
pub mod validate;
