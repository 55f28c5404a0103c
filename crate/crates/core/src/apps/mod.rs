pub mod dpd;
pub mod io;
pub mod motion;
pub mod synth;
