pub mod eval;
pub mod report;
pub mod separate;
pub mod synth_mix;
pub mod train;
pub mod tune;
