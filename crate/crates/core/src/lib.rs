pub mod minioo;
pub mod xform;
pub mod interp;
pub mod distrib;
