pub mod exterior;
pub mod numeric;
pub mod pfaffian;
pub mod structure;
pub mod symexpr;
pub mod systems;
