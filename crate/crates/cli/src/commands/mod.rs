pub mod poly;
pub mod trace;
pub mod verify;
pub mod wishart;
