pub mod abp;
pub mod asd;
pub mod bits;
pub mod bp;
pub mod channel;
pub mod error;
pub mod gf;
pub mod gs;
pub mod harddec;
pub mod rscode;
pub mod selftest;
pub mod sim;

pub use error::{Error, Result};
