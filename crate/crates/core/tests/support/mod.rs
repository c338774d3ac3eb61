#![allow(dead_code)]

pub mod expm;
pub mod gradcheck;
pub mod oracles;
