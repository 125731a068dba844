#![allow(dead_code)]

pub mod gradcheck;
pub mod models;
pub mod oracle_nets;
pub mod primitives;
pub mod reference;
pub mod shaping;
