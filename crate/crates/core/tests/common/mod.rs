#![allow(dead_code)]

use std::sync::Arc;

use kisin_models::coeff::CoeffRing;
use kisin_models::lattice::Lattice;
use kisin_models::models::enumerate_models;
use kisin_models::phi_module::{plant_with_rng, Planted};
use kisin_models::rng::instance_rng;
use kisin_models::tower::make_field_tower;

pub fn ring(p: u32, f: u32, n: usize) -> CoeffRing {
    CoeffRing::new(Arc::new(make_field_tower(p, f, f).unwrap()), n)
}

pub fn planted(r: &CoeffRing, d: usize, e: u32, seed: u64, i: u64) -> Planted {
    plant_with_rng(r, d, e, &mut instance_rng(seed, i))
}

/// Models of a few planted instances: a supply of varied lattices.
pub fn lattice_pool(r: &CoeffRing, d: usize, e: u32, seed: u64, instances: u64) -> Vec<Lattice> {
    let mut out = Vec::new();
    for i in 0..instances {
        let pl = planted(r, d, e, seed, i);
        if let Ok(set) = enumerate_models(&pl.module, e) {
            out.extend(set.lattices());
        }
    }
    out
}
