//! Regenerates the JSON fixtures under `fixtures/`. Run from the crate
//! root: `cargo run --example gen_fixtures`.

use std::collections::BTreeMap;
use std::fs;

use dn::config::{from_system, GridSpecFile, SectorSpec};
use dn::example::{example_system, ExampleParams};

fn main() {
    let eps = std::f64::consts::PI / 6.0;
    let sector = SectorSpec {
        theta_min: eps,
        theta_max: 2.0 * std::f64::consts::PI - eps,
    };
    let grid_1d = GridSpecFile {
        m: 16,
        l: 2.0 * std::f64::consts::PI,
    };
    let grid_2d = GridSpecFile {
        m: 16,
        l: 2.0 * std::f64::consts::PI,
    };
    let cases = [
        ("benchmark-1d-unperturbed.json", 1usize, 0.0, grid_1d),
        ("benchmark-1d-bump-moderate.json", 1, 0.5, grid_1d),
        ("benchmark-1d-bump-strong.json", 1, 2.0, grid_1d),
        ("benchmark-2d-bump-moderate.json", 2, 0.5, grid_2d),
    ];
    fs::create_dir_all("fixtures").unwrap();
    for (name, dim, amplitude, grid) in cases {
        let sys = example_system(&ExampleParams {
            dim,
            c: 1.0,
            bump_amplitude: amplitude,
            ..Default::default()
        })
        .unwrap();
        let file = from_system(&sys, sector, grid, BTreeMap::new());
        fs::write(format!("fixtures/{name}"), file.to_json() + "\n").unwrap();
        println!("wrote fixtures/{name}");
    }
}
