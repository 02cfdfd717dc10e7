//! Prints the oracle fixture computed by exhaustive enumeration.
//!
//! `cargo run -p prescurv-cli --example make_fixture > crates/cli/fixtures/oracle_4x4_seed42.csv`

use prescurv_core::PerimeterStencil;

fn main() {
    let s = PerimeterStencil::default_for(2);
    print!("{}", prescurv_cli::verify::oracle_fixture(42, 4, 24.0, &s).expect("enumeration"));
}
