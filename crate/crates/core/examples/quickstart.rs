//! Minimal library walkthrough: simulate exceedances under a delta-family
//! alternative and run both tests (mirrors the README sketch).

use gpptest::exceedance::simulate;
use gpptest::generator::InfLaw;
use gpptest::teststats::{omnibus_test, optimal_test_delta};
use gpptest::{RandomStream, TestSide, WFamily};

fn main() -> gpptest::Result<()> {
    let family = WFamily::Delta {
        delta: 1.0,
        u0: 0.5,
    };
    let law = InfLaw::new(vec![(1.0, 1.0)])?; // constant generator
    let model = family.model(1.5)?; // member at theta = 1.5
    let mut rng = RandomStream::substream(42, 0);
    let sample = simulate(100_000, -0.05, &model, &law, &mut rng)?;
    let optimal = optimal_test_delta(&sample, law.mean(), 1.0, 0.05, TestSide::Upper)?;
    let omnibus = omnibus_test(&sample, 0.05, TestSide::Upper)?;
    println!("optimal: {}, omnibus: {}", optimal.reject, omnibus.reject);
    Ok(())
}
