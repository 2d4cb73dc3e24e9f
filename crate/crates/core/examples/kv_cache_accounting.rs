//! Closed-form cache accounting next to a live cache fed by the toy decoder.

use streamsplat::harness::memory_report;
use streamsplat::streamformer::{token_set_count, ModelProfile};

fn main() -> streamsplat::Result<()> {
    println!("full-size layer structure:");
    print!(
        "{}",
        memory_report(&[64, 128, 256], &[4, 8], &ModelProfile::paper(0), false)?.to_text()
    );
    println!("\ntoy decoder, measured:");
    print!(
        "{}",
        memory_report(&[16, 24], &[4, 8], &ModelProfile::toy(0), true)?.to_text()
    );
    println!(
        "\ntoken sets at N=1000, n=8, 8 cached layers: {}",
        token_set_count(1000, 8, 8)?
    );
    Ok(())
}
