//! Build admissible partitions, round-trip one through its text format and
//! show what the validator reports for a broken one.

use eigenchaos::partition::validate_partition;
use eigenchaos::{band_partition, entries_partition, sample_union, AdmissiblePartition, Result, SeedStream};

pub fn run() -> Result<()> {
    let entries = entries_partition(4)?;
    println!("entries partition of n=4: m = {}, ν = {}", entries.m(), entries.nu());

    let band = band_partition(7, 2)?;
    println!("band partition of n=7, width 2: m = {}, ν = {}", band.m(), band.nu());
    let text = band.to_text();
    let back = AdmissiblePartition::from_text(&text)?;
    println!("text round trip preserves blocks: {}", back == band);

    let mut rng = SeedStream::new(3, 0).rng();
    let a = sample_union(&band, 3, &mut rng)?;
    println!("random union of 3 blocks {:?} covers {} positions", a.blocks(), a.positions().len());

    let broken = vec![vec![(0, 0), (0, 1)], vec![(0, 1), (1, 0)]];
    match validate_partition(2, &broken) {
        Ok(()) => println!("unexpectedly valid"),
        Err(v) => println!("rejected: {v}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
