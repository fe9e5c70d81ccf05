//! Print the Mel-scaled pooling schedule and the scale anchors that
//! shape it.
//!
//! ```bash
//! cargo run -p melspike --example mel_schedule
//! ```

use melspike::pool::{build_schedule, mel};

fn main() -> melspike::Result<()> {
    for f in [0.0, 700.0, 1000.0, 1040.0, 4000.0] {
        println!("mel({f:6.0} Hz) = {:9.3}", mel(f)?);
    }
    let schedule = build_schedule();
    println!("\nindex start stride   (bins of 40 Hz)");
    for line in schedule.to_text().lines() {
        let parts: Vec<&str> = line.split(' ').collect();
        let start: usize = parts[1].parse().unwrap();
        let stride: usize = parts[2].parse().unwrap();
        println!(
            "{:>5} {:>5} {:>6}   {:4.0} - {:4.0} Hz",
            parts[0],
            start,
            stride,
            start as f64 * 40.0,
            (start + stride) as f64 * 40.0
        );
    }
    let strides = schedule.strides();
    println!(
        "\n{} windows, strides {}..{}, covering {} bins",
        strides.len(),
        strides.iter().min().unwrap(),
        strides.iter().max().unwrap(),
        strides.iter().sum::<usize>()
    );
    Ok(())
}
