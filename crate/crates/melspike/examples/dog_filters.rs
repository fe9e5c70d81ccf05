//! Inspect the difference-of-Gaussians filter bank and the membrane
//! dynamics it drives.
//!
//! ```bash
//! cargo run -p melspike --example dog_filters
//! ```

use melspike::conv::{dog, lif_step, DogFilterBank, LifParams};

fn main() {
    let bank = DogFilterBank::build();
    println!("base kernel (x = -3..=3):");
    for x in -3..=3 {
        println!("  dog({x:2}) = {:+.7}", dog(x as f64));
    }
    println!("\nfilter taps (rows = filters, shifted centers):");
    for k in 0..bank.len() {
        let taps: Vec<String> = bank.filter(k).iter().map(|t| format!("{t:+.4}")).collect();
        println!("  k={k}: [{}]", taps.join(", "));
    }

    // drive one neuron with the strongest pattern the bank can see: a
    // 3-channel plateau aligned with the positive lobe
    let params = LifParams::conv_layer();
    let plateau_current = dog(-1.0) + dog(0.0) + dog(1.0);
    println!(
        "\nplateau current = {plateau_current:.4}, threshold = {}",
        params.threshold
    );
    let mut u = 0.0;
    print!("membrane: ");
    for t in 0..12 {
        let (next, spiked) = lif_step(u, plateau_current, &params);
        u = next;
        print!("{}{:.3} ", if spiked { "*" } else { "" }, u);
        let _ = t;
    }
    println!("\n(* = spike and reset)");
}
