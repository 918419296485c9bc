//! Prints per-role drain rates and how long a full battery lasts.
//!
//! Run with `cargo run --example battery_model`.

use wfdgm::battery::{BatteryLoad, BatteryModelParams, BatteryState};

fn main() {
    let p = BatteryModelParams::default();
    println!(
        "{:<18} {:>10} {:>10} {:>12}",
        "load", "per hour", "after 3 h", "empty after"
    );
    let mut loads = vec![
        ("idle".to_string(), BatteryLoad::Idle),
        ("client".to_string(), BatteryLoad::Client),
    ];
    for n in [1, 2, 4, 8, 15] {
        loads.push((
            format!("owner, {n} clients"),
            BatteryLoad::Owner { clients: n },
        ));
    }
    for (name, load) in loads {
        let slope = p.slope_per_hour(load);
        println!(
            "{name:<18} {slope:>10.5} {:>10.4} {:>10.1} h",
            p.level_after(load, 3.0),
            -1.0 / slope
        );
    }

    // stepping one second at a time lands on the closed form
    let mut b = BatteryState::full();
    for _ in 0..5 * 3600 {
        b.update(BatteryLoad::Idle, 1.0, &p);
    }
    println!("idle for 5 h in 1 s steps: {:.12}", b.level());
}
