//! Sweeps per-UE demand for all four policies over a few seeds and prints
//! the mean energy per demand plus the optimized-offset saving.
//!
//! ```text
//! cargo run --release --example demand_sweep -- [num_seeds] [output_dir]
//! ```

use hetnet_range::experiment::{export, run_sweep, summarize, ExperimentSpec, ExportFormat, Policy};

fn main() -> hetnet_range::Result<()> {
    let mut args = std::env::args().skip(1);
    let num_seeds = args.next().map_or(3, |s| s.parse().expect("number of seeds"));
    let output = args.next();

    let spec = ExperimentSpec {
        num_seeds,
        ..ExperimentSpec::default()
    };
    let table = run_sweep(&spec)?;
    let summary = summarize(&table);

    print!("{:>8}", "kbps");
    for p in Policy::ALL {
        print!(" {:>14}", p.as_str());
    }
    println!(" {:>12}", "OO vs ZO");
    for d in &summary.per_demand {
        print!("{:>8}", d.demand / 1e3);
        for stat in &d.policies {
            match stat.mean_energy {
                Some(e) => print!(" {:>9.4} ({}/{})", e, stat.feasible_runs, stat.runs),
                None => print!(" {:>14}", format!("- (0/{})", stat.runs)),
            }
        }
        let saving = d
            .improvements
            .iter()
            .find(|i| i.policy == Policy::OO && i.baseline == Policy::ZO)
            .and_then(|i| i.mean_percent);
        println!(" {:>12}", saving.map_or("-".into(), |s| format!("{s:.1}%")));
    }
    if let Some(i) = summary.improvement(Policy::OO, Policy::ZO) {
        println!(
            "overall OO saving over ZO: {} over {} feasible pairs, {} seeds",
            i.mean_percent.map_or("-".into(), |s| format!("{s:.1}%")),
            i.pairs,
            summary.num_seeds
        );
    }

    if let Some(dir) = output {
        for path in export(&table, &dir, ExportFormat::Both)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
